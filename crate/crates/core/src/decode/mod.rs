//! SC, SCL and GSCL decoders, the threshold test and brute-force oracles.
//!
//! Path metrics are exact negative log-posteriors; check nodes use the exact
//! `2·atanh(tanh·tanh)` rule, never min-sum.

pub mod forney;
pub mod gscl;
pub mod kernels;
pub mod oracle;
pub mod sc;
pub mod scl;

pub use forney::{forney_test, threshold_log, ForneyDecision, Threshold};
pub use gscl::{codebook_output_logprob, gscl_decode, GsclDecoder, GsclMetrics, GsclOutcome};
pub use oracle::{oracle_forney, oracle_ml, oracle_output_dist, CodebookOracle, ForneyMode, ForneyOracleOutcome};
pub use sc::{decision_llrs, path_metric_from_scratch, sc_decode};
pub use scl::{scl_decode, DecoderPath, SclDecoder, SclOutput};

use serde::{Deserialize, Serialize};

/// How a decoded frame compares with what was sent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ErrorClass {
    Correct,
    Erasure,
    Undetected,
}

/// Erasure when the test rejected the decision; otherwise correct iff the
/// decision equals the transmitted codeword.
pub fn classify(transmitted: &[u8], outcome: &GsclOutcome) -> ErrorClass {
    classify_decision(transmitted, &outcome.metrics.codeword, outcome.accepted)
}

pub fn classify_decision(transmitted: &[u8], decision: &[u8], accepted: bool) -> ErrorClass {
    if !accepted {
        ErrorClass::Erasure
    } else if decision == transmitted {
        ErrorClass::Correct
    } else {
        ErrorClass::Undetected
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcome(codeword: Vec<u8>, accepted: bool) -> GsclOutcome {
        GsclOutcome {
            metrics: GsclMetrics { input: codeword.clone(), codeword, log_w_best: 0.0, log_p_y: 0.0 },
            threshold_log: 0.0,
            accepted,
            list_dump: None,
        }
    }

    #[test]
    fn classify_examples() {
        let sent = vec![0, 1, 1, 0];
        assert_eq!(classify(&sent, &outcome(sent.clone(), true)), ErrorClass::Correct);
        assert_eq!(classify(&sent, &outcome(sent.clone(), false)), ErrorClass::Erasure);
        assert_eq!(classify(&sent, &outcome(vec![1, 1, 1, 1], false)), ErrorClass::Erasure);
        assert_eq!(classify(&sent, &outcome(vec![0, 1, 1, 1], true)), ErrorClass::Undetected);
    }
}
