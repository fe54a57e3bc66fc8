//! Generalized SCL decoding: list decoding with `L ≥ 2^γ` followed by the
//! threshold test.
//!
//! # Absolute probabilities from relative path metrics
//!
//! The synthetic channel of position `i` is
//! `W^{(i)}(y, u^{i−1} | u_i) = Σ_{u_{i+1}^n} 2^{−(n−1)} W^n(y | u·G_n)`.
//! With `u` uniform on `F_2^n`, `P(y, u^i) = ½ W^{(i)}(y, u^{i−1} | u_i)`, and
//! since `G_n` is a bijection the output density is the product
//! `p(y) = Π_j ½(W(y_j|0) + W(y_j|1))`. The path metric is
//! `pm = −ln P(u^i | y)`, hence
//!
//! `W^{(i)}(y, u^{i−1} | u_i) = 2·p(y)·e^{−pm}`.
//!
//! Summing over the `2^γ` paths alive after the last frozen bit `u_s`, each
//! of which indexes one block of the codebook partition, gives
//!
//! `P_Y(y) = 2^{n−k−1} Σ_l W^{(s)}_l = 2^{n−k}·p(y)·Σ_l e^{−pm_l}`,
//!
//! so `ln P_Y = (n−k)·ln2 + ln p(y) + logsumexp_l(−pm_l)` at `O(L)` extra
//! cost per frame. With an empty frozen set (`s = 0`) the sum has the single
//! empty path with `pm = 0` and `P_Y = p(y)`.

use super::forney::{forney_test, Threshold};
use super::kernels::log_sum_exp;
use super::scl::{DecoderPath, SclDecoder};
use crate::channels::ChannelObservation;
use crate::error::{Error, Result};
use crate::polar::{polar_transform_in_place, PolarCode};

const LN_2: f64 = std::f64::consts::LN_2;

/// `ln P_Y(y)` from the metrics of the paths alive after `u_s`.
pub fn output_logprob_from_metrics(pms: &[f64], obs: &ChannelObservation, code: &PolarCode) -> f64 {
    let neg: Vec<f64> = pms.iter().map(|pm| -pm).collect();
    (code.n() - code.k()) as f64 * LN_2 + obs.evidence_log() + log_sum_exp(&neg)
}

/// Codebook-induced output log-density from the full list at `u_s`.
pub fn codebook_output_logprob(paths_at_s: &[DecoderPath], obs: &ChannelObservation, code: &PolarCode) -> Result<f64> {
    let expected = code.list_size_ml();
    if expected != Some(paths_at_s.len()) {
        return Err(Error::Contract(format!(
            "{} paths given, the partition has 2^{} blocks",
            paths_at_s.len(),
            code.mixing_factor()
        )));
    }
    let pms: Vec<f64> = paths_at_s.iter().map(|p| p.pm).collect();
    Ok(output_logprob_from_metrics(&pms, obs, code))
}

/// Decoder metrics, independent of the threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct GsclMetrics {
    /// `û^n` of the best path.
    pub input: Vec<u8>,
    /// `x̂^n = û^n·G_n`.
    pub codeword: Vec<u8>,
    /// `ln W^n(y | x̂)`, from the channel likelihoods.
    pub log_w_best: f64,
    /// `ln P_Y(y)`.
    pub log_p_y: f64,
}

/// Decision plus diagnostics of one GSCL decode.
#[derive(Debug, Clone, PartialEq)]
pub struct GsclOutcome {
    pub metrics: GsclMetrics,
    pub threshold_log: f64,
    pub accepted: bool,
    /// The list at `u_s`, when requested.
    pub list_dump: Option<Vec<DecoderPath>>,
}

impl GsclOutcome {
    /// The accepted codeword, or `None` for an erasure.
    pub fn decision(&self) -> Option<&[u8]> {
        self.accepted.then_some(self.metrics.codeword.as_slice())
    }

    pub fn is_erasure(&self) -> bool {
        !self.accepted
    }
}

impl GsclMetrics {
    pub fn test(&self, code: &PolarCode, t: Threshold) -> (bool, f64) {
        let d = forney_test(self.log_w_best, self.log_p_y, code, t);
        (d.accepted, d.threshold_log)
    }
}

/// Reusable GSCL decoder. Not shareable during a call; create one per
/// worker.
#[derive(Debug, Clone)]
pub struct GsclDecoder {
    code: PolarCode,
    scl: SclDecoder,
}

impl GsclDecoder {
    /// Decoder with the list size `2^γ`.
    pub fn new(code: &PolarCode) -> Result<Self> {
        let list = code
            .list_size_ml()
            .ok_or_else(|| Error::Capacity(format!("list size 2^{} does not fit", code.mixing_factor())))?;
        Self::with_list_size(code, list)
    }

    /// Decoder with a larger list. Anything below `2^γ` would drop blocks of
    /// the partition before `u_s` and is rejected.
    pub fn with_list_size(code: &PolarCode, list_size: usize) -> Result<Self> {
        match code.list_size_ml() {
            Some(min) if list_size >= min => {}
            _ => {
                return Err(Error::Contract(format!(
                    "list size {list_size} is below 2^{} = {:?}",
                    code.mixing_factor(),
                    code.list_size_ml()
                )))
            }
        }
        Ok(Self { code: code.clone(), scl: SclDecoder::new(code, list_size)? })
    }

    pub fn code(&self) -> &PolarCode {
        &self.code
    }

    pub fn list_size(&self) -> usize {
        self.scl.list_size()
    }

    pub fn decode_metrics(&mut self, obs: &ChannelObservation) -> Result<GsclMetrics> {
        Ok(self.decode_inner(obs, false)?.0)
    }

    pub fn decode(&mut self, obs: &ChannelObservation, t: Threshold) -> Result<GsclOutcome> {
        self.finish(obs, t, false)
    }

    /// As [`GsclDecoder::decode`], keeping the list at `u_s`.
    pub fn decode_with_dump(&mut self, obs: &ChannelObservation, t: Threshold) -> Result<GsclOutcome> {
        self.finish(obs, t, true)
    }

    fn finish(&mut self, obs: &ChannelObservation, t: Threshold, dump: bool) -> Result<GsclOutcome> {
        let (metrics, list_dump) = self.decode_inner(obs, dump)?;
        let (accepted, threshold_log) = metrics.test(&self.code, t);
        Ok(GsclOutcome { metrics, threshold_log, accepted, list_dump })
    }

    fn decode_inner(
        &mut self,
        obs: &ChannelObservation,
        dump: bool,
    ) -> Result<(GsclMetrics, Option<Vec<DecoderPath>>)> {
        let run = self.scl.run(obs)?;
        let expected = self.code.list_size_ml();
        if run.pruned_before_last_frozen || Some(run.snapshot_pms.len()) != expected {
            return Err(Error::Contract(format!(
                "{} paths at the last frozen bit, expected {:?}",
                run.snapshot_pms.len(),
                expected
            )));
        }
        let log_p_y = output_logprob_from_metrics(&run.snapshot_pms, obs, &self.code);
        let input = self.scl.decisions(self.code.n(), run.best);
        let mut codeword = input.clone();
        polar_transform_in_place(&mut codeword);
        let log_w_best = obs.log_likelihood(&codeword);
        let list_dump = dump.then(|| {
            let s = self.code.last_frozen();
            run.snapshot_pms
                .iter()
                .enumerate()
                .map(|(j, &pm)| DecoderPath { decisions: self.scl.decisions(s, j), pm })
                .collect()
        });
        Ok((GsclMetrics { input, codeword, log_w_best, log_p_y }, list_dump))
    }
}

/// One-shot GSCL decode with `L = 2^γ`.
pub fn gscl_decode(obs: &ChannelObservation, code: &PolarCode, t: Threshold) -> Result<GsclOutcome> {
    GsclDecoder::new(code)?.decode(obs, t)
}
