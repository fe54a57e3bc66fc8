//! Channel models, BPSK mapping and LLR computation.
//!
//! Every observation carries the per-symbol log-likelihoods `ln W(y_i|0)` and
//! `ln W(y_i|1)` besides the LLRs, together with the evidence term
//! `ln p(y^n) = Σ_i ln(½·(W(y_i|0) + W(y_i|1)))`. The evidence is the only
//! place where absolute densities enter the decoder; path metrics are
//! relative to it.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::decode::kernels::{log_add_exp, softplus};
use crate::error::{invalid, Result};

const LN_2: f64 = std::f64::consts::LN_2;

/// A channel output summarised by its likelihoods.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelObservation {
    llrs: Vec<f64>,
    log_likelihoods: Vec<[f64; 2]>,
    evidence_log: f64,
    erasures: Option<Vec<bool>>,
}

impl ChannelObservation {
    /// Builds an observation from per-symbol `[ln W(y|0), ln W(y|1)]` pairs.
    /// Entries may be `-inf` (impossible outputs) but not both in one pair.
    pub fn from_log_likelihoods(log_likelihoods: Vec<[f64; 2]>) -> Result<Self> {
        let mut evidence_log = 0.0;
        let mut llrs = Vec::with_capacity(log_likelihoods.len());
        for (i, &[l0, l1]) in log_likelihoods.iter().enumerate() {
            if l0.is_nan() || l1.is_nan() || l0 == f64::INFINITY || l1 == f64::INFINITY {
                return invalid(format!("log-likelihood pair {i} is not a valid log density"));
            }
            if l0 == f64::NEG_INFINITY && l1 == f64::NEG_INFINITY {
                return invalid(format!("output {i} is impossible under both inputs"));
            }
            evidence_log += log_add_exp(l0, l1) - LN_2;
            llrs.push(llr_of(l0, l1));
        }
        Ok(Self { llrs, log_likelihoods, evidence_log, erasures: None })
    }

    /// Builds an observation from LLRs alone, using the normalised channel
    /// `W(y_i|0) + W(y_i|1) = 1`. Absolute metrics then differ from the true
    /// ones by a constant per frame, which leaves the threshold test
    /// unchanged.
    pub fn from_llrs(llrs: &[f64]) -> Result<Self> {
        let pairs = llrs
            .iter()
            .enumerate()
            .map(
                |(i, &l)| {
                    if l.is_nan() {
                        invalid(format!("LLR {i} is NaN"))
                    } else {
                        Ok([-softplus(-l), -softplus(l)])
                    }
                },
            )
            .collect::<Result<Vec<_>>>()?;
        let mut obs = Self::from_log_likelihoods(pairs)?;
        obs.llrs = llrs.to_vec();
        Ok(obs)
    }

    pub fn n(&self) -> usize {
        self.llrs.len()
    }

    /// `ℓ_i = ln W(y_i|0)/W(y_i|1)`; `±inf` for unerased BEC symbols.
    pub fn llrs(&self) -> &[f64] {
        &self.llrs
    }

    pub fn log_likelihoods(&self) -> &[[f64; 2]] {
        &self.log_likelihoods
    }

    /// `ln p(y^n)` under uniform, independent inputs.
    pub fn evidence_log(&self) -> f64 {
        self.evidence_log
    }

    /// Erasure flags, for BEC observations.
    pub fn erasures(&self) -> Option<&[bool]> {
        self.erasures.as_deref()
    }

    /// `ln W^n(y^n | x^n)` straight from the channel likelihoods.
    pub fn log_likelihood(&self, x: &[u8]) -> f64 {
        debug_assert_eq!(x.len(), self.n());
        self.log_likelihoods.iter().zip(x).map(|(l, &b)| l[b as usize]).sum()
    }
}

fn llr_of(l0: f64, l1: f64) -> f64 {
    match (l0 == f64::NEG_INFINITY, l1 == f64::NEG_INFINITY) {
        (true, _) => f64::NEG_INFINITY,
        (_, true) => f64::INFINITY,
        _ => l0 - l1,
    }
}

/// Bit 0 maps to +1, bit 1 to −1.
pub fn bpsk_modulate(x: &[u8]) -> Vec<f64> {
    x.iter().map(|&b| if b == 0 { 1.0 } else { -1.0 }).collect()
}

/// Transmits `x` over a biAWGN channel with noise standard deviation `sigma`.
pub fn biawgn_observe<R: Rng + ?Sized>(x: &[u8], sigma: f64, rng: &mut R) -> Result<ChannelObservation> {
    if !sigma.is_finite() || sigma <= 0.0 {
        return invalid(format!("noise standard deviation {sigma} must be positive"));
    }
    let received: Vec<f64> =
        bpsk_modulate(x).into_iter().map(|s| s + sigma * rng.sample::<f64, _>(StandardNormal)).collect();
    Ok(biawgn_from_received(&received, sigma))
}

/// Observation for given biAWGN channel outputs.
pub fn biawgn_from_received(received: &[f64], sigma: f64) -> ChannelObservation {
    let var2 = 2.0 * sigma * sigma;
    let norm = (sigma * (2.0 * std::f64::consts::PI).sqrt()).ln();
    let log_likelihoods: Vec<[f64; 2]> =
        received.iter().map(|&y| [-(y - 1.0).powi(2) / var2 - norm, -(y + 1.0).powi(2) / var2 - norm]).collect();
    let evidence_log = log_likelihoods.iter().map(|&[l0, l1]| log_add_exp(l0, l1) - LN_2).sum();
    let llrs = received.iter().map(|&y| 2.0 * y / (sigma * sigma)).collect();
    ChannelObservation { llrs, log_likelihoods, evidence_log, erasures: None }
}

/// Transmits `x` over a BEC(ε). Unerased symbols have infinite LLRs.
pub fn bec_observe<R: Rng + ?Sized>(x: &[u8], epsilon: f64, rng: &mut R) -> Result<ChannelObservation> {
    if !(0.0..=1.0).contains(&epsilon) {
        return invalid(format!("erasure probability {epsilon} outside [0, 1]"));
    }
    let erased: Vec<bool> = x.iter().map(|_| rng.random::<f64>() < epsilon).collect();
    Ok(bec_from_erasures(x, &erased, epsilon))
}

/// Observation for a given erasure pattern on a BEC(ε).
pub fn bec_from_erasures(x: &[u8], erased: &[bool], epsilon: f64) -> ChannelObservation {
    let (le, lk) = (epsilon.ln(), (1.0 - epsilon).ln());
    let mut log_likelihoods = Vec::with_capacity(x.len());
    let mut llrs = Vec::with_capacity(x.len());
    let mut evidence_log = 0.0;
    for (&b, &e) in x.iter().zip(erased) {
        if e {
            log_likelihoods.push([le, le]);
            llrs.push(0.0);
            evidence_log += le;
        } else {
            let mut pair = [f64::NEG_INFINITY; 2];
            pair[b as usize] = lk;
            log_likelihoods.push(pair);
            llrs.push(if b == 0 { f64::INFINITY } else { f64::NEG_INFINITY });
            evidence_log += lk - LN_2;
        }
    }
    ChannelObservation { llrs, log_likelihoods, evidence_log, erasures: Some(erased.to_vec()) }
}

/// σ for a given `E_b/N_0` in dB and code rate, from `E_b/N_0 = 1/(2Rσ²)`.
pub fn snr_to_sigma(eb_n0_db: f64, rate: f64) -> Result<f64> {
    if !(rate > 0.0 && rate <= 1.0) {
        return invalid(format!("rate {rate} outside (0, 1]"));
    }
    if !eb_n0_db.is_finite() {
        return invalid(format!("Eb/N0 {eb_n0_db} dB is not finite"));
    }
    Ok((1.0 / (2.0 * rate * 10f64.powf(eb_n0_db / 10.0))).sqrt())
}

pub fn sigma_to_snr_db(sigma: f64, rate: f64) -> f64 {
    10.0 * (1.0 / (2.0 * rate * sigma * sigma)).log10()
}

/// An operating point of the biAWGN channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrPoint {
    pub eb_n0_db: f64,
    pub sigma: f64,
    pub rate: f64,
}

impl SnrPoint {
    pub fn new(eb_n0_db: f64, rate: f64) -> Result<Self> {
        Ok(Self { eb_n0_db, sigma: snr_to_sigma(eb_n0_db, rate)?, rate })
    }
}

/// A memoryless binary-input channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Channel {
    Biawgn { sigma: f64 },
    Bec { epsilon: f64 },
}

impl Channel {
    pub fn observe<R: Rng + ?Sized>(&self, x: &[u8], rng: &mut R) -> Result<ChannelObservation> {
        match *self {
            Channel::Biawgn { sigma } => biawgn_observe(x, sigma, rng),
            Channel::Bec { epsilon } => bec_observe(x, epsilon, rng),
        }
    }
}
