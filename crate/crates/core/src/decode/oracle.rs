//! Brute-force references over the whole codebook, for small codes.

use super::forney::{threshold_log, Threshold};
use super::kernels::log_sum_exp;
use crate::channels::ChannelObservation;
use crate::error::{Error, Result};
use crate::polar::{enumerate_codebook, PolarCode};

const LN_2: f64 = std::f64::consts::LN_2;

/// Largest dimension the oracles will enumerate.
pub const ORACLE_MAX_K: usize = 16;

/// Which form of Forney's rule to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForneyMode {
    /// Every codeword whose likelihood beats the rest of the codebook by
    /// `2^{nT}`; may return several codewords when `T ≤ 0`.
    Original,
    /// Test only the ML codeword; unique, possibly incomplete decoding.
    Remark1,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ForneyOracleOutcome {
    List(Vec<Vec<u8>>),
    Unique {
        decision: Vec<u8>,
        accepted: bool,
        /// `ln W(x̂) − ln Σ_{x≠x̂} W(x) − nT·ln2`.
        sum_excluding_margin: f64,
        /// `ln W(x̂) − ln P_Y − ln(2^k·2^{nT}/(1+2^{nT}))`.
        bayes_margin: f64,
    },
}

/// The enumerated codebook of a small code.
#[derive(Debug, Clone)]
pub struct CodebookOracle {
    code: PolarCode,
    words: Vec<Vec<u8>>,
}

impl CodebookOracle {
    pub fn new(code: &PolarCode) -> Result<Self> {
        if code.k() > ORACLE_MAX_K {
            return Err(Error::Capacity(format!("oracles are limited to k <= {ORACLE_MAX_K}")));
        }
        Ok(Self { code: code.clone(), words: enumerate_codebook(code)?.collect() })
    }

    pub fn codewords(&self) -> &[Vec<u8>] {
        &self.words
    }

    fn log_likelihoods(&self, obs: &ChannelObservation) -> Vec<f64> {
        self.words.iter().map(|x| obs.log_likelihood(x)).collect()
    }

    fn ml_index(&self, logs: &[f64]) -> usize {
        let mut best = 0;
        for j in 1..logs.len() {
            if logs[j] > logs[best] || (logs[j] == logs[best] && self.words[j] < self.words[best]) {
                best = j;
            }
        }
        best
    }

    /// ML codeword; ties go to the lexicographically smallest codeword.
    pub fn ml(&self, obs: &ChannelObservation) -> Vec<u8> {
        let logs = self.log_likelihoods(obs);
        self.words[self.ml_index(&logs)].clone()
    }

    /// `ln P_Y(y) = ln Σ_{x∈C} W^n(y|x) − k·ln2`.
    pub fn output_dist(&self, obs: &ChannelObservation) -> f64 {
        log_sum_exp(&self.log_likelihoods(obs)) - self.code.k() as f64 * LN_2
    }

    pub fn forney(&self, obs: &ChannelObservation, t: Threshold, mode: ForneyMode) -> ForneyOracleOutcome {
        let logs = self.log_likelihoods(obs);
        let others = log_sum_excluding(&logs);
        let n = self.code.n() as f64;
        let passes = |j: usize| t.is_neg_infinity() || logs[j] - others[j] >= n * t.value() * LN_2;
        match mode {
            ForneyMode::Original => ForneyOracleOutcome::List(
                (0..logs.len()).filter(|&j| passes(j)).map(|j| self.words[j].clone()).collect(),
            ),
            ForneyMode::Remark1 => {
                let j = self.ml_index(&logs);
                let (sum_excluding_margin, bayes_margin) = if t.is_neg_infinity() {
                    (f64::INFINITY, f64::INFINITY)
                } else {
                    let log_p_y = log_sum_exp(&logs) - self.code.k() as f64 * LN_2;
                    (
                        logs[j] - others[j] - n * t.value() * LN_2,
                        logs[j] - log_p_y - threshold_log(self.code.n(), self.code.k(), t),
                    )
                };
                ForneyOracleOutcome::Unique {
                    decision: self.words[j].clone(),
                    accepted: passes(j),
                    sum_excluding_margin,
                    bayes_margin,
                }
            }
        }
    }
}

/// `ln Σ_{i≠j} e^{v_i}` for every `j`, from prefix and suffix sums.
fn log_sum_excluding(values: &[f64]) -> Vec<f64> {
    use super::kernels::log_add_exp;
    let len = values.len();
    let mut prefix = vec![f64::NEG_INFINITY; len + 1];
    let mut suffix = vec![f64::NEG_INFINITY; len + 1];
    for i in 0..len {
        prefix[i + 1] = log_add_exp(prefix[i], values[i]);
        suffix[len - 1 - i] = log_add_exp(suffix[len - i], values[len - 1 - i]);
    }
    (0..len).map(|j| log_add_exp(prefix[j], suffix[j + 1])).collect()
}

pub fn oracle_ml(obs: &ChannelObservation, code: &PolarCode) -> Result<Vec<u8>> {
    Ok(CodebookOracle::new(code)?.ml(obs))
}

pub fn oracle_output_dist(obs: &ChannelObservation, code: &PolarCode) -> Result<f64> {
    Ok(CodebookOracle::new(code)?.output_dist(obs))
}

pub fn oracle_forney(
    obs: &ChannelObservation,
    code: &PolarCode,
    t: Threshold,
    mode: ForneyMode,
) -> Result<ForneyOracleOutcome> {
    Ok(CodebookOracle::new(code)?.forney(obs, t, mode))
}
