//! Forney's threshold test in its Bayesian form.
//!
//! A decision `x̂` is accepted when
//! `W^n(y|x̂) / P_Y(y) ≥ 2^k · 2^{nT} / (1 + 2^{nT})`,
//! where `P_Y` is the output density induced by a uniformly chosen
//! codeword. `T = −inf` accepts everything.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;

use super::kernels::softplus;
use crate::error::{invalid, Error, Result};
use crate::polar::PolarCode;

const LN_2: f64 = std::f64::consts::LN_2;

/// Threshold parameter `T ∈ [−inf, +inf)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Threshold(f64);

impl Threshold {
    pub const NEG_INFINITY: Threshold = Threshold(f64::NEG_INFINITY);

    pub fn new(t: f64) -> Result<Self> {
        if t.is_nan() || t == f64::INFINITY {
            return invalid(format!("threshold {t} must be finite or -inf"));
        }
        Ok(Self(t))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_neg_infinity(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }
}

impl FromStr for Threshold {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "neg-inf" | "-inf" | "-infinity" => Ok(Self::NEG_INFINITY),
            other => match other.parse::<f64>() {
                Ok(t) => Self::new(t),
                Err(_) => invalid(format!("cannot parse threshold {other:?}")),
            },
        }
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_neg_infinity() {
            f.write_str("-inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for Threshold {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_neg_infinity() {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Threshold {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        let parsed = match Raw::deserialize(d)? {
            Raw::Number(t) => Threshold::new(t),
            Raw::Text(s) => s.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

/// `ln(2^k · 2^{nT} / (1 + 2^{nT}))`, evaluated as
/// `k·ln2 − ln(1 + 2^{−nT})` so it never overflows.
pub fn threshold_log(n: usize, k: usize, t: Threshold) -> f64 {
    if t.is_neg_infinity() {
        return f64::NEG_INFINITY;
    }
    k as f64 * LN_2 - softplus(-(n as f64) * t.value() * LN_2)
}

/// Outcome of the threshold test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForneyDecision {
    pub accepted: bool,
    pub threshold_log: f64,
}

pub fn forney_test(log_w_best: f64, log_p_y: f64, code: &PolarCode, t: Threshold) -> ForneyDecision {
    let threshold_log = threshold_log(code.n(), code.k(), t);
    let accepted = t.is_neg_infinity() || log_w_best - log_p_y >= threshold_log;
    ForneyDecision { accepted, threshold_log }
}
