//! Synthetic-channel reliabilities and frozen-set selection.
//!
//! Reliabilities are evaluated in the same index convention as the
//! transform: the most significant bit of a 0-based index selects the branch
//! taken at the channel side of the butterfly, with 0 the check (minus)
//! branch.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::polar::PolarCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MetricKind {
    /// Mean LLR under the Gaussian approximation; larger is more reliable.
    #[serde(rename = "gaussian-approximation-mean-llr")]
    GaussianApproximation,
    /// Erasure probability on the BEC; smaller is more reliable.
    #[serde(rename = "bec-erasure-probability")]
    BecErasure,
}

impl MetricKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::GaussianApproximation => "gaussian-approximation-mean-llr",
            MetricKind::BecErasure => "bec-erasure-probability",
        }
    }
}

/// Per-index reliability scores for one design point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityProfile {
    pub n: usize,
    pub metric_kind: MetricKind,
    pub values: Vec<f64>,
    /// σ for the Gaussian approximation, ε for the BEC.
    pub design_param: f64,
}

impl ReliabilityProfile {
    /// 0-based indices ordered from least to most reliable; equal scores put
    /// the smaller index first, so it is frozen first.
    pub fn least_reliable_first(&self, window: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..window.min(self.n)).collect();
        let unreliability = |i: usize| match self.metric_kind {
            MetricKind::BecErasure => self.values[i],
            MetricKind::GaussianApproximation => -self.values[i],
        };
        idx.sort_by(|&a, &b| unreliability(b).total_cmp(&unreliability(a)).then(a.cmp(&b)));
        idx
    }
}

fn polarize(n: usize, init: f64, minus: impl Fn(f64) -> f64, plus: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
    if n == 0 || !n.is_power_of_two() {
        return invalid(format!("block length {n} is not a power of two"));
    }
    let mut values = vec![init];
    while values.len() < n {
        values = values.iter().flat_map(|&v| [minus(v), plus(v)]).collect();
    }
    Ok(values)
}

/// Exact erasure probabilities of the synthetic channels of a BEC(ε).
pub fn bec_reliabilities(epsilon: f64, n: usize) -> Result<ReliabilityProfile> {
    if !(0.0..=1.0).contains(&epsilon) {
        return invalid(format!("erasure probability {epsilon} outside [0, 1]"));
    }
    let values = polarize(n, epsilon, |z| 2.0 * z - z * z, |z| z * z)?;
    Ok(ReliabilityProfile { n, metric_kind: MetricKind::BecErasure, values, design_param: epsilon })
}

// Two-piece approximation of φ(x) = 1 − E[tanh(L/2)], L ~ N(x, 2x):
//   φ(x) = exp(−0.4527·x^0.86 + 0.0218)                 for x < 10
//   φ(x) = sqrt(π/x)·exp(−x/4)·(1 − 10/(7x))           for x ≥ 10
// clamped to φ ≤ 1. Evaluated in the log domain so large means never
// underflow.
const PHI_A: f64 = 0.4527;
const PHI_B: f64 = 0.86;
const PHI_C: f64 = 0.0218;
const PHI_SPLIT: f64 = 10.0;

/// `ln φ(x)` for the Gaussian-approximation transfer function.
pub fn ga_log_phi(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let v = if x < PHI_SPLIT {
        -PHI_A * x.powf(PHI_B) + PHI_C
    } else {
        0.5 * (std::f64::consts::PI / x).ln() - x / 4.0 + (1.0 - 10.0 / (7.0 * x)).ln()
    };
    v.min(0.0)
}

pub fn ga_phi(x: f64) -> f64 {
    ga_log_phi(x).exp()
}

/// Inverse of [`ga_phi`] given `ln y`, by bisection to relative tolerance
/// 1e-9. The two pieces do not join continuously at x = 10, so targets in
/// that small gap resolve to the split point.
pub fn ga_phi_inv_log(log_y: f64) -> f64 {
    if log_y >= 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while ga_log_phi(hi) > log_y {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > 1e-9 * hi.max(1e-12) {
        let mid = 0.5 * (lo + hi);
        if ga_log_phi(mid) > log_y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Mean LLR of the check-node combination of two N(μ, 2μ) inputs.
pub fn ga_minus(mu: f64) -> f64 {
    // 1 − (1 − φ)² = φ·(2 − φ), kept in the log domain.
    let lp = ga_log_phi(mu);
    ga_phi_inv_log(lp + (2.0 - lp.exp()).ln())
}

/// Mean-LLR profile under the Gaussian approximation of density evolution
/// for a biAWGN channel with noise standard deviation `sigma`.
pub fn ga_reliabilities(sigma: f64, n: usize) -> Result<ReliabilityProfile> {
    if !sigma.is_finite() || sigma <= 0.0 {
        return invalid(format!("noise standard deviation {sigma} must be positive"));
    }
    let values = polarize(n, 2.0 / (sigma * sigma), ga_minus, |mu| 2.0 * mu)?;
    Ok(ReliabilityProfile { n, metric_kind: MetricKind::GaussianApproximation, values, design_param: sigma })
}

fn freeze_within(n: usize, k: usize, window: usize, profile: &ReliabilityProfile) -> Result<PolarCode> {
    if profile.n != n {
        return invalid(format!("profile has length {}, code has length {n}", profile.n));
    }
    if k > n {
        return invalid(format!("k = {k} exceeds n = {n}"));
    }
    let frozen = profile.least_reliable_first(window).into_iter().take(n - k).map(|i| i + 1);
    PolarCode::new(n, frozen)
}

/// Freezes the `n − k` least reliable indices of the whole block.
pub fn construct_unconstrained(n: usize, k: usize, profile: &ReliabilityProfile) -> Result<PolarCode> {
    freeze_within(n, k, n, profile)
}

/// Freezes the `n − k` least reliable indices among the first
/// `n − k + γ*`, which bounds the mixing factor by `γ*`.
pub fn construct_constrained(n: usize, k: usize, gamma_star: usize, profile: &ReliabilityProfile) -> Result<PolarCode> {
    if k > n {
        return invalid(format!("k = {k} exceeds n = {n}"));
    }
    if gamma_star > k {
        return invalid(format!("gamma* = {gamma_star} exceeds k = {k}"));
    }
    freeze_within(n, k, n - k + gamma_star, profile)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bec_examples() {
        assert_eq!(bec_reliabilities(0.5, 2).unwrap().values, vec![0.75, 0.25]);
        assert_eq!(bec_reliabilities(0.5, 4).unwrap().values, vec![0.9375, 0.5625, 0.4375, 0.0625]);
        assert!(bec_reliabilities(0.0, 16).unwrap().values.iter().all(|&z| z == 0.0));
        assert!(bec_reliabilities(1.5, 4).is_err());
        assert!(bec_reliabilities(-0.1, 4).is_err());
        assert!(bec_reliabilities(0.5, 3).is_err());
    }

    #[test]
    fn ga_two_point_examples() {
        // 2/σ² = 4
        let sigma = 0.5f64.sqrt();
        let p = ga_reliabilities(sigma, 2).unwrap();
        assert!((p.values[1] - 8.0).abs() < 1e-12);
        assert!(p.values[0] < 4.0 && 4.0 < p.values[1]);
        assert!(ga_reliabilities(0.0, 2).is_err());
        assert!(ga_reliabilities(-1.0, 2).is_err());
    }

    #[test]
    fn phi_inverse_round_trips() {
        for &x in &[0.05, 0.5, 1.0, 3.0, 9.5, 12.0, 50.0, 400.0, 5000.0] {
            let back = ga_phi_inv_log(ga_log_phi(x));
            assert!((back - x).abs() <= 1e-8 * x, "{x} -> {back}");
        }
        assert_eq!(ga_phi_inv_log(0.0), 0.0);
        assert!(ga_phi(0.0) == 1.0 && ga_phi(1.0) < 1.0);
    }

    /// Quantized density evolution on a uniform LLR grid. Returns the bit
    /// error probability of every synthetic channel.
    fn quantized_de_error_rates(sigma: f64, n: usize) -> Vec<f64> {
        const STEP: f64 = 0.1;
        const HALF: i64 = 600;
        let bins = (2 * HALF + 1) as usize;
        let at = |j: usize| (j as i64 - HALF) as f64 * STEP;
        let bin_of = |x: f64| (((x / STEP).round() as i64).clamp(-HALF, HALF) + HALF) as usize;

        // LLR of a biAWGN output given x = 0 is N(2/σ², 4/σ²).
        let (mean, sd) = (2.0 / (sigma * sigma), 2.0 / sigma);
        let cdf = |x: f64| 0.5 * (1.0 + statrs::function::erf::erf((x - mean) / (sd * std::f64::consts::SQRT_2)));
        let mut base = vec![0.0; bins];
        for (j, p) in base.iter_mut().enumerate() {
            *p = cdf(at(j) + STEP / 2.0) - cdf(at(j) - STEP / 2.0);
        }
        base[0] += cdf(at(0) - STEP / 2.0);
        base[bins - 1] += 1.0 - cdf(at(bins - 1) + STEP / 2.0);

        let combine = |a: &[f64], b: &[f64], op: &dyn Fn(f64, f64) -> f64| {
            let mut out = vec![0.0; bins];
            for (i, &pa) in a.iter().enumerate().filter(|(_, p)| **p > 1e-300) {
                for (j, &pb) in b.iter().enumerate().filter(|(_, p)| **p > 1e-300) {
                    out[bin_of(op(at(i), at(j)))] += pa * pb;
                }
            }
            out
        };
        let check = |a: f64, b: f64| 2.0 * ((a / 2.0).tanh() * (b / 2.0).tanh()).atanh();
        let mut dens = vec![base];
        while dens.len() < n {
            dens = dens
                .iter()
                .flat_map(|d| [combine(d, d, &|a, b| check(a, b).clamp(-1e9, 1e9)), combine(d, d, &|a, b| a + b)])
                .collect();
        }
        dens.iter().map(|d| d[..HALF as usize].iter().sum::<f64>() + 0.5 * d[HALF as usize]).collect()
    }

    #[test]
    fn ga_ranking_matches_quantized_de() {
        let n = 8;
        let ga = ga_reliabilities(1.0, n).unwrap();
        let pe = quantized_de_error_rates(1.0, n);
        let mut by_ga: Vec<usize> = (0..n).collect();
        by_ga.sort_by(|&a, &b| ga.values[a].total_cmp(&ga.values[b]));
        let mut by_de: Vec<usize> = (0..n).collect();
        by_de.sort_by(|&a, &b| pe[b].total_cmp(&pe[a]));
        assert_eq!(by_ga, by_de, "GA means {:?}, DE error rates {pe:?}", ga.values);
    }

    #[test]
    fn construction_examples() {
        let p = bec_reliabilities(0.5, 4).unwrap();
        assert_eq!(construct_unconstrained(4, 2, &p).unwrap().frozen(), &[1, 2]);
        assert!(construct_unconstrained(4, 4, &p).unwrap().frozen().is_empty());
        assert_eq!(construct_unconstrained(4, 0, &p).unwrap().frozen(), &[1, 2, 3, 4]);
        assert!(construct_unconstrained(4, 5, &p).is_err());

        let p = ga_reliabilities(0.8, 32).unwrap();
        let zero = construct_constrained(32, 20, 0, &p).unwrap();
        assert_eq!(zero.frozen(), (1..=12).collect::<Vec<_>>().as_slice());
        assert_eq!(zero.mixing_factor(), 0);
        assert_eq!(construct_constrained(32, 20, 20, &p).unwrap(), construct_unconstrained(32, 20, &p).unwrap());
        assert!(construct_constrained(32, 20, 21, &p).is_err());
    }

    #[test]
    fn bec_ties_freeze_smaller_index() {
        // ε = 1: every index has z = 1, so the first n − k indices freeze.
        let p = bec_reliabilities(1.0, 8).unwrap();
        assert_eq!(construct_unconstrained(8, 5, &p).unwrap().frozen(), &[1, 2, 3]);
    }

    proptest! {
        #[test]
        fn constrained_bounds_mixing_factor(m in 1u32..9, kf in 0.0f64..1.0, gf in 0.0f64..1.0, snr in -2.0f64..6.0) {
            let n = 1usize << m;
            let k = ((n as f64) * kf) as usize;
            let gamma_star = ((k as f64) * gf) as usize;
            let sigma = crate::channels::snr_to_sigma(snr, 0.5).unwrap();
            let p = ga_reliabilities(sigma, n).unwrap();
            let code = construct_constrained(n, k, gamma_star, &p).unwrap();
            prop_assert!(code.mixing_factor() <= gamma_star);
            prop_assert_eq!(code.k(), k);
            prop_assert_eq!(&code, &construct_constrained(n, k, gamma_star, &p).unwrap());
        }

        #[test]
        fn bec_degrades_with_epsilon(m in 0u32..9, e1 in 0.0f64..1.0, e2 in 0.0f64..1.0) {
            let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
            let n = 1usize << m;
            let a = bec_reliabilities(lo, n).unwrap();
            let b = bec_reliabilities(hi, n).unwrap();
            prop_assert!(a.values.iter().zip(&b.values).all(|(x, y)| x <= y));
        }
    }
}
