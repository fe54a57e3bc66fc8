//! Exact LLR arithmetic shared by every decoder.
//!
//! Infinite LLRs (unerased BEC symbols) are exact: `f(±inf, b) = ±b`,
//! `g` saturates, and the one undefined sum `inf − inf` is taken as 0. It
//! only arises on paths whose metric is already infinite.

/// `ln(1 + e^x)`, stable for all `x` including `±inf`.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `ln(e^a + e^b)`.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `ln Σ e^{v_i}`; `-inf` for an empty slice.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Check-node update `2·atanh(tanh(a/2)·tanh(b/2))`, written as
/// `sgn(a)sgn(b)·min(|a|,|b|) + ln(1+e^{−|a+b|}) − ln(1+e^{−|a−b|})`.
#[inline]
pub fn check_node(a: f64, b: f64) -> f64 {
    let (ma, mb) = (a.abs(), b.abs());
    let sign = if (a < 0.0) != (b < 0.0) { -1.0 } else { 1.0 };
    let (lo, hi) = if ma <= mb { (ma, mb) } else { (mb, ma) };
    if lo == f64::INFINITY {
        return sign * f64::INFINITY;
    }
    // In terms of magnitudes: |a+b| and |a−b| are {ma+mb, hi−lo}, swapped
    // together with the sign, so the correction carries the sign as well.
    sign * (lo + (-(ma + mb)).exp().ln_1p() - (-(hi - lo)).exp().ln_1p())
}

/// Bit-node update `b + (1 − 2u)·a`.
#[inline]
pub fn bit_node(a: f64, b: f64, u: u8) -> f64 {
    let v = if u == 0 { b + a } else { b - a };
    if v.is_nan() {
        0.0
    } else {
        v
    }
}

/// Path-metric increment `ln(1 + e^{−(1−2u)λ})` for deciding `u` against
/// decision LLR `λ`.
#[inline]
pub fn decision_penalty(llr: f64, u: u8) -> f64 {
    softplus(if u == 0 { -llr } else { llr })
}

/// Hard decision: `ℓ ≥ 0` decides 0.
#[inline]
pub fn hard_decision(llr: f64) -> u8 {
    (llr < 0.0) as u8
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_check(a: f64, b: f64) -> f64 {
        ((1.0 + (a + b).exp()) / (a.exp() + b.exp())).ln()
    }

    #[test]
    fn check_node_matches_definition() {
        for &a in &[-7.5, -2.0, -0.3, 0.0, 0.1, 1.0, 4.0, 9.0] {
            for &b in &[-6.0, -1.0, -0.25, 0.0, 0.5, 2.5, 8.0] {
                let tanh_form = 2.0 * ((a / 2.0f64).tanh() * (b / 2.0f64).tanh()).atanh();
                assert!((check_node(a, b) - reference_check(a, b)).abs() < 1e-12, "{a} {b}");
                assert!((check_node(a, b) - tanh_form).abs() < 1e-9, "{a} {b}");
                assert_eq!(check_node(a, b), check_node(b, a));
            }
        }
        // Large magnitudes where the tanh form saturates.
        assert!((check_node(60.0, -45.0) + 45.0 - (-15.0f64).exp().ln_1p()).abs() < 1e-12);
    }

    #[test]
    fn infinite_llrs_are_exact() {
        let inf = f64::INFINITY;
        assert_eq!(check_node(inf, 2.5), 2.5);
        assert_eq!(check_node(-inf, 2.5), -2.5);
        assert_eq!(check_node(inf, -inf), -inf);
        assert_eq!(check_node(inf, 0.0), 0.0);
        assert_eq!(check_node(0.0, 0.0), 0.0);
        assert_eq!(bit_node(inf, 1.0, 0), inf);
        assert_eq!(bit_node(inf, -inf, 0), 0.0);
        assert_eq!(decision_penalty(inf, 0), 0.0);
        assert_eq!(decision_penalty(inf, 1), inf);
        assert_eq!(decision_penalty(-inf, 1), 0.0);
    }

    #[test]
    fn penalties_are_posterior_logs() {
        for &l in &[-30.0f64, -3.0, 0.0, 0.7, 12.0] {
            let p0 = 1.0 / (1.0 + (-l).exp());
            assert!((decision_penalty(l, 0) + p0.ln()).abs() < 1e-12);
            assert!((decision_penalty(l, 1) + (1.0 - p0).ln()).abs() < 1e-9);
        }
        assert_eq!(hard_decision(0.0), 0);
        assert_eq!(hard_decision(-1e-300), 1);
    }

    #[test]
    fn log_sum_exp_edges() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[0.0, 0.0]) - 2f64.ln()).abs() < 1e-15);
        assert!((log_sum_exp(&[-1000.0, -1000.0]) - (-1000.0 + 2f64.ln())).abs() < 1e-12);
        assert!((log_add_exp(1.0, 2.0) - (1f64.exp() + 2f64.exp()).ln()).abs() < 1e-14);
    }
}
