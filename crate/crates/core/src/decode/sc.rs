//! Successive cancellation decoding and from-scratch path-metric replay.

use super::kernels::{bit_node, check_node, decision_penalty, hard_decision};
use crate::channels::ChannelObservation;
use crate::error::{invalid, Result};
use crate::polar::PolarCode;

/// Walks the decoding tree over `alpha` (the LLRs at this node), asking
/// `decide(pos, llr)` for every leaf. Returns the node's re-encoded bits.
fn descend(alpha: &[f64], first: usize, decide: &mut dyn FnMut(usize, f64) -> u8) -> Vec<u8> {
    let len = alpha.len();
    if len == 1 {
        return vec![decide(first, alpha[0])];
    }
    let half = len / 2;
    let (a, b) = alpha.split_at(half);
    let left_alpha: Vec<f64> = a.iter().zip(b).map(|(&x, &y)| check_node(x, y)).collect();
    let left = descend(&left_alpha, first, decide);
    let right_alpha: Vec<f64> = a.iter().zip(b).zip(&left).map(|((&x, &y), &u)| bit_node(x, y, u)).collect();
    let right = descend(&right_alpha, first + half, decide);
    let mut beta: Vec<u8> = left.iter().zip(&right).map(|(l, r)| l ^ r).collect();
    beta.extend_from_slice(&right);
    beta
}

fn check_len(obs: &ChannelObservation, n: usize) -> Result<()> {
    if obs.n() != n {
        return invalid(format!("observation has length {}, code has length {n}", obs.n()));
    }
    Ok(())
}

/// SC decoding: frozen positions take their frozen value, information
/// positions decide 0 when `ℓ_i ≥ 0`. Returns `û^n`.
pub fn sc_decode(obs: &ChannelObservation, code: &PolarCode) -> Result<Vec<u8>> {
    check_len(obs, code.n())?;
    let mut u = vec![0u8; code.n()];
    descend(obs.llrs(), 0, &mut |pos, llr| {
        let bit = if code.is_frozen_at(pos) { code.frozen_value_at(pos) } else { hard_decision(llr) };
        u[pos] = bit;
        bit
    });
    Ok(u)
}

/// Decision LLRs `ℓ_i(y^n, u^{i−1})` along a fixed input vector `u`.
pub fn decision_llrs(llrs: &[f64], u: &[u8]) -> Result<Vec<f64>> {
    if llrs.len() != u.len() || !u.len().is_power_of_two() {
        return invalid(format!("{} LLRs for {} decisions", llrs.len(), u.len()));
    }
    let mut out = vec![0.0; u.len()];
    descend(llrs, 0, &mut |pos, llr| {
        out[pos] = llr;
        u[pos]
    });
    Ok(out)
}

/// Path metric `Σ_i ln(1 + e^{−(1−2u_i)ℓ_i})` of a prefix `u^j`, recomputed
/// from the channel without any list bookkeeping. Positions past the prefix
/// are filled with zeros; they do not influence earlier decision LLRs.
pub fn path_metric_from_scratch(llrs: &[f64], prefix: &[u8]) -> Result<f64> {
    let mut u = prefix.to_vec();
    u.resize(llrs.len(), 0);
    let lambdas = decision_llrs(llrs, &u)?;
    Ok(prefix.iter().zip(&lambdas).map(|(&b, &l)| decision_penalty(l, b)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::biawgn_observe;
    use crate::polar::{encode, polar_transform};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_bit_hand_example() {
        let code = PolarCode::new(2, [1]).unwrap();
        let obs = ChannelObservation::from_llrs(&[-1.0, 3.0]).unwrap();
        assert_eq!(sc_decode(&obs, &code).unwrap(), vec![0, 0]);
        let lambdas = decision_llrs(obs.llrs(), &[0, 0]).unwrap();
        let f = 2.0 * ((-0.5f64).tanh() * 1.5f64.tanh()).atanh();
        assert!((lambdas[0] - f).abs() < 1e-12);
        assert_eq!(lambdas[1], 2.0);
    }

    #[test]
    fn noiseless_decoding_recovers_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let code = PolarCode::new(16, [1, 2, 3, 5, 9]).unwrap();
        for _ in 0..20 {
            let info: Vec<u8> = (0..code.k()).map(|_| rng.random_range(0..2)).collect();
            let u = code.input_vector(&info).unwrap();
            let x = polar_transform(&u).unwrap();
            let llrs: Vec<f64> = x.iter().map(|&b| 1e6 * (1.0 - 2.0 * b as f64)).collect();
            let obs = ChannelObservation::from_llrs(&llrs).unwrap();
            assert_eq!(sc_decode(&obs, &code).unwrap(), u);
            let bec = crate::channels::bec_from_erasures(&x, &[false; 16], 0.3);
            assert_eq!(sc_decode(&bec, &code).unwrap(), u);
        }
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let code = PolarCode::new(4, [1]).unwrap();
        let obs = ChannelObservation::from_llrs(&[1.0, 2.0]).unwrap();
        assert!(sc_decode(&obs, &code).is_err());
        assert!(decision_llrs(&[1.0, 2.0], &[0]).is_err());
    }

    #[test]
    fn path_metric_is_negative_log_posterior() {
        // e^{-pm(u^n)} = P(u^n | y) = W(y|uG) / Σ_v W(y|vG) for uniform u.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let rate1 = PolarCode::new(8, []).unwrap();
        let x = encode(&[0, 1, 1, 0, 1, 0, 0, 1], &rate1).unwrap();
        let obs = biawgn_observe(&x, 0.9, &mut rng).unwrap();
        let all: Vec<Vec<u8>> = (0..256u32).map(|j| (0..8).map(|t| ((j >> t) & 1) as u8).collect()).collect();
        let logs: Vec<f64> = all.iter().map(|u| obs.log_likelihood(&polar_transform(u).unwrap())).collect();
        let total = super::super::kernels::log_sum_exp(&logs);
        for (u, l) in all.iter().zip(&logs).step_by(37) {
            let pm = path_metric_from_scratch(obs.llrs(), u).unwrap();
            assert!((pm - (total - l)).abs() < 1e-10);
        }
    }
}
