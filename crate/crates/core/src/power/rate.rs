//! SINR, achievable rate and the difference-of-increasing-functions split.

use alloc::vec::Vec;

use super::CellInstance;
use crate::math::log2;

/// Interference power at decode position `i`.
pub fn interference(inst: &CellInstance, p: &[f64], i: usize) -> f64 {
    (0..inst.len())
        .map(|j| inst.interference_weight(i, j) * inst.coupling[i][j] * p[j])
        .sum()
}

pub fn sinr(inst: &CellInstance, p: &[f64]) -> Vec<f64> {
    (0..inst.len())
        .map(|i| inst.coupling[i][i] * p[i] / (interference(inst, p, i) + inst.noise_w))
        .collect()
}

pub fn achievable_rate(sinr: &[f64], bandwidth_hz: f64, mu: bool) -> Vec<f64> {
    if !mu {
        return alloc::vec![0.0; sinr.len()];
    }
    sinr.iter().map(|&g| bandwidth_hz * libm::log1p(g) / core::f64::consts::LN_2).collect()
}

pub fn rates(inst: &CellInstance, p: &[f64]) -> Vec<f64> {
    achievable_rate(&sinr(inst, p), inst.bandwidth_hz, inst.mu)
}

/// `(ξ⁺, ξ⁻)` with `ξ⁺ - ξ⁻` equal to the achievable rate.
pub fn xi_decompose(inst: &CellInstance, p: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let b = if inst.mu { inst.bandwidth_hz } else { 0.0 };
    let mut plus = Vec::with_capacity(inst.len());
    let mut minus = Vec::with_capacity(inst.len());
    for i in 0..inst.len() {
        let noise_and_int = inst.noise_w + interference(inst, p, i);
        plus.push(b * log2(noise_and_int + inst.coupling[i][i] * p[i]));
        minus.push(b * log2(noise_and_int));
    }
    (plus, minus)
}

/// `Σ w_i (R_i - D_i)²`.
pub fn objective(inst: &CellInstance, rates: &[f64]) -> f64 {
    rates
        .iter()
        .zip(&inst.demands_bps)
        .zip(&inst.weights)
        .map(|((r, d), w)| w * (r - d) * (r - d))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;
    use rand::Rng;

    /// Literal evaluation written out independently of `interference`.
    fn literal_sinr(c: &[Vec<f64>], p: &[f64], noise: f64, kappa: f64) -> Vec<f64> {
        let n = p.len();
        let mut out = vec![];
        for i in 0..n {
            let mut before = 0.0;
            for j in 0..i {
                before += c[i][j] * p[j];
            }
            let mut after = 0.0;
            for j in (i + 1)..n {
                after += c[i][j] * p[j];
            }
            out.push(c[i][i] * p[i] / (before + kappa * after + noise));
        }
        out
    }

    #[test]
    fn strongest_user_sees_only_noise() {
        let mut r = rng(1);
        let c = random_coupling(&mut r, 4);
        let inst = instance_from(c.clone(), vec![1e8; 4], params(10.0));
        let p = [1.0, 2.0, 3.0, 4.0];
        let g = sinr(&inst, &p);
        assert!((g[0] / (c[0][0] * 1.0 / inst.noise_w) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn kappa_one_hand_expansion() {
        // orthonormal beams aligned with channels, plus 0.2 leakage
        let c = vec![vec![4.0, 0.2], vec![0.2, 1.0]];
        let mut pr = params(1.0);
        pr.kappa = 1.0;
        pr.noise_w = 0.5;
        let inst = instance_from(c, vec![1.0; 2], pr);
        let g = sinr(&inst, &[1.0, 3.0]);
        assert!((g[0] - 4.0 / (0.2 * 3.0 + 0.5)).abs() < 1e-15);
        assert!((g[1] - 3.0 / (0.2 * 1.0 + 0.5)).abs() < 1e-15);
    }

    #[test]
    fn rate_examples() {
        assert_eq!(achievable_rate(&[1.0, 3.0], 500e6, false), [0.0, 0.0]);
        let r = achievable_rate(&[1.0, 3.0], 500e6, true);
        assert!((r[0] - 500e6).abs() < 1e-6 && (r[1] - 1000e6).abs() < 1e-6);
    }

    #[test]
    fn xi_at_zero_power() {
        let inst = instance_from(random_coupling(&mut rng(2), 3), vec![1e8; 3], params(1.0));
        let (plus, minus) = xi_decompose(&inst, &[0.0; 3]);
        let base = inst.bandwidth_hz * libm::log2(inst.noise_w);
        for i in 0..3 {
            assert_eq!(plus[i], base);
            assert_eq!(minus[i], base);
        }
        let (_, minus) = xi_decompose(&inst, &[1.0, 2.0, 3.0]);
        assert_eq!(minus[0], base);
    }

    proptest! {
        #[test]
        fn reduces_to_literal_at_kappa_zero(seed in 0u64..10_000, n in 1usize..7) {
            let mut r = rng(seed);
            let c = random_coupling(&mut r, n);
            let p: Vec<f64> = (0..n).map(|_| r.gen_range(0.0..100.0)).collect();
            let inst = instance_from(c.clone(), vec![1e8; n], params(1e3));
            let got = sinr(&inst, &p);
            let want = literal_sinr(&c, &p, inst.noise_w, 0.0);
            for (a, b) in got.iter().zip(&want) {
                prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300));
            }
        }

        #[test]
        fn sinr_non_increasing_in_kappa(seed in 0u64..10_000, n in 2usize..7, k1 in 0.0f64..1.0, k2 in 0.0f64..1.0) {
            let mut r = rng(seed);
            let c = random_coupling(&mut r, n);
            let p: Vec<f64> = (0..n).map(|_| r.gen_range(0.0..100.0)).collect();
            let (lo, hi) = if k1 <= k2 { (k1, k2) } else { (k2, k1) };
            let mut a = instance_from(c, vec![1e8; n], params(1e3));
            a.kappa = lo;
            let mut b = a.clone();
            b.kappa = hi;
            for (x, y) in sinr(&a, &p).iter().zip(sinr(&b, &p)) {
                prop_assert!(y <= *x);
            }
        }

        #[test]
        fn xi_difference_is_rate(seed in 0u64..10_000, n in 1usize..7, kappa in 0.0f64..1.0) {
            let mut r = rng(seed);
            let c = random_coupling(&mut r, n);
            let p: Vec<f64> = (0..n).map(|_| r.gen_range(0.01..100.0)).collect();
            let mut inst = instance_from(c, vec![1e8; n], params(1e3));
            inst.kappa = kappa;
            let (plus, minus) = xi_decompose(&inst, &p);
            let rt = rates(&inst, &p);
            for i in 0..n {
                let d = plus[i] - minus[i];
                prop_assert!((d - rt[i]).abs() <= 1e-9 * rt[i].abs().max(1.0));
            }
        }
    }
}
