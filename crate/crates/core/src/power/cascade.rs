//! Closed-form NOMA power cascade and its collapsed budget expression.

use alloc::vec;
use alloc::vec::Vec;

use super::{CellInstance, PowerError};

/// `2^x - 1` without cancellation for small `x`.
pub fn exp2m1(x: f64) -> f64 {
    libm::expm1(x * core::f64::consts::LN_2)
}

/// Minimum powers that deliver `rates` when every earlier-decoded stream
/// interferes with the same gain as the user's own signal. `gains` must be
/// descending.
pub fn cascade_powers(rates: &[f64], gains: &[f64], noise_w: f64, bandwidth_hz: f64) -> Result<Vec<f64>, PowerError> {
    if gains.windows(2).any(|w| w[0] < w[1]) || gains.iter().any(|&g| !(g > 0.0)) {
        return Err(PowerError::UnorderedGains);
    }
    let mut p = Vec::with_capacity(rates.len());
    let mut acc = 0.0;
    for (r, g) in rates.iter().zip(gains) {
        let pi = exp2m1(r / bandwidth_hz) * (acc + noise_w / g);
        acc += pi;
        p.push(pi);
    }
    Ok(p)
}

/// Total cascade power written as a sum of exponentials of tail sums:
/// `Σ_i (q_i - q_{i-1}) (2^{Σ_{k≥i} R_k/B} - 1)` with `q_i = σ²/g_i`, `q_0 = 0`.
pub fn budget_lhs(rates: &[f64], gains: &[f64], noise_w: f64, bandwidth_hz: f64) -> f64 {
    let n = rates.len();
    let mut tail = 0.0;
    let mut total = 0.0;
    for i in (0..n).rev() {
        tail += rates[i] / bandwidth_hz;
        let q_prev = if i == 0 { 0.0 } else { noise_w / gains[i - 1] };
        total += (noise_w / gains[i] - q_prev) * exp2m1(tail);
    }
    total
}

/// Exact minimum-power vector reaching `targets_bps` under the instance's
/// full coupling, or `None` when no nonnegative solution exists.
pub fn min_power_for_rates(inst: &CellInstance, targets_bps: &[f64]) -> Option<Vec<f64>> {
    let n = inst.len();
    let t: Vec<f64> = targets_bps.iter().map(|r| exp2m1(r / inst.bandwidth_hz)).collect();
    let mut a = vec![vec![0.0; n + 1]; n];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = if i == j {
                inst.coupling[i][i]
            } else {
                -t[i] * inst.interference_weight(i, j) * inst.coupling[i][j]
            };
        }
        a[i][n] = t[i] * inst.noise_w;
    }
    // Gaussian elimination with partial pivoting
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col].abs() == 0.0 {
            if (col..n).all(|r| a[r][n] == 0.0) {
                continue;
            }
            return None;
        }
        a.swap(col, piv);
        for r in (col + 1)..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for k in col..=n {
                    a[r][k] -= f * a[col][k];
                }
            }
        }
    }
    let mut p = vec![0.0; n];
    for i in (0..n).rev() {
        if a[i][i] == 0.0 {
            continue;
        }
        let s: f64 = ((i + 1)..n).map(|k| a[i][k] * p[k]).sum();
        p[i] = (a[i][n] - s) / a[i][i];
    }
    let scale = p.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if p.iter().any(|x| !x.is_finite() || *x < -1e-12 * scale) {
        return None;
    }
    for x in &mut p {
        *x = x.max(0.0);
    }
    Some(p)
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::super::{rates, CellInstance};
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn zero_rates_zero_power() {
        assert_eq!(cascade_powers(&[0.0; 3], &[3.0, 2.0, 1.0], 1.0, 1.0).unwrap(), [0.0; 3]);
    }

    #[test]
    fn two_user_example() {
        let s2 = 2.512e-14;
        let p = cascade_powers(&[500e6, 500e6], &[1.0, 1.0], s2, 500e6).unwrap();
        assert!((p[0] - 2.512e-14).abs() < 1e-26);
        assert!((p[1] - 5.024e-14).abs() < 1e-26);
    }

    #[test]
    fn unordered_gains_rejected() {
        assert_eq!(cascade_powers(&[1.0, 1.0], &[1.0, 2.0], 1.0, 1.0), Err(PowerError::UnorderedGains));
    }

    proptest! {
        #[test]
        fn collapse_matches_sum(seed in 0u64..100_000, n in 1usize..7) {
            let mut r = rng(seed);
            let g = random_gains(&mut r, n);
            let bw = r.gen_range(1e6..1e9);
            let noise = libm::pow(10.0, r.gen_range(-16.0..-12.0));
            let rt: Vec<f64> = (0..n).map(|_| r.gen_range(0.0..4.0) * bw).collect();
            let p = cascade_powers(&rt, &g, noise, bw).unwrap();
            let sum: f64 = p.iter().sum();
            let lhs = budget_lhs(&rt, &g, noise, bw);
            prop_assert!((sum - lhs).abs() <= 1e-9 * sum.abs().max(1e-300));
        }

        #[test]
        fn round_trip_rates(seed in 0u64..100_000, n in 1usize..7) {
            let mut r = rng(seed);
            let g = random_gains(&mut r, n);
            let rt: Vec<f64> = (0..n).map(|_| r.gen_range(1e6..2e9)).collect();
            let inst = CellInstance::common_beam(&g, &rt, params(1e9));
            let p = cascade_powers(&rt, &g, inst.noise_w, inst.bandwidth_hz).unwrap();
            for (a, b) in rates(&inst, &p).iter().zip(&rt) {
                prop_assert!((a - b).abs() <= 1e-9 * b);
            }
            // the general solver agrees with the cascade on common-beam coupling
            let q = min_power_for_rates(&inst, &rt).unwrap();
            for (a, b) in q.iter().zip(&p) {
                prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1e-300));
            }
        }

        #[test]
        fn min_power_hits_targets(seed in 0u64..100_000, n in 1usize..6, kappa in 0.0f64..0.2) {
            let mut r = rng(seed);
            let c = random_coupling(&mut r, n);
            let rt: Vec<f64> = (0..n).map(|_| r.gen_range(1e6..3e8)).collect();
            let mut inst = instance_from(c, rt.clone(), params(1e9));
            inst.kappa = kappa;
            if let Some(p) = min_power_for_rates(&inst, &rt) {
                for (a, b) in rates(&inst, &p).iter().zip(&rt) {
                    prop_assert!((a - b).abs() <= 1e-6 * b);
                }
            }
        }
    }
}
