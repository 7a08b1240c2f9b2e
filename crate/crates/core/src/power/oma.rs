//! Power split across orthogonal bandwidth shares.
//!
//! Users do not interact, so for a fixed budget multiplier each user solves
//! a one-dimensional convex problem on its own; the multiplier is bisected
//! until the shares exhaust the budget.

use alloc::vec::Vec;

use super::cascade::exp2m1;
use super::{rates, CellInstance, PowerAllocation, PowerError};
use crate::math::golden_min;

/// Solve an instance whose coupling is diagonal (see
/// [`CellInstance::orthogonal`]); off-diagonal entries are ignored.
pub fn oma_power_solve(inst: &CellInstance) -> Result<PowerAllocation, PowerError> {
    if !inst.mu || inst.is_empty() {
        return Ok(inst.zero_allocation());
    }
    let n = inst.len();
    let budget = inst.p_budget_w;
    let b = inst.bandwidth_hz;
    let g: Vec<f64> = (0..n).map(|i| inst.coupling[i][i] * budget / inst.noise_w).collect();
    let d: Vec<f64> = inst.demands_bps.iter().map(|x| x / b).collect();
    let rmin = inst.r_min_bps / b;
    let wmax = inst.weights.iter().fold(0.0f64, |m, &w| m.max(w));
    let w: Vec<f64> = inst.weights.iter().map(|&x| if wmax > 0.0 { x / wmax } else { 1.0 }).collect();

    let mut lo = Vec::with_capacity(n);
    let mut hi = Vec::with_capacity(n);
    for i in 0..n {
        if !(g[i] > 0.0) {
            return Err(PowerError::Infeasible { user: inst.column(i) });
        }
        let need = exp2m1(rmin.min(d[i])) / g[i];
        lo.push(need);
        hi.push(exp2m1(d[i]) / g[i]);
    }
    let floor: f64 = lo.iter().sum();
    if floor > 1.0 {
        let worst = (0..n).max_by(|&x, &y| lo[x].total_cmp(&lo[y])).unwrap_or(0);
        return Err(PowerError::Infeasible { user: inst.column(worst) });
    }
    let x = if hi.iter().sum::<f64>() <= 1.0 {
        hi
    } else {
        let share = |lambda: f64| -> Vec<f64> {
            (0..n)
                .map(|i| {
                    let f = |p: f64| {
                        let r = libm::log1p(g[i] * p) / core::f64::consts::LN_2;
                        let s = (d[i] - r).max(0.0);
                        w[i] * s * s + lambda * p
                    };
                    golden_min(f, lo[i], hi[i], 80)
                })
                .collect()
        };
        let (mut l_lo, mut l_hi) = (1e-12, 1.0);
        while share(l_hi).iter().sum::<f64>() > 1.0 && l_hi < 1e200 {
            l_lo = l_hi;
            l_hi *= 10.0;
        }
        let mut best = share(l_hi);
        for _ in 0..100 {
            let mid = libm::sqrt(l_lo * l_hi);
            let s = share(mid);
            if s.iter().sum::<f64>() <= 1.0 {
                l_hi = mid;
                best = s;
            } else {
                l_lo = mid;
            }
            if l_hi / l_lo < 1.0 + 1e-12 {
                break;
            }
        }
        best
    };
    let p: Vec<f64> = x.iter().map(|v| v * budget).collect();
    let rates = rates(inst, &p);
    Ok(PowerAllocation { p, aux: None, rates })
}
