//! Rate-domain power control on the cascade budget.
//!
//! In normalized rates `r = R/B` the budget reads
//! `F(r) = Σ_i a_i (2^{S_i} - 1) ≤ 1` with tail sums `S_i = Σ_{k≥i} r_k` and
//! nonnegative `a_i = (q_i - q_{i-1}) / P`. `F` is convex, so minimizing
//! `Σ w_i (r_i - d_i)²` over the box `[r_min, d]` under it is a convex
//! program. It is solved through its Lagrangian: for a fixed multiplier the
//! box-constrained problem is solved by exact coordinate descent, and the
//! multiplier is bisected until the budget is met.

use alloc::vec;
use alloc::vec::Vec;

use super::cascade::{cascade_powers, exp2m1};
use super::{rates, CellInstance, PowerAllocation, PowerError};
use crate::math::exp2;
use crate::scenario::DecodeOrder;

const LN2: f64 = core::f64::consts::LN_2;

struct Problem {
    a: Vec<f64>,
    w: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Problem {
    fn budget(&self, r: &[f64]) -> f64 {
        let mut tail = 0.0;
        let mut total = 0.0;
        for i in (0..r.len()).rev() {
            tail += r[i];
            total += self.a[i] * exp2m1(tail);
        }
        total
    }

    /// Coordinate descent on `Σ w (r - d)² + λ F(r)` over the box.
    fn minimize(&self, lambda: f64, r: &mut [f64]) {
        let n = r.len();
        for _ in 0..500 {
            let mut moved: f64 = 0.0;
            for k in 0..n {
                // Σ_{i≤k} a_i 2^{S_i - r_k}
                let mut tail: f64 = r[k + 1..].iter().sum();
                let mut c = self.a[k] * exp2(tail);
                for i in (0..k).rev() {
                    tail += r[i];
                    c += self.a[i] * exp2(tail);
                }
                let x = self.coordinate(k, lambda * LN2 * c);
                moved = moved.max((x - r[k]).abs());
                r[k] = x;
            }
            if moved < 1e-13 {
                break;
            }
        }
    }

    /// Root of `2 w (x - d) + K 2^x` clamped into `[lo, hi]`.
    fn coordinate(&self, k: usize, big_k: f64) -> f64 {
        let (w, lo, hi) = (self.w[k], self.lo[k], self.hi[k]);
        let h = |x: f64| 2.0 * w * (x - hi) + big_k * exp2(x);
        if h(lo) >= 0.0 {
            return lo;
        }
        if big_k <= 0.0 {
            return hi;
        }
        // h is convex and increasing, so Newton from the right never overshoots
        let mut x = hi;
        for _ in 0..200 {
            let fx = h(x);
            let dx = 2.0 * w + big_k * LN2 * exp2(x);
            let next = (x - fx / dx).max(lo);
            if (x - next).abs() <= 1e-15 * (1.0 + x.abs()) {
                x = next;
                break;
            }
            x = next;
        }
        x.clamp(lo, hi)
    }
}

pub fn expcone_power_solve(inst: &CellInstance) -> Result<PowerAllocation, PowerError> {
    if inst.kappa > 0.0 {
        return Err(PowerError::Unsupported("exponential-cone cascade needs perfect SIC (κ = 0)"));
    }
    if inst.decode_order != DecodeOrder::AsPrinted {
        return Err(PowerError::Unsupported("exponential-cone cascade needs the printed decode order"));
    }
    if !inst.mu || inst.is_empty() {
        return Ok(inst.zero_allocation());
    }
    let n = inst.len();
    let b = inst.bandwidth_hz;
    let budget = inst.p_budget_w;
    let gains = inst.gains();
    if gains.windows(2).any(|w| w[0] < w[1]) {
        return Err(PowerError::UnorderedGains);
    }
    if let Some(i) = gains.iter().position(|&g| !(g > 0.0)) {
        return Err(PowerError::Infeasible { user: inst.column(i) });
    }
    let q: Vec<f64> = gains.iter().map(|g| inst.noise_w / g).collect();
    let a: Vec<f64> = (0..n).map(|i| (q[i] - if i == 0 { 0.0 } else { q[i - 1] }) / budget).collect();
    let hi: Vec<f64> = inst.demands_bps.iter().map(|d| d / b).collect();
    let lo: Vec<f64> = hi.iter().map(|&d| (inst.r_min_bps / b).min(d)).collect();
    let wmax = inst.weights.iter().fold(0.0f64, |m, &w| m.max(w));
    let w: Vec<f64> = inst.weights.iter().map(|&x| if wmax > 0.0 { x / wmax } else { 1.0 }).collect();
    let prob = Problem { a, w, lo, hi };

    let r = if prob.budget(&prob.hi) <= 1.0 {
        prob.hi.clone()
    } else if prob.budget(&prob.lo) > 1.0 {
        let p = cascade_powers(&prob.lo.iter().map(|x| x * b).collect::<Vec<_>>(), &gains, inst.noise_w, b)?;
        let mut acc = 0.0;
        let worst = p.iter().position(|x| {
            acc += x;
            acc > budget
        });
        return Err(PowerError::Infeasible { user: inst.column(worst.unwrap_or(n - 1)) });
    } else {
        solve_multiplier(&prob)
    };
    let rate_targets: Vec<f64> = r.iter().map(|x| x * b).collect();
    let mut p = cascade_powers(&rate_targets, &gains, inst.noise_w, b)?;
    // guard the last ulps of the budget
    let total: f64 = p.iter().sum();
    if total > budget {
        let k = budget / total;
        for x in &mut p {
            *x *= k;
        }
    }
    let rates = rates(inst, &p);
    Ok(PowerAllocation { p, aux: None, rates })
}

fn solve_multiplier(prob: &Problem) -> Vec<f64> {
    let mut r = prob.hi.clone();
    let at = |lambda: f64, r: &mut Vec<f64>| {
        prob.minimize(lambda, r);
        prob.budget(r)
    };
    // bracket: budget(r(λ)) is nonincreasing in λ
    let mut lam_lo;
    let mut lam_hi = 1.0;
    if at(lam_hi, &mut r) > 1.0 {
        lam_lo = lam_hi;
        while at(lam_hi, &mut r) > 1.0 && lam_hi < 1e200 {
            lam_lo = lam_hi;
            lam_hi *= 10.0;
        }
    } else {
        lam_lo = lam_hi / 10.0;
        while at(lam_lo, &mut r) <= 1.0 && lam_lo > 1e-200 {
            lam_hi = lam_lo;
            lam_lo /= 10.0;
        }
    }
    let mut best = vec![0.0; r.len()];
    r.clone_from(&prob.hi);
    at(lam_hi, &mut r);
    best.clone_from(&r);
    for _ in 0..100 {
        let mid = libm::sqrt(lam_lo * lam_hi);
        if at(mid, &mut r) <= 1.0 {
            lam_hi = mid;
            best.clone_from(&r);
        } else {
            lam_lo = mid;
        }
        if lam_hi / lam_lo < 1.0 + 1e-14 {
            break;
        }
    }
    if prob.budget(&best) > 1.0 {
        // numerically on the boundary: fall back to the lower corner blend
        let mut t = 1.0;
        let mut blended = best.clone();
        for _ in 0..60 {
            for k in 0..blended.len() {
                blended[k] = prob.lo[k] + t * (best[k] - prob.lo[k]);
            }
            if prob.budget(&blended) <= 1.0 {
                break;
            }
            t *= 0.999;
        }
        best = blended;
    }
    best
}
