//! Power-domain solver for the difference-of-increasing-functions form of
//! the rate.
//!
//! Each rate is `ξ⁺(p) - ξ⁻(p)` with both terms concave in `p`. Replacing
//! `ξ⁻` by its tangent at the current point gives a concave lower bound on
//! every rate, hence a convex upper bound on the shortfall objective
//! `Σ w (D - R)₊²` that touches it at the current point. Minimizing that
//! bound over the power simplex and re-linearizing decreases the true
//! objective monotonically. The convex inner problem is solved by exact
//! line searches along pairs of coordinates of the simplex (powers plus a
//! slack entry), which keep every iterate feasible.

use alloc::vec;
use alloc::vec::Vec;

use super::cascade::exp2m1;
use super::{min_power_for_rates, rates, CellInstance, PowerAllocation, PowerError};
use crate::math::{golden_min, log2};

const LN2: f64 = core::f64::consts::LN_2;
const RMIN_PENALTY: f64 = 1e9;
const INNER_SWEEPS: usize = 2;
const LINE_ITERS: usize = 30;

/// Tolerances for [`monotonic_power_solve_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicOptions {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for MonotonicOptions {
    fn default() -> Self {
        Self { tol: 1e-6, max_iters: 100 }
    }
}

/// Instance in units of the budget, the noise power and the bandwidth.
struct Normalized {
    n: usize,
    diag: Vec<f64>,
    /// Weighted cross coupling, zero on the diagonal.
    cross: Vec<Vec<f64>>,
    d: Vec<f64>,
    w: Vec<f64>,
    rmin: f64,
}

impl Normalized {
    fn new(inst: &CellInstance) -> Self {
        let n = inst.len();
        let k = inst.p_budget_w / inst.noise_w;
        let diag = (0..n).map(|i| inst.coupling[i][i] * k).collect();
        let cross = (0..n)
            .map(|i| (0..n).map(|j| inst.interference_weight(i, j) * inst.coupling[i][j] * k).collect())
            .collect();
        let d = inst.demands_bps.iter().map(|x| x / inst.bandwidth_hz).collect();
        let wmax = inst.weights.iter().fold(0.0f64, |m, &w| m.max(w));
        let w = inst.weights.iter().map(|&x| if wmax > 0.0 { x / wmax } else { 1.0 }).collect();
        Self { n, diag, cross, d, w, rmin: inst.r_min_bps / inst.bandwidth_hz }
    }

    fn interference(&self, x: &[f64], i: usize) -> f64 {
        self.cross[i].iter().zip(x).map(|(c, p)| c * p).sum()
    }

    fn rate(&self, x: &[f64], i: usize) -> f64 {
        libm::log1p(self.diag[i] * x[i] / (1.0 + self.interference(x, i))) / LN2
    }

    fn penalty(&self, i: usize, r: f64) -> f64 {
        let short = (self.d[i] - r).max(0.0);
        let floor = (self.rmin - r).max(0.0);
        self.w[i] * short * short + RMIN_PENALTY * floor * floor
    }

    fn objective(&self, x: &[f64]) -> f64 {
        (0..self.n).map(|i| self.penalty(i, self.rate(x, i))).sum()
    }
}

/// Tangent data of `ξ⁻` at an anchor point.
struct Surrogate<'a> {
    m: &'a Normalized,
    base: Vec<f64>,
    grad_scale: Vec<f64>,
    int_anchor: Vec<f64>,
}

impl<'a> Surrogate<'a> {
    fn at(m: &'a Normalized, x: &[f64]) -> Self {
        let mut base = vec![0.0; m.n];
        let mut grad_scale = vec![0.0; m.n];
        let int_anchor: Vec<f64> = (0..m.n).map(|i| m.interference(x, i)).collect();
        for i in 0..m.n {
            let int = 1.0 + int_anchor[i];
            base[i] = log2(int);
            grad_scale[i] = 1.0 / (int * LN2);
        }
        Self { m, base, grad_scale, int_anchor }
    }

    fn value(&self, x: &[f64]) -> f64 {
        let m = self.m;
        let mut total = 0.0;
        for i in 0..m.n {
            let int = m.interference(x, i);
            let upper = log2(1.0 + int + m.diag[i] * x[i]);
            let lin = self.base[i] + self.grad_scale[i] * (int - self.int_anchor[i]);
            total += m.penalty(i, upper - lin);
        }
        total
    }
}

/// One sweep of pairwise exact line searches; returns the final value.
fn pair_sweep(s: &Surrogate, x: &mut [f64], mut current: f64) -> f64 {
    let len = x.len();
    for a in 0..len {
        for b in (a + 1)..len {
            let (lo, hi) = (-x[a], x[b]);
            if hi - lo <= 0.0 {
                continue;
            }
            let (xa, xb) = (x[a], x[b]);
            let mut trial = x.to_vec();
            let mut eval = |t: f64| {
                trial[a] = (xa + t).max(0.0);
                trial[b] = (xb - t).max(0.0);
                s.value(&trial[..s.m.n])
            };
            let t = golden_min(&mut eval, lo, hi, LINE_ITERS);
            let v = eval(t);
            if v < current {
                x[a] = (xa + t).max(0.0);
                x[b] = (xb - t).max(0.0);
                current = v;
            }
        }
    }
    current
}

fn minimize_from(m: &Normalized, start: Vec<f64>, opts: MonotonicOptions) -> (Vec<f64>, f64) {
    let n = m.n;
    let slack = (1.0 - start.iter().sum::<f64>()).max(0.0);
    let mut x = start;
    x.push(slack);
    let mut f = m.objective(&x[..n]);
    for _ in 0..opts.max_iters {
        if f == 0.0 {
            break;
        }
        let s = Surrogate::at(m, &x[..n]);
        let mut sv = s.value(&x[..n]);
        for _ in 0..INNER_SWEEPS {
            let next = pair_sweep(&s, &mut x, sv);
            let gained = sv - next;
            sv = next;
            if gained <= 1e-12 * (1.0 + sv) {
                break;
            }
        }
        let f_new = m.objective(&x[..n]);
        let change = f - f_new;
        f = f_new.min(f);
        if change.abs() <= opts.tol * f.max(1e-12) {
            break;
        }
    }
    x.truncate(n);
    (x, f)
}

pub fn monotonic_power_solve(inst: &CellInstance) -> Result<PowerAllocation, PowerError> {
    monotonic_power_solve_with(inst, MonotonicOptions::default())
}

pub fn monotonic_power_solve_with(inst: &CellInstance, opts: MonotonicOptions) -> Result<PowerAllocation, PowerError> {
    if !inst.mu || inst.is_empty() {
        return Ok(inst.zero_allocation());
    }
    let n = inst.len();
    let budget = inst.p_budget_w;
    let m = Normalized::new(inst);
    // each user alone with the whole budget
    let t_min = exp2m1(m.rmin);
    if let Some(i) = (0..n).find(|&i| m.diag[i] < t_min) {
        return Err(PowerError::Infeasible { user: inst.column(i) });
    }
    let floor = min_power_for_rates(inst, &vec![inst.r_min_bps; n])
        .filter(|p| p.iter().sum::<f64>() <= budget)
        .ok_or(PowerError::Infeasible { user: inst.column(n - 1) })?;
    let floor: Vec<f64> = floor.iter().map(|p| p / budget).collect();

    let exact = min_power_for_rates(inst, &inst.demands_bps);
    if let Some(p) = &exact {
        if p.iter().sum::<f64>() <= budget {
            return Ok(finish(inst, p.clone()));
        }
    }

    let mut starts = vec![vec![1.0 / n as f64; n]];
    let spare = 1.0 - floor.iter().sum::<f64>();
    starts.push(floor.iter().map(|p| p + spare / n as f64).collect());
    for i in 0..n {
        let mut s = floor.clone();
        s[i] += spare;
        starts.push(s);
    }
    if let Some(p) = exact {
        let s: f64 = p.iter().sum();
        starts.push(p.iter().map(|x| x / s).collect());
    }
    let mut best: Option<(Vec<f64>, f64)> = None;
    for start in starts {
        let (x, f) = minimize_from(&m, start, opts);
        if best.as_ref().map_or(true, |b| f < b.1) {
            best = Some((x, f));
        }
    }
    let (mut x, _) = best.expect("at least one start");

    // shave power from users pushed beyond their demand
    for _ in 0..=n {
        let mut changed = false;
        for i in 0..n {
            if m.rate(&x, i) > m.d[i] * (1.0 + 1e-12) {
                x[i] = exp2m1(m.d[i]) * (1.0 + m.interference(&x, i)) / m.diag[i];
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    // restore the rate floor by blending toward the minimum-rate point
    let meets = |x: &[f64]| (0..n).all(|i| m.rate(x, i) >= m.rmin * (1.0 - 1e-9));
    if !meets(&x) {
        // exact powers for the current rates lifted to the floor, with the
        // surplus above the floor shrunk until the budget fits
        let rate_bps: Vec<f64> = (0..n).map(|i| m.rate(&x, i) * inst.bandwidth_hz).collect();
        let targets = |s: f64| -> Vec<f64> {
            rate_bps.iter().map(|&r| inst.r_min_bps + s * (r - inst.r_min_bps).max(0.0)).collect()
        };
        let fits = |s: f64| min_power_for_rates(inst, &targets(s)).filter(|p| p.iter().sum::<f64>() <= budget);
        let (mut lo, mut hi) = (0.0, 1.0);
        if fits(1.0).is_some() {
            lo = 1.0;
        } else {
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if fits(mid).is_some() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
        }
        let p = fits(lo).unwrap_or_else(|| floor.iter().map(|f| f * budget).collect());
        x = p.iter().map(|v| v / budget).collect();
    }
    let mut p: Vec<f64> = x.iter().map(|v| v * budget).collect();
    let total: f64 = p.iter().sum();
    if total > budget {
        for v in &mut p {
            *v *= budget / total;
        }
    }
    Ok(finish(inst, p))
}

fn finish(inst: &CellInstance, p: Vec<f64>) -> PowerAllocation {
    let n = inst.len();
    let p_max = vec![inst.p_budget_w; n];
    let (_, minus_max) = super::xi_decompose(inst, &p_max);
    let (_, minus) = super::xi_decompose(inst, &p);
    let aux = minus_max.iter().zip(&minus).map(|(a, b)| (a - b).max(0.0)).collect();
    let rates = rates(inst, &p);
    PowerAllocation { p, aux: Some(aux), rates }
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::super::{objective, CellInstance};
    use super::*;
    use rand::Rng;

    #[test]
    fn single_user_cap_binds() {
        let g = [1e-15];
        let inst = CellInstance::common_beam(&g, &[5e9], params(100.0));
        let a = monotonic_power_solve(&inst).unwrap();
        assert!((a.p[0] - 100.0).abs() < 1e-9);
    }

    #[test]
    fn single_user_inversion() {
        let mut r = rng(31);
        for _ in 0..20 {
            let g = random_gains(&mut r, 1);
            let budget = r.gen_range(1.0..300.0);
            let p_hat = budget * r.gen_range(0.01..0.9);
            let d = 500e6 * libm::log2(1.0 + g[0] * p_hat / 2.511_886_431_509_58e-14);
            if d < 5e6 {
                continue;
            }
            let inst = CellInstance::common_beam(&g, &[d], params(budget));
            let a = monotonic_power_solve(&inst).unwrap();
            assert!((a.p[0] / p_hat - 1.0).abs() < 5e-3);
        }
    }

    #[test]
    fn infeasible_user_named() {
        let mut inst = CellInstance::common_beam(&[1e-14, 1e-30], &[1e8, 1e8], params(1.0));
        inst.order = vec![4, 9];
        assert_eq!(monotonic_power_solve(&inst), Err(PowerError::Infeasible { user: 9 }));
    }

    fn grid_optimum(inst: &CellInstance, steps: usize) -> f64 {
        let mut best = f64::MAX;
        let pb = inst.p_budget_w;
        for i in 0..=steps {
            for j in 0..=(steps - i) {
                let p = [pb * i as f64 / steps as f64, pb * j as f64 / steps as f64];
                let r = rates(inst, &p);
                if r.iter().all(|&x| x >= inst.r_min_bps) {
                    best = best.min(objective(inst, &r));
                }
            }
        }
        best
    }

    #[test]
    fn matches_grid_oracle() {
        let mut r = rng(41);
        let mut checked = 0;
        while checked < 20 {
            let c = random_coupling(&mut r, 2);
            let d = vec![r.gen_range(3e8..2e9), r.gen_range(3e8..2e9)];
            let mut inst = instance_from(c, d, params(r.gen_range(0.5..50.0)));
            inst.kappa = r.gen_range(0.0..0.1);
            let Ok(a) = monotonic_power_solve(&inst) else { continue };
            let oracle = grid_optimum(&inst, 200);
            if oracle == f64::MAX || oracle < 1e10 {
                continue;
            }
            let got = objective(&inst, &a.rates);
            assert!(got <= 1.01 * oracle, "{got} vs {oracle}");
            assert!(a.total_power() <= inst.p_budget_w + 1e-9);
            checked += 1;
        }
    }

    #[test]
    fn aux_within_box() {
        let mut r = rng(51);
        let c = random_coupling(&mut r, 3);
        let inst = instance_from(c, vec![1e9, 8e8, 6e8], params(20.0));
        let a = monotonic_power_solve(&inst).unwrap();
        let aux = a.aux.unwrap();
        let (_, at_max) = super::super::xi_decompose(&inst, &[20.0; 3]);
        let (_, at_zero) = super::super::xi_decompose(&inst, &[0.0; 3]);
        for i in 0..3 {
            assert!(aux[i] >= 0.0 && aux[i] <= at_max[i] - at_zero[i] + 1e-6);
        }
    }
}
