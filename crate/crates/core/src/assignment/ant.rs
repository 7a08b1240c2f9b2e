//! Ant-colony search over whole assignment plans.
//!
//! One ant per satellite walks through the slots, at each step choosing a
//! cell that is neither taken by another ant in the same slot nor covered
//! earlier. A colony is the set of all `M` ants and yields one complete
//! plan. The iteration-best colony deposits pheromone on its edges and the
//! best plan ever seen is retained.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{AssignmentError, AssignmentPlan};
use crate::math::powf;
use crate::scenario::AntParams;

/// Floor applied to pheromone values when sampling.
const SAMPLING_FLOOR: f64 = 1e-9;

/// `P(k) ∝ ι_k^{s1} ℓ_k^{s2}` over candidate cells, zero elsewhere.
pub fn transition_probability(
    weights: &[f64],
    pheromones: &[f64],
    s1: f64,
    s2: f64,
    candidates: &[bool],
) -> Result<Vec<f64>, AssignmentError> {
    let mut out: Vec<f64> = (0..weights.len())
        .map(|k| if candidates[k] { powf(weights[k], s1) * powf(pheromones[k], s2) } else { 0.0 })
        .collect();
    let total: f64 = out.iter().sum();
    if !candidates.iter().any(|&c| c) {
        return Err(AssignmentError::NoCandidates);
    }
    if !(total > 0.0 && total.is_finite()) {
        // every score underflowed: fall back to uniform over candidates
        let n = candidates.iter().filter(|&&c| c).count() as f64;
        for (o, &c) in out.iter_mut().zip(candidates) {
            *o = if c { 1.0 / n } else { 0.0 };
        }
        return Ok(out);
    }
    for o in &mut out {
        *o /= total;
    }
    Ok(out)
}

/// Pheromone on edge `(sat, from, to)`; `from == num_cells` is the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PheromoneTable {
    pub num_cells: usize,
    pub max_pheromone: f64,
    pub values: Vec<f64>,
}

impl PheromoneTable {
    pub fn new(num_sats: usize, num_cells: usize, initial: f64, max_pheromone: f64) -> Self {
        Self {
            num_cells,
            max_pheromone,
            values: vec![initial.clamp(0.0, max_pheromone); num_sats * (num_cells + 1) * num_cells],
        }
    }

    pub fn origin(&self) -> usize {
        self.num_cells
    }

    fn index(&self, sat: usize, from: usize, to: usize) -> usize {
        (sat * (self.num_cells + 1) + from) * self.num_cells + to
    }

    pub fn get(&self, sat: usize, from: usize, to: usize) -> f64 {
        self.values[self.index(sat, from, to)]
    }

    /// Row of pheromones leaving `from` for satellite `sat`.
    pub fn row(&self, sat: usize, from: usize) -> &[f64] {
        let start = self.index(sat, from, 0);
        &self.values[start..start + self.num_cells]
    }
}

/// `ℓ ← (1 - τ) ℓ + Δℓ` on every edge, clamped to `[0, ℓ_max]`.
/// Contributions to the same edge add up.
pub fn update_pheromone(table: &mut PheromoneTable, deposits: &[(usize, usize, usize, f64)], tau: f64) {
    for v in &mut table.values {
        *v *= 1.0 - tau;
    }
    for &(sat, from, to, delta) in deposits {
        let i = table.index(sat, from, to);
        table.values[i] += delta;
    }
    let cap = table.max_pheromone;
    for v in &mut table.values {
        *v = v.clamp(0.0, cap);
    }
}

/// Search inputs, flattened as `[slot][sat][cell]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AntInput {
    pub horizon: usize,
    pub num_sats: usize,
    pub num_cells: usize,
    /// Route weights `ι > 0`.
    pub weights: Vec<f64>,
    /// Objective gap contributed when the satellite serves the cell in that
    /// slot.
    pub cost: Vec<f64>,
    /// Normalizer for utilities, typically `Σ D_i²`.
    pub scale: f64,
}

impl AntInput {
    fn at(&self, slot: usize, sat: usize) -> usize {
        (slot * self.num_sats + sat) * self.num_cells
    }

    pub fn weight(&self, slot: usize, sat: usize, cell: usize) -> f64 {
        self.weights[self.at(slot, sat) + cell]
    }

    pub fn cost_of(&self, slot: usize, sat: usize, cell: usize) -> f64 {
        self.cost[self.at(slot, sat) + cell]
    }

    pub fn plan_cost(&self, plan: &AssignmentPlan) -> f64 {
        plan.assignments().map(|(t, m, k)| self.cost_of(t, m, k)).sum()
    }

    fn utility(&self, cost: f64) -> f64 {
        1.0 / (1.0 + cost / self.scale.max(f64::MIN_POSITIVE))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AntColonyOutcome {
    pub plan: AssignmentPlan,
    pub best_cost: f64,
    /// Best utility seen after each iteration.
    pub utility_trace: Vec<f64>,
}

fn sample<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (k, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = k;
            if u < acc {
                return k;
            }
        }
    }
    last
}

fn build_colony<R: Rng + ?Sized>(
    input: &AntInput,
    table: &PheromoneTable,
    params: &AntParams,
    rng: &mut R,
) -> Result<AssignmentPlan, AssignmentError> {
    let (h, m, k) = (input.horizon, input.num_sats, input.num_cells);
    let mut plan = AssignmentPlan::empty(h, m);
    let mut covered = vec![false; k];
    let mut position = vec![table.origin(); m];
    let mut order: Vec<usize> = (0..m).collect();
    let mut weights = vec![0.0; k];
    let mut pher = vec![0.0; k];
    for t in 0..h {
        let mut candidates: Vec<bool> = covered.iter().map(|&c| !c).collect();
        if !candidates.iter().any(|&c| c) {
            break;
        }
        order.shuffle(rng);
        for &sat in &order {
            if !candidates.iter().any(|&c| c) {
                break;
            }
            for cell in 0..k {
                weights[cell] = input.weight(t, sat, cell);
                pher[cell] = table.get(sat, position[sat], cell).max(SAMPLING_FLOOR);
            }
            let probs = transition_probability(&weights, &pher, params.s1, params.s2, &candidates)?;
            let cell = sample(&probs, rng);
            candidates[cell] = false;
            covered[cell] = true;
            position[sat] = cell;
            plan.set(sat, t, Some(cell));
        }
    }
    Ok(plan)
}

pub fn ant_colony_plan<R: Rng + ?Sized>(
    input: &AntInput,
    params: &AntParams,
    rng: &mut R,
) -> Result<AntColonyOutcome, AssignmentError> {
    if input.horizon * input.num_sats < input.num_cells {
        return Err(AssignmentError::HorizonTooShort {
            cells: input.num_cells,
            sats: input.num_sats,
            horizon: input.horizon,
        });
    }
    let mut table = PheromoneTable::new(input.num_sats, input.num_cells, 1.0, params.max_pheromone);
    let mut best: Option<(AssignmentPlan, f64)> = None;
    let mut trace = Vec::with_capacity(params.max_iters);
    for _ in 0..params.max_iters {
        let mut iter_best: Option<(AssignmentPlan, f64)> = None;
        for _ in 0..params.colony_size {
            let plan = build_colony(input, &table, params, rng)?;
            let cost = input.plan_cost(&plan);
            if iter_best.as_ref().map_or(true, |b| cost < b.1) {
                iter_best = Some((plan, cost));
            }
        }
        let (plan, cost) = iter_best.expect("colony_size >= 1");
        let mut deposits = Vec::new();
        for sat in 0..input.num_sats {
            // each path deposits in proportion to its own relative gap
            let mut from = table.origin();
            let mut path_cost = 0.0;
            let mut edges = Vec::new();
            for t in 0..input.horizon {
                if let Some(cell) = plan.get(sat, t) {
                    path_cost += input.cost_of(t, sat, cell);
                    edges.push((from, cell));
                    from = cell;
                }
            }
            let u = input.utility(path_cost * input.num_sats as f64);
            deposits.extend(edges.into_iter().map(|(f, c)| (sat, f, c, u)));
        }
        update_pheromone(&mut table, &deposits, params.tau);
        if best.as_ref().map_or(true, |b| cost < b.1) {
            best = Some((plan, cost));
        }
        trace.push(input.utility(best.as_ref().map_or(f64::MAX, |b| b.1)));
    }
    let (plan, best_cost) = best.expect("max_iters >= 1");
    Ok(AntColonyOutcome { plan, best_cost, utility_trace: trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Stream, TrialRng};
    use alloc::collections::BTreeSet;
    use proptest::prelude::{prop_assert, proptest};

    fn params(colony: usize, iters: usize) -> AntParams {
        AntParams { colony_size: colony, max_iters: iters, ..Default::default() }
    }

    fn random_input(rng: &mut TrialRng, m: usize, k: usize) -> AntInput {
        let h = k.div_ceil(m);
        let n = h * m * k;
        AntInput {
            horizon: h,
            num_sats: m,
            num_cells: k,
            weights: (0..n).map(|_| rng.gen_range(0.1..1.0)).collect(),
            cost: (0..n).map(|_| rng.gen_range(0.0..10.0)).collect(),
            scale: 10.0 * k as f64,
        }
    }

    #[test]
    fn probability_examples() {
        let p = transition_probability(&[1.0, 1.0], &[1.0, 1.0], 1.0, 2.0, &[true, true]).unwrap();
        assert_eq!(p, [0.5, 0.5]);
        let p = transition_probability(&[2.0, 1.0], &[1.0, 1.0], 1.0, 1.0, &[true, true]).unwrap();
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-15 && (p[1] - 1.0 / 3.0).abs() < 1e-15);
        let p = transition_probability(&[2.0, 1.0, 5.0], &[1.0; 3], 1.0, 1.0, &[true, true, false]).unwrap();
        assert_eq!(p[2], 0.0);
        assert!(transition_probability(&[1.0], &[1.0], 1.0, 1.0, &[false]).is_err());
    }

    proptest! {
        #[test]
        fn probabilities_normalized(w in proptest::collection::vec(0.01f64..10.0, 1..20), seed in 0u64..1000) {
            let mut rng = TrialRng::new(seed, 0, Stream::AntColony);
            let l: Vec<f64> = w.iter().map(|_| rng.gen_range(0.01..10.0)).collect();
            let mut c: Vec<bool> = w.iter().map(|_| rng.gen_bool(0.6)).collect();
            c[0] = true;
            let p = transition_probability(&w, &l, 1.0, 2.0, &c).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(p.iter().all(|&x| x >= 0.0));
        }

        #[test]
        fn pheromones_stay_in_range(ops in proptest::collection::vec((0usize..2, 0usize..4, 0usize..3, 0.0f64..50.0), 0..40), tau in 0.01f64..0.99) {
            let mut t = PheromoneTable::new(2, 3, 1.0, 10.0);
            for chunk in ops.chunks(5) {
                update_pheromone(&mut t, chunk, tau);
                prop_assert!(t.values.iter().all(|&v| (0.0..=10.0).contains(&v)));
            }
        }
    }

    #[test]
    fn pheromone_update_examples() {
        let mut t = PheromoneTable::new(1, 1, 1.0, 10.0);
        update_pheromone(&mut t, &[(0, 1, 0, 0.2)], 0.5);
        assert!((t.get(0, 1, 0) - 0.7).abs() < 1e-15);
        // untouched edge decays geometrically
        assert!((t.get(0, 0, 0) - 0.5).abs() < 1e-15);
        update_pheromone(&mut t, &[(0, 1, 0, 1e9)], 0.5);
        assert_eq!(t.get(0, 1, 0), 10.0);
    }

    #[test]
    fn randomized_plans_are_valid_and_trace_monotone() {
        let mut rng = TrialRng::new(77, 0, Stream::AntColony);
        for _ in 0..200 {
            let m = rng.gen_range(1..5);
            let k = rng.gen_range(1..13);
            let input = random_input(&mut rng, m, k);
            let out = ant_colony_plan(&input, &params(3, 4), &mut rng).unwrap();
            out.plan.validate(k).unwrap();
            assert!(out.utility_trace.windows(2).all(|w| w[1] >= w[0]));
            assert_eq!(out.best_cost, input.plan_cost(&out.plan));
        }
    }

    #[test]
    fn converges_to_preferred_order() {
        // M = 1, K = 2: serving 0 then 1 is cheap, the reverse is expensive
        let input = AntInput {
            horizon: 2,
            num_sats: 1,
            num_cells: 2,
            weights: vec![1.0; 4],
            cost: vec![0.0, 5.0, 5.0, 0.0],
            scale: 10.0,
        };
        let out = ant_colony_plan(&input, &params(4, 200), &mut TrialRng::new(3, 0, Stream::AntColony)).unwrap();
        assert_eq!(out.plan.entries, vec![vec![Some(0)], vec![Some(1)]]);
    }

    #[test]
    fn single_colony_single_iteration_returns_sample() {
        let mut rng = TrialRng::new(5, 0, Stream::AntColony);
        let input = random_input(&mut rng, 2, 5);
        let out = ant_colony_plan(&input, &params(1, 1), &mut TrialRng::new(8, 1, Stream::AntColony)).unwrap();
        let table = PheromoneTable::new(2, 5, 1.0, 10.0);
        let direct = build_colony(&input, &table, &params(1, 1), &mut TrialRng::new(8, 1, Stream::AntColony)).unwrap();
        assert_eq!(out.plan, direct);
    }

    /// Every plan with per-slot distinct cells covering each cell once.
    fn enumerate_plans(m: usize, k: usize, h: usize) -> BTreeSet<Vec<Vec<Option<usize>>>> {
        let mut out = BTreeSet::new();
        let total = (k + 1).pow((m * h) as u32);
        for code in 0..total {
            let mut c = code;
            let mut entries = vec![vec![None; m]; h];
            for row in entries.iter_mut() {
                for e in row.iter_mut() {
                    let v = c % (k + 1);
                    c /= k + 1;
                    *e = if v == k { None } else { Some(v) };
                }
            }
            let plan = AssignmentPlan { horizon: h, num_satellites: m, entries: entries.clone() };
            if plan.validate(k).is_ok() {
                out.insert(entries);
            }
        }
        out
    }

    #[test]
    fn small_instance_matches_enumeration() {
        let valid = enumerate_plans(2, 4, 2);
        assert_eq!(valid.len(), 24);
        let mut rng = TrialRng::new(13, 0, Stream::AntColony);
        for _ in 0..50 {
            let input = random_input(&mut rng, 2, 4);
            let out = ant_colony_plan(&input, &params(2, 3), &mut rng).unwrap();
            assert!(valid.contains(&out.plan.entries));
        }
    }

    #[test]
    fn horizon_too_short() {
        let input = AntInput { horizon: 1, num_sats: 1, num_cells: 2, weights: vec![1.0; 2], cost: vec![0.0; 2], scale: 1.0 };
        assert!(matches!(
            ant_colony_plan(&input, &params(1, 1), &mut TrialRng::new(1, 0, Stream::AntColony)),
            Err(AssignmentError::HorizonTooShort { .. })
        ));
    }
}
