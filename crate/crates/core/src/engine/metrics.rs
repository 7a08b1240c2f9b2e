//! Aggregate metrics of a solved plan.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{Scenario, SolutionReport};
use crate::math::log2;

/// Gap floor relative to `Σ D²` so the dB value stays finite.
const GAP_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// `Σ (R − D)²` over all users, in (bit/s)².
    pub objective_gap: f64,
    /// Objective gap relative to `Σ D²`, in dB.
    pub objective_gap_db: f64,
    /// Mean of `min(R/D, 1)`.
    pub satisfaction_ratio: f64,
    /// Per satellite: the best worst-user satisfaction over the cells it
    /// served, `None` for idle satellites.
    pub per_satellite_min_satisfaction: Vec<Option<f64>>,
    /// Worst of the per-satellite values.
    pub min_sat_satisfaction: f64,
    /// `Σ min(R, D)`.
    pub total_capacity_bps: f64,
    /// `Σ max(D − R, 0)`.
    pub total_gap_bps: f64,
    /// `Σ min(R, D)/D`.
    pub satisfied_sum: f64,
    /// Sum over satellites of spectral efficiency per watt.
    pub energy_efficiency: f64,
    pub infeasible_cells: usize,
}

pub fn compute_metrics(report: &SolutionReport, scenario: &Scenario) -> MetricsReport {
    let rates = &report.user_rates_bps;
    let demands = &report.user_demands_bps;
    let n = rates.len().max(1) as f64;
    let objective_gap: f64 = rates.iter().zip(demands).map(|(r, d)| (r - d) * (r - d)).sum();
    let scale = scenario.total_demand_sq().max(f64::MIN_POSITIVE);
    let objective_gap_db = 10.0 * libm::log10((objective_gap / scale).max(GAP_FLOOR));
    let sat = |r: f64, d: f64| if d > 0.0 { (r / d).min(1.0) } else { 1.0 };
    let satisfaction_ratio = rates.iter().zip(demands).map(|(&r, &d)| sat(r, d)).sum::<f64>() / n;
    let total_capacity_bps = rates.iter().zip(demands).map(|(r, d)| r.min(*d)).sum();
    let total_gap_bps = rates.iter().zip(demands).map(|(r, d)| (d - r).max(0.0)).sum();
    let satisfied_sum = rates.iter().zip(demands).map(|(&r, &d)| sat(r, d)).sum();

    let m = scenario.constellation.len();
    let mut per_sat: Vec<Option<f64>> = vec![None; m];
    let mut spectral = vec![0.0; m];
    let mut power = vec![0.0; m];
    for c in &report.cells {
        let worst = c
            .rates_bps
            .iter()
            .zip(&c.demands_bps)
            .map(|(&r, &d)| sat(r, d))
            .fold(1.0f64, f64::min);
        let slot = &mut per_sat[c.sat_id];
        *slot = Some(slot.map_or(worst, |v| v.max(worst)));
        spectral[c.sat_id] += c.sinr.iter().map(|g| log2(1.0 + g)).sum::<f64>();
        power[c.sat_id] += c.powers_w.iter().sum::<f64>();
    }
    let min_sat_satisfaction = per_sat.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let energy_efficiency = spectral.iter().zip(&power).filter(|(_, &p)| p > 0.0).map(|(s, p)| s / p).sum();
    MetricsReport {
        objective_gap,
        objective_gap_db,
        satisfaction_ratio,
        per_satellite_min_satisfaction: per_sat,
        min_sat_satisfaction: if min_sat_satisfaction.is_finite() { min_sat_satisfaction } else { 0.0 },
        total_capacity_bps,
        total_gap_bps,
        satisfied_sum,
        energy_efficiency,
        infeasible_cells: report.infeasible_cells,
    }
}
