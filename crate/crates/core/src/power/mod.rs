//! SINR and rate evaluation for one NOMA cell, and the power solvers.
//!
//! A [`CellInstance`] stores everything in decode order: position `0` is the
//! strongest user by effective gain `|h_i^H v_i|²`. The coupling matrix holds
//! `c_ij = |h_i^H v_j|²` for unit beam directions `v_j`, so the received
//! power of stream `j` at user `i` is `c_ij p_j`.

use alloc::vec::Vec;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelMatrix;
use crate::math::inner;
use crate::scenario::DecodeOrder;

pub mod cascade;
pub mod expcone;
pub mod monotonic;
pub mod oma;
pub mod rate;

pub use cascade::{budget_lhs, cascade_powers, min_power_for_rates};
pub use expcone::expcone_power_solve;
pub use monotonic::monotonic_power_solve;
pub use oma::oma_power_solve;
pub use rate::{achievable_rate, objective, rates, sinr, xi_decompose};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PowerError {
    /// `user` is the column index of the user that cannot reach `r_min`.
    #[error("minimum rate infeasible for user {user}")]
    Infeasible { user: usize },
    #[error("unsupported mode: {0}")]
    Unsupported(&'static str),
    #[error("effective gains are not in descending order")]
    UnorderedGains,
}

/// Cell-wide scalars shared by every user of an instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceParams {
    pub bandwidth_hz: f64,
    pub noise_w: f64,
    pub p_budget_w: f64,
    pub r_min_bps: f64,
    pub kappa: f64,
    pub decode_order: DecodeOrder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellInstance {
    /// `coupling[i][j] = |h_i^H v_j|²`, decode order on both axes.
    pub coupling: Vec<Vec<f64>>,
    /// Decode position → column index in the originating channel matrix.
    pub order: Vec<usize>,
    pub demands_bps: Vec<f64>,
    /// Multipliers on `(R_i - D_i)²` in the objective.
    pub weights: Vec<f64>,
    pub bandwidth_hz: f64,
    pub noise_w: f64,
    pub p_budget_w: f64,
    pub r_min_bps: f64,
    pub kappa: f64,
    pub mu: bool,
    pub decode_order: DecodeOrder,
}

impl CellInstance {
    /// Instance from channels and unit beam directions (both in column
    /// order). Users are sorted by descending effective gain, ties by column.
    pub fn from_beams(
        channels: &ChannelMatrix,
        directions: &[Vec<Complex64>],
        demands_bps: &[f64],
        params: InstanceParams,
    ) -> Self {
        let n = channels.len();
        let full: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| inner(&channels.columns[i].h, &directions[j]).norm_sqr()).collect())
            .collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| full[b][b].total_cmp(&full[a][a]).then(a.cmp(&b)));
        let coupling = order.iter().map(|&i| order.iter().map(|&j| full[i][j]).collect()).collect();
        let demands = order.iter().map(|&i| demands_bps[i]).collect();
        Self::assemble(coupling, order, demands, params)
    }

    /// Every stream reaches user `i` with the same gain `g_i`, as when all
    /// users share one beam. `gains` must already be in decode order.
    pub fn common_beam(gains: &[f64], demands_bps: &[f64], params: InstanceParams) -> Self {
        let n = gains.len();
        let coupling = gains.iter().map(|&g| alloc::vec![g; n]).collect();
        Self::assemble(coupling, (0..n).collect(), demands_bps.to_vec(), params)
    }

    /// Diagonal coupling: no intra-cell interference at all.
    pub fn orthogonal(gains: &[f64], demands_bps: &[f64], params: InstanceParams) -> Self {
        let n = gains.len();
        let coupling = (0..n)
            .map(|i| (0..n).map(|j| if i == j { gains[i] } else { 0.0 }).collect())
            .collect();
        Self::assemble(coupling, (0..n).collect(), demands_bps.to_vec(), params)
    }

    fn assemble(coupling: Vec<Vec<f64>>, order: Vec<usize>, demands_bps: Vec<f64>, params: InstanceParams) -> Self {
        let n = demands_bps.len();
        Self {
            coupling,
            order,
            demands_bps,
            weights: alloc::vec![1.0; n],
            bandwidth_hz: params.bandwidth_hz,
            noise_w: params.noise_w,
            p_budget_w: params.p_budget_w,
            r_min_bps: params.r_min_bps,
            kappa: params.kappa,
            mu: true,
            decode_order: params.decode_order,
        }
    }

    pub fn len(&self) -> usize {
        self.demands_bps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demands_bps.is_empty()
    }

    /// Effective gains `c_ii` in decode order.
    pub fn gains(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.coupling[i][i]).collect()
    }

    /// Weight with which stream `j` interferes at user `i`.
    pub fn interference_weight(&self, i: usize, j: usize) -> f64 {
        let full_side = match self.decode_order {
            DecodeOrder::AsPrinted => j < i,
            DecodeOrder::Reversed => j > i,
        };
        if i == j {
            0.0
        } else if full_side {
            1.0
        } else {
            self.kappa
        }
    }

    /// Column index of the user at decode position `pos`.
    pub fn column(&self, pos: usize) -> usize {
        self.order[pos]
    }

    /// Scatter a decode-order vector back into column order.
    pub fn to_columns(&self, values: &[f64]) -> Vec<f64> {
        let mut out = alloc::vec![0.0; values.len()];
        for (pos, &v) in values.iter().enumerate() {
            out[self.order[pos]] = v;
        }
        out
    }

    /// Gather a column-order vector into decode order.
    pub fn from_columns(&self, values: &[f64]) -> Vec<f64> {
        self.order.iter().map(|&c| values[c]).collect()
    }

    pub fn zero_allocation(&self) -> PowerAllocation {
        let n = self.len();
        PowerAllocation { p: alloc::vec![0.0; n], aux: None, rates: alloc::vec![0.0; n] }
    }
}

/// Powers and rates in decode order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    pub p: Vec<f64>,
    /// Auxiliary variables of the monotonic solver.
    pub aux: Option<Vec<f64>>,
    pub rates: Vec<f64>,
}

impl PowerAllocation {
    pub fn total_power(&self) -> f64 {
        self.p.iter().sum()
    }
}

/// Equal split of the budget, evaluated without optimization.
pub fn equal_power(inst: &CellInstance) -> PowerAllocation {
    if !inst.mu || inst.is_empty() {
        return inst.zero_allocation();
    }
    let p = alloc::vec![inst.p_budget_w / inst.len() as f64; inst.len()];
    let rates = rates(inst, &p);
    PowerAllocation { p, aux: None, rates }
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use crate::rng::{Stream, TrialRng};
    use rand::Rng;

    pub fn params(budget: f64) -> InstanceParams {
        InstanceParams {
            bandwidth_hz: 500e6,
            noise_w: 2.511_886_431_509_58e-14,
            p_budget_w: budget,
            r_min_bps: 5e6,
            kappa: 0.0,
            decode_order: DecodeOrder::AsPrinted,
        }
    }

    pub fn rng(seed: u64) -> TrialRng {
        TrialRng::new(seed, 0, Stream::Users)
    }

    /// Gains in decode order spanning a realistic range, descending.
    pub fn random_gains(rng: &mut TrialRng, n: usize) -> Vec<f64> {
        let mut g: Vec<f64> = (0..n).map(|_| libm::pow(10.0, rng.gen_range(-17.0..-13.0))).collect();
        g.sort_by(|a, b| b.total_cmp(a));
        g
    }

    /// Random full coupling with dominant diagonal, decode-ordered.
    pub fn random_coupling(rng: &mut TrialRng, n: usize) -> Vec<Vec<f64>> {
        let g = random_gains(rng, n);
        (0..n)
            .map(|i| (0..n).map(|j| if i == j { g[i] } else { g[i] * rng.gen_range(0.0..0.6) }).collect())
            .collect()
    }

    pub fn instance_from(coupling: Vec<Vec<f64>>, demands: Vec<f64>, p: InstanceParams) -> CellInstance {
        let n = demands.len();
        let mut inst = CellInstance::common_beam(&alloc::vec![1.0; n], &demands, p);
        inst.coupling = coupling;
        inst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelVector;
    use alloc::vec;

    #[test]
    fn from_beams_orders_by_effective_gain() {
        let c = |re: f64| Complex64::new(re, 0.0);
        let cols = vec![
            ChannelVector::new(0, vec![c(1.0), c(0.0)], 0),
            ChannelVector::new(1, vec![c(0.0), c(3.0)], 0),
        ];
        let m = ChannelMatrix::new(0, 0, cols);
        let dirs = vec![vec![c(1.0), c(0.0)], vec![c(0.0), c(1.0)]];
        let inst = CellInstance::from_beams(&m, &dirs, &[1e8, 2e8], testutil::params(1.0));
        assert_eq!(inst.order, [1, 0]);
        assert_eq!(inst.gains(), [9.0, 1.0]);
        assert_eq!(inst.demands_bps, [2e8, 1e8]);
        assert_eq!(inst.coupling[0][1], 0.0);
        assert_eq!(inst.to_columns(&[5.0, 6.0]), [6.0, 5.0]);
        assert_eq!(inst.from_columns(&[6.0, 5.0]), [5.0, 6.0]);
    }

    #[test]
    fn interference_weights() {
        let mut inst = CellInstance::common_beam(&[3.0, 2.0, 1.0], &[1.0; 3], testutil::params(1.0));
        inst.kappa = 0.1;
        assert_eq!(inst.interference_weight(1, 0), 1.0);
        assert_eq!(inst.interference_weight(1, 2), 0.1);
        assert_eq!(inst.interference_weight(1, 1), 0.0);
        inst.decode_order = DecodeOrder::Reversed;
        assert_eq!(inst.interference_weight(1, 0), 0.1);
        assert_eq!(inst.interference_weight(1, 2), 1.0);
    }

    #[test]
    fn equal_power_splits_budget() {
        let inst = CellInstance::common_beam(&[3e-14, 1e-14], &[1e8, 1e8], testutil::params(10.0));
        let a = equal_power(&inst);
        assert_eq!(a.p, [5.0, 5.0]);
        let mut off = inst.clone();
        off.mu = false;
        assert_eq!(equal_power(&off).rates, [0.0, 0.0]);
    }
}
