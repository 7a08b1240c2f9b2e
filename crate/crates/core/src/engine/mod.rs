//! End-to-end strategies: assignment, per-cell beam/power iteration and
//! metrics.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::assignment::{
    ant_colony_plan, distance_preferences, doppler_plan, AntInput, AssignmentError, AssignmentPlan,
};
use crate::beamform::{
    color_partition, per_user_beams, single_element_beams, spot_beam, BeamMatrix, BeamMode, ColorMode,
};
use crate::channel::{user_channel, ChannelMatrix, ChannelVector, RadioParams};
use crate::constellation::{slant_geometry, Constellation, SatelliteState};
use crate::math::rel_diff;
use crate::power::monotonic::{monotonic_power_solve_with, MonotonicOptions};
use crate::power::{
    equal_power, expcone_power_solve, oma_power_solve, rates as eval_rates, sinr as eval_sinr, CellInstance,
    InstanceParams, PowerAllocation, PowerError,
};
use crate::rng::{Stream, TrialRng};
use crate::scenario::{build_cells, spawn_users, Cell, ConfigError, ScenarioConfig, User};

pub mod metrics;

pub use metrics::{compute_metrics, MetricsReport};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Assignment(#[from] AssignmentError),
    #[error("unsupported: {0}")]
    Unsupported(&'static str),
    #[error("unknown strategy name `{0}`")]
    UnknownStrategy(String),
    #[error("fixed-plan strategy needs a plan")]
    MissingPlan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AssignKind {
    Doppler,
    Ant,
    FixedPlan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PowerKind {
    Monotonic,
    Expcone,
    Oma,
    Equal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BeamKind {
    PerUserBf,
    Spot,
    Color(ColorMode),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ObjectiveKind {
    Scheme1Gap,
    Scheme2Ratio,
}

/// A complete algorithm choice. Names follow `X-yNOMA-Z`: `X` is the
/// assignment (`D` Doppler, `A` ant colony, `F` fixed plan), `y` the power
/// solver (`m` monotonic, `e` exponential cone, `u` uniform split) and `Z`
/// the beam variant (`BF`, `2c`, `4c`, `S` for the spot beam). `OMA-BF` is
/// the orthogonal baseline and a `-scheme2` suffix switches the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Strategy {
    pub assign: AssignKind,
    pub power: PowerKind,
    pub beam: BeamKind,
    pub objective: ObjectiveKind,
}

impl Strategy {
    pub const fn new(assign: AssignKind, power: PowerKind, beam: BeamKind) -> Self {
        Self { assign, power, beam, objective: ObjectiveKind::Scheme1Gap }
    }

    pub const D_M_NOMA_BF: Strategy = Strategy::new(AssignKind::Doppler, PowerKind::Monotonic, BeamKind::PerUserBf);
    pub const A_E_NOMA_BF: Strategy = Strategy::new(AssignKind::Ant, PowerKind::Expcone, BeamKind::PerUserBf);
    pub const A_M_NOMA_BF: Strategy = Strategy::new(AssignKind::Ant, PowerKind::Monotonic, BeamKind::PerUserBf);
    pub const D_E_NOMA_BF: Strategy = Strategy::new(AssignKind::Doppler, PowerKind::Expcone, BeamKind::PerUserBf);
    pub const OMA_BF: Strategy = Strategy::new(AssignKind::Doppler, PowerKind::Oma, BeamKind::PerUserBf);

    pub fn with_beam(self, beam: BeamKind) -> Self {
        Self { beam, ..self }
    }

    pub fn with_objective(self, objective: ObjectiveKind) -> Self {
        Self { objective, ..self }
    }

    /// Whether the strategy can run with the given residual SIC factor.
    pub fn check(&self, config: &ScenarioConfig) -> Result<(), EngineError> {
        if self.power == PowerKind::Expcone && config.ipsic_factor > 0.0 {
            return Err(EngineError::Unsupported("exponential-cone cascade cannot model imperfect SIC"));
        }
        if self.power == PowerKind::Oma && self.beam != BeamKind::PerUserBf {
            return Err(EngineError::Unsupported("the orthogonal baseline uses per-user beams"));
        }
        Ok(())
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let beam = match self.beam {
            BeamKind::PerUserBf => "BF",
            BeamKind::Spot => "S",
            BeamKind::Color(ColorMode::TwoColor) => "2c",
            BeamKind::Color(ColorMode::FourColor) => "4c",
        };
        let assign = match self.assign {
            AssignKind::Doppler => "D",
            AssignKind::Ant => "A",
            AssignKind::FixedPlan => "F",
        };
        match self.power {
            PowerKind::Oma if self.assign == AssignKind::Doppler => write!(f, "OMA-{beam}")?,
            PowerKind::Oma => write!(f, "{assign}-OMA-{beam}")?,
            p => {
                let c = match p {
                    PowerKind::Monotonic => 'm',
                    PowerKind::Expcone => 'e',
                    _ => 'u',
                };
                write!(f, "{assign}-{c}NOMA-{beam}")?;
            }
        }
        if self.objective == ObjectiveKind::Scheme2Ratio {
            f.write_str("-scheme2")?;
        }
        Ok(())
    }
}

impl FromStr for Strategy {
    type Err = EngineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || EngineError::UnknownStrategy(s.into());
        let (body, objective) = match s.strip_suffix("-scheme2") {
            Some(b) => (b, ObjectiveKind::Scheme2Ratio),
            None => (s, ObjectiveKind::Scheme1Gap),
        };
        let parts: Vec<&str> = body.split('-').collect();
        let beam_of = |t: &str| match t {
            "BF" => Some(BeamKind::PerUserBf),
            "S" => Some(BeamKind::Spot),
            "2c" => Some(BeamKind::Color(ColorMode::TwoColor)),
            "4c" => Some(BeamKind::Color(ColorMode::FourColor)),
            _ => None,
        };
        let assign_of = |t: &str| match t {
            "D" => Some(AssignKind::Doppler),
            "A" => Some(AssignKind::Ant),
            "F" => Some(AssignKind::FixedPlan),
            _ => None,
        };
        let strategy = match parts.as_slice() {
            ["OMA", beam] => Strategy::new(AssignKind::Doppler, PowerKind::Oma, beam_of(beam).ok_or_else(bad)?),
            [assign, "OMA", beam] => {
                Strategy::new(assign_of(assign).ok_or_else(bad)?, PowerKind::Oma, beam_of(beam).ok_or_else(bad)?)
            }
            [assign, power, beam] => {
                let p = match *power {
                    "mNOMA" => PowerKind::Monotonic,
                    "eNOMA" => PowerKind::Expcone,
                    "uNOMA" => PowerKind::Equal,
                    _ => return Err(bad()),
                };
                Strategy::new(assign_of(assign).ok_or_else(bad)?, p, beam_of(beam).ok_or_else(bad)?)
            }
            _ => return Err(bad()),
        };
        if strategy.power == PowerKind::Oma && strategy.beam != BeamKind::PerUserBf {
            return Err(bad());
        }
        Ok(strategy.with_objective(objective))
    }
}

/// One Monte-Carlo realization: cells, users and orbits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub trial: u64,
    pub cells: Vec<Cell>,
    pub users: Vec<User>,
    pub constellation: Constellation,
    /// User ids per cell.
    pub cell_users: Vec<Vec<usize>>,
}

impl Scenario {
    pub fn generate(config: &ScenarioConfig, trial: u64) -> Result<Self, EngineError> {
        config.validate()?;
        let cells = build_cells(config)?;
        let users = spawn_users(&cells, config, &mut TrialRng::new(config.seed, trial, Stream::Users));
        let constellation = Constellation::layout(config, &mut TrialRng::new(config.seed, trial, Stream::Constellation));
        let mut cell_users = vec![Vec::new(); cells.len()];
        for u in &users {
            cell_users[u.cell_id].push(u.user_id);
        }
        Ok(Self { config: config.clone(), trial, cells, users, constellation, cell_users })
    }

    pub fn total_demand_sq(&self) -> f64 {
        self.users.iter().map(|u| u.demand_bps * u.demand_bps).sum()
    }

    /// Channels of the users in `cell` as seen from `state`. Users below
    /// the satellite's horizon get a zero channel.
    pub fn cell_channels(&self, radio: &RadioParams, state: &SatelliteState, cell: usize) -> ChannelMatrix {
        let cols = self.cell_users[cell]
            .iter()
            .map(|&uid| {
                let u = &self.users[uid];
                let g = slant_geometry(state, u.lat_deg, u.lon_deg);
                user_channel(uid, &g, radio, state.slot_index).unwrap_or_else(|_| {
                    ChannelVector::new(uid, vec![Complex64::new(0.0, 0.0); radio.num_antennas], state.slot_index)
                })
            })
            .collect();
        ChannelMatrix::new(cell, state.slot_index, cols)
    }
}

/// How users of a cell share the spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CellLayout {
    /// Everyone on the full band; interference follows the coupling.
    Shared { bandwidth_hz: f64 },
    /// Interference only within a color; `colors` is in column order.
    Colors { colors: Vec<usize>, bandwidth_hz: f64 },
    /// Disjoint bandwidth shares, no interference.
    Orthogonal { bandwidth_hz: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSolution {
    pub slot: usize,
    pub sat_id: usize,
    pub cell_id: usize,
    pub channels: ChannelMatrix,
    pub layout: CellLayout,
    pub beams: BeamMatrix,
    /// Column order throughout.
    pub user_ids: Vec<usize>,
    pub demands_bps: Vec<f64>,
    pub powers_w: Vec<f64>,
    pub rates_bps: Vec<f64>,
    pub sinr: Vec<f64>,
    /// False when the minimum rate could not be met and the cell (or a
    /// color group in it) was left unserved.
    pub feasible: bool,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionReport {
    pub strategy: Strategy,
    pub plan: AssignmentPlan,
    pub cells: Vec<CellSolution>,
    /// Indexed by user id.
    pub user_rates_bps: Vec<f64>,
    pub user_demands_bps: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub infeasible_cells: usize,
}

fn instance_params(config: &ScenarioConfig, bandwidth_hz: f64, budget_w: f64) -> InstanceParams {
    InstanceParams {
        bandwidth_hz,
        noise_w: config.noise_w(),
        p_budget_w: budget_w,
        r_min_bps: config.min_rate_bps,
        kappa: config.ipsic_factor,
        decode_order: config.decode_order,
    }
}

fn set_weights(inst: &mut CellInstance, objective: ObjectiveKind) {
    if objective == ObjectiveKind::Scheme2Ratio {
        inst.weights = inst.demands_bps.iter().map(|d| 1.0 / (d * d)).collect();
    }
}

fn sub_matrix(channels: &ChannelMatrix, cols: &[usize]) -> ChannelMatrix {
    ChannelMatrix::new(channels.cell_id, channels.slot_index, cols.iter().map(|&c| channels.columns[c].clone()).collect())
}

/// Rates and SINRs (column order) of a cell under a layout, beams and
/// powers.
pub fn evaluate_cell(
    config: &ScenarioConfig,
    layout: &CellLayout,
    channels: &ChannelMatrix,
    directions: &[Vec<Complex64>],
    powers: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let n = channels.len();
    let demands = vec![0.0; n];
    match layout {
        CellLayout::Shared { bandwidth_hz } => {
            let inst = CellInstance::from_beams(channels, directions, &demands, instance_params(config, *bandwidth_hz, 1.0));
            let p = inst.from_columns(powers);
            (inst.to_columns(&eval_rates(&inst, &p)), inst.to_columns(&eval_sinr(&inst, &p)))
        }
        CellLayout::Orthogonal { bandwidth_hz } => {
            let inst = CellInstance::from_beams(channels, directions, &demands, instance_params(config, *bandwidth_hz, 1.0));
            let gains = inst.gains();
            let orth = CellInstance { order: inst.order.clone(), ..CellInstance::orthogonal(&gains, &inst.demands_bps, instance_params(config, *bandwidth_hz, 1.0)) };
            let p = orth.from_columns(powers);
            (orth.to_columns(&eval_rates(&orth, &p)), orth.to_columns(&eval_sinr(&orth, &p)))
        }
        CellLayout::Colors { colors, bandwidth_hz } => {
            let mut rates = vec![0.0; n];
            let mut sinr = vec![0.0; n];
            for color in 0..=colors.iter().copied().max().unwrap_or(0) {
                let cols: Vec<usize> = (0..n).filter(|&c| colors[c] == color).collect();
                if cols.is_empty() {
                    continue;
                }
                let sub = sub_matrix(channels, &cols);
                let dirs: Vec<_> = cols.iter().map(|&c| directions[c].clone()).collect();
                let d = vec![0.0; cols.len()];
                let inst = CellInstance::from_beams(&sub, &dirs, &d, instance_params(config, *bandwidth_hz, 1.0));
                let p_sub: Vec<f64> = cols.iter().map(|&c| powers[c]).collect();
                let p = inst.from_columns(&p_sub);
                let r = inst.to_columns(&eval_rates(&inst, &p));
                let s = inst.to_columns(&eval_sinr(&inst, &p));
                for (k, &c) in cols.iter().enumerate() {
                    rates[c] = r[k];
                    sinr[c] = s[k];
                }
            }
            (rates, sinr)
        }
    }
}

fn solve_power(inst: &CellInstance, kind: PowerKind, config: &ScenarioConfig) -> Result<PowerAllocation, PowerError> {
    match kind {
        PowerKind::Monotonic => monotonic_power_solve_with(
            inst,
            MonotonicOptions { tol: config.solver_params.tol, max_iters: config.solver_params.max_iters },
        ),
        PowerKind::Expcone => expcone_power_solve(inst),
        PowerKind::Equal => Ok(equal_power(inst)),
        PowerKind::Oma => oma_power_solve(inst),
    }
}

fn budget_for(config: &ScenarioConfig, kind: PowerKind) -> f64 {
    match kind {
        PowerKind::Monotonic => config.sat_power_w() * config.power_headroom_factor,
        _ => config.sat_power_w(),
    }
}

fn weighted_gap(objective: ObjectiveKind, rates: &[f64], demands: &[f64]) -> f64 {
    rates
        .iter()
        .zip(demands)
        .map(|(r, d)| {
            let g = (r - d) * (r - d);
            match objective {
                ObjectiveKind::Scheme1Gap => g,
                ObjectiveKind::Scheme2Ratio => g / (d * d),
            }
        })
        .sum()
}

/// Solve one served cell with the beam/power alternation.
pub fn solve_cell(
    config: &ScenarioConfig,
    strategy: &Strategy,
    channels: ChannelMatrix,
    demands_bps: Vec<f64>,
    sat_id: usize,
) -> CellSolution {
    let n = channels.len();
    let user_ids: Vec<usize> = channels.columns.iter().map(|c| c.user_id).collect();
    let budget = budget_for(config, strategy.power);
    let b = config.bandwidth_hz;
    let base = |layout: CellLayout, beams: BeamMatrix| CellSolution {
        slot: channels.slot_index,
        sat_id,
        cell_id: channels.cell_id,
        channels: channels.clone(),
        layout,
        beams,
        user_ids: user_ids.clone(),
        demands_bps: demands_bps.clone(),
        powers_w: vec![0.0; n],
        rates_bps: vec![0.0; n],
        sinr: vec![0.0; n],
        feasible: false,
        iterations: 0,
        converged: false,
    };
    if n == 0 {
        let mut s = base(CellLayout::Shared { bandwidth_hz: b }, per_user_beams(&channels, &[]));
        s.feasible = true;
        s.converged = true;
        return s;
    }

    match strategy.beam {
        BeamKind::Color(mode) => {
            let (colors, factor) = color_partition(&channels.order, mode);
            let bw = b * factor;
            let used = (0..mode.colors()).filter(|c| colors.contains(c)).count();
            let group_budget = budget / used as f64;
            let mut powers = vec![0.0; n];
            let mut feasible = true;
            let beams0 = single_element_beams(&channels, &vec![0.0; n]);
            for color in 0..mode.colors() {
                let cols: Vec<usize> = (0..n).filter(|&c| colors[c] == color).collect();
                if cols.is_empty() {
                    continue;
                }
                let sub = sub_matrix(&channels, &cols);
                let dirs: Vec<_> = cols.iter().map(|&c| beams0.directions[c].clone()).collect();
                let d: Vec<f64> = cols.iter().map(|&c| demands_bps[c]).collect();
                let mut inst = CellInstance::from_beams(&sub, &dirs, &d, instance_params(config, bw, group_budget));
                set_weights(&mut inst, strategy.objective);
                match solve_power(&inst, strategy.power, config) {
                    Ok(a) => {
                        let p = inst.to_columns(&a.p);
                        for (k, &c) in cols.iter().enumerate() {
                            powers[c] = p[k];
                        }
                    }
                    Err(_) => feasible = false,
                }
            }
            let layout = CellLayout::Colors { colors, bandwidth_hz: bw };
            let beams = beams0.with_powers(&powers);
            let (rates, sinr) = evaluate_cell(config, &layout, &channels, &beams.directions, &powers);
            let mut s = base(layout, beams);
            s.powers_w = powers;
            s.rates_bps = rates;
            s.sinr = sinr;
            s.feasible = feasible;
            s.iterations = 1;
            s.converged = true;
            s
        }
        BeamKind::PerUserBf | BeamKind::Spot => {
            let oma = strategy.power == PowerKind::Oma;
            let layout = if oma {
                CellLayout::Orthogonal { bandwidth_hz: b / n as f64 }
            } else {
                CellLayout::Shared { bandwidth_hz: b }
            };
            let make_beams = |p: &[f64]| match strategy.beam {
                BeamKind::Spot => spot_beam(&channels, p),
                _ => per_user_beams(&channels, p),
            };
            let mut p_cols = vec![budget / n as f64; n];
            let mut beams = make_beams(&p_cols);
            let mut best: Option<(f64, Vec<f64>, BeamMatrix)> = None;
            let mut prev_rates: Option<Vec<f64>> = None;
            let mut iterations = 0;
            let mut converged = false;
            let mut infeasible = false;
            for _ in 0..config.solver_params.outer_max_iters {
                iterations += 1;
                let bw = match layout {
                    CellLayout::Orthogonal { bandwidth_hz } | CellLayout::Shared { bandwidth_hz } => bandwidth_hz,
                    CellLayout::Colors { bandwidth_hz, .. } => bandwidth_hz,
                };
                let params = instance_params(config, bw, budget);
                let shared = CellInstance::from_beams(&channels, &beams.directions, &demands_bps, params);
                let mut inst = if oma {
                    let gains = shared.gains();
                    CellInstance { order: shared.order.clone(), ..CellInstance::orthogonal(&gains, &shared.demands_bps, params) }
                } else {
                    shared
                };
                set_weights(&mut inst, strategy.objective);
                let alloc = match solve_power(&inst, strategy.power, config) {
                    Ok(a) => a,
                    Err(_) => {
                        if best.is_none() {
                            infeasible = true;
                        }
                        break;
                    }
                };
                let p_new = inst.to_columns(&alloc.p);
                let candidate = make_beams(&p_new);
                // score with the beams that will actually be reported
                let (rates, _) = evaluate_cell(config, &layout, &channels, &candidate.directions, &p_new);
                let obj = weighted_gap(strategy.objective, &rates, &demands_bps);
                let improved = best.as_ref().map_or(true, |(o, _, _)| obj < *o);
                if !improved {
                    converged = true;
                    break;
                }
                best = Some((obj, p_new.clone(), candidate.clone()));
                let settled = prev_rates.as_ref().is_some_and(|prev| {
                    prev.iter().zip(&rates).all(|(a, r)| rel_diff(*a, *r, 1.0) < config.solver_params.outer_tol)
                });
                prev_rates = Some(rates);
                p_cols = p_new;
                beams = candidate;
                if settled {
                    converged = true;
                    break;
                }
            }
            let _ = p_cols;
            match best {
                Some((_, p, bm)) if !infeasible => {
                    let beams = bm.with_powers(&p);
                    let (rates, sinr) = evaluate_cell(config, &layout, &channels, &beams.directions, &p);
                    let mut s = base(layout, beams);
                    s.powers_w = p;
                    s.rates_bps = rates;
                    s.sinr = sinr;
                    s.feasible = true;
                    s.iterations = iterations;
                    s.converged = converged;
                    s
                }
                _ => {
                    let mut s = base(layout, make_beams(&vec![0.0; n]));
                    s.iterations = iterations;
                    s
                }
            }
        }
    }
}

/// Route weights and surrogate costs for the ant-colony planner.
pub fn ant_input(scenario: &Scenario) -> AntInput {
    let config = &scenario.config;
    let radio = RadioParams::from_config(config);
    let horizon = config.horizon_slots();
    let m = scenario.constellation.len();
    let k = scenario.cells.len();
    let mut weights = vec![0.0; horizon * m * k];
    let mut cost = vec![0.0; horizon * m * k];
    let mut surrogate_cfg = config.clone();
    surrogate_cfg.ipsic_factor = 0.0;
    let surrogate = Strategy::new(AssignKind::Doppler, PowerKind::Expcone, BeamKind::PerUserBf);
    let fallback = Strategy::new(AssignKind::Doppler, PowerKind::Equal, BeamKind::PerUserBf);
    for t in 0..horizon {
        let states = scenario.constellation.states(t);
        for (sat, state) in states.iter().enumerate() {
            let base = (t * m + sat) * k;
            let dists: Vec<f64> = scenario
                .cells
                .iter()
                .map(|c| slant_geometry(state, c.center_lat_deg, c.center_lon_deg))
                .map(|g| if g.visible { g.distance_m } else { f64::INFINITY })
                .collect();
            let dmin = dists.iter().copied().fold(f64::INFINITY, f64::min);
            for cell in 0..k {
                weights[base + cell] = if dists[cell].is_finite() { dmin / dists[cell] } else { 1e-6 };
                let channels = scenario.cell_channels(&radio, state, cell);
                let demands: Vec<f64> = scenario.cell_users[cell].iter().map(|&u| scenario.users[u].demand_bps).collect();
                let mut sol = solve_cell(&surrogate_cfg, &surrogate, channels.clone(), demands.clone(), sat);
                if !sol.feasible {
                    sol = solve_cell(&surrogate_cfg, &fallback, channels, demands.clone(), sat);
                }
                // shortfall only: the cascade model is conservative under
                // per-user beams, so overshoot says nothing about the pairing
                cost[base + cell] = sol.rates_bps.iter().zip(&demands).map(|(r, d)| (d - r).max(0.0).powi(2)).sum();
            }
        }
    }
    AntInput { horizon, num_sats: m, num_cells: k, weights, cost, scale: scenario.total_demand_sq() }
}

/// Plan for the strategy's assignment rule.
pub fn make_plan<R: Rng + ?Sized>(
    scenario: &Scenario,
    strategy: &Strategy,
    fixed: Option<&AssignmentPlan>,
    rng: &mut R,
) -> Result<AssignmentPlan, EngineError> {
    let plan = match strategy.assign {
        AssignKind::Doppler => doppler_plan(&scenario.config, &scenario.constellation, &scenario.cells)?,
        AssignKind::Ant => ant_colony_plan(&ant_input(scenario), &scenario.config.ant_params, rng)?.plan,
        AssignKind::FixedPlan => fixed.cloned().ok_or(EngineError::MissingPlan)?,
    };
    plan.validate(scenario.cells.len())?;
    Ok(plan)
}

/// Execute a strategy on a scenario. `rng` drives the ant colony only.
pub fn run<R: Rng + ?Sized>(
    scenario: &Scenario,
    strategy: &Strategy,
    fixed: Option<&AssignmentPlan>,
    rng: &mut R,
) -> Result<(SolutionReport, MetricsReport), EngineError> {
    strategy.check(&scenario.config)?;
    let plan = make_plan(scenario, strategy, fixed, rng)?;
    let report = solve_plan(scenario, strategy, plan);
    let metrics = compute_metrics(&report, scenario);
    Ok((report, metrics))
}

/// The orthogonal baseline with Doppler assignment.
pub fn run_oma_baseline<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> Result<(SolutionReport, MetricsReport), EngineError> {
    run(scenario, &Strategy::OMA_BF, None, rng)
}

/// Solve every served cell of a fixed plan.
pub fn solve_plan(scenario: &Scenario, strategy: &Strategy, plan: AssignmentPlan) -> SolutionReport {
    let config = &scenario.config;
    let radio = RadioParams::from_config(config);
    let mut cells = Vec::new();
    let mut user_rates = vec![0.0; scenario.users.len()];
    for t in 0..plan.horizon {
        let states = scenario.constellation.states(t);
        for (sat, state) in states.iter().enumerate() {
            let Some(cell) = plan.get(sat, t) else { continue };
            let channels = scenario.cell_channels(&radio, state, cell);
            let demands: Vec<f64> = scenario.cell_users[cell].iter().map(|&u| scenario.users[u].demand_bps).collect();
            let sol = solve_cell(config, strategy, channels, demands, sat);
            for (&uid, &r) in sol.user_ids.iter().zip(&sol.rates_bps) {
                user_rates[uid] = r;
            }
            cells.push(sol);
        }
    }
    let iterations = cells.iter().map(|c| c.iterations).max().unwrap_or(0);
    let converged = cells.iter().all(|c| c.converged || !c.feasible);
    let infeasible_cells = cells.iter().filter(|c| !c.feasible).count();
    SolutionReport {
        strategy: *strategy,
        plan,
        cells,
        user_rates_bps: user_rates,
        user_demands_bps: scenario.users.iter().map(|u| u.demand_bps).collect(),
        iterations,
        converged,
        infeasible_cells,
    }
}

/// Ranked cell preferences for debugging dumps.
pub fn slot_preferences(scenario: &Scenario, slot: usize) -> Vec<Vec<usize>> {
    distance_preferences(&scenario.constellation, &scenario.cells, slot, &vec![true; scenario.cells.len()])
}

/// Human-readable label of a beam mode.
pub fn beam_mode_label(mode: BeamMode) -> String {
    format!("{mode:?}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::log2;
    use alloc::string::ToString;

    fn tiny_config() -> ScenarioConfig {
        ScenarioConfig {
            num_cells: 4,
            num_satellites: 2,
            users_per_cell: 3,
            demand_range_bps: [4e8, 6e8],
            ant_params: crate::scenario::AntParams { max_iters: 5, colony_size: 3, ..Default::default() },
            ..Default::default()
        }
    }

    #[test]
    fn names_round_trip() {
        for name in [
            "D-mNOMA-BF", "A-eNOMA-BF", "A-mNOMA-BF", "D-eNOMA-BF", "OMA-BF", "D-mNOMA-2c", "A-eNOMA-4c", "D-mNOMA-S",
            "F-eNOMA-BF", "D-uNOMA-BF", "A-eNOMA-BF-scheme2",
        ] {
            let s: Strategy = name.parse().unwrap();
            assert_eq!(s.to_string(), name);
        }
        assert_eq!("D-mNOMA-BF".parse::<Strategy>().unwrap(), Strategy::D_M_NOMA_BF);
        assert_eq!("A-eNOMA-BF".parse::<Strategy>().unwrap(), Strategy::A_E_NOMA_BF);
        assert_eq!("A-mNOMA-BF".parse::<Strategy>().unwrap(), Strategy::A_M_NOMA_BF);
        assert_eq!("D-eNOMA-BF".parse::<Strategy>().unwrap(), Strategy::D_E_NOMA_BF);
        assert!("X-mNOMA-BF".parse::<Strategy>().is_err());
        assert!("OMA-2c".parse::<Strategy>().is_err());
    }

    #[test]
    fn expcone_rejects_imperfect_sic() {
        let cfg = ScenarioConfig { ipsic_factor: 0.01, ..tiny_config() };
        assert!(matches!(Strategy::A_E_NOMA_BF.check(&cfg), Err(EngineError::Unsupported(_))));
        assert!(Strategy::A_M_NOMA_BF.check(&cfg).is_ok());
    }

    fn overhead_scenario(demand: f64, users: usize) -> (Scenario, AssignmentPlan) {
        let cfg = ScenarioConfig {
            num_cells: 1,
            num_satellites: 1,
            users_per_cell: users,
            demand_range_bps: [demand, demand],
            ..Default::default()
        };
        let sc = Scenario::generate(&cfg, 0).unwrap();
        let mut plan = AssignmentPlan::empty(1, 1);
        plan.set(0, 0, Some(0));
        (sc, plan)
    }

    #[test]
    fn single_user_below_capacity_is_met() {
        let (sc, plan) = overhead_scenario(3e8, 1);
        let s = Strategy::new(AssignKind::FixedPlan, PowerKind::Expcone, BeamKind::PerUserBf);
        let (rep, m) = run(&sc, &s, Some(&plan), &mut TrialRng::new(1, 0, Stream::AntColony)).unwrap();
        assert!((rep.user_rates_bps[0] / 3e8 - 1.0).abs() < 1e-3, "{}", rep.user_rates_bps[0]);
        assert!(m.satisfaction_ratio > 0.999);
    }

    #[test]
    fn equal_power_is_pure_evaluation() {
        let sc = Scenario::generate(&tiny_config(), 3).unwrap();
        let s = Strategy::new(AssignKind::Doppler, PowerKind::Equal, BeamKind::PerUserBf);
        let a = run(&sc, &s, None, &mut TrialRng::new(1, 0, Stream::AntColony)).unwrap();
        let b = run(&sc, &s, None, &mut TrialRng::new(1, 0, Stream::AntColony)).unwrap();
        assert_eq!(a, b);
        for c in &a.0.cells {
            let each = sc.config.sat_power_w() / c.powers_w.len() as f64;
            assert!(c.powers_w.iter().all(|p| (p - each).abs() < 1e-9));
        }
    }

    #[test]
    fn stored_rates_match_recomputation() {
        let sc = Scenario::generate(&tiny_config(), 1).unwrap();
        for name in ["D-mNOMA-BF", "A-eNOMA-BF", "D-eNOMA-2c", "D-mNOMA-4c", "D-mNOMA-S", "OMA-BF"] {
            let s: Strategy = name.parse().unwrap();
            let (rep, m) = run(&sc, &s, None, &mut TrialRng::new(1, 1, Stream::AntColony)).unwrap();
            for c in &rep.cells {
                let (r, _) = evaluate_cell(&sc.config, &c.layout, &c.channels, &c.beams.directions, &c.powers_w);
                for (a, b) in r.iter().zip(&c.rates_bps) {
                    assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "{name}");
                }
                let budget = budget_for(&sc.config, s.power);
                assert!(c.powers_w.iter().sum::<f64>() <= budget + 1e-9);
                for (w, p) in c.beams.w.iter().zip(&c.powers_w) {
                    assert!(crate::math::norm_sq(w) <= p + 1e-12);
                }
            }
            assert!((0.0..=1.0).contains(&m.satisfaction_ratio));
        }
    }

    #[test]
    fn oma_single_user_equals_noma() {
        let (sc, plan) = overhead_scenario(2e9, 1);
        let noma = Strategy::new(AssignKind::FixedPlan, PowerKind::Expcone, BeamKind::PerUserBf);
        let oma = Strategy::new(AssignKind::FixedPlan, PowerKind::Oma, BeamKind::PerUserBf);
        let mut rng = TrialRng::new(1, 0, Stream::AntColony);
        let a = run(&sc, &noma, Some(&plan), &mut rng).unwrap().0;
        let b = run(&sc, &oma, Some(&plan), &mut rng).unwrap().0;
        assert!((a.user_rates_bps[0] / b.user_rates_bps[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn oma_equal_demands_within_reach() {
        let (sc, plan) = overhead_scenario(5e7, 4);
        let oma = Strategy::new(AssignKind::FixedPlan, PowerKind::Oma, BeamKind::PerUserBf);
        let (rep, m) = run(&sc, &oma, Some(&plan), &mut TrialRng::new(1, 0, Stream::AntColony)).unwrap();
        assert!(rep.user_rates_bps.iter().all(|r| (r / 5e7 - 1.0).abs() < 1e-6));
        assert!(m.total_gap_bps < 1.0);
    }

    #[test]
    fn monotonic_and_expcone_agree_on_single_user_cells() {
        let (sc, plan) = overhead_scenario(9e8, 1);
        let mut rng = TrialRng::new(1, 0, Stream::AntColony);
        let e = Strategy::new(AssignKind::FixedPlan, PowerKind::Expcone, BeamKind::PerUserBf);
        let mut cfg_equal_budget = sc.clone();
        cfg_equal_budget.config.power_headroom_factor = 1.0;
        let m = Strategy::new(AssignKind::FixedPlan, PowerKind::Monotonic, BeamKind::PerUserBf);
        let a = run(&cfg_equal_budget, &e, Some(&plan), &mut rng).unwrap().1;
        let b = run(&cfg_equal_budget, &m, Some(&plan), &mut rng).unwrap().1;
        assert!((a.objective_gap - b.objective_gap).abs() <= 0.02 * a.objective_gap.max(1.0));
    }

    #[test]
    fn ee_single_user_by_hand() {
        let (sc, plan) = overhead_scenario(5e9, 1);
        let s = Strategy::new(AssignKind::FixedPlan, PowerKind::Equal, BeamKind::PerUserBf);
        let (rep, m) = run(&sc, &s, Some(&plan), &mut TrialRng::new(1, 0, Stream::AntColony)).unwrap();
        let c = &rep.cells[0];
        let g = c.channels.columns[0].gain;
        let gamma = g * sc.config.sat_power_w() / sc.config.noise_w();
        let want = log2(1.0 + gamma) / sc.config.sat_power_w();
        assert!((m.energy_efficiency / want - 1.0).abs() < 1e-9);
    }
}
