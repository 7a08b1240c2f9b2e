//! Monte-Carlo experiment sweeps and the results CSV.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use rayon::prelude::*;
use relay_noma_core::engine::{run, EngineError, MetricsReport, Scenario, Strategy};
use relay_noma_core::rng::{Stream, TrialRng};
use relay_noma_core::scenario::ScenarioConfig;
use serde::{Deserialize, Serialize};

/// Header of the results CSV.
pub const HEADER: &str = "experiment,strategy,sweep_param,sweep_value,trial,objective_gap_db,satisfaction_ratio,\
min_sat_rate_worst,total_capacity_bps,total_gap_bps,energy_eff,status";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SingleRun,
    DemandSweep,
    PerUserProfile,
    PowerSweep,
    PolarizationCompare,
    SingleBeamCompare,
    ObjectiveCompare,
    IpsicSweep,
    PerSatelliteSatisfaction,
    EeSweep,
}

impl ExperimentKind {
    pub fn label(self) -> &'static str {
        match self {
            Self::SingleRun => "single-run",
            Self::DemandSweep => "demand-sweep",
            Self::PerUserProfile => "per-user-profile",
            Self::PowerSweep => "power-sweep",
            Self::PolarizationCompare => "polarization-compare",
            Self::SingleBeamCompare => "single-beam-compare",
            Self::ObjectiveCompare => "objective-compare",
            Self::IpsicSweep => "ipsic-sweep",
            Self::PerSatelliteSatisfaction => "per-satellite-satisfaction",
            Self::EeSweep => "ee-sweep",
        }
    }

    /// Default strategy list.
    pub fn default_strategies(self) -> Vec<String> {
        let v: &[&str] = match self {
            Self::SingleRun => &["D-mNOMA-BF"],
            Self::DemandSweep | Self::PerUserProfile | Self::PerSatelliteSatisfaction => {
                &["D-mNOMA-BF", "A-eNOMA-BF", "A-mNOMA-BF", "D-eNOMA-BF", "OMA-BF"]
            }
            Self::PowerSweep | Self::EeSweep => &["D-mNOMA-BF", "A-eNOMA-BF", "A-mNOMA-BF", "D-eNOMA-BF"],
            Self::PolarizationCompare => {
                &["D-mNOMA-BF", "D-mNOMA-2c", "D-mNOMA-4c", "A-eNOMA-BF", "A-eNOMA-2c", "A-eNOMA-4c"]
            }
            Self::SingleBeamCompare => &["D-mNOMA-BF", "D-mNOMA-S", "A-eNOMA-BF", "A-eNOMA-S"],
            Self::ObjectiveCompare => &["A-eNOMA-BF", "A-eNOMA-BF-scheme2"],
            Self::IpsicSweep => &["D-mNOMA-BF", "A-mNOMA-BF", "A-eNOMA-BF"],
        };
        v.iter().map(|s| s.to_string()).collect()
    }

    /// Mean demand the kind runs at when its grid does not sweep demand.
    /// Power sweeps use 900 Mbps; other kinds keep the configured range.
    pub fn base_mean_demand_mbps(self) -> Option<f64> {
        match self {
            Self::PowerSweep | Self::EeSweep => Some(900.0),
            _ => None,
        }
    }

    /// Default sweep grid.
    pub fn default_grid(self) -> Vec<SweepPoint> {
        let demand = |v: f64| SweepPoint::MeanDemandMbps(v);
        match self {
            Self::SingleRun => vec![SweepPoint::None],
            Self::DemandSweep | Self::SingleBeamCompare | Self::ObjectiveCompare => {
                (3..=13).map(|k| demand(100.0 * k as f64)).collect()
            }
            Self::PerUserProfile => vec![demand(500.0), demand(1100.0)],
            Self::PolarizationCompare => vec![demand(700.0)],
            Self::PerSatelliteSatisfaction => vec![demand(800.0)],
            Self::PowerSweep | Self::EeSweep => (0..5).map(|k| SweepPoint::SatPowerDbw(19.0 + 3.0 * k as f64)).collect(),
            Self::IpsicSweep => [4, 8, 16]
                .into_iter()
                .flat_map(|l| {
                    [0.0, 1e-4, 1e-3, 1e-2, 1e-1].into_iter().map(move |k| SweepPoint::Ipsic { antennas: l, kappa: k })
                })
                .collect(),
        }
    }
}

/// One value of the swept parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepPoint {
    None,
    MeanDemandMbps(f64),
    SatPowerDbw(f64),
    Ipsic { antennas: usize, kappa: f64 },
}

impl SweepPoint {
    pub fn param(&self) -> String {
        match self {
            Self::None => "none".into(),
            Self::MeanDemandMbps(_) => "mean_demand_mbps".into(),
            Self::SatPowerDbw(_) => "sat_power_dbw".into(),
            Self::Ipsic { antennas, .. } => format!("ipsic_factor@L={antennas}"),
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            Self::None => 0.0,
            Self::MeanDemandMbps(v) | Self::SatPowerDbw(v) => v,
            Self::Ipsic { kappa, .. } => kappa,
        }
    }

    pub fn apply(&self, config: &ScenarioConfig) -> ScenarioConfig {
        match *self {
            Self::None => config.clone(),
            Self::MeanDemandMbps(v) => config.clone().with_mean_demand(v * 1e6),
            Self::SatPowerDbw(v) => ScenarioConfig { sat_power_dbw: v, ..config.clone() },
            Self::Ipsic { antennas, kappa } => {
                ScenarioConfig { num_antennas: antennas, ipsic_factor: kappa, ..config.clone() }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub kind: ExperimentKind,
    pub strategies: Vec<Strategy>,
    pub grid: Vec<SweepPoint>,
    pub trials: usize,
    pub config: ScenarioConfig,
}

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("experiment needs at least one trial")]
    NoTrials,
    #[error("experiment needs a nonempty sweep grid and strategy list")]
    Empty,
}

impl Experiment {
    /// Default strategies and grid for `kind`. Kinds with a base demand
    /// re-centre the config's demand range on it.
    pub fn new(kind: ExperimentKind, config: ScenarioConfig, trials: usize) -> Result<Self, EngineError> {
        let strategies = kind.default_strategies().iter().map(|s| s.parse()).collect::<Result<_, _>>()?;
        let config = match kind.base_mean_demand_mbps() {
            Some(d) => config.with_mean_demand(d * 1e6),
            None => config,
        };
        Ok(Self { kind, strategies, grid: kind.default_grid(), trials, config })
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.trials == 0 {
            return Err(ExperimentError::NoTrials);
        }
        if self.grid.is_empty() || self.strategies.is_empty() {
            return Err(ExperimentError::Empty);
        }
        Ok(())
    }
}

/// One (strategy, sweep point, trial) outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub strategy: String,
    pub sweep_param: String,
    pub sweep_value: f64,
    pub trial: u64,
    pub metrics: Option<MetricsReport>,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    /// Mean of `f` over successful rows matching strategy and sweep value.
    pub fn mean(&self, strategy: &str, sweep_value: f64, f: impl Fn(&MetricsReport) -> f64) -> Option<f64> {
        let v: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.strategy == strategy && r.sweep_value == sweep_value)
            .filter_map(|r| r.metrics.as_ref().map(&f))
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    /// Successful rows of one strategy at one sweep value, by trial.
    pub fn trials(&self, strategy: &str, sweep_value: f64) -> Vec<&ResultRow> {
        self.rows.iter().filter(|r| r.strategy == strategy && r.sweep_value == sweep_value).collect()
    }
}

/// Status text for a finished run.
fn status_of(m: &MetricsReport) -> String {
    match m.infeasible_cells {
        0 => "ok".into(),
        n => format!("ok;unserved_cells={n}"),
    }
}

/// Run one strategy on one scenario with the trial's ant-colony stream.
pub fn run_one(scenario: &Scenario, strategy: &Strategy) -> Result<MetricsReport, EngineError> {
    let mut rng = TrialRng::new(scenario.config.seed, scenario.trial, Stream::AntColony);
    run(scenario, strategy, None, &mut rng).map(|(_, m)| m)
}

/// Every (sweep point, strategy, trial) in parallel; rows come back sorted
/// by sweep point, then strategy list position, then trial.
pub fn run_experiment(exp: &Experiment) -> Result<ResultTable, ExperimentError> {
    exp.validate()?;
    let jobs: Vec<(usize, u64)> =
        (0..exp.grid.len()).flat_map(|g| (0..exp.trials as u64).map(move |t| (g, t))).collect();
    let mut rows: Vec<(usize, usize, u64, ResultRow)> = jobs
        .par_iter()
        .flat_map_iter(|&(g, trial)| {
            let point = exp.grid[g];
            let config = point.apply(&exp.config);
            let scenario = Scenario::generate(&config, trial);
            exp.strategies.iter().enumerate().map(move |(s, strategy)| {
                let outcome = match &scenario {
                    Ok(sc) => strategy.check(&sc.config).and_then(|_| run_one(sc, strategy)),
                    Err(e) => Err(e.clone()),
                };
                let (metrics, status) = match outcome {
                    Ok(m) => {
                        let st = status_of(&m);
                        (Some(m), st)
                    }
                    Err(EngineError::Unsupported(_)) => (None, "unsupported".to_string()),
                    Err(e) => (None, format!("error: {e}")),
                };
                let row = ResultRow {
                    experiment: exp.kind.label().into(),
                    strategy: strategy.to_string(),
                    sweep_param: point.param(),
                    sweep_value: point.value(),
                    trial,
                    metrics,
                    status,
                };
                (g, s, trial, row)
            })
        })
        .collect();
    rows.sort_by_key(|r| (r.0, r.1, r.2));
    Ok(ResultTable { rows: rows.into_iter().map(|r| r.3).collect() })
}

#[derive(Debug, Serialize)]
struct CsvRow<'a> {
    experiment: &'a str,
    strategy: &'a str,
    sweep_param: &'a str,
    sweep_value: f64,
    trial: u64,
    objective_gap_db: Option<f64>,
    satisfaction_ratio: Option<f64>,
    min_sat_rate_worst: Option<f64>,
    total_capacity_bps: Option<f64>,
    total_gap_bps: Option<f64>,
    energy_eff: Option<f64>,
    status: &'a str,
}

/// Write the table. Failed runs keep their row with empty metric fields.
pub fn write_table<W: Write>(table: &ResultTable, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(HEADER.split(','))?;
    for r in &table.rows {
        let m = r.metrics.as_ref();
        w.serialize(CsvRow {
            experiment: &r.experiment,
            strategy: &r.strategy,
            sweep_param: &r.sweep_param,
            sweep_value: r.sweep_value,
            trial: r.trial,
            objective_gap_db: m.map(|m| m.objective_gap_db),
            satisfaction_ratio: m.map(|m| m.satisfaction_ratio),
            min_sat_rate_worst: m.map(|m| m.min_sat_satisfaction),
            total_capacity_bps: m.map(|m| m.total_capacity_bps),
            total_gap_bps: m.map(|m| m.total_gap_bps),
            energy_eff: m.map(|m| m.energy_efficiency),
            status: &r.status,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit(table: &ResultTable, path: &Path) -> Result<()> {
    anyhow::ensure!(!table.rows.is_empty(), "refusing to write an empty table to {}", path.display());
    let f = crate::formats::create(path)?;
    write_table(table, std::io::BufWriter::new(f)).with_context(|| format!("writing {}", path.display()))
}

/// Optional `[experiment]` table of a config file.
#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: Option<ExperimentKind>,
    pub strategies: Option<Vec<String>>,
    /// Sweep values in the kind's unit (Mbps, dBW or κ).
    pub values: Option<Vec<f64>>,
    /// Antenna counts crossed with the κ values of an ipSIC sweep.
    pub antennas: Option<Vec<usize>>,
    /// Replaces the kind's base demand for grids that do not sweep demand.
    pub mean_demand_mbps: Option<f64>,
    pub trials: Option<usize>,
}

impl ExperimentSpec {
    /// Resolve against defaults for `kind`. `trials` is already resolved
    /// by the caller, so the table's own `trials` is not consulted here.
    pub fn build(&self, kind: ExperimentKind, config: ScenarioConfig, trials: usize) -> Result<Experiment, EngineError> {
        let mut exp = Experiment::new(kind, config, trials)?;
        if let Some(d) = self.mean_demand_mbps {
            exp.config = exp.config.with_mean_demand(d * 1e6);
        }
        if let Some(names) = &self.strategies {
            exp.strategies = names.iter().map(|s| s.parse()).collect::<Result<_, _>>()?;
        }
        let values = self.values.clone();
        exp.grid = match kind {
            ExperimentKind::SingleRun => vec![SweepPoint::None],
            ExperimentKind::PowerSweep | ExperimentKind::EeSweep => match values {
                Some(v) => v.into_iter().map(SweepPoint::SatPowerDbw).collect(),
                None => exp.grid,
            },
            ExperimentKind::IpsicSweep => {
                let kappas = values.unwrap_or_else(|| vec![0.0, 1e-4, 1e-3, 1e-2, 1e-1]);
                let ls = self.antennas.clone().unwrap_or_else(|| vec![4, 8, 16]);
                ls.iter()
                    .flat_map(|&l| kappas.iter().map(move |&k| SweepPoint::Ipsic { antennas: l, kappa: k }))
                    .collect()
            }
            _ => match values {
                Some(v) => v.into_iter().map(SweepPoint::MeanDemandMbps).collect(),
                None => exp.grid,
            },
        };
        Ok(exp)
    }
}
