use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use relay_noma::config::{apply_seed_env, default_config, desk_scale, parse_config, DESK_TRIALS};
use relay_noma::formats::{self, InstanceFile};
use relay_noma::harness::{self, Experiment, ExperimentKind, ExperimentSpec, ResultRow, ResultTable, SweepPoint};
use relay_noma_core::engine::{make_plan, run, AssignKind, BeamKind, PowerKind, Scenario, Strategy};
use relay_noma_core::power::{equal_power, expcone_power_solve, monotonic_power_solve, oma_power_solve, CellInstance};
use relay_noma_core::rng::{Stream, TrialRng};
use relay_noma_core::scenario::ScenarioConfig;

#[derive(Parser)]
#[command(name = "relay-noma", version, about = "Relay-assisted LEO NOMA downlink simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML scenario file; absent keys take the defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed (and RNOMA_SEED).
    #[arg(long)]
    seed: Option<u64>,
    /// Keep the configured constellation size instead of the desk scale.
    #[arg(long)]
    full_scale: bool,
}

#[derive(Subcommand)]
enum Command {
    /// One strategy on one scenario.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "D-mNOMA-BF")]
        strategy: String,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        /// Results CSV.
        #[arg(long)]
        out: PathBuf,
        /// Per-user solution dump of trial 0.
        #[arg(long)]
        solution: Option<PathBuf>,
        /// Plan file for fixed-plan (`F-...`) strategies.
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// An experiment family; kind and grid come from `--kind` or the
    /// config's `[experiment]` table.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        kind: Option<ExperimentKind>,
        #[arg(long)]
        trials: Option<usize>,
        /// Comma-separated strategy names.
        #[arg(long, value_delimiter = ',')]
        strategy: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Several strategies on shared seeds at the configured demand.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "D-mNOMA-BF,A-eNOMA-BF,A-mNOMA-BF,D-eNOMA-BF,OMA-BF")]
        strategy: Vec<String>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Assignment plan of one trial.
    DumpPlan {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "doppler")]
        planner: Planner,
        #[arg(long, default_value_t = 0)]
        trial: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-user channels of one trial over the horizon.
    DumpChannels {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        trial: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Satellite positions and velocities of one trial.
    DumpEphemeris {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        trial: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Power allocation for a standalone instance file.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "expcone")]
        solver: Solver,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Planner {
    Doppler,
    Ant,
}

#[derive(Clone, Copy, ValueEnum)]
enum Solver {
    Monotonic,
    Expcone,
    Oma,
    Equal,
}

struct Setup {
    config: ScenarioConfig,
    experiment: ExperimentSpec,
    full_scale: bool,
}

fn setup(common: &Common) -> Result<Setup> {
    let (loaded, experiment) = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let mut table: toml::Table = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            let experiment = match table.remove("experiment") {
                Some(v) => v.try_into().with_context(|| format!("{}: [experiment]", path.display()))?,
                None => ExperimentSpec::default(),
            };
            (parse_config(&toml::to_string(&table)?, path)?, experiment)
        }
        None => (default_config(), ExperimentSpec::default()),
    };
    let mut config = if common.full_scale { loaded.config.clone() } else { desk_scale(&loaded) };
    apply_seed_env(&mut config)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    config.validate()?;
    Ok(Setup { config, experiment, full_scale: common.full_scale })
}

fn default_trials(s: &Setup) -> usize {
    if s.full_scale {
        1
    } else {
        DESK_TRIALS
    }
}

fn parse_strategies(names: &[String]) -> Result<Vec<Strategy>> {
    names.iter().map(|n| n.parse::<Strategy>().map_err(Into::into)).collect()
}

fn open(path: &Path) -> Result<BufWriter<std::fs::File>> {
    Ok(BufWriter::new(formats::create(path)?))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { common, strategy, trials, out, solution, plan } => {
            let s = setup(&common)?;
            let strategy: Strategy = strategy.parse()?;
            strategy.check(&s.config)?;
            let mut rows = Vec::new();
            for trial in 0..trials as u64 {
                let scenario = Scenario::generate(&s.config, trial)?;
                let fixed = match (&plan, strategy.assign) {
                    (Some(p), _) => Some(formats::read_plan_file(
                        p,
                        scenario.config.horizon_slots(),
                        scenario.constellation.len(),
                    )?),
                    (None, AssignKind::FixedPlan) => bail!("fixed-plan strategy {strategy} needs --plan"),
                    (None, _) => None,
                };
                let mut rng = TrialRng::new(s.config.seed, trial, Stream::AntColony);
                let (report, metrics) = run(&scenario, &strategy, fixed.as_ref(), &mut rng)?;
                if trial == 0 {
                    if let Some(path) = &solution {
                        let mut w = open(path)?;
                        formats::write_solution(&report, &mut w)?;
                        w.flush()?;
                    }
                }
                let status = if metrics.infeasible_cells == 0 {
                    "ok".to_string()
                } else {
                    format!("ok;unserved_cells={}", metrics.infeasible_cells)
                };
                rows.push(ResultRow {
                    experiment: ExperimentKind::SingleRun.label().into(),
                    strategy: strategy.to_string(),
                    sweep_param: SweepPoint::None.param(),
                    sweep_value: SweepPoint::None.value(),
                    trial,
                    metrics: Some(metrics),
                    status,
                });
            }
            harness::emit(&ResultTable { rows }, &out)?;
        }
        Command::Sweep { common, kind, trials, strategy, out } => {
            let s = setup(&common)?;
            let Some(kind) = kind.or(s.experiment.kind) else {
                bail!("no experiment kind: pass --kind or set [experiment].kind in the config");
            };
            let trials = trials.or(s.experiment.trials).unwrap_or_else(|| default_trials(&s));
            let mut exp = s.experiment.build(kind, s.config.clone(), trials)?;
            if !strategy.is_empty() {
                exp.strategies = parse_strategies(&strategy)?;
            }
            let table = harness::run_experiment(&exp)?;
            harness::emit(&table, &out)?;
        }
        Command::Compare { common, strategy, trials, out } => {
            let s = setup(&common)?;
            let exp = Experiment {
                kind: ExperimentKind::SingleRun,
                strategies: parse_strategies(&strategy)?,
                grid: vec![SweepPoint::None],
                trials: trials.unwrap_or_else(|| default_trials(&s)),
                config: s.config.clone(),
            };
            let table = harness::run_experiment(&exp)?;
            harness::emit(&table, &out)?;
        }
        Command::DumpPlan { common, planner, trial, out } => {
            let s = setup(&common)?;
            let scenario = Scenario::generate(&s.config, trial)?;
            let assign = match planner {
                Planner::Doppler => AssignKind::Doppler,
                Planner::Ant => AssignKind::Ant,
            };
            let strategy = Strategy::new(assign, PowerKind::Expcone, BeamKind::PerUserBf);
            let mut rng = TrialRng::new(s.config.seed, trial, Stream::AntColony);
            let plan = make_plan(&scenario, &strategy, None, &mut rng)?;
            let mut w = open(&out)?;
            formats::write_plan(&scenario, &plan, &mut w)?;
            w.flush()?;
        }
        Command::DumpChannels { common, trial, out } => {
            let s = setup(&common)?;
            let scenario = Scenario::generate(&s.config, trial)?;
            let mut w = open(&out)?;
            formats::write_channels(&scenario, &mut w)?;
            w.flush()?;
        }
        Command::DumpEphemeris { common, trial, out } => {
            let s = setup(&common)?;
            let scenario = Scenario::generate(&s.config, trial)?;
            let mut w = open(&out)?;
            formats::write_ephemeris(&scenario, &mut w)?;
            w.flush()?;
        }
        Command::Solve { instance, solver, out } => {
            let text = std::fs::read_to_string(&instance).with_context(|| format!("reading {}", instance.display()))?;
            let file = InstanceFile::parse(&text).with_context(|| format!("parsing {}", instance.display()))?;
            let inst: CellInstance = file.instance();
            let alloc = match solver {
                Solver::Monotonic => monotonic_power_solve(&inst)?,
                Solver::Expcone => expcone_power_solve(&inst)?,
                Solver::Oma => oma_power_solve(&inst)?,
                Solver::Equal => equal_power(&inst),
            };
            let mut w = open(&out)?;
            formats::write_allocation(&inst, &alloc, &mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}
