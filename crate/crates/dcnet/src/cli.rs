//! Command-line interface.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use dcnet_core::markov::EmpiricalMatrix;
use dcnet_core::scales::{optimize_ladder, LadderSearchConfig, Objective};
use dcnet_core::sim::{simulate_path, SimConfig, DAY_MS};
use dcnet_core::{analytic_matrix, contract, H2Options};

use crate::config::{Duration, InitialMode, LadderSpec, RunConfig, WarmupPolicy};
use crate::error::{Error, Result};
use crate::io;
use crate::pipeline;
use crate::verify;

#[derive(Debug, Parser)]
#[command(
    name = "dcnet",
    version,
    about = "Directional-change intrinsic networks and liquidity"
)]
pub struct Cli {
    /// Print progress and summaries to stderr
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dissect ticks into directional changes for every threshold
    Dissect(DissectArgs),
    /// Replay directional changes as intrinsic-network transitions
    Transitions(TransitionsArgs),
    /// Write the analytic (or empirical) transition matrix
    Matrix(MatrixArgs),
    /// Collapse a matrix onto the network without its smallest threshold
    Contract(ContractArgs),
    /// Rolling liquidity from ticks or transitions
    Liquidity(LiquidityArgs),
    /// Write a simulated Brownian tick file
    Simulate(SimulateArgs),
    /// Choose a ladder by equal probabilities or maximal informativeness
    Calibrate(CalibrateArgs),
    /// Run verification suites; exits with 3 if any check fails
    Verify(VerifyArgs),
}

/// Where the ladder and model settings come from.
#[derive(Debug, Clone, Args)]
pub struct LadderArgs {
    /// Read ladder and settings from a config file
    #[arg(long, value_name = "FILE", conflicts_with_all = ["defaults", "deltas", "n", "delta1", "lambda"])]
    pub config: Option<PathBuf>,
    /// Twelve doubling thresholds from 0.025%, 1d window, 1m cadence
    #[arg(long, conflicts_with_all = ["deltas", "n", "delta1", "lambda"])]
    pub defaults: bool,
    /// Explicit thresholds, comma separated (e.g. 0.001,0.002)
    #[arg(long, value_delimiter = ',', num_args = 1.., conflicts_with_all = ["n", "delta1", "lambda"])]
    pub deltas: Option<Vec<f64>>,
    /// Geometric ladder size [default: 12]
    #[arg(long)]
    pub n: Option<usize>,
    /// Geometric ladder smallest threshold [default: 0.00025]
    #[arg(long)]
    pub delta1: Option<f64>,
    /// Geometric ladder ratio [default: 2]
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Runner mode before the first change
    #[arg(long, value_enum)]
    pub initial_mode: Option<InitialMode>,
    /// State initialisation before every threshold has fired
    #[arg(long, value_enum)]
    pub warmup: Option<WarmupPolicy>,
    /// Also write the effective configuration to this file
    #[arg(long, value_name = "FILE")]
    pub save_config: Option<PathBuf>,
}

impl LadderArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = if let Some(path) = &self.config {
            RunConfig::load(path)?
        } else if self.defaults {
            RunConfig::standard()
        } else if let Some(deltas) = &self.deltas {
            RunConfig::with_ladder(LadderSpec::Explicit {
                deltas: deltas.clone(),
            })
        } else if self.n.is_some() || self.delta1.is_some() || self.lambda.is_some() {
            let LadderSpec::Geometric { n, delta1, lambda } = LadderSpec::standard() else {
                unreachable!()
            };
            RunConfig::with_ladder(LadderSpec::Geometric {
                n: self.n.unwrap_or(n),
                delta1: self.delta1.unwrap_or(delta1),
                lambda: self.lambda.unwrap_or(lambda),
            })
        } else {
            return Err(Error::Usage(
                "a ladder is required: --defaults, --config, --deltas or --n/--delta1/--lambda"
                    .into(),
            ));
        };
        if let Some(m) = self.initial_mode {
            cfg.replay.initial_mode = m;
        }
        if let Some(w) = self.warmup {
            cfg.replay.warmup = w;
        }
        cfg.ladder.build()?;
        Ok(cfg)
    }

    fn save(&self, cfg: &RunConfig) -> Result<()> {
        if let Some(path) = &self.save_config {
            let text = cfg.to_toml();
            io::write_output(path, |w| w.write_all(text.as_bytes()))?;
        }
        Ok(())
    }
}

#[derive(Debug, Args)]
pub struct DissectArgs {
    /// Tick CSV (`timestamp_ms,bid,ask`, optionally gzip), `-` for stdin
    #[arg(long, short)]
    pub input: PathBuf,
    /// Events CSV, `-` for stdout
    #[arg(long, short, default_value = "-")]
    pub output: PathBuf,
    #[command(flatten)]
    pub ladder: LadderArgs,
}

#[derive(Debug, Args)]
pub struct TransitionsArgs {
    /// Tick CSV to dissect first
    #[arg(
        long,
        short,
        conflicts_with = "events",
        required_unless_present = "events"
    )]
    pub input: Option<PathBuf>,
    /// Events CSV written by `dissect`
    #[arg(long)]
    pub events: Option<PathBuf>,
    #[arg(long, short, default_value = "-")]
    pub output: PathBuf,
    #[command(flatten)]
    pub ladder: LadderArgs,
}

#[derive(Debug, Args)]
pub struct MatrixArgs {
    /// Count frequencies from a transitions CSV instead of the closed form
    #[arg(long, value_name = "FILE")]
    pub transitions: Option<PathBuf>,
    #[arg(long, short, default_value = "-")]
    pub output: PathBuf,
    #[command(flatten)]
    pub ladder: LadderArgs,
}

#[derive(Debug, Args)]
pub struct ContractArgs {
    /// Matrix CSV (`from,to,prob`)
    #[arg(long, short)]
    pub matrix: PathBuf,
    /// Contract this many times
    #[arg(long, default_value_t = 1)]
    pub times: usize,
    #[arg(long, short, default_value = "-")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct LiquidityArgs {
    /// Tick CSV
    #[arg(
        long,
        short,
        conflicts_with = "transitions",
        required_unless_present = "transitions"
    )]
    pub input: Option<PathBuf>,
    /// Transitions CSV written by `transitions`
    #[arg(long)]
    pub transitions: Option<PathBuf>,
    #[arg(long, short, default_value = "-")]
    pub output: PathBuf,
    /// Sliding window (e.g. 1d, 6h)
    #[arg(long)]
    pub window: Option<Duration>,
    /// Sampling cadence (e.g. 1m, 5s)
    #[arg(long)]
    pub cadence: Option<Duration>,
    /// Windows with fewer transitions are flagged low-confidence
    #[arg(long)]
    pub k_min: Option<usize>,
    /// Simulated chain length for H2
    #[arg(long)]
    pub chain_length: Option<usize>,
    /// Autocovariance truncation lag for H2
    #[arg(long)]
    pub lag: Option<usize>,
    /// Seed of the H2 chain
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub ladder: LadderArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Volatility per day (absolute price units)
    #[arg(long, default_value_t = 0.003)]
    pub sigma: f64,
    /// Drift per day
    #[arg(long, default_value_t = 0.0)]
    pub mu: f64,
    /// Step between ticks
    #[arg(long, default_value = "1s")]
    pub step: Duration,
    /// Number of steps
    #[arg(long, default_value_t = 86_400)]
    pub steps: usize,
    #[arg(long, default_value_t = 1.0)]
    pub x0: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Timestamp of the first tick (ms since epoch)
    #[arg(long, default_value_t = 0)]
    pub start_ms: i64,
    #[arg(long, short, default_value = "-")]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveArg {
    EqualProb,
    MaxH1,
    MaxH2,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long, value_enum)]
    pub objective: ObjectiveArg,
    #[arg(long, default_value_t = 12)]
    pub n: usize,
    #[arg(long, default_value_t = 0.00025)]
    pub delta1: f64,
    #[arg(long, default_value_t = 1.01)]
    pub lambda_min: f64,
    #[arg(long, default_value_t = 4.0)]
    pub lambda_max: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
    /// Seed of the H2 chain (max-h2 only)
    #[arg(long, default_value_t = H2Options::default().seed)]
    pub seed: u64,
    /// Chain length of the H2 estimate (max-h2 only)
    #[arg(long, default_value_t = 1_000_000)]
    pub chain_length: usize,
    /// Write the ladder as a config file usable with --config
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Suites to run (default: all)
    #[arg(value_parser = clap::builder::PossibleValuesParser::new(verify::SUITES))]
    pub suites: Vec<String>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Also write the checks as CSV
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

/// Parses `argv` and runs; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("dcnet: {e}");
            e.exit_code()
        }
    }
}

fn note(cli: &Cli, msg: impl FnOnce() -> String) {
    if cli.verbose > 0 {
        eprintln!("{}", msg());
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Dissect(a) => {
            let cfg = a.ladder.resolve()?;
            a.ladder.save(&cfg)?;
            let series = io::read_ticks_file(&a.input)?;
            let events = pipeline::events(&series, &cfg)?;
            note(cli, || {
                format!("{} ticks, {} events", series.len(), events.len())
            });
            io::write_output(&a.output, |w| io::write_events(w, &events))
        }
        Command::Transitions(a) => {
            let cfg = a.ladder.resolve()?;
            a.ladder.save(&cfg)?;
            let events = match (&a.input, &a.events) {
                (Some(ticks), _) => pipeline::events(&io::read_ticks_file(ticks)?, &cfg)?,
                (None, Some(path)) => io::read_events(io::open_input(path)?)?,
                (None, None) => unreachable!("clap requires one input"),
            };
            let records = pipeline::transitions(&events, &cfg)?;
            note(cli, || {
                format!("{} events, {} transitions", events.len(), records.len())
            });
            io::write_output(&a.output, |w| io::write_transitions(w, &records))
        }
        Command::Matrix(a) => {
            let cfg = a.ladder.resolve()?;
            a.ladder.save(&cfg)?;
            let ladder = cfg.ladder.build()?;
            let matrix = match &a.transitions {
                Some(path) => {
                    let records = io::read_transitions(io::open_input(path)?, ladder.len())?;
                    EmpiricalMatrix::from_records(ladder.len(), records, 0)?.matrix
                }
                None => analytic_matrix(&ladder)?,
            };
            io::write_output(&a.output, |w| io::write_matrix(w, &matrix))
        }
        Command::Contract(a) => {
            let mut matrix = io::read_matrix(io::open_input(&a.matrix)?)?;
            for _ in 0..a.times {
                matrix = contract(&matrix)?;
            }
            io::write_output(&a.output, |w| io::write_matrix(w, &matrix))
        }
        Command::Liquidity(a) => {
            let mut cfg = a.ladder.resolve()?;
            if let Some(v) = a.window {
                cfg.liquidity.window = v;
            }
            if let Some(v) = a.cadence {
                cfg.liquidity.cadence = v;
            }
            if let Some(v) = a.k_min {
                cfg.liquidity.k_min = v;
            }
            if let Some(v) = a.chain_length {
                cfg.h2.chain_length = v;
            }
            if let Some(v) = a.lag {
                cfg.h2.lag = v;
            }
            if let Some(v) = a.seed {
                cfg.h2.seed = v;
            }
            a.ladder.save(&cfg)?;
            let samples = match (&a.input, &a.transitions) {
                (Some(ticks), _) => {
                    pipeline::liquidity_from_ticks(&io::read_ticks_file(ticks)?, &cfg)?
                }
                (None, Some(path)) => {
                    let n = cfg.ladder.build()?.len();
                    let records = io::read_transitions(io::open_input(path)?, n)?;
                    pipeline::liquidity(&records, &cfg)?
                }
                (None, None) => unreachable!("clap requires one input"),
            };
            note(cli, || format!("{} liquidity samples", samples.len()));
            io::write_output(&a.output, |w| io::write_liquidity(w, &samples))
        }
        Command::Simulate(a) => {
            let cfg = SimConfig {
                sigma: a.sigma,
                mu: a.mu,
                dt: a.step.0 as f64 / DAY_MS as f64,
                steps: a.steps,
                x0: a.x0,
                seed: a.seed,
                start_ms: a.start_ms,
                time_unit_ms: DAY_MS as f64,
            };
            let series = simulate_path(&cfg)?;
            io::write_output(&a.output, |w| io::write_ticks(w, &series))
        }
        Command::Calibrate(a) => {
            let objective = match a.objective {
                ObjectiveArg::EqualProb => Objective::EqualProbability,
                ObjectiveArg::MaxH1 => Objective::MaxH1,
                ObjectiveArg::MaxH2 => Objective::MaxH2,
            };
            let result = optimize_ladder(&LadderSearchConfig {
                n: a.n,
                delta1: a.delta1,
                objective,
                lambda_min: a.lambda_min,
                lambda_max: a.lambda_max,
                tolerance: a.tolerance,
                h2: H2Options {
                    chain_length: a.chain_length,
                    seed: a.seed,
                    ..H2Options::default()
                },
            })?;
            let deltas = result.ladder.deltas().to_vec();
            let mut stdout = std::io::stdout().lock();
            let text = format!(
                "objective = {}\nlambda = {}\nvalue = {}\ndeltas = {:?}\n",
                a.objective
                    .to_possible_value()
                    .expect("no skipped variants")
                    .get_name(),
                result.lambda,
                result.value,
                deltas
            );
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| Error::io("-", e))?;
            if let Some(path) = &a.output {
                let cfg = RunConfig::with_ladder(LadderSpec::Explicit { deltas });
                let toml = cfg.to_toml();
                io::write_output(path, |w| w.write_all(toml.as_bytes()))?;
            }
            Ok(())
        }
        Command::Verify(a) => {
            let suites: Vec<&str> = if a.suites.is_empty() {
                verify::SUITES.to_vec()
            } else {
                a.suites.iter().map(String::as_str).collect()
            };
            let mut checks = Vec::new();
            for suite in suites {
                note(cli, || format!("running {suite}"));
                for c in verify::run_suite(suite, a.seed)? {
                    println!(
                        "{} {}/{}: {}",
                        if c.passed { "PASS" } else { "FAIL" },
                        c.suite,
                        c.name,
                        c.detail
                    );
                    checks.push(c);
                }
            }
            if let Some(path) = &a.report {
                write_report(path, &checks)?;
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            if failed > 0 {
                return Err(Error::Verification(format!(
                    "{failed} of {} checks failed",
                    checks.len()
                )));
            }
            Ok(())
        }
    }
}

fn write_report(path: &Path, checks: &[verify::Check]) -> Result<()> {
    io::write_output(path, |w| {
        writeln!(w, "suite,check,status,detail")?;
        for c in checks {
            writeln!(
                w,
                "{},\"{}\",{},\"{}\"",
                c.suite,
                c.name.replace('"', "'"),
                if c.passed { "pass" } else { "fail" },
                c.detail.replace('"', "'")
            )?;
        }
        Ok(())
    })
}
