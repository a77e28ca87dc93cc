//! Command-line front end.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{Experiment, ExperimentConfig};
use crate::error::{ConfigError, HarnessError, Result};
use crate::experiments::run_and_write;
use crate::table::{ResultTable, Value};

#[derive(Debug, Parser)]
#[command(name = "paradiag-harness", version, about = "Runs the paradiag experiments and writes CSV tables and SVG charts")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Flat `key = value` config file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Override one key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Worker threads (0 = all available).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    AdeDirect,
    AdeHybrid,
    AdeWr,
    PararealCompare,
    WaveGmres,
    Optctrl,
    CondStudy,
    SpectrumProbe,
    NonlinearDemo,
    ScalingBench,
    /// Runs every experiment listed under the `experiments` key.
    Run,
    /// Prints the resolved configuration of an experiment (all defaults
    /// when no overrides are given), or lists the experiments.
    Describe { experiment: Option<String> },
}

impl Command {
    fn experiment(&self) -> Option<Experiment> {
        Some(match self {
            Self::AdeDirect => Experiment::AdeDirect,
            Self::AdeHybrid => Experiment::AdeHybrid,
            Self::AdeWr => Experiment::AdeWr,
            Self::PararealCompare => Experiment::PararealCompare,
            Self::WaveGmres => Experiment::WaveGmres,
            Self::Optctrl => Experiment::OptCtrl,
            Self::CondStudy => Experiment::CondStudy,
            Self::SpectrumProbe => Experiment::SpectrumProbe,
            Self::NonlinearDemo => Experiment::NonlinearDemo,
            Self::ScalingBench => Experiment::ScalingBench,
            Self::Run | Self::Describe { .. } => return None,
        })
    }
}

impl CommonArgs {
    /// Experiment defaults, then the file, then `--set`, then the
    /// dedicated flags.
    pub fn resolve(&self, experiment: Experiment) -> Result<ExperimentConfig> {
        let text = match &self.config {
            Some(path) => Some(std::fs::read_to_string(path).map_err(|e| {
                ConfigError::new(format!("cannot read config file {}: {e}", path.display()))
            })?),
            None => None,
        };
        let mut overrides = self.set.clone();
        if let Some(t) = self.threads {
            overrides.push(format!("threads={t}"));
        }
        if let Some(s) = self.seed {
            overrides.push(format!("seed={s}"));
        }
        let mut cfg = ExperimentConfig::resolve(experiment, text.as_deref(), &overrides)?;
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        Ok(cfg)
    }
}

fn describe(common: &CommonArgs, name: Option<&str>) -> Result<String> {
    match name {
        Some(name) => {
            let experiment: Experiment = name.parse()?;
            Ok(common.resolve(experiment)?.describe())
        }
        None => Ok(Experiment::ALL.iter().map(|e| format!("{:<18} {}\n", e.name(), e.summary())).collect()),
    }
}

/// Runs the `run` command: every listed experiment in order, each with its
/// own defaults under the shared overrides. Writes `run.csv`.
fn run_listed(common: &CommonArgs) -> Result<ResultTable> {
    let plan = common.resolve(Experiment::AdeDirect)?;
    let mut summary = ResultTable::new(["experiment", "rows", "converged"]);
    let mut first_failure = None;
    for &experiment in &plan.experiments {
        let cfg = common.resolve(experiment)?;
        match run_and_write(&cfg) {
            Ok(out) => summary.push(vec![experiment.name().into(), out.table.len().into(), true.into()])?,
            Err(e @ HarnessError::NotConverged { .. }) => {
                summary.push(vec![experiment.name().into(), Value::Empty, false.into()])?;
                first_failure.get_or_insert(e);
            }
            Err(e) => return Err(e),
        }
    }
    std::fs::create_dir_all(&plan.out)?;
    summary.write_csv(&plan.out.join("run.csv"))?;
    match first_failure {
        Some(e) => Err(e),
        None => Ok(summary),
    }
}

pub fn execute(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Describe { experiment } => describe(&cli.common, experiment.as_deref()),
        Command::Run => {
            let summary = run_listed(&cli.common)?;
            Ok(format!("ran {} experiment(s)\n", summary.len()))
        }
        cmd => {
            let experiment = cmd.experiment().expect("every other command names an experiment");
            let cfg = cli.common.resolve(experiment)?;
            let out = run_and_write(&cfg)?;
            Ok(format!("{}\nwrote {} to {}\n", out.table.to_csv().trim_end(), experiment, cfg.out.display()))
        }
    }
}

/// Parses `args`, runs, prints, and returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
