//! The experiment registry.

mod ade;
mod control;
mod parareal;
mod scaling;
mod studies;
mod wave;

use std::path::{Path, PathBuf};
use std::time::Instant;

use paradiag::RealBlocks;

use crate::config::{Experiment, ExperimentConfig};
use crate::error::{HarnessError, Result};
use crate::plot::{line_chart, ChartSpec, Series};
use crate::table::{ResultTable, Value};

pub use scaling::scaling_bench;

/// Everything an experiment produces.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub experiment: Experiment,
    pub table: ResultTable,
    /// Per-iteration data, when the experiment is iterative.
    pub history: Option<ResultTable>,
    /// Scalar summaries such as fitted slopes.
    pub metrics: Vec<(String, f64)>,
    pub chart: Option<(ChartSpec, Vec<Series>)>,
    /// Descriptions of the solves that did not converge.
    pub failures: Vec<String>,
}

impl ExperimentOutput {
    fn new(experiment: Experiment, table: ResultTable) -> Self {
        Self { experiment, table, history: None, metrics: Vec::new(), chart: None, failures: Vec::new() }
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn all_converged(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn metrics_table(&self) -> ResultTable {
        let mut t = ResultTable::new(["metric", "value"]);
        for (name, v) in &self.metrics {
            t.push(vec![Value::from(name.as_str()), Value::Float(*v)]).expect("two cells");
        }
        t
    }

    /// Writes `<name>.csv` and, when present, `<name>_history.csv`,
    /// `<name>_metrics.csv` and `<name>.svg`. Returns the paths written.
    pub fn write(&self, dir: &Path, plot: bool) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let name = self.experiment.name();
        let mut written = Vec::new();
        let mut emit = |file: String, contents: String| -> Result<()> {
            let path = dir.join(file);
            std::fs::write(&path, contents)?;
            written.push(path);
            Ok(())
        };
        emit(format!("{name}.csv"), self.table.to_csv())?;
        if let Some(h) = &self.history {
            emit(format!("{name}_history.csv"), h.to_csv())?;
        }
        if !self.metrics.is_empty() {
            emit(format!("{name}_metrics.csv"), self.metrics_table().to_csv())?;
        }
        if let (true, Some((spec, series))) = (plot, &self.chart) {
            emit(format!("{name}.svg"), line_chart(spec, series)?)?;
        }
        Ok(written)
    }
}

/// Runs one experiment on a pool of `cfg.threads` workers.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build()?;
    pool.install(|| match cfg.experiment {
        Experiment::AdeDirect => ade::direct(cfg),
        Experiment::AdeHybrid => ade::hybrid(cfg),
        Experiment::AdeWr => ade::waveform_relaxation(cfg),
        Experiment::PararealCompare => parareal::compare(cfg),
        Experiment::WaveGmres => wave::run(cfg),
        Experiment::OptCtrl => control::run(cfg),
        Experiment::CondStudy => studies::conditioning(cfg),
        Experiment::SpectrumProbe => studies::spectrum(cfg),
        Experiment::NonlinearDemo => studies::nonlinear(cfg),
        Experiment::ScalingBench => scaling::scaling_bench(cfg),
    })
}

/// Runs, writes outputs, and turns unexpected non-convergence into an error
/// when `cfg.required` is set.
pub fn run_and_write(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let out = run_experiment(cfg)?;
    out.write(&cfg.out, cfg.plot)?;
    if cfg.required && !out.all_converged() {
        return Err(HarnessError::NotConverged {
            experiment: cfg.experiment.name().to_string(),
            detail: out.failures.join("; "),
        });
    }
    Ok(out)
}

/// Wall time of `f` in seconds.
fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed().as_secs_f64())
}

/// Largest entrywise difference between two trajectories.
fn max_abs_error(states: &[Vec<f64>], reference: &[Vec<f64>]) -> f64 {
    states
        .iter()
        .zip(reference)
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}

fn relative_diff(a: &RealBlocks, b: &RealBlocks) -> f64 {
    a.max_abs_diff(b) / b.max_abs().max(f64::MIN_POSITIVE)
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn zero_forcing(nx: usize) -> impl Fn(f64) -> Vec<f64> {
    move |_| vec![0.0; nx]
}
