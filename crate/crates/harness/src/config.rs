//! Flat `key = value` experiment configuration.
//!
//! A configuration starts from the defaults of one experiment, then applies
//! a config file, then `--set key=value` overrides. `#` starts a comment.
//! Lists are comma separated. Unknown keys and malformed values are errors
//! that name the key (and the line, for files).

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use paradiag::paradiag_two::{JacobianAveraging, RkKind};

use crate::error::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    AdeDirect,
    AdeHybrid,
    AdeWr,
    PararealCompare,
    WaveGmres,
    OptCtrl,
    CondStudy,
    SpectrumProbe,
    NonlinearDemo,
    ScalingBench,
}

impl Experiment {
    pub const ALL: [Experiment; 10] = [
        Self::AdeDirect,
        Self::AdeHybrid,
        Self::AdeWr,
        Self::PararealCompare,
        Self::WaveGmres,
        Self::OptCtrl,
        Self::CondStudy,
        Self::SpectrumProbe,
        Self::NonlinearDemo,
        Self::ScalingBench,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::AdeDirect => "ade-direct",
            Self::AdeHybrid => "ade-hybrid",
            Self::AdeWr => "ade-wr",
            Self::PararealCompare => "parareal-compare",
            Self::WaveGmres => "wave-gmres",
            Self::OptCtrl => "optctrl",
            Self::CondStudy => "cond-study",
            Self::SpectrumProbe => "spectrum-probe",
            Self::NonlinearDemo => "nonlinear-demo",
            Self::ScalingBench => "scaling-bench",
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            Self::AdeDirect => "direct diagonalization on geometric grids vs sequential stepping (1D advection-diffusion)",
            Self::AdeHybrid => "direct diagonalization of the hybrid midpoint scheme; global error vs step count",
            Self::AdeWr => "waveform-relaxation iteration: error histories and contraction vs the bound",
            Self::PararealCompare => "classical parareal vs parareal with an α-circulant coarse correction",
            Self::WaveGmres => "leap-frog wave equation with preconditioned GMRES, or the hybrid direct solver",
            Self::OptCtrl => "wave optimal control with the Strang-type preconditioner",
            Self::CondStudy => "conditioning of the hybrid eigenvector matrix vs step count",
            Self::SpectrumProbe => "dense spectrum of the preconditioned leap-frog matrix vs its prediction",
            Self::NonlinearDemo => "simplified Newton with α-circulant Jacobians on u' = -u^3",
            Self::ScalingBench => "wall time of the shifted-solve stage at several thread counts",
        }
    }
}

impl FromStr for Experiment {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| ConfigError::new(format!("unknown experiment '{s}'")))
    }
}

impl std::fmt::Display for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Solver used by `wave-gmres`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaveScheme {
    /// Leap-frog all-at-once system, α-circulant preconditioned GMRES.
    Leapfrog,
    /// Hybrid second-order scheme, solved directly by diagonalization.
    Hybrid,
}

impl FromStr for WaveScheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "leapfrog" => Ok(Self::Leapfrog),
            "hybrid" => Ok(Self::Hybrid),
            other => Err(format!("expected 'leapfrog' or 'hybrid', got '{other}'")),
        }
    }
}

impl std::fmt::Display for WaveScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Leapfrog => "leapfrog",
            Self::Hybrid => "hybrid",
        })
    }
}

/// Every setting an experiment may read. Each experiment ignores the keys
/// it does not use.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub nu: f64,
    pub nus: Vec<f64>,
    pub gammas: Vec<f64>,
    pub t_final: f64,
    pub cells: usize,
    pub meshes: Vec<usize>,
    pub dim: usize,
    pub nt: usize,
    pub nts: Vec<usize>,
    pub tau: f64,
    pub dt_last: f64,
    pub windows: usize,
    pub alpha: f64,
    pub alphas: Vec<f64>,
    pub thetas: Vec<f64>,
    pub tol: f64,
    pub maxit: usize,
    pub amplitude: f64,
    pub fine: Vec<RkKind>,
    pub coarse_dt: f64,
    pub substeps: usize,
    pub scheme: WaveScheme,
    pub sizes: Vec<(usize, usize)>,
    pub averaging: Vec<JacobianAveraging>,
    pub thread_counts: Vec<usize>,
    pub repeats: usize,
    pub threads: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub plot: bool,
    pub required: bool,
    /// Experiments run by the `run` command.
    pub experiments: Vec<Experiment>,
}

/// Name and one-line help of every accepted key.
pub const KEYS: &[(&str, &str)] = &[
    ("nu", "diffusion coefficient"),
    ("nus", "list of diffusion coefficients"),
    ("gammas", "list of control regularization weights"),
    ("t_final", "time horizon (per window for windowed runs: total horizon)"),
    ("cells", "mesh intervals per space direction"),
    ("meshes", "list of mesh interval counts"),
    ("dim", "space dimension of the advection-diffusion case (1 or 2)"),
    ("nt", "time steps"),
    ("nts", "list of time step counts"),
    ("tau", "geometric step ratio (> 1)"),
    ("dt_last", "last step of a geometric grid"),
    ("windows", "consecutive time windows"),
    ("alpha", "circulant weight"),
    ("alphas", "list of circulant weights"),
    ("thetas", "list of theta-method parameters (1 = backward Euler, 0.5 = trapezoidal)"),
    ("tol", "stopping tolerance"),
    ("maxit", "iteration cap"),
    ("amplitude", "random initial guesses are uniform on [-amplitude, amplitude]"),
    ("fine", "list of fine propagators: backward_euler, sdirk2, radau_iia3, lobatto_iiic4"),
    ("coarse_dt", "coarse step (one parareal slice)"),
    ("substeps", "fine steps per coarse step (>= 2)"),
    ("scheme", "wave solver: leapfrog or hybrid"),
    ("sizes", "list of NXxNT pairs, e.g. 8x8, 16x12"),
    ("averaging", "list of Jacobian averagings: mean_jacobian, jacobian_of_mean"),
    ("thread_counts", "thread counts for the scaling bench (must include 1)"),
    ("repeats", "timing repetitions (the minimum is reported)"),
    ("threads", "worker threads (0 = all available)"),
    ("seed", "random seed"),
    ("out", "output directory"),
    ("plot", "write an SVG chart (true/false)"),
    ("required", "non-convergence is an error (true/false)"),
    ("experiments", "experiments executed by the run command"),
];

impl ExperimentConfig {
    fn base(experiment: Experiment) -> Self {
        Self {
            experiment,
            nu: 1e-2,
            nus: vec![1e-2],
            gammas: vec![1e-2],
            t_final: 1.0,
            cells: 64,
            meshes: vec![32],
            dim: 1,
            nt: 64,
            nts: vec![16],
            tau: 1.2,
            dt_last: 0.05,
            windows: 1,
            alpha: 1e-2,
            alphas: vec![1e-2],
            thetas: vec![1.0],
            tol: 1e-8,
            maxit: 100,
            amplitude: 0.0,
            fine: vec![RkKind::RadauIIA3],
            coarse_dt: 1.0 / 16.0,
            substeps: 32,
            scheme: WaveScheme::Leapfrog,
            sizes: vec![(16, 12)],
            averaging: vec![JacobianAveraging::MeanJacobian],
            thread_counts: vec![1, 2, 4],
            repeats: 1,
            threads: 0,
            seed: 2021,
            out: PathBuf::from("results"),
            plot: true,
            required: true,
            experiments: Vec::new(),
        }
    }

    /// Desk-scale versions of the reference setups.
    pub fn defaults(experiment: Experiment) -> Self {
        let mut c = Self::base(experiment);
        match experiment {
            Experiment::AdeDirect => {
                c.nu = 1e-3;
                c.cells = 128;
                c.thetas = vec![1.0, 0.5];
                c.tau = 1.16;
                c.nts = vec![8, 16, 32];
            }
            Experiment::AdeHybrid => {
                c.nu = 1e-3;
                c.cells = 256;
                c.nts = vec![4, 8, 16, 32, 64, 128];
            }
            Experiment::AdeWr => {
                c.nus = vec![1e-2, 1e-4];
                c.thetas = vec![0.5];
                c.cells = 128;
                c.nt = 64;
                c.tol = 1e-12;
                c.maxit = 30;
                c.amplitude = 20.0;
            }
            Experiment::PararealCompare => {
                c.nu = 0.1;
                c.t_final = 4.0;
                c.cells = 128;
                c.alpha = 0.1;
                c.fine = vec![RkKind::BackwardEuler, RkKind::Sdirk2, RkKind::RadauIIA3, RkKind::LobattoIIIC4];
                c.tol = 1e-8;
                c.maxit = 64;
                c.amplitude = 20.0;
            }
            Experiment::WaveGmres => {
                c.t_final = 2.0;
                c.meshes = vec![32, 64];
                c.alphas = vec![0.1, 1.0];
                c.tol = 1e-10;
                c.maxit = 200;
                c.cells = 16;
                c.nts = vec![4, 8, 16, 32, 64, 128, 256];
            }
            Experiment::OptCtrl => {
                c.t_final = 2.0;
                c.meshes = vec![16, 32];
                c.gammas = vec![1e-2, 1e-4, 1e-6, 1e-8, 1e-10];
                c.tol = 1e-7;
            }
            Experiment::CondStudy => {
                c.nts = vec![8, 16, 32, 64, 128, 256, 512];
            }
            Experiment::SpectrumProbe => {
                c.sizes = vec![(8, 8), (16, 12)];
                c.alphas = vec![0.1, 0.3];
            }
            Experiment::NonlinearDemo => {
                c.cells = 4;
                c.nt = 32;
                c.thetas = vec![1.0, 0.5];
                c.averaging = vec![JacobianAveraging::MeanJacobian, JacobianAveraging::JacobianOfMean];
                c.tol = 1e-12;
                c.maxit = 50;
            }
            Experiment::ScalingBench => {
                c.dim = 2;
                c.cells = 64;
                c.nt = 256;
                c.alpha = 0.02;
            }
        }
        c
    }

    /// Defaults, then the config file text, then the overrides.
    pub fn resolve(experiment: Experiment, file: Option<&str>, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut cfg = Self::defaults(experiment);
        if let Some(text) = file {
            for entry in parse_config_text(text)? {
                cfg.set(&entry.key, &entry.value).map_err(|e| e.at_line(entry.line))?;
            }
        }
        for o in overrides {
            let (key, value) = parse_override(o)?;
            cfg.set(&key, &value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let err = |m: String| ConfigError::for_key(key, m);
        match key {
            "nu" => self.nu = positive(value).map_err(err)?,
            "nus" => self.nus = list(value, positive).map_err(err)?,
            "gammas" => self.gammas = list(value, positive).map_err(err)?,
            "t_final" => self.t_final = positive(value).map_err(err)?,
            "cells" => self.cells = at_least(value, 2).map_err(err)?,
            "meshes" => self.meshes = list(value, |v| at_least(v, 2)).map_err(err)?,
            "dim" => {
                self.dim = match at_least(value, 1).map_err(err)? {
                    d @ (1 | 2) => d,
                    d => return Err(err(format!("dimension must be 1 or 2, got {d}"))),
                }
            }
            "nt" => self.nt = at_least(value, 1).map_err(err)?,
            "nts" => self.nts = list(value, |v| at_least(v, 1)).map_err(err)?,
            "tau" => {
                let t = finite(value).map_err(err)?;
                if t <= 1.0 {
                    return Err(err(format!("must exceed 1, got {t}")));
                }
                self.tau = t;
            }
            "dt_last" => self.dt_last = positive(value).map_err(err)?,
            "windows" => self.windows = at_least(value, 1).map_err(err)?,
            "alpha" => self.alpha = unit_weight(value).map_err(err)?,
            "alphas" => self.alphas = list(value, unit_weight).map_err(err)?,
            "thetas" => self.thetas = list(value, theta).map_err(err)?,
            "tol" => self.tol = positive(value).map_err(err)?,
            "maxit" => self.maxit = at_least(value, 1).map_err(err)?,
            "amplitude" => {
                let a = finite(value).map_err(err)?;
                if a < 0.0 {
                    return Err(err(format!("must be non-negative, got {a}")));
                }
                self.amplitude = a;
            }
            "fine" => self.fine = list(value, |v| v.parse::<RkKind>().map_err(|e| e.to_string())).map_err(err)?,
            "coarse_dt" => self.coarse_dt = positive(value).map_err(err)?,
            "substeps" => self.substeps = at_least(value, 2).map_err(err)?,
            "scheme" => self.scheme = value.parse().map_err(err)?,
            "sizes" => self.sizes = list(value, size_pair).map_err(err)?,
            "averaging" => {
                self.averaging =
                    list(value, |v| v.parse::<JacobianAveraging>().map_err(|e| e.to_string())).map_err(err)?
            }
            "thread_counts" => self.thread_counts = list(value, |v| at_least(v, 1)).map_err(err)?,
            "repeats" => self.repeats = at_least(value, 1).map_err(err)?,
            "threads" => self.threads = at_least(value, 0).map_err(err)?,
            "seed" => self.seed = value.parse().map_err(|_| err(format!("expected an unsigned integer, got '{value}'")))?,
            "out" => {
                if value.is_empty() {
                    return Err(err("empty path".into()));
                }
                self.out = PathBuf::from(value);
            }
            "plot" => self.plot = boolean(value).map_err(err)?,
            "required" => self.required = boolean(value).map_err(err)?,
            "experiments" => {
                self.experiments = if value.trim().is_empty() {
                    Vec::new()
                } else {
                    list(value, |v| v.parse::<Experiment>().map_err(|e| e.message)).map_err(err)?
                }
            }
            _ => return Err(ConfigError::for_key(key, "unknown key")),
        }
        Ok(())
    }

    /// Value of a key in config syntax; `None` for unknown keys.
    pub fn get(&self, key: &str) -> Option<String> {
        fn join<T: ToString>(v: &[T]) -> String {
            v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
        }
        fn floats(v: &[f64]) -> String {
            v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")
        }
        Some(match key {
            "nu" => format!("{:?}", self.nu),
            "nus" => floats(&self.nus),
            "gammas" => floats(&self.gammas),
            "t_final" => format!("{:?}", self.t_final),
            "cells" => self.cells.to_string(),
            "meshes" => join(&self.meshes),
            "dim" => self.dim.to_string(),
            "nt" => self.nt.to_string(),
            "nts" => join(&self.nts),
            "tau" => format!("{:?}", self.tau),
            "dt_last" => format!("{:?}", self.dt_last),
            "windows" => self.windows.to_string(),
            "alpha" => format!("{:?}", self.alpha),
            "alphas" => floats(&self.alphas),
            "thetas" => floats(&self.thetas),
            "tol" => format!("{:?}", self.tol),
            "maxit" => self.maxit.to_string(),
            "amplitude" => format!("{:?}", self.amplitude),
            "fine" => join(&self.fine),
            "coarse_dt" => format!("{:?}", self.coarse_dt),
            "substeps" => self.substeps.to_string(),
            "scheme" => self.scheme.to_string(),
            "sizes" => self.sizes.iter().map(|(a, b)| format!("{a}x{b}")).collect::<Vec<_>>().join(", "),
            "averaging" => join(&self.averaging),
            "thread_counts" => join(&self.thread_counts),
            "repeats" => self.repeats.to_string(),
            "threads" => self.threads.to_string(),
            "seed" => self.seed.to_string(),
            "out" => self.out.display().to_string(),
            "plot" => self.plot.to_string(),
            "required" => self.required.to_string(),
            "experiments" => join(&self.experiments),
            _ => return None,
        })
    }

    /// Checks that involve several keys.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.experiment == Experiment::PararealCompare {
            let slices = self.t_final / self.coarse_dt;
            if (slices - slices.round()).abs() > 1e-9 * slices || slices.round() < 1.0 {
                return Err(ConfigError::for_key(
                    "coarse_dt",
                    format!("must divide t_final = {} into whole slices", self.t_final),
                ));
            }
        }
        if self.experiment == Experiment::ScalingBench && !self.thread_counts.contains(&1) {
            return Err(ConfigError::for_key("thread_counts", "must include 1 (the speedup baseline)"));
        }
        if self.experiment == Experiment::WaveGmres && self.scheme == WaveScheme::Hybrid && self.nts.iter().any(|&n| n < 3) {
            return Err(ConfigError::for_key("nts", "the hybrid wave scheme needs at least 3 steps"));
        }
        Ok(())
    }

    /// Every key with its current value and help, as a loadable config file.
    pub fn describe(&self) -> String {
        let mut s = format!("# {}: {}\n", self.experiment, self.experiment.summary());
        for (key, help) in KEYS {
            let value = self.get(key).expect("every listed key renders");
            let _ = writeln!(s, "{key} = {value}  # {help}");
        }
        s
    }
}

/// One `key = value` line of a config file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigEntry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

fn valid_key(key: &str) -> bool {
    !key.is_empty() && key.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_')
}

fn split_pair(text: &str) -> Result<(String, String), ConfigError> {
    let (key, value) = text
        .split_once('=')
        .ok_or_else(|| ConfigError::new(format!("expected 'key = value', got '{}'", text.trim())))?;
    let key = key.trim();
    if !valid_key(key) {
        return Err(ConfigError::new(format!("invalid key '{key}'")));
    }
    Ok((key.to_string(), value.trim().to_string()))
}

/// Parses a config file into entries. Syntax only: keys are checked when
/// they are applied.
pub fn parse_config_text(text: &str) -> Result<Vec<ConfigEntry>, ConfigError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = split_pair(content).map_err(|e| e.at_line(line))?;
        if !seen.insert(key.clone()) {
            return Err(ConfigError::for_key(&key, "given more than once").at_line(line));
        }
        out.push(ConfigEntry { line, key, value });
    }
    Ok(out)
}

/// Parses one `--set key=value` argument.
pub fn parse_override(arg: &str) -> Result<(String, String), ConfigError> {
    split_pair(arg)
}

fn finite(v: &str) -> Result<f64, String> {
    let x: f64 = v.parse().map_err(|_| format!("expected a number, got '{v}'"))?;
    if !x.is_finite() {
        return Err(format!("expected a finite number, got '{v}'"));
    }
    Ok(x)
}

fn positive(v: &str) -> Result<f64, String> {
    let x = finite(v)?;
    if x <= 0.0 {
        return Err(format!("must be positive, got {x}"));
    }
    Ok(x)
}

fn unit_weight(v: &str) -> Result<f64, String> {
    let x = positive(v)?;
    if x > 1.0 {
        return Err(format!("must lie in (0, 1], got {x}"));
    }
    Ok(x)
}

fn theta(v: &str) -> Result<f64, String> {
    let x = unit_weight(v)?;
    if x < 0.5 {
        return Err(format!("theta must lie in [0.5, 1], got {x}"));
    }
    Ok(x)
}

fn at_least(v: &str, min: usize) -> Result<usize, String> {
    let n: usize = v.parse().map_err(|_| format!("expected a non-negative integer, got '{v}'"))?;
    if n < min {
        return Err(format!("must be at least {min}, got {n}"));
    }
    Ok(n)
}

fn boolean(v: &str) -> Result<bool, String> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected true or false, got '{v}'")),
    }
}

fn size_pair(v: &str) -> Result<(usize, usize), String> {
    let (a, b) = v.split_once('x').ok_or_else(|| format!("expected NXxNT, got '{v}'"))?;
    Ok((at_least(a.trim(), 1)?, at_least(b.trim(), 2)?))
}

fn list<T>(v: &str, item: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    let items: Vec<T> = v.split(',').map(|s| item(s.trim())).collect::<Result<_, _>>()?;
    Ok(items)
}
