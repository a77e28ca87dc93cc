use std::time::Instant;

use crate::report::SolveReport;

/// Which residual the stopping test measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StoppingNorm {
    /// `‖P⁻¹(b − Ax)‖ / ‖P⁻¹b‖`.
    #[default]
    Preconditioned,
    /// `‖b − Ax‖ / ‖b‖`; costs one extra operator application per iteration.
    Unpreconditioned,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrylovConfig {
    pub tol: f64,
    pub maxit: usize,
    /// Restart length; `None` keeps the full Krylov basis.
    pub restart: Option<usize>,
    pub stopping: StoppingNorm,
}

impl KrylovConfig {
    pub fn new(tol: f64, maxit: usize) -> Result<Self, KrylovError> {
        let cfg = Self { tol, maxit, restart: None, stopping: StoppingNorm::Preconditioned };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_restart(mut self, restart: usize) -> Self {
        self.restart = Some(restart);
        self
    }

    pub fn with_stopping(mut self, stopping: StoppingNorm) -> Self {
        self.stopping = stopping;
        self
    }

    pub fn validate(&self) -> Result<(), KrylovError> {
        if !(self.tol > 0.0) {
            return Err(KrylovError::InvalidConfig(format!("tol must be positive, got {}", self.tol)));
        }
        if self.maxit == 0 {
            return Err(KrylovError::InvalidConfig("maxit must be at least 1".into()));
        }
        if self.restart == Some(0) {
            return Err(KrylovError::InvalidConfig("restart must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KrylovError {
    #[error("invalid Krylov configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GmresStatus {
    Converged,
    Breakdown,
    MaxIterations,
}

impl GmresStatus {
    fn label(self) -> &'static str {
        match self {
            GmresStatus::Converged => "converged",
            GmresStatus::Breakdown => "breakdown",
            GmresStatus::MaxIterations => "max iterations",
        }
    }
}

const BREAKDOWN: f64 = 1e-14;

/// Left-preconditioned GMRES for `P⁻¹A x = P⁻¹b`.
///
/// Modified Gram-Schmidt with one reorthogonalization pass and Givens
/// rotations. The residual history is recorded in the preconditioned norm;
/// with [`StoppingNorm::Unpreconditioned`] the true residual history is kept
/// as well and drives the stopping test.
pub fn gmres<A, P, E>(
    mut apply_op: A,
    mut apply_precond: P,
    b: &[f64],
    x0: &[f64],
    cfg: &KrylovConfig,
) -> Result<(Vec<f64>, SolveReport), E>
where
    A: FnMut(&[f64]) -> Result<Vec<f64>, E>,
    P: FnMut(&[f64]) -> Result<Vec<f64>, E>,
    E: From<KrylovError>,
{
    cfg.validate()?;
    let n = b.len();
    if x0.len() != n {
        return Err(KrylovError::Dimension { expected: n, got: x0.len() }.into());
    }
    let start = Instant::now();
    let track_true = cfg.stopping == StoppingNorm::Unpreconditioned;

    let mut report = SolveReport::default();
    let b_norm = norm(b);
    if b_norm == 0.0 {
        report.converged = true;
        report.residual_history = vec![0.0];
        if track_true {
            report.true_residual_history = Some(vec![0.0]);
        }
        report.status = GmresStatus::Converged.label().into();
        report.wall_time = start.elapsed();
        return Ok((vec![0.0; n], report));
    }
    let pb_norm = norm(&apply_precond(b)?);
    let pb_norm = if pb_norm > 0.0 { pb_norm } else { 1.0 };

    let mut x = x0.to_vec();
    let mut true_hist = Vec::new();
    let mut status = GmresStatus::MaxIterations;
    let cycle_len = cfg.restart.unwrap_or(cfg.maxit).min(cfg.maxit);

    'outer: loop {
        let ax = apply_op(&x)?;
        let raw: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let true_rel = norm(&raw) / b_norm;
        let r = apply_precond(&raw)?;
        let beta = norm(&r);
        let rel = beta / pb_norm;
        if report.residual_history.is_empty() {
            report.residual_history.push(rel);
            if track_true {
                true_hist.push(true_rel);
            }
        }
        let met = |prec: f64, tru: f64| match cfg.stopping {
            StoppingNorm::Preconditioned => prec <= cfg.tol,
            StoppingNorm::Unpreconditioned => tru <= cfg.tol,
        };
        if met(rel, true_rel) || beta == 0.0 {
            status = GmresStatus::Converged;
            break;
        }
        if report.iterations >= cfg.maxit {
            break;
        }

        let m = cycle_len.min(cfg.maxit - report.iterations);
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        // Hessenberg columns, already rotated.
        let mut hess: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut cs: Vec<f64> = Vec::with_capacity(m);
        let mut sn: Vec<f64> = Vec::with_capacity(m);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;

        for j in 0..m {
            let mut w = apply_precond(&apply_op(&basis[j])?)?;
            let mut h = vec![0.0; j + 2];
            for _pass in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let c = dot(&w, v);
                    h[i] += c;
                    axpy(-c, v, &mut w);
                }
            }
            let sub = norm(&w);
            h[j + 1] = sub;
            let col_scale = h.iter().map(|v| v * v).sum::<f64>().sqrt();
            let broke = sub <= BREAKDOWN * col_scale.max(f64::MIN_POSITIVE);

            for i in 0..j {
                let t = cs[i] * h[i] + sn[i] * h[i + 1];
                h[i + 1] = -sn[i] * h[i] + cs[i] * h[i + 1];
                h[i] = t;
            }
            let (c, s) = givens(h[j], h[j + 1]);
            h[j] = c * h[j] + s * h[j + 1];
            h[j + 1] = 0.0;
            g[j + 1] = -s * g[j];
            g[j] *= c;
            cs.push(c);
            sn.push(s);
            hess.push(h);
            report.iterations += 1;

            let prec_rel = g[j + 1].abs() / pb_norm;
            report.residual_history.push(prec_rel);

            let need_x = track_true || broke || j + 1 == m;
            let mut tru = f64::NAN;
            if need_x {
                let y = back_substitute(&hess, &g[..=j]);
                let mut xn = x.clone();
                for (k, yk) in y.iter().enumerate() {
                    axpy(*yk, &basis[k], &mut xn);
                }
                if track_true {
                    let axn = apply_op(&xn)?;
                    let res: Vec<f64> = b.iter().zip(&axn).map(|(bi, ai)| bi - ai).collect();
                    tru = norm(&res) / b_norm;
                    true_hist.push(tru);
                }
                if met(prec_rel, tru) {
                    x = xn;
                    status = GmresStatus::Converged;
                    break 'outer;
                }
                if broke {
                    x = xn;
                    status = GmresStatus::Breakdown;
                    break 'outer;
                }
                if j + 1 == m {
                    x = xn;
                    if report.iterations >= cfg.maxit {
                        break 'outer;
                    }
                    continue 'outer;
                }
            } else if met(prec_rel, tru) {
                let y = back_substitute(&hess, &g[..=j]);
                for (k, yk) in y.iter().enumerate() {
                    axpy(*yk, &basis[k], &mut x);
                }
                status = GmresStatus::Converged;
                break 'outer;
            }
            basis.push(w.iter().map(|v| v / sub).collect());
        }
    }

    report.converged = status == GmresStatus::Converged;
    report.status = status.label().into();
    if track_true {
        report.true_residual_history = Some(true_hist);
    }
    report.refresh_contraction();
    report.wall_time = start.elapsed();
    Ok((x, report))
}

fn givens(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        (1.0, 0.0)
    } else {
        let r = a.hypot(b);
        (a / r, b / r)
    }
}

fn back_substitute(hess: &[Vec<f64>], g: &[f64]) -> Vec<f64> {
    let k = g.len();
    let mut y = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = g[i];
        for (j, yj) in y.iter().enumerate().skip(i + 1) {
            s -= hess[j][i] * yj;
        }
        y[i] = s / hess[i][i];
    }
    y
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
