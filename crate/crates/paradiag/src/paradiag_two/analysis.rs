//! Convergence theory made executable: contraction bounds, the spectrum of
//! the preconditioned leap-frog matrix, and the multistep root condition.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{ParadiagError, Result};
use crate::linalg::{dense_eigenvalues, kron};
use crate::time_disc::{AllAtOnceSystem, Scheme};

/// Time integrator family a contraction bound refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundScheme {
    BackwardEuler,
    Trapezoidal,
    /// Any stable one-step method.
    StableOneStep,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionBound {
    pub scheme: BoundScheme,
    pub alpha: f64,
    pub horizon: f64,
    /// Lower bound `r` on the real parts of `σ(A)`.
    pub abscissa: f64,
    pub value: f64,
}

/// `αe^{−Tr}/(1 − αe^{−Tr})` for backward Euler, `α/(1 − α)` otherwise.
pub fn contraction_bound(scheme: BoundScheme, alpha: f64, horizon: f64, abscissa: f64) -> Result<ContractionBound> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ParadiagError::InvalidParameter(format!("alpha must lie in (0,1), got {alpha}")));
    }
    if !(horizon >= 0.0) || !abscissa.is_finite() {
        return Err(ParadiagError::InvalidParameter("need a finite horizon T >= 0 and abscissa r".into()));
    }
    let q = match scheme {
        BoundScheme::BackwardEuler => alpha * (-horizon * abscissa).exp(),
        BoundScheme::Trapezoidal | BoundScheme::StableOneStep => alpha,
    };
    if q >= 1.0 {
        return Err(ParadiagError::InvalidParameter(format!("bound undefined: alpha*exp(-Tr) = {q} >= 1")));
    }
    Ok(ContractionBound { scheme, alpha, horizon, abscissa, value: q / (1.0 - q) })
}

/// Largest dense probe.
pub const SPECTRUM_PROBE_CAP: usize = 4096;

/// Eigenvalues of `P_α⁻¹A` for a system with lower Toeplitz stencils,
/// computed densely.
pub fn spectrum_probe(system: &AllAtOnceSystem, alpha: f64) -> Result<Vec<Complex64>> {
    let n = system.nt() * system.nx();
    if n > SPECTRUM_PROBE_CAP {
        return Err(ParadiagError::TooLarge { context: "dense spectrum probe", size: n, cap: SPECTRUM_PROBE_CAP });
    }
    let (c1, c2) = system.circulant_pair(alpha)?.time_matrices();
    let m = system.mass.to_dense();
    let k = system.stiffness.to_dense();
    let p = kron(&c1.to_dense(), &m) + kron(&c2.to_dense(), &k);
    let a = system.to_dense();
    let x = p
        .lu()
        .solve(&a)
        .ok_or_else(|| ParadiagError::InvalidParameter("preconditioner is singular".into()))?;
    dense_eigenvalues(&x)
}

/// Eigenvalues `1/(1 − αe^{±i·nt·θⱼ})`, `θⱼ = arctan √(λⱼ² − 1)`, with `λⱼ`
/// the eigenvalues of `I + Δt²/2·A`, predicted for a leap-frog system.
pub fn predicted_leapfrog_spectrum(system: &AllAtOnceSystem, alpha: f64) -> Result<Vec<Complex64>> {
    if system.scheme != Scheme::Leapfrog || !system.stiffness.is_symmetric() {
        return Err(ParadiagError::InvalidParameter("prediction needs a leap-frog system with symmetric A".into()));
    }
    let dt = system.grid.steps()[0];
    let nt = system.nt() as f64;
    let d = DMatrix::identity(system.nx(), system.nx()) + system.stiffness.to_dense() * (0.5 * dt * dt);
    let mut out = Vec::with_capacity(2 * system.nx());
    for lambda in d.symmetric_eigenvalues().iter() {
        let theta = (lambda * lambda - 1.0).max(0.0).sqrt().atan();
        for sign in [1.0, -1.0] {
            let e = Complex64::from_polar(alpha, sign * nt * theta);
            out.push(1.0 / (1.0 - e));
        }
    }
    Ok(out)
}

/// Outcome of comparing a probed spectrum with the leap-frog prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumCheck {
    pub unit_count: usize,
    pub expected_unit_count: usize,
    /// Smallest and largest `|z − 1|` over the non-unit eigenvalues.
    pub distance_range: (f64, f64),
    /// Annulus `[α/(1+α), α/(1−α)]`; `None` for `α ≥ 1`.
    pub annulus: Option<(f64, f64)>,
    /// Largest distance from a non-unit eigenvalue to the nearest predicted value.
    pub max_match_error: f64,
    pub holds: bool,
}

pub const UNIT_TOL: f64 = 1e-9;
pub const MATCH_TOL: f64 = 1e-8;

/// Checks the unit-eigenvalue count, the annulus and the explicit values.
pub fn check_leapfrog_spectrum(system: &AllAtOnceSystem, alpha: f64, eigenvalues: &[Complex64]) -> Result<SpectrumCheck> {
    let predicted = predicted_leapfrog_spectrum(system, alpha)?;
    let one = Complex64::new(1.0, 0.0);
    let (unit, rest): (Vec<Complex64>, Vec<Complex64>) =
        eigenvalues.iter().partition(|z| (**z - one).norm() <= UNIT_TOL);
    let expected_unit_count = (system.nt().saturating_sub(2)) * system.nx();
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    let mut max_match_error: f64 = 0.0;
    for z in &rest {
        let d = (*z - one).norm();
        lo = lo.min(d);
        hi = hi.max(d);
        let nearest = predicted.iter().map(|p| (*p - *z).norm()).fold(f64::INFINITY, f64::min);
        max_match_error = max_match_error.max(nearest);
    }
    let annulus = (alpha < 1.0).then(|| (alpha / (1.0 + alpha), alpha / (1.0 - alpha)));
    let slack = 1e-12;
    let in_annulus = match annulus {
        Some((a, b)) => rest.is_empty() || (lo >= a - slack && hi <= b + slack),
        None => true,
    };
    let holds = unit.len() == expected_unit_count && in_annulus && max_match_error <= MATCH_TOL;
    Ok(SpectrumCheck {
        unit_count: unit.len(),
        expected_unit_count,
        distance_range: (lo, hi),
        annulus,
        max_match_error,
        holds,
    })
}

/// Roots closer than this are one multiple root.
pub const ROOT_CLUSTER_TOL: f64 = 1e-8;

/// Root condition of `p(s; z) = Σⱼ (aⱼ + z bⱼ)s^{r−j}`: every root has
/// `|s| < 1`, or `|s| = 1` and is simple.
pub fn multistep_root_condition(a: &[f64], b: &[f64], z: Complex64) -> Result<bool> {
    if a.len() != b.len() || a.is_empty() {
        return Err(ParadiagError::InvalidParameter("coefficient vectors must be non-empty and of equal length".into()));
    }
    let coeffs: Vec<Complex64> = a.iter().zip(b).map(|(&aj, &bj)| aj + z * bj).collect();
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if coeffs[0].norm() <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
        return Err(ParadiagError::InvalidParameter("leading coefficient of the characteristic polynomial vanishes".into()));
    }
    let roots = polynomial_roots(&coeffs)?;
    let deriv: Vec<Complex64> =
        coeffs.iter().take(coeffs.len() - 1).enumerate().map(|(j, c)| c * (coeffs.len() - 1 - j) as f64).collect();
    let deriv_scale: f64 = deriv.iter().map(|c| c.norm()).sum();
    for (i, s) in roots.iter().enumerate() {
        let modulus = s.norm();
        if modulus > 1.0 + ROOT_CLUSTER_TOL {
            return Ok(false);
        }
        if modulus >= 1.0 - ROOT_CLUSTER_TOL {
            let clustered = roots.iter().enumerate().any(|(j, t)| j != i && (s - t).norm() <= ROOT_CLUSTER_TOL);
            // A double root splits into a pair about √ε apart, so the
            // distance test alone misses it; a vanishing derivative does not.
            let flat = horner(&deriv, *s).norm() <= 1e-6 * deriv_scale;
            if clustered || flat {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn horner(coeffs: &[Complex64], x: Complex64) -> Complex64 {
    coeffs.iter().fold(Complex64::new(0.0, 0.0), |acc, c| acc * x + c)
}

/// All roots of `Σ cⱼ s^{d−j}` (highest degree first) by Aberth iteration.
pub fn polynomial_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let degree = coeffs.len().saturating_sub(1);
    if degree == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[0];
    if lead.norm() == 0.0 {
        return Err(ParadiagError::InvalidParameter("leading coefficient is zero".into()));
    }
    let monic: Vec<Complex64> = coeffs.iter().map(|c| c / lead).collect();
    let deriv: Vec<Complex64> = monic[..degree].iter().enumerate().map(|(j, c)| c * (degree - j) as f64).collect();
    let radius = 1.0 + monic[1..].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut roots: Vec<Complex64> = (0..degree)
        .map(|k| Complex64::from_polar(0.5 * radius, 2.0 * std::f64::consts::PI * k as f64 / degree as f64 + 0.4))
        .collect();
    for _ in 0..500 {
        let mut max_step: f64 = 0.0;
        for i in 0..degree {
            let x = roots[i];
            let p = horner(&monic, x);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / horner(&deriv, x);
            let repulsion: Complex64 = (0..degree)
                .filter(|&j| j != i)
                .map(|j| {
                    let d = x - roots[j];
                    if d.norm() == 0.0 { Complex64::new(0.0, 0.0) } else { 1.0 / d }
                })
                .sum();
            let step = ratio / (1.0 - ratio * repulsion);
            if step.is_finite() {
                roots[i] = x - step;
                max_step = max_step.max(step.norm() / x.norm().max(1.0));
            }
        }
        if max_step <= 1e-15 {
            break;
        }
    }
    if roots.iter().any(|r| !r.is_finite()) {
        return Err(ParadiagError::RootFinding("non-finite polynomial root".into()));
    }
    Ok(roots)
}
