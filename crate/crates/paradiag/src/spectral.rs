//! α-circulant spectra, the weighted time transforms and the three-step
//! application of `P_α⁻¹ = (C₁⊗M + C₂⊗K)⁻¹`.
//!
//! With `Γ = diag(α^{n/nt})` and the unitary DFT `F` (ω = e^{2πi/nt}),
//! `C_j = Γ⁻¹F* D_j F Γ` where `D_j = diag(√nt·F·Γ·c_j)`. The inverse is
//! applied as
//!
//! 1. `S₁ = (F⊗I)(Γ⊗I) r`,
//! 2. `S₂,ₙ = (d₁[n]·M + d₂[n]·K)⁻¹ S₁,ₙ` for every `n` independently,
//! 3. `u = (Γ⁻¹⊗I)(F*⊗I) S₂`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::block::{ComplexBlocks, RealBlocks};
use crate::error::{check_dim, ParadiagError, Result};
use crate::fft::TimeFft;
use crate::shift::ShiftFactorCache;
use crate::space::SpaceOperator;
use crate::time_matrix::{check_pair, TimeMatrix};

/// Relative size of the imaginary part tolerated before a result is truncated
/// to its real part.
pub const IMAG_TOL: f64 = 1e-10;

/// First columns of the pair `C₁^(α)`, `C₂^(α)` and the corner weight α.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaCirculantPair {
    first_col_1: Vec<f64>,
    first_col_2: Vec<f64>,
    alpha: f64,
}

impl AlphaCirculantPair {
    pub fn new(first_col_1: Vec<f64>, first_col_2: Vec<f64>, alpha: f64) -> Result<Self> {
        validate_alpha(alpha)?;
        if first_col_1.is_empty() {
            return Err(ParadiagError::InvalidParameter("circulant columns must be non-empty".into()));
        }
        check_dim("circulant columns", first_col_1.len(), first_col_2.len())?;
        Ok(Self { first_col_1, first_col_2, alpha })
    }

    pub fn nt(&self) -> usize {
        self.first_col_1.len()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn first_col_1(&self) -> &[f64] {
        &self.first_col_1
    }

    pub fn first_col_2(&self) -> &[f64] {
        &self.first_col_2
    }

    /// Banded stencils with the α-weighted wrap-around entries as corners.
    pub fn time_matrices(&self) -> (TimeMatrix, TimeMatrix) {
        (circulant_matrix(&self.first_col_1, self.alpha), circulant_matrix(&self.first_col_2, self.alpha))
    }
}

fn circulant_matrix(col: &[f64], alpha: f64) -> TimeMatrix {
    let n = col.len();
    let width = col.iter().rposition(|&v| v != 0.0).unwrap_or(0);
    let mut m = TimeMatrix::zeros(n, width, 0);
    for j in 0..n {
        for (k, &c) in col.iter().enumerate().take(width + 1) {
            if c == 0.0 {
                continue;
            }
            let i = j + k;
            if i < n {
                m.set(i, j, c);
            } else {
                m.set(i - n, j, alpha * c);
            }
        }
    }
    m
}

pub(crate) fn validate_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(ParadiagError::InvalidParameter(format!("alpha must lie in (0,1], got {alpha}")))
    }
}

/// Eigenvalues of `C₁^(α)` and `C₂^(α)` in DFT order.
#[derive(Debug, Clone, PartialEq)]
pub struct CirculantSpectrum {
    pub d1: Vec<Complex64>,
    pub d2: Vec<Complex64>,
}

impl CirculantSpectrum {
    pub fn nt(&self) -> usize {
        self.d1.len()
    }

    pub fn shifts(&self) -> Vec<(Complex64, Complex64)> {
        self.d1.iter().copied().zip(self.d2.iter().copied()).collect()
    }
}

fn gamma_weights(nt: usize, alpha: f64) -> Vec<f64> {
    (0..nt).map(|n| alpha.powf(n as f64 / nt as f64)).collect()
}

/// `d_j = √nt·F·Γ·c_j`.
pub fn alpha_circulant_spectrum(pair: &AlphaCirculantPair) -> Result<CirculantSpectrum> {
    validate_alpha(pair.alpha)?;
    let nt = pair.nt();
    let fft = TimeFft::new(nt);
    let gamma = gamma_weights(nt, pair.alpha);
    let transform = |col: &[f64]| {
        let mut v: Vec<Complex64> = col.iter().zip(&gamma).map(|(c, g)| Complex64::new(c * g, 0.0)).collect();
        fft.unnormalized_f(&mut v);
        v
    };
    Ok(CirculantSpectrum { d1: transform(&pair.first_col_1), d2: transform(&pair.first_col_2) })
}

fn scale_blocks(v: &mut ComplexBlocks, weights: &[f64]) {
    let nx = v.nx();
    v.as_mut_slice().par_chunks_mut(nx).zip(weights.par_iter()).for_each(|(b, &w)| {
        b.iter_mut().for_each(|z| *z *= w);
    });
}

/// `(F⊗I)(Γ⊗I)v`.
pub fn weighted_forward_transform(v: &RealBlocks, alpha: f64) -> Result<ComplexBlocks> {
    weighted_forward_transform_complex(&v.to_complex(), alpha)
}

/// Complex-input variant of [`weighted_forward_transform`].
pub fn weighted_forward_transform_complex(v: &ComplexBlocks, alpha: f64) -> Result<ComplexBlocks> {
    validate_alpha(alpha)?;
    let mut out = v.clone();
    forward_in_place(&mut out, alpha, &TimeFft::new(v.nt()));
    Ok(out)
}

/// `(Γ⁻¹⊗I)(F*⊗I)v`, the exact inverse of [`weighted_forward_transform`].
pub fn weighted_inverse_transform(v: &ComplexBlocks, alpha: f64) -> Result<ComplexBlocks> {
    validate_alpha(alpha)?;
    let mut out = v.clone();
    inverse_in_place(&mut out, alpha, &TimeFft::new(v.nt()));
    Ok(out)
}

fn forward_in_place(v: &mut ComplexBlocks, alpha: f64, fft: &TimeFft) {
    if alpha != 1.0 {
        scale_blocks(v, &gamma_weights(v.nt(), alpha));
    }
    fft.apply_f(v);
}

fn inverse_in_place(v: &mut ComplexBlocks, alpha: f64, fft: &TimeFft) {
    fft.apply_f_adjoint(v);
    if alpha != 1.0 {
        let inv: Vec<f64> = gamma_weights(v.nt(), alpha).iter().map(|g| 1.0 / g).collect();
        scale_blocks(v, &inv);
    }
}

/// Step (b): block `n` of the result solves `(d₁[n]M + d₂[n]K)x = s1ₙ`.
///
/// A supplied cache must have been built from the same spectrum and
/// operators; otherwise one is built for this call.
pub fn shifted_block_solve(
    spectrum: &CirculantSpectrum,
    mass: &SpaceOperator,
    stiffness: &SpaceOperator,
    s1: &ComplexBlocks,
    cache: Option<&ShiftFactorCache>,
) -> Result<ComplexBlocks> {
    check_dim("shifted block solve", spectrum.nt(), s1.nt())?;
    check_dim("shifted block solve", mass.nx(), s1.nx())?;
    let shifts = spectrum.shifts();
    let owned;
    let cache = match cache {
        Some(c) if c.matches(&shifts, mass, stiffness) => c,
        Some(_) => {
            return Err(ParadiagError::InvalidParameter(
                "factor cache was built for a different spectrum or operator pair".into(),
            ))
        }
        None => {
            owned = ShiftFactorCache::build(&shifts, mass, stiffness, false)?;
            &owned
        }
    };
    let mut out = s1.clone();
    cache.solve_blocks(&mut out)?;
    Ok(out)
}

/// `P_α⁻¹ r` with `P_α = C₁^(α)⊗M + C₂^(α)⊗K`.
pub fn apply_alpha_circulant_inverse(
    pair: &AlphaCirculantPair,
    mass: &SpaceOperator,
    stiffness: &SpaceOperator,
    r: &RealBlocks,
    cache: Option<&ShiftFactorCache>,
) -> Result<RealBlocks> {
    let spectrum = alpha_circulant_spectrum(pair)?;
    let s1 = weighted_forward_transform(r, pair.alpha)?;
    let s2 = shifted_block_solve(&spectrum, mass, stiffness, &s1, cache)?;
    weighted_inverse_transform(&s2, pair.alpha)?.into_real_checked(IMAG_TOL)
}

/// Options for [`AlphaCirculantSolver`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolverOptions {
    /// Exploit `S_{nt−k} = conj(S_k)` for real data: factor and solve only
    /// `⌊nt/2⌋+1` shifts.
    pub conjugate_symmetry: bool,
}

/// Precomputed `P_α⁻¹`: spectrum, FFT plans and shift factorizations.
#[derive(Debug)]
pub struct AlphaCirculantSolver {
    pair: AlphaCirculantPair,
    spectrum: CirculantSpectrum,
    fft: TimeFft,
    cache: ShiftFactorCache,
    mass: SpaceOperator,
    stiffness: SpaceOperator,
    options: SolverOptions,
}

impl AlphaCirculantSolver {
    pub fn new(
        pair: AlphaCirculantPair,
        mass: &SpaceOperator,
        stiffness: &SpaceOperator,
        options: SolverOptions,
    ) -> Result<Self> {
        let spectrum = alpha_circulant_spectrum(&pair)?;
        let cache = ShiftFactorCache::build(&spectrum.shifts(), mass, stiffness, options.conjugate_symmetry)?;
        let fft = TimeFft::new(pair.nt());
        Ok(Self { pair, spectrum, fft, cache, mass: mass.clone(), stiffness: stiffness.clone(), options })
    }

    pub fn pair(&self) -> &AlphaCirculantPair {
        &self.pair
    }

    pub fn spectrum(&self) -> &CirculantSpectrum {
        &self.spectrum
    }

    pub fn cache(&self) -> &ShiftFactorCache {
        &self.cache
    }

    pub fn mass(&self) -> &SpaceOperator {
        &self.mass
    }

    pub fn stiffness(&self) -> &SpaceOperator {
        &self.stiffness
    }

    /// `P_α⁻¹ r` for real `r`.
    pub fn apply_inverse(&self, r: &RealBlocks) -> Result<RealBlocks> {
        self.check(r.nt(), r.nx())?;
        let mut s = r.to_complex();
        forward_in_place(&mut s, self.pair.alpha, &self.fft);
        if self.options.conjugate_symmetry {
            self.solve_half(&mut s)?;
        } else {
            self.cache.solve_blocks(&mut s)?;
        }
        inverse_in_place(&mut s, self.pair.alpha, &self.fft);
        s.into_real_checked(IMAG_TOL)
    }

    /// `P_α⁻¹ r` for complex `r`; no symmetry shortcut, no truncation.
    pub fn apply_inverse_complex(&self, r: &ComplexBlocks) -> Result<ComplexBlocks> {
        self.check(r.nt(), r.nx())?;
        let mut s = r.clone();
        forward_in_place(&mut s, self.pair.alpha, &self.fft);
        self.cache.solve_blocks(&mut s)?;
        inverse_in_place(&mut s, self.pair.alpha, &self.fft);
        Ok(s)
    }

    /// `P_α u`.
    pub fn apply(&self, u: &RealBlocks) -> Result<RealBlocks> {
        let (c1, c2) = self.pair.time_matrices();
        all_at_once_matvec(&c1, &c2, &self.mass, &self.stiffness, u)
    }

    fn check(&self, nt: usize, nx: usize) -> Result<()> {
        check_dim("alpha-circulant solve (nt)", self.pair.nt(), nt)?;
        check_dim("alpha-circulant solve (nx)", self.mass.nx(), nx)
    }

    fn solve_half(&self, s: &mut ComplexBlocks) -> Result<()> {
        let (nt, nx) = (s.nt(), s.nx());
        let half = nt / 2;
        s.as_mut_slice()
            .par_chunks_mut(nx)
            .enumerate()
            .take(half + 1)
            .try_for_each(|(n, b)| self.cache.solve_in_place(n, b))?;
        for n in half + 1..nt {
            let (lo, hi) = s.as_mut_slice().split_at_mut(n * nx);
            let mirror = &lo[(nt - n) * nx..(nt - n + 1) * nx];
            for (dst, src) in hi[..nx].iter_mut().zip(mirror) {
                *dst = src.conj();
            }
        }
        Ok(())
    }
}

/// `(B₁⊗M + B₂⊗K)u` without forming the Kronecker products.
pub fn all_at_once_matvec(
    b1: &TimeMatrix,
    b2: &TimeMatrix,
    mass: &SpaceOperator,
    stiffness: &SpaceOperator,
    u: &RealBlocks,
) -> Result<RealBlocks> {
    let nt = check_pair(b1, b2)?;
    check_dim("all-at-once matvec (nt)", nt, u.nt())?;
    check_dim("all-at-once matvec (nx)", mass.nx(), u.nx())?;
    check_dim("all-at-once matvec (nx)", stiffness.nx(), u.nx())?;
    let nx = u.nx();
    let mu: Vec<Vec<f64>> = u.as_slice().par_chunks(nx).map(|b| mass.mul_vec(b)).collect();
    let ku: Vec<Vec<f64>> = u.as_slice().par_chunks(nx).map(|b| stiffness.mul_vec(b)).collect();
    let mut out = RealBlocks::zeros(nt, nx);
    out.as_mut_slice().par_chunks_mut(nx).enumerate().for_each(|(n, o)| {
        for (m, v) in b1.row(n) {
            o.iter_mut().zip(&mu[m]).for_each(|(oi, x)| *oi += v * x);
        }
        for (m, v) in b2.row(n) {
            o.iter_mut().zip(&ku[m]).for_each(|(oi, x)| *oi += v * x);
        }
    });
    Ok(out)
}
