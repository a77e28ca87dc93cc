//! Sparse LU factorizations of the shifted matrices `λ₁M + λ₂K`.

use faer::linalg::solvers::SolveCore;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Conj, MatMut};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::block::ComplexBlocks;
use crate::error::{check_dim, ParadiagError, Result};
use crate::space::SpaceOperator;

/// Shifts whose relative distance is below this are treated as conjugates.
const CONJ_MATCH: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Source {
    Own(usize),
    /// Solve with the factorization of the conjugate shift and conjugate back.
    Conjugate(usize),
}

/// One reusable factorization per shift pair, built once and shared
/// read-only across workers.
pub struct ShiftFactorCache {
    nx: usize,
    shifts: Vec<(Complex64, Complex64)>,
    sources: Vec<Source>,
    factors: Vec<Option<Lu<usize, Complex64>>>,
    mass: SpaceOperator,
    stiffness: SpaceOperator,
}

impl std::fmt::Debug for ShiftFactorCache {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ShiftFactorCache")
            .field("nx", &self.nx)
            .field("shifts", &self.shifts.len())
            .field("factorizations", &self.factorization_count())
            .finish()
    }
}

impl ShiftFactorCache {
    /// Factorizes `λ₁M + λ₂K` for every `(λ₁, λ₂)` in `shifts`.
    ///
    /// With `reuse_conjugates`, a shift that is the complex conjugate of an
    /// earlier one borrows that factorization (real `M`, `K` make the
    /// conjugate system solvable by conjugating right-hand side and result).
    pub fn build(
        shifts: &[(Complex64, Complex64)],
        mass: &SpaceOperator,
        stiffness: &SpaceOperator,
        reuse_conjugates: bool,
    ) -> Result<Self> {
        check_dim("shift operators", mass.nx(), stiffness.nx())?;
        let nx = mass.nx();
        let sources = assign_sources(shifts, reuse_conjugates);

        let pattern = union_pattern(mass, stiffness);
        let probe = assemble(nx, &pattern, Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0))?;
        let symbolic = SymbolicLu::try_new(probe.symbolic())
            .map_err(|e| ParadiagError::InvalidParameter(format!("symbolic factorization failed: {e:?}")))?;

        let factors = shifts
            .par_iter()
            .zip(sources.par_iter())
            .enumerate()
            .map(|(n, (&(l1, l2), src))| {
                if *src != Source::Own(n) {
                    return Ok(None);
                }
                if l1 == Complex64::new(0.0, 0.0) && l2 == Complex64::new(0.0, 0.0) {
                    return Err(ParadiagError::SingularShift { index: n });
                }
                let a = assemble(nx, &pattern, l1, l2)?;
                Lu::try_new_with_symbolic(symbolic.clone(), a.as_ref())
                    .map(Some)
                    .map_err(|_| ParadiagError::SingularShift { index: n })
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(Self { nx, shifts: shifts.to_vec(), sources, factors, mass: mass.clone(), stiffness: stiffness.clone() })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn shifts(&self) -> &[(Complex64, Complex64)] {
        &self.shifts
    }

    pub fn factorization_count(&self) -> usize {
        self.factors.iter().filter(|f| f.is_some()).count()
    }

    /// Whether this cache was built from exactly these inputs.
    pub fn matches(&self, shifts: &[(Complex64, Complex64)], mass: &SpaceOperator, stiffness: &SpaceOperator) -> bool {
        self.shifts == shifts && &self.mass == mass && &self.stiffness == stiffness
    }

    /// Solves block `n` in place.
    pub fn solve_in_place(&self, n: usize, rhs: &mut [Complex64]) -> Result<()> {
        check_dim("shifted solve", self.nx, rhs.len())?;
        let (k, conj) = match self.sources[n] {
            Source::Own(k) => (k, false),
            Source::Conjugate(k) => (k, true),
        };
        let lu = self.factors[k].as_ref().expect("factorization present for own shift");
        if conj {
            rhs.iter_mut().for_each(|z| *z = z.conj());
        }
        let view = MatMut::from_column_major_slice_mut(rhs, self.nx, 1);
        lu.solve_in_place_with_conj(Conj::No, view);
        if conj {
            rhs.iter_mut().for_each(|z| *z = z.conj());
        }
        if rhs.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(ParadiagError::SingularShift { index: n });
        }
        Ok(())
    }

    /// Solves every block of `blocks` against its own shift, in parallel.
    pub fn solve_blocks(&self, blocks: &mut ComplexBlocks) -> Result<()> {
        check_dim("shifted block solve", self.shifts.len(), blocks.nt())?;
        check_dim("shifted block solve", self.nx, blocks.nx())?;
        let nx = self.nx;
        blocks
            .as_mut_slice()
            .par_chunks_mut(nx)
            .enumerate()
            .try_for_each(|(n, b)| self.solve_in_place(n, b))
    }
}

fn assign_sources(shifts: &[(Complex64, Complex64)], reuse_conjugates: bool) -> Vec<Source> {
    let close = |a: Complex64, b: Complex64| (a - b).norm() <= CONJ_MATCH * a.norm().max(b.norm()).max(1e-300);
    let mut sources: Vec<Source> = Vec::with_capacity(shifts.len());
    for (n, &(a1, a2)) in shifts.iter().enumerate() {
        let mirror = reuse_conjugates
            .then(|| {
                (0..n).find(|&k| {
                    let (b1, b2) = shifts[k];
                    sources[k] == Source::Own(k) && close(a1, b1.conj()) && close(a2, b2.conj())
                })
            })
            .flatten();
        sources.push(mirror.map_or(Source::Own(n), Source::Conjugate));
    }
    sources
}

fn union_pattern(mass: &SpaceOperator, stiffness: &SpaceOperator) -> Vec<(usize, usize, f64, f64)> {
    let mut entries: Vec<(usize, usize, f64, f64)> = mass
        .triplets()
        .map(|(i, j, v)| (i, j, v, 0.0))
        .chain(stiffness.triplets().map(|(i, j, v)| (i, j, 0.0, v)))
        .collect();
    entries.sort_by_key(|e| (e.1, e.0));
    let mut merged: Vec<(usize, usize, f64, f64)> = Vec::with_capacity(entries.len());
    for e in entries {
        match merged.last_mut() {
            Some(last) if last.0 == e.0 && last.1 == e.1 => {
                last.2 += e.2;
                last.3 += e.3;
            }
            _ => merged.push(e),
        }
    }
    // Keep the diagonal structurally present so every shift shares one pattern.
    let n = mass.nx();
    let mut diag = vec![false; n];
    for e in &merged {
        if e.0 == e.1 {
            diag[e.0] = true;
        }
    }
    for (i, present) in diag.into_iter().enumerate() {
        if !present {
            merged.push((i, i, 0.0, 0.0));
        }
    }
    merged
}

fn assemble(
    nx: usize,
    pattern: &[(usize, usize, f64, f64)],
    l1: Complex64,
    l2: Complex64,
) -> Result<SparseColMat<usize, Complex64>> {
    let triplets: Vec<_> = pattern.iter().map(|&(i, j, m, k)| Triplet::new(i, j, l1 * m + l2 * k)).collect();
    SparseColMat::try_new_from_triplets(nx, nx, &triplets)
        .map_err(|e| ParadiagError::InvalidParameter(format!("sparse assembly failed: {e:?}")))
}
