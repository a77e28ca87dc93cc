//! Small dense and sparse helpers used by the solvers and their oracles.

use faer::linalg::solvers::SolveCore;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Conj, MatMut};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{check_dim, ParadiagError, Result};
use crate::space::SpaceOperator;

/// Sparse real LU of a square matrix given by triplets.
pub struct SparseRealLu {
    n: usize,
    lu: Lu<usize, f64>,
}

impl std::fmt::Debug for SparseRealLu {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SparseRealLu").field("n", &self.n).finish()
    }
}

impl SparseRealLu {
    pub fn new(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut t: Vec<Triplet<usize, usize, f64>> = triplets.iter().map(|&(i, j, v)| Triplet::new(i, j, v)).collect();
        // A structurally present diagonal keeps the symbolic phase well defined.
        t.extend((0..n).map(|i| Triplet::new(i, i, 0.0)));
        let a = SparseColMat::try_new_from_triplets(n, n, &t)
            .map_err(|e| ParadiagError::InvalidParameter(format!("sparse assembly failed: {e:?}")))?;
        let lu = Lu::try_new_with_symbolic(
            faer::sparse::linalg::solvers::SymbolicLu::try_new(a.symbolic())
                .map_err(|e| ParadiagError::InvalidParameter(format!("symbolic factorization failed: {e:?}")))?,
            a.as_ref(),
        )
        .map_err(|_| ParadiagError::SingularShift { index: 0 })?;
        Ok(Self { n, lu })
    }

    /// Factorizes `a·M + b·K`.
    pub fn shifted(a: f64, mass: &SpaceOperator, b: f64, stiffness: &SpaceOperator) -> Result<Self> {
        check_dim("shifted operator", mass.nx(), stiffness.nx())?;
        let t: Vec<_> = mass
            .triplets()
            .map(|(i, j, v)| (i, j, a * v))
            .chain(stiffness.triplets().map(|(i, j, v)| (i, j, b * v)))
            .collect();
        Self::new(mass.nx(), &t)
    }

    pub fn solve_in_place(&self, rhs: &mut [f64]) -> Result<()> {
        check_dim("sparse solve", self.n, rhs.len())?;
        let view = MatMut::from_column_major_slice_mut(rhs, self.n, 1);
        self.lu.solve_in_place_with_conj(Conj::No, view);
        if rhs.iter().any(|v| !v.is_finite()) {
            return Err(ParadiagError::SingularShift { index: 0 });
        }
        Ok(())
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }
}

/// 2-norm condition number via singular values.
pub fn cond2(a: &DMatrix<f64>) -> f64 {
    let sv = a.clone().singular_values();
    sv.max() / sv.min()
}

/// 2-norm condition number of a complex matrix.
pub fn cond2_complex(a: &DMatrix<Complex64>) -> f64 {
    let sv = a.clone().singular_values();
    sv.max() / sv.min()
}

/// Dense `A ⊗ B`.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// Dense solve by LU with partial pivoting.
pub fn dense_solve(a: &DMatrix<f64>, b: &[f64]) -> Result<Vec<f64>> {
    a.clone()
        .lu()
        .solve(&DVector::from_column_slice(b))
        .map(|x| x.as_slice().to_vec())
        .ok_or(ParadiagError::SingularShift { index: 0 })
}

/// Max-norm relative difference `‖a − b‖∞ / ‖b‖∞`.
pub fn rel_max_diff(a: &[f64], b: &[f64]) -> f64 {
    let num = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let den = b.iter().map(|y| y.abs()).fold(0.0, f64::max);
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

/// Eigenvalues of a general real matrix.
pub fn dense_eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let m = faer::Mat::<f64>::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)]);
    m.eigenvalues().map_err(|e| ParadiagError::InvalidParameter(format!("eigenvalue iteration failed: {e:?}")))
}
