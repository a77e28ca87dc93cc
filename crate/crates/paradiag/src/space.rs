use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{check_dim, ParadiagError, Result};

/// Square sparse real matrix in compressed-row form.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceOperator {
    nx: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

impl SpaceOperator {
    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// explicit zeros kept so the stored pattern matches the stencil.
    pub fn from_triplets(nx: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        if nx == 0 {
            return Err(ParadiagError::InvalidParameter("operator size must be positive".into()));
        }
        let mut sorted = triplets.to_vec();
        if let Some(&(r, c, _)) = sorted.iter().find(|t| t.0 >= nx || t.1 >= nx) {
            return Err(ParadiagError::InvalidParameter(format!("entry ({r},{c}) outside {nx}x{nx}")));
        }
        sorted.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0; nx + 1];
        let mut col_idx: Vec<usize> = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut rows: Vec<usize> = Vec::with_capacity(sorted.len());
        for (r, c, v) in sorted {
            if rows.last() == Some(&r) && col_idx.last() == Some(&c) {
                *values.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                col_idx.push(c);
                values.push(v);
            }
        }
        for &r in &rows {
            row_ptr[r + 1] += 1;
        }
        for i in 0..nx {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut op = Self { nx, row_ptr, col_idx, values, symmetric: false };
        op.symmetric = op.is_exactly_symmetric();
        Ok(op)
    }

    pub fn identity(nx: usize) -> Self {
        let t: Vec<_> = (0..nx).map(|i| (i, i, 1.0)).collect();
        Self::from_triplets(nx, &t).expect("identity of positive size")
    }

    pub fn zero(nx: usize) -> Self {
        Self { nx, row_ptr: vec![0; nx + 1], col_idx: vec![], values: vec![], symmetric: true }
    }

    pub fn from_dense(a: &DMatrix<f64>) -> Result<Self> {
        check_dim("dense operator", a.nrows(), a.ncols())?;
        let mut t = Vec::new();
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                if a[(i, j)] != 0.0 {
                    t.push((i, j, a[(i, j)]));
                }
            }
        }
        Self::from_triplets(a.nrows(), &t)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nx).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (i, self.col_idx[k], self.values[k]))
        })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .binary_search(&j)
            .map_or(0.0, |k| self.values[range.start + k])
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            *yi = s;
        }
    }

    pub fn apply_complex(&self, x: &[Complex64], y: &mut [Complex64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += x[self.col_idx[k]] * self.values[k];
            }
            *yi = s;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nx];
        self.apply(x, &mut y);
        y
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `a·self + b·other`.
    pub fn linear_combination(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        check_dim("operator sum", self.nx, other.nx)?;
        let t: Vec<_> = self
            .triplets()
            .map(|(i, j, v)| (i, j, a * v))
            .chain(other.triplets().map(|(i, j, v)| (i, j, b * v)))
            .collect();
        Self::from_triplets(self.nx, &t)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.nx, self.nx);
        for (i, j, v) in self.triplets() {
            a[(i, j)] += v;
        }
        a
    }

    fn is_exactly_symmetric(&self) -> bool {
        self.triplets().all(|(i, j, v)| self.get(j, i) == v)
    }
}
