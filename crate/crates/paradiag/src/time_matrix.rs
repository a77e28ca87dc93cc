use nalgebra::DMatrix;

use crate::error::{check_dim, ParadiagError, Result};

/// Square `n×n` time-stepping matrix: a band of `lower` sub- and `upper`
/// super-diagonals plus a short list of out-of-band corner entries (the
/// wrap-around terms of α-circulant stencils).
#[derive(Debug, Clone, PartialEq)]
pub struct TimeMatrix {
    n: usize,
    lower: usize,
    upper: usize,
    band: Vec<f64>,
    corners: Vec<(usize, usize, f64)>,
}

impl TimeMatrix {
    pub fn zeros(n: usize, lower: usize, upper: usize) -> Self {
        let lower = lower.min(n.saturating_sub(1));
        let upper = upper.min(n.saturating_sub(1));
        Self { n, lower, upper, band: vec![0.0; n * (lower + upper + 1)], corners: Vec::new() }
    }

    /// Lower-triangular banded Toeplitz matrix with the given first column
    /// entries `(c₀, c₁, …)` on the main and sub-diagonals.
    pub fn lower_toeplitz(n: usize, column: &[f64]) -> Self {
        let mut m = Self::zeros(n, column.len().saturating_sub(1), 0);
        for i in 0..n {
            for (k, &c) in column.iter().enumerate().take(i + 1) {
                m.set(i, i - k, c);
            }
        }
        m
    }

    /// Smallest band covering every nonzero of `a`; nothing goes to corners.
    pub fn from_dense(a: &DMatrix<f64>) -> Result<Self> {
        check_dim("time matrix", a.nrows(), a.ncols())?;
        let n = a.nrows();
        let (mut lower, mut upper) = (0, 0);
        for i in 0..n {
            for j in 0..n {
                if a[(i, j)] != 0.0 {
                    if i > j {
                        lower = lower.max(i - j);
                    } else {
                        upper = upper.max(j - i);
                    }
                }
            }
        }
        let mut m = Self::zeros(n, lower, upper);
        for i in 0..n {
            for j in 0..n {
                if a[(i, j)] != 0.0 {
                    m.set(i, j, a[(i, j)]);
                }
            }
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.lower
    }

    pub fn upper_bandwidth(&self) -> usize {
        self.upper
    }

    pub fn corners(&self) -> &[(usize, usize, f64)] {
        &self.corners
    }

    pub fn has_corners(&self) -> bool {
        !self.corners.is_empty()
    }

    fn band_index(&self, i: usize, j: usize) -> Option<usize> {
        let in_band = if j <= i { i - j <= self.lower } else { j - i <= self.upper };
        in_band.then(|| i * (self.lower + self.upper + 1) + (j + self.lower - i))
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(i < self.n && j < self.n, "index ({i},{j}) outside {0}x{0}", self.n);
        match self.band_index(i, j) {
            Some(k) => self.band[k] = v,
            None => match self.corners.iter_mut().find(|c| c.0 == i && c.1 == j) {
                Some(c) => c.2 = v,
                None => self.corners.push((i, j, v)),
            },
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self.band_index(i, j) {
            Some(k) => self.band[k],
            None => self.corners.iter().find(|c| c.0 == i && c.1 == j).map_or(0.0, |c| c.2),
        }
    }

    /// Nonzero entries `(j, value)` of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = i.saturating_sub(self.lower);
        let hi = (i + self.upper).min(self.n - 1);
        (lo..=hi)
            .map(move |j| (j, self.get(i, j)))
            .chain(self.corners.iter().filter(move |c| c.0 == i).map(|c| (c.1, c.2)))
            .filter(|&(_, v)| v != 0.0)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                a[(i, j)] = v;
            }
        }
        a
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n, self.upper, self.lower);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                t.set(j, i, v);
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        check_dim("time matrix product", self.n, other.n)?;
        Self::from_dense(&(self.to_dense() * other.to_dense()))
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.band.iter_mut().for_each(|v| *v *= s);
        out.corners.iter_mut().for_each(|c| c.2 *= s);
        out
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    /// Constant along every diagonal (corners included).
    pub fn is_toeplitz(&self) -> bool {
        let d = self.to_dense();
        (1..self.n).all(|i| (1..self.n).all(|j| d[(i, j)] == d[(i - 1, j - 1)]))
    }

    /// First column of the band, which defines a lower Toeplitz stencil.
    pub fn first_column(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, 0)).collect()
    }
}

/// Checks that two stencils act on the same number of time points.
pub(crate) fn check_pair(b1: &TimeMatrix, b2: &TimeMatrix) -> Result<usize> {
    if b1.n != b2.n {
        return Err(ParadiagError::Dimension { context: "time stencils", expected: b1.n, got: b2.n });
    }
    Ok(b1.n)
}
