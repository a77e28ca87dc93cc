use num_complex::Complex64;

use crate::error::{check_dim, ParadiagError, Result};

/// `nt` blocks of `nx` entries stored time-major: block `n` is the space
/// vector at time point `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockVector<T> {
    nt: usize,
    nx: usize,
    data: Vec<T>,
}

pub type RealBlocks = BlockVector<f64>;
pub type ComplexBlocks = BlockVector<Complex64>;

impl<T: Copy + Default> BlockVector<T> {
    pub fn zeros(nt: usize, nx: usize) -> Self {
        Self { nt, nx, data: vec![T::default(); nt * nx] }
    }

    pub fn from_vec(nt: usize, nx: usize, data: Vec<T>) -> Result<Self> {
        if nt == 0 || nx == 0 {
            return Err(ParadiagError::InvalidParameter("nt and nx must be positive".into()));
        }
        check_dim("block vector", nt * nx, data.len())?;
        Ok(Self { nt, nx, data })
    }

    /// Stacks equally sized blocks.
    pub fn from_blocks(blocks: &[Vec<T>]) -> Result<Self> {
        let nt = blocks.len();
        let nx = blocks.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(nt * nx);
        for b in blocks {
            check_dim("block vector block", nx, b.len())?;
            data.extend_from_slice(b);
        }
        Self::from_vec(nt, nx, data)
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn block(&self, n: usize) -> &[T] {
        &self.data[n * self.nx..(n + 1) * self.nx]
    }

    pub fn block_mut(&mut self, n: usize) -> &mut [T] {
        &mut self.data[n * self.nx..(n + 1) * self.nx]
    }

    pub fn blocks(&self) -> std::slice::Chunks<'_, T> {
        self.data.chunks(self.nx)
    }

    pub fn blocks_mut(&mut self) -> std::slice::ChunksMut<'_, T> {
        self.data.chunks_mut(self.nx)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn same_shape<U>(&self, other: &BlockVector<U>, context: &'static str) -> Result<()> {
        check_dim(context, self.nt, other.nt)?;
        check_dim(context, self.nx, other.nx)
    }
}

impl RealBlocks {
    pub fn to_complex(&self) -> ComplexBlocks {
        BlockVector {
            nt: self.nt,
            nx: self.nx,
            data: self.data.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.data)
    }

    pub fn norm2(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Max-norm of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

impl ComplexBlocks {
    /// Real part, after checking that `max|Im| ≤ tol · max|Re|`.
    pub fn into_real_checked(self, tol: f64) -> Result<RealBlocks> {
        let re = self.data.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
        let im = self.data.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        if im > tol * re && im > 0.0 {
            let ratio = if re > 0.0 { im / re } else { f64::INFINITY };
            return Err(ParadiagError::ImaginaryResidue { ratio });
        }
        Ok(BlockVector { nt: self.nt, nx: self.nx, data: self.data.iter().map(|z| z.re).collect() })
    }

    pub fn real_part(&self) -> RealBlocks {
        BlockVector { nt: self.nt, nx: self.nx, data: self.data.iter().map(|z| z.re).collect() }
    }
}

pub(crate) fn max_abs(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}
