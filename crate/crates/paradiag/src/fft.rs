use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::block::ComplexBlocks;

/// Space indices per parallel FFT batch.
const BATCH: usize = 64;

/// Unitary DFT along the time index of a block vector, with
/// `F_{jk} = ω^{jk}/√nt`, `ω = e^{2πi/nt}`.
#[derive(Clone)]
pub struct TimeFft {
    nt: usize,
    // rustfft's inverse kernel uses e^{+2πi/n}, which is `√nt·F`.
    plus: Arc<dyn Fft<f64>>,
    minus: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for TimeFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TimeFft").field("nt", &self.nt).finish()
    }
}

impl TimeFft {
    pub fn new(nt: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { nt, plus: planner.plan_fft_inverse(nt), minus: planner.plan_fft_forward(nt) }
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    /// `√nt·F·x` for one length-`nt` sequence.
    pub fn unnormalized_f(&self, x: &mut [Complex64]) {
        self.plus.process(x);
    }

    /// `√nt·F*·x` for one length-`nt` sequence.
    pub fn unnormalized_f_adjoint(&self, x: &mut [Complex64]) {
        self.minus.process(x);
    }

    /// `(F ⊗ I)v`.
    pub fn apply_f(&self, v: &mut ComplexBlocks) {
        self.apply(v, &self.plus);
    }

    /// `(F* ⊗ I)v`.
    pub fn apply_f_adjoint(&self, v: &mut ComplexBlocks) {
        self.apply(v, &self.minus);
    }

    fn apply(&self, v: &mut ComplexBlocks, kernel: &Arc<dyn Fft<f64>>) {
        let (nt, nx) = (v.nt(), v.nx());
        assert_eq!(nt, self.nt, "time length differs from the planned transform");
        let scale = 1.0 / (nt as f64).sqrt();
        let data = v.as_mut_slice();
        let mut cols = vec![Complex64::new(0.0, 0.0); nt * nx];
        for n in 0..nt {
            for j in 0..nx {
                cols[j * nt + n] = data[n * nx + j];
            }
        }
        cols.par_chunks_mut(nt * BATCH).for_each(|chunk| kernel.process(chunk));
        for n in 0..nt {
            for j in 0..nx {
                data[n * nx + j] = cols[j * nt + n] * scale;
            }
        }
    }
}
