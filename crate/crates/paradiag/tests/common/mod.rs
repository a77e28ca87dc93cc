#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use paradiag::{ComplexBlocks, RealBlocks};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn random_blocks(rng: &mut ChaCha8Rng, nt: usize, nx: usize) -> RealBlocks {
    RealBlocks::from_vec(nt, nx, random_vec(rng, nt * nx)).unwrap()
}

/// Unitary DFT with `ω = e^{2πi/n}`.
pub fn dft_matrix(n: usize) -> DMatrix<Complex64> {
    let s = 1.0 / (n as f64).sqrt();
    DMatrix::from_fn(n, n, |j, k| Complex64::from_polar(s, 2.0 * std::f64::consts::PI * ((j * k) % n) as f64 / n as f64))
}

pub fn complex_kron(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    a.kronecker(b)
}

pub fn to_complex_matrix(a: &DMatrix<f64>) -> DMatrix<Complex64> {
    a.map(|v| Complex64::new(v, 0.0))
}

pub fn complex_blocks_vec(b: &ComplexBlocks) -> nalgebra::DVector<Complex64> {
    nalgebra::DVector::from_column_slice(b.as_slice())
}

pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let num = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let den = b.iter().map(|y| y.abs()).fold(0.0, f64::max);
    if den == 0.0 { num } else { num / den }
}

pub fn max_abs_c(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Greedy multiset match: largest distance from each `a` to a distinct `b`.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let (idx, d) = b
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, y)| (i, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        used[idx] = true;
        worst = worst.max(d);
    }
    worst
}
