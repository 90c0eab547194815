#![allow(dead_code)]

use betatensor::{BetaParam, CpFactors, DenseTensor, TuckerModel};
use ndarray::Array2;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const BETAS: [f64; 4] = [0.0, 0.5, 1.0, 1.5];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn bp(beta: f64) -> BetaParam {
    BetaParam::new(beta).unwrap()
}

/// Uniform entries on `[lo, lo + 1)`.
pub fn matrix(r: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || lo + r.random::<f64>())
}

pub fn tensor(r: &mut ChaCha8Rng, shape: &[usize], lo: f64) -> DenseTensor {
    DenseTensor::from_fn(shape.to_vec(), |_| lo + r.random::<f64>()).unwrap()
}

pub fn cp(r: &mut ChaCha8Rng, shape: &[usize], rank: usize, lo: f64) -> CpFactors {
    CpFactors::new(shape.iter().map(|&d| matrix(r, d, rank, lo)).collect()).unwrap()
}

pub fn tucker(r: &mut ChaCha8Rng, shape: &[usize], ranks: &[usize], lo: f64) -> TuckerModel {
    let factors = shape.iter().zip(ranks).map(|(&d, &j)| matrix(r, d, j, lo)).collect();
    TuckerModel::new(tensor(r, ranks, lo), factors).unwrap()
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let scale = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    diff / scale.max(f64::MIN_POSITIVE)
}

pub fn mat_rel_err(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    assert_eq!(a.dim(), b.dim());
    let a: Vec<f64> = a.iter().copied().collect();
    let b: Vec<f64> = b.iter().copied().collect();
    rel_err(&a, &b)
}

/// `t` with its modes reordered so that mode `k` of the result is mode `perm[k]` of `t`.
pub fn permute(t: &DenseTensor, perm: &[usize]) -> DenseTensor {
    let shape: Vec<usize> = perm.iter().map(|&p| t.shape()[p]).collect();
    DenseTensor::from_fn(shape, |j| {
        let mut i = vec![0; perm.len()];
        for (k, &p) in perm.iter().enumerate() {
            i[p] = j[k];
        }
        t.at(&i)
    })
    .unwrap()
}
