//! Seeded synthetic problems and random initializations.
//!
//! Entries are uniform on `[0, 1)` from a ChaCha8 generator. Ground truth is
//! drawn from stream 0 of the seed and initializations from stream 1, so a
//! fit initialized with the data seed does not start at the truth.

use ndarray::Array2;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cp::CpFactors;
use crate::error::{Error, Result};
use crate::tensor::{validate_shape, DenseTensor};
use crate::tucker::TuckerModel;

const TRUTH_STREAM: u64 = 0;
const INIT_STREAM: u64 = 1;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, floor: f64) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.random::<f64>().max(floor))
}

fn cp_factors(dims: &[usize], rank: usize, rng: &mut ChaCha8Rng, floor: f64) -> Result<CpFactors> {
    validate_shape(dims)?;
    if rank == 0 {
        return Err(Error::Config("rank must be at least 1".into()));
    }
    CpFactors::new(dims.iter().map(|&d| uniform_matrix(rng, d, rank, floor)).collect())
}

fn tucker_model(dims: &[usize], ranks: &[usize], rng: &mut ChaCha8Rng, floor: f64) -> Result<TuckerModel> {
    validate_shape(dims)?;
    if ranks.len() != dims.len() || ranks.contains(&0) {
        return Err(Error::Config(format!(
            "ranks {ranks:?} must be positive, one per mode of {dims:?}"
        )));
    }
    let factors: Vec<Array2<f64>> = dims
        .iter()
        .zip(ranks)
        .map(|(&d, &j)| uniform_matrix(rng, d, j, floor))
        .collect();
    let core = DenseTensor::from_fn(ranks.to_vec(), |_| rng.random::<f64>().max(floor))?;
    TuckerModel::new(core, factors)
}

/// Noiseless CP data and its ground-truth factors.
pub fn synth_cp(dims: &[usize], rank: usize, seed: u64) -> Result<(DenseTensor, CpFactors)> {
    let truth = cp_factors(dims, rank, &mut rng(seed, TRUTH_STREAM), 0.0)?;
    Ok((truth.reconstruct(), truth))
}

/// Noiseless Tucker data and its ground-truth model.
pub fn synth_tucker(dims: &[usize], ranks: &[usize], seed: u64) -> Result<(DenseTensor, TuckerModel)> {
    let truth = tucker_model(dims, ranks, &mut rng(seed, TRUTH_STREAM), 0.0)?;
    Ok((truth.reconstruct(), truth))
}

/// Random CP initialization with entries in `[eps, 1)`.
pub fn init_cp(dims: &[usize], rank: usize, seed: u64, eps: f64) -> Result<CpFactors> {
    cp_factors(dims, rank, &mut rng(seed, INIT_STREAM), eps)
}

/// Random Tucker initialization with entries in `[eps, 1)`.
pub fn init_tucker(dims: &[usize], ranks: &[usize], seed: u64, eps: f64) -> Result<TuckerModel> {
    tucker_model(dims, ranks, &mut rng(seed, INIT_STREAM), eps)
}
