//! Configuration-driven entry point used by the command line.

use crate::baseline::{mu_unfold_cp_fit, mu_unfold_tucker_fit};
use crate::config::{Algorithm, FitConfig, ModelSpec, TraceRecord};
use crate::cp::{bcomm_fit, jcomm_fit, CpFactors};
use crate::error::{Error, Result};
use crate::io::apply_floor;
use crate::synth::{init_cp, init_tucker};
use crate::tensor::DenseTensor;
use crate::tucker::{tucker_bcomm_fit, tucker_jcomm_fit, TuckerModel};

/// A fitted model of either kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Cp(CpFactors),
    Tucker(TuckerModel),
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub model: Model,
    pub trace: Vec<TraceRecord>,
}

impl FitResult {
    pub fn final_loss(&self) -> f64 {
        self.trace.last().map(|r| r.loss).unwrap_or(f64::NAN)
    }
}

/// Random initialization for `cfg.model` on data of shape `dims`, seeded by `cfg.seed`.
pub fn initialize(dims: &[usize], cfg: &FitConfig) -> Result<Model> {
    match &cfg.model {
        ModelSpec::Cp { rank } => {
            if dims.len() < 2 {
                return Err(Error::Config("CP models need data of order at least 2".into()));
            }
            Ok(Model::Cp(init_cp(dims, *rank, cfg.seed, cfg.eps)?))
        }
        ModelSpec::Tucker { ranks } => {
            if ranks.len() != dims.len() {
                return Err(Error::Config(format!(
                    "{} Tucker ranks given for data of order {}",
                    ranks.len(),
                    dims.len()
                )));
            }
            Ok(Model::Tucker(init_tucker(dims, ranks, cfg.seed, cfg.eps)?))
        }
    }
}

/// Floors the data if requested, initializes from the seed and runs the
/// configured algorithm.
pub fn fit(x: &DenseTensor, cfg: &FitConfig) -> Result<FitResult> {
    cfg.validate()?;
    let mut data;
    let x = match cfg.data_floor {
        Some(floor) => {
            data = x.clone();
            apply_floor(&mut data, floor);
            &data
        }
        None => x,
    };
    fit_from(x, initialize(x.shape(), cfg)?, cfg)
}

/// Runs the configured algorithm from a given initialization.
pub fn fit_from(x: &DenseTensor, init: Model, cfg: &FitConfig) -> Result<FitResult> {
    cfg.validate()?;
    let (model, trace) = match init {
        Model::Cp(f) => {
            let (f, trace) = match cfg.algorithm {
                Algorithm::BlockMm => bcomm_fit(x, f, cfg)?,
                Algorithm::JointMm => jcomm_fit(x, f, cfg)?,
                Algorithm::MuUnfold => mu_unfold_cp_fit(x, f, cfg)?,
            };
            (Model::Cp(f), trace)
        }
        Model::Tucker(m) => {
            let (m, trace) = match cfg.algorithm {
                Algorithm::BlockMm => tucker_bcomm_fit(x, m, cfg)?,
                Algorithm::JointMm => tucker_jcomm_fit(x, m, cfg)?,
                Algorithm::MuUnfold => mu_unfold_tucker_fit(x, m, cfg)?,
            };
            (Model::Tucker(m), trace)
        }
    };
    Ok(FitResult { model, trace })
}
