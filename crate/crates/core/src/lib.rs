//! Nonnegative CP and Tucker decompositions of dense tensors under the
//! β-divergence (`β ∈ [0, 2)`), fitted with multiplicative updates whose
//! numerators and denominators are plain tensor contractions.
//!
//! ```
//! use betatensor::{fit, synth_cp, Algorithm, FitConfig};
//!
//! let (x, _) = synth_cp(&[6, 5, 4], 2, 0).unwrap();
//! let cfg = FitConfig::cp(2).algorithm(Algorithm::JointMm).max_iters(20);
//! let result = fit(&x, &cfg).unwrap();
//! assert!(result.final_loss() < result.trace[0].loss);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod config;
pub mod contract;
pub mod cp;
pub mod divergence;
mod driver;
pub mod error;
pub mod extrapolate;
pub mod fit;
pub mod io;
pub mod oracle;
pub mod synth;
pub mod tensor;
pub mod tucker;

pub use config::{Algorithm, ExtrapolationConfig, FitConfig, ModelSpec, TraceRecord};
pub use cp::CpFactors;
pub use divergence::BetaParam;
pub use error::{Error, Result};
pub use fit::{fit, fit_from, FitResult, Model};
pub use synth::{init_cp, init_tucker, synth_cp, synth_tucker};
pub use tensor::{DenseTensor, MultiIndex, DEFAULT_EPS};
pub use tucker::TuckerModel;
