use std::fmt;
use std::str::FromStr;

use crate::divergence::BetaParam;
use crate::error::{Error, Result};
use crate::tensor::DEFAULT_EPS;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelSpec {
    Cp { rank: usize },
    Tucker { ranks: Vec<usize> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// Block majorization–minimization with contraction-only updates.
    BlockMm,
    /// Joint majorization–minimization with cached reference weights.
    JointMm,
    /// Classical multiplicative updates through unfoldings.
    MuUnfold,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::BlockMm => "bcomm",
            Algorithm::JointMm => "jcomm",
            Algorithm::MuUnfold => "mu-unfold",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bcomm" => Ok(Algorithm::BlockMm),
            "jcomm" => Ok(Algorithm::JointMm),
            "mu-unfold" => Ok(Algorithm::MuUnfold),
            other => Err(Error::Config(format!(
                "unknown algorithm '{other}' (expected bcomm, jcomm or mu-unfold)"
            ))),
        }
    }
}

/// Inertial extrapolation settings.
///
/// The step is `α_t = min(α_t^Nes, c / (‖[Δ]₊‖_F + δ))` with the usual
/// Nesterov sequence; `fixed_alpha` overrides it (0 disables the effect).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtrapolationConfig {
    pub c: f64,
    pub delta: f64,
    pub fixed_alpha: Option<f64>,
}

impl Default for ExtrapolationConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            delta: 1e-6,
            fixed_alpha: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub model: ModelSpec,
    pub algorithm: Algorithm,
    pub beta: f64,
    pub eps: f64,
    /// Inner sweeps per outer iteration of joint MM.
    pub inner_steps: usize,
    pub max_iters: usize,
    /// Stop once `|ΔD̄| / (1 + D̄) < tol`. Zero runs to `max_iters`.
    pub tol: f64,
    pub seed: u64,
    pub extrapolate: Option<ExtrapolationConfig>,
    /// Floor applied to the data before fitting.
    pub data_floor: Option<f64>,
}

impl FitConfig {
    pub fn cp(rank: usize) -> Self {
        Self::with_model(ModelSpec::Cp { rank })
    }

    pub fn tucker(ranks: Vec<usize>) -> Self {
        Self::with_model(ModelSpec::Tucker { ranks })
    }

    fn with_model(model: ModelSpec) -> Self {
        Self {
            model,
            algorithm: Algorithm::BlockMm,
            beta: 1.0,
            eps: DEFAULT_EPS,
            inner_steps: 3,
            max_iters: 500,
            tol: 0.0,
            seed: 0,
            extrapolate: None,
            data_floor: None,
        }
    }

    pub fn algorithm(mut self, algorithm: Algorithm) -> Self {
        self.algorithm = algorithm;
        self
    }

    pub fn beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn inner_steps(mut self, inner_steps: usize) -> Self {
        self.inner_steps = inner_steps;
        self
    }

    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn extrapolate(mut self, extrapolate: Option<ExtrapolationConfig>) -> Self {
        self.extrapolate = extrapolate;
        self
    }

    pub fn data_floor(mut self, floor: Option<f64>) -> Self {
        self.data_floor = floor;
        self
    }

    pub fn beta_param(&self) -> Result<BetaParam> {
        BetaParam::new(self.beta)
    }

    pub fn validate(&self) -> Result<()> {
        self.beta_param()?;
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return Err(Error::Config(format!("eps must be positive, got {}", self.eps)));
        }
        if self.inner_steps < 1 {
            return Err(Error::Config("inner steps must be at least 1".into()));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::Config(format!("tol must be nonnegative, got {}", self.tol)));
        }
        match &self.model {
            ModelSpec::Cp { rank } if *rank < 1 => return Err(Error::Config("rank must be at least 1".into())),
            ModelSpec::Tucker { ranks } if ranks.is_empty() || ranks.contains(&0) => {
                return Err(Error::Config(format!("ranks must all be at least 1, got {ranks:?}")))
            }
            _ => {}
        }
        if let Some(floor) = self.data_floor {
            if !(floor > 0.0) || !floor.is_finite() {
                return Err(Error::Config(format!("data floor must be positive, got {floor}")));
            }
        }
        if let Some(ex) = &self.extrapolate {
            if !(ex.delta > 0.0) {
                return Err(Error::Config("extrapolation delta must be positive".into()));
            }
            if !(ex.c >= 0.0) || ex.fixed_alpha.is_some_and(|a| !(a >= 0.0)) {
                return Err(Error::Config("extrapolation weights must be nonnegative".into()));
            }
            if self.algorithm == Algorithm::MuUnfold {
                return Err(Error::Config(
                    "extrapolation is only available for bcomm and jcomm".into(),
                ));
            }
        }
        Ok(())
    }
}

/// One row of a fit trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    /// Outer iteration index; 0 is the initialization.
    pub iter: usize,
    /// Seconds spent in updates since the fit started.
    pub time_s: f64,
    /// Mean divergence per entry.
    pub loss: f64,
}
