//! The β-divergence family and the reference-powered weight tensors.

use crate::error::{Error, Result};
use crate::tensor::{powf, DenseTensor};

/// A validated divergence parameter `β ∈ [0, 2)` together with the
/// multiplicative-update exponent `γ(β)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaParam {
    beta: f64,
    gamma: f64,
}

impl BetaParam {
    pub fn new(beta: f64) -> Result<Self> {
        if !(0.0..2.0).contains(&beta) {
            return Err(Error::Config(format!("beta must lie in [0, 2), got {beta}")));
        }
        let gamma = if beta < 1.0 { 1.0 / (2.0 - beta) } else { 1.0 };
        Ok(Self { beta, gamma })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `Q = X̂^{β-1}` is identically one.
    pub(crate) fn unit_denominator_weights(&self) -> bool {
        self.beta == 1.0
    }
}

/// Scalar divergence `d_β(x | y)` for `x ≥ 0`, `y > 0`.
///
/// Returns `+∞` for `β = 0` and `x = 0` (the Itakura–Saito divergence is
/// unbounded there).
pub fn d_beta(x: f64, y: f64, p: BetaParam) -> Result<f64> {
    if !(y > 0.0) || !y.is_finite() {
        return Err(Error::Domain(format!("d_beta needs y > 0, got {y}")));
    }
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("d_beta needs x >= 0, got {x}")));
    }
    Ok(d_beta_unchecked(x, y, p.beta))
}

#[inline]
pub(crate) fn d_beta_unchecked(x: f64, y: f64, beta: f64) -> f64 {
    if beta == 1.0 {
        if x == 0.0 {
            y
        } else {
            x * (x / y).ln() - x + y
        }
    } else if beta == 0.0 {
        if x == 0.0 {
            f64::INFINITY
        } else {
            let r = x / y;
            r - r.ln() - 1.0
        }
    } else if x == y {
        0.0
    } else {
        let xb = if x == 0.0 { 0.0 } else { powf(x, beta) };
        let d = (xb + (beta - 1.0) * powf(y, beta) - beta * x * powf(y, beta - 1.0)) / (beta * (beta - 1.0));
        d.max(0.0)
    }
}

/// Total divergence `D_β(X, X̂) = Σ_i d_β(X_i | X̂_i)`.
pub fn total_divergence(x: &DenseTensor, xhat: &DenseTensor, p: BetaParam) -> Result<f64> {
    x.check_same_shape(xhat)?;
    let mut total = 0.0;
    for (&xi, &yi) in x.data().iter().zip(xhat.data()) {
        total += d_beta(xi, yi, p)?;
    }
    Ok(total)
}

/// Mean divergence per entry, `D̄_β = D_β / |X|`.
pub fn mean_divergence(x: &DenseTensor, xhat: &DenseTensor, p: BetaParam) -> Result<f64> {
    Ok(total_divergence(x, xhat, p)? / x.len() as f64)
}

/// `P = X ⊙ max(X̂, ε)^{β-2}` and `Q = max(X̂, ε)^{β-1}`.
pub fn weights(x: &DenseTensor, xhat: &DenseTensor, p: BetaParam, eps: f64) -> Result<(DenseTensor, DenseTensor)> {
    let w = PoweredWeights::new(x, xhat, p, eps)?;
    let q =
        w.q.unwrap_or_else(|| DenseTensor::filled(x.shape().to_vec(), 1.0).expect("valid shape"));
    Ok((w.p, q))
}

/// Weight tensors as used by the solvers: `q` is `None` when it is the
/// all-ones tensor (β = 1), so denominators can use the column-sum shortcut.
pub(crate) struct PoweredWeights {
    pub p: DenseTensor,
    pub q: Option<DenseTensor>,
}

impl PoweredWeights {
    pub fn new(x: &DenseTensor, xhat: &DenseTensor, p: BetaParam, eps: f64) -> Result<Self> {
        x.check_same_shape(xhat)?;
        let beta = p.beta;
        let pw: Vec<f64> = x
            .data()
            .iter()
            .zip(xhat.data())
            .map(|(&xi, &yi)| xi * powf(yi.max(eps), beta - 2.0))
            .collect();
        let q = if p.unit_denominator_weights() {
            None
        } else {
            Some(xhat.map(|y| powf(y.max(eps), beta - 1.0)))
        };
        Ok(Self {
            p: DenseTensor::from_parts_unchecked(x.shape().to_vec(), pw),
            q,
        })
    }
}

/// Which reference-anchored transform to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chi {
    /// `Z̃^{2-β} ⊙ Z^{β-1}`
    First,
    /// `Z` for β ≤ 1, otherwise `Z^β ⊙ Z̃^{-(β-1)}`
    Second,
}

/// Entrywise χ transform of `z` anchored at `zref`.
///
/// Evaluated as `Z̃ ⊙ (Z / Z̃)^e`, which is algebraically the same and
/// returns `Z` bit-exactly when `Z = Z̃`.
pub fn chi_transform(kind: Chi, z: &[f64], zref: &[f64], p: BetaParam) -> Result<Vec<f64>> {
    if z.len() != zref.len() {
        return Err(Error::Shape(format!(
            "chi transform: {} vs {} entries",
            z.len(),
            zref.len()
        )));
    }
    if let Some(v) = z.iter().chain(zref).find(|&&v| !(v > 0.0)) {
        return Err(Error::Domain(format!(
            "chi transform needs positive entries, found {v}"
        )));
    }
    let beta = p.beta;
    let exponent = match kind {
        Chi::First => beta - 1.0,
        Chi::Second if beta <= 1.0 => return Ok(z.to_vec()),
        Chi::Second => beta,
    };
    Ok(z.iter().zip(zref).map(|(&v, &r)| r * powf(v / r, exponent)).collect())
}
