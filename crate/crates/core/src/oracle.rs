//! Slow reference implementations evaluated by nested loops straight from
//! the defining sums: reconstructions, contractions, the joint-MM surrogate
//! and the scalar subproblems of the multiplicative updates.
//!
//! # Joint surrogate
//!
//! With components `z_{i,ρ}(Θ)` (`ρ = r` for CP, `ρ = (j₁, …, j_N)` for
//! Tucker), reference reconstruction `X̃_i = Σ_ρ z_{i,ρ}(Θ̃)`, weights
//! `λ̃_{i,ρ} = z_{i,ρ}(Θ̃) / X̃_i` and `y_i = Σ_ρ z_{i,ρ}(Θ)`, the surrogate
//! is `G(Θ | Θ̃) = Σ_i G_i` with
//!
//! * `1 ≤ β < 2`: `G_i = Σ_ρ λ̃ d_β(x_i | z_ρ / λ̃)`
//! * `0 < β < 1`: `G_i = x^β/(β(β−1)) + X̃^β/β + X̃^{β−1}(y − X̃)
//!   + Σ_ρ λ̃ x/(1−β) (z_ρ/λ̃)^{β−1}`
//! * `β = 0`: `G_i = ln X̃ + (y − X̃)/X̃ − ln x − 1 + Σ_ρ λ̃² x / z_ρ`
//!   (`+∞` when `x = 0`)
//!
//! All constants are kept, so `G(Θ̃ | Θ̃) = D_β(X, X̂(Θ̃))` exactly in
//! exact arithmetic.

use ndarray::Array2;

use crate::cp::CpFactors;
use crate::divergence::{d_beta_unchecked, BetaParam};
use crate::error::{shape_err, Error, Result};
use crate::tensor::{increment, DenseTensor};
use crate::tucker::TuckerModel;

/// Per-entry component weights `λ̃_{i,ρ}` of a reference model, stored as an
/// `|X| × |ℛ|` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentWeights {
    pub lambda: Array2<f64>,
}

impl ComponentWeights {
    pub fn from_components(components: &Array2<f64>) -> Result<Self> {
        let mut lambda = components.clone();
        for mut row in lambda.rows_mut() {
            let total: f64 = row.sum();
            if !(total > 0.0) {
                return Err(Error::Domain("reference reconstruction has a nonpositive entry".into()));
            }
            row.mapv_inplace(|v| v / total);
        }
        Ok(Self { lambda })
    }

    pub fn cp(reference: &CpFactors) -> Result<Self> {
        Self::from_components(&cp_components(reference))
    }

    pub fn tucker(reference: &TuckerModel) -> Result<Self> {
        Self::from_components(&tucker_components(reference))
    }

    /// Largest deviation of a row sum from one.
    pub fn max_normalization_error(&self) -> f64 {
        self.lambda
            .rows()
            .into_iter()
            .map(|r| (r.sum() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// `z_{i,r} = ∏ₙ A⁽ⁿ⁾[iₙ, r]` for every entry `i` (rows, row-major) and `r`.
pub fn cp_components(f: &CpFactors) -> Array2<f64> {
    let shape = f.shape();
    let total: usize = shape.iter().product();
    let rank = f.rank();
    let mut out = Array2::zeros((total, rank));
    let mut idx = vec![0; shape.len()];
    for e in 0..total {
        for r in 0..rank {
            let mut z = 1.0;
            for (n, &i) in idx.iter().enumerate() {
                z *= f.factor(n)[[i, r]];
            }
            out[[e, r]] = z;
        }
        increment(&mut idx, &shape);
    }
    out
}

/// `z_{i,j} = 𝒢_j ∏ₙ A⁽ⁿ⁾[iₙ, jₙ]` with `j` enumerated row-major over the core.
pub fn tucker_components(m: &TuckerModel) -> Array2<f64> {
    let shape = m.shape();
    let ranks = m.ranks().to_vec();
    let total: usize = shape.iter().product();
    let comps: usize = ranks.iter().product();
    let mut out = Array2::zeros((total, comps));
    let mut idx = vec![0; shape.len()];
    for e in 0..total {
        let mut j = vec![0; ranks.len()];
        for c in 0..comps {
            let mut z = m.core().data()[c];
            for (n, (&i, &jn)) in idx.iter().zip(&j).enumerate() {
                z *= m.factor(n)[[i, jn]];
            }
            out[[e, c]] = z;
            increment(&mut j, &ranks);
        }
        increment(&mut idx, &shape);
    }
    out
}

fn joint_surrogate(x: &DenseTensor, z: &Array2<f64>, zref: &Array2<f64>, p: BetaParam) -> Result<f64> {
    let beta = p.beta();
    let mut total = 0.0;
    for (e, &xi) in x.data().iter().enumerate() {
        let zr = z.row(e);
        let zt = zref.row(e);
        let xt: f64 = zt.sum();
        if !(xt > 0.0) {
            return Err(Error::Domain("reference reconstruction has a nonpositive entry".into()));
        }
        let y: f64 = zr.sum();
        let g = if beta >= 1.0 {
            zr.iter()
                .zip(zt.iter())
                .map(|(&zc, &ztc)| {
                    let lambda = ztc / xt;
                    lambda * d_beta_unchecked(xi, zc / lambda, beta)
                })
                .sum::<f64>()
        } else if beta > 0.0 {
            let jensen: f64 = zr
                .iter()
                .zip(zt.iter())
                .map(|(&zc, &ztc)| {
                    let lambda = ztc / xt;
                    lambda * xi / (1.0 - beta) * (zc / lambda).powf(beta - 1.0)
                })
                .sum();
            xi.powf(beta) / (beta * (beta - 1.0)) + xt.powf(beta) / beta + xt.powf(beta - 1.0) * (y - xt) + jensen
        } else if xi == 0.0 {
            f64::INFINITY
        } else {
            let jensen: f64 = zr
                .iter()
                .zip(zt.iter())
                .map(|(&zc, &ztc)| {
                    let lambda = ztc / xt;
                    lambda * lambda * xi / zc
                })
                .sum();
            xt.ln() + (y - xt) / xt - xi.ln() - 1.0 + jensen
        };
        total += g;
    }
    Ok(total)
}

/// `G(Θ | Θ̃)` for CP models.
pub fn eval_joint_surrogate_cp(theta: &CpFactors, reference: &CpFactors, x: &DenseTensor, p: BetaParam) -> Result<f64> {
    if theta.shape() != x.shape() || reference.shape() != x.shape() || theta.rank() != reference.rank() {
        return Err(shape_err!("surrogate arguments have inconsistent shapes"));
    }
    joint_surrogate(x, &cp_components(theta), &cp_components(reference), p)
}

/// `G(Θ | Θ̃)` for Tucker models.
pub fn eval_joint_surrogate_tucker(
    theta: &TuckerModel,
    reference: &TuckerModel,
    x: &DenseTensor,
    p: BetaParam,
) -> Result<f64> {
    if theta.shape() != x.shape() || reference.shape() != x.shape() || theta.ranks() != reference.ranks() {
        return Err(shape_err!("surrogate arguments have inconsistent shapes"));
    }
    joint_surrogate(x, &tucker_components(theta), &tucker_components(reference), p)
}

/// Minimizer over `u ≥ floor` of [`scalar_surrogate`]:
/// `num/den` for `β ≥ 1`, `(num/den)^{1/(2−β)}` for `β < 1`.
pub fn scalar_minimizer(num: f64, den: f64, p: BetaParam, floor: f64) -> f64 {
    if num == 0.0 {
        return floor;
    }
    let ratio = num / den;
    let u = if p.beta() >= 1.0 {
        ratio
    } else {
        ratio.powf(1.0 / (2.0 - p.beta()))
    };
    u.max(floor)
}

/// Scalar subproblem in the multiplicative variable `u > 0`:
///
/// * `1 < β < 2`: `den/β · u^β − num/(β−1) · u^{β−1}`
/// * `β = 1`: `den · u − num · ln u`
/// * `β < 1`: `den · u + num/(1−β) · u^{β−1}`
pub fn scalar_surrogate(u: f64, num: f64, den: f64, p: BetaParam) -> f64 {
    let beta = p.beta();
    if beta == 1.0 {
        den * u - num * u.ln()
    } else if beta > 1.0 {
        den / beta * u.powf(beta) - num / (beta - 1.0) * u.powf(beta - 1.0)
    } else {
        den * u + num / (1.0 - beta) * u.powf(beta - 1.0)
    }
}

/// `(t ×ₙ m)` by direct summation.
pub fn brute_mode_n_product(t: &DenseTensor, m: &Array2<f64>, n: usize) -> Result<DenseTensor> {
    if n >= t.order() || m.ncols() != t.shape()[n] {
        return Err(shape_err!("mode-{n} product dimension mismatch"));
    }
    let mut shape = t.shape().to_vec();
    shape[n] = m.nrows();
    DenseTensor::from_fn(shape, |out| {
        let mut idx = out.to_vec();
        (0..t.shape()[n])
            .map(|i| {
                idx[n] = i;
                m[[out[n], i]] * t.at(&idx)
            })
            .sum()
    })
}

/// `X̂_i = Σ_r ∏ₙ A⁽ⁿ⁾[iₙ, r]`.
pub fn brute_cp_reconstruct(factors: &[Array2<f64>]) -> Result<DenseTensor> {
    let rank = factors.first().map(|f| f.ncols()).unwrap_or(0);
    if factors.iter().any(|f| f.ncols() != rank) {
        return Err(shape_err!("inconsistent rank"));
    }
    let shape: Vec<usize> = factors.iter().map(|f| f.nrows()).collect();
    DenseTensor::from_fn(shape, |i| {
        (0..rank)
            .map(|r| i.iter().enumerate().map(|(n, &k)| factors[n][[k, r]]).product::<f64>())
            .sum()
    })
}

/// `M[iₙ, r] = Σ_{i₋ₙ} t_i ∏_{m≠n} B⁽ᵐ⁾[iₘ, r]`; `others` skips mode `n`.
pub fn brute_cp_contract(t: &DenseTensor, others: &[&Array2<f64>], n: usize) -> Result<Array2<f64>> {
    if n >= t.order() || others.len() + 1 != t.order() {
        return Err(shape_err!("bad factor count for CP contraction"));
    }
    let rank = others.first().map(|b| b.ncols()).unwrap_or(1);
    let mut out = Array2::zeros((t.shape()[n], rank));
    let mut idx = vec![0; t.order()];
    for &v in t.data() {
        for r in 0..rank {
            let mut w = v;
            let mut k = 0;
            for (m, &i) in idx.iter().enumerate() {
                if m == n {
                    continue;
                }
                w *= others[k][[i, r]];
                k += 1;
            }
            out[[idx[n], r]] += w;
        }
        increment(&mut idx, t.shape());
    }
    Ok(out)
}

/// `X̂_i = Σ_j 𝒢_j ∏ₙ A⁽ⁿ⁾[iₙ, jₙ]`.
pub fn brute_tucker_reconstruct(core: &DenseTensor, factors: &[Array2<f64>]) -> Result<DenseTensor> {
    if factors.len() != core.order() || factors.iter().zip(core.shape()).any(|(f, &j)| f.ncols() != j) {
        return Err(shape_err!("Tucker factors do not match the core"));
    }
    let shape: Vec<usize> = factors.iter().map(|f| f.nrows()).collect();
    DenseTensor::from_fn(shape, |i| {
        let mut j = vec![0; core.order()];
        let mut s = 0.0;
        for &g in core.data() {
            s += g * i
                .iter()
                .zip(&j)
                .enumerate()
                .map(|(n, (&a, &b))| factors[n][[a, b]])
                .product::<f64>();
            increment(&mut j, core.shape());
        }
        s
    })
}

/// `Y_j = Σ_i t_i ∏ₙ M⁽ⁿ⁾[iₙ, jₙ]`.
pub fn brute_multimode_contract(t: &DenseTensor, factors: &[Array2<f64>]) -> Result<DenseTensor> {
    if factors.len() != t.order() || factors.iter().zip(t.shape()).any(|(f, &i)| f.nrows() != i) {
        return Err(shape_err!("factors do not match the tensor"));
    }
    let out_shape: Vec<usize> = factors.iter().map(|f| f.ncols()).collect();
    let mut out = DenseTensor::zeros(out_shape.clone())?;
    let mut i = vec![0; t.order()];
    for &v in t.data() {
        let mut j = vec![0; t.order()];
        for o in out.data_mut() {
            *o += v * i
                .iter()
                .zip(&j)
                .enumerate()
                .map(|(n, (&a, &b))| factors[n][[a, b]])
                .product::<f64>();
            increment(&mut j, &out_shape);
        }
        increment(&mut i, t.shape());
    }
    Ok(out)
}

/// `N[iₙ, jₙ] = Σ_{i₋ₙ} t_i Σ_{j₋ₙ} 𝒢_j ∏_{m≠n} M⁽ᵐ⁾[iₘ, jₘ]`, i.e. the
/// contraction of `t` with `ℬ⁽ⁿ⁾ = 𝒢 ×_{m≠n} M⁽ᵐ⁾`.
pub fn brute_factor_contract(
    t: &DenseTensor,
    core: &DenseTensor,
    factors: &[Array2<f64>],
    n: usize,
) -> Result<Array2<f64>> {
    if n >= t.order() || factors.len() != t.order() || core.order() != t.order() {
        return Err(shape_err!("bad arguments for the factor contraction"));
    }
    let mut out = Array2::zeros((t.shape()[n], core.shape()[n]));
    let mut i = vec![0; t.order()];
    for &v in t.data() {
        let mut j = vec![0; core.order()];
        for &g in core.data() {
            let mut w = v * g;
            for (m, (&a, &b)) in i.iter().zip(&j).enumerate() {
                if m != n {
                    w *= factors[m][[a, b]];
                }
            }
            out[[i[n], j[n]]] += w;
            increment(&mut j, core.shape());
        }
        increment(&mut i, t.shape());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::total_divergence;
    use ndarray::array;

    fn bp(b: f64) -> BetaParam {
        BetaParam::new(b).unwrap()
    }

    #[test]
    fn minimizer_examples() {
        for &b in &[0.0, 0.5, 1.0, 1.5] {
            assert_eq!(scalar_minimizer(3.0, 3.0, bp(b), 1e-12), 1.0);
            assert_eq!(scalar_minimizer(0.0, 3.0, bp(b), 1e-9), 1e-9);
        }
        assert!((scalar_minimizer(4.0, 1.0, bp(0.5), 1e-12) - 2.5198421).abs() < 1e-7);
    }

    #[test]
    fn single_component_surrogate_collapses() {
        let x = DenseTensor::new(vec![1, 1], vec![2.0]).unwrap();
        let reference = CpFactors::new(vec![array![[1.0]], array![[1.0]]]).unwrap();
        let theta = CpFactors::new(vec![array![[2.0]], array![[1.0]]]).unwrap();
        let g = eval_joint_surrogate_cp(&theta, &reference, &x, bp(1.0)).unwrap();
        assert_eq!(g, 0.0);
    }

    #[test]
    fn surrogate_is_tight_at_reference() {
        let f = CpFactors::new(vec![
            array![[0.5, 1.0], [2.0, 0.3]],
            array![[1.0, 0.2], [0.4, 0.9], [0.7, 0.7]],
        ])
        .unwrap();
        let x = DenseTensor::new(vec![2, 3], vec![1.0, 0.5, 0.2, 2.0, 1.5, 0.8]).unwrap();
        for &b in &[0.0, 0.5, 1.0, 1.5] {
            let d = total_divergence(&x, &f.reconstruct(), bp(b)).unwrap();
            let g = eval_joint_surrogate_cp(&f, &f, &x, bp(b)).unwrap();
            assert!((g - d).abs() <= 1e-12 * (1.0 + d), "beta {b}: {g} vs {d}");
        }
    }

    #[test]
    fn weights_normalize() {
        let f = CpFactors::new(vec![array![[0.5, 1.0], [2.0, 0.3]], array![[1.0, 0.2], [0.4, 0.9]]]).unwrap();
        assert!(ComponentWeights::cp(&f).unwrap().max_normalization_error() <= 1e-15);
    }
}
