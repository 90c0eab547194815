//! Classical multiplicative updates through explicit unfoldings, Khatri–Rao
//! and Kronecker products.
//!
//! Unfolding convention: the mode-`n` unfolding has the mode-`n` fibers as
//! rows; its columns enumerate the remaining modes in ascending order with
//! the last mode varying fastest. Khatri–Rao and Kronecker rows follow the
//! same ordering, so `unfold(T, n) · khatri_rao(off-mode factors)` is the
//! MTTKRP of mode `n`.

use ndarray::{Array2, ArrayView2};

use crate::config::{FitConfig, TraceRecord};
use crate::cp::CpFactors;
use crate::divergence::BetaParam;
use crate::driver::{self, multiplicative_update, Params};
use crate::error::{shape_err, Result};
use crate::tensor::{standard, validate_shape, Block, DenseTensor};
use crate::tucker::TuckerModel;

/// A mode-`n` unfolding.
#[derive(Debug, Clone, PartialEq)]
pub struct UnfoldedView {
    pub matrix: Array2<f64>,
    pub mode: usize,
}

pub fn unfold(t: &DenseTensor, n: usize) -> Result<UnfoldedView> {
    if n >= t.order() {
        return Err(shape_err!("mode {n} out of range for tensor of order {}", t.order()));
    }
    let shape = t.shape();
    let rows = shape[n];
    let pre: usize = shape[..n].iter().product();
    let post: usize = shape[n + 1..].iter().product();
    let mut out = Array2::zeros((rows, pre * post));
    let data = t.data();
    for p in 0..pre {
        for i in 0..rows {
            let src = &data[(p * rows + i) * post..(p * rows + i + 1) * post];
            let mut row = out.row_mut(i);
            let dst = row.as_slice_mut().unwrap();
            dst[p * post..(p + 1) * post].copy_from_slice(src);
        }
    }
    Ok(UnfoldedView { matrix: out, mode: n })
}

pub fn refold(u: &UnfoldedView, shape: &[usize]) -> Result<DenseTensor> {
    validate_shape(shape)?;
    let n = u.mode;
    if n >= shape.len() {
        return Err(shape_err!("mode {n} out of range for shape {shape:?}"));
    }
    let rows = shape[n];
    let pre: usize = shape[..n].iter().product();
    let post: usize = shape[n + 1..].iter().product();
    if u.matrix.dim() != (rows, pre * post) {
        return Err(shape_err!(
            "unfolding of size {:?} does not fit shape {shape:?} at mode {n}",
            u.matrix.dim()
        ));
    }
    let m = standard(&u.matrix);
    let ms = m.as_slice().unwrap();
    let cols = pre * post;
    let mut data = vec![0.0; rows * cols];
    for p in 0..pre {
        for i in 0..rows {
            data[(p * rows + i) * post..(p * rows + i + 1) * post]
                .copy_from_slice(&ms[i * cols + p * post..i * cols + (p + 1) * post]);
        }
    }
    DenseTensor::new(shape.to_vec(), data)
}

/// Columnwise Kronecker product; row `(i₁, …, i_k)` with `i_k` fastest.
pub fn khatri_rao(mats: &[&Array2<f64>]) -> Result<Array2<f64>> {
    let first = mats
        .first()
        .ok_or_else(|| shape_err!("Khatri-Rao product of no matrices"))?;
    let rank = first.ncols();
    if let Some(m) = mats.iter().find(|m| m.ncols() != rank) {
        return Err(shape_err!(
            "inconsistent rank in Khatri-Rao product: {} vs {rank}",
            m.ncols()
        ));
    }
    let mut out = standard(first);
    for m in &mats[1..] {
        let mut next = Array2::zeros((out.nrows() * m.nrows(), rank));
        for (a, row_a) in out.rows().into_iter().enumerate() {
            for (b, row_b) in m.rows().into_iter().enumerate() {
                let mut dst = next.row_mut(a * m.nrows() + b);
                for r in 0..rank {
                    dst[r] = row_a[r] * row_b[r];
                }
            }
        }
        out = next;
    }
    Ok(out)
}

/// Kronecker product; rows and columns both ordered with the last factor fastest.
pub fn kronecker(mats: &[&Array2<f64>]) -> Result<Array2<f64>> {
    let first = mats
        .first()
        .ok_or_else(|| shape_err!("Kronecker product of no matrices"))?;
    let mut out = standard(first);
    for m in &mats[1..] {
        let (r1, c1) = out.dim();
        let (r2, c2) = m.dim();
        let mut next = Array2::zeros((r1 * r2, c1 * c2));
        for i in 0..r1 {
            for j in 0..c1 {
                let a = out[[i, j]];
                for k in 0..r2 {
                    for l in 0..c2 {
                        next[[i * r2 + k, j * c2 + l]] = a * m[[k, l]];
                    }
                }
            }
        }
        out = next;
    }
    Ok(out)
}

/// `P = X ⊙ max(X̂, ε)^{β−2}` and `Q = max(X̂, ε)^{β−1}`, both materialized.
fn weight_tensors(x: &DenseTensor, xhat: &DenseTensor, p: BetaParam, eps: f64) -> Result<(DenseTensor, DenseTensor)> {
    let pw = x.mul(&xhat.pow(p.beta() - 2.0, Some(eps))?)?;
    let q = xhat.pow(p.beta() - 1.0, Some(eps))?;
    Ok((pw, q))
}

fn matmul(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Array2<f64> {
    a.dot(&b)
}

/// CP reconstruction through the mode-0 unfolding `A⁽⁰⁾ · KR(A⁽¹⁾, …)ᵀ`.
fn cp_reconstruct_unfolded(f: &CpFactors) -> Result<DenseTensor> {
    let rest: Vec<&Array2<f64>> = f.factors()[1..].iter().collect();
    let kr = khatri_rao(&rest)?;
    let unfolded = matmul(f.factor(0).view(), kr.t());
    refold(
        &UnfoldedView {
            matrix: unfolded,
            mode: 0,
        },
        &f.shape(),
    )
}

/// One unfolding-based MU sweep over the CP factors.
pub fn mu_unfold_cp_sweep(f: &mut CpFactors, x: &DenseTensor, p: BetaParam, eps: f64) -> Result<()> {
    if f.shape() != x.shape() {
        return Err(shape_err!(
            "CP model shape {:?} does not match data shape {:?}",
            f.shape(),
            x.shape()
        ));
    }
    for n in 0..f.order() {
        let xhat = cp_reconstruct_unfolded(f)?;
        let (pw, q) = weight_tensors(x, &xhat, p, eps)?;
        let others: Vec<&Array2<f64>> = f
            .factors()
            .iter()
            .enumerate()
            .filter(|&(m, _)| m != n)
            .map(|(_, a)| a)
            .collect();
        let kr = khatri_rao(&others)?;
        let num = matmul(unfold(&pw, n)?.matrix.view(), kr.view());
        let den = matmul(unfold(&q, n)?.matrix.view(), kr.view());
        let anchor = f.factor(n).clone();
        multiplicative_update(
            f.block_mut(n),
            anchor.values(),
            standard(&num).values(),
            standard(&den).values(),
            p.gamma(),
            eps,
        );
    }
    Ok(())
}

/// Unfolding-based MU for CP.
pub fn mu_unfold_cp_fit(x: &DenseTensor, init: CpFactors, cfg: &FitConfig) -> Result<(CpFactors, Vec<TraceRecord>)> {
    let p = cfg.beta_param()?;
    let eps = cfg.eps;
    driver::run(x, init, cfg, |f, _| mu_unfold_cp_sweep(f, x, p, eps))
}

/// `Kron(A⁽ᵐ⁾ : m ≠ skip)` in ascending mode order.
fn kron_except(factors: &[Array2<f64>], skip: usize) -> Result<Array2<f64>> {
    let mats: Vec<&Array2<f64>> = factors
        .iter()
        .enumerate()
        .filter(|&(m, _)| m != skip)
        .map(|(_, a)| a)
        .collect();
    if mats.is_empty() {
        return Ok(Array2::ones((1, 1)));
    }
    kronecker(&mats)
}

/// Tucker reconstruction `A⁽⁰⁾ · 𝒢₍₀₎ · Kron(A⁽¹⁾, …)ᵀ`.
fn tucker_reconstruct_unfolded(m: &TuckerModel) -> Result<DenseTensor> {
    let g0 = unfold(m.core(), 0)?.matrix;
    let kron = kron_except(m.factors(), 0)?;
    let unfolded = matmul(matmul(m.factor(0).view(), g0.view()).view(), kron.t());
    refold(
        &UnfoldedView {
            matrix: unfolded,
            mode: 0,
        },
        &m.shape(),
    )
}

/// One unfolding-based MU sweep over the Tucker blocks (core, then factors).
///
/// The factor update materializes `ℬ⁽ⁿ⁾₍ₙ₎ = 𝒢₍ₙ₎ · Kron(A⁽ᵐ⁾ : m ≠ n)ᵀ` and
/// forms `Num = P₍ₙ₎ · ℬ⁽ⁿ⁾₍ₙ₎ᵀ`.
pub fn mu_unfold_tucker_sweep(m: &mut TuckerModel, x: &DenseTensor, p: BetaParam, eps: f64) -> Result<()> {
    if m.shape() != x.shape() {
        return Err(shape_err!(
            "Tucker model shape {:?} does not match data shape {:?}",
            m.shape(),
            x.shape()
        ));
    }
    let gamma = p.gamma();

    let xhat = tucker_reconstruct_unfolded(m)?;
    let (pw, q) = weight_tensors(x, &xhat, p, eps)?;
    let kron = kron_except(m.factors(), 0)?;
    let a0t = m.factor(0).t();
    let num = matmul(matmul(a0t, unfold(&pw, 0)?.matrix.view()).view(), kron.view());
    let den = matmul(matmul(a0t, unfold(&q, 0)?.matrix.view()).view(), kron.view());
    let ranks = m.ranks().to_vec();
    let num = refold(&UnfoldedView { matrix: num, mode: 0 }, &ranks)?;
    let den = refold(&UnfoldedView { matrix: den, mode: 0 }, &ranks)?;
    let anchor = m.core().clone();
    multiplicative_update(m.block_mut(0), anchor.values(), num.data(), den.data(), gamma, eps);

    for n in 0..m.order() {
        let xhat = tucker_reconstruct_unfolded(m)?;
        let (pw, q) = weight_tensors(x, &xhat, p, eps)?;
        let b = matmul(unfold(m.core(), n)?.matrix.view(), kron_except(m.factors(), n)?.t());
        let num = matmul(unfold(&pw, n)?.matrix.view(), b.t());
        let den = matmul(unfold(&q, n)?.matrix.view(), b.t());
        let anchor = m.factor(n).clone();
        multiplicative_update(
            m.block_mut(n + 1),
            anchor.values(),
            standard(&num).values(),
            standard(&den).values(),
            gamma,
            eps,
        );
    }
    Ok(())
}

/// Unfolding-based MU for Tucker.
pub fn mu_unfold_tucker_fit(
    x: &DenseTensor,
    init: TuckerModel,
    cfg: &FitConfig,
) -> Result<(TuckerModel, Vec<TraceRecord>)> {
    let p = cfg.beta_param()?;
    let eps = cfg.eps;
    driver::run(x, init, cfg, |m, _| mu_unfold_tucker_sweep(m, x, p, eps))
}
