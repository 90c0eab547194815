//! Contraction primitives: mode-n products, CP contractions and the Tucker
//! multimode contractions behind every numerator and denominator.
//!
//! Nothing here forms an unfolding, Khatri–Rao or Kronecker product. Multi-
//! operand contractions are executed pairwise, one data mode at a time, always
//! picking the mode that leaves the smallest intermediate next. Modes are
//! zero-based throughout.

use ndarray::linalg::general_mat_mul;
use ndarray::{Array2, ArrayView2, ArrayViewMut2, ShapeBuilder};

use crate::error::{shape_err, Result};
use crate::tensor::{validate_shape, DenseTensor};

/// `t ×_n m` for a `J × I_n` matrix `m`: replaces mode `n` of size `I_n` by `J`.
pub fn mode_n_product(t: &DenseTensor, m: &Array2<f64>, n: usize) -> Result<DenseTensor> {
    check_mode(t, n)?;
    if m.ncols() != t.shape()[n] {
        return Err(shape_err!(
            "mode-{n} product: matrix has {} columns, tensor mode has size {}",
            m.ncols(),
            t.shape()[n]
        ));
    }
    let (shape, data) = mode_product(t.shape(), t.data(), m.view(), n);
    Ok(DenseTensor::from_parts_unchecked(shape, data))
}

/// CP contraction of `t` along every mode except `mode`.
///
/// `others` lists the off-mode factors `B⁽ᵐ⁾` (`Iₘ × R`) in increasing mode
/// order, skipping `mode`. Entry `(iₙ, r)` of the result is
/// `Σ t_i ∏_{m≠n} B⁽ᵐ⁾[iₘ, r]`.
pub fn cp_contract(t: &DenseTensor, others: &[&Array2<f64>], mode: usize) -> Result<Array2<f64>> {
    check_mode(t, mode)?;
    let order = t.order();
    if order < 2 {
        return Err(shape_err!("CP contraction needs a tensor of order at least 2"));
    }
    if others.len() != order - 1 {
        return Err(shape_err!(
            "CP contraction of an order-{order} tensor needs {} off-mode factors, got {}",
            order - 1,
            others.len()
        ));
    }
    let rank = others[0].ncols();
    let modes: Vec<usize> = (0..order).filter(|&m| m != mode).collect();
    for (&m, b) in modes.iter().zip(others) {
        if b.ncols() != rank {
            return Err(shape_err!(
                "inconsistent rank: factor for mode {m} has {} columns, expected {rank}",
                b.ncols()
            ));
        }
        if b.nrows() != t.shape()[m] {
            return Err(shape_err!(
                "factor for mode {m} has {} rows, tensor mode has size {}",
                b.nrows(),
                t.shape()[m]
            ));
        }
    }

    // Largest mode first leaves the smallest intermediate.
    let mut pending: Vec<(usize, &Array2<f64>)> = modes.iter().copied().zip(others.iter().copied()).collect();
    pending.sort_by(|a, b| t.shape()[b.0].cmp(&t.shape()[a.0]).then(a.0.cmp(&b.0)));

    // `axes` tracks which original modes the leading axes still carry; the
    // trailing rank axis appears after the first contraction.
    let mut axes: Vec<usize> = (0..order).collect();
    let mut shape = t.shape().to_vec();
    let (first_mode, first_b) = pending[0];
    let pos = axes.iter().position(|&a| a == first_mode).unwrap();
    let mut data = contract_new_rank(&shape, t.data(), first_b.view(), pos);
    shape.remove(pos);
    axes.remove(pos);
    for &(m, b) in &pending[1..] {
        let pos = axes.iter().position(|&a| a == m).unwrap();
        data = contract_diag_rank(&shape, &data, rank, b.view(), pos);
        shape.remove(pos);
        axes.remove(pos);
    }
    debug_assert_eq!(axes, vec![mode]);
    Ok(Array2::from_shape_vec((shape[0], rank), data).expect("contraction output"))
}

/// [`cp_contract`] applied to an all-ones tensor of the given shape: every row
/// equals the product over off modes of the factor column sums.
pub fn cp_contract_ones(shape: &[usize], others: &[&Array2<f64>], mode: usize) -> Result<Array2<f64>> {
    validate_shape(shape)?;
    if mode >= shape.len() || others.len() + 1 != shape.len() || others.is_empty() {
        return Err(shape_err!(
            "CP contraction: bad mode {mode} or factor count for shape {shape:?}"
        ));
    }
    let rank = others[0].ncols();
    let mut row = vec![1.0; rank];
    let modes = (0..shape.len()).filter(|&m| m != mode);
    for (m, b) in modes.zip(others) {
        if b.ncols() != rank || b.nrows() != shape[m] {
            return Err(shape_err!(
                "factor for mode {m} does not match shape {shape:?} and rank {rank}"
            ));
        }
        for (r, s) in b.sum_axis(ndarray::Axis(0)).iter().enumerate() {
            row[r] *= s;
        }
    }
    let mut out = Array2::zeros((shape[mode], rank));
    for mut out_row in out.rows_mut() {
        out_row.assign(&ndarray::ArrayView1::from(&row));
    }
    Ok(out)
}

/// CP reconstruction `X̂_i = Σ_r ∏_n A⁽ⁿ⁾[iₙ, r]`.
pub fn cp_reconstruct(factors: &[Array2<f64>]) -> Result<DenseTensor> {
    if factors.len() < 2 {
        return Err(shape_err!("a CP model needs at least two factor matrices"));
    }
    let rank = factors[0].ncols();
    if let Some(f) = factors.iter().find(|f| f.ncols() != rank) {
        return Err(shape_err!("inconsistent rank: {} vs {rank}", f.ncols()));
    }
    let shape: Vec<usize> = factors.iter().map(|f| f.nrows()).collect();
    validate_shape(&shape)?;

    // Partial products over all modes but the last, rank kept as trailing axis.
    let mut partial: Vec<f64> = factors[0].iter().copied().collect();
    let mut rows = factors[0].nrows();
    for f in &factors[1..factors.len() - 1] {
        let f = f.as_standard_layout();
        let fs = f.as_slice().unwrap();
        let mut next = Vec::with_capacity(rows * f.nrows() * rank);
        for a in partial.chunks_exact(rank) {
            for b in fs.chunks_exact(rank) {
                next.extend(a.iter().zip(b).map(|(x, y)| x * y));
            }
        }
        partial = next;
        rows *= f.nrows();
    }
    let last = factors.last().unwrap();
    let w = ArrayView2::from_shape((rows, rank), &partial).unwrap();
    let mut out = vec![0.0; rows * last.nrows()];
    {
        let mut c = ArrayViewMut2::from_shape((rows, last.nrows()), &mut out).unwrap();
        general_mat_mul(1.0, &w, &last.t(), 0.0, &mut c);
    }
    Ok(DenseTensor::from_parts_unchecked(shape, out))
}

/// Tucker reconstruction `𝒢 ×₁ A⁽¹⁾ ⋯ ×_N A⁽ᴺ⁾` with `A⁽ⁿ⁾` of size `Iₙ × Jₙ`.
pub fn tucker_reconstruct(core: &DenseTensor, factors: &[Array2<f64>]) -> Result<DenseTensor> {
    if factors.len() != core.order() {
        return Err(shape_err!(
            "core of order {} needs {} factors, got {}",
            core.order(),
            core.order(),
            factors.len()
        ));
    }
    for (n, f) in factors.iter().enumerate() {
        if f.ncols() != core.shape()[n] {
            return Err(shape_err!(
                "factor {n} has {} columns, core mode has size {}",
                f.ncols(),
                core.shape()[n]
            ));
        }
    }
    // Cheapest growth first.
    let mut modes: Vec<usize> = (0..core.order()).collect();
    modes.sort_by(|&a, &b| {
        let ga = factors[a].nrows() as f64 / factors[a].ncols() as f64;
        let gb = factors[b].nrows() as f64 / factors[b].ncols() as f64;
        ga.total_cmp(&gb).then(a.cmp(&b))
    });
    let mut shape = core.shape().to_vec();
    let mut data = core.data().to_vec();
    for n in modes {
        let (s, d) = mode_product(&shape, &data, factors[n].view(), n);
        shape = s;
        data = d;
    }
    Ok(DenseTensor::from_parts_unchecked(shape, data))
}

/// `t ×ₙ M⁽ⁿ⁾ᵀ` over every mode `n` except `skip`, for `M⁽ⁿ⁾` of size `Iₙ × Jₙ`.
///
/// Without `skip` the result has shape `(J₁, …, J_N)` with entries
/// `Σ_i t_i ∏ₙ M⁽ⁿ⁾[iₙ, jₙ]`. With `skip = Some(n)` mode `n` keeps its data
/// size `Iₙ`; the factor at position `n` is then ignored and only checked for
/// row count.
pub fn tucker_multimode_contract(t: &DenseTensor, factors: &[Array2<f64>], skip: Option<usize>) -> Result<DenseTensor> {
    check_tucker_factors(t, factors, skip)?;
    let mut modes: Vec<usize> = (0..t.order()).filter(|&n| Some(n) != skip).collect();
    // Strongest reduction first.
    modes.sort_by(|&a, &b| {
        let ra = factors[a].ncols() as f64 / factors[a].nrows() as f64;
        let rb = factors[b].ncols() as f64 / factors[b].nrows() as f64;
        ra.total_cmp(&rb).then(a.cmp(&b))
    });
    let mut shape = t.shape().to_vec();
    let mut data = t.data().to_vec();
    for n in modes {
        let (s, d) = mode_product(&shape, &data, factors[n].t(), n);
        shape = s;
        data = d;
    }
    Ok(DenseTensor::from_parts_unchecked(shape, data))
}

/// [`tucker_multimode_contract`] (no skipped mode) of an all-ones tensor: the
/// outer product of the factor column sums.
pub fn tucker_multimode_contract_ones(factors: &[Array2<f64>]) -> Result<DenseTensor> {
    if factors.is_empty() {
        return Err(shape_err!("no factors"));
    }
    let sums: Vec<Vec<f64>> = factors.iter().map(|f| f.sum_axis(ndarray::Axis(0)).to_vec()).collect();
    let shape: Vec<usize> = factors.iter().map(|f| f.ncols()).collect();
    DenseTensor::from_fn(shape, |j| j.iter().enumerate().map(|(n, &jn)| sums[n][jn]).product())
}

/// Fused Tucker factor contraction for mode `n`:
///
/// `Num[iₙ, jₙ] = Σ_{i₋ₙ} Σ_{j₋ₙ} t_i 𝒢_j ∏_{m≠n} M⁽ᵐ⁾[iₘ, jₘ]`
///
/// computed without materializing the partial tensor `𝒢 ×_{m≠n} M⁽ᵐ⁾`.
pub fn tucker_factor_contract(
    t: &DenseTensor,
    core: &DenseTensor,
    factors: &[Array2<f64>],
    n: usize,
) -> Result<Array2<f64>> {
    check_tucker_factors(t, factors, Some(n))?;
    check_core(core, factors)?;
    let y = tucker_multimode_contract(t, factors, Some(n))?;
    Ok(pair_with_core(&y, core, n))
}

/// [`tucker_factor_contract`] for an all-ones data tensor with mode-`n` size `rows`.
pub fn tucker_factor_contract_ones(
    core: &DenseTensor,
    factors: &[Array2<f64>],
    n: usize,
    rows: usize,
) -> Result<Array2<f64>> {
    if factors.len() != core.order() || n >= core.order() {
        return Err(shape_err!("bad mode {n} or factor count for core {:?}", core.shape()));
    }
    check_core(core, factors)?;
    // Contract the core against column-sum vectors on every other mode.
    let mut shape = core.shape().to_vec();
    let mut data = core.data().to_vec();
    for (m, f) in factors.iter().enumerate() {
        if m == n {
            continue;
        }
        let sums = f.sum_axis(ndarray::Axis(0)).insert_axis(ndarray::Axis(0));
        let (s, d) = mode_product(&shape, &data, sums.view(), m);
        shape = s;
        data = d;
    }
    let mut out = Array2::zeros((rows, core.shape()[n]));
    let v = ndarray::ArrayView1::from(&data);
    for mut row in out.rows_mut() {
        row.assign(&v);
    }
    Ok(out)
}

/// `Σ_{p,q} y[p, i, q] g[p, j, q]` where `p`/`q` run over the axes before/after `n`.
pub(crate) fn pair_with_core(y: &DenseTensor, core: &DenseTensor, n: usize) -> Array2<f64> {
    let pre: usize = core.shape()[..n].iter().product();
    let post: usize = core.shape()[n + 1..].iter().product();
    let rows = y.shape()[n];
    let cols = core.shape()[n];
    let mut out = Array2::<f64>::zeros((rows, cols));
    for p in 0..pre {
        let yp = ArrayView2::from_shape((rows, post), &y.data()[p * rows * post..(p + 1) * rows * post]).unwrap();
        let gp = ArrayView2::from_shape((cols, post), &core.data()[p * cols * post..(p + 1) * cols * post]).unwrap();
        general_mat_mul(1.0, &yp, &gp.t(), 1.0, &mut out);
    }
    out
}

fn check_mode(t: &DenseTensor, n: usize) -> Result<()> {
    if n >= t.order() {
        return Err(shape_err!("mode {n} out of range for tensor of order {}", t.order()));
    }
    Ok(())
}

fn check_tucker_factors(t: &DenseTensor, factors: &[Array2<f64>], skip: Option<usize>) -> Result<()> {
    if factors.len() != t.order() {
        return Err(shape_err!(
            "tensor of order {} needs {} factors, got {}",
            t.order(),
            t.order(),
            factors.len()
        ));
    }
    if let Some(n) = skip {
        check_mode(t, n)?;
    }
    for (n, f) in factors.iter().enumerate() {
        if f.nrows() != t.shape()[n] {
            return Err(shape_err!(
                "factor {n} has {} rows, tensor mode has size {}",
                f.nrows(),
                t.shape()[n]
            ));
        }
    }
    Ok(())
}

fn check_core(core: &DenseTensor, factors: &[Array2<f64>]) -> Result<()> {
    if core.order() != factors.len() {
        return Err(shape_err!("core order {} vs {} factors", core.order(), factors.len()));
    }
    for (m, f) in factors.iter().enumerate() {
        if f.ncols() != core.shape()[m] {
            return Err(shape_err!(
                "factor {m} has {} columns, core mode has size {}",
                f.ncols(),
                core.shape()[m]
            ));
        }
    }
    Ok(())
}

/// Mode product with a `J × I` matrix view on axis `n` of a row-major block.
pub(crate) fn mode_product(shape: &[usize], data: &[f64], m: ArrayView2<f64>, n: usize) -> (Vec<usize>, Vec<f64>) {
    let (j, i) = m.dim();
    debug_assert_eq!(shape[n], i);
    let pre: usize = shape[..n].iter().product();
    let post: usize = shape[n + 1..].iter().product();
    let mut out = vec![0.0; pre * j * post];
    if post == 1 {
        // (pre × I) · (I × J)
        let a = ArrayView2::from_shape((pre, i), data).unwrap();
        let mut c = ArrayViewMut2::from_shape((pre, j), &mut out).unwrap();
        general_mat_mul(1.0, &a, &m.t(), 0.0, &mut c);
    } else {
        for p in 0..pre {
            let a = ArrayView2::from_shape((i, post), &data[p * i * post..(p + 1) * i * post]).unwrap();
            let mut c = ArrayViewMut2::from_shape((j, post), &mut out[p * j * post..(p + 1) * j * post]).unwrap();
            general_mat_mul(1.0, &m, &a, 0.0, &mut c);
        }
    }
    let mut new_shape = shape.to_vec();
    new_shape[n] = j;
    (new_shape, out)
}

/// `out[p, q, r] = Σ_i t[p, i, q] b[i, r]`; the contracted axis disappears and a
/// trailing rank axis is appended.
fn contract_new_rank(shape: &[usize], data: &[f64], b: ArrayView2<f64>, n: usize) -> Vec<f64> {
    let (i, rank) = b.dim();
    let pre: usize = shape[..n].iter().product();
    let post: usize = shape[n + 1..].iter().product();
    let mut out = vec![0.0; pre * post * rank];
    if post == 1 {
        let a = ArrayView2::from_shape((pre, i), data).unwrap();
        let mut c = ArrayViewMut2::from_shape((pre, rank), &mut out).unwrap();
        general_mat_mul(1.0, &a, &b, 0.0, &mut c);
    } else if pre == 1 {
        // tᵀ viewed through column-major strides.
        let a = ArrayView2::from_shape((post, i).f(), data).unwrap();
        let mut c = ArrayViewMut2::from_shape((post, rank), &mut out).unwrap();
        general_mat_mul(1.0, &a, &b, 0.0, &mut c);
    } else {
        for p in 0..pre {
            let a = ArrayView2::from_shape((post, i).f(), &data[p * i * post..(p + 1) * i * post]).unwrap();
            let mut c =
                ArrayViewMut2::from_shape((post, rank), &mut out[p * post * rank..(p + 1) * post * rank]).unwrap();
            general_mat_mul(1.0, &a, &b, 0.0, &mut c);
        }
    }
    out
}

/// `out[p, q, r] = Σ_i t[p, i, q, r] b[i, r]` for a block whose last axis is
/// the rank axis (not listed in `shape`).
fn contract_diag_rank(shape: &[usize], data: &[f64], rank: usize, b: ArrayView2<f64>, n: usize) -> Vec<f64> {
    let i_len = shape[n];
    let pre: usize = shape[..n].iter().product();
    let post: usize = shape[n + 1..].iter().product();
    let b = b.as_standard_layout();
    let bs = b.as_slice().unwrap();
    let block = post * rank;
    let mut out = vec![0.0; pre * block];
    for p in 0..pre {
        let out_p = &mut out[p * block..(p + 1) * block];
        for i in 0..i_len {
            let brow = &bs[i * rank..(i + 1) * rank];
            let src = &data[(p * i_len + i) * block..(p * i_len + i + 1) * block];
            for (o, s) in out_p.chunks_exact_mut(rank).zip(src.chunks_exact(rank)) {
                for ((o, &s), &w) in o.iter_mut().zip(s).zip(brow) {
                    *o += s * w;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn seq(shape: Vec<usize>) -> DenseTensor {
        let n: usize = shape.iter().product();
        DenseTensor::new(shape, (1..=n).map(|v| v as f64).collect()).unwrap()
    }

    #[test]
    fn identity_mode_product_is_exact_identity() {
        let t = seq(vec![2, 3]);
        let id = Array2::eye(3);
        assert_eq!(mode_n_product(&t, &id, 1).unwrap(), t);
    }

    #[test]
    fn mode_product_column_sums() {
        let t = DenseTensor::new(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let out = mode_n_product(&t, &array![[1.0, 1.0]], 0).unwrap();
        assert_eq!(out.shape(), &[1, 2]);
        assert_eq!(out.data(), &[4.0, 6.0]);
    }

    #[test]
    fn mode_product_of_ones_along_last_mode() {
        let t = DenseTensor::filled(vec![2, 2, 2], 1.0).unwrap();
        let out = mode_n_product(&t, &array![[1.0, 1.0]], 2).unwrap();
        assert_eq!(out.shape(), &[2, 2, 1]);
        assert!(out.data().iter().all(|&v| v == 2.0));
    }

    #[test]
    fn mode_product_dimension_mismatch() {
        let t = seq(vec![2, 3]);
        assert!(mode_n_product(&t, &Array2::eye(2), 1).is_err());
        assert!(mode_n_product(&t, &Array2::eye(3), 2).is_err());
    }

    #[test]
    fn cp_contract_small_sequence() {
        let t = seq(vec![2, 2, 2]);
        let ones = Array2::ones((2, 1));
        let m = cp_contract(&t, &[&ones, &ones], 0).unwrap();
        assert_eq!(m, array![[10.0], [26.0]]);
    }

    #[test]
    fn cp_contract_with_ones_gives_fiber_sums() {
        let t = seq(vec![3, 2, 4]);
        let a = Array2::ones((3, 3));
        let c = Array2::ones((4, 3));
        let m = cp_contract(&t, &[&a, &c], 1).unwrap();
        for j in 0..2 {
            let fiber: f64 = (0..3)
                .flat_map(|i| (0..4).map(move |k| (i, k)))
                .map(|(i, k)| t.at(&[i, j, k]))
                .sum();
            for r in 0..3 {
                assert_eq!(m[[j, r]], fiber);
            }
        }
        let ones = DenseTensor::filled(vec![3, 2, 4], 1.0).unwrap();
        let fast = cp_contract_ones(ones.shape(), &[&a, &c], 1).unwrap();
        assert_eq!(fast, cp_contract(&ones, &[&a, &c], 1).unwrap());
    }

    #[test]
    fn cp_contract_rejects_inconsistent_rank() {
        let t = seq(vec![2, 2, 2]);
        let a = Array2::ones((2, 1));
        let b = Array2::ones((2, 2));
        assert!(cp_contract(&t, &[&a, &b], 0).is_err());
        assert!(cp_contract(&t, &[&a], 0).is_err());
        assert!(cp_contract(&t, &[&a, &Array2::ones((3, 1))], 0).is_err());
    }

    #[test]
    fn cp_reconstruct_rank_one_outer_product() {
        let x = cp_reconstruct(&[array![[1.0], [2.0]], array![[3.0], [4.0]]]).unwrap();
        assert_eq!(x.data(), &[3.0, 4.0, 6.0, 8.0]);
        let ones = cp_reconstruct(&[Array2::ones((2, 3)), Array2::ones((3, 3)), Array2::ones((2, 3))]).unwrap();
        assert!(ones.data().iter().all(|&v| v == 3.0));
    }

    #[test]
    fn tucker_reconstruct_identity_factors() {
        let core = seq(vec![2, 3, 2]);
        let factors = vec![Array2::eye(2), Array2::eye(3), Array2::eye(2)];
        assert_eq!(tucker_reconstruct(&core, &factors).unwrap(), core);
    }

    #[test]
    fn tucker_reconstruct_rank_one_of_ones() {
        let core = DenseTensor::filled(vec![1, 1, 1], 1.0).unwrap();
        let factors = vec![Array2::ones((2, 1)), Array2::ones((3, 1)), Array2::ones((4, 1))];
        let x = tucker_reconstruct(&core, &factors).unwrap();
        assert_eq!(x.shape(), &[2, 3, 4]);
        assert!(x.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn total_contraction_is_grand_sum() {
        let t = seq(vec![2, 3, 2]);
        let factors: Vec<_> = t.shape().iter().map(|&d| Array2::ones((d, 1))).collect();
        let out = tucker_multimode_contract(&t, &factors, None).unwrap();
        assert_eq!(out.shape(), &[1, 1, 1]);
        assert_eq!(out.data()[0], t.sum());
    }

    #[test]
    fn ones_contraction_counts_terms() {
        let q = DenseTensor::filled(vec![3, 2, 4], 1.0).unwrap();
        let factors = vec![Array2::ones((3, 2)), Array2::ones((2, 2)), Array2::ones((4, 3))];
        let out = tucker_multimode_contract(&q, &factors, None).unwrap();
        assert_eq!(out.shape(), &[2, 2, 3]);
        assert!(out.data().iter().all(|&v| v == 24.0));
        assert_eq!(tucker_multimode_contract_ones(&factors).unwrap(), out);
    }

    #[test]
    fn factor_contract_ones_shortcut_matches() {
        let core = seq(vec![2, 3, 2]);
        let factors = vec![
            array![[0.5, 1.0], [2.0, 0.25], [1.0, 1.0]],
            array![[1.0, 2.0, 3.0], [0.5, 0.5, 0.5]],
            array![[1.0, 0.0], [0.2, 0.7], [3.0, 1.0], [1.0, 1.0]],
        ];
        let ones = DenseTensor::filled(vec![3, 2, 4], 1.0).unwrap();
        for n in 0..3 {
            let full = tucker_factor_contract(&ones, &core, &factors, n).unwrap();
            let fast = tucker_factor_contract_ones(&core, &factors, n, ones.shape()[n]).unwrap();
            for (a, b) in full.iter().zip(fast.iter()) {
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
            }
        }
    }
}
