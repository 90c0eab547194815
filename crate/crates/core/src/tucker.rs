//! Nonnegative Tucker decomposition with block-MM and joint-MM updates of
//! the core and the factor matrices. Each sweep updates the core first, then
//! the factors in mode order.

use ndarray::Array2;

use crate::config::{FitConfig, TraceRecord};
use crate::contract::{
    tucker_factor_contract, tucker_factor_contract_ones, tucker_multimode_contract, tucker_multimode_contract_ones,
};
use crate::divergence::{chi_transform, BetaParam, Chi, PoweredWeights};
use crate::driver::{self, multiplicative_update, Params};
use crate::error::{shape_err, Error, Result};
use crate::extrapolate::ExtrapolationState;
use crate::tensor::{standard, Block, DenseTensor};

/// Core tensor `𝒢` (`J₁ × ⋯ × J_N`) and factors `A⁽ⁿ⁾` (`Iₙ × Jₙ`).
#[derive(Debug, Clone, PartialEq)]
pub struct TuckerModel {
    core: DenseTensor,
    factors: Vec<Array2<f64>>,
}

/// A single parameter block of a Tucker model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TuckerBlock {
    Core,
    Factor(usize),
}

impl TuckerModel {
    pub fn new(core: DenseTensor, factors: Vec<Array2<f64>>) -> Result<Self> {
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
            if f.nrows() == 0 {
                return Err(shape_err!("factor {n} has no rows"));
            }
            if let Some(v) = f.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
                return Err(Error::Domain(format!("factor {n} has invalid entry {v}")));
            }
        }
        if let Some(v) = core.data().iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::Domain(format!("core has invalid entry {v}")));
        }
        Ok(Self {
            core,
            factors: factors.iter().map(standard).collect(),
        })
    }

    pub fn core(&self) -> &DenseTensor {
        &self.core
    }

    pub fn factors(&self) -> &[Array2<f64>] {
        &self.factors
    }

    pub fn factor(&self, n: usize) -> &Array2<f64> {
        &self.factors[n]
    }

    pub fn into_parts(self) -> (DenseTensor, Vec<Array2<f64>>) {
        (self.core, self.factors)
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    /// Core shape `(J₁, …, J_N)`.
    pub fn ranks(&self) -> &[usize] {
        self.core.shape()
    }

    /// Data shape `(I₁, …, I_N)`.
    pub fn shape(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.nrows()).collect()
    }

    pub fn reconstruct(&self) -> DenseTensor {
        crate::contract::tucker_reconstruct(&self.core, &self.factors).expect("validated model")
    }

    fn check_data(&self, x: &DenseTensor) -> Result<()> {
        if self.shape() != x.shape() {
            return Err(shape_err!(
                "Tucker model shape {:?} does not match data shape {:?}",
                self.shape(),
                x.shape()
            ));
        }
        Ok(())
    }

    fn check_block(&self, block: TuckerBlock) -> Result<()> {
        match block {
            TuckerBlock::Factor(n) if n >= self.order() => Err(shape_err!(
                "mode {n} out of range for a model of order {}",
                self.order()
            )),
            _ => Ok(()),
        }
    }

    fn values_mut(&mut self, block: TuckerBlock) -> &mut [f64] {
        match block {
            TuckerBlock::Core => self.core.values_mut(),
            TuckerBlock::Factor(n) => self.factors[n].values_mut(),
        }
    }

    fn values(&self, block: TuckerBlock) -> &[f64] {
        match block {
            TuckerBlock::Core => self.core.values(),
            TuckerBlock::Factor(n) => self.factors[n].values(),
        }
    }

    fn blocks(&self) -> impl Iterator<Item = TuckerBlock> {
        std::iter::once(TuckerBlock::Core).chain((0..self.order()).map(TuckerBlock::Factor))
    }
}

impl Params for TuckerModel {
    fn reconstruct(&self) -> Result<DenseTensor> {
        Ok(TuckerModel::reconstruct(self))
    }

    fn block_count(&self) -> usize {
        self.order() + 1
    }

    fn block(&self, b: usize) -> &[f64] {
        self.values(block_of(b))
    }

    fn block_mut(&mut self, b: usize) -> &mut [f64] {
        self.values_mut(block_of(b))
    }
}

fn block_of(b: usize) -> TuckerBlock {
    if b == 0 {
        TuckerBlock::Core
    } else {
        TuckerBlock::Factor(b - 1)
    }
}

/// Flat numerator and denominator for `block` given weights and the
/// (possibly transformed) core and factors used on each side.
fn contract_block(
    block: TuckerBlock,
    p: &DenseTensor,
    q: Option<&DenseTensor>,
    num_side: (&DenseTensor, &[Array2<f64>]),
    den_side: (&DenseTensor, &[Array2<f64>]),
) -> Result<(Vec<f64>, Vec<f64>)> {
    match block {
        TuckerBlock::Core => {
            let num = tucker_multimode_contract(p, num_side.1, None)?;
            let den = match q {
                Some(q) => tucker_multimode_contract(q, den_side.1, None)?,
                None => tucker_multimode_contract_ones(den_side.1)?,
            };
            Ok((num.into_data(), den.into_data()))
        }
        TuckerBlock::Factor(n) => {
            let num = tucker_factor_contract(p, num_side.0, num_side.1, n)?;
            let den = match q {
                Some(q) => tucker_factor_contract(q, den_side.0, den_side.1, n)?,
                None => tucker_factor_contract_ones(den_side.0, den_side.1, n, p.shape()[n])?,
            };
            Ok((
                standard(&num).into_raw_vec_and_offset().0,
                standard(&den).into_raw_vec_and_offset().0,
            ))
        }
    }
}

/// Block-MM numerator and denominator of `block` at the current model.
pub fn block_num_den(
    m: &TuckerModel,
    block: TuckerBlock,
    x: &DenseTensor,
    p: BetaParam,
    eps: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    m.check_data(x)?;
    m.check_block(block)?;
    let xhat = m.reconstruct();
    let w = PoweredWeights::new(x, &xhat, p, eps)?;
    let side = (&m.core, m.factors.as_slice());
    contract_block(block, &w.p, w.q.as_ref(), side, side)
}

fn block_update(m: &mut TuckerModel, block: TuckerBlock, x: &DenseTensor, p: BetaParam, eps: f64) -> Result<()> {
    let (num, den) = block_num_den(m, block, x, p, eps)?;
    let anchor = m.values(block).to_vec();
    multiplicative_update(m.values_mut(block), &anchor, &num, &den, p.gamma(), eps);
    Ok(())
}

/// `𝒢 ← max(𝒢 ⊙ (P_core / Q_core)^γ, ε)` with `P_core`, `Q_core` the
/// contractions of `P`, `Q` against every factor.
pub fn block_core_update(m: &mut TuckerModel, x: &DenseTensor, p: BetaParam, eps: f64) -> Result<()> {
    block_update(m, TuckerBlock::Core, x, p, eps)
}

/// Block-MM update of factor `n`; the numerator contracts `P` with the core
/// and the other factors in one fused pass.
pub fn block_factor_update(m: &mut TuckerModel, n: usize, x: &DenseTensor, p: BetaParam, eps: f64) -> Result<()> {
    block_update(m, TuckerBlock::Factor(n), x, p, eps)
}

/// One block-MM sweep: core, then factors `0..N`.
pub fn bcomm_sweep(m: &mut TuckerModel, x: &DenseTensor, p: BetaParam, eps: f64) -> Result<()> {
    block_core_update(m, x, p, eps)?;
    for n in 0..m.order() {
        block_factor_update(m, n, x, p, eps)?;
    }
    Ok(())
}

fn bcomm_sweep_extrapolated(
    m: &mut TuckerModel,
    x: &DenseTensor,
    p: BetaParam,
    eps: f64,
    state: &mut ExtrapolationState,
) -> Result<()> {
    driver::begin_extrapolation(m, state);
    for b in 0..m.block_count() {
        driver::extrapolate_block(m, b, state, eps);
        block_update(m, block_of(b), x, p, eps)?;
    }
    Ok(())
}

/// Block MM for Tucker.
pub fn tucker_bcomm_fit(
    x: &DenseTensor,
    init: TuckerModel,
    cfg: &FitConfig,
) -> Result<(TuckerModel, Vec<TraceRecord>)> {
    init.check_data(x)?;
    let p = cfg.beta_param()?;
    let eps = cfg.eps;
    driver::run(x, init, cfg, |m, state| match state {
        Some(state) => bcomm_sweep_extrapolated(m, x, p, eps, state),
        None => bcomm_sweep(m, x, p, eps),
    })
}

struct JointReference {
    model: TuckerModel,
    weights: PoweredWeights,
    /// Numerators are constant within an outer step at β = 1.
    cached_num: Option<Vec<Vec<f64>>>,
}

impl JointReference {
    fn new(reference: &TuckerModel, x: &DenseTensor, p: BetaParam, eps: f64) -> Result<Self> {
        let xhat = reference.reconstruct();
        let weights = PoweredWeights::new(x, &xhat, p, eps)?;
        let mut this = Self {
            model: reference.clone(),
            weights,
            cached_num: None,
        };
        if p.unit_denominator_weights() {
            let side = (&reference.core, reference.factors.as_slice());
            let nums = reference
                .blocks()
                .map(|b| contract_block(b, &this.weights.p, None, side, side).map(|(n, _)| n))
                .collect::<Result<Vec<_>>>()?;
            this.cached_num = Some(nums);
        }
        Ok(this)
    }

    fn transformed(&self, m: &TuckerModel, kind: Chi, p: BetaParam) -> Result<(DenseTensor, Vec<Array2<f64>>)> {
        let core = chi_transform(kind, m.core.data(), self.model.core.data(), p)?;
        let core = DenseTensor::new(m.core.shape().to_vec(), core)?;
        let factors = m
            .factors
            .iter()
            .zip(&self.model.factors)
            .map(|(a, r)| {
                let v = chi_transform(kind, a.values(), r.values(), p)?;
                Ok(Array2::from_shape_vec(a.raw_dim(), v).expect("same shape"))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((core, factors))
    }

    fn num_den(&self, m: &TuckerModel, block: TuckerBlock, p: BetaParam) -> Result<(Vec<f64>, Vec<f64>)> {
        let index = match block {
            TuckerBlock::Core => 0,
            TuckerBlock::Factor(n) => n + 1,
        };
        match &self.cached_num {
            Some(nums) => {
                let side = (&m.core, m.factors.as_slice());
                let (_, den) = contract_block(block, &self.weights.p, None, side, side)?;
                Ok((nums[index].clone(), den))
            }
            None => {
                let (g1, a1) = self.transformed(m, Chi::First, p)?;
                let (g2, a2) = self.transformed(m, Chi::Second, p)?;
                contract_block(block, &self.weights.p, self.weights.q.as_ref(), (&g1, &a1), (&g2, &a2))
            }
        }
    }

    fn update(&self, m: &mut TuckerModel, block: TuckerBlock, p: BetaParam, eps: f64) -> Result<()> {
        let (num, den) = self.num_den(m, block, p)?;
        multiplicative_update(
            m.values_mut(block),
            self.model.values(block),
            &num,
            &den,
            p.gamma(),
            eps,
        );
        Ok(())
    }
}

/// Joint-MM numerator and denominator of `block` at the inner iterate `m`
/// with reference `reference`.
pub fn joint_num_den(
    m: &TuckerModel,
    reference: &TuckerModel,
    block: TuckerBlock,
    x: &DenseTensor,
    p: BetaParam,
    eps: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    m.check_data(x)?;
    reference.check_data(x)?;
    m.check_block(block)?;
    if m.ranks() != reference.ranks() {
        return Err(shape_err!(
            "ranks {:?} vs reference ranks {:?}",
            m.ranks(),
            reference.ranks()
        ));
    }
    JointReference::new(reference, x, p, eps)?.num_den(m, block, p)
}

fn jcomm_outer_step_observed(
    m: &mut TuckerModel,
    x: &DenseTensor,
    p: BetaParam,
    inner: usize,
    eps: f64,
    mut observe: impl FnMut(&TuckerModel, TuckerBlock),
) -> Result<()> {
    m.check_data(x)?;
    if inner < 1 {
        return Err(Error::Config("inner steps must be at least 1".into()));
    }
    let reference = JointReference::new(m, x, p, eps)?;
    let order: Vec<TuckerBlock> = m.blocks().collect();
    for _ in 0..inner {
        for &block in &order {
            reference.update(m, block, p, eps)?;
            observe(m, block);
        }
    }
    Ok(())
}

/// One joint-MM outer step for Tucker. Core and factor updates are anchored
/// at the reference blocks; the current inner iterate enters through the
/// χ-transformed off-block terms.
pub fn jcomm_tucker_outer_step(
    m: &mut TuckerModel,
    x: &DenseTensor,
    p: BetaParam,
    inner: usize,
    eps: f64,
) -> Result<()> {
    jcomm_outer_step_observed(m, x, p, inner, eps, |_, _| {})
}

/// [`jcomm_tucker_outer_step`] returning a copy of the iterate after every
/// inner block update.
pub fn jcomm_tucker_outer_step_traced(
    m: &mut TuckerModel,
    x: &DenseTensor,
    p: BetaParam,
    inner: usize,
    eps: f64,
) -> Result<Vec<(TuckerBlock, TuckerModel)>> {
    let mut iterates = Vec::new();
    jcomm_outer_step_observed(m, x, p, inner, eps, |g, b| iterates.push((b, g.clone())))?;
    Ok(iterates)
}

/// Joint MM for Tucker; extrapolation moves the reference point.
pub fn tucker_jcomm_fit(
    x: &DenseTensor,
    init: TuckerModel,
    cfg: &FitConfig,
) -> Result<(TuckerModel, Vec<TraceRecord>)> {
    init.check_data(x)?;
    let p = cfg.beta_param()?;
    let (eps, inner) = (cfg.eps, cfg.inner_steps);
    driver::run(x, init, cfg, |m, state| {
        if let Some(state) = state {
            driver::begin_extrapolation(m, state);
            for b in 0..m.block_count() {
                driver::extrapolate_block(m, b, state, eps);
            }
        }
        jcomm_tucker_outer_step(m, x, p, inner, eps)
    })
}
