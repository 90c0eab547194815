//! Nonnegative CP decomposition: block MM (one block at a time, fresh
//! weights for every block) and joint MM (weights cached at a reference
//! point, several cheap inner sweeps).

use ndarray::Array2;

use crate::config::{FitConfig, TraceRecord};
use crate::contract::{self, cp_contract, cp_contract_ones};
use crate::divergence::{chi_transform, BetaParam, Chi, PoweredWeights};
use crate::driver::{self, multiplicative_update, Params};
use crate::error::{shape_err, Error, Result};
use crate::extrapolate::ExtrapolationState;
use crate::tensor::{standard, Block, DenseTensor};

/// Factor matrices `A⁽ⁿ⁾` (`Iₙ × R`) of a CP model, `N ≥ 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct CpFactors {
    factors: Vec<Array2<f64>>,
}

impl CpFactors {
    /// Requires at least two factors, a shared column count and finite,
    /// nonnegative entries.
    pub fn new(factors: Vec<Array2<f64>>) -> Result<Self> {
        if factors.len() < 2 {
            return Err(shape_err!(
                "a CP model needs at least two factor matrices, got {}",
                factors.len()
            ));
        }
        let rank = factors[0].ncols();
        if rank == 0 {
            return Err(shape_err!("CP rank must be at least 1"));
        }
        for (n, f) in factors.iter().enumerate() {
            if f.ncols() != rank {
                return Err(shape_err!("factor {n} has {} columns, expected rank {rank}", f.ncols()));
            }
            if f.nrows() == 0 {
                return Err(shape_err!("factor {n} has no rows"));
            }
            if let Some(v) = f.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
                return Err(Error::Domain(format!("factor {n} has invalid entry {v}")));
            }
        }
        Ok(Self {
            factors: factors.iter().map(standard).collect(),
        })
    }

    pub fn factors(&self) -> &[Array2<f64>] {
        &self.factors
    }

    pub fn factor(&self, n: usize) -> &Array2<f64> {
        &self.factors[n]
    }

    pub fn into_factors(self) -> Vec<Array2<f64>> {
        self.factors
    }

    pub fn rank(&self) -> usize {
        self.factors[0].ncols()
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    /// Data shape `(I₁, …, I_N)`.
    pub fn shape(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.nrows()).collect()
    }

    pub fn reconstruct(&self) -> DenseTensor {
        contract::cp_reconstruct(&self.factors).expect("validated factors")
    }

    /// Off-mode factors in increasing mode order.
    fn others(&self, n: usize) -> Vec<&Array2<f64>> {
        self.factors
            .iter()
            .enumerate()
            .filter(|&(m, _)| m != n)
            .map(|(_, f)| f)
            .collect()
    }

    fn check_data(&self, x: &DenseTensor) -> Result<()> {
        if self.shape() != x.shape() {
            return Err(shape_err!(
                "CP model shape {:?} does not match data shape {:?}",
                self.shape(),
                x.shape()
            ));
        }
        Ok(())
    }
}

impl Params for CpFactors {
    fn reconstruct(&self) -> Result<DenseTensor> {
        Ok(CpFactors::reconstruct(self))
    }

    fn block_count(&self) -> usize {
        self.factors.len()
    }

    fn block(&self, b: usize) -> &[f64] {
        self.factors[b].values()
    }

    fn block_mut(&mut self, b: usize) -> &mut [f64] {
        self.factors[b].values_mut()
    }
}

/// CP reconstruction `X̂ = Σ_r a⁽¹⁾_r ∘ ⋯ ∘ a⁽ᴺ⁾_r`.
pub fn cp_reconstruct(f: &CpFactors) -> DenseTensor {
    f.reconstruct()
}

/// Numerator and denominator of the block-MM update of mode `n`.
pub fn block_num_den(
    f: &CpFactors,
    n: usize,
    x: &DenseTensor,
    p: BetaParam,
    eps: f64,
) -> Result<(Array2<f64>, Array2<f64>)> {
    f.check_data(x)?;
    check_mode(f, n)?;
    let xhat = f.reconstruct();
    let w = PoweredWeights::new(x, &xhat, p, eps)?;
    let others = f.others(n);
    let num = cp_contract(&w.p, &others, n)?;
    let den = match &w.q {
        Some(q) => cp_contract(q, &others, n)?,
        None => cp_contract_ones(x.shape(), &others, n)?,
    };
    Ok((num, den))
}

/// Block-MM update of factor `n`:
/// `A⁽ⁿ⁾ ← max(A⁽ⁿ⁾ ⊙ (Num / Den)^γ, ε)` with `Num`, `Den` contracted from
/// the weights `P`, `Q` at the current reconstruction.
pub fn bcomm_block_update(f: &mut CpFactors, n: usize, x: &DenseTensor, p: BetaParam, eps: f64) -> Result<()> {
    let (num, den) = block_num_den(f, n, x, p, eps)?;
    let anchor = f.factors[n].clone();
    multiplicative_update(
        f.factors[n].values_mut(),
        anchor.values(),
        standard(&num).values(),
        standard(&den).values(),
        p.gamma(),
        eps,
    );
    Ok(())
}

/// One block-MM sweep over modes `0..N`.
pub fn bcomm_sweep(f: &mut CpFactors, x: &DenseTensor, p: BetaParam, eps: f64) -> Result<()> {
    for n in 0..f.order() {
        bcomm_block_update(f, n, x, p, eps)?;
    }
    Ok(())
}

fn bcomm_sweep_extrapolated(
    f: &mut CpFactors,
    x: &DenseTensor,
    p: BetaParam,
    eps: f64,
    state: &mut ExtrapolationState,
) -> Result<()> {
    driver::begin_extrapolation(f, state);
    for n in 0..f.order() {
        driver::extrapolate_block(f, n, state, eps);
        bcomm_block_update(f, n, x, p, eps)?;
    }
    Ok(())
}

/// Block MM for CP. With `cfg.extrapolate` set, each block is extrapolated
/// before its update and the surrogate is built at the extrapolated point.
pub fn bcomm_fit(x: &DenseTensor, init: CpFactors, cfg: &FitConfig) -> Result<(CpFactors, Vec<TraceRecord>)> {
    init.check_data(x)?;
    let p = cfg.beta_param()?;
    let eps = cfg.eps;
    driver::run(x, init, cfg, |f, state| match state {
        Some(state) => bcomm_sweep_extrapolated(f, x, p, eps, state),
        None => bcomm_sweep(f, x, p, eps),
    })
}

/// Reference quantities of one joint-MM outer step.
struct JointReference {
    factors: CpFactors,
    weights: PoweredWeights,
    /// At β = 1 the numerator transforms equal the reference blocks, so the
    /// numerators are fixed for the whole outer step.
    cached_num: Option<Vec<Array2<f64>>>,
}

impl JointReference {
    fn new(reference: &CpFactors, x: &DenseTensor, p: BetaParam, eps: f64) -> Result<Self> {
        let xhat = reference.reconstruct();
        let weights = PoweredWeights::new(x, &xhat, p, eps)?;
        let cached_num = if p.unit_denominator_weights() {
            let nums = (0..reference.order())
                .map(|n| cp_contract(&weights.p, &reference.others(n), n))
                .collect::<Result<Vec<_>>>()?;
            Some(nums)
        } else {
            None
        };
        Ok(Self {
            factors: reference.clone(),
            weights,
            cached_num,
        })
    }

    fn transformed_others(&self, f: &CpFactors, n: usize, kind: Chi, p: BetaParam) -> Result<Vec<Array2<f64>>> {
        (0..f.order())
            .filter(|&m| m != n)
            .map(|m| {
                let z = f.factors[m].values();
                let zref = self.factors.factors[m].values();
                let v = chi_transform(kind, z, zref, p)?;
                Ok(Array2::from_shape_vec(f.factors[m].raw_dim(), v).expect("same shape"))
            })
            .collect()
    }

    fn num_den(&self, f: &CpFactors, n: usize, p: BetaParam) -> Result<(Array2<f64>, Array2<f64>)> {
        let shape = self.weights.p.shape();
        let num = match &self.cached_num {
            Some(nums) => nums[n].clone(),
            None => {
                let chi1 = self.transformed_others(f, n, Chi::First, p)?;
                cp_contract(&self.weights.p, &chi1.iter().collect::<Vec<_>>(), n)?
            }
        };
        let den = match &self.weights.q {
            Some(q) => {
                let chi2 = self.transformed_others(f, n, Chi::Second, p)?;
                cp_contract(q, &chi2.iter().collect::<Vec<_>>(), n)?
            }
            None => cp_contract_ones(shape, &f.others(n), n)?,
        };
        Ok((num, den))
    }

    fn update(&self, f: &mut CpFactors, n: usize, p: BetaParam, eps: f64) -> Result<()> {
        let (num, den) = self.num_den(f, n, p)?;
        multiplicative_update(
            f.factors[n].values_mut(),
            self.factors.factors[n].values(),
            standard(&num).values(),
            standard(&den).values(),
            p.gamma(),
            eps,
        );
        Ok(())
    }
}

/// Joint-MM numerator and denominator for mode `n` at the inner iterate `f`
/// with reference `reference`.
pub fn joint_num_den(
    f: &CpFactors,
    reference: &CpFactors,
    n: usize,
    x: &DenseTensor,
    p: BetaParam,
    eps: f64,
) -> Result<(Array2<f64>, Array2<f64>)> {
    f.check_data(x)?;
    reference.check_data(x)?;
    check_mode(f, n)?;
    if f.rank() != reference.rank() {
        return Err(shape_err!("rank {} vs reference rank {}", f.rank(), reference.rank()));
    }
    JointReference::new(reference, x, p, eps)?.num_den(f, n, p)
}

/// Calls `observe` after every inner block update with the mode just updated.
fn jcomm_outer_step_observed(
    f: &mut CpFactors,
    x: &DenseTensor,
    p: BetaParam,
    inner: usize,
    eps: f64,
    mut observe: impl FnMut(&CpFactors, usize),
) -> Result<()> {
    f.check_data(x)?;
    if inner < 1 {
        return Err(Error::Config("inner steps must be at least 1".into()));
    }
    let reference = JointReference::new(f, x, p, eps)?;
    for _ in 0..inner {
        for n in 0..f.order() {
            reference.update(f, n, p, eps)?;
            observe(f, n);
        }
    }
    Ok(())
}

/// One joint-MM outer step: fix the reference at `f`, build `P̃`, `Q̃` once,
/// then run `inner` sweeps of reference-anchored block updates
/// `A⁽ⁿ⁾ ← max(Ã⁽ⁿ⁾ ⊙ (Num_J / Den_J)^γ, ε)`.
pub fn jcomm_outer_step(f: &mut CpFactors, x: &DenseTensor, p: BetaParam, inner: usize, eps: f64) -> Result<()> {
    jcomm_outer_step_observed(f, x, p, inner, eps, |_, _| {})
}

/// [`jcomm_outer_step`] returning a copy of the iterate after every inner
/// block update, paired with the updated mode.
pub fn jcomm_outer_step_traced(
    f: &mut CpFactors,
    x: &DenseTensor,
    p: BetaParam,
    inner: usize,
    eps: f64,
) -> Result<Vec<(usize, CpFactors)>> {
    let mut iterates = Vec::new();
    jcomm_outer_step_observed(f, x, p, inner, eps, |g, n| iterates.push((n, g.clone())))?;
    Ok(iterates)
}

/// Joint MM for CP. With `cfg.extrapolate` set, the reference point of each
/// outer step is the extrapolated iterate.
pub fn jcomm_fit(x: &DenseTensor, init: CpFactors, cfg: &FitConfig) -> Result<(CpFactors, Vec<TraceRecord>)> {
    init.check_data(x)?;
    let p = cfg.beta_param()?;
    let (eps, inner) = (cfg.eps, cfg.inner_steps);
    driver::run(x, init, cfg, |f, state| {
        if let Some(state) = state {
            driver::begin_extrapolation(f, state);
            for n in 0..f.order() {
                driver::extrapolate_block(f, n, state, eps);
            }
        }
        jcomm_outer_step(f, x, p, inner, eps)
    })
}

fn check_mode(f: &CpFactors, n: usize) -> Result<()> {
    if n >= f.order() {
        return Err(shape_err!("mode {n} out of range for a model of order {}", f.order()));
    }
    Ok(())
}
