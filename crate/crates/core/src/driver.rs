//! Shared outer loop for every fitting algorithm and the multiplicative step.

use std::time::{Duration, Instant};

use crate::config::{FitConfig, TraceRecord};
use crate::divergence::{mean_divergence, BetaParam};
use crate::error::{shape_err, Error, Result};
use crate::extrapolate::ExtrapolationState;
use crate::tensor::{powf, DenseTensor};

/// A model whose parameters split into flat blocks.
pub(crate) trait Params: Clone {
    fn reconstruct(&self) -> Result<DenseTensor>;
    fn block_count(&self) -> usize;
    fn block(&self, b: usize) -> &[f64];
    fn block_mut(&mut self, b: usize) -> &mut [f64];

    fn floor(&mut self, eps: f64) {
        for b in 0..self.block_count() {
            for v in self.block_mut(b) {
                *v = v.max(eps);
            }
        }
    }
}

/// `max(anchor ⊙ (num / max(den, ε))^γ, ε)`, written into `out`.
pub(crate) fn multiplicative_update(out: &mut [f64], anchor: &[f64], num: &[f64], den: &[f64], gamma: f64, eps: f64) {
    debug_assert!(anchor.len() == out.len() && num.len() == out.len() && den.len() == out.len());
    for (((o, &a), &n), &d) in out.iter_mut().zip(anchor).zip(num).zip(den) {
        let ratio = n / d.max(eps);
        *o = (a * powf(ratio, gamma)).max(eps);
    }
}

/// Starts an extrapolated outer iteration at the current blocks.
pub(crate) fn begin_extrapolation<M: Params>(model: &M, state: &mut ExtrapolationState) {
    let blocks: Vec<&[f64]> = (0..model.block_count()).map(|b| model.block(b)).collect();
    state.begin(&blocks);
}

/// Replaces block `b` by its extrapolated value.
pub(crate) fn extrapolate_block<M: Params>(model: &mut M, b: usize, state: &ExtrapolationState, eps: f64) {
    let hat = state.extrapolate(b, model.block(b), eps);
    model.block_mut(b).copy_from_slice(&hat);
}

/// Mean divergence of the model, rejecting NaN and infinite values.
pub(crate) fn checked_loss<M: Params>(x: &DenseTensor, model: &M, p: BetaParam) -> Result<f64> {
    let xhat = model.reconstruct()?;
    if xhat.shape() != x.shape() {
        return Err(shape_err!(
            "model shape {:?} does not match data shape {:?}",
            xhat.shape(),
            x.shape()
        ));
    }
    let loss = mean_divergence(x, &xhat, p)?;
    if loss.is_finite() {
        return Ok(loss);
    }
    if p.beta() == 0.0 && x.data().contains(&0.0) {
        return Err(Error::Numerical(
            "loss is +inf: the Itakura-Saito divergence (beta = 0) is infinite at zero data entries; \
             apply a small positive data floor (--data-floor)"
                .into(),
        ));
    }
    Err(Error::Numerical(format!("loss became {loss}")))
}

/// Runs `step` once per outer iteration and records the trace.
///
/// Iteration 0 holds the initial loss at time 0. Time accumulates only while
/// `step` runs.
pub(crate) fn run<M: Params>(
    x: &DenseTensor,
    mut model: M,
    cfg: &FitConfig,
    mut step: impl FnMut(&mut M, Option<&mut ExtrapolationState>) -> Result<()>,
) -> Result<(M, Vec<TraceRecord>)> {
    cfg.validate()?;
    let p = cfg.beta_param()?;
    model.floor(cfg.eps);
    let mut loss = checked_loss(x, &model, p)?;
    let mut trace = vec![TraceRecord {
        iter: 0,
        time_s: 0.0,
        loss,
    }];
    let mut extrapolation = cfg.extrapolate.map(ExtrapolationState::new);
    let mut elapsed = Duration::ZERO;
    for iter in 1..=cfg.max_iters {
        let start = Instant::now();
        step(&mut model, extrapolation.as_mut())?;
        elapsed += start.elapsed();
        let next = checked_loss(x, &model, p)?;
        trace.push(TraceRecord {
            iter,
            time_s: elapsed.as_secs_f64(),
            loss: next,
        });
        let change = (loss - next).abs() / (1.0 + next);
        loss = next;
        if change < cfg.tol {
            break;
        }
    }
    Ok((model, trace))
}
