//! Inertial extrapolation of parameter blocks between outer iterations.

use crate::config::ExtrapolationConfig;

/// `max(current + α [current − previous]₊, ε)`, entrywise.
pub fn extrapolate_block(current: &[f64], previous: &[f64], alpha: f64, eps: f64) -> Vec<f64> {
    current
        .iter()
        .zip(previous)
        .map(|(&c, &p)| (c + alpha * (c - p).max(0.0)).max(eps))
        .collect()
}

/// Step-size bookkeeping shared by all blocks of one fit.
///
/// Call [`begin`](Self::begin) with the iterate at the start of each outer
/// iteration, then [`extrapolate`](Self::extrapolate) each block before it is
/// updated. The displacement is taken between the starts of two successive
/// outer iterations, and one scalar step serves every block.
#[derive(Debug, Clone)]
pub struct ExtrapolationState {
    cfg: ExtrapolationConfig,
    nesterov_t: f64,
    alpha: f64,
    /// Start of the previous outer iteration.
    previous: Option<Vec<Vec<f64>>>,
    /// Start of the current outer iteration's predecessor, used for Δ.
    anchor: Option<Vec<Vec<f64>>>,
}

impl ExtrapolationState {
    pub fn new(cfg: ExtrapolationConfig) -> Self {
        Self {
            cfg,
            nesterov_t: 1.0,
            alpha: 0.0,
            previous: None,
            anchor: None,
        }
    }

    pub fn config(&self) -> &ExtrapolationConfig {
        &self.cfg
    }

    /// Step used by the current outer iteration.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Overrides the step for all later iterations (`None` restores the
    /// adaptive rule).
    pub fn set_fixed_alpha(&mut self, alpha: Option<f64>) {
        self.cfg.fixed_alpha = alpha;
    }

    /// Records the start of an outer iteration and computes its step
    /// `α = min(α^Nes, c / (‖[Δ]₊‖_F + δ))`.
    pub fn begin(&mut self, current: &[&[f64]]) -> f64 {
        let t_next = (1.0 + (1.0 + 4.0 * self.nesterov_t * self.nesterov_t).sqrt()) / 2.0;
        let nesterov = (self.nesterov_t - 1.0) / t_next;
        self.nesterov_t = t_next;

        let norm = match &self.previous {
            Some(prev) => prev
                .iter()
                .zip(current)
                .flat_map(|(p, c)| p.iter().zip(c.iter()))
                .map(|(&p, &c)| (c - p).max(0.0).powi(2))
                .sum::<f64>()
                .sqrt(),
            None => 0.0,
        };
        self.alpha = match self.cfg.fixed_alpha {
            Some(a) => a,
            None => nesterov.min(self.cfg.c / (norm + self.cfg.delta)),
        };
        self.anchor = self.previous.take();
        self.previous = Some(current.iter().map(|b| b.to_vec()).collect());
        self.alpha
    }

    /// Extrapolated version of block `b`, whose value must still be the one
    /// passed to [`begin`](Self::begin).
    pub fn extrapolate(&self, b: usize, current: &[f64], eps: f64) -> Vec<f64> {
        match &self.anchor {
            Some(prev) => extrapolate_block(current, &prev[b], self.alpha, eps),
            None => current.iter().map(|&v| v.max(eps)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_examples() {
        assert_eq!(extrapolate_block(&[2.0], &[1.0], 0.5, 1e-12), vec![2.5]);
        assert_eq!(extrapolate_block(&[1.0], &[2.0], 0.5, 1e-12), vec![1.0]);
        assert_eq!(extrapolate_block(&[3.0], &[3.0], 0.9, 1e-12), vec![3.0]);
    }

    #[test]
    fn first_iteration_is_unchanged() {
        let mut s = ExtrapolationState::new(ExtrapolationConfig::default());
        let a = [0.5, 2.0];
        assert_eq!(s.begin(&[&a]), 0.0);
        assert_eq!(s.extrapolate(0, &a, 1e-12), a.to_vec());
    }

    #[test]
    fn step_follows_nesterov_and_cap() {
        let mut s = ExtrapolationState::new(ExtrapolationConfig::default());
        s.begin(&[&[1.0]]);
        // t₁ = (1+√5)/2, t₂ = (1+√(1+4t₁²))/2
        let t1 = (1.0 + 5f64.sqrt()) / 2.0;
        let t2 = (1.0 + (1.0 + 4.0 * t1 * t1).sqrt()) / 2.0;
        let alpha = s.begin(&[&[1.1]]);
        assert!((alpha - (t1 - 1.0) / t2).abs() < 1e-15);
        assert!((s.extrapolate(0, &[1.1], 1e-12)[0] - (1.1 + alpha * 0.1)).abs() < 1e-15);
        // A large displacement is capped by c / (‖Δ‖ + δ).
        let alpha = s.begin(&[&[101.1]]);
        assert!((alpha - 1.0 / (100.0 + 1e-6)).abs() < 1e-12);
    }

    #[test]
    fn fixed_zero_step_is_identity() {
        let cfg = ExtrapolationConfig {
            fixed_alpha: Some(0.0),
            ..Default::default()
        };
        let mut s = ExtrapolationState::new(cfg);
        s.begin(&[&[1.0, 2.0]]);
        s.begin(&[&[3.0, 1.0]]);
        assert_eq!(s.extrapolate(0, &[3.0, 1.0], 1e-12), vec![3.0, 1.0]);
    }
}
