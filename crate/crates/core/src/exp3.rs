//! EXP3: exponential weights with uniform mixing and importance-weighted
//! reward estimates. One instance drives each tuning layer.

use std::f64::consts::E;

use crate::error::{Error, Result};

/// Weights are rescaled to mean 1 once the largest exceeds this.
pub const OVERFLOW_GUARD: f64 = 1e100;

#[derive(Debug, Clone, PartialEq)]
pub struct Exp3State {
    weights: Vec<f64>,
    beta: f64,
    horizon: u64,
}

/// `min{1, √(n ln n / ((e − 1) T))}`.
pub fn mixing_rate(n: usize, horizon: u64) -> f64 {
    let n = n as f64;
    (n * n.ln() / ((E - 1.0) * horizon as f64)).sqrt().min(1.0)
}

impl Exp3State {
    pub fn new(n: usize, horizon: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArg(
                "EXP3 needs at least one candidate".into(),
            ));
        }
        if horizon == 0 {
            return Err(Error::InvalidArg("EXP3 horizon must be >= 1".into()));
        }
        Ok(Self {
            weights: vec![1.0; n],
            beta: mixing_rate(n, horizon),
            horizon,
        })
    }

    /// State with explicit weights and mixing rate.
    pub fn from_parts(weights: Vec<f64>, beta: f64, horizon: u64) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArg(
                "weights must be positive and finite".into(),
            ));
        }
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::InvalidArg(format!(
                "beta must be in [0, 1], got {beta}"
            )));
        }
        Ok(Self {
            weights,
            beta,
            horizon,
        })
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `p_j = β/n + (1 − β) w_j / Σ w`.
    pub fn probs(&self) -> Vec<f64> {
        let n = self.n() as f64;
        let total: f64 = self.weights.iter().sum();
        let floor = self.beta / n;
        self.weights
            .iter()
            .map(|w| floor + (1.0 - self.beta) * w / total)
            .collect()
    }

    /// Inverse-CDF draw in index order for `u ∈ [0, 1)`.
    pub fn sample(&self, u: f64) -> usize {
        sample_index(&self.probs(), u)
    }

    /// Importance-weighted update of the chosen index with `reward ∈ [0, 1]`.
    pub fn update(&mut self, chosen: usize, reward: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&reward) {
            return Err(Error::InvalidArg(format!(
                "EXP3 reward must be in [0, 1], got {reward}"
            )));
        }
        if chosen >= self.n() {
            return Err(Error::InvalidArg(format!(
                "candidate index {chosen} out of range for {} candidates",
                self.n()
            )));
        }
        if reward == 0.0 {
            return Ok(());
        }
        let p = self.probs()[chosen];
        let estimate = reward / p;
        self.weights[chosen] *= (self.beta / self.n() as f64 * estimate).exp();
        let max = self.weights.iter().cloned().fold(0.0, f64::max);
        if max > OVERFLOW_GUARD {
            let mean = self.weights.iter().sum::<f64>() / self.n() as f64;
            self.weights.iter_mut().for_each(|w| *w /= mean);
            // tiny weights may underflow after the rescale
            self.weights
                .iter_mut()
                .for_each(|w| *w = w.max(f64::MIN_POSITIVE));
        }
        Ok(())
    }
}

/// Walks the cumulative distribution of `probs` and returns the first index
/// whose cumulative mass exceeds `u`.
pub fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (j, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return j;
        }
    }
    probs.len() - 1
}
