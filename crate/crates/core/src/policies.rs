//! Base contextual bandit algorithms: LinUCB, LinTS and UCB-GLM with a
//! logistic link. All three read their exploration rate and regularizer from
//! [`HyperParams`] at selection time, so a tuner can change them every round.
//!
//! Arm and candidate indices are 0-based throughout. Ties in every argmax go
//! to the lowest index.

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::numkit::{cholesky, dot, norm, Matrix, RidgeState};
use crate::seeding::Stream;

/// Slack allowed on `‖x‖ ≤ 1`.
pub const NORM_SLACK: f64 = 1e-9;

/// Newton settings for the penalized logistic fit.
pub const NEWTON_MAX_ITERS: usize = 100;
pub const NEWTON_GRAD_TOL: f64 = 1e-8;
pub const NEWTON_MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    LinUcb,
    LinTs,
    UcbGlm,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::LinUcb => "linucb",
            Algorithm::LinTs => "lints",
            Algorithm::UcbGlm => "ucb-glm",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linucb" => Ok(Algorithm::LinUcb),
            "lints" => Ok(Algorithm::LinTs),
            "ucb-glm" | "ucbglm" | "glm" => Ok(Algorithm::UcbGlm),
            other => Err(Error::config(
                "algo",
                format!("unknown algorithm `{other}`"),
            )),
        }
    }
}

/// The arms offered in one round.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextSet {
    round: usize,
    features: Vec<Vec<f64>>,
}

impl ContextSet {
    pub fn new(round: usize, features: Vec<Vec<f64>>) -> Result<Self> {
        let d = match features.first() {
            Some(f) => f.len(),
            None => return Err(Error::InvalidArg("context needs at least one arm".into())),
        };
        for (a, x) in features.iter().enumerate() {
            if x.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: x.len(),
                });
            }
            if norm(x) > 1.0 + NORM_SLACK {
                return Err(Error::InvalidArg(format!(
                    "arm {a} has norm {} > 1",
                    norm(x)
                )));
            }
        }
        Ok(Self { round, features })
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn k(&self) -> usize {
        self.features.len()
    }

    pub fn dim(&self) -> usize {
        self.features[0].len()
    }

    pub fn arm(&self, a: usize) -> &[f64] {
        &self.features[a]
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }
}

/// Hyper-parameters handed to a policy for one selection.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperParams {
    pub alpha: f64,
    pub lambda: f64,
    /// Additional named values for policies with more knobs.
    pub extras: Vec<(String, f64)>,
}

impl HyperParams {
    pub fn new(alpha: f64, lambda: f64) -> Result<Self> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidArg(format!(
                "alpha must be >= 0, got {alpha}"
            )));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidArg(format!(
                "lambda must be > 0, got {lambda}"
            )));
        }
        Ok(Self {
            alpha,
            lambda,
            extras: Vec::new(),
        })
    }

    pub fn extra(&self, name: &str) -> Option<f64> {
        self.extras.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

/// Inputs of the confidence-radius formula
/// `α(t) = σ √(d ln((1 + t/λ)/δ)) + S √λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryParams {
    pub sigma: f64,
    pub s: f64,
    pub delta: f64,
    pub d: usize,
    pub lambda: f64,
}

impl TheoryParams {
    pub fn new(sigma: f64, s: f64, delta: f64, d: usize, lambda: f64) -> Result<Self> {
        if !(sigma >= 0.0) || !(s >= 0.0) {
            return Err(Error::InvalidArg("sigma and S must be non-negative".into()));
        }
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::InvalidArg(format!(
                "delta must be in (0, 1], got {delta}"
            )));
        }
        if !(lambda > 0.0) || d == 0 {
            return Err(Error::InvalidArg("lambda must be > 0 and d >= 1".into()));
        }
        Ok(Self {
            sigma,
            s,
            delta,
            d,
            lambda,
        })
    }
}

/// Value of the confidence radius after `t` observations, and whether the
/// log argument had to be clamped at 1.
pub fn theoretical_alpha_checked(p: &TheoryParams, t: u64) -> (f64, bool) {
    let arg = (1.0 + t as f64 / p.lambda) / p.delta;
    let clamped = arg < 1.0;
    let log_term = arg.max(1.0).ln();
    let alpha = p.sigma * (p.d as f64 * log_term).sqrt() + p.s * p.lambda.sqrt();
    (alpha, clamped)
}

pub fn theoretical_alpha(p: &TheoryParams, t: u64) -> f64 {
    theoretical_alpha_checked(p, t).0
}

fn argmax(scores: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (a, s) in scores.enumerate() {
        if s > best_score {
            best = a;
            best_score = s;
        }
    }
    best
}

/// `x_aᵀθ + α ‖x_a‖_{V⁻¹}` for every arm.
pub fn ucb_scores(theta: &[f64], v_inv: &Matrix, ctx: &ContextSet, alpha: f64) -> Result<Vec<f64>> {
    if theta.len() != ctx.dim() {
        return Err(Error::DimensionMismatch {
            expected: theta.len(),
            found: ctx.dim(),
        });
    }
    ctx.features()
        .iter()
        .map(|x| {
            let mean = dot(x, theta);
            if alpha == 0.0 {
                Ok(mean)
            } else {
                crate::numkit::mahalanobis(x, v_inv).map(|w| mean + alpha * w)
            }
        })
        .collect()
}

/// Optimistic selection shared by LinUCB and UCB-GLM.
pub fn ucb_select(theta: &[f64], v_inv: &Matrix, ctx: &ContextSet, alpha: f64) -> Result<usize> {
    Ok(argmax(ucb_scores(theta, v_inv, ctx, alpha)?.into_iter()))
}

pub fn greedy_select(theta: &[f64], ctx: &ContextSet) -> usize {
    argmax(ctx.features().iter().map(|x| dot(x, theta)))
}

/// Thompson selection with an explicit standard-normal vector `z`:
/// `θ_TS = θ̂ + α L z` with `L Lᵀ = V⁻¹`.
pub fn ts_select_with(
    theta: &[f64],
    v_inv: &Matrix,
    ctx: &ContextSet,
    alpha: f64,
    z: &[f64],
) -> Result<usize> {
    let d = theta.len();
    if z.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: z.len(),
        });
    }
    let l = cholesky(v_inv)?;
    let lz = l.mat_vec(z);
    let sample: Vec<f64> = theta.iter().zip(&lz).map(|(t, e)| t + alpha * e).collect();
    Ok(greedy_select(&sample, ctx))
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `(λ/2)‖θ‖² + Σ [log(1 + exp(xᵀθ)) − y xᵀθ]`.
pub fn logistic_objective(history: &[(Vec<f64>, f64)], lambda: f64, theta: &[f64]) -> f64 {
    let penalty = 0.5 * lambda * dot(theta, theta);
    penalty
        + history
            .iter()
            .map(|(x, y)| {
                let z = dot(x, theta);
                softplus(z) - y * z
            })
            .sum::<f64>()
}

fn logistic_grad_hess(
    history: &[(Vec<f64>, f64)],
    lambda: f64,
    theta: &[f64],
) -> (Vec<f64>, Matrix) {
    let d = theta.len();
    let mut grad: Vec<f64> = theta.iter().map(|t| lambda * t).collect();
    let mut hess = Matrix::scaled_identity(d, lambda);
    for (x, y) in history {
        let p = sigmoid(dot(x, theta));
        let r = p - y;
        for (g, xi) in grad.iter_mut().zip(x) {
            *g += r * xi;
        }
        hess.add_outer(x, p * (1.0 - p));
    }
    (grad, hess)
}

/// Ridge-penalized logistic maximum likelihood by damped Newton steps.
///
/// Starts from `start` (or zero) and stops once the gradient norm is at most
/// [`NEWTON_GRAD_TOL`].
pub fn logistic_fit(
    history: &[(Vec<f64>, f64)],
    dim: usize,
    lambda: f64,
    start: Option<&[f64]>,
) -> Result<Vec<f64>> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArg(format!(
            "lambda must be > 0, got {lambda}"
        )));
    }
    if history.is_empty() {
        return Ok(vec![0.0; dim]);
    }
    let mut theta = match start {
        Some(s) if s.len() == dim => s.to_vec(),
        _ => vec![0.0; dim],
    };
    let mut f = logistic_objective(history, lambda, &theta);
    for _ in 0..NEWTON_MAX_ITERS {
        let (grad, hess) = logistic_grad_hess(history, lambda, &theta);
        if norm(&grad) <= NEWTON_GRAD_TOL {
            return Ok(theta);
        }
        let step = crate::numkit::solve_spd(&hess, &grad)?;
        let mut scale = 1.0;
        let mut candidate: Vec<f64> = theta.iter().zip(&step).map(|(t, s)| t - s).collect();
        let mut f_new = logistic_objective(history, lambda, &candidate);
        // round-off slack so a converged step is not rejected
        let slack = 1e-12 * (1.0 + f.abs());
        let mut halvings = 0;
        while f_new > f + slack && halvings < NEWTON_MAX_HALVINGS {
            scale *= 0.5;
            candidate = theta
                .iter()
                .zip(&step)
                .map(|(t, s)| t - scale * s)
                .collect();
            f_new = logistic_objective(history, lambda, &candidate);
            halvings += 1;
        }
        theta = candidate;
        f = f_new;
    }
    let (grad, _) = logistic_grad_hess(history, lambda, &theta);
    let grad_norm = norm(&grad);
    if grad_norm <= NEWTON_GRAD_TOL {
        Ok(theta)
    } else {
        Err(Error::NoConvergence {
            iterations: NEWTON_MAX_ITERS,
            grad_norm,
        })
    }
}

/// A base algorithm plus everything it has learned.
///
/// The Gram matrix `Σ x xᵀ` and `Σ y x` are kept once; a [`RidgeState`] is
/// materialized per distinct λ the first time it is requested and then kept
/// current on every update.
#[derive(Debug, Clone)]
pub struct Policy {
    algorithm: Algorithm,
    dim: usize,
    gram: Matrix,
    xy: Vec<f64>,
    count: u64,
    ridges: Vec<RidgeState>,
    history: Vec<(Vec<f64>, f64)>,
    glm_estimates: Vec<(u64, Vec<f64>)>,
    rng: Stream,
}

impl Policy {
    pub fn new(algorithm: Algorithm, dim: usize, rng: Stream) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArg("policy dimension must be >= 1".into()));
        }
        Ok(Self {
            algorithm,
            dim,
            gram: Matrix::zeros(dim, dim),
            xy: vec![0.0; dim],
            count: 0,
            ridges: Vec::new(),
            history: Vec::new(),
            glm_estimates: Vec::new(),
            rng,
        })
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn history(&self) -> &[(Vec<f64>, f64)] {
        &self.history
    }

    /// Ridge state for `lambda`, created from the accumulated statistics if new.
    pub fn ridge(&mut self, lambda: f64) -> Result<&RidgeState> {
        let idx = self.ridge_index(lambda)?;
        Ok(&self.ridges[idx])
    }

    fn ridge_index(&mut self, lambda: f64) -> Result<usize> {
        if let Some(i) = self.ridges.iter().position(|r| r.lambda() == lambda) {
            return Ok(i);
        }
        let state = if self.count == 0 {
            RidgeState::new(self.dim, lambda)?
        } else {
            RidgeState::from_statistics(lambda, &self.gram, &self.xy, self.count)?
        };
        self.ridges.push(state);
        Ok(self.ridges.len() - 1)
    }

    /// Current estimate for the given regularizer.
    pub fn estimate(&mut self, lambda: f64) -> Result<Vec<f64>> {
        match self.algorithm {
            Algorithm::UcbGlm => self.glm_fit(lambda),
            _ => Ok(self.ridge(lambda)?.theta_hat().to_vec()),
        }
    }

    fn glm_fit(&mut self, lambda: f64) -> Result<Vec<f64>> {
        let key = lambda.to_bits();
        let slot = self.glm_estimates.iter().position(|(k, _)| *k == key);
        let previous = slot.map(|i| self.glm_estimates[i].1.clone());
        let theta = match logistic_fit(&self.history, self.dim, lambda, previous.as_deref()) {
            Ok(theta) => theta,
            Err(Error::NoConvergence { .. }) => previous.unwrap_or_else(|| vec![0.0; self.dim]),
            Err(e) => return Err(e),
        };
        match slot {
            Some(i) => self.glm_estimates[i].1 = theta.clone(),
            None => self.glm_estimates.push((key, theta.clone())),
        }
        Ok(theta)
    }

    pub fn select(&mut self, ctx: &ContextSet, hp: &HyperParams) -> Result<usize> {
        if ctx.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: ctx.dim(),
            });
        }
        let theta = self.estimate(hp.lambda)?;
        let idx = self.ridge_index(hp.lambda)?;
        match self.algorithm {
            Algorithm::LinUcb | Algorithm::UcbGlm => {
                ucb_select(&theta, self.ridges[idx].v_inv(), ctx, hp.alpha)
            }
            Algorithm::LinTs => {
                let z: Vec<f64> = (0..self.dim)
                    .map(|_| StandardNormal.sample(&mut self.rng))
                    .collect();
                ts_select_with(&theta, self.ridges[idx].v_inv(), ctx, hp.alpha, &z)
            }
        }
    }

    /// Records an observation; `y` is expected in `[0, 1]`.
    pub fn update(&mut self, x: &[f64], y: f64) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        self.gram.add_outer(x, 1.0);
        for (b, xi) in self.xy.iter_mut().zip(x) {
            *b += y * xi;
        }
        self.count += 1;
        for r in &mut self.ridges {
            r.update(x, y)?;
        }
        if self.algorithm == Algorithm::UcbGlm {
            self.history.push((x.to_vec(), y));
        }
        Ok(())
    }
}
