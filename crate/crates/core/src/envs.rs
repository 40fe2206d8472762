//! Ground-truth environments and per-round regret accounting.
//!
//! Synthetic linear environments use `θ*, x ~ Uniform(−1/√d, 1/√d)^d` with
//! the mean reward mapped into `[0, 1]` by `μ ← (xᵀθ* + 1)/2` and Gaussian
//! noise. Logistic environments draw `x ~ Uniform(−1, 1)^d` (shrunk into the
//! unit ball) and Bernoulli rewards with mean `σ(xᵀθ*)`. MovieLens-style
//! environments replay factorized item vectors.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::numkit::{dot, norm};
use crate::policies::{sigmoid, ContextSet};
use crate::seeding::Stream;

pub mod als;

pub use als::{als_factorize, als_factorize_traced, als_objective, Factorization, Rating};

/// Number of user vectors averaged into θ* for replay environments.
pub const MOVIELENS_USERS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvKind {
    LinearGaussian,
    LogisticBernoulli,
    MovielensLinear,
    MovielensLogistic,
}

impl EnvKind {
    pub fn is_linear(self) -> bool {
        matches!(self, EnvKind::LinearGaussian | EnvKind::MovielensLinear)
    }

    pub fn name(self) -> &'static str {
        match self {
            EnvKind::LinearGaussian => "linear",
            EnvKind::LogisticBernoulli => "logistic",
            EnvKind::MovielensLinear => "movielens-linear",
            EnvKind::MovielensLogistic => "movielens-logistic",
        }
    }
}

impl std::str::FromStr for EnvKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(EnvKind::LinearGaussian),
            "logistic" => Ok(EnvKind::LogisticBernoulli),
            "movielens-linear" => Ok(EnvKind::MovielensLinear),
            "movielens-logistic" => Ok(EnvKind::MovielensLogistic),
            other => Err(Error::config(
                "env.kind",
                format!("unknown environment `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureMode {
    /// Same K feature vectors every round.
    Fixed,
    /// All K vectors redrawn from the same law each round.
    Changing,
}

impl std::str::FromStr for FeatureMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fixed" => Ok(FeatureMode::Fixed),
            "changing" => Ok(FeatureMode::Changing),
            other => Err(Error::config(
                "env.features",
                format!("unknown feature mode `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Environment {
    kind: EnvKind,
    d: usize,
    k: usize,
    theta_star: Vec<f64>,
    noise_sigma: f64,
    feature_mode: FeatureMode,
    fixed_features: Option<Vec<Vec<f64>>>,
    feature_pool: Option<Vec<Vec<f64>>>,
    /// Linear scores are divided by this before the `(s + 1)/2` map.
    score_scale: f64,
}

/// What happened in one round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundOutcome {
    pub pulled: usize,
    pub raw_reward: f64,
    /// `raw_reward` clipped to `[0, 1]`; the value learners see.
    pub reward: f64,
    pub instant_regret: f64,
    pub optimal_mean: f64,
}

fn uniform_vec(rng: &mut impl Rng, d: usize, half_width: f64) -> Vec<f64> {
    (0..d)
        .map(|_| rng.random_range(-half_width..half_width))
        .collect()
}

/// Scales `x` down to the unit ball when its norm exceeds 1.
pub fn shrink_to_unit_ball(x: &mut [f64]) {
    let n = norm(x);
    if n > 1.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
}

fn logistic_features(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    let mut x = uniform_vec(rng, d, 1.0);
    shrink_to_unit_ball(&mut x);
    x
}

/// Synthetic linear environment with Gaussian noise of standard deviation `sigma`.
pub fn gen_linear_env(
    seed: u64,
    d: usize,
    k: usize,
    sigma: f64,
    mode: FeatureMode,
) -> Result<Environment> {
    check_dims(d, k)?;
    let mut rng = Stream::seed_from_u64(seed);
    let h = 1.0 / (d as f64).sqrt();
    let theta_star = uniform_vec(&mut rng, d, h);
    let fixed = match mode {
        FeatureMode::Fixed => Some((0..k).map(|_| uniform_vec(&mut rng, d, h)).collect()),
        FeatureMode::Changing => None,
    };
    Environment::new(EnvKind::LinearGaussian, theta_star, sigma, k, mode, fixed)
}

/// Synthetic logistic environment with Bernoulli rewards.
pub fn gen_logistic_env(seed: u64, d: usize, k: usize, mode: FeatureMode) -> Result<Environment> {
    check_dims(d, k)?;
    let mut rng = Stream::seed_from_u64(seed);
    let h = 1.0 / (d as f64).sqrt();
    let theta_star = uniform_vec(&mut rng, d, h);
    let fixed = match mode {
        FeatureMode::Fixed => Some((0..k).map(|_| logistic_features(&mut rng, d)).collect()),
        FeatureMode::Changing => None,
    };
    Environment::new(EnvKind::LogisticBernoulli, theta_star, 0.0, k, mode, fixed)
}

/// Replay environment over factorized item vectors. θ* is the mean of 100
/// distinct randomly chosen user vectors; each round offers `k` distinct items.
pub fn movielens_env(
    item_features: &[Vec<f64>],
    user_features: &[Vec<f64>],
    seed: u64,
    k: usize,
    kind: EnvKind,
) -> Result<Environment> {
    if !matches!(kind, EnvKind::MovielensLinear | EnvKind::MovielensLogistic) {
        return Err(Error::InvalidArg(
            "movielens_env needs a movielens kind".into(),
        ));
    }
    if user_features.len() < MOVIELENS_USERS {
        return Err(Error::InvalidData(format!(
            "need at least {MOVIELENS_USERS} users, found {}",
            user_features.len()
        )));
    }
    if k == 0 || k > item_features.len() {
        return Err(Error::InvalidData(format!(
            "cannot offer {k} arms from {} items",
            item_features.len()
        )));
    }
    let d = item_features[0].len();
    if d == 0
        || item_features.iter().any(|v| v.len() != d)
        || user_features.iter().any(|u| u.len() != d)
    {
        return Err(Error::InvalidData(
            "feature vectors have inconsistent dimensions".into(),
        ));
    }
    let mut rng = Stream::seed_from_u64(seed);
    let chosen = index::sample(&mut rng, user_features.len(), MOVIELENS_USERS);
    let mut theta_star = vec![0.0; d];
    for u in chosen.iter() {
        for (t, v) in theta_star.iter_mut().zip(&user_features[u]) {
            *t += v / MOVIELENS_USERS as f64;
        }
    }
    let pool: Vec<Vec<f64>> = item_features
        .iter()
        .map(|v| {
            let mut x = v.clone();
            shrink_to_unit_ball(&mut x);
            x
        })
        .collect();
    let noise = if kind == EnvKind::MovielensLinear {
        1.0
    } else {
        0.0
    };
    let mut env = Environment::new(kind, theta_star, noise, k, FeatureMode::Changing, None)?;
    env.score_scale = norm(&env.theta_star).max(1.0);
    env.feature_pool = Some(pool);
    Ok(env)
}

fn check_dims(d: usize, k: usize) -> Result<()> {
    if d == 0 || k == 0 {
        return Err(Error::InvalidArg("d and K must be >= 1".into()));
    }
    Ok(())
}

impl Environment {
    /// Environment with explicit parameters. `fixed_features` is required
    /// for [`FeatureMode::Fixed`] with synthetic kinds.
    pub fn new(
        kind: EnvKind,
        theta_star: Vec<f64>,
        noise_sigma: f64,
        k: usize,
        feature_mode: FeatureMode,
        fixed_features: Option<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        let d = theta_star.len();
        check_dims(d, k)?;
        if !(noise_sigma >= 0.0) {
            return Err(Error::InvalidArg("noise sigma must be >= 0".into()));
        }
        if let Some(f) = &fixed_features {
            if f.len() != k || f.iter().any(|x| x.len() != d) {
                return Err(Error::InvalidArg(
                    "fixed features must be K vectors of length d".into(),
                ));
            }
        } else if feature_mode == FeatureMode::Fixed {
            return Err(Error::InvalidArg(
                "fixed feature mode needs fixed features".into(),
            ));
        }
        Ok(Self {
            kind,
            d,
            k,
            theta_star,
            noise_sigma,
            feature_mode,
            fixed_features,
            feature_pool: None,
            score_scale: 1.0,
        })
    }

    pub fn kind(&self) -> EnvKind {
        self.kind
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn theta_star(&self) -> &[f64] {
        &self.theta_star
    }

    pub fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }

    pub fn feature_mode(&self) -> FeatureMode {
        self.feature_mode
    }

    /// `‖θ*‖`, the norm bound that enters the confidence radius.
    pub fn s_diagnostic(&self) -> f64 {
        norm(&self.theta_star)
    }

    pub fn feature_pool(&self) -> Option<&[Vec<f64>]> {
        self.feature_pool.as_deref()
    }

    /// True mean reward of a feature vector.
    pub fn mean(&self, x: &[f64]) -> f64 {
        let s = dot(x, &self.theta_star);
        if self.kind.is_linear() {
            (s / self.score_scale + 1.0) / 2.0
        } else {
            sigmoid(s)
        }
    }

    /// The arms offered at `round`.
    pub fn context(&self, round: usize, rng: &mut impl Rng) -> Result<ContextSet> {
        let features = if let Some(pool) = &self.feature_pool {
            index::sample(rng, pool.len(), self.k)
                .iter()
                .map(|i| pool[i].clone())
                .collect()
        } else if let Some(f) = &self.fixed_features {
            f.clone()
        } else {
            let h = 1.0 / (self.d as f64).sqrt();
            (0..self.k)
                .map(|_| match self.kind {
                    EnvKind::LogisticBernoulli => logistic_features(rng, self.d),
                    _ => uniform_vec(rng, self.d, h),
                })
                .collect()
        };
        ContextSet::new(round, features)
    }

    /// Samples the pulled arm's reward and books the round's regret.
    /// Consumes exactly one draw from `rng`.
    pub fn step(
        &self,
        ctx: &ContextSet,
        pulled: usize,
        rng: &mut impl Rng,
    ) -> Result<RoundOutcome> {
        if pulled >= ctx.k() {
            return Err(Error::InvalidArg(format!(
                "arm {pulled} out of range for {} arms",
                ctx.k()
            )));
        }
        let means: Vec<f64> = ctx.features().iter().map(|x| self.mean(x)).collect();
        let optimal_mean = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mu = means[pulled];
        let raw_reward = match self.kind {
            EnvKind::LinearGaussian | EnvKind::MovielensLinear => {
                let z: f64 = StandardNormal.sample(rng);
                mu + self.noise_sigma * z
            }
            EnvKind::LogisticBernoulli | EnvKind::MovielensLogistic => {
                let u: f64 = rng.random();
                if u < mu {
                    1.0
                } else {
                    0.0
                }
            }
        };
        Ok(RoundOutcome {
            pulled,
            raw_reward,
            reward: raw_reward.clamp(0.0, 1.0),
            instant_regret: optimal_mean - mu,
            optimal_mean,
        })
    }

    /// Smallest eigenvalue of `E[(1/K) Σ_a x_a x_aᵀ]` estimated from `rounds`
    /// context draws. Diagnostic only.
    pub fn min_feature_eigenvalue(&self, rounds: usize, rng: &mut impl Rng) -> Result<f64> {
        let mut m = crate::numkit::Matrix::zeros(self.d, self.d);
        let w = 1.0 / (rounds as f64 * self.k as f64);
        for t in 0..rounds {
            let ctx = self.context(t + 1, rng)?;
            for x in ctx.features() {
                m.add_outer(x, w);
            }
        }
        min_eigenvalue_spd(&m)
    }
}

/// Smallest eigenvalue of a symmetric positive-definite matrix by inverse
/// power iteration. Returns 0 if the matrix is not positive definite.
pub fn min_eigenvalue_spd(a: &crate::numkit::Matrix) -> Result<f64> {
    let l = match crate::numkit::cholesky(a) {
        Ok(l) => l,
        Err(Error::NotPositiveDefinite { .. }) => return Ok(0.0),
        Err(e) => return Err(e),
    };
    let n = a.rows();
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 * 0.1).collect();
    let mut est = 0.0;
    for _ in 0..500 {
        let w = crate::numkit::cholesky_solve(&l, &v);
        let wn = norm(&w);
        v = w.into_iter().map(|x| x / wn).collect();
        let next = a.quad_form(&v);
        if (next - est).abs() <= 1e-14 * next.abs().max(1e-300) {
            est = next;
            break;
        }
        est = next;
    }
    Ok(est)
}
