//! Experiment orchestration: build the environment, policy and tuner for a
//! `(config, repeat)` pair, run the online loop, and aggregate regret.
//!
//! A run is strictly sequential. Repeats are independent and may run on a
//! thread pool; every random draw comes from a named substream of
//! `(master_seed, repeat_index)` (see [`crate::seeding`]).

pub mod config;
pub mod io;

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;

use crate::envs::{self, EnvKind, Environment};
use crate::error::{Error, Result};
use crate::policies::{Policy, TheoryParams};
use crate::seeding;
use crate::tuner::{warmup_step, CandidateSet, Tuner, TunerMode, TunerStreams};

pub use config::{parse_config, EnvSpec, ExperimentConfig, TheorySpec};
pub use io::{read_traces, write_summary, write_trace, write_traces};

/// One round of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub t: u64,
    pub layer_indices: Vec<usize>,
    /// `None` during warm-up.
    pub alpha: Option<f64>,
    pub lambda: Option<f64>,
    pub arm: usize,
    pub raw_reward: f64,
    pub reward: f64,
    pub instant_regret: f64,
    pub cum_regret: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    pub run_id: u64,
    /// Candidate count per tuning layer.
    pub layer_sizes: Vec<usize>,
    pub records: Vec<TraceRecord>,
}

impl RegretTrace {
    pub fn final_regret(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.cum_regret)
    }

    pub fn cum_regret(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.cum_regret).collect()
    }
}

/// Replay data loaded once and shared across repeats.
#[derive(Debug, Clone, Default)]
struct ReplayData {
    items: Arc<Vec<Vec<f64>>>,
    users: Arc<Vec<Vec<f64>>>,
}

/// A validated configuration with any external data loaded.
#[derive(Debug, Clone)]
pub struct Experiment {
    cfg: ExperimentConfig,
    replay: Option<ReplayData>,
}

impl Experiment {
    pub fn new(cfg: ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let replay = match cfg.env.kind {
            EnvKind::MovielensLinear | EnvKind::MovielensLogistic => {
                let items = envs::als::read_features(cfg.env.items.as_ref().expect("validated"))?;
                let users = envs::als::read_features(cfg.env.users.as_ref().expect("validated"))?;
                Some(ReplayData {
                    items: Arc::new(items),
                    users: Arc::new(users),
                })
            }
            _ => None,
        };
        Ok(Self { cfg, replay })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    /// The environment for one repeat.
    pub fn environment(&self, repeat: u64) -> Result<Environment> {
        let seed = seeding::derive_u64(self.cfg.master_seed, repeat, seeding::ENV);
        let e = &self.cfg.env;
        match e.kind {
            EnvKind::LinearGaussian => envs::gen_linear_env(seed, e.d, e.k, e.sigma, e.features),
            EnvKind::LogisticBernoulli => envs::gen_logistic_env(seed, e.d, e.k, e.features),
            kind => {
                let data = self.replay.as_ref().expect("loaded in new");
                envs::movielens_env(&data.items, &data.users, seed, e.k, kind)
            }
        }
    }

    fn theory_params(&self, env: &Environment) -> Result<TheoryParams> {
        let sigma = self.cfg.theory.sigma.unwrap_or(match env.kind() {
            EnvKind::LogisticBernoulli | EnvKind::MovielensLogistic => 0.5,
            _ => env.noise_sigma(),
        });
        TheoryParams::new(
            sigma,
            self.cfg.theory.s,
            self.cfg.theory.delta,
            env.d(),
            self.cfg.lambda,
        )
    }

    fn tuned_sets(&self) -> Vec<CandidateSet> {
        self.cfg
            .tune
            .iter()
            .map(|n| self.cfg.candidate_set(n).expect("validated").clone())
            .collect()
    }

    /// Tuner for one repeat.
    pub fn tuner(&self, env: &Environment) -> Result<Tuner> {
        let cfg = &self.cfg;
        let constants = vec![
            ("alpha".to_string(), cfg.alpha),
            ("lambda".to_string(), cfg.lambda),
        ];
        let sets = self.tuned_sets();
        Ok(match cfg.tuner {
            TunerMode::TwoLayer => {
                Tuner::two_layer(sets[0].clone(), constants, cfg.horizon, cfg.warmup)?
            }
            TunerMode::Combined => Tuner::combined(sets, constants, cfg.horizon, cfg.warmup)?,
            TunerMode::Syndicated => Tuner::syndicated(sets, constants, cfg.horizon, cfg.warmup)?,
            TunerMode::Op => Tuner::op(sets[0].clone(), constants, cfg.warmup),
            TunerMode::Theoretical => {
                Tuner::theoretical(self.theory_params(env)?, constants, cfg.warmup)
            }
            TunerMode::Fixed => Tuner::fixed(constants, cfg.warmup),
        })
    }

    /// Runs repeat `repeat` to completion.
    pub fn run(&self, repeat: u64) -> Result<RegretTrace> {
        let cfg = &self.cfg;
        let seed = cfg.master_seed;
        let env = self.environment(repeat)?;
        let mut tuner = self.tuner(&env)?;
        let mut policy = Policy::new(
            cfg.algo,
            env.d(),
            seeding::stream(seed, repeat, seeding::POLICY),
        )?;
        let mut streams = TunerStreams {
            layers: (0..tuner.layers().len().max(1))
                .map(|l| seeding::stream(seed, repeat, &seeding::layer_name(l)))
                .collect(),
            baseline: seeding::stream(seed, repeat, seeding::BASELINE),
        };
        let mut context_rng = seeding::stream(seed, repeat, seeding::CONTEXT);
        let mut reward_rng = seeding::stream(seed, repeat, seeding::REWARD);
        let mut warmup_rng = seeding::stream(seed, repeat, seeding::WARMUP);

        let mut records = Vec::with_capacity(cfg.horizon as usize);
        let mut cum = 0.0;
        for t in 1..=cfg.horizon {
            let round = t as usize;
            let mut step = || -> Result<TraceRecord> {
                let ctx = env.context(round, &mut context_rng)?;
                let (arm, chosen) = if tuner.in_warmup(t) {
                    (warmup_step(ctx.k(), warmup_rng.random()), None)
                } else {
                    let chosen = tuner.choose(t, &mut streams)?;
                    let hp = chosen.hyper_params()?;
                    (policy.select(&ctx, &hp)?, Some(chosen))
                };
                let outcome = env.step(&ctx, arm, &mut reward_rng)?;
                policy.update(ctx.arm(arm), outcome.reward)?;
                tuner.update(t, outcome.reward, &mut streams)?;
                cum += outcome.instant_regret;
                Ok(TraceRecord {
                    t,
                    layer_indices: chosen
                        .as_ref()
                        .map(|c| c.layer_indices())
                        .unwrap_or_default(),
                    alpha: chosen.as_ref().and_then(|c| c.value("alpha")),
                    lambda: chosen.as_ref().and_then(|c| c.value("lambda")),
                    arm,
                    raw_reward: outcome.raw_reward,
                    reward: outcome.reward,
                    instant_regret: outcome.instant_regret,
                    cum_regret: cum,
                })
            };
            records.push(step().map_err(|e| e.at_round(round))?);
        }
        Ok(RegretTrace {
            run_id: repeat,
            layer_sizes: tuner.layer_sizes(),
            records,
        })
    }

    /// All configured repeats, in repeat order.
    pub fn run_all(&self, parallel: bool) -> Result<Vec<RegretTrace>> {
        let idx: Vec<u64> = (0..self.cfg.repeats as u64).collect();
        if parallel {
            idx.par_iter().map(|&r| self.run(r)).collect()
        } else {
            idx.iter().map(|&r| self.run(r)).collect()
        }
    }
}

/// Convenience wrapper: load, then run one repeat.
pub fn run_experiment(cfg: &ExperimentConfig, repeat: u64) -> Result<RegretTrace> {
    Experiment::new(cfg.clone())?.run(repeat)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub n_traces: usize,
    pub mean: Vec<f64>,
    /// Sample standard deviation (divisor n − 1; zero for a single trace).
    pub std: Vec<f64>,
    pub final_mean: f64,
    pub final_std: f64,
    /// Selection counts per layer and candidate, summed over traces.
    pub selections: Vec<Vec<u64>>,
}

impl Summary {
    /// Selection frequencies per layer, normalized to sum to one.
    pub fn selection_frequencies(&self) -> Vec<Vec<f64>> {
        self.selections
            .iter()
            .map(|layer| {
                let total: u64 = layer.iter().sum();
                layer
                    .iter()
                    .map(|c| {
                        if total == 0 {
                            0.0
                        } else {
                            *c as f64 / total as f64
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

pub fn aggregate(traces: &[RegretTrace]) -> Result<Summary> {
    let first = traces
        .first()
        .ok_or_else(|| Error::InvalidData("no traces to aggregate".into()))?;
    let len = first.records.len();
    if let Some(bad) = traces.iter().find(|t| t.records.len() != len) {
        return Err(Error::LengthMismatch {
            expected: len,
            found: bad.records.len(),
        });
    }
    let n = traces.len() as f64;
    let mut mean = vec![0.0; len];
    for tr in traces {
        for (m, r) in mean.iter_mut().zip(&tr.records) {
            *m += r.cum_regret / n;
        }
    }
    let mut std = vec![0.0; len];
    if traces.len() > 1 {
        for tr in traces {
            for ((s, r), m) in std.iter_mut().zip(&tr.records).zip(&mean) {
                *s += (r.cum_regret - m).powi(2);
            }
        }
        std.iter_mut().for_each(|s| *s = (*s / (n - 1.0)).sqrt());
    }

    let n_layers = traces
        .iter()
        .flat_map(|t| t.records.iter().map(|r| r.layer_indices.len()))
        .chain(traces.iter().map(|t| t.layer_sizes.len()))
        .max()
        .unwrap_or(0);
    let mut selections: Vec<Vec<u64>> = (0..n_layers)
        .map(|l| {
            let size = traces
                .iter()
                .filter_map(|t| t.layer_sizes.get(l))
                .max()
                .copied()
                .unwrap_or(0);
            vec![0; size]
        })
        .collect();
    for tr in traces {
        for r in &tr.records {
            for (l, &i) in r.layer_indices.iter().enumerate() {
                if selections[l].len() <= i {
                    selections[l].resize(i + 1, 0);
                }
                selections[l][i] += 1;
            }
        }
    }
    Ok(Summary {
        n_traces: traces.len(),
        final_mean: mean.last().copied().unwrap_or(0.0),
        final_std: std.last().copied().unwrap_or(0.0),
        mean,
        std,
        selections,
    })
}

/// One grid cell of a fixed-hyper-parameter sweep.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub alpha: f64,
    pub lambda: f64,
    pub summary: Summary,
}

/// Runs every `(alpha, lambda)` pair of the config's sweep grid with fixed
/// hyper-parameters. Cells share environment seeds.
pub fn sweep(cfg: &ExperimentConfig, parallel: bool) -> Result<Vec<SweepCell>> {
    let mut cells = Vec::new();
    for &lambda in &cfg.sweep_lambda {
        for &alpha in &cfg.sweep_alpha {
            let mut cell_cfg = cfg.clone();
            cell_cfg.tuner = TunerMode::Fixed;
            cell_cfg.alpha = alpha;
            cell_cfg.lambda = lambda;
            cell_cfg.tune.clear();
            let traces = Experiment::new(cell_cfg)?.run_all(parallel)?;
            cells.push(SweepCell {
                alpha,
                lambda,
                summary: aggregate(&traces)?,
            });
        }
    }
    Ok(cells)
}
