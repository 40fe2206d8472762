//! TOML experiment configuration.
//!
//! ```toml
//! algo = "linucb"          # linucb | lints | ucb-glm
//! tuner = "syndicated"     # tl | tl-combined | syndicated | theoretical | op | fixed
//! T = 10000
//! T1 = 0
//! repeats = 10
//! seed = 7
//! tune = ["alpha", "lambda"]
//! alpha = 1.0              # value when alpha is not tuned
//! lambda = 1.0             # value when lambda is not tuned
//! output = "out/syndicated"
//!
//! [env]
//! kind = "linear"          # linear | logistic | movielens-linear | movielens-logistic
//! d = 10
//! K = 100
//! sigma = 0.1
//! features = "changing"    # fixed | changing
//! # items = "prep/items.txt"; users = "prep/users.txt" for movielens kinds
//!
//! [candidates]
//! alpha = [0, 0.01, 0.1, 1, 10]
//! lambda = [0.01, 0.1, 1]
//!
//! [theory]
//! sigma = 0.5
//! S = 1
//! delta = 0.01
//!
//! [sweep]
//! alpha = [0, 0.5, 1]
//! lambda = [1]
//! ```

use std::path::PathBuf;

use toml::{Table, Value};

use crate::envs::{EnvKind, FeatureMode};
use crate::error::{Error, Result};
use crate::policies::Algorithm;
use crate::tuner::{CandidateSet, TunerMode};

pub const DEFAULT_ALPHA_SET: [f64; 5] = [0.0, 0.01, 0.1, 1.0, 10.0];
pub const DEFAULT_LAMBDA_SET: [f64; 3] = [0.01, 0.1, 1.0];

#[derive(Debug, Clone, PartialEq)]
pub struct EnvSpec {
    pub kind: EnvKind,
    pub d: usize,
    pub k: usize,
    pub sigma: f64,
    pub features: FeatureMode,
    pub items: Option<PathBuf>,
    pub users: Option<PathBuf>,
}

impl Default for EnvSpec {
    fn default() -> Self {
        Self {
            kind: EnvKind::LinearGaussian,
            d: 10,
            k: 100,
            sigma: 0.1,
            features: FeatureMode::Changing,
            items: None,
            users: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheorySpec {
    /// `None` means: use the environment's noise level (0.5 when unknown).
    pub sigma: Option<f64>,
    pub s: f64,
    pub delta: f64,
}

impl Default for TheorySpec {
    fn default() -> Self {
        Self {
            sigma: None,
            s: 1.0,
            delta: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvSpec,
    pub algo: Algorithm,
    pub tuner: TunerMode,
    pub candidates: Vec<CandidateSet>,
    /// Names of the candidate sets the tuner searches over.
    pub tune: Vec<String>,
    pub alpha: f64,
    pub lambda: f64,
    pub horizon: u64,
    pub warmup: u64,
    pub repeats: usize,
    pub master_seed: u64,
    pub theory: TheorySpec,
    pub output: Option<PathBuf>,
    pub sweep_alpha: Vec<f64>,
    pub sweep_lambda: Vec<f64>,
}

impl ExperimentConfig {
    /// Configuration with every default filled in.
    pub fn new(env: EnvSpec, algo: Algorithm, tuner: TunerMode) -> Self {
        let tune = match tuner {
            TunerMode::Combined | TunerMode::Syndicated => vec!["alpha".into(), "lambda".into()],
            _ => vec!["alpha".into()],
        };
        Self {
            env,
            algo,
            tuner,
            candidates: vec![
                CandidateSet::new("alpha", DEFAULT_ALPHA_SET.to_vec()).expect("valid default"),
                CandidateSet::new("lambda", DEFAULT_LAMBDA_SET.to_vec()).expect("valid default"),
            ],
            tune,
            alpha: 1.0,
            lambda: 1.0,
            horizon: 10_000,
            warmup: 0,
            repeats: 10,
            master_seed: 0,
            theory: TheorySpec::default(),
            output: None,
            sweep_alpha: DEFAULT_ALPHA_SET.to_vec(),
            sweep_lambda: vec![1.0],
        }
    }

    pub fn candidate_set(&self, name: &str) -> Option<&CandidateSet> {
        self.candidates.iter().find(|c| c.name() == name)
    }

    /// Replaces (or adds) a candidate set.
    pub fn set_candidates(&mut self, set: CandidateSet) {
        match self.candidates.iter_mut().find(|c| c.name() == set.name()) {
            Some(slot) => *slot = set,
            None => self.candidates.push(set),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::config("T", "must be >= 1"));
        }
        if self.repeats == 0 {
            return Err(Error::config("repeats", "must be >= 1"));
        }
        if self.env.d == 0 {
            return Err(Error::config("env.d", "must be >= 1"));
        }
        if self.env.k == 0 {
            return Err(Error::config("env.K", "must be >= 1"));
        }
        if !(self.env.sigma >= 0.0) {
            return Err(Error::config("env.sigma", "must be >= 0"));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::config("lambda", "must be > 0"));
        }
        if !(self.alpha >= 0.0) {
            return Err(Error::config("alpha", "must be >= 0"));
        }
        for name in &self.tune {
            if self.candidate_set(name).is_none() {
                return Err(Error::config(
                    "tune",
                    format!("no candidate set named `{name}`"),
                ));
            }
        }
        if self.tune.is_empty() && !matches!(self.tuner, TunerMode::Theoretical | TunerMode::Fixed)
        {
            return Err(Error::config("tune", "needs at least one hyper-parameter"));
        }
        if matches!(self.tuner, TunerMode::TwoLayer | TunerMode::Op) && self.tune.len() != 1 {
            return Err(Error::config(
                "tune",
                "this tuner handles exactly one hyper-parameter",
            ));
        }
        if matches!(
            self.env.kind,
            EnvKind::MovielensLinear | EnvKind::MovielensLogistic
        ) {
            if self.env.items.is_none() {
                return Err(Error::config(
                    "env.items",
                    "required for movielens environments",
                ));
            }
            if self.env.users.is_none() {
                return Err(Error::config(
                    "env.users",
                    "required for movielens environments",
                ));
            }
        }
        if self.sweep_lambda.iter().any(|l| !(*l > 0.0)) {
            return Err(Error::config("sweep.lambda", "values must be > 0"));
        }
        if self.sweep_alpha.iter().any(|a| !(*a >= 0.0)) {
            return Err(Error::config("sweep.alpha", "values must be >= 0"));
        }
        Ok(())
    }
}

fn real(v: &Value, key: &str) -> Result<f64> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(Error::config(key, "expected a number")),
    }
}

fn int(v: &Value, key: &str) -> Result<i64> {
    v.as_integer()
        .ok_or_else(|| Error::config(key, "expected an integer"))
}

fn non_negative(v: &Value, key: &str) -> Result<u64> {
    let i = int(v, key)?;
    u64::try_from(i).map_err(|_| Error::config(key, format!("must be non-negative, got {i}")))
}

fn positive(v: &Value, key: &str) -> Result<u64> {
    match non_negative(v, key)? {
        0 => Err(Error::config(key, "must be >= 1")),
        n => Ok(n),
    }
}

fn string<'a>(v: &'a Value, key: &str) -> Result<&'a str> {
    v.as_str()
        .ok_or_else(|| Error::config(key, "expected a string"))
}

fn reals(v: &Value, key: &str) -> Result<Vec<f64>> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::config(key, "expected an array of numbers"))?;
    let out = arr
        .iter()
        .map(|x| real(x, key))
        .collect::<Result<Vec<_>>>()?;
    if out.is_empty() {
        return Err(Error::config(key, "must not be empty"));
    }
    if out.iter().any(|x| !x.is_finite()) {
        return Err(Error::config(key, "values must be finite"));
    }
    Ok(out)
}

fn table<'a>(v: &'a Value, key: &str) -> Result<&'a Table> {
    v.as_table()
        .ok_or_else(|| Error::config(key, "expected a table"))
}

fn with_kind<T: std::str::FromStr<Err = Error>>(s: &str, key: &str) -> Result<T> {
    s.parse().map_err(|e: Error| match e {
        Error::Config { message, .. } => Error::config(key, message),
        other => Error::config(key, other.to_string()),
    })
}

fn parse_env(t: &Table) -> Result<EnvSpec> {
    let mut env = EnvSpec::default();
    let kind = t
        .get("kind")
        .ok_or_else(|| Error::config("env.kind", "missing"))?;
    env.kind = with_kind(string(kind, "env.kind")?, "env.kind")?;
    if env.kind == EnvKind::MovielensLinear {
        env.sigma = 1.0;
    }
    if matches!(
        env.kind,
        EnvKind::MovielensLinear | EnvKind::MovielensLogistic
    ) {
        env.d = 20;
        env.k = 1000;
    }
    for (key, v) in t {
        let full = format!("env.{key}");
        match key.as_str() {
            "kind" => {}
            "d" => env.d = positive(v, &full)? as usize,
            "K" | "k" => env.k = positive(v, "env.K")? as usize,
            "sigma" => {
                env.sigma = real(v, &full)?;
                if !(env.sigma >= 0.0) {
                    return Err(Error::config(full, "must be >= 0"));
                }
            }
            "features" => env.features = with_kind(string(v, &full)?, &full)?,
            "items" => env.items = Some(PathBuf::from(string(v, &full)?)),
            "users" => env.users = Some(PathBuf::from(string(v, &full)?)),
            _ => return Err(Error::config(full, "unknown key")),
        }
    }
    Ok(env)
}

/// Parses a TOML experiment document; errors name the offending key.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let doc: Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::config("<document>", e.to_string()))?;
    let env = parse_env(table(
        doc.get("env")
            .ok_or_else(|| Error::config("env", "missing"))?,
        "env",
    )?)?;
    let algo: Algorithm = with_kind(
        string(
            doc.get("algo")
                .ok_or_else(|| Error::config("algo", "missing"))?,
            "algo",
        )?,
        "algo",
    )?;
    let tuner: TunerMode = with_kind(
        string(
            doc.get("tuner")
                .ok_or_else(|| Error::config("tuner", "missing"))?,
            "tuner",
        )?,
        "tuner",
    )?;
    let mut cfg = ExperimentConfig::new(env, algo, tuner);

    for (key, v) in &doc {
        match key.as_str() {
            "env" | "algo" | "tuner" => {}
            "T" => cfg.horizon = positive(v, "T")?,
            "T1" => cfg.warmup = non_negative(v, "T1")?,
            "repeats" => cfg.repeats = positive(v, "repeats")? as usize,
            "seed" => cfg.master_seed = non_negative(v, "seed")?,
            "alpha" => {
                cfg.alpha = real(v, "alpha")?;
                if !(cfg.alpha >= 0.0) {
                    return Err(Error::config("alpha", "must be >= 0"));
                }
            }
            "lambda" => {
                cfg.lambda = real(v, "lambda")?;
                if !(cfg.lambda > 0.0) {
                    return Err(Error::config("lambda", "must be > 0"));
                }
            }
            "output" => cfg.output = Some(PathBuf::from(string(v, "output")?)),
            "tune" => {
                let arr = v
                    .as_array()
                    .ok_or_else(|| Error::config("tune", "expected an array"))?;
                cfg.tune = arr
                    .iter()
                    .map(|x| string(x, "tune").map(str::to_string))
                    .collect::<Result<_>>()?;
            }
            "candidates" => {
                for (name, values) in table(v, "candidates")? {
                    let set_key = format!("{name}_set");
                    let vals = reals(values, &set_key)?;
                    let set = CandidateSet::new(name.clone(), vals)
                        .map_err(|e| Error::config(set_key, e.to_string()))?;
                    cfg.set_candidates(set);
                }
            }
            "theory" => {
                for (k, x) in table(v, "theory")? {
                    let full = format!("theory.{k}");
                    match k.as_str() {
                        "sigma" => {
                            let s = real(x, &full)?;
                            if !(s >= 0.0) {
                                return Err(Error::config(full, "must be >= 0"));
                            }
                            cfg.theory.sigma = Some(s);
                        }
                        "S" | "s" => {
                            cfg.theory.s = real(x, "theory.S")?;
                            if !(cfg.theory.s >= 0.0) {
                                return Err(Error::config("theory.S", "must be >= 0"));
                            }
                        }
                        "delta" => {
                            cfg.theory.delta = real(x, &full)?;
                            if !(cfg.theory.delta > 0.0 && cfg.theory.delta <= 1.0) {
                                return Err(Error::config(full, "must be in (0, 1]"));
                            }
                        }
                        _ => return Err(Error::config(full, "unknown key")),
                    }
                }
            }
            "sweep" => {
                for (k, x) in table(v, "sweep")? {
                    let full = format!("sweep.{k}");
                    match k.as_str() {
                        "alpha" => cfg.sweep_alpha = reals(x, &full)?,
                        "lambda" => cfg.sweep_lambda = reals(x, &full)?,
                        _ => return Err(Error::config(full, "unknown key")),
                    }
                }
            }
            other => return Err(Error::config(other, "unknown key")),
        }
    }
    if !doc.contains_key("sweep") {
        if let Some(a) = cfg.candidate_set("alpha") {
            cfg.sweep_alpha = a.values().to_vec();
        }
        cfg.sweep_lambda = vec![cfg.lambda];
    }
    cfg.validate()?;
    Ok(cfg)
}
