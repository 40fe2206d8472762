//! Hyper-parameter tuners that sit on top of a base policy.
//!
//! * [`TunerMode::TwoLayer`]: one EXP3 layer over a single candidate set.
//! * [`TunerMode::Combined`]: one EXP3 layer over the cartesian product of
//!   several candidate sets.
//! * [`TunerMode::Syndicated`]: one independent EXP3 layer per candidate set,
//!   all updated with the same observed reward.
//! * [`TunerMode::Theoretical`]: the confidence-radius formula each round.
//! * [`TunerMode::Op`]: Beta-Bernoulli Thompson sampling over candidates.
//! * [`TunerMode::Fixed`]: constant values (grid search cells).
//!
//! Warm-up rounds (`t ≤ T1`) pull uniformly random arms and never touch
//! tuner state.

use rand::Rng;
use rand_distr::{Beta, Distribution};

use crate::error::{Error, Result};
use crate::exp3::Exp3State;
use crate::policies::{theoretical_alpha, HyperParams, TheoryParams};
use crate::seeding::Stream;

pub const MAX_PRODUCT: u128 = 1_000_000;

/// Candidate values for one named hyper-parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    name: String,
    values: Vec<f64>,
}

impl CandidateSet {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if values.is_empty() {
            return Err(Error::InvalidArg(format!(
                "candidate set `{name}` is empty"
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArg(format!(
                "candidate set `{name}` has non-finite values"
            )));
        }
        if name == "lambda" && values.iter().any(|v| *v <= 0.0) {
            return Err(Error::InvalidArg(
                "lambda candidates must be positive".into(),
            ));
        }
        if name == "alpha" && values.iter().any(|v| *v < 0.0) {
            return Err(Error::InvalidArg(
                "alpha candidates must be non-negative".into(),
            ));
        }
        Ok(Self { name, values })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Cartesian product of candidate sets; each element is a full assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductSet {
    names: Vec<String>,
    elements: Vec<Vec<f64>>,
}

impl ProductSet {
    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn elements(&self) -> &[Vec<f64>] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// Product in lexicographic order, first set varying slowest.
pub fn combined_candidates(sets: &[CandidateSet]) -> Result<ProductSet> {
    if sets.is_empty() {
        return Err(Error::InvalidArg("need at least one candidate set".into()));
    }
    let size = sets.iter().map(|s| s.len() as u128).product::<u128>();
    if size > MAX_PRODUCT {
        return Err(Error::SizeOverflow(size));
    }
    let mut elements: Vec<Vec<f64>> = vec![Vec::new()];
    for set in sets {
        elements = elements
            .into_iter()
            .flat_map(|prefix| {
                set.values().iter().map(move |v| {
                    let mut e = prefix.clone();
                    e.push(*v);
                    e
                })
            })
            .collect();
    }
    Ok(ProductSet {
        names: sets.iter().map(|s| s.name.clone()).collect(),
        elements,
    })
}

/// One round's hyper-parameter assignment.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChosenConfig {
    pub assignments: Vec<(String, f64)>,
    /// Index chosen by each layer (or the single candidate index for OP).
    pub indices: Vec<(String, usize)>,
}

impl ChosenConfig {
    pub fn value(&self, name: &str) -> Option<f64> {
        self.assignments
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
    }

    pub fn layer_indices(&self) -> Vec<usize> {
        self.indices.iter().map(|(_, i)| *i).collect()
    }

    fn set(&mut self, name: &str, value: f64) {
        match self.assignments.iter_mut().find(|(n, _)| n == name) {
            Some(slot) => slot.1 = value,
            None => self.assignments.push((name.to_string(), value)),
        }
    }

    /// Hyper-parameters for the policy; names other than `alpha`/`lambda`
    /// become extras.
    pub fn hyper_params(&self) -> Result<HyperParams> {
        let alpha = self
            .value("alpha")
            .ok_or_else(|| Error::InvalidArg("no value for alpha".into()))?;
        let lambda = self
            .value("lambda")
            .ok_or_else(|| Error::InvalidArg("no value for lambda".into()))?;
        let mut hp = HyperParams::new(alpha, lambda)?;
        hp.extras = self
            .assignments
            .iter()
            .filter(|(n, _)| n != "alpha" && n != "lambda")
            .cloned()
            .collect();
        Ok(hp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TunerMode {
    TwoLayer,
    Combined,
    Syndicated,
    Theoretical,
    Op,
    Fixed,
}

impl TunerMode {
    pub fn name(self) -> &'static str {
        match self {
            TunerMode::TwoLayer => "tl",
            TunerMode::Combined => "tl-combined",
            TunerMode::Syndicated => "syndicated",
            TunerMode::Theoretical => "theoretical",
            TunerMode::Op => "op",
            TunerMode::Fixed => "fixed",
        }
    }
}

impl std::str::FromStr for TunerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tl" | "two-layer" => Ok(TunerMode::TwoLayer),
            "tl-combined" | "combined" => Ok(TunerMode::Combined),
            "syndicated" => Ok(TunerMode::Syndicated),
            "theoretical" | "theoretical-explore" => Ok(TunerMode::Theoretical),
            "op" => Ok(TunerMode::Op),
            "fixed" | "grid" => Ok(TunerMode::Fixed),
            other => Err(Error::config(
                "tuner",
                format!("unknown tuner mode `{other}`"),
            )),
        }
    }
}

/// Random streams a tuner consumes: one per EXP3 layer plus one for baselines.
#[derive(Debug, Clone)]
pub struct TunerStreams {
    pub layers: Vec<Stream>,
    pub baseline: Stream,
}

/// Uniform arm for a warm-up round: `⌊u K⌋`.
pub fn warmup_step(k: usize, u: f64) -> usize {
    ((u * k as f64) as usize).min(k.saturating_sub(1))
}

#[derive(Debug, Clone)]
pub struct Tuner {
    mode: TunerMode,
    sets: Vec<CandidateSet>,
    product: Option<ProductSet>,
    layers: Vec<Exp3State>,
    op_counts: Vec<(f64, f64)>,
    constants: Vec<(String, f64)>,
    theory: Option<TheoryParams>,
    warmup: u64,
    last_choice: Vec<usize>,
}

impl Tuner {
    fn base(mode: TunerMode, constants: Vec<(String, f64)>, warmup: u64) -> Self {
        Self {
            mode,
            sets: Vec::new(),
            product: None,
            layers: Vec::new(),
            op_counts: Vec::new(),
            constants,
            theory: None,
            warmup,
            last_choice: Vec::new(),
        }
    }

    /// Single EXP3 layer over `set`; everything else held at `constants`.
    pub fn two_layer(
        set: CandidateSet,
        constants: Vec<(String, f64)>,
        horizon: u64,
        warmup: u64,
    ) -> Result<Self> {
        let mut t = Self::base(TunerMode::TwoLayer, constants, warmup);
        t.layers.push(Exp3State::new(set.len(), horizon)?);
        t.sets.push(set);
        Ok(t)
    }

    /// Single EXP3 layer over the cartesian product of `sets`.
    pub fn combined(
        sets: Vec<CandidateSet>,
        constants: Vec<(String, f64)>,
        horizon: u64,
        warmup: u64,
    ) -> Result<Self> {
        let product = combined_candidates(&sets)?;
        let mut t = Self::base(TunerMode::Combined, constants, warmup);
        t.layers.push(Exp3State::new(product.len(), horizon)?);
        t.product = Some(product);
        t.sets = sets;
        Ok(t)
    }

    /// One EXP3 layer per set, each with its own mixing rate.
    pub fn syndicated(
        sets: Vec<CandidateSet>,
        constants: Vec<(String, f64)>,
        horizon: u64,
        warmup: u64,
    ) -> Result<Self> {
        if sets.is_empty() {
            return Err(Error::InvalidArg(
                "syndicated tuner needs at least one set".into(),
            ));
        }
        let mut t = Self::base(TunerMode::Syndicated, constants, warmup);
        t.layers = sets
            .iter()
            .map(|s| Exp3State::new(s.len(), horizon))
            .collect::<Result<_>>()?;
        t.sets = sets;
        Ok(t)
    }

    /// Exploration rate from the confidence-radius formula; `lambda` is
    /// taken from `theory`.
    pub fn theoretical(
        theory: TheoryParams,
        mut constants: Vec<(String, f64)>,
        warmup: u64,
    ) -> Self {
        constants.retain(|(n, _)| n != "lambda");
        constants.push(("lambda".into(), theory.lambda));
        let mut t = Self::base(TunerMode::Theoretical, constants, warmup);
        t.theory = Some(theory);
        t
    }

    /// Beta-Bernoulli Thompson sampling over `set` with Beta(1, 1) priors.
    pub fn op(set: CandidateSet, constants: Vec<(String, f64)>, warmup: u64) -> Self {
        let mut t = Self::base(TunerMode::Op, constants, warmup);
        t.op_counts = vec![(0.0, 0.0); set.len()];
        t.sets.push(set);
        t
    }

    pub fn fixed(assignments: Vec<(String, f64)>, warmup: u64) -> Self {
        Self::base(TunerMode::Fixed, assignments, warmup)
    }

    pub fn mode(&self) -> TunerMode {
        self.mode
    }

    pub fn layers(&self) -> &[Exp3State] {
        &self.layers
    }

    pub fn sets(&self) -> &[CandidateSet] {
        &self.sets
    }

    pub fn product(&self) -> Option<&ProductSet> {
        self.product.as_ref()
    }

    pub fn op_counts(&self) -> &[(f64, f64)] {
        &self.op_counts
    }

    pub fn warmup(&self) -> u64 {
        self.warmup
    }

    pub fn in_warmup(&self, round: u64) -> bool {
        round <= self.warmup
    }

    /// Number of candidates per layer, for selection histograms.
    pub fn layer_sizes(&self) -> Vec<usize> {
        match self.mode {
            TunerMode::Op => vec![self.op_counts.len()],
            _ => self.layers.iter().map(Exp3State::n).collect(),
        }
    }

    pub fn layer_names(&self) -> Vec<String> {
        match self.mode {
            TunerMode::Combined => vec![self
                .sets
                .iter()
                .map(|s| s.name.as_str())
                .collect::<Vec<_>>()
                .join("*")],
            _ => self.sets.iter().map(|s| s.name.clone()).collect(),
        }
    }

    fn with_constants(&self) -> ChosenConfig {
        let mut cfg = ChosenConfig::default();
        for (n, v) in &self.constants {
            cfg.set(n, *v);
        }
        cfg
    }

    /// Two-layer choice from one uniform draw.
    pub fn tl_choose(&mut self, u: f64) -> Result<ChosenConfig> {
        match self.mode {
            TunerMode::TwoLayer | TunerMode::Combined => {}
            m => {
                return Err(Error::InvalidArg(format!(
                    "tl_choose called in mode {}",
                    m.name()
                )))
            }
        }
        let idx = self.layers[0].sample(u);
        let mut cfg = self.with_constants();
        match &self.product {
            Some(p) => {
                for (name, v) in p.names.iter().zip(&p.elements[idx]) {
                    cfg.set(name, *v);
                }
                cfg.indices.push((self.layer_names()[0].clone(), idx));
            }
            None => {
                let set = &self.sets[0];
                cfg.set(&set.name, set.values[idx]);
                cfg.indices.push((set.name.clone(), idx));
            }
        }
        self.last_choice = vec![idx];
        Ok(cfg)
    }

    /// Independent draw per layer, one uniform each.
    pub fn syndicated_choose(&mut self, draws: &[f64]) -> Result<ChosenConfig> {
        if self.mode != TunerMode::Syndicated {
            return Err(Error::InvalidArg(
                "syndicated_choose needs syndicated mode".into(),
            ));
        }
        if draws.len() != self.layers.len() {
            return Err(Error::DimensionMismatch {
                expected: self.layers.len(),
                found: draws.len(),
            });
        }
        let mut cfg = self.with_constants();
        self.last_choice.clear();
        for ((layer, set), u) in self.layers.iter().zip(&self.sets).zip(draws) {
            let idx = layer.sample(*u);
            cfg.set(&set.name, set.values[idx]);
            cfg.indices.push((set.name.clone(), idx));
            self.last_choice.push(idx);
        }
        Ok(cfg)
    }

    /// OP choice from caller-supplied posterior samples (one per candidate).
    pub fn op_choose_with(&mut self, samples: &[f64]) -> Result<ChosenConfig> {
        if self.mode != TunerMode::Op {
            return Err(Error::InvalidArg("op_choose needs OP mode".into()));
        }
        if samples.len() != self.op_counts.len() {
            return Err(Error::DimensionMismatch {
                expected: self.op_counts.len(),
                found: samples.len(),
            });
        }
        let mut best = 0;
        for (j, s) in samples.iter().enumerate() {
            if *s > samples[best] {
                best = j;
            }
        }
        let set = &self.sets[0];
        let mut cfg = self.with_constants();
        cfg.set(&set.name, set.values[best]);
        cfg.indices.push((set.name.clone(), best));
        self.last_choice = vec![best];
        Ok(cfg)
    }

    /// OP choice drawing `Beta(s + 1, f + 1)` per candidate from `rng`.
    pub fn op_choose(&mut self, rng: &mut impl Rng) -> Result<ChosenConfig> {
        let samples = self
            .op_counts
            .iter()
            .map(|(s, f)| {
                Beta::new(s + 1.0, f + 1.0)
                    .map(|b| b.sample(rng))
                    .map_err(|e| Error::InvalidArg(e.to_string()))
            })
            .collect::<Result<Vec<f64>>>()?;
        self.op_choose_with(&samples)
    }

    /// Theoretical exploration rate after `observations` past observations.
    pub fn theoretical_choose(&mut self, observations: u64) -> Result<ChosenConfig> {
        let theory = self.theory.ok_or_else(|| {
            Error::InvalidArg("theoretical_choose needs theory parameters".into())
        })?;
        let mut cfg = self.with_constants();
        cfg.set("alpha", theoretical_alpha(&theory, observations));
        self.last_choice.clear();
        Ok(cfg)
    }

    /// Choice for round `round` (1-based), drawing from `streams` as needed.
    pub fn choose(&mut self, round: u64, streams: &mut TunerStreams) -> Result<ChosenConfig> {
        match self.mode {
            TunerMode::TwoLayer | TunerMode::Combined => {
                let u: f64 = streams.layers[0].random();
                self.tl_choose(u)
            }
            TunerMode::Syndicated => {
                let draws: Vec<f64> = streams.layers.iter_mut().map(|s| s.random()).collect();
                self.syndicated_choose(&draws)
            }
            TunerMode::Op => self.op_choose(&mut streams.baseline),
            TunerMode::Theoretical => self.theoretical_choose(round.saturating_sub(1)),
            TunerMode::Fixed => {
                self.last_choice.clear();
                Ok(self.with_constants())
            }
        }
    }

    /// OP update with an already-decided Bernoulli trial outcome.
    pub fn op_update_with(&mut self, success: bool) {
        if let Some(&j) = self.last_choice.first() {
            let c = &mut self.op_counts[j];
            if success {
                c.0 += 1.0;
            } else {
                c.1 += 1.0;
            }
        }
    }

    /// Feeds the round's clipped reward to every layer. No-op during warm-up.
    pub fn update(&mut self, round: u64, reward: f64, streams: &mut TunerStreams) -> Result<()> {
        if !(0.0..=1.0).contains(&reward) {
            return Err(Error::InvalidArg(format!(
                "tuner reward must be in [0, 1], got {reward}"
            )));
        }
        if self.in_warmup(round) {
            return Ok(());
        }
        match self.mode {
            TunerMode::TwoLayer | TunerMode::Combined | TunerMode::Syndicated => {
                for (layer, idx) in self.layers.iter_mut().zip(&self.last_choice) {
                    layer.update(*idx, reward)?;
                }
            }
            TunerMode::Op => {
                let u: f64 = streams.baseline.random();
                self.op_update_with(u < reward);
            }
            TunerMode::Theoretical | TunerMode::Fixed => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn alpha_set() -> CandidateSet {
        CandidateSet::new("alpha", vec![0.0, 0.01, 0.1, 1.0, 10.0]).unwrap()
    }

    fn lambda_set() -> CandidateSet {
        CandidateSet::new("lambda", vec![0.01, 0.1, 1.0]).unwrap()
    }

    fn lam1() -> Vec<(String, f64)> {
        vec![("lambda".into(), 1.0)]
    }

    fn streams(n: usize, seed: u64) -> TunerStreams {
        TunerStreams {
            layers: (0..n)
                .map(|l| seeding::stream(seed, 0, &seeding::layer_name(l)))
                .collect(),
            baseline: seeding::stream(seed, 0, seeding::BASELINE),
        }
    }

    #[test]
    fn candidate_validation() {
        assert!(CandidateSet::new("alpha", vec![]).is_err());
        assert!(CandidateSet::new("lambda", vec![0.0, 1.0]).is_err());
        assert!(CandidateSet::new("alpha", vec![f64::NAN]).is_err());
        assert!(CandidateSet::new("eta", vec![-1.0]).is_ok());
    }

    #[test]
    fn warmup_examples() {
        assert_eq!(warmup_step(4, 0.6), 2);
        assert_eq!(warmup_step(1, 0.99), 0);
        assert_eq!(warmup_step(4, 0.0), 0);
        assert_eq!(warmup_step(4, 0.999_999_9), 3);
    }

    #[test]
    fn product_examples() {
        let a = CandidateSet::new("a", vec![0.0, 1.0]).unwrap();
        let b = CandidateSet::new("b", vec![5.0]).unwrap();
        let p = combined_candidates(&[a.clone(), b]).unwrap();
        assert_eq!(p.elements(), &[vec![0.0, 5.0], vec![1.0, 5.0]]);
        assert_eq!(
            combined_candidates(&[alpha_set(), lambda_set()])
                .unwrap()
                .len(),
            15
        );
        let single = combined_candidates(&[a]).unwrap();
        assert_eq!(single.elements(), &[vec![0.0], vec![1.0]]);
        let p = combined_candidates(&[alpha_set(), lambda_set()]).unwrap();
        assert_eq!(p.elements()[0], vec![0.0, 0.01]);
        assert_eq!(p.elements()[1], vec![0.0, 0.1]);
        assert_eq!(p.elements()[3], vec![0.01, 0.01]);
    }

    #[test]
    fn product_overflow() {
        let big = CandidateSet::new("x", (0..1001).map(f64::from).collect()).unwrap();
        assert!(matches!(
            combined_candidates(&[big.clone(), big]),
            Err(Error::SizeOverflow(1_002_001))
        ));
    }

    #[test]
    fn tl_choose_examples() {
        let mut t = Tuner::two_layer(alpha_set(), lam1(), 10_000, 0).unwrap();
        let c = t.tl_choose(0.0).unwrap();
        assert_eq!(c.value("alpha"), Some(0.0));
        assert_eq!(c.value("lambda"), Some(1.0));
        let one = CandidateSet::new("alpha", vec![0.7]).unwrap();
        let mut t = Tuner::two_layer(one, lam1(), 100, 0).unwrap();
        for u in [0.0, 0.5, 0.999] {
            assert_eq!(t.tl_choose(u).unwrap().value("alpha"), Some(0.7));
        }
    }

    #[test]
    fn tl_learns_rewarded_candidate() {
        let mut t = Tuner::two_layer(alpha_set(), lam1(), 10_000, 0).unwrap();
        let mut s = streams(1, 4);
        for round in 1..=3000u64 {
            let c = t.choose(round, &mut s).unwrap();
            let r = if c.layer_indices()[0] == 2 { 1.0 } else { 0.0 };
            t.update(round, r, &mut s).unwrap();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let hits = (0..10_000)
            .filter(|_| t.tl_choose(rng.random()).unwrap().layer_indices()[0] == 2)
            .count();
        let p = t.layers()[0].probs()[2];
        assert!(hits as f64 / 10_000.0 > 0.2);
        assert!((hits as f64 / 10_000.0 - p).abs() < 0.02);
    }

    #[test]
    fn syndicated_fresh_and_reduction() {
        let mut s = Tuner::syndicated(vec![alpha_set(), lambda_set()], vec![], 10_000, 0).unwrap();
        let c = s.syndicated_choose(&[0.0, 0.0]).unwrap();
        assert_eq!(c.value("alpha"), Some(0.0));
        assert_eq!(c.value("lambda"), Some(0.01));

        let mut one = Tuner::syndicated(vec![alpha_set()], lam1(), 10_000, 0).unwrap();
        let mut tl = Tuner::two_layer(alpha_set(), lam1(), 10_000, 0).unwrap();
        let mut s1 = streams(1, 8);
        let mut s2 = streams(1, 8);
        for round in 1..=500u64 {
            let a = one.choose(round, &mut s1).unwrap();
            let b = tl.choose(round, &mut s2).unwrap();
            assert_eq!(a, b);
            let r = (a.layer_indices()[0] as f64) / 4.0;
            one.update(round, r, &mut s1).unwrap();
            tl.update(round, r, &mut s2).unwrap();
            assert_eq!(one.layers(), tl.layers());
        }
    }

    #[test]
    fn syndicated_layers_are_independent() {
        let sets = vec![
            CandidateSet::new("a", vec![0.0, 1.0, 2.0, 3.0, 4.0]).unwrap(),
            CandidateSet::new("b", vec![0.0, 1.0, 2.0, 3.0, 4.0]).unwrap(),
            CandidateSet::new("c", vec![0.0, 1.0, 2.0, 3.0]).unwrap(),
        ];
        let mut t = Tuner::syndicated(sets, vec![], 10_000, 0).unwrap();
        let mut s = streams(3, 1);
        // skew the layers a little
        for round in 1..=400u64 {
            let c = t.choose(round, &mut s).unwrap();
            let idx = c.layer_indices();
            let r = if idx[0] == 1 || idx[2] == 3 { 1.0 } else { 0.2 };
            t.update(round, r, &mut s).unwrap();
        }
        let marginals: Vec<Vec<f64>> = t.layers().iter().map(|l| l.probs()).collect();
        let n = 100_000;
        let mut counts = vec![0usize; 100];
        for _ in 0..n {
            let c = t.choose(401, &mut s).unwrap();
            let i = c.layer_indices();
            counts[i[0] * 20 + i[1] * 4 + i[2]] += 1;
        }
        let mut tv = 0.0;
        for a in 0..5 {
            for b in 0..5 {
                for c in 0..4 {
                    let p = marginals[0][a] * marginals[1][b] * marginals[2][c];
                    tv += (counts[a * 20 + b * 4 + c] as f64 / n as f64 - p).abs();
                }
            }
        }
        assert!(0.5 * tv < 0.02, "tv = {}", 0.5 * tv);
    }

    #[test]
    fn updates_broadcast_one_reward() {
        let mut t = Tuner::syndicated(vec![alpha_set(), lambda_set()], vec![], 10_000, 0).unwrap();
        let mut s = streams(2, 3);
        let c = t.choose(1, &mut s).unwrap();
        t.update(1, 0.0, &mut s).unwrap();
        assert!(t
            .layers()
            .iter()
            .all(|l| l.weights().iter().all(|w| *w == 1.0)));
        t.update(1, 0.8, &mut s).unwrap();
        let idx = c.layer_indices();
        for (l, layer) in t.layers().iter().enumerate() {
            let p = 1.0 / layer.n() as f64;
            let expected = (layer.beta() / layer.n() as f64 * 0.8 / p).exp();
            assert!((layer.weights()[idx[l]] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn state_sizes() {
        let c = Tuner::combined(vec![alpha_set(), lambda_set()], vec![], 10_000, 0).unwrap();
        assert_eq!(c.layers().len(), 1);
        assert_eq!(c.layers()[0].n(), 15);
        let s = Tuner::syndicated(vec![alpha_set(), lambda_set()], vec![], 10_000, 0).unwrap();
        assert_eq!(s.layers().iter().map(Exp3State::n).sum::<usize>(), 8);
        assert!((s.layers()[0].beta() - crate::exp3::mixing_rate(5, 10_000)).abs() < 1e-15);
        assert!((s.layers()[1].beta() - crate::exp3::mixing_rate(3, 10_000)).abs() < 1e-15);
    }

    #[test]
    fn combined_assigns_full_tuple() {
        let mut c = Tuner::combined(vec![alpha_set(), lambda_set()], vec![], 10_000, 0).unwrap();
        // index 4 of 15 under uniform probs: u in [4/15, 5/15)
        let cfg = c.tl_choose(4.5 / 15.0).unwrap();
        assert_eq!(cfg.layer_indices(), vec![4]);
        assert_eq!(cfg.value("alpha"), Some(0.01));
        assert_eq!(cfg.value("lambda"), Some(0.1));
    }

    #[test]
    fn warmup_rounds_leave_weights_alone() {
        let mut t = Tuner::syndicated(vec![alpha_set(), lambda_set()], vec![], 100, 5).unwrap();
        let mut s = streams(2, 0);
        for round in 1..=5u64 {
            assert!(t.in_warmup(round));
            t.update(round, 1.0, &mut s).unwrap();
        }
        assert!(t
            .layers()
            .iter()
            .all(|l| l.weights().iter().all(|w| *w == 1.0)));
    }

    #[test]
    fn op_examples() {
        let mut t = Tuner::op(alpha_set(), lam1(), 0);
        let c = t.op_choose_with(&[0.9, 0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(c.layer_indices(), vec![0]);
        t.op_counts = vec![(1.0, 1.0); 5];
        t.op_update_with(true);
        assert_eq!(t.op_counts()[0], (2.0, 1.0));

        let mut t = Tuner::op(
            CandidateSet::new("alpha", vec![1.0, 2.0]).unwrap(),
            lam1(),
            0,
        );
        t.op_counts = vec![(100.0, 0.0), (0.0, 100.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let wins = (0..1000)
            .filter(|_| t.op_choose(&mut rng).unwrap().layer_indices()[0] == 0)
            .count();
        assert!(wins > 990);

        let mut t = Tuner::op(CandidateSet::new("alpha", vec![3.0]).unwrap(), lam1(), 0);
        for _ in 0..10 {
            assert_eq!(t.op_choose(&mut rng).unwrap().value("alpha"), Some(3.0));
        }
    }

    #[test]
    fn op_full_reward_always_succeeds() {
        let mut t = Tuner::op(alpha_set(), lam1(), 0);
        let mut s = streams(0, 2);
        let c = t.choose(1, &mut s).unwrap();
        t.update(1, 1.0, &mut s).unwrap();
        assert_eq!(t.op_counts()[c.layer_indices()[0]], (1.0, 0.0));
        let c = t.choose(2, &mut s).unwrap();
        t.update(2, 0.0, &mut s).unwrap();
        let j = c.layer_indices()[0];
        assert_eq!(t.op_counts()[j].1, 1.0);
    }

    #[test]
    fn theoretical_examples() {
        let p = TheoryParams::new(1.0, 1.0, 1.0, 3, 1.0).unwrap();
        let mut t = Tuner::theoretical(p, vec![], 0);
        let c = t.theoretical_choose(0).unwrap();
        assert!((c.value("alpha").unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(c.value("lambda"), Some(1.0));
        let p = TheoryParams::new(0.5, 1.0, 0.01, 5, 1.0).unwrap();
        let mut t = Tuner::theoretical(p, vec![], 0);
        let mut prev = 0.0;
        for obs in [0, 1, 10, 100, 1000, 10_000] {
            let a = t.theoretical_choose(obs).unwrap().value("alpha").unwrap();
            assert!(a >= prev);
            prev = a;
        }
        assert!((prev - 5.155).abs() < 1e-3);
    }

    #[test]
    fn hyper_params_need_alpha_and_lambda() {
        let t = Tuner::fixed(vec![("alpha".into(), 1.0)], 0);
        assert!(t.with_constants().hyper_params().is_err());
        let t = Tuner::fixed(
            vec![
                ("alpha".into(), 1.0),
                ("lambda".into(), 0.1),
                ("eta".into(), 3.0),
            ],
            0,
        );
        let hp = t.with_constants().hyper_params().unwrap();
        assert_eq!(hp.extra("eta"), Some(3.0));
    }
}
