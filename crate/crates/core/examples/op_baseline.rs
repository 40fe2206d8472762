//! Thompson-sampling tuner over alpha for UCB-GLM on a logistic bandit,
//! next to the EXP3 tuner.

use syndicated::envs::{EnvKind, FeatureMode};
use syndicated::harness::{aggregate, EnvSpec, Experiment, ExperimentConfig};
use syndicated::policies::Algorithm;
use syndicated::tuner::TunerMode;

fn main() -> syndicated::Result<()> {
    let env = EnvSpec {
        kind: EnvKind::LogisticBernoulli,
        d: 6,
        k: 50,
        features: FeatureMode::Changing,
        ..EnvSpec::default()
    };
    for mode in [TunerMode::Op, TunerMode::TwoLayer] {
        let mut cfg = ExperimentConfig::new(env.clone(), Algorithm::UcbGlm, mode);
        cfg.horizon = 1500;
        cfg.repeats = 3;
        let s = aggregate(&Experiment::new(cfg)?.run_all(true)?)?;
        println!(
            "{:3}: final regret {:6.1} ± {:.1}",
            mode.name(),
            s.final_mean,
            s.final_std
        );
    }
    Ok(())
}
