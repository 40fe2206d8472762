//! One EXP3 layer picks LinUCB's exploration rate each round. Prints the
//! final regret and how often each candidate was chosen.

use syndicated::envs::FeatureMode;
use syndicated::harness::{aggregate, EnvSpec, Experiment, ExperimentConfig};
use syndicated::policies::Algorithm;
use syndicated::tuner::{CandidateSet, TunerMode};

fn main() -> syndicated::Result<()> {
    let env = EnvSpec {
        d: 10,
        k: 100,
        sigma: 0.1,
        features: FeatureMode::Changing,
        ..EnvSpec::default()
    };
    let mut cfg = ExperimentConfig::new(env, Algorithm::LinUcb, TunerMode::TwoLayer);
    cfg.set_candidates(CandidateSet::new("alpha", vec![0.0, 0.01, 0.1, 1.0, 10.0])?);
    cfg.horizon = 5000;
    cfg.repeats = 4;

    let traces = Experiment::new(cfg.clone())?.run_all(true)?;
    let summary = aggregate(&traces)?;
    println!(
        "mean final regret {:.1} (std {:.1})",
        summary.final_mean, summary.final_std
    );
    let alphas = cfg.candidate_set("alpha").unwrap().values();
    for (a, f) in alphas.iter().zip(&summary.selection_frequencies()[0]) {
        println!("  alpha {a:>5}: chosen {:5.1}%", 100.0 * f);
    }
    Ok(())
}
