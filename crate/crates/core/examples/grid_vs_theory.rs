//! Fixed-feature environment: a grid over alpha against the exploration
//! rate given by the confidence-set radius.

use syndicated::envs::FeatureMode;
use syndicated::harness::{aggregate, sweep, EnvSpec, Experiment, ExperimentConfig};
use syndicated::policies::Algorithm;
use syndicated::tuner::TunerMode;

fn main() -> syndicated::Result<()> {
    let env = EnvSpec {
        d: 5,
        k: 100,
        sigma: 0.5,
        features: FeatureMode::Fixed,
        ..EnvSpec::default()
    };
    let mut cfg = ExperimentConfig::new(env, Algorithm::LinUcb, TunerMode::Fixed);
    cfg.horizon = 5000;
    cfg.repeats = 3;
    cfg.sweep_alpha = vec![0.0, 0.5, 1.0, 2.0, 4.0, 8.0];
    cfg.sweep_lambda = vec![1.0];
    for cell in sweep(&cfg, true)? {
        println!(
            "alpha {:>4}: {:7.1} ± {:.1}",
            cell.alpha, cell.summary.final_mean, cell.summary.final_std
        );
    }

    cfg.tuner = TunerMode::Theoretical;
    cfg.theory.sigma = Some(0.5);
    let s = aggregate(&Experiment::new(cfg)?.run_all(true)?)?;
    println!("theory    : {:7.1} ± {:.1}", s.final_mean, s.final_std);
    Ok(())
}
