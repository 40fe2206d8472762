//! Tuning exploration rate and regularizer together: one EXP3 layer per
//! hyper-parameter versus a single layer over all pairs.

use syndicated::harness::{aggregate, EnvSpec, Experiment, ExperimentConfig};
use syndicated::policies::Algorithm;
use syndicated::tuner::TunerMode;

fn main() -> syndicated::Result<()> {
    for algo in [Algorithm::LinUcb, Algorithm::LinTs] {
        for mode in [TunerMode::Syndicated, TunerMode::Combined] {
            let mut cfg = ExperimentConfig::new(EnvSpec::default(), algo, mode);
            cfg.horizon = 5000;
            cfg.repeats = 4;
            let s = aggregate(&Experiment::new(cfg)?.run_all(true)?)?;
            println!(
                "{:6} {:12} final regret {:7.1} ± {:.1}",
                algo.name(),
                mode.name(),
                s.final_mean,
                s.final_std
            );
        }
    }
    Ok(())
}
