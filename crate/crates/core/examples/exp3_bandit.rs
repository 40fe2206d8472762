//! EXP3 on a stochastic five-armed Bernoulli bandit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use syndicated::exp3::Exp3State;

fn main() -> syndicated::Result<()> {
    let means = [0.1, 0.2, 0.3, 0.4, 0.5];
    let horizon = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut exp3 = Exp3State::new(means.len(), horizon)?;
    println!("beta = {:.5}", exp3.beta());
    let mut regret = 0.0;
    for t in 1..=horizon {
        let j = exp3.sample(rng.random());
        let y = if rng.random_bool(means[j]) { 1.0 } else { 0.0 };
        exp3.update(j, y)?;
        regret += 0.5 - means[j];
        if t % 2000 == 0 {
            let p: Vec<String> = exp3.probs().iter().map(|p| format!("{p:.3}")).collect();
            println!(
                "t={t:5}  pseudo-regret {regret:7.1}  probs [{}]",
                p.join(", ")
            );
        }
    }
    Ok(())
}
