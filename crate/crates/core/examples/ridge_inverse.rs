//! Incremental ridge regression: the Sherman-Morrison inverse tracks the
//! direct inverse, and the estimate converges to the true parameter.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use syndicated::numkit::{spd_inverse, RidgeState};

fn main() -> syndicated::Result<()> {
    let d = 6;
    let theta = [0.3, -0.2, 0.5, 0.1, -0.4, 0.25];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut state = RidgeState::new(d, 1.0)?;
    for t in 1..=2000 {
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-0.4..0.4)).collect();
        let y = x.iter().zip(&theta).map(|(a, b)| a * b).sum::<f64>()
            + 0.05 * rng.random_range(-1.0..1.0);
        state.update(&x, y)?;
        if t % 400 == 0 {
            let drift = state.v_inv().max_abs_diff(&spd_inverse(state.v())?);
            let err: f64 = state
                .theta_hat()
                .iter()
                .zip(&theta)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            println!("t={t:5}  |Vinv - inv(V)|max = {drift:.2e}  |theta_hat - theta| = {err:.4}");
        }
    }
    Ok(())
}
