//! Factorize a ratings file and build a replay environment from it.
//!
//! ```text
//! cargo run --release --example movielens_prep -- ml-100k/u.data
//! ```
//!
//! Without an argument a small synthetic ratings matrix is used.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use syndicated::envs::{als, movielens_env, EnvKind};

fn synthetic() -> Vec<als::Rating> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut out = Vec::new();
    for user in 0..200 {
        for item in 0..300 {
            if (user + item) % 7 == 0 || rng.random_bool(0.05) {
                let value = 1.0 + ((user * 31 + item * 17) % 5) as f64;
                out.push(als::Rating { user, item, value });
            }
        }
    }
    out
}

fn main() -> syndicated::Result<()> {
    let ratings = match std::env::args().nth(1) {
        Some(path) => als::read_ratings(path)?,
        None => synthetic(),
    };
    let (f, objective) = als::als_factorize_traced(&ratings, 20, 0.1, 30, 0)?;
    println!(
        "{} ratings, objective {:.1} -> {:.1}, rmse {:.4}",
        ratings.len(),
        objective[0],
        objective.last().unwrap(),
        f.rmse(&ratings)
    );
    let k = 100.min(f.items.len());
    let env = movielens_env(&f.items, &f.users, 1, k, EnvKind::MovielensLinear)?;
    println!(
        "replay env: d = {}, K = {}, |theta*| = {:.3}",
        env.d(),
        env.k(),
        env.s_diagnostic()
    );
    Ok(())
}
