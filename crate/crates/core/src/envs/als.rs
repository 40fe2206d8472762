//! Alternating ridge least squares for explicit ratings, plus the text
//! formats used to move ratings and factor matrices around.
//!
//! Ratings: one per line, whitespace separated `user item rating [timestamp]`
//! with 1-based ids. Feature files: one vector per line, space separated,
//! line `i` holds id `i`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::numkit::{cholesky, cholesky_solve, dot, Matrix};
use crate::seeding::Stream;

/// One rating with 0-based ids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rating {
    pub user: usize,
    pub item: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Factorization {
    pub users: Vec<Vec<f64>>,
    pub items: Vec<Vec<f64>>,
}

impl Factorization {
    pub fn predict(&self, user: usize, item: usize) -> f64 {
        dot(&self.users[user], &self.items[item])
    }

    pub fn rmse(&self, ratings: &[Rating]) -> f64 {
        let sse: f64 = ratings
            .iter()
            .map(|r| (r.value - self.predict(r.user, r.item)).powi(2))
            .sum();
        (sse / ratings.len() as f64).sqrt()
    }
}

pub fn parse_ratings(text: &str) -> Result<Vec<Rating>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 3 {
            return Err(Error::InvalidData(format!(
                "line {}: expected `user item rating`",
                lineno + 1
            )));
        }
        let id = |s: &str, what: &str| -> Result<usize> {
            match s.parse::<usize>() {
                Ok(v) if v >= 1 => Ok(v - 1),
                _ => Err(Error::InvalidData(format!(
                    "line {}: bad {what} id `{s}` (ids are 1-based)",
                    lineno + 1
                ))),
            }
        };
        let value: f64 = fields[2].parse().map_err(|_| {
            Error::InvalidData(format!("line {}: bad rating `{}`", lineno + 1, fields[2]))
        })?;
        if !value.is_finite() {
            return Err(Error::InvalidData(format!(
                "line {}: non-finite rating",
                lineno + 1
            )));
        }
        out.push(Rating {
            user: id(fields[0], "user")?,
            item: id(fields[1], "item")?,
            value,
        });
    }
    Ok(out)
}

pub fn read_ratings(path: impl AsRef<Path>) -> Result<Vec<Rating>> {
    parse_ratings(&fs::read_to_string(path)?)
}

pub fn format_features(vectors: &[Vec<f64>]) -> String {
    let mut s = String::new();
    for v in vectors {
        let line: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
        let _ = writeln!(s, "{}", line.join(" "));
    }
    s
}

pub fn write_features(path: impl AsRef<Path>, vectors: &[Vec<f64>]) -> Result<()> {
    fs::write(path, format_features(vectors))?;
    Ok(())
}

pub fn parse_features(text: &str) -> Result<Vec<Vec<f64>>> {
    let rows: Vec<Vec<f64>> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| Error::InvalidData(format!("line {}: bad value `{t}`", i + 1)))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    if let Some(first) = rows.first() {
        if rows.iter().any(|r| r.len() != first.len()) {
            return Err(Error::InvalidData(
                "feature rows have different lengths".into(),
            ));
        }
    }
    Ok(rows)
}

pub fn read_features(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>> {
    parse_features(&fs::read_to_string(path)?)
}

/// `Σ (r − uᵀv)² + reg (Σ‖u‖² + Σ‖v‖²)`.
pub fn als_objective(ratings: &[Rating], f: &Factorization, reg: f64) -> f64 {
    let fit: f64 = ratings
        .iter()
        .map(|r| (r.value - f.predict(r.user, r.item)).powi(2))
        .sum();
    let penalty: f64 = f.users.iter().chain(&f.items).map(|v| dot(v, v)).sum();
    fit + reg * penalty
}

/// Groups rating indices by id; every id in `0..count` must appear.
fn group(
    ratings: &[Rating],
    key: impl Fn(&Rating) -> usize,
    count: usize,
    what: &str,
) -> Result<Vec<Vec<usize>>> {
    let mut groups = vec![Vec::new(); count];
    for (i, r) in ratings.iter().enumerate() {
        groups[key(r)].push(i);
    }
    if let Some(empty) = groups.iter().position(Vec::is_empty) {
        return Err(Error::InvalidData(format!(
            "{what} {} has no ratings",
            empty + 1
        )));
    }
    Ok(groups)
}

/// Solves each row of `target` against the fixed `other` factors.
fn half_sweep(
    ratings: &[Rating],
    groups: &[Vec<usize>],
    other: &[Vec<f64>],
    other_id: impl Fn(&Rating) -> usize,
    target: &mut [Vec<f64>],
    d: usize,
    reg: f64,
) -> Result<()> {
    for (row, idxs) in target.iter_mut().zip(groups) {
        let mut a = Matrix::scaled_identity(d, reg);
        let mut rhs = vec![0.0; d];
        for &i in idxs {
            let r = &ratings[i];
            let v = &other[other_id(r)];
            a.add_outer(v, 1.0);
            for (b, vj) in rhs.iter_mut().zip(v) {
                *b += r.value * vj;
            }
        }
        let l = cholesky(&a)?;
        *row = cholesky_solve(&l, &rhs);
    }
    Ok(())
}

pub fn als_factorize(
    ratings: &[Rating],
    d: usize,
    reg: f64,
    iters: usize,
    seed: u64,
) -> Result<Factorization> {
    als_factorize_traced(ratings, d, reg, iters, seed).map(|(f, _)| f)
}

/// Runs `iters` full sweeps (users then items) and also returns the
/// objective after every half-sweep.
pub fn als_factorize_traced(
    ratings: &[Rating],
    d: usize,
    reg: f64,
    iters: usize,
    seed: u64,
) -> Result<(Factorization, Vec<f64>)> {
    if d == 0 {
        return Err(Error::InvalidArg("factor dimension must be >= 1".into()));
    }
    if !(reg > 0.0) {
        return Err(Error::InvalidArg("ALS regularizer must be > 0".into()));
    }
    if ratings.is_empty() {
        return Err(Error::InvalidData("no ratings".into()));
    }
    let n_users = ratings.iter().map(|r| r.user).max().unwrap_or(0) + 1;
    let n_items = ratings.iter().map(|r| r.item).max().unwrap_or(0) + 1;
    let by_user = group(ratings, |r| r.user, n_users, "user")?;
    let by_item = group(ratings, |r| r.item, n_items, "item")?;

    let mut rng = Stream::seed_from_u64(seed);
    let init = Normal::new(0.0, 0.1).expect("valid normal");
    let mut f = Factorization {
        users: (0..n_users)
            .map(|_| (0..d).map(|_| init.sample(&mut rng)).collect())
            .collect(),
        items: (0..n_items)
            .map(|_| (0..d).map(|_| init.sample(&mut rng)).collect())
            .collect(),
    };
    let mut trace = Vec::with_capacity(2 * iters);
    for _ in 0..iters {
        half_sweep(
            ratings,
            &by_user,
            &f.items,
            |r| r.item,
            &mut f.users,
            d,
            reg,
        )?;
        trace.push(als_objective(ratings, &f, reg));
        half_sweep(
            ratings,
            &by_item,
            &f.users,
            |r| r.user,
            &mut f.items,
            d,
            reg,
        )?;
        trace.push(als_objective(ratings, &f, reg));
    }
    Ok((f, trace))
}
