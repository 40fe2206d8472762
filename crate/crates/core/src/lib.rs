//! Online hyper-parameter tuning for contextual bandits.
//!
//! Base policies ([`policies`]) are LinUCB, LinTS and UCB-GLM. A [`tuner`]
//! picks their exploration rate and regularizer each round with EXP3
//! ([`exp3`]), either over one set, over the product of several sets, or with
//! one independent layer per hyper-parameter. [`envs`] provides synthetic and
//! replay environments and [`harness`] runs seeded repeats and writes CSV.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Index loops mirror the textbook form of the dense linear algebra.
#![allow(clippy::needless_range_loop)]

pub mod envs;
pub mod error;
pub mod exp3;
pub mod harness;
pub mod numkit;
pub mod policies;
pub mod seeding;
pub mod tuner;

pub use error::{Error, Result};
