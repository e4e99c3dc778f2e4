//! Two-phase cooperative transmission over Rayleigh fading channels.
//!
//! A cluster of `K` single-antenna nodes first shares its data over an
//! intra-cluster broadcast channel, then transmits jointly to an `M`-antenna
//! receiver using random beamforming weights. This crate holds the pure
//! models: channel generation ([`chanmodel`]), beamforming and combining
//! ([`beamform`]), outage estimation ([`outage`]), the power budget and its
//! optimization ([`powerplan`]) and an equal-power MIMO comparator
//! ([`baseline`]).
//!
//! The crate is `no_std` and only needs `alloc`. Monte Carlo loops are
//! expressed over trial ranges through the [`exec::Executor`] trait, so a
//! host crate can fan them out over threads while keeping results identical
//! for any worker count.

#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` also rejects NaN, which is the point.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod baseline;
pub mod beamform;
pub mod chanmodel;
mod error;
pub mod exec;
pub mod outage;
pub mod powerplan;
pub mod rng;
pub mod special;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Converts decibels to a linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    libm::pow(10.0, db / 10.0)
}
