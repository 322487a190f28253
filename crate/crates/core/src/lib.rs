//! Evaluation and optimization of multi-entry solutions for single-elimination
//! tournament betting pools.
//!
//! The objective throughout is the *expected maximum score* (EMS) of an entry
//! set: the expectation, over random tournament outcomes, of the score of the
//! best-performing entry. The crate provides
//!
//! - the tournament/bracket model and deterministic scoring ([`tournament`]),
//! - win-probability matrices and their propagation ([`probability`]),
//! - reproducible Monte Carlo outcome pools and EMS estimation ([`simulation`]),
//! - exact EMS by outcome enumeration and by dynamic programming ([`exact`]),
//! - entry-selection algorithms and MILP model export ([`optimize`], [`lp`]),
//! - worst-case guarantee constructions ([`bounds`]),
//! - field evaluation against opponent entry sets ([`pool_eval`]),
//! - text/binary file formats ([`io`]) and runtime configuration ([`config`]).
//!
//! All types are immutable after construction and all operations are pure
//! functions of their inputs (plus an explicit seed where randomness is
//! involved), so results are reproducible bit-for-bit at any parallelism
//! level.

pub mod bounds;
pub mod config;
pub mod exact;
pub mod io;
pub mod lp;
pub mod optimize;
pub mod pool_eval;
pub mod probability;
pub mod rng;
pub mod simulation;
pub mod tournament;

#[cfg(test)]
pub(crate) mod testutil;

pub use tournament::{Bracket, EntrySet, GameId, TeamId, Tournament};
