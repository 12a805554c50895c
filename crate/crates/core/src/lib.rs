//! An exact, desk-scale combinatorics engine for embedding tree posets into
//! families in the Boolean lattice: Lubell weights, q-marked chain families,
//! the iterative cleaning process, greedy induced embedding, balanced
//! supersaturation with degree caps, and brute-force oracles for
//! supersaturation, counting, and random Turán experiments.

pub mod chains;
pub mod cleaning;
pub mod embedding;
pub mod error;
pub mod experiments;
pub mod lattice;
pub mod poset;
pub mod rng;
pub mod supersat;

pub use error::{Error, Result};
