//! Joint inference over relation-extraction candidates.
//!
//! Sentence-level relation scores are aggregated into per-pair candidates,
//! clues mined from a knowledge base are instantiated as at-most-one
//! constraints, and a 0-1 integer program selects a consistent set of
//! predictions. Baselines and precision-recall evaluation live in [`eval`];
//! [`testbed`] generates seeded synthetic worlds.

pub mod candidates;
pub mod clues;
pub mod config;
pub mod constraints;
pub mod error;
pub mod eval;
pub mod ilp;
pub mod kb_store;
pub mod pipeline;
pub mod testbed;

pub use error::{Error, Result};
