//! Risk-aware scene sampling.
//!
//! A campaign searches a constrained space of scene variables for scenes the
//! bow-tie risk model scores above a threshold. Five samplers are available:
//! three passive baselines (random, grid, Halton) and two active searchers
//! that use the risk of the previous scene as feedback (random neighborhood
//! search and GP-guided UCB search).

pub mod bowtie;
pub mod campaign;
pub mod dsl;
pub mod harness;
pub mod lexer;
pub mod metrics;
pub mod samplers;
pub mod scene;

/// Bow-tie model used when a campaign names none.
pub const BUNDLED_MODEL: &str = include_str!("../data/roadway.bowtie");
/// Two-bump synthetic landscape used when a campaign names no evaluator.
pub const BUNDLED_LANDSCAPE: &str = include_str!("../data/two_bump.landscape");
/// Demo campaign over the urban driving scene variables.
pub const DEMO_SPEC: &str = include_str!("../data/demo.campaign");
