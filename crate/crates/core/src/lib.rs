//! Robust (quasi-sure, multi-prior) no-arbitrage on finite scenario trees.
//!
//! The crate decides whether a finite discrete-time market with multiple
//! priors admits arbitrage, extracts explicit witnesses when it does, and
//! constructs the certifying objects when it does not: a dominating prior
//! whose one-step supports match the quasi-sure ones, the arbitrage-free
//! prior subclass with equal polar sets, and per-node geometric
//! certificates. All arithmetic is exact rational; every verdict is
//! cross-validated against an independent linear-programming oracle.
//!
//! Module map:
//! - [`market`]: scenario trees, priors, kernels, supports, paths;
//! - [`geom`]: exact affine/convex geometry and the simplex core;
//! - [`na`]: local/global/single-prior no-arbitrage and witnesses;
//! - [`prior`]: construction of the certifying priors and the
//!   arbitrage-free class;
//! - [`harness`]: seeded instance generation and the randomized
//!   verification harness.

pub mod geom;
pub mod harness;
pub mod market;
pub mod na;
pub mod prior;
pub mod rat;

pub use market::{KernelSelection, NodeId, Path, ProbVector, ScenarioTree, Strategy};
pub use rat::Rat;
