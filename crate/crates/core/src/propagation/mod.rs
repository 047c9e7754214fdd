//! Labeled matching graphs, the closure `R(S)`, and seed search.

pub mod cleanup;
pub mod closure;
pub mod generate;
pub mod graph;
pub mod seed;

use thiserror::Error;

pub use cleanup::{check_cleanup_precondition, cleanup, CleanupResult};
pub use closure::{closure, ClosureState};
pub use generate::{gen_instance, Instance, InstanceKind, InstanceParams};
pub use graph::{
    Augmented, HadamardMatchings, InstanceJson, LabeledMatchingGraph, MatchingGraph, Restricted, RoundRobinMatchings,
};
pub use seed::{check_near_cover, find_seed, grow_seed, GrowResult, GrowStrategy, SeedOptions, SeedStep, SeedTrace, StepKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PropagationError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("vertex {vertex} out of range for n = {n}")]
    OutOfRange { vertex: usize, n: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("internal invariant failed: {0}")]
    Invariant(String),
}
