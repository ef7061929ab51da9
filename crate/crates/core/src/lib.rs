//! Approximate marginal MAP for discrete graphical models by a sequence of
//! single-variable marginal computations, with an entropy-based confidence
//! score, exact brute-force oracles, UAI file I/O and a benchmark harness.

pub mod error;
pub mod harness;
pub mod heuristic;
pub mod inference;
pub mod model;
pub mod synth;
pub mod uai;

pub use error::{Error, Result};
pub use heuristic::{
    confidence, epsilon_mmap2mar, mmap2mar, ExplanationStep, ExplanationTrace, HeuristicConfig,
};
pub use inference::{
    entropy, mar, min_fill_order, pr, EliminationOrder, MmapSolution, Oracle, OrderStrategy,
};
pub use model::{
    Assignment, Evidence, GraphicalModel, MassFunction, NetworkKind, Potential, VariableId,
};
