//! Fixtures shared by the criterion benches.

use std::collections::BTreeSet;

use mmap_core::synth::{pairwise_model, PairwiseSpec};
use mmap_core::{Evidence, GraphicalModel, VariableId};

/// A binary grid with the first `observed` variables clamped to state 0 and
/// every other variable to be explained.
pub fn grid_instance(rows: usize, cols: usize, observed: usize, seed: u64) -> (GraphicalModel, Evidence, BTreeSet<VariableId>) {
    let model = pairwise_model(&PairwiseSpec::grid(rows, cols, 2, seed));
    let evidence = Evidence::from_pairs((0..observed).map(|v| (v, 0))).expect("distinct variables");
    let explain = model.variables().filter(|v| !evidence.contains(*v)).collect();
    (model, evidence, explain)
}
