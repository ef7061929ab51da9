//! Greedy min-fill elimination ordering.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::{GraphicalModel, VariableId};

/// A sequence of variables to sum out, each appearing once.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EliminationOrder(Vec<VariableId>);

impl EliminationOrder {
    pub fn new(order: Vec<VariableId>) -> Self {
        EliminationOrder(order)
    }

    pub fn as_slice(&self) -> &[VariableId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<VariableId> {
        self.0
    }
}

type Adjacency = BTreeMap<VariableId, BTreeSet<VariableId>>;

fn interaction_graph<'a>(scopes: impl IntoIterator<Item = &'a [VariableId]>) -> Adjacency {
    let mut adj = Adjacency::new();
    for scope in scopes {
        for &a in scope {
            let entry = adj.entry(a).or_default();
            entry.extend(scope.iter().copied().filter(|&b| b != a));
        }
    }
    adj
}

fn fill_count(adj: &Adjacency, var: VariableId) -> usize {
    let Some(nbrs) = adj.get(&var) else { return 0 };
    let nbrs: Vec<_> = nbrs.iter().collect();
    let mut missing = 0;
    for (i, a) in nbrs.iter().enumerate() {
        for b in &nbrs[i + 1..] {
            if !adj[a].contains(b) {
                missing += 1;
            }
        }
    }
    missing
}

/// Connects the neighbours of `var` and removes it; returns the number of
/// edges added.
fn eliminate_node(adj: &mut Adjacency, var: VariableId) -> usize {
    let nbrs = adj.remove(&var).unwrap_or_default();
    let mut added = 0;
    for &a in &nbrs {
        let entry = adj.get_mut(&a).expect("symmetric adjacency");
        entry.remove(&var);
        for &b in &nbrs {
            if a != b && entry.insert(b) && a < b {
                added += 1;
            }
        }
    }
    added
}

pub(crate) fn min_fill_over<'a>(
    scopes: impl IntoIterator<Item = &'a [VariableId]>,
    eliminate: &BTreeSet<VariableId>,
) -> EliminationOrder {
    let mut adj = interaction_graph(scopes);
    let mut remaining = eliminate.clone();
    let mut order = Vec::with_capacity(remaining.len());
    while !remaining.is_empty() {
        // BTreeSet iteration is ascending, so strict < keeps the lowest id on ties.
        let mut best: Option<(VariableId, usize)> = None;
        for &v in &remaining {
            let fill = fill_count(&adj, v);
            if best.is_none_or(|(_, f)| fill < f) {
                best = Some((v, fill));
                if fill == 0 {
                    break;
                }
            }
        }
        let (v, _) = best.expect("remaining is non-empty");
        eliminate_node(&mut adj, v);
        remaining.remove(&v);
        order.push(v);
    }
    EliminationOrder(order)
}

/// Greedy min-fill order for summing out `eliminate` from the model's
/// interaction graph. Ties go to the lowest variable id.
pub fn min_fill_order(model: &GraphicalModel, eliminate: &BTreeSet<VariableId>) -> EliminationOrder {
    min_fill_over(model.potentials().iter().map(|p| p.scope()), eliminate)
}

/// Number of fill edges created when eliminating `order` from the model's
/// interaction graph.
pub fn fill_edges(model: &GraphicalModel, order: &EliminationOrder) -> usize {
    let mut adj = interaction_graph(model.potentials().iter().map(|p| p.scope()));
    order.as_slice().iter().map(|&v| eliminate_node(&mut adj, v)).sum()
}
