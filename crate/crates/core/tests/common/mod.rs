#![allow(dead_code)]

use std::collections::BTreeMap;

use mmap_core::{Assignment, Evidence, GraphicalModel, Potential, VariableId};
use rand::Rng;

/// Table lookup by a from-scratch row-major index, independent of the
/// factor algebra under test.
pub fn entry(p: &Potential, states: &Assignment) -> f64 {
    let mut idx = 0;
    for (v, d) in p.scope().iter().zip(p.dims()) {
        idx = idx * d + states[v];
    }
    p.table()[idx]
}

/// Same lookup with a dense state vector indexed by variable id.
pub fn entry_dense(p: &Potential, states: &[usize]) -> f64 {
    let mut idx = 0;
    for (v, d) in p.scope().iter().zip(p.dims()) {
        idx = idx * d + states[v.0];
    }
    p.table()[idx]
}

/// Every joint state over `vars` with the given cardinalities, first
/// variable most significant.
pub fn all_states(vars: &[VariableId], cards: &[usize]) -> Vec<Assignment> {
    let mut out = vec![Assignment::new()];
    for (&v, &c) in vars.iter().zip(cards) {
        out = out
            .into_iter()
            .flat_map(|a| {
                (0..c).map(move |s| {
                    let mut a = a.clone();
                    a.insert(v, s);
                    a
                })
            })
            .collect();
    }
    out
}

/// Calls `f` with every dense joint state of the model and its
/// unnormalized weight.
pub fn for_each_joint(m: &GraphicalModel, mut f: impl FnMut(&[usize], f64)) {
    let cards = m.cardinalities();
    let mut s = vec![0usize; cards.len()];
    loop {
        let w: f64 = m.potentials().iter().map(|p| entry_dense(p, &s)).product();
        f(&s, w);
        let mut d = cards.len();
        loop {
            if d == 0 {
                return;
            }
            d -= 1;
            s[d] += 1;
            if s[d] < cards[d] {
                break;
            }
            s[d] = 0;
        }
    }
}

/// Unnormalized product of all potentials at a full joint state.
pub fn weight(m: &GraphicalModel, states: &Assignment) -> f64 {
    m.potentials().iter().map(|p| entry(p, states)).product()
}

fn consistent(s: &[usize], e: &Evidence) -> bool {
    e.iter().all(|(v, x)| s[v.0] == x)
}

/// `P(x_E)` by summing the full joint.
pub fn brute_pr(m: &GraphicalModel, e: &Evidence) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for_each_joint(m, |s, w| {
        den += w;
        if consistent(s, e) {
            num += w;
        }
    });
    num / den
}

/// `P(var | x_E)` by summing the full joint.
pub fn brute_mar(m: &GraphicalModel, e: &Evidence, var: VariableId) -> Vec<f64> {
    let mut acc = vec![0.0; m.cardinality(var)];
    for_each_joint(m, |s, w| {
        if consistent(s, e) {
            acc[s[var.0]] += w;
        }
    });
    let z: f64 = acc.iter().sum();
    acc.iter().map(|a| a / z).collect()
}

/// Exact MMAP by summing the full joint into the explained variables:
/// returns the maximizing states (in variable order, ties to the
/// lexicographically smallest) and `P(x_M, x_E)`.
pub fn brute_mmap(m: &GraphicalModel, e: &Evidence, explain: &[VariableId]) -> (Vec<usize>, f64) {
    let mut scores: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    let mut z = 0.0;
    for_each_joint(m, |s, w| {
        z += w;
        if consistent(s, e) {
            *scores.entry(explain.iter().map(|v| s[v.0]).collect()).or_default() += w;
        }
    });
    let mut best = (Vec::new(), -1.0);
    for (x, w) in scores {
        if w / z > best.1 {
            best = (x, w / z);
        }
    }
    best
}

pub fn random_potential<R: Rng>(rng: &mut R, scope: &[usize], cards: &BTreeMap<usize, usize>) -> Potential {
    let dims: Vec<usize> = scope.iter().map(|v| cards[v]).collect();
    let len = dims.iter().product();
    let table = (0..len).map(|_| rng.gen_range(0.0..1.0)).collect();
    Potential::new(scope.iter().copied().map(VariableId).collect(), dims, table).unwrap()
}

/// Random evidence on `k` distinct variables.
pub fn random_evidence<R: Rng>(rng: &mut R, m: &GraphicalModel, k: usize) -> Evidence {
    let vars = rand::seq::index::sample(rng, m.n(), k).into_vec();
    Evidence::from_pairs(vars.into_iter().map(|v| (v, rng.gen_range(0..m.cardinalities()[v])))).unwrap()
}
