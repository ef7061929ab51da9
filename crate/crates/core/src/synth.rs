//! Random desk-scale models: pairwise grids and chains for benchmarking, and
//! unstructured models with mixed cardinalities for property tests.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{GraphicalModel, NetworkKind, Potential, VariableId};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Topology {
    Grid,
    Chain,
}

/// Parameters of a generated pairwise Markov random field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairwiseSpec {
    pub topology: Topology,
    pub rows: usize,
    pub cols: usize,
    pub cardinality: usize,
    /// Log-potentials are drawn uniformly from `[-coupling, coupling]`.
    pub coupling: f64,
    pub seed: u64,
}

impl PairwiseSpec {
    pub fn grid(rows: usize, cols: usize, cardinality: usize, seed: u64) -> Self {
        PairwiseSpec {
            topology: Topology::Grid,
            rows,
            cols,
            cardinality,
            coupling: 1.0,
            seed,
        }
    }

    pub fn chain(len: usize, cardinality: usize, seed: u64) -> Self {
        PairwiseSpec {
            topology: Topology::Chain,
            rows: 1,
            cols: len,
            cardinality,
            coupling: 1.0,
            seed,
        }
    }

    pub fn variable_count(&self) -> usize {
        self.rows * self.cols
    }
}

fn log_uniform_table<R: Rng>(rng: &mut R, len: usize, coupling: f64) -> Vec<f64> {
    (0..len)
        .map(|_| {
            if coupling > 0.0 {
                rng.gen_range(-coupling..=coupling).exp()
            } else {
                1.0
            }
        })
        .collect()
}

/// A unary potential on every variable plus one pairwise potential per edge.
/// Grids connect right and down neighbours; chains use `rows * cols`
/// variables in a line.
///
/// # Panics
/// If the model would be empty or the cardinality is 0.
pub fn pairwise_model(spec: &PairwiseSpec) -> GraphicalModel {
    assert!(spec.variable_count() > 0 && spec.cardinality > 0);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.variable_count();
    let card = spec.cardinality;

    let mut edges = Vec::new();
    match spec.topology {
        Topology::Chain => edges.extend((1..n).map(|i| (i - 1, i))),
        Topology::Grid => {
            for r in 0..spec.rows {
                for c in 0..spec.cols {
                    let i = r * spec.cols + c;
                    if c + 1 < spec.cols {
                        edges.push((i, i + 1));
                    }
                    if r + 1 < spec.rows {
                        edges.push((i, i + spec.cols));
                    }
                }
            }
        }
    }

    let mut potentials = Vec::with_capacity(n + edges.len());
    for i in 0..n {
        let table = log_uniform_table(&mut rng, card, spec.coupling);
        potentials.push(Potential::new(vec![VariableId(i)], vec![card], table).expect("valid unary"));
    }
    for (a, b) in edges {
        let table = log_uniform_table(&mut rng, card * card, spec.coupling);
        potentials.push(
            Potential::new(vec![VariableId(a), VariableId(b)], vec![card, card], table)
                .expect("valid pairwise"),
        );
    }
    GraphicalModel::new(NetworkKind::Markov, vec![card; n], potentials).expect("covered model")
}

/// A random model with `n` variables of cardinality `2..=max_card`, one
/// unary potential per variable and `extra` potentials over 2 or 3 random
/// variables. Entries are drawn from `[0.05, 1)`.
pub fn random_model<R: Rng>(rng: &mut R, n: usize, max_card: usize, extra: usize) -> GraphicalModel {
    assert!(n > 0 && max_card >= 2);
    let cards: Vec<usize> = (0..n).map(|_| rng.gen_range(2..=max_card)).collect();
    let mut tables = Vec::with_capacity(n + extra);
    for (i, &c) in cards.iter().enumerate() {
        tables.push((vec![i], (0..c).map(|_| rng.gen_range(0.05..1.0)).collect()));
    }
    for _ in 0..extra {
        let size = rng.gen_range(2..=3).min(n);
        let scope: Vec<usize> = rand::seq::index::sample(rng, n, size).into_vec();
        let len: usize = scope.iter().map(|&v| cards[v]).product();
        tables.push((scope, (0..len).map(|_| rng.gen_range(0.05..1.0)).collect()));
    }
    GraphicalModel::from_tables(NetworkKind::Markov, cards, tables).expect("covered model")
}
