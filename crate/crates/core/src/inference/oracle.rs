//! Brute-force ground truth: full joint enumeration and exhaustive MMAP.

use std::collections::BTreeSet;

use super::{log_partition, OrderStrategy};
use crate::error::{Error, Result};
use crate::model::{Assignment, Evidence, GraphicalModel, Potential, VariableId};

pub const DEFAULT_ORACLE_CAP: u64 = 1 << 22;

/// Exact MMAP answer: the maximizing assignment and `P(x_M*, x_E)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MmapSolution {
    pub assignment: Assignment,
    pub probability: f64,
}

/// Exhaustive solvers, refusing any enumeration larger than `cap` states.
#[derive(Clone, Copy, Debug)]
pub struct Oracle {
    cap: u64,
}

impl Default for Oracle {
    fn default() -> Self {
        Oracle {
            cap: DEFAULT_ORACLE_CAP,
        }
    }
}

impl Oracle {
    pub fn new(cap: u64) -> Self {
        Oracle { cap }
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    fn check_cap(&self, states: u128) -> Result<()> {
        if states > self.cap as u128 {
            return Err(Error::OracleTooLarge {
                states,
                cap: self.cap,
            });
        }
        Ok(())
    }

    /// The normalized product of every potential, enumerated entry by entry
    /// over all variables in id order.
    pub fn joint(&self, model: &GraphicalModel) -> Result<Potential> {
        let vars: Vec<VariableId> = model.variables().collect();
        let total = model.state_count(&vars);
        self.check_cap(total)?;
        let cards = model.cardinalities();

        // Per-potential strides, computed independently of the factor algebra.
        let layouts: Vec<(Vec<usize>, Vec<usize>)> = model
            .potentials()
            .iter()
            .map(|p| {
                let mut strides = vec![0; p.scope().len()];
                let mut acc = 1;
                for i in (0..p.scope().len()).rev() {
                    strides[i] = acc;
                    acc *= p.dims()[i];
                }
                (p.scope().iter().map(|v| v.0).collect(), strides)
            })
            .collect();

        let mut state = vec![0usize; vars.len()];
        let mut table = Vec::with_capacity(total as usize);
        for _ in 0..total {
            let mut value = 1.0;
            for (p, (scope, strides)) in model.potentials().iter().zip(&layouts) {
                let idx: usize = scope.iter().zip(strides).map(|(&v, &s)| state[v] * s).sum();
                value *= p.table()[idx];
            }
            table.push(value);
            for d in (0..state.len()).rev() {
                state[d] += 1;
                if state[d] < cards[d] {
                    break;
                }
                state[d] = 0;
            }
        }
        let z: f64 = table.iter().sum();
        if z <= 0.0 {
            return Err(Error::ZeroProbabilityEvidence { step: None });
        }
        table.iter_mut().for_each(|v| *v /= z);
        Potential::new(vars, cards.to_vec(), table)
    }

    /// Exact marginal MAP over `explain` given `evidence`: every joint state
    /// of the explained variables is scored by summing out the rest.
    ///
    /// States are visited in lexicographic order (lowest variable id most
    /// significant) and only a strictly better score replaces the incumbent,
    /// so ties resolve to the lexicographically smallest assignment. Zero
    /// probability evidence yields probability 0 with the all-zeros
    /// assignment.
    pub fn mmap(
        &self,
        model: &GraphicalModel,
        evidence: &Evidence,
        explain: &BTreeSet<VariableId>,
    ) -> Result<MmapSolution> {
        evidence.check(model)?;
        if let Some(v) = explain.iter().find(|v| v.0 >= model.n()) {
            return Err(Error::ContractViolation(format!(
                "{v} is not a variable of a {}-variable model",
                model.n()
            )));
        }
        if let Some(v) = explain.iter().find(|v| evidence.contains(**v)) {
            return Err(Error::ContractViolation(format!(
                "{v} is both observed and explained"
            )));
        }
        let total = model.state_count(explain);
        self.check_cap(total)?;

        let log_z = log_partition(model, &Evidence::new(), OrderStrategy::MinFill)?;
        if log_z == f64::NEG_INFINITY {
            return Err(Error::ModelInconsistency(
                "model assigns zero mass to every joint state".into(),
            ));
        }
        let score = |e: &Evidence| -> Result<f64> {
            if e.is_empty() {
                return Ok(1.0);
            }
            let log_num = log_partition(model, e, OrderStrategy::MinFill)?;
            Ok(if log_num == f64::NEG_INFINITY {
                0.0
            } else {
                (log_num - log_z).exp()
            })
        };

        let vars: Vec<VariableId> = explain.iter().copied().collect();
        let mut state = vec![0usize; vars.len()];
        let mut best: Option<(Vec<usize>, f64)> = None;
        for _ in 0..total {
            let mut e = evidence.clone();
            for (&v, &s) in vars.iter().zip(&state) {
                e.observe(v, s)?;
            }
            let p = score(&e)?;
            if best.as_ref().is_none_or(|(_, b)| p > *b) {
                best = Some((state.clone(), p));
            }
            for d in (0..state.len()).rev() {
                state[d] += 1;
                if state[d] < model.cardinality(vars[d]) {
                    break;
                }
                state[d] = 0;
            }
        }
        let (states, probability) = best.expect("at least one joint state");
        Ok(MmapSolution {
            assignment: vars.into_iter().zip(states).collect(),
            probability,
        })
    }
}
