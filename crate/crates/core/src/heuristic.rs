//! Greedy marginal MAP through repeated single-variable marginals.
//!
//! Each round computes the posterior marginal of every variable still to be
//! explained, picks the least entropic one, and commits its most probable
//! state to the working evidence. Without a threshold this runs until every
//! variable is explained, costing `k(k+1)/2` marginal computations for `k`
//! variables. With a threshold `epsilon` the loop stops the first time the
//! smallest entropy is not strictly below `epsilon`, leaving the remaining
//! variables unexplained.
//!
//! The score of the result, `p_tilde`, is the joint probability of the
//! committed states and the original evidence. By the chain rule it is the
//! product of `P(x_E)` and the marginal probabilities of the chosen states,
//! which never exceeds the exact MMAP value over the same variables.
//!
//! Ties are broken towards the lowest variable id (entropy) and the lowest
//! state index (argmax).

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::inference::{entropy, mar, pr};
use crate::model::{Assignment, Evidence, GraphicalModel, MassFunction, VariableId};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct HeuristicConfig {
    epsilon: Option<f64>,
}

impl HeuristicConfig {
    /// Explain every variable, whatever the entropies.
    pub fn exhaustive() -> Self {
        HeuristicConfig { epsilon: None }
    }

    /// Stop once the least entropic marginal reaches `epsilon`.
    pub fn with_epsilon(epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::ContractViolation(format!(
                "entropy threshold {epsilon} outside [0, 1]"
            )));
        }
        Ok(HeuristicConfig {
            epsilon: Some(epsilon),
        })
    }

    pub fn epsilon(&self) -> Option<f64> {
        self.epsilon
    }
}

/// One committed decision.
#[derive(Clone, Debug, PartialEq)]
pub struct ExplanationStep {
    pub variable: VariableId,
    pub chosen_state: usize,
    pub entropy: f64,
    /// The posterior marginal the decision was taken from.
    pub marginal: MassFunction,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExplanationTrace {
    /// Committed decisions in the order they were taken.
    pub steps: Vec<ExplanationStep>,
    pub explained: Assignment,
    /// Variables left open when the threshold stopped the loop.
    pub unexplained: BTreeSet<VariableId>,
    /// Joint probability of the explained states together with the evidence.
    pub p_tilde: f64,
    /// Minimum of `1 - entropy` over the committed steps, 1 when none.
    pub confidence: f64,
    /// Smallest entropy of the round that stopped the loop, if it stopped early.
    pub break_entropy: Option<f64>,
    pub mar_calls: usize,
    /// Time spent inside marginal computations.
    pub mar_time: Duration,
}

impl ExplanationTrace {
    pub fn is_complete(&self) -> bool {
        self.unexplained.is_empty()
    }
}

/// Minimum information gain over the committed steps.
pub fn confidence(steps: &[ExplanationStep]) -> f64 {
    steps
        .iter()
        .map(|s| 1.0 - s.entropy)
        .fold(1.0, f64::min)
}

/// Explains every variable of `explain`.
pub fn mmap2mar(
    model: &GraphicalModel,
    explain: &BTreeSet<VariableId>,
    evidence: &Evidence,
) -> Result<ExplanationTrace> {
    run(model, explain, evidence, HeuristicConfig::exhaustive())
}

/// Explains variables only while the least entropic marginal is strictly
/// below `epsilon`.
pub fn epsilon_mmap2mar(
    model: &GraphicalModel,
    explain: &BTreeSet<VariableId>,
    evidence: &Evidence,
    epsilon: f64,
) -> Result<ExplanationTrace> {
    run(model, explain, evidence, HeuristicConfig::with_epsilon(epsilon)?)
}

fn check_inputs(model: &GraphicalModel, explain: &BTreeSet<VariableId>, evidence: &Evidence) -> Result<()> {
    evidence.check(model)?;
    if explain.is_empty() {
        return Err(Error::ContractViolation("nothing to explain".into()));
    }
    for &v in explain {
        if v.0 >= model.n() {
            return Err(Error::ContractViolation(format!(
                "{v} is not a variable of a {}-variable model",
                model.n()
            )));
        }
        if evidence.contains(v) {
            return Err(Error::ContractViolation(format!(
                "{v} is both observed and explained"
            )));
        }
        if model.cardinality(v) < 2 {
            return Err(Error::ContractViolation(format!(
                "{v} has a single state and cannot be explained"
            )));
        }
    }
    Ok(())
}

pub fn run(
    model: &GraphicalModel,
    explain: &BTreeSet<VariableId>,
    evidence: &Evidence,
    config: HeuristicConfig,
) -> Result<ExplanationTrace> {
    check_inputs(model, explain, evidence)?;

    let mut remaining = explain.clone();
    let mut working = evidence.clone();
    let mut steps = Vec::with_capacity(explain.len());
    let mut break_entropy = None;
    let mut mar_calls = 0;
    let mut mar_time = Duration::ZERO;

    while !remaining.is_empty() {
        let round = steps.len();
        let mut best: Option<(MassFunction, f64)> = None;
        for &var in &remaining {
            let started = Instant::now();
            let marginal = mar(model, &working, var).map_err(|e| match e {
                Error::ZeroProbabilityEvidence { .. } => Error::ZeroProbabilityEvidence { step: Some(round) },
                other => other,
            });
            mar_time += started.elapsed();
            mar_calls += 1;
            let marginal = marginal?;
            let h = entropy(&marginal);
            // Ascending iteration plus strict < keeps the lowest id on ties.
            if best.as_ref().is_none_or(|(_, b)| h < *b) {
                best = Some((marginal, h));
            }
        }
        let (marginal, h) = best.expect("remaining is non-empty");
        if let Some(eps) = config.epsilon {
            if h >= eps {
                break_entropy = Some(h);
                break;
            }
        }
        let variable = marginal.variable();
        let chosen_state = marginal.argmax();
        working.observe(variable, chosen_state)?;
        remaining.remove(&variable);
        steps.push(ExplanationStep {
            variable,
            chosen_state,
            entropy: h,
            marginal,
        });
    }

    let p_tilde = steps
        .iter()
        .map(|s| s.marginal.probs()[s.chosen_state])
        .fold(pr(model, evidence)?, |acc, p| acc * p);
    let explained = steps.iter().map(|s| (s.variable, s.chosen_state)).collect();
    Ok(ExplanationTrace {
        confidence: confidence(&steps),
        steps,
        explained,
        unexplained: remaining,
        p_tilde,
        break_entropy,
        mar_calls,
        mar_time,
    })
}
