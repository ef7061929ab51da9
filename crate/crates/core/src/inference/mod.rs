//! Exact PR and MAR by variable elimination, the normalized entropy, and the
//! brute-force oracles used as ground truth.

mod order;
mod oracle;

use std::collections::BTreeSet;

pub use order::{fill_edges, min_fill_order, EliminationOrder};
pub use oracle::{MmapSolution, Oracle, DEFAULT_ORACLE_CAP};

use crate::error::{Error, Result};
use crate::model::{Evidence, GraphicalModel, MassFunction, Potential, VariableId};

/// How variable elimination picks its order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OrderStrategy {
    #[default]
    MinFill,
    /// Ascending variable id.
    Identity,
}

/// Result of eliminating a set of variables: the leftover factors together
/// with the log of the scale removed from intermediate factors.
struct Reduced {
    factors: Vec<Potential>,
    log_scale: f64,
}

impl Reduced {
    fn zero() -> Self {
        Reduced {
            factors: vec![Potential::scalar(0.0)],
            log_scale: 0.0,
        }
    }

    /// Multiplies the leftovers into a single rescaled potential; returns it
    /// with the total log scale.
    fn collapse(self) -> Result<(Potential, f64)> {
        let mut acc = Potential::scalar(1.0);
        for f in &self.factors {
            acc = acc.product(f)?;
        }
        let max = acc.rescale();
        if max == 0.0 {
            return Ok((acc, f64::NEG_INFINITY));
        }
        Ok((acc, self.log_scale + max.ln()))
    }
}

fn restricted_factors(model: &GraphicalModel, evidence: &Evidence) -> Result<Vec<Potential>> {
    model.potentials().iter().map(|p| p.restrict(evidence)).collect()
}

/// Sums out every variable of `factors` except those in `keep`, rescaling
/// each intermediate factor to a maximum entry of 1.
fn eliminate_all_but(
    mut factors: Vec<Potential>,
    keep: &BTreeSet<VariableId>,
    strategy: OrderStrategy,
) -> Result<Reduced> {
    let eliminate: BTreeSet<VariableId> = factors
        .iter()
        .flat_map(|f| f.scope().iter().copied())
        .filter(|v| !keep.contains(v))
        .collect();
    let order = match strategy {
        OrderStrategy::MinFill => {
            order::min_fill_over(factors.iter().map(|f| f.scope()), &eliminate).into_vec()
        }
        OrderStrategy::Identity => eliminate.into_iter().collect(),
    };

    let mut log_scale = 0.0;
    for var in order {
        let (bucket, rest): (Vec<_>, Vec<_>) = factors.into_iter().partition(|f| f.contains(var));
        factors = rest;
        let mut prod = Potential::scalar(1.0);
        for f in &bucket {
            prod = prod.product(f)?;
        }
        let mut msg = prod.marginalize(&[var])?;
        let max = msg.rescale();
        if max == 0.0 {
            return Ok(Reduced::zero());
        }
        log_scale += max.ln();
        factors.push(msg);
    }
    Ok(Reduced { factors, log_scale })
}

/// Natural log of the unnormalized mass consistent with `evidence`
/// (negative infinity when it is zero).
pub(crate) fn log_partition(
    model: &GraphicalModel,
    evidence: &Evidence,
    strategy: OrderStrategy,
) -> Result<f64> {
    let factors = restricted_factors(model, evidence)?;
    let (_, log_z) = eliminate_all_but(factors, &BTreeSet::new(), strategy)?.collapse()?;
    Ok(log_z)
}

/// Probability of the evidence, `P(x_E)`, with the default min-fill order.
pub fn pr(model: &GraphicalModel, evidence: &Evidence) -> Result<f64> {
    pr_with(model, evidence, OrderStrategy::default())
}

pub fn pr_with(model: &GraphicalModel, evidence: &Evidence, strategy: OrderStrategy) -> Result<f64> {
    evidence.check(model)?;
    if evidence.is_empty() {
        return Ok(1.0);
    }
    let log_num = log_partition(model, evidence, strategy)?;
    if log_num == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    let log_den = log_partition(model, &Evidence::new(), strategy)?;
    if log_den == f64::NEG_INFINITY {
        return Err(Error::ModelInconsistency(
            "model assigns zero mass to every joint state".into(),
        ));
    }
    Ok((log_num - log_den).exp())
}

/// Posterior marginal `P(X | x_E)` of one unobserved variable, with the
/// default min-fill order.
pub fn mar(model: &GraphicalModel, evidence: &Evidence, var: VariableId) -> Result<MassFunction> {
    mar_with(model, evidence, var, OrderStrategy::default())
}

pub fn mar_with(
    model: &GraphicalModel,
    evidence: &Evidence,
    var: VariableId,
    strategy: OrderStrategy,
) -> Result<MassFunction> {
    evidence.check(model)?;
    if var.0 >= model.n() {
        return Err(Error::ContractViolation(format!(
            "{var} is not a variable of a {}-variable model",
            model.n()
        )));
    }
    if evidence.contains(var) {
        return Err(Error::ContractViolation(format!("{var} is observed")));
    }
    let factors = restricted_factors(model, evidence)?;
    let keep = BTreeSet::from([var]);
    let (marginal, _) = eliminate_all_but(factors, &keep, strategy)?.collapse()?;
    if marginal.scope().is_empty() {
        // Only reachable through a zero-mass shortcut.
        return Err(Error::ZeroProbabilityEvidence { step: None });
    }
    marginal.normalize()
}

/// The same marginal computed the long way: one PR call per state of `var`,
/// then normalization.
pub fn mar_via_pr(model: &GraphicalModel, evidence: &Evidence, var: VariableId) -> Result<MassFunction> {
    if evidence.contains(var) {
        return Err(Error::ContractViolation(format!("{var} is observed")));
    }
    let joint = (0..model.cardinality(var))
        .map(|s| pr(model, &evidence.with(var, s)?))
        .collect::<Result<Vec<_>>>()?;
    Potential::new(vec![var], vec![model.cardinality(var)], joint)?.normalize()
}

/// Normalized entropy with logarithm base equal to the cardinality, so the
/// value lies in `[0, 1]`. Uses `0 log 0 = 0`; a single-state variable has
/// entropy 0.
pub fn entropy(mass: &MassFunction) -> f64 {
    let k = mass.cardinality();
    if k < 2 {
        return 0.0;
    }
    let nats: f64 = mass
        .probs()
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum();
    (nats / (k as f64).ln()).clamp(0.0, 1.0)
}
