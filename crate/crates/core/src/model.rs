//! Discrete variables, potentials and the factor algebra everything else is
//! built on.
//!
//! Tables are laid out row-major with the last scope variable varying
//! fastest, the same layout UAI files use.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};

/// Dense index of a variable inside its model, `0..n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VariableId(pub usize);

impl VariableId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl From<usize> for VariableId {
    fn from(i: usize) -> Self {
        VariableId(i)
    }
}

impl fmt::Display for VariableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "X{}", self.0)
    }
}

/// A full or partial assignment of states to variables.
pub type Assignment = BTreeMap<VariableId, usize>;

/// Walks every joint state of `dims` in row-major order while tracking one
/// flat offset per attached stride vector.
struct Odometer {
    dims: Vec<usize>,
    strides: Vec<Vec<usize>>,
    counter: Vec<usize>,
    offsets: Vec<usize>,
}

impl Odometer {
    fn new(dims: Vec<usize>, strides: Vec<Vec<usize>>, base: Vec<usize>) -> Self {
        debug_assert!(strides.iter().all(|s| s.len() == dims.len()));
        Odometer {
            counter: vec![0; dims.len()],
            dims,
            strides,
            offsets: base,
        }
    }

    #[inline]
    fn offset(&self, which: usize) -> usize {
        self.offsets[which]
    }

    #[inline]
    fn advance(&mut self) {
        for d in (0..self.dims.len()).rev() {
            self.counter[d] += 1;
            for (off, s) in self.offsets.iter_mut().zip(&self.strides) {
                *off += s[d];
            }
            if self.counter[d] < self.dims[d] {
                return;
            }
            for (off, s) in self.offsets.iter_mut().zip(&self.strides) {
                *off -= s[d] * self.dims[d];
            }
            self.counter[d] = 0;
        }
    }
}

fn row_major_strides(dims: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    strides
}

/// An unnormalized, non-negative table over an ordered scope.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    scope: Vec<VariableId>,
    dims: Vec<usize>,
    table: Vec<f64>,
}

impl Potential {
    /// Builds a potential, checking that `dims` matches `scope`, the scope has
    /// no duplicates, and the table has the right length with finite
    /// non-negative entries.
    pub fn new(scope: Vec<VariableId>, dims: Vec<usize>, table: Vec<f64>) -> Result<Self> {
        if scope.len() != dims.len() {
            return Err(Error::ModelInconsistency(format!(
                "scope has {} variables but {} cardinalities were given",
                scope.len(),
                dims.len()
            )));
        }
        let distinct: BTreeSet<_> = scope.iter().collect();
        if distinct.len() != scope.len() {
            return Err(Error::ModelInconsistency(format!(
                "duplicate variable in scope {scope:?}"
            )));
        }
        if let Some(&d) = dims.iter().find(|&&d| d == 0) {
            return Err(Error::ModelInconsistency(format!(
                "cardinality {d} in potential scope"
            )));
        }
        let expected: usize = dims.iter().product();
        if table.len() != expected {
            return Err(Error::ModelInconsistency(format!(
                "table has {} entries, scope {:?} needs {}",
                table.len(),
                scope,
                expected
            )));
        }
        if let Some(v) = table.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::ModelInconsistency(format!(
                "table entry {v} is not a finite non-negative real"
            )));
        }
        Ok(Potential { scope, dims, table })
    }

    /// Empty-scope potential holding a single value.
    pub fn scalar(value: f64) -> Self {
        Potential {
            scope: Vec::new(),
            dims: Vec::new(),
            table: vec![value],
        }
    }

    pub fn ones(scope: Vec<VariableId>, dims: Vec<usize>) -> Result<Self> {
        let len = dims.iter().product();
        Self::new(scope, dims, vec![1.0; len])
    }

    pub fn scope(&self) -> &[VariableId] {
        &self.scope
    }

    /// Cardinalities of the scope variables, in scope order.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn contains(&self, var: VariableId) -> bool {
        self.scope.contains(&var)
    }

    pub fn sum(&self) -> f64 {
        self.table.iter().sum()
    }

    fn position(&self, var: VariableId) -> Option<usize> {
        self.scope.iter().position(|&v| v == var)
    }

    /// Looks up the entry for a joint state. `states` must assign every scope
    /// variable; extra entries are ignored.
    pub fn value(&self, states: &Assignment) -> Result<f64> {
        let strides = row_major_strides(&self.dims);
        let mut idx = 0;
        for ((var, &dim), stride) in self.scope.iter().zip(&self.dims).zip(strides) {
            let s = *states.get(var).ok_or_else(|| {
                Error::ContractViolation(format!("no state given for {var}"))
            })?;
            if s >= dim {
                return Err(Error::ContractViolation(format!(
                    "state {s} out of range for {var} with cardinality {dim}"
                )));
            }
            idx += s * stride;
        }
        Ok(self.table[idx])
    }

    /// Potential over the union of both scopes (this scope first, then the
    /// new variables of `other` in their order), each entry the product of
    /// the aligned entries.
    pub fn product(&self, other: &Potential) -> Result<Potential> {
        let mut scope = self.scope.clone();
        let mut dims = self.dims.clone();
        for (&v, &d) in other.scope.iter().zip(&other.dims) {
            match self.position(v) {
                Some(p) if self.dims[p] != d => {
                    return Err(Error::ModelInconsistency(format!(
                        "{v} has cardinality {} in one factor and {d} in the other",
                        self.dims[p]
                    )))
                }
                Some(_) => {}
                None => {
                    scope.push(v);
                    dims.push(d);
                }
            }
        }

        let aligned = |p: &Potential| -> Vec<usize> {
            let own = row_major_strides(&p.dims);
            scope
                .iter()
                .map(|&v| p.position(v).map_or(0, |i| own[i]))
                .collect()
        };
        let len: usize = dims.iter().product();
        let mut table = Vec::with_capacity(len);
        let mut odo = Odometer::new(dims.clone(), vec![aligned(self), aligned(other)], vec![0, 0]);
        for _ in 0..len {
            table.push(self.table[odo.offset(0)] * other.table[odo.offset(1)]);
            odo.advance();
        }
        Ok(Potential { scope, dims, table })
    }

    /// Sums out every variable in `out`. Summing out the whole scope leaves a
    /// scalar potential.
    pub fn marginalize(&self, out: &[VariableId]) -> Result<Potential> {
        if let Some(v) = out.iter().find(|v| !self.contains(**v)) {
            return Err(Error::ContractViolation(format!(
                "cannot sum out {v}: not in scope {:?}",
                self.scope
            )));
        }
        if out.is_empty() {
            return Ok(self.clone());
        }
        let keep: Vec<usize> = (0..self.scope.len())
            .filter(|&i| !out.contains(&self.scope[i]))
            .collect();
        let scope: Vec<_> = keep.iter().map(|&i| self.scope[i]).collect();
        let dims: Vec<_> = keep.iter().map(|&i| self.dims[i]).collect();
        let kept_strides = row_major_strides(&dims);

        let mut out_strides = vec![0; self.scope.len()];
        for (k, &i) in keep.iter().enumerate() {
            out_strides[i] = kept_strides[k];
        }
        let mut table = vec![0.0; dims.iter().product()];
        let mut odo = Odometer::new(self.dims.clone(), vec![out_strides], vec![0]);
        for &v in &self.table {
            table[odo.offset(0)] += v;
            odo.advance();
        }
        Ok(Potential { scope, dims, table })
    }

    /// Conditions on `evidence`: keeps the slice consistent with it and drops
    /// the observed variables from the scope. Evidence on variables outside
    /// the scope is ignored.
    pub fn restrict(&self, evidence: &Evidence) -> Result<Potential> {
        let own = row_major_strides(&self.dims);
        let mut base = 0;
        let mut scope = Vec::new();
        let mut dims = Vec::new();
        let mut strides = Vec::new();
        for (i, &v) in self.scope.iter().enumerate() {
            match evidence.get(v) {
                Some(s) if s >= self.dims[i] => {
                    return Err(Error::ContractViolation(format!(
                        "evidence state {s} out of range for {v} with cardinality {}",
                        self.dims[i]
                    )))
                }
                Some(s) => base += s * own[i],
                None => {
                    scope.push(v);
                    dims.push(self.dims[i]);
                    strides.push(own[i]);
                }
            }
        }
        if scope.len() == self.scope.len() {
            return Ok(self.clone());
        }
        let len: usize = dims.iter().product();
        let mut table = Vec::with_capacity(len);
        let mut odo = Odometer::new(dims.clone(), vec![strides], vec![base]);
        for _ in 0..len {
            table.push(self.table[odo.offset(0)]);
            odo.advance();
        }
        Ok(Potential { scope, dims, table })
    }

    /// Divides the table by its largest entry and returns that entry. An
    /// all-zero table is left untouched and 0 is returned.
    pub fn rescale(&mut self) -> f64 {
        let max = self.table.iter().copied().fold(0.0, f64::max);
        if max > 0.0 && max != 1.0 {
            self.table.iter_mut().for_each(|v| *v /= max);
        }
        max
    }

    /// Turns a single-variable potential into a mass function.
    pub fn normalize(&self) -> Result<MassFunction> {
        let [variable] = self.scope[..] else {
            return Err(Error::ContractViolation(format!(
                "normalize needs a single-variable potential, scope is {:?}",
                self.scope
            )));
        };
        let total = self.sum();
        if total <= 0.0 {
            return Err(Error::ZeroProbabilityEvidence { step: None });
        }
        let probs = self.table.iter().map(|v| v / total).collect();
        MassFunction::new(variable, probs)
    }
}

/// Source semantics of a model file. Both are handled as plain potential sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NetworkKind {
    Markov,
    Bayes,
}

impl NetworkKind {
    pub fn keyword(self) -> &'static str {
        match self {
            NetworkKind::Markov => "MARKOV",
            NetworkKind::Bayes => "BAYES",
        }
    }
}

/// A set of potentials whose scopes together cover every variable.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphicalModel {
    cardinalities: Vec<usize>,
    potentials: Vec<Potential>,
    kind: NetworkKind,
}

impl GraphicalModel {
    pub fn new(
        kind: NetworkKind,
        cardinalities: Vec<usize>,
        potentials: Vec<Potential>,
    ) -> Result<Self> {
        let n = cardinalities.len();
        if n == 0 {
            return Err(Error::ModelInconsistency("model has no variables".into()));
        }
        if let Some(i) = cardinalities.iter().position(|&c| c == 0) {
            return Err(Error::ModelInconsistency(format!(
                "variable X{i} has cardinality 0"
            )));
        }
        let mut covered = vec![false; n];
        for (f, p) in potentials.iter().enumerate() {
            for (&v, &d) in p.scope().iter().zip(p.dims()) {
                if v.0 >= n {
                    return Err(Error::ModelInconsistency(format!(
                        "potential {f} references {v} but the model has {n} variables"
                    )));
                }
                if cardinalities[v.0] != d {
                    return Err(Error::ModelInconsistency(format!(
                        "potential {f} gives {v} cardinality {d}, model says {}",
                        cardinalities[v.0]
                    )));
                }
                covered[v.0] = true;
            }
        }
        if let Some(i) = covered.iter().position(|c| !c) {
            return Err(Error::ModelInconsistency(format!(
                "variable X{i} is not in any potential scope"
            )));
        }
        Ok(GraphicalModel {
            cardinalities,
            potentials,
            kind,
        })
    }

    /// Convenience constructor from `(scope, table)` pairs; cardinalities of
    /// each scope are taken from `cardinalities`.
    pub fn from_tables(
        kind: NetworkKind,
        cardinalities: Vec<usize>,
        tables: Vec<(Vec<usize>, Vec<f64>)>,
    ) -> Result<Self> {
        let potentials = tables
            .into_iter()
            .map(|(scope, table)| {
                let dims = scope
                    .iter()
                    .map(|&v| {
                        cardinalities.get(v).copied().ok_or_else(|| {
                            Error::ModelInconsistency(format!(
                                "scope references X{v} but the model has {} variables",
                                cardinalities.len()
                            ))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Potential::new(scope.into_iter().map(VariableId).collect(), dims, table)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(kind, cardinalities, potentials)
    }

    pub fn kind(&self) -> NetworkKind {
        self.kind
    }

    /// Number of variables.
    pub fn n(&self) -> usize {
        self.cardinalities.len()
    }

    /// Number of potentials.
    pub fn f(&self) -> usize {
        self.potentials.len()
    }

    /// Largest variable cardinality.
    pub fn max_cardinality(&self) -> usize {
        self.cardinalities.iter().copied().max().unwrap_or(0)
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cardinalities
    }

    pub fn cardinality(&self, var: VariableId) -> usize {
        self.cardinalities[var.0]
    }

    pub fn potentials(&self) -> &[Potential] {
        &self.potentials
    }

    pub fn variables(&self) -> impl Iterator<Item = VariableId> + '_ {
        (0..self.n()).map(VariableId)
    }

    /// Number of joint states over `vars`, saturating into `u128`.
    pub fn state_count<'a>(&self, vars: impl IntoIterator<Item = &'a VariableId>) -> u128 {
        vars.into_iter()
            .map(|v| self.cardinality(*v) as u128)
            .fold(1u128, |acc, c| acc.saturating_mul(c))
    }
}

/// Observed states for a subset of the variables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Evidence {
    observed: Assignment,
}

impl Evidence {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds evidence from `(variable, state)` pairs, rejecting repeats.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut e = Evidence::new();
        for (v, s) in pairs {
            e.observe(VariableId(v), s)?;
        }
        Ok(e)
    }

    pub fn observe(&mut self, var: VariableId, state: usize) -> Result<()> {
        if self.observed.insert(var, state).is_some() {
            return Err(Error::ContractViolation(format!(
                "{var} observed more than once"
            )));
        }
        Ok(())
    }

    /// Copy of this evidence extended with one more observation.
    pub fn with(&self, var: VariableId, state: usize) -> Result<Self> {
        let mut e = self.clone();
        e.observe(var, state)?;
        Ok(e)
    }

    pub fn get(&self, var: VariableId) -> Option<usize> {
        self.observed.get(&var).copied()
    }

    pub fn contains(&self, var: VariableId) -> bool {
        self.observed.contains_key(&var)
    }

    pub fn len(&self) -> usize {
        self.observed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observed.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VariableId, usize)> + '_ {
        self.observed.iter().map(|(&v, &s)| (v, s))
    }

    pub fn as_assignment(&self) -> &Assignment {
        &self.observed
    }

    /// Checks every observation against the model's variables and cardinalities.
    pub fn check(&self, model: &GraphicalModel) -> Result<()> {
        for (v, s) in self.iter() {
            if v.0 >= model.n() {
                return Err(Error::ContractViolation(format!(
                    "evidence on {v} but the model has {} variables",
                    model.n()
                )));
            }
            if s >= model.cardinality(v) {
                return Err(Error::ContractViolation(format!(
                    "evidence state {s} out of range for {v} with cardinality {}",
                    model.cardinality(v)
                )));
            }
        }
        Ok(())
    }
}

impl From<Assignment> for Evidence {
    fn from(observed: Assignment) -> Self {
        Evidence { observed }
    }
}

const MASS_TOLERANCE: f64 = 1e-9;

/// A normalized distribution over one variable's states.
#[derive(Clone, Debug, PartialEq)]
pub struct MassFunction {
    variable: VariableId,
    probs: Vec<f64>,
}

impl MassFunction {
    pub fn new(variable: VariableId, probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::ContractViolation(format!(
                "mass function for {variable} has no states"
            )));
        }
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::ContractViolation(format!(
                "probability {p} outside [0, 1] for {variable}"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::ContractViolation(format!(
                "mass function for {variable} sums to {total}"
            )));
        }
        Ok(MassFunction { variable, probs })
    }

    pub fn variable(&self) -> VariableId {
        self.variable
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn cardinality(&self) -> usize {
        self.probs.len()
    }

    /// Most probable state; the lowest index wins ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate().skip(1) {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }
}
