//! Reading and writing models and evidence in the UAI text format.
//!
//! A model file is a preamble (`MARKOV` or `BAYES`, the variable count, one
//! cardinality per variable, the number of functions, then one scope line per
//! function giving its size and variable indices) followed by one table block
//! per function: the entry count and that many reals, last scope variable
//! fastest. Any whitespace separates tokens. Lines starting with `c` before
//! the kind keyword are comments.
//!
//! An evidence file is a count followed by that many `variable state` pairs.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Evidence, GraphicalModel, NetworkKind, Potential, VariableId};

/// A model file as written, before it is turned into potentials.
#[derive(Clone, Debug, PartialEq)]
pub struct UaiDocument {
    pub kind: NetworkKind,
    pub cardinalities: Vec<usize>,
    pub scopes: Vec<Vec<usize>>,
    pub tables: Vec<Vec<f64>>,
}

impl UaiDocument {
    pub fn n(&self) -> usize {
        self.cardinalities.len()
    }

    /// Conditional tables of `BAYES` files are used as plain potentials.
    pub fn into_model(self) -> Result<GraphicalModel> {
        let potentials = self
            .scopes
            .into_iter()
            .zip(self.tables)
            .map(|(scope, table)| {
                let dims = scope.iter().map(|&v| self.cardinalities[v]).collect();
                Potential::new(scope.into_iter().map(VariableId).collect(), dims, table)
            })
            .collect::<Result<Vec<_>>>()?;
        GraphicalModel::new(self.kind, self.cardinalities, potentials)
    }
}

#[derive(Debug)]
struct Token<'a> {
    text: &'a str,
    line: usize,
    index: usize,
}

struct Tokens<'a> {
    tokens: Vec<Token<'a>>,
    pos: usize,
    last_line: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str, skip_leading_comments: bool) -> Self {
        let mut tokens = Vec::new();
        let mut in_preamble = skip_leading_comments;
        let mut last_line = 1;
        for (ln, line) in text.lines().enumerate() {
            last_line = ln + 1;
            if in_preamble {
                let trimmed = line.trim_start();
                if trimmed.is_empty() || trimmed.starts_with('c') {
                    continue;
                }
                in_preamble = false;
            }
            for text in line.split_whitespace() {
                let index = tokens.len() + 1;
                tokens.push(Token {
                    text,
                    line: ln + 1,
                    index,
                });
            }
        }
        Tokens {
            tokens,
            pos: 0,
            last_line,
        }
    }

    fn error_at(&self, tok: &Token<'_>, message: String) -> Error {
        Error::Parse {
            line: tok.line,
            token: tok.index,
            message,
        }
    }

    /// Advances and returns the index of the consumed token.
    fn next(&mut self, what: &str) -> Result<usize> {
        match self.tokens.get(self.pos) {
            Some(_) => {
                self.pos += 1;
                Ok(self.pos - 1)
            }
            None => Err(Error::Parse {
                line: self.last_line,
                token: self.tokens.len() + 1,
                message: format!("unexpected end of input, expected {what}"),
            }),
        }
    }

    fn next_usize(&mut self, what: &str) -> Result<(usize, usize)> {
        let at = self.next(what)?;
        self.tokens[at]
            .text
            .parse::<usize>()
            .map(|v| (v, at))
            .map_err(|_| self.error_at(&self.tokens[at], format!("expected {what}, found `{}`", self.tokens[at].text)))
    }

    fn next_f64(&mut self, what: &str) -> Result<f64> {
        let at = self.next(what)?;
        let tok = &self.tokens[at];
        let value: f64 = tok
            .text
            .parse()
            .map_err(|_| self.error_at(tok, format!("expected {what}, found `{}`", tok.text)))?;
        if !value.is_finite() {
            return Err(self.error_at(tok, format!("{what} `{}` is not finite", tok.text)));
        }
        if value < 0.0 {
            return Err(self.error_at(tok, format!("negative {what} {value}")));
        }
        Ok(value)
    }

    fn fail_at(&self, at: usize, message: String) -> Error {
        self.error_at(&self.tokens[at], message)
    }

    fn finish(&self) -> Result<()> {
        match self.tokens.get(self.pos) {
            None => Ok(()),
            Some(tok) => Err(self.error_at(
                tok,
                format!(
                    "{} trailing token(s) after the last expected value",
                    self.tokens.len() - self.pos
                ),
            )),
        }
    }
}

pub fn parse_uai_document(text: &str) -> Result<UaiDocument> {
    let mut toks = Tokens::new(text, true);
    let at = toks.next("network kind")?;
    let kind = match toks.tokens[at].text {
        "MARKOV" => NetworkKind::Markov,
        "BAYES" => NetworkKind::Bayes,
        other => {
            let msg = format!("unknown network kind `{other}`");
            return Err(toks.fail_at(at, msg));
        }
    };

    let (n, _) = toks.next_usize("variable count")?;
    let mut cardinalities = Vec::with_capacity(n);
    for _ in 0..n {
        let (c, at) = toks.next_usize("cardinality")?;
        if c == 0 {
            return Err(toks.fail_at(at, "cardinality must be at least 1".into()));
        }
        cardinalities.push(c);
    }

    let (f, _) = toks.next_usize("function count")?;
    let mut scopes = Vec::with_capacity(f);
    for _ in 0..f {
        let (size, _) = toks.next_usize("scope size")?;
        let mut scope = Vec::with_capacity(size);
        for _ in 0..size {
            let (v, at) = toks.next_usize("variable index")?;
            if v >= n {
                return Err(toks.fail_at(at, format!("variable {v} out of range for {n} variables")));
            }
            if scope.contains(&v) {
                return Err(toks.fail_at(at, format!("variable {v} repeated in scope")));
            }
            scope.push(v);
        }
        scopes.push(scope);
    }

    let mut tables = Vec::with_capacity(f);
    for scope in &scopes {
        let expected: usize = scope.iter().map(|&v| cardinalities[v]).product();
        let (count, at) = toks.next_usize("table entry count")?;
        if count != expected {
            return Err(toks.fail_at(
                at,
                format!("table declares {count} entries, scope {scope:?} needs {expected}"),
            ));
        }
        let table = (0..count)
            .map(|_| toks.next_f64("table value"))
            .collect::<Result<Vec<_>>>()?;
        tables.push(table);
    }
    toks.finish()?;

    Ok(UaiDocument {
        kind,
        cardinalities,
        scopes,
        tables,
    })
}

pub fn parse_uai(text: &str) -> Result<GraphicalModel> {
    parse_uai_document(text)?.into_model()
}

/// Serializes a model; every real is printed in its shortest round-trip form.
pub fn write_uai(model: &GraphicalModel) -> String {
    let mut out = String::new();
    let cards: Vec<String> = model.cardinalities().iter().map(usize::to_string).collect();
    let _ = writeln!(out, "{}\n{}\n{}\n{}", model.kind().keyword(), model.n(), cards.join(" "), model.f());
    for p in model.potentials() {
        let _ = write!(out, "{}", p.scope().len());
        for v in p.scope() {
            let _ = write!(out, " {}", v.0);
        }
        out.push('\n');
    }
    for p in model.potentials() {
        let _ = write!(out, "\n{}\n", p.len());
        for v in p.table() {
            let _ = write!(out, " {v:?}");
        }
        out.push('\n');
    }
    out
}

pub fn parse_evid(text: &str) -> Result<Evidence> {
    let mut toks = Tokens::new(text, false);
    let (count, _) = toks.next_usize("evidence count")?;
    let mut evidence = Evidence::new();
    for _ in 0..count {
        let (v, at) = toks.next_usize("variable index")?;
        let (s, _) = toks.next_usize("state index")?;
        if evidence.contains(VariableId(v)) {
            return Err(toks.fail_at(at, format!("variable {v} observed twice")));
        }
        evidence.observe(VariableId(v), s)?;
    }
    toks.finish()?;
    Ok(evidence)
}

pub fn write_evid(evidence: &Evidence) -> String {
    let mut out = evidence.len().to_string();
    for (v, s) in evidence.iter() {
        let _ = write!(out, " {} {}", v.0, s);
    }
    out.push('\n');
    out
}

pub fn read_model(path: impl AsRef<Path>) -> Result<GraphicalModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_uai(&text)
}

/// Reads an evidence file and checks it against `model`.
pub fn read_evidence(path: impl AsRef<Path>, model: &GraphicalModel) -> Result<Evidence> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let evidence = parse_evid(&text)?;
    evidence.check(model)?;
    Ok(evidence)
}
