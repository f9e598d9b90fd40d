//! Run reports: one `key: value` per line, keys in a fixed schema order.

use std::fmt::{self, Display};

use crate::error::{Error, Result};

pub const SCHEMA_ID: &str = "gapkit-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Str,
    Int,
    Float,
    Bool,
}

#[derive(Debug, Clone, Copy)]
pub struct Field {
    pub key: &'static str,
    pub kind: Kind,
    pub required: bool,
}

const fn req(key: &'static str, kind: Kind) -> Field {
    Field { key, kind, required: true }
}

const fn opt(key: &'static str, kind: Kind) -> Field {
    Field { key, kind, required: false }
}

/// Every key a report may carry, in output order.
pub const SCHEMA: &[Field] = &[
    req("schema", Kind::Str),
    req("version", Kind::Str),
    req("mode", Kind::Str),
    req("status", Kind::Str),
    req("input.source", Kind::Str),
    req("input.n", Kind::Int),
    req("input.k", Kind::Int),
    opt("input.eps", Kind::Float),
    req("input.delta", Kind::Float),
    req("input.seed", Kind::Int),
    req("input.backend", Kind::Str),
    req("input.encoding", Kind::Str),
    req("input.gap_min", Kind::Float),
    opt("output.lambda_k", Kind::Float),
    opt("output.lambda_k1", Kind::Float),
    opt("output.mu", Kind::Float),
    opt("output.gap", Kind::Float),
    opt("output.mu_hat", Kind::Float),
    opt("output.gap_hat", Kind::Float),
    opt("output.iterations", Kind::Int),
    opt("output.probes", Kind::Int),
    opt("output.message", Kind::Str),
    req("truth.lambda_k", Kind::Float),
    req("truth.lambda_k1", Kind::Float),
    req("truth.mu", Kind::Float),
    req("truth.gap", Kind::Float),
    opt("check.lambda_k", Kind::Bool),
    opt("check.lambda_k1", Kind::Bool),
    opt("check.mu", Kind::Bool),
    opt("check.gap", Kind::Bool),
    opt("check.gap_hat", Kind::Bool),
    opt("check.mu_hat", Kind::Bool),
    opt("check.iterations", Kind::Bool),
    opt("check.all", Kind::Bool),
    req("quantum.queries_uh", Kind::Int),
    req("quantum.queries_state_prep", Kind::Int),
    req("quantum.elementary_gates", Kind::Int),
    req("quantum.max_qubits", Kind::Int),
    req("classical.samples", Kind::Int),
    req("wall_clock_ms", Kind::Float),
];

fn position(key: &str) -> Option<usize> {
    SCHEMA.iter().position(|f| f.key == key)
}

/// A report under construction; rendering sorts entries into schema order.
#[derive(Debug, Clone, Default)]
pub struct Report {
    entries: Vec<(usize, String)>,
}

impl Report {
    pub fn new() -> Self {
        let mut r = Self::default();
        r.set("schema", SCHEMA_ID);
        r.set("version", env!("CARGO_PKG_VERSION"));
        r
    }

    /// Sets a string or integer value. Panics on keys outside the schema.
    pub fn set(&mut self, key: &str, value: impl Display) {
        let i = position(key).unwrap_or_else(|| panic!("report key `{key}` is not in the schema"));
        let v = value.to_string().replace('\n', " ");
        match self.entries.iter_mut().find(|(j, _)| *j == i) {
            Some(slot) => slot.1 = v,
            None => self.entries.push((i, v)),
        }
    }

    /// Sets a float in round-trip form.
    pub fn set_f64(&mut self, key: &str, value: f64) {
        self.set(key, format!("{value:?}"));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        let i = position(key)?;
        self.entries.iter().find(|(j, _)| *j == i).map(|(_, v)| v.as_str())
    }
}

impl Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut sorted: Vec<&(usize, String)> = self.entries.iter().collect();
        sorted.sort_by_key(|(i, _)| *i);
        for (i, v) in sorted {
            writeln!(f, "{}: {v}", SCHEMA[*i].key)?;
        }
        Ok(())
    }
}

fn value_ok(kind: Kind, v: &str) -> bool {
    match kind {
        Kind::Str => !v.is_empty(),
        Kind::Int => v.parse::<u128>().is_ok(),
        Kind::Float => v.parse::<f64>().is_ok(),
        Kind::Bool => v == "true" || v == "false",
    }
}

/// Checks a rendered report against [`SCHEMA`]: known keys, schema order,
/// no duplicates, required keys present, values of the declared kind.
pub fn validate_report(text: &str) -> Result<()> {
    let bad = |line: usize, msg: String| Error::Parse { line, msg };
    let mut last: Option<usize> = None;
    let mut seen = vec![false; SCHEMA.len()];
    for (n, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l)) {
        let (key, value) = line.split_once(": ").ok_or_else(|| bad(n, "expected `key: value`".into()))?;
        let i = position(key).ok_or_else(|| bad(n, format!("unknown key `{key}`")))?;
        if last.is_some_and(|l| i <= l) {
            return Err(bad(n, format!("key `{key}` out of order or repeated")));
        }
        if !value_ok(SCHEMA[i].kind, value) {
            return Err(bad(n, format!("value `{value}` is not a valid {:?}", SCHEMA[i].kind)));
        }
        if key == "schema" && value != SCHEMA_ID {
            return Err(bad(n, format!("unsupported schema `{value}`")));
        }
        seen[i] = true;
        last = Some(i);
    }
    if let Some(f) = SCHEMA.iter().zip(&seen).find(|(f, s)| f.required && !**s) {
        return Err(bad(text.lines().count(), format!("missing required key `{}`", f.0.key)));
    }
    Ok(())
}
