use super::Formula;
use serde::{Serialize, Serializer};
use std::collections::BTreeSet;
use std::fmt;

/// A propositional valuation, given by the variables it makes true.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Valuation(pub BTreeSet<String>);

impl Valuation {
    pub fn empty() -> Self {
        Valuation::default()
    }

    pub fn of<I, S>(vars: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Valuation(vars.into_iter().map(Into::into).collect())
    }

    pub fn contains(&self, var: &str) -> bool {
        self.0.contains(var)
    }

    pub fn restricted_to(&self, vars: &BTreeSet<String>) -> Valuation {
        Valuation(self.0.intersection(vars).cloned().collect())
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("-");
        }
        let parts: Vec<&str> = self.0.iter().map(String::as_str).collect();
        f.write_str(&parts.join(","))
    }
}

impl Serialize for Valuation {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// A nonempty finite sequence of valuations.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Trace(Vec<Valuation>);

impl Trace {
    pub fn new(steps: Vec<Valuation>) -> Option<Self> {
        if steps.is_empty() {
            None
        } else {
            Some(Trace(steps))
        }
    }

    pub fn steps(&self) -> &[Valuation] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join(";"))
    }
}

impl Serialize for Trace {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Parses one step: `-` for the empty valuation, otherwise `a,b,...`.
pub fn parse_valuation(text: &str) -> Result<Valuation, String> {
    let t = text.trim();
    if t == "-" || t.is_empty() {
        return Ok(Valuation::empty());
    }
    let mut set = BTreeSet::new();
    for v in t.split(',') {
        let v = v.trim();
        if v.is_empty() || !v.chars().all(|c| c.is_alphanumeric() || c == '_') {
            return Err(format!("bad variable name `{v}` in step `{t}`"));
        }
        set.insert(v.to_string());
    }
    Ok(Valuation(set))
}

/// Parses `"-;a;b"` style text. The empty string is the empty sequence,
/// which callers use for the empty prefix.
pub fn parse_trace(text: &str) -> Result<Vec<Valuation>, String> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(';').map(parse_valuation).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("not an LTLf formula: {0}")]
    NotLtlf(String),
}

/// Evaluates an LTLf formula at position 0 of a finite trace.
/// `X` is strong (false at the last position) and `U` requires its right
/// side to occur within the trace.
pub fn eval_trace(f: &Formula, t: &Trace) -> Result<bool, EvalError> {
    if f.has_prob() {
        return Err(EvalError::NotLtlf(f.to_string()));
    }
    Ok(eval_at(f, t.steps(), 0))
}

fn eval_at(f: &Formula, t: &[Valuation], i: usize) -> bool {
    let last = t.len() - 1;
    match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Prop(n) => t[i].contains(n),
        Formula::Not(x) => !eval_at(x, t, i),
        Formula::And(l, r) => eval_at(l, t, i) && eval_at(r, t, i),
        Formula::Or(l, r) => eval_at(l, t, i) || eval_at(r, t, i),
        Formula::Implies(l, r) => !eval_at(l, t, i) || eval_at(r, t, i),
        Formula::Next(x) => i < last && eval_at(x, t, i + 1),
        Formula::Until(l, r) => {
            for j in i..=last {
                if eval_at(r, t, j) {
                    return true;
                }
                if !eval_at(l, t, j) {
                    return false;
                }
            }
            false
        }
        Formula::Eventually(x) => (i..=last).any(|j| eval_at(x, t, j)),
        Formula::Always(x) => (i..=last).all(|j| eval_at(x, t, j)),
        Formula::Prob(..) => unreachable!("checked by eval_trace"),
    }
}
