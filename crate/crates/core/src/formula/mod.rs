//! Formula syntax: the AST, its text grammar, normalization into the core
//! connectives, the negation-closed subformula set and its atoms, and a
//! plain LTLf evaluator over linear traces.

mod closure;
mod parser;
mod trace;

pub use closure::{Atom, Atoms, ClosureSet};
pub use parser::{parse_formula, ParseError};
pub use trace::{eval_trace, parse_trace, parse_valuation, EvalError, Trace, Valuation};

use crate::rational::{fmt_rational, Rational};
use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Comparison {
    Le,
    Ge,
    Lt,
    Gt,
}

impl Comparison {
    /// The relation obtained by negating `x ⋈ p`: `≤ ↔ >`, `≥ ↔ <`.
    pub fn inverse(self) -> Self {
        match self {
            Comparison::Le => Comparison::Gt,
            Comparison::Gt => Comparison::Le,
            Comparison::Ge => Comparison::Lt,
            Comparison::Lt => Comparison::Ge,
        }
    }

    pub fn holds(self, lhs: &Rational, rhs: &Rational) -> bool {
        match self {
            Comparison::Le => lhs <= rhs,
            Comparison::Ge => lhs >= rhs,
            Comparison::Lt => lhs < rhs,
            Comparison::Gt => lhs > rhs,
        }
    }

    pub fn is_strict(self) -> bool {
        matches!(self, Comparison::Lt | Comparison::Gt)
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Comparison::Le => "<=",
            Comparison::Ge => ">=",
            Comparison::Lt => "<",
            Comparison::Gt => ">",
        }
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Prop(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    Eventually(Box<Formula>),
    Always(Box<Formula>),
    Prob(Comparison, Rational, Box<Formula>),
}

impl Formula {
    pub fn prop(name: impl Into<String>) -> Self {
        Formula::Prop(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(l: Formula, r: Formula) -> Self {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Self {
        Formula::Or(Box::new(l), Box::new(r))
    }

    pub fn implies(l: Formula, r: Formula) -> Self {
        Formula::Implies(Box::new(l), Box::new(r))
    }

    pub fn next(f: Formula) -> Self {
        Formula::Next(Box::new(f))
    }

    pub fn until(l: Formula, r: Formula) -> Self {
        Formula::Until(Box::new(l), Box::new(r))
    }

    pub fn eventually(f: Formula) -> Self {
        Formula::Eventually(Box::new(f))
    }

    pub fn always(f: Formula) -> Self {
        Formula::Always(Box::new(f))
    }

    pub fn prob(cmp: Comparison, p: Rational, f: Formula) -> Self {
        Formula::Prob(cmp, p, Box::new(f))
    }

    /// Conjunction of all items, `true` when empty.
    pub fn conjunction(items: impl IntoIterator<Item = Formula>) -> Self {
        items
            .into_iter()
            .reduce(Formula::and)
            .unwrap_or(Formula::True)
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Prop(_) => 1,
            Formula::Not(f)
            | Formula::Next(f)
            | Formula::Eventually(f)
            | Formula::Always(f)
            | Formula::Prob(_, _, f) => 1 + f.size(),
            Formula::And(l, r)
            | Formula::Or(l, r)
            | Formula::Implies(l, r)
            | Formula::Until(l, r) => 1 + l.size() + r.size(),
        }
    }

    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::True | Formula::False | Formula::Prop(_) => vec![],
            Formula::Not(f)
            | Formula::Next(f)
            | Formula::Eventually(f)
            | Formula::Always(f)
            | Formula::Prob(_, _, f) => vec![f],
            Formula::And(l, r)
            | Formula::Or(l, r)
            | Formula::Implies(l, r)
            | Formula::Until(l, r) => vec![l, r],
        }
    }

    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        if let Formula::Prop(name) = self {
            out.insert(name.clone());
        }
        for c in self.children() {
            c.collect_vars(out);
        }
    }

    pub fn has_prob(&self) -> bool {
        matches!(self, Formula::Prob(..)) || self.children().iter().any(|c| c.has_prob())
    }

    /// Count of `P` operators in the tree.
    pub fn prob_count(&self) -> usize {
        let own = usize::from(matches!(self, Formula::Prob(..)));
        own + self
            .children()
            .iter()
            .map(|c| c.prob_count())
            .sum::<usize>()
    }

    /// Rewrites into the core connectives (`true`, propositions, `!`, `&`,
    /// `X`, `U`, `P`), never leaving a double negation or a negated `P`.
    pub fn normalize(&self) -> Formula {
        match self {
            Formula::True => Formula::True,
            Formula::False => Formula::not(Formula::True),
            Formula::Prop(n) => Formula::Prop(n.clone()),
            Formula::Not(f) => f.normalize().negated(),
            Formula::And(l, r) => Formula::and(l.normalize(), r.normalize()),
            Formula::Or(l, r) => {
                Formula::and(l.normalize().negated(), r.normalize().negated()).negated()
            }
            Formula::Implies(l, r) => {
                Formula::and(l.normalize(), r.normalize().negated()).negated()
            }
            Formula::Next(f) => Formula::next(f.normalize()),
            Formula::Until(l, r) => Formula::until(l.normalize(), r.normalize()),
            Formula::Eventually(f) => Formula::until(Formula::True, f.normalize()),
            Formula::Always(f) => Formula::until(Formula::True, f.normalize().negated()).negated(),
            Formula::Prob(c, p, f) => Formula::prob(*c, p.clone(), f.normalize()),
        }
    }

    /// Negation on normalized formulas: strips a leading `!`, flips the
    /// comparison of `P`, and otherwise wraps in `!`.
    pub fn negated(self) -> Formula {
        match self {
            Formula::Not(f) => *f,
            Formula::Prob(c, p, f) => Formula::Prob(c.inverse(), p, f),
            other => Formula::not(other),
        }
    }

    pub fn is_normalized(&self) -> bool {
        match self {
            Formula::True | Formula::Prop(_) => true,
            Formula::Not(f) => {
                !matches!(**f, Formula::Not(_) | Formula::Prob(..)) && f.is_normalized()
            }
            Formula::And(l, r) | Formula::Until(l, r) => l.is_normalized() && r.is_normalized(),
            Formula::Next(f) | Formula::Prob(_, _, f) => f.is_normalized(),
            _ => false,
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Prop(n) => f.write_str(n),
            Formula::Not(x) => write!(f, "!{x}"),
            Formula::And(l, r) => write!(f, "({l} & {r})"),
            Formula::Or(l, r) => write!(f, "({l} | {r})"),
            Formula::Implies(l, r) => write!(f, "({l} -> {r})"),
            Formula::Next(x) => write!(f, "X {x}"),
            Formula::Until(l, r) => write!(f, "({l} U {r})"),
            Formula::Eventually(x) => write!(f, "F {x}"),
            Formula::Always(x) => write!(f, "G {x}"),
            Formula::Prob(c, p, x) => write!(f, "P{c}{}[{x}]", fmt_rational(p)),
        }
    }
}
