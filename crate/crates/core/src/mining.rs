//! Discovery of PLTLf⁰ constraints from event logs. Frequent activity sets
//! (Apriori) instantiate Declare-style templates; each instance's support,
//! the fraction of cases satisfying it, becomes its probability.

use crate::formula::{eval_trace, parse_formula, Comparison, Formula, Trace, Valuation};
use crate::fragment::{Constraint, Pltlf0Formula};
use crate::rational::{fmt_fraction, int, Rational};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum MiningError {
    #[error("cannot read log: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column `{0}`")]
    MissingColumn(&'static str),
    #[error("the log has no events")]
    Empty,
    #[error("activity `{0}` is not a valid variable name")]
    BadActivity(String),
    #[error("row {row}: order `{value}` is not an integer")]
    BadOrderValue { row: usize, value: String },
    #[error("order values are not contiguous in cases: {}", .0.join(", "))]
    NonContiguousOrder(Vec<String>),
    #[error("unknown template `{0}`")]
    UnknownTemplate(String),
    #[error("template `{name}`: {message}")]
    BadTemplate { name: String, message: String },
    #[error("template `{name}` takes {expected} activities, got {got}")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Case {
    pub id: String,
    pub activities: Vec<String>,
}

impl Case {
    /// One singleton valuation per event.
    pub fn trace(&self) -> Trace {
        Trace::new(
            self.activities
                .iter()
                .map(|a| Valuation::of([a.as_str()]))
                .collect(),
        )
        .expect("cases are nonempty")
    }
}

fn valid_activity(name: &str) -> bool {
    let mut chars = name.chars();
    let head_ok = chars.next().is_some_and(|c| c.is_alphabetic() || c == '_');
    head_ok
        && chars.all(|c| c.is_alphanumeric() || c == '_')
        && !matches!(name, "true" | "false" | "U" | "X" | "F" | "G" | "P")
}

/// Cases in order of first appearance, each with its ordered activities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventLog {
    cases: Vec<Case>,
}

impl EventLog {
    pub fn new(cases: Vec<Case>) -> Result<Self, MiningError> {
        if cases.is_empty() || cases.iter().any(|c| c.activities.is_empty()) {
            return Err(MiningError::Empty);
        }
        if let Some(bad) = cases
            .iter()
            .flat_map(|c| &c.activities)
            .find(|a| !valid_activity(a))
        {
            return Err(MiningError::BadActivity(bad.clone()));
        }
        Ok(EventLog { cases })
    }

    pub fn load(path: &Path) -> Result<Self, MiningError> {
        Self::from_reader(std::fs::File::open(path)?)
    }

    /// CSV with header `case_id,activity[,order]`. Without an order column
    /// events keep their file order; with one, each case's order values
    /// must be distinct consecutive integers.
    pub fn from_reader<R: Read>(reader: R) -> Result<Self, MiningError> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let col = |name: &'static str| headers.iter().position(|h| h == name);
        let case_col = col("case_id").ok_or(MiningError::MissingColumn("case_id"))?;
        let act_col = col("activity").ok_or(MiningError::MissingColumn("activity"))?;
        let order_col = col("order");

        let mut ids: Vec<String> = Vec::new();
        let mut events: BTreeMap<String, Vec<(i64, String)>> = BTreeMap::new();
        for (k, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let id = rec.get(case_col).unwrap_or("").to_string();
            let act = rec.get(act_col).unwrap_or("").to_string();
            let pos = match order_col {
                Some(c) => {
                    let v = rec.get(c).unwrap_or("");
                    v.parse::<i64>().map_err(|_| MiningError::BadOrderValue {
                        row: k + 2,
                        value: v.to_string(),
                    })?
                }
                None => k as i64,
            };
            let list = events.entry(id.clone()).or_insert_with(|| {
                ids.push(id);
                Vec::new()
            });
            list.push((pos, act));
        }
        if ids.is_empty() {
            return Err(MiningError::Empty);
        }
        let mut bad = Vec::new();
        let mut cases = Vec::new();
        for id in ids {
            let mut list = events.remove(&id).expect("grouped");
            list.sort_by_key(|(p, _)| *p);
            if order_col.is_some() && list.windows(2).any(|w| w[1].0 != w[0].0 + 1) {
                bad.push(id.clone());
            }
            cases.push(Case {
                id,
                activities: list.into_iter().map(|(_, a)| a).collect(),
            });
        }
        if !bad.is_empty() {
            return Err(MiningError::NonContiguousOrder(bad));
        }
        EventLog::new(cases)
    }

    pub fn cases(&self) -> &[Case] {
        &self.cases
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    pub fn activities(&self) -> BTreeSet<String> {
        self.cases
            .iter()
            .flat_map(|c| c.activities.iter().cloned())
            .collect()
    }

    /// Fraction of cases containing every activity of `set`.
    pub fn set_support(&self, set: &BTreeSet<String>) -> Rational {
        let hits = self
            .cases
            .iter()
            .filter(|c| set.iter().all(|a| c.activities.contains(a)))
            .count();
        Rational::new((hits as i64).into(), (self.len() as i64).into())
    }

    /// Fraction of cases whose trace satisfies `f`.
    pub fn formula_support(&self, f: &Formula) -> Rational {
        let hits = self
            .cases
            .iter()
            .filter(|c| eval_trace(f, &c.trace()).expect("valid formula"))
            .count();
        Rational::new((hits as i64).into(), (self.len() as i64).into())
    }
}

/// Apriori: frequent sets of size `1..=max_size`, smallest first, each with
/// its support.
pub fn frequent_sets(
    log: &EventLog,
    min_support: &Rational,
    max_size: usize,
) -> Vec<(BTreeSet<String>, Rational)> {
    let mut out = Vec::new();
    let mut level: Vec<BTreeSet<String>> = log
        .activities()
        .into_iter()
        .map(|a| BTreeSet::from([a]))
        .collect();
    for size in 1..=max_size {
        let frequent: Vec<(BTreeSet<String>, Rational)> = level
            .into_iter()
            .map(|s| {
                let sup = log.set_support(&s);
                (s, sup)
            })
            .filter(|(_, sup)| sup >= min_support)
            .collect();
        if frequent.is_empty() {
            break;
        }
        let known: BTreeSet<&BTreeSet<String>> = frequent.iter().map(|(s, _)| s).collect();
        let mut next: BTreeSet<BTreeSet<String>> = BTreeSet::new();
        for (i, (x, _)) in frequent.iter().enumerate() {
            for (y, _) in &frequent[i + 1..] {
                let joined: BTreeSet<String> = x.union(y).cloned().collect();
                if joined.len() != size + 1 {
                    continue;
                }
                let closed = joined.iter().all(|drop| {
                    let mut sub = joined.clone();
                    sub.remove(drop);
                    known.contains(&sub)
                });
                if closed {
                    next.insert(joined);
                }
            }
        }
        out.extend(frequent);
        level = next.into_iter().collect();
    }
    out
}

/// A formula over placeholders `_1`, `_2`, … filled with activities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub name: String,
    pub arity: usize,
    pattern: Formula,
}

impl Template {
    pub fn new(name: &str, pattern: &str) -> Result<Self, MiningError> {
        let bad = |message: String| MiningError::BadTemplate {
            name: name.to_string(),
            message,
        };
        let pattern = parse_formula(pattern).map_err(|e| bad(e.to_string()))?;
        if pattern.has_prob() {
            return Err(bad("templates must not contain P".into()));
        }
        let mut slots = Vec::new();
        for v in pattern.variables() {
            let k = v
                .strip_prefix('_')
                .and_then(|k| k.parse::<usize>().ok())
                .filter(|&k| k >= 1);
            slots.push(k.ok_or_else(|| bad(format!("`{v}` is not a placeholder `_k`")))?);
        }
        slots.sort_unstable();
        if slots.iter().enumerate().any(|(i, &k)| k != i + 1) {
            return Err(bad("placeholders must be _1.._n without gaps".into()));
        }
        Ok(Template {
            name: name.to_string(),
            arity: slots.len(),
            pattern,
        })
    }

    pub fn instantiate(&self, args: &[String]) -> Result<Formula, MiningError> {
        if args.len() != self.arity {
            return Err(MiningError::Arity {
                name: self.name.clone(),
                expected: self.arity,
                got: args.len(),
            });
        }
        Ok(substitute(&self.pattern, args))
    }
}

fn substitute(f: &Formula, args: &[String]) -> Formula {
    let s = |g: &Formula| Box::new(substitute(g, args));
    match f {
        Formula::Prop(v) => {
            let k: usize = v[1..].parse().expect("checked placeholder");
            Formula::Prop(args[k - 1].clone())
        }
        Formula::True | Formula::False => f.clone(),
        Formula::Not(g) => Formula::Not(s(g)),
        Formula::And(l, r) => Formula::And(s(l), s(r)),
        Formula::Or(l, r) => Formula::Or(s(l), s(r)),
        Formula::Implies(l, r) => Formula::Implies(s(l), s(r)),
        Formula::Next(g) => Formula::Next(s(g)),
        Formula::Until(l, r) => Formula::Until(s(l), s(r)),
        Formula::Eventually(g) => Formula::Eventually(s(g)),
        Formula::Always(g) => Formula::Always(s(g)),
        Formula::Prob(c, p, g) => Formula::Prob(*c, p.clone(), s(g)),
    }
}

/// Templates sorted by name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateCatalog {
    templates: Vec<Template>,
}

impl Default for TemplateCatalog {
    fn default() -> Self {
        TemplateCatalog::new(vec![
            Template::new("absence", "!F _1").expect("builtin"),
            Template::new("existence", "F _1").expect("builtin"),
            Template::new("precedence", "(!_2 U _1) | G !_2").expect("builtin"),
            Template::new("response", "G(_1 -> F _2)").expect("builtin"),
        ])
    }
}

impl TemplateCatalog {
    pub fn new(mut templates: Vec<Template>) -> Self {
        templates.sort_by(|a, b| a.name.cmp(&b.name));
        TemplateCatalog { templates }
    }

    /// The default templates with the given names.
    pub fn select<S: AsRef<str>>(names: &[S]) -> Result<Self, MiningError> {
        let all = TemplateCatalog::default();
        let picked = names
            .iter()
            .map(|n| {
                let n = n.as_ref().trim();
                all.templates
                    .iter()
                    .find(|t| t.name == n)
                    .cloned()
                    .ok_or_else(|| MiningError::UnknownTemplate(n.into()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(TemplateCatalog::new(picked))
    }

    pub fn templates(&self) -> &[Template] {
        &self.templates
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinedConstraint {
    pub template: String,
    pub args: Vec<String>,
    pub formula: Formula,
    pub support: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Mined {
    pub constraints: Vec<MinedConstraint>,
}

impl Mined {
    /// Each constraint as `P=support`, i.e. the pair `P>=p` and `P<=p`.
    pub fn formula(&self) -> Pltlf0Formula {
        let cs = self
            .constraints
            .iter()
            .flat_map(|m| {
                [Comparison::Ge, Comparison::Le].map(|cmp| Constraint {
                    cmp,
                    p: m.support.clone(),
                    formula: m.formula.clone(),
                })
            })
            .collect();
        Pltlf0Formula::new(cs).expect("templates are Prob-free")
    }

    /// The formula in `.p0` syntax with a provenance comment per constraint.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for m in &self.constraints {
            let _ = writeln!(
                out,
                "# support={} template={}({})",
                fmt_fraction(&m.support),
                m.template,
                m.args.join(",")
            );
            for cmp in [Comparison::Ge, Comparison::Le] {
                let c = Constraint {
                    cmp,
                    p: m.support.clone(),
                    formula: m.formula.clone(),
                };
                let _ = writeln!(out, "{c}");
            }
        }
        out
    }
}

/// Instantiates every template on the frequent sets of matching size, in
/// every argument order, and keeps the instances with enough support.
/// Output is ordered by template name, then arguments.
pub fn mine(
    log: &EventLog,
    min_support: &Rational,
    catalog: &TemplateCatalog,
) -> Result<Mined, MiningError> {
    let max_size = catalog
        .templates()
        .iter()
        .map(|t| t.arity)
        .max()
        .unwrap_or(0);
    let sets = frequent_sets(log, min_support, max_size);
    let mut constraints = Vec::new();
    for t in catalog.templates() {
        let mut arg_lists: BTreeSet<Vec<String>> = BTreeSet::new();
        for (set, _) in sets.iter().filter(|(s, _)| s.len() == t.arity) {
            let items: Vec<String> = set.iter().cloned().collect();
            permutations(&items, &mut Vec::new(), &mut arg_lists);
        }
        for args in arg_lists {
            let formula = t.instantiate(&args)?;
            let support = log.formula_support(&formula);
            log::debug!(
                "{}({}) support {}",
                t.name,
                args.join(","),
                fmt_fraction(&support)
            );
            if &support >= min_support {
                constraints.push(MinedConstraint {
                    template: t.name.clone(),
                    args,
                    formula,
                    support,
                });
            }
        }
    }
    log::info!(
        "mined {} constraints from {} cases",
        constraints.len(),
        log.len()
    );
    Ok(Mined { constraints })
}

fn permutations(items: &[String], prefix: &mut Vec<String>, out: &mut BTreeSet<Vec<String>>) {
    if prefix.len() == items.len() {
        out.insert(prefix.clone());
        return;
    }
    for it in items {
        if !prefix.contains(it) {
            prefix.push(it.clone());
            permutations(items, prefix, out);
            prefix.pop();
        }
    }
}

/// The log's empirical distribution over scenarios: the weight of each
/// scenario of `phi` is the fraction of cases whose trace realizes it.
pub fn empirical_scenario_weights(log: &EventLog, phi: &Pltlf0Formula) -> Vec<Rational> {
    let mut w = vec![int(0); phi.scenario_count()];
    let unit = Rational::new(1.into(), (log.len() as i64).into());
    for c in log.cases() {
        let t = c.trace();
        let i = phi.constraints().iter().fold(0usize, |i, k| {
            i << 1 | usize::from(eval_trace(&k.formula, &t).expect("valid formula"))
        });
        w[i] += &unit;
    }
    w
}
