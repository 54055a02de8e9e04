//! The PLTLf⁰ fragment: a set of probabilistic constraints over plain LTLf
//! formulas, each evaluated on the whole trace. Reasoning goes through the
//! 2ⁿ scenarios (which constraints hold) and one linear system over them.

mod monitor;

pub use monitor::{monitor_with_property, most_likely_scenario, MonitorEvent, MonitorState};

use crate::automaton::{AutomatonError, TreeAutomaton};
use crate::formula::{parse_formula, Comparison, Formula, Valuation};
use crate::lp::{maximize, solve_feasibility, Feasibility, LinearSystem, Relation};
use crate::rational::{fmt_decimal, int, parse_probability, Rational};
use std::fmt;
use std::str::FromStr;

/// Above this many constraints the scenario table gets unreasonably large.
pub const MAX_CONSTRAINTS: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FragmentError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("constraint {0} has a probabilistic argument")]
    Probabilistic(usize),
    #[error("{0} constraints exceed the limit of {MAX_CONSTRAINTS}")]
    TooManyConstraints(usize),
    #[error("the monitored property must not contain P")]
    ProbabilisticProperty,
    #[error("the constraints admit no probability assignment")]
    Infeasible,
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub cmp: Comparison,
    pub p: Rational,
    pub formula: Formula,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "P{}{} : {}",
            self.cmp,
            fmt_decimal(&self.p),
            self.formula
        )
    }
}

/// An ordered list of constraints `P⋈p φ`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Pltlf0Formula {
    constraints: Vec<Constraint>,
}

impl Pltlf0Formula {
    pub fn new(constraints: Vec<Constraint>) -> Result<Self, FragmentError> {
        if let Some(i) = constraints.iter().position(|c| c.formula.has_prob()) {
            return Err(FragmentError::Probabilistic(i));
        }
        Ok(Pltlf0Formula { constraints })
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn scenario_count(&self) -> usize {
        1 << self.len()
    }

    /// Index string of scenario `i`: position j is 1 iff constraint j holds.
    pub fn label(&self, i: usize) -> String {
        let n = self.len();
        (0..n)
            .map(|j| if self.holds_in(i, j) { '1' } else { '0' })
            .collect()
    }

    /// Whether scenario `i` asserts constraint `j` (rather than its negation).
    /// The first constraint is the most significant bit.
    pub fn holds_in(&self, i: usize, j: usize) -> bool {
        i >> (self.len() - 1 - j) & 1 == 1
    }

    /// The formulas of scenario `i`, each constraint or its negation.
    pub fn scenario(&self, i: usize) -> Vec<Formula> {
        self.constraints
            .iter()
            .enumerate()
            .map(|(j, c)| {
                if self.holds_in(i, j) {
                    c.formula.clone()
                } else {
                    Formula::not(c.formula.clone())
                }
            })
            .collect()
    }

    pub fn describe(&self, i: usize) -> String {
        let parts: Vec<String> = self.scenario(i).iter().map(|f| f.to_string()).collect();
        format!("{{{}}}", parts.join(", "))
    }

    /// The same constraints as one PLTLf formula.
    pub fn to_pltlf(&self) -> Formula {
        Formula::conjunction(
            self.constraints
                .iter()
                .map(|c| Formula::prob(c.cmp, c.p.clone(), c.formula.clone())),
        )
    }

    pub fn variables(&self) -> std::collections::BTreeSet<String> {
        self.constraints
            .iter()
            .flat_map(|c| c.formula.variables())
            .collect()
    }
}

impl fmt::Display for Pltlf0Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.constraints {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

/// One constraint per line as `P<cmp><number> : <formula>`; `#` starts a
/// comment. `P=p` expands to the pair `P>=p` and `P<=p`.
impl FromStr for Pltlf0Formula {
    type Err = FragmentError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut out = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| FragmentError::Parse {
                line: k + 1,
                message,
            };
            let (head, body) = line
                .split_once(':')
                .ok_or_else(|| err("expected `P<cmp><p> : <formula>`".into()))?;
            let head = head.trim();
            let rest = head
                .strip_prefix('P')
                .ok_or_else(|| err(format!("`{head}` does not start with P")))?;
            let (cmps, num) = [
                ("<=", &[Comparison::Le][..]),
                (">=", &[Comparison::Ge]),
                ("<", &[Comparison::Lt]),
                (">", &[Comparison::Gt]),
                ("=", &[Comparison::Ge, Comparison::Le]),
            ]
            .iter()
            .find_map(|(sym, cmps)| rest.strip_prefix(sym).map(|num| (*cmps, num)))
            .ok_or_else(|| err(format!("unknown comparison in `{head}`")))?;
            let p = parse_probability(num).map_err(|e| err(e.to_string()))?;
            let formula = parse_formula(body.trim()).map_err(|e| err(e.to_string()))?;
            if formula.has_prob() {
                return Err(err("constraint formulas must not contain P".into()));
            }
            for &cmp in cmps {
                out.push(Constraint {
                    cmp,
                    p: p.clone(),
                    formula: formula.clone(),
                });
            }
        }
        Pltlf0Formula::new(out)
    }
}

/// Scenario satisfiability, the system over scenario weights and, when
/// that system is feasible, the maximum weight of each scenario.
#[derive(Debug, Clone)]
pub struct ScenarioTable {
    formula: Pltlf0Formula,
    /// Reduced rank-1 automaton of each scenario's conjunction.
    acceptors: Vec<TreeAutomaton>,
    satisfiable: Vec<bool>,
    system: LinearSystem,
    feasibility: Feasibility,
    maxima: Option<Vec<Rational>>,
}

impl ScenarioTable {
    pub fn formula(&self) -> &Pltlf0Formula {
        &self.formula
    }

    pub fn len(&self) -> usize {
        self.satisfiable.len()
    }

    pub fn is_empty(&self) -> bool {
        self.satisfiable.is_empty()
    }

    pub fn system(&self) -> &LinearSystem {
        &self.system
    }

    pub fn scenario_satisfiable(&self, i: usize) -> bool {
        self.satisfiable[i]
    }

    pub fn is_satisfiable(&self) -> bool {
        self.feasibility.is_feasible()
    }

    /// A feasible scenario weighting, if one exists.
    pub fn witness(&self) -> Option<&[Rational]> {
        self.feasibility.witness()
    }

    pub fn maxima(&self) -> Result<&[Rational], FragmentError> {
        self.maxima.as_deref().ok_or(FragmentError::Infeasible)
    }

    pub fn max(&self, i: usize) -> Option<&Rational> {
        self.maxima.as_ref().map(|m| &m[i])
    }

    pub(crate) fn acceptor(&self, i: usize) -> &TreeAutomaton {
        &self.acceptors[i]
    }

    /// Whether scenario `i` accepts the prefix `t`.
    pub fn accepts_prefix(&self, i: usize, t: &[Valuation]) -> bool {
        accepts_prefix(&self.acceptors[i], t)
    }
}

pub(crate) fn scenario_acceptor(f: &Formula) -> Result<TreeAutomaton, AutomatonError> {
    Ok(TreeAutomaton::new(f)?.reduce())
}

/// Runs the reduced automaton of a Prob-free formula over `t` as a subset
/// simulation. Every state left is good, so the prefix is accepted iff some
/// state survives. The empty prefix is accepted iff the formula is
/// satisfiable.
pub fn accepts_prefix(reduced: &TreeAutomaton, t: &[Valuation]) -> bool {
    let mut run = PrefixRun::start(reduced);
    for v in t {
        run.step(reduced, v);
    }
    run.accepting()
}

/// Current state set of a prefix simulation; `None` before the first step.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub(crate) struct PrefixRun {
    states: Option<Vec<usize>>,
    satisfiable: bool,
}

impl PrefixRun {
    pub fn start(reduced: &TreeAutomaton) -> Self {
        PrefixRun {
            states: None,
            satisfiable: !reduced.initial().is_empty(),
        }
    }

    pub fn step(&mut self, reduced: &TreeAutomaton, v: &Valuation) {
        let v = v.restricted_to(reduced.closure().variables());
        let candidates: Vec<usize> = match &self.states {
            None => reduced.initial(),
            Some(cur) => {
                let mut next: Vec<usize> = cur
                    .iter()
                    .flat_map(|&q| reduced.linear_successors(q))
                    .collect();
                next.sort_unstable();
                next.dedup();
                next
            }
        };
        self.states = Some(
            candidates
                .into_iter()
                .filter(|&q| *reduced.atom(q).valuation() == v)
                .collect(),
        );
    }

    pub fn accepting(&self) -> bool {
        match &self.states {
            None => self.satisfiable,
            Some(s) => !s.is_empty(),
        }
    }
}

/// Decides every scenario and assembles the system over scenario weights.
pub fn build_lphi(phi: &Pltlf0Formula) -> Result<ScenarioTable, FragmentError> {
    build_lphi_with_jobs(phi, 1)
}

/// As [`build_lphi`], deciding scenarios on `jobs` threads.
pub fn build_lphi_with_jobs(
    phi: &Pltlf0Formula,
    jobs: usize,
) -> Result<ScenarioTable, FragmentError> {
    let n = phi.len();
    if n > MAX_CONSTRAINTS {
        return Err(FragmentError::TooManyConstraints(n));
    }
    let count = phi.scenario_count();
    // Constraints often repeat a formula (`P=p` is two of them), so many
    // scenarios are contradictory and the rest share literal sets.
    let mut keys: Vec<Vec<(Formula, bool)>> = Vec::new();
    let mut key_of = Vec::with_capacity(count);
    for i in 0..count {
        let key = scenario_literals(phi, i);
        let k = match key.as_ref().and_then(|k| keys.iter().position(|x| x == k)) {
            Some(k) => Some(k),
            None => key.map(|k| {
                keys.push(k);
                keys.len() - 1
            }),
        };
        key_of.push(k);
    }
    let literal = |(f, holds): &(Formula, bool)| {
        if *holds {
            f.clone()
        } else {
            Formula::not(f.clone())
        }
    };
    let jobs = jobs.clamp(1, keys.len().max(1));
    let mut slots: Vec<Option<Result<TreeAutomaton, AutomatonError>>> =
        (0..keys.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..jobs)
            .map(|t| {
                let keys = &keys;
                scope.spawn(move || {
                    (t..keys.len())
                        .step_by(jobs)
                        .map(|k| {
                            (
                                k,
                                scenario_acceptor(&Formula::conjunction(
                                    keys[k].iter().map(literal),
                                )),
                            )
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (k, r) in h.join().expect("scenario worker panicked") {
                slots[k] = Some(r);
            }
        }
    });
    let shared = slots
        .into_iter()
        .map(|r| r.expect("every scenario decided"))
        .collect::<Result<Vec<_>, _>>()?;
    let empty = scenario_acceptor(&Formula::False)?;
    let acceptors: Vec<TreeAutomaton> = key_of
        .iter()
        .map(|k| k.map_or_else(|| empty.clone(), |k| shared[k].clone()))
        .collect();
    let satisfiable: Vec<bool> = acceptors.iter().map(|a| !a.is_empty()).collect();
    log::info!(
        "{} of {count} scenarios satisfiable",
        satisfiable.iter().filter(|&&s| s).count()
    );

    let names = (0..count).map(|i| format!("x_{{{}}}", phi.label(i)));
    let mut system = LinearSystem::new(names);
    // an unsatisfiable scenario's sign row is replaced by `x = 0`
    for (i, &sat) in satisfiable.iter().enumerate() {
        system.push(
            [(i, int(1))],
            if sat { Relation::Ge } else { Relation::Eq },
            int(0),
        );
    }
    system.push((0..count).map(|i| (i, int(1))), Relation::Eq, int(1));
    for (j, c) in phi.constraints().iter().enumerate() {
        let terms = (0..count)
            .filter(|&i| phi.holds_in(i, j))
            .map(|i| (i, int(1)));
        system.push(terms, c.cmp.into(), c.p.clone());
    }

    // The zero rows eliminate unsatisfiable scenarios, so optimize over the
    // satisfiable ones only and pad with zeros.
    let live: Vec<usize> = (0..count).filter(|&i| satisfiable[i]).collect();
    let (feasibility, maxima) = if live.is_empty() {
        (Feasibility::Infeasible, None)
    } else {
        let reduced = live_system(phi, &live);
        let pad = |values: Vec<Rational>| {
            let mut full = vec![int(0); count];
            for (&i, v) in live.iter().zip(values) {
                full[i] = v;
            }
            full
        };
        match solve_feasibility(&reduced) {
            Feasibility::Feasible(w) => {
                let maxima = (0..live.len())
                    .map(|k| {
                        maximize(&reduced, k)
                            .expect("feasible and bounded")
                            .supremum
                    })
                    .collect();
                (Feasibility::Feasible(pad(w)), Some(pad(maxima)))
            }
            Feasibility::Infeasible => (Feasibility::Infeasible, None),
        }
    };
    Ok(ScenarioTable {
        formula: phi.clone(),
        acceptors,
        satisfiable,
        system,
        feasibility,
        maxima,
    })
}

/// The system restricted to the scenarios in `live`.
fn live_system(phi: &Pltlf0Formula, live: &[usize]) -> LinearSystem {
    let mut system = LinearSystem::new(live.iter().map(|&i| format!("x_{{{}}}", phi.label(i))));
    for k in 0..live.len() {
        system.push([(k, int(1))], Relation::Ge, int(0));
    }
    system.push((0..live.len()).map(|k| (k, int(1))), Relation::Eq, int(1));
    for (j, c) in phi.constraints().iter().enumerate() {
        let terms = live
            .iter()
            .enumerate()
            .filter(|(_, &i)| phi.holds_in(i, j))
            .map(|(k, _)| (k, int(1)));
        system.push(terms, c.cmp.into(), c.p.clone());
    }
    system
}

/// The distinct literals of scenario `i` in constraint order, `None` when
/// some formula is asserted both ways.
fn scenario_literals(phi: &Pltlf0Formula, i: usize) -> Option<Vec<(Formula, bool)>> {
    let mut out: Vec<(Formula, bool)> = Vec::new();
    for (j, c) in phi.constraints().iter().enumerate() {
        let holds = phi.holds_in(i, j);
        match out.iter().find(|(f, _)| *f == c.formula) {
            Some((_, h)) if *h != holds => return None,
            Some(_) => {}
            None => out.push((c.formula.clone(), holds)),
        }
    }
    Some(out)
}

pub fn is_satisfiable0(phi: &Pltlf0Formula) -> Result<bool, FragmentError> {
    Ok(build_lphi(phi)?.is_satisfiable())
}

/// The maximum weight of each scenario, each maximized on its own.
pub fn scenario_maxima(phi: &Pltlf0Formula) -> Result<Vec<Rational>, FragmentError> {
    Ok(build_lphi(phi)?.maxima()?.to_vec())
}

#[cfg(test)]
mod tests;
