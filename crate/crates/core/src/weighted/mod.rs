//! The weighted string automaton flattened from the reduced tree
//! automaton, its max-times behaviour, the acceptor of most likely traces,
//! and probability queries for traces, regular languages and prefixes.

mod nfa;

pub use nfa::{Label, NfaTransition, TraceNFA};

use crate::automaton::{build_system, AutomatonError, TreeAutomaton};
use crate::formula::{Formula, Trace, Valuation};
use crate::lp::maximize;
use crate::rational::Rational;
use num_traits::{One, Zero};
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::sync::OnceLock;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WeightedError {
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error("variable `{0}` does not occur in the formula")]
    UnknownVariable(String),
    #[error("max_count and max_len must be at least 1")]
    InvalidBound,
}

/// A string automaton whose nodes emit their valuation when visited.
#[derive(Debug, Clone)]
pub struct WeightedGraph {
    pub labels: Vec<Valuation>,
    /// Atom id of the tree automaton state behind each node.
    pub origin: Vec<usize>,
    pub initial: Vec<bool>,
    pub finals: Vec<bool>,
    pub edges: Vec<Vec<(usize, Rational)>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BehaviourTable {
    /// Best weight of a run from each node to a final node.
    pub w: Vec<Rational>,
    pub iterations: usize,
    pub norm: Rational,
}

impl WeightedGraph {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn initial_weights(&self) -> Vec<Rational> {
        self.finals
            .iter()
            .map(|&f| if f { Rational::one() } else { Rational::zero() })
            .collect()
    }

    /// One round of `w'(q) = max([q final], max_{q'} wt(q,q')·w(q'))`.
    pub fn step_behaviour(&self, w: &[Rational]) -> Vec<Rational> {
        (0..self.len())
            .map(|i| {
                let base = if self.finals[i] {
                    Rational::one()
                } else {
                    Rational::zero()
                };
                self.edges[i]
                    .iter()
                    .map(|(j, wt)| wt * &w[*j])
                    .fold(base, |a, b| if b > a { b } else { a })
            })
            .collect()
    }

    pub fn behaviour(&self) -> BehaviourTable {
        let mut w = self.initial_weights();
        let mut iterations = 0;
        loop {
            iterations += 1;
            let next = self.step_behaviour(&w);
            if next == w {
                break;
            }
            w = next;
            assert!(
                iterations <= self.len() + 1,
                "max-times fixpoint did not stabilize"
            );
        }
        let norm = (0..self.len())
            .filter(|&i| self.initial[i])
            .map(|i| w[i].clone())
            .max()
            .unwrap_or_else(Rational::zero);
        BehaviourTable {
            w,
            iterations,
            norm,
        }
    }

    /// Keeps the initial nodes reaching the norm and the edges that
    /// preserve the best weight.
    pub fn acceptor(&self, table: &BehaviourTable) -> MltAcceptor {
        let norm = &table.norm;
        let positive = !norm.is_zero();
        let initial = (0..self.len())
            .filter(|&i| positive && self.initial[i] && table.w[i] == *norm)
            .collect();
        let edges = (0..self.len())
            .map(|i| {
                if table.w[i].is_zero() {
                    return Vec::new();
                }
                self.edges[i]
                    .iter()
                    .filter(|(j, wt)| !wt.is_zero() && wt * &table.w[*j] == table.w[i])
                    .map(|(j, _)| *j)
                    .collect()
            })
            .collect();
        MltAcceptor {
            labels: self.labels.clone(),
            origin: self.origin.clone(),
            initial,
            finals: self.finals.clone(),
            edges,
            probability: norm.clone(),
        }
    }

    /// Product with an NFA that reads the label of every visited node.
    pub fn product(&self, nfa: &TraceNFA) -> WeightedGraph {
        let mut adj: Vec<Vec<(&Label, usize)>> = vec![Vec::new(); nfa.states];
        for t in &nfa.transitions {
            adj[t.from].push((&t.label, t.to));
        }
        let step = |s: usize, v: &Valuation| -> BTreeSet<usize> {
            adj[s]
                .iter()
                .filter(|(l, _)| l.matches(v))
                .map(|&(_, to)| to)
                .collect()
        };
        let mut index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut g = WeightedGraph {
            labels: vec![],
            origin: vec![],
            initial: vec![],
            finals: vec![],
            edges: vec![],
        };
        let mut queue = VecDeque::new();
        let mut intern =
            |key: (usize, usize), g: &mut WeightedGraph, queue: &mut VecDeque<(usize, usize)>| {
                *index.entry(key).or_insert_with(|| {
                    let (s, n) = key;
                    g.labels.push(self.labels[n].clone());
                    g.origin.push(self.origin[n]);
                    g.initial.push(false);
                    g.finals.push(nfa.is_final(s) && self.finals[n]);
                    g.edges.push(Vec::new());
                    queue.push_back(key);
                    g.labels.len() - 1
                })
            };
        for n in (0..self.len()).filter(|&n| self.initial[n]) {
            for &s0 in &nfa.initial {
                for s in step(s0, &self.labels[n]) {
                    let i = intern((s, n), &mut g, &mut queue);
                    g.initial[i] = true;
                }
            }
        }
        while let Some((s, n)) = queue.pop_front() {
            let i = intern((s, n), &mut g, &mut queue);
            for (m, wt) in &self.edges[n] {
                for s2 in step(s, &self.labels[*m]) {
                    let j = intern((s2, *m), &mut g, &mut queue);
                    g.edges[i].push((j, wt.clone()));
                }
            }
        }
        g
    }
}

/// Unweighted acceptor of the most likely traces.
#[derive(Debug, Clone)]
pub struct MltAcceptor {
    pub labels: Vec<Valuation>,
    pub origin: Vec<usize>,
    pub initial: Vec<usize>,
    pub finals: Vec<bool>,
    pub edges: Vec<Vec<usize>>,
    /// The probability shared by every accepted trace.
    pub probability: Rational,
}

impl MltAcceptor {
    pub fn is_empty(&self) -> bool {
        self.initial.is_empty()
    }

    pub fn accepts(&self, trace: &[Valuation]) -> bool {
        let Some((first, rest)) = trace.split_first() else {
            return false;
        };
        let mut cur: BTreeSet<usize> = self
            .initial
            .iter()
            .copied()
            .filter(|&i| self.labels[i] == *first)
            .collect();
        for v in rest {
            cur = cur
                .iter()
                .flat_map(|&i| self.edges[i].iter().copied())
                .filter(|&j| self.labels[j] == *v)
                .collect();
        }
        cur.iter().any(|&i| self.finals[i])
    }

    /// Minimum number of edges from each node to a final node.
    fn distance_to_final(&self) -> Vec<Option<usize>> {
        let n = self.labels.len();
        let mut rev: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, es) in self.edges.iter().enumerate() {
            for &j in es {
                rev[j].push(i);
            }
        }
        let mut dist = vec![None; n];
        let mut queue: VecDeque<usize> = (0..n).filter(|&i| self.finals[i]).collect();
        for &i in &queue {
            dist[i] = Some(0);
        }
        while let Some(j) = queue.pop_front() {
            let d = dist[j].unwrap() + 1;
            for &i in &rev[j] {
                if dist[i].is_none() {
                    dist[i] = Some(d);
                    queue.push_back(i);
                }
            }
        }
        dist
    }

    /// Up to `max_count` accepted traces of length at most `max_len`,
    /// shortest first and then in lexicographic order of the step text.
    pub fn enumerate(&self, max_count: usize, max_len: usize) -> Result<Vec<Trace>, WeightedError> {
        if max_count == 0 || max_len == 0 {
            return Err(WeightedError::InvalidBound);
        }
        let dist = self.distance_to_final();
        let mut out = Vec::new();
        for len in 1..=max_len {
            let start: BTreeSet<usize> = self.initial.iter().copied().collect();
            let groups = self.group(&start, &dist, len - 1);
            let mut prefix = Vec::new();
            for (v, set) in groups {
                prefix.push(v);
                self.extend(&mut prefix, &set, len, &dist, max_count, &mut out);
                prefix.pop();
                if out.len() >= max_count {
                    return Ok(out);
                }
            }
        }
        Ok(out)
    }

    /// Splits `nodes` by label, keeping nodes that can still reach a final
    /// node within `budget` edges, ordered by label text.
    fn group(
        &self,
        nodes: &BTreeSet<usize>,
        dist: &[Option<usize>],
        budget: usize,
    ) -> Vec<(Valuation, BTreeSet<usize>)> {
        let mut by: BTreeMap<String, (Valuation, BTreeSet<usize>)> = BTreeMap::new();
        for &i in nodes {
            if dist[i].is_some_and(|d| d <= budget) {
                let e = by
                    .entry(self.labels[i].to_string())
                    .or_insert_with(|| (self.labels[i].clone(), BTreeSet::new()));
                e.1.insert(i);
            }
        }
        by.into_values().collect()
    }

    fn extend(
        &self,
        prefix: &mut Vec<Valuation>,
        set: &BTreeSet<usize>,
        len: usize,
        dist: &[Option<usize>],
        max_count: usize,
        out: &mut Vec<Trace>,
    ) {
        if out.len() >= max_count {
            return;
        }
        if prefix.len() == len {
            if set.iter().any(|&i| self.finals[i]) {
                out.push(Trace::new(prefix.clone()).expect("nonempty"));
            }
            return;
        }
        let next: BTreeSet<usize> = set
            .iter()
            .flat_map(|&i| self.edges[i].iter().copied())
            .collect();
        for (v, s) in self.group(&next, dist, len - prefix.len() - 1) {
            prefix.push(v);
            self.extend(prefix, &s, len, dist, max_count, out);
            prefix.pop();
        }
    }
}

pub fn enumerate_mlts(
    acc: &MltAcceptor,
    max_count: usize,
    max_len: usize,
) -> Result<Vec<Trace>, WeightedError> {
    acc.enumerate(max_count, max_len)
}

/// `B_φ` together with the variables of `φ` (its trace alphabet).
#[derive(Debug)]
pub struct WeightedAutomaton {
    graph: WeightedGraph,
    vars: BTreeSet<String>,
    node_of: HashMap<usize, usize>,
    behaviour: OnceLock<BehaviourTable>,
}

/// P formulas (closure indices) and scenario members; together they fix the LP.
type SystemKey = (Vec<usize>, Vec<u32>);

/// Flattens the reduced automaton: `wt(a, a′)` is the best `x_Q` over the
/// scenarios of `a` that keep some all-good tuple with `a′` at the position
/// of `Q = Q(a, a′)`.
pub fn build_weighted(a: &TreeAutomaton) -> WeightedAutomaton {
    let reduced = a.reduce();
    let good = reduced.good_states().good.clone();
    let ids: Vec<usize> = reduced.states().collect();
    let node_of: HashMap<usize, usize> = ids.iter().enumerate().map(|(i, &q)| (q, i)).collect();
    let mut maxima: HashMap<SystemKey, Vec<Option<Rational>>> = HashMap::new();
    let mut edges: Vec<Vec<(usize, Rational)>> = vec![Vec::new(); ids.len()];
    for (i, &q) in ids.iter().enumerate() {
        let fam = reduced.scenario_family(q);
        let mut best: BTreeMap<usize, Rational> = BTreeMap::new();
        for (s, sc) in fam.scenarios.iter().enumerate() {
            let Some(usable) = reduced.usable_children(q, s, &good) else {
                continue;
            };
            let key = (fam.probs.clone(), sc.members.clone());
            let cache = maxima
                .entry(key)
                .or_insert_with(|| vec![None; sc.members.len()]);
            for (pos, kids) in usable.iter().enumerate() {
                if kids.is_empty() {
                    continue;
                }
                let m = cache[pos]
                    .get_or_insert_with(|| {
                        let sys = build_system(reduced.closure(), &fam.probs, &sc.members);
                        maximize(&sys, pos)
                            .expect("scenario systems are feasible and bounded")
                            .supremum
                    })
                    .clone();
                for &c in kids {
                    let e = best.entry(node_of[&c]).or_insert_with(Rational::zero);
                    if m > *e {
                        *e = m.clone();
                    }
                }
            }
        }
        edges[i] = best.into_iter().filter(|(_, w)| !w.is_zero()).collect();
    }
    let graph = WeightedGraph {
        labels: ids
            .iter()
            .map(|&q| reduced.atom(q).valuation().clone())
            .collect(),
        origin: ids.clone(),
        initial: ids.iter().map(|&q| reduced.is_initial(q)).collect(),
        finals: ids.iter().map(|&q| reduced.is_final(q)).collect(),
        edges,
    };
    log::info!(
        "weighted automaton: {} states, {} weighted edges",
        graph.len(),
        graph.edges.iter().map(Vec::len).sum::<usize>()
    );
    WeightedAutomaton {
        graph,
        vars: a.closure().variables().clone(),
        node_of,
        behaviour: OnceLock::new(),
    }
}

impl WeightedAutomaton {
    pub fn from_formula(f: &Formula) -> Result<Self, WeightedError> {
        Ok(build_weighted(&TreeAutomaton::new(f)?))
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    pub fn variables(&self) -> &BTreeSet<String> {
        &self.vars
    }

    /// Atom ids of the states.
    pub fn states(&self) -> &[usize] {
        &self.graph.origin
    }

    /// `wt(a, a′)` by atom id; zero when there is no edge.
    pub fn weight(&self, a: usize, b: usize) -> Rational {
        let (Some(&i), Some(&j)) = (self.node_of.get(&a), self.node_of.get(&b)) else {
            return Rational::zero();
        };
        self.graph.edges[i]
            .iter()
            .find(|(k, _)| *k == j)
            .map(|(_, w)| w.clone())
            .unwrap_or_else(Rational::zero)
    }

    pub fn behaviour(&self) -> &BehaviourTable {
        self.behaviour.get_or_init(|| self.graph.behaviour())
    }

    /// `‖B_φ‖`, the probability of the most likely traces.
    pub fn norm(&self) -> Rational {
        self.behaviour().norm.clone()
    }

    /// Best run weight from a state, by atom id.
    pub fn state_weight(&self, a: usize) -> Option<&Rational> {
        self.node_of.get(&a).map(|&i| &self.behaviour().w[i])
    }

    pub fn mlt_acceptor(&self) -> MltAcceptor {
        self.graph.acceptor(self.behaviour())
    }

    fn check_vars<'v>(
        &self,
        vals: impl IntoIterator<Item = &'v Valuation>,
    ) -> Result<(), WeightedError> {
        for v in vals {
            if let Some(x) = v.0.iter().find(|x| !self.vars.contains(*x)) {
                return Err(WeightedError::UnknownVariable(x.clone()));
            }
        }
        Ok(())
    }

    /// Best probability of any trace in `L` and the acceptor of those
    /// reaching it.
    pub fn language_probability(
        &self,
        nfa: &TraceNFA,
    ) -> Result<(Rational, MltAcceptor), WeightedError> {
        if let Some(x) = nfa.variables().into_iter().find(|x| !self.vars.contains(x)) {
            return Err(WeightedError::UnknownVariable(x));
        }
        let p = self.graph.product(nfa);
        let table = p.behaviour();
        let acc = p.acceptor(&table);
        Ok((table.norm, acc))
    }

    pub fn trace_probability(&self, trace: &[Valuation]) -> Result<Rational, WeightedError> {
        self.check_vars(trace)?;
        if trace.is_empty() {
            return Ok(Rational::zero());
        }
        Ok(self.language_probability(&TraceNFA::singleton(trace))?.0)
    }

    pub fn prefix_extension_query(
        &self,
        prefix: &[Valuation],
    ) -> Result<(Rational, MltAcceptor), WeightedError> {
        self.check_vars(prefix)?;
        self.language_probability(&TraceNFA::extending(prefix))
    }
}

pub fn behaviour(b: &WeightedAutomaton) -> Rational {
    b.norm()
}

pub fn trace_probability(f: &Formula, trace: &[Valuation]) -> Result<Rational, WeightedError> {
    WeightedAutomaton::from_formula(f)?.trace_probability(trace)
}

pub fn language_probability(
    f: &Formula,
    nfa: &TraceNFA,
) -> Result<(Rational, MltAcceptor), WeightedError> {
    WeightedAutomaton::from_formula(f)?.language_probability(nfa)
}

pub fn prefix_extension_query(
    f: &Formula,
    prefix: &[Valuation],
) -> Result<(Rational, MltAcceptor), WeightedError> {
    WeightedAutomaton::from_formula(f)?.prefix_extension_query(prefix)
}
