//! The tree automaton over atoms.
//!
//! States are atoms of the closure. A hyperedge from `a` picks a feasible
//! scenario `S = (Q₁..Q_k)` of subsets of `𝒫(a)` and one child atom per
//! `Qᵢ`. Hyperedges are never materialized up front. Per state, all atoms
//! are bucketed once by the `Q` they realize, and the "some child lacks ψ"
//! obligations of the absent `X ψ` are tracked as bit signatures, so tuple
//! products only get enumerated when explicitly asked for.

mod model;

pub use model::{check_model, ModelError, WitnessModel, WitnessNode};

use crate::formula::{Atom, ClosureSet, Formula};
use crate::lp::{solve_feasibility, Feasibility, LinearSystem, Relation};
use crate::rational::{int, Rational};
use fixedbitset::FixedBitSet;
use serde::Serialize;
use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::sync::{Arc, OnceLock};

/// A subset of `𝒫(a)`; bit `k` stands for the `k`th probabilistic member
/// of the atom in closure order.
pub type QMask = u32;

const MAX_PROB_PAIRS: usize = 4;
const MAX_ATOMS: u64 = 1 << 22;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AutomatonError {
    #[error("formula has {0} probabilistic subformulas; at most {MAX_PROB_PAIRS} are supported")]
    TooManyProbabilistic(usize),
    #[error("closure yields {0} atoms, more than the supported {MAX_ATOMS}")]
    TooLarge(u64),
}

/// `Q` as a bit string, most significant first: with two members `01` is
/// the set holding only the first one.
pub fn q_label(q: QMask, width: usize) -> String {
    (0..width)
        .rev()
        .map(|k| if q >> k & 1 == 1 { '1' } else { '0' })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    /// `Q₁..Q_k` in increasing mask order.
    pub members: Vec<QMask>,
    /// A solution of the scenario's system, aligned with `members`.
    pub witness: Vec<Rational>,
}

impl Scenario {
    pub fn position_of(&self, q: QMask) -> Option<usize> {
        self.members.iter().position(|&m| m == q)
    }
}

/// All feasible scenarios for one `𝒫(a)`.
#[derive(Debug, Clone)]
pub struct ScenarioFamily {
    /// Closure indices of `𝒫(a)`, ascending.
    pub probs: Vec<usize>,
    pub scenarios: Vec<Scenario>,
}

impl ScenarioFamily {
    pub fn find(&self, members: &[QMask]) -> Option<usize> {
        let mut want = members.to_vec();
        want.sort_unstable();
        self.scenarios.iter().position(|s| s.members == want)
    }

    pub fn contains(&self, members: &[QMask]) -> bool {
        self.find(members).is_some()
    }
}

/// The system `𝔍(S)` for the probabilistic members `probs` and the
/// subsets `s` (bit `k` of each mask refers to `probs[k]`).
pub fn build_system(closure: &ClosureSet, probs: &[usize], s: &[QMask]) -> LinearSystem {
    let width = probs.len();
    let mut sys = LinearSystem::new(s.iter().map(|&q| format!("x_{{{}}}", q_label(q, width))));
    for j in 0..s.len() {
        sys.push([(j, int(1))], Relation::Ge, int(0));
    }
    sys.push((0..s.len()).map(|j| (j, int(1))), Relation::Eq, int(1));
    for (k, &pi) in probs.iter().enumerate() {
        let Formula::Prob(cmp, p, _) = closure.get(pi) else {
            panic!("closure member {pi} is not probabilistic");
        };
        let terms = s
            .iter()
            .enumerate()
            .filter(|(_, &q)| q >> k & 1 == 1)
            .map(|(j, _)| (j, int(1)));
        sys.push(terms, Relation::from(*cmp), p.clone());
    }
    sys
}

/// Enumerates every nonempty `S ⊆ 2^𝒫(a)` by size, then lexicographically,
/// keeping the feasible ones.
pub fn scenario_family(closure: &ClosureSet, probs: &[usize]) -> ScenarioFamily {
    let universe = 1usize << probs.len();
    let mut scenarios = Vec::new();
    for size in 1..=universe {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            let members: Vec<QMask> = idx.iter().map(|&i| i as QMask).collect();
            if let Feasibility::Feasible(witness) =
                solve_feasibility(&build_system(closure, probs, &members))
            {
                scenarios.push(Scenario { members, witness });
            }
            // next combination
            let mut i = size;
            while i > 0 && idx[i - 1] == universe - size + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for j in i..size {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    log::debug!(
        "scenario family over {} probabilistic members: {} feasible",
        probs.len(),
        scenarios.len()
    );
    ScenarioFamily {
        probs: probs.to_vec(),
        scenarios,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Hyperedge {
    /// Index into the source state's scenario family.
    pub scenario: usize,
    pub children: Vec<usize>,
}

/// Candidate children of one state, grouped by the `Q` they realize.
#[derive(Debug)]
struct Buckets {
    /// One bit per absent `X ψ`: the tuple must contain a child without `ψ`.
    full: u64,
    by_q: HashMap<QMask, Vec<(usize, u64)>>,
}

#[derive(Debug)]
struct Core {
    closure: ClosureSet,
    formula: Formula,
    states: Vec<Atom>,
    initial: Vec<usize>,
    finals: FixedBitSet,
    /// state → index into `patterns`
    pattern: Vec<usize>,
    patterns: Vec<Vec<usize>>,
    families: Vec<OnceLock<ScenarioFamily>>,
    buckets: Vec<OnceLock<Buckets>>,
}

#[derive(Debug, Clone)]
pub struct GoodStateSet {
    pub good: FixedBitSet,
    /// Number of sweeps until the fixpoint was reached.
    pub iterations: usize,
    /// Sweep at which each state became good; 0 for final states.
    pub distance: Vec<Option<usize>>,
    /// For non-final good states, a hyperedge into strictly closer states.
    pub edge: Vec<Option<Hyperedge>>,
}

impl GoodStateSet {
    pub fn contains(&self, q: usize) -> bool {
        self.good.contains(q)
    }
}

#[derive(Debug, Clone)]
pub struct TreeAutomaton {
    core: Arc<Core>,
    allowed: FixedBitSet,
    good: Arc<OnceLock<GoodStateSet>>,
}

impl TreeAutomaton {
    pub fn new(f: &Formula) -> Result<Self, AutomatonError> {
        let closure = ClosureSet::new(f);
        let pairs = closure.prob_indices().len() / 2;
        if pairs > MAX_PROB_PAIRS {
            return Err(AutomatonError::TooManyProbabilistic(pairs));
        }
        if closure.atom_count() > MAX_ATOMS {
            return Err(AutomatonError::TooLarge(closure.atom_count()));
        }
        let states: Vec<Atom> = closure.atoms().collect();
        let root = closure.root();
        let initial = (0..states.len())
            .filter(|&q| states[q].contains(root))
            .collect();
        let mut finals = FixedBitSet::with_capacity(states.len());
        for (q, a) in states.iter().enumerate() {
            if is_final_atom(&closure, a) {
                finals.insert(q);
            }
        }
        let mut patterns: Vec<Vec<usize>> = Vec::new();
        let mut seen: HashMap<Vec<usize>, usize> = HashMap::new();
        let pattern = states
            .iter()
            .map(|a| {
                *seen.entry(a.probs().to_vec()).or_insert_with(|| {
                    patterns.push(a.probs().to_vec());
                    patterns.len() - 1
                })
            })
            .collect();
        let n = states.len();
        log::info!("automaton: {} closure members, {} atoms", closure.len(), n);
        let core = Core {
            formula: closure.root_formula().clone(),
            closure,
            initial,
            finals,
            pattern,
            families: (0..patterns.len()).map(|_| OnceLock::new()).collect(),
            patterns,
            buckets: (0..n).map(|_| OnceLock::new()).collect(),
            states,
        };
        let mut allowed = FixedBitSet::with_capacity(n);
        allowed.insert_range(..);
        Ok(TreeAutomaton {
            core: Arc::new(core),
            allowed,
            good: Arc::new(OnceLock::new()),
        })
    }

    /// Fills the per-state caches using `jobs` threads.
    pub fn precompute(&self, jobs: usize) {
        let jobs = jobs.max(1);
        let n = self.core.states.len();
        std::thread::scope(|scope| {
            for t in 0..jobs {
                scope.spawn(move || {
                    for p in (t..self.core.patterns.len()).step_by(jobs) {
                        self.family_of_pattern(p);
                    }
                    for q in (t..n).step_by(jobs) {
                        self.buckets(q);
                    }
                });
            }
        });
    }

    pub fn closure(&self) -> &ClosureSet {
        &self.core.closure
    }

    /// The normalized root formula.
    pub fn formula(&self) -> &Formula {
        &self.core.formula
    }

    pub fn atom(&self, q: usize) -> &Atom {
        &self.core.states[q]
    }

    /// Size of the underlying atom index space (ids stay stable under
    /// [`reduce`](Self::reduce)).
    pub fn atom_count(&self) -> usize {
        self.core.states.len()
    }

    pub fn is_state(&self, q: usize) -> bool {
        self.allowed.contains(q)
    }

    pub fn states(&self) -> impl Iterator<Item = usize> + '_ {
        self.allowed.ones()
    }

    pub fn state_count(&self) -> usize {
        self.allowed.count_ones(..)
    }

    pub fn initial(&self) -> Vec<usize> {
        self.core
            .initial
            .iter()
            .copied()
            .filter(|&q| self.is_state(q))
            .collect()
    }

    pub fn is_initial(&self, q: usize) -> bool {
        self.is_state(q) && self.atom(q).contains(self.core.closure.root())
    }

    pub fn is_final(&self, q: usize) -> bool {
        self.is_state(q) && self.core.finals.contains(q)
    }

    /// States whose atom contains every given formula (normalized first).
    pub fn find_states(&self, members: &[Formula]) -> Vec<usize> {
        let idx: Option<Vec<usize>> = members
            .iter()
            .map(|f| self.closure().index_of(&f.normalize()))
            .collect();
        let Some(idx) = idx else { return Vec::new() };
        self.states()
            .filter(|&q| idx.iter().all(|&i| self.atom(q).contains(i)))
            .collect()
    }

    pub fn scenario_family(&self, q: usize) -> &ScenarioFamily {
        self.family_of_pattern(self.core.pattern[q])
    }

    fn family_of_pattern(&self, p: usize) -> &ScenarioFamily {
        self.core.families[p]
            .get_or_init(|| scenario_family(&self.core.closure, &self.core.patterns[p]))
    }

    /// `Q(a, c)`: the members of `𝒫(a)` whose argument lies in `c`.
    pub fn realized_q(&self, a: usize, c: usize) -> QMask {
        let (cl, child) = (&self.core.closure, self.atom(c));
        self.atom(a)
            .probs()
            .iter()
            .enumerate()
            .filter(|(_, &pi)| child.contains(cl.argument(pi).expect("P has an argument")))
            .fold(0, |m, (k, _)| m | 1 << k)
    }

    fn buckets(&self, q: usize) -> &Buckets {
        self.core.buckets[q].get_or_init(|| {
            let cl = &self.core.closure;
            let a = self.atom(q);
            let mut required = FixedBitSet::with_capacity(cl.len());
            let mut uncovered = Vec::new();
            for &x in cl.next_indices() {
                let arg = cl.argument(x).expect("X has an argument");
                if a.contains(x) {
                    required.insert(arg);
                } else {
                    uncovered.push(arg);
                }
            }
            assert!(uncovered.len() <= 64, "too many next-step obligations");
            let full = if uncovered.len() == 64 {
                u64::MAX
            } else {
                (1u64 << uncovered.len()) - 1
            };
            let mut by_q: HashMap<QMask, Vec<(usize, u64)>> = HashMap::new();
            for (c, child) in self.core.states.iter().enumerate() {
                if !required.is_subset(child.bits()) {
                    continue;
                }
                let sig = uncovered
                    .iter()
                    .enumerate()
                    .filter(|(_, &arg)| !child.contains(arg))
                    .fold(0u64, |m, (r, _)| m | 1 << r);
                by_q.entry(self.realized_q(q, c))
                    .or_default()
                    .push((c, sig));
            }
            Buckets { full, by_q }
        })
    }

    /// Per position of scenario `s`, the candidates in `filter` meeting the
    /// per-child conditions, with their covering signatures.
    fn layers(&self, q: usize, s: usize, filter: &FixedBitSet) -> (u64, Vec<Vec<(usize, u64)>>) {
        let b = self.buckets(q);
        let sc = &self.scenario_family(q).scenarios[s];
        let layers = sc
            .members
            .iter()
            .map(|qm| {
                b.by_q
                    .get(qm)
                    .map(|v| {
                        v.iter()
                            .copied()
                            .filter(|&(c, _)| filter.contains(c))
                            .collect()
                    })
                    .unwrap_or_default()
            })
            .collect();
        (b.full, layers)
    }

    /// The tuples of `T_S(a)` over the current state set, lazily.
    pub fn transition_tuples(&self, q: usize, s: usize) -> TupleIter {
        let (full, lists) = self.layers(q, s, &self.allowed);
        TupleIter::new(full, lists)
    }

    /// All hyperedges leaving `q` (materialized; for small automata).
    pub fn hyperedges(&self, q: usize) -> Vec<Hyperedge> {
        (0..self.scenario_family(q).scenarios.len())
            .flat_map(|s| {
                self.transition_tuples(q, s).map(move |children| Hyperedge {
                    scenario: s,
                    children,
                })
            })
            .collect()
    }

    /// Children that occur at each position of some hyperedge of scenario
    /// `s` whose children all lie in `filter`; `None` if there is no such
    /// hyperedge.
    pub fn usable_children(
        &self,
        q: usize,
        s: usize,
        filter: &FixedBitSet,
    ) -> Option<Vec<Vec<usize>>> {
        let mut f = self.allowed.clone();
        f.intersect_with(filter);
        let (full, layers) = self.layers(q, s, &f);
        let sigs: Vec<Vec<u64>> = layers.iter().map(|l| distinct_sigs(l)).collect();
        let k = layers.len();
        let mut fwd = vec![vec![0u64]];
        for s_i in &sigs {
            let prev = fwd.last().unwrap();
            fwd.push(combine(prev, s_i));
        }
        if !fwd[k].contains(&full) {
            return None;
        }
        let mut bwd = vec![vec![0u64]; k + 1];
        for i in (0..k).rev() {
            bwd[i] = combine(&sigs[i], &bwd[i + 1]);
        }
        let out = (0..k)
            .map(|i| {
                layers[i]
                    .iter()
                    .filter(|&&(_, sig)| {
                        fwd[i]
                            .iter()
                            .any(|&a| bwd[i + 1].iter().any(|&b| a | sig | b == full))
                    })
                    .map(|&(c, _)| c)
                    .collect()
            })
            .collect();
        Some(out)
    }

    /// One hyperedge of `q` into `filter`, preferring the earliest scenario.
    fn find_edge(&self, q: usize, filter: &FixedBitSet) -> Option<Hyperedge> {
        let n_sc = self.scenario_family(q).scenarios.len();
        'scenarios: for s in 0..n_sc {
            let (full, layers) = self.layers(q, s, filter);
            // reach: mask → (previous mask, child chosen at this position)
            let mut trail: Vec<BTreeMap<u64, (u64, usize)>> = Vec::with_capacity(layers.len());
            let mut current: BTreeMap<u64, (u64, usize)> = BTreeMap::from([(0, (0, usize::MAX))]);
            for layer in &layers {
                let mut next: BTreeMap<u64, (u64, usize)> = BTreeMap::new();
                for &mask in current.keys() {
                    for &(c, sig) in layer {
                        next.entry(mask | sig).or_insert((mask, c));
                    }
                }
                if next.is_empty() {
                    continue 'scenarios;
                }
                trail.push(std::mem::replace(&mut current, next));
            }
            if !current.contains_key(&full) {
                continue;
            }
            trail.push(current);
            let mut children = vec![0; layers.len()];
            let mut mask = full;
            for i in (0..layers.len()).rev() {
                let (prev, c) = trail[i + 1][&mask];
                children[i] = c;
                mask = prev;
            }
            return Some(Hyperedge {
                scenario: s,
                children,
            });
        }
        None
    }

    /// Least fixpoint of good states, computed once and cached.
    pub fn good_states(&self) -> &GoodStateSet {
        self.good.get_or_init(|| {
            let n = self.atom_count();
            let mut distance = vec![None; n];
            let mut edge = vec![None; n];
            let mut good = FixedBitSet::with_capacity(n);
            for q in self.states() {
                if self.core.finals.contains(q) {
                    good.insert(q);
                    distance[q] = Some(0);
                }
            }
            let mut iterations = 0;
            loop {
                iterations += 1;
                let snapshot = good.clone();
                let mut changed = false;
                for q in self.states() {
                    if snapshot.contains(q) {
                        continue;
                    }
                    if let Some(e) = self.find_edge(q, &snapshot) {
                        good.insert(q);
                        distance[q] = Some(iterations);
                        edge[q] = Some(e);
                        changed = true;
                    }
                }
                if !changed {
                    break;
                }
            }
            log::info!(
                "good states: {} of {} after {iterations} sweeps",
                good.count_ones(..),
                self.state_count()
            );
            GoodStateSet {
                good,
                iterations,
                distance,
                edge,
            }
        })
    }

    /// The automaton restricted to its good states.
    pub fn reduce(&self) -> TreeAutomaton {
        let good = self.good_states().clone();
        TreeAutomaton {
            core: Arc::clone(&self.core),
            allowed: good.good.clone(),
            good: Arc::new(OnceLock::from(good)),
        }
    }

    pub fn is_empty(&self) -> bool {
        let g = self.good_states();
        !self.initial().iter().any(|&q| g.contains(q))
    }

    /// Successors along unary hyperedges (the whole transition relation
    /// for formulas without `P`).
    pub fn linear_successors(&self, q: usize) -> Vec<usize> {
        let b = self.buckets(q);
        if !self.atom(q).probs().is_empty() {
            return Vec::new();
        }
        b.by_q
            .get(&0)
            .map(|v| {
                v.iter()
                    .filter(|&&(c, sig)| sig == b.full && self.is_state(c))
                    .map(|&(c, _)| c)
                    .collect()
            })
            .unwrap_or_default()
    }

    /// A finite accepted tree, if the language is nonempty.
    pub fn witness_model(&self) -> Option<WitnessModel> {
        let g = self.good_states();
        let root = self
            .initial()
            .into_iter()
            .filter_map(|q| g.distance[q].map(|d| (d, q)))
            .min()?
            .1;
        Some(WitnessModel {
            root: self.witness_node(root, None, g),
        })
    }

    fn witness_node(
        &self,
        q: usize,
        probability: Option<Rational>,
        g: &GoodStateSet,
    ) -> WitnessNode {
        let children = match (&g.distance[q], &g.edge[q]) {
            (Some(0), _) | (_, None) => Vec::new(),
            (Some(_), Some(e)) => {
                let w = &self.scenario_family(q).scenarios[e.scenario].witness;
                e.children
                    .iter()
                    .zip(w)
                    .map(|(&c, p)| self.witness_node(c, Some(p.clone()), g))
                    .collect()
            }
            (None, Some(_)) => unreachable!("edge recorded for a bad state"),
        };
        WitnessNode {
            state: Some(q),
            valuation: self.atom(q).valuation().clone(),
            probability,
            children,
        }
    }

    /// Adjacency listing as JSON: one entry per state with its atom, flags
    /// and (when `with_edges`) all hyperedges labelled by their scenario.
    pub fn dump_json(&self, with_edges: bool) -> serde_json::Value {
        let g = self.good_states();
        let cl = self.closure();
        let states: Vec<serde_json::Value> = self
            .states()
            .map(|q| {
                let fam = self.scenario_family(q);
                let width = fam.probs.len();
                let mut v = serde_json::json!({
                    "id": q,
                    "atom": self.atom(q).describe(cl),
                    "valuation": self.atom(q).valuation(),
                    "initial": self.is_initial(q),
                    "final": self.is_final(q),
                    "good": g.contains(q),
                });
                if with_edges {
                    let edges: Vec<serde_json::Value> = self
                        .hyperedges(q)
                        .into_iter()
                        .map(|e| {
                            let sc: Vec<String> = fam.scenarios[e.scenario]
                                .members
                                .iter()
                                .map(|&m| q_label(m, width))
                                .collect();
                            serde_json::json!({ "scenario": sc, "children": e.children })
                        })
                        .collect();
                    v["hyperedges"] = serde_json::Value::from(edges);
                }
                v
            })
            .collect();
        serde_json::json!({ "formula": self.formula().to_string(), "states": states })
    }

    pub fn dump_text(&self, with_edges: bool) -> String {
        let g = self.good_states();
        let mut out = String::new();
        for q in self.states() {
            let mut flags = Vec::new();
            if self.is_initial(q) {
                flags.push("init");
            }
            if self.is_final(q) {
                flags.push("final");
            }
            flags.push(if g.contains(q) { "good" } else { "bad" });
            let _ = writeln!(
                out,
                "q{q} [{}] {{{}}}",
                flags.join(","),
                self.atom(q).describe(self.closure()).join(", ")
            );
            if with_edges {
                let fam = self.scenario_family(q);
                for e in self.hyperedges(q) {
                    let sc: Vec<String> = fam.scenarios[e.scenario]
                        .members
                        .iter()
                        .map(|&m| q_label(m, fam.probs.len()))
                        .collect();
                    let ch: Vec<String> = e.children.iter().map(|c| format!("q{c}")).collect();
                    let _ = writeln!(out, "  -> {{{}}} ({})", sc.join(","), ch.join(", "));
                }
            }
        }
        out
    }
}

/// Leaf condition: no `X ψ`, and every `P⋈p ψ` holds of the empty sum.
fn is_final_atom(closure: &ClosureSet, a: &Atom) -> bool {
    let zero = int(0);
    closure.next_indices().iter().all(|&x| !a.contains(x))
        && a.probs().iter().all(|&pi| match closure.get(pi) {
            Formula::Prob(cmp, p, _) => cmp.holds(&zero, p),
            _ => unreachable!(),
        })
}

fn distinct_sigs(layer: &[(usize, u64)]) -> Vec<u64> {
    let mut v: Vec<u64> = layer.iter().map(|&(_, s)| s).collect();
    v.sort_unstable();
    v.dedup();
    v
}

fn combine(a: &[u64], b: &[u64]) -> Vec<u64> {
    let mut v: Vec<u64> = a
        .iter()
        .flat_map(|&x| b.iter().map(move |&y| x | y))
        .collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// Odometer over per-position candidates, skipping tuples that leave some
/// absent `X ψ` uncovered.
pub struct TupleIter {
    full: u64,
    lists: Vec<Vec<(usize, u64)>>,
    idx: Vec<usize>,
    done: bool,
}

impl TupleIter {
    fn new(full: u64, lists: Vec<Vec<(usize, u64)>>) -> Self {
        let done = lists.iter().any(Vec::is_empty);
        TupleIter {
            full,
            idx: vec![0; lists.len()],
            lists,
            done,
        }
    }

    fn advance(&mut self) {
        for i in (0..self.idx.len()).rev() {
            self.idx[i] += 1;
            if self.idx[i] < self.lists[i].len() {
                return;
            }
            self.idx[i] = 0;
        }
        self.done = true;
    }
}

impl Iterator for TupleIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        while !self.done {
            let mask = self
                .idx
                .iter()
                .zip(&self.lists)
                .fold(0, |m, (&i, l)| m | l[i].1);
            let tuple: Vec<usize> = self
                .idx
                .iter()
                .zip(&self.lists)
                .map(|(&i, l)| l[i].0)
                .collect();
            self.advance();
            if mask == self.full {
                return Some(tuple);
            }
        }
        None
    }
}

pub fn is_satisfiable(f: &Formula) -> Result<bool, AutomatonError> {
    Ok(!TreeAutomaton::new(f)?.is_empty())
}

pub fn witness_model(f: &Formula) -> Result<Option<WitnessModel>, AutomatonError> {
    Ok(TreeAutomaton::new(f)?.witness_model())
}
