//! Bounded semantic search over finite trees, independent of the automaton.

use num_traits::{One, Zero};
use pltlf::formula::{Formula, Valuation};
use pltlf::rational::{ratio, Rational};
use std::collections::{BTreeSet, HashMap};

pub const VARS: [&str; 2] = ["a", "b"];

pub fn valuations() -> Vec<Valuation> {
    (0..4u8)
        .map(|m| {
            Valuation::of(
                VARS.iter()
                    .enumerate()
                    .filter(|(i, _)| m >> i & 1 == 1)
                    .map(|(_, v)| *v),
            )
        })
        .collect()
}

/// Subformulas of the raw formula, children before parents.
pub fn subformulas(f: &Formula) -> Vec<Formula> {
    fn go(f: &Formula, out: &mut Vec<Formula>) {
        for c in children(f) {
            go(c, out);
        }
        if !out.contains(f) {
            out.push(f.clone());
        }
    }
    let mut out = Vec::new();
    go(f, &mut out);
    out
}

pub fn children(f: &Formula) -> Vec<&Formula> {
    match f {
        Formula::True | Formula::False | Formula::Prop(_) => vec![],
        Formula::Not(x)
        | Formula::Next(x)
        | Formula::Eventually(x)
        | Formula::Always(x)
        | Formula::Prob(_, _, x) => {
            vec![x]
        }
        Formula::And(l, r) | Formula::Or(l, r) | Formula::Implies(l, r) | Formula::Until(l, r) => {
            vec![l, r]
        }
    }
}

/// Bounded search for a tree whose root satisfies `f`: all truth vectors
/// over the subformulas realizable by trees of the given depth and width.
/// Relies on `f` holding at most one `P`, so the weight on the children
/// satisfying its argument can be anything in [0,1] unless all or none do.
pub fn bounded_satisfiable(f: &Formula, depth: usize, width: usize) -> bool {
    let subs = subformulas(f);
    let idx: HashMap<&Formula, usize> = subs.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let root = idx[f];
    let node_types = |val: &Valuation, kids: &[u64]| -> Vec<u64> {
        let mut partial: Vec<u64> = vec![0];
        for (i, s) in subs.iter().enumerate() {
            let at = |t: u64, g: &Formula| t >> idx[g] & 1 == 1;
            let mut next = Vec::new();
            for t in partial {
                let options: Vec<bool> = match s {
                    Formula::True => vec![true],
                    Formula::False => vec![false],
                    Formula::Prop(n) => vec![val.contains(n)],
                    Formula::Not(x) => vec![!at(t, x)],
                    Formula::And(l, r) => vec![at(t, l) && at(t, r)],
                    Formula::Or(l, r) => vec![at(t, l) || at(t, r)],
                    Formula::Implies(l, r) => vec![!at(t, l) || at(t, r)],
                    Formula::Next(x) => vec![!kids.is_empty() && kids.iter().all(|&k| at(k, x))],
                    Formula::Until(l, r) => {
                        vec![
                            at(t, r)
                                || (at(t, l) && !kids.is_empty() && kids.iter().all(|&k| at(k, s))),
                        ]
                    }
                    Formula::Eventually(x) => {
                        vec![at(t, x) || (!kids.is_empty() && kids.iter().all(|&k| at(k, s)))]
                    }
                    // dual of F: some branch keeps x to its leaf
                    Formula::Always(x) => {
                        vec![at(t, x) && (kids.is_empty() || kids.iter().any(|&k| at(k, s)))]
                    }
                    Formula::Prob(cmp, p, x) => {
                        let with = kids.iter().filter(|&&k| at(k, x)).count();
                        let sums: Vec<Rational> = if with == 0 {
                            vec![Rational::zero()]
                        } else if with == kids.len() {
                            vec![Rational::one()]
                        } else {
                            let half = ratio(1, 2);
                            vec![
                                Rational::zero(),
                                p * &half,
                                p.clone(),
                                (p + Rational::one()) * half,
                                Rational::one(),
                            ]
                        };
                        let got: BTreeSet<bool> = sums.iter().map(|s| cmp.holds(s, p)).collect();
                        got.into_iter().collect()
                    }
                };
                for o in options {
                    next.push(if o { t | 1 << i } else { t });
                }
            }
            partial = next;
        }
        partial
    };

    let vals = valuations();
    let mut realizable: BTreeSet<u64> = BTreeSet::new();
    for v in &vals {
        realizable.extend(node_types(v, &[]));
    }
    for _ in 0..depth {
        let pool: Vec<u64> = realizable.iter().copied().collect();
        let mut grown = realizable.clone();
        let mut kids = Vec::new();
        choose(&pool, 0, width, &mut kids, &mut |kids| {
            for v in &vals {
                grown.extend(node_types(v, kids));
            }
        });
        if grown == realizable {
            break;
        }
        realizable = grown;
    }
    realizable.iter().any(|t| t >> root & 1 == 1)
}

/// Calls `f` on every nonempty set of at most `width` distinct pool items.
pub fn choose(
    pool: &[u64],
    start: usize,
    width: usize,
    cur: &mut Vec<u64>,
    f: &mut dyn FnMut(&[u64]),
) {
    if !cur.is_empty() {
        f(cur);
    }
    if cur.len() == width {
        return;
    }
    for i in start..pool.len() {
        cur.push(pool[i]);
        choose(pool, i + 1, width, cur, f);
        cur.pop();
    }
}

pub fn temporal_depth(f: &Formula) -> usize {
    let own = usize::from(matches!(
        f,
        Formula::Next(_)
            | Formula::Until(..)
            | Formula::Eventually(_)
            | Formula::Always(_)
            | Formula::Prob(..)
    ));
    own + children(f)
        .into_iter()
        .map(temporal_depth)
        .max()
        .unwrap_or(0)
}
