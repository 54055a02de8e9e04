//! Satisfiability against a bounded semantic search, and the linear
//! (probability-free) case against the trace evaluator.

mod common;

use common::oracle::{bounded_satisfiable, temporal_depth, valuations};
use pltlf::automaton::{check_model, TreeAutomaton};
use pltlf::formula::{eval_trace, ClosureSet, Comparison, Formula, Trace, Valuation};
use pltlf::rational::{ratio, Rational};
use proptest::prelude::*;
use std::collections::BTreeSet;

fn ltl_formula() -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        Just(Formula::prop("a")),
        Just(Formula::prop("b")),
        Just(Formula::True)
    ];
    leaf.prop_recursive(4, 16, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            inner.clone().prop_map(Formula::next),
            inner.clone().prop_map(Formula::eventually),
            inner.clone().prop_map(Formula::always),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::and(l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::or(l, r)),
            (inner.clone(), inner).prop_map(|(l, r)| Formula::until(l, r)),
        ]
    })
}

fn comparison() -> impl Strategy<Value = Comparison> {
    prop_oneof![
        Just(Comparison::Le),
        Just(Comparison::Ge),
        Just(Comparison::Lt),
        Just(Comparison::Gt)
    ]
}

fn probability() -> impl Strategy<Value = Rational> {
    prop_oneof![
        Just(ratio(0, 1)),
        Just(ratio(1, 3)),
        Just(ratio(1, 2)),
        Just(ratio(7, 10)),
        Just(ratio(1, 1))
    ]
}

/// At most one `P`, placed at the root or under one LTL context.
fn pltl_formula() -> impl Strategy<Value = Formula> {
    let small = ltl_formula()
        .prop_filter("small", |f| f.size() <= 5)
        .boxed();
    let prob = (comparison(), probability(), small.clone())
        .prop_map(|(c, p, f)| Formula::prob(c, p, f))
        .boxed();
    prop_oneof![
        1 => small.clone(),
        2 => prob.clone(),
        2 => (prob.clone(), small.clone()).prop_map(|(p, f)| Formula::and(p, f)),
        1 => prob.clone().prop_map(Formula::next),
        1 => (prob, small).prop_map(|(p, f)| Formula::until(f, p)),
    ]
    .prop_filter("closure fits", |f| {
        ClosureSet::new(f).len() <= 12 && temporal_depth(f) <= 3 && f.prob_count() <= 1
    })
}

fn accepts(a: &TreeAutomaton, t: &[Valuation]) -> bool {
    let vars = a.closure().variables().clone();
    let mut cur: BTreeSet<usize> = a
        .initial()
        .into_iter()
        .filter(|&q| *a.atom(q).valuation() == t[0].restricted_to(&vars))
        .collect();
    for step in &t[1..] {
        let v = step.restricted_to(&vars);
        cur = cur
            .iter()
            .flat_map(|&q| a.linear_successors(q))
            .filter(|&c| *a.atom(c).valuation() == v)
            .collect();
    }
    cur.iter().any(|&q| a.is_final(q))
}

fn traces_upto(n: usize) -> Vec<Vec<Valuation>> {
    let vals = valuations();
    let mut out: Vec<Vec<Valuation>> = vals.iter().map(|v| vec![v.clone()]).collect();
    let mut frontier = out.clone();
    for _ in 1..n {
        frontier = frontier
            .iter()
            .flat_map(|t| {
                vals.iter()
                    .map(move |v| [t.clone(), vec![v.clone()]].concat())
            })
            .collect();
        out.extend(frontier.iter().cloned());
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(160))]

    #[test]
    fn satisfiability_matches_bounded_search(f in pltl_formula()) {
        let a = TreeAutomaton::new(&f).unwrap();
        let sat = !a.is_empty();
        prop_assert_eq!(sat, bounded_satisfiable(&f, 3, 3), "{}", f);
        prop_assert_eq!(a.reduce().is_empty(), !sat);
        if let Some(m) = a.witness_model() {
            prop_assert!(check_model(&m, &f).unwrap(), "{}\n{}", f, m.render());
        }
    }

    #[test]
    fn linear_acceptance_matches_evaluator(f in ltl_formula().prop_filter("closure", |f| ClosureSet::new(f).len() <= 16)) {
        let a = TreeAutomaton::new(&f).unwrap();
        for q in a.states() {
            prop_assert_eq!(&a.scenario_family(q).scenarios.iter().map(|s| s.members.clone()).collect::<Vec<_>>(), &vec![vec![0]]);
        }
        for t in traces_upto(5) {
            let want = eval_trace(&f, &Trace::new(t.clone()).unwrap()).unwrap();
            prop_assert_eq!(accepts(&a, &t), want, "{} on {:?}", f, t);
        }
    }
}
