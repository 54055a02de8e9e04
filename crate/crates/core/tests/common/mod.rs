//! Shared fixtures for the integration tests.
#![allow(dead_code)]

pub mod fm;
pub mod oracle;

use pltlf::automaton::TreeAutomaton;
use pltlf::formula::{parse_formula, Formula};

pub const PSI: &str = "X !b & P<=0.7[a U b] & P<=0.6[X(!a & !b)]";

pub fn psi() -> TreeAutomaton {
    TreeAutomaton::new(&parse_formula(PSI).unwrap()).unwrap()
}

/// Looks up `a1`..`a10` by the members listed for them.
pub fn atom(a: &TreeAutomaton, i: usize) -> usize {
    let (root, xnb, p1, p2) = (
        if i <= 2 {
            PSI.to_string()
        } else {
            format!("!({PSI})")
        },
        if matches!(i, 1 | 2 | 8) {
            "X !b"
        } else {
            "!X !b"
        },
        if matches!(i, 8 | 9) {
            "P>0.7[a U b]"
        } else {
            "P<=0.7[a U b]"
        },
        "P<=0.6[X(!a & !b)]",
    );
    let rest: &[&str] = match i {
        1 => &[
            "!(a U b)",
            "!a",
            "!b",
            "!X(a U b)",
            "!a & !b",
            "!X(!a & !b)",
        ],
        2 => &["!(a U b)", "!a", "!b", "!X(a U b)", "!a & !b", "X(!a & !b)"],
        3 => &["a U b", "a", "!b", "X(a U b)", "!(!a & !b)", "!X(!a & !b)"],
        4 => &[
            "!(a U b)",
            "a",
            "!b",
            "!X(a U b)",
            "!(!a & !b)",
            "X(!a & !b)",
        ],
        5 => &["a U b", "a", "!b", "X(a U b)", "!(!a & !b)", "X(!a & !b)"],
        6 => &[
            "!(a U b)",
            "!a",
            "!b",
            "!X(a U b)",
            "!a & !b",
            "!X(!a & !b)",
        ],
        7 => &[
            "!(a U b)",
            "a",
            "!b",
            "!X(a U b)",
            "!(!a & !b)",
            "!X(!a & !b)",
        ],
        8 | 9 => &["a U b", "a", "!b", "X(a U b)", "!(!a & !b)", "!X(!a & !b)"],
        10 => &["a U b", "a", "b", "!X(a U b)", "!(!a & !b)", "!X(!a & !b)"],
        _ => unreachable!(),
    };
    let mut members: Vec<Formula> = [root.as_str(), xnb, p1, p2]
        .iter()
        .chain(rest)
        .map(|s| parse_formula(s).unwrap())
        .collect();
    members.dedup();
    let found = a.find_states(&members);
    assert_eq!(found.len(), 1, "a{i}: {found:?}");
    found[0]
}
