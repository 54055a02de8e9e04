use super::*;
use crate::formula::{parse_formula, parse_trace};
use crate::rational::ratio;
use std::sync::Arc;

fn p0(text: &str) -> Pltlf0Formula {
    text.parse().unwrap()
}

fn t(s: &str) -> Vec<Valuation> {
    if s.is_empty() {
        Vec::new()
    } else {
        parse_trace(s).unwrap()
    }
}

const PHI1: &str = "P<=0.8 : F a\nP<=0.7 : G(a -> F b)";
const PSI1: &str = "P<=0.5 : F a\nP<=0.6 : G(a -> F b)";

fn normalized(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[test]
fn labels_are_most_significant_first() {
    let phi = p0(PHI1);
    assert_eq!(
        (0..4).map(|i| phi.label(i)).collect::<Vec<_>>(),
        ["00", "01", "10", "11"]
    );
    assert_eq!(phi.describe(1), "{!F a, G (a -> F b)}");
    let three = p0("P<=1 : a\nP<=1 : b\nP<=1 : X a");
    assert_eq!(three.label(2), "010");
    assert_eq!(three.scenario(2)[1], parse_formula("b").unwrap());
}

#[test]
fn phi1_system() {
    let table = build_lphi(&p0(PHI1)).unwrap();
    assert_eq!(
        (0..4)
            .map(|i| table.scenario_satisfiable(i))
            .collect::<Vec<_>>(),
        [false, true, true, true]
    );
    let text = normalized(&table.system().to_string());
    for row in [
        "x_{00} + x_{01} + x_{10} + x_{11} = 1",
        "x_{10} + x_{11} <= 4/5",
        "x_{01} + x_{11} <= 7/10",
        "x_{00} = 0",
        "x_{01} >= 0",
    ] {
        assert!(text.contains(row), "{row} missing from {text}");
    }
    let tight = [int(0), ratio(1, 5), ratio(3, 10), ratio(1, 2)];
    assert!(table.system().satisfied_by(&tight));
    assert!(table.is_satisfiable());
    // x01 = 7/10 with x10 = 3/10 and x10 = 4/5 with x01 = 1/5 are feasible,
    // while the two bounds force x01 >= 1/5 and x10 >= 3/10, so x11 <= 1/2
    assert!(table
        .system()
        .satisfied_by(&[int(0), ratio(7, 10), ratio(3, 10), int(0)]));
    assert!(table
        .system()
        .satisfied_by(&[int(0), ratio(1, 5), ratio(4, 5), int(0)]));
    assert_eq!(
        table.maxima().unwrap(),
        &[int(0), ratio(7, 10), ratio(4, 5), ratio(1, 2)]
    );
}

#[test]
fn psi1_maxima() {
    let table = build_lphi(&p0(PSI1)).unwrap();
    // x01 >= 1/2, x10 >= 2/5 and x11 <= 1/10; each upper bound is one
    // constraint's slack
    assert_eq!(
        table.maxima().unwrap(),
        &[int(0), ratio(3, 5), ratio(1, 2), ratio(1, 10)]
    );
}

#[test]
fn satisfiability_cases() {
    assert!(is_satisfiable0(&p0("P<=0.5 : a\nP>=0.6 : X b")).unwrap());
    assert!(!is_satisfiable0(&p0("P>=0.5 : a\nP>=0.6 : !a")).unwrap());
    assert_eq!(
        scenario_maxima(&p0("P>=0.5 : a\nP>=0.6 : !a")),
        Err(FragmentError::Infeasible)
    );
    let empty = build_lphi(&Pltlf0Formula::default()).unwrap();
    assert_eq!(empty.len(), 1);
    assert!(empty.is_satisfiable());
    assert_eq!(empty.maxima().unwrap(), &[int(1)]);
}

#[test]
fn single_trivial_constraint() {
    let m = scenario_maxima(&p0("P<=1 : a")).unwrap();
    assert_eq!(m, [int(1), int(1)]);
    let m = scenario_maxima(&p0("P<=1 : a & !a")).unwrap();
    assert_eq!(m, [int(1), int(0)]);
}

#[test]
fn prefix_acceptance() {
    let table = build_lphi(&p0(PSI1)).unwrap();
    assert!(table.accepts_prefix(1, &t("")));
    assert!(table.accepts_prefix(1, &t("-")));
    assert!(!table.accepts_prefix(1, &t("-;a")));
    assert!(table.accepts_prefix(2, &t("-;a")));
    assert!(!table.accepts_prefix(0, &t("")));
    // a complete trace is its own extension
    assert!(table.accepts_prefix(3, &t("-;a;b")));
    // variables outside the constraints are ignored
    assert!(table.accepts_prefix(1, &t("c;c")));
}

#[test]
fn most_likely_scenarios() {
    // every prefix extends to a trace with a and no later b
    let phi1 = build_lphi(&p0(PHI1)).unwrap();
    for s in ["", "-", "a", "-;a;b", "a;a;-;b"] {
        assert_eq!(
            most_likely_scenario(&phi1, &t(s)).unwrap(),
            Some(2),
            "{s:?}"
        );
    }
    let psi1 = build_lphi(&p0(PSI1)).unwrap();
    assert_eq!(most_likely_scenario(&psi1, &t("")).unwrap(), Some(1));
    assert_eq!(most_likely_scenario(&psi1, &t("-")).unwrap(), Some(1));
    assert_eq!(most_likely_scenario(&psi1, &t("-;a")).unwrap(), Some(2));
}

#[test]
fn monitor_switches_scenario() {
    let table = Arc::new(build_lphi(&p0(PSI1)).unwrap());
    let m0 = MonitorState::new(table).unwrap();
    assert_eq!(m0.best(), Some(1));
    assert_eq!(m0.probability(), ratio(3, 5));
    let m1 = m0.step(&Valuation::empty());
    assert_eq!(m1.best(), Some(1));
    let m2 = m1.step(&Valuation::of(["a"]));
    assert_eq!(m2.best(), Some(2));
    assert_eq!(m2.probability(), ratio(1, 2));
    assert!(!m2.violated());
    let e = m2.event();
    assert_eq!(
        (e.step, e.scenario_index, e.scenario.as_deref()),
        (2, 2, Some("10"))
    );
    // states are values: the earlier one is untouched
    assert_eq!(m1.prefix().len(), 1);
    assert!(m2.alive().iter().all(|i| m1.alive().contains(i)));
}

#[test]
fn monitor_flags_violation() {
    let table = Arc::new(build_lphi(&p0("P>=1 : G !a")).unwrap());
    assert_eq!(table.maxima().unwrap(), &[int(0), int(1)]);
    let m = MonitorState::new(table).unwrap().step(&Valuation::empty());
    assert!(!m.violated());
    let m = m.step(&Valuation::of(["a"]));
    assert!(m.violated());
    assert_eq!(m.event().scenario_index, -1);
    assert_eq!(m.probability(), int(0));
    let m = m.step(&Valuation::empty());
    assert!(m.violated());
}

#[test]
fn monitor_rejects_infeasible_tables() {
    let table = Arc::new(build_lphi(&p0("P>=0.5 : a\nP>=0.6 : !a")).unwrap());
    assert_eq!(
        MonitorState::new(table).unwrap_err(),
        FragmentError::Infeasible
    );
}

#[test]
fn monitoring_a_property() {
    let phi1 = build_lphi(&p0(PHI1)).unwrap();
    let f = |s: &str| parse_formula(s).unwrap();
    assert_eq!(
        monitor_with_property(&phi1, &f("F b"), &t("")).unwrap(),
        Some(2)
    );
    assert_eq!(
        monitor_with_property(&phi1, &f("G(a -> F b)"), &t("a")).unwrap(),
        Some(3)
    );
    assert_eq!(
        monitor_with_property(&phi1, &f("false"), &t("-")).unwrap(),
        None
    );
    let psi1 = build_lphi(&p0(PSI1)).unwrap();
    assert_eq!(
        monitor_with_property(&psi1, &f("G !a"), &t("-")).unwrap(),
        Some(1)
    );
    assert_eq!(
        monitor_with_property(&psi1, &f("G !a"), &t("-;a")).unwrap(),
        None
    );
    assert_eq!(
        monitor_with_property(&psi1, &f("P<=1[a]"), &t("")),
        Err(FragmentError::ProbabilisticProperty)
    );
}

#[test]
fn translation() {
    let phi0 = p0("P<=0.5 : a\nP>=0.6 : X b");
    assert_eq!(
        phi0.to_pltlf(),
        parse_formula("P<=0.5[a] & P>=0.6[X b]").unwrap()
    );
    assert_eq!(Pltlf0Formula::default().to_pltlf(), Formula::True);
    assert_eq!(
        p0(PHI1).to_pltlf(),
        parse_formula("P<=0.8[F a] & P<=0.7[G(a -> F b)]").unwrap()
    );
}

#[test]
fn file_format() {
    let phi = p0("# header\n\nP=0.25 : a U b   # equality\nP>1/2: X a\n");
    assert_eq!(phi.len(), 3);
    assert_eq!(phi.constraints()[0].cmp, Comparison::Ge);
    assert_eq!(phi.constraints()[1].cmp, Comparison::Le);
    assert_eq!(phi.constraints()[2].p, ratio(1, 2));
    let text = phi.to_string();
    assert_eq!(text.lines().next().unwrap(), "P>=0.25 : (a U b)");
    assert_eq!(p0(&text), phi);

    let err = |s: &str| s.parse::<Pltlf0Formula>().unwrap_err();
    assert!(matches!(
        err("P<=0.5 : a\nP<=2 : b"),
        FragmentError::Parse { line: 2, .. }
    ));
    assert!(matches!(
        err("Q<=0.5 : a"),
        FragmentError::Parse { line: 1, .. }
    ));
    assert!(matches!(
        err("P<=0.5 a"),
        FragmentError::Parse { line: 1, .. }
    ));
    assert!(matches!(
        err("P~0.5 : a"),
        FragmentError::Parse { line: 1, .. }
    ));
    assert!(matches!(
        err("P<=0.5 : P>=0.1[a]"),
        FragmentError::Parse { line: 1, .. }
    ));
    assert!(matches!(
        err("P<=0.5 : a &"),
        FragmentError::Parse { line: 1, .. }
    ));
}

#[test]
fn parallel_build_matches() {
    let phi = p0("P<=0.5 : F a\nP>=0.2 : G(a -> F b)\nP<0.9 : X b");
    let a = build_lphi(&phi).unwrap();
    let b = build_lphi_with_jobs(&phi, 4).unwrap();
    assert_eq!(a.maxima().unwrap(), b.maxima().unwrap());
    assert_eq!(a.system().to_string(), b.system().to_string());
}

#[test]
fn repeated_formulas_share_scenarios() {
    let table = build_lphi(&p0("P=0.8 : F a\nP<=0.3 : G !a")).unwrap();
    assert_eq!(table.len(), 8);
    let sat: Vec<bool> = (0..8).map(|i| table.scenario_satisfiable(i)).collect();
    // 01x and 10x assert F a both ways, and G !a is the negation of F a
    assert_eq!(sat, [false, true, false, false, false, false, true, false]);
    assert_eq!(table.maxima().unwrap()[6], ratio(4, 5));
    assert_eq!(table.maxima().unwrap()[1], ratio(1, 5));
    assert!(table.accepts_prefix(6, &t("a")));
    assert!(!table.accepts_prefix(2, &t("a")));
}
