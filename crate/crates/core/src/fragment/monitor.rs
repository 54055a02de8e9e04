use super::{scenario_acceptor, FragmentError, PrefixRun, ScenarioTable};
use crate::automaton::TreeAutomaton;
use crate::formula::{Formula, Valuation};
use crate::rational::{int, Rational};
use serde::Serialize;
use std::sync::Arc;

/// Picks, among the scenarios accepted by `accepts`, the first one with the
/// largest positive maximum. Scenarios with maximum 0 are never tested.
fn best_scenario(maxima: &[Rational], mut accepts: impl FnMut(usize) -> bool) -> Option<usize> {
    let mut best: Option<usize> = None;
    let zero = int(0);
    for (i, m) in maxima.iter().enumerate() {
        let current = best.map_or(&zero, |b| &maxima[b]);
        if *m > zero && m > current && accepts(i) {
            best = Some(i);
        }
    }
    best
}

/// Index of the most likely scenario accepting `t`, `None` if no scenario
/// with positive weight does.
pub fn most_likely_scenario(
    table: &ScenarioTable,
    t: &[Valuation],
) -> Result<Option<usize>, FragmentError> {
    let maxima = table.maxima()?;
    Ok(best_scenario(maxima, |i| table.accepts_prefix(i, t)))
}

/// Like [`most_likely_scenario`], but a scenario must also leave room for
/// `psi` to hold on some extension of `t`.
pub fn monitor_with_property(
    table: &ScenarioTable,
    psi: &Formula,
    t: &[Valuation],
) -> Result<Option<usize>, FragmentError> {
    let state = MonitorState::with_property(Arc::new(table.clone()), psi)?;
    Ok(t.iter().fold(state, |s, v| s.step(v)).best())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MonitorEvent {
    pub step: usize,
    /// `-1` when nothing accepts the prefix.
    pub scenario_index: i64,
    pub scenario: Option<String>,
    pub scenario_description: String,
    #[serde(serialize_with = "crate::rational::serialize_fraction")]
    pub probability: Rational,
    pub violated: bool,
}

/// Incremental monitor over a fixed scenario table. Stepping returns a new
/// state; scenarios that stop accepting are dropped and never retested.
#[derive(Debug, Clone)]
pub struct MonitorState {
    table: Arc<ScenarioTable>,
    acceptors: Arc<Vec<TreeAutomaton>>,
    alive: Vec<(usize, PrefixRun)>,
    prefix: Vec<Valuation>,
    best: Option<usize>,
}

impl MonitorState {
    pub fn new(table: Arc<ScenarioTable>) -> Result<Self, FragmentError> {
        let acceptors = (0..table.len())
            .map(|i| table.acceptor(i).clone())
            .collect();
        Self::from_parts(table, acceptors)
    }

    /// A monitor whose scenarios are additionally conjoined with `psi`.
    pub fn with_property(table: Arc<ScenarioTable>, psi: &Formula) -> Result<Self, FragmentError> {
        if psi.has_prob() {
            return Err(FragmentError::ProbabilisticProperty);
        }
        let phi = table.formula();
        let acceptors = (0..table.len())
            .map(|i| {
                let mut parts = phi.scenario(i);
                parts.push(psi.clone());
                scenario_acceptor(&Formula::conjunction(parts))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_parts(table, acceptors)
    }

    fn from_parts(
        table: Arc<ScenarioTable>,
        acceptors: Vec<TreeAutomaton>,
    ) -> Result<Self, FragmentError> {
        table.maxima()?;
        let alive = acceptors
            .iter()
            .enumerate()
            .map(|(i, a)| (i, PrefixRun::start(a)))
            .filter(|(_, r)| r.accepting())
            .collect();
        let mut state = MonitorState {
            table,
            acceptors: Arc::new(acceptors),
            alive,
            prefix: Vec::new(),
            best: None,
        };
        state.best = state.recompute_best();
        Ok(state)
    }

    fn recompute_best(&self) -> Option<usize> {
        let maxima = self.table.maxima().expect("checked on construction");
        best_scenario(maxima, |i| self.alive.iter().any(|(j, _)| *j == i))
    }

    pub fn step(&self, v: &Valuation) -> MonitorState {
        let alive = self
            .alive
            .iter()
            .filter_map(|(i, run)| {
                let mut run = run.clone();
                run.step(&self.acceptors[*i], v);
                run.accepting().then_some((*i, run))
            })
            .collect();
        let mut prefix = self.prefix.clone();
        prefix.push(v.clone());
        let mut next = MonitorState {
            table: Arc::clone(&self.table),
            acceptors: Arc::clone(&self.acceptors),
            alive,
            prefix,
            best: None,
        };
        next.best = next.recompute_best();
        next
    }

    pub fn table(&self) -> &ScenarioTable {
        &self.table
    }

    pub fn prefix(&self) -> &[Valuation] {
        &self.prefix
    }

    /// Scenarios still accepting the prefix, in index order.
    pub fn alive(&self) -> Vec<usize> {
        self.alive.iter().map(|(i, _)| *i).collect()
    }

    pub fn best(&self) -> Option<usize> {
        self.best
    }

    pub fn probability(&self) -> Rational {
        self.best
            .and_then(|b| self.table.max(b).cloned())
            .unwrap_or_else(|| int(0))
    }

    /// No scenario with positive weight accepts the prefix.
    pub fn violated(&self) -> bool {
        self.best.is_none()
    }

    pub fn event(&self) -> MonitorEvent {
        let phi = self.table.formula();
        MonitorEvent {
            step: self.prefix.len(),
            scenario_index: self.best.map_or(-1, |b| b as i64),
            scenario: self.best.map(|b| phi.label(b)),
            scenario_description: self
                .best
                .map_or_else(|| "none".to_string(), |b| phi.describe(b)),
            probability: self.probability(),
            violated: self.violated(),
        }
    }
}
