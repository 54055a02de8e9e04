use crate::formula::{parse_valuation, Valuation};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Label {
    /// Matches every valuation.
    Any,
    Exactly(Valuation),
}

impl Label {
    pub fn matches(&self, v: &Valuation) -> bool {
        match self {
            Label::Any => true,
            Label::Exactly(w) => w == v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NfaTransition {
    pub from: usize,
    pub label: Label,
    pub to: usize,
}

/// A finite automaton over valuations. States are `0..states`.
///
/// JSON form: `{"states": 2, "initial": [0], "finals": [1],
/// "transitions": [{"from": 0, "label": "a,b", "to": 1}]}` where a label is
/// a valuation (`-` for the empty one) or `*` for any valuation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceNFA {
    pub states: usize,
    pub initial: Vec<usize>,
    pub finals: Vec<usize>,
    pub transitions: Vec<NfaTransition>,
}

#[derive(Serialize, Deserialize)]
struct RawTransition {
    from: usize,
    label: String,
    to: usize,
}

#[derive(Serialize, Deserialize)]
struct RawNfa {
    states: usize,
    initial: Vec<usize>,
    finals: Vec<usize>,
    transitions: Vec<RawTransition>,
}

impl TraceNFA {
    /// Accepts every nonempty trace.
    pub fn universal() -> Self {
        TraceNFA::extending(&[])
    }

    /// Accepts exactly `trace`.
    pub fn singleton(trace: &[Valuation]) -> Self {
        let n = trace.len();
        TraceNFA {
            states: n + 1,
            initial: vec![0],
            finals: vec![n],
            transitions: trace
                .iter()
                .enumerate()
                .map(|(i, v)| NfaTransition {
                    from: i,
                    label: Label::Exactly(v.clone()),
                    to: i + 1,
                })
                .collect(),
        }
    }

    /// Accepts the nonempty traces that start with `prefix`.
    pub fn extending(prefix: &[Valuation]) -> Self {
        let mut nfa = TraceNFA::singleton(prefix);
        let n = prefix.len();
        nfa.transitions.push(NfaTransition {
            from: n,
            label: Label::Any,
            to: n,
        });
        if n == 0 {
            // the empty trace is not a trace; require one step
            nfa.states = 2;
            nfa.finals = vec![1];
            nfa.transitions = vec![
                NfaTransition {
                    from: 0,
                    label: Label::Any,
                    to: 1,
                },
                NfaTransition {
                    from: 1,
                    label: Label::Any,
                    to: 1,
                },
            ];
        }
        nfa
    }

    pub fn step(&self, from: usize, v: &Valuation) -> BTreeSet<usize> {
        self.transitions
            .iter()
            .filter(|t| t.from == from && t.label.matches(v))
            .map(|t| t.to)
            .collect()
    }

    pub fn is_final(&self, s: usize) -> bool {
        self.finals.contains(&s)
    }

    pub fn accepts(&self, trace: &[Valuation]) -> bool {
        let mut cur: BTreeSet<usize> = self.initial.iter().copied().collect();
        for v in trace {
            cur = cur.iter().flat_map(|&s| self.step(s, v)).collect();
        }
        cur.iter().any(|&s| self.is_final(s))
    }

    /// Variables mentioned by any label.
    pub fn variables(&self) -> BTreeSet<String> {
        self.transitions
            .iter()
            .filter_map(|t| match &t.label {
                Label::Exactly(v) => Some(v.0.iter().cloned()),
                Label::Any => None,
            })
            .flatten()
            .collect()
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let raw: RawNfa = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let transitions = raw
            .transitions
            .into_iter()
            .map(|t| {
                let label = if t.label.trim() == "*" {
                    Label::Any
                } else {
                    Label::Exactly(parse_valuation(&t.label)?)
                };
                Ok(NfaTransition {
                    from: t.from,
                    label,
                    to: t.to,
                })
            })
            .collect::<Result<Vec<_>, String>>()?;
        let nfa = TraceNFA {
            states: raw.states,
            initial: raw.initial,
            finals: raw.finals,
            transitions,
        };
        let bad = nfa
            .initial
            .iter()
            .chain(&nfa.finals)
            .chain(nfa.transitions.iter().flat_map(|t| [&t.from, &t.to]))
            .find(|&&s| s >= nfa.states);
        if let Some(s) = bad {
            return Err(format!(
                "state {s} out of range (automaton has {} states)",
                nfa.states
            ));
        }
        Ok(nfa)
    }

    pub fn to_json(&self) -> String {
        let raw = RawNfa {
            states: self.states,
            initial: self.initial.clone(),
            finals: self.finals.clone(),
            transitions: self
                .transitions
                .iter()
                .map(|t| RawTransition {
                    from: t.from,
                    label: match &t.label {
                        Label::Any => "*".into(),
                        Label::Exactly(v) => v.to_string(),
                    },
                    to: t.to,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&raw).expect("serializable")
    }
}
