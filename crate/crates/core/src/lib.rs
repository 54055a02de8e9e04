//! Reasoning for probabilistic LTL over finite traces.

pub mod automaton;
pub mod formula;
pub mod fragment;
pub mod lp;
pub mod mining;
pub mod rational;
pub mod weighted;
