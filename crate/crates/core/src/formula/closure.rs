use super::{Formula, Valuation};
use fixedbitset::FixedBitSet;
use std::collections::{BTreeSet, HashMap};

/// The negation-closed subformula set of a normalized formula.
///
/// Members are ordered by AST size, then by their printed form, so indices
/// (and everything keyed by them) are reproducible.
#[derive(Debug, Clone)]
pub struct ClosureSet {
    members: Vec<Formula>,
    index: HashMap<Formula, usize>,
    neg: Vec<usize>,
    root: usize,
    probs: Vec<usize>,
    nexts: Vec<usize>,
    free: Vec<usize>,
    vars: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Free,
    Forced,
    Derived,
}

impl ClosureSet {
    pub fn new(root: &Formula) -> Self {
        let root = root.normalize();
        let mut seen: HashMap<Formula, ()> = HashMap::new();
        let mut stack = vec![root.clone()];
        while let Some(f) = stack.pop() {
            if seen.contains_key(&f) {
                continue;
            }
            for c in f.children() {
                stack.push(c.clone());
            }
            stack.push(f.clone().negated());
            if let Formula::Until(..) = f {
                stack.push(Formula::next(f.clone()));
            }
            seen.insert(f, ());
        }
        let mut keyed: Vec<(usize, String, Formula)> = seen
            .into_keys()
            .map(|f| (f.size(), f.to_string(), f))
            .collect();
        keyed.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
        let members: Vec<Formula> = keyed.into_iter().map(|(_, _, f)| f).collect();
        let index: HashMap<Formula, usize> = members
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, f)| (f, i))
            .collect();
        let neg = members
            .iter()
            .map(|f| index[&f.clone().negated()])
            .collect();
        let probs = (0..members.len())
            .filter(|&i| matches!(members[i], Formula::Prob(..)))
            .collect();
        let nexts = (0..members.len())
            .filter(|&i| matches!(members[i], Formula::Next(..)))
            .collect();
        let root_idx = index[&root];
        let vars = root.variables();
        let mut c = ClosureSet {
            members,
            index,
            neg,
            root: root_idx,
            probs,
            nexts,
            free: Vec::new(),
            vars,
        };
        c.free = (0..c.len())
            .filter(|&i| c.representative(i) == i && c.kind(i) == Kind::Free)
            .collect();
        c
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[Formula] {
        &self.members
    }

    pub fn get(&self, i: usize) -> &Formula {
        &self.members[i]
    }

    pub fn index_of(&self, f: &Formula) -> Option<usize> {
        self.index.get(f).copied()
    }

    pub fn contains(&self, f: &Formula) -> bool {
        self.index.contains_key(f)
    }

    /// Index of the normalized negation of member `i`.
    pub fn negation(&self, i: usize) -> usize {
        self.neg[i]
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn root_formula(&self) -> &Formula {
        &self.members[self.root]
    }

    /// Indices of all probabilistic members (both polarities).
    pub fn prob_indices(&self) -> &[usize] {
        &self.probs
    }

    pub fn next_indices(&self) -> &[usize] {
        &self.nexts
    }

    pub fn variables(&self) -> &BTreeSet<String> {
        &self.vars
    }

    /// Index of the argument of a `X`, `P` or `!` member.
    pub fn argument(&self, i: usize) -> Option<usize> {
        match &self.members[i] {
            Formula::Next(x) | Formula::Prob(_, _, x) | Formula::Not(x) => self.index_of(x),
            _ => None,
        }
    }

    /// Number of atoms, which is `2^free`.
    pub fn atom_count(&self) -> u64 {
        1u64 << self.free.len()
    }

    pub fn atoms(&self) -> Atoms<'_> {
        Atoms {
            closure: self,
            next: 0,
            end: self.atom_count(),
        }
    }

    /// The smaller index of the pair `{i, neg(i)}`; the pair's positive side.
    fn representative(&self, i: usize) -> usize {
        i.min(self.neg[i])
    }

    fn kind(&self, i: usize) -> Kind {
        match &self.members[i] {
            Formula::Prop(_) | Formula::Next(_) | Formula::Prob(..) => Kind::Free,
            Formula::True => Kind::Forced,
            _ => Kind::Derived,
        }
    }

    /// Builds the atom that assigns `choice` bit `k` to the `k`th free pair.
    pub fn atom_from_choice(&self, choice: u64) -> Atom {
        assert!(
            self.free.len() < 64,
            "closure too large for atom enumeration"
        );
        let n = self.len();
        let mut val = vec![false; n];
        let mut done = vec![false; n];
        for (k, &i) in self.free.iter().enumerate() {
            val[i] = (choice >> k) & 1 == 1;
            done[i] = true;
        }
        let truth = |val: &[bool], j: usize| -> bool {
            let r = j.min(self.neg[j]);
            if r == j {
                val[j]
            } else {
                !val[r]
            }
        };
        for i in 0..n {
            if self.representative(i) != i || done[i] {
                continue;
            }
            val[i] = match &self.members[i] {
                Formula::True => true,
                Formula::And(l, r) => {
                    truth(&val, self.index[&**l]) && truth(&val, self.index[&**r])
                }
                Formula::Until(l, r) => {
                    let step = self.index[&Formula::next(self.members[i].clone())];
                    truth(&val, self.index[&**r])
                        || (truth(&val, self.index[&**l]) && truth(&val, step))
                }
                other => unreachable!("unexpected derived member {other}"),
            };
            done[i] = true;
        }
        let mut bits = FixedBitSet::with_capacity(n);
        for i in 0..n {
            if truth(&val, i) {
                bits.insert(i);
            }
        }
        Atom::from_bits(self, bits)
    }

    /// Independent check of the three atom conditions on an arbitrary subset.
    pub fn is_atom(&self, bits: &FixedBitSet) -> bool {
        let has = |f: &Formula| bits.contains(self.index[f]);
        for i in 0..self.len() {
            if bits.contains(i) == bits.contains(self.neg[i]) {
                return false;
            }
            match &self.members[i] {
                Formula::True if !bits.contains(i) => return false,
                Formula::And(l, r) if bits.contains(i) != (has(l) && has(r)) => return false,
                Formula::Until(l, r) => {
                    let step = Formula::next(self.members[i].clone());
                    if bits.contains(i) != (has(r) || (has(l) && has(&step))) {
                        return false;
                    }
                }
                _ => {}
            }
        }
        true
    }
}

/// A maximally consistent subset of the closure.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    bits: FixedBitSet,
    valuation: Valuation,
    probs: Vec<usize>,
}

impl Atom {
    pub fn from_bits(closure: &ClosureSet, bits: FixedBitSet) -> Self {
        let valuation = Valuation(
            closure
                .members
                .iter()
                .enumerate()
                .filter_map(|(i, f)| match f {
                    Formula::Prop(n) if bits.contains(i) => Some(n.clone()),
                    _ => None,
                })
                .collect(),
        );
        let probs = closure
            .probs
            .iter()
            .copied()
            .filter(|&i| bits.contains(i))
            .collect();
        Atom {
            bits,
            valuation,
            probs,
        }
    }

    pub fn contains(&self, i: usize) -> bool {
        self.bits.contains(i)
    }

    pub fn bits(&self) -> &FixedBitSet {
        &self.bits
    }

    /// The propositional part.
    pub fn valuation(&self) -> &Valuation {
        &self.valuation
    }

    /// Closure indices of the probabilistic formulas in the atom, ascending.
    pub fn probs(&self) -> &[usize] {
        &self.probs
    }

    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.ones()
    }

    pub fn describe(&self, closure: &ClosureSet) -> Vec<String> {
        self.members().map(|i| closure.get(i).to_string()).collect()
    }
}

/// Lazy, restartable enumeration of all atoms in a fixed order.
pub struct Atoms<'c> {
    closure: &'c ClosureSet,
    next: u64,
    end: u64,
}

impl Iterator for Atoms<'_> {
    type Item = Atom;

    fn next(&mut self) -> Option<Atom> {
        if self.next >= self.end {
            return None;
        }
        let a = self.closure.atom_from_choice(self.next);
        self.next += 1;
        Some(a)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = (self.end - self.next) as usize;
        (n, Some(n))
    }
}
