use crate::formula::{Formula, Valuation};
use crate::rational::{fmt_rational, is_probability, serialize_opt_fraction, Rational};
use num_traits::{One, Zero};
use serde::Serialize;

/// A node of a finite interpretation tree. `probability` is the weight of
/// the edge from the parent and is absent at the root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WitnessNode {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<usize>,
    pub valuation: Valuation,
    #[serde(
        serialize_with = "serialize_opt_fraction",
        skip_serializing_if = "Option::is_none"
    )]
    pub probability: Option<Rational>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<WitnessNode>,
}

impl WitnessNode {
    pub fn leaf(valuation: Valuation) -> Self {
        WitnessNode {
            state: None,
            valuation,
            probability: None,
            children: Vec::new(),
        }
    }

    pub fn branch(valuation: Valuation, children: Vec<(Rational, WitnessNode)>) -> Self {
        let children = children
            .into_iter()
            .map(|(p, mut c)| {
                c.probability = Some(p);
                c
            })
            .collect();
        WitnessNode {
            state: None,
            valuation,
            probability: None,
            children,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WitnessModel {
    pub root: WitnessNode,
}

impl WitnessModel {
    pub fn node_count(&self) -> usize {
        fn go(n: &WitnessNode) -> usize {
            1 + n.children.iter().map(go).sum::<usize>()
        }
        go(&self.root)
    }

    pub fn depth(&self) -> usize {
        fn go(n: &WitnessNode) -> usize {
            1 + n.children.iter().map(go).max().unwrap_or(0)
        }
        go(&self.root)
    }

    /// Every root-to-leaf branch with the product of its edge weights.
    pub fn branches(&self) -> Vec<(Vec<Valuation>, Rational)> {
        fn go(
            n: &WitnessNode,
            path: &mut Vec<Valuation>,
            p: Rational,
            out: &mut Vec<(Vec<Valuation>, Rational)>,
        ) {
            path.push(n.valuation.clone());
            if n.is_leaf() {
                out.push((path.clone(), p));
            } else {
                for c in &n.children {
                    let w = c.probability.clone().unwrap_or_else(Rational::zero);
                    go(c, path, &p * w, out);
                }
            }
            path.pop();
        }
        let mut out = Vec::new();
        go(&self.root, &mut Vec::new(), Rational::one(), &mut out);
        out
    }

    /// Indented text rendering, one node per line.
    pub fn render(&self) -> String {
        fn go(n: &WitnessNode, depth: usize, out: &mut String) {
            out.push_str(&"  ".repeat(depth));
            if let Some(p) = &n.probability {
                out.push_str(&format!("[{}] ", fmt_rational(p)));
            }
            out.push_str(&n.valuation.to_string());
            if let Some(q) = n.state {
                out.push_str(&format!("  (q{q})"));
            }
            out.push('\n');
            for c in &n.children {
                go(c, depth + 1, out);
            }
        }
        let mut out = String::new();
        go(&self.root, 0, &mut out);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("node at {path:?} has a child without a probability")]
    MissingProbability { path: Vec<usize> },
    #[error("node at {path:?} has a probability outside [0,1]")]
    OutOfRange { path: Vec<usize> },
    #[error("children of node at {path:?} sum to {sum}, not 1")]
    BadSum { path: Vec<usize>, sum: String },
}

fn validate(n: &WitnessNode, path: &mut Vec<usize>) -> Result<(), ModelError> {
    if n.is_leaf() {
        return Ok(());
    }
    let mut sum = Rational::zero();
    for (i, c) in n.children.iter().enumerate() {
        path.push(i);
        match &c.probability {
            None => return Err(ModelError::MissingProbability { path: path.clone() }),
            Some(p) if !is_probability(p) => {
                return Err(ModelError::OutOfRange { path: path.clone() })
            }
            Some(p) => sum += p,
        }
        validate(c, path)?;
        path.pop();
    }
    if !sum.is_one() {
        return Err(ModelError::BadSum {
            path: path.clone(),
            sum: fmt_rational(&sum),
        });
    }
    Ok(())
}

/// Decides `I, ε ⊨ f` directly on the tree.
///
/// `X` needs a non-leaf node whose children all satisfy the argument; `U`
/// is strong, so its second clause applies only at inner nodes; `P` sums
/// the weights of the satisfying children (an empty sum is 0).
pub fn check_model(m: &WitnessModel, f: &Formula) -> Result<bool, ModelError> {
    validate(&m.root, &mut Vec::new())?;
    Ok(holds(f, &m.root))
}

fn holds(f: &Formula, w: &WitnessNode) -> bool {
    match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Prop(n) => w.valuation.contains(n),
        Formula::Not(x) => !holds(x, w),
        Formula::And(l, r) => holds(l, w) && holds(r, w),
        Formula::Or(l, r) => holds(l, w) || holds(r, w),
        Formula::Implies(l, r) => !holds(l, w) || holds(r, w),
        Formula::Next(x) => !w.is_leaf() && w.children.iter().all(|c| holds(x, c)),
        Formula::Until(l, r) => {
            holds(r, w) || (holds(l, w) && !w.is_leaf() && w.children.iter().all(|c| holds(f, c)))
        }
        Formula::Eventually(x) => holds(&Formula::until(Formula::True, (**x).clone()), w),
        Formula::Always(x) => !holds(&Formula::eventually(Formula::not((**x).clone())), w),
        Formula::Prob(cmp, p, x) => {
            let sum = w
                .children
                .iter()
                .filter(|c| holds(x, c))
                .fold(Rational::zero(), |acc, c| {
                    acc + c.probability.clone().unwrap_or_else(Rational::zero)
                });
            cmp.holds(&sum, p)
        }
    }
}
