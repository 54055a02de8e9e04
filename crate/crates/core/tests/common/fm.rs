//! Fourier–Motzkin elimination as an independent feasibility oracle.

use num_traits::{Signed, Zero};
use pltlf::lp::{LinearSystem, Relation};
use pltlf::rational::Rational;

/// `a·x ≤ b` (or `<` when `strict`).
#[derive(Clone, Debug)]
pub struct Row {
    pub a: Vec<Rational>,
    pub b: Rational,
    pub strict: bool,
}

pub fn rows_of(sys: &LinearSystem) -> Vec<Row> {
    let n = sys.variables().len();
    let mut out = Vec::new();
    for c in sys.constraints() {
        let mut a = vec![Rational::zero(); n];
        for (&j, v) in &c.coeffs {
            a[j] = v.clone();
        }
        let neg = |a: &Vec<Rational>| a.iter().map(|v| -v).collect::<Vec<_>>();
        let b = c.bound.clone();
        match c.relation {
            Relation::Le => out.push(Row {
                a,
                b,
                strict: false,
            }),
            Relation::Lt => out.push(Row { a, b, strict: true }),
            Relation::Ge => out.push(Row {
                a: neg(&a),
                b: -b,
                strict: false,
            }),
            Relation::Gt => out.push(Row {
                a: neg(&a),
                b: -b,
                strict: true,
            }),
            Relation::Eq => {
                out.push(Row {
                    a: neg(&a),
                    b: -b.clone(),
                    strict: false,
                });
                out.push(Row {
                    a,
                    b,
                    strict: false,
                });
            }
        }
    }
    out
}

pub fn eliminate(rows: Vec<Row>, j: usize) -> Vec<Row> {
    let (mut pos, mut negs, mut rest) = (Vec::new(), Vec::new(), Vec::new());
    for r in rows {
        if r.a[j].is_positive() {
            pos.push(r);
        } else if r.a[j].is_negative() {
            negs.push(r);
        } else {
            rest.push(r);
        }
    }
    for p in &pos {
        for q in &negs {
            let (sp, sq) = (-&q.a[j], p.a[j].clone());
            let a =
                p.a.iter()
                    .zip(&q.a)
                    .map(|(x, y)| x * &sp + y * &sq)
                    .collect();
            rest.push(Row {
                a,
                b: &p.b * &sp + &q.b * &sq,
                strict: p.strict || q.strict,
            });
        }
    }
    rest
}

pub fn fm_feasible(rows: Vec<Row>, n: usize) -> bool {
    let rows = (0..n).fold(rows, eliminate);
    rows.iter().all(|r| {
        if r.strict {
            r.b.is_positive()
        } else {
            !r.b.is_negative()
        }
    })
}

/// Supremum of `x_k` over the closure of the region, assuming it is bounded
/// and nonempty.
pub fn fm_sup(rows: Vec<Row>, n: usize, k: usize) -> Rational {
    let rows = (0..n).filter(|&j| j != k).fold(rows, eliminate);
    rows.iter()
        .filter(|r| r.a[k].is_positive())
        .map(|r| &r.b / &r.a[k])
        .min()
        .expect("box rows bound every variable")
}
