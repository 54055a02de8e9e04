//! Exact linear feasibility and single-variable maximization over the
//! rationals, with mixed strict and non-strict rows.
//!
//! Everything runs on a dense two-phase simplex tableau with Bland's rule,
//! so it always terminates. A strict row `a·x < b` is decided by adding a
//! shared slack `ε` (`a·x + ε ≤ b`, `0 ≤ ε ≤ 1`) and asking whether the best
//! `ε` is positive.

use crate::rational::{fmt_rational, Rational};
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Ge,
    Lt,
    Gt,
    Eq,
}

impl Relation {
    pub fn is_strict(self) -> bool {
        matches!(self, Relation::Lt | Relation::Gt)
    }

    pub fn holds(self, lhs: &Rational, rhs: &Rational) -> bool {
        match self {
            Relation::Le => lhs <= rhs,
            Relation::Ge => lhs >= rhs,
            Relation::Lt => lhs < rhs,
            Relation::Gt => lhs > rhs,
            Relation::Eq => lhs == rhs,
        }
    }

    fn relaxed(self) -> Self {
        match self {
            Relation::Lt => Relation::Le,
            Relation::Gt => Relation::Ge,
            other => other,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Lt => "<",
            Relation::Gt => ">",
            Relation::Eq => "=",
        }
    }
}

impl From<crate::formula::Comparison> for Relation {
    fn from(c: crate::formula::Comparison) -> Self {
        use crate::formula::Comparison;
        match c {
            Comparison::Le => Relation::Le,
            Comparison::Ge => Relation::Ge,
            Comparison::Lt => Relation::Lt,
            Comparison::Gt => Relation::Gt,
        }
    }
}

/// `Σ coeff·x  relation  bound`, keyed by variable position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearConstraint {
    pub coeffs: BTreeMap<usize, Rational>,
    pub relation: Relation,
    pub bound: Rational,
}

impl LinearConstraint {
    pub fn lhs(&self, point: &[Rational]) -> Rational {
        self.coeffs
            .iter()
            .fold(Rational::zero(), |acc, (&j, c)| acc + c * &point[j])
    }

    pub fn satisfied_by(&self, point: &[Rational]) -> bool {
        self.relation.holds(&self.lhs(point), &self.bound)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LpError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("system is infeasible")]
    Infeasible,
    #[error("objective is unbounded")]
    Unbounded,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LinearSystem {
    vars: Vec<String>,
    constraints: Vec<LinearConstraint>,
}

impl LinearSystem {
    pub fn new<I, S>(vars: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        LinearSystem {
            vars: vars.into_iter().map(Into::into).collect(),
            constraints: Vec::new(),
        }
    }

    pub fn variables(&self) -> &[String] {
        &self.vars
    }

    pub fn constraints(&self) -> &[LinearConstraint] {
        &self.constraints
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    /// Adds a row given by `(position, coefficient)` pairs; zero
    /// coefficients are dropped and repeated positions are summed.
    pub fn push<I>(&mut self, terms: I, relation: Relation, bound: Rational)
    where
        I: IntoIterator<Item = (usize, Rational)>,
    {
        let mut coeffs: BTreeMap<usize, Rational> = BTreeMap::new();
        for (j, c) in terms {
            assert!(j < self.vars.len(), "variable index {j} not declared");
            *coeffs.entry(j).or_insert_with(Rational::zero) += c;
        }
        coeffs.retain(|_, c| !c.is_zero());
        self.constraints.push(LinearConstraint {
            coeffs,
            relation,
            bound,
        });
    }

    /// Same as [`push`](Self::push) but with variable names.
    pub fn push_named<'a, I>(
        &mut self,
        terms: I,
        relation: Relation,
        bound: Rational,
    ) -> Result<(), LpError>
    where
        I: IntoIterator<Item = (&'a str, Rational)>,
    {
        let mut resolved = Vec::new();
        for (name, c) in terms {
            let j = self
                .var_index(name)
                .ok_or_else(|| LpError::UnknownVariable(name.to_string()))?;
            resolved.push((j, c));
        }
        self.push(resolved, relation, bound);
        Ok(())
    }

    pub fn satisfied_by(&self, point: &[Rational]) -> bool {
        point.len() == self.vars.len() && self.constraints.iter().all(|c| c.satisfied_by(point))
    }

    fn has_strict(&self) -> bool {
        self.constraints.iter().any(|c| c.relation.is_strict())
    }

    fn relaxed(&self) -> LinearSystem {
        let mut s = self.clone();
        for c in &mut s.constraints {
            c.relation = c.relation.relaxed();
        }
        s
    }

    fn with_fixed(&self, var: usize, value: Rational) -> LinearSystem {
        let mut s = self.clone();
        s.push([(var, Rational::one())], Relation::Eq, value);
        s
    }
}

impl fmt::Display for LinearSystem {
    /// One row per line with left-hand sides padded to a common width.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<(String, String)> = self
            .constraints
            .iter()
            .map(|c| {
                let mut lhs = String::new();
                for (k, (&j, coef)) in c.coeffs.iter().enumerate() {
                    let name = &self.vars[j];
                    let mag = coef.abs();
                    let sign = if coef.is_negative() { "-" } else { "+" };
                    if k == 0 {
                        if coef.is_negative() {
                            lhs.push('-');
                        }
                    } else {
                        lhs.push_str(&format!(" {sign} "));
                    }
                    if mag.is_one() {
                        lhs.push_str(name);
                    } else {
                        lhs.push_str(&format!("{}*{name}", fmt_rational(&mag)));
                    }
                }
                if lhs.is_empty() {
                    lhs.push('0');
                }
                (
                    lhs,
                    format!("{} {}", c.relation.symbol(), fmt_rational(&c.bound)),
                )
            })
            .collect();
        let width = rows
            .iter()
            .map(|(l, _)| l.chars().count())
            .max()
            .unwrap_or(0);
        for (l, r) in rows {
            writeln!(f, "{l:<width$} {r}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Feasibility {
    Feasible(Vec<Rational>),
    Infeasible,
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible(_))
    }

    pub fn witness(&self) -> Option<&[Rational]> {
        match self {
            Feasibility::Feasible(w) => Some(w),
            Feasibility::Infeasible => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Optimum {
    pub supremum: Rational,
    pub attained: bool,
    pub witness: Option<Vec<Rational>>,
}

/// Decides whether the system has a solution; a returned witness
/// satisfies every row exactly, strict ones included.
pub fn solve_feasibility(sys: &LinearSystem) -> Feasibility {
    if !sys.has_strict() {
        return match optimize(sys, None, false) {
            Outcome::Optimal { point, .. } => Feasibility::Feasible(point),
            _ => Feasibility::Infeasible,
        };
    }
    match optimize(sys, None, true) {
        Outcome::Optimal { value, point } if value.is_positive() => Feasibility::Feasible(point),
        _ => Feasibility::Infeasible,
    }
}

/// Supremum of one variable over the feasible region.
///
/// With strict rows the supremum is taken over the closure of the region
/// and `attained` reports whether some feasible point reaches it. Ties
/// among optimal points are broken towards the lexicographically smallest
/// assignment (non-strict systems only).
pub fn maximize(sys: &LinearSystem, objective: usize) -> Result<Optimum, LpError> {
    if !solve_feasibility(sys).is_feasible() {
        return Err(LpError::Infeasible);
    }
    let supremum = match optimize(&sys.relaxed(), Some(objective), false) {
        Outcome::Optimal { value, .. } => value,
        Outcome::Unbounded => return Err(LpError::Unbounded),
        Outcome::Infeasible => return Err(LpError::Infeasible),
    };
    let pinned = sys.with_fixed(objective, supremum.clone());
    if sys.has_strict() {
        let witness = solve_feasibility(&pinned)
            .witness()
            .map(<[Rational]>::to_vec);
        return Ok(Optimum {
            supremum,
            attained: witness.is_some(),
            witness,
        });
    }
    let mut current = pinned;
    let mut point = None;
    for j in 0..sys.vars.len() {
        match optimize_min(&current, j) {
            Outcome::Optimal { value, point: p } => {
                current = current.with_fixed(j, value);
                point = Some(p);
            }
            Outcome::Unbounded => {}
            Outcome::Infeasible => unreachable!("pinned system lost feasibility"),
        }
    }
    let witness = match point {
        Some(p) => p,
        None => match solve_feasibility(&current) {
            Feasibility::Feasible(p) => p,
            Feasibility::Infeasible => unreachable!("pinned system lost feasibility"),
        },
    };
    Ok(Optimum {
        supremum,
        attained: true,
        witness: Some(witness),
    })
}

/// Convenience wrapper taking the variable name.
pub fn maximize_named(sys: &LinearSystem, objective: &str) -> Result<Optimum, LpError> {
    let j = sys
        .var_index(objective)
        .ok_or_else(|| LpError::UnknownVariable(objective.to_string()))?;
    maximize(sys, j)
}

fn optimize_min(sys: &LinearSystem, var: usize) -> Outcome {
    match optimize_linear(sys, &[(var, -Rational::one())], false) {
        Outcome::Optimal { value, point } => Outcome::Optimal {
            value: -value,
            point,
        },
        other => other,
    }
}

#[derive(Debug)]
enum Outcome {
    Infeasible,
    Unbounded,
    Optimal {
        value: Rational,
        point: Vec<Rational>,
    },
}

/// With `eps`, strict rows get the shared slack and the objective is `ε`.
fn optimize(sys: &LinearSystem, objective: Option<usize>, eps: bool) -> Outcome {
    let obj: Vec<(usize, Rational)> = objective
        .map(|j| (j, Rational::one()))
        .into_iter()
        .collect();
    optimize_linear(sys, &obj, eps)
}

/// Maximizes `Σ c_j x_j` (or `ε` when `eps` is set).
fn optimize_linear(sys: &LinearSystem, objective: &[(usize, Rational)], eps: bool) -> Outcome {
    // Column layout: for each original variable either one column (known
    // nonnegative) or a `+`/`-` pair, then ε, then one slack per inequality.
    let n = sys.vars.len();
    let nonneg: Vec<bool> = (0..n)
        .map(|j| {
            sys.constraints.iter().any(|c| {
                c.coeffs.len() == 1
                    && c.bound.is_zero()
                    && c.coeffs.get(&j).is_some_and(|v| v.is_positive())
                    && matches!(c.relation, Relation::Ge)
            })
        })
        .collect();
    let mut var_cols: Vec<(usize, Option<usize>)> = Vec::with_capacity(n);
    let mut ncols = 0;
    for &nn in &nonneg {
        if nn {
            var_cols.push((ncols, None));
            ncols += 1;
        } else {
            var_cols.push((ncols, Some(ncols + 1)));
            ncols += 2;
        }
    }
    let eps_col = if eps {
        ncols += 1;
        Some(ncols - 1)
    } else {
        None
    };

    let mut rows: Vec<Vec<Rational>> = Vec::new();
    let mut rhs: Vec<Rational> = Vec::new();
    let mut slack_rows: Vec<(usize, Rational)> = Vec::new();
    for c in &sys.constraints {
        let mut row = vec![Rational::zero(); ncols];
        for (&j, coef) in &c.coeffs {
            let (p, m) = var_cols[j];
            row[p] += coef;
            if let Some(m) = m {
                row[m] -= coef;
            }
        }
        let ri = rows.len();
        match c.relation {
            Relation::Eq => {}
            Relation::Le => slack_rows.push((ri, Rational::one())),
            Relation::Ge => slack_rows.push((ri, -Rational::one())),
            Relation::Lt | Relation::Gt => {
                let sign = if c.relation == Relation::Lt {
                    Rational::one()
                } else {
                    -Rational::one()
                };
                if let Some(e) = eps_col {
                    row[e] += &sign;
                }
                slack_rows.push((ri, sign));
            }
        }
        rows.push(row);
        rhs.push(c.bound.clone());
    }
    if let Some(e) = eps_col {
        let mut row = vec![Rational::zero(); ncols];
        row[e] = Rational::one();
        slack_rows.push((rows.len(), Rational::one()));
        rows.push(row);
        rhs.push(Rational::one());
    }
    let total = ncols + slack_rows.len();
    for row in &mut rows {
        row.resize(total, Rational::zero());
    }
    for (k, (ri, sign)) in slack_rows.into_iter().enumerate() {
        rows[ri][ncols + k] = sign;
    }

    let mut cost = vec![Rational::zero(); total];
    if let Some(e) = eps_col {
        cost[e] = Rational::one();
    } else {
        for (j, c) in objective {
            let (p, m) = var_cols[*j];
            cost[p] += c;
            if let Some(m) = m {
                cost[m] -= c;
            }
        }
    }

    let Some(mut tab) = Tableau::phase_one(rows, rhs) else {
        return Outcome::Infeasible;
    };
    if !tab.maximize(&cost) {
        return Outcome::Unbounded;
    }
    let values = tab.values();
    let point = var_cols
        .iter()
        .map(|&(p, m)| match m {
            Some(m) => &values[p] - &values[m],
            None => values[p].clone(),
        })
        .collect();
    let value = cost
        .iter()
        .zip(&values)
        .fold(Rational::zero(), |acc, (c, v)| acc + c * v);
    Outcome::Optimal { value, point }
}

/// Dense tableau in equality form `A y = b`, `y ≥ 0`, `b ≥ 0`.
struct Tableau {
    rows: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    /// Finds a basic feasible solution, or `None` when there is none.
    fn phase_one(mut rows: Vec<Vec<Rational>>, mut rhs: Vec<Rational>) -> Option<Tableau> {
        let m = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        for i in 0..m {
            if rhs[i].is_negative() {
                rhs[i] = -&rhs[i];
                for v in &mut rows[i] {
                    *v = -&*v;
                }
            }
        }
        for (i, row) in rows.iter_mut().enumerate() {
            row.resize(ncols + m, Rational::zero());
            row[ncols + i] = Rational::one();
        }
        let mut tab = Tableau {
            rows,
            rhs,
            basis: (ncols..ncols + m).collect(),
            ncols: ncols + m,
        };
        let mut cost = vec![Rational::zero(); ncols + m];
        for c in cost.iter_mut().skip(ncols) {
            *c = -Rational::one();
        }
        let bounded = tab.maximize(&cost);
        debug_assert!(bounded);
        let infeas: Rational = (0..m)
            .filter(|&i| tab.basis[i] >= ncols)
            .map(|i| tab.rhs[i].clone())
            .sum();
        if infeas.is_positive() {
            return None;
        }
        // Drive remaining (zero-valued) artificials out of the basis.
        let mut i = 0;
        while i < tab.rows.len() {
            if tab.basis[i] >= ncols {
                if let Some(j) = (0..ncols).find(|&j| !tab.rows[i][j].is_zero()) {
                    tab.pivot(i, j);
                    i += 1;
                } else {
                    tab.rows.remove(i);
                    tab.rhs.remove(i);
                    tab.basis.remove(i);
                }
            } else {
                i += 1;
            }
        }
        for row in &mut tab.rows {
            row.truncate(ncols);
        }
        tab.ncols = ncols;
        Some(tab)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let piv = self.rows[r][c].clone();
        for v in &mut self.rows[r] {
            *v = &*v / &piv;
        }
        self.rhs[r] = &self.rhs[r] / &piv;
        let prow = self.rows[r].clone();
        let prhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][c].is_zero() {
                continue;
            }
            let f = self.rows[i][c].clone();
            for (v, p) in self.rows[i].iter_mut().zip(&prow) {
                if !p.is_zero() {
                    *v -= &f * p;
                }
            }
            self.rhs[i] -= &f * &prhs;
        }
        self.basis[r] = c;
    }

    /// Bland's rule primal simplex. Returns false when unbounded.
    fn maximize(&mut self, cost: &[Rational]) -> bool {
        loop {
            // reduced cost d_j = c_j - Σ_i c_{B_i} a_ij
            let entering = (0..self.ncols).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                let mut d = cost[j].clone();
                for (i, &b) in self.basis.iter().enumerate() {
                    if !cost[b].is_zero() && !self.rows[i][j].is_zero() {
                        d -= &cost[b] * &self.rows[i][j];
                    }
                }
                d.is_positive()
            });
            let Some(c) = entering else { return true };
            let mut best: Option<(usize, Rational)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][c];
                if a.is_positive() {
                    let ratio = &self.rhs[i] / a;
                    let better = match &best {
                        None => true,
                        Some((bi, br)) => {
                            ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi])
                        }
                    };
                    if better {
                        best = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = best else { return false };
            self.pivot(r, c);
        }
    }

    fn values(&self) -> Vec<Rational> {
        let mut v = vec![Rational::zero(); self.ncols];
        for (i, &b) in self.basis.iter().enumerate() {
            v[b] = self.rhs[i].clone();
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    /// The system for S₀ = {{1},{2},{1,2}} of the two-constraint example
    /// atom: x1 + x12 ≤ 1/2, x2 + x12 ≥ 3/5, x ≥ 0, sum = 1.
    fn s0() -> LinearSystem {
        let mut s = LinearSystem::new(["x_{1}", "x_{2}", "x_{1,2}"]);
        s.push([(0, int(1)), (2, int(1))], Relation::Le, ratio(1, 2));
        s.push([(1, int(1)), (2, int(1))], Relation::Ge, ratio(3, 5));
        for j in 0..3 {
            s.push([(j, int(1))], Relation::Ge, int(0));
        }
        s.push((0..3).map(|j| (j, int(1))), Relation::Eq, int(1));
        s
    }

    #[test]
    fn s0_feasible_with_checked_witness() {
        let s = s0();
        let w = solve_feasibility(&s);
        assert!(s.satisfied_by(w.witness().unwrap()));
        // the sample solution is indeed a solution
        assert!(s.satisfied_by(&[ratio(2, 5), ratio(1, 2), ratio(1, 10)]));
    }

    #[test]
    fn s1_infeasible() {
        let mut s = LinearSystem::new(["x_{}", "x_{1}", "x_{1,2}"]);
        s.push([(1, int(1)), (2, int(1))], Relation::Le, ratio(1, 2));
        s.push([(2, int(1))], Relation::Ge, ratio(3, 5));
        for j in 0..3 {
            s.push([(j, int(1))], Relation::Ge, int(0));
        }
        s.push((0..3).map(|j| (j, int(1))), Relation::Eq, int(1));
        assert_eq!(solve_feasibility(&s), Feasibility::Infeasible);
        assert_eq!(maximize(&s, 0), Err(LpError::Infeasible));
    }

    #[test]
    fn trivial_system() {
        let mut s = LinearSystem::new(["x_{}"]);
        s.push([(0, int(1))], Relation::Eq, int(1));
        assert_eq!(solve_feasibility(&s), Feasibility::Feasible(vec![int(1)]));
        assert_eq!(
            solve_feasibility(&LinearSystem::default()),
            Feasibility::Feasible(vec![])
        );
    }

    #[test]
    fn s0_maxima() {
        let s = s0();
        let m = |j| maximize(&s, j).unwrap();
        assert_eq!(m(1).supremum, int(1));
        assert_eq!(m(2).supremum, ratio(1, 2));
        assert_eq!(m(0).supremum, ratio(2, 5));
        for j in 0..3 {
            let o = m(j);
            assert!(o.attained);
            let w = o.witness.unwrap();
            assert!(s.satisfied_by(&w));
            assert_eq!(w[j], o.supremum);
        }
    }

    #[test]
    fn lexicographic_tie_break() {
        // maximize x2 with x0 + x1 + x2 = 1 and x2 ≤ 1/2: x0 = 0 is preferred.
        let mut s = LinearSystem::new(["x0", "x1", "x2"]);
        for j in 0..3 {
            s.push([(j, int(1))], Relation::Ge, int(0));
        }
        s.push((0..3).map(|j| (j, int(1))), Relation::Eq, int(1));
        s.push([(2, int(1))], Relation::Le, ratio(1, 2));
        let o = maximize(&s, 2).unwrap();
        assert_eq!(o.witness.unwrap(), vec![int(0), ratio(1, 2), ratio(1, 2)]);
    }

    #[test]
    fn strict_rows() {
        // 0 ≤ x < 1/2 has sup 1/2, not attained
        let mut s = LinearSystem::new(["x"]);
        s.push([(0, int(1))], Relation::Ge, int(0));
        s.push([(0, int(1))], Relation::Lt, ratio(1, 2));
        let w = solve_feasibility(&s);
        assert!(s.satisfied_by(w.witness().unwrap()));
        let o = maximize(&s, 0).unwrap();
        assert_eq!(o.supremum, ratio(1, 2));
        assert!(!o.attained);
        assert!(o.witness.is_none());

        // x > 0 and x < 0 cannot both hold
        let mut t = LinearSystem::new(["x"]);
        t.push([(0, int(1))], Relation::Gt, int(0));
        t.push([(0, int(1))], Relation::Le, int(0));
        assert_eq!(solve_feasibility(&t), Feasibility::Infeasible);
    }

    #[test]
    fn free_variables_and_unbounded() {
        let mut s = LinearSystem::new(["x", "y"]);
        s.push([(0, int(1)), (1, int(-1))], Relation::Eq, int(-3));
        s.push([(0, int(1))], Relation::Le, int(2));
        let w = solve_feasibility(&s);
        assert!(s.satisfied_by(w.witness().unwrap()));
        assert_eq!(maximize(&s, 1).unwrap().supremum, int(5));
        assert_eq!(maximize(&s, 0).unwrap().supremum, int(2));
        let mut u = LinearSystem::new(["x"]);
        u.push([(0, int(1))], Relation::Ge, int(0));
        assert_eq!(maximize(&u, 0), Err(LpError::Unbounded));
    }

    #[test]
    fn display_rows() {
        let text = s0().to_string();
        let first = text.lines().next().unwrap();
        assert_eq!(first.trim_end(), "x_{1} + x_{1,2}         <= 1/2");
        assert_eq!(text.lines().count(), 6);
    }
}
