//! Exact two-phase simplex over arbitrary-precision rationals.
//!
//! Solves max c.x subject to row-wise <=/==/>= constraints and x >= 0.
//! Bland's smallest-index rule is used for both the entering and leaving
//! choices, which guarantees termination without any perturbation; all
//! arithmetic is exact, so there are no feasibility tolerances anywhere.

use num_traits::{One, Signed, Zero};

use crate::rational::Rational;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<Rational>,
    pub relation: Relation,
    pub rhs: Rational,
}

/// max objective . x  s.t.  constraints, x >= 0.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    pub objective: Vec<Rational>,
    pub constraints: Vec<Constraint>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpSolution {
    Optimal { value: Rational, point: Vec<Rational> },
    Infeasible,
    Unbounded,
}

struct Tableau {
    /// Constraint matrix in equality form, m x n.
    a: Vec<Vec<Rational>>,
    /// Right-hand sides, kept nonnegative.
    b: Vec<Rational>,
    /// Current reduced costs (minimization).
    c: Vec<Rational>,
    /// Objective offset: current value = offset (costs of basics are zero).
    offset: Rational,
    basis: Vec<usize>,
}

enum LoopOutcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.a[row][col].clone();
        for v in self.a[row].iter_mut() {
            *v /= &p;
        }
        self.b[row] /= &p;
        for r in 0..self.a.len() {
            if r == row || self.a[r][col].is_zero() {
                continue;
            }
            let f = self.a[r][col].clone();
            for j in 0..self.a[r].len() {
                let d = &self.a[row][j] * &f;
                self.a[r][j] -= d;
            }
            let d = &self.b[row] * &f;
            self.b[r] -= d;
        }
        if !self.c[col].is_zero() {
            let f = self.c[col].clone();
            for j in 0..self.c.len() {
                let d = &self.a[row][j] * &f;
                self.c[j] -= d;
            }
            // c.x = cbar.x + offset stays true for every feasible x.
            let d = &self.b[row] * &f;
            self.offset += d;
        }
        self.basis[row] = col;
    }

    /// Runs Bland-rule simplex until optimal or unbounded. `allowed`
    /// restricts the entering columns (used to keep artificials out in
    /// phase 2).
    fn run(&mut self, allowed: &dyn Fn(usize) -> bool) -> LoopOutcome {
        loop {
            let entering = (0..self.c.len())
                .find(|&j| allowed(j) && self.c[j].is_negative());
            let Some(col) = entering else {
                return LoopOutcome::Optimal;
            };
            let mut leaving: Option<(usize, Rational)> = None;
            for r in 0..self.a.len() {
                if !self.a[r][col].is_positive() {
                    continue;
                }
                let ratio = &self.b[r] / &self.a[r][col];
                let better = match &leaving {
                    None => true,
                    Some((lr, lratio)) => {
                        ratio < *lratio
                            || (ratio == *lratio && self.basis[r] < self.basis[*lr])
                    }
                };
                if better {
                    leaving = Some((r, ratio));
                }
            }
            let Some((row, _)) = leaving else {
                return LoopOutcome::Unbounded;
            };
            self.pivot(row, col);
        }
    }
}

/// Solves the program exactly. Every constraint row must have as many
/// coefficients as the objective.
pub fn solve(lp: &LinearProgram) -> Result<LpSolution> {
    let n = lp.objective.len();
    for c in &lp.constraints {
        if c.coeffs.len() != n {
            return Err(Error::validation(format!(
                "constraint has {} coefficients, expected {}",
                c.coeffs.len(),
                n
            )));
        }
    }
    let m = lp.constraints.len();

    // Equality form: one slack/surplus column per inequality, then one
    // artificial per row. Rows are sign-normalized so b >= 0.
    let n_slack = lp
        .constraints
        .iter()
        .filter(|c| c.relation != Relation::Eq)
        .count();
    let total = n + n_slack + m;
    let mut a = vec![vec![Rational::zero(); total]; m];
    let mut b = Vec::with_capacity(m);
    let mut slack_at = n;
    for (r, cons) in lp.constraints.iter().enumerate() {
        let flip = cons.rhs.is_negative();
        for (j, v) in cons.coeffs.iter().enumerate() {
            a[r][j] = if flip { -v.clone() } else { v.clone() };
        }
        b.push(if flip { -cons.rhs.clone() } else { cons.rhs.clone() });
        let slack = match cons.relation {
            Relation::Le => Some(Rational::one()),
            Relation::Ge => Some(-Rational::one()),
            Relation::Eq => None,
        };
        if let Some(s) = slack {
            a[r][slack_at] = if flip { -s } else { s };
            slack_at += 1;
        }
    }
    // Artificial columns form an identity; they start basic.
    let art0 = n + n_slack;
    let mut basis = Vec::with_capacity(m);
    for r in 0..m {
        a[r][art0 + r] = Rational::one();
        basis.push(art0 + r);
    }

    // Phase 1: minimize the sum of artificials. Reduced costs of that
    // objective with the artificial basis are -(column sums).
    let mut c1 = vec![Rational::zero(); total];
    let mut offset1 = Rational::zero();
    for j in 0..art0 {
        let mut s = Rational::zero();
        for r in 0..m {
            s += &a[r][j];
        }
        c1[j] = -s;
    }
    for v in &b {
        offset1 += v;
    }
    let mut t = Tableau {
        a,
        b,
        c: c1,
        offset: offset1,
        basis,
    };
    match t.run(&|_| true) {
        LoopOutcome::Unbounded => {
            return Err(Error::Internal(
                "phase-1 objective is bounded by construction".into(),
            ))
        }
        LoopOutcome::Optimal => {}
    }
    if t.offset.is_positive() {
        return Ok(LpSolution::Infeasible);
    }

    // Drive any artificial still basic (at zero) out of the basis; if its
    // row has no usable column the row is redundant and is dropped.
    let mut r = 0;
    while r < t.a.len() {
        if t.basis[r] >= art0 {
            if let Some(col) = (0..art0).find(|&j| !t.a[r][j].is_zero()) {
                t.pivot(r, col);
            } else {
                t.a.remove(r);
                t.b.remove(r);
                t.basis.remove(r);
                continue;
            }
        }
        r += 1;
    }

    // Phase 2: minimize -objective over the original and slack columns.
    let mut c2 = vec![Rational::zero(); total];
    for j in 0..n {
        c2[j] = -lp.objective[j].clone();
    }
    let mut offset2 = Rational::zero();
    // Express the cost row in terms of the current basis.
    for (r, &bj) in t.basis.iter().enumerate() {
        if c2[bj].is_zero() {
            continue;
        }
        let f = c2[bj].clone();
        for j in 0..total {
            let d = &t.a[r][j] * &f;
            c2[j] -= d;
        }
        let d = &t.b[r] * &f;
        offset2 += d;
    }
    t.c = c2;
    t.offset = offset2;
    match t.run(&|j| j < art0) {
        LoopOutcome::Unbounded => return Ok(LpSolution::Unbounded),
        LoopOutcome::Optimal => {}
    }

    let mut point = vec![Rational::zero(); n];
    for (r, &bj) in t.basis.iter().enumerate() {
        if bj < n {
            point[bj] = t.b[r].clone();
        }
    }
    // Minimized -(c.x): the offset holds the negated optimum.
    Ok(LpSolution::Optimal {
        value: -t.offset,
        point,
    })
}
