//! No-signaling boxes, the exact LP for the no-signaling value, and the
//! marginal-retargeting / projection constructions used to turn nearly
//! no-signaling data into exactly no-signaling conditionals.
//!
//! A box stores p(a,b|x,y) densely. `ns_polytope` builds the literal LP
//! over all |X||Y||A||B| variables; `ns_value` solves an equivalent LP
//! restricted to the query support (off-support blocks of any feasible
//! box can be replaced by products of the forced marginals without
//! changing the objective or no-signaling, so the optima coincide) and
//! extends the solution back to a full, exactly no-signaling witness.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::games::{
    conditioned_value_report_from, ConditionalWins, ConditionedValueReport,
    DeterministicStrategy, Game, WinEventSpec,
};
use crate::prob::{Alphabet, ConditionalDistribution, Distribution, Outcome};
use crate::rational::Rational;
use crate::simplex::{self, Constraint, LinearProgram, LpSolution, Relation};
use crate::{Error, Result};

/// Default cap on LP variables for the no-signaling value.
pub const DEFAULT_LP_VARIABLE_BUDGET: u128 = 4096;

/// Conditional distribution p(a,b|x,y) over finite alphabets, stored as
/// a dense table. Construction checks that every (x,y) block is a
/// probability distribution; the no-signaling equalities are a separate
/// query so that signaling boxes can be represented and rejected.
#[derive(Clone, Debug, PartialEq)]
pub struct NsBox {
    x: Alphabet,
    y: Alphabet,
    a: Alphabet,
    b: Alphabet,
    table: Vec<Rational>,
}

impl NsBox {
    pub fn new(
        x: Alphabet,
        y: Alphabet,
        a: Alphabet,
        b: Alphabet,
        table: Vec<Rational>,
    ) -> Result<NsBox> {
        let size = x.len() * y.len() * a.len() * b.len();
        if table.len() != size {
            return Err(Error::validation(format!(
                "box table has {} entries, expected {}",
                table.len(),
                size
            )));
        }
        let bx = NsBox { x, y, a, b, table };
        for xi in 0..bx.x.len() as u32 {
            for yi in 0..bx.y.len() as u32 {
                let mut total = Rational::zero();
                for ai in 0..bx.a.len() as u32 {
                    for bi in 0..bx.b.len() as u32 {
                        let v = bx.entry(xi, yi, ai, bi);
                        if v < &Rational::zero() {
                            return Err(Error::validation("box entry is negative"));
                        }
                        total += v;
                    }
                }
                if !total.is_one() {
                    return Err(Error::validation(format!(
                        "box block ({},{}) sums to {}",
                        bx.x.symbol(xi),
                        bx.y.symbol(yi),
                        crate::rational::format_rational(&total)
                    )));
                }
            }
        }
        Ok(bx)
    }

    fn idx(&self, x: u32, y: u32, a: u32, b: u32) -> usize {
        ((x as usize * self.y.len() + y as usize) * self.a.len() + a as usize)
            * self.b.len()
            + b as usize
    }

    pub fn entry(&self, x: u32, y: u32, a: u32, b: u32) -> &Rational {
        &self.table[self.idx(x, y, a, b)]
    }

    pub fn x_alphabet(&self) -> &Alphabet {
        &self.x
    }

    pub fn y_alphabet(&self) -> &Alphabet {
        &self.y
    }

    pub fn a_alphabet(&self) -> &Alphabet {
        &self.a
    }

    pub fn b_alphabet(&self) -> &Alphabet {
        &self.b
    }

    pub fn table(&self) -> &[Rational] {
        &self.table
    }

    /// Sum over b of p(a,b|x,y) for each a.
    pub fn alice_marginal(&self, x: u32, y: u32) -> Vec<Rational> {
        (0..self.a.len() as u32)
            .map(|a| {
                (0..self.b.len() as u32)
                    .map(|b| self.entry(x, y, a, b))
                    .sum()
            })
            .collect()
    }

    /// Sum over a of p(a,b|x,y) for each b.
    pub fn bob_marginal(&self, x: u32, y: u32) -> Vec<Rational> {
        (0..self.b.len() as u32)
            .map(|b| {
                (0..self.a.len() as u32)
                    .map(|a| self.entry(x, y, a, b))
                    .sum()
            })
            .collect()
    }

    /// Exact check of both marginal equalities: alice's answer marginal
    /// must not depend on y, bob's must not depend on x.
    pub fn is_no_signaling(&self) -> bool {
        for x in 0..self.x.len() as u32 {
            let reference = self.alice_marginal(x, 0);
            for y in 1..self.y.len() as u32 {
                if self.alice_marginal(x, y) != reference {
                    return false;
                }
            }
        }
        for y in 0..self.y.len() as u32 {
            let reference = self.bob_marginal(0, y);
            for x in 1..self.x.len() as u32 {
                if self.bob_marginal(x, y) != reference {
                    return false;
                }
            }
        }
        true
    }

    /// Embeds a deterministic strategy as the point-mass box.
    pub fn from_strategy(g: &Game, s: &DeterministicStrategy) -> Result<NsBox> {
        let (nx, ny, na, nb) = (
            g.x_alphabet().len(),
            g.y_alphabet().len(),
            g.a_alphabet().len(),
            g.b_alphabet().len(),
        );
        let mut table = vec![Rational::zero(); nx * ny * na * nb];
        for x in 0..nx as u32 {
            for y in 0..ny as u32 {
                let idx = ((x as usize * ny + y as usize) * na
                    + s.answer_a(x) as usize)
                    * nb
                    + s.answer_b(y) as usize;
                table[idx] = Rational::one();
            }
        }
        NsBox::new(
            g.x_alphabet().clone(),
            g.y_alphabet().clone(),
            g.a_alphabet().clone(),
            g.b_alphabet().clone(),
            table,
        )
    }

    /// Product box over tuple alphabets: both coordinates act
    /// independently with their own inputs.
    pub fn tensor(&self, other: &NsBox) -> Result<NsBox> {
        let x = Alphabet::product(&[&self.x, &other.x]);
        let y = Alphabet::product(&[&self.y, &other.y]);
        let a = Alphabet::product(&[&self.a, &other.a]);
        let b = Alphabet::product(&[&self.b, &other.b]);
        let size = x.len() * y.len() * a.len() * b.len();
        let mut table = vec![Rational::zero(); size];
        let mut out = 0usize;
        for x1 in 0..self.x.len() as u32 {
            for x2 in 0..other.x.len() as u32 {
                for y1 in 0..self.y.len() as u32 {
                    for y2 in 0..other.y.len() as u32 {
                        for a1 in 0..self.a.len() as u32 {
                            for a2 in 0..other.a.len() as u32 {
                                for b1 in 0..self.b.len() as u32 {
                                    for b2 in 0..other.b.len() as u32 {
                                        table[out] = self.entry(x1, y1, a1, b1)
                                            * other.entry(x2, y2, a2, b2);
                                        out += 1;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        NsBox::new(x, y, a, b, table)
    }
}

/// The binary box with uniform answer marginals whose answer XOR always
/// equals the AND of the inputs.
pub fn pr_box() -> NsBox {
    let bin = Alphabet::binary();
    let mut table = Vec::with_capacity(16);
    let half = crate::rational::rat(1, 2);
    for x in 0..2u32 {
        for y in 0..2u32 {
            for a in 0..2u32 {
                for b in 0..2u32 {
                    table.push(if a ^ b == x & y {
                        half.clone()
                    } else {
                        Rational::zero()
                    });
                }
            }
        }
    }
    NsBox::new(bin.clone(), bin.clone(), bin.clone(), bin, table).unwrap()
}

/// Exact expected win probability of a box against a game.
pub fn box_win_probability(g: &Game, bx: &NsBox) -> Result<Rational> {
    if bx.x != *g.x_alphabet()
        || bx.y != *g.y_alphabet()
        || bx.a != *g.a_alphabet()
        || bx.b != *g.b_alphabet()
    {
        return Err(Error::schema("box alphabets do not match the game"));
    }
    let mut total = Rational::zero();
    for (o, m) in g.query().support() {
        let (x, y) = (o.get(0), o.get(1));
        for a in 0..bx.a.len() as u32 {
            for b in 0..bx.b.len() as u32 {
                if g.wins(x, y, a, b) {
                    total += m * bx.entry(x, y, a, b);
                }
            }
        }
    }
    Ok(total)
}

/// The full no-signaling polytope as an explicit LP: one variable per
/// (x,y,a,b) cell, per-(x,y) normalization, and marginal equalities tied
/// to the first y (respectively first x) as reference.
pub fn ns_polytope(g: &Game) -> LinearProgram {
    let (nx, ny, na, nb) = (
        g.x_alphabet().len(),
        g.y_alphabet().len(),
        g.a_alphabet().len(),
        g.b_alphabet().len(),
    );
    let nvars = nx * ny * na * nb;
    let idx =
        |x: usize, y: usize, a: usize, b: usize| ((x * ny + y) * na + a) * nb + b;

    let mut objective = vec![Rational::zero(); nvars];
    for (o, m) in g.query().support() {
        let (x, y) = (o.get(0) as usize, o.get(1) as usize);
        for a in 0..na {
            for b in 0..nb {
                if g.wins(o.get(0), o.get(1), a as u32, b as u32) {
                    objective[idx(x, y, a, b)] = m.clone();
                }
            }
        }
    }

    let mut constraints = Vec::new();
    for x in 0..nx {
        for y in 0..ny {
            let mut coeffs = vec![Rational::zero(); nvars];
            for a in 0..na {
                for b in 0..nb {
                    coeffs[idx(x, y, a, b)] = Rational::one();
                }
            }
            constraints.push(Constraint {
                coeffs,
                relation: Relation::Eq,
                rhs: Rational::one(),
            });
        }
    }
    for x in 0..nx {
        for a in 0..na {
            for y in 1..ny {
                let mut coeffs = vec![Rational::zero(); nvars];
                for b in 0..nb {
                    coeffs[idx(x, y, a, b)] = Rational::one();
                    coeffs[idx(x, 0, a, b)] -= Rational::one();
                }
                constraints.push(Constraint {
                    coeffs,
                    relation: Relation::Eq,
                    rhs: Rational::zero(),
                });
            }
        }
    }
    for y in 0..ny {
        for b in 0..nb {
            for x in 1..nx {
                let mut coeffs = vec![Rational::zero(); nvars];
                for a in 0..na {
                    coeffs[idx(x, y, a, b)] = Rational::one();
                    coeffs[idx(0, y, a, b)] -= Rational::one();
                }
                constraints.push(Constraint {
                    coeffs,
                    relation: Relation::Eq,
                    rhs: Rational::zero(),
                });
            }
        }
    }
    LinearProgram {
        objective,
        constraints,
    }
}

/// Outcome of the no-signaling value computation, including the solved
/// LP's dimensions for reporting.
#[derive(Clone, Debug)]
pub struct NsValueReport {
    pub value: Rational,
    pub witness: NsBox,
    pub lp_variables: usize,
    pub lp_constraints: usize,
}

/// Exact no-signaling value with an exactly no-signaling witness box.
pub fn ns_value(g: &Game) -> Result<(Rational, NsBox)> {
    let r = ns_value_report(g, DEFAULT_LP_VARIABLE_BUDGET)?;
    Ok((r.value, r.witness))
}

pub fn ns_value_report(g: &Game, variable_budget: u128) -> Result<NsValueReport> {
    let (nx, ny, na, nb) = (
        g.x_alphabet().len(),
        g.y_alphabet().len(),
        g.a_alphabet().len(),
        g.b_alphabet().len(),
    );

    // Variables only for query-support blocks; block order follows the
    // support's lexicographic order.
    let support: Vec<(u32, u32, Rational)> = g
        .query()
        .support()
        .map(|(o, m)| (o.get(0), o.get(1), m.clone()))
        .collect();
    let nvars = support.len() as u128 * na as u128 * nb as u128;
    if nvars > variable_budget {
        return Err(Error::BudgetExceeded {
            what: "no-signaling LP variables".into(),
            required: nvars,
            budget: variable_budget,
        });
    }
    let nvars = nvars as usize;
    let mut block_of: BTreeMap<(u32, u32), usize> = BTreeMap::new();
    for (i, (x, y, _)) in support.iter().enumerate() {
        block_of.insert((*x, *y), i);
    }
    let idx = |blk: usize, a: usize, b: usize| (blk * na + a) * nb + b;

    // Questions appearing in the support, per side, with their partners.
    let mut ys_of_x: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    let mut xs_of_y: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for (x, y, _) in &support {
        ys_of_x.entry(*x).or_default().push(*y);
        xs_of_y.entry(*y).or_default().push(*x);
    }

    let mut objective = vec![Rational::zero(); nvars];
    for (blk, (x, y, m)) in support.iter().enumerate() {
        for a in 0..na {
            for b in 0..nb {
                if g.wins(*x, *y, a as u32, b as u32) {
                    objective[idx(blk, a, b)] = m.clone();
                }
            }
        }
    }

    let mut constraints = Vec::new();
    for blk in 0..support.len() {
        let mut coeffs = vec![Rational::zero(); nvars];
        for a in 0..na {
            for b in 0..nb {
                coeffs[idx(blk, a, b)] = Rational::one();
            }
        }
        constraints.push(Constraint {
            coeffs,
            relation: Relation::Eq,
            rhs: Rational::one(),
        });
    }
    for (x, ys) in &ys_of_x {
        let reference = block_of[&(*x, ys[0])];
        for y in &ys[1..] {
            let blk = block_of[&(*x, *y)];
            for a in 0..na {
                let mut coeffs = vec![Rational::zero(); nvars];
                for b in 0..nb {
                    coeffs[idx(blk, a, b)] = Rational::one();
                    coeffs[idx(reference, a, b)] -= Rational::one();
                }
                constraints.push(Constraint {
                    coeffs,
                    relation: Relation::Eq,
                    rhs: Rational::zero(),
                });
            }
        }
    }
    for (y, xs) in &xs_of_y {
        let reference = block_of[&(xs[0], *y)];
        for x in &xs[1..] {
            let blk = block_of[&(*x, *y)];
            for b in 0..nb {
                let mut coeffs = vec![Rational::zero(); nvars];
                for a in 0..na {
                    coeffs[idx(blk, a, b)] = Rational::one();
                    coeffs[idx(reference, a, b)] -= Rational::one();
                }
                constraints.push(Constraint {
                    coeffs,
                    relation: Relation::Eq,
                    rhs: Rational::zero(),
                });
            }
        }
    }
    let lp_constraints = constraints.len();
    let lp = LinearProgram {
        objective,
        constraints,
    };
    let point = match simplex::solve(&lp)? {
        LpSolution::Optimal { value, point } => (value, point),
        other => {
            return Err(Error::Internal(format!(
                "no-signaling LP must be feasible and bounded, got {other:?}"
            )))
        }
    };
    let (value, point) = point;

    // Per-question answer marginals forced by the solution; uniform for
    // questions that never occur.
    let uniform_a = vec![Rational::new(1.into(), (na as i64).into()); na];
    let uniform_b = vec![Rational::new(1.into(), (nb as i64).into()); nb];
    let mut alpha: BTreeMap<u32, Vec<Rational>> = BTreeMap::new();
    for (x, ys) in &ys_of_x {
        let blk = block_of[&(*x, ys[0])];
        alpha.insert(
            *x,
            (0..na)
                .map(|a| (0..nb).map(|b| &point[idx(blk, a, b)]).sum())
                .collect(),
        );
    }
    let mut beta: BTreeMap<u32, Vec<Rational>> = BTreeMap::new();
    for (y, xs) in &xs_of_y {
        let blk = block_of[&(xs[0], *y)];
        beta.insert(
            *y,
            (0..nb)
                .map(|b| (0..na).map(|a| &point[idx(blk, a, b)]).sum())
                .collect(),
        );
    }

    // Extend to the full table: support blocks keep the LP solution,
    // every other block is the product of the forced marginals. The
    // alice marginal of every (x, ·) block is then alpha(x) exactly, and
    // symmetrically for bob, so the extension is no-signaling.
    let mut table = Vec::with_capacity(nx * ny * na * nb);
    for x in 0..nx as u32 {
        for y in 0..ny as u32 {
            match block_of.get(&(x, y)) {
                Some(&blk) => {
                    for a in 0..na {
                        for b in 0..nb {
                            table.push(point[idx(blk, a, b)].clone());
                        }
                    }
                }
                None => {
                    let av = alpha.get(&x).unwrap_or(&uniform_a);
                    let bv = beta.get(&y).unwrap_or(&uniform_b);
                    for a in 0..na {
                        for b in 0..nb {
                            table.push(&av[a] * &bv[b]);
                        }
                    }
                }
            }
        }
    }
    let witness = NsBox::new(
        g.x_alphabet().clone(),
        g.y_alphabet().clone(),
        g.a_alphabet().clone(),
        g.b_alphabet().clone(),
        table,
    )?;
    if !witness.is_no_signaling() {
        return Err(Error::Internal("witness extension lost no-signaling".into()));
    }
    let replay = box_win_probability(g, &witness)?;
    if replay != value {
        return Err(Error::Internal(
            "witness win probability disagrees with LP optimum".into(),
        ));
    }
    Ok(NsValueReport {
        value,
        witness,
        lp_variables: nvars,
        lp_constraints,
    })
}

/// Exact conditional win probabilities of the repetition coordinates
/// under a box, mirroring the deterministic-strategy version.
pub fn ns_conditional_win_probabilities(
    g: &Game,
    bx: &NsBox,
    cond: &WinEventSpec,
) -> Result<ConditionalWins> {
    if bx.x != *g.x_alphabet()
        || bx.y != *g.y_alphabet()
        || bx.a != *g.a_alphabet()
        || bx.b != *g.b_alphabet()
    {
        return Err(Error::schema("box alphabets do not match the game"));
    }
    let n = g.repetition_arity();
    if cond.indices().iter().any(|&i| i == 0 || i > n) {
        return Err(Error::validation(format!(
            "win-event coordinates must lie in 1..={n}"
        )));
    }
    if cond.len() as u32 >= n {
        return Err(Error::validation(
            "conditioning on every coordinate leaves nothing to bound",
        ));
    }
    let mut condition_probability = Rational::zero();
    let mut joint: BTreeMap<u32, Rational> = (1..=n)
        .filter(|j| !cond.contains(*j))
        .map(|j| (j, Rational::zero()))
        .collect();
    for (o, m) in g.query().support() {
        let (x, y) = (o.get(0), o.get(1));
        for a in 0..bx.a.len() as u32 {
            for b in 0..bx.b.len() as u32 {
                let q = bx.entry(x, y, a, b);
                if q.is_zero() {
                    continue;
                }
                if !cond
                    .indices()
                    .iter()
                    .all(|&i| g.coordinate_win(i, x, y, a, b))
                {
                    continue;
                }
                let w = m * q;
                for (&j, acc) in joint.iter_mut() {
                    if g.coordinate_win(j, x, y, a, b) {
                        *acc += &w;
                    }
                }
                condition_probability += w;
            }
        }
    }
    if condition_probability.is_zero() {
        return Err(Error::ZeroProbabilityEvent);
    }
    let conditional = joint
        .into_iter()
        .map(|(j, p)| (j, p / &condition_probability))
        .collect();
    Ok(ConditionalWins {
        condition_probability,
        conditional,
    })
}

/// Conditioned-value inequality for no-signaling play on the n-fold
/// repetition: conditioned on the coordinates in `cond` winning, some
/// remaining coordinate wins with probability at most
/// `v_ns(G) + 10 sqrt(log2(1/Pr[W]) / (n-m))`.
pub fn ns_conditioned_value_report(
    g: &Game,
    n: u32,
    bx: &NsBox,
    cond: &WinEventSpec,
) -> Result<ConditionedValueReport> {
    let rep = g.repeat(n)?;
    let wins = ns_conditional_win_probabilities(&rep, bx, cond)?;
    let (base_value, _) = ns_value(g)?;
    Ok(conditioned_value_report_from(
        &wins,
        base_value,
        10.0,
        n,
        cond.len() as u32,
        None,
    ))
}

/// Moves the least possible mass in a joint over (S, T) so that the
/// S-marginal becomes exactly `target` while the T-marginal stays
/// untouched: repeatedly shift mass from the lexicographically smallest
/// S-excess row to the smallest S-deficit row, always along the smallest
/// positive-mass T-cell, keeping T fixed. The total variation moved is
/// exactly the marginal gap, so the output is within
/// ||target - S-marginal|| of the input.
pub fn retarget_marginal(joint: &Distribution, target: &Distribution) -> Result<Distribution> {
    let k = target.schema().arity();
    if joint.schema().arity() < k {
        return Err(Error::schema("joint has fewer coordinates than the target"));
    }
    let lead: Vec<usize> = (0..k).collect();
    if joint.schema().project(&lead) != *target.schema() {
        return Err(Error::schema(
            "target schema must match the joint's leading coordinates",
        ));
    }
    let trail: Vec<usize> = (k..joint.schema().arity()).collect();

    let mut cells: BTreeMap<Outcome, BTreeMap<Outcome, Rational>> = BTreeMap::new();
    let mut marg: BTreeMap<Outcome, Rational> = BTreeMap::new();
    for (o, m) in joint.support() {
        let s = o.project(&lead);
        let t = o.project(&trail);
        *marg.entry(s.clone()).or_insert_with(Rational::zero) += m;
        *cells
            .entry(s)
            .or_default()
            .entry(t)
            .or_insert_with(Rational::zero) += m;
    }
    // diff > 0: deficit (needs mass); diff < 0: excess (gives mass).
    let mut diff: BTreeMap<Outcome, Rational> = BTreeMap::new();
    for (s, m) in &marg {
        diff.insert(s.clone(), -m.clone());
    }
    for (s, m) in target.support() {
        *diff.entry(s.clone()).or_insert_with(Rational::zero) += m;
    }
    diff.retain(|_, v| !v.is_zero());

    loop {
        let Some((s0, deficit)) = diff
            .iter()
            .find(|(_, v)| v > &&Rational::zero())
            .map(|(s, v)| (s.clone(), v.clone()))
        else {
            break;
        };
        let (s1, excess) = diff
            .iter()
            .find(|(_, v)| v < &&Rational::zero())
            .map(|(s, v)| (s.clone(), -v.clone()))
            .expect("deficits and excesses balance");
        let row = cells.get_mut(&s1).expect("excess row has mass");
        let (t, cell) = row
            .iter()
            .find(|(_, m)| !m.is_zero())
            .map(|(t, m)| (t.clone(), m.clone()))
            .expect("excess row has a positive cell");
        let eps = cell.clone().min(deficit.clone()).min(excess.clone());
        let left = cell - &eps;
        if left.is_zero() {
            row.remove(&t);
        } else {
            row.insert(t.clone(), left);
        }
        *cells
            .entry(s0.clone())
            .or_default()
            .entry(t)
            .or_insert_with(Rational::zero) += &eps;
        let d0 = diff.get_mut(&s0).unwrap();
        *d0 -= &eps;
        if d0.is_zero() {
            diff.remove(&s0);
        }
        let d1 = diff.get_mut(&s1).unwrap();
        *d1 += &eps;
        if d1.is_zero() {
            diff.remove(&s1);
        }
    }

    let entries = cells.into_iter().flat_map(|(s, row)| {
        row.into_iter()
            .filter(|(_, m)| !m.is_zero())
            .map(move |(t, m)| (s.concat(&t), m))
    });
    Distribution::from_masses(joint.schema().clone(), entries.collect::<Vec<_>>())
}

/// Result of projecting a nearly no-signaling joint onto an exactly
/// no-signaling conditional.
#[derive(Clone, Debug)]
pub struct NsProjection {
    pub conditional: ConditionalDistribution,
    pub eps_alice: Rational,
    pub eps_bob: Rational,
    pub composed_distance: Rational,
    pub bound: Rational,
}

/// Projects a joint over (X, Y, S, T) onto a no-signaling conditional of
/// (S, T) given (X, Y): each row starts from the conditioned joint and
/// has its S-marginal retargeted to P(S|x), then its T-marginal to
/// P(T|y). The first stage never touches T and the second never touches
/// S, so row (x,y) ends with S-marginal depending only on x and
/// T-marginal only on y — exactly no-signaling. The composition with
/// `inputs` stays within 3*eps_alice + 2*eps_bob of the original joint.
pub fn ns_project(joint: &Distribution, inputs: &Distribution) -> Result<NsProjection> {
    if joint.schema().arity() != 4 {
        return Err(Error::schema(
            "joint must have exactly four coordinates: x, y, s, t",
        ));
    }
    if joint.schema().project(&[0, 1]) != *inputs.schema() {
        return Err(Error::schema(
            "input distribution must match the joint's first two coordinates",
        ));
    }
    let names: Vec<String> = joint.schema().names().map(str::to_owned).collect();
    let (nx, ny, ns, nt) = (
        names[0].as_str(),
        names[1].as_str(),
        names[2].as_str(),
        names[3].as_str(),
    );

    let p_s = joint.marginal(&[ns])?;
    let p_t = joint.marginal(&[nt])?;
    let alpha = ConditionalDistribution::from_joint_with_fill(joint, &[nx], &[ns], |_| {
        p_s.clone()
    })?;
    let beta = ConditionalDistribution::from_joint_with_fill(joint, &[ny], &[nt], |_| {
        p_t.clone()
    })?;

    let eps_alice = inputs
        .compose(&alpha)?
        .statistical_distance(&joint.marginal(&[nx, ny, ns])?)?;
    let eps_bob = inputs
        .compose(&beta)?
        .statistical_distance(&joint.marginal(&[nx, ny, nt])?)?;

    let p_xy = joint.marginal(&[nx, ny])?;
    let given = joint.schema().project(&[0, 1]);
    let mut rows = BTreeMap::new();
    for key in given.iter_outcomes() {
        let (x, y) = (key.get(0), key.get(1));
        let a_row = alpha.row(&Outcome::new(vec![x])).unwrap();
        let b_row = beta.row(&Outcome::new(vec![y])).unwrap();
        let row = if p_xy.mass(&key).is_zero() {
            a_row.product(b_row)?
        } else {
            let start = joint
                .condition(|o| o.get(0) == x && o.get(1) == y)?
                .marginal(&[ns, nt])?;
            let stage1 = retarget_marginal(&start, a_row)?;
            let flipped = stage1.marginal(&[nt, ns])?;
            let stage2 = retarget_marginal(&flipped, b_row)?;
            stage2.marginal(&[ns, nt])?
        };
        rows.insert(key, row);
    }
    let conditional = ConditionalDistribution::from_rows(given, rows)?;
    let composed_distance = inputs
        .compose(&conditional)?
        .statistical_distance(joint)?;
    let three = Rational::from_integer(3.into());
    let two = Rational::from_integer(2.into());
    let bound = three * &eps_alice + two * &eps_bob;
    Ok(NsProjection {
        conditional,
        eps_alice,
        eps_bob,
        composed_distance,
        bound,
    })
}
