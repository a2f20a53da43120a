//! Finite two-prover games, deterministic strategies, and exact values.
//!
//! A game is a query distribution over X x Y plus a winning predicate on
//! X x Y x A x B. The classical value is computed by exhaustive strategy
//! enumeration under a hard budget; ties are broken toward the
//! lexicographically smallest (alice-table, bob-table) pair. The n-fold
//! parallel repetition keeps the base predicate and evaluates it lazily
//! per coordinate, so repeated games never materialize a 4n-dimensional
//! predicate tensor.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};

use crate::prob::{mixed_radix_split, Alphabet, Distribution, Outcome, Schema};
use crate::rational::{self, Rational};
use crate::{Error, Result};

/// Default cap on |A|^|X| * |B|^|Y| strategy pairs for value enumeration.
pub const DEFAULT_STRATEGY_BUDGET: u128 = 1 << 24;

/// Default cap on any materialized tuple alphabet or outcome table.
pub const DEFAULT_OUTCOME_BUDGET: u128 = 1 << 20;

#[derive(Clone, Debug)]
enum PredicateKind {
    /// Row-major table over ((x * |Y| + y) * |A| + a) * |B| + b.
    Dense(Vec<bool>),
    /// n-fold AND of the base predicate under tuple-alphabet indexing.
    Repeated { base: Arc<Game>, n: u32 },
}

#[derive(Clone, Debug)]
pub struct Game {
    x: Alphabet,
    y: Alphabet,
    a: Alphabet,
    b: Alphabet,
    query: Distribution,
    predicate: PredicateKind,
}

impl Game {
    /// Builds a game from alphabets, a query distribution over a schema
    /// with coordinates `x` and `y`, and a dense win table.
    pub fn new(
        x: Alphabet,
        y: Alphabet,
        a: Alphabet,
        b: Alphabet,
        query: Distribution,
        wins: Vec<bool>,
    ) -> Result<Game> {
        let expected = Schema::named(&[("x", &x), ("y", &y)])?;
        if query.schema() != &expected {
            return Err(Error::schema(
                "query must have coordinates x and y with the game's alphabets",
            ));
        }
        let size = x.len() * y.len() * a.len() * b.len();
        if wins.len() != size {
            return Err(Error::validation(format!(
                "predicate table has {} entries, expected {}",
                wins.len(),
                size
            )));
        }
        Ok(Game {
            x,
            y,
            a,
            b,
            query,
            predicate: PredicateKind::Dense(wins),
        })
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

    pub fn query(&self) -> &Distribution {
        &self.query
    }

    /// |A| * |B| of the base game underlying this one (the repetition's
    /// own answer alphabets for a plain game).
    pub fn base_answer_size(&self) -> usize {
        match &self.predicate {
            PredicateKind::Dense(_) => self.a.len() * self.b.len(),
            PredicateKind::Repeated { base, .. } => base.base_answer_size(),
        }
    }

    pub fn wins(&self, x: u32, y: u32, a: u32, b: u32) -> bool {
        match &self.predicate {
            PredicateKind::Dense(t) => {
                let idx = ((x as usize * self.y.len() + y as usize) * self.a.len()
                    + a as usize)
                    * self.b.len()
                    + b as usize;
                t[idx]
            }
            PredicateKind::Repeated { n, .. } => {
                (0..*n).all(|i| self.coordinate_win(i + 1, x, y, a, b))
            }
        }
    }

    /// Number of repeated coordinates: 1 for a plain game.
    pub fn repetition_arity(&self) -> u32 {
        match &self.predicate {
            PredicateKind::Dense(_) => 1,
            PredicateKind::Repeated { n, .. } => *n,
        }
    }

    /// The base game of a repetition (itself for a plain game).
    pub fn base_game(&self) -> &Game {
        match &self.predicate {
            PredicateKind::Dense(_) => self,
            PredicateKind::Repeated { base, .. } => base,
        }
    }

    /// Win of the 1-based coordinate `i` under tuple-alphabet indexing.
    pub fn coordinate_win(&self, i: u32, x: u32, y: u32, a: u32, b: u32) -> bool {
        match &self.predicate {
            PredicateKind::Dense(_) => {
                assert_eq!(i, 1, "plain game has a single coordinate");
                self.wins(x, y, a, b)
            }
            PredicateKind::Repeated { base, n } => {
                let pick = |idx: u32, size: usize| -> u32 {
                    mixed_radix_split(idx, &vec![size; *n as usize])[(i - 1) as usize]
                };
                base.wins(
                    pick(x, base.x.len()),
                    pick(y, base.y.len()),
                    pick(a, base.a.len()),
                    pick(b, base.b.len()),
                )
            }
        }
    }

    /// Splits a repeated-game symbol index into base-game indices, one per
    /// coordinate. Identity (singleton) for a plain game.
    pub fn split_tuple(&self, idx: u32, base_size: usize) -> Vec<u32> {
        match &self.predicate {
            PredicateKind::Dense(_) => vec![idx],
            PredicateKind::Repeated { n, .. } => {
                mixed_radix_split(idx, &vec![base_size; *n as usize])
            }
        }
    }

    /// Materializes the predicate as a dense table (budgeted).
    pub fn predicate_table(&self, budget: u128) -> Result<Vec<bool>> {
        let size = self.x.len() as u128 * self.y.len() as u128 * self.a.len() as u128
            * self.b.len() as u128;
        if size > budget {
            return Err(Error::BudgetExceeded {
                what: "predicate table".into(),
                required: size,
                budget,
            });
        }
        let mut t = Vec::with_capacity(size as usize);
        for x in 0..self.x.len() as u32 {
            for y in 0..self.y.len() as u32 {
                for a in 0..self.a.len() as u32 {
                    for b in 0..self.b.len() as u32 {
                        t.push(self.wins(x, y, a, b));
                    }
                }
            }
        }
        Ok(t)
    }

    /// n-fold parallel repetition: product query over tuple alphabets,
    /// predicate the AND of per-coordinate base wins. One-fold repetition
    /// returns the game unchanged.
    pub fn repeat(&self, n: u32) -> Result<Game> {
        self.repeat_with_budget(n, DEFAULT_OUTCOME_BUDGET)
    }

    pub fn repeat_with_budget(&self, n: u32, budget: u128) -> Result<Game> {
        if n == 0 {
            return Err(Error::validation("repetition requires n >= 1"));
        }
        if n == 1 {
            return Ok(self.clone());
        }
        if matches!(self.predicate, PredicateKind::Repeated { .. }) {
            return Err(Error::validation(
                "repeating an already repeated game is not supported",
            ));
        }
        for (name, alpha) in [
            ("x", &self.x),
            ("y", &self.y),
            ("a", &self.a),
            ("b", &self.b),
        ] {
            let size = (alpha.len() as u128)
                .checked_pow(n)
                .ok_or_else(|| Error::validation("tuple alphabet overflows"))?;
            if size > budget {
                return Err(Error::BudgetExceeded {
                    what: format!("{name}-alphabet of the {n}-fold repetition"),
                    required: size,
                    budget,
                });
            }
        }
        let support = self.query.support_len() as u128;
        let repeated_support = support
            .checked_pow(n)
            .ok_or_else(|| Error::validation("query support overflows"))?;
        if repeated_support > budget {
            return Err(Error::BudgetExceeded {
                what: format!("query support of the {n}-fold repetition"),
                required: repeated_support,
                budget,
            });
        }
        Ok(Game {
            x: self.x.power(n),
            y: self.y.power(n),
            a: self.a.power(n),
            b: self.b.power(n),
            query: self.query.product_power(n)?,
            predicate: PredicateKind::Repeated {
                base: Arc::new(self.clone()),
                n,
            },
        })
    }

    /// Exact win probability of a deterministic strategy.
    pub fn win_probability(&self, s: &DeterministicStrategy) -> Result<Rational> {
        s.check_shape(self)?;
        let mut total = Rational::zero();
        for (o, m) in self.query.support() {
            let (x, y) = (o.get(0), o.get(1));
            if self.wins(x, y, s.answer_a(x), s.answer_b(y)) {
                total += m;
            }
        }
        Ok(total)
    }

    /// Exact classical value with the optimal deterministic strategy,
    /// under the default enumeration budget.
    pub fn classical_value(&self) -> Result<(Rational, DeterministicStrategy)> {
        self.classical_value_with_budget(DEFAULT_STRATEGY_BUDGET)
    }

    /// Exhaustive maximum over all |A|^|X| * |B|^|Y| deterministic
    /// strategy pairs. For each alice-table the bob-table decomposes per
    /// question, so the scan is linear in alice-tables while still exact;
    /// the budget is accounted in full pairs. Ties break toward the
    /// lexicographically smallest pair.
    pub fn classical_value_with_budget(
        &self,
        budget: u128,
    ) -> Result<(Rational, DeterministicStrategy)> {
        let (nx, ny, na, nb) = (self.x.len(), self.y.len(), self.a.len(), self.b.len());
        let pairs = (na as u128)
            .checked_pow(nx as u32)
            .and_then(|p| (nb as u128).checked_pow(ny as u32).map(|q| (p, q)))
            .and_then(|(p, q)| p.checked_mul(q))
            .ok_or_else(|| Error::BudgetExceeded {
                what: "strategy enumeration".into(),
                required: u128::MAX,
                budget,
            })?;
        if pairs > budget {
            return Err(Error::BudgetExceeded {
                what: "strategy enumeration".into(),
                required: pairs,
                budget,
            });
        }

        // Query support grouped per bob-question.
        let mut by_y: Vec<Vec<(u32, Rational)>> = vec![Vec::new(); ny];
        for (o, m) in self.query.support() {
            by_y[o.get(1) as usize].push((o.get(0), m.clone()));
        }

        let mut best: Option<(Rational, Vec<u32>, Vec<u32>)> = None;
        let mut h_a = vec![0u32; nx];
        loop {
            // Best bob-table for this alice-table, smallest answers on ties.
            let mut value = Rational::zero();
            let mut h_b = vec![0u32; ny];
            for y in 0..ny {
                let mut best_b = Rational::zero();
                let mut b_pick = 0u32;
                for b in 0..nb as u32 {
                    let mut contrib = Rational::zero();
                    for (x, m) in &by_y[y] {
                        if self.wins(*x, y as u32, h_a[*x as usize], b) {
                            contrib += m;
                        }
                    }
                    if b == 0 || contrib > best_b {
                        best_b = contrib;
                        b_pick = b;
                    }
                }
                value += best_b;
                h_b[y] = b_pick;
            }
            // Strict improvement keeps the first (lex-smallest) maximizer.
            if best.as_ref().map_or(true, |(v, _, _)| value > *v) {
                best = Some((value, h_a.clone(), h_b));
            }

            // Odometer over alice-tables in lexicographic order.
            let mut pos = nx;
            loop {
                if pos == 0 {
                    let (v, a, b) = best.unwrap();
                    return Ok((v, DeterministicStrategy::new(self, a, b)?));
                }
                pos -= 1;
                h_a[pos] += 1;
                if (h_a[pos] as usize) < na {
                    break;
                }
                h_a[pos] = 0;
            }
        }
    }

    /// Picks the best deterministic component of a shared-randomness
    /// strategy; its value is at least the mixture's value.
    pub fn derandomize(&self, s: &SharedRandomnessStrategy) -> Result<DeterministicStrategy> {
        if s.components.is_empty() {
            return Err(Error::validation("mixture has no components"));
        }
        let mut total_w = Rational::zero();
        let mut best: Option<(Rational, &DeterministicStrategy)> = None;
        for (w, d) in &s.components {
            if w.is_negative() {
                return Err(Error::validation("negative mixture weight"));
            }
            total_w += w;
            let v = self.win_probability(d)?;
            if best.as_ref().map_or(true, |(bv, _)| v > *bv) {
                best = Some((v, d));
            }
        }
        if !total_w.is_one() {
            return Err(Error::validation(format!(
                "mixture weights sum to {}",
                rational::format_rational(&total_w)
            )));
        }
        Ok(best.unwrap().1.clone())
    }

    /// Exact mixture win probability of a shared-randomness strategy.
    pub fn mixture_win_probability(&self, s: &SharedRandomnessStrategy) -> Result<Rational> {
        let mut total = Rational::zero();
        for (w, d) in &s.components {
            total += w * self.win_probability(d)?;
        }
        Ok(total)
    }

    /// Joint law of (X, Y, A, B) under the query and a deterministic
    /// strategy.
    pub fn joint_distribution(&self, s: &DeterministicStrategy) -> Result<Distribution> {
        s.check_shape(self)?;
        let schema = Schema::named(&[
            ("x", &self.x),
            ("y", &self.y),
            ("a", &self.a),
            ("b", &self.b),
        ])?;
        let entries = self.query.support().map(|(o, m)| {
            let (x, y) = (o.get(0), o.get(1));
            (
                Outcome::new(vec![x, y, s.answer_a(x), s.answer_b(y)]),
                m.clone(),
            )
        });
        Distribution::from_masses(schema, entries.collect::<Vec<_>>())
    }

    /// Exact conditional win probabilities Pr[W_j | all of `cond` won]
    /// for every coordinate j outside `cond`, plus the probability of the
    /// conditioning event itself.
    pub fn conditional_win_probabilities(
        &self,
        s: &DeterministicStrategy,
        cond: &WinEventSpec,
    ) -> Result<ConditionalWins> {
        s.check_shape(self)?;
        let n = self.repetition_arity();
        cond.check_against(n)?;
        let mut condition_probability = Rational::zero();
        let mut joint: BTreeMap<u32, Rational> = (1..=n)
            .filter(|j| !cond.contains(*j))
            .map(|j| (j, Rational::zero()))
            .collect();
        for (o, m) in self.query.support() {
            let (x, y) = (o.get(0), o.get(1));
            let (a, b) = (s.answer_a(x), s.answer_b(y));
            if !cond.indices().iter().all(|&i| self.coordinate_win(i, x, y, a, b)) {
                continue;
            }
            condition_probability += m;
            for (&j, acc) in joint.iter_mut() {
                if self.coordinate_win(j, x, y, a, b) {
                    *acc += m;
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
}

/// Pair of total answer tables, one per prover.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeterministicStrategy {
    a: Vec<u32>,
    b: Vec<u32>,
}

impl DeterministicStrategy {
    pub fn new(g: &Game, a: Vec<u32>, b: Vec<u32>) -> Result<DeterministicStrategy> {
        if a.len() != g.x.len() || b.len() != g.y.len() {
            return Err(Error::validation("strategy tables must be total"));
        }
        if a.iter().any(|&v| v as usize >= g.a.len())
            || b.iter().any(|&v| v as usize >= g.b.len())
        {
            return Err(Error::validation("strategy answer out of range"));
        }
        Ok(DeterministicStrategy { a, b })
    }

    pub fn answer_a(&self, x: u32) -> u32 {
        self.a[x as usize]
    }

    pub fn answer_b(&self, y: u32) -> u32 {
        self.b[y as usize]
    }

    pub fn a_table(&self) -> &[u32] {
        &self.a
    }

    pub fn b_table(&self) -> &[u32] {
        &self.b
    }

    fn check_shape(&self, g: &Game) -> Result<()> {
        if self.a.len() != g.x.len()
            || self.b.len() != g.y.len()
            || self.a.iter().any(|&v| v as usize >= g.a.len())
            || self.b.iter().any(|&v| v as usize >= g.b.len())
        {
            return Err(Error::validation("strategy does not fit the game"));
        }
        Ok(())
    }
}

/// Finite mixture of deterministic strategies under shared randomness.
#[derive(Clone, Debug)]
pub struct SharedRandomnessStrategy {
    pub components: Vec<(Rational, DeterministicStrategy)>,
}

/// Sorted, duplicate-free set of 1-based repetition coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WinEventSpec {
    indices: Vec<u32>,
}

impl WinEventSpec {
    pub fn new(mut indices: Vec<u32>) -> WinEventSpec {
        indices.sort_unstable();
        indices.dedup();
        WinEventSpec { indices }
    }

    pub fn empty() -> WinEventSpec {
        WinEventSpec { indices: vec![] }
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, j: u32) -> bool {
        self.indices.binary_search(&j).is_ok()
    }

    pub(crate) fn check_against(&self, n: u32) -> Result<()> {
        if self.indices.iter().any(|&i| i == 0 || i > n) {
            return Err(Error::validation(format!(
                "win-event coordinates must lie in 1..={n}"
            )));
        }
        if self.indices.len() as u32 >= n {
            return Err(Error::validation(
                "conditioning on every coordinate leaves nothing to bound",
            ));
        }
        Ok(())
    }
}

/// Output of [`Game::conditional_win_probabilities`].
#[derive(Clone, Debug)]
pub struct ConditionalWins {
    pub condition_probability: Rational,
    pub conditional: BTreeMap<u32, Rational>,
}

/// Result of checking the conditioned-value inequality: the smallest
/// conditional per-coordinate win probability against
/// `v + c * sqrt((m log2 s + log2(1/Pr[W])) / (n - m))`.
#[derive(Clone, Debug)]
pub struct ConditionedValueReport {
    pub min_conditional: Rational,
    pub min_index: u32,
    pub base_value: Rational,
    pub bound_term: f64,
    pub bound: f64,
    pub holds: bool,
}

pub(crate) fn conditioned_value_report_from(
    wins: &ConditionalWins,
    base_value: Rational,
    constant: f64,
    n: u32,
    m: u32,
    log_answer_size: Option<f64>,
) -> ConditionedValueReport {
    let (min_index, min_conditional) = wins
        .conditional
        .iter()
        .min_by(|(_, p), (_, q)| p.cmp(q))
        .map(|(j, p)| (*j, p.clone()))
        .expect("at least one unconditioned coordinate");
    let log_inv_pr = -rational::log2(&wins.condition_probability);
    let numer = m as f64 * log_answer_size.unwrap_or(0.0) + log_inv_pr;
    let bound_term = constant * (numer / (n - m) as f64).sqrt();
    let bound = rational::to_f64(&base_value) + bound_term;
    let holds = if bound_term == 0.0 {
        min_conditional <= base_value
    } else {
        rational::to_f64(&min_conditional) <= bound + 1e-12
    };
    ConditionedValueReport {
        min_conditional,
        min_index,
        base_value,
        bound_term,
        bound,
        holds,
    }
}

/// Checks the conditioned-value inequality for a classical strategy on
/// the n-fold repetition: conditioned on winning the coordinates in
/// `cond`, some remaining coordinate is won with probability at most
/// `v(G) + 15 sqrt((m log2(|A||B|) + log2(1/Pr[W])) / (n-m))`.
pub fn conditioned_value_report(
    g: &Game,
    n: u32,
    s: &DeterministicStrategy,
    cond: &WinEventSpec,
) -> Result<ConditionedValueReport> {
    let rep = g.repeat(n)?;
    let wins = rep.conditional_win_probabilities(s, cond)?;
    let (base_value, _) = g.classical_value()?;
    let log_s = ((g.a.len() * g.b.len()) as f64).log2();
    Ok(conditioned_value_report_from(
        &wins,
        base_value,
        15.0,
        n,
        cond.len() as u32,
        Some(log_s),
    ))
}

/// Builtin games used throughout the test corpus.
pub fn builtin(name: &str) -> Result<Game> {
    match name {
        "fortnow" => {
            let b = Alphabet::binary();
            let schema = Schema::named(&[("x", &b), ("y", &b)])?;
            let third = rational::rat(1, 3);
            let query = Distribution::from_masses(
                schema,
                [
                    (Outcome::new(vec![0, 0]), third.clone()),
                    (Outcome::new(vec![0, 1]), third.clone()),
                    (Outcome::new(vec![1, 0]), third),
                ],
            )?;
            let mut wins = Vec::with_capacity(16);
            for x in 0..2u32 {
                for y in 0..2u32 {
                    for a in 0..2u32 {
                        for b_ in 0..2u32 {
                            wins.push((x | a) != (y | b_));
                        }
                    }
                }
            }
            Game::new(b.clone(), b.clone(), b.clone(), b, query, wins)
        }
        "chsh" => {
            let b = Alphabet::binary();
            let schema = Schema::named(&[("x", &b), ("y", &b)])?;
            let query = Distribution::uniform(schema);
            let mut wins = Vec::with_capacity(16);
            for x in 0..2u32 {
                for y in 0..2u32 {
                    for a in 0..2u32 {
                        for b_ in 0..2u32 {
                            wins.push(a ^ b_ == x & y);
                        }
                    }
                }
            }
            Game::new(b.clone(), b.clone(), b.clone(), b, query, wins)
        }
        other => Err(Error::UnknownBuiltin(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    /// Independent oracle: the plain quadratic scan over every strategy
    /// pair, with explicit lexicographic tie-breaking.
    fn enumerate_all_pairs(g: &Game) -> (Rational, Vec<u32>, Vec<u32>) {
        let (nx, ny, na, nb) = (
            g.x_alphabet().len(),
            g.y_alphabet().len(),
            g.a_alphabet().len(),
            g.b_alphabet().len(),
        );
        let mut best: Option<(Rational, Vec<u32>, Vec<u32>)> = None;
        let mut h_a = vec![0u32; nx];
        'outer_a: loop {
            let mut h_b = vec![0u32; ny];
            loop {
                let s = DeterministicStrategy::new(g, h_a.clone(), h_b.clone()).unwrap();
                let v = g.win_probability(&s).unwrap();
                if best.as_ref().map_or(true, |(bv, _, _)| v > *bv) {
                    best = Some((v, h_a.clone(), h_b.clone()));
                }
                let mut pos = ny;
                loop {
                    if pos == 0 {
                        break;
                    }
                    pos -= 1;
                    h_b[pos] += 1;
                    if (h_b[pos] as usize) < nb {
                        break;
                    }
                    h_b[pos] = 0;
                    if pos == 0 {
                        // bob odometer wrapped
                        let mut apos = nx;
                        loop {
                            if apos == 0 {
                                break 'outer_a;
                            }
                            apos -= 1;
                            h_a[apos] += 1;
                            if (h_a[apos] as usize) < na {
                                continue 'outer_a;
                            }
                            h_a[apos] = 0;
                        }
                    }
                }
                if h_b.iter().all(|&v| v == 0) {
                    break;
                }
            }
        }
        best.unwrap()
    }

    fn tiny_random_game(seed: u64) -> Game {
        // Small deterministic pseudo-random games for the oracle check.
        let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
        let mut next = move |m: u64| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state % m
        };
        let b = Alphabet::binary();
        let t = Alphabet::named(&["0", "1", "2"]);
        let (x, a) = if next(2) == 0 {
            (b.clone(), t.clone())
        } else {
            (t.clone(), b.clone())
        };
        let (y, bb) = if next(2) == 0 {
            (b.clone(), b.clone())
        } else {
            (t.clone(), b.clone())
        };
        let schema = Schema::named(&[("x", &x), ("y", &y)]).unwrap();
        let outcomes: Vec<Outcome> = schema.iter_outcomes().collect();
        let weights: Vec<u64> = outcomes.iter().map(|_| next(5)).collect();
        let total: u64 = weights.iter().sum::<u64>().max(1);
        let mut entries: Vec<(Outcome, Rational)> = outcomes
            .iter()
            .zip(&weights)
            .filter(|(_, &w)| w > 0)
            .map(|(o, &w)| (o.clone(), rat(w as i64, total as i64)))
            .collect();
        if entries.is_empty() {
            entries.push((outcomes[0].clone(), Rational::one()));
        }
        let query = Distribution::from_masses(schema, entries).unwrap();
        let size = x.len() * y.len() * a.len() * bb.len();
        let wins = (0..size).map(|_| next(2) == 1).collect();
        Game::new(x, y, a, bb, query, wins).unwrap()
    }

    #[test]
    fn classical_value_matches_full_pair_enumeration() {
        for seed in 0..30 {
            let g = tiny_random_game(seed);
            let (v, s) = g.classical_value().unwrap();
            let (ov, oa, ob) = enumerate_all_pairs(&g);
            assert_eq!(v, ov, "value mismatch at seed {seed}");
            assert_eq!(s.a_table(), &oa[..], "alice witness mismatch at seed {seed}");
            assert_eq!(s.b_table(), &ob[..], "bob witness mismatch at seed {seed}");
        }
    }

    #[test]
    fn fortnow_value_and_witness() {
        let g = builtin("fortnow").unwrap();
        let (v, s) = g.classical_value().unwrap();
        assert_eq!(v, rat(2, 3));
        assert_eq!(s.a_table(), &[0, 0]);
        assert_eq!(s.b_table(), &[0, 0]);
    }

    #[test]
    fn chsh_value() {
        let g = builtin("chsh").unwrap();
        let (v, s) = g.classical_value().unwrap();
        assert_eq!(v, rat(3, 4));
        assert_eq!(g.win_probability(&s).unwrap(), rat(3, 4));
    }

    #[test]
    fn unknown_builtin_is_an_error() {
        assert!(matches!(builtin("nope"), Err(Error::UnknownBuiltin(_))));
    }

    #[test]
    fn budget_is_enforced_and_reported() {
        let g = builtin("fortnow").unwrap();
        match g.classical_value_with_budget(3) {
            Err(Error::BudgetExceeded { required, budget, .. }) => {
                assert_eq!(required, 16);
                assert_eq!(budget, 3);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn repetition_value_is_supermultiplicative_for_squares() {
        for name in ["fortnow", "chsh"] {
            let g = builtin(name).unwrap();
            let (v, _) = g.classical_value().unwrap();
            let g2 = g.repeat(2).unwrap();
            let (v2, _) = g2.classical_value().unwrap();
            assert!(v2 >= &v * &v, "{name}: v(G^2) < v(G)^2");
            assert!(v2 <= v, "{name}: v(G^2) > v(G)");
        }
    }

    #[test]
    fn fortnow_square_value_is_two_thirds() {
        let g2 = builtin("fortnow").unwrap().repeat(2).unwrap();
        let (v2, s2) = g2.classical_value().unwrap();
        assert_eq!(v2, rat(2, 3));
        assert_eq!(g2.win_probability(&s2).unwrap(), rat(2, 3));
    }

    /// The crossed strategy on the two-fold repetition: answer the other
    /// coordinate's question. It wins both coordinates simultaneously.
    fn fortnow_cross_strategy(g2: &Game) -> DeterministicStrategy {
        let a: Vec<u32> = (0..4u32)
            .map(|x| {
                let p = mixed_radix_split(x, &[2, 2]);
                p[1] * 2 + p[0]
            })
            .collect();
        let b = a.clone();
        DeterministicStrategy::new(g2, a, b).unwrap()
    }

    #[test]
    fn crossed_strategy_couples_the_coordinates() {
        let g2 = builtin("fortnow").unwrap().repeat(2).unwrap();
        let s = fortnow_cross_strategy(&g2);
        assert_eq!(g2.win_probability(&s).unwrap(), rat(2, 3));
        let wins = g2
            .conditional_win_probabilities(&s, &WinEventSpec::new(vec![2]))
            .unwrap();
        assert_eq!(wins.condition_probability, rat(2, 3));
        assert_eq!(wins.conditional[&1], Rational::one());
    }

    #[test]
    fn conditioning_on_zero_probability_event_fails() {
        let f2 = builtin("fortnow").unwrap().repeat(2).unwrap();
        // All-ones answers lose every coordinate: (x|1) == 1 == (y|1).
        let s = DeterministicStrategy::new(&f2, vec![1; 4], vec![1; 4]).unwrap();
        let r = f2.conditional_win_probabilities(&s, &WinEventSpec::new(vec![2]));
        assert_eq!(r.unwrap_err(), Error::ZeroProbabilityEvent);
    }

    #[test]
    fn conditioning_on_every_coordinate_is_rejected() {
        let g2 = builtin("chsh").unwrap().repeat(2).unwrap();
        let (_, s) = g2.classical_value().unwrap();
        let r = g2.conditional_win_probabilities(&s, &WinEventSpec::new(vec![1, 2]));
        assert!(matches!(r, Err(Error::Validation(_))));
    }

    #[test]
    fn conditioned_value_report_with_empty_condition_is_exact() {
        // With nothing conditioned the bound term vanishes and the check is
        // the exact statement min_j Pr[W_j] <= v(G).
        let g = builtin("fortnow").unwrap();
        let g2 = g.repeat(2).unwrap();
        let (_, s2) = g2.classical_value().unwrap();
        let r = conditioned_value_report(&g, 2, &s2, &WinEventSpec::empty()).unwrap();
        assert_eq!(r.bound_term, 0.0);
        assert_eq!(r.base_value, rat(2, 3));
        assert!(r.holds);
        assert!(r.min_conditional <= r.base_value);
    }

    #[test]
    fn conditioned_value_report_crossed_strategy() {
        let g = builtin("fortnow").unwrap();
        let g2 = g.repeat(2).unwrap();
        let s = fortnow_cross_strategy(&g2);
        let r = conditioned_value_report(&g, 2, &s, &WinEventSpec::new(vec![2])).unwrap();
        assert_eq!(r.min_conditional, Rational::one());
        assert_eq!(r.min_index, 1);
        // v + 15 sqrt(1 * 2 + log2(3/2)) is far above 1.
        assert!(r.bound > 1.0);
        assert!(r.holds);
    }

    #[test]
    fn derandomization_beats_the_mixture() {
        let g = builtin("fortnow").unwrap();
        let s00 = DeterministicStrategy::new(&g, vec![0, 0], vec![0, 0]).unwrap();
        let s11 = DeterministicStrategy::new(&g, vec![1, 1], vec![1, 1]).unwrap();
        let mix = SharedRandomnessStrategy {
            components: vec![(rat(1, 2), s00.clone()), (rat(1, 2), s11)],
        };
        let picked = g.derandomize(&mix).unwrap();
        assert_eq!(picked, s00);
        let mixture = g.mixture_win_probability(&mix).unwrap();
        assert!(g.win_probability(&picked).unwrap() >= mixture);
    }

    #[test]
    fn joint_distribution_carries_strategy_answers() {
        let g = builtin("fortnow").unwrap();
        let s = DeterministicStrategy::new(&g, vec![0, 1], vec![0, 0]).unwrap();
        let j = g.joint_distribution(&s).unwrap();
        assert_eq!(j.mass(&Outcome::new(vec![1, 0, 1, 0])), rat(1, 3));
        assert_eq!(j.support_len(), 3);
    }

    #[test]
    fn repeat_once_is_identity() {
        let g = builtin("chsh").unwrap();
        let g1 = g.repeat(1).unwrap();
        assert_eq!(g1.x_alphabet(), g.x_alphabet());
        assert_eq!(g1.repetition_arity(), 1);
        assert_eq!(
            g1.query().statistical_distance(g.query()).unwrap(),
            Rational::zero()
        );
    }

    #[test]
    fn repeat_budget_is_enforced() {
        let g = builtin("chsh").unwrap();
        match g.repeat_with_budget(8, 100) {
            Err(Error::BudgetExceeded { required, .. }) => assert_eq!(required, 256),
            other => panic!("expected budget error, got {other:?}"),
        }
    }
}
