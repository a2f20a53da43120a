//! Correlated sampling without communication, and the embedding of a
//! single game round into a conditioned repeated strategy.
//!
//! Two parties holding distributions `p` and `q` over the same space scan
//! a shared stream of `(symbol, threshold)` pairs and each keep the first
//! symbol whose threshold clears their own mass function. The chance that
//! they stop at the same round is exactly `(1-d)/(1+d)` where `d` is the
//! statistical distance, and the joint law of the two picks has a closed
//! form ([`coupling_distribution_exact`]) that the tests validate against
//! a Monte Carlo run of the literal rejection process.
//!
//! [`EmbeddingPlan`] packages the exact conditional tables needed to play
//! one coordinate of a conditioned repeated game as a strategy for the
//! single game: both provers correlated-sample the side information, then
//! extend to full question tuples with private randomness.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::games::{DeterministicStrategy, Game, WinEventSpec, DEFAULT_OUTCOME_BUDGET};
use crate::prob::{
    mixed_radix_index, mixed_radix_split, Alphabet, ConditionalDistribution, Distribution,
    Outcome, Schema,
};
use crate::rational::{rat_int, Rational};
use crate::{Error, Result};

/// Rejection rounds allowed per correlated draw. Each round accepts with
/// probability at least `1/|S|`, so the cap is unreachable for any space
/// small enough to tabulate; hitting it is reported as a diagnostic.
pub const ROUND_CAP: u64 = 1_000_000;

/// Largest outcome space a sampler will tabulate thresholds for.
pub const SAMPLE_SPACE_BUDGET: u128 = 1 << 20;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic stream of draws. Identical `(seed, counter)` states give
/// identical draws and identical derived streams on every platform; both
/// plain draws and derivations advance the counter.
#[derive(Clone, Debug)]
pub struct RandomStream {
    seed: u64,
    counter: u64,
    rng: ChaCha12Rng,
}

impl RandomStream {
    pub fn from_seed(seed: u64) -> RandomStream {
        RandomStream {
            seed,
            counter: 0,
            rng: ChaCha12Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// Child stream named by `label`, keyed on the current state so that
    /// successive derivations from one parent are independent.
    pub fn derive(&mut self, label: &str) -> RandomStream {
        self.derive_indexed(label, 0)
    }

    /// Child stream named by `(label, index)`; used to give each trial or
    /// worker its own reproducible stream regardless of execution order.
    pub fn derive_indexed(&mut self, label: &str, index: u64) -> RandomStream {
        let mut h = splitmix64(self.seed ^ self.counter);
        for &b in label.as_bytes() {
            h = splitmix64(h ^ u64::from(b));
        }
        h = splitmix64(h ^ index);
        self.counter += 1;
        RandomStream::from_seed(h)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter += 1;
        self.rng.next_u64()
    }

    /// Uniform numerator of a dyadic rational `k / 2^53` in `[0,1)`.
    pub fn next_dyadic53(&mut self) -> u64 {
        self.next_u64() >> 11
    }

    /// Uniform index in `0..n`, unbiased via rejection.
    pub fn uniform_index(&mut self, n: usize) -> u32 {
        assert!(n > 0 && n <= u32::MAX as usize, "index range out of bounds");
        let n = n as u64;
        // 2^64 mod n values at the top would bias the residue; reject them.
        let residue = (u64::MAX % n + 1) % n;
        loop {
            let v = self.next_u64();
            if v <= u64::MAX - residue {
                return (v % n) as u32;
            }
        }
    }
}

/// `ceil(r * 2^53)` for `0 <= r <= 1`. A symbol with mass `r` is accepted
/// against a dyadic threshold `k/2^53` exactly when `k` is below this, so
/// the comparison `r > rho` is exact for dyadic `rho`.
fn ceil_dyadic53(r: &Rational) -> u64 {
    debug_assert!(!r.is_negative());
    let num: BigInt = r.numer() << 53u8;
    let den = r.denom();
    let t = (num + den - BigInt::one()) / den;
    t.to_u64().expect("dyadic threshold exceeds u64")
}

/// Per-symbol acceptance thresholds indexed by flat outcome position.
fn accept_table(d: &Distribution) -> Result<Vec<u64>> {
    let total = d.schema().total_outcomes();
    if total > SAMPLE_SPACE_BUDGET {
        return Err(Error::BudgetExceeded {
            what: "sampling outcome space".into(),
            required: total,
            budget: SAMPLE_SPACE_BUDGET,
        });
    }
    let sizes = d.schema().sizes();
    let mut table = vec![0u64; total as usize];
    for (o, m) in d.support() {
        table[mixed_radix_index(o.indices(), &sizes) as usize] = ceil_dyadic53(m);
    }
    Ok(table)
}

fn shared_schema<'a>(p: &'a Distribution, q: &Distribution) -> Result<&'a Schema> {
    if p.schema() != q.schema() {
        return Err(Error::schema(
            "correlated sampling needs one shared outcome space",
        ));
    }
    Ok(p.schema())
}

/// One correlated draw: each side's first accepted symbol, plus whether
/// both sides accepted at the same round (the event whose probability is
/// exactly `(1-d)/(1+d)`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorrelatedDraw {
    pub alice: Outcome,
    pub bob: Outcome,
    pub same_round: bool,
    pub rounds: u64,
}

/// First-acceptance rejection sampling of `p` and `q` from one stream.
/// Each round draws a uniform symbol and a uniform 53-bit threshold; a
/// side keeps the symbol the first time its own mass clears the
/// threshold. Marginally each side's output follows its distribution (up
/// to the documented `2^-53` dyadic rounding per round).
pub fn correlated_sample(
    p: &Distribution,
    q: &Distribution,
    r: &mut RandomStream,
) -> Result<CorrelatedDraw> {
    let schema = shared_schema(p, q)?;
    let sizes = schema.sizes();
    let total = schema.total_outcomes() as usize;
    let tp = accept_table(p)?;
    let tq = accept_table(q)?;
    let mut alice: Option<(u32, u64)> = None;
    let mut bob: Option<(u32, u64)> = None;
    for round in 1..=ROUND_CAP {
        let s = r.uniform_index(total);
        let k = r.next_dyadic53();
        if alice.is_none() && k < tp[s as usize] {
            alice = Some((s, round));
        }
        if bob.is_none() && k < tq[s as usize] {
            bob = Some((s, round));
        }
        if let (Some((sa, ra)), Some((sb, rb))) = (&alice, &bob) {
            return Ok(CorrelatedDraw {
                alice: Outcome::new(mixed_radix_split(*sa, &sizes)),
                bob: Outcome::new(mixed_radix_split(*sb, &sizes)),
                same_round: ra == rb,
                rounds: *ra.max(rb),
            });
        }
    }
    Err(Error::RoundCapExceeded(ROUND_CAP))
}

/// Three-way correlated draw from one stream, one first-acceptance scan
/// per distribution. Used to check that two sides and a pooled referee
/// distribution agree except with probability `2*eps1 + 2*eps2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TripleDraw {
    pub alice: Outcome,
    pub bob: Outcome,
    pub pooled: Outcome,
}

pub fn correlated_sample_triple(
    p: &Distribution,
    q: &Distribution,
    pooled: &Distribution,
    r: &mut RandomStream,
) -> Result<TripleDraw> {
    let schema = shared_schema(p, q)?;
    shared_schema(p, pooled)?;
    let sizes = schema.sizes();
    let total = schema.total_outcomes() as usize;
    let tables = [accept_table(p)?, accept_table(q)?, accept_table(pooled)?];
    let mut picks: [Option<u32>; 3] = [None, None, None];
    for _round in 1..=ROUND_CAP {
        let s = r.uniform_index(total);
        let k = r.next_dyadic53();
        for (pick, table) in picks.iter_mut().zip(&tables) {
            if pick.is_none() && k < table[s as usize] {
                *pick = Some(s);
            }
        }
        if picks.iter().all(Option::is_some) {
            let mut outs = picks
                .iter()
                .map(|s| Outcome::new(mixed_radix_split(s.unwrap(), &sizes)));
            return Ok(TripleDraw {
                alice: outs.next().unwrap(),
                bob: outs.next().unwrap(),
                pooled: outs.next().unwrap(),
            });
        }
    }
    Err(Error::RoundCapExceeded(ROUND_CAP))
}

/// Probability that both sides accept at the same round: exactly
/// `(1-d)/(1+d)` for `d` the statistical distance between `p` and `q`.
pub fn pairwise_agreement_exact(p: &Distribution, q: &Distribution) -> Result<Rational> {
    shared_schema(p, q)?;
    let d = p.statistical_distance(q)?;
    Ok((Rational::one() - &d) / (Rational::one() + &d))
}

/// Exact joint law of the two first-acceptance picks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coupling {
    schema: Schema,
    cells: BTreeMap<(Outcome, Outcome), Rational>,
}

impl Coupling {
    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn cells(&self) -> impl Iterator<Item = (&(Outcome, Outcome), &Rational)> {
        self.cells.iter()
    }

    pub fn mass(&self, alice: &Outcome, bob: &Outcome) -> Rational {
        self.cells
            .get(&(alice.clone(), bob.clone()))
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    pub fn diagonal_mass(&self) -> Rational {
        self.cells
            .iter()
            .filter(|((a, b), _)| a == b)
            .map(|(_, m)| m)
            .sum()
    }

    pub fn left_marginal(&self) -> Distribution {
        self.marginal(|(a, _)| a.clone())
    }

    pub fn right_marginal(&self) -> Distribution {
        self.marginal(|(_, b)| b.clone())
    }

    fn marginal(&self, pick: impl Fn(&(Outcome, Outcome)) -> Outcome) -> Distribution {
        let mut mass: BTreeMap<Outcome, Rational> = BTreeMap::new();
        for (pair, m) in &self.cells {
            *mass.entry(pick(pair)).or_insert_with(Rational::zero) += m;
        }
        Distribution::from_masses(self.schema.clone(), mass).expect("marginal of a coupling")
    }
}

/// Closed form of the rejection process's joint output law. At the first
/// round anyone accepts, both accept together with per-symbol weight
/// `min(p,q)`, or one side accepts its excess `(p-q)^+` and the other
/// finishes an independent fresh scan of its own distribution; the three
/// weights normalize by `1+d`.
///
/// The derivation lives outside any written source, so the test suite
/// validates every cell against a Monte Carlo run of the literal process
/// before the rest of the crate trusts it.
pub fn coupling_distribution_exact(p: &Distribution, q: &Distribution) -> Result<Coupling> {
    let schema = shared_schema(p, q)?.clone();
    let d = p.statistical_distance(q)?;
    let norm = Rational::one() + &d;
    let mut cells: BTreeMap<(Outcome, Outcome), Rational> = BTreeMap::new();
    let mut add = |a: &Outcome, b: &Outcome, m: Rational| {
        if !m.is_zero() {
            *cells
                .entry((a.clone(), b.clone()))
                .or_insert_with(Rational::zero) += m;
        }
    };
    for (s, pm) in p.support() {
        let qm = q.mass(s);
        let both = if *pm <= qm { pm.clone() } else { qm };
        add(s, s, both / &norm);
    }
    for (sa, pm) in p.support() {
        let excess = pm - q.mass(sa);
        if excess.is_positive() {
            for (sb, qm) in q.support() {
                add(sa, sb, &excess * qm / &norm);
            }
        }
    }
    for (sb, qm) in q.support() {
        let excess = qm - p.mass(sb);
        if excess.is_positive() {
            for (sa, pm) in p.support() {
                add(sa, sb, pm * &excess / &norm);
            }
        }
    }
    Ok(Coupling { schema, cells })
}

/// Exact same-round agreement next to a Monte Carlo estimate of it.
#[derive(Clone, Debug)]
pub struct CouplingReport {
    pub exact_pairwise_agreement: Rational,
    pub joint_estimate: f64,
    pub trials: u64,
    pub confidence_halfwidth: f64,
}

pub fn coupling_report(
    p: &Distribution,
    q: &Distribution,
    trials: u64,
    seed: u64,
) -> Result<CouplingReport> {
    if trials == 0 {
        return Err(Error::validation("coupling report needs trials > 0"));
    }
    let exact = pairwise_agreement_exact(p, q)?;
    let mut master = RandomStream::from_seed(seed);
    let mut hits = 0u64;
    for t in 0..trials {
        let mut stream = master.derive_indexed("trial", t);
        if correlated_sample(p, q, &mut stream)?.same_round {
            hits += 1;
        }
    }
    let estimate = hits as f64 / trials as f64;
    let halfwidth = 3.0 * (estimate * (1.0 - estimate) / trials as f64).sqrt();
    Ok(CouplingReport {
        exact_pairwise_agreement: exact,
        joint_estimate: estimate,
        trials,
        confidence_halfwidth: halfwidth,
    })
}

/// Draws single outcomes from a fixed distribution via cumulative 53-bit
/// thresholds (same dyadic rounding as the rejection sampler).
pub struct CategoricalSampler {
    outcomes: Vec<Outcome>,
    thresholds: Vec<u64>,
}

impl CategoricalSampler {
    pub fn new(d: &Distribution) -> CategoricalSampler {
        let mut outcomes = Vec::with_capacity(d.support_len());
        let mut thresholds = Vec::with_capacity(d.support_len());
        let mut cum = Rational::zero();
        for (o, m) in d.support() {
            cum += m;
            outcomes.push(o.clone());
            thresholds.push(ceil_dyadic53(&cum));
        }
        // Total mass one makes the last threshold exactly 2^53, so every
        // draw lands.
        CategoricalSampler {
            outcomes,
            thresholds,
        }
    }

    pub fn draw(&self, r: &mut RandomStream) -> &Outcome {
        let k = r.next_dyadic53();
        let i = self.thresholds.partition_point(|&t| t <= k);
        &self.outcomes[i]
    }
}

/// Exact law produced when, on a joint over `(x, y, s, t)`, one side
/// draws `s` from `P(s|x)` and the other draws `t` from `P(t|y)` with
/// private randomness. Equals the input joint exactly when `s` depends on
/// the rest only through `x` and `t` only through `y`.
pub fn local_markov_extension(joint: &Distribution) -> Result<Distribution> {
    if joint.schema().arity() != 4 {
        return Err(Error::schema(
            "local extension expects coordinates (x, y, s, t)",
        ));
    }
    let names: Vec<String> = joint.schema().names().map(str::to_string).collect();
    let (x, y, s, t) = (
        names[0].as_str(),
        names[1].as_str(),
        names[2].as_str(),
        names[3].as_str(),
    );
    let inputs = joint.marginal(&[x, y])?;
    let s_given_x = ConditionalDistribution::from_joint(joint, &[x], &[s])?;
    let t_given_y = ConditionalDistribution::from_joint(joint, &[y], &[t])?;
    inputs.compose(&s_given_x)?.compose(&t_given_y)
}

/// Exact tables for playing one coordinate of a conditioned repeated
/// strategy as a strategy for the single game.
///
/// The side information per coordinate-`j` question pair consists of the
/// conditioned coordinates' questions and answers plus, for every other
/// free coordinate, a uniform direction bit and the question it selects.
/// Alice holds its law given her question, Bob given his; the extension
/// conditionals complete the picture to full question tuples.
#[derive(Clone, Debug)]
pub struct EmbeddingPlan {
    base: Game,
    repeated: Game,
    n: u32,
    cond: WinEventSpec,
    target: u32,
    condition_probability: Rational,
    target_conditional_win: Rational,
    joint: Distribution,
    info_names: Vec<String>,
    info_given_x: ConditionalDistribution,
    info_given_y: ConditionalDistribution,
    eps_alice: Rational,
    eps_bob: Rational,
    alice_extension: ConditionalDistribution,
    bob_extension: ConditionalDistribution,
    target_law: Distribution,
    strategy: DeterministicStrategy,
}

impl EmbeddingPlan {
    pub fn base_game(&self) -> &Game {
        &self.base
    }

    pub fn repeated_game(&self) -> &Game {
        &self.repeated
    }

    pub fn repetition_arity(&self) -> u32 {
        self.n
    }

    pub fn conditioned(&self) -> &WinEventSpec {
        &self.cond
    }

    pub fn target_coordinate(&self) -> u32 {
        self.target
    }

    /// Probability of the conditioning event under the repeated strategy.
    pub fn condition_probability(&self) -> &Rational {
        &self.condition_probability
    }

    /// Probability that the target coordinate wins, given the event.
    pub fn target_conditional_win(&self) -> &Rational {
        &self.target_conditional_win
    }

    /// Full conditioned joint over side information, the target
    /// coordinate's questions, and the complete question tuples.
    pub fn joint(&self) -> &Distribution {
        &self.joint
    }

    pub fn info_names(&self) -> &[String] {
        &self.info_names
    }

    pub fn info_given_x(&self) -> &ConditionalDistribution {
        &self.info_given_x
    }

    pub fn info_given_y(&self) -> &ConditionalDistribution {
        &self.info_given_y
    }

    /// Exact distances between the conditioned (info, questions) joint
    /// and the single game's question law composed with each side's info
    /// conditional. These drive the distance bound.
    pub fn input_marginal_gaps(&self) -> (Rational, Rational) {
        (self.eps_alice.clone(), self.eps_bob.clone())
    }

    /// `3*eps_alice + 2*eps_bob`, an upper bound on
    /// [`embedding_distance_exact`].
    pub fn distance_bound(&self) -> Rational {
        rat_int(3) * &self.eps_alice + rat_int(2) * &self.eps_bob
    }

    pub fn alice_extension(&self) -> &ConditionalDistribution {
        &self.alice_extension
    }

    pub fn bob_extension(&self) -> &ConditionalDistribution {
        &self.bob_extension
    }

    /// Conditioned law of the full question tuples — what the embedding
    /// tries to reproduce.
    pub fn target_law(&self) -> &Distribution {
        &self.target_law
    }

    pub fn strategy(&self) -> &DeterministicStrategy {
        &self.strategy
    }
}

pub fn embed_plan(
    g: &Game,
    n: u32,
    strategy: &DeterministicStrategy,
    cond: &WinEventSpec,
    target: u32,
) -> Result<EmbeddingPlan> {
    embed_plan_with_budget(g, n, strategy, cond, target, DEFAULT_OUTCOME_BUDGET)
}

pub fn embed_plan_with_budget(
    g: &Game,
    n: u32,
    strategy: &DeterministicStrategy,
    cond: &WinEventSpec,
    target: u32,
    budget: u128,
) -> Result<EmbeddingPlan> {
    if g.repetition_arity() != 1 {
        return Err(Error::validation(
            "embedding starts from a single-round base game",
        ));
    }
    if target == 0 || target > n {
        return Err(Error::validation(format!(
            "target coordinate must lie in 1..={n}"
        )));
    }
    if cond.contains(target) {
        return Err(Error::validation(
            "target coordinate must not be conditioned on",
        ));
    }
    if n > 1 {
        cond.check_against(n)?;
    } else if !cond.is_empty() {
        return Err(Error::validation("n = 1 leaves nothing to condition on"));
    }
    let rep = g.repeat_with_budget(n, budget)?;
    if strategy.a_table().len() != rep.x_alphabet().len()
        || strategy.b_table().len() != rep.y_alphabet().len()
    {
        return Err(Error::schema(
            "strategy tables do not match the repeated game",
        ));
    }

    let nxb = g.x_alphabet().len();
    let nyb = g.y_alphabet().len();
    let nab = g.a_alphabet().len();
    let nbb = g.b_alphabet().len();
    let others: Vec<u32> = (1..=n)
        .filter(|&i| i != target && !cond.contains(i))
        .collect();
    let dbits = others.len();
    let expansion = 1u128
        .checked_shl(dbits as u32)
        .ok_or_else(|| Error::validation("too many free coordinates"))?;
    let required = (rep.query().support_len() as u128)
        .checked_mul(expansion)
        .ok_or_else(|| Error::validation("plan support does not fit"))?;
    if required > budget {
        return Err(Error::BudgetExceeded {
            what: "embedding plan support".into(),
            required,
            budget,
        });
    }

    let mut coords: Vec<(String, Alphabet)> = Vec::new();
    for &i in cond.indices() {
        coords.push((format!("xc{i}"), g.x_alphabet().clone()));
    }
    for &i in cond.indices() {
        coords.push((format!("yc{i}"), g.y_alphabet().clone()));
    }
    for &i in &others {
        coords.push((format!("d{i}"), Alphabet::binary()));
    }
    let union = Alphabet::union_tagged(g.x_alphabet(), g.y_alphabet());
    for &i in &others {
        coords.push((format!("u{i}"), union.clone()));
    }
    for &i in cond.indices() {
        coords.push((format!("ac{i}"), g.a_alphabet().clone()));
    }
    for &i in cond.indices() {
        coords.push((format!("bc{i}"), g.b_alphabet().clone()));
    }
    let info_names: Vec<String> = coords.iter().map(|(name, _)| name.clone()).collect();
    coords.push(("xj".to_string(), g.x_alphabet().clone()));
    coords.push(("yj".to_string(), g.y_alphabet().clone()));
    coords.push(("xn".to_string(), rep.x_alphabet().clone()));
    coords.push(("yn".to_string(), rep.y_alphabet().clone()));
    let schema = Schema::new(coords)?;

    let tj = (target - 1) as usize;
    let bit_share = Rational::new(BigInt::one(), BigInt::one() << dbits);
    let mut cells: BTreeMap<Outcome, Rational> = BTreeMap::new();
    let mut pr_cond = Rational::zero();
    let mut pr_cond_and_target = Rational::zero();
    for (o, m) in rep.query().support() {
        let xt = o.get(0);
        let yt = o.get(1);
        let xs = rep.split_tuple(xt, nxb);
        let ys = rep.split_tuple(yt, nyb);
        let at = rep.split_tuple(strategy.answer_a(xt), nab);
        let bt = rep.split_tuple(strategy.answer_b(yt), nbb);
        let survives = cond.indices().iter().all(|&i| {
            let c = (i - 1) as usize;
            g.wins(xs[c], ys[c], at[c], bt[c])
        });
        if !survives {
            continue;
        }
        pr_cond += m;
        if g.wins(xs[tj], ys[tj], at[tj], bt[tj]) {
            pr_cond_and_target += m;
        }
        let cell_mass = m * &bit_share;
        for dmask in 0u64..(1u64 << dbits) {
            let mut idx: Vec<u32> = Vec::with_capacity(schema.arity());
            for &i in cond.indices() {
                idx.push(xs[(i - 1) as usize]);
            }
            for &i in cond.indices() {
                idx.push(ys[(i - 1) as usize]);
            }
            for t in 0..dbits {
                idx.push(((dmask >> t) & 1) as u32);
            }
            for (t, &i) in others.iter().enumerate() {
                let c = (i - 1) as usize;
                // Direction bit zero reveals the partner-side question.
                idx.push(if (dmask >> t) & 1 == 0 {
                    nxb as u32 + ys[c]
                } else {
                    xs[c]
                });
            }
            for &i in cond.indices() {
                idx.push(at[(i - 1) as usize]);
            }
            for &i in cond.indices() {
                idx.push(bt[(i - 1) as usize]);
            }
            idx.push(xs[tj]);
            idx.push(ys[tj]);
            idx.push(xt);
            idx.push(yt);
            cells.insert(Outcome::new(idx), cell_mass.clone());
        }
    }
    if pr_cond.is_zero() {
        return Err(Error::ZeroProbabilityEvent);
    }
    let joint = Distribution::from_masses(
        schema,
        cells.into_iter().map(|(o, m)| (o, m / &pr_cond)),
    )?;
    let target_conditional_win = pr_cond_and_target / &pr_cond;

    let info_refs: Vec<&str> = info_names.iter().map(String::as_str).collect();
    let info_given_x = ConditionalDistribution::from_joint(&joint, &["xj"], &info_refs)?;
    let info_given_y = ConditionalDistribution::from_joint(&joint, &["yj"], &info_refs)?;

    let question_law = g.query().with_schema(Schema::named(&[
        ("xj", g.x_alphabet()),
        ("yj", g.y_alphabet()),
    ])?)?;
    let mut observed_names: Vec<&str> = vec!["xj", "yj"];
    observed_names.extend(info_refs.iter().copied());
    let observed = joint.marginal(&observed_names)?;
    let eps_alice = observed.statistical_distance(&question_law.compose(&info_given_x)?)?;
    let eps_bob = observed.statistical_distance(&question_law.compose(&info_given_y)?)?;

    let xn_schema = Schema::named(&[("xn", rep.x_alphabet())])?;
    let yn_schema = Schema::named(&[("yn", rep.y_alphabet())])?;
    let tuples_pinning = |alphabet_len: usize, base: usize, pin: u32| -> Vec<Outcome> {
        (0..alphabet_len as u32)
            .filter(|&t| rep.split_tuple(t, base)[tj] == pin)
            .map(|t| Outcome::new(vec![t]))
            .collect()
    };
    let mut given_a: Vec<&str> = vec!["xj"];
    given_a.extend(info_refs.iter().copied());
    let alice_extension =
        ConditionalDistribution::from_joint_with_fill(&joint, &given_a, &["xn"], |given| {
            // Unreached (info, question) rows still honor the pinned
            // coordinate: fill uniformly over consistent tuples.
            let tuples = tuples_pinning(rep.x_alphabet().len(), nxb, given.get(0));
            Distribution::uniform_over(xn_schema.clone(), &tuples).expect("pinned tuple fill")
        })?;
    let mut given_b: Vec<&str> = vec!["yj"];
    given_b.extend(info_refs.iter().copied());
    let bob_extension =
        ConditionalDistribution::from_joint_with_fill(&joint, &given_b, &["yn"], |given| {
            let tuples = tuples_pinning(rep.y_alphabet().len(), nyb, given.get(0));
            Distribution::uniform_over(yn_schema.clone(), &tuples).expect("pinned tuple fill")
        })?;
    let target_law = joint.marginal(&["xn", "yn"])?;

    Ok(EmbeddingPlan {
        base: g.clone(),
        repeated: rep,
        n,
        cond: cond.clone(),
        target,
        condition_probability: pr_cond,
        target_conditional_win,
        joint,
        info_names,
        info_given_x,
        info_given_y,
        eps_alice,
        eps_bob,
        alice_extension,
        bob_extension,
        target_law,
        strategy: strategy.clone(),
    })
}

/// One embedded round: correlated-sample the side information from the
/// shared stream, then each side extends its half to a full question
/// tuple with private randomness. Coordinate `target` of the output
/// tuples always carries the actual questions `(x, y)`.
pub fn embed_sample(
    plan: &EmbeddingPlan,
    x: u32,
    y: u32,
    r: &mut RandomStream,
) -> Result<(u32, u32)> {
    if x as usize >= plan.base.x_alphabet().len() || y as usize >= plan.base.y_alphabet().len() {
        return Err(Error::validation("question outside the base alphabets"));
    }
    let mut shared = r.derive("shared");
    let mut alice_private = r.derive("alice");
    let mut bob_private = r.derive("bob");

    let p = plan
        .info_given_x
        .row(&Outcome::new(vec![x]))
        .ok_or_else(|| Error::Internal("missing info row".into()))?;
    let q = plan
        .info_given_y
        .row(&Outcome::new(vec![y]))
        .ok_or_else(|| Error::Internal("missing info row".into()))?;
    let draw = correlated_sample(p, q, &mut shared)?;

    let alice_row = plan
        .alice_extension
        .row(&Outcome::new(vec![x]).concat(&draw.alice))
        .ok_or_else(|| Error::Internal("missing extension row".into()))?;
    let bob_row = plan
        .bob_extension
        .row(&Outcome::new(vec![y]).concat(&draw.bob))
        .ok_or_else(|| Error::Internal("missing extension row".into()))?;
    let xn = CategoricalSampler::new(alice_row).draw(&mut alice_private).get(0);
    let yn = CategoricalSampler::new(bob_row).draw(&mut bob_private).get(0);
    Ok((xn, yn))
}

/// Exact law of the embedded question tuples: the single game's question
/// law pushed through the coupling of the two info conditionals and both
/// extension conditionals.
pub fn embedded_law_exact(plan: &EmbeddingPlan) -> Result<Distribution> {
    let mut acc: BTreeMap<Outcome, Rational> = BTreeMap::new();
    for (xy, m) in plan.base.query().support() {
        let x = Outcome::new(vec![xy.get(0)]);
        let y = Outcome::new(vec![xy.get(1)]);
        let p = plan
            .info_given_x
            .row(&x)
            .ok_or_else(|| Error::Internal("missing info row".into()))?;
        let q = plan
            .info_given_y
            .row(&y)
            .ok_or_else(|| Error::Internal("missing info row".into()))?;
        let coupling = coupling_distribution_exact(p, q)?;
        for ((sa, sb), cm) in coupling.cells() {
            let alice_row = plan
                .alice_extension
                .row(&x.concat(sa))
                .ok_or_else(|| Error::Internal("missing extension row".into()))?;
            let bob_row = plan
                .bob_extension
                .row(&y.concat(sb))
                .ok_or_else(|| Error::Internal("missing extension row".into()))?;
            let w = m * cm;
            for (xo, am) in alice_row.support() {
                for (yo, bm) in bob_row.support() {
                    *acc.entry(xo.concat(yo)).or_insert_with(Rational::zero) += &w * am * bm;
                }
            }
        }
    }
    Distribution::from_masses(plan.target_law.schema().clone(), acc)
}

/// Exact statistical distance between what the embedding produces and
/// the conditioned law it imitates. Bounded by
/// [`EmbeddingPlan::distance_bound`] whenever the plan's extensions make
/// each side's tuple depend on the rest only through its own question and
/// the side information.
pub fn embedding_distance_exact(plan: &EmbeddingPlan) -> Result<Rational> {
    embedded_law_exact(plan)?.statistical_distance(&plan.target_law)
}

/// Result of playing the single game through an embedding.
#[derive(Clone, Debug)]
pub struct PlayReport {
    pub exact_win: Rational,
    pub empirical_win: f64,
    pub trials: u64,
}

/// Plays the base game by embedding each question pair and answering with
/// the target coordinate of the repeated strategy. `exact_win` integrates
/// the exact embedded law; `empirical_win` plays `trials` seeded rounds.
/// The exact value is at least the conditional win probability of the
/// target coordinate minus the embedding distance.
pub fn play_embedded(plan: &EmbeddingPlan, trials: u64, seed: u64) -> Result<PlayReport> {
    if trials == 0 {
        return Err(Error::validation("playing needs trials > 0"));
    }
    let law = embedded_law_exact(plan)?;
    let rep = &plan.repeated;
    let mut exact_win = Rational::zero();
    for (o, m) in law.support() {
        let (xn, yn) = (o.get(0), o.get(1));
        let a = plan.strategy.answer_a(xn);
        let b = plan.strategy.answer_b(yn);
        if rep.coordinate_win(plan.target, xn, yn, a, b) {
            exact_win += m;
        }
    }

    let question_sampler = CategoricalSampler::new(plan.base.query());
    let mut master = RandomStream::from_seed(seed);
    let mut wins = 0u64;
    for t in 0..trials {
        let mut stream = master.derive_indexed("trial", t);
        let question = {
            let mut qs = stream.derive("question");
            question_sampler.draw(&mut qs).clone()
        };
        let (x, y) = (question.get(0), question.get(1));
        let (xn, yn) = embed_sample(plan, x, y, &mut stream)?;
        let a = plan.strategy.answer_a(xn);
        let b = plan.strategy.answer_b(yn);
        if rep.coordinate_win(plan.target, xn, yn, a, b) {
            wins += 1;
        }
    }
    Ok(PlayReport {
        exact_win,
        empirical_win: wins as f64 / trials as f64,
        trials,
    })
}
