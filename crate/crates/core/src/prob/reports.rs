use num_traits::Zero;

use super::dist::{ConditionalDistribution, Distribution};
use super::schema::{mixed_radix_index, Alphabet, Outcome, Schema};
use crate::rational::{self, Rational};
use crate::{Error, Result};

/// Statistical distance between `p` and the Markov composition
/// `P_U * P_{T|U} * P_{V|U}` of its own conditionals, where `t`, `u`, `v`
/// name coordinate groups of `p`. Groups may overlap (each group is read
/// as one tuple-valued variable); the deficiency is zero exactly when
/// T <-> U <-> V forms a Markov chain.
pub fn markov_deficiency(
    p: &Distribution,
    t: &[&str],
    u: &[&str],
    v: &[&str],
) -> Result<Rational> {
    let tupled = tuple_groups(p, &[("t", t), ("u", u), ("v", v)])?;
    let p_u = tupled.marginal(&["u"])?;
    let k_t = ConditionalDistribution::from_joint(&tupled, &["u"], &["t"])?;
    let k_v = ConditionalDistribution::from_joint(&tupled, &["u"], &["v"])?;
    let composed = p_u
        .compose(&k_t)?
        .compose(&k_v)?
        .marginal(&["t", "u", "v"])?;
    tupled.statistical_distance(&composed)
}

/// Pushforward of `p` onto tuple-valued coordinates, one per named group.
fn tuple_groups(p: &Distribution, groups: &[(&str, &[&str])]) -> Result<Distribution> {
    let mut coords = Vec::new();
    let mut group_pos = Vec::new();
    let mut group_sizes = Vec::new();
    for (name, names) in groups {
        let pos = p.schema().positions(names)?;
        let alphabets: Vec<&Alphabet> = pos.iter().map(|&q| p.schema().alphabet(q)).collect();
        coords.push((name.to_string(), Alphabet::product(&alphabets)));
        group_sizes.push(alphabets.iter().map(|a| a.len()).collect::<Vec<_>>());
        group_pos.push(pos);
    }
    let schema = Schema::new(coords)?;
    let entries = p.support().map(|(o, m)| {
        let idx: Vec<u32> = group_pos
            .iter()
            .zip(&group_sizes)
            .map(|(pos, sizes)| {
                let parts: Vec<u32> = pos.iter().map(|&q| o.get(q)).collect();
                mixed_radix_index(&parts, sizes)
            })
            .collect();
        (Outcome::new(idx), m.clone())
    });
    // Distinct source outcomes can collapse onto one tuple outcome.
    let mut merged = std::collections::BTreeMap::new();
    for (o, m) in entries {
        *merged.entry(o).or_insert_with(Rational::zero) += m;
    }
    Distribution::from_masses(schema, merged)
}

/// How conditioning a product distribution on an event moves each
/// coordinate's marginal. `event_probability` is bounded by
/// `probability_bound = 2^(-sum of squared distances)`, and the distance
/// sum by `distance_sum_bound = sqrt(k * log2(1/Pr))`.
#[derive(Clone, Debug)]
pub struct ConditioningReport {
    pub event_probability: Rational,
    pub per_coordinate_distances: Vec<Rational>,
    pub probability_bound: f64,
    pub distance_sum: Rational,
    pub distance_sum_bound: f64,
}

pub fn conditioning_report(
    p: &Distribution,
    event: impl Fn(&Outcome) -> bool,
) -> Result<ConditioningReport> {
    let names: Vec<&str> = p.schema().names().collect();
    if names.is_empty() {
        return Err(Error::validation("conditioning report needs coordinates"));
    }
    let marginals: Vec<Distribution> = names
        .iter()
        .map(|n| p.marginal(&[n]))
        .collect::<Result<_>>()?;
    let mut product = marginals[0].clone();
    for m in &marginals[1..] {
        product = product.product(m)?;
    }
    if &product != p {
        return Err(Error::validation(
            "distribution is not a product of its per-coordinate marginals",
        ));
    }

    let event_probability = p
        .support()
        .filter(|(o, _)| event(o))
        .fold(Rational::zero(), |acc, (_, m)| acc + m);
    if event_probability.is_zero() {
        return Err(Error::ZeroProbabilityEvent);
    }
    let conditioned = p.condition(event)?;

    let mut per_coordinate_distances = Vec::with_capacity(names.len());
    let mut sq_sum = Rational::zero();
    let mut distance_sum = Rational::zero();
    for (name, unconditioned) in names.iter().zip(&marginals) {
        let d = conditioned
            .marginal(&[name])?
            .statistical_distance(unconditioned)?;
        sq_sum += &d * &d;
        distance_sum += &d;
        per_coordinate_distances.push(d);
    }
    let probability_bound = (-rational::to_f64(&sq_sum)).exp2();
    let k = names.len() as f64;
    let distance_sum_bound = (k * -rational::log2(&event_probability)).sqrt();
    Ok(ConditioningReport {
        event_probability,
        per_coordinate_distances,
        probability_bound,
        distance_sum,
        distance_sum_bound,
    })
}

/// For a distribution over (hub T, blocks U_1..U_k, side V) in which the
/// blocks are conditionally independent given the hub, reports how far
/// each block's conditioned joint `P_{T U_j V | W}` sits from
/// `P_{T V | W} * P_{U_j | T}`, together with the aggregate bound
/// `sqrt(k) * sqrt(log2 |supp P_{V|W}| + log2(1/Pr[W]))`.
#[derive(Clone, Debug)]
pub struct BlockIndependenceReport {
    pub event_probability: Rational,
    pub per_block_distances: Vec<Rational>,
    pub distance_sum: Rational,
    pub side_support: usize,
    pub bound: f64,
}

pub fn block_independence_report(
    p: &Distribution,
    hub: &[&str],
    blocks: &[&str],
    side: &[&str],
    event: impl Fn(&Outcome) -> bool,
) -> Result<BlockIndependenceReport> {
    if blocks.is_empty() {
        return Err(Error::validation("need at least one block"));
    }
    let mut all: Vec<&str> = hub.to_vec();
    all.extend_from_slice(blocks);
    all.extend_from_slice(side);
    let positions = p.schema().positions(&all)?;
    if positions.len() != p.schema().arity() {
        return Err(Error::schema(
            "hub, blocks, and side must partition the coordinates",
        ));
    }

    // Blocks must be conditionally independent given the hub, exactly.
    let mut chain_names: Vec<&str> = hub.to_vec();
    let mut chain = p.marginal(hub)?;
    for b in blocks {
        let k = ConditionalDistribution::from_joint(p, hub, &[b])?;
        chain = chain.compose(&k)?;
        chain_names.push(b);
    }
    if chain != p.marginal(&chain_names)? {
        return Err(Error::validation(
            "blocks are not conditionally independent given the hub",
        ));
    }

    let event_probability = p
        .support()
        .filter(|(o, _)| event(o))
        .fold(Rational::zero(), |acc, (_, m)| acc + m);
    if event_probability.is_zero() {
        return Err(Error::ZeroProbabilityEvent);
    }
    let conditioned = p.condition(event)?;

    let mut hub_side: Vec<&str> = hub.to_vec();
    hub_side.extend_from_slice(side);
    let cond_hub_side = conditioned.marginal(&hub_side)?;

    let mut per_block_distances = Vec::with_capacity(blocks.len());
    let mut distance_sum = Rational::zero();
    for b in blocks {
        let mut order: Vec<&str> = hub.to_vec();
        order.push(b);
        order.extend_from_slice(side);
        let lhs = conditioned.marginal(&order)?;
        let k = ConditionalDistribution::from_joint(p, hub, &[b])?;
        let rhs = cond_hub_side.compose(&k)?.marginal(&order)?;
        let d = lhs.statistical_distance(&rhs)?;
        distance_sum += &d;
        per_block_distances.push(d);
    }

    let side_support = conditioned.marginal(side)?.support_len();
    let k = blocks.len() as f64;
    let bound =
        k.sqrt() * ((side_support as f64).log2() - rational::log2(&event_probability)).sqrt();
    Ok(BlockIndependenceReport {
        event_probability,
        per_block_distances,
        distance_sum,
        side_support,
        bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;
    use num_traits::One;

    #[test]
    fn deficiency_zero_for_product() {
        let b = Alphabet::binary();
        let schema = Schema::named(&[("t", &b), ("u", &b), ("v", &b)]).unwrap();
        let p = Distribution::uniform(schema);
        assert!(markov_deficiency(&p, &["t"], &["u"], &["v"])
            .unwrap()
            .is_zero());
    }

    #[test]
    fn deficiency_zero_when_all_equal() {
        let b = Alphabet::binary();
        let schema = Schema::named(&[("t", &b), ("u", &b), ("v", &b)]).unwrap();
        let p = Distribution::from_masses(
            schema,
            [
                (Outcome::new(vec![0, 0, 0]), rat(1, 2)),
                (Outcome::new(vec![1, 1, 1]), rat(1, 2)),
            ],
        )
        .unwrap();
        assert!(markov_deficiency(&p, &["t"], &["u"], &["v"])
            .unwrap()
            .is_zero());
    }

    #[test]
    fn deficiency_half_for_correlated_ends_with_constant_middle() {
        // T = V uniform bit, U constant: frozen by hand, the composition is
        // the product of two uniform bits, at distance 1/2 from the diagonal.
        let b = Alphabet::binary();
        let u = Alphabet::unit();
        let schema = Schema::named(&[("t", &b), ("u", &u), ("v", &b)]).unwrap();
        let p = Distribution::from_masses(
            schema,
            [
                (Outcome::new(vec![0, 0, 0]), rat(1, 2)),
                (Outcome::new(vec![1, 0, 1]), rat(1, 2)),
            ],
        )
        .unwrap();
        assert_eq!(
            markov_deficiency(&p, &["t"], &["u"], &["v"]).unwrap(),
            rat(1, 2)
        );
    }

    #[test]
    fn deficiency_handles_overlapping_groups() {
        let b = Alphabet::binary();
        let schema = Schema::named(&[("x", &b), ("y", &b)]).unwrap();
        let p = Distribution::uniform(schema);
        // U contains X itself, so X <-> (X,Y) <-> Y trivially.
        assert!(markov_deficiency(&p, &["x"], &["x", "y"], &["y"])
            .unwrap()
            .is_zero());
    }

    #[test]
    fn conditioning_report_two_uniform_bits() {
        // Frozen by hand: W = both one, Pr = 1/4, distances 1/2 each,
        // probability bound 2^(-1/2), distance-sum bound sqrt(2*2) = 2.
        let b = Alphabet::binary();
        let schema = Schema::named(&[("u1", &b), ("u2", &b)]).unwrap();
        let p = Distribution::uniform(schema);
        let r = conditioning_report(&p, |o| o.get(0) == 1 && o.get(1) == 1).unwrap();
        assert_eq!(r.event_probability, rat(1, 4));
        assert_eq!(r.per_coordinate_distances, vec![rat(1, 2), rat(1, 2)]);
        assert!((r.probability_bound - 0.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(r.distance_sum, Rational::one());
        assert!((r.distance_sum_bound - 2.0).abs() < 1e-12);
        assert!(rational::to_f64(&r.event_probability) <= r.probability_bound);
    }

    #[test]
    fn conditioning_report_majority_of_five_bits() {
        // Frozen by hand: W = at least three ones among five uniform bits.
        // Pr[W] = 1/2 and each coordinate moves to Bernoulli(11/16).
        let b = Alphabet::binary();
        let coords: Vec<(String, Alphabet)> =
            (0..5).map(|i| (format!("u{i}"), b.clone())).collect();
        let p = Distribution::uniform(Schema::new(coords).unwrap());
        let r = conditioning_report(&p, |o| {
            o.indices().iter().filter(|&&v| v == 1).count() >= 3
        })
        .unwrap();
        assert_eq!(r.event_probability, rat(1, 2));
        for d in &r.per_coordinate_distances {
            assert_eq!(*d, rat(3, 16));
        }
        assert!(rational::to_f64(&r.event_probability) <= r.probability_bound);
        assert!(rational::to_f64(&r.distance_sum) <= r.distance_sum_bound);
    }

    #[test]
    fn conditioning_report_rejects_correlated_input() {
        let b = Alphabet::binary();
        let schema = Schema::named(&[("u1", &b), ("u2", &b)]).unwrap();
        let p = Distribution::from_masses(
            schema,
            [
                (Outcome::new(vec![0, 0]), rat(1, 2)),
                (Outcome::new(vec![1, 1]), rat(1, 2)),
            ],
        )
        .unwrap();
        assert!(conditioning_report(&p, |o| o.get(0) == 0).is_err());
    }

    #[test]
    fn block_report_trivial_instance_is_zero() {
        // Constant hub and side, one block, always-true event.
        let b = Alphabet::binary();
        let u = Alphabet::unit();
        let schema = Schema::named(&[("t", &u), ("u1", &b), ("v", &u)]).unwrap();
        let p = Distribution::uniform(schema);
        let r = block_independence_report(&p, &["t"], &["u1"], &["v"], |_| true).unwrap();
        assert!(r.distance_sum.is_zero());
        assert_eq!(r.side_support, 1);
        assert_eq!(r.bound, 0.0);
    }

    #[test]
    fn block_report_two_bits_conditioned_on_both_one() {
        // Frozen by hand: hub and side constant, blocks two uniform bits,
        // W = both one. Each conditioned block is a point mass at distance
        // 1/2 from uniform; bound = sqrt(2) * sqrt(0 + 2) = 2.
        let b = Alphabet::binary();
        let u = Alphabet::unit();
        let schema =
            Schema::named(&[("t", &u), ("u1", &b), ("u2", &b), ("v", &u)]).unwrap();
        let p = Distribution::uniform(schema);
        let r = block_independence_report(&p, &["t"], &["u1", "u2"], &["v"], |o| {
            o.get(1) == 1 && o.get(2) == 1
        })
        .unwrap();
        assert_eq!(r.distance_sum, Rational::one());
        assert!((r.bound - 2.0).abs() < 1e-12);
        assert!(rational::to_f64(&r.distance_sum) <= r.bound);
    }

    #[test]
    fn block_report_rejects_entangled_blocks() {
        let b = Alphabet::binary();
        let u = Alphabet::unit();
        let schema =
            Schema::named(&[("t", &u), ("u1", &b), ("u2", &b), ("v", &u)]).unwrap();
        let p = Distribution::from_masses(
            schema,
            [
                (Outcome::new(vec![0, 0, 0, 0]), rat(1, 2)),
                (Outcome::new(vec![0, 1, 1, 0]), rat(1, 2)),
            ],
        )
        .unwrap();
        assert!(block_independence_report(&p, &["t"], &["u1", "u2"], &["v"], |_| true).is_err());
    }
}
