use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use super::schema::{Alphabet, Outcome, Schema};
use crate::rational::{self, Rational};
use crate::{Error, Result};

/// Sparse exact distribution: positive masses summing to exactly one,
/// zero-mass outcomes omitted.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Distribution {
    schema: Schema,
    mass: BTreeMap<Outcome, Rational>,
}

impl Distribution {
    /// Builds from explicit masses. Rejects negative or duplicate entries
    /// and masses that do not sum to exactly one; drops zeros.
    pub fn from_masses(
        schema: Schema,
        entries: impl IntoIterator<Item = (Outcome, Rational)>,
    ) -> Result<Distribution> {
        let mut mass = BTreeMap::new();
        let mut total = Rational::zero();
        for (o, m) in entries {
            if !schema.contains_outcome(&o) {
                return Err(Error::schema(format!(
                    "outcome {o:?} does not fit the schema"
                )));
            }
            if m.is_negative() {
                return Err(Error::validation(format!(
                    "negative mass {} at {o:?}",
                    rational::format_rational(&m)
                )));
            }
            total += &m;
            if m.is_zero() {
                continue;
            }
            if mass.insert(o.clone(), m).is_some() {
                return Err(Error::validation(format!("duplicate outcome {o:?}")));
            }
        }
        if !total.is_one() {
            let deficit = Rational::one() - &total;
            return Err(Error::validation(format!(
                "masses sum to {}, expected 1 (deficit {})",
                rational::format_rational(&total),
                rational::format_rational(&deficit)
            )));
        }
        Ok(Distribution { schema, mass })
    }

    pub fn point(schema: Schema, o: Outcome) -> Result<Distribution> {
        Distribution::from_masses(schema, [(o, Rational::one())])
    }

    pub fn uniform(schema: Schema) -> Distribution {
        let total = schema.total_outcomes();
        assert!(total > 0 && total <= u32::MAX as u128);
        let m = Rational::new(1.into(), (total as i64).into());
        let mass = schema.iter_outcomes().map(|o| (o, m.clone())).collect();
        Distribution { schema, mass }
    }

    pub fn uniform_over(schema: Schema, outcomes: &[Outcome]) -> Result<Distribution> {
        if outcomes.is_empty() {
            return Err(Error::validation("uniform_over needs outcomes"));
        }
        let m = Rational::new(1.into(), (outcomes.len() as i64).into());
        Distribution::from_masses(schema, outcomes.iter().map(|o| (o.clone(), m.clone())))
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn mass(&self, o: &Outcome) -> Rational {
        self.mass.get(o).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn support(&self) -> impl Iterator<Item = (&Outcome, &Rational)> {
        self.mass.iter()
    }

    pub fn support_len(&self) -> usize {
        self.mass.len()
    }

    /// Half the L1 distance between the mass functions. Requires equal
    /// schemas.
    pub fn statistical_distance(&self, other: &Distribution) -> Result<Rational> {
        if self.schema != other.schema {
            return Err(Error::schema("statistical distance needs equal schemas"));
        }
        let mut sum = Rational::zero();
        for (o, p) in &self.mass {
            sum += (p - other.mass(o)).abs();
        }
        for (o, q) in &other.mass {
            if !self.mass.contains_key(o) {
                sum += q.abs();
            }
        }
        Ok(sum / rational::rat_int(2))
    }

    /// Projection onto the named coordinates, in the order given. Listing
    /// every coordinate therefore reorders the schema.
    pub fn marginal(&self, names: &[&str]) -> Result<Distribution> {
        let positions = self.schema.positions(names)?;
        let schema = self.schema.project(&positions);
        let mut mass: BTreeMap<Outcome, Rational> = BTreeMap::new();
        for (o, m) in &self.mass {
            *mass
                .entry(o.project(&positions))
                .or_insert_with(Rational::zero) += m;
        }
        Ok(Distribution { schema, mass })
    }

    /// Conditions on an event over outcomes. The event must have positive
    /// probability.
    pub fn condition(&self, event: impl Fn(&Outcome) -> bool) -> Result<Distribution> {
        let mut total = Rational::zero();
        let mut kept: Vec<(Outcome, Rational)> = Vec::new();
        for (o, m) in &self.mass {
            if event(o) {
                total += m;
                kept.push((o.clone(), m.clone()));
            }
        }
        if total.is_zero() {
            return Err(Error::ZeroProbabilityEvent);
        }
        let mass = kept
            .into_iter()
            .map(|(o, m)| (o, m / &total))
            .collect();
        Ok(Distribution {
            schema: self.schema.clone(),
            mass,
        })
    }

    /// Joint of `self` with a conditional whose given-coordinates are
    /// matched by name against this schema. The result's coordinates are
    /// `self`'s followed by the conditional's outputs.
    pub fn compose(&self, k: &ConditionalDistribution) -> Result<Distribution> {
        let given_names: Vec<&str> = k.given.names().collect();
        let positions = self.schema.positions(&given_names)?;
        for (i, &p) in positions.iter().enumerate() {
            if self.schema.alphabet(p) != k.given.alphabet(i) {
                return Err(Error::schema(format!(
                    "alphabet mismatch on coordinate `{}`",
                    k.given.name(i)
                )));
            }
        }
        let schema = self.schema.concat(&k.output)?;
        let mut mass = BTreeMap::new();
        for (o, m) in &self.mass {
            let key = o.project(&positions);
            let row = k.rows.get(&key).ok_or_else(|| {
                Error::Internal(format!("conditional row missing for {key:?}"))
            })?;
            for (o2, m2) in &row.mass {
                mass.insert(o.concat(o2), m * m2);
            }
        }
        Ok(Distribution { schema, mass })
    }

    /// Independent product; coordinate names must be disjoint.
    pub fn product(&self, other: &Distribution) -> Result<Distribution> {
        let schema = self.schema.concat(&other.schema)?;
        let mut mass = BTreeMap::new();
        for (o, m) in &self.mass {
            for (o2, m2) in &other.mass {
                mass.insert(o.concat(o2), m * m2);
            }
        }
        Ok(Distribution { schema, mass })
    }

    /// `n`-fold independent power with coordinates regrouped: each
    /// coordinate's alphabet becomes its `n`-fold tuple alphabet, so a
    /// distribution over (X, Y) becomes one over (X^n, Y^n). One-fold
    /// power is the identity.
    pub fn product_power(&self, n: u32) -> Result<Distribution> {
        if n == 0 {
            return Err(Error::validation("product power requires n >= 1"));
        }
        if n == 1 {
            return Ok(self.clone());
        }
        let arity = self.schema.arity();
        let sizes = self.schema.sizes();
        let coords: Vec<(String, Alphabet)> = (0..arity)
            .map(|p| {
                (
                    self.schema.name(p).to_string(),
                    self.schema.alphabet(p).power(n),
                )
            })
            .collect();
        let schema = Schema::new(coords)?;

        let support: Vec<(&Outcome, &Rational)> = self.mass.iter().collect();
        let mut mass = BTreeMap::new();
        let mut stack: Vec<usize> = vec![0; n as usize];
        loop {
            let mut m = Rational::one();
            for &i in &stack {
                m *= support[i].1;
            }
            let mut indices = Vec::with_capacity(arity);
            for p in 0..arity {
                let parts: Vec<u32> = stack.iter().map(|&i| support[i].0.get(p)).collect();
                let tuple_sizes = vec![sizes[p]; n as usize];
                indices.push(super::schema::mixed_radix_index(&parts, &tuple_sizes));
            }
            mass.insert(Outcome::new(indices), m);

            // Odometer over support^n.
            let mut pos = stack.len();
            loop {
                if pos == 0 {
                    return Ok(Distribution { schema, mass });
                }
                pos -= 1;
                stack[pos] += 1;
                if stack[pos] < support.len() {
                    break;
                }
                stack[pos] = 0;
            }
        }
    }

    /// Relative entropy D(P || Q) in bits; `+inf` when the support of `P`
    /// escapes the support of `Q`. Terms with `p = 0` contribute zero.
    pub fn relative_entropy(&self, other: &Distribution) -> Result<f64> {
        if self.schema != other.schema {
            return Err(Error::schema("relative entropy needs equal schemas"));
        }
        let mut sum = 0.0;
        for (o, p) in &self.mass {
            let q = other.mass(o);
            if q.is_zero() {
                return Ok(f64::INFINITY);
            }
            sum += rational::to_f64(p) * rational::log2(&(p / q));
        }
        Ok(sum)
    }

    /// Adds a coordinate computed deterministically from each outcome.
    pub fn extend_with(
        &self,
        name: &str,
        alphabet: Alphabet,
        f: impl Fn(&Outcome) -> u32,
    ) -> Result<Distribution> {
        let added = Schema::new(vec![(name.to_string(), alphabet.clone())])?;
        let schema = self.schema.concat(&added)?;
        let mut mass = BTreeMap::new();
        for (o, m) in &self.mass {
            let v = f(o);
            assert!((v as usize) < alphabet.len(), "extend_with out of range");
            let mut idx = o.indices().to_vec();
            idx.push(v);
            mass.insert(Outcome::new(idx), m.clone());
        }
        Ok(Distribution { schema, mass })
    }

    /// Reinterprets the outcomes under a new schema with identical shape.
    pub fn with_schema(&self, schema: Schema) -> Result<Distribution> {
        if schema.sizes() != self.schema.sizes() {
            return Err(Error::schema("shape mismatch in schema replacement"));
        }
        Ok(Distribution {
            schema,
            mass: self.mass.clone(),
        })
    }
}

/// One exact distribution per outcome of a given-schema, all rows present.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ConditionalDistribution {
    given: Schema,
    output: Schema,
    rows: BTreeMap<Outcome, Distribution>,
}

impl ConditionalDistribution {
    /// Extracts P(output | given) from a joint distribution. Rows whose
    /// conditioning probability is zero are filled with the uniform
    /// distribution over the output space.
    pub fn from_joint(
        joint: &Distribution,
        given_names: &[&str],
        output_names: &[&str],
    ) -> Result<ConditionalDistribution> {
        let output_schema = joint
            .schema()
            .project(&joint.schema().positions(output_names)?);
        let uniform = Distribution::uniform(output_schema);
        Self::from_joint_with_fill(joint, given_names, output_names, |_| uniform.clone())
    }

    /// As [`from_joint`], with a caller-chosen fill for zero-probability
    /// rows. The fill receives the given-outcome and must produce a
    /// distribution over the output schema.
    pub fn from_joint_with_fill(
        joint: &Distribution,
        given_names: &[&str],
        output_names: &[&str],
        fill: impl Fn(&Outcome) -> Distribution,
    ) -> Result<ConditionalDistribution> {
        let given_pos = joint.schema().positions(given_names)?;
        let output_pos = joint.schema().positions(output_names)?;
        for p in &output_pos {
            if given_pos.contains(p) {
                return Err(Error::schema("given and output coordinates overlap"));
            }
        }
        let given = joint.schema().project(&given_pos);
        let output = joint.schema().project(&output_pos);

        let mut weights: BTreeMap<Outcome, Rational> = BTreeMap::new();
        let mut cells: BTreeMap<Outcome, BTreeMap<Outcome, Rational>> = BTreeMap::new();
        for (o, m) in joint.support() {
            let g = o.project(&given_pos);
            *weights.entry(g.clone()).or_insert_with(Rational::zero) += m;
            // Coordinates outside given and output are marginalized away.
            *cells
                .entry(g)
                .or_default()
                .entry(o.project(&output_pos))
                .or_insert_with(Rational::zero) += m;
        }

        let mut rows = BTreeMap::new();
        for g in given.iter_outcomes() {
            let row = match weights.get(&g) {
                Some(w) => {
                    let entries = cells
                        .remove(&g)
                        .unwrap()
                        .into_iter()
                        .map(|(o, m)| (o, m / w));
                    Distribution::from_masses(output.clone(), entries)?
                }
                None => {
                    let d = fill(&g);
                    if d.schema() != &output {
                        return Err(Error::schema("fill distribution has wrong schema"));
                    }
                    d
                }
            };
            rows.insert(g, row);
        }
        Ok(ConditionalDistribution {
            given,
            output,
            rows,
        })
    }

    /// Builds directly from rows; every given-outcome must appear exactly
    /// once and every row must share the output schema.
    pub fn from_rows(
        given: Schema,
        rows: BTreeMap<Outcome, Distribution>,
    ) -> Result<ConditionalDistribution> {
        let mut output = None;
        for (g, row) in &rows {
            if !given.contains_outcome(g) {
                return Err(Error::schema(format!("row key {g:?} outside given schema")));
            }
            match &output {
                None => output = Some(row.schema().clone()),
                Some(s) if s == row.schema() => {}
                Some(_) => return Err(Error::schema("rows disagree on output schema")),
            }
        }
        let output = output.ok_or_else(|| Error::validation("conditional needs rows"))?;
        if rows.len() as u128 != given.total_outcomes() {
            return Err(Error::validation(format!(
                "conditional has {} rows, expected {}",
                rows.len(),
                given.total_outcomes()
            )));
        }
        Ok(ConditionalDistribution {
            given,
            output,
            rows,
        })
    }

    pub fn given_schema(&self) -> &Schema {
        &self.given
    }

    pub fn output_schema(&self) -> &Schema {
        &self.output
    }

    pub fn row(&self, g: &Outcome) -> Option<&Distribution> {
        self.rows.get(g)
    }

    pub fn rows(&self) -> impl Iterator<Item = (&Outcome, &Distribution)> {
        self.rows.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn bern(p: Rational) -> Distribution {
        let schema = Schema::named(&[("s", &Alphabet::binary())]).unwrap();
        Distribution::from_masses(
            schema,
            [
                (Outcome::new(vec![0]), Rational::one() - &p),
                (Outcome::new(vec![1]), p),
            ],
        )
        .unwrap()
    }

    #[test]
    fn masses_must_sum_to_one() {
        let schema = Schema::named(&[("s", &Alphabet::binary())]).unwrap();
        let err = Distribution::from_masses(schema, [(Outcome::new(vec![0]), rat(17, 18))])
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("17/18") && msg.contains("deficit 1/18"), "{msg}");
    }

    #[test]
    fn statistical_distance_of_bernoullis() {
        // Frozen by hand: half of |1/2-1/4| + |1/2-3/4| = 1/4.
        let d = bern(rat(1, 2)).statistical_distance(&bern(rat(1, 4))).unwrap();
        assert_eq!(d, rat(1, 4));
        let z = bern(rat(1, 2)).statistical_distance(&bern(rat(1, 2))).unwrap();
        assert!(z.is_zero());
    }

    #[test]
    fn statistical_distance_disjoint_supports_is_one() {
        let p = bern(Rational::zero());
        let q = bern(Rational::one());
        assert_eq!(p.statistical_distance(&q).unwrap(), Rational::one());
    }

    #[test]
    fn marginal_keeps_requested_order_and_identity() {
        let b = Alphabet::binary();
        let schema = Schema::named(&[("x", &b), ("y", &b)]).unwrap();
        // Mass 1/3 on (0,0),(0,1),(1,0): the asymmetric three-corner law.
        let third = rat(1, 3);
        let p = Distribution::from_masses(
            schema,
            [
                (Outcome::new(vec![0, 0]), third.clone()),
                (Outcome::new(vec![0, 1]), third.clone()),
                (Outcome::new(vec![1, 0]), third.clone()),
            ],
        )
        .unwrap();
        let px = p.marginal(&["x"]).unwrap();
        assert_eq!(px.mass(&Outcome::new(vec![0])), rat(2, 3));
        assert_eq!(px.mass(&Outcome::new(vec![1])), rat(1, 3));
        // Full-name marginal in schema order is the identity.
        assert_eq!(p.marginal(&["x", "y"]).unwrap(), p);
        // Reordering transposes outcomes.
        let q = p.marginal(&["y", "x"]).unwrap();
        assert_eq!(q.mass(&Outcome::new(vec![1, 0])), third);
    }

    #[test]
    fn condition_on_event() {
        let b = Alphabet::binary();
        let schema = Schema::named(&[("x", &b), ("y", &b)]).unwrap();
        let p = Distribution::uniform(schema);
        let c = p.condition(|o| o.get(0) == 0).unwrap();
        assert_eq!(c.mass(&Outcome::new(vec![0, 0])), rat(1, 2));
        assert_eq!(c.mass(&Outcome::new(vec![0, 1])), rat(1, 2));
        assert!(c.mass(&Outcome::new(vec![1, 0])).is_zero());
        // Always-true event is the identity.
        assert_eq!(p.condition(|_| true).unwrap(), p);
        assert_eq!(p.condition(|_| false).unwrap_err(), Error::ZeroProbabilityEvent);
    }

    #[test]
    fn compose_point_conditional_is_copy() {
        let b = Alphabet::binary();
        let schema = Schema::named(&[("u", &b)]).unwrap();
        let p = Distribution::uniform(schema.clone());
        // Copy channel u -> t.
        let joint = p.extend_with("t", b.clone(), |o| o.get(0)).unwrap();
        let k = ConditionalDistribution::from_joint(&joint, &["u"], &["t"]).unwrap();
        let composed = p.compose(&k).unwrap();
        assert_eq!(composed, joint);
    }

    #[test]
    fn product_power_regroups_coordinates() {
        let b = Alphabet::binary();
        let schema = Schema::named(&[("x", &b), ("y", &b)]).unwrap();
        let p = Distribution::from_masses(
            schema,
            [
                (Outcome::new(vec![0, 1]), rat(1, 4)),
                (Outcome::new(vec![1, 0]), rat(3, 4)),
            ],
        )
        .unwrap();
        let p2 = p.product_power(2).unwrap();
        assert_eq!(p2.schema().alphabet(0).len(), 4);
        // Outcome ((1,0),(0,1)) has x-tuple (1,0) -> index 2, y-tuple (0,1) -> 1.
        assert_eq!(p2.mass(&Outcome::new(vec![2, 1])), rat(3, 16));
        assert_eq!(p2.support_len(), 4);
        assert_eq!(p.product_power(1).unwrap(), p);
    }

    #[test]
    fn relative_entropy_frozen_values() {
        let d = bern(rat(1, 4)).relative_entropy(&bern(rat(1, 2))).unwrap();
        // By hand: 1 - log2(3)/2... actually 3/4 log(3/2) + 1/4 log(1/2):
        let expect = 0.75f64 * (1.5f64).log2() + 0.25 * (0.5f64).log2();
        assert!((d - expect).abs() < 1e-12);
        let point = bern(Rational::zero());
        assert_eq!(point.relative_entropy(&bern(rat(1, 2))).unwrap(), 1.0);
        assert!(bern(rat(1, 2))
            .relative_entropy(&point)
            .unwrap()
            .is_infinite());
        assert_eq!(
            bern(rat(1, 3)).relative_entropy(&bern(rat(1, 3))).unwrap(),
            0.0
        );
    }

    #[test]
    fn conditional_rows_cover_zero_probability_inputs() {
        let b = Alphabet::binary();
        let schema = Schema::named(&[("x", &b), ("y", &b)]).unwrap();
        let p = Distribution::point(schema, Outcome::new(vec![0, 1])).unwrap();
        let k = ConditionalDistribution::from_joint(&p, &["x"], &["y"]).unwrap();
        // x = 1 never occurs: uniform fill.
        let row = k.row(&Outcome::new(vec![1])).unwrap();
        assert_eq!(row.mass(&Outcome::new(vec![0])), rat(1, 2));
        let row0 = k.row(&Outcome::new(vec![0])).unwrap();
        assert_eq!(row0.mass(&Outcome::new(vec![1])), Rational::one());
    }
}
