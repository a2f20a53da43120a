//! Release gate. One test per acceptance criterion; each prints a single
//! PASS line with the quantities it measured. Everything here goes through
//! the public API only, with fixed seeds so a green run is reproducible.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use gamelab::bounds::{bound_cover, bound_local, bound_ns};
use gamelab::covers::factorize;
use gamelab::games::{
    builtin, conditioned_value_report, DeterministicStrategy, Game, WinEventSpec,
};
use gamelab::nosignaling::{
    ns_value_report, pr_box, ns_project, retarget_marginal, DEFAULT_LP_VARIABLE_BUDGET,
};
use gamelab::prob::{
    block_independence_report, conditioning_report, markov_deficiency, mixed_radix_split,
    Alphabet, ConditionalDistribution, Distribution, Outcome, Schema,
};
use gamelab::rational::{rat, rat_int, to_f64};
use gamelab::sampling::{
    correlated_sample_triple, coupling_distribution_exact, embed_plan, embedding_distance_exact,
    pairwise_agreement_exact, play_embedded, RandomStream,
};
use gamelab::{Error, Rational};

fn xorshift(state: &mut u64) -> u64 {
    *state ^= *state << 13;
    *state ^= *state >> 7;
    *state ^= *state << 17;
    *state
}

/// Schema with one coordinate over symbols `s0..s{n-1}`.
fn coord(name: &str, n: usize) -> Schema {
    let alphabet = Alphabet::new((0..n).map(|i| format!("s{i}")).collect()).unwrap();
    Schema::named(&[(name, &alphabet)]).unwrap()
}

/// Full-support distribution with small random rational masses.
fn random_full(schema: &Schema, state: &mut u64) -> Distribution {
    let outcomes: Vec<Outcome> = schema.iter_outcomes().collect();
    let weights: Vec<u64> = outcomes.iter().map(|_| xorshift(state) % 9 + 1).collect();
    let total: u64 = weights.iter().sum();
    Distribution::from_masses(
        schema.clone(),
        outcomes.into_iter().zip(
            weights
                .iter()
                .map(|&w| Rational::new((w as i64).into(), (total as i64).into())),
        ),
    )
    .unwrap()
}

/// Random distribution that may drop outcomes entirely.
fn random_sparse(schema: &Schema, state: &mut u64) -> Distribution {
    let outcomes: Vec<Outcome> = schema.iter_outcomes().collect();
    let weights: Vec<u64> = outcomes.iter().map(|_| xorshift(state) % 6).collect();
    let total: u64 = weights.iter().sum();
    if total == 0 {
        return Distribution::point(schema.clone(), outcomes[0].clone()).unwrap();
    }
    Distribution::from_masses(
        schema.clone(),
        outcomes.into_iter().zip(
            weights
                .iter()
                .map(|&w| Rational::new((w as i64).into(), (total as i64).into())),
        ),
    )
    .unwrap()
}

fn random_conditional(
    given: &Schema,
    output: &Schema,
    state: &mut u64,
) -> ConditionalDistribution {
    let rows = given
        .iter_outcomes()
        .map(|o| (o, random_full(output, state)))
        .collect::<BTreeMap<_, _>>();
    ConditionalDistribution::from_rows(given.clone(), rows).unwrap()
}

/// Moves a random fraction of one outcome's mass onto another, one or two
/// times, staying a valid distribution on the same schema.
fn perturbed(base: &Distribution, state: &mut u64) -> Distribution {
    let outcomes: Vec<Outcome> = base.schema().iter_outcomes().collect();
    let mut masses: BTreeMap<Outcome, Rational> = outcomes
        .iter()
        .map(|o| (o.clone(), base.mass(o)))
        .collect();
    for _ in 0..(xorshift(state) % 2 + 1) {
        let i = (xorshift(state) % outcomes.len() as u64) as usize;
        let j = (xorshift(state) % outcomes.len() as u64) as usize;
        if i == j {
            continue;
        }
        let delta = &masses[&outcomes[i]] * rat((xorshift(state) % 4) as i64, 8);
        *masses.get_mut(&outcomes[i]).unwrap() -= &delta;
        *masses.get_mut(&outcomes[j]).unwrap() += &delta;
    }
    Distribution::from_masses(base.schema().clone(), masses).unwrap()
}

/// The two-fold strategy that answers the other coordinate's question.
fn cross_strategy(g2: &Game) -> DeterministicStrategy {
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
fn exact_values_of_the_masked_or_game_and_its_square() {
    let g = builtin("fortnow").unwrap();
    let (v, _) = g.classical_value().unwrap();
    assert_eq!(v, rat(2, 3));

    let g2 = g.repeat(2).unwrap();
    let (v2, _) = g2.classical_value().unwrap();
    assert_eq!(v2, rat(2, 3));

    let ns = ns_value_report(&g, DEFAULT_LP_VARIABLE_BUDGET).unwrap();
    assert_eq!(ns.value, rat(2, 3));
    let ns2 = ns_value_report(&g2, DEFAULT_LP_VARIABLE_BUDGET).unwrap();
    assert_eq!(ns2.value, rat(2, 3));

    println!("PASS v(G)=2/3 v(G^2)=2/3 v_ns(G)=2/3 v_ns(G^2)=2/3, all exact");
}

#[test]
fn chsh_classical_and_no_signaling_values() {
    let g = builtin("chsh").unwrap();
    let (v, _) = g.classical_value().unwrap();
    assert_eq!(v, rat(3, 4));

    let ns = ns_value_report(&g, DEFAULT_LP_VARIABLE_BUDGET).unwrap();
    assert_eq!(ns.value, Rational::one());
    // The only box winning with certainty: a xor b = x and y, uniform
    // marginals everywhere.
    assert_eq!(ns.witness, pr_box());

    println!("PASS chsh v=3/4 exact, v_ns=1 with the parity box as witness");
}

#[test]
fn correlated_sampling_exact_law_and_monte_carlo() {
    let mut state = 0x5eed_0003_u64;
    let trials = 1_000_000u64;
    let sigma = (0.25f64 / trials as f64).sqrt();
    let mut worst_slack = f64::INFINITY;

    for case in 0..50u64 {
        let n = (xorshift(&mut state) % 5 + 2) as usize;
        let schema = coord("s", n);
        let pooled = random_full(&schema, &mut state);
        let p = perturbed(&pooled, &mut state);
        let q = perturbed(&pooled, &mut state);

        // Exact same-round agreement has the closed form (1-d)/(1+d).
        let d = p.statistical_distance(&q).unwrap();
        let agree = pairwise_agreement_exact(&p, &q).unwrap();
        assert_eq!(
            agree,
            (Rational::one() - &d) / (Rational::one() + &d),
            "case {case}"
        );

        let coupling = coupling_distribution_exact(&p, &q).unwrap();
        assert_eq!(coupling.left_marginal(), p, "case {case}");
        assert_eq!(coupling.right_marginal(), q, "case {case}");
        assert!(coupling.diagonal_mass() >= agree, "case {case}");

        // One triple-sampled Monte Carlo run answers both remaining
        // questions: the three-way agreement rate against its 2e1+2e2
        // floor, and the pair's empirical cells against the exact law.
        let eps1 = to_f64(&p.statistical_distance(&pooled).unwrap());
        let eps2 = to_f64(&q.statistical_distance(&pooled).unwrap());
        let mut master = RandomStream::from_seed(2600 + case);
        let mut all_equal = 0u64;
        let mut cells: BTreeMap<(Outcome, Outcome), u64> = BTreeMap::new();
        for t in 0..trials {
            let mut stream = master.derive_indexed("trial", t);
            let draw = correlated_sample_triple(&p, &q, &pooled, &mut stream).unwrap();
            if draw.alice == draw.bob && draw.bob == draw.pooled {
                all_equal += 1;
            }
            *cells.entry((draw.alice, draw.bob)).or_insert(0) += 1;
        }

        let rate = all_equal as f64 / trials as f64;
        let floor = 1.0 - 2.0 * eps1 - 2.0 * eps2 - 4.0 * sigma;
        assert!(rate >= floor, "case {case}: rate {rate} under floor {floor}");
        worst_slack = worst_slack.min(rate - floor);

        for oa in schema.iter_outcomes() {
            for ob in schema.iter_outcomes() {
                let exact = to_f64(&coupling.mass(&oa, &ob));
                let seen = cells.get(&(oa.clone(), ob.clone())).copied().unwrap_or(0) as f64
                    / trials as f64;
                let cell_sigma = (exact * (1.0 - exact) / trials as f64).sqrt();
                assert!(
                    (seen - exact).abs() <= 4.0 * cell_sigma.max(1e-9),
                    "case {case}, cell ({oa:?},{ob:?}): exact {exact}, observed {seen}"
                );
            }
        }
    }

    println!(
        "PASS 50 sampling pairs: closed form exact, 5e7 total draws within 4 sigma \
         (tightest three-way margin {worst_slack:.4})"
    );
}

#[test]
fn embedding_floor_and_conditioned_value() {
    let g = builtin("fortnow").unwrap();
    let g2 = g.repeat(2).unwrap();
    let s = cross_strategy(&g2);
    let cond = WinEventSpec::new(vec![2]);

    let wins = g2.conditional_win_probabilities(&s, &cond).unwrap();
    assert_eq!(wins.conditional[&1], Rational::one());

    let plan = embed_plan(&g, 2, &s, &cond, 1).unwrap();
    assert_eq!(plan.target_conditional_win(), &wins.conditional[&1]);
    let distance = embedding_distance_exact(&plan).unwrap();
    let play = play_embedded(&plan, 10_000, 11).unwrap();
    let floor = wins.conditional[&1].clone() - &distance;
    assert!(
        play.exact_win >= floor,
        "exact win {} under floor {}",
        play.exact_win,
        floor
    );

    let report = conditioned_value_report(&g, 2, &s, &cond).unwrap();
    assert!(report.holds);

    println!(
        "PASS embedding: exact win {} >= 1 - {} = {}, conditioned-value bound holds \
         (min conditional {} vs bound {:.3})",
        play.exact_win, distance, floor, report.min_conditional, report.bound
    );
}

/// Deterministic pseudo-random event over outcomes: keeps roughly
/// three-quarters of them, decided by a salted hash of the indices.
fn salted_event(salt: u64) -> impl Fn(&Outcome) -> bool {
    move |o: &Outcome| {
        let mut h = salt | 1;
        for &i in o.indices() {
            h = (h ^ i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
            h ^= h >> 29;
        }
        h % 4 != 0
    }
}

#[test]
fn inequality_suites_hold_on_random_instances() {
    let mut state = 0x5eed_0005_u64;

    // Conditioning a product: the event probability is bounded by
    // 2^(-sum of squared marginal shifts), and the shifts in total by
    // sqrt(k log2(1/Pr)).
    for case in 0..200 {
        let k = (xorshift(&mut state) % 4 + 2) as usize;
        let mut p = random_full(&coord("c0", (xorshift(&mut state) % 3 + 2) as usize), &mut state);
        for c in 1..k {
            let m = random_full(
                &coord(&format!("c{c}"), (xorshift(&mut state) % 3 + 2) as usize),
                &mut state,
            );
            p = p.product(&m).unwrap();
        }
        let report = loop {
            match conditioning_report(&p, salted_event(xorshift(&mut state))) {
                Ok(r) => break r,
                Err(Error::ZeroProbabilityEvent) => continue,
                Err(e) => panic!("case {case}: {e}"),
            }
        };
        assert!(
            to_f64(&report.event_probability) <= report.probability_bound + 1e-12,
            "case {case}"
        );
        assert!(
            to_f64(&report.distance_sum) <= report.distance_sum_bound + 1e-12,
            "case {case}"
        );
    }

    // Blocks independent given a hub: conditioning moves each block's
    // joint with (hub, side) by at most sqrt(k) sqrt(log2|V| + log2(1/Pr))
    // in total.
    for case in 0..100 {
        let hub = coord("t", (xorshift(&mut state) % 2 + 2) as usize);
        let k = (xorshift(&mut state) % 3 + 1) as usize;
        let mut joint = random_full(&hub, &mut state);
        let mut block_names = Vec::new();
        for i in 0..k {
            let name = format!("u{i}");
            let out = coord(&name, (xorshift(&mut state) % 2 + 2) as usize);
            joint = joint
                .compose(&random_conditional(&hub, &out, &mut state))
                .unwrap();
            block_names.push(name);
        }
        let side = coord("v", (xorshift(&mut state) % 2 + 2) as usize);
        joint = joint
            .compose(&random_conditional(&hub, &side, &mut state))
            .unwrap();
        let blocks: Vec<&str> = block_names.iter().map(String::as_str).collect();
        let report = loop {
            match block_independence_report(
                &joint,
                &["t"],
                &blocks,
                &["v"],
                salted_event(xorshift(&mut state)),
            ) {
                Ok(r) => break r,
                Err(Error::ZeroProbabilityEvent) => continue,
                Err(e) => panic!("case {case}: {e}"),
            }
        };
        assert!(
            to_f64(&report.distance_sum) <= report.bound + 1e-12,
            "case {case}: {} > {}",
            report.distance_sum,
            report.bound
        );
    }

    // Entropy against distance, and entropy across a product: relative
    // entropy dominates the squared statistical distance, and coordinate
    // entropies sum to at most the joint's.
    for case in 0..200 {
        let s1 = coord("u", (xorshift(&mut state) % 3 + 2) as usize);
        let s2 = coord("w", (xorshift(&mut state) % 3 + 2) as usize);
        let q1 = random_full(&s1, &mut state);
        let q2 = random_full(&s2, &mut state);
        let q = q1.product(&q2).unwrap();
        let p = random_sparse(q.schema(), &mut state);

        let kl = p.relative_entropy(&q).unwrap();
        let d = to_f64(&p.statistical_distance(&q).unwrap());
        assert!(kl >= d * d - 1e-9, "case {case}: {kl} < {}", d * d);

        let sum = p.marginal(&["u"]).unwrap().relative_entropy(&q1).unwrap()
            + p.marginal(&["w"]).unwrap().relative_entropy(&q2).unwrap();
        assert!(sum <= kl + 1e-9, "case {case}: {sum} > {kl}");
    }

    // Two laws giving the same set probability exactly 1/2: conditioning
    // on the set at most doubles their distance, exactly.
    for case in 0..100 {
        let n = (xorshift(&mut state) % 5 + 2) as usize;
        let cut = (xorshift(&mut state) % (n as u64 - 1) + 1) as u32;
        let schema = coord("z", n);
        let half_on_the_set = |state: &mut u64| {
            let masses: Vec<(Outcome, Rational)> = {
                let win: Vec<u64> = (0..cut).map(|_| xorshift(state) % 8 + 1).collect();
                let lose: Vec<u64> = (cut..n as u32).map(|_| xorshift(state) % 8 + 1).collect();
                let (tw, tl): (u64, u64) = (win.iter().sum(), lose.iter().sum());
                (0..n as u32)
                    .map(|i| {
                        let m = if i < cut {
                            Rational::new((win[i as usize] as i64).into(), (2 * tw as i64).into())
                        } else {
                            Rational::new(
                                (lose[(i - cut) as usize] as i64).into(),
                                (2 * tl as i64).into(),
                            )
                        };
                        (Outcome::new(vec![i]), m)
                    })
                    .collect()
            };
            Distribution::from_masses(schema.clone(), masses).unwrap()
        };
        let z0 = half_on_the_set(&mut state);
        let z1 = half_on_the_set(&mut state);
        let c0 = z0.condition(|o| o.get(0) < cut).unwrap();
        let c1 = z1.condition(|o| o.get(0) < cut).unwrap();
        let lhs = c0.statistical_distance(&c1).unwrap();
        let rhs = rat_int(2) * z0.statistical_distance(&z1).unwrap();
        assert!(lhs <= rhs, "case {case}: {lhs} > {rhs}");
    }

    // Markov chains stay Markov after conditioning on the middle
    // coordinate alone, with deficiency exactly zero both times.
    for case in 0..100 {
        let hub = coord("u", (xorshift(&mut state) % 2 + 2) as usize);
        let left = coord("t", (xorshift(&mut state) % 2 + 2) as usize);
        let right = coord("v", (xorshift(&mut state) % 2 + 2) as usize);
        let joint = random_full(&hub, &mut state)
            .compose(&random_conditional(&hub, &left, &mut state))
            .unwrap()
            .compose(&random_conditional(&hub, &right, &mut state))
            .unwrap();
        assert!(
            markov_deficiency(&joint, &["t"], &["u"], &["v"]).unwrap().is_zero(),
            "case {case}"
        );
        let u_pos = joint.schema().position("u").unwrap();
        let keep = xorshift(&mut state) % hub.alphabet(0).len() as u64;
        let conditioned = joint.condition(|o| o.get(u_pos) as u64 != keep).unwrap();
        assert!(
            markov_deficiency(&conditioned, &["t"], &["u"], &["v"])
                .unwrap()
                .is_zero(),
            "case {case}"
        );
    }

    println!(
        "PASS inequalities: 200 conditioning reports, 100 block reports, \
         200 entropy pairs, 100 half-event splits, 100 markov conditionings"
    );
}

/// Channel (a,b) -> z whose every slice is a product by construction.
fn planted_product_channel(
    na: usize,
    nb: usize,
    nza: usize,
    nzb: usize,
    state: &mut u64,
) -> ConditionalDistribution {
    let given_a = Alphabet::new((0..na).map(|i| format!("a{i}")).collect()).unwrap();
    let given_b = Alphabet::new((0..nb).map(|i| format!("b{i}")).collect()).unwrap();
    let z = Alphabet::new((0..nza * nzb).map(|i| format!("z{i}")).collect()).unwrap();
    let given = Schema::named(&[("a", &given_a), ("b", &given_b)]).unwrap();
    let output = Schema::named(&[("z", &z)]).unwrap();
    let side = |n: usize, k: usize, state: &mut u64| -> Vec<Vec<Rational>> {
        (0..n)
            .map(|_| {
                let w: Vec<u64> = (0..k).map(|_| xorshift(state) % 6 + 1).collect();
                let t: u64 = w.iter().sum();
                w.iter()
                    .map(|&v| Rational::new((v as i64).into(), (t as i64).into()))
                    .collect()
            })
            .collect()
    };
    let mu = side(na, nza, state);
    let nu = side(nb, nzb, state);
    let mut rows = BTreeMap::new();
    for ai in 0..na {
        for bi in 0..nb {
            let masses = (0..nza).flat_map(|za| {
                let m = mu[ai][za].clone();
                let nu_row = &nu[bi];
                (0..nzb)
                    .map(move |zb| {
                        (Outcome::new(vec![(za * nzb + zb) as u32]), &m * &nu_row[zb])
                    })
                    .collect::<Vec<_>>()
            });
            rows.insert(
                Outcome::new(vec![ai as u32, bi as u32]),
                Distribution::from_masses(output.clone(), masses).unwrap(),
            );
        }
    }
    ConditionalDistribution::from_rows(given, rows).unwrap()
}

#[test]
fn factorization_of_planted_and_perturbed_channels() {
    let mut state = 0x5eed_0006_u64;

    for case in 0..100 {
        let na = (xorshift(&mut state) % 4 + 2) as usize;
        let nb = (xorshift(&mut state) % 4 + 2) as usize;
        // z alphabets up to 2*2; single-sided shapes exercise the trivial
        // factor directions.
        let (nza, nzb) = match xorshift(&mut state) % 3 {
            0 => (2, 2),
            1 => (4, 1),
            _ => (1, 3),
        };
        let pz = planted_product_channel(na, nb, nza, nzb, &mut state);
        let fact = factorize(&pz).unwrap_or_else(|e| panic!("case {case}: {e}"));
        assert_eq!(fact.recompose().unwrap(), pz, "case {case}");
    }

    for case in 0..20 {
        let na = (xorshift(&mut state) % 3 + 3) as usize;
        let nb = (xorshift(&mut state) % 3 + 3) as usize;
        let pz = planted_product_channel(na, nb, 2, 2, &mut state);
        // Move mass between two z-values at a single (a,b) cell.
        let shift = rat(1, 64);
        let mut rows = BTreeMap::new();
        for (o, row) in pz.rows() {
            let row = if o == &Outcome::new(vec![0, 0]) {
                let masses: Vec<(Outcome, Rational)> = row
                    .support()
                    .map(|(zo, m)| {
                        let m = match zo.get(0) {
                            0 => m - &shift,
                            1 => m + &shift,
                            _ => m.clone(),
                        };
                        (zo.clone(), m)
                    })
                    .collect();
                Distribution::from_masses(pz.output_schema().clone(), masses).unwrap()
            } else {
                row.clone()
            };
            rows.insert(o.clone(), row);
        }
        let noisy = ConditionalDistribution::from_rows(pz.given_schema().clone(), rows).unwrap();
        match factorize(&noisy) {
            Err(Error::CrossRatioViolation { z, a0, a1, b0, b1 }) => {
                let mass = |ai: usize, bi: usize| {
                    noisy
                        .row(&Outcome::new(vec![ai as u32, bi as u32]))
                        .unwrap()
                        .mass(&Outcome::new(vec![z as u32]))
                };
                let lhs = mass(a0, b0) * mass(a1, b1);
                let rhs = mass(a0, b1) * mass(a1, b0);
                assert_ne!(lhs, rhs, "case {case}: witness does not violate the identity");
            }
            other => panic!("case {case}: expected a violation witness, got {other:?}"),
        }
    }

    println!("PASS factorization: 100 planted channels recompose exactly, 20 perturbations rejected with verified witnesses");
}

#[test]
fn marginal_retargeting_and_no_signaling_projection() {
    let mut state = 0x5eed_0007_u64;

    // Retargeting one marginal moves total mass by at most the marginal
    // gap, hits the target exactly, and never touches the other side.
    for case in 0..100 {
        let ns_ = (xorshift(&mut state) % 4 + 2) as usize;
        let nt = (xorshift(&mut state) % 4 + 2) as usize;
        let s = coord("s", ns_);
        let t = coord("t", nt);
        let joint = random_full(&s.concat(&t).unwrap(), &mut state);
        let target = random_full(&s, &mut state);

        let out = retarget_marginal(&joint, &target).unwrap();
        assert_eq!(out.marginal(&["s"]).unwrap(), target, "case {case}");
        assert_eq!(
            out.marginal(&["t"]).unwrap(),
            joint.marginal(&["t"]).unwrap(),
            "case {case}"
        );
        let moved = out.statistical_distance(&joint).unwrap();
        let gap = target
            .statistical_distance(&joint.marginal(&["s"]).unwrap())
            .unwrap();
        assert!(moved <= gap, "case {case}: moved {moved} > gap {gap}");
    }

    // Projection outputs exactly no-signaling rows within 3e1+2e2 of the
    // input; an already no-signaling joint projects to itself.
    for case in 0..100 {
        let nx = (xorshift(&mut state) % 2 + 2) as usize;
        let ny = (xorshift(&mut state) % 2 + 2) as usize;
        let nst = (xorshift(&mut state) % 2 + 2) as usize;
        let x = coord("x", nx);
        let y = coord("y", ny);
        let st = coord("s", nst).concat(&coord("t", nst)).unwrap();
        let inputs_schema = x.concat(&y).unwrap();
        let schema = inputs_schema.concat(&st).unwrap();

        let exactly_ns = case % 2 == 0;
        let (joint, inputs) = if exactly_ns {
            let inputs = random_full(&inputs_schema, &mut state);
            let ps: Vec<Distribution> = (0..nx)
                .map(|_| random_full(&coord("s", nst), &mut state))
                .collect();
            let pt: Vec<Distribution> = (0..ny)
                .map(|_| random_full(&coord("t", nst), &mut state))
                .collect();
            let rows = inputs_schema
                .iter_outcomes()
                .map(|o| {
                    let row = ps[o.get(0) as usize]
                        .product(&pt[o.get(1) as usize])
                        .unwrap();
                    (o, row)
                })
                .collect::<BTreeMap<_, _>>();
            let k = ConditionalDistribution::from_rows(inputs_schema.clone(), rows).unwrap();
            (inputs.compose(&k).unwrap(), inputs)
        } else {
            let joint = random_full(&schema, &mut state);
            let inputs = joint.marginal(&["x", "y"]).unwrap();
            (joint, inputs)
        };

        let proj = ns_project(&joint, &inputs).unwrap();
        assert!(
            proj.composed_distance <= proj.bound,
            "case {case}: {} > {}",
            proj.composed_distance,
            proj.bound
        );
        if exactly_ns {
            assert!(proj.composed_distance.is_zero(), "case {case}");
            assert!(proj.eps_alice.is_zero() && proj.eps_bob.is_zero(), "case {case}");
        }

        // Row marginals must depend on one question only, exactly.
        let row = |xi: u32, yi: u32| proj.conditional.row(&Outcome::new(vec![xi, yi])).unwrap();
        for xi in 0..nx as u32 {
            let s_ref = row(xi, 0).marginal(&["s"]).unwrap();
            for yi in 1..ny as u32 {
                assert_eq!(row(xi, yi).marginal(&["s"]).unwrap(), s_ref, "case {case}");
            }
        }
        for yi in 0..ny as u32 {
            let t_ref = row(0, yi).marginal(&["t"]).unwrap();
            for xi in 1..nx as u32 {
                assert_eq!(row(xi, yi).marginal(&["t"]).unwrap(), t_ref, "case {case}");
            }
        }
    }

    println!(
        "PASS projections: 100 retargetings exact, 100 projections no-signaling \
         within their 3e1+2e2 budget (50 lossless on exact inputs)"
    );
}

/// Random binary game: any query over the four question pairs, any
/// predicate over the sixteen cells.
fn random_binary_game(state: &mut u64) -> Game {
    let b = Alphabet::binary();
    let query_schema = Schema::named(&[("x", &b), ("y", &b)]).unwrap();
    let query = random_sparse(&query_schema, state);
    let wins: Vec<bool> = (0..16).map(|_| xorshift(state) % 2 == 0).collect();
    Game::new(b.clone(), b.clone(), b.clone(), b, query, wins).unwrap()
}

#[test]
fn two_fold_values_stay_under_the_decay_bounds() {
    let mut state = 0x5eed_0008_u64;
    let mut games = vec![builtin("fortnow").unwrap(), builtin("chsh").unwrap()];
    for _ in 0..50 {
        games.push(random_binary_game(&mut state));
    }

    for (i, g) in games.iter().enumerate() {
        let (v, _) = g.classical_value().unwrap();
        let g2 = g.repeat(2).unwrap();
        let (v2, _) = g2.classical_value().unwrap();
        let local = bound_local(&v, 2, 4).unwrap();
        assert!(
            to_f64(&v2) <= local + 1e-12,
            "game {i}: v2 {v2} above local bound {local}"
        );

        let ns = ns_value_report(g, DEFAULT_LP_VARIABLE_BUDGET).unwrap().value;
        let ns2 = ns_value_report(&g2, DEFAULT_LP_VARIABLE_BUDGET)
            .unwrap()
            .value;
        let nsb = bound_ns(&ns, 2).unwrap();
        assert!(
            to_f64(&ns2) <= nsb + 1e-12,
            "game {i}: ns2 {ns2} above bound {nsb}"
        );
    }

    // A cover of size |A||B| is no information at all: its bound must be
    // the local bound, bit for bit.
    for num in 0..=20 {
        let v = rat(num, 20);
        for n in [1u64, 2, 5, 10, 100] {
            for size in [2usize, 4, 9, 36] {
                assert_eq!(
                    bound_cover(&v, n, size).unwrap().to_bits(),
                    bound_local(&v, n, size).unwrap().to_bits(),
                    "v={v} n={n} size={size}"
                );
            }
        }
    }

    // The induction step's scalar inequality on a dense grid.
    for i in 0..=10_000 {
        let v = i as f64 / 10_000.0;
        let lhs = (1.0 - (1.0 - v) / 2.0).powf((1.0 - v).powi(2) / 3000.0);
        let rhs = 1.0 - (1.0 - v).powi(3) / 6000.0;
        assert!(lhs <= rhs + 1e-15, "v={v}: {lhs} > {rhs}");
    }

    println!(
        "PASS bounds: 52 games with v(G^2) and v_ns(G^2) under their decay bounds, \
         full-size covers match the local bound bit for bit, grid inequality at 10001 points"
    );
}
