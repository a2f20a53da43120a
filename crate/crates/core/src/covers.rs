//! Exact fractional product covers of boolean predicates, rectangle
//! partitions, the product-channel Markov property, and a constructive
//! factorization of conditionals into one-sided tables.
//!
//! A cover writes a predicate `Q(a,b)` as `sum_i f(a,i) * g(b,i)` with
//! entries in `[0,1]`. Rectangle partitions of the 1-set give 0/1 covers;
//! channels of product form `P(z|a,b) = f(a,z) * g(b,z)` make `A - Z - B`
//! a Markov chain under every product prior, and [`factorize`] recovers
//! such tables exactly whenever they exist.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use crate::games::Game;
use crate::prob::{ConditionalDistribution, Distribution, Outcome, Schema};
use crate::prob::{markov_deficiency, Alphabet};
use crate::rational::Rational;
use crate::{Error, Result};

/// Dense boolean matrix over answer pairs, row-major in `a`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoolMatrix {
    rows: usize,
    cols: usize,
    data: Vec<bool>,
}

impl BoolMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<bool>) -> Result<BoolMatrix> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::validation("matrix shape mismatch"));
        }
        Ok(BoolMatrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> bool) -> BoolMatrix {
        let mut data = Vec::with_capacity(rows * cols);
        for a in 0..rows {
            for b in 0..cols {
                data.push(f(a, b));
            }
        }
        BoolMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, a: usize, b: usize) -> bool {
        self.data[a * self.cols + b]
    }
}

/// The answer predicate of `g` at one question pair, as a matrix over
/// `(a, b)`.
pub fn win_matrix(g: &Game, x: u32, y: u32) -> BoolMatrix {
    BoolMatrix::from_fn(g.a_alphabet().len(), g.b_alphabet().len(), |a, b| {
        g.wins(x, y, a as u32, b as u32)
    })
}

/// Tables `f: A x {0..alpha} -> [0,1]` and `g: B x {0..alpha} -> [0,1]`
/// meant to satisfy `Q(a,b) = sum_i f(a,i) * g(b,i)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FractionalCover {
    alpha: usize,
    f: Vec<Vec<Rational>>,
    g: Vec<Vec<Rational>>,
}

impl FractionalCover {
    pub fn new(alpha: usize, f: Vec<Vec<Rational>>, g: Vec<Vec<Rational>>) -> Result<FractionalCover> {
        if alpha == 0 {
            return Err(Error::validation("cover size must be positive"));
        }
        if f.is_empty() || g.is_empty() {
            return Err(Error::validation("cover tables must be nonempty"));
        }
        for row in f.iter().chain(g.iter()) {
            if row.len() != alpha {
                return Err(Error::validation("cover row length differs from alpha"));
            }
            for v in row {
                if v.is_negative() || *v > Rational::one() {
                    return Err(Error::validation("cover entries must lie in [0,1]"));
                }
            }
        }
        Ok(FractionalCover { alpha, f, g })
    }

    /// The size-1 cover of the all-ones predicate.
    pub fn full(a_len: usize, b_len: usize) -> FractionalCover {
        FractionalCover {
            alpha: 1,
            f: vec![vec![Rational::one()]; a_len],
            g: vec![vec![Rational::one()]; b_len],
        }
    }

    /// The degenerate size-1 cover of the all-zeros predicate.
    pub fn empty(a_len: usize, b_len: usize) -> FractionalCover {
        FractionalCover {
            alpha: 1,
            f: vec![vec![Rational::zero()]; a_len],
            g: vec![vec![Rational::zero()]; b_len],
        }
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    pub fn a_len(&self) -> usize {
        self.f.len()
    }

    pub fn b_len(&self) -> usize {
        self.g.len()
    }

    pub fn f(&self, a: usize, i: usize) -> &Rational {
        &self.f[a][i]
    }

    pub fn g(&self, b: usize, i: usize) -> &Rational {
        &self.g[b][i]
    }
}

/// Exact rational check of `Q(a,b) = sum_i f(a,i) * g(b,i)` on every
/// entry.
pub fn verify_cover(q: &BoolMatrix, c: &FractionalCover) -> Result<bool> {
    if c.a_len() != q.rows() || c.b_len() != q.cols() {
        return Err(Error::schema("cover dimensions do not match the matrix"));
    }
    for a in 0..q.rows() {
        for b in 0..q.cols() {
            let total: Rational = (0..c.alpha).map(|i| c.f(a, i) * c.g(b, i)).sum();
            let want = if q.get(a, b) {
                Rational::one()
            } else {
                Rational::zero()
            };
            if total != want {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// A list of disjoint combinatorial rectangles in `A x B`; their union is
/// the 1-set the derived cover reproduces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RectanglePartition {
    a_len: usize,
    b_len: usize,
    rects: Vec<(Vec<u32>, Vec<u32>)>,
}

impl RectanglePartition {
    pub fn new(
        a_len: usize,
        b_len: usize,
        rects: Vec<(Vec<u32>, Vec<u32>)>,
    ) -> Result<RectanglePartition> {
        if a_len == 0 || b_len == 0 {
            return Err(Error::validation("rectangle partition needs nonempty sides"));
        }
        let mut cleaned = Vec::with_capacity(rects.len());
        for (mut asub, mut bsub) in rects {
            asub.sort_unstable();
            asub.dedup();
            bsub.sort_unstable();
            bsub.dedup();
            if asub.iter().any(|&a| a as usize >= a_len)
                || bsub.iter().any(|&b| b as usize >= b_len)
            {
                return Err(Error::validation("rectangle index out of range"));
            }
            if asub.is_empty() || bsub.is_empty() {
                return Err(Error::validation("rectangles must be nonempty"));
            }
            cleaned.push((asub, bsub));
        }
        Ok(RectanglePartition {
            a_len,
            b_len,
            rects: cleaned,
        })
    }

    pub fn rectangles(&self) -> &[(Vec<u32>, Vec<u32>)] {
        &self.rects
    }

    /// The union of the rectangles as a boolean matrix.
    pub fn union_matrix(&self) -> BoolMatrix {
        BoolMatrix::from_fn(self.a_len, self.b_len, |a, b| {
            self.rects.iter().any(|(asub, bsub)| {
                asub.binary_search(&(a as u32)).is_ok() && bsub.binary_search(&(b as u32)).is_ok()
            })
        })
    }
}

/// 0/1 indicator cover with one index per rectangle; rejects overlapping
/// rectangles. An empty partition yields the degenerate all-zeros cover.
pub fn cover_from_partition(p: &RectanglePartition) -> Result<FractionalCover> {
    for (i, (a1, b1)) in p.rects.iter().enumerate() {
        for (a2, b2) in p.rects.iter().skip(i + 1) {
            let a_hit = a1.iter().any(|a| a2.binary_search(a).is_ok());
            let b_hit = b1.iter().any(|b| b2.binary_search(b).is_ok());
            if a_hit && b_hit {
                return Err(Error::validation("rectangles overlap"));
            }
        }
    }
    if p.rects.is_empty() {
        return Ok(FractionalCover::empty(p.a_len, p.b_len));
    }
    let alpha = p.rects.len();
    let mut f = vec![vec![Rational::zero(); alpha]; p.a_len];
    let mut g = vec![vec![Rational::zero(); alpha]; p.b_len];
    for (i, (asub, bsub)) in p.rects.iter().enumerate() {
        for &a in asub {
            f[a as usize][i] = Rational::one();
        }
        for &b in bsub {
            g[b as usize][i] = Rational::one();
        }
    }
    FractionalCover::new(alpha, f, g)
}

/// Deficiency of the chain `A - Z - B` when `Z` is produced by the
/// channel from independent `A`- and `B`-priors. Exactly zero for every
/// channel of product form `P(z|a,b) = f(a,z) * g(b,z)`.
pub fn markov_under_product(
    pz: &ConditionalDistribution,
    pa: &Distribution,
    pb: &Distribution,
) -> Result<Rational> {
    let given = pz.given_schema();
    if given.arity() != 2 || pa.schema().arity() != 1 || pb.schema().arity() != 1 {
        return Err(Error::schema(
            "expected a channel over (a, b) and single-coordinate priors",
        ));
    }
    let a_name = given.name(0).to_string();
    let b_name = given.name(1).to_string();
    let z_name = pz.output_schema().name(0).to_string();
    let pa = pa.with_schema(given.project(&[0]))?;
    let pb = pb.with_schema(given.project(&[1]))?;
    let joint = pa.product(&pb)?.compose(pz)?;
    markov_deficiency(
        &joint,
        &[a_name.as_str()],
        &[z_name.as_str()],
        &[b_name.as_str()],
    )
}

/// Verifies the exchange identity
/// `P(z|a,b) * P(z|a',b') = P(z|a,b') * P(z|a',b)` on every quadruple; a
/// violation is reported with its witness indices. The identity holds for
/// a channel exactly when each z-slice has product form, and it is what
/// [`factorize`] needs to succeed.
pub fn check_cross_ratios(pz: &ConditionalDistribution) -> Result<()> {
    let table = channel_table(pz)?;
    let (nz, na, nb) = (table.len(), table[0].len(), table[0][0].len());
    for z in 0..nz {
        for a0 in 0..na {
            for a1 in a0 + 1..na {
                for b0 in 0..nb {
                    for b1 in b0 + 1..nb {
                        let lhs = &table[z][a0][b0] * &table[z][a1][b1];
                        let rhs = &table[z][a0][b1] * &table[z][a1][b0];
                        if lhs != rhs {
                            return Err(Error::CrossRatioViolation { z, a0, a1, b0, b1 });
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

fn channel_table(pz: &ConditionalDistribution) -> Result<Vec<Vec<Vec<Rational>>>> {
    let given = pz.given_schema();
    if given.arity() != 2 || pz.output_schema().arity() != 1 {
        return Err(Error::schema(
            "expected a channel from two coordinates to one",
        ));
    }
    let na = given.alphabet(0).len();
    let nb = given.alphabet(1).len();
    let nz = pz.output_schema().alphabet(0).len();
    let mut table = vec![vec![vec![Rational::zero(); nb]; na]; nz];
    for a in 0..na {
        for b in 0..nb {
            let row = pz
                .row(&Outcome::new(vec![a as u32, b as u32]))
                .ok_or_else(|| Error::Internal("channel row missing".into()))?;
            for (o, m) in row.support() {
                table[o.get(0) as usize][a][b] = m.clone();
            }
        }
    }
    Ok(table)
}

/// One-sided tables recovered by [`factorize`]; only the products
/// `f(a,z) * g(b,z)` are determined (rescaling `f` up and `g` down by a
/// common factor per `z` gives another valid pair).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factorization {
    given: Schema,
    output: Schema,
    f: Vec<Vec<Rational>>,
    g: Vec<Vec<Rational>>,
}

impl Factorization {
    pub fn f(&self, a: usize, z: usize) -> &Rational {
        &self.f[a][z]
    }

    pub fn g(&self, b: usize, z: usize) -> &Rational {
        &self.g[b][z]
    }

    pub fn product(&self, a: usize, b: usize, z: usize) -> Rational {
        &self.f[a][z] * &self.g[b][z]
    }

    /// Rebuilds the channel `P(z|a,b) = f(a,z) * g(b,z)`.
    pub fn recompose(&self) -> Result<ConditionalDistribution> {
        let nz = self.output.alphabet(0).len();
        let mut rows = BTreeMap::new();
        for a in 0..self.f.len() {
            for b in 0..self.g.len() {
                let masses = (0..nz).map(|z| {
                    (
                        Outcome::new(vec![z as u32]),
                        &self.f[a][z] * &self.g[b][z],
                    )
                });
                rows.insert(
                    Outcome::new(vec![a as u32, b as u32]),
                    Distribution::from_masses(self.output.clone(), masses)?,
                );
            }
        }
        ConditionalDistribution::from_rows(self.given.clone(), rows)
    }
}

/// Recovers tables with `P(z|a,b) = f(a,z) * g(b,z)` exactly, or reports
/// the exchange-identity violation that rules them out.
///
/// Each `z`-slice runs independently: starting from `f = g = 1`, the pair
/// `(a1, b1)` whose slack quotient `P/(f*g) < 1` is largest (earliest in
/// index order among ties) is tightened by shrinking `f(a1)` to
/// `P(a1,b1)/g(b1)`, or `g(b1)` symmetrically when that would undershoot
/// an entry of row `a1`. Choosing the largest quotient keeps one of the
/// two updates feasible: a breach witness would need a larger quotient,
/// so it must be an already-tight pair, and tight witnesses in both the
/// row and the column contradict the exchange identity. Every step
/// tightens a new pair for good, so a slice finishes within `|A| * |B|`
/// steps.
pub fn factorize(pz: &ConditionalDistribution) -> Result<Factorization> {
    check_cross_ratios(pz)?;
    let table = channel_table(pz)?;
    let (nz, na, nb) = (table.len(), table[0].len(), table[0][0].len());
    let mut f = vec![vec![Rational::zero(); nz]; na];
    let mut g = vec![vec![Rational::zero(); nz]; nb];
    for (z, slice) in table.iter().enumerate() {
        // All-zero slices factor as 0 * 0 and are skipped.
        if slice.iter().all(|row| row.iter().all(Rational::is_zero)) {
            continue;
        }
        let mut fz = vec![Rational::one(); na];
        let mut gz = vec![Rational::one(); nb];
        for _step in 0..=na * nb {
            let mut best: Option<(Rational, usize, usize)> = None;
            for a in 0..na {
                for b in 0..nb {
                    let prod = &fz[a] * &gz[b];
                    if prod > slice[a][b] && !prod.is_zero() {
                        let quotient = &slice[a][b] / prod;
                        if best.as_ref().map_or(true, |(q, _, _)| quotient > *q) {
                            best = Some((quotient, a, b));
                        }
                    }
                }
            }
            let Some((_, a1, b1)) = best else { break };
            let f_new = &slice[a1][b1] / &gz[b1];
            if (0..nb).all(|b| &f_new * &gz[b] >= slice[a1][b]) {
                fz[a1] = f_new;
            } else {
                let g_new = &slice[a1][b1] / &fz[a1];
                if !(0..na).all(|a| &fz[a] * &g_new >= slice[a][b1]) {
                    return Err(Error::Internal(
                        "no feasible tightening despite exchange identity".into(),
                    ));
                }
                gz[b1] = g_new;
            }
        }
        for a in 0..na {
            for b in 0..nb {
                if &fz[a] * &gz[b] != slice[a][b] {
                    return Err(Error::Internal(
                        "factorization left a slack entry".into(),
                    ));
                }
            }
        }
        for (a, v) in fz.into_iter().enumerate() {
            f[a][z] = v;
        }
        for (b, v) in gz.into_iter().enumerate() {
            g[b][z] = v;
        }
    }
    Ok(Factorization {
        given: pz.given_schema().clone(),
        output: pz.output_schema().clone(),
        f,
        g,
    })
}

/// Channel from `(a, b, x, y)` to a summary symbol: on winning tuples it
/// emits a cover index `i` with probability `f(a,i) * g(b,i)` (a
/// distribution because the cover is exact), on losing tuples the pair
/// `(a, b)` verbatim under a disjoint tag, so winning is always inferable
/// from the output.
#[derive(Clone, Debug)]
pub struct ZChannel {
    channel: ConditionalDistribution,
    win_indices: usize,
}

impl ZChannel {
    pub fn channel(&self) -> &ConditionalDistribution {
        &self.channel
    }

    /// Number of leading output symbols reserved for cover indices.
    pub fn win_indices(&self) -> usize {
        self.win_indices
    }

    pub fn is_win_symbol(&self, z: u32) -> bool {
        (z as usize) < self.win_indices
    }
}

pub fn z_channel_from_cover(
    g: &Game,
    covers: &BTreeMap<(u32, u32), FractionalCover>,
) -> Result<ZChannel> {
    let na = g.a_alphabet().len();
    let nb = g.b_alphabet().len();
    let mut max_alpha = 0usize;
    for x in 0..g.x_alphabet().len() as u32 {
        for y in 0..g.y_alphabet().len() as u32 {
            let cover = covers.get(&(x, y)).ok_or_else(|| {
                Error::validation(format!("no cover supplied for question pair ({x},{y})"))
            })?;
            if !verify_cover(&win_matrix(g, x, y), cover)? {
                return Err(Error::validation(format!(
                    "cover fails to reproduce the predicate at ({x},{y})"
                )));
            }
            max_alpha = max_alpha.max(cover.alpha());
        }
    }

    let mut symbols: Vec<String> = (0..max_alpha).map(|i| format!("w{i}")).collect();
    for a in 0..na {
        for b in 0..nb {
            symbols.push(format!("l:{a},{b}"));
        }
    }
    let z_alphabet = Alphabet::new(symbols)?;
    let output = Schema::named(&[("z", &z_alphabet)])?;
    let given = Schema::named(&[
        ("a", g.a_alphabet()),
        ("b", g.b_alphabet()),
        ("x", g.x_alphabet()),
        ("y", g.y_alphabet()),
    ])?;

    let mut rows = BTreeMap::new();
    for a in 0..na as u32 {
        for b in 0..nb as u32 {
            for x in 0..g.x_alphabet().len() as u32 {
                for y in 0..g.y_alphabet().len() as u32 {
                    let row = if g.wins(x, y, a, b) {
                        let cover = &covers[&(x, y)];
                        let masses = (0..cover.alpha()).map(|i| {
                            (
                                Outcome::new(vec![i as u32]),
                                cover.f(a as usize, i) * cover.g(b as usize, i),
                            )
                        });
                        Distribution::from_masses(output.clone(), masses)?
                    } else {
                        let tag = max_alpha + (a as usize) * nb + b as usize;
                        Distribution::point(output.clone(), Outcome::new(vec![tag as u32]))?
                    };
                    rows.insert(Outcome::new(vec![a, b, x, y]), row);
                }
            }
        }
    }
    Ok(ZChannel {
        channel: ConditionalDistribution::from_rows(given, rows)?,
        win_indices: max_alpha,
    })
}
