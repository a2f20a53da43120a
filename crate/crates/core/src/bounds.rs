//! Closed-form decay bounds for repeated game values, the recurrences
//! they are distilled from, and a simplified model recurrence for
//! sanity-checking the closed forms.
//!
//! Everything here is double-precision: these are one-sided analytic
//! bounds with generous constants, not exact quantities. Callers compare
//! them against exact rational values with a small slack (`1e-12` is the
//! convention used by the test suite and the CLI).

use num_traits::{One, Signed};

use crate::rational::{log2, rat_int, to_f64, Rational};
use crate::{Error, Result};

/// Which decay regime a query targets: product strategies with bounded
/// answer alphabets, predicates with an exact fractional product cover,
/// or no-signaling boxes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundKind {
    Local,
    Cover,
    NoSignaling,
}

/// Parameters of one bound evaluation: single-shot value `v`, repetition
/// count `n`, the size exponent `log_s` (base-2 log of the answer-pair
/// count, or of the cover size), and the regime's constant.
#[derive(Clone, Debug)]
pub struct BoundQuery {
    v: Rational,
    n: u64,
    log_s: f64,
    kind: BoundKind,
    constant: f64,
}

impl BoundQuery {
    fn check_v(v: &Rational) -> Result<()> {
        if v.is_negative() || *v > Rational::one() {
            return Err(Error::validation("single-shot value must lie in [0,1]"));
        }
        Ok(())
    }

    /// Query for strategies answering locally, `ab_product_size` =
    /// `|A| * |B|` (or a cover size standing in for it).
    pub fn local(v: Rational, n: u64, ab_product_size: usize) -> Result<BoundQuery> {
        Self::check_v(&v)?;
        if n == 0 {
            return Err(Error::validation("repetition count must be positive"));
        }
        if ab_product_size < 2 {
            return Err(Error::validation(
                "the local bound needs at least two answer pairs",
            ));
        }
        Ok(BoundQuery {
            v,
            n,
            log_s: log2(&rat_int(ab_product_size as i64)),
            kind: BoundKind::Local,
            constant: 15.0,
        })
    }

    /// Query for predicates admitting a size-1 exact product cover.
    pub fn cover(v: Rational, n: u64) -> Result<BoundQuery> {
        Self::check_v(&v)?;
        if n == 0 {
            return Err(Error::validation("repetition count must be positive"));
        }
        Ok(BoundQuery {
            v,
            n,
            log_s: 0.0,
            kind: BoundKind::Cover,
            constant: 15.0,
        })
    }

    /// Query for no-signaling boxes.
    pub fn no_signaling(v: Rational, n: u64) -> Result<BoundQuery> {
        Self::check_v(&v)?;
        if n == 0 {
            return Err(Error::validation("repetition count must be positive"));
        }
        Ok(BoundQuery {
            v,
            n,
            log_s: 0.0,
            kind: BoundKind::NoSignaling,
            constant: 10.0,
        })
    }

    pub fn v(&self) -> &Rational {
        &self.v
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn log_s(&self) -> f64 {
        self.log_s
    }

    pub fn kind(&self) -> BoundKind {
        self.kind
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }
}

/// `(1 - (1-v)^3 / 6000) ^ (n / log_s)` — shared by the local bound and
/// the large-cover bound so the two agree bit for bit.
fn cubic_rate(v: f64, n: u64, log_s: f64) -> f64 {
    let base = 1.0 - (1.0 - v).powi(3) / 6000.0;
    base.powf(n as f64 / log_s)
}

/// Decay bound for local strategies: `(1-(1-v)^3/6000)^(n/log2(|A||B|))`.
///
/// Requires at least two answer pairs (a single-answer game has a
/// degenerate exponent and trivial value anyway).
pub fn bound_local(v: &Rational, n: u64, ab_product_size: usize) -> Result<f64> {
    if ab_product_size < 2 {
        return Err(Error::validation(
            "the local bound needs at least two answer pairs",
        ));
    }
    BoundQuery::check_v(v)?;
    if n == 0 {
        return Err(Error::validation("repetition count must be positive"));
    }
    Ok(cubic_rate(
        to_f64(v),
        n,
        log2(&rat_int(ab_product_size as i64)),
    ))
}

/// Decay bound for predicates with an exact fractional product cover of
/// size `alpha`: the cubic rate in `n / log2(alpha)` for `alpha > 1`, and
/// the stronger `(1-(1-v)^2/6000)^n` when a single product suffices.
pub fn bound_cover(v: &Rational, n: u64, alpha: usize) -> Result<f64> {
    if alpha < 1 {
        return Err(Error::validation("cover size must be positive"));
    }
    BoundQuery::check_v(v)?;
    if n == 0 {
        return Err(Error::validation("repetition count must be positive"));
    }
    if alpha == 1 {
        let base = 1.0 - (1.0 - to_f64(v)).powi(2) / 6000.0;
        Ok(base.powi(n.min(i32::MAX as u64) as i32))
    } else {
        Ok(cubic_rate(to_f64(v), n, log2(&rat_int(alpha as i64))))
    }
}

/// Decay bound for no-signaling boxes: `(1-(1-v)^2/6400)^n`.
pub fn bound_ns(v: &Rational, n: u64) -> Result<f64> {
    BoundQuery::check_v(v)?;
    if n == 0 {
        return Err(Error::validation("repetition count must be positive"));
    }
    let base = 1.0 - (1.0 - to_f64(v)).powi(2) / 6400.0;
    Ok(base.powi(n.min(i32::MAX as u64) as i32))
}

/// The iterates `p_0 = 1, p_{m+1} = p_m * factor(m, p_m)` of a decay
/// recurrence, with the best (smallest) entry singled out. Every `p_m`
/// bounds the probability of winning all coordinates, so the minimum over
/// `m` is itself a valid bound.
#[derive(Clone, Debug)]
pub struct RecurrenceTrace {
    sequence: Vec<f64>,
    m_star: usize,
    bound: f64,
}

impl RecurrenceTrace {
    pub fn sequence(&self) -> &[f64] {
        &self.sequence
    }

    pub fn m_star(&self) -> usize {
        self.m_star
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }
}

/// Iterates the query's recurrence. The step factor is
/// `v + c * sqrt((m * log_s + log2(1/p_m)) / (n - m))` in the local
/// regime and `v + c * sqrt(log2(1/p_m) / (n - m))` otherwise, clamped to
/// 1 (a factor above 1 carries no information, and `p` is a probability
/// bound). The trace has entries `p_0 .. p_{n-1}`.
pub fn recurrence_bound(q: &BoundQuery) -> Result<RecurrenceTrace> {
    if q.n < 2 {
        return Err(Error::validation(
            "the recurrence needs at least two repetitions",
        ));
    }
    let n = q.n as usize;
    let v = to_f64(&q.v);
    let mut sequence = Vec::with_capacity(n);
    sequence.push(1.0f64);
    let mut p = 1.0f64;
    for m in 0..n - 1 {
        let deficit = match q.kind {
            BoundKind::Local => m as f64 * q.log_s + (1.0 / p).log2(),
            BoundKind::Cover | BoundKind::NoSignaling => (1.0 / p).log2(),
        };
        let factor = v + q.constant * (deficit / (n - m) as f64).sqrt();
        p *= factor.min(1.0);
        sequence.push(p);
    }
    let m_star = sequence
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.partial_cmp(b).expect("trace entries are finite"))
        .map(|(m, _)| m)
        .unwrap_or(0);
    let bound = sequence[m_star];
    Ok(RecurrenceTrace {
        sequence,
        m_star,
        bound,
    })
}

/// The simplified model recurrence `p_0 = 1`,
/// `p_{m+1} = p_m * (v + sqrt(m * ell / n))`, evaluated at the step count
/// `m' = ceil(n (1-v)^2 / ell)` where it stops decreasing, together with
/// its closed-form approximation `(1 - (1-v)^3 / 2)^(3n / (4 ell))`.
#[derive(Clone, Debug)]
pub struct SimplifiedRecurrence {
    m_prime: u64,
    log2_product: f64,
    log2_closed_form: f64,
}

impl SimplifiedRecurrence {
    pub fn m_prime(&self) -> u64 {
        self.m_prime
    }

    pub fn product(&self) -> f64 {
        self.log2_product.exp2()
    }

    pub fn closed_form(&self) -> f64 {
        self.log2_closed_form.exp2()
    }

    pub fn log2_product(&self) -> f64 {
        self.log2_product
    }

    pub fn log2_closed_form(&self) -> f64 {
        self.log2_closed_form
    }
}

/// Evaluates the simplified recurrence in log space (the product is tiny
/// for interesting parameters) and returns it alongside the closed form.
pub fn simplified_recurrence(v: &Rational, n: u64, ell: f64) -> Result<SimplifiedRecurrence> {
    BoundQuery::check_v(v)?;
    if n == 0 {
        return Err(Error::validation("repetition count must be positive"));
    }
    if !(ell > 0.0) {
        return Err(Error::validation("block size must be positive"));
    }
    let v = to_f64(v);
    let m_prime = (n as f64 * (1.0 - v).powi(2) / ell).ceil() as u64;
    let mut log2_product = 0.0f64;
    for m in 0..m_prime {
        log2_product += (v + (m as f64 * ell / n as f64).sqrt()).log2();
    }
    let log2_closed_form = (3.0 * n as f64 / (4.0 * ell)) * (1.0 - (1.0 - v).powi(3) / 2.0).log2();
    Ok(SimplifiedRecurrence {
        m_prime,
        log2_product,
        log2_closed_form,
    })
}
