//! Exact rational scalars and their text form.
//!
//! Probabilities are `num_rational::BigRational`, which keeps values in
//! lowest terms with a positive denominator. The canonical text form used
//! by every file format is `"num/den"`, always with an explicit
//! denominator (`"2/3"`, `"1/1"`, `"0/1"`).

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::{Error, Result};

pub type Rational = num_rational::BigRational;

/// Convenience constructor from machine integers. Panics on `den == 0`.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_int(num: i64) -> Rational {
    Rational::from(BigInt::from(num))
}

/// Parses `"num/den"` or a bare integer. The denominator must be nonzero;
/// the sign is normalized onto the numerator.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let (num_s, den_s) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num_s
        .parse()
        .map_err(|_| Error::Parse(format!("bad rational numerator in `{s}`")))?;
    let den: BigInt = den_s
        .parse()
        .map_err(|_| Error::Parse(format!("bad rational denominator in `{s}`")))?;
    if den.is_zero() {
        return Err(Error::Parse(format!("zero denominator in `{s}`")));
    }
    Ok(Rational::new(num, den))
}

pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().expect("rational out of f64 range")
}

/// Base-2 logarithm of a positive rational, via the float quotient.
pub fn log2(r: &Rational) -> f64 {
    assert!(r.is_positive(), "log2 of a non-positive rational");
    to_f64(r).log2()
}
