//! Exact evaluation of the error budget for majority correction.
//!
//! With `N = q^(n+1)`:
//!
//! ```text
//! A(q,n,ε) = 2(ε + (q-1)/(N-1)) · ((N-q)/(N-1))^(-2) - (q-1)²/(N-1)
//! C(q,n)   = 2q²(q+1)²/(N-q)
//! B(q,n,ε) = 2(q-1) · (N-1)/(N-q) · (2ε + 2A + C) + 2A + C
//! ```
//!
//! Correction is guaranteed in dimension `n > 3` when `A + C < 1/2` and
//! `9B + q^(3-n) < 1`. A looser variant of the first condition replaces the
//! denominator `N - q` in C by `N - 1`; both are reported, and only the
//! stricter one gates the guarantee. The guaranteed agreement between `f`
//! and its correction is `1 - 2ε - 2A - C`.
//!
//! Everything here is exact; no floating point enters a predicate.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rational = num_rational::BigRational;

/// Resolution of [`max_eps`].
pub const MAX_EPS_DENOMINATOR: u64 = 1_000_000;

fn int(v: u64) -> BigInt {
    BigInt::from(v)
}

fn frac(n: BigInt, d: BigInt) -> Rational {
    Rational::new(n, d)
}

pub fn rational(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

fn is_prime_power(q: u64) -> bool {
    if q < 2 {
        return false;
    }
    let p = (2..=q).find(|d| q.is_multiple_of(*d)).unwrap();
    let mut r = q;
    while r.is_multiple_of(p) {
        r /= p;
    }
    r == 1
}

fn check_args(q: u64, n: u32, eps: &Rational) -> Result<()> {
    if !is_prime_power(q) {
        return Err(Error::invalid(format!("q = {q} is not a prime power")));
    }
    if n < 1 {
        return Err(Error::invalid("n must be at least 1"));
    }
    if eps.is_negative() || *eps > Rational::one() {
        return Err(Error::invalid(format!("eps = {eps} is outside [0, 1]")));
    }
    Ok(())
}

/// `q^(n+1)`.
fn big_n(q: u64, n: u32) -> BigInt {
    num_traits::pow(int(q), n as usize + 1)
}

/// `2q²(q+1)²/(q^(n+1) - q)`.
fn pencil_term(q: u64, n: u32) -> Rational {
    let qq = int(q);
    let num = 2 * &qq * &qq * (&qq + 1) * (&qq + 1);
    frac(num, big_n(q, n) - qq)
}

fn pencil_term_theorem(q: u64, n: u32) -> Rational {
    let qq = int(q);
    let num = 2 * &qq * &qq * (&qq + 1) * (&qq + 1);
    frac(num, big_n(q, n) - 1)
}

pub fn compute_a(q: u64, n: u32, eps: &Rational) -> Result<Rational> {
    check_args(q, n, eps)?;
    Ok(a_unchecked(q, n, eps))
}

fn a_unchecked(q: u64, n: u32, eps: &Rational) -> Rational {
    let big = big_n(q, n);
    let qm1 = int(q - 1);
    let first = eps + frac(qm1.clone(), &big - 1);
    let ratio = frac(&big - int(q), &big - 1);
    let inv_sq = (&ratio * &ratio).recip();
    Rational::from_integer(int(2)) * first * inv_sq - frac(&qm1 * &qm1, &big - 1)
}

pub fn compute_b(q: u64, n: u32, eps: &Rational) -> Result<Rational> {
    check_args(q, n, eps)?;
    Ok(b_unchecked(q, n, eps, &a_unchecked(q, n, eps)))
}

fn b_unchecked(q: u64, n: u32, eps: &Rational, a: &Rational) -> Rational {
    let big = big_n(q, n);
    let two = Rational::from_integer(int(2));
    let c = pencil_term(q, n);
    let inner = &two * eps + &two * a + &c;
    let lead = Rational::from_integer(int(2 * (q - 1))) * frac(&big - 1, &big - int(q));
    lead * inner + &two * a + c
}

/// Every quantity of the correction guarantee at one `(q, n, ε)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub q: u64,
    pub n: u32,
    #[serde(with = "rational_json")]
    pub eps: Rational,
    #[serde(rename = "A", with = "rational_json")]
    pub a: Rational,
    #[serde(rename = "B", with = "rational_json")]
    pub b: Rational,
    /// `A + 2q²(q+1)²/(q^(n+1) - q) < 1/2`.
    pub hyp1_strict: bool,
    /// `A + 2q²(q+1)²/(q^(n+1) - 1) < 1/2`.
    pub hyp1_theorem: bool,
    /// `9B + q^(3-n) < 1`.
    pub hyp2: bool,
    /// `1 - 2ε - 2A - 2q²(q+1)²/(q^(n+1) - q)`.
    #[serde(with = "rational_json")]
    pub guaranteed_agreement: Rational,
    /// `n > 3`.
    pub dimension_ok: bool,
    /// `dimension_ok && hyp1_strict && hyp2`.
    pub guarantee_applicable: bool,
}

pub fn hypotheses(q: u64, n: u32, eps: &Rational) -> Result<BoundReport> {
    check_args(q, n, eps)?;
    let a = a_unchecked(q, n, eps);
    let b = b_unchecked(q, n, eps, &a);
    let half = rational(1, 2);
    let c = pencil_term(q, n);
    let hyp1_strict = &a + &c < half;
    let hyp1_theorem = &a + pencil_term_theorem(q, n) < half;
    // q^(3-n) may have a negative exponent
    let tail = if n >= 3 {
        frac(int(1), num_traits::pow(int(q), n as usize - 3))
    } else {
        Rational::from_integer(num_traits::pow(int(q), 3 - n as usize))
    };
    let hyp2 = Rational::from_integer(int(9)) * &b + tail < Rational::one();
    let two = Rational::from_integer(int(2));
    let guaranteed_agreement = Rational::one() - &two * eps - &two * &a - c;
    let dimension_ok = n > 3;
    Ok(BoundReport {
        q,
        n,
        eps: eps.clone(),
        a,
        b,
        hyp1_strict,
        hyp1_theorem,
        hyp2,
        guaranteed_agreement,
        dimension_ok,
        guarantee_applicable: dimension_ok && hyp1_strict && hyp2,
    })
}

fn admissible(q: u64, n: u32, eps: &Rational) -> bool {
    let r = hypotheses(q, n, eps).expect("arguments already validated");
    r.hyp1_strict && r.hyp2
}

/// Largest `ε = m / 10^6` at which both strict hypotheses hold, or 0 if none.
///
/// Both A and B increase with ε, so the admissible set is an initial segment
/// and bisection on `m` finds its end.
pub fn max_eps(q: u64, n: u32) -> Result<Rational> {
    check_args(q, n, &Rational::zero())?;
    let at = |m: u64| Rational::new(int(m), int(MAX_EPS_DENOMINATOR));
    if !admissible(q, n, &at(0)) {
        return Ok(Rational::zero());
    }
    if admissible(q, n, &at(MAX_EPS_DENOMINATOR)) {
        return Ok(Rational::one());
    }
    let (mut lo, mut hi) = (0u64, MAX_EPS_DENOMINATOR);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if admissible(q, n, &at(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(at(lo))
}

/// Parses `NUM/DEN` or a bare integer.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let bad = || Error::invalid(format!("cannot parse {s:?} as a rational"));
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (s.trim(), "1"),
    };
    let num: BigInt = num.parse().map_err(|_| bad())?;
    let den: BigInt = den.parse().map_err(|_| bad())?;
    if den.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(num, den))
}

/// Serde adapter writing a rational as `{"num": <int>, "den": <int>}` with
/// arbitrarily large JSON integers.
pub mod rational_json {
    use num_bigint::BigInt;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use serde_json::value::RawValue;

    use super::Rational;

    #[derive(Serialize, Deserialize)]
    struct Repr {
        num: Box<RawValue>,
        den: Box<RawValue>,
    }

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        let raw = |v: &BigInt| RawValue::from_string(v.to_string()).map_err(serde::ser::Error::custom);
        Repr { num: raw(r.numer())?, den: raw(r.denom())? }.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let repr = Repr::deserialize(d)?;
        let parse = |v: &RawValue| v.get().trim().parse::<BigInt>().map_err(D::Error::custom);
        let den = parse(&repr.den)?;
        if den == BigInt::from(0) {
            return Err(D::Error::custom("zero denominator"));
        }
        Ok(Rational::new(parse(&repr.num)?, den))
    }
}
