//! Rational helpers shared by every module: construction, parsing and the
//! canonical string form used in all file formats.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Q = BigRational;

#[inline]
pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

#[inline]
pub fn qr(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

#[inline]
pub fn qi(n: &BigInt) -> Q {
    Q::from_integer(n.clone())
}

pub fn qvec(v: &[i64]) -> Vec<Q> {
    v.iter().map(|&x| q(x)).collect()
}

/// Parse `"p/q"`, `"p"` or a plain decimal like `"-0.25"`.
pub fn parse_q(s: &str) -> Result<Q> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Parse("empty rational".into()));
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| Error::Parse(format!("bad numerator in {s:?}")))?;
        let d: BigInt = d.trim().parse().map_err(|_| Error::Parse(format!("bad denominator in {s:?}")))?;
        if d.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(Q::new(n, d));
    }
    if let Some((ip, fp)) = s.split_once('.') {
        let neg = ip.starts_with('-');
        let ip = ip.trim_start_matches(['-', '+']);
        if !fp.chars().all(|c| c.is_ascii_digit()) || !ip.chars().all(|c| c.is_ascii_digit()) {
            return Err(Error::Parse(format!("bad decimal {s:?}")));
        }
        let digits = format!("{}{}", if ip.is_empty() { "0" } else { ip }, fp);
        let n: BigInt = digits.parse().map_err(|_| Error::Parse(format!("bad decimal {s:?}")))?;
        let d = num_traits::pow(BigInt::from(10), fp.len());
        let v = Q::new(n, d);
        return Ok(if neg { -v } else { v });
    }
    let n: BigInt = s.parse().map_err(|_| Error::Parse(format!("bad rational {s:?}")))?;
    Ok(Q::from_integer(n))
}

/// Canonical text form: reduced `p/q`, or `p` for integers. Never `-0`.
pub fn fmt_q(x: &Q) -> String {
    if x.is_zero() {
        return "0".into();
    }
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn to_f64(x: &Q) -> f64 {
    // numerator and denominator can both be huge; divide in BigInt first
    // when that keeps precision, otherwise fall back to the ratio of floats
    match (x.numer().to_f64(), x.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            let shift = x.numer().bits().max(x.denom().bits()) as i64 - 900;
            let n = x.numer() >> shift.max(0) as usize;
            let d = x.denom() >> shift.max(0) as usize;
            n.to_f64().unwrap_or(f64::NAN) / d.to_f64().unwrap_or(f64::NAN)
        }
    }
}

/// Best rational approximation with denominator at most `max_den`.
pub fn from_f64(x: f64, max_den: i64) -> Q {
    // continued-fraction convergents
    let mut a = x;
    let (mut h0, mut h1) = (BigInt::zero(), BigInt::one());
    let (mut k0, mut k1) = (BigInt::one(), BigInt::zero());
    for _ in 0..64 {
        let ai = a.floor();
        let ai_b = BigInt::from(ai as i64);
        let h2 = &ai_b * &h1 + &h0;
        let k2 = &ai_b * &k1 + &k0;
        if k2 > BigInt::from(max_den) {
            break;
        }
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        let frac = a - ai;
        if frac.abs() < 1e-15 {
            break;
        }
        a = 1.0 / frac;
    }
    if k1.is_zero() {
        return Q::zero();
    }
    Q::new(h1, k1)
}

pub fn floor_q(x: &Q) -> BigInt {
    x.floor().to_integer()
}

/// Clear denominators and divide by the content; zero stays zero.
pub fn primitive_int(v: &[Q]) -> Vec<BigInt> {
    let mut l = BigInt::one();
    for x in v {
        l = l.lcm(x.denom());
    }
    let ints: Vec<BigInt> = v.iter().map(|x| (x * qi(&l)).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
    if g.is_zero() {
        return ints;
    }
    ints.into_iter().map(|x| x / &g).collect()
}

pub fn to_i64_vec(v: &[BigInt]) -> Result<Vec<i64>> {
    v.iter()
        .map(|x| x.to_i64().ok_or_else(|| Error::Overflow(x.to_string())))
        .collect()
}

pub fn gcd_i64(a: i64, b: i64) -> i64 {
    a.gcd(&b)
}

pub fn content_i64(v: &[i64]) -> i64 {
    v.iter().fold(0i64, |g, &x| g.gcd(&x))
}

pub fn abs_q(x: &Q) -> Q {
    x.abs()
}

/// p-adic valuation of a nonzero rational.
pub fn valuation(x: &Q, p: u64) -> i64 {
    assert!(!x.is_zero(), "valuation of zero");
    let p = BigInt::from(p);
    let mut v = 0i64;
    let mut n = x.numer().abs();
    while (&n % &p).is_zero() {
        n /= &p;
        v += 1;
    }
    let mut d = x.denom().abs();
    while (&d % &p).is_zero() {
        d /= &p;
        v -= 1;
    }
    v
}

/// Distinct prime factors of |n| by trial division (desk-scale inputs).
pub fn prime_factors(n: &BigInt) -> Vec<u64> {
    let mut n = n.abs();
    let mut out = Vec::new();
    let mut p = BigInt::from(2u32);
    while &p * &p <= n {
        if (&n % &p).is_zero() {
            out.push(p.to_u64().expect("prime factor fits u64"));
            while (&n % &p).is_zero() {
                n /= &p;
            }
        }
        p += 1u32;
    }
    if n > BigInt::one() {
        out.push(n.to_u64().expect("prime factor fits u64"));
    }
    out
}

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

pub fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

pub fn binomial_q(n: &Q, k: u64) -> Q {
    // generalized binomial n(n-1)...(n-k+1)/k!
    let mut acc = Q::one();
    for j in 0..k {
        acc *= n - q(j as i64);
    }
    acc / qi(&factorial(k))
}
