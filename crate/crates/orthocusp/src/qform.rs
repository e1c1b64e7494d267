//! Rational quadratic lattices: discriminant, signature, Hilbert symbols and
//! Hasse invariants, and the search for isotropic hyperbolic splittings.
//!
//! Conventions: `b` is the symmetric bilinear form given by the Gram matrix
//! and `q(x) = b(x, x)` (no factor ½).

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::linalg::QMat;
use crate::rat::{fmt_q, parse_q, prime_factors, q, valuation, Q};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuadraticLattice {
    gram: QMat,
}

/// A place of ℚ.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Place {
    Infinity,
    Prime(u64),
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Place::Infinity => write!(f, "inf"),
            Place::Prime(p) => write!(f, "{p}"),
        }
    }
}

impl Place {
    pub fn prime(p: u64) -> Result<Place> {
        if crate::rat::is_prime(p) {
            Ok(Place::Prime(p))
        } else {
            Err(Error::InvalidInput(format!("{p} is not prime")))
        }
    }
}

impl QuadraticLattice {
    pub fn new(gram: QMat) -> Result<Self> {
        if !gram.is_square() || gram.rows() == 0 {
            return Err(Error::DimensionMismatch("Gram matrix must be square and nonempty".into()));
        }
        if !gram.is_symmetric() {
            return Err(Error::InvalidInput("Gram matrix is not symmetric".into()));
        }
        Ok(QuadraticLattice { gram })
    }

    pub fn from_i64(rows: &[&[i64]]) -> Self {
        Self::new(QMat::from_i64(rows)).expect("symmetric literal")
    }

    pub fn diagonal(d: &[i64]) -> Self {
        Self::new(QMat::diag(&d.iter().map(|&x| q(x)).collect::<Vec<_>>())).unwrap()
    }

    pub fn gram(&self) -> &QMat {
        &self.gram
    }

    pub fn rank(&self) -> usize {
        self.gram.rows()
    }

    pub fn b(&self, x: &[Q], y: &[Q]) -> Q {
        self.gram.bilinear(x, y)
    }

    pub fn q(&self, x: &[Q]) -> Q {
        self.gram.bilinear(x, x)
    }

    pub fn discriminant(&self) -> Q {
        self.gram.det()
    }

    pub fn is_regular(&self) -> bool {
        !self.discriminant().is_zero()
    }

    pub fn is_integral(&self) -> bool {
        self.gram.is_integral()
    }

    /// The lattice in a new basis: gram ↦ Tᵗ·gram·T.
    pub fn change_basis(&self, t: &QMat) -> Result<Self> {
        Self::new(t.transpose().mul(&self.gram).mul(t))
    }

    /// Symmetric Gaussian elimination.  Returns (diag, T) with Tᵗ·G·T = diag.
    ///
    /// A zero pivot with a nonzero off-diagonal entry is repaired by
    /// v_i ← v_i + c·v_j, with c chosen so the new pivot is 1 when possible.
    pub fn diagonalize(&self) -> Result<(Vec<Q>, QMat)> {
        if !self.is_regular() {
            return Err(Error::DegenerateForm);
        }
        let m = self.rank();
        let mut t = QMat::identity(m);
        let mut g = self.gram.clone();
        for i in 0..m {
            if g[(i, i)].is_zero() {
                if let Some(j) = (i + 1..m).find(|&j| !g[(j, j)].is_zero()) {
                    swap_basis(&mut g, &mut t, i, j);
                } else if let Some(j) = (i + 1..m).find(|&j| !g[(i, j)].is_zero()) {
                    // both diagonals vanish: q(v_i + c v_j) = 2c·b_ij
                    let c = (q(2) * &g[(i, j)]).recip();
                    add_basis(&mut g, &mut t, i, j, &c);
                } else {
                    return Err(Error::DegenerateForm);
                }
            }
            let piv = g[(i, i)].clone();
            for j in i + 1..m {
                if !g[(i, j)].is_zero() {
                    let c = -(&g[(i, j)] / &piv);
                    add_basis(&mut g, &mut t, j, i, &c);
                }
            }
        }
        let diag = (0..m).map(|i| g[(i, i)].clone()).collect();
        Ok((diag, t))
    }

    pub fn signature(&self) -> Result<(usize, usize)> {
        let (d, _) = self.diagonalize()?;
        let r = d.iter().filter(|x| x.is_positive()).count();
        Ok((r, d.len() - r))
    }

    pub fn hasse_invariant(&self, v: Place) -> Result<i8> {
        let (d, _) = self.diagonalize()?;
        let mut h = 1i8;
        for i in 0..d.len() {
            for j in i + 1..d.len() {
                h *= hilbert_symbol(&d[i], &d[j], v);
            }
        }
        Ok(h)
    }

    /// Primes at which the form can have nontrivial local invariants:
    /// 2 and the primes dividing the diagonal entries.
    pub fn bad_primes(&self) -> Result<Vec<u64>> {
        let (d, _) = self.diagonalize()?;
        let mut ps = vec![2u64];
        for x in &d {
            ps.extend(prime_factors(x.numer()));
            ps.extend(prime_factors(x.denom()));
        }
        ps.sort();
        ps.dedup();
        Ok(ps)
    }

    /// Look for a primitive isotropic e1 and an e2 with b(e1, e2) = 1, all
    /// coordinates bounded by `height` in absolute value.
    ///
    /// Candidates are scanned shell by shell in the sup-norm; within a shell
    /// vectors with positive leading coordinate come first in descending
    /// lexicographic order, so results are deterministic.  Among admissible
    /// e2 the smallest |q(e2)| wins.
    pub fn find_isotropic_split(&self, height: u32) -> Option<(Vec<BigInt>, Vec<BigInt>)> {
        let m = self.rank();
        let h = height as i64;
        for r in 1..=h {
            for e1 in shell(m, r) {
                if crate::rat::content_i64(&e1) != 1 {
                    continue;
                }
                let v: Vec<Q> = e1.iter().map(|&x| q(x)).collect();
                if !self.q(&v).is_zero() {
                    continue;
                }
                if let Some(e2) = self.partner(&v, h) {
                    return Some((e1.iter().map(|&x| BigInt::from(x)).collect(), e2));
                }
            }
        }
        None
    }

    /// First primitive isotropic vector in the same scan order, without
    /// asking for an integral partner.
    pub fn find_isotropic(&self, height: u32) -> Option<Vec<BigInt>> {
        let m = self.rank();
        for r in 1..=height as i64 {
            for e in shell(m, r) {
                if crate::rat::content_i64(&e) != 1 {
                    continue;
                }
                let v: Vec<Q> = e.iter().map(|&x| q(x)).collect();
                if self.q(&v).is_zero() {
                    return Some(e.into_iter().map(BigInt::from).collect());
                }
            }
        }
        None
    }

    fn partner(&self, e1: &[Q], h: i64) -> Option<Vec<BigInt>> {
        let m = self.rank();
        let ge1 = self.gram.mul_vec(e1);
        let mut best: Option<(Q, Vec<i64>)> = None;
        for r in 0..=h {
            let cands: Vec<Vec<i64>> = if r == 0 { vec![vec![0; m]] } else { shell_all(m, r) };
            for e2 in cands {
                let v: Vec<Q> = e2.iter().map(|&x| q(x)).collect();
                let pairing = crate::linalg::dot(&ge1, &v);
                if pairing != Q::one() {
                    continue;
                }
                let qa = self.q(&v).abs();
                if best.as_ref().map_or(true, |(b, _)| qa < *b) {
                    best = Some((qa, e2));
                }
            }
            if best.is_some() {
                break;
            }
        }
        best.map(|(_, e2)| e2.into_iter().map(BigInt::from).collect())
    }

    pub fn to_json(&self) -> Value {
        json!({ "gram": self.gram.to_rows().iter().map(|r| r.iter().map(fmt_q).collect::<Vec<_>>()).collect::<Vec<_>>() })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let rows = v
            .get("gram")
            .and_then(|g| g.as_array())
            .ok_or_else(|| Error::Parse("lattice file needs a \"gram\" array".into()))?;
        Self::new(QMat::from_rows(parse_matrix(rows)?)?)
    }
}

pub fn parse_rational_value(x: &Value) -> Result<Q> {
    match x {
        Value::String(s) => parse_q(s),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(q(i))
            } else {
                parse_q(&n.to_string())
            }
        }
        _ => Err(Error::Parse(format!("expected a rational, found {x}"))),
    }
}

pub fn parse_matrix(rows: &[Value]) -> Result<Vec<Vec<Q>>> {
    rows.iter()
        .map(|r| {
            r.as_array()
                .ok_or_else(|| Error::Parse("matrix row must be an array".into()))?
                .iter()
                .map(parse_rational_value)
                .collect()
        })
        .collect()
}

fn swap_basis(g: &mut QMat, t: &mut QMat, i: usize, j: usize) {
    let m = g.rows();
    for k in 0..m {
        let (a, b) = (g[(k, i)].clone(), g[(k, j)].clone());
        g[(k, i)] = b;
        g[(k, j)] = a;
        let (a, b) = (t[(k, i)].clone(), t[(k, j)].clone());
        t[(k, i)] = b;
        t[(k, j)] = a;
    }
    g.swap_rows(i, j);
}

// v_i ← v_i + c·v_j, updating the Gram matrix by congruence
fn add_basis(g: &mut QMat, t: &mut QMat, i: usize, j: usize, c: &Q) {
    let m = g.rows();
    for k in 0..m {
        let v = &t[(k, j)] * c;
        t[(k, i)] += v;
    }
    for k in 0..m {
        let v = &g[(k, j)] * c;
        g[(k, i)] += v;
    }
    for k in 0..m {
        let v = &g[(j, k)] * c;
        g[(i, k)] += v;
    }
}

/// Integer vectors of sup-norm exactly r whose first nonzero entry is
/// positive, in descending lexicographic order.
fn shell(m: usize, r: i64) -> Vec<Vec<i64>> {
    let mut out: Vec<Vec<i64>> = shell_all(m, r)
        .into_iter()
        .filter(|v| v.iter().find(|&&x| x != 0).map_or(false, |&x| x > 0))
        .collect();
    out.sort_by(|a, b| b.cmp(a));
    out
}

fn shell_all(m: usize, r: i64) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut cur = vec![-r; m];
    loop {
        if cur.iter().any(|x| x.abs() == r) {
            out.push(cur.clone());
        }
        let mut k = 0;
        loop {
            if k == m {
                out.sort_by(|a, b| b.cmp(a));
                return out;
            }
            if cur[k] < r {
                cur[k] += 1;
                break;
            }
            cur[k] = -r;
            k += 1;
        }
    }
}

// ---------------------------------------------------------------------------
// Hilbert symbols
// ---------------------------------------------------------------------------

/// The Hilbert symbol (a, b)_v for nonzero rationals.
pub fn hilbert_symbol(a: &Q, b: &Q, v: Place) -> i8 {
    assert!(!a.is_zero() && !b.is_zero(), "Hilbert symbol of zero");
    match v {
        Place::Infinity => {
            if a.is_negative() && b.is_negative() {
                -1
            } else {
                1
            }
        }
        Place::Prime(2) => hilbert_2(a, b),
        Place::Prime(p) => hilbert_odd(a, b, p),
    }
}

fn unit_part(x: &Q, p: u64) -> (i64, BigInt, BigInt) {
    let v = valuation(x, p);
    let pb = BigInt::from(p);
    let mut n = x.numer().clone();
    let mut d = x.denom().clone();
    while (&n % &pb).is_zero() {
        n /= &pb;
    }
    while (&d % &pb).is_zero() {
        d /= &pb;
    }
    (v, n, d)
}

/// Legendre symbol (n/p) for an odd prime p not dividing n.
pub fn legendre(n: &BigInt, p: u64) -> i8 {
    let pb = BigInt::from(p);
    let r = n.mod_floor(&pb);
    assert!(!r.is_zero(), "legendre of a multiple of p");
    let e = r.modpow(&BigInt::from((p - 1) / 2), &pb);
    if e.is_one() {
        1
    } else {
        -1
    }
}

fn hilbert_odd(a: &Q, b: &Q, p: u64) -> i8 {
    let (alpha, un, ud) = unit_part(a, p);
    let (beta, vn, vd) = unit_part(b, p);
    let mut s: i8 = 1;
    if (alpha * beta).rem_euclid(2) == 1 && ((p - 1) / 2) % 2 == 1 {
        s = -s;
    }
    if beta.rem_euclid(2) == 1 {
        s *= legendre(&un, p) * legendre(&ud, p);
    }
    if alpha.rem_euclid(2) == 1 {
        s *= legendre(&vn, p) * legendre(&vd, p);
    }
    s
}

fn hilbert_2(a: &Q, b: &Q) -> i8 {
    let (alpha, un, ud) = unit_part(a, 2);
    let (beta, vn, vd) = unit_part(b, 2);
    // an odd denominator is its own inverse mod 8
    let m8 = |n: &BigInt, d: &BigInt| ((n * d).mod_floor(&BigInt::from(8))).to_i64().unwrap();
    let u = m8(&un, &ud);
    let v = m8(&vn, &vd);
    let eps = |x: i64| ((x - 1) / 2) % 2;
    let omega = |x: i64| ((x * x - 1) / 8) % 2;
    let e = eps(u) * eps(v) + alpha.rem_euclid(2) * omega(v) + beta.rem_euclid(2) * omega(u);
    if e % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Places at which (a, b) can be nontrivial: ∞, 2 and the primes of a, b.
pub fn relevant_places(a: &Q, b: &Q) -> Vec<Place> {
    let mut ps = vec![2u64];
    for x in [a, b] {
        ps.extend(prime_factors(x.numer()));
        ps.extend(prime_factors(x.denom()));
    }
    ps.sort();
    ps.dedup();
    std::iter::once(Place::Infinity).chain(ps.into_iter().map(Place::Prime)).collect()
}

/// Square-class representative: the squarefree integer in the class of x.
pub fn squarefree_part(x: &Q) -> BigInt {
    let n = x.numer() * x.denom();
    let sign = if n.is_negative() { -BigInt::one() } else { BigInt::one() };
    let mut rest = n.abs();
    let mut out = BigInt::one();
    for p in prime_factors(&rest.clone()) {
        let pb = BigInt::from(p);
        let mut e = 0;
        while (&rest % &pb).is_zero() {
            rest /= &pb;
            e += 1;
        }
        if e % 2 == 1 {
            out *= pb;
        }
    }
    sign * out
}
