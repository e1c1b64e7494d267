//! Formal characteristic classes.
//!
//! Classes live in a truncated graded polynomial algebra over ℚ whose
//! generators carry a degree.  Chern characters and Todd classes are built
//! from Chern classes through power sums, so every identity verified here is
//! an identity of symmetric functions (the splitting principle, formally).
//! Intersection numbers are never invented: a [`DegreeFunctional`] supplied
//! by the caller turns a top-degree class into a number.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::rat::{factorial, fmt_q, q, qi, Q};

/// What a generator stands for.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GenKind {
    /// c_i(bundle)
    Chern(String),
    /// Δ_i, the i-th elementary symmetric polynomial in boundary components
    Delta,
    /// any other named class (hyperplane classes, formal roots, ray classes)
    Class(String),
}

/// A generator of the class algebra.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Gen {
    pub kind: GenKind,
    pub index: u32,
    pub degree: u32,
}

impl Gen {
    pub fn chern(bundle: &str, i: u32) -> Self {
        Gen { kind: GenKind::Chern(bundle.to_string()), index: i, degree: i }
    }

    pub fn delta(i: u32) -> Self {
        Gen { kind: GenKind::Delta, index: i, degree: i }
    }

    /// A named class of the given degree; `index` distinguishes families
    /// such as formal roots a1, a2, ...
    pub fn class(name: &str, index: u32, degree: u32) -> Self {
        Gen { kind: GenKind::Class(name.to_string()), index, degree }
    }
}

impl fmt::Display for Gen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            GenKind::Chern(b) => write!(f, "c{}({})", self.index, b),
            GenKind::Delta => write!(f, "D{}", self.index),
            GenKind::Class(name) if self.index == 0 => write!(f, "{name}"),
            GenKind::Class(name) => write!(f, "{name}{}", self.index),
        }
    }
}

/// A monomial: generator ↦ positive exponent.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(pub BTreeMap<Gen, u32>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(BTreeMap::new())
    }

    pub fn of(g: Gen) -> Self {
        Monomial(BTreeMap::from([(g, 1)]))
    }

    pub fn pow(g: Gen, e: u32) -> Self {
        if e == 0 {
            Monomial::one()
        } else {
            Monomial(BTreeMap::from([(g, e)]))
        }
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(g, e)| g.degree * e).sum()
    }

    pub fn times(&self, other: &Monomial) -> Monomial {
        let mut m = self.0.clone();
        for (g, e) in &other.0 {
            *m.entry(g.clone()).or_insert(0) += e;
        }
        Monomial(m)
    }

    pub fn exponent(&self, g: &Gen) -> u32 {
        self.0.get(g).copied().unwrap_or(0)
    }

    pub fn has_delta(&self) -> bool {
        self.0.keys().any(|g| g.kind == GenKind::Delta)
    }

    /// Partition of Chern indices of `bundle` occurring in the monomial,
    /// in decreasing order.
    pub fn partition(&self, bundle: &str) -> Vec<u32> {
        let mut p: Vec<u32> = Vec::new();
        for (g, e) in &self.0 {
            if g.kind == GenKind::Chern(bundle.to_string()) {
                p.extend(std::iter::repeat(g.index).take(*e as usize));
            }
        }
        p.sort_unstable_by(|a, b| b.cmp(a));
        p
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|(g, e)| if *e == 1 { g.to_string() } else { format!("{g}^{e}") })
            .collect();
        write!(f, "{}", parts.join("*"))
    }
}

/// A truncated element of the graded class algebra.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedClass {
    n: u32,
    terms: BTreeMap<Monomial, Q>,
}

impl GradedClass {
    pub fn zero(n: u32) -> Self {
        GradedClass { n, terms: BTreeMap::new() }
    }

    pub fn one(n: u32) -> Self {
        Self::constant(n, Q::one())
    }

    pub fn constant(n: u32, c: Q) -> Self {
        Self::monomial(n, Monomial::one(), c)
    }

    pub fn generator(n: u32, g: Gen) -> Self {
        Self::monomial(n, Monomial::of(g), Q::one())
    }

    pub fn monomial(n: u32, m: Monomial, c: Q) -> Self {
        let mut terms = BTreeMap::new();
        if m.degree() <= n && !c.is_zero() {
            terms.insert(m, c);
        }
        GradedClass { n, terms }
    }

    pub fn truncation(&self) -> u32 {
        self.n
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, Q> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &Monomial) -> Q {
        self.terms.get(m).cloned().unwrap_or_else(Q::zero)
    }

    fn insert(&mut self, m: Monomial, c: Q) {
        if m.degree() > self.n || c.is_zero() {
            return;
        }
        let e = self.terms.entry(m.clone()).or_insert_with(Q::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&m);
        }
    }

    /// Re-truncate at a lower top degree.
    pub fn truncate(&self, n: u32) -> Self {
        let n = n.min(self.n);
        GradedClass { n, terms: self.terms.iter().filter(|(m, _)| m.degree() <= n).map(|(m, c)| (m.clone(), c.clone())).collect() }
    }

    /// The homogeneous part of degree k.
    pub fn part(&self, k: u32) -> Self {
        GradedClass {
            n: self.n,
            terms: self.terms.iter().filter(|(m, _)| m.degree() == k).map(|(m, c)| (m.clone(), c.clone())).collect(),
        }
    }

    pub fn constant_term(&self) -> Q {
        self.coefficient(&Monomial::one())
    }

    pub fn scale(&self, c: &Q) -> Self {
        if c.is_zero() {
            return Self::zero(self.n);
        }
        GradedClass { n: self.n, terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect() }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::one(self.n);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// exp(x) for x without constant term; a finite sum by nilpotency.
    pub fn exp_nilpotent(&self) -> Self {
        debug_assert!(self.constant_term().is_zero());
        let mut acc = Self::one(self.n);
        let mut term = Self::one(self.n);
        for m in 1..=self.n {
            term = (&term * self).scale(&(Q::one() / q(m as i64)));
            if term.is_zero() {
                break;
            }
            acc = &acc + &term;
        }
        acc
    }

    /// Replace generators by classes; generators mapped to None stay put.
    pub fn substitute(&self, f: &dyn Fn(&Gen) -> Option<GradedClass>) -> Self {
        let n = self.n;
        let mut out = Self::zero(n);
        for (m, c) in &self.terms {
            let mut t = Self::constant(n, c.clone());
            for (g, e) in &m.0 {
                let image = f(g).unwrap_or_else(|| Self::generator(n, g.clone()));
                t = &t * &image.pow(*e);
            }
            out = &out + &t;
        }
        out
    }

    /// Every monomial carries a boundary factor Δ.
    pub fn supported_on_boundary(&self) -> bool {
        self.terms.keys().all(|m| m.has_delta())
    }

    pub fn to_json(&self) -> Value {
        let terms: serde_json::Map<String, Value> =
            self.terms.iter().map(|(m, c)| (m.to_string(), Value::String(fmt_q(c)))).collect();
        json!({ "truncation": self.n, "terms": terms })
    }
}

impl fmt::Display for GradedClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut ordered: Vec<(&Monomial, &Q)> = self.terms.iter().collect();
        ordered.sort_by_key(|(m, _)| m.degree());
        let parts: Vec<String> = ordered
            .into_iter()
            .map(|(m, c)| if m.0.is_empty() { fmt_q(c) } else if c.is_one() { m.to_string() } else { format!("{}*{}", fmt_q(c), m) })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl Add for &GradedClass {
    type Output = GradedClass;
    fn add(self, rhs: &GradedClass) -> GradedClass {
        let mut out = self.truncate(self.n.min(rhs.n));
        for (m, c) in &rhs.terms {
            out.insert(m.clone(), c.clone());
        }
        out
    }
}

impl Neg for &GradedClass {
    type Output = GradedClass;
    fn neg(self) -> GradedClass {
        self.scale(&-Q::one())
    }
}

impl Sub for &GradedClass {
    type Output = GradedClass;
    fn sub(self, rhs: &GradedClass) -> GradedClass {
        self + &(-rhs)
    }
}

impl Mul for &GradedClass {
    type Output = GradedClass;
    fn mul(self, rhs: &GradedClass) -> GradedClass {
        let n = self.n.min(rhs.n);
        let mut out = GradedClass::zero(n);
        for (a, x) in &self.terms {
            let da = a.degree();
            if da > n {
                continue;
            }
            for (b, y) in &rhs.terms {
                if da + b.degree() <= n {
                    out.insert(a.times(b), x * y);
                }
            }
        }
        out
    }
}

/// Total Chern class product, c(E′)·c(E″), truncated.
pub fn whitney_product(a: &GradedClass, b: &GradedClass) -> GradedClass {
    a * b
}

/// Power sums p₁…p_n of the Chern roots from c₁, c₂, … (Newton's identities).
pub fn power_sums(c: &[GradedClass], n: u32) -> Vec<GradedClass> {
    let e = |i: usize| -> GradedClass { c.get(i - 1).map(|x| x.truncate(n)).unwrap_or_else(|| GradedClass::zero(n)) };
    let mut p: Vec<GradedClass> = Vec::with_capacity(n as usize);
    for k in 1..=n as usize {
        // p_k = Σ_{i<k} (−1)^{i−1} e_i p_{k−i} + (−1)^{k−1} k e_k
        let mut acc = e(k).scale(&q(if k % 2 == 1 { k as i64 } else { -(k as i64) }));
        for i in 1..k {
            let t = &e(i) * &p[k - i - 1];
            acc = if i % 2 == 1 { &acc + &t } else { &acc - &t };
        }
        p.push(acc);
    }
    p
}

/// ch(E) = r + Σ p_k / k! for a bundle of rank r with Chern classes c.
pub fn ch_from_chern(c: &[GradedClass], rank: u32, n: u32) -> GradedClass {
    let mut out = GradedClass::constant(n, q(rank as i64));
    for (k, pk) in power_sums(c, n).iter().enumerate() {
        out = &out + &pk.scale(&(Q::one() / qi(&factorial(k as u64 + 1))));
    }
    out
}

/// Coefficients of x / (1 − e^{−x}) through xⁿ: 1, 1/2, 1/12, 0, −1/720, …
pub fn todd_series(n: u32) -> Vec<Q> {
    // invert (1 − e^{−x})/x = Σ (−1)^k x^k/(k+1)!
    let s: Vec<Q> = (0..=n as u64)
        .map(|k| {
            let v = Q::one() / qi(&factorial(k + 1));
            if k % 2 == 0 {
                v
            } else {
                -v
            }
        })
        .collect();
    series_inverse(&s)
}

fn series_inverse(s: &[Q]) -> Vec<Q> {
    let mut inv = vec![Q::one() / &s[0]];
    for k in 1..s.len() {
        let acc: Q = (1..=k).map(|j| &s[j] * &inv[k - j]).sum();
        inv.push(-acc / &s[0]);
    }
    inv
}

/// log of a series with constant term 1, via (log f)′ = f′/f.
fn series_log(f: &[Q]) -> Vec<Q> {
    let inv = series_inverse(f);
    let mut out = vec![Q::zero(); f.len()];
    for k in 1..f.len() {
        // coefficient of x^{k−1} in f′·f⁻¹, divided by k
        let acc: Q = (1..=k).map(|j| q(j as i64) * &f[j] * &inv[k - j]).sum();
        out[k] = acc / q(k as i64);
    }
    out
}

/// td = Π x_i/(1 − e^{−x_i}) = exp(Σ_k β_k p_k), β = log of the Todd series.
pub fn todd_from_chern(c: &[GradedClass], n: u32) -> GradedClass {
    let beta = series_log(&todd_series(n));
    let mut log = GradedClass::zero(n);
    for (k, pk) in power_sums(c, n).iter().enumerate() {
        log = &log + &pk.scale(&beta[k + 1]);
    }
    log.exp_nilpotent()
}

/// The degree map on top-degree classes: caller-supplied intersection numbers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeFunctional {
    pub n: u32,
    pub values: BTreeMap<Monomial, Q>,
}

impl DegreeFunctional {
    pub fn new(n: u32) -> Self {
        DegreeFunctional { n, values: BTreeMap::new() }
    }

    pub fn with(mut self, m: Monomial, v: Q) -> Self {
        self.values.insert(m, v);
        self
    }

    /// Pᵏ with hyperplane class `h`: hᵏ ↦ 1.
    pub fn projective_space(k: u32, h: &Gen) -> Self {
        Self::new(k).with(Monomial::pow(h.clone(), k), Q::one())
    }

    /// deg of the degree-n part; lower-degree terms are ignored.
    pub fn apply(&self, x: &GradedClass) -> Result<Q> {
        let mut acc = Q::zero();
        for (m, c) in x.part(self.n).terms() {
            match self.values.get(m) {
                Some(v) => acc += c * v,
                None => return Err(Error::MissingIntersectionNumber(m.to_string())),
            }
        }
        Ok(acc)
    }
}

/// χ(E) = deg((ch E · td T)_n).
pub fn hrr_chi(ch_e: &GradedClass, td_t: &GradedClass, deg: &DegreeFunctional) -> Result<Q> {
    deg.apply(&(ch_e * td_t))
}

pub const BUNDLE_E: &str = "E";
pub const COTANGENT: &str = "Omega";
pub const LOG_COTANGENT: &str = "Omega(log)";

/// Q(c(E); c(Ω¹)) with deg(Q) = χ(E), for rank r on an n-fold.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UniversalPolynomial {
    pub n: u32,
    pub rank: u32,
    /// degree-n class in c_i(E) and c_j(Ω¹)
    pub class: GradedClass,
}

/// Chern classes c₁…c_k(bundle) as generators.
pub fn chern_generators(bundle: &str, k: u32, n: u32) -> Vec<GradedClass> {
    (1..=k).map(|i| GradedClass::generator(n, Gen::chern(bundle, i))).collect()
}

pub fn universal_q(n: u32, rank: u32) -> UniversalPolynomial {
    let ce = chern_generators(BUNDLE_E, rank.min(n), n);
    // c_i(T) = (−1)^i c_i(Ω¹)
    let ct: Vec<GradedClass> = chern_generators(COTANGENT, n, n)
        .into_iter()
        .enumerate()
        .map(|(i, c)| if i % 2 == 0 { -&c } else { c })
        .collect();
    let class = (&ch_from_chern(&ce, rank, n) * &todd_from_chern(&ct, n)).part(n);
    UniversalPolynomial { n, rank, class }
}

impl UniversalPolynomial {
    /// a_{α,β}: α the partition of E-indices, β that of Ω¹-indices.
    pub fn coefficient_table(&self) -> BTreeMap<(Vec<u32>, Vec<u32>), Q> {
        self.class
            .terms()
            .iter()
            .map(|(m, c)| ((m.partition(BUNDLE_E), m.partition(COTANGENT)), c.clone()))
            .collect()
    }

    /// Substitute classes for c_i(E) and c_j(Ω¹) (missing entries are zero).
    pub fn substitute(&self, ce: &[GradedClass], comega: &[GradedClass]) -> GradedClass {
        let n = self.n;
        let f = |g: &Gen| -> Option<GradedClass> {
            let pick = |v: &[GradedClass]| v.get(g.index as usize - 1).cloned().unwrap_or_else(|| GradedClass::zero(n));
            match &g.kind {
                GenKind::Chern(b) if b == BUNDLE_E => Some(pick(ce)),
                GenKind::Chern(b) if b == COTANGENT => Some(pick(comega)),
                _ => None,
            }
        };
        self.class.substitute(&f)
    }

    pub fn evaluate(&self, ce: &[GradedClass], comega: &[GradedClass], deg: &DegreeFunctional) -> Result<Q> {
        deg.apply(&self.substitute(ce, comega))
    }

    pub fn to_json(&self) -> Value {
        let table: serde_json::Map<String, Value> = self
            .coefficient_table()
            .into_iter()
            .map(|((a, b), c)| (partition_key(&a, &b), Value::String(fmt_q(&c))))
            .collect();
        json!({ "dim": self.n, "rank": self.rank, "coefficients": table, "polynomial": self.class.to_string() })
    }
}

/// "E[2,1];Omega[1]" style keys for coefficient tables.
pub fn partition_key(a: &[u32], b: &[u32]) -> String {
    let f = |p: &[u32]| p.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
    format!("{BUNDLE_E}[{}];{COTANGENT}[{}]", f(a), f(b))
}

/// c_j(Ω¹) = Σ_{i≤j} c_i(Ω¹(log)) Δ_{j−i}, for j = 1..len(c_log).
pub fn log_correction(c_log: &[GradedClass], delta: &[GradedClass], n: u32) -> Vec<GradedClass> {
    let get = |v: &[GradedClass], i: usize| -> GradedClass {
        if i == 0 {
            GradedClass::one(n)
        } else {
            v.get(i - 1).map(|x| x.truncate(n)).unwrap_or_else(|| GradedClass::zero(n))
        }
    };
    (1..=c_log.len())
        .map(|j| {
            let mut acc = GradedClass::zero(n);
            for i in 0..=j {
                acc = &acc + &(&get(c_log, i) * &get(delta, j - i));
            }
            acc
        })
        .collect()
}

/// E(ℓ) = Σ_{i≤n′} ℓ^i c₁(log)^i Σ_{|α|=n−i} b_α (c^α(Ω¹) − c^α(Ω¹(log))),
/// with c(Ω¹) expanded through the boundary classes Δ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ErrorTerm {
    pub n: u32,
    pub n_prime: u32,
    /// b_{i,α}: coefficient of ℓ^i c₁(log)^i against c^α
    pub b: BTreeMap<(u32, Vec<u32>), Q>,
    /// the coefficient class of ℓ^i, i = 0..=n′
    pub terms: Vec<GradedClass>,
}

fn c_alpha(c: &[GradedClass], alpha: &[u32], n: u32) -> GradedClass {
    alpha.iter().fold(GradedClass::one(n), |acc, &i| &acc * &c[i as usize - 1])
}

pub fn error_term_symbolic(n: u32, n_prime: u32) -> Result<ErrorTerm> {
    if n_prime > n {
        return Err(Error::InvalidInput(format!("boundary dimension {n_prime} exceeds dimension {n}")));
    }
    let uq = universal_q(n, 1);
    let clog = chern_generators(LOG_COTANGENT, n, n);
    let delta: Vec<GradedClass> = (1..=n).map(|k| GradedClass::generator(n, Gen::delta(k))).collect();
    let comega = log_correction(&clog, &delta, n);
    // Q(x; w) − Q(x; w′) = Σ a_{i,α} x^i (w^α − w′^α); b_α = −a_{i,α} flips it
    let mut b = BTreeMap::new();
    for ((e, alpha), a) in uq.coefficient_table() {
        let i = e.len() as u32;
        if i <= n_prime {
            b.insert((i, alpha), -a);
        }
    }
    let mut terms = vec![GradedClass::zero(n); n_prime as usize + 1];
    for ((i, alpha), coef) in &b {
        let diff = &c_alpha(&comega, alpha, n) - &c_alpha(&clog, alpha, n);
        let t = (&clog[0].pow(*i) * &diff).scale(coef);
        terms[*i as usize] = &terms[*i as usize] + &t;
    }
    Ok(ErrorTerm { n, n_prime, b, terms })
}

impl ErrorTerm {
    /// The class E(ℓ) for a numeric ℓ.
    pub fn at(&self, l: &Q) -> GradedClass {
        let mut acc = GradedClass::zero(self.n);
        let mut lp = Q::one();
        for t in &self.terms {
            acc = &acc + &t.scale(&lp);
            lp *= l;
        }
        acc
    }

    /// Every monomial of every coefficient contains a Δ factor.
    pub fn supported_on_boundary(&self) -> bool {
        self.terms.iter().all(|t| t.supported_on_boundary())
    }

    pub fn to_json(&self) -> Value {
        let b: serde_json::Map<String, Value> = self
            .b
            .iter()
            .map(|((i, a), c)| {
                let key = format!("l^{i};[{}]", a.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","));
                (key, Value::String(fmt_q(c)))
            })
            .collect();
        json!({
            "dim": self.n,
            "boundary_dim": self.n_prime,
            "b": b,
            "terms": self.terms.iter().map(|t| t.to_json()).collect::<Vec<_>>(),
        })
    }
}
