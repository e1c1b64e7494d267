//! Leading terms of dimension formulas for orthogonal modular forms of
//! signature (2, n): the Hilbert polynomial of the compact dual quadric,
//! local densities by congruence counting, and the Hirzebruch–Mumford volume.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::qform::QuadraticLattice;
use crate::rat::{factorial, fmt_q, is_prime, q, qi, to_f64, Q};

/// Exact univariate polynomial, coefficients from the constant term up.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly(pub Vec<Q>);

impl Poly {
    pub fn constant(c: Q) -> Self {
        Poly(vec![c]).trim()
    }

    /// a + b·x
    pub fn linear(a: Q, b: Q) -> Self {
        Poly(vec![a, b]).trim()
    }

    fn trim(mut self) -> Self {
        while self.0.last().is_some_and(|c| c.is_zero()) {
            self.0.pop();
        }
        self
    }

    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    pub fn leading(&self) -> Q {
        self.0.last().cloned().unwrap_or_else(Q::zero)
    }

    pub fn eval(&self, x: &Q) -> Q {
        self.0.iter().rev().fold(Q::zero(), |acc, c| acc * x + c)
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let n = self.0.len().max(o.0.len());
        let get = |v: &[Q], i: usize| v.get(i).cloned().unwrap_or_else(Q::zero);
        Poly((0..n).map(|i| get(&self.0, i) + get(&o.0, i)).collect()).trim()
    }

    pub fn scale(&self, c: &Q) -> Poly {
        Poly(self.0.iter().map(|x| x * c).collect()).trim()
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        if self.0.is_empty() || o.0.is_empty() {
            return Poly(Vec::new());
        }
        let mut out = vec![Q::zero(); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out).trim()
    }

    /// p(a + b·x)
    pub fn compose_linear(&self, a: &Q, b: &Q) -> Poly {
        let inner = Poly::linear(a.clone(), b.clone());
        self.0.iter().rev().fold(Poly(Vec::new()), |acc, c| acc.mul(&inner).add(&Poly::constant(c.clone())))
    }

    pub fn to_json(&self) -> Value {
        Value::Array(self.0.iter().map(|c| Value::String(fmt_q(c))).collect())
    }
}

/// χ(P^N, O(k)) = C(N+k, N) as a polynomial in k.
pub fn chi_projective_poly(big_n: u32) -> Poly {
    let mut p = Poly::constant(Q::one());
    for i in 1..=big_n as i64 {
        p = p.mul(&Poly::linear(q(i), Q::one())).scale(&(Q::one() / q(i)));
    }
    p
}

/// χ(P^N, O(k)), valid for every integer k.
pub fn chi_projective_line_bundle(big_n: u32, k: i64) -> BigInt {
    let v = chi_projective_poly(big_n).eval(&q(k));
    debug_assert!(v.is_integer());
    v.to_integer()
}

/// P(ℓ) = χ(O_D̆(−n)^ℓ) on the quadric D̆ ⊂ P^{n+1}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HilbertPolyDual {
    pub n: u32,
    pub poly: Poly,
}

/// χ(O_{P^{n+1}}(−nℓ)) − χ(O_{P^{n+1}}(−nℓ−2)) from the adjunction sequence.
pub fn hilbert_poly_dual(n: u32) -> Result<HilbertPolyDual> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    let chi = chi_projective_poly(n + 1);
    let slope = -q(n as i64);
    let a = chi.compose_linear(&Q::zero(), &slope);
    let b = chi.compose_linear(&q(-2), &slope);
    Ok(HilbertPolyDual { n, poly: a.add(&b.scale(&-Q::one())) })
}

impl HilbertPolyDual {
    pub fn eval(&self, l: i64) -> Q {
        self.poly.eval(&q(l))
    }

    pub fn to_json(&self) -> Value {
        json!({
            "n": self.n,
            "coefficients": self.poly.to_json(),
            "conventions": ["adjunction difference on P^(n+1); binomial lower index n+1"],
        })
    }
}

/// α_p(L, L) from counting X mod p^k with XᵗAX ≡ A.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalDensityResult {
    pub p: u64,
    pub k_stable: u32,
    pub alpha_p: Q,
    /// (k, N_{p^k}) for every level counted
    pub counts: Vec<(u32, BigInt)>,
}

impl LocalDensityResult {
    pub fn to_json(&self) -> Value {
        json!({
            "p": self.p,
            "k_stable": self.k_stable,
            "alpha_p": fmt_q(&self.alpha_p),
            "counts": self.counts.iter().map(|(k, c)| json!([k, c.to_string()])).collect::<Vec<_>>(),
        })
    }
}

/// Largest number of candidate matrices examined at one level.
pub const DENSITY_BUDGET: u128 = 50_000_000;

fn solutions_mod(a: &[Vec<i64>], m: usize, modulus: i64, prev: &[Vec<i64>], step: i64) -> Vec<Vec<i64>> {
    // every solution mod `modulus` reduces to one mod modulus/step; lift those
    let lifts = step.pow((m * m) as u32) as usize;
    let check = |x: &[i64]| -> bool {
        (0..m).all(|i| {
            (i..m).all(|j| {
                let mut s: i128 = 0;
                for r in 0..m {
                    for c in 0..m {
                        s += x[r * m + i] as i128 * a[r][c] as i128 * x[c * m + j] as i128;
                    }
                }
                (s - a[i][j] as i128).rem_euclid(modulus as i128) == 0
            })
        })
    };
    let base = modulus / step;
    let mut out: Vec<Vec<i64>> = prev
        .par_iter()
        .flat_map_iter(|x0| {
            (0..lifts).filter_map(move |mut t| {
                let mut x = x0.clone();
                for e in x.iter_mut() {
                    *e += base * (t % step as usize) as i64;
                    t /= step as usize;
                }
                check(&x).then_some(x)
            })
        })
        .collect();
    out.sort();
    out
}

pub fn local_density(l: &QuadraticLattice, p: u64, k_max: u32) -> Result<LocalDensityResult> {
    if !is_prime(p) {
        return Err(Error::InvalidInput(format!("{p} is not prime")));
    }
    if p == 2 {
        return Err(Error::OutOfScope("local densities at p = 2".into()));
    }
    let m = l.rank();
    if m == 0 || m > 4 {
        return Err(Error::OutOfScope(format!("rank {m} congruence counting")));
    }
    if !l.is_integral() {
        return Err(Error::InvalidInput("Gram matrix must be integral".into()));
    }
    let a: Vec<Vec<i64>> = (0..m)
        .map(|i| (0..m).map(|j| l.gram()[(i, j)].to_integer().to_i64().ok_or_else(|| Error::Overflow("Gram entry".into()))).collect())
        .collect::<Result<_>>()?;
    let pi = p as i64;
    let mut sols: Vec<Vec<i64>> = vec![vec![0; m * m]];
    let mut modulus: i64 = 1;
    let mut counts: Vec<(u32, BigInt)> = Vec::new();
    let mut dens: Vec<Q> = Vec::new();
    for k in 1..=k_max {
        let work = sols.len() as u128 * (p as u128).pow((m * m) as u32);
        if work > DENSITY_BUDGET {
            return Err(Error::BudgetExceeded(work));
        }
        modulus = modulus.checked_mul(pi).ok_or_else(|| Error::Overflow("modulus".into()))?;
        sols = solutions_mod(&a, m, modulus, &sols, pi);
        let n_k = BigInt::from(sols.len());
        let scale = BigInt::from(p).pow(k * (m * (m - 1) / 2) as u32);
        dens.push(Q::new(n_k.clone(), scale));
        counts.push((k, n_k));
        if k >= 2 && dens[k as usize - 1] == dens[k as usize - 2] {
            return Ok(LocalDensityResult { p, k_stable: k - 1, alpha_p: dens[k as usize - 1].clone(), counts });
        }
    }
    Err(Error::NotStabilized { k_max })
}

pub const GAMMA_CONVENTION: &str = "Gamma(k/2)^-1 factors used where the printed formula shows Gamma(-k/2)";

/// Where α_∞(L, L) comes from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AlphaSource {
    Direct(Q),
    /// α_∞ = 2/|spn⁺(L)| · ∏ α_p⁻¹; spn defaults to 1 with a warning
    Local { densities: Vec<LocalDensityResult>, spn: Option<u64> },
}

/// Vol_HM = α_∞ · |D(L)|^{(n+3)/2} · ∏_{k=1}^{n+2} π^{k/2} Γ(k/2)⁻¹.
#[derive(Clone, Debug, PartialEq)]
pub struct HMVolumeResult {
    pub value: f64,
    pub n: usize,
    pub alpha_inf: Q,
    pub disc: BigInt,
    /// ∏ π^{k/2}/Γ(k/2) = gamma_rational · π^{pi_half_power/2}
    pub gamma_rational: Q,
    pub pi_half_power: u32,
    pub conventions: Vec<String>,
    pub warnings: Vec<String>,
}

/// The exact factorization of ∏_{k=1}^{m} π^{k/2}/Γ(k/2) as (c, e): c·π^{e/2}.
pub fn gamma_product(m: u32) -> (Q, u32) {
    let mut c = Q::one();
    let mut e: u32 = 0;
    for k in 1..=m {
        e += k;
        if k % 2 == 0 {
            // Γ(k/2) = (k/2 − 1)!
            c /= qi(&factorial(k as u64 / 2 - 1));
        } else {
            // Γ(k/2) = √π (k−2)!! / 2^{(k−1)/2}
            let mut dfact = BigInt::one();
            let mut j = k as i64 - 2;
            while j > 1 {
                dfact *= j;
                j -= 2;
            }
            c = c * qi(&(BigInt::one() << ((k - 1) / 2) as usize)) / qi(&dfact);
            e -= 1;
        }
    }
    (c, e)
}

pub fn alpha_inf(source: &AlphaSource) -> (Q, Vec<String>) {
    match source {
        AlphaSource::Direct(a) => (a.clone(), Vec::new()),
        AlphaSource::Local { densities, spn } => {
            let mut warnings = Vec::new();
            let s = spn.unwrap_or_else(|| {
                warnings.push("|spn+(L)| not supplied; using 1".to_string());
                1
            });
            let prod: Q = densities.iter().fold(Q::one(), |acc, d| acc * &d.alpha_p);
            (q(2) / (q(s as i64) * prod), warnings)
        }
    }
}

pub fn hm_volume(l: &QuadraticLattice, source: &AlphaSource) -> Result<HMVolumeResult> {
    let (pos, neg) = l.signature()?;
    if pos != 2 {
        return Err(Error::WrongSignature(pos, neg));
    }
    let n = neg;
    let disc = l.gram().det().abs();
    if !disc.is_integer() || disc.is_zero() {
        return Err(Error::InvalidInput("discriminant must be a nonzero integer".into()));
    }
    let disc = disc.to_integer();
    let (a, mut warnings) = alpha_inf(source);
    if !a.is_positive() {
        return Err(Error::InvalidInput("alpha_inf must be positive".into()));
    }
    let (c, e) = gamma_product(n as u32 + 2);
    let d_pow = to_f64(&qi(&disc)).powf((n as f64 + 3.0) / 2.0);
    let value = to_f64(&a) * d_pow * to_f64(&c) * std::f64::consts::PI.powf(e as f64 / 2.0);
    if n % 2 == 0 && !is_square(&disc) {
        warnings.push("|D(L)|^((n+3)/2) is irrational; value is a float".to_string());
    }
    Ok(HMVolumeResult {
        value,
        n,
        alpha_inf: a,
        disc,
        gamma_rational: c,
        pi_half_power: e,
        conventions: vec![GAMMA_CONVENTION.to_string(), "geometric weight".to_string()],
        warnings,
    })
}

fn is_square(x: &BigInt) -> bool {
    let r = x.sqrt();
    &(&r * &r) == x
}

impl HMVolumeResult {
    pub fn to_json(&self) -> Value {
        json!({
            "value": format!("{:.15e}", self.value),
            "n": self.n,
            "alpha_inf": fmt_q(&self.alpha_inf),
            "disc": self.disc.to_string(),
            "factorization": {
                "rational": fmt_q(&self.gamma_rational),
                "pi_power": format!("{}/2", self.pi_half_power),
                "disc_power": format!("{}/2", self.n + 3),
            },
            "conventions": self.conventions,
            "warnings": self.warnings,
        })
    }
}

/// Vol_HM · P_D̆(ℓ−1): the boundary-free part of dim S_ℓ.
#[derive(Clone, Debug, PartialEq)]
pub struct LeadingDimension {
    pub n: u32,
    pub l: i64,
    pub hilbert_value: Q,
    pub value: f64,
}

pub fn leading_dimension(n: u32, l: i64, vol: f64) -> Result<LeadingDimension> {
    if l < 2 {
        return Err(Error::InvalidInput("weight must be at least 2".into()));
    }
    let hv = hilbert_poly_dual(n)?.eval(l - 1);
    Ok(LeadingDimension { n, l, value: vol * to_f64(&hv), hilbert_value: hv })
}

impl LeadingDimension {
    pub fn to_json(&self) -> Value {
        json!({
            "n": self.n,
            "weight": self.l,
            "hilbert_value": fmt_q(&self.hilbert_value),
            "leading": format!("{:.15e}", self.value),
            "label": "leading (boundary-free) part; boundary correction not included",
        })
    }
}
