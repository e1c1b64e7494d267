//! Ramification data of finite-order isometries: the fixed sublattice of the
//! positive eigenplane, the character value at a fixed point, cyclotomic
//! decompositions and the resulting classification.
//!
//! Nothing transcendental is ever built. A fixed point τ of g is an
//! eigenvector with b(τ, τ) = 0 and b(τ, τ̄) > 0; its real span is a
//! positive plane inside one real eigen-block of g, and every question asked
//! here is answered from the rational blocks ker Φ_d(g).

use std::collections::BTreeSet;
use std::fmt;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::linalg::{int_kernel, rank_of, saturate, zq, QMat, ZVec};
use crate::qform::QuadraticLattice;
use crate::rat::{floor_q, fmt_q, q, qr, to_f64, Q};

/// Largest order searched for before declaring a matrix of infinite order.
pub const ORDER_LIMIT: u32 = 1000;

/// Work cap for [`enumerate_isometries`]: candidate vectors per column.
const ENUM_BUDGET: u64 = 2_000_000;

/// An integral isometry of a lattice, with its order when finite.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IsometryElement {
    pub mat: QMat,
    pub order: Option<u32>,
}

impl IsometryElement {
    pub fn new(mat: QMat, l: &QuadraticLattice) -> Result<Self> {
        if !mat.is_square() || mat.rows() != l.rank() {
            return Err(Error::DimensionMismatch("isometry must be square of the lattice rank".into()));
        }
        if !mat.is_integral() {
            return Err(Error::InvalidInput("isometry must be integral".into()));
        }
        if mat.transpose().mul(l.gram()).mul(&mat) != *l.gram() {
            return Err(Error::NotIsometry);
        }
        let order = matrix_order(&mat);
        Ok(IsometryElement { mat, order })
    }

    pub fn from_i64(rows: &[&[i64]], l: &QuadraticLattice) -> Result<Self> {
        Self::new(QMat::from_i64(rows), l)
    }

    pub fn conjugate_by(&self, h: &QMat) -> Result<IsometryElement> {
        let inv = h.inverse().ok_or(Error::DegenerateForm)?;
        let mat = h.mul(&self.mat).mul(&inv);
        Ok(IsometryElement { mat, order: self.order })
    }

    pub fn to_json(&self) -> Value {
        json!({ "matrix": qmat_json(&self.mat), "order": self.order })
    }
}

fn matrix_order(m: &QMat) -> Option<u32> {
    // machine integers: powers of a unipotent grow slowly and would make
    // rational arithmetic crawl up to the limit
    let n = m.rows();
    let base: Vec<Vec<i128>> = (0..n)
        .map(|i| (0..n).map(|j| if m[(i, j)].is_integer() { m[(i, j)].numer().to_i128() } else { None }).collect::<Option<Vec<_>>>())
        .collect::<Option<Vec<_>>>()?;
    let cap = 1i128 << 40;
    let mut p = base.clone();
    for k in 1..=ORDER_LIMIT {
        if (0..n).all(|i| (0..n).all(|j| p[i][j] == (i == j) as i128)) {
            return Some(k);
        }
        let mut next = vec![vec![0i128; n]; n];
        for i in 0..n {
            for j in 0..n {
                for t in 0..n {
                    next[i][j] += p[i][t] * base[t][j];
                }
                // entries of a finite-order integral matrix stay bounded
                if next[i][j].abs() > cap {
                    return None;
                }
            }
        }
        p = next;
    }
    None
}

/// All integral isometries with entries in [−bound, bound], sorted.
///
/// Column j of an isometry is a vector of norm G_jj; columns are chosen by
/// backtracking against the pairings G_ij, in parallel over the first column.
pub fn enumerate_isometries(l: &QuadraticLattice, bound: u32) -> Result<Vec<IsometryElement>> {
    let n = l.rank();
    if n > 6 {
        return Err(Error::OutOfScope(format!("isometry enumeration needs rank <= 6, got {n}")));
    }
    if bound == 0 {
        return Err(Error::InvalidInput("bound must be at least 1".into()));
    }
    if !l.is_integral() {
        return Err(Error::InvalidInput("isometry enumeration needs an integral Gram matrix".into()));
    }
    if !l.is_regular() {
        return Err(Error::DegenerateForm);
    }
    let side = 2 * bound as u64 + 1;
    let total = side.checked_pow(n as u32).unwrap_or(u64::MAX);
    if total > ENUM_BUDGET {
        return Err(Error::BudgetExceeded(total as u128));
    }
    let g: Vec<Vec<i64>> = (0..n)
        .map(|i| (0..n).map(|j| l.gram()[(i, j)].numer().to_i64().expect("small Gram entry")).collect())
        .collect();
    let b = |x: &[i64], y: &[i64]| -> i64 {
        let mut s = 0;
        for i in 0..n {
            for j in 0..n {
                s += x[i] * g[i][j] * y[j];
            }
        }
        s
    };
    let mut all: Vec<Vec<i64>> = Vec::with_capacity(total as usize);
    for mut t in 0..total {
        let mut v = vec![0i64; n];
        for e in v.iter_mut() {
            *e = (t % side) as i64 - bound as i64;
            t /= side;
        }
        all.push(v);
    }
    let candidates: Vec<Vec<Vec<i64>>> =
        (0..n).map(|j| all.iter().filter(|v| b(v, v) == g[j][j]).cloned().collect()).collect();

    fn extend(cols: &mut Vec<Vec<i64>>, cands: &[Vec<Vec<i64>>], g: &[Vec<i64>], b: &dyn Fn(&[i64], &[i64]) -> i64, out: &mut Vec<Vec<Vec<i64>>>) {
        let j = cols.len();
        if j == cands.len() {
            out.push(cols.clone());
            return;
        }
        for v in &cands[j] {
            if (0..j).all(|i| b(&cols[i], v) == g[i][j]) {
                cols.push(v.clone());
                extend(cols, cands, g, b, out);
                cols.pop();
            }
        }
    }

    let mut found: Vec<Vec<Vec<i64>>> = candidates[0]
        .par_iter()
        .flat_map_iter(|c0| {
            let mut out = Vec::new();
            extend(&mut vec![c0.clone()], &candidates, &g, &b, &mut out);
            out
        })
        .collect();
    // row-major matrices, lexicographic
    let mut mats: Vec<Vec<Vec<i64>>> = found
        .drain(..)
        .map(|cols| (0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect())
        .collect();
    mats.sort();
    mats.into_iter()
        .map(|rows| {
            let refs: Vec<&[i64]> = rows.iter().map(|r| r.as_slice()).collect();
            IsometryElement::new(QMat::from_i64(&refs), l)
        })
        .collect()
}

/// Conjugacy classes (index lists, in order of first element) when the
/// elements form a group under multiplication; `None` otherwise.
pub fn conjugacy_classes(els: &[IsometryElement]) -> Option<Vec<Vec<usize>>> {
    use std::collections::HashMap;
    let key = |m: &QMat| m.to_rows().iter().flatten().map(fmt_q).collect::<Vec<_>>();
    let index: HashMap<Vec<String>, usize> = els.iter().enumerate().map(|(i, e)| (key(&e.mat), i)).collect();
    let closed = els.par_iter().all(|x| els.iter().all(|y| index.contains_key(&key(&x.mat.mul(&y.mat)))));
    if !closed {
        return None;
    }
    let mut class_of = vec![usize::MAX; els.len()];
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for i in 0..els.len() {
        if class_of[i] != usize::MAX {
            continue;
        }
        let mut members = BTreeSet::new();
        for h in els {
            let hinv = h.mat.inverse()?;
            members.insert(index[&key(&h.mat.mul(&els[i].mat).mul(&hinv))]);
        }
        for &m in &members {
            class_of[m] = classes.len();
        }
        classes.push(members.into_iter().collect());
    }
    Some(classes)
}

// ---------------------------------------------------------------------------
// roots of unity and cyclotomic polynomials

/// exp(2πi·k/d) with gcd(k, d) = 1 and 0 ≤ k < d.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RootOfUnity {
    pub k: u32,
    pub d: u32,
}

impl RootOfUnity {
    pub fn new(k: i64, d: u32) -> Self {
        let k = k.rem_euclid(d as i64) as u32;
        let g = k.gcd(&d).max(1);
        let (k, d) = (k / g, d / g);
        RootOfUnity { k: if d == 1 { 0 } else { k }, d }
    }

    pub fn one() -> Self {
        RootOfUnity { k: 0, d: 1 }
    }

    /// Multiplicative order, i.e. r_τ when this is λ.
    pub fn order(&self) -> u32 {
        self.d
    }

    /// The angle as a fraction α ∈ [0, 1) of a full turn.
    pub fn angle(&self) -> Q {
        qr(self.k as i64, self.d as i64)
    }

    pub fn mul(&self, o: &RootOfUnity) -> RootOfUnity {
        let d = self.d.lcm(&o.d);
        RootOfUnity::new((self.k * (d / self.d) + o.k * (d / o.d)) as i64, d)
    }

    pub fn inv(&self) -> RootOfUnity {
        RootOfUnity::new(-(self.k as i64), self.d)
    }

    pub fn is_real(&self) -> bool {
        self.d <= 2
    }

    pub fn to_complex(&self) -> (f64, f64) {
        let t = 2.0 * std::f64::consts::PI * self.k as f64 / self.d as f64;
        (t.cos(), t.sin())
    }
}

impl fmt::Display for RootOfUnity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.k, self.d) {
            (0, 1) => write!(f, "1"),
            (1, 2) => write!(f, "-1"),
            (1, 4) => write!(f, "i"),
            (3, 4) => write!(f, "-i"),
            (k, d) => write!(f, "exp(2*pi*i*{k}/{d})"),
        }
    }
}

/// Euler's totient.
pub fn euler_phi(n: u32) -> u32 {
    (1..=n).filter(|k| k.gcd(&n) == 1).count() as u32
}

/// Integer coefficients of Φ_n, constant term first.
pub fn cyclotomic_poly(n: u32) -> Vec<BigInt> {
    // x^n − 1 divided by Φ_d for every proper divisor d
    let mut p: Vec<BigInt> = vec![BigInt::zero(); n as usize + 1];
    p[0] = -BigInt::one();
    p[n as usize] = BigInt::one();
    for d in (1..n).filter(|d| n % d == 0) {
        p = poly_div_exact(&p, &cyclotomic_poly(d));
    }
    p
}

fn poly_div_exact(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let mut r = a.to_vec();
    let (da, db) = (a.len() - 1, b.len() - 1);
    let mut quo = vec![BigInt::zero(); da - db + 1];
    for i in (0..=da - db).rev() {
        let c = &r[i + db] / &b[db];
        for j in 0..=db {
            r[i + j] -= &c * &b[j];
        }
        quo[i] = c;
    }
    debug_assert!(r.iter().all(|x| x.is_zero()));
    quo
}

fn poly_at_matrix(p: &[BigInt], m: &QMat) -> QMat {
    let n = m.rows();
    let mut acc = QMat::zeros(n, n);
    for c in p.iter().rev() {
        acc = acc.mul(m).add(&QMat::identity(n).scale(&Q::from_integer(c.clone())));
    }
    acc
}

// ---------------------------------------------------------------------------
// lattice helpers

/// Primitive ℤ-basis of the orthogonal complement of `basis` in L.
pub fn orthogonal_complement(basis: &[ZVec], l: &QuadraticLattice) -> Vec<ZVec> {
    let n = l.rank();
    if basis.is_empty() {
        return (0..n).map(|i| unit(n, i)).collect();
    }
    let rows: Vec<Vec<Q>> = basis.iter().map(|v| l.gram().mul_vec(&zq(v))).collect();
    let k = int_kernel(&rows, n);
    if k.is_empty() {
        k
    } else {
        saturate(&k.iter().map(|v| zq(v)).collect::<Vec<_>>(), n)
    }
}

fn unit(n: usize, i: usize) -> ZVec {
    (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect()
}

/// Equality of two primitive sublattices (equivalently, of their ℚ-spans).
pub fn same_sublattice(a: &[ZVec], b: &[ZVec]) -> bool {
    let qa: Vec<Vec<Q>> = a.iter().map(|v| zq(v)).collect();
    let qb: Vec<Vec<Q>> = b.iter().map(|v| zq(v)).collect();
    let ra = rank_of(&qa);
    if ra != rank_of(&qb) {
        return false;
    }
    let both: Vec<Vec<Q>> = qa.into_iter().chain(qb).collect();
    rank_of(&both) == ra
}

fn gram_of(basis: &[Vec<Q>], l: &QuadraticLattice) -> QMat {
    let k = basis.len();
    let mut m = QMat::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            m[(i, j)] = l.b(&basis[i], &basis[j]);
        }
    }
    m
}

/// Does g map the ℚ-span of `basis` into itself?
pub fn preserves(g: &QMat, basis: &[ZVec]) -> bool {
    let qb: Vec<Vec<Q>> = basis.iter().map(|v| zq(v)).collect();
    let r = rank_of(&qb);
    qb.iter().all(|v| {
        let mut with = qb.clone();
        with.push(g.mul_vec(v));
        rank_of(&with) == r
    })
}

/// Does g fix every vector of `basis`?
pub fn fixes_pointwise(g: &QMat, basis: &[ZVec]) -> bool {
    basis.iter().all(|v| {
        let x = zq(v);
        g.mul_vec(&x) == x
    })
}

/// The matrix of g on the span of `basis`, in basis coordinates.
fn restrict(g: &QMat, basis: &[Vec<Q>]) -> Result<QMat> {
    let b = QMat::from_cols(basis)?;
    let cols: Vec<Vec<Q>> = basis
        .iter()
        .map(|v| b.solve(&g.mul_vec(v)).ok_or_else(|| Error::InvalidInput("subspace is not stable under g".into())))
        .collect::<Result<_>>()?;
    QMat::from_cols(&cols)
}

// ---------------------------------------------------------------------------
// eigen-data

/// The rational block ker Φ_d(g) and the signature of the form on it.
#[derive(Clone, Debug)]
pub struct CyclotomicBlock {
    pub d: u32,
    /// Multiplicity m with dim = m·φ(d).
    pub multiplicity: usize,
    pub basis: Vec<Vec<Q>>,
    pub signature: (usize, usize),
}

fn cyclotomic_blocks(g: &QMat, order: u32, l: &QuadraticLattice) -> Result<Vec<CyclotomicBlock>> {
    let mut out = Vec::new();
    for d in (1..=order).filter(|d| order % d == 0) {
        let basis = poly_at_matrix(&cyclotomic_poly(d), g).kernel();
        if basis.is_empty() {
            continue;
        }
        let signature = QuadraticLattice::new(gram_of(&basis, l))?.signature()?;
        let multiplicity = basis.len() / euler_phi(d) as usize;
        out.push(CyclotomicBlock { d, multiplicity, basis, signature });
    }
    Ok(out)
}

/// Positive index of b on the real block ker(g + g⁻¹ − 2cos(2πa/d)) of a
/// rational block, by floating-point linear algebra on the block.
fn pair_positive_index(g: &QMat, block: &CyclotomicBlock, a: u32, l: &QuadraticLattice) -> Result<usize> {
    let k = block.basis.len();
    let gb = restrict(g, &block.basis)?;
    let inv = gb.inverse().ok_or(Error::DegenerateForm)?;
    let t = gb.add(&inv);
    let c = 2.0 * (2.0 * std::f64::consts::PI * a as f64 / block.d as f64).cos();
    let m = DMatrix::from_fn(k, k, |i, j| to_f64(&t[(i, j)]) - if i == j { c } else { 0.0 });
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let null: Vec<usize> = (0..k).filter(|&i| svd.singular_values[i] < 1e-8).collect();
    let gram = gram_of(&block.basis, l);
    let gf = DMatrix::from_fn(k, k, |i, j| to_f64(&gram[(i, j)]));
    let w = DMatrix::from_fn(k, null.len(), |i, j| vt[(null[j], i)]);
    let restricted = w.transpose() * gf * w;
    Ok(restricted.symmetric_eigen().eigenvalues.iter().filter(|&&e| e > 1e-9).count())
}

/// The eigenvalue selected at the positive eigenplane, with its block.
fn select_eigenvalue(g: &IsometryElement, l: &QuadraticLattice) -> Result<(RootOfUnity, Vec<CyclotomicBlock>, usize)> {
    let order = g.order.ok_or(Error::NotRootOfUnity)?;
    let (p, m) = l.signature()?;
    if p != 2 {
        return Err(Error::WrongSignature(p, m));
    }
    let blocks = cyclotomic_blocks(&g.mat, order, l)?;
    let carrying: Vec<usize> = (0..blocks.len()).filter(|&i| blocks[i].signature.0 > 0).collect();
    if carrying.len() != 1 {
        // positive index split between the +1 and −1 eigenspaces
        return Err(Error::NoPositiveEigenplane);
    }
    let bi = carrying[0];
    let block = &blocks[bi];
    let lambda = match block.d {
        1 => RootOfUnity::one(),
        2 => RootOfUnity::new(1, 2),
        d if euler_phi(d) == 2 => RootOfUnity::new(1, d),
        d => {
            let mut chosen = None;
            for a in (1..d).filter(|&a| 2 * a < d && a.gcd(&d) == 1) {
                if pair_positive_index(&g.mat, block, a, l)? == 2 {
                    chosen = Some(a);
                    break;
                }
            }
            RootOfUnity::new(chosen.ok_or(Error::NoPositiveEigenplane)? as i64, d)
        }
    };
    Ok((lambda, blocks, bi))
}

/// λ_γ at the positive eigenplane and its order r_τ.
///
/// Selection convention: of the conjugate pair carrying the positive plane,
/// the eigenvalue with positive imaginary part.
pub fn chi_order_at(g: &IsometryElement, l: &QuadraticLattice) -> Result<(RootOfUnity, u32)> {
    let (lambda, _, _) = select_eigenvalue(g, l)?;
    Ok((lambda, lambda.order()))
}

// ---------------------------------------------------------------------------
// reports

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Classification {
    /// g is the identity.
    InteriorUnramified,
    /// λ = 1: ramification along D_{L,S} of codimension rank S^⊥.
    HeegnerReflectionType { codim: usize },
    /// λ = −1: trivial on D_{L,S}; acts on the quotient as −g on S^⊥.
    MinusIdentity,
    /// χ image ⊄ {±1}: a special cycle with field ℚ(μ_r).
    SpecialCycle { field: String, r: u32 },
}

impl Classification {
    pub fn name(&self) -> String {
        match self {
            Classification::InteriorUnramified => "interior_unramified".into(),
            Classification::HeegnerReflectionType { .. } => "heegner_reflection_type".into(),
            Classification::MinusIdentity => "minus_identity".into(),
            Classification::SpecialCycle { field, .. } => format!("special_cycle({field})"),
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

/// Name of the cyclotomic field ℚ(μ_r).
pub fn cyclotomic_field(r: u32) -> String {
    match r {
        1 | 2 => "Q".into(),
        4 => "Q(i)".into(),
        3 | 6 => "Q(sqrt(-3))".into(),
        r => format!("Q(zeta_{r})"),
    }
}

#[derive(Clone, Debug)]
pub struct FixedLocusReport {
    pub s: Vec<ZVec>,
    pub s_perp: Vec<ZVec>,
    /// D_{L,S} = { z ∈ D_L : b(z, y) = 0 for y in these }.
    pub d_equations: Vec<ZVec>,
    pub lambda: RootOfUnity,
    pub chi_order: u32,
    /// (d, multiplicity) for each factor Φ_d^m of the characteristic polynomial.
    pub char_factors: Vec<(u32, usize)>,
    pub classification: Classification,
    pub certificate: Option<CyclotomicCertificate>,
}

impl FixedLocusReport {
    pub fn codim(&self) -> usize {
        self.s_perp.len()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "S": zbasis_json(&self.s),
            "S_perp": zbasis_json(&self.s_perp),
            "D_equations": zbasis_json(&self.d_equations),
            "lambda": self.lambda.to_string(),
            "lambda_angle": fmt_q(&self.lambda.angle()),
            "chi_order": self.chi_order,
            "codim": self.codim(),
            "char_factors": self.char_factors.iter().map(|(d, m)| json!({"d": d, "multiplicity": m})).collect::<Vec<_>>(),
            "classification": self.classification.name(),
            "certificate": self.certificate.as_ref().map(|c| c.to_json()),
        })
    }
}

/// S, S^⊥ and the equations of D_{L,S} for the positive eigenplane of g.
///
/// S is the double-perp closure of the real span of a generic eigenvector in
/// the selected eigenspace, i.e. the primitive hull of its rational block.
pub fn fixed_sublattice(g: &IsometryElement, l: &QuadraticLattice) -> Result<FixedLocusReport> {
    let (lambda, blocks, bi) = select_eigenvalue(g, l)?;
    let n = l.rank();
    let s = saturate(&blocks[bi].basis, n);
    let s_perp = if s.len() == n { Vec::new() } else { orthogonal_complement(&s, l) };
    let classification = if lambda.d == 1 {
        if s_perp.is_empty() {
            Classification::InteriorUnramified
        } else {
            Classification::HeegnerReflectionType { codim: s_perp.len() }
        }
    } else if lambda.d == 2 {
        Classification::MinusIdentity
    } else {
        Classification::SpecialCycle { field: cyclotomic_field(lambda.d), r: lambda.d }
    };
    Ok(FixedLocusReport {
        d_equations: s_perp.clone(),
        s,
        s_perp,
        lambda,
        chi_order: lambda.order(),
        char_factors: blocks.iter().map(|b| (b.d, b.multiplicity)).collect(),
        classification,
        certificate: None,
    })
}

/// The full report, with the cyclotomic certificate of g on S attached.
pub fn classify_ramification(g: &IsometryElement, l: &QuadraticLattice) -> Result<FixedLocusReport> {
    let mut rep = fixed_sublattice(g, l)?;
    rep.certificate = Some(cyclotomic_decomposition(&g.mat, &rep.s, l)?);
    Ok(rep)
}

/// The kernel criterion: λ = 1 exactly when g preserves S^⊥ and is the
/// identity on S = (S^⊥)^⊥.
pub fn kernel_criterion_holds(g: &IsometryElement, rep: &FixedLocusReport) -> bool {
    let in_tilde = preserves(&g.mat, &rep.s_perp) && fixes_pointwise(&g.mat, &rep.s);
    (rep.lambda.d == 1) == in_tilde
}

// ---------------------------------------------------------------------------
// cyclotomic decomposition

#[derive(Clone, Debug)]
pub struct CyclotomicCertificate {
    pub r: u32,
    pub phi_r: u32,
    pub d: usize,
    pub rank_s: usize,
    /// Bases (in L-coordinates) of the cyclic factors, pairwise orthogonal.
    pub factors: Vec<Vec<Vec<Q>>>,
    /// Whether some factor needed a combined generator x⁽¹⁾ ± c·x⁽²⁾.
    pub repaired: bool,
}

impl CyclotomicCertificate {
    /// Re-checks every claim against g and L.
    pub fn verify(&self, g: &QMat, l: &QuadraticLattice) -> bool {
        if self.d * self.phi_r as usize != self.rank_s || self.factors.len() != self.d {
            return false;
        }
        let phi = cyclotomic_poly(self.r);
        for (i, f) in self.factors.iter().enumerate() {
            if f.len() != self.phi_r as usize || rank_of(f) != f.len() {
                return false;
            }
            if gram_of(f, l).det().is_zero() {
                return false;
            }
            let Ok(a) = restrict(g, f) else { return false };
            if !poly_at_matrix(&phi, &a).to_rows().iter().flatten().all(|x| x.is_zero()) {
                return false;
            }
            for h in &self.factors[i + 1..] {
                if f.iter().any(|x| h.iter().any(|y| !l.b(x, y).is_zero())) {
                    return false;
                }
            }
        }
        let all: Vec<Vec<Q>> = self.factors.iter().flatten().cloned().collect();
        rank_of(&all) == self.rank_s
    }

    pub fn to_json(&self) -> Value {
        json!({
            "r": self.r,
            "phi_r": self.phi_r,
            "d": self.d,
            "rank_S": self.rank_s,
            "repaired": self.repaired,
            "factors": self.factors.iter().map(|f| f.iter().map(|v| v.iter().map(fmt_q).collect::<Vec<_>>()).collect::<Vec<_>>()).collect::<Vec<_>>(),
        })
    }
}

/// S ⊗ ℚ ≅ φ_r^d as a ⟨g⟩-representation, split into pairwise orthogonal
/// cyclic factors on which the form is nondegenerate.
///
/// Factors are grown from basis vectors of the remaining orthogonal
/// complement; when every such cyclic span is degenerate, combinations
/// x⁽¹⁾ ± c·x⁽²⁾ are tried.
pub fn cyclotomic_decomposition(g: &QMat, s: &[ZVec], l: &QuadraticLattice) -> Result<CyclotomicCertificate> {
    if s.is_empty() {
        return Err(Error::InvalidInput("empty sublattice".into()));
    }
    let sb: Vec<Vec<Q>> = s.iter().map(|v| zq(v)).collect();
    let a = restrict(g, &sb)?;
    let r = matrix_order(&a).ok_or(Error::NotRootOfUnity)?;
    let k = sb.len();
    // no nonzero vector fixed by a nontrivial power
    for p in crate::rat::prime_factors(&BigInt::from(r)) {
        let m = a.pow((r as u64) / p).sub(&QMat::identity(k));
        if !m.kernel().is_empty() {
            return Err(Error::FixedVectorPresent);
        }
    }
    let phi_r = euler_phi(r);
    let phi = cyclotomic_poly(r);
    debug_assert!(poly_at_matrix(&phi, &a).to_rows().iter().flatten().all(|x| x.is_zero()));
    if k % phi_r as usize != 0 {
        return Err(Error::InvalidInput("rank of S is not a multiple of phi(r)".into()));
    }
    let gs = gram_of(&sb, l);
    let bs = |x: &[Q], y: &[Q]| gs.bilinear(x, y);

    let mut remaining: Vec<Vec<Q>> = (0..k).map(|i| (0..k).map(|j| if i == j { Q::one() } else { Q::zero() }).collect()).collect();
    let mut factors = Vec::new();
    let mut repaired = false;
    while !remaining.is_empty() {
        let m = remaining.len();
        let mut cands: Vec<(Vec<Q>, bool)> = remaining.iter().map(|x| (x.clone(), false)).collect();
        for c in [1i64, -1, 2, -2, 3, -3] {
            for i in 0..m {
                for j in 0..m {
                    if i != j {
                        let y: Vec<Q> = (0..k).map(|t| &remaining[i][t] + q(c) * &remaining[j][t]).collect();
                        cands.push((y, true));
                    }
                }
            }
        }
        let mut picked = None;
        for (x, combo) in cands {
            let mut z = vec![x];
            for _ in 1..phi_r {
                let next = a.mul_vec(z.last().unwrap());
                z.push(next);
            }
            let zg = QMat::from_rows(z.iter().map(|u| z.iter().map(|v| bs(u, v)).collect()).collect())?;
            if !zg.det().is_zero() {
                picked = Some((z, combo));
                break;
            }
        }
        let (z, combo) = picked.ok_or_else(|| Error::InvalidInput("no nondegenerate cyclic factor found".into()))?;
        repaired |= combo;
        // orthogonal complement of z inside the remaining span
        let eqs = QMat::from_rows(z.iter().map(|u| remaining.iter().map(|w| bs(u, w)).collect()).collect())?;
        remaining = eqs
            .kernel()
            .into_iter()
            .map(|c| (0..k).map(|t| c.iter().zip(&remaining).fold(Q::zero(), |acc, (ci, w)| acc + ci * &w[t])).collect())
            .collect();
        let in_l: Vec<Vec<Q>> = z.iter().map(|u| (0..l.rank()).map(|t| u.iter().zip(&sb).fold(Q::zero(), |acc, (ui, v)| acc + ui * &v[t])).collect()).collect();
        factors.push(in_l);
    }
    Ok(CyclotomicCertificate { r, phi_r, d: factors.len(), rank_s: k, factors, repaired })
}

// ---------------------------------------------------------------------------
// stabilizer orders

/// Orders of Γ_S, Γ̃_S, Γ̄_S, Γ̃_{S^⊥} and Γ̄_{S^⊥} inside a finite set of
/// isometries (meant to be a group).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StabilizerOrders {
    pub gamma_s: usize,
    pub tilde_s: usize,
    pub bar_s: usize,
    pub tilde_s_perp: usize,
    pub bar_s_perp: usize,
}

impl StabilizerOrders {
    pub fn to_json(&self) -> Value {
        json!({
            "Gamma_S": self.gamma_s,
            "tilde_Gamma_S": self.tilde_s,
            "bar_Gamma_S": self.bar_s,
            "tilde_Gamma_S_perp": self.tilde_s_perp,
            "bar_Gamma_S_perp": self.bar_s_perp,
        })
    }
}

pub fn stabilizer_orders(group: &[IsometryElement], s: &[ZVec], s_perp: &[ZVec]) -> Result<StabilizerOrders> {
    let stab: Vec<&IsometryElement> = group.iter().filter(|g| preserves(&g.mat, s)).collect();
    let restrictions = |basis: &[ZVec]| -> Result<usize> {
        let qb: Vec<Vec<Q>> = basis.iter().map(|v| zq(v)).collect();
        if qb.is_empty() {
            return Ok(1);
        }
        let mut seen = BTreeSet::new();
        for g in &stab {
            let m = restrict(&g.mat, &qb)?;
            seen.insert(m.to_rows().iter().flatten().map(fmt_q).collect::<Vec<_>>());
        }
        Ok(seen.len())
    };
    Ok(StabilizerOrders {
        gamma_s: stab.len(),
        tilde_s: stab.iter().filter(|g| fixes_pointwise(&g.mat, s_perp)).count(),
        bar_s: restrictions(s)?,
        tilde_s_perp: stab.iter().filter(|g| fixes_pointwise(&g.mat, s)).count(),
        bar_s_perp: restrictions(s_perp)?,
    })
}

// ---------------------------------------------------------------------------
// tangent action

/// Angles α_j ∈ [0, 1) of the action of g on the tangent space at a fixed
/// point with eigenvalue λ: the eigenvalues of g with one copy each of λ and
/// λ̄ removed, divided by λ.
pub fn tangent_angles(g: &IsometryElement, l: &QuadraticLattice) -> Result<Vec<Q>> {
    let (lambda, blocks, _) = select_eigenvalue(g, l)?;
    let mut eig: Vec<RootOfUnity> = Vec::new();
    for b in &blocks {
        for k in (0..b.d).filter(|k| k.gcd(&b.d) == 1 || b.d == 1) {
            for _ in 0..b.multiplicity {
                eig.push(RootOfUnity::new(k as i64, b.d));
            }
        }
    }
    for drop in [lambda, lambda.inv()] {
        let i = eig.iter().position(|e| *e == drop).expect("λ and λ̄ are eigenvalues");
        eig.remove(i);
    }
    let li = lambda.inv();
    let mut out: Vec<Q> = eig.iter().map(|e| e.mul(&li).angle()).collect();
    out.sort();
    Ok(out)
}

/// Σ (α_j − ⌊α_j⌋); a value ≥ 1 is the canonical-singularity condition.
pub fn reid_tai_sum(alphas: &[Q]) -> Q {
    alphas.iter().fold(Q::zero(), |acc, a| acc + a - Q::from_integer(floor_q(a)))
}

// ---------------------------------------------------------------------------
// json

fn qmat_json(m: &QMat) -> Value {
    Value::Array(m.to_rows().iter().map(|r| Value::Array(r.iter().map(|x| Value::String(fmt_q(x))).collect())).collect())
}

fn zbasis_json(b: &[ZVec]) -> Value {
    Value::Array(b.iter().map(|v| Value::Array(v.iter().map(|x| Value::String(x.to_string())).collect())).collect())
}
