//! Rational polyhedral cones and fans.
//!
//! A cone is kept in both descriptions at once: primitive extreme rays plus a
//! lineality basis, and primitive facet normals plus the equations of its
//! span.  Both are canonical (rays are projected orthogonally to the
//! lineality, spans are stored by their reduced row echelon basis), so derived
//! equality is equality of cones.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::dd::{canonical_cone, cone_from_inequalities};
use crate::error::{Error, Result};
use crate::linalg::{quotient_lattice, saturate, zq, QMat, ZVec};
use crate::rat::{fmt_q, primitive_int, qi, Q};

/// Work budget for lattice-point enumeration in [`RationalCone::hilbert_basis`].
pub const HILBERT_BUDGET: u128 = 4_000_000;

fn zdot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn qdot(a: &[BigInt], b: &[Q]) -> Q {
    a.iter().zip(b).map(|(x, y)| qi(x) * y).sum()
}

fn zvec(v: &[i64]) -> ZVec {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

fn neg(v: &[BigInt]) -> ZVec {
    v.iter().map(|x| -x).collect()
}

/// Reduced row echelon basis of span(v), rows scaled to primitive integers.
fn canon_span(v: &[ZVec], n: usize) -> Vec<ZVec> {
    if v.is_empty() {
        return Vec::new();
    }
    let m = QMat::from_rows(v.iter().map(|x| zq(x)).collect()).expect("rectangular");
    let (r, piv) = m.rref();
    (0..piv.len()).map(|i| primitive_int(r.row(i))).filter(|x| x.len() == n).collect()
}

/// Primitive orthogonal projection of v away from span(l).
fn project_out(v: &ZVec, l: &[ZVec]) -> ZVec {
    if l.is_empty() {
        return v.clone();
    }
    let lm = QMat::from_rows(l.iter().map(|x| zq(x)).collect()).expect("rectangular");
    let g = lm.mul(&lm.transpose());
    let rhs = lm.mul_vec(&zq(v));
    let c = g.solve(&rhs).expect("independent basis");
    let mut p = zq(v);
    for (ci, li) in c.iter().zip(l) {
        for (pj, lj) in p.iter_mut().zip(li) {
            *pj -= ci * qi(lj);
        }
    }
    if p.iter().all(|x| x.is_zero()) {
        return vec![BigInt::zero(); v.len()];
    }
    primitive_int(&p)
}

fn canon_rays(rays: Vec<ZVec>, lin: &[ZVec]) -> Vec<ZVec> {
    let mut out: Vec<ZVec> =
        rays.iter().map(|r| project_out(r, lin)).filter(|r| r.iter().any(|x| !x.is_zero())).collect();
    out.sort();
    out.dedup();
    out
}

fn gcd_of_minors(rows: &[ZVec], n: usize) -> BigInt {
    let d = rows.len();
    if d == 0 {
        return BigInt::one();
    }
    let mut g = BigInt::zero();
    let mut cols: Vec<usize> = (0..d).collect();
    loop {
        let sub: Vec<Vec<Q>> = rows.iter().map(|r| cols.iter().map(|&c| qi(&r[c])).collect()).collect();
        let det = QMat::from_rows(sub).expect("square").det().to_integer();
        g = g.gcd(&det);
        if g.is_one() {
            return g;
        }
        // next combination
        let mut i = d;
        loop {
            if i == 0 {
                return g;
            }
            i -= 1;
            if cols[i] != i + n - d {
                break;
            }
            if i == 0 {
                return g;
            }
        }
        cols[i] += 1;
        for j in i + 1..d {
            cols[j] = cols[j - 1] + 1;
        }
    }
}

/// A rational polyhedral cone in ℝⁿ.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RationalCone {
    n: usize,
    rays: Vec<ZVec>,
    lineality: Vec<ZVec>,
    normals: Vec<ZVec>,
    eqs: Vec<ZVec>,
}

impl PartialOrd for RationalCone {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for RationalCone {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.dim(), &self.rays, &self.lineality).cmp(&(other.dim(), &other.rays, &other.lineality))
    }
}

impl RationalCone {
    /// cone(gens) + span(lin).
    pub fn with_lineality(n: usize, gens: &[ZVec], lin: &[ZVec]) -> Result<Self> {
        if let Some(g) = gens.iter().chain(lin).find(|g| g.len() != n) {
            return Err(Error::DimensionMismatch(format!("generator of length {} in rank {n}", g.len())));
        }
        Ok(Self::build(n, gens, lin))
    }

    /// cone(gens).
    pub fn new(n: usize, gens: &[ZVec]) -> Result<Self> {
        Self::with_lineality(n, gens, &[])
    }

    /// Convenience constructor from small integer generators.
    pub fn from_i64(n: usize, gens: &[Vec<i64>]) -> Result<Self> {
        let g: Vec<ZVec> = gens.iter().map(|v| zvec(v)).collect();
        Self::new(n, &g)
    }

    /// The zero cone {0}.
    pub fn zero(n: usize) -> Self {
        Self::build(n, &[], &[])
    }

    fn build(n: usize, gens: &[ZVec], lin: &[ZVec]) -> Self {
        let (primal, dual) = canonical_cone(gens, lin, n);
        let lineality = canon_span(&primal.lineality, n);
        let eqs = canon_span(&dual.lineality, n);
        let rays = canon_rays(primal.rays, &lineality);
        let normals = canon_rays(dual.rays, &eqs);
        RationalCone { n, rays, lineality, normals, eqs }
    }

    pub fn rank(&self) -> usize {
        self.n
    }

    /// Primitive extreme rays (modulo the lineality space).
    pub fn rays(&self) -> &[ZVec] {
        &self.rays
    }

    pub fn lineality(&self) -> &[ZVec] {
        &self.lineality
    }

    /// Primitive inner facet normals (modulo the equations of the span).
    pub fn normals(&self) -> &[ZVec] {
        &self.normals
    }

    /// Equations e·x = 0 cutting out the linear span.
    pub fn equations(&self) -> &[ZVec] {
        &self.eqs
    }

    pub fn dim(&self) -> usize {
        self.n - self.eqs.len()
    }

    pub fn is_pointed(&self) -> bool {
        self.lineality.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.eqs.is_empty()
    }

    pub fn contains(&self, x: &[Q]) -> bool {
        self.eqs.iter().all(|e| qdot(e, x).is_zero()) && self.normals.iter().all(|a| !qdot(a, x).is_negative())
    }

    pub fn contains_int(&self, x: &[BigInt]) -> bool {
        self.eqs.iter().all(|e| zdot(e, x).is_zero()) && self.normals.iter().all(|a| !zdot(a, x).is_negative())
    }

    /// Membership in the relative interior.
    pub fn contains_relint(&self, x: &[Q]) -> bool {
        self.eqs.iter().all(|e| qdot(e, x).is_zero()) && self.normals.iter().all(|a| qdot(a, x).is_positive())
    }

    pub fn contains_cone(&self, other: &RationalCone) -> bool {
        other.rays.iter().all(|r| self.contains_int(r))
            && other.lineality.iter().all(|l| self.contains_int(l) && self.contains_int(&neg(l)))
    }

    /// The dual cone {a : a·x ≥ 0 on the cone}, recomputed from the facet side.
    pub fn dual_cone(&self) -> RationalCone {
        Self::build(self.n, &self.normals, &self.eqs)
    }

    pub fn intersect(&self, other: &RationalCone) -> RationalCone {
        let mut rows: Vec<Vec<Q>> = Vec::new();
        for c in [self, other] {
            rows.extend(c.normals.iter().map(|a| zq(a)));
            for e in &c.eqs {
                rows.push(zq(e));
                rows.push(zq(&neg(e)));
            }
        }
        let g = cone_from_inequalities(&rows, self.n);
        Self::build(self.n, &g.rays, &g.lineality)
    }

    /// Sum of the rays, made primitive; lies in the relative interior.
    pub fn barycenter(&self) -> ZVec {
        let mut s = vec![BigInt::zero(); self.n];
        for r in &self.rays {
            for (a, b) in s.iter_mut().zip(r) {
                *a += b;
            }
        }
        if s.iter().all(|x| x.is_zero()) {
            return s;
        }
        primitive_int(&zq(&s))
    }

    fn tight(&self, a: &ZVec) -> Vec<bool> {
        self.rays.iter().map(|r| zdot(a, r).is_zero()).collect()
    }

    /// All faces, from the minimal face (the lineality space) up to the cone.
    pub fn faces(&self) -> Vec<RationalCone> {
        let tight: Vec<Vec<bool>> = self.normals.iter().map(|a| self.tight(a)).collect();
        let all: Vec<bool> = vec![true; self.rays.len()];
        let mut seen: BTreeSet<Vec<bool>> = BTreeSet::new();
        let mut stack = vec![all];
        while let Some(s) = stack.pop() {
            if !seen.insert(s.clone()) {
                continue;
            }
            for t in &tight {
                let next: Vec<bool> = s.iter().zip(t).map(|(a, b)| *a && *b).collect();
                if next != s {
                    // close: rays tight on every normal that is tight on `next`
                    let closing: Vec<&Vec<bool>> = tight
                        .iter()
                        .filter(|u| next.iter().zip(u.iter()).all(|(x, y)| !*x || *y))
                        .collect();
                    let closed: Vec<bool> =
                        (0..next.len()).map(|i| closing.iter().all(|u| u[i])).collect();
                    // a set of rays tight on no normal at all is the whole cone again
                    let closed = if closing.is_empty() { s.clone() } else { closed };
                    stack.push(closed);
                }
            }
        }
        let mut out: Vec<RationalCone> = seen
            .into_iter()
            .map(|s| {
                let g: Vec<ZVec> = self.rays.iter().zip(&s).filter(|(_, b)| **b).map(|(r, _)| r.clone()).collect();
                Self::build(self.n, &g, &self.lineality)
            })
            .collect();
        out.sort();
        out.dedup();
        out
    }

    /// Whether `self` is a face of `other`.
    pub fn is_face_of(&self, other: &RationalCone) -> bool {
        if !other.contains_cone(self) {
            return false;
        }
        let supporting: Vec<&ZVec> = other
            .normals
            .iter()
            .filter(|a| {
                self.rays.iter().all(|r| zdot(a, r).is_zero()) && self.lineality.iter().all(|l| zdot(a, l).is_zero())
            })
            .collect();
        let g: Vec<ZVec> = other
            .rays
            .iter()
            .filter(|r| supporting.iter().all(|a| zdot(a, r).is_zero()))
            .cloned()
            .collect();
        Self::build(self.n, &g, &other.lineality) == *self
    }

    /// Lattice index of the rays in N ∩ span: `None` unless pointed and simplicial.
    pub fn multiplicity(&self) -> Option<BigInt> {
        if !self.is_pointed() || self.rays.len() != self.dim() {
            return None;
        }
        Some(gcd_of_minors(&self.rays, self.n))
    }

    pub fn is_simplicial(&self) -> bool {
        self.is_pointed() && self.rays.len() == self.dim()
    }

    /// Rays form part of a ℤ-basis of the lattice.
    pub fn is_regular(&self) -> bool {
        self.multiplicity().map(|m| m.is_one()).unwrap_or(false)
    }

    /// Where to star-subdivide to lower the multiplicity: `(face, v)` with v in
    /// the relative interior of the face. `None` for regular cones.
    pub fn resolution_point(&self) -> Option<(RationalCone, ZVec)> {
        if !self.is_simplicial() {
            return Some((self.clone(), self.barycenter()));
        }
        if self.is_regular() {
            return None;
        }
        let sum: ZVec = (0..self.n).map(|j| self.rays.iter().map(|r| &r[j]).sum()).collect();
        let g = sum.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
        if g > BigInt::one() {
            return Some((self.clone(), self.barycenter()));
        }
        // lattice points Σ λᵢ rᵢ with 0 ≤ λᵢ < 1, most central first
        let cols: Vec<Vec<Q>> = self.rays.iter().map(|r| zq(r)).collect();
        let rm = QMat::from_cols(&cols).ok()?;
        let mut lo = vec![BigInt::zero(); self.n];
        let mut hi = vec![BigInt::zero(); self.n];
        for r in &self.rays {
            for j in 0..self.n {
                if r[j].is_negative() {
                    lo[j] += &r[j];
                } else {
                    hi[j] += &r[j];
                }
            }
        }
        let mut best: Option<((usize, Q, std::cmp::Reverse<ZVec>), ZVec, Vec<bool>)> = None;
        let mut x = lo.clone();
        'scan: loop {
            if x.iter().any(|v| !v.is_zero()) && self.eqs.iter().all(|e| zdot(e, &x).is_zero()) {
                if let Some(lam) = rm.solve(&zq(&x)) {
                    if lam.iter().all(|l| !l.is_negative() && l < &Q::one()) {
                        let support: Vec<bool> = lam.iter().map(|l| l.is_positive()).collect();
                        let k = support.iter().filter(|b| **b).count();
                        let m = lam.iter().filter(|l| l.is_positive()).min().cloned().unwrap_or_else(Q::zero);
                        let key = (k, m, std::cmp::Reverse(x.clone()));
                        if best.as_ref().map(|(b, _, _)| key > *b).unwrap_or(true) {
                            best = Some((key, x.clone(), support));
                        }
                    }
                }
            }
            let mut j = 0;
            loop {
                if j == self.n {
                    break 'scan;
                }
                x[j] += 1;
                if x[j] > hi[j] {
                    x[j] = lo[j].clone();
                    j += 1;
                } else {
                    break;
                }
            }
        }
        let (_, v, support) = best?;
        let face_rays: Vec<ZVec> =
            self.rays.iter().zip(&support).filter(|(_, s)| **s).map(|(r, _)| r.clone()).collect();
        Some((Self::build(self.n, &face_rays, &[]), primitive_int(&zq(&v))))
    }

    /// Minimal generators of the monoid cone ∩ ℤⁿ. For cones with lineality
    /// the result is ±(lineality basis) together with lifts of the Hilbert
    /// basis of the pointed quotient.
    pub fn hilbert_basis(&self) -> Result<Vec<ZVec>> {
        let n = self.n;
        if self.rays.is_empty() && self.lineality.is_empty() {
            return Ok(Vec::new());
        }
        // lattice of the span, and coordinates in it
        let mut span_gens: Vec<Vec<Q>> = self.rays.iter().map(|r| zq(r)).collect();
        span_gens.extend(self.lineality.iter().map(|l| zq(l)));
        let basis = saturate(&span_gens, n);
        let k = basis.len();
        let bt = QMat::from_cols(&basis.iter().map(|b| zq(b)).collect::<Vec<_>>())?;
        let coords = |v: &ZVec| -> ZVec {
            bt.solve(&zq(v)).expect("in span").iter().map(|x| x.to_integer()).collect()
        };
        let lin_c: Vec<ZVec> = self.lineality.iter().map(coords).collect();
        let lin_sat = saturate(&lin_c.iter().map(|v| zq(v)).collect::<Vec<_>>(), k);
        let (kf, lifts) = quotient_lattice(&lin_sat, k);
        let m = kf.len();
        let proj = |v: &ZVec| -> ZVec { kf.iter().map(|f| zdot(f, v)).collect() };
        let rays_q: Vec<ZVec> = self.rays.iter().map(|r| proj(&coords(r))).collect();
        let pointed = pointed_hilbert(&rays_q, m)?;
        let to_ambient = |c: &ZVec| -> ZVec {
            (0..n).map(|j| c.iter().zip(&basis).map(|(ci, b)| ci * &b[j]).sum()).collect()
        };
        let mut out: Vec<ZVec> = Vec::new();
        for h in &pointed {
            // lift from the quotient, then back to ambient coordinates
            let mut c = vec![BigInt::zero(); k];
            for (hi, w) in h.iter().zip(&lifts) {
                for (cj, wj) in c.iter_mut().zip(w) {
                    *cj += hi * wj;
                }
            }
            out.push(to_ambient(&c));
        }
        for l in &lin_sat {
            let a = to_ambient(l);
            out.push(neg(&a));
            out.push(a);
        }
        out.sort();
        out.dedup();
        Ok(out)
    }

    /// Toric chart: monoid generators of σ^∨ ∩ M and the binomial relations.
    pub fn chart_presentation(&self) -> Result<ChartPresentation> {
        let generators = self.dual_cone().hilbert_basis()?;
        let cols: Vec<Vec<Q>> = (0..self.n)
            .map(|i| generators.iter().map(|g| qi(&g[i])).collect())
            .collect();
        let kernel = crate::linalg::int_kernel(&cols, generators.len());
        let mut relations: Vec<Relation> = kernel
            .into_iter()
            .map(|mut c| {
                if c.iter().find(|x| !x.is_zero()).map(|x| x.is_negative()).unwrap_or(false) {
                    c = neg(&c);
                }
                Relation::from_coefficients(&c)
            })
            .collect();
        relations.sort();
        Ok(ChartPresentation { generators, relations })
    }

    pub fn to_json(&self) -> Value {
        let rays: Vec<Value> = self.rays.iter().map(|r| json_int_vec(r)).collect();
        let mut v = json!({ "rays": rays });
        if !self.lineality.is_empty() {
            v["lineality"] = Value::Array(self.lineality.iter().map(|r| json_int_vec(r)).collect());
        }
        v
    }
}

impl fmt::Display for RationalCone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rs: Vec<String> = self
            .rays
            .iter()
            .map(|r| format!("({})", r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")))
            .collect();
        if rs.is_empty() && self.lineality.is_empty() {
            return write!(f, "{{0}}");
        }
        write!(f, "cone({})", rs.join(", "))?;
        if !self.lineality.is_empty() {
            write!(f, " + span of {} vectors", self.lineality.len())?;
        }
        Ok(())
    }
}

fn json_int_vec(v: &[BigInt]) -> Value {
    Value::Array(
        v.iter()
            .map(|x| match x.to_i64() {
                Some(i) => json!(i),
                None => json!(x.to_string()),
            })
            .collect(),
    )
}

/// Hilbert basis of a pointed full-dimensional cone in ℤᵐ, by enumerating the
/// lattice points of the bounding box of the generators' zonotope.
fn pointed_hilbert(rays: &[ZVec], m: usize) -> Result<Vec<ZVec>> {
    if m == 0 {
        return Ok(Vec::new());
    }
    let cone = RationalCone::build(m, rays, &[]);
    let mut lo = vec![BigInt::zero(); m];
    let mut hi = vec![BigInt::zero(); m];
    for r in rays {
        for j in 0..m {
            if r[j].is_negative() {
                lo[j] += &r[j];
            } else {
                hi[j] += &r[j];
            }
        }
    }
    let mut total: u128 = 1;
    for j in 0..m {
        let w = (&hi[j] - &lo[j] + 1u32).to_u128().unwrap_or(u128::MAX);
        total = total.saturating_mul(w);
    }
    if total > HILBERT_BUDGET {
        return Err(Error::BudgetExceeded(total));
    }
    // a grading that is positive on the cone minus the origin
    let grade: ZVec = (0..m).map(|j| cone.normals.iter().map(|a| &a[j]).sum()).collect();
    let mut cands: Vec<(BigInt, ZVec)> = Vec::new();
    let mut x = lo.clone();
    loop {
        if x.iter().any(|v| !v.is_zero()) && cone.contains_int(&x) {
            cands.push((zdot(&grade, &x), x.clone()));
        }
        let mut j = 0;
        loop {
            if j == m {
                cands.sort();
                let mut basis: Vec<ZVec> = Vec::new();
                for (i, (gx, xv)) in cands.iter().enumerate() {
                    let reducible = cands[..i].iter().any(|(gy, y)| {
                        gy < gx && {
                            let d: ZVec = xv.iter().zip(y).map(|(a, b)| a - b).collect();
                            cone.contains_int(&d)
                        }
                    });
                    if !reducible {
                        basis.push(xv.clone());
                    }
                }
                basis.sort();
                return Ok(basis);
            }
            x[j] += 1;
            if x[j] > hi[j] {
                x[j] = lo[j].clone();
                j += 1;
            } else {
                break;
            }
        }
    }
}

/// Variable name of the i-th chart generator.
pub fn variable_name(i: usize) -> String {
    const LETTERS: [&str; 6] = ["u", "v", "w", "x", "y", "z"];
    if i < LETTERS.len() {
        LETTERS[i].to_string()
    } else {
        format!("t{}", i + 1)
    }
}

/// Binomial relation ∏ lhs^a = ∏ rhs^b among chart generators.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Relation {
    pub lhs: Vec<(usize, u64)>,
    pub rhs: Vec<(usize, u64)>,
}

impl Relation {
    fn from_coefficients(c: &[BigInt]) -> Self {
        let mut lhs = Vec::new();
        let mut rhs = Vec::new();
        for (i, x) in c.iter().enumerate() {
            let e = x.abs().to_u64().expect("small relation exponent");
            if x.is_positive() {
                lhs.push((i, e));
            } else if x.is_negative() {
                rhs.push((i, e));
            }
        }
        Relation { lhs, rhs }
    }

    pub fn coefficients(&self, len: usize) -> Vec<i64> {
        let mut c = vec![0i64; len];
        for &(i, e) in &self.lhs {
            c[i] += e as i64;
        }
        for &(i, e) in &self.rhs {
            c[i] -= e as i64;
        }
        c
    }
}

fn monomial(side: &[(usize, u64)]) -> String {
    if side.is_empty() {
        return "1".into();
    }
    side.iter()
        .map(|&(i, e)| if e == 1 { variable_name(i) } else { format!("{}^{}", variable_name(i), e) })
        .collect::<Vec<_>>()
        .join("*")
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", monomial(&self.lhs), monomial(&self.rhs))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChartPresentation {
    pub generators: Vec<ZVec>,
    pub relations: Vec<Relation>,
}

impl ChartPresentation {
    pub fn to_json(&self) -> Value {
        let gens: Vec<Value> = self
            .generators
            .iter()
            .enumerate()
            .map(|(i, g)| json!({ "name": variable_name(i), "exponent": json_int_vec(g) }))
            .collect();
        let rels: Vec<Value> = self.relations.iter().map(|r| json!(r.to_string())).collect();
        json!({ "generators": gens, "relations": rels })
    }
}

// ---------------------------------------------------------------------------
// Fans
// ---------------------------------------------------------------------------

/// First problem found by [`Fan::validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    WrongRank { cone: usize },
    NotPointed { cone: usize },
    MissingFace { cone: usize, face: RationalCone },
    BadIntersection { a: usize, b: usize, meet: RationalCone },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::WrongRank { cone } => write!(f, "cone {cone} lives in a lattice of the wrong rank"),
            Violation::NotPointed { cone } => write!(f, "cone {cone} contains a line"),
            Violation::MissingFace { cone, face } => write!(f, "face {face} of cone {cone} is not in the fan"),
            Violation::BadIntersection { a, b, meet } => {
                write!(f, "cones {a} and {b} meet in {meet}, which is not a face of both")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FanReport {
    pub valid: bool,
    pub cones: usize,
    pub violation: Option<Violation>,
}

/// A finite collection of cones in ℝⁿ, kept sorted by dimension then rays.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fan {
    n: usize,
    cones: Vec<RationalCone>,
}

impl Fan {
    /// The cones exactly as given (sorted, duplicates dropped).
    pub fn from_cones(n: usize, mut cones: Vec<RationalCone>) -> Self {
        cones.sort();
        cones.dedup();
        Fan { n, cones }
    }

    /// The given cones together with all of their faces.
    pub fn with_faces(n: usize, maximal: Vec<RationalCone>) -> Self {
        let mut all: BTreeSet<RationalCone> = BTreeSet::new();
        for c in maximal {
            if all.contains(&c) {
                continue;
            }
            all.extend(c.faces());
        }
        if all.is_empty() {
            all.insert(RationalCone::zero(n));
        }
        Fan { n, cones: all.into_iter().collect() }
    }

    /// Convenience: maximal cones from small integer rays, closed under faces.
    pub fn from_i64(n: usize, maximal: &[Vec<Vec<i64>>]) -> Result<Self> {
        let cones = maximal.iter().map(|c| RationalCone::from_i64(n, c)).collect::<Result<Vec<_>>>()?;
        Ok(Self::with_faces(n, cones))
    }

    /// Parse `{"rank": n, "cones": [{"rays": [[..]]}]}`; the listed cones are
    /// closed under faces when `close` is set.
    pub fn from_json(v: &Value, close: bool) -> Result<Self> {
        let n = v
            .get("rank")
            .and_then(|x| x.as_u64())
            .ok_or_else(|| Error::Parse("fan: missing integer \"rank\"".into()))? as usize;
        let cones = v
            .get("cones")
            .and_then(|x| x.as_array())
            .ok_or_else(|| Error::Parse("fan: missing array \"cones\"".into()))?;
        let mut out = Vec::new();
        for c in cones {
            let rays = c
                .get("rays")
                .and_then(|x| x.as_array())
                .ok_or_else(|| Error::Parse("fan: cone without \"rays\"".into()))?;
            let mut gens = Vec::new();
            for r in rays {
                let r = r.as_array().ok_or_else(|| Error::Parse("fan: ray is not an array".into()))?;
                let mut g = Vec::new();
                for x in r {
                    g.push(parse_json_int(x)?);
                }
                gens.push(g);
            }
            out.push(RationalCone::new(n, &gens)?);
        }
        Ok(if close { Self::with_faces(n, out) } else { Self::from_cones(n, out) })
    }

    pub fn to_json(&self) -> Value {
        json!({
            "rank": self.n,
            "cones": self.maximal_cones().iter().map(|c| c.to_json()).collect::<Vec<_>>(),
        })
    }

    pub fn rank(&self) -> usize {
        self.n
    }

    pub fn cones(&self) -> &[RationalCone] {
        &self.cones
    }

    pub fn contains_cone(&self, c: &RationalCone) -> bool {
        self.cones.binary_search(c).is_ok()
    }

    /// Cones that are not a proper face of another member.
    pub fn maximal_cones(&self) -> Vec<&RationalCone> {
        self.cones
            .iter()
            .filter(|c| !self.cones.iter().any(|d| d != *c && d.dim() > c.dim() && d.contains_cone(c)))
            .collect()
    }

    /// Cones of dimension n.
    pub fn top_cones(&self) -> Vec<&RationalCone> {
        self.cones.iter().filter(|c| c.dim() == self.n).collect()
    }

    pub fn rays(&self) -> Vec<ZVec> {
        let mut r: Vec<ZVec> = self.cones.iter().filter(|c| c.dim() == 1).map(|c| c.rays[0].clone()).collect();
        r.sort();
        r
    }

    /// Face closure and the pairwise-intersection condition; first failure wins.
    pub fn validate(&self) -> FanReport {
        let report = |violation: Option<Violation>| FanReport {
            valid: violation.is_none(),
            cones: self.cones.len(),
            violation,
        };
        for (i, c) in self.cones.iter().enumerate() {
            if c.n != self.n {
                return report(Some(Violation::WrongRank { cone: i }));
            }
            if !c.is_pointed() {
                return report(Some(Violation::NotPointed { cone: i }));
            }
        }
        for (i, c) in self.cones.iter().enumerate() {
            if let Some(face) = c.faces().into_iter().find(|f| !self.contains_cone(f)) {
                return report(Some(Violation::MissingFace { cone: i, face }));
            }
        }
        for i in 0..self.cones.len() {
            for j in i + 1..self.cones.len() {
                let (a, b) = (&self.cones[i], &self.cones[j]);
                let meet = a.intersect(b);
                if !meet.is_face_of(a) || !meet.is_face_of(b) {
                    return report(Some(Violation::BadIntersection { a: i, b: j, meet }));
                }
            }
        }
        report(None)
    }

    /// Whether the support is all of ℝⁿ (assumes a valid fan): every facet of
    /// a top cone lies in exactly two top cones, and each chamber's interior
    /// sample lies in no other chamber.
    pub fn is_complete(&self) -> bool {
        let top = self.top_cones();
        if self.n == 0 {
            return true;
        }
        if top.is_empty() {
            return false;
        }
        for c in &top {
            for f in c.faces().iter().filter(|f| f.dim() + 1 == self.n) {
                let count = top.iter().filter(|d| f.is_face_of(d)).count();
                if count != 2 {
                    return false;
                }
            }
            let x = zq(&c.barycenter());
            if top.iter().any(|d| d != c && d.contains_relint(&x)) {
                return false;
            }
        }
        true
    }

    pub fn support_contains(&self, x: &[Q]) -> bool {
        self.cones.iter().any(|c| c.contains(x))
    }

    pub fn is_regular(&self) -> bool {
        self.cones.iter().all(|c| c.is_regular())
    }

    /// Star subdivision at primitive barycenters of the selected cones,
    /// largest cones first.
    pub fn barycentric_subdivide<F: Fn(&RationalCone) -> bool>(&self, select: F) -> Fan {
        let mut targets: Vec<RationalCone> =
            self.cones.iter().filter(|c| c.dim() >= 2 && select(c)).cloned().collect();
        targets.sort_by(|a, b| b.dim().cmp(&a.dim()).then(a.cmp(b)));
        let mut cur = self.clone();
        for sigma in targets {
            if cur.contains_cone(&sigma) {
                cur = cur.star_subdivide(&sigma, &sigma.barycenter());
            }
        }
        cur
    }

    /// Star subdivision at v ∈ relint σ.
    pub fn star_subdivide(&self, sigma: &RationalCone, v: &ZVec) -> Fan {
        let mut keep: BTreeSet<RationalCone> = BTreeSet::new();
        let mut star: Vec<&RationalCone> = Vec::new();
        for c in &self.cones {
            if c.contains_cone(sigma) {
                star.push(c);
            } else {
                keep.insert(c.clone());
            }
        }
        for tau in star {
            for rho in tau.faces() {
                if rho.contains_cone(sigma) {
                    continue;
                }
                let mut g = rho.rays.clone();
                g.push(v.clone());
                keep.insert(RationalCone::build(self.n, &g, &[]));
            }
        }
        Fan { n: self.n, cones: keep.into_iter().collect() }
    }

    /// Repeatedly star-subdivide the non-regular cones until the fan is
    /// regular or `max_rounds` is reached; returns the fan and the rounds used.
    ///
    /// Each cone is split at its primitive barycenter when that lowers the
    /// multiplicity (or the cone is not simplicial); otherwise at the most
    /// central lattice point of its fundamental parallelepiped, which always
    /// does.  Pure barycentric iteration can cycle forever in dimension 2
    /// (e.g. cone((1,0),(1,5))), so the fallback is what guarantees termination.
    pub fn regularize(&self, max_rounds: usize) -> (Fan, usize) {
        let mut cur = self.clone();
        for round in 0..max_rounds {
            if cur.is_regular() {
                return (cur, round);
            }
            let mut targets: Vec<RationalCone> = cur.cones.iter().filter(|c| !c.is_regular()).cloned().collect();
            targets.sort_by(|a, b| b.dim().cmp(&a.dim()).then(a.cmp(b)));
            for sigma in targets {
                if !cur.contains_cone(&sigma) {
                    continue;
                }
                if let Some((face, v)) = sigma.resolution_point() {
                    if cur.contains_cone(&face) {
                        cur = cur.star_subdivide(&face, &v);
                    }
                }
            }
        }
        let done = cur.is_regular();
        (cur, if done { max_rounds } else { max_rounds + 1 })
    }

    /// Orbit of σ: dimension n − dim σ; its closure contains the orbits of
    /// every τ having σ as a face.
    pub fn orbit_record(&self, sigma: &RationalCone) -> Result<OrbitRecord> {
        if !self.contains_cone(sigma) {
            return Err(Error::ConeNotInFan);
        }
        let closure: Vec<RationalCone> =
            self.cones.iter().filter(|t| sigma.is_face_of(t)).cloned().collect();
        Ok(OrbitRecord { dim: self.n - sigma.dim(), closure })
    }
}

fn parse_json_int(x: &Value) -> Result<BigInt> {
    if let Some(i) = x.as_i64() {
        return Ok(BigInt::from(i));
    }
    if let Some(s) = x.as_str() {
        return s.trim().parse::<BigInt>().map_err(|_| Error::Parse(format!("not an integer: {s}")));
    }
    Err(Error::Parse(format!("not an integer: {x}")))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbitRecord {
    pub dim: usize,
    pub closure: Vec<RationalCone>,
}

// ---------------------------------------------------------------------------
// Piecewise-linear support functions
// ---------------------------------------------------------------------------

/// Shape of a piecewise-linear function across the maximal cones.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Convexity {
    /// max of the linear pieces (the usual convexity; forced on complete fans)
    Max { strict: bool },
    /// min of the linear pieces (superadditive; the shape of support functions on open cones)
    Min { strict: bool },
    Neither,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PLReport {
    pub linear_on_cones: bool,
    pub positive: bool,
    pub integral: bool,
    pub convexity: Convexity,
}

impl PLReport {
    /// Positive, integral, and the maximal cones are exactly the domains of linearity.
    pub fn certifies_projective(&self) -> bool {
        self.linear_on_cones
            && self.positive
            && self.integral
            && matches!(self.convexity, Convexity::Max { strict: true } | Convexity::Min { strict: true })
    }
}

/// A function given by its values on the rays of a fan.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PLSupport {
    pub values: BTreeMap<ZVec, Q>,
}

impl PLSupport {
    pub fn new(values: BTreeMap<ZVec, Q>) -> Self {
        PLSupport { values }
    }

    /// The linear functional agreeing with the ray values on σ (one solution
    /// when σ is not full-dimensional).
    fn piece(&self, sigma: &RationalCone) -> Result<Option<Vec<Q>>> {
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for r in &sigma.rays {
            let v = self
                .values
                .get(r)
                .ok_or_else(|| Error::InvalidInput(format!("no value for ray {r:?}")))?;
            rows.push(zq(r));
            rhs.push(v.clone());
        }
        if rows.is_empty() {
            return Ok(Some(vec![Q::zero(); sigma.n]));
        }
        Ok(QMat::from_rows(rows)?.solve(&rhs))
    }

    pub fn evaluate(&self, fan: &Fan, x: &[Q]) -> Result<Q> {
        let c = fan
            .cones
            .iter()
            .rev()
            .find(|c| c.contains(x))
            .ok_or_else(|| Error::InvalidInput("point outside the support".into()))?;
        let m = self.piece(c)?.ok_or_else(|| Error::InvalidInput("function is not linear on a cone".into()))?;
        Ok(m.iter().zip(x).map(|(a, b)| a * b).sum())
    }

    pub fn check(&self, fan: &Fan) -> Result<PLReport> {
        let maximal = fan.maximal_cones();
        let mut pieces = Vec::new();
        let mut linear = true;
        for c in &maximal {
            match self.piece(c)? {
                Some(m) => pieces.push(m),
                None => {
                    linear = false;
                    pieces.push(vec![Q::zero(); fan.n]);
                }
            }
        }
        let positive = fan.rays().iter().all(|r| self.values.get(r).map(|v| v.is_positive()).unwrap_or(false));
        let mut integral = true;
        for (c, m) in maximal.iter().zip(&pieces) {
            let span: Vec<Vec<Q>> = c.rays.iter().map(|r| zq(r)).collect();
            for b in saturate(&span, fan.n) {
                if !qdot(&b, m).is_integer() {
                    integral = false;
                }
            }
        }
        let (mut is_max, mut is_min, mut strict_max, mut strict_min) = (true, true, true, true);
        for (c, m) in maximal.iter().zip(&pieces) {
            for r in fan.rays() {
                if c.rays.contains(&r) {
                    continue;
                }
                let here = qdot(&r, m);
                let there = self.values.get(&r).cloned().unwrap_or_else(Q::zero);
                if here > there {
                    is_max = false;
                }
                if here < there {
                    is_min = false;
                }
                if here >= there {
                    strict_max = false;
                }
                if here <= there {
                    strict_min = false;
                }
            }
        }
        let convexity = if is_max && (strict_max || !is_min) {
            Convexity::Max { strict: strict_max }
        } else if is_min {
            Convexity::Min { strict: strict_min }
        } else {
            Convexity::Neither
        };
        Ok(PLReport { linear_on_cones: linear, positive, integral, convexity })
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.values
                .iter()
                .map(|(r, v)| json!({ "ray": json_int_vec(r), "value": fmt_q(v) }))
                .collect(),
        )
    }
}
