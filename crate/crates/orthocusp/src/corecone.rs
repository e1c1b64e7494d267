//! Kernels, cores and co-cores of self-adjoint cones, and the fans cut out
//! by their support hyperplanes.
//!
//! Everything here is windowed: lattice points are enumerated in the box of
//! sup-norm ≤ H, the closed cone is replaced by the rational polyhedral cone
//! spanned by its window lattice points, and answers are only returned when
//! the H and 2H windows agree on them.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::dd::cone_from_inequalities;
use crate::error::{Error, Result};
use crate::fan::{Fan, FanReport, PLReport, PLSupport, RationalCone};
use crate::linalg::{rank_of, zq, QMat, ZVec};
use crate::qform::{parse_matrix, parse_rational_value, QuadraticLattice};
use crate::rat::{abs_q, fmt_q, primitive_int, q, qi, Q};

/// An open cone {q(y) > 0, ⟨ray, y⟩ > 0} that is self-dual for `inner`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SelfAdjointCone {
    gram: QMat,
    ray: Vec<Q>,
    inner: QMat,
    gz: Vec<Vec<i128>>,
    rz: Vec<i128>, // inner · ray, scaled to integers
}

fn int_scaled(m: &QMat) -> Vec<Vec<i128>> {
    let mut d = BigInt::one();
    for i in 0..m.rows() {
        for x in m.row(i) {
            d = num_integer::lcm(d, x.denom().clone());
        }
    }
    (0..m.rows())
        .map(|i| m.row(i).iter().map(|x| (x * qi(&d)).to_integer().to_i128().expect("small form")).collect())
        .collect()
}

fn to_q(v: &[i64]) -> Vec<Q> {
    v.iter().map(|&x| q(x)).collect()
}

fn sup_norm(v: &[Q]) -> Q {
    v.iter().map(abs_q).max().unwrap_or_else(Q::zero)
}

impl SelfAdjointCone {
    pub fn new(gram: QMat, ray: Vec<Q>, inner: QMat) -> Result<Self> {
        let n = gram.rows();
        if !gram.is_square() || !inner.is_square() || inner.rows() != n || ray.len() != n {
            return Err(Error::DimensionMismatch("gram, inner and ray must share one dimension".into()));
        }
        if !gram.is_symmetric() || !inner.is_symmetric() {
            return Err(Error::InvalidInput("gram and inner must be symmetric".into()));
        }
        let (p, m) = QuadraticLattice::new(gram.clone())?.signature()?;
        if p != 1 {
            return Err(Error::InvalidInput(format!("gram must have signature (1, {}), found ({p}, {m})", n - 1)));
        }
        if QuadraticLattice::new(inner.clone())?.signature()? != (n, 0) {
            return Err(Error::InvalidInput("inner product must be positive definite".into()));
        }
        let iray = inner.mul_vec(&ray);
        // the hyperplane ⟨ray, ·⟩ = 0 must be negative for q, so the closure is {q ≥ 0, ⟨ray, ·⟩ ≥ 0}
        let perp = QMat::from_rows(vec![iray.clone()])?.kernel();
        if !perp.is_empty() {
            let b = QMat::from_cols(&perp)?;
            let restricted = b.transpose().mul(&gram).mul(&b);
            if QuadraticLattice::new(restricted)?.signature()? != (0, n - 1) {
                return Err(Error::InvalidInput("positivity ray does not select a component".into()));
            }
        }
        let gz = int_scaled(&gram);
        let rz = primitive_int(&iray).iter().map(|x| x.to_i128().expect("small ray")).collect();
        let c = SelfAdjointCone { gram, ray, inner, gz, rz };
        if !c.contains_open(&c.ray) {
            return Err(Error::InvalidInput("positivity ray must lie in the cone".into()));
        }
        Ok(c)
    }

    /// Open first quadrant: q = 2xy, ray (1,1), standard inner product.
    pub fn first_quadrant() -> Self {
        Self::new(QMat::from_i64(&[&[0, 1], &[1, 0]]), to_q(&[1, 1]), QMat::identity(2)).expect("valid")
    }

    /// {x₀² − Σ dᵢxᵢ² > 0, x₀ > 0}, self-dual for diag(1, d).
    pub fn diagonal_light_cone(d: &[i64]) -> Result<Self> {
        let mut g = vec![q(1)];
        g.extend(d.iter().map(|&x| q(-x)));
        let mut inner = vec![q(1)];
        inner.extend(d.iter().map(|&x| q(x)));
        let mut ray = vec![q(0); d.len() + 1];
        ray[0] = q(1);
        Self::new(QMat::diag(&g), ray, QMat::diag(&inner))
    }

    /// b = (0 1; 1 0) ⊕ (−A) with A positive definite; Ω = {b(v,v) > 0, v₁ > 0},
    /// self-adjoint for x₁² + x₂² + x₃ᵗAx₃.
    pub fn light_cone(a: &QMat) -> Result<Self> {
        let k = a.rows();
        let n = k + 2;
        let mut g = QMat::zeros(n, n);
        let mut inner = QMat::zeros(n, n);
        g[(0, 1)] = q(1);
        g[(1, 0)] = q(1);
        inner[(0, 0)] = q(1);
        inner[(1, 1)] = q(1);
        for i in 0..k {
            for j in 0..k {
                g[(i + 2, j + 2)] = -a[(i, j)].clone();
                inner[(i + 2, j + 2)] = a[(i, j)].clone();
            }
        }
        let mut ray = vec![q(0); n];
        ray[0] = q(1);
        ray[1] = q(1);
        Self::new(g, ray, inner)
    }

    pub fn dim(&self) -> usize {
        self.ray.len()
    }

    pub fn gram(&self) -> &QMat {
        &self.gram
    }

    pub fn inner(&self) -> &QMat {
        &self.inner
    }

    pub fn ray(&self) -> &[Q] {
        &self.ray
    }

    pub fn pair(&self, x: &[Q], y: &[Q]) -> Q {
        self.inner.bilinear(x, y)
    }

    pub fn q(&self, x: &[Q]) -> Q {
        self.gram.bilinear(x, x)
    }

    fn ray_pair(&self, x: &[Q]) -> Q {
        self.rz.iter().zip(x).map(|(a, b)| Q::from_integer(BigInt::from(*a)) * b).sum()
    }

    pub fn contains_open(&self, x: &[Q]) -> bool {
        self.q(x).is_positive() && self.ray_pair(x).is_positive()
    }

    pub fn contains_closed(&self, x: &[Q]) -> bool {
        !self.q(x).is_negative() && !self.ray_pair(x).is_negative()
    }

    fn qz(&self, p: &[i64]) -> i128 {
        let mut s = 0i128;
        for (i, row) in self.gz.iter().enumerate() {
            for (j, g) in row.iter().enumerate() {
                s += g * p[i] as i128 * p[j] as i128;
            }
        }
        s
    }

    fn rayz(&self, p: &[i64]) -> i128 {
        self.rz.iter().zip(p).map(|(a, b)| a * *b as i128).sum()
    }

    pub fn contains_open_int(&self, p: &[i64]) -> bool {
        self.qz(p) > 0 && self.rayz(p) > 0
    }

    pub fn contains_closed_int(&self, p: &[i64]) -> bool {
        self.qz(p) >= 0 && self.rayz(p) >= 0
    }

    /// g preserves the form and maps the cone to itself.
    pub fn preserves(&self, g: &QMat) -> bool {
        g.rows() == self.dim()
            && g.is_square()
            && g.transpose().mul(&self.gram).mul(g) == self.gram
            && self.contains_open(&g.mul_vec(&self.ray))
    }

    /// Cone file `{"gram", optional "inner", optional "ray"}`. Without the
    /// optional keys, Gram matrices of shape (0 1; 1 0) ⊕ (−A) and
    /// diag(1, −d) get the light-cone defaults.
    pub fn from_json(v: &Value) -> Result<Self> {
        let gram = QuadraticLattice::from_json(v)?.gram().clone();
        let n = gram.rows();
        let inner = match v.get("inner") {
            Some(x) => Some(QMat::from_rows(parse_matrix(x.as_array().ok_or_else(|| Error::Parse("inner must be an array".into()))?)?)?),
            None => None,
        };
        let ray = match v.get("ray") {
            Some(x) => Some(
                x.as_array()
                    .ok_or_else(|| Error::Parse("ray must be an array".into()))?
                    .iter()
                    .map(parse_rational_value)
                    .collect::<Result<Vec<_>>>()?,
            ),
            None => None,
        };
        if let (Some(inner), Some(ray)) = (inner.clone(), ray.clone()) {
            return Self::new(gram, ray, inner);
        }
        if inner.is_some() || ray.is_some() {
            return Err(Error::Parse("cone file needs both inner and ray or neither".into()));
        }
        let zero = |i: usize, j: usize| gram[(i, j)].is_zero();
        if n == 2 && zero(0, 0) && zero(1, 1) && gram[(0, 1)] == q(1) {
            return Ok(Self::first_quadrant());
        }
        if n >= 3 && zero(0, 0) && zero(1, 1) && gram[(0, 1)] == q(1) && (2..n).all(|j| zero(0, j) && zero(1, j)) {
            let idx: Vec<usize> = (2..n).collect();
            return Self::light_cone(&gram.submatrix(&idx, &idx).scale(&q(-1)));
        }
        let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || zero(i, j)));
        if diagonal && gram[(0, 0)] == q(1) {
            let d: Option<Vec<i64>> = (1..n).map(|i| (-&gram[(i, i)]).to_integer().to_i64().filter(|_| gram[(i, i)].is_integer())).collect();
            if let Some(d) = d {
                return Self::diagonal_light_cone(&d);
            }
        }
        Err(Error::Parse("cone file needs \"inner\" and \"ray\" for this Gram matrix".into()))
    }

    pub fn to_json(&self) -> Value {
        let mat = |m: &QMat| -> Value {
            Value::Array((0..m.rows()).map(|i| Value::Array(m.row(i).iter().map(|x| json!(fmt_q(x))).collect())).collect())
        };
        json!({
            "gram": mat(&self.gram),
            "inner": mat(&self.inner),
            "ray": self.ray.iter().map(fmt_q).collect::<Vec<_>>(),
        })
    }
}

/// Lattice points of sup-norm ≤ h in the cone (open) or in its closure minus 0.
pub fn cone_lattice_points(omega: &SelfAdjointCone, h: u64, closed: bool) -> Vec<Vec<i64>> {
    let n = omega.dim();
    let h = h as i64;
    let mut out = Vec::new();
    let mut x = vec![-h; n];
    loop {
        let nonzero = x.iter().any(|&v| v != 0);
        let inside = if closed { omega.contains_closed_int(&x) } else { omega.contains_open_int(&x) };
        if nonzero && inside {
            out.push(x.clone());
        }
        let mut j = 0;
        loop {
            if j == n {
                out.sort();
                return out;
            }
            x[j] += 1;
            if x[j] > h {
                x[j] = -h;
                j += 1;
            } else {
                break;
            }
        }
    }
}

/// Drop every p that is p′ + w with p′ another point and w ∈ Ω̄ ∖ 0; such p
/// cannot be extreme in conv(points) + Ω̄.
fn prefilter(omega: &SelfAdjointCone, pts: &[Vec<i64>]) -> Vec<Vec<i64>> {
    pts.iter()
        .filter(|p| {
            !pts.iter().any(|r| {
                let w: Vec<i64> = p.iter().zip(r.iter()).map(|(a, b)| a - b).collect();
                w.iter().any(|&v| v != 0) && omega.contains_closed_int(&w)
            })
        })
        .cloned()
        .collect()
}

/// Extreme rays of the polyhedral inner approximation of Ω̄ in the window.
fn recession_rays(omega: &SelfAdjointCone, h: u64) -> Vec<ZVec> {
    let pts = cone_lattice_points(omega, h, true);
    let gens: Vec<ZVec> = pts.iter().map(|p| p.iter().map(|&x| BigInt::from(x)).collect()).collect();
    RationalCone::new(omega.dim(), &gens).expect("dimensions agree").rays().to_vec()
}

fn homogenize(p: &[Q], last: Q) -> Vec<Q> {
    let mut v = p.to_vec();
    v.push(last);
    v
}

fn canonical_points(mut v: Vec<Vec<Q>>) -> Vec<Vec<Q>> {
    v.sort();
    v.dedup();
    v
}

/// Vertices and bounded-side facet functionals of conv(pts) + cone(rec).
/// Facets are returned as y with ⟨x, y⟩ ≥ 1 on the hull (pairing by `inner`).
fn hull(omega: &SelfAdjointCone, pts: &[Vec<Q>], rec: &[ZVec]) -> (Vec<Vec<Q>>, Vec<Vec<Q>>) {
    let n = omega.dim();
    let mut gens: Vec<ZVec> = pts.iter().map(|p| primitive_int(&homogenize(p, Q::one()))).collect();
    gens.extend(rec.iter().map(|r| {
        let mut v = r.clone();
        v.push(BigInt::zero());
        v
    }));
    if gens.is_empty() {
        return (Vec::new(), Vec::new());
    }
    let c = RationalCone::new(n + 1, &gens).expect("dimensions agree");
    let verts: Vec<Vec<Q>> = c
        .rays()
        .iter()
        .filter(|r| r[n].is_positive())
        .map(|r| r[..n].iter().map(|x| Q::new(x.clone(), r[n].clone())).collect())
        .collect();
    let inner_inv = omega.inner.inverse().expect("positive definite");
    let facets: Vec<Vec<Q>> = c
        .normals()
        .iter()
        .filter(|a| a[n].is_negative())
        .map(|a| {
            let cval = -qi(&a[n]);
            let lin: Vec<Q> = a[..n].iter().map(|x| qi(x) / &cval).collect();
            inner_inv.mul_vec(&lin)
        })
        .collect();
    (canonical_points(verts), canonical_points(facets))
}

/// Vertices of {x : ⟨x, t⟩ ≥ 1 for t ∈ T, ⟨x, r⟩ ≥ 0 for r ∈ rec}.
fn polyhedron_vertices(omega: &SelfAdjointCone, t: &[Vec<Q>], rec: &[ZVec]) -> Vec<Vec<Q>> {
    let n = omega.dim();
    let mut rows: Vec<Vec<Q>> = Vec::new();
    for y in t {
        rows.push(homogenize(&omega.inner.mul_vec(y), -Q::one()));
    }
    for r in rec {
        rows.push(homogenize(&omega.inner.mul_vec(&zq(r)), Q::zero()));
    }
    let mut tpos = vec![Q::zero(); n];
    tpos.push(Q::one());
    rows.push(tpos);
    let g = cone_from_inequalities(&rows, n + 1);
    if !g.lineality.is_empty() {
        return Vec::new();
    }
    canonical_points(
        g.rays
            .iter()
            .filter(|r| r[n].is_positive())
            .map(|r| r[..n].iter().map(|x| Q::new(x.clone(), r[n].clone())).collect())
            .collect(),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoreVariant {
    /// extreme points of conv(Ω ∩ L)
    Central,
    /// extreme points of the semi-dual of conv(Ω ∩ L)
    CentralDual,
    /// extreme points of conv(Ω̄ ∩ L ∖ 0), whose semi-dual is the perfect core
    Perfect,
}

impl CoreVariant {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "central" => Ok(CoreVariant::Central),
            "central_dual" | "central-dual" => Ok(CoreVariant::CentralDual),
            "perfect" => Ok(CoreVariant::Perfect),
            _ => Err(Error::InvalidInput(format!("unknown core variant {s:?}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CoreVariant::Central => "central",
            CoreVariant::CentralDual => "central_dual",
            CoreVariant::Perfect => "perfect",
        }
    }
}

/// Extreme points certified by agreement of the H and 2H windows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtremeSet {
    pub variant: CoreVariant,
    pub points: Vec<Vec<Q>>,
    pub height: u64,
    pub checked_height: u64,
}

impl ExtremeSet {
    pub fn to_json(&self) -> Value {
        json!({
            "variant": self.variant.name(),
            "height": self.height,
            "checked_height": self.checked_height,
            "points": self.points.iter().map(|p| p.iter().map(fmt_q).collect::<Vec<_>>()).collect::<Vec<_>>(),
        })
    }
}

fn raw_extremes(omega: &SelfAdjointCone, variant: CoreVariant, h: u64) -> Vec<Vec<Q>> {
    let rec = recession_rays(omega, h);
    match variant {
        CoreVariant::Central | CoreVariant::Perfect => {
            let closed = variant == CoreVariant::Perfect;
            let pts = prefilter(omega, &cone_lattice_points(omega, h, closed));
            let pq: Vec<Vec<Q>> = pts.iter().map(|p| to_q(p)).collect();
            hull(omega, &pq, &rec).0
        }
        CoreVariant::CentralDual => {
            let central = raw_extremes(omega, CoreVariant::Central, h);
            polyhedron_vertices(omega, &central, &rec)
        }
    }
}

/// Points are reported from the larger window (within box(h)); the two
/// windows must agree on the core box(⌈h/2⌉), away from edge artefacts.
fn certify(a: Vec<Vec<Q>>, b: Vec<Vec<Q>>, h: u64) -> Result<Vec<Vec<Q>>> {
    let core = q(h.div_ceil(2) as i64);
    let inner = |v: &[Vec<Q>]| -> Vec<Vec<Q>> { v.iter().filter(|p| sup_norm(p) <= core).cloned().collect() };
    if inner(&a) != inner(&b) {
        return Err(Error::UnstableTruncation { h, h2: 2 * h });
    }
    let hq = q(h as i64);
    Ok(b.into_iter().filter(|p| sup_norm(p) <= hq).collect())
}

/// E of the selected core in the window of height h, checked against 2h.
pub fn core_extremes(omega: &SelfAdjointCone, variant: CoreVariant, h: u64) -> Result<ExtremeSet> {
    if h == 0 {
        return Err(Error::InvalidInput("height must be at least 1".into()));
    }
    let a = raw_extremes(omega, variant, h);
    let b = raw_extremes(omega, variant, 2 * h);
    let points = certify(a, b, h)?;
    Ok(ExtremeSet { variant, points, height: h, checked_height: 2 * h })
}

/// K_T = {x ∈ Ω̄ : ⟨x, y⟩ ≥ 1 for all y ∈ T} (or > 1 when not closed).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KernelSpec {
    pub t: Vec<Vec<Q>>,
    pub closed: bool,
}

impl KernelSpec {
    pub fn contains(&self, omega: &SelfAdjointCone, x: &[Q]) -> bool {
        omega.contains_closed(x)
            && self.t.iter().all(|y| {
                let v = omega.pair(x, y);
                if self.closed {
                    v >= Q::one()
                } else {
                    v > Q::one()
                }
            })
    }

    /// Vertices of the windowed polyhedron K_T.
    pub fn vertices(&self, omega: &SelfAdjointCone, h: u64) -> Vec<Vec<Q>> {
        polyhedron_vertices(omega, &self.t, &recession_rays(omega, h))
    }

    pub fn to_json(&self) -> Value {
        json!({
            "comparison": if self.closed { "closed (>= 1)" } else { "strict (> 1)" },
            "t": self.t.iter().map(|p| p.iter().map(fmt_q).collect::<Vec<_>>()).collect::<Vec<_>>(),
        })
    }
}

/// A^∨ = {h : ⟨h, a⟩ ≥ 1 for all a ∈ A}, as a closed K_T.
pub fn semi_dual(points: &[Vec<Q>], omega: &SelfAdjointCone) -> Result<KernelSpec> {
    if points.is_empty() {
        return Err(Error::InvalidInput("semi-dual of the empty set".into()));
    }
    if let Some(p) = points.iter().find(|p| p.len() != omega.dim() || !omega.contains_closed(p) || p.iter().all(|x| x.is_zero())) {
        return Err(Error::InvalidInput(format!("point {:?} is not in the closed cone minus 0", p.iter().map(fmt_q).collect::<Vec<_>>())));
    }
    Ok(KernelSpec { t: canonical_points(points.to_vec()), closed: true })
}

/// The fan of support hyperplanes of a kernel, within the window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupportFan {
    pub fan: Fan,
    /// y with H_y ∩ E spanning V, one per top cone (same order as `top_cones`)
    pub functionals: Vec<Vec<Q>>,
    pub top_cones: Vec<RationalCone>,
    pub degenerate: bool,
    pub warnings: Vec<String>,
}

fn scaled_ray(p: &[Q]) -> ZVec {
    primitive_int(p)
}

/// Σ = {σ_y} ∪ faces for y ∈ Ω̄ with H_y supporting E and H_y ∩ E spanning V.
/// Candidate y are T and the bounded facets of conv(E) + Ω̄_window.
pub fn support_fan(omega: &SelfAdjointCone, k: &KernelSpec, e: &ExtremeSet) -> Result<SupportFan> {
    let n = omega.dim();
    let rec = recession_rays(omega, e.height);
    let mut cands: BTreeSet<Vec<Q>> = k.t.iter().cloned().collect();
    cands.extend(hull(omega, &e.points, &rec).1);
    let mut tops: Vec<(RationalCone, Vec<Q>)> = Vec::new();
    for y in cands {
        if !omega.contains_closed(&y) {
            continue;
        }
        let vals: Vec<Q> = e.points.iter().map(|p| omega.pair(p, &y)).collect();
        if vals.iter().any(|v| v < &Q::one()) {
            continue;
        }
        let contact: Vec<Vec<Q>> =
            e.points.iter().zip(&vals).filter(|(_, v)| v.is_one()).map(|(p, _)| p.clone()).collect();
        if contact.is_empty() || rank_of(&contact) < n {
            continue;
        }
        let rays: Vec<ZVec> = contact.iter().map(|p| scaled_ray(p)).collect();
        let c = RationalCone::new(n, &rays)?;
        if !tops.iter().any(|(d, _)| *d == c) {
            tops.push((c, y));
        }
    }
    tops.sort();
    let mut warnings = Vec::new();
    if k.closed {
        warnings.push("kernel uses the closed comparison <x,y> >= 1".to_string());
    }
    if tops.is_empty() {
        warnings.push("DegenerateSupport: no support hyperplane meets the extreme set in a spanning set; returning the trivial decomposition".to_string());
        let top = RationalCone::new(n, &rec)?;
        return Ok(SupportFan {
            fan: Fan::with_faces(n, vec![top]),
            functionals: Vec::new(),
            top_cones: Vec::new(),
            degenerate: true,
            warnings,
        });
    }
    let (top_cones, functionals): (Vec<RationalCone>, Vec<Vec<Q>>) = tops.into_iter().unzip();
    Ok(SupportFan { fan: Fan::with_faces(n, top_cones.clone()), functionals, top_cones, degenerate: false, warnings })
}

impl SupportFan {
    /// φ(x) = min over the support functionals of ⟨x, y⟩.
    pub fn phi(&self, omega: &SelfAdjointCone, x: &[Q]) -> Option<Q> {
        self.functionals.iter().map(|y| omega.pair(x, y)).min()
    }

    /// PL data of φ on the fan's rays, checked by the fan module.
    pub fn certificate(&self, omega: &SelfAdjointCone) -> Result<Option<PLReport>> {
        if self.degenerate {
            return Ok(None);
        }
        let mut vals = std::collections::BTreeMap::new();
        for r in self.fan.rays() {
            let v = self.phi(omega, &zq(&r)).expect("nonempty");
            vals.insert(r, v);
        }
        Ok(Some(PLSupport::new(vals).check(&self.fan)?))
    }

    /// Whether φ is linear exactly on the returned top cones: on σ_y the
    /// minimum is attained by y alone at every point of the relative interior.
    pub fn linear_exactly_on_tops(&self, omega: &SelfAdjointCone) -> bool {
        self.top_cones.iter().zip(&self.functionals).all(|(c, y)| {
            let b = zq(&c.barycenter());
            let here = omega.pair(&b, y);
            self.functionals.iter().all(|z| z == y || omega.pair(&b, z) > here)
                && c.rays().iter().all(|r| {
                    let r = zq(r);
                    let v = omega.pair(&r, y);
                    self.functionals.iter().all(|z| omega.pair(&r, z) >= v)
                })
        })
    }

    pub fn to_json(&self) -> Value {
        json!({
            "fan": self.fan.to_json(),
            "degenerate": self.degenerate,
            "warnings": self.warnings,
            "functionals": self.functionals.iter().map(|p| p.iter().map(fmt_q).collect::<Vec<_>>()).collect::<Vec<_>>(),
        })
    }
}

/// Orbits of window cones under a list of generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GammaReport {
    pub preserved: bool,
    /// images that left the window and were therefore not checked
    pub excused: usize,
    /// orbit classes, as indices into `fan.cones()`
    pub orbits: Vec<Vec<usize>>,
}

fn apply(g: &QMat, c: &RationalCone) -> Result<RationalCone> {
    let rays: Vec<ZVec> = c.rays().iter().map(|r| primitive_int(&g.mul_vec(&zq(r)))).collect();
    RationalCone::new(g.rows(), &rays)
}

fn find(parent: &mut [usize], i: usize) -> usize {
    let mut r = i;
    while parent[r] != r {
        r = parent[r];
    }
    let mut j = i;
    while parent[j] != r {
        let next = parent[j];
        parent[j] = r;
        j = next;
    }
    r
}

/// Check that every generator (and its inverse) permutes the window cones.
pub fn gamma_check(fan: &Fan, gens: &[QMat], omega: &SelfAdjointCone) -> Result<GammaReport> {
    let mut mats = Vec::new();
    for (i, g) in gens.iter().enumerate() {
        if !omega.preserves(g) {
            return Err(Error::NotCone { index: i });
        }
        let inv = g.inverse().ok_or(Error::NotCone { index: i })?;
        mats.push((i, g.clone()));
        mats.push((i, inv));
    }
    let window = fan
        .rays()
        .iter()
        .map(|r| r.iter().map(|x| x.abs()).max().unwrap_or_else(BigInt::zero))
        .max()
        .unwrap_or_else(BigInt::zero);
    let cones = fan.cones();
    let mut parent: Vec<usize> = (0..cones.len()).collect();
    let mut excused = 0;
    for (ci, c) in cones.iter().enumerate() {
        for (gi, g) in &mats {
            let img = apply(g, c)?;
            match cones.binary_search(&img) {
                Ok(j) => {
                    let (a, b) = (find(&mut parent, ci), find(&mut parent, j));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
                Err(_) => {
                    let outside = img.rays().iter().any(|r| r.iter().any(|x| x.abs() > window));
                    if outside {
                        excused += 1;
                    } else {
                        return Err(Error::NotConePreserving { index: *gi });
                    }
                }
            }
        }
    }
    let mut classes: std::collections::BTreeMap<usize, Vec<usize>> = std::collections::BTreeMap::new();
    for i in 0..cones.len() {
        let r = find(&mut parent, i);
        classes.entry(r).or_default().push(i);
    }
    Ok(GammaReport { preserved: true, excused, orbits: classes.into_values().collect() })
}

/// Full windowed pipeline: extreme set, kernel and support fan.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    pub extremes: ExtremeSet,
    pub kernel: KernelSpec,
    pub support: SupportFan,
    pub report: FanReport,
    pub certificate: Option<PLReport>,
}

pub fn decompose(omega: &SelfAdjointCone, variant: CoreVariant, h: u64) -> Result<Decomposition> {
    let extremes = core_extremes(omega, variant, h)?;
    // the kernel whose extreme points were computed, written as K_T
    let t = match variant {
        CoreVariant::Central => core_extremes(omega, CoreVariant::CentralDual, h)?.points,
        CoreVariant::CentralDual => core_extremes(omega, CoreVariant::Central, h)?.points,
        CoreVariant::Perfect => {
            let small = raw_extremes(omega, CoreVariant::Perfect, h);
            let a = polyhedron_vertices(omega, &small, &recession_rays(omega, h));
            let big = raw_extremes(omega, CoreVariant::Perfect, 2 * h);
            let b = polyhedron_vertices(omega, &big, &recession_rays(omega, 2 * h));
            certify(a, b, h)?
        }
    };
    let kernel = KernelSpec { t, closed: true };
    let support = support_fan(omega, &kernel, &extremes)?;
    let report = support.fan.validate();
    let certificate = support.certificate(omega)?;
    Ok(Decomposition { extremes, kernel, support, report, certificate })
}

impl Decomposition {
    pub fn to_json(&self) -> Value {
        let cert = match &self.certificate {
            None => Value::Null,
            Some(c) => json!({
                "linear_on_cones": c.linear_on_cones,
                "positive": c.positive,
                "integral": c.integral,
                "convexity": format!("{:?}", c.convexity),
            }),
        };
        json!({
            "extremes": self.extremes.to_json(),
            "kernel": self.kernel.to_json(),
            "support": self.support.to_json(),
            "valid": self.report.valid,
            "violation": self.report.violation.as_ref().map(|v| v.to_string()),
            "certificate": cert,
        })
    }
}

/// Infimum over y ∈ T of ⟨x, y⟩ (∞ encoded as None for empty T).
pub fn kernel_level(omega: &SelfAdjointCone, k: &KernelSpec, x: &[Q]) -> Option<Q> {
    k.t.iter().map(|y| omega.pair(x, y)).min()
}
