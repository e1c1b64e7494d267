//! Models of the symmetric domain attached to a rational quadratic space V
//! of signature (2, n), and the maps between them.
//!
//! * projective model κ = {[v] ∈ P(V_ℂ) : q(v) = 0, b(v, v̄) > 0}, two
//!   components κ⁺ ⊔ κ⁻ exchanged by complex conjugation;
//! * tube domain {y ∈ U_ℂ : q_U(Im y) > 0} for a splitting
//!   V = ⟨e1, e2⟩ ⊕ U with q(e1) = 0, b(e1, e2) = 1, U = ⟨e1, e2⟩^⊥;
//! * bounded domain in coordinates z = (z1, z2, z⃗) with Gram matrix
//!   A′ = diag(−2, −2, A), available for ambient Gram matrices of the shape
//!   Ã = H ⊕ H ⊕ A (basis ê1..ê4 with b(ê1, ê3) = b(ê2, ê4) = 1, negative
//!   definite tail A);
//! * Grassmannian of oriented positive-definite planes.
//!
//! Component convention: κ⁺ is the component whose tube coordinates have
//! Im y in the cone selected by the frame's reference vector; for the
//! standard Ã frame this is Im y1 > 0 and contains the base point
//! [1 : i : 1 : i : 0⃗].
//!
//! Bounded-domain maps.  With c = z·A′·zᵗ and s(z) = 1 − 2z1 − c/2,
//!
//!   Ψ(z) = (1, i, 1, i, 0⃗) + 2(z1, z2, −z1, −z2, z⃗) − (c/2)(1, −i, 1, −i, 0⃗),
//!   Υ(z) = ((i + 2z2 + ic/2)/s, (i − 2z2 + ic/2)/s, 2z⃗/s),
//!
//! so that Ψ(z) = s(z)·ψ(Υ(z)).  The factor ½ on the i·c terms is what the
//! quadric condition q(Ψ(z)) = 0 forces; the inverse is
//!
//!   r(y) = 4 / (a + 1 − i(y1 + y2)),  a = −q_U(y)/2,
//!   z1 = r(a − 1)/4,  z2 = r(y1 − y2)/4,  z⃗ = r·y⃗/2,
//!
//! and satisfies r(Υ(z)) = s(z).  Equivalently r(y) = −8 / q_U(y + i·u0)
//! with u0 = (1, 1, 0⃗), which is the form used for the singularity test.

use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::linalg::{zq, QMat};
use crate::qform::{parse_rational_value, QuadraticLattice};
use crate::rat::{fmt_q, q, Q};
use crate::scalar::{ci, conj_vec, creal, im_vec, norm_sq_vec, re_vec, Field, C};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum KappaClass {
    Outside,
    Plus,
    Minus,
}

impl KappaClass {
    pub fn name(self) -> &'static str {
        match self {
            KappaClass::Outside => "outside",
            KappaClass::Plus => "plus_component",
            KappaClass::Minus => "minus_component",
        }
    }

    pub fn swapped(self) -> Self {
        match self {
            KappaClass::Plus => KappaClass::Minus,
            KappaClass::Minus => KappaClass::Plus,
            KappaClass::Outside => KappaClass::Outside,
        }
    }
}

/// Ambient lattice together with a tube-domain splitting.
#[derive(Clone, Debug, PartialEq)]
pub struct TubeFrame {
    lattice: QuadraticLattice,
    e1: Vec<Q>,
    e2: Vec<Q>,
    u_basis: Vec<Vec<Q>>,
    u_gram: QMat,
    q_e2: Q,
    basis_inv: QMat,
    /// Vector in the closed positive cone of U selecting the κ⁺ component.
    cone_ref: Vec<Q>,
}

/// Gram matrix Ã = H ⊕ H ⊕ A in the order ê1, ê2, ê3, ê4, tail.
pub fn atilde(tail: &QMat) -> QMat {
    let k = tail.rows();
    let mut g = QMat::zeros(4 + k, 4 + k);
    g[(0, 2)] = Q::one();
    g[(2, 0)] = Q::one();
    g[(1, 3)] = Q::one();
    g[(3, 1)] = Q::one();
    for i in 0..k {
        for j in 0..k {
            g[(4 + i, 4 + j)] = tail[(i, j)].clone();
        }
    }
    g
}

/// Recognize a Gram matrix of the form Ã(A) and return A.
pub fn atilde_tail(g: &QMat) -> Option<QMat> {
    if g.rows() < 4 || !g.is_square() {
        return None;
    }
    let k = g.rows() - 4;
    let rows: Vec<usize> = (4..4 + k).collect();
    let tail = g.submatrix(&rows, &rows);
    (atilde(&tail) == *g).then_some(tail)
}

impl TubeFrame {
    /// Frame from an isotropic e1 and a partner e2; U gets a saturated
    /// integral basis of ⟨e1, e2⟩^⊥.
    pub fn new(lattice: QuadraticLattice, e1: Vec<Q>, e2: Vec<Q>) -> Result<Self> {
        let g = lattice.gram();
        let eqs = vec![g.mul_vec(&e1), g.mul_vec(&e2)];
        let m = lattice.rank();
        let u_basis: Vec<Vec<Q>> = crate::linalg::saturate(&QMat::from_rows(eqs)?.kernel(), m)
            .iter()
            .map(|v| zq(v))
            .collect();
        Self::with_u_basis(lattice, e1, e2, u_basis)
    }

    pub fn with_u_basis(lattice: QuadraticLattice, e1: Vec<Q>, e2: Vec<Q>, u_basis: Vec<Vec<Q>>) -> Result<Self> {
        let m = lattice.rank();
        if e1.len() != m || e2.len() != m || u_basis.len() + 2 != m || u_basis.iter().any(|u| u.len() != m) {
            return Err(Error::DimensionMismatch("frame vectors do not match the lattice rank".into()));
        }
        let (r, s) = lattice.signature()?;
        if r != 2 {
            return Err(Error::WrongSignature(r, s));
        }
        if !lattice.q(&e1).is_zero() || lattice.b(&e1, &e2) != Q::one() {
            return Err(Error::InvalidInput("frame needs q(e1) = 0 and b(e1, e2) = 1".into()));
        }
        for u in &u_basis {
            if !lattice.b(u, &e1).is_zero() || !lattice.b(u, &e2).is_zero() {
                return Err(Error::InvalidInput("U basis must be orthogonal to e1 and e2".into()));
            }
        }
        let mut cols = vec![e1.clone(), e2.clone()];
        cols.extend(u_basis.iter().cloned());
        let basis = QMat::from_cols(&cols)?;
        let basis_inv = basis.inverse().ok_or_else(|| Error::InvalidInput("frame vectors are dependent".into()))?;
        let k = u_basis.len();
        let mut u_gram = QMat::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                u_gram[(i, j)] = lattice.b(&u_basis[i], &u_basis[j]);
            }
        }
        let q_e2 = lattice.q(&e2);
        let cone_ref = cone_reference(&u_gram)?;
        Ok(TubeFrame { lattice, e1, e2, u_basis, u_gram, q_e2, basis_inv, cone_ref })
    }

    /// Frame found by an isotropic-vector search of bounded height.
    pub fn from_lattice(lattice: QuadraticLattice, height: u32) -> Result<Self> {
        let (e1, e2) = lattice
            .find_isotropic_split(height)
            .ok_or_else(|| Error::UnsupportedShape(format!("no isotropic vector of height ≤ {height}")))?;
        Self::new(lattice, zq(&e1), zq(&e2))
    }

    /// The standard frame on Ã(A): e1 = ê1, e2 = ê3, U = (ê2, ê4, tail).
    pub fn standard(tail: &QMat) -> Result<Self> {
        let g = atilde(tail);
        let m = g.rows();
        let unit = |i: usize| (0..m).map(|j| if i == j { Q::one() } else { Q::zero() }).collect::<Vec<Q>>();
        let mut u = vec![unit(1), unit(3)];
        u.extend((4..m).map(unit));
        Self::with_u_basis(QuadraticLattice::new(g)?, unit(0), unit(2), u)
    }

    pub fn lattice(&self) -> &QuadraticLattice {
        &self.lattice
    }

    pub fn gram(&self) -> &QMat {
        self.lattice.gram()
    }

    pub fn e1(&self) -> &[Q] {
        &self.e1
    }

    pub fn e2(&self) -> &[Q] {
        &self.e2
    }

    pub fn u_basis(&self) -> &[Vec<Q>] {
        &self.u_basis
    }

    pub fn u_gram(&self) -> &QMat {
        &self.u_gram
    }

    pub fn cone_ref(&self) -> &[Q] {
        &self.cone_ref
    }

    /// n, the complex dimension of the domain (= rank U).
    pub fn n(&self) -> usize {
        self.u_basis.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.lattice.rank()
    }

    pub fn to_json(&self) -> Value {
        let vec = |v: &[Q]| v.iter().map(fmt_q).collect::<Vec<_>>();
        json!({
            "gram": self.lattice.to_json()["gram"].clone(),
            "e1": vec(&self.e1),
            "e2": vec(&self.e2),
            "u_basis": self.u_basis.iter().map(|u| vec(u)).collect::<Vec<_>>(),
        })
    }

    /// Frame object {"gram", optional "e1", "e2", "u_basis"}.  Without a
    /// split, Ã-shaped Gram matrices get the standard frame and anything
    /// else an isotropic search of height `height`.
    pub fn from_json(v: &Value, height: u32) -> Result<Self> {
        let lattice = QuadraticLattice::from_json(v)?;
        let vec_of = |key: &str| -> Result<Option<Vec<Q>>> {
            match v.get(key) {
                None => Ok(None),
                Some(x) => x
                    .as_array()
                    .ok_or_else(|| Error::Parse(format!("{key} must be an array")))?
                    .iter()
                    .map(parse_rational_value)
                    .collect::<Result<Vec<_>>>()
                    .map(Some),
            }
        };
        match (vec_of("e1")?, vec_of("e2")?) {
            (Some(e1), Some(e2)) => match v.get("u_basis") {
                Some(ub) => {
                    let rows = ub.as_array().ok_or_else(|| Error::Parse("u_basis must be an array".into()))?;
                    let u = crate::qform::parse_matrix(rows)?;
                    Self::with_u_basis(lattice, e1, e2, u)
                }
                None => Self::new(lattice, e1, e2),
            },
            (None, None) => match atilde_tail(lattice.gram()) {
                Some(tail) => Self::standard(&tail),
                None => Self::from_lattice(lattice, height),
            },
            _ => Err(Error::Parse("frame needs both e1 and e2 or neither".into())),
        }
    }

    fn gram_t<T: Field>(&self) -> Vec<Vec<T>> {
        let g = self.gram();
        (0..g.rows()).map(|i| (0..g.cols()).map(|j| T::from_q(&g[(i, j)])).collect()).collect()
    }

    pub fn b<T: Field>(&self, x: &[C<T>], y: &[C<T>]) -> C<T> {
        bil(&self.gram_t::<T>(), x, y)
    }

    pub fn q_u<T: Field>(&self, y: &[C<T>]) -> C<T> {
        let g = &self.u_gram;
        let gt: Vec<Vec<T>> = (0..g.rows()).map(|i| (0..g.cols()).map(|j| T::from_q(&g[(i, j)])).collect()).collect();
        bil(&gt, y, y)
    }

    /// Real bilinear form on U in U-coordinates.
    pub fn b_u_real<T: Field>(&self, x: &[T], y: &[T]) -> T {
        let g = &self.u_gram;
        let mut acc = T::zero();
        for i in 0..g.rows() {
            for j in 0..g.cols() {
                if !g[(i, j)].is_zero() {
                    acc = acc + T::from_q(&g[(i, j)]) * x[i].clone() * y[j].clone();
                }
            }
        }
        acc
    }

    /// Coordinates (α, β, γ⃗) of an ambient vector in the basis (e1, e2, U).
    pub fn split_coords<T: Field>(&self, v: &[C<T>]) -> Vec<C<T>> {
        mat_vec_c(&self.basis_inv, v)
    }

    fn ambient_from_split<T: Field>(&self, alpha: C<T>, beta: C<T>, y: &[C<T>]) -> Vec<C<T>> {
        let m = self.ambient_dim();
        (0..m)
            .map(|i| {
                let mut acc = alpha.clone() * creal(T::from_q(&self.e1[i])) + beta.clone() * creal(T::from_q(&self.e2[i]));
                for (j, u) in self.u_basis.iter().enumerate() {
                    if !u[i].is_zero() {
                        acc = acc + y[j].clone() * creal(T::from_q(&u[i]));
                    }
                }
                acc
            })
            .collect()
    }

    /// Class of Im y inside the cone of positive vectors of U.
    pub fn tube_class<T: Field>(&self, y: &[C<T>], tol: f64) -> Result<KappaClass> {
        if y.len() != self.n() {
            return Err(Error::DimensionMismatch("tube point has the wrong length".into()));
        }
        let im = im_vec(y);
        let scale = if T::EXACT { T::one() } else { norm_sq_vec(y) + T::one() };
        let qi = self.b_u_real(&im, &im);
        let test = if T::EXACT { qi } else { qi / scale };
        match test.sign_tol(tol) {
            0 if !T::EXACT => return Err(Error::NearBoundary),
            1 => {}
            _ => return Ok(KappaClass::Outside),
        }
        let reff: Vec<T> = self.cone_ref.iter().map(T::from_q).collect();
        let side = self.b_u_real(&im, &reff);
        Ok(if side.sign_tol(0.0) > 0 { KappaClass::Plus } else { KappaClass::Minus })
    }
}

/// A vector in the closure of the positive cone of U: G_U⁻¹·ε1 when that is
/// not negative (for the standard frame this makes the test "Im y1 > 0"),
/// otherwise the first positive vector of a diagonal basis.
fn cone_reference(u_gram: &QMat) -> Result<Vec<Q>> {
    let inv = u_gram.inverse().ok_or(Error::DegenerateForm)?;
    let r = inv.col(0);
    let qr = u_gram.bilinear(&r, &r);
    if qr >= Q::zero() {
        return Ok(r);
    }
    let (d, t) = QuadraticLattice::new(u_gram.clone())?.diagonalize()?;
    let i = d.iter().position(|x| *x > Q::zero()).ok_or(Error::WrongSignature(0, d.len()))?;
    Ok(t.col(i))
}

pub fn bil<T: Field>(g: &[Vec<T>], x: &[C<T>], y: &[C<T>]) -> C<T> {
    let mut acc = C::new(T::zero(), T::zero());
    for i in 0..g.len() {
        for j in 0..g.len() {
            if !g[i][j].is_zero() {
                acc = acc + x[i].clone() * y[j].clone() * creal(g[i][j].clone());
            }
        }
    }
    acc
}

fn mat_vec_c<T: Field>(m: &QMat, v: &[C<T>]) -> Vec<C<T>> {
    (0..m.rows())
        .map(|i| {
            let mut acc = C::new(T::zero(), T::zero());
            for j in 0..m.cols() {
                if !m[(i, j)].is_zero() {
                    acc = acc + v[j].clone() * creal(T::from_q(&m[(i, j)]));
                }
            }
            acc
        })
        .collect()
}

/// Membership in κ and the component.
///
/// In float mode both tests are made on the representative normalized to
/// unit Euclidean length, so the predicate is scale invariant.
pub fn in_kappa<T: Field>(frame: &TubeFrame, v: &[C<T>], tol: f64) -> Result<KappaClass> {
    if v.len() != frame.ambient_dim() {
        return Err(Error::DimensionMismatch("point has the wrong length".into()));
    }
    let ns = norm_sq_vec(v);
    if ns.sign_tol(0.0) == 0 {
        return Err(Error::InvalidInput("zero vector".into()));
    }
    let (qv, h) = (frame.b(v, v), frame.b(v, &conj_vec(v)).re);
    let (qn, hn) = if T::EXACT { (qv.norm_sqr(), h) } else { (qv.norm_sqr() / (ns.clone() * ns.clone()), h / ns) };
    if T::EXACT {
        if !qn.is_zero() || hn.sign_tol(0.0) <= 0 {
            return Ok(KappaClass::Outside);
        }
    } else {
        if qn.to_f64().sqrt() > tol {
            return Ok(KappaClass::Outside);
        }
        match hn.sign_tol(tol) {
            0 => return Err(Error::NearBoundary),
            -1 => return Ok(KappaClass::Outside),
            _ => {}
        }
    }
    // κ lies in the tube chart: b(v, e1) ≠ 0 on κ
    let y = psi_inv(frame, v, tol)?;
    let im = im_vec(&y);
    let reff: Vec<T> = frame.cone_ref.iter().map(T::from_q).collect();
    let side = frame.b_u_real(&im, &reff);
    Ok(if side.sign_tol(0.0) > 0 { KappaClass::Plus } else { KappaClass::Minus })
}

/// ψ(y) = a·e1 + e2 + Σ y_j u_j with a = −(q_U(y) + q(e2))/2, in ambient
/// coordinates.
pub fn psi<T: Field>(frame: &TubeFrame, y: &[C<T>]) -> Result<Vec<C<T>>> {
    if y.len() != frame.n() {
        return Err(Error::DimensionMismatch("tube point has the wrong length".into()));
    }
    let half = T::from_q(&crate::rat::qr(1, 2));
    let a = -(frame.q_u(y) + creal(T::from_q(&frame.q_e2))) * creal(half);
    Ok(frame.ambient_from_split(a, C::new(T::one(), T::zero()), y))
}

/// Inverse of ψ: scale so the e2-coordinate is 1 and read off U.
pub fn psi_inv<T: Field>(frame: &TubeFrame, v: &[C<T>], tol: f64) -> Result<Vec<C<T>>> {
    if v.len() != frame.ambient_dim() {
        return Err(Error::DimensionMismatch("point has the wrong length".into()));
    }
    let c = frame.split_coords(v);
    let beta = c[1].clone();
    let small = if T::EXACT {
        beta.norm_sqr().is_zero()
    } else {
        (beta.norm_sqr() / norm_sq_vec(v)).to_f64().sqrt() <= tol
    };
    if small {
        return Err(Error::BoundaryPoint);
    }
    Ok(c[2..].iter().map(|z| z.clone() / beta.clone()).collect())
}

/// Oriented positive plane spanned by Re v and Im v.
#[derive(Clone, Debug, PartialEq)]
pub struct GrassPlane<T> {
    pub x: Vec<T>,
    pub y: Vec<T>,
}

/// The plane of a point of κ, with the representative normalized so that
/// its largest pairing b(v, ε_k) equals 1 — this makes the output depend
/// only on the point, not on the representative.
pub fn grass_of<T: Field>(frame: &TubeFrame, v: &[C<T>]) -> GrassPlane<T> {
    let g = frame.gram_t::<T>();
    let gv: Vec<C<T>> = (0..v.len())
        .map(|i| g[i].iter().zip(v).fold(C::new(T::zero(), T::zero()), |acc, (a, z)| acc + z.clone() * creal(a.clone())))
        .collect();
    // argmax of |b(v, ε_k)|, first index on ties
    let mut k = 0;
    let mut best = gv[0].norm_sqr();
    for (i, z) in gv.iter().enumerate() {
        let n = z.norm_sqr();
        if greater(&n, &best) {
            best = n;
            k = i;
        }
    }
    let w: Vec<C<T>> = v.iter().map(|z| z.clone() / gv[k].clone()).collect();
    GrassPlane { x: re_vec(&w), y: im_vec(&w) }
}

fn greater<T: Field>(a: &T, b: &T) -> bool {
    (a.clone() - b.clone()).sign_tol(0.0) > 0
}

impl<T: Field> GrassPlane<T> {
    /// Same unoriented plane (rank test on the four spanning vectors).
    pub fn same_plane(&self, other: &GrassPlane<T>, tol: f64) -> bool {
        let rows = [self.x.clone(), self.y.clone(), other.x.clone(), other.y.clone()];
        numeric_rank(&rows, tol) == 2
    }
}

fn numeric_rank<T: Field>(rows: &[Vec<T>], tol: f64) -> usize {
    let mut m: Vec<Vec<T>> = rows.to_vec();
    let cols = m.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for c in 0..cols {
        let piv = (rank..m.len()).max_by(|&a, &b| {
            m[a][c].abs_val().to_f64().partial_cmp(&m[b][c].abs_val().to_f64()).unwrap_or(std::cmp::Ordering::Equal)
        });
        let Some(p) = piv else { break };
        if m[p][c].sign_tol(tol) == 0 {
            continue;
        }
        m.swap(rank, p);
        for i in rank + 1..m.len() {
            let f = m[i][c].clone() / m[rank][c].clone();
            for j in c..cols {
                let v = m[rank][j].clone() * f.clone();
                m[i][j] = m[i][j].clone() - v;
            }
        }
        rank += 1;
    }
    rank
}

/// Matrix acting by X ↦ r²(cos 2θ·X + sin 2θ·Y), Y ↦ r²(−sin 2θ·X + cos 2θ·Y)
/// on the plane and trivially on its orthogonal complement.  With this
/// convention X − iY spans the r²e^{2iθ}-eigenline.
pub fn circle_action_matrix(gram: &QMat, p: &GrassPlane<f64>, r: f64, theta: f64) -> Vec<Vec<f64>> {
    let m = gram.rows();
    let g: Vec<Vec<f64>> = (0..m).map(|i| (0..m).map(|j| crate::rat::to_f64(&gram[(i, j)])).collect()).collect();
    let b = |x: &[f64], y: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..m {
            for j in 0..m {
                s += g[i][j] * x[i] * y[j];
            }
        }
        s
    };
    let nx = b(&p.x, &p.x);
    let ny = b(&p.y, &p.y);
    let (c, s) = (r * r * (2.0 * theta).cos(), r * r * (2.0 * theta).sin());
    let mut out = vec![vec![0.0; m]; m];
    for j in 0..m {
        let mut e = vec![0.0; m];
        e[j] = 1.0;
        let al = b(&e, &p.x) / nx;
        let be = b(&e, &p.y) / ny;
        for i in 0..m {
            let hx = c * p.x[i] + s * p.y[i];
            let hy = -s * p.x[i] + c * p.y[i];
            out[i][j] = e[i] - al * p.x[i] - be * p.y[i] + al * hx + be * hy;
        }
    }
    out
}

/// Eigenline of `h` for the eigenvalue λ = r²e^{2iθ}, obtained by applying
/// (h − λ̄)(h − 1) to a generic vector; assumes λ ∉ {λ̄, 1}.
pub fn circle_eigenline(h: &[Vec<f64>], r: f64, theta: f64) -> Vec<C<f64>> {
    let m = h.len();
    let lam_bar = C::new(r * r * (2.0 * theta).cos(), -r * r * (2.0 * theta).sin());
    let apply = |v: &[C<f64>], shift: C<f64>| -> Vec<C<f64>> {
        (0..m).map(|i| (0..m).fold(C::new(0.0, 0.0), |acc, j| acc + v[j] * h[i][j]) - v[i] * shift).collect()
    };
    let w: Vec<C<f64>> = (0..m).map(|i| C::new(1.0 + 0.37 * i as f64, 0.11 * (i * i) as f64 - 0.5)).collect();
    apply(&apply(&w, C::new(1.0, 0.0)), lam_bar)
}

/// O⁺ test: does g preserve the orientation of a positive-definite plane?
/// The reference plane is that of ψ(i·t) with t in the positive cone of U.
pub fn is_o_plus(frame: &TubeFrame, g: &QMat) -> Result<bool> {
    let gram = frame.gram();
    if g.transpose().mul(gram).mul(g) != *gram {
        return Err(Error::NotIsometry);
    }
    let (x0, y0) = reference_plane(frame)?;
    let gx = g.mul_vec(&x0);
    let gy = g.mul_vec(&y0);
    let b = |a: &[Q], c: &[Q]| gram.bilinear(a, c);
    let det = b(&gx, &x0) * b(&gy, &y0) - b(&gx, &y0) * b(&gy, &x0);
    Ok(det > Q::zero())
}

/// Re and Im of a rational point of κ⁺: ψ(i·t) with t positive in U.
pub fn reference_plane(frame: &TubeFrame) -> Result<(Vec<Q>, Vec<Q>)> {
    let ug = frame.u_gram();
    let qg = QuadraticLattice::new(ug.clone())?;
    let (d, t) = qg.diagonalize()?;
    let i = d.iter().position(|x| *x > Q::zero()).ok_or(Error::WrongSignature(0, d.len()))?;
    let mut tv = t.col(i);
    let reff = frame.cone_ref();
    if ug.bilinear(&tv, reff) < Q::zero() {
        tv = tv.iter().map(|x| -x.clone()).collect();
    }
    let y: Vec<C<Q>> = tv.iter().map(|x| C::new(Q::zero(), x.clone())).collect();
    let v = psi(frame, &y)?;
    Ok((re_vec(&v), im_vec(&v)))
}

// ---------------------------------------------------------------------------
// Bounded model
// ---------------------------------------------------------------------------

/// Bounded-domain coordinates on the standard Ã(A) frame.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundedFrame {
    tail: QMat,
    a_prime: QMat,
    tube: TubeFrame,
}

impl BoundedFrame {
    /// `tail` is the negative-definite block A of Ã.
    pub fn new(tail: &QMat) -> Result<Self> {
        let k = tail.rows();
        let tube = TubeFrame::standard(tail)?;
        let mut a_prime = QMat::zeros(k + 2, k + 2);
        a_prime[(0, 0)] = q(-2);
        a_prime[(1, 1)] = q(-2);
        for i in 0..k {
            for j in 0..k {
                a_prime[(2 + i, 2 + j)] = tail[(i, j)].clone();
            }
        }
        Ok(BoundedFrame { tail: tail.clone(), a_prime, tube })
    }

    pub fn from_tube_frame(frame: &TubeFrame) -> Result<Self> {
        let tail = atilde_tail(frame.gram())
            .ok_or_else(|| Error::UnsupportedShape("bounded coordinates need an Ã-shaped Gram matrix".into()))?;
        let b = Self::new(&tail)?;
        if b.tube != *frame {
            return Err(Error::UnsupportedShape("bounded coordinates need the standard frame".into()));
        }
        Ok(b)
    }

    pub fn tube(&self) -> &TubeFrame {
        &self.tube
    }

    pub fn tail(&self) -> &QMat {
        &self.tail
    }

    pub fn a_prime(&self) -> &QMat {
        &self.a_prime
    }

    pub fn n(&self) -> usize {
        self.a_prime.rows()
    }

    fn ap_t<T: Field>(&self) -> Vec<Vec<T>> {
        let g = &self.a_prime;
        (0..g.rows()).map(|i| (0..g.cols()).map(|j| T::from_q(&g[(i, j)])).collect()).collect()
    }

    /// c(z) = z·A′·zᵗ (complex bilinear, no conjugation).
    pub fn c_of<T: Field>(&self, z: &[C<T>]) -> C<T> {
        bil(&self.ap_t::<T>(), z, z)
    }

    /// s(z) = 1 − 2z1 − c(z)/2.
    pub fn s_of<T: Field>(&self, z: &[C<T>]) -> C<T> {
        let half = creal(T::from_q(&crate::rat::qr(1, 2)));
        C::new(T::one(), T::zero()) - z[0].clone() * creal(T::from_q(&q(2))) - self.c_of(z) * half
    }

    /// r(y) = 4 / (a + 1 − i(y1 + y2)), a = −q_U(y)/2.
    pub fn r_of<T: Field>(&self, y: &[C<T>], tol: f64) -> Result<C<T>> {
        let half = creal(T::from_q(&crate::rat::qr(1, 2)));
        let a = -self.tube.q_u(y) * half;
        let den = a + C::new(T::one(), T::zero()) - ci::<T>() * (y[0].clone() + y[1].clone());
        if negligible_c(&den, tol) {
            return Err(Error::SingularDenominator("upsilon_inv"));
        }
        Ok(creal(T::from_q(&q(4))) / den)
    }
}

fn negligible_c<T: Field>(z: &C<T>, tol: f64) -> bool {
    if T::EXACT {
        z.norm_sqr().is_zero()
    } else {
        z.norm_sqr().to_f64().sqrt() <= tol
    }
}

/// Bounded-domain test: 4 + 4·z·A′·z̄ᵗ + |c|² > 0 (positivity of b(v, v̄) for
/// v = Ψ(z)) and 4 − |c|² > 0 (the component containing z = 0).
pub fn in_bounded<T: Field>(bf: &BoundedFrame, z: &[C<T>], tol: f64) -> Result<bool> {
    if z.len() != bf.n() {
        return Err(Error::DimensionMismatch("bounded point has the wrong length".into()));
    }
    let c = bf.c_of(z);
    let herm = bil(&bf.ap_t::<T>(), z, &conj_vec(z)).re;
    let four = T::from_q(&q(4));
    let first = four.clone() + four.clone() * herm + c.norm_sqr();
    let second = four - c.norm_sqr();
    let scale = if T::EXACT { T::one() } else { T::one() + norm_sq_vec(z) * norm_sq_vec(z) };
    let (s1, s2) = if T::EXACT {
        (first.sign_tol(0.0), second.sign_tol(0.0))
    } else {
        ((first / scale.clone()).sign_tol(tol), (second / scale).sign_tol(tol))
    };
    if !T::EXACT && (s1 == 0 || s2 == 0) {
        return Err(Error::NearBoundary);
    }
    Ok(s1 > 0 && s2 > 0)
}

/// Ψ(z) in the ambient Ã coordinates.
pub fn psi_bounded<T: Field>(bf: &BoundedFrame, z: &[C<T>]) -> Result<Vec<C<T>>> {
    if z.len() != bf.n() {
        return Err(Error::DimensionMismatch("bounded point has the wrong length".into()));
    }
    let two = creal(T::from_q(&q(2)));
    let half_c = bf.c_of(z) * creal(T::from_q(&crate::rat::qr(1, 2)));
    let one = C::new(T::one(), T::zero());
    let i = ci::<T>();
    let base = [one.clone(), i.clone(), one.clone(), i.clone()];
    let dir = [one.clone(), -i.clone(), one, -i];
    let lin = [z[0].clone(), z[1].clone(), -z[0].clone(), -z[1].clone()];
    let mut v: Vec<C<T>> = (0..4).map(|k| base[k].clone() + two.clone() * lin[k].clone() - half_c.clone() * dir[k].clone()).collect();
    v.extend(z[2..].iter().map(|x| two.clone() * x.clone()));
    Ok(v)
}

/// Υ: bounded → tube.
pub fn upsilon<T: Field>(bf: &BoundedFrame, z: &[C<T>], tol: f64) -> Result<Vec<C<T>>> {
    if z.len() != bf.n() {
        return Err(Error::DimensionMismatch("bounded point has the wrong length".into()));
    }
    let s = bf.s_of(z);
    if negligible_c(&s, tol) {
        return Err(Error::SingularDenominator("upsilon"));
    }
    let two = creal(T::from_q(&q(2)));
    let i = ci::<T>();
    let ic2 = i.clone() * bf.c_of(z) * creal(T::from_q(&crate::rat::qr(1, 2)));
    let mut y = vec![
        (i.clone() + two.clone() * z[1].clone() + ic2.clone()) / s.clone(),
        (i - two.clone() * z[1].clone() + ic2) / s.clone(),
    ];
    y.extend(z[2..].iter().map(|x| two.clone() * x.clone() / s.clone()));
    Ok(y)
}

/// Υ⁻¹: tube → bounded.
pub fn upsilon_inv<T: Field>(bf: &BoundedFrame, y: &[C<T>], tol: f64) -> Result<Vec<C<T>>> {
    if y.len() != bf.n() {
        return Err(Error::DimensionMismatch("tube point has the wrong length".into()));
    }
    let r = bf.r_of(y, tol)?;
    let half = creal(T::from_q(&crate::rat::qr(1, 2)));
    let quarter = creal(T::from_q(&crate::rat::qr(1, 4)));
    let a = -bf.tube.q_u(y) * half.clone();
    let one = C::new(T::one(), T::zero());
    let mut z = vec![
        r.clone() * (a - one) * quarter.clone(),
        r.clone() * (y[0].clone() - y[1].clone()) * quarter,
    ];
    z.extend(y[2..].iter().map(|x| r.clone() * x.clone() * half.clone()));
    Ok(z)
}

// ---------------------------------------------------------------------------
// Point files
// ---------------------------------------------------------------------------

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Model {
    Projective,
    Tube,
    Bounded,
}

impl Model {
    pub fn parse(s: &str) -> Result<Model> {
        match s {
            "projective" => Ok(Model::Projective),
            "tube" => Ok(Model::Tube),
            "bounded" => Ok(Model::Bounded),
            _ => Err(Error::Parse(format!("unknown model {s:?}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Model::Projective => "projective",
            Model::Tube => "tube",
            Model::Bounded => "bounded",
        }
    }
}

/// Exact point record of the point file format.
#[derive(Clone, Debug, PartialEq)]
pub struct PointRecord {
    pub model: Model,
    pub coords: Vec<C<Q>>,
    pub frame: TubeFrame,
}

impl PointRecord {
    pub fn from_json(v: &Value, height: u32) -> Result<Self> {
        let model = Model::parse(v.get("model").and_then(|m| m.as_str()).ok_or_else(|| Error::Parse("point needs a model".into()))?)?;
        let coords = v
            .get("coords")
            .and_then(|c| c.as_array())
            .ok_or_else(|| Error::Parse("point needs coords".into()))?
            .iter()
            .map(|pair| {
                let p = pair.as_array().filter(|p| p.len() == 2).ok_or_else(|| Error::Parse("coordinate must be [re, im]".into()))?;
                Ok(C::new(parse_rational_value(&p[0])?, parse_rational_value(&p[1])?))
            })
            .collect::<Result<Vec<_>>>()?;
        let frame = TubeFrame::from_json(v.get("frame").ok_or_else(|| Error::Parse("point needs a frame".into()))?, height)?;
        Ok(PointRecord { model, coords, frame })
    }

    pub fn to_json(&self) -> Value {
        json!({
            "model": self.model.name(),
            "coords": self.coords.iter().map(|z| vec![fmt_q(&z.re), fmt_q(&z.im)]).collect::<Vec<_>>(),
            "frame": self.frame.to_json(),
        })
    }
}

/// Convert coordinates between models (exact).
pub fn convert(frame: &TubeFrame, from: Model, to: Model, coords: &[C<Q>]) -> Result<Vec<C<Q>>> {
    convert_with(frame, from, to, coords, 0.0)
}

/// [`convert`] over any backend; `tol` only matters in float mode.
pub fn convert_with<T: Field>(frame: &TubeFrame, from: Model, to: Model, coords: &[C<T>], tol: f64) -> Result<Vec<C<T>>> {
    let bounded = || BoundedFrame::from_tube_frame(frame);
    // route through the tube model
    let tube = match from {
        Model::Tube => {
            if frame.tube_class(coords, tol)? == KappaClass::Outside {
                return Err(Error::NotInDomain);
            }
            coords.to_vec()
        }
        Model::Projective => {
            if in_kappa(frame, coords, tol)? == KappaClass::Outside {
                return Err(Error::NotInDomain);
            }
            psi_inv(frame, coords, tol)?
        }
        Model::Bounded => {
            let bf = bounded()?;
            if !in_bounded(&bf, coords, tol)? {
                return Err(Error::NotInDomain);
            }
            upsilon(&bf, coords, tol)?
        }
    };
    match to {
        Model::Tube => Ok(tube),
        Model::Projective => psi(frame, &tube),
        Model::Bounded => upsilon_inv(&bounded()?, &tube, tol),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::qr;

    fn c(re: i64, im: i64) -> C<Q> {
        C::new(q(re), q(im))
    }

    fn h_plus_u() -> TubeFrame {
        // H ⊕ diag(1, −1), e1, e2 the hyperbolic pair
        let g = QMat::from_i64(&[&[0, 1, 0, 0], &[1, 0, 0, 0], &[0, 0, 1, 0], &[0, 0, 0, -1]]);
        let l = QuadraticLattice::new(g).unwrap();
        TubeFrame::with_u_basis(l, crate::rat::qvec(&[1, 0, 0, 0]), crate::rat::qvec(&[0, 1, 0, 0]), vec![
            crate::rat::qvec(&[0, 0, 1, 0]),
            crate::rat::qvec(&[0, 0, 0, 1]),
        ])
        .unwrap()
    }

    #[test]
    fn psi_example() {
        let f = h_plus_u();
        let v = psi(&f, &[c(0, 1), c(0, 0)]).unwrap();
        assert_eq!(v, vec![C::new(qr(1, 2), q(0)), c(1, 0), c(0, 1), c(0, 0)]);
        assert_eq!(f.b(&v, &v), c(0, 0));
        assert_eq!(f.b(&v, &conj_vec(&v)), c(2, 0));
        assert_eq!(psi_inv(&f, &v, 0.0).unwrap(), vec![c(0, 1), c(0, 0)]);
        let scaled: Vec<C<Q>> = v.iter().map(|z| z * c(3, -2)).collect();
        assert_eq!(psi_inv(&f, &scaled, 0.0).unwrap(), vec![c(0, 1), c(0, 0)]);
        // q_U(y) = −q(e2) = 0 gives first coordinate 0
        let v0 = psi(&f, &[c(1, 0), c(1, 0)]).unwrap();
        assert_eq!(v0[0], c(0, 0));
        assert_eq!(psi_inv(&f, &[c(1, 0), c(0, 0), c(0, 1), c(0, 1)], 0.0), Err(Error::BoundaryPoint));
    }

    #[test]
    fn base_point() {
        let bf = BoundedFrame::new(&QMat::from_i64(&[&[-2]])).unwrap();
        let z0 = vec![c(0, 0); 3];
        let v = psi_bounded(&bf, &z0).unwrap();
        assert_eq!(v, vec![c(1, 0), c(0, 1), c(1, 0), c(0, 1), c(0, 0)]);
        assert_eq!(in_kappa(bf.tube(), &v, 0.0).unwrap(), KappaClass::Plus);
        assert_eq!(in_kappa(bf.tube(), &conj_vec(&v), 0.0).unwrap(), KappaClass::Minus);
        assert_eq!(upsilon(&bf, &z0, 0.0).unwrap(), vec![c(0, 1), c(0, 1), c(0, 0)]);
        assert_eq!(upsilon_inv(&bf, &[c(0, 1), c(0, 1), c(0, 0)], 0.0).unwrap(), z0);
        assert!(in_bounded(&bf, &z0, 0.0).unwrap());
        let p = grass_of(bf.tube(), &v);
        let expect = GrassPlane { x: crate::rat::qvec(&[1, 0, 1, 0, 0]), y: crate::rat::qvec(&[0, 1, 0, 1, 0]) };
        assert!(p.same_plane(&expect, 0.0));
    }

    #[test]
    fn real_isotropic_is_outside() {
        let bf = BoundedFrame::new(&QMat::from_i64(&[&[-2]])).unwrap();
        let v = vec![c(1, 0), c(0, 0), c(0, 0), c(0, 0), c(0, 0)];
        assert_eq!(in_kappa(bf.tube(), &v, 0.0).unwrap(), KappaClass::Outside);
    }

    #[test]
    fn bounded_rejects_large_c() {
        // z = (x, 0, 0): c = −2x², so x = 3/2 gives |c| = 9/2 and 4 − |c|² < 0
        let bf = BoundedFrame::new(&QMat::from_i64(&[&[-1]])).unwrap();
        let z = vec![C::new(qr(3, 2), q(0)), c(0, 0), c(0, 0)];
        assert!(!in_bounded(&bf, &z, 0.0).unwrap());
    }

    #[test]
    fn circle_action() {
        let bf = BoundedFrame::new(&QMat::from_i64(&[&[-2]])).unwrap();
        let v = psi_bounded(&bf, &vec![c(0, 0); 3]).unwrap();
        let p = grass_of(bf.tube(), &v);
        let pf = GrassPlane { x: p.x.iter().map(crate::rat::to_f64).collect(), y: p.y.iter().map(crate::rat::to_f64).collect() };
        let id = circle_action_matrix(bf.tube().gram(), &pf, 1.0, 0.0);
        for (i, row) in id.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                assert!((x - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
        let h = circle_action_matrix(bf.tube().gram(), &pf, 1.0, std::f64::consts::FRAC_PI_2);
        let apply = |w: &[f64]| -> Vec<f64> { (0..5).map(|i| (0..5).map(|j| h[i][j] * w[j]).sum()).collect() };
        let hx = apply(&pf.x);
        assert!(hx.iter().zip(&pf.x).all(|(a, b)| (a + b).abs() < 1e-12));
        let perp = [1.0, 0.0, -1.0, 0.0, 0.0]; // orthogonal to the base plane
        let hp = apply(&perp);
        assert!(hp.iter().zip(&perp).all(|(a, b)| (a - b).abs() < 1e-12));
    }
}
