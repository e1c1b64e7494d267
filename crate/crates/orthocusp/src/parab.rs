//! Parabolic data for the two cusp types of O(2, n).
//!
//! Everything here works in an Ã-adapted basis ê1, ê2, ê3, ê4, tail with
//! b(ê1, ê3) = b(ê2, ê4) = 1 and a negative-definite tail block A.  The
//! rank-1 flag is the line ⟨ê1⟩, the rank-2 flag the plane ⟨ê1, ê2⟩.
//!
//! Chart coordinates on the Siegel domain are (y1, y3, y4) with
//! y1 = v₄/v₃, y3 = v₂/v₃, y4 = v_tail/v₃ (1-based positions in the adapted
//! basis), so that the center of the rank-1 radical acts by literal
//! translation and y1 is the coordinate on the rank-2 boundary curve.

use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};

use crate::domains::atilde;
use crate::error::{Error, Result};
use crate::linalg::{saturate, zq, QMat};
use crate::qform::QuadraticLattice;
use crate::rat::{fmt_q, qr, Q};
use crate::scalar::{Field, C};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FlagKind {
    Rank1,
    Rank2,
}

impl FlagKind {
    pub fn parse(s: &str) -> Result<FlagKind> {
        match s {
            "rank1" => Ok(FlagKind::Rank1),
            "rank2" => Ok(FlagKind::Rank2),
            _ => Err(Error::InvalidInput(format!("unknown flag kind '{s}'"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FlagKind::Rank1 => "rank1",
            FlagKind::Rank2 => "rank2",
        }
    }
}

/// An Ã-adapted basis of a lattice: columns of `basis`, in original coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct StandardShape {
    lattice: QuadraticLattice,
    basis: QMat,
    basis_inv: QMat,
    tail: QMat,
}

impl StandardShape {
    /// Validate that `basis` (columns) carries the Gram matrix to Ã shape.
    pub fn with_basis(lattice: QuadraticLattice, basis: QMat) -> Result<Self> {
        let m = lattice.rank();
        if m < 4 || basis.rows() != m || basis.cols() != m {
            return Err(Error::UnsupportedShape("need a square basis of rank at least 4".into()));
        }
        let basis_inv = basis.inverse().ok_or_else(|| Error::InvalidInput("basis is singular".into()))?;
        let g = basis.transpose().mul(lattice.gram()).mul(&basis);
        let tail = crate::domains::atilde_tail(&g)
            .ok_or_else(|| Error::UnsupportedShape("basis does not carry the form to H ⊕ H ⊕ A".into()))?;
        if tail.rows() > 0 {
            let (r, _) = QuadraticLattice::new(tail.clone())?.signature()?;
            if r != 0 {
                return Err(Error::UnsupportedShape("tail block is not negative definite".into()));
            }
        }
        Ok(StandardShape { lattice, basis, basis_inv, tail })
    }

    /// The identity basis when the form is already Ã-shaped, otherwise two
    /// rounds of hyperbolic-plane splitting by bounded isotropic search.
    pub fn find(lattice: QuadraticLattice, height: u32) -> Result<Self> {
        let m = lattice.rank();
        if crate::domains::atilde_tail(lattice.gram()).is_some() {
            return Self::with_basis(lattice, QMat::identity(m));
        }
        let (r, s) = lattice.signature()?;
        if r != 2 || s < 2 {
            return Err(Error::WrongSignature(r, s));
        }
        let ambient: Vec<Vec<Q>> = (0..m).map(|i| unit(m, i)).collect();
        let (e1, e3, rest) = split_hyperbolic(&lattice, &ambient, height)?;
        let (e2, e4, tail) = split_hyperbolic(&lattice, &rest, height)?;
        let mut cols = vec![e1, e2, e3, e4];
        cols.extend(tail);
        Self::with_basis(lattice, QMat::from_cols(&cols)?)
    }

    pub fn lattice(&self) -> &QuadraticLattice {
        &self.lattice
    }

    pub fn basis(&self) -> &QMat {
        &self.basis
    }

    /// The negative-definite block A.
    pub fn tail(&self) -> &QMat {
        &self.tail
    }

    pub fn tilde_gram(&self) -> QMat {
        atilde(&self.tail)
    }

    /// Ambient dimension n + 2.
    pub fn dim(&self) -> usize {
        self.basis.rows()
    }

    /// Adapted-basis matrix → original coordinates.
    pub fn to_ambient(&self, h: &QMat) -> QMat {
        self.basis.mul(h).mul(&self.basis_inv)
    }

    /// Original-coordinate matrix → adapted basis.
    pub fn from_ambient(&self, g: &QMat) -> QMat {
        self.basis_inv.mul(g).mul(&self.basis)
    }

    pub fn ambient_vector(&self, v: &[Q]) -> Vec<Q> {
        self.basis.mul_vec(v)
    }
}

fn unit(m: usize, i: usize) -> Vec<Q> {
    (0..m).map(|j| if i == j { Q::one() } else { Q::zero() }).collect()
}

// Split a hyperbolic plane off the span of `basis` (ambient vectors);
// returns (isotropic e, isotropic partner f with b(e, f) = 1, complement basis).
fn split_hyperbolic(lattice: &QuadraticLattice, basis: &[Vec<Q>], height: u32) -> Result<(Vec<Q>, Vec<Q>, Vec<Vec<Q>>)> {
    let k = basis.len();
    let mut g = QMat::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            g[(i, j)] = lattice.b(&basis[i], &basis[j]);
        }
    }
    let sub = QuadraticLattice::new(g)?;
    // prefer an integral partner; otherwise any rational one (non-unimodular blocks)
    let (e, f) = match sub.find_isotropic_split(height) {
        Some((e, f)) => (zq(&e), zq(&f)),
        None => {
            let e = zq(&sub
                .find_isotropic(height)
                .ok_or_else(|| Error::UnsupportedShape(format!("no isotropic vector of height ≤ {height}")))?);
            let ge = sub.gram().mul_vec(&e);
            let j = ge.iter().position(|x| !x.is_zero()).ok_or(Error::DegenerateForm)?;
            let f: Vec<Q> = (0..k).map(|i| if i == j { Q::one() / &ge[j] } else { Q::zero() }).collect();
            (e, f)
        }
    };
    let lift = |c: &[Q]| -> Vec<Q> {
        let m = lattice.rank();
        let mut v = vec![Q::zero(); m];
        for (ci, b) in c.iter().zip(basis) {
            for t in 0..m {
                v[t] += ci * &b[t];
            }
        }
        v
    };
    let e = lift(&e);
    let f0 = lift(&f);
    // b(f0 − t·e, f0 − t·e) = b(f0, f0) − 2t
    let qf = lattice.q(&f0) * qr(1, 2);
    let f: Vec<Q> = f0.iter().zip(&e).map(|(x, y)| x - &qf * y).collect();
    // complement inside span(basis): coefficient vectors c with b(lift c, e) = b(lift c, f) = 0
    let eqs = vec![
        basis.iter().map(|b| lattice.b(b, &e)).collect::<Vec<Q>>(),
        basis.iter().map(|b| lattice.b(b, &f)).collect::<Vec<Q>>(),
    ];
    let ker = QMat::from_rows(eqs)?.kernel();
    let comp: Vec<Vec<Q>> = saturate(&ker, k).iter().map(|c| lift(&zq(c))).collect();
    Ok((e, f, comp))
}

/// A cusp: the flag kind together with the adapted basis.
#[derive(Clone, Debug, PartialEq)]
pub struct CuspFlag {
    pub kind: FlagKind,
    pub shape: StandardShape,
}

impl CuspFlag {
    pub fn new(kind: FlagKind, shape: StandardShape) -> Self {
        CuspFlag { kind, shape }
    }

    /// Standard flag on Ã(A) itself.
    pub fn standard(kind: FlagKind, tail: &QMat) -> Result<Self> {
        let g = atilde(tail);
        let m = g.rows();
        Ok(CuspFlag { kind, shape: StandardShape::with_basis(QuadraticLattice::new(g)?, QMat::identity(m))? })
    }

    /// n for O(2, n).
    pub fn n(&self) -> usize {
        self.shape.dim() - 2
    }

    pub fn tail(&self) -> &QMat {
        self.shape.tail()
    }

    /// Isotropic generators in original coordinates.
    pub fn generators(&self) -> Vec<Vec<Q>> {
        let k = match self.kind {
            FlagKind::Rank1 => 1,
            FlagKind::Rank2 => 2,
        };
        (0..k).map(|j| self.shape.basis().col(j)).collect()
    }

    /// Length of a U_α coordinate vector.
    pub fn u_dim(&self) -> usize {
        match self.kind {
            FlagKind::Rank1 => self.n(),
            FlagKind::Rank2 => 1,
        }
    }
}

/// Free parameters of an element of the unipotent radical.
#[derive(Clone, Debug, PartialEq)]
pub enum UnipotentParams {
    /// (y1, y3, y4): the column of ê3 is ê3 + y3ê2 + y1ê4 + y4 + x2ê1.
    Rank1 { y1: Q, y3: Q, y4: Vec<Q> },
    /// (y4, z4, x3): images of ê3, ê4 pick up y4, z4 in the tail; x3 is the
    /// ê1-coefficient of the image of ê4.
    Rank2 { y4: Vec<Q>, z4: Vec<Q>, x3: Q },
}

impl UnipotentParams {
    pub fn kind(&self) -> FlagKind {
        match self {
            UnipotentParams::Rank1 { .. } => FlagKind::Rank1,
            UnipotentParams::Rank2 { .. } => FlagKind::Rank2,
        }
    }

    pub fn zero(flag: &CuspFlag) -> Self {
        let k = flag.tail().rows();
        match flag.kind {
            FlagKind::Rank1 => UnipotentParams::Rank1 { y1: Q::zero(), y3: Q::zero(), y4: vec![Q::zero(); k] },
            FlagKind::Rank2 => UnipotentParams::Rank2 { y4: vec![Q::zero(); k], z4: vec![Q::zero(); k], x3: Q::zero() },
        }
    }

    /// Rank-1 parameters from U_α coordinates (y1, y3, y4…).
    pub fn rank1_from_u(u: &[Q]) -> Result<Self> {
        if u.len() < 2 {
            return Err(Error::DimensionMismatch("U_α coordinates need at least (y1, y3)".into()));
        }
        Ok(UnipotentParams::Rank1 { y1: u[0].clone(), y3: u[1].clone(), y4: u[2..].to_vec() })
    }

    /// The center element of the rank-2 radical with coordinate w1.
    pub fn rank2_center(w1: &Q, k: usize) -> Self {
        UnipotentParams::Rank2 { y4: vec![Q::zero(); k], z4: vec![Q::zero(); k], x3: -w1.clone() }
    }
}

fn quad(a: &QMat, x: &[Q], y: &[Q]) -> Q {
    if x.is_empty() {
        Q::zero()
    } else {
        a.bilinear(x, y)
    }
}

/// The radical element with the given parameters, in the adapted basis.
pub fn build_unipotent(flag: &CuspFlag, params: &UnipotentParams) -> Result<QMat> {
    if params.kind() != flag.kind {
        return Err(Error::WrongFlagKind { expected: flag.kind.name() });
    }
    let a = flag.tail();
    let k = a.rows();
    let m = 4 + k;
    let half = qr(1, 2);
    let mut g = QMat::identity(m);
    match params {
        UnipotentParams::Rank1 { y1, y3, y4 } => {
            if y4.len() != k {
                return Err(Error::DimensionMismatch("y4 has the wrong length".into()));
            }
            let ay = if k > 0 { a.mul_vec(y4) } else { vec![] };
            g[(0, 1)] = -y1.clone();
            g[(0, 2)] = -(y1 * y3 + &half * quad(a, y4, y4));
            g[(0, 3)] = -y3.clone();
            g[(1, 2)] = y3.clone();
            g[(3, 2)] = y1.clone();
            for t in 0..k {
                g[(4 + t, 2)] = y4[t].clone();
                g[(0, 4 + t)] = -ay[t].clone();
            }
        }
        UnipotentParams::Rank2 { y4, z4, x3 } => {
            if y4.len() != k || z4.len() != k {
                return Err(Error::DimensionMismatch("y4/z4 have the wrong length".into()));
            }
            let ay = if k > 0 { a.mul_vec(y4) } else { vec![] };
            let az = if k > 0 { a.mul_vec(z4) } else { vec![] };
            g[(0, 2)] = -&half * quad(a, y4, y4);
            g[(1, 3)] = -&half * quad(a, z4, z4);
            g[(0, 3)] = x3.clone();
            g[(1, 2)] = -quad(a, y4, z4) - x3;
            for t in 0..k {
                g[(4 + t, 2)] = y4[t].clone();
                g[(4 + t, 3)] = z4[t].clone();
                g[(0, 4 + t)] = -ay[t].clone();
                g[(1, 4 + t)] = -az[t].clone();
            }
        }
    }
    Ok(g)
}

/// Read the free parameters of an adapted-basis matrix (no validation).
pub fn extract_params(flag: &CuspFlag, g: &QMat) -> Result<UnipotentParams> {
    let m = flag.shape.dim();
    if g.rows() != m || g.cols() != m {
        return Err(Error::DimensionMismatch("matrix has the wrong size".into()));
    }
    Ok(match flag.kind {
        FlagKind::Rank1 => UnipotentParams::Rank1 {
            y1: g[(3, 2)].clone(),
            y3: g[(1, 2)].clone(),
            y4: (4..m).map(|i| g[(i, 2)].clone()).collect(),
        },
        FlagKind::Rank2 => UnipotentParams::Rank2 {
            y4: (4..m).map(|i| g[(i, 2)].clone()).collect(),
            z4: (4..m).map(|i| g[(i, 3)].clone()).collect(),
            x3: g[(0, 3)].clone(),
        },
    })
}

pub fn preserves(gram: &QMat, g: &QMat) -> bool {
    g.transpose().mul(gram).mul(g) == *gram
}

/// Membership in the unipotent radical (adapted basis): the block pattern,
/// the dependent entries, and gᵗÃg = Ã.
pub fn is_in_unipotent(flag: &CuspFlag, g: &QMat) -> bool {
    let Ok(p) = extract_params(flag, g) else {
        return false;
    };
    match build_unipotent(flag, &p) {
        Ok(h) => h == *g && preserves(&flag.shape.tilde_gram(), g),
        Err(_) => false,
    }
}

/// Membership in the center U_α.
pub fn is_in_center(flag: &CuspFlag, g: &QMat) -> bool {
    if !is_in_unipotent(flag, g) {
        return false;
    }
    match extract_params(flag, g) {
        Ok(UnipotentParams::Rank2 { y4, z4, .. }) => y4.iter().chain(&z4).all(|x| x.is_zero()),
        Ok(UnipotentParams::Rank1 { .. }) => true,
        Err(_) => false,
    }
}

/// U_α coordinates of a center element: (y1, y3, y4) or (w1).
pub fn center_coords(flag: &CuspFlag, g: &QMat) -> Result<Vec<Q>> {
    if !is_in_center(flag, g) {
        return Err(Error::NotInParabolic);
    }
    Ok(match extract_params(flag, g)? {
        UnipotentParams::Rank1 { y1, y3, y4 } => {
            let mut u = vec![y1, y3];
            u.extend(y4);
            u
        }
        UnipotentParams::Rank2 { x3, .. } => vec![-x3],
    })
}

/// Ω_α membership of U_α coordinates.
pub fn omega_member<T: Field>(flag: &CuspFlag, u: &[T]) -> Result<bool> {
    if u.len() != flag.u_dim() {
        return Err(Error::DimensionMismatch(format!("expected {} U_α coordinates", flag.u_dim())));
    }
    Ok(match flag.kind {
        FlagKind::Rank1 => {
            let a = flag.tail();
            let k = a.rows();
            let half = T::from_q(&qr(1, 2));
            let mut qa = T::zero();
            for i in 0..k {
                for j in 0..k {
                    qa = qa + T::from_q(&a[(i, j)]) * u[2 + i].clone() * u[2 + j].clone();
                }
            }
            let lhs = u[0].clone() * u[1].clone() + half * qa;
            lhs.sign_tol(0.0) > 0 && u[1].sign_tol(0.0) > 0
        }
        FlagKind::Rank2 => u[0].sign_tol(0.0) > 0,
    })
}

/// Chart coordinates (y1, y3, y4) of a projective point given in the adapted basis.
pub fn chart_of<T: Field>(flag: &CuspFlag, v: &[C<T>]) -> Result<Vec<C<T>>> {
    let m = flag.shape.dim();
    if v.len() != m {
        return Err(Error::DimensionMismatch("point has the wrong length".into()));
    }
    if v[2].norm_sqr().sign_tol(0.0) == 0 {
        return Err(Error::SingularDenominator("chart"));
    }
    let d = v[2].clone();
    let mut y = vec![v[3].clone() / d.clone(), v[1].clone() / d.clone()];
    y.extend(v[4..].iter().map(|x| x.clone() / d.clone()));
    Ok(y)
}

/// The projective point [−(y1y3 + ½y4Ay4) : y3 : 1 : y1 : y4] of a chart point.
pub fn point_of_chart<T: Field>(flag: &CuspFlag, y: &[C<T>]) -> Result<Vec<C<T>>> {
    let a = flag.tail();
    let k = a.rows();
    if y.len() != 2 + k {
        return Err(Error::DimensionMismatch("chart point has the wrong length".into()));
    }
    let mut qa = C::new(T::zero(), T::zero());
    for i in 0..k {
        for j in 0..k {
            qa = qa + y[2 + i].clone() * y[2 + j].clone() * C::new(T::from_q(&a[(i, j)]), T::zero());
        }
    }
    let half = C::new(T::from_q(&qr(1, 2)), T::zero());
    let one = C::new(T::one(), T::zero());
    let mut v = vec![-(y[0].clone() * y[1].clone() + half * qa), y[1].clone(), one, y[0].clone()];
    v.extend(y[2..].iter().cloned());
    Ok(v)
}

/// Φ_α on chart coordinates: the imaginary parts (rank 1), or
/// 2·Im y1·Im y3 + Im y4ᵗ A Im y4 (rank 2).
pub fn phi_alpha<T: Field>(flag: &CuspFlag, y: &[C<T>]) -> Result<Vec<T>> {
    let k = flag.tail().rows();
    if y.len() != 2 + k {
        return Err(Error::DimensionMismatch("chart point has the wrong length".into()));
    }
    let im: Vec<T> = y.iter().map(|z| z.im.clone()).collect();
    Ok(match flag.kind {
        FlagKind::Rank1 => im,
        FlagKind::Rank2 => vec![rank2_quadratic(flag, &im)],
    })
}

fn rank2_quadratic<T: Field>(flag: &CuspFlag, im: &[T]) -> T {
    let a = flag.tail();
    let k = a.rows();
    let two = T::from_q(&Q::from_integer(2.into()));
    let mut s = two * im[0].clone() * im[1].clone();
    for i in 0..k {
        for j in 0..k {
            s = s + T::from_q(&a[(i, j)]) * im[2 + i].clone() * im[2 + j].clone();
        }
    }
    s
}

/// Rank-2 Φ divided by 2·Im y1: invariant under the radical and scaled by
/// det of the GL₂ block under the Levi factor.
pub fn phi_alpha_normalized<T: Field>(flag: &CuspFlag, y: &[C<T>]) -> Result<Vec<T>> {
    if flag.kind != FlagKind::Rank2 {
        return Err(Error::WrongFlagKind { expected: "rank2" });
    }
    let v = phi_alpha(flag, y)?;
    let den = T::from_q(&Q::from_integer(2.into())) * y[0].im.clone();
    if den.sign_tol(0.0) == 0 {
        return Err(Error::SingularDenominator("phi_normalized"));
    }
    Ok(vec![v[0].clone() / den])
}

/// Class of a 2×2 matrix in PGL₂, scaled so the first nonzero entry is 1.
#[derive(Clone, Debug, PartialEq)]
pub struct Pgl2Class {
    pub entries: [Q; 4],
}

impl Pgl2Class {
    pub fn from_matrix(a: &Q, b: &Q, c: &Q, d: &Q) -> Self {
        let e = [a.clone(), b.clone(), c.clone(), d.clone()];
        let lead = e.iter().find(|x| !x.is_zero()).cloned().unwrap_or_else(Q::one);
        Pgl2Class { entries: e.map(|x| x / &lead) }
    }

    pub fn is_identity(&self) -> bool {
        self.entries == [Q::one(), Q::zero(), Q::zero(), Q::one()]
    }

    /// Non-identity with a single eigenvalue.
    pub fn is_unipotent(&self) -> bool {
        let [a, b, c, d] = &self.entries;
        let tr = a + d;
        let det = a * d - b * c;
        !self.is_identity() && &tr * &tr == Q::from_integer(4.into()) * det
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LeviProjection {
    /// h-part trivial; ℓ-part (a, block on U_α in (y1, y3, y4) order).
    Rank1 { a: Q, block: QMat },
    /// h-part the PGL₂ class of the top-left block; ℓ-part its determinant.
    Rank2 { h: Pgl2Class, det: Q },
}

/// Levi projections of an element of P_α (adapted basis).
pub fn levi_project(flag: &CuspFlag, g: &QMat) -> Result<LeviProjection> {
    let m = flag.shape.dim();
    if g.rows() != m || g.cols() != m {
        return Err(Error::DimensionMismatch("matrix has the wrong size".into()));
    }
    if !preserves(&flag.shape.tilde_gram(), g) {
        return Err(Error::NotInParabolic);
    }
    match flag.kind {
        FlagKind::Rank1 => {
            if (1..m).any(|i| !g[(i, 0)].is_zero()) || g[(0, 0)].is_zero() {
                return Err(Error::NotInParabolic);
            }
            let idx = u_order(m);
            Ok(LeviProjection::Rank1 { a: g[(0, 0)].clone(), block: g.submatrix(&idx, &idx) })
        }
        FlagKind::Rank2 => {
            if (2..m).any(|i| !g[(i, 0)].is_zero() || !g[(i, 1)].is_zero()) {
                return Err(Error::NotInParabolic);
            }
            let (a, b, c, d) = (&g[(0, 0)], &g[(0, 1)], &g[(1, 0)], &g[(1, 1)]);
            Ok(LeviProjection::Rank2 { h: Pgl2Class::from_matrix(a, b, c, d), det: a * d - b * c })
        }
    }
}

// ê4, ê2, tail: the (y1, y3, y4) ordering of U_α inside the adapted basis.
fn u_order(m: usize) -> Vec<usize> {
    let mut idx = vec![3, 1];
    idx.extend(4..m);
    idx
}

/// Dimensions and generators of the boundary data.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryData {
    pub kind: FlagKind,
    pub u_dim: usize,
    pub v_dim: usize,
    pub f_dim: usize,
    /// Center generators as adapted-basis matrices.
    pub u_generators: Vec<QMat>,
    pub cone: &'static str,
    pub fibre: &'static str,
}

pub fn boundary_data(flag: &CuspFlag) -> Result<BoundaryData> {
    let n = flag.n();
    let k = flag.tail().rows();
    Ok(match flag.kind {
        FlagKind::Rank1 => {
            let gens = (0..n)
                .map(|i| {
                    let mut u = vec![Q::zero(); n];
                    u[i] = Q::one();
                    build_unipotent(flag, &UnipotentParams::rank1_from_u(&u)?)
                })
                .collect::<Result<Vec<_>>>()?;
            BoundaryData {
                kind: flag.kind,
                u_dim: n,
                v_dim: 0,
                f_dim: 0,
                u_generators: gens,
                cone: "y1*y3 + 1/2*y4^t A y4 > 0 and y3 > 0",
                fibre: "point",
            }
        }
        FlagKind::Rank2 => BoundaryData {
            kind: flag.kind,
            u_dim: 1,
            v_dim: n - 2,
            f_dim: 1,
            u_generators: vec![build_unipotent(flag, &UnipotentParams::rank2_center(&Q::one(), k))?],
            cone: "w1 > 0",
            fibre: "(n-2)-fold fibre product of the universal elliptic curve over the boundary curve",
        },
    })
}

impl BoundaryData {
    pub fn to_json(&self, flag: &CuspFlag) -> Value {
        let mat = |m: &QMat| -> Value {
            Value::Array(m.to_rows().iter().map(|r| Value::Array(r.iter().map(|x| json!(fmt_q(x))).collect())).collect())
        };
        json!({
            "kind": self.kind.name(),
            "n": flag.n(),
            "u_dim": self.u_dim,
            "v_dim": self.v_dim,
            "f_dim": self.f_dim,
            "cone": self.cone,
            "fibre": self.fibre,
            "tail": mat(flag.tail()),
            "basis": mat(flag.shape.basis()),
            "generators": flag.generators().iter().map(|g| g.iter().map(|x| json!(fmt_q(x))).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "u_generators": self.u_generators.iter().map(|g| mat(&flag.shape.to_ambient(g))).collect::<Vec<_>>(),
        })
    }
}

/// Adjacency of a rank-2 cusp to a rank-1 cusp in its closure.
#[derive(Clone, Debug, PartialEq)]
pub struct Adjacency {
    /// Image of w1 = 1 in the U_α coordinates (y1, y3, y4) of the rank-1 cusp.
    pub ray: Vec<Q>,
    /// q(ray) = y1y3 + ½y4Ay4.
    pub ray_norm: Q,
    /// Whether the ray lies in the rational closure of Ω of the rank-1 cusp.
    pub in_closure: bool,
}

/// The inclusion U_{f2} ↪ U_{f1} when the line of `f1` lies in the plane of `f2`.
pub fn adjacency_data(f2: &CuspFlag, f1: &CuspFlag) -> Result<Option<Adjacency>> {
    if f2.kind != FlagKind::Rank2 {
        return Err(Error::WrongFlagKind { expected: "rank2" });
    }
    if f1.kind != FlagKind::Rank1 {
        return Err(Error::WrongFlagKind { expected: "rank1" });
    }
    if f1.shape.lattice().gram() != f2.shape.lattice().gram() {
        return Err(Error::InvalidInput("flags live on different lattices".into()));
    }
    let line = &f1.generators()[0];
    let mut span = f2.generators();
    span.push(line.clone());
    if crate::linalg::rank_of(&span) != 2 {
        return Ok(None);
    }
    let m = f1.shape.dim();
    let k = f2.tail().rows();
    let c2 = build_unipotent(f2, &UnipotentParams::rank2_center(&Q::one(), k))?;
    let n_amb = f2.shape.to_ambient(&c2.sub(&QMat::identity(m)));
    let n1 = f1.shape.from_ambient(&n_amb);
    let ucol = n1.col(2);
    let idx = u_order(m);
    let ray: Vec<Q> = idx.iter().map(|&i| ucol[i].clone()).collect();
    let e = build_unipotent(f1, &UnipotentParams::rank1_from_u(&ray)?)?;
    if e.sub(&QMat::identity(m)) != n1 {
        return Ok(None);
    }
    let a = f1.tail();
    let ray_norm = &ray[0] * &ray[1] + qr(1, 2) * quad(a, &ray[2..], &ray[2..]);
    // closure of Ω: q ≥ 0, y1 ≥ 0, y3 ≥ 0
    let in_closure = !ray_norm.is_negative() && !ray[0].is_negative() && !ray[1].is_negative();
    Ok(Some(Adjacency { ray, ray_norm, in_closure }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::q;

    fn tail1() -> QMat {
        QMat::from_i64(&[&[-2]])
    }

    #[test]
    fn zero_params_give_identity() {
        for kind in [FlagKind::Rank1, FlagKind::Rank2] {
            let f = CuspFlag::standard(kind, &tail1()).unwrap();
            assert!(build_unipotent(&f, &UnipotentParams::zero(&f)).unwrap().is_identity());
            assert!(is_in_unipotent(&f, &QMat::identity(5)));
        }
    }

    #[test]
    fn rank1_example_entries() {
        let f = CuspFlag::standard(FlagKind::Rank1, &tail1()).unwrap();
        let g = build_unipotent(&f, &UnipotentParams::Rank1 { y1: q(1), y3: q(0), y4: vec![q(0)] }).unwrap();
        assert_eq!(g[(0, 1)], q(-1));
        assert_eq!(g[(0, 2)], q(0));
        assert!(preserves(&f.shape.tilde_gram(), &g));
    }

    #[test]
    fn levi_torus_is_not_unipotent() {
        let f = CuspFlag::standard(FlagKind::Rank1, &tail1()).unwrap();
        let g = QMat::diag(&[q(2), q(1), qr(1, 2), q(1), q(1)]);
        assert!(preserves(&f.shape.tilde_gram(), &g));
        assert!(!is_in_unipotent(&f, &g));
        match levi_project(&f, &g).unwrap() {
            LeviProjection::Rank1 { a, block } => {
                assert_eq!(a, q(2));
                assert!(block.is_identity());
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn wrong_kind_is_rejected() {
        let f = CuspFlag::standard(FlagKind::Rank2, &tail1()).unwrap();
        let p = UnipotentParams::Rank1 { y1: q(0), y3: q(0), y4: vec![q(0)] };
        assert_eq!(build_unipotent(&f, &p), Err(Error::WrongFlagKind { expected: "rank2" }));
    }

    #[test]
    fn omega_examples() {
        let f1 = CuspFlag::standard(FlagKind::Rank1, &tail1()).unwrap();
        assert!(omega_member(&f1, &[q(1), q(1), q(0)]).unwrap());
        assert!(!omega_member(&f1, &[q(1), q(-1), q(0)]).unwrap());
        let f2 = CuspFlag::standard(FlagKind::Rank2, &tail1()).unwrap();
        assert!(omega_member(&f2, &[q(5)]).unwrap());
        assert!(!omega_member(&f2, &[q(-1)]).unwrap());
    }

    #[test]
    fn phi_examples() {
        let f1 = CuspFlag::standard(FlagKind::Rank1, &tail1()).unwrap();
        let y = vec![C::new(q(7), q(2)), C::new(q(-1), q(3)), C::new(qr(1, 3), q(0))];
        assert_eq!(phi_alpha(&f1, &y).unwrap(), vec![q(2), q(3), q(0)]);
        let f2 = CuspFlag::standard(FlagKind::Rank2, &tail1()).unwrap();
        let y = vec![C::new(q(0), q(1)), C::new(q(0), q(2)), C::new(q(0), q(0))];
        assert_eq!(phi_alpha(&f2, &y).unwrap(), vec![q(4)]);
    }

    #[test]
    fn rank2_block_levi() {
        let f = CuspFlag::standard(FlagKind::Rank2, &tail1()).unwrap();
        // P = (1 1; 0 1) on ⟨ê1, ê2⟩ and P^{-t} on ⟨ê3, ê4⟩
        let mut g = QMat::identity(5);
        g[(0, 1)] = q(1);
        g[(3, 2)] = q(-1);
        assert!(preserves(&f.shape.tilde_gram(), &g));
        match levi_project(&f, &g).unwrap() {
            LeviProjection::Rank2 { h, det } => {
                assert!(h.is_unipotent());
                assert_eq!(det, q(1));
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn standard_adjacency_ray_is_isotropic() {
        let f2 = CuspFlag::standard(FlagKind::Rank2, &tail1()).unwrap();
        let f1 = CuspFlag::standard(FlagKind::Rank1, &tail1()).unwrap();
        let adj = adjacency_data(&f2, &f1).unwrap().unwrap();
        assert_eq!(adj.ray, vec![q(0), q(1), q(0)]);
        assert!(adj.ray_norm.is_zero());
        assert!(adj.in_closure);
    }

    #[test]
    fn shape_search_on_diagonal_form() {
        // diag(1, 1, -1, -1, -2) has signature (2, 3)
        let l = QuadraticLattice::diagonal(&[1, 1, -1, -1, -2]);
        let s = StandardShape::find(l, 3).unwrap();
        assert_eq!(s.tail().rows(), 1);
        assert_eq!(s.basis().transpose().mul(s.lattice().gram()).mul(s.basis()), s.tilde_gram());
    }
}
