//! Dense exact linear algebra over ℚ and lattice (ℤ-module) helpers.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rat::{primitive_int, q, qi, Q};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QMat {
    rows: usize,
    cols: usize,
    data: Vec<Q>,
}

impl fmt::Debug for QMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "QMat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(crate::rat::fmt_q).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for QMat {
    type Output = Q;
    fn index(&self, (i, j): (usize, usize)) -> &Q {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for QMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Q {
        &mut self.data[i * self.cols + j]
    }
}

impl QMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        QMat { rows, cols, data: vec![Q::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Q::one();
        }
        m
    }

    pub fn diag(d: &[Q]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, x) in d.iter().enumerate() {
            m[(i, i)] = x.clone();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Q>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        if rows.iter().any(|x| x.len() != c) {
            return Err(Error::DimensionMismatch("ragged matrix rows".into()));
        }
        Ok(QMat { rows: r, cols: c, data: rows.into_iter().flatten().collect() })
    }

    /// Panicking constructor for literals in tests and internal code.
    pub fn from_i64(rows: &[&[i64]]) -> Self {
        Self::from_rows(rows.iter().map(|r| r.iter().map(|&x| q(x)).collect()).collect())
            .expect("rectangular literal")
    }

    pub fn from_cols(cols: &[Vec<Q>]) -> Result<Self> {
        Ok(Self::from_rows(cols.to_vec())?.transpose())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[Q] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<Q> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<Q>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, o: &QMat) -> QMat {
        assert_eq!(self.cols, o.rows, "matrix product shape");
        let mut m = QMat::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    if !o[(k, j)].is_zero() {
                        m[(i, j)] += a * &o[(k, j)];
                    }
                }
            }
        }
        m
    }

    pub fn mul_vec(&self, v: &[Q]) -> Vec<Q> {
        assert_eq!(self.cols, v.len(), "matrix-vector shape");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).fold(Q::zero(), |acc, (a, b)| acc + a * b))
            .collect()
    }

    pub fn add(&self, o: &QMat) -> QMat {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        QMat { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&o.data).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, o: &QMat) -> QMat {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        QMat { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&o.data).map(|(a, b)| a - b).collect() }
    }

    pub fn scale(&self, s: &Q) -> QMat {
        QMat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a * s).collect() }
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square() && (0..self.rows).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    pub fn is_integral(&self) -> bool {
        self.data.iter().all(|x| x.is_integer())
    }

    pub fn is_identity(&self) -> bool {
        *self == QMat::identity(self.rows)
    }

    /// `aᵗ · self · b` for a square matrix.
    pub fn bilinear(&self, a: &[Q], b: &[Q]) -> Q {
        let mb = self.mul_vec(b);
        a.iter().zip(&mb).fold(Q::zero(), |acc, (x, y)| acc + x * y)
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> QMat {
        let mut m = QMat::zeros(rows.len(), cols.len());
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                m[(a, b)] = self[(i, j)].clone();
            }
        }
        m
    }

    pub fn pow(&self, mut e: u64) -> QMat {
        let mut base = self.clone();
        let mut acc = QMat::identity(self.rows);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    /// Reduced row echelon form and pivot columns.
    pub fn rref(&self) -> (QMat, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| !m[(i, c)].is_zero()) else { continue };
            m.swap_rows(r, p);
            let inv = m[(r, c)].recip();
            for j in 0..m.cols {
                let v = &m[(r, j)] * &inv;
                m[(r, j)] = v;
            }
            for i in 0..m.rows {
                if i != r && !m[(i, c)].is_zero() {
                    let f = m[(i, c)].clone();
                    for j in 0..m.cols {
                        let v = &m[(r, j)] * &f;
                        m[(i, j)] -= v;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    pub fn det(&self) -> Q {
        assert!(self.is_square(), "determinant of a non-square matrix");
        let n = self.rows;
        let mut m = self.clone();
        let mut det = Q::one();
        for c in 0..n {
            let Some(p) = (c..n).find(|&i| !m[(i, c)].is_zero()) else { return Q::zero() };
            if p != c {
                m.swap_rows(p, c);
                det = -det;
            }
            let piv = m[(c, c)].clone();
            det *= &piv;
            for i in c + 1..n {
                if m[(i, c)].is_zero() {
                    continue;
                }
                let f = &m[(i, c)] / &piv;
                for j in c..n {
                    let v = &m[(c, j)] * &f;
                    m[(i, j)] -= v;
                }
            }
        }
        det
    }

    pub fn inverse(&self) -> Option<QMat> {
        if !self.is_square() {
            return None;
        }
        let n = self.rows;
        let mut aug = QMat::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, n + i)] = Q::one();
        }
        let (r, piv) = aug.rref();
        if piv.len() < n || piv[n - 1] != n - 1 {
            return None;
        }
        let cols: Vec<usize> = (n..2 * n).collect();
        let rows: Vec<usize> = (0..n).collect();
        Some(r.submatrix(&rows, &cols))
    }

    /// Basis of the right null space {x : self·x = 0}.
    pub fn kernel(&self) -> Vec<Vec<Q>> {
        let (r, piv) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !piv.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![Q::zero(); self.cols];
                v[f] = Q::one();
                for (i, &p) in piv.iter().enumerate() {
                    v[p] = -r[(i, f)].clone();
                }
                v
            })
            .collect()
    }

    /// One solution of self·x = b, if any.
    pub fn solve(&self, b: &[Q]) -> Option<Vec<Q>> {
        let mut aug = QMat::zeros(self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, self.cols)] = b[i].clone();
        }
        let (r, piv) = aug.rref();
        if piv.last() == Some(&self.cols) {
            return None;
        }
        let mut x = vec![Q::zero(); self.cols];
        for (i, &p) in piv.iter().enumerate() {
            x[p] = r[(i, self.cols)].clone();
        }
        Some(x)
    }
}

pub fn dot(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).fold(Q::zero(), |acc, (x, y)| acc + x * y)
}

pub fn vadd(a: &[Q], b: &[Q]) -> Vec<Q> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn vsub(a: &[Q], b: &[Q]) -> Vec<Q> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn vscale(a: &[Q], s: &Q) -> Vec<Q> {
    a.iter().map(|x| x * s).collect()
}

pub fn is_zero_vec(a: &[Q]) -> bool {
    a.iter().all(|x| x.is_zero())
}

pub fn rank_of(vectors: &[Vec<Q>]) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    QMat::from_rows(vectors.to_vec()).map(|m| m.rank()).unwrap_or(0)
}

/// A ℚ-basis of the span of the given vectors (subset, in order).
pub fn independent_subset(vectors: &[Vec<Q>]) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::new();
    let mut rows: Vec<Vec<Q>> = Vec::new();
    for (i, v) in vectors.iter().enumerate() {
        rows.push(v.clone());
        if rank_of(&rows) > chosen.len() {
            chosen.push(i);
        } else {
            rows.pop();
        }
    }
    chosen
}

// ---------------------------------------------------------------------------
// Integer lattices
// ---------------------------------------------------------------------------

pub type ZVec = Vec<BigInt>;

pub fn zq(v: &[BigInt]) -> Vec<Q> {
    v.iter().map(qi).collect()
}

/// ℤ-basis of {x ∈ ℤⁿ : M·x = 0} for an integral M given by rows of length n.
///
/// Column-style Hermite reduction: unimodular column operations bring M to
/// lower-echelon form; the transform's columns past the rank span the kernel.
pub fn int_kernel(rows: &[Vec<Q>], n: usize) -> Vec<ZVec> {
    let (rank, u) = column_hermite(rows, n);
    (rank..n).map(|j| (0..n).map(|i| u[i][j].clone()).collect()).collect()
}

/// Unimodular U (returned row-major) with M·U lower echelon, and the rank of M.
/// Rows of M are scaled to primitive integer vectors first.
pub fn column_hermite(rows: &[Vec<Q>], n: usize) -> (usize, Vec<ZVec>) {
    let m: Vec<ZVec> = rows.iter().map(|r| primitive_int(r)).collect();
    let k = m.len();
    let mut a: Vec<ZVec> = m; // k × n, operated on by columns
    let mut u: Vec<ZVec> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect(); // n × n, columns transform alongside
    let mut pivot_col = 0;
    for r in 0..k {
        if pivot_col == n {
            break;
        }
        // gcd-reduce entries a[r][pivot_col..] into a[r][pivot_col]
        loop {
            let nz: Vec<usize> = (pivot_col..n).filter(|&j| !a[r][j].is_zero()).collect();
            if nz.is_empty() {
                break;
            }
            let jmin = *nz.iter().min_by_key(|&&j| a[r][j].abs()).unwrap();
            swap_cols(&mut a, &mut u, pivot_col, jmin);
            let mut done = true;
            for j in pivot_col + 1..n {
                if a[r][j].is_zero() {
                    continue;
                }
                let f = a[r][j].div_floor(&a[r][pivot_col]);
                col_axpy(&mut a, &mut u, j, pivot_col, &f);
                if !a[r][j].is_zero() {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if !a[r][pivot_col].is_zero() {
            pivot_col += 1;
        }
    }
    (pivot_col, u)
}

/// Split ℤⁿ along a saturated sublattice with basis `sub`: returns
/// (K, W) where the rows of K are integral functionals with kernel span(sub)
/// mapping ℤⁿ onto ℤ^{n−k}, and the rows of W are lifts with K·Wᵗ = Id.
pub fn quotient_lattice(sub: &[ZVec], n: usize) -> (Vec<ZVec>, Vec<ZVec>) {
    let rows: Vec<Vec<Q>> = sub.iter().map(|v| zq(v)).collect();
    let (rank, u) = column_hermite(&rows, n);
    let umat = QMat::from_rows(u.iter().map(|r| zq(r)).collect()).expect("square");
    let uinv = umat.inverse().expect("unimodular");
    let k: Vec<ZVec> = (rank..n).map(|j| (0..n).map(|i| u[i][j].clone()).collect()).collect();
    let w: Vec<ZVec> = (rank..n).map(|i| uinv.row(i).iter().map(|x| x.to_integer()).collect()).collect();
    (k, w)
}

fn swap_cols(a: &mut [ZVec], u: &mut [ZVec], i: usize, j: usize) {
    if i == j {
        return;
    }
    for row in a.iter_mut() {
        row.swap(i, j);
    }
    for row in u.iter_mut() {
        row.swap(i, j);
    }
}

// column_j -= f * column_p
fn col_axpy(a: &mut [ZVec], u: &mut [ZVec], j: usize, p: usize, f: &BigInt) {
    for row in a.iter_mut() {
        let v = &row[p] * f;
        row[j] -= v;
    }
    for row in u.iter_mut() {
        let v = &row[p] * f;
        row[j] -= v;
    }
}

/// ℤ-basis of the saturation (span_ℚ(vectors) ∩ ℤⁿ).
pub fn saturate(vectors: &[Vec<Q>], n: usize) -> Vec<ZVec> {
    if vectors.is_empty() || rank_of(vectors) == 0 {
        return Vec::new();
    }
    // equations of the span: kernel of the transpose
    let span = QMat::from_rows(vectors.to_vec()).expect("rectangular");
    let eqs = span.kernel(); // vectors e with <v, e> = 0 for all v
    if eqs.is_empty() {
        return (0..n)
            .map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
            .collect();
    }
    lll_ish_reduce(int_kernel(&eqs, n))
}

/// Cheap size reduction so that printed bases stay small; keeps the lattice.
fn lll_ish_reduce(mut b: Vec<ZVec>) -> Vec<ZVec> {
    let norm = |v: &ZVec| v.iter().map(|x| x * x).fold(BigInt::zero(), |a, c| a + c);
    let mut changed = true;
    let mut rounds = 0;
    while changed && rounds < 50 {
        changed = false;
        rounds += 1;
        for i in 0..b.len() {
            for j in 0..b.len() {
                if i == j {
                    continue;
                }
                let bij: BigInt = b[i].iter().zip(&b[j]).map(|(x, y)| x * y).fold(BigInt::zero(), |a, c| a + c);
                let nj = norm(&b[j]);
                if nj.is_zero() {
                    continue;
                }
                // nearest integer to bij / nj
                let f = (Q::new(bij, nj.clone()) + Q::new(BigInt::one(), BigInt::from(2))).floor().to_integer();
                if !f.is_zero() {
                    let cand: ZVec = b[i].iter().zip(&b[j]).map(|(x, y)| x - &f * y).collect();
                    if norm(&cand) < norm(&b[i]) {
                        b[i] = cand;
                        changed = true;
                    }
                }
            }
        }
    }
    for v in b.iter_mut() {
        if let Some(first) = v.iter().find(|x| !x.is_zero()) {
            if first.is_negative() {
                for x in v.iter_mut() {
                    *x = -x.clone();
                }
            }
        }
    }
    b.sort();
    b
}

/// Absolute value of the Gram determinant of a set of integer vectors
/// under the standard dot product (the squared covolume).
pub fn gram_det_std(basis: &[ZVec]) -> BigInt {
    let rows: Vec<Vec<Q>> = basis
        .iter()
        .map(|a| basis.iter().map(|b| qi(&a.iter().zip(b).map(|(x, y)| x * y).sum::<BigInt>())).collect())
        .collect();
    if rows.is_empty() {
        return BigInt::one();
    }
    QMat::from_rows(rows).unwrap().det().to_integer().abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::qr;

    #[test]
    fn det_inverse_kernel() {
        let m = QMat::from_i64(&[&[2, 1], &[1, 2]]);
        assert_eq!(m.det(), q(3));
        let inv = m.inverse().unwrap();
        assert!(m.mul(&inv).is_identity());
        let s = QMat::from_i64(&[&[1, 2, 3], &[2, 4, 6]]);
        assert_eq!(s.rank(), 1);
        let k = s.kernel();
        assert_eq!(k.len(), 2);
        for v in &k {
            assert!(is_zero_vec(&s.mul_vec(v)));
        }
        assert!(QMat::from_i64(&[&[1, 2], &[2, 4]]).inverse().is_none());
    }

    #[test]
    fn solve_linear() {
        let m = QMat::from_i64(&[&[1, 1], &[1, -1]]);
        assert_eq!(m.solve(&[q(3), q(1)]).unwrap(), vec![q(2), q(1)]);
        let sing = QMat::from_i64(&[&[1, 1], &[1, 1]]);
        assert!(sing.solve(&[q(1), q(2)]).is_none());
    }

    #[test]
    fn integer_kernel_is_saturated() {
        // 2x + 4y + 6z = 0 → the kernel lattice has index 1 in its span
        let k = int_kernel(&[vec![q(2), q(4), q(6)]], 3);
        assert_eq!(k.len(), 2);
        assert_eq!(gram_det_std(&k), BigInt::from(14)); // covolume² of x+2y+3z=0
        // saturation of span{(2,2)} is span{(1,1)}
        let s = saturate(&[vec![q(2), q(2)]], 2);
        assert_eq!(s, vec![vec![BigInt::from(1), BigInt::from(1)]]);
        let s = saturate(&[vec![qr(1, 2), q(0), q(1)], vec![q(0), q(3), q(0)]], 3);
        assert_eq!(s.len(), 2);
        assert_eq!(gram_det_std(&s), BigInt::from(5));
    }
}
