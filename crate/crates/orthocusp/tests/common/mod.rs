//! Seeded generators shared by the integration tests.
#![allow(dead_code)]

use num_complex::Complex;
use num_traits::Zero;
use orthocusp::domains::{in_bounded, BoundedFrame, KappaClass, TubeFrame};
use orthocusp::linalg::QMat;
use orthocusp::rat::{q, qr, Q};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Cq = Complex<Q>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rand_q(r: &mut ChaCha8Rng, num: i64, den: i64) -> Q {
    qr(r.gen_range(-num..=num), r.gen_range(1..=den))
}

pub fn rand_cq(r: &mut ChaCha8Rng, num: i64, den: i64) -> Cq {
    Complex::new(rand_q(r, num, den), rand_q(r, num, den))
}

/// Negative-definite tails used for the standard frames.
pub fn tails() -> Vec<QMat> {
    vec![
        QMat::from_i64(&[&[-2]]),
        QMat::from_i64(&[&[-2, 1], &[1, -2]]),
        QMat::from_i64(&[&[-2, 0, 0], &[0, -4, 1], &[0, 1, -6]]),
    ]
}

/// A tube point in the requested component, by rejection from a box.
pub fn random_tube_point(r: &mut ChaCha8Rng, frame: &TubeFrame, class: KappaClass) -> Vec<Cq> {
    let n = frame.n();
    loop {
        let y: Vec<Cq> = (0..n).map(|_| rand_cq(r, 6, 4)).collect();
        if frame.tube_class(&y, 0.0).unwrap() == class {
            return y;
        }
    }
}

/// A bounded-domain point, by rejection from a box shrinking with the dimension.
pub fn random_bounded_point(r: &mut ChaCha8Rng, bf: &BoundedFrame) -> Vec<Cq> {
    let n = bf.n();
    let shrink = Complex::new(qr(1, 2 * n as i64), q(0));
    loop {
        let z: Vec<Cq> = (0..n).map(|_| rand_cq(r, 2, 3) * &shrink).collect();
        if in_bounded(bf, &z, 0.0).unwrap() && !bf.s_of(&z).norm_sqr().is_zero() {
            return z;
        }
    }
}

pub fn cscale(v: &[Cq], c: &Cq) -> Vec<Cq> {
    v.iter().map(|z| z * c).collect()
}

/// Proportionality of two complex vectors via all 2×2 minors.
pub fn proportional(a: &[Cq], b: &[Cq]) -> bool {
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            if &a[i] * &b[j] - &a[j] * &b[i] != Complex::new(q(0), q(0)) {
                return false;
            }
        }
    }
    true
}

pub fn random_invertible(r: &mut ChaCha8Rng, m: usize, range: i64) -> QMat {
    loop {
        let rows: Vec<Vec<Q>> = (0..m).map(|_| (0..m).map(|_| q(r.gen_range(-range..=range))).collect()).collect();
        let t = QMat::from_rows(rows).unwrap();
        if !t.det().is_zero() {
            return t;
        }
    }
}
