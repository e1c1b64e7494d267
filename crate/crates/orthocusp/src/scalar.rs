//! Numeric backends.  The domain maps are written once over [`Field`] and
//! run either exactly over ℚ (Gaussian rationals after complexification)
//! or in double precision.

use std::fmt::Debug;
use std::ops::Neg;

use num_complex::Complex;
use num_traits::{Num, Signed, Zero};

use crate::rat::{to_f64, Q};

pub type C<T> = Complex<T>;

pub trait Field: Clone + Debug + PartialEq + Num + Neg<Output = Self> + Send + Sync + 'static {
    /// Exact backends decide signs exactly and ignore tolerances.
    const EXACT: bool;
    fn from_q(x: &Q) -> Self;
    fn to_f64(&self) -> f64;
    fn abs_val(&self) -> Self;
    /// −1, 0, +1; in float mode |x| ≤ tol counts as 0.
    fn sign_tol(&self, tol: f64) -> i8;
    fn is_negligible(&self, tol: f64) -> bool {
        self.sign_tol(tol) == 0
    }
}

impl Field for Q {
    const EXACT: bool = true;
    fn from_q(x: &Q) -> Self {
        x.clone()
    }
    fn to_f64(&self) -> f64 {
        to_f64(self)
    }
    fn abs_val(&self) -> Self {
        self.abs()
    }
    fn sign_tol(&self, _tol: f64) -> i8 {
        if self.is_zero() {
            0
        } else if self.is_positive() {
            1
        } else {
            -1
        }
    }
}

impl Field for f64 {
    const EXACT: bool = false;
    fn from_q(x: &Q) -> Self {
        to_f64(x)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn abs_val(&self) -> Self {
        self.abs()
    }
    fn sign_tol(&self, tol: f64) -> i8 {
        if self.abs() <= tol {
            0
        } else if *self > 0.0 {
            1
        } else {
            -1
        }
    }
}

pub fn cq<T: Field>(re: &Q, im: &Q) -> C<T> {
    C::new(T::from_q(re), T::from_q(im))
}

pub fn creal<T: Field>(x: T) -> C<T> {
    C::new(x, T::zero())
}

pub fn ci<T: Field>() -> C<T> {
    C::new(T::zero(), T::one())
}

pub fn conj_vec<T: Field>(v: &[C<T>]) -> Vec<C<T>> {
    v.iter().map(|z| z.conj()).collect()
}

pub fn re_vec<T: Field>(v: &[C<T>]) -> Vec<T> {
    v.iter().map(|z| z.re.clone()).collect()
}

pub fn im_vec<T: Field>(v: &[C<T>]) -> Vec<T> {
    v.iter().map(|z| z.im.clone()).collect()
}

pub fn norm_sq_vec<T: Field>(v: &[C<T>]) -> T {
    v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
}

pub fn cscale<T: Field>(v: &[C<T>], s: &C<T>) -> Vec<C<T>> {
    v.iter().map(|z| z.clone() * s.clone()).collect()
}

/// Convert an exact complex vector to floats.
pub fn to_float_vec(v: &[C<Q>]) -> Vec<C<f64>> {
    v.iter().map(|z| C::new(to_f64(&z.re), to_f64(&z.im))).collect()
}
