//! Scalar abstraction shared by the binary64 pipeline and the
//! extended-precision reference solver.
//!
//! Arbitrary-precision values carry their own mantissa length, so constants
//! cannot be minted out of thin air; every constructor takes a prototype
//! value whose precision the result inherits. For `f64` all of this erases
//! to ordinary arithmetic.

use std::fmt::Debug;

pub trait Scalar: Clone + PartialOrd + Debug {
    /// Additive identity at the precision of `self`.
    fn zero_like(&self) -> Self;
    /// Multiplicative identity at the precision of `self`.
    fn one_like(&self) -> Self;
    /// Converts `x` exactly, then rounds to the precision of `proto`.
    fn from_f64(x: f64, proto: &Self) -> Self;
    fn to_f64(&self) -> f64;
    /// Unit roundoff of the representation of `self`.
    fn eps_like(&self) -> Self;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn div(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    fn abs(&self) -> Self;
    fn exp(&self) -> Self;
    fn is_finite(&self) -> bool;

    fn is_zero(&self) -> bool {
        *self == self.zero_like()
    }

    fn is_positive(&self) -> bool {
        *self > self.zero_like()
    }

    fn is_negative(&self) -> bool {
        *self < self.zero_like()
    }

    /// `self + a * b`, the accumulation step of every inner product here.
    fn mul_add_acc(&self, a: &Self, b: &Self) -> Self {
        self.add(&a.mul(b))
    }
}

impl Scalar for f64 {
    #[inline]
    fn zero_like(&self) -> Self {
        0.0
    }

    #[inline]
    fn one_like(&self) -> Self {
        1.0
    }

    #[inline]
    fn from_f64(x: f64, _proto: &Self) -> Self {
        x
    }

    #[inline]
    fn to_f64(&self) -> f64 {
        *self
    }

    #[inline]
    fn eps_like(&self) -> Self {
        f64::EPSILON
    }

    #[inline]
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }

    #[inline]
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }

    #[inline]
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }

    #[inline]
    fn div(&self, rhs: &Self) -> Self {
        self / rhs
    }

    #[inline]
    fn neg(&self) -> Self {
        -self
    }

    #[inline]
    fn abs(&self) -> Self {
        f64::abs(*self)
    }

    #[inline]
    fn exp(&self) -> Self {
        f64::exp(*self)
    }

    #[inline]
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}
