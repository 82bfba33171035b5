//! Minimal 2x2 matrix arithmetic; the state space is two-dimensional throughout.

use core::ops::{Add, Mul, Neg, Sub};

use crate::scalar::Real;

/// Row-major 2x2 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2<F> {
    pub a11: F,
    pub a12: F,
    pub a21: F,
    pub a22: F,
}

impl<F: Real> Mat2<F> {
    pub fn new(a11: F, a12: F, a21: F, a22: F) -> Self {
        Self { a11, a12, a21, a22 }
    }

    pub fn identity() -> Self {
        Self::new(F::one(), F::zero(), F::zero(), F::one())
    }

    pub fn zero() -> Self {
        Self::new(F::zero(), F::zero(), F::zero(), F::zero())
    }

    pub fn det(&self) -> F {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn trace(&self) -> F {
        self.a11 + self.a22
    }

    pub fn scale(&self, s: F) -> Self {
        Self::new(self.a11 * s, self.a12 * s, self.a21 * s, self.a22 * s)
    }

    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d == F::zero() || !d.is_finite() {
            return None;
        }
        Some(Self::new(self.a22 / d, -self.a12 / d, -self.a21 / d, self.a11 / d))
    }

    /// Solve `self * x = rhs` for x = (x1, x2).
    pub fn solve(&self, rhs: (F, F)) -> Option<(F, F)> {
        let d = self.det();
        if d == F::zero() || !d.is_finite() {
            return None;
        }
        let x1 = (rhs.0 * self.a22 - rhs.1 * self.a12) / d;
        let x2 = (self.a11 * rhs.1 - self.a21 * rhs.0) / d;
        Some((x1, x2))
    }

    pub fn mul_vec(&self, v: (F, F)) -> (F, F) {
        (
            self.a11 * v.0 + self.a12 * v.1,
            self.a21 * v.0 + self.a22 * v.1,
        )
    }

    pub fn frobenius_norm(&self) -> F {
        (self.a11 * self.a11 + self.a12 * self.a12 + self.a21 * self.a21 + self.a22 * self.a22)
            .sqrt()
    }
}

impl<F: Real> Mul for Mat2<F> {
    type Output = Mat2<F>;

    fn mul(self, rhs: Mat2<F>) -> Mat2<F> {
        Mat2::new(
            self.a11 * rhs.a11 + self.a12 * rhs.a21,
            self.a11 * rhs.a12 + self.a12 * rhs.a22,
            self.a21 * rhs.a11 + self.a22 * rhs.a21,
            self.a21 * rhs.a12 + self.a22 * rhs.a22,
        )
    }
}

impl<F: Real> Add for Mat2<F> {
    type Output = Mat2<F>;

    fn add(self, rhs: Mat2<F>) -> Mat2<F> {
        Mat2::new(
            self.a11 + rhs.a11,
            self.a12 + rhs.a12,
            self.a21 + rhs.a21,
            self.a22 + rhs.a22,
        )
    }
}

impl<F: Real> Sub for Mat2<F> {
    type Output = Mat2<F>;

    fn sub(self, rhs: Mat2<F>) -> Mat2<F> {
        Mat2::new(
            self.a11 - rhs.a11,
            self.a12 - rhs.a12,
            self.a21 - rhs.a21,
            self.a22 - rhs.a22,
        )
    }
}

impl<F: Real> Neg for Mat2<F> {
    type Output = Mat2<F>;

    fn neg(self) -> Mat2<F> {
        self.scale(-F::one())
    }
}
