//! Scalar reduced biquaternions.
//!
//! `q = a + bi + cj + dk` with `i^2 = k^2 = -1`, `j^2 = 1` and `ij = ji = k`.
//! Writing `q = (a + bi) + (c + di) j = q_a + q_b j`, the split components are
//! `c1 = q_a + q_b` and `c2 = q_a - q_b`, so that `q = c1 e1 + c2 e2`.
//! Since `e1 e2 = 0` and both are idempotent, addition, multiplication and
//! conjugation act on `(c1, c2)` componentwise and exactly.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use nalgebra::Matrix4;
use num_complex::Complex64;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RbScalar {
    pub c1: Complex64,
    pub c2: Complex64,
}

const fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

impl RbScalar {
    pub const ZERO: RbScalar = RbScalar { c1: c(0.0, 0.0), c2: c(0.0, 0.0) };
    pub const ONE: RbScalar = RbScalar { c1: c(1.0, 0.0), c2: c(1.0, 0.0) };
    pub const I: RbScalar = RbScalar { c1: c(0.0, 1.0), c2: c(0.0, 1.0) };
    pub const J: RbScalar = RbScalar { c1: c(1.0, 0.0), c2: c(-1.0, 0.0) };
    pub const K: RbScalar = RbScalar { c1: c(0.0, 1.0), c2: c(0.0, -1.0) };
    pub const E1: RbScalar = RbScalar { c1: c(1.0, 0.0), c2: c(0.0, 0.0) };
    pub const E2: RbScalar = RbScalar { c1: c(0.0, 0.0), c2: c(1.0, 0.0) };

    pub const fn new(c1: Complex64, c2: Complex64) -> Self {
        RbScalar { c1, c2 }
    }

    /// Builds `a + bi + cj + dk`.
    pub fn from_coeffs(a: f64, b: f64, c: f64, d: f64) -> Self {
        let qa = Complex64::new(a, b);
        let qb = Complex64::new(c, d);
        RbScalar { c1: qa + qb, c2: qa - qb }
    }

    pub fn from_real(r: f64) -> Self {
        RbScalar { c1: c(r, 0.0), c2: c(r, 0.0) }
    }

    /// The real coefficients `(a, b, c, d)`.
    pub fn coeffs(&self) -> [f64; 4] {
        let qa = (self.c1 + self.c2) * 0.5;
        let qb = (self.c1 - self.c2) * 0.5;
        [qa.re, qa.im, qb.re, qb.im]
    }

    /// `a - bi + cj - dk`, i.e. both split channels conjugated.
    pub fn conj(self) -> Self {
        RbScalar { c1: self.c1.conj(), c2: self.c2.conj() }
    }

    /// `a^2 + b^2 + c^2 + d^2`, computed as `(|c1|^2 + |c2|^2) / 2`.
    pub fn norm_sqr(&self) -> f64 {
        0.5 * (self.c1.norm_sqr() + self.c2.norm_sqr())
    }

    pub fn modulus(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Real part `a` of the coefficient view.
    pub fn re(&self) -> f64 {
        0.5 * (self.c1.re + self.c2.re)
    }

    pub fn scale(self, s: f64) -> Self {
        RbScalar { c1: self.c1 * s, c2: self.c2 * s }
    }

    pub fn is_finite(&self) -> bool {
        self.c1.is_finite() && self.c2.is_finite()
    }

    /// The 4x4 real representation
    /// `[a -b c -d; b a d c; c -d a -b; d c b a]`.
    pub fn real_rep(&self) -> Matrix4<f64> {
        let [a, b, c, d] = self.coeffs();
        #[rustfmt::skip]
        let m = Matrix4::new(
            a, -b,  c, -d,
            b,  a,  d,  c,
            c, -d,  a, -b,
            d,  c,  b,  a,
        );
        m
    }
}

impl fmt::Display for RbScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.coeffs();
        write!(f, "{a} {b:+}i {c:+}j {d:+}k")
    }
}

impl From<f64> for RbScalar {
    fn from(r: f64) -> Self {
        RbScalar::from_real(r)
    }
}

impl Add for RbScalar {
    type Output = RbScalar;
    fn add(self, rhs: RbScalar) -> RbScalar {
        RbScalar { c1: self.c1 + rhs.c1, c2: self.c2 + rhs.c2 }
    }
}

impl Sub for RbScalar {
    type Output = RbScalar;
    fn sub(self, rhs: RbScalar) -> RbScalar {
        RbScalar { c1: self.c1 - rhs.c1, c2: self.c2 - rhs.c2 }
    }
}

impl Mul for RbScalar {
    type Output = RbScalar;
    fn mul(self, rhs: RbScalar) -> RbScalar {
        RbScalar { c1: self.c1 * rhs.c1, c2: self.c2 * rhs.c2 }
    }
}

impl Mul<f64> for RbScalar {
    type Output = RbScalar;
    fn mul(self, rhs: f64) -> RbScalar {
        self.scale(rhs)
    }
}

impl Neg for RbScalar {
    type Output = RbScalar;
    fn neg(self) -> RbScalar {
        RbScalar { c1: -self.c1, c2: -self.c2 }
    }
}

impl AddAssign for RbScalar {
    fn add_assign(&mut self, rhs: RbScalar) {
        self.c1 += rhs.c1;
        self.c2 += rhs.c2;
    }
}

impl SubAssign for RbScalar {
    fn sub_assign(&mut self, rhs: RbScalar) {
        self.c1 -= rhs.c1;
        self.c2 -= rhs.c2;
    }
}

impl MulAssign for RbScalar {
    fn mul_assign(&mut self, rhs: RbScalar) {
        self.c1 *= rhs.c1;
        self.c2 *= rhs.c2;
    }
}

impl Sum for RbScalar {
    fn sum<I: Iterator<Item = RbScalar>>(iter: I) -> RbScalar {
        iter.fold(RbScalar::ZERO, |acc, x| acc + x)
    }
}
