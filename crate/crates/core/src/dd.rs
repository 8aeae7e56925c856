//! Double-double real and complex arithmetic.
//!
//! A `Dd` value is an unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`,
//! giving roughly 106 bits of significand. Only the operations needed by the
//! lattice Stieltjes procedure are provided.

use num_complex::Complex64;
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

const LN2: Dd = Dd {
    hi: std::f64::consts::LN_2,
    lo: 2.319_046_813_846_299_6e-17,
};
const TWO_PI: Dd = Dd {
    hi: std::f64::consts::TAU,
    lo: 2.449_293_598_294_706_4e-16,
};

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    /// Multiplication by an exact power of two.
    pub fn ldexp(self, k: i32) -> Self {
        let s = 2f64.powi(k);
        Dd {
            hi: self.hi * s,
            lo: self.lo * s,
        }
    }

    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return Dd::ZERO;
        }
        let x = Dd::new(self.hi.sqrt());
        x + (self - x * x) / (x + x)
    }

    pub fn exp(self) -> Self {
        if self.hi < -745.0 {
            return Dd::ZERO;
        }
        let k = (self.hi / LN2.hi).round();
        let r = (self - LN2 * Dd::new(k)).ldexp(-10);
        // Taylor series of exp(r) - 1 on |r| < 2^-10 * ln2/2.
        let mut term = r;
        let mut sum = r;
        for i in 2..=14 {
            term = term * r / Dd::new(i as f64);
            sum = sum + term;
        }
        // (1 + s)^2 - 1 = s (2 + s), repeated ten times.
        for _ in 0..10 {
            sum = sum * (sum + Dd::new(2.0));
        }
        (sum + Dd::ONE).ldexp(k as i32)
    }

    /// Returns `(sin x, cos x)`.
    pub fn sin_cos(self) -> (Self, Self) {
        let k = (self.hi / TWO_PI.hi).round();
        let r = (self - TWO_PI * Dd::new(k)).ldexp(-8);
        let r2 = r * r;
        let mut s = r;
        let mut c = Dd::ONE;
        let mut ts = r;
        let mut tc = Dd::ONE;
        for i in 1..=12 {
            let f = (2 * i) as f64;
            ts = -(ts * r2) / Dd::new(f * (f + 1.0));
            tc = -(tc * r2) / Dd::new((f - 1.0) * f);
            s = s + ts;
            c = c + tc;
        }
        // Double the angle while tracking v = 1 - cos, which keeps its
        // relative accuracy for small angles.
        let mut v = Dd::ONE - c;
        for _ in 0..8 {
            let s2 = (s * (Dd::ONE - v)).ldexp(1);
            v = (s * s).ldexp(1);
            s = s2;
        }
        (s, Dd::ONE - v)
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Self {
        Dd::new(x)
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b * Dd::new(q1);
        let q2 = r.hi / b.hi;
        let r = r - b * Dd::new(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::new(q3)
    }
}

/// Complex number with double-double parts.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Cdd {
    pub re: Dd,
    pub im: Dd,
}

impl Cdd {
    pub fn new(re: Dd, im: Dd) -> Self {
        Cdd { re, im }
    }

    /// `e^{i x}` for real `x`.
    pub fn cis(x: Dd) -> Self {
        let (s, c) = x.sin_cos();
        Cdd { re: c, im: s }
    }

    pub fn scale(self, k: Dd) -> Self {
        Cdd {
            re: self.re * k,
            im: self.im * k,
        }
    }
}

impl Neg for Cdd {
    type Output = Cdd;
    fn neg(self) -> Cdd {
        Cdd {
            re: -self.re,
            im: -self.im,
        }
    }
}

impl Add for Cdd {
    type Output = Cdd;
    fn add(self, b: Cdd) -> Cdd {
        Cdd {
            re: self.re + b.re,
            im: self.im + b.im,
        }
    }
}

impl Sub for Cdd {
    type Output = Cdd;
    fn sub(self, b: Cdd) -> Cdd {
        Cdd {
            re: self.re - b.re,
            im: self.im - b.im,
        }
    }
}

impl Mul for Cdd {
    type Output = Cdd;
    fn mul(self, b: Cdd) -> Cdd {
        Cdd {
            re: self.re * b.re - self.im * b.im,
            im: self.re * b.im + self.im * b.re,
        }
    }
}

impl Div for Cdd {
    type Output = Cdd;
    fn div(self, b: Cdd) -> Cdd {
        // Scale by the larger component to keep the denominator in range.
        let m = Dd::new(b.re.hi.abs().max(b.im.hi.abs()));
        let (br, bi) = (b.re / m, b.im / m);
        let d = br * br + bi * bi;
        let re = (self.re * br + self.im * bi) / d / m;
        let im = (self.im * br - self.re * bi) / d / m;
        Cdd { re, im }
    }
}

/// Scalar field the Stieltjes procedure runs over.
pub trait Field:
    Copy
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_c64(z: Complex64) -> Self;
    fn to_c64(self) -> Complex64;
}

impl Field for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn from_c64(z: Complex64) -> Self {
        z
    }
    fn to_c64(self) -> Complex64 {
        self
    }
}

impl Field for Cdd {
    fn zero() -> Self {
        Cdd::default()
    }
    fn one() -> Self {
        Cdd {
            re: Dd::ONE,
            im: Dd::ZERO,
        }
    }
    fn from_c64(z: Complex64) -> Self {
        Cdd {
            re: Dd::new(z.re),
            im: Dd::new(z.im),
        }
    }
    fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }
}
