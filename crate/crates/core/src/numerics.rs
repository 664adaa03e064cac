//! Double-word ("double-double") floating point.
//!
//! A [`DoubleWord`] carries an unevaluated sum `hi + lo` with
//! `|lo| <= ulp(hi) / 2`, giving roughly 106 bits of significand. The
//! algorithms are the error-free transformations of Knuth and Dekker together
//! with the accurate sum/product variants analysed by Joldes, Muller and
//! Popescu. Relative error of `+`, `-` and `*` stays below `6e-32`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Error-free sum: returns `(s, e)` with `s = fl(a + b)` and `a + b = s + e`.
#[inline]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

/// Like [`two_sum`] but requires `|a| >= |b|` (or `a == 0`).
#[inline]
pub fn fast_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let e = b - (s - a);
    (s, e)
}

/// Error-free product via fused multiply-add.
#[inline]
pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let e = a.mul_add(b, -p);
    (p, e)
}

#[derive(Copy, Clone, Default, PartialEq)]
pub struct DoubleWord {
    hi: f64,
    lo: f64,
}

impl DoubleWord {
    pub const ZERO: Self = Self { hi: 0.0, lo: 0.0 };
    pub const ONE: Self = Self { hi: 1.0, lo: 0.0 };
    /// 2π rounded to double-word precision.
    pub const TAU: Self = Self {
        hi: 6.283_185_307_179_586,
        lo: 2.449_293_598_294_706_4e-16,
    };
    /// Speed of light in vacuum, m/s (exact by definition of the metre).
    pub const SPEED_OF_LIGHT: Self = Self {
        hi: 299_792_458.0,
        lo: 0.0,
    };

    #[inline]
    pub const fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    /// Builds a normalized value from an arbitrary pair whose exact sum is
    /// the intended number.
    #[inline]
    pub fn from_parts(hi: f64, lo: f64) -> Self {
        let (hi, lo) = two_sum(hi, lo);
        Self { hi, lo }
    }

    /// Exact product of two doubles.
    #[inline]
    pub fn from_product(a: f64, b: f64) -> Self {
        let (hi, lo) = two_prod(a, b);
        Self { hi, lo }
    }

    /// Exact difference of two doubles.
    #[inline]
    pub fn from_difference(a: f64, b: f64) -> Self {
        let (hi, lo) = two_sum(a, -b);
        Self { hi, lo }
    }

    #[inline]
    pub const fn hi(self) -> f64 {
        self.hi
    }

    #[inline]
    pub const fn lo(self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    #[inline]
    pub fn abs(self) -> Self {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    #[inline]
    pub fn signum(self) -> f64 {
        if self.hi == 0.0 {
            if self.lo == 0.0 {
                0.0
            } else {
                self.lo.signum()
            }
        } else {
            self.hi.signum()
        }
    }

    /// Largest integer not greater than `self`.
    pub fn floor(self) -> Self {
        let hi = self.hi.floor();
        if hi == self.hi {
            // hi is already integral; the fractional part lives in lo.
            let lo = self.lo.floor();
            let (hi, lo) = fast_two_sum(hi, lo);
            Self { hi, lo }
        } else {
            Self { hi, lo: 0.0 }
        }
    }

    /// Splits into `(integer part, fractional part)` with the fractional
    /// part in `[0, 1)`. Both parts are exact.
    pub fn split_integer(self) -> (Self, Self) {
        let whole = self.floor();
        let mut frac = self - whole;
        // Rounding can leave the fraction a hair below 0 or at exactly 1.
        if frac < Self::ZERO {
            frac = frac + Self::ONE;
        }
        if frac >= Self::ONE {
            frac = frac - Self::ONE;
        }
        (whole, frac)
    }

    #[inline]
    pub fn mul_f64(self, b: f64) -> Self {
        let (ch, cl1) = two_prod(self.hi, b);
        let cl3 = self.lo.mul_add(b, cl1);
        let (hi, lo) = fast_two_sum(ch, cl3);
        Self { hi, lo }
    }

    #[inline]
    pub fn add_f64(self, b: f64) -> Self {
        let (sh, sl) = two_sum(self.hi, b);
        let v = self.lo + sl;
        let (hi, lo) = fast_two_sum(sh, v);
        Self { hi, lo }
    }

    pub fn recip(self) -> Self {
        Self::ONE / self
    }
}

impl Neg for DoubleWord {
    type Output = Self;

    #[inline]
    fn neg(self) -> Self {
        Self {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for DoubleWord {
    type Output = Self;

    #[inline]
    fn add(self, other: Self) -> Self {
        let (sh, sl) = two_sum(self.hi, other.hi);
        let (th, tl) = two_sum(self.lo, other.lo);
        let c = sl + th;
        let (vh, vl) = fast_two_sum(sh, c);
        let w = tl + vl;
        let (hi, lo) = fast_two_sum(vh, w);
        Self { hi, lo }
    }
}

impl Sub for DoubleWord {
    type Output = Self;

    #[inline]
    fn sub(self, other: Self) -> Self {
        self + (-other)
    }
}

impl Mul for DoubleWord {
    type Output = Self;

    #[inline]
    fn mul(self, other: Self) -> Self {
        let (ch, cl1) = two_prod(self.hi, other.hi);
        let tl = self.hi * other.lo;
        let cl2 = self.lo.mul_add(other.hi, tl);
        let cl3 = cl1 + cl2;
        let (hi, lo) = fast_two_sum(ch, cl3);
        Self { hi, lo }
    }
}

impl Div for DoubleWord {
    type Output = Self;

    fn div(self, other: Self) -> Self {
        let q1 = self.hi / other.hi;
        let r = self - other.mul_f64(q1);
        let q2 = r.hi / other.hi;
        let r = r - other.mul_f64(q2);
        let q3 = r.hi / other.hi;
        let (hi, lo) = fast_two_sum(q1, q2);
        Self { hi, lo }.add_f64(q3)
    }
}

impl PartialOrd for DoubleWord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            ord => ord,
        }
    }
}

impl From<f64> for DoubleWord {
    fn from(x: f64) -> Self {
        Self::from_f64(x)
    }
}

impl fmt::Debug for DoubleWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DoubleWord({:e} + {:e})", self.hi, self.lo)
    }
}

impl fmt::Display for DoubleWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}", self.to_f64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_free_transforms_are_exact() {
        let (s, e) = two_sum(1.0, 1e-20);
        assert_eq!(s, 1.0);
        assert_eq!(e, 1e-20);
        let (p, e) = two_prod(1.0 + f64::EPSILON, 1.0 + f64::EPSILON);
        assert_eq!(p, 1.0 + 2.0 * f64::EPSILON);
        assert_eq!(e, f64::EPSILON * f64::EPSILON);
    }

    #[test]
    fn tiny_offset_survives_addition() {
        let one = DoubleWord::ONE;
        let x = one + DoubleWord::from_f64(1.1e-16) + DoubleWord::from_f64(1.1e-16);
        assert!(((x - one).to_f64() - 2.2e-16).abs() < 1e-31);
    }

    #[test]
    fn floor_and_split() {
        let x = DoubleWord::from_parts(1e16, 0.25);
        let (whole, frac) = x.split_integer();
        assert_eq!(whole.to_f64(), 1e16);
        assert_eq!(frac.to_f64(), 0.25);

        let y = DoubleWord::from_parts(-3.0, 1e-20);
        assert_eq!(y.floor().to_f64(), -3.0);
        let z = DoubleWord::from_parts(-3.0, -1e-20);
        assert_eq!(z.floor().to_f64(), -4.0);
        // 1 − 10⁻²⁰ rounds to 1.0 as a double but not as a double-word
        let (_, frac) = z.split_integer();
        assert!(frac < DoubleWord::ONE);
        assert_eq!((frac - DoubleWord::ONE).to_f64(), -1e-20);
    }

    #[test]
    fn division_recovers_factor() {
        let a = DoubleWord::from_parts(3.0, 1e-17);
        let b = DoubleWord::from_parts(7.0, -3e-17);
        let q = (a * b) / b;
        assert!(((q - a) / a).abs().to_f64() < 1e-31);
    }

    #[test]
    fn ordering_uses_low_word() {
        let a = DoubleWord::from_parts(1.0, 1e-20);
        let b = DoubleWord::from_parts(1.0, 2e-20);
        assert!(a < b);
        assert!(-b < -a);
    }
}
