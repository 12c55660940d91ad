//! Minimal double-double arithmetic (about 32 significant digits), enough to
//! evaluate the hyperbolic inequalities without cancellation trouble.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DD {
    pub hi: f64,
    pub lo: f64,
}

const LN2: DD = DD { hi: std::f64::consts::LN_2, lo: 2.319_046_813_846_299_6e-17 };

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

impl DD {
    pub const ZERO: DD = DD { hi: 0.0, lo: 0.0 };
    pub const ONE: DD = DD { hi: 1.0, lo: 0.0 };

    pub fn new(x: f64) -> DD {
        DD { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn sqr(self) -> DD {
        self * self
    }

    fn mul_pow2(self, k: i32) -> DD {
        let s = 2f64.powi(k);
        DD { hi: self.hi * s, lo: self.lo * s }
    }

    pub fn exp(self) -> DD {
        if self.hi == 0.0 {
            return DD::ONE;
        }
        // x = k ln2 + r, |r| <= ln2/2, then r is scaled down by 2^10 before the Taylor sum.
        let k = (self.hi / LN2.hi).round();
        let r = (self - LN2 * DD::new(k)).mul_pow2(-10);
        // Sum and square e^r - 1 rather than e^r, so the leading 1 does not eat the precision.
        let mut term = r;
        let mut s = r;
        for i in 2..=20 {
            term = term * r / DD::new(i as f64);
            s = s + term;
            if term.hi.abs() < 1e-36 {
                break;
            }
        }
        for _ in 0..10 {
            s = s.mul_pow2(1) + s.sqr();
        }
        (DD::ONE + s).mul_pow2(k as i32)
    }

    /// Returns `(cosh x, sinh x)`.
    pub fn cosh_sinh(self) -> (DD, DD) {
        let e = self.exp();
        let inv = DD::ONE / e;
        let half = DD::new(0.5);
        ((e + inv) * half, (e - inv) * half)
    }
}

impl Add for DD {
    type Output = DD;
    fn add(self, b: DD) -> DD {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        DD { hi, lo }
    }
}

impl Neg for DD {
    type Output = DD;
    fn neg(self) -> DD {
        DD { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for DD {
    type Output = DD;
    fn sub(self, b: DD) -> DD {
        self + (-b)
    }
}

impl Mul for DD {
    type Output = DD;
    fn mul(self, b: DD) -> DD {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        DD { hi, lo }
    }
}

impl Div for DD {
    type Output = DD;
    fn div(self, b: DD) -> DD {
        let q1 = self.hi / b.hi;
        let r = self - b * DD::new(q1);
        let q2 = r.hi / b.hi;
        let r = r - b * DD::new(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        DD { hi, lo } + DD::new(q3)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_one_matches_e_to_double_double_precision() {
        // e = 2.71828182845904523536028747135266249...
        let e = DD::new(1.0).exp();
        let reference = DD { hi: std::f64::consts::E, lo: 1.445_646_891_729_250_2e-16 };
        let diff = (e - reference).to_f64();
        assert!(diff.abs() < 1e-30, "{diff:e}");
    }

    #[test]
    fn cosh_squared_minus_sinh_squared_is_one() {
        for &x in &[1e-3, 0.37, 2.5, 11.0, 19.99] {
            let (c, s) = DD::new(x).cosh_sinh();
            let one = c * c - s * s;
            let tol = 1e-30 * c.hi * c.hi;
            assert!((one - DD::ONE).to_f64().abs() <= tol.max(1e-30), "x = {x}");
        }
    }

    #[test]
    fn division_roundtrip() {
        let a = DD::new(3.0).exp();
        let b = DD::new(7.25);
        let back = (a / b) * b;
        assert!(((back - a).to_f64() / a.hi).abs() < 1e-31);
    }
}
