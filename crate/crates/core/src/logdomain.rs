//! Log-domain scalars and complex numbers.
//!
//! Everything near the boundary of the disc lives at magnitudes like
//! exp(-2^n), far below what an `f64` can hold. Quantities here are carried
//! as (log-magnitude, argument) pairs and only rendered back to linear
//! floating point when the caller asks for it.

use num_complex::Complex64;

/// Normalize an angle into (-pi, pi], mapping a tie at -pi to +pi.
pub fn normalize_angle(t: f64) -> f64 {
    if !t.is_finite() {
        return t;
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut x = t.rem_euclid(two_pi); // [0, 2*pi)
    if x > std::f64::consts::PI {
        x -= two_pi;
    }
    if x == -std::f64::consts::PI {
        x = std::f64::consts::PI;
    }
    x
}

/// ln(e^a + e^b), tolerant of -inf in either slot.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// ln(e^a - e^b) for a >= b; returns -inf when a == b.
pub fn log_sub_exp(a: f64, b: f64) -> f64 {
    debug_assert!(a >= b);
    if a == b || a == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    a + (-((b - a).exp_m1())).ln()
}

/// ln(1 + e^x), the stable softplus.
pub fn softplus(x: f64) -> f64 {
    if x > 40.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

/// A complex number exp(log_abs + i*arg). `log_abs == -inf` encodes zero.
///
/// Multiplication and division are exact in this representation; addition
/// rescales by the larger magnitude so that sums keep full relative
/// precision even when the addends underflow as `f64`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogComplex {
    pub log_abs: f64,
    pub arg: f64,
}

impl LogComplex {
    pub const ZERO: LogComplex = LogComplex {
        log_abs: f64::NEG_INFINITY,
        arg: 0.0,
    };

    pub const ONE: LogComplex = LogComplex {
        log_abs: 0.0,
        arg: 0.0,
    };

    pub fn new(log_abs: f64, arg: f64) -> Self {
        LogComplex {
            log_abs,
            arg: normalize_angle(arg),
        }
    }

    pub fn from_complex(c: Complex64) -> Self {
        let n = c.norm();
        if n == 0.0 {
            return Self::ZERO;
        }
        LogComplex {
            log_abs: n.ln(),
            arg: normalize_angle(c.arg()),
        }
    }

    /// A signed real: exp(log_abs) with an optional minus sign.
    pub fn from_signed_real_log(log_abs: f64, negative: bool) -> Self {
        LogComplex {
            log_abs,
            arg: if negative { std::f64::consts::PI } else { 0.0 },
        }
    }

    pub fn is_zero(&self) -> bool {
        self.log_abs == f64::NEG_INFINITY
    }

    /// Render to linear floating point. May underflow to 0 or overflow to
    /// infinity; callers needing the true magnitude use `log_abs`.
    pub fn to_complex(&self) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::from_polar(self.log_abs.exp(), self.arg)
    }

    pub fn mul(&self, rhs: &LogComplex) -> LogComplex {
        if self.is_zero() || rhs.is_zero() {
            return Self::ZERO;
        }
        LogComplex::new(self.log_abs + rhs.log_abs, self.arg + rhs.arg)
    }

    pub fn div(&self, rhs: &LogComplex) -> LogComplex {
        if self.is_zero() {
            return Self::ZERO;
        }
        LogComplex::new(self.log_abs - rhs.log_abs, self.arg - rhs.arg)
    }

    pub fn powi(&self, k: i32) -> LogComplex {
        if self.is_zero() {
            return if k == 0 { Self::ONE } else { Self::ZERO };
        }
        LogComplex::new(self.log_abs * k as f64, self.arg * k as f64)
    }

    pub fn neg(&self) -> LogComplex {
        if self.is_zero() {
            return Self::ZERO;
        }
        LogComplex::new(self.log_abs, self.arg + std::f64::consts::PI)
    }

    pub fn scale(&self, c: Complex64) -> LogComplex {
        self.mul(&LogComplex::from_complex(c))
    }

    /// Rescaled addition: the smaller addend is divided out against the
    /// larger, so no intermediate value leaves the representable range.
    /// Signed reals (arguments 0 or pi) are added exactly, including exact
    /// cancellation to zero.
    pub fn add(&self, rhs: &LogComplex) -> LogComplex {
        if self.is_zero() {
            return *rhs;
        }
        if rhs.is_zero() {
            return *self;
        }
        let (big, small) = if self.log_abs >= rhs.log_abs {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let d = small.log_abs - big.log_abs; // <= 0
        if d < -46.0 {
            // ratio below 1e-20: invisible at f64 resolution
            return *big;
        }
        let real = |t: f64| t == 0.0 || t == std::f64::consts::PI;
        if real(big.arg) && real(small.arg) {
            let sign = if big.arg == small.arg { 1.0 } else { -1.0 };
            let x = if sign > 0.0 { 1.0 + d.exp() } else { -d.exp_m1() };
            if x == 0.0 {
                return Self::ZERO;
            }
            return LogComplex {
                log_abs: big.log_abs + x.ln(),
                arg: big.arg,
            };
        }
        let w = Complex64::new(1.0, 0.0) + Complex64::from_polar(d.exp(), small.arg - big.arg);
        let n = w.norm();
        if n == 0.0 {
            return Self::ZERO;
        }
        LogComplex::new(big.log_abs + n.ln(), big.arg + w.arg())
    }

    pub fn sub(&self, rhs: &LogComplex) -> LogComplex {
        self.add(&rhs.neg())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn angle_normalization_ties_at_pi() {
        assert_eq!(normalize_angle(-std::f64::consts::PI), std::f64::consts::PI);
        assert_eq!(normalize_angle(std::f64::consts::PI), std::f64::consts::PI);
        assert!(close(normalize_angle(3.0 * std::f64::consts::PI), std::f64::consts::PI, 1e-12));
        assert_eq!(normalize_angle(0.25), 0.25);
    }

    #[test]
    fn add_matches_complex_arithmetic() {
        let a = Complex64::new(1.5, -0.25);
        let b = Complex64::new(-0.75, 2.0);
        let s = LogComplex::from_complex(a).add(&LogComplex::from_complex(b));
        let expect = a + b;
        assert!(close(s.to_complex().re, expect.re, 1e-14));
        assert!(close(s.to_complex().im, expect.im, 1e-14));
    }

    #[test]
    fn add_keeps_precision_across_underflow() {
        // exp(-2000) + exp(-2000) = 2 exp(-2000); linear f64 has both as 0
        let a = LogComplex::new(-2000.0, 0.0);
        let s = a.add(&a);
        assert!(close(s.log_abs, -2000.0 + 2.0f64.ln(), 1e-15));
        assert_eq!(s.arg, 0.0);
    }

    #[test]
    fn cancellation_yields_zero() {
        let a = LogComplex::new(-3.0, 0.0);
        let s = a.add(&a.neg());
        assert!(s.is_zero());
    }

    #[test]
    fn log_sub_exp_basics() {
        assert!(close(log_sub_exp(0.0, -1.0), (1.0 - (-1.0f64).exp()).ln(), 1e-15));
        assert_eq!(log_sub_exp(-5.0, -5.0), f64::NEG_INFINITY);
    }
}
