//! Points of the unit disc in a dual representation, and the Mobius atoms
//! built on them.
//!
//! A point is stored both as Cartesian coordinates and as the pair
//! (gap_log, theta) with gap_log = ln(1/(1-|z|)). Below [`G_SAFE`] the two
//! agree to rounding and Cartesian arithmetic is used directly. Above it the
//! Cartesian slots are only a rendering: 1-|z| is no longer representable as
//! a difference of doubles, and every quantity of the form 1 - conj(a)*z is
//! assembled from the gap variables instead. With t = 1-|a|, s = 1-|z| and
//! both points on the positive real ray, 1 - a*z = t + s - t*s, which the
//! code evaluates without ever forming 1-t.

use num_complex::Complex64;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::logdomain::{log_add_exp, normalize_angle, LogComplex};

/// Threshold ln(1e8): below it Cartesian and gap representations agree and
/// plain complex arithmetic is used.
pub const G_SAFE: f64 = 18.420680743952367;

/// Hard cap on gap_log; schedule searches refuse to go past it.
pub const GAP_LOG_MAX: f64 = 1.0e6;

/// A point of the open unit disc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscPoint {
    re: f64,
    im: f64,
    gap_log: f64,
    theta: f64,
}

impl DiscPoint {
    pub const ZERO: DiscPoint = DiscPoint {
        re: 0.0,
        im: 0.0,
        gap_log: 0.0,
        theta: 0.0,
    };

    /// Build from Cartesian coordinates; requires |z| < 1 strictly.
    pub fn from_cartesian(re: f64, im: f64) -> Result<Self> {
        if !re.is_finite() || !im.is_finite() {
            return Err(Error::Domain(format!(
                "disc point must be finite, got ({re}, {im})"
            )));
        }
        let r = re.hypot(im);
        if !(r < 1.0) {
            return Err(Error::Domain(format!(
                "point ({re}, {im}) has |z| = {r} >= 1"
            )));
        }
        let gap_log = -(-r).ln_1p(); // -ln(1-r)
        let theta = if r == 0.0 {
            0.0
        } else {
            normalize_angle(im.atan2(re))
        };
        Ok(DiscPoint {
            re,
            im,
            gap_log,
            theta,
        })
    }

    /// Build from the boundary-gap pair; gap_log = ln(1/(1-|z|)) >= 0.
    pub fn from_gap(gap_log: f64, theta: f64) -> Result<Self> {
        if !gap_log.is_finite() || gap_log < 0.0 || gap_log > GAP_LOG_MAX {
            return Err(Error::Domain(format!(
                "gap_log must lie in [0, {GAP_LOG_MAX:e}], got {gap_log}"
            )));
        }
        let theta = normalize_angle(theta);
        let r = -(-gap_log).exp_m1(); // 1 - e^{-gap_log}
        Ok(DiscPoint {
            re: r * theta.cos(),
            im: r * theta.sin(),
            gap_log,
            theta: if r == 0.0 { 0.0 } else { theta },
        })
    }

    /// Internal constructor for callers that already computed a stable gap
    /// (horocycle points, Mobius images). The Cartesian pair is a rendering.
    pub(crate) fn from_parts(re: f64, im: f64, gap_log: f64, theta: f64) -> Self {
        DiscPoint {
            re,
            im,
            gap_log,
            theta: normalize_angle(theta),
        }
    }

    pub fn re(&self) -> f64 {
        self.re
    }

    pub fn im(&self) -> f64 {
        self.im
    }

    pub fn gap_log(&self) -> f64 {
        self.gap_log
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// 1 - |z|; underflows to 0 for gap_log above ~745.
    pub fn boundary_gap(&self) -> f64 {
        (-self.gap_log).exp()
    }

    /// |z| computed from the gap (accurate for all regimes).
    pub fn radius(&self) -> f64 {
        -(-self.gap_log).exp_m1()
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    /// True when the point sits on the closed nonnegative real ray.
    pub fn is_on_positive_ray(&self) -> bool {
        self.theta == 0.0
    }

    pub fn is_safe(&self) -> bool {
        self.gap_log <= G_SAFE
    }

    /// ln(1 - |z|^2) = ln(t (2 - t)) with t = e^{-gap_log}.
    pub fn one_minus_abs_sq_log(&self) -> f64 {
        one_minus_sq_log(self.gap_log)
    }

    /// 1 - |z|^2, linear rendering of the above.
    pub fn one_minus_abs_sq(&self) -> f64 {
        self.one_minus_abs_sq_log().exp()
    }

    /// ln |1 - z|, stable at every gap depth.
    ///
    /// |1-z|^2 = t^2 + 4 (1-t) sin^2(theta/2); the two addends are combined
    /// in log space so neither can underflow away.
    pub fn log_abs_one_minus(&self) -> f64 {
        if self.theta == 0.0 {
            return -self.gap_log; // 1 - z = t exactly on the ray
        }
        let t = (-self.gap_log).exp();
        let s = (0.5 * self.theta).sin().abs();
        let a = -2.0 * self.gap_log; // ln t^2
        let b = (4.0 * (1.0 - t)).ln() + 2.0 * s.ln();
        0.5 * log_add_exp(a, b)
    }

    /// arg(1 - z), computed from Re(1-z) = t + 2(1-t) sin^2(theta/2) which
    /// is positive on the whole disc.
    pub fn arg_one_minus(&self) -> f64 {
        if self.theta == 0.0 {
            return 0.0;
        }
        let t = (-self.gap_log).exp();
        let s_half = (0.5 * self.theta).sin();
        let x = t + 2.0 * (1.0 - t) * s_half * s_half;
        let y = -(1.0 - t) * self.theta.sin();
        y.atan2(x)
    }

    /// ln Re((1+z)/(1-z)) = ln(1-|z|^2) - 2 ln|1-z|. The real part of the
    /// Cayley transform is positive on the disc; this is the exponent that
    /// drives the atomic singular inner function.
    pub fn halfplane_re_log(&self) -> f64 {
        self.one_minus_abs_sq_log() - 2.0 * self.log_abs_one_minus()
    }

    /// Im((1+z)/(1-z)) = 2 Im z / |1-z|^2, linear (adequate: it only feeds
    /// a phase).
    pub fn halfplane_im(&self) -> f64 {
        if self.theta == 0.0 {
            return 0.0;
        }
        let t = (-self.gap_log).exp();
        let y = (1.0 - t) * self.theta.sin();
        let sign = y.signum();
        let mag_log = (2.0 * y.abs()).ln() - 2.0 * self.log_abs_one_minus();
        sign * mag_log.exp()
    }

    /// The point as a log-domain complex value.
    pub fn to_log_complex(&self) -> LogComplex {
        if self.gap_log == 0.0 {
            return LogComplex::ZERO;
        }
        let t = (-self.gap_log).exp();
        LogComplex::new((-t).ln_1p(), self.theta) // ln r = ln(1-t)
    }
}

impl Serialize for DiscPoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("DiscPoint", 4)?;
        st.serialize_field("re", &self.re)?;
        st.serialize_field("im", &self.im)?;
        st.serialize_field("gap_log", &self.gap_log)?;
        st.serialize_field("theta", &self.theta)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for DiscPoint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            re: Option<f64>,
            im: Option<f64>,
            gap_log: Option<f64>,
            theta: Option<f64>,
        }
        let raw = Raw::deserialize(d)?;
        // The gap pair is authoritative when present; otherwise fall back to
        // the Cartesian pair and fill the gap fields.
        match (raw.gap_log, raw.theta, raw.re, raw.im) {
            (Some(g), Some(t), _, _) => {
                DiscPoint::from_gap(g, t).map_err(serde::de::Error::custom)
            }
            (None, None, Some(re), Some(im)) => {
                DiscPoint::from_cartesian(re, im).map_err(serde::de::Error::custom)
            }
            _ => Err(serde::de::Error::custom(
                "disc point needs either {gap_log, theta} or {re, im}",
            )),
        }
    }
}

/// The circle internally tangent to the unit circle at 1, |z - a| = 1 - a,
/// parametrized by z(psi) = a + (1-a) e^{i psi} for psi in (0, 2 pi).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Horocycle {
    a: f64,
}

impl Horocycle {
    pub fn new(a: f64) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::Domain(format!("horocycle parameter a = {a} not in (0,1)")));
        }
        Ok(Horocycle { a })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// The constant value of Re((1+z)/(1-z)) on the circle.
    pub fn level(&self) -> f64 {
        self.a / (1.0 - self.a)
    }

    /// Point at parameter psi in (0, 2 pi); the endpoints are the boundary
    /// point 1 and are rejected.
    ///
    /// gap_log is computed from 1 - |z|^2 = 4 a (1-a) sin^2(psi/2), which
    /// stays accurate when z hugs the boundary.
    pub fn point(&self, psi: f64) -> Result<DiscPoint> {
        if !(psi > 0.0 && psi < 2.0 * std::f64::consts::PI) {
            return Err(Error::Domain(format!(
                "horocycle parameter psi = {psi} not in (0, 2*pi)"
            )));
        }
        let a = self.a;
        let sh = (0.5 * psi).sin();
        let u = 4.0 * a * (1.0 - a) * sh * sh; // 1 - |z|^2
        let abs_z = (1.0 - u).sqrt();
        let gap_log = (1.0 + abs_z).ln() - u.ln(); // -ln(1-|z|)
        let re = a + (1.0 - a) * psi.cos();
        let im = (1.0 - a) * psi.sin();
        let theta = if re == 0.0 && im == 0.0 {
            0.0
        } else {
            normalize_angle(im.atan2(re))
        };
        Ok(DiscPoint::from_parts(re, im, gap_log.max(0.0), theta))
    }

    /// The psi > 0 with |1 - z(psi)| = d (uses |1-z| = 2(1-a) sin(psi/2)).
    pub fn psi_for_boundary_distance(&self, d: f64) -> Result<f64> {
        let arg = d / (2.0 * (1.0 - self.a));
        if !(d > 0.0 && arg <= 1.0) {
            return Err(Error::Domain(format!(
                "no horocycle point at boundary distance {d} for a = {}",
                self.a
            )));
        }
        Ok(2.0 * arg.asin())
    }
}

/// A sampling grid on a centered circle, radius stored as gap_log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CircleGrid {
    pub gap_log: f64,
    pub thetas: Vec<f64>,
    pub refinement_level: u32,
}

impl CircleGrid {
    /// n equally spaced angles, always containing theta = 0 exactly.
    pub fn uniform(gap_log: f64, n: usize, refinement_level: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("circle grid needs at least one angle".into()));
        }
        let mut thetas: Vec<f64> = (0..n)
            .map(|i| normalize_angle(2.0 * std::f64::consts::PI * i as f64 / n as f64))
            .collect();
        thetas.sort_by(|a, b| a.partial_cmp(b).unwrap());
        thetas.dedup();
        Ok(CircleGrid {
            gap_log,
            thetas,
            refinement_level,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.thetas.is_empty() {
            return Err(Error::InvalidInput("empty circle grid".into()));
        }
        if !self.thetas.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidInput("circle grid angles not strictly increasing".into()));
        }
        Ok(())
    }
}

/// ln(1 - r^2) for a radius given by its gap_log. Near gap 0 the product
/// t (2 - t) = 1 - (1 - t)^2 is evaluated through ln_1p to keep the
/// quadratic behavior; deeper in, the factored form is exact.
pub fn one_minus_sq_log(gap_log: f64) -> f64 {
    if gap_log < 1.0 {
        let w = (-gap_log).exp_m1(); // t - 1, in (-1, 0]
        (-w * w).ln_1p()
    } else {
        -gap_log + (2.0 - (-gap_log).exp()).ln()
    }
}

/// ln(1 - r_a r_z) for two positive-ray radii given by their gap_logs:
/// 1 - r_a r_z = t_a + t_z - t_a t_z, evaluated as
/// e^{-m} (1 + e^{-(M-m)} - e^{-M}) with m = min, M = max of the gaps.
pub fn one_minus_prod_log(gap_a: f64, gap_z: f64) -> f64 {
    let m = gap_a.min(gap_z);
    let big = gap_a.max(gap_z);
    -m + ((-(big - m)).exp() - (-big).exp()).ln_1p()
}

/// 1 - conj(a) z as a log-domain complex, stable at every gap depth.
pub(crate) fn one_minus_conj_prod(a: &DiscPoint, z: &DiscPoint) -> LogComplex {
    if a.is_safe() && z.is_safe() {
        return LogComplex::from_complex(
            Complex64::new(1.0, 0.0) - a.to_complex().conj() * z.to_complex(),
        );
    }
    let delta = normalize_angle(z.theta - a.theta);
    let radial = LogComplex::new(one_minus_prod_log(a.gap_log, z.gap_log), 0.0);
    if delta == 0.0 {
        return radial;
    }
    // 1 - conj(a) z = (1 - r_a r_z) + r_a r_z (1 - e^{i delta})
    let sh = (0.5 * delta).sin();
    let rot = Complex64::new(2.0 * sh * sh, -delta.sin()); // 1 - e^{i delta}
    let r_prod = (a.to_log_complex().log_abs + z.to_log_complex().log_abs).exp();
    radial.add(&LogComplex::from_complex(rot).scale(Complex64::new(r_prod, 0.0)))
}

/// a - z as a log-domain complex.
pub(crate) fn difference_log(a: &DiscPoint, z: &DiscPoint) -> LogComplex {
    if a.is_safe() && z.is_safe() {
        return LogComplex::from_complex(a.to_complex() - z.to_complex());
    }
    // a - z = e^{i theta_a} [ (r_a - r_z) + r_z (1 - e^{i delta}) ],
    // r_a - r_z = t_z - t_a.
    let delta = normalize_angle(z.theta - a.theta);
    let (ga, gz) = (a.gap_log, z.gap_log);
    let radial = if ga == gz {
        LogComplex::ZERO
    } else {
        let m = ga.min(gz);
        let d = (ga - gz).abs();
        // |t_z - t_a| = e^{-m} (1 - e^{-d}); positive when gz < ga
        LogComplex::from_signed_real_log(-m + (-(-d).exp_m1()).ln(), gz > ga)
    };
    let combined = if delta == 0.0 {
        radial
    } else {
        let sh = (0.5 * delta).sin();
        let rot = Complex64::new(2.0 * sh * sh, -delta.sin());
        let r_z = z.radius();
        radial.add(&LogComplex::from_complex(rot).scale(Complex64::new(r_z, 0.0)))
    };
    combined.mul(&LogComplex::new(0.0, a.theta))
}

/// phi_a(z) = (a - z)/(1 - conj(a) z) as a log-domain complex.
pub(crate) fn mobius_log(a: &DiscPoint, z: &DiscPoint) -> LogComplex {
    difference_log(a, z).div(&one_minus_conj_prod(a, z))
}

/// The Mobius transformation phi_a(z) = (a - z)/(1 - conj(a) z).
pub fn mobius_eval(a: &DiscPoint, z: &DiscPoint) -> Complex64 {
    if a.is_safe() && z.is_safe() {
        let ac = a.to_complex();
        let zc = z.to_complex();
        return (ac - zc) / (Complex64::new(1.0, 0.0) - ac.conj() * zc);
    }
    mobius_log(a, z).to_complex()
}

/// phi_a(z) as a disc point, with the image's own boundary gap computed
/// without cancellation.
pub fn mobius_eval_point(a: &DiscPoint, z: &DiscPoint) -> DiscPoint {
    let v = mobius_log(a, z);
    if v.is_zero() {
        return DiscPoint::ZERO;
    }
    let gap_log = if a.is_on_positive_ray() && z.is_on_positive_ray() {
        // with t_deep = e^{-max(g)} and t_shallow = e^{-min(g)}:
        // 1 - |phi| = t_deep (2 - t_shallow) / (t_a + t_z - t_a t_z)
        let g_deep = a.gap_log.max(z.gap_log);
        let g_shallow = a.gap_log.min(z.gap_log);
        let one_minus_phi_log =
            -g_deep + (2.0 - (-g_shallow).exp()).ln() - one_minus_prod_log(a.gap_log, z.gap_log);
        -one_minus_phi_log
    } else {
        // Schwarz-Pick backfill: 1-|phi|^2 = (1-|a|^2)(1-|z|^2)/|1-conj(a) z|^2
        let den = one_minus_conj_prod(a, z);
        let one_minus_sq_log = a.one_minus_abs_sq_log() + z.one_minus_abs_sq_log() - 2.0 * den.log_abs;
        let abs_phi = v.log_abs.exp().min(1.0);
        -(one_minus_sq_log - (1.0 + abs_phi).ln())
    };
    let c = v.to_complex();
    DiscPoint::from_parts(c.re, c.im, gap_log.max(0.0), v.arg)
}

/// phi_a'(z) = (|a|^2 - 1)/(1 - conj(a) z)^2 in the log domain.
pub(crate) fn mobius_deriv_log(a: &DiscPoint, z: &DiscPoint) -> LogComplex {
    let den = one_minus_conj_prod(a, z);
    LogComplex::from_signed_real_log(a.one_minus_abs_sq_log(), true).div(&den.powi(2))
}

/// phi_a'(z) = (|a|^2 - 1)/(1 - conj(a) z)^2.
pub fn mobius_deriv(a: &DiscPoint, z: &DiscPoint) -> Complex64 {
    if a.is_safe() && z.is_safe() {
        let ac = a.to_complex();
        let zc = z.to_complex();
        let den = Complex64::new(1.0, 0.0) - ac.conj() * zc;
        return Complex64::new(ac.norm_sqr() - 1.0, 0.0) / (den * den);
    }
    mobius_deriv_log(a, z).to_complex()
}

/// Pseudo-hyperbolic distance rho(z, w) = |phi_z(w)| in [0, 1).
pub fn pseudo_hyperbolic(z: &DiscPoint, w: &DiscPoint) -> f64 {
    let d = mobius_log(z, w).log_abs;
    if d == f64::NEG_INFINITY {
        0.0
    } else {
        d.exp().min(1.0)
    }
}

/// ln rho(z, w); -inf at coincident points.
pub fn pseudo_hyperbolic_log(z: &DiscPoint, w: &DiscPoint) -> f64 {
    mobius_log(z, w).log_abs
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
    }

    fn pt(re: f64, im: f64) -> DiscPoint {
        DiscPoint::from_cartesian(re, im).unwrap()
    }

    #[test]
    fn mobius_pins() {
        let a = pt(0.5, 0.0);
        assert!(mobius_eval(&a, &a).norm() < 1e-15);
        assert!(rel_close(mobius_eval(&a, &DiscPoint::ZERO).re, 0.5, 1e-15));
        // (0.5 - 0.3)/(1 - 0.15)
        let v = mobius_eval(&a, &pt(0.3, 0.0));
        assert!(rel_close(v.re, 0.2 / 0.85, 1e-13));
        assert!(v.im.abs() < 1e-15);
    }

    #[test]
    fn mobius_deriv_pins() {
        let a = pt(0.5, 0.0);
        assert!(rel_close(mobius_deriv(&a, &DiscPoint::ZERO).re, -0.75, 1e-15));
        assert!(rel_close(mobius_deriv(&a, &a).re, -4.0 / 3.0, 1e-13));
        assert!(rel_close(
            mobius_deriv(&DiscPoint::ZERO, &pt(0.9, 0.0)).re,
            -1.0,
            1e-15
        ));
    }

    #[test]
    fn pseudo_hyperbolic_pins() {
        let a = pt(0.5, 0.0);
        assert_eq!(pseudo_hyperbolic(&a, &a), 0.0);
        assert!(rel_close(pseudo_hyperbolic(&a, &pt(-0.5, 0.0)), 0.8, 1e-14));
        assert!(rel_close(
            pseudo_hyperbolic(&DiscPoint::ZERO, &pt(0.0, 0.3)),
            0.3,
            1e-14
        ));
    }

    #[test]
    fn gap_and_cartesian_agree_in_safe_region() {
        for &(g, th) in &[(0.5, 0.3), (5.0, -2.0), (18.0, 3.0)] {
            let p = DiscPoint::from_gap(g, th).unwrap();
            let r = p.re().hypot(p.im());
            let from_gap = -(-g).exp_m1();
            assert!((r - from_gap).abs() <= 4.0 * f64::EPSILON * from_gap.max(1.0));
            assert!((p.theta() - normalize_angle(th)).abs() < 1e-12);
        }
    }

    #[test]
    fn deep_gap_real_mobius_is_stable() {
        // gaps far beyond Cartesian resolution
        let a = DiscPoint::from_gap(60.0, 0.0).unwrap();
        let z = DiscPoint::from_gap(90.0, 0.0).unwrap();
        // phi = (t_z - t_a)/(t_a + t_z - t_a t_z), t_a >> t_z: close to -1
        let v = mobius_log(&a, &z);
        assert_eq!(v.arg, std::f64::consts::PI);
        let img = mobius_eval_point(&a, &z);
        // 1 - |phi| = t_z (2 - t_a)/(t_a + t_z - t_a t_z) ~ 2 e^{-90}/e^{-60}
        let expect = -((-90.0f64).exp() * 2.0 / (-60.0f64).exp()).ln();
        assert!(rel_close(img.gap_log(), expect, 1e-12));
    }

    #[test]
    fn horocycle_level_set_identity() {
        // Re((1+z)/(1-z)) = a/(1-a) on the horocycle at every scale
        for &a in &[0.25, 0.5, 0.9] {
            let h = Horocycle::new(a).unwrap();
            for j in 1..=8 {
                let d = 10f64.powi(-j);
                if d >= 2.0 * (1.0 - a) {
                    continue;
                }
                let psi = h.psi_for_boundary_distance(d).unwrap();
                let z = h.point(psi).unwrap();
                let re = z.halfplane_re_log().exp();
                assert!(
                    rel_close(re, h.level(), 1e-10),
                    "a={a} j={j}: {re} vs {}",
                    h.level()
                );
            }
        }
    }

    #[test]
    fn horocycle_pins() {
        let h = Horocycle::new(0.5).unwrap();
        let z = h.point(std::f64::consts::PI).unwrap();
        assert!(z.re().abs() < 1e-15 && z.im().abs() < 1e-15);
        assert_eq!(z.gap_log(), 0.0);
        let q = h.point(std::f64::consts::FRAC_PI_2).unwrap();
        assert!(rel_close(q.re(), 0.5, 1e-15));
        assert!(rel_close(q.im(), 0.5, 1e-15));
        assert!(h.point(0.0).is_err());
        assert!(h.point(2.0 * std::f64::consts::PI).is_err());
    }

    #[test]
    fn point_serde_accepts_either_pair() {
        let p: DiscPoint = serde_json::from_str(r#"{"re": 0.3, "im": -0.4}"#).unwrap();
        assert!(rel_close(p.radius(), 0.5, 1e-15));
        let q: DiscPoint = serde_json::from_str(r#"{"gap_log": 90.0, "theta": 0.0}"#).unwrap();
        assert_eq!(q.gap_log(), 90.0);
        let full = serde_json::to_string(&q).unwrap();
        let rt: DiscPoint = serde_json::from_str(&full).unwrap();
        assert_eq!(rt.gap_log(), 90.0);
        assert!(serde_json::from_str::<DiscPoint>(r#"{"re": 0.3}"#).is_err());
        assert!(serde_json::from_str::<DiscPoint>(r#"{"re": 1.5, "im": 0.0}"#).is_err());
    }

    #[test]
    fn circle_grid_contains_zero_and_is_sorted() {
        let g = CircleGrid::uniform(2.0, 64, 0).unwrap();
        g.validate().unwrap();
        assert!(g.thetas.contains(&0.0));
    }

    proptest! {
        #[test]
        fn schwarz_pick_equality(ar in -0.95f64..0.95, ai in -0.95f64..0.95,
                                 zr in -0.95f64..0.95, zi in -0.95f64..0.95) {
            prop_assume!(ar.hypot(ai) < 0.95 && zr.hypot(zi) < 0.95);
            let a = pt(ar, ai);
            let z = pt(zr, zi);
            let lhs = z.one_minus_abs_sq() * mobius_deriv(&a, &z).norm();
            let rhs = 1.0 - mobius_eval(&a, &z).norm_sqr();
            prop_assert!(rel_close(lhs, rhs, 1e-12));
        }

        #[test]
        fn involution(ar in -0.9f64..0.9, ai in -0.9f64..0.9,
                      zr in -0.9f64..0.9, zi in -0.9f64..0.9) {
            prop_assume!(ar.hypot(ai) < 0.9 && zr.hypot(zi) < 0.9);
            let a = pt(ar, ai);
            let z = pt(zr, zi);
            let w = mobius_eval(&a, &z);
            let back = mobius_eval(&a, &DiscPoint::from_cartesian(w.re, w.im).unwrap());
            prop_assert!((back.re - zr).abs() < 1e-12 && (back.im - zi).abs() < 1e-12);
        }

        #[test]
        fn pseudo_hyperbolic_symmetric(ar in -0.9f64..0.9, ai in -0.9f64..0.9,
                                       zr in -0.9f64..0.9, zi in -0.9f64..0.9) {
            prop_assume!(ar.hypot(ai) < 0.9 && zr.hypot(zi) < 0.9);
            let a = pt(ar, ai);
            let z = pt(zr, zi);
            let d1 = pseudo_hyperbolic(&a, &z);
            let d2 = pseudo_hyperbolic(&z, &a);
            prop_assert!((d1 - d2).abs() <= 1e-13);
            prop_assert!((0.0..1.0).contains(&d1));
        }
    }
}
