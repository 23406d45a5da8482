//! The expression tree of analytic functions on the disc.
//!
//! Trees are immutable values closed under sum, product and scalar multiple,
//! with an exact symbolic derivative. Evaluation comes in three channels:
//! plain complex (`eval`), log-domain complex (`eval_log`) for points whose
//! boundary gap defeats linear floating point, and the additive log-modulus
//! channel (`log_modulus`) which is the precision-bearing route for inner
//! functions. `eval` is allowed to underflow to exact 0 near the boundary;
//! callers that need the magnitude there must use `log_modulus`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::disc::{mobius_deriv_log, mobius_log, one_minus_conj_prod, DiscPoint};
use crate::error::{Error, Result};
use crate::logdomain::{normalize_angle, LogComplex};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum FunctionExpr {
    /// z
    Identity,
    /// c
    Constant { c: Complex64 },
    /// log(1/(1-z)), principal branch, real and nonnegative on [0, 1)
    #[serde(rename = "log1m")]
    LogOneMinus,
    /// (1-z)^{-k}
    PowOneMinus { k: u32 },
    /// exp(-c (1+z)/(1-z)), c > 0
    AtomicInner { c: f64 },
    /// phi_a(z) = (a-z)/(1 - conj(a) z)
    #[serde(rename = "mobius")]
    MobiusAtom { a: DiscPoint },
    /// (1 - conj(a) z)^{-k}
    MobiusPow { a: DiscPoint, k: u32 },
    /// Finite Blaschke product over the zero list (repeats allowed);
    /// a factor with a = 0 is the factor z.
    #[serde(rename = "blaschke")]
    BlaschkeFinite { zeros: Vec<DiscPoint> },
    /// lambda0 + sum_k lambda_k phi_{a_k}(z)
    #[serde(rename = "besov")]
    BesovAtomSum {
        lambda0: Complex64,
        weights: Vec<Complex64>,
        atoms: Vec<DiscPoint>,
        #[serde(default)]
        weight_l1: f64,
    },
    /// sum_k lambda_k phi'_{a_k}(z), the derivative of a Besov atom sum.
    /// Kept as a dedicated node so the per-term factors 1-|a_k|^2 never
    /// round-trip through linear floating point.
    BesovDeriv {
        weights: Vec<Complex64>,
        atoms: Vec<DiscPoint>,
    },
    Sum {
        args: [Box<FunctionExpr>; 2],
    },
    Product {
        args: [Box<FunctionExpr>; 2],
    },
    Scale {
        c: Complex64,
        arg: Box<FunctionExpr>,
    },
}

/// Certified sup-norm error of truncating an infinite Blaschke product to
/// its first `truncation_index` factors on the disc {|z| <= r}.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TailBound {
    pub truncation_index: usize,
    pub bound: f64,
}

impl FunctionExpr {
    pub fn constant(re: f64) -> Self {
        FunctionExpr::Constant {
            c: Complex64::new(re, 0.0),
        }
    }

    pub fn constant_c(c: Complex64) -> Self {
        FunctionExpr::Constant { c }
    }

    pub fn sum(a: FunctionExpr, b: FunctionExpr) -> Self {
        FunctionExpr::Sum {
            args: [Box::new(a), Box::new(b)],
        }
    }

    pub fn product(a: FunctionExpr, b: FunctionExpr) -> Self {
        FunctionExpr::Product {
            args: [Box::new(a), Box::new(b)],
        }
    }

    pub fn scale(c: Complex64, arg: FunctionExpr) -> Self {
        FunctionExpr::Scale {
            c,
            arg: Box::new(arg),
        }
    }

    pub fn blaschke(zeros: Vec<DiscPoint>) -> Self {
        FunctionExpr::BlaschkeFinite { zeros }
    }

    /// Heuristic: true when the tree provably has nonnegative Taylor
    /// coefficients, so |f(z)| <= f(|z|) and the circle maximum of |f| sits
    /// on the positive real ray. Used to justify the radial fast path for
    /// sup means; callers may also assert the property themselves.
    pub fn real_ray_maximal_hint(&self) -> bool {
        match self {
            FunctionExpr::Identity | FunctionExpr::LogOneMinus | FunctionExpr::PowOneMinus { .. } => true,
            FunctionExpr::Constant { c } => c.im == 0.0 && c.re >= 0.0,
            FunctionExpr::Scale { c, arg } => c.im == 0.0 && c.re >= 0.0 && arg.real_ray_maximal_hint(),
            FunctionExpr::Sum { args } | FunctionExpr::Product { args } => {
                args[0].real_ray_maximal_hint() && args[1].real_ray_maximal_hint()
            }
            _ => false,
        }
    }

    /// Validate structural invariants and, for Besov nodes, the cached
    /// weight_l1. Used after deserializing a tree from JSON.
    pub fn validate(&self) -> Result<()> {
        match self {
            FunctionExpr::AtomicInner { c } => {
                if !(*c > 0.0 && c.is_finite()) {
                    return Err(Error::InvalidInput(format!("atomic inner mass c = {c} must be positive")));
                }
            }
            FunctionExpr::PowOneMinus { k } | FunctionExpr::MobiusPow { k, .. } => {
                if *k == 0 {
                    return Err(Error::InvalidInput("power leaf needs k >= 1".into()));
                }
            }
            FunctionExpr::BesovAtomSum {
                weights,
                atoms,
                weight_l1,
                ..
            } => {
                if weights.len() != atoms.len() {
                    return Err(Error::InvalidInput(format!(
                        "besov atom sum has {} weights but {} atoms",
                        weights.len(),
                        atoms.len()
                    )));
                }
                let l1: f64 = weights.iter().map(|w| w.norm()).sum();
                if !l1.is_finite() {
                    return Err(Error::InvalidInput("besov weights are not absolutely summable".into()));
                }
                if *weight_l1 != 0.0 && (l1 - weight_l1).abs() > 1e-12 * l1.max(1.0) {
                    return Err(Error::InvalidInput(format!(
                        "cached weight_l1 = {weight_l1} disagrees with recomputed {l1}"
                    )));
                }
            }
            FunctionExpr::BesovDeriv { weights, atoms } => {
                if weights.len() != atoms.len() {
                    return Err(Error::InvalidInput("besov derivative weight/atom length mismatch".into()));
                }
            }
            FunctionExpr::Sum { args } | FunctionExpr::Product { args } => {
                args[0].validate()?;
                args[1].validate()?;
            }
            FunctionExpr::Scale { arg, .. } => arg.validate()?,
            _ => {}
        }
        Ok(())
    }

    /// Recompute cached fields (besov weight_l1) bottom-up.
    pub fn canonicalized(self) -> Self {
        match self {
            FunctionExpr::BesovAtomSum {
                lambda0,
                weights,
                atoms,
                ..
            } => {
                let l1 = weights.iter().map(|w| w.norm()).sum();
                FunctionExpr::BesovAtomSum {
                    lambda0,
                    weights,
                    atoms,
                    weight_l1: l1,
                }
            }
            FunctionExpr::Sum { args: [a, b] } => FunctionExpr::sum(a.canonicalized(), b.canonicalized()),
            FunctionExpr::Product { args: [a, b] } => {
                FunctionExpr::product(a.canonicalized(), b.canonicalized())
            }
            FunctionExpr::Scale { c, arg } => FunctionExpr::scale(c, arg.canonicalized()),
            other => other,
        }
    }

    /// Plain complex evaluation. Exact underflow to 0 is permitted for the
    /// inner factors near the boundary; `log_modulus` is the precision
    /// channel there.
    pub fn eval(&self, z: &DiscPoint) -> Complex64 {
        match self {
            FunctionExpr::Identity => z.to_complex(),
            FunctionExpr::Constant { c } => *c,
            FunctionExpr::LogOneMinus => {
                Complex64::new(-z.log_abs_one_minus(), -z.arg_one_minus())
            }
            FunctionExpr::PowOneMinus { k } => {
                let lm = -(*k as f64) * z.log_abs_one_minus();
                Complex64::from_polar(lm.exp(), -(*k as f64) * z.arg_one_minus())
            }
            FunctionExpr::AtomicInner { c } => {
                let re = z.halfplane_re_log().exp();
                Complex64::from_polar((-c * re).exp(), normalize_angle(-c * z.halfplane_im()))
            }
            FunctionExpr::MobiusAtom { a } => crate::disc::mobius_eval(a, z),
            FunctionExpr::MobiusPow { a, k } => {
                one_minus_conj_prod(a, z).powi(-(*k as i32)).to_complex()
            }
            FunctionExpr::BlaschkeFinite { zeros } => zeros
                .iter()
                .map(|a| blaschke_factor_log(a, z).to_complex())
                .product(),
            FunctionExpr::BesovAtomSum {
                lambda0,
                weights,
                atoms,
                ..
            } => {
                let mut acc = *lambda0;
                for (w, a) in weights.iter().zip(atoms) {
                    acc += w * crate::disc::mobius_eval(a, z);
                }
                acc
            }
            FunctionExpr::BesovDeriv { .. } => self.eval_log(z).to_complex(),
            FunctionExpr::Sum { args } => args[0].eval(z) + args[1].eval(z),
            FunctionExpr::Product { args } => args[0].eval(z) * args[1].eval(z),
            FunctionExpr::Scale { c, arg } => c * arg.eval(z),
        }
    }

    /// Log-domain evaluation; the channel the certification pipelines use
    /// once gap_log leaves the Cartesian regime.
    pub fn eval_log(&self, z: &DiscPoint) -> LogComplex {
        match self {
            FunctionExpr::Identity => z.to_log_complex(),
            FunctionExpr::Constant { c } => LogComplex::from_complex(*c),
            FunctionExpr::LogOneMinus => LogComplex::from_complex(Complex64::new(
                -z.log_abs_one_minus(),
                -z.arg_one_minus(),
            )),
            FunctionExpr::PowOneMinus { k } => LogComplex::new(
                -(*k as f64) * z.log_abs_one_minus(),
                -(*k as f64) * z.arg_one_minus(),
            ),
            FunctionExpr::AtomicInner { c } => LogComplex::new(
                -c * z.halfplane_re_log().exp(),
                normalize_angle(-c * z.halfplane_im()),
            ),
            FunctionExpr::MobiusAtom { a } => mobius_log(a, z),
            FunctionExpr::MobiusPow { a, k } => one_minus_conj_prod(a, z).powi(-(*k as i32)),
            FunctionExpr::BlaschkeFinite { zeros } => zeros
                .iter()
                .fold(LogComplex::ONE, |acc, a| acc.mul(&blaschke_factor_log(a, z))),
            FunctionExpr::BesovAtomSum {
                lambda0,
                weights,
                atoms,
                ..
            } => {
                let mut acc = LogComplex::from_complex(*lambda0);
                for (w, a) in weights.iter().zip(atoms) {
                    acc = acc.add(&mobius_log(a, z).scale(*w));
                }
                acc
            }
            FunctionExpr::BesovDeriv { weights, atoms } => {
                let mut acc = LogComplex::ZERO;
                for (w, a) in weights.iter().zip(atoms) {
                    acc = acc.add(&mobius_deriv_log(a, z).scale(*w));
                }
                acc
            }
            FunctionExpr::Sum { args } => args[0].eval_log(z).add(&args[1].eval_log(z)),
            FunctionExpr::Product { args } => args[0].eval_log(z).mul(&args[1].eval_log(z)),
            FunctionExpr::Scale { c, arg } => arg.eval_log(z).scale(*c),
        }
    }

    /// ln |f(z)|, -inf exactly at zeros. Additive over products by
    /// construction: the product branch literally sums the children.
    pub fn log_modulus(&self, z: &DiscPoint) -> f64 {
        match self {
            FunctionExpr::Product { args } => args[0].log_modulus(z) + args[1].log_modulus(z),
            FunctionExpr::Scale { c, arg } => c.norm().ln() + arg.log_modulus(z),
            FunctionExpr::BlaschkeFinite { zeros } => zeros
                .iter()
                .map(|a| blaschke_factor_log(a, z).log_abs)
                .sum(),
            FunctionExpr::AtomicInner { c } => -c * z.halfplane_re_log().exp(),
            FunctionExpr::PowOneMinus { k } => -(*k as f64) * z.log_abs_one_minus(),
            FunctionExpr::MobiusPow { a, k } => -(*k as f64) * one_minus_conj_prod(a, z).log_abs,
            FunctionExpr::MobiusAtom { a } => mobius_log(a, z).log_abs,
            FunctionExpr::Identity => z.to_log_complex().log_abs,
            FunctionExpr::Constant { c } => LogComplex::from_complex(*c).log_abs,
            _ => self.eval_log(z).log_abs,
        }
    }

    /// Exact symbolic derivative as a new tree.
    pub fn deriv(&self) -> FunctionExpr {
        match self {
            FunctionExpr::Identity => FunctionExpr::constant(1.0),
            FunctionExpr::Constant { .. } => FunctionExpr::constant(0.0),
            FunctionExpr::LogOneMinus => FunctionExpr::PowOneMinus { k: 1 },
            FunctionExpr::PowOneMinus { k } => FunctionExpr::scale(
                Complex64::new(*k as f64, 0.0),
                FunctionExpr::PowOneMinus { k: k + 1 },
            ),
            FunctionExpr::AtomicInner { c } => FunctionExpr::product(
                FunctionExpr::AtomicInner { c: *c },
                FunctionExpr::scale(
                    Complex64::new(-2.0 * c, 0.0),
                    FunctionExpr::PowOneMinus { k: 2 },
                ),
            ),
            FunctionExpr::MobiusAtom { a } => FunctionExpr::scale(
                Complex64::new(-a.one_minus_abs_sq(), 0.0),
                FunctionExpr::MobiusPow { a: *a, k: 2 },
            ),
            FunctionExpr::MobiusPow { a, k } => FunctionExpr::scale(
                (*k as f64) * a.to_complex().conj(),
                FunctionExpr::MobiusPow { a: *a, k: k + 1 },
            ),
            FunctionExpr::BlaschkeFinite { zeros } => {
                // Leibniz over the factor list
                let factors: Vec<FunctionExpr> = zeros.iter().map(blaschke_factor_expr).collect();
                let mut terms: Vec<FunctionExpr> = Vec::with_capacity(zeros.len());
                for i in 0..zeros.len() {
                    let mut term = factors[i].deriv();
                    for (j, f) in factors.iter().enumerate() {
                        if j != i {
                            term = FunctionExpr::product(term, f.clone());
                        }
                    }
                    terms.push(term);
                }
                terms
                    .into_iter()
                    .reduce(FunctionExpr::sum)
                    .unwrap_or_else(|| FunctionExpr::constant(0.0))
            }
            FunctionExpr::BesovAtomSum { weights, atoms, .. } => FunctionExpr::BesovDeriv {
                weights: weights.clone(),
                atoms: atoms.clone(),
            },
            FunctionExpr::BesovDeriv { weights, atoms } => {
                // d/dz (|a|^2-1)(1-conj(a) z)^{-2} = (|a|^2-1) 2 conj(a) (1-conj(a) z)^{-3}
                let mut terms: Vec<FunctionExpr> = Vec::with_capacity(weights.len());
                for (w, a) in weights.iter().zip(atoms) {
                    let coef = w * Complex64::new(-a.one_minus_abs_sq(), 0.0)
                        * 2.0
                        * a.to_complex().conj();
                    terms.push(FunctionExpr::scale(coef, FunctionExpr::MobiusPow { a: *a, k: 3 }));
                }
                terms
                    .into_iter()
                    .reduce(FunctionExpr::sum)
                    .unwrap_or_else(|| FunctionExpr::constant(0.0))
            }
            FunctionExpr::Sum { args } => FunctionExpr::sum(args[0].deriv(), args[1].deriv()),
            FunctionExpr::Product { args } => FunctionExpr::sum(
                FunctionExpr::product(args[0].deriv(), (*args[1]).clone()),
                FunctionExpr::product((*args[0]).clone(), args[1].deriv()),
            ),
            FunctionExpr::Scale { c, arg } => FunctionExpr::scale(*c, arg.deriv()),
        }
    }
}

/// One normalized Blaschke factor as a log-domain value:
/// (|a|/a)(a-z)/(1 - conj(a) z), degenerating to the factor z at a = 0.
fn blaschke_factor_log(a: &DiscPoint, z: &DiscPoint) -> LogComplex {
    if a.gap_log() == 0.0 {
        z.to_log_complex()
    } else {
        // |a|/a = e^{-i theta_a}
        mobius_log(a, z).mul(&LogComplex::new(0.0, -a.theta()))
    }
}

/// The same factor as an expression (used by the Leibniz expansion).
fn blaschke_factor_expr(a: &DiscPoint) -> FunctionExpr {
    if a.gap_log() == 0.0 {
        FunctionExpr::Identity
    } else {
        let phase = Complex64::from_polar(1.0, -a.theta());
        FunctionExpr::scale(phase, FunctionExpr::MobiusAtom { a: *a })
    }
}

/// Assemble lambda0 + sum_k lambda_k phi_{a_k} with the cached l1 norm.
/// The sup-norm certificate |g| <= |lambda0| + weight_l1 holds because each
/// Mobius atom maps the disc into itself.
pub fn besov_assemble(
    lambda0: Complex64,
    weights: Vec<Complex64>,
    atoms: Vec<DiscPoint>,
) -> Result<FunctionExpr> {
    if weights.len() != atoms.len() {
        return Err(Error::InvalidInput(format!(
            "besov assembly needs matching lengths, got {} weights and {} atoms",
            weights.len(),
            atoms.len()
        )));
    }
    let weight_l1: f64 = weights.iter().map(|w| w.norm()).sum();
    if !weight_l1.is_finite() || !lambda0.is_finite() {
        return Err(Error::InvalidInput("besov weights must be finite and summable".into()));
    }
    Ok(FunctionExpr::BesovAtomSum {
        lambda0,
        weights,
        atoms,
        weight_l1,
    })
}

/// Sup-norm certificate for a Besov atom sum: |lambda0| + sum |lambda_k|.
pub fn besov_sup_bound(expr: &FunctionExpr) -> Option<f64> {
    match expr {
        FunctionExpr::BesovAtomSum {
            lambda0, weight_l1, ..
        } => Some(lambda0.norm() + weight_l1),
        _ => None,
    }
}

/// Certified truncation error for an infinite Blaschke product on |z| <= r.
///
/// `gaps` are the sequence 1-|a_n|; the bound covers dropping every factor
/// from `keep` onward. Uses |1 - b_n(z)| <= (1+r)(1-|a_n|)/(1-r) and
/// |1 - prod w_n| <= exp(sum |1-w_n|) - 1 for |w_n| <= 1.
pub fn blaschke_tail_bound(gaps: &[f64], keep: usize, r: f64) -> Result<TailBound> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::Domain(format!("tail bound radius r = {r} not in (0,1)")));
    }
    if gaps.iter().any(|g| !(*g > 0.0) || !g.is_finite()) {
        return Err(Error::InvalidInput("tail gaps must be positive and finite".into()));
    }
    let factor = (1.0 + r) / (1.0 - r);
    let s: f64 = gaps.iter().skip(keep).map(|g| factor * g).sum();
    Ok(TailBound {
        truncation_index: keep,
        bound: s.exp_m1(),
    })
}
