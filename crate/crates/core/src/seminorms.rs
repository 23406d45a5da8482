//! Estimators for the integral means, sup means, and the Bloch-type and
//! normal-type quantities.
//!
//! Every sup-style estimator here is a certified lower bound: it reports the
//! best witnessed value, never an upper bound. Refinement can only raise the
//! reported value, and a witness point is returned that reproduces it.
//! Per-circle scans may run in parallel; the reduction order is fixed by the
//! angle index, so results are identical for any parallelism width.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disc::DiscPoint;
use crate::error::{Error, Result};
use crate::expr::FunctionExpr;
use crate::logdomain::softplus;

const LN2: f64 = std::f64::consts::LN_2;
const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Coarse angular resolution of `sup_mean`.
pub const SUP_SCAN_ANGLES: usize = 4096;
/// Coarse angular resolution of the seminorm ladder scans.
pub const LADDER_SCAN_ANGLES: usize = 2048;
/// Golden-section tolerance in theta (and in gap_log for radial polish).
pub const GOLDEN_TOL: f64 = 1e-12;
/// Rounds of alternating radial/angular polish after the ladder pass.
pub const REFINE_ROUNDS: u32 = 12;
/// Above this magnitude of a log value, linear rendering is unreliable and
/// results carry the log-scale flag.
pub const LOG_SCALE_LIMIT: f64 = 700.0;

/// Execution context carrying the parallelism width. Estimators return
/// identical results for every width: parallelism is map-only, reductions
/// run sequentially in angle order.
pub struct ExecCtx {
    jobs: usize,
    pool: Option<rayon::ThreadPool>,
}

impl ExecCtx {
    pub fn new(jobs: usize) -> Result<Self> {
        let pool = if jobs > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(jobs)
                    .build()
                    .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?,
            )
        } else {
            None
        };
        Ok(ExecCtx { jobs, pool })
    }

    pub fn serial() -> Self {
        ExecCtx {
            jobs: 1,
            pool: None,
        }
    }

    pub fn jobs(&self) -> usize {
        self.jobs
    }

    fn map_collect<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match &self.pool {
            None => (0..n).map(f).collect(),
            Some(p) => p.install(|| (0..n).into_par_iter().map(f).collect()),
        }
    }
}

/// Neumaier compensated sum; order-fixed, so deterministic.
fn compensated_sum(xs: &[f64]) -> f64 {
    let mut s = 0.0;
    let mut c = 0.0;
    for &x in xs {
        let t = s + x;
        if s.abs() >= x.abs() {
            c += (s - t) + x;
        } else {
            c += (x - t) + s;
        }
        s = t;
    }
    s + c
}

/// M_p(r, f) by adaptive trapezoid quadrature on the circle. The rule is the
/// periodic rectangle mean, doubled until the relative change drops below
/// 1e-10 or 2^20 nodes are reached.
pub fn integral_mean(f: &FunctionExpr, r: f64, p: f64, ctx: &ExecCtx) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::Domain(format!("integral mean radius r = {r} not in (0,1)")));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::Domain(format!("integral mean exponent p = {p} must be >= 1")));
    }
    let sample = |theta: f64| -> f64 {
        let z = DiscPoint::from_cartesian(r * theta.cos(), r * theta.sin())
            .expect("radius < 1 keeps the sample inside the disc");
        let nsq = f.eval(&z).norm_sqr();
        if p == 2.0 {
            nsq
        } else if p == 1.0 {
            nsq.sqrt()
        } else {
            nsq.powf(0.5 * p)
        }
    };

    let mut m: usize = 64;
    let vals = ctx.map_collect(m, |i| sample(TWO_PI * i as f64 / m as f64));
    let mut mean = compensated_sum(&vals) / m as f64;
    loop {
        // new nodes midway between the old ones
        let odd = ctx.map_collect(m, |i| sample(TWO_PI * (i as f64 + 0.5) / m as f64));
        let mean_odd = compensated_sum(&odd) / m as f64;
        let combined = 0.5 * (mean + mean_odd);
        let change = (combined - mean).abs();
        m *= 2;
        if change <= 1e-10 * combined.abs().max(1e-300) {
            return Ok(combined.powf(1.0 / p));
        }
        if m >= (1 << 20) {
            return Err(Error::QuadratureNonConvergence {
                last: combined.powf(1.0 / p),
                prev: mean.powf(1.0 / p),
            });
        }
        mean = combined;
    }
}

/// How the circle maximum of |f| is located.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SupProfile {
    /// Dense angular scan plus golden-section refinement.
    DenseScan,
    /// Caller asserts |f(z)| <= f(|z|) (nonnegative Taylor coefficients);
    /// the maximum is read off on the positive real ray. This is the only
    /// honest route once the peak at theta = 0 is narrower than the angular
    /// resolution of f64.
    RealRayMax,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SupMean {
    /// max |f| when `log_scale` is false, otherwise ln max |f|.
    pub value: f64,
    /// ln max |f|, always populated.
    pub log_value: f64,
    pub theta_star: f64,
    pub log_scale: bool,
}

/// M_inf(r, f) with the radius given as gap_log = ln(1/(1-r)).
pub fn sup_mean(
    f: &FunctionExpr,
    gap_log: f64,
    profile: SupProfile,
    ctx: &ExecCtx,
) -> Result<SupMean> {
    let q = |z: &DiscPoint| f.eval_log(z).log_abs;
    let (log_value, theta_star) = match profile {
        SupProfile::RealRayMax => {
            let z = DiscPoint::from_gap(gap_log, 0.0)?;
            (q(&z), 0.0)
        }
        SupProfile::DenseScan => {
            DiscPoint::from_gap(gap_log, 0.0)?; // validate the radius
            scan_circle_max(&q, gap_log, SUP_SCAN_ANGLES, ctx)
        }
    };
    let log_scale = log_value.is_finite() && log_value.abs() > LOG_SCALE_LIMIT;
    Ok(SupMean {
        value: if log_scale { log_value } else { log_value.exp() },
        log_value,
        theta_star,
        log_scale,
    })
}

/// (1 - |z|^2) |f'(z)|, evaluated through the gap representation.
pub fn bloch_quantity(f: &FunctionExpr, z: &DiscPoint) -> f64 {
    bloch_quantity_log(&f.deriv(), z).exp()
}

/// ln of the Bloch quantity given a prepared derivative tree.
pub fn bloch_quantity_log(fd: &FunctionExpr, z: &DiscPoint) -> f64 {
    z.one_minus_abs_sq_log() + fd.eval_log(z).log_abs
}

/// (1 - |z|^2) log(2/(1 - |z|^2)) |f'(z)|.
pub fn blog_quantity(f: &FunctionExpr, z: &DiscPoint) -> f64 {
    blog_quantity_log(&f.deriv(), z).exp()
}

fn blog_quantity_log(fd: &FunctionExpr, z: &DiscPoint) -> f64 {
    let log_factor = LN2 - z.one_minus_abs_sq_log(); // log(2/(1-|z|^2)) >= ln 2
    bloch_quantity_log(fd, z) + log_factor.ln()
}

/// (1 - |z|^2) |f'(z)| / (1 + |f(z)|^2), the Lehto-Virtanen quantity.
/// When log|f| is very negative the denominator collapses to 1; when very
/// positive, softplus keeps the ratio finite.
pub fn normal_quantity(f: &FunctionExpr, z: &DiscPoint) -> f64 {
    normal_quantity_with(f, &f.deriv(), z)
}

pub fn normal_quantity_with(f: &FunctionExpr, fd: &FunctionExpr, z: &DiscPoint) -> f64 {
    (bloch_quantity_log(fd, z) - softplus(2.0 * f.log_modulus(z))).exp()
}

/// One escape record: the Bloch quantity and the normal quantity at a point.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EscapeSample {
    pub bloch: f64,
    pub normal: f64,
}

/// Bloch and normal quantities along a list of points (gap-stable).
pub fn escape_sequence(f: &FunctionExpr, points: &[DiscPoint]) -> Vec<EscapeSample> {
    let fd = f.deriv();
    points
        .iter()
        .map(|z| {
            let b = bloch_quantity_log(&fd, z);
            EscapeSample {
                bloch: b.exp(),
                normal: (b - softplus(2.0 * f.log_modulus(z))).exp(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec {
    pub levels: u32,
    pub coarse_angles: usize,
    pub refine_rounds: u32,
    pub golden_tol: f64,
}

/// A certified lower bound for a sup-type seminorm, with the witness where
/// it was attained and the per-stage history (nondecreasing by
/// construction).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeminormEstimate {
    pub value: f64,
    pub witness: DiscPoint,
    pub grid_spec: GridSpec,
    pub monotone_history: Vec<f64>,
    pub log_scale: bool,
}

/// One row of the refinement trace for CSV output.
#[derive(Debug, Clone, Copy)]
pub struct RefineRow {
    pub level: u32,
    pub r_gap_log: f64,
    pub theta: f64,
    pub quantity: f64,
    pub log_scale: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeminormKind {
    Bloch,
    Blog,
    Normal,
}

/// sup over the disc of the Bloch quantity: radial ladder r_j = 1 - 2^{-j}
/// (including r = 0), dense-then-golden angular search per circle, then an
/// alternating radial/angular polish around the best point. Lower-bound
/// semantics only.
pub fn bloch_seminorm_est(
    f: &FunctionExpr,
    levels: u32,
    ctx: &ExecCtx,
) -> Result<(SeminormEstimate, Vec<RefineRow>)> {
    let fd = f.deriv();
    maximize_over_disc(|z| bloch_quantity_log(&fd, z), levels, ctx)
}

pub fn blog_seminorm_est(
    f: &FunctionExpr,
    levels: u32,
    ctx: &ExecCtx,
) -> Result<(SeminormEstimate, Vec<RefineRow>)> {
    let fd = f.deriv();
    maximize_over_disc(|z| blog_quantity_log(&fd, z), levels, ctx)
}

pub fn normal_seminorm_est(
    f: &FunctionExpr,
    levels: u32,
    ctx: &ExecCtx,
) -> Result<(SeminormEstimate, Vec<RefineRow>)> {
    let fd = f.deriv();
    maximize_over_disc(
        |z| bloch_quantity_log(&fd, z) - softplus(2.0 * f.log_modulus(z)),
        levels,
        ctx,
    )
}

pub fn seminorm_est(
    f: &FunctionExpr,
    kind: SeminormKind,
    levels: u32,
    ctx: &ExecCtx,
) -> Result<(SeminormEstimate, Vec<RefineRow>)> {
    match kind {
        SeminormKind::Bloch => bloch_seminorm_est(f, levels, ctx),
        SeminormKind::Blog => blog_seminorm_est(f, levels, ctx),
        SeminormKind::Normal => normal_seminorm_est(f, levels, ctx),
    }
}

fn maximize_over_disc<Q>(
    q_log: Q,
    levels: u32,
    ctx: &ExecCtx,
) -> Result<(SeminormEstimate, Vec<RefineRow>)>
where
    Q: Fn(&DiscPoint) -> f64 + Sync,
{
    if levels < 1 {
        return Err(Error::InvalidInput("seminorm estimate needs levels >= 1".into()));
    }
    let mut best_log = q_log(&DiscPoint::ZERO);
    let mut best_gap = 0.0f64;
    let mut best_theta = 0.0f64;
    let mut history_log = vec![best_log];
    let mut rows = vec![RefineRow {
        level: 0,
        r_gap_log: 0.0,
        theta: 0.0,
        quantity: best_log,
        log_scale: true,
    }];

    // best circle candidate (j >= 1): the degenerate point at r = 0 has no
    // usable angle, so the polish phase is seeded from here instead
    let mut seed: Option<(f64, f64, f64)> = None; // (value, gap, theta)
    for j in 1..=levels {
        let gap = j as f64 * LN2;
        let (v, th) = scan_circle_max(&q_log, gap, LADDER_SCAN_ANGLES, ctx);
        if v > best_log || (v == best_log && th.abs() < best_theta.abs()) {
            best_log = v;
            best_gap = gap;
            best_theta = th;
        }
        if seed.is_none_or(|s| v > s.0) {
            seed = Some((v, gap, th));
        }
        history_log.push(best_log);
        rows.push(RefineRow {
            level: j,
            r_gap_log: best_gap,
            theta: best_theta,
            quantity: best_log,
            log_scale: true,
        });
    }

    // Alternating polish between circles: golden section in gap_log at fixed
    // theta, then in theta at fixed gap_log, with shrinking brackets. The
    // ladder alone cannot land on a maximum sitting between circles.
    let cap = levels as f64 * LN2;
    let (mut cur_log, mut cur_gap, mut cur_theta) =
        seed.unwrap_or((best_log, best_gap, best_theta));
    let mut w_gap = LN2;
    let mut w_theta = TWO_PI / LADDER_SCAN_ANGLES as f64;
    for round in 1..=REFINE_ROUNDS {
        let theta = cur_theta;
        let (g, vg) = golden_max(
            |gap| q_log(&DiscPoint::from_gap(gap, theta).expect("bracket stays in range")),
            (cur_gap - w_gap).max(0.0),
            (cur_gap + w_gap).min(cap),
            GOLDEN_TOL,
            (cur_gap, cur_log),
        );
        if vg > cur_log {
            cur_log = vg;
            cur_gap = g;
        }
        let gap = cur_gap;
        let (th, vt) = golden_max(
            |theta| q_log(&DiscPoint::from_gap(gap, theta).expect("gap already validated")),
            cur_theta - w_theta,
            cur_theta + w_theta,
            GOLDEN_TOL,
            (cur_theta, cur_log),
        );
        if vt > cur_log || (vt == cur_log && th.abs() < cur_theta.abs()) {
            cur_log = vt;
            cur_theta = th;
        }
        if cur_log > best_log
            || (cur_log == best_log && cur_theta.abs() < best_theta.abs())
        {
            best_log = cur_log;
            best_gap = cur_gap;
            best_theta = cur_theta;
        }
        history_log.push(best_log);
        rows.push(RefineRow {
            level: levels + round,
            r_gap_log: best_gap,
            theta: best_theta,
            quantity: best_log,
            log_scale: true,
        });
        w_gap = (w_gap * 0.1).max(1e-13);
        w_theta = (w_theta * 0.1).max(1e-13);
    }

    let witness = DiscPoint::from_gap(best_gap, best_theta)?;
    // -inf means an identically vanishing quantity: 0 renders exactly;
    // otherwise fall back to log scale when exp would over- or underflow
    let log_scale = best_log.is_finite() && best_log.abs() > LOG_SCALE_LIMIT;
    let render = |v: f64| if log_scale { v } else { v.exp() };
    Ok((
        SeminormEstimate {
            value: render(best_log),
            witness,
            grid_spec: GridSpec {
                levels,
                coarse_angles: LADDER_SCAN_ANGLES,
                refine_rounds: REFINE_ROUNDS,
                golden_tol: GOLDEN_TOL,
            },
            monotone_history: history_log.iter().map(|&v| render(v)).collect(),
            log_scale,
        },
        rows.into_iter()
            .map(|r| RefineRow {
                quantity: render(r.quantity),
                log_scale,
                ..r
            })
            .collect(),
    ))
}

/// Dense scan of a log-quantity over one circle followed by golden-section
/// refinement around the three best local maxima. The grid always contains
/// theta = 0 exactly. Ties break toward the smallest |theta|.
fn scan_circle_max<Q>(q_log: &Q, gap_log: f64, n: usize, ctx: &ExecCtx) -> (f64, f64)
where
    Q: Fn(&DiscPoint) -> f64 + Sync,
{
    let theta_of = |i: usize| TWO_PI * i as f64 / n as f64 - if i >= n / 2 { TWO_PI } else { 0.0 };
    let vals = ctx.map_collect(n, |i| {
        q_log(&DiscPoint::from_gap(gap_log, theta_of(i)).expect("gap validated by caller"))
    });

    // local maxima on the cyclic grid
    let mut peaks: Vec<(f64, usize)> = (0..n)
        .filter(|&i| {
            let prev = vals[(i + n - 1) % n];
            let next = vals[(i + 1) % n];
            vals[i] >= prev && vals[i] >= next
        })
        .map(|i| (vals[i], i))
        .collect();
    peaks.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| theta_of(a.1).abs().partial_cmp(&theta_of(b.1).abs()).unwrap())
            .then_with(|| a.1.cmp(&b.1))
    });

    let h = TWO_PI / n as f64;
    let mut best = (f64::NEG_INFINITY, 0.0f64);
    for &(v, i) in peaks.iter().take(3) {
        let center = theta_of(i);
        let (th, val) = golden_max(
            |theta| q_log(&DiscPoint::from_gap(gap_log, theta).expect("gap validated")),
            center - h,
            center + h,
            GOLDEN_TOL,
            (center, v),
        );
        if val > best.0 || (val == best.0 && th.abs() < best.1.abs()) {
            best = (val, th);
        }
    }
    if best.0 == f64::NEG_INFINITY {
        // constant -inf circle (identically zero function)
        best = (vals[0], theta_of(0));
    }
    (best.0, best.1)
}

/// Golden-section maximizer on [lo, hi] tracking the best sampled point,
/// seeded with a known (x, value) pair so refinement can never lose it.
fn golden_max<F>(f: F, lo: f64, hi: f64, tol: f64, seed: (f64, f64)) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let mut a = lo;
    let mut b = hi;
    let mut best = seed;
    let track = |x: f64, v: f64, best: &mut (f64, f64)| {
        if v > best.1 || (v == best.1 && x.abs() < best.0.abs()) {
            *best = (x, v);
        }
    };
    if b <= a {
        return best;
    }
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    track(c, fc, &mut best);
    track(d, fd, &mut best);
    let mut iter = 0;
    while (b - a) > tol && iter < 200 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = f(c);
            track(c, fc, &mut best);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = f(d);
            track(d, fd, &mut best);
        }
        iter += 1;
    }
    best
}

/// Parseval reference for test polynomials: M_2(r, f)^2 = sum |c_n|^2 r^{2n}.
pub fn parseval_m2(coeffs: &[Complex64], r: f64) -> f64 {
    let mut acc = 0.0;
    let mut rpow = 1.0;
    for c in coeffs {
        acc += c.norm_sqr() * rpow;
        rpow *= r * r;
    }
    acc.sqrt()
}

/// Horner form of a polynomial as an expression tree (test support for the
/// Parseval oracle).
pub fn polynomial_expr(coeffs: &[Complex64]) -> FunctionExpr {
    let mut iter = coeffs.iter().rev();
    let first = iter.next().copied().unwrap_or(Complex64::new(0.0, 0.0));
    let mut acc = FunctionExpr::constant_c(first);
    for c in iter {
        acc = FunctionExpr::sum(
            FunctionExpr::constant_c(*c),
            FunctionExpr::product(FunctionExpr::Identity, acc),
        );
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
    }

    fn pt(re: f64, im: f64) -> DiscPoint {
        DiscPoint::from_cartesian(re, im).unwrap()
    }

    #[test]
    fn integral_mean_pins() {
        let ctx = ExecCtx::serial();
        // f = 1 + z at r = 0.5, p = 2: sqrt(1 + r^2)
        let f = polynomial_expr(&[Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)]);
        let m = integral_mean(&f, 0.5, 2.0, &ctx).unwrap();
        assert!(rel_close(m, 1.25f64.sqrt(), 1e-10));
        // constants
        let c = FunctionExpr::constant(-3.0);
        for &(r, p) in &[(0.3, 1.0), (0.7, 2.5), (0.9, 2.0)] {
            assert!(rel_close(integral_mean(&c, r, p, &ctx).unwrap(), 3.0, 1e-10));
        }
        // identity at p = 2: single coefficient
        let id = FunctionExpr::Identity;
        assert!(rel_close(integral_mean(&id, 0.7, 2.0, &ctx).unwrap(), 0.7, 1e-10));
        assert!(integral_mean(&id, 1.2, 2.0, &ctx).is_err());
        assert!(integral_mean(&id, 0.5, 0.5, &ctx).is_err());
    }

    #[test]
    fn sup_mean_pins() {
        let ctx = ExecCtx::serial();
        let f = FunctionExpr::LogOneMinus;
        // r = 1 - e^{-1}: radial value exactly 1, attained at theta = 0
        let s = sup_mean(&f, 1.0, SupProfile::DenseScan, &ctx).unwrap();
        assert!(s.value >= 1.0 - 1e-12 && s.value <= 1.0 + 1e-9);
        assert!(s.theta_star.abs() < 1e-6);
        assert!(!s.log_scale);
        // identity: sup is r at every angle
        let id = FunctionExpr::Identity;
        let g = -(0.4f64.ln()); // r = 0.6
        let si = sup_mean(&id, g, SupProfile::DenseScan, &ctx).unwrap();
        assert!(rel_close(si.value, 0.6, 1e-10));
        // monotone in r by the maximum principle
        let lo = sup_mean(&f, -(0.7f64.ln()), SupProfile::DenseScan, &ctx).unwrap();
        let hi = sup_mean(&f, -(0.4f64.ln()), SupProfile::DenseScan, &ctx).unwrap();
        assert!(lo.value <= hi.value);
        // real-ray fast path agrees with the dense scan for log1m
        let deep = sup_mean(&f, 5.0, SupProfile::RealRayMax, &ctx).unwrap();
        let scan = sup_mean(&f, 5.0, SupProfile::DenseScan, &ctx).unwrap();
        assert!(rel_close(deep.value, scan.value, 1e-9));
        assert!(rel_close(deep.value, 5.0, 1e-12));
    }

    #[test]
    fn sup_mean_finds_rotated_maximum() {
        // |1 + i z / 2| peaks at z = -i r, i.e. theta = -pi/2
        let ctx = ExecCtx::serial();
        let f = FunctionExpr::sum(
            FunctionExpr::constant(1.0),
            FunctionExpr::scale(Complex64::new(0.0, 0.5), FunctionExpr::Identity),
        );
        let s = sup_mean(&f, -(0.2f64.ln()), SupProfile::DenseScan, &ctx).unwrap();
        assert!(rel_close(s.value, 1.4, 1e-10));
        assert!((s.theta_star + std::f64::consts::FRAC_PI_2).abs() < 1e-6);
    }

    #[test]
    fn quantity_pins() {
        assert!(rel_close(
            bloch_quantity(&FunctionExpr::Identity, &DiscPoint::ZERO),
            1.0,
            1e-14
        ));
        // mobius atom: Schwarz-Pick gives 1 - |phi_a(z)|^2
        let a = pt(0.5, 0.0);
        let m = FunctionExpr::MobiusAtom { a };
        let z = pt(0.2, 0.3);
        let phi = crate::disc::mobius_eval(&a, &z);
        assert!(rel_close(bloch_quantity(&m, &z), 1.0 - phi.norm_sqr(), 1e-12));
        // log1m on the real ray: (1 - r^2)/(1 - r) = 1 + r
        let f = FunctionExpr::LogOneMinus;
        assert!(rel_close(bloch_quantity(&f, &pt(0.9, 0.0)), 1.9, 1e-12));
        // blog at 0 for the identity
        assert!(rel_close(
            blog_quantity(&FunctionExpr::Identity, &DiscPoint::ZERO),
            LN2,
            1e-14
        ));
        assert_eq!(blog_quantity(&FunctionExpr::constant(4.0), &pt(0.3, 0.0)), 0.0);
        // normal quantity of the atomic inner function at 0.5
        let s = FunctionExpr::AtomicInner { c: 1.0 };
        let e3 = (-3.0f64).exp();
        let expect = 0.75 * 8.0 * e3 / (1.0 + e3 * e3);
        assert!(rel_close(normal_quantity(&s, &pt(0.5, 0.0)), expect, 1e-12));
        assert!(rel_close(normal_quantity(&FunctionExpr::Identity, &DiscPoint::ZERO), 1.0, 1e-14));
        assert_eq!(normal_quantity(&FunctionExpr::constant(5.0), &pt(0.1, 0.0)), 0.0);
    }

    #[test]
    fn normal_below_bloch_everywhere() {
        let zoo = [
            FunctionExpr::LogOneMinus,
            FunctionExpr::AtomicInner { c: 1.0 },
            FunctionExpr::MobiusAtom { a: pt(0.4, 0.2) },
            FunctionExpr::product(FunctionExpr::AtomicInner { c: 0.5 }, FunctionExpr::LogOneMinus),
        ];
        for f in &zoo {
            let fd = f.deriv();
            for i in 0..50 {
                let r = 0.9 * (i as f64 + 0.5) / 50.0;
                let th = 2.399963229728653 * i as f64; // golden-angle sweep
                let z = DiscPoint::from_gap(-(-r).ln_1p(), th).unwrap();
                let b = bloch_quantity_log(&fd, &z).exp();
                let n = normal_quantity_with(f, &fd, &z);
                assert!(n <= b * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn bloch_estimator_pins() {
        let ctx = ExecCtx::serial();
        // identity: exactly 1 with witness 0
        let (est, _) = bloch_seminorm_est(&FunctionExpr::Identity, 6, &ctx).unwrap();
        assert!((est.value - 1.0).abs() <= 1e-12);
        assert_eq!(est.witness.gap_log(), 0.0);
        // mobius atom: sup = 1 attained at a
        let a = pt(0.37, 0.0);
        let (est, _) = bloch_seminorm_est(&FunctionExpr::MobiusAtom { a }, 8, &ctx).unwrap();
        assert!((est.value - 1.0).abs() <= 1e-10, "got {}", est.value);
        // log1m at levels 12: value in [1.9995, 2.0)
        let (est, _) = bloch_seminorm_est(&FunctionExpr::LogOneMinus, 12, &ctx).unwrap();
        assert!(est.value >= 1.9995 && est.value < 2.0, "got {}", est.value);
        // history never decreases
        assert!(est.monotone_history.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn blog_estimator_reaches_calculus_maximum() {
        let ctx = ExecCtx::serial();
        // max of (1-x) log(2/(1-x)) over x = |z|^2 is 2/e at 1-x = 2/e
        let (est, _) = blog_seminorm_est(&FunctionExpr::Identity, 8, &ctx).unwrap();
        let expect = 2.0 / std::f64::consts::E;
        assert!(est.value >= LN2);
        assert!(rel_close(est.value, expect, 1e-9), "got {}", est.value);
    }

    #[test]
    fn blog_dominates_bloch_pointwise() {
        let f = FunctionExpr::LogOneMinus;
        for i in 1..20 {
            let z = DiscPoint::from_gap(0.3 * i as f64, 0.1 * i as f64).unwrap();
            assert!(blog_quantity(&f, &z) >= LN2 * bloch_quantity(&f, &z) * (1.0 - 1e-12));
        }
    }

    #[test]
    fn witness_reproduces_value() {
        let ctx = ExecCtx::serial();
        let f = FunctionExpr::product(
            FunctionExpr::LogOneMinus,
            FunctionExpr::MobiusAtom { a: pt(0.3, 0.25) },
        );
        let (est, _) = bloch_seminorm_est(&f, 8, &ctx).unwrap();
        let again = bloch_quantity(&f, &est.witness);
        assert!(rel_close(est.value, again, 1e-12));
    }

    #[test]
    fn escape_sequence_pins() {
        let pts = [DiscPoint::ZERO, pt(0.5, 0.0)];
        let out = escape_sequence(&FunctionExpr::Identity, &pts);
        assert!(rel_close(out[0].bloch, 1.0, 1e-14));
        assert!(rel_close(out[1].bloch, 0.75, 1e-14));
        // bounded escape for a Bloch function
        let f = FunctionExpr::LogOneMinus;
        let ladder: Vec<DiscPoint> = (1..=20)
            .map(|n| DiscPoint::from_gap(n as f64 * LN2, 0.0).unwrap())
            .collect();
        let esc = escape_sequence(&f, &ladder);
        for (n, e) in esc.iter().enumerate() {
            let r = 1.0 - 2f64.powi(-(n as i32) - 1);
            assert!(rel_close(e.bloch, 1.0 + r, 1e-9));
            assert!(e.bloch < 2.0);
        }
        // unbounded escape for 1/(1-z): (1 + r_n) 2^n
        let g = FunctionExpr::PowOneMinus { k: 1 };
        let esc = escape_sequence(&g, &ladder);
        for (n, e) in esc.iter().enumerate() {
            let r = 1.0 - 2f64.powi(-(n as i32) - 1);
            let expect = (1.0 + r) * 2f64.powi(n as i32 + 1);
            assert!(rel_close(e.bloch, expect, 1e-9));
        }
        assert!(esc[19].bloch > esc[0].bloch * 1e5);
    }

    #[test]
    fn parallel_width_does_not_change_results() {
        let f = FunctionExpr::product(
            FunctionExpr::AtomicInner { c: 1.0 },
            FunctionExpr::LogOneMinus,
        );
        let serial = ExecCtx::serial();
        let wide = ExecCtx::new(8).unwrap();
        let a = integral_mean(&f, 0.8, 2.0, &serial).unwrap();
        let b = integral_mean(&f, 0.8, 2.0, &wide).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        let sa = sup_mean(&f, 3.0, SupProfile::DenseScan, &serial).unwrap();
        let sb = sup_mean(&f, 3.0, SupProfile::DenseScan, &wide).unwrap();
        assert_eq!(sa.value.to_bits(), sb.value.to_bits());
        assert_eq!(sa.theta_star.to_bits(), sb.theta_star.to_bits());
    }

    #[test]
    fn means_monotone_in_radius() {
        let ctx = ExecCtx::serial();
        let zoo = [
            FunctionExpr::Identity,
            FunctionExpr::LogOneMinus,
            FunctionExpr::AtomicInner { c: 1.0 },
            FunctionExpr::blaschke(vec![pt(0.4, 0.0), pt(-0.6, 0.1)]),
        ];
        let radii = [0.3, 0.5, 0.7, 0.9];
        for f in &zoo {
            for p in [1.0, 2.0] {
                let ms: Vec<f64> = radii
                    .iter()
                    .map(|&r| integral_mean(f, r, p, &ctx).unwrap())
                    .collect();
                for w in ms.windows(2) {
                    assert!(w[0] <= w[1] * (1.0 + 1e-9));
                }
            }
            let sups: Vec<f64> = radii
                .iter()
                .map(|&r| sup_mean(f, -(-r).ln_1p(), SupProfile::DenseScan, &ctx).unwrap().value)
                .collect();
            for w in sups.windows(2) {
                assert!(w[0] <= w[1] * (1.0 + 1e-9));
            }
            // M_p <= M_inf
            for (i, &r) in radii.iter().enumerate() {
                let m2 = integral_mean(f, r, 2.0, &ctx).unwrap();
                assert!(m2 <= sups[i] * (1.0 + 1e-9));
            }
        }
    }
}
