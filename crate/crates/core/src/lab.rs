//! Executable versions of the two constructions: the horocycle-versus-radius
//! dichotomy for products with the atomic singular inner function, and the
//! full radius-schedule construction of an atom sum g with g*f escaping the
//! Bloch class, certified term by term.
//!
//! Everything runs in (gap_log, theta) coordinates with log-scaled moduli;
//! Cartesian doubles are only a rendering. The schedule radii satisfy
//! 1 - r_n ~ exp(-c 2^n), which kills naive arithmetic after a handful of
//! steps.

use serde::{Deserialize, Serialize};

use crate::disc::{
    one_minus_conj_prod, pseudo_hyperbolic_log, DiscPoint, Horocycle, GAP_LOG_MAX,
};
use crate::error::{Error, Result};
use crate::expr::{besov_assemble, FunctionExpr};
use crate::logdomain::softplus;
use crate::seminorms::{
    bloch_quantity_log, bloch_seminorm_est, sup_mean, ExecCtx, SupProfile,
};

use num_complex::Complex64;

const LN2: f64 = std::f64::consts::LN_2;

/// Snap tolerance: an argmax angle below this is moved onto the real ray,
/// enabling the exact real-gap formula 1 - a_k a_n = t_k + t_n - t_k t_n.
pub const SNAP_THETA: f64 = 1e-9;

/// Default multiplicative headroom applied to the minimal admissible radius
/// at each step. Pure minimal radii satisfy the schedule conditions with
/// margins near zero and leave the final escape ratios too close to their
/// thresholds; the headroom keeps every certificate comfortably strict.
pub const DEFAULT_SCHEDULE_MARGIN: f64 = 1.15;

/// Per-step slack certificates, all in log space; a condition holds exactly
/// when its margin is >= 0, strictly when > 0.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Margins {
    /// Slack of (1-r_n)^2 phi(r_n) <= (1/n) ((1-r_{n-1})/n)^2.
    pub m2: f64,
    /// Slack of phi(r_n) >= 2 phi(r_{n-1}); log of the ratio over 2.
    pub m3: f64,
    /// Slack of (1-r_n)/(1-r_{n-1}) <= 1/n.
    pub m4: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub n: usize,
    pub gap_log: f64,
    /// phi(r_n) rendered linearly when representable.
    pub phi: Option<f64>,
    /// ln phi(r_n), always populated.
    pub phi_log: f64,
    /// None for the seed entry n = 1.
    pub margins: Option<Margins>,
}

/// The radius sequence with per-condition margin certificates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadiusSchedule {
    pub entries: Vec<ScheduleEntry>,
}

impl RadiusSchedule {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn gap_logs(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.gap_log).collect()
    }

    /// Recompute every margin from the raw gap_logs and phi_logs and check
    /// the stored certificates, the monotonicity of the radii, and the
    /// strict positivity of each slack.
    pub fn validate(&self) -> Result<()> {
        if self.entries.len() < 2 {
            return Err(Error::InvalidInput("schedule needs at least two radii".into()));
        }
        for w in self.entries.windows(2) {
            let (p, e) = (&w[0], &w[1]);
            if !(e.gap_log > p.gap_log) {
                return Err(Error::Domain(format!(
                    "schedule radii not increasing at n={}",
                    e.n
                )));
            }
            let m = recompute_margins(p, e);
            let stored = e.margins.ok_or_else(|| {
                Error::Domain(format!("schedule entry n={} is missing margins", e.n))
            })?;
            for (name, got, want) in [
                ("m2", stored.m2, m.m2),
                ("m3", stored.m3, m.m3),
                ("m4", stored.m4, m.m4),
            ] {
                if (got - want).abs() > 1e-12 * want.abs().max(1.0) {
                    return Err(Error::Domain(format!(
                        "stored margin {name} at n={} disagrees with recomputation",
                        e.n
                    )));
                }
                if !(got > 0.0) {
                    return Err(Error::Domain(format!(
                        "margin {name} at n={} is not strictly positive",
                        e.n
                    )));
                }
            }
        }
        Ok(())
    }
}

fn recompute_margins(prev: &ScheduleEntry, cur: &ScheduleEntry) -> Margins {
    let ln_n = (cur.n as f64).ln();
    Margins {
        m2: (2.0 * (cur.gap_log - prev.gap_log) - 3.0 * ln_n) - cur.phi_log,
        m3: (cur.phi_log - prev.phi_log) - LN2,
        m4: (cur.gap_log - prev.gap_log) - ln_n,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SelectOpts {
    /// Multiplicative headroom >= 1 applied to each minimal radius.
    pub margin: f64,
    /// How phi(r) = M_inf(r, f) is evaluated.
    pub profile: SupProfile,
}

impl Default for SelectOpts {
    fn default() -> Self {
        SelectOpts {
            margin: DEFAULT_SCHEDULE_MARGIN,
            profile: SupProfile::RealRayMax,
        }
    }
}

/// One-time validation of the real-ray fast path: at a moderate radius the
/// dense scan must not beat the radial value.
fn validate_real_ray(f: &FunctionExpr, ctx: &ExecCtx) -> Result<()> {
    let g = 3.0;
    let scan = sup_mean(f, g, SupProfile::DenseScan, ctx)?;
    let radial = f
        .eval_log(&DiscPoint::from_gap(g, 0.0)?)
        .log_abs;
    if radial < scan.log_value - 1e-9 {
        return Err(Error::ProfileValidation(format!(
            "radial value {radial} at gap_log=3 is below the scanned maximum {} at theta={}; \
             the function is not real-ray maximal",
            scan.log_value, scan.theta_star
        )));
    }
    Ok(())
}

/// Greedy radius selection: given r_{n-1}, bisect in gap_log for the
/// smallest r_n satisfying the three explicit conditions, then apply the
/// headroom factor. All comparisons happen in log space.
pub fn select_radii(
    f: &FunctionExpr,
    count: usize,
    r1_gap_log: f64,
    opts: &SelectOpts,
    ctx: &ExecCtx,
) -> Result<RadiusSchedule> {
    if count < 2 {
        return Err(Error::InvalidInput(format!(
            "schedule needs at least 2 radii, asked for {count}"
        )));
    }
    if !(r1_gap_log > 0.0 && r1_gap_log.is_finite()) {
        return Err(Error::Domain(format!("r1 gap_log = {r1_gap_log} must be positive")));
    }
    if !(opts.margin >= 1.0 && opts.margin.is_finite()) {
        return Err(Error::InvalidInput(format!("schedule margin {} must be >= 1", opts.margin)));
    }
    if opts.profile == SupProfile::RealRayMax {
        validate_real_ray(f, ctx)?;
    }
    let phi_log = |g: f64| -> Result<f64> { Ok(sup_mean(f, g, opts.profile, ctx)?.log_value) };

    let mut entries = Vec::with_capacity(count);
    let p1 = phi_log(r1_gap_log)?;
    entries.push(ScheduleEntry {
        n: 1,
        gap_log: r1_gap_log,
        phi: render(p1.exp()),
        phi_log: p1,
        margins: None,
    });

    for n in 2..=count {
        let prev_gap = entries[n - 2].gap_log;
        let prev_phi = entries[n - 2].phi_log;
        let ln_n = (n as f64).ln();
        // first violated condition, in the order (iii), (ii), (iv)
        let violated = |g: f64, pl: f64| -> Option<&'static str> {
            if pl < LN2 + prev_phi {
                Some("(iii)")
            } else if pl > 2.0 * (g - prev_gap) - 3.0 * ln_n {
                Some("(ii)")
            } else if g < prev_gap + ln_n {
                Some("(iv)")
            } else {
                None
            }
        };

        let mut hi = (2.0 * prev_gap).max(prev_gap + 1.0);
        loop {
            if hi > GAP_LOG_MAX {
                let pl = phi_log(GAP_LOG_MAX)?;
                return Err(Error::ScheduleInfeasible {
                    n,
                    condition: violated(GAP_LOG_MAX, pl).unwrap_or("(margin)"),
                    limit: GAP_LOG_MAX,
                });
            }
            if violated(hi, phi_log(hi)?).is_none() {
                break;
            }
            hi *= 2.0;
        }
        let mut lo = prev_gap;
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if violated(mid, phi_log(mid)?).is_none() {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-12 * hi.max(1.0) {
                break;
            }
        }

        let mut gap = hi * opts.margin;
        if gap > GAP_LOG_MAX {
            return Err(Error::ScheduleInfeasible {
                n,
                condition: "(margin)",
                limit: GAP_LOG_MAX,
            });
        }
        let mut pl = phi_log(gap)?;
        if violated(gap, pl).is_some() {
            // headroom broke a condition (possible only for pathological
            // phi profiles); fall back to the minimal admissible radius
            gap = hi;
            pl = phi_log(gap)?;
        }
        let entry = ScheduleEntry {
            n,
            gap_log: gap,
            phi: render(pl.exp()),
            phi_log: pl,
            margins: None,
        };
        let margins = recompute_margins(&entries[n - 2], &entry);
        entries.push(ScheduleEntry {
            margins: Some(margins),
            ..entry
        });
    }
    Ok(RadiusSchedule { entries })
}

fn render(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// Atom placement: modulus r_k from the schedule (bit-identical gap_log),
/// angle from the circle argmax of |f|, snapped onto the real ray when it
/// lands within [`SNAP_THETA`]. Each atom is checked to reproduce phi_k.
pub fn pick_atoms(
    f: &FunctionExpr,
    schedule: &RadiusSchedule,
    opts: &SelectOpts,
    ctx: &ExecCtx,
) -> Result<Vec<DiscPoint>> {
    let mut atoms = Vec::with_capacity(schedule.len());
    for e in &schedule.entries {
        let theta = match opts.profile {
            SupProfile::RealRayMax => 0.0,
            SupProfile::DenseScan => {
                let s = sup_mean(f, e.gap_log, SupProfile::DenseScan, ctx)?;
                if s.theta_star.abs() < SNAP_THETA {
                    0.0
                } else {
                    s.theta_star
                }
            }
        };
        let a = DiscPoint::from_gap(e.gap_log, theta)?;
        let reproduced = f.eval_log(&a).log_abs;
        if (reproduced - e.phi_log).abs() > 1e-9 * e.phi_log.abs().max(1.0) + 1e-12 {
            return Err(Error::Domain(format!(
                "atom at n={} reproduces ln|f| = {reproduced}, schedule says {}",
                e.n, e.phi_log
            )));
        }
        atoms.push(a);
    }
    Ok(atoms)
}

/// The I/II/III split of |g'(a_n) f(a_n)|: the diagonal term against the
/// off-diagonal sums over k < n and k > n, all in log space.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TermRow {
    pub n: usize,
    pub i_log: f64,
    pub ii_log: Option<f64>,
    pub iii_log: Option<f64>,
    pub ii_over_i: f64,
    pub iii_over_i: f64,
}

/// I = |f(a_n)| lambda_n / (1 - |a_n|^2); II and III are the corresponding
/// sums of lambda_k (1-|a_k|^2)/|1 - conj(a_k) a_n|^2 over k < n and k > n.
pub fn decompose_terms(
    atoms: &[DiscPoint],
    weights: &[f64],
    f_abs_log_at_n: f64,
    n: usize,
) -> TermRow {
    let an = &atoms[n];
    let term_log = |k: usize| -> f64 {
        let ak = &atoms[k];
        weights[k].ln() + ak.one_minus_abs_sq_log() - 2.0 * one_minus_conj_prod(ak, an).log_abs
    };
    let lse = |range: std::ops::Range<usize>| -> Option<f64> {
        let logs: Vec<f64> = range.map(term_log).collect();
        if logs.is_empty() {
            return None;
        }
        let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if m == f64::NEG_INFINITY {
            return Some(f64::NEG_INFINITY);
        }
        let s: f64 = logs.iter().map(|&x| (x - m).exp()).sum();
        Some(m + s.ln())
    };
    let i_log = f_abs_log_at_n + weights[n].ln() - an.one_minus_abs_sq_log();
    let ii_log = lse(0..n).map(|v| f_abs_log_at_n + v);
    let iii_log = lse(n + 1..atoms.len()).map(|v| f_abs_log_at_n + v);
    TermRow {
        n: n + 1,
        i_log,
        ii_log,
        iii_log,
        ii_over_i: ii_log.map_or(0.0, |v| (v - i_log).exp()),
        iii_over_i: iii_log.map_or(0.0, |v| (v - i_log).exp()),
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NonblochThresholds {
    /// Required ratio escape_N / escape_w over the window start w.
    pub escape_ratio_min: f64,
    /// Ceiling for II/I and III/I at n = N.
    pub dominance_max: f64,
    /// Window start is ceil(N / window_divisor).
    pub window_divisor: usize,
    /// Multiplicative slack in the boundedness channel.
    pub boundedness_slack: f64,
}

impl Default for NonblochThresholds {
    fn default() -> Self {
        NonblochThresholds {
            escape_ratio_min: 4.0,
            dominance_max: 0.5,
            window_divisor: 3,
            boundedness_slack: 1.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictStatus {
    Pass,
    Fail,
    InsufficientLength,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerdictCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NonblochVerdict {
    pub status: VerdictStatus,
    pub thresholds: NonblochThresholds,
    pub checks: Vec<VerdictCheck>,
}

/// The full construction output: schedule, atoms, weights, the escape
/// sequence of (1-|a_n|) |(g f)'(a_n)|, its certified g'-channel proxy, the
/// bounded g f' channel, and the I/II/III decomposition per n.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub schedule: RadiusSchedule,
    pub atoms: Vec<DiscPoint>,
    pub weights: Vec<f64>,
    pub weight_l1: f64,
    /// Sup-norm certificate for g: |lambda_0| + sum |lambda_k|.
    pub sup_norm_bound: f64,
    /// Lower-bound Bloch seminorm estimate for the unbounded factor f.
    pub f_bloch_est: f64,
    pub escape_log: Vec<f64>,
    pub escape: Vec<Option<f64>>,
    pub proxy_log: Vec<f64>,
    pub proxy: Vec<Option<f64>>,
    /// (1-|a_n|) |g(a_n) f'(a_n)|, the channel bounded by ||g||_inf ||f||_B.
    pub gf_prime: Vec<f64>,
    pub terms: Vec<TermRow>,
    pub verdict: NonblochVerdict,
}

/// Full pipeline: radius schedule, atoms, weights lambda_k = phi(r_k)^{-1/2},
/// assembly of g, and the per-n escape certificates.
pub fn build_counterexample(
    f: &FunctionExpr,
    count: usize,
    r1_gap_log: f64,
    opts: &SelectOpts,
    thresholds: &NonblochThresholds,
    ctx: &ExecCtx,
) -> Result<CounterexampleReport> {
    let schedule = select_radii(f, count, r1_gap_log, opts, ctx)?;
    let atoms = pick_atoms(f, &schedule, opts, ctx)?;
    let weights: Vec<f64> = schedule
        .entries
        .iter()
        .map(|e| (-0.5 * e.phi_log).exp())
        .collect();
    assemble_report(f, schedule, atoms, weights, thresholds, ctx)
}

/// Assemble the report from explicit weights. Split out so that corrupted
/// weight vectors can be pushed through the identical certification path.
pub fn assemble_report(
    f: &FunctionExpr,
    schedule: RadiusSchedule,
    atoms: Vec<DiscPoint>,
    weights: Vec<f64>,
    thresholds: &NonblochThresholds,
    ctx: &ExecCtx,
) -> Result<CounterexampleReport> {
    if weights.len() != atoms.len() || weights.len() != schedule.len() {
        return Err(Error::InvalidInput("schedule, atoms and weights must have equal length".into()));
    }
    let n = atoms.len();
    let weight_l1: f64 = weights.iter().sum();
    let g_expr = besov_assemble(
        Complex64::new(0.0, 0.0),
        weights.iter().map(|&w| Complex64::new(w, 0.0)).collect(),
        atoms.clone(),
    )?;
    let gd_expr = g_expr.deriv();
    let fd_expr = f.deriv();
    let f_bloch_est = bloch_seminorm_est(f, 12, ctx)?.0.value;

    let mut escape_log = Vec::with_capacity(n);
    let mut proxy_log = Vec::with_capacity(n);
    let mut gf_prime = Vec::with_capacity(n);
    let mut terms = Vec::with_capacity(n);
    for i in 0..n {
        let a = &atoms[i];
        let t_log = -a.gap_log(); // ln(1 - |a_n|)
        let f_v = f.eval_log(a);
        let fd_v = fd_expr.eval_log(a);
        let g_v = g_expr.eval_log(a);
        let gd_v = gd_expr.eval_log(a);
        let term_gf = gd_v.mul(&f_v); // g'(a_n) f(a_n)
        let term_fg = g_v.mul(&fd_v); // g(a_n) f'(a_n)
        let total = term_gf.add(&term_fg);
        escape_log.push(t_log + total.log_abs);
        proxy_log.push(t_log + term_gf.log_abs);
        gf_prime.push((t_log + term_fg.log_abs).exp());
        terms.push(decompose_terms(&atoms, &weights, f_v.log_abs, i));
    }

    let mut report = CounterexampleReport {
        schedule,
        atoms,
        weight_l1,
        sup_norm_bound: weight_l1, // lambda_0 = 0 in the construction
        f_bloch_est,
        escape: escape_log.iter().map(|&v| render(v.exp())).collect(),
        escape_log,
        proxy: proxy_log.iter().map(|&v| render(v.exp())).collect(),
        proxy_log,
        gf_prime,
        terms,
        weights,
        verdict: NonblochVerdict {
            status: VerdictStatus::InsufficientLength,
            thresholds: *thresholds,
            checks: vec![],
        },
    };
    report.verdict = verify_nonbloch(&report, thresholds);
    Ok(report)
}

/// PASS iff (a) the escape sequence is strictly increasing past the window
/// start, (b) it grows by the required ratio across the window, (c) the
/// off-diagonal terms II and III stay below the dominance ceiling at n = N,
/// and (d) the g f' channel respects the sup-norm times Bloch-seminorm
/// budget at every n. The thresholds are conventions of this tool, recorded
/// in the verdict.
pub fn verify_nonbloch(
    report: &CounterexampleReport,
    th: &NonblochThresholds,
) -> NonblochVerdict {
    let n = report.escape_log.len();
    if n < 4 {
        return NonblochVerdict {
            status: VerdictStatus::InsufficientLength,
            thresholds: *th,
            checks: vec![VerdictCheck {
                name: "length".into(),
                pass: false,
                detail: format!("need at least 4 radii for the escape windows, got {n}"),
            }],
        };
    }
    let w = n.div_ceil(th.window_divisor).max(1); // 1-based window start
    let mut checks = Vec::new();

    let increasing = (w - 1..n - 1).all(|i| report.escape_log[i] < report.escape_log[i + 1]);
    checks.push(VerdictCheck {
        name: "escape_increasing".into(),
        pass: increasing,
        detail: format!("strict growth required for n >= {w}"),
    });

    let ratio_log = report.escape_log[n - 1] - report.escape_log[w - 1];
    let ratio_ok = ratio_log >= th.escape_ratio_min.ln();
    checks.push(VerdictCheck {
        name: "escape_ratio".into(),
        pass: ratio_ok,
        detail: format!(
            "escape_{n}/escape_{w} = {:.6} vs required {}",
            ratio_log.exp(),
            th.escape_ratio_min
        ),
    });

    let last = &report.terms[n - 1];
    let dom_ok = last.ii_over_i < th.dominance_max && last.iii_over_i < th.dominance_max;
    checks.push(VerdictCheck {
        name: "dominance".into(),
        pass: dom_ok,
        detail: format!(
            "II/I = {:.3e}, III/I = {:.3e} at n = {n}, ceiling {}",
            last.ii_over_i, last.iii_over_i, th.dominance_max
        ),
    });

    let budget = report.weight_l1 * report.f_bloch_est * th.boundedness_slack;
    let bounded = report.gf_prime.iter().all(|&v| v <= budget);
    checks.push(VerdictCheck {
        name: "bounded_channel".into(),
        pass: bounded,
        detail: format!(
            "max (1-|a_n|)|g(a_n) f'(a_n)| = {:.6} vs budget {:.6}",
            report.gf_prime.iter().cloned().fold(0.0, f64::max),
            budget
        ),
    });

    let status = if checks.iter().all(|c| c.pass) {
        VerdictStatus::Pass
    } else {
        VerdictStatus::Fail
    };
    NonblochVerdict {
        status,
        thresholds: *th,
        checks,
    }
}

/// One record along a horocycle or radial trace.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TraceSample {
    /// psi on the horocycle, gap_log on the radius.
    pub param: f64,
    pub gap_log: f64,
    pub theta: f64,
    /// ln |S f| = ln |S| + ln |f|, exact additivity by construction.
    pub log_mod_product: f64,
    pub log_mod_inner: f64,
    pub log_mod_bloch: f64,
    pub bloch_q: f64,
    pub normal_q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem2Status {
    Pass,
    Fail,
    InsufficientDepth,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormalSup {
    pub value: f64,
    pub path: String,
    pub index: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Theorem2Report {
    pub a: f64,
    pub c: f64,
    pub depth: u32,
    /// The constant value of ln |S| on the horocycle: -c a/(1-a).
    pub s_level_log: f64,
    /// Max deviation of ln |S| from that level along the horocycle trace.
    pub s_constancy: f64,
    pub horocycle_trace: Vec<TraceSample>,
    pub radial_trace: Vec<TraceSample>,
    pub normal_sup: NormalSup,
    pub status: Theorem2Status,
    pub checks: Vec<VerdictCheck>,
}

/// Trace the product F = S f along the horocycle through 1 and along the
/// radius, at boundary distances 10^{-j}, j = 1..depth. The horocycle trace
/// must show |S| pinned at exp(-c a/(1-a)) while |F| grows; the radial trace
/// must show ln |F| collapsing like -2c 10^j.
pub fn verify_theorem2(
    f: &FunctionExpr,
    c: f64,
    a: f64,
    depth: u32,
    _ctx: &ExecCtx,
) -> Result<Theorem2Report> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Domain(format!("inner mass c = {c} must be positive")));
    }
    if depth < 1 {
        return Err(Error::InvalidInput("depth must be at least 1".into()));
    }
    let h = Horocycle::new(a)?;
    let s_expr = FunctionExpr::AtomicInner { c };
    let product = FunctionExpr::product(s_expr.clone(), f.clone());
    let product_d = product.deriv();

    let sample = |z: &DiscPoint, param: f64| -> TraceSample {
        let lm_inner = s_expr.log_modulus(z);
        let lm_bloch = f.log_modulus(z);
        let lm_product = product.log_modulus(z);
        let bq_log = bloch_quantity_log(&product_d, z);
        TraceSample {
            param,
            gap_log: z.gap_log(),
            theta: z.theta(),
            log_mod_product: lm_product,
            log_mod_inner: lm_inner,
            log_mod_bloch: lm_bloch,
            bloch_q: bq_log.exp(),
            normal_q: (bq_log - softplus(2.0 * lm_product)).exp(),
        }
    };

    let mut horocycle_trace = Vec::with_capacity(depth as usize);
    for j in 1..=depth {
        let d = 10f64.powi(-(j as i32));
        let psi = h.psi_for_boundary_distance(d)?;
        let z = h.point(psi)?;
        horocycle_trace.push(sample(&z, psi));
    }
    let mut radial_trace = Vec::with_capacity(depth as usize);
    for j in 1..=depth {
        let gap = (j as f64) * std::f64::consts::LN_10;
        let z = DiscPoint::from_gap(gap, 0.0)?;
        radial_trace.push(sample(&z, gap));
    }

    let s_level_log = -c * h.level();
    let s_constancy = horocycle_trace
        .iter()
        .map(|s| (s.log_mod_inner - s_level_log).abs())
        .fold(0.0, f64::max);

    let mut normal_sup = NormalSup {
        value: f64::NEG_INFINITY,
        path: String::new(),
        index: 0,
    };
    for (path, trace) in [("horocycle", &horocycle_trace), ("radial", &radial_trace)] {
        for (i, s) in trace.iter().enumerate() {
            if s.normal_q > normal_sup.value {
                normal_sup = NormalSup {
                    value: s.normal_q,
                    path: path.into(),
                    index: i + 1,
                };
            }
        }
    }

    let (status, checks) = if depth < 2 {
        (
            Theorem2Status::InsufficientDepth,
            vec![VerdictCheck {
                name: "depth".into(),
                pass: false,
                detail: format!("need depth >= 2 for growth and decay checks, got {depth}"),
            }],
        )
    } else {
        let mut checks = Vec::new();
        let const_ok = s_constancy < 1e-9;
        checks.push(VerdictCheck {
            name: "inner_level_constant".into(),
            pass: const_ok,
            detail: format!("max |ln|S| - ({s_level_log})| = {s_constancy:.3e}"),
        });
        // asymptotic-infinity proxy: |F| grows along the horocycle from
        // some j0 in the first half of the trace
        let grow_from = (0..horocycle_trace.len()).find(|&j0| {
            horocycle_trace[j0..]
                .windows(2)
                .all(|w| w[0].log_mod_product < w[1].log_mod_product)
        });
        let grow_ok = grow_from.is_some_and(|j0| j0 + 1 <= (depth as usize).div_ceil(2));
        checks.push(VerdictCheck {
            name: "horocycle_growth".into(),
            pass: grow_ok,
            detail: format!("strict growth of ln|F| from trace index {grow_from:?}"),
        });
        // radial-zero proxy: ln|F| strictly decreasing, far below zero, and
        // shrinking by about a decade per step
        let decay = radial_trace
            .windows(2)
            .all(|w| w[0].log_mod_product > w[1].log_mod_product);
        let deep = radial_trace.last().unwrap().log_mod_product <= -100.0;
        let slope = radial_trace[depth as usize - 1].log_mod_product
            / radial_trace[depth as usize - 2].log_mod_product;
        let slope_ok = (8.0..=12.0).contains(&slope);
        checks.push(VerdictCheck {
            name: "radial_decay".into(),
            pass: decay && deep && slope_ok,
            detail: format!(
                "strictly decreasing: {decay}, final ln|F| = {:.3}, last step ratio {slope:.3}",
                radial_trace.last().unwrap().log_mod_product
            ),
        });
        let status = if checks.iter().all(|c| c.pass) {
            Theorem2Status::Pass
        } else {
            Theorem2Status::Fail
        };
        (status, checks)
    };

    Ok(Theorem2Report {
        a,
        c,
        depth,
        s_level_log,
        s_constancy,
        horocycle_trace,
        radial_trace,
        normal_sup,
        status,
        checks,
    })
}

/// delta = min_n prod_{m != n} rho(a_n, a_m), via log sums; 0 for repeated
/// zeros, 1 for a single zero (empty product).
pub fn uniform_separation(zeros: &[DiscPoint]) -> f64 {
    if zeros.len() <= 1 {
        return 1.0;
    }
    let mut delta = f64::INFINITY;
    for n in 0..zeros.len() {
        let mut acc = 0.0f64;
        for m in 0..zeros.len() {
            if m != n {
                acc += pseudo_hyperbolic_log(&zeros[n], &zeros[m]);
            }
        }
        delta = delta.min(acc.exp());
    }
    delta
}

/// Max relative deviation of (1-|a_n|^2)|B'(a_n)| from
/// prod_{m != n} rho(a_n, a_m); the two agree exactly for finite products.
pub fn interpolation_derivative_identity(zeros: &[DiscPoint]) -> Result<f64> {
    if zeros.is_empty() {
        return Err(Error::InvalidInput("need at least one zero".into()));
    }
    let b = FunctionExpr::blaschke(zeros.to_vec());
    let bd = b.deriv();
    let mut worst = 0.0f64;
    for n in 0..zeros.len() {
        let an = &zeros[n];
        let lhs_log = an.one_minus_abs_sq_log() + bd.eval_log(an).log_abs;
        let rhs_log: f64 = (0..zeros.len())
            .filter(|&m| m != n)
            .map(|m| pseudo_hyperbolic_log(an, &zeros[m]))
            .sum();
        let dev = if rhs_log == f64::NEG_INFINITY {
            if lhs_log == f64::NEG_INFINITY {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            ((lhs_log - rhs_log).exp() - 1.0).abs()
        };
        worst = worst.max(dev);
    }
    Ok(worst)
}

/// Membership of each point in the Stolz region |1 - z| <= sigma (1 - |z|)
/// with vertex at 1, evaluated through the gap representation.
pub fn stolz_contains(sigma: f64, points: &[DiscPoint]) -> Result<Vec<bool>> {
    if !(sigma >= 1.0 && sigma.is_finite()) {
        return Err(Error::Domain(format!("stolz aperture sigma = {sigma} must be >= 1")));
    }
    Ok(points
        .iter()
        .map(|p| p.log_abs_one_minus() <= sigma.ln() - p.gap_log())
        .collect())
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

    fn log1m() -> FunctionExpr {
        FunctionExpr::LogOneMinus
    }

    #[test]
    fn schedule_for_log1m_doubles_in_gap() {
        let ctx = ExecCtx::serial();
        let s = select_radii(&log1m(), 10, 1.0, &SelectOpts::default(), &ctx).unwrap();
        s.validate().unwrap();
        // phi(r) = gap_log on the ray, so phi doubles once condition (iii)
        // binds; with the 1.15 headroom each step multiplies by 2.3
        let gaps = s.gap_logs();
        assert!(rel_close(gaps[0], 1.0, 1e-15));
        assert!(gaps[1] > 2.8 && gaps[1] < 2.95, "g2 = {}", gaps[1]);
        for n in 3..10 {
            assert!(rel_close(gaps[n], 2.3 * gaps[n - 1], 1e-9), "n={n}");
        }
        // margins recompute from raw gap_logs and stay strictly positive
        for e in &s.entries[1..] {
            let m = e.margins.unwrap();
            assert!(m.m2 > 0.0 && m.m3 > 0.0 && m.m4 > 0.0);
        }
    }

    #[test]
    fn schedule_minimal_two_step_margins_recompute() {
        let ctx = ExecCtx::serial();
        let s = select_radii(&log1m(), 2, 1.0, &SelectOpts::default(), &ctx).unwrap();
        let e = &s.entries[1];
        let m = e.margins.unwrap();
        let ln2 = LN2;
        // recompute the three inequalities by hand from the raw values
        assert!(rel_close(m.m3, e.phi_log - s.entries[0].phi_log - ln2, 1e-12));
        assert!(rel_close(
            m.m2,
            2.0 * (e.gap_log - 1.0) - 3.0 * 2f64.ln() - e.phi_log,
            1e-12
        ));
        assert!(rel_close(m.m4, e.gap_log - 1.0 - 2f64.ln(), 1e-12));
    }

    #[test]
    fn schedule_infeasible_past_gap_cap() {
        let ctx = ExecCtx::serial();
        let err = select_radii(&log1m(), 20, 1.0, &SelectOpts::default(), &ctx).unwrap_err();
        match err {
            Error::ScheduleInfeasible { n, condition, .. } => {
                assert!(n >= 17 && n <= 19, "failed at n = {n}");
                assert_eq!(condition, "(iii)");
            }
            other => panic!("expected infeasibility, got {other}"),
        }
    }

    #[test]
    fn atoms_sit_on_ray_with_exact_radii() {
        let ctx = ExecCtx::serial();
        let opts = SelectOpts::default();
        let s = select_radii(&log1m(), 6, 1.0, &opts, &ctx).unwrap();
        let atoms = pick_atoms(&log1m(), &s, &opts, &ctx).unwrap();
        for (a, e) in atoms.iter().zip(&s.entries) {
            assert_eq!(a.gap_log().to_bits(), e.gap_log.to_bits());
            assert!(a.is_on_positive_ray());
        }
        // dense scan agrees at moderate radii
        let opts_scan = SelectOpts {
            profile: SupProfile::DenseScan,
            ..opts
        };
        let s2 = select_radii(&log1m(), 3, 1.0, &opts_scan, &ctx).unwrap();
        let atoms2 = pick_atoms(&log1m(), &s2, &opts_scan, &ctx).unwrap();
        assert!(atoms2.iter().all(|a| a.is_on_positive_ray()));
    }

    #[test]
    fn profile_validation_rejects_non_ray_maximal() {
        let ctx = ExecCtx::serial();
        // |1 + i z/2| peaks away from the positive ray
        let f = FunctionExpr::sum(
            FunctionExpr::constant(1.0),
            FunctionExpr::scale(Complex64::new(0.0, 0.5), FunctionExpr::Identity),
        );
        let err = select_radii(&f, 4, 1.0, &SelectOpts::default(), &ctx).unwrap_err();
        assert!(matches!(err, Error::ProfileValidation(_)));
    }

    #[test]
    fn counterexample_n2_is_degenerate_but_ordered() {
        let ctx = ExecCtx::serial();
        let r = build_counterexample(
            &log1m(),
            2,
            1.0,
            &SelectOpts::default(),
            &NonblochThresholds::default(),
            &ctx,
        )
        .unwrap();
        assert_eq!(r.escape_log.len(), 2);
        assert!(r.escape_log[1] > r.escape_log[0]);
        assert_eq!(r.verdict.status, VerdictStatus::InsufficientLength);
        // II empty at n=1, III empty at n=N
        assert!(r.terms[0].ii_log.is_none());
        assert!(r.terms[1].iii_log.is_none());
    }

    #[test]
    fn weight_decay_and_l1_bound() {
        let ctx = ExecCtx::serial();
        let r = build_counterexample(
            &log1m(),
            8,
            1.0,
            &SelectOpts::default(),
            &NonblochThresholds::default(),
            &ctx,
        )
        .unwrap();
        for w in r.weights.windows(2) {
            assert!(w[1] / w[0] <= 2f64.powf(-0.5) + 1e-12);
            assert!(w[1] > 0.0);
        }
        // geometric bound lambda_1 (2 + sqrt 2) from condition (iii)
        assert!(r.weight_l1 <= r.weights[0] * (2.0 + 2f64.sqrt()));
        let direct: f64 = r.weights.iter().sum();
        assert!(rel_close(r.weight_l1, direct, 1e-14));
    }

    #[test]
    fn decomposition_against_direct_summation() {
        // independent oracle: naive linear-arithmetic summation of the same
        // II/III terms, valid for N = 8 where every t_k is representable
        let ctx = ExecCtx::serial();
        let r = build_counterexample(
            &log1m(),
            8,
            1.0,
            &SelectOpts::default(),
            &NonblochThresholds::default(),
            &ctx,
        )
        .unwrap();
        let t: Vec<f64> = r.atoms.iter().map(|a| a.boundary_gap()).collect();
        let g: Vec<f64> = r.schedule.gap_logs();
        for n in 0..8 {
            let mut ii = 0.0f64;
            let mut iii = 0.0f64;
            for k in 0..8 {
                if k == n {
                    continue;
                }
                let den = t[k] + t[n] - t[k] * t[n];
                let term = r.weights[k] * t[k] * (2.0 - t[k]) / (den * den);
                if k < n {
                    ii += term;
                } else {
                    iii += term;
                }
            }
            let f_abs = g[n]; // |f(a_n)| = gap on the ray for log1m
            if n > 0 {
                let got = r.terms[n].ii_log.unwrap();
                assert!(rel_close(got, (f_abs * ii).ln(), 1e-10), "II at n={n}");
            }
            if n < 7 {
                let got = r.terms[n].iii_log.unwrap();
                assert!(rel_close(got, (f_abs * iii).ln(), 1e-10), "III at n={n}");
            }
            let i_direct = f_abs * r.weights[n] / (t[n] * (2.0 - t[n]));
            assert!(rel_close(r.terms[n].i_log, i_direct.ln(), 1e-10), "I at n={n}");
        }
    }

    #[test]
    fn escape_against_direct_evaluation() {
        // independent oracle: g'(a_n) and g(a_n) by naive summation over the
        // closed-form Mobius derivatives in linear arithmetic
        let ctx = ExecCtx::serial();
        let r = build_counterexample(
            &log1m(),
            8,
            1.0,
            &SelectOpts::default(),
            &NonblochThresholds::default(),
            &ctx,
        )
        .unwrap();
        let t: Vec<f64> = r.atoms.iter().map(|a| a.boundary_gap()).collect();
        let g: Vec<f64> = r.schedule.gap_logs();
        for n in 0..8 {
            let mut gp = 0.0f64; // g'(a_n), all terms negative
            let mut gv = 0.0f64; // g(a_n)
            for k in 0..8 {
                let den = t[k] + t[n] - t[k] * t[n];
                gp -= r.weights[k] * t[k] * (2.0 - t[k]) / (den * den);
                if k != n {
                    gv += r.weights[k] * (t[n] - t[k]) / den;
                }
            }
            let escape = t[n] * (gp * g[n] + gv / t[n]).abs();
            assert!(
                rel_close(r.escape_log[n], escape.ln(), 1e-9),
                "escape at n={n}: {} vs {}",
                r.escape_log[n],
                escape.ln()
            );
            let proxy = t[n] * gp.abs() * g[n];
            assert!(rel_close(r.proxy_log[n], proxy.ln(), 1e-9), "proxy at n={n}");
            assert!(rel_close(r.gf_prime[n], gv.abs(), 1e-9), "gf' at n={n}");
        }
    }

    #[test]
    fn theorem2_example_values() {
        let ctx = ExecCtx::serial();
        let r = verify_theorem2(&log1m(), 1.0, 0.5, 6, &ctx).unwrap();
        assert_eq!(r.status, Theorem2Status::Pass);
        assert!(rel_close(r.s_level_log, -1.0, 1e-15));
        assert!(r.s_constancy < 1e-10);
        // closed form at |1-z| = 1e-6: |F| = e^{-1} hypot(ln 1e6, (pi-psi)/2)
        let s6 = &r.horocycle_trace[5];
        let psi = s6.param;
        let expect = (-1.0f64).exp()
            * (1e6f64.ln().hypot((std::f64::consts::PI - psi) / 2.0));
        assert!(
            rel_close(s6.log_mod_product.exp(), expect, 1e-10),
            "horocycle |F|: {} vs {}",
            s6.log_mod_product.exp(),
            expect
        );
        // radial ln|F| at 1-r = 1e-3
        let s3 = &r.radial_trace[2];
        let expect = -(2.0 - 1e-3) / 1e-3 + (1000f64.ln()).ln();
        assert!(rel_close(s3.log_mod_product, expect, 1e-12));
        // level for a = 0.9
        let r9 = verify_theorem2(&log1m(), 1.0, 0.9, 3, &ctx).unwrap();
        assert!(rel_close(r9.s_level_log, -9.0, 1e-12));
        // depth 1: traces of length 1 and no verdict
        let r1 = verify_theorem2(&log1m(), 1.0, 0.5, 1, &ctx).unwrap();
        assert_eq!(r1.status, Theorem2Status::InsufficientDepth);
        assert_eq!(r1.horocycle_trace.len(), 1);
    }

    #[test]
    fn theorem2_trace_additivity_is_bitexact() {
        let ctx = ExecCtx::serial();
        let r = verify_theorem2(&log1m(), 1.0, 0.5, 6, &ctx).unwrap();
        for s in r.horocycle_trace.iter().chain(&r.radial_trace) {
            let sum = s.log_mod_inner + s.log_mod_bloch;
            assert_eq!(s.log_mod_product.to_bits(), sum.to_bits());
        }
    }

    #[test]
    fn separation_pins() {
        let zs = [pt(0.5, 0.0), pt(-0.5, 0.0)];
        assert!(rel_close(uniform_separation(&zs), 0.8, 1e-13));
        let dup = [pt(0.3, 0.0), pt(0.3, 0.0)];
        assert_eq!(uniform_separation(&dup), 0.0);
        assert_eq!(uniform_separation(&[pt(0.2, 0.1)]), 1.0);
        // exponential ray stays separated
        let ray: Vec<DiscPoint> = (1..=10)
            .map(|k| DiscPoint::from_gap(k as f64 * LN2, 0.0).unwrap())
            .collect();
        let d = uniform_separation(&ray);
        assert!(d > 0.015 && d < 0.025, "delta = {d}");
    }

    #[test]
    fn interpolation_identity_pins() {
        // two zeros: (1 - 0.25)|B'(0.5)| = 0.8 = rho(0.5, -0.5)
        let zs = [pt(0.5, 0.0), pt(-0.5, 0.0)];
        let dev = interpolation_derivative_identity(&zs).unwrap();
        assert!(dev < 1e-12);
        let b = FunctionExpr::blaschke(zs.to_vec());
        let bd = b.deriv();
        let lhs = zs[0].one_minus_abs_sq() * bd.eval(&zs[0]).norm();
        assert!(rel_close(lhs, 0.8, 1e-12));
        // single zero: empty product = 1
        let single = [pt(0.37, -0.2)];
        let b1 = FunctionExpr::blaschke(single.to_vec());
        let v = single[0].one_minus_abs_sq() * b1.deriv().eval(&single[0]).norm();
        assert!(rel_close(v, 1.0, 1e-12));
        assert!(interpolation_derivative_identity(&single).unwrap() < 1e-12);
    }

    #[test]
    fn stolz_pins() {
        // real-ray points always qualify
        let ray: Vec<DiscPoint> = (1..=8)
            .map(|k| DiscPoint::from_gap(k as f64 * LN2, 0.0).unwrap())
            .collect();
        assert!(stolz_contains(1.0, &ray).unwrap().iter().all(|&b| b));
        assert!(stolz_contains(2.0, &[DiscPoint::ZERO]).unwrap()[0]);
        // tangential approach leaves every fixed Stolz angle:
        // z = (1-t) e^{i sqrt(t)} has |1-z| ~ sqrt(t) >> sigma t
        let t = 1e-6f64;
        let z = DiscPoint::from_gap(-t.ln(), t.sqrt()).unwrap();
        assert!(!stolz_contains(2.0, &[z]).unwrap()[0]);
        assert!(stolz_contains(0.5, &[DiscPoint::ZERO]).is_err());
    }

    #[test]
    fn corrupted_weights_flip_the_verdict() {
        let ctx = ExecCtx::serial();
        let opts = SelectOpts::default();
        let th = NonblochThresholds::default();
        let good = build_counterexample(&log1m(), 8, 1.0, &opts, &th, &ctx).unwrap();
        assert_eq!(good.verdict.status, VerdictStatus::Pass);

        let mut reversed = good.weights.clone();
        reversed.reverse();
        let bad = assemble_report(
            &log1m(),
            good.schedule.clone(),
            good.atoms.clone(),
            reversed,
            &th,
            &ctx,
        )
        .unwrap();
        assert_eq!(bad.verdict.status, VerdictStatus::Fail);

        let wrong_exp: Vec<f64> = good
            .schedule
            .entries
            .iter()
            .map(|e| (-e.phi_log).exp())
            .collect();
        let bad2 = assemble_report(
            &log1m(),
            good.schedule.clone(),
            good.atoms.clone(),
            wrong_exp,
            &th,
            &ctx,
        )
        .unwrap();
        assert_eq!(bad2.verdict.status, VerdictStatus::Fail);
    }
}
