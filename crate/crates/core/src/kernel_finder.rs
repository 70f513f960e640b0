//! Construction of two- and three-dimensional kernels.
//!
//! Two trigonometric modes `k1 < k2` share a kernel when
//! `f(t, xi) = theta_k1 cot(theta_k1) - theta_k2 cot(theta_k2) = 0`, with
//! `t = |alpha|`. The zero set is a curve `t(xi)` along which the common value
//! `a` sweeps `(1, inf)`. A third, hyperbolic, mode `k3` joins the kernel
//! where `theta_k3 coth(theta_k3) = a`. Two constructions are provided:
//!
//! * closed form: parametrise the curve by `a` using the branches
//!   `theta_k1 in (2pi, 5pi/2)`, `theta_k2 in (pi, 3pi/2)` and scan `a`. This
//!   needs `(k3^2 - k2^2) / (k3^2 - k1^2) > 9/16` and yields a kernel of
//!   dimension exactly three;
//! * continuation: start from a two-mode point where the hyperbolic mode
//!   overshoots `a` and trace the curve towards `xi_min` until it matches.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::dispersion::{
    bifurcation_rhs, cos_star, kernel_condition_residual, recover_mu, sin_star, theta, theta_cot,
    theta_coth, Params, Regime, ThetaValue,
};
use crate::error::{Error, Result};

/// Tolerance on the three kernel residuals of a certified kernel.
pub const KERNEL_TOL: f64 = 1e-9;
/// Step in `xi` used by the curve-tracing predictor.
pub const TRACE_STEP: f64 = 1e-3;
const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 20;
const SCAN_POINTS: usize = 512;
const SCAN_LO: f64 = 1.0 + 1e-3;
const SCAN_HI: f64 = 1e4;
/// Threshold below which the transversality sum is reported as vanishing.
pub const TRANSVERSALITY_MARGIN: f64 = 1e-10;

/// A point on the two-mode curve `f(t, xi) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub xi: f64,
    pub t: f64,
    /// Common value `theta_k1 cot(theta_k1) = theta_k2 cot(theta_k2)`.
    pub a: f64,
    pub k1: u32,
    pub k2: u32,
}

impl CurvePoint {
    /// `(theta_k1, theta_k2)` at this point.
    pub fn thetas(&self) -> (f64, f64) {
        (theta_sq(self.t, self.xi, self.k1).sqrt(), theta_sq(self.t, self.xi, self.k2).sqrt())
    }

    /// `f(t, xi)` at this point.
    pub fn residual(&self) -> Result<f64> {
        curve_residual(self.k1, self.k2, self.t, self.xi)
    }
}

fn k2f(k: u32) -> f64 {
    f64::from(k) * f64::from(k)
}

/// `t - xi k^2`, the square of a trigonometric `theta_k`.
fn theta_sq(t: f64, xi: f64, k: u32) -> f64 {
    t - xi * k2f(k)
}

/// `d(theta cot theta) / d(theta^2)`.
fn dcot_dsq(theta: f64) -> f64 {
    let c = theta.cos() / theta.sin();
    0.5 * (c / theta - 1.0 - c * c)
}

fn check_pair(k1: u32, k2: u32) -> Result<()> {
    if k1 == 0 || k2 <= k1 {
        return Err(Error::InvalidWavenumbers(format!("need 1 <= k1 < k2, got ({k1}, {k2})")));
    }
    Ok(())
}

/// `f(t, xi) = theta_k1 cot(theta_k1) - theta_k2 cot(theta_k2)` for trigonometric modes.
pub fn curve_residual(k1: u32, k2: u32, t: f64, xi: f64) -> Result<f64> {
    let s1 = theta_sq(t, xi, k1);
    let s2 = theta_sq(t, xi, k2);
    if s1 <= 0.0 || s2 <= 0.0 {
        return Err(Error::CurveEscape { xi, reason: "mode left the trigonometric regime".into() });
    }
    Ok(theta_cot(s1.sqrt())? - theta_cot(s2.sqrt())?)
}

/// Slope of the curve from implicit differentiation,
/// `dt/dxi = (theta_1^2 theta_2^2 + t (a^2 - a)) / (xi (a^2 - a))`, with
/// `a = theta_k1 cot(theta_k1)` evaluated at `(t, xi)`.
pub fn curve_slope(k1: u32, k2: u32, t: f64, xi: f64) -> Result<f64> {
    let s1 = theta_sq(t, xi, k1);
    let s2 = theta_sq(t, xi, k2);
    if s1 <= 0.0 || s2 <= 0.0 {
        return Err(Error::CurveEscape { xi, reason: "mode left the trigonometric regime".into() });
    }
    let a = theta_cot(s1.sqrt())?;
    let g = a * a - a;
    Ok((s1 * s2 + t * g) / (xi * g))
}

/// Root of `theta cot(theta) = a` on the decreasing branch `(n pi, n pi + pi/2)`.
///
/// Bisection; the endpoints are never evaluated.
pub fn branch_root(a: f64, n: u32) -> Result<f64> {
    let lo0 = f64::from(n) * PI;
    let hi0 = lo0 + FRAC_PI_2;
    if !(a > 0.0) || !a.is_finite() || n == 0 {
        return Err(Error::BranchRootFailure { a, lo: lo0, hi: hi0 });
    }
    let (mut lo, mut hi) = (lo0, hi0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let g = mid / mid.tan() - a;
        if g > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    if !(root > lo0 && root < hi0) {
        return Err(Error::BranchRootFailure { a, lo: lo0, hi: hi0 });
    }
    Ok(root)
}

/// Two-mode kernel with common value `a_target`, using
/// `theta_k1 in (2pi, 5pi/2)` and `theta_k2 in (pi, 3pi/2)`.
pub fn find_two_dim_seed(k1: u32, k2: u32, a_target: f64) -> Result<CurvePoint> {
    check_pair(k1, k2)?;
    if !(a_target > 1.0) {
        return Err(Error::InvalidParams(format!("a must exceed 1, got {a_target}")));
    }
    let th1 = branch_root(a_target, 2)?;
    let th2 = branch_root(a_target, 1)?;
    let (q1, q2) = (k2f(k1), k2f(k2));
    let t = (q2 * th1 * th1 - q1 * th2 * th2) / (q2 - q1);
    let xi = (th1 * th1 - th2 * th2) / (q2 - q1);
    Ok(CurvePoint { xi, t, a: th1 / th1.tan(), k1, k2 })
}

/// Newton correction of `t` at fixed `xi` onto `f = 0`.
fn correct(k1: u32, k2: u32, mut t: f64, xi: f64) -> Result<CurvePoint> {
    for _ in 0..NEWTON_MAX_ITER {
        let f = curve_residual(k1, k2, t, xi)?;
        let (s1, s2) = (theta_sq(t, xi, k1), theta_sq(t, xi, k2));
        let ft = dcot_dsq(s1.sqrt()) - dcot_dsq(s2.sqrt());
        let dt = f / ft;
        t -= dt;
        if dt.abs() <= NEWTON_TOL * t.abs().max(1.0) {
            let a = theta_cot(theta_sq(t, xi, k1).sqrt())?;
            return Ok(CurvePoint { xi, t, a, k1, k2 });
        }
    }
    Err(Error::CurveEscape { xi, reason: "Newton corrector did not converge".into() })
}

fn check_admissible(p: &CurvePoint) -> Result<()> {
    let (_, th2) = p.thetas();
    if !(p.a > 1.0) {
        return Err(Error::CurveEscape { xi: p.xi, reason: format!("a = {} left (1, inf)", p.a) });
    }
    if !(th2 > PI) {
        return Err(Error::CurveEscape { xi: p.xi, reason: "theta_k2 dropped below pi".into() });
    }
    Ok(())
}

/// One RK4 predictor step of size `h` followed by Newton correction.
fn step(p: &CurvePoint, h: f64) -> Result<CurvePoint> {
    let (k1, k2) = (p.k1, p.k2);
    let slope = |t: f64, xi: f64| curve_slope(k1, k2, t, xi);
    let s1 = slope(p.t, p.xi)?;
    let s2 = slope(p.t + 0.5 * h * s1, p.xi + 0.5 * h)?;
    let s3 = slope(p.t + 0.5 * h * s2, p.xi + 0.5 * h)?;
    let s4 = slope(p.t + h * s3, p.xi + h)?;
    let t_pred = p.t + h / 6.0 * (s1 + 2.0 * s2 + 2.0 * s3 + s4);
    let next = correct(k1, k2, t_pred, p.xi + h)?;
    check_admissible(&next)?;
    Ok(next)
}

/// Follows the analytic branch through `seed` to `xi_target`.
pub fn trace_curve(k1: u32, k2: u32, seed: &CurvePoint, xi_target: f64) -> Result<CurvePoint> {
    check_pair(k1, k2)?;
    let span = xi_target - seed.xi;
    if span == 0.0 {
        return Ok(*seed);
    }
    let n = (span.abs() / TRACE_STEP).ceil().max(1.0) as usize;
    let h = span / n as f64;
    let mut p = CurvePoint { k1, k2, ..*seed };
    for i in 0..n {
        p = step(&p, h)?;
        if i + 1 == n {
            // land exactly on the target abscissa
            p = correct(k1, k2, p.t, xi_target)?;
            check_admissible(&p)?;
        }
    }
    Ok(p)
}

/// `n_steps` predictor-corrector steps of size `dxi`, including the seed.
pub fn trace_path(seed: &CurvePoint, dxi: f64, n_steps: usize) -> Result<Vec<CurvePoint>> {
    check_pair(seed.k1, seed.k2)?;
    let mut out = Vec::with_capacity(n_steps + 1);
    out.push(*seed);
    let mut p = *seed;
    for _ in 0..n_steps {
        p = step(&p, dxi)?;
        out.push(p);
    }
    Ok(out)
}

/// How a three-mode kernel was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    ClosedForm,
    Continuation,
}

/// Outcome of the exhaustive scan over integer wavenumbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionCheck {
    pub k_max: u32,
    /// Every `k` in `1..=k_max` whose residual is below `KERNEL_TOL`.
    pub kernel_modes: Vec<u32>,
    /// Smallest `|residual|` over modes outside the kernel.
    pub min_off_kernel_residual: f64,
    pub closest_off_kernel_mode: u32,
}

/// A certified three-dimensional bifurcation point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub wavenumbers: [u32; 3],
    pub params: Params,
    pub thetas: [ThetaValue; 3],
    pub a: f64,
    pub residuals: [f64; 3],
    pub exact_dimension: Option<u32>,
    pub dimension_check: Option<DimensionCheck>,
    pub construction: Construction,
}

impl KernelSpec {
    fn build(ks: [u32; 3], t: f64, xi: f64, a: f64, lambda: f64, construction: Construction) -> Result<Self> {
        let th0 = t.sqrt();
        let mu = recover_mu(a, th0, lambda)?;
        let params = Params::new(mu, -t, lambda, xi)?;
        let thetas = ks.map(|k| theta(&params, k));
        let mut residuals = [0.0; 3];
        for (r, &k) in residuals.iter_mut().zip(&ks) {
            *r = kernel_condition_residual(&params, k)?;
        }
        let dimension_check = certify_dimension(&params, ks, a);
        let exact_dimension = Some(dimension_check.kernel_modes.len() as u32);
        Ok(KernelSpec {
            wavenumbers: ks,
            params,
            thetas,
            a,
            residuals,
            exact_dimension,
            dimension_check: Some(dimension_check),
            construction,
        })
    }

    /// Kernel residuals below tolerance, expected regimes, and `a > 1`.
    pub fn is_certified(&self) -> bool {
        self.residuals.iter().all(|r| r.abs() < KERNEL_TOL)
            && self.thetas[0].regime == Regime::Trigonometric
            && self.thetas[1].regime == Regime::Trigonometric
            && self.thetas[2].regime == Regime::Hyperbolic
            && self.a > 1.0
    }
}

/// Options for [`attach_third_mode_with`].
#[derive(Debug, Clone, Copy)]
pub struct AttachOptions {
    pub lambda: f64,
    /// Use curve continuation even when the closed-form construction applies.
    pub force_continuation: bool,
}

impl Default for AttachOptions {
    fn default() -> Self {
        AttachOptions { lambda: FRAC_PI_2, force_continuation: false }
    }
}

/// Whether `(k3^2 - k2^2) / (k3^2 - k1^2) > 9/16`, in exact integer arithmetic.
pub fn ratio_condition(k1: u32, k2: u32, k3: u32) -> bool {
    let (q1, q2, q3) = (u64::from(k1).pow(2), u64::from(k2).pow(2), u64::from(k3).pow(2));
    16 * (q3 - q2) > 9 * (q3 - q1)
}

/// Three-mode kernel for `k1 < k2 < k3`, with `lambda = pi/2`.
pub fn attach_third_mode(k1: u32, k2: u32, k3: u32) -> Result<KernelSpec> {
    attach_third_mode_with(k1, k2, k3, &AttachOptions::default())
}

pub fn attach_third_mode_with(k1: u32, k2: u32, k3: u32, opts: &AttachOptions) -> Result<KernelSpec> {
    check_pair(k1, k2)?;
    if k3 <= k2 {
        return Err(Error::InvalidWavenumbers(format!("need k3 > k2, got ({k1}, {k2}, {k3})")));
    }
    let (t, xi, a, construction) = if ratio_condition(k1, k2, k3) && !opts.force_continuation {
        let (t, xi, a) = scan_closed_form(k1, k2, k3)?;
        (t, xi, a, Construction::ClosedForm)
    } else {
        let p = continue_to_third_mode(k1, k2, k3)?;
        (p.t, p.xi, p.a, Construction::Continuation)
    };
    let spec = KernelSpec::build([k1, k2, k3], t, xi, a, opts.lambda, construction)?;
    if !spec.is_certified() {
        return Err(Error::InvalidWavenumbers(format!(
            "kernel for ({k1}, {k2}, {k3}) failed certification: residuals {:?}",
            spec.residuals
        )));
    }
    Ok(spec)
}

/// `theta_k3 coth(theta_k3) - a` on a curve point, `None` outside the hyperbolic regime.
fn third_mode_gap(p: &CurvePoint, k3: u32) -> Option<f64> {
    let sq = p.xi * k2f(k3) - p.t;
    (sq > 0.0).then(|| theta_coth(sq.sqrt()) - p.a)
}

fn scan_closed_form(k1: u32, k2: u32, k3: u32) -> Result<(f64, f64, f64)> {
    let gap = |a: f64| -> Result<Option<f64>> {
        let p = find_two_dim_seed(k1, k2, a)?;
        Ok(third_mode_gap(&p, k3).map(|g| g + p.a - a))
    };
    let ratio = SCAN_HI / SCAN_LO;
    let grid: Vec<f64> =
        (0..SCAN_POINTS).map(|i| SCAN_LO * ratio.powf(i as f64 / (SCAN_POINTS - 1) as f64)).collect();
    let mut prev: Option<(f64, f64)> = None;
    for &a in &grid {
        let Some(g) = gap(a)? else {
            prev = None;
            continue;
        };
        if let Some((a_prev, g_prev)) = prev {
            if g_prev.signum() != g.signum() || g == 0.0 {
                let (mut lo, mut hi, mut g_lo) = (a_prev, a, g_prev);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if hi - lo <= 1e-14 * hi || mid <= lo || mid >= hi {
                        break;
                    }
                    let Some(gm) = gap(mid)? else { break };
                    if gm.signum() == g_lo.signum() {
                        lo = mid;
                        g_lo = gm;
                    } else {
                        hi = mid;
                    }
                }
                let a_star = 0.5 * (lo + hi);
                let p = find_two_dim_seed(k1, k2, a_star)?;
                return Ok((p.t, p.xi, p.a));
            }
        }
        prev = Some((a, g));
    }
    Err(Error::NoThirdMode { k1, k2, k3 })
}

fn continue_to_third_mode(k1: u32, k2: u32, k3: u32) -> Result<CurvePoint> {
    // seed where the hyperbolic mode overshoots a
    let seed = [1.01, 1.05, 1.2, 1.5, 2.0, 3.0, 5.0]
        .iter()
        .filter_map(|&a| find_two_dim_seed(k1, k2, a).ok())
        .find(|p| third_mode_gap(p, k3).is_some_and(|g| g > 0.0))
        .ok_or(Error::NoThirdMode { k1, k2, k3 })?;

    let mut p = seed;
    let mut h = -TRACE_STEP;
    let mut g_prev = third_mode_gap(&p, k3).unwrap();
    while h.abs() > 1e-12 {
        let next = match step(&p, h) {
            Ok(n) => n,
            Err(Error::CurveEscape { .. }) | Err(Error::Pole { .. }) => {
                h *= 0.5;
                continue;
            }
            Err(e) => return Err(e),
        };
        let Some(g) = third_mode_gap(&next, k3) else {
            h *= 0.5;
            continue;
        };
        if g.signum() != g_prev.signum() {
            // bisection in xi between p and next
            let (mut lo, mut hi) = (p, next);
            for _ in 0..200 {
                let mid_xi = 0.5 * (lo.xi + hi.xi);
                if (hi.xi - lo.xi).abs() <= 1e-15 * mid_xi {
                    break;
                }
                let mid = trace_curve(k1, k2, &lo, mid_xi)?;
                let gm = third_mode_gap(&mid, k3).ok_or(Error::NoThirdMode { k1, k2, k3 })?;
                if gm.signum() == g_prev.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(lo);
        }
        g_prev = g;
        p = next;
    }
    Err(Error::NoThirdMode { k1, k2, k3 })
}

/// Scans every integer `1..=k_max` for further kernel modes, with
/// `k_max = ceil(sqrt((t + a^2) / xi)) + 64`; `a` bounds any hyperbolic
/// solution since `theta coth theta > theta`.
pub fn certify_dimension(params: &Params, triple: [u32; 3], a: f64) -> DimensionCheck {
    let t = params.t();
    let k_max = ((t + a * a) / params.xi).sqrt().ceil() as u32 + 64;
    let mut kernel_modes = Vec::new();
    let mut min_off = f64::INFINITY;
    let mut closest = 0;
    for k in 1..=k_max {
        let r = kernel_condition_residual(params, k).map(f64::abs).unwrap_or(f64::INFINITY);
        if r < KERNEL_TOL {
            kernel_modes.push(k);
        } else if r < min_off && !triple.contains(&k) {
            min_off = r;
            closest = k;
        }
    }
    DimensionCheck { k_max, kernel_modes, min_off_kernel_residual: min_off, closest_off_kernel_mode: closest }
}

/// Sign information for the transversality determinant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransversalityReport {
    /// `f(k_j)`, the coefficient of the alpha-derivative pairing.
    pub f_values: [f64; 3],
    pub ftilde_values: [f64; 3],
    /// `(k2^2 - k1^2) ft(k3) + (k1^2 - k3^2) ft(k2) + (k3^2 - k2^2) ft(k1)`.
    pub bracketed_sum: f64,
    pub nonzero: bool,
    pub margin: f64,
    /// `ft(k3) < ft(k1) < ft(k2) < 0`.
    pub ordering_holds: bool,
    /// `sin^2(theta_k1) > sin^2(theta_k2)`.
    pub sin_squared_ordering: bool,
}

/// `+-* (pi/2) (theta - cos*(theta) sin*(theta)) / theta^3`, continuous at 0.
pub fn f_value(tv: &ThetaValue) -> f64 {
    let th = tv.theta;
    match tv.regime {
        Regime::Degenerate => -PI / 3.0,
        _ if th < 1e-3 => {
            let corr = if tv.regime == Regime::Trigonometric { -1.0 } else { 1.0 };
            -FRAC_PI_2 * (2.0 / 3.0 + corr * 2.0 * th * th / 15.0)
        }
        r => r.sign() * FRAC_PI_2 * (th - cos_star(r, th) * sin_star(r, th)) / th.powi(3),
    }
}

/// `a sin*(theta)^2 / (+-*(a - 1) - sin*(theta)^2)`.
pub fn ftilde_value(tv: &ThetaValue, a: f64) -> f64 {
    match tv.regime {
        Regime::Degenerate => -1.5,
        r => {
            let s2 = sin_star(r, tv.theta).powi(2);
            a * s2 / (r.sign() * (a - 1.0) - s2)
        }
    }
}

pub fn transversality(spec: &KernelSpec) -> TransversalityReport {
    let [k1, k2, k3] = spec.wavenumbers.map(k2f);
    let f_values = spec.thetas.map(|tv| f_value(&tv));
    let ftilde_values = spec.thetas.map(|tv| ftilde_value(&tv, spec.a));
    let [ft1, ft2, ft3] = ftilde_values;
    let bracketed_sum = (k2 - k1) * ft3 + (k1 - k3) * ft2 + (k3 - k2) * ft1;
    TransversalityReport {
        f_values,
        ftilde_values,
        bracketed_sum,
        nonzero: bracketed_sum.abs() > TRANSVERSALITY_MARGIN,
        margin: TRANSVERSALITY_MARGIN,
        ordering_holds: ft3 < ft1 && ft1 < ft2 && ft2 < 0.0,
        sin_squared_ordering: spec.thetas[0].sin_star().powi(2) > spec.thetas[1].sin_star().powi(2),
    }
}

/// Right-hand side of the bifurcation condition at the spec's parameters.
pub fn spec_rhs(spec: &KernelSpec) -> f64 {
    bifurcation_rhs(&spec.params)
}
