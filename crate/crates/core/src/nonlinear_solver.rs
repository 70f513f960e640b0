//! Small-amplitude trimodal waves by Newton iteration.
//!
//! For amplitudes `t` the unknowns are the full discrete field `(eta, phi)`
//! and the free parameters among `(mu, alpha, xi)`, with `lambda` frozen at the
//! bifurcation value. The equations are `F(w, params) = 0` together with the
//! three pins `c_j(w) = t_j`, where `c_j` are the kernel amplitudes measured at
//! the bifurcation point (see [`kernel_amplitudes`]).
//!
//! When some `t_j = 0` and the active modes share a divisor that `k_j` lacks,
//! mode `k_j` decouples from the solution: its pin holds identically and one
//! parameter is frozen. The resulting overdetermined system is solved in the
//! least-squares sense.

use faer::prelude::*;
use faer::Mat;
use log::{debug, warn};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::dispersion::Params;
use crate::error::{Error, Result};
use crate::kernel_finder::KernelSpec;
use crate::laminar::laminar_constants;
use crate::modal_classes::{classify, gcd, region_contains, Case};
use crate::operator::{
    eval_F, kernel_amplitudes, pointwise_on_grid, Grid, KernelFunction, WaveField,
};

/// Residual below which a point counts as converged.
pub const ACCEPT_RESIDUAL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub max_iter: usize,
    /// Newton stops once the max-norm residual falls below this.
    pub tol: f64,
    /// Cone parameter for the admissibility flag.
    pub delta: f64,
    pub t_max: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { max_iter: 50, tol: 1e-11, delta: 0.05, t_max: 1e-2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FreeParam {
    Mu,
    Alpha,
    Xi,
}

impl FreeParam {
    const ORDER: [FreeParam; 3] = [FreeParam::Mu, FreeParam::Alpha, FreeParam::Xi];

    fn get(self, p: &Params) -> f64 {
        match self {
            FreeParam::Mu => p.mu,
            FreeParam::Alpha => p.alpha,
            FreeParam::Xi => p.xi,
        }
    }

    fn set(self, p: &mut Params, v: f64) {
        match self {
            FreeParam::Mu => p.mu = v,
            FreeParam::Alpha => p.alpha = v,
            FreeParam::Xi => p.xi = v,
        }
    }
}

/// A converged point on the solution sheet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub wavenumbers: [u32; 3],
    pub t: [f64; 3],
    pub field: WaveField,
    pub params: Params,
    pub residual_norm: f64,
    pub newton_iters: usize,
    pub case: Case,
    /// Whether `t` lies in the region of the wavenumbers' modal class.
    pub admissible: bool,
    pub free_params: Vec<FreeParam>,
}

/// `sum_j t_j T phi_j` at the bifurcation point.
pub fn linear_part(spec: &KernelSpec, t: [f64; 3], grid: &Grid) -> Result<WaveField> {
    let mut w = WaveField::zeros(grid);
    for (k, tj) in spec.wavenumbers.iter().zip(t) {
        let kf = KernelFunction::new(&spec.params, *k, grid)?;
        w = w.axpy(tj, &kf.transformed(&spec.params, grid)?);
    }
    Ok(w)
}

/// Modes whose amplitude is zero and which the active modes cannot excite.
pub fn decoupled_modes(ks: [u32; 3], t: [f64; 3]) -> [bool; 3] {
    let g = ks.iter().zip(t).filter(|(_, tj)| *tj != 0.0).fold(0u64, |g, (k, _)| gcd(g, u64::from(*k)));
    let mut out = [false; 3];
    if g == 0 {
        return out;
    }
    for j in 0..3 {
        out[j] = t[j] == 0.0 && u64::from(ks[j]) % g != 0;
    }
    out
}

struct Problem<'a> {
    grid: &'a Grid,
    star: Params,
    t: [f64; 3],
    kernel: Vec<KernelFunction>,
    /// Linear pin functionals: (mode, eta coefficient, phi coefficients per node).
    pins: Vec<(usize, f64, Vec<f64>)>,
    free: Vec<FreeParam>,
}

impl<'a> Problem<'a> {
    fn new(spec: &KernelSpec, t: [f64; 3], grid: &'a Grid) -> Result<Self> {
        let star = spec.params;
        let kernel: Vec<KernelFunction> =
            spec.wavenumbers.iter().map(|&k| KernelFunction::new(&star, k, grid)).collect::<Result<_>>()?;
        let flow = laminar_constants(&star);
        let w = grid.s_weights();
        let pins = kernel
            .iter()
            .map(|kf| {
                let norm2 = PI * (kf.eta_part * kf.eta_part
                    + kf.values.iter().zip(w).map(|(v, wi)| wi * v * v).sum::<f64>());
                let shear: f64 = grid
                    .s_nodes
                    .iter()
                    .zip(w)
                    .zip(&kf.values)
                    .map(|((&s, wi), v)| wi * s * flow.psi0_s(s) * v)
                    .sum();
                let eta_coeff = PI * (kf.eta_part - shear) / norm2;
                let phi_coeffs: Vec<f64> = kf.values.iter().zip(w).map(|(v, wi)| PI * wi * v / norm2).collect();
                (kf.k as usize, eta_coeff, phi_coeffs)
            })
            .collect();
        let n_free = 3 - decoupled_modes(spec.wavenumbers, t).iter().filter(|d| **d).count();
        Ok(Problem { grid, star, t, kernel, pins, free: FreeParam::ORDER[..n_free].to_vec() })
    }

    fn n_int(&self) -> usize {
        self.grid.n_s - 1
    }

    fn n_field(&self) -> usize {
        self.grid.n_modes * self.grid.n_s
    }

    fn n_rows(&self) -> usize {
        self.n_field() + 3
    }

    fn n_cols(&self) -> usize {
        self.n_field() + self.free.len()
    }

    fn pack(&self, field: &WaveField, params: &Params) -> Vec<f64> {
        let (nm, ni, n) = (self.grid.n_modes, self.n_int(), self.grid.n_nodes());
        let mut x = vec![0.0; self.n_cols()];
        x[..nm].copy_from_slice(&field.eta_hat);
        for j in 0..nm {
            x[nm + j * ni..nm + (j + 1) * ni].copy_from_slice(&field.phi[j * n + 1..j * n + n - 1]);
        }
        for (c, f) in self.free.iter().enumerate() {
            x[self.n_field() + c] = f.get(params);
        }
        x
    }

    fn unpack(&self, x: &[f64]) -> (WaveField, Params) {
        let (nm, ni, n) = (self.grid.n_modes, self.n_int(), self.grid.n_nodes());
        let mut field = WaveField::zeros(self.grid);
        field.eta_hat.copy_from_slice(&x[..nm]);
        for j in 0..nm {
            field.phi[j * n + 1..j * n + n - 1].copy_from_slice(&x[nm + j * ni..nm + (j + 1) * ni]);
        }
        let mut params = self.star;
        for (c, f) in self.free.iter().enumerate() {
            f.set(&mut params, x[self.n_field() + c]);
        }
        (field, params)
    }

    fn flatten_residual(&self, r: &WaveField, field: &WaveField) -> Result<Vec<f64>> {
        let (nm, ni, n) = (self.grid.n_modes, self.n_int(), self.grid.n_nodes());
        let mut out = vec![0.0; self.n_rows()];
        out[..nm].copy_from_slice(&r.eta_hat);
        for j in 0..nm {
            out[nm + j * ni..nm + (j + 1) * ni].copy_from_slice(&r.phi[j * n + 1..j * n + n - 1]);
        }
        let c = kernel_amplitudes(field, &self.kernel, &self.star, self.grid)?;
        for j in 0..3 {
            out[self.n_field() + j] = c[j] - self.t[j];
        }
        Ok(out)
    }

    fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (field, params) = self.unpack(x);
        params.validate()?;
        let r = eval_F(&field, &params, self.grid)?;
        self.flatten_residual(&r, &field)
    }

    /// Analytic field block, pin rows, and centred differences for parameters.
    fn jacobian(&self, x: &[f64]) -> Result<Mat<f64>> {
        let g = self.grid;
        let (nm, ni, n, nq) = (g.n_modes, self.n_int(), g.n_nodes(), g.n_quad());
        let (field, params) = self.unpack(x);
        let pw = pointwise_on_grid(&field, &params, g, true)?;
        let p = pw.partials.as_ref().expect("partials requested");
        let (proj, c0, c1, c2) = (g.projection(), g.cos_table(), g.sin_deriv_table(), g.cos_deriv2_table());
        let (d1, d2) = (g.d1(), g.d2());
        let mut jac = Mat::<f64>::zeros(self.n_rows(), self.n_cols());

        // P diag(v) C, with v read at stride `stride` from `offset`
        let pdc = |v: &[f64], offset: usize, stride: usize, table: &[f64], out: &mut [f64]| {
            let mut row = vec![0.0; nm];
            for jp in 0..nm {
                row.iter_mut().for_each(|r| *r = 0.0);
                for m in 0..nq {
                    let w = proj[jp * nq + m] * v[m * stride + offset];
                    if w != 0.0 {
                        for (r, c) in row.iter_mut().zip(&table[m * nm..(m + 1) * nm]) {
                            *r += w * c;
                        }
                    }
                }
                for (j, r) in row.iter().enumerate() {
                    out[jp * nm + j] += r;
                }
            }
        };
        let phi_col = |j: usize, l: usize| nm + j * ni + (l - 1);

        let mut g1 = vec![0.0; nm * nm];
        let mut g2 = vec![0.0; nm * nm];
        let mut h = vec![0.0; nm * nm];
        for i in 1..n - 1 {
            for b in [&mut g1, &mut g2, &mut h] {
                b.iter_mut().for_each(|v| *v = 0.0);
            }
            pdc(&p.a, i, n, c0, &mut g1);
            pdc(&p.bs, i, n, c1, &mut g1);
            pdc(&p.c, i, n, c0, &mut g2);
            pdc(&p.eqq, i, n, c2, &mut h);
            pdc(&p.eq, i, n, c1, &mut h);
            pdc(&p.eta, i, n, c0, &mut h);
            let row = |jp: usize| nm + jp * ni + (i - 1);
            for l in 1..n - 1 {
                let (a1, a2) = (d1[i * n + l], d2[i * n + l]);
                if a1 == 0.0 && a2 == 0.0 && l != i {
                    continue;
                }
                for j in 0..nm {
                    let col = jac.col_as_slice_mut(phi_col(j, l));
                    for jp in 0..nm {
                        col[row(jp)] += a1 * g1[jp * nm + j] + a2 * g2[jp * nm + j];
                    }
                }
            }
            for j in 0..nm {
                let jj = (j * j) as f64;
                jac.col_as_slice_mut(phi_col(j, i))[row(j)] += -p.bq * jj + p.phi;
                let col = jac.col_as_slice_mut(j);
                for jp in 0..nm {
                    col[row(jp)] += h[jp * nm + j];
                }
            }
        }

        // surface rows
        g1.iter_mut().for_each(|v| *v = 0.0);
        h.iter_mut().for_each(|v| *v = 0.0);
        pdc(&p.s_a, 0, 1, c0, &mut g1);
        pdc(&p.s_eq, 0, 1, c1, &mut h);
        pdc(&p.s_eta, 0, 1, c0, &mut h);
        for l in 1..n - 1 {
            let a1 = d1[(n - 1) * n + l];
            if a1 == 0.0 {
                continue;
            }
            for j in 0..nm {
                let col = jac.col_as_slice_mut(phi_col(j, l));
                for jp in 0..nm {
                    col[jp] += a1 * g1[jp * nm + j];
                }
            }
        }
        for j in 0..nm {
            let col = jac.col_as_slice_mut(j);
            for jp in 0..nm {
                col[jp] += h[jp * nm + j];
            }
        }

        // pins
        let nf = self.n_field();
        for (r, (mode, eta_c, phi_c)) in self.pins.iter().enumerate() {
            jac.col_as_slice_mut(*mode)[nf + r] = *eta_c;
            for l in 1..n - 1 {
                jac.col_as_slice_mut(phi_col(*mode, l))[nf + r] = phi_c[l];
            }
        }

        // parameters
        for (c, f) in self.free.iter().enumerate() {
            let v = f.get(&params);
            let step = 1e-6 * v.abs().max(1e-8);
            let mut pp = params;
            let mut pm = params;
            f.set(&mut pp, v + step);
            f.set(&mut pm, v - step);
            let rp = eval_F(&field, &pp, g)?;
            let rm = eval_F(&field, &pm, g)?;
            let col = jac.col_as_slice_mut(nf + c);
            for j in 0..nm {
                col[j] = (rp.eta_hat[j] - rm.eta_hat[j]) / (2.0 * step);
                for i in 1..n - 1 {
                    col[nm + j * ni + i - 1] = (rp.phi[j * n + i] - rm.phi[j * n + i]) / (2.0 * step);
                }
            }
        }
        Ok(jac)
    }

    fn newton_step(&self, x: &[f64], r: &[f64]) -> Result<Vec<f64>> {
        let jac = self.jacobian(x)?;
        let rhs = Mat::<f64>::from_fn(r.len(), 1, |i, _| -r[i]);
        let sol = if jac.nrows() == jac.ncols() {
            jac.partial_piv_lu().solve(&rhs)
        } else {
            jac.qr().solve_lstsq(&rhs)
        };
        let dx: Vec<f64> = (0..jac.ncols()).map(|i| sol[(i, 0)]).collect();
        if dx.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular("Newton system is singular".into()));
        }
        Ok(dx)
    }
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solves for the branch point with kernel amplitudes `t`.
pub fn solve_branch_point(spec: &KernelSpec, t: [f64; 3], grid: &Grid, opts: &SolverOptions) -> Result<BranchPoint> {
    solve_with_guess(spec, t, grid, opts, None)
}

/// As [`solve_branch_point`], starting from `guess` instead of the linear part.
pub fn solve_with_guess(
    spec: &KernelSpec,
    t: [f64; 3],
    grid: &Grid,
    opts: &SolverOptions,
    guess: Option<(&WaveField, &Params)>,
) -> Result<BranchPoint> {
    let k3 = spec.wavenumbers[2] as usize;
    if grid.n_modes < 4 * k3 {
        return Err(Error::GridMismatch(format!(
            "need at least {} modes for k3 = {k3}, got {}",
            4 * k3,
            grid.n_modes
        )));
    }
    let norm_t = t.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !norm_t.is_finite() || norm_t > opts.t_max {
        return Err(Error::InvalidParams(format!("|t| = {norm_t} exceeds t_max = {}", opts.t_max)));
    }
    let class = classify(spec.wavenumbers.map(u64::from))?;
    let admissible = region_contains(&class.region(opts.delta), t);
    if !admissible {
        warn!(
            "{}",
            Error::AdmissibilityViolation { t, case: class.case.to_string() }
        );
    }
    let problem = Problem::new(spec, t, grid)?;
    let point = |field: WaveField, params: Params, residual_norm: f64, newton_iters: usize| BranchPoint {
        wavenumbers: spec.wavenumbers,
        t,
        field,
        params,
        residual_norm,
        newton_iters,
        case: class.case,
        admissible,
        free_params: problem.free.clone(),
    };
    if norm_t == 0.0 {
        return Ok(point(WaveField::zeros(grid), spec.params, 0.0, 0));
    }

    let mut x = match guess {
        Some((f, p)) => problem.pack(f, p),
        None => problem.pack(&linear_part(spec, t, grid)?, &spec.params),
    };
    let mut r = problem.residual(&x)?;
    let mut norm = max_norm(&r);
    for iter in 0..opts.max_iter {
        debug!("newton {iter}: residual {norm:e}");
        if norm < opts.tol {
            let (field, params) = problem.unpack(&x);
            return Ok(point(field, params, norm, iter));
        }
        let dx = problem.newton_step(&x, &r)?;
        let merit = l2(&r);
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + lambda * b).collect();
            if let Ok(rt) = problem.residual(&trial) {
                if l2(&rt) < (1.0 - 1e-4 * lambda) * merit {
                    x = trial;
                    r = rt;
                    norm = max_norm(&r);
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-6 {
                if norm < ACCEPT_RESIDUAL {
                    let (field, params) = problem.unpack(&x);
                    return Ok(point(field, params, norm, iter + 1));
                }
                return Err(Error::NewtonDivergence { iterations: iter + 1, residual: norm });
            }
        }
    }
    if norm < ACCEPT_RESIDUAL {
        let (field, params) = problem.unpack(&x);
        return Ok(point(field, params, norm, opts.max_iter));
    }
    Err(Error::NewtonDivergence { iterations: opts.max_iter, residual: norm })
}

/// Branch points along a ray in amplitude space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Continuation {
    pub points: Vec<BranchPoint>,
    /// Set when Newton failed before `n_steps` points were reached.
    pub truncated: bool,
    /// Largest `|t|` reached.
    pub max_amplitude: f64,
}

/// Solves at `t = j (h_max / n_steps) direction` for `j = 1..=n_steps`, each
/// step warm-started from the previous point.
pub fn continue_in_amplitude(
    spec: &KernelSpec,
    direction: [f64; 3],
    h_max: f64,
    n_steps: usize,
    grid: &Grid,
    opts: &SolverOptions,
) -> Result<Continuation> {
    let norm = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParams(format!("direction must be a unit vector, |d| = {norm}")));
    }
    if n_steps == 0 {
        return Err(Error::InvalidParams("n_steps must be at least 1".into()));
    }
    let dh = h_max / n_steps as f64;
    let mut points: Vec<BranchPoint> = Vec::with_capacity(n_steps);
    for j in 1..=n_steps {
        let t = direction.map(|d| d * dh * j as f64);
        let result = match points.last() {
            None => solve_branch_point(spec, t, grid, opts),
            Some(prev) => {
                let dt = [t[0] - prev.t[0], t[1] - prev.t[1], t[2] - prev.t[2]];
                let guess = prev.field.axpy(1.0, &linear_part(spec, dt, grid)?);
                solve_with_guess(spec, t, grid, opts, Some((&guess, &prev.params)))
            }
        };
        match result {
            Ok(bp) => points.push(bp),
            Err(Error::NewtonDivergence { .. }) | Err(Error::DomainCollapse { .. }) | Err(Error::Singular(_)) => {
                let max_amplitude = last_amplitude(&points);
                return Ok(Continuation { points, truncated: true, max_amplitude });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(Continuation { max_amplitude: last_amplitude(&points), points, truncated: false })
}

fn last_amplitude(points: &[BranchPoint]) -> f64 {
    points.last().map_or(0.0, |p| p.t.iter().map(|x| x * x).sum::<f64>().sqrt())
}

/// `(q_i, 1 + eta(q_i))` at `n_samples` equispaced points of `[-pi, pi]`.
pub fn surface_profile(bp: &BranchPoint, n_samples: usize) -> Vec<(f64, f64)> {
    let denom = (n_samples.max(2) - 1) as f64;
    (0..n_samples)
        .map(|i| {
            let q = PI * (2.0 * i as f64 - denom) / denom;
            (q, 1.0 + bp.field.eta_at(q))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel_finder::attach_third_mode;
    use crate::operator::norm_Y;

    #[test]
    fn jacobian_matches_differences() {
        let spec = attach_third_mode(1, 2, 3).unwrap();
        let grid = Grid::new(12, 12).unwrap();
        let t = [2e-4, -1e-4, 1.5e-4];
        let problem = Problem::new(&spec, t, &grid).unwrap();
        let mut x = problem.pack(&linear_part(&spec, t, &grid).unwrap(), &spec.params);
        // move off the linear part so every partial is exercised
        for (i, v) in x.iter_mut().enumerate().take(problem.n_field()) {
            *v += 1e-3 * ((i * 7 % 11) as f64 / 11.0 - 0.5);
        }
        let jac = problem.jacobian(&x).unwrap();
        let mut worst: f64 = 0.0;
        for c in 0..problem.n_cols() {
            let h = 1e-6 * x[c].abs().max(1e-2);
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[c] += h;
            xm[c] -= h;
            let rp = problem.residual(&xp).unwrap();
            let rm = problem.residual(&xm).unwrap();
            for r in 0..problem.n_rows() {
                let fd = (rp[r] - rm[r]) / (2.0 * h);
                let err = (fd - jac[(r, c)]).abs() / (1.0 + fd.abs());
                if err > worst {
                    worst = err;
                    if err > 1e-5 {
                        panic!("row {r} col {c}: fd {fd} analytic {}", jac[(r, c)]);
                    }
                }
            }
        }
    }

    fn small() -> (KernelSpec, Grid) {
        (attach_third_mode(1, 2, 3).unwrap(), Grid::new(12, 24).unwrap())
    }

    #[test]
    fn zero_amplitude_is_laminar() {
        let (spec, grid) = small();
        let bp = solve_branch_point(&spec, [0.0; 3], &grid, &SolverOptions::default()).unwrap();
        assert!(bp.field.is_zero());
        assert_eq!(bp.params, spec.params);
        assert_eq!(bp.newton_iters, 0);
    }

    #[test]
    fn converged_point_is_pinned_and_solves() {
        let (spec, grid) = small();
        let t = [1e-4, -5e-5, 8e-5];
        let bp = solve_branch_point(&spec, t, &grid, &SolverOptions::default()).unwrap();
        assert!(bp.residual_norm < 1e-8 && bp.newton_iters <= 10);
        let r = eval_F(&bp.field, &bp.params, &grid).unwrap();
        assert!(r.max_abs() < 1e-8);
        let kernel: Vec<KernelFunction> =
            spec.wavenumbers.iter().map(|&k| KernelFunction::new(&spec.params, k, &grid).unwrap()).collect();
        let c = kernel_amplitudes(&bp.field, &kernel, &spec.params, &grid).unwrap();
        for j in 0..3 {
            assert!((c[j] - t[j]).abs() < 1e-12, "{c:?}");
        }
        assert_eq!(bp.params.lambda, spec.params.lambda);
    }

    #[test]
    fn remainder_is_quadratic() {
        let (spec, grid) = small();
        let dev = |h: f64| {
            let t = [h, h, h];
            let bp = solve_branch_point(&spec, t, &grid, &SolverOptions::default()).unwrap();
            norm_Y(&bp.field.axpy(-1.0, &linear_part(&spec, t, &grid).unwrap()), &grid).unwrap()
        };
        let ratio = dev(1e-4) / dev(5e-5);
        assert!((3.0..5.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn decoupled_mode_freezes_a_parameter() {
        let spec = attach_third_mode(6, 10, 15).unwrap();
        assert_eq!(decoupled_modes(spec.wavenumbers, [1.0, 1.0, 0.0]), [false, false, true]);
        assert_eq!(decoupled_modes(spec.wavenumbers, [1.0, 1.0, 1.0]), [false; 3]);
        // modes 4 and 5 generate every integer, so a silent mode 2 is still forced
        assert_eq!(decoupled_modes([2, 4, 5], [0.0, 1.0, 1.0]), [false, false, false]);
    }

    #[test]
    fn rejects_bad_requests() {
        let (spec, grid) = small();
        let opts = SolverOptions::default();
        assert!(matches!(solve_branch_point(&spec, [0.1, 0.0, 0.0], &grid, &opts), Err(Error::InvalidParams(_))));
        let coarse = Grid::new(8, 24).unwrap();
        assert!(matches!(solve_branch_point(&spec, [1e-5; 3], &coarse, &opts), Err(Error::GridMismatch(_))));
        let dir = [1.0, 0.0, 0.0];
        assert!(continue_in_amplitude(&spec, [1.0, 1.0, 0.0], 1e-4, 2, &grid, &opts).is_err());
        assert!(continue_in_amplitude(&spec, dir, 1e-4, 0, &grid, &opts).is_err());
    }

    #[test]
    fn single_step_continuation_matches_solve() {
        let (spec, grid) = small();
        let opts = SolverOptions::default();
        let d = [0.6, 0.0, 0.8];
        let c = continue_in_amplitude(&spec, d, 1e-4, 1, &grid, &opts).unwrap();
        let bp = solve_branch_point(&spec, d.map(|x| x * 1e-4), &grid, &opts).unwrap();
        assert_eq!(c.points.len(), 1);
        assert!(!c.truncated);
        assert_eq!(c.points[0].field, bp.field);
    }

    #[test]
    fn profile_is_symmetric() {
        let (spec, grid) = small();
        let bp = solve_branch_point(&spec, [1e-4, 0.0, 1e-4], &grid, &SolverOptions::default()).unwrap();
        let prof = surface_profile(&bp, 65);
        for i in 0..65 {
            assert!((prof[i].1 - prof[64 - i].1).abs() < 1e-14);
            assert!((prof[i].0 + prof[64 - i].0).abs() < 1e-14);
        }
    }
}
