//! Discretised flattened water-wave operator.
//!
//! Fields are even and 2pi-periodic in `q`, stored as cosine coefficients
//! `j = 0..n_modes`. The vertical variable `s in [0, 1]` is sampled at
//! `n_s + 1` nodes. A disturbance `phi(q, s)` is stored as the array of
//! coefficient profiles `phi[j * (n_s + 1) + i] = phi_j(s_i)`.
//!
//! Nonlinear terms are formed pointwise on `M = ceil(3 n_modes / 2)` cosine
//! collocation points `q_m = pi (m + 1/2) / M` and projected back, which
//! removes aliasing from quadratic interactions.

use faer::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::dispersion::{theta, Params, ThetaValue};
use crate::error::{Error, Result};
use crate::laminar::{laminar_constants, LaminarFlow};

/// Default order of the finite-difference vertical scheme.
pub const DEFAULT_FD_ORDER: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerticalScheme {
    /// Uniform nodes, centred stencils of `order + 1` points, widened and
    /// shifted one-sided stencils near the boundary.
    FiniteDifference { order: usize },
    /// Chebyshev-Gauss-Lobatto nodes with spectral differentiation.
    Chebyshev,
}

impl Default for VerticalScheme {
    fn default() -> Self {
        VerticalScheme::FiniteDifference { order: DEFAULT_FD_ORDER }
    }
}

/// Immutable discretisation data.
#[derive(Debug, Clone)]
pub struct Grid {
    pub n_modes: usize,
    pub n_s: usize,
    pub scheme: VerticalScheme,
    pub s_nodes: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
    s_weights: Vec<f64>,
    q_nodes: Vec<f64>,
    tables: CosTables,
    proj: Vec<f64>,
}

/// `cos(j q)`, `d/dq`, `d^2/dq^2` at a set of points, row-major `[point][mode]`.
#[derive(Debug, Clone)]
struct CosTables {
    c0: Vec<f64>,
    c1: Vec<f64>,
    c2: Vec<f64>,
}

impl CosTables {
    fn new(qs: &[f64], n_modes: usize) -> Self {
        let n = qs.len() * n_modes;
        let (mut c0, mut c1, mut c2) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for (m, &q) in qs.iter().enumerate() {
            for j in 0..n_modes {
                let jf = j as f64;
                let (s, c) = (jf * q).sin_cos();
                c0[m * n_modes + j] = c;
                c1[m * n_modes + j] = -jf * s;
                c2[m * n_modes + j] = -jf * jf * c;
            }
        }
        CosTables { c0, c1, c2 }
    }
}

/// Finite-difference weights for derivatives `0..=m` at `x0` (Fornberg).
pub fn fornberg_weights(x0: f64, xs: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

fn fd_matrices(s: &[f64], order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = s.len();
    let (mut d1, mut d2) = (vec![0.0; n * n], vec![0.0; n * n]);
    let half = order / 2;
    for i in 0..n {
        let (start, width) = if i >= half && i + half < n {
            (i - half, order + 1)
        } else {
            let width = (order + 2).min(n);
            let start = i.saturating_sub(width / 2).min(n - width);
            (start, width)
        };
        let w = fornberg_weights(s[i], &s[start..start + width], 2);
        for l in 0..width {
            d1[i * n + start + l] = w[1][l];
            d2[i * n + start + l] = w[2][l];
        }
    }
    (d1, d2)
}

fn cheb_matrices(n_s: usize) -> (Vec<f64>, Vec<f64>) {
    let n = n_s + 1;
    let x: Vec<f64> = (0..n).map(|i| (PI * i as f64 / n_s as f64).cos()).collect();
    let c = |i: usize| if i == 0 || i == n_s { 2.0 } else { 1.0 };
    let mut dx = vec![0.0; n * n];
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                let v = c(i) / c(j) * sign / (x[i] - x[j]);
                dx[i * n + j] = v;
                diag -= v;
            }
        }
        dx[i * n + i] = diag;
    }
    // s = (1 - x) / 2
    let d1: Vec<f64> = dx.iter().map(|v| -2.0 * v).collect();
    let mut d2 = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let a = d1[i * n + k];
            if a != 0.0 {
                for j in 0..n {
                    d2[i * n + j] += a * d1[k * n + j];
                }
            }
        }
    }
    (d1, d2)
}

fn clenshaw_curtis(n_s: usize) -> Vec<f64> {
    let n = n_s;
    let th: Vec<f64> = (0..=n).map(|i| PI * i as f64 / n as f64).collect();
    let mut w = vec![0.0; n + 1];
    let mut v = vec![1.0; n.saturating_sub(1)];
    let nf = n as f64;
    if n % 2 == 0 {
        w[0] = 1.0 / (nf * nf - 1.0);
        w[n] = w[0];
        for k in 1..n / 2 {
            let kf = k as f64;
            for (vi, t) in v.iter_mut().zip(&th[1..n]) {
                *vi -= 2.0 * (2.0 * kf * t).cos() / (4.0 * kf * kf - 1.0);
            }
        }
        for (vi, t) in v.iter_mut().zip(&th[1..n]) {
            *vi -= (nf * t).cos() / (nf * nf - 1.0);
        }
    } else {
        w[0] = 1.0 / (nf * nf);
        w[n] = w[0];
        for k in 1..=(n - 1) / 2 {
            let kf = k as f64;
            for (vi, t) in v.iter_mut().zip(&th[1..n]) {
                *vi -= 2.0 * (2.0 * kf * t).cos() / (4.0 * kf * kf - 1.0);
            }
        }
    }
    for (i, vi) in v.iter().enumerate() {
        w[i + 1] = 2.0 * vi / nf;
    }
    // from [-1, 1] to [0, 1]
    w.iter().map(|x| 0.5 * x).collect()
}

/// Trapezoid rule with end corrections on `r` nodes at each end, chosen so
/// that polynomials of degree below `2r` integrate exactly.
fn corrected_trapezoid(n_s: usize, r: usize) -> Vec<f64> {
    let h = 1.0 / n_s as f64;
    let mut w = vec![h; n_s + 1];
    w[0] = 0.5 * h;
    w[n_s] = 0.5 * h;
    let nodes: Vec<usize> = (0..r).chain(n_s + 1 - r..=n_s).collect();
    let m = nodes.len();
    // Legendre moments on [0, 1]: int P_d(2s - 1) ds = [d == 0]
    let legendre = |d: usize, x: f64| {
        let (mut p0, mut p1) = (1.0, x);
        if d == 0 {
            return p0;
        }
        for k in 1..d {
            let kf = k as f64;
            (p0, p1) = (p1, ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0));
        }
        p1
    };
    let a = faer::Mat::<f64>::from_fn(m, m, |d, c| legendre(d, 2.0 * nodes[c] as f64 * h - 1.0));
    let b = faer::Mat::<f64>::from_fn(m, 1, |d, _| {
        let exact = if d == 0 { 1.0 } else { 0.0 };
        let approx: f64 = (0..=n_s).map(|i| w[i] * legendre(d, 2.0 * i as f64 * h - 1.0)).sum();
        exact - approx
    });
    let corr = a.partial_piv_lu().solve(&b);
    for (c, &i) in nodes.iter().enumerate() {
        w[i] += corr[(c, 0)];
    }
    w
}

impl Grid {
    /// Default scheme: eighth-order finite differences.
    pub fn new(n_modes: usize, n_s: usize) -> Result<Self> {
        Self::with_scheme(n_modes, n_s, VerticalScheme::default())
    }

    pub fn with_scheme(n_modes: usize, n_s: usize, scheme: VerticalScheme) -> Result<Self> {
        if n_modes < 2 {
            return Err(Error::GridMismatch(format!("need at least 2 modes, got {n_modes}")));
        }
        let (s_nodes, d1, d2, s_weights) = match scheme {
            VerticalScheme::FiniteDifference { order } => {
                if order < 2 || order % 2 != 0 {
                    return Err(Error::GridMismatch(format!("order must be even and >= 2, got {order}")));
                }
                if n_s < order + 1 || n_s < 6 {
                    return Err(Error::GridMismatch(format!(
                        "n_s = {n_s} too small for order {order}"
                    )));
                }
                let s: Vec<f64> = (0..=n_s).map(|i| i as f64 / n_s as f64).collect();
                let (d1, d2) = fd_matrices(&s, order);
                (s, d1, d2, corrected_trapezoid(n_s, 5))
            }
            VerticalScheme::Chebyshev => {
                if n_s < 4 {
                    return Err(Error::GridMismatch(format!("n_s = {n_s} too small")));
                }
                let s: Vec<f64> =
                    (0..=n_s).map(|i| 0.5 * (1.0 - (PI * i as f64 / n_s as f64).cos())).collect();
                let (d1, d2) = cheb_matrices(n_s);
                (s, d1, d2, clenshaw_curtis(n_s))
            }
        };
        let n_quad = (3 * n_modes).div_ceil(2);
        let q_nodes: Vec<f64> = (0..n_quad).map(|m| PI * (m as f64 + 0.5) / n_quad as f64).collect();
        let tables = CosTables::new(&q_nodes, n_modes);
        let mut proj = vec![0.0; n_modes * n_quad];
        for j in 0..n_modes {
            let scale = if j == 0 { 1.0 } else { 2.0 } / n_quad as f64;
            for m in 0..n_quad {
                proj[j * n_quad + m] = scale * tables.c0[m * n_modes + j];
            }
        }
        Ok(Grid { n_modes, n_s, scheme, s_nodes, d1, d2, s_weights, q_nodes, tables, proj })
    }

    /// Number of vertical nodes, `n_s + 1`.
    pub fn n_nodes(&self) -> usize {
        self.n_s + 1
    }

    pub fn n_quad(&self) -> usize {
        self.q_nodes.len()
    }

    pub fn q_nodes(&self) -> &[f64] {
        &self.q_nodes
    }

    pub fn s_weights(&self) -> &[f64] {
        &self.s_weights
    }

    /// First-derivative matrix, row-major `(n_s + 1)^2`.
    pub fn d1(&self) -> &[f64] {
        &self.d1
    }

    pub fn d2(&self) -> &[f64] {
        &self.d2
    }

    /// Values of `cos(j q_m)`, row-major `[m][j]`.
    pub fn cos_table(&self) -> &[f64] {
        &self.tables.c0
    }

    pub fn sin_deriv_table(&self) -> &[f64] {
        &self.tables.c1
    }

    pub fn cos_deriv2_table(&self) -> &[f64] {
        &self.tables.c2
    }

    /// Projection from collocation values to cosine coefficients, `[j][m]`.
    pub fn projection(&self) -> &[f64] {
        &self.proj
    }

    /// Weight of mode `j` in `int_{-pi}^{pi} cos(jq)^2 dq`.
    pub fn mode_weight(j: usize) -> f64 {
        if j == 0 {
            2.0 * PI
        } else {
            PI
        }
    }

    pub fn same_shape(&self, other: &Grid) -> bool {
        self.n_modes == other.n_modes && self.n_s == other.n_s && self.scheme == other.scheme
    }

    fn check(&self, n_modes: usize, n_s: usize) -> Result<()> {
        if n_modes != self.n_modes || n_s != self.n_s {
            return Err(Error::GridMismatch(format!(
                "field is {n_modes} x {n_s}, grid is {} x {}",
                self.n_modes, self.n_s
            )));
        }
        Ok(())
    }

    /// Applies a vertical differentiation matrix to every mode profile.
    fn apply_s(&self, d: &[f64], coeffs: &[f64]) -> Vec<f64> {
        let n = self.n_nodes();
        let mut out = vec![0.0; coeffs.len()];
        for (row_in, row_out) in coeffs.chunks(n).zip(out.chunks_mut(n)) {
            for i in 0..n {
                let drow = &d[i * n..(i + 1) * n];
                row_out[i] = drow.iter().zip(row_in).map(|(a, b)| a * b).sum();
            }
        }
        out
    }

    /// `sum_j table[m][j] coeffs[j][i]`.
    fn synth(&self, table: &[f64], n_points: usize, coeffs: &[f64]) -> Vec<f64> {
        let (n, nm) = (self.n_nodes(), self.n_modes);
        let mut out = vec![0.0; n_points * n];
        for m in 0..n_points {
            let out_row = &mut out[m * n..(m + 1) * n];
            for j in 0..nm {
                let c = table[m * nm + j];
                if c != 0.0 {
                    for (o, v) in out_row.iter_mut().zip(&coeffs[j * n..(j + 1) * n]) {
                        *o += c * v;
                    }
                }
            }
        }
        out
    }

    fn synth_surface(&self, table: &[f64], n_points: usize, eta: &[f64]) -> Vec<f64> {
        let nm = self.n_modes;
        (0..n_points).map(|m| table[m * nm..(m + 1) * nm].iter().zip(eta).map(|(a, b)| a * b).sum()).collect()
    }

    /// Projects collocation values `[m][i]` onto cosine coefficients `[j][i]`.
    fn analyse(&self, vals: &[f64], width: usize) -> Vec<f64> {
        let (nm, nq) = (self.n_modes, self.n_quad());
        let mut out = vec![0.0; nm * width];
        for j in 0..nm {
            let out_row = &mut out[j * width..(j + 1) * width];
            for m in 0..nq {
                let p = self.proj[j * nq + m];
                for (o, v) in out_row.iter_mut().zip(&vals[m * width..(m + 1) * width]) {
                    *o += p * v;
                }
            }
        }
        out
    }
}

/// Cosine-coefficient profiles of a scalar function of `(q, s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub n_modes: usize,
    pub n_s: usize,
    /// Row-major `[mode][node]`.
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &Grid) -> Self {
        ScalarField { n_modes: grid.n_modes, n_s: grid.n_s, values: vec![0.0; grid.n_modes * grid.n_nodes()] }
    }

    pub fn at(&self, j: usize, i: usize) -> f64 {
        self.values[j * (self.n_s + 1) + i]
    }

    pub fn at_mut(&mut self, j: usize, i: usize) -> &mut f64 {
        &mut self.values[j * (self.n_s + 1) + i]
    }
}

/// A surface elevation and interior disturbance `w = (eta, phi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveField {
    pub n_modes: usize,
    pub n_s: usize,
    pub eta_hat: Vec<f64>,
    /// Row-major `[mode][node]`; the first and last node of each row vanish.
    pub phi: Vec<f64>,
}

impl WaveField {
    pub fn zeros(grid: &Grid) -> Self {
        WaveField {
            n_modes: grid.n_modes,
            n_s: grid.n_s,
            eta_hat: vec![0.0; grid.n_modes],
            phi: vec![0.0; grid.n_modes * grid.n_nodes()],
        }
    }

    pub fn phi_at(&self, j: usize, i: usize) -> f64 {
        self.phi[j * (self.n_s + 1) + i]
    }

    pub fn phi_at_mut(&mut self, j: usize, i: usize) -> &mut f64 {
        &mut self.phi[j * (self.n_s + 1) + i]
    }

    pub fn is_zero(&self) -> bool {
        self.eta_hat.iter().chain(&self.phi).all(|v| *v == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.eta_hat.iter().chain(&self.phi).fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &WaveField) -> WaveField {
        let zip = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(u, v)| u + a * v).collect();
        WaveField {
            n_modes: self.n_modes,
            n_s: self.n_s,
            eta_hat: zip(&self.eta_hat, &other.eta_hat),
            phi: zip(&self.phi, &other.phi),
        }
    }

    pub fn scale(&self, a: f64) -> WaveField {
        WaveField {
            n_modes: self.n_modes,
            n_s: self.n_s,
            eta_hat: self.eta_hat.iter().map(|v| a * v).collect(),
            phi: self.phi.iter().map(|v| a * v).collect(),
        }
    }

    /// `eta(q)` from the cosine series.
    pub fn eta_at(&self, q: f64) -> f64 {
        self.eta_hat.iter().enumerate().map(|(j, c)| c * (j as f64 * q).cos()).sum()
    }

    fn check_boundary(&self) -> Result<()> {
        let n = self.n_s + 1;
        for row in self.phi.chunks(n) {
            if row[0] != 0.0 || row[n - 1] != 0.0 {
                return Err(Error::GridMismatch("phi must vanish at s = 0 and s = 1".into()));
            }
        }
        Ok(())
    }
}

struct Laminar {
    psi: Vec<f64>,
    psi_s: Vec<f64>,
    psi_ss: Vec<f64>,
    flow: LaminarFlow,
}

impl Laminar {
    fn new(params: &Params, grid: &Grid) -> Self {
        let flow = laminar_constants(params);
        Laminar {
            psi: grid.s_nodes.iter().map(|&s| flow.psi0(s)).collect(),
            psi_s: grid.s_nodes.iter().map(|&s| flow.psi0_s(s)).collect(),
            psi_ss: grid.s_nodes.iter().map(|&s| flow.psi0_ss(s)).collect(),
            flow,
        }
    }
}

/// Pointwise values of the two residual components and, optionally, their
/// partial derivatives with respect to the local field quantities.
pub(crate) struct Pointwise {
    /// Surface residual at each point.
    pub f1: Vec<f64>,
    /// Interior residual, `[point][node]`.
    pub f2: Vec<f64>,
    pub partials: Option<Partials>,
}

/// Derivatives of the pointwise residuals. Interior arrays are `[point][node]`.
///
/// Interior: with `J = 1 + eta`, `e = eta_q`, `A = psi0_s + phi_s`, `B = phi_q`,
/// `C = psi0_ss + phi_ss`,
/// `F2 = xi B_q - xi s e_q A / J - 2 xi s e B_s / J + 2 xi s e^2 A / J^2
///       + (1 + xi s^2 e^2) C / J^2 - alpha (psi0 + phi)`.
/// Surface: `U = B - e A / J`, `F1 = xi U^2 / 2 + A^2 / (2 J^2) + eta - Q`.
pub(crate) struct Partials {
    pub bq: f64,
    pub a: Vec<f64>,
    pub bs: Vec<f64>,
    pub c: Vec<f64>,
    pub phi: f64,
    pub eqq: Vec<f64>,
    pub eq: Vec<f64>,
    pub eta: Vec<f64>,
    pub s_b: Vec<f64>,
    pub s_a: Vec<f64>,
    pub s_eq: Vec<f64>,
    pub s_eta: Vec<f64>,
}

fn pointwise(
    field: &WaveField,
    params: &Params,
    grid: &Grid,
    tables: &CosTables,
    with_partials: bool,
) -> Result<Pointwise> {
    grid.check(field.n_modes, field.n_s)?;
    field.check_boundary()?;
    let np = tables.c0.len() / grid.n_modes;
    let n = grid.n_nodes();
    let lam = Laminar::new(params, grid);
    let xi = params.xi;
    let alpha = params.alpha;

    let e0 = grid.synth_surface(&tables.c0, np, &field.eta_hat);
    let min_depth = e0.iter().fold(f64::INFINITY, |m, v| m.min(1.0 + v));
    if !(min_depth > 0.0) {
        return Err(Error::DomainCollapse { min_depth });
    }
    let e1 = grid.synth_surface(&tables.c1, np, &field.eta_hat);
    let e2 = grid.synth_surface(&tables.c2, np, &field.eta_hat);

    let phi_s_hat = grid.apply_s(&grid.d1, &field.phi);
    let phi_ss_hat = grid.apply_s(&grid.d2, &field.phi);
    let phi = grid.synth(&tables.c0, np, &field.phi);
    let phi_q = grid.synth(&tables.c1, np, &field.phi);
    let phi_qq = grid.synth(&tables.c2, np, &field.phi);
    let phi_s = grid.synth(&tables.c0, np, &phi_s_hat);
    let phi_qs = grid.synth(&tables.c1, np, &phi_s_hat);
    let phi_ss = grid.synth(&tables.c0, np, &phi_ss_hat);

    let mut f1 = vec![0.0; np];
    let mut f2 = vec![0.0; np * n];
    let mut partials = with_partials.then(|| Partials {
        bq: xi,
        a: vec![0.0; np * n],
        bs: vec![0.0; np * n],
        c: vec![0.0; np * n],
        phi: -alpha,
        eqq: vec![0.0; np * n],
        eq: vec![0.0; np * n],
        eta: vec![0.0; np * n],
        s_b: vec![0.0; np],
        s_a: vec![0.0; np],
        s_eq: vec![0.0; np],
        s_eta: vec![0.0; np],
    });

    for m in 0..np {
        let jac = 1.0 + e0[m];
        let (e, ep) = (e1[m], e2[m]);
        let (ji, ji2) = (1.0 / jac, 1.0 / (jac * jac));
        let ji3 = ji2 * ji;
        for i in 0..n {
            let k = m * n + i;
            let s = grid.s_nodes[i];
            let a = lam.psi_s[i] + phi_s[k];
            let (bq, bs) = (phi_qq[k], phi_qs[k]);
            let c = lam.psi_ss[i] + phi_ss[k];
            let g = 1.0 + xi * s * s * e * e;
            f2[k] = xi * bq - xi * s * ep * a * ji - 2.0 * xi * s * e * bs * ji
                + 2.0 * xi * s * e * e * a * ji2
                + g * c * ji2
                - alpha * (lam.psi[i] + phi[k]);
            if let Some(p) = partials.as_mut() {
                p.a[k] = -xi * s * ep * ji + 2.0 * xi * s * e * e * ji2;
                p.bs[k] = -2.0 * xi * s * e * ji;
                p.c[k] = g * ji2;
                p.eqq[k] = -xi * s * a * ji;
                p.eq[k] = -2.0 * xi * s * bs * ji + 4.0 * xi * s * e * a * ji2 + 2.0 * xi * s * s * e * c * ji2;
                p.eta[k] = xi * s * ep * a * ji2 + 2.0 * xi * s * e * bs * ji2
                    - 4.0 * xi * s * e * e * a * ji3
                    - 2.0 * g * c * ji3;
            }
        }
        let k = m * n + n - 1;
        let a = lam.psi_s[n - 1] + phi_s[k];
        let u = phi_q[k] - e * a * ji;
        f1[m] = 0.5 * xi * u * u + 0.5 * a * a * ji2 + e0[m] - lam.flow.q;
        if let Some(p) = partials.as_mut() {
            p.s_b[m] = xi * u;
            p.s_a[m] = -xi * u * e * ji + a * ji2;
            p.s_eq[m] = -xi * u * a * ji;
            p.s_eta[m] = xi * u * e * a * ji2 - a * a * ji3 + 1.0;
        }
    }
    Ok(Pointwise { f1, f2, partials })
}

pub(crate) fn pointwise_on_grid(field: &WaveField, params: &Params, grid: &Grid, with_partials: bool) -> Result<Pointwise> {
    pointwise(field, params, grid, &grid.tables, with_partials)
}

/// `F(w, params)`: cosine coefficients of the surface residual in `eta_hat`
/// and of the interior residual in `phi`, with boundary nodes set to zero.
#[allow(non_snake_case)]
pub fn eval_F(field: &WaveField, params: &Params, grid: &Grid) -> Result<WaveField> {
    let pw = pointwise_on_grid(field, params, grid, false)?;
    Ok(residual_from_pointwise(&pw, grid))
}

pub(crate) fn residual_from_pointwise(pw: &Pointwise, grid: &Grid) -> WaveField {
    let n = grid.n_nodes();
    let eta_hat = grid.analyse(&pw.f1, 1);
    let mut phi = grid.analyse(&pw.f2, n);
    for row in phi.chunks_mut(n) {
        row[0] = 0.0;
        row[n - 1] = 0.0;
    }
    WaveField { n_modes: grid.n_modes, n_s: grid.n_s, eta_hat, phi }
}

/// Pointwise residuals at arbitrary abscissae: `(F1(q_m), F2(q_m, s_i))`,
/// the second row-major `[m][i]` over all nodes.
#[allow(non_snake_case)]
pub fn eval_F_at(field: &WaveField, params: &Params, grid: &Grid, qs: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let tables = CosTables::new(qs, grid.n_modes);
    let pw = pointwise(field, params, grid, &tables, false)?;
    Ok((pw.f1, pw.f2))
}

/// `D_w F(field0, params)[dir]`. Closed form at `field0 = 0`, central
/// differences of [`eval_F`] otherwise.
#[allow(non_snake_case)]
pub fn eval_DwF(field0: &WaveField, dir: &WaveField, params: &Params, grid: &Grid) -> Result<WaveField> {
    grid.check(dir.n_modes, dir.n_s)?;
    if field0.is_zero() {
        return dwf_at_zero(dir, params, grid);
    }
    let scale = dir.max_abs();
    if scale == 0.0 {
        return Ok(WaveField::zeros(grid));
    }
    let h = 1e-7 * field0.max_abs().max(1.0) / scale;
    let plus = eval_F(&field0.axpy(h, dir), params, grid)?;
    let minus = eval_F(&field0.axpy(-h, dir), params, grid)?;
    Ok(plus.axpy(-1.0, &minus).scale(0.5 / h))
}

fn dwf_at_zero(dir: &WaveField, params: &Params, grid: &Grid) -> Result<WaveField> {
    dir.check_boundary()?;
    let n = grid.n_nodes();
    let lam = Laminar::new(params, grid);
    let ps1 = lam.psi_s[n - 1];
    let phi_s = grid.apply_s(&grid.d1, &dir.phi);
    let phi_ss = grid.apply_s(&grid.d2, &dir.phi);
    let mut out = WaveField::zeros(grid);
    for j in 0..grid.n_modes {
        let jj = (j * j) as f64;
        let eta = dir.eta_hat[j];
        out.eta_hat[j] = ps1 * phi_s[j * n + n - 1] + (1.0 - ps1 * ps1) * eta;
        for i in 1..n - 1 {
            let k = j * n + i;
            let s = grid.s_nodes[i];
            out.phi[k] = -params.xi * jj * dir.phi[k] + phi_ss[k] - params.alpha * dir.phi[k]
                + params.xi * s * lam.psi_s[i] * jj * eta
                - 2.0 * lam.psi_ss[i] * eta;
        }
    }
    Ok(out)
}

/// `T(phi) = (-phi(1) / psi0_s(1), phi - s psi0_s(s) phi(1) / psi0_s(1))`.
#[allow(non_snake_case)]
pub fn apply_T(phi: &ScalarField, params: &Params, grid: &Grid) -> Result<WaveField> {
    grid.check(phi.n_modes, phi.n_s)?;
    let n = grid.n_nodes();
    let flow = laminar_constants(params);
    let ps1 = flow.psi0_s(1.0);
    let mut out = WaveField::zeros(grid);
    for j in 0..grid.n_modes {
        let trace = phi.at(j, n - 1);
        out.eta_hat[j] = -trace / ps1;
        for i in 1..n - 1 {
            let s = grid.s_nodes[i];
            out.phi[j * n + i] = phi.at(j, i) - s * flow.psi0_s(s) * trace / ps1;
        }
    }
    Ok(out)
}

/// Inverse of [`apply_T`]: `phi = phi_hat - s psi0_s(s) eta`.
#[allow(non_snake_case)]
pub fn apply_T_inverse(w: &WaveField, params: &Params, grid: &Grid) -> Result<ScalarField> {
    grid.check(w.n_modes, w.n_s)?;
    let n = grid.n_nodes();
    let flow = laminar_constants(params);
    let mut out = ScalarField::zeros(grid);
    for j in 0..grid.n_modes {
        for i in 0..n {
            let s = grid.s_nodes[i];
            out.values[j * n + i] = w.phi[j * n + i] - s * flow.psi0_s(s) * w.eta_hat[j];
        }
    }
    Ok(out)
}

/// `(eta_phi, phi)` with `eta_phi = -phi(1) / psi0_s(1)`.
pub fn lift(phi: &ScalarField, params: &Params, grid: &Grid) -> Result<WaveField> {
    grid.check(phi.n_modes, phi.n_s)?;
    let n = grid.n_nodes();
    let ps1 = laminar_constants(params).psi0_s(1.0);
    Ok(WaveField {
        n_modes: phi.n_modes,
        n_s: phi.n_s,
        eta_hat: (0..grid.n_modes).map(|j| -phi.at(j, n - 1) / ps1).collect(),
        phi: phi.values.clone(),
    })
}

/// `R(eta, phi) = (eta, phi - s psi0_s(s) phi(1) / psi0_s(1))`.
#[allow(non_snake_case)]
pub fn apply_R(eta_hat: &[f64], phi: &ScalarField, params: &Params, grid: &Grid) -> Result<WaveField> {
    grid.check(eta_hat.len(), phi.n_s)?;
    let mut out = apply_T(phi, params, grid)?;
    out.eta_hat = eta_hat.to_vec();
    Ok(out)
}

/// Both components of `L phi = D_w F(0) T phi`:
/// `[psi0_s phi_s - (psi0_ss + 1 / psi0_s) phi]_{s=1}` per mode, and
/// `(xi d_q^2 + d_s^2 - alpha) phi` at every node.
#[allow(non_snake_case)]
pub fn apply_L(phi: &ScalarField, params: &Params, grid: &Grid) -> Result<(Vec<f64>, ScalarField)> {
    grid.check(phi.n_modes, phi.n_s)?;
    let n = grid.n_nodes();
    let flow = laminar_constants(params);
    let (ps1, pss1) = (flow.psi0_s(1.0), flow.psi0_ss(1.0));
    let phi_s = grid.apply_s(&grid.d1, &phi.values);
    let phi_ss = grid.apply_s(&grid.d2, &phi.values);
    let mut surface = vec![0.0; grid.n_modes];
    let mut interior = ScalarField::zeros(grid);
    for j in 0..grid.n_modes {
        let jj = (j * j) as f64;
        let top = j * n + n - 1;
        surface[j] = ps1 * phi_s[top] - (pss1 + 1.0 / ps1) * phi.values[top];
        for i in 0..n {
            let k = j * n + i;
            interior.values[k] = -params.xi * jj * phi.values[k] + phi_ss[k] - params.alpha * phi.values[k];
        }
    }
    Ok((surface, interior))
}

/// `int int phi1 phi2 dq ds + int eta1 eta2 dq` over one period.
#[allow(non_snake_case)]
pub fn inner_product_Y(w1: &WaveField, w2: &WaveField, grid: &Grid) -> Result<f64> {
    grid.check(w1.n_modes, w1.n_s)?;
    grid.check(w2.n_modes, w2.n_s)?;
    let n = grid.n_nodes();
    let mut total = 0.0;
    for j in 0..grid.n_modes {
        let mut area = 0.0;
        for i in 0..n {
            area += grid.s_weights[i] * w1.phi[j * n + i] * w2.phi[j * n + i];
        }
        total += Grid::mode_weight(j) * (area + w1.eta_hat[j] * w2.eta_hat[j]);
    }
    Ok(total)
}

#[allow(non_snake_case)]
pub fn norm_Y(w: &WaveField, grid: &Grid) -> Result<f64> {
    Ok(inner_product_Y(w, w, grid)?.sqrt())
}

/// The kernel function `phi_k = cos(kq) sin*(theta_k s) / theta_k` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelFunction {
    pub k: u32,
    pub theta: ThetaValue,
    /// Vertical profile at the grid nodes.
    pub values: Vec<f64>,
    /// Cosine coefficient of `eta_{phi_k} = -phi_k(1) / psi0_s(1)`.
    pub eta_part: f64,
}

impl KernelFunction {
    pub fn new(params: &Params, k: u32, grid: &Grid) -> Result<Self> {
        if k as usize >= grid.n_modes {
            return Err(Error::GridMismatch(format!("mode {k} not resolved by {} modes", grid.n_modes)));
        }
        let tv = theta(params, k);
        let values: Vec<f64> = grid.s_nodes.iter().map(|&s| tv.profile(s)).collect();
        let eta_part = -tv.profile(1.0) / laminar_constants(params).psi0_s(1.0);
        Ok(KernelFunction { k, theta: tv, values, eta_part })
    }

    pub fn phi(&self, grid: &Grid) -> ScalarField {
        let mut f = ScalarField::zeros(grid);
        let n = grid.n_nodes();
        let j = self.k as usize;
        f.values[j * n..(j + 1) * n].copy_from_slice(&self.values);
        f
    }

    /// `(eta_{phi_k}, phi_k)`, an element of the complement of the range.
    pub fn lifted(&self, grid: &Grid) -> WaveField {
        let n = grid.n_nodes();
        let j = self.k as usize;
        let mut w = WaveField::zeros(grid);
        w.eta_hat[j] = self.eta_part;
        w.phi[j * n..(j + 1) * n].copy_from_slice(&self.values);
        w
    }

    /// `T phi_k`, an element of the kernel of `D_w F(0)`.
    pub fn transformed(&self, params: &Params, grid: &Grid) -> Result<WaveField> {
        apply_T(&self.phi(grid), params, grid)
    }

    /// Discrete `L phi_k`, scaled by the size of the terms it balances.
    pub fn residual(&self, params: &Params, grid: &Grid) -> Result<KernelResidual> {
        let (surface, interior) = apply_L(&self.phi(grid), params, grid)?;
        let flow = laminar_constants(params);
        let (ps1, pss1) = (flow.psi0_s(1.0), flow.psi0_ss(1.0));
        let j = self.k as usize;
        let n = grid.n_nodes();
        let peak = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let interior_scale = peak * (params.xi * (j * j) as f64 + params.alpha.abs());
        let surface_scale =
            ps1.abs() * self.theta.profile_s(1.0).abs() + (pss1 + 1.0 / ps1).abs() * self.values[n - 1].abs();
        // boundary rows carry Dirichlet conditions, not the field equation
        let interior_abs = (1..n - 1).map(|i| interior.values[j * n + i].abs()).fold(0.0, f64::max);
        Ok(KernelResidual {
            surface: surface[j].abs() / surface_scale,
            interior: interior_abs / interior_scale,
        })
    }
}

/// Relative size of `L phi_k` in each component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelResidual {
    pub surface: f64,
    pub interior: f64,
}

impl KernelResidual {
    pub fn max(&self) -> f64 {
        self.surface.max(self.interior)
    }
}

/// Result of [`project_Z`].
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub amplitudes: Vec<f64>,
    pub remainder: WaveField,
}

/// `Pi_Z w = sum_k <w, w~_k> / |w~_k|^2 w~_k` and the remainder.
#[allow(non_snake_case)]
pub fn project_Z(w: &WaveField, kernel: &[KernelFunction], grid: &Grid) -> Result<Projection> {
    let mut remainder = w.clone();
    let mut amplitudes = Vec::with_capacity(kernel.len());
    for kf in kernel {
        let lifted = kf.lifted(grid);
        let c = inner_product_Y(w, &lifted, grid)? / inner_product_Y(&lifted, &lifted, grid)?;
        remainder = remainder.axpy(-c, &lifted);
        amplitudes.push(c);
    }
    Ok(Projection { amplitudes, remainder })
}

/// Kernel amplitudes of `w`: project the lift of `T^{-1} w` onto `Z`.
/// `T phi_j` has amplitudes `e_j`.
pub fn kernel_amplitudes(w: &WaveField, kernel: &[KernelFunction], params: &Params, grid: &Grid) -> Result<Vec<f64>> {
    let lifted = lift(&apply_T_inverse(w, params, grid)?, params, grid)?;
    Ok(project_Z(&lifted, kernel, grid)?.amplitudes)
}
