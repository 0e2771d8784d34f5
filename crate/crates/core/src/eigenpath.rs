//! Continuation solvers on radially symmetric model geometries.
//!
//! A model geometry is the metric `B (ds² + φ(s)² dΩ²)` on an interval of
//! the coordinate `s`, either a spherical cap (`φ = sin s`, pole at `s = 0`)
//! or a flat annulus (`φ = s`). Radial conformal factors `u(s)` in the
//! exponential convention reduce every tensor to a radial and a tangential
//! eigenvalue, and the boundary-value problems become 1-D problems solved by
//! second-order finite differences with ghost nodes.
//!
//! Two problems are provided: the ε-regularized eigenvalue problem
//! `σ₂^{1/2}(A_u) = (t + (1−t) f) e^{εu}`, whose `t = 1` member is
//! `σ₂(A_u) = e^{2εu}`, and the existence homotopy with the volume term,
//! the ramp `ζ(t)` and the positive tensor `S_g`.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result, Sigma2Error};
use crate::radial::radial_sigmas;
use crate::symfunc::{binom2, cone_membership, ConeVerdict, DEFAULT_CONE_TOL};

/// Area of the unit sphere `S^k ⊂ ℝ^{k+1}`.
pub fn sphere_area(k: usize) -> f64 {
    // Γ((k+1)/2) by the half-integer recurrence.
    let m = k + 1;
    let gamma_half_m = if m % 2 == 0 {
        (1..m / 2).map(|i| i as f64).product::<f64>()
    } else {
        let mut g = PI.sqrt();
        let mut x = 0.5;
        while x + 1e-9 < m as f64 / 2.0 {
            g *= x;
            x += 1.0;
        }
        g
    };
    2.0 * PI.powf(m as f64 / 2.0) / gamma_half_m
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GeometryKind {
    /// Geodesic ball of angular radius `cap_angle` in the round sphere.
    SphericalCap { cap_angle: f64 },
    /// Flat annulus `r_inner ≤ |x| ≤ r_outer`.
    Annulus { r_inner: f64, r_outer: f64 },
}

/// Which end of the coordinate interval a boundary component sits at.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum End {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryComponent {
    pub end: End,
    pub s: f64,
    /// Mean curvature for the inward normal.
    pub h_g: f64,
    /// `+1` when the inward normal points towards increasing `s`.
    pub normal_sign: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelGeometry {
    pub n: usize,
    pub kind: GeometryKind,
    /// Metric scale `B`, the smallest power of two making
    /// `λ_n V^{2/(n+1)} g − A_g` positive.
    pub scale_b: f64,
}

impl ModelGeometry {
    pub fn spherical_cap(n: usize, cap_angle: f64) -> Result<Self> {
        if !(cap_angle > 0.0 && cap_angle < PI) {
            return Err(invalid(format!("cap angle must lie in (0, π), got {cap_angle}")));
        }
        Self::guarded(n, GeometryKind::SphericalCap { cap_angle })
    }

    pub fn hemisphere(n: usize) -> Result<Self> {
        Self::spherical_cap(n, PI / 2.0)
    }

    pub fn annulus(n: usize, r_inner: f64, r_outer: f64) -> Result<Self> {
        if !(r_inner > 0.0 && r_outer > r_inner) {
            return Err(invalid("annulus needs 0 < r_inner < r_outer"));
        }
        Self::guarded(n, GeometryKind::Annulus { r_inner, r_outer })
    }

    fn guarded(n: usize, kind: GeometryKind) -> Result<Self> {
        if !(3..=8).contains(&n) {
            return Err(Sigma2Error::Dimension { got: n, min: 3, max: 8 });
        }
        let mut g = Self { n, kind, scale_b: 1.0 };
        while g.positivity_margin() <= 0.0 {
            g.scale_b *= 2.0;
            if g.scale_b > 1e12 {
                return Err(invalid("no metric scale restores positivity"));
            }
        }
        Ok(g)
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            GeometryKind::SphericalCap { .. } => "spherical_cap",
            GeometryKind::Annulus { .. } => "annulus",
        }
    }

    pub fn s_range(&self) -> (f64, f64) {
        match self.kind {
            GeometryKind::SphericalCap { cap_angle } => (0.0, cap_angle),
            GeometryKind::Annulus { r_inner, r_outer } => (r_inner, r_outer),
        }
    }

    pub fn has_pole(&self) -> bool {
        matches!(self.kind, GeometryKind::SphericalCap { .. })
    }

    /// `(φ, φ′)` at `s`.
    pub fn warp(&self, s: f64) -> (f64, f64) {
        match self.kind {
            GeometryKind::SphericalCap { .. } => (s.sin(), s.cos()),
            GeometryKind::Annulus { .. } => (s, 1.0),
        }
    }

    /// Eigenvalue of `A_g` (isotropic in both models) in a `g`-orthonormal frame.
    pub fn a_g(&self) -> f64 {
        match self.kind {
            GeometryKind::SphericalCap { .. } => 0.5 / self.scale_b,
            GeometryKind::Annulus { .. } => 0.0,
        }
    }

    /// `(radial, tangential)` eigenvalues of `A_g`.
    pub fn a_g_pair(&self) -> (f64, f64) {
        (self.a_g(), self.a_g())
    }

    /// `σ₂^{1/2}(A_g)`.
    pub fn background_curvature(&self) -> f64 {
        binom2(self.n).sqrt() * self.a_g()
    }

    pub fn boundaries(&self) -> Vec<BoundaryComponent> {
        let rb = self.scale_b.sqrt();
        match self.kind {
            GeometryKind::SphericalCap { cap_angle } => vec![BoundaryComponent {
                end: End::Right,
                s: cap_angle,
                h_g: cap_angle.cos() / cap_angle.sin() / rb,
                normal_sign: -1.0,
            }],
            GeometryKind::Annulus { r_inner, r_outer } => vec![
                BoundaryComponent {
                    end: End::Left,
                    s: r_inner,
                    h_g: -1.0 / (r_inner * rb),
                    normal_sign: 1.0,
                },
                BoundaryComponent {
                    end: End::Right,
                    s: r_outer,
                    h_g: 1.0 / (r_outer * rb),
                    normal_sign: -1.0,
                },
            ],
        }
    }

    /// Riemannian density in the `s` coordinate, `B^{n/2} ω_{n−1} φ^{n−1}`.
    pub fn density(&self, s: f64) -> f64 {
        self.scale_b.powf(self.n as f64 / 2.0) * sphere_area(self.n - 1) * self.warp(s).0.powi(self.n as i32 - 1)
    }

    pub fn volume(&self) -> f64 {
        let (a, b) = self.s_range();
        match self.kind {
            GeometryKind::Annulus { .. } => {
                self.scale_b.powf(self.n as f64 / 2.0) * sphere_area(self.n - 1) * (b.powi(self.n as i32) - a.powi(self.n as i32))
                    / self.n as f64
            }
            GeometryKind::SphericalCap { .. } => {
                let rule = GaussLegendre::new(NonZeroUsize::new(64).expect("nonzero"));
                rule.integrate(a, b, |s| self.density(s))
            }
        }
    }

    /// `λ_n = (C_n²)^{-1/2}`.
    pub fn lambda_n(&self) -> f64 {
        1.0 / binom2(self.n).sqrt()
    }

    /// `λ_n V^{2/(n+1)}`.
    pub fn volume_scale(&self) -> f64 {
        self.lambda_n() * self.volume().powf(2.0 / (self.n as f64 + 1.0))
    }

    /// Smallest eigenvalue of `λ_n V^{2/(n+1)} g − A_g`.
    pub fn positivity_margin(&self) -> f64 {
        self.volume_scale() - self.a_g()
    }
}

/// Uniform finite-difference grid with ghost nodes outside each boundary.
///
/// Unknowns are the node values `u_0 … u_{N−1}` followed by the ghost values
/// in the order of [`ModelGeometry::boundaries`].
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub geom: ModelGeometry,
    pub s: Vec<f64>,
    pub h: f64,
    /// Hat-function quadrature weights against the Riemannian density.
    pub weights: Vec<f64>,
}

pub const DEFAULT_NODES: usize = 201;

impl Grid {
    pub fn new(geom: ModelGeometry, nodes: usize) -> Result<Self> {
        if nodes < 5 {
            return Err(invalid("grids need at least 5 nodes"));
        }
        let (a, b) = geom.s_range();
        let h = (b - a) / (nodes - 1) as f64;
        let s: Vec<f64> = (0..nodes).map(|i| a + i as f64 * h).collect();
        let rule = GaussLegendre::new(NonZeroUsize::new(8).expect("nonzero"));
        let mut weights = vec![0.0; nodes];
        for i in 0..nodes - 1 {
            let (l, r) = (s[i], s[i + 1]);
            weights[i] += rule.integrate(l, r, |x| (r - x) / h * geom.density(x));
            weights[i + 1] += rule.integrate(l, r, |x| (x - l) / h * geom.density(x));
        }
        Ok(Self { geom, s, h, weights })
    }

    pub fn nodes(&self) -> usize {
        self.s.len()
    }

    pub fn unknowns(&self) -> usize {
        self.nodes() + self.geom.boundaries().len()
    }

    fn ghost_index(&self, end: End) -> usize {
        let bs = self.geom.boundaries();
        let k = bs.iter().position(|b| b.end == end).expect("boundary at that end");
        self.nodes() + k
    }

    fn left(&self, i: usize) -> usize {
        if i == 0 {
            self.ghost_index(End::Left)
        } else {
            i - 1
        }
    }

    fn right(&self, i: usize) -> usize {
        if i + 1 == self.nodes() {
            self.ghost_index(End::Right)
        } else {
            i + 1
        }
    }

    fn is_pole(&self, i: usize) -> bool {
        i == 0 && self.geom.has_pole()
    }

    fn boundary_node(&self, end: End) -> usize {
        match end {
            End::Left => 0,
            End::Right => self.nodes() - 1,
        }
    }

    /// `∫ g dμ` for node values `g`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// Volume-weighted mean of the node values.
    pub fn mean(&self, u: &[f64]) -> f64 {
        self.integrate(&u[..self.nodes()]) / self.weights.iter().sum::<f64>()
    }

    /// Rows `(s, u, du, ddu, sigma1, sigma2)` at the nodes, with
    /// derivatives in `s` and the symmetric functions of
    /// `A_u + shift·g`.
    pub fn node_table(&self, u: &[f64], shift: f64) -> Vec<[f64; 6]> {
        let h = self.h;
        (0..self.nodes())
            .map(|i| {
                let (d1, d2) = if self.is_pole(i) {
                    (0.0, 2.0 * (u[1] - u[0]) / (h * h))
                } else {
                    let (l, r) = (self.left(i), self.right(i));
                    ((u[r] - u[l]) / (2.0 * h), (u[r] - 2.0 * u[i] + u[l]) / (h * h))
                };
                let loc = self.local(u, i);
                let (s1, s2) = radial_sigmas(loc.lr + shift, loc.lt + shift, self.geom.n);
                [self.s[i], u[i], d1, d2, s1, s2]
            })
            .collect()
    }

    /// Frame eigenvalues of `∇²u + du⊗du − ½|∇u|² g` at node `i`, with the
    /// partial derivatives of each with respect to `(u_L, u_i, u_R)`.
    fn local(&self, u: &[f64], i: usize) -> Local {
        let b = self.geom.scale_b;
        let h = self.h;
        if self.is_pole(i) {
            let d2 = 2.0 * (u[1] - u[0]) / (h * h);
            let lam = d2 / b;
            let dd = [0.0, -2.0 / (h * h * b), 2.0 / (h * h * b)];
            return Local {
                idx: [1, 0, 1],
                lr: lam,
                lt: lam,
                dlr: dd,
                dlt: dd,
            };
        }
        let (l, r) = (self.left(i), self.right(i));
        let d1 = (u[r] - u[l]) / (2.0 * h);
        let d2 = (u[r] - 2.0 * u[i] + u[l]) / (h * h);
        let (phi, dphi) = self.geom.warp(self.s[i]);
        let q = dphi / phi;
        let lr = (d2 + 0.5 * d1 * d1) / b;
        let lt = (d1 * q - 0.5 * d1 * d1) / b;
        let dd1 = [-1.0 / (2.0 * h), 0.0, 1.0 / (2.0 * h)];
        let dd2 = [1.0 / (h * h), -2.0 / (h * h), 1.0 / (h * h)];
        let mut dlr = [0.0; 3];
        let mut dlt = [0.0; 3];
        for k in 0..3 {
            dlr[k] = (dd2[k] + d1 * dd1[k]) / b;
            dlt[k] = (q - d1) * dd1[k] / b;
        }
        Local {
            idx: [l, i, r],
            lr,
            lt,
            dlr,
            dlt,
        }
    }

    /// Inward normal derivative at a boundary and its stencil.
    fn normal_derivative(&self, u: &[f64], bc: &BoundaryComponent) -> (f64, [(usize, f64); 2]) {
        let i = self.boundary_node(bc.end);
        let (l, r) = (self.left(i), self.right(i));
        let c = bc.normal_sign / (2.0 * self.h * self.geom.scale_b.sqrt());
        (c * (u[r] - u[l]), [(r, c), (l, -c)])
    }
}

struct Local {
    idx: [usize; 3],
    lr: f64,
    lt: f64,
    dlr: [f64; 3],
    dlt: [f64; 3],
}

/// `σ₂^{1/2}` of `(λ_r, λ_t^{×(n−1)})` with its partial derivatives, or an
/// admissibility error outside Γ₂⁺.
fn sqrt_sigma2(n: usize, lr: f64, lt: f64, node: usize) -> Result<(f64, f64, f64, f64)> {
    let (s1, s2) = radial_sigmas(lr, lt, n);
    let mut lam = vec![lt; n];
    lam[0] = lr;
    let rep = cone_membership(&lam, 2, DEFAULT_CONE_TOL)?;
    if rep.verdict != ConeVerdict::Interior {
        return Err(Sigma2Error::Inadmissible(format!(
            "node {node}: sigma1 = {s1:e}, sigma2 = {s2:e}"
        )));
    }
    let f = s2.sqrt();
    let k = (n - 1) as f64;
    let dfr = k * lt / (2.0 * f);
    let dft = (k * lr + 2.0 * binom2(n - 1) * lt) / (2.0 * f);
    Ok((f, dfr, dft, rep.margin))
}

/// A square nonlinear system `G(u, t) = 0` tracked in `t ∈ [0, 1]`.
pub trait ContinuationSystem {
    fn dim(&self) -> usize;
    /// Residual, or an admissibility error.
    fn residual(&self, u: &[f64], t: f64) -> Result<Vec<f64>>;
    fn jacobian(&self, u: &[f64], t: f64) -> Result<DMatrix<f64>>;
    /// `∂G/∂t`.
    fn dt(&self, u: &[f64], t: f64) -> Result<Vec<f64>>;
    /// Smallest cone margin over nodes.
    fn min_margin(&self, u: &[f64], t: f64) -> Result<f64>;
}

/// Ramp `ζ(t) = s(2t)` with the cubic smoothstep `s(x) = 3x² − 2x³` on
/// `[0, 1]` and `ζ ≡ 1` on `[1/2, 1]`.
pub fn zeta(t: f64) -> f64 {
    let x = (2.0 * t).clamp(0.0, 1.0);
    x * x * (3.0 - 2.0 * x)
}

pub fn zeta_prime(t: f64) -> f64 {
    let x = 2.0 * t;
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        12.0 * x * (1.0 - x)
    }
}

/// Data of the existence homotopy.
pub struct PathProblem<'a> {
    pub grid: &'a Grid,
    /// Prescribed curvature as a function of `s`.
    pub f: &'a (dyn Fn(f64) -> f64 + Sync),
    /// Prescribed boundary mean curvature as a function of `s`.
    pub c: &'a (dyn Fn(f64) -> f64 + Sync),
    pub f0: f64,
}

impl PathProblem<'_> {
    /// Isotropic eigenvalue of `S_g(t) = (1 − ζ)(λ_n V^{2/(n+1)} − A_g)`.
    pub fn s_g(&self, t: f64) -> f64 {
        (1.0 - zeta(t)) * self.grid.geom.positivity_margin()
    }

    fn volume_integral(&self, u: &[f64]) -> f64 {
        let n = self.grid.geom.n as f64;
        let vals: Vec<f64> = u[..self.grid.nodes()].iter().map(|x| (-(n + 1.0) * x).exp()).collect();
        self.grid.integrate(&vals)
    }

    /// `(1 − t)(∫ e^{−(n+1)u})^{2/(n+1)}`.
    pub fn volume_term(&self, u: &[f64], t: f64) -> f64 {
        let n = self.grid.geom.n as f64;
        (1.0 - t) * self.volume_integral(u).powf(2.0 / (n + 1.0))
    }

    /// `max σ₂^{1/2}(A_g + S_g)` over the geometry.
    pub fn background_bound(&self, t: f64) -> f64 {
        binom2(self.grid.geom.n).sqrt() * (self.grid.geom.a_g() + self.s_g(t))
    }

    fn check_len(&self, u: &[f64]) -> Result<()> {
        if u.len() == self.grid.unknowns() {
            Ok(())
        } else {
            Err(Sigma2Error::DimensionMismatch {
                expected: self.grid.unknowns(),
                got: u.len(),
            })
        }
    }
}

/// Residual of the homotopy equation: `σ₂^{1/2}(A_u + S_g) − (1−t)(∫e^{−(n+1)u})^{2/(n+1)}
/// − ζ f e^{−2u} − f₀` at every node, then `∂u/∂n − ζ(c e^{−u} − h_g)` at
/// every boundary.
pub fn path_residual(p: &PathProblem<'_>, u: &[f64], t: f64) -> Result<Vec<f64>> {
    p.check_len(u)?;
    let g = p.grid;
    let n = g.geom.n;
    let shift = g.geom.a_g() + p.s_g(t);
    let z = zeta(t);
    let vol = p.volume_term(u, t);
    let mut out = Vec::with_capacity(g.unknowns());
    for i in 0..g.nodes() {
        let loc = g.local(u, i);
        let (f, _, _, _) = sqrt_sigma2(n, loc.lr + shift, loc.lt + shift, i)?;
        out.push(f - vol - z * (p.f)(g.s[i]) * (-2.0 * u[i]).exp() - p.f0);
    }
    for bc in g.geom.boundaries() {
        let (dn, _) = g.normal_derivative(u, &bc);
        let ub = u[g.boundary_node(bc.end)];
        out.push(dn - z * ((p.c)(bc.s) * (-ub).exp() - bc.h_g));
    }
    Ok(out)
}

impl ContinuationSystem for PathProblem<'_> {
    fn dim(&self) -> usize {
        self.grid.unknowns()
    }

    fn residual(&self, u: &[f64], t: f64) -> Result<Vec<f64>> {
        path_residual(self, u, t)
    }

    fn jacobian(&self, u: &[f64], t: f64) -> Result<DMatrix<f64>> {
        self.check_len(u)?;
        let g = self.grid;
        let n = g.geom.n;
        let dim = g.unknowns();
        let shift = g.geom.a_g() + self.s_g(t);
        let z = zeta(t);
        let nn = n as f64;
        let integral = self.volume_integral(u);
        let vol_coeff = 2.0 * (1.0 - t) * integral.powf((1.0 - nn) / (nn + 1.0));
        let vol_row: Vec<f64> = (0..g.nodes())
            .map(|j| vol_coeff * g.weights[j] * (-(nn + 1.0) * u[j]).exp())
            .collect();
        let mut jac = DMatrix::zeros(dim, dim);
        for i in 0..g.nodes() {
            let loc = g.local(u, i);
            let (_, dfr, dft, _) = sqrt_sigma2(n, loc.lr + shift, loc.lt + shift, i)?;
            for k in 0..3 {
                jac[(i, loc.idx[k])] += dfr * loc.dlr[k] + dft * loc.dlt[k];
            }
            for (j, v) in vol_row.iter().enumerate() {
                jac[(i, j)] += v;
            }
            jac[(i, i)] += 2.0 * z * (self.f)(g.s[i]) * (-2.0 * u[i]).exp();
        }
        for (k, bc) in g.geom.boundaries().iter().enumerate() {
            let row = g.nodes() + k;
            let (_, stencil) = g.normal_derivative(u, bc);
            for (j, c) in stencil {
                jac[(row, j)] += c;
            }
            let b = g.boundary_node(bc.end);
            jac[(row, b)] += z * (self.c)(bc.s) * (-u[b]).exp();
        }
        Ok(jac)
    }

    fn dt(&self, u: &[f64], t: f64) -> Result<Vec<f64>> {
        self.check_len(u)?;
        let g = self.grid;
        let n = g.geom.n as f64;
        let shift = g.geom.a_g() + self.s_g(t);
        let dz = zeta_prime(t);
        let ds = -dz * g.geom.positivity_margin();
        let d_vol = -self.volume_integral(u).powf(2.0 / (n + 1.0));
        let mut out = Vec::with_capacity(g.unknowns());
        for i in 0..g.nodes() {
            let loc = g.local(u, i);
            let (_, dfr, dft, _) = sqrt_sigma2(g.geom.n, loc.lr + shift, loc.lt + shift, i)?;
            out.push((dfr + dft) * ds - d_vol - dz * (self.f)(g.s[i]) * (-2.0 * u[i]).exp());
        }
        for bc in g.geom.boundaries() {
            let ub = u[g.boundary_node(bc.end)];
            out.push(-dz * ((self.c)(bc.s) * (-ub).exp() - bc.h_g));
        }
        Ok(out)
    }

    fn min_margin(&self, u: &[f64], t: f64) -> Result<f64> {
        let shift = self.grid.geom.a_g() + self.s_g(t);
        min_margin_with_shift(self.grid, u, shift)
    }
}

fn min_margin_with_shift(g: &Grid, u: &[f64], shift: f64) -> Result<f64> {
    let mut m = f64::INFINITY;
    for i in 0..g.nodes() {
        let loc = g.local(u, i);
        let (_, _, _, margin) = sqrt_sigma2(g.geom.n, loc.lr + shift, loc.lt + shift, i)?;
        m = m.min(margin);
    }
    Ok(m)
}

/// The ε-regularized eigenvalue problem
/// `σ₂^{1/2}(A_u) = (t + (1−t) f) e^{εu}`, `f = σ₂^{1/2}(A_g)`, with the
/// boundary condition `∂u/∂n = −t h_g` so that the `t = 1` metric has
/// minimal boundary.
pub struct EpsilonEigenSystem<'a> {
    pub grid: &'a Grid,
    pub eps: f64,
}

impl EpsilonEigenSystem<'_> {
    fn coeff(&self, t: f64) -> f64 {
        t + (1.0 - t) * self.grid.geom.background_curvature()
    }
}

impl ContinuationSystem for EpsilonEigenSystem<'_> {
    fn dim(&self) -> usize {
        self.grid.unknowns()
    }

    fn residual(&self, u: &[f64], t: f64) -> Result<Vec<f64>> {
        let g = self.grid;
        let a = g.geom.a_g();
        let k = self.coeff(t);
        let mut out = Vec::with_capacity(g.unknowns());
        for i in 0..g.nodes() {
            let loc = g.local(u, i);
            let (f, _, _, _) = sqrt_sigma2(g.geom.n, loc.lr + a, loc.lt + a, i)?;
            out.push(f - k * (self.eps * u[i]).exp());
        }
        for bc in g.geom.boundaries() {
            let (dn, _) = g.normal_derivative(u, &bc);
            out.push(dn + t * bc.h_g);
        }
        Ok(out)
    }

    fn jacobian(&self, u: &[f64], t: f64) -> Result<DMatrix<f64>> {
        let g = self.grid;
        let a = g.geom.a_g();
        let k = self.coeff(t);
        let dim = g.unknowns();
        let mut jac = DMatrix::zeros(dim, dim);
        for i in 0..g.nodes() {
            let loc = g.local(u, i);
            let (_, dfr, dft, _) = sqrt_sigma2(g.geom.n, loc.lr + a, loc.lt + a, i)?;
            for m in 0..3 {
                jac[(i, loc.idx[m])] += dfr * loc.dlr[m] + dft * loc.dlt[m];
            }
            jac[(i, i)] -= k * self.eps * (self.eps * u[i]).exp();
        }
        for (m, bc) in g.geom.boundaries().iter().enumerate() {
            let (_, stencil) = g.normal_derivative(u, bc);
            for (j, c) in stencil {
                jac[(g.nodes() + m, j)] += c;
            }
        }
        Ok(jac)
    }

    fn dt(&self, u: &[f64], _t: f64) -> Result<Vec<f64>> {
        let g = self.grid;
        let dk = 1.0 - g.geom.background_curvature();
        let mut out: Vec<f64> = (0..g.nodes()).map(|i| -dk * (self.eps * u[i]).exp()).collect();
        out.extend(g.geom.boundaries().iter().map(|bc| bc.h_g));
        Ok(out)
    }

    fn min_margin(&self, u: &[f64], _t: f64) -> Result<f64> {
        min_margin_with_shift(self.grid, u, self.grid.geom.a_g())
    }
}

/// Controls for Newton correction and step adaptation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContinuationOptions {
    /// Accept a corrected state when `‖G‖_∞ < tol`.
    pub tol: f64,
    /// Also accept once the line search stagnates below this level, the
    /// rounding floor of the difference stencils for large `|u|`.
    pub floor_tol: f64,
    pub dt_init: f64,
    pub dt_max: f64,
    pub dt_min: f64,
    pub max_newton: usize,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            floor_tol: 1e-10,
            dt_init: 0.05,
            dt_max: 0.25,
            dt_min: 1e-6,
            max_newton: 25,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContinuationState {
    pub t: f64,
    pub u: Vec<f64>,
    pub residual_norm: f64,
    pub min_margin: f64,
    pub newton_iterations: usize,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn two_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn solve(jac: DMatrix<f64>, rhs: &[f64]) -> Result<Vec<f64>> {
    let lu = jac.lu();
    let b = DVector::from_column_slice(rhs);
    lu.solve(&b)
        .map(|x| x.as_slice().to_vec())
        .filter(|x| x.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Sigma2Error::NonConvergence {
            reason: "singular Jacobian".into(),
            last_good_t: f64::NAN,
        })
}

/// Damped Newton at fixed `t`: Armijo backtracking on `‖G‖₂`, with every
/// trial point required to stay admissible.
pub fn newton_correct(
    sys: &dyn ContinuationSystem,
    u0: &[f64],
    t: f64,
    opts: &ContinuationOptions,
) -> Result<(Vec<f64>, f64, usize)> {
    let mut u = u0.to_vec();
    let mut r = sys.residual(&u, t)?;
    for it in 0..=opts.max_newton {
        let rn = inf_norm(&r);
        if rn < opts.tol {
            return Ok((u, rn, it));
        }
        if it == opts.max_newton {
            break;
        }
        let neg: Vec<f64> = r.iter().map(|x| -x).collect();
        let du = solve(sys.jacobian(&u, t)?, &neg)?;
        let merit = two_norm(&r);
        let mut alpha = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(&du).map(|(a, d)| a + alpha * d).collect();
            if let Ok(rt) = sys.residual(&trial, t) {
                if two_norm(&rt) <= (1.0 - 1e-4 * alpha) * merit {
                    u = trial;
                    r = rt;
                    break;
                }
            }
            alpha *= 0.5;
            if alpha < 1e-10 {
                if rn < opts.floor_tol {
                    return Ok((u, rn, it));
                }
                return Err(Sigma2Error::NonConvergence {
                    reason: format!("line search failed at t = {t}"),
                    last_good_t: t,
                });
            }
        }
    }
    Err(Sigma2Error::NonConvergence {
        reason: format!("Newton did not reach tolerance at t = {t}"),
        last_good_t: t,
    })
}

/// Tangent predictor and Newton corrector from `t = 0` to `t = 1`.
pub fn continuation(
    sys: &dyn ContinuationSystem,
    u0: &[f64],
    opts: &ContinuationOptions,
) -> Result<Vec<ContinuationState>> {
    let (u, rn, it) = newton_correct(sys, u0, 0.0, opts)?;
    let mut states = vec![ContinuationState {
        t: 0.0,
        min_margin: sys.min_margin(&u, 0.0)?,
        u,
        residual_norm: rn,
        newton_iterations: it,
    }];
    let mut dt = opts.dt_init;
    loop {
        let cur = states.last().expect("non-empty");
        if cur.t >= 1.0 {
            return Ok(states);
        }
        let t = cur.t;
        let step = dt.min(1.0 - t);
        let t_new = if t + step >= 1.0 - 1e-14 { 1.0 } else { t + step };
        let gt: Vec<f64> = sys.dt(&cur.u, t)?.iter().map(|x| -x).collect();
        let tangent = solve(sys.jacobian(&cur.u, t)?, &gt).unwrap_or_else(|_| vec![0.0; cur.u.len()]);
        let mut predicted: Vec<f64> = cur.u.iter().zip(&tangent).map(|(a, v)| a + (t_new - t) * v).collect();
        if sys.residual(&predicted, t_new).is_err() {
            predicted = cur.u.clone();
        }
        match newton_correct(sys, &predicted, t_new, opts) {
            Ok((u, rn, it)) => {
                let margin = sys.min_margin(&u, t_new)?;
                states.push(ContinuationState {
                    t: t_new,
                    u,
                    residual_norm: rn,
                    min_margin: margin,
                    newton_iterations: it,
                });
                dt = (2.0 * dt).min(opts.dt_max);
            }
            Err(_) => {
                dt *= 0.5;
                if dt < opts.dt_min {
                    return Err(Sigma2Error::NonConvergence {
                        reason: "continuation step underflow".into(),
                        last_good_t: t,
                    });
                }
            }
        }
    }
}

/// `max |J − J_FD| / max(1, max |J|)` with fourth-order central differences.
///
/// Column `j` is differenced on the steps `step·(1 + |u_j|)/2^k`, `k < 16`, and the
/// estimate closest to its successor is used. Steps whose stencil leaves the
/// admissible set are skipped.
pub fn jacobian_fd_discrepancy(sys: &dyn ContinuationSystem, u: &[f64], t: f64, step: f64) -> Result<f64> {
    let jac = sys.jacobian(u, t)?;
    let scale = jac.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
    let mut worst = 0.0_f64;
    let mut up = u.to_vec();
    for j in 0..u.len() {
        let mut column = |hj: f64| -> Result<Vec<f64>> {
            let mut eval = |k: f64| {
                up[j] = u[j] + k * hj;
                let r = sys.residual(&up, t);
                up[j] = u[j];
                r
            };
            let (p2, p1, m1, m2) = (eval(2.0)?, eval(1.0)?, eval(-1.0)?, eval(-2.0)?);
            Ok((0..u.len()).map(|i| (-p2[i] + 8.0 * p1[i] - 8.0 * m1[i] + m2[i]) / (12.0 * hj)).collect())
        };
        let h0 = step * (1.0 + u[j].abs());
        let estimates: Vec<Vec<f64>> = (0..16).filter_map(|k| column(h0 / 2f64.powi(k)).ok()).collect();
        let best = estimates
            .windows(2)
            .map(|w| (w[0].iter().zip(&w[1]).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())), &w[1]))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .ok_or_else(|| Sigma2Error::Inadmissible(format!("no admissible difference stencil for column {j}")))?
            .1;
        for (i, fd) in best.iter().enumerate() {
            worst = worst.max((fd - jac[(i, j)]).abs());
        }
    }
    Ok(worst / scale)
}

/// One accepted state of the existence homotopy.
#[derive(Clone, Debug, PartialEq)]
pub struct PathState {
    pub t: f64,
    pub zeta: f64,
    /// Isotropic eigenvalue of `S_g`.
    pub s_g: f64,
    /// Node values of `u`.
    pub u: Vec<f64>,
    /// Ghost values beyond each boundary, in boundary order.
    pub ghosts: Vec<f64>,
    pub residual_norm: f64,
    /// Largest residual of the boundary rows.
    pub boundary_residual: f64,
    pub min_margin: f64,
    /// `(1 − t)(∫e^{−(n+1)u})^{2/(n+1)}`.
    pub volume_term: f64,
    /// `max σ₂^{1/2}(A_g + S_g)`.
    pub background_bound: f64,
}

impl PathState {
    /// The volume term is dominated by the background bound.
    pub fn monotone_ok(&self) -> bool {
        self.volume_term <= self.background_bound * (1.0 + 1e-9)
    }
}

/// Traces the existence homotopy from `u = 0` at `t = 0` to `t = 1` on a
/// geometry with minimal boundary; `steps` sets the initial step `1/steps`.
pub fn trace_homotopy(
    grid: &Grid,
    f: &(dyn Fn(f64) -> f64 + Sync),
    c: &(dyn Fn(f64) -> f64 + Sync),
    f0: f64,
    steps: usize,
) -> Result<Vec<PathState>> {
    if grid.geom.boundaries().iter().any(|b| b.h_g.abs() > 1e-12) {
        return Err(invalid("the homotopy needs a geometry with h_g = 0"));
    }
    if !(f0 >= 0.0) {
        return Err(invalid("f0 must be non-negative"));
    }
    for &s in &grid.s {
        if !(f(s) > 0.0) {
            return Err(invalid(format!("f must be positive, f({s}) = {}", f(s))));
        }
    }
    for b in grid.geom.boundaries() {
        if !(c(b.s) >= 0.0) {
            return Err(invalid("c must be non-negative"));
        }
    }
    let problem = PathProblem { grid, f, c, f0 };
    let opts = ContinuationOptions {
        dt_init: 1.0 / steps.max(1) as f64,
        ..ContinuationOptions::default()
    };
    let states = continuation(&problem, &vec![0.0; grid.unknowns()], &opts)?;
    states
        .into_iter()
        .map(|s| {
            let rows = path_residual(&problem, &s.u, s.t)?;
            let boundary_residual = rows[grid.nodes()..].iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            Ok(PathState {
            t: s.t,
            zeta: zeta(s.t),
            s_g: problem.s_g(s.t),
            volume_term: problem.volume_term(&s.u, s.t),
            background_bound: problem.background_bound(s.t),
            u: s.u[..grid.nodes()].to_vec(),
            ghosts: s.u[grid.nodes()..].to_vec(),
            residual_norm: s.residual_norm,
            boundary_residual,
            min_margin: s.min_margin,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpsilonSolution {
    pub eps: f64,
    /// All unknowns (nodes then ghosts).
    pub u: Vec<f64>,
    pub residual_norm: f64,
    pub eps_u_min: f64,
    pub eps_u_max: f64,
    pub eps_u_mean: f64,
    /// `log(min f/(1 + min f))` with `f = σ₂^{1/2}(A_g)`.
    pub sandwich_lower: f64,
    /// `|log max σ₂(A_g)|`.
    pub sandwich_upper: f64,
    pub continuation_steps: usize,
}

impl EpsilonSolution {
    pub fn sandwich_ok(&self) -> bool {
        let slack = 1e-9 * (1.0 + self.sandwich_upper.abs());
        self.sandwich_lower - slack <= self.eps_u_min && self.eps_u_max <= self.sandwich_upper + slack
    }
}

/// Solves the `t = 1` member of the ε-problem by continuation from `u = 0`.
pub fn solve_epsilon_eigen(grid: &Grid, eps: f64) -> Result<EpsilonSolution> {
    if !(eps > 0.0) {
        return Err(invalid("eps must be positive"));
    }
    let f = grid.geom.background_curvature();
    if !(f > 0.0) {
        return Err(invalid("the eigenvalue problem needs a background with A_g in the positive cone"));
    }
    let sys = EpsilonEigenSystem { grid, eps };
    let states = continuation(&sys, &vec![0.0; grid.unknowns()], &ContinuationOptions::default())?;
    let last = states.last().expect("non-empty").clone();
    let nodes = &last.u[..grid.nodes()];
    let (mn, mx) = nodes
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    Ok(EpsilonSolution {
        eps,
        eps_u_min: eps * mn,
        eps_u_max: eps * mx,
        eps_u_mean: eps * grid.mean(&last.u),
        residual_norm: last.residual_norm,
        sandwich_lower: (f / (1.0 + f)).ln(),
        sandwich_upper: (f * f).ln().abs(),
        continuation_steps: states.len(),
        u: last.u,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenExtraction {
    /// Twice the limit of `ε ū_ε`, so that the limit problem reads `σ₂(A_v) = e^λ`.
    pub lambda: f64,
    pub exp_lambda: f64,
    /// Richardson extrapolation of `2 ε ū_ε` from the last two members of the sequence.
    pub lambda_richardson: f64,
    /// `(ε, ε ū_ε)` along the sequence.
    pub sequence: Vec<(f64, f64)>,
    /// Successive differences decrease.
    pub cauchy: bool,
    /// Mean-zero limit profile at the nodes.
    pub v: Vec<f64>,
    /// `‖σ₂^{1/2}(A_v) − e^{λ/2}‖_∞` together with the boundary rows.
    pub limit_residual: f64,
}

/// Bordered system `(v, λ)`: `σ₂^{1/2}(A_v) = e^{λ/2}`, `∂v/∂n = −h_g`,
/// `∫ v = 0`.
fn limit_residual(grid: &Grid, x: &[f64]) -> Result<Vec<f64>> {
    let m = grid.unknowns();
    let (v, lam) = (&x[..m], x[m]);
    let a = grid.geom.a_g();
    let mut out = Vec::with_capacity(m + 1);
    for i in 0..grid.nodes() {
        let loc = grid.local(v, i);
        let (f, _, _, _) = sqrt_sigma2(grid.geom.n, loc.lr + a, loc.lt + a, i)?;
        out.push(f - (0.5 * lam).exp());
    }
    for bc in grid.geom.boundaries() {
        out.push(grid.normal_derivative(v, &bc).0 + bc.h_g);
    }
    out.push(grid.mean(v));
    Ok(out)
}

fn limit_jacobian(grid: &Grid, x: &[f64]) -> Result<DMatrix<f64>> {
    let m = grid.unknowns();
    let (v, lam) = (&x[..m], x[m]);
    let a = grid.geom.a_g();
    let mut jac = DMatrix::zeros(m + 1, m + 1);
    for i in 0..grid.nodes() {
        let loc = grid.local(v, i);
        let (_, dfr, dft, _) = sqrt_sigma2(grid.geom.n, loc.lr + a, loc.lt + a, i)?;
        for k in 0..3 {
            jac[(i, loc.idx[k])] += dfr * loc.dlr[k] + dft * loc.dlt[k];
        }
        jac[(i, m)] = -0.5 * (0.5 * lam).exp();
    }
    for (k, bc) in grid.geom.boundaries().iter().enumerate() {
        for (j, c) in grid.normal_derivative(v, bc).1 {
            jac[(grid.nodes() + k, j)] += c;
        }
    }
    let total: f64 = grid.weights.iter().sum();
    for j in 0..grid.nodes() {
        jac[(m, j)] = grid.weights[j] / total;
    }
    Ok(jac)
}

/// Solves the ε-problems along `eps_sequence`, extrapolates `ε ū_ε` and
/// polishes the limit pair `(v, λ)` by Newton on the bordered system, which
/// removes the constant null direction of the Neumann problem.
pub fn extract_eigenvalue(grid: &Grid, eps_sequence: &[f64]) -> Result<EigenExtraction> {
    if eps_sequence.len() < 2 {
        return Err(invalid("need at least two eps values"));
    }
    if eps_sequence.windows(2).any(|w| !(w[1] < w[0])) || eps_sequence.iter().any(|e| !(*e > 0.0)) {
        return Err(invalid("eps sequence must be positive and strictly decreasing"));
    }
    let sols: Vec<EpsilonSolution> = eps_sequence
        .iter()
        .map(|&e| solve_epsilon_eigen(grid, e))
        .collect::<Result<_>>()?;
    let sequence: Vec<(f64, f64)> = sols.iter().map(|s| (s.eps, s.eps_u_mean)).collect();
    let diffs: Vec<f64> = sequence.windows(2).map(|w| (w[1].1 - w[0].1).abs()).collect();
    let cauchy = diffs.windows(2).all(|d| d[1] <= d[0] * (1.0 + 1e-9) + 1e-13);
    let k = sequence.len() - 1;
    let (e0, l0) = sequence[k - 1];
    let (e1, l1) = sequence[k];
    let lambda_richardson = 2.0 * (e0 * l1 - e1 * l0) / (e0 - e1);

    let last = &sols[k];
    let ubar = grid.mean(&last.u);
    let mut x: Vec<f64> = last.u.iter().map(|v| v - ubar).collect();
    x.push(lambda_richardson);
    let mut res = limit_residual(grid, &x)?;
    'newton: for _ in 0..30 {
        if inf_norm(&res) < 1e-12 {
            break;
        }
        let neg: Vec<f64> = res.iter().map(|r| -r).collect();
        let dx = solve(limit_jacobian(grid, &x)?, &neg)?;
        let merit = two_norm(&res);
        let mut alpha = 1.0;
        loop {
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + alpha * d).collect();
            if let Ok(rt) = limit_residual(grid, &trial) {
                if two_norm(&rt) <= (1.0 - 1e-4 * alpha) * merit {
                    x = trial;
                    res = rt;
                    break;
                }
            }
            alpha *= 0.5;
            if alpha < 1e-10 {
                if inf_norm(&res) < 1e-10 {
                    break 'newton;
                }
                return Err(Sigma2Error::NonConvergence {
                    reason: "limit polish line search failed".into(),
                    last_good_t: 1.0,
                });
            }
        }
    }
    let m = grid.unknowns();
    let lambda = x[m];
    Ok(EigenExtraction {
        lambda,
        exp_lambda: lambda.exp(),
        lambda_richardson,
        sequence,
        cauchy,
        v: x[..grid.nodes()].to_vec(),
        limit_residual: inf_norm(&res),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(1) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(2) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((sphere_area(4) - 8.0 * PI * PI / 3.0).abs() < 1e-13);
    }

    #[test]
    fn hemisphere_volumes_and_guard() {
        let g4 = ModelGeometry::hemisphere(4).unwrap();
        assert_eq!(g4.scale_b, 1.0);
        assert!((g4.volume() - 4.0 * PI * PI / 3.0).abs() < 1e-12);
        let g3 = ModelGeometry::hemisphere(3).unwrap();
        assert!((g3.volume() - PI * PI).abs() < 1e-12);
        assert!(g3.boundaries()[0].h_g.abs() < 1e-16);
        // A tiny cap has small volume and needs rescaling.
        let small = ModelGeometry::spherical_cap(4, 0.2).unwrap();
        assert!(small.scale_b > 1.0);
        assert!(small.positivity_margin() > 0.0);
        let half = ModelGeometry { scale_b: small.scale_b / 2.0, ..small };
        assert!(half.positivity_margin() <= 0.0);
    }

    #[test]
    fn quadrature_weights_integrate_volume() {
        for geom in [
            ModelGeometry::hemisphere(4).unwrap(),
            ModelGeometry::spherical_cap(3, 1.0).unwrap(),
            ModelGeometry::annulus(4, 1.0, 2.0).unwrap(),
        ] {
            let grid = Grid::new(geom, 41).unwrap();
            let total: f64 = grid.weights.iter().sum();
            assert!((total - geom.volume()).abs() < 1e-12 * geom.volume());
        }
    }

    #[test]
    fn zeta_ramp() {
        assert_eq!(zeta(0.0), 0.0);
        assert_eq!(zeta(0.5), 1.0);
        assert_eq!(zeta(0.8), 1.0);
        assert!((zeta(0.25) - 0.5).abs() < 1e-15);
        let h = 1e-6;
        let fd = (zeta(0.2 + h) - zeta(0.2 - h)) / (2.0 * h);
        assert!((fd - zeta_prime(0.2)).abs() < 1e-8);
    }

    #[test]
    fn annulus_is_not_an_eigen_background() {
        let grid = Grid::new(ModelGeometry::annulus(4, 1.0, 2.0).unwrap(), 21).unwrap();
        assert!(solve_epsilon_eigen(&grid, 0.1).is_err());
    }
}
