//! Interior and boundary bubbles: the explicit solutions of the rescaled
//! limit equations `σ₂^{1/2}(g_v⁻¹ A_v) = f` on `ℝⁿ` and on the half-space
//! `{y_n ≥ −T}` with `∂v/∂y_n = −((n−2)/2) c v^{n/(n−2)}` on the wall.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::conformal::schouten_pow;
use crate::error::{invalid, Result};
use crate::radial::{radial_point_jet, RadialFunction};
use crate::symfunc::{binom2, sigma2, SymmetricMatrixN};

/// `(2 − n)/2`-power profile `A (1 + b ρ²)^{−(n−2)/2}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BubbleProfile {
    pub n: usize,
    pub amplitude: f64,
    pub b: f64,
}

impl RadialFunction for BubbleProfile {
    fn eval(&self, r: f64) -> (f64, f64, f64) {
        let k = 0.5 * (self.n as f64 - 2.0);
        let q = 1.0 + self.b * r * r;
        let u = self.amplitude * q.powf(-k);
        let du = -2.0 * k * self.b * r * u / q;
        let ddu = -2.0 * k * self.b * u / q + 4.0 * k * (k + 1.0) * self.b * self.b * r * r * u / (q * q);
        (u, du, ddu)
    }
}

/// The interior bubble `(1 + f/(2√C_n²) |y|²)^{(2−n)/2}`.
pub fn interior_bubble(n: usize, f: f64) -> Result<BubbleProfile> {
    if n < 3 {
        return Err(invalid("bubbles need n >= 3"));
    }
    if !(f > 0.0) {
        return Err(invalid(format!("curvature value must be positive, got {f}")));
    }
    Ok(BubbleProfile {
        n,
        amplitude: 1.0,
        b: f / (2.0 * binom2(n).sqrt()),
    })
}

/// Parameters of the boundary bubble with the wall at `y_n = −T`, `T = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BubbleParams {
    pub n: usize,
    pub f: f64,
    pub c: f64,
    pub b: f64,
    /// Distance from the bubble centre to the wall.
    pub ttilde_c: f64,
    /// Normal coordinate of the bubble centre.
    pub ybar_n: f64,
    /// Scale of the spherical cap.
    pub lambda_cap: f64,
    /// Signed cap parameter.
    pub t_c: f64,
    /// Wall offset `T`; the wall is `{y_n = −T}`.
    pub wall_t: f64,
}

pub fn make_bubble_params(n: usize, f: f64, c: f64) -> Result<BubbleParams> {
    if n < 3 {
        return Err(invalid("bubbles need n >= 3"));
    }
    if !(f > 0.0) {
        return Err(invalid(format!("curvature value must be positive, got {f}")));
    }
    if !(c >= 0.0) {
        return Err(invalid(format!("boundary curvature must be non-negative, got {c}")));
    }
    let cn = binom2(n);
    let sc = cn.sqrt();
    let b = f / (2.0 * sc) * (1.0 + c * c * sc / (2.0 * f)).powi(2);
    let ttilde_c = c / (2.0 * f).sqrt() * cn.powf(0.25) / b.sqrt();
    let lambda_cap = sc / (2.0 * f);
    Ok(BubbleParams {
        n,
        f,
        c,
        b,
        ttilde_c,
        ybar_n: -ttilde_c,
        lambda_cap,
        t_c: -c * lambda_cap.sqrt(),
        wall_t: 0.0,
    })
}

/// Residuals of the closed-form relations among the bubble parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BubbleIdentities {
    pub b: f64,
    pub ttilde_c: f64,
    pub lambda_cap: f64,
    pub t_c: f64,
    pub fixed_point: f64,
    /// `T̃_c − |ȳ_n + T|`.
    pub centre_offset: f64,
    /// `|T_c| − √b T̃_c`.
    pub cap_scaling: f64,
    /// `(n−2) a⁻¹ b x̄_n − c′` with `c′ = −(n−2)c/2` the coefficient of
    /// `∂u/∂x_n = c′ u^{n/(n−2)}`.
    pub liouville: f64,
    /// `F(2 a⁻² b I) − f`.
    pub liouville_curvature: f64,
}

impl BubbleIdentities {
    pub fn max_abs(&self) -> f64 {
        [
            self.b,
            self.ttilde_c,
            self.lambda_cap,
            self.t_c,
            self.fixed_point,
            self.centre_offset,
            self.cap_scaling,
            self.liouville,
            self.liouville_curvature,
        ]
        .iter()
        .fold(0.0_f64, |m, x| m.max(x.abs()))
    }
}

impl BubbleParams {
    /// The profile `v` as `(a/(1 + b|y − x̄|²))^{(n−2)/2}`: returns `(a, b, x̄_n)`.
    pub fn liouville_form(&self) -> (f64, f64, f64) {
        let a = (2.0 * self.b * binom2(self.n).sqrt() / self.f).sqrt();
        (a, self.b, self.ybar_n + self.wall_t)
    }

    pub fn identities(&self) -> BubbleIdentities {
        let cn = binom2(self.n);
        let sc = cn.sqrt();
        let (f, c, b) = (self.f, self.c, self.b);
        let m = self.n as f64 - 2.0;
        let (a, lb, xbar) = self.liouville_form();
        BubbleIdentities {
            b: b - f / (2.0 * sc) * (1.0 + c * c * sc / (2.0 * f)).powi(2),
            ttilde_c: self.ttilde_c - c / (2.0 * f).sqrt() * cn.powf(0.25) / b.sqrt(),
            lambda_cap: self.lambda_cap - sc / (2.0 * f),
            t_c: self.t_c + c * self.lambda_cap.sqrt(),
            fixed_point: self.ybar_n * self.ybar_n * b - (2.0 / f).sqrt() * cn.powf(0.25) * b.sqrt() + 1.0,
            centre_offset: self.ttilde_c - (self.ybar_n + self.wall_t).abs(),
            cap_scaling: self.t_c.abs() - b.sqrt() * self.ttilde_c,
            liouville: m * lb * xbar / a + 0.5 * m * c,
            liouville_curvature: sc * 2.0 * lb / (a * a) - f,
        }
    }
}

/// A bubble centred at `ȳ e_n`, evaluated on points of `ℝⁿ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryBubble {
    pub profile: BubbleProfile,
    pub centre_n: f64,
    pub wall: f64,
}

pub fn boundary_bubble(params: &BubbleParams) -> BoundaryBubble {
    let m = params.n as f64 - 2.0;
    let sc = binom2(params.n).sqrt();
    let amplitude = params.f.powf(-m / 4.0) * (2.0 * params.b * sc).powf(m / 4.0);
    BoundaryBubble {
        profile: BubbleProfile {
            n: params.n,
            amplitude,
            b: params.b,
        },
        centre_n: params.ybar_n,
        wall: -params.wall_t,
    }
}

impl BoundaryBubble {
    /// The same amplitude with the concentration rate multiplied by `factor`.
    pub fn with_rate_factor(&self, factor: f64) -> Self {
        let mut out = *self;
        out.profile.b *= factor;
        out
    }

    fn shifted(&self, y: &[f64]) -> Vec<f64> {
        let mut x = y.to_vec();
        if let Some(last) = x.last_mut() {
            *last -= self.centre_n;
        }
        x
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        let x = self.shifted(y);
        self.profile.value(x.iter().map(|v| v * v).sum::<f64>().sqrt())
    }

    /// `(v, ∇v, ∇²v)` at `y`.
    pub fn jet(&self, y: &[f64]) -> Result<(f64, Vec<f64>, SymmetricMatrixN)> {
        let x = self.shifted(y);
        if x.iter().all(|v| *v == 0.0) {
            let (u, _, ddu) = self.profile.eval(0.0);
            return Ok((u, vec![0.0; y.len()], SymmetricMatrixN::scalar(y.len(), ddu)?));
        }
        radial_point_jet(&self.profile, &x)
    }

    /// `σ₂^{1/2}(g_v⁻¹ A_v)` at `y` via the dense Schouten tensor.
    pub fn curvature(&self, y: &[f64]) -> Result<f64> {
        let n = y.len();
        let (v, grad, hess) = self.jet(y)?;
        let a = schouten_pow(n, v, &grad, &hess, &SymmetricMatrixN::zeros(n)?)?;
        let s2 = sigma2(&a) / v.powf(8.0 / (n as f64 - 2.0));
        Ok(s2.max(0.0).sqrt())
    }

    /// `∂v/∂y_n + ((n−2)/2) c v^{n/(n−2)}` at a wall point.
    pub fn neumann_residual(&self, y: &[f64], c: f64) -> Result<f64> {
        let n = y.len() as f64;
        let (v, grad, _) = self.jet(y)?;
        Ok(grad[y.len() - 1] + 0.5 * (n - 2.0) * c * v.powf(n / (n - 2.0)))
    }
}

/// Interior and wall sample points for residual checks.
#[derive(Clone, Debug, PartialEq)]
pub struct BubbleGrid {
    pub interior: Vec<Vec<f64>>,
    pub wall: Vec<Vec<f64>>,
}

impl BubbleGrid {
    /// `count` interior points in `[−R, R]^{n−1} × [0, R]` and `count` wall
    /// points in `[−R, R]^{n−1} × {0}`, from a seeded stream.
    pub fn random(n: usize, count: usize, extent: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut point = |wall: bool| -> Vec<f64> {
            let mut p: Vec<f64> = (0..n).map(|_| rng.random_range(-extent..extent)).collect();
            p[n - 1] = if wall { 0.0 } else { p[n - 1].abs() };
            p
        };
        let interior = (0..count).map(|_| point(false)).collect();
        let wall = (0..count).map(|_| point(true)).collect();
        Self { interior, wall }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BubbleResiduals {
    pub interior_max: f64,
    pub boundary_max: f64,
    pub interior_points: usize,
    pub wall_points: usize,
}

/// Maximal residuals of an arbitrary bubble-shaped function against the
/// curvature `f` and wall coefficient `c`.
pub fn verify_function(v: &BoundaryBubble, f: f64, c: f64, grid: &BubbleGrid) -> Result<BubbleResiduals> {
    let mut interior_max = 0.0_f64;
    for y in &grid.interior {
        if y.iter().map(|x| x * x).sum::<f64>() > 1e6 {
            continue;
        }
        interior_max = interior_max.max((v.curvature(y)? - f).abs());
    }
    let mut boundary_max = 0.0_f64;
    for y in &grid.wall {
        boundary_max = boundary_max.max(v.neumann_residual(y, c)?.abs());
    }
    Ok(BubbleResiduals {
        interior_max,
        boundary_max,
        interior_points: grid.interior.len(),
        wall_points: grid.wall.len(),
    })
}

/// Residuals of the boundary bubble built from `params`.
pub fn verify_bubble(params: &BubbleParams, grid: &BubbleGrid) -> Result<BubbleResiduals> {
    verify_function(&boundary_bubble(params), params.f, params.c, grid)
}
