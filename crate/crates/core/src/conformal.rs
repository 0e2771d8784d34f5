//! Conformal change of the Schouten tensor and of boundary data, in the two
//! conventions used throughout the crate:
//!
//! * `Exp`: the metric `e^{-2u} g`;
//! * `Pow`: the metric `u^{4/(n-2)} g` with `u > 0`.
//!
//! All tensors are point values in a `g`-orthonormal frame. The module also
//! provides the blow-up rescaling `v(z) = s^{(n-2)/2} u(s z)` together with
//! cap averages of sampled profiles.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

use crate::error::{invalid, Result, Sigma2Error};
use crate::radial::RadialFunction;
use crate::symfunc::SymmetricMatrixN;

/// Default cap half-angle for boundary spherical averages.
pub const DEFAULT_CAP_ANGLE: f64 = PI / 4.0;

/// Conformal-factor convention.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Convention {
    /// `e^{-2u} g`
    Exp,
    /// `u^{4/(n-2)} g`
    Pow,
}

impl Convention {
    pub fn as_str(self) -> &'static str {
        match self {
            Convention::Exp => "exp",
            Convention::Pow => "pow",
        }
    }
}

impl std::str::FromStr for Convention {
    type Err = Sigma2Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp" => Ok(Convention::Exp),
            "pow" => Ok(Convention::Pow),
            other => Err(invalid(format!("unknown convention '{other}'"))),
        }
    }
}

/// Background Schouten tensor and first/second derivatives of the conformal
/// factor at a single point.
#[derive(Clone, Debug, PartialEq)]
pub struct PointFrameData {
    pub a_g: SymmetricMatrixN,
    pub u: f64,
    pub grad_u: Vec<f64>,
    pub hess_u: SymmetricMatrixN,
}

impl PointFrameData {
    pub fn new(
        a_g: SymmetricMatrixN,
        u: f64,
        grad_u: Vec<f64>,
        hess_u: SymmetricMatrixN,
    ) -> Result<Self> {
        let n = a_g.dim();
        if grad_u.len() != n {
            return Err(Sigma2Error::DimensionMismatch {
                expected: n,
                got: grad_u.len(),
            });
        }
        if hess_u.dim() != n {
            return Err(Sigma2Error::DimensionMismatch {
                expected: n,
                got: hess_u.dim(),
            });
        }
        Ok(Self {
            a_g,
            u,
            grad_u,
            hess_u,
        })
    }

    pub fn dim(&self) -> usize {
        self.a_g.dim()
    }
}

/// Schouten tensor of `e^{-2u} g`:
/// `A_u = ∇²u + du⊗du − ½|∇u|² g + A_g`.
pub fn schouten_exp(p: &PointFrameData) -> Result<SymmetricMatrixN> {
    let n = p.dim();
    let g2: f64 = p.grad_u.iter().map(|x| x * x).sum();
    SymmetricMatrixN::from_fn(n, |i, j| {
        let mut v = p.hess_u.get(i, j) + p.grad_u[i] * p.grad_u[j] + p.a_g.get(i, j);
        if i == j {
            v -= 0.5 * g2;
        }
        v
    })
}

/// Schouten tensor of `u^{4/(n-2)} g`:
/// `A_u = −(2/(n−2))∇²u/u + (2n/(n−2)²) du⊗du/u² − (2/(n−2)²)|∇u|²/u² g + A_g`.
pub fn schouten_pow(
    n: usize,
    u: f64,
    grad_u: &[f64],
    hess_u: &SymmetricMatrixN,
    a_g: &SymmetricMatrixN,
) -> Result<SymmetricMatrixN> {
    if n < 3 {
        return Err(invalid("power convention needs n >= 3"));
    }
    if !(u > 0.0) {
        return Err(invalid(format!("power convention needs u > 0, got {u}")));
    }
    for d in [grad_u.len(), hess_u.dim(), a_g.dim()] {
        if d != n {
            return Err(Sigma2Error::DimensionMismatch {
                expected: n,
                got: d,
            });
        }
    }
    let m = (n - 2) as f64;
    let g2: f64 = grad_u.iter().map(|x| x * x).sum();
    let u2 = u * u;
    SymmetricMatrixN::from_fn(n, |i, j| {
        let mut v = -2.0 / m * hess_u.get(i, j) / u
            + 2.0 * n as f64 / (m * m) * grad_u[i] * grad_u[j] / u2
            + a_g.get(i, j);
        if i == j {
            v -= 2.0 / (m * m) * g2 / u2;
        }
        v
    })
}

/// Boundary data at a point: mean curvature `h_g = tr L/(n−1)` for the
/// inward normal, trace-free second fundamental form `L̊` in a tangent
/// orthonormal frame, and the inward normal derivative of the conformal
/// factor.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryPointData {
    pub h_g: f64,
    pub lring: SymmetricMatrixN,
    pub du_dn: f64,
}

impl BoundaryPointData {
    pub fn new(h_g: f64, lring: SymmetricMatrixN, du_dn: f64) -> Result<Self> {
        let tr = lring.trace();
        if tr.abs() > 1e-12 * (1.0 + lring.max_abs()) {
            return Err(invalid(format!("L-ring must be trace-free, trace = {tr:e}")));
        }
        Ok(Self { h_g, lring, du_dn })
    }

    /// Ambient dimension (tangent dimension plus one).
    pub fn ambient_dim(&self) -> usize {
        self.lring.dim() + 1
    }
}

/// Boundary data of the conformal metric.
///
/// `Exp`: `h ↦ (∂u/∂n + h) e^u`, `L̊ ↦ e^{-u} L̊`.
/// `Pow`: `h ↦ (h u − (2/(n−2)) ∂u/∂n) / u^{n/(n−2)}`, `L̊ ↦ u^{2/(n−2)} L̊`.
///
/// `L̊` components stay in the background frame; the normal derivative is
/// carried through unchanged.
pub fn boundary_conformal(
    b: &BoundaryPointData,
    u: f64,
    convention: Convention,
) -> Result<BoundaryPointData> {
    let n = b.ambient_dim();
    match convention {
        Convention::Exp => Ok(BoundaryPointData {
            h_g: (b.du_dn + b.h_g) * u.exp(),
            lring: b.lring.scaled((-u).exp()),
            du_dn: b.du_dn,
        }),
        Convention::Pow => {
            if n < 3 {
                return Err(invalid("power convention needs n >= 3"));
            }
            if !(u > 0.0) {
                return Err(invalid(format!("power convention needs u > 0, got {u}")));
            }
            let m = (n - 2) as f64;
            Ok(BoundaryPointData {
                h_g: (b.h_g * u - 2.0 / m * b.du_dn) / u.powf(n as f64 / m),
                lring: b.lring.scaled(u.powf(2.0 / m)),
                du_dn: b.du_dn,
            })
        }
    }
}

/// Mean curvature the power-convention metric must have for the boundary
/// condition `(2/(n−2)) ∂u/∂n = −c u^{n/(n−2)} + h_g u`: returns the `c`
/// realised by the given data.
pub fn pow_boundary_mean_curvature(n: usize, h_g: f64, u: f64, du_dn: f64) -> Result<f64> {
    let lring = SymmetricMatrixN::zeros(n - 1)?;
    let b = BoundaryPointData::new(h_g, lring, du_dn)?;
    Ok(boundary_conformal(&b, u, Convention::Pow)?.h_g)
}

/// An axially symmetric function `u(r, ϑ)` sampled on a uniform tensor grid,
/// `ϑ` the angle from the inward normal axis `e_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct AxialProfile {
    pub n: usize,
    pub r_min: f64,
    pub dr: f64,
    pub n_theta: usize,
    /// `values[i][j] = u(r_min + i·dr, j·π/n_theta)`
    pub values: Vec<Vec<f64>>,
}

impl AxialProfile {
    pub fn sample(
        n: usize,
        r_min: f64,
        r_max: f64,
        n_r: usize,
        n_theta: usize,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        if n < 3 || n_r < 4 || n_theta < 4 || !(r_max > r_min) || r_min < 0.0 {
            return Err(invalid("axial profile needs n >= 3, >= 4 nodes per axis and 0 <= r_min < r_max"));
        }
        let dr = (r_max - r_min) / n_r as f64;
        let dth = PI / n_theta as f64;
        let values = (0..=n_r)
            .map(|i| {
                let r = r_min + i as f64 * dr;
                (0..=n_theta).map(|j| f(r, j as f64 * dth)).collect()
            })
            .collect();
        Ok(Self {
            n,
            r_min,
            dr,
            n_theta,
            values,
        })
    }

    pub fn r_max(&self) -> f64 {
        self.r_min + (self.values.len() - 1) as f64 * self.dr
    }

    /// Piecewise-cubic Lagrange interpolation in both coordinates.
    pub fn eval(&self, r: f64, theta: f64) -> Result<f64> {
        let tol = 1e-12 * (1.0 + self.r_max());
        if r < self.r_min - tol || r > self.r_max() + tol {
            return Err(invalid(format!(
                "radius {r} outside sampled range [{}, {}]",
                self.r_min,
                self.r_max()
            )));
        }
        let dth = PI / self.n_theta as f64;
        let (ri, rw) = cubic_stencil((r - self.r_min) / self.dr, self.values.len());
        let (ti, tw) = cubic_stencil(theta / dth, self.n_theta + 1);
        let mut s = 0.0;
        for a in 0..4 {
            let row = &self.values[ri + a];
            let mut inner = 0.0;
            for b in 0..4 {
                inner += tw[b] * row[ti + b];
            }
            s += rw[a] * inner;
        }
        Ok(s)
    }
}

fn cubic_stencil(x: f64, len: usize) -> (usize, [f64; 4]) {
    let base = (x.floor() as isize - 1).clamp(0, len as isize - 4) as usize;
    let t = x - base as f64;
    let mut w = [0.0; 4];
    for (k, wk) in w.iter_mut().enumerate() {
        let mut p = 1.0;
        for m in 0..4 {
            if m != k {
                p *= (t - m as f64) / (k as f64 - m as f64);
            }
        }
        *wk = p;
    }
    (base, w)
}

/// Blow-up rescaling of a sampled profile: `v(z) = s^{(n−2)/2} u(s z)`.
pub fn rescale_blowup(profile: &AxialProfile, s: f64) -> Result<AxialProfile> {
    if !(s > 0.0) {
        return Err(invalid("rescaling factor must be positive"));
    }
    let amp = s.powf((profile.n as f64 - 2.0) / 2.0);
    Ok(AxialProfile {
        n: profile.n,
        r_min: profile.r_min / s,
        dr: profile.dr / s,
        n_theta: profile.n_theta,
        values: profile
            .values
            .iter()
            .map(|row| row.iter().map(|v| amp * v).collect())
            .collect(),
    })
}

/// Average of `u(r, ·)` over the cap `{ϑ ≤ cap_angle}` of the sphere of
/// radius `r`, with the surface weight `sin^{n−2} ϑ`.
pub fn cap_average(profile: &AxialProfile, r: f64, cap_angle: f64) -> Result<f64> {
    if !(cap_angle > 0.0 && cap_angle <= PI) {
        return Err(invalid("cap angle must lie in (0, π]"));
    }
    let rule = GaussLegendre::new(NonZeroUsize::new(32).expect("nonzero"));
    let w = |t: f64| t.sin().powi(profile.n as i32 - 2);
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, wt) in rule.iter() {
        let t = 0.5 * cap_angle * (x + 1.0);
        let weight = wt * w(t);
        num += weight * profile.eval(r, t)?;
        den += weight;
    }
    Ok(num / den)
}

/// `r^{(n−2)/2} ū(r)`, the quantity preserved by the blow-up rescaling.
pub fn weighted_cap_average(profile: &AxialProfile, r: f64, cap_angle: f64) -> Result<f64> {
    Ok(r.powf((profile.n as f64 - 2.0) / 2.0) * cap_average(profile, r, cap_angle)?)
}

/// Analytic blow-up rescaling of a radial function.
#[derive(Clone, Debug)]
pub struct Rescaled<F> {
    pub inner: F,
    pub n: usize,
    pub s: f64,
}

impl<F: RadialFunction> Rescaled<F> {
    pub fn new(inner: F, n: usize, s: f64) -> Result<Self> {
        if !(s > 0.0) {
            return Err(invalid("rescaling factor must be positive"));
        }
        Ok(Self { inner, n, s })
    }

    fn amp(&self) -> f64 {
        self.s.powf((self.n as f64 - 2.0) / 2.0)
    }
}

impl<F: RadialFunction> RadialFunction for Rescaled<F> {
    fn eval(&self, r: f64) -> (f64, f64, f64) {
        let (u, du, ddu) = self.inner.eval(self.s * r);
        let a = self.amp();
        (a * u, a * self.s * du, a * self.s * self.s * ddu)
    }
}
