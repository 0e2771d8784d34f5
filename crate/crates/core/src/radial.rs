//! Radial reductions on flat space.
//!
//! For a radial conformal factor the Schouten tensor has one radial
//! eigenvalue `λ_r` and one tangential eigenvalue `λ_t` of multiplicity
//! `n − 1`, so `σ₂ = (n−1) λ_r λ_t + C_{n−1}² λ_t²`. Everything here is built
//! on that reduction: degenerate `σ₂ = 0` families, the exponential barrier
//! and the shooting integrator for annular σ₂-Yamabe solutions.

use crate::conformal::Convention;
use crate::error::{invalid, Result, Sigma2Error};
use crate::symfunc::{binom2, cone_membership, mu_gamma_plus, ConeVerdict, SymmetricMatrixN, DEFAULT_CONE_TOL};

/// A function of `r = |x|` with its first two derivatives.
pub trait RadialFunction {
    /// `(u, u′, u″)` at radius `r`.
    fn eval(&self, r: f64) -> (f64, f64, f64);

    fn value(&self, r: f64) -> f64 {
        self.eval(r).0
    }

    fn sample(&self, r: f64) -> RadialSample {
        let (u, du, ddu) = self.eval(r);
        RadialSample { r, u, du, ddu }
    }
}

impl<F: RadialFunction + ?Sized> RadialFunction for &F {
    fn eval(&self, r: f64) -> (f64, f64, f64) {
        (**self).eval(r)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialSample {
    pub r: f64,
    pub u: f64,
    pub du: f64,
    pub ddu: f64,
}

/// A sampled radial function with the convention it is read in.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialProfile {
    pub convention: Convention,
    pub n: usize,
    pub samples: Vec<RadialSample>,
}

impl RadialProfile {
    pub fn new(convention: Convention, n: usize, samples: Vec<RadialSample>) -> Result<Self> {
        if n < 3 {
            return Err(invalid("radial profiles need n >= 3"));
        }
        for w in samples.windows(2) {
            if !(w[1].r > w[0].r) {
                return Err(invalid("radii must be strictly increasing"));
            }
        }
        if let Some(s) = samples.first() {
            if !(s.r > 0.0) {
                return Err(invalid("radii must be positive"));
            }
        }
        if convention == Convention::Pow && samples.iter().any(|s| !(s.u > 0.0)) {
            return Err(invalid("power convention requires u > 0"));
        }
        Ok(Self {
            convention,
            n,
            samples,
        })
    }

    pub fn from_function(
        f: &dyn RadialFunction,
        convention: Convention,
        n: usize,
        radii: &[f64],
    ) -> Result<Self> {
        Self::new(convention, n, radii.iter().map(|&r| f.sample(r)).collect())
    }

    /// Rows `(r, u, du, ddu, sigma1, sigma2)` of the Schouten eigenvalues.
    pub fn table(&self) -> Result<Vec<[f64; 6]>> {
        self.samples
            .iter()
            .map(|s| {
                let (lr, lt) = radial_schouten_eigs(*s, self.n, self.convention)?;
                let (s1, s2) = radial_sigmas(lr, lt, self.n);
                Ok([s.r, s.u, s.du, s.ddu, s1, s2])
            })
            .collect()
    }
}

/// Radial and tangential Schouten eigenvalues on a flat background.
pub fn radial_schouten_eigs(p: RadialSample, n: usize, convention: Convention) -> Result<(f64, f64)> {
    if !(p.r > 0.0) {
        return Err(invalid(format!("radius must be positive, got {}", p.r)));
    }
    if n < 3 {
        return Err(invalid("radial reduction needs n >= 3"));
    }
    match convention {
        Convention::Exp => Ok((p.ddu + 0.5 * p.du * p.du, p.du / p.r - 0.5 * p.du * p.du)),
        Convention::Pow => {
            if !(p.u > 0.0) {
                return Err(invalid(format!("power convention needs u > 0, got {}", p.u)));
            }
            let m = (n - 2) as f64;
            let q = p.du / p.u;
            let lr = -2.0 / m * p.ddu / p.u + 2.0 * (n - 1) as f64 / (m * m) * q * q;
            let lt = -2.0 / m * q / p.r - 2.0 / (m * m) * q * q;
            Ok((lr, lt))
        }
    }
}

/// `(σ₁, σ₂)` of the eigenvalue vector `(λ_r, λ_t, …, λ_t)`.
pub fn radial_sigmas(lr: f64, lt: f64, n: usize) -> (f64, f64) {
    let k = (n - 1) as f64;
    (lr + k * lt, k * lr * lt + binom2(n - 1) * lt * lt)
}

/// The eigenvalue vector `(λ_r, λ_t, …, λ_t)` of length `n`.
pub fn radial_eigen_vector(lr: f64, lt: f64, n: usize) -> Vec<f64> {
    let mut v = vec![lt; n];
    v[0] = lr;
    v
}

/// σ₂ of `g_u⁻¹ A_u`, i.e. the eigenvalue σ₂ divided by the fourth power of
/// the conformal length scale.
pub fn geometric_sigma2(p: RadialSample, n: usize, convention: Convention) -> Result<f64> {
    let (lr, lt) = radial_schouten_eigs(p, n, convention)?;
    let s2 = radial_sigmas(lr, lt, n).1;
    Ok(match convention {
        Convention::Exp => s2 * (4.0 * p.u).exp(),
        Convention::Pow => s2 / p.u.powf(8.0 / (n as f64 - 2.0)),
    })
}

/// Value, gradient and Hessian of `u(|x|)` at a point `x ≠ 0`.
pub fn radial_point_jet(f: &dyn RadialFunction, x: &[f64]) -> Result<(f64, Vec<f64>, SymmetricMatrixN)> {
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(r > 0.0) {
        return Err(invalid("radial jet undefined at the origin"));
    }
    let (u, du, ddu) = f.eval(r);
    let e: Vec<f64> = x.iter().map(|v| v / r).collect();
    let grad = e.iter().map(|v| du * v).collect();
    let hess = SymmetricMatrixN::from_fn(x.len(), |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        ddu * e[i] * e[j] + du / r * (delta - e[i] * e[j])
    })?;
    Ok((u, grad, hess))
}

/// Constants of the degenerate radial families.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DegenerateCase {
    /// `u = C₁ r^{−C₂}`, available when `μ_Γ⁺(n) = 1`.
    A { c1: f64, c2: f64 },
    /// `u = (C₃ r^{1−μ} + C₄)^{(n−2)/(μ−1)}`, available when `μ_Γ⁺(n) ≠ 1`.
    B { c3: f64, c4: f64 },
}

/// A member of the degenerate (`σ₂ = 0`) radial family, power convention.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DegenerateProfile {
    pub n: usize,
    pub mu: f64,
    pub case: DegenerateCase,
}

pub fn degenerate_family(n: usize, case: DegenerateCase) -> Result<DegenerateProfile> {
    let mu = mu_gamma_plus(n)?;
    let unit = (mu - 1.0).abs() < 1e-12;
    match case {
        DegenerateCase::A { c1, c2 } => {
            if !unit {
                return Err(invalid(format!("case a needs mu = 1 (n = 4), got n = {n}")));
            }
            if !(c1 > 0.0) || !(0.0..=(n - 2) as f64).contains(&c2) {
                return Err(invalid(format!(
                    "case a needs C1 > 0 and 0 <= C2 <= {}, got ({c1}, {c2})",
                    n - 2
                )));
            }
        }
        DegenerateCase::B { c3, c4 } => {
            if unit {
                return Err(invalid("case b needs mu != 1 (n != 4)"));
            }
            if !(c3 >= 0.0 && c4 >= 0.0 && c3 + c4 > 0.0) {
                return Err(invalid(format!(
                    "case b needs C3, C4 >= 0 with C3 + C4 > 0, got ({c3}, {c4})"
                )));
            }
        }
    }
    Ok(DegenerateProfile { n, mu, case })
}

impl RadialFunction for DegenerateProfile {
    fn eval(&self, r: f64) -> (f64, f64, f64) {
        match self.case {
            DegenerateCase::A { c1, c2 } => {
                let u = c1 * r.powf(-c2);
                (u, -c2 * u / r, c2 * (c2 + 1.0) * u / (r * r))
            }
            DegenerateCase::B { c3, c4 } => {
                let mu = self.mu;
                let p = (self.n as f64 - 2.0) / (mu - 1.0);
                let w = c3 * r.powf(1.0 - mu) + c4;
                let dw = c3 * (1.0 - mu) * r.powf(-mu);
                let ddw = -c3 * mu * (1.0 - mu) * r.powf(-mu - 1.0);
                let u = w.powf(p);
                let du = p * w.powf(p - 1.0) * dw;
                let ddu = p * (p - 1.0) * w.powf(p - 2.0) * dw * dw + p * w.powf(p - 1.0) * ddw;
                (u, du, ddu)
            }
        }
    }
}

/// Default exponential rate of the four-dimensional barrier.
pub const DEFAULT_BARRIER_RATE_N4: f64 = 8.0;

/// The barrier `v_δ = r^{−(n−2−δ)} e^{b r}` on the flat half-space.
#[derive(Clone, Debug, PartialEq)]
pub struct BarrierProfile {
    pub n: usize,
    pub delta: f64,
    pub rate_b: f64,
    /// Validity radius from the closed-form construction.
    pub r1: f64,
    /// Intermediate radii of the construction, in order.
    pub radius_chain: Vec<(&'static str, f64)>,
    /// Supremum of radii `r` with `σ₂ < 0` on all of `(0, r)`.
    pub r_empirical: f64,
}

pub fn barrier_profile(n: usize, delta: f64, rate_b: Option<f64>) -> Result<BarrierProfile> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(invalid(format!("delta must lie in (0, 1/2), got {delta}")));
    }
    let (rate_b, r1, chain) = match n {
        3 => {
            if let Some(b) = rate_b {
                if b != 1.0 {
                    return Err(invalid("the three-dimensional barrier uses rate 1"));
                }
            }
            let r1 = delta * (1.0 - delta);
            (1.0, r1, vec![("r1", r1)])
        }
        4 => {
            let b = rate_b.unwrap_or(DEFAULT_BARRIER_RATE_N4);
            if !(b > 0.0) {
                return Err(invalid("barrier rate must be positive"));
            }
            let d = delta;
            let r2 = (d * (2.0 - d)).sqrt() / (2.0 * b);
            let r3 = r2.min(d * (2.0 - d) / (b * (1.0 - d)));
            let r4 = r2.min(d * (2.0 - d) / (b * (3.0 - 2.0 * d)));
            let r5 = r4.min((2.0 - d) / (2.0 * b));
            let r1 = r5.min(d);
            (b, r1, vec![("r2", r2), ("r3", r3), ("r4", r4), ("r5", r5), ("r1", r1)])
        }
        _ => return Err(invalid(format!("barrier defined for n in {{3, 4}}, got {n}"))),
    };
    let mut bp = BarrierProfile {
        n,
        delta,
        rate_b,
        r1,
        radius_chain: chain,
        r_empirical: 0.0,
    };
    bp.r_empirical = bp.empirical_radius();
    Ok(bp)
}

impl BarrierProfile {
    fn m(&self) -> f64 {
        self.n as f64 - 2.0
    }

    /// Closed-form tangential quantity χ₁(r).
    pub fn chi1(&self, r: f64) -> f64 {
        let (m, d, b) = (self.m(), self.delta, self.rate_b);
        2.0 * d * (m - d) / (m * m * r * r) - 2.0 * b * b / (m * m) + 2.0 * (m - 2.0 * d) * b / (m * m * r)
    }

    /// Closed-form quantity χ₂(r) with `λ_r = χ₁ − χ₂`.
    pub fn chi2(&self, r: f64) -> f64 {
        let (m, d, b) = (self.m(), self.delta, self.rate_b);
        let n = self.n as f64;
        4.0 * d * (m - d) / (m * m * r * r) + (6.0 * m - 8.0 * d) * b / (m * m * r)
            - 2.0 * n * b * b / (m * m)
            + 2.0 * b * b / m
    }

    /// σ₂(D₁) = (n−1)(χ₁ − χ₂)χ₁ + C_{n−1}² χ₁².
    pub fn sigma2_closed_form(&self, r: f64) -> f64 {
        let c1 = self.chi1(r);
        let c2 = self.chi2(r);
        (self.n - 1) as f64 * (c1 - c2) * c1 + binom2(self.n - 1) * c1 * c1
    }

    /// σ₂ of the Schouten eigenvalues computed directly from `v_δ`.
    pub fn sigma2_direct(&self, r: f64) -> f64 {
        let p = self.sample(r);
        let (lr, lt) = radial_schouten_eigs(p, self.n, Convention::Pow).expect("r > 0 and v > 0");
        radial_sigmas(lr, lt, self.n).1
    }

    /// The comparison bound the barrier is designed to beat.
    pub fn bound(&self, r: f64) -> f64 {
        let d = self.delta;
        match self.n {
            3 => -3.0 * d * d * (1.0 - d) * (1.0 - d) / r.powi(4),
            _ => -3.0 * self.rate_b * d * (2.0 - d) / (4.0 * r.powi(3)),
        }
    }

    /// Radius below which the comparison bound is asserted.
    pub fn bound_radius(&self) -> f64 {
        match self.n {
            3 => self.r1,
            _ => self.radius_chain[0].1,
        }
    }

    /// A log-spaced grid of `count` radii in `[10^{-decades} r_max, r_max)`.
    pub fn log_grid(r_max: f64, count: usize, decades: f64) -> Vec<f64> {
        (0..count)
            .map(|k| r_max * 10f64.powf(-decades + decades * k as f64 / count as f64))
            .collect()
    }

    fn empirical_radius(&self) -> f64 {
        let grid = Self::log_grid(1e3 * self.r1.max(1.0), 2000, 12.0);
        let mut prev = grid[0];
        for &r in &grid {
            if self.sigma2_direct(r) >= 0.0 {
                let (mut lo, mut hi) = (prev, r);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.sigma2_direct(mid) < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return lo;
            }
            prev = r;
        }
        f64::INFINITY
    }
}

impl RadialFunction for BarrierProfile {
    fn eval(&self, r: f64) -> (f64, f64, f64) {
        let a = self.m() - self.delta;
        let b = self.rate_b;
        let v = r.powf(-a) * (b * r).exp();
        let q = -a / r + b;
        (v, v * q, v * (q * q + a / (r * r)))
    }
}

/// Integration controls for [`shoot_annulus`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShootOptions {
    pub step: f64,
    /// Repeat the integration at half the step and report the endpoint drift.
    pub check_halving: bool,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self {
            step: 1e-3,
            check_halving: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Termination {
    /// Integration reached the outer radius.
    Reached,
    /// The tangential eigenvalue reached zero: the state left the closed cone
    /// and the linear solve for `u″` lost its pivot.
    ConeExit { r: f64 },
    /// The conformal factor stopped being positive.
    NonPositive { r: f64 },
}

impl Termination {
    pub fn radius(&self) -> Option<f64> {
        match *self {
            Termination::Reached => None,
            Termination::ConeExit { r } | Termination::NonPositive { r } => Some(r),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShootDiagnostics {
    pub n: usize,
    pub r0: f64,
    pub c: f64,
    pub u1: f64,
    pub du1: f64,
    pub ddu1: f64,
    pub sup_u: f64,
    pub sup_inv_u: f64,
    pub sup_du: f64,
    /// Smallest cone margin `min(σ₁, σ₂)` over accepted nodes.
    pub min_margin: f64,
    pub all_admissible: bool,
    pub termination: Termination,
    pub steps: usize,
    /// Relative change of `u(R0)` when the step is halved.
    pub halving_drift: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShootResult {
    pub profile: RadialProfile,
    pub diagnostics: ShootDiagnostics,
}

/// `u″` from the normalized equation `σ₂^{1/2}(λ) = u^{4/(n−2)}` together with
/// `(λ_r, λ_t)`; `None` once `λ_t ≤ 0` or `u ≤ 0`.
pub fn shoot_second_derivative(n: usize, r: f64, u: f64, du: f64) -> Option<(f64, f64, f64)> {
    if !(u > 0.0) || !u.is_finite() || !du.is_finite() {
        return None;
    }
    let m = (n - 2) as f64;
    let q = du / u;
    let lt = -2.0 / m * q / r - 2.0 / (m * m) * q * q;
    if !(lt > 0.0) {
        return None;
    }
    let target = u.powf(8.0 / m);
    let lr = (target - binom2(n - 1) * lt * lt) / ((n - 1) as f64 * lt);
    let ddu = -0.5 * m * u * (lr - 2.0 * (n - 1) as f64 / (m * m) * q * q);
    Some((ddu, lr, lt))
}

/// Inner-boundary slope `u′(1) = −((n−2)/2) u₁ − ((n−2)/2) c u₁^{n/(n−2)}`.
pub fn initial_slope(n: usize, c: f64, u1: f64) -> f64 {
    let h = 0.5 * (n as f64 - 2.0);
    -h * u1 - h * c * u1.powf(n as f64 / (n as f64 - 2.0))
}

/// Inner value for which the annulus solution with `c = 0` is the
/// restriction of the global bubble `(2√C)^{(n−2)/4} (1 + r²)^{−(n−2)/2}`.
pub fn bubble_restriction_u1(n: usize) -> f64 {
    let m = n as f64 - 2.0;
    (2.0 * binom2(n).sqrt()).powf(m / 4.0) * 2f64.powf(-m / 2.0)
}

/// Inner value of family member `j` for `c < 0`: the tangential eigenvalue at
/// `r = 1` equals `p(1 − p/2)` with `p = 2^{−(j+1)}`, so the family
/// approaches the degenerate inner datum as `j` grows.
pub fn family_u1(n: usize, c: f64, j: u32) -> Result<f64> {
    if !(c < 0.0) {
        return Err(invalid("the shooting family needs c < 0"));
    }
    if n < 3 {
        return Err(invalid("shooting needs n >= 3"));
    }
    let p = 0.5f64.powi(j as i32 + 1);
    let w = (1.0 - p) / c.abs();
    Ok(w.powf((n as f64 - 2.0) / 2.0))
}

fn rk4_step(n: usize, r: f64, u: f64, du: f64, h: f64) -> Option<(f64, f64)> {
    let f = |r: f64, u: f64, du: f64| shoot_second_derivative(n, r, u, du).map(|(a, _, _)| a);
    let k1u = du;
    let k1v = f(r, u, du)?;
    let k2u = du + 0.5 * h * k1v;
    let k2v = f(r + 0.5 * h, u + 0.5 * h * k1u, du + 0.5 * h * k1v)?;
    let k3u = du + 0.5 * h * k2v;
    let k3v = f(r + 0.5 * h, u + 0.5 * h * k2u, du + 0.5 * h * k2v)?;
    let k4u = du + h * k3v;
    let k4v = f(r + h, u + h * k3u, du + h * k3v)?;
    let un = u + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
    let dn = du + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    shoot_second_derivative(n, r + h, un, dn)?;
    Some((un, dn))
}

fn integrate(n: usize, r0: f64, u1: f64, du1: f64, step: f64) -> (Vec<RadialSample>, Termination) {
    let steps = ((r0 - 1.0) / step).ceil().max(1.0) as usize;
    let h = (r0 - 1.0) / steps as f64;
    let (ddu1, _, _) = shoot_second_derivative(n, 1.0, u1, du1).expect("checked by caller");
    let mut samples = vec![RadialSample {
        r: 1.0,
        u: u1,
        du: du1,
        ddu: ddu1,
    }];
    let (mut u, mut du) = (u1, du1);
    for k in 0..steps {
        let r = 1.0 + k as f64 * h;
        match rk4_step(n, r, u, du, h) {
            Some((un, dn)) => {
                u = un;
                du = dn;
                let rn = if k + 1 == steps { r0 } else { 1.0 + (k + 1) as f64 * h };
                let (ddu, _, _) = shoot_second_derivative(n, rn, u, du).expect("validated in step");
                samples.push(RadialSample { r: rn, u, du, ddu });
            }
            None => {
                let (mut lo, mut hi) = (0.0, h);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if rk4_step(n, r, u, du, mid).is_some() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let r_exit = r + lo;
                let reason = match rk4_step(n, r, u, du, hi) {
                    None if u + hi * du <= 0.0 => Termination::NonPositive { r: r_exit },
                    _ => Termination::ConeExit { r: r_exit },
                };
                return (samples, reason);
            }
        }
    }
    (samples, Termination::Reached)
}

/// Integrates the normalized radial σ₂-Yamabe equation outward from `r = 1`
/// with the inner Neumann condition of boundary mean curvature `c`.
pub fn shoot_annulus(n: usize, r0: f64, c: f64, u1: f64, opts: ShootOptions) -> Result<ShootResult> {
    if n < 3 || n > 8 {
        return Err(Sigma2Error::Dimension { got: n, min: 3, max: 8 });
    }
    if !(r0 > 1.0) {
        return Err(invalid(format!("outer radius must exceed 1, got {r0}")));
    }
    if !(u1 > 0.0) {
        return Err(invalid(format!("inner value must be positive, got {u1}")));
    }
    if !(opts.step > 0.0) {
        return Err(invalid("step must be positive"));
    }
    let du1 = initial_slope(n, c, u1);
    let Some((ddu1, _, _)) = shoot_second_derivative(n, 1.0, u1, du1) else {
        return Err(Sigma2Error::Inadmissible(format!(
            "inner datum (u1 = {u1}, c = {c}) has non-positive tangential eigenvalue"
        )));
    };
    let (samples, termination) = integrate(n, r0, u1, du1, opts.step);

    let mut min_margin = f64::INFINITY;
    let mut all_admissible = true;
    let (mut sup_u, mut sup_inv_u, mut sup_du) = (0.0_f64, 0.0_f64, 0.0_f64);
    for s in &samples {
        let (lr, lt) = radial_schouten_eigs(*s, n, Convention::Pow)?;
        let rep = cone_membership(&radial_eigen_vector(lr, lt, n), 2, DEFAULT_CONE_TOL)?;
        all_admissible &= rep.verdict != ConeVerdict::Outside;
        min_margin = min_margin.min(rep.margin);
        sup_u = sup_u.max(s.u.abs());
        sup_inv_u = sup_inv_u.max(1.0 / s.u.abs());
        sup_du = sup_du.max(s.du.abs());
    }

    let halving_drift = if opts.check_halving && termination == Termination::Reached {
        let (fine, t) = integrate(n, r0, u1, du1, 0.5 * opts.step);
        match (t, fine.last(), samples.last()) {
            (Termination::Reached, Some(a), Some(b)) => Some(((a.u - b.u) / a.u).abs()),
            _ => None,
        }
    } else {
        None
    };

    let steps = samples.len() - 1;
    Ok(ShootResult {
        profile: RadialProfile::new(Convention::Pow, n, samples)?,
        diagnostics: ShootDiagnostics {
            n,
            r0,
            c,
            u1,
            du1,
            ddu1,
            sup_u,
            sup_inv_u,
            sup_du,
            min_margin,
            all_admissible,
            termination,
            steps,
            halving_drift,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::schouten_pow;
    use crate::symfunc::sigma2;

    struct Power(f64);
    impl RadialFunction for Power {
        fn eval(&self, r: f64) -> (f64, f64, f64) {
            let p = self.0;
            (r.powf(p), p * r.powf(p - 1.0), p * (p - 1.0) * r.powf(p - 2.0))
        }
    }

    #[test]
    fn inversion_and_constant_are_flat() {
        for n in 3..=6 {
            let s = Power(2.0 - n as f64).sample(1.7);
            let (lr, lt) = radial_schouten_eigs(s, n, Convention::Pow).unwrap();
            assert!(lr.abs() < 1e-14 && lt.abs() < 1e-14);
            let one = RadialSample { r: 0.3, u: 1.0, du: 0.0, ddu: 0.0 };
            assert_eq!(radial_schouten_eigs(one, n, Convention::Pow).unwrap(), (0.0, 0.0));
        }
    }

    #[test]
    fn dense_agreement_off_axis() {
        let n = 4;
        let f = Power(-0.7);
        let x = [0.3, -0.8, 0.5, 0.2];
        let (u, grad, hess) = radial_point_jet(&f, &x).unwrap();
        let a = schouten_pow(n, u, &grad, &hess, &SymmetricMatrixN::zeros(n).unwrap()).unwrap();
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let (lr, lt) = radial_schouten_eigs(f.sample(r), n, Convention::Pow).unwrap();
        let ev = a.eigenvalues();
        let mut expect = radial_eigen_vector(lr, lt, n);
        expect.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in ev.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-10, "{ev:?} vs {expect:?}");
        }
        assert!((sigma2(&a) - radial_sigmas(lr, lt, n).1).abs() < 1e-10);
    }

    #[test]
    fn degenerate_examples() {
        let p = degenerate_family(4, DegenerateCase::A { c1: 1.0, c2: 2.0 }).unwrap();
        let (lr, lt) = radial_schouten_eigs(p.sample(2.5), 4, Convention::Pow).unwrap();
        assert!(lr.abs() < 1e-15 && lt.abs() < 1e-15);
        assert!(degenerate_family(4, DegenerateCase::A { c1: 1.0, c2: 2.1 }).is_err());
        assert!(degenerate_family(3, DegenerateCase::A { c1: 1.0, c2: 0.5 }).is_err());
        assert!(degenerate_family(4, DegenerateCase::B { c3: 1.0, c4: 1.0 }).is_err());
        assert!(degenerate_family(3, DegenerateCase::B { c3: 0.0, c4: 0.0 }).is_err());
        let q = degenerate_family(3, DegenerateCase::B { c3: 1.0, c4: 1.0 }).unwrap();
        // (√r + 1)^{-2} at r = 4 is 1/9.
        assert!((q.value(4.0) - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn barrier_chi_matches_direct_eigenvalues() {
        for n in [3, 4] {
            for delta in [0.1, 0.25, 0.4] {
                let b = barrier_profile(n, delta, None).unwrap();
                for &r in &[1e-3, 0.01, 0.05, 0.2] {
                    let (lr, lt) = radial_schouten_eigs(b.sample(r), n, Convention::Pow).unwrap();
                    let scale = 1.0 / (r * r);
                    assert!((lt - b.chi1(r)).abs() < 1e-10 * scale);
                    assert!((lr - (b.chi1(r) - b.chi2(r))).abs() < 1e-10 * scale);
                }
            }
        }
    }

    #[test]
    fn barrier_n4_empirical_radius_closed_form() {
        // σ₂ = −3bχ₁/r and χ₁ vanishes at r = (2 − δ)/b.
        let b = barrier_profile(4, 0.25, None).unwrap();
        assert!((b.r_empirical - 1.75 / 8.0).abs() < 1e-12);
        assert!(b.r1 <= b.r_empirical);
        assert!(barrier_profile(4, 0.5, None).is_err());
        assert!(barrier_profile(5, 0.2, None).is_err());
        assert!(barrier_profile(3, 0.2, Some(2.0)).is_err());
    }

    #[test]
    fn initial_slope_and_restriction_value() {
        assert_eq!(initial_slope(4, 0.0, 2.0), -2.0);
        // n = 3: (2√3)^{1/4} 2^{-1/2}.
        let expect = (2.0 * 3f64.sqrt()).powf(0.25) / 2f64.sqrt();
        assert!((bubble_restriction_u1(3) - expect).abs() < 1e-15);
        assert_eq!(family_u1(4, -0.5, 0).unwrap(), 1.0);
        assert!(family_u1(4, 0.5, 0).is_err());
    }

    #[test]
    fn shooting_rejects_degenerate_inner_datum() {
        // p = 0 puts λ_t(1) = 0.
        assert!(shoot_annulus(4, 1.5, -0.5, 2.0, ShootOptions::default()).is_err());
        assert!(shoot_annulus(4, 0.9, -0.5, 1.0, ShootOptions::default()).is_err());
    }
}
