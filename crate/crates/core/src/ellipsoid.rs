//! Geometry of the ellipsoid `Σ = {Σ x_i²/a_i² = 1}` as a level set of
//! `F(x) = Σ a_i^{-2} x_i² − 1`.
//!
//! With `S_k(x) = Σ a_i^{-k} x_i²`, the inward second fundamental form is
//! `∇²F(e_α, e_β)/|∇F|`, the mean curvature is
//! `H = S₄^{-1/2} (Σ a_i^{-2} − S₆/S₄)` and the umbilic defect
//! `|L|² − H²/(n−1)` equals `1/S₄` times the residual of the generic umbilic
//! equation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{invalid, Result, Sigma2Error};
use crate::symfunc::{SymmetricMatrixN, MAX_DIM};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    /// Normal `−∇F/|∇F|`; convex ellipsoids have positive mean curvature.
    Inward,
    /// Normal `+∇F/|∇F|`.
    Outward,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EllipsoidSpec {
    axes: Vec<f64>,
    pub orientation: Orientation,
}

impl EllipsoidSpec {
    pub fn new(axes: Vec<f64>) -> Result<Self> {
        Self::with_orientation(axes, Orientation::Inward)
    }

    pub fn with_orientation(axes: Vec<f64>, orientation: Orientation) -> Result<Self> {
        if axes.len() < 2 || axes.len() > MAX_DIM {
            return Err(Sigma2Error::Dimension {
                got: axes.len(),
                min: 2,
                max: MAX_DIM,
            });
        }
        if axes.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
            return Err(invalid("ellipsoid axes must be positive and finite"));
        }
        Ok(Self { axes, orientation })
    }

    pub fn axes(&self) -> &[f64] {
        &self.axes
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    /// `Σ x_i²/a_i²`.
    pub fn level(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.axes).map(|(v, a)| v * v / (a * a)).sum()
    }

    /// Radial projection onto Σ.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let s = self.level(x).sqrt();
        x.iter().map(|v| v / s).collect()
    }

    fn moment(&self, x: &[f64], k: i32) -> f64 {
        x.iter().zip(&self.axes).map(|(v, a)| v * v * a.powi(-k)).sum()
    }

    fn axis_sum(&self, k: i32) -> f64 {
        self.axes.iter().map(|a| a.powi(-k)).sum()
    }

    fn max_axis(&self) -> f64 {
        self.axes.iter().cloned().fold(0.0, f64::max)
    }

    fn sign(&self) -> f64 {
        match self.orientation {
            Orientation::Inward => 1.0,
            Orientation::Outward => -1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SurfacePointGeometry {
    pub point: Vec<f64>,
    pub normal: Vec<f64>,
    /// Orthonormal tangent frame `e_1, …, e_{n−1}`.
    pub frame: Vec<Vec<f64>>,
    pub l: SymmetricMatrixN,
    /// `tr L`.
    pub h: f64,
    /// `|L|² − H²/(n−1)`.
    pub umbilic_defect: f64,
    /// The input was off Σ by more than `1e-10` and was projected.
    pub projected: bool,
}

fn on_surface(spec: &EllipsoidSpec, x: &[f64]) -> Result<(Vec<f64>, bool)> {
    if x.len() != spec.dim() {
        return Err(Sigma2Error::DimensionMismatch {
            expected: spec.dim(),
            got: x.len(),
        });
    }
    if x.iter().all(|v| *v == 0.0) {
        return Err(invalid("the origin is not a surface point"));
    }
    if (spec.level(x) - 1.0).abs() <= 1e-10 {
        Ok((x.to_vec(), false))
    } else {
        Ok((spec.project(x), true))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gram–Schmidt on the coordinate basis against `normal`.
pub fn tangent_frame(normal: &[f64]) -> Vec<Vec<f64>> {
    let n = normal.len();
    let mut frame: Vec<Vec<f64>> = Vec::with_capacity(n - 1);
    let mut candidates: Vec<usize> = (0..n).collect();
    // Drop the coordinate direction most aligned with the normal.
    let worst = (0..n)
        .max_by(|&a, &b| normal[a].abs().total_cmp(&normal[b].abs()))
        .unwrap_or(0);
    candidates.retain(|&i| i != worst);
    for i in candidates {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        let c = dot(&v, normal);
        for k in 0..n {
            v[k] -= c * normal[k];
        }
        for e in &frame {
            let c = dot(&v, e);
            for k in 0..n {
                v[k] -= c * e[k];
            }
        }
        let norm = dot(&v, &v).sqrt();
        frame.push(v.into_iter().map(|x| x / norm).collect());
    }
    frame
}

/// Second fundamental form in a caller-supplied tangent frame.
pub fn second_fundamental_form(spec: &EllipsoidSpec, x: &[f64], frame: &[Vec<f64>]) -> Result<SymmetricMatrixN> {
    let grad_norm = 2.0 * spec.moment(x, 4).sqrt();
    let s = spec.sign();
    SymmetricMatrixN::from_fn(frame.len(), |a, b| {
        let mut v = 0.0;
        for (i, ai) in spec.axes.iter().enumerate() {
            v += 2.0 / (ai * ai) * frame[a][i] * frame[b][i];
        }
        s * v / grad_norm
    })
}

/// Unit normal in the ellipsoid's chosen orientation.
pub fn unit_normal(spec: &EllipsoidSpec, x: &[f64]) -> Vec<f64> {
    let g: Vec<f64> = x.iter().zip(&spec.axes).map(|(v, a)| 2.0 * v / (a * a)).collect();
    let norm = dot(&g, &g).sqrt();
    let s = -spec.sign();
    g.into_iter().map(|v| s * v / norm).collect()
}

pub fn surface_geometry(spec: &EllipsoidSpec, x: &[f64]) -> Result<SurfacePointGeometry> {
    let (point, projected) = on_surface(spec, x)?;
    let normal = unit_normal(spec, &point);
    let frame = tangent_frame(&normal);
    let l = second_fundamental_form(spec, &point, &frame)?;
    let h = l.trace();
    let umbilic_defect = l.frobenius_sq() - h * h / (spec.dim() - 1) as f64;
    Ok(SurfacePointGeometry {
        point,
        normal,
        frame,
        l,
        h,
        umbilic_defect,
        projected,
    })
}

/// Closed-form mean curvature `S₄^{-1/2}(Σ a^{-2} − S₆/S₄)` (inward sign).
pub fn mean_curvature_closed_form(spec: &EllipsoidSpec, x: &[f64]) -> f64 {
    let s4 = spec.moment(x, 4);
    spec.sign() * (spec.axis_sum(2) - spec.moment(x, 6) / s4) / s4.sqrt()
}

/// Left side minus right side of the generic umbilic equation
/// `Σa^{-4} − 2S₈/S₄ + S₆²/S₄² = (Σa^{-2} − S₆/S₄)²/(n−1)`.
pub fn umbilic_residual(spec: &EllipsoidSpec, x: &[f64]) -> Result<f64> {
    let (p, _) = on_surface(spec, x)?;
    Ok(umbilic_residual_raw(spec, &p))
}

fn umbilic_residual_raw(spec: &EllipsoidSpec, p: &[f64]) -> f64 {
    let s4 = spec.moment(p, 4);
    let s6 = spec.moment(p, 6);
    let s8 = spec.moment(p, 8);
    let lhs = spec.axis_sum(4) - 2.0 * s8 / s4 + (s6 / s4).powi(2);
    let rhs = (spec.axis_sum(2) - s6 / s4).powi(2) / (spec.dim() - 1) as f64;
    lhs - rhs
}

/// Umbilic defect from the moment sums, for points already on Σ.
fn defect_fast(spec: &EllipsoidSpec, p: &[f64]) -> f64 {
    umbilic_residual_raw(spec, p) / spec.moment(p, 4)
}

/// Umbilic threshold: `defect < UMBILIC_TOL (1 + H²)`.
pub const UMBILIC_TOL: f64 = 1e-8;
/// More separated umbilic minima than this is reported as a degenerate family.
pub const DEGENERATE_COUNT: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchOptions {
    pub samples: usize,
    pub seed: u64,
    /// Number of well-separated low-defect samples refined locally.
    pub refine_seeds: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            samples: 100_000,
            seed: 0x5eed,
            refine_seeds: 64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum UmbilicMode {
    ClosedFormN3,
    NumericSearch(SearchOptions),
}

#[derive(Clone, Debug, PartialEq)]
pub struct UmbilicReport {
    pub points: Vec<Vec<f64>>,
    /// Smallest defect over the raw sample (before refinement).
    pub sample_min_defect: f64,
    /// Smallest defect after local refinement.
    pub min_defect: f64,
    pub min_defect_point: Vec<f64>,
    pub samples: usize,
    pub degenerate: bool,
}

pub fn find_umbilic_points(spec: &EllipsoidSpec, mode: UmbilicMode) -> Result<UmbilicReport> {
    match mode {
        UmbilicMode::ClosedFormN3 => closed_form_n3(spec),
        UmbilicMode::NumericSearch(opts) => numeric_search(spec, opts),
    }
}

fn closed_form_n3(spec: &EllipsoidSpec) -> Result<UmbilicReport> {
    let a = spec.axes();
    if a.len() != 3 {
        return Err(invalid("closed-form umbilic points need n = 3"));
    }
    if !(a[0] < a[1] && a[1] < a[2]) {
        return Err(invalid("closed-form umbilic points need strictly increasing axes"));
    }
    let (a1, a2, a3) = (a[0] * a[0], a[1] * a[1], a[2] * a[2]);
    let x1 = a[0] * ((a2 - a1) / (a3 - a1)).sqrt();
    let x3 = a[2] * ((a3 - a2) / (a3 - a1)).sqrt();
    let points: Vec<Vec<f64>> = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)]
        .iter()
        .map(|(s1, s3)| vec![s1 * x1, 0.0, s3 * x3])
        .collect();
    let defects: Vec<f64> = points.iter().map(|p| defect_fast(spec, p)).collect();
    let (k, min_defect) = defects
        .iter()
        .cloned()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("four points");
    Ok(UmbilicReport {
        min_defect_point: points[k].clone(),
        points,
        sample_min_defect: min_defect,
        min_defect,
        samples: 0,
        degenerate: false,
    })
}

/// Uniform-ish samples `x = a ∘ v/|v|`, `v` standard Gaussian, from
/// per-chunk ChaCha streams.
pub fn sample_surface(spec: &EllipsoidSpec, count: usize, seed: u64) -> Vec<Vec<f64>> {
    const CHUNK: usize = 4096;
    let n = spec.dim();
    let chunks = count.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .flat_map_iter(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let len = CHUNK.min(count - k * CHUNK);
            let axes = spec.axes.clone();
            (0..len)
                .map(move |_| {
                    let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
                    let norm = dot(&v, &v).sqrt();
                    v.iter().zip(&axes).map(|(vi, a)| a * vi / norm).collect::<Vec<f64>>()
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

fn numeric_search(spec: &EllipsoidSpec, opts: SearchOptions) -> Result<UmbilicReport> {
    if opts.samples == 0 {
        return Err(invalid("numeric search needs at least one sample"));
    }
    let pts = sample_surface(spec, opts.samples, opts.seed);
    let defects: Vec<f64> = pts.par_iter().map(|p| defect_fast(spec, p)).collect();
    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.sort_by(|&a, &b| defects[a].total_cmp(&defects[b]).then(a.cmp(&b)));
    let sample_min_defect = defects[order[0]];

    let scale = spec.max_axis();
    let sep = 0.05 * scale;
    let mut seeds: Vec<usize> = Vec::new();
    for &i in &order {
        if seeds.len() >= opts.refine_seeds {
            break;
        }
        if seeds.iter().all(|&j| dist(&pts[i], &pts[j]) > sep) {
            seeds.push(i);
        }
    }

    let refined: Vec<(Vec<f64>, f64)> = seeds
        .par_iter()
        .map(|&i| refine(spec, &pts[i]))
        .collect();

    let mut best = (pts[order[0]].clone(), sample_min_defect);
    let mut found: Vec<Vec<f64>> = Vec::new();
    for (p, d) in refined {
        if d < best.1 {
            best = (p.clone(), d);
        }
        let h = mean_curvature_closed_form(spec, &p);
        if d < UMBILIC_TOL * (1.0 + h * h) && found.iter().all(|q| dist(q, &p) > 1e-6 * scale) {
            found.push(p);
        }
    }
    let degenerate = found.len() > DEGENERATE_COUNT;
    found.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(UmbilicReport {
        points: found,
        sample_min_defect,
        min_defect: best.1,
        min_defect_point: best.0,
        samples: opts.samples,
        degenerate,
    })
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Nelder–Mead in tangent chart coordinates with radial projection, restarted
/// from the best vertex until it stops improving.
fn refine(spec: &EllipsoidSpec, start: &[f64]) -> (Vec<f64>, f64) {
    let mut x = start.to_vec();
    let mut fx = defect_fast(spec, &x);
    let mut size = 0.02 * spec.axes().iter().cloned().fold(f64::INFINITY, f64::min);
    for _ in 0..8 {
        let frame = tangent_frame(&unit_normal(spec, &x));
        let chart = |xi: &[f64]| -> Vec<f64> {
            let mut y = x.clone();
            for (e, c) in frame.iter().zip(xi) {
                for k in 0..y.len() {
                    y[k] += c * e[k];
                }
            }
            spec.project(&y)
        };
        let (xi, f) = nelder_mead(|xi| defect_fast(spec, &chart(xi)), frame.len(), size);
        let improved = f < fx;
        if improved {
            x = chart(&xi);
            fx = f;
        }
        if !improved || size < 1e-12 {
            break;
        }
        size *= 0.1;
    }
    (x, fx)
}

fn nelder_mead(f: impl Fn(&[f64]) -> f64, dim: usize, size: f64) -> (Vec<f64>, f64) {
    let mut simplex: Vec<Vec<f64>> = vec![vec![0.0; dim]];
    for i in 0..dim {
        let mut v = vec![0.0; dim];
        v[i] = size;
        simplex.push(v);
    }
    let mut vals: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    for _ in 0..4000 {
        let mut idx: Vec<usize> = (0..=dim).collect();
        idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        simplex = idx.iter().map(|&i| simplex[i].clone()).collect();
        vals = idx.iter().map(|&i| vals[i]).collect();
        let diam = simplex[1..]
            .iter()
            .map(|v| dist(v, &simplex[0]))
            .fold(0.0, f64::max);
        if diam < 1e-15 * (1.0 + size) || (vals[dim] - vals[0]).abs() <= 1e-32 {
            break;
        }
        let centroid: Vec<f64> = (0..dim)
            .map(|k| simplex[..dim].iter().map(|v| v[k]).sum::<f64>() / dim as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            (0..dim)
                .map(|k| centroid[k] + t * (simplex[dim][k] - centroid[k]))
                .collect()
        };
        let xr = along(-1.0);
        let fr = f(&xr);
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = f(&xe);
            if fe < fr {
                simplex[dim] = xe;
                vals[dim] = fe;
            } else {
                simplex[dim] = xr;
                vals[dim] = fr;
            }
        } else if fr < vals[dim - 1] {
            simplex[dim] = xr;
            vals[dim] = fr;
        } else {
            let (xc, fc) = if fr < vals[dim] {
                let xc = along(-0.5);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = along(0.5);
                let fc = f(&xc);
                (xc, fc)
            };
            if fc < vals[dim].min(fr) {
                simplex[dim] = xc;
                vals[dim] = fc;
            } else {
                for i in 1..=dim {
                    for k in 0..dim {
                        simplex[i][k] = simplex[0][k] + 0.5 * (simplex[i][k] - simplex[0][k]);
                    }
                    vals[i] = f(&simplex[i]);
                }
            }
        }
    }
    let k = (0..=dim).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).expect("non-empty");
    (simplex[k].clone(), vals[k])
}

#[derive(Clone, Debug, PartialEq)]
pub struct CounterexampleReport {
    pub n: usize,
    pub eps: f64,
    pub axes: Vec<f64>,
    pub x0: Vec<f64>,
    /// `−H/(n−1)` at `x₀`.
    pub h_eps: f64,
    /// `|h_ε + 1|`.
    pub gap: f64,
    pub defect: f64,
    /// Principal curvatures at `x₀` in the inward convention.
    pub principal_curvatures: Vec<f64>,
}

/// The ellipsoid with `a_i = 1 + (i−1) ε` touching the unit sphere at
/// `x₀ = (1, 0, …, 0)`, seen as the boundary of its exterior.
pub fn counterexample_geometry(n: usize, eps: f64) -> Result<CounterexampleReport> {
    if n < 3 || n > MAX_DIM {
        return Err(Sigma2Error::Dimension { got: n, min: 3, max: MAX_DIM });
    }
    if !(0.0..1.0).contains(&eps) {
        return Err(invalid(format!("eps must lie in [0, 1), got {eps}")));
    }
    let axes: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 * eps).collect();
    let spec = EllipsoidSpec::new(axes.clone())?;
    let mut x0 = vec![0.0; n];
    x0[0] = 1.0;
    let geo = surface_geometry(&spec, &x0)?;
    let h_eps = -geo.h / (n - 1) as f64;
    Ok(CounterexampleReport {
        n,
        eps,
        axes,
        principal_curvatures: geo.l.eigenvalues(),
        x0,
        h_eps,
        gap: (h_eps + 1.0).abs(),
        defect: geo.umbilic_defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_is_umbilic() {
        for n in 3..=5 {
            let spec = EllipsoidSpec::new(vec![2.0; n]).unwrap();
            let mut x = vec![0.3; n];
            x[0] = -1.0;
            let g = surface_geometry(&spec, &x).unwrap();
            assert!(g.projected);
            assert!((g.h - (n - 1) as f64 / 2.0).abs() < 1e-13);
            assert!(g.umbilic_defect.abs() < 1e-14);
            assert!(umbilic_residual(&spec, &x).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn mean_curvature_golden_123() {
        let spec = EllipsoidSpec::new(vec![1.0, 2.0, 3.0]).unwrap();
        let g = surface_geometry(&spec, &[1.0, 0.0, 0.0]).unwrap();
        assert!((g.h - 13.0 / 36.0).abs() < 1e-14);
        assert!((mean_curvature_closed_form(&spec, &[1.0, 0.0, 0.0]) - 13.0 / 36.0).abs() < 1e-15);
        let out = EllipsoidSpec::with_orientation(vec![1.0, 2.0, 3.0], Orientation::Outward).unwrap();
        assert!((surface_geometry(&out, &[1.0, 0.0, 0.0]).unwrap().h + 13.0 / 36.0).abs() < 1e-14);
    }

    #[test]
    fn closed_form_points_123() {
        let spec = EllipsoidSpec::new(vec![1.0, 2.0, 3.0]).unwrap();
        let rep = find_umbilic_points(&spec, UmbilicMode::ClosedFormN3).unwrap();
        assert_eq!(rep.points.len(), 4);
        let (x1, x3) = ((3.0f64 / 8.0).sqrt(), 3.0 * (5.0f64 / 8.0).sqrt());
        assert!(rep.points.iter().any(|p| (p[0] - x1).abs() < 1e-15 && (p[2] + x3).abs() < 1e-15));
        for p in &rep.points {
            assert!(surface_geometry(&spec, p).unwrap().umbilic_defect.abs() < 1e-12);
        }
        let bad = EllipsoidSpec::new(vec![1.0, 2.0, 2.0]).unwrap();
        assert!(find_umbilic_points(&bad, UmbilicMode::ClosedFormN3).is_err());
    }

    #[test]
    fn origin_rejected() {
        let spec = EllipsoidSpec::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert!(surface_geometry(&spec, &[0.0, 0.0, 0.0]).is_err());
        assert!(EllipsoidSpec::new(vec![1.0, -2.0]).is_err());
    }

    #[test]
    fn counterexample_principal_curvatures() {
        // At x₀ the inward principal curvatures are a_i^{-2}, i ≥ 2.
        let r = counterexample_geometry(4, 0.05).unwrap();
        let mut expect: Vec<f64> = r.axes[1..].iter().map(|a| a.powi(-2)).collect();
        expect.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in r.principal_curvatures.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(r.defect > 0.0);
        let s = counterexample_geometry(4, 0.0).unwrap();
        assert_eq!(s.h_eps, -1.0);
        assert_eq!(s.defect, 0.0);
    }

    #[test]
    fn nelder_mead_quadratic() {
        let (x, f) = nelder_mead(|v| (v[0] - 0.3).powi(2) + 2.0 * (v[1] + 0.1).powi(2), 2, 0.5);
        assert!(f < 1e-20 && (x[0] - 0.3).abs() < 1e-9 && (x[1] + 0.1).abs() < 1e-9);
    }
}
