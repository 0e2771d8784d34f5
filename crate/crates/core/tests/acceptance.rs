//! Acceptance gate: one PASS/FAIL line per criterion, each measured against an
//! oracle written independently of the library code paths it checks.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use sigma2_core::bubble::{boundary_bubble, make_bubble_params, verify_bubble, verify_function, BubbleGrid};
use sigma2_core::eigenpath::{
    extract_eigenvalue, path_residual, trace_homotopy, ContinuationSystem, EpsilonEigenSystem, Grid, ModelGeometry,
    PathProblem, DEFAULT_NODES,
};
use sigma2_core::ellipsoid::{
    counterexample_geometry, find_umbilic_points, surface_geometry, EllipsoidSpec, SearchOptions, UmbilicMode,
};
use sigma2_core::radial::{
    barrier_profile, bubble_restriction_u1, degenerate_family, family_u1, shoot_annulus, DegenerateCase,
    RadialFunction, ShootOptions, Termination,
};
use sigma2_core::symfunc::{cone_membership, mu_gamma_plus, sigma2, sigma2_kronecker, sigma2_of, ConeVerdict, SymmetricMatrixN};
use sigma2_core::verify::random_state;

const SEED: u64 = 20_241_016;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

/// `n choose 2`, written out rather than borrowed from the library.
fn c2(n: usize) -> f64 {
    (n * (n - 1)) as f64 / 2.0
}

fn oracle_sigma2_eigs(lam: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..lam.len() {
        for j in i + 1..lam.len() {
            s += lam[i] * lam[j];
        }
    }
    s
}

/// Radial Schouten eigenvalues of `u^{4/(n−2)}|dx|²` and `(σ₁, σ₂)`.
fn oracle_radial(n: usize, r: f64, u: f64, du: f64, ddu: f64) -> (f64, f64, f64, f64) {
    let m = n as f64 - 2.0;
    let g2 = du * du / (u * u);
    let lr = -2.0 / m * ddu / u + 2.0 * n as f64 / (m * m) * g2 - 2.0 / (m * m) * g2;
    let lt = -2.0 / m * du / (r * u) - 2.0 / (m * m) * g2;
    let k = (n - 1) as f64;
    (lr, lt, lr + k * lt, k * lr * lt + c2(n - 1) * lt * lt)
}

/// Curvature data of the ellipsoid `Σ x_i²/a_i² = 1` from the full-space
/// projected Hessian: returns `(H, |L|², defect)` with the inward normal.
fn oracle_ellipsoid(axes: &[f64], x: &[f64]) -> (f64, f64, f64) {
    let n = axes.len();
    let g = DVector::from_iterator(n, x.iter().zip(axes).map(|(v, a)| 2.0 * v / (a * a)));
    let gn = g.norm();
    let nu = &g / gn;
    let p = DMatrix::identity(n, n) - &nu * nu.transpose();
    let d = DMatrix::from_diagonal(&DVector::from_iterator(n, axes.iter().map(|a| 2.0 / (a * a))));
    let l = &p * d * &p / gn;
    let h = l.trace();
    let l2 = (&l * &l).trace();
    (h, l2, l2 - h * h / (n - 1) as f64)
}

fn c01_sigma2_oracle() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0_f64;
    for k in 0..1000 {
        let n = 3 + k % 4;
        let mut m = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v: f64 = rng.sample(StandardNormal);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        let lam: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().cloned().collect();
        let oracle = oracle_sigma2_eigs(&lam);
        let scale: f64 = {
            let mut s = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    s += (lam[i] * lam[j]).abs();
                }
            }
            s
        };
        let w = SymmetricMatrixN::from_fn(n, |i, j| m[(i, j)]).unwrap();
        for got in [sigma2(&w), sigma2_kronecker(&w)] {
            worst = worst.max((got - oracle).abs() / scale);
        }
    }
    let t = start.elapsed();
    verdict(
        worst < 1e-12 && t < Duration::from_secs(1),
        format!("max rel err {worst:.2e} < 1e-12, runtime {:.3} s < 1 s", secs(t)),
    )
}

fn c02_cone_anchors() -> Verdict {
    let a = [-0.5, 1.0, 1.0];
    let b = [-1.0, 1.0, 1.0, 1.0];
    let vals = [sigma2_of(&a), sigma2_of(&b)];
    let oracle = [oracle_sigma2_eigs(&a), oracle_sigma2_eigs(&b)];
    let worst = vals.iter().chain(&oracle).fold(0.0_f64, |m, v| m.max(v.abs()));
    let boundary = [&a[..], &b[..]]
        .iter()
        .all(|l| cone_membership(l, 2, 1e-10).map(|r| r.verdict == ConeVerdict::Boundary).unwrap_or(false));
    let mu = (mu_gamma_plus(3).unwrap() - 0.5).abs().max((mu_gamma_plus(4).unwrap() - 1.0).abs());
    verdict(
        worst <= 4.0 * f64::EPSILON && boundary && mu < 1e-14,
        format!("|sigma2| {worst:.1e} <= 4 eps, verdicts boundary = {boundary}, mu error {mu:.1e}"),
    )
}

fn c03_ellipsoid() -> Verdict {
    let start = Instant::now();
    let axes = vec![1.0, 2.0, 3.0];
    let spec = EllipsoidSpec::new(axes.clone()).unwrap();
    let rep = find_umbilic_points(&spec, UmbilicMode::ClosedFormN3).unwrap();
    let (x1, x3) = ((3.0f64 / 8.0).sqrt(), 3.0 * (5.0f64 / 8.0).sqrt());
    let mut pos = 0.0_f64;
    let mut defect = 0.0_f64;
    for (s1, s3) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
        let golden = [s1 * x1, 0.0, s3 * x3];
        let d = rep
            .points
            .iter()
            .map(|p| p.iter().zip(&golden).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
            .fold(f64::INFINITY, f64::min);
        pos = pos.max(d);
        defect = defect.max(oracle_ellipsoid(&axes, &golden).2.abs());
        defect = defect.max(surface_geometry(&spec, &golden).unwrap().umbilic_defect.abs());
    }
    let generic_axes = vec![1.0, 1.1, 1.2, 1.3];
    let generic = EllipsoidSpec::new(generic_axes.clone()).unwrap();
    let search = find_umbilic_points(
        &generic,
        UmbilicMode::NumericSearch(SearchOptions {
            samples: 100_000,
            seed: SEED,
            ..SearchOptions::default()
        }),
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0x5eed);
    let mut oracle_min = f64::INFINITY;
    for _ in 0..100_000 {
        let v: Vec<f64> = (0..4).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let x: Vec<f64> = v.iter().zip(&generic_axes).map(|(c, a)| a * c / norm).collect();
        oracle_min = oracle_min.min(oracle_ellipsoid(&generic_axes, &x).2);
    }
    let t = start.elapsed();
    verdict(
        rep.points.len() == 4
            && pos < 1e-8
            && defect < 1e-9
            && search.points.is_empty()
            && search.sample_min_defect > 1e-4
            && oracle_min > 1e-4
            && t < Duration::from_secs(30),
        format!(
            "{} points, position err {pos:.1e} < 1e-8, defect {defect:.1e} < 1e-9; generic min defect {:.3e} (oracle {oracle_min:.3e}) > 1e-4; runtime {:.2} s < 30 s",
            rep.points.len(),
            search.sample_min_defect,
            secs(t)
        ),
    )
}

fn c04_counterexample() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for eps in [0.1, 0.01, 0.001] {
        let rep = counterexample_geometry(3, eps).unwrap();
        let (h_in, _, defect) = oracle_ellipsoid(&rep.axes, &rep.x0);
        // The counterexample boundary is the ellipsoid seen from outside.
        let h_eps = -h_in / 2.0;
        let gap = (h_eps + 1.0).abs();
        ok &= gap <= 5.0 * eps && (gap - rep.gap).abs() < 1e-12 && defect > 0.0 && rep.defect > 0.0;
        parts.push(format!("eps {eps}: |h+1| {gap:.3e} <= {:.0e}, defect {defect:.2e}", 5.0 * eps));
    }
    verdict(ok, parts.join("; "))
}

fn c05_bubble_residuals() -> Verdict {
    let mut lib_worst = 0.0_f64;
    let mut oracle_worst = 0.0_f64;
    let mut control = f64::INFINITY;
    for n in [3, 4] {
        for f in [1.0, 2.0] {
            for c in [0.0, 0.5] {
                let p = make_bubble_params(n, f, c).unwrap();
                let grid = BubbleGrid::random(n, 30, 3.0, SEED);
                let r = verify_bubble(&p, &grid).unwrap();
                lib_worst = lib_worst.max(r.interior_max).max(r.boundary_max);
                // v = A q^{-(n-2)/2} with q = 1 + b|y − ȳ e_n|² pulls back a round
                // metric of curvature 4b/a², a = A^{2/(n-2)}, whose Schouten
                // tensor is (2b/a²) g.
                let v = boundary_bubble(&p);
                let m = n as f64 - 2.0;
                let a = v.profile.amplitude.powf(2.0 / m);
                let b = v.profile.b;
                oracle_worst = oracle_worst.max((c2(n).sqrt() * 2.0 * b / (a * a) - f).abs());
                for y in &grid.wall {
                    let rho2: f64 = y[..n - 1].iter().map(|t| t * t).sum::<f64>() + v.centre_n * v.centre_n;
                    let q = 1.0 + b * rho2;
                    let res = 0.5 * m * q.powf(-(n as f64) / 2.0) * v.profile.amplitude * (2.0 * b * v.centre_n + c * a);
                    oracle_worst = oracle_worst.max(res.abs());
                }
                let bad = verify_function(&v.with_rate_factor(1.1), f, c, &grid).unwrap();
                control = control.min(bad.interior_max.max(bad.boundary_max));
            }
        }
    }
    verdict(
        lib_worst < 1e-8 && oracle_worst < 1e-8 && control > 1e-3,
        format!("residual {lib_worst:.2e} (oracle {oracle_worst:.2e}) < 1e-8; perturbed-b control {control:.3e} > 1e-3"),
    )
}

fn c06_bubble_identities() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut lib = 0.0_f64;
    let mut oracle = 0.0_f64;
    for _ in 0..1000 {
        let n: usize = rng.random_range(3..=8);
        let f: f64 = rng.random_range(0.1..10.0);
        let c: f64 = rng.random_range(0.0..5.0);
        let p = make_bubble_params(n, f, c).unwrap();
        lib = lib.max(p.identities().max_abs());
        let sc = c2(n).sqrt();
        let b = f / (2.0 * sc) * (1.0 + c * c * sc / (2.0 * f)).powi(2);
        let a = (2.0 * sc * b / f).sqrt();
        let ybar = -c * a / (2.0 * b);
        let (la, lb, lx) = p.liouville_form();
        let m = n as f64 - 2.0;
        let rel = |x: f64, y: f64| (x - y).abs() / (1.0 + y.abs());
        oracle = oracle
            .max(rel(p.b, b))
            .max(rel(p.ybar_n, ybar))
            .max(rel(p.ttilde_c, ybar.abs()))
            .max(rel(la, a))
            .max(rel(lb, b))
            // (n−2) a⁻¹ b x̄_n equals the wall coefficient −(n−2)c/2.
            .max(rel(m * lb * lx / la, -0.5 * m * c))
            .max(rel(b * ybar * ybar + 1.0, (2.0 / f).sqrt() * c2(n).powf(0.25) * b.sqrt()));
    }
    verdict(
        lib < 1e-10 && oracle < 1e-10,
        format!("1000 draws: identities {lib:.2e}, oracle relations {oracle:.2e} < 1e-10"),
    )
}

fn c07_degenerate() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0_f64;
    let mut min_s1 = f64::INFINITY;
    let radii: Vec<f64> = (0..200).map(|k| 0.1 * 100f64.powf(k as f64 / 199.0)).collect();
    for _ in 0..50 {
        let (c1, cc2) = (rng.random_range(0.1..10.0), rng.random_range(0.0..=2.0));
        let (c3, c4) = (rng.random_range(0.0..5.0), rng.random_range(0.01..5.0));
        let a = degenerate_family(4, DegenerateCase::A { c1, c2: cc2 }).unwrap();
        let b = degenerate_family(3, DegenerateCase::B { c3, c4 }).unwrap();
        for &r in &radii {
            // Case a: u = C1 r^{-C2}, n = 4.
            let u = c1 * r.powf(-cc2);
            let oracle_a = (u, -cc2 * u / r, cc2 * (cc2 + 1.0) * u / (r * r));
            // Case b: u = (C3 r^{1/2} + C4)^{-2}, n = 3, μ = 1/2.
            let w = c3 * r.sqrt() + c4;
            let wp = 0.5 * c3 / r.sqrt();
            let wpp = -0.25 * c3 / (r * r.sqrt());
            let oracle_b = (w.powi(-2), -2.0 * wp / w.powi(3), 6.0 * wp * wp / w.powi(4) - 2.0 * wpp / w.powi(3));
            for (n, p, o) in [(4, &a, oracle_a), (3, &b, oracle_b)] {
                let (u, du, ddu) = p.eval(r);
                let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * (1.0 + y.abs());
                if !(close(u, o.0) && close(du, o.1) && close(ddu, o.2)) {
                    return verdict(false, format!("profile mismatch n = {n}, r = {r}"));
                }
                let (lr, lt, s1, s2) = oracle_radial(n, r, u, du, ddu);
                worst = worst.max(s2.abs() / (1.0 + lr * lr + lt * lt));
                min_s1 = min_s1.min(s1);
            }
        }
    }
    verdict(
        worst < 1e-9 && min_s1 >= -1e-9,
        format!("scaled sigma2 residual {worst:.2e} < 1e-9, min sigma1 {min_s1:.3e} >= -1e-9"),
    )
}

fn c08_barrier() -> Verdict {
    let mut max_s2 = f64::NEG_INFINITY;
    let mut bound_ok = true;
    let mut agree = 0.0_f64;
    for n in [3, 4] {
        for delta in [0.1, 0.25, 0.4] {
            let p = barrier_profile(n, delta, None).unwrap();
            let a = n as f64 - 2.0 - delta;
            for k in 0..100 {
                let r = p.r1 * 10f64.powf(-3.0 + 3.0 * k as f64 / 100.0);
                let v = r.powf(-a) * (p.rate_b * r).exp();
                let q = -a / r + p.rate_b;
                let (_, _, _, s2) = oracle_radial(n, r, v, v * q, v * (q * q + a / (r * r)));
                agree = agree.max((s2 - p.sigma2_direct(r)).abs() / s2.abs());
                max_s2 = max_s2.max(s2 * r.powi(4));
                if n == 3 {
                    bound_ok &= s2 <= -3.0 * delta * delta * (1.0 - delta).powi(2) / r.powi(4);
                }
            }
        }
    }
    verdict(
        max_s2 < 0.0 && bound_ok && agree < 1e-9,
        format!("max r^4 sigma2 {max_s2:.3e} < 0, n=3 bound holds = {bound_ok}, library agreement {agree:.1e}"),
    )
}

fn c09_shooting() -> Verdict {
    let mut restriction = 0.0_f64;
    let mut eq_res = 0.0_f64;
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [3, 4] {
        let m = n as f64 - 2.0;
        let shot = shoot_annulus(n, 2.0, 0.0, bubble_restriction_u1(n), ShootOptions::default()).unwrap();
        ok &= shot.diagnostics.termination == Termination::Reached;
        let amp = (2.0 * c2(n).sqrt()).powf(m / 4.0);
        for s in &shot.profile.samples {
            let bubble = amp * (1.0 + s.r * s.r).powf(-m / 2.0);
            restriction = restriction.max(((s.u - bubble) / bubble).abs());
            let (_, _, _, s2) = oracle_radial(n, s.r, s.u, s.du, s.ddu);
            eq_res = eq_res.max((s2 / s.u.powf(8.0 / m) - 1.0).abs());
        }
        let mut prev: Option<f64> = None;
        let mut ratios = Vec::new();
        for j in 0..3 {
            let d = shoot_annulus(n, 1.05, -0.5, family_u1(n, -0.5, j).unwrap(), ShootOptions::default())
                .unwrap()
                .diagnostics;
            let sup = d.sup_u + d.sup_inv_u + d.sup_du;
            ok &= d.termination == Termination::Reached && sup < 10.0;
            ok &= d.halving_drift.is_some_and(|x| x < 1e-6);
            if let Some(p) = prev {
                ratios.push(d.ddu1.abs() / p);
                ok &= d.ddu1.abs() >= 2.0 * p;
            }
            prev = Some(d.ddu1.abs());
        }
        parts.push(format!("n={n} growth ratios {:.2}, {:.2}", ratios[0], ratios[1]));
    }
    verdict(
        ok && restriction < 1e-6 && eq_res < 1e-8,
        format!(
            "bubble restriction rel err {restriction:.2e} < 1e-6, equation residual {eq_res:.1e}; {}; sup < 10, drift < 1e-6",
            parts.join(", ")
        ),
    )
}

fn c10_eigen_homotopy() -> Verdict {
    let start = Instant::now();
    let mut eig = 0.0_f64;
    let mut flat = 0.0_f64;
    for n in [3, 4] {
        let grid = Grid::new(ModelGeometry::hemisphere(n).unwrap(), DEFAULT_NODES).unwrap();
        let e = extract_eigenvalue(&grid, &[0.2, 0.1, 0.05]).unwrap();
        // σ₂(½ I) = C(n,2)/4.
        eig = eig.max((e.exp_lambda - c2(n) / 4.0).abs());
        flat = flat.max(e.v.iter().fold(0.0_f64, |m, v| m.max(v.abs())));
    }
    let grid = Grid::new(ModelGeometry::hemisphere(4).unwrap(), DEFAULT_NODES).unwrap();
    let one = |_: f64| 1.0;
    let zero = |_: f64| 0.0;
    let p = PathProblem { grid: &grid, f: &one, c: &zero, f0: 0.0 };
    let r0 = path_residual(&p, &vec![0.0; grid.unknowns()], 0.0)
        .unwrap()
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    let states = trace_homotopy(&grid, &one, &zero, 0.0, 10).unwrap();
    let last = states.last().unwrap();
    // Constant ansatz: σ₂^{1/2}(½ I) = e^{−2u} with f = 1.
    let target = -0.5 * (c2(4).sqrt() / 2.0).ln();
    let gap = last.u.iter().fold(0.0_f64, |m, v| m.max((v - target).abs()));
    let t = start.elapsed();
    verdict(
        eig < 1e-6 && flat < 1e-6 && r0 < 1e-10 && last.t == 1.0 && last.residual_norm < 1e-8 && gap < 1e-8 && t < Duration::from_secs(60),
        format!(
            "e^lambda err {eig:.1e} < 1e-6, |v| {flat:.1e}; t=0 residual {r0:.1e} < 1e-10; t=1 residual {:.1e} < 1e-8, ansatz gap {gap:.1e}; runtime {:.2} s < 60 s",
            last.residual_norm,
            secs(t)
        ),
    )
}

/// Fourth-order central differences of the residual, column by column. Each column is
/// evaluated on a halving sequence of steps starting at `step * (1 + |u_j|)`; the estimate
/// that agrees best with its successor is kept.
fn oracle_jacobian(sys: &dyn ContinuationSystem, u: &[f64], t: f64, step: f64) -> Option<DMatrix<f64>> {
    let n = u.len();
    let mut jac = DMatrix::zeros(n, n);
    for j in 0..n {
        let column = |h: f64| -> Option<Vec<f64>> {
            let at = |k: f64| {
                let mut v = u.to_vec();
                v[j] += k * h;
                sys.residual(&v, t).ok()
            };
            let (p1, m1, p2, m2) = (at(1.0)?, at(-1.0)?, at(2.0)?, at(-2.0)?);
            Some((0..n).map(|i| (8.0 * (p1[i] - m1[i]) - (p2[i] - m2[i])) / (12.0 * h)).collect())
        };
        let h0 = step * (1.0 + u[j].abs());
        let estimates: Vec<Vec<f64>> = (0..16).filter_map(|k| column(h0 / 2f64.powi(k))).collect();
        let best = estimates
            .windows(2)
            .map(|w| {
                let gap = w[0].iter().zip(&w[1]).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
                (gap, &w[1])
            })
            .min_by(|a, b| a.0.total_cmp(&b.0))?
            .1;
        for i in 0..n {
            jac[(i, j)] = best[i];
        }
    }
    Some(jac)
}

fn c11_jacobian() -> Verdict {
    let geoms = [
        ModelGeometry::hemisphere(4).unwrap(),
        ModelGeometry::spherical_cap(3, 1.0).unwrap(),
        ModelGeometry::annulus(4, 1.0, 2.0).unwrap(),
    ];
    let grids: Vec<Grid> = geoms.iter().map(|g| Grid::new(*g, DEFAULT_NODES).unwrap()).collect();
    let f = |s: f64| 1.2 + 0.2 * s.sin();
    let c = |s: f64| 0.1 + 0.05 * s;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut worst, mut count, mut tries) = (0.0_f64, 0, 0);
    while count < 20 && tries < 500 {
        tries += 1;
        let grid = &grids[count % 3];
        let amplitude = rng.random_range(0.02..0.15);
        let u = random_state(grid, &mut rng, amplitude);
        let t = rng.random_range(0.0..if grid.geom.has_pole() { 1.0 } else { 0.45 });
        let eps_sys;
        let path_sys;
        let sys: &dyn ContinuationSystem = if count % 5 == 4 && grid.geom.has_pole() {
            eps_sys = EpsilonEigenSystem { grid, eps: 0.1 };
            &eps_sys
        } else {
            path_sys = PathProblem { grid, f: &f, c: &c, f0: 0.05 };
            &path_sys
        };
        if sys.residual(&u, t).is_err() {
            continue;
        }
        let (Ok(analytic), Some(fd)) = (sys.jacobian(&u, t), oracle_jacobian(sys, &u, t, 1e-5)) else {
            continue;
        };
        let scale = analytic.abs().max().max(1.0);
        worst = worst.max((analytic - fd).abs().max() / scale);
        count += 1;
    }
    verdict(
        count == 20 && worst < 1e-5,
        format!("{count} admissible states, max |J - J_fd| / max(1, |J|) {worst:.2e} < 1e-5"),
    )
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Verdict); 11] = [
        ("sigma2 oracle equivalence", c01_sigma2_oracle),
        ("cone-boundary anchors", c02_cone_anchors),
        ("ellipsoid golden values", c03_ellipsoid),
        ("counterexample geometry", c04_counterexample),
        ("bubble residuals", c05_bubble_residuals),
        ("bubble parameter identities", c06_bubble_identities),
        ("degenerate radial families", c07_degenerate),
        ("barrier exclusion", c08_barrier),
        ("shooting", c09_shooting),
        ("eigen and homotopy anchors", c10_eigen_homotopy),
        ("jacobian check", c11_jacobian),
    ];
    let mut failed = Vec::new();
    for (k, (name, run)) in criteria.iter().enumerate() {
        let v = run();
        println!("{} {:>2} {name}: {}", if v.passed { "PASS" } else { "FAIL" }, k + 1, v.detail);
        if !v.passed {
            failed.push(k + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
