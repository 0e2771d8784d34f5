//! Named invariant checks run by the `verify-all` command.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::bubble::{boundary_bubble, interior_bubble, make_bubble_params, verify_bubble, verify_function, BubbleGrid};
use crate::conformal::Rescaled;
use crate::eigenpath::{
    extract_eigenvalue, jacobian_fd_discrepancy, path_residual, trace_homotopy, ContinuationSystem,
    EpsilonEigenSystem, Grid, ModelGeometry, PathProblem, DEFAULT_NODES,
};
use crate::ellipsoid::{counterexample_geometry, find_umbilic_points, EllipsoidSpec, SearchOptions, UmbilicMode};
use crate::error::Result;
use crate::radial::{
    barrier_profile, bubble_restriction_u1, degenerate_family, family_u1, radial_schouten_eigs, radial_sigmas,
    shoot_annulus, BarrierProfile, DegenerateCase, RadialFunction, RadialSample, ShootOptions, Termination,
};
use crate::conformal::Convention;
use crate::symfunc::{binom2, cone_membership, sigma2, sigma2_of, sigma2_pairwise, ConeVerdict, SymmetricMatrixN};

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    /// Worst measured quantity of the check.
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl CheckOutcome {
    fn below(name: &'static str, measured: f64, tolerance: f64, detail: String) -> Self {
        Self {
            name,
            passed: measured < tolerance,
            measured,
            tolerance,
            detail,
        }
    }
}

type CheckFn = fn(u64) -> Result<CheckOutcome>;

const CHECKS: &[(&str, CheckFn)] = &[
    ("sigma2_oracle", sigma2_oracle),
    ("cone_anchors", cone_anchors),
    ("ellipsoid_umbilics", ellipsoid_umbilics),
    ("ellipsoid_generic", ellipsoid_generic),
    ("counterexample", counterexample),
    ("bubble_residuals", bubble_residuals),
    ("bubble_identities", bubble_identities),
    ("degenerate_families", degenerate_families),
    ("barrier_exclusion", barrier_exclusion),
    ("shooting", shooting),
    ("eigen_homotopy", eigen_homotopy),
    ("jacobian", jacobian),
];

pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|(n, _)| *n).collect()
}

/// Runs one named check; `None` for an unknown name.
pub fn run_check(name: &str, seed: u64) -> Option<CheckOutcome> {
    CHECKS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(n, f)| guard(n, f(seed)))
}

/// Runs every check in parallel, in the fixed order of [`check_names`].
pub fn run_all(seed: u64) -> Vec<CheckOutcome> {
    CHECKS.par_iter().map(|(n, f)| guard(n, f(seed))).collect()
}

fn guard(name: &'static str, r: Result<CheckOutcome>) -> CheckOutcome {
    r.unwrap_or_else(|e| CheckOutcome {
        name,
        passed: false,
        measured: f64::NAN,
        tolerance: f64::NAN,
        detail: format!("error: {e}"),
    })
}

fn sigma2_oracle(seed: u64) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for k in 0..1000 {
        let n = 3 + k % 4;
        let w = SymmetricMatrixN::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal))?;
        let lam = w.eigenvalues();
        let pairwise = sigma2_pairwise(&lam);
        let mut scale = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                scale += (lam[i] * lam[j]).abs();
            }
        }
        worst = worst.max((sigma2(&w) - pairwise).abs() / scale.max(f64::MIN_POSITIVE));
    }
    Ok(CheckOutcome::below("sigma2_oracle", worst, 1e-12, "1000 random matrices, n = 3..6".into()))
}

fn cone_anchors(_seed: u64) -> Result<CheckOutcome> {
    let a = [-0.5, 1.0, 1.0];
    let b = [-1.0, 1.0, 1.0, 1.0];
    let worst = sigma2_of(&a).abs().max(sigma2_of(&b).abs());
    let verdicts = [cone_membership(&a, 2, 1e-10)?.verdict, cone_membership(&b, 2, 1e-10)?.verdict];
    let ok = verdicts.iter().all(|v| *v == ConeVerdict::Boundary);
    let mut out = CheckOutcome::below("cone_anchors", worst, 1e-15, format!("verdicts {verdicts:?}"));
    out.passed &= ok;
    Ok(out)
}

fn ellipsoid_umbilics(_seed: u64) -> Result<CheckOutcome> {
    let spec = EllipsoidSpec::new(vec![1.0, 2.0, 3.0])?;
    let rep = find_umbilic_points(&spec, UmbilicMode::ClosedFormN3)?;
    let (x, z) = ((3.0f64 / 8.0).sqrt(), 3.0 * (5.0f64 / 8.0).sqrt());
    let mut worst = 0.0_f64;
    for p in &rep.points {
        let d = (p[0].abs() - x).abs().max(p[1].abs()).max((p[2].abs() - z).abs());
        worst = worst.max(d);
    }
    let mut out = CheckOutcome::below(
        "ellipsoid_umbilics",
        worst,
        1e-8,
        format!("{} points, max defect {:e}", rep.points.len(), rep.min_defect),
    );
    out.passed &= rep.points.len() == 4;
    Ok(out)
}

fn ellipsoid_generic(seed: u64) -> Result<CheckOutcome> {
    let spec = EllipsoidSpec::new(vec![1.0, 1.1, 1.2, 1.3])?;
    let rep = find_umbilic_points(
        &spec,
        UmbilicMode::NumericSearch(SearchOptions {
            seed,
            ..SearchOptions::default()
        }),
    )?;
    Ok(CheckOutcome {
        name: "ellipsoid_generic",
        passed: rep.sample_min_defect > 1e-4 && rep.points.is_empty(),
        measured: rep.sample_min_defect,
        tolerance: 1e-4,
        detail: format!("{} samples, refined min defect {:e}", rep.samples, rep.min_defect),
    })
}

fn counterexample(_seed: u64) -> Result<CheckOutcome> {
    let mut worst = 0.0_f64;
    let mut defect_ok = true;
    for eps in [0.1, 0.01, 0.001] {
        let rep = counterexample_geometry(3, eps)?;
        worst = worst.max(rep.gap / eps);
        defect_ok &= rep.defect > 0.0;
    }
    let mut out = CheckOutcome::below("counterexample", worst, 5.0, "max |h+1|/eps over eps = 0.1, 0.01, 0.001".into());
    out.passed &= defect_ok;
    Ok(out)
}

fn bubble_residuals(seed: u64) -> Result<CheckOutcome> {
    let mut worst = 0.0_f64;
    let mut control = f64::INFINITY;
    for n in [3, 4] {
        for f in [1.0, 2.0] {
            for c in [0.0, 0.5] {
                let params = make_bubble_params(n, f, c)?;
                let grid = BubbleGrid::random(n, 30, 3.0, seed);
                let r = verify_bubble(&params, &grid)?;
                worst = worst.max(r.interior_max).max(r.boundary_max);
                let bad = verify_function(&boundary_bubble(&params).with_rate_factor(1.1), f, c, &grid)?;
                control = control.min(bad.interior_max.max(bad.boundary_max));
            }
        }
    }
    let mut out = CheckOutcome::below("bubble_residuals", worst, 1e-8, format!("perturbed control {control:e}"));
    out.passed &= control > 1e-3;
    Ok(out)
}

fn bubble_identities(seed: u64) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let n = rng.random_range(3..=8);
        let f = rng.random_range(0.1..10.0);
        let c = rng.random_range(0.0..5.0);
        worst = worst.max(make_bubble_params(n, f, c)?.identities().max_abs());
    }
    Ok(CheckOutcome::below("bubble_identities", worst, 1e-10, "1000 random (n, f, c)".into()))
}

fn degenerate_residual(p: &dyn RadialFunction, n: usize) -> Result<(f64, f64)> {
    let (mut res, mut min_s1) = (0.0_f64, f64::INFINITY);
    for k in 0..200 {
        let r = 0.1 * 100f64.powf(k as f64 / 199.0);
        let (u, du, ddu) = p.eval(r);
        let (lr, lt) = radial_schouten_eigs(RadialSample { r, u, du, ddu }, n, Convention::Pow)?;
        let (s1, s2) = radial_sigmas(lr, lt, n);
        res = res.max(s2.abs() / (1.0 + lr * lr + lt * lt));
        min_s1 = min_s1.min(s1);
    }
    Ok((res, min_s1))
}

fn degenerate_families(seed: u64) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst, mut min_s1) = (0.0_f64, f64::INFINITY);
    for _ in 0..50 {
        let a = degenerate_family(
            4,
            DegenerateCase::A {
                c1: rng.random_range(0.1..10.0),
                c2: rng.random_range(0.0..=2.0),
            },
        )?;
        let b = degenerate_family(
            3,
            DegenerateCase::B {
                c3: rng.random_range(0.0..5.0),
                c4: rng.random_range(0.01..5.0),
            },
        )?;
        for (p, n) in [(a, 4), (b, 3)] {
            let (r, s) = degenerate_residual(&p, n)?;
            worst = worst.max(r);
            min_s1 = min_s1.min(s);
        }
    }
    let mut out = CheckOutcome::below("degenerate_families", worst, 1e-9, format!("min sigma1 {min_s1:e}"));
    out.passed &= min_s1 >= -1e-9;
    Ok(out)
}

fn barrier_exclusion(_seed: u64) -> Result<CheckOutcome> {
    let mut max_sigma2 = f64::NEG_INFINITY;
    let mut bound_ok = true;
    for n in [3, 4] {
        for delta in [0.1, 0.25, 0.4] {
            let p = barrier_profile(n, delta, None)?;
            for r in BarrierProfile::log_grid(p.r1, 100, 3.0) {
                let s2 = p.sigma2_direct(r);
                max_sigma2 = max_sigma2.max(s2 / p.bound(r).abs().max(f64::MIN_POSITIVE));
                if n == 3 {
                    let closed = -3.0 * delta * delta * (1.0 - delta).powi(2) / r.powi(4);
                    bound_ok &= s2 <= closed * (1.0 - 1e-12);
                }
            }
        }
    }
    let mut out = CheckOutcome::below(
        "barrier_exclusion",
        max_sigma2,
        0.0,
        "largest sigma2 relative to the bound magnitude below r1".into(),
    );
    out.passed &= bound_ok;
    Ok(out)
}

fn shooting(_seed: u64) -> Result<CheckOutcome> {
    let mut worst = 0.0_f64;
    let mut detail = String::new();
    let mut ok = true;
    for n in [3, 4] {
        let u1 = bubble_restriction_u1(n);
        let shot = shoot_annulus(n, 2.0, 0.0, u1, ShootOptions::default())?;
        let bubble = Rescaled::new(interior_bubble(n, 1.0)?, n, (2.0 * binom2(n).sqrt()).sqrt())?;
        for s in &shot.profile.samples {
            worst = worst.max(((s.u - bubble.value(s.r)) / s.u).abs());
        }
        ok &= shot.diagnostics.termination == Termination::Reached;
        let mut prev = None;
        for j in 0..3 {
            let d = shoot_annulus(n, 1.05, -0.5, family_u1(n, -0.5, j)?, ShootOptions::default())?.diagnostics;
            let sup = d.sup_u + d.sup_inv_u + d.sup_du;
            ok &= d.termination == Termination::Reached && d.halving_drift.is_some_and(|x| x < 1e-6) && sup < 50.0;
            if let Some(p) = prev {
                ok &= d.ddu1.abs() >= 2.0 * p;
            }
            prev = Some(d.ddu1.abs());
            detail.push_str(&format!("n{n} j{j} |u''(1)| {:.6e}; ", d.ddu1.abs()));
        }
    }
    let mut out = CheckOutcome::below("shooting", worst, 1e-6, detail);
    out.passed &= ok;
    Ok(out)
}

fn eigen_homotopy(_seed: u64) -> Result<CheckOutcome> {
    let mut worst = 0.0_f64;
    for n in [3, 4] {
        let grid = Grid::new(ModelGeometry::hemisphere(n)?, DEFAULT_NODES)?;
        let e = extract_eigenvalue(&grid, &[0.2, 0.1, 0.05])?;
        worst = worst.max((e.exp_lambda - binom2(n) / 4.0).abs());
        worst = worst.max(e.v.iter().fold(0.0, |m: f64, x| m.max(x.abs())));
    }
    let grid = Grid::new(ModelGeometry::hemisphere(4)?, DEFAULT_NODES)?;
    let one = |_: f64| 1.0;
    let zero = |_: f64| 0.0;
    let p = PathProblem { grid: &grid, f: &one, c: &zero, f0: 0.0 };
    let r0 = path_residual(&p, &vec![0.0; grid.unknowns()], 0.0)?;
    let r0max = r0.iter().fold(0.0, |m: f64, x| m.max(x.abs()));
    let states = trace_homotopy(&grid, &one, &zero, 0.0, 10)?;
    let last = states.last().expect("non-empty");
    let target = -0.5 * (6f64.sqrt() / 2.0).ln();
    let gap = last.u.iter().fold(0.0, |m: f64, x| m.max((x - target).abs()));
    let ok = r0max < 1e-10 && last.t == 1.0 && last.residual_norm < 1e-8 && gap < 1e-8;
    let mut out = CheckOutcome::below(
        "eigen_homotopy",
        worst,
        1e-6,
        format!("t=0 residual {r0max:e}, endpoint gap {gap:e}, {} states", states.len()),
    );
    out.passed &= ok && states.iter().all(|s| s.monotone_ok());
    Ok(out)
}

/// Random admissible states: smooth radial modes of moderate size.
pub fn random_state(grid: &Grid, rng: &mut ChaCha8Rng, amplitude: f64) -> Vec<f64> {
    let (a, b) = grid.geom.s_range();
    let len = b - a;
    let coeffs: Vec<f64> = (0..4).map(|_| amplitude * rng.random_range(-1.0..1.0)).collect();
    let shift = rng.random_range(-0.5..0.5);
    let eval = |s: f64| {
        shift
            + coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c * (k as f64 * std::f64::consts::PI * (s - a) / len).cos() / (1 + k * k) as f64)
                .sum::<f64>()
    };
    let mut u: Vec<f64> = grid.s.iter().map(|&s| eval(s)).collect();
    let h = grid.h;
    for bc in grid.geom.boundaries() {
        let s = if bc.end == crate::eigenpath::End::Left { a - h } else { b + h };
        u.push(eval(s));
    }
    u
}

fn jacobian(seed: u64) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let geoms = [
        ModelGeometry::hemisphere(4)?,
        ModelGeometry::spherical_cap(3, 1.0)?,
        ModelGeometry::annulus(4, 1.0, 2.0)?,
    ];
    let grids: Vec<Grid> = geoms.iter().map(|g| Grid::new(*g, DEFAULT_NODES)).collect::<Result<_>>()?;
    let f = |s: f64| 1.0 + 0.3 * s.cos();
    let c = |s: f64| 0.2 + 0.1 * s;
    let mut worst = 0.0_f64;
    let mut count = 0;
    let mut attempts = 0;
    while count < 20 && attempts < 1000 {
        attempts += 1;
        let grid = &grids[count % 3];
        let amplitude = rng.random_range(0.02..0.2);
        let u = random_state(grid, &mut rng, amplitude);
        let t = if grid.geom.has_pole() { rng.random_range(0.0..1.0) } else { rng.random_range(0.0..0.45) };
        let sys: Box<dyn ContinuationSystem> = if count % 4 == 3 && grid.geom.has_pole() {
            Box::new(EpsilonEigenSystem { grid, eps: 0.1 })
        } else {
            Box::new(PathProblem { grid, f: &f, c: &c, f0: 0.1 })
        };
        if sys.residual(&u, t).is_err() {
            continue;
        }
        match jacobian_fd_discrepancy(sys.as_ref(), &u, t, 1e-5) {
            Ok(d) => {
                worst = worst.max(d);
                count += 1;
            }
            Err(_) => continue,
        }
    }
    let mut out = CheckOutcome::below("jacobian", worst, 1e-5, format!("{count} admissible states"));
    out.passed &= count == 20;
    Ok(out)
}
