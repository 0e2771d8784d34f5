use sigma2_core::eigenpath::{
    extract_eigenvalue, path_residual, solve_epsilon_eigen, trace_homotopy, Grid, ModelGeometry, PathProblem,
    DEFAULT_NODES,
};
use sigma2_core::error::Sigma2Error;
use sigma2_core::symfunc::binom2;

/// Regression anchor for the π/3 cap in dimension four at 201 nodes.
const CAP_LAMBDA: f64 = 1.5686097080188905;

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn hemisphere(n: usize) -> Grid {
    Grid::new(ModelGeometry::hemisphere(n).unwrap(), DEFAULT_NODES).unwrap()
}

fn cap() -> Grid {
    Grid::new(
        ModelGeometry::spherical_cap(4, std::f64::consts::FRAC_PI_3).unwrap(),
        DEFAULT_NODES,
    )
    .unwrap()
}

#[test]
fn path_residual_vanishes_at_t0_on_the_hemisphere() {
    for n in 3..=6 {
        let grid = hemisphere(n);
        let one = |_: f64| 1.0;
        let zero = |_: f64| 0.0;
        let p = PathProblem { grid: &grid, f: &one, c: &zero, f0: 0.0 };
        let r = path_residual(&p, &vec![0.0; grid.unknowns()], 0.0).unwrap();
        assert!(sup(&r) < 1e-10, "n = {n}: {}", sup(&r));
    }
}

#[test]
fn background_solves_its_own_equation_at_t1() {
    for n in 3..=6 {
        let grid = hemisphere(n);
        let f_bg = binom2(n).sqrt() / 2.0;
        let f = move |_: f64| f_bg;
        let zero = |_: f64| 0.0;
        let p = PathProblem { grid: &grid, f: &f, c: &zero, f0: 0.0 };
        let r = path_residual(&p, &vec![0.0; grid.unknowns()], 1.0).unwrap();
        assert!(sup(&r) < 1e-12, "n = {n}: {}", sup(&r));
    }
}

#[test]
fn perturbed_state_has_large_residual() {
    let grid = hemisphere(4);
    let f_bg = binom2(4).sqrt() / 2.0;
    let f = move |_: f64| f_bg;
    let zero = |_: f64| 0.0;
    let p = PathProblem { grid: &grid, f: &f, c: &zero, f0: 0.0 };
    let (a, b) = grid.geom.s_range();
    let bump = |s: f64| (-(s - 0.5 * (a + b)).powi(2) / 0.3).exp();
    let mut u: Vec<f64> = grid.s.iter().map(|&s| 0.1 * bump(s)).collect();
    u.extend(grid.geom.boundaries().iter().map(|bc| 0.1 * bump(bc.s + grid.h)));
    let r = path_residual(&p, &u, 1.0).unwrap();
    assert!(sup(&r) > 1e-3, "{}", sup(&r));
}

#[test]
fn inadmissible_state_is_flagged() {
    let grid = hemisphere(4);
    let one = |_: f64| 1.0;
    let zero = |_: f64| 0.0;
    let p = PathProblem { grid: &grid, f: &one, c: &zero, f0: 0.0 };
    let u: Vec<f64> = (0..grid.unknowns()).map(|k| 40.0 * (k as f64 * 0.7).sin()).collect();
    assert!(matches!(path_residual(&p, &u, 1.0), Err(Sigma2Error::Inadmissible { .. })));
}

#[test]
fn background_curvature_homotopy_stays_at_zero() {
    let grid = hemisphere(4);
    let f_bg = binom2(4).sqrt() / 2.0;
    let f = move |_: f64| f_bg;
    let zero = |_: f64| 0.0;
    let states = trace_homotopy(&grid, &f, &zero, 0.0, 10).unwrap();
    let last = states.last().unwrap();
    assert_eq!(last.t, 1.0);
    assert!(sup(&last.u) < 1e-9);
}

#[test]
fn unit_curvature_homotopy_reaches_the_constant_ansatz() {
    let grid = hemisphere(4);
    let one = |_: f64| 1.0;
    let zero = |_: f64| 0.0;
    let states = trace_homotopy(&grid, &one, &zero, 0.0, 10).unwrap();
    // σ₂^{1/2}(½ I) = √6/2 = e^{−2u}.
    let target = -0.5 * (6f64.sqrt() / 2.0).ln();
    let last = states.last().unwrap();
    assert_eq!(last.t, 1.0);
    assert!(last.residual_norm < 1e-8);
    assert!(last.u.iter().all(|x| (x - target).abs() < 1e-8));
    for s in &states {
        assert!(s.residual_norm < 1e-9);
        assert!(s.min_margin > 0.0);
        assert!(s.monotone_ok());
    }
}

#[test]
fn boundary_curvature_homotopy_satisfies_the_neumann_row() {
    let grid = hemisphere(4);
    let one = |_: f64| 1.0;
    let c = |_: f64| 0.1;
    let states = trace_homotopy(&grid, &one, &c, 0.0, 10).unwrap();
    let last = states.last().unwrap();
    assert_eq!(last.t, 1.0);
    assert!(last.boundary_residual < 1e-8, "{}", last.boundary_residual);
    let mut full = last.u.clone();
    full.extend(&last.ghosts);
    let p = PathProblem { grid: &grid, f: &one, c: &c, f0: 0.0 };
    let r = path_residual(&p, &full, 1.0).unwrap();
    assert!(sup(&r[grid.nodes()..]) < 1e-8);
    assert!(sup(&r) < 1e-8);
    assert!(last.u[0] > last.u[last.u.len() - 1]);
}

#[test]
fn homotopy_guards() {
    let cap = cap();
    let one = |_: f64| 1.0;
    let zero = |_: f64| 0.0;
    let neg = |_: f64| -1.0;
    assert!(trace_homotopy(&cap, &one, &zero, 0.0, 10).is_err());
    let grid = hemisphere(4);
    assert!(trace_homotopy(&grid, &neg, &zero, 0.0, 10).is_err());
    assert!(trace_homotopy(&grid, &one, &neg, 0.0, 10).is_err());
    assert!(trace_homotopy(&grid, &one, &zero, -0.1, 10).is_err());
}

#[test]
fn hemisphere_eigenvalues() {
    for (n, expected) in [(3, 0.75), (4, 1.5)] {
        let e = extract_eigenvalue(&hemisphere(n), &[0.2, 0.1, 0.05]).unwrap();
        assert!((e.exp_lambda - expected).abs() < 1e-6, "n = {n}: {}", e.exp_lambda);
        assert!(sup(&e.v) < 1e-9);
        assert!(e.cauchy);
        assert!(e.limit_residual < 1e-6);
    }
}

#[test]
fn hemisphere_epsilon_solutions_are_constant() {
    let grid = hemisphere(4);
    for eps in [0.3, 0.1] {
        let s = solve_epsilon_eigen(&grid, eps).unwrap();
        assert!(s.residual_norm < 1e-10);
        assert!((s.eps_u_max - s.eps_u_min).abs() < 1e-10);
        assert!(s.sandwich_ok());
    }
}

#[test]
fn cap_eigenvalue_regression_anchor() {
    let e = extract_eigenvalue(&cap(), &[0.2, 0.1, 0.05]).unwrap();
    assert!((e.lambda - CAP_LAMBDA).abs() < 1e-8, "{:.16}", e.lambda);
    assert!(e.limit_residual < 1e-6);
    assert!(e.cauchy);
    let spread = e.v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - e.v.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread > 1e-3, "v is not constant: spread {spread}");
    let mean: f64 = e.v.iter().sum::<f64>() / e.v.len() as f64;
    assert!(mean.abs() < 0.1);
    let d: Vec<f64> = e.sequence.windows(2).map(|w| (w[1].1 - w[0].1).abs()).collect();
    assert!(d.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn cap_boundary_mean_curvature_pushes_past_the_interior_sandwich() {
    // The C0 sandwich is derived with a minimal boundary; the π/3 cap has h_g > 0
    // and the maximum of εu sits on the boundary, above the interior bound.
    let s = solve_epsilon_eigen(&cap(), 0.1).unwrap();
    assert!(s.residual_norm < 1e-10);
    assert!(s.eps_u_min >= s.sandwich_lower);
    assert!(s.eps_u_max > s.sandwich_upper);
    assert!(!s.sandwich_ok());
}

#[test]
fn eigen_input_validation() {
    let grid = hemisphere(4);
    assert!(solve_epsilon_eigen(&grid, 0.0).is_err());
    assert!(extract_eigenvalue(&grid, &[0.1]).is_err());
    assert!(extract_eigenvalue(&grid, &[0.1, 0.2]).is_err());
    let annulus = Grid::new(ModelGeometry::annulus(4, 1.0, 2.0).unwrap(), 101).unwrap();
    assert!(solve_epsilon_eigen(&annulus, 0.1).is_err());
}
