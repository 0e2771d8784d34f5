use serde_json::{json, Map, Value};

use sigma2_core::bubble::{boundary_bubble, make_bubble_params, verify_function, BubbleGrid};
use sigma2_core::conformal::{schouten_exp, schouten_pow, Convention, PointFrameData};
use sigma2_core::eigenpath::{
    extract_eigenvalue, solve_epsilon_eigen, trace_homotopy, Grid, ModelGeometry, PathState,
};
use sigma2_core::ellipsoid::{
    counterexample_geometry, find_umbilic_points, mean_curvature_closed_form, surface_geometry, umbilic_residual,
    EllipsoidSpec, Orientation, SearchOptions, UmbilicMode,
};
use sigma2_core::radial::{
    barrier_profile, bubble_restriction_u1, degenerate_family, family_u1, geometric_sigma2, radial_point_jet,
    radial_schouten_eigs, radial_sigmas, shoot_annulus, BarrierProfile, DegenerateCase, RadialFunction,
    RadialProfile, RadialSample, ShootOptions, Termination,
};
use sigma2_core::symfunc::{
    cone_membership, cone_of_matrix, newton_tensor_t1, sigma1, sigma2, sigma2_kronecker, sigma2_pairwise,
    SymmetricMatrixN, DEFAULT_CONE_TOL,
};
use sigma2_core::{verify, Sigma2Error};

use crate::args::*;
use crate::report::{num, nums, rows, Report};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
}

impl From<Sigma2Error> for CliError {
    fn from(e: Sigma2Error) -> Self {
        match e {
            Sigma2Error::Inadmissible(_) | Sigma2Error::NonConvergence { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

/// Everything a command produces besides its report.
#[derive(Default)]
pub struct Extras {
    pub csv: Option<Vec<[f64; 6]>>,
    /// Scalars lifted into a sweep index.
    pub headline: Map<String, Value>,
}

impl Extras {
    fn headline(&mut self, key: &str, v: Value) {
        self.headline.insert(key.into(), v);
    }
}

type CmdResult = Result<(), CliError>;

pub fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Symfunc(_) => "symfunc",
        Command::Cone(_) => "cone",
        Command::Ellipsoid(EllipsoidCommand::Geometry(_)) => "ellipsoid geometry",
        Command::Ellipsoid(EllipsoidCommand::Umbilic(_)) => "ellipsoid umbilic",
        Command::Ellipsoid(EllipsoidCommand::Counterexample(_)) => "ellipsoid counterexample",
        Command::Bubble(_) => "bubble",
        Command::Radial(RadialCommand::Eigs(_)) => "radial eigs",
        Command::Radial(RadialCommand::Degenerate(_)) => "radial degenerate",
        Command::Barrier(_) => "barrier",
        Command::Shoot(_) => "shoot",
        Command::Eigen(_) => "eigen",
        Command::Homotopy(_) => "homotopy",
        Command::VerifyAll(_) => "verify-all",
        Command::Sweep(_) => "sweep",
    }
}

/// Runs a non-sweep command, filling `r` and `x`.
pub fn run(cmd: &Command, seed: u64, r: &mut Report, x: &mut Extras) -> CmdResult {
    match cmd {
        Command::Symfunc(a) => symfunc(a, r),
        Command::Cone(a) => cone(a, r),
        Command::Ellipsoid(EllipsoidCommand::Geometry(a)) => ellipsoid_geometry(a, r),
        Command::Ellipsoid(EllipsoidCommand::Umbilic(a)) => umbilic(a, seed, r, x),
        Command::Ellipsoid(EllipsoidCommand::Counterexample(a)) => counterexample(a, r, x),
        Command::Bubble(a) => bubble(a, seed, r, x),
        Command::Radial(RadialCommand::Eigs(a)) => radial_eigs(a, r),
        Command::Radial(RadialCommand::Degenerate(a)) => degenerate(a, r, x),
        Command::Barrier(a) => barrier(a, r, x),
        Command::Shoot(a) => shoot(a, r, x),
        Command::Eigen(a) => eigen(a, r, x),
        Command::Homotopy(a) => homotopy(a, r, x),
        Command::VerifyAll(a) => verify_all(a, seed, r),
        Command::Sweep(_) => Err(CliError::Usage("sweep cannot run inside a sweep".into())),
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn matrix_value(m: &SymmetricMatrixN) -> Value {
    rows(&m.rows())
}

fn parse_matrix(text: &str) -> Result<SymmetricMatrixN, CliError> {
    let rows: Vec<Vec<f64>> = text
        .split(';')
        .map(|row| {
            row.split(',')
                .map(|e| e.trim().parse::<f64>().map_err(|_| usage(format!("bad matrix entry '{e}'"))))
                .collect()
        })
        .collect::<Result<_, _>>()?;
    Ok(SymmetricMatrixN::from_rows(&rows)?)
}

fn symfunc(a: &SymfuncArgs, r: &mut Report) -> CmdResult {
    let w = match (&a.matrix, &a.diag) {
        (Some(m), _) => parse_matrix(m)?,
        (None, Some(d)) => SymmetricMatrixN::from_diagonal(d)?,
        (None, None) => return Err(usage("give --matrix or --diag")),
    };
    r.input("matrix", matrix_value(&w));
    let s2 = sigma2(&w);
    let lam = w.eigenvalues();
    let t1 = newton_tensor_t1(&w);
    let euler = t1.trace_product(&w)?;
    let cone = cone_of_matrix(&w, 2, DEFAULT_CONE_TOL)?;
    r.output("sigma1", num(sigma1(&w)))
        .output("sigma2", num(s2))
        .output("eigenvalues", nums(&lam))
        .output("newton_tensor_t1", matrix_value(&t1))
        .output("cone_verdict", cone.verdict.as_str());
    let scale = 1.0 + w.frobenius_sq();
    let res_k = (s2 - sigma2_kronecker(&w)).abs();
    let res_p = (s2 - sigma2_pairwise(&lam)).abs();
    let res_e = (euler - 2.0 * s2).abs();
    r.residual("kronecker", res_k).residual("pairwise", res_p).residual("euler", res_e);
    r.pass = res_k.max(res_p).max(res_e) <= 1e-12 * scale;
    Ok(())
}

fn cone(a: &ConeArgs, r: &mut Report) -> CmdResult {
    r.input("lambda", nums(&a.lambda)).input("k", a.k).input("tol", num(a.tol));
    let rep = cone_membership(&a.lambda, a.k, a.tol)?;
    r.output("verdict", rep.verdict.as_str())
        .output("sigma1", num(rep.sigma1))
        .output("sigma2", num(rep.sigma2))
        .output("margin", num(rep.margin))
        .output("scaled_tol", num(rep.scaled_tol));
    Ok(())
}

fn ellipsoid_geometry(a: &EllipsoidGeometryArgs, r: &mut Report) -> CmdResult {
    let orientation = if a.outward { Orientation::Outward } else { Orientation::Inward };
    let spec = EllipsoidSpec::with_orientation(a.axes.clone(), orientation)?;
    r.input("axes", nums(&a.axes))
        .input("point", nums(&a.point))
        .input("orientation", if a.outward { "outward" } else { "inward" });
    let g = surface_geometry(&spec, &a.point)?;
    let closed = mean_curvature_closed_form(&spec, &g.point);
    r.output("point", nums(&g.point))
        .output("projected", g.projected)
        .output("normal", nums(&g.normal))
        .output("second_fundamental_form", matrix_value(&g.l))
        .output("principal_curvatures", nums(&g.l.eigenvalues()))
        .output("mean_curvature_trace", num(g.h))
        .output("mean_curvature_closed_form", num(closed))
        .output("umbilic_defect", num(g.umbilic_defect));
    let res = (g.h - closed).abs();
    r.residual("mean_curvature", res);
    r.pass = res <= 1e-10 * (1.0 + closed.abs());
    Ok(())
}

fn umbilic(a: &UmbilicArgs, seed: u64, r: &mut Report, x: &mut Extras) -> CmdResult {
    let spec = EllipsoidSpec::new(a.axes.clone())?;
    let increasing = a.axes.windows(2).all(|w| w[0] < w[1]);
    let closed = match a.mode {
        UmbilicModeArg::Closed => true,
        UmbilicModeArg::Numeric => false,
        UmbilicModeArg::Auto => a.axes.len() == 3 && increasing,
    };
    let mode = if closed {
        UmbilicMode::ClosedFormN3
    } else {
        UmbilicMode::NumericSearch(SearchOptions {
            samples: a.samples,
            seed,
            refine_seeds: a.refine_seeds,
        })
    };
    r.input("axes", nums(&a.axes))
        .input("mode", if closed { "closed" } else { "numeric" })
        .input("samples", a.samples)
        .input("seed", seed);
    let rep = find_umbilic_points(&spec, mode)?;
    let defects: Vec<f64> = rep
        .points
        .iter()
        .map(|p| umbilic_residual(&spec, p))
        .collect::<Result<_, _>>()?;
    let worst = defects.iter().fold(0.0_f64, |m, d| m.max(d.abs()));
    r.output("count", rep.points.len())
        .output("points", rows(&rep.points))
        .output("point_defects", nums(&defects))
        .output("degenerate", rep.degenerate)
        .output("min_defect", num(rep.min_defect))
        .output("min_defect_point", nums(&rep.min_defect_point));
    if !closed {
        r.output("sample_min_defect", num(rep.sample_min_defect)).output("samples", rep.samples);
    }
    r.residual("max_point_defect", worst);
    r.pass = worst < 1e-9;
    x.headline("count", json!(rep.points.len()));
    x.headline("min_defect", num(rep.min_defect));
    Ok(())
}

fn counterexample(a: &CounterexampleArgs, r: &mut Report, x: &mut Extras) -> CmdResult {
    r.input("n", a.n).input("eps", num(a.eps));
    let c = counterexample_geometry(a.n, a.eps)?;
    r.output("axes", nums(&c.axes))
        .output("x0", nums(&c.x0))
        .output("h_eps", num(c.h_eps))
        .output("gap_h_plus_1", num(c.gap))
        .output("defect", num(c.defect))
        .output("principal_curvatures", nums(&c.principal_curvatures));
    r.residual("gap_over_eps", if a.eps > 0.0 { c.gap / a.eps } else { c.gap });
    r.pass = c.gap <= 5.0 * a.eps && (a.eps == 0.0 || c.defect > 0.0);
    x.headline("gap_h_plus_1", num(c.gap));
    x.headline("defect", num(c.defect));
    Ok(())
}

fn bubble(a: &BubbleArgs, seed: u64, r: &mut Report, x: &mut Extras) -> CmdResult {
    r.input("n", a.n)
        .input("f", num(a.f))
        .input("c", num(a.c))
        .input("points", a.points)
        .input("extent", num(a.extent))
        .input("rate_factor", num(a.rate_factor))
        .input("seed", seed);
    if !(a.rate_factor > 0.0) {
        return Err(usage("rate factor must be positive"));
    }
    let p = make_bubble_params(a.n, a.f, a.c)?;
    let ids = p.identities();
    let (la, lb, lx) = p.liouville_form();
    r.output(
        "params",
        json!({
            "b": num(p.b), "ttilde_c": num(p.ttilde_c), "ybar_n": num(p.ybar_n),
            "lambda": num(p.lambda_cap), "t_c": num(p.t_c), "wall_t": num(p.wall_t),
        }),
    )
    .output("liouville", json!({ "a": num(la), "b": num(lb), "xbar_n": num(lx) }));
    let grid = BubbleGrid::random(a.n, a.points, a.extent, seed);
    let v = boundary_bubble(&p).with_rate_factor(a.rate_factor);
    let res = verify_function(&v, a.f, a.c, &grid)?;
    r.residual("interior_sigma2", res.interior_max)
        .residual("boundary_neumann", res.boundary_max)
        .residual("identities", ids.max_abs());
    let worst = res.interior_max.max(res.boundary_max);
    if a.rate_factor == 1.0 {
        r.output("mode", "exact");
        r.pass = worst < 1e-8 && ids.max_abs() < 1e-10;
    } else {
        r.output("mode", "negative_control");
        r.pass = worst > 1e-3;
    }
    x.headline("residual", num(worst));
    Ok(())
}

struct Taylor {
    r0: f64,
    u: f64,
    du: f64,
    ddu: f64,
}

impl RadialFunction for Taylor {
    fn eval(&self, r: f64) -> (f64, f64, f64) {
        let d = r - self.r0;
        (self.u + self.du * d + 0.5 * self.ddu * d * d, self.du + self.ddu * d, self.ddu)
    }
}

fn radial_eigs(a: &RadialEigsArgs, r: &mut Report) -> CmdResult {
    let conv = match a.convention {
        ConventionArg::Exp => Convention::Exp,
        ConventionArg::Pow => Convention::Pow,
    };
    r.input("n", a.n)
        .input("convention", conv.as_str())
        .input("r", num(a.r))
        .input("u", num(a.u))
        .input("du", num(a.du))
        .input("ddu", num(a.ddu));
    let s = RadialSample {
        r: a.r,
        u: a.u,
        du: a.du,
        ddu: a.ddu,
    };
    let (lr, lt) = radial_schouten_eigs(s, a.n, conv)?;
    let (s1, s2) = radial_sigmas(lr, lt, a.n);
    let mut point = vec![0.0; a.n];
    point[0] = a.r;
    let jet = Taylor {
        r0: a.r,
        u: a.u,
        du: a.du,
        ddu: a.ddu,
    };
    let (u, grad, hess) = radial_point_jet(&jet, &point)?;
    let zero = SymmetricMatrixN::zeros(a.n)?;
    let dense = match conv {
        Convention::Exp => schouten_exp(&PointFrameData::new(zero, u, grad, hess)?)?,
        Convention::Pow => schouten_pow(a.n, u, &grad, &hess, &zero)?,
    };
    let cone = cone_membership(&sigma2_core::radial::radial_eigen_vector(lr, lt, a.n), 2, DEFAULT_CONE_TOL)?;
    r.output("lambda_r", num(lr))
        .output("lambda_t", num(lt))
        .output("sigma1", num(s1))
        .output("sigma2", num(s2))
        .output("geometric_sigma2", num(geometric_sigma2(s, a.n, conv)?))
        .output("cone_verdict", cone.verdict.as_str());
    let res = (sigma2(&dense) - s2).abs();
    r.residual("dense_sigma2", res);
    r.pass = res <= 1e-10 * (1.0 + s2.abs());
    Ok(())
}

fn write_table(x: &mut Extras, table: Vec<[f64; 6]>) {
    x.csv = Some(table);
}

fn degenerate(a: &DegenerateArgs, r: &mut Report, x: &mut Extras) -> CmdResult {
    let case = match a.case {
        CaseArg::A => DegenerateCase::A { c1: a.c1, c2: a.c2 },
        CaseArg::B => DegenerateCase::B { c3: a.c3, c4: a.c4 },
    };
    r.input("n", a.n)
        .input("case", if a.case == CaseArg::A { "a" } else { "b" })
        .input("r_min", num(a.r_min))
        .input("r_max", num(a.r_max))
        .input("points", a.points);
    match case {
        DegenerateCase::A { c1, c2 } => r.input("c1", num(c1)).input("c2", num(c2)),
        DegenerateCase::B { c3, c4 } => r.input("c3", num(c3)).input("c4", num(c4)),
    };
    if !(a.r_min > 0.0 && a.r_max > a.r_min && a.points >= 2) {
        return Err(usage("need 0 < r_min < r_max and at least 2 points"));
    }
    let p = degenerate_family(a.n, case)?;
    let radii: Vec<f64> = (0..a.points)
        .map(|k| a.r_min * (a.r_max / a.r_min).powf(k as f64 / (a.points - 1) as f64))
        .collect();
    let table = RadialProfile::from_function(&p, Convention::Pow, a.n, &radii)?.table()?;
    let mut res = 0.0_f64;
    let mut min_s1 = f64::INFINITY;
    for row in &table {
        let s = RadialSample {
            r: row[0],
            u: row[1],
            du: row[2],
            ddu: row[3],
        };
        let (lr, lt) = radial_schouten_eigs(s, a.n, Convention::Pow)?;
        res = res.max(row[5].abs() / (1.0 + lr * lr + lt * lt));
        min_s1 = min_s1.min(row[4]);
    }
    r.output("mu_gamma_plus", num(p.mu)).output("min_sigma1", num(min_s1));
    r.residual("sigma2_scaled", res);
    r.pass = res < 1e-9 && min_s1 >= -1e-9;
    x.headline("sigma2_scaled", num(res));
    write_table(x, table);
    Ok(())
}

fn barrier(a: &BarrierArgs, r: &mut Report, x: &mut Extras) -> CmdResult {
    r.input("n", a.n)
        .input("delta", num(a.delta))
        .input("points", a.points)
        .input("decades", num(a.decades));
    if let Some(b) = a.rate_b {
        r.input("rate_b", num(b));
    }
    if a.points == 0 || !(a.decades > 0.0) {
        return Err(usage("need points > 0 and decades > 0"));
    }
    let p = barrier_profile(a.n, a.delta, a.rate_b)?;
    let grid = BarrierProfile::log_grid(p.r1, a.points, a.decades);
    let mut max_s2 = f64::NEG_INFINITY;
    let mut bound_gap = f64::NEG_INFINITY;
    let mut table = Vec::with_capacity(grid.len());
    for &rr in &grid {
        let s2 = p.sigma2_direct(rr);
        max_s2 = max_s2.max(s2);
        if a.n == 3 {
            bound_gap = bound_gap.max((s2 - p.bound(rr)) / p.bound(rr).abs());
        }
        let (u, du, ddu) = p.eval(rr);
        let (lr, lt) = radial_schouten_eigs(RadialSample { r: rr, u, du, ddu }, a.n, Convention::Pow)?;
        let (s1, s2t) = radial_sigmas(lr, lt, a.n);
        table.push([rr, u, du, ddu, s1, s2t]);
    }
    let chain: Map<String, Value> = p.radius_chain.iter().map(|(k, v)| ((*k).to_string(), num(*v))).collect();
    r.output("rate_b", num(p.rate_b))
        .output("r1", num(p.r1))
        .output("radius_chain", Value::Object(chain))
        .output("r_empirical", num(p.r_empirical))
        .output("max_sigma2", num(max_s2));
    r.pass = max_s2 < 0.0;
    if a.n == 3 {
        r.residual("bound_excess_relative", bound_gap);
        r.pass &= bound_gap <= 1e-12;
    }
    x.headline("r1", num(p.r1));
    x.headline("max_sigma2", num(max_s2));
    write_table(x, table);
    Ok(())
}

fn termination_value(t: &Termination) -> Value {
    match t {
        Termination::Reached => json!({ "kind": "reached" }),
        Termination::ConeExit { r } => json!({ "kind": "cone_exit", "r": num(*r) }),
        Termination::NonPositive { r } => json!({ "kind": "non_positive", "r": num(*r) }),
    }
}

fn shoot(a: &ShootArgs, r: &mut Report, x: &mut Extras) -> CmdResult {
    let u1 = match (a.u1, a.family_index, a.bubble_restriction) {
        (Some(u), _, _) => u,
        (None, Some(j), _) => family_u1(a.n, a.c, j)?,
        (None, None, true) => {
            if a.c != 0.0 {
                return Err(usage("the bubble restriction needs c = 0"));
            }
            bubble_restriction_u1(a.n)
        }
        (None, None, false) => return Err(usage("give --u1, --family-index or --bubble-restriction")),
    };
    r.input("n", a.n).input("c", num(a.c)).input("r0", num(a.r0)).input("step", num(a.step)).input("u1", num(u1));
    if let Some(j) = a.family_index {
        r.input("family_index", j);
    }
    let res = shoot_annulus(
        a.n,
        a.r0,
        a.c,
        u1,
        ShootOptions {
            step: a.step,
            check_halving: true,
        },
    )?;
    let d = &res.diagnostics;
    let sup = d.sup_u + d.sup_inv_u + d.sup_du;
    r.output("du1", num(d.du1))
        .output("ddu1", num(d.ddu1))
        .output("abs_ddu1", num(d.ddu1.abs()))
        .output("sup_u", num(d.sup_u))
        .output("sup_inv_u", num(d.sup_inv_u))
        .output("sup_du", num(d.sup_du))
        .output("sup_sum", num(sup))
        .output("min_margin", num(d.min_margin))
        .output("all_admissible", d.all_admissible)
        .output("termination", termination_value(&d.termination))
        .output("steps", d.steps);
    if let Some(last) = res.profile.samples.last() {
        r.output("u_end", num(last.u)).output("r_end", num(last.r));
    }
    if let Some(drift) = d.halving_drift {
        r.residual("halving_drift", drift);
    }
    r.pass = d.termination == Termination::Reached
        && d.all_admissible
        && d.halving_drift.is_some_and(|v| v < 1e-6);
    x.headline("abs_ddu1", num(d.ddu1.abs()));
    x.headline("sup_sum", num(sup));
    write_table(x, res.profile.table()?);
    Ok(())
}

fn geometry(g: &GeometryArgs, r: &mut Report) -> Result<Grid, CliError> {
    let geom = match g.geometry {
        GeometryArg::Hemisphere => ModelGeometry::hemisphere(g.n)?,
        GeometryArg::Cap => ModelGeometry::spherical_cap(g.n, g.cap_angle)?,
        GeometryArg::Annulus => ModelGeometry::annulus(g.n, g.r_inner, g.r_outer)?,
    };
    r.input("geometry", geom.name()).input("n", g.n).input("nodes", g.nodes);
    match g.geometry {
        GeometryArg::Cap => {
            r.input("cap_angle", num(g.cap_angle));
        }
        GeometryArg::Annulus => {
            r.input("r_inner", num(g.r_inner)).input("r_outer", num(g.r_outer));
        }
        GeometryArg::Hemisphere => {}
    }
    r.output("scale_b", num(geom.scale_b))
        .output("volume", num(geom.volume()))
        .output("a_g", num(geom.a_g()))
        .output("h_g", nums(&geom.boundaries().iter().map(|b| b.h_g).collect::<Vec<_>>()));
    Ok(Grid::new(geom, g.nodes)?)
}

/// Every `stride`-th node value, with the last node always included.
fn samples(u: &[f64], stride: usize) -> Vec<f64> {
    let mut out: Vec<f64> = u.iter().step_by(stride.max(1)).copied().collect();
    if (u.len() - 1) % stride.max(1) != 0 {
        out.push(u[u.len() - 1]);
    }
    out
}

fn eigen(a: &EigenArgs, r: &mut Report, x: &mut Extras) -> CmdResult {
    let grid = geometry(&a.geometry, r)?;
    r.input("eps", nums(&a.eps));
    let minimal = grid.geom.boundaries().iter().all(|b| b.h_g.abs() < 1e-12);
    let mut per_eps = Vec::new();
    let mut sandwich_ok = true;
    for &e in &a.eps {
        let s = solve_epsilon_eigen(&grid, e)?;
        sandwich_ok &= s.sandwich_ok();
        per_eps.push(json!({
            "eps": num(e),
            "eps_u_min": num(s.eps_u_min),
            "eps_u_max": num(s.eps_u_max),
            "eps_u_mean": num(s.eps_u_mean),
            "residual": num(s.residual_norm),
            "sandwich_lower": num(s.sandwich_lower),
            "sandwich_upper": num(s.sandwich_upper),
            "sandwich_ok": s.sandwich_ok(),
            "continuation_states": s.continuation_steps,
        }));
    }
    let ex = extract_eigenvalue(&grid, &a.eps)?;
    r.output("solutions", Value::Array(per_eps))
        .output("lambda", num(ex.lambda))
        .output("exp_lambda", num(ex.exp_lambda))
        .output("lambda_richardson", num(ex.lambda_richardson))
        .output("cauchy", ex.cauchy)
        .output("sandwich_applies", minimal)
        .output("sandwich_ok", sandwich_ok)
        .output("v_samples", nums(&samples(&ex.v, 20)));
    r.residual("limit_equation", ex.limit_residual)
        .residual("richardson_gap", (ex.lambda - ex.lambda_richardson).abs());
    r.pass = ex.limit_residual < 1e-6 && ex.cauchy && (!minimal || sandwich_ok);
    x.headline("lambda", num(ex.lambda));
    x.headline("exp_lambda", num(ex.exp_lambda));
    let mut u_full = ex.v.clone();
    u_full.extend(ghost_values(&grid, &ex.v));
    write_table(x, grid.node_table(&u_full, grid.geom.a_g()));
    Ok(())
}

/// Ghost values realizing the Neumann data `∂v/∂n = −h_g` of the limit problem.
fn ghost_values(grid: &Grid, v: &[f64]) -> Vec<f64> {
    let h = grid.h;
    let rb = grid.geom.scale_b.sqrt();
    let n = v.len();
    grid.geom
        .boundaries()
        .iter()
        .map(|b| {
            // normal_sign (ghost − interior)/(2h√B) = −h_g
            let (interior, sign) = match b.end {
                sigma2_core::eigenpath::End::Left => (v[1], -b.normal_sign),
                sigma2_core::eigenpath::End::Right => (v[n - 2], b.normal_sign),
            };
            interior - b.h_g * 2.0 * h * rb / sign
        })
        .collect()
}

fn state_value(s: &PathState) -> Value {
    json!({
        "t": num(s.t),
        "zeta": num(s.zeta),
        "s_g": num(s.s_g),
        "residual": num(s.residual_norm),
        "boundary_residual": num(s.boundary_residual),
        "min_margin": num(s.min_margin),
        "volume_term": num(s.volume_term),
        "background_bound": num(s.background_bound),
        "monotone_ok": s.monotone_ok(),
        "u_samples": nums(&samples(&s.u, 20)),
    })
}

fn homotopy(a: &HomotopyArgs, r: &mut Report, x: &mut Extras) -> CmdResult {
    let grid = geometry(&a.geometry, r)?;
    r.input("f", num(a.f))
        .input("f_cos", num(a.f_cos))
        .input("c", num(a.c))
        .input("f0", num(a.f0))
        .input("steps", a.steps);
    let (fc, fcos, cc) = (a.f, a.f_cos, a.c);
    let f = move |s: f64| fc + fcos * s.cos();
    let c = move |_: f64| cc;
    let states = trace_homotopy(&grid, &f, &c, a.f0, a.steps)?;
    let last = states.last().expect("continuation returns at least one state");
    let (umin, umax) = last
        .u
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(p, q), &v| (p.min(v), q.max(v)));
    let max_res = states.iter().fold(0.0_f64, |m, s| m.max(s.residual_norm));
    let monotone = states.iter().all(|s| s.monotone_ok());
    let admissible = states.iter().all(|s| s.min_margin > 0.0);
    r.output("t_reached", num(last.t))
        .output("accepted_states", states.len())
        .output("u_min", num(umin))
        .output("u_max", num(umax))
        .output("monotone_ok", monotone)
        .output("admissible", admissible)
        .output("states", Value::Array(states.iter().map(state_value).collect()));
    r.residual("endpoint", last.residual_norm)
        .residual("endpoint_boundary", last.boundary_residual)
        .residual("max_accepted", max_res);
    if a.f_cos == 0.0 && a.c == 0.0 {
        let bg = grid.geom.background_curvature();
        let target = -0.5 * ((bg - a.f0) / a.f).ln();
        let gap = last.u.iter().fold(0.0_f64, |m, v| m.max((v - target).abs()));
        r.output("constant_ansatz", num(target));
        r.residual("constant_ansatz_gap", gap);
    }
    r.pass = last.t == 1.0 && max_res < 1e-9 && monotone && admissible;
    x.headline("u_min", num(umin));
    x.headline("u_max", num(umax));
    let mut u_full = last.u.clone();
    u_full.extend(&last.ghosts);
    write_table(x, grid.node_table(&u_full, grid.geom.a_g()));
    Ok(())
}

fn verify_all(a: &VerifyAllArgs, seed: u64, r: &mut Report) -> CmdResult {
    r.input("seed", seed);
    let outcomes = match &a.only {
        None => verify::run_all(seed),
        Some(names) => {
            r.input("only", Value::Array(names.iter().map(|n| Value::String(n.clone())).collect()));
            names
                .iter()
                .map(|n| verify::run_check(n, seed).ok_or_else(|| usage(format!("unknown check '{n}'"))))
                .collect::<Result<_, _>>()?
        }
    };
    let mut checks = Map::new();
    for o in &outcomes {
        checks.insert(
            o.name.into(),
            json!({ "pass": o.passed, "measured": num(o.measured), "tolerance": num(o.tolerance), "detail": o.detail }),
        );
        r.residual(o.name, o.measured);
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    r.output("checks", Value::Object(checks))
        .output("passed", passed)
        .output("total", outcomes.len());
    r.pass = passed == outcomes.len();
    Ok(())
}
