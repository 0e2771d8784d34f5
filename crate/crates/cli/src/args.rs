use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

const AFTER_HELP: &str = "\
Reports are JSON objects {command, inputs, outputs, residuals, pass}.
Exit codes: 0 pass, 1 usage error, 2 numerical failure.

CSV series (--csv):
  radial degenerate, barrier, shoot   r,u,du,ddu,sigma1,sigma2 in the power convention
  eigen                               r,u,du,ddu,sigma1,sigma2 of the limit profile v on the nodes
  homotopy                            r,u,du,ddu,sigma1,sigma2 of the endpoint u on the nodes
For eigen and homotopy, r is the geometry coordinate s.

Sweeps run their cells on a worker pool; SIGMA2_THREADS caps its size.";

#[derive(Parser, Debug, Clone)]
#[command(name = "sigma2", version, about = "Numerical toolkit for the sigma_2 curvature equation", after_help = AFTER_HELP)]
pub struct Cli {
    /// Write the JSON report here instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Write the CSV series of the command here.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    /// Seed of every sampled quantity.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Symmetric functions of a symmetric matrix.
    Symfunc(SymfuncArgs),
    /// Garding cone membership of an eigenvalue vector.
    Cone(ConeArgs),
    /// Ellipsoid geometry, umbilic points and the counterexample family.
    #[command(subcommand)]
    Ellipsoid(EllipsoidCommand),
    /// Boundary bubble parameters and residuals.
    Bubble(BubbleArgs),
    /// Radial reductions and degenerate families.
    #[command(subcommand)]
    Radial(RadialCommand),
    /// The exclusion barrier in the flat half-space.
    Barrier(BarrierArgs),
    /// Radial shooting on an annulus with the inner Neumann condition.
    Shoot(ShootArgs),
    /// First boundary eigenvalue by epsilon-regularized continuation.
    Eigen(EigenArgs),
    /// Existence homotopy on a model geometry with minimal boundary.
    Homotopy(HomotopyArgs),
    /// Run the full invariant suite.
    VerifyAll(VerifyAllArgs),
    /// Cartesian parameter sweep from a config file.
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Clone)]
pub struct SymfuncArgs {
    /// Matrix rows separated by ';', entries by ','.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "diag", required_unless_present = "diag")]
    pub matrix: Option<String>,
    /// Diagonal entries.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub diag: Option<Vec<f64>>,
}

#[derive(Args, Debug, Clone)]
pub struct ConeArgs {
    /// Eigenvalues, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub lambda: Vec<f64>,
    /// Cone index (1 or 2).
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub k: u8,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Subcommand, Debug, Clone)]
pub enum EllipsoidCommand {
    /// Normal, second fundamental form and mean curvature at a point.
    Geometry(EllipsoidGeometryArgs),
    /// Locate umbilic points.
    Umbilic(UmbilicArgs),
    /// The ellipsoid touching the unit sphere with mean curvature near -1.
    Counterexample(CounterexampleArgs),
}

#[derive(Args, Debug, Clone)]
pub struct EllipsoidGeometryArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub axes: Vec<f64>,
    /// Point, projected radially onto the surface if off it.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub point: Vec<f64>,
    /// Use the outward normal instead of the inward one.
    #[arg(long)]
    pub outward: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum UmbilicModeArg {
    /// Closed form for n = 3 with distinct axes, numeric search otherwise.
    Auto,
    Closed,
    Numeric,
}

#[derive(Args, Debug, Clone)]
pub struct UmbilicArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub axes: Vec<f64>,
    #[arg(long, value_enum, default_value_t = UmbilicModeArg::Auto)]
    pub mode: UmbilicModeArg,
    /// Sample count of the numeric search.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    /// Number of low-defect samples refined locally.
    #[arg(long, default_value_t = 64)]
    pub refine_seeds: usize,
}

#[derive(Args, Debug, Clone)]
pub struct CounterexampleArgs {
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long)]
    pub eps: f64,
}

#[derive(Args, Debug, Clone)]
pub struct BubbleArgs {
    #[arg(long)]
    pub n: usize,
    /// Prescribed curvature.
    #[arg(long)]
    pub f: f64,
    /// Prescribed boundary mean curvature.
    #[arg(long, default_value_t = 0.0)]
    pub c: f64,
    /// Sample points per region.
    #[arg(long, default_value_t = 30)]
    pub points: usize,
    /// Half-width of the sampling box.
    #[arg(long, default_value_t = 3.0)]
    pub extent: f64,
    /// Multiply the decay rate by this factor (1 leaves the bubble exact).
    #[arg(long, default_value_t = 1.0)]
    pub rate_factor: f64,
}

#[derive(Subcommand, Debug, Clone)]
pub enum RadialCommand {
    /// Schouten eigenvalues of a radial jet on the flat background.
    Eigs(RadialEigsArgs),
    /// A member of the degenerate radial families.
    Degenerate(DegenerateArgs),
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConventionArg {
    Exp,
    Pow,
}

#[derive(Args, Debug, Clone)]
pub struct RadialEigsArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = ConventionArg::Pow)]
    pub convention: ConventionArg,
    #[arg(long)]
    pub r: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub u: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub du: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub ddu: f64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseArg {
    A,
    B,
}

#[derive(Args, Debug, Clone)]
pub struct DegenerateArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_enum)]
    pub case: CaseArg,
    #[arg(long, default_value_t = 1.0)]
    pub c1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c2: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c3: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c4: f64,
    #[arg(long, default_value_t = 0.1)]
    pub r_min: f64,
    #[arg(long, default_value_t = 10.0)]
    pub r_max: f64,
    #[arg(long, default_value_t = 200)]
    pub points: usize,
}

#[derive(Args, Debug, Clone)]
pub struct BarrierArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub delta: f64,
    /// Exponential rate (defaults: 1 for n = 3, 8 for n = 4).
    #[arg(long)]
    pub rate_b: Option<f64>,
    /// Points of the log grid below r1.
    #[arg(long, default_value_t = 100)]
    pub points: usize,
    /// Decades spanned by the log grid.
    #[arg(long, default_value_t = 3.0)]
    pub decades: f64,
}

#[derive(Args, Debug, Clone)]
pub struct ShootArgs {
    #[arg(long)]
    pub n: usize,
    /// Boundary mean curvature on the inner sphere.
    #[arg(long, allow_hyphen_values = true)]
    pub c: f64,
    /// Outer radius.
    #[arg(long, default_value_t = 2.0)]
    pub r0: f64,
    /// Inner value u(1).
    #[arg(long, conflicts_with_all = ["family_index", "bubble_restriction"])]
    pub u1: Option<f64>,
    /// Member of the degenerating family (needs c < 0).
    #[arg(long, conflicts_with = "bubble_restriction")]
    pub family_index: Option<u32>,
    /// Start from the restriction of the standard bubble (needs c = 0).
    #[arg(long)]
    pub bubble_restriction: bool,
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeometryArg {
    Hemisphere,
    Cap,
    Annulus,
}

#[derive(Args, Debug, Clone)]
pub struct GeometryArgs {
    #[arg(long, value_enum, default_value_t = GeometryArg::Hemisphere)]
    pub geometry: GeometryArg,
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    /// Angular radius of the cap.
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_3)]
    pub cap_angle: f64,
    #[arg(long, default_value_t = 1.0)]
    pub r_inner: f64,
    #[arg(long, default_value_t = 2.0)]
    pub r_outer: f64,
    #[arg(long, default_value_t = 201)]
    pub nodes: usize,
}

#[derive(Args, Debug, Clone)]
pub struct EigenArgs {
    #[command(flatten)]
    pub geometry: GeometryArgs,
    /// Strictly decreasing regularization parameters.
    #[arg(long, value_delimiter = ',', default_values_t = [0.2, 0.1, 0.05])]
    pub eps: Vec<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct HomotopyArgs {
    #[command(flatten)]
    pub geometry: GeometryArgs,
    /// Constant part of the prescribed curvature f(s) = f + f_cos cos(s).
    #[arg(long, default_value_t = 1.0)]
    pub f: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub f_cos: f64,
    /// Prescribed boundary mean curvature (constant).
    #[arg(long, default_value_t = 0.0)]
    pub c: f64,
    #[arg(long, default_value_t = 0.0)]
    pub f0: f64,
    /// Initial number of continuation steps.
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
}

#[derive(Args, Debug, Clone)]
pub struct VerifyAllArgs {
    /// Run only the named checks.
    #[arg(long, value_delimiter = ',')]
    pub only: Option<Vec<String>>,
}

#[derive(Args, Debug, Clone)]
pub struct SweepArgs {
    /// Config file of `key = value` and `key = [a, b, ...]` lines.
    pub config: PathBuf,
    /// Also write index.csv next to index.json.
    #[arg(long)]
    pub index_csv: bool,
}
