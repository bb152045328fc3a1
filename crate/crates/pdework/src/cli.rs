//! Command-line front end: single solves, refinement ladders, network
//! training and inversion runs, and a side-by-side comparison, all
//! writing CSV artifacts plus a flat `key = value` manifest that is
//! sufficient to rerun the job.
//!
//! Every run is seeded (default 0) and, given the same arguments and
//! seed, reproduces its artifacts byte for byte; only the manifest's
//! `wall_time_s` line varies between repeats.

use crate::error::Error;
use crate::fdm::solve_fdm_poisson;
use crate::fem::solve_fem_poisson;
use crate::fvm::{conservation_defect, solve_fvm, Interval1D};
use crate::linalg::{SolveReport, SolverKind};
use crate::neural::mlp::{save_mlp, MlpParams};
use crate::pinn::problem::{
    burgers_sine_problem, poisson_sine_problem, synthetic_heat_observations,
    synthetic_poisson_observations, LossWeights, PinnProblem, SampleConfig, WeightStrategy,
};
use crate::pinn::sample::SampleMethod;
use crate::pinn::train::{train, write_history, HistoryRow, NetSpec, TrainConfig, TrainError};
use crate::spectral::solve_spectral;
use crate::verify::{
    boundary_layer_case, burgers_reference, convergence_study, exp_case, fdm_errors,
    fem_l2_error, fem_linf_error, fvm_errors, oscillatory_case, sine_case, spectral_errors,
    CaseSpec, ConvergenceReport, ManufacturedCase2D, Method, Scalar1D, SpectralCase,
};
use clap::{Args, Parser, Subcommand};
use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::ffi::OsString;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

const MANIFEST_SCHEMA: u32 = 1;

const CONVENTIONS: &str = "\
Conventions:
  The 2D solvers discretize -(u_xx + u_yy) = f on the unit square. 1D
  collocation cases are stated the same way (-u'' = f); the sign flip to
  the solver's u'' = f form happens internally. For time-dependent
  training runs the field CSV's y column holds time.

Artifacts:
  Every run writes its CSV outputs plus manifest.txt (flat `key = value`,
  machine-readable, sufficient to rerun the job) into the output
  directory: --out if given, else $PDEWORK_OUT/<command> or
  runs/<command>. A --config file supplies defaults for absent flags
  using the same key = value format with keys named after the flags;
  explicit flags always win.";

#[derive(Parser)]
#[command(
    name = "pdework",
    version,
    about = "PDE workbench: classical solvers, convergence studies, and residual-trained networks",
    after_long_help = CONVENTIONS,
    after_help = CONVENTIONS
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve one problem instance and write its field
    Solve {
        #[command(subcommand)]
        method: SolveCmd,
    },
    /// Run a refinement ladder and fit the convergence order
    Converge {
        #[command(subcommand)]
        method: ConvergeCmd,
    },
    /// Train networks against PDE residuals
    Pinn {
        #[command(subcommand)]
        action: PinnCmd,
    },
    /// Solve one problem classically and with a network, side by side
    Compare {
        #[command(subcommand)]
        problem: CompareCmd,
    },
}

/// Flags shared by every run.
#[derive(Args)]
struct CommonOpts {
    /// Output directory (default: $PDEWORK_OUT/<command> or runs/<command>)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Flat key = value file supplying defaults for absent flags
    #[arg(long)]
    config: Option<PathBuf>,
    /// Random seed pinning every stochastic choice in the run
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum SolveCmd {
    /// Five-point finite differences on the unit square
    Fdm {
        /// Interior nodes per side
        #[arg(long)]
        n: Option<usize>,
        /// Manufactured case: sine | osc
        #[arg(long)]
        case: Option<String>,
        /// Linear solver: cg | lu
        #[arg(long)]
        solver: Option<String>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Linear triangular finite elements on the unit square
    Fem {
        /// Squares per side of the structured mesh
        #[arg(long)]
        n: Option<usize>,
        /// Manufactured case: sine | osc
        #[arg(long)]
        case: Option<String>,
        /// Linear solver: cg | lu
        #[arg(long)]
        solver: Option<String>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Upwind finite volumes for 1D convection-diffusion
    Fvm {
        /// Total nodes on [0, 1], boundaries included
        #[arg(long)]
        n: Option<usize>,
        /// Convection speed
        #[arg(long)]
        a: Option<f64>,
        /// Diffusivity
        #[arg(long)]
        nu: Option<f64>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Chebyshev collocation for -u'' = f on [-1, 1]
    Spectral {
        /// Polynomial degree
        #[arg(long)]
        n: Option<usize>,
        /// Case: exp
        #[arg(long)]
        case: Option<String>,
        #[command(flatten)]
        common: CommonOpts,
    },
}

#[derive(Subcommand)]
enum ConvergeCmd {
    /// Finite difference ladder over interior node counts
    Fdm {
        /// Comma-separated interior node counts, e.g. 8,16,32,64
        #[arg(long)]
        levels: Option<String>,
        /// Manufactured case: sine | osc
        #[arg(long)]
        case: Option<String>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Finite element ladder over mesh refinements
    Fem {
        /// Comma-separated squares-per-side counts, e.g. 4,8,16,32
        #[arg(long)]
        levels: Option<String>,
        /// Manufactured case: sine | osc
        #[arg(long)]
        case: Option<String>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Finite volume ladder over node counts
    Fvm {
        /// Comma-separated total node counts, e.g. 17,33,65,129
        #[arg(long)]
        levels: Option<String>,
        /// Convection speed
        #[arg(long)]
        a: Option<f64>,
        /// Diffusivity
        #[arg(long)]
        nu: Option<f64>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Collocation ladder over polynomial degrees
    Spectral {
        /// Comma-separated degrees, e.g. 8,12,16,20,24
        #[arg(long)]
        levels: Option<String>,
        /// Case: exp
        #[arg(long)]
        case: Option<String>,
        #[command(flatten)]
        common: CommonOpts,
    },
}

#[derive(Subcommand)]
enum PinnCmd {
    /// Train a forward solution network
    Train {
        #[command(subcommand)]
        problem: TrainCmd,
    },
    /// Recover an unknown coefficient or source from observations
    Invert {
        #[command(subcommand)]
        target: InvertCmd,
    },
}

/// Training flags shared by every network run. `--initial` is ignored
/// by problems without an initial line.
#[derive(Args)]
struct TrainOpts {
    /// Optimizer steps
    #[arg(long)]
    steps: Option<usize>,
    /// Interior collocation points
    #[arg(long)]
    interior: Option<usize>,
    /// Boundary points
    #[arg(long)]
    boundary: Option<usize>,
    /// Initial-line points (time-dependent problems only)
    #[arg(long)]
    initial: Option<usize>,
    /// Comma-separated layer widths, e.g. 2,20,20,1
    #[arg(long)]
    net: Option<String>,
    /// Adam learning rate
    #[arg(long)]
    alpha: Option<f64>,
    /// Boundary loss weight (the residual weight is fixed at 1)
    #[arg(long)]
    lambda_b: Option<f64>,
    /// Initial-condition loss weight
    #[arg(long)]
    lambda_i: Option<f64>,
    /// Data loss weight
    #[arg(long)]
    lambda_d: Option<f64>,
    /// Rebalance loss weights from their observed magnitudes
    #[arg(long)]
    balance: bool,
    /// Redraw collocation points every this many steps (0 keeps one set)
    #[arg(long)]
    resample_every: Option<usize>,
}

#[derive(Subcommand)]
enum TrainCmd {
    /// Product-sine Poisson problem with soft boundary conditions
    Poisson {
        #[command(flatten)]
        topts: TrainOpts,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Viscous Burgers with u0 = -sin(pi x) and zero walls
    Burgers {
        /// Viscosity
        #[arg(long)]
        nu: Option<f64>,
        /// Final time
        #[arg(long)]
        t_end: Option<f64>,
        #[command(flatten)]
        topts: TrainOpts,
        #[command(flatten)]
        common: CommonOpts,
    },
}

#[derive(Subcommand)]
enum InvertCmd {
    /// Recover the heat diffusivity from point observations
    Kappa {
        /// Number of observations
        #[arg(long)]
        nd: Option<usize>,
        /// Relative Gaussian noise level on the observations
        #[arg(long)]
        noise: Option<f64>,
        /// True diffusivity generating the observations
        #[arg(long)]
        kappa_star: Option<f64>,
        /// Final time
        #[arg(long)]
        t_end: Option<f64>,
        #[command(flatten)]
        topts: TrainOpts,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Recover an unknown Poisson source as a second network
    Source {
        /// Number of observations
        #[arg(long)]
        nd: Option<usize>,
        /// Relative Gaussian noise level on the observations
        #[arg(long)]
        noise: Option<f64>,
        /// Comma-separated layer widths of the source network
        #[arg(long)]
        source_net: Option<String>,
        #[command(flatten)]
        topts: TrainOpts,
        #[command(flatten)]
        common: CommonOpts,
    },
}

#[derive(Subcommand)]
enum CompareCmd {
    /// Product-sine Poisson: finite differences, finite elements, and
    /// a trained network on one table
    Poisson {
        /// Grid resolution for the classical solvers
        #[arg(long)]
        n: Option<usize>,
        /// Linear solver for the classical methods: cg | lu
        #[arg(long)]
        solver: Option<String>,
        #[command(flatten)]
        topts: TrainOpts,
        #[command(flatten)]
        common: CommonOpts,
    },
}

/// Usage problems exit with 2, numerical failures with 1.
enum CliError {
    Usage(String),
    Numerical(String),
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Display) -> CliError {
    CliError::Usage(msg.to_string())
}

fn numerical(msg: impl Display) -> CliError {
    CliError::Numerical(msg.to_string())
}

/// Library errors caused by bad argument values are usage errors;
/// failures inside an accepted computation are numerical.
fn lib_err(e: Error) -> CliError {
    match e {
        Error::InvalidArgument(_) | Error::Config(_) => usage(e),
        _ => numerical(e),
    }
}

/// Parses the command line and runs it, returning the process exit
/// code instead of exiting so callers stay testable.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version land here too; their exit code is 0.
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Cmd::Solve { method } => match method {
            SolveCmd::Fdm {
                n,
                case,
                solver,
                common,
            } => solve_fdm_cmd(n, case, solver, common),
            SolveCmd::Fem {
                n,
                case,
                solver,
                common,
            } => solve_fem_cmd(n, case, solver, common),
            SolveCmd::Fvm { n, a, nu, common } => solve_fvm_cmd(n, a, nu, common),
            SolveCmd::Spectral { n, case, common } => solve_spectral_cmd(n, case, common),
        },
        Cmd::Converge { method } => match method {
            ConvergeCmd::Fdm {
                levels,
                case,
                common,
            } => converge_cmd(Method::Fdm, levels, case, None, None, common),
            ConvergeCmd::Fem {
                levels,
                case,
                common,
            } => converge_cmd(Method::Fem, levels, case, None, None, common),
            ConvergeCmd::Fvm {
                levels,
                a,
                nu,
                common,
            } => converge_cmd(Method::Fvm, levels, None, a, nu, common),
            ConvergeCmd::Spectral {
                levels,
                case,
                common,
            } => converge_cmd(Method::Spectral, levels, case, None, None, common),
        },
        Cmd::Pinn { action } => match action {
            PinnCmd::Train { problem } => match problem {
                TrainCmd::Poisson { topts, common } => pinn_poisson_cmd(topts, common),
                TrainCmd::Burgers {
                    nu,
                    t_end,
                    topts,
                    common,
                } => pinn_burgers_cmd(nu, t_end, topts, common),
            },
            PinnCmd::Invert { target } => match target {
                InvertCmd::Kappa {
                    nd,
                    noise,
                    kappa_star,
                    t_end,
                    topts,
                    common,
                } => pinn_kappa_cmd(nd, noise, kappa_star, t_end, topts, common),
                InvertCmd::Source {
                    nd,
                    noise,
                    source_net,
                    topts,
                    common,
                } => pinn_source_cmd(nd, noise, source_net, topts, common),
            },
        },
        Cmd::Compare { problem } => match problem {
            CompareCmd::Poisson {
                n,
                solver,
                topts,
                common,
            } => compare_poisson_cmd(n, solver, topts, common),
        },
    }
}

/// Merges flags over config-file values and records every resolved
/// value for the manifest. Leftover config keys are typos and are
/// rejected.
struct Resolver {
    file: HashMap<String, String>,
    resolved: BTreeMap<String, String>,
}

impl Resolver {
    fn new(config: Option<&Path>) -> CliResult<Self> {
        let mut file = HashMap::new();
        if let Some(path) = config {
            let text = fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    usage(format!(
                        "config {} line {}: expected `key = value`",
                        path.display(),
                        lineno + 1
                    ))
                })?;
                file.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(Resolver {
            file,
            resolved: BTreeMap::new(),
        })
    }

    fn get<T>(&mut self, key: &str, flag: Option<T>, default: T) -> CliResult<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let value = if let Some(v) = flag {
            self.file.remove(key);
            v
        } else if let Some(raw) = self.file.remove(key) {
            raw.parse()
                .map_err(|e| usage(format!("config key `{key}`: {e}")))?
        } else {
            default
        };
        self.resolved.insert(key.to_string(), value.to_string());
        Ok(value)
    }

    /// Boolean switch: the flag can only assert, so a config file may
    /// turn it on but a bare command line keeps the config's choice.
    fn get_switch(&mut self, key: &str, flag: bool) -> CliResult<bool> {
        let value = if flag {
            self.file.remove(key);
            true
        } else if let Some(raw) = self.file.remove(key) {
            raw.parse::<bool>()
                .map_err(|e| usage(format!("config key `{key}`: {e}")))?
        } else {
            false
        };
        self.resolved.insert(key.to_string(), value.to_string());
        Ok(value)
    }

    fn out_dir(&mut self, flag: Option<PathBuf>, default_name: &str) -> CliResult<PathBuf> {
        let dir = if let Some(d) = flag {
            self.file.remove("out");
            d
        } else if let Some(raw) = self.file.remove("out") {
            PathBuf::from(raw)
        } else {
            std::env::var_os("PDEWORK_OUT")
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("runs"))
                .join(default_name)
        };
        fs::create_dir_all(&dir)
            .map_err(|e| usage(format!("cannot create output directory {}: {e}", dir.display())))?;
        self.resolved.insert("out".to_string(), dir.display().to_string());
        Ok(dir)
    }

    fn finish(self, manifest: &mut Manifest) -> CliResult<()> {
        if let Some(key) = self.file.keys().next() {
            return Err(usage(format!("config key `{key}` does not match any flag of this command")));
        }
        manifest.entries.extend(self.resolved);
        Ok(())
    }
}

/// Flat `key = value` run record, written beside the CSV artifacts.
struct Manifest {
    entries: BTreeMap<String, String>,
    started: Instant,
}

impl Manifest {
    fn new(command: &str) -> Self {
        let mut entries = BTreeMap::new();
        entries.insert("command".to_string(), command.to_string());
        entries.insert(
            "pdework_version".to_string(),
            env!("CARGO_PKG_VERSION").to_string(),
        );
        entries.insert("manifest_schema".to_string(), MANIFEST_SCHEMA.to_string());
        Manifest {
            entries,
            started: Instant::now(),
        }
    }

    fn set(&mut self, key: &str, value: impl Display) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    /// Writes manifest.txt; `wall_time_s` is the only line that varies
    /// between identical runs.
    fn write(&mut self, dir: &Path) -> CliResult<()> {
        self.entries.insert(
            "wall_time_s".to_string(),
            format!("{:.3}", self.started.elapsed().as_secs_f64()),
        );
        let mut text = String::new();
        for (k, v) in &self.entries {
            text.push_str(k);
            text.push_str(" = ");
            text.push_str(v);
            text.push('\n');
        }
        fs::write(dir.join("manifest.txt"), text)
            .map_err(|e| numerical(format!("cannot write manifest: {e}")))
    }
}

fn write_text(dir: &Path, name: &str, text: &str) -> CliResult<()> {
    fs::write(dir.join(name), text).map_err(|e| numerical(format!("cannot write {name}: {e}")))
}

fn field_2d_csv(rows: impl Iterator<Item = (f64, f64, f64)>) -> String {
    let mut s = String::from("x,y,u\n");
    for (x, y, u) in rows {
        s.push_str(&format!("{x},{y},{u}\n"));
    }
    s
}

fn field_1d_csv(rows: impl Iterator<Item = (f64, f64)>) -> String {
    let mut s = String::from("x,u\n");
    for (x, u) in rows {
        s.push_str(&format!("{x},{u}\n"));
    }
    s
}

fn convergence_csv(report: &ConvergenceReport) -> String {
    let mut s = String::from("level,h_or_N,dof,l2,linf,h1semi\n");
    for rec in &report.levels {
        let h1 = rec.h1semi.map(|v| v.to_string()).unwrap_or_default();
        if rec.failure.is_some() {
            s.push_str(&format!("{},{},{},,,\n", rec.level, rec.param, rec.dof));
        } else {
            s.push_str(&format!(
                "{},{},{},{},{},{h1}\n",
                rec.level, rec.param, rec.dof, rec.l2, rec.linf
            ));
        }
    }
    s
}

fn parse_usize_list(text: &str, what: &str) -> CliResult<Vec<usize>> {
    let items: std::result::Result<Vec<usize>, _> = text
        .split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect();
    items.map_err(|e| usage(format!("{what} `{text}`: {e}")))
}

fn case_2d(name: &str) -> CliResult<ManufacturedCase2D> {
    match name {
        "sine" => Ok(sine_case()),
        "osc" => Ok(oscillatory_case()),
        other => Err(usage(format!("unknown 2D case `{other}` (try sine or osc)"))),
    }
}

/// 1D collocation cases in the CLI's -u'' = f convention; the solver
/// call negates the forcing to reach its u'' = f form.
struct CliSpectralCase {
    inner: SpectralCase,
    forcing_cli: Scalar1D,
}

fn case_spectral(name: &str) -> CliResult<CliSpectralCase> {
    match name {
        "exp" => {
            let inner = exp_case();
            let f = inner.forcing.clone();
            Ok(CliSpectralCase {
                inner,
                forcing_cli: Arc::new(move |x| -f(x)),
            })
        }
        other => Err(usage(format!("unknown collocation case `{other}` (try exp)"))),
    }
}

fn solver_kind(name: &str) -> CliResult<SolverKind> {
    match name {
        "cg" => Ok(SolverKind::Cg),
        "lu" => Ok(SolverKind::Lu),
        other => Err(usage(format!("unknown solver `{other}` (try cg or lu)"))),
    }
}

fn record_solve_report(manifest: &mut Manifest, report: &SolveReport) {
    manifest.set("solver_iterations", report.iterations);
    manifest.set("solver_converged", report.converged);
    manifest.set("solver_residual", report.relative_residual);
}

fn solve_fdm_cmd(
    n: Option<usize>,
    case: Option<String>,
    solver: Option<String>,
    common: CommonOpts,
) -> CliResult<()> {
    let mut manifest = Manifest::new("solve-fdm");
    let mut r = Resolver::new(common.config.as_deref())?;
    let n = r.get("n", n, 32usize)?;
    let case_name = r.get("case", case, "sine".to_string())?;
    let solver_name = r.get("solver", solver, "cg".to_string())?;
    let _seed = r.get("seed", common.seed, 0u64)?;
    let out = r.out_dir(common.out, "solve-fdm")?;
    r.finish(&mut manifest)?;
    let case = case_2d(&case_name)?;
    let kind = solver_kind(&solver_name)?;

    let f = case.forcing.clone();
    let g = case.boundary.clone();
    let (field, report) =
        solve_fdm_poisson(n, move |x, y| f(x, y), move |x, y| g(x, y), kind)
            .map_err(lib_err)?;
    let (l2, linf) = fdm_errors(&field, |x, y| (case.exact)(x, y));

    let grid = field.grid();
    let m = grid.nodes_per_side();
    let csv = field_2d_csv(
        (0..m).flat_map(|j| (0..m).map(move |i| (i, j))).map(|(i, j)| {
            (grid.x(i), grid.y(j), field.at(i, j))
        }),
    );
    write_text(&out, "field.csv", &csv)?;

    manifest.set("dof", n * n);
    manifest.set("l2", l2);
    manifest.set("linf", linf);
    record_solve_report(&mut manifest, &report);
    manifest.write(&out)?;
    println!(
        "fdm n={n} case={case_name}: l2={l2:.3e} linf={linf:.3e} -> {}",
        out.display()
    );
    Ok(())
}

fn solve_fem_cmd(
    n: Option<usize>,
    case: Option<String>,
    solver: Option<String>,
    common: CommonOpts,
) -> CliResult<()> {
    let mut manifest = Manifest::new("solve-fem");
    let mut r = Resolver::new(common.config.as_deref())?;
    let n = r.get("n", n, 16usize)?;
    let case_name = r.get("case", case, "sine".to_string())?;
    let solver_name = r.get("solver", solver, "cg".to_string())?;
    let _seed = r.get("seed", common.seed, 0u64)?;
    let out = r.out_dir(common.out, "solve-fem")?;
    r.finish(&mut manifest)?;
    let case = case_2d(&case_name)?;
    let kind = solver_kind(&solver_name)?;

    let f = case.forcing.clone();
    let g = case.boundary.clone();
    let (sol, report) =
        solve_fem_poisson(n, move |x, y| f(x, y), move |x, y| g(x, y), kind)
            .map_err(lib_err)?;
    let l2 = fem_l2_error(&sol, |x, y| (case.exact)(x, y));
    let linf = fem_linf_error(&sol, |x, y| (case.exact)(x, y));

    let csv = field_2d_csv(
        sol.mesh()
            .nodes()
            .iter()
            .zip(sol.nodal_values())
            .map(|(p, &u)| (p[0], p[1], u)),
    );
    write_text(&out, "field.csv", &csv)?;

    manifest.set("dof", sol.mesh().num_nodes());
    manifest.set("l2", l2);
    manifest.set("linf", linf);
    record_solve_report(&mut manifest, &report);
    manifest.write(&out)?;
    println!(
        "fem n={n} case={case_name}: l2={l2:.3e} linf={linf:.3e} -> {}",
        out.display()
    );
    Ok(())
}

fn solve_fvm_cmd(
    n: Option<usize>,
    a: Option<f64>,
    nu: Option<f64>,
    common: CommonOpts,
) -> CliResult<()> {
    let mut manifest = Manifest::new("solve-fvm");
    let mut r = Resolver::new(common.config.as_deref())?;
    let n = r.get("n", n, 65usize)?;
    let a = r.get("a", a, 1.0f64)?;
    let nu = r.get("nu", nu, 0.1f64)?;
    let _seed = r.get("seed", common.seed, 0u64)?;
    let out = r.out_dir(common.out, "solve-fvm")?;
    r.finish(&mut manifest)?;

    let case = boundary_layer_case(a, nu);
    let interval = Interval1D::uniform(n).map_err(usage)?;
    let f = case.forcing.clone();
    let sol = solve_fvm(&interval, a, nu, move |x| f(x), case.u_left, case.u_right)
        .map_err(lib_err)?;
    let (l2, linf) = fvm_errors(&sol, |x| (case.exact)(x));
    let g = case.forcing.clone();
    let defect = conservation_defect(&sol, a, nu, move |x| g(x));

    let csv = field_1d_csv(
        sol.interval()
            .nodes()
            .iter()
            .zip(sol.values())
            .map(|(&x, &u)| (x, u)),
    );
    write_text(&out, "field.csv", &csv)?;

    manifest.set("dof", n);
    manifest.set("l2", l2);
    manifest.set("linf", linf);
    manifest.set("conservation_defect", defect);
    manifest.write(&out)?;
    println!(
        "fvm n={n} a={a} nu={nu}: l2={l2:.3e} linf={linf:.3e} defect={defect:.3e} -> {}",
        out.display()
    );
    Ok(())
}

fn solve_spectral_cmd(
    n: Option<usize>,
    case: Option<String>,
    common: CommonOpts,
) -> CliResult<()> {
    let mut manifest = Manifest::new("solve-spectral");
    let mut r = Resolver::new(common.config.as_deref())?;
    let n = r.get("n", n, 20usize)?;
    let case_name = r.get("case", case, "exp".to_string())?;
    let _seed = r.get("seed", common.seed, 0u64)?;
    let out = r.out_dir(common.out, "solve-spectral")?;
    r.finish(&mut manifest)?;
    let case = case_spectral(&case_name)?;

    // Negated here: the CLI case states -u'' = f, the solver wants
    // u'' = f.
    let f_cli = case.forcing_cli.clone();
    let sol = solve_spectral(
        n,
        move |x| -f_cli(x),
        case.inner.u_minus,
        case.inner.u_plus,
    )
    .map_err(lib_err)?;
    let (l2, linf) = spectral_errors(&sol, |x| (case.inner.exact)(x));

    let nodes = sol.grid().nodes();
    let values = sol.nodal_values();
    let csv = field_1d_csv(
        nodes
            .iter()
            .zip(values)
            .rev()
            .map(|(&x, &u)| (x, u)),
    );
    write_text(&out, "field.csv", &csv)?;

    manifest.set("dof", n + 1);
    manifest.set("l2", l2);
    manifest.set("linf", linf);
    manifest.write(&out)?;
    println!(
        "spectral n={n} case={case_name}: l2={l2:.3e} linf={linf:.3e} -> {}",
        out.display()
    );
    Ok(())
}

fn converge_cmd(
    method: Method,
    levels: Option<String>,
    case: Option<String>,
    a: Option<f64>,
    nu: Option<f64>,
    common: CommonOpts,
) -> CliResult<()> {
    let name = format!("converge-{}", method.name());
    let mut manifest = Manifest::new(&name);
    let mut r = Resolver::new(common.config.as_deref())?;
    let default_levels = match method {
        Method::Fdm => "8,16,32,64",
        Method::Fem => "4,8,16,32",
        Method::Fvm => "17,33,65,129",
        Method::Spectral => "8,12,16,20,24",
    };
    let levels_text = r.get("levels", levels, default_levels.to_string())?;
    let spec = match method {
        Method::Fdm | Method::Fem => {
            let case_name = r.get("case", case, "sine".to_string())?;
            CaseSpec::TwoD(case_2d(&case_name)?)
        }
        Method::Fvm => {
            let a = r.get("a", a, 1.0f64)?;
            let nu = r.get("nu", nu, 0.1f64)?;
            CaseSpec::OneD(boundary_layer_case(a, nu))
        }
        Method::Spectral => {
            let case_name = r.get("case", case, "exp".to_string())?;
            // The ladder reuses the library case directly: exact and
            // boundary data are convention-free, and the solver-side
            // forcing is the CLI forcing negated twice.
            CaseSpec::Spectral(case_spectral(&case_name)?.inner)
        }
    };
    let _seed = r.get("seed", common.seed, 0u64)?;
    let out = r.out_dir(common.out, &name)?;
    r.finish(&mut manifest)?;
    let levels = parse_usize_list(&levels_text, "levels")?;

    let report = convergence_study(method, &spec, &levels).map_err(usage)?;
    write_text(&out, "convergence.csv", &convergence_csv(&report))?;

    match report.fitted_order {
        Some(order) => manifest.set("fitted_order", order),
        None => manifest.set("fitted_order", "none"),
    }
    if let Some(residual) = report.fit_residual {
        manifest.set("fit_residual", residual);
    }
    if !report.decay_ratios.is_empty() {
        let joined: Vec<String> = report.decay_ratios.iter().map(|v| v.to_string()).collect();
        manifest.set("decay_ratios", joined.join(";"));
    }
    let failures: Vec<&str> = report
        .levels
        .iter()
        .filter_map(|rec| rec.failure.as_deref())
        .collect();
    manifest.set("failed_levels", failures.len());
    manifest.write(&out)?;

    let order_text = report
        .fitted_order
        .map(|o| format!("{o:.3}"))
        .unwrap_or_else(|| "none".to_string());
    println!(
        "{name} levels={levels_text}: fitted_order={order_text} -> {}",
        out.display()
    );
    if !failures.is_empty() {
        return Err(numerical(format!(
            "{} of {} levels failed; first: {}",
            failures.len(),
            report.levels.len(),
            failures[0]
        )));
    }
    Ok(())
}

/// Training settings shared by the network commands, resolved against
/// a config file and defaults.
struct TrainDefaults {
    steps: usize,
    interior: usize,
    boundary: usize,
    initial: usize,
    net: &'static str,
    alpha: f64,
    lambda_b: f64,
    lambda_i: f64,
    lambda_d: f64,
}

fn resolve_training(
    r: &mut Resolver,
    t: &TrainOpts,
    seed: u64,
    d: &TrainDefaults,
) -> CliResult<(Vec<usize>, SampleConfig, TrainConfig)> {
    let steps = r.get("steps", t.steps, d.steps)?;
    let interior = r.get("interior", t.interior, d.interior)?;
    let boundary = r.get("boundary", t.boundary, d.boundary)?;
    let initial = r.get("initial", t.initial, d.initial)?;
    let net_text = r.get("net", t.net.clone(), d.net.to_string())?;
    let alpha = r.get("alpha", t.alpha, d.alpha)?;
    let lambda_b = r.get("lambda-b", t.lambda_b, d.lambda_b)?;
    let lambda_i = r.get("lambda-i", t.lambda_i, d.lambda_i)?;
    let lambda_d = r.get("lambda-d", t.lambda_d, d.lambda_d)?;
    let balance = r.get_switch("balance", t.balance)?;
    let resample_every = r.get("resample-every", t.resample_every, 0usize)?;

    let dims = parse_usize_list(&net_text, "net")?;
    let weights = if balance {
        WeightStrategy::Balance
    } else {
        WeightStrategy::Fixed(LossWeights {
            lambda_f: 1.0,
            lambda_b,
            lambda_i,
            lambda_d,
        })
    };
    let sample_cfg = SampleConfig {
        n_interior: interior,
        n_boundary: boundary,
        n_initial: initial,
        method: SampleMethod::Lhs,
    };
    let train_cfg = TrainConfig {
        steps,
        adam: crate::neural::adam::AdamConfig {
            alpha,
            ..Default::default()
        },
        seed,
        resample_every,
        weights,
    };
    Ok((dims, sample_cfg, train_cfg))
}

/// Runs the trainer, writing history (and the last finite model) even
/// when the loss blows up, so failed runs stay inspectable.
fn run_training(
    problem: &PinnProblem,
    net: &NetSpec,
    sample_cfg: &SampleConfig,
    train_cfg: &TrainConfig,
    out: &Path,
    manifest: &mut Manifest,
) -> CliResult<crate::pinn::train::TrainedModel> {
    match train(problem, net, sample_cfg, train_cfg) {
        Ok(model) => {
            record_history(&model.history, out, manifest)?;
            manifest.set("status", "ok");
            Ok(model)
        }
        Err(TrainError::Invalid(e)) => Err(usage(e)),
        Err(TrainError::NonFinite(abort)) => {
            record_history(&abort.last.history, out, manifest)?;
            save_model(&abort.last.params, out, "model.txt")?;
            manifest.set("status", "non-finite-abort");
            manifest.set("abort_step", abort.step);
            manifest.write(out)?;
            Err(numerical(format!(
                "loss became non-finite at step {}; last finite model kept in {}",
                abort.step,
                out.display()
            )))
        }
    }
}

fn record_history(history: &[HistoryRow], out: &Path, manifest: &mut Manifest) -> CliResult<()> {
    let mut buf = Vec::new();
    write_history(history, &mut buf).map_err(numerical)?;
    fs::write(out.join("history.csv"), buf)
        .map_err(|e| numerical(format!("cannot write history.csv: {e}")))?;
    if let Some(first) = history.first() {
        manifest.set("loss_initial", first.total);
    }
    if let Some(last) = history.last() {
        manifest.set("loss_final", last.total);
        manifest.set("loss_residual_final", last.lf);
    }
    Ok(())
}

fn save_model(params: &MlpParams, out: &Path, name: &str) -> CliResult<()> {
    let mut buf = Vec::new();
    save_mlp(params, &mut buf).map_err(numerical)?;
    fs::write(out.join(name), buf).map_err(|e| numerical(format!("cannot write {name}: {e}")))
}

/// Absolute and relative errors of a network against a reference on
/// the standard 50 x 50 evaluation lattice.
fn eval_errors_2d(
    net: &MlpParams,
    reference: impl Fn(f64, f64) -> f64,
) -> crate::Result<(f64, f64, f64)> {
    let m = 50;
    let mut err2 = 0.0;
    let mut norm2 = 0.0;
    let mut linf = 0.0f64;
    for j in 0..m {
        for i in 0..m {
            let x = i as f64 / (m - 1) as f64;
            let y = j as f64 / (m - 1) as f64;
            let u = net.forward_scalar(&[x, y])?;
            let e = reference(x, y);
            err2 += (u - e) * (u - e);
            norm2 += e * e;
            linf = linf.max((u - e).abs());
        }
    }
    let n = (m * m) as f64;
    let l2 = (err2 / n).sqrt();
    let rel = if norm2 > 0.0 {
        (err2 / norm2).sqrt()
    } else {
        f64::NAN
    };
    Ok((l2, linf, rel))
}

fn network_field_csv(net: &MlpParams, rect: [f64; 4], nx: usize, ny: usize) -> crate::Result<String> {
    let [x0, x1, y0, y1] = rect;
    let mut rows = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let x = x0 + (x1 - x0) * i as f64 / (nx - 1) as f64;
            let y = y0 + (y1 - y0) * j as f64 / (ny - 1) as f64;
            rows.push((x, y, net.forward_scalar(&[x, y])?));
        }
    }
    Ok(field_2d_csv(rows.into_iter()))
}

fn pinn_poisson_cmd(topts: TrainOpts, common: CommonOpts) -> CliResult<()> {
    let mut manifest = Manifest::new("pinn-train-poisson");
    let mut r = Resolver::new(common.config.as_deref())?;
    let seed = r.get("seed", common.seed, 0u64)?;
    let defaults = TrainDefaults {
        steps: 20000,
        interior: 2000,
        boundary: 400,
        initial: 0,
        net: "2,50,50,50,50,1",
        alpha: 1e-3,
        lambda_b: 10.0,
        lambda_i: 1.0,
        lambda_d: 1.0,
    };
    let (dims, sample_cfg, train_cfg) = resolve_training(&mut r, &topts, seed, &defaults)?;
    let out = r.out_dir(common.out, "pinn-train-poisson")?;
    r.finish(&mut manifest)?;

    let problem = poisson_sine_problem();
    let net = NetSpec {
        dims,
        source_dims: None,
    };
    let model = run_training(&problem, &net, &sample_cfg, &train_cfg, &out, &mut manifest)?;
    save_model(&model.params, &out, "model.txt")?;
    let exact = sine_case().exact;
    let (l2, linf, rel) =
        eval_errors_2d(&model.params, |x, y| exact(x, y)).map_err(numerical)?;
    write_text(
        &out,
        "field.csv",
        &network_field_csv(&model.params, [0.0, 1.0, 0.0, 1.0], 50, 50).map_err(numerical)?,
    )?;
    manifest.set("params", model.params.num_params());
    manifest.set("l2", l2);
    manifest.set("linf", linf);
    manifest.set("rel_l2", rel);
    manifest.write(&out)?;
    println!(
        "pinn poisson steps={}: rel_l2={rel:.4} -> {}",
        train_cfg.steps,
        out.display()
    );
    Ok(())
}

fn pinn_burgers_cmd(
    nu: Option<f64>,
    t_end: Option<f64>,
    topts: TrainOpts,
    common: CommonOpts,
) -> CliResult<()> {
    let mut manifest = Manifest::new("pinn-train-burgers");
    let mut r = Resolver::new(common.config.as_deref())?;
    let seed = r.get("seed", common.seed, 0u64)?;
    let nu = r.get("nu", nu, 0.01 / PI)?;
    let t_end = r.get("t-end", t_end, 1.0f64)?;
    let defaults = TrainDefaults {
        steps: 20000,
        interior: 2000,
        boundary: 200,
        initial: 400,
        net: "2,50,50,50,50,1",
        alpha: 1e-3,
        lambda_b: 10.0,
        lambda_i: 10.0,
        lambda_d: 1.0,
    };
    let (dims, sample_cfg, train_cfg) = resolve_training(&mut r, &topts, seed, &defaults)?;
    let out = r.out_dir(common.out, "pinn-train-burgers")?;
    r.finish(&mut manifest)?;

    let problem = burgers_sine_problem(nu, t_end).map_err(usage)?;
    let net = NetSpec {
        dims,
        source_dims: None,
    };
    let model = run_training(&problem, &net, &sample_cfg, &train_cfg, &out, &mut manifest)?;
    save_model(&model.params, &out, "model.txt")?;

    // Space-time field; the y column is time.
    let csv = network_field_csv(&model.params, [-1.0, 1.0, 0.0, t_end], 201, 11)
        .map_err(numerical)?;
    write_text(&out, "field.csv", &csv)?;

    if t_end >= 0.5 {
        // Accuracy against the closed-form reference at t = 0.5,
        // skipping the steep core around x = 0.
        let mut err2 = 0.0;
        let mut norm2 = 0.0;
        for i in 0..=400 {
            let x = -1.0 + 2.0 * i as f64 / 400.0;
            if x.abs() < 0.1 {
                continue;
            }
            let u = model.params.forward_scalar(&[x, 0.5]).map_err(numerical)?;
            let e = burgers_reference(x, 0.5, nu).map_err(numerical)?;
            err2 += (u - e) * (u - e);
            norm2 += e * e;
        }
        manifest.set("rel_l2_t05", (err2 / norm2).sqrt());
    }
    let ratio = match (model.history.first(), model.history.last()) {
        (Some(first), Some(last)) if first.total > 0.0 => last.total / first.total,
        _ => f64::NAN,
    };
    manifest.set("loss_ratio", ratio);
    manifest.set("params", model.params.num_params());
    manifest.write(&out)?;
    println!(
        "pinn burgers nu={nu} steps={}: loss_ratio={ratio:.3e} -> {}",
        train_cfg.steps,
        out.display()
    );
    Ok(())
}

fn pinn_kappa_cmd(
    nd: Option<usize>,
    noise: Option<f64>,
    kappa_star: Option<f64>,
    t_end: Option<f64>,
    topts: TrainOpts,
    common: CommonOpts,
) -> CliResult<()> {
    let mut manifest = Manifest::new("pinn-invert-kappa");
    let mut r = Resolver::new(common.config.as_deref())?;
    let seed = r.get("seed", common.seed, 0u64)?;
    let nd = r.get("nd", nd, 20usize)?;
    let noise = r.get("noise", noise, 0.0f64)?;
    let kappa_star = r.get("kappa-star", kappa_star, 1.0f64)?;
    let t_end = r.get("t-end", t_end, 0.25f64)?;
    let defaults = TrainDefaults {
        steps: 20000,
        interior: 200,
        boundary: 60,
        initial: 60,
        net: "2,20,20,1",
        alpha: 2e-3,
        lambda_b: 10.0,
        lambda_i: 10.0,
        lambda_d: 10.0,
    };
    let (dims, sample_cfg, train_cfg) = resolve_training(&mut r, &topts, seed, &defaults)?;
    let out = r.out_dir(common.out, "pinn-invert-kappa")?;
    r.finish(&mut manifest)?;

    let observations =
        synthetic_heat_observations(nd, t_end, kappa_star, noise, seed).map_err(usage)?;
    let problem = PinnProblem::heat_inverse(
        Arc::new(|x: f64| (PI * x).sin()),
        Arc::new(|_| 0.0),
        Arc::new(|_| 0.0),
        observations,
        t_end,
    )
    .map_err(usage)?;
    let net = NetSpec {
        dims,
        source_dims: None,
    };
    let model = run_training(&problem, &net, &sample_cfg, &train_cfg, &out, &mut manifest)?;
    save_model(&model.params, &out, "model.txt")?;
    let csv = network_field_csv(&model.params, [0.0, 1.0, 0.0, t_end], 51, 11)
        .map_err(numerical)?;
    write_text(&out, "field.csv", &csv)?;

    let kappa_hat = model.kappa_hat.expect("heat inversion trains kappa");
    let rel_err = (kappa_hat - kappa_star).abs() / kappa_star;
    manifest.set("kappa_hat", kappa_hat);
    manifest.set("kappa_rel_err", rel_err);
    manifest.set("params", model.params.num_params());
    manifest.write(&out)?;
    println!(
        "pinn kappa nd={nd} noise={noise}: kappa_hat={kappa_hat:.5} rel_err={rel_err:.4} -> {}",
        out.display()
    );
    Ok(())
}

fn pinn_source_cmd(
    nd: Option<usize>,
    noise: Option<f64>,
    source_net: Option<String>,
    topts: TrainOpts,
    common: CommonOpts,
) -> CliResult<()> {
    let mut manifest = Manifest::new("pinn-invert-source");
    let mut r = Resolver::new(common.config.as_deref())?;
    let seed = r.get("seed", common.seed, 0u64)?;
    let nd = r.get("nd", nd, 100usize)?;
    let noise = r.get("noise", noise, 0.0f64)?;
    let defaults = TrainDefaults {
        steps: 5000,
        interior: 500,
        boundary: 100,
        initial: 0,
        net: "2,20,20,1",
        alpha: 1e-3,
        lambda_b: 10.0,
        lambda_i: 1.0,
        lambda_d: 10.0,
    };
    let (dims, sample_cfg, train_cfg) = resolve_training(&mut r, &topts, seed, &defaults)?;
    let source_text = r.get("source-net", source_net, "2,20,20,1".to_string())?;
    let out = r.out_dir(common.out, "pinn-invert-source")?;
    r.finish(&mut manifest)?;
    let source_dims = parse_usize_list(&source_text, "source-net")?;

    let observations = synthetic_poisson_observations(nd, noise, seed).map_err(usage)?;
    let problem =
        PinnProblem::source_inverse(Arc::new(|_, _| 0.0), observations).map_err(usage)?;
    let net = NetSpec {
        dims,
        source_dims: Some(source_dims),
    };
    let model = run_training(&problem, &net, &sample_cfg, &train_cfg, &out, &mut manifest)?;
    save_model(&model.params, &out, "model.txt")?;
    let source = model
        .source_params
        .as_ref()
        .expect("source inversion trains a second network");
    save_model(source, &out, "source_model.txt")?;

    write_text(
        &out,
        "field.csv",
        &network_field_csv(&model.params, [0.0, 1.0, 0.0, 1.0], 50, 50).map_err(numerical)?,
    )?;
    write_text(
        &out,
        "source.csv",
        &network_field_csv(source, [0.0, 1.0, 0.0, 1.0], 50, 50).map_err(numerical)?,
    )?;

    let (_, _, rel_u) = eval_errors_2d(&model.params, |x, y| {
        (PI * x).sin() * (PI * y).sin()
    })
    .map_err(numerical)?;
    let (_, _, rel_f) = eval_errors_2d(source, |x, y| {
        2.0 * PI * PI * (PI * x).sin() * (PI * y).sin()
    })
    .map_err(numerical)?;
    manifest.set("rel_l2_u", rel_u);
    manifest.set("rel_l2_source", rel_f);
    manifest.set("params", model.params.num_params());
    manifest.write(&out)?;
    println!(
        "pinn source nd={nd} noise={noise}: rel_l2_source={rel_f:.4} -> {}",
        out.display()
    );
    Ok(())
}

fn compare_poisson_cmd(
    n: Option<usize>,
    solver: Option<String>,
    topts: TrainOpts,
    common: CommonOpts,
) -> CliResult<()> {
    let mut manifest = Manifest::new("compare-poisson");
    let mut r = Resolver::new(common.config.as_deref())?;
    let seed = r.get("seed", common.seed, 0u64)?;
    let n = r.get("n", n, 32usize)?;
    let solver_name = r.get("solver", solver, "cg".to_string())?;
    let defaults = TrainDefaults {
        steps: 5000,
        interior: 1000,
        boundary: 200,
        initial: 0,
        net: "2,20,20,1",
        alpha: 1e-3,
        lambda_b: 10.0,
        lambda_i: 1.0,
        lambda_d: 1.0,
    };
    let (dims, sample_cfg, train_cfg) = resolve_training(&mut r, &topts, seed, &defaults)?;
    let out = r.out_dir(common.out, "compare-poisson")?;
    r.finish(&mut manifest)?;
    let kind = solver_kind(&solver_name)?;
    let case = sine_case();

    let f = case.forcing.clone();
    let g = case.boundary.clone();
    let (fdm_field, _) =
        solve_fdm_poisson(n, move |x, y| f(x, y), move |x, y| g(x, y), kind)
            .map_err(lib_err)?;
    let (fdm_l2, fdm_linf) = fdm_errors(&fdm_field, |x, y| (case.exact)(x, y));

    let f = case.forcing.clone();
    let g = case.boundary.clone();
    let (fem_sol, _) =
        solve_fem_poisson(n, move |x, y| f(x, y), move |x, y| g(x, y), kind)
            .map_err(lib_err)?;
    let fem_l2 = fem_l2_error(&fem_sol, |x, y| (case.exact)(x, y));
    let fem_linf = fem_linf_error(&fem_sol, |x, y| (case.exact)(x, y));

    let problem = poisson_sine_problem();
    let net = NetSpec {
        dims,
        source_dims: None,
    };
    let model = run_training(&problem, &net, &sample_cfg, &train_cfg, &out, &mut manifest)?;
    let (pinn_l2, pinn_linf, pinn_rel) =
        eval_errors_2d(&model.params, |x, y| (case.exact)(x, y)).map_err(numerical)?;

    // Each method is scored on its own natural points: grid nodes,
    // mesh vertices, or the 50 x 50 sample lattice. l2 is the plain
    // RMS of the pointwise error in every case.
    let mut csv = String::from("method,dof,l2,linf\n");
    csv.push_str(&format!("fdm,{},{fdm_l2},{fdm_linf}\n", n * n));
    csv.push_str(&format!(
        "fem,{},{fem_l2},{fem_linf}\n",
        fem_sol.mesh().num_nodes()
    ));
    csv.push_str(&format!(
        "pinn,{},{pinn_l2},{pinn_linf}\n",
        model.params.num_params()
    ));
    write_text(&out, "compare.csv", &csv)?;

    manifest.set("fdm_l2", fdm_l2);
    manifest.set("fem_l2", fem_l2);
    manifest.set("pinn_l2", pinn_l2);
    manifest.set("pinn_rel_l2", pinn_rel);
    manifest.write(&out)?;
    println!(
        "compare poisson n={n}: fdm_l2={fdm_l2:.3e} fem_l2={fem_l2:.3e} pinn_l2={pinn_l2:.3e} -> {}",
        out.display()
    );
    Ok(())
}
