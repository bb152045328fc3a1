//! C ABI over the pdework solvers: opaque solution handles, integer
//! status codes, and a per-thread error message. Every entry point
//! catches panics at the boundary, so no Rust unwinding ever crosses
//! into the caller.
//!
//! Handle lifecycle: a successful `pw_*_solve` writes a heap-owned
//! handle to `*out`; the caller releases it with the matching
//! `pw_*_solution_free`. Accessors taking `*const` never mutate and
//! tolerate null (they return zero sizes or NaN values).

use std::cell::RefCell;
use std::ffi::{c_char, c_void, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use pdework::error::Error;
use pdework::fdm::{solve_fdm_poisson, Field2D};
use pdework::fem::{solve_fem_poisson, FemSolution};
use pdework::fvm::{conservation_defect, solve_fvm, FvmSolution, Interval1D};
use pdework::linalg::SolverKind;
use pdework::neural::AdamConfig;
use pdework::pinn::{
    synthetic_heat_observations, train, LossWeights, NetSpec, PinnProblem, SampleConfig,
    SampleMethod, TrainConfig, WeightStrategy,
};
use pdework::spectral::{eval_interpolant, solve_spectral, SpectralSolution};
use pdework::verify::{
    boundary_layer_case, burgers_reference, convergence_study, heat_reference, sine_case,
    CaseSpec, Method,
};

/// Outcome of a C API call. Anything but `Ok` leaves a message
/// retrievable through `pw_last_error_message`.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PwStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument value lies outside the operation's domain.
    InvalidArgument = 2,
    /// The computation itself failed (singular system, divergence, ...).
    Numerical = 3,
    /// An internal invariant broke; the library state is still sound.
    Panic = 4,
}

/// Scalar field on the plane: `f(x, y, ctx)`. The context pointer is
/// passed through untouched.
pub type PwField2D = Option<extern "C" fn(x: f64, y: f64, ctx: *mut c_void) -> f64>;

/// Scalar field on the line: `f(x, ctx)`.
pub type PwField1D = Option<extern "C" fn(x: f64, ctx: *mut c_void) -> f64>;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let sanitized = msg.replace('\0', " ");
    let c = CString::new(sanitized).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(e: &Error) -> PwStatus {
    set_error(&e.to_string());
    match e {
        Error::InvalidArgument(_)
        | Error::Structural(_)
        | Error::Geometry(_)
        | Error::Config(_) => PwStatus::InvalidArgument,
        _ => PwStatus::Numerical,
    }
}

fn null_arg(what: &str) -> PwStatus {
    set_error(&format!("{what} must not be null"));
    PwStatus::NullPointer
}

/// Runs a call body with a panic fence at the ABI boundary.
fn guarded(body: impl FnOnce() -> PwStatus) -> PwStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            PwStatus::Panic
        }
    }
}

/// Message for this thread's most recent failing call. The pointer
/// stays valid until the next failing call on the same thread; it is
/// never null, merely empty when nothing has failed yet.
#[no_mangle]
pub extern "C" fn pw_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Grid solution of the five-point scheme on the unit square.
pub struct PwFdmSolution {
    inner: Field2D,
}

/// Nodal solution of the triangular linear-element method.
pub struct PwFemSolution {
    inner: FemSolution,
}

/// Node values of the upwind finite-volume scheme on [0, 1].
pub struct PwFvmSolution {
    inner: FvmSolution,
}

/// Collocation solution on Chebyshev nodes over [-1, 1].
pub struct PwSpectralSolution {
    inner: SpectralSolution,
}

/// Solves `-(u_xx + u_yy) = f` on the unit square with Dirichlet data
/// `g`, `n` interior nodes per direction, conjugate gradients when
/// `use_lu` is zero and dense LU otherwise. On success writes a handle
/// to `*out`; release it with `pw_fdm_solution_free`.
///
/// # Safety
/// `f` and `g` must be callable for the whole duration of the call
/// with their context pointers, and `out` must point to writable
/// storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn pw_fdm_solve(
    n: usize,
    f: PwField2D,
    f_ctx: *mut c_void,
    g: PwField2D,
    g_ctx: *mut c_void,
    use_lu: i32,
    out: *mut *mut PwFdmSolution,
) -> PwStatus {
    guarded(|| {
        let (Some(f), Some(g)) = (f, g) else {
            return null_arg("f and g");
        };
        if out.is_null() {
            return null_arg("out");
        }
        let kind = if use_lu != 0 {
            SolverKind::Lu
        } else {
            SolverKind::Cg
        };
        match solve_fdm_poisson(n, move |x, y| f(x, y, f_ctx), move |x, y| g(x, y, g_ctx), kind)
        {
            Ok((field, _)) => {
                *out = Box::into_raw(Box::new(PwFdmSolution { inner: field }));
                PwStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Nodes per direction of the solution grid, boundary included; zero
/// for a null handle.
#[no_mangle]
pub extern "C" fn pw_fdm_nodes_per_side(sol: *const PwFdmSolution) -> usize {
    if sol.is_null() {
        return 0;
    }
    // SAFETY: non-null handles only come from pw_fdm_solve.
    unsafe { (*sol).inner.grid().nodes_per_side() }
}

/// Coordinate of grid line `index` (the grid is the same in x and y);
/// NaN when the handle is null or the index is out of range.
#[no_mangle]
pub extern "C" fn pw_fdm_node_coordinate(sol: *const PwFdmSolution, index: usize) -> f64 {
    if sol.is_null() {
        return f64::NAN;
    }
    // SAFETY: non-null handles only come from pw_fdm_solve.
    let grid = unsafe { (*sol).inner.grid() };
    if index >= grid.nodes_per_side() {
        return f64::NAN;
    }
    grid.x(index)
}

/// Solution value at grid node `(i, j)`; NaN when the handle is null
/// or an index is out of range.
#[no_mangle]
pub extern "C" fn pw_fdm_value(sol: *const PwFdmSolution, i: usize, j: usize) -> f64 {
    if sol.is_null() {
        return f64::NAN;
    }
    // SAFETY: non-null handles only come from pw_fdm_solve.
    let field = unsafe { &(*sol).inner };
    let m = field.grid().nodes_per_side();
    if i >= m || j >= m {
        return f64::NAN;
    }
    field.at(i, j)
}

/// Releases a handle from `pw_fdm_solve`. Null is a no-op.
///
/// # Safety
/// `sol` must be a pointer returned by `pw_fdm_solve` that has not
/// been freed already.
#[no_mangle]
pub unsafe extern "C" fn pw_fdm_solution_free(sol: *mut PwFdmSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// Solves the same boundary value problem as `pw_fdm_solve` with
/// linear triangular elements on an `n x n` structured mesh. On
/// success writes a handle to `*out`; release it with
/// `pw_fem_solution_free`.
///
/// # Safety
/// Same contract as `pw_fdm_solve`.
#[no_mangle]
pub unsafe extern "C" fn pw_fem_solve(
    n: usize,
    f: PwField2D,
    f_ctx: *mut c_void,
    g: PwField2D,
    g_ctx: *mut c_void,
    use_lu: i32,
    out: *mut *mut PwFemSolution,
) -> PwStatus {
    guarded(|| {
        let (Some(f), Some(g)) = (f, g) else {
            return null_arg("f and g");
        };
        if out.is_null() {
            return null_arg("out");
        }
        let kind = if use_lu != 0 {
            SolverKind::Lu
        } else {
            SolverKind::Cg
        };
        match solve_fem_poisson(n, move |x, y| f(x, y, f_ctx), move |x, y| g(x, y, g_ctx), kind)
        {
            Ok((sol, _)) => {
                *out = Box::into_raw(Box::new(PwFemSolution { inner: sol }));
                PwStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Number of mesh nodes; zero for a null handle.
#[no_mangle]
pub extern "C" fn pw_fem_num_nodes(sol: *const PwFemSolution) -> usize {
    if sol.is_null() {
        return 0;
    }
    // SAFETY: non-null handles only come from pw_fem_solve.
    unsafe { (*sol).inner.mesh().num_nodes() }
}

/// Copies node `k`'s position and solution value into the given
/// slots. Null output slots are skipped.
///
/// # Safety
/// Non-null output pointers must point to writable doubles.
#[no_mangle]
pub unsafe extern "C" fn pw_fem_node(
    sol: *const PwFemSolution,
    k: usize,
    x_out: *mut f64,
    y_out: *mut f64,
    u_out: *mut f64,
) -> PwStatus {
    guarded(|| {
        if sol.is_null() {
            return null_arg("sol");
        }
        let inner = &(*sol).inner;
        if k >= inner.mesh().num_nodes() {
            set_error(&format!(
                "node index {k} out of range (mesh has {} nodes)",
                inner.mesh().num_nodes()
            ));
            return PwStatus::InvalidArgument;
        }
        let p = inner.mesh().nodes()[k];
        if !x_out.is_null() {
            *x_out = p[0];
        }
        if !y_out.is_null() {
            *y_out = p[1];
        }
        if !u_out.is_null() {
            *u_out = inner.nodal_values()[k];
        }
        PwStatus::Ok
    })
}

/// Releases a handle from `pw_fem_solve`. Null is a no-op.
///
/// # Safety
/// `sol` must be a pointer returned by `pw_fem_solve` that has not
/// been freed already.
#[no_mangle]
pub unsafe extern "C" fn pw_fem_solution_free(sol: *mut PwFemSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// Solves steady convection-diffusion `a u' - nu u'' = f` on [0, 1]
/// with an upwind finite-volume scheme on `n_nodes` uniform nodes
/// (boundaries included) and Dirichlet values `u_left`, `u_right`.
/// On success writes a handle to `*out`; release it with
/// `pw_fvm_solution_free`.
///
/// # Safety
/// `f` must be callable for the whole duration of the call with its
/// context pointer, and `out` must point to writable storage for one
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn pw_fvm_solve(
    n_nodes: usize,
    a: f64,
    nu: f64,
    f: PwField1D,
    f_ctx: *mut c_void,
    u_left: f64,
    u_right: f64,
    out: *mut *mut PwFvmSolution,
) -> PwStatus {
    guarded(|| {
        let Some(f) = f else {
            return null_arg("f");
        };
        if out.is_null() {
            return null_arg("out");
        }
        let interval = match Interval1D::uniform(n_nodes) {
            Ok(iv) => iv,
            Err(e) => return fail(&e),
        };
        match solve_fvm(&interval, a, nu, move |x| f(x, f_ctx), u_left, u_right) {
            Ok(sol) => {
                *out = Box::into_raw(Box::new(PwFvmSolution { inner: sol }));
                PwStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Number of nodes, boundaries included; zero for a null handle.
#[no_mangle]
pub extern "C" fn pw_fvm_num_nodes(sol: *const PwFvmSolution) -> usize {
    if sol.is_null() {
        return 0;
    }
    // SAFETY: non-null handles only come from pw_fvm_solve.
    unsafe { (*sol).inner.interval().nodes().len() }
}

/// Copies node `k`'s position and value into the given slots. Null
/// output slots are skipped.
///
/// # Safety
/// Non-null output pointers must point to writable doubles.
#[no_mangle]
pub unsafe extern "C" fn pw_fvm_node(
    sol: *const PwFvmSolution,
    k: usize,
    x_out: *mut f64,
    u_out: *mut f64,
) -> PwStatus {
    guarded(|| {
        if sol.is_null() {
            return null_arg("sol");
        }
        let inner = &(*sol).inner;
        let nodes = inner.interval().nodes();
        if k >= nodes.len() {
            set_error(&format!(
                "node index {k} out of range ({} nodes)",
                nodes.len()
            ));
            return PwStatus::InvalidArgument;
        }
        if !x_out.is_null() {
            *x_out = nodes[k];
        }
        if !u_out.is_null() {
            *u_out = inner.values()[k];
        }
        PwStatus::Ok
    })
}

/// Worst cell-balance defect of a finite-volume solution: flux out
/// minus flux in minus interior source, maximized over cells. Exact
/// conservation makes this rounding-level small.
///
/// # Safety
/// `f` must be the source field the system was solved with (callable
/// with `f_ctx`), and `defect_out` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn pw_fvm_conservation_defect(
    sol: *const PwFvmSolution,
    a: f64,
    nu: f64,
    f: PwField1D,
    f_ctx: *mut c_void,
    defect_out: *mut f64,
) -> PwStatus {
    guarded(|| {
        if sol.is_null() {
            return null_arg("sol");
        }
        let Some(f) = f else {
            return null_arg("f");
        };
        if defect_out.is_null() {
            return null_arg("defect_out");
        }
        let inner = &(*sol).inner;
        *defect_out = conservation_defect(inner, a, nu, move |x| f(x, f_ctx));
        PwStatus::Ok
    })
}

/// Releases a handle from `pw_fvm_solve`. Null is a no-op.
///
/// # Safety
/// `sol` must be a pointer returned by `pw_fvm_solve` that has not
/// been freed already.
#[no_mangle]
pub unsafe extern "C" fn pw_fvm_solution_free(sol: *mut PwFvmSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// Solves `u'' = f` on [-1, 1] by Chebyshev collocation of degree `n`
/// with boundary values `u_minus` at -1 and `u_plus` at +1. On
/// success writes a handle to `*out`; release it with
/// `pw_spectral_solution_free`.
///
/// # Safety
/// `f` must be callable for the whole duration of the call with its
/// context pointer, and `out` must point to writable storage for one
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn pw_spectral_solve(
    n: usize,
    f: PwField1D,
    f_ctx: *mut c_void,
    u_minus: f64,
    u_plus: f64,
    out: *mut *mut PwSpectralSolution,
) -> PwStatus {
    guarded(|| {
        let Some(f) = f else {
            return null_arg("f");
        };
        if out.is_null() {
            return null_arg("out");
        }
        match solve_spectral(n, move |x| f(x, f_ctx), u_minus, u_plus) {
            Ok(sol) => {
                *out = Box::into_raw(Box::new(PwSpectralSolution { inner: sol }));
                PwStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Number of collocation nodes (degree + 1); zero for a null handle.
#[no_mangle]
pub extern "C" fn pw_spectral_num_nodes(sol: *const PwSpectralSolution) -> usize {
    if sol.is_null() {
        return 0;
    }
    // SAFETY: non-null handles only come from pw_spectral_solve.
    unsafe { (*sol).inner.grid().nodes().len() }
}

/// Copies collocation node `k` (ordered from +1 down to -1) and its
/// value into the given slots. Null output slots are skipped.
///
/// # Safety
/// Non-null output pointers must point to writable doubles.
#[no_mangle]
pub unsafe extern "C" fn pw_spectral_node(
    sol: *const PwSpectralSolution,
    k: usize,
    x_out: *mut f64,
    u_out: *mut f64,
) -> PwStatus {
    guarded(|| {
        if sol.is_null() {
            return null_arg("sol");
        }
        let inner = &(*sol).inner;
        let nodes = inner.grid().nodes();
        if k >= nodes.len() {
            set_error(&format!(
                "node index {k} out of range ({} nodes)",
                nodes.len()
            ));
            return PwStatus::InvalidArgument;
        }
        if !x_out.is_null() {
            *x_out = nodes[k];
        }
        if !u_out.is_null() {
            *u_out = inner.nodal_values()[k];
        }
        PwStatus::Ok
    })
}

/// Evaluates the collocation interpolant at `x` in [-1, 1].
///
/// # Safety
/// `u_out` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn pw_spectral_eval(
    sol: *const PwSpectralSolution,
    x: f64,
    u_out: *mut f64,
) -> PwStatus {
    guarded(|| {
        if sol.is_null() {
            return null_arg("sol");
        }
        if u_out.is_null() {
            return null_arg("u_out");
        }
        match eval_interpolant(&(*sol).inner, x) {
            Ok(u) => {
                *u_out = u;
                PwStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Releases a handle from `pw_spectral_solve`. Null is a no-op.
///
/// # Safety
/// `sol` must be a pointer returned by `pw_spectral_solve` that has
/// not been freed already.
#[no_mangle]
pub unsafe extern "C" fn pw_spectral_solution_free(sol: *mut PwSpectralSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// Closed-form accuracy reference for viscous shock formation:
/// the solution of `u_t + u u_x = nu u_xx` on [-1, 1] with
/// `u(x, 0) = -sin(pi x)` and zero walls, evaluated by quadrature.
///
/// # Safety
/// `u_out` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn pw_burgers_reference(
    x: f64,
    t: f64,
    nu: f64,
    u_out: *mut f64,
) -> PwStatus {
    guarded(|| {
        if u_out.is_null() {
            return null_arg("u_out");
        }
        match burgers_reference(x, t, nu) {
            Ok(u) => {
                *u_out = u;
                PwStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Decaying sine solution of the heat equation on [0, 1] with
/// diffusivity `kappa`: `sin(pi x) exp(-kappa pi^2 t)`.
#[no_mangle]
pub extern "C" fn pw_heat_reference(x: f64, t: f64, kappa: f64) -> f64 {
    heat_reference(x, t, kappa)
}

fn ladder_order(
    method: Method,
    spec: &CaseSpec,
    levels: *const usize,
    n_levels: usize,
    order_out: *mut f64,
) -> PwStatus {
    if levels.is_null() {
        return null_arg("levels");
    }
    if order_out.is_null() {
        return null_arg("order_out");
    }
    // SAFETY: caller promises n_levels readable entries at levels.
    let levels = unsafe { std::slice::from_raw_parts(levels, n_levels) };
    match convergence_study(method, spec, levels) {
        Ok(report) => {
            if report.levels.iter().any(|r| r.failure.is_some()) {
                set_error("a refinement level failed to solve");
                return PwStatus::Numerical;
            }
            match report.fitted_order {
                Some(order) => {
                    // SAFETY: checked non-null above.
                    unsafe { *order_out = order };
                    PwStatus::Ok
                }
                None => {
                    set_error("need at least two successful levels to fit an order");
                    PwStatus::InvalidArgument
                }
            }
        }
        Err(e) => fail(&e),
    }
}

/// Fits the L2 convergence order of the five-point scheme on the
/// product-sine benchmark over the given interior node counts.
///
/// # Safety
/// `levels` must point to `n_levels` readable entries and `order_out`
/// to a writable double.
#[no_mangle]
pub unsafe extern "C" fn pw_fdm_convergence_order(
    levels: *const usize,
    n_levels: usize,
    order_out: *mut f64,
) -> PwStatus {
    guarded(|| {
        ladder_order(
            Method::Fdm,
            &CaseSpec::TwoD(sine_case()),
            levels,
            n_levels,
            order_out,
        )
    })
}

/// Fits the L2 convergence order of the element method on the
/// product-sine benchmark over the given mesh resolutions.
///
/// # Safety
/// Same contract as `pw_fdm_convergence_order`.
#[no_mangle]
pub unsafe extern "C" fn pw_fem_convergence_order(
    levels: *const usize,
    n_levels: usize,
    order_out: *mut f64,
) -> PwStatus {
    guarded(|| {
        ladder_order(
            Method::Fem,
            &CaseSpec::TwoD(sine_case()),
            levels,
            n_levels,
            order_out,
        )
    })
}

/// Fits the L2 convergence order of the upwind scheme on the
/// boundary-layer benchmark with convection `a` and diffusivity `nu`
/// over the given node counts.
///
/// # Safety
/// Same contract as `pw_fdm_convergence_order`.
#[no_mangle]
pub unsafe extern "C" fn pw_fvm_convergence_order(
    a: f64,
    nu: f64,
    levels: *const usize,
    n_levels: usize,
    order_out: *mut f64,
) -> PwStatus {
    guarded(|| {
        ladder_order(
            Method::Fvm,
            &CaseSpec::OneD(boundary_layer_case(a, nu)),
            levels,
            n_levels,
            order_out,
        )
    })
}

/// Recovers the diffusivity of the built-in heat benchmark (true
/// value 1) from `n_obs` synthetic observations with relative noise
/// `noise`, training `steps` optimizer steps from `seed`. Writes the
/// estimate to `*kappa_out`.
///
/// # Safety
/// `kappa_out` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn pw_pinn_invert_kappa(
    n_obs: usize,
    noise: f64,
    seed: u64,
    steps: usize,
    kappa_out: *mut f64,
) -> PwStatus {
    guarded(|| {
        if kappa_out.is_null() {
            return null_arg("kappa_out");
        }
        let t_end = 0.25;
        let observations = match synthetic_heat_observations(n_obs, t_end, 1.0, noise, seed) {
            Ok(obs) => obs,
            Err(e) => return fail(&e),
        };
        let problem = match PinnProblem::heat_inverse(
            std::sync::Arc::new(|x: f64| (std::f64::consts::PI * x).sin()),
            std::sync::Arc::new(|_| 0.0),
            std::sync::Arc::new(|_| 0.0),
            observations,
            t_end,
        ) {
            Ok(p) => p,
            Err(e) => return fail(&e),
        };
        let sample_cfg = SampleConfig {
            n_interior: 200,
            n_boundary: 60,
            n_initial: 60,
            method: SampleMethod::Lhs,
        };
        let cfg = TrainConfig {
            steps,
            adam: AdamConfig {
                alpha: 2e-3,
                ..Default::default()
            },
            seed,
            resample_every: 0,
            weights: WeightStrategy::Fixed(LossWeights {
                lambda_f: 1.0,
                lambda_b: 10.0,
                lambda_i: 10.0,
                lambda_d: 10.0,
            }),
        };
        match train(&problem, &NetSpec::new(&[2, 16, 16, 1]), &sample_cfg, &cfg) {
            Ok(model) => {
                *kappa_out = model.kappa_hat.expect("heat inversion trains kappa");
                PwStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                PwStatus::Numerical
            }
        }
    })
}
