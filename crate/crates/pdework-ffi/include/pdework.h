#ifndef PDEWORK_H
#define PDEWORK_H

/* Generated by cbindgen from the pdework-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Outcome of a C API call. Anything but `Ok` leaves a message
// retrievable through `pw_last_error_message`.
typedef enum PwStatus {
  PW_STATUS_OK = 0,
  // A required pointer argument was null.
  PW_STATUS_NULL_POINTER = 1,
  // An argument value lies outside the operation's domain.
  PW_STATUS_INVALID_ARGUMENT = 2,
  // The computation itself failed (singular system, divergence, ...).
  PW_STATUS_NUMERICAL = 3,
  // An internal invariant broke; the library state is still sound.
  PW_STATUS_PANIC = 4,
} PwStatus;

// Grid solution of the five-point scheme on the unit square.
typedef struct PwFdmSolution PwFdmSolution;

// Nodal solution of the triangular linear-element method.
typedef struct PwFemSolution PwFemSolution;

// Node values of the upwind finite-volume scheme on [0, 1].
typedef struct PwFvmSolution PwFvmSolution;

// Collocation solution on Chebyshev nodes over [-1, 1].
typedef struct PwSpectralSolution PwSpectralSolution;

// Scalar field on the plane: `f(x, y, ctx)`. The context pointer is
// passed through untouched.
typedef double (*PwField2D)(double x, double y, void *ctx);

// Scalar field on the line: `f(x, ctx)`.
typedef double (*PwField1D)(double x, void *ctx);

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for this thread's most recent failing call. The pointer
// stays valid until the next failing call on the same thread; it is
// never null, merely empty when nothing has failed yet.
const char *pw_last_error_message(void);

// Solves `-(u_xx + u_yy) = f` on the unit square with Dirichlet data
// `g`, `n` interior nodes per direction, conjugate gradients when
// `use_lu` is zero and dense LU otherwise. On success writes a handle
// to `*out`; release it with `pw_fdm_solution_free`.
//
// # Safety
// `f` and `g` must be callable for the whole duration of the call
// with their context pointers, and `out` must point to writable
// storage for one pointer.
enum PwStatus pw_fdm_solve(size_t n,
                           PwField2D f,
                           void *f_ctx,
                           PwField2D g,
                           void *g_ctx,
                           int32_t use_lu,
                           struct PwFdmSolution **out);

// Nodes per direction of the solution grid, boundary included; zero
// for a null handle.
size_t pw_fdm_nodes_per_side(const struct PwFdmSolution *sol);

// Coordinate of grid line `index` (the grid is the same in x and y);
// NaN when the handle is null or the index is out of range.
double pw_fdm_node_coordinate(const struct PwFdmSolution *sol, size_t index);

// Solution value at grid node `(i, j)`; NaN when the handle is null
// or an index is out of range.
double pw_fdm_value(const struct PwFdmSolution *sol, size_t i, size_t j);

// Releases a handle from `pw_fdm_solve`. Null is a no-op.
//
// # Safety
// `sol` must be a pointer returned by `pw_fdm_solve` that has not
// been freed already.
void pw_fdm_solution_free(struct PwFdmSolution *sol);

// Solves the same boundary value problem as `pw_fdm_solve` with
// linear triangular elements on an `n x n` structured mesh. On
// success writes a handle to `*out`; release it with
// `pw_fem_solution_free`.
//
// # Safety
// Same contract as `pw_fdm_solve`.
enum PwStatus pw_fem_solve(size_t n,
                           PwField2D f,
                           void *f_ctx,
                           PwField2D g,
                           void *g_ctx,
                           int32_t use_lu,
                           struct PwFemSolution **out);

// Number of mesh nodes; zero for a null handle.
size_t pw_fem_num_nodes(const struct PwFemSolution *sol);

// Copies node `k`'s position and solution value into the given
// slots. Null output slots are skipped.
//
// # Safety
// Non-null output pointers must point to writable doubles.
enum PwStatus pw_fem_node(const struct PwFemSolution *sol,
                          size_t k,
                          double *x_out,
                          double *y_out,
                          double *u_out);

// Releases a handle from `pw_fem_solve`. Null is a no-op.
//
// # Safety
// `sol` must be a pointer returned by `pw_fem_solve` that has not
// been freed already.
void pw_fem_solution_free(struct PwFemSolution *sol);

// Solves steady convection-diffusion `a u' - nu u'' = f` on [0, 1]
// with an upwind finite-volume scheme on `n_nodes` uniform nodes
// (boundaries included) and Dirichlet values `u_left`, `u_right`.
// On success writes a handle to `*out`; release it with
// `pw_fvm_solution_free`.
//
// # Safety
// `f` must be callable for the whole duration of the call with its
// context pointer, and `out` must point to writable storage for one
// pointer.
enum PwStatus pw_fvm_solve(size_t n_nodes,
                           double a,
                           double nu,
                           PwField1D f,
                           void *f_ctx,
                           double u_left,
                           double u_right,
                           struct PwFvmSolution **out);

// Number of nodes, boundaries included; zero for a null handle.
size_t pw_fvm_num_nodes(const struct PwFvmSolution *sol);

// Copies node `k`'s position and value into the given slots. Null
// output slots are skipped.
//
// # Safety
// Non-null output pointers must point to writable doubles.
enum PwStatus pw_fvm_node(const struct PwFvmSolution *sol, size_t k, double *x_out, double *u_out);

// Worst cell-balance defect of a finite-volume solution: flux out
// minus flux in minus interior source, maximized over cells. Exact
// conservation makes this rounding-level small.
//
// # Safety
// `f` must be the source field the system was solved with (callable
// with `f_ctx`), and `defect_out` must point to a writable double.
enum PwStatus pw_fvm_conservation_defect(const struct PwFvmSolution *sol,
                                         double a,
                                         double nu,
                                         PwField1D f,
                                         void *f_ctx,
                                         double *defect_out);

// Releases a handle from `pw_fvm_solve`. Null is a no-op.
//
// # Safety
// `sol` must be a pointer returned by `pw_fvm_solve` that has not
// been freed already.
void pw_fvm_solution_free(struct PwFvmSolution *sol);

// Solves `u'' = f` on [-1, 1] by Chebyshev collocation of degree `n`
// with boundary values `u_minus` at -1 and `u_plus` at +1. On
// success writes a handle to `*out`; release it with
// `pw_spectral_solution_free`.
//
// # Safety
// `f` must be callable for the whole duration of the call with its
// context pointer, and `out` must point to writable storage for one
// pointer.
enum PwStatus pw_spectral_solve(size_t n,
                                PwField1D f,
                                void *f_ctx,
                                double u_minus,
                                double u_plus,
                                struct PwSpectralSolution **out);

// Number of collocation nodes (degree + 1); zero for a null handle.
size_t pw_spectral_num_nodes(const struct PwSpectralSolution *sol);

// Copies collocation node `k` (ordered from +1 down to -1) and its
// value into the given slots. Null output slots are skipped.
//
// # Safety
// Non-null output pointers must point to writable doubles.
enum PwStatus pw_spectral_node(const struct PwSpectralSolution *sol,
                               size_t k,
                               double *x_out,
                               double *u_out);

// Evaluates the collocation interpolant at `x` in [-1, 1].
//
// # Safety
// `u_out` must point to a writable double.
enum PwStatus pw_spectral_eval(const struct PwSpectralSolution *sol, double x, double *u_out);

// Releases a handle from `pw_spectral_solve`. Null is a no-op.
//
// # Safety
// `sol` must be a pointer returned by `pw_spectral_solve` that has
// not been freed already.
void pw_spectral_solution_free(struct PwSpectralSolution *sol);

// Closed-form accuracy reference for viscous shock formation:
// the solution of `u_t + u u_x = nu u_xx` on [-1, 1] with
// `u(x, 0) = -sin(pi x)` and zero walls, evaluated by quadrature.
//
// # Safety
// `u_out` must point to a writable double.
enum PwStatus pw_burgers_reference(double x, double t, double nu, double *u_out);

// Decaying sine solution of the heat equation on [0, 1] with
// diffusivity `kappa`: `sin(pi x) exp(-kappa pi^2 t)`.
double pw_heat_reference(double x, double t, double kappa);

// Fits the L2 convergence order of the five-point scheme on the
// product-sine benchmark over the given interior node counts.
//
// # Safety
// `levels` must point to `n_levels` readable entries and `order_out`
// to a writable double.
enum PwStatus pw_fdm_convergence_order(const size_t *levels, size_t n_levels, double *order_out);

// Fits the L2 convergence order of the element method on the
// product-sine benchmark over the given mesh resolutions.
//
// # Safety
// Same contract as `pw_fdm_convergence_order`.
enum PwStatus pw_fem_convergence_order(const size_t *levels, size_t n_levels, double *order_out);

// Fits the L2 convergence order of the upwind scheme on the
// boundary-layer benchmark with convection `a` and diffusivity `nu`
// over the given node counts.
//
// # Safety
// Same contract as `pw_fdm_convergence_order`.
enum PwStatus pw_fvm_convergence_order(double a,
                                       double nu,
                                       const size_t *levels,
                                       size_t n_levels,
                                       double *order_out);

// Recovers the diffusivity of the built-in heat benchmark (true
// value 1) from `n_obs` synthetic observations with relative noise
// `noise`, training `steps` optimizer steps from `seed`. Writes the
// estimate to `*kappa_out`.
//
// # Safety
// `kappa_out` must point to a writable double.
enum PwStatus pw_pinn_invert_kappa(size_t n_obs,
                                   double noise,
                                   uint64_t seed,
                                   size_t steps,
                                   double *kappa_out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* PDEWORK_H */
