//! Chebyshev collocation for the two-point boundary value problem
//! `u'' = f` on `(-1, 1)` with `u(-1) = a`, `u(1) = b`.
//!
//! The grid runs from +1 down to -1, so a solution vector carries
//! `u(+1)` first and `u(-1)` last. Boundary columns of the squared
//! differentiation matrix move to the right-hand side and the dense
//! interior system is solved directly.

use crate::discretize::{cgl_nodes, cheb_diff2, ChebGrid};
use crate::error::{Error, Result};
use crate::linalg::{lu_solve, DenseMatrix};

/// Collocation solution on a Chebyshev-Gauss-Lobatto grid.
/// `nodal_values[j]` belongs to `grid.nodes()[j]`; index 0 is `x = +1`.
#[derive(Debug, Clone)]
pub struct SpectralSolution {
    grid: ChebGrid,
    nodal_values: Vec<f64>,
}

impl SpectralSolution {
    pub fn grid(&self) -> &ChebGrid {
        &self.grid
    }

    pub fn nodal_values(&self) -> &[f64] {
        &self.nodal_values
    }
}

/// Solves `u'' = f` at degree `n >= 2` with `u(-1) = a`, `u(1) = b`.
pub fn solve_spectral(
    n: usize,
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
) -> Result<SpectralSolution> {
    if n < 2 {
        return Err(Error::InvalidArgument(
            "collocation needs degree at least 2 for an interior node".into(),
        ));
    }
    let grid = cgl_nodes(n)?;
    let x = grid.nodes();
    let d2 = cheb_diff2(n)?;

    // Interior nodes are indices 1..n; column 0 multiplies u(+1) = b
    // and column n multiplies u(-1) = a.
    let m = n - 1;
    let mut a_int = DenseMatrix::zeros(m, m);
    let mut rhs = vec![0.0; m];
    for j in 1..n {
        for k in 1..n {
            a_int.set(j - 1, k - 1, d2.get(j, k));
        }
        rhs[j - 1] = f(x[j]) - d2.get(j, 0) * b - d2.get(j, n) * a;
    }
    let interior = lu_solve(&a_int, &rhs)?;

    let mut nodal_values = Vec::with_capacity(n + 1);
    nodal_values.push(b);
    nodal_values.extend_from_slice(&interior);
    nodal_values.push(a);
    Ok(SpectralSolution { grid, nodal_values })
}

/// Evaluates the degree-`n` interpolant through the nodal values at
/// `x` in `[-1, 1]` using the second barycentric form with the
/// closed-form Chebyshev weights.
pub fn eval_interpolant(sol: &SpectralSolution, x: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::InvalidArgument(format!(
            "evaluation point {x} outside [-1, 1]"
        )));
    }
    let nodes = sol.grid.nodes();
    let n = sol.grid.degree();
    let mut num = 0.0;
    let mut den = 0.0;
    for (j, (&xj, &uj)) in nodes.iter().zip(&sol.nodal_values).enumerate() {
        let diff = x - xj;
        if diff == 0.0 {
            return Ok(uj);
        }
        let mut w = if j % 2 == 0 { 1.0 } else { -1.0 };
        if j == 0 || j == n {
            w *= 0.5;
        }
        let t = w / diff;
        num += t * uj;
        den += t;
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn max_nodal_error(sol: &SpectralSolution, exact: impl Fn(f64) -> f64) -> f64 {
        sol.grid()
            .nodes()
            .iter()
            .zip(sol.nodal_values())
            .fold(0.0f64, |m, (&x, &v)| m.max((v - exact(x)).abs()))
    }

    #[test]
    fn constant_and_linear_fields_pass_through() {
        let sol = solve_spectral(6, |_| 0.0, 2.5, 2.5).unwrap();
        assert!(max_nodal_error(&sol, |_| 2.5) < 1e-12);
        // u = 3x - 1 has u(-1) = -4, u(1) = 2.
        let sol = solve_spectral(6, |_| 0.0, -4.0, 2.0).unwrap();
        assert!(max_nodal_error(&sol, |x| 3.0 * x - 1.0) < 1e-12);
    }

    #[test]
    fn quadratic_is_exact_and_endpoints_sit_in_order() {
        // u = x^2: f = 2, u(-1) = u(1) = 1.
        let sol = solve_spectral(4, |_| 2.0, 1.0, 1.0).unwrap();
        assert!(max_nodal_error(&sol, |x| x * x) < 1e-12);
        // First nodal value belongs to x = +1, last to x = -1.
        assert_eq!(sol.grid().nodes()[0], 1.0);
        assert_eq!(sol.nodal_values()[0], 1.0);
        assert_eq!(*sol.grid().nodes().last().unwrap(), -1.0);
    }

    #[test]
    fn asymmetric_boundary_values_land_on_the_right_ends() {
        // u = x^2 + x: f = 2, u(-1) = 0, u(1) = 2. A swapped
        // boundary assignment would be caught immediately.
        let sol = solve_spectral(5, |_| 2.0, 0.0, 2.0).unwrap();
        assert!(max_nodal_error(&sol, |x| x * x + x) < 1e-12);
        assert_eq!(sol.nodal_values()[0], 2.0);
        assert_eq!(*sol.nodal_values().last().unwrap(), 0.0);
    }

    #[test]
    fn exponential_reaches_near_machine_accuracy_at_degree_20() {
        let sol = solve_spectral(20, |x: f64| x.exp(), (-1.0f64).exp(), 1.0f64.exp()).unwrap();
        let err = max_nodal_error(&sol, |x| x.exp());
        assert!(err < 1e-9, "degree-20 error {err}");
    }

    #[test]
    fn exponential_error_decays_geometrically_until_rounding() {
        let mut errors = Vec::new();
        for n in [4usize, 8, 12, 16, 20] {
            let sol = solve_spectral(n, |x: f64| x.exp(), (-1.0f64).exp(), 1.0f64.exp()).unwrap();
            errors.push(max_nodal_error(&sol, |x| x.exp()));
        }
        for w in errors.windows(2) {
            if w[0] > 1e-12 {
                assert!(w[1] < 0.1 * w[0], "decay stalled: {} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn random_polynomials_solve_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [4usize, 7, 10] {
            let coeffs: Vec<f64> = (0..=n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let u = |x: f64| {
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c * x.powi(k as i32))
                    .sum::<f64>()
            };
            let upp = |x: f64| {
                coeffs
                    .iter()
                    .enumerate()
                    .skip(2)
                    .map(|(k, c)| c * (k * (k - 1)) as f64 * x.powi(k as i32 - 2))
                    .sum::<f64>()
            };
            let sol = solve_spectral(n, upp, u(-1.0), u(1.0)).unwrap();
            assert!(max_nodal_error(&sol, u) < 1e-10, "degree {n}");
        }
    }

    #[test]
    fn interpolant_hits_nodes_and_known_values() {
        let sol = solve_spectral(4, |_| 2.0, 1.0, 1.0).unwrap();
        for (&x, &v) in sol.grid().nodes().iter().zip(sol.nodal_values()) {
            assert_eq!(eval_interpolant(&sol, x).unwrap(), v);
        }
        // The interpolant of x^2 is x^2 itself.
        assert!((eval_interpolant(&sol, 0.3).unwrap() - 0.09).abs() < 1e-12);
        let c = solve_spectral(3, |_| 0.0, 7.0, 7.0).unwrap();
        assert!((eval_interpolant(&c, 0.123).unwrap() - 7.0).abs() < 1e-12);
    }

    #[test]
    fn interpolant_rejects_points_outside_the_domain() {
        let sol = solve_spectral(3, |_| 0.0, 0.0, 0.0).unwrap();
        assert!(eval_interpolant(&sol, 1.0001).is_err());
        assert!(eval_interpolant(&sol, -2.0).is_err());
    }

    #[test]
    fn degree_below_two_is_rejected() {
        assert!(solve_spectral(1, |_| 0.0, 0.0, 0.0).is_err());
    }
}
