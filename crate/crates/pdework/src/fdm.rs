//! Five-point finite differences for the Poisson problem
//! `-(u_xx + u_yy) = f` on the unit square with Dirichlet data `g`.

use crate::discretize::{uniform_grid_2d, Grid2D};
use crate::error::Result;
use crate::linalg::{
    cg_solve, csr_from_triplets, lu_solve, CgConfig, CsrMatrix, SolveReport, SolverKind,
};
use std::time::Instant;

/// Nodal field over the full `(n+2) x (n+2)` lattice of a [`Grid2D`],
/// boundary included, stored row by row in `j`.
#[derive(Debug, Clone)]
pub struct Field2D {
    grid: Grid2D,
    values: Vec<f64>,
}

impl Field2D {
    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.grid.nodes_per_side() + i]
    }
}

/// Assembles the interior system for the five-point stencil.
///
/// Unknowns are the `n^2` interior nodes in [`Grid2D::interior_index`]
/// order. Each row has 4 on the diagonal and -1 per interior neighbor;
/// the right-hand side is `h^2 f` plus the Dirichlet values of any
/// boundary neighbors.
pub fn assemble_fdm_poisson(
    grid: &Grid2D,
    f: impl Fn(f64, f64) -> f64,
    g: impl Fn(f64, f64) -> f64,
) -> Result<(CsrMatrix, Vec<f64>)> {
    let n = grid.n();
    let h2 = grid.h() * grid.h();
    let mut trips = Vec::with_capacity(5 * n * n);
    let mut rhs = vec![0.0; n * n];
    for j in 1..=n {
        for i in 1..=n {
            let row = grid.interior_index(i, j);
            trips.push((row, row, 4.0));
            rhs[row] = h2 * f(grid.x(i), grid.y(j));
            let neighbors = [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)];
            for (ni, nj) in neighbors {
                if grid.is_boundary(ni, nj) {
                    rhs[row] += g(grid.x(ni), grid.y(nj));
                } else {
                    trips.push((row, grid.interior_index(ni, nj), -1.0));
                }
            }
        }
    }
    let a = csr_from_triplets(n * n, n * n, &trips)?;
    Ok((a, rhs))
}

/// Solves the Poisson problem on an `n`-interior-node grid and returns
/// the full nodal field (Dirichlet values on the boundary) plus a
/// solve report.
pub fn solve_fdm_poisson(
    n: usize,
    f: impl Fn(f64, f64) -> f64,
    g: impl Fn(f64, f64) -> f64,
    solver: SolverKind,
) -> Result<(Field2D, SolveReport)> {
    let grid = uniform_grid_2d(n)?;
    let start = Instant::now();
    let (a, rhs) = assemble_fdm_poisson(&grid, &f, &g)?;
    let (interior, report) = match solver {
        SolverKind::Cg => {
            let out = cg_solve(&a, &rhs, &CgConfig::default())?;
            let report = SolveReport {
                solver,
                iterations: out.iterations,
                relative_residual: out.relative_residual,
                wall_time: 0.0,
                converged: out.converged,
            };
            (out.x, report)
        }
        SolverKind::Lu => {
            let x = lu_solve(&a.to_dense(), &rhs)?;
            let residual = residual_norm(&a, &x, &rhs);
            let rhs_norm = crate::linalg::norm2(&rhs);
            let report = SolveReport {
                solver,
                iterations: 0,
                relative_residual: if rhs_norm > 0.0 {
                    residual / rhs_norm
                } else {
                    residual
                },
                wall_time: 0.0,
                converged: true,
            };
            (x, report)
        }
    };

    let side = grid.nodes_per_side();
    let mut values = vec![0.0; side * side];
    for j in 0..side {
        for i in 0..side {
            values[j * side + i] = if grid.is_boundary(i, j) {
                g(grid.x(i), grid.y(j))
            } else {
                interior[grid.interior_index(i, j)]
            };
        }
    }
    let report = SolveReport {
        wall_time: start.elapsed().as_secs_f64(),
        ..report
    };
    Ok((Field2D { grid, values }, report))
}

fn residual_norm(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.matvec(x).expect("shapes fixed by assembly");
    ax.iter()
        .zip(b)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn zero(_: f64, _: f64) -> f64 {
        0.0
    }

    fn sine_exact(x: f64, y: f64) -> f64 {
        (PI * x).sin() * (PI * y).sin()
    }

    fn sine_forcing(x: f64, y: f64) -> f64 {
        2.0 * PI * PI * sine_exact(x, y)
    }

    fn max_interior_error(field: &Field2D, exact: impl Fn(f64, f64) -> f64) -> f64 {
        let g = field.grid();
        let mut worst = 0.0f64;
        for j in 1..=g.n() {
            for i in 1..=g.n() {
                worst = worst.max((field.at(i, j) - exact(g.x(i), g.y(j))).abs());
            }
        }
        worst
    }

    #[test]
    fn single_unknown_matches_hand_elimination() {
        // One interior node, all four neighbors on the boundary with
        // g = 1 and f = 0: the row reads 4u = 4.
        let grid = uniform_grid_2d(1).unwrap();
        let (a, rhs) = assemble_fdm_poisson(&grid, zero, |_, _| 1.0).unwrap();
        assert_eq!(a.nnz(), 1);
        assert_eq!(a.get(0, 0), 4.0);
        assert_eq!(rhs, vec![4.0]);
        let (field, _) = solve_fdm_poisson(1, zero, |_, _| 1.0, SolverKind::Lu).unwrap();
        assert!((field.at(1, 1) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn two_by_two_interior_matches_hand_elimination() {
        // f = 1, g = 0, h = 1/3. Every unknown has two interior
        // neighbors; by symmetry all equal u with 4u - 2u = h^2, so
        // u = 1/18.
        let (field, _) = solve_fdm_poisson(2, |_, _| 1.0, zero, SolverKind::Lu).unwrap();
        for j in 1..=2 {
            for i in 1..=2 {
                assert!((field.at(i, j) - 1.0 / 18.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn assembled_matrix_has_stencil_structure() {
        let grid = uniform_grid_2d(3).unwrap();
        let (a, _) = assemble_fdm_poisson(&grid, zero, zero).unwrap();
        // 9 diagonal entries plus two entries per interior adjacency
        // (12 adjacencies on a 3x3 interior grid).
        assert_eq!(a.nnz(), 33);
        assert!(a.asymmetry() == 0.0);
        for row in 0..9 {
            assert_eq!(a.get(row, row), 4.0);
        }
        // The center unknown couples to all four neighbors.
        let center = grid.interior_index(2, 2);
        let off: f64 = (0..9)
            .filter(|&c| c != center)
            .map(|c| a.get(center, c))
            .sum();
        assert_eq!(off, -4.0);
    }

    #[test]
    fn boundary_row_contributions_land_in_rhs() {
        // g = x + y, f = 0 on the 2x2 grid: unknown (1,1) sees
        // boundary neighbors (0,1) and (1,0) worth g = 1/3 each.
        let grid = uniform_grid_2d(2).unwrap();
        let (_, rhs) = assemble_fdm_poisson(&grid, zero, |x, y| x + y).unwrap();
        let row = grid.interior_index(1, 1);
        assert!((rhs[row] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn reproduces_constant_and_linear_fields_exactly() {
        // Both are discrete-harmonic, so the stencil solves them to
        // rounding.
        let (field_c, _) = solve_fdm_poisson(5, zero, |_, _| 3.5, SolverKind::Lu).unwrap();
        assert!(max_interior_error(&field_c, |_, _| 3.5) < 1e-13);
        let (field_l, _) = solve_fdm_poisson(5, zero, |x, y| x + 2.0 * y, SolverKind::Lu).unwrap();
        assert!(max_interior_error(&field_l, |x, y| x + 2.0 * y) < 1e-13);
    }

    #[test]
    fn boundary_nodes_carry_dirichlet_data() {
        let (field, _) = solve_fdm_poisson(3, zero, |x, y| x * y + 1.0, SolverKind::Cg).unwrap();
        let g = field.grid();
        for k in 0..g.nodes_per_side() {
            assert_eq!(field.at(k, 0), g.x(k) * 0.0 + 1.0);
            assert_eq!(field.at(0, k), 1.0);
            assert_eq!(field.at(k, g.n() + 1), g.x(k) * 1.0 + 1.0);
        }
    }

    #[test]
    fn discrete_maximum_principle_for_nonnegative_forcing() {
        let g = |x: f64, y: f64| (3.0 * x).sin() + 0.5 * (2.0 * y).cos();
        let (field, _) = solve_fdm_poisson(8, |_, _| 1.0, g, SolverKind::Cg).unwrap();
        let grid = field.grid();
        let side = grid.nodes_per_side();
        let mut boundary_min = f64::INFINITY;
        for k in 0..side {
            for (i, j) in [(k, 0), (k, side - 1), (0, k), (side - 1, k)] {
                boundary_min = boundary_min.min(field.at(i, j));
            }
        }
        let mut interior_min = f64::INFINITY;
        for j in 1..=grid.n() {
            for i in 1..=grid.n() {
                interior_min = interior_min.min(field.at(i, j));
            }
        }
        assert!(interior_min >= boundary_min - 1e-9);
    }

    #[test]
    fn sine_case_accuracy_and_refinement_ratio() {
        let (coarse, _) = solve_fdm_poisson(8, sine_forcing, zero, SolverKind::Cg).unwrap();
        let (fine, _) = solve_fdm_poisson(16, sine_forcing, zero, SolverKind::Cg).unwrap();
        let e8 = max_interior_error(&coarse, sine_exact);
        let e16 = max_interior_error(&fine, sine_exact);
        assert!(e16 < 4e-3, "L-inf error at n=16 was {e16}");
        let ratio = e8 / e16;
        assert!(
            (3.4..=4.6).contains(&ratio),
            "halving h gave ratio {ratio}"
        );
    }

    #[test]
    fn cg_and_lu_agree_on_sine_case() {
        let (a, _) = solve_fdm_poisson(8, sine_forcing, zero, SolverKind::Cg).unwrap();
        let (b, _) = solve_fdm_poisson(8, sine_forcing, zero, SolverKind::Lu).unwrap();
        let worst = a
            .values()
            .iter()
            .zip(b.values())
            .fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
        assert!(worst < 1e-8);
    }

    #[test]
    fn solve_reports_describe_the_solver_path() {
        let (_, cg) = solve_fdm_poisson(4, sine_forcing, zero, SolverKind::Cg).unwrap();
        assert_eq!(cg.solver, SolverKind::Cg);
        assert!(cg.converged);
        assert!(cg.iterations > 0);
        assert!(cg.relative_residual <= 1e-10);
        let (_, lu) = solve_fdm_poisson(4, sine_forcing, zero, SolverKind::Lu).unwrap();
        assert_eq!(lu.iterations, 0);
        assert!(lu.converged);
        assert!(lu.wall_time >= 0.0);
    }
}
