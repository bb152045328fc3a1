//! Linear (P1) triangular finite elements for the Poisson problem
//! `-div(grad u) = f` on the unit square with Dirichlet data.
//!
//! Stiffness uses exact constant-gradient integration; the load vector
//! uses one-point centroid quadrature. Dirichlet conditions are imposed
//! by row replacement with a symmetric column correction, so the
//! reduced system stays symmetric positive definite.

use crate::discretize::{signed_area, triangulate_unit_square, TriMesh};
use crate::error::{Error, Result};
use crate::linalg::{
    cg_solve, csr_from_triplets, lu_solve, CgConfig, CsrMatrix, SolveReport, SolverKind,
};
use std::time::Instant;

/// Area below which a triangle is treated as degenerate.
pub const DEGENERATE_AREA_MIN: f64 = 1e-14;

/// Nodal P1 solution over a [`TriMesh`].
#[derive(Debug, Clone)]
pub struct FemSolution {
    mesh: TriMesh,
    nodal_values: Vec<f64>,
}

impl FemSolution {
    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn nodal_values(&self) -> &[f64] {
        &self.nodal_values
    }

    /// Value at the centroid of element `k`; for P1 this is the nodal
    /// mean.
    pub fn centroid_value(&self, k: usize) -> f64 {
        let [a, b, c] = self.mesh.elements()[k];
        (self.nodal_values[a] + self.nodal_values[b] + self.nodal_values[c]) / 3.0
    }

    /// Constant gradient of the P1 field on element `k`.
    pub fn element_gradient(&self, k: usize) -> [f64; 2] {
        let ids = self.mesh.elements()[k];
        let coords = self.mesh.element_coords(k);
        let grads = shape_gradients(&coords);
        let mut g = [0.0, 0.0];
        for v in 0..3 {
            g[0] += self.nodal_values[ids[v]] * grads[v][0];
            g[1] += self.nodal_values[ids[v]] * grads[v][1];
        }
        g
    }
}

/// Constant shape-function gradients of a P1 triangle.
fn shape_gradients(coords: &[[f64; 2]; 3]) -> [[f64; 2]; 3] {
    let area = signed_area(coords);
    let two_a = 2.0 * area;
    let [p0, p1, p2] = coords;
    [
        [(p1[1] - p2[1]) / two_a, (p2[0] - p1[0]) / two_a],
        [(p2[1] - p0[1]) / two_a, (p0[0] - p2[0]) / two_a],
        [(p0[1] - p1[1]) / two_a, (p1[0] - p0[0]) / two_a],
    ]
}

/// 3x3 element stiffness `area * grad(phi_i) . grad(phi_j)`.
pub fn element_stiffness(coords: &[[f64; 2]; 3]) -> Result<[[f64; 3]; 3]> {
    let area = signed_area(coords);
    if area.abs() < DEGENERATE_AREA_MIN {
        return Err(Error::Geometry(format!(
            "degenerate triangle with area {area:.3e}"
        )));
    }
    let grads = shape_gradients(coords);
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = area.abs() * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
        }
    }
    Ok(k)
}

/// Element load vector by one-point centroid quadrature:
/// `f(centroid) * area / 3` for each vertex.
pub fn element_load(coords: &[[f64; 2]; 3], f: impl Fn(f64, f64) -> f64) -> Result<[f64; 3]> {
    let area = signed_area(coords);
    if area.abs() < DEGENERATE_AREA_MIN {
        return Err(Error::Geometry(format!(
            "degenerate triangle with area {area:.3e}"
        )));
    }
    let cx = (coords[0][0] + coords[1][0] + coords[2][0]) / 3.0;
    let cy = (coords[0][1] + coords[1][1] + coords[2][1]) / 3.0;
    let v = f(cx, cy) * area.abs() / 3.0;
    Ok([v, v, v])
}

/// Assembles the global stiffness matrix and load vector with no
/// boundary conditions applied. The matrix is singular at this stage;
/// its kernel contains the constant field.
pub fn assemble_fem_poisson(
    mesh: &TriMesh,
    f: impl Fn(f64, f64) -> f64,
) -> Result<(CsrMatrix, Vec<f64>)> {
    let n = mesh.num_nodes();
    let mut trips = Vec::with_capacity(9 * mesh.elements().len());
    let mut rhs = vec![0.0; n];
    for (k, ids) in mesh.elements().iter().enumerate() {
        let coords = mesh.element_coords(k);
        let ke = element_stiffness(&coords)?;
        let fe = element_load(&coords, &f)?;
        for i in 0..3 {
            rhs[ids[i]] += fe[i];
            for j in 0..3 {
                trips.push((ids[i], ids[j], ke[i][j]));
            }
        }
    }
    let a = csr_from_triplets(n, n, &trips)?;
    Ok((a, rhs))
}

/// Imposes Dirichlet values by replacing each constrained row with the
/// identity and moving the matching column into the right-hand side.
///
/// `constraints` pairs node indices with their prescribed values.
pub fn apply_dirichlet(
    a: &CsrMatrix,
    b: &[f64],
    constraints: &[(usize, f64)],
) -> Result<(CsrMatrix, Vec<f64>)> {
    let n = a.nrows();
    if b.len() != n {
        return Err(Error::Structural(format!(
            "apply_dirichlet: matrix has {n} rows but rhs has length {}",
            b.len()
        )));
    }
    let mut value = vec![0.0; n];
    let mut constrained = vec![false; n];
    for &(node, g) in constraints {
        if node >= n {
            return Err(Error::Structural(format!(
                "constraint on node {node} outside system of size {n}"
            )));
        }
        constrained[node] = true;
        value[node] = g;
    }

    let mut trips = Vec::with_capacity(a.nnz());
    let mut rhs = b.to_vec();
    for r in 0..n {
        if constrained[r] {
            trips.push((r, r, 1.0));
            rhs[r] = value[r];
            continue;
        }
        for k in a.row_ptr()[r]..a.row_ptr()[r + 1] {
            let c = a.col_idx()[k];
            let v = a.values()[k];
            if constrained[c] {
                rhs[r] -= v * value[c];
            } else {
                trips.push((r, c, v));
            }
        }
    }
    let reduced = csr_from_triplets(n, n, &trips)?;
    Ok((reduced, rhs))
}

/// Solves the Poisson problem on the structured unit-square mesh with
/// `n` cells per direction.
pub fn solve_fem_poisson(
    n: usize,
    f: impl Fn(f64, f64) -> f64,
    g: impl Fn(f64, f64) -> f64,
    solver: SolverKind,
) -> Result<(FemSolution, SolveReport)> {
    let mesh = triangulate_unit_square(n)?;
    let start = Instant::now();
    let (a, b) = assemble_fem_poisson(&mesh, &f)?;
    let constraints: Vec<(usize, f64)> = mesh
        .boundary()
        .iter()
        .map(|&id| {
            let [x, y] = mesh.nodes()[id];
            (id, g(x, y))
        })
        .collect();
    let (a, b) = apply_dirichlet(&a, &b, &constraints)?;

    let (nodal_values, mut report) = match solver {
        SolverKind::Cg => {
            let out = cg_solve(&a, &b, &CgConfig::default())?;
            (
                out.x,
                SolveReport {
                    solver,
                    iterations: out.iterations,
                    relative_residual: out.relative_residual,
                    wall_time: 0.0,
                    converged: out.converged,
                },
            )
        }
        SolverKind::Lu => {
            let x = lu_solve(&a.to_dense(), &b)?;
            (
                x,
                SolveReport {
                    solver,
                    iterations: 0,
                    relative_residual: 0.0,
                    wall_time: 0.0,
                    converged: true,
                },
            )
        }
    };
    report.wall_time = start.elapsed().as_secs_f64();
    Ok((FemSolution { mesh, nodal_values }, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
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

    const UNIT_RIGHT: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

    /// Element-centroid L2 error of a P1 solution against a closed
    /// form, written directly from the quadrature definition.
    fn centroid_l2_error(sol: &FemSolution, exact: impl Fn(f64, f64) -> f64) -> f64 {
        let mesh = sol.mesh();
        let mut acc = 0.0;
        let mut total_area = 0.0;
        for k in 0..mesh.elements().len() {
            let c = mesh.element_coords(k);
            let (cx, cy) = (
                (c[0][0] + c[1][0] + c[2][0]) / 3.0,
                (c[0][1] + c[1][1] + c[2][1]) / 3.0,
            );
            let area = mesh.element_area(k);
            acc += area * (sol.centroid_value(k) - exact(cx, cy)).powi(2);
            total_area += area;
        }
        (acc / total_area).sqrt()
    }

    fn h1_seminorm_error(sol: &FemSolution, exact_grad: impl Fn(f64, f64) -> [f64; 2]) -> f64 {
        let mesh = sol.mesh();
        let mut acc = 0.0;
        let mut total_area = 0.0;
        for k in 0..mesh.elements().len() {
            let c = mesh.element_coords(k);
            let (cx, cy) = (
                (c[0][0] + c[1][0] + c[2][0]) / 3.0,
                (c[0][1] + c[1][1] + c[2][1]) / 3.0,
            );
            let area = mesh.element_area(k);
            let gh = sol.element_gradient(k);
            let ge = exact_grad(cx, cy);
            acc += area * ((gh[0] - ge[0]).powi(2) + (gh[1] - ge[1]).powi(2));
            total_area += area;
        }
        (acc / total_area).sqrt()
    }

    fn max_nodal_error(sol: &FemSolution, exact: impl Fn(f64, f64) -> f64) -> f64 {
        sol.mesh()
            .nodes()
            .iter()
            .zip(sol.nodal_values())
            .fold(0.0f64, |m, (p, v)| m.max((v - exact(p[0], p[1])).abs()))
    }

    #[test]
    fn unit_right_triangle_stiffness_closed_form() {
        let k = element_stiffness(&UNIT_RIGHT).unwrap();
        let want = [
            [1.0, -0.5, -0.5],
            [-0.5, 0.5, 0.0],
            [-0.5, 0.0, 0.5],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert!((k[i][j] - want[i][j]).abs() < 1e-14, "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn stiffness_rows_sum_to_zero_and_scale_invariance_holds() {
        // Row sums vanish because constants lie in the P1 kernel, and
        // scaling a triangle leaves the stiffness unchanged in 2D.
        let tri = [[0.2, -0.1], [1.3, 0.4], [0.5, 1.7]];
        let k = element_stiffness(&tri).unwrap();
        for row in &k {
            assert!(row.iter().sum::<f64>().abs() < 1e-13);
        }
        let scaled: [[f64; 2]; 3] = tri.map(|p| [3.0 * p[0], 3.0 * p[1]]);
        let ks = element_stiffness(&scaled).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((k[i][j] - ks[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn stiffness_rejects_collinear_vertices() {
        let flat = [[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]];
        assert!(matches!(
            element_stiffness(&flat),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn load_vector_centroid_rule() {
        assert_eq!(element_load(&UNIT_RIGHT, zero).unwrap(), [0.0; 3]);
        let ones = element_load(&UNIT_RIGHT, |_, _| 1.0).unwrap();
        for v in ones {
            assert!((v - 1.0 / 6.0).abs() < 1e-15);
        }
        // f = x at the centroid (1/3, 1/3) gives 1/3 * (1/2) / 3.
        let fx = element_load(&UNIT_RIGHT, |x, _| x).unwrap();
        for v in fx {
            assert!((v - 1.0 / 18.0).abs() < 1e-15);
        }
    }

    #[test]
    fn assembly_matches_dense_scatter_oracle() {
        let mesh = triangulate_unit_square(2).unwrap();
        let (a, b) = assemble_fem_poisson(&mesh, |x, y| x + y).unwrap();
        let mut dense = DenseMatrix::zeros(9, 9);
        let mut rhs = vec![0.0; 9];
        for (k, ids) in mesh.elements().iter().enumerate() {
            let coords = mesh.element_coords(k);
            let ke = element_stiffness(&coords).unwrap();
            let fe = element_load(&coords, |x, y| x + y).unwrap();
            for i in 0..3 {
                rhs[ids[i]] += fe[i];
                for j in 0..3 {
                    dense.set(ids[i], ids[j], dense.get(ids[i], ids[j]) + ke[i][j]);
                }
            }
        }
        for r in 0..9 {
            assert!((b[r] - rhs[r]).abs() < 1e-15);
            for c in 0..9 {
                assert!((a.get(r, c) - dense.get(r, c)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn assembled_matrix_is_symmetric_with_constant_kernel() {
        let mesh = triangulate_unit_square(3).unwrap();
        let (a, _) = assemble_fem_poisson(&mesh, zero).unwrap();
        assert!(a.asymmetry() < 1e-14);
        let ones = vec![1.0; mesh.num_nodes()];
        for v in a.matvec(&ones).unwrap() {
            assert!(v.abs() < 1e-13);
        }
    }

    #[test]
    fn dirichlet_on_every_node_yields_identity() {
        // The n=1 mesh has no interior nodes at all.
        let mesh = triangulate_unit_square(1).unwrap();
        let (a, b) = assemble_fem_poisson(&mesh, |_, _| 1.0).unwrap();
        let constraints: Vec<(usize, f64)> =
            mesh.boundary().iter().map(|&id| (id, id as f64)).collect();
        let (a, b) = apply_dirichlet(&a, &b, &constraints).unwrap();
        assert_eq!(a.nnz(), 4);
        for r in 0..4 {
            assert_eq!(a.get(r, r), 1.0);
            assert_eq!(b[r], r as f64);
        }
    }

    #[test]
    fn dirichlet_moves_columns_into_rhs_symmetrically() {
        let mesh = triangulate_unit_square(2).unwrap();
        let (a, b) = assemble_fem_poisson(&mesh, |_, _| 1.0).unwrap();
        let constraints: Vec<(usize, f64)> = mesh
            .boundary()
            .iter()
            .map(|&id| {
                let [x, y] = mesh.nodes()[id];
                (id, x - y)
            })
            .collect();
        let (ar, br) = apply_dirichlet(&a, &b, &constraints).unwrap();
        assert!(ar.asymmetry() < 1e-14);
        // Center node 4 couples to boundary neighbors in the original
        // matrix; its corrected rhs must absorb those terms.
        let mut want = b[4];
        for &(id, g) in &constraints {
            want -= a.get(4, id) * g;
        }
        assert!((br[4] - want).abs() < 1e-14);
        // No off-diagonal entries remain in constrained columns.
        for r in 0..9 {
            for &(id, _) in &constraints {
                if r != id {
                    assert_eq!(ar.get(r, id), 0.0);
                }
            }
        }
    }

    #[test]
    fn reduced_system_is_cg_solvable() {
        let (_, report) = solve_fem_poisson(4, sine_forcing, zero, SolverKind::Cg).unwrap();
        assert!(report.converged);
        assert!(report.relative_residual <= 1e-10);
    }

    #[test]
    fn linear_solutions_are_reproduced_exactly() {
        let (sol, _) = solve_fem_poisson(4, zero, |x, y| x + y, SolverKind::Lu).unwrap();
        assert!(max_nodal_error(&sol, |x, y| x + y) < 1e-12);
    }

    #[test]
    fn patch_test_recovers_affine_field_on_all_meshes() {
        let g = |x: f64, y: f64| 1.0 + 2.0 * x - y;
        for n in [1usize, 2, 4, 8] {
            let (sol, _) = solve_fem_poisson(n, zero, g, SolverKind::Cg).unwrap();
            let err = max_nodal_error(&sol, g);
            assert!(err <= 1e-10, "n={n} affine error {err}");
        }
    }

    #[test]
    fn sine_case_error_levels_and_refinement_ratios() {
        let (s8, _) = solve_fem_poisson(8, sine_forcing, zero, SolverKind::Cg).unwrap();
        let (s16, _) = solve_fem_poisson(16, sine_forcing, zero, SolverKind::Cg).unwrap();
        let exact_grad = |x: f64, y: f64| {
            [
                PI * (PI * x).cos() * (PI * y).sin(),
                PI * (PI * x).sin() * (PI * y).cos(),
            ]
        };
        let l2_16 = centroid_l2_error(&s16, sine_exact);
        assert!(l2_16 < 1e-2, "L2 error at n=16 was {l2_16}");
        let l2_ratio = centroid_l2_error(&s8, sine_exact) / l2_16;
        assert!(
            (3.4..=4.6).contains(&l2_ratio),
            "L2 halving ratio {l2_ratio}"
        );
        let h1_ratio = h1_seminorm_error(&s8, exact_grad) / h1_seminorm_error(&s16, exact_grad);
        assert!(
            (1.7..=2.3).contains(&h1_ratio),
            "H1 halving ratio {h1_ratio}"
        );
    }
}
