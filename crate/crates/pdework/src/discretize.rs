//! Grids, meshes, and spectral differentiation operators.
//!
//! Everything here is geometry and combinatorics; no PDE knowledge.
//! The solvers consume these types and trust their invariants: index
//! maps are bijections, triangles are positively oriented, Chebyshev
//! nodes run from +1 down to -1.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use std::f64::consts::PI;

/// Uniform tensor grid on the unit square with `n` interior nodes per
/// direction and spacing `h = 1/(n+1)`. Node indices run 0..=n+1 per
/// direction, with 0 and n+1 on the boundary.
#[derive(Debug, Clone)]
pub struct Grid2D {
    n: usize,
    h: f64,
}

impl Grid2D {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Nodes per direction, boundary included.
    pub fn nodes_per_side(&self) -> usize {
        self.n + 2
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.h
    }

    /// Maps interior node `(i, j)` with `1 <= i, j <= n` to its unknown
    /// index, numbering row by row in `j`.
    pub fn interior_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i >= 1 && i <= self.n && j >= 1 && j <= self.n);
        (j - 1) * self.n + (i - 1)
    }

    /// Inverse of `interior_index`.
    pub fn interior_coords(&self, idx: usize) -> (usize, usize) {
        debug_assert!(idx < self.n * self.n);
        (idx % self.n + 1, idx / self.n + 1)
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.n + 1 || j == self.n + 1
    }
}

/// Builds the uniform unit-square grid with `n >= 1` interior nodes per
/// direction.
pub fn uniform_grid_2d(n: usize) -> Result<Grid2D> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "grid needs at least one interior node per direction".into(),
        ));
    }
    Ok(Grid2D {
        n,
        h: 1.0 / (n as f64 + 1.0),
    })
}

/// Conforming triangulation of the unit square. Node `j*(n+1)+i` sits
/// at `(i/n, j/n)`; each grid cell is split along its lower-left to
/// upper-right diagonal into two counterclockwise triangles.
#[derive(Debug, Clone)]
pub struct TriMesh {
    nodes: Vec<[f64; 2]>,
    elements: Vec<[usize; 3]>,
    boundary: Vec<usize>,
}

impl TriMesh {
    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn elements(&self) -> &[[usize; 3]] {
        &self.elements
    }

    /// Boundary node indices in increasing order.
    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_boundary_node(&self, id: usize) -> bool {
        self.boundary.binary_search(&id).is_ok()
    }

    pub fn element_coords(&self, k: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.elements[k];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    /// Signed area of element `k`; positive for counterclockwise
    /// orientation.
    pub fn element_area(&self, k: usize) -> f64 {
        signed_area(&self.element_coords(k))
    }
}

pub fn signed_area(v: &[[f64; 2]; 3]) -> f64 {
    0.5 * ((v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]))
}

/// Triangulates the unit square into `2*n^2` elements over an
/// `(n+1) x (n+1)` node lattice.
pub fn triangulate_unit_square(n: usize) -> Result<TriMesh> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "triangulation needs at least one cell per direction".into(),
        ));
    }
    let side = n + 1;
    let coord = |k: usize| k as f64 / n as f64;
    let id = |i: usize, j: usize| j * side + i;

    let mut nodes = Vec::with_capacity(side * side);
    for j in 0..side {
        for i in 0..side {
            nodes.push([coord(i), coord(j)]);
        }
    }
    let mut elements = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let a = id(i, j);
            let b = id(i + 1, j);
            let c = id(i + 1, j + 1);
            let d = id(i, j + 1);
            elements.push([a, b, c]);
            elements.push([a, c, d]);
        }
    }
    let mut boundary = Vec::new();
    for j in 0..side {
        for i in 0..side {
            if i == 0 || j == 0 || i == n || j == n {
                boundary.push(id(i, j));
            }
        }
    }
    boundary.sort_unstable();

    let mesh = TriMesh {
        nodes,
        elements,
        boundary,
    };
    for k in 0..mesh.elements.len() {
        if mesh.element_area(k) <= 0.0 {
            return Err(Error::Geometry(format!(
                "element {k} is degenerate or inverted"
            )));
        }
    }
    Ok(mesh)
}

/// Chebyshev-Gauss-Lobatto point set `x_j = cos(pi j / N)`, ordered
/// from +1 down to -1.
#[derive(Debug, Clone)]
pub struct ChebGrid {
    n: usize,
    nodes: Vec<f64>,
}

impl ChebGrid {
    /// Polynomial degree; the grid has `n + 1` nodes.
    pub fn degree(&self) -> usize {
        self.n
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
}

/// Builds the degree-`n` Chebyshev-Gauss-Lobatto grid. Nodes are
/// antisymmetrized so the endpoints are exactly +-1 and the set is
/// exactly mirror symmetric.
pub fn cgl_nodes(n: usize) -> Result<ChebGrid> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "Chebyshev grid needs degree at least 1".into(),
        ));
    }
    let raw: Vec<f64> = (0..=n).map(|j| (PI * j as f64 / n as f64).cos()).collect();
    let nodes: Vec<f64> = (0..=n).map(|j| 0.5 * (raw[j] - raw[n - j])).collect();
    Ok(ChebGrid { n, nodes })
}

/// First-derivative collocation matrix on the degree-`n` CGL grid.
///
/// Off-diagonal entries follow the classical closed form with endpoint
/// weights `c_0 = c_N = 2`; each diagonal entry is the negated sum of
/// its row, which makes the matrix annihilate constants exactly.
pub fn cheb_diff(n: usize) -> Result<DenseMatrix> {
    let grid = cgl_nodes(n)?;
    let x = grid.nodes();
    let m = n + 1;
    let c = |j: usize| if j == 0 || j == n { 2.0 } else { 1.0 };
    let mut d = DenseMatrix::zeros(m, m);
    for i in 0..m {
        let mut row_sum = 0.0;
        for j in 0..m {
            if i == j {
                continue;
            }
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            let v = (c(i) / c(j)) * sign / (x[i] - x[j]);
            d.set(i, j, v);
            row_sum += v;
        }
        d.set(i, i, -row_sum);
    }
    Ok(d)
}

/// Second-derivative collocation matrix, formed as the square of the
/// first-derivative matrix.
pub fn cheb_diff2(n: usize) -> Result<DenseMatrix> {
    let d = cheb_diff(n)?;
    d.matmul(&d)
}
