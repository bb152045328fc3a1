//! Dense, tridiagonal, and sparse kernels shared by every solver.
//!
//! All matrices store `f64` and validate that solver inputs are finite.
//! The direct solvers are small and unblocked; problem sizes in this
//! workbench stay in the thousands of unknowns.

use crate::error::{Error, Result};

/// Forward elimination in `thomas_solve` refuses pivots below this.
/// The assembled systems are diagonally dominant, so a tiny pivot means
/// the caller handed over something outside the method's domain.
pub const THOMAS_PIVOT_MIN: f64 = 1e-14;

/// Relative pivot floor for `lu_solve`; below it the matrix is treated
/// as singular to working precision.
pub const LU_PIVOT_REL_MIN: f64 = 1e-14;

/// Entry agreement required by the symmetry precheck in `cg_solve`.
pub const CG_SYMMETRY_TOL: f64 = 1e-12;

fn ensure_finite(name: &str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} contains a non-finite entry"
        )))
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        DenseMatrix {
            nrows,
            ncols,
            data: vec![0.0; nrows * ncols],
        }
    }

    /// Builds from nested rows; every row must have the same length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::Structural("ragged rows in dense matrix".into()));
        }
        Ok(DenseMatrix {
            nrows,
            ncols,
            data: rows.concat(),
        })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.ncols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.ncols + c] = v;
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ncols {
            return Err(Error::Structural(format!(
                "matvec: matrix is {}x{} but vector has length {}",
                self.nrows,
                self.ncols,
                x.len()
            )));
        }
        Ok(self
            .data
            .chunks_exact(self.ncols)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.ncols != other.nrows {
            return Err(Error::Structural(format!(
                "matmul: {}x{} times {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let mut out = DenseMatrix::zeros(self.nrows, other.ncols);
        for r in 0..self.nrows {
            for k in 0..self.ncols {
                let a_rk = self.get(r, k);
                if a_rk == 0.0 {
                    continue;
                }
                for c in 0..other.ncols {
                    let v = out.get(r, c) + a_rk * other.get(k, c);
                    out.set(r, c, v);
                }
            }
        }
        Ok(out)
    }
}

/// Tridiagonal matrix with `diag.len()` rows; `sub` and `sup` are one
/// entry shorter.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Tridiagonal {
            sub: vec![0.0; n.saturating_sub(1)],
            diag: vec![0.0; n],
            sup: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    fn check_shape(&self) -> Result<()> {
        let n = self.diag.len();
        if n == 0 {
            return Err(Error::Structural("tridiagonal system is empty".into()));
        }
        if self.sub.len() + 1 != n || self.sup.len() + 1 != n {
            return Err(Error::Structural(format!(
                "tridiagonal bands have lengths {}/{}/{}, expected {}/{}/{}",
                self.sub.len(),
                n,
                self.sup.len(),
                n - 1,
                n,
                n - 1
            )));
        }
        Ok(())
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_shape()?;
        let n = self.n();
        if x.len() != n {
            return Err(Error::Structural(format!(
                "matvec: system has {} rows but vector has length {}",
                n,
                x.len()
            )));
        }
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut v = self.diag[i] * x[i];
            if i > 0 {
                v += self.sub[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                v += self.sup[i] * x[i + 1];
            }
            y[i] = v;
        }
        Ok(y)
    }
}

/// Compressed sparse row matrix. Column indices are strictly increasing
/// within each row and every stored value is finite.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Stored value at `(r, c)`, or 0.0 for a structurally empty slot.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        match self.col_idx[lo..hi].binary_search(&c) {
            Ok(k) => self.values[lo + k],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                d.set(r, self.col_idx[k], self.values[k]);
            }
        }
        d
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ncols {
            return Err(Error::Structural(format!(
                "matvec: matrix is {}x{} but vector has length {}",
                self.nrows,
                self.ncols,
                x.len()
            )));
        }
        let mut y = vec![0.0; self.nrows];
        for r in 0..self.nrows {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[r] = acc;
        }
        Ok(y)
    }

    /// Largest `|a_ij - a_ji|` over the stored pattern.
    pub fn asymmetry(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[k];
                worst = worst.max((self.values[k] - self.get(c, r)).abs());
            }
        }
        worst
    }
}

/// Builds CSR from unordered `(row, col, value)` triplets.
///
/// Duplicates are summed. A slot whose contributions sum to exactly zero
/// is dropped unless only zero-valued triplets were ever added there, in
/// which case the explicit zero is kept.
pub fn csr_from_triplets(
    nrows: usize,
    ncols: usize,
    triplets: &[(usize, usize, f64)],
) -> Result<CsrMatrix> {
    for &(r, c, v) in triplets {
        if r >= nrows || c >= ncols {
            return Err(Error::Structural(format!(
                "triplet ({r}, {c}) outside {nrows}x{ncols} matrix"
            )));
        }
        if !v.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "triplet ({r}, {c}) has non-finite value"
            )));
        }
    }
    let mut sorted: Vec<&(usize, usize, f64)> = triplets.iter().collect();
    sorted.sort_by_key(|&&(r, c, _)| (r, c));

    let mut row_ptr = vec![0usize; nrows + 1];
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let &(r, c, _) = sorted[i];
        let mut sum = 0.0;
        let mut saw_nonzero = false;
        while i < sorted.len() && sorted[i].0 == r && sorted[i].1 == c {
            sum += sorted[i].2;
            saw_nonzero |= sorted[i].2 != 0.0;
            i += 1;
        }
        if sum != 0.0 || !saw_nonzero {
            col_idx.push(c);
            values.push(sum);
            row_ptr[r + 1] += 1;
        }
    }
    for r in 0..nrows {
        row_ptr[r + 1] += row_ptr[r];
    }
    Ok(CsrMatrix {
        nrows,
        ncols,
        row_ptr,
        col_idx,
        values,
    })
}

/// Solves a tridiagonal system by forward elimination and back
/// substitution, without pivoting.
pub fn thomas_solve(t: &Tridiagonal, b: &[f64]) -> Result<Vec<f64>> {
    t.check_shape()?;
    let n = t.n();
    if b.len() != n {
        return Err(Error::Structural(format!(
            "thomas_solve: system has {} rows but rhs has length {}",
            n,
            b.len()
        )));
    }
    ensure_finite("sub", &t.sub)?;
    ensure_finite("diag", &t.diag)?;
    ensure_finite("sup", &t.sup)?;
    ensure_finite("rhs", b)?;

    let mut c_prime = vec![0.0; n];
    let mut d_prime = vec![0.0; n];
    let mut pivot = t.diag[0];
    if pivot.abs() < THOMAS_PIVOT_MIN {
        return Err(Error::SingularSystem("zero pivot at row 0".into()));
    }
    c_prime[0] = if n > 1 { t.sup[0] / pivot } else { 0.0 };
    d_prime[0] = b[0] / pivot;
    for i in 1..n {
        pivot = t.diag[i] - t.sub[i - 1] * c_prime[i - 1];
        if pivot.abs() < THOMAS_PIVOT_MIN {
            return Err(Error::SingularSystem(format!("zero pivot at row {i}")));
        }
        if i + 1 < n {
            c_prime[i] = t.sup[i] / pivot;
        }
        d_prime[i] = (b[i] - t.sub[i - 1] * d_prime[i - 1]) / pivot;
    }
    let mut x = d_prime;
    for i in (0..n - 1).rev() {
        x[i] -= c_prime[i] * x[i + 1];
    }
    Ok(x)
}

/// Which direct or iterative path produced a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Cg,
    Lu,
}

impl SolverKind {
    pub fn name(&self) -> &'static str {
        match self {
            SolverKind::Cg => "cg",
            SolverKind::Lu => "lu",
        }
    }
}

/// How a linear solve went, attached to every solver-facing result.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solver: SolverKind,
    /// Zero for direct solves.
    pub iterations: usize,
    pub relative_residual: f64,
    pub wall_time: f64,
    pub converged: bool,
}

/// Conjugate gradient controls. `max_iter = None` means ten times the
/// system size.
#[derive(Debug, Clone)]
pub struct CgConfig {
    pub tol: f64,
    pub max_iter: Option<usize>,
}

impl Default for CgConfig {
    fn default() -> Self {
        CgConfig {
            tol: 1e-10,
            max_iter: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `||b - Ax|| / ||b||`, or the absolute norm when `b = 0`.
    pub relative_residual: f64,
    pub converged: bool,
}

/// Conjugate gradient for symmetric positive definite systems.
///
/// Symmetry is checked up front; indefiniteness surfaces as a curvature
/// breakdown during iteration. On hitting the iteration cap the best
/// iterate seen is returned with `converged = false`.
pub fn cg_solve(a: &CsrMatrix, b: &[f64], cfg: &CgConfig) -> Result<CgOutcome> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Structural(format!(
            "cg_solve: matrix is {}x{}, not square",
            a.nrows(),
            a.ncols()
        )));
    }
    if b.len() != n {
        return Err(Error::Structural(format!(
            "cg_solve: system has {n} rows but rhs has length {}",
            b.len()
        )));
    }
    ensure_finite("rhs", b)?;
    let asym = a.asymmetry();
    if asym > CG_SYMMETRY_TOL {
        return Err(Error::Contract(format!(
            "cg_solve requires a symmetric matrix; worst entry mismatch {asym:.3e}"
        )));
    }

    let b_norm = norm2(b);
    if b_norm == 0.0 {
        return Ok(CgOutcome {
            x: vec![0.0; n],
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        });
    }
    let max_iter = cfg.max_iter.unwrap_or(10 * n);
    let scale = |r: f64| r / b_norm;

    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rs = dot(&r, &r);
    let mut best_x = x.clone();
    let mut best_res = rs.sqrt();
    let mut iterations = 0;

    while iterations < max_iter {
        if scale(rs.sqrt()) <= cfg.tol {
            break;
        }
        let ap = a.matvec(&p)?;
        let p_ap = dot(&p, &ap);
        if p_ap <= 0.0 || !p_ap.is_finite() {
            return Err(Error::Numerical(format!(
                "cg_solve curvature breakdown at iteration {iterations} (p'Ap = {p_ap:.3e})"
            )));
        }
        let alpha = rs / p_ap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rs_next = dot(&r, &r);
        iterations += 1;
        if rs_next.sqrt() < best_res {
            best_res = rs_next.sqrt();
            best_x.copy_from_slice(&x);
        }
        let beta = rs_next / rs;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rs = rs_next;
    }

    let converged = scale(rs.sqrt()) <= cfg.tol;
    if converged {
        Ok(CgOutcome {
            relative_residual: scale(rs.sqrt()),
            x,
            iterations,
            converged: true,
        })
    } else {
        Ok(CgOutcome {
            relative_residual: scale(best_res),
            x: best_x,
            iterations,
            converged: false,
        })
    }
}

/// Solves a dense square system by LU factorization with partial
/// pivoting.
pub fn lu_solve(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Structural(format!(
            "lu_solve: matrix is {}x{}, not square",
            a.nrows(),
            a.ncols()
        )));
    }
    if b.len() != n {
        return Err(Error::Structural(format!(
            "lu_solve: system has {n} rows but rhs has length {}",
            b.len()
        )));
    }
    ensure_finite("matrix", &a.data)?;
    ensure_finite("rhs", b)?;
    if n == 0 {
        return Ok(Vec::new());
    }

    let scale = a.data.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();

    for k in 0..n {
        let mut pivot_row = k;
        let mut pivot_val = lu.get(k, k).abs();
        for r in k + 1..n {
            let v = lu.get(r, k).abs();
            if v > pivot_val {
                pivot_val = v;
                pivot_row = r;
            }
        }
        if pivot_val < LU_PIVOT_REL_MIN * scale {
            return Err(Error::SingularSystem(format!(
                "pivot {pivot_val:.3e} below threshold at column {k}"
            )));
        }
        if pivot_row != k {
            for c in 0..n {
                let tmp = lu.get(k, c);
                lu.set(k, c, lu.get(pivot_row, c));
                lu.set(pivot_row, c, tmp);
            }
            perm.swap(k, pivot_row);
        }
        let inv_pivot = 1.0 / lu.get(k, k);
        for r in k + 1..n {
            let factor = lu.get(r, k) * inv_pivot;
            lu.set(r, k, factor);
            for c in k + 1..n {
                let v = lu.get(r, c) - factor * lu.get(k, c);
                lu.set(r, c, v);
            }
        }
    }

    let mut y = vec![0.0; n];
    for r in 0..n {
        let mut acc = b[perm[r]];
        for c in 0..r {
            acc -= lu.get(r, c) * y[c];
        }
        y[r] = acc;
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut acc = y[r];
        for c in r + 1..n {
            acc -= lu.get(r, c) * x[c];
        }
        x[r] = acc / lu.get(r, r);
    }
    Ok(x)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}
