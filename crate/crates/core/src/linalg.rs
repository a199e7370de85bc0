//! Dense real matrices and the few factorizations the learner needs.
//!
//! Storage is column-major throughout the crate: entry `(i, j)` lives at
//! `data[j * rows + i]`, so a dictionary atom is a contiguous slice.
//! Matrices must have at least one row; zero columns are allowed so that
//! empty sample sets stay representable.

use crate::error::{AdlError, Result};

/// Default absolute tolerance of the symmetric eigensolver.
pub const EIG_TOL: f64 = 1e-10;
/// Maximum number of cyclic Jacobi sweeps before reporting non-convergence.
pub const MAX_JACOBI_SWEEPS: usize = 100;

const SYMMETRY_TOL: f64 = 1e-10;
const RANK_TOL: f64 = 1e-10;

/// Column-major dense matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    /// All-zero `rows x cols` matrix.
    ///
    /// Panics if `rows == 0`.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1, "matrix needs at least one row");
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from column-major data, validating length and finiteness.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 {
            return Err(AdlError::Shape("matrix needs at least one row".into()));
        }
        if data.len() != rows * cols {
            return Err(AdlError::Shape(format!(
                "{} entries do not fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(AdlError::NonFinite(format!(
                "entry ({}, {}) is {}",
                pos % rows,
                pos / rows,
                data[pos]
            )));
        }
        Ok(Mat { rows, cols, data })
    }

    /// Builds a matrix from row slices (convenient for literals).
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(AdlError::Shape("ragged rows".into()));
        }
        let mut data = vec![0.0; n_rows * n_cols];
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                data[j * n_rows + i] = v;
            }
        }
        Mat::from_col_major(n_rows, n_cols, data)
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * columns.len());
        for (j, c) in columns.iter().enumerate() {
            if c.len() != rows {
                return Err(AdlError::Shape(format!(
                    "column {j} has length {}, expected {rows}",
                    c.len()
                )));
            }
            data.extend_from_slice(c);
        }
        Mat::from_col_major(rows, columns.len(), data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.rows + i] = v;
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub(crate) fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.cols).map(move |j| self.col(j))
    }

    /// Column-major backing storage.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Transposed copy. A matrix without columns has no row-count-zero
    /// transpose here, so it maps to the empty `1 x 0` matrix.
    pub fn transpose(&self) -> Mat {
        if self.cols == 0 {
            return Mat::zeros(1, 0);
        }
        let mut t = Mat::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                t.data[i * self.cols + j] = self.get(i, j);
            }
        }
        t
    }

    pub fn matmul(&self, other: &Mat) -> Result<Mat> {
        if self.cols != other.rows {
            return Err(AdlError::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Mat::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let dst = &mut out.data[j * self.rows..(j + 1) * self.rows];
            for (l, &b) in other.col(j).iter().enumerate() {
                if b != 0.0 {
                    axpy(b, self.col(l), dst);
                }
            }
        }
        Ok(out)
    }

    /// `self * x`
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(AdlError::Shape(format!(
                "vector of length {} against {} columns",
                x.len(),
                self.cols
            )));
        }
        let mut out = vec![0.0; self.rows];
        for (j, &v) in x.iter().enumerate() {
            if v != 0.0 {
                axpy(v, self.col(j), &mut out);
            }
        }
        Ok(out)
    }

    /// `self^T * y`
    pub fn tr_matvec(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.rows {
            return Err(AdlError::Shape(format!(
                "vector of length {} against {} rows",
                y.len(),
                self.rows
            )));
        }
        Ok(self.columns().map(|c| dot(c, y)).collect())
    }

    pub fn scaled(&self, s: f64) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn sub(&self, other: &Mat) -> Result<Mat> {
        self.same_shape(other)?;
        Ok(Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn add(&self, other: &Mat) -> Result<Mat> {
        self.same_shape(other)?;
        Ok(Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|m_ij - m_ji|`; zero for non-square input is meaningless, so
    /// callers check squareness first.
    pub fn max_asymmetry(&self) -> f64 {
        let n = self.rows;
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in (j + 1)..n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// `(M + M^T) / 2` for square `M`.
    pub fn symmetrized(&self) -> Result<Mat> {
        if !self.is_square() {
            return Err(AdlError::Shape(format!(
                "cannot symmetrize a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let mut out = self.clone();
        for j in 0..n {
            for i in (j + 1)..n {
                let v = 0.5 * (self.get(i, j) + self.get(j, i));
                out.set(i, j, v);
                out.set(j, i, v);
            }
        }
        Ok(out)
    }

    fn same_shape(&self, other: &Mat) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(AdlError::Shape(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `dst += alpha * src`
#[inline]
pub fn axpy(alpha: f64, src: &[f64], dst: &mut [f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += alpha * s;
    }
}

/// Squared Frobenius norm, `trace(M M^T)`.
pub fn frob_sq(m: &Mat) -> f64 {
    dot(m.as_slice(), m.as_slice())
}

/// `trace(A B^T)` for equally shaped `A` and `B`, i.e. the entrywise inner
/// product. The product itself is never formed.
pub fn trace_prod(a: &Mat, b: &Mat) -> Result<f64> {
    a.same_shape(b)?;
    Ok(dot(a.as_slice(), b.as_slice()))
}

/// Minimum eigenvalue of a symmetric matrix with its eigenvector.
#[derive(Debug, Clone, PartialEq)]
pub struct SymEig {
    pub min_eigenvalue: f64,
    pub eigenvector: Vec<f64>,
    pub iterations_used: usize,
}

/// Full eigendecomposition of a symmetric matrix: `values[i]` belongs to
/// column `i` of `vectors`. Values are not sorted.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Mat,
    pub sweeps: usize,
}

/// Cyclic Jacobi eigensolver on the symmetrized input.
///
/// Stops once the off-diagonal Frobenius norm drops below `tol` (floored at a
/// few ulps of `||M||_F`), which bounds every eigenvalue error by `tol`.
pub fn sym_eigen(m: &Mat, tol: f64) -> Result<SymEigen> {
    if !m.is_square() {
        return Err(AdlError::Shape(format!(
            "eigensolver needs a square matrix, got {}x{}",
            m.rows, m.cols
        )));
    }
    let n = m.rows;
    let scale = m.max_abs().max(1.0);
    if m.max_asymmetry() > SYMMETRY_TOL * scale {
        return Err(AdlError::InvalidInput(format!(
            "matrix is not symmetric (asymmetry {:e})",
            m.max_asymmetry()
        )));
    }
    let mut a = m.symmetrized()?;
    let mut v = Mat::identity(n);
    let threshold = tol.max(4.0 * f64::EPSILON * frob_sq(&a).sqrt());

    let off_norm = |a: &Mat| -> f64 {
        let mut s = 0.0;
        for j in 0..n {
            for i in 0..n {
                if i != j {
                    s += a.get(i, j) * a.get(i, j);
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    loop {
        let off = off_norm(&a);
        if off <= threshold {
            break;
        }
        if sweeps == MAX_JACOBI_SWEEPS {
            return Err(AdlError::NoConvergence {
                sweeps,
                off_norm: off,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let tau = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                rotate_columns(&mut a, p, q, c, s);
                rotate_rows(&mut a, p, q, c, s);
                a.set(p, q, 0.0);
                a.set(q, p, 0.0);
                rotate_columns(&mut v, p, q, c, s);
            }
        }
    }
    Ok(SymEigen {
        values: (0..n).map(|i| a.get(i, i)).collect(),
        vectors: v,
        sweeps,
    })
}

fn rotate_columns(m: &mut Mat, p: usize, q: usize, c: f64, s: f64) {
    for k in 0..m.rows {
        let x = m.get(k, p);
        let y = m.get(k, q);
        m.set(k, p, c * x - s * y);
        m.set(k, q, s * x + c * y);
    }
}

fn rotate_rows(m: &mut Mat, p: usize, q: usize, c: f64, s: f64) {
    for k in 0..m.cols {
        let x = m.get(p, k);
        let y = m.get(q, k);
        m.set(p, k, c * x - s * y);
        m.set(q, k, s * x + c * y);
    }
}

/// Smallest eigenvalue of `(M + M^T) / 2`, accurate to `tol` absolute.
pub fn min_eig_sym(m: &Mat, tol: f64) -> Result<SymEig> {
    let eig = sym_eigen(m, tol)?;
    let (idx, &min) = eig
        .values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| AdlError::Shape("empty matrix".into()))?;
    Ok(SymEig {
        min_eigenvalue: min,
        eigenvector: eig.vectors.col(idx).to_vec(),
        iterations_used: eig.sweeps,
    })
}

/// Least-squares fit of `y` on a subset of columns of `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct LsSolution {
    /// Length `d.cols()`, zero outside the support.
    pub coefficients: Vec<f64>,
    pub residual: Vec<f64>,
    /// Set when the selected columns were numerically dependent and the
    /// minimum-norm solution was returned.
    pub rank_deficient: bool,
}

/// Solves `min ||y - D_S x||_2` over the columns listed in `support`.
///
/// Full-rank supports go through a twice-orthogonalized Gram-Schmidt QR;
/// dependent supports fall back to the minimum-norm solution through the
/// eigendecomposition of the support Gram matrix.
pub fn least_squares_on_support(d: &Mat, y: &[f64], support: &[usize]) -> Result<LsSolution> {
    let (m, k) = (d.rows, d.cols);
    if y.len() != m {
        return Err(AdlError::Shape(format!(
            "signal length {} does not match {m} rows",
            y.len()
        )));
    }
    if support.len() > m {
        return Err(AdlError::InvalidInput(format!(
            "support of size {} exceeds {m} rows",
            support.len()
        )));
    }
    let mut seen = vec![false; k];
    for &j in support {
        if j >= k {
            return Err(AdlError::InvalidInput(format!("atom index {j} out of range 0..{k}")));
        }
        if seen[j] {
            return Err(AdlError::InvalidInput(format!("atom index {j} repeated")));
        }
        seen[j] = true;
    }

    let s = support.len();
    let mut coefficients = vec![0.0; k];
    if s == 0 {
        return Ok(LsSolution {
            coefficients,
            residual: y.to_vec(),
            rank_deficient: false,
        });
    }

    let (x, rank_deficient) = match qr_solve(d, y, support) {
        Some(x) => (x, false),
        None => (min_norm_solve(d, y, support)?, true),
    };
    let mut residual = y.to_vec();
    for (&j, &xj) in support.iter().zip(&x) {
        coefficients[j] = xj;
        axpy(-xj, d.col(j), &mut residual);
    }
    Ok(LsSolution {
        coefficients,
        residual,
        rank_deficient,
    })
}

fn qr_solve(d: &Mat, y: &[f64], support: &[usize]) -> Option<Vec<f64>> {
    let s = support.len();
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(s);
    // r[i][j], upper triangular
    let mut r = vec![vec![0.0; s]; s];
    for (j, &atom) in support.iter().enumerate() {
        let col = d.col(atom);
        let col_norm = norm(col);
        let mut v = col.to_vec();
        for _ in 0..2 {
            for (i, qi) in q.iter().enumerate() {
                let c = dot(qi, &v);
                r[i][j] += c;
                axpy(-c, qi, &mut v);
            }
        }
        let rjj = norm(&v);
        if rjj <= RANK_TOL * col_norm || rjj == 0.0 {
            return None;
        }
        r[j][j] = rjj;
        v.iter_mut().for_each(|x| *x /= rjj);
        q.push(v);
    }
    let qty: Vec<f64> = q.iter().map(|qi| dot(qi, y)).collect();
    let mut x = vec![0.0; s];
    for i in (0..s).rev() {
        let mut acc = qty[i];
        for l in (i + 1)..s {
            acc -= r[i][l] * x[l];
        }
        x[i] = acc / r[i][i];
    }
    Some(x)
}

fn min_norm_solve(d: &Mat, y: &[f64], support: &[usize]) -> Result<Vec<f64>> {
    let s = support.len();
    let mut gram = Mat::zeros(s, s);
    for (a, &i) in support.iter().enumerate() {
        for (b, &j) in support.iter().enumerate() {
            gram.set(a, b, dot(d.col(i), d.col(j)));
        }
    }
    let rhs: Vec<f64> = support.iter().map(|&j| dot(d.col(j), y)).collect();
    let eig = sym_eigen(&gram, EIG_TOL)?;
    let lmax = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cutoff = 1e-12 * lmax.max(f64::MIN_POSITIVE) * s as f64;
    let mut x = vec![0.0; s];
    for (i, &lambda) in eig.values.iter().enumerate() {
        if lambda > cutoff {
            let vi = eig.vectors.col(i);
            let w = dot(vi, &rhs) / lambda;
            axpy(w, vi, &mut x);
        }
    }
    Ok(x)
}
