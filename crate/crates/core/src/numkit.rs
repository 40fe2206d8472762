//! Small dense linear algebra: Cholesky factorization, SPD solves and
//! inverses, and an incremental ridge-regression state that keeps
//! `V = λI + Σ x xᵀ`, its inverse, `b = Σ y x` and `θ̂ = V⁻¹ b` current.
//!
//! Everything is row-major `f64` and sized for the small dimensions used by
//! linear bandits (d ≤ 64).

use crate::error::{Error, Result};

/// Cholesky pivots at or below this value are rejected.
pub const PIVOT_TOL: f64 = 1e-12;

/// The maintained inverse is rebuilt from `V` every this many updates.
pub const REFRESH_EVERY: u64 = 500;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diag(&vec![1.0; n])
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m.data[i * n + i] = *v;
        }
        m
    }

    pub fn scaled_identity(n: usize, s: f64) -> Self {
        Self::diag(&vec![s; n])
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArg(
                "matrix dimensions must be positive".into(),
            ));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArg("matrix entries must be finite".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidArg("ragged rows".into()));
        }
        Self::from_row_major(r, c, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    pub fn mat_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `xᵀ A x` without forming intermediates.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        (0..self.rows).map(|i| x[i] * dot(self.row(i), x)).sum()
    }

    /// Largest absolute entry-wise difference.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Adds `s · x xᵀ` in place.
    pub fn add_outer(&mut self, x: &[f64], s: f64) {
        let n = self.cols;
        for i in 0..self.rows {
            let xi = s * x[i];
            if xi == 0.0 {
                continue;
            }
            for j in 0..n {
                self.data[i * n + j] += xi * x[j];
            }
        }
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// Lower-triangular `L` with `A = L Lᵀ`. Only the lower triangle of `a` is read.
pub fn cholesky(a: &Matrix) -> Result<Matrix> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.rows,
            found: a.cols,
        });
    }
    let n = a.rows;
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut diag = a.get(j, j);
        for k in 0..j {
            diag -= l.get(j, k) * l.get(j, k);
        }
        if !(diag > PIVOT_TOL) {
            return Err(Error::NotPositiveDefinite {
                index: j,
                value: diag,
            });
        }
        let ljj = diag.sqrt();
        l.set(j, j, ljj);
        for i in (j + 1)..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, s / ljj);
        }
    }
    Ok(l)
}

/// Solves `L Lᵀ x = b` given the Cholesky factor.
pub fn cholesky_solve(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows;
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l.get(i, k) * y[k];
        }
        y[i] = s / l.get(i, i);
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l.get(k, i) * x[k];
        }
        x[i] = s / l.get(i, i);
    }
    x
}

pub fn solve_spd(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let l = cholesky(a)?;
    Ok(cholesky_solve(&l, b))
}

/// Inverse of a symmetric positive-definite matrix via its Cholesky factor.
pub fn spd_inverse(a: &Matrix) -> Result<Matrix> {
    let l = cholesky(a)?;
    let n = a.rows;
    let mut inv = Matrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[j] = 1.0;
        let col = cholesky_solve(&l, &e);
        for i in 0..n {
            inv.set(i, j, col[i]);
        }
    }
    symmetrize(&mut inv);
    Ok(inv)
}

fn symmetrize(m: &mut Matrix) {
    let n = m.rows;
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m.get(i, j) + m.get(j, i));
            m.set(i, j, avg);
            m.set(j, i, avg);
        }
    }
}

/// `‖x‖_A = √(xᵀ A x)`.
pub fn mahalanobis(x: &[f64], a: &Matrix) -> Result<f64> {
    if x.len() != a.cols || !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.cols,
            found: x.len(),
        });
    }
    let q = a.quad_form(x);
    if q < -PIVOT_TOL {
        return Err(Error::NegativeQuadraticForm(q));
    }
    Ok(q.max(0.0).sqrt())
}

/// Ridge-regression sufficient statistics with a maintained inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeState {
    dim: usize,
    lambda: f64,
    v: Matrix,
    v_inv: Matrix,
    b: Vec<f64>,
    theta_hat: Vec<f64>,
    update_count: u64,
}

impl RidgeState {
    pub fn new(dim: usize, lambda: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArg("ridge dimension must be >= 1".into()));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidArg(format!(
                "ridge lambda must be positive, got {lambda}"
            )));
        }
        Ok(Self {
            dim,
            lambda,
            v: Matrix::scaled_identity(dim, lambda),
            v_inv: Matrix::scaled_identity(dim, 1.0 / lambda),
            b: vec![0.0; dim],
            theta_hat: vec![0.0; dim],
            update_count: 0,
        })
    }

    /// Rebuilds a state for a new regularizer from accumulated statistics
    /// `gram = Σ x xᵀ` and `b = Σ y x`.
    pub fn from_statistics(
        lambda: f64,
        gram: &Matrix,
        b: &[f64],
        update_count: u64,
    ) -> Result<Self> {
        let mut state = Self::new(gram.rows(), lambda)?;
        if b.len() != state.dim {
            return Err(Error::DimensionMismatch {
                expected: state.dim,
                found: b.len(),
            });
        }
        for (dst, src) in state.v.data.iter_mut().zip(gram.as_slice()) {
            *dst += src;
        }
        state.b.copy_from_slice(b);
        state.update_count = update_count;
        state.refresh()?;
        Ok(state)
    }

    /// Adds one observation. `V` gets the exact rank-one sum; `V⁻¹` a
    /// Sherman–Morrison update, rebuilt from `V` every [`REFRESH_EVERY`] updates.
    pub fn update(&mut self, x: &[f64], y: f64) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        self.v.add_outer(x, 1.0);
        let u = self.v_inv.mat_vec(x);
        let denom = 1.0 + dot(x, &u);
        self.v_inv.add_outer(&u, -1.0 / denom);
        for (bi, xi) in self.b.iter_mut().zip(x) {
            *bi += y * xi;
        }
        self.update_count += 1;
        if self.update_count.is_multiple_of(REFRESH_EVERY) {
            self.refresh()?;
        } else {
            self.theta_hat = self.v_inv.mat_vec(&self.b);
        }
        Ok(())
    }

    fn refresh(&mut self) -> Result<()> {
        self.v_inv = spd_inverse(&self.v)?;
        self.theta_hat = self.v_inv.mat_vec(&self.b);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn v(&self) -> &Matrix {
        &self.v
    }

    pub fn v_inv(&self) -> &Matrix {
        &self.v_inv
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn theta_hat(&self) -> &[f64] {
        &self.theta_hat
    }

    pub fn update_count(&self) -> u64 {
        self.update_count
    }

    /// `‖x‖_{V⁻¹}`, the confidence width of a feature vector.
    pub fn width(&self, x: &[f64]) -> Result<f64> {
        mahalanobis(x, &self.v_inv)
    }
}
