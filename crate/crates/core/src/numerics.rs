//! Small dense linear algebra kernel and the seeded random stream.
//!
//! Everything here works on row-major `f64` storage. Problem sizes are desk
//! scale (a few hundred rows, at most ~100 columns), so factorizations are
//! recomputed from scratch rather than updated.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use thiserror::Error;

/// Absolute pivot threshold used by [`solve_spd`] and [`least_squares`].
pub const PIVOT_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not positive definite (pivot {pivot:e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("design is rank deficient (column {column} is dependent on earlier columns)")]
    RankDeficient { column: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite entry at position {0}")]
    NonFinite(usize),
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite(pos));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(LinalgError::DimensionMismatch("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m.data[i * n + i] = *v;
        }
        m
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
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `A x`
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `Aᵀ v`
    pub fn tr_matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows, "tr_matvec dimension mismatch");
        let mut out = vec![0.0; self.cols];
        for (i, vi) in v.iter().enumerate() {
            if *vi == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * vi;
            }
        }
        out
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

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
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
        out
    }

    /// Gram matrix `X_{R,C}ᵀ X_{R,C}` over a subset of rows and columns.
    pub fn gram_subset(&self, rows: &[usize], cols: &[usize]) -> Matrix {
        let k = cols.len();
        let mut g = Matrix::zeros(k, k);
        for &i in rows {
            let r = self.row(i);
            for a in 0..k {
                let ra = r[cols[a]];
                if ra == 0.0 {
                    continue;
                }
                for b in a..k {
                    g.data[a * k + b] += ra * r[cols[b]];
                }
            }
        }
        for a in 0..k {
            for b in 0..a {
                g.data[a * k + b] = g.data[b * k + a];
            }
        }
        g
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.rows == self.cols
            && (0..self.rows)
                .all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }

    /// Estimate of the largest singular value by power iteration on `AᵀA`.
    pub fn operator_norm_estimate(&self, iters: usize) -> f64 {
        if self.rows == 0 || self.cols == 0 {
            return 0.0;
        }
        // deterministic, non-degenerate start vector
        let mut v: Vec<f64> = (0..self.cols).map(|j| 1.0 + 0.1 * j as f64).collect();
        let mut sigma2 = 0.0;
        for _ in 0..iters {
            let nv = norm2(&v);
            if nv == 0.0 {
                return 0.0;
            }
            v.iter_mut().for_each(|x| *x /= nv);
            let w = self.tr_matvec(&self.matvec(&v));
            sigma2 = dot(&v, &w);
            v = w;
        }
        sigma2.max(0.0).sqrt()
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

#[inline]
pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

#[inline]
pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `max_i |a_i - b_i|`
pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Lower-triangular Cholesky factor `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    pub fn factor(a: &Matrix) -> Result<Self, LinalgError> {
        Self::factor_with_tol(a, PIVOT_TOL)
    }

    /// Factor with an explicit pivot threshold; a pivot `<= tol` is rejected.
    pub fn factor_with_tol(a: &Matrix, tol: f64) -> Result<Self, LinalgError> {
        if a.rows != a.cols {
            return Err(LinalgError::DimensionMismatch(format!(
                "cholesky of a {}x{} matrix",
                a.rows, a.cols
            )));
        }
        let n = a.rows;
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = a.get(j, j);
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if d <= tol || !d.is_finite() {
                return Err(LinalgError::NotPositiveDefinite { index: j, pivot: d });
            }
            let djj = d.sqrt();
            l[j * n + j] = djj;
            for i in j + 1..n {
                let mut s = a.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / djj;
            }
        }
        Ok(Self { n, l })
    }

    #[allow(clippy::needless_range_loop)]
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut z = b.to_vec();
        for i in 0..n {
            let mut s = z[i];
            for k in 0..i {
                s -= self.l[i * n + k] * z[k];
            }
            z[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * z[k];
            }
            z[i] = s / self.l[i * n + i];
        }
        z
    }
}

/// Solve `A x = b` for symmetric positive definite `A` via Cholesky.
pub fn solve_spd(a: &Matrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    if a.rows != a.cols || a.rows != b.len() {
        return Err(LinalgError::DimensionMismatch(format!(
            "{}x{} system with rhs of length {}",
            a.rows,
            a.cols,
            b.len()
        )));
    }
    if !a.is_symmetric(1e-10) {
        return Err(LinalgError::DimensionMismatch(
            "matrix is not symmetric".into(),
        ));
    }
    Ok(Cholesky::factor(a)?.solve(b))
}

/// Ordinary least squares by Householder QR.
///
/// A column whose remaining norm falls to `PIVOT_TOL` (scaled by the largest
/// column norm when that exceeds one) is treated as dependent.
pub fn least_squares(x: &Matrix, y: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let (n, p) = (x.rows, x.cols);
    if y.len() != n {
        return Err(LinalgError::DimensionMismatch(format!(
            "{n} rows but response of length {}",
            y.len()
        )));
    }
    if n < p {
        return Err(LinalgError::RankDeficient { column: n });
    }
    let scale = (0..p).map(|j| norm2(&x.column(j))).fold(1.0_f64, f64::max);
    let tol = PIVOT_TOL * scale;

    // column-major working copy
    let mut a: Vec<Vec<f64>> = (0..p).map(|j| x.column(j)).collect();
    let mut qty = y.to_vec();
    let mut r_diag = vec![0.0; p];
    for k in 0..p {
        let alpha = norm2(&a[k][k..]);
        if alpha <= tol {
            return Err(LinalgError::RankDeficient { column: k });
        }
        let sign = if a[k][k] >= 0.0 { 1.0 } else { -1.0 };
        let mut v = a[k][k..].to_vec();
        v[0] += sign * alpha;
        let vnorm2 = dot(&v, &v);
        r_diag[k] = -sign * alpha;
        for col in a.iter_mut().skip(k + 1) {
            let f = 2.0 * dot(&v, &col[k..]) / vnorm2;
            for (c, vi) in col[k..].iter_mut().zip(&v) {
                *c -= f * vi;
            }
        }
        let f = 2.0 * dot(&v, &qty[k..]) / vnorm2;
        for (c, vi) in qty[k..].iter_mut().zip(&v) {
            *c -= f * vi;
        }
    }
    let mut beta = vec![0.0; p];
    for k in (0..p).rev() {
        let mut s = qty[k];
        for j in k + 1..p {
            s -= a[j][k] * beta[j];
        }
        beta[k] = s / r_diag[k];
    }
    Ok(beta)
}

/// Seeded, platform-stable random stream.
///
/// Bits come from ChaCha20 seeded with `seed_from_u64(seed)`. A uniform in
/// `[0, 1)` takes the top 53 bits of one `u64` draw: `(u >> 11) * 2^-53`.
/// Normals use the Box–Muller transform on two consecutive uniforms `u1, u2`:
/// `sqrt(-2 ln(1 - u1)) * cos(2π u2)` is returned first and the matching
/// `sin` value is cached and returned by the next call.
#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    rng: ChaCha20Rng,
    spare_normal: Option<f64>,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha20Rng::seed_from_u64(seed),
            spare_normal: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform(); // (0, 1]
        let u2 = self.uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(radius * theta.sin());
        radius * theta.cos()
    }

    pub fn normal(&mut self, mean: f64, sd: f64) -> f64 {
        mean + sd * self.standard_normal()
    }

    /// Endless iterator of standard normal draws.
    pub fn gaussian_stream(&mut self) -> impl Iterator<Item = f64> + '_ {
        std::iter::repeat_with(move || self.standard_normal())
    }
}
