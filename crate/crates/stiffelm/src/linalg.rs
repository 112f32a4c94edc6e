//! Dense linear-algebra kernels: SVD, Moore-Penrose pseudoinverse, minimum-norm
//! least squares, numerical rank, condition numbers, and a Gram PSD check.
//!
//! Everything is sequential and therefore bit-deterministic for a fixed input.

use crate::error::{Error, Result};

/// Dense row-major matrix of finite `f64` entries.
///
/// Construction validates shape and finiteness; the data is immutable
/// afterwards, so values are safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidMatrix(format!(
                "need at least one row and one column, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidMatrix(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix(format!(
                "non-finite entry at row {}, column {}",
                pos / cols,
                pos % cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::from_vec(rows, cols, data)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::InvalidMatrix("ragged rows".into()));
        }
        Self::from_vec(nrows, ncols, rows.concat())
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 }).expect("identity is valid")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn entries(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        let mut data = vec![0.0; self.data.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                data[j * self.rows + i] = self.get(i, j);
            }
        }
        Matrix {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut data = vec![0.0; self.rows * rhs.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let lhs_row = &mut data[i * rhs.cols..(i + 1) * rhs.cols];
                let rhs_row = rhs.row(k);
                for (out, r) in lhs_row.iter_mut().zip(rhs_row) {
                    *out += a * r;
                }
            }
        }
        Ok(Matrix {
            rows: self.rows,
            cols: rhs.cols,
            data,
        })
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "matrix has {} columns, vector has {} entries",
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| dot(self.row(i), v))
            .collect())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Fraction of entries that are exactly zero.
    pub fn zero_fraction(&self) -> f64 {
        let zeros = self.data.iter().filter(|v| **v == 0.0).count();
        zeros as f64 / self.data.len() as f64
    }

    fn to_faer(&self) -> faer::Mat<f64> {
        faer::Mat::from_fn(self.rows, self.cols, |i, j| self.get(i, j))
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Singular values in non-increasing order plus the rank tolerance they were
/// computed against.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularSpectrum {
    values: Vec<f64>,
    rank_tolerance: f64,
}

impl SingularSpectrum {
    pub fn new(values: Vec<f64>, rank_tolerance: f64) -> Result<Self> {
        if rank_tolerance <= 0.0 || rank_tolerance.is_nan() {
            return Err(Error::InvalidSpectrum(format!(
                "rank tolerance must be positive, got {rank_tolerance}"
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidSpectrum(
                "singular values must be finite and non-negative".into(),
            ));
        }
        if values.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidSpectrum(
                "singular values must be non-increasing".into(),
            ));
        }
        Ok(Self {
            values,
            rank_tolerance,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rank_tolerance(&self) -> f64 {
        self.rank_tolerance
    }

    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    fn above_tolerance(&self) -> &[f64] {
        let n = self
            .values
            .iter()
            .take_while(|v| **v > self.rank_tolerance)
            .count();
        &self.values[..n]
    }
}

/// Thin SVD `m = U diag(s) Vᵀ` with `U: rows x k`, `V: cols x k`, `k = min(rows, cols)`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub spectrum: SingularSpectrum,
    pub v: Matrix,
}

/// Rank tolerance: `rank_tol_factor x max(rows, cols) x machine_eps x sigma_max`,
/// the standard numerical-rank convention, scaled by a caller-supplied knob.
pub fn rank_tolerance(rows: usize, cols: usize, sigma_max: f64, rank_tol_factor: f64) -> f64 {
    let tol = rank_tol_factor * rows.max(cols) as f64 * f64::EPSILON * sigma_max;
    // A zero matrix yields tol = 0, which the spectrum type rejects; the
    // smallest positive double keeps "strictly above tolerance" meaningful.
    if tol > 0.0 {
        tol
    } else {
        f64::MIN_POSITIVE
    }
}

/// Thin singular value decomposition. The spectrum carries the rank tolerance
/// derived from `rank_tol_factor` (1.0 = the standard convention).
pub fn svd(m: &Matrix, rank_tol_factor: f64) -> Result<Svd> {
    if rank_tol_factor <= 0.0 || rank_tol_factor.is_nan() {
        return Err(Error::InvalidConfig(format!(
            "rank_tol_factor must be positive, got {rank_tol_factor}"
        )));
    }
    let decomp = m.to_faer().thin_svd();
    let k = m.rows.min(m.cols);

    let s = decomp.s_diagonal();
    let values: Vec<f64> = (0..k).map(|i| s[i]).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::SvdFailure);
    }
    let tol = rank_tolerance(m.rows, m.cols, values.first().copied().unwrap_or(0.0), rank_tol_factor);

    let fu = decomp.u();
    let fv = decomp.v();
    let u = Matrix::from_fn(m.rows, k, |i, j| fu.read(i, j)).map_err(|_| Error::SvdFailure)?;
    let v = Matrix::from_fn(m.cols, k, |i, j| fv.read(i, j)).map_err(|_| Error::SvdFailure)?;
    let spectrum = SingularSpectrum::new(values, tol)?;
    Ok(Svd { u, spectrum, v })
}

/// Moore-Penrose pseudoinverse `V diag(1/s) Uᵀ`; singular values at or below
/// the rank tolerance are zeroed, not inverted.
pub fn pseudoinverse(m: &Matrix, rank_tol_factor: f64) -> Result<Matrix> {
    let Svd { u, spectrum, v } = svd(m, rank_tol_factor)?;
    let k = spectrum.values().len();
    let tol = spectrum.rank_tolerance();
    let inv_s: Vec<f64> = spectrum
        .values()
        .iter()
        .map(|&s| if s > tol { 1.0 / s } else { 0.0 })
        .collect();
    // pinv[i][j] = sum_k v[i][k] * inv_s[k] * u[j][k]
    Matrix::from_fn(m.cols, m.rows, |i, j| {
        (0..k).map(|l| v.get(i, l) * inv_s[l] * u.get(j, l)).sum()
    })
}

/// Minimum-norm least-squares solution of `H beta = t` via the SVD, without
/// materializing the pseudoinverse.
pub fn least_squares_solve(h: &Matrix, t: &[f64], rank_tol_factor: f64) -> Result<Vec<f64>> {
    if t.len() != h.rows {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} rows, target has {} entries",
            h.rows,
            t.len()
        )));
    }
    let decomp = svd(h, rank_tol_factor)?;
    Ok(solve_from_svd(&decomp, t))
}

/// Same minimum-norm solve, reusing an existing decomposition.
pub fn solve_from_svd(decomp: &Svd, t: &[f64]) -> Vec<f64> {
    let Svd { u, spectrum, v } = decomp;
    let tol = spectrum.rank_tolerance();
    let mut beta = vec![0.0; v.rows()];
    for (l, &s) in spectrum.values().iter().enumerate() {
        if s <= tol {
            continue;
        }
        let coeff = (0..u.rows()).map(|i| u.get(i, l) * t[i]).sum::<f64>() / s;
        for (i, b) in beta.iter_mut().enumerate() {
            *b += coeff * v.get(i, l);
        }
    }
    beta
}

/// Number of singular values strictly above the rank tolerance.
pub fn numerical_rank(spectrum: &SingularSpectrum) -> usize {
    spectrum.above_tolerance().len()
}

/// `(raw, effective)` condition numbers: raw over all singular values
/// (infinite when the smallest is zero), effective over the values above the
/// rank tolerance (1 when none are, by convention).
pub fn condition_number(spectrum: &SingularSpectrum) -> Result<(f64, f64)> {
    if spectrum.values().is_empty() {
        return Err(Error::InvalidSpectrum(
            "condition number of an empty spectrum".into(),
        ));
    }
    let raw = if spectrum.min() == 0.0 {
        f64::INFINITY
    } else {
        spectrum.max() / spectrum.min()
    };
    let above = spectrum.above_tolerance();
    let effective = match (above.first(), above.last()) {
        (Some(&hi), Some(&lo)) => hi / lo,
        _ => 1.0,
    };
    Ok((raw, effective))
}

/// `sum(log10 sigma_i)` over above-tolerance singular values: a log-|det|
/// proxy that stays finite where the literal determinant underflows.
pub fn log10_det_proxy(spectrum: &SingularSpectrum) -> f64 {
    spectrum
        .above_tolerance()
        .iter()
        .map(|s| s.log10())
        .sum()
}

/// Smallest eigenvalue of the Gram matrix `A Aᵀ` via singular values, and
/// whether it certifies positive semidefiniteness.
///
/// For rows > cols the Gram matrix is rank-deficient, so the smallest
/// eigenvalue is exactly 0; otherwise it is `sigma_min^2`.
pub fn gram_psd_check(a: &Matrix) -> Result<(f64, bool)> {
    let spectrum = svd(a, 1.0)?.spectrum;
    let lambda_max = spectrum.max().powi(2);
    let lambda_min = if a.rows() > a.cols() {
        0.0
    } else {
        spectrum.min().powi(2)
    };
    Ok((lambda_min, lambda_min >= -1e-10 * lambda_max))
}
