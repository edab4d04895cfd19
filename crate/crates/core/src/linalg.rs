//! Minimal dense-matrix kernel.
//!
//! Row-major storage, plain products, trace, Frobenius norm and an SVD-based
//! Moore-Penrose pseudo-inverse. Sized for the matrices this crate actually
//! meets: tall design matrices up to roughly 10,000 x 80 and small gram
//! matrices. No sparse formats, no general eigen-solvers.

use crate::error::{Error, Result};
use crate::float::Float;

/// Default relative singular-value cutoff for [`Matrix::pseudo_inverse`].
pub const DEFAULT_PINV_TOL: f64 = 1e-12;

const MAX_JACOBI_SWEEPS: usize = 60;

/// Dense row-major matrix of finite scalars.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Float> Matrix<F> {
    /// Builds a matrix from row-major entries, validating shape and finiteness.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<F>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput("matrix must be non-empty".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "expected {} entries for a {}x{} matrix, got {}",
                rows * cols,
                rows,
                cols,
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(
                "matrix entries must be finite".into(),
            ));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix by evaluating `f(row, col)`.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> F) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::from_vec(rows, cols, data)
    }

    /// All-zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![F::zero(); rows * cols],
        }
    }

    /// Identity matrix of order `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = F::one();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> F {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: F) {
        self.data[i * self.cols + j] = value;
    }

    /// Row `i` as a contiguous slice.
    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Row-major entries.
    pub fn data(&self) -> &[F] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// Matrix product `self * rhs`.
    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::InvalidInput(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let a_row = &self.data[i * self.cols..(i + 1) * self.cols];
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &aik) in a_row.iter().enumerate() {
                if aik == F::zero() {
                    continue;
                }
                let b_row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row.iter()) {
                    *o += aik * b;
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product `self * v`.
    pub fn mat_vec(&self, v: &[F]) -> Result<Vec<F>> {
        if v.len() != self.cols {
            return Err(Error::InvalidInput(format!(
                "cannot apply {}x{} matrix to vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v.iter())
                    .fold(F::zero(), |acc, (&a, &x)| acc + a * x)
            })
            .collect())
    }

    /// Sum of diagonal entries; requires a square matrix.
    pub fn trace(&self) -> Result<F> {
        if self.rows != self.cols {
            return Err(Error::InvalidInput(format!(
                "trace requires a square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        Ok((0..self.rows).map(|i| self.get(i, i)).sum())
    }

    /// Frobenius norm.
    pub fn frobenius(&self) -> F {
        self.data
            .iter()
            .fold(F::zero(), |acc, &x| acc + x * x)
            .sqrt()
    }

    /// Gram matrix `self' * self`, accumulated row-wise.
    pub fn gram(&self) -> Self {
        let c = self.cols;
        let mut g = Self::zeros(c, c);
        for t in 0..self.rows {
            let row = self.row(t);
            for i in 0..c {
                let ri = row[i];
                if ri == F::zero() {
                    continue;
                }
                let g_row = &mut g.data[i * c..(i + 1) * c];
                for j in i..c {
                    g_row[j] += ri * row[j];
                }
            }
        }
        for i in 0..c {
            for j in 0..i {
                g.data[i * c + j] = g.data[j * c + i];
            }
        }
        g
    }

    /// Moore-Penrose pseudo-inverse via one-sided Jacobi SVD.
    ///
    /// Singular values below `tol` times the largest singular value are
    /// treated as zero. `tol` defaults to [`DEFAULT_PINV_TOL`] and must lie
    /// in `(0, 1)`.
    pub fn pseudo_inverse(&self, tol: Option<F>) -> Result<Self> {
        let tol = tol.unwrap_or_else(|| F::cast(DEFAULT_PINV_TOL));
        if !(tol > F::zero() && tol < F::one()) {
            return Err(Error::InvalidInput(format!(
                "pseudo-inverse tolerance must lie in (0, 1), got {tol}"
            )));
        }
        if self.data.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(
                "matrix entries must be finite".into(),
            ));
        }

        // Work on the side with fewer columns so rotations touch short rows.
        let transposed = self.rows < self.cols;
        let a = if transposed {
            self.transpose()
        } else {
            self.clone()
        };

        let (cols_of_a, sigma, v_cols) = jacobi_svd(&a)?;
        let sigma_max = sigma.iter().cloned().fold(F::zero(), F::max);
        let cutoff = tol * sigma_max;

        // pinv(A) = V diag(1/sigma) U', with U columns stored in `cols_of_a`
        // as sigma * u. Entry (r, c) is sum_k V[r, k] * X[k, c] / sigma_k^2.
        let n = a.cols;
        let m = a.rows;
        let mut p = Self::zeros(n, m);
        for k in 0..n {
            if sigma[k] <= cutoff || sigma[k] == F::zero() {
                continue;
            }
            let w = (F::one() / sigma[k]) * (F::one() / sigma[k]);
            let x_row = cols_of_a.row(k);
            let v_row = v_cols.row(k);
            for r in 0..n {
                let coef = v_row[r] * w;
                if coef == F::zero() {
                    continue;
                }
                let p_row = &mut p.data[r * m..(r + 1) * m];
                for (o, &x) in p_row.iter_mut().zip(x_row.iter()) {
                    *o += coef * x;
                }
            }
        }

        if transposed {
            Ok(p.transpose())
        } else {
            Ok(p)
        }
    }
}

/// One-sided Jacobi SVD of `a` (rows >= cols).
///
/// Returns `(x, sigma, v)` where row `k` of `x` holds the rotated column `k`
/// of `a` (equal to `sigma_k * u_k`), `sigma` the singular values and row `k`
/// of `v` the right singular vector `v_k`.
fn jacobi_svd<F: Float>(a: &Matrix<F>) -> Result<(Matrix<F>, Vec<F>, Matrix<F>)> {
    let n = a.cols;
    let m = a.rows;
    // Rows of `x` are columns of `a`, so each rotation works on two
    // contiguous slices.
    let mut x = a.transpose();
    let mut v = Matrix::<F>::identity(n);
    let orth_tol = F::epsilon() * F::from_count(m.max(n)).sqrt();

    let mut converged = false;
    for _ in 0..MAX_JACOBI_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in (i + 1)..n {
                let (aa, bb, cc) = {
                    let xi = x.row(i);
                    let xj = x.row(j);
                    let mut aa = F::zero();
                    let mut bb = F::zero();
                    let mut cc = F::zero();
                    for t in 0..m {
                        aa += xi[t] * xi[t];
                        bb += xj[t] * xj[t];
                        cc += xi[t] * xj[t];
                    }
                    (aa, bb, cc)
                };
                if aa == F::zero() || bb == F::zero() {
                    continue;
                }
                if cc.abs() <= orth_tol * (aa * bb).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (bb - aa) / (F::cast(2.0) * cc);
                let t = zeta.signum() / (zeta.abs() + (F::one() + zeta * zeta).sqrt());
                let cs = F::one() / (F::one() + t * t).sqrt();
                let sn = cs * t;
                rotate_rows(&mut x, i, j, cs, sn);
                rotate_rows(&mut v, i, j, cs, sn);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NumericFailure(
            "Jacobi SVD did not converge".into(),
        ));
    }

    let mut sigma: Vec<F> = (0..n)
        .map(|k| {
            x.row(k)
                .iter()
                .fold(F::zero(), |acc, &t| acc + t * t)
                .sqrt()
        })
        .collect();

    // Order singular values descending so cutoff logic can rely on sigma[0].
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&p, &q| sigma[q].partial_cmp(&sigma[p]).unwrap());
    if order.iter().enumerate().any(|(pos, &k)| pos != k) {
        let x_sorted = permute_rows(&x, &order);
        let v_sorted = permute_rows(&v, &order);
        sigma = order.iter().map(|&k| sigma[k]).collect();
        return Ok((x_sorted, sigma, v_sorted));
    }
    Ok((x, sigma, v))
}

fn rotate_rows<F: Float>(m: &mut Matrix<F>, i: usize, j: usize, cs: F, sn: F) {
    let cols = m.cols;
    let (lo, hi) = if i < j { (i, j) } else { (j, i) };
    let (head, tail) = m.data.split_at_mut(hi * cols);
    let row_lo = &mut head[lo * cols..(lo + 1) * cols];
    let row_hi = &mut tail[..cols];
    let (ri, rj) = if i < j { (row_lo, row_hi) } else { (row_hi, row_lo) };
    for t in 0..cols {
        let a = ri[t];
        let b = rj[t];
        ri[t] = cs * a - sn * b;
        rj[t] = sn * a + cs * b;
    }
}

fn permute_rows<F: Float>(m: &Matrix<F>, order: &[usize]) -> Matrix<F> {
    let mut out = Matrix::zeros(m.rows, m.cols);
    for (pos, &k) in order.iter().enumerate() {
        out.data[pos * m.cols..(pos + 1) * m.cols].copy_from_slice(m.row(k));
    }
    out
}

/// Pseudo-inverse of a symmetric positive semi-definite matrix after
/// symmetric Jacobi equilibration.
///
/// The gram matrices met in P-spline fitting mix scales wildly once the
/// ridge term grows (`lambda^{2p}` can dwarf the unpenalized block), and a
/// raw relative cutoff then discards the small but well-determined block.
/// Scaling by `diag(g)^{-1/2}` first keeps every block resolvable.
pub(crate) fn pinv_equilibrated<F: Float>(g: &Matrix<F>, tol: Option<F>) -> Result<Matrix<F>> {
    if g.rows() != g.cols() {
        return Err(Error::InvalidInput(
            "equilibrated pseudo-inverse requires a square matrix".into(),
        ));
    }
    let n = g.rows();
    let scale: Vec<F> = (0..n)
        .map(|i| {
            let d = g.get(i, i);
            if d > F::zero() {
                d.sqrt()
            } else {
                F::one()
            }
        })
        .collect();
    let mut scaled = g.clone();
    for i in 0..n {
        for j in 0..n {
            let v = scaled.get(i, j) / (scale[i] * scale[j]);
            scaled.set(i, j, v);
        }
    }
    let mut p = scaled.pseudo_inverse(tol)?;
    for i in 0..n {
        for j in 0..n {
            let v = p.get(i, j) / (scale[i] * scale[j]);
            p.set(i, j, v);
        }
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    type M = Matrix<f64>;

    fn random_matrix(rng: &mut StdRng, rows: usize, cols: usize) -> M {
        Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0)).unwrap()
    }

    fn max_abs_diff(a: &M, b: &M) -> f64 {
        a.data()
            .iter()
            .zip(b.data())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn pinv_of_identity_is_identity() {
        let id = M::identity(3);
        let p = id.pseudo_inverse(None).unwrap();
        assert!(max_abs_diff(&p, &id) < 1e-14);
    }

    #[test]
    fn pinv_of_rank_deficient_diagonal() {
        let d = M::from_vec(2, 2, vec![2.0, 0.0, 0.0, 0.0]).unwrap();
        let p = d.pseudo_inverse(None).unwrap();
        let expected = M::from_vec(2, 2, vec![0.5, 0.0, 0.0, 0.0]).unwrap();
        assert!(max_abs_diff(&p, &expected) < 1e-14);
    }

    #[test]
    fn pinv_satisfies_first_penrose_condition_on_tall_matrix() {
        let mut rng = StdRng::seed_from_u64(7);
        let a = random_matrix(&mut rng, 5, 3);
        let p = a.pseudo_inverse(None).unwrap();
        let apa = a.matmul(&p).unwrap().matmul(&a).unwrap();
        let diff = M::from_fn(5, 3, |i, j| apa.get(i, j) - a.get(i, j)).unwrap();
        assert!(diff.frobenius() < 1e-10 * a.frobenius());
    }

    #[test]
    fn pinv_handles_wide_matrices() {
        let mut rng = StdRng::seed_from_u64(8);
        let a = random_matrix(&mut rng, 3, 6);
        let p = a.pseudo_inverse(None).unwrap();
        assert_eq!((p.rows(), p.cols()), (6, 3));
        let apa = a.matmul(&p).unwrap().matmul(&a).unwrap();
        let diff = M::from_fn(3, 6, |i, j| apa.get(i, j) - a.get(i, j)).unwrap();
        assert!(diff.frobenius() < 1e-10 * a.frobenius());
    }

    #[test]
    fn trace_and_frobenius_basics() {
        assert_eq!(M::identity(4).trace().unwrap(), 4.0);
        assert_eq!(M::zeros(3, 3).frobenius(), 0.0);
        assert!(M::zeros(2, 3).trace().is_err());
    }

    #[test]
    fn trace_of_gram_equals_squared_frobenius() {
        let mut rng = StdRng::seed_from_u64(11);
        let a = random_matrix(&mut rng, 6, 4);
        let gram = a.gram();
        let tr = gram.trace().unwrap();
        let fro = a.frobenius();
        assert!((tr - fro * fro).abs() < 1e-12 * tr.abs().max(1.0));
    }

    #[test]
    fn gram_matches_explicit_product() {
        let mut rng = StdRng::seed_from_u64(12);
        let a = random_matrix(&mut rng, 7, 3);
        let explicit = a.transpose().matmul(&a).unwrap();
        assert!(max_abs_diff(&a.gram(), &explicit) < 1e-13);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let a = M::zeros(2, 3);
        let b = M::zeros(2, 3);
        assert!(matches!(a.matmul(&b), Err(Error::InvalidInput(_))));
        assert!(matches!(a.mat_vec(&[1.0, 2.0]), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn non_finite_entries_are_rejected() {
        assert!(M::from_vec(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(M::from_vec(1, 2, vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn pinv_tolerance_must_be_in_unit_interval() {
        let a = M::identity(2);
        assert!(a.pseudo_inverse(Some(0.0)).is_err());
        assert!(a.pseudo_inverse(Some(1.0)).is_err());
    }

    #[test]
    fn equilibrated_pinv_matches_plain_inverse_on_well_scaled_spd() {
        let mut rng = StdRng::seed_from_u64(21);
        let b = random_matrix(&mut rng, 8, 4);
        let g = b.gram();
        let p1 = g.pseudo_inverse(None).unwrap();
        let p2 = pinv_equilibrated(&g, None).unwrap();
        assert!(max_abs_diff(&p1, &p2) < 1e-9 * p1.frobenius());
    }

    #[test]
    fn equilibrated_pinv_resolves_split_scales() {
        // diag(1, 1e12) plus a weak coupling: the raw relative cutoff is
        // harmless here, but the scaled route must agree with the exact
        // 2x2 inverse to high accuracy.
        let g = M::from_vec(2, 2, vec![1.0, 1e3, 1e3, 1e12]).unwrap();
        let p = pinv_equilibrated(&g, None).unwrap();
        let det = 1.0 * 1e12 - 1e3 * 1e3;
        let exact = M::from_vec(
            2,
            2,
            vec![1e12 / det, -1e3 / det, -1e3 / det, 1.0 / det],
        )
        .unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let rel = (p.get(i, j) - exact.get(i, j)).abs() / exact.get(i, j).abs();
                assert!(rel < 1e-9, "entry ({i},{j}) rel err {rel}");
            }
        }
    }
}
