//! Shared helpers for the integration suites: an independent dense oracle
//! for the ridge-smoother formulas, assembled from first principles with
//! its own inversion routine, plus seeded data generators.

#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

pub type Mat = Vec<Vec<f64>>;

/// Truncated-polynomial design matrix built by plain loops.
pub fn oracle_design(n: usize, p: usize, k: usize) -> Mat {
    let dim = p + 1 + k;
    let mut t = vec![vec![0.0; dim]; n];
    for (row, t_row) in t.iter_mut().enumerate() {
        let tau = (row as f64 + 0.5) / n as f64;
        for j in 0..=p {
            t_row[j] = tau.powi(j as i32);
        }
        for i in 1..=k {
            let knot = i as f64 / (k + 1) as f64;
            let d = tau - knot;
            t_row[p + i] = if d > 0.0 { d.powi(p as i32) } else { 0.0 };
        }
    }
    t
}

pub fn oracle_matmul(a: &Mat, b: &Mat) -> Mat {
    let (ra, ca, cb) = (a.len(), a[0].len(), b[0].len());
    let mut out = vec![vec![0.0; cb]; ra];
    for i in 0..ra {
        for l in 0..ca {
            let v = a[i][l];
            for j in 0..cb {
                out[i][j] += v * b[l][j];
            }
        }
    }
    out
}

pub fn oracle_transpose(a: &Mat) -> Mat {
    let (r, c) = (a.len(), a[0].len());
    let mut out = vec![vec![0.0; r]; c];
    for i in 0..r {
        for j in 0..c {
            out[j][i] = a[i][j];
        }
    }
    out
}

pub fn oracle_mat_vec(a: &Mat, v: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

/// Inverse via Gauss-Jordan with partial pivoting after symmetric
/// equilibration; independent of the library's SVD route.
pub fn oracle_invert(a: &Mat) -> Mat {
    let n = a.len();
    let scale: Vec<f64> = (0..n)
        .map(|i| if a[i][i] > 0.0 { a[i][i].sqrt() } else { 1.0 })
        .collect();
    let mut work = vec![vec![0.0; 2 * n]; n];
    for i in 0..n {
        for j in 0..n {
            work[i][j] = a[i][j] / (scale[i] * scale[j]);
        }
        work[i][n + i] = 1.0;
    }
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&x, &y| work[x][col].abs().partial_cmp(&work[y][col].abs()).unwrap())
            .unwrap();
        work.swap(col, pivot_row);
        let pivot = work[col][col];
        assert!(pivot.abs() > 1e-300, "oracle matrix is singular");
        for j in 0..2 * n {
            work[col][j] /= pivot;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = work[row][col];
            if factor == 0.0 {
                continue;
            }
            for j in 0..2 * n {
                work[row][j] -= factor * work[col][j];
            }
        }
    }
    let mut inv = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            inv[i][j] = work[i][n + j] / (scale[i] * scale[j]);
        }
    }
    inv
}

/// Dense smoother matrix `T (T'T + lambda^{2p} D)^{-1} T'` assembled from
/// first principles.
pub fn oracle_smoother(n: usize, p: usize, k: usize, lambda: f64) -> Mat {
    let t = oracle_design(n, p, k);
    let tt = oracle_transpose(&t);
    let mut g = oracle_matmul(&tt, &t);
    let ridge = lambda.powi(2 * p as i32);
    for i in (p + 1)..(p + 1 + k) {
        g[i][i] += ridge;
    }
    let g_inv = oracle_invert(&g);
    oracle_matmul(&oracle_matmul(&t, &g_inv), &tt)
}

pub fn oracle_fit(n: usize, p: usize, k: usize, lambda: f64, y: &[f64]) -> Vec<f64> {
    oracle_mat_vec(&oracle_smoother(n, p, k, lambda), y)
}

pub fn oracle_bias(n: usize, p: usize, k: usize, lambda: f64, m: &[f64]) -> f64 {
    let smoothed = oracle_fit(n, p, k, lambda, m);
    smoothed
        .iter()
        .zip(m)
        .map(|(s, v)| (s - v) * (s - v))
        .sum::<f64>()
        / n as f64
}

pub fn oracle_variance(n: usize, p: usize, k: usize, lambda: f64, c_f: f64) -> f64 {
    let s = oracle_smoother(n, p, k, lambda);
    let mut trace_sq = 0.0;
    for i in 0..n {
        for j in 0..n {
            trace_sq += s[i][j] * s[j][i];
        }
    }
    2.0 * std::f64::consts::PI * c_f * trace_sq / n as f64
}

/// Symmetric eigendecomposition by the classical two-sided Jacobi
/// iteration; returns the eigenvalues and the eigenvector matrix with
/// eigenvectors in columns.
pub fn oracle_sym_eigen(a: &Mat) -> (Vec<f64>, Mat) {
    let n = a.len();
    let mut m = a.clone();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _ in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(m[p][q].abs() / (m[p][p].abs() * m[q][q].abs()).sqrt().max(1e-300));
            }
        }
        if off < 1e-15 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if m[p][q] == 0.0 {
                    continue;
                }
                let zeta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..n {
                    let (mip, miq) = (m[i][p], m[i][q]);
                    m[i][p] = c * mip - s * miq;
                    m[i][q] = s * mip + c * miq;
                }
                for j in 0..n {
                    let (mpj, mqj) = (m[p][j], m[q][j]);
                    m[p][j] = c * mpj - s * mqj;
                    m[q][j] = s * mpj + c * mqj;
                }
                for i in 0..n {
                    let (vip, viq) = (v[i][p], v[i][q]);
                    v[i][p] = c * vip - s * viq;
                    v[i][q] = s * vip + c * viq;
                }
            }
        }
    }
    ((0..n).map(|i| m[i][i]).collect(), v)
}

/// Generalized inverse of a symmetric PSD matrix with eigenvalues below
/// `tol * max eigenvalue` treated as zero.
pub fn oracle_ginv(a: &Mat, tol: f64) -> Mat {
    let n = a.len();
    let (eig, v) = oracle_sym_eigen(a);
    let max = eig.iter().cloned().fold(0.0f64, f64::max);
    let cutoff = tol * max;
    let mut out = vec![vec![0.0; n]; n];
    for (k, &lambda) in eig.iter().enumerate() {
        if lambda <= cutoff {
            continue;
        }
        let w = 1.0 / lambda;
        for i in 0..n {
            let coef = v[i][k] * w;
            for j in 0..n {
                out[i][j] += coef * v[j][k];
            }
        }
    }
    out
}

/// Plug-in penalty assembled factor by factor from explicit matrices,
/// taking (T'T)^- as the sqrt(epsilon)-chopped generalized inverse the
/// library also uses.
pub fn oracle_lambda_a(
    n: usize,
    p: usize,
    k: usize,
    m_hat: &[f64],
    c_f: f64,
    squared_norm: bool,
) -> f64 {
    let t = oracle_design(n, p, k);
    let tt = oracle_transpose(&t);
    let g = oracle_matmul(&tt, &t);
    let g_inv = oracle_ginv(&g, f64::EPSILON.sqrt());
    let dim = p + 1 + k;

    let mut tr_gd = 0.0;
    let mut tr_gd_sq = 0.0;
    for i in (p + 1)..dim {
        tr_gd += g_inv[i][i];
        for j in (p + 1)..dim {
            tr_gd_sq += g_inv[i][j] * g_inv[j][i];
        }
    }

    let w = oracle_mat_vec(&tt, m_hat);
    let mut z = oracle_mat_vec(&g_inv, &w);
    for (i, zi) in z.iter_mut().enumerate() {
        if i <= p {
            *zi = 0.0;
        }
    }
    let q = oracle_mat_vec(&g_inv, &z);
    let u = oracle_mat_vec(&t, &q);
    let norm_sq: f64 = u.iter().map(|v| v * v).sum();
    let curvature = if squared_norm { norm_sq } else { norm_sq.sqrt() };

    let two_pi = 2.0 * std::f64::consts::PI;
    let numerator = two_pi * c_f * tr_gd;
    let denominator = curvature + two_pi * c_f * tr_gd_sq;
    (numerator / denominator).powf(1.0 / (2.0 * p as f64))
}

pub fn rel_err(actual: f64, expected: f64) -> f64 {
    (actual - expected).abs() / expected.abs().max(1e-300)
}

pub fn max_rel_err_vec(actual: &[f64], expected: &[f64]) -> f64 {
    let scale = expected.iter().fold(0.0f64, |a, &v| a.max(v.abs())).max(1e-300);
    actual
        .iter()
        .zip(expected)
        .map(|(a, e)| (a - e).abs())
        .fold(0.0f64, f64::max)
        / scale
}

/// Stationary AR(1) with innovation standard deviation chosen so the
/// process standard deviation is `sd`.
pub fn gen_ar1(n: usize, phi: f64, sd: f64, seed: u64) -> Vec<f64> {
    let mut rng = StdRng::seed_from_u64(seed);
    let innov_sd = sd * (1.0 - phi * phi).sqrt();
    let mut x = vec![0.0; n];
    for t in 0..n {
        let eps: f64 = StandardNormal.sample(&mut rng);
        x[t] = if t == 0 {
            sd * eps
        } else {
            phi * x[t - 1] + innov_sd * eps
        };
    }
    x
}

/// The synthetic fixture used across the robustness tests:
/// `sin(2 pi tau)` plus AR(1) noise.
pub fn gen_sine_ar1(n: usize, phi: f64, sd: f64, seed: u64) -> Vec<f64> {
    let noise = gen_ar1(n, phi, sd, seed);
    (0..n)
        .map(|t| {
            let tau = (t as f64 + 0.5) / n as f64;
            (2.0 * std::f64::consts::PI * tau).sin() + noise[t]
        })
        .collect()
}

/// Unit GARCH(1,1) path with standard normal innovations.
pub fn gen_unit_garch(alpha1: f64, beta1: f64, n: usize, seed: u64) -> Vec<f64> {
    let alpha0 = 1.0 - alpha1 - beta1;
    let mut rng = StdRng::seed_from_u64(seed);
    let mut h = 1.0;
    let mut xi = Vec::with_capacity(n);
    for t in 0..n {
        if t > 0 {
            let prev: f64 = xi[t - 1];
            h = alpha0 + alpha1 * prev * prev + beta1 * h;
        }
        let eps: f64 = StandardNormal.sample(&mut rng);
        xi.push(h.sqrt() * eps);
    }
    xi
}

/// Random matrix entries in [-1, 1].
pub fn gen_matrix(rng: &mut StdRng, rows: usize, cols: usize) -> Vec<f64> {
    (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect()
}
