//! Lag-window estimation of the error spectral density at frequency zero.
//!
//! The variance factor `c_f = f(0)` of the residual process is estimated by a
//! Bartlett lag-window estimator whose window width is chosen by an
//! iterative plug-in: a global stage balances the integrated squared bias
//! against the integrated variance, then a local adaptation at frequency
//! zero (where the estimator variance doubles) picks the final width.

use crate::error::{Error, Result};
use crate::float::Float;

/// Number of equispaced frequencies on `[0, pi]` used for the functional
/// integrals (trapezoid rule).
pub const INTEGRATION_GRID: usize = 512;

/// Lower bound applied to the returned variance factor so downstream
/// penalty formulas stay finite.
pub const CF_FLOOR: f64 = 1e-10;

/// Exponent of the width-inflation factor `n^{2/21}` used when estimating
/// the plug-in functionals.
const INFLATION_EXPONENT: f64 = 2.0 / 21.0;

const MAX_GLOBAL_ITERATIONS: usize = 20;

/// Sample autocovariances `gamma(0..=max_lag)` with the biased divisor `n`.
#[derive(Debug, Clone)]
pub struct AcfEstimate<F> {
    gamma: Vec<F>,
    n: usize,
    mean_removed: bool,
}

impl<F: Float> AcfEstimate<F> {
    /// Builds an estimate from precomputed autocovariances. Intended for
    /// tests that force a specific sequence.
    pub fn from_gamma(gamma: Vec<F>, n: usize) -> Result<Self> {
        if gamma.is_empty() {
            return Err(Error::InvalidInput("autocovariances must be non-empty".into()));
        }
        Ok(Self {
            gamma,
            n,
            mean_removed: true,
        })
    }

    pub fn gamma(&self) -> &[F] {
        &self.gamma
    }

    pub fn max_lag(&self) -> usize {
        self.gamma.len() - 1
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mean_removed(&self) -> bool {
        self.mean_removed
    }
}

/// Outcome of the data-driven window selection.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEstimate<F> {
    /// Estimated spectral density at zero (floored at [`CF_FLOOR`]).
    pub c_f: F,
    /// Window width selected by the local stage.
    pub window_width: usize,
    /// Iterations used by the global stage.
    pub iterations: usize,
    /// Whether the global stage converged within its iteration cap.
    pub converged: bool,
    /// Width selected by the global stage.
    pub global_width: usize,
    /// True when the local rule was unusable (vanishing derivative at zero)
    /// and the width fell back to `n^{1/3}`.
    pub fallback: bool,
    /// True when the floor on `c_f` was applied.
    pub floored: bool,
}

/// Plug-in functionals of the estimated spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralFunctionals<F> {
    /// Integral of the squared density over `[0, pi]`.
    pub int_f_sq: F,
    /// Integral of the squared first generalized derivative over `[0, pi]`.
    pub int_f1_sq: F,
    /// First generalized derivative at frequency zero.
    pub f1_zero: F,
}

/// Sample autocovariances with divisor `n` after mean removal.
pub fn autocovariance<F: Float>(x: &[F], max_lag: usize) -> Result<AcfEstimate<F>> {
    let n = x.len();
    if n == 0 {
        return Err(Error::InvalidInput("series must be non-empty".into()));
    }
    if max_lag >= n {
        return Err(Error::InvalidInput(format!(
            "max lag {max_lag} must be below the sample size {n}"
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("series must be finite".into()));
    }

    let nf = F::from_count(n);
    let mean = x.iter().copied().sum::<F>() / nf;
    let centered: Vec<F> = x.iter().map(|&v| v - mean).collect();

    let mut gamma = Vec::with_capacity(max_lag + 1);
    for lag in 0..=max_lag {
        let mut acc = F::zero();
        for t in 0..n - lag {
            acc += centered[t] * centered[t + lag];
        }
        gamma.push(acc / nf);
    }

    if gamma[0] <= F::zero() {
        return Err(Error::DegenerateInput(
            "series is constant; autocovariance at lag zero vanishes".into(),
        ));
    }

    Ok(AcfEstimate {
        gamma,
        n,
        mean_removed: true,
    })
}

fn validate_width<F: Float>(acf: &AcfEstimate<F>, m: usize) -> Result<()> {
    if m < 1 || m > acf.max_lag() {
        return Err(Error::InvalidInput(format!(
            "window width {m} must lie in [1, {}]",
            acf.max_lag()
        )));
    }
    Ok(())
}

/// Bartlett weight `1 - l / (m + 0.5)`.
fn bartlett_weight<F: Float>(l: usize, m: usize) -> F {
    F::one() - F::from_count(l) / (F::from_count(m) + F::cast(0.5))
}

/// Lag-window estimate of `f(0)` with window width `m`.
pub fn lag_window_cf<F: Float>(acf: &AcfEstimate<F>, m: usize) -> Result<F> {
    validate_width(acf, m)?;
    let mut acc = acf.gamma[0];
    let two = F::cast(2.0);
    for l in 1..=m {
        acc += two * bartlett_weight::<F>(l, m) * acf.gamma[l];
    }
    let two_pi = two * F::PI();
    Ok(acc / two_pi)
}

/// Lag-window estimate of the spectral density at frequency `omega`.
pub fn spectral_density<F: Float>(acf: &AcfEstimate<F>, m: usize, omega: F) -> Result<F> {
    validate_width(acf, m)?;
    let two = F::cast(2.0);
    let mut acc = acf.gamma[0];
    // cos(l omega) by the Chebyshev recurrence; the grid integrals call
    // this with thousands of lags.
    let step = omega.cos();
    let mut prev = F::one();
    let mut curr = step;
    for l in 1..=m {
        acc += two * bartlett_weight::<F>(l, m) * acf.gamma[l] * curr;
        let next = two * step * curr - prev;
        prev = curr;
        curr = next;
    }
    Ok(acc / (two * F::PI()))
}

/// First generalized derivative of the estimated spectrum,
/// `(1/2pi) sum |l| gamma(|l|) cos(l omega)` truncated at `m`.
fn first_derivative<F: Float>(acf: &AcfEstimate<F>, m: usize, omega: F) -> F {
    let two = F::cast(2.0);
    let mut acc = F::zero();
    let step = omega.cos();
    let mut prev = F::one();
    let mut curr = step;
    for l in 1..=m {
        acc += two * F::from_count(l) * acf.gamma[l] * curr;
        let next = two * step * curr - prev;
        prev = curr;
        curr = next;
    }
    acc / (two * F::PI())
}

/// Integrated squared density, integrated squared first generalized
/// derivative (trapezoid rule on [`INTEGRATION_GRID`] frequencies) and the
/// derivative at zero.
pub fn generalized_derivative_integrals<F: Float>(
    acf: &AcfEstimate<F>,
    m: usize,
) -> Result<SpectralFunctionals<F>> {
    validate_width(acf, m)?;
    let grid = INTEGRATION_GRID;
    let step = F::PI() / F::from_count(grid - 1);
    let mut int_f_sq = F::zero();
    let mut int_f1_sq = F::zero();
    for i in 0..grid {
        let omega = step * F::from_count(i);
        let f = spectral_density(acf, m, omega)?;
        let f1 = first_derivative(acf, m, omega);
        let w = if i == 0 || i == grid - 1 {
            F::cast(0.5)
        } else {
            F::one()
        };
        int_f_sq += w * f * f;
        int_f1_sq += w * f1 * f1;
    }
    int_f_sq = int_f_sq * step;
    int_f1_sq = int_f1_sq * step;
    Ok(SpectralFunctionals {
        int_f_sq,
        int_f1_sq,
        f1_zero: first_derivative(acf, m, F::zero()),
    })
}

/// Data-driven estimate of `c_f = f(0)` with the default initial window
/// width `n/2`.
pub fn select_cf<F: Float>(x: &[F]) -> Result<SpectralEstimate<F>> {
    select_cf_with_initial(x, x.len() / 2)
}

/// Data-driven estimate of `c_f` starting the global stage at `m0`.
///
/// The selected width is largely insensitive to `m0` whenever the global
/// stage converges, which the tests exercise directly.
pub fn select_cf_with_initial<F: Float>(x: &[F], m0: usize) -> Result<SpectralEstimate<F>> {
    let n = x.len();
    if n < 20 {
        return Err(Error::InvalidInput(format!(
            "window selection requires at least 20 observations, got {n}"
        )));
    }
    let half = (n / 2).max(1);
    let acf = autocovariance(x, half)?;
    let nf = F::from_count(n);
    let inflation = nf.powf(F::cast(INFLATION_EXPONENT));
    let n_cuberoot = nf.powf(F::one() / F::cast(3.0));
    let clamp = |w: F| -> usize {
        if !w.is_finite() {
            return half;
        }
        let floored = w.floor().as_f64() as i64;
        floored.clamp(1, half as i64) as usize
    };

    // Global stage: balance integrated squared bias against integrated
    // variance, re-estimating the functionals with an inflated width.
    let mut m_global = m0.clamp(1, half);
    let mut iterations = 0;
    let mut converged = false;
    for _ in 0..MAX_GLOBAL_ITERATIONS {
        iterations += 1;
        let m_pilot = clamp(F::from_count(m_global) / inflation);
        let funcs = generalized_derivative_integrals(&acf, m_pilot)?;
        if !(funcs.int_f_sq > F::zero()) {
            return Err(Error::DegenerateInput(
                "estimated spectrum is identically zero".into(),
            ));
        }
        let ratio = F::cast(3.0) * funcs.int_f1_sq / (F::cast(2.0) * funcs.int_f_sq);
        let m_new = clamp(n_cuberoot * ratio.powf(F::one() / F::cast(3.0)));
        let delta = m_new.abs_diff(m_global);
        m_global = m_new;
        if delta <= 1 {
            converged = true;
            break;
        }
    }

    // Local adaptation at frequency zero, where the variance doubles.
    let m_pilot = clamp(F::from_count(m_global) / inflation);
    let f_zero = lag_window_cf(&acf, m_pilot)?;
    let d_zero = first_derivative(&acf, m_pilot, F::zero());
    let degenerate = !f_zero.is_finite()
        || !d_zero.is_finite()
        || f_zero <= F::zero()
        || d_zero * d_zero <= F::cast(1e-12) * f_zero * f_zero;
    let (window_width, fallback) = if degenerate {
        (clamp(n_cuberoot), true)
    } else {
        let ratio = F::cast(3.0) * d_zero * d_zero / (F::cast(4.0) * f_zero * f_zero);
        (clamp(n_cuberoot * ratio.powf(F::one() / F::cast(3.0))), false)
    };

    let raw = lag_window_cf(&acf, window_width)?;
    let floor = F::cast(CF_FLOOR);
    let (c_f, floored) = if raw < floor { (floor, true) } else { (raw, false) };

    Ok(SpectralEstimate {
        c_f,
        window_width,
        iterations,
        converged,
        global_width: m_global,
        fallback,
        floored,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use rand_distr::{Distribution, StandardNormal};

    fn ar1(phi: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut x = vec![0.0; n];
        for t in 1..n {
            let eps: f64 = StandardNormal.sample(&mut rng);
            x[t] = phi * x[t - 1] + eps;
        }
        x
    }

    #[test]
    fn autocovariance_matches_hand_computation() {
        let acf = autocovariance(&[1.0, -1.0, 1.0, -1.0], 1).unwrap();
        assert_relative_eq!(acf.gamma()[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(acf.gamma()[1], -0.75, epsilon = 1e-15);
    }

    #[test]
    fn lag_zero_autocovariance_is_population_variance() {
        let x = [0.4, -1.2, 2.0, 0.3, -0.6];
        let acf = autocovariance(&x, 2).unwrap();
        let mean = x.iter().sum::<f64>() / 5.0;
        let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 5.0;
        assert_relative_eq!(acf.gamma()[0], var, epsilon = 1e-14);
    }

    #[test]
    fn iid_autocovariances_decay() {
        let mut rng = StdRng::seed_from_u64(5);
        let x: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let acf = autocovariance(&x, 10).unwrap();
        assert!(acf.gamma()[5].abs() < 0.05);
    }

    #[test]
    fn constant_series_is_degenerate() {
        assert!(matches!(
            autocovariance(&[2.0; 30], 3),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn white_noise_cf_sees_only_lag_zero() {
        let sigma_sq = 1.7;
        let acf = AcfEstimate::from_gamma(vec![sigma_sq, 0.0, 0.0, 0.0], 100).unwrap();
        let cf = lag_window_cf(&acf, 3).unwrap();
        assert_relative_eq!(cf, sigma_sq / (2.0 * std::f64::consts::PI), epsilon = 1e-14);
    }

    #[test]
    fn lag_window_matches_hand_evaluation() {
        let acf = AcfEstimate::from_gamma(vec![1.0, 0.5], 100).unwrap();
        let cf = lag_window_cf(&acf, 1).unwrap();
        let expected = (1.0 + 2.0 * (1.0 - 1.0 / 1.5) * 0.5) / (2.0 * std::f64::consts::PI);
        assert_relative_eq!(cf, expected, epsilon = 1e-14);
        assert_relative_eq!(expected, (4.0 / 3.0) / (2.0 * std::f64::consts::PI), epsilon = 1e-14);
    }

    #[test]
    fn lag_window_is_linear_in_autocovariances() {
        let g1 = vec![1.0, 0.4, -0.2, 0.1];
        let g2 = vec![0.5, -0.1, 0.3, 0.2];
        let sum: Vec<f64> = g1.iter().zip(&g2).map(|(a, b)| a + b).collect();
        let m = 3;
        let c1 = lag_window_cf(&AcfEstimate::from_gamma(g1, 50).unwrap(), m).unwrap();
        let c2 = lag_window_cf(&AcfEstimate::from_gamma(g2, 50).unwrap(), m).unwrap();
        let cs = lag_window_cf(&AcfEstimate::from_gamma(sum, 50).unwrap(), m).unwrap();
        assert_relative_eq!(cs, c1 + c2, epsilon = 1e-14);
    }

    #[test]
    fn ar1_cf_estimate_is_close_to_truth() {
        let phi = 0.5;
        let n = 20_000;
        let x = ar1(phi, n, 11);
        let m = (n as f64).powf(1.0 / 3.0).floor() as usize;
        let acf = autocovariance(&x, m).unwrap();
        let cf = lag_window_cf(&acf, m).unwrap();
        let truth = 1.0 / (2.0 * std::f64::consts::PI * (1.0 - phi) * (1.0 - phi));
        assert!((cf - truth).abs() / truth < 0.15, "cf={cf}, truth={truth}");
    }

    #[test]
    fn forced_white_noise_density_is_flat() {
        let acf = AcfEstimate::from_gamma(vec![1.0, 0.0, 0.0, 0.0], 100).unwrap();
        for &omega in &[0.0, 0.5, 1.5, std::f64::consts::PI] {
            assert_relative_eq!(
                spectral_density(&acf, 3, omega).unwrap(),
                1.0 / (2.0 * std::f64::consts::PI),
                epsilon = 1e-14
            );
        }
        let funcs = generalized_derivative_integrals(&acf, 3).unwrap();
        assert_relative_eq!(funcs.f1_zero, 0.0, epsilon = 1e-14);
        assert_relative_eq!(funcs.int_f1_sq, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn density_at_zero_equals_cf_estimate() {
        let x = ar1(0.4, 500, 3);
        let acf = autocovariance(&x, 40).unwrap();
        for m in [5, 17, 40] {
            assert_relative_eq!(
                spectral_density(&acf, m, 0.0).unwrap(),
                lag_window_cf(&acf, m).unwrap(),
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn density_is_symmetric_in_frequency() {
        let x = ar1(0.6, 400, 8);
        let acf = autocovariance(&x, 30).unwrap();
        for &omega in &[0.3, 1.1, 2.4] {
            assert_relative_eq!(
                spectral_density(&acf, 20, omega).unwrap(),
                spectral_density(&acf, 20, -omega).unwrap(),
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn ar1_derivative_at_zero_tracks_truncated_truth() {
        let phi = 0.5;
        let n = 20_000;
        let m = 10;
        let gamma0 = 1.0 / (1.0 - phi * phi);
        let truth: f64 = (1..=m)
            .map(|l| 2.0 * l as f64 * gamma0 * phi.powi(l as i32))
            .sum::<f64>()
            / (2.0 * std::f64::consts::PI);
        let mut estimates: Vec<f64> = (0..5)
            .map(|seed| {
                let x = ar1(phi, n, 29 + seed);
                let acf = autocovariance(&x, m).unwrap();
                generalized_derivative_integrals(&acf, m).unwrap().f1_zero
            })
            .collect();
        estimates.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = estimates[2];
        assert!(
            (median - truth).abs() / truth < 0.25,
            "median estimate {median} vs truth {truth}"
        );
    }

    #[test]
    fn select_cf_recovers_white_noise_level() {
        let mut rng = StdRng::seed_from_u64(41);
        let sigma = 0.8;
        let x: Vec<f64> = (0..5000)
            .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let est = select_cf(&x).unwrap();
        let truth = sigma * sigma / (2.0 * std::f64::consts::PI);
        assert!(
            (est.c_f - truth).abs() / truth < 0.2,
            "c_f={}, truth={truth}",
            est.c_f
        );
        assert!(est.iterations <= MAX_GLOBAL_ITERATIONS);
        assert!(est.window_width >= 1 && est.window_width < 5000);
    }

    #[test]
    fn select_cf_recovers_ar1_level() {
        let phi = 0.5;
        let x = ar1(phi, 5000, 13);
        let est = select_cf(&x).unwrap();
        let truth = 1.0 / (2.0 * std::f64::consts::PI * (1.0 - phi) * (1.0 - phi));
        assert!(
            (est.c_f - truth).abs() / truth < 0.25,
            "c_f={}, truth={truth}",
            est.c_f
        );
    }

    #[test]
    fn selected_width_is_insensitive_to_initial_width() {
        let x = ar1(0.5, 5000, 101);
        let a = select_cf_with_initial(&x, x.len() / 2).unwrap();
        let b = select_cf_with_initial(&x, x.len() / 4).unwrap();
        assert!(a.converged && b.converged);
        assert!(
            a.window_width.abs_diff(b.window_width) <= 1,
            "widths {} vs {}",
            a.window_width,
            b.window_width
        );
    }

    #[test]
    fn short_series_is_rejected() {
        assert!(select_cf(&[1.0; 10]).is_err());
    }
}
