//! One-day rolling VaR and expected-shortfall forecasts with traffic-light
//! backtesting.
//!
//! Forecasts descale the out-of-sample returns by the last estimated scale
//! value, roll the GARCH recursion forward one day at a time and scale the
//! innovation quantile (VaR) or tail mean (ES) back up. Losses are negative
//! returns; exceedances are counted as points over the threshold.

use serde::Serialize;

use crate::dist::{normal_pdf, normal_quantile, student_t_cdf, student_t_pdf, student_t_quantile};
use crate::error::{Error, Result};
use crate::float::Float;
use crate::semigarch::{garch_step, Innovation, SemiGarchFit};

/// Basel-style traffic-light verdict for a 250-day backtest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Zone {
    Green,
    Yellow,
    Red,
}

impl std::fmt::Display for Zone {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Zone::Green => write!(f, "green"),
            Zone::Yellow => write!(f, "yellow"),
            Zone::Red => write!(f, "red"),
        }
    }
}

/// Rolling one-day forecasts and their exceedance counts.
#[derive(Debug, Clone)]
pub struct RiskForecast<F> {
    /// Number of out-of-sample days.
    pub horizon: usize,
    /// Confidence level of both paths.
    pub alpha: F,
    pub var_path: Vec<F>,
    pub es_path: Vec<F>,
    /// Losses exceeding the VaR path.
    pub pot_var: usize,
    /// Losses exceeding the ES path.
    pub pot_es: usize,
    /// Traffic-light verdict for the VaR exceedances; only defined for the
    /// 250-day horizon at the two regulatory levels.
    pub zone: Option<Zone>,
}

fn validate_alpha<F: Float>(alpha: F) -> Result<()> {
    if !(alpha > F::zero() && alpha < F::one()) {
        return Err(Error::InvalidInput(format!(
            "confidence level must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(())
}

fn validate_nu<F: Float>(nu: F) -> Result<()> {
    if !(nu > F::cast(2.0)) {
        return Err(Error::InvalidInput(format!(
            "tail factors require nu > 2, got {nu}"
        )));
    }
    Ok(())
}

/// Expected shortfall of the variance-one rescaled Student-t:
/// `f_nu(t_nu^{-1}(alpha)) / (1 - alpha) * (nu + q^2) / (nu - 1) * sqrt((nu-2)/nu)`.
pub fn t_es_factor<F: Float>(nu: F, alpha: F) -> Result<F> {
    validate_nu(nu)?;
    validate_alpha(alpha)?;
    let q = student_t_quantile(alpha, nu)?;
    let density = student_t_pdf(q, nu);
    let tail = density / (F::one() - alpha);
    let curvature = (nu + q * q) / (nu - F::one());
    let rescale = ((nu - F::cast(2.0)) / nu).sqrt();
    Ok(tail * curvature * rescale)
}

/// Expected shortfall of the standard normal, `phi(z_alpha)/(1 - alpha)`.
pub fn normal_es_factor<F: Float>(alpha: F) -> Result<F> {
    validate_alpha(alpha)?;
    let z = normal_quantile(alpha)?;
    Ok(normal_pdf(z) / (F::one() - alpha))
}

/// `alpha`-quantile of the unit-variance innovation distribution.
pub fn var_factor<F: Float>(dist: Innovation<F>, alpha: F) -> Result<F> {
    validate_alpha(alpha)?;
    match dist {
        Innovation::Normal => normal_quantile(alpha),
        Innovation::StudentT { nu } => {
            validate_nu(nu)?;
            let q = student_t_quantile(alpha, nu)?;
            Ok(q * ((nu - F::cast(2.0)) / nu).sqrt())
        }
    }
}

/// ES factor for either innovation family.
pub fn es_factor<F: Float>(dist: Innovation<F>, alpha: F) -> Result<F> {
    match dist {
        Innovation::Normal => normal_es_factor(alpha),
        Innovation::StudentT { nu } => t_es_factor(nu, alpha),
    }
}

/// The VaR confidence level whose quantile equals the `alpha`-ES:
/// `alpha*(nu, alpha) = t_nu(ES * sqrt(nu/(nu-2)))`.
pub fn alpha_star<F: Float>(nu: F, alpha: F) -> Result<F> {
    let es = t_es_factor(nu, alpha)?;
    student_t_cdf(es * (nu / (nu - F::cast(2.0))).sqrt(), nu)
}

/// Rolling one-day forecasts over the held-out returns.
///
/// The scale forecast is held fixed at its last in-sample value; each
/// conditional variance uses information through the previous day only.
pub fn rolling_forecast<F: Float>(
    fit: &SemiGarchFit<F>,
    future_returns: &[F],
    alpha: F,
) -> Result<RiskForecast<F>> {
    validate_alpha(alpha)?;
    if future_returns.is_empty() {
        return Err(Error::InvalidInput(
            "at least one out-of-sample return is required".into(),
        ));
    }
    if future_returns.iter().any(|r| !r.is_finite()) {
        return Err(Error::InvalidInput(
            "out-of-sample returns must be finite".into(),
        ));
    }

    let horizon = future_returns.len();
    let v_end = fit.scale_at_end();
    let scale = v_end.sqrt();
    let mean = fit.returns.mean;
    let q = var_factor(fit.garch.dist, alpha)?;
    let es = es_factor(fit.garch.dist, alpha)?;

    // Seed the recursion with the last in-sample state.
    let mut xi_sq_prev = {
        let last = *fit.xi.last().expect("fit is non-empty");
        last * last
    };
    let mut h_prev = *fit.h.last().expect("fit is non-empty");

    let mut var_path = Vec::with_capacity(horizon);
    let mut es_path = Vec::with_capacity(horizon);
    let mut pot_var = 0;
    let mut pot_es = 0;
    for &r in future_returns {
        let h = garch_step(&fit.garch, xi_sq_prev, h_prev);
        let width = (v_end * h).sqrt();
        let var_t = -mean + width * q;
        let es_t = -mean + width * es;
        let loss = -r;
        if loss > var_t {
            pot_var += 1;
        }
        if loss > es_t {
            pot_es += 1;
        }
        var_path.push(var_t);
        es_path.push(es_t);

        // Descale the realized return for the next conditional variance.
        let xi = (r - mean) / scale;
        xi_sq_prev = xi * xi;
        h_prev = h;
    }

    let zone = if horizon == 250 {
        traffic_light(pot_var, alpha, horizon).ok()
    } else {
        None
    };

    Ok(RiskForecast {
        horizon,
        alpha,
        var_path,
        es_path,
        pot_var,
        pot_es,
        zone,
    })
}

/// Traffic-light verdict for a 250-day VaR backtest.
///
/// At the 99% level the zones are green `[0, 4]`, yellow `[5, 9]`, red from
/// 10. At 97.5% the green zone is `[0, 10]`; the yellow band `[11, 17]` and
/// red from 18 scale the 99% bands proportionally, a convention rather than
/// a regulatory boundary.
pub fn traffic_light<F: Float>(pot: usize, alpha: F, horizon: usize) -> Result<Zone> {
    if horizon != 250 {
        return Err(Error::InvalidConfig(format!(
            "traffic-light zones are defined for a 250-day horizon, got {horizon}"
        )));
    }
    let tol = F::cast(1e-9);
    let is_99 = (alpha - F::cast(0.99)).abs() < tol;
    let is_975 = (alpha - F::cast(0.975)).abs() < tol;
    if is_99 {
        Ok(match pot {
            0..=4 => Zone::Green,
            5..=9 => Zone::Yellow,
            _ => Zone::Red,
        })
    } else if is_975 {
        Ok(match pot {
            0..=10 => Zone::Green,
            11..=17 => Zone::Yellow,
            _ => Zone::Red,
        })
    } else {
        Err(Error::InvalidConfig(format!(
            "traffic-light zones are defined for alpha 0.99 or 0.975, got {alpha}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ipi::IpiConfig;
    use crate::semigarch::{fit_semigarch, from_returns};
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn t_es_factor_approaches_normal_limit() {
        let es_t = t_es_factor(1e6f64, 0.975).unwrap();
        let es_n = normal_es_factor(0.975f64).unwrap();
        assert!((es_t - es_n).abs() < 1e-3);
        assert_relative_eq!(es_n, 2.3378, epsilon = 1e-4);
    }

    #[test]
    fn t_es_factor_is_monotone_in_alpha() {
        let lo = t_es_factor(5.0f64, 0.975).unwrap();
        let hi = t_es_factor(5.0f64, 0.99).unwrap();
        assert!(hi > lo);
    }

    #[test]
    fn small_nu_is_rejected() {
        assert!(t_es_factor(2.0f64, 0.975).is_err());
        assert!(var_factor(Innovation::StudentT { nu: 1.5f64 }, 0.99).is_err());
        assert!(alpha_star(2.0f64, 0.975).is_err());
    }

    #[test]
    fn var_factor_normal_values() {
        assert_relative_eq!(
            var_factor(Innovation::<f64>::Normal, 0.5).unwrap(),
            0.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            var_factor(Innovation::<f64>::Normal, 0.99).unwrap(),
            2.3263,
            epsilon = 1e-4
        );
    }

    #[test]
    fn var_factor_t_approaches_normal() {
        let t = var_factor(Innovation::StudentT { nu: 1e6f64 }, 0.99).unwrap();
        let n = var_factor(Innovation::<f64>::Normal, 0.99).unwrap();
        assert!((t - n).abs() < 1e-3);
    }

    #[test]
    fn alpha_star_exceeds_99_percent() {
        let a = alpha_star(5.0f64, 0.975).unwrap();
        assert!(a > 0.99 && a < 1.0, "alpha* = {a}");
    }

    #[test]
    fn alpha_star_round_trips_through_var_factor() {
        for &nu in &[5.0f64, 8.0, 30.0] {
            let a_star = alpha_star(nu, 0.975).unwrap();
            let var = var_factor(Innovation::StudentT { nu }, a_star).unwrap();
            let es = t_es_factor(nu, 0.975).unwrap();
            assert_relative_eq!(var, es, epsilon = 1e-8);
        }
    }

    #[test]
    fn alpha_star_normal_limit() {
        let a = alpha_star(1e6f64, 0.975).unwrap();
        let expected = crate::dist::normal_cdf(normal_es_factor(0.975f64).unwrap());
        assert!((a - expected).abs() < 1e-3);
    }

    fn small_fit(seed: u64) -> crate::semigarch::SemiGarchFit<f64> {
        let mut rng = StdRng::seed_from_u64(seed);
        let n = 600;
        let returns: Vec<f64> = (0..n)
            .map(|_| 0.01 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let rs = from_returns(&returns).unwrap();
        let config = IpiConfig::with_knots(n, 10);
        fit_semigarch(rs, &config, Innovation::Normal).unwrap()
    }

    #[test]
    fn flat_dynamics_give_flat_paths() {
        let mut fit = small_fit(5);
        fit.garch.alpha1 = 0.0;
        fit.garch.beta1 = 0.0;
        fit.garch.alpha0 = 1.0;
        // Force the seed state onto the fixed point so every step stays there.
        for h in fit.h.iter_mut() {
            *h = 1.0;
        }
        let future = vec![0.0; 30];
        let forecast = rolling_forecast(&fit, &future, 0.99).unwrap();
        let expected = -fit.returns.mean
            + fit.scale_at_end().sqrt() * var_factor(Innovation::<f64>::Normal, 0.99).unwrap();
        for v in &forecast.var_path {
            assert_relative_eq!(*v, expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn first_step_matches_hand_recursion() {
        let mut fit = small_fit(9);
        fit.garch.alpha1 = 0.08;
        fit.garch.beta1 = 0.87;
        fit.garch.alpha0 = 0.05;
        fit.returns.mean = 0.0;
        let n = fit.scale.v_hat.len();
        fit.scale.v_hat[n - 1] = 4.0;
        *fit.xi.last_mut().unwrap() = 1.0;
        *fit.h.last_mut().unwrap() = 1.0;

        let forecast = rolling_forecast(&fit, &[0.001], 0.99).unwrap();
        // h_{n+1} = 0.05 + 0.08 + 0.87 = 1, so VaR = 2 * z_{0.99}.
        let z99 = var_factor(Innovation::<f64>::Normal, 0.99).unwrap();
        assert_relative_eq!(forecast.var_path[0], 2.0 * z99, epsilon = 1e-10);
    }

    #[test]
    fn es_path_dominates_var_path() {
        let fit = small_fit(13);
        let mut rng = StdRng::seed_from_u64(99);
        let future: Vec<f64> = (0..250)
            .map(|_| 0.01 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let forecast = rolling_forecast(&fit, &future, 0.975).unwrap();
        for (es, var) in forecast.es_path.iter().zip(forecast.var_path.iter()) {
            assert!(es >= var);
        }
        assert!(forecast.pot_es <= forecast.pot_var);
        assert!(forecast.pot_var <= forecast.horizon);
        assert!(forecast.zone.is_some());
    }

    #[test]
    fn forecasts_are_deterministic() {
        let fit = small_fit(21);
        let future: Vec<f64> = (0..40).map(|k| 0.001 * (k as f64 - 20.0)).collect();
        let a = rolling_forecast(&fit, &future, 0.99).unwrap();
        let b = rolling_forecast(&fit, &future, 0.99).unwrap();
        assert_eq!(a.var_path, b.var_path);
        assert_eq!(a.es_path, b.es_path);
    }

    #[test]
    fn empty_future_is_rejected() {
        let fit = small_fit(33);
        assert!(rolling_forecast(&fit, &[], 0.99).is_err());
    }

    #[test]
    fn traffic_light_zones() {
        assert_eq!(traffic_light(0, 0.99f64, 250).unwrap(), Zone::Green);
        assert_eq!(traffic_light(4, 0.99f64, 250).unwrap(), Zone::Green);
        assert_eq!(traffic_light(5, 0.99f64, 250).unwrap(), Zone::Yellow);
        assert_eq!(traffic_light(10, 0.99f64, 250).unwrap(), Zone::Red);
        assert_eq!(traffic_light(10, 0.975f64, 250).unwrap(), Zone::Green);
        assert_eq!(traffic_light(11, 0.975f64, 250).unwrap(), Zone::Yellow);
        assert_eq!(traffic_light(18, 0.975f64, 250).unwrap(), Zone::Red);
        assert!(traffic_light(3, 0.99f64, 100).is_err());
        assert!(traffic_light(3, 0.95f64, 250).is_err());
    }
}
