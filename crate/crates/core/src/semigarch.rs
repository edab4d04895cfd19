//! Volatility decomposition: a smooth local scale times a unit GARCH(1,1).
//!
//! Centered returns are log-squared, the resulting additive trend is
//! smoothed by the data-driven P-spline, and the scale function is recovered
//! as `C_eps * exp(m_hat)` where `C_eps` is fixed by the unit-variance
//! identification of the standardized returns. A GARCH(1,1) with unit
//! unconditional variance is then fitted to the standardized returns by
//! quasi maximum likelihood.

use crate::dist::ln_gamma;
use crate::error::{Error, Result};
use crate::float::Float;
use crate::ipi::{self, IpiConfig, IpiResult};
use crate::optim::nelder_mead_2d;

/// Keeps `alpha_1 + beta_1` strictly below one inside the optimizer.
const STATIONARITY_MARGIN: f64 = 1e-6;

/// Innovation distribution of the standardized returns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Innovation<F> {
    Normal,
    /// Student-t rescaled to unit variance; requires `nu > 4` so the
    /// fourth-moment condition behind the scale estimator holds.
    StudentT { nu: F },
}

impl<F: Float> Innovation<F> {
    fn validate_for_fit(&self) -> Result<()> {
        if let Innovation::StudentT { nu } = self {
            if !(*nu > F::cast(4.0)) {
                return Err(Error::InvalidInput(format!(
                    "Student-t innovations require nu > 4, got {nu}"
                )));
            }
        }
        Ok(())
    }
}

/// Centered return series on the rescaled time grid.
#[derive(Debug, Clone)]
pub struct ReturnSeries<F> {
    /// Raw log-returns.
    pub returns: Vec<F>,
    /// Sample mean of the returns.
    pub mean: F,
    /// Returns with the sample mean removed.
    pub centered: Vec<F>,
    /// Rescaled times `tau_t = (t - 0.5)/n`.
    pub times: Vec<F>,
}

impl<F: Float> ReturnSeries<F> {
    fn new(returns: Vec<F>) -> Result<Self> {
        let n = returns.len();
        if n == 0 {
            return Err(Error::InvalidInput(
                "at least one return is required".into(),
            ));
        }
        if returns.iter().any(|r| !r.is_finite()) {
            return Err(Error::InvalidInput("returns must be finite".into()));
        }
        let nf = F::from_count(n);
        let mean = returns.iter().copied().sum::<F>() / nf;
        let centered: Vec<F> = returns.iter().map(|&r| r - mean).collect();
        let times: Vec<F> = (1..=n)
            .map(|t| (F::from_count(t) - F::cast(0.5)) / nf)
            .collect();
        Ok(Self {
            returns,
            mean,
            centered,
            times,
        })
    }

    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }

    /// Centered returns with exact zeros replaced by the smallest nonzero
    /// magnitude in the sample, plus the replacement count. Zeros have
    /// probability zero under the model but do occur in recorded prices,
    /// and the log transform cannot accept them.
    pub fn centered_nonzero(&self) -> Result<(Vec<F>, usize)> {
        let smallest = self
            .centered
            .iter()
            .filter(|r| **r != F::zero())
            .map(|r| r.abs())
            .fold(F::infinity(), F::min);
        if !smallest.is_finite() {
            return Err(Error::DegenerateInput(
                "all centered returns are zero".into(),
            ));
        }
        let mut replaced = 0;
        let values = self
            .centered
            .iter()
            .map(|&r| {
                if r == F::zero() {
                    replaced += 1;
                    smallest
                } else {
                    r
                }
            })
            .collect();
        Ok((values, replaced))
    }
}

/// Log-returns from a positive price series.
pub fn to_returns<F: Float>(prices: &[F]) -> Result<ReturnSeries<F>> {
    if prices.len() < 2 {
        return Err(Error::InvalidInput(
            "at least two prices are required".into(),
        ));
    }
    if prices.iter().any(|p| !(*p > F::zero()) || !p.is_finite()) {
        return Err(Error::InvalidInput(
            "prices must be finite and strictly positive".into(),
        ));
    }
    let returns: Vec<F> = prices.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    ReturnSeries::new(returns)
}

/// Wraps an already-computed return series.
pub fn from_returns<F: Float>(returns: &[F]) -> Result<ReturnSeries<F>> {
    ReturnSeries::new(returns.to_vec())
}

/// Log-squared centered returns `y_t = ln((r_t^*)^2)`.
pub fn log_transform<F: Float>(rs: &ReturnSeries<F>) -> Result<Vec<F>> {
    let (centered, _) = rs.centered_nonzero()?;
    Ok(centered.iter().map(|&r| (r * r).ln()).collect())
}

/// Estimated scale function and the diagnostics behind it.
#[derive(Debug, Clone)]
pub struct ScaleFit<F> {
    /// Smoothed trend of the log-squared returns.
    pub m_hat: Vec<F>,
    /// Multiplicative constant fixed by the unit-variance identification.
    pub c_eps: F,
    /// Local variance `v_hat(tau_t) = c_eps * exp(m_hat(tau_t))`.
    pub v_hat: Vec<F>,
    /// Selected penalty.
    pub lambda_hat: F,
    /// Full record of the penalty selection.
    pub ipi: IpiResult<F>,
    /// Number of exact-zero centered returns replaced before the log
    /// transform.
    pub zero_replacements: usize,
}

/// Fitted unit GARCH(1,1) parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GarchParams<F> {
    pub alpha1: F,
    pub beta1: F,
    /// Scale coefficient implied by the unit-variance restriction,
    /// `1 - alpha1 - beta1`.
    pub alpha0: F,
    pub dist: Innovation<F>,
    /// Maximized conditional log-likelihood.
    pub loglik: F,
}

/// Complete pipeline output.
#[derive(Debug, Clone)]
pub struct SemiGarchFit<F> {
    pub returns: ReturnSeries<F>,
    pub scale: ScaleFit<F>,
    pub garch: GarchParams<F>,
    /// Standardized returns `xi_t = r_t^* / sqrt(v_hat(tau_t))`.
    pub xi: Vec<F>,
    /// Conditional variances from the fitted recursion.
    pub h: Vec<F>,
    /// Total volatility `sqrt(v_hat(tau_t) * h_t)`.
    pub sigma_total: Vec<F>,
}

impl<F: Float> SemiGarchFit<F> {
    /// Scale forecast used for out-of-sample work: `v_hat` at the last
    /// in-sample time.
    pub fn scale_at_end(&self) -> F {
        *self.scale.v_hat.last().expect("fit is non-empty")
    }
}

/// Estimates the scale function by smoothing the log-squared returns.
pub fn estimate_scale<F: Float>(
    rs: &ReturnSeries<F>,
    config: &IpiConfig<F>,
) -> Result<ScaleFit<F>> {
    let (centered, zero_replacements) = rs.centered_nonzero()?;
    let y: Vec<F> = centered.iter().map(|&r| (r * r).ln()).collect();
    let ipi = ipi::select_lambda(&y, config)?;

    // c_eps = mean of exp(y - m_hat) makes the standardized returns have
    // unit sample variance by construction.
    let n = rs.len();
    let nf = F::from_count(n);
    let c_eps = y
        .iter()
        .zip(ipi.fit.fitted.iter())
        .map(|(&yt, &mt)| (yt - mt).exp())
        .sum::<F>()
        / nf;
    if !(c_eps > F::zero() && c_eps.is_finite()) {
        return Err(Error::NumericFailure(format!(
            "scale constant is not positive: {c_eps}"
        )));
    }
    let v_hat: Vec<F> = ipi.fit.fitted.iter().map(|&mt| c_eps * mt.exp()).collect();

    Ok(ScaleFit {
        m_hat: ipi.fit.fitted.clone(),
        c_eps,
        v_hat,
        lambda_hat: ipi.lambda_hat,
        ipi,
        zero_replacements,
    })
}

/// Conditional-variance recursion `h_t = alpha0 + alpha1 xi_{t-1}^2 +
/// beta1 h_{t-1}` started at `h_init`.
pub fn garch_filter<F: Float>(params: &GarchParams<F>, xi: &[F], h_init: F) -> Vec<F> {
    let mut h = Vec::with_capacity(xi.len());
    let mut prev = h_init;
    for (t, _) in xi.iter().enumerate() {
        if t == 0 {
            h.push(h_init);
            continue;
        }
        prev = garch_step(params, xi[t - 1] * xi[t - 1], prev);
        h.push(prev);
    }
    h
}

/// One step of the recursion given the previous squared observation and
/// conditional variance.
pub fn garch_step<F: Float>(params: &GarchParams<F>, xi_sq_prev: F, h_prev: F) -> F {
    params.alpha0 + params.alpha1 * xi_sq_prev + params.beta1 * h_prev
}

fn mean_square<F: Float>(xi: &[F]) -> F {
    xi.iter().map(|&x| x * x).sum::<F>() / F::from_count(xi.len())
}

/// Negative conditional log-likelihood of the unit GARCH(1,1) at
/// `(alpha1, beta1)`.
fn negative_loglik<F: Float>(xi: &[F], alpha1: F, beta1: F, dist: &Innovation<F>) -> F {
    let alpha0 = F::one() - alpha1 - beta1;
    let mut h = F::one();
    let mut nll = F::zero();
    let half = F::cast(0.5);
    match dist {
        Innovation::Normal => {
            let ln_two_pi = (F::cast(2.0) * F::PI()).ln();
            for t in 0..xi.len() {
                if t > 0 {
                    h = alpha0 + alpha1 * xi[t - 1] * xi[t - 1] + beta1 * h;
                }
                nll += half * (ln_two_pi + h.ln() + xi[t] * xi[t] / h);
            }
        }
        Innovation::StudentT { nu } => {
            let nu = *nu;
            // Variance-one rescaling: xi = s * T with s = sqrt((nu-2)/nu).
            let s = ((nu - F::cast(2.0)) / nu).sqrt();
            let ln_norm = ln_gamma((nu + F::one()) * half)
                - ln_gamma(nu * half)
                - half * (nu * F::PI()).ln()
                - s.ln();
            let exponent = (nu + F::one()) * half;
            for t in 0..xi.len() {
                if t > 0 {
                    h = alpha0 + alpha1 * xi[t - 1] * xi[t - 1] + beta1 * h;
                }
                let z = xi[t] / (s * h.sqrt());
                nll -= ln_norm - half * h.ln() - exponent * (F::one() + z * z / nu).ln();
            }
        }
    }
    nll
}

/// Maximum-likelihood fit of the unit GARCH(1,1) to standardized returns.
///
/// The unit-variance restriction substitutes `alpha0 = 1 - alpha1 - beta1`,
/// so only `(alpha1, beta1)` are free. They are optimized by Nelder-Mead on
/// a logistic simplex parameterization that keeps `alpha1, beta1 >= 0` and
/// `alpha1 + beta1 <= 1 - 1e-6`.
pub fn fit_unit_garch<F: Float>(xi: &[F], dist: Innovation<F>) -> Result<GarchParams<F>> {
    dist.validate_for_fit()?;
    if xi.len() < 250 {
        return Err(Error::InvalidInput(format!(
            "GARCH fitting requires at least 250 observations, got {}",
            xi.len()
        )));
    }
    if xi.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(
            "standardized returns must be finite".into(),
        ));
    }
    let ms = mean_square(xi);
    if (ms - F::one()).abs() > F::cast(0.1) {
        return Err(Error::InvalidInput(format!(
            "standardized returns must have unit variance (within 10%), got {ms}"
        )));
    }

    let cap = F::one() - F::cast(STATIONARITY_MARGIN);
    let to_coefs = |p: &[F; 2]| -> (F, F) {
        let eu = p[0].exp();
        let ew = p[1].exp();
        let denom = F::one() + eu + ew;
        (cap * eu / denom, cap * ew / denom)
    };

    // Start at (alpha1, beta1) = (0.1, 0.8).
    let start = [
        F::cast((0.1f64 / 0.1).ln()),
        F::cast((0.8f64 / 0.1).ln()),
    ];
    let outcome = nelder_mead_2d(
        |p: &[F; 2]| {
            let (a, b) = to_coefs(p);
            negative_loglik(xi, a, b, &dist)
        },
        start,
        F::cast(0.5),
        F::cast(1e-10),
        600,
    );

    let (alpha1, beta1) = to_coefs(&outcome.point);
    let params = GarchParams {
        alpha1,
        beta1,
        alpha0: F::one() - alpha1 - beta1,
        dist,
        loglik: -outcome.value,
    };
    if !outcome.converged {
        return Err(Error::GarchNoConvergence {
            alpha1: alpha1.as_f64(),
            beta1: beta1.as_f64(),
            loglik: params.loglik.as_f64(),
        });
    }
    Ok(params)
}

/// Runs the full pipeline: scale estimation, standardization, unit GARCH
/// fit and total volatility.
pub fn fit_semigarch<F: Float>(
    rs: ReturnSeries<F>,
    config: &IpiConfig<F>,
    dist: Innovation<F>,
) -> Result<SemiGarchFit<F>> {
    let scale = estimate_scale(&rs, config)?;
    let (centered, _) = rs.centered_nonzero()?;
    let xi: Vec<F> = centered
        .iter()
        .zip(scale.v_hat.iter())
        .map(|(&r, &v)| r / v.sqrt())
        .collect();
    let garch = fit_unit_garch(&xi, dist)?;
    let h = garch_filter(&garch, &xi, F::one());
    let sigma_total: Vec<F> = scale
        .v_hat
        .iter()
        .zip(h.iter())
        .map(|(&v, &ht)| (v * ht).sqrt())
        .collect();
    Ok(SemiGarchFit {
        returns: rs,
        scale,
        garch,
        xi,
        h,
        sigma_total,
    })
}
