//! Data-driven P-spline smoothing of time series and a semiparametric
//! GARCH volatility pipeline built on it.
//!
//! The crate provides, bottom up:
//!
//! - [`linalg`]: a small dense-matrix kernel with an SVD-based generalized
//!   inverse;
//! - [`pspline`]: the truncated-polynomial P-spline smoother on the
//!   equidistant time design, its MASE components and the plug-in penalty
//!   formula;
//! - [`spectral`]: Bartlett lag-window estimation of the error spectrum at
//!   frequency zero with data-driven window selection;
//! - [`ipi`]: the iterative plug-in selector for the spline penalty under
//!   correlated errors;
//! - [`semigarch`]: the volatility decomposition into a smooth local scale
//!   (from log-squared returns) times a unit GARCH(1,1);
//! - [`risk`]: one-day rolling VaR / expected-shortfall forecasts with
//!   traffic-light backtesting;
//! - [`sim`]: a seeded, replication-parallel Monte-Carlo study comparing
//!   the pipeline against a constant-scale GARCH.
//!
//! Everything is generic over the [`Float`] scalar; the aliases below fix
//! `f64`, which is what the CLI and the test suites use.

pub mod dist;
mod error;
mod float;
pub mod ipi;
pub mod linalg;
mod optim;
pub mod pspline;
pub mod risk;
pub mod semigarch;
pub mod sim;
pub mod spectral;

pub use error::{Error, Result};
pub use float::Float;

/// Dense `f64` matrix.
pub type Matrix = linalg::Matrix<f64>;
/// P-spline basis over `f64`.
pub type SplineBasis = pspline::SplineBasis<f64>;
/// P-spline fit over `f64`.
pub type SmootherFit = pspline::SmootherFit<f64>;
/// Sample autocovariances over `f64`.
pub type AcfEstimate = spectral::AcfEstimate<f64>;
/// Variance-factor estimate over `f64`.
pub type SpectralEstimate = spectral::SpectralEstimate<f64>;
/// Penalty-selector configuration over `f64`.
pub type IpiConfig = ipi::IpiConfig<f64>;
/// Penalty-selector result over `f64`.
pub type IpiResult = ipi::IpiResult<f64>;
/// Centered return series over `f64`.
pub type ReturnSeries = semigarch::ReturnSeries<f64>;
/// Scale-function fit over `f64`.
pub type ScaleFit = semigarch::ScaleFit<f64>;
/// Unit GARCH(1,1) parameters over `f64`.
pub type GarchParams = semigarch::GarchParams<f64>;
/// Innovation family over `f64`.
pub type Innovation = semigarch::Innovation<f64>;
/// Full pipeline fit over `f64`.
pub type SemiGarchFit = semigarch::SemiGarchFit<f64>;
/// Rolling risk forecast over `f64`.
pub type RiskForecast = risk::RiskForecast<f64>;
