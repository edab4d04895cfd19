//! Monte-Carlo study comparing constant-scale GARCH volatility estimates
//! against the smooth-scale pipeline.
//!
//! Each replication simulates returns with a known scale function and unit
//! GARCH(1,1) errors, estimates the total volatility under the
//! constant-scale model (CS) and the P-spline pipeline (PC) for each knot
//! count in the sweep, and reports the mean average absolute volatility
//! error together with its percentage reduction relative to CS.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::float::Float;
use crate::ipi::IpiConfig;
use crate::semigarch::{self, Innovation};

/// Scale function `v(tau)` of the data-generating process.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ScaleFn {
    /// Constant local variance.
    Constant(f64),
    /// `v(tau) = (1 + amplitude * sin(2 pi tau))^2`; needs `|amplitude| < 1`.
    SineSquared { amplitude: f64 },
    /// Values on an equispaced grid over `[0, 1]`, interpolated linearly.
    Tabulated(Vec<f64>),
}

impl ScaleFn {
    pub fn evaluate(&self, tau: f64) -> f64 {
        match self {
            ScaleFn::Constant(c) => *c,
            ScaleFn::SineSquared { amplitude } => {
                let s = 1.0 + amplitude * (2.0 * std::f64::consts::PI * tau).sin();
                s * s
            }
            ScaleFn::Tabulated(values) => {
                let m = values.len();
                let pos = tau.clamp(0.0, 1.0) * (m - 1) as f64;
                let lo = pos.floor() as usize;
                if lo + 1 >= m {
                    values[m - 1]
                } else {
                    let w = pos - lo as f64;
                    values[lo] * (1.0 - w) + values[lo + 1] * w
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            ScaleFn::Constant(c) => *c > 0.0 && c.is_finite(),
            ScaleFn::SineSquared { amplitude } => amplitude.abs() < 1.0,
            ScaleFn::Tabulated(values) => {
                values.len() >= 2 && values.iter().all(|v| *v > 0.0 && v.is_finite())
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(
                "scale function must be strictly positive on [0, 1]".into(),
            ))
        }
    }
}

/// Design of one study: data-generating process, sample size, replication
/// count, seed and the knot counts to sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimDesign {
    pub scale_fn: ScaleFn,
    pub alpha1: f64,
    pub beta1: f64,
    pub n: usize,
    pub replications: usize,
    pub seed: u64,
    pub knot_grid: Vec<usize>,
}

/// Default knot sweep `10, 20, ..., 70`.
pub fn default_knot_grid() -> Vec<usize> {
    (1..=7).map(|i| 10 * i).collect()
}

impl SimDesign {
    pub fn validate(&self) -> Result<()> {
        self.scale_fn.validate()?;
        if !(self.alpha1 >= 0.0 && self.beta1 >= 0.0 && self.alpha1 + self.beta1 < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "GARCH coefficients must be non-negative with alpha1 + beta1 < 1, got ({}, {})",
                self.alpha1, self.beta1
            )));
        }
        if self.replications == 0 {
            return Err(Error::InvalidConfig("at least one replication is required".into()));
        }
        if self.knot_grid.is_empty() {
            return Err(Error::InvalidConfig("knot grid must be non-empty".into()));
        }
        for &k in &self.knot_grid {
            if k < 1 || self.n < 2 * (4 + k) {
                return Err(Error::InvalidConfig(format!(
                    "knot count {k} is infeasible for n = {}",
                    self.n
                )));
            }
        }
        if self.n < 250 {
            return Err(Error::InvalidConfig(format!(
                "sample size {} is too small for GARCH fitting",
                self.n
            )));
        }
        Ok(())
    }

    /// Per-replication RNG seed derived from the master seed by counter, so
    /// results do not depend on scheduling order.
    pub fn replication_seed(&self, replication: usize) -> u64 {
        splitmix64(
            self.seed
                .wrapping_add((replication as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
        )
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Simulates one replication: returns and the true total volatility.
pub fn simulate<F: Float>(design: &SimDesign, replication: usize) -> (Vec<F>, Vec<F>) {
    let mut rng = ChaCha8Rng::seed_from_u64(design.replication_seed(replication));
    let alpha0 = 1.0 - design.alpha1 - design.beta1;
    let n = design.n;
    let mut returns = Vec::with_capacity(n);
    let mut sigma = Vec::with_capacity(n);
    let mut h = 1.0f64;
    let mut xi_prev_sq = 0.0f64;
    for t in 0..n {
        if t > 0 {
            h = alpha0 + design.alpha1 * xi_prev_sq + design.beta1 * h;
        }
        let tau = (t as f64 + 0.5) / n as f64;
        let v = design.scale_fn.evaluate(tau);
        let eps: f64 = StandardNormal.sample(&mut rng);
        let xi = h.sqrt() * eps;
        xi_prev_sq = xi * xi;
        returns.push(F::cast(v.sqrt() * xi));
        sigma.push(F::cast((v * h).sqrt()));
    }
    (returns, sigma)
}

/// Mean average absolute error over replications:
/// `(1/J) sum_j (1/n) sum_t |estimate_{jt} - truth_{jt}|`.
pub fn maae<F: Float>(estimates: &[Vec<F>], truths: &[Vec<F>]) -> Result<F> {
    if estimates.is_empty() || estimates.len() != truths.len() {
        return Err(Error::InvalidInput(
            "estimate and truth arrays must be non-empty and congruent".into(),
        ));
    }
    let mut acc = F::zero();
    for (est, truth) in estimates.iter().zip(truths.iter()) {
        if est.len() != truth.len() || est.is_empty() {
            return Err(Error::InvalidInput(
                "estimate and truth arrays must be non-empty and congruent".into(),
            ));
        }
        let inner = est
            .iter()
            .zip(truth.iter())
            .fold(F::zero(), |a, (&e, &t)| a + (e - t).abs());
        acc += inner / F::from_count(est.len());
    }
    Ok(acc / F::from_count(estimates.len()))
}

/// Percentage error reduction `(1 - m_x / m_cs) * 100`.
pub fn rmaae<F: Float>(m_x: F, m_cs: F) -> Result<F> {
    if !(m_cs > F::zero()) {
        return Err(Error::InvalidInput(format!(
            "baseline error must be positive, got {m_cs}"
        )));
    }
    Ok((F::one() - m_x / m_cs) * F::cast(100.0))
}

/// One aggregate row of the study report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimRow {
    pub method: String,
    pub k: Option<usize>,
    pub maae: f64,
    pub rmaae_pct: f64,
    pub mean_lambda: Option<f64>,
}

/// Per-replication average absolute errors, for box-plot style output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationAae {
    pub replication: usize,
    pub cs: f64,
    /// Aligned with the design's knot grid.
    pub pc: Vec<f64>,
}

/// Study output: aggregates plus per-replication detail.
#[derive(Debug, Clone, Serialize)]
pub struct SimReport {
    pub design: SimDesign,
    pub m_cs: f64,
    pub rows: Vec<SimRow>,
    pub completed_replications: usize,
    pub failed_replications: usize,
    pub failures: Vec<String>,
    pub per_replication: Vec<ReplicationAae>,
}

impl SimReport {
    /// Aggregate rows as CSV (`method,K,maae_x1e4,rmaae_pct,mean_lambda`).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,K,maae_x1e4,rmaae_pct,mean_lambda\n");
        for row in &self.rows {
            let k = row.k.map(|k| k.to_string()).unwrap_or_default();
            let lambda = row
                .mean_lambda
                .map(|l| format!("{l:.6}"))
                .unwrap_or_default();
            out.push_str(&format!(
                "{},{},{:.4},{:.3},{}\n",
                row.method,
                k,
                row.maae * 1e4,
                row.rmaae_pct,
                lambda
            ));
        }
        out
    }

    /// Per-replication errors as CSV (`replication,method,K,aae`).
    pub fn per_replication_csv(&self) -> String {
        let mut out = String::from("replication,method,K,aae\n");
        for rep in &self.per_replication {
            out.push_str(&format!("{},CS,,{:.8e}\n", rep.replication, rep.cs));
            for (k, aae) in self.design.knot_grid.iter().zip(rep.pc.iter()) {
                out.push_str(&format!("{},PC,{},{:.8e}\n", rep.replication, k, aae));
            }
        }
        out
    }
}

struct ReplicationOutcome {
    replication: usize,
    cs_aae: f64,
    pc: Vec<(f64, f64)>, // (aae, selected lambda) per knot count
}

fn run_replication(design: &SimDesign, replication: usize) -> Result<ReplicationOutcome> {
    let (returns, sigma) = simulate::<f64>(design, replication);
    let n = design.n;
    let nf = n as f64;

    // Constant-scale comparator: unit GARCH on mean-removed, sd-scaled
    // returns, volatility scaled back up.
    let mean = returns.iter().sum::<f64>() / nf;
    let sd = (returns.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / nf).sqrt();
    if !(sd > 0.0) {
        return Err(Error::DegenerateInput("simulated returns are constant".into()));
    }
    let xi_cs: Vec<f64> = returns.iter().map(|r| (r - mean) / sd).collect();
    let cs_params = semigarch::fit_unit_garch(&xi_cs, Innovation::Normal)?;
    let h_cs = semigarch::garch_filter(&cs_params, &xi_cs, 1.0);
    let cs_aae = sigma
        .iter()
        .zip(h_cs.iter())
        .map(|(&s, &h)| (sd * h.sqrt() - s).abs())
        .sum::<f64>()
        / nf;

    let mut pc = Vec::with_capacity(design.knot_grid.len());
    for &k in &design.knot_grid {
        let rs = semigarch::from_returns(&returns)?;
        let config = IpiConfig::with_knots(n, k);
        let fit = semigarch::fit_semigarch(rs, &config, Innovation::Normal)?;
        let aae = sigma
            .iter()
            .zip(fit.sigma_total.iter())
            .map(|(&s, &est)| (est - s).abs())
            .sum::<f64>()
            / nf;
        pc.push((aae, fit.scale.lambda_hat));
    }

    Ok(ReplicationOutcome {
        replication,
        cs_aae,
        pc,
    })
}

/// Runs the full study. Replications execute in parallel on the ambient
/// rayon pool and are merged by index, so the report does not depend on
/// scheduling; failed replications are dropped from every aggregate and
/// counted.
pub fn run_study(design: &SimDesign) -> Result<SimReport> {
    design.validate()?;

    let outcomes: Vec<std::result::Result<ReplicationOutcome, String>> = (0..design.replications)
        .into_par_iter()
        .map(|rep| run_replication(design, rep).map_err(|e| format!("replication {rep}: {e}")))
        .collect();

    let mut completed = Vec::new();
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(o) => completed.push(o),
            Err(message) => failures.push(message),
        }
    }
    if completed.is_empty() {
        return Err(Error::NumericFailure(
            "every replication failed; see the failure log".into(),
        ));
    }
    let j = completed.len() as f64;
    let grid_len = design.knot_grid.len();

    let m_cs = completed.iter().map(|o| o.cs_aae).sum::<f64>() / j;
    let mut pc_maae = vec![0.0f64; grid_len];
    let mut lambda_mean = vec![0.0f64; grid_len];
    for outcome in &completed {
        for (i, &(aae, lambda)) in outcome.pc.iter().enumerate() {
            pc_maae[i] += aae;
            lambda_mean[i] += lambda;
        }
    }
    for i in 0..grid_len {
        pc_maae[i] /= j;
        lambda_mean[i] /= j;
    }

    let mut rows = vec![SimRow {
        method: "CS".into(),
        k: None,
        maae: m_cs,
        rmaae_pct: 0.0,
        mean_lambda: None,
    }];
    for (i, &k) in design.knot_grid.iter().enumerate() {
        rows.push(SimRow {
            method: "PC".into(),
            k: Some(k),
            maae: pc_maae[i],
            rmaae_pct: rmaae(pc_maae[i], m_cs)?,
            mean_lambda: Some(lambda_mean[i]),
        });
    }

    let per_replication = completed
        .iter()
        .map(|o| ReplicationAae {
            replication: o.replication,
            cs: o.cs_aae,
            pc: o.pc.iter().map(|&(aae, _)| aae).collect(),
        })
        .collect();

    Ok(SimReport {
        design: design.clone(),
        m_cs,
        rows,
        completed_replications: completed.len(),
        failed_replications: failures.len(),
        failures,
        per_replication,
    })
}
