use serde::{Deserialize, Serialize};

use super::mc::{energy_pq_mc, SamplerConfig};
use crate::error::{invalid, Result};
use crate::estimate::Estimate;
use crate::funcspace::{Domain, EnergyParams, FunctionModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coupling {
    /// Same seed for every `λ`: each sampled tuple is mapped through `x ↦ λx`.
    Coupled,
    /// Independent seeds per `λ`.
    Uncoupled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingProbe {
    pub coupling: Coupling,
    pub lambdas: Vec<f64>,
    pub estimates: Vec<Estimate>,
    /// Least-squares slope of `log E` against `log λ`.
    pub slope: f64,
    /// Weighted-regression standard error (uncoupled mode only).
    pub slope_stderr: Option<f64>,
}

/// `E_{p,q}(g_λ)` on `λU` for `g_λ(x) = λ^{1+s} g(x/λ)` and the fitted
/// log-log slope, which is `n` for the exponent `q` of `params`.
///
/// Use powers of two for `λ` to make coupled tuples exact images.
#[allow(clippy::too_many_arguments)]
pub fn energy_scaling_probe(
    g: &FunctionModel,
    domain: &Domain,
    params: &EnergyParams,
    lambdas: &[f64],
    sampler: &SamplerConfig,
    samples: u64,
    seed: u64,
    coupling: Coupling,
) -> Result<ScalingProbe> {
    if lambdas.len() < 2 {
        return invalid("the scaling probe needs at least two values of λ");
    }
    if lambdas.iter().any(|l| !(*l >= 1.0 && l.is_finite())) {
        return invalid("scaling factors must be finite and at least 1");
    }
    if let Some(support) = g.support() {
        let (lo, hi) = domain.bounding_box();
        let inside = (0..g.dim()).all(|k| support.lo[k] >= lo[k] && support.hi[k] <= hi[k]);
        if !inside {
            return invalid("the support of g escapes the domain");
        }
    }
    let mut estimates = Vec::with_capacity(lambdas.len());
    for (i, &lambda) in lambdas.iter().enumerate() {
        let f = g.rescaled(lambda, params.s())?;
        let u = domain.dilated(lambda);
        let sc = SamplerConfig {
            r_min: sampler.r_min.map(|r| r * lambda),
            r_max: sampler.r_max.map(|r| r * lambda),
            cutoff: sampler.cutoff * lambda,
            ..*sampler
        };
        let s = match coupling {
            Coupling::Coupled => seed,
            Coupling::Uncoupled => seed.wrapping_add(i as u64 + 1),
        };
        estimates.push(energy_pq_mc(&f, &u, params, &sc, samples, s)?.estimate);
    }
    let xs: Vec<f64> = lambdas.iter().map(|l| l.ln()).collect();
    let ys: Vec<f64> = estimates.iter().map(|e| e.value.ln()).collect();
    if ys.iter().any(|y| !y.is_finite()) {
        return invalid("the energy vanishes or is not finite: no slope can be fitted");
    }
    let (slope, slope_stderr) = match coupling {
        Coupling::Coupled => (fit(&xs, &ys, &vec![1.0; xs.len()]).0, None),
        Coupling::Uncoupled => {
            let w: Vec<f64> = estimates
                .iter()
                .map(|e| (e.value / e.stderr.max(1e-300)).powi(2))
                .collect();
            let (slope, se) = fit(&xs, &ys, &w);
            (slope, Some(se))
        }
    };
    Ok(ScalingProbe {
        coupling,
        lambdas: lambdas.to_vec(),
        estimates,
        slope,
        slope_stderr,
    })
}

/// Weighted least-squares slope and its standard error `1/sqrt(Σ w (x − x̄)²)`.
fn fit(x: &[f64], y: &[f64], w: &[f64]) -> (f64, f64) {
    let sw: f64 = w.iter().sum();
    let xm = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let ym = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let sxx: f64 = x.iter().zip(w).map(|(a, b)| b * (a - xm) * (a - xm)).sum();
    let sxy: f64 = x.iter().zip(y).zip(w).map(|((a, c), b)| b * (a - xm) * (c - ym)).sum();
    (sxy / sxx, 1.0 / sxx.sqrt())
}
