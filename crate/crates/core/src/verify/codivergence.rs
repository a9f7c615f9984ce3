use serde::{Deserialize, Serialize};

use crate::energy::{energy_pq_mc, SamplerConfig};
use crate::error::{invalid, Result};
use crate::estimate::Estimate;
use crate::funcspace::{Domain, EnergyParams, FunctionModel};
use crate::seminorms::{second_diff_with, SeminormMethod};

/// Heuristic trend of a truncated quantity along a shrinking cutoff schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trend {
    Converging,
    Diverging,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CodivergenceConfig {
    /// Strictly decreasing positive cutoffs.
    pub cutoffs: Vec<f64>,
    pub samples: u64,
    pub seed: u64,
    /// Its `r_min` is replaced by the last cutoff and its `cutoff` by each
    /// schedule entry, so the energies along the schedule share their draws.
    pub sampler: SamplerConfig,
    pub seminorm: SeminormMethod,
    /// Converging: relative change on the last step below this.
    pub converge_tol: f64,
    /// Diverging: growth per decade on the last step above this.
    pub diverge_growth: f64,
}

impl Default for CodivergenceConfig {
    fn default() -> Self {
        Self {
            cutoffs: vec![1e-1, 1e-2, 1e-3],
            samples: 1 << 18,
            seed: 0,
            sampler: SamplerConfig::default(),
            seminorm: SeminormMethod::auto(1),
            converge_tol: 0.05,
            diverge_growth: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodivergenceReport {
    pub cutoffs: Vec<f64>,
    pub seminorm: Vec<Estimate>,
    pub energy: Vec<Estimate>,
    pub seminorm_trend: Trend,
    pub energy_trend: Trend,
    /// Both trends conclusive and equal.
    pub agree: bool,
    pub flagged: bool,
}

/// Trend from the last two entries of `values` along `cutoffs`.
pub fn classify(values: &[f64], cutoffs: &[f64], converge_tol: f64, diverge_growth: f64) -> Trend {
    let k = values.len();
    if k < 2 || cutoffs.len() != k {
        return Trend::Inconclusive;
    }
    let (prev, last) = (values[k - 2], values[k - 1]);
    if prev == 0.0 && last == 0.0 {
        return Trend::Converging;
    }
    if (last - prev).abs() < converge_tol * last.abs() {
        return Trend::Converging;
    }
    let decades = (cutoffs[k - 2] / cutoffs[k - 1]).log10();
    if prev > 0.0 && last > 0.0 && (last / prev).powf(1.0 / decades) > diverge_growth {
        return Trend::Diverging;
    }
    Trend::Inconclusive
}

/// Cutoff-truncated `[f]^p` (offsets `|h| ≥ ε`) and `E_{p,q}` (tuples with
/// `max|x_i − x_0| ≥ ε`) along the schedule, classified separately. The
/// thresholds are heuristics: agreement is evidence, not proof.
pub fn codivergence_probe(
    f: &FunctionModel,
    params: &EnergyParams,
    domain: &Domain,
    config: &CodivergenceConfig,
) -> Result<CodivergenceReport> {
    let cut = &config.cutoffs;
    if cut.len() < 2 {
        return invalid("the cutoff schedule needs at least two entries");
    }
    if cut.iter().any(|c| !(*c > 0.0 && c.is_finite())) || cut.windows(2).any(|w| w[1] >= w[0]) {
        return invalid("cutoffs must be positive and strictly decreasing");
    }
    let (s, p) = (params.s(), params.p());
    let smallest = *cut.last().expect("nonempty");
    let mut seminorm = Vec::with_capacity(cut.len());
    let mut energy = Vec::with_capacity(cut.len());
    for &eps in cut {
        seminorm.push(second_diff_with(f, domain, s, p, eps, config.seminorm)?.estimate);
        let sampler = SamplerConfig {
            r_min: Some(smallest),
            cutoff: eps,
            ..config.sampler
        };
        energy.push(energy_pq_mc(f, domain, params, &sampler, config.samples, config.seed)?.estimate);
    }
    let trend = |es: &[Estimate]| {
        let v: Vec<f64> = es.iter().map(|e| e.value).collect();
        classify(&v, cut, config.converge_tol, config.diverge_growth)
    };
    let (seminorm_trend, energy_trend) = (trend(&seminorm), trend(&energy));
    let agree = seminorm_trend == energy_trend && seminorm_trend != Trend::Inconclusive;
    Ok(CodivergenceReport {
        cutoffs: cut.clone(),
        seminorm,
        energy,
        seminorm_trend,
        energy_trend,
        agree,
        flagged: !agree,
    })
}
