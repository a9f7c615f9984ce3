use serde::{Deserialize, Serialize};

use crate::energy::{energy_pq_mc, SamplerConfig};
use crate::error::{invalid, Result};
use crate::estimate::{Estimate, Outcome};
use crate::funcspace::{BoxRegion, Domain, EnergyParams, FunctionModel};
use crate::seminorms::{dorronsoro_seminorm, second_diff_with, DorronsoroConfig, SeminormMethod};

/// Sampling of an equivalence experiment. Every member uses the same seed, so
/// relabeling the catalog does not change any row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EquivalenceConfig {
    pub samples: u64,
    pub seed: u64,
    pub sampler: SamplerConfig,
    pub seminorm: SeminormMethod,
    /// Optional upper bound on the spread; exceeding it flags the report.
    pub spread_bound: Option<f64>,
}

impl Default for EquivalenceConfig {
    fn default() -> Self {
        Self {
            samples: 1 << 18,
            seed: 0,
            sampler: SamplerConfig::default(),
            seminorm: SeminormMethod::auto(1),
            spread_bound: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub name: String,
    pub numerator: Estimate,
    pub seminorm: Estimate,
    pub ratio: f64,
    /// First-order propagation of both relative errors.
    pub ratio_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Excluded {
    pub name: String,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioSummary {
    pub min: f64,
    pub max: f64,
    /// `max / min`.
    pub spread: f64,
}

/// Ratios `numerator / [f]^p` over a catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    /// What the numerator is (`energy` or `dorronsoro`).
    pub numerator: String,
    pub rows: Vec<RatioRow>,
    pub excluded: Vec<Excluded>,
    /// `None` when every member was excluded.
    pub summary: Option<RatioSummary>,
    pub spread_bound: Option<f64>,
    /// Set when a member was excluded or the spread exceeds the bound.
    pub flagged: bool,
}

impl RatioReport {
    pub fn spread(&self) -> Option<f64> {
        self.summary.map(|s| s.spread)
    }
}

fn reason(o: &Outcome, what: &str) -> Option<String> {
    let v = o.value();
    if !v.is_finite() {
        return Some(format!("{what} is not finite"));
    }
    if o.flagged {
        let names: Vec<&str> = o.diagnostics.iter().map(|d| d.name.as_str()).collect();
        return Some(format!("{what} failed its convergence checks ({})", names.join(", ")));
    }
    None
}

fn build(
    label: &str,
    catalog: &[FunctionModel],
    spread_bound: Option<f64>,
    numerator: impl Fn(&FunctionModel) -> Result<Outcome>,
    seminorm: impl Fn(&FunctionModel) -> Result<Outcome>,
) -> Result<RatioReport> {
    if catalog.is_empty() {
        return invalid("the catalog is empty");
    }
    if let Some(b) = spread_bound {
        if !(b >= 1.0) {
            return invalid("a spread bound must be at least 1");
        }
    }
    let mut rows = Vec::new();
    let mut excluded = Vec::new();
    for f in catalog {
        let name = f.label().to_string();
        let den = seminorm(f)?;
        if let Some(r) = reason(&den, "[f]^p") {
            excluded.push(Excluded { name, reason: r });
            continue;
        }
        if !(den.value() > 0.0) {
            excluded.push(Excluded {
                name,
                reason: "[f]^p vanishes".into(),
            });
            continue;
        }
        let num = numerator(f)?;
        if let Some(r) = reason(&num, label) {
            excluded.push(Excluded { name, reason: r });
            continue;
        }
        let (a, b) = (&num.estimate, &den.estimate);
        let ratio = a.value / b.value;
        let ratio_stderr = ratio.abs() * a.relative_error().hypot(b.relative_error());
        rows.push(RatioRow {
            name,
            numerator: num.estimate,
            seminorm: den.estimate,
            ratio,
            ratio_stderr,
        });
    }
    let summary = (!rows.is_empty()).then(|| {
        let min = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
        let max = rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
        RatioSummary {
            min,
            max,
            spread: max / min,
        }
    });
    let over = match (summary, spread_bound) {
        (Some(s), Some(b)) => s.spread > b,
        _ => false,
    };
    Ok(RatioReport {
        numerator: label.into(),
        rows,
        flagged: !excluded.is_empty() || over,
        excluded,
        summary,
        spread_bound,
    })
}

/// `E_{p,q}(f) / [f]^p` for each catalog member on `U`. Members whose seminorm
/// or energy estimate fails its convergence checks are excluded and listed.
pub fn equivalence_experiment(
    catalog: &[FunctionModel],
    params: &EnergyParams,
    domain: &Domain,
    config: &EquivalenceConfig,
) -> Result<RatioReport> {
    let (s, p) = (params.s(), params.p());
    build(
        "energy",
        catalog,
        config.spread_bound,
        |f| energy_pq_mc(f, domain, params, &config.sampler, config.samples, config.seed),
        |f| second_diff_with(f, domain, s, p, 0.0, config.seminorm),
    )
}

/// `⟦f⟧^p / [f]^p` for each catalog member. The Dorronsoro integral runs over
/// the member's support box, or the bounding box of `U` when it has none;
/// `config.samples` and `config.seed` override those of `dorronsoro`.
pub fn dorronsoro_experiment(
    catalog: &[FunctionModel],
    s: f64,
    p: f64,
    domain: &Domain,
    config: &EquivalenceConfig,
    dorronsoro: &DorronsoroConfig,
) -> Result<RatioReport> {
    let (lo, hi) = domain.bounding_box();
    build(
        "dorronsoro",
        catalog,
        config.spread_bound,
        |f| {
            let cfg = DorronsoroConfig {
                spatial_box: dorronsoro
                    .spatial_box
                    .clone()
                    .or_else(|| f.support().cloned())
                    .or_else(|| Some(BoxRegion::new(lo.clone(), hi.clone()))),
                samples: config.samples,
                seed: config.seed,
                ..dorronsoro.clone()
            };
            dorronsoro_seminorm(f, s, p, &cfg)
        },
        |f| second_diff_with(f, domain, s, p, 0.0, config.seminorm),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::{test_function, FunctionParams};

    fn setup() -> (Domain, EnergyParams, EquivalenceConfig) {
        let u = Domain::truncated_full_space(vec![-1.0], vec![1.0], 0.5).unwrap();
        let params = EnergyParams::new(1, 0.5, 3.0).unwrap();
        let cfg = EquivalenceConfig {
            samples: 20_000,
            seed: 2,
            ..Default::default()
        };
        (u, params, cfg)
    }

    #[test]
    fn single_member_has_unit_spread() {
        let (u, params, cfg) = setup();
        let f = test_function("compact-bump", 1, &FunctionParams::new()).unwrap();
        let r = equivalence_experiment(&[f], &params, &u, &cfg).unwrap();
        assert_eq!(r.spread(), Some(1.0));
        assert!(!r.flagged);
        assert!(r.rows[0].ratio > 0.0 && r.rows[0].ratio_stderr > 0.0);
    }

    #[test]
    fn amplitude_copies_leave_the_spread_unchanged() {
        let (u, params, cfg) = setup();
        let f = test_function("compact-bump", 1, &FunctionParams::new()).unwrap();
        let g = test_function("sine-pack", 1, &FunctionParams::new()).unwrap();
        let base = equivalence_experiment(&[f.clone(), g.clone()], &params, &u, &cfg).unwrap();
        let more = [f.clone(), g, f.scaled(2.0), f.scaled(10.0)];
        let wider = equivalence_experiment(&more, &params, &u, &cfg).unwrap();
        let (a, b) = (base.spread().unwrap(), wider.spread().unwrap());
        assert!((a - b).abs() < 1e-10 * a, "{a} vs {b}");
    }

    #[test]
    fn relabeling_is_exact() {
        let (u, params, cfg) = setup();
        let f = test_function("compact-bump", 1, &FunctionParams::new()).unwrap();
        let g = test_function("gaussian-bump", 1, &FunctionParams::new()).unwrap();
        let a = equivalence_experiment(&[f.clone(), g.clone()], &params, &u, &cfg).unwrap();
        let b = equivalence_experiment(&[g, f], &params, &u, &cfg).unwrap();
        assert_eq!(a.summary, b.summary);
    }

    #[test]
    fn divergent_member_is_excluded() {
        let u = Domain::interval(-1.0, 1.0).unwrap();
        let params = EnergyParams::new(1, 0.5, 3.0).unwrap();
        let cusp = test_function("power-cusp", 1, &FunctionParams::new()).unwrap();
        let f = test_function("compact-bump", 1, &FunctionParams::new()).unwrap();
        let cfg = EquivalenceConfig {
            samples: 20_000,
            ..Default::default()
        };
        let r = equivalence_experiment(&[f, cusp], &params, &u, &cfg).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.excluded.len(), 1);
        assert_eq!(r.excluded[0].name, "power-cusp");
        assert!(r.flagged);
    }

    #[test]
    fn spread_bound_flags() {
        let (u, params, mut cfg) = setup();
        cfg.spread_bound = Some(1.0);
        let f = test_function("compact-bump", 1, &FunctionParams::new()).unwrap();
        let g = test_function("gaussian-bump", 1, &FunctionParams::new()).unwrap();
        let r = equivalence_experiment(&[f, g], &params, &u, &cfg).unwrap();
        assert!(r.spread().unwrap() > 1.0 && r.flagged);
    }
}
