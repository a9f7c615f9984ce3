use menger_core::curves::{knot_energies, Polyline};
use menger_core::energy::{energy_pq_mc, energy_pq_quadrature_1d, energy_scaling_probe, SamplerConfig};
use menger_core::estimate::Estimate;
use menger_core::funcspace::{default_catalog, test_function, BoxRegion, FunctionParams, FunctionSpec};
use menger_core::seminorms::{dorronsoro_seminorm, gagliardo_with, second_diff_with, DorronsoroConfig, SeminormMethod};
use menger_core::verify::{
    codivergence_probe, dorronsoro_experiment, equivalence_experiment, estimate_w_measure, estimate_w_measure_in,
    laplace_audit, lemma_beta_audit, CodivergenceConfig, EquivalenceConfig, RatioReport,
};
use menger_core::{energy, Domain, EnergyParams, FunctionModel};
use serde_json::Value;

use crate::fail::{invalid, Fail};
use crate::opts::{Coupling, Curve, Kind, KnotEnergy, Method, Numerator, Opts, Sampler};
use crate::output::{Output, Table};

const DEFAULT_SAMPLES: u64 = 1 << 17;
const DEFAULT_TUPLES: u64 = 10_000;

fn need<T: Clone>(v: &Option<T>, key: &str) -> Result<T, Fail> {
    v.clone().ok_or_else(|| Fail::Validation(format!("missing --{key}")))
}

fn samples(o: &Opts) -> u64 {
    o.samples.map_or(DEFAULT_SAMPLES, |c| c.0)
}

fn seed(o: &Opts) -> u64 {
    o.seed.unwrap_or(0)
}

fn dim(o: &Opts) -> Result<usize, Fail> {
    need(&o.n, "n")
}

fn params(o: &Opts) -> Result<EnergyParams, Fail> {
    let (n, s, p) = (dim(o)?, need(&o.s, "s")?, need(&o.p, "p")?);
    let base = match o.q {
        Some(q) => EnergyParams::with_checked_q(n, s, p, q)?,
        None => EnergyParams::new(n, s, p)?,
    };
    Ok(match o.q_offset {
        Some(dq) => base.perturbed(dq),
        None => base,
    })
}

/// Config echo with the derived exponent filled in.
fn echo_with_q(o: &Opts, params: &EnergyParams) -> Value {
    let mut v = o.echo();
    if let Value::Object(m) = &mut v {
        m.insert("q".into(), params.q().into());
    }
    v
}

fn function(o: &Opts, n: usize) -> Result<FunctionModel, Fail> {
    let spec = match (&o.fn_json, &o.function) {
        (Some(_), Some(_)) => return invalid("give either --fn or --fn-json"),
        (Some(json), None) => {
            if o.fn_param.is_some() {
                return invalid("--fn-param goes with --fn, not --fn-json");
            }
            FunctionSpec::from_json(json)?
        }
        (None, Some(name)) => FunctionSpec {
            params: fn_params(o)?,
            ..FunctionSpec::named(name.clone())
        },
        (None, None) => return invalid("missing --fn"),
    };
    Ok(spec.build(n)?)
}

fn fn_params(o: &Opts) -> Result<FunctionParams, Fail> {
    let mut out = FunctionParams::new();
    for pair in o.fn_param.iter().flatten() {
        let Some((k, v)) = pair.split_once('=') else {
            return invalid(format!("--fn-param `{pair}` is not key=value"));
        };
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Fail::Validation(format!("--fn-param `{pair}`: bad number")))?;
        out.insert(k.trim().to_string(), v);
    }
    Ok(out)
}

fn domain(o: &Opts, n: usize, default: Option<&str>) -> Result<Domain, Fail> {
    let desc = match (&o.domain, default) {
        (Some(d), _) => d.clone(),
        (None, Some(d)) => d.to_string(),
        (None, None) => return invalid("missing --domain"),
    };
    Ok(Domain::parse(&desc, n)?)
}

/// `lo,hi` repeated for every axis, or `lo_1,hi_1,…,lo_n,hi_n`.
fn box_region(v: &[f64], n: usize, key: &str) -> Result<BoxRegion, Fail> {
    let (lo, hi): (Vec<f64>, Vec<f64>) = if v.len() == 2 {
        (vec![v[0]; n], vec![v[1]; n])
    } else if v.len() == 2 * n {
        (
            v.iter().step_by(2).copied().collect(),
            v.iter().skip(1).step_by(2).copied().collect(),
        )
    } else {
        return invalid(format!("--{key} needs 2 or {} bounds", 2 * n));
    };
    if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
        return invalid(format!("--{key} has empty or inverted bounds"));
    }
    Ok(BoxRegion::new(lo, hi))
}

fn sampler(o: &Opts) -> SamplerConfig {
    let mut s = match o.sampler {
        Some(Sampler::Uniform) => SamplerConfig::uniform(),
        _ => SamplerConfig::stratified(),
    };
    s.r_min = o.r_min;
    s.r_max = o.r_max;
    if let Some(k) = o.strata {
        s.strata = k;
    }
    if let Some(c) = o.cutoff {
        s.cutoff = c;
    }
    s
}

fn seminorm_method(o: &Opts, n: usize) -> SeminormMethod {
    match o.method {
        Some(Method::Quadrature) => SeminormMethod::Quadrature {
            depth: o.depth.unwrap_or(3),
        },
        Some(Method::Mc) => SeminormMethod::MonteCarlo {
            samples: samples(o),
            seed: seed(o),
        },
        None if n == 1 => SeminormMethod::Quadrature {
            depth: o.depth.unwrap_or(3),
        },
        None => SeminormMethod::MonteCarlo {
            samples: o.samples.map_or(1 << 20, |c| c.0),
            seed: seed(o),
        },
    }
}

fn catalog(o: &Opts, n: usize) -> Result<Vec<FunctionModel>, Fail> {
    if o.function.is_some() || o.fn_json.is_some() {
        if o.catalog.is_some() {
            return invalid("give either --fn or --catalog");
        }
        return Ok(vec![function(o, n)?]);
    }
    match o.catalog.as_deref().unwrap_or("default") {
        "default" => Ok(default_catalog(n)?),
        list => list
            .split(',')
            .map(|name| test_function(name.trim(), n, &FunctionParams::new()).map_err(Fail::from))
            .collect(),
    }
}

pub fn energy(o: &Opts) -> Result<Output, Fail> {
    o.only(
        "energy",
        &[
            "seed", "samples", "n", "s", "p", "q", "fn", "fn-param", "fn-json", "domain", "method", "depth", "sampler",
            "strata", "r-min", "r-max", "cutoff", "lambdas", "coupling", "q-offset",
        ],
    )?;
    let params = params(o)?;
    let n = params.n();
    let f = function(o, n)?;
    let u = domain(o, n, None)?;
    let echo = echo_with_q(o, &params);
    if let Some(lambdas) = &o.lambdas {
        let coupling = match o.coupling.unwrap_or(Coupling::Coupled) {
            Coupling::Coupled => energy::Coupling::Coupled,
            Coupling::Uncoupled => energy::Coupling::Uncoupled,
        };
        let probe = energy_scaling_probe(&f, &u, &params, lambdas, &sampler(o), samples(o), seed(o), coupling)?;
        let est = Estimate {
            value: probe.slope,
            stderr: probe.slope_stderr.unwrap_or(0.0),
            samples: samples(o) * lambdas.len() as u64,
            seed: Some(seed(o)),
            invalid_samples: 0,
        };
        let mut out = Output::new("energy", echo, &est);
        out.diagnostic(
            "expected_slope",
            n as f64,
            "dimension; equals the slope when q is the derived exponent",
        );
        let mut t = Table::new(&["lambda", "energy", "stderr"]);
        for (l, e) in probe.lambdas.iter().zip(&probe.estimates) {
            t.push(vec![l.to_string(), e.value.to_string(), e.stderr.to_string()]);
        }
        out.table = Some(t);
        out.report = Some(serde_json::to_value(&probe).expect("probe serializes"));
        return Ok(out);
    }
    if o.coupling.is_some() {
        return invalid("--coupling needs --lambdas");
    }
    let outcome = match o.method.unwrap_or(Method::Mc) {
        Method::Quadrature => {
            if o.sampler.is_some() || o.strata.is_some() || o.r_min.is_some() || o.r_max.is_some() || o.cutoff.is_some()
            {
                return invalid("sampler settings do not apply to --method quadrature");
            }
            energy_pq_quadrature_1d(&f, &u, &params, o.depth.unwrap_or(3))?
        }
        Method::Mc => {
            if o.depth.is_some() {
                return invalid("--depth applies to --method quadrature");
            }
            energy_pq_mc(&f, &u, &params, &sampler(o), samples(o), seed(o))?
        }
    };
    Ok(Output::from_outcome("energy", echo, outcome))
}

pub fn seminorm(o: &Opts) -> Result<Output, Fail> {
    o.only(
        "seminorm",
        &[
            "seed", "samples", "n", "s", "p", "fn", "fn-param", "fn-json", "domain", "method", "depth", "cutoff",
            "kind",
        ],
    )?;
    let n = dim(o)?;
    let (s, p) = (need(&o.s, "s")?, need(&o.p, "p")?);
    let f = function(o, n)?;
    let u = domain(o, n, None)?;
    match o.kind.unwrap_or(Kind::SecondDiff) {
        Kind::SecondDiff => {
            let outcome = second_diff_with(&f, &u, s, p, o.cutoff.unwrap_or(0.0), seminorm_method(o, n))?;
            Ok(Output::from_outcome("seminorm", o.echo(), outcome))
        }
        Kind::Gagliardo => {
            if o.cutoff.is_some() || o.method.is_some() || o.depth.is_some() {
                return invalid("the Gagliardo seminorm takes no --cutoff, --method or --depth");
            }
            let est = gagliardo_with(&f, &u, s, p, samples(o), seed(o))?;
            Ok(Output::new("seminorm", o.echo(), &est))
        }
    }
}

pub fn dorronsoro(o: &Opts) -> Result<Output, Fail> {
    o.only(
        "dorronsoro",
        &[
            "seed", "samples", "n", "s", "p", "fn", "fn-param", "fn-json", "box", "t-min", "t-max",
        ],
    )?;
    let n = dim(o)?;
    let (s, p) = (need(&o.s, "s")?, need(&o.p, "p")?);
    let f = function(o, n)?;
    let cfg = DorronsoroConfig {
        t_min: o.t_min,
        t_max: o.t_max,
        spatial_box: o.spatial_box.as_ref().map(|b| box_region(b, n, "box")).transpose()?,
        samples: o.samples.map_or(DorronsoroConfig::default().samples, |c| c.0),
        seed: seed(o),
        ..Default::default()
    };
    Ok(Output::from_outcome(
        "dorronsoro",
        o.echo(),
        dorronsoro_seminorm(&f, s, p, &cfg)?,
    ))
}

pub fn knot(o: &Opts) -> Result<Output, Fail> {
    o.only(
        "knot",
        &["curve", "path", "vertices", "radius", "axes", "windings", "p", "energy"],
    )?;
    let vertices = o.vertices.unwrap_or(512);
    let curve = o.curve.unwrap_or(Curve::Circle);
    if curve != Curve::Csv && o.path.is_some() {
        return invalid("--path goes with --curve csv");
    }
    let pair = |v: &Option<Vec<f64>>, default: [f64; 2]| -> Result<(f64, f64), Fail> {
        match v.as_deref() {
            None => Ok((default[0], default[1])),
            Some([a, b]) => Ok((*a, *b)),
            Some(_) => invalid("--axes takes two numbers"),
        }
    };
    let poly = match curve {
        Curve::Circle => Polyline::circle(vertices, o.radius.unwrap_or(1.0))?,
        Curve::Ellipse => {
            let (a, b) = pair(&o.axes, [1.0, 0.5])?;
            Polyline::ellipse(vertices, a, b)?
        }
        Curve::TorusKnot => {
            let (major, minor) = pair(&o.axes, [2.0, 0.7])?;
            let (wp, wq) = match o.windings.as_deref() {
                None => (2, 3),
                Some([a, b]) => (*a, *b),
                Some(_) => return invalid("--windings takes two integers"),
            };
            Polyline::torus_knot(vertices, wp, wq, major, minor)?
        }
        Curve::Csv => Polyline::load_csv(&need(&o.path, "path")?, true)?,
    };
    let p = o.p.unwrap_or(2.0);
    let e = knot_energies(&poly, p)?;
    let value = match o.energy.unwrap_or(KnotEnergy::Mp) {
        KnotEnergy::Mp => e.mp,
        KnotEnergy::Ip => e.ip,
        KnotEnergy::Up => e.up,
    };
    let m = poly.len() as u64;
    let mut out = Output::new(
        "knot",
        o.echo(),
        &Estimate::deterministic(value, m * (m - 1) * (m - 2) / 6),
    );
    out.diagnostic("mp", e.mp, "triple integral of Menger curvature");
    out.diagnostic("ip", e.ip, "intermediate energy");
    out.diagnostic("up", e.up, "sup energy");
    out.diagnostic("length", poly.length(), "polygon length");
    out.diagnostic("vertices", m as f64, "");
    Ok(out)
}

pub fn verify_equivalence(o: &Opts) -> Result<Output, Fail> {
    o.only(
        "verify equivalence",
        &[
            "seed",
            "samples",
            "n",
            "s",
            "p",
            "fn",
            "fn-param",
            "fn-json",
            "catalog",
            "numerator",
            "spread-bound",
            "domain",
            "method",
            "depth",
            "sampler",
            "strata",
            "r-min",
            "r-max",
        ],
    )?;
    let mut defaults = o.clone();
    defaults.n.get_or_insert(1);
    defaults.s.get_or_insert(0.5);
    defaults.p.get_or_insert(3.0);
    let params = params(&defaults)?;
    let n = params.n();
    let u = domain(o, n, Some("full:-1,1,0.5"))?;
    let cat = catalog(o, n)?;
    let cfg = EquivalenceConfig {
        samples: samples(o),
        seed: seed(o),
        sampler: sampler(o),
        seminorm: seminorm_method(o, n),
        spread_bound: o.spread_bound,
    };
    let report = match o.numerator.unwrap_or(Numerator::Energy) {
        Numerator::Energy => equivalence_experiment(&cat, &params, &u, &cfg)?,
        Numerator::Dorronsoro => {
            dorronsoro_experiment(&cat, params.s(), params.p(), &u, &cfg, &DorronsoroConfig::default())?
        }
    };
    let est = Estimate {
        value: report.spread().unwrap_or(f64::NAN),
        stderr: 0.0,
        samples: cfg.samples,
        seed: Some(cfg.seed),
        invalid_samples: 0,
    };
    let mut out = Output::new("verify equivalence", echo_with_q(&defaults, &params), &est);
    if let Some(s) = report.summary {
        out.diagnostic("min_ratio", s.min, "");
        out.diagnostic("max_ratio", s.max, "");
    }
    out.diagnostic(
        "excluded",
        report.excluded.len() as f64,
        "catalog members with divergent estimates",
    );
    out.flagged = report.flagged;
    out.table = Some(ratio_table(&report));
    out.report = Some(serde_json::to_value(&report).expect("report serializes"));
    Ok(out)
}

fn ratio_table(r: &RatioReport) -> Table {
    let mut t = Table::new(&[
        "name",
        "numerator",
        "numerator_stderr",
        "seminorm",
        "seminorm_stderr",
        "ratio",
        "ratio_stderr",
        "excluded",
    ]);
    for row in &r.rows {
        t.push(vec![
            row.name.clone(),
            row.numerator.value.to_string(),
            row.numerator.stderr.to_string(),
            row.seminorm.value.to_string(),
            row.seminorm.stderr.to_string(),
            row.ratio.to_string(),
            row.ratio_stderr.to_string(),
            String::new(),
        ]);
    }
    for ex in &r.excluded {
        let mut row = vec![ex.name.clone()];
        row.extend(std::iter::repeat_n(String::new(), 6));
        row.push(ex.reason.clone());
        t.push(row);
    }
    t
}

/// Shared driver of the two randomized audits.
fn audit(o: &Opts, command: &str, laplace: bool) -> Result<Output, Fail> {
    let mut keys = vec!["seed", "tuples", "n", "fn", "fn-param", "fn-json", "catalog", "region"];
    if laplace {
        keys.push("scale");
    }
    o.only(command, &keys)?;
    let n = o.n.unwrap_or(1);
    let cat = catalog(o, n)?;
    let region = box_region(o.region.as_deref().unwrap_or(&[-0.6, 0.6]), n, "region")?;
    let count = o.tuples.map_or(DEFAULT_TUPLES, |c| c.0);
    let mut t = Table::new(&["name", "checked", "violations", "worst"]);
    let (mut violations, mut worst) = (0u64, 0.0f64);
    for f in &cat {
        let r = if laplace {
            laplace_audit(f, &region, o.scale.unwrap_or(0.25), count, seed(o))?
        } else {
            lemma_beta_audit(f, &region, count, seed(o))?
        };
        violations += r.violations;
        worst = worst.max(r.worst);
        t.push(vec![
            f.label().into(),
            r.checked.to_string(),
            r.violations.to_string(),
            r.worst.to_string(),
        ]);
    }
    let value = if laplace { worst } else { violations as f64 };
    let est = Estimate {
        value,
        stderr: 0.0,
        samples: count * cat.len() as u64,
        seed: Some(seed(o)),
        invalid_samples: 0,
    };
    let mut out = Output::new(command, o.echo(), &est);
    out.diagnostic("violations", violations as f64, "");
    out.diagnostic(
        "worst",
        worst,
        if laplace {
            "largest relative discrepancy"
        } else {
            "largest lhs/rhs"
        },
    );
    out.flagged = violations > 0;
    out.table = Some(t);
    Ok(out)
}

pub fn verify_lemma_beta(o: &Opts) -> Result<Output, Fail> {
    audit(o, "verify lemma-beta", false)
}

pub fn verify_laplace(o: &Opts) -> Result<Output, Fail> {
    audit(o, "verify laplace", true)
}

pub fn verify_w_measure(o: &Opts) -> Result<Output, Fail> {
    o.only(
        "verify w-measure",
        &["seed", "samples", "n", "alpha", "domain", "x", "r"],
    )?;
    let n = dim(o)?;
    let alpha = need(&o.alpha, "alpha")?;
    let est = match &o.domain {
        Some(_) => {
            let u = domain(o, n, None)?;
            estimate_w_measure_in(&u, &need(&o.x, "x")?, need(&o.r, "r")?, alpha, samples(o), seed(o))?
        }
        None => {
            if o.x.is_some() || o.r.is_some() {
                return invalid("--x and --r need --domain");
            }
            estimate_w_measure(n, alpha, samples(o), seed(o))?
        }
    };
    Ok(Output::new("verify w-measure", o.echo(), &est))
}

pub fn verify_codivergence(o: &Opts) -> Result<Output, Fail> {
    o.only(
        "verify codivergence",
        &[
            "seed", "samples", "n", "s", "p", "fn", "fn-param", "fn-json", "catalog", "domain", "cutoffs", "sampler",
            "strata", "method", "depth",
        ],
    )?;
    let params = params(o)?;
    let n = params.n();
    let u = domain(o, n, None)?;
    let cat = catalog(o, n)?;
    let mut cfg = CodivergenceConfig {
        samples: samples(o),
        seed: seed(o),
        sampler: sampler(o),
        seminorm: seminorm_method(o, n),
        ..Default::default()
    };
    if let Some(c) = &o.cutoffs {
        cfg.cutoffs = c.clone();
    }
    let mut t = Table::new(&[
        "name",
        "cutoff",
        "seminorm",
        "seminorm_stderr",
        "energy",
        "energy_stderr",
        "seminorm_trend",
        "energy_trend",
        "agree",
    ]);
    let mut reports = serde_json::Map::new();
    let mut disagreements = 0u64;
    for f in &cat {
        let r = codivergence_probe(f, &params, &u, &cfg)?;
        if !r.agree {
            disagreements += 1;
        }
        let trend = |t| {
            serde_json::to_value(t)
                .expect("trend serializes")
                .as_str()
                .unwrap_or_default()
                .to_string()
        };
        for i in 0..r.cutoffs.len() {
            t.push(vec![
                f.label().into(),
                r.cutoffs[i].to_string(),
                r.seminorm[i].value.to_string(),
                r.seminorm[i].stderr.to_string(),
                r.energy[i].value.to_string(),
                r.energy[i].stderr.to_string(),
                trend(r.seminorm_trend),
                trend(r.energy_trend),
                r.agree.to_string(),
            ]);
        }
        reports.insert(f.label().into(), serde_json::to_value(&r).expect("report serializes"));
    }
    let est = Estimate {
        value: disagreements as f64,
        stderr: 0.0,
        samples: cfg.samples * (cat.len() * cfg.cutoffs.len()) as u64,
        seed: Some(cfg.seed),
        invalid_samples: 0,
    };
    let mut out = Output::new("verify codivergence", echo_with_q(o, &params), &est);
    out.diagnostic("members", cat.len() as f64, "");
    out.flagged = disagreements > 0;
    out.table = Some(t);
    out.report = Some(Value::Object(reports));
    Ok(out)
}

/// Summary rows of previously written JSON results.
pub fn report(files: &[std::path::PathBuf]) -> Result<Table, Fail> {
    if files.is_empty() {
        return invalid("report needs at least one JSON result file");
    }
    let mut t = Table::new(&["file", "command", "value", "stderr", "samples", "seed", "flagged"]);
    for path in files {
        let text = std::fs::read_to_string(path).map_err(|e| Fail::Io(format!("{}: {e}", path.display())))?;
        let o: Output =
            serde_json::from_str(&text).map_err(|e| Fail::Validation(format!("{}: {e}", path.display())))?;
        t.push(vec![
            path.display().to_string(),
            o.command,
            o.value.to_string(),
            o.stderr.to_string(),
            o.samples.to_string(),
            o.seed.map(|s| s.to_string()).unwrap_or_default(),
            o.flagged.to_string(),
        ]);
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_must_match_the_derived_value() {
        let o = Opts {
            n: Some(1),
            s: Some(0.5),
            p: Some(2.0),
            q: Some(7.0 / 3.0),
            ..Default::default()
        };
        assert!(params(&o).is_ok());
        let off = Opts {
            q: Some(7.0 / 3.0 + 1e-9),
            ..o
        };
        assert!(matches!(params(&off), Err(Fail::Validation(_))));
    }

    #[test]
    fn boxes_and_params_parse() {
        let b = box_region(&[-1.0, 1.0], 2, "box").unwrap();
        assert_eq!((b.lo, b.hi), (vec![-1.0, -1.0], vec![1.0, 1.0]));
        assert!(box_region(&[1.0, -1.0], 1, "box").is_err());
        let o = Opts {
            fn_param: Some(vec!["sigma=0.2".into()]),
            ..Default::default()
        };
        assert_eq!(fn_params(&o).unwrap().get("sigma"), Some(&0.2));
        let bad = Opts {
            fn_param: Some(vec!["sigma".into()]),
            ..Default::default()
        };
        assert!(fn_params(&bad).is_err());
    }
}
