use serde::{Deserialize, Serialize};

use super::check_sp;
use super::omega::{OmegaConfig, OmegaEvaluator};
use crate::error::{invalid, Error, Result};
use crate::estimate::{tally, Draw, Estimate, Outcome};
use crate::funcspace::{BoxRegion, FunctionModel};
use crate::rng::CounterRng;

const STREAM: u64 = 0xd022_0001;

/// Truncation and sampling of the `⟦f⟧^p` integral.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DorronsoroConfig {
    /// Defaults to `diam(box)/2^12`.
    pub t_min: Option<f64>,
    /// Defaults to `4·diam(box)`.
    pub t_max: Option<f64>,
    /// Box containing the support; defaults to the model's own support box.
    pub spatial_box: Option<BoxRegion>,
    pub samples: u64,
    pub seed: u64,
    pub omega: OmegaConfig,
}

impl Default for DorronsoroConfig {
    fn default() -> Self {
        Self {
            t_min: None,
            t_max: None,
            spatial_box: None,
            samples: 1 << 14,
            seed: 0,
            omega: OmegaConfig::default(),
        }
    }
}

/// `⟦f⟧^p = ∫_0^∞ ∫_{R^n} Ω_f(x,t)^p / t^{1+p(1+s)} dx dt` for compactly supported `f`.
///
/// `t` is log-uniform in `[t_min, t_max]` and `x` uniform in the support box
/// widened by `t` on every side, outside of which `Ω_f(x, t)` vanishes. Models
/// not evaluatable on the widened box are extended by zero outside the support
/// box. The part `t > t_max` is bounded analytically with
/// `Ω_f ≤ (2 + 1.5n)·sup|f|` and added to the value; both parts are reported.
/// Since `Ω` is a lattice lower bound, so is the sampled part.
pub fn dorronsoro_seminorm(f: &FunctionModel, s: f64, p: f64, config: &DorronsoroConfig) -> Result<Outcome> {
    check_sp(s, p)?;
    let n = f.dim();
    let support = match (&config.spatial_box, f.support()) {
        (Some(b), _) => b.clone(),
        (None, Some(b)) => b.clone(),
        (None, None) => {
            return invalid(format!(
                "`{}` has no compact support box; pass an explicit spatial box",
                f.label()
            ))
        }
    };
    if support.lo.len() != n || support.hi.len() != n {
        return invalid("spatial box dimension differs from the function dimension");
    }
    if support.lo.iter().zip(&support.hi).any(|(a, b)| !(a <= b)) {
        return invalid("spatial box has inverted bounds");
    }
    let diam = support.diameter();
    if !(diam > 0.0 && diam.is_finite()) {
        return invalid("spatial box must have positive finite diameter");
    }
    let t_min = config.t_min.unwrap_or(diam / 4096.0);
    let t_max = config.t_max.unwrap_or(4.0 * diam);
    if !(t_min > 0.0 && t_min < t_max && t_max.is_finite()) {
        return invalid("need 0 < t_min < t_max");
    }
    if config.samples < 2 {
        return invalid("Monte Carlo needs at least two samples");
    }
    if f.is_affine() {
        let mut e = Estimate::deterministic(0.0, config.samples);
        e.seed = Some(config.seed);
        return Ok(Outcome::new(e));
    }

    let widths: Vec<f64> = support.lo.iter().zip(&support.hi).map(|(a, b)| b - a).collect();
    let reach_lo: Vec<f64> = support.lo.iter().map(|a| a - 2.0 * t_max).collect();
    let reach_hi: Vec<f64> = support.hi.iter().map(|b| b + 2.0 * t_max).collect();
    let g = if f.covers(&reach_lo, &reach_hi) {
        f.clone()
    } else {
        zero_extension(f, &support)
    };
    let ev = OmegaEvaluator::new(n, config.omega)?;
    let log_span = (t_max / t_min).ln();
    let decay = p * (1.0 + s);
    let rng = CounterRng::new(config.seed).stream(STREAM);
    let t = tally(0, config.samples, |i| {
        let mut d = rng.sample(i);
        let t = t_min * (d.uniform() * log_span).exp();
        let mut x = [0.0f64; 8];
        let mut vol = 1.0;
        for k in 0..n {
            let w = widths[k] + 2.0 * t;
            x[k] = support.lo[k] - t + w * d.uniform();
            vol *= w;
        }
        match ev.omega(&g, &x[..n], t) {
            Ok(w) => Draw::Accepted(w.powf(p) * t.powf(-decay) * vol * log_span),
            Err(_) => Draw::Invalid,
        }
    });
    if t.accepted == 0 {
        return Err(Error::Diagnostic("no Ω evaluation succeeded".into()));
    }

    let (sup, sampled_sup) = match f.sup_abs() {
        Some(m) => (m, false),
        None => (grid_sup(f, &support), true),
    };
    let tail = tail_bound(&widths, sup, p, s, t_max);
    let truncated = t.moments.mean;
    let est = Estimate {
        value: truncated + if tail.is_finite() { tail } else { 0.0 },
        stderr: t.moments.stderr(),
        samples: config.samples,
        seed: Some(config.seed),
        invalid_samples: t.invalid,
    };
    let mut out = Outcome::new(est);
    out.push("truncated", truncated, "sampled part over [t_min, t_max]");
    out.push("t_min", t_min, "smallest sidelength");
    out.push("t_max", t_max, "largest sampled sidelength");
    out.push(
        "sup_abs",
        sup,
        if sampled_sup {
            "sup|f| sampled on a grid of the support box"
        } else {
            "sup|f| from the model"
        },
    );
    if tail.is_finite() {
        out.push("t_tail", tail, "analytic bound of t > t_max (included)");
    } else {
        out.flagged = true;
        out.push(
            "t_tail_divergent",
            1.0,
            "p(1+s) <= n: the t > t_max part diverges and is not included",
        );
    }
    out.push("omega_offsets", config.omega.offsets as f64, "cube positions per axis");
    out.push(
        "omega_sup_points",
        config.omega.sup_points as f64,
        "sup-norm points per axis",
    );
    Ok(out)
}

fn zero_extension(f: &FunctionModel, support: &BoxRegion) -> FunctionModel {
    let inner = f.clone();
    let b = support.clone();
    FunctionModel::analytic(f.dim(), f.label().to_string(), move |x| {
        if b.contains(x) {
            inner.value(x)
        } else {
            0.0
        }
    })
    .with_support(support.lo.clone(), support.hi.clone())
}

fn grid_sup(f: &FunctionModel, b: &BoxRegion) -> f64 {
    let n = f.dim();
    let g: usize = if n <= 3 { 65 } else { 9 };
    let mut x = vec![0.0; n];
    let mut best = 0.0f64;
    for flat in 0..g.pow(n as u32) {
        let mut rem = flat;
        for k in (0..n).rev() {
            let i = rem % g;
            rem /= g;
            x[k] = b.lo[k] + (b.hi[k] - b.lo[k]) * i as f64 / (g - 1) as f64;
        }
        best = best.max(f.value(&x).abs());
    }
    best
}

/// `∫_{t_max}^∞ ((2+1.5n)M)^p · Π(w_k + 2t) / t^{1+p(1+s)} dt`.
fn tail_bound(widths: &[f64], sup: f64, p: f64, s: f64, t_max: f64) -> f64 {
    // Coefficients of Π(w_k + 2t) in powers of t.
    let mut c = vec![1.0];
    for w in widths {
        let mut next = vec![0.0; c.len() + 1];
        for (k, ck) in c.iter().enumerate() {
            next[k] += w * ck;
            next[k + 1] += 2.0 * ck;
        }
        c = next;
    }
    let omega_bound = (2.0 + 1.5 * widths.len() as f64) * sup;
    let decay = p * (1.0 + s);
    let mut total = 0.0;
    for (k, ck) in c.iter().enumerate() {
        if *ck == 0.0 {
            continue;
        }
        let e = decay - k as f64;
        if e <= 0.0 {
            return f64::INFINITY;
        }
        total += ck * t_max.powf(-e) / e;
    }
    omega_bound.powf(p) * total
}
