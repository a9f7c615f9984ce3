use serde::{Deserialize, Serialize};

use super::dyadic::{dyadic_integral, piecewise_integral};
use super::{check_sp, sphere_area};
use crate::error::{invalid, Error, Result};
use crate::estimate::{tally, Draw, Estimate, Outcome};
use crate::funcspace::{Domain, FunctionModel};
use crate::rng::CounterRng;

const STREAM: u64 = 0x5ec0_0d01;

/// How `[f]^p` is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum SeminormMethod {
    /// Dyadic quadrature in `h` (one dimension only).
    Quadrature { depth: usize },
    /// Uniform `x`, log-radial `h`.
    MonteCarlo { samples: u64, seed: u64 },
}

impl SeminormMethod {
    /// Quadrature at depth 3 for `n = 1`, otherwise 2^20 Monte Carlo samples with seed 0.
    pub fn auto(n: usize) -> Self {
        if n == 1 {
            SeminormMethod::Quadrature { depth: 3 }
        } else {
            SeminormMethod::MonteCarlo {
                samples: 1 << 20,
                seed: 0,
            }
        }
    }
}

/// `[f]^p = ∫_U ∫_{H_x} |f(x+h) − 2f(x) + f(x−h)|^p / |h|^{n+(1+s)p} dh dx`,
/// restricted to `|h| ≥ cutoff`, with the default method for the dimension.
pub fn second_diff_seminorm(f: &FunctionModel, domain: &Domain, s: f64, p: f64, cutoff: f64) -> Result<Estimate> {
    second_diff_with(f, domain, s, p, cutoff, SeminormMethod::auto(f.dim())).map(|o| o.estimate)
}

pub fn second_diff_with(
    f: &FunctionModel,
    domain: &Domain,
    s: f64,
    p: f64,
    cutoff: f64,
    method: SeminormMethod,
) -> Result<Outcome> {
    match method {
        SeminormMethod::Quadrature { depth } => second_diff_quadrature(f, domain, s, p, cutoff, depth),
        SeminormMethod::MonteCarlo { samples, seed } => second_diff_mc(f, domain, s, p, cutoff, samples, seed),
    }
}

fn validate(f: &FunctionModel, domain: &Domain, s: f64, p: f64, cutoff: f64) -> Result<()> {
    check_sp(s, p)?;
    if f.dim() != domain.dim() {
        return invalid("function and domain dimensions differ");
    }
    if !(cutoff >= 0.0 && cutoff.is_finite()) {
        return invalid("cutoff must be a finite nonnegative number");
    }
    let (lo, hi) = domain.bounding_box();
    f.require_covers(&lo, &hi, "the domain")
}

/// For a truncated full-space domain `f` is taken to vanish outside the bounding box.
fn extended<'a>(f: &'a FunctionModel, domain: &Domain) -> impl Fn(&[f64]) -> f64 + Sync + 'a {
    let full = domain.represents_full_space();
    let (lo, hi) = domain.bounding_box();
    move |x: &[f64]| {
        if full && x.iter().zip(lo.iter().zip(&hi)).any(|(v, (a, b))| *v < *a || *v > *b) {
            0.0
        } else {
            f.value(x)
        }
    }
}

fn tail_constant(n: usize, s: f64, p: f64, top: f64) -> f64 {
    // ∫_{|h|>top} |2f(x)|^p / |h|^{n+(1+s)p} dh = tail_constant · |f(x)|^p
    2f64.powf(p) * sphere_area(n) * top.powf(-(1.0 + s) * p) / ((1.0 + s) * p)
}

/// Deterministic `[f]^p` for `n = 1`.
///
/// The `h`-integral runs over dyadic panels toward `h = 0` with `8 + 2·depth`
/// levels and a power-law extrapolation of the last panel; the `x`-integral is
/// graded toward the model breakpoints `c` and their shadows `c ± h`. The
/// result is compared against depth − 1 and flagged above 1% change.
pub fn second_diff_quadrature(
    f: &FunctionModel,
    domain: &Domain,
    s: f64,
    p: f64,
    cutoff: f64,
    depth: usize,
) -> Result<Outcome> {
    validate(f, domain, s, p, cutoff)?;
    let Some((a, b)) = domain.as_interval() else {
        return Err(Error::Unsupported(
            "second-difference quadrature is one-dimensional".into(),
        ));
    };
    if f.is_affine() {
        return Ok(Outcome::new(Estimate::deterministic(0.0, 0)));
    }
    let run = |d: usize| quadrature_pass(f, domain, a, b, s, p, cutoff, d);
    let fine = run(depth);
    let mut out = Outcome::new(Estimate::deterministic(fine.total, fine.nodes));
    out.push(
        "h_bottom_extrapolation",
        fine.bottom,
        "extrapolated contribution of the smallest h-panel",
    );
    if let Some(beta) = fine.slope {
        out.push(
            "h_power_at_origin",
            beta,
            "fitted exponent of the h-integrand near h = 0",
        );
    }
    if fine.divergent {
        out.flagged = true;
        out.push(
            "divergent_at_origin",
            1.0,
            "h-integrand decays no faster than 1/h: the seminorm is infinite",
        );
    }
    if let Some(t) = fine.tail {
        out.push(
            "h_tail",
            t,
            "exact contribution of |h| beyond the bounding-box diameter",
        );
    }
    if let Some(bound) = fine.exterior_bound {
        out.push(
            "exterior_bound",
            bound,
            "upper bound of the neglected x outside the bounding box",
        );
    }
    if depth > 0 {
        let coarse = run(depth - 1);
        let change = rel_change(fine.total, coarse.total);
        out.push("refinement_change", change, "relative change against depth - 1");
        if change > 0.01 {
            out.flagged = true;
        }
    }
    Ok(out)
}

pub(crate) fn rel_change(fine: f64, coarse: f64) -> f64 {
    if fine == coarse {
        0.0
    } else {
        (fine - coarse).abs() / fine.abs().max(coarse.abs())
    }
}

struct Pass {
    total: f64,
    bottom: f64,
    slope: Option<f64>,
    divergent: bool,
    tail: Option<f64>,
    exterior_bound: Option<f64>,
    nodes: u64,
}

#[allow(clippy::too_many_arguments)]
fn quadrature_pass(
    f: &FunctionModel,
    domain: &Domain,
    a: f64,
    b: f64,
    s: f64,
    p: f64,
    cutoff: f64,
    depth: usize,
) -> Pass {
    let g = extended(f, domain);
    let full = domain.represents_full_space();
    let levels = 8 + 2 * depth;
    let base = 4 * (depth + 1);
    let grade = 8 + 2 * depth;
    let gamma = 1.0 + (1.0 + s) * p;
    let top = if full { b - a } else { 0.5 * (b - a) };
    let breaks = f.breakpoints();
    let integrand = |h: f64| -> f64 {
        let (lo, hi) = if full { (a, b) } else { (a + h, b - h) };
        let mut cuts: Vec<f64> = Vec::with_capacity(3 * breaks.len() + 4);
        for c in breaks.iter().copied().chain(if full { vec![a, b] } else { vec![] }) {
            cuts.extend([c, c - h, c + h]);
        }
        let inner = piecewise_integral(lo, hi, &cuts, base, grade, |x| {
            (g(&[x + h]) - 2.0 * g(&[x]) + g(&[x - h])).abs().powf(p)
        });
        inner * h.powf(-gamma)
    };
    let r = dyadic_integral(top, levels, cutoff, integrand);
    let mut total = 2.0 * (r.value + if r.divergent { 0.0 } else { r.bottom });
    let (mut tail, mut exterior_bound) = (None, None);
    if full {
        let lp = piecewise_integral(a, b, breaks, base, grade, |x| f.value(&[x]).abs().powf(p));
        let t = tail_constant(1, s, p, top.max(cutoff)) * lp;
        total += t;
        tail = Some(t);
        let margin = domain.margin().expect("full-space domains carry a margin");
        exterior_bound = Some(tail_constant(1, s, p, margin) * lp);
    }
    Pass {
        total,
        bottom: 2.0 * r.bottom,
        slope: r.slope,
        divergent: r.divergent,
        tail,
        exterior_bound,
        nodes: r.nodes,
    }
}

/// Monte Carlo `[f]^p` in any dimension.
///
/// `x` is uniform in `U` and `h = ρθ` with `θ` uniform on the sphere and `ρ`
/// log-uniform in `[ρ_min, ρ_max]`, `ρ_max` the largest admissible `|h|` and
/// `ρ_min = max(cutoff, ρ_max·2^{-16})`. Offsets outside `H_x` are rejected.
/// The analytic core below `ρ_min` (without a cutoff) is estimated and reported.
pub fn second_diff_mc(
    f: &FunctionModel,
    domain: &Domain,
    s: f64,
    p: f64,
    cutoff: f64,
    samples: u64,
    seed: u64,
) -> Result<Outcome> {
    validate(f, domain, s, p, cutoff)?;
    if samples < 2 {
        return invalid("Monte Carlo needs at least two samples");
    }
    let n = domain.dim();
    if f.is_affine() {
        let mut e = Estimate::deterministic(0.0, samples);
        e.seed = Some(seed);
        return Ok(Outcome::new(e));
    }
    let full = domain.represents_full_space();
    let rho_max = if full {
        domain.diameter()
    } else {
        0.5 * domain.diameter()
    };
    let rho_min = if cutoff > 0.0 { cutoff } else { rho_max * 2f64.powi(-16) };
    if rho_min >= rho_max {
        let mut e = Estimate::deterministic(0.0, 0);
        e.seed = Some(seed);
        return Ok(Outcome::new(e));
    }
    let log_span = (rho_max / rho_min).ln();
    let vol = domain.volume();
    let sigma = sphere_area(n);
    let tail = if full { tail_constant(n, s, p, rho_max) } else { 0.0 };
    let g = extended(f, domain);
    let rng = CounterRng::new(seed).stream(STREAM);
    let radial = -(1.0 + s) * p;
    let core_share = 1.0 / 16.0;
    let draw_one = |i: u64, core_only: bool| -> Draw {
        let mut d = rng.sample(i);
        let mut x = [0.0f64; 8];
        let mut dir = [0.0f64; 8];
        let (x, dir) = (&mut x[..n], &mut dir[..n]);
        domain.sample(&mut d, x);
        let u = d.uniform();
        let rho = rho_min * (u * log_span).exp();
        d.unit_vector(dir);
        let mut xp = [0.0f64; 8];
        let mut xm = [0.0f64; 8];
        for k in 0..n {
            xp[k] = x[k] + rho * dir[k];
            xm[k] = x[k] - rho * dir[k];
        }
        let (xp, xm) = (&xp[..n], &xm[..n]);
        let fx = g(x);
        let mut w = if full { tail * vol * fx.abs().powf(p) } else { 0.0 };
        if core_only {
            w = 0.0;
            if u >= core_share {
                return Draw::Accepted(0.0);
            }
        }
        if !full && !(domain.contains(xp) && domain.contains(xm)) {
            return if w == 0.0 { Draw::Rejected } else { Draw::Accepted(w) };
        }
        let d2 = g(xp) - 2.0 * fx + g(xm);
        w += vol * log_span * sigma * d2.abs().powf(p) * rho.powf(radial);
        Draw::Accepted(w)
    };
    let t = tally(0, samples, |i| draw_one(i, false));
    if t.acceptance() < 1e-3 {
        return Err(Error::Diagnostic(format!(
            "acceptance ratio {:.2e} below 1e-3 for the second-difference sampler",
            t.acceptance()
        )));
    }
    let est = Estimate {
        value: t.moments.mean,
        stderr: t.moments.stderr(),
        samples,
        seed: Some(seed),
        invalid_samples: t.invalid,
    };
    let mut out = Outcome::new(est);
    out.push("rho_min", rho_min, "smallest sampled |h|");
    out.push("rho_max", rho_max, "largest sampled |h|");
    out.push("acceptance", t.acceptance(), "fraction of offsets inside H_x");
    if cutoff == 0.0 {
        // Mean contribution per unit log-radius over the lowest 1/16 of the
        // range, continued below ρ_min as a power law ρ^{(1-s)p}.
        let core = tally(0, samples, |i| draw_one(i, true));
        let per_log = core.moments.mean / (core_share * log_span);
        out.push(
            "core_estimate",
            per_log / ((1.0 - s) * p),
            "estimated contribution of |h| < rho_min (not included)",
        );
    }
    if full {
        out.push(
            "h_tail_included",
            1.0,
            "the exact |h| > rho_max tail is part of the value",
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::{test_function, FunctionParams};

    fn quad() -> FunctionModel {
        test_function("quadratic", 1, &FunctionParams::new()).unwrap()
    }

    fn closed_form(s: f64, p: f64) -> f64 {
        let a = (1.0 - s) * p;
        2f64.powf(p + 1.0 - a) / (a * (a + 1.0))
    }

    #[test]
    fn quadratic_closed_form() {
        let u = Domain::interval(0.0, 1.0).unwrap();
        for (s, p) in [(0.5, 2.0), (0.5, 3.0), (0.25, 1.5), (0.9, 4.0)] {
            let o = second_diff_quadrature(&quad(), &u, s, p, 0.0, 3).unwrap();
            let want = closed_form(s, p);
            assert!(
                (o.value() - want).abs() < 1e-4 * want,
                "s={s} p={p}: {} vs {want}",
                o.value()
            );
            assert!(!o.flagged);
        }
        let o = second_diff_quadrature(&quad(), &u, 0.5, 2.0, 0.0, 3).unwrap();
        assert!((o.value() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn affine_is_zero() {
        let u = Domain::interval(0.0, 1.0).unwrap();
        let f = test_function("affine", 1, &FunctionParams::new()).unwrap();
        assert_eq!(second_diff_seminorm(&f, &u, 0.5, 2.0, 0.0).unwrap().value, 0.0);
    }

    #[test]
    fn translation_invariance() {
        let u = Domain::interval(0.0, 1.0).unwrap();
        let f = test_function("gaussian-bump", 1, &[("sigma".to_string(), 0.3)].into()).unwrap();
        let a = second_diff_quadrature(&f, &u, 0.5, 3.0, 0.0, 2).unwrap().value();
        let ft = f.translated(&[2.5]).unwrap();
        let b = second_diff_quadrature(&ft, &u.translated(&[2.5]), 0.5, 3.0, 0.0, 2)
            .unwrap()
            .value();
        assert!((a - b).abs() < 1e-10 * a, "{a} vs {b}");
    }

    #[test]
    fn mc_matches_closed_form() {
        let u = Domain::interval(0.0, 1.0).unwrap();
        let o = second_diff_mc(&quad(), &u, 0.5, 2.0, 0.0, 400_000, 7).unwrap();
        let e = &o.estimate;
        assert!((e.value - 2.0).abs() < 4.0 * e.stderr, "{e:?}");
    }

    #[test]
    fn cusp_diverges_and_cutoff_grows() {
        let u = Domain::interval(-1.0, 1.0).unwrap();
        let f = test_function("power-cusp", 1, &FunctionParams::new()).unwrap();
        let o = second_diff_quadrature(&f, &u, 0.5, 3.0, 0.0, 2).unwrap();
        assert!(o.flagged);
        let a = second_diff_quadrature(&f, &u, 0.5, 3.0, 1e-2, 2).unwrap().value();
        let b = second_diff_quadrature(&f, &u, 0.5, 3.0, 1e-3, 2).unwrap().value();
        assert!(b > 10.0 * a);
    }

    #[test]
    fn grid_region_is_enforced() {
        let f = test_function("grid", 1, &FunctionParams::new()).unwrap();
        let u = Domain::interval(0.0, 2.0).unwrap();
        assert!(second_diff_seminorm(&f, &u, 0.5, 2.0, 0.0).is_err());
    }
}
