use serde::{Deserialize, Serialize};

use super::{exterior_bound, hessian_estimate, small_scale_bound, sup_estimate, truncated_support, validate};
use crate::error::{invalid, Error, Result};
use crate::estimate::{tally, Draw, Estimate, Moments, Outcome};
use crate::funcspace::{BoxRegion, Domain, EnergyParams, FunctionModel};
use crate::geometry::{unit_ball_volume, KernelScratch, KernelValue};
use crate::rng::CounterRng;

const STREAM: u64 = 0xe9e7_0001;
const MAX_POINTS: usize = 8 * 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerMode {
    /// All `n + 2` points i.i.d. uniform in `U`.
    Uniform,
    /// `x_0` uniform, a radius from one of the log-uniform strata, the other
    /// points uniform in the ball of that radius around `x_0`.
    Stratified,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub mode: SamplerMode,
    /// Defaults to `diam(U)/2^14`.
    pub r_min: Option<f64>,
    /// Defaults to `diam(U)`.
    pub r_max: Option<f64>,
    pub strata: usize,
    /// Tuples with `max|x_i − x_0| < cutoff` contribute zero (default 0).
    pub cutoff: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self::stratified()
    }
}

impl SamplerConfig {
    pub fn uniform() -> Self {
        Self {
            mode: SamplerMode::Uniform,
            ..Self::stratified()
        }
    }

    pub fn stratified() -> Self {
        Self {
            mode: SamplerMode::Stratified,
            r_min: None,
            r_max: None,
            strata: 28,
            cutoff: 0.0,
        }
    }

    /// `(r_min, r_max)` for the domain.
    pub fn radii(&self, domain: &Domain) -> Result<(f64, f64)> {
        let diam = domain.diameter();
        let r_min = self.r_min.unwrap_or(diam * 2f64.powi(-14));
        let r_max = self.r_max.unwrap_or(diam);
        if !(r_min > 0.0 && r_min < r_max && r_max <= diam * (1.0 + 1e-12)) {
            return invalid("sampler radii must satisfy 0 < r_min < r_max ≤ diam(U)");
        }
        if !(self.cutoff >= 0.0 && self.cutoff < r_max) {
            return invalid("the cutoff must lie in [0, r_max)");
        }
        Ok((r_min, r_max))
    }
}

/// Monte Carlo `E_{p,q}(f)` over `U^{n+2}` (the bounding box for a truncated
/// full space).
///
/// Stratified mode allocates the samples equally to `strata` log-uniform radius
/// strata of `[r_min, r_max]` plus one uniform component. Every draw is
/// weighted by the density of the whole mixture, which is known in closed
/// form from `ρ = max_i |x_i − x_0|`:
/// `Σ_j π_j q_j = π_log·(max(ρ, r_min)^{−k} − r_max^{−k})/(k·L·ω_n^{n+1}) + π_unif/|U|^{n+1}`
/// with `k = n(n+1)` and `L = ln(r_max/r_min)`. Points falling outside `U` are
/// rejected (they contribute zero). The standard error combines the
/// per-component sample variances.
///
/// The result is a pure function of `(f, U, params, sampler, samples, seed)`.
pub fn energy_pq_mc(
    f: &FunctionModel,
    domain: &Domain,
    params: &EnergyParams,
    sampler: &SamplerConfig,
    samples: u64,
    seed: u64,
) -> Result<Outcome> {
    validate(f, domain, params)?;
    if samples < 2 {
        return invalid("Monte Carlo needs at least two samples");
    }
    let (r_min, r_max) = sampler.radii(domain)?;
    if sampler.mode == SamplerMode::Stratified && sampler.strata == 0 {
        return invalid("at least one stratum is required");
    }
    if f.is_affine() {
        let mut e = Estimate::deterministic(0.0, samples);
        e.seed = Some(seed);
        return Ok(Outcome::new(e));
    }
    let run = Run::new(f, domain, params, sampler, r_min, r_max, seed);
    let (est, acceptance) = match sampler.mode {
        SamplerMode::Uniform => {
            let t = tally(0, samples, |i| run.draw(i, Component::PureUniform));
            let e = Estimate {
                value: t.moments.mean,
                stderr: t.moments.stderr(),
                samples,
                seed: Some(seed),
                invalid_samples: t.invalid,
            };
            (e, t.acceptance())
        }
        SamplerMode::Stratified => run.stratified(samples),
    };
    if acceptance < 1e-3 {
        return Err(Error::Diagnostic(format!(
            "acceptance ratio {acceptance:.2e} below 1e-3: the sampler radii do not fit the domain"
        )));
    }

    let mut out = Outcome::new(est);
    out.push("acceptance", acceptance, "fraction of sampled tuples inside U^{n+2}");
    out.push("q", params.q(), "kernel diameter exponent");
    if !params.hypothesis_holds() {
        out.push(
            "hypothesis_fails",
            1.0,
            "n/p >= 1+s: the energy is not expected to be comparable to [f]^p",
        );
    }
    if sampler.mode == SamplerMode::Stratified {
        out.push("r_min", r_min, "smallest stratum radius");
        out.push("r_max", r_max, "largest stratum radius");
        out.push(
            "strata",
            sampler.strata as f64,
            "log-uniform radius strata (plus one uniform component)",
        );
        let (lo, hi) = domain.bounding_box();
        let m2 = hessian_estimate(f, &BoxRegion::new(lo, hi));
        out.push(
            "small_scale_bound",
            small_scale_bound(params, domain.volume(), m2, r_min),
            "bound of tuples with max|x_i - x_0| < r_min (included in the value), |D^2 f| from finite differences",
        );
    }
    if let Some((support, margin)) = truncated_support(f, domain).zip(domain.margin()) {
        let (lo, hi) = domain.bounding_box();
        let gap = (0..params.n())
            .map(|k| (support.lo[k] - lo[k]).min(hi[k] - support.hi[k]))
            .fold(margin, f64::min);
        let bound = if gap > 0.0 {
            let vol: f64 = support.lo.iter().zip(&support.hi).map(|(a, b)| b - a).product();
            exterior_bound(params, vol, sup_estimate(f, &support), gap)
        } else {
            f64::INFINITY
        };
        out.push(
            "exterior_bound",
            bound,
            "bound of tuples leaving the bounding box (not included)",
        );
    }
    Ok(out)
}

#[derive(Clone, Copy)]
enum Component {
    /// Uniform mode.
    PureUniform,
    /// The uniform component of the stratified mixture.
    Defensive,
    Stratum(usize),
}

struct Run<'a> {
    f: &'a FunctionModel,
    domain: &'a Domain,
    n: usize,
    p: f64,
    q: f64,
    volume: f64,
    r_min: f64,
    r_max: f64,
    cutoff: f64,
    strata: usize,
    log_span: f64,
    rng: CounterRng,
    k: i32,
    ball_power: f64,
    seed: u64,
}

impl<'a> Run<'a> {
    fn new(
        f: &'a FunctionModel,
        domain: &'a Domain,
        params: &EnergyParams,
        sampler: &SamplerConfig,
        r_min: f64,
        r_max: f64,
        seed: u64,
    ) -> Self {
        let n = params.n();
        Self {
            f,
            domain,
            n,
            p: params.p(),
            q: params.q(),
            volume: domain.volume(),
            r_min,
            r_max,
            cutoff: sampler.cutoff,
            strata: sampler.strata.max(1),
            log_span: (r_max / r_min).ln(),
            rng: CounterRng::new(seed).stream(STREAM),
            k: (n * (n + 1)) as i32,
            ball_power: unit_ball_volume(n).powi(n as i32 + 1),
            seed,
        }
    }

    /// Density of `(x_1,…,x_{n+1})` given `x_0` under the stratified mixture.
    fn mixture_density(&self, rho: f64) -> f64 {
        let share = 1.0 / (self.strata + 1) as f64;
        let log_part = if rho < self.r_max {
            let a = rho.max(self.r_min);
            (a.powi(-self.k) - self.r_max.powi(-self.k)) / (self.k as f64 * self.log_span * self.ball_power)
        } else {
            0.0
        };
        let uniform = self.volume.powi(-(self.n as i32 + 1));
        share * self.strata as f64 * log_part + share * uniform
    }

    fn draw(&self, i: u64, component: Component) -> Draw {
        let n = self.n;
        let m = n + 2;
        let mut d = self.rng.sample(i);
        let mut xs = [0.0f64; MAX_POINTS];
        let mut vals = [0.0f64; 8];
        let xs = &mut xs[..m * n];
        let (x0, rest) = xs.split_at_mut(n);
        self.domain.sample(&mut d, x0);
        match component {
            Component::PureUniform | Component::Defensive => {
                for pt in rest.chunks_exact_mut(n) {
                    self.domain.sample(&mut d, pt);
                }
            }
            Component::Stratum(j) => {
                let width = self.log_span / self.strata as f64;
                let r = self.r_min * ((j as f64 + d.uniform()) * width).exp();
                let mut outside = false;
                for pt in rest.chunks_exact_mut(n) {
                    d.in_ball(r, pt);
                    for (v, c) in pt.iter_mut().zip(x0.iter()) {
                        *v += c;
                    }
                    outside |= !self.domain.contains(pt);
                }
                if outside {
                    return Draw::Rejected;
                }
            }
        }
        let rho = xs[n..]
            .chunks_exact(n)
            .map(|pt| pt.iter().zip(&xs[..n]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
            .fold(0.0f64, f64::max)
            .sqrt();
        if rho < self.cutoff {
            return Draw::Accepted(0.0);
        }
        for (v, pt) in vals.iter_mut().zip(xs.chunks_exact(n)) {
            *v = self.f.value(pt);
        }
        let mut scratch = KernelScratch::new(n);
        let kernel = match scratch.eval(xs, &vals[..m], self.p, self.q) {
            KernelValue::Value(v) => v,
            KernelValue::Degenerate => return Draw::Invalid,
        };
        let weight = match component {
            Component::PureUniform => self.volume.powi(m as i32),
            _ => self.volume / self.mixture_density(rho),
        };
        Draw::Accepted(kernel * weight)
    }

    /// Equal allocation over the strata and the uniform component; the
    /// variance is combined from the per-component sample variances. The
    /// returned acceptance counts the radius strata only.
    fn stratified(&self, samples: u64) -> (Estimate, f64) {
        let parts = (self.strata + 1) as u64;
        let per = samples.div_ceil(parts);
        let mut value = 0.0;
        let mut var = 0.0;
        let mut accepted = 0u64;
        let mut invalid = 0u64;
        let mut total = Moments::default();
        for c in 0..parts {
            let comp = if c == 0 {
                Component::Defensive
            } else {
                Component::Stratum(c as usize - 1)
            };
            let t = tally(c * per, per, |i| self.draw(i, comp));
            let w = 1.0 / parts as f64;
            value += w * t.moments.mean;
            var += w * w * t.moments.variance() / per as f64;
            invalid += t.invalid;
            if c > 0 {
                accepted += t.accepted;
                total.merge(&t.moments);
            }
        }
        let est = Estimate {
            value,
            stderr: var.sqrt(),
            samples: per * parts,
            seed: Some(self.seed),
            invalid_samples: invalid,
        };
        (est, accepted as f64 / total.count as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::energy_pq_quadrature_1d;
    use crate::funcspace::{test_function, FunctionParams};

    fn quad() -> FunctionModel {
        test_function("quadratic", 1, &FunctionParams::new()).unwrap()
    }

    #[test]
    fn affine_is_exactly_zero() {
        let f = test_function("affine", 2, &FunctionParams::new()).unwrap();
        let u = Domain::cube(2, 0.0, 1.0).unwrap();
        let params = EnergyParams::new(2, 0.5, 3.0).unwrap();
        let e = energy_pq_mc(&f, &u, &params, &SamplerConfig::default(), 1000, 1)
            .unwrap()
            .estimate;
        assert_eq!((e.value, e.stderr), (0.0, 0.0));
    }

    #[test]
    fn coupled_amplitude() {
        let f = test_function("gaussian-bump", 2, &[("sigma".to_string(), 0.3)].into()).unwrap();
        let u = Domain::cube(2, -1.0, 1.0).unwrap();
        let params = EnergyParams::new(2, 0.5, 3.0).unwrap();
        for sampler in [SamplerConfig::uniform(), SamplerConfig::stratified()] {
            let a = energy_pq_mc(&f, &u, &params, &sampler, 5000, 3).unwrap().value();
            let b = energy_pq_mc(&f.scaled(-3.0), &u, &params, &sampler, 5000, 3)
                .unwrap()
                .value();
            assert!((b - 27.0 * a).abs() < 1e-10 * b, "{a} {b}");
        }
    }

    #[test]
    fn agrees_with_quadrature() {
        let u = Domain::interval(0.0, 1.0).unwrap();
        let params = EnergyParams::new(1, 0.5, 2.0).unwrap();
        let exact = energy_pq_quadrature_1d(&quad(), &u, &params, 2).unwrap().value();
        for sampler in [SamplerConfig::uniform(), SamplerConfig::stratified()] {
            let e = energy_pq_mc(&quad(), &u, &params, &sampler, 200_000, 5)
                .unwrap()
                .estimate;
            assert!(
                (e.value - exact).abs() < 3.0 * e.stderr,
                "{sampler:?}: {e:?} vs {exact}"
            );
        }
    }

    #[test]
    fn independent_of_thread_count() {
        let f = test_function("sine-pack", 2, &FunctionParams::new()).unwrap();
        let u = Domain::ball(vec![0.0, 0.0], 1.0).unwrap();
        let params = EnergyParams::new(2, 0.5, 3.0).unwrap();
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| {
                    energy_pq_mc(&f, &u, &params, &SamplerConfig::default(), 30_000, 9)
                        .unwrap()
                        .estimate
                })
        };
        let one = run(1);
        assert_eq!(one, run(3));
        assert_eq!(one.value.to_bits(), run(8).value.to_bits());
    }

    #[test]
    fn bad_radii_and_low_acceptance() {
        let u = Domain::interval(0.0, 1.0).unwrap();
        let params = EnergyParams::new(1, 0.5, 2.0).unwrap();
        let cfg = SamplerConfig {
            r_max: Some(2.0),
            ..SamplerConfig::stratified()
        };
        assert!(energy_pq_mc(&quad(), &u, &params, &cfg, 100, 0).is_err());
        let thin = Domain::new_box(vec![0.0, 0.0], vec![1.0, 1e-5]).unwrap();
        let f = test_function("quadratic", 2, &FunctionParams::new()).unwrap();
        let params = EnergyParams::new(2, 0.5, 3.0).unwrap();
        let cfg = SamplerConfig {
            r_min: Some(0.5),
            strata: 2,
            ..SamplerConfig::stratified()
        };
        assert!(matches!(
            energy_pq_mc(&f, &thin, &params, &cfg, 5000, 0),
            Err(Error::Diagnostic(_))
        ));
    }

    #[test]
    fn cutoff_removes_small_tuples_on_the_same_draws() {
        let u = Domain::interval(-1.0, 1.0).unwrap();
        let f = test_function("gaussian-bump", 1, &FunctionParams::new()).unwrap();
        let params = EnergyParams::new(1, 0.5, 2.0).unwrap();
        let at = |cutoff: f64| {
            let cfg = SamplerConfig {
                r_min: Some(1e-4),
                cutoff,
                ..SamplerConfig::stratified()
            };
            energy_pq_mc(&f, &u, &params, &cfg, 20_000, 3).unwrap().value()
        };
        let values: Vec<f64> = [0.0, 1e-3, 1e-2, 1e-1, 1.0].iter().map(|&c| at(c)).collect();
        assert!(values.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)), "{values:?}");
        assert!(values[4] < values[0]);
        let bad = SamplerConfig {
            cutoff: 5.0,
            ..SamplerConfig::stratified()
        };
        assert!(energy_pq_mc(&f, &u, &params, &bad, 100, 0).is_err());
    }
}
