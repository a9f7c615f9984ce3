//! Estimators of the graph energy
//! `E_{p,q}(f) = ∫_{U^{n+2}} K_{p,q}(x_0,…,x_{n+1}) dx_0…dx_{n+1}`.
//!
//! Monte Carlo works in any dimension and is bit-reproducible for a given
//! seed regardless of the thread count. A deterministic tensor quadrature is
//! provided for `n = 1` as an oracle.

mod mc;
mod quadrature;
mod scaling;

pub use mc::{energy_pq_mc, SamplerConfig, SamplerMode};
pub use quadrature::energy_pq_quadrature_1d;
pub use scaling::{energy_scaling_probe, Coupling, ScalingProbe};

use crate::error::{invalid, Result};
use crate::funcspace::{BoxRegion, Domain, EnergyParams, FunctionModel};
use crate::geometry::unit_ball_volume;

/// Largest supported `n` for the energy estimators.
pub const MAX_DIM: usize = 6;

fn validate(f: &FunctionModel, domain: &Domain, params: &EnergyParams) -> Result<()> {
    let n = params.n();
    if n > MAX_DIM {
        return invalid(format!("energy estimators support n ≤ {MAX_DIM}"));
    }
    if f.dim() != n || domain.dim() != n {
        return invalid("function, domain and parameter dimensions differ");
    }
    let (lo, hi) = domain.bounding_box();
    f.require_covers(&lo, &hi, "the domain")
}

/// `sup|f|` from the model, else the maximum over a grid of the box.
pub(crate) fn sup_estimate(f: &FunctionModel, b: &BoxRegion) -> f64 {
    if let Some(m) = f.sup_abs() {
        return m;
    }
    let n = f.dim();
    let g = grid_size(n);
    let mut x = vec![0.0; n];
    let mut best = 0.0f64;
    for flat in 0..g.pow(n as u32) {
        grid_point(b, g, flat, &mut x);
        best = best.max(f.value(&x).abs());
    }
    best
}

fn grid_size(n: usize) -> usize {
    match n {
        1 => 257,
        2 => 65,
        3 => 17,
        _ => 7,
    }
}

fn grid_point(b: &BoxRegion, g: usize, flat: usize, x: &mut [f64]) {
    let mut rem = flat;
    for k in (0..x.len()).rev() {
        let i = rem % g;
        rem /= g;
        x[k] = b.lo[k] + (b.hi[k] - b.lo[k]) * i as f64 / (g - 1) as f64;
    }
}

/// Largest Frobenius norm of a central-difference Hessian over a grid of the
/// box shrunk by the stencil width.
pub(crate) fn hessian_estimate(f: &FunctionModel, b: &BoxRegion) -> f64 {
    let n = f.dim();
    let h = b.lo.iter().zip(&b.hi).map(|(a, c)| c - a).fold(f64::INFINITY, f64::min) * 1e-3;
    let inner = BoxRegion::new(
        b.lo.iter().map(|v| v + 2.0 * h).collect(),
        b.hi.iter().map(|v| v - 2.0 * h).collect(),
    );
    let g = grid_size(n).min(33);
    let mut x = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut best = 0.0f64;
    for flat in 0..g.pow(n as u32) {
        grid_point(&inner, g, flat, &mut x);
        let mut frob = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut at = |di: f64, dj: f64| {
                    y.copy_from_slice(&x);
                    y[i] += di;
                    y[j] += dj;
                    f.value(&y)
                };
                let d = (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4.0 * h * h);
                frob += d * d;
            }
        }
        best = best.max(frob.sqrt());
    }
    best
}

/// Bound of the contribution of tuples with `max|x_i − x_0| < r` for a model
/// with `|D²f| ≤ m2`: `|U|·(m2/(2·n!))^p·k·ω_n^{n+1}·r^{p(1−s)}/(p(1−s))`, `k = n(n+1)`.
pub(crate) fn small_scale_bound(params: &EnergyParams, volume: f64, m2: f64, r: f64) -> f64 {
    let n = params.n();
    let (p, s) = (params.p(), params.s());
    let nf: f64 = (1..=n).map(|v| v as f64).product();
    let k = (n * (n + 1)) as f64;
    let a = p * (1.0 - s);
    volume * (m2 / (2.0 * nf)).powf(p) * k * unit_ball_volume(n).powi(n as i32 + 1) * r.powf(a) / a
}

/// Bound of the tuples of a truncated full space that leave the bounding box:
/// `(n+2)·|S|·(2ω_n(2+1.5n)M)^p·k·ω_n^{n+1}·margin^{−p(1+s)}/(p(1+s))`.
pub(crate) fn exterior_bound(params: &EnergyParams, support_volume: f64, sup: f64, margin: f64) -> f64 {
    let n = params.n();
    let (p, s) = (params.p(), params.s());
    let w = unit_ball_volume(n);
    let k = (n * (n + 1)) as f64;
    let decay = p * (1.0 + s);
    (n + 2) as f64
        * support_volume
        * (2.0 * w * (2.0 + 1.5 * n as f64) * sup).powf(p)
        * k
        * w.powi(n as i32 + 1)
        * margin.powf(-decay)
        / decay
}

/// Support box used for exterior bounds: the model's support if known,
/// otherwise the bounding box shrunk by the margin.
pub(crate) fn truncated_support(f: &FunctionModel, domain: &Domain) -> Option<BoxRegion> {
    let margin = domain.margin()?;
    Some(f.support().cloned().unwrap_or_else(|| {
        let (lo, hi) = domain.bounding_box();
        BoxRegion::new(
            lo.iter().map(|v| v + margin).collect(),
            hi.iter().map(|v| v - margin).collect(),
        )
    }))
}
