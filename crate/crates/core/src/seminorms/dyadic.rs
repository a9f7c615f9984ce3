//! One-dimensional integrals with an integrable power singularity at the origin.

use rayon::prelude::*;

use crate::quadrature::{graded_panels, GaussLegendre};

pub(crate) const ORDER: usize = 12;

/// `∫_ε^top I(h) dh` on dyadic panels `[top·2^{-k-1}, top·2^{-k}]`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct DyadicResult {
    pub value: f64,
    /// Extrapolated contribution of `[0, top·2^{-levels}]` (zero with a cutoff).
    pub bottom: f64,
    /// Fitted power `β` of `I(h) ~ h^β` at the bottom panel.
    pub slope: Option<f64>,
    /// `β ≤ −1`: the integral diverges at the origin.
    pub divergent: bool,
    pub nodes: u64,
}

/// With `cutoff > 0` the panels stop at the cutoff. Otherwise `levels` dyadic
/// panels are integrated and the remaining `[0, w]` is extrapolated from the
/// power law `A h^β + B h^{β+1}` fitted to `I(w)`, `I(2w)`, `I(4w)`.
pub(crate) fn dyadic_integral<F>(top: f64, levels: usize, cutoff: f64, integrand: F) -> DyadicResult
where
    F: Fn(f64) -> f64 + Sync,
{
    let rule = GaussLegendre::cached(ORDER);
    let mut edges = vec![top];
    if cutoff > 0.0 {
        if cutoff >= top {
            return DyadicResult {
                value: 0.0,
                bottom: 0.0,
                slope: None,
                divergent: false,
                nodes: 0,
            };
        }
        let mut e = top;
        while 0.5 * e > cutoff {
            e *= 0.5;
            edges.push(e);
        }
        edges.push(cutoff);
    } else {
        for k in 1..=levels {
            edges.push(top * 0.5f64.powi(k as i32));
        }
    }
    let nodes: Vec<(f64, f64)> = edges
        .windows(2)
        .flat_map(|w| rule.on(w[1], w[0]).collect::<Vec<_>>())
        .collect();
    let values: Vec<f64> = nodes.par_iter().map(|&(h, wt)| wt * integrand(h)).collect();
    let value: f64 = values.iter().sum();
    let mut out = DyadicResult {
        value,
        bottom: 0.0,
        slope: None,
        divergent: false,
        nodes: nodes.len() as u64,
    };
    if cutoff == 0.0 {
        let w = *edges.last().expect("at least one edge");
        let (i1, i2, i4) = (integrand(w), integrand(2.0 * w), integrand(4.0 * w));
        out.nodes += 3;
        if i1 != 0.0 && i2 != 0.0 && i4 != 0.0 {
            // The two-point exponent is off by O(w) when I(h) = K h^β (1 + O(h));
            // one Richardson step removes that term.
            let (b1, b2) = ((i2 / i1).log2(), (i4 / i2).log2());
            let beta = if (b1 - b2).abs() < 0.1 { 2.0 * b1 - b2 } else { b1 };
            out.slope = Some(beta);
            if beta > -1.0 {
                // I(h) = A h^β + B h^{β+1} through I(w) and I(2w).
                let a = i1 * w.powf(-beta);
                let b = i2 * (2.0 * w).powf(-beta);
                out.bottom = w.powf(beta + 1.0) * ((2.0 * a - b) / (beta + 1.0) + (b - a) / (beta + 2.0));
            } else {
                out.divergent = true;
            }
        }
    }
    out
}

/// `∫_lo^hi g` on panels split at `cuts` and graded toward them.
pub(crate) fn piecewise_integral(
    lo: f64,
    hi: f64,
    cuts: &[f64],
    base: usize,
    grade: usize,
    mut g: impl FnMut(f64) -> f64,
) -> f64 {
    if !(hi > lo) {
        return 0.0;
    }
    let rule = GaussLegendre::cached(ORDER);
    graded_panels(lo, hi, cuts, base, grade)
        .iter()
        .map(|&(a, b)| rule.integrate(a, b, &mut g))
        .sum()
}
