use super::validate;
use crate::error::{Error, Result};
use crate::estimate::{Estimate, Outcome};
use crate::funcspace::{Domain, EnergyParams, FunctionModel};
use crate::geometry::{KernelScratch, KernelValue};
use crate::seminorms::{dyadic_integral, piecewise_integral, rel_change};

/// Deterministic `E_{p,q}(f)` for `n = 1` on an interval (or the bounding
/// interval of a truncated full space).
///
/// By symmetry `E = 6 ∫_{x_0<x_1<x_2}`; with `x_1 = u + θD`, `x_2 = u + D`
/// the integrand is `D·K` over `D ∈ (0, b−a)`, `u ∈ (a, b−D)`, `θ ∈ (0, 1)`.
/// `D` runs over `8 + 2·depth` dyadic panels toward the diagonal with a
/// power-law extrapolation of the last one; `u` and `θ` use panels graded
/// toward the model breakpoints. The value is compared with depth − 1 and
/// flagged when the change exceeds 1%.
pub fn energy_pq_quadrature_1d(
    f: &FunctionModel,
    domain: &Domain,
    params: &EnergyParams,
    depth: usize,
) -> Result<Outcome> {
    if domain.dim() != 1 || params.n() != 1 {
        return Err(Error::Unsupported("energy quadrature is one-dimensional".into()));
    }
    validate(f, domain, params)?;
    let (lo, hi) = domain.bounding_box();
    let (a, b) = (lo[0], hi[0]);
    if f.is_affine() {
        return Ok(Outcome::new(Estimate::deterministic(0.0, 0)));
    }
    let fine = pass(f, a, b, params, depth);
    let mut out = Outcome::new(Estimate::deterministic(fine.value, fine.nodes));
    out.push(
        "diagonal_extrapolation",
        fine.bottom,
        "extrapolated contribution of the smallest diameter panel",
    );
    if let Some(beta) = fine.slope {
        out.push(
            "diagonal_power",
            beta,
            "fitted exponent of the diameter integrand near the diagonal",
        );
    }
    if fine.divergent {
        out.flagged = true;
        out.push(
            "divergent_at_diagonal",
            1.0,
            "integrand decays no faster than 1/D: the energy is infinite",
        );
    }
    if depth > 0 {
        let coarse = pass(f, a, b, params, depth - 1);
        let change = rel_change(fine.value, coarse.value);
        out.push("refinement_change", change, "relative change against depth - 1");
        if change > 0.01 {
            out.flagged = true;
        }
    }
    Ok(out)
}

struct Pass {
    value: f64,
    bottom: f64,
    slope: Option<f64>,
    divergent: bool,
    nodes: u64,
}

fn pass(f: &FunctionModel, a: f64, b: f64, params: &EnergyParams, depth: usize) -> Pass {
    let (p, q) = (params.p(), params.q());
    let levels = 8 + 2 * depth;
    let base = 2 * (depth + 1);
    let grade = 6 + 2 * depth;
    let breaks = f.breakpoints();
    let integrand = |dd: f64| -> f64 {
        let mut scratch = KernelScratch::new(1);
        let mut ucuts = Vec::with_capacity(2 * breaks.len());
        for c in breaks {
            ucuts.extend([*c, c - dd]);
        }
        let inner = piecewise_integral(a, b - dd, &ucuts, base, grade, |u| {
            let f0 = f.value(&[u]);
            let f2 = f.value(&[u + dd]);
            let tcuts: Vec<f64> = breaks
                .iter()
                .map(|c| (c - u) / dd)
                .filter(|t| *t > 0.0 && *t < 1.0)
                .collect();
            piecewise_integral(0.0, 1.0, &tcuts, base, grade, |theta| {
                let x1 = u + theta * dd;
                let xs = [u, x1, u + dd];
                let vals = [f0, f.value(&[x1]), f2];
                match scratch.eval(&xs, &vals, p, q) {
                    KernelValue::Value(v) => v,
                    KernelValue::Degenerate => 0.0,
                }
            })
        });
        6.0 * dd * inner
    };
    let r = dyadic_integral(b - a, levels, 0.0, integrand);
    Pass {
        value: r.value + if r.divergent { 0.0 } else { r.bottom },
        bottom: r.bottom,
        slope: r.slope,
        divergent: r.divergent,
        nodes: r.nodes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::{test_function, FunctionParams};

    /// `6·2^{-p}·B(p+1, p+1)/(a(a+1))`, `a = p(1−s)`, for `x²` on `(0, 1)`.
    fn closed_form(s: f64, p: f64) -> f64 {
        let beta = (lgamma(p + 1.0) * 2.0 - lgamma(2.0 * p + 2.0)).exp();
        let a = p * (1.0 - s);
        6.0 * 2f64.powf(-p) * beta / (a * (a + 1.0))
    }

    fn lgamma(x: f64) -> f64 {
        // Integer and half-integer arguments only.
        let mut v = 0.0;
        let mut y = x;
        while y > 1.5 {
            y -= 1.0;
            v += y.ln();
        }
        if (y - 0.5).abs() < 1e-12 {
            v += std::f64::consts::PI.sqrt().ln();
        }
        v
    }

    #[test]
    fn quadratic_closed_form() {
        let f = test_function("quadratic", 1, &FunctionParams::new()).unwrap();
        let u = Domain::interval(0.0, 1.0).unwrap();
        for (s, p) in [(0.5, 2.0), (0.5, 3.0), (0.25, 2.0)] {
            let params = EnergyParams::new(1, s, p).unwrap();
            let o = energy_pq_quadrature_1d(&f, &u, &params, 2).unwrap();
            let want = closed_form(s, p);
            assert!(
                (o.value() - want).abs() < 1e-6 * want,
                "s={s} p={p}: {} vs {want}",
                o.value()
            );
            assert!(!o.flagged);
        }
        assert!((closed_form(0.5, 2.0) - 0.025).abs() < 1e-15);
    }

    #[test]
    fn shear_invariance() {
        let f = test_function("quadratic", 1, &FunctionParams::new()).unwrap();
        let g = f.plus_affine(-3.0, &[7.0]).unwrap();
        let u = Domain::interval(0.0, 1.0).unwrap();
        let params = EnergyParams::new(1, 0.5, 2.0).unwrap();
        let a = energy_pq_quadrature_1d(&f, &u, &params, 1).unwrap().value();
        let b = energy_pq_quadrature_1d(&g, &u, &params, 1).unwrap().value();
        assert!((a - b).abs() < 1e-10 * a, "{a} vs {b}");
    }

    #[test]
    fn rejects_higher_dimensions() {
        let f = test_function("quadratic", 2, &FunctionParams::new()).unwrap();
        let u = Domain::cube(2, 0.0, 1.0).unwrap();
        let params = EnergyParams::new(2, 0.5, 3.0).unwrap();
        assert!(energy_pq_quadrature_1d(&f, &u, &params, 1).is_err());
    }
}
