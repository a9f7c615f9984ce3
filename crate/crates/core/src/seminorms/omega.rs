use serde::{Deserialize, Serialize};

use super::affine_fit::{fit_from_samples, tensor_rule, AffineFit, FIT_ORDER};
use crate::error::{invalid, Result};
use crate::funcspace::FunctionModel;

/// Search resolution of [`omega`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OmegaConfig {
    /// Cube corner positions per axis, spread over `[x − t, x]`.
    pub offsets: usize,
    /// Sup-norm sample points per axis inside each cube (including its faces).
    pub sup_points: usize,
}

impl Default for OmegaConfig {
    fn default() -> Self {
        Self {
            offsets: 5,
            sup_points: 17,
        }
    }
}

/// Lower bound of `Ω_f(x, t) = sup_{Q ∋ x, side t} ‖f − P_Q f‖_∞(Q)` together
/// with the search resolution that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaBound {
    pub value: f64,
    pub config: OmegaConfig,
}

/// Reusable quadrature and sup-grid tables for repeated `Ω` evaluations.
#[derive(Debug, Clone)]
pub struct OmegaEvaluator {
    n: usize,
    config: OmegaConfig,
    fit_nodes: Vec<f64>,
    fit_weights: Vec<f64>,
}

impl OmegaEvaluator {
    pub fn new(n: usize, config: OmegaConfig) -> Result<Self> {
        if n == 0 || n > 8 {
            return invalid("Ω search supports dimensions 1 to 8");
        }
        if config.offsets < 1 || config.sup_points < 2 {
            return invalid("Ω search needs at least one offset and two sup points per axis");
        }
        let (fit_nodes, fit_weights) = tensor_rule(n, FIT_ORDER);
        Ok(Self {
            n,
            config,
            fit_nodes,
            fit_weights,
        })
    }

    pub fn config(&self) -> OmegaConfig {
        self.config
    }

    /// `P_Q f` for the cube `[lo, lo + t]`.
    pub fn fit(&self, f: &FunctionModel, lo: &[f64], t: f64) -> Result<AffineFit> {
        let center: Vec<f64> = lo.iter().map(|a| a + 0.5 * t).collect();
        let mut x = [0.0f64; 8];
        let vals: Vec<f64> = self
            .fit_nodes
            .chunks_exact(self.n)
            .map(|u| {
                for k in 0..self.n {
                    x[k] = center[k] + t * u[k];
                }
                f.value(&x[..self.n])
            })
            .collect();
        fit_from_samples(self.n, &center, t, &self.fit_nodes, &self.fit_weights, &vals)
    }

    /// `max |f − P|` over the `sup_points^n` grid of `[lo, lo + t]`.
    pub fn sup_deviation(&self, f: &FunctionModel, fit: &AffineFit, lo: &[f64], t: f64) -> f64 {
        let n = self.n;
        let g = self.config.sup_points;
        let c0 = fit.value_at_center();
        let mut x = [0.0f64; 8];
        let mut best = 0.0f64;
        for flat in 0..g.pow(n as u32) {
            let mut rem = flat;
            let mut lin = c0;
            for k in (0..n).rev() {
                let i = rem % g;
                rem /= g;
                x[k] = if i + 1 == g {
                    lo[k] + t
                } else {
                    lo[k] + t * i as f64 / (g - 1) as f64
                };
                lin += fit.gradient[k] * (x[k] - fit.center[k]);
            }
            best = best.max((f.value(&x[..n]) - lin).abs());
        }
        best
    }

    /// Lower bound of `Ω_f(x, t)`; cube corners range over `x − t + t·j/(G−1)`.
    pub fn omega(&self, f: &FunctionModel, x: &[f64], t: f64) -> Result<f64> {
        let n = self.n;
        if x.len() != n || f.dim() != n {
            return invalid("point, function and evaluator dimensions differ");
        }
        if !(t > 0.0 && t.is_finite()) {
            return invalid("Ω needs a positive sidelength");
        }
        let lo: Vec<f64> = x.iter().map(|v| v - t).collect();
        let hi: Vec<f64> = x.iter().map(|v| v + t).collect();
        f.require_covers(&lo, &hi, "an Ω search cube")?;
        if f.is_affine() {
            return Ok(0.0);
        }
        let g = self.config.offsets;
        let mut corner = [0.0f64; 8];
        let mut best = 0.0f64;
        for flat in 0..g.pow(n as u32) {
            let mut rem = flat;
            for k in (0..n).rev() {
                let j = rem % g;
                rem /= g;
                corner[k] = if g == 1 {
                    x[k] - 0.5 * t
                } else if j + 1 == g {
                    x[k]
                } else {
                    x[k] - t + t * j as f64 / (g - 1) as f64
                };
            }
            let fit = self.fit(f, &corner[..n], t)?;
            best = best.max(self.sup_deviation(f, &fit, &corner[..n], t));
        }
        Ok(best)
    }
}

/// Lower bound of `Ω_f(x, t)` over a finite lattice of cubes.
pub fn omega(f: &FunctionModel, x: &[f64], t: f64, config: OmegaConfig) -> Result<OmegaBound> {
    let ev = OmegaEvaluator::new(f.dim(), config)?;
    Ok(OmegaBound {
        value: ev.omega(f, x, t)?,
        config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::{test_function, FunctionParams};

    #[test]
    fn quadratic_value() {
        let f = test_function("quadratic", 1, &FunctionParams::new()).unwrap();
        for (x, t) in [(0.3, 0.5), (-2.0, 0.01), (1.0, 2.0)] {
            let w = omega(&f, &[x], t, OmegaConfig::default()).unwrap().value;
            assert!((w - t * t / 6.0).abs() < 1e-6 * t * t, "{w} vs {}", t * t / 6.0);
        }
    }

    #[test]
    fn affine_and_scaling() {
        let f = test_function("gaussian-bump", 2, &[("sigma".to_string(), 0.3)].into()).unwrap();
        let ev = OmegaEvaluator::new(2, OmegaConfig::default()).unwrap();
        let x = [0.1, 0.2];
        let base = ev.omega(&f, &x, 0.3).unwrap();
        let scaled = ev.omega(&f.scaled(-4.0), &x, 0.3).unwrap();
        assert!((scaled - 4.0 * base).abs() < 1e-12 * scaled);
        let shifted = ev.omega(&f.plus_affine(0.5, &[1.0, -2.0]).unwrap(), &x, 0.3).unwrap();
        assert!((shifted - base).abs() < 1e-10 * base, "{shifted} vs {base}");
        let aff = FunctionModel::affine(1.0, vec![2.0, 3.0]);
        assert_eq!(ev.omega(&aff, &x, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn lattice_refinement_only_increases() {
        let f = test_function("sine-pack", 1, &FunctionParams::new()).unwrap();
        let coarse = omega(
            &f,
            &[0.1],
            0.2,
            OmegaConfig {
                offsets: 3,
                sup_points: 9,
            },
        )
        .unwrap()
        .value;
        let fine = omega(
            &f,
            &[0.1],
            0.2,
            OmegaConfig {
                offsets: 5,
                sup_points: 17,
            },
        )
        .unwrap()
        .value;
        assert!(fine >= coarse);
    }

    #[test]
    fn escaping_cube_is_an_error() {
        let g = test_function("grid", 1, &FunctionParams::new()).unwrap();
        assert!(omega(&g, &[0.05], 0.1, OmegaConfig::default()).is_err());
        assert!(omega(&g, &[0.5], 0.1, OmegaConfig::default()).is_ok());
    }
}
