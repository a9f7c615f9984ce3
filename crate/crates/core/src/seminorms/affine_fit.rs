use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::funcspace::FunctionModel;
use crate::quadrature::GaussLegendre;

/// Gauss points per axis of the moment quadrature.
pub const FIT_ORDER: usize = 10;

/// The affine function `P_Q f` matching the zeroth and first moments of `f` on
/// the cube `Q = center + [−t/2, t/2]^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineFit {
    /// `P(0)`.
    pub intercept: f64,
    pub gradient: Vec<f64>,
    pub center: Vec<f64>,
    pub side: f64,
}

impl AffineFit {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.intercept + self.gradient.iter().zip(x).map(|(g, v)| g * v).sum::<f64>()
    }

    /// `P` at the cube center; evaluating through the center avoids
    /// cancellation between a large intercept and the gradient term.
    pub fn value_at_center(&self) -> f64 {
        self.eval(&self.center)
    }
}

/// Tensor Gauss nodes (scaled to the unit-sidelength cube centered at the
/// origin) and weights summing to one.
pub(crate) fn tensor_rule(n: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let rule = GaussLegendre::cached(order);
    let total = order.pow(n as u32);
    let mut nodes = Vec::with_capacity(total * n);
    let mut weights = Vec::with_capacity(total);
    for flat in 0..total {
        let mut rem = flat;
        let mut w = 1.0;
        let start = nodes.len();
        nodes.resize(start + n, 0.0);
        for axis in (0..n).rev() {
            let i = rem % order;
            rem /= order;
            nodes[start + axis] = 0.5 * rule.nodes[i];
            w *= 0.5 * rule.weights[i];
        }
        weights.push(w);
    }
    (nodes, weights)
}

/// Solves the `(n+1)×(n+1)` moment system for `P_Q f`.
pub fn best_affine_fit(f: &FunctionModel, center: &[f64], side: f64) -> Result<AffineFit> {
    let n = f.dim();
    if center.len() != n {
        return invalid("cube center dimension differs from the function dimension");
    }
    if !(side > 0.0 && side.is_finite()) {
        return invalid("cube sidelength must be positive");
    }
    let lo: Vec<f64> = center.iter().map(|c| c - 0.5 * side).collect();
    let hi: Vec<f64> = center.iter().map(|c| c + 0.5 * side).collect();
    f.require_covers(&lo, &hi, "the cube")?;
    let (nodes, weights) = tensor_rule(n, FIT_ORDER);
    let vals: Vec<f64> = nodes
        .chunks_exact(n)
        .map(|u| {
            let x: Vec<f64> = u.iter().zip(center).map(|(a, c)| c + side * a).collect();
            f.value(&x)
        })
        .collect();
    fit_from_samples(n, center, side, &nodes, &weights, &vals)
}

/// Fit from values at the tensor nodes of [`tensor_rule`] mapped onto the cube.
pub(crate) fn fit_from_samples(
    n: usize,
    center: &[f64],
    side: f64,
    nodes: &[f64],
    weights: &[f64],
    vals: &[f64],
) -> Result<AffineFit> {
    // Basis {1, u_1, …, u_n} in the scaled coordinates u = (x − c)/t.
    let m = n + 1;
    let mut a = vec![0.0; m * m];
    let mut rhs = vec![0.0; m];
    let mut phi = vec![0.0; m];
    for ((u, w), v) in nodes.chunks_exact(n).zip(weights).zip(vals) {
        phi[0] = 1.0;
        phi[1..].copy_from_slice(u);
        for r in 0..m {
            rhs[r] += w * phi[r] * v;
            for c in 0..m {
                a[r * m + c] += w * phi[r] * phi[c];
            }
        }
    }
    let coef = solve(&mut a, &mut rhs, m)?;
    let gradient: Vec<f64> = coef[1..].iter().map(|g| g / side).collect();
    let intercept = coef[0] - gradient.iter().zip(center).map(|(g, c)| g * c).sum::<f64>();
    Ok(AffineFit {
        intercept,
        gradient,
        center: center.to_vec(),
        side,
    })
}

/// Gaussian elimination with partial pivoting.
fn solve(a: &mut [f64], b: &mut [f64], m: usize) -> Result<Vec<f64>> {
    let scale = a.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    for col in 0..m {
        let piv = (col..m)
            .max_by(|&i, &j| a[i * m + col].abs().total_cmp(&a[j * m + col].abs()))
            .expect("nonempty range");
        if !(a[piv * m + col].abs() > 1e-13 * scale) {
            return invalid("singular moment system: degenerate cube");
        }
        if piv != col {
            for c in 0..m {
                a.swap(piv * m + c, col * m + c);
            }
            b.swap(piv, col);
        }
        for r in col + 1..m {
            let factor = a[r * m + col] / a[col * m + col];
            for c in col..m {
                a[r * m + c] -= factor * a[col * m + c];
            }
            b[r] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; m];
    for r in (0..m).rev() {
        let tail: f64 = (r + 1..m).map(|c| a[r * m + c] * x[c]).sum();
        x[r] = (b[r] - tail) / a[r * m + r];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::{test_function, FunctionParams};

    fn quad() -> FunctionModel {
        test_function("quadratic", 1, &FunctionParams::new()).unwrap()
    }

    #[test]
    fn quadratic_on_unit_cube() {
        let fit = best_affine_fit(&quad(), &[0.0], 1.0).unwrap();
        assert!((fit.intercept - 1.0 / 12.0).abs() < 1e-14);
        assert!(fit.gradient[0].abs() < 1e-14);
    }

    #[test]
    fn quadratic_on_shifted_cube() {
        for c in [-2.0, 0.3, 5.0] {
            let fit = best_affine_fit(&quad(), &[c], 1.0).unwrap();
            assert!((fit.gradient[0] - 2.0 * c).abs() < 1e-12);
            assert!((fit.intercept - (-c * c + 1.0 / 12.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn affine_is_reproduced() {
        let f = FunctionModel::affine(0.7, vec![-1.5, 2.25]);
        let fit = best_affine_fit(&f, &[0.4, -0.1], 0.3).unwrap();
        assert!((fit.intercept - 0.7).abs() < 1e-12);
        assert!((fit.gradient[0] + 1.5).abs() < 1e-12);
        assert!((fit.gradient[1] - 2.25).abs() < 1e-12);
    }

    #[test]
    fn residual_moments_vanish() {
        let f = test_function("sine-pack", 2, &FunctionParams::new()).unwrap();
        let (c, t) = ([0.1, -0.05], 0.4);
        let fit = best_affine_fit(&f, &c, t).unwrap();
        // Independent, higher-order rule.
        let (nodes, weights) = tensor_rule(2, 30);
        let mut mom = [0.0; 3];
        for (u, w) in nodes.chunks_exact(2).zip(&weights) {
            let x = [c[0] + t * u[0], c[1] + t * u[1]];
            let r = f.value(&x) - fit.eval(&x);
            mom[0] += w * r;
            mom[1] += w * r * u[0];
            mom[2] += w * r * u[1];
        }
        assert!(mom.iter().all(|m| m.abs() < 1e-8), "{mom:?}");
    }

    #[test]
    fn bad_cubes() {
        assert!(best_affine_fit(&quad(), &[0.0], 0.0).is_err());
        let g = test_function("grid", 1, &FunctionParams::new()).unwrap();
        assert!(best_affine_fit(&g, &[0.95], 0.2).is_err());
    }
}
