use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::funcspace::{BoxRegion, FunctionModel};
use crate::geometry::{diameter, unit_ball_volume, KernelScratch, PointTuple};
use crate::rng::CounterRng;
use crate::seminorms::{OmegaConfig, OmegaEvaluator};

/// Allowance for the grid sup being a lower bound of the true sup.
pub const LEMMA_SLACK: f64 = 1.05;

const STREAM: u64 = 0x1e_b7a;

/// `H^{n+1}(Δ(F(x_0),…,F(x_{n+1}))) ≤ 2 ω_n d^n ‖f − P_Q f‖_{sup(Q)}` for the
/// cube `Q` of sidelength `2d` centered at `x_0`, `d` the tuple diameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaBetaCheck {
    pub lhs: f64,
    /// `LEMMA_SLACK · 2 ω_n d^n · sup_deviation`.
    pub rhs: f64,
    pub diameter: f64,
    pub sup_deviation: f64,
    pub holds: bool,
}

pub fn check_lemma_beta(f: &FunctionModel, tuple: &PointTuple, x0: usize) -> Result<LemmaBetaCheck> {
    let ev = OmegaEvaluator::new(f.dim(), OmegaConfig::default())?;
    check_with(f, tuple, x0, &ev, &mut KernelScratch::new(f.dim()))
}

fn check_with(
    f: &FunctionModel,
    tuple: &PointTuple,
    x0: usize,
    ev: &OmegaEvaluator,
    scratch: &mut KernelScratch,
) -> Result<LemmaBetaCheck> {
    let n = f.dim();
    if tuple.dim() != n || tuple.len() != n + 2 {
        return invalid(format!("the check needs {} points of R^{n}", n + 2));
    }
    if x0 >= tuple.len() {
        return invalid("base point index out of range");
    }
    let d = diameter(tuple)?;
    let base = tuple.point(x0);
    let lo: Vec<f64> = base.iter().map(|v| v - d).collect();
    let hi: Vec<f64> = base.iter().map(|v| v + d).collect();
    f.require_covers(&lo, &hi, "the cube around the base point")?;
    let vals: Vec<f64> = tuple.points().map(|x| f.value(x)).collect();
    let lhs = scratch.lifted_volume(tuple.as_flat(), &vals);
    if d == 0.0 || f.is_affine() {
        return Ok(LemmaBetaCheck {
            lhs,
            rhs: 0.0,
            diameter: d,
            sup_deviation: 0.0,
            holds: lhs == 0.0,
        });
    }
    let fit = ev.fit(f, &lo, 2.0 * d)?;
    // The tuple lies in Q, so its own deviations belong to the sup.
    let at_points = tuple
        .points()
        .zip(&vals)
        .map(|(x, v)| (v - fit.eval(x)).abs())
        .fold(0.0f64, f64::max);
    let sup = ev.sup_deviation(f, &fit, &lo, 2.0 * d).max(at_points);
    let rhs = LEMMA_SLACK * 2.0 * unit_ball_volume(n) * d.powi(n as i32) * sup;
    Ok(LemmaBetaCheck {
        lhs,
        rhs,
        diameter: d,
        sup_deviation: sup,
        holds: lhs <= rhs,
    })
}

/// Outcome of a randomized audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub checked: u64,
    pub violations: u64,
    /// Largest `lhs / rhs` (or relative discrepancy) seen.
    pub worst: f64,
}

/// Random tuples with base point uniform in `region` and the other points in
/// the ball of radius `ρ` around it, `ρ` log-uniform over ten octaves below
/// the smallest width of `region`.
pub fn lemma_beta_audit(f: &FunctionModel, region: &BoxRegion, tuples: u64, seed: u64) -> Result<AuditReport> {
    let n = f.dim();
    if region.lo.len() != n {
        return invalid("audit region dimension differs from the function dimension");
    }
    let ev = OmegaEvaluator::new(n, OmegaConfig::default())?;
    let width = region
        .lo
        .iter()
        .zip(&region.hi)
        .map(|(a, b)| b - a)
        .fold(f64::INFINITY, f64::min);
    let rng = CounterRng::new(seed).stream(STREAM);
    let mut scratch = KernelScratch::new(n);
    let mut report = AuditReport {
        checked: 0,
        violations: 0,
        worst: 0.0,
    };
    for i in 0..tuples {
        let mut d = rng.sample(i);
        let mut pts = vec![vec![0.0; n]; n + 2];
        for (k, v) in pts[0].iter_mut().enumerate() {
            *v = region.lo[k] + (region.hi[k] - region.lo[k]) * d.uniform();
        }
        let rho = width * 2f64.powf(-10.0 * d.uniform());
        for j in 1..n + 2 {
            let mut off = vec![0.0; n];
            d.in_ball(rho, &mut off);
            pts[j] = pts[0].iter().zip(&off).map(|(a, b)| a + b).collect();
        }
        let x0 = (d.uniform() * (n + 2) as f64) as usize % (n + 2);
        let c = check_with(f, &PointTuple::new(&pts)?, x0, &ev, &mut scratch)?;
        report.checked += 1;
        if !c.holds {
            report.violations += 1;
        }
        if c.rhs > 0.0 {
            report.worst = report.worst.max(c.lhs / c.rhs);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::{test_function, FunctionParams};

    fn tuple(pts: &[f64]) -> PointTuple {
        PointTuple::new(&pts.iter().map(|v| vec![*v]).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn quadratic_on_three_points() {
        let f = test_function("quadratic", 1, &FunctionParams::new()).unwrap();
        let c = check_lemma_beta(&f, &tuple(&[0.0, 0.5, 1.0]), 0).unwrap();
        assert!((c.lhs - 0.125).abs() < 1e-15);
        // 2·ω_1·d·(2d)²/6 with d = 1, then the slack.
        assert!((c.rhs - LEMMA_SLACK * 8.0 / 3.0).abs() < 1e-9, "{}", c.rhs);
        assert!(c.holds);
    }

    #[test]
    fn affine_gives_zero_on_both_sides() {
        let f = test_function("affine", 1, &FunctionParams::new()).unwrap();
        let c = check_lemma_beta(&f, &tuple(&[0.0, 0.3, 1.0]), 1).unwrap();
        assert_eq!((c.lhs, c.rhs), (0.0, 0.0));
        assert!(c.holds);
    }

    #[test]
    fn cube_escape_and_shape_errors() {
        let f = test_function("quadratic", 1, &FunctionParams::new())
            .unwrap()
            .with_region(vec![0.0], vec![1.0]);
        assert!(check_lemma_beta(&f, &tuple(&[0.0, 0.5, 1.0]), 0).is_err());
        assert!(check_lemma_beta(&f, &tuple(&[0.0, 0.5]), 0).is_err());
    }

    #[test]
    fn random_tuples_on_a_bump() {
        let f = test_function("gaussian-bump", 2, &FunctionParams::new()).unwrap();
        let region = BoxRegion::new(vec![-0.4, -0.4], vec![0.4, 0.4]);
        let r = lemma_beta_audit(&f, &region, 500, 1).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.worst > 0.0 && r.worst <= 1.0);
    }
}
