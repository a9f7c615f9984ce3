use serde::{Deserialize, Serialize};

use super::AuditReport;
use crate::error::{invalid, Result};
use crate::funcspace::{BoxRegion, FunctionModel};
use crate::geometry::parallelotope_volume;
use crate::rng::CounterRng;

/// Relative tolerance of the factorization.
pub const LAPLACE_TOL: f64 = 1e-10;

const STREAM: u64 = 0x1a_91ace;

/// `|(0, Δ²_h f(x)) ∧ (w_1, f(x+w_1)−f(x)) ∧ … | = |Δ²_h f(x)|·|w_1 ∧ … ∧ w_n|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaplaceCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub discrepancy: f64,
    pub passed: bool,
}

pub fn laplace_identity_check(f: &FunctionModel, x: &[f64], h: &[f64], ws: &[Vec<f64>]) -> Result<LaplaceCheck> {
    let n = f.dim();
    if x.len() != n || h.len() != n || ws.len() != n || ws.iter().any(|w| w.len() != n) {
        return invalid(format!("the check needs x, h and {n} vectors of R^{n}"));
    }
    let shift = |v: &[f64], sign: f64| -> Vec<f64> { x.iter().zip(v).map(|(a, b)| a + sign * b).collect() };
    let mut points = vec![x.to_vec(), shift(h, 1.0), shift(h, -1.0)];
    points.extend(ws.iter().map(|w| shift(w, 1.0)));
    for p in &points {
        f.require_covers(p, p, "a shifted point")?;
    }
    let fx = f.value(x);
    let d2 = if f.is_affine() {
        0.0
    } else {
        f.value(&points[1]) - 2.0 * fx + f.value(&points[2])
    };
    let d = n + 1;
    // The volume is linear in the first row; a power-of-two rescaling of it
    // keeps tiny second differences clear of underflow without rounding.
    let k = if d2 == 0.0 { 0 } else { d2.abs().log2().floor() as i32 };
    let mut lifted = vec![0.0; d * d];
    lifted[n] = ldexp(d2, -k);
    for (i, w) in ws.iter().enumerate() {
        let row = &mut lifted[(i + 1) * d..(i + 2) * d];
        row[..n].copy_from_slice(w);
        row[n] = f.value(&points[3 + i]) - fx;
    }
    let lhs = ldexp(parallelotope_volume(&mut lifted, d, d), k);
    let mut flat: Vec<f64> = ws.concat();
    let rhs = d2.abs() * parallelotope_volume(&mut flat, n, n);
    let scale = lhs.abs().max(rhs.abs());
    let discrepancy = if scale == 0.0 { 0.0 } else { (lhs - rhs).abs() / scale };
    Ok(LaplaceCheck {
        lhs,
        rhs,
        discrepancy,
        passed: discrepancy <= LAPLACE_TOL,
    })
}

/// `x·2^e`, exact for normal results; split so that `2^e` itself stays finite.
fn ldexp(x: f64, e: i32) -> f64 {
    x * 2f64.powi(e / 2) * 2f64.powi(e - e / 2)
}

/// Random `x` in `region`, `h` and `w_i` in the ball of radius `scale`.
/// `worst` is the largest relative discrepancy.
pub fn laplace_audit(f: &FunctionModel, region: &BoxRegion, scale: f64, count: u64, seed: u64) -> Result<AuditReport> {
    let n = f.dim();
    if region.lo.len() != n {
        return invalid("audit region dimension differs from the function dimension");
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return invalid("offset scale must be positive");
    }
    let rng = CounterRng::new(seed).stream(STREAM);
    let mut report = AuditReport {
        checked: 0,
        violations: 0,
        worst: 0.0,
    };
    for i in 0..count {
        let mut d = rng.sample(i);
        let x: Vec<f64> = (0..n)
            .map(|k| region.lo[k] + (region.hi[k] - region.lo[k]) * d.uniform())
            .collect();
        let mut h = vec![0.0; n];
        d.in_ball(scale, &mut h);
        let ws: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let mut w = vec![0.0; n];
                d.in_ball(scale, &mut w);
                w
            })
            .collect();
        let c = laplace_identity_check(f, &x, &h, &ws)?;
        report.checked += 1;
        if !c.passed {
            report.violations += 1;
        }
        report.worst = report.worst.max(c.discrepancy);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::{test_function, FunctionParams};

    #[test]
    fn quadratic_example() {
        let f = test_function("quadratic", 1, &FunctionParams::new()).unwrap();
        let c = laplace_identity_check(&f, &[0.5], &[0.25], &[vec![0.1]]).unwrap();
        assert!((c.lhs - 0.0125).abs() < 1e-15 && (c.rhs - 0.0125).abs() < 1e-15);
        assert!(c.passed);
    }

    #[test]
    fn affine_gives_zero() {
        let f = test_function("affine", 2, &FunctionParams::new()).unwrap();
        let c = laplace_identity_check(&f, &[0.1, 0.2], &[0.3, -0.1], &[vec![1.0, 0.0], vec![0.5, 2.0]]).unwrap();
        assert_eq!((c.lhs, c.rhs, c.discrepancy), (0.0, 0.0, 0.0));
    }

    #[test]
    fn tiny_second_differences_do_not_underflow() {
        let f = test_function("quadratic", 1, &FunctionParams::new())
            .unwrap()
            .scaled(1e-300);
        let c = laplace_identity_check(&f, &[0.5], &[1e-5], &[vec![0.1]]).unwrap();
        assert!(c.rhs > 0.0 && c.passed, "{c:?}");
    }

    #[test]
    fn audit_in_three_dimensions() {
        let f = test_function("sine-pack", 3, &FunctionParams::new()).unwrap();
        let region = BoxRegion::new(vec![-0.3; 3], vec![0.3; 3]);
        let r = laplace_audit(&f, &region, 0.2, 2000, 7).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.worst < 1e-12, "{}", r.worst);
    }

    #[test]
    fn wrong_shapes() {
        let f = test_function("quadratic", 2, &FunctionParams::new()).unwrap();
        assert!(laplace_identity_check(&f, &[0.0, 0.0], &[0.1, 0.1], &[vec![1.0, 0.0]]).is_err());
    }
}
