//! Fractional seminorms of order `1 + s`: the Gagliardo form on the gradient,
//! the second-difference seminorm `[f]^p`, and the local affine approximation
//! functional `⟦f⟧^p` built from `P_Q f` and `Ω_f(x, t)`.

mod affine_fit;
mod dorronsoro;
mod dyadic;
mod gagliardo;
mod omega;
mod second_diff;

pub use affine_fit::{best_affine_fit, AffineFit};
pub use dorronsoro::{dorronsoro_seminorm, DorronsoroConfig};
pub use gagliardo::{gagliardo_seminorm, gagliardo_with};
pub use omega::{omega, OmegaBound, OmegaConfig, OmegaEvaluator};
pub use second_diff::{second_diff_mc, second_diff_quadrature, second_diff_seminorm, second_diff_with, SeminormMethod};

pub(crate) use dyadic::{dyadic_integral, piecewise_integral};
pub(crate) use second_diff::rel_change;

use crate::error::{invalid, Result};
use crate::geometry::unit_ball_volume;

pub(crate) fn check_sp(s: f64, p: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return invalid(format!("s = {s} must lie in (0, 1)"));
    }
    if !(p > 1.0 && p.is_finite()) {
        return invalid(format!("p = {p} must be finite and greater than 1"));
    }
    Ok(())
}

/// Surface area of the unit sphere in R^n.
pub(crate) fn sphere_area(n: usize) -> f64 {
    n as f64 * unit_ball_volume(n)
}
