use std::collections::BTreeMap;

use super::model::{FunctionModel, GridData};
use crate::error::{invalid, Result};

/// Named numeric parameters of a catalog function.
pub type FunctionParams = BTreeMap<String, f64>;

/// Names accepted by [`test_function`].
pub const CATALOG_NAMES: [&str; 7] = [
    "affine",
    "quadratic",
    "gaussian-bump",
    "compact-bump",
    "sine-pack",
    "power-cusp",
    "grid",
];

fn get(params: &FunctionParams, key: &str, default: f64) -> f64 {
    params.get(key).copied().unwrap_or(default)
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Builds a catalog function of dimension `n`.
///
/// | name | formula | parameters (defaults) | smoothness |
/// |---|---|---|---|
/// | `affine` | `c + a·Σx_i` | `intercept` 0, `slope` 1 | affine |
/// | `quadratic` | `A·|x − c|²` | `amplitude` 1, `center` 0 | polynomial |
/// | `gaussian-bump` | `A·exp(−|x|²/2σ²)` | `amplitude` 1, `sigma` 0.1 | C^∞ |
/// | `compact-bump` | `A·exp(1 − 1/(1 − |x|²/r²))` on `|x| < r` | `amplitude` 1, `radius` 0.5 | C^∞_c |
/// | `sine-pack` | `sin(ω x_1 + φ)`·compact bump | `amplitude` 1, `radius` 0.5, `omega` 6, `phase` 0.5 | C^∞_c |
/// | `power-cusp` | `A·|x|^α` | `amplitude` 1, `alpha` 0.3 | C^{0,α} |
/// | `grid` | multilinear samples of `|x|²` on `[lo, hi]^n` | `lo` 0, `hi` 1, `points` 65 | C^{0,1} |
pub fn test_function(name: &str, n: usize, params: &FunctionParams) -> Result<FunctionModel> {
    if n == 0 {
        return invalid("function dimension must be positive");
    }
    if let Some(key) = params.keys().find(|k| !known_keys(name).contains(&k.as_str())) {
        return invalid(format!("unknown parameter `{key}` for `{name}`"));
    }
    let amp = get(params, "amplitude", 1.0);
    let model = match name {
        "affine" => {
            let slope = get(params, "slope", 1.0);
            FunctionModel::affine(get(params, "intercept", 0.0), vec![slope; n])
        }
        "quadratic" => {
            let c = get(params, "center", 0.0);
            FunctionModel::analytic(n, name, move |x| amp * x.iter().map(|v| (v - c) * (v - c)).sum::<f64>())
                .with_gradient(move |x, g| g.iter_mut().zip(x).for_each(|(gi, v)| *gi = 2.0 * amp * (v - c)))
        }
        "gaussian-bump" => {
            let sigma = get(params, "sigma", 0.1);
            if !(sigma > 0.0) {
                return invalid("sigma must be positive");
            }
            let k = 0.5 / (sigma * sigma);
            FunctionModel::analytic(n, name, move |x| amp * (-k * norm2(x)).exp())
                .with_gradient(move |x, g| {
                    let e = amp * (-k * norm2(x)).exp();
                    g.iter_mut().zip(x).for_each(|(gi, v)| *gi = -2.0 * k * v * e);
                })
                .with_sup_abs(amp.abs())
        }
        "compact-bump" => {
            let r = get(params, "radius", 0.5);
            if !(r > 0.0) {
                return invalid("radius must be positive");
            }
            let bump = bump_fn(r);
            let grad = bump_grad(r);
            FunctionModel::analytic(n, name, move |x| amp * bump(x))
                .with_gradient(move |x, g| {
                    grad(x, g);
                    g.iter_mut().for_each(|v| *v *= amp);
                })
                .with_support(vec![-r; n], vec![r; n])
                .with_sup_abs(amp.abs())
        }
        "sine-pack" => {
            let r = get(params, "radius", 0.5);
            if !(r > 0.0) {
                return invalid("radius must be positive");
            }
            let omega = get(params, "omega", 6.0);
            let phase = get(params, "phase", 0.5);
            let bump = bump_fn(r);
            let bump2 = bump_fn(r);
            let grad = bump_grad(r);
            FunctionModel::analytic(n, name, move |x| amp * (omega * x[0] + phase).sin() * bump(x))
                .with_gradient(move |x, g| {
                    grad(x, g);
                    let (sn, cs) = (omega * x[0] + phase).sin_cos();
                    g.iter_mut().for_each(|v| *v *= amp * sn);
                    g[0] += amp * omega * cs * bump2(x);
                })
                .with_support(vec![-r; n], vec![r; n])
                .with_sup_abs(amp.abs())
        }
        "power-cusp" => {
            let alpha = get(params, "alpha", 0.3);
            if !(alpha > 0.0) {
                return invalid("alpha must be positive");
            }
            FunctionModel::analytic(n, name, move |x| amp * norm2(x).powf(0.5 * alpha))
                .with_gradient(move |x, g| {
                    let r2 = norm2(x);
                    let c = if r2 > 0.0 {
                        amp * alpha * r2.powf(0.5 * alpha - 1.0)
                    } else {
                        0.0
                    };
                    g.iter_mut().zip(x).for_each(|(gi, v)| *gi = c * v);
                })
                .with_breakpoints(vec![0.0])
        }
        "grid" => {
            let lo = get(params, "lo", 0.0);
            let hi = get(params, "hi", 1.0);
            let points = get(params, "points", 65.0);
            if !(points >= 2.0 && points.fract() == 0.0) {
                return invalid("points must be an integer ≥ 2");
            }
            let base = test_function("quadratic", n, &FunctionParams::new())?;
            let data = GridData::sample(&base, vec![lo; n], vec![hi; n], vec![points as usize; n])?;
            FunctionModel::grid(data).scaled(amp).with_label("grid")
        }
        other => {
            return invalid(format!(
                "unknown test function `{other}`; expected one of {CATALOG_NAMES:?}"
            ))
        }
    };
    Ok(model.with_label(name))
}

fn known_keys(name: &str) -> &'static [&'static str] {
    match name {
        "affine" => &["intercept", "slope"],
        "quadratic" => &["amplitude", "center"],
        "gaussian-bump" => &["amplitude", "sigma"],
        "compact-bump" => &["amplitude", "radius"],
        "sine-pack" => &["amplitude", "radius", "omega", "phase"],
        "power-cusp" => &["amplitude", "alpha"],
        "grid" => &["amplitude", "lo", "hi", "points"],
        _ => &[],
    }
}

fn bump_fn(r: f64) -> impl Fn(&[f64]) -> f64 + Send + Sync {
    let inv = 1.0 / (r * r);
    move |x| {
        let u = norm2(x) * inv;
        if u < 1.0 {
            (1.0 - 1.0 / (1.0 - u)).exp()
        } else {
            0.0
        }
    }
}

fn bump_grad(r: f64) -> impl Fn(&[f64], &mut [f64]) + Send + Sync {
    let inv = 1.0 / (r * r);
    move |x, g| {
        let u = norm2(x) * inv;
        if u < 1.0 {
            let e = (1.0 - 1.0 / (1.0 - u)).exp();
            let c = -2.0 * inv * e / ((1.0 - u) * (1.0 - u));
            g.iter_mut().zip(x).for_each(|(gi, v)| *gi = c * v);
        } else {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
    }
}

/// The smooth four-function catalog used by the equivalence experiments,
/// meant for the truncated full space `[−1, 1]^n` with margin 0.5.
pub fn default_catalog(n: usize) -> Result<Vec<FunctionModel>> {
    let p = |pairs: &[(&str, f64)]| {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), *v))
            .collect::<FunctionParams>()
    };
    Ok(vec![
        test_function("gaussian-bump", n, &p(&[("sigma", 0.1)]))?,
        test_function("gaussian-bump", n, &p(&[("sigma", 0.07)]))?.with_label("gaussian-bump-narrow"),
        test_function("compact-bump", n, &p(&[]))?,
        test_function("sine-pack", n, &p(&[]))?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn none() -> FunctionParams {
        FunctionParams::new()
    }

    #[test]
    fn every_name_builds() {
        for name in CATALOG_NAMES {
            let f = test_function(name, 2, &none()).unwrap();
            assert!(f.value(&[0.1, 0.2]).is_finite(), "{name}");
        }
        assert!(test_function("nope", 1, &none()).is_err());
        let mut bad = none();
        bad.insert("sigmaa".into(), 1.0);
        assert!(test_function("gaussian-bump", 1, &bad).is_err());
    }

    #[test]
    fn affine_second_differences_vanish() {
        let mut prm = none();
        prm.insert("intercept".into(), 0.25);
        prm.insert("slope".into(), -0.5);
        let f = test_function("affine", 1, &prm).unwrap();
        for (x, h) in [(0.5, 0.25), (0.3, 0.125), (0.75, 0.0625)] {
            assert_eq!(f.value(&[x + h]) - 2.0 * f.value(&[x]) + f.value(&[x - h]), 0.0);
        }
    }

    #[test]
    fn gradients_match_central_differences() {
        for name in ["quadratic", "gaussian-bump", "compact-bump", "sine-pack", "power-cusp"] {
            let f = test_function(name, 2, &none()).unwrap();
            let x = [0.13, -0.21];
            let mut g = [0.0; 2];
            f.gradient(&x, &mut g).unwrap();
            for axis in 0..2 {
                let h = 1e-6;
                let mut xp = x;
                let mut xm = x;
                xp[axis] += h;
                xm[axis] -= h;
                let fd = (f.value(&xp) - f.value(&xm)) / (2.0 * h);
                assert!(
                    (fd - g[axis]).abs() < 1e-6 * (1.0 + g[axis].abs()),
                    "{name} axis {axis}: {fd} vs {}",
                    g[axis]
                );
            }
        }
    }

    #[test]
    fn bump_support_and_peak() {
        let f = test_function("compact-bump", 1, &none()).unwrap();
        assert_eq!(f.value(&[0.0]), 1.0);
        assert_eq!(f.value(&[0.5]), 0.0);
        assert_eq!(f.value(&[-0.7]), 0.0);
        assert!(f.value(&[0.49]) > 0.0);
    }

    #[test]
    fn default_catalog_has_four_smooth_members() {
        let cat = default_catalog(1).unwrap();
        assert_eq!(cat.len(), 4);
        assert!(cat.iter().all(|f| f.sup_abs().is_some()));
    }
}
