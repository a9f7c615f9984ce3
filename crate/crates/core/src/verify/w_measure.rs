use crate::error::{invalid, Result};
use crate::estimate::{tally, Draw, Estimate};
use crate::funcspace::Domain;
use crate::geometry::{parallelotope_volume, unit_ball_volume};
use crate::rng::CounterRng;

const STREAM: u64 = 0x3_7ed9e;
const MAX_N: usize = 8;

fn check(n: usize, alpha: f64, samples: u64) -> Result<()> {
    if n == 0 || n > MAX_N {
        return invalid(format!("n must lie in 1..={MAX_N}"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return invalid("α must lie in (0, 1)");
    }
    if samples < 2 {
        return invalid("at least two samples are required");
    }
    Ok(())
}

/// Draws `u_1,…,u_n` uniform in the unit ball of R^n and returns `accept(u)`
/// together with `|u_1 ∧ … ∧ u_n|`. The draws depend only on `(seed, i)`, so
/// runs with different `α` or `r` are coupled.
fn run(n: usize, samples: u64, seed: u64, accept: impl Fn(&[f64], f64) -> bool + Sync) -> Estimate {
    let rng = CounterRng::new(seed).stream(STREAM);
    let t = tally(0, samples, |i| {
        let mut d = rng.sample(i);
        let mut u = [0.0f64; MAX_N * MAX_N];
        let u = &mut u[..n * n];
        for row in u.chunks_exact_mut(n) {
            d.in_ball(1.0, row);
        }
        let mut buf = [0.0f64; MAX_N * MAX_N];
        buf[..n * n].copy_from_slice(u);
        let wedge = parallelotope_volume(&mut buf[..n * n], n, n);
        if accept(u, wedge) {
            Draw::Accepted(1.0)
        } else {
            Draw::Rejected
        }
    });
    Estimate {
        value: t.moments.mean,
        stderr: t.moments.stderr(),
        samples,
        seed: Some(seed),
        invalid_samples: 0,
    }
}

/// Fraction of `n`-tuples of the unit ball with `|w_1 ∧ … ∧ w_n| ≥ α`, that is
/// `H^{n²}(W_{1,α}) / ω_n^n`. Nonincreasing in `α` at fixed seed.
pub fn estimate_w_measure(n: usize, alpha: f64, samples: u64, seed: u64) -> Result<Estimate> {
    check(n, alpha, samples)?;
    Ok(run(n, samples, seed, |_, wedge| wedge >= alpha))
}

/// `H^{n²}(W^x_{r,α}) / r^{n²}` where `W^x_{r,α}` holds the tuples of
/// `B(0, r)^n` with every `x + w_i ∈ U` and `|w_1 ∧ … ∧ w_n| ≥ α r^n`.
pub fn estimate_w_measure_in(
    domain: &Domain,
    x: &[f64],
    r: f64,
    alpha: f64,
    samples: u64,
    seed: u64,
) -> Result<Estimate> {
    let n = domain.dim();
    check(n, alpha, samples)?;
    if x.len() != n || !domain.contains(x) {
        return invalid("x must be a point of U");
    }
    if !(r > 0.0 && r < domain.diameter()) {
        return invalid("r must lie in (0, diam U)");
    }
    let est = run(n, samples, seed, |u, wedge| {
        if wedge < alpha {
            return false;
        }
        let mut y = [0.0f64; MAX_N];
        u.chunks_exact(n).all(|row| {
            for k in 0..n {
                y[k] = x[k] + r * row[k];
            }
            domain.contains(&y[..n])
        })
    });
    Ok(est.scaled(unit_ball_volume(n).powi(n as i32)))
}
