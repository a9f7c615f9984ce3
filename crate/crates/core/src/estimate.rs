//! Numerical results and the deterministic parallel sample accumulator.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// A numerical result with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    /// Statistical standard error; zero for deterministic quadrature.
    pub stderr: f64,
    /// Number of integrand evaluations (Monte Carlo draws or quadrature nodes).
    pub samples: u64,
    /// Seed of the random stream; `None` for deterministic results.
    pub seed: Option<u64>,
    /// Degenerate draws that were counted and skipped.
    pub invalid_samples: u64,
}

impl Estimate {
    pub fn deterministic(value: f64, nodes: u64) -> Self {
        Self {
            value,
            stderr: 0.0,
            samples: nodes,
            seed: None,
            invalid_samples: 0,
        }
    }

    pub fn is_deterministic(&self) -> bool {
        self.seed.is_none()
    }

    /// Scales value and error bar by a positive constant.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            value: self.value * factor,
            stderr: self.stderr * factor.abs(),
            ..self.clone()
        }
    }

    /// Relative standard error (`inf` when the value is zero but the error is not).
    pub fn relative_error(&self) -> f64 {
        if self.stderr == 0.0 {
            0.0
        } else {
            self.stderr / self.value.abs()
        }
    }

    /// `|a - b| <= k * sqrt(sa^2 + sb^2)`.
    pub fn agrees_with(&self, other: &Estimate, k: f64) -> bool {
        let joint = self.stderr.hypot(other.stderr);
        (self.value - other.value).abs() <= k * joint
    }
}

/// A named numeric side result (truncation bounds, convergence checks, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub name: String,
    pub value: f64,
    pub note: String,
}

impl Diagnostic {
    pub fn new(name: impl Into<String>, value: f64, note: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            value,
            note: note.into(),
        }
    }
}

/// An estimate together with its diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub estimate: Estimate,
    pub diagnostics: Vec<Diagnostic>,
    /// Set when a convergence or truncation check failed; the value is still reported.
    pub flagged: bool,
}

impl Outcome {
    pub fn new(estimate: Estimate) -> Self {
        Self {
            estimate,
            diagnostics: Vec::new(),
            flagged: false,
        }
    }

    pub fn value(&self) -> f64 {
        self.estimate.value
    }

    pub fn push(&mut self, name: impl Into<String>, value: f64, note: impl Into<String>) {
        self.diagnostics.push(Diagnostic::new(name, value, note));
    }

    pub fn diagnostic(&self, name: &str) -> Option<f64> {
        self.diagnostics.iter().find(|d| d.name == name).map(|d| d.value)
    }
}

/// Running mean and centered second moment (Welford / Chan).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

/// Outcome of a single Monte Carlo draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Draw {
    /// The draw landed in the integration domain; its weighted integrand value.
    Accepted(f64),
    /// The draw fell outside the domain and contributes zero.
    Rejected,
    /// Degenerate configuration (coincident points at float resolution).
    Invalid,
}

/// Aggregated draws of one stratum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Tally {
    pub moments: Moments,
    pub accepted: u64,
    pub invalid: u64,
}

impl Tally {
    #[inline]
    fn record(&mut self, d: Draw) {
        match d {
            Draw::Accepted(v) => {
                self.accepted += 1;
                self.moments.push(v);
            }
            Draw::Rejected => self.moments.push(0.0),
            Draw::Invalid => {
                self.invalid += 1;
                self.moments.push(0.0);
            }
        }
    }

    fn merge(&mut self, other: &Tally) {
        self.moments.merge(&other.moments);
        self.accepted += other.accepted;
        self.invalid += other.invalid;
    }

    pub fn acceptance(&self) -> f64 {
        if self.moments.count == 0 {
            0.0
        } else {
            self.accepted as f64 / self.moments.count as f64
        }
    }
}

const CHUNK: u64 = 4096;

/// Evaluates `draw(i)` for `i in start..start + count` in parallel.
///
/// Chunk boundaries depend only on the index range and partial results are
/// merged in index order, so the result is bit-identical for any thread count.
pub fn tally<F>(start: u64, count: u64, draw: F) -> Tally
where
    F: Fn(u64) -> Draw + Sync,
{
    let chunks = count.div_ceil(CHUNK);
    let parts: Vec<Tally> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = start + c * CHUNK;
            let hi = (lo + CHUNK).min(start + count);
            let mut t = Tally::default();
            for i in lo..hi {
                t.record(draw(i));
            }
            t
        })
        .collect();
    let mut total = Tally::default();
    for p in &parts {
        total.merge(p);
    }
    total
}

/// Order-fixed parallel sum of `f(i)` over `0..count`.
pub fn ordered_sum<F>(count: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let chunk = 64usize;
    let parts: Vec<f64> = (0..count.div_ceil(chunk))
        .into_par_iter()
        .map(|c| (c * chunk..((c + 1) * chunk).min(count)).map(&f).sum())
        .collect();
    parts.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merged_moments_match_sequential() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.1).collect();
        let mut seq = Moments::default();
        xs.iter().for_each(|x| seq.push(*x));
        let mut a = Moments::default();
        let mut b = Moments::default();
        xs[..313].iter().for_each(|x| a.push(*x));
        xs[313..].iter().for_each(|x| b.push(*x));
        a.merge(&b);
        assert_eq!(a.count, seq.count);
        assert!((a.mean - seq.mean).abs() < 1e-12);
        assert!((a.variance() - seq.variance()).abs() < 1e-9);
    }

    #[test]
    fn tally_is_independent_of_thread_count() {
        let f = |i: u64| {
            if i.is_multiple_of(7) {
                Draw::Rejected
            } else {
                Draw::Accepted(((i as f64) * 0.37).sin())
            }
        };
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let many = rayon::ThreadPoolBuilder::new().num_threads(5).build().unwrap();
        let a = one.install(|| tally(3, 100_000, f));
        let b = many.install(|| tally(3, 100_000, f));
        assert_eq!(a.moments.mean.to_bits(), b.moments.mean.to_bits());
        assert_eq!(a.moments.m2.to_bits(), b.moments.m2.to_bits());
        assert_eq!(a.accepted, b.accepted);
    }
}
