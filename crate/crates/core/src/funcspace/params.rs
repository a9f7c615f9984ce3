use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// `q = n(n+1)/(n+2) + p(n+1+s)/(n+2)`.
pub fn derive_q(n: usize, s: f64, p: f64) -> Result<f64> {
    check_ranges(n, s, p)?;
    Ok(q_formula(n, s, p))
}

fn q_formula(n: usize, s: f64, p: f64) -> f64 {
    let nf = n as f64;
    (nf * (nf + 1.0) + p * (nf + 1.0 + s)) / (nf + 2.0)
}

fn check_ranges(n: usize, s: f64, p: f64) -> Result<()> {
    if n == 0 {
        return invalid("n must be a positive integer");
    }
    if !(s > 0.0 && s < 1.0) {
        return invalid(format!("s = {s} must lie in (0, 1)"));
    }
    if !(p > 1.0 && p.is_finite()) {
        return invalid(format!("p = {p} must lie in (1, ∞)"));
    }
    Ok(())
}

/// Exponents `(n, s, p)` with the derived `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyParams {
    n: usize,
    s: f64,
    p: f64,
    q: f64,
    /// `n / p < 1 + s`.
    hypothesis: bool,
    /// Offset added to the derived `q` (negative controls only).
    q_offset: f64,
}

impl EnergyParams {
    pub fn new(n: usize, s: f64, p: f64) -> Result<Self> {
        let q = derive_q(n, s, p)?;
        Ok(Self {
            n,
            s,
            p,
            q,
            hypothesis: (n as f64) / p < 1.0 + s,
            q_offset: 0.0,
        })
    }

    /// Accepts a user-supplied `q` only if it matches the derived value to 1e-12.
    pub fn with_checked_q(n: usize, s: f64, p: f64, q: f64) -> Result<Self> {
        let params = Self::new(n, s, p)?;
        if (q - params.q).abs() > 1e-12 * params.q.abs().max(1.0) {
            return invalid(format!("q = {q} differs from the derived exponent {}", params.q));
        }
        Ok(params)
    }

    /// A copy whose `q` is shifted by `dq`, violating the exponent relation on purpose.
    pub fn perturbed(&self, dq: f64) -> Self {
        Self {
            q: self.q + dq,
            q_offset: self.q_offset + dq,
            ..*self
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn hypothesis_holds(&self) -> bool {
        self.hypothesis
    }

    pub fn is_perturbed(&self) -> bool {
        self.q_offset != 0.0
    }

    /// Exponent of `λ` picked up by `K_{p,q}` under `x ↦ λx`, `f ↦ λ^{1+s} f(·/λ)`.
    pub fn kernel_scaling_exponent(&self) -> f64 {
        let n = self.n as f64;
        self.p * (n + 1.0 + self.s) - (n + 2.0) * self.q
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn derive_q_examples() {
        assert!((derive_q(1, 0.5, 2.0).unwrap() - 7.0 / 3.0).abs() < 1e-15);
        assert!((derive_q(1, 0.5, 3.0).unwrap() - 19.0 / 6.0).abs() < 1e-15);
        assert!((q_formula(1, 0.0, 3.0) - 8.0 / 3.0).abs() < 1e-15);
        assert!(derive_q(0, 0.5, 2.0).is_err());
        assert!(derive_q(1, 1.0, 2.0).is_err());
        assert!(derive_q(1, 0.5, 1.0).is_err());
    }

    #[test]
    fn supplied_q_must_match() {
        assert!(EnergyParams::with_checked_q(1, 0.5, 2.0, 7.0 / 3.0).is_ok());
        assert!(EnergyParams::with_checked_q(1, 0.5, 2.0, 2.33).is_err());
    }

    #[test]
    fn hypothesis_flag() {
        assert!(EnergyParams::new(1, 0.5, 2.0).unwrap().hypothesis_holds());
        assert!(!EnergyParams::new(3, 0.1, 2.0).unwrap().hypothesis_holds());
    }

    proptest! {
        #[test]
        fn q_is_monotone_in_s_and_p(n in 1usize..5, s in 0.01f64..0.98, ds in 0.001f64..0.01, p in 1.01f64..8.0, dp in 0.001f64..1.0) {
            let q = derive_q(n, s, p).unwrap();
            prop_assert!(derive_q(n, s + ds, p).unwrap() > q);
            prop_assert!(derive_q(n, s, p + dp).unwrap() > q);
        }

        #[test]
        fn scaling_exponent_is_minus_n_n_plus_one(n in 1usize..5, s in 0.01f64..0.99, p in 1.01f64..8.0) {
            let e = EnergyParams::new(n, s, p).unwrap().kernel_scaling_exponent();
            let want = -((n * (n + 1)) as f64);
            prop_assert!((e - want).abs() < 1e-12 * want.abs().max(1.0) * 10.0);
        }
    }
}
