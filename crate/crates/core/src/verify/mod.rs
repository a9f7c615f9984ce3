//! Experiments that test the comparison between the curvature energy and the
//! fractional seminorms numerically: equivalence ratios over a function
//! catalog, the simplex-volume bound by the affine oscillation, the measure of
//! well-spread tuples, the Laplace factorization, and co-divergence under
//! shrinking cutoffs.
//!
//! Every experiment is deterministic given its seed and configuration.

mod codivergence;
mod equivalence;
mod laplace;
mod lemma_beta;
mod w_measure;

pub use codivergence::{classify, codivergence_probe, CodivergenceConfig, CodivergenceReport, Trend};
pub use equivalence::{
    dorronsoro_experiment, equivalence_experiment, EquivalenceConfig, Excluded, RatioReport, RatioRow, RatioSummary,
};
pub use laplace::{laplace_audit, laplace_identity_check, LaplaceCheck, LAPLACE_TOL};
pub use lemma_beta::{check_lemma_beta, lemma_beta_audit, AuditReport, LemmaBetaCheck, LEMMA_SLACK};
pub use w_measure::{estimate_w_measure, estimate_w_measure_in};
