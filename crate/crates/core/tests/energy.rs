use menger_core::energy::{energy_pq_mc, energy_pq_quadrature_1d, energy_scaling_probe, Coupling, SamplerConfig};
use menger_core::funcspace::{test_function, FunctionParams};
use menger_core::{Domain, EnergyParams, FunctionModel};
use proptest::prelude::*;

fn named(name: &str, n: usize) -> FunctionModel {
    test_function(name, n, &FunctionParams::new()).unwrap()
}

#[test]
fn uniform_and_stratified_agree() {
    let u = Domain::cube(2, -1.0, 1.0).unwrap();
    let f = test_function("gaussian-bump", 2, &[("sigma".to_string(), 0.4)].into()).unwrap();
    let params = EnergyParams::new(2, 0.5, 3.0).unwrap();
    let a = energy_pq_mc(&f, &u, &params, &SamplerConfig::uniform(), 400_000, 1)
        .unwrap()
        .estimate;
    let b = energy_pq_mc(&f, &u, &params, &SamplerConfig::stratified(), 400_000, 2)
        .unwrap()
        .estimate;
    assert!(a.agrees_with(&b, 3.0), "{a:?} vs {b:?}");
}

#[test]
fn energy_grows_with_the_domain() {
    let params = EnergyParams::new(1, 0.5, 2.0).unwrap();
    let f = named("quadratic", 1);
    let mut last = 0.0;
    for b in [0.25, 0.5, 1.0, 2.0] {
        let e = energy_pq_quadrature_1d(&f, &Domain::interval(0.0, b).unwrap(), &params, 2)
            .unwrap()
            .value();
        assert!(e > last, "{b}: {e} after {last}");
        last = e;
    }
}

#[test]
fn coupled_scaling_slope_is_exact() {
    for n in [1usize, 2] {
        let u = Domain::cube(n, -1.0, 1.0).unwrap();
        let g = named("compact-bump", n);
        let params = EnergyParams::new(n, 0.5, 3.0).unwrap();
        let probe = energy_scaling_probe(
            &g,
            &u,
            &params,
            &[1.0, 2.0, 4.0, 8.0],
            &SamplerConfig::default(),
            20_000,
            3,
            Coupling::Coupled,
        )
        .unwrap();
        assert!((probe.slope - n as f64).abs() < 1e-8, "n = {n}: {}", probe.slope);
    }
}

#[test]
fn truncated_full_space_reports_the_exterior() {
    let u = Domain::truncated_full_space(vec![-1.0], vec![1.0], 0.5).unwrap();
    let params = EnergyParams::new(1, 0.5, 3.0).unwrap();
    let o = energy_pq_mc(
        &named("compact-bump", 1),
        &u,
        &params,
        &SamplerConfig::default(),
        10_000,
        0,
    )
    .unwrap();
    let ext = o.diagnostic("exterior_bound").unwrap();
    assert!(ext.is_finite() && ext > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn energy_is_nonnegative_and_seed_stable(seed in 0u64..1000, s in 0.1f64..0.9, p in 1.5f64..4.0,
                                             name in prop::sample::select(vec!["quadratic", "sine-pack", "gaussian-bump"])) {
        let u = Domain::cube(2, -0.5, 0.5).unwrap();
        let params = EnergyParams::new(2, s, p).unwrap();
        let f = named(name, 2);
        let a = energy_pq_mc(&f, &u, &params, &SamplerConfig::default(), 2000, seed).unwrap();
        prop_assert!(a.value() >= 0.0 && a.estimate.stderr >= 0.0);
        let b = energy_pq_mc(&f, &u, &params, &SamplerConfig::default(), 2000, seed).unwrap();
        prop_assert_eq!(a.value().to_bits(), b.value().to_bits());
    }

    #[test]
    fn affine_terms_do_not_change_the_estimate(b in -3.0f64..3.0, a0 in -3.0f64..3.0, a1 in -3.0f64..3.0) {
        let u = Domain::cube(2, -1.0, 1.0).unwrap();
        let params = EnergyParams::new(2, 0.5, 3.0).unwrap();
        let f = test_function("gaussian-bump", 2, &[("sigma".to_string(), 0.3)].into()).unwrap();
        let g = f.plus_affine(b, &[a0, a1]).unwrap();
        let x = energy_pq_mc(&f, &u, &params, &SamplerConfig::default(), 4000, 9).unwrap().value();
        let y = energy_pq_mc(&g, &u, &params, &SamplerConfig::default(), 4000, 9).unwrap().value();
        prop_assert!((x - y).abs() <= 1e-8 * x, "{} vs {}", x, y);
    }
}
