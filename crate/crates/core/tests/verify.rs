use menger_core::funcspace::{default_catalog, test_function, BoxRegion, FunctionParams};
use menger_core::geometry::PointTuple;
use menger_core::verify::{
    check_lemma_beta, codivergence_probe, estimate_w_measure, estimate_w_measure_in, laplace_identity_check,
    lemma_beta_audit, CodivergenceConfig, Trend,
};
use menger_core::{Domain, EnergyParams};
use proptest::prelude::*;

#[test]
fn lemma_beta_holds_on_the_catalog() {
    for n in [1usize, 2] {
        let region = BoxRegion::new(vec![-0.6; n], vec![0.6; n]);
        for f in default_catalog(n).unwrap() {
            let r = lemma_beta_audit(&f, &region, 300, 11).unwrap();
            assert_eq!(r.violations, 0, "{} in R^{n}", f.label());
        }
    }
}

#[test]
fn corner_ratio_stays_positive() {
    let u = Domain::cube(2, 0.0, 1.0).unwrap();
    let x = [1e-12, 1e-12];
    for k in 1..=10 {
        let r = u.diameter() * 2f64.powi(-k);
        let e = estimate_w_measure_in(&u, &x, r, 0.1, 20_000, 6).unwrap();
        assert!(e.value - 3.0 * e.stderr > 0.0, "r = {r}: {e:?}");
    }
}

#[test]
fn cusp_and_bump_codiverge() {
    let u = Domain::interval(-1.0, 1.0).unwrap();
    let params = EnergyParams::new(1, 0.5, 3.0).unwrap();
    let cfg = CodivergenceConfig {
        samples: 1 << 17,
        ..Default::default()
    };
    let cusp = test_function("power-cusp", 1, &FunctionParams::new()).unwrap();
    let r = codivergence_probe(&cusp, &params, &u, &cfg).unwrap();
    assert_eq!((r.seminorm_trend, r.energy_trend), (Trend::Diverging, Trend::Diverging));
    let bump = test_function("compact-bump", 1, &FunctionParams::new()).unwrap();
    let r = codivergence_probe(&bump, &params, &u, &cfg).unwrap();
    assert_eq!(
        (r.seminorm_trend, r.energy_trend),
        (Trend::Converging, Trend::Converging)
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn laplace_factorization(n in 1usize..4, seed in prop::collection::vec(-1.0f64..1.0, 12),
                             name in prop::sample::select(vec!["quadratic", "gaussian-bump", "sine-pack", "compact-bump"])) {
        let f = test_function(name, n, &FunctionParams::new()).unwrap();
        let x: Vec<f64> = seed[..n].iter().map(|v| 0.3 * v).collect();
        let h: Vec<f64> = seed[3..3 + n].iter().map(|v| 0.2 * v).collect();
        let ws: Vec<Vec<f64>> = (0..n).map(|i| seed[6 + i..6 + i + n].iter().map(|v| 0.25 * v).collect()).collect();
        let c = laplace_identity_check(&f, &x, &h, &ws).unwrap();
        prop_assert!(c.discrepancy < 1e-10, "{:?}", c);
    }

    #[test]
    fn lemma_beta_is_affine_invariant(a in -0.9f64..0.9, b in -0.9f64..0.9, c in -0.9f64..0.9,
                                      i0 in 0usize..3, slope in -5.0f64..5.0, shift in -5.0f64..5.0) {
        prop_assume!((a - b).abs() > 1e-3 && (b - c).abs() > 1e-3 && (a - c).abs() > 1e-3);
        let f = test_function("sine-pack", 1, &FunctionParams::new()).unwrap();
        let g = f.plus_affine(shift, &[slope]).unwrap();
        let t = PointTuple::new(&[vec![a], vec![b], vec![c]]).unwrap();
        let x = check_lemma_beta(&f, &t, i0).unwrap();
        let y = check_lemma_beta(&g, &t, i0).unwrap();
        prop_assert!(x.holds && y.holds);
        prop_assert!((x.lhs - y.lhs).abs() <= 1e-9 * x.lhs + 1e-13);
        prop_assert!((x.rhs - y.rhs).abs() <= 1e-9 * x.rhs + 1e-13);
    }

    #[test]
    fn w_measure_is_monotone_in_alpha(seed in 0u64..500, a in 0.01f64..0.98, da in 0.0f64..0.5) {
        let b = (a + da).min(0.99);
        let lo = estimate_w_measure(2, a, 2000, seed).unwrap().value;
        let hi = estimate_w_measure(2, b, 2000, seed).unwrap().value;
        prop_assert!(hi <= lo);
    }
}
