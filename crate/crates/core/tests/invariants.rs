mod common;

use common::*;
use proptest::prelude::*;

fn cfg() -> ProptestConfig {
    ProptestConfig { cases: 8, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(cfg())]

    #[test]
    fn coercive(a in 0.5f64..4.0, b in 0.5f64..4.0, seed in any::<u64>()) {
        let p = perforated(0.5, 12, a, b);
        prop_assert_eq!(coercivity(&p, seed), Ok(()));
    }

    #[test]
    fn energy_bound(a in 0.5f64..4.0, b in 0.5f64..4.0, seed in any::<u64>()) {
        let p = perforated(0.5, 12, a, b);
        prop_assert_eq!(poincare_energy(&p, seed), Ok(()));
    }

    #[test]
    fn maximum_and_comparison(a in 0.5f64..4.0, b in 0.5f64..4.0, seed in any::<u64>()) {
        let p = perforated(0.5, 12, a, b);
        prop_assert_eq!(max_and_comparison(&p, seed), Ok(()));
    }

    #[test]
    fn w_between_zero_and_free(b in 1.0f64..4.0, density in 0.0f64..50.0, k in 1.0f64..1e6) {
        let p = perforated(0.5, 12, 1.0, b);
        prop_assert_eq!(w_bounds(&p, density, k), Ok(()));
    }

    #[test]
    fn linear_in_the_load(b in 1.0f64..4.0, seed in any::<u64>(), c in -3.0f64..3.0) {
        let p = perforated(0.5, 12, 1.0, b);
        prop_assert_eq!(linearity(&p, seed, c), Ok(()));
    }

    #[test]
    fn pairing_identity(b in 1.0f64..4.0, seed in any::<u64>()) {
        let p = perforated(0.5, 12, 1.0, b);
        prop_assert_eq!(duality(&p, seed), Ok(()));
    }

    #[test]
    fn reaction_balance(b in 1.0f64..4.0, eps in prop::sample::select(vec![0.5, 0.25])) {
        let p = perforated(eps, 16, 1.0, b);
        prop_assert_eq!(reactions(&p), Ok(()));
    }

    #[test]
    fn extraction_scales(c in 1e-3f64..1e3) {
        let p = perforated(0.5, 12, 1.0, 2.0);
        prop_assert_eq!(extraction_linearity(&p, c), Ok(()));
    }

    #[test]
    fn comparison_reflexive_and_symmetric(
        mu in prop::collection::vec(0.0f64..100.0, 1..20),
        scale in prop::collection::vec(0.1f64..10.0, 20),
        beta in 1.0f64..5.0,
    ) {
        let nu: Vec<f64> = mu.iter().zip(&scale).map(|(m, s)| m * s).collect();
        prop_assert_eq!(comparison_properties(&mu, &nu, 1.0, beta), Ok(()));
    }
}

#[test]
fn penalization_converges_monotonically() {
    let p = perforated(0.5, 16, 1.0, 2.0);
    assert_eq!(penalization(&p, &[1e2, 1e4, 1e6, 1e8]), Ok(()));
}

#[test]
fn reruns_are_bit_identical() {
    assert_eq!(determinism(), Ok(()));
}
