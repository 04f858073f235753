//! Q_B, Q_PB and Q_M against their defining properties.

use clickstat_core::{
    binomial_q, custom_config, exact_click_statistics, mandel_q, poisson_binomial_q,
    qpb_operator_form, ring_resonator, spats_qb_closed, spats_qm_closed, uniform_splitter,
    DetectorConfig, MultiplexConfig, PhotonNumberDistribution, Source,
};
use proptest::prelude::*;

fn pnd(source: Source) -> PhotonNumberDistribution {
    source.distribution_auto(30, 1e-14).unwrap()
}

fn ring(kappa: f64, n: usize, eta: f64) -> (MultiplexConfig, DetectorConfig) {
    (
        ring_resonator(kappa, n).unwrap(),
        DetectorConfig::uniform(n, eta, 0.0).unwrap(),
    )
}

fn states() -> Vec<Source> {
    vec![
        Source::Coherent { mean: 1.3 },
        Source::Thermal { mean: 2.0 },
        Source::Fock { m: 2 },
        Source::odd_coherent_with_mean(2.5).unwrap(),
        Source::Spats { n_th: 0.6 },
    ]
}

#[test]
fn coherent_light_is_poisson_binomial_for_any_network() {
    let nets = [
        ring(0.6, 10, 1.0),
        ring(0.3, 7, 0.45),
        (
            custom_config(vec![0.5, 0.1, 0.25], 0.15).unwrap(),
            DetectorConfig::new(vec![0.9, 0.6, 0.3], vec![0.0; 3]).unwrap(),
        ),
    ];
    for (mux, det) in &nets {
        for mean in [0.1, 1.0, 4.0, 8.0] {
            let s = exact_click_statistics(&pnd(Source::Coherent { mean }), mux, det).unwrap();
            let q = poisson_binomial_q(&s, mux.n_modes()).unwrap();
            assert!(q.abs() <= 1e-9, "mean {mean}: {q}");
        }
    }
}

#[test]
fn balanced_networks_reduce_to_binomial() {
    let mux = uniform_splitter(10).unwrap();
    let det = DetectorConfig::uniform(10, 0.8, 0.0).unwrap();
    for source in states() {
        let s = exact_click_statistics(&pnd(source), &mux, &det).unwrap();
        let qpb = poisson_binomial_q(&s, 10).unwrap();
        let qb = binomial_q(&s, 10).unwrap();
        assert!((qpb - qb).abs() <= 1e-12, "{source:?}: {qpb} vs {qb}");
    }
}

#[test]
fn many_modes_approach_mandel() {
    // Bose-Einstein statistics: variance n(n+1), so Q_M = n.
    let mean = 1.0;
    let q_m = mandel_q(mean, mean * mean + mean).unwrap();
    assert!((q_m - 1.0).abs() < 1e-15);
    let thermal = pnd(Source::Thermal { mean });
    let gap = |n: usize| {
        let det = DetectorConfig::uniform(n, 1.0, 0.0).unwrap();
        let s = exact_click_statistics(&thermal, &uniform_splitter(n).unwrap(), &det).unwrap();
        (poisson_binomial_q(&s, n).unwrap() - q_m).abs()
    };
    let (g8, g64) = (gap(8), gap(64));
    assert!(g64 < g8, "{g64} vs {g8}");
    assert!(g64 < 0.1);
}

#[test]
fn single_mode_is_always_zero() {
    for eta in [0.3, 1.0] {
        let (mux, det) = ring(0.6, 1, eta);
        for source in states() {
            let s = exact_click_statistics(&pnd(source), &mux, &det).unwrap();
            let q = poisson_binomial_q(&s, 1).unwrap();
            assert!(q.abs() <= 1e-12, "{source:?}: {q}");
        }
    }
}

#[test]
fn operator_form_matches_moment_form() {
    for (kappa, n, eta) in [(0.6, 10, 1.0), (0.6, 4, 0.5), (0.2, 6, 0.8)] {
        let (mux, det) = ring(kappa, n, eta);
        for source in states() {
            let p = pnd(source);
            let s = exact_click_statistics(&p, &mux, &det).unwrap();
            let a = poisson_binomial_q(&s, n).unwrap();
            let b = qpb_operator_form(&p, &mux, &det).unwrap();
            assert!((a - b).abs() <= 1e-9, "{source:?} N={n}: {a} vs {b}");
        }
    }
}

#[test]
fn nonclassical_states_are_sub_poisson_binomial() {
    let (mux, det) = ring(0.6, 10, 1.0);
    for source in [
        Source::Fock { m: 1 },
        Source::Fock { m: 3 },
        Source::odd_coherent_with_mean(1.0).unwrap(),
        Source::odd_coherent_with_mean(3.0).unwrap(),
    ] {
        let s = exact_click_statistics(&pnd(source), &mux, &det).unwrap();
        assert!(poisson_binomial_q(&s, 10).unwrap() < 0.0, "{source:?}");
    }
    let s = exact_click_statistics(&pnd(Source::Thermal { mean: 1.0 }), &mux, &det).unwrap();
    assert!(poisson_binomial_q(&s, 10).unwrap() > 0.0);
}

#[test]
fn spats_closed_forms() {
    // Root of t^2 = 1/2.
    assert!(spats_qm_closed(std::f64::consts::FRAC_1_SQRT_2, 1.0).abs() < 1e-12);
    // Q_M from the photon-number moments of the state itself.
    for n_th in [0.2, 0.9, 2.0] {
        let (mean, var) = pnd(Source::Spats { n_th }).moments();
        let q = mandel_q(mean, var).unwrap();
        assert!((q - spats_qm_closed(n_th, 1.0)).abs() < 1e-9);
    }
    for n in [2, 5, 10] {
        for eta in [0.5, 1.0] {
            let mux = uniform_splitter(n).unwrap();
            let det = DetectorConfig::uniform(n, eta, 0.0).unwrap();
            for n_th in [0.1, 0.7, 1.5, 3.0] {
                let s = exact_click_statistics(&pnd(Source::Spats { n_th }), &mux, &det).unwrap();
                let exact = binomial_q(&s, n).unwrap();
                let closed = spats_qb_closed(n_th, eta, n).unwrap();
                assert!(
                    (exact - closed).abs() <= 1e-9,
                    "N={n} eta={eta} n_th={n_th}"
                );
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn classical_states_are_never_sub_poisson_binomial(
        mean in 0.05f64..6.0,
        thermal in any::<bool>(),
        kappa in 0.05f64..0.95,
        n in 2usize..14,
        eta in 0.05f64..1.0,
    ) {
        let source = if thermal { Source::Thermal { mean } } else { Source::Coherent { mean } };
        let (mux, det) = ring(kappa, n, eta);
        let s = exact_click_statistics(&pnd(source), &mux, &det).unwrap();
        prop_assert!(poisson_binomial_q(&s, n).unwrap() >= -1e-9);
    }

    #[test]
    fn witnesses_are_bounded_below(
        m in 1usize..6,
        kappa in 0.05f64..0.95,
        n in 2usize..12,
        eta in 0.05f64..1.0,
    ) {
        let (mux, det) = ring(kappa, n, eta);
        let s = exact_click_statistics(&pnd(Source::Fock { m }), &mux, &det).unwrap();
        prop_assert!(poisson_binomial_q(&s, n).unwrap() >= -1.0 - 1e-9);
        prop_assert!(binomial_q(&s, n).unwrap() >= -1.0 - 1e-9);
    }
}
