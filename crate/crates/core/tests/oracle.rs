//! Conditional click tables against an independent enumeration over photon
//! placements: every composition of `n` photons into the detected modes plus
//! a loss bin is weighted by its multinomial probability, and given a
//! composition each mode clicks independently (surely if it holds a photon,
//! with the dark-count probability otherwise).

use clickstat_core::{
    brute_force_tables, conditional_tables, custom_config, exact_click_statistics,
    inclusion_exclusion_tables, ring_resonator, uniform_splitter, DetectorConfig, MultiplexConfig,
    PhotonNumberDistribution, Source, Truncation,
};

const TOL: f64 = 1e-12;

struct Oracle {
    c: Vec<f64>,
    p: Vec<f64>,
}

fn multinomial_weight(counts: &[usize], probs: &[f64]) -> f64 {
    let mut w = 1.0;
    let mut total = 0usize;
    for (&k, &pr) in counts.iter().zip(probs) {
        for i in 1..=k {
            total += 1;
            w *= total as f64 / i as f64;
        }
        w *= pr.powi(k as i32);
    }
    w
}

fn compositions(n: usize, bins: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if bins == 1 {
        prefix.push(n);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for k in 0..=n {
        prefix.push(k);
        compositions(n - k, bins - 1, prefix, out);
        prefix.pop();
    }
}

fn oracle(weights: &[f64], tail_loss: f64, eta: &[f64], nu: &[f64], n: usize) -> Oracle {
    let modes = weights.len();
    let q: Vec<f64> = weights.iter().zip(eta).map(|(w, e)| w * e).collect();
    let loss = tail_loss
        + weights
            .iter()
            .zip(eta)
            .map(|(w, e)| w * (1.0 - e))
            .sum::<f64>();
    let mut probs = q.clone();
    probs.push(loss);

    let mut comps = Vec::new();
    compositions(n, modes + 1, &mut Vec::new(), &mut comps);

    let mut c = vec![0.0; modes + 1];
    let mut p = vec![0.0; modes];
    for comp in comps {
        let weight = if n == 0 {
            1.0
        } else {
            multinomial_weight(&comp, &probs)
        };
        if weight == 0.0 {
            continue;
        }
        let click: Vec<f64> = (0..modes)
            .map(|j| {
                if comp[j] > 0 {
                    1.0
                } else {
                    1.0 - (-nu[j]).exp()
                }
            })
            .collect();
        // Poisson-binomial convolution of independent mode clicks.
        let mut dist = vec![1.0];
        for &pj in &click {
            let mut next = vec![0.0; dist.len() + 1];
            for (k, &d) in dist.iter().enumerate() {
                next[k] += d * (1.0 - pj);
                next[k + 1] += d * pj;
            }
            dist = next;
        }
        for (k, d) in dist.iter().enumerate() {
            c[k] += weight * d;
        }
        for j in 0..modes {
            p[j] += weight * click[j];
        }
    }
    Oracle { c, p }
}

fn configs(n_modes: usize) -> Vec<MultiplexConfig> {
    let mut out = vec![
        uniform_splitter(n_modes).unwrap(),
        ring_resonator(0.6, n_modes).unwrap(),
        ring_resonator(0.25, n_modes).unwrap(),
    ];
    let raw: Vec<f64> = (0..n_modes).map(|j| 0.5 + j as f64).collect();
    let total: f64 = raw.iter().sum::<f64>() / 0.9;
    out.push(custom_config(raw.iter().map(|w| w / total).collect(), 0.1).unwrap());
    out
}

fn assert_close(a: &[f64], b: &[f64], what: &str) {
    assert_eq!(a.len(), b.len(), "{what}");
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).abs() <= TOL, "{what}: {x} vs {y}");
    }
}

#[test]
fn all_routes_match_enumeration() {
    let n_max = 6;
    for n_modes in 1..=4 {
        for mux in configs(n_modes) {
            for eta in [0.3, 0.7, 1.0] {
                for nu in [0.0, 0.05] {
                    let det = DetectorConfig::uniform(n_modes, eta, nu).unwrap();
                    let egf = conditional_tables(&mux, &det, n_max).unwrap();
                    let ie = inclusion_exclusion_tables(&mux, &det, n_max).unwrap();
                    for n in 0..=n_max {
                        let o = oracle(mux.weights(), mux.tail_loss(), det.eta(), det.nu(), n);
                        let tag = format!("N={n_modes} {:?} eta={eta} nu={nu} n={n}", mux.scheme());
                        assert_close(&egf.c_column(n), &o.c, &format!("egf C {tag}"));
                        assert_close(&egf.p_column(n), &o.p, &format!("egf P {tag}"));
                        assert_close(&ie.c_column(n), &o.c, &format!("ie C {tag}"));
                        assert_close(&ie.p_column(n), &o.p, &format!("ie P {tag}"));
                        let bf = brute_force_tables(&mux, &det, n).unwrap();
                        assert_close(&bf.c, &o.c, &format!("bf C {tag}"));
                        assert_close(&bf.p, &o.p, &format!("bf P {tag}"));
                    }
                }
            }
        }
    }
}

#[test]
fn nonuniform_detectors_match_enumeration() {
    let mux = ring_resonator(0.45, 4).unwrap();
    let det = DetectorConfig::new(vec![0.9, 0.4, 1.0, 0.65], vec![0.0, 0.1, 0.02, 0.3]).unwrap();
    let tables = conditional_tables(&mux, &det, 6).unwrap();
    for n in 0..=6 {
        let o = oracle(mux.weights(), mux.tail_loss(), det.eta(), det.nu(), n);
        assert_close(&tables.c_column(n), &o.c, "C");
        assert_close(&tables.p_column(n), &o.p, "P");
    }
}

#[test]
fn expected_clicks_identity() {
    for n_modes in [1, 3, 7, 12] {
        let mux = ring_resonator(0.6, n_modes).unwrap();
        let det = DetectorConfig::uniform(n_modes, 0.8, 0.03).unwrap();
        let t = conditional_tables(&mux, &det, 25).unwrap();
        for n in 0..=25 {
            let c = t.c_column(n);
            let lhs: f64 = t.p_column(n).iter().sum();
            let rhs: f64 = c.iter().enumerate().map(|(k, v)| k as f64 * v).sum();
            assert!(
                (lhs - rhs).abs() <= TOL,
                "N={n_modes} n={n}: {lhs} vs {rhs}"
            );
            let total: f64 = c.iter().sum();
            assert!((total - 1.0).abs() <= TOL);
            assert!(c.iter().all(|v| *v >= -TOL));
        }
    }
}

#[test]
fn balanced_closed_form() {
    // C(k|n) = binom(N,k) sum_i (-1)^i binom(k,i) (1 - (N-k+i) q)^n for a balanced splitter.
    let binom = |n: usize, k: usize| -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    };
    let n_modes = 9;
    let eta = 0.75;
    let q = eta / n_modes as f64;
    let mux = uniform_splitter(n_modes).unwrap();
    let det = DetectorConfig::uniform(n_modes, eta, 0.0).unwrap();
    let t = conditional_tables(&mux, &det, 20).unwrap();
    for n in 0..=20 {
        let c = t.c_column(n);
        for k in 0..=n_modes {
            let mut s = 0.0;
            for i in 0..=k {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                s += sign * binom(k, i) * (1.0 - (n_modes - k + i) as f64 * q).powi(n as i32);
            }
            let expected = binom(n_modes, k) * s;
            assert!(
                (c[k] - expected).abs() <= 1e-10,
                "n={n} k={k}: {} vs {expected}",
                c[k]
            );
        }
    }
}

fn mixture_sources() -> Vec<PhotonNumberDistribution> {
    let t = Truncation::new(60).with_tolerance(1e-9);
    vec![
        Source::Coherent { mean: 1.7 }.distribution(t).unwrap(),
        Source::Thermal { mean: 0.8 }.distribution(t).unwrap(),
        Source::Fock { m: 3 }.distribution(t).unwrap(),
        Source::odd_coherent_with_mean(2.0)
            .unwrap()
            .distribution(t)
            .unwrap(),
        Source::Spats { n_th: 0.4 }.distribution(t).unwrap(),
    ]
}

#[test]
fn statistics_are_permutation_invariant() {
    let mux = ring_resonator(0.6, 6).unwrap();
    let det = DetectorConfig::new(
        vec![0.9, 0.5, 1.0, 0.7, 0.8, 0.6],
        vec![0.01, 0.0, 0.02, 0.0, 0.05, 0.0],
    )
    .unwrap();
    let perm = [3, 0, 5, 1, 4, 2];
    let (pm, pd) = (mux.permuted(&perm), det.permuted(&perm));
    for pnd in mixture_sources() {
        let a = exact_click_statistics(&pnd, &mux, &det).unwrap();
        let b = exact_click_statistics(&pnd, &pm, &pd).unwrap();
        assert_close(&a.c, &b.c, "c_k");
        for (new, &old) in perm.iter().enumerate() {
            assert!((b.p[new] - a.p[old]).abs() <= TOL);
        }
        for (x, y) in [
            (a.mean_c, b.mean_c),
            (a.var_c, b.var_c),
            (a.sigma_sq, b.sigma_sq),
        ] {
            assert!((x - y).abs() <= TOL);
        }
    }
}

#[test]
fn mixture_matches_enumerated_mixture() {
    let mux = ring_resonator(0.6, 3).unwrap();
    let det = DetectorConfig::uniform(3, 0.7, 0.05).unwrap();
    let pnd = Source::Thermal { mean: 0.3 }
        .distribution(Truncation::new(12).with_tolerance(1e-6))
        .unwrap();
    let stats = exact_click_statistics(&pnd, &mux, &det).unwrap();
    let mut c = vec![0.0; 4];
    let mut p = vec![0.0; 3];
    for (n, rho) in pnd.probs().iter().enumerate() {
        let o = oracle(mux.weights(), mux.tail_loss(), det.eta(), det.nu(), n);
        for k in 0..4 {
            c[k] += rho * o.c[k];
        }
        for j in 0..3 {
            p[j] += rho * o.p[j];
        }
    }
    assert_close(&stats.c, &c, "c_k");
    assert_close(&stats.p, &p, "p_j");
}
