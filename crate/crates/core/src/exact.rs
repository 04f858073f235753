//! Exact click statistics for Fock-diagonal inputs.
//!
//! An `n`-photon input is routed photon by photon: each photon is detected in
//! mode `j` with probability `q_j = |u_j|^2 eta_j`, otherwise it is lost.
//! Mode `j` stays silent with probability `(1 - q_j)^n e^{-nu_j}`, the
//! normally ordered expectation of `exp(-(eta_j |u_j|^2 n + nu_j))` on `|n>`.
//!
//! Three independent routes produce the conditional click distribution
//! `C(k|n)`:
//!
//! * [`conditional_tables`]: the exponential generating function of the
//!   occupancy counts, expanded mode by mode as an elementary symmetric
//!   polynomial. Every term is non-negative, so there is no cancellation for
//!   any mode count or photon number.
//! * [`inclusion_exclusion_tables`]: alternating sums over no-click subsets,
//!   accumulated with compensated summation. Cost grows as `2^N`.
//! * [`brute_force_tables`]: enumeration of every photon placement, used as
//!   the test oracle for small instances.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::network::{effective_click_weights, DetectorConfig, MultiplexConfig};
use crate::sources::PhotonNumberDistribution;
use crate::stats::{poisson_binomial_q, ClickStatistics, DENOMINATOR_EPS};

/// Mode limit of the generating-function engine.
pub const MAX_MODES: usize = 64;
/// Mode limit of the inclusion-exclusion engine.
pub const SUBSET_ENUMERATION_CAP: usize = 20;
/// Largest photon number the exact engines accept.
pub const MAX_PHOTON_NUMBER: usize = 1000;
/// Brute-force enumeration refuses instances with more outcomes than this.
pub const BRUTE_FORCE_LIMIT: f64 = 1e7;

/// `C(k|n)` for `k = 0..=N` and `P(j|n)` for `j = 1..=N`, over `n = 0..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalTables {
    /// Row `k`, column `n`.
    pub c_given_n: Vec<Vec<f64>>,
    /// Row `j` (zero-based mode index), column `n`.
    pub p_given_n: Vec<Vec<f64>>,
}

impl ConditionalTables {
    pub fn n_modes(&self) -> usize {
        self.p_given_n.len()
    }

    pub fn n_max(&self) -> usize {
        self.c_given_n[0].len() - 1
    }

    /// `C(.|n)` as a vector over `k`.
    pub fn c_column(&self, n: usize) -> Vec<f64> {
        self.c_given_n.iter().map(|row| row[n]).collect()
    }

    /// `P(.|n)` as a vector over modes.
    pub fn p_column(&self, n: usize) -> Vec<f64> {
        self.p_given_n.iter().map(|row| row[n]).collect()
    }

    /// Mixes the tables with `rho(n)`: `c_k = sum_n C(k|n) rho(n)`,
    /// `p_j = sum_n P(j|n) rho(n)`. Mass beyond the truncation contributes nothing.
    pub fn mix(&self, pnd: &PhotonNumberDistribution) -> Result<ClickStatistics> {
        let rho = pnd.probs();
        if rho.len() > self.n_max() + 1 {
            return Err(Error::invalid(
                "n_max",
                format!(
                    "distribution extends to n = {} but tables stop at {}",
                    rho.len() - 1,
                    self.n_max()
                ),
            ));
        }
        let weigh = |row: &Vec<f64>| row.iter().zip(rho).map(|(a, r)| a * r).sum::<f64>();
        let c = self.c_given_n.iter().map(weigh).collect();
        let p = self.p_given_n.iter().map(weigh).collect();
        Ok(ClickStatistics::from_distributions(c, p))
    }
}

/// One photon-number column of [`ConditionalTables`].
#[derive(Debug, Clone, PartialEq)]
pub struct TableColumn {
    pub c: Vec<f64>,
    pub p: Vec<f64>,
}

/// Probability that no mode in `subset` clicks given exactly `n` photons:
/// `(1 - sum_{j in T} q_j)^n prod_{j in T} e^{-nu_j}`.
pub fn no_click_prob(subset: &[usize], n: usize, q: &[f64], nu: &[f64]) -> f64 {
    if subset.is_empty() {
        return 1.0;
    }
    let s: f64 = subset.iter().map(|&j| q[j]).sum();
    let dark: f64 = subset.iter().map(|&j| nu[j]).sum();
    survival(s).powi(n as i32) * (-dark).exp()
}

fn survival(s: f64) -> f64 {
    (1.0 - s).max(0.0)
}

fn check_sizes(
    mux: &MultiplexConfig,
    n_max: usize,
    cap: usize,
    engine: &'static str,
) -> Result<()> {
    if mux.n_modes() > cap {
        return Err(Error::TooManyModes {
            n_modes: mux.n_modes(),
            cap,
            engine,
        });
    }
    if n_max > MAX_PHOTON_NUMBER {
        return Err(Error::invalid(
            "n_max",
            format!("{n_max} exceeds the exact-engine limit {MAX_PHOTON_NUMBER}"),
        ));
    }
    Ok(())
}

fn marginal_rows(q: &[f64], nu: &[f64], n_max: usize) -> Vec<Vec<f64>> {
    q.iter()
        .zip(nu)
        .map(|(&qj, &nuj)| {
            let silent = (-nuj).exp();
            (0..=n_max)
                .map(|n| 1.0 - survival(qj).powi(n as i32) * silent)
                .collect()
        })
        .collect()
}

/// Pascal triangle up to row `n_max`.
struct Binomials(Vec<Vec<f64>>);

impl Binomials {
    fn new(n_max: usize) -> Self {
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n_max + 1);
        rows.push(vec![1.0]);
        for n in 1..=n_max {
            let prev = &rows[n - 1];
            let mut row = vec![1.0; n + 1];
            for d in 1..n {
                row[d] = prev[d - 1] + prev[d];
            }
            rows.push(row);
        }
        Binomials(rows)
    }

    /// Product of two exponential generating functions, each stored as
    /// `s[d] = d! [x^d]`: `(a * b)[n] = sum_d C(n, d) a[d] b[n - d]`.
    fn convolve(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        (0..a.len())
            .map(|n| {
                let row = &self.0[n];
                (0..=n).map(|d| row[d] * a[d] * b[n - d]).sum()
            })
            .collect()
    }
}

/// `C(k|n)` and `P(j|n)` for `n = 0..=n_max`.
///
/// The probability that exactly the modes in `S` click is `n!` times the
/// `x^n` coefficient of `e^{q_loss x} prod_{j in S} (e^{q_j x} - e^{-nu_j})
/// prod_{j not in S} e^{-nu_j}`. Summing over `|S| = k` is an elementary
/// symmetric polynomial in the per-mode factors, built one mode at a time.
pub fn conditional_tables(
    mux: &MultiplexConfig,
    det: &DetectorConfig,
    n_max: usize,
) -> Result<ConditionalTables> {
    check_sizes(mux, n_max, MAX_MODES, "the exact engine")?;
    let weights = effective_click_weights(mux, det)?;
    let q = &weights.q;
    let nu = det.nu();
    let n_modes = q.len();
    let len = n_max + 1;
    let binom = Binomials::new(n_max);

    // poly[k][d]: scaled coefficient for "exactly k of the processed modes click"
    let mut poly: Vec<Vec<f64>> = vec![vec![0.0; len]; n_modes + 1];
    poly[0][0] = 1.0;
    for (j, (&qj, &nuj)) in q.iter().zip(nu).enumerate() {
        let silent = (-nuj).exp();
        let mut click = Vec::with_capacity(len);
        click.push(-(-nuj).exp_m1());
        let mut pow = 1.0;
        for _ in 1..len {
            pow *= qj;
            click.push(pow);
        }
        for k in (0..=j + 1).rev() {
            let mut next: Vec<f64> = poly[k].iter().map(|v| v * silent).collect();
            if k > 0 {
                let gained = binom.convolve(&poly[k - 1], &click);
                for (x, g) in next.iter_mut().zip(gained) {
                    *x += g;
                }
            }
            poly[k] = next;
        }
    }

    let q_loss = survival(q.iter().sum());
    let mut loss = Vec::with_capacity(len);
    let mut pow = 1.0;
    for _ in 0..len {
        loss.push(pow);
        pow *= q_loss;
    }
    let c_given_n = poly.iter().map(|row| binom.convolve(row, &loss)).collect();

    Ok(ConditionalTables {
        c_given_n,
        p_given_n: marginal_rows(q, nu, n_max),
    })
}

/// Neumaier-compensated sum.
#[derive(Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Inclusion-exclusion route to the same tables:
/// `C(k|n) = sum_{|V| >= N-k} (-1)^{|V|-(N-k)} C(|V|, N-k) P(no click in V | n)`.
pub fn inclusion_exclusion_tables(
    mux: &MultiplexConfig,
    det: &DetectorConfig,
    n_max: usize,
) -> Result<ConditionalTables> {
    check_sizes(mux, n_max, SUBSET_ENUMERATION_CAP, "inclusion-exclusion")?;
    let weights = effective_click_weights(mux, det)?;
    let q = &weights.q;
    let nu = det.nu();
    let n_modes = q.len();
    let n_subsets = 1usize << n_modes;

    let mut load = vec![0.0; n_subsets];
    let mut dark = vec![0.0; n_subsets];
    for mask in 1..n_subsets {
        let low = mask.trailing_zeros() as usize;
        let rest = mask & (mask - 1);
        load[mask] = load[rest] + q[low];
        dark[mask] = dark[rest] + nu[low];
    }
    let base: Vec<f64> = load.iter().map(|&s| survival(s)).collect();
    let silent: Vec<f64> = dark.iter().map(|&d| (-d).exp()).collect();
    let binom = Binomials::new(n_modes);

    let columns: Vec<Vec<f64>> = (0..=n_max)
        .into_par_iter()
        .map(|n| {
            let mut by_size = vec![CompensatedSum::default(); n_modes + 1];
            for mask in 0..n_subsets {
                by_size[mask.count_ones() as usize].add(base[mask].powi(n as i32) * silent[mask]);
            }
            (0..=n_modes)
                .map(|k| {
                    let r = n_modes - k;
                    let mut acc = CompensatedSum::default();
                    for (t, a) in by_size.iter().enumerate().skip(r) {
                        let sign = if (t - r) % 2 == 0 { 1.0 } else { -1.0 };
                        let coeff = binom.0[t][r];
                        acc.add(sign * coeff * a.sum);
                        acc.add(sign * coeff * a.comp);
                    }
                    acc.value()
                })
                .collect()
        })
        .collect();

    let c_given_n = (0..=n_modes)
        .map(|k| columns.iter().map(|col| col[k]).collect())
        .collect();
    Ok(ConditionalTables {
        c_given_n,
        p_given_n: marginal_rows(q, nu, n_max),
    })
}

/// Enumerates all `(N+1)^n` placements of `n` photons (mode `j` or lost) and
/// all `2^N` dark-count patterns. Test oracle for small instances.
pub fn brute_force_tables(
    mux: &MultiplexConfig,
    det: &DetectorConfig,
    n: usize,
) -> Result<TableColumn> {
    if det.n_modes() != mux.n_modes() {
        return Err(Error::ModeMismatch {
            mux: mux.n_modes(),
            det: det.n_modes(),
        });
    }
    let n_modes = mux.n_modes();
    let placements = ((n_modes + 1) as f64).powi(n as i32);
    let dark_pairs = 4f64.powi(n_modes as i32);
    if placements > BRUTE_FORCE_LIMIT || dark_pairs > BRUTE_FORCE_LIMIT {
        return Err(Error::InstanceTooLarge {
            outcomes: placements.max(dark_pairs),
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    // per-photon outcome probabilities, computed from the raw weights so the
    // oracle shares no arithmetic with effective_click_weights
    let mut outcome = Vec::with_capacity(n_modes + 1);
    let mut lost = mux.tail_loss();
    for (w, e) in mux.weights().iter().zip(det.eta()) {
        outcome.push(w * e);
        lost += w * (1.0 - e);
    }
    outcome.push(lost);

    let mut occupancy = vec![0.0; 1 << n_modes];
    let mut digits = vec![0usize; n];
    loop {
        let mut prob = 1.0;
        let mut mask = 0usize;
        for &d in &digits {
            prob *= outcome[d];
            if d < n_modes {
                mask |= 1 << d;
            }
        }
        occupancy[mask] += prob;
        // mixed-radix increment
        let mut i = 0;
        while i < n {
            digits[i] += 1;
            if digits[i] <= n_modes {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
    }

    let fire: Vec<f64> = det.nu().iter().map(|v| 1.0 - (-v).exp()).collect();
    let mut c = vec![0.0; n_modes + 1];
    let mut p = vec![0.0; n_modes];
    for (occ, &po) in occupancy.iter().enumerate() {
        if po == 0.0 {
            continue;
        }
        for dark in 0..(1usize << n_modes) {
            let pd: f64 = (0..n_modes)
                .map(|j| {
                    if dark >> j & 1 == 1 {
                        fire[j]
                    } else {
                        1.0 - fire[j]
                    }
                })
                .product();
            if pd == 0.0 {
                continue;
            }
            let clicks = occ | dark;
            c[clicks.count_ones() as usize] += po * pd;
            for (j, pj) in p.iter_mut().enumerate() {
                if clicks >> j & 1 == 1 {
                    *pj += po * pd;
                }
            }
        }
    }
    Ok(TableColumn { c, p })
}

/// Exact `c_k`, `p_j` and summary statistics for a photon-number distribution.
pub fn exact_click_statistics(
    pnd: &PhotonNumberDistribution,
    mux: &MultiplexConfig,
    det: &DetectorConfig,
) -> Result<ClickStatistics> {
    conditional_tables(mux, det, pnd.n_max())?.mix(pnd)
}

/// `sum_n rho(n) [1 - P0_j(n) - P0_k(n) + P0_{jk}(n)]`, the probability that
/// both modes click.
pub fn joint_click_prob(
    j: usize,
    k: usize,
    pnd: &PhotonNumberDistribution,
    mux: &MultiplexConfig,
    det: &DetectorConfig,
) -> Result<f64> {
    let weights = effective_click_weights(mux, det)?;
    joint_from_weights(j, k, pnd, &weights.q, det.nu())
}

fn joint_from_weights(
    j: usize,
    k: usize,
    pnd: &PhotonNumberDistribution,
    q: &[f64],
    nu: &[f64],
) -> Result<f64> {
    if j == k {
        return Err(Error::invalid(
            "k",
            "joint click probability needs two distinct modes",
        ));
    }
    if j >= q.len() || k >= q.len() {
        return Err(Error::invalid(
            "j",
            format!("mode index out of range for {} modes", q.len()),
        ));
    }
    Ok(pnd
        .probs()
        .iter()
        .enumerate()
        .map(|(n, r)| {
            let both_silent = no_click_prob(&[j, k], n, q, nu);
            let j_silent = no_click_prob(&[j], n, q, nu);
            let k_silent = no_click_prob(&[k], n, q, nu);
            r * (1.0 - j_silent - k_silent + both_silent)
        })
        .sum())
}

/// Marginal click probabilities from the no-click closed form.
fn marginals(pnd: &PhotonNumberDistribution, q: &[f64], nu: &[f64]) -> Vec<f64> {
    (0..q.len())
        .map(|j| {
            pnd.probs()
                .iter()
                .enumerate()
                .map(|(n, r)| r * (1.0 - no_click_prob(&[j], n, q, nu)))
                .sum()
        })
        .collect()
}

/// Normally ordered covariances `P(j and k click) - p_j p_k` for `j != k`;
/// the diagonal is left at zero.
pub fn click_covariance(
    pnd: &PhotonNumberDistribution,
    mux: &MultiplexConfig,
    det: &DetectorConfig,
) -> Result<Vec<Vec<f64>>> {
    let weights = effective_click_weights(mux, det)?;
    let q = &weights.q;
    let nu = det.nu();
    let p = marginals(pnd, q, nu);
    let n_modes = q.len();
    let mut cov = vec![vec![0.0; n_modes]; n_modes];
    for j in 0..n_modes {
        for k in (j + 1)..n_modes {
            let v = joint_from_weights(j, k, pnd, q, nu)? - p[j] * p[k];
            cov[j][k] = v;
            cov[k][j] = v;
        }
    }
    Ok(cov)
}

/// Q_PB as the sum of pairwise click covariances over `sum_j p_j (1 - p_j)`.
/// Shares no code path with the `c_k` route.
pub fn qpb_operator_form(
    pnd: &PhotonNumberDistribution,
    mux: &MultiplexConfig,
    det: &DetectorConfig,
) -> Result<f64> {
    let weights = effective_click_weights(mux, det)?;
    let p = marginals(pnd, &weights.q, det.nu());
    let denominator: f64 = p.iter().map(|pj| pj * (1.0 - pj)).sum();
    if !(denominator > DENOMINATOR_EPS) {
        return Err(Error::DegenerateDenominator(denominator));
    }
    let numerator: f64 = click_covariance(pnd, mux, det)?
        .iter()
        .map(|row| row.iter().sum::<f64>())
        .sum();
    Ok(numerator / denominator)
}

/// Q_PB through the click-number statistics route.
pub fn exact_qpb(
    pnd: &PhotonNumberDistribution,
    mux: &MultiplexConfig,
    det: &DetectorConfig,
) -> Result<f64> {
    let stats = exact_click_statistics(pnd, mux, det)?;
    poisson_binomial_q(&stats, stats.n_modes())
}
