//! Seeded Monte Carlo of the multiplexed detection experiment.
//!
//! Every trial draws from its own ChaCha8 stream, selected by the trial index
//! under a key derived from the root seed. Tables are therefore identical for
//! a given `(seed, trials, configs)` no matter how trials are scheduled
//! across threads.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::network::{effective_click_weights, DetectorConfig, MultiplexConfig};
use crate::sources::PhotonNumberDistribution;
use crate::stats::{binomial_q, poisson_binomial_q, ClickStatistics};

pub const DEFAULT_TRIALS: u64 = 1_000_000;
/// Click patterns are stored as bit masks.
pub const MAX_MODES: usize = 64;
/// Trials per parallel work item; part of neither the output nor the RNG layout.
const BLOCK_TRIALS: u64 = 8192;

/// Per-photon routing and dark-count probabilities prepared for sampling.
#[derive(Debug, Clone)]
pub struct Router {
    cumulative: Vec<f64>,
    fire: Vec<(usize, f64)>,
    n_modes: usize,
}

impl Router {
    pub fn new(mux: &MultiplexConfig, det: &DetectorConfig) -> Result<Self> {
        if mux.n_modes() > MAX_MODES {
            return Err(Error::TooManyModes {
                n_modes: mux.n_modes(),
                cap: MAX_MODES,
                engine: "the Monte Carlo engine",
            });
        }
        let weights = effective_click_weights(mux, det)?;
        let mut acc = 0.0;
        let cumulative = weights
            .q
            .iter()
            .map(|q| {
                acc += q;
                acc
            })
            .collect();
        let fire = det
            .nu()
            .iter()
            .enumerate()
            .filter(|(_, nu)| **nu > 0.0)
            .map(|(j, nu)| (j, -(-nu).exp_m1()))
            .collect();
        Ok(Router {
            cumulative,
            fire,
            n_modes: mux.n_modes(),
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// Click mask of one trial with `n` photons: bit `j` is set when mode `j`
    /// received a detected photon or fired a dark count.
    pub fn trial<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> u64 {
        let detected = *self.cumulative.last().unwrap_or(&0.0);
        let mut mask = 0u64;
        for _ in 0..n {
            let u: f64 = rng.random();
            if u < detected {
                let j = self.cumulative.partition_point(|&c| c <= u);
                mask |= 1 << j.min(self.n_modes - 1);
            }
        }
        for &(j, p) in &self.fire {
            if rng.random::<f64>() < p {
                mask |= 1 << j;
            }
        }
        mask
    }
}

/// One trial at fixed photon number; `result[j]` tells whether mode `j` clicked.
pub fn simulate_trial<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    mux: &MultiplexConfig,
    det: &DetectorConfig,
) -> Result<Vec<bool>> {
    let router = Router::new(mux, det)?;
    let mask = router.trial(rng, n);
    Ok(mask_to_bits(mask, router.n_modes))
}

fn mask_to_bits(mask: u64, n_modes: usize) -> Vec<bool> {
    (0..n_modes).map(|j| mask >> j & 1 == 1).collect()
}

/// Photon-number sampler over `0..=n_max`, renormalized over the truncated support.
#[derive(Debug, Clone)]
struct PhotonSampler {
    cdf: Vec<f64>,
}

impl PhotonSampler {
    fn new(pnd: &PhotonNumberDistribution) -> Result<Self> {
        let probs = pnd.probs();
        let total: f64 = probs.iter().sum();
        if !(total > 0.0) {
            return Err(Error::invalid(
                "probs",
                "distribution has no mass to sample",
            ));
        }
        let last = probs.iter().rposition(|p| *p > 0.0).unwrap_or(0);
        let mut acc = 0.0;
        let cdf = probs
            .iter()
            .enumerate()
            .map(|(n, p)| {
                acc += p;
                if n >= last {
                    1.0
                } else {
                    acc / total
                }
            })
            .collect();
        Ok(PhotonSampler { cdf })
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.cdf.partition_point(|&c| c <= u)
    }
}

/// Outcome of `M` repetitions: `f_k` trials with `k` clicks and `w_j` clicks
/// in mode `j`. Per-trial rows are kept only on request.
#[derive(Debug, Clone, PartialEq)]
pub struct ClickTable {
    pub n_modes: usize,
    pub n_trials: u64,
    pub f: Vec<u64>,
    pub w: Vec<u64>,
    pub seed: u64,
    /// Trial rows as bit masks (bit `j` = mode `j` clicked).
    pub raw: Option<Vec<u64>>,
    /// Probability mass of the source beyond its truncation, redistributed by the sampler.
    pub tail_mass: f64,
}

impl ClickTable {
    /// Builds a table from explicit trial rows.
    pub fn from_rows(n_modes: usize, rows: &[Vec<bool>], seed: u64) -> Result<Self> {
        if n_modes == 0 || n_modes > MAX_MODES {
            return Err(Error::invalid(
                "n_modes",
                format!("must lie in 1..={MAX_MODES}"),
            ));
        }
        let mut masks = Vec::with_capacity(rows.len());
        for row in rows {
            if row.len() != n_modes {
                return Err(Error::invalid(
                    "rows",
                    format!("row has {} columns, expected {n_modes}", row.len()),
                ));
            }
            masks.push(
                row.iter()
                    .enumerate()
                    .fold(0u64, |m, (j, b)| if *b { m | 1 << j } else { m }),
            );
        }
        let mut table = ClickTable::empty(n_modes, seed, 0.0);
        for &mask in &masks {
            table.record(mask);
        }
        table.raw = Some(masks);
        Ok(table)
    }

    /// Builds a count-only table, checking the counting identity.
    pub fn from_counts(f: Vec<u64>, w: Vec<u64>, seed: u64) -> Result<Self> {
        if f.len() != w.len() + 1 || w.is_empty() {
            return Err(Error::invalid(
                "f",
                "need N+1 click-number counts for N mode counts",
            ));
        }
        let n_trials: u64 = f.iter().sum();
        if n_trials == 0 {
            return Err(Error::invalid("f", "at least one trial required"));
        }
        let weighted: u64 = f.iter().enumerate().map(|(k, fk)| k as u64 * fk).sum();
        if w.iter().sum::<u64>() != weighted {
            return Err(Error::invalid("w", "sum of w_j differs from sum of k f_k"));
        }
        if w.iter().any(|wj| *wj > n_trials) {
            return Err(Error::invalid(
                "w",
                "a mode clicked in more trials than were run",
            ));
        }
        Ok(ClickTable {
            n_modes: w.len(),
            n_trials,
            f,
            w,
            seed,
            raw: None,
            tail_mass: 0.0,
        })
    }

    fn empty(n_modes: usize, seed: u64, tail_mass: f64) -> Self {
        ClickTable {
            n_modes,
            n_trials: 0,
            f: vec![0; n_modes + 1],
            w: vec![0; n_modes],
            seed,
            raw: None,
            tail_mass,
        }
    }

    fn record(&mut self, mask: u64) {
        self.n_trials += 1;
        self.f[mask.count_ones() as usize] += 1;
        let mut bits = mask;
        while bits != 0 {
            self.w[bits.trailing_zeros() as usize] += 1;
            bits &= bits - 1;
        }
    }

    fn merge(&mut self, other: ClickTable) {
        self.n_trials += other.n_trials;
        for (a, b) in self.f.iter_mut().zip(&other.f) {
            *a += b;
        }
        for (a, b) in self.w.iter_mut().zip(&other.w) {
            *a += b;
        }
        if let (Some(mine), Some(theirs)) = (self.raw.as_mut(), other.raw) {
            mine.extend(theirs);
        }
    }

    /// Row `i` as booleans, if rows were retained.
    pub fn row(&self, i: usize) -> Option<Vec<bool>> {
        self.raw
            .as_ref()
            .and_then(|r| r.get(i))
            .map(|&mask| mask_to_bits(mask, self.n_modes))
    }

    /// Distinct click patterns with their multiplicities, sorted by pattern.
    pub fn pattern_counts(&self) -> Option<Vec<(u64, u64)>> {
        let raw = self.raw.as_ref()?;
        let mut counts = BTreeMap::new();
        for &mask in raw {
            *counts.entry(mask).or_insert(0u64) += 1;
        }
        Some(counts.into_iter().collect())
    }
}

/// Key for the per-trial streams.
fn stream_key(seed: u64) -> [u8; 32] {
    ChaCha8Rng::seed_from_u64(seed).get_seed()
}

fn trial_rng(key: [u8; 32], trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(trial);
    rng
}

/// Runs `trials` repetitions without retaining rows.
pub fn run_experiment(
    pnd: &PhotonNumberDistribution,
    mux: &MultiplexConfig,
    det: &DetectorConfig,
    trials: u64,
    seed: u64,
) -> Result<ClickTable> {
    run_experiment_with(pnd, mux, det, trials, seed, false)
}

/// Runs `trials` repetitions; `keep_raw` retains every trial row.
pub fn run_experiment_with(
    pnd: &PhotonNumberDistribution,
    mux: &MultiplexConfig,
    det: &DetectorConfig,
    trials: u64,
    seed: u64,
    keep_raw: bool,
) -> Result<ClickTable> {
    if trials == 0 {
        return Err(Error::invalid("trials", "at least one trial required"));
    }
    let router = Router::new(mux, det)?;
    let sampler = PhotonSampler::new(pnd)?;
    let key = stream_key(seed);
    let n_modes = router.n_modes();
    let tail_mass = pnd.tail_mass();
    let blocks = trials.div_ceil(BLOCK_TRIALS);

    let parts: Vec<ClickTable> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let start = b * BLOCK_TRIALS;
            let end = (start + BLOCK_TRIALS).min(trials);
            let mut part = ClickTable::empty(n_modes, seed, tail_mass);
            let mut rows = keep_raw.then(|| Vec::with_capacity((end - start) as usize));
            for t in start..end {
                let mut rng = trial_rng(key, t);
                let n = sampler.sample(&mut rng);
                let mask = router.trial(&mut rng, n);
                part.record(mask);
                if let Some(r) = rows.as_mut() {
                    r.push(mask);
                }
            }
            part.raw = rows;
            part
        })
        .collect();

    let mut table = ClickTable::empty(n_modes, seed, tail_mass);
    if keep_raw {
        table.raw = Some(Vec::with_capacity(trials as usize));
    }
    for part in parts {
        table.merge(part);
    }
    Ok(table)
}

/// Plug-in estimates `c_k = f_k / M`, `p_j = w_j / M`.
pub fn estimate_statistics(table: &ClickTable) -> ClickStatistics {
    statistics_from_counts(&table.f, &table.w, table.n_trials)
}

fn statistics_from_counts(f: &[u64], w: &[u64], trials: u64) -> ClickStatistics {
    let m = trials as f64;
    let c = f.iter().map(|x| *x as f64 / m).collect();
    let p = w.iter().map(|x| *x as f64 / m).collect();
    let mut stats = ClickStatistics::from_distributions(c, p);
    // integer numerator, so <c> and sum_j p_j agree to the last bit
    stats.mean_c = w.iter().sum::<u64>() as f64 / m;
    stats
}

/// Statistics that [`bootstrap_stderr`] can resample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistic {
    Qpb,
    Qb,
    MeanC,
    VarC,
    M,
    SigmaSq,
}

impl Statistic {
    pub fn name(&self) -> &'static str {
        match self {
            Statistic::Qpb => "q_pb",
            Statistic::Qb => "q_b",
            Statistic::MeanC => "mean_c",
            Statistic::VarC => "var_c",
            Statistic::M => "m",
            Statistic::SigmaSq => "sigma_sq",
        }
    }

    /// Whether the statistic depends on `p_j` and so needs per-trial rows.
    pub fn needs_rows(&self) -> bool {
        matches!(self, Statistic::Qpb | Statistic::M | Statistic::SigmaSq)
    }

    pub fn evaluate(&self, stats: &ClickStatistics) -> Result<f64> {
        let n = stats.n_modes();
        match self {
            Statistic::Qpb => poisson_binomial_q(stats, n),
            Statistic::Qb => binomial_q(stats, n),
            Statistic::MeanC => Ok(stats.mean_c),
            Statistic::VarC => Ok(stats.var_c),
            Statistic::M => Ok(stats.m),
            Statistic::SigmaSq => Ok(stats.sigma_sq),
        }
    }
}

/// Draws multinomial counts over `weights` (summing to `total`) by sequential binomials.
fn resample_counts<R: Rng + ?Sized>(rng: &mut R, weights: &[u64], total: u64) -> Vec<u64> {
    let mut remaining_draws = total;
    let mut remaining_mass = total;
    weights
        .iter()
        .map(|&wt| {
            if remaining_draws == 0 || wt == 0 {
                remaining_mass -= wt;
                return 0;
            }
            let x = if wt >= remaining_mass {
                remaining_draws
            } else {
                let p = wt as f64 / remaining_mass as f64;
                Binomial::new(remaining_draws, p)
                    .expect("probability lies in [0, 1]")
                    .sample(rng)
            };
            remaining_draws -= x;
            remaining_mass -= wt;
            x
        })
        .collect()
}

/// Nonparametric bootstrap: standard deviation of `statistic` over
/// `resamples` resamplings of the `M` trial rows with replacement.
/// Row resampling is carried out as a multinomial draw over the distinct
/// click patterns, which has the same law.
pub fn bootstrap_stderr(
    table: &ClickTable,
    statistic: Statistic,
    resamples: usize,
    seed: u64,
) -> Result<f64> {
    if resamples == 0 {
        return Err(Error::invalid(
            "resamples",
            "at least one resample required",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trials = table.n_trials;
    let n_modes = table.n_modes;

    let mut values = Vec::with_capacity(resamples);
    if let Some(patterns) = table.pattern_counts() {
        let weights: Vec<u64> = patterns.iter().map(|(_, c)| *c).collect();
        for _ in 0..resamples {
            let counts = resample_counts(&mut rng, &weights, trials);
            let mut f = vec![0u64; n_modes + 1];
            let mut w = vec![0u64; n_modes];
            for ((mask, _), &cnt) in patterns.iter().zip(&counts) {
                if cnt == 0 {
                    continue;
                }
                f[mask.count_ones() as usize] += cnt;
                for (j, wj) in w.iter_mut().enumerate() {
                    if mask >> j & 1 == 1 {
                        *wj += cnt;
                    }
                }
            }
            values.push(statistic.evaluate(&statistics_from_counts(&f, &w, trials))?);
        }
    } else {
        if statistic.needs_rows() {
            return Err(Error::RawRowsRequired(statistic.name()));
        }
        for _ in 0..resamples {
            let f = resample_counts(&mut rng, &table.f, trials);
            let m = trials as f64;
            let c: Vec<f64> = f.iter().map(|x| *x as f64 / m).collect();
            // p_j is not identified by f alone; f-based statistics ignore it
            let stats = ClickStatistics::from_distributions(c, vec![0.0; n_modes]);
            values.push(statistic.evaluate(&stats)?);
        }
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
    Ok(var.sqrt())
}
