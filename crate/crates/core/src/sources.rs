//! Truncated photon-number distributions for the input states.
//!
//! Distributions are never renormalized after truncation. The probability mass
//! beyond `n_max` is computed from the untruncated series and carried in
//! [`PhotonNumberDistribution::tail_mass`]; constructors fail when it exceeds
//! the configured tolerance.

use crate::error::{Error, Result};

pub const DEFAULT_N_MAX: usize = 30;
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-6;

/// Upper bound on the truncation order searched by [`Source::distribution_auto`].
pub const MAX_AUTO_N_MAX: usize = 4000;

/// State family and its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Source {
    Coherent {
        mean: f64,
    },
    Thermal {
        mean: f64,
    },
    Fock {
        m: usize,
    },
    /// `alpha_sq = 0` denotes the `|alpha|^2 -> 0` limit, a single photon.
    OddCoherent {
        alpha_sq: f64,
    },
    /// Single-photon-added thermal state with thermal mean `n_th`.
    Spats {
        n_th: f64,
    },
    Custom,
}

/// Truncation order and the largest tail mass accepted at that order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncation {
    pub n_max: usize,
    pub tail_tolerance: f64,
}

impl Truncation {
    pub fn new(n_max: usize) -> Self {
        Truncation {
            n_max,
            tail_tolerance: DEFAULT_TAIL_TOLERANCE,
        }
    }

    pub fn with_tolerance(mut self, tail_tolerance: f64) -> Self {
        self.tail_tolerance = tail_tolerance;
        self
    }
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation::new(DEFAULT_N_MAX)
    }
}

/// Photon-number probabilities `rho(0..=n_max)` plus the mass cut off beyond `n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonNumberDistribution {
    probs: Vec<f64>,
    source: Source,
    tail_mass: f64,
}

impl PhotonNumberDistribution {
    /// A distribution given directly by its probabilities. The missing mass
    /// `1 - sum(probs)` becomes the tail.
    pub fn custom(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("probs", "at least one probability required"));
        }
        if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::invalid(
                "probs",
                format!("entry {bad} is not a probability"),
            ));
        }
        let total: f64 = probs.iter().sum();
        if total > 1.0 + 1e-12 {
            return Err(Error::invalid(
                "probs",
                format!("probabilities sum to {total} > 1"),
            ));
        }
        Ok(PhotonNumberDistribution {
            probs,
            source: Source::Custom,
            tail_mass: (1.0 - total).max(0.0),
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn n_max(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn source(&self) -> Source {
        self.source
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// Mean and variance over the truncated support.
    pub fn moments(&self) -> (f64, f64) {
        moments(self)
    }
}

/// `(mean, variance)` of the photon number, summed over `0..=n_max` only.
pub fn moments(pnd: &PhotonNumberDistribution) -> (f64, f64) {
    let mean: f64 = pnd
        .probs
        .iter()
        .enumerate()
        .map(|(n, p)| n as f64 * p)
        .sum();
    let var = pnd
        .probs
        .iter()
        .enumerate()
        .map(|(n, p)| (n as f64 - mean).powi(2) * p)
        .sum();
    (mean, var)
}

pub fn coherent_pnd(mean: f64, n_max: usize) -> Result<PhotonNumberDistribution> {
    Source::Coherent { mean }.distribution(Truncation::new(n_max))
}

pub fn thermal_pnd(mean: f64, n_max: usize) -> Result<PhotonNumberDistribution> {
    Source::Thermal { mean }.distribution(Truncation::new(n_max))
}

pub fn fock_pnd(m: usize, n_max: usize) -> Result<PhotonNumberDistribution> {
    Source::Fock { m }.distribution(Truncation::new(n_max))
}

pub fn odd_coherent_pnd(alpha_sq: f64, n_max: usize) -> Result<PhotonNumberDistribution> {
    if !(alpha_sq > 0.0) {
        return Err(Error::invalid(
            "alpha_sq",
            format!("must be > 0, got {alpha_sq}"),
        ));
    }
    Source::OddCoherent { alpha_sq }.distribution(Truncation::new(n_max))
}

pub fn spats_pnd(n_th: f64, n_max: usize) -> Result<PhotonNumberDistribution> {
    Source::Spats { n_th }.distribution(Truncation::new(n_max))
}

/// Mean photon number of the (untruncated) odd-coherent state, `|alpha|^2 coth |alpha|^2`.
pub fn odd_coherent_mean(alpha_sq: f64) -> f64 {
    if alpha_sq < 1e-8 {
        // coth expansion: x coth x = 1 + x^2/3 + O(x^4)
        1.0 + alpha_sq * alpha_sq / 3.0
    } else {
        alpha_sq / alpha_sq.tanh()
    }
}

/// Inverts [`odd_coherent_mean`] by bisection. The mean is strictly
/// increasing in `|alpha|^2` with infimum 1, which is never attained.
pub fn solve_odd_coherent_alpha(target_mean: f64) -> Result<f64> {
    if !(target_mean > 1.0) || !target_mean.is_finite() {
        return Err(Error::UnreachableMean(target_mean));
    }
    let mut lo = 1e-9_f64;
    let mut hi = (2.0 * target_mean).max(10.0);
    if odd_coherent_mean(lo) >= target_mean {
        return Ok(lo);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if odd_coherent_mean(mid) < target_mean {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi && (odd_coherent_mean(hi) - target_mean).abs() <= 1e-10 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

impl Source {
    /// Odd-coherent source parametrized by its mean photon number. A mean of
    /// exactly 1 selects the single-photon limit `|alpha|^2 -> 0`.
    pub fn odd_coherent_with_mean(mean: f64) -> Result<Source> {
        if mean == 1.0 {
            return Ok(Source::OddCoherent { alpha_sq: 0.0 });
        }
        Ok(Source::OddCoherent {
            alpha_sq: solve_odd_coherent_alpha(mean)?,
        })
    }

    /// Short family name used in reports and CSV files.
    pub fn family_name(&self) -> &'static str {
        match self {
            Source::Coherent { .. } => "coherent",
            Source::Thermal { .. } => "thermal",
            Source::Fock { .. } => "fock",
            Source::OddCoherent { .. } => "odd_coherent",
            Source::Spats { .. } => "spats",
            Source::Custom => "custom",
        }
    }

    /// Untruncated mean photon number, when the family has one in closed form.
    pub fn nominal_mean(&self) -> Option<f64> {
        match *self {
            Source::Coherent { mean } | Source::Thermal { mean } => Some(mean),
            Source::Fock { m } => Some(m as f64),
            Source::OddCoherent { alpha_sq } => Some(odd_coherent_mean(alpha_sq)),
            Source::Spats { n_th } => Some(1.0 + 2.0 * n_th),
            Source::Custom => None,
        }
    }

    fn validate(&self) -> Result<()> {
        let check = |name: &'static str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(
                    name,
                    format!("must be finite and >= 0, got {v}"),
                ))
            }
        };
        match *self {
            Source::Coherent { mean } | Source::Thermal { mean } => check("mean", mean),
            Source::Fock { .. } => Ok(()),
            Source::OddCoherent { alpha_sq } => check("alpha_sq", alpha_sq),
            Source::Spats { n_th } => check("n_th", n_th),
            Source::Custom => Err(Error::invalid(
                "source",
                "custom distributions are built with PhotonNumberDistribution::custom",
            )),
        }
    }

    /// Builds the distribution truncated at `trunc.n_max`.
    pub fn distribution(&self, trunc: Truncation) -> Result<PhotonNumberDistribution> {
        self.validate()?;
        let n_max = trunc.n_max;
        if let Source::Fock { m } = *self {
            if m > n_max {
                return Err(Error::invalid(
                    "m",
                    format!("Fock number {m} exceeds n_max = {n_max}"),
                ));
            }
        }
        let probs: Vec<f64> = (0..=n_max).map(|n| self.prob(n)).collect();
        let tail_mass = self.tail_beyond(n_max);
        if tail_mass > trunc.tail_tolerance {
            return Err(Error::TailTolerance {
                n_max,
                tail_mass,
                tolerance: trunc.tail_tolerance,
            });
        }
        Ok(PhotonNumberDistribution {
            probs,
            source: *self,
            tail_mass,
        })
    }

    /// Smallest truncation `n_max >= min_n_max` whose tail mass is at most `tail_target`.
    pub fn auto_n_max(&self, min_n_max: usize, tail_target: f64) -> Result<usize> {
        self.validate()?;
        let mut n_max = min_n_max;
        if let Source::Fock { m } = *self {
            n_max = n_max.max(m);
        }
        while self.tail_beyond(n_max) > tail_target {
            n_max += 1;
            if n_max > MAX_AUTO_N_MAX {
                return Err(Error::TailTolerance {
                    n_max: MAX_AUTO_N_MAX,
                    tail_mass: self.tail_beyond(MAX_AUTO_N_MAX),
                    tolerance: tail_target,
                });
            }
        }
        Ok(n_max)
    }

    /// Builds the distribution at [`Source::auto_n_max`].
    pub fn distribution_auto(
        &self,
        min_n_max: usize,
        tail_target: f64,
    ) -> Result<PhotonNumberDistribution> {
        let n_max = self.auto_n_max(min_n_max, tail_target)?;
        self.distribution(Truncation::new(n_max).with_tolerance(tail_target))
    }

    /// `rho(n)` of the untruncated state.
    fn prob(&self, n: usize) -> f64 {
        let nf = n as f64;
        match *self {
            Source::Coherent { mean } => {
                if mean == 0.0 {
                    return if n == 0 { 1.0 } else { 0.0 };
                }
                (-mean + nf * mean.ln() - ln_factorial(n)).exp()
            }
            Source::Thermal { mean } => {
                if mean == 0.0 {
                    return if n == 0 { 1.0 } else { 0.0 };
                }
                (nf * (mean / (1.0 + mean)).ln() - mean.ln_1p()).exp()
            }
            Source::Fock { m } => {
                if n == m {
                    1.0
                } else {
                    0.0
                }
            }
            Source::OddCoherent { alpha_sq } => {
                if n.is_multiple_of(2) {
                    return 0.0;
                }
                if alpha_sq == 0.0 {
                    return if n == 1 { 1.0 } else { 0.0 };
                }
                // N_- = 2 (1 - e^{-2|alpha|^2})
                let norm = -2.0 * (-2.0 * alpha_sq).exp_m1();
                (4.0_f64.ln() - alpha_sq + nf * alpha_sq.ln() - ln_factorial(n) - norm.ln()).exp()
            }
            Source::Spats { n_th } => {
                if n == 0 {
                    return 0.0;
                }
                if n_th == 0.0 {
                    return if n == 1 { 1.0 } else { 0.0 };
                }
                let ratio = n_th / (n_th + 1.0);
                (nf.ln() - n_th.ln() - n_th.ln_1p() + nf * ratio.ln()).exp()
            }
            Source::Custom => 0.0,
        }
    }

    /// `sum_{n > n_max} rho(n)`, computed from the series tail rather than as `1 - sum`.
    fn tail_beyond(&self, n_max: usize) -> f64 {
        let k = n_max as f64;
        match *self {
            Source::Fock { m } => {
                if m > n_max {
                    1.0
                } else {
                    0.0
                }
            }
            Source::Thermal { mean } => {
                if mean == 0.0 {
                    0.0
                } else {
                    ((k + 1.0) * (mean / (1.0 + mean)).ln()).exp()
                }
            }
            Source::Spats { n_th } => {
                if n_th == 0.0 {
                    return if n_max >= 1 { 0.0 } else { 1.0 };
                }
                // sum_{n >= K+1} n r^n = r^{K+1} ((K+1) - K r) / (1-r)^2, with 1-r = 1/(n_th+1)
                let r = n_th / (n_th + 1.0);
                let head = ((k + 1.0) * r.ln()).exp();
                head * ((k + 1.0) - k * r) * (n_th + 1.0) / n_th
            }
            Source::Coherent { .. } | Source::OddCoherent { .. } => self.summed_tail(n_max),
            Source::Custom => 0.0,
        }
    }

    fn summed_tail(&self, n_max: usize) -> f64 {
        let mut tail = 0.0;
        let mut prev = f64::INFINITY;
        let mut zeros = 0;
        for n in (n_max + 1)..=(n_max + 1_000_000) {
            let term = self.prob(n);
            if term == 0.0 {
                // parity zeros of the odd-coherent series, or an exhausted series
                zeros += 1;
                if zeros > 2 {
                    break;
                }
                continue;
            }
            zeros = 0;
            tail += term;
            // past the mode the terms decay monotonically
            if term <= prev && term <= tail * 1e-18 {
                break;
            }
            prev = term;
        }
        tail
    }
}

/// `ln n!` by direct summation; exact to rounding for the orders used here.
pub(crate) fn ln_factorial(n: usize) -> f64 {
    if n < 2 {
        return 0.0;
    }
    (2..=n).map(|k| (k as f64).ln()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn coherent_vacuum() {
        let p = coherent_pnd(0.0, 5).unwrap();
        assert_eq!(p.probs(), &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(p.tail_mass(), 0.0);
    }

    #[test]
    fn coherent_unit_mean() {
        let p = coherent_pnd(1.0, 30).unwrap();
        assert!(close(p.probs()[0], (-1.0f64).exp(), 1e-15));
        assert!(close(p.probs()[0], 0.3678794, 1e-7));
        // brute-force first moment of the truncated series
        let mean: f64 = (0..=30)
            .map(|n| {
                let fact: f64 = (1..=n).map(|k| k as f64).product();
                n as f64 * (-1.0f64).exp() / fact
            })
            .sum();
        assert!(close(mean, 1.0, 1e-9));
        assert!(close(p.moments().0, 1.0, 1e-9));
    }

    #[test]
    fn thermal_unit_mean_is_geometric() {
        let p = thermal_pnd(1.0, 30).unwrap();
        for (n, &pr) in p.probs().iter().enumerate() {
            assert!(close(pr, 0.5f64.powi(n as i32 + 1), 1e-16));
        }
        assert_eq!(thermal_pnd(0.0, 10).unwrap().probs()[0], 1.0);
        let (_, var) = thermal_pnd(2.0, 60).unwrap().moments();
        assert!(close(var, 6.0, 1e-6));
    }

    #[test]
    fn thermal_tail_violation_is_reported() {
        let err = thermal_pnd(5.0, 30).unwrap_err();
        assert!(matches!(err, Error::TailTolerance { n_max: 30, .. }));
    }

    #[test]
    fn fock_point_mass() {
        let p = fock_pnd(3, 30).unwrap();
        for (n, &pr) in p.probs().iter().enumerate() {
            assert_eq!(pr, if n == 3 { 1.0 } else { 0.0 });
        }
        assert_eq!(p.tail_mass(), 0.0);
        assert_eq!(p.moments(), (3.0, 0.0));
        assert_eq!(fock_pnd(2, 30).unwrap().moments(), (2.0, 0.0));
        assert_eq!(fock_pnd(0, 4).unwrap().probs()[0], 1.0);
        assert!(fock_pnd(5, 4).is_err());
    }

    #[test]
    fn odd_coherent_parity_and_normalization() {
        let p = odd_coherent_pnd(1.0, 30).unwrap();
        assert_eq!(p.probs()[0], 0.0);
        assert_eq!(p.probs()[2], 0.0);
        // direct series summation of the printed formula over odd n
        let norm = 2.0 * (1.0 - (-2.0f64).exp());
        let direct: f64 = (1..=30)
            .step_by(2)
            .map(|n| {
                let fact: f64 = (1..=n).map(|k| k as f64).product();
                4.0 * (-1.0f64).exp() / (fact * norm)
            })
            .sum();
        let total: f64 = p.probs().iter().sum();
        assert!(close(total, direct, 1e-14));
        assert!(close(total, 1.0, DEFAULT_TAIL_TOLERANCE));
        assert!(odd_coherent_pnd(0.0, 30).is_err());
    }

    #[test]
    fn odd_coherent_large_amplitude_mean() {
        let p = odd_coherent_pnd(10.0, 80).unwrap();
        let (mean, _) = p.moments();
        assert!(close(mean / 10.0, 1.0, 1e-3));
        assert!(close(mean, 10.0 / 10.0f64.tanh(), 1e-9));
    }

    #[test]
    fn solve_alpha_round_trips() {
        let target = odd_coherent_mean(2.0);
        assert!(close(solve_odd_coherent_alpha(target).unwrap(), 2.0, 1e-9));
        let a = solve_odd_coherent_alpha(3.0).unwrap();
        let (mean, _) = odd_coherent_pnd(a, 60).unwrap().moments();
        assert!(close(mean, 3.0, 1e-9));
        assert!(matches!(
            solve_odd_coherent_alpha(1.0),
            Err(Error::UnreachableMean(_))
        ));
        assert!(solve_odd_coherent_alpha(0.5).is_err());
    }

    #[test]
    fn odd_coherent_unit_mean_limit_is_single_photon() {
        let src = Source::odd_coherent_with_mean(1.0).unwrap();
        let p = src.distribution(Truncation::default()).unwrap();
        assert_eq!(p.probs(), fock_pnd(1, 30).unwrap().probs());
    }

    #[test]
    fn spats_properties() {
        let p = spats_pnd(0.7, 60).unwrap();
        assert_eq!(p.probs()[0], 0.0);
        assert_eq!(
            spats_pnd(0.0, 30).unwrap().probs(),
            fock_pnd(1, 30).unwrap().probs()
        );
        let (mean, _) = spats_pnd(1.0, 60).unwrap().moments();
        assert!(close(mean, 3.0, 1e-6));
    }

    #[test]
    fn moments_of_standard_states() {
        let (m, v) = thermal_pnd(1.0, 60).unwrap().moments();
        assert!(close(m, 1.0, 1e-6) && close(v, 2.0, 1e-6));
        let (m, v) = coherent_pnd(4.0, 60).unwrap().moments();
        assert!(close(m, 4.0, 1e-6) && close(v, 4.0, 1e-6));
    }

    #[test]
    fn tail_is_series_remainder() {
        for src in [
            Source::Coherent { mean: 3.0 },
            Source::Thermal { mean: 1.5 },
            Source::OddCoherent { alpha_sq: 2.0 },
            Source::Spats { n_th: 0.8 },
        ] {
            let p = src
                .distribution(Truncation::new(12).with_tolerance(1.0))
                .unwrap();
            let total: f64 = p.probs().iter().sum::<f64>() + p.tail_mass();
            assert!(close(total, 1.0, 1e-12), "{src:?}: {total}");
        }
    }

    #[test]
    fn auto_truncation_meets_target() {
        let src = Source::Thermal { mean: 5.0 };
        let n = src.auto_n_max(30, 1e-12).unwrap();
        assert!(n > 30);
        let p = src.distribution_auto(30, 1e-12).unwrap();
        assert!(p.tail_mass() <= 1e-12);
        assert_eq!(p.n_max(), n);
        assert!(src
            .distribution(Truncation::new(n - 1).with_tolerance(1e-12))
            .is_err());
        assert_eq!(
            Source::Coherent { mean: 1.0 }
                .auto_n_max(30, 1e-12)
                .unwrap(),
            30
        );
    }

    #[test]
    fn custom_distribution() {
        let p = PhotonNumberDistribution::custom(vec![0.5, 0.25, 0.25]).unwrap();
        assert_eq!(p.tail_mass(), 0.0);
        assert!(PhotonNumberDistribution::custom(vec![0.7, 0.7]).is_err());
        assert!(PhotonNumberDistribution::custom(vec![-0.1, 1.1]).is_err());
    }
}
