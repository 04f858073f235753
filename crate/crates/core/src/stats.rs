//! Click-statistics summaries and the witnesses Q_M, Q_B and Q_PB.

use crate::error::{Error, Result};

/// Smallest accepted Q_PB (and Q_B) denominator.
pub const DENOMINATOR_EPS: f64 = 1e-12;

/// Distribution of the click number `c_k` (k = 0..=N), per-mode click
/// probabilities `p_j`, and their summary moments.
#[derive(Debug, Clone, PartialEq)]
pub struct ClickStatistics {
    pub c: Vec<f64>,
    pub p: Vec<f64>,
    pub mean_c: f64,
    pub var_c: f64,
    pub m: f64,
    pub sigma_sq: f64,
}

impl ClickStatistics {
    /// Derives the summary moments from `c` and `p`. Variances are the
    /// plug-in (population) forms; no Bessel correction.
    pub fn from_distributions(c: Vec<f64>, p: Vec<f64>) -> Self {
        assert_eq!(c.len(), p.len() + 1, "c has N+1 entries, p has N");
        let mean_c: f64 = c.iter().enumerate().map(|(k, ck)| k as f64 * ck).sum();
        let var_c = c
            .iter()
            .enumerate()
            .map(|(k, ck)| (k as f64 - mean_c).powi(2) * ck)
            .sum();
        let n = p.len() as f64;
        let m = p.iter().sum::<f64>() / n;
        let sigma_sq = p.iter().map(|pj| (pj - m).powi(2)).sum::<f64>() / n;
        ClickStatistics {
            c,
            p,
            mean_c,
            var_c,
            m,
            sigma_sq,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.p.len()
    }
}

/// Mandel parameter from true photon-number moments.
pub fn mandel_q(mean_n: f64, var_n: f64) -> Result<f64> {
    if !(mean_n > 0.0) {
        return Err(Error::invalid(
            "mean_n",
            format!("must be > 0, got {mean_n}"),
        ));
    }
    Ok(var_n / mean_n - 1.0)
}

fn check_click_mean(stats: &ClickStatistics, n_modes: usize) -> Result<()> {
    if stats.mean_c <= DENOMINATOR_EPS {
        return Err(Error::NoClicks);
    }
    if stats.mean_c >= n_modes as f64 - DENOMINATOR_EPS {
        return Err(Error::Saturated(n_modes));
    }
    Ok(())
}

/// Binomial parameter, valid for balanced multiplexing.
pub fn binomial_q(stats: &ClickStatistics, n_modes: usize) -> Result<f64> {
    check_click_mean(stats, n_modes)?;
    let n = n_modes as f64;
    Ok(n * stats.var_c / (stats.mean_c * (n - stats.mean_c)) - 1.0)
}

/// Denominator `<c>(N - <c>) - N^2 sigma^2` of Q_PB.
pub fn poisson_binomial_denominator(stats: &ClickStatistics, n_modes: usize) -> f64 {
    let n = n_modes as f64;
    stats.mean_c * (n - stats.mean_c) - n * n * stats.sigma_sq
}

/// Poisson-binomial parameter. Negative values witness nonclassical light.
pub fn poisson_binomial_q(stats: &ClickStatistics, n_modes: usize) -> Result<f64> {
    check_click_mean(stats, n_modes)?;
    let d = poisson_binomial_denominator(stats, n_modes);
    if !(d > DENOMINATOR_EPS) {
        return Err(Error::DegenerateDenominator(d));
    }
    Ok(n_modes as f64 * stats.var_c / d - 1.0)
}

/// Closed-form Q_M of a single-photon-added thermal state seen with efficiency `eta`.
pub fn spats_qm_closed(n_th: f64, eta: f64) -> f64 {
    eta * (n_th * n_th - 0.5) / (n_th + 0.5)
}

/// `I(lambda) = (1 - lambda) / (1 + lambda n_th)^2`: no-click probability of
/// a SPATS for a mode set receiving intensity fraction `lambda`.
pub fn spats_no_click(lambda: f64, n_th: f64) -> f64 {
    (1.0 - lambda) / (1.0 + lambda * n_th).powi(2)
}

/// Closed-form Q_B of a SPATS through a balanced `n_modes` splitter with efficiency `eta`.
pub fn spats_qb_closed(n_th: f64, eta: f64, n_modes: usize) -> Result<f64> {
    if n_modes < 2 {
        return Err(Error::invalid(
            "n_modes",
            format!("need at least 2 modes, got {n_modes}"),
        ));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::invalid(
            "eta",
            format!("must lie in (0, 1], got {eta}"),
        ));
    }
    let n = n_modes as f64;
    let single = spats_no_click(eta / n, n_th);
    let pair = spats_no_click(2.0 * eta / n, n_th);
    if single <= 0.0 || single >= 1.0 {
        return Err(Error::DegenerateClosedForm(single));
    }
    Ok((n - 1.0) * (pair - single * single) / (single * (1.0 - single)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Exact,
    MonteCarlo,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Exact => "exact",
            Provenance::MonteCarlo => "montecarlo",
        }
    }
}

/// The three witnesses for one analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct QReport {
    /// Only present when the true photon statistics are known.
    pub q_m: Option<f64>,
    pub q_b: f64,
    pub q_pb: f64,
    pub provenance: Provenance,
    pub stderr_pb: Option<f64>,
    pub n_modes: usize,
}

impl QReport {
    /// Evaluates Q_B and Q_PB from `stats`; `photon_moments` supplies Q_M.
    pub fn evaluate(
        stats: &ClickStatistics,
        photon_moments: Option<(f64, f64)>,
        provenance: Provenance,
    ) -> Result<Self> {
        let n_modes = stats.n_modes();
        let q_m = match photon_moments {
            Some((mean, var)) if mean > 0.0 => Some(mandel_q(mean, var)?),
            _ => None,
        };
        Ok(QReport {
            q_m,
            q_b: binomial_q(stats, n_modes)?,
            q_pb: poisson_binomial_q(stats, n_modes)?,
            provenance,
            stderr_pb: None,
            n_modes,
        })
    }

    pub fn with_stderr(mut self, stderr_pb: f64) -> Self {
        self.stderr_pb = Some(stderr_pb);
        self
    }
}
