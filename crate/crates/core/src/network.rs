//! Multiplexing network (per-mode intensity fractions) and detector array.

use crate::error::{Error, Result};

/// Tolerance on `sum(weights) + tail_loss = 1` for user-supplied weights.
pub const CUSTOM_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    Uniform,
    /// Ring resonator with coupling `kappa`, truncated to the first `N` pulses.
    Ring {
        kappa: f64,
    },
    Custom,
}

/// Intensity fractions `|u_j|^2` routed to each detected mode, plus the
/// fraction that leaves through untracked modes.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplexConfig {
    weights: Vec<f64>,
    tail_loss: f64,
    scheme: Scheme,
}

impl MultiplexConfig {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn tail_loss(&self) -> f64 {
        self.tail_loss
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn n_modes(&self) -> usize {
        self.weights.len()
    }

    /// Reorders modes; `perm[i]` is the old index placed at position `i`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        MultiplexConfig {
            weights: perm.iter().map(|&i| self.weights[i]).collect(),
            tail_loss: self.tail_loss,
            scheme: Scheme::Custom,
        }
    }
}

/// Splits the input evenly over `n_modes` modes.
pub fn uniform_splitter(n_modes: usize) -> Result<MultiplexConfig> {
    if n_modes == 0 {
        return Err(Error::invalid("n_modes", "at least one mode required"));
    }
    Ok(MultiplexConfig {
        weights: vec![1.0 / n_modes as f64; n_modes],
        tail_loss: 0.0,
        scheme: Scheme::Uniform,
    })
}

/// Pulse train of a ring resonator: `|u_1|^2 = 1 - kappa`,
/// `|u_j|^2 = kappa^2 (1 - kappa)^(j-2)` for `j >= 2`, keeping the first
/// `n_trc` pulses. The remaining `kappa (1 - kappa)^(n_trc - 1)` is tail loss.
pub fn ring_resonator(kappa: f64, n_trc: usize) -> Result<MultiplexConfig> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::invalid(
            "kappa",
            format!("must lie in (0, 1), got {kappa}"),
        ));
    }
    if n_trc == 0 {
        return Err(Error::invalid(
            "n_trc",
            "at least one pulse must be detected",
        ));
    }
    let transmit = 1.0 - kappa;
    let mut weights = Vec::with_capacity(n_trc);
    weights.push(transmit);
    let mut w = kappa * kappa;
    for _ in 1..n_trc {
        weights.push(w);
        w *= transmit;
    }
    Ok(MultiplexConfig {
        weights,
        tail_loss: kappa * transmit.powi(n_trc as i32 - 1),
        scheme: Scheme::Ring { kappa },
    })
}

/// Arbitrary weights. They must already sum to one with `tail_loss`; no renormalization.
pub fn custom_config(weights: Vec<f64>, tail_loss: f64) -> Result<MultiplexConfig> {
    if weights.is_empty() {
        return Err(Error::invalid("weights", "at least one mode required"));
    }
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::invalid(
            "weights",
            format!("negative or non-finite weight {w}"),
        ));
    }
    if !tail_loss.is_finite() || tail_loss < 0.0 {
        return Err(Error::invalid(
            "tail_loss",
            format!("must be >= 0, got {tail_loss}"),
        ));
    }
    let total = weights.iter().sum::<f64>() + tail_loss;
    if (total - 1.0).abs() > CUSTOM_SUM_TOLERANCE {
        return Err(Error::invalid(
            "weights",
            format!("weights plus tail_loss sum to {total}, expected 1"),
        ));
    }
    Ok(MultiplexConfig {
        weights,
        tail_loss,
        scheme: Scheme::Custom,
    })
}

/// Per-mode overall efficiency `eta_j` and dark-count exponent `nu_j`
/// (`e^{-nu_j}` is the no-click probability without photons).
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    eta: Vec<f64>,
    nu: Vec<f64>,
}

impl DetectorConfig {
    pub fn new(eta: Vec<f64>, nu: Vec<f64>) -> Result<Self> {
        if eta.is_empty() {
            return Err(Error::invalid("eta", "at least one mode required"));
        }
        if eta.len() != nu.len() {
            return Err(Error::invalid(
                "nu",
                format!("{} dark-count entries for {} modes", nu.len(), eta.len()),
            ));
        }
        if let Some(e) = eta.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(Error::invalid("eta", format!("{e} outside [0, 1]")));
        }
        if let Some(v) = nu.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::invalid(
                "nu",
                format!("{v} is negative or non-finite"),
            ));
        }
        Ok(DetectorConfig { eta, nu })
    }

    /// Same efficiency and dark-count exponent on every mode.
    pub fn uniform(n_modes: usize, eta: f64, nu: f64) -> Result<Self> {
        DetectorConfig::new(vec![eta; n_modes], vec![nu; n_modes])
    }

    /// Builds `eta_j = (1 - gamma_j) xi_j` from channel loss and detection efficiency.
    pub fn from_loss_and_efficiency(gamma: &[f64], xi: &[f64], nu: Vec<f64>) -> Result<Self> {
        if gamma.len() != xi.len() {
            return Err(Error::invalid(
                "xi",
                format!("{} efficiencies for {} loss rates", xi.len(), gamma.len()),
            ));
        }
        if let Some(g) = gamma.iter().find(|g| !(0.0..=1.0).contains(*g)) {
            return Err(Error::invalid("gamma", format!("{g} outside [0, 1]")));
        }
        let eta = gamma.iter().zip(xi).map(|(g, x)| (1.0 - g) * x).collect();
        DetectorConfig::new(eta, nu)
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    pub fn n_modes(&self) -> usize {
        self.eta.len()
    }

    pub fn permuted(&self, perm: &[usize]) -> Self {
        DetectorConfig {
            eta: perm.iter().map(|&i| self.eta[i]).collect(),
            nu: perm.iter().map(|&i| self.nu[i]).collect(),
        }
    }

    fn check_against(&self, mux: &MultiplexConfig) -> Result<()> {
        if self.n_modes() != mux.n_modes() {
            return Err(Error::ModeMismatch {
                mux: mux.n_modes(),
                det: self.n_modes(),
            });
        }
        Ok(())
    }
}

/// Per-photon detection probabilities `q_j = |u_j|^2 eta_j` and the
/// probability `q_loss = 1 - sum q_j` that a photon is detected nowhere.
#[derive(Debug, Clone, PartialEq)]
pub struct ClickWeights {
    pub q: Vec<f64>,
    pub q_loss: f64,
}

pub fn effective_click_weights(
    mux: &MultiplexConfig,
    det: &DetectorConfig,
) -> Result<ClickWeights> {
    det.check_against(mux)?;
    let q: Vec<f64> = mux
        .weights
        .iter()
        .zip(&det.eta)
        .map(|(w, e)| w * e)
        .collect();
    let q_loss = (1.0 - q.iter().sum::<f64>()).clamp(0.0, 1.0);
    Ok(ClickWeights { q, q_loss })
}

/// True when every mode has identical weight, efficiency and dark-count exponent.
pub fn is_balanced(mux: &MultiplexConfig, det: &DetectorConfig) -> bool {
    let same = |v: &[f64]| v.iter().all(|x| *x == v[0]);
    same(&mux.weights) && same(&det.eta) && same(&det.nu)
}
