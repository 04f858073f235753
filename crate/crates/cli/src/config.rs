//! Experiment configuration files.
//!
//! The format is TOML with four sections, one key per line:
//!
//! ```toml
//! [source]
//! family = "coherent"      # coherent | thermal | fock | odd_coherent | spats | vacuum
//! mean = 2.0               # coherent, thermal, odd_coherent (or alpha_sq)
//! # m = 1                  # fock
//! # n_th = 0.5             # spats
//! # n_max = 30             # optional fixed truncation
//! # tail_tolerance = 1e-6
//!
//! [network]
//! scheme = "ring"          # uniform | ring | custom
//! kappa = 0.6
//! n_trc = 10
//!
//! [detector]
//! eta = 1.0                # scalar or per-mode list
//! nu = 0.0                 # scalar or per-mode list, default 0
//!
//! [engine]
//! kind = "exact"           # exact | montecarlo
//! # trials = 1000000
//! # seed = 0
//! # bootstrap = 200
//! ```

use std::path::Path;

use clickstat_core::sources::{DEFAULT_N_MAX, DEFAULT_TAIL_TOLERANCE};
use clickstat_core::{
    custom_config, ring_resonator, uniform_splitter, DetectorConfig, MultiplexConfig,
    PhotonNumberDistribution, Source, Truncation,
};
use serde::Deserialize;

use crate::error::{CliError, Result};

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_BOOTSTRAP: usize = 200;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    source: RawSource,
    network: RawNetwork,
    #[serde(default)]
    detector: RawDetector,
    #[serde(default)]
    engine: RawEngine,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSource {
    family: String,
    mean: Option<f64>,
    m: Option<usize>,
    alpha_sq: Option<f64>,
    n_th: Option<f64>,
    n_max: Option<usize>,
    tail_tolerance: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    scheme: String,
    n_modes: Option<usize>,
    kappa: Option<f64>,
    n_trc: Option<usize>,
    weights: Option<Vec<f64>>,
    tail_loss: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ScalarOrList {
    Scalar(f64),
    List(Vec<f64>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDetector {
    eta: Option<ScalarOrList>,
    nu: Option<ScalarOrList>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEngine {
    kind: Option<String>,
    trials: Option<u64>,
    seed: Option<u64>,
    bootstrap: Option<usize>,
}

/// Input state plus its truncation policy.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceConfig {
    pub source: Source,
    /// Fixed truncation; when absent the smallest order meeting the tolerance is used.
    pub n_max: Option<usize>,
    pub tail_tolerance: f64,
}

impl SourceConfig {
    pub fn distribution(&self) -> clickstat_core::Result<PhotonNumberDistribution> {
        match self.n_max {
            Some(n_max) => self
                .source
                .distribution(Truncation::new(n_max).with_tolerance(self.tail_tolerance)),
            None => self
                .source
                .distribution_auto(DEFAULT_N_MAX, self.tail_tolerance),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineKind {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub kind: EngineKind,
    pub trials: u64,
    pub seed: u64,
    pub bootstrap: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            kind: EngineKind::Exact,
            trials: clickstat_core::montecarlo::DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
            bootstrap: DEFAULT_BOOTSTRAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub source: SourceConfig,
    pub mux: MultiplexConfig,
    pub det: DetectorConfig,
    pub engine: EngineConfig,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let ctx = Locator { text };
        let source = ctx.source(&raw.source)?;
        let mux = ctx.network(&raw.network)?;
        let det = ctx.detector(&raw.detector, mux.n_modes())?;
        let engine = ctx.engine(&raw.engine)?;
        let cfg = ExperimentConfig {
            source,
            mux,
            det,
            engine,
        };
        cfg.source
            .distribution()
            .map_err(|e| ctx.err("source", "n_max", e))?;
        Ok(cfg)
    }
}

/// Attaches `section.key` and the line number to semantic errors.
struct Locator<'a> {
    text: &'a str,
}

impl Locator<'_> {
    fn line_of(&self, section: &str, key: &str) -> Option<usize> {
        let header = format!("[{section}]");
        let mut in_section = false;
        for (i, line) in self.text.lines().enumerate() {
            let t = line.trim();
            if t.starts_with('[') {
                in_section = t == header;
                if in_section && key.is_empty() {
                    return Some(i + 1);
                }
                continue;
            }
            if in_section {
                if let Some(rest) = t.strip_prefix(key) {
                    if rest.trim_start().starts_with('=') {
                        return Some(i + 1);
                    }
                }
            }
        }
        None
    }

    fn err(&self, section: &str, key: &str, msg: impl std::fmt::Display) -> CliError {
        let line = self
            .line_of(section, key)
            .or_else(|| self.line_of(section, ""));
        match line {
            Some(l) => CliError::Config(format!("line {l}, {section}.{key}: {msg}")),
            None => CliError::Config(format!("{section}.{key}: {msg}")),
        }
    }

    fn missing(&self, section: &str, key: &str, why: &str) -> CliError {
        self.err(section, key, format!("missing, required {why}"))
    }

    fn source(&self, raw: &RawSource) -> Result<SourceConfig> {
        let need_f = |key: &str, v: Option<f64>| {
            v.ok_or_else(|| self.missing("source", key, &format!("for family \"{}\"", raw.family)))
        };
        let source = match raw.family.as_str() {
            "coherent" => Source::Coherent {
                mean: need_f("mean", raw.mean)?,
            },
            "thermal" => Source::Thermal {
                mean: need_f("mean", raw.mean)?,
            },
            "fock" => Source::Fock {
                m: raw
                    .m
                    .ok_or_else(|| self.missing("source", "m", "for family \"fock\""))?,
            },
            "vacuum" => Source::Fock { m: 0 },
            "spats" => Source::Spats {
                n_th: need_f("n_th", raw.n_th)?,
            },
            "odd_coherent" => match (raw.alpha_sq, raw.mean) {
                (Some(_), Some(_)) => {
                    return Err(self.err("source", "mean", "give either mean or alpha_sq, not both"))
                }
                (Some(a), None) => {
                    if !(a.is_finite() && a > 0.0) {
                        return Err(self.err("source", "alpha_sq", format!("must be > 0, got {a}")));
                    }
                    Source::OddCoherent { alpha_sq: a }
                }
                (None, Some(mean)) => Source::odd_coherent_with_mean(mean)
                    .map_err(|e| self.err("source", "mean", e))?,
                (None, None) => {
                    return Err(self.missing("source", "mean", "(or alpha_sq) for family \"odd_coherent\""))
                }
            },
            other => {
                return Err(self.err(
                    "source",
                    "family",
                    format!(
                        "unknown family \"{other}\" (expected coherent, thermal, fock, odd_coherent, spats or vacuum)"
                    ),
                ))
            }
        };
        for (key, v) in [
            ("mean", source_mean_param(&source)),
            ("n_th", spats_param(&source)),
        ] {
            if let Some(v) = v {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(self.err(
                        "source",
                        key,
                        format!("must be finite and >= 0, got {v}"),
                    ));
                }
            }
        }
        let tail_tolerance = raw.tail_tolerance.unwrap_or(DEFAULT_TAIL_TOLERANCE);
        if !(tail_tolerance > 0.0 && tail_tolerance < 1.0) {
            return Err(self.err(
                "source",
                "tail_tolerance",
                format!("must lie in (0, 1), got {tail_tolerance}"),
            ));
        }
        Ok(SourceConfig {
            source,
            n_max: raw.n_max,
            tail_tolerance,
        })
    }

    fn network(&self, raw: &RawNetwork) -> Result<MultiplexConfig> {
        match raw.scheme.as_str() {
            "uniform" => {
                let n = raw
                    .n_modes
                    .ok_or_else(|| self.missing("network", "n_modes", "for scheme \"uniform\""))?;
                uniform_splitter(n).map_err(|e| self.err("network", "n_modes", e))
            }
            "ring" => {
                let kappa = raw
                    .kappa
                    .ok_or_else(|| self.missing("network", "kappa", "for scheme \"ring\""))?;
                let n_trc = raw
                    .n_trc
                    .ok_or_else(|| self.missing("network", "n_trc", "for scheme \"ring\""))?;
                if !(kappa > 0.0 && kappa < 1.0) {
                    return Err(self.err(
                        "network",
                        "kappa",
                        format!("must lie in (0, 1), got {kappa}"),
                    ));
                }
                ring_resonator(kappa, n_trc).map_err(|e| self.err("network", "n_trc", e))
            }
            "custom" => {
                let weights = raw
                    .weights
                    .clone()
                    .ok_or_else(|| self.missing("network", "weights", "for scheme \"custom\""))?;
                custom_config(weights, raw.tail_loss.unwrap_or(0.0))
                    .map_err(|e| self.err("network", "weights", e))
            }
            other => Err(self.err(
                "network",
                "scheme",
                format!("unknown scheme \"{other}\" (expected uniform, ring or custom)"),
            )),
        }
    }

    fn detector(&self, raw: &RawDetector, n_modes: usize) -> Result<DetectorConfig> {
        let expand = |key: &str, v: &Option<ScalarOrList>, default: f64| -> Result<Vec<f64>> {
            match v {
                None => Ok(vec![default; n_modes]),
                Some(ScalarOrList::Scalar(x)) => Ok(vec![*x; n_modes]),
                Some(ScalarOrList::List(xs)) if xs.len() == n_modes => Ok(xs.clone()),
                Some(ScalarOrList::List(xs)) => Err(self.err(
                    "detector",
                    key,
                    format!(
                        "has {} entries but the network has {n_modes} modes",
                        xs.len()
                    ),
                )),
            }
        };
        let eta = expand("eta", &raw.eta, 1.0)?;
        let nu = expand("nu", &raw.nu, 0.0)?;
        if let Some(x) = eta.iter().find(|x| !(**x >= 0.0 && **x <= 1.0)) {
            return Err(self.err("detector", "eta", format!("must lie in [0, 1], got {x}")));
        }
        if let Some(x) = nu.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(self.err(
                "detector",
                "nu",
                format!("must be finite and >= 0, got {x}"),
            ));
        }
        DetectorConfig::new(eta, nu).map_err(|e| self.err("detector", "eta", e))
    }

    fn engine(&self, raw: &RawEngine) -> Result<EngineConfig> {
        let defaults = EngineConfig::default();
        let kind = match raw.kind.as_deref() {
            None | Some("exact") => EngineKind::Exact,
            Some("montecarlo") | Some("mc") => EngineKind::MonteCarlo,
            Some(other) => {
                return Err(self.err(
                    "engine",
                    "kind",
                    format!("unknown engine \"{other}\" (expected exact or montecarlo)"),
                ))
            }
        };
        let trials = raw.trials.unwrap_or(defaults.trials);
        if trials == 0 {
            return Err(self.err("engine", "trials", "must be at least 1"));
        }
        let bootstrap = raw.bootstrap.unwrap_or(defaults.bootstrap);
        Ok(EngineConfig {
            kind,
            trials,
            seed: raw.seed.unwrap_or(defaults.seed),
            bootstrap,
        })
    }
}

fn source_mean_param(s: &Source) -> Option<f64> {
    match *s {
        Source::Coherent { mean } | Source::Thermal { mean } => Some(mean),
        _ => None,
    }
}

fn spats_param(s: &Source) -> Option<f64> {
    match *s {
        Source::Spats { n_th } => Some(n_th),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const RING: &str = "[network]\nscheme = \"ring\"\nkappa = 0.6\nn_trc = 10\n";

    fn msg(text: &str) -> String {
        match ExperimentConfig::parse(text) {
            Err(CliError::Config(m)) => m,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn parses_ring_coherent() {
        let text =
            format!("[source]\nfamily = \"coherent\"\nmean = 2\n{RING}[detector]\neta = 1\n");
        let cfg = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(cfg.source.source, Source::Coherent { mean: 2.0 });
        assert_eq!(cfg.mux.n_modes(), 10);
        assert_eq!(cfg.det.eta(), &[1.0; 10]);
        assert_eq!(cfg.det.nu(), &[0.0; 10]);
        assert_eq!(cfg.engine.kind, EngineKind::Exact);
    }

    #[test]
    fn per_mode_lists_and_engine() {
        let text = "[source]\nfamily = \"fock\"\nm = 2\n\
                    [network]\nscheme = \"custom\"\nweights = [0.5, 0.3]\ntail_loss = 0.2\n\
                    [detector]\neta = [0.9, 0.8]\nnu = [0.0, 0.01]\n\
                    [engine]\nkind = \"montecarlo\"\ntrials = 500\nseed = 7\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.det.eta(), &[0.9, 0.8]);
        assert_eq!(cfg.engine.kind, EngineKind::MonteCarlo);
        assert_eq!(cfg.engine.trials, 500);
        assert_eq!(cfg.engine.seed, 7);
    }

    #[test]
    fn vacuum_is_fock_zero() {
        let text = format!("[source]\nfamily = \"vacuum\"\n{RING}");
        let cfg = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(cfg.source.source, Source::Fock { m: 0 });
    }

    #[test]
    fn odd_coherent_by_mean() {
        let text = format!("[source]\nfamily = \"odd_coherent\"\nmean = 3\n{RING}");
        let cfg = ExperimentConfig::parse(&text).unwrap();
        let mean = cfg.source.source.nominal_mean().unwrap();
        assert!((mean - 3.0).abs() < 1e-9);
    }

    #[test]
    fn errors_name_line_and_field() {
        let text = format!("[source]\nfamily = \"coherent\"\nmean = -1\n{RING}");
        let m = msg(&text);
        assert!(m.contains("line 3") && m.contains("source.mean"), "{m}");

        let text = "[source]\nfamily = \"coherent\"\nmean = 1\n[network]\nscheme = \"ring\"\nkappa = 1.5\nn_trc = 3\n";
        let m = msg(text);
        assert!(m.contains("line 6") && m.contains("network.kappa"), "{m}");

        let text = format!(
            "[source]\nfamily = \"coherent\"\nmean = 1\n{RING}[detector]\neta = [1.0, 1.0]\n"
        );
        let m = msg(&text);
        assert!(m.contains("detector.eta") && m.contains("10 modes"), "{m}");

        let text = format!("[source]\nfamily = \"laser\"\n{RING}");
        assert!(msg(&text).contains("source.family"));

        let text = format!("[source]\nfamily = \"thermal\"\n{RING}");
        assert!(msg(&text).contains("source.mean"));
    }

    #[test]
    fn syntax_errors_report_position() {
        let m = msg("[source]\nfamily = coherent\n");
        assert!(m.contains("line 2"), "{m}");
        let m = msg(&format!(
            "[source]\nfamily = \"coherent\"\nmean = 1\ncolour = 3\n{RING}"
        ));
        assert!(m.contains("colour"), "{m}");
    }

    #[test]
    fn fixed_truncation_too_short_is_rejected() {
        let text = format!("[source]\nfamily = \"thermal\"\nmean = 5\nn_max = 10\n{RING}");
        let m = msg(&text);
        assert!(m.contains("source.n_max") && m.contains("line 4"), "{m}");
    }
}
