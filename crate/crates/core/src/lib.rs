//! Click statistics of light measured with a multiplexed array of on-off
//! detectors, and the nonclassicality witnesses built from them.
//!
//! * [`sources`]: truncated photon-number distributions of the input states.
//! * [`network`]: mode intensity fractions (uniform splitter, ring resonator,
//!   custom) and per-mode detector efficiency and dark counts.
//! * [`exact`]: analytic conditional click distributions and their mixture
//!   with an input state, plus the covariance form of Q_PB.
//! * [`montecarlo`]: seeded simulation of the `M x N` click table.
//! * [`stats`]: Q_M, Q_B, Q_PB and the closed forms for photon-added thermal light.
//!
//! ```
//! use clickstat_core::{coherent_pnd, exact_click_statistics, poisson_binomial_q};
//! use clickstat_core::{ring_resonator, DetectorConfig};
//!
//! let mux = ring_resonator(0.6, 10).unwrap();
//! let det = DetectorConfig::uniform(10, 1.0, 0.0).unwrap();
//! let stats = exact_click_statistics(&coherent_pnd(2.0, 30).unwrap(), &mux, &det).unwrap();
//! let q_pb = poisson_binomial_q(&stats, 10).unwrap();
//! assert!(q_pb.abs() < 1e-9);
//! ```

pub mod error;
pub mod exact;
pub mod montecarlo;
pub mod network;
pub mod sources;
pub mod stats;

pub use error::{Error, Result};
pub use exact::{
    brute_force_tables, click_covariance, conditional_tables, exact_click_statistics, exact_qpb,
    inclusion_exclusion_tables, joint_click_prob, no_click_prob, qpb_operator_form,
    ConditionalTables, TableColumn,
};
pub use montecarlo::{
    bootstrap_stderr, estimate_statistics, run_experiment, run_experiment_with, simulate_trial,
    ClickTable, Router, Statistic,
};
pub use network::{
    custom_config, effective_click_weights, is_balanced, ring_resonator, uniform_splitter,
    ClickWeights, DetectorConfig, MultiplexConfig, Scheme,
};
pub use sources::{
    coherent_pnd, fock_pnd, moments, odd_coherent_mean, odd_coherent_pnd, solve_odd_coherent_alpha,
    spats_pnd, thermal_pnd, PhotonNumberDistribution, Source, Truncation,
};
pub use stats::{
    binomial_q, mandel_q, poisson_binomial_q, spats_qb_closed, spats_qm_closed, ClickStatistics,
    Provenance, QReport,
};
