//! Command-line front end for `clickstat-core`: experiment configs,
//! analyses, figure sweeps and raw click tables.

pub mod commands;
pub mod config;
pub mod error;
pub mod sweep;

pub use commands::{
    analyze, click_table, read_table_csv, write_analysis_csv, write_analysis_text, write_table_csv,
    Analysis,
};
pub use config::{EngineConfig, EngineKind, ExperimentConfig, SourceConfig};
pub use error::{CliError, Result};

/// Shortest lossless form used throughout the CSV output: 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [
            0.0,
            -0.0,
            1.0,
            0.1,
            -1.0 / 3.0,
            1e-300,
            6.02e23,
            f64::MIN_POSITIVE,
        ] {
            let s = fmt_float(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(fmt_float(0.5), "5.0000000000000000e-1");
    }
}
