//! `analyze` and `table`.

use std::io::Write;

use clickstat_core::{
    bootstrap_stderr, estimate_statistics, exact_click_statistics, run_experiment_with,
    ClickStatistics, ClickTable, Provenance, QReport, Statistic,
};

use crate::config::{EngineKind, ExperimentConfig};
use crate::error::{CliError, Result};
use crate::fmt_float;

/// Separates the bootstrap stream from the simulation stream of the same seed.
pub const BOOTSTRAP_SALT: u64 = 0x5bd1_e995_0b00_7575;

/// Everything `analyze` reports.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub stats: ClickStatistics,
    pub report: QReport,
    pub tail_mass: f64,
    pub n_max: usize,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
}

/// Runs the configured engine. Monte Carlo runs compute the bootstrap
/// standard error of Q_PB only when per-trial rows are retained.
pub fn analyze(cfg: &ExperimentConfig, keep_raw: bool) -> Result<Analysis> {
    let pnd = cfg.source.distribution()?;
    let moments = Some(pnd.moments());
    match cfg.engine.kind {
        EngineKind::Exact => {
            let stats = exact_click_statistics(&pnd, &cfg.mux, &cfg.det)?;
            let report = QReport::evaluate(&stats, moments, Provenance::Exact)?;
            Ok(Analysis {
                stats,
                report,
                tail_mass: pnd.tail_mass(),
                n_max: pnd.n_max(),
                trials: None,
                seed: None,
            })
        }
        EngineKind::MonteCarlo => {
            let e = &cfg.engine;
            let table = run_experiment_with(&pnd, &cfg.mux, &cfg.det, e.trials, e.seed, keep_raw)?;
            let stats = estimate_statistics(&table);
            let mut report = QReport::evaluate(&stats, moments, Provenance::MonteCarlo)?;
            if keep_raw && e.bootstrap > 0 {
                let se =
                    bootstrap_stderr(&table, Statistic::Qpb, e.bootstrap, e.seed ^ BOOTSTRAP_SALT)?;
                report = report.with_stderr(se);
            }
            Ok(Analysis {
                stats,
                report,
                tail_mass: pnd.tail_mass(),
                n_max: pnd.n_max(),
                trials: Some(e.trials),
                seed: Some(e.seed),
            })
        }
    }
}

fn join(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| fmt_float(*x))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Human-readable report.
pub fn write_analysis_text<W: Write>(a: &Analysis, mut out: W) -> Result<()> {
    let r = &a.report;
    let s = &a.stats;
    writeln!(out, "engine      {}", r.provenance.as_str())?;
    if let (Some(m), Some(seed)) = (a.trials, a.seed) {
        writeln!(out, "trials      {m}")?;
        writeln!(out, "seed        {seed}")?;
    }
    writeln!(out, "n_modes     {}", r.n_modes)?;
    writeln!(out, "n_max       {}", a.n_max)?;
    writeln!(out, "tail_mass   {}", fmt_float(a.tail_mass))?;
    writeln!(out, "c_k         [{}]", join(&s.c))?;
    writeln!(out, "p_j         [{}]", join(&s.p))?;
    writeln!(out, "mean_c      {}", fmt_float(s.mean_c))?;
    writeln!(out, "var_c       {}", fmt_float(s.var_c))?;
    writeln!(out, "m           {}", fmt_float(s.m))?;
    writeln!(out, "sigma_sq    {}", fmt_float(s.sigma_sq))?;
    match r.q_m {
        Some(q) => writeln!(out, "q_m         {}", fmt_float(q))?,
        None => writeln!(out, "q_m         n/a")?,
    }
    writeln!(out, "q_b         {}", fmt_float(r.q_b))?;
    writeln!(out, "q_pb        {}", fmt_float(r.q_pb))?;
    if let Some(se) = r.stderr_pb {
        writeln!(out, "stderr_pb   {}", fmt_float(se))?;
    }
    Ok(())
}

/// Long-format CSV: `quantity,index,value`; scalars leave `index` empty.
pub fn write_analysis_csv<W: Write>(a: &Analysis, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["quantity", "index", "value"])?;
    for (k, v) in a.stats.c.iter().enumerate() {
        w.write_record(["c_k", &k.to_string(), &fmt_float(*v)])?;
    }
    for (j, v) in a.stats.p.iter().enumerate() {
        w.write_record(["p_j", &(j + 1).to_string(), &fmt_float(*v)])?;
    }
    let r = &a.report;
    let mut scalars = vec![
        ("mean_c", Some(a.stats.mean_c)),
        ("var_c", Some(a.stats.var_c)),
        ("m", Some(a.stats.m)),
        ("sigma_sq", Some(a.stats.sigma_sq)),
        ("q_m", r.q_m),
        ("q_b", Some(r.q_b)),
        ("q_pb", Some(r.q_pb)),
        ("stderr_pb", r.stderr_pb),
    ];
    scalars.push(("tail_mass", Some(a.tail_mass)));
    for (name, v) in scalars {
        if let Some(v) = v {
            w.write_record([name, "", &fmt_float(v)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Simulates the raw click table for `cfg` regardless of its engine kind.
pub fn click_table(cfg: &ExperimentConfig, trials: u64, seed: u64) -> Result<ClickTable> {
    let pnd = cfg.source.distribution()?;
    Ok(run_experiment_with(
        &pnd, &cfg.mux, &cfg.det, trials, seed, true,
    )?)
}

/// Header `trial,d1..dN`, one 0/1 row per trial, then a footer of
/// `f,k,f_k` and `w,j,w_j` records.
pub fn write_table_csv<W: Write>(table: &ClickTable, out: W) -> Result<()> {
    let raw = table
        .raw
        .as_ref()
        .ok_or_else(|| CliError::Config("click table has no per-trial rows".into()))?;
    let n = table.n_modes;
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
    let mut header = vec!["trial".to_string()];
    header.extend((1..=n).map(|j| format!("d{j}")));
    w.write_record(&header)?;
    let mut rec: Vec<String> = Vec::with_capacity(n + 1);
    for (i, mask) in raw.iter().enumerate() {
        rec.clear();
        rec.push((i + 1).to_string());
        rec.extend((0..n).map(|j| if mask >> j & 1 == 1 { "1" } else { "0" }.to_string()));
        w.write_record(&rec)?;
    }
    for (k, f) in table.f.iter().enumerate() {
        w.write_record(["f", &k.to_string(), &f.to_string()])?;
    }
    for (j, c) in table.w.iter().enumerate() {
        w.write_record(["w", &(j + 1).to_string(), &c.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a file written by [`write_table_csv`]. The footer is checked
/// against the rows.
pub fn read_table_csv<R: std::io::Read>(input: R, seed: u64) -> Result<ClickTable> {
    let bad = |m: String| CliError::Config(format!("table csv: {m}"));
    let mut r = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let n = r.headers()?.len().saturating_sub(1);
    let mut rows: Vec<Vec<bool>> = Vec::new();
    let mut f: Vec<u64> = Vec::new();
    let mut w: Vec<u64> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let parse = |s: &str| s.parse::<u64>().map_err(|e| bad(format!("{s:?}: {e}")));
        match rec.get(0) {
            Some("f") => f.push(parse(&rec[2])?),
            Some("w") => w.push(parse(&rec[2])?),
            _ => rows.push(
                rec.iter()
                    .skip(1)
                    .map(|b| match b {
                        "0" => Ok(false),
                        "1" => Ok(true),
                        other => Err(bad(format!("bad cell {other:?}"))),
                    })
                    .collect::<Result<_>>()?,
            ),
        }
    }
    let table = ClickTable::from_rows(n, &rows, seed)?;
    if table.f != f || table.w != w {
        return Err(bad("footer does not match the rows".into()));
    }
    Ok(table)
}
