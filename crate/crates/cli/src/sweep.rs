//! Parameter sweeps behind the three figure data sets.
//!
//! Points are evaluated in parallel; rows come back in grid order, so the
//! emitted file does not depend on the worker count. Monte Carlo points draw
//! their seeds from the root seed and the point's position in the grid.

use std::io::Write;
use std::path::{Path, PathBuf};

use clickstat_core::{
    binomial_q, bootstrap_stderr, conditional_tables, estimate_statistics, poisson_binomial_q,
    ring_resonator, run_experiment_with, spats_qb_closed, spats_qm_closed, ClickStatistics,
    DetectorConfig, MultiplexConfig, Source, Statistic,
};
use rayon::prelude::*;

use crate::commands::BOOTSTRAP_SALT;
use crate::error::{CliError, Result};
use crate::fmt_float;

/// Tail mass allowed when a sweep picks its own truncation.
pub const SWEEP_TAIL_TARGET: f64 = 1e-14;
/// Smallest truncation used by sweeps.
pub const SWEEP_MIN_N_MAX: usize = 30;
pub const DEFAULT_KAPPA: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepEngine {
    Exact,
    MonteCarlo {
        trials: u64,
        seed: u64,
        /// Bootstrap resamples for the Q_PB standard error; 0 disables it.
        bootstrap: usize,
    },
}

/// SplitMix64 finalizer applied to `root + (index + 1) * golden`.
pub fn derive_seed(root: u64, index: u64) -> u64 {
    let mut z = root.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Runs `f` on a pool of `workers` threads (`None` = rayon's default).
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w);
    }
    Ok(builder.build()?.install(f))
}

/// Parses `a,b,c` or `start:stop:step` (inclusive of `stop` up to rounding).
pub fn parse_grid(spec: &str) -> std::result::Result<Vec<f64>, String> {
    let spec = spec.trim();
    let mut values = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("range {spec:?} must look like start:stop:step"));
        }
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| format!("{s:?} in {spec:?}: {e}"))
        };
        let (start, stop, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0) || !start.is_finite() || !stop.is_finite() {
            return Err(format!(
                "range {spec:?} needs finite bounds and a positive step"
            ));
        }
        let count = ((stop - start) / step + 1e-9).floor();
        if count < 0.0 {
            return Err(format!("range {spec:?} is empty"));
        }
        (0..=count as usize)
            .map(|i| round12(start + i as f64 * step))
            .collect::<Vec<_>>()
    } else {
        spec.split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| format!("{s:?} in {spec:?}: {e}"))
            })
            .collect::<std::result::Result<Vec<_>, _>>()?
    };
    if values.is_empty() {
        return Err("grid is empty".into());
    }
    if let Some(x) = values.iter().find(|x| !x.is_finite()) {
        return Err(format!("grid value {x} is not finite"));
    }
    values.sort_by(f64::total_cmp);
    values.dedup();
    Ok(values)
}

/// Like [`parse_grid`] but every value must be a nonnegative integer.
pub fn parse_int_grid(spec: &str) -> std::result::Result<Vec<usize>, String> {
    parse_grid(spec)?
        .into_iter()
        .map(|x| {
            if x >= 0.0 && x.fract() == 0.0 {
                Ok(x as usize)
            } else {
                Err(format!("grid value {x} is not a nonnegative integer"))
            }
        })
        .collect()
}

fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

fn steps(start: f64, step: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| round12(start + i as f64 * step))
        .collect()
}

fn nonempty<T>(name: &str, grid: &[T]) -> Result<()> {
    if grid.is_empty() {
        Err(CliError::Config(format!("{name} grid is empty")))
    } else {
        Ok(())
    }
}

fn network(kappa: f64, eta: f64, n_trc: usize) -> Result<(MultiplexConfig, DetectorConfig)> {
    let mux = ring_resonator(kappa, n_trc).map_err(|e| CliError::Config(e.to_string()))?;
    let det =
        DetectorConfig::uniform(n_trc, eta, 0.0).map_err(|e| CliError::Config(e.to_string()))?;
    Ok((mux, det))
}

fn source_for(state: &str, param: f64) -> Result<Source> {
    Ok(match state {
        "coherent" => Source::Coherent { mean: param },
        "thermal" => Source::Thermal { mean: param },
        "fock" => Source::Fock { m: param as usize },
        "odd_coherent" => Source::odd_coherent_with_mean(param)?,
        "spats" => Source::Spats { n_th: param },
        other => return Err(CliError::Config(format!("unknown state {other:?}"))),
    })
}

/// Click statistics of one point plus the bootstrap error of Q_PB (MC only).
fn point(
    source: &Source,
    mux: &MultiplexConfig,
    det: &DetectorConfig,
    engine: SweepEngine,
    index: u64,
) -> Result<(ClickStatistics, Option<f64>)> {
    let pnd = source.distribution_auto(SWEEP_MIN_N_MAX, SWEEP_TAIL_TARGET)?;
    match engine {
        SweepEngine::Exact => Ok((conditional_tables(mux, det, pnd.n_max())?.mix(&pnd)?, None)),
        SweepEngine::MonteCarlo {
            trials,
            seed,
            bootstrap,
        } => {
            let seed = derive_seed(seed, index);
            let table = run_experiment_with(&pnd, mux, det, trials, seed, bootstrap > 0)?;
            let stats = estimate_statistics(&table);
            let se = if bootstrap > 0 {
                Some(bootstrap_stderr(
                    &table,
                    Statistic::Qpb,
                    bootstrap,
                    seed ^ BOOTSTRAP_SALT,
                )?)
            } else {
                None
            };
            Ok((stats, se))
        }
    }
}

/// Exact statistics for several sources sharing one network, from one set
/// of conditional tables.
fn exact_batch(
    sources: &[Source],
    mux: &MultiplexConfig,
    det: &DetectorConfig,
) -> Result<Vec<ClickStatistics>> {
    let pnds = sources
        .iter()
        .map(|s| s.distribution_auto(SWEEP_MIN_N_MAX, SWEEP_TAIL_TARGET))
        .collect::<clickstat_core::Result<Vec<_>>>()?;
    let n_max = pnds
        .iter()
        .map(|p| p.n_max())
        .max()
        .unwrap_or(SWEEP_MIN_N_MAX);
    let tables = conditional_tables(mux, det, n_max)?;
    Ok(pnds
        .iter()
        .map(|p| tables.mix(p))
        .collect::<clickstat_core::Result<Vec<_>>>()?)
}

// ---------------------------------------------------------------- Fig. 3

#[derive(Debug, Clone, PartialEq)]
pub struct Fig3Params {
    pub kappa: f64,
    pub eta: f64,
    pub n_trc: usize,
    /// Mean photon numbers for coherent and thermal inputs.
    pub nbar: Vec<f64>,
    /// Mean photon numbers for odd-coherent inputs (at least 1).
    pub odd_nbar: Vec<f64>,
    pub fock: Vec<usize>,
    pub engine: SweepEngine,
}

impl Fig3Params {
    pub fn new(engine: SweepEngine) -> Self {
        Fig3Params {
            kappa: DEFAULT_KAPPA,
            eta: 1.0,
            n_trc: 10,
            nbar: steps(0.5, 0.5, 10),
            odd_nbar: steps(1.0, 0.5, 9),
            fock: (1..=5).collect(),
            engine,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig3Row {
    pub state: &'static str,
    pub nbar: f64,
    pub q_pb: f64,
    pub stderr_pb: Option<f64>,
    pub q_b: f64,
}

pub const FIG3_HEADER: [&str; 5] = ["state", "nbar", "q_pb", "stderr_pb", "q_b"];

pub fn sweep_fig3(p: &Fig3Params) -> Result<Vec<Fig3Row>> {
    nonempty("nbar", &p.nbar)?;
    if let Some(x) = p.odd_nbar.iter().find(|x| **x < 1.0) {
        return Err(CliError::Config(format!(
            "odd-coherent mean photon number must be at least 1, got {x}"
        )));
    }
    let (mux, det) = network(p.kappa, p.eta, p.n_trc)?;
    let mut points: Vec<(&'static str, f64)> = Vec::new();
    points.extend(p.nbar.iter().map(|&x| ("coherent", x)));
    points.extend(p.nbar.iter().map(|&x| ("thermal", x)));
    points.extend(p.fock.iter().map(|&m| ("fock", m as f64)));
    points.extend(p.odd_nbar.iter().map(|&x| ("odd_coherent", x)));

    points
        .par_iter()
        .enumerate()
        .map(|(i, &(state, nbar))| {
            let source = source_for(state, nbar)?;
            let (stats, stderr_pb) = point(&source, &mux, &det, p.engine, i as u64)?;
            Ok(Fig3Row {
                state,
                nbar,
                q_pb: poisson_binomial_q(&stats, p.n_trc)?,
                stderr_pb,
                q_b: binomial_q(&stats, p.n_trc)?,
            })
        })
        .collect()
}

pub fn fig3_records(rows: &[Fig3Row]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            vec![
                r.state.to_string(),
                fmt_float(r.nbar),
                fmt_float(r.q_pb),
                r.stderr_pb.map(fmt_float).unwrap_or_default(),
                fmt_float(r.q_b),
            ]
        })
        .collect()
}

// ---------------------------------------------------------------- Fig. 4

#[derive(Debug, Clone, PartialEq)]
pub struct Fig4Params {
    pub kappa: f64,
    pub eta: Vec<f64>,
    pub n_trc: Vec<usize>,
    pub fock: Vec<usize>,
    pub odd_nbar: Vec<f64>,
    pub engine: SweepEngine,
}

impl Fig4Params {
    pub fn new(engine: SweepEngine) -> Self {
        Fig4Params {
            kappa: DEFAULT_KAPPA,
            eta: steps(0.1, 0.1, 10),
            n_trc: (1..=20).collect(),
            fock: vec![1, 2, 3],
            odd_nbar: vec![1.0, 2.0, 3.0],
            engine,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig4Row {
    pub state: &'static str,
    pub param: f64,
    pub eta: f64,
    pub n_trc: usize,
    pub q_pb: f64,
}

pub const FIG4_HEADER: [&str; 5] = ["state", "param", "eta", "n_trc", "q_pb"];

pub fn sweep_fig4(p: &Fig4Params) -> Result<Vec<Fig4Row>> {
    nonempty("eta", &p.eta)?;
    nonempty("n_trc", &p.n_trc)?;
    let mut states: Vec<(&'static str, f64)> = Vec::new();
    states.extend(p.fock.iter().map(|&m| ("fock", m as f64)));
    states.extend(p.odd_nbar.iter().map(|&x| ("odd_coherent", x)));
    nonempty("state", &states)?;
    let sources = states
        .iter()
        .map(|&(s, x)| source_for(s, x))
        .collect::<Result<Vec<_>>>()?;

    let cells: Vec<(f64, usize)> = p
        .eta
        .iter()
        .flat_map(|&e| p.n_trc.iter().map(move |&n| (e, n)))
        .collect();

    // Rows are ordered (state, param, eta, n_trc); cells are (eta, n_trc).
    let per_cell: Vec<Vec<f64>> = match p.engine {
        SweepEngine::Exact => cells
            .par_iter()
            .map(|&(eta, n_trc)| {
                let (mux, det) = network(p.kappa, eta, n_trc)?;
                exact_batch(&sources, &mux, &det)?
                    .iter()
                    .map(|s| Ok(poisson_binomial_q(s, n_trc)?))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?,
        SweepEngine::MonteCarlo { .. } => {
            let n_cells = cells.len();
            let flat: Vec<f64> = (0..states.len() * n_cells)
                .into_par_iter()
                .map(|i| {
                    let (s, c) = (i / n_cells, i % n_cells);
                    let (eta, n_trc) = cells[c];
                    let (mux, det) = network(p.kappa, eta, n_trc)?;
                    let (stats, _) =
                        point(&sources[s], &mux, &det, no_bootstrap(p.engine), i as u64)?;
                    Ok(poisson_binomial_q(&stats, n_trc)?)
                })
                .collect::<Result<_>>()?;
            (0..n_cells)
                .map(|c| (0..states.len()).map(|s| flat[s * n_cells + c]).collect())
                .collect()
        }
    };

    let mut rows = Vec::with_capacity(states.len() * cells.len());
    for (s, &(state, param)) in states.iter().enumerate() {
        for (c, &(eta, n_trc)) in cells.iter().enumerate() {
            rows.push(Fig4Row {
                state,
                param,
                eta,
                n_trc,
                q_pb: per_cell[c][s],
            });
        }
    }
    Ok(rows)
}

fn no_bootstrap(engine: SweepEngine) -> SweepEngine {
    match engine {
        SweepEngine::MonteCarlo { trials, seed, .. } => SweepEngine::MonteCarlo {
            trials,
            seed,
            bootstrap: 0,
        },
        e => e,
    }
}

pub fn fig4_records(rows: &[Fig4Row]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            vec![
                r.state.to_string(),
                fmt_float(r.param),
                fmt_float(r.eta),
                r.n_trc.to_string(),
                fmt_float(r.q_pb),
            ]
        })
        .collect()
}

// ---------------------------------------------------------------- Fig. 5

#[derive(Debug, Clone, PartialEq)]
pub struct Fig5Params {
    pub kappa: f64,
    pub n_th: Vec<f64>,
    pub eta: Vec<f64>,
    pub n_trc: Vec<usize>,
    pub engine: SweepEngine,
}

impl Fig5Params {
    pub fn new(engine: SweepEngine) -> Self {
        Fig5Params {
            kappa: DEFAULT_KAPPA,
            n_th: steps(0.05, 0.05, 60),
            eta: vec![0.5, 1.0],
            n_trc: vec![1, 2, 5, 8, 10],
            engine,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig5Row {
    pub n_th: f64,
    pub eta: f64,
    pub n_trc: usize,
    pub q_pb: f64,
    pub q_m_closed: f64,
    /// Undefined for a single mode.
    pub q_b_closed: Option<f64>,
}

pub const FIG5_HEADER: [&str; 6] = ["n_th", "eta", "n_trc", "q_pb", "q_m_closed", "q_b_closed"];

pub fn sweep_fig5(p: &Fig5Params) -> Result<Vec<Fig5Row>> {
    nonempty("n_th", &p.n_th)?;
    nonempty("eta", &p.eta)?;
    nonempty("n_trc", &p.n_trc)?;
    let sources: Vec<Source> = p.n_th.iter().map(|&n_th| Source::Spats { n_th }).collect();
    let cells: Vec<(f64, usize)> = p
        .eta
        .iter()
        .flat_map(|&e| p.n_trc.iter().map(move |&n| (e, n)))
        .collect();
    let n_cells = cells.len();

    // q_pb indexed [n_th][cell].
    let q_pb: Vec<Vec<f64>> = match p.engine {
        SweepEngine::Exact => {
            let by_cell: Vec<Vec<f64>> = cells
                .par_iter()
                .map(|&(eta, n_trc)| {
                    let (mux, det) = network(p.kappa, eta, n_trc)?;
                    exact_batch(&sources, &mux, &det)?
                        .iter()
                        .map(|s| Ok(poisson_binomial_q(s, n_trc)?))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<_>>()?;
            (0..sources.len())
                .map(|t| (0..n_cells).map(|c| by_cell[c][t]).collect())
                .collect()
        }
        SweepEngine::MonteCarlo { .. } => {
            let flat: Vec<f64> = (0..sources.len() * n_cells)
                .into_par_iter()
                .map(|i| {
                    let (t, c) = (i / n_cells, i % n_cells);
                    let (eta, n_trc) = cells[c];
                    let (mux, det) = network(p.kappa, eta, n_trc)?;
                    let (stats, _) =
                        point(&sources[t], &mux, &det, no_bootstrap(p.engine), i as u64)?;
                    Ok(poisson_binomial_q(&stats, n_trc)?)
                })
                .collect::<Result<_>>()?;
            flat.chunks(n_cells).map(|c| c.to_vec()).collect()
        }
    };

    let mut rows = Vec::with_capacity(sources.len() * n_cells);
    for (t, &n_th) in p.n_th.iter().enumerate() {
        for (c, &(eta, n_trc)) in cells.iter().enumerate() {
            rows.push(Fig5Row {
                n_th,
                eta,
                n_trc,
                q_pb: q_pb[t][c],
                q_m_closed: spats_qm_closed(n_th, eta),
                q_b_closed: if n_trc >= 2 {
                    spats_qb_closed(n_th, eta, n_trc).ok()
                } else {
                    None
                },
            });
        }
    }
    Ok(rows)
}

pub fn fig5_records(rows: &[Fig5Row]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            vec![
                fmt_float(r.n_th),
                fmt_float(r.eta),
                r.n_trc.to_string(),
                fmt_float(r.q_pb),
                fmt_float(r.q_m_closed),
                r.q_b_closed.map(fmt_float).unwrap_or_default(),
            ]
        })
        .collect()
}

// ---------------------------------------------------------------- output

pub fn write_csv<W: Write>(header: &[&str], records: &[Vec<String>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in records {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Fig3,
    Fig4,
    Fig5,
}

/// Path of the plotting script written next to `csv_path`.
pub fn plot_script_path(csv_path: &Path) -> PathBuf {
    let stem = csv_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sweep".into());
    csv_path.with_file_name(format!("{stem}.plot.py"))
}

/// A matplotlib script that reads `csv_name` from its own directory.
pub fn plot_script(figure: Figure, csv_name: &str) -> String {
    let body = match figure {
        Figure::Fig3 => {
            r#"fig, ax = plt.subplots()
for state in ["coherent", "thermal", "fock", "odd_coherent"]:
    sel = [r for r in rows if r["state"] == state]
    x = [float(r["nbar"]) for r in sel]
    y = [float(r["q_pb"]) for r in sel]
    err = [float(r["stderr_pb"]) if r["stderr_pb"] else 0.0 for r in sel]
    ax.errorbar(x, y, yerr=err, marker="o", label=state)
coh = [r for r in rows if r["state"] == "coherent"]
ax.plot([float(r["nbar"]) for r in coh], [float(r["q_b"]) for r in coh], "k--", label="Q_B coherent")
ax.axhline(0.0, color="grey", lw=0.5)
ax.set_xlabel("mean photon number")
ax.set_ylabel("Q_PB")
ax.legend()
"#
        }
        Figure::Fig4 => {
            r#"states = sorted({(r["state"], float(r["param"])) for r in rows})
fig, axes = plt.subplots(1, len(states), figsize=(4 * len(states), 3.5), squeeze=False)
for ax, (state, param) in zip(axes[0], states):
    sel = [r for r in rows if r["state"] == state and float(r["param"]) == param]
    etas = sorted({float(r["eta"]) for r in sel})
    ns = sorted({int(r["n_trc"]) for r in sel})
    grid = {(float(r["eta"]), int(r["n_trc"])): float(r["q_pb"]) for r in sel}
    z = [[grid[(e, n)] for n in ns] for e in etas]
    im = ax.pcolormesh(ns, etas, z, shading="nearest", cmap="RdBu_r")
    ax.contour(ns, etas, z, levels=[0.0], colors="k")
    fig.colorbar(im, ax=ax)
    ax.set_title(f"{state} {param:g}")
    ax.set_xlabel("N_trc")
    ax.set_ylabel("eta")
fig.tight_layout()
"#
        }
        Figure::Fig5 => {
            r#"cells = sorted({(float(r["eta"]), int(r["n_trc"])) for r in rows})
fig, ax = plt.subplots()
for eta, n in cells:
    sel = [r for r in rows if float(r["eta"]) == eta and int(r["n_trc"]) == n]
    ax.plot([float(r["n_th"]) for r in sel], [float(r["q_pb"]) for r in sel], label=f"Q_PB eta={eta:g} N_trc={n}")
for eta in sorted({e for e, _ in cells}):
    sel = [r for r in rows if float(r["eta"]) == eta and int(r["n_trc"]) == cells[-1][1]]
    ax.plot([float(r["n_th"]) for r in sel], [float(r["q_m_closed"]) for r in sel], "k--", label=f"Q_M eta={eta:g}")
ax.axhline(0.0, color="grey", lw=0.5)
ax.set_xlabel("thermal mean photon number")
ax.legend(fontsize="small")
"#
        }
    };
    format!(
        r#"# Plots {csv_name}. Usage: python3 <this file>
import csv
import os

import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
with open(os.path.join(here, "{csv_name}"), newline="") as fh:
    rows = list(csv.DictReader(fh))

{body}out = os.path.join(here, "{csv_name}".rsplit(".", 1)[0] + ".png")
fig.savefig(out, dpi=150)
print("wrote", out)
"#
    )
}

/// Writes the CSV to `out` (or stdout) and, for a file, the plotting script beside it.
pub fn emit(
    figure: Figure,
    header: &[&str],
    records: &[Vec<String>],
    out: Option<&Path>,
) -> Result<()> {
    match out {
        None => write_csv(header, records, std::io::stdout().lock()),
        Some(path) => {
            let file = std::io::BufWriter::new(std::fs::File::create(path)?);
            write_csv(header, records, file)?;
            let name = path
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            std::fs::write(plot_script_path(path), plot_script(figure, &name))?;
            Ok(())
        }
    }
}
