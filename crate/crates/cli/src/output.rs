//! CSV, metadata sidecar and gnuplot script writers.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use radpair::montecarlo::RNG_DESCRIPTION;
use radpair::spectral::VECTORIZATION;
use radpair::{PrecisionKind, Regime};

use crate::config::{Experiment, ExperimentConfig, SIDECAR_HEADER};
use crate::experiments::Table;

pub struct OutputPaths {
    pub csv: PathBuf,
    pub meta: PathBuf,
    pub plot: PathBuf,
}

impl OutputPaths {
    pub fn for_csv(csv: &Path) -> Self {
        OutputPaths { csv: csv.to_path_buf(), meta: csv.with_extension("meta"), plot: csv.with_extension("gp") }
    }
}

pub fn write_csv(path: &Path, table: &Table) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush().with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

/// Sidecar lines in their fixed order.
pub fn sidecar(cfg: &ExperimentConfig, table: &Table, csv_name: &str) -> String {
    let mut lines: Vec<(String, String)> = Vec::new();
    let mut kv = |k: &str, v: String| lines.push((k.to_string(), v));
    kv("version", env!("CARGO_PKG_VERSION").to_string());
    kv("experiment", cfg.experiment.to_string());
    kv("csv", csv_name.to_string());
    kv("csv.rows", table.rows.len().to_string());
    kv("csv.columns", table.header.join(","));
    kv("units.field", "gauss".into());
    kv("units.time", "microseconds".into());
    kv("units.frequency", "omega = gamma * B with gamma in 1e6 rad/s per gauss, no factor 2pi".into());
    kv("units.rates", "1/us; gauss-equivalent input is multiplied by gamma".into());
    kv("units.yields", "percent of the initial population".into());
    kv("units.angles", "degrees".into());
    kv("basis", "electron1 x electron2 x nucleus, each {+1/2, -1/2}".into());
    kv("vectorization", VECTORIZATION.into());
    kv("regime", cfg.regime_name.as_str().into());
    kv("regime.k_s", format!("{:?}", cfg.params.k_s));
    kv("regime.k_t", format!("{:?}", cfg.params.k_t));
    for preset in [Regime::Traditional, Regime::Zeno] {
        let (k_s, k_t) = preset.rates(cfg.params.gamma);
        kv(&format!("regime.preset.{}", preset.tag()), format!("k_s = {k_s:?}, k_t = {k_t:?}"));
    }
    let c = &cfg.propagation;
    kv("integrator.method", "rk4, step polynomial precomputed".into());
    kv(
        "integrator.dt",
        c.dt.map_or_else(|| "auto: 0.01 / max(gamma B, gamma a, gamma |J|, k_s + k_t)".to_string(), |dt| format!("{dt:?}")),
    );
    kv(
        "integrator.hard_cap",
        c.hard_cap.map_or_else(|| "auto: 1e4 / (k_s + k_t) us".into(), |v| format!("{v:?} us")),
    );
    kv("termination.fraction", format!("{:?}", c.termination_fraction));
    kv("population.n0", format!("{:?}", c.n0));
    kv("output.max_samples", c.max_samples.to_string());
    kv("precision.delta_y", format!("{:?}", cfg.delta_y));
    kv("rng", RNG_DESCRIPTION.into());
    kv("notes", table.notes.len().to_string());
    for (i, w) in table.notes.iter().enumerate() {
        kv(&format!("note.{i}"), w.replace('\n', " "));
    }
    for (k, v) in cfg.echo() {
        kv(&format!("config.{k}"), v);
    }
    let mut out = String::from(SIDECAR_HEADER);
    out.push('\n');
    for (k, v) in lines {
        out.push_str(&format!("{k} = {v}\n"));
    }
    out
}

pub fn plot_script(cfg: &ExperimentConfig, csv_name: &str) -> String {
    let body = match cfg.experiment {
        Experiment::YieldVsB => {
            format!("set xlabel 'B (G)'\nset ylabel 'Y_T (%)'\nplot '{csv_name}' using 1:2 with linespoints title 'Y_T'\n")
        }
        Experiment::YieldVsAngle => {
            format!("set xlabel 'phi (deg)'\nset ylabel 'Y_T (%)'\nplot '{csv_name}' using 1:2 with linespoints title 'Y_T'\n")
        }
        Experiment::PrecisionVsJ => {
            let cols = match cfg.precision_kind {
                PrecisionKind::Magnetic => "delta_B_gauss",
                PrecisionKind::Angular => "delta_phi_deg",
                PrecisionKind::Both => "delta_B_gauss delta_phi_deg",
            };
            format!(
                "set xlabel 'J (G)'\nset logscale y\nset ylabel 'precision'\nplot for [col in '{cols}'] '{csv_name}' using 'J_gauss':col with linespoints title col\n"
            )
        }
        Experiment::PopulationDynamics => format!(
            "set xlabel 't (us)'\nset ylabel 'N'\nset logscale y\nplot '{csv_name}' using 2:(strcol(1) eq 'traditional' ? $3 : 1/0) with lines title 'traditional', \\\n     '{csv_name}' using 2:(strcol(1) eq 'zeno' ? $3 : 1/0) with lines title 'zeno'\n"
        ),
        Experiment::SpectrumScaling => format!(
            "set xlabel 'k (1/us)'\nset ylabel 'lambda (1/us)'\nset logscale xy\nplot '{csv_name}' using 1:($3 > 0 ? $3 : 1/0) with points pointtype 7 pointsize 0.5 title 'decay rates'\n"
        ),
        Experiment::McCheck => format!(
            "set xlabel 'J (G)'\nset ylabel 'Y_T (%)'\nplot '{csv_name}' using 1:2 with linespoints title 'deterministic', \\\n     '{csv_name}' using 1:3:4 with yerrorbars title 'Monte Carlo'\n"
        ),
    };
    format!("set datafile separator ','\nset key autotitle columnhead\n{body}")
}

pub fn write_all(paths: &OutputPaths, cfg: &ExperimentConfig, table: &Table) -> Result<()> {
    write_csv(&paths.csv, table)?;
    let csv_name = paths.csv.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
    fs::write(&paths.meta, sidecar(cfg, table, &csv_name))
        .with_context(|| format!("cannot write {}", paths.meta.display()))?;
    if cfg.plot {
        fs::write(&paths.plot, plot_script(cfg, &csv_name))
            .with_context(|| format!("cannot write {}", paths.plot.display()))?;
    }
    Ok(())
}
