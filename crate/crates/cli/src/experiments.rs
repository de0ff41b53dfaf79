//! Runs one configured experiment and lays the results out as a table.

use anyhow::{Context, Result};
use radpair::montecarlo::sample_yield_from_record;
use radpair::precision::field_grid;
use radpair::{
    FieldMode, PrecisionOptions, PrecisionResult, Regime, SweptParam, SystemParams, classify_zeno_scaling,
    precision_vs_exchange, propagate, triplet_yield, yield_sweep,
};

use crate::config::{Experiment, ExperimentConfig, RegimeName};

/// Formats a float with 17 significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, num)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Notes collected while running, written to the sidecar.
    pub notes: Vec<String>,
}

impl Table {
    fn new(header: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Table { header: header.into_iter().map(Into::into).collect(), rows: Vec::new(), notes: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

const PARAM_COLUMNS: [&str; 8] = ["B_gauss", "phi_deg", "a_gauss", "J_gauss", "k_s", "k_t", "gamma", "regime"];

/// Resolved-parameter columns, leaving out the swept one.
fn param_columns(swept: &str) -> impl Iterator<Item = &'static str> + '_ {
    PARAM_COLUMNS.into_iter().filter(move |c| *c != swept)
}

fn param_cells(p: &SystemParams, regime: &str, swept: &str) -> Vec<String> {
    let values = [
        num(p.b_gauss),
        num(p.phi.to_degrees()),
        num(p.a_gauss),
        num(p.j_gauss),
        num(p.k_s),
        num(p.k_t),
        num(p.gamma),
        regime.to_string(),
    ];
    PARAM_COLUMNS.iter().zip(values).filter(|(c, _)| **c != swept).map(|(_, v)| v).collect()
}

pub fn run(cfg: &ExperimentConfig, jobs: usize) -> Result<Table> {
    match cfg.experiment {
        Experiment::YieldVsB => yield_curve(cfg, SweptParam::B, jobs),
        Experiment::YieldVsAngle => yield_curve(cfg, SweptParam::Phi, jobs),
        Experiment::PrecisionVsJ => precision(cfg, jobs),
        Experiment::PopulationDynamics => population(cfg),
        Experiment::SpectrumScaling => spectrum(cfg),
        Experiment::McCheck => mc_check(cfg, jobs),
    }
}

fn sweep_values(cfg: &ExperimentConfig) -> Vec<f64> {
    cfg.sweep.expect("experiment has a sweep").values()
}

fn yield_curve(cfg: &ExperimentConfig, swept: SweptParam, jobs: usize) -> Result<Table> {
    let values = sweep_values(cfg);
    let grid: Vec<f64> = match swept {
        SweptParam::Phi => values.iter().map(|d| d.to_radians()).collect(),
        _ => values.clone(),
    };
    let regime = cfg.regime_name.as_str();
    let sweep = yield_sweep(&cfg.params, swept, &grid, regime, &cfg.propagation, jobs)?;
    let mut table = Table::new(
        [cfg.experiment.sweep_label(), "Y_T", "Y_S", "unreacted", "terminated", "reaction_time_us"]
            .into_iter()
            .chain(param_columns(cfg.experiment.sweep_label())),
    );
    for (v, r) in values.iter().zip(&sweep.results) {
        let mut row = vec![
            num(*v),
            num(r.y_t),
            num(r.y_s),
            num(r.unreacted),
            r.terminated.to_string(),
            opt(r.reaction_time),
        ];
        row.extend(param_cells(&r.params, regime, cfg.experiment.sweep_label()));
        if r.hard_cap_hit {
            table.notes.push(format!("{} = {v}: hard cap reached", cfg.experiment.sweep_label()));
        }
        table.push(row);
    }
    Ok(table)
}

fn precision(cfg: &ExperimentConfig, jobs: usize) -> Result<Table> {
    let js = sweep_values(cfg);
    let options = PrecisionOptions {
        kind: cfg.precision_kind,
        delta_y: cfg.delta_y,
        angle_step_deg: cfg.angle_step_deg,
        propagation: cfg.propagation.clone(),
        jobs,
    };
    let results = precision_vs_exchange(&cfg.params, cfg.regime(), &js, &options)?;
    let magnetic = !matches!(cfg.precision_kind, radpair::PrecisionKind::Angular);
    let angular = !matches!(cfg.precision_kind, radpair::PrecisionKind::Magnetic);

    let mut header: Vec<String> = vec!["J_gauss".into()];
    if magnetic {
        header.extend(field_grid().iter().map(|b| format!("Y_T_B{b:.2}")));
        header.extend(["slope_pct_per_gauss", "slope_half_step", "delta_B_gauss", "delta_B_status"].map(String::from));
    }
    if angular {
        header.extend(["Y_T_min", "Y_T_max", "Y_T_mean", "swing", "delta_phi_deg", "delta_phi_status"].map(String::from));
    }
    header.push("delta_Y_T".into());
    header.extend(param_columns("J_gauss").map(String::from));
    header.push("error".into());
    let mut table = Table::new(header);

    let regime = cfg.regime_name.as_str();
    for r in &results {
        let mut row = vec![num(r.j)];
        if magnetic {
            magnetic_cells(r, &mut row);
        }
        if angular {
            let a = r.angular.as_ref();
            row.extend([
                opt(a.map(|a| a.y_min)),
                opt(a.map(|a| a.y_max)),
                opt(a.map(|a| a.mean_y)),
                opt(a.map(|a| a.swing)),
                num(r.delta_phi().as_f64()),
                r.delta_phi().status().to_string(),
            ]);
        }
        row.push(num(r.delta_y));
        row.extend(param_cells(&cfg.params.with_j(r.j), regime, "J_gauss"));
        row.push(r.error.clone().unwrap_or_default().replace([',', '\n'], ";"));
        if let Some(e) = &r.error {
            table.notes.push(format!("J = {}: {e}", r.j));
        }
        table.push(row);
    }
    Ok(table)
}

fn magnetic_cells(r: &PrecisionResult, row: &mut Vec<String>) {
    let grid = field_grid();
    match &r.magnetic_sweep {
        Some(s) => row.extend(s.yields.iter().map(|y| num(*y))),
        None => row.extend(grid.iter().map(|_| String::new())),
    }
    let m = r.magnetic.as_ref();
    row.extend([
        opt(m.map(|m| m.slope)),
        opt(m.and_then(|m| m.slope_half_step)),
        num(r.delta_b().as_f64()),
        r.delta_b().status().to_string(),
    ]);
}

fn population(cfg: &ExperimentConfig) -> Result<Table> {
    let mut series = vec![(RegimeName::Traditional, Regime::Traditional), (RegimeName::Zeno, Regime::Zeno)];
    if cfg.regime_name == RegimeName::Custom {
        series.push((RegimeName::Custom, cfg.regime()));
    }
    let mut table = Table::new(["regime", "t_us", "N", "N_over_N0", "Q_S", "Q_T", "recombined_S", "recombined_T"]);
    for (name, regime) in series {
        let p = cfg.params.with_regime(regime);
        let rec = propagate(&p, FieldMode::Magnetic, &cfg.propagation)
            .with_context(|| format!("{} regime", name.as_str()))?;
        for i in 0..rec.len() {
            table.push(vec![
                name.as_str().to_string(),
                num(rec.times[i]),
                num(rec.population[i]),
                num(rec.population[i] / rec.n0),
                num(rec.qs_expect[i]),
                num(rec.qt_expect[i]),
                num(rec.recombined_s[i]),
                num(rec.recombined_t[i]),
            ]);
        }
        table.notes.extend(rec.warnings.iter().map(|w| format!("{}: {w}", name.as_str())));
        let y = triplet_yield(&rec);
        table.notes.push(format!(
            "{}: k_s = {}, k_t = {}, Y_T = {}, reaction_time_us = {}",
            name.as_str(),
            p.k_s,
            p.k_t,
            y.y_t,
            y.reaction_time.map_or("none".into(), |t| t.to_string())
        ));
    }
    Ok(table)
}

fn spectrum(cfg: &ExperimentConfig) -> Result<Table> {
    let ks = sweep_values(cfg);
    let scaling = classify_zeno_scaling(&cfg.params, FieldMode::Magnetic, &ks)?;
    let mut table = Table::new(["k_total", "branch", "lambda", "omega", "slope", "class", "ambiguous"]);
    for (b, branch) in scaling.branches.iter().enumerate() {
        for (i, k) in ks.iter().enumerate() {
            table.push(vec![
                num(*k),
                b.to_string(),
                num(branch.lambdas[i]),
                num(branch.omegas[i]),
                opt(branch.slope),
                branch.class.as_str().to_string(),
                branch.ambiguous.to_string(),
            ]);
        }
    }
    Ok(table)
}

fn mc_check(cfg: &ExperimentConfig, jobs: usize) -> Result<Table> {
    let js = sweep_values(cfg);
    let pool = rayon_pool(jobs)?;
    let regime = cfg.regime_name.as_str();
    let mut table = Table::new(
        [
            "J_gauss",
            "Y_T",
            "Y_T_hat",
            "stderr",
            "z_score",
            "Y_S_hat",
            "unreacted",
            "unreacted_hat",
            "n_molecules",
            "seed",
        ]
        .into_iter()
        .chain(param_columns("J_gauss")),
    );
    let config = cfg.propagation.clone().undecimated();
    for j in js {
        let p = cfg.params.with_j(j);
        let (det, mc) = pool.install(|| -> Result<_> {
            let rec = propagate(&p, FieldMode::Magnetic, &config)?;
            let det = triplet_yield(&rec);
            let mc = sample_yield_from_record(&rec, cfg.mc_molecules, cfg.seed)?;
            Ok((det, mc))
        })?;
        let mut row = vec![
            num(j),
            num(det.y_t),
            num(mc.y_t_hat),
            num(mc.stderr),
            num((mc.y_t_hat - det.y_t) / mc.stderr),
            num(mc.y_s_hat),
            num(det.unreacted),
            num(mc.unreacted),
            mc.n_molecules.to_string(),
            mc.seed.to_string(),
        ];
        row.extend(param_cells(&p, regime, "J_gauss"));
        table.push(row);
    }
    Ok(table)
}

fn rayon_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new().num_threads(jobs).build().context("building worker pool")
}
