//! Flat `key=value` experiment configuration.
//!
//! Blank lines and lines starting with `#` are skipped. Keys are dotted
//! (`params.a_gauss=5`); unknown or repeated keys are errors. A metadata
//! sidecar written by a previous run is also accepted: its `config.*`
//! entries are read and everything else is ignored.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use anyhow::{Context, Result, anyhow, bail};
use radpair::precision::{ANGLE_STEP_DEG, MAX_ANGLE_SPACING_DEG};
use radpair::{Error as CoreError, PrecisionKind, PropagationConfig, RateUnit, Regime, SystemParams};

/// First line of every metadata sidecar.
pub const SIDECAR_HEADER: &str = "# radpair run metadata, format 1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    YieldVsB,
    YieldVsAngle,
    PrecisionVsJ,
    PopulationDynamics,
    SpectrumScaling,
    McCheck,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::YieldVsB,
        Experiment::YieldVsAngle,
        Experiment::PrecisionVsJ,
        Experiment::PopulationDynamics,
        Experiment::SpectrumScaling,
        Experiment::McCheck,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::YieldVsB => "yield-vs-b",
            Experiment::YieldVsAngle => "yield-vs-angle",
            Experiment::PrecisionVsJ => "precision-vs-j",
            Experiment::PopulationDynamics => "population-dynamics",
            Experiment::SpectrumScaling => "spectrum-scaling",
            Experiment::McCheck => "mc-check",
        }
    }

    /// Swept quantity and its default grid, if the experiment has one.
    fn default_sweep(self) -> Option<Sweep> {
        let lin = |start, stop, count| Some(Sweep { start, stop, count, log: false });
        match self {
            Experiment::YieldVsB => lin(0.0, 2.0, 41),
            Experiment::YieldVsAngle => lin(0.0, 180.0, 91),
            Experiment::PrecisionVsJ => lin(0.0, 15.0, 31),
            Experiment::McCheck => lin(0.0, 15.0, 4),
            Experiment::SpectrumScaling => Some(Sweep { start: 14.0, stop: 1400.0, count: 9, log: true }),
            Experiment::PopulationDynamics => None,
        }
    }

    pub fn sweep_label(self) -> &'static str {
        match self {
            Experiment::YieldVsB => "B_gauss",
            Experiment::YieldVsAngle => "phi_deg",
            Experiment::PrecisionVsJ | Experiment::McCheck => "J_gauss",
            Experiment::SpectrumScaling => "k_total",
            Experiment::PopulationDynamics => "",
        }
    }
}

impl FromStr for Experiment {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| anyhow!("unknown experiment `{s}`"))
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub log: bool,
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        let n = self.count - 1;
        (0..self.count)
            .map(|i| {
                if i == n {
                    return self.stop;
                }
                let f = i as f64 / n as f64;
                if self.log {
                    (self.start.ln() + f * (self.stop.ln() - self.start.ln())).exp()
                } else {
                    self.start + f * (self.stop - self.start)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeName {
    Traditional,
    Zeno,
    Custom,
}

impl RegimeName {
    pub fn as_str(self) -> &'static str {
        match self {
            RegimeName::Traditional => "traditional",
            RegimeName::Zeno => "zeno",
            RegimeName::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub regime_name: RegimeName,
    /// Resolved parameters, rates in μs⁻¹ and `phi` in radians.
    pub params: SystemParams,
    pub phi_deg: f64,
    pub sweep: Option<Sweep>,
    pub precision_kind: PrecisionKind,
    pub delta_y: f64,
    pub angle_step_deg: f64,
    pub propagation: PropagationConfig,
    pub plot: bool,
    pub mc_molecules: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn regime(&self) -> Regime {
        match self.regime_name {
            RegimeName::Traditional => Regime::Traditional,
            RegimeName::Zeno => Regime::Zeno,
            RegimeName::Custom => Regime::Custom { k_s: self.params.k_s, k_t: self.params.k_t },
        }
    }

    /// Parses and validates `text`. `seed` overrides the configured seed.
    pub fn parse(experiment: Experiment, text: &str, seed: Option<u64>) -> Result<Self> {
        let mut raw = RawConfig::read(text)?;
        if let Some(e) = raw.take("experiment") {
            let e: Experiment = e.parse().context("experiment")?;
            if e != experiment {
                bail!("experiment: config is for `{e}` but `{experiment}` was requested");
            }
        }
        let regime_name = match raw.take("regime").as_deref().unwrap_or("zeno") {
            "traditional" => RegimeName::Traditional,
            "zeno" => RegimeName::Zeno,
            "custom" => RegimeName::Custom,
            other => bail!("regime: expected traditional, zeno or custom, got `{other}`"),
        };
        let unit = match raw.take("rates.unit").as_deref().unwrap_or("angular") {
            "angular" => RateUnit::AngularFrequency,
            "gauss" => RateUnit::GaussEquivalent,
            other => bail!("rates.unit: expected angular or gauss, got `{other}`"),
        };
        let default_j = if experiment == Experiment::PopulationDynamics { 10.0 } else { 0.0 };
        let b = raw.f64_or("params.b_gauss", 0.5)?;
        let phi_deg = raw.f64_or("params.phi_deg", 0.0)?;
        let a = raw.f64_or("params.a_gauss", 5.0)?;
        let j = raw.f64_or("params.j_gauss", default_j)?;
        let gamma = raw.f64_or("params.gamma", radpair::params::GAMMA_DEFAULT)?;
        let k_s = raw.f64_opt("params.k_s")?;
        let k_t = raw.f64_opt("params.k_t")?;

        let mut params = SystemParams { b_gauss: b, phi: phi_deg.to_radians(), a_gauss: a, j_gauss: j, k_s: 0.0, k_t: 0.0, gamma };
        params = match (regime_name, k_s, k_t) {
            (RegimeName::Custom, Some(k_s), Some(k_t)) => params.with_rates(k_s, k_t, unit),
            (RegimeName::Custom, _, _) => bail!("params.k_s: regime=custom requires params.k_s and params.k_t"),
            (_, None, None) => {
                let preset = if regime_name == RegimeName::Zeno { Regime::Zeno } else { Regime::Traditional };
                params.with_regime(preset)
            }
            _ => bail!("params.k_s: explicit rates require regime=custom"),
        };
        params.validate().map_err(|e| named(e, "params."))?;
        if experiment == Experiment::PrecisionVsJ && j != 0.0 {
            bail!("params.j_gauss: precision-vs-j sweeps J; set sweep.start/stop instead");
        }

        let sweep = match experiment.default_sweep() {
            None => {
                for key in ["sweep.start", "sweep.stop", "sweep.count", "sweep.scale"] {
                    if raw.take(key).is_some() {
                        bail!("{key}: {experiment} has no sweep");
                    }
                }
                None
            }
            Some(d) => {
                let log = match raw.take("sweep.scale").as_deref() {
                    None => d.log,
                    Some("linear") => false,
                    Some("log") => true,
                    Some(other) => bail!("sweep.scale: expected linear or log, got `{other}`"),
                };
                let s = Sweep {
                    start: raw.f64_or("sweep.start", d.start)?,
                    stop: raw.f64_or("sweep.stop", d.stop)?,
                    count: raw.parse_or("sweep.count", d.count)?,
                    log,
                };
                if s.count < 2 {
                    bail!("sweep.count: must be >= 2, got {}", s.count);
                }
                if !(s.start < s.stop) {
                    bail!("sweep.start: must be below sweep.stop ({} >= {})", s.start, s.stop);
                }
                if s.log && s.start <= 0.0 {
                    bail!("sweep.start: log sweeps need a positive start");
                }
                let nonnegative = matches!(
                    experiment,
                    Experiment::YieldVsB | Experiment::PrecisionVsJ | Experiment::SpectrumScaling
                );
                if nonnegative && s.start < 0.0 {
                    bail!("sweep.start: must be >= 0 for {experiment}, got {}", s.start);
                }
                Some(s)
            }
        };

        let precision_kind = match raw.take("precision.kind").as_deref().unwrap_or("both") {
            "magnetic" => PrecisionKind::Magnetic,
            "angular" => PrecisionKind::Angular,
            "both" => PrecisionKind::Both,
            other => bail!("precision.kind: expected magnetic, angular or both, got `{other}`"),
        };
        let delta_y = match (raw.f64_opt("precision.delta_y")?, raw.f64_opt("precision.n_receptors")?) {
            (Some(_), Some(_)) => bail!("precision.delta_y: give either precision.delta_y or precision.n_receptors"),
            (Some(d), None) => d,
            (None, Some(n)) => radpair::delta_yield_from_receptors(n).map_err(|e| named(e, "precision."))?,
            (None, None) => 0.05,
        };
        if !(delta_y > 0.0 && delta_y.is_finite()) {
            bail!("precision.delta_y: must be > 0, got {delta_y}");
        }
        let angle_step_deg = raw.f64_or("precision.angle_step_deg", ANGLE_STEP_DEG)?;
        if !(angle_step_deg > 0.0 && angle_step_deg <= MAX_ANGLE_SPACING_DEG) {
            bail!("precision.angle_step_deg: must lie in (0, {MAX_ANGLE_SPACING_DEG}], got {angle_step_deg}");
        }

        let defaults = PropagationConfig::default();
        let propagation = PropagationConfig {
            n0: raw.f64_or("population.n0", defaults.n0)?,
            termination_fraction: raw.f64_or("termination.fraction", defaults.termination_fraction)?,
            dt: raw.auto_f64("integrator.dt")?,
            hard_cap: raw.auto_f64("integrator.hard_cap")?,
            max_samples: raw.parse_or("output.max_samples", defaults.max_samples)?,
            ..defaults
        };
        propagation.validate().map_err(|e| named(e, ""))?;

        let plot = raw.parse_or("output.plot", true)?;
        let mc_molecules = raw.parse_or("mc.n_molecules", 100_000usize)?;
        if mc_molecules < radpair::montecarlo::MIN_MOLECULES {
            bail!("mc.n_molecules: must be >= {}, got {mc_molecules}", radpair::montecarlo::MIN_MOLECULES);
        }
        let configured_seed = raw.parse_or("seed", 0u64)?;
        raw.finish()?;

        Ok(ExperimentConfig {
            experiment,
            regime_name,
            params,
            phi_deg,
            sweep,
            precision_kind,
            delta_y,
            angle_step_deg,
            propagation,
            plot,
            mc_molecules,
            seed: seed.unwrap_or(configured_seed),
        })
    }

    /// The resolved configuration as `(key, value)` pairs in a fixed order.
    /// Feeding these back through [`ExperimentConfig::parse`] gives the
    /// same configuration.
    pub fn echo(&self) -> Vec<(&'static str, String)> {
        let f = |v: f64| format!("{v:?}");
        let auto = |v: Option<f64>| v.map_or_else(|| "auto".to_string(), f);
        let p = &self.params;
        let mut out = vec![
            ("experiment", self.experiment.to_string()),
            ("regime", self.regime_name.as_str().to_string()),
        ];
        if self.regime_name == RegimeName::Custom {
            out.push(("rates.unit", "angular".into()));
            out.push(("params.k_s", f(p.k_s)));
            out.push(("params.k_t", f(p.k_t)));
        }
        out.extend([
            ("params.b_gauss", f(p.b_gauss)),
            ("params.phi_deg", f(self.phi_deg)),
            ("params.a_gauss", f(p.a_gauss)),
            ("params.j_gauss", f(p.j_gauss)),
            ("params.gamma", f(p.gamma)),
        ]);
        if let Some(s) = &self.sweep {
            out.extend([
                ("sweep.start", f(s.start)),
                ("sweep.stop", f(s.stop)),
                ("sweep.count", s.count.to_string()),
                ("sweep.scale", if s.log { "log" } else { "linear" }.to_string()),
            ]);
        }
        let kind = match self.precision_kind {
            PrecisionKind::Magnetic => "magnetic",
            PrecisionKind::Angular => "angular",
            PrecisionKind::Both => "both",
        };
        let c = &self.propagation;
        out.extend([
            ("precision.kind", kind.to_string()),
            ("precision.delta_y", f(self.delta_y)),
            ("precision.angle_step_deg", f(self.angle_step_deg)),
            ("integrator.dt", auto(c.dt)),
            ("integrator.hard_cap", auto(c.hard_cap)),
            ("termination.fraction", f(c.termination_fraction)),
            ("population.n0", f(c.n0)),
            ("output.max_samples", c.max_samples.to_string()),
            ("output.plot", self.plot.to_string()),
            ("mc.n_molecules", self.mc_molecules.to_string()),
            ("seed", self.seed.to_string()),
        ]);
        out
    }
}

/// Rewrites a core validation error so it names the configuration key.
fn named(e: CoreError, prefix: &str) -> anyhow::Error {
    match e {
        CoreError::InvalidParam { field, reason } => {
            let key = match field {
                "phi" => "params.phi_deg".to_string(),
                "n0" => "population.n0".to_string(),
                "termination_fraction" => "termination.fraction".to_string(),
                "dt" => "integrator.dt".to_string(),
                "hard_cap" => "integrator.hard_cap".to_string(),
                "max_samples" => "output.max_samples".to_string(),
                other => format!("{prefix}{other}"),
            };
            anyhow!("{key}: {reason}")
        }
        other => other.into(),
    }
}

struct RawConfig {
    entries: BTreeMap<String, (usize, String)>,
}

impl RawConfig {
    fn read(text: &str) -> Result<Self> {
        let sidecar = text.lines().next().is_some_and(|l| l.trim() == SIDECAR_HEADER);
        let mut entries = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key=value, got `{line}`", n + 1))?;
            let (key, value) = (key.trim(), value.trim());
            let key = if sidecar {
                match key.strip_prefix("config.") {
                    Some(k) => k,
                    None => continue,
                }
            } else {
                key
            };
            if key.is_empty() {
                bail!("line {}: empty key", n + 1);
            }
            if entries.insert(key.to_string(), (n + 1, value.to_string())).is_some() {
                bail!("{key}: given more than once");
            }
        }
        Ok(RawConfig { entries })
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key).map(|(_, v)| v)
    }

    fn parse_opt<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| anyhow!("{key}: cannot parse `{v}`")),
        }
    }

    fn parse_or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        Ok(self.parse_opt(key)?.unwrap_or(default))
    }

    fn f64_opt(&mut self, key: &str) -> Result<Option<f64>> {
        let v: Option<f64> = self.parse_opt(key)?;
        match v {
            Some(x) if !x.is_finite() => bail!("{key}: must be finite, got {x}"),
            v => Ok(v),
        }
    }

    fn f64_or(&mut self, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64_opt(key)?.unwrap_or(default))
    }

    fn auto_f64(&mut self, key: &str) -> Result<Option<f64>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) if v == "auto" => Ok(None),
            Some(v) => {
                let x: f64 = v.parse().map_err(|_| anyhow!("{key}: cannot parse `{v}`"))?;
                if !x.is_finite() {
                    bail!("{key}: must be finite, got {x}");
                }
                Ok(Some(x))
            }
        }
    }

    fn finish(self) -> Result<()> {
        if let Some((key, (line, _))) = self.entries.iter().min_by_key(|(_, (line, _))| *line) {
            bail!("{key}: unknown configuration key (line {line})");
        }
        Ok(())
    }
}
