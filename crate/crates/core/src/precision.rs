//! Yield sweeps and the compass precision derived from them.
//!
//! A receptor population of size `N_R` resolves triplet-yield differences
//! of `δY_T = 200/√N_R` percent. The magnetic precision is `δY_T` divided
//! by the slope of `Y_T(B)` at the geomagnetic field, the angular precision
//! is `δY_T` divided by the mean heading sensitivity `swing / 90°`.

use rayon::prelude::*;

use crate::dynamics::{PropagationConfig, propagate};
use crate::error::{Error, Result};
use crate::params::{FieldMode, Regime, SystemParams};
use crate::yields::{YieldResult, triplet_yield};

/// Geomagnetic field strength at which the magnetic slope is evaluated, G.
pub const GEOMAGNETIC_FIELD: f64 = 0.5;
/// Default half-width of the central difference for `dY_T/dB`, G.
pub const FIELD_STEP: f64 = 0.02;
/// Coarsest grid spacing accepted around the geomagnetic field, G.
pub const MAX_FIELD_SPACING: f64 = 0.05;
/// Default heading step, degrees.
pub const ANGLE_STEP_DEG: f64 = 2.0;
/// Coarsest heading step accepted, degrees.
pub const MAX_ANGLE_SPACING_DEG: f64 = 5.0;

/// Resolvable triplet-yield difference in percent.
pub fn delta_yield_from_receptors(n_receptors: f64) -> Result<f64> {
    if !(n_receptors.is_finite() && n_receptors > 0.0) {
        return Err(Error::param("n_receptors", "must be positive and finite"));
    }
    Ok(200.0 / n_receptors.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweptParam {
    /// Field strength in gauss, magnetic mode.
    B,
    /// Heading in radians, angular mode.
    Phi,
    /// Exchange coupling in gauss, magnetic mode.
    J,
}

impl SweptParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweptParam::B => "B",
            SweptParam::Phi => "phi",
            SweptParam::J => "J",
        }
    }

    pub fn field_mode(self) -> FieldMode {
        match self {
            SweptParam::Phi => FieldMode::Angular,
            SweptParam::B | SweptParam::J => FieldMode::Magnetic,
        }
    }

    fn apply(self, base: &SystemParams, value: f64) -> SystemParams {
        match self {
            SweptParam::B => base.with_b(value),
            SweptParam::Phi => base.with_phi(value),
            SweptParam::J => base.with_j(value),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub swept: SweptParam,
    pub values: Vec<f64>,
    pub yields: Vec<f64>,
    pub results: Vec<YieldResult>,
    pub regime_tag: String,
    pub fixed: SystemParams,
}

fn run_in_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidSweep(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn yields_for(points: &[SystemParams], mode: FieldMode, config: &PropagationConfig, jobs: usize) -> Result<Vec<Result<YieldResult>>> {
    run_in_pool(jobs, || {
        points
            .par_iter()
            .map(|p| propagate(p, mode, config).map(|r| triplet_yield(&r)))
            .collect()
    })
}

/// Triplet yield over a grid of one parameter; results keep grid order.
/// `jobs = 0` uses all available cores.
pub fn yield_sweep(
    base: &SystemParams,
    swept: SweptParam,
    values: &[f64],
    regime_tag: &str,
    config: &PropagationConfig,
    jobs: usize,
) -> Result<SweepResult> {
    if values.is_empty() {
        return Err(Error::InvalidSweep("empty grid".into()));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidSweep(format!("non-finite grid value {v}")));
    }
    base.validate()?;
    config.validate()?;
    let points: Vec<SystemParams> = values.iter().map(|&v| swept.apply(base, v)).collect();
    let results = yields_for(&points, swept.field_mode(), config, jobs)?
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        swept,
        values: values.to_vec(),
        yields: results.iter().map(|r| r.y_t).collect(),
        results,
        regime_tag: regime_tag.to_string(),
        fixed: *base,
    })
}

/// Outcome of a precision estimate.
#[derive(Debug, Clone, PartialEq)]
pub enum Resolution {
    Resolved(f64),
    /// `|dY_T/dB|` is below `δY_T/10`.
    Unmeasurable,
    /// The heading swing is below `δY_T`.
    Lost,
    Failed(String),
}

impl Resolution {
    pub fn value(&self) -> Option<f64> {
        match self {
            Resolution::Resolved(v) => Some(*v),
            _ => None,
        }
    }

    /// Numeric column value: the precision, `+inf` for the two sentinels,
    /// NaN on failure.
    pub fn as_f64(&self) -> f64 {
        match self {
            Resolution::Resolved(v) => *v,
            Resolution::Unmeasurable | Resolution::Lost => f64::INFINITY,
            Resolution::Failed(_) => f64::NAN,
        }
    }

    pub fn status(&self) -> &str {
        match self {
            Resolution::Resolved(_) => "ok",
            Resolution::Unmeasurable => "unmeasurable",
            Resolution::Lost => "lost",
            Resolution::Failed(_) => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MagneticPrecision {
    /// `dY_T/dB` in percent per gauss.
    pub slope: f64,
    /// Slope from a difference of half the width, when the grid has it.
    pub slope_half_step: Option<f64>,
    pub y_t_at_field: Option<f64>,
    pub delta_b: Resolution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AngularPrecision {
    pub y_min: f64,
    pub y_max: f64,
    pub swing: f64,
    pub mean_y: f64,
    /// Degrees.
    pub delta_phi: Resolution,
}

fn check_delta_y(delta_y: f64) -> Result<()> {
    if delta_y.is_finite() && delta_y > 0.0 {
        Ok(())
    } else {
        Err(Error::param("delta_y", "must be positive and finite"))
    }
}

fn find_value(values: &[f64], x: f64) -> Option<usize> {
    values.iter().position(|v| (v - x).abs() < 1e-9)
}

/// Magnetic precision `δB = δY_T / |dY_T/dB|` at 0.5 G.
///
/// Uses the grid points at `0.5 ± 0.02 G` when present, otherwise the
/// nearest neighbours that bracket 0.5 G.
pub fn magnetic_precision(sweep: &SweepResult, delta_y: f64) -> Result<MagneticPrecision> {
    check_delta_y(delta_y)?;
    if sweep.swept != SweptParam::B {
        return Err(Error::InvalidSweep(format!("expected a B sweep, got {}", sweep.swept.as_str())));
    }
    let b = &sweep.values;
    let y = &sweep.yields;
    if b.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidSweep("B grid must be strictly increasing".into()));
    }
    let (lo, hi) = (b[0], b[b.len() - 1]);
    if !(lo < GEOMAGNETIC_FIELD && hi > GEOMAGNETIC_FIELD) {
        return Err(Error::NotBracketed { name: "B", target: GEOMAGNETIC_FIELD, lo, hi });
    }
    let secant = |i: usize, j: usize| (y[j] - y[i]) / (b[j] - b[i]);

    let wide = find_value(b, GEOMAGNETIC_FIELD - FIELD_STEP).zip(find_value(b, GEOMAGNETIC_FIELD + FIELD_STEP));
    let half = find_value(b, GEOMAGNETIC_FIELD - FIELD_STEP / 2.0)
        .zip(find_value(b, GEOMAGNETIC_FIELD + FIELD_STEP / 2.0));
    let centre = find_value(b, GEOMAGNETIC_FIELD);
    let (slope, slope_half_step) = match wide {
        Some((i, j)) => (secant(i, j), half.map(|(i, j)| secant(i, j))),
        None => {
            let (i, j) = match centre {
                Some(c) => (c - 1, c + 1),
                None => {
                    let j = b.iter().position(|&v| v > GEOMAGNETIC_FIELD).expect("bracketed");
                    (j - 1, j)
                }
            };
            if b[j] - b[i] > 2.0 * MAX_FIELD_SPACING + 1e-12 {
                return Err(Error::InvalidSweep(format!(
                    "B grid spacing around {GEOMAGNETIC_FIELD} G exceeds {MAX_FIELD_SPACING} G"
                )));
            }
            (secant(i, j), None)
        }
    };
    let delta_b = if !slope.is_finite() {
        Resolution::Failed("non-finite slope".into())
    } else if slope.abs() < delta_y / 10.0 {
        Resolution::Unmeasurable
    } else {
        Resolution::Resolved(delta_y / slope.abs())
    };
    Ok(MagneticPrecision { slope, slope_half_step, y_t_at_field: centre.map(|c| y[c]), delta_b })
}

/// Angular precision `δφ = δY_T / (swing / 90°)` in degrees, from a heading
/// sweep covering `[0°, 180°)`.
pub fn angular_precision(sweep: &SweepResult, delta_y: f64) -> Result<AngularPrecision> {
    check_delta_y(delta_y)?;
    if sweep.swept != SweptParam::Phi {
        return Err(Error::InvalidSweep(format!("expected a phi sweep, got {}", sweep.swept.as_str())));
    }
    let deg: Vec<f64> = sweep.values.iter().map(|v| v.to_degrees()).collect();
    let tol = 1e-6;
    if deg.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidSweep("phi grid must be strictly increasing".into()));
    }
    let spacing_ok = deg.windows(2).all(|w| w[1] - w[0] <= MAX_ANGLE_SPACING_DEG + tol);
    let covers = deg[0] <= tol && deg[deg.len() - 1] >= 180.0 - MAX_ANGLE_SPACING_DEG - tol;
    if !(spacing_ok && covers) {
        return Err(Error::InvalidSweep(format!(
            "phi grid must cover [0, 180) degrees with spacing at most {MAX_ANGLE_SPACING_DEG} degrees"
        )));
    }
    let y = &sweep.yields;
    let y_min = y.iter().copied().fold(f64::INFINITY, f64::min);
    let y_max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let swing = y_max - y_min;
    let delta_phi = if swing < delta_y {
        Resolution::Lost
    } else {
        Resolution::Resolved(delta_y * 90.0 / swing)
    };
    Ok(AngularPrecision {
        y_min,
        y_max,
        swing,
        mean_y: y.iter().sum::<f64>() / y.len() as f64,
        delta_phi,
    })
}

/// Heading grid `0, step, 2·step, …` below 180°, in radians.
pub fn heading_grid(step_deg: f64) -> Vec<f64> {
    let n = (180.0 / step_deg - 1e-9).ceil() as usize;
    (0..n).map(|i| (i as f64 * step_deg).to_radians()).collect()
}

/// Field grid `0.5 G ± {0.01, 0.02} G`.
pub fn field_grid() -> Vec<f64> {
    [-FIELD_STEP, -FIELD_STEP / 2.0, 0.0, FIELD_STEP / 2.0, FIELD_STEP]
        .iter()
        .map(|d| GEOMAGNETIC_FIELD + d)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrecisionKind {
    Magnetic,
    Angular,
    Both,
}

impl PrecisionKind {
    fn magnetic(self) -> bool {
        matches!(self, PrecisionKind::Magnetic | PrecisionKind::Both)
    }

    fn angular(self) -> bool {
        matches!(self, PrecisionKind::Angular | PrecisionKind::Both)
    }
}

#[derive(Debug, Clone)]
pub struct PrecisionOptions {
    pub kind: PrecisionKind,
    pub delta_y: f64,
    pub angle_step_deg: f64,
    pub propagation: PropagationConfig,
    pub jobs: usize,
}

impl Default for PrecisionOptions {
    fn default() -> Self {
        PrecisionOptions {
            kind: PrecisionKind::Both,
            delta_y: 0.05,
            angle_step_deg: ANGLE_STEP_DEG,
            propagation: PropagationConfig::default(),
            jobs: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PrecisionResult {
    pub j: f64,
    pub regime_tag: String,
    pub delta_y: f64,
    pub magnetic: Option<MagneticPrecision>,
    pub angular: Option<AngularPrecision>,
    pub magnetic_sweep: Option<SweepResult>,
    pub angular_sweep: Option<SweepResult>,
    /// Set when a trajectory or the precision evaluation failed.
    pub error: Option<String>,
}

impl PrecisionResult {
    pub fn delta_b(&self) -> Resolution {
        self.magnetic.as_ref().map_or_else(
            || Resolution::Failed(self.error.clone().unwrap_or_else(|| "not computed".into())),
            |m| m.delta_b.clone(),
        )
    }

    pub fn delta_phi(&self) -> Resolution {
        self.angular.as_ref().map_or_else(
            || Resolution::Failed(self.error.clone().unwrap_or_else(|| "not computed".into())),
            |a| a.delta_phi.clone(),
        )
    }
}

/// Precision as a function of the exchange coupling. A failure at one `J`
/// is recorded in that point's result and does not abort the others.
pub fn precision_vs_exchange(
    base: &SystemParams,
    regime: Regime,
    j_values: &[f64],
    options: &PrecisionOptions,
) -> Result<Vec<PrecisionResult>> {
    check_delta_y(options.delta_y)?;
    if j_values.is_empty() {
        return Err(Error::InvalidSweep("j_values is empty".into()));
    }
    if j_values.iter().any(|j| !(j.is_finite() && *j >= 0.0)) {
        return Err(Error::param("j_gauss", "exchange couplings must be finite and non-negative"));
    }
    if !(options.angle_step_deg > 0.0 && options.angle_step_deg <= MAX_ANGLE_SPACING_DEG) {
        return Err(Error::param("angle_step_deg", "must be in (0, 5] degrees"));
    }
    options.propagation.validate()?;
    let base = base.with_regime(regime);
    base.validate()?;

    let b_grid = field_grid();
    let phi_grid = heading_grid(options.angle_step_deg);
    let mut jobs_list: Vec<(SystemParams, FieldMode)> = Vec::new();
    for &j in j_values {
        let p = base.with_j(j);
        if options.kind.magnetic() {
            jobs_list.extend(b_grid.iter().map(|&b| (p.with_b(b), FieldMode::Magnetic)));
        }
        if options.kind.angular() {
            jobs_list.extend(phi_grid.iter().map(|&phi| (p.with_phi(phi), FieldMode::Angular)));
        }
    }
    let config = &options.propagation;
    let all: Vec<Result<YieldResult>> = run_in_pool(options.jobs, || {
        jobs_list
            .par_iter()
            .map(|(p, mode)| propagate(p, *mode, config).map(|r| triplet_yield(&r)))
            .collect()
    })?;

    let tag = regime.tag();
    let mut it = all.into_iter();
    let mut out = Vec::with_capacity(j_values.len());
    for &j in j_values {
        let p = base.with_j(j);
        let mut take = |swept: SweptParam, grid: &[f64]| -> Result<SweepResult> {
            let results = it.by_ref().take(grid.len()).collect::<Result<Vec<_>>>()?;
            Ok(SweepResult {
                swept,
                values: grid.to_vec(),
                yields: results.iter().map(|r| r.y_t).collect(),
                results,
                regime_tag: tag.to_string(),
                fixed: p,
            })
        };
        let mut result = PrecisionResult {
            j,
            regime_tag: tag.to_string(),
            delta_y: options.delta_y,
            magnetic: None,
            angular: None,
            magnetic_sweep: None,
            angular_sweep: None,
            error: None,
        };
        let mut errors = Vec::new();
        if options.kind.magnetic() {
            match take(SweptParam::B, &b_grid) {
                Ok(s) => {
                    match magnetic_precision(&s, options.delta_y) {
                        Ok(m) => result.magnetic = Some(m),
                        Err(e) => errors.push(e.to_string()),
                    }
                    result.magnetic_sweep = Some(s);
                }
                Err(e) => errors.push(e.to_string()),
            }
        }
        if options.kind.angular() {
            match take(SweptParam::Phi, &phi_grid) {
                Ok(s) => {
                    match angular_precision(&s, options.delta_y) {
                        Ok(a) => result.angular = Some(a),
                        Err(e) => errors.push(e.to_string()),
                    }
                    result.angular_sweep = Some(s);
                }
                Err(e) => errors.push(e.to_string()),
            }
        }
        if !errors.is_empty() {
            result.error = Some(errors.join("; "));
        }
        out.push(result);
    }
    Ok(out)
}
