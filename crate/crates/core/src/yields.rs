//! Reaction yields read off a propagated trajectory.

use crate::dynamics::TrajectoryRecord;
use crate::params::SystemParams;

/// Yields in percent of the initial population.
#[derive(Debug, Clone, PartialEq)]
pub struct YieldResult {
    pub y_t: f64,
    pub y_s: f64,
    /// `100 · N_final / N0`.
    pub unreacted: f64,
    pub terminated: bool,
    pub hard_cap_hit: bool,
    pub reaction_time: Option<f64>,
    pub params: SystemParams,
}

impl YieldResult {
    /// `Y_S + Y_T + unreacted`, which is 100 up to rounding.
    pub fn total(&self) -> f64 {
        self.y_s + self.y_t + self.unreacted
    }
}

/// Triplet and singlet yields of a trajectory.
///
/// The channel counts were accumulated at every integration step with the
/// trapezoidal hazard, so they do not depend on output decimation.
pub fn triplet_yield(record: &TrajectoryRecord) -> YieldResult {
    let last = |v: &[f64]| *v.last().expect("record has at least one sample");
    let scale = 100.0 / record.n0;
    YieldResult {
        y_t: scale * last(&record.recombined_t),
        y_s: scale * last(&record.recombined_s),
        unreacted: scale * record.final_population(),
        terminated: record.terminated,
        hard_cap_hit: record.hard_cap_hit,
        reaction_time: record.reaction_time,
        params: record.params,
    }
}

/// `(100/N0) ∫ 2 k_T ⟨Q_T⟩ N dt` by the trapezoidal rule over the stored
/// samples. Independent of the step-level bookkeeping, used as a cross-check.
pub fn trapezoid_triplet_yield(record: &TrajectoryRecord) -> f64 {
    let f: Vec<f64> = record
        .qt_expect
        .iter()
        .zip(&record.population)
        .map(|(qt, n)| 2.0 * record.params.k_t * qt * n)
        .collect();
    let integral: f64 = record
        .times
        .windows(2)
        .zip(f.windows(2))
        .map(|(t, f)| 0.5 * (f[0] + f[1]) * (t[1] - t[0]))
        .sum();
    100.0 * integral / record.n0
}
