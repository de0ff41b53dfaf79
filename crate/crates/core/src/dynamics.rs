//! Density-matrix propagation under the recombination master equation
//!
//! `dρ/dt = −i[H, ρ] − k (Q_S ρ + ρ Q_S − 2 Q_S ρ Q_S)`, `k = k_S + k_T`,
//!
//! together with the surviving population `N(t)` driven by the hazards
//! `2 k_S ⟨Q_S⟩` and `2 k_T ⟨Q_T⟩`.

use nalgebra::{DMatrix, DVector, SMatrix, SVector};

use crate::eigen;
use crate::error::{Error, Result};
use crate::params::{FieldMode, SystemParams};
use crate::spectral::{superoperator_matrix, unvectorize, vectorize};
use crate::spin::{Op8, SpinOperator, h_magnetic_total_with, singlet_projector};
use crate::{C64, DIM, LIOUVILLE_DIM};

/// Largest tolerated change of `Tr ρ` over a single step.
pub const STEP_TRACE_TOLERANCE: f64 = 1e-6;

/// Eigenvector condition number above which spectral propagation falls back
/// to RK4.
pub const SPECTRAL_CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub matrix: Op8,
}

impl DensityMatrix {
    pub fn new(matrix: Op8) -> Self {
        DensityMatrix { matrix }
    }

    /// `Q_S / 2`: the electron pair in the singlet, nucleus unpolarized.
    pub fn singlet() -> Self {
        DensityMatrix::new(singlet_projector() * C64::from(0.5))
    }

    /// Checks the dimension of a dynamically sized matrix.
    pub fn try_from_dmatrix(m: &DMatrix<C64>) -> Result<Self> {
        if m.nrows() != DIM || m.ncols() != DIM {
            return Err(Error::DimensionMismatch {
                expected: DIM,
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        Ok(DensityMatrix::new(Op8::from_fn(|r, c| m[(r, c)])))
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn purity(&self) -> f64 {
        (self.matrix * self.matrix).trace().re
    }

    /// `Tr(O ρ)`, real part.
    pub fn expectation(&self, op: &Op8) -> f64 {
        (op * self.matrix).trace().re
    }

    pub fn hermitized(&self) -> Self {
        DensityMatrix::new((self.matrix + self.matrix.adjoint()) * C64::from(0.5))
    }

    pub fn hermiticity_error(&self) -> f64 {
        (self.matrix - self.matrix.adjoint()).camax()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.hermitized()
            .matrix
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

fn measurement_term(rho: &Op8, qs: &Op8) -> Op8 {
    let qr = qs * rho;
    let rq = rho * qs;
    qr + rq - qr * qs * C64::from(2.0)
}

/// Right-hand side of the master equation.
pub fn liouville_rhs(rho: &DensityMatrix, h: &SpinOperator, k_s: f64, k_t: f64) -> Op8 {
    let qs = singlet_projector();
    let unitary = (h.matrix * rho.matrix - rho.matrix * h.matrix) * C64::new(0.0, -1.0);
    if k_s + k_t == 0.0 {
        return unitary;
    }
    unitary - measurement_term(&rho.matrix, &qs) * C64::from(k_s + k_t)
}

/// Dynamically sized variant of [`liouville_rhs`].
pub fn liouville_rhs_dyn(
    rho: &DMatrix<C64>,
    h: &DMatrix<C64>,
    k_s: f64,
    k_t: f64,
) -> Result<DMatrix<C64>> {
    let rho = DensityMatrix::try_from_dmatrix(rho)?;
    let h = DensityMatrix::try_from_dmatrix(h)?;
    let d = liouville_rhs(&rho, &SpinOperator::new(h.matrix, "H"), k_s, k_t);
    Ok(DMatrix::from_fn(DIM, DIM, |r, c| d[(r, c)]))
}

/// One classical fourth-order Runge-Kutta step, re-Hermitized.
pub fn step_rk4(
    rho: &DensityMatrix,
    h: &SpinOperator,
    k_s: f64,
    k_t: f64,
    dt: f64,
) -> Result<DensityMatrix> {
    let f = |m: &Op8| liouville_rhs(&DensityMatrix::new(*m), h, k_s, k_t);
    let half = C64::from(0.5 * dt);
    let full = C64::from(dt);
    let r0 = rho.matrix;
    let k1 = f(&r0);
    let k2 = f(&(r0 + k1 * half));
    let k3 = f(&(r0 + k2 * half));
    let k4 = f(&(r0 + k3 * full));
    let next = r0 + (k1 + k2 * C64::from(2.0) + k3 * C64::from(2.0) + k4) * C64::from(dt / 6.0);
    let out = DensityMatrix::new(next).hermitized();
    let deviation = (out.trace() - rho.trace()).abs();
    if !(deviation <= STEP_TRACE_TOLERANCE) {
        return Err(Error::IntegratorFailure { dt, deviation });
    }
    Ok(out)
}

/// Precomputed RK4 step for the vectorized equation.
///
/// For the time-independent linear system `ẋ = M x` one RK4 step is exactly
/// `x ← (1 + hM + (hM)²/2 + (hM)³/6 + (hM)⁴/24) x`, so the polynomial is
/// formed once and every step costs a single matrix-vector product.
#[derive(Debug, Clone)]
pub struct Rk4Propagator {
    step: DMatrix<C64>,
    dt: f64,
}

impl Rk4Propagator {
    pub fn new(generator: &DMatrix<C64>, dt: f64) -> Self {
        let n = generator.nrows();
        let hm = generator * C64::from(dt);
        let mut term = DMatrix::<C64>::identity(n, n);
        let mut step = term.clone();
        for order in 1..=4 {
            term = &term * &hm * C64::from(1.0 / order as f64);
            step += &term;
        }
        Rk4Propagator { step, dt }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances `state` in place; `scratch` must have the same length.
    pub fn apply(&self, state: &mut DVector<C64>, scratch: &mut DVector<C64>) {
        self.step.mul_to(state, scratch);
        std::mem::swap(state, scratch);
    }

    /// One step on a density matrix, with re-Hermitization and the trace
    /// check of [`step_rk4`].
    pub fn step_vectorized(&self, state: &mut DVector<C64>, scratch: &mut DVector<C64>) -> Result<()> {
        let before = vec_trace(state);
        self.apply(state, scratch);
        hermitize_vec(state);
        let deviation = (vec_trace(state) - before).abs();
        if !(deviation <= STEP_TRACE_TOLERANCE) {
            return Err(Error::IntegratorFailure {
                dt: self.dt,
                deviation,
            });
        }
        Ok(())
    }
}

/// Real coordinates of a Hermitian matrix, indexed like its row-major
/// vectorization: `ρ_ii` on the diagonal, `Re ρ_ij` above it and
/// `Im ρ_ji` below it.
pub type HermCoords = SVector<f64, LIOUVILLE_DIM>;

pub fn to_coords(rho: &Op8) -> HermCoords {
    HermCoords::from_fn(|idx, _| {
        let (i, j) = (idx / DIM, idx % DIM);
        if i <= j { rho[(i, j)].re } else { rho[(j, i)].im }
    })
}

pub fn from_coords(x: &HermCoords) -> Op8 {
    Op8::from_fn(|i, j| match i.cmp(&j) {
        std::cmp::Ordering::Equal => C64::from(x[i * DIM + i]),
        std::cmp::Ordering::Less => C64::new(x[i * DIM + j], x[j * DIM + i]),
        std::cmp::Ordering::Greater => C64::new(x[j * DIM + i], -x[i * DIM + j]),
    })
}

/// Hermitian matrix whose coordinate `idx` is 1 and all others 0.
fn coord_basis(idx: usize) -> Op8 {
    let (i, j) = (idx / DIM, idx % DIM);
    let mut e = Op8::zeros();
    match i.cmp(&j) {
        std::cmp::Ordering::Equal => e[(i, i)] = C64::from(1.0),
        std::cmp::Ordering::Less => {
            e[(i, j)] = C64::from(1.0);
            e[(j, i)] = C64::from(1.0);
        }
        std::cmp::Ordering::Greater => {
            e[(j, i)] = C64::i();
            e[(i, j)] = -C64::i();
        }
    }
    e
}

/// [`Rk4Propagator`] restricted to Hermitian matrices, where it acts as a
/// real 64×64 map.
pub struct HermitianRk4 {
    step: Box<SMatrix<f64, LIOUVILLE_DIM, LIOUVILLE_DIM>>,
    dt: f64,
}

impl HermitianRk4 {
    pub fn new(prop: &Rk4Propagator) -> Self {
        let mut step = Box::new(SMatrix::<f64, LIOUVILLE_DIM, LIOUVILLE_DIM>::zeros());
        let mut scratch = DVector::zeros(LIOUVILLE_DIM);
        for m in 0..LIOUVILLE_DIM {
            let mut v = vectorize(&coord_basis(m));
            prop.apply(&mut v, &mut scratch);
            step.set_column(m, &to_coords(&unvectorize(&v)));
        }
        HermitianRk4 { step, dt: prop.dt }
    }

    /// Advances `x` in place with the trace check of [`step_rk4`].
    pub fn step(&self, x: &mut HermCoords, scratch: &mut HermCoords) -> Result<()> {
        let before = coords_trace(x);
        self.step.mul_to(x, scratch);
        std::mem::swap(x, scratch);
        let deviation = (coords_trace(x) - before).abs();
        if !(deviation <= STEP_TRACE_TOLERANCE) {
            return Err(Error::IntegratorFailure { dt: self.dt, deviation });
        }
        Ok(())
    }
}

pub fn coords_trace(x: &HermCoords) -> f64 {
    (0..DIM).map(|i| x[i * DIM + i]).sum()
}

/// Weights `w` with `Tr(O ρ) = w·x` for Hermitian `O`.
pub fn coord_weights(op: &Op8) -> HermCoords {
    HermCoords::from_fn(|m, _| (op * coord_basis(m)).trace().re)
}

fn vec_trace(v: &DVector<C64>) -> f64 {
    (0..DIM).map(|i| v[i * DIM + i].re).sum()
}

fn hermitize_vec(v: &mut DVector<C64>) {
    for i in 0..DIM {
        v[i * DIM + i].im = 0.0;
        for j in (i + 1)..DIM {
            let a = v[i * DIM + j];
            let b = v[j * DIM + i];
            let m = (a + b.conj()) * 0.5;
            v[i * DIM + j] = m;
            v[j * DIM + i] = m.conj();
        }
    }
}

/// Weights `w` with `Tr(O ρ) = Re Σ w·vec(ρ)`.
pub(crate) fn expectation_weights(op: &Op8) -> DVector<C64> {
    DVector::from_fn(LIOUVILLE_DIM, |idx, _| {
        let (i, j) = (idx / DIM, idx % DIM);
        op[(j, i)]
    })
}

/// Which propagator produced a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Propagator {
    Rk4,
    Spectral,
}

/// Settings shared by both propagators.
#[derive(Debug, Clone)]
pub struct PropagationConfig {
    /// Initial number of radical pairs.
    pub n0: f64,
    /// Stop once `N/N0` falls to this fraction.
    pub termination_fraction: f64,
    /// Time step override, μs.
    pub dt: Option<f64>,
    /// Hard time cap override, μs.
    pub hard_cap: Option<f64>,
    /// Stored samples are decimated to stay at or below this count.
    pub max_samples: usize,
    pub store_states: bool,
    /// Additional Hermitian term added to the magnetic Hamiltonian.
    pub extra_hamiltonian: Option<SpinOperator>,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        PropagationConfig {
            n0: 1e10,
            termination_fraction: 5e-4,
            dt: None,
            hard_cap: None,
            max_samples: 20_000,
            store_states: false,
            extra_hamiltonian: None,
        }
    }
}

impl PropagationConfig {
    /// Keeps every integration step in the record.
    pub fn undecimated(mut self) -> Self {
        self.max_samples = usize::MAX;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = Some(dt);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n0 > 0.0 && self.n0.is_finite()) {
            return Err(Error::param("n0", format!("must be > 0, got {}", self.n0)));
        }
        let f = self.termination_fraction;
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::param(
                "termination_fraction",
                format!("must lie in (0, 1), got {f}"),
            ));
        }
        if let Some(dt) = self.dt
            && !(dt > 0.0 && dt.is_finite())
        {
            return Err(Error::param("dt", format!("must be > 0, got {dt}")));
        }
        if let Some(cap) = self.hard_cap
            && !(cap > 0.0)
        {
            return Err(Error::param("hard_cap", format!("must be > 0, got {cap}")));
        }
        if self.max_samples < 2 {
            return Err(Error::param("max_samples", "must be >= 2"));
        }
        Ok(())
    }

    pub fn resolved_dt(&self, params: &SystemParams) -> f64 {
        self.dt.unwrap_or_else(|| default_dt(params))
    }

    pub fn resolved_hard_cap(&self, params: &SystemParams) -> f64 {
        self.hard_cap.unwrap_or_else(|| default_hard_cap(params))
    }
}

/// `0.01 / f_max` with `f_max = max(γB, γa, γ|J|, k_S + k_T)`: at least 100
/// steps per period of the fastest scale.
pub fn default_dt(params: &SystemParams) -> f64 {
    let g = params.gamma;
    let fmax = [
        g * params.b_gauss,
        g * params.a_gauss,
        g * params.j_gauss.abs(),
        params.total_rate(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    0.01 / fmax
}

/// `10⁴ / (k_S + k_T)`.
pub fn default_hard_cap(params: &SystemParams) -> f64 {
    1e4 / params.total_rate()
}

/// Time series of one propagation.
///
/// Samples are decimated by `stride` integration steps; the final sample
/// is always the last integration step. Cumulative quantities were
/// accumulated at full step resolution.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub params: SystemParams,
    pub mode: FieldMode,
    pub method: Propagator,
    pub n0: f64,
    pub termination_fraction: f64,
    /// Integration step, μs.
    pub dt: f64,
    /// Integration steps between stored samples.
    pub stride: usize,
    pub times: Vec<f64>,
    pub qs_expect: Vec<f64>,
    pub qt_expect: Vec<f64>,
    /// `N(t)`.
    pub population: Vec<f64>,
    /// `2 k_S ⟨Q_S⟩ dt` at each sample.
    pub dp_s: Vec<f64>,
    /// `2 k_T ⟨Q_T⟩ dt` at each sample.
    pub dp_t: Vec<f64>,
    /// `∫ 2 k_S ⟨Q_S⟩ dt` from 0 to the sample time.
    pub hazard_s: Vec<f64>,
    /// `∫ 2 k_T ⟨Q_T⟩ dt` from 0 to the sample time.
    pub hazard_t: Vec<f64>,
    /// Pairs recombined through the singlet channel so far.
    pub recombined_s: Vec<f64>,
    /// Pairs recombined through the triplet channel so far.
    pub recombined_t: Vec<f64>,
    /// `Tr ρ` at each sample.
    pub trace: Vec<f64>,
    pub states: Option<Vec<Op8>>,
    pub terminated: bool,
    pub hard_cap_hit: bool,
    /// Time at which `N/N0` crossed the termination fraction, μs.
    pub reaction_time: Option<f64>,
    pub warnings: Vec<String>,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_population(&self) -> f64 {
        *self.population.last().expect("record has at least one sample")
    }

    pub fn unreacted_fraction(&self) -> f64 {
        self.final_population() / self.n0
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().expect("record has at least one sample")
    }
}

/// Population bookkeeping shared by the two propagators.
///
/// Per step the hazard is integrated with the trapezoidal rule,
/// `Δ = (h(tₙ) + h(tₙ₊₁)) dt / 2`; the population decays by `exp(−Δ)` and
/// the recombined pairs are split between channels in proportion to their
/// share of `Δ`.
struct Accumulator {
    record: TrajectoryRecord,
    k_s: f64,
    k_t: f64,
    step: usize,
    t: f64,
    n: f64,
    hazard: (f64, f64),
    integrated: (f64, f64),
    recombined: (f64, f64),
    max_samples: usize,
    last_sample_step: usize,
}

impl Accumulator {
    fn new(
        params: &SystemParams,
        mode: FieldMode,
        method: Propagator,
        config: &PropagationConfig,
        dt: f64,
        qs: f64,
        trace: f64,
        state: Option<Op8>,
    ) -> Self {
        let record = TrajectoryRecord {
            params: *params,
            mode,
            method,
            n0: config.n0,
            termination_fraction: config.termination_fraction,
            dt,
            stride: 1,
            times: Vec::new(),
            qs_expect: Vec::new(),
            qt_expect: Vec::new(),
            population: Vec::new(),
            dp_s: Vec::new(),
            dp_t: Vec::new(),
            hazard_s: Vec::new(),
            hazard_t: Vec::new(),
            recombined_s: Vec::new(),
            recombined_t: Vec::new(),
            trace: Vec::new(),
            states: config.store_states.then(Vec::new),
            terminated: false,
            hard_cap_hit: false,
            reaction_time: None,
            warnings: Vec::new(),
        };
        let mut acc = Accumulator {
            record,
            k_s: params.k_s,
            k_t: params.k_t,
            step: 0,
            t: 0.0,
            n: config.n0,
            hazard: (0.0, 0.0),
            integrated: (0.0, 0.0),
            recombined: (0.0, 0.0),
            max_samples: config.max_samples,
            last_sample_step: 0,
        };
        acc.hazard = acc.hazards(qs, trace);
        acc.push_sample(qs, trace, state);
        acc
    }

    fn hazards(&self, qs: f64, trace: f64) -> (f64, f64) {
        (2.0 * self.k_s * qs, 2.0 * self.k_t * (trace - qs))
    }

    fn push_sample(&mut self, qs: f64, trace: f64, state: Option<Op8>) {
        let dt = self.record.dt;
        let r = &mut self.record;
        r.times.push(self.t);
        r.qs_expect.push(qs);
        r.qt_expect.push(trace - qs);
        r.population.push(self.n);
        r.dp_s.push(self.hazard.0 * dt);
        r.dp_t.push(self.hazard.1 * dt);
        r.hazard_s.push(self.integrated.0);
        r.hazard_t.push(self.integrated.1);
        r.recombined_s.push(self.recombined.0);
        r.recombined_t.push(self.recombined.1);
        r.trace.push(trace);
        if let (Some(states), Some(s)) = (r.states.as_mut(), state) {
            states.push(s);
        }
        self.last_sample_step = self.step;
        if r.times.len() > self.max_samples {
            self.decimate();
        }
    }

    fn decimate(&mut self) {
        fn keep_even<T: Copy>(v: &mut Vec<T>) {
            let mut i = 0;
            v.retain(|_| {
                let keep = i % 2 == 0;
                i += 1;
                keep
            });
        }
        let r = &mut self.record;
        for v in [
            &mut r.times,
            &mut r.qs_expect,
            &mut r.qt_expect,
            &mut r.population,
            &mut r.dp_s,
            &mut r.dp_t,
            &mut r.hazard_s,
            &mut r.hazard_t,
            &mut r.recombined_s,
            &mut r.recombined_t,
            &mut r.trace,
        ] {
            keep_even(v);
        }
        if let Some(states) = r.states.as_mut() {
            keep_even(states);
        }
        r.stride *= 2;
    }

    /// Whether the caller needs the state for the upcoming step's sample.
    fn wants_state(&self) -> bool {
        self.record.states.is_some()
    }

    /// Records one integration step ending in `(qs, trace)`. Returns true
    /// once the population reached the termination fraction.
    fn advance(&mut self, qs: f64, trace: f64, state: Option<Op8>) -> bool {
        let dt = self.record.dt;
        let next = self.hazards(qs, trace);
        let d_s = 0.5 * (self.hazard.0 + next.0) * dt;
        let d_t = 0.5 * (self.hazard.1 + next.1) * dt;
        let d = d_s + d_t;
        let n_prev = self.n;
        if d > 0.0 {
            let reacted = n_prev * -(-d).exp_m1();
            self.recombined.0 += reacted * d_s / d;
            self.recombined.1 += reacted * d_t / d;
            self.n = n_prev * (-d).exp();
        }
        self.integrated.0 += d_s;
        self.integrated.1 += d_t;
        self.hazard = next;
        self.step += 1;
        let t_prev = self.t;
        self.t = self.step as f64 * dt;

        let threshold = self.record.termination_fraction * self.record.n0;
        let done = self.n <= threshold;
        if done {
            // N decays exponentially within the step
            let frac = if d > 0.0 {
                ((n_prev / threshold).ln() / d).clamp(0.0, 1.0)
            } else {
                1.0
            };
            self.record.reaction_time = Some(t_prev + frac * dt);
            self.record.terminated = true;
        }
        if done || self.step.is_multiple_of(self.record.stride) {
            self.push_sample(qs, trace, state);
        }
        done
    }

    fn finish(mut self, qs: f64, trace: f64, state: Option<Op8>) -> TrajectoryRecord {
        if self.last_sample_step != self.step {
            self.push_sample(qs, trace, state);
        }
        self.record
    }
}

fn hamiltonian(params: &SystemParams, mode: FieldMode, config: &PropagationConfig) -> SpinOperator {
    h_magnetic_total_with(params, mode, config.extra_hamiltonian.as_ref())
}

/// Integrates from `ρ(0) = Q_S/2` until `N/N0` reaches the termination
/// fraction or the hard cap is hit.
pub fn propagate(
    params: &SystemParams,
    mode: FieldMode,
    config: &PropagationConfig,
) -> Result<TrajectoryRecord> {
    params.validate()?;
    config.validate()?;
    let dt = config.resolved_dt(params);
    let cap = config.resolved_hard_cap(params);
    let h = hamiltonian(params, mode, config);
    let generator = superoperator_matrix(&h.matrix, params.total_rate());
    let prop = HermitianRk4::new(&Rk4Propagator::new(&generator, dt));
    let weights = coord_weights(&singlet_projector());

    let mut state = to_coords(&DensityMatrix::singlet().matrix);
    let mut scratch = state;
    let snapshot = |x: &HermCoords| from_coords(x);
    let qs0 = weights.dot(&state);
    let mut acc = Accumulator::new(
        params,
        mode,
        Propagator::Rk4,
        config,
        dt,
        qs0,
        coords_trace(&state),
        config.store_states.then(|| snapshot(&state)),
    );

    let max_steps = (cap / dt).ceil() as usize;
    let (mut qs, mut trace) = (qs0, coords_trace(&state));
    loop {
        if acc.step >= max_steps {
            acc.record.hard_cap_hit = true;
            acc.record.warnings.push(format!(
                "hard cap of {cap} us reached before N/N0 <= {}",
                config.termination_fraction
            ));
            break;
        }
        prop.step(&mut state, &mut scratch)?;
        qs = weights.dot(&state);
        trace = coords_trace(&state);
        let s = acc.wants_state().then(|| snapshot(&state));
        if acc.advance(qs, trace, s) {
            break;
        }
    }
    let s = config.store_states.then(|| snapshot(&state));
    Ok(acc.finish(qs, trace, s))
}

/// Same contract as [`propagate`], but evaluates `ρ(t)` from the
/// eigendecomposition of the superoperator: `vec ρ(t) = V e^{Λt} V⁻¹ vec ρ(0)`.
///
/// Falls back to [`propagate`] (with a warning in the record) when the
/// eigenvector matrix is singular or its condition number exceeds
/// [`SPECTRAL_CONDITION_LIMIT`].
pub fn propagate_spectral(
    params: &SystemParams,
    mode: FieldMode,
    config: &PropagationConfig,
) -> Result<TrajectoryRecord> {
    params.validate()?;
    config.validate()?;
    let h = hamiltonian(params, mode, config);
    let generator = superoperator_matrix(&h.matrix, params.total_rate());

    let fallback = |reason: String| -> Result<TrajectoryRecord> {
        let mut rec = propagate(params, mode, config)?;
        rec.warnings.push(format!("spectral propagation fell back to RK4: {reason}"));
        Ok(rec)
    };
    let Some(eig) = eigen::eigen(&generator) else {
        return fallback("eigendecomposition did not converge".into());
    };
    let Some((cond, v_inv)) = eigen::condition_number(&eig.vectors) else {
        return fallback("singular eigenvector matrix".into());
    };
    if cond > SPECTRAL_CONDITION_LIMIT {
        return fallback(format!("eigenvector condition number {cond:e}"));
    }

    let dt = config.resolved_dt(params);
    let cap = config.resolved_hard_cap(params);
    let rho0 = vectorize(&DensityMatrix::singlet().matrix);
    let coeffs = &v_inv * &rho0;
    let qs_w = expectation_weights(&singlet_projector());
    let tr_w = expectation_weights(&Op8::identity());
    // per-mode contributions to ⟨Q_S⟩ and Tr ρ
    let qs_amp: Vec<C64> = (0..LIOUVILLE_DIM)
        .map(|m| qs_w.dot(&eig.vectors.column(m)) * coeffs[m])
        .collect();
    let tr_amp: Vec<C64> = (0..LIOUVILLE_DIM)
        .map(|m| tr_w.dot(&eig.vectors.column(m)) * coeffs[m])
        .collect();
    let values = eig.values.clone();
    let eval = |t: f64| -> (f64, f64) {
        let mut qs = 0.0;
        let mut tr = 0.0;
        for m in 0..LIOUVILLE_DIM {
            let e = (values[m] * t).exp();
            qs += (qs_amp[m] * e).re;
            tr += (tr_amp[m] * e).re;
        }
        (qs, tr)
    };
    let state_at = |t: f64| -> Op8 {
        let scaled = DVector::from_fn(LIOUVILLE_DIM, |m, _| coeffs[m] * (values[m] * t).exp());
        let rho = unvectorize(&(&eig.vectors * scaled));
        (rho + rho.adjoint()) * C64::from(0.5)
    };

    let (qs0, tr0) = eval(0.0);
    let mut acc = Accumulator::new(
        params,
        mode,
        Propagator::Spectral,
        config,
        dt,
        qs0,
        tr0,
        config.store_states.then(|| state_at(0.0)),
    );
    let max_steps = (cap / dt).ceil() as usize;
    let (mut qs, mut tr) = (qs0, tr0);
    loop {
        if acc.step >= max_steps {
            acc.record.hard_cap_hit = true;
            acc.record.warnings.push(format!(
                "hard cap of {cap} us reached before N/N0 <= {}",
                config.termination_fraction
            ));
            break;
        }
        let t = (acc.step + 1) as f64 * dt;
        (qs, tr) = eval(t);
        let s = acc.wants_state().then(|| state_at(t));
        if acc.advance(qs, tr, s) {
            break;
        }
    }
    let t_end = acc.step as f64 * dt;
    let s = config.store_states.then(|| state_at(t_end));
    Ok(acc.finish(qs, tr, s))
}
