//! Superoperator of the master equation and its eigenmode structure.
//!
//! With row-major vectorization, `vec(AρB) = (A ⊗ Bᵀ) vec(ρ)`, the
//! generator reads
//!
//! `M = −i(H ⊗ 1 − 1 ⊗ Hᵀ) − k[(Q_S ⊗ 1) + (1 ⊗ Q_Sᵀ) − 2(Q_S ⊗ Q_Sᵀ)]`.
//!
//! Its eigenvalues `−λ + iΩ` split, at strong measurement `k ≫ h`, into
//! modes with `λ ∝ k` and slow modes with `λ ∝ h²/k`. Exchange enters the
//! non-Hermitian generator `H_m − ikQ_S` exactly as an imaginary shift of
//! the measurement rate, `k → k − iJγ`, which slows the slow modes further
//! to `λ ∝ h²k/(Jγ)²` once `Jγ ≫ k`.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};

use crate::eigen;
use crate::error::{Error, Result};
use crate::params::{FieldMode, SystemParams};
use crate::spin::{Op8, h_magnetic_total, singlet_projector};
use crate::{C64, DIM, LIOUVILLE_DIM};

/// Decay rates below this are treated as stationary.
pub const STATIONARY_RATE: f64 = 1e-10;

/// Allowed deviation of a fitted log-log slope from ±1.
pub const SCALING_SLOPE_TOLERANCE: f64 = 0.15;

const MAX_REFINEMENT_DEPTH: usize = 6;

/// Decay rates within this relative distance count as one cluster when
/// deciding whether a match is ambiguous.
pub const CLUSTER_RELATIVE_WIDTH: f64 = 0.05;

/// Row-major vectorization descriptor.
pub const VECTORIZATION: &str = "row-major: vec(rho)[8*i + j] = rho[i][j]; vec(A rho B) = (A kron B^T) vec(rho)";

pub fn vectorize(rho: &Op8) -> DVector<C64> {
    DVector::from_fn(LIOUVILLE_DIM, |idx, _| rho[(idx / DIM, idx % DIM)])
}

pub fn unvectorize(v: &DVector<C64>) -> Op8 {
    Op8::from_fn(|i, j| v[i * DIM + j])
}

fn kron(a: &Op8, b: &Op8) -> DMatrix<C64> {
    DMatrix::from_fn(LIOUVILLE_DIM, LIOUVILLE_DIM, |r, c| {
        a[(r / DIM, c / DIM)] * b[(r % DIM, c % DIM)]
    })
}

/// Generator for Hamiltonian `h` and total measurement rate `k`.
pub fn superoperator_matrix(h: &Op8, k: f64) -> DMatrix<C64> {
    let id = Op8::identity();
    let qs = singlet_projector();
    let unitary = (kron(h, &id) - kron(&id, &h.transpose())) * C64::new(0.0, -1.0);
    if k == 0.0 {
        return unitary;
    }
    let qst = qs.transpose();
    let measurement = kron(&qs, &id) + kron(&id, &qst) - kron(&qs, &qst) * C64::from(2.0);
    unitary - measurement * C64::from(k)
}

#[derive(Debug, Clone)]
pub struct Superoperator {
    pub matrix: DMatrix<C64>,
    pub basis_convention: &'static str,
}

impl Superoperator {
    pub fn apply(&self, rho: &Op8) -> Op8 {
        unvectorize(&(&self.matrix * vectorize(rho)))
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }
}

pub fn build_superoperator(params: &SystemParams, mode: FieldMode) -> Result<Superoperator> {
    params.validate()?;
    let h = h_magnetic_total(params, mode);
    Ok(Superoperator {
        matrix: superoperator_matrix(&h.matrix, params.total_rate()),
        basis_convention: VECTORIZATION,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeClass {
    /// `λ ∝ k`.
    MeasurementScaling,
    /// `λ ∝ 1/k`.
    ZenoScaling,
    Unclassified,
}

impl ModeClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ModeClass::MeasurementScaling => "measurement-scaling",
            ModeClass::ZenoScaling => "zeno-scaling",
            ModeClass::Unclassified => "unclassified",
        }
    }

    fn from_slope(slope: f64) -> Self {
        if (slope - 1.0).abs() <= SCALING_SLOPE_TOLERANCE {
            ModeClass::MeasurementScaling
        } else if (slope + 1.0).abs() <= SCALING_SLOPE_TOLERANCE {
            ModeClass::ZenoScaling
        } else {
            ModeClass::Unclassified
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    /// Decay rate, `−Re(eigenvalue)`.
    pub lambda: f64,
    /// Oscillation frequency, `Im(eigenvalue)`.
    pub omega: f64,
    pub class: ModeClass,
}

#[derive(Debug, Clone)]
pub struct ModeSpectrum {
    /// Sorted by `lambda` ascending.
    pub modes: Vec<Mode>,
}

impl ModeSpectrum {
    fn from_values(values: &[C64]) -> Self {
        let mut modes: Vec<Mode> = values
            .iter()
            .map(|z| Mode {
                lambda: -z.re,
                omega: z.im,
                class: ModeClass::Unclassified,
            })
            .collect();
        modes.sort_by(|a, b| {
            a.lambda
                .total_cmp(&b.lambda)
                .then_with(|| a.omega.total_cmp(&b.omega))
        });
        ModeSpectrum { modes }
    }

    pub fn eigenvalues(&self) -> Vec<C64> {
        self.modes.iter().map(|m| C64::new(-m.lambda, m.omega)).collect()
    }

    /// Smallest decay rate above [`STATIONARY_RATE`].
    pub fn slowest_decay(&self) -> Option<f64> {
        self.modes
            .iter()
            .map(|m| m.lambda)
            .find(|&l| l > STATIONARY_RATE)
    }

    pub fn max_growth(&self) -> f64 {
        self.modes.iter().map(|m| -m.lambda).fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn eigenmodes(m: &Superoperator) -> Result<ModeSpectrum> {
    let values = eigen::eigenvalues(&m.matrix).ok_or_else(|| Error::Eigen {
        config: format!("superoperator with trace {}", m.trace()),
    })?;
    Ok(ModeSpectrum::from_values(&values))
}

fn spectrum_at(params: &SystemParams, mode: FieldMode, k: f64) -> Result<Vec<C64>> {
    let h = h_magnetic_total(params, mode);
    eigen::eigenvalues(&superoperator_matrix(&h.matrix, k)).ok_or_else(|| Error::Eigen {
        config: format!("{params:?}, {}, k = {k}", mode.as_str()),
    })
}

/// `h = γ · max(a, B)`.
pub fn characteristic_scale(params: &SystemParams) -> f64 {
    params.gamma * params.a_gauss.max(params.b_gauss)
}

/// One eigenvalue followed continuously across a sweep.
#[derive(Debug, Clone)]
pub struct Branch {
    /// Decay rate at each requested sweep point.
    pub lambdas: Vec<f64>,
    pub omegas: Vec<f64>,
    /// Least-squares slope of `ln λ` against `ln k`.
    pub slope: Option<f64>,
    pub class: ModeClass,
    /// Tracking hit an unresolved near-crossing.
    pub ambiguous: bool,
}

#[derive(Debug, Clone)]
pub struct ZenoScaling {
    pub k_values: Vec<f64>,
    pub branches: Vec<Branch>,
    /// Characteristic frequency scale `h` of the base parameters.
    pub h_scale: f64,
}

impl ZenoScaling {
    pub fn count(&self, class: ModeClass) -> usize {
        self.branches.iter().filter(|b| b.class == class).count()
    }

    pub fn of_class(&self, class: ModeClass) -> impl Iterator<Item = &Branch> {
        self.branches.iter().filter(move |b| b.class == class)
    }
}

/// Greedy nearest-neighbour assignment `a[i] → b[assign[i]]`.
///
/// A source is ambiguous when some target whose decay rate differs from the
/// assigned one by more than [`CLUSTER_RELATIVE_WIDTH`] lies within twice
/// the matched distance. Swapping targets inside such a cluster moves a
/// fitted log-log slope by at most `2·ln(1.05)/ln(k_max/k_min)`.
fn match_spectra(a: &[C64], b: &[C64]) -> (Vec<usize>, Vec<bool>) {
    let n = a.len();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for (i, za) in a.iter().enumerate() {
        for (j, zb) in b.iter().enumerate() {
            pairs.push(((za - zb).norm(), i, j));
        }
    }
    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(Ordering::Equal));
    let mut assign = vec![usize::MAX; n];
    let mut taken = vec![false; n];
    let mut left = n;
    for (_, i, j) in pairs {
        if left == 0 {
            break;
        }
        if assign[i] == usize::MAX && !taken[j] {
            assign[i] = j;
            taken[j] = true;
            left -= 1;
        }
    }
    let ambiguous = (0..n)
        .map(|i| {
            let target = b[assign[i]];
            let d1 = (a[i] - target).norm();
            if d1 <= 1e-8 * (1.0 + target.norm()) {
                return false;
            }
            let width = CLUSTER_RELATIVE_WIDTH * target.re.abs() + STATIONARY_RATE;
            b.iter()
                .any(|z| (z.re - target.re).abs() > width && (a[i] - z).norm() < 2.0 * d1)
        })
        .collect();
    (assign, ambiguous)
}

struct Tracker<'a> {
    params: &'a SystemParams,
    mode: FieldMode,
}

impl Tracker<'_> {
    fn spectrum(&self, k: f64) -> Result<Vec<C64>> {
        spectrum_at(self.params, self.mode, k)
    }

    /// Assignment from the spectrum at `xa` to the one at `xb`, refining
    /// geometrically while any match is ambiguous.
    fn track(
        &self,
        xa: f64,
        ea: &[C64],
        xb: f64,
        eb: &[C64],
        depth: usize,
    ) -> Result<(Vec<usize>, Vec<bool>)> {
        let (assign, ambiguous) = match_spectra(ea, eb);
        if depth == 0 || !ambiguous.iter().any(|&x| x) {
            return Ok((assign, ambiguous));
        }
        let xm = if xa > 0.0 && xb > 0.0 {
            (xa * xb).sqrt()
        } else {
            0.5 * (xa + xb)
        };
        let em = self.spectrum(xm)?;
        let (a1, amb1) = self.track(xa, ea, xm, &em, depth - 1)?;
        let (a2, amb2) = self.track(xm, &em, xb, eb, depth - 1)?;
        let assign = a1.iter().map(|&j| a2[j]).collect();
        let ambiguous = a1.iter().enumerate().map(|(i, &j)| amb1[i] || amb2[j]).collect();
        Ok((assign, ambiguous))
    }

    fn branches(&self, xs: &[f64]) -> Result<Vec<Branch>> {
        let spectra = xs.iter().map(|&x| self.spectrum(x)).collect::<Result<Vec<_>>>()?;
        let n = spectra[0].len();
        let mut index: Vec<usize> = (0..n).collect();
        let mut ambiguous = vec![false; n];
        let mut paths: Vec<Vec<C64>> = (0..n).map(|i| vec![spectra[0][i]]).collect();
        for s in 1..xs.len() {
            let (assign, amb) =
                self.track(xs[s - 1], &spectra[s - 1], xs[s], &spectra[s], MAX_REFINEMENT_DEPTH)?;
            for b in 0..n {
                let cur = index[b];
                ambiguous[b] |= amb[cur];
                index[b] = assign[cur];
                paths[b].push(spectra[s][index[b]]);
            }
        }
        let mut branches: Vec<Branch> = paths
            .into_iter()
            .zip(ambiguous)
            .map(|(path, ambiguous)| {
                let lambdas: Vec<f64> = path.iter().map(|z| -z.re).collect();
                let omegas = path.iter().map(|z| z.im).collect();
                let slope = if lambdas.iter().all(|&l| l > STATIONARY_RATE) {
                    Some(loglog_slope(xs, &lambdas))
                } else {
                    None
                };
                let class = match (ambiguous, slope) {
                    (false, Some(s)) => ModeClass::from_slope(s),
                    _ => ModeClass::Unclassified,
                };
                Branch {
                    lambdas,
                    omegas,
                    slope,
                    class,
                    ambiguous,
                }
            })
            .collect();
        branches.sort_by(|a, b| a.lambdas[0].total_cmp(&b.lambdas[0]));
        Ok(branches)
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn check_sweep(name: &str, values: &[f64]) -> Result<()> {
    if values.len() < 2 {
        return Err(Error::InvalidSweep(format!("{name} needs at least two values")));
    }
    if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidSweep(format!("{name} values must be positive")));
    }
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidSweep(format!("{name} values must be strictly increasing")));
    }
    Ok(())
}

/// Tracks every eigenvalue branch across the total measurement rates
/// `k_values` (μs⁻¹) and classifies each by its log-log slope.
///
/// The exchange coupling of `params_base` is used as given; the scaling laws
/// are stated for `J = 0`. Branches that pass a near-crossing the tracker
/// cannot resolve are reported as unclassified.
pub fn classify_zeno_scaling(
    params_base: &SystemParams,
    mode: FieldMode,
    k_values: &[f64],
) -> Result<ZenoScaling> {
    params_base.validate()?;
    check_sweep("k_values", k_values)?;
    let tracker = Tracker {
        params: params_base,
        mode,
    };
    Ok(ZenoScaling {
        k_values: k_values.to_vec(),
        branches: tracker.branches(k_values)?,
        h_scale: characteristic_scale(params_base),
    })
}

#[derive(Debug, Clone)]
pub struct ExchangeSuppression {
    /// `(J, slowest positive λ)` for each requested exchange coupling.
    pub points: Vec<(f64, Option<f64>)>,
    /// Log-log slope of the slowest rate over the top decade of `J`.
    pub fitted_slope: Option<f64>,
}

/// Slowest non-stationary decay rate for each exchange coupling (gauss).
pub fn zeno_exchange_suppression(
    params_base: &SystemParams,
    mode: FieldMode,
    j_values: &[f64],
) -> Result<ExchangeSuppression> {
    params_base.validate()?;
    if j_values.is_empty() {
        return Err(Error::InvalidSweep("j_values is empty".into()));
    }
    let mut points = Vec::with_capacity(j_values.len());
    for &j in j_values {
        let p = params_base.with_j(j);
        let eig = eigenmodes(&build_superoperator(&p, mode)?)?;
        points.push((j, eig.slowest_decay()));
    }
    let j_max = j_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let top: Vec<(f64, f64)> = points
        .iter()
        .filter(|(j, _)| *j > 0.0 && *j >= j_max / 10.0 * (1.0 - 1e-12))
        .filter_map(|&(j, l)| l.map(|l| (j, l)))
        .collect();
    let fitted_slope = (top.len() >= 2).then(|| {
        let (js, ls): (Vec<f64>, Vec<f64>) = top.into_iter().unzip();
        loglog_slope(&js, &ls)
    });
    Ok(ExchangeSuppression {
        points,
        fitted_slope,
    })
}

/// Frobenius norm of
/// `(H_m(J) − ikQ_S) − (H_m(0) − i(k − iJγ)Q_S) − (Jγ/4)·1`.
pub fn exchange_rate_identity_check(params: &SystemParams, mode: FieldMode) -> f64 {
    exchange_rate_identity_deviation(params, mode, true)
}

/// As [`exchange_rate_identity_check`], optionally without the constant
/// `(Jγ/4)·1` compensation (which then leaves `(Jγ/4)·√8`).
pub fn exchange_rate_identity_deviation(
    params: &SystemParams,
    mode: FieldMode,
    compensate: bool,
) -> f64 {
    let k = params.total_rate();
    let jg = params.gamma * params.j_gauss;
    let qs = singlet_projector();
    let i = C64::new(0.0, 1.0);
    let with_exchange = h_magnetic_total(params, mode).matrix - qs * (i * k);
    let h0 = h_magnetic_total(&params.with_j(0.0), mode).matrix;
    let imaginary_rate = C64::new(k, 0.0) - i * jg;
    let mut shifted = h0 - qs * (i * imaginary_rate);
    if compensate {
        shifted += Op8::identity() * C64::from(jg / 4.0);
    }
    (with_exchange - shifted).norm()
}

/// Mean `|Ω|` of the modes whose decay rate lies within 25 % of `k`.
///
/// At strong measurement these are singlet-triplet coherences; exchange
/// shifts their frequency by `∓Jγ`.
pub fn measurement_mode_frequency(params: &SystemParams, mode: FieldMode) -> Result<Option<f64>> {
    let k = params.total_rate();
    let eig = eigenmodes(&build_superoperator(params, mode)?)?;
    let sel: Vec<f64> = eig
        .modes
        .iter()
        .filter(|m| (m.lambda - k).abs() < 0.25 * k)
        .map(|m| m.omega.abs())
        .collect();
    Ok((!sel.is_empty()).then(|| sel.iter().sum::<f64>() / sel.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{DensityMatrix, liouville_rhs};

    fn params(b: f64, a: f64, j: f64, k: f64) -> SystemParams {
        SystemParams::new(b, a, j, 0.0, k)
    }

    fn pseudo_random_state(seed: u64) -> Op8 {
        let mut x = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((x >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let a = Op8::from_fn(|_, _| C64::new(next(), next()));
        let m = a * a.adjoint();
        m / m.trace()
    }

    #[test]
    fn vectorization_round_trip() {
        let rho = pseudo_random_state(3);
        assert_eq!(unvectorize(&vectorize(&rho)), rho);
        let a = pseudo_random_state(4);
        let b = pseudo_random_state(5);
        let lhs = vectorize(&(a * rho * b));
        let rhs = kron(&a, &b.transpose()) * vectorize(&rho);
        assert!((lhs - rhs).camax() < 1e-15);
    }

    #[test]
    fn zero_generator() {
        let m = superoperator_matrix(&Op8::zeros(), 0.0);
        assert_eq!(m, DMatrix::zeros(64, 64));
    }

    #[test]
    fn singlet_is_fixed_point() {
        let m = Superoperator {
            matrix: superoperator_matrix(&Op8::zeros(), 5.0),
            basis_convention: VECTORIZATION,
        };
        assert!(m.apply(&DensityMatrix::singlet().matrix).camax() < 1e-15);
    }

    #[test]
    fn matches_rhs_on_random_states() {
        let p = SystemParams::new(0.5, 5.0, 10.0, 0.3, 4.0).with_phi(0.6);
        for mode in [FieldMode::Magnetic, FieldMode::Angular] {
            let m = build_superoperator(&p, mode).unwrap();
            let h = h_magnetic_total(&p, mode);
            let mut worst: f64 = 0.0;
            for seed in 0..20 {
                let rho = pseudo_random_state(seed);
                let direct = liouville_rhs(&DensityMatrix::new(rho), &h, p.k_s, p.k_t);
                worst = worst.max((m.apply(&rho) - direct).camax());
            }
            assert!(worst < 1e-10, "{worst}");
        }
    }

    /// Pure measurement: Q_S ρ + ρ Q_S − 2Q_S ρ Q_S multiplies the matrix
    /// element ρ_ij by q_i + q_j − 2 q_i q_j in the eigenbasis of Q_S
    /// (q ∈ {0, 1}): singlet-triplet coherences decay at rate k, all other
    /// elements are conserved. With Tr Q_S = 2 there are 2·6·2 = 24
    /// coherences and 40 conserved elements.
    #[test]
    fn measurement_only_spectrum() {
        let k = 3.0;
        let p = params(0.0, 0.0, 0.0, k);
        let eig = eigenmodes(&build_superoperator(&p, FieldMode::Magnetic).unwrap()).unwrap();
        let zero = eig.modes.iter().filter(|m| m.lambda.abs() < 1e-12).count();
        let at_k = eig.modes.iter().filter(|m| (m.lambda - k).abs() < 1e-12).count();
        assert_eq!((zero, at_k), (40, 24));
        assert!(eig.modes.iter().all(|m| m.omega.abs() < 1e-12));
    }

    #[test]
    fn unitary_spectrum_is_imaginary() {
        let p = SystemParams {
            k_s: 0.0,
            k_t: 0.0,
            ..SystemParams::new(0.5, 5.0, 3.0, 0.0, 0.0)
        };
        let h = h_magnetic_total(&p, FieldMode::Magnetic);
        let m = Superoperator {
            matrix: superoperator_matrix(&h.matrix, 0.0),
            basis_convention: VECTORIZATION,
        };
        let eig = eigenmodes(&m).unwrap();
        assert!(eig.modes.iter().all(|m| m.lambda.abs() < 1e-10));
    }

    #[test]
    fn spectrum_invariants() {
        let p = SystemParams::new(0.5, 5.0, 10.0, 0.14, 1.4);
        let m = build_superoperator(&p, FieldMode::Magnetic).unwrap();
        let eig = eigenmodes(&m).unwrap();
        assert!(eig.max_growth() <= 1e-9);
        assert!(eig.modes.windows(2).all(|w| w[0].lambda <= w[1].lambda));
        let sum: C64 = eig.eigenvalues().iter().sum();
        assert!((sum - m.trace()).norm() < 1e-8);
        // conjugate-closed
        let ev = eig.eigenvalues();
        for z in &ev {
            let best = ev.iter().map(|w| (w - z.conj()).norm()).fold(f64::INFINITY, f64::min);
            assert!(best < 1e-9, "{z} has no conjugate partner");
        }
        // the trace-preserving steady state
        assert!(eig.modes[0].lambda.abs() < 1e-9);
    }

    #[test]
    fn angular_spectrum_independent_of_phi() {
        let p = SystemParams::new(0.5, 5.0, 4.0, 0.14, 1.4);
        // hyperfine along x breaks rotational symmetry, so compare the
        // exchange+Zeeman part only
        let p = p.with_a(0.0);
        let s1 = eigenmodes(&build_superoperator(&p.with_phi(0.3), FieldMode::Angular).unwrap()).unwrap();
        let s2 = eigenmodes(&build_superoperator(&p.with_phi(1.7), FieldMode::Angular).unwrap()).unwrap();
        for (a, b) in s1.modes.iter().zip(&s2.modes) {
            assert!((a.lambda - b.lambda).abs() < 1e-9);
        }
    }

    #[test]
    fn identity_check_values() {
        let p = SystemParams::new(0.5, 5.0, 0.0, 0.14, 1.4);
        assert_eq!(exchange_rate_identity_check(&p, FieldMode::Magnetic), 0.0);
        let p = p.with_j(10.0);
        assert!(exchange_rate_identity_check(&p, FieldMode::Magnetic) < 1e-12);
        let raw = exchange_rate_identity_deviation(&p, FieldMode::Magnetic, false);
        let expected = 10.0 * 1.4 / 4.0 * 8f64.sqrt();
        assert!((raw - expected).abs() < 1e-12);
    }

    #[test]
    fn single_eigenmode_decays_exponentially() {
        use crate::dynamics::Rk4Propagator;
        let p = SystemParams::new(0.5, 5.0, 2.0, 0.14, 1.4);
        let m = build_superoperator(&p, FieldMode::Magnetic).unwrap();
        let eig = eigen::eigen(&m.matrix).unwrap();
        let (idx, value) = eig
            .values
            .iter()
            .enumerate()
            .filter(|(_, z)| -z.re > 0.05)
            .min_by(|a, b| a.1.re.total_cmp(&b.1.re).reverse())
            .map(|(i, z)| (i, *z))
            .unwrap();
        let dt = 1e-3;
        let prop = Rk4Propagator::new(&m.matrix, dt);
        let mut v = eig.vectors.column(idx).into_owned();
        let mut scratch = v.clone();
        for n in 1..=2000 {
            prop.apply(&mut v, &mut scratch);
            if n % 250 == 0 {
                let t = n as f64 * dt;
                let expected = (value.re * t).exp();
                assert!((v.norm() - expected).abs() < 1e-9 * (1.0 + expected), "t = {t}");
            }
        }
    }

    #[test]
    fn classification_at_strong_measurement() {
        let p = SystemParams::new(0.5, 5.0, 0.0, 0.0, 1.0);
        let g = p.gamma;
        let ks: Vec<f64> = (0..=8).map(|i| g * 10f64.powf(1.0 + i as f64 / 4.0)).collect();
        let scaling = classify_zeno_scaling(&p, FieldMode::Magnetic, &ks).unwrap();
        assert!(scaling.count(ModeClass::MeasurementScaling) > 0);
        assert!(scaling.count(ModeClass::ZenoScaling) > 0);
        assert_eq!(scaling.h_scale, 7.0);
        for b in scaling.of_class(ModeClass::ZenoScaling) {
            let top: Vec<f64> = b.lambdas[4..].iter().zip(&ks[4..]).map(|(l, k)| l * k).collect();
            let (lo, hi) = top
                .iter()
                .fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
            assert!(hi / lo < 1.5);
        }
    }

    #[test]
    fn zeno_rate_follows_h_squared() {
        let k = 1400.0;
        let slow = |a: f64| {
            let p = SystemParams::new(0.0, a, 0.0, 0.0, k);
            eigenmodes(&build_superoperator(&p, FieldMode::Magnetic).unwrap())
                .unwrap()
                .slowest_decay()
                .unwrap()
        };
        let ratio = slow(10.0) / slow(5.0);
        assert!((2.0..8.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn exchange_suppresses_slow_modes() {
        let p = SystemParams::new(0.5, 5.0, 0.0, 0.14, 1.4);
        let js = [10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0];
        let sup = zeno_exchange_suppression(&p, FieldMode::Magnetic, &js).unwrap();
        let rate = |j: f64| sup.points.iter().find(|(x, _)| *x == j).unwrap().1.unwrap();
        assert!(rate(100.0) < rate(10.0));
        let slope = sup.fitted_slope.unwrap();
        assert!((slope + 2.0).abs() < 0.3, "slope {slope}");
        let scaled: Vec<f64> = [100.0, 200.0, 500.0, 1000.0].iter().map(|&j| rate(j) * j * j).collect();
        let (lo, hi) = scaled
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        assert!(hi / lo < 2.0);
    }

    #[test]
    fn exchange_shifts_measurement_frequencies() {
        let p = SystemParams::new(0.5, 5.0, 10.0, 0.0, 140.0);
        let shifted = measurement_mode_frequency(&p, FieldMode::Magnetic).unwrap().unwrap();
        let jg = 14.0;
        assert!((shifted - jg).abs() < 0.1 * jg, "{shifted}");
        let base = measurement_mode_frequency(&p.with_j(0.0), FieldMode::Magnetic).unwrap().unwrap();
        assert!(base < 0.25 * jg);
    }

    #[test]
    fn rejects_bad_sweeps() {
        let p = SystemParams::default();
        assert!(classify_zeno_scaling(&p, FieldMode::Magnetic, &[1.0]).is_err());
        assert!(classify_zeno_scaling(&p, FieldMode::Magnetic, &[2.0, 1.0]).is_err());
        assert!(zeno_exchange_suppression(&p, FieldMode::Magnetic, &[]).is_err());
    }
}
