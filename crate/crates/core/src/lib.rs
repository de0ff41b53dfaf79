//! Quantum-measurement dynamics of a radical-ion pair with one spin-1/2
//! nucleus: spin operators, master-equation propagation, reaction yields,
//! compass precision, superoperator spectra and a Monte Carlo yield oracle.
//!
//! Conventions used throughout the crate:
//!
//! * Hilbert space ordering is electron 1 ⊗ electron 2 ⊗ nucleus, each factor
//!   in the `{|+1/2⟩, |−1/2⟩}` order, giving an 8-dimensional space.
//! * Couplings (`B`, `a`, `J`) are given in gauss and converted to angular
//!   frequencies with `ω = γ·B`, `γ = 1.4` (units of 10⁶ rad/s per gauss, no
//!   factor 2π). Time is measured in microseconds.
//! * Recombination rates `k_S`, `k_T` are stored in μs⁻¹. [`RateUnit`] converts
//!   from gauss-equivalent values.
//! * Density matrices are vectorized row-major, `vec(ρ)[8·i + j] = ρ[i][j]`,
//!   so that `vec(AρB) = (A ⊗ Bᵀ)·vec(ρ)`.

pub mod dynamics;
pub mod eigen;
pub mod error;
pub mod montecarlo;
pub mod params;
pub mod precision;
pub mod spectral;
pub mod spin;
pub mod yields;

pub use dynamics::{
    DensityMatrix, PropagationConfig, Propagator, TrajectoryRecord, liouville_rhs, propagate,
    propagate_spectral, step_rk4,
};
pub use error::{Error, Result};
pub use montecarlo::{McEstimate, sample_yield, sample_yield_from_record};
pub use params::{FieldMode, RateUnit, Regime, SystemParams};
pub use spectral::{
    ModeClass, ModeSpectrum, Superoperator, build_superoperator, classify_zeno_scaling,
    eigenmodes, exchange_rate_identity_check, zeno_exchange_suppression,
};
pub use precision::{
    AngularPrecision, MagneticPrecision, PrecisionKind, PrecisionOptions, PrecisionResult,
    Resolution, SweepResult, SweptParam, angular_precision, delta_yield_from_receptors,
    magnetic_precision, precision_vs_exchange, yield_sweep,
};
pub use spin::{Op8, SpinOperator};
pub use yields::{YieldResult, triplet_yield};

/// Complex scalar used for every operator in the crate.
pub type C64 = num_complex::Complex64;

/// Hilbert-space dimension: two electrons and one spin-1/2 nucleus.
pub const DIM: usize = 8;

/// Dimension of the vectorized density matrix.
pub const LIOUVILLE_DIM: usize = DIM * DIM;
