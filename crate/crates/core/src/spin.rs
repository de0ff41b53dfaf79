//! Spin operators, singlet/triplet projectors and Hamiltonians on the
//! electron ⊗ electron ⊗ nucleus space.

use std::fmt;

use nalgebra::SMatrix;

use crate::params::{FieldMode, SystemParams};
use crate::{C64, DIM};

/// Dense complex 8×8 matrix.
pub type Op8 = SMatrix<C64, DIM, DIM>;

/// Particles carrying a spin-1/2 in the product space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Particle {
    Electron1,
    Electron2,
    Nucleus,
}

impl Particle {
    fn slot(self) -> usize {
        match self {
            Particle::Electron1 => 0,
            Particle::Electron2 => 1,
            Particle::Nucleus => 2,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Particle::Electron1 => "s1",
            Particle::Electron2 => "s2",
            Particle::Nucleus => "I",
        }
    }
}

/// Labeled operator on the 8-dimensional space.
#[derive(Clone, PartialEq)]
pub struct SpinOperator {
    pub matrix: Op8,
    pub label: String,
}

impl fmt::Debug for SpinOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SpinOperator({}){}", self.label, self.matrix)
    }
}

impl SpinOperator {
    pub fn new(matrix: Op8, label: impl Into<String>) -> Self {
        SpinOperator {
            matrix,
            label: label.into(),
        }
    }

    pub fn zero(label: impl Into<String>) -> Self {
        Self::new(Op8::zeros(), label)
    }

    pub fn identity() -> Self {
        Self::new(Op8::identity(), "1")
    }

    pub fn scaled(&self, factor: f64, label: impl Into<String>) -> Self {
        Self::new(self.matrix * C64::from(factor), label)
    }

    /// Largest elementwise deviation from Hermiticity, relative to the
    /// largest entry (absolute when the operator vanishes).
    pub fn hermiticity_error(&self) -> f64 {
        let diff = (self.matrix - self.matrix.adjoint()).camax();
        let scale = self.matrix.camax();
        if scale > 0.0 { diff / scale } else { diff }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.norm()
    }

    /// Sorted eigenvalues. Only meaningful for Hermitian operators.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let herm = (self.matrix + self.matrix.adjoint()) * C64::from(0.5);
        let mut ev: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

impl std::ops::Add for &SpinOperator {
    type Output = SpinOperator;

    fn add(self, rhs: &SpinOperator) -> SpinOperator {
        SpinOperator::new(
            self.matrix + rhs.matrix,
            format!("{} + {}", self.label, rhs.label),
        )
    }
}

/// `[a, b] = ab − ba`.
pub fn commutator(a: &Op8, b: &Op8) -> Op8 {
    a * b - b * a
}

fn pauli_half() -> [[[C64; 2]; 2]; 3] {
    let z = C64::new(0.0, 0.0);
    let h = C64::new(0.5, 0.0);
    let ih = C64::new(0.0, 0.5);
    [
        [[z, h], [h, z]],
        [[z, -ih], [ih, z]],
        [[h, z], [z, -h]],
    ]
}

/// Spin-1/2 component `axis` (0 = x, 1 = y, 2 = z) of `particle`, embedded
/// with identities on the other two factors.
pub fn spin_component(particle: Particle, axis: usize) -> Op8 {
    assert!(axis < 3, "axis must be 0, 1 or 2");
    let single = pauli_half()[axis];
    let slot = particle.slot();
    Op8::from_fn(|r, c| {
        // basis index = 4·e1 + 2·e2 + n
        let bits = |i: usize| [(i >> 2) & 1, (i >> 1) & 1, i & 1];
        let (rb, cb) = (bits(r), bits(c));
        for k in 0..3 {
            if k != slot && rb[k] != cb[k] {
                return C64::new(0.0, 0.0);
            }
        }
        single[rb[slot]][cb[slot]]
    })
}

/// x, y and z components of one particle's spin.
#[derive(Debug, Clone)]
pub struct SpinVector {
    pub x: SpinOperator,
    pub y: SpinOperator,
    pub z: SpinOperator,
}

impl SpinVector {
    fn of(particle: Particle) -> Self {
        let op = |axis: usize, c: char| {
            SpinOperator::new(
                spin_component(particle, axis),
                format!("{}{}", particle.name(), c),
            )
        };
        SpinVector {
            x: op(0, 'x'),
            y: op(1, 'y'),
            z: op(2, 'z'),
        }
    }

    pub fn components(&self) -> [&SpinOperator; 3] {
        [&self.x, &self.y, &self.z]
    }
}

/// Spin vectors of electron 1, electron 2 and the nucleus.
#[derive(Debug, Clone)]
pub struct SingleSpinOps {
    pub s1: SpinVector,
    pub s2: SpinVector,
    pub nucleus: SpinVector,
}

pub fn single_spin_ops() -> SingleSpinOps {
    SingleSpinOps {
        s1: SpinVector::of(Particle::Electron1),
        s2: SpinVector::of(Particle::Electron2),
        nucleus: SpinVector::of(Particle::Nucleus),
    }
}

/// `s1 · s2` as a bare matrix.
fn s1_dot_s2() -> Op8 {
    (0..3)
        .map(|ax| spin_component(Particle::Electron1, ax) * spin_component(Particle::Electron2, ax))
        .fold(Op8::zeros(), |acc, m| acc + m)
}

/// Singlet projector `Q_S = 1/4 − s1·s2` as a bare matrix.
pub fn singlet_projector() -> Op8 {
    Op8::identity() * C64::from(0.25) - s1_dot_s2()
}

/// `(Q_S, Q_T)` with `Q_T = 1 − Q_S`.
pub fn projectors() -> (SpinOperator, SpinOperator) {
    let qs = singlet_projector();
    let qt = Op8::identity() - qs;
    (SpinOperator::new(qs, "Q_S"), SpinOperator::new(qt, "Q_T"))
}

/// `ω (s1z + s2z)` with `ω = γB`.
pub fn h_zeeman_magnetic(params: &SystemParams) -> SpinOperator {
    let w = C64::from(params.omega());
    let m = (spin_component(Particle::Electron1, 2) + spin_component(Particle::Electron2, 2)) * w;
    SpinOperator::new(m, "H_Z,magn")
}

/// `ω cosφ (s1x + s2x) + ω sinφ (s1y + s2y)`.
pub fn h_zeeman_angular(params: &SystemParams) -> SpinOperator {
    let w = params.omega();
    let sx = spin_component(Particle::Electron1, 0) + spin_component(Particle::Electron2, 0);
    let sy = spin_component(Particle::Electron1, 1) + spin_component(Particle::Electron2, 1);
    let m = sx * C64::from(w * params.phi.cos()) + sy * C64::from(w * params.phi.sin());
    SpinOperator::new(m, "H_Z,ang")
}

/// `γa · s1x · Ix`.
pub fn h_hyperfine(params: &SystemParams) -> SpinOperator {
    let m = spin_component(Particle::Electron1, 0)
        * spin_component(Particle::Nucleus, 0)
        * C64::from(params.gamma * params.a_gauss);
    SpinOperator::new(m, "H_hf")
}

/// `γJ · s1·s2`.
pub fn h_exchange(params: &SystemParams) -> SpinOperator {
    SpinOperator::new(
        s1_dot_s2() * C64::from(params.gamma * params.j_gauss),
        "H_ex",
    )
}

pub fn h_zeeman(params: &SystemParams, mode: FieldMode) -> SpinOperator {
    match mode {
        FieldMode::Magnetic => h_zeeman_magnetic(params),
        FieldMode::Angular => h_zeeman_angular(params),
    }
}

/// `H_Z + H_hf + H_ex` for the selected field geometry.
pub fn h_magnetic_total(params: &SystemParams, mode: FieldMode) -> SpinOperator {
    let m = h_zeeman(params, mode).matrix + h_hyperfine(params).matrix + h_exchange(params).matrix;
    SpinOperator::new(m, format!("H_m[{}]", mode.as_str()))
}

/// Total Hamiltonian plus an optional caller-supplied Hermitian term, e.g. a
/// dipolar coupling.
pub fn h_magnetic_total_with(
    params: &SystemParams,
    mode: FieldMode,
    extra: Option<&SpinOperator>,
) -> SpinOperator {
    let base = h_magnetic_total(params, mode);
    match extra {
        Some(term) => SpinOperator::new(
            base.matrix + term.matrix,
            format!("{} + {}", base.label, term.label),
        ),
        None => base,
    }
}
