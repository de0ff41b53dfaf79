use crate::error::{Error, Result};

/// Gyromagnetic conversion, 10⁶ rad/s per gauss.
pub const GAMMA_DEFAULT: f64 = 1.4;

/// Field orientation used to build the Zeeman term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldMode {
    /// Field along the molecular z axis; `φ` is ignored.
    Magnetic,
    /// Field in the x-y plane at angle `φ` from the x axis.
    Angular,
}

impl FieldMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FieldMode::Magnetic => "magnetic",
            FieldMode::Angular => "angular",
        }
    }
}

/// How recombination rates are quoted on input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RateUnit {
    /// μs⁻¹, the internal unit.
    AngularFrequency,
    /// Gauss-equivalent: the stored rate is `value · γ`.
    GaussEquivalent,
}

impl RateUnit {
    pub fn to_internal(self, value: f64, gamma: f64) -> f64 {
        match self {
            RateUnit::AngularFrequency => value,
            RateUnit::GaussEquivalent => value * gamma,
        }
    }
}

/// Recombination-rate regimes.
///
/// The preset rates are quoted in gauss-equivalent units and scaled by `γ`:
///
/// | regime      | `k_S`   | `k_T`   |
/// |-------------|---------|---------|
/// | traditional | 0.8 G·γ | 0.8 G·γ |
/// | zeno        | 0.1 G·γ | 1.0 G·γ |
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    Traditional,
    Zeno,
    Custom { k_s: f64, k_t: f64 },
}

impl Regime {
    pub const TRADITIONAL_RATE_GAUSS: f64 = 0.8;
    pub const ZENO_TRIPLET_RATE_GAUSS: f64 = 1.0;
    pub const ZENO_SINGLET_RATE_GAUSS: f64 = 0.1;

    /// `(k_S, k_T)` in μs⁻¹.
    pub fn rates(self, gamma: f64) -> (f64, f64) {
        match self {
            Regime::Traditional => (
                Self::TRADITIONAL_RATE_GAUSS * gamma,
                Self::TRADITIONAL_RATE_GAUSS * gamma,
            ),
            Regime::Zeno => (
                Self::ZENO_SINGLET_RATE_GAUSS * gamma,
                Self::ZENO_TRIPLET_RATE_GAUSS * gamma,
            ),
            Regime::Custom { k_s, k_t } => (k_s, k_t),
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Regime::Traditional => "traditional",
            Regime::Zeno => "zeno",
            Regime::Custom { .. } => "custom",
        }
    }
}

/// Physical inputs of one simulation.
///
/// `ω` is derived on demand from `γ·B` and never stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Field magnitude, gauss.
    pub b_gauss: f64,
    /// Field angle in the x-y plane, radians.
    pub phi: f64,
    /// Hyperfine coupling `A_xx`, gauss.
    pub a_gauss: f64,
    /// Exchange coupling, gauss. May be negative.
    pub j_gauss: f64,
    /// Singlet recombination rate, μs⁻¹.
    pub k_s: f64,
    /// Triplet recombination rate, μs⁻¹.
    pub k_t: f64,
    /// Gyromagnetic conversion, 10⁶ rad/s per gauss.
    pub gamma: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        let (k_s, k_t) = Regime::Zeno.rates(GAMMA_DEFAULT);
        SystemParams {
            b_gauss: 0.5,
            phi: 0.0,
            a_gauss: 5.0,
            j_gauss: 0.0,
            k_s,
            k_t,
            gamma: GAMMA_DEFAULT,
        }
    }
}

impl SystemParams {
    pub fn new(b_gauss: f64, a_gauss: f64, j_gauss: f64, k_s: f64, k_t: f64) -> Self {
        SystemParams {
            b_gauss,
            phi: 0.0,
            a_gauss,
            j_gauss,
            k_s,
            k_t,
            gamma: GAMMA_DEFAULT,
        }
    }

    pub fn with_regime(mut self, regime: Regime) -> Self {
        let (k_s, k_t) = regime.rates(self.gamma);
        self.k_s = k_s;
        self.k_t = k_t;
        self
    }

    pub fn with_rates(mut self, k_s: f64, k_t: f64, unit: RateUnit) -> Self {
        self.k_s = unit.to_internal(k_s, self.gamma);
        self.k_t = unit.to_internal(k_t, self.gamma);
        self
    }

    pub fn with_b(mut self, b_gauss: f64) -> Self {
        self.b_gauss = b_gauss;
        self
    }

    pub fn with_phi(mut self, phi: f64) -> Self {
        self.phi = phi;
        self
    }

    pub fn with_a(mut self, a_gauss: f64) -> Self {
        self.a_gauss = a_gauss;
        self
    }

    pub fn with_j(mut self, j_gauss: f64) -> Self {
        self.j_gauss = j_gauss;
        self
    }

    /// Larmor frequency `γ·B`.
    pub fn omega(&self) -> f64 {
        self.gamma * self.b_gauss
    }

    /// Total measurement rate `k_S + k_T`.
    pub fn total_rate(&self) -> f64 {
        self.k_s + self.k_t
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("b_gauss", self.b_gauss),
            ("phi", self.phi),
            ("a_gauss", self.a_gauss),
            ("j_gauss", self.j_gauss),
            ("k_s", self.k_s),
            ("k_t", self.k_t),
            ("gamma", self.gamma),
        ];
        for (field, v) in finite {
            if !v.is_finite() {
                return Err(Error::param(field, format!("must be finite, got {v}")));
            }
        }
        for (field, v) in [
            ("b_gauss", self.b_gauss),
            ("a_gauss", self.a_gauss),
            ("k_s", self.k_s),
            ("k_t", self.k_t),
        ] {
            if v < 0.0 {
                return Err(Error::param(field, format!("must be >= 0, got {v}")));
            }
        }
        if self.gamma <= 0.0 {
            return Err(Error::param("gamma", "must be > 0"));
        }
        if self.total_rate() <= 0.0 {
            return Err(Error::param("k_s + k_t", "total recombination rate must be > 0"));
        }
        Ok(())
    }
}
