//! Dimensionless two-mode model of a Bose Josephson junction.
//!
//! Time is measured in units of hbar/(2K). The reduced state is the
//! fractional population imbalance `z` and the relative phase `phi`, driven by
//! the trap asymmetry `de0 + de1 sin(omega t)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// States with `|z| > 1 - Z_GUARD` are rejected by [`rhs`].
pub const Z_GUARD: f64 = 1e-12;

/// Half-width of the band in `H_eff` that is classified as the separatrix.
pub const SEPARATRIX_TOL: f64 = 1e-9;

/// Physical two-mode parameters in energy units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Zero-point energy of well 1.
    pub e1: f64,
    /// Zero-point energy of well 2.
    pub e2: f64,
    /// Self-interaction coefficient of well 1.
    pub u1: f64,
    /// Self-interaction coefficient of well 2.
    pub u2: f64,
    /// Tunneling amplitude.
    pub k: f64,
    /// Total condensed atom number.
    pub n_total: f64,
}

/// Where the damping term enters the equations of motion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DampingKind {
    None,
    /// `-eta z` added to `dz/dt`.
    #[default]
    PopulationRelaxation,
    /// `-eta dz/dt` added to `dphi/dt`, the Duffing-type velocity damping.
    VelocityDamping,
}

impl DampingKind {
    pub fn name(self) -> &'static str {
        match self {
            DampingKind::None => "none",
            DampingKind::PopulationRelaxation => "population",
            DampingKind::VelocityDamping => "velocity",
        }
    }
}

impl std::str::FromStr for DampingKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(DampingKind::None),
            "population" | "population_relaxation" => Ok(DampingKind::PopulationRelaxation),
            "velocity" | "velocity_damping" => Ok(DampingKind::VelocityDamping),
            other => Err(format!(
                "unknown damping kind `{other}` (expected none, population or velocity)"
            )),
        }
    }
}

/// Dimensionless model parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapParams {
    /// Interaction-to-tunneling ratio `U N_T / 2K`.
    pub lambda: f64,
    /// Static trap asymmetry.
    pub de0: f64,
    /// Amplitude of the sinusoidal asymmetry modulation.
    pub de1: f64,
    /// Drive angular frequency.
    pub omega: f64,
    /// Damping strength.
    pub eta: f64,
    pub damping: DampingKind,
}

impl Default for TrapParams {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            de0: 0.0,
            de1: 0.0,
            omega: 0.0,
            eta: 0.0,
            damping: DampingKind::default(),
        }
    }
}

impl TrapParams {
    /// Undriven, undamped trap with the given interaction ratio and static asymmetry.
    pub fn conservative(lambda: f64, de0: f64) -> Self {
        Self {
            lambda,
            de0,
            ..Self::default()
        }
    }

    /// Driven trap with `omega` given in units of pi.
    pub fn driven(lambda: f64, de1: f64, omega_pi: f64, eta: f64) -> Self {
        Self {
            lambda,
            de0: 0.0,
            de1,
            omega: omega_pi * PI,
            eta,
            damping: DampingKind::PopulationRelaxation,
        }
    }

    pub fn with_damping(mut self, kind: DampingKind) -> Self {
        self.damping = kind;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("lambda", self.lambda),
            ("de0", self.de0),
            ("de1", self.de1),
            ("omega", self.omega),
            ("eta", self.eta),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::invalid(name, format!("must be finite, got {v}")));
            }
        }
        if self.eta < 0.0 {
            return Err(Error::invalid("eta", format!("must be >= 0, got {}", self.eta)));
        }
        if self.de1 != 0.0 && self.omega <= 0.0 {
            return Err(Error::invalid(
                "omega",
                format!("must be > 0 when de1 != 0, got {}", self.omega),
            ));
        }
        Ok(())
    }

    /// Damping strength actually applied; zero when `damping` is `None`.
    pub fn effective_eta(&self) -> f64 {
        match self.damping {
            DampingKind::None => 0.0,
            _ => self.eta,
        }
    }

    /// Instantaneous trap asymmetry `de0 + de1 sin(omega t)`.
    pub fn asymmetry(&self, t: f64) -> f64 {
        if self.de1 == 0.0 {
            self.de0
        } else {
            self.de0 + self.de1 * (self.omega * t).sin()
        }
    }

    /// Drive period `2 pi / omega`, if the trap is driven at a positive frequency.
    pub fn drive_period(&self) -> Option<f64> {
        (self.omega > 0.0).then(|| 2.0 * PI / self.omega)
    }

    /// The same trap with the drive and damping switched off.
    pub fn unperturbed(&self) -> Self {
        Self {
            de1: 0.0,
            eta: 0.0,
            damping: DampingKind::None,
            ..*self
        }
    }
}

/// Reduces physical two-mode parameters to `(lambda, de0)`.
///
/// The remaining fields (`de1`, `omega`, `eta`) are left at zero for the caller to fill in.
pub fn derive_dimensionless(phys: &PhysicalParams) -> Result<TrapParams> {
    if phys.k == 0.0 {
        return Err(Error::DivisionByZero("tunneling amplitude k is zero"));
    }
    if phys.k < 0.0 || !phys.k.is_finite() {
        return Err(Error::invalid("k", format!("must be > 0, got {}", phys.k)));
    }
    if phys.n_total <= 0.0 || !phys.n_total.is_finite() {
        return Err(Error::invalid(
            "n_total",
            format!("must be > 0, got {}", phys.n_total),
        ));
    }
    let u_mean = 0.5 * (phys.u1 + phys.u2);
    Ok(TrapParams {
        lambda: u_mean * phys.n_total / (2.0 * phys.k),
        de0: (phys.e1 - phys.e2) / (2.0 * phys.k) + (phys.u1 - phys.u2) * phys.n_total / (4.0 * phys.k),
        damping: DampingKind::None,
        ..TrapParams::default()
    })
}

/// A point of the reduced system. `phi` is kept unwrapped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseState {
    pub t: f64,
    pub z: f64,
    pub phi: f64,
}

impl PhaseState {
    pub fn new(t: f64, z: f64, phi: f64) -> Self {
        Self { t, z, phi }
    }

    pub fn at_rest(z: f64, phi: f64) -> Self {
        Self { t: 0.0, z, phi }
    }

    /// Relative phase reduced to `(-pi, pi]`.
    pub fn wrapped_phi(&self) -> f64 {
        wrap_phase(self.phi)
    }
}

/// Reduces an angle to `(-pi, pi]`.
pub fn wrap_phase(phi: f64) -> f64 {
    let r = phi.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Right-hand side `(dz/dt, dphi/dt)` of the reduced equations.
pub fn rhs(p: &TrapParams, s: &PhaseState) -> Result<(f64, f64)> {
    rates(p, s.t, s.z, s.phi)
}

pub(crate) fn rates(p: &TrapParams, t: f64, z: f64, phi: f64) -> Result<(f64, f64)> {
    if !(z.abs() <= 1.0 - Z_GUARD) {
        return Err(Error::Singularity { t, z, phi });
    }
    let root = (1.0 - z * z).sqrt();
    let (sin_phi, cos_phi) = phi.sin_cos();
    let dz_free = -root * sin_phi;
    let mut dphi = p.asymmetry(t) + p.lambda * z + z / root * cos_phi;
    let mut dz = dz_free;
    match p.damping {
        DampingKind::None => {}
        DampingKind::PopulationRelaxation => dz -= p.eta * z,
        DampingKind::VelocityDamping => dphi -= p.eta * dz_free,
    }
    Ok((dz, dphi))
}

/// Conserved energy of the undamped system at fixed asymmetry.
pub fn hamiltonian(p: &TrapParams, z: f64, phi: f64, t: f64) -> f64 {
    let root = (1.0 - z * z).max(0.0).sqrt();
    0.5 * p.lambda * z * z + p.asymmetry(t) * z - root * phi.cos()
}

/// Potential of the effective particle whose coordinate is `z`.
///
/// `h` is the frozen unperturbed energy and `de` the instantaneous asymmetry.
pub fn effective_potential(lambda: f64, h: f64, de: f64, z: f64) -> f64 {
    let z2 = z * z;
    0.5 * z2 * (1.0 - lambda * h + 0.25 * lambda * lambda * z2)
        + (0.5 * de * lambda * z2 * z + 0.5 * de * de * z2 - de * h * z)
}

/// Total energy of the effective particle, `(1 - H^2)/2`.
pub fn effective_energy(h: f64) -> f64 {
    0.5 * (1.0 - h * h)
}

/// Energies of the effective particle at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveState {
    pub h: f64,
    pub h_eff: f64,
    pub p_z: f64,
}

impl EffectiveState {
    /// Evaluates the effective-particle picture for the unperturbed version of `p`.
    pub fn from_state(p: &TrapParams, s: &PhaseState) -> Result<Self> {
        let free = p.unperturbed();
        let h = hamiltonian(&free, s.z, s.phi, s.t);
        let (p_z, _) = rhs(&free, s)?;
        Ok(Self {
            h,
            h_eff: effective_energy(h),
            p_z,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialShape {
    DoubleWell,
    Parabolic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Motion {
    RabiOscillation,
    SelfTrapped,
    Separatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Regime {
    pub potential_shape: PotentialShape,
    pub motion: Motion,
}

/// Classifies the unperturbed motion started from `(z0, phi0)` at `t = 0`.
pub fn classify_regime(p: &TrapParams, z0: f64, phi0: f64) -> Regime {
    let free = p.unperturbed();
    let h = hamiltonian(&free, z0, phi0, 0.0);
    let h_eff = effective_energy(h);
    let potential_shape = if 1.0 - p.lambda * h < 0.0 {
        PotentialShape::DoubleWell
    } else {
        PotentialShape::Parabolic
    };
    let motion = if h_eff.abs() <= SEPARATRIX_TOL {
        Motion::Separatrix
    } else if h_eff < 0.0 && potential_shape == PotentialShape::DoubleWell {
        Motion::SelfTrapped
    } else {
        // A single well has no barrier to be trapped behind.
        Motion::RabiOscillation
    };
    Regime {
        potential_shape,
        motion,
    }
}

/// Amplitude of the sech separatrix together with its physical validity flags.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparatrixAmplitude {
    /// `2 sqrt((lambda h - 1)/lambda^2)`.
    pub amplitude: f64,
    /// `sqrt(2 (lambda h - 1)/lambda^2)`, the well-bottom position.
    pub well_bottom: f64,
    /// Both Rabi and self-trapped motion exist (`well_bottom <= 1`).
    pub full_portrait: bool,
    /// The well bottom sits exactly at `|z| = 1`.
    pub complete_localization: bool,
    /// The separatrix amplitude exceeds one, leaving only self-trapping.
    pub mqst_only: bool,
}

pub fn separatrix_amplitude(lambda: f64, h: f64) -> Result<SeparatrixAmplitude> {
    let lambda_h = lambda * h;
    if !(lambda_h > 1.0) {
        return Err(Error::NoSeparatrix { lambda_h });
    }
    let ratio = (lambda_h - 1.0) / (lambda * lambda);
    let amplitude = 2.0 * ratio.sqrt();
    let well_bottom = (2.0 * ratio).sqrt();
    Ok(SeparatrixAmplitude {
        amplitude,
        well_bottom,
        full_portrait: well_bottom <= 1.0 + 1e-12,
        complete_localization: (well_bottom - 1.0).abs() <= 1e-12,
        mqst_only: amplitude > 1.0,
    })
}
