//! Perturbation analysis around the sech separatrix of the symmetric trap.
//!
//! Near the separatrix the imbalance obeys a driven, damped Duffing equation.
//! The first-order solvability condition is the Melnikov integral
//! `M = int z11(t) eps1(t) dt` over the whole real line, where `z11` is the
//! bounded solution of the variational equation and `eps1` the first-order
//! forcing. It is available here both by quadrature and in closed form.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::TrapParams;
use crate::quadrature::adaptive_simpson;

/// Quadrature window half-width in the separatrix phase `xi`.
pub const XI_WINDOW: f64 = 40.0;
/// Absolute tolerance of the Melnikov quadrature.
pub const QUAD_TOL: f64 = 1e-12;

/// Unperturbed energy and phase constant fixing one separatrix orbit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparatrixFrame {
    pub lambda: f64,
    pub h: f64,
    pub c0: f64,
    /// `sqrt(lambda h - 1)`.
    pub kappa: f64,
}

impl SeparatrixFrame {
    pub fn new(lambda: f64, h: f64, c0: f64) -> Result<Self> {
        let lambda_h = lambda * h;
        if !(lambda_h > 1.0) || !lambda_h.is_finite() {
            return Err(Error::NoSeparatrix { lambda_h });
        }
        if !c0.is_finite() {
            return Err(Error::invalid("c0", "must be finite"));
        }
        Ok(Self { lambda, h, c0, kappa: (lambda_h - 1.0).sqrt() })
    }

    /// Fixes `c0` from an initial point `(z0, dz0)` on the right-hand separatrix.
    ///
    /// `z0` must lie in `(0, amplitude]`; the branch with `xi > 0` is the one on
    /// which `z` decreases.
    pub fn from_initial(lambda: f64, h: f64, z0: f64, dz0: f64) -> Result<Self> {
        let frame = Self::new(lambda, h, 0.0)?;
        let amplitude = frame.amplitude();
        if !(z0 > 0.0 && z0 <= amplitude * (1.0 + 1e-12)) {
            return Err(Error::invalid(
                "z0",
                format!("must lie in (0, {amplitude}] to sit on the separatrix, got {z0}"),
            ));
        }
        let xi0 = (amplitude / z0).max(1.0).acosh();
        let c0 = if dz0 > 0.0 { -xi0 } else { xi0 };
        Self::new(lambda, h, c0)
    }

    /// Peak value `2 sqrt((lambda h - 1)/lambda^2)`.
    pub fn amplitude(&self) -> f64 {
        2.0 * self.kappa / self.lambda.abs()
    }

    pub fn xi(&self, t: f64) -> f64 {
        self.c0 + t * self.kappa
    }

    pub fn time_of(&self, xi: f64) -> f64 {
        (xi - self.c0) / self.kappa
    }

    pub fn lambda_h_minus_one(&self) -> f64 {
        self.kappa * self.kappa
    }
}

/// `(z, dz/dt, d2z/dt2)` of the separatrix at time `t`.
pub fn separatrix_derivatives(f: &SeparatrixFrame, t: f64) -> (f64, f64, f64) {
    let xi = f.xi(t);
    let sech = 1.0 / xi.cosh();
    let tanh = xi.tanh();
    let a = f.amplitude();
    let k = f.kappa;
    (a * sech, -a * k * sech * tanh, a * k * k * sech * (tanh * tanh - sech * sech))
}

/// Separatrix solution `z_s(t) = amplitude * sech(xi)`.
pub fn separatrix(f: &SeparatrixFrame, t: f64) -> f64 {
    f.amplitude() / f.xi(t).cosh()
}

/// Bounded basis solution of the variational equation, `dz_s/dt`.
pub fn basis_z11(f: &SeparatrixFrame, t: f64) -> f64 {
    let xi = f.xi(t);
    -2.0 * f.lambda_h_minus_one() / f.lambda.abs() * xi.tanh() / xi.cosh()
}

/// Growing basis solution, normalized so the Wronskian with [`basis_z11`] is one.
pub fn basis_z12(f: &SeparatrixFrame, t: f64) -> f64 {
    let xi = f.xi(t);
    let c = xi.cosh();
    let bracket = (3.0 * xi).cosh() - 9.0 * c + 12.0 * xi * xi.sinh();
    -f.lambda.abs() / (16.0 * f.kappa.powi(3)) * bracket / (c * c)
}

/// Trap asymmetry and damping treated as perturbations.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PerturbationSpec {
    pub de0: f64,
    pub de1: f64,
    pub omega: f64,
    pub eta: f64,
}

impl PerturbationSpec {
    pub fn asymmetry(&self, t: f64) -> f64 {
        self.de0 + self.de1 * (self.omega * t).sin()
    }
}

impl From<&TrapParams> for PerturbationSpec {
    fn from(p: &TrapParams) -> Self {
        Self {
            de0: p.de0,
            de1: p.de1,
            omega: p.omega,
            eta: p.effective_eta(),
        }
    }
}

/// First-order forcing `-eta dz0/dt + dE H - (3/2) dE lambda z0^2`.
pub fn epsilon1(f: &SeparatrixFrame, pert: &PerturbationSpec, t: f64) -> f64 {
    let de = pert.asymmetry(t);
    let z0 = separatrix(f, t);
    -pert.eta * basis_z11(f, t) + de * f.h - 1.5 * de * f.lambda * z0 * z0
}

fn integrand(f: &SeparatrixFrame, pert: &PerturbationSpec, t: f64) -> f64 {
    basis_z11(f, t) * epsilon1(f, pert, t)
}

/// Panels so that each spans at most an eighth of a drive oscillation.
fn panel_count(span: f64, omega: f64) -> usize {
    let per_cycle = if omega > 0.0 { span * omega / (2.0 * PI) } else { 0.0 };
    (8.0 * per_cycle).ceil().max(64.0) as usize
}

/// Melnikov integral evaluated by adaptive quadrature over `|xi| <= XI_WINDOW`.
pub fn melnikov_numeric(f: &SeparatrixFrame, pert: &PerturbationSpec) -> Result<f64> {
    let k = f.kappa;
    let g = |xi: f64| integrand(f, pert, f.time_of(xi)) / k;
    let panels = panel_count(2.0 * XI_WINDOW / k, pert.omega);
    adaptive_simpson(g, -XI_WINDOW, XI_WINDOW, QUAD_TOL, panels)
}

/// `int_{t_lo}^{t_hi} z11 eps1 dt`, the finite-time version of the Melnikov integral.
pub fn running_stability_integral(
    f: &SeparatrixFrame,
    pert: &PerturbationSpec,
    t_lo: f64,
    t_hi: f64,
) -> Result<f64> {
    let panels = panel_count((t_hi - t_lo).abs() * f.kappa.max(1.0), pert.omega.max(f.kappa));
    adaptive_simpson(|t| integrand(f, pert, t), t_lo, t_hi, QUAD_TOL, panels)
}

/// Constant damping contribution `-8 eta (lambda h - 1)^{3/2} / (3 lambda^2)`.
pub fn damping_term(f: &SeparatrixFrame, eta: f64) -> f64 {
    -8.0 * eta * f.kappa.powi(3) / (3.0 * f.lambda * f.lambda)
}

/// Frequency-dependent bracket multiplying `de1` (without the phase and sech factors):
/// `-2H/|lambda| + 2 (lambda h - 1)/(lambda |lambda|) (1 + omega^2/(lambda h - 1))`.
pub fn forcing_bracket(f: &SeparatrixFrame, omega: f64) -> f64 {
    let k2 = f.lambda_h_minus_one();
    let al = f.lambda.abs();
    -2.0 * f.h / al + 2.0 * k2 / (f.lambda * al) * (1.0 + omega * omega / k2)
}

/// Full coefficient of `de1` in the Melnikov function.
pub fn forcing_coefficient(f: &SeparatrixFrame, omega: f64) -> f64 {
    let k = f.kappa;
    let phase = (omega * f.c0 / k).cos();
    let envelope = 1.0 / (omega * PI / (2.0 * k)).cosh();
    forcing_bracket(f, omega) * omega * PI * phase * envelope
}

/// Closed-form Melnikov function; zero when the first-order condition holds.
///
/// Independent of `de0`: the static asymmetry only enters through an odd integrand.
pub fn melnikov_closed(f: &SeparatrixFrame, pert: &PerturbationSpec) -> f64 {
    damping_term(f, pert.eta) + pert.de1 * forcing_coefficient(f, pert.omega)
}

/// Drive frequency at which [`forcing_bracket`] vanishes.
///
/// Setting the bracket to zero gives `omega^2 = lambda h - (lambda h - 1) = 1`, so the
/// resonance sits at unit frequency whenever a separatrix exists.
pub fn resonance_frequency(f: &SeparatrixFrame) -> Option<f64> {
    let w2 = f.lambda * f.h - f.lambda_h_minus_one();
    (w2 > 0.0).then(|| w2.sqrt())
}

/// Residual of the driven, damped Duffing equation for the imbalance.
pub fn duffing_residual(f: &SeparatrixFrame, pert: &PerturbationSpec, z: f64, dz: f64, d2z: f64, t: f64) -> f64 {
    let de = pert.asymmetry(t);
    let l = f.lambda;
    d2z - (l * f.h - 1.0) * z + 0.5 * l * l * z.powi(3) + 1.5 * de * l * z * z + de * de * z - de * f.h
        + pert.eta * dz
}

/// One point of a stability curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub omega: f64,
    /// Drive amplitude at which the Melnikov function vanishes; infinite on an asymptote.
    pub de1_critical: f64,
    /// 0 below the resonance frequency, 1 above it.
    pub branch: usize,
}

impl CurvePoint {
    pub fn is_asymptote(&self) -> bool {
        !self.de1_critical.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityCurve {
    pub points: Vec<CurvePoint>,
    pub resonance: Option<f64>,
    pub lambda: f64,
    pub h: f64,
    pub eta: f64,
    pub c0: f64,
}

/// Critical `de1(omega)` on an `n_points` grid over `omega_range`.
///
/// The Melnikov function is linear in `de1`, so each point is a division. A marker
/// point with infinite amplitude is inserted at the resonance frequency when it
/// lies inside the range.
pub fn stability_curve(
    lambda: f64,
    h: f64,
    eta: f64,
    c0: f64,
    omega_range: (f64, f64),
    n_points: usize,
) -> Result<StabilityCurve> {
    let frame = SeparatrixFrame::new(lambda, h, c0)?;
    let (lo, hi) = omega_range;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::invalid("omega_range", format!("need 0 < lo < hi, got ({lo}, {hi})")));
    }
    if n_points < 2 {
        return Err(Error::invalid("n_points", "need at least two grid points"));
    }
    if !(eta >= 0.0) {
        return Err(Error::invalid("eta", format!("must be >= 0, got {eta}")));
    }
    let resonance = resonance_frequency(&frame);
    let damping = damping_term(&frame, eta);
    let branch_of = |w: f64| match resonance {
        Some(r) if w > r => 1,
        _ => 0,
    };
    let critical = |w: f64| {
        let g = forcing_coefficient(&frame, w);
        if g == 0.0 {
            f64::INFINITY
        } else {
            -damping / g
        }
    };

    let mut points = Vec::with_capacity(n_points + 1);
    let mut marker_pending = resonance.filter(|r| *r > lo && *r < hi);
    for i in 0..n_points {
        let w = lo + (hi - lo) * i as f64 / (n_points - 1) as f64;
        if let Some(r) = marker_pending {
            if w >= r {
                if w > r {
                    points.push(CurvePoint { omega: r, de1_critical: f64::INFINITY, branch: 1 });
                }
                marker_pending = None;
            }
        }
        let on_resonance = resonance == Some(w);
        points.push(CurvePoint {
            omega: w,
            de1_critical: if on_resonance { f64::INFINITY } else { critical(w) },
            branch: branch_of(w),
        });
    }
    Ok(StabilityCurve { points, resonance, lambda, h, eta, c0 })
}

/// Number of sign changes of `cos(omega c0 / kappa)` on an `n`-point grid.
///
/// Each change marks an extra zero of the forcing coefficient, so the count tracks
/// how densely the stability curves fold over the frequency axis.
pub fn phase_sign_changes(c0: f64, kappa: f64, omega_range: (f64, f64), n: usize) -> usize {
    let (lo, hi) = omega_range;
    let sign = |w: f64| (w * c0 / kappa).cos() >= 0.0;
    let mut changes = 0;
    let mut prev = sign(lo);
    for i in 1..n {
        let s = sign(lo + (hi - lo) * i as f64 / (n - 1) as f64);
        if s != prev {
            changes += 1;
        }
        prev = s;
    }
    changes
}
