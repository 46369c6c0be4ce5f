//! Complex two-mode amplitudes, integrated directly as a cross-check of the
//! reduced `(z, phi)` equations.
//!
//! Amplitudes are normalized to `|a1|^2 + |a2|^2 = 1` and evolve as
//!
//! ```text
//! i da1/dt = (eps1 + lambda |a1|^2) a1 - a2 / 2
//! i da2/dt = (eps2 + lambda |a2|^2) a2 - a1 / 2
//! ```
//!
//! with `eps1 - eps2 = dE(t)` split symmetrically. This stepping is fixed-step
//! and shares nothing with the adaptive controller beyond the RK4 kernel.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::integrator::{integrate_adaptive, step_rk4, StepControl};
use crate::model::{PhaseState, TrapParams};

/// Default fixed step of the two-mode integration.
pub const DEFAULT_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoModeState {
    pub t: f64,
    pub a1: Complex64,
    pub a2: Complex64,
}

impl TwoModeState {
    /// Amplitudes with imbalance `z` and relative phase `phi` (well 1 carries zero phase).
    pub fn from_phase(t: f64, z: f64, phi: f64) -> Self {
        let n1 = (0.5 * (1.0 + z)).max(0.0);
        let n2 = (0.5 * (1.0 - z)).max(0.0);
        Self {
            t,
            a1: Complex64::new(n1.sqrt(), 0.0),
            a2: Complex64::from_polar(n2.sqrt(), phi),
        }
    }

    pub fn norm(&self) -> f64 {
        self.a1.norm_sqr() + self.a2.norm_sqr()
    }

    fn to_array(self) -> [f64; 4] {
        [self.a1.re, self.a1.im, self.a2.re, self.a2.im]
    }

    fn from_array(t: f64, y: &[f64; 4]) -> Self {
        Self {
            t,
            a1: Complex64::new(y[0], y[1]),
            a2: Complex64::new(y[2], y[3]),
        }
    }
}

fn conservative_only(p: &TrapParams) -> Result<()> {
    if p.effective_eta() != 0.0 {
        return Err(Error::invalid("eta", "the two-mode oracle covers undamped dynamics only"));
    }
    Ok(())
}

/// Time derivatives `(da1/dt, da2/dt)`.
pub fn twomode_rhs(p: &TrapParams, s: &TwoModeState) -> Result<(Complex64, Complex64)> {
    conservative_only(p)?;
    Ok(rates(p, s))
}

fn rates(p: &TrapParams, s: &TwoModeState) -> (Complex64, Complex64) {
    let half_de = 0.5 * p.asymmetry(s.t);
    let minus_i = Complex64::new(0.0, -1.0);
    let d1 = minus_i * ((half_de + p.lambda * s.a1.norm_sqr()) * s.a1 - 0.5 * s.a2);
    let d2 = minus_i * ((-half_de + p.lambda * s.a2.norm_sqr()) * s.a2 - 0.5 * s.a1);
    (d1, d2)
}

/// Imbalance and relative phase of a two-mode state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub z: f64,
    /// `arg(a2) - arg(a1)`; `None` when either amplitude vanishes.
    pub phi: Option<f64>,
}

pub fn project(s: &TwoModeState) -> Projection {
    let n1 = s.a1.norm_sqr();
    let n2 = s.a2.norm_sqr();
    let z = (n1 - n2) / (n1 + n2);
    let phi = (n1 > 0.0 && n2 > 0.0).then(|| (s.a2 * s.a1.conj()).arg());
    Projection { z, phi }
}

/// Projects and unwraps the phase to the branch nearest `previous`.
pub fn project_unwrapped(s: &TwoModeState, previous: f64) -> Projection {
    let mut proj = project(s);
    proj.phi = proj.phi.map(|raw| {
        let turns = ((previous - raw) / (2.0 * PI)).round();
        raw + turns * 2.0 * PI
    });
    proj
}

/// One projected sample of a two-mode run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoModeSample {
    pub t: f64,
    pub z: f64,
    pub phi: f64,
    pub norm: f64,
}

/// Fixed-step RK4 integration from `s0` to `t_end`, recording every `sample_dt`.
///
/// The step is reduced to divide `sample_dt` evenly.
pub fn integrate_twomode(
    p: &TrapParams,
    s0: TwoModeState,
    t_end: f64,
    step: f64,
    sample_dt: f64,
) -> Result<Vec<TwoModeSample>> {
    conservative_only(p)?;
    p.validate()?;
    if !(t_end > s0.t) {
        return Err(Error::invalid("t_end", "must exceed the start time"));
    }
    if !(step > 0.0 && sample_dt > 0.0) {
        return Err(Error::invalid("step", "step and sample_dt must be > 0"));
    }
    let substeps = (sample_dt / step).ceil().max(1.0) as usize;
    let h = sample_dt / substeps as f64;
    let f = |t: f64, y: &[f64; 4]| {
        let (d1, d2) = rates(p, &TwoModeState::from_array(t, y));
        Ok([d1.re, d1.im, d2.re, d2.im])
    };

    let mut y = s0.to_array();
    let mut phi = project(&s0).phi.unwrap_or(0.0);
    let mut out = vec![TwoModeSample { t: s0.t, z: project(&s0).z, phi, norm: s0.norm() }];
    let mut k = 1u64;
    let mut t_prev = s0.t;
    loop {
        let target = (s0.t + k as f64 * sample_dt).min(t_end);
        let n = ((target - t_prev) / h).round().max(1.0) as usize;
        let h_k = (target - t_prev) / n as f64;
        for j in 0..n {
            y = step_rk4(f, t_prev + j as f64 * h_k, &y, h_k)?;
        }
        let s = TwoModeState::from_array(target, &y);
        let proj = project_unwrapped(&s, phi);
        phi = proj.phi.unwrap_or(phi);
        out.push(TwoModeSample { t: target, z: proj.z, phi, norm: s.norm() });
        if target >= t_end {
            break;
        }
        t_prev = target;
        k += 1;
    }
    Ok(out)
}

/// Agreement between the reduced integrator and the two-mode oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossCheck {
    pub max_dz: f64,
    pub max_norm_drift: f64,
    pub samples: usize,
}

/// Runs both integrations from `s0` and compares `z` on a common grid.
pub fn crosscheck(
    p: &TrapParams,
    s0: PhaseState,
    t_end: f64,
    ctl: StepControl,
    sample_dt: f64,
) -> Result<CrossCheck> {
    let reduced = integrate_adaptive(p, s0, t_end, ctl, Some(sample_dt))?;
    let oracle = integrate_twomode(p, TwoModeState::from_phase(s0.t, s0.z, s0.phi), t_end, DEFAULT_STEP, sample_dt)?;
    debug_assert_eq!(reduced.samples.len(), oracle.len());
    let max_dz = reduced
        .samples
        .iter()
        .zip(&oracle)
        .map(|(a, b)| (a.z - b.z).abs())
        .fold(0.0, f64::max);
    let max_norm_drift = oracle.iter().map(|s| (s.norm - 1.0).abs()).fold(0.0, f64::max);
    Ok(CrossCheck {
        max_dz,
        max_norm_drift,
        samples: oracle.len(),
    })
}
