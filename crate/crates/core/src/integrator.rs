//! Classical fourth-order Runge-Kutta with step-doubling error control.
//!
//! Each step is taken once at `h` and twice at `h/2`; the difference of the two
//! results estimates the local error and the accepted state is the
//! Richardson-extrapolated fine result. Sampling times are hit by shortening
//! steps, never by interpolation.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{self, PhaseState, TrapParams, Z_GUARD};

/// A first-order system `dy/dt = f(t, y)` of fixed dimension.
pub trait OdeSystem<const N: usize> {
    fn rates(&self, t: f64, y: &[f64; N]) -> Result<[f64; N]>;

    /// Whether `y` lies in the domain where `rates` may be evaluated.
    fn admissible(&self, _y: &[f64; N]) -> bool {
        true
    }

    /// Size of component `i` used to scale the relative tolerance.
    fn magnitude(&self, i: usize, y: &[f64; N]) -> f64 {
        y[i].abs()
    }
}

impl OdeSystem<2> for TrapParams {
    fn rates(&self, t: f64, y: &[f64; 2]) -> Result<[f64; 2]> {
        let (dz, dphi) = model::rates(self, t, y[0], y[1])?;
        Ok([dz, dphi])
    }

    fn admissible(&self, y: &[f64; 2]) -> bool {
        y[0].abs() <= 1.0 - Z_GUARD && y[1].is_finite()
    }

    // The phase is kept unwrapped; its winding count says nothing about accuracy.
    fn magnitude(&self, i: usize, y: &[f64; 2]) -> f64 {
        if i == 1 {
            y[1].abs().min(PI)
        } else {
            y[i].abs()
        }
    }
}

fn axpy<const N: usize>(y: &[f64; N], a: f64, k: &[f64; N]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + a * k[i])
}

fn check_finite<const N: usize>(k: [f64; N], t: f64) -> Result<[f64; N]> {
    if k.iter().all(|v| v.is_finite()) {
        Ok(k)
    } else {
        Err(Error::NonFinite { t })
    }
}

/// One classical four-stage Runge-Kutta step of size `h` from `(t, y)`.
pub fn step_rk4<const N: usize, F>(mut f: F, t: f64, y: &[f64; N], h: f64) -> Result<[f64; N]>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let half = 0.5 * h;
    let k1 = check_finite(f(t, y)?, t)?;
    let k2 = check_finite(f(t + half, &axpy(y, half, &k1))?, t + half)?;
    let k3 = check_finite(f(t + half, &axpy(y, half, &k2))?, t + half)?;
    let k4 = check_finite(f(t + h, &axpy(y, h, &k3))?, t + h)?;
    Ok(std::array::from_fn(|i| {
        y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    }))
}

/// Tolerances and step bounds for the adaptive integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    /// Shrink factor applied to the optimal step estimate.
    pub safety: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            h_init: 1e-3,
            h_min: 1e-12,
            h_max: 2.0 * PI / 50.0,
            safety: 0.9,
        }
    }
}

impl StepControl {
    /// Defaults with `h_max` set to a fiftieth of the drive period.
    pub fn for_trap(p: &TrapParams) -> Self {
        let mut ctl = Self::default();
        if let Some(period) = p.drive_period() {
            ctl.h_max = period / 50.0;
            ctl.h_init = ctl.h_init.min(ctl.h_max);
        }
        ctl
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.abs_tol = tol;
        self.rel_tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) {
            return Err(Error::invalid("abs_tol", format!("must be > 0, got {}", self.abs_tol)));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::invalid("rel_tol", format!("must be > 0, got {}", self.rel_tol)));
        }
        if !(self.h_min > 0.0 && self.h_min <= self.h_init && self.h_init <= self.h_max) {
            return Err(Error::invalid(
                "h_init",
                format!(
                    "need 0 < h_min <= h_init <= h_max, got {} / {} / {}",
                    self.h_min, self.h_init, self.h_max
                ),
            ));
        }
        if !self.h_max.is_finite() {
            return Err(Error::invalid("h_max", "must be finite"));
        }
        if !(self.safety > 0.0 && self.safety < 1.0) {
            return Err(Error::invalid("safety", format!("must lie in (0, 1), got {}", self.safety)));
        }
        Ok(())
    }
}

/// Adaptive step-doubling RK4 driver holding the current state and step proposal.
#[derive(Debug, Clone)]
pub struct Stepper<'a, S, const N: usize> {
    sys: &'a S,
    ctl: StepControl,
    t: f64,
    y: [f64; N],
    h: f64,
    accepted: usize,
    rejected: usize,
}

impl<'a, S: OdeSystem<N>, const N: usize> Stepper<'a, S, N> {
    pub fn new(sys: &'a S, t0: f64, y0: [f64; N], ctl: StepControl) -> Result<Self> {
        ctl.validate()?;
        if !t0.is_finite() || y0.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("initial state", "must be finite"));
        }
        if !sys.admissible(&y0) {
            return Err(Error::invalid("initial state", format!("{y0:?} is outside the model domain")));
        }
        // Surface a bad initial point immediately rather than as a step underflow.
        sys.rates(t0, &y0)?;
        Ok(Self {
            sys,
            ctl,
            t: t0,
            y: y0,
            h: ctl.h_init,
            accepted: 0,
            rejected: 0,
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> &[f64; N] {
        &self.y
    }

    /// Replaces the current state, keeping time and step proposal.
    pub fn set_state(&mut self, y: [f64; N]) {
        self.y = y;
    }

    pub fn accepted_steps(&self) -> usize {
        self.accepted
    }

    pub fn rejected_steps(&self) -> usize {
        self.rejected
    }

    fn error_ratio(&self, coarse: &[f64; N], fine: &[f64; N]) -> f64 {
        (0..N)
            .map(|i| {
                let est = (fine[i] - coarse[i]).abs() / 15.0;
                let size = self.sys.magnitude(i, &self.y).max(self.sys.magnitude(i, fine));
                let scale = self.ctl.abs_tol + self.ctl.rel_tol * size;
                est / scale
            })
            .fold(0.0, f64::max)
    }

    fn trial(&self, h: f64) -> Result<([f64; N], f64)> {
        let f = |t: f64, y: &[f64; N]| self.sys.rates(t, y);
        let coarse = step_rk4(f, self.t, &self.y, h)?;
        let mid = step_rk4(f, self.t, &self.y, 0.5 * h)?;
        let fine = step_rk4(f, self.t + 0.5 * h, &mid, 0.5 * h)?;
        let extrapolated: [f64; N] = std::array::from_fn(|i| fine[i] + (fine[i] - coarse[i]) / 15.0);
        Ok((extrapolated, self.error_ratio(&coarse, &fine)))
    }

    /// Takes one accepted step without passing `t_limit`, landing on it exactly
    /// when the proposal would overshoot.
    pub fn step_toward(&mut self, t_limit: f64) -> Result<()> {
        let remaining = t_limit - self.t;
        if !(remaining > 0.0) {
            return Ok(());
        }
        let mut h = self.h.min(self.ctl.h_max);
        loop {
            let landing = remaining <= h * (1.0 + 1e-8);
            let h_try = if landing { remaining } else { h };
            let outcome = self.trial(h_try).and_then(|(y, ratio)| {
                if self.sys.admissible(&y) && y.iter().all(|v| v.is_finite()) {
                    Ok((y, ratio))
                } else {
                    Err(Error::Singularity { t: self.t + h_try, z: y[0], phi: y.get(1).copied().unwrap_or(f64::NAN) })
                }
            });
            match outcome {
                Ok((y, ratio)) if ratio <= 1.0 => {
                    self.t = if landing { t_limit } else { self.t + h_try };
                    self.y = y;
                    self.accepted += 1;
                    let grow = if ratio > 0.0 { ratio.powf(-0.2) } else { f64::INFINITY };
                    let proposal = (self.ctl.safety * h_try * grow).clamp(self.ctl.h_min, self.ctl.h_max);
                    // A shortened landing step says nothing about the usable step size.
                    self.h = if landing { proposal.max(h) } else { proposal };
                    return Ok(());
                }
                Ok((_, ratio)) => {
                    self.rejected += 1;
                    if h_try <= self.ctl.h_min {
                        return Err(self.underflow());
                    }
                    let shrink = (self.ctl.safety * ratio.powf(-0.2)).min(0.5);
                    h = (h_try * shrink).max(self.ctl.h_min);
                }
                Err(err @ (Error::Singularity { .. } | Error::NonFinite { .. })) => {
                    self.rejected += 1;
                    if h_try <= self.ctl.h_min {
                        return Err(match err {
                            Error::Singularity { .. } => err,
                            _ => self.underflow(),
                        });
                    }
                    h = (0.5 * h_try).max(self.ctl.h_min);
                }
                Err(other) => return Err(other),
            }
        }
    }

    /// Integrates until `t == t_target` exactly.
    pub fn advance_to(&mut self, t_target: f64) -> Result<()> {
        while self.t < t_target {
            self.step_toward(t_target)?;
        }
        Ok(())
    }

    fn underflow(&self) -> Error {
        Error::StepUnderflow {
            t: self.t,
            h_min: self.ctl.h_min,
            state: self.y.to_vec(),
        }
    }
}

/// Integrates a generic system from `(t0, y0)` to `t_end` and returns the final state.
pub fn integrate_to<S: OdeSystem<N>, const N: usize>(
    sys: &S,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    ctl: StepControl,
) -> Result<[f64; N]> {
    let mut stepper = Stepper::new(sys, t0, y0, ctl)?;
    stepper.advance_to(t_end)?;
    Ok(*stepper.state())
}

/// One stored point of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub z: f64,
    pub phi: f64,
    /// `dz/dt` evaluated from the rates at the stored state.
    pub dz_dt: f64,
}

/// Time-ordered samples of one integration together with its inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub params: TrapParams,
    pub initial: PhaseState,
    pub control: StepControl,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn z_values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.z).collect()
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory always holds its initial sample")
    }
}

fn sample_at(p: &TrapParams, t: f64, y: &[f64; 2]) -> Result<Sample> {
    let (dz_dt, _) = model::rates(p, t, y[0], y[1])?;
    Ok(Sample { t, z: y[0], phi: y[1], dz_dt })
}

/// Integrates the reduced model from `s0` to `t_end`.
///
/// With `sample_dt` set, samples are emitted at `s0.t + k * sample_dt` (plus `t_end`
/// itself); otherwise every accepted step is recorded.
pub fn integrate_adaptive(
    p: &TrapParams,
    s0: PhaseState,
    t_end: f64,
    ctl: StepControl,
    sample_dt: Option<f64>,
) -> Result<Trajectory> {
    p.validate()?;
    if !(t_end > s0.t) {
        return Err(Error::invalid("t_end", format!("must exceed the start time {}, got {t_end}", s0.t)));
    }
    if let Some(dt) = sample_dt {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("sample_dt", format!("must be > 0, got {dt}")));
        }
    }
    let mut stepper = Stepper::new(p, s0.t, [s0.z, s0.phi], ctl)?;
    let mut samples = vec![sample_at(p, s0.t, stepper.state())?];
    match sample_dt {
        None => {
            while stepper.t() < t_end {
                stepper.step_toward(t_end)?;
                samples.push(sample_at(p, stepper.t(), stepper.state())?);
            }
        }
        Some(dt) => {
            let mut k = 1u64;
            loop {
                let target = (s0.t + k as f64 * dt).min(t_end);
                stepper.advance_to(target)?;
                samples.push(sample_at(p, target, stepper.state())?);
                if target >= t_end {
                    break;
                }
                k += 1;
            }
        }
    }
    Ok(Trajectory {
        samples,
        params: *p,
        initial: s0,
        control: ctl,
    })
}

/// One stroboscopic sample taken at `t = t0 + n T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionPoint {
    pub n: usize,
    pub t: f64,
    pub z: f64,
    pub dz_dt: f64,
}

/// Stroboscopic Poincare section: `(z, dz/dt)` once per drive period.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionPoints {
    pub points: Vec<SectionPoint>,
    pub drive_period: f64,
}

impl SectionPoints {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points with period index `>= from`.
    pub fn tail(&self, from: usize) -> &[SectionPoint] {
        let start = self.points.iter().position(|p| p.n >= from).unwrap_or(self.points.len());
        &self.points[start..]
    }
}

/// Samples `(z, dz/dt)` at every multiple of the drive period for `n_periods` periods.
pub fn sample_stroboscopic(
    p: &TrapParams,
    s0: PhaseState,
    n_periods: usize,
    ctl: StepControl,
) -> Result<SectionPoints> {
    p.validate()?;
    let period = p
        .drive_period()
        .ok_or_else(|| Error::invalid("omega", format!("must be > 0 for a stroboscopic section, got {}", p.omega)))?;
    let mut stepper = Stepper::new(p, s0.t, [s0.z, s0.phi], ctl)?;
    let mut points = Vec::with_capacity(n_periods + 1);
    for n in 0..=n_periods {
        let t = s0.t + n as f64 * period;
        stepper.advance_to(t)?;
        let y = stepper.state();
        let (dz_dt, _) = model::rates(p, t, y[0], y[1])?;
        points.push(SectionPoint { n, t, z: y[0], dz_dt });
    }
    Ok(SectionPoints {
        points,
        drive_period: period,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rk4_trivial_fields() {
        let y = step_rk4(|_, _| Ok([0.0, 0.0]), 0.0, &[1.5, -2.0], 0.3).unwrap();
        assert_eq!(y, [1.5, -2.0]);
        let y = step_rk4(|_, _| Ok([1.0]), 0.0, &[2.0], 0.25).unwrap();
        assert_abs_diff_eq!(y[0], 2.25, epsilon = 1e-15);
    }

    #[test]
    fn rk4_exponential_decay() {
        let y = step_rk4(|_, y: &[f64; 1]| Ok([-y[0]]), 0.0, &[1.0], 0.1).unwrap();
        assert!((y[0] - (-0.1f64).exp()).abs() < 1e-7);
    }

    #[test]
    fn rk4_rejects_non_finite_stage() {
        let err = step_rk4(|t, _| Ok([if t > 0.0 { f64::NAN } else { 1.0 }]), 0.0, &[0.0], 0.1).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    #[test]
    fn rk4_global_error_is_fourth_order() {
        let run = |n: usize| {
            let h = 1.0 / n as f64;
            let mut y = [1.0];
            for k in 0..n {
                y = step_rk4(|_, y: &[f64; 1]| Ok([-y[0]]), k as f64 * h, &y, h).unwrap();
            }
            (y[0] - (-1.0f64).exp()).abs()
        };
        let ratio = run(20) / run(40);
        assert!((ratio - 16.0).abs() < 1.0, "error ratio {ratio}");
    }

    #[test]
    fn control_validation() {
        assert!(StepControl::default().validate().is_ok());
        let bad = StepControl { h_min: 1.0, ..StepControl::default() };
        assert!(bad.validate().is_err());
        let bad = StepControl { safety: 1.0, ..StepControl::default() };
        assert!(bad.validate().is_err());
        let bad = StepControl { abs_tol: 0.0, ..StepControl::default() };
        assert!(bad.validate().is_err());
        let ctl = StepControl::for_trap(&TrapParams::driven(10.0, 3.0, 4.0, 0.0));
        assert_abs_diff_eq!(ctl.h_max, 0.5 / 50.0, epsilon = 1e-15);
    }

    #[test]
    fn fixed_point_stays_put() {
        let p = TrapParams::conservative(10.0, 0.0);
        let traj = integrate_adaptive(&p, PhaseState::at_rest(0.0, 0.0), 20.0, StepControl::default(), Some(0.5)).unwrap();
        assert!(traj.samples.iter().all(|s| s.z == 0.0 && s.phi == 0.0 && s.dz_dt == 0.0));
        assert_eq!(traj.samples.len(), 41);
    }

    #[test]
    fn small_oscillation_without_interaction() {
        // Linearized: z'' = -z for lambda = 0, so z(t) = z0 cos t.
        let p = TrapParams::conservative(0.0, 0.0);
        let traj = integrate_adaptive(&p, PhaseState::at_rest(0.01, 0.0), 2.0 * PI, StepControl::default(), Some(0.05)).unwrap();
        for s in &traj.samples {
            assert!((s.z - 0.01 * s.t.cos()).abs() < 1e-4, "t={} z={}", s.t, s.z);
        }
    }

    #[test]
    fn samples_land_on_grid() {
        let p = TrapParams::driven(10.0, 3.0, 4.0, 0.0);
        let traj = integrate_adaptive(&p, PhaseState::at_rest(0.5, 0.0), 3.3, StepControl::for_trap(&p), Some(0.1)).unwrap();
        for (k, s) in traj.samples.iter().enumerate().take(traj.samples.len() - 1) {
            assert_eq!(s.t, k as f64 * 0.1);
        }
        assert_eq!(traj.last().t, 3.3);
        for w in traj.samples.windows(2) {
            assert!(w[1].t > w[0].t);
        }
        for s in &traj.samples {
            let (dz, _) = model::rhs(&p, &PhaseState::new(s.t, s.z, s.phi)).unwrap();
            assert_eq!(dz, s.dz_dt);
        }
    }

    #[test]
    fn rejects_bad_requests() {
        let p = TrapParams::conservative(1.0, 0.0);
        let s0 = PhaseState::at_rest(0.2, 0.0);
        assert!(integrate_adaptive(&p, s0, 0.0, StepControl::default(), None).is_err());
        assert!(integrate_adaptive(&p, s0, 1.0, StepControl::default(), Some(-1.0)).is_err());
        assert!(integrate_adaptive(&p, PhaseState::at_rest(1.0, 0.0), 1.0, StepControl::default(), None).is_err());
        assert!(sample_stroboscopic(&p, s0, 3, StepControl::default()).is_err());
    }

    #[test]
    fn step_underflow_is_reported() {
        struct Blowup;
        impl OdeSystem<1> for Blowup {
            fn rates(&self, _t: f64, y: &[f64; 1]) -> Result<[f64; 1]> {
                Ok([y[0] * y[0]])
            }
        }
        let ctl = StepControl { h_min: 1e-6, ..StepControl::default() };
        let err = integrate_to(&Blowup, 0.0, [1.0], 2.0, ctl).unwrap_err();
        assert!(matches!(err, Error::StepUnderflow { .. } | Error::NonFinite { .. }), "{err:?}");
    }

    #[test]
    fn stroboscopic_fixed_point() {
        let p = TrapParams { omega: 4.0 * PI, ..TrapParams::conservative(10.0, 0.0) };
        let sec = sample_stroboscopic(&p, PhaseState::at_rest(0.0, 0.0), 10, StepControl::for_trap(&p)).unwrap();
        assert_eq!(sec.len(), 11);
        assert!(sec.points.iter().all(|q| q.z == 0.0 && q.dz_dt == 0.0));
    }
}
