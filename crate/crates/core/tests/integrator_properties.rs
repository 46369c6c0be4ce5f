use std::f64::consts::PI;

use bjj_core::analysis::time_average_z;
use bjj_core::integrator::{integrate_adaptive, integrate_to, sample_stroboscopic, OdeSystem, StepControl};
use bjj_core::model::{classify_regime, hamiltonian, DampingKind, Motion, PhaseState, TrapParams};
use bjj_core::Result;
use proptest::prelude::*;

fn energy_drift(p: &TrapParams, s0: PhaseState, t_end: f64, ctl: StepControl) -> f64 {
    let traj = integrate_adaptive(p, s0, t_end, ctl, Some(0.1)).unwrap();
    let h0 = hamiltonian(p, s0.z, s0.phi, s0.t);
    traj.samples
        .iter()
        .map(|s| (hamiltonian(p, s.z, s.phi, s.t) - h0).abs())
        .fold(0.0, f64::max)
}

/// The field of `p` run backwards from `t_end`: `g(s, y) = -f(t_end - s, y)`.
struct Reversed {
    p: TrapParams,
    t_end: f64,
}

impl OdeSystem<2> for Reversed {
    fn rates(&self, s: f64, y: &[f64; 2]) -> Result<[f64; 2]> {
        let [dz, dphi] = self.p.rates(self.t_end - s, y)?;
        Ok([-dz, -dphi])
    }

    fn admissible(&self, y: &[f64; 2]) -> bool {
        self.p.admissible(y)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn conservative_runs_keep_energy(lambda in 0.5..12.0f64, de0 in -1.0..1.0f64, z0 in -0.8..0.8f64, phi0 in -PI..PI) {
        let p = TrapParams::conservative(lambda, de0);
        let drift = energy_drift(&p, PhaseState::at_rest(z0, phi0), 100.0, StepControl::default());
        let h0 = hamiltonian(&p, z0, phi0, 0.0);
        prop_assert!(drift < 1e-8 * h0.abs().max(1.0), "drift {drift:e}, H0 {h0}");
    }

    #[test]
    fn reversed_field_returns_to_start(
        lambda in 0.5..12.0f64,
        de0 in -1.0..1.0f64,
        de1 in 0.0..1.0f64,
        z0 in -0.8..0.8f64,
        phi0 in -PI..PI,
    ) {
        let p = TrapParams { de0, de1, omega: 2.0, ..TrapParams::conservative(lambda, 0.0) };
        // One drive period; longer spans near the saddle at (0, pi) amplify rounding by e^(sqrt(lambda - 1) t).
        let t_end = PI;
        let ctl = StepControl::for_trap(&p);
        let forward = integrate_to(&p, 0.0, [z0, phi0], t_end, ctl).unwrap();
        let back = integrate_to(&Reversed { p, t_end }, 0.0, forward, t_end, ctl).unwrap();
        prop_assert!((back[0] - z0).abs() < 1e-6 && (back[1] - phi0).abs() < 1e-6, "{back:?} vs ({z0}, {phi0})");
    }
}

#[test]
fn halving_the_tolerance_does_not_increase_drift() {
    let p = TrapParams::conservative(10.0, 0.0);
    let h0 = hamiltonian(&p, 0.5, 0.0, 0.0);
    let mut previous = f64::INFINITY;
    let mut tol = 1e-8;
    while tol > 1e-12 {
        let y = integrate_to(&p, 0.0, [0.5, 0.0], 100.0, StepControl::default().with_tolerance(tol)).unwrap();
        let drift = (hamiltonian(&p, y[0], y[1], 100.0) - h0).abs();
        assert!(drift <= previous, "tol {tol:e}: drift {drift:e} > {previous:e}");
        previous = drift;
        tol *= 0.5;
    }
}

#[test]
fn identical_inputs_give_identical_trajectories() {
    let p = TrapParams::driven(10.0, 7.5, 4.0, 0.0);
    let run = || integrate_adaptive(&p, PhaseState::at_rest(0.5, 0.0), 40.0, StepControl::for_trap(&p), Some(0.01)).unwrap();
    let (a, b) = (run(), run());
    assert_eq!(a.samples.len(), b.samples.len());
    for (x, y) in a.samples.iter().zip(&b.samples) {
        assert_eq!(x.z.to_bits(), y.z.to_bits());
        assert_eq!(x.phi.to_bits(), y.phi.to_bits());
    }
}

#[test]
fn section_lands_on_drive_multiples() {
    let p = TrapParams::driven(10.0, 3.0, 4.0, 0.01);
    let sec = sample_stroboscopic(&p, PhaseState::at_rest(0.5, 0.0), 200, StepControl::for_trap(&p)).unwrap();
    let period = 0.5;
    for pt in &sec.points {
        assert!((pt.t - pt.n as f64 * period).abs() <= 1e-12 * period, "point {}: t = {}", pt.n, pt.t);
    }
}

#[test]
fn sampled_dz_dt_matches_the_rates() {
    let p = TrapParams::driven(10.0, 1.7, 2.0, 0.001);
    let traj = integrate_adaptive(&p, PhaseState::at_rest(0.75, 0.0), 20.0, StepControl::for_trap(&p), Some(0.05)).unwrap();
    for s in &traj.samples {
        let [dz, _] = p.rates(s.t, &[s.z, s.phi]).unwrap();
        assert!((s.dz_dt - dz).abs() <= 1e-12);
    }
    assert!(traj.samples.windows(2).all(|w| w[1].t > w[0].t));
}

#[test]
fn self_trapped_run_keeps_its_sign() {
    let p = TrapParams::conservative(10.0, 0.0).with_damping(DampingKind::None);
    assert_eq!(classify_regime(&p, 0.75, 0.0).motion, Motion::SelfTrapped);
    let traj = integrate_adaptive(&p, PhaseState::at_rest(0.75, 0.0), 1000.0, StepControl::default(), Some(0.01)).unwrap();
    assert!(traj.samples.iter().all(|s| s.z > 0.0));
    assert!(time_average_z(&traj, 0.0).unwrap() > 0.5);
}

#[test]
fn rabi_run_averages_to_zero() {
    let p = TrapParams::conservative(10.0, 0.0);
    assert_eq!(classify_regime(&p, 0.5, 0.0).motion, Motion::RabiOscillation);
    let traj = integrate_adaptive(&p, PhaseState::at_rest(0.5, 0.0), 1000.0, StepControl::default(), Some(0.01)).unwrap();
    assert!(time_average_z(&traj, 0.0).unwrap().abs() < 1e-3);
    assert!(traj.samples.iter().any(|s| s.z < -0.4));
}

#[test]
fn damping_relaxes_the_symmetric_trap_to_balance() {
    for z0 in [0.5, 0.8] {
        let p = TrapParams { eta: 0.5, damping: DampingKind::PopulationRelaxation, ..TrapParams::conservative(10.0, 0.0) };
        let y = integrate_to(&p, 0.0, [z0, 0.0], 200.0, StepControl::default()).unwrap();
        assert!(y[0].abs() < 1e-6, "z0 = {z0}: z(200) = {}", y[0]);
    }
}
