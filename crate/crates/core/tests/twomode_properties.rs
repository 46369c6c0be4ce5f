use std::f64::consts::PI;

use bjj_core::integrator::StepControl;
use bjj_core::model::{DampingKind, PhaseState, TrapParams};
use bjj_core::twomode::{crosscheck, integrate_twomode, project, TwoModeState, DEFAULT_STEP};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn norm_is_conserved(
        lambda in 0.0..12.0f64,
        de0 in -1.0..1.0f64,
        de1 in 0.0..3.0f64,
        omega in 0.5..4.0 * PI,
        z0 in -0.95..0.95f64,
        phi0 in -PI..PI,
    ) {
        let p = TrapParams { de0, de1, omega, eta: 0.0, damping: DampingKind::None, ..TrapParams::conservative(lambda, 0.0) };
        let run = integrate_twomode(&p, TwoModeState::from_phase(0.0, z0, phi0), 20.0, DEFAULT_STEP, 0.5).unwrap();
        let drift = run.iter().map(|s| (s.norm - 1.0).abs()).fold(0.0, f64::max);
        prop_assert!(drift < 1e-9, "norm drift {drift:e}");
    }

    #[test]
    fn phase_encoding_round_trips(z in -0.99..0.99f64, phi in -3.1..3.1f64) {
        let proj = project(&TwoModeState::from_phase(0.0, z, phi));
        prop_assert!((proj.z - z).abs() < 1e-14);
        prop_assert!((proj.phi.unwrap() - phi).abs() < 1e-14);
    }

    #[test]
    fn static_traps_agree_with_the_reduced_model(
        lambda in 0.5..12.0f64,
        de0 in -1.0..1.0f64,
        z0 in -0.8..0.8f64,
        phi0 in -PI..PI,
    ) {
        let p = TrapParams::conservative(lambda, de0);
        let check = crosscheck(&p, PhaseState::at_rest(z0, phi0), 50.0, StepControl::default(), 0.05).unwrap();
        prop_assert!(check.max_dz < 1e-6, "max |dz| {:e}", check.max_dz);
    }
}
