use approx::assert_abs_diff_eq;
use bjj_core::model::{
    effective_energy, effective_potential, hamiltonian, rhs, DampingKind, EffectiveState, PhaseState, TrapParams,
};
use proptest::prelude::*;

fn conservative(lambda: f64, de0: f64) -> TrapParams {
    TrapParams::conservative(lambda, de0).with_damping(DampingKind::None)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    // dz/dt = -dH/dphi and dphi/dt = dH/dz.
    #[test]
    fn rates_are_canonical(lambda in 0.0..20.0f64, de0 in -3.0..3.0f64, z in -0.95..0.95f64, phi in -6.0..6.0f64) {
        let p = conservative(lambda, de0);
        let (dz, dphi) = rhs(&p, &PhaseState::new(0.0, z, phi)).unwrap();
        let h = 1e-6;
        let dh_dz = (hamiltonian(&p, z + h, phi, 0.0) - hamiltonian(&p, z - h, phi, 0.0)) / (2.0 * h);
        let dh_dphi = (hamiltonian(&p, z, phi + h, 0.0) - hamiltonian(&p, z, phi - h, 0.0)) / (2.0 * h);
        let scale = 1.0 + dh_dz.abs() + dh_dphi.abs();
        prop_assert!((dz + dh_dphi).abs() < 1e-7 * scale);
        prop_assert!((dphi - dh_dz).abs() < 1e-7 * scale);
    }

    #[test]
    fn symmetric_trap_rates_are_odd(lambda in 0.0..20.0f64, z in -0.99..0.99f64, phi in -6.0..6.0f64) {
        let p = conservative(lambda, 0.0);
        let (dz, dphi) = rhs(&p, &PhaseState::new(0.0, z, phi)).unwrap();
        let (mz, mphi) = rhs(&p, &PhaseState::new(0.0, -z, -phi)).unwrap();
        prop_assert_eq!(mz, -dz);
        prop_assert_eq!(mphi, -dphi);
    }

    #[test]
    fn effective_particle_energy(lambda in 0.0..20.0f64, de0 in -3.0..3.0f64, z in -0.99..0.99f64, phi in -6.0..6.0f64) {
        let p = conservative(lambda, de0);
        let s = PhaseState::new(0.0, z, phi);
        let e = EffectiveState::from_state(&p, &s).unwrap();
        let lhs = 0.5 * e.p_z * e.p_z + effective_potential(lambda, e.h, de0, z);
        let scale = 1.0 + (lambda * lambda + de0 * de0) * z * z;
        prop_assert!((lhs - effective_energy(e.h)).abs() < 1e-12 * scale);
    }

    #[test]
    fn rates_are_finite_inside_the_guard(lambda in -20.0..20.0f64, z in -0.999_999..0.999_999f64, phi in -1e3..1e3f64) {
        let p = TrapParams::driven(lambda, 2.0, 3.0, 0.4);
        let (dz, dphi) = rhs(&p, &PhaseState::new(1.3, z, phi)).unwrap();
        prop_assert!(dz.is_finite() && dphi.is_finite());
    }
}

#[test]
fn damping_placements_differ_only_by_the_eta_term() {
    let base = TrapParams::driven(10.0, 1.0, 2.0, 0.3);
    let s = PhaseState::new(0.4, 0.3, 0.7);
    let (dz0, dphi0) = rhs(&base.with_damping(DampingKind::None), &s).unwrap();
    let (dz_pop, dphi_pop) = rhs(&base.with_damping(DampingKind::PopulationRelaxation), &s).unwrap();
    let (dz_vel, dphi_vel) = rhs(&base.with_damping(DampingKind::VelocityDamping), &s).unwrap();
    assert_abs_diff_eq!(dz_pop, dz0 - 0.3 * 0.3, epsilon = 1e-15);
    assert_eq!(dphi_pop, dphi0);
    assert_eq!(dz_vel, dz0);
    assert_abs_diff_eq!(dphi_vel, dphi0 - 0.3 * dz0, epsilon = 1e-15);
}
