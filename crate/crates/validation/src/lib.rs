//! Acceptance checks for the junction model, one function per criterion.
//!
//! Each check runs its own scenario and returns a [`Verdict`] carrying the measured
//! quantities. Randomized checks draw from a fixed-seed ChaCha stream so every run
//! sees the same parameter sets.

use std::f64::consts::PI;

use bjj_core::analysis::{
    detect_frequency_locking, lyapunov_estimate, positive_fraction, section_diameter, time_average_z,
    trajectory_spectrum, AttractorKind, LockingParams, Window,
};
use bjj_core::integrator::{integrate_adaptive, sample_stroboscopic, StepControl};
use bjj_core::melnikov::{
    duffing_residual, melnikov_closed, melnikov_numeric, separatrix_derivatives, stability_curve, PerturbationSpec,
    SeparatrixFrame,
};
use bjj_core::model::{classify_regime, hamiltonian, DampingKind, Motion, PhaseState, TrapParams};
use bjj_core::twomode::crosscheck;
use bjj_core::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Outcome of one criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self { passed, detail: detail.into() }
    }
}

/// A numbered acceptance criterion.
pub struct Criterion {
    pub id: u32,
    pub name: &'static str,
    pub check: fn() -> Result<Verdict>,
}

pub const CRITERIA: [Criterion; 10] = [
    Criterion { id: 1, name: "energy conservation", check: conservation },
    Criterion { id: 2, name: "two-mode oracle equivalence", check: oracle_equivalence },
    Criterion { id: 3, name: "separatrix Duffing residual", check: separatrix_residual },
    Criterion { id: 4, name: "Melnikov closed form vs quadrature", check: melnikov_equivalence },
    Criterion { id: 5, name: "regime classification", check: regime_classification },
    Criterion { id: 6, name: "chaos onset (omega = 4 pi, z0 = 0.5)", check: chaos_onset },
    Criterion { id: 7, name: "loss of localization (omega = 2 pi, z0 = 0.75)", check: loss_of_localization },
    Criterion { id: 8, name: "power spectra", check: spectra },
    Criterion { id: 9, name: "frequency locking", check: frequency_locking },
    Criterion { id: 10, name: "stability-curve consistency", check: stability_curves },
];

const SEED: u64 = 0x5eed_b11;

/// Stroboscopic horizon for the undamped chaos checks.
pub const UNDAMPED_PERIODS: usize = 5000;

fn rng(stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(SEED);
    r.set_stream(stream);
    r
}

fn undamped(lambda: f64, de1: f64, omega_pi: f64) -> TrapParams {
    TrapParams::driven(lambda, de1, omega_pi, 0.0).with_damping(DampingKind::None)
}

pub fn conservation() -> Result<Verdict> {
    let p = TrapParams::conservative(10.0, 0.0);
    let traj = integrate_adaptive(&p, PhaseState::at_rest(0.5, 0.0), 100.0, StepControl::default(), Some(0.05))?;
    let h0 = hamiltonian(&p, 0.5, 0.0, 0.0);
    let drift = traj
        .samples
        .iter()
        .map(|s| (hamiltonian(&p, s.z, s.phi, s.t) - h0).abs())
        .fold(0.0, f64::max);
    Ok(Verdict::new(drift < 1e-8, format!("max |dH| = {drift:.3e} (limit 1e-8)")))
}

pub fn oracle_equivalence() -> Result<Verdict> {
    let mut r = rng(2);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let p = TrapParams {
            lambda: r.gen_range(0.5..12.0),
            de0: r.gen_range(-1.0..1.0),
            de1: 0.0,
            omega: 0.0,
            eta: 0.0,
            damping: DampingKind::None,
        };
        let s0 = PhaseState::at_rest(r.gen_range(-0.8..0.8), r.gen_range(-PI..PI));
        let check = crosscheck(&p, s0, 50.0, StepControl::for_trap(&p), 0.05)?;
        worst = worst.max(check.max_dz);
    }
    Ok(Verdict::new(worst < 1e-6, format!("worst max |dz| over 5 sets = {worst:.3e} (limit 1e-6)")))
}

fn random_frame(r: &mut ChaCha8Rng) -> Result<SeparatrixFrame> {
    let lambda = r.gen_range(0.5..12.0);
    let lh = r.gen_range(1.1..=4.0);
    SeparatrixFrame::new(lambda, lh / lambda, r.gen_range(-3.0..3.0))
}

pub fn separatrix_residual() -> Result<Verdict> {
    let mut r = rng(3);
    let quiet = PerturbationSpec::default();
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let f = random_frame(&mut r)?;
        for k in 0..1000 {
            let xi = -20.0 + 40.0 * k as f64 / 999.0;
            let t = f.time_of(xi);
            let (z, dz, d2z) = separatrix_derivatives(&f, t);
            worst = worst.max(duffing_residual(&f, &quiet, z, dz, d2z, t).abs());
        }
    }
    Ok(Verdict::new(worst < 1e-8, format!("max |residual| over 10 frames x 1000 times = {worst:.3e}")))
}

pub fn melnikov_equivalence() -> Result<Verdict> {
    let mut r = rng(4);
    let mut worst_rel = 0.0f64;
    let mut worst_shift = 0.0f64;
    for _ in 0..100 {
        let f = random_frame(&mut r)?;
        let pert = PerturbationSpec {
            de0: r.gen_range(-2.0..2.0),
            de1: r.gen_range(0.0..5.0),
            omega: r.gen_range(1e-3..8.0 * PI),
            eta: r.gen_range(0.0..1.0),
        };
        let numeric = melnikov_numeric(&f, &pert)?;
        let closed = melnikov_closed(&f, &pert);
        worst_rel = worst_rel.max((closed - numeric).abs() / numeric.abs().max(1.0));

        let shifted = PerturbationSpec { de0: pert.de0 + r.gen_range(-3.0..3.0), ..pert };
        let numeric_shifted = melnikov_numeric(&f, &shifted)?;
        let closed_shifted = melnikov_closed(&f, &shifted);
        if closed_shifted != closed {
            return Ok(Verdict::new(false, "closed form changed with the static asymmetry"));
        }
        worst_shift = worst_shift.max((numeric_shifted - numeric).abs());
    }
    let passed = worst_rel <= 1e-6 && worst_shift <= 1e-10;
    Ok(Verdict::new(
        passed,
        format!("worst relative gap = {worst_rel:.3e} (limit 1e-6), worst static-asymmetry shift = {worst_shift:.3e}"),
    ))
}

pub fn regime_classification() -> Result<Verdict> {
    let p = TrapParams::conservative(10.0, 0.0);
    let rabi = classify_regime(&p, 0.5, 0.0).motion;
    let mqst = classify_regime(&p, 0.75, 0.0).motion;

    let ctl = StepControl::default();
    let trapped = integrate_adaptive(&p, PhaseState::at_rest(0.75, 0.0), 1000.0, ctl, Some(0.01))?;
    let sign_kept = trapped.samples.iter().all(|s| s.z > 0.0);
    let free = integrate_adaptive(&p, PhaseState::at_rest(0.5, 0.0), 1000.0, ctl, Some(0.01))?;
    let mean = time_average_z(&free, 0.0)?;

    let passed = rabi == Motion::RabiOscillation && mqst == Motion::SelfTrapped && sign_kept && mean.abs() < 1e-3;
    Ok(Verdict::new(
        passed,
        format!("z0=0.5 -> {rabi:?}, z0=0.75 -> {mqst:?}, trapped sign kept = {sign_kept}, Rabi <z> = {mean:.3e}"),
    ))
}

struct UndampedRun {
    diameter: f64,
    positive: f64,
    mean_z: f64,
    lyapunov: f64,
}

fn undamped_run(de1: f64, omega_pi: f64, z0: f64, with_lyapunov: bool) -> Result<UndampedRun> {
    let p = undamped(10.0, de1, omega_pi);
    let ctl = StepControl::for_trap(&p);
    let s0 = PhaseState::at_rest(z0, 0.0);
    let sec = sample_stroboscopic(&p, s0, UNDAMPED_PERIODS, ctl)?;
    let horizon = UNDAMPED_PERIODS as f64 * sec.drive_period;
    let traj = integrate_adaptive(&p, s0, horizon, ctl, Some(sec.drive_period / 40.0))?;
    let lyapunov = if with_lyapunov {
        lyapunov_estimate(&p, s0, horizon, sec.drive_period, 1e-8, ctl)?
    } else {
        f64::NAN
    };
    Ok(UndampedRun {
        diameter: section_diameter(&sec.points),
        positive: positive_fraction(&sec.points),
        mean_z: time_average_z(&traj, 0.0)?,
        lyapunov,
    })
}

pub fn chaos_onset() -> Result<Verdict> {
    let regular = undamped_run(3.0, 4.0, 0.5, true)?;
    let chaotic = undamped_run(7.5, 4.0, 0.5, true)?;
    let island = regular.diameter < 0.5 && regular.lyapunov <= 0.01;
    let sea = (chaotic.positive - 0.5).abs() < 0.1 && chaotic.lyapunov > 0.05 && chaotic.mean_z.abs() < 0.05;
    Ok(Verdict::new(
        island && sea,
        format!(
            "de1=3.0: diameter {:.3} (< 0.5), lyapunov {:.4} (<= 0.01); \
             de1=7.5: frac(z>0) {:.3}, lyapunov {:.4} (> 0.05), <z> {:.4} (|.| < 0.05); {} periods",
            regular.diameter,
            regular.lyapunov,
            chaotic.positive,
            chaotic.lyapunov,
            chaotic.mean_z,
            UNDAMPED_PERIODS
        ),
    ))
}

pub fn loss_of_localization() -> Result<Verdict> {
    let localized = undamped_run(1.0, 2.0, 0.75, false)?;
    let spread = undamped_run(1.7, 2.0, 0.75, false)?;
    let passed = localized.mean_z > 0.1 && spread.mean_z.abs() < 0.05;
    Ok(Verdict::new(
        passed,
        format!(
            "de1=1.0: <z> {:.4} (> 0.1); de1=1.7: <z> {:.4} (|.| < 0.05); {} periods",
            localized.mean_z, spread.mean_z, UNDAMPED_PERIODS
        ),
    ))
}

fn dominant_fraction(de1: f64, omega_pi: f64, z0: f64) -> Result<f64> {
    let p = undamped(10.0, de1, omega_pi);
    let period = p.drive_period().unwrap_or(1.0);
    let t_end = UNDAMPED_PERIODS as f64 * period;
    let traj = integrate_adaptive(&p, PhaseState::at_rest(z0, 0.0), t_end, StepControl::for_trap(&p), Some(0.01))?;
    Ok(trajectory_spectrum(&traj, Window::Hann)?.dominant_fraction())
}

pub fn spectra() -> Result<Verdict> {
    let regular = dominant_fraction(3.0, 4.0, 0.5)?;
    let chaotic = dominant_fraction(7.5, 4.0, 0.5)?;
    Ok(Verdict::new(
        regular > 0.5 && chaotic < 0.2,
        format!("dominant bin share: regular (de1=3.0) {regular:.3} (> 0.5), chaotic (de1=7.5) {chaotic:.3} (< 0.2)"),
    ))
}

struct LockCase {
    de1: f64,
    omega_pi: f64,
    eta: f64,
    z0: f64,
    n_periods: usize,
    discard: usize,
    order: usize,
    min_mean: Option<f64>,
}

pub fn frequency_locking() -> Result<Verdict> {
    let cases = [
        LockCase { de1: 3.0, omega_pi: 4.0, eta: 0.01, z0: 0.5, n_periods: 10_000, discard: 5000, order: 1, min_mean: None },
        LockCase { de1: 7.5, omega_pi: 4.0, eta: 0.01, z0: 0.5, n_periods: 10_000, discard: 5000, order: 5, min_mean: None },
        LockCase {
            de1: 1.7,
            omega_pi: 2.0,
            eta: 0.001,
            z0: 0.75,
            n_periods: 30_000,
            discard: 20_000,
            order: 6,
            min_mean: Some(0.05),
        },
    ];
    let mut passed = true;
    let mut parts = Vec::new();
    for c in &cases {
        let p = TrapParams::driven(10.0, c.de1, c.omega_pi, c.eta);
        let sec = sample_stroboscopic(&p, PhaseState::at_rest(c.z0, 0.0), c.n_periods, StepControl::for_trap(&p))?;
        let params = LockingParams { discard_periods: c.discard, ..LockingParams::default() };
        let report = detect_frequency_locking(&sec, &params)?;
        let ok = report.kind == AttractorKind::FixedCycle(c.order)
            && report.transient_periods > 0
            && c.min_mean.map_or(true, |m| report.mean_z > m);
        passed &= ok;
        parts.push(format!(
            "de1={} eta={}: {:?}, transient {}, mean_z {:.4}",
            c.de1, c.eta, report.kind, report.transient_periods, report.mean_z
        ));
    }
    Ok(Verdict::new(passed, parts.join("; ")))
}

pub fn stability_curves() -> Result<Verdict> {
    let (lambda, h, c0) = (4.0, 0.5, 0.0);
    let etas = [0.1, 0.5, 1.0];
    let range = (0.05, 8.0 * PI);
    let curves = etas
        .iter()
        .map(|&eta| stability_curve(lambda, h, eta, c0, range, 400))
        .collect::<Result<Vec<_>>>()?;
    let frame = SeparatrixFrame::new(lambda, h, c0)?;

    let mut worst = 0.0f64;
    for c in &curves {
        for pt in c.points.iter().filter(|pt| !pt.is_asymptote()) {
            let pert = PerturbationSpec { de0: 0.0, de1: pt.de1_critical, omega: pt.omega, eta: c.eta };
            worst = worst.max(melnikov_closed(&frame, &pert).abs());
        }
    }

    let mut ordered = true;
    for pair in curves.windows(2) {
        for (lo, hi) in pair[0].points.iter().zip(&pair[1].points) {
            if !lo.is_asymptote() && !(hi.de1_critical.abs() > lo.de1_critical.abs()) {
                ordered = false;
            }
        }
    }

    let mut split = true;
    for c in &curves {
        let asymptotes = c.points.iter().filter(|pt| pt.is_asymptote()).count();
        let branch_flips = c.points.windows(2).filter(|w| w[0].branch != w[1].branch).count();
        split &= c.resonance.is_some() && asymptotes == 1 && branch_flips == 1;
    }

    Ok(Verdict::new(
        worst < 1e-9 && ordered && split,
        format!(
            "max |M| on curves = {worst:.3e} (< 1e-9), larger eta strictly higher = {ordered}, \
             single asymptote split = {split} at omega = {:?}",
            curves[0].resonance
        ),
    ))
}
