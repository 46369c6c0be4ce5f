//! One function per subcommand, each turning a resolved configuration into a report.

use bjj_core::analysis::{detect_frequency_locking, lyapunov_estimate, trajectory_spectrum, AttractorKind};
use bjj_core::integrator::{integrate_adaptive, sample_stroboscopic, Trajectory};
use bjj_core::melnikov::{
    melnikov_closed, melnikov_numeric, resonance_frequency, stability_curve, PerturbationSpec, SeparatrixFrame,
};
use bjj_core::model::{
    classify_regime, effective_energy, effective_potential, hamiltonian, separatrix_amplitude, Motion, PotentialShape,
};
use bjj_core::twomode::crosscheck;
use bjj_core::Result;
use serde_json::{Map, Value};

use crate::config::{format_real, RunConfig};
use crate::output::{count, number, Report, Table};

fn trajectory(cfg: &RunConfig) -> Result<Trajectory> {
    integrate_adaptive(&cfg.trap, cfg.initial, cfg.run.t_end, cfg.step, Some(cfg.run.sample_dt))
}

pub fn simulate(cfg: &RunConfig) -> Result<Report> {
    let traj = trajectory(cfg)?;
    let mut table = Table::new(&["t", "z", "phi", "dzdt"]);
    table.rows = traj
        .samples
        .iter()
        .map(|s| vec![format_real(s.t), format_real(s.z), format_real(s.phi), format_real(s.dz_dt)])
        .collect();
    Ok(Report::Table(table))
}

pub fn poincare(cfg: &RunConfig) -> Result<Report> {
    let sec = sample_stroboscopic(&cfg.trap, cfg.initial, cfg.run.n_periods, cfg.step)?;
    let mut table = Table::new(&["n", "z", "dzdt"]);
    table.note("drive_period", format_real(sec.drive_period));
    table.rows = sec
        .tail(cfg.run.discard)
        .iter()
        .map(|p| vec![p.n.to_string(), format_real(p.z), format_real(p.dz_dt)])
        .collect();
    Ok(Report::Table(table))
}

pub fn spectrum(cfg: &RunConfig) -> Result<Report> {
    let traj = trajectory(cfg)?;
    let spec = trajectory_spectrum(&traj, cfg.analysis.window)?;
    let mut table = Table::new(&["freq", "power"]);
    table.note("dominant_fraction", format_real(spec.dominant_fraction()));
    table.note("peak_frequency", format_real(spec.peak_frequency()));
    table.note("resolution", format_real(spec.resolution));
    table.rows = spec
        .freqs
        .iter()
        .zip(&spec.power)
        .map(|(f, p)| vec![format_real(*f), format_real(*p)])
        .collect();
    Ok(Report::Table(table))
}

pub fn attractor(cfg: &RunConfig) -> Result<Report> {
    let sec = sample_stroboscopic(&cfg.trap, cfg.initial, cfg.run.n_periods, cfg.step)?;
    let report = detect_frequency_locking(&sec, &cfg.locking())?;
    let mut out = Map::new();
    let (kind, order) = match report.kind {
        AttractorKind::FixedCycle(p) => ("FixedCycle", Value::from(p)),
        AttractorKind::Chaotic => ("Chaotic", Value::Null),
        AttractorKind::Undecided => ("Undecided", Value::Null),
    };
    out.insert("kind".into(), kind.into());
    out.insert("order".into(), order);
    out.insert("mean_z".into(), number(report.mean_z));
    out.insert("transient_periods".into(), count(report.transient_periods));
    let centers = report
        .cluster_centers
        .iter()
        .map(|&(z, dz)| Value::Array(vec![number(z), number(dz)]))
        .collect();
    out.insert("cluster_centers".into(), Value::Array(centers));
    out.insert("spread".into(), number(report.spread));
    out.insert("retained".into(), count(report.retained));
    out.insert("drive_period".into(), number(sec.drive_period));
    Ok(Report::Json(out))
}

fn frame(cfg: &RunConfig) -> Result<SeparatrixFrame> {
    SeparatrixFrame::new(cfg.trap.lambda, cfg.separatrix.energy, cfg.separatrix.c0)
}

pub fn melnikov(cfg: &RunConfig) -> Result<Report> {
    let f = frame(cfg)?;
    let pert = PerturbationSpec::from(&cfg.trap);
    let numeric = melnikov_numeric(&f, &pert)?;
    let closed = melnikov_closed(&f, &pert);
    let mut out = Map::new();
    out.insert("numeric".into(), number(numeric));
    out.insert("closed_form".into(), number(closed));
    out.insert("difference".into(), number(closed - numeric));
    out.insert("kappa".into(), number(f.kappa));
    out.insert("amplitude".into(), number(f.amplitude()));
    out.insert("resonance_frequency".into(), resonance_frequency(&f).map_or(Value::Null, number));
    Ok(Report::Json(out))
}

pub fn stability(cfg: &RunConfig) -> Result<Report> {
    let s = &cfg.separatrix;
    let curve = stability_curve(cfg.trap.lambda, s.energy, cfg.trap.eta, s.c0, (s.omega_min, s.omega_max), s.n_points)?;
    let mut table = Table::new(&["omega", "de1_critical", "branch"]);
    if let Some(r) = curve.resonance {
        table.note("resonance_frequency", format_real(r));
    }
    table.rows = curve
        .points
        .iter()
        .map(|p| vec![format_real(p.omega), format_real(p.de1_critical), p.branch.to_string()])
        .collect();
    Ok(Report::Table(table))
}

pub fn potential(cfg: &RunConfig) -> Result<Report> {
    let (lambda, h, de) = (cfg.trap.lambda, cfg.separatrix.energy, cfg.trap.de0);
    let scan = &cfg.potential;
    let mut table = Table::new(&["z", "V"]);
    table.note("effective_energy", format_real(effective_energy(h)));
    if let Ok(sep) = separatrix_amplitude(lambda, h) {
        table.note("separatrix_amplitude", format_real(sep.amplitude));
    }
    table.rows = (0..scan.n_z)
        .map(|i| {
            let z = scan.z_min + (scan.z_max - scan.z_min) * i as f64 / (scan.n_z - 1) as f64;
            vec![format_real(z), format_real(effective_potential(lambda, h, de, z))]
        })
        .collect();
    Ok(Report::Table(table))
}

pub fn crosscheck_run(cfg: &RunConfig) -> Result<Report> {
    let check = crosscheck(&cfg.trap, cfg.initial, cfg.run.t_end, cfg.step, cfg.run.sample_dt)?;
    let mut out = Map::new();
    out.insert("max_dz".into(), number(check.max_dz));
    out.insert("max_norm_drift".into(), number(check.max_norm_drift));
    out.insert("samples".into(), count(check.samples));
    Ok(Report::Json(out))
}

pub fn classify(cfg: &RunConfig) -> Result<Report> {
    let (z0, phi0) = (cfg.initial.z, cfg.initial.phi);
    let regime = classify_regime(&cfg.trap, z0, phi0);
    let h = hamiltonian(&cfg.trap.unperturbed(), z0, phi0, 0.0);
    let kind = match regime.motion {
        Motion::RabiOscillation => "RabiOscillation",
        Motion::SelfTrapped => "SelfTrapped",
        Motion::Separatrix => "Separatrix",
    };
    let shape = match regime.potential_shape {
        PotentialShape::DoubleWell => "DoubleWell",
        PotentialShape::Parabolic => "Parabolic",
    };
    let mut out = Map::new();
    out.insert("kind".into(), kind.into());
    out.insert("potential_shape".into(), shape.into());
    out.insert("energy".into(), number(h));
    out.insert("effective_energy".into(), number(effective_energy(h)));
    Ok(Report::Json(out))
}

pub fn lyapunov(cfg: &RunConfig) -> Result<Report> {
    let a = &cfg.analysis;
    let exponent = lyapunov_estimate(&cfg.trap, cfg.initial, cfg.run.t_end, a.renorm_interval, a.d0, cfg.step)?;
    let mut out = Map::new();
    out.insert("exponent".into(), number(exponent));
    out.insert("horizon".into(), number(cfg.run.t_end));
    out.insert("renorm_interval".into(), number(a.renorm_interval));
    out.insert("d0".into(), number(a.d0));
    Ok(Report::Json(out))
}
