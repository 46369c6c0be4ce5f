//! Post-processing of trajectories and stroboscopic sections.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::integrator::{SectionPoint, SectionPoints, StepControl, Stepper, Trajectory};
use crate::model::{PhaseState, TrapParams};

/// Minimum series length accepted by [`power_spectrum`].
pub const MIN_SPECTRUM_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    Rectangular,
    #[default]
    Hann,
}

impl Window {
    pub fn name(self) -> &'static str {
        match self {
            Window::Rectangular => "rectangular",
            Window::Hann => "hann",
        }
    }

    fn weight(self, n: usize, len: usize) -> f64 {
        match self {
            Window::Rectangular => 1.0,
            Window::Hann => 0.5 * (1.0 - (2.0 * PI * n as f64 / (len - 1) as f64).cos()),
        }
    }
}

impl std::str::FromStr for Window {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rectangular" | "rect" | "none" => Ok(Window::Rectangular),
            "hann" | "hanning" => Ok(Window::Hann),
            other => Err(format!("unknown window `{other}` (expected hann or rectangular)")),
        }
    }
}

/// One-sided power spectrum in cycles per unit time.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
    pub window: Window,
    pub resolution: f64,
}

impl Spectrum {
    /// Largest share of the non-DC power held by a single bin.
    pub fn dominant_fraction(&self) -> f64 {
        let rest = &self.power[1..];
        let total: f64 = rest.iter().sum();
        if total == 0.0 {
            return 0.0;
        }
        rest.iter().copied().fold(0.0, f64::max) / total
    }

    /// Frequency of the strongest non-DC bin.
    pub fn peak_frequency(&self) -> f64 {
        let (idx, _) = self.power[1..]
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |best, (i, &p)| if p > best.1 { (i, p) } else { best });
        self.freqs[idx + 1]
    }

    pub fn total_power(&self) -> f64 {
        self.power.iter().sum()
    }
}

/// Power spectrum of a uniformly sampled series after mean removal and windowing.
///
/// Normalized so that, for the rectangular window, the bins sum to the mean
/// square of the mean-removed series.
pub fn power_spectrum(series: &[f64], dt: f64, window: Window) -> Result<Spectrum> {
    let n = series.len();
    if n < MIN_SPECTRUM_LEN {
        return Err(Error::InsufficientPoints { needed: MIN_SPECTRUM_LEN - 1, got: n });
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("dt", format!("must be > 0, got {dt}")));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex64> = series
        .iter()
        .enumerate()
        .map(|(i, &x)| Complex64::new((x - mean) * window.weight(i, n), 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    let bins = n / 2 + 1;
    let norm = 1.0 / (n as f64 * n as f64);
    let power = (0..bins)
        .map(|k| {
            let p = buf[k].norm_sqr() * norm;
            // Interior bins fold in their negative-frequency mirror.
            if k == 0 || (n % 2 == 0 && k == n / 2) {
                p
            } else {
                2.0 * p
            }
        })
        .collect();
    let resolution = 1.0 / (n as f64 * dt);
    Ok(Spectrum {
        freqs: (0..bins).map(|k| k as f64 * resolution).collect(),
        power,
        window,
        resolution,
    })
}

/// Checks that `times` form a uniform grid and returns its spacing.
pub fn uniform_spacing(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::InsufficientPoints { needed: 1, got: times.len() });
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    for (i, &t) in times.iter().enumerate() {
        let deviation = (t - (times[0] + i as f64 * dt)).abs();
        if deviation > 1e-9 * dt {
            return Err(Error::NonUniformSampling { index: i, deviation });
        }
    }
    Ok(dt)
}

/// Spectrum of `z` from a trajectory, which must have been sampled on a fixed grid.
pub fn trajectory_spectrum(traj: &Trajectory, window: Window) -> Result<Spectrum> {
    let dt = uniform_spacing(&traj.times())?;
    power_spectrum(&traj.z_values(), dt, window)
}

/// Trapezoid-rule time average of `z` over `[t_discard, t_end]`.
pub fn time_average_z(traj: &Trajectory, t_discard: f64) -> Result<f64> {
    let s = &traj.samples;
    let t_end = traj.last().t;
    if !(t_discard < t_end) {
        return Err(Error::EmptyWindow);
    }
    let start = s.iter().position(|q| q.t >= t_discard).unwrap_or(s.len());
    let mut area = 0.0;
    let (mut t_prev, mut z_prev) = if start > 0 && s[start].t > t_discard {
        let (a, b) = (&s[start - 1], &s[start]);
        let w = (t_discard - a.t) / (b.t - a.t);
        (t_discard, a.z + w * (b.z - a.z))
    } else {
        (s[start].t, s[start].z)
    };
    let t_first = t_prev;
    for q in &s[start..] {
        area += 0.5 * (q.z + z_prev) * (q.t - t_prev);
        t_prev = q.t;
        z_prev = q.z;
    }
    let span = t_end - t_first;
    if span <= 0.0 {
        return Err(Error::EmptyWindow);
    }
    Ok(area / span)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttractorKind {
    /// Frequency-locked motion repeating every `p` drive periods.
    FixedCycle(usize),
    Chaotic,
    Undecided,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttractorReport {
    pub kind: AttractorKind,
    /// Mean of `z` over the retained section points.
    pub mean_z: f64,
    /// Period index after which every point stays on its final cluster.
    pub transient_periods: usize,
    /// Cluster centroids `(z, dz/dt)`, one per residue class of a fixed cycle.
    pub cluster_centers: Vec<(f64, f64)>,
    /// Largest pairwise distance among the retained points (capped once it exceeds
    /// `chaos_spread_min`).
    pub spread: f64,
    pub retained: usize,
}

/// Tuning of [`detect_frequency_locking`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LockingParams {
    pub discard_periods: usize,
    pub cluster_tol: f64,
    pub max_order: usize,
    pub chaos_spread_min: f64,
}

impl Default for LockingParams {
    fn default() -> Self {
        Self {
            discard_periods: 2000,
            cluster_tol: 1e-3,
            max_order: 12,
            chaos_spread_min: 0.2,
        }
    }
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

fn coords(p: &SectionPoint) -> (f64, f64) {
    (p.z, p.dz_dt)
}

/// Centroids of the `order` residue classes if every class fits within `tol`.
fn fit_cycle(points: &[SectionPoint], order: usize, tol: f64) -> Option<Vec<(f64, f64)>> {
    let mut centers = Vec::with_capacity(order);
    for r in 0..order {
        let class: Vec<(f64, f64)> = points.iter().skip(r).step_by(order).map(coords).collect();
        if class.is_empty() {
            return None;
        }
        let m = class.len() as f64;
        let c = (class.iter().map(|q| q.0).sum::<f64>() / m, class.iter().map(|q| q.1).sum::<f64>() / m);
        if class.iter().any(|&q| dist(q, c) > tol) {
            return None;
        }
        centers.push(c);
    }
    Some(centers)
}

/// Largest pairwise distance, stopping early once `cap` is exceeded.
fn spread(points: &[SectionPoint], cap: f64) -> f64 {
    let mut best = 0.0f64;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            best = best.max(dist(coords(a), coords(b)));
            if best > cap {
                return best;
            }
        }
    }
    best
}

/// Classifies the long-time attractor seen in a stroboscopic section.
///
/// After dropping the first `discard_periods` points, the smallest order `p` for
/// which each residue class mod `p` collapses onto one cluster wins. Without such an
/// order the section is chaotic when its spread exceeds `chaos_spread_min`.
pub fn detect_frequency_locking(sec: &SectionPoints, params: &LockingParams) -> Result<AttractorReport> {
    let needed = params.discard_periods + 10 * params.max_order;
    if sec.len() <= needed {
        return Err(Error::InsufficientPoints { needed, got: sec.len() });
    }
    if params.max_order == 0 {
        return Err(Error::invalid("max_order", "must be at least 1"));
    }
    let retained = &sec.points[params.discard_periods..];
    let mean_z = retained.iter().map(|p| p.z).sum::<f64>() / retained.len() as f64;

    for order in 1..=params.max_order {
        if let Some(centers) = fit_cycle(retained, order, params.cluster_tol) {
            // Walk back from the end until a point leaves its eventual cluster.
            let all = &sec.points;
            let mut first_settled = 0;
            for i in (0..all.len()).rev() {
                let class = (i + order - params.discard_periods % order) % order;
                if dist(coords(&all[i]), centers[class]) > params.cluster_tol {
                    first_settled = i + 1;
                    break;
                }
            }
            let spread = spread(retained, f64::INFINITY);
            return Ok(AttractorReport {
                kind: AttractorKind::FixedCycle(order),
                mean_z,
                transient_periods: all.get(first_settled).map_or(all.len(), |p| p.n),
                cluster_centers: centers,
                spread,
                retained: retained.len(),
            });
        }
    }

    let spread = spread(retained, params.chaos_spread_min);
    let kind = if spread > params.chaos_spread_min {
        AttractorKind::Chaotic
    } else {
        AttractorKind::Undecided
    };
    Ok(AttractorReport {
        kind,
        mean_z,
        transient_periods: 0,
        cluster_centers: Vec::new(),
        spread,
        retained: retained.len(),
    })
}

/// Diameter of a set of section points in the `(z, dz/dt)` plane.
pub fn section_diameter(points: &[SectionPoint]) -> f64 {
    spread(points, f64::INFINITY)
}

/// Fraction of section points with `z > 0`.
pub fn positive_fraction(points: &[SectionPoint]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    points.iter().filter(|p| p.z > 0.0).count() as f64 / points.len() as f64
}

/// Largest Lyapunov exponent by the two-trajectory renormalization method.
///
/// A companion orbit starts `d0` away in `z`; every `renorm_interval` the
/// separation in `(z, phi)` is logged and rescaled back to `d0` along its
/// current direction.
pub fn lyapunov_estimate(
    p: &TrapParams,
    s0: PhaseState,
    horizon: f64,
    renorm_interval: f64,
    d0: f64,
    ctl: StepControl,
) -> Result<f64> {
    p.validate()?;
    if !(horizon > 0.0 && renorm_interval > 0.0 && renorm_interval <= horizon) {
        return Err(Error::invalid("renorm_interval", "need 0 < renorm_interval <= horizon"));
    }
    if !(d0 > 0.0 && d0 < 1e-2) {
        return Err(Error::invalid("d0", format!("must be small and positive, got {d0}")));
    }
    let base = [s0.z, s0.phi];
    // Displace towards the interior so the companion never starts past the pole.
    let shift = if s0.z > 0.0 { -d0 } else { d0 };
    let mut a = Stepper::new(p, s0.t, base, ctl)?;
    let mut b = Stepper::new(p, s0.t, [s0.z + shift, s0.phi], ctl)?;

    let intervals = (horizon / renorm_interval).round().max(1.0) as usize;
    let mut log_sum = 0.0;
    for k in 1..=intervals {
        let t = s0.t + k as f64 * renorm_interval;
        a.advance_to(t)?;
        b.advance_to(t)?;
        let ya = *a.state();
        let yb = *b.state();
        let diff = [yb[0] - ya[0], yb[1] - ya[1]];
        let d = diff[0].hypot(diff[1]);
        if d > 0.0 {
            log_sum += (d / d0).ln();
            b.set_state([ya[0] + diff[0] * d0 / d, ya[1] + diff[1] * d0 / d]);
        } else {
            // Orbits merged to rounding; restart the companion along z.
            log_sum += f64::EPSILON.ln();
            let dz = if ya[0] > 0.0 { -d0 } else { d0 };
            b.set_state([ya[0] + dz, ya[1]]);
        }
    }
    Ok(log_sum / (intervals as f64 * renorm_interval))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::{integrate_adaptive, sample_stroboscopic};
    use approx::assert_abs_diff_eq;

    fn tone(n: usize, dt: f64, f0: f64) -> Vec<f64> {
        (0..n).map(|i| 1.7 * (2.0 * PI * f0 * i as f64 * dt).sin()).collect()
    }

    #[test]
    fn pure_tone_on_bin() {
        let (n, dt) = (256, 0.05);
        let f0 = 12.0 / (n as f64 * dt);
        let s = power_spectrum(&tone(n, dt, f0), dt, Window::Rectangular).unwrap();
        assert_eq!(s.freqs.len(), n / 2 + 1);
        let peak = s.power[12];
        for (k, &p) in s.power.iter().enumerate() {
            if k != 12 {
                assert!(peak >= 1e3 * p, "bin {k}: {p}");
            }
        }
        assert_abs_diff_eq!(s.peak_frequency(), f0, epsilon = 1e-12);
        // Mean square of a sine of amplitude 1.7.
        assert_abs_diff_eq!(peak, 1.7 * 1.7 / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_series_has_no_power() {
        let s = power_spectrum(&[3.0; 40], 0.1, Window::Hann).unwrap();
        assert!(s.power.iter().all(|&p| p < 1e-28));
        assert_eq!(s.freqs.len(), 21);
    }

    #[test]
    fn parseval_rectangular() {
        let series: Vec<f64> = (0..101).map(|i| ((i * i) as f64 * 0.37).sin() + 0.01 * i as f64).collect();
        let s = power_spectrum(&series, 0.2, Window::Rectangular).unwrap();
        let mean = series.iter().sum::<f64>() / series.len() as f64;
        let energy = series.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / series.len() as f64;
        assert!((s.total_power() - energy).abs() <= 1e-10 * energy);
    }

    #[test]
    fn spectrum_rejects_bad_input() {
        assert!(power_spectrum(&[0.0; 8], 0.1, Window::Hann).is_err());
        assert!(power_spectrum(&[0.0; 32], 0.0, Window::Hann).is_err());
        assert!(matches!(uniform_spacing(&[0.0, 0.1, 0.25, 0.3]), Err(Error::NonUniformSampling { index: 2, .. })));
        assert_abs_diff_eq!(uniform_spacing(&[1.0, 1.5, 2.0]).unwrap(), 0.5);
    }

    #[test]
    fn rabi_average_vanishes() {
        let p = TrapParams::conservative(1.0, 0.0);
        let traj = integrate_adaptive(&p, PhaseState::at_rest(0.05, 0.0), 200.0, StepControl::default(), Some(0.01)).unwrap();
        assert!(time_average_z(&traj, 0.0).unwrap().abs() < 1e-3);
        assert!(matches!(time_average_z(&traj, 500.0), Err(Error::EmptyWindow)));
    }

    #[test]
    fn self_trapped_average_is_positive() {
        let p = TrapParams::conservative(10.0, 0.0);
        let traj = integrate_adaptive(&p, PhaseState::at_rest(0.75, 0.0), 100.0, StepControl::default(), Some(0.01)).unwrap();
        assert!(time_average_z(&traj, 10.0).unwrap() > 0.3);
    }

    #[test]
    fn average_interpolates_window_start() {
        let p = TrapParams::conservative(0.0, 0.0);
        let traj = integrate_adaptive(&p, PhaseState::at_rest(0.01, 0.0), 2.0 * PI, StepControl::default(), Some(PI / 50.0)).unwrap();
        // z = 0.01 cos t averaged over [pi, 2 pi] vanishes.
        assert!(time_average_z(&traj, PI + 0.013).unwrap().abs() < 1e-4);
    }

    fn synthetic(cycle: &[(f64, f64)], transient: usize, total: usize) -> SectionPoints {
        let points = (0..total)
            .map(|n| {
                let (z, dz) = if n < transient {
                    ((n as f64 * 1.3).sin() * 0.8, (n as f64 * 0.7).cos())
                } else {
                    cycle[n % cycle.len()]
                };
                SectionPoint { n, t: n as f64, z, dz_dt: dz }
            })
            .collect();
        SectionPoints { points, drive_period: 1.0 }
    }

    #[test]
    fn detects_cycles_and_transients() {
        let cycle = [(0.1, 0.2), (-0.3, 0.4), (0.5, -0.6)];
        let sec = synthetic(&cycle, 150, 599);
        let params = LockingParams { discard_periods: 200, ..LockingParams::default() };
        let report = detect_frequency_locking(&sec, &params).unwrap();
        assert_eq!(report.kind, AttractorKind::FixedCycle(3));
        assert_eq!(report.transient_periods, 150);
        // Retained points start at index 200 = 2 mod 3.
        assert_abs_diff_eq!(report.cluster_centers[0].0, cycle[2].0, epsilon = 1e-12);
        assert_abs_diff_eq!(report.cluster_centers[0].1, cycle[2].1, epsilon = 1e-12);
        assert_abs_diff_eq!(report.mean_z, 0.1, epsilon = 1e-12);

        let flat = synthetic(&[(0.2, 0.0)], 0, 400);
        let report = detect_frequency_locking(&flat, &params).unwrap();
        assert_eq!(report.kind, AttractorKind::FixedCycle(1));
        assert_eq!(report.transient_periods, 0);
    }

    #[test]
    fn insufficient_points() {
        let sec = synthetic(&[(0.0, 0.0)], 0, 300);
        let err = detect_frequency_locking(&sec, &LockingParams { discard_periods: 200, ..LockingParams::default() });
        assert!(matches!(err, Err(Error::InsufficientPoints { .. })));
    }

    #[test]
    fn scattered_points_are_chaotic() {
        let sec = synthetic(&[], 1000, 1000);
        let report = detect_frequency_locking(&sec, &LockingParams { discard_periods: 100, ..LockingParams::default() }).unwrap();
        assert_eq!(report.kind, AttractorKind::Chaotic);
        let tight = SectionPoints {
            points: (0..500)
                .map(|n| SectionPoint { n, t: n as f64, z: 0.01 * (n as f64).sin(), dz_dt: 0.0 })
                .collect(),
            drive_period: 1.0,
        };
        let report = detect_frequency_locking(&tight, &LockingParams { discard_periods: 100, ..LockingParams::default() }).unwrap();
        assert_eq!(report.kind, AttractorKind::Undecided);
    }

    #[test]
    fn fixed_point_exponent() {
        let damped = TrapParams::driven(10.0, 0.0, 4.0, 0.1);
        let ctl = StepControl::for_trap(&damped);
        let l = lyapunov_estimate(&damped, PhaseState::at_rest(0.0, 0.0), 100.0, 0.5, 1e-8, ctl).unwrap();
        assert!(l < 0.0, "{l}");
        let free = TrapParams::conservative(10.0, 0.0);
        let l = lyapunov_estimate(&free, PhaseState::at_rest(0.0, 0.0), 200.0, 1.0, 1e-8, StepControl::default()).unwrap();
        assert!(l.abs() < 1e-2, "{l}");
    }

    #[test]
    fn section_helpers() {
        let p = TrapParams { omega: 2.0 * PI, ..TrapParams::conservative(10.0, 0.0) };
        let sec = sample_stroboscopic(&p, PhaseState::at_rest(0.75, 0.0), 50, StepControl::for_trap(&p)).unwrap();
        assert_eq!(positive_fraction(&sec.points), 1.0);
        assert!(section_diameter(&sec.points) < 2.0);
    }
}
