//! Adaptive Simpson quadrature over a pre-split interval.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 48;

struct Simpson<'f, F> {
    f: &'f F,
    worst: f64,
    failed: bool,
}

impl<F: Fn(f64) -> f64> Simpson<'_, F> {
    #[allow(clippy::too_many_arguments)]
    fn refine(&mut self, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = (self.f)(lm);
        let frm = (self.f)(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol || depth == 0 || m <= a || m >= b {
            if depth == 0 && delta.abs() > 15.0 * tol {
                self.failed = true;
                self.worst = self.worst.max(delta.abs() / 15.0);
            }
            return left + right + delta / 15.0;
        }
        self.refine(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + self.refine(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Integrates `f` over `[a, b]` split into `panels` equal pieces, each refined
/// adaptively; `tol` is the absolute tolerance for the whole interval.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64, panels: usize) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let panels = panels.max(1);
    let width = (b - a) / panels as f64;
    let panel_tol = tol / panels as f64;
    let mut state = Simpson { f: &f, worst: 0.0, failed: false };
    let mut total = 0.0;
    for k in 0..panels {
        let lo = a + k as f64 * width;
        let hi = if k + 1 == panels { b } else { lo + width };
        let fa = f(lo);
        let fm = f(0.5 * (lo + hi));
        let fb = f(hi);
        let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
        total += state.refine(lo, hi, fa, fm, fb, whole, panel_tol, MAX_DEPTH);
    }
    if state.failed || !total.is_finite() {
        return Err(Error::Quadrature { achieved: state.worst });
    }
    Ok(total)
}
