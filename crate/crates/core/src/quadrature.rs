//! One-dimensional quadrature: adaptive Simpson for smooth integrands and
//! cumulative trapezoid sums on uniform grids.

use serde::{Deserialize, Serialize};

/// Recursion depth cap for [`adaptive_simpson`].
const MAX_DEPTH: u32 = 48;

/// Panels whose refinement change is below this multiple of the rounding
/// level of `∫|f|` are accepted; tighter absolute tolerances only chase noise.
const ROUNDOFF: f64 = 64.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum QuadratureRule {
    /// Trapezoid sums on the trajectory grid.
    TrapezoidOnGrid,
    /// Adaptive Simpson refined until successive estimates differ by less than `tol`.
    AdaptiveSimpson { tol: f64 },
}

impl Default for QuadratureRule {
    fn default() -> Self {
        QuadratureRule::AdaptiveSimpson { tol: 1e-10 }
    }
}

fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

/// `∫_a^b f` to absolute tolerance `tol` (Richardson-corrected).
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(fa, fm, fb, b - a);
    recurse(&f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(fa, flm, fm, m - a);
    let right = simpson(fm, frm, fb, b - m);
    let delta = left + right - whole;
    let noise = ROUNDOFF * (m - a) / 6.0 * (fa.abs() + 4.0 * flm.abs() + 2.0 * fm.abs() + 4.0 * frm.abs() + fb.abs());
    if depth == 0 || delta.abs() <= 15.0 * tol.max(noise) || (m - a).abs() <= f64::EPSILON * m.abs() {
        return left + right + delta / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Cumulative integrals `∫_{a}^{t_k} f` on the points of `times`, one
/// adaptive Simpson panel per grid interval. `times` must be sorted.
pub fn cumulative_simpson<F: Fn(f64) -> f64>(f: F, times: &[f64], tol: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    if let Some(&first) = times.first() {
        out.push(0.0);
        let mut prev = first;
        let span = (times[times.len() - 1] - first).max(f64::MIN_POSITIVE);
        for &t in &times[1..] {
            acc += adaptive_simpson(&f, prev, t, tol * (t - prev) / span);
            out.push(acc);
            prev = t;
        }
    }
    out
}

/// Cumulative trapezoid integrals of samples `y` on the points `times`.
pub fn cumulative_trapezoid(times: &[f64], y: &[f64]) -> Vec<f64> {
    assert_eq!(times.len(), y.len(), "trapezoid needs one sample per grid point");
    let mut out = Vec::with_capacity(y.len());
    let mut acc = 0.0;
    for k in 0..y.len() {
        if k > 0 {
            acc += 0.5 * (times[k] - times[k - 1]) * (y[k] + y[k - 1]);
        }
        out.push(acc);
    }
    out
}
