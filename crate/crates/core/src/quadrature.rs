//! Small quadrature helpers shared by the cutoff and diagnostics code.

/// Adaptive Simpson on `[a, b]` with absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
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
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson over consecutive breakpoints, splitting the tolerance evenly.
pub fn adaptive_simpson_split<F: Fn(f64) -> f64>(f: &F, breaks: &[f64], tol: f64) -> f64 {
    let pieces = breaks.len().saturating_sub(1).max(1) as f64;
    breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| adaptive_simpson(f, w[0], w[1], tol / pieces))
        .sum()
}

/// Trapezoidal rule on possibly non-uniform abscissae.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

/// Trapezoid with every other sample dropped (endpoints kept), for Richardson-style error estimates.
pub fn trapezoid_coarse(x: &[f64], y: &[f64]) -> f64 {
    let mut xs = Vec::with_capacity(x.len() / 2 + 2);
    let mut ys = Vec::with_capacity(x.len() / 2 + 2);
    for k in (0..x.len()).step_by(2) {
        xs.push(x[k]);
        ys.push(y[k]);
    }
    if x.len() % 2 == 0 && !x.is_empty() {
        xs.push(x[x.len() - 1]);
        ys.push(y[y.len() - 1]);
    }
    trapezoid(&xs, &ys)
}

/// Measure of the unit sphere `S^{d-1}`; 2 for `d = 1` (two half-lines).
pub fn sphere_measure(dim: usize) -> f64 {
    use std::f64::consts::PI;
    match dim {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        d => 2.0 * PI / (d - 2) as f64 * sphere_measure(d - 2),
    }
}

/// Volume of the unit ball in `ℝ^d`.
pub fn ball_volume(dim: usize) -> f64 {
    sphere_measure(dim) / dim as f64
}
