//! Space-time integrals over stored snapshots.

use num_complex::Complex64;

use crate::initial_data::Field;
use crate::solver::Snapshot;

/// A trapezoidal time integral with its every-other-node counterpart.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: Complex64,
    pub coarse: Complex64,
}

impl Estimate {
    /// Richardson estimate of the trapezoid error.
    pub fn error(&self) -> f64 {
        (self.value - self.coarse).norm() / 3.0
    }

    pub fn re(&self) -> f64 {
        self.value.re
    }
}

fn trapezoid_c(t: &[f64], y: &[Complex64]) -> Complex64 {
    t.windows(2)
        .zip(y.windows(2))
        .map(|(ts, ys)| (ys[0] + ys[1]) * (0.5 * (ts[1] - ts[0])))
        .sum()
}

fn coarse_c(t: &[f64], y: &[Complex64]) -> Complex64 {
    let mut idx: Vec<usize> = (0..t.len()).step_by(2).collect();
    if t.len() % 2 == 0 && !t.is_empty() {
        idx.push(t.len() - 1);
    }
    let ts: Vec<f64> = idx.iter().map(|&k| t[k]).collect();
    let ys: Vec<Complex64> = idx.iter().map(|&k| y[k]).collect();
    trapezoid_c(&ts, &ys)
}

/// Integrates `count` spatial functionals in time over `snapshots` restricted to `t ≤ t_max`.
///
/// `spatial(t, field, out)` fills `out[j]` with the `j`-th spatial integral at time `t`.
/// When `t_max` falls between snapshots the last interval is closed by a zero value at `t_max`,
/// which is exact for integrands that vanish there.
pub fn integrate<F>(snapshots: &[Snapshot], t_max: f64, count: usize, spatial: F) -> Vec<Estimate>
where
    F: Fn(f64, &Field, &mut [Complex64]),
{
    let mut times = Vec::new();
    let mut series: Vec<Vec<Complex64>> = vec![Vec::new(); count];
    let mut buf = vec![Complex64::new(0.0, 0.0); count];
    for snap in snapshots.iter().filter(|s| s.t <= t_max) {
        buf.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        spatial(snap.t, &snap.field, &mut buf);
        times.push(snap.t);
        for (s, v) in series.iter_mut().zip(&buf) {
            s.push(*v);
        }
    }
    if let Some(&last) = times.last() {
        if last < t_max && snapshots.iter().any(|s| s.t > t_max) {
            times.push(t_max);
            series.iter_mut().for_each(|s| s.push(Complex64::new(0.0, 0.0)));
        }
    }
    series
        .iter()
        .map(|s| Estimate {
            value: trapezoid_c(&times, s),
            coarse: coarse_c(&times, s),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial_data::Grid;

    #[test]
    fn integrates_polynomial_in_time() {
        let grid = Grid::new(1, 4, 1.0).unwrap();
        let snaps: Vec<Snapshot> = (0..=100)
            .map(|k| Snapshot {
                t: k as f64 / 100.0,
                field: Field::zeros(grid),
            })
            .collect();
        let est = integrate(&snaps, 1.0, 1, |t, _, out| out[0] = Complex64::new(t * t, 0.0));
        assert!((est[0].value.re - 1.0 / 3.0).abs() < 1e-4);
        assert!(est[0].error() < 1e-4);
    }
}
