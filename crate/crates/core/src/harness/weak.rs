//! Residual of the distributional form of the equation against smooth bumps.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlinearity::HomogeneousNonlinearity;
use crate::solver::Trajectory;
use crate::spacetime::integrate;
use crate::testfunc::Mollifier;

/// `ψ(t,x) = η(|x|²/a) η(t/b)`, supported in `|x|² < a`, `t < b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub a: f64,
    pub b: f64,
    #[serde(default)]
    pub mollifier: Mollifier,
}

impl Bump {
    pub fn new(a: f64, b: f64) -> Self {
        Self {
            a,
            b,
            mollifier: Mollifier::default(),
        }
    }

    /// `(φ, Δφ)` of the spatial factor at `|x|² = x_sq` in dimension `dim`.
    pub fn spatial(&self, x_sq: f64, dim: usize) -> (f64, f64) {
        let j = self.mollifier.jet(x_sq / self.a);
        let lap = 4.0 * x_sq / (self.a * self.a) * j.d2 + 2.0 * dim as f64 / self.a * j.d1;
        (j.value, lap)
    }

    /// `(τ, τ′)` of the temporal factor.
    pub fn temporal(&self, t: f64) -> (f64, f64) {
        let j = self.mollifier.jet(t / self.b);
        (j.value, j.d1 / self.b)
    }

    pub fn value(&self, t: f64, x_sq: f64, dim: usize) -> f64 {
        self.spatial(x_sq, dim).0 * self.temporal(t).0
    }
}

/// The four terms of `∬u(−i∂ₜψ + Δψ) − i∫u₀ψ(0) − ∬F(u)ψ` for one bump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakResidual {
    pub bump: Bump,
    pub time_term: Complex64,
    pub laplace_term: Complex64,
    pub initial_term: Complex64,
    pub nonlinear_term: Complex64,
    pub residual: f64,
    /// `residual` divided by the largest term modulus.
    pub normalized: f64,
    /// Richardson estimate of the time-quadrature error, same normalisation.
    pub quadrature_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakReport {
    pub rows: Vec<WeakResidual>,
}

impl WeakReport {
    pub fn max_normalized(&self) -> f64 {
        self.rows.iter().map(|r| r.normalized).fold(0.0, f64::max)
    }
}

/// Bumps scaled to a box of half-width `half_width` and a horizon `t_end`.
pub fn default_bumps(half_width: f64, t_end: f64) -> Vec<Bump> {
    [(0.5, 1.0), (0.75, 0.75), (0.3, 0.5)]
        .iter()
        .map(|&(fx, ft)| Bump::new((fx * half_width).powi(2), ft * t_end))
        .collect()
}

pub fn verify_weak_identity(
    traj: &Trajectory,
    bumps: &[Bump],
    f: &HomogeneousNonlinearity,
) -> Result<WeakReport> {
    let grid = traj.grid;
    let snaps = &traj.snapshots;
    let first = snaps
        .first()
        .ok_or_else(|| Error::InsufficientData("trajectory stores no snapshots".into()))?;
    if first.t != 0.0 || snaps.len() < 3 {
        return Err(Error::InsufficientData(
            "weak residual needs the initial snapshot and at least three in total".into(),
        ));
    }
    let t_last = snaps.last().map_or(0.0, |s| s.t);
    let cell = grid.cell_volume();
    let mut rows = Vec::with_capacity(bumps.len());
    for bump in bumps {
        if !(bump.a > 0.0 && bump.b > 0.0) {
            return Err(Error::Config(format!("bump {bump:?} needs positive scales")));
        }
        if bump.a.sqrt() >= grid.half_width {
            return Err(Error::Config(format!(
                "bump radius {} reaches the box edge {}",
                bump.a.sqrt(),
                grid.half_width
            )));
        }
        if bump.b > t_last * (1.0 + 1e-9) {
            return Err(Error::Config(format!(
                "bump horizon {} exceeds the last snapshot at t = {t_last}",
                bump.b
            )));
        }
        let (phi, lap): (Vec<f64>, Vec<f64>) = (0..grid.len())
            .map(|idx| bump.spatial(grid.radius_sq(idx), grid.dim))
            .unzip();
        let est = integrate(snaps, bump.b, 3, |t, field, out| {
            let (tau, dtau) = bump.temporal(t);
            let mut s_phi = Complex64::new(0.0, 0.0);
            let mut s_lap = Complex64::new(0.0, 0.0);
            let mut s_f = Complex64::new(0.0, 0.0);
            for ((u, p), l) in field.data.iter().zip(&phi).zip(&lap) {
                if *p != 0.0 {
                    s_phi += u * p;
                    s_f += f.evaluate(*u) * p;
                }
                if *l != 0.0 {
                    s_lap += u * l;
                }
            }
            out[0] = -Complex64::i() * s_phi * (dtau * cell);
            out[1] = s_lap * (tau * cell);
            out[2] = s_f * (tau * cell);
        });
        let initial = Complex64::i()
            * first
                .field
                .data
                .iter()
                .zip(&phi)
                .map(|(u, p)| u * p)
                .sum::<Complex64>()
            * cell;
        let (time_term, laplace_term, nonlinear_term) = (est[0].value, est[1].value, est[2].value);
        let residual = (time_term + laplace_term - initial - nonlinear_term).norm();
        let scale = [time_term, laplace_term, initial, nonlinear_term]
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        let quad = est.iter().map(|e| e.error()).sum::<f64>();
        let (normalized, quadrature_error) = if scale > 0.0 {
            (residual / scale, quad / scale)
        } else {
            (0.0, 0.0)
        };
        rows.push(WeakResidual {
            bump: *bump,
            time_term,
            laplace_term,
            initial_term: initial,
            nonlinear_term,
            residual,
            normalized,
            quadrature_error,
        });
    }
    Ok(WeakReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial_data::{Field, Grid};
    use crate::solver::{Snapshot, SolverConfig, Verdict};

    fn zero_trajectory(grid: Grid) -> Trajectory {
        Trajectory {
            grid,
            times: vec![0.0, 1.0],
            mass: vec![0.0, 0.0],
            sup: vec![0.0, 0.0],
            im_integral: vec![0.0, 0.0],
            dt: vec![0.0, 0.1],
            radii: Vec::new(),
            psi_density: Vec::new(),
            snapshots: (0..=10)
                .map(|k| Snapshot {
                    t: k as f64 / 10.0,
                    field: Field::zeros(grid),
                })
                .collect(),
            boundary_leak: 0.0,
            steps: 10,
            rejected: 0,
            verdict: Verdict::ReachedTEnd { t: 1.0 },
        }
    }

    #[test]
    fn zero_trajectory_has_zero_residual() {
        let grid = Grid::new(1, 64, 10.0).unwrap();
        let rep = verify_weak_identity(
            &zero_trajectory(grid),
            &[Bump::new(4.0, 0.5)],
            &HomogeneousNonlinearity::zero(1),
        )
        .unwrap();
        assert_eq!(rep.max_normalized(), 0.0);
    }

    #[test]
    fn support_violation_is_config_error() {
        let grid = Grid::new(1, 64, 10.0).unwrap();
        let f = HomogeneousNonlinearity::zero(1);
        let traj = zero_trajectory(grid);
        assert!(matches!(
            verify_weak_identity(&traj, &[Bump::new(400.0, 0.5)], &f),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            verify_weak_identity(&traj, &[Bump::new(4.0, 2.0)], &f),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn spatial_laplacian_matches_finite_differences() {
        let b = Bump::new(3.0, 1.0);
        for dim in [1, 2] {
            for &r in &[0.5, 1.3, 1.5, 1.6] {
                let h = 1e-4;
                let phi = |r: f64| b.spatial(r * r, dim).0;
                let fd = (phi(r + h) - 2.0 * phi(r) + phi(r - h)) / (h * h)
                    + (dim as f64 - 1.0) / r * (phi(r + h) - phi(r - h)) / (2.0 * h);
                assert!((b.spatial(r * r, dim).1 - fd).abs() < 1e-5 * (1.0 + fd.abs()), "{dim} {r}");
            }
        }
    }

    #[test]
    fn free_flow_residual_is_small() {
        let grid = Grid::new(1, 256, 16.0).unwrap();
        let u0 = Field::from_fn(grid, |x| Complex64::new((-x[0] * x[0]).exp(), 0.0));
        let f = HomogeneousNonlinearity::zero(1);
        let cfg = SolverConfig {
            t_end: 1.0,
            dt_init: 1e-3,
            snapshot_interval: Some(0.0),
            ..SolverConfig::default()
        };
        let traj = crate::solver::run(&u0, &cfg, &f).unwrap();
        let rep = verify_weak_identity(&traj, &default_bumps(16.0, 1.0), &f).unwrap();
        assert!(rep.max_normalized() < 1e-4, "{}", rep.max_normalized());
    }
}
