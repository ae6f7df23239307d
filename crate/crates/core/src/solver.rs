//! Strang split-step Fourier integrator for `i∂ₜu + Δu = F(u)` on a periodic box.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::initial_data::{Field, Grid};
use crate::nonlinearity::HomogeneousNonlinearity;
use crate::spectral::Spectral;
use crate::testfunc::CutoffFamily;

const FREEZE_BELOW: f64 = 1e-300;
const PARALLEL_NODES: usize = 1 << 14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub dt_init: f64,
    pub dt_min: f64,
    pub t_end: f64,
    /// Absolute escape level; `None` means `blowup_factor × ‖u₀‖_∞`.
    pub blowup_sup_threshold: Option<f64>,
    pub blowup_factor: f64,
    /// A step whose sup-norm ratio exceeds this is rejected and `dt` halved.
    pub growth_check: f64,
    pub nonlinear_substeps: usize,
    /// Accepted steps between diagnostic records.
    pub record_every: usize,
    /// Time between stored snapshots; `Some(0.0)` keeps every accepted step.
    pub snapshot_interval: Option<f64>,
    /// No snapshots are stored past this time.
    pub snapshot_until: Option<f64>,
    /// Radii at which `∫|u|^{p₀}ψ_R dx` is recorded.
    pub diagnostic_radii: Vec<f64>,
    /// Outer fraction of the box watched for leakage.
    pub boundary_fraction: f64,
    pub boundary_tolerance: f64,
    /// Accepted calm steps before `dt` is allowed to double back toward `dt_init`.
    pub regrow_after: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt_init: 1e-3,
            dt_min: 1e-14,
            t_end: 1.0,
            blowup_sup_threshold: None,
            blowup_factor: 1e6,
            growth_check: 1.1,
            nonlinear_substeps: 4,
            record_every: 1,
            snapshot_interval: None,
            snapshot_until: None,
            diagnostic_radii: Vec::new(),
            boundary_fraction: 0.05,
            boundary_tolerance: 1e-6,
            regrow_after: 16,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dt_init", self.dt_init),
            ("dt_min", self.dt_min),
            ("t_end", self.t_end),
            ("blowup_factor", self.blowup_factor),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.dt_min > self.dt_init {
            return Err(Error::Config("dt_min exceeds dt_init".into()));
        }
        if !(self.growth_check > 1.0) {
            return Err(Error::Config("growth_check must exceed 1".into()));
        }
        if let Some(th) = self.blowup_sup_threshold {
            if !(th > 0.0) {
                return Err(Error::Config("blowup_sup_threshold must be positive".into()));
            }
        }
        if self.nonlinear_substeps == 0 || self.record_every == 0 {
            return Err(Error::Config("nonlinear_substeps and record_every must be ≥ 1".into()));
        }
        if !(0.0..1.0).contains(&self.boundary_fraction) {
            return Err(Error::Config("boundary_fraction must lie in [0, 1)".into()));
        }
        if self.diagnostic_radii.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::Config("diagnostic radii must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    ReachedTEnd { t: f64 },
    Blowup { t_star: f64 },
    DtUnderflow { t: f64 },
    /// Boundary-layer mass moved by more than the tolerance; `blowup` keeps the raw outcome.
    BoundaryContaminated { t: f64, blowup: bool },
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::ReachedTEnd { .. } => "reached_t_end",
            Verdict::Blowup { .. } => "blowup",
            Verdict::DtUnderflow { .. } => "dt_underflow",
            Verdict::BoundaryContaminated { .. } => "boundary_contaminated",
        }
    }

    pub fn blowup_time(&self) -> Option<f64> {
        match *self {
            Verdict::Blowup { t_star } => Some(t_star),
            _ => None,
        }
    }

    pub fn end_time(&self) -> f64 {
        match *self {
            Verdict::ReachedTEnd { t } | Verdict::DtUnderflow { t } => t,
            Verdict::Blowup { t_star } => t_star,
            Verdict::BoundaryContaminated { t, .. } => t,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub t: f64,
    pub field: Field,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub grid: Grid,
    pub times: Vec<f64>,
    pub mass: Vec<f64>,
    pub sup: Vec<f64>,
    pub im_integral: Vec<f64>,
    pub dt: Vec<f64>,
    /// `radii[j]` ↦ series of `∫|u|^{p₀}ψ_R(t,x)dx`.
    pub radii: Vec<f64>,
    pub psi_density: Vec<Vec<f64>>,
    pub snapshots: Vec<Snapshot>,
    pub boundary_leak: f64,
    pub steps: usize,
    pub rejected: usize,
    pub verdict: Verdict,
}

impl Trajectory {
    /// `I₀(R) = ∬|u|^{p₀}ψ_R` for the `j`-th recorded radius, trapezoidal in time.
    pub fn i0(&self, j: usize) -> f64 {
        crate::quadrature::trapezoid(&self.times, &self.psi_density[j])
    }

    pub fn final_snapshot(&self) -> Option<&Snapshot> {
        self.snapshots.last()
    }

    pub fn mass_drift(&self) -> f64 {
        let m0 = self.mass[0];
        self.mass.iter().map(|m| (m - m0).abs()).fold(0.0, f64::max) / m0.max(f64::MIN_POSITIVE)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string(), "mass".into(), "sup".into(), "im_integral".into(), "dt".into()];
        header.extend(self.radii.iter().map(|r| format!("psi_density_R{r}")));
        out.write_record(&header)?;
        for k in 0..self.times.len() {
            let mut row = vec![
                fmt(self.times[k]),
                fmt(self.mass[k]),
                fmt(self.sup[k]),
                fmt(self.im_integral[k]),
                fmt(self.dt[k]),
            ];
            row.extend(self.psi_density.iter().map(|s| fmt(s[k])));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.12e}")
}

/// Spectral propagator bound to one grid.
pub struct Propagator {
    spectral: Spectral,
}

impl Propagator {
    pub fn new(grid: Grid) -> Self {
        Self { spectral: Spectral::new(grid) }
    }

    pub fn grid(&self) -> &Grid {
        self.spectral.grid()
    }

    /// `u ← e^{i dt Δ} u`.
    pub fn linear_step(&mut self, field: &mut Field, dt: f64) {
        self.spectral.free_flow(&mut field.data, dt);
    }

    pub fn laplacian(&mut self, field: &Field) -> Field {
        let mut out = field.clone();
        self.spectral.laplacian(&mut out.data);
        out
    }
}

/// Free flow of a copy of `field` over `dt`.
pub fn linear_step(field: &Field, dt: f64) -> Field {
    let mut out = field.clone();
    Propagator::new(field.grid).linear_step(&mut out, dt);
    out
}

/// Set when a node leaves the finite numbers during the pointwise flow.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NonFinite;

fn rk4_node(u: Complex64, dt: f64, substeps: usize, f: &HomogeneousNonlinearity) -> Complex64 {
    let i = Complex64::i();
    let rhs = |v: Complex64| -i * f.evaluate(v);
    let h = dt / substeps as f64;
    let mut v = u;
    for _ in 0..substeps {
        if v.norm() < FREEZE_BELOW {
            return Complex64::new(0.0, 0.0);
        }
        let k1 = rhs(v);
        let k2 = rhs(v + k1 * (0.5 * h));
        let k3 = rhs(v + k2 * (0.5 * h));
        let k4 = rhs(v + k3 * h);
        v += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    v
}

fn rotate_node(u: Complex64, dt: f64, g1: f64, dim: usize) -> Complex64 {
    let r = u.norm();
    let w = match dim {
        1 => r * r,
        2 => r,
        d => r.powf(2.0 / d as f64),
    };
    u * Complex64::from_polar(1.0, -g1 * w * dt)
}

/// Pointwise flow `u′ = −iF(u)` over `dt`; exact rotation when `F = g₁|u|^{2/d}u`.
pub fn nonlinear_step(
    field: &mut Field,
    dt: f64,
    f: &HomogeneousNonlinearity,
    substeps: usize,
) -> std::result::Result<(), NonFinite> {
    if f.is_zero() || dt == 0.0 {
        return Ok(());
    }
    let dim = field.grid.dim;
    let gauge = f.gauge_coefficient();
    let step = |u: &mut Complex64| {
        *u = match gauge {
            Some(g1) => rotate_node(*u, dt, g1, dim),
            None => rk4_node(*u, dt, substeps, f),
        };
    };
    if field.data.len() >= PARALLEL_NODES {
        field.data.par_iter_mut().for_each(step);
    } else {
        field.data.iter_mut().for_each(step);
    }
    if field.data.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(NonFinite)
    }
}

/// Integrates `i∂ₜu + Δu = F(u)` from `u0` by Strang splitting with adaptive halving.
pub struct Solver<'a> {
    config: &'a SolverConfig,
    nonlinearity: &'a HomogeneousNonlinearity,
    cutoffs: CutoffFamily,
}

struct Recorder {
    boundary_mask: Vec<bool>,
    boundary_mass0: f64,
    mass0: f64,
    leak: f64,
}

impl<'a> Solver<'a> {
    pub fn new(config: &'a SolverConfig, nonlinearity: &'a HomogeneousNonlinearity) -> Self {
        Self {
            config,
            nonlinearity,
            cutoffs: CutoffFamily::new(nonlinearity.dim()),
        }
    }

    pub fn with_cutoffs(mut self, cutoffs: CutoffFamily) -> Self {
        self.cutoffs = cutoffs;
        self
    }

    fn strang(&self, prop: &mut Propagator, u: &mut Field, h: f64) -> std::result::Result<(), NonFinite> {
        prop.linear_step(u, 0.5 * h);
        nonlinear_step(u, h, self.nonlinearity, self.config.nonlinear_substeps)?;
        prop.linear_step(u, 0.5 * h);
        if u.data.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            Ok(())
        } else {
            Err(NonFinite)
        }
    }

    fn record(&self, traj: &mut Trajectory, rec: &mut Recorder, u: &Field, t: f64, dt: f64) {
        let grid = &u.grid;
        let cell = grid.cell_volume();
        traj.times.push(t);
        traj.mass.push(u.mass());
        traj.sup.push(u.sup_norm());
        traj.im_integral.push(u.data.iter().map(|z| z.im).sum::<f64>() * cell);
        traj.dt.push(dt);
        let p0 = self.nonlinearity.p0();
        let powered: Vec<f64> = u.data.iter().map(|z| z.norm().powf(p0)).collect();
        for (j, &r) in traj.radii.iter().enumerate() {
            let density = if t >= r {
                0.0
            } else {
                powered
                    .iter()
                    .enumerate()
                    .map(|(idx, w)| w * self.cutoffs.psi(r, t, grid.radius_sq(idx)))
                    .sum::<f64>()
                    * cell
            };
            traj.psi_density[j].push(density);
        }
        let boundary: f64 = u
            .data
            .iter()
            .zip(&rec.boundary_mask)
            .filter(|(_, &m)| m)
            .map(|(z, _)| z.norm_sqr())
            .sum::<f64>()
            * cell;
        if traj.times.len() == 1 {
            rec.boundary_mass0 = boundary;
            rec.mass0 = traj.mass[0];
        }
        let leak = (boundary - rec.boundary_mass0).abs() / rec.mass0.max(f64::MIN_POSITIVE);
        rec.leak = rec.leak.max(leak);
    }

    pub fn run(&self, u0: &Field) -> Result<Trajectory> {
        let cfg = self.config;
        cfg.validate()?;
        u0.grid.validate()?;
        if u0.grid.dim != self.nonlinearity.dim() {
            return Err(Error::Config(format!(
                "field dimension {} differs from nonlinearity dimension {}",
                u0.grid.dim,
                self.nonlinearity.dim()
            )));
        }
        let grid = u0.grid;
        let edge = (1.0 - cfg.boundary_fraction) * grid.half_width;
        let boundary_mask = (0..grid.len())
            .map(|idx| grid.point(idx)[..grid.dim].iter().any(|c| c.abs() > edge))
            .collect();
        let mut rec = Recorder {
            boundary_mask,
            boundary_mass0: 0.0,
            mass0: 0.0,
            leak: 0.0,
        };
        let mut traj = Trajectory {
            grid,
            times: Vec::new(),
            mass: Vec::new(),
            sup: Vec::new(),
            im_integral: Vec::new(),
            dt: Vec::new(),
            radii: cfg.diagnostic_radii.clone(),
            psi_density: vec![Vec::new(); cfg.diagnostic_radii.len()],
            snapshots: Vec::new(),
            boundary_leak: 0.0,
            steps: 0,
            rejected: 0,
            verdict: Verdict::ReachedTEnd { t: 0.0 },
        };

        let sup0 = u0.sup_norm();
        let threshold = cfg
            .blowup_sup_threshold
            .unwrap_or(cfg.blowup_factor * sup0.max(f64::MIN_POSITIVE));
        let mut prop = Propagator::new(grid);
        let mut u = u0.clone();
        let mut t = 0.0;
        let mut dt = cfg.dt_init;
        let mut sup = sup0;
        let mut last_growing = false;
        let mut calm = 0usize;
        let mut last_snapshot = f64::NEG_INFINITY;
        let mut since_record = 0usize;

        self.record(&mut traj, &mut rec, &u, t, 0.0);
        if cfg.snapshot_interval.is_some() {
            traj.snapshots.push(Snapshot { t, field: u.clone() });
            last_snapshot = 0.0;
        }
        let end_tol = 1e-12 * cfg.t_end;

        let raw = loop {
            if t >= cfg.t_end - end_tol {
                break Verdict::ReachedTEnd { t };
            }
            let h = dt.min(cfg.t_end - t);
            let mut trial = u.clone();
            let outcome = self.strang(&mut prop, &mut trial, h);
            let trial_sup = if outcome.is_ok() { trial.sup_norm() } else { f64::INFINITY };
            if outcome.is_err() || trial_sup > cfg.growth_check * sup {
                traj.rejected += 1;
                let growing = if outcome.is_ok() { true } else { last_growing };
                dt *= 0.5;
                calm = 0;
                if dt < cfg.dt_min {
                    break if growing {
                        Verdict::Blowup { t_star: t }
                    } else {
                        Verdict::DtUnderflow { t }
                    };
                }
                continue;
            }
            t += h;
            traj.steps += 1;
            last_growing = trial_sup > sup;
            if trial_sup < cfg.growth_check.sqrt() * sup {
                calm += 1;
            } else {
                calm = 0;
            }
            sup = trial_sup;
            u = trial;
            since_record += 1;
            let escaped = sup >= threshold;
            let done = escaped || t >= cfg.t_end - end_tol;
            if since_record >= cfg.record_every || done {
                self.record(&mut traj, &mut rec, &u, t, h);
                since_record = 0;
            }
            if let Some(interval) = cfg.snapshot_interval {
                let within = cfg.snapshot_until.map_or(true, |until| t <= until);
                if within && (t - last_snapshot >= interval || done) {
                    traj.snapshots.push(Snapshot { t, field: u.clone() });
                    last_snapshot = t;
                }
            }
            if escaped {
                break Verdict::Blowup { t_star: t };
            }
            if calm >= cfg.regrow_after && dt < cfg.dt_init {
                dt = (2.0 * dt).min(cfg.dt_init);
                calm = 0;
            }
        };
        if traj.times.last() != Some(&t) {
            self.record(&mut traj, &mut rec, &u, t, 0.0);
        }
        traj.boundary_leak = rec.leak;
        traj.verdict = if rec.leak > cfg.boundary_tolerance {
            Verdict::BoundaryContaminated {
                t: raw.end_time(),
                blowup: matches!(raw, Verdict::Blowup { .. }),
            }
        } else {
            raw
        };
        Ok(traj)
    }
}

/// Runs the solver with default cutoffs.
pub fn run(u0: &Field, config: &SolverConfig, f: &HomogeneousNonlinearity) -> Result<Trajectory> {
    Solver::new(config, f).run(u0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::{preset_table, CoefficientTable};

    fn gaussian(grid: Grid) -> Field {
        Field::from_fn(grid, |x| {
            let r2: f64 = x.iter().map(|c| c * c).sum();
            Complex64::new((-r2).exp(), 0.0)
        })
    }

    #[test]
    fn zero_dt_is_identity() {
        let grid = Grid::new(1, 64, 8.0).unwrap();
        let u = gaussian(grid);
        assert_eq!(linear_step(&u, 0.0), u);
    }

    #[test]
    fn plane_wave_phase() {
        let grid = Grid::new(1, 64, std::f64::consts::PI).unwrap();
        let u = Field::from_fn(grid, |x| Complex64::from_polar(1.0, 3.0 * x[0]));
        let v = linear_step(&u, 0.1);
        for (a, b) in v.data.iter().zip(&u.data) {
            assert!((a - b * Complex64::from_polar(1.0, -0.9)).norm() < 1e-12);
        }
    }

    #[test]
    fn gauge_rotation_is_exact() {
        let f = HomogeneousNonlinearity::from_table(preset_table("gauge", 2).unwrap());
        let grid = Grid::new(2, 4, 1.0).unwrap();
        let mut u = Field::zeros(grid);
        u.data[0] = Complex64::new(2.0, 0.0);
        nonlinear_step(&mut u, 0.1, &f, 4).unwrap();
        assert!((u.data[0] - Complex64::from_polar(2.0, -0.2)).norm() < 1e-10);
        assert_eq!(u.data[1], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn rk4_matches_rotation_for_gauge_term() {
        let table = CoefficientTable::from_terms(1, &[(1, Complex64::new(1.0, 0.0))]);
        let f = HomogeneousNonlinearity::from_table(table);
        let u = Complex64::new(0.3, -0.4);
        let rk = rk4_node(u, 0.01, 4, &f);
        let exact = rotate_node(u, 0.01, 1.0, 1);
        assert!((rk - exact).norm() < 1e-10);
    }

    #[test]
    fn g0_flow_decreases_imaginary_part() {
        let f = HomogeneousNonlinearity::from_table(preset_table("constant", 1).unwrap());
        let u = Complex64::new(0.0, -1.0);
        let v = rk4_node(u, 1e-3, 4, &f);
        assert!(((v.im - u.im) / 1e-3 + 1.0).abs() < 1e-2);
        // Scalar ODE: u = -i w with w' = w³ gives w(t) = (1 - 2t)^{-1/2}.
        let w = rk4_node(u, 0.1, 64, &f);
        assert!((w.im + 1.0 / (1.0f64 - 0.2).sqrt()).abs() < 1e-9);
        assert!(w.re.abs() < 1e-12);
    }

    #[test]
    fn free_flow_conserves_mass() {
        let grid = Grid::new(1, 256, 20.0).unwrap();
        let cfg = SolverConfig { t_end: 0.5, dt_init: 0.01, ..Default::default() };
        let traj = run(&gaussian(grid), &cfg, &HomogeneousNonlinearity::zero(1)).unwrap();
        assert!(matches!(traj.verdict, Verdict::ReachedTEnd { .. }));
        assert!(traj.mass_drift() < 1e-10);
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(traj.times.len(), traj.mass.len());
    }

    #[test]
    fn invalid_config_is_rejected() {
        let cfg = SolverConfig { dt_min: 1.0, dt_init: 0.1, ..Default::default() };
        assert!(cfg.validate().is_err());
    }
}
