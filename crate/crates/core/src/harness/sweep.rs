//! Amplitude sweeps over the PDE solver or the ODE model.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::config::RunConfig;
use crate::initial_data::{sample_datum, DatumFamily, Grid};
use crate::lifespan::{ode_blowup_radius, Forcing, OdeModel, OdeOutcome};
use crate::nonlinearity::critical_exponent;
use crate::solver::{Solver, SolverConfig, Trajectory, Verdict};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Pde,
    Ode,
}

impl std::str::FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pde" => Ok(Engine::Pde),
            "ode" => Ok(Engine::Ode),
            other => Err(Error::Config(format!("unknown engine '{other}'"))),
        }
    }
}

/// One amplitude of a sweep. `log_lifespan` is `log t*` (pde) or `log R*` (ode).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LifespanRow {
    pub epsilon: f64,
    pub log_lifespan: Option<f64>,
    pub verdict: String,
    pub refined_log_lifespan: Option<f64>,
    /// Relative change of the lifespan under refinement.
    pub refinement_change: Option<f64>,
    pub refinement_ok: Option<bool>,
    /// `∫ Im u dx` never rose by more than the per-step tolerance.
    pub im_monotone: Option<bool>,
    pub boundary_leak: Option<f64>,
    pub message: String,
}

impl LifespanRow {
    pub fn succeeded(&self) -> bool {
        self.log_lifespan.is_some()
    }

    pub fn lifespan(&self) -> Option<f64> {
        self.log_lifespan.map(f64::exp)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LifespanTable {
    pub scenario: String,
    pub engine: Engine,
    pub dim: usize,
    pub family: DatumFamily,
    pub rows: Vec<LifespanRow>,
}

impl LifespanTable {
    pub fn successful(&self) -> impl Iterator<Item = &LifespanRow> {
        self.rows.iter().filter(|r| r.succeeded())
    }

    /// Lifespans strictly decrease as `ε` grows (rows are stored in decreasing `ε`).
    pub fn strictly_decreasing_in_epsilon(&self) -> bool {
        self.rows.windows(2).all(|w| match (w[0].log_lifespan, w[1].log_lifespan) {
            (Some(a), Some(b)) => a < b,
            _ => false,
        })
    }

    pub fn nonincreasing_in_epsilon(&self) -> bool {
        self.rows.windows(2).all(|w| match (w[0].log_lifespan, w[1].log_lifespan) {
            (Some(a), Some(b)) => a <= b,
            _ => false,
        })
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "epsilon",
            "lifespan",
            "log_lifespan",
            "verdict",
            "refined_log_lifespan",
            "refinement_change",
            "refinement_ok",
            "im_monotone",
            "boundary_leak",
            "message",
        ])?;
        for r in &self.rows {
            out.write_record([
                num(Some(r.epsilon)),
                num(r.lifespan()),
                num(r.log_lifespan),
                r.verdict.clone(),
                num(r.refined_log_lifespan),
                num(r.refinement_change),
                flag(r.refinement_ok),
                flag(r.im_monotone),
                num(r.boundary_leak),
                r.message.clone(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads rows written by [`LifespanTable::write_csv`]; metadata comes from the caller.
    pub fn read_csv<R: Read>(r: R, scenario: &str, engine: Engine, dim: usize, family: DatumFamily) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(r);
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec?;
            let get = |k: usize| rec.get(k).unwrap_or("").trim().to_string();
            let parse = |k: usize| -> Result<Option<f64>> {
                let s = get(k);
                if s.is_empty() {
                    Ok(None)
                } else {
                    s.parse::<f64>()
                        .map(Some)
                        .map_err(|e| Error::Serde(format!("column {k}: '{s}': {e}")))
                }
            };
            let bool_at = |k: usize| match get(k).as_str() {
                "true" => Some(true),
                "false" => Some(false),
                _ => None,
            };
            rows.push(LifespanRow {
                epsilon: parse(0)?.ok_or_else(|| Error::Serde("missing epsilon".into()))?,
                log_lifespan: parse(2)?,
                verdict: get(3),
                refined_log_lifespan: parse(4)?,
                refinement_change: parse(5)?,
                refinement_ok: bool_at(6),
                im_monotone: bool_at(7),
                boundary_leak: parse(8)?,
                message: get(9),
            });
        }
        Ok(Self {
            scenario: scenario.into(),
            engine,
            dim,
            family,
            rows,
        })
    }
}

fn num(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.12e}")).unwrap_or_default()
}

fn flag(v: Option<bool>) -> String {
    v.map(|b| b.to_string()).unwrap_or_default()
}

/// Largest per-step rise of `∫ Im u dx`, relative to `max(1, |∫ Im u₀|)`.
pub fn im_integral_rise(traj: &Trajectory) -> f64 {
    let scale = traj.im_integral.first().map_or(1.0, |v| v.abs().max(1.0));
    traj.im_integral
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max)
        / scale
}

pub const IM_RISE_TOLERANCE: f64 = 1e-8;

/// A single PDE run of the configured scenario at amplitude `epsilon`.
pub fn simulate(cfg: &RunConfig, epsilon: f64, grid: Grid, solver: &SolverConfig) -> Result<Trajectory> {
    let datum = cfg.datum.clone().with_epsilon(epsilon);
    let u0 = sample_datum(&datum, &grid)?;
    let f = cfg.nonlinearity.build(grid.dim)?;
    Solver::new(solver, &f).with_cutoffs(cfg.cutoffs()).run(&u0)
}

fn pde_row(cfg: &RunConfig, epsilon: f64) -> LifespanRow {
    let mut row = LifespanRow {
        epsilon,
        log_lifespan: None,
        verdict: "failed".into(),
        refined_log_lifespan: None,
        refinement_change: None,
        refinement_ok: None,
        im_monotone: None,
        boundary_leak: None,
        message: String::new(),
    };
    let mut run = || -> Result<()> {
        let grid = cfg.grid.build()?;
        let mut solver = cfg.solver.clone();
        solver.snapshot_interval = None;
        let traj = simulate(cfg, epsilon, grid, &solver)?;
        row.verdict = traj.verdict.label().into();
        row.boundary_leak = Some(traj.boundary_leak);
        row.im_monotone = Some(im_integral_rise(&traj) <= IM_RISE_TOLERANCE);
        row.log_lifespan = traj.verdict.blowup_time().map(f64::ln);
        if cfg.refinement.enabled {
            let r = cfg.refinement;
            let fine = Grid::new(grid.dim, grid.points * r.points_factor, grid.half_width)?;
            let mut fine_solver = solver.clone();
            fine_solver.dt_init *= r.dt_factor;
            fine_solver.dt_min *= r.dt_min_factor;
            let refined = simulate(cfg, epsilon, fine, &fine_solver)?;
            row.refined_log_lifespan = refined.verdict.blowup_time().map(f64::ln);
            if let (Some(a), Some(b)) = (traj.verdict.blowup_time(), refined.verdict.blowup_time()) {
                let change = (b - a).abs() / a;
                row.refinement_change = Some(change);
                row.refinement_ok = Some(change <= r.tolerance);
            } else {
                row.refinement_ok = Some(matches!(
                    (traj.verdict, refined.verdict),
                    (Verdict::ReachedTEnd { .. }, Verdict::ReachedTEnd { .. })
                ));
            }
            if let Some(ok) = row.im_monotone {
                row.im_monotone = Some(ok && im_integral_rise(&refined) <= IM_RISE_TOLERANCE);
            }
        }
        Ok(())
    };
    if let Err(e) = run() {
        row.verdict = "failed".into();
        row.message = e.to_string();
    }
    row
}

/// The extremal ODE model matching the configured datum and nonlinearity.
pub fn ode_model(cfg: &RunConfig) -> Result<OdeModel> {
    let DatumFamily::LogWeighted { alpha } = cfg.datum.family else {
        return Err(Error::Config("the ODE engine needs a log-weighted datum".into()));
    };
    let mu = match cfg.ode.mu {
        Some(mu) => mu,
        None => cfg.table()?.margin_mu(),
    };
    let model = OdeModel {
        p0: critical_exponent(cfg.grid.dim),
        forcing: Forcing::for_alpha(alpha, 1.0),
        kappa: mu / std::f64::consts::LN_2,
        c_ode: cfg.ode.c_ode,
        r1: cfg.ode.r1,
        escape: cfg.ode.escape,
        rtol: cfg.ode.rtol,
        s_max: 1e300,
    };
    model.validate()?;
    Ok(model)
}

fn ode_row(model: &OdeModel, epsilon: f64) -> LifespanRow {
    let mut row = LifespanRow {
        epsilon,
        log_lifespan: None,
        verdict: "failed".into(),
        refined_log_lifespan: None,
        refinement_change: None,
        refinement_ok: None,
        im_monotone: None,
        boundary_leak: None,
        message: String::new(),
    };
    match ode_blowup_radius(model, epsilon) {
        Ok(OdeOutcome::Blowup { log_r_star, certification_shift, .. }) => {
            row.log_lifespan = Some(log_r_star);
            row.verdict = "blowup".into();
            let change = certification_shift.abs() / log_r_star.abs().max(f64::MIN_POSITIVE);
            row.refinement_change = Some(change);
            row.refinement_ok = Some(change < 1e-9);
        }
        Ok(OdeOutcome::NoBlowup { s_start, s_scanned }) => {
            row.verdict = "no_blowup".into();
            row.message = format!("no blow-up detected for log R in [{s_start}, {s_scanned}]");
        }
        Err(e) => row.message = e.to_string(),
    }
    row
}

/// Runs every amplitude independently, up to `cfg.workers` at a time.
pub fn sweep(cfg: &RunConfig, engine: Engine) -> Result<LifespanTable> {
    cfg.validate()?;
    let eps = cfg.epsilons();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let rows = match engine {
        Engine::Pde => pool.install(|| eps.par_iter().map(|&e| pde_row(cfg, e)).collect()),
        Engine::Ode => {
            let model = ode_model(cfg)?;
            pool.install(|| eps.par_iter().map(|&e| ode_row(&model, e)).collect())
        }
    };
    Ok(LifespanTable {
        scenario: cfg.scenario.clone(),
        engine,
        dim: cfg.grid.dim,
        family: cfg.datum.family,
        rows,
    })
}
