use std::fs;
use std::path::{Path, PathBuf};

use lifespan_core::harness::config::RunConfig;
use lifespan_core::harness::fit::{fit_scaling, FitModel};
use lifespan_core::harness::report::{
    default_model, predicted_exponent, regime_rows, write_json, write_report, write_rows, Check, FitRecord,
    ReportInputs,
};
use lifespan_core::harness::sweep::{im_integral_rise, simulate, sweep, Engine, LifespanTable, IM_RISE_TOLERANCE};
use lifespan_core::harness::weak::{default_bumps, verify_weak_identity, WeakReport};
use lifespan_core::initial_data::{write_field, DatumFamily, DatumSpec, FieldHeader, Grid, Precision};
use lifespan_core::lifespan::empirical_inequality_check;
use lifespan_core::nonlinearity::{
    fourier_coefficients, named_symbol, parseval_defect, synthesize_symbol, CoefficientTable, Smoothness,
};
use lifespan_core::quadrature::sphere_measure;
use lifespan_core::solver::Verdict;
use lifespan_core::testfunc::{lemma1_integral, lemma1_lower_bound, lemma1_threshold, pairing_integral, CutoffFamily};
use lifespan_core::{Error, Result};
use serde::Serialize;

use crate::{Cli, Command, EngineArg, ModelArg};

pub fn dispatch(cli: &Cli) -> Result<bool> {
    let checks = match &cli.command {
        Command::Decompose {
            symbol,
            dim,
            order,
            points,
            parseval_tolerance,
        } => decompose(cli, symbol.as_deref(), *dim, *order, *points, *parseval_tolerance)?,
        Command::Lemma1 {
            alpha,
            r0,
            dim,
            r_max,
            points,
            spread,
        } => lemma1(cli, alpha, *r0, *dim, *r_max, *points, *spread)?,
        Command::Simulate { epsilon } => simulate_cmd(cli, *epsilon)?,
        Command::Sweep { engine } => sweep_cmd(cli, *engine)?,
        Command::Fit { table, model } => fit_cmd(cli, table.as_deref(), *model)?,
        Command::VerifyWeak {
            epsilon,
            max_residual,
            no_refine,
        } => verify_weak(cli, *epsilon, *max_residual, !*no_refine)?,
        Command::Report { tables, title } => return report_cmd(cli, tables, title.as_deref()),
    };
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(checks.iter().all(|c| c.passed))
}

fn load_config(cli: &Cli) -> Result<Option<RunConfig>> {
    cli.config.as_deref().map(RunConfig::load).transpose()
}

fn require_config(cli: &Cli) -> Result<RunConfig> {
    load_config(cli)?.ok_or_else(|| Error::Config("this command needs --config".into()))
}

fn out_dir(cli: &Cli, cfg: Option<&RunConfig>) -> Result<PathBuf> {
    let dir = cli
        .out
        .clone()
        .or_else(|| cfg.map(|c| c.out_dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

/// Whether `∫ Im u` must be nonincreasing: a single real, nonnegative `g₀`.
fn dissipative(table: &CoefficientTable) -> bool {
    let terms = table.nonzero_terms(0.0);
    !terms.is_empty() && terms.iter().all(|(n, g)| *n == 0 && g.im == 0.0 && g.re >= 0.0)
}

#[derive(Serialize)]
struct CoefficientRow {
    n: i32,
    re: f64,
    im: f64,
    modulus: f64,
}

#[derive(Serialize)]
struct Decomposition {
    symbol: String,
    dim: usize,
    order: usize,
    points: usize,
    smoothness: Smoothness,
    g0_re: f64,
    g0_im: f64,
    mu: f64,
    l1_norm: f64,
    l1_tail_beyond_half_order: f64,
    parseval_defect: f64,
    blowup_hypothesis: bool,
}

fn decompose(
    cli: &Cli,
    symbol: Option<&str>,
    dim: usize,
    order: usize,
    points: usize,
    tolerance: f64,
) -> Result<Vec<Check>> {
    let cfg = load_config(cli)?;
    let (name, sym, dim) = match (symbol, &cfg) {
        (Some(s), _) => (s.to_string(), named_symbol(s, dim)?, dim),
        (None, Some(c)) => (
            c.nonlinearity.describe(),
            synthesize_symbol(&c.table()?),
            c.grid.dim,
        ),
        (None, None) => return Err(Error::Config("give --symbol or --config".into())),
    };
    let table = fourier_coefficients(&sym, dim, order, points)?;
    let defect = parseval_defect(&sym, &table, points);
    let dir = out_dir(cli, cfg.as_ref())?;
    let rows: Vec<CoefficientRow> = table
        .iter()
        .map(|(n, g)| CoefficientRow {
            n,
            re: g.re,
            im: g.im,
            modulus: g.norm(),
        })
        .collect();
    write_rows(&dir.join("coefficients.csv"), &rows)?;
    let summary = Decomposition {
        symbol: name.clone(),
        dim,
        order,
        points,
        smoothness: sym.smoothness(),
        g0_re: table.get(0).re,
        g0_im: table.get(0).im,
        mu: table.margin_mu(),
        l1_norm: table.l1_norm(),
        l1_tail_beyond_half_order: table.tail_l1(order / 2),
        parseval_defect: defect,
        blowup_hypothesis: table.satisfies_blowup_hypothesis(1e-12),
    };
    write_json(&dir.join("decomposition.json"), &summary)?;
    println!(
        "{name}: mu = {:.12}, l1 = {:.12}, tail = {:.3e}, parseval defect = {defect:.3e}",
        summary.mu, summary.l1_norm, summary.l1_tail_beyond_half_order
    );
    let mut checks = Vec::new();
    if sym.smoothness() == Smoothness::Analytic {
        checks.push(Check::new(
            "parseval",
            defect <= tolerance,
            format!("defect {defect:.3e} against tolerance {tolerance:.1e}"),
        ));
    }
    Ok(checks)
}

#[derive(Serialize)]
struct LemmaRow {
    dim: usize,
    alpha: f64,
    case: &'static str,
    r: f64,
    r1: f64,
    pairing: f64,
    closed_form: f64,
    bound: f64,
    growth: f64,
    ratio: f64,
}

fn lemma1(cli: &Cli, alphas: &[f64], r0: f64, dim: usize, r_max: f64, points: usize, spread: f64) -> Result<Vec<Check>> {
    let cfg = load_config(cli)?;
    let family = cfg
        .as_ref()
        .map_or_else(|| CutoffFamily::new(dim), |c| CutoffFamily::with_mollifier(dim, c.mollifier));
    if points < 2 {
        return Err(Error::Config("lemma1 needs at least two radii".into()));
    }
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for &alpha in alphas {
        let r1 = lemma1_threshold(alpha, r0)?;
        if r1 >= r_max {
            return Err(Error::BelowThreshold { r: r_max, r1 });
        }
        let datum = DatumSpec::new(dim, DatumFamily::LogWeighted { alpha }, 1.0, r0);
        let (lo, hi) = ((r1 * (1.0 + 1e-9)).ln(), r_max.ln());
        let mut ratios = Vec::new();
        let mut below = 0;
        for k in 0..points {
            let r = (lo + (hi - lo) * k as f64 / (points - 1) as f64).exp();
            let bound = lemma1_lower_bound(alpha, r0, r, dim)?;
            let pairing = pairing_integral(&datum, &family, r)?;
            if pairing < bound.bound {
                below += 1;
            }
            let ratio = pairing / bound.growth;
            ratios.push(ratio);
            rows.push(LemmaRow {
                dim,
                alpha,
                case: bound.regime.label(),
                r,
                r1,
                pairing,
                closed_form: sphere_measure(dim) * lemma1_integral(alpha, r0, r)?,
                bound: bound.bound,
                growth: bound.growth,
                ratio,
            });
        }
        let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        checks.push(Check::new(
            format!("lower bound alpha={alpha}"),
            below == 0,
            format!("{below} of {points} radii below the bound, R1 = {r1:.6}"),
        ));
        checks.push(Check::new(
            format!("spread alpha={alpha}"),
            min > 0.0 && max / min <= spread,
            format!("integral/growth in [{min:.6}, {max:.6}], spread {:.4}", max / min),
        ));
    }
    let dir = out_dir(cli, cfg.as_ref())?;
    write_rows(&dir.join("lemma1.csv"), &rows)?;
    Ok(checks)
}

#[derive(Serialize)]
struct RunSummary<'a> {
    scenario: &'a str,
    epsilon: f64,
    verdict: Verdict,
    steps: usize,
    rejected: usize,
    boundary_leak: f64,
    mass_drift: f64,
    im_integral_rise: f64,
    snapshots: usize,
    seed: Option<u64>,
}

fn simulate_cmd(cli: &Cli, epsilon: Option<f64>) -> Result<Vec<Check>> {
    let cfg = require_config(cli)?;
    let dir = out_dir(cli, Some(&cfg))?;
    let eps = epsilon.unwrap_or(cfg.datum.epsilon);
    let grid = cfg.grid.build()?;
    let mut solver = cfg.solver.clone();
    let r_max = cfg.r_list.iter().copied().fold(0.0, f64::max);
    if !cfg.r_list.is_empty() {
        solver.diagnostic_radii = cfg.r_list.clone();
        let interval = *solver.snapshot_interval.get_or_insert(0.005);
        solver.snapshot_until.get_or_insert(r_max + 2.0 * interval.max(solver.dt_init));
    }
    let traj = simulate(&cfg, eps, grid, &solver)?;
    traj.write_csv(fs::File::create(dir.join("trajectory.csv"))?)?;
    if let Some(last) = traj.final_snapshot().map(|s| &s.field) {
        let header = FieldHeader {
            d: grid.dim,
            m: grid.points,
            l: grid.half_width,
            epsilon: eps,
            family: cfg.datum.family.describe(),
            dtype: Precision::Complex128,
            t: traj.snapshots.last().map_or(0.0, |s| s.t),
        };
        write_field(fs::File::create(dir.join("last_snapshot.bin"))?, last, &header)?;
    }
    let rise = im_integral_rise(&traj);
    write_json(
        &dir.join("run.json"),
        &RunSummary {
            scenario: &cfg.scenario,
            epsilon: eps,
            verdict: traj.verdict,
            steps: traj.steps,
            rejected: traj.rejected,
            boundary_leak: traj.boundary_leak,
            mass_drift: traj.mass_drift(),
            im_integral_rise: rise,
            snapshots: traj.snapshots.len(),
            seed: cli.seed,
        },
    )?;
    println!("verdict: {} at t = {:.9}", traj.verdict.label(), traj.verdict.end_time());

    let mut checks = vec![Check::new(
        "boundary",
        !matches!(traj.verdict, Verdict::BoundaryContaminated { .. }),
        format!("boundary-layer leak {:.3e}", traj.boundary_leak),
    )];
    let table = cfg.table()?;
    if dissipative(&table) {
        checks.push(Check::new(
            "imaginary part nonincreasing",
            rise <= IM_RISE_TOLERANCE,
            format!("largest relative rise {rise:.3e}"),
        ));
    }
    if !cfg.r_list.is_empty() {
        let family = cfg.cutoffs();
        let r_min = cfg.r_list.iter().copied().fold(f64::INFINITY, f64::min);
        let budget = family.derivative_budget(&cfg.r_list, 2000, r_min)?;
        let datum = cfg.datum.clone().with_epsilon(eps);
        let chain = empirical_inequality_check(&traj, &family, &cfg.r_list, &table, &datum, &budget, cfg.tolerance)?;
        write_rows(&dir.join("chain.csv"), &chain.rows)?;
        write_json(&dir.join("chain.json"), &chain)?;
        checks.push(Check::new(
            "term bound",
            chain.terms_ok(),
            format!(
                "max |I_n|/I_0 = {:.6}",
                chain.rows.iter().map(|r| r.term_ratio).fold(0.0, f64::max)
            ),
        ));
        checks.push(Check::new("log average", chain.log_average_ok(), "Y <= log 2 * I_0"));
        checks.push(Check::new(
            "chain",
            chain.chain_ok() && !chain.inconclusive,
            format!(
                "tolerance {}, inconclusive = {}, constants C1 = {:.4}, C2 = {:.4}",
                chain.tolerance, chain.inconclusive, budget.c1, budget.c2
            ),
        ));
    }
    Ok(checks)
}

fn table_path(cli: &Cli, cfg: Option<&RunConfig>) -> Result<PathBuf> {
    Ok(out_dir(cli, cfg)?.join("table.json"))
}

fn sweep_cmd(cli: &Cli, engine: EngineArg) -> Result<Vec<Check>> {
    let cfg = require_config(cli)?;
    let engine = match engine {
        EngineArg::Pde => Engine::Pde,
        EngineArg::Ode => Engine::Ode,
    };
    let table = sweep(&cfg, engine)?;
    let dir = out_dir(cli, Some(&cfg))?;
    table.write_csv(fs::File::create(dir.join("lifespans.csv"))?)?;
    write_json(&table_path(cli, Some(&cfg))?, &table)?;
    let regime = regime_rows(&table);
    if !regime.is_empty() {
        write_rows(&dir.join("regime.csv"), &regime)?;
    }
    for r in &table.rows {
        println!(
            "eps = {:.6e}  log lifespan = {:>14}  {}",
            r.epsilon,
            r.log_lifespan.map_or("-".into(), |v| format!("{v:.9}")),
            r.verdict
        );
    }
    let failed: Vec<String> = table
        .rows
        .iter()
        .filter(|r| matches!(r.verdict.as_str(), "failed" | "boundary_contaminated" | "dt_underflow"))
        .map(|r| format!("{:.3e}: {} {}", r.epsilon, r.verdict, r.message))
        .collect();
    let mut checks = vec![Check::new(
        "rows",
        !table.rows.is_empty() && failed.is_empty(),
        if failed.is_empty() {
            format!("{} rows", table.rows.len())
        } else {
            failed.join("; ")
        },
    )];
    let unstable = table.rows.iter().filter(|r| r.refinement_ok == Some(false)).count();
    checks.push(Check::new(
        "refinement",
        unstable == 0,
        format!("{unstable} rows change by more than the refinement tolerance"),
    ));
    let blowups = table.rows.iter().filter(|r| r.verdict == "blowup").count();
    if blowups == table.rows.len() && blowups > 1 {
        let ok = match engine {
            Engine::Pde => table.strictly_decreasing_in_epsilon(),
            Engine::Ode => table.nonincreasing_in_epsilon(),
        };
        checks.push(Check::new("monotone in epsilon", ok, "lifespan against amplitude"));
    }
    if engine == Engine::Pde && dissipative(&cfg.table()?) {
        let rising = table.rows.iter().filter(|r| r.im_monotone == Some(false)).count();
        checks.push(Check::new(
            "imaginary part nonincreasing",
            rising == 0,
            format!("{rising} rows with a rise above {IM_RISE_TOLERANCE:e}"),
        ));
    }
    write_json(&dir.join("checks.json"), &checks)?;
    Ok(checks)
}

fn read_table(path: &Path) -> Result<LifespanTable> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read table {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("bad table {}: {e}", path.display())))
}

fn fit_cmd(cli: &Cli, table: Option<&Path>, model: Option<ModelArg>) -> Result<Vec<Check>> {
    let cfg = load_config(cli)?;
    let path = match table {
        Some(p) => p.to_path_buf(),
        None => table_path(cli, cfg.as_ref())?,
    };
    let table = read_table(&path)?;
    let model = match model {
        Some(ModelArg::PowerLog) => FitModel::PowerLog,
        Some(ModelArg::LogCorrected) => FitModel::LogCorrected,
        Some(ModelArg::PowerTail) => FitModel::PowerTail,
        Some(ModelArg::ExponentialTail) => FitModel::ExponentialTail,
        None => default_model(table.family, table.dim),
    };
    let fit = fit_scaling(&table, model)?;
    let record = FitRecord::new(&table, &fit);
    write_json(&out_dir(cli, cfg.as_ref())?.join("fit.json"), &record)?;
    println!(
        "{}: slope {:.9}, intercept {:.9}, R² {:.9}, C {:.6e}",
        fit.transform, fit.slope, fit.intercept, fit.r_squared, fit.c_estimate
    );
    let tol = cfg.map_or(0.05, |c| c.tolerance);
    let predicted = record.predicted_exponent;
    let rel = (fit.slope - predicted).abs() / predicted;
    Ok(vec![Check::new(
        "exponent",
        rel <= tol,
        format!("slope {:.6} against {predicted:.6}, relative difference {rel:.3e}", fit.slope),
    )])
}

#[derive(Serialize)]
struct WeakLadder {
    points: Vec<usize>,
    reports: Vec<WeakReport>,
    max_normalized: Vec<f64>,
}

fn verify_weak(cli: &Cli, epsilon: Option<f64>, max_residual: f64, refine: bool) -> Result<Vec<Check>> {
    let cfg = require_config(cli)?;
    let dir = out_dir(cli, Some(&cfg))?;
    let eps = epsilon.unwrap_or(cfg.datum.epsilon);
    let f = cfg.nonlinearity.build(cfg.grid.dim)?;
    let bumps = default_bumps(cfg.grid.half_width, cfg.solver.t_end);
    let mut ladder = WeakLadder {
        points: Vec::new(),
        reports: Vec::new(),
        max_normalized: Vec::new(),
    };
    let levels = if refine { 2 } else { 1 };
    let mut solver = cfg.solver.clone();
    solver.snapshot_interval = Some(0.0);
    solver.snapshot_until = None;
    let mut grid = cfg.grid.build()?;
    for level in 0..levels {
        if level > 0 {
            grid = Grid::new(grid.dim, grid.points * cfg.refinement.points_factor.max(2), grid.half_width)?;
            solver.dt_init *= 0.5;
            solver.dt_min *= 0.1;
        }
        let traj = simulate(&cfg, eps, grid, &solver)?;
        if traj.verdict.blowup_time().is_some() || matches!(traj.verdict, Verdict::DtUnderflow { .. }) {
            return Err(Error::Config(format!(
                "run ended with {} before t_end; shorten t_end below the lifespan",
                traj.verdict.label()
            )));
        }
        let rep = verify_weak_identity(&traj, &bumps, &f)?;
        println!("M = {}: max normalized residual {:.3e}", grid.points, rep.max_normalized());
        ladder.points.push(grid.points);
        ladder.max_normalized.push(rep.max_normalized());
        ladder.reports.push(rep);
    }
    write_json(&dir.join("weak.json"), &ladder)?;
    let base = ladder.max_normalized[0];
    let mut checks = vec![Check::new(
        "residual",
        base <= max_residual,
        format!("{base:.3e} against {max_residual:.1e}"),
    )];
    if refine {
        let fine = ladder.max_normalized[1];
        checks.push(Check::new(
            "refinement decreasing",
            fine < base,
            format!("{base:.3e} -> {fine:.3e}"),
        ));
    }
    Ok(checks)
}

fn report_cmd(cli: &Cli, tables: &[PathBuf], title: Option<&str>) -> Result<bool> {
    let cfg = load_config(cli)?;
    let paths = if tables.is_empty() {
        vec![table_path(cli, cfg.as_ref())?]
    } else {
        tables.to_vec()
    };
    let tables = paths.iter().map(|p| read_table(p)).collect::<Result<Vec<_>>>()?;
    let mut checks = Vec::new();
    for t in &tables {
        if let Ok(fit) = fit_scaling(t, default_model(t.family, t.dim)) {
            let predicted = predicted_exponent(t.family, t.dim);
            let rel = (fit.slope - predicted).abs() / predicted;
            let tol = cfg.as_ref().map_or(0.05, |c| c.tolerance);
            checks.push(Check::new(
                format!("{} exponent", t.scenario),
                rel <= tol,
                format!("slope {:.6} against {predicted:.6}", fit.slope),
            ));
        }
    }
    let inputs = ReportInputs {
        title: title
            .map(str::to_string)
            .or_else(|| cfg.as_ref().map(|c| c.scenario.clone()))
            .unwrap_or_default(),
        tables,
        checks,
        notes: Vec::new(),
    };
    let dir = out_dir(cli, cfg.as_ref())?;
    let outcome = write_report(&dir, &inputs)?;
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    if outcome.rows == 0 {
        println!("no rows");
    }
    Ok(outcome.passed())
}
