//! CSV, JSON, SVG and markdown artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use plotters::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::fit::{fit_scaling, FitModel, FitResult};
use crate::harness::sweep::{Engine, LifespanTable};
use crate::initial_data::DatumFamily;
use crate::lifespan::lifespan_exponent;
use crate::testfunc::Regime;

/// One pass/fail line of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// The linearisation matching a table's datum family.
pub fn default_model(family: DatumFamily, dim: usize) -> FitModel {
    match family {
        DatumFamily::LogWeighted { alpha } => match Regime::of(alpha) {
            Regime::LogLog => FitModel::LogCorrected,
            _ => FitModel::PowerLog,
        },
        DatumFamily::Power { k } if (k - dim as f64).abs() < 1e-12 => FitModel::ExponentialTail,
        DatumFamily::Power { .. } => FitModel::PowerTail,
    }
}

/// The exponent the bound predicts for a family.
pub fn predicted_exponent(family: DatumFamily, dim: usize) -> f64 {
    match family {
        DatumFamily::LogWeighted { alpha } => lifespan_exponent(alpha, dim),
        DatumFamily::Power { k } if (k - dim as f64).abs() < 1e-12 => 1.0,
        DatumFamily::Power { k } => 2.0 / (dim as f64 - k),
    }
}

/// The bound shape with its exponent fixed and `C` fitted to the measured rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCurve {
    pub formula: String,
    pub model: FitModel,
    pub beta: f64,
    pub c: f64,
}

impl BoundCurve {
    /// `log` of the bound at `eps`.
    pub fn log_value(&self, eps: f64) -> Option<f64> {
        let v = match self.model {
            FitModel::PowerLog | FitModel::ExponentialTail => self.c * eps.powf(-self.beta),
            FitModel::LogCorrected => {
                if eps >= 1.0 {
                    return None;
                }
                self.c * (eps * (1.0 / eps).ln()).powf(-self.beta)
            }
            FitModel::PowerTail => self.c.ln() + self.beta * (1.0 / eps).ln(),
        };
        v.is_finite().then_some(v)
    }
}

pub fn bound_curve(table: &LifespanTable) -> Option<BoundCurve> {
    let model = default_model(table.family, table.dim);
    let beta = predicted_exponent(table.family, table.dim);
    let unit = BoundCurve {
        formula: String::new(),
        model,
        beta,
        c: 1.0,
    };
    let pts: Vec<(f64, f64)> = table
        .successful()
        .filter_map(|r| Some((unit.log_value(r.epsilon)?, r.log_lifespan?)))
        .collect();
    if pts.is_empty() {
        return None;
    }
    let (c, formula) = if model == FitModel::PowerTail {
        let shift = pts.iter().map(|(z, l)| l - z).sum::<f64>() / pts.len() as f64;
        (shift.exp(), format!("C eps^(-{beta:.6})"))
    } else {
        let den: f64 = pts.iter().map(|(z, _)| z * z).sum();
        let num: f64 = pts.iter().map(|(z, l)| z * l).sum();
        let shape = match model {
            FitModel::LogCorrected => format!("exp(C (eps log(1/eps))^(-{beta:.6}))"),
            _ => format!("exp(C eps^(-{beta:.6}))"),
        };
        (num / den, shape)
    };
    Some(BoundCurve { formula, model, beta, c })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeRow {
    pub epsilon: f64,
    pub log_lifespan: f64,
    pub bound_formula: String,
    pub log_bound: f64,
    pub ratio: f64,
}

pub fn regime_rows(table: &LifespanTable) -> Vec<RegimeRow> {
    let Some(curve) = bound_curve(table) else {
        return Vec::new();
    };
    table
        .successful()
        .filter_map(|r| {
            let l = r.log_lifespan?;
            let b = curve.log_value(r.epsilon)?;
            Some(RegimeRow {
                epsilon: r.epsilon,
                log_lifespan: l,
                bound_formula: format!("{} with C = {:.6e}", curve.formula, curve.c),
                log_bound: b,
                ratio: l / b,
            })
        })
        .collect()
}

/// Serialises `rows` as CSV with a header taken from the field names.
pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn plot_err<E: std::fmt::Display>(e: E) -> Error {
    Error::Plot(e.to_string())
}

/// Vertical coordinate of a plot: `log log T` when every value allows it.
fn uses_double_log(tables: &[&LifespanTable]) -> bool {
    tables.iter().all(|t| {
        default_model(t.family, t.dim) != FitModel::PowerTail
            && t.successful().all(|r| r.log_lifespan.is_some_and(|l| l > 0.0))
    })
}

fn engine_label(e: Engine) -> &'static str {
    match e {
        Engine::Pde => "t*",
        Engine::Ode => "R*",
    }
}

/// Log-log plot of lifespans against `log(1/ε)` with the fitted bound curve of each table.
pub fn plot_tables(path: &Path, title: &str, tables: &[&LifespanTable]) -> Result<()> {
    let double = uses_double_log(tables);
    let y_of = |log_t: f64| if double { log_t.ln() } else { log_t };
    let mut series = Vec::new();
    for t in tables {
        let pts: Vec<(f64, f64)> = t
            .successful()
            .filter_map(|r| Some(((1.0 / r.epsilon).ln(), y_of(r.log_lifespan?))))
            .filter(|p| p.1.is_finite())
            .collect();
        let curve = bound_curve(t);
        let line: Vec<(f64, f64)> = match (&curve, t.rows.first(), t.rows.last()) {
            (Some(c), Some(a), Some(b)) => {
                let (lo, hi) = (a.epsilon.min(b.epsilon).ln(), a.epsilon.max(b.epsilon).ln());
                (0..=100)
                    .filter_map(|k| {
                        let eps = (lo + (hi - lo) * k as f64 / 100.0).exp();
                        let l = c.log_value(eps)?;
                        let y = y_of(l);
                        y.is_finite().then_some(((1.0 / eps).ln(), y))
                    })
                    .collect()
            }
            _ => Vec::new(),
        };
        let slope = fit_scaling(t, default_model(t.family, t.dim)).ok().map(|f| f.slope);
        series.push((t, pts, line, slope));
    }
    let all: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|(_, p, l, _)| p.iter().chain(l.iter()).copied())
        .collect();
    if all.is_empty() {
        return Err(Error::InsufficientData("nothing to plot".into()));
    }
    let (mut x0, mut x1, mut y0, mut y1) = all.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), &(x, y)| (a.min(x), b.max(x), c.min(y), d.max(y)),
    );
    let pad = |lo: &mut f64, hi: &mut f64| {
        let w = (*hi - *lo).max(1e-3);
        *lo -= 0.05 * w;
        *hi += 0.05 * w;
    };
    pad(&mut x0, &mut x1);
    pad(&mut y0, &mut y1);

    let root = SVGBackend::new(path, (800, 600)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(15)
        .x_label_area_size(45)
        .y_label_area_size(65)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(plot_err)?;
    let ylabel = if double { "log log T" } else { "log T" };
    chart
        .configure_mesh()
        .x_desc("log(1/eps)")
        .y_desc(ylabel)
        .draw()
        .map_err(plot_err)?;
    for (k, (t, pts, line, slope)) in series.iter().enumerate() {
        let color = Palette99::pick(k).to_rgba();
        let label = match slope {
            Some(s) => format!("{} {} (slope {s:.4})", t.scenario, engine_label(t.engine)),
            None => format!("{} {}", t.scenario, engine_label(t.engine)),
        };
        chart
            .draw_series(PointSeries::of_element(pts.clone(), 4, color, &|c, s, st| {
                Circle::new(c, s, st.filled())
            }))
            .map_err(plot_err)?
            .label(label)
            .legend(move |(x, y)| Circle::new((x + 10, y), 4, color.filled()));
        if !line.is_empty() {
            chart
                .draw_series(LineSeries::new(line.clone(), color.stroke_width(2)))
                .map_err(plot_err)?
                .label(format!("{} bound, fitted C", t.scenario))
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color));
        }
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(plot_err)?;
    root.present().map_err(plot_err)?;
    Ok(())
}

/// Everything a report is assembled from.
#[derive(Clone, Debug, Default)]
pub struct ReportInputs {
    pub title: String,
    pub tables: Vec<LifespanTable>,
    pub checks: Vec<Check>,
    /// Extra markdown appended to the summary.
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportOutcome {
    pub files: Vec<PathBuf>,
    pub rows: usize,
    pub violations: usize,
}

impl ReportOutcome {
    pub fn passed(&self) -> bool {
        self.rows > 0 && self.violations == 0
    }
}

fn slug(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect()
}

/// Writes tables, fits, plots and `summary.md` into `dir`.
pub fn write_report(dir: &Path, inputs: &ReportInputs) -> Result<ReportOutcome> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    let mut md = String::new();
    let title = if inputs.title.is_empty() { "Lifespan report" } else { &inputs.title };
    let _ = writeln!(md, "# {title}\n");
    let rows: usize = inputs.tables.iter().map(|t| t.rows.len()).sum();
    let mut violations = inputs.checks.iter().filter(|c| !c.passed).count();

    if rows == 0 {
        let _ = writeln!(md, "no rows\n");
    }
    for t in &inputs.tables {
        let engine = match t.engine {
            Engine::Pde => "pde",
            Engine::Ode => "ode",
        };
        let stem = format!("{}_{engine}", slug(&t.scenario));
        let _ = writeln!(md, "## {} ({:?} engine, d = {}, {})\n", t.scenario, t.engine, t.dim, t.family.describe());
        if t.rows.is_empty() {
            let _ = writeln!(md, "no rows\n");
            continue;
        }
        let path = dir.join(format!("{stem}_lifespans.csv"));
        t.write_csv(fs::File::create(&path)?)?;
        files.push(path);

        let regime = regime_rows(t);
        if !regime.is_empty() {
            let path = dir.join(format!("{stem}_regime.csv"));
            write_rows(&path, &regime)?;
            files.push(path);
        }

        let _ = writeln!(md, "| epsilon | log lifespan | verdict | refinement change |");
        let _ = writeln!(md, "|---|---|---|---|");
        for r in &t.rows {
            let _ = writeln!(
                md,
                "| {:.6e} | {} | {} | {} |",
                r.epsilon,
                r.log_lifespan.map_or("-".into(), |v| format!("{v:.6}")),
                r.verdict,
                r.refinement_change.map_or("-".into(), |v| format!("{v:.3e}")),
            );
        }
        let _ = writeln!(md);

        let model = default_model(t.family, t.dim);
        match fit_scaling(t, model) {
            Ok(fit) => {
                let path = dir.join(format!("{stem}_fit.json"));
                write_json(&path, &FitRecord::new(t, &fit))?;
                files.push(path);
                let _ = writeln!(
                    md,
                    "Fit `{}`: slope {:.6}, predicted {:.6}, R² {:.6}, C {:.6e}.\n",
                    fit.transform,
                    fit.slope,
                    predicted_exponent(t.family, t.dim),
                    fit.r_squared,
                    fit.c_estimate
                );
            }
            Err(e) => {
                let _ = writeln!(md, "Fit skipped: {e}.\n");
            }
        }
        if t.successful().next().is_some() {
            let path = dir.join(format!("{stem}.svg"));
            match plot_tables(&path, &t.scenario, &[t]) {
                Ok(()) => files.push(path),
                Err(e) => {
                    let _ = writeln!(md, "Plot skipped: {e}.\n");
                }
            }
        }
    }
    if inputs.tables.len() > 1 && inputs.tables.iter().all(|t| t.successful().next().is_some()) {
        let path = dir.join("combined.svg");
        let refs: Vec<&LifespanTable> = inputs.tables.iter().collect();
        if plot_tables(&path, title, &refs).is_ok() {
            files.push(path);
        }
    }
    if !inputs.checks.is_empty() {
        let _ = writeln!(md, "## Checks\n");
        for c in &inputs.checks {
            let _ = writeln!(md, "- {} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        let _ = writeln!(md);
        let path = dir.join("report_checks.json");
        write_json(&path, &inputs.checks)?;
        files.push(path);
    }
    for n in &inputs.notes {
        let _ = writeln!(md, "{n}\n");
    }
    if rows == 0 {
        violations += 1;
    }
    let path = dir.join("summary.md");
    fs::write(&path, md)?;
    files.push(path);
    Ok(ReportOutcome { files, rows, violations })
}

/// The JSON form of a fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub scenario: String,
    pub regime: String,
    pub predicted_exponent: f64,
    #[serde(flatten)]
    pub fit: FitResult,
}

impl FitRecord {
    pub fn new(table: &LifespanTable, fit: &FitResult) -> Self {
        Self {
            scenario: table.scenario.clone(),
            regime: table.family.describe(),
            predicted_exponent: predicted_exponent(table.family, table.dim),
            fit: fit.clone(),
        }
    }
}
