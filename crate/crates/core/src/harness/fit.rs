//! Least-squares scaling fits on linearised coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::sweep::LifespanTable;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// `log log T` against `log(1/ε)`: `T = exp(C ε^{-β})`.
    PowerLog,
    /// `log log T` against `log(1/(ε log ε⁻¹))`: `T = exp(C (ε log ε⁻¹)^{-β})`.
    LogCorrected,
    /// `log T` against `log(1/ε)`: `T = C ε^{-β}`.
    PowerTail,
    /// `log T` against `1/ε`: `T = exp(β/ε)`, slope is `C`.
    ExponentialTail,
}

impl FitModel {
    pub fn transform(&self) -> &'static str {
        match self {
            FitModel::PowerLog => "y = log log T, x = log(1/eps)",
            FitModel::LogCorrected => "y = log log T, x = log(1/(eps log(1/eps)))",
            FitModel::PowerTail => "y = log T, x = log(1/eps)",
            FitModel::ExponentialTail => "y = log T, x = 1/eps",
        }
    }

    fn abscissa(&self, eps: f64) -> Option<f64> {
        let v = match self {
            FitModel::PowerLog | FitModel::PowerTail => (1.0 / eps).ln(),
            FitModel::LogCorrected => {
                if eps >= 1.0 {
                    return None;
                }
                (1.0 / (eps * (1.0 / eps).ln())).ln()
            }
            FitModel::ExponentialTail => 1.0 / eps,
        };
        v.is_finite().then_some(v)
    }

    fn ordinate(&self, log_t: f64) -> Option<f64> {
        let v = match self {
            FitModel::PowerLog | FitModel::LogCorrected => {
                if log_t <= 0.0 {
                    return None;
                }
                log_t.ln()
            }
            FitModel::PowerTail | FitModel::ExponentialTail => log_t,
        };
        v.is_finite().then_some(v)
    }
}

impl std::str::FromStr for FitModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "power_log" => Ok(FitModel::PowerLog),
            "log_corrected" => Ok(FitModel::LogCorrected),
            "power_tail" => Ok(FitModel::PowerTail),
            "exponential_tail" => Ok(FitModel::ExponentialTail),
            other => Err(Error::Config(format!("unknown fit model '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResidual {
    pub epsilon: f64,
    pub x: f64,
    pub y: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    pub transform: String,
    /// The empirical exponent: slope against the model's abscissa.
    pub slope: f64,
    pub intercept: f64,
    /// `C` recovered from the intercept (`exp(intercept)` for log-log forms).
    pub c_estimate: f64,
    pub r_squared: f64,
    pub residuals: Vec<FitResidual>,
}

pub const MIN_ROWS: usize = 5;

/// Ordinary least squares on `(x, y)`; returns `(slope, intercept, R²)`.
pub fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let r2 = if ss_tot > 0.0 { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) } else { 1.0 };
    (slope, intercept, r2)
}

/// Fits `(ε, log T)` pairs.
pub fn fit_points(points: &[(f64, f64)], model: FitModel) -> Result<FitResult> {
    let mut used = Vec::new();
    for &(eps, log_t) in points {
        if let (Some(x), Some(y)) = (model.abscissa(eps), model.ordinate(log_t)) {
            used.push((eps, x, y));
        }
    }
    if used.len() < MIN_ROWS {
        return Err(Error::InsufficientData(format!(
            "{} usable rows for {:?}, need at least {MIN_ROWS}",
            used.len(),
            model
        )));
    }
    let xs: Vec<f64> = used.iter().map(|u| u.1).collect();
    let ys: Vec<f64> = used.iter().map(|u| u.2).collect();
    let (slope, intercept, r_squared) = least_squares(&xs, &ys);
    let c_estimate = match model {
        FitModel::PowerLog | FitModel::LogCorrected | FitModel::PowerTail => intercept.exp(),
        FitModel::ExponentialTail => slope,
    };
    Ok(FitResult {
        model,
        transform: model.transform().into(),
        slope,
        intercept,
        c_estimate,
        r_squared,
        residuals: used
            .iter()
            .map(|&(epsilon, x, y)| FitResidual {
                epsilon,
                x,
                y,
                residual: y - intercept - slope * x,
            })
            .collect(),
    })
}

pub fn fit_scaling(table: &LifespanTable, model: FitModel) -> Result<FitResult> {
    let points: Vec<(f64, f64)> = table
        .successful()
        .filter_map(|r| r.log_lifespan.map(|l| (r.epsilon, l)))
        .collect();
    fit_points(&points, model)
}

/// Least-squares `C` in `log T = C ε^{-β}` with `β` fixed, for overlaying a bound curve.
pub fn fit_bound_constant(points: &[(f64, f64)], beta: f64) -> Option<f64> {
    let (num, den) = points.iter().fold((0.0, 0.0), |(n, d), &(eps, log_t)| {
        let x = eps.powf(-beta);
        (n + x * log_t, d + x * x)
    });
    (den > 0.0).then(|| num / den)
}
