//! Closed-form lifespan bounds, the extremal ODE model and the empirical proof-chain check.

use std::f64::consts::LN_2;

use num_complex::Complex64;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::initial_data::{sample_datum, DatumFamily, DatumSpec};
use crate::nonlinearity::{critical_exponent, evaluate_term, CoefficientTable};
use crate::quadrature::ball_volume;
use crate::solver::Trajectory;
use crate::spacetime;
use crate::testfunc::{CutoffFamily, DerivativeBudget, Regime};

/// Parameters of one bound evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeParams {
    pub dim: usize,
    #[serde(flatten)]
    pub family: DatumFamily,
    pub mu: f64,
    pub c: f64,
    pub epsilon: f64,
    /// Smallness threshold; `None` skips the check.
    pub eps0: Option<f64>,
}

impl RegimeParams {
    pub fn new(dim: usize, family: DatumFamily, c: f64, epsilon: f64) -> Self {
        Self {
            dim,
            family,
            mu: 1.0,
            c,
            epsilon,
            eps0: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Domain("dimension must be positive".into()));
        }
        if !(self.mu > 0.0) {
            return Err(Error::Domain(format!("margin mu = {} must be positive", self.mu)));
        }
        if !(self.c > 0.0) {
            return Err(Error::Domain(format!("constant C = {} must be positive", self.c)));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Domain(format!("epsilon = {} must be positive", self.epsilon)));
        }
        if let Some(e0) = self.eps0 {
            if self.epsilon >= e0 {
                return Err(Error::Domain(format!("epsilon = {} is not below eps0 = {e0}", self.epsilon)));
            }
        }
        Ok(())
    }
}

/// An upper bound on the lifespan, kept as a logarithm so exponential cases do not overflow.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LifespanBound {
    pub case: &'static str,
    pub log_value: f64,
}

impl LifespanBound {
    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }
}

/// Bound for power tails `|x|^{-k}`: `Cε^{-2/(d-k)}` for `k < d`, `exp(C/ε)` for `k = d`.
pub fn power_tail_bound(params: &RegimeParams) -> Result<LifespanBound> {
    params.validate()?;
    let DatumFamily::Power { k } = params.family else {
        return Err(Error::Domain("power-tail bound needs the power family".into()));
    };
    let d = params.dim as f64;
    let eps = params.epsilon;
    if k > d + 1e-12 {
        return Err(Error::Domain(format!("tail power k = {k} exceeds d = {d}")));
    }
    if (k - d).abs() <= 1e-12 {
        Ok(LifespanBound {
            case: "k=d",
            log_value: params.c / eps,
        })
    } else {
        Ok(LifespanBound {
            case: "k<d",
            log_value: params.c.ln() - 2.0 / (d - k) * eps.ln(),
        })
    }
}

/// Bound for log-weighted tails `|x|^{-d}(log|x|)^{-α}`, three regimes in `α`.
pub fn log_weighted_bound(params: &RegimeParams) -> Result<LifespanBound> {
    params.validate()?;
    let DatumFamily::LogWeighted { alpha } = params.family else {
        return Err(Error::Domain("log-weighted bound needs the log-weighted family".into()));
    };
    let d = params.dim as f64;
    let eps = params.epsilon;
    let (case, log_value) = match Regime::of(alpha) {
        Regime::Bounded => ("alpha>1", params.c * eps.powf(-2.0 / d)),
        Regime::LogLog => {
            if eps >= 1.0 {
                return Err(Error::Domain(format!("epsilon = {eps} must be below 1 when alpha = 1")));
            }
            ("alpha=1", params.c * (eps * (1.0 / eps).ln()).powf(-2.0 / d))
        }
        Regime::Power => ("alpha<1", params.c * eps.powf(-lifespan_exponent(alpha, params.dim))),
    };
    Ok(LifespanBound { case, log_value })
}

/// The power of `1/ε` (or of `1/(ε log ε⁻¹)` when `α = 1`) inside the exponential bound.
pub fn lifespan_exponent(alpha: f64, dim: usize) -> f64 {
    let d = dim as f64;
    match Regime::of(alpha) {
        Regime::Bounded | Regime::LogLog => 2.0 / d,
        Regime::Power => 2.0 / (d + 2.0 * (1.0 - alpha)),
    }
}

/// Exact exponent comparison for `α = 0` tails.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExponentRatio {
    pub dim: i64,
    /// `2/(d+2)`, the refined exponent of `1/ε`.
    pub refined: Ratio<i64>,
    /// `2/d`, the `1/ε` power of the polynomial power-tail bound at `k = 0`.
    pub reference: Ratio<i64>,
    /// `refined / reference`.
    pub ratio: Ratio<i64>,
    /// `d/(d+2)`.
    pub expected: Ratio<i64>,
    /// `refined / 1`, against the exponent of `exp(C/ε)` at `k = d`.
    pub ratio_vs_exponential: Ratio<i64>,
}

pub fn refinement_exponent_ratio(dim: i64) -> Result<ExponentRatio> {
    if dim <= 0 {
        return Err(Error::Domain("dimension must be positive".into()));
    }
    let refined = Ratio::new(2, dim + 2);
    let reference = Ratio::new(2, dim);
    Ok(ExponentRatio {
        dim,
        refined,
        reference,
        ratio: refined / reference,
        expected: Ratio::new(dim, dim + 2),
        ratio_vs_exponential: refined,
    })
}

/// The forcing `b` as a function of `s = log R`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Forcing {
    Constant { c: f64 },
    /// `c log s = c log log R`.
    LogLog { c: f64 },
    /// `c s^{p} = c (log R)^{p}`.
    LogPower { c: f64, power: f64 },
}

impl Forcing {
    pub fn for_alpha(alpha: f64, c: f64) -> Self {
        match Regime::of(alpha) {
            Regime::Bounded => Forcing::Constant { c },
            Regime::LogLog => Forcing::LogLog { c },
            Regime::Power => Forcing::LogPower { c, power: 1.0 - alpha },
        }
    }

    pub fn at(&self, s: f64) -> f64 {
        match *self {
            Forcing::Constant { c } => c,
            Forcing::LogLog { c } => c * s.ln().max(0.0),
            Forcing::LogPower { c, power } => c * s.powf(power),
        }
    }

    fn scale(&self) -> f64 {
        match *self {
            Forcing::Constant { c } | Forcing::LogLog { c } | Forcing::LogPower { c, .. } => c,
        }
    }
}

/// `R Y'(R) = C_ode (ε b(R) + κ Y)^{p₀}`, `Y(R₁) = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdeModel {
    pub p0: f64,
    pub forcing: Forcing,
    pub kappa: f64,
    pub c_ode: f64,
    pub r1: f64,
    pub escape: f64,
    pub rtol: f64,
    /// Largest `s = log R` scanned before giving up.
    pub s_max: f64,
}

impl OdeModel {
    /// Model with `κ = μ / log 2`, unit forcing constant and start `R₁ = e`.
    pub fn for_regime(dim: usize, alpha: f64, mu: f64, c_ode: f64) -> Self {
        Self {
            p0: critical_exponent(dim),
            forcing: Forcing::for_alpha(alpha, 1.0),
            kappa: mu / LN_2,
            c_ode,
            r1: std::f64::consts::E,
            escape: 1e12,
            rtol: 1e-12,
            s_max: 1e300,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p0 > 1.0) {
            return Err(Error::Domain("p0 must exceed 1".into()));
        }
        if !(self.kappa >= 0.0 && self.c_ode > 0.0 && self.escape > 0.0 && self.rtol > 0.0) {
            return Err(Error::Domain("kappa ≥ 0, C_ode, escape and rtol > 0 required".into()));
        }
        let s1 = self.r1.ln();
        let ok = match self.forcing {
            Forcing::Constant { c } => c >= 0.0 && s1.is_finite(),
            Forcing::LogLog { c } => c >= 0.0 && s1 >= 1.0,
            Forcing::LogPower { c, power } => c >= 0.0 && power >= 0.0 && s1 > 0.0,
        };
        if !ok {
            return Err(Error::Domain(format!(
                "forcing {:?} is not nonnegative and nondecreasing from R1 = {}",
                self.forcing, self.r1
            )));
        }
        Ok(())
    }

    /// Exact `log R*` for constant forcing: `s₁ + (εc)^{1-p₀}/(C κ (p₀-1))`.
    pub fn separable_log_radius(&self, epsilon: f64) -> Option<f64> {
        match self.forcing {
            Forcing::Constant { c } if self.kappa > 0.0 => Some(
                self.r1.ln() + (epsilon * c).powf(1.0 - self.p0) / (self.c_ode * self.kappa * (self.p0 - 1.0)),
            ),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum OdeOutcome {
    Blowup {
        /// `log R*`.
        log_r_star: f64,
        /// Change in `log R*` when the escape level grows tenfold.
        certification_shift: f64,
        steps: usize,
    },
    NoBlowup {
        s_start: f64,
        s_scanned: f64,
    },
}

impl OdeOutcome {
    pub fn log_r_star(&self) -> Option<f64> {
        match *self {
            OdeOutcome::Blowup { log_r_star, .. } => Some(log_r_star),
            OdeOutcome::NoBlowup { .. } => None,
        }
    }
}

struct Dopri {
    rtol: f64,
    atol: f64,
}

enum Stop {
    Condition,
    End,
}

impl Dopri {
    /// Dormand–Prince 5(4) for a scalar ODE until `x_end` or `stop(x, y)`.
    fn run<F, S>(&self, f: F, mut x: f64, mut y: f64, x_end: f64, stop: S) -> (f64, f64, usize, Stop)
    where
        F: Fn(f64, f64) -> f64,
        S: Fn(f64, f64) -> bool,
    {
        const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
        const A: [[f64; 6]; 6] = [
            [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
            [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
            [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
            [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
            [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
        ];
        const E: [f64; 7] = [
            71.0 / 57600.0,
            0.0,
            -71.0 / 16695.0,
            71.0 / 1920.0,
            -17253.0 / 339200.0,
            22.0 / 525.0,
            -1.0 / 40.0,
        ];
        let span = x_end - x;
        let mut h = (span * 1e-6).max(1e-12 * x.abs().max(1.0)).min(span);
        let mut steps = 0;
        let mut k = [0.0f64; 7];
        k[0] = f(x, y);
        while x < x_end {
            if stop(x, y) {
                return (x, y, steps, Stop::Condition);
            }
            h = h.min(x_end - x);
            for i in 0..6 {
                let yi = y + h * (0..=i).map(|j| A[i][j] * k[j]).sum::<f64>();
                k[i + 1] = f(x + C[i] * h, yi);
            }
            let y_new = y + h * (0..6).map(|j| A[5][j] * k[j]).sum::<f64>();
            let err_abs = h * (0..7).map(|j| E[j] * k[j]).sum::<f64>();
            let scale = self.atol + self.rtol * y.abs().max(y_new.abs());
            let err = (err_abs / scale).abs();
            if err <= 1.0 && y_new.is_finite() {
                x += h;
                y = y_new;
                k[0] = k[6];
                steps += 1;
                let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                h *= grow;
            } else {
                let shrink = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.1 };
                h *= shrink;
                if h <= f64::EPSILON * x.abs().max(1.0) {
                    return (x, y, steps, Stop::End);
                }
            }
        }
        (x, y, steps, Stop::End)
    }
}

/// Integrates the extremal model in `s = log R` until `Y` reaches the escape level.
pub fn ode_blowup_radius(model: &OdeModel, epsilon: f64) -> Result<OdeOutcome> {
    model.validate()?;
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!("epsilon = {epsilon} must be positive")));
    }
    let p0 = model.p0;
    let (c, kappa) = (model.c_ode, model.kappa);
    let forcing = model.forcing;
    let s1 = model.r1.ln();
    let atol = model.rtol * c * (epsilon * forcing.scale()).powf(p0);
    let phase1 = Dopri { rtol: model.rtol, atol: atol.max(f64::MIN_POSITIVE) };
    let rhs = |s: f64, y: f64| c * (epsilon * forcing.at(s) + kappa * y).powf(p0);
    // A large Y alone proves nothing; escape is only measured once κY dominates the forcing.
    let (s_sw, y_sw, steps1, why) = phase1.run(rhs, s1, 0.0, model.s_max, |s, y| {
        kappa > 0.0 && y > 0.0 && kappa * y >= epsilon * forcing.at(s)
    });
    if matches!(why, Stop::End) {
        return Ok(OdeOutcome::NoBlowup { s_start: s1, s_scanned: s_sw });
    }
    let escape = model.escape.max(10.0 * y_sw);
    // Self-amplification dominates: swap roles and integrate s as a function of v = log Y.
    let inverse = |v: f64, s: f64| {
        let y = v.exp();
        y / (c * (epsilon * forcing.at(s) + kappa * y).powf(p0))
    };
    let phase2 = Dopri { rtol: model.rtol, atol: model.rtol * s_sw.abs().max(1.0) };
    let v_sw = y_sw.ln();
    let (_, s_star, steps2, _) = phase2.run(inverse, v_sw, s_sw, escape.ln(), |_, _| false);
    let (_, s_far, _, _) = phase2.run(inverse, v_sw, s_sw, (10.0 * escape).ln(), |_, _| false);
    Ok(OdeOutcome::Blowup {
        log_r_star: s_star,
        certification_shift: s_far - s_star,
        steps: steps1 + steps2,
    })
}

/// Result of the `α = 1` inversion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alpha1Threshold {
    pub eps_star: f64,
    pub s_star: f64,
    /// Infimum over `(0, ε]` of the bracketed factor raised to `p₀ - 1`.
    pub delta_star: f64,
    /// `ε^{p₀-1} S*(log S*)^{p₀-1}`.
    pub lhs: f64,
    pub chain_holds: bool,
    /// `log` of the implied bound `exp(2S*)`.
    pub log_bound: f64,
}

/// `S* = c* ε*^{-1}(log ε*^{-1})^{1-p₀}` with `ε* = ε^{p₀-1}`, plus the check `lhs ≥ c* δ*`.
pub fn alpha1_threshold(epsilon: f64, p0: f64, c: f64, c_star: f64) -> Result<Alpha1Threshold> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain(format!("epsilon = {epsilon} must lie in (0, 1)")));
    }
    if !(p0 > 1.0 && c > 0.0 && c_star > 0.0) {
        return Err(Error::Domain("p0 > 1, C > 0 and c* > 0 required".into()));
    }
    let b = p0 - 1.0;
    let eps_star = epsilon.powf(b);
    let log_inv = -eps_star.ln();
    if !(log_inv > 0.0) {
        return Err(Error::Domain(format!("log(1/eps*) = {log_inv} is not positive")));
    }
    let s_star = c_star / eps_star * log_inv.powf(-b);
    let a = c_star.ln();
    let bracket = |l: f64| 1.0 + (a - b * l.ln()) / l;
    // The bracket is minimised at log L = 1 + a/b and tends to 1 as L grows.
    let l_min = (1.0 + a / b).exp();
    let inf = if l_min >= log_inv { bracket(l_min) } else { bracket(log_inv) };
    if !(inf > 0.0) {
        return Err(Error::Domain(format!("bracket infimum {inf} is not positive")));
    }
    let delta_star = inf.powf(b);
    let log_s = s_star.ln();
    let lhs = if log_s > 0.0 { eps_star * s_star * log_s.powf(b) } else { f64::NAN };
    Ok(Alpha1Threshold {
        eps_star,
        s_star,
        delta_star,
        lhs,
        chain_holds: lhs >= c_star * delta_star * (1.0 - 1e-12),
        log_bound: 2.0 * s_star,
    })
}

/// `c* = (δ* C)^{-1}`, the choice closing the `α = 1` argument.
pub fn closing_c_star(delta_star: f64, c: f64) -> f64 {
    1.0 / (delta_star * c)
}

/// Per-radius quantities of the empirical chain.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainRow {
    pub r: f64,
    /// `max_n |Iₙ(R)| / I₀(R)`.
    pub term_ratio: f64,
    pub i0: f64,
    pub y: f64,
    pub ry_prime: f64,
    pub pairing: f64,
    /// `pairing + μ I₀`.
    pub lower: f64,
    /// `pairing + Re Σ gₙ Iₙ`.
    pub identity_rhs: f64,
    /// `Re ∬ u(-i∂ₜψ + Δψ)`.
    pub identity_lhs: f64,
    /// `∬ |u|(|∂ₜψ| + |Δψ|)`.
    pub derivative_mass: f64,
    /// `∬ |u|(C₁/R + C₂|x|²/R²)(ψ*)^{1/p₀}`.
    pub budget_mass: f64,
    /// `(C₁+C₂)|B₁|^{1/p₀'} (R Y')^{1/p₀}`.
    pub holder_bound: f64,
    pub quadrature_error: f64,
    pub terms_ok: bool,
    pub log_average_ok: bool,
    pub chain_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainReport {
    pub mu: f64,
    pub tolerance: f64,
    pub rows: Vec<ChainRow>,
    pub inconclusive: bool,
}

impl ChainReport {
    pub fn terms_ok(&self) -> bool {
        self.rows.iter().all(|r| r.terms_ok)
    }

    pub fn log_average_ok(&self) -> bool {
        self.rows.iter().all(|r| r.log_average_ok)
    }

    pub fn chain_ok(&self) -> bool {
        self.rows.iter().all(|r| r.chain_ok)
    }

    pub fn passed(&self) -> bool {
        !self.inconclusive && self.terms_ok() && self.log_average_ok() && self.chain_ok()
    }
}

/// Tabulated `Λ(σ) = ∫_σ^∞ η*(s)^m ds/s` on `[1/2, 1]`, linear interpolation.
struct LogIntegralTable {
    nodes: Vec<f64>,
}

impl LogIntegralTable {
    const SIZE: usize = 4096;

    fn new(family: &CutoffFamily) -> Self {
        let nodes = (0..=Self::SIZE)
            .map(|k| family.log_integral(0.5 + 0.5 * k as f64 / Self::SIZE as f64))
            .collect();
        Self { nodes }
    }

    fn at(&self, sigma: f64) -> f64 {
        if sigma >= 1.0 {
            return 0.0;
        }
        if sigma <= 0.5 {
            return self.nodes[0];
        }
        let pos = (sigma - 0.5) * 2.0 * Self::SIZE as f64;
        let k = (pos.floor() as usize).min(Self::SIZE - 1);
        let w = pos - k as f64;
        self.nodes[k] * (1.0 - w) + self.nodes[k + 1] * w
    }
}

/// Checks `|Iₙ| ≤ I₀`, `Y ≤ log 2 · I₀` and the Hölder chain on stored snapshots.
pub fn empirical_inequality_check(
    trajectory: &Trajectory,
    family: &CutoffFamily,
    r_grid: &[f64],
    table: &CoefficientTable,
    datum: &DatumSpec,
    budget: &DerivativeBudget,
    tolerance: f64,
) -> Result<ChainReport> {
    let snaps = &trajectory.snapshots;
    if snaps.len() < 3 {
        return Err(Error::InsufficientData("at least three snapshots are needed".into()));
    }
    let grid = trajectory.grid;
    let dim = grid.dim;
    let p0 = family.p0;
    let mu = table.margin_mu();
    let terms: Vec<(i32, Complex64)> = table.nonzero_terms(0.0);
    let u0 = sample_datum(datum, &grid)?;
    let cell = grid.cell_volume();
    let lambda = LogIntegralTable::new(family);
    let vol_factor = ball_volume(dim).powf(1.0 / family.p0_prime);
    let t_last = snaps.last().map(|s| s.t).unwrap_or(0.0);
    let mut inconclusive = false;
    let mut rows = Vec::with_capacity(r_grid.len());

    for &r in r_grid {
        if r >= t_last {
            return Err(Error::InsufficientData(format!(
                "radius {r} reaches past the last snapshot at t = {t_last}"
            )));
        }
        // Slots: [I₀, y, Y, lhs, deriv, budget, Iₙ...]
        let count = 6 + terms.len();
        let est = spacetime::integrate(snaps, r, count, |t, field, out| {
            for (idx, &u) in field.data.iter().enumerate() {
                let x_sq = grid.radius_sq(idx);
                let sigma = (x_sq + t) / r;
                if sigma >= 1.0 {
                    continue;
                }
                let modulus = u.norm();
                let powered = modulus.powf(p0);
                let psi = family.psi(r, t, x_sq);
                let psi_star = family.psi_star(r, t, x_sq);
                let der = family.psi_derivatives(r, t, x_sq);
                let weight = (budget.c1 / r + budget.c2 * x_sq / (r * r)) * family.holder_weight(r, t, x_sq);
                out[0] += powered * psi;
                out[1] += powered * psi_star;
                out[2] += powered * lambda.at(sigma);
                out[3] += u * Complex64::new(der.laplacian, -der.dt);
                out[4] += modulus * (der.dt.abs() + der.laplacian.abs());
                out[5] += modulus * weight;
                for (slot, &(n, _)) in out[6..].iter_mut().zip(&terms) {
                    *slot += evaluate_term(n, u, dim) * psi;
                }
            }
            out.iter_mut().for_each(|z| *z *= cell);
        });
        let i0 = est[0].re();
        let ry_prime = est[1].re();
        let y = est[2].re();
        let identity_lhs = est[3].re();
        let derivative_mass = est[4].re();
        let budget_mass = est[5].re();
        let i_n: Vec<Complex64> = est[6..].iter().map(|e| e.value).collect();
        let pairing = -u0
            .data
            .iter()
            .enumerate()
            .map(|(idx, z)| z.im * family.psi(r, 0.0, grid.radius_sq(idx)))
            .sum::<f64>()
            * cell;
        let nonlinear: f64 = terms.iter().zip(&i_n).map(|(&(_, g), i)| (g * i).re).sum();
        let identity_rhs = pairing + nonlinear;
        let lower = pairing + mu * i0;
        let holder_bound = budget.support_constant() * vol_factor * ry_prime.max(0.0).powf(1.0 / p0);
        let term_ratio = i_n.iter().map(|z| z.norm()).fold(0.0, f64::max) / i0.max(f64::MIN_POSITIVE);

        let scale = [i0, derivative_mass, budget_mass, identity_lhs.abs(), pairing.abs()]
            .iter()
            .fold(f64::MIN_POSITIVE, |a, b| a.max(*b));
        let quadrature_error = est.iter().map(|e| e.error()).fold(0.0, f64::max) / scale;
        if quadrature_error > tolerance {
            inconclusive = true;
        }
        let slack = 1.0 + tolerance;
        let terms_ok = i_n.iter().all(|z| z.norm() <= i0 * (1.0 + 1e-10) + 1e-300);
        let log_average_ok = y <= LN_2 * i0 * (1.0 + 1e-6) + 1e-300;
        let chain_ok = lower <= identity_rhs * (1.0 + 1e-10) + 1e-300
            && identity_rhs <= derivative_mass * slack
            && identity_lhs <= derivative_mass * (1.0 + 1e-10)
            && derivative_mass <= budget_mass * slack
            && budget_mass <= holder_bound * slack
            && lower <= holder_bound * slack;
        rows.push(ChainRow {
            r,
            term_ratio,
            i0,
            y,
            ry_prime,
            pairing,
            lower,
            identity_rhs,
            identity_lhs,
            derivative_mass,
            budget_mass,
            holder_bound,
            quadrature_error,
            terms_ok,
            log_average_ok,
            chain_ok,
        });
    }
    Ok(ChainReport {
        mu,
        tolerance,
        rows,
        inconclusive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_tail_examples() {
        let p = RegimeParams::new(2, DatumFamily::Power { k: 2.0 }, 1.0, 0.1);
        let b = power_tail_bound(&p).unwrap();
        assert!((b.log_value - 10.0).abs() < 1e-12);
        let p = RegimeParams::new(2, DatumFamily::Power { k: 0.0 }, 1.0, 0.1);
        assert!((power_tail_bound(&p).unwrap().value() - 10.0).abs() < 1e-9);
        let half = RegimeParams { epsilon: 0.05, ..p.clone() };
        let ratio = power_tail_bound(&half).unwrap().value() / power_tail_bound(&p).unwrap().value();
        assert!((ratio - 2.0).abs() < 1e-9);
        let bad = RegimeParams::new(1, DatumFamily::Power { k: 1.5 }, 1.0, 0.1);
        assert!(power_tail_bound(&bad).is_err());
    }

    #[test]
    fn log_weighted_examples() {
        let p = RegimeParams::new(2, DatumFamily::LogWeighted { alpha: 2.0 }, 1.0, 0.01);
        assert!((log_weighted_bound(&p).unwrap().log_value - 100.0).abs() < 1e-9);
        let p = RegimeParams::new(1, DatumFamily::LogWeighted { alpha: 0.0 }, 1.0, 0.01);
        assert!((log_weighted_bound(&p).unwrap().log_value - 10f64.powf(4.0 / 3.0)).abs() < 1e-9);
        let p = RegimeParams::new(1, DatumFamily::LogWeighted { alpha: 1.0 }, 1.0, 1.5);
        assert!(log_weighted_bound(&p).is_err());
        let p = RegimeParams { eps0: Some(0.005), ..RegimeParams::new(1, DatumFamily::LogWeighted { alpha: 0.0 }, 1.0, 0.01) };
        assert!(log_weighted_bound(&p).is_err());
    }

    #[test]
    fn exponent_ratio_is_exact() {
        for d in 1..=3 {
            let r = refinement_exponent_ratio(d).unwrap();
            assert_eq!(r.ratio, r.expected);
            assert_eq!(r.ratio_vs_exponential, Ratio::new(2, d + 2));
        }
    }

    #[test]
    fn separable_case_matches_closed_form() {
        let model = OdeModel {
            p0: 2.0,
            forcing: Forcing::Constant { c: 1.0 },
            kappa: 1.0,
            c_ode: 1.0,
            r1: 1.0,
            escape: 1e12,
            rtol: 1e-12,
            s_max: 1e300,
        };
        let exact = model.separable_log_radius(0.1).unwrap();
        assert!((exact - 10.0).abs() < 1e-12);
        let got = ode_blowup_radius(&model, 0.1).unwrap();
        let OdeOutcome::Blowup { log_r_star, certification_shift, .. } = got else {
            panic!("expected blow-up");
        };
        assert!(((log_r_star - exact) / exact).abs() < 1e-6, "{log_r_star} vs {exact}");
        assert!(certification_shift.abs() < 1e-9);
    }

    #[test]
    fn no_self_amplification_never_escapes() {
        let mut model = OdeModel::for_regime(2, 2.0, 1.0, 0.1);
        model.kappa = 0.0;
        assert!(matches!(ode_blowup_radius(&model, 0.1).unwrap(), OdeOutcome::NoBlowup { .. }));
    }

    #[test]
    fn radius_is_monotone_in_epsilon() {
        for alpha in [0.0, 1.0, 2.0] {
            let model = OdeModel::for_regime(1, alpha, 1.0, 0.1);
            let mut prev = f64::INFINITY;
            for k in 0..10 {
                let eps = 1e-3 * 2f64.powi(k);
                let s = ode_blowup_radius(&model, eps).unwrap().log_r_star().unwrap();
                assert!(s <= prev, "alpha {alpha}: {s} > {prev}");
                prev = s;
            }
        }
    }

    #[test]
    fn alpha1_examples() {
        let eps = (-10.0f64).exp();
        let out = alpha1_threshold(eps, 2.0, 1.0, 1.0).unwrap();
        assert!((out.eps_star - eps).abs() < 1e-18);
        assert!((out.s_star / ((10.0f64).exp() / 10.0) - 1.0).abs() < 1e-12);
        assert!(out.chain_holds);
        for k in 0..20 {
            let e = 0.1 * 0.5f64.powi(k);
            let a = alpha1_threshold(e, 2.0, 1.0, 1.0).unwrap().s_star;
            let b = alpha1_threshold(e / 2.0, 2.0, 1.0, 1.0).unwrap().s_star;
            assert!(b > a);
        }
        assert!(alpha1_threshold(1.0, 2.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn alpha1_inversion_bounds_s() {
        let (p0, c) = (2.0, 0.5);
        let eps = 1e-3;
        let probe = alpha1_threshold(eps, p0, c, 1.0).unwrap();
        let c_star = closing_c_star(probe.delta_star, c);
        let out = alpha1_threshold(eps, p0, c, c_star).unwrap();
        assert!(out.chain_holds);
        let phi = |s: f64| eps.powf(p0 - 1.0) * s * s.ln().powf(p0 - 1.0);
        for k in 1..400 {
            let s = std::f64::consts::E * 1.05f64.powi(k);
            if phi(s) <= 1.0 / c {
                assert!(s <= out.s_star);
            }
        }
    }
}
