//! Parabolic cutoffs `ψ_R(t,x) = η((|x|²+t)/R)^{2p₀'}` and the estimates built on them.
//!
//! `η` is a C^∞ smooth step: 1 on `[0, 1/2]`, 0 on `[1, ∞)`, strictly decreasing in
//! between. `η*` is its restriction to `[1/2, ∞)`, so `ψ*_R` lives on the annulus
//! `R/2 ≤ |x|²+t < R` where all derivatives of `ψ_R` are supported.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::initial_data::DatumSpec;
use crate::nonlinearity::critical_exponent;
use crate::quadrature::{adaptive_simpson, adaptive_simpson_split, sphere_measure};

/// Safety factor applied to sampled derivative constants.
const BUDGET_MARGIN: f64 = 1.1;

/// Smooth-step parameters. `steepness = k` gives `φ(r) = e^{-k/r}` in the transition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mollifier {
    pub steepness: f64,
}

impl Default for Mollifier {
    fn default() -> Self {
        Self { steepness: 1.0 }
    }
}

/// `(η, η', η'')` at `s`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EtaJet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Mollifier {
    pub fn eta(&self, s: f64) -> f64 {
        self.jet(s).value
    }

    pub fn jet(&self, s: f64) -> EtaJet {
        if s <= 0.5 {
            return EtaJet { value: 1.0, d1: 0.0, d2: 0.0 };
        }
        if s >= 1.0 {
            return EtaJet { value: 0.0, d1: 0.0, d2: 0.0 };
        }
        let k = self.steepness;
        let u = 2.0 * s - 1.0;
        let v = 1.0 - u;
        // η = 1 / (1 + e^q), q = k(1/(1-u) - 1/u).
        let q = k * (1.0 / v - 1.0 / u);
        let e = (-q.abs()).exp();
        let value = if q > 0.0 { e / (1.0 + e) } else { 1.0 / (1.0 + e) };
        let w = e / ((1.0 + e) * (1.0 + e));
        if w == 0.0 {
            return EtaJet { value, d1: 0.0, d2: 0.0 };
        }
        let dq = k * (1.0 / (v * v) + 1.0 / (u * u));
        let ddq = 2.0 * k * (1.0 / (v * v * v) - 1.0 / (u * u * u));
        let d1 = -w * dq;
        let d2 = w * (1.0 - 2.0 * value) * dq * dq - w * ddq;
        EtaJet {
            value,
            d1: 2.0 * d1,
            d2: 4.0 * d2,
        }
    }

    /// `η*(s)`: zero below 1/2, `η` from 1/2 on.
    pub fn eta_star(&self, s: f64) -> f64 {
        if s < 0.5 {
            0.0
        } else {
            self.eta(s)
        }
    }
}

/// The cutoff family for dimension `d`, with `p₀ = 1 + 2/d` and `p₀' = (d+2)/2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffFamily {
    pub dim: usize,
    pub p0: f64,
    pub p0_prime: f64,
    pub mollifier: Mollifier,
}

/// `∂_t ψ_R` and `Δψ_R` at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsiDerivatives {
    pub dt: f64,
    pub laplacian: f64,
}

impl CutoffFamily {
    pub fn new(dim: usize) -> Self {
        Self::with_mollifier(dim, Mollifier::default())
    }

    pub fn with_mollifier(dim: usize, mollifier: Mollifier) -> Self {
        Self {
            dim,
            p0: critical_exponent(dim),
            p0_prime: (dim as f64 + 2.0) / 2.0,
            mollifier,
        }
    }

    /// The power `2p₀' = d + 2`.
    pub fn exponent(&self) -> i32 {
        self.dim as i32 + 2
    }

    /// `ψ_R` as a function of `|x|²`.
    pub fn psi(&self, r: f64, t: f64, x_sq: f64) -> f64 {
        self.mollifier.eta((x_sq + t) / r).powi(self.exponent())
    }

    pub fn psi_star(&self, r: f64, t: f64, x_sq: f64) -> f64 {
        self.mollifier.eta_star((x_sq + t) / r).powi(self.exponent())
    }

    /// `ψ_R(t, x)` for an explicit point.
    pub fn eval_psi(&self, r: f64, t: f64, x: &[f64]) -> f64 {
        self.psi(r, t, x.iter().map(|v| v * v).sum())
    }

    /// Chain-rule derivatives of `ψ_R = Φ(σ)`, `σ = (|x|²+t)/R`, `Φ = η^m`.
    pub fn psi_derivatives(&self, r: f64, t: f64, x_sq: f64) -> PsiDerivatives {
        let (phi1, phi2) = self.phi_derivs((x_sq + t) / r);
        PsiDerivatives {
            dt: phi1 / r,
            laplacian: phi2 * 4.0 * x_sq / (r * r) + phi1 * 2.0 * self.dim as f64 / r,
        }
    }

    /// `(Φ'(σ), Φ''(σ))` for `Φ = η^m`.
    fn phi_derivs(&self, sigma: f64) -> (f64, f64) {
        let jet = self.mollifier.jet(sigma);
        let m = self.exponent();
        let mf = m as f64;
        let phi1 = mf * jet.value.powi(m - 1) * jet.d1;
        let phi2 = mf * (mf - 1.0) * jet.value.powi(m - 2) * jet.d1 * jet.d1
            + mf * jet.value.powi(m - 1) * jet.d2;
        (phi1, phi2)
    }

    /// `(ψ*_R)^{1/p₀} = η*(σ)^{m/p₀} = η*(σ)^d`.
    pub fn holder_weight(&self, r: f64, t: f64, x_sq: f64) -> f64 {
        self.mollifier
            .eta_star((x_sq + t) / r)
            .powi(self.dim as i32)
    }

    /// Certifies `|∂_tψ_R| + |Δψ_R| ≤ (C₁/R + C₂|x|²/R²)(ψ*_R)^{1/p₀}` on the given samples.
    ///
    /// Samples are `(R, t, |x|²)`. The constants come from the split
    /// `|Φ'|(1+2d)/R + 4|Φ''| |x|²/R²`, maximised over the samples and padded by 10%.
    pub fn derivative_budget_on(&self, samples: &[(f64, f64, f64)], r0: f64) -> Result<DerivativeBudget> {
        let d = self.dim as f64;
        let mut c1: f64 = 0.0;
        let mut c2: f64 = 0.0;
        for &(r, t, x_sq) in samples {
            let weight = self.holder_weight(r, t, x_sq);
            let (phi1, phi2) = self.phi_derivs((x_sq + t) / r);
            if weight == 0.0 {
                let lhs = phi1.abs() + phi2.abs();
                if lhs > 1e-12 {
                    return Err(Error::InvalidMollifier(format!(
                        "nonzero derivative {lhs:e} where the annular cutoff vanishes (R={r}, t={t}, |x|²={x_sq})"
                    )));
                }
                continue;
            }
            c1 = c1.max(phi1.abs() * (1.0 + 2.0 * d) / weight);
            c2 = c2.max(4.0 * phi2.abs() / weight);
        }
        c1 = (c1 * BUDGET_MARGIN).max(f64::MIN_POSITIVE);
        c2 = (c2 * BUDGET_MARGIN).max(f64::MIN_POSITIVE);

        for &(r, t, x_sq) in samples {
            let der = self.psi_derivatives(r, t, x_sq);
            let lhs = der.dt.abs() + der.laplacian.abs();
            let rhs = (c1 / r + c2 * x_sq / (r * r)) * self.holder_weight(r, t, x_sq);
            if lhs > rhs * (1.0 + 1e-12) + 1e-300 {
                return Err(Error::InvalidMollifier(format!(
                    "derivative bound fails at R={r}, t={t}, |x|²={x_sq}: {lhs:e} > {rhs:e}"
                )));
            }
        }
        Ok(DerivativeBudget {
            c1,
            c2,
            a: c1 + c2 / r0,
            r0,
        })
    }

    /// Certification on `per_radius` deterministic samples of `[0,R] × {|x| ≤ √R}` for each `R`.
    pub fn derivative_budget(&self, r_grid: &[f64], per_radius: usize, r0: f64) -> Result<DerivativeBudget> {
        let samples = support_samples(self.dim, r_grid, per_radius);
        self.derivative_budget_on(&samples, r0)
    }

    /// `∫_σ^∞ η*(s)^m ds/s`.
    pub fn log_integral(&self, sigma: f64) -> f64 {
        let lo = sigma.max(0.5);
        if lo >= 1.0 {
            return 0.0;
        }
        let m = self.exponent();
        let scale = self.mollifier.eta(lo).powi(m).max(1e-300);
        adaptive_simpson(
            &|s: f64| self.mollifier.eta(s).powi(m) / s,
            lo,
            1.0,
            1e-12 * scale,
        )
    }

    /// Largest ratio `∫_σ^∞ η*^m ds/s / (η(σ)^m log 2)` over the grid.
    pub fn log_integral_bound(&self, sigma_grid: &[f64]) -> Result<LogIntegralReport> {
        let mut report = LogIntegralReport { max_ratio: 0.0, argmax: f64::NAN };
        for &sigma in sigma_grid {
            if sigma < 0.0 {
                return Err(Error::Domain(format!("sigma = {sigma} must be nonnegative")));
            }
            let lhs = self.log_integral(sigma);
            let rhs = self.mollifier.eta(sigma).powi(self.exponent()) * LN_2;
            let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs };
            if ratio > report.max_ratio || report.argmax.is_nan() {
                report = LogIntegralReport { max_ratio: ratio, argmax: sigma };
            }
        }
        if report.max_ratio > 1.0 + 1e-8 {
            return Err(Error::InvalidMollifier(format!(
                "log-integral ratio {} exceeds 1 at sigma = {}",
                report.max_ratio, report.argmax
            )));
        }
        Ok(report)
    }
}

/// Deterministic quasi-random `(R, t, |x|²)` samples covering the support `|x|² + t ≤ R`.
pub fn support_samples(dim: usize, r_grid: &[f64], per_radius: usize) -> Vec<(f64, f64, f64)> {
    // Additive recurrence with golden-ratio style increments.
    const A1: f64 = 0.754_877_666_246_692_8;
    const A2: f64 = 0.569_840_290_998_053_2;
    let mut out = Vec::with_capacity(r_grid.len() * per_radius);
    for &r in r_grid {
        for k in 0..per_radius {
            let a = (0.5 + A1 * k as f64).fract();
            let b = (0.5 + A2 * k as f64).fract();
            let t = r * a;
            // |x| spread over [0, √R]; in d = 2 use an area-uniform radius.
            let rad = if dim == 1 { b } else { b.sqrt() };
            out.push((r, t, r * rad * rad));
        }
    }
    out
}

/// Constants of the Hölder step, with `A = C₁ + C₂/R₀`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeBudget {
    pub c1: f64,
    pub c2: f64,
    pub a: f64,
    pub r0: f64,
}

impl DerivativeBudget {
    /// Bound for `C₁/R + C₂|x|²/R²` on the support `|x|² ≤ R`, times `R`.
    pub fn support_constant(&self) -> f64 {
        self.c1 + self.c2
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogIntegralReport {
    pub max_ratio: f64,
    pub argmax: f64,
}

/// Growth regime of the lower bound in the log-weight exponent `α`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `α > 1`: bounded.
    Bounded,
    /// `α = 1`: `log log R`.
    LogLog,
    /// `α < 1`: `(log R)^{1-α}`.
    Power,
}

impl Regime {
    pub fn of(alpha: f64) -> Self {
        if alpha > 1.0 {
            Regime::Bounded
        } else if alpha == 1.0 {
            Regime::LogLog
        } else {
            Regime::Power
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Regime::Bounded => "alpha>1",
            Regime::LogLog => "alpha=1",
            Regime::Power => "alpha<1",
        }
    }

    /// The growth function of the regime: 1, `log log R`, `(log R)^{1-α}`.
    pub fn growth(&self, alpha: f64, r: f64) -> f64 {
        match self {
            Regime::Bounded => 1.0,
            Regime::LogLog => r.ln().ln(),
            Regime::Power => r.ln().powf(1.0 - alpha),
        }
    }
}

/// `−∫ Im f(x) ψ_R(0,x) dx` for a radial datum, as a 1-D radial integral times `|S^{d-1}|`.
///
/// The amplitude `ε` is not included.
pub fn pairing_integral(datum: &DatumSpec, family: &CutoffFamily, r: f64) -> Result<f64> {
    let r0 = datum.r0();
    if r <= 2.0 * r0 * r0 {
        return Err(Error::Domain(format!(
            "pairing needs R > 2R0² = {}, got R = {r}",
            2.0 * r0 * r0
        )));
    }
    let d = family.dim as i32;
    let m = family.exponent();
    let integrand = |rad: f64| {
        datum.profile(rad) * family.mollifier.eta(rad * rad / r).powi(m) * rad.powi(d - 1)
    };
    let plateau = (r / 2.0).sqrt();
    let mut breaks = vec![0.0];
    let inner = r0 - datum.smoothing_width();
    if inner > 0.0 {
        breaks.push(inner);
    }
    breaks.push(r0);
    let mut b = 2.0 * r0;
    while b < plateau {
        breaks.push(b);
        b *= 2.0;
    }
    breaks.push(plateau);
    breaks.push(r.sqrt());
    Ok(sphere_measure(family.dim) * adaptive_simpson_split(&integrand, &breaks, 1e-10))
}

/// `∫_{R₀}^{√(R/2)} r^{-1}(log r)^{-α} dr` in closed form.
pub fn lemma1_integral(alpha: f64, r0: f64, r: f64) -> Result<f64> {
    validate_lemma_inputs(alpha, r0, r)?;
    let upper = 0.5 * (r / 2.0).ln();
    let lower = r0.ln();
    Ok(if alpha == 1.0 {
        upper.ln() - lower.ln()
    } else {
        let beta = 1.0 - alpha;
        (upper.powf(beta) - lower.powf(beta)) / beta
    })
}

fn validate_lemma_inputs(alpha: f64, r0: f64, r: f64) -> Result<()> {
    if !(r0 >= 1.0) || (alpha >= 1.0 && r0 <= 1.0) {
        return Err(Error::Domain(format!(
            "R0 = {r0} must be at least 1 (strictly above 1 when alpha >= 1)"
        )));
    }
    if r <= 2.0 * r0 * r0 {
        return Err(Error::Domain(format!(
            "R = {r} must exceed 2R0² = {}",
            2.0 * r0 * r0
        )));
    }
    Ok(())
}

/// Whether the sufficiency inequalities of the lower-bound argument hold at `R`.
fn lemma_conditions_hold(alpha: f64, r0: f64, r: f64) -> bool {
    let log_r = r.ln();
    let ln2 = LN_2;
    let base = r > 2.0 * r0 * r0 && log_r - ln2 >= 0.5 * log_r;
    base && match Regime::of(alpha) {
        Regime::Power => 0.5 * (log_r - ln2) >= 2.0 * r0.ln(),
        Regime::LogLog => {
            log_r > 1.0 && log_r.ln() - 2.0 * ln2 - r0.ln().ln() >= 0.5 * log_r.ln()
        }
        Regime::Bounded => 0.5 * log_r - ln2 >= 2.0 * r0.ln(),
    }
}

/// Smallest `R` (to bisection precision) from which the regime bound is certified.
pub fn lemma1_threshold(alpha: f64, r0: f64) -> Result<f64> {
    validate_lemma_inputs(alpha, r0, f64::INFINITY)?;
    let mut lo = (2.0 * r0 * r0).ln();
    let mut hi = lo.max(1.0);
    while !lemma_conditions_hold(alpha, r0, hi.exp()) {
        hi *= 2.0;
        if hi > 700.0 {
            return Err(Error::Domain(format!(
                "no threshold below e^700 for alpha = {alpha}, R0 = {r0}"
            )));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if lemma_conditions_hold(alpha, r0, mid.exp()) {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-13 * hi.abs().max(1.0) {
            break;
        }
    }
    Ok(hi.exp())
}

/// Per-ray constant `c` with `∫_{R₀}^{√(R/2)} ... dr ≥ c · growth(R)` for `R > R₁`.
fn lemma_ray_constant(alpha: f64, r0: f64) -> f64 {
    match Regime::of(alpha) {
        Regime::Power => {
            let beta = 1.0 - alpha;
            (1.0 - 0.5f64.powf(beta)) / beta * 0.25f64.powf(beta)
        }
        Regime::LogLog => 0.5,
        Regime::Bounded => {
            let gamma = alpha - 1.0;
            r0.ln().powf(-gamma) * (1.0 - 0.5f64.powf(gamma)) / gamma
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Bound {
    pub regime: Regime,
    /// Closed-form radial integral (per ray).
    pub integral: f64,
    /// `|S^{d-1}|`.
    pub sphere: f64,
    /// Explicit constant `C`, sphere measure included.
    pub constant: f64,
    /// Growth function value: 1, `log log R` or `(log R)^{1-α}`.
    pub growth: f64,
    /// `C · growth`.
    pub bound: f64,
    pub r1: f64,
}

/// Three-case lower bound for the initial-data pairing, valid for `R > R₁`.
pub fn lemma1_lower_bound(alpha: f64, r0: f64, r: f64, dim: usize) -> Result<Lemma1Bound> {
    let r1 = lemma1_threshold(alpha, r0)?;
    if r <= r1 {
        return Err(Error::BelowThreshold { r, r1 });
    }
    let regime = Regime::of(alpha);
    let sphere = sphere_measure(dim);
    let constant = sphere * lemma_ray_constant(alpha, r0);
    let growth = regime.growth(alpha, r);
    Ok(Lemma1Bound {
        regime,
        integral: lemma1_integral(alpha, r0, r)?,
        sphere,
        constant,
        growth,
        bound: constant * growth,
        r1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial_data::DatumFamily;
    use std::f64::consts::E;

    #[test]
    fn eta_shape() {
        let m = Mollifier::default();
        assert_eq!(m.eta(0.0), 1.0);
        assert_eq!(m.eta(0.5), 1.0);
        assert_eq!(m.eta(1.0), 0.0);
        assert_eq!(m.eta(3.0), 0.0);
        assert!((m.eta(0.75) - 0.5).abs() < 1e-15);
        let mut prev = 1.0;
        for k in 1..1000 {
            let v = m.eta(0.5 + 0.5 * k as f64 / 1000.0);
            assert!(v <= prev);
            if (50..950).contains(&k) {
                assert!(v < prev, "eta must decrease strictly away from the flat ends");
            }
            prev = v;
        }
        assert_eq!(m.eta_star(0.49), 0.0);
        assert_eq!(m.eta_star(0.6), m.eta(0.6));
    }

    #[test]
    fn eta_derivatives_match_finite_differences() {
        let m = Mollifier::default();
        let h = 1e-5;
        for k in 1..50 {
            let s = 0.5 + 0.5 * k as f64 / 50.0;
            let jet = m.jet(s);
            let fd1 = (m.eta(s + h) - m.eta(s - h)) / (2.0 * h);
            let fd2 = (m.eta(s + h) - 2.0 * m.eta(s) + m.eta(s - h)) / (h * h);
            assert!((jet.d1 - fd1).abs() < 1e-6 * (1.0 + fd1.abs()), "s={s}");
            assert!((jet.d2 - fd2).abs() < 1e-3 * (1.0 + fd2.abs()), "s={s}");
        }
    }

    #[test]
    fn psi_examples() {
        let f = CutoffFamily::new(1);
        assert_eq!(f.eval_psi(8.0, 0.0, &[1.0]), 1.0);
        assert_eq!(f.eval_psi(1.0, 2.0, &[0.3]), 0.0);
        assert_eq!(f.eval_psi(4.0, 1.0, &[1.0]), 1.0);
        assert_eq!(f.p0_prime, 1.5);
        assert_eq!(f.exponent(), 3);
    }

    #[test]
    fn psi_derivatives_match_finite_differences() {
        let f = CutoffFamily::new(2);
        let (r, t) = (10.0, 2.0);
        let x = [1.3, 1.1];
        let h = 1e-4;
        let psi = |t: f64, x0: f64, x1: f64| f.eval_psi(r, t, &[x0, x1]);
        let der = f.psi_derivatives(r, t, x[0] * x[0] + x[1] * x[1]);
        let fd_t = (psi(t + h, x[0], x[1]) - psi(t - h, x[0], x[1])) / (2.0 * h);
        let lap = (psi(t, x[0] + h, x[1]) + psi(t, x[0] - h, x[1]) + psi(t, x[0], x[1] + h)
            + psi(t, x[0], x[1] - h)
            - 4.0 * psi(t, x[0], x[1]))
            / (h * h);
        assert!((der.dt - fd_t).abs() < 1e-6);
        assert!((der.laplacian - lap).abs() < 1e-5);
    }

    #[test]
    fn budget_is_finite_and_zero_off_annulus() {
        for d in [1, 2] {
            let f = CutoffFamily::new(d);
            let b = f.derivative_budget(&[10.0, 100.0], 5000, 2.0).unwrap();
            assert!(b.c1.is_finite() && b.c1 > 0.0);
            assert!(b.c2.is_finite() && b.c2 > 0.0);
            assert!((b.a - (b.c1 + b.c2 / 2.0)).abs() < 1e-12);
            // plateau and exterior: derivatives vanish
            let der = f.psi_derivatives(10.0, 1.0, 2.0);
            assert_eq!((der.dt, der.laplacian), (0.0, 0.0));
            let der = f.psi_derivatives(10.0, 5.0, 6.0);
            assert_eq!((der.dt, der.laplacian), (0.0, 0.0));
        }
    }

    #[test]
    fn log_integral_examples() {
        let f = CutoffFamily::new(1);
        assert_eq!(f.log_integral(1.0), 0.0);
        assert_eq!(f.log_integral(2.5), 0.0);
        // σ = 0: the integrand is at most 1/s on (1/2, 1).
        assert!(f.log_integral(0.0) < LN_2);
        // σ = 1/2 agrees with an independent composite Simpson rule.
        let n = 20_000;
        let h = 0.5 / n as f64;
        let g = |s: f64| f.mollifier.eta(s).powi(3) / s;
        let mut simpson = g(0.5) + g(1.0);
        for k in 1..n {
            let s = 0.5 + k as f64 * h;
            simpson += if k % 2 == 1 { 4.0 } else { 2.0 } * g(s);
        }
        simpson *= h / 3.0;
        assert!((f.log_integral(0.5) - simpson).abs() < 1e-9);
        let report = f.log_integral_bound(&[0.5]).unwrap();
        assert!(report.max_ratio < 1.0);
    }

    #[test]
    fn log_integral_bound_on_grid() {
        for d in [1, 2, 3] {
            let f = CutoffFamily::new(d);
            let grid: Vec<f64> = (0..100).map(|k| 1.2 * k as f64 / 99.0).collect();
            let rep = f.log_integral_bound(&grid).unwrap();
            assert!(rep.max_ratio <= 1.0 + 1e-8);
        }
    }

    #[test]
    fn lemma_closed_forms() {
        let v = lemma1_integral(0.0, 1.0, 2.0 * E.powi(4)).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        let v = lemma1_integral(1.0, E, 2.0 * E.powf(2.0 * E)).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        let v = lemma1_integral(2.0, E, 1e300).unwrap();
        assert!((v - 1.0).abs() < 0.01);
        assert!(lemma1_integral(0.0, 2.0, 7.9).is_err());
    }

    #[test]
    fn lemma_threshold_and_bound() {
        for alpha in [0.0, 0.5, 1.0, 2.0] {
            let r1 = lemma1_threshold(alpha, 2.0).unwrap();
            assert!(r1 > 8.0);
            assert!(matches!(
                lemma1_lower_bound(alpha, 2.0, r1 * 0.999, 1),
                Err(Error::BelowThreshold { .. })
            ));
            for r in [r1 * 1.001, r1 * 10.0, 1e6_f64.max(r1 * 2.0), 1e12] {
                let b = lemma1_lower_bound(alpha, 2.0, r, 1).unwrap();
                assert!(b.sphere * b.integral >= b.bound, "alpha={alpha} R={r}");
            }
        }
        // α < 1 threshold: ½(log R − log 2) = 2 log R0  ⇒  R = 2 R0⁴.
        let r1 = lemma1_threshold(0.0, 2.0).unwrap();
        assert!((r1 - 32.0).abs() < 1e-9);
    }

    #[test]
    fn pairing_examples() {
        // α = 0, d = 1, R0 = 1: the truncated piece over 1 < |x| < √(R/2) is log(R/2).
        let datum = DatumSpec::new(1, DatumFamily::LogWeighted { alpha: 0.0 }, 1.0, 1.0001).with_smoothing(0.0);
        let family = CutoffFamily::new(1);
        let r = 2.0 * E.powi(4);
        let full = pairing_integral(&datum, &family, r).unwrap();
        let truncated = 2.0 * ((r / 2.0).sqrt().ln() - 1.0001f64.ln());
        assert!(full >= truncated);
        assert!((truncated - 4.0).abs() < 1e-3);
        assert!(pairing_integral(&datum, &family, 1.0).is_err());
    }

    #[test]
    fn pairing_monotone_in_radius() {
        let datum = DatumSpec::new(2, DatumFamily::LogWeighted { alpha: 0.5 }, 1.0, 2.0).with_smoothing(0.1);
        let family = CutoffFamily::new(2);
        let mut prev = 0.0;
        for k in 0..12 {
            let r = 10.0 * 2f64.powi(k);
            let p = pairing_integral(&datum, &family, r).unwrap();
            assert!(p >= prev);
            prev = p;
        }
    }
}
