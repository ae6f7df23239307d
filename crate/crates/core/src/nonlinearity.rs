//! Homogeneous nonlinearities of critical order and their circle symbols.
//!
//! A nonlinearity `F` with `F(λz) = λ^{1+2/d} F(z)` is fixed by its values on the
//! unit circle, `g(θ) = F(e^{iθ})`. Expanding `g` in a Fourier series splits `F`
//! into the terms `gₙ |u|^{p₀-n} uⁿ`; `g₀` weights the non-oscillating part.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default truncation order for coefficient tables.
pub const DEFAULT_ORDER: usize = 64;

/// Critical exponent `p₀ = 1 + 2/d`.
pub fn critical_exponent(dim: usize) -> f64 {
    1.0 + 2.0 / dim as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothness {
    Analytic,
    Lipschitz,
    Bounded,
}

type Evaluator = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// A 2π-periodic complex function on the circle.
#[derive(Clone)]
pub struct PeriodicSymbol {
    evaluator: Evaluator,
    smoothness: Smoothness,
}

impl fmt::Debug for PeriodicSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicSymbol")
            .field("smoothness", &self.smoothness)
            .finish_non_exhaustive()
    }
}

impl PeriodicSymbol {
    /// Wraps a function defined on `[0, 2π)`; arguments are reduced mod 2π before the call.
    pub fn new<F>(f: F, smoothness: Smoothness) -> Self
    where
        F: Fn(f64) -> Complex64 + Send + Sync + 'static,
    {
        Self {
            evaluator: Arc::new(f),
            smoothness,
        }
    }

    pub fn constant(value: Complex64) -> Self {
        Self::new(move |_| value, Smoothness::Analytic)
    }

    /// The single harmonic `e^{inθ}`.
    pub fn harmonic(n: i32) -> Self {
        Self::new(
            move |theta| Complex64::from_polar(1.0, n as f64 * theta),
            Smoothness::Analytic,
        )
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn eval(&self, theta: f64) -> Complex64 {
        (self.evaluator)(theta.rem_euclid(TAU))
    }

    /// Largest modulus over a uniform grid of `points` angles.
    pub fn sup_norm(&self, points: usize) -> f64 {
        (0..points)
            .map(|j| self.eval(TAU * j as f64 / points as f64).norm())
            .fold(0.0, f64::max)
    }
}

/// Fourier coefficients `gₙ`, `|n| ≤ N`, of a symbol in dimension `d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTable {
    dim: usize,
    order: usize,
    /// Index `n + order` holds `gₙ`.
    coefficients: Vec<Complex64>,
}

impl CoefficientTable {
    pub fn zeros(dim: usize, order: usize) -> Self {
        Self {
            dim,
            order,
            coefficients: vec![Complex64::new(0.0, 0.0); 2 * order + 1],
        }
    }

    /// Builds a table from `(n, gₙ)` pairs; the order is the largest `|n|` given.
    pub fn from_terms(dim: usize, terms: &[(i32, Complex64)]) -> Self {
        let order = terms
            .iter()
            .map(|(n, _)| n.unsigned_abs() as usize)
            .max()
            .unwrap_or(0);
        let mut table = Self::zeros(dim, order);
        for &(n, g) in terms {
            table.coefficients[(n + order as i32) as usize] += g;
        }
        table
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn p0(&self) -> f64 {
        critical_exponent(self.dim)
    }

    pub fn get(&self, n: i32) -> Complex64 {
        if n.unsigned_abs() as usize > self.order {
            return Complex64::new(0.0, 0.0);
        }
        self.coefficients[(n + self.order as i32) as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, Complex64)> + '_ {
        let order = self.order as i32;
        self.coefficients
            .iter()
            .enumerate()
            .map(move |(k, &g)| (k as i32 - order, g))
    }

    /// Terms with `|gₙ| > tol`.
    pub fn nonzero_terms(&self, tol: f64) -> Vec<(i32, Complex64)> {
        self.iter().filter(|(_, g)| g.norm() > tol).collect()
    }

    pub fn l1_norm(&self) -> f64 {
        self.coefficients.iter().map(|g| g.norm()).sum()
    }

    /// `Σ_{|n|>k} |gₙ|`, the part of the ℓ¹ mass beyond order `k`.
    pub fn tail_l1(&self, k: usize) -> f64 {
        self.iter()
            .filter(|(n, _)| n.unsigned_abs() as usize > k)
            .map(|(_, g)| g.norm())
            .sum()
    }

    /// `Σ |gₙ|²`.
    pub fn l2_norm_sq(&self) -> f64 {
        self.coefficients.iter().map(|g| g.norm_sqr()).sum()
    }

    pub fn margin_mu(&self) -> f64 {
        margin_mu(self)
    }

    /// `g₀ = 1` (to `tol`) and `μ > 0`.
    pub fn satisfies_blowup_hypothesis(&self, tol: f64) -> bool {
        (self.get(0) - Complex64::new(1.0, 0.0)).norm() <= tol && self.margin_mu() > 0.0
    }

    /// Largest elementwise difference, treating missing entries as zero.
    pub fn max_abs_diff(&self, other: &CoefficientTable) -> f64 {
        let order = self.order.max(other.order) as i32;
        (-order..=order)
            .map(|n| (self.get(n) - other.get(n)).norm())
            .fold(0.0, f64::max)
    }
}

/// M-point trapezoidal rule for `gₙ = (1/2π)∫ g(θ) e^{-inθ} dθ`, computed with one FFT.
pub fn fourier_coefficients(
    symbol: &PeriodicSymbol,
    dim: usize,
    order: usize,
    points: usize,
) -> Result<CoefficientTable> {
    if !points.is_power_of_two() {
        return Err(Error::Domain(format!(
            "quadrature size {points} must be a power of two"
        )));
    }
    if points < 4 * order + 4 {
        return Err(Error::Domain(format!(
            "quadrature size {points} must be at least 4N + 4 = {}",
            4 * order + 4
        )));
    }
    let mut samples = Vec::with_capacity(points);
    for j in 0..points {
        let theta = TAU * j as f64 / points as f64;
        let value = symbol.eval(theta);
        if !(value.re.is_finite() && value.im.is_finite()) {
            return Err(Error::Evaluation { theta });
        }
        samples.push(value);
    }
    FftPlanner::new().plan_fft_forward(points).process(&mut samples);

    let scale = 1.0 / points as f64;
    let mut table = CoefficientTable::zeros(dim, order);
    for n in -(order as i64)..=order as i64 {
        let k = n.rem_euclid(points as i64) as usize;
        table.coefficients[(n + order as i64) as usize] = samples[k] * scale;
    }
    Ok(table)
}

/// The truncated series `Σ gₙ e^{inθ}`.
pub fn synthesize_symbol(table: &CoefficientTable) -> PeriodicSymbol {
    let terms = table.nonzero_terms(0.0);
    PeriodicSymbol::new(
        move |theta| {
            terms
                .iter()
                .map(|&(n, g)| g * Complex64::from_polar(1.0, n as f64 * theta))
                .sum()
        },
        Smoothness::Analytic,
    )
}

/// `Fₙ(u) = |u|^{p₀-n} uⁿ`, evaluated as `|u|^{p₀} e^{in arg u}`; zero at the origin for every `n`.
pub fn evaluate_term(n: i32, u: Complex64, dim: usize) -> Complex64 {
    let r = u.norm();
    if r == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    Complex64::from_polar(r.powf(critical_exponent(dim)), n as f64 * u.arg())
}

/// `μ = Re g₀ − Σ_{n≠0} |gₙ|`.
pub fn margin_mu(table: &CoefficientTable) -> f64 {
    table.get(0).re
        - table
            .iter()
            .filter(|&(n, _)| n != 0)
            .map(|(_, g)| g.norm())
            .sum::<f64>()
}

/// Discrete Parseval defect `|Σ|gₙ|² − (1/M)Σ_j |g(θ_j)|²|`.
pub fn parseval_defect(symbol: &PeriodicSymbol, table: &CoefficientTable, points: usize) -> f64 {
    let mean_sq = (0..points)
        .map(|j| symbol.eval(TAU * j as f64 / points as f64).norm_sqr())
        .sum::<f64>()
        / points as f64;
    (table.l2_norm_sq() - mean_sq).abs()
}

#[derive(Clone, Debug)]
pub enum NonlinearitySource {
    Symbol(PeriodicSymbol),
    Table(CoefficientTable),
}

/// `F(u) = |u|^{1+2/d} g(arg u)`, with `F(0) = 0`.
#[derive(Clone, Debug)]
pub struct HomogeneousNonlinearity {
    source: NonlinearitySource,
    dim: usize,
    p0: f64,
    terms: Vec<(i32, Complex64)>,
}

impl HomogeneousNonlinearity {
    pub fn from_symbol(symbol: PeriodicSymbol, dim: usize) -> Self {
        Self {
            source: NonlinearitySource::Symbol(symbol),
            dim,
            p0: critical_exponent(dim),
            terms: Vec::new(),
        }
    }

    pub fn from_table(table: CoefficientTable) -> Self {
        let dim = table.dim();
        let terms = table.nonzero_terms(0.0);
        Self {
            source: NonlinearitySource::Table(table),
            dim,
            p0: critical_exponent(dim),
            terms,
        }
    }

    /// `F ≡ 0`.
    pub fn zero(dim: usize) -> Self {
        Self::from_table(CoefficientTable::zeros(dim, 0))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn source(&self) -> &NonlinearitySource {
        &self.source
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.source, NonlinearitySource::Table(_)) && self.terms.is_empty()
    }

    /// The symbol value `g(θ)`.
    pub fn symbol_at(&self, theta: f64) -> Complex64 {
        match &self.source {
            NonlinearitySource::Symbol(s) => s.eval(theta),
            NonlinearitySource::Table(_) => self
                .terms
                .iter()
                .map(|&(n, g)| g * Complex64::from_polar(1.0, n as f64 * theta))
                .sum(),
        }
    }

    pub fn evaluate(&self, z: Complex64) -> Complex64 {
        let r = z.norm();
        if r == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let modulus = match self.dim {
            1 => r * r * r,
            2 => r * r,
            _ => r.powf(self.p0),
        };
        match &self.source {
            NonlinearitySource::Symbol(s) => s.eval(z.arg()) * modulus,
            NonlinearitySource::Table(_) => {
                let phase = z / r;
                self.terms
                    .iter()
                    .map(|&(n, g)| g * phase.powi(n))
                    .sum::<Complex64>()
                    * modulus
            }
        }
    }

    /// `Some(g₁)` when the table holds only a real `g₁`, i.e. `F(u) = g₁|u|^{2/d}u`.
    pub fn gauge_coefficient(&self) -> Option<f64> {
        match (&self.source, self.terms.as_slice()) {
            (NonlinearitySource::Table(_), [(1, g)]) if g.im == 0.0 => Some(g.re),
            _ => None,
        }
    }

    /// Coefficient table of this nonlinearity; symbols are transformed with `points` nodes.
    pub fn coefficient_table(&self, order: usize, points: usize) -> Result<CoefficientTable> {
        match &self.source {
            NonlinearitySource::Table(t) => Ok(t.clone()),
            NonlinearitySource::Symbol(s) => fourier_coefficients(s, self.dim, order, points),
        }
    }
}

/// Largest `|F(λz) − λ^{p₀}F(z)|` over the samples.
pub fn check_homogeneity(f: &HomogeneousNonlinearity, samples: &[(f64, Complex64)]) -> f64 {
    samples
        .iter()
        .map(|&(lambda, z)| (f.evaluate(z * lambda) - f.evaluate(z) * lambda.powf(f.p0())).norm())
        .fold(0.0, f64::max)
}

/// Named presets: `constant` (g ≡ 1), `gauge` (g = e^{iθ}), `zero`, and `mixed:g0,g1`.
pub fn preset_table(name: &str, dim: usize) -> Result<CoefficientTable> {
    let one = Complex64::new(1.0, 0.0);
    match name.trim() {
        "constant" => Ok(CoefficientTable::from_terms(dim, &[(0, one)])),
        "gauge" => Ok(CoefficientTable::from_terms(dim, &[(1, one)])),
        "zero" => Ok(CoefficientTable::zeros(dim, 0)),
        other => {
            let args = other
                .strip_prefix("mixed:")
                .ok_or_else(|| Error::Config(format!("unknown nonlinearity preset '{other}'")))?;
            let values = args
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Config(format!("bad mixed preset '{other}': {e}")))?;
            match values.as_slice() {
                [g0, g1] => Ok(CoefficientTable::from_terms(
                    dim,
                    &[(0, Complex64::new(*g0, 0.0)), (1, Complex64::new(*g1, 0.0))],
                )),
                _ => Err(Error::Config(format!(
                    "mixed preset needs two values, got '{args}'"
                ))),
            }
        }
    }
}

/// Named symbols beyond trigonometric polynomials: `exp_cos` (analytic), `abs_cos` (Lipschitz),
/// `square` (bounded, jump at 0 and π). Preset table names are accepted too.
pub fn named_symbol(name: &str, dim: usize) -> Result<PeriodicSymbol> {
    match name.trim() {
        "exp_cos" => Ok(PeriodicSymbol::new(
            |t| Complex64::new(t.cos().exp(), 0.0),
            Smoothness::Analytic,
        )),
        "abs_cos" => Ok(PeriodicSymbol::new(
            |t| Complex64::new(1.0 + 0.25 * t.cos().abs(), 0.0),
            Smoothness::Lipschitz,
        )),
        "square" => Ok(PeriodicSymbol::new(
            |t| Complex64::new(if t < std::f64::consts::PI { 1.2 } else { 0.8 }, 0.0),
            Smoothness::Bounded,
        )),
        other => preset_table(other, dim).map(|t| synthesize_symbol(&t)),
    }
}

/// Table from an explicit `[[n, re, im], ...]` list.
pub fn table_from_list(dim: usize, list: &[[f64; 3]]) -> Result<CoefficientTable> {
    let mut terms = Vec::with_capacity(list.len());
    for &[n, re, im] in list {
        if n.fract() != 0.0 || n.abs() > i32::MAX as f64 {
            return Err(Error::Config(format!("coefficient index {n} is not an integer")));
        }
        terms.push((n as i32, Complex64::new(re, im)));
    }
    Ok(CoefficientTable::from_terms(dim, &terms))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn mixed_table() -> CoefficientTable {
        CoefficientTable::from_terms(1, &[(0, c(1.0, 0.0)), (1, c(0.3, 0.0)), (-2, c(0.2, 0.0))])
    }

    #[test]
    fn constant_symbol_has_single_coefficient() {
        let t = fourier_coefficients(&PeriodicSymbol::constant(c(1.0, 0.0)), 1, 8, 64).unwrap();
        assert!((t.get(0) - c(1.0, 0.0)).norm() < 1e-15);
        for n in (-8..=8).filter(|&n| n != 0) {
            assert!(t.get(n).norm() < 1e-15);
        }
    }

    #[test]
    fn harmonic_symbol() {
        let t = fourier_coefficients(&PeriodicSymbol::harmonic(1), 2, 8, 64).unwrap();
        assert!((t.get(1) - c(1.0, 0.0)).norm() < 1e-14);
        assert!(t.get(0).norm() < 1e-14 && t.get(-1).norm() < 1e-14);
    }

    #[test]
    fn trig_polynomial_round_trip() {
        let sym = PeriodicSymbol::new(
            |th| c(1.0, 0.0) + Complex64::from_polar(0.3, th) + Complex64::from_polar(0.2, -2.0 * th),
            Smoothness::Analytic,
        );
        let t = fourier_coefficients(&sym, 1, 64, 512).unwrap();
        assert!(t.max_abs_diff(&mixed_table()) < 1e-12);
    }

    #[test]
    fn quadrature_size_preconditions() {
        let s = PeriodicSymbol::constant(c(1.0, 0.0));
        assert!(matches!(fourier_coefficients(&s, 1, 8, 48), Err(Error::Domain(_))));
        assert!(matches!(fourier_coefficients(&s, 1, 8, 32), Err(Error::Domain(_))));
        assert!(fourier_coefficients(&s, 1, 7, 32).is_ok());
    }

    #[test]
    fn non_finite_symbol_reports_theta() {
        let s = PeriodicSymbol::new(
            |th| if th > 3.0 { c(f64::NAN, 0.0) } else { c(1.0, 0.0) },
            Smoothness::Bounded,
        );
        match fourier_coefficients(&s, 1, 4, 32) {
            Err(Error::Evaluation { theta }) => assert!(theta > 3.0 && theta < 3.3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn symbol_is_periodic() {
        let s = PeriodicSymbol::new(|th| c(th, 0.0), Smoothness::Bounded);
        assert!((s.eval(1.0 + TAU) - s.eval(1.0)).norm() < 1e-12);
        assert!((s.eval(-1.0) - c(TAU - 1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn synthesized_tables() {
        let one = synthesize_symbol(&CoefficientTable::from_terms(1, &[(0, c(1.0, 0.0))]));
        let gauge = synthesize_symbol(&CoefficientTable::from_terms(1, &[(1, c(1.0, 0.0))]));
        for th in [0.0, 0.7, 2.5, 5.9] {
            assert!((one.eval(th) - c(1.0, 0.0)).norm() < 1e-15);
            assert!((gauge.eval(th) - Complex64::from_polar(1.0, th)).norm() < 1e-15);
        }
        let back = fourier_coefficients(&synthesize_symbol(&mixed_table()), 1, 16, 128).unwrap();
        assert!(back.max_abs_diff(&mixed_table()) < 1e-12);
    }

    #[test]
    fn evaluate_examples() {
        let f = HomogeneousNonlinearity::from_symbol(PeriodicSymbol::constant(c(1.0, 0.0)), 2);
        assert!((f.evaluate(c(3.0, 4.0)) - c(25.0, 0.0)).norm() < 1e-12);
        assert_eq!(f.evaluate(c(0.0, 0.0)), c(0.0, 0.0));

        // d = 1, g = e^{iθ}: F(2i) = |2i|^{2} · 2i = 8i.
        let g = HomogeneousNonlinearity::from_symbol(PeriodicSymbol::harmonic(1), 1);
        let direct = c(0.0, 2.0) * c(0.0, 2.0).norm().powi(2);
        assert!((g.evaluate(c(0.0, 2.0)) - direct).norm() < 1e-12);
        assert!((g.evaluate(c(0.0, 2.0)) - c(0.0, 8.0)).norm() < 1e-12);
    }

    #[test]
    fn term_examples() {
        assert!((evaluate_term(0, c(-2.0, 0.0), 1) - c(8.0, 0.0)).norm() < 1e-12);
        assert!((evaluate_term(1, c(0.0, 1.0), 2) - c(0.0, 1.0)).norm() < 1e-15);
        let u = c(1.0, 1.0);
        let expected = 2f64.powf(1.5);
        assert!((evaluate_term(-3, u, 1).norm() - expected).abs() < 1e-12);
        assert!((evaluate_term(0, u, 1).norm() - expected).abs() < 1e-12);
        for n in [-5, 0, 1, 7] {
            assert_eq!(evaluate_term(n, c(0.0, 0.0), 1), c(0.0, 0.0));
        }
    }

    #[test]
    fn term_matches_direct_power_formula() {
        // |u|^{p0-n} u^n with integer n, compared to the polar form.
        let u = c(0.7, -1.3);
        for d in 1..=3 {
            let p0 = critical_exponent(d);
            for n in -4..=4 {
                let direct = u.powi(n) * u.norm().powf(p0 - n as f64);
                assert!((evaluate_term(n, u, d) - direct).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn partial_sums_converge_to_f() {
        // g(θ) = 1/(1 - 0.5 e^{iθ}) has gₙ = 0.5ⁿ for n ≥ 0.
        let sym = PeriodicSymbol::new(
            |th| c(1.0, 0.0) / (c(1.0, 0.0) - Complex64::from_polar(0.5, th)),
            Smoothness::Analytic,
        );
        let f = HomogeneousNonlinearity::from_symbol(sym.clone(), 2);
        let u = c(-0.4, 1.1);
        let mut last = f64::INFINITY;
        for order in [2usize, 4, 8, 16, 32] {
            let t = fourier_coefficients(&sym, 2, order, 256).unwrap();
            let partial: Complex64 = t.iter().map(|(n, g)| g * evaluate_term(n, u, 2)).sum();
            let err = (partial - f.evaluate(u)).norm();
            assert!(err < last);
            last = err;
        }
        assert!(last < 1e-9);
    }

    #[test]
    fn mu_examples() {
        assert_eq!(margin_mu(&CoefficientTable::from_terms(1, &[(0, c(1.0, 0.0))])), 1.0);
        assert!((margin_mu(&mixed_table()) - 0.5).abs() < 1e-15);
        let edge = CoefficientTable::from_terms(1, &[(0, c(1.0, 0.0)), (1, c(1.0, 0.0))]);
        assert_eq!(margin_mu(&edge), 0.0);
        assert!(!edge.satisfies_blowup_hypothesis(1e-12));
        assert!(mixed_table().satisfies_blowup_hypothesis(1e-12));
    }

    #[test]
    fn homogeneity_examples() {
        let f = HomogeneousNonlinearity::from_symbol(PeriodicSymbol::constant(c(1.0, 0.0)), 2);
        assert!(check_homogeneity(&f, &[(2.0, c(1.0, 1.0))]) < 1e-12);
        let g = HomogeneousNonlinearity::from_symbol(PeriodicSymbol::harmonic(1), 1);
        assert!(check_homogeneity(&g, &[(3.0, c(0.0, 1.0))]) < 1e-12);
    }

    #[test]
    fn gauge_detection() {
        let gauge = HomogeneousNonlinearity::from_table(preset_table("gauge", 2).unwrap());
        assert_eq!(gauge.gauge_coefficient(), Some(1.0));
        let constant = HomogeneousNonlinearity::from_table(preset_table("constant", 2).unwrap());
        assert_eq!(constant.gauge_coefficient(), None);
        assert!(HomogeneousNonlinearity::zero(1).is_zero());
    }

    #[test]
    fn presets_and_lists() {
        let t = preset_table("mixed:1,0.25", 1).unwrap();
        assert_eq!(t.get(0), c(1.0, 0.0));
        assert_eq!(t.get(1), c(0.25, 0.0));
        assert!(preset_table("nope", 1).is_err());
        assert!(preset_table("mixed:1", 1).is_err());
        let l = table_from_list(2, &[[0.0, 1.0, 0.0], [-2.0, 0.2, 0.1]]).unwrap();
        assert_eq!(l.order(), 2);
        assert_eq!(l.get(-2), c(0.2, 0.1));
        assert!(table_from_list(2, &[[0.5, 1.0, 0.0]]).is_err());
    }

    #[test]
    fn tail_and_norms() {
        let t = mixed_table();
        assert!((t.l1_norm() - 1.5).abs() < 1e-15);
        assert!((t.tail_l1(1) - 0.2).abs() < 1e-15);
        assert_eq!(t.tail_l1(2), 0.0);
    }
}
