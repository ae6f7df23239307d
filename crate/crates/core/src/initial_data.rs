//! Slowly decaying radial data on a periodic box.

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::testfunc::Mollifier;

/// Tail family of `−Im f` outside `R₀`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DatumFamily {
    /// `|x|^{-d} (log|x|)^{-α}`.
    LogWeighted { alpha: f64 },
    /// `|x|^{-k}` with `0 < k ≤ d`.
    Power { k: f64 },
}

impl DatumFamily {
    pub fn describe(&self) -> String {
        match self {
            DatumFamily::LogWeighted { alpha } => format!("log_weighted(alpha={alpha})"),
            DatumFamily::Power { k } => format!("power(k={k})"),
        }
    }
}

/// `u₀ = ε f` with `f = −i h(|x|)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatumSpec {
    pub dim: usize,
    #[serde(flatten)]
    pub family: DatumFamily,
    pub epsilon: f64,
    pub r0: f64,
    /// Value of `−Im f` well inside `R₀`.
    #[serde(default)]
    pub inner_fill: f64,
    /// Width of the smooth ramp just inside `R₀`; `None` means two grid spacings when sampled.
    #[serde(default)]
    pub smoothing_width: Option<f64>,
}

impl DatumSpec {
    pub fn new(dim: usize, family: DatumFamily, epsilon: f64, r0: f64) -> Self {
        Self {
            dim,
            family,
            epsilon,
            r0,
            inner_fill: 0.0,
            smoothing_width: None,
        }
    }

    pub fn with_smoothing(mut self, width: f64) -> Self {
        self.smoothing_width = Some(width);
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    /// Ramp width used by the continuum profile (zero when unset).
    pub fn smoothing_width(&self) -> f64 {
        self.smoothing_width.unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::Domain(format!("epsilon = {} must be positive", self.epsilon)));
        }
        if self.dim == 0 {
            return Err(Error::Domain("dimension must be positive".into()));
        }
        match self.family {
            DatumFamily::LogWeighted { .. } if !(self.r0 > 1.0) => {
                return Err(Error::Domain(format!(
                    "log-weighted data need R0 > 1, got {}",
                    self.r0
                )));
            }
            DatumFamily::Power { k } if !(k > 0.0 && k <= self.dim as f64) => {
                return Err(Error::Domain(format!("power exponent k = {k} must lie in (0, d]")));
            }
            DatumFamily::Power { .. } if !(self.r0 > 0.0) => {
                return Err(Error::Domain(format!("R0 = {} must be positive", self.r0)));
            }
            _ => {}
        }
        if self.inner_fill < 0.0 {
            return Err(Error::Domain("inner fill must be nonnegative".into()));
        }
        if let Some(w) = self.smoothing_width {
            if !(w >= 0.0 && w < self.r0) {
                return Err(Error::Domain(format!("smoothing width {w} must lie in [0, R0)")));
            }
        }
        Ok(())
    }

    /// The required lower bound for `−Im f` at radius `r`.
    pub fn tail(&self, r: f64) -> f64 {
        match self.family {
            DatumFamily::LogWeighted { alpha } => r.powi(-(self.dim as i32)) * r.ln().powf(-alpha),
            DatumFamily::Power { k } => r.powf(-k),
        }
    }

    /// `h(r) = −Im f` including the inner fill and the smoothing ramp.
    pub fn profile(&self, r: f64) -> f64 {
        self.profile_with_width(r, self.smoothing_width())
    }

    fn profile_with_width(&self, r: f64, width: f64) -> f64 {
        if r > self.r0 {
            return self.tail(r);
        }
        if width > 0.0 && r > self.r0 - width {
            // Smooth step from the fill up to the tail value at R₀.
            let ramp = Mollifier::default().eta(0.5 + (self.r0 - r) / (2.0 * width));
            let edge = self.tail(self.r0);
            return self.inner_fill + (edge - self.inner_fill).max(0.0) * ramp;
        }
        self.inner_fill
    }

    /// Lower bound required at radius `r`: the tail outside `R₀`, zero inside.
    pub fn required_bound(&self, r: f64) -> f64 {
        if r > self.r0 {
            self.tail(r)
        } else {
            0.0
        }
    }
}

/// Uniform periodic grid on `[-L, L)^d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    /// Points per axis.
    pub points: usize,
    pub half_width: f64,
}

impl Grid {
    pub fn new(dim: usize, points: usize, half_width: f64) -> Result<Self> {
        let g = Self {
            dim,
            points,
            half_width,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dim == 1 || self.dim == 2) {
            return Err(Error::Config(format!("grid dimension {} unsupported", self.dim)));
        }
        if !self.points.is_power_of_two() || self.points < 4 {
            return Err(Error::Config(format!(
                "points per axis ({}) must be a power of two >= 4",
                self.points
            )));
        }
        if !(self.half_width > 0.0) {
            return Err(Error::Config("box half-width must be positive".into()));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    /// `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coordinate(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.spacing()
    }

    /// Coordinates of node `idx` (row-major, last axis fastest).
    pub fn point(&self, idx: usize) -> [f64; 2] {
        match self.dim {
            1 => [self.coordinate(idx), 0.0],
            _ => [
                self.coordinate(idx / self.points),
                self.coordinate(idx % self.points),
            ],
        }
    }

    pub fn radius_sq(&self, idx: usize) -> f64 {
        let p = self.point(idx);
        p[0] * p[0] + p[1] * p[1]
    }

    /// Same box with twice the points per axis.
    pub fn refined(&self) -> Self {
        Self {
            points: self.points * 2,
            ..*self
        }
    }
}

/// Complex values on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    pub grid: Grid,
    pub data: Vec<Complex64>,
}

impl Field {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            data: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_fn<F: Fn(&[f64]) -> Complex64>(grid: Grid, f: F) -> Self {
        let data = (0..grid.len())
            .map(|idx| f(&grid.point(idx)[..grid.dim]))
            .collect();
        Self { grid, data }
    }

    /// `‖u‖²_{L²}` by the periodic trapezoidal rule.
    pub fn mass(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn l2_norm(&self) -> f64 {
        self.mass().sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `∫ u dx`.
    pub fn integral(&self) -> Complex64 {
        self.data.iter().sum::<Complex64>() * self.grid.cell_volume()
    }

    /// `‖u − v‖_{L²}`.
    pub fn l2_distance(&self, other: &Field) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
            * self.grid.cell_volume().sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Field {
        Field {
            grid: self.grid,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }
}

/// Samples `ε f` on the grid; the ramp defaults to two grid spacings.
pub fn sample_datum(spec: &DatumSpec, grid: &Grid) -> Result<Field> {
    spec.validate()?;
    grid.validate()?;
    if spec.dim != grid.dim {
        return Err(Error::Config(format!(
            "datum dimension {} does not match grid dimension {}",
            spec.dim, grid.dim
        )));
    }
    if grid.half_width <= 2.0 * spec.r0 {
        return Err(Error::Config(format!(
            "box half-width {} must exceed 2R0 = {}",
            grid.half_width,
            2.0 * spec.r0
        )));
    }
    let width = spec
        .smoothing_width
        .unwrap_or(2.0 * grid.spacing())
        .min(0.999 * spec.r0);
    let data = (0..grid.len())
        .map(|idx| {
            let r = grid.radius_sq(idx).sqrt();
            Complex64::new(0.0, -spec.epsilon * spec.profile_with_width(r, width))
        })
        .collect();
    Ok(Field { grid: *grid, data })
}

/// Ratio of the profile at the box edge to its peak on the grid.
pub fn edge_ratio(spec: &DatumSpec, grid: &Grid) -> f64 {
    let peak = (0..grid.len())
        .map(|idx| spec.profile(grid.radius_sq(idx).sqrt()))
        .fold(0.0, f64::max)
        .max(spec.tail(spec.r0 * (1.0 + 1e-12)));
    spec.profile(grid.half_width) / peak
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayReport {
    /// `min (−Im u − ε·bound)` over nodes.
    pub worst_margin: f64,
    pub worst_index: usize,
    /// `max |Re u|`.
    pub max_real: f64,
}

impl DecayReport {
    pub fn holds(&self) -> bool {
        self.worst_margin >= -1e-12
    }
}

/// Pointwise check of `−Im u ≥ ε |x|^{-d}(log|x|)^{-α}` outside `R₀` and `≥ 0` inside.
pub fn verify_decay(field: &Field, spec: &DatumSpec) -> DecayReport {
    let mut report = DecayReport {
        worst_margin: f64::INFINITY,
        worst_index: 0,
        max_real: 0.0,
    };
    for (idx, z) in field.data.iter().enumerate() {
        let r = field.grid.radius_sq(idx).sqrt();
        let margin = -z.im - spec.epsilon * spec.required_bound(r);
        if margin < report.worst_margin {
            report.worst_margin = margin;
            report.worst_index = idx;
        }
        report.max_real = report.max_real.max(z.re.abs());
    }
    report
}

/// Element type of a stored field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    Complex64,
    Complex128,
}

/// JSON header of the binary field format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub d: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "L")]
    pub l: f64,
    pub epsilon: f64,
    pub family: String,
    pub dtype: Precision,
    #[serde(default)]
    pub t: f64,
}

const FIELD_MAGIC: &[u8; 8] = b"NLSFIELD";

/// Writes `NLSFIELD`, a u32 LE header length, the JSON header, then row-major LE (re, im) pairs.
pub fn write_field<W: Write>(mut w: W, field: &Field, header: &FieldHeader) -> Result<()> {
    if header.d != field.grid.dim || header.m != field.grid.points {
        return Err(Error::Config("field header does not match grid".into()));
    }
    let json = serde_json::to_vec(header)?;
    w.write_all(FIELD_MAGIC)?;
    w.write_all(&(json.len() as u32).to_le_bytes())?;
    w.write_all(&json)?;
    let mut buf = Vec::with_capacity(field.data.len() * 16);
    for z in &field.data {
        match header.dtype {
            Precision::Complex128 => {
                buf.extend_from_slice(&z.re.to_le_bytes());
                buf.extend_from_slice(&z.im.to_le_bytes());
            }
            Precision::Complex64 => {
                buf.extend_from_slice(&(z.re as f32).to_le_bytes());
                buf.extend_from_slice(&(z.im as f32).to_le_bytes());
            }
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_field<R: Read>(mut r: R) -> Result<(Field, FieldHeader)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != FIELD_MAGIC {
        return Err(Error::Serde("not a field file".into()));
    }
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let mut json = vec![0u8; u32::from_le_bytes(len) as usize];
    r.read_exact(&mut json)?;
    let header: FieldHeader = serde_json::from_slice(&json)?;
    let grid = Grid::new(header.d, header.m, header.l)?;
    let mut data = Vec::with_capacity(grid.len());
    match header.dtype {
        Precision::Complex128 => {
            let mut b = [0u8; 16];
            for _ in 0..grid.len() {
                r.read_exact(&mut b)?;
                let re = f64::from_le_bytes(b[..8].try_into().unwrap());
                let im = f64::from_le_bytes(b[8..].try_into().unwrap());
                data.push(Complex64::new(re, im));
            }
        }
        Precision::Complex64 => {
            let mut b = [0u8; 8];
            for _ in 0..grid.len() {
                r.read_exact(&mut b)?;
                let re = f32::from_le_bytes(b[..4].try_into().unwrap());
                let im = f32::from_le_bytes(b[4..].try_into().unwrap());
                data.push(Complex64::new(re as f64, im as f64));
            }
        }
    }
    Ok((Field { grid, data }, header))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn log_spec(alpha: f64, r0: f64) -> DatumSpec {
        DatumSpec::new(1, DatumFamily::LogWeighted { alpha }, 1.0, r0)
    }

    #[test]
    fn sample_examples() {
        let grid = Grid::new(1, 16, 8.0).unwrap();
        let u = sample_datum(&log_spec(0.0, 2.0).with_smoothing(0.0), &grid).unwrap();
        // node 12 sits at x = 4
        assert_eq!(grid.coordinate(12), 4.0);
        assert!((u.data[12] - Complex64::new(0.0, -0.25)).norm() < 1e-15);
        // node 9 sits at x = 1 < R0
        assert_eq!(u.data[9], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn log_weighted_alpha_one_value() {
        for d in [1usize, 2] {
            let spec = DatumSpec::new(d, DatumFamily::LogWeighted { alpha: 1.0 }, 0.3, E);
            let r = E * E;
            let expected = 0.3 * E.powi(-2 * d as i32) * 0.5;
            assert!((spec.epsilon * spec.profile(r) - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn domain_errors() {
        let grid = Grid::new(1, 64, 8.0).unwrap();
        assert!(matches!(sample_datum(&log_spec(0.0, 1.0), &grid), Err(Error::Domain(_))));
        assert!(matches!(sample_datum(&log_spec(0.0, 4.0), &grid), Err(Error::Config(_))));
        let bad_k = DatumSpec::new(1, DatumFamily::Power { k: 1.5 }, 1.0, 1.0);
        assert!(sample_datum(&bad_k, &grid).is_err());
    }

    #[test]
    fn decay_verification() {
        let grid = Grid::new(2, 64, 10.0).unwrap();
        let spec = DatumSpec::new(2, DatumFamily::LogWeighted { alpha: 0.5 }, 0.7, 1.5);
        let u = sample_datum(&spec, &grid).unwrap();
        let rep = verify_decay(&u, &spec);
        assert!(rep.holds());
        assert_eq!(rep.max_real, 0.0);
        assert!(u.data.iter().all(|z| z.im <= 0.0));
        assert!(verify_decay(&u.scaled(2.0), &spec).holds());
        let mut broken = u.clone();
        let idx = (0..grid.len()).find(|&i| grid.radius_sq(i) > 16.0).unwrap();
        broken.data[idx] = Complex64::new(0.0, 0.0);
        let rep = verify_decay(&broken, &spec);
        assert!(!rep.holds());
        assert_eq!(rep.worst_index, idx);
    }

    #[test]
    fn mass_is_linear_in_amplitude() {
        let grid = Grid::new(1, 256, 40.0).unwrap();
        let a = sample_datum(&log_spec(0.0, 2.0).with_epsilon(0.1), &grid).unwrap();
        let b = sample_datum(&log_spec(0.0, 2.0).with_epsilon(0.3), &grid).unwrap();
        assert!((b.l2_norm() - 3.0 * a.l2_norm()).abs() < 1e-13 * b.l2_norm());
    }

    #[test]
    fn binary_round_trip() {
        let grid = Grid::new(2, 8, 3.0).unwrap();
        let f = Field::from_fn(grid, |x| Complex64::new(x[0], -x[1] * 0.5));
        let header = FieldHeader {
            d: 2,
            m: 8,
            l: 3.0,
            epsilon: 0.5,
            family: "test".into(),
            dtype: Precision::Complex128,
            t: 0.0,
        };
        let mut buf = Vec::new();
        write_field(&mut buf, &f, &header).unwrap();
        let (g, h) = read_field(buf.as_slice()).unwrap();
        assert_eq!(g, f);
        assert_eq!(h, header);

        let header32 = FieldHeader { dtype: Precision::Complex64, ..header };
        let mut buf = Vec::new();
        write_field(&mut buf, &f, &header32).unwrap();
        let (g, _) = read_field(buf.as_slice()).unwrap();
        assert!(g.l2_distance(&f) < 1e-6);
    }
}
