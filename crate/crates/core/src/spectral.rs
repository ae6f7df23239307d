//! FFT plumbing for 1-D and 2-D periodic grids.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::initial_data::Grid;

pub struct Spectral {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// `|ξ|²` per mode, in FFT ordering.
    ksq: Vec<f64>,
    transpose: Vec<Complex64>,
    scratch: Vec<Complex64>,
    cached_dt: f64,
    multiplier: Vec<Complex64>,
}

/// Angular wavenumber of FFT index `k` on a box of length `2L` with `m` points.
pub fn wavenumber(k: usize, m: usize, half_width: f64) -> f64 {
    let signed = if k < m / 2 { k as f64 } else { k as f64 - m as f64 };
    PI * signed / half_width
}

impl Spectral {
    pub fn new(grid: Grid) -> Self {
        let m = grid.points;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(m);
        let inverse = planner.plan_fft_inverse(m);
        let k: Vec<f64> = (0..m).map(|j| wavenumber(j, m, grid.half_width)).collect();
        let ksq = match grid.dim {
            1 => k.iter().map(|v| v * v).collect(),
            _ => (0..m * m)
                .map(|idx| {
                    let (a, b) = (k[idx / m], k[idx % m]);
                    a * a + b * b
                })
                .collect(),
        };
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            grid,
            forward,
            inverse,
            ksq,
            transpose: if grid.dim == 2 { vec![Complex64::default(); m * m] } else { Vec::new() },
            scratch: vec![Complex64::default(); scratch_len],
            cached_dt: f64::NAN,
            multiplier: Vec::new(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn ksq(&self) -> &[f64] {
        &self.ksq
    }

    fn transform(&mut self, data: &mut [Complex64], inverse: bool) {
        let plan = if inverse { &self.inverse } else { &self.forward };
        plan.process_with_scratch(data, &mut self.scratch);
        if self.grid.dim == 2 {
            let m = self.grid.points;
            transpose(data, &mut self.transpose, m);
            plan.process_with_scratch(&mut self.transpose, &mut self.scratch);
            transpose(&self.transpose, data, m);
        }
    }

    /// Unnormalised forward DFT along every axis.
    pub fn forward(&mut self, data: &mut [Complex64]) {
        self.transform(data, false);
    }

    /// Inverse DFT including the `1/N` normalisation.
    pub fn inverse(&mut self, data: &mut [Complex64]) {
        self.transform(data, true);
        let scale = 1.0 / data.len() as f64;
        data.iter_mut().for_each(|z| *z *= scale);
    }

    /// Free Schrödinger flow `e^{i dt Δ}`: multiplies mode `ξ` by `e^{-i|ξ|² dt}`.
    pub fn free_flow(&mut self, data: &mut [Complex64], dt: f64) {
        if dt == 0.0 {
            return;
        }
        if dt != self.cached_dt {
            self.multiplier = self
                .ksq
                .iter()
                .map(|k2| Complex64::from_polar(1.0, -k2 * dt))
                .collect();
            self.cached_dt = dt;
        }
        self.forward(data);
        for (z, w) in data.iter_mut().zip(&self.multiplier) {
            *z *= w;
        }
        self.inverse(data);
    }

    /// Spectral Laplacian.
    pub fn laplacian(&mut self, data: &mut [Complex64]) {
        self.forward(data);
        for (z, k2) in data.iter_mut().zip(&self.ksq) {
            *z *= -k2;
        }
        self.inverse(data);
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], m: usize) {
    for i in 0..m {
        for j in 0..m {
            dst[j * m + i] = src[i * m + j];
        }
    }
}
