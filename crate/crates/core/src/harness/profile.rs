//! Distance to the free profile with a logarithmic phase correction.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::initial_data::{Field, Grid};

/// Applies `v ↦ Σ_j e^{-i ξ_k y_j} v_j` along `axis` of a row-major array.
fn dft_axis(data: &[Complex64], out: &mut [Complex64], matrix: &[Complex64], n_out: usize, n_in: usize, dim: usize, axis: usize) {
    match (dim, axis) {
        (1, _) => {
            for k in 0..n_out {
                out[k] = matrix[k * n_in..(k + 1) * n_in]
                    .iter()
                    .zip(data)
                    .map(|(e, v)| e * v)
                    .sum();
            }
        }
        (_, 1) => {
            let rows = data.len() / n_in;
            for r in 0..rows {
                let row = &data[r * n_in..(r + 1) * n_in];
                for k in 0..n_out {
                    out[r * n_out + k] = matrix[k * n_in..(k + 1) * n_in]
                        .iter()
                        .zip(row)
                        .map(|(e, v)| e * v)
                        .sum();
                }
            }
        }
        _ => {
            let cols = data.len() / n_in;
            for k in 0..n_out {
                for c in 0..cols {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for j in 0..n_in {
                        acc += matrix[k * n_in + j] * data[j * cols + c];
                    }
                    out[k * cols + c] = acc;
                }
            }
        }
    }
}

/// Unitary Fourier transform of `u_plus` sampled at `ξ = x/(2t)` for every node `x` of `target`.
pub fn transform_at_scaled_nodes(u_plus: &Field, target: &Grid, t: f64) -> Field {
    let src = u_plus.grid;
    let (n_in, n_out) = (src.points, target.points);
    let matrix: Vec<Complex64> = (0..n_out)
        .flat_map(|k| {
            let xi = target.coordinate(k) / (2.0 * t);
            (0..n_in).map(move |j| Complex64::from_polar(1.0, -xi * src.coordinate(j)))
        })
        .collect();
    let weight = src.cell_volume() * (2.0 * PI).powf(-(src.dim as f64) / 2.0);
    let data = if src.dim == 1 {
        let mut out = vec![Complex64::default(); n_out];
        dft_axis(&u_plus.data, &mut out, &matrix, n_out, n_in, 1, 0);
        out
    } else {
        let mut mid = vec![Complex64::default(); n_in * n_out];
        dft_axis(&u_plus.data, &mut mid, &matrix, n_out, n_in, 2, 1);
        let mut out = vec![Complex64::default(); n_out * n_out];
        dft_axis(&mid, &mut out, &matrix, n_out, n_in, 2, 0);
        out
    };
    Field {
        grid: *target,
        data: data.into_iter().map(|z| z * weight).collect(),
    }
}

/// `(2it)^{-d/2} e^{i|x|²/4t} û₊(x/2t) exp(−i (g₁/2) |û₊(x/2t)|^{2/d} log t)` on `grid`.
pub fn modified_profile(u_plus: &Field, grid: &Grid, g1: f64, t: f64) -> Result<Field> {
    if !(t >= 1.0) {
        return Err(Error::Domain(format!("profile time t = {t} must be at least 1")));
    }
    if u_plus.grid.dim != grid.dim {
        return Err(Error::Config("u_plus and target grid differ in dimension".into()));
    }
    let d = grid.dim as f64;
    let hat = transform_at_scaled_nodes(u_plus, grid, t);
    let prefactor = Complex64::new(0.0, 2.0 * t).powf(-d / 2.0);
    let log_t = t.ln();
    let data = hat
        .data
        .iter()
        .enumerate()
        .map(|(idx, h)| {
            let chirp = grid.radius_sq(idx) / (4.0 * t);
            let correction = -0.5 * g1 * h.norm().powf(2.0 / d) * log_t;
            prefactor * h * Complex64::from_polar(1.0, chirp + correction)
        })
        .collect();
    Ok(Field { grid: *grid, data })
}

/// `‖u(t) − profile‖ / ‖u(t)‖` in `L²` of the box.
pub fn modified_profile_distance(field: &Field, u_plus: &Field, g1: f64, t: f64) -> Result<f64> {
    let profile = modified_profile(u_plus, &field.grid, g1, t)?;
    let norm = field.l2_norm();
    if norm == 0.0 {
        return Err(Error::Domain("trajectory snapshot is identically zero".into()));
    }
    Ok(field.l2_distance(&profile) / norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::linear_step;

    fn gaussian(grid: Grid) -> Field {
        Field::from_fn(grid, |x| {
            let r2: f64 = x.iter().map(|c| c * c).sum();
            Complex64::new((-r2).exp(), 0.0)
        })
    }

    #[test]
    fn gaussian_transform_is_exact() {
        let grid = Grid::new(1, 128, 10.0).unwrap();
        let hat = transform_at_scaled_nodes(&gaussian(grid), &grid, 2.0);
        for (idx, h) in hat.data.iter().enumerate() {
            let xi = grid.coordinate(idx) / 4.0;
            let exact = (-xi * xi / 4.0).exp() / 2f64.sqrt();
            assert!((h - exact).norm() < 1e-12);
        }
    }

    #[test]
    fn profile_against_itself_is_zero() {
        let grid = Grid::new(2, 16, 6.0).unwrap();
        let u = gaussian(grid);
        let p = modified_profile(&u, &grid, 0.7, 3.0).unwrap();
        assert_eq!(modified_profile_distance(&p, &u, 0.7, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn free_flow_approaches_profile() {
        let grid = Grid::new(1, 2048, 120.0).unwrap();
        let u = gaussian(grid);
        let distances: Vec<f64> = [1.5, 3.0, 6.0]
            .iter()
            .map(|&t| modified_profile_distance(&linear_step(&u, t), &u, 0.0, t).unwrap())
            .collect();
        assert!(distances.windows(2).all(|w| w[1] < w[0]), "{distances:?}");
        assert!(distances[2] < 0.05);
    }

    #[test]
    fn early_time_is_domain_error() {
        let grid = Grid::new(1, 16, 6.0).unwrap();
        let u = gaussian(grid);
        assert!(matches!(modified_profile_distance(&u, &u, 0.0, 0.5), Err(Error::Domain(_))));
    }
}
