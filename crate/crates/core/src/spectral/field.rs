use std::cell::RefCell;
use std::sync::OnceLock;

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

use super::grid::TorusGrid;
use crate::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn fft_lines(data: &mut [Complex64], len: usize, direction: FftDirection) {
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft(len, direction));
    plan.process(data);
}

/// Unnormalised forward or backward transform of a row-major array.
fn transform(grid: &TorusGrid, data: &mut Vec<Complex64>, direction: FftDirection) {
    let n = grid.points_per_axis();
    match grid.dim() {
        1 => fft_lines(data, n, direction),
        _ => {
            // rows are contiguous; columns go through a transpose
            let rows: Vec<Vec<Complex64>> = crate::par::map_range(n, |r| {
                let mut row = data[r * n..(r + 1) * n].to_vec();
                fft_lines(&mut row, n, direction);
                row
            });
            let cols: Vec<Vec<Complex64>> = crate::par::map_range(n, |c| {
                let mut col: Vec<Complex64> = rows.iter().map(|row| row[c]).collect();
                fft_lines(&mut col, n, direction);
                col
            });
            for (c, col) in cols.iter().enumerate() {
                for (r, v) in col.iter().enumerate() {
                    data[r * n + c] = *v;
                }
            }
        }
    }
}

/// A real field on a [`TorusGrid`], stored row-major, with its discrete
/// Fourier coefficients computed on first use.
#[derive(Debug)]
pub struct Field {
    grid: TorusGrid,
    values: Vec<f64>,
    spectrum: OnceLock<Vec<Complex64>>,
}

impl Clone for Field {
    fn clone(&self) -> Self {
        let spectrum = OnceLock::new();
        if let Some(s) = self.spectrum.get() {
            let _ = spectrum.set(s.clone());
        }
        Self {
            grid: self.grid,
            values: self.values.clone(),
            spectrum,
        }
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.values == other.values
    }
}

impl Field {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.size() {
            return Err(Error::Parameter(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.size()
            )));
        }
        Ok(Self {
            grid,
            values,
            spectrum: OnceLock::new(),
        })
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: TorusGrid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.size()],
            spectrum: OnceLock::new(),
        }
    }

    /// Samples `f(x, y)` at the grid points (`y = 0` in one dimension).
    pub fn from_fn(grid: TorusGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.size())
            .map(|i| {
                let [x, y] = grid.point(i);
                f(x, y)
            })
            .collect();
        Self {
            grid,
            values,
            spectrum: OnceLock::new(),
        }
    }

    /// Real field from (Hermitian) Fourier coefficients; the imaginary part
    /// of the inverse transform is discarded.
    pub fn from_spectrum(grid: TorusGrid, mut coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.size() {
            return Err(Error::Parameter(format!(
                "{} coefficients for a grid of {} points",
                coeffs.len(),
                grid.size()
            )));
        }
        transform(&grid, &mut coeffs, FftDirection::Inverse);
        let scale = 1.0 / grid.size() as f64;
        let values = coeffs.iter().map(|c| c.re * scale).collect();
        Ok(Self {
            grid,
            values,
            spectrum: OnceLock::new(),
        })
    }

    /// Smooth random field `Σ a_ξ cos(2πξ·x/L) + b_ξ sin(2πξ·x/L)` over
    /// `0 < |ξ|_∞ ≤ max_wavenumber`, with `a, b` drawn from `normal` and
    /// damped by `(1 + |ξ|²)^{−decay/2}`. The mean is `mean`.
    pub fn smooth_random(
        grid: TorusGrid,
        max_wavenumber: usize,
        decay: f64,
        mean: f64,
        mut normal: impl FnMut() -> f64,
    ) -> Self {
        let kmax = max_wavenumber.min(grid.points_per_axis() / 2 - 1) as i64;
        let two_pi_l = 2.0 * std::f64::consts::PI / grid.length();
        let mut modes = Vec::new();
        let ky_range = if grid.dim() == 1 { 0..=0 } else { -kmax..=kmax };
        for kx in 0..=kmax {
            for ky in ky_range.clone() {
                // one representative of each ±ξ pair
                if kx == 0 && ky <= 0 {
                    continue;
                }
                let damp = (1.0 + (kx * kx + ky * ky) as f64).powf(-0.5 * decay);
                modes.push((kx as f64, ky as f64, damp * normal(), damp * normal()));
            }
        }
        Self::from_fn(grid, |x, y| {
            mean + modes
                .iter()
                .map(|&(kx, ky, a, b)| {
                    let phase = two_pi_l * (kx * x + ky * y);
                    a * phase.cos() + b * phase.sin()
                })
                .sum::<f64>()
        })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Unnormalised DFT coefficients, `v̂_ξ = Σ_x v(x) e^{−2πiξ·x/N}`.
    pub fn spectrum(&self) -> &[Complex64] {
        self.spectrum.get_or_init(|| {
            let mut data: Vec<Complex64> =
                self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            transform(&self.grid, &mut data, FftDirection::Forward);
            data
        })
    }

    /// Largest violation of `v̂_{−ξ} = conj(v̂_ξ)`, relative to the largest
    /// coefficient.
    pub fn hermitian_defect(&self) -> f64 {
        let c = self.spectrum();
        let n = self.grid.points_per_axis();
        let neg = |k: usize| (n - k) % n;
        let mirror = |idx: usize| match self.grid.dim() {
            1 => neg(idx),
            _ => neg(idx / n) * n + neg(idx % n),
        };
        let scale = c.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        (0..c.len())
            .map(|i| (c[mirror(i)] - c[i].conj()).norm())
            .fold(0.0, f64::max)
            / scale
    }

    fn check(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
            spectrum: OnceLock::new(),
        }
    }

    pub fn scale(&self, a: f64) -> Field {
        self.map(|v| a * v)
    }

    /// `self + a·other`.
    pub fn axpy(&self, a: f64, other: &Field) -> Result<Field> {
        self.check(other)?;
        Ok(Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| x + a * y)
                .collect(),
            spectrum: OnceLock::new(),
        })
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.axpy(-1.0, other)
    }

    /// Grid L² norm, `(|cell| Σ v²)^{1/2}`.
    pub fn l2(&self) -> f64 {
        (self.grid.cell() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    /// `‖self − other‖₂`.
    pub fn l2_dist(&self, other: &Field) -> Result<f64> {
        self.check(other)?;
        let ss: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Ok((self.grid.cell() * ss).sqrt())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn lcg(seed: u64) -> impl FnMut() -> f64 {
        let mut s = seed;
        move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        }
    }

    #[test]
    fn round_trip_1d_and_2d() {
        for (d, n) in [(1, 64), (2, 32)] {
            let g = TorusGrid::new(d, n, 3.0).unwrap();
            let mut r = lcg(7);
            let v = Field::new(g, (0..g.size()).map(|_| r()).collect()).unwrap();
            let back = Field::from_spectrum(g, v.spectrum().to_vec()).unwrap();
            let err = v.l2_dist(&back).unwrap() / v.l2();
            assert!(err < 1e-13, "round trip {err:e}");
            assert!(v.hermitian_defect() < 1e-12);
        }
    }

    #[test]
    fn single_mode_spectrum() {
        let g = TorusGrid::new(1, 16, 2.0).unwrap();
        let v = Field::from_fn(g, |x, _| (2.0 * PI * x / 2.0).cos());
        let c = v.spectrum();
        assert!((c[1].norm() - 8.0).abs() < 1e-12);
        assert!((c[15].norm() - 8.0).abs() < 1e-12);
        assert!(c[2].norm() < 1e-12);
    }

    #[test]
    fn smooth_random_has_requested_mean_and_is_smooth() {
        let g = TorusGrid::new(2, 32, 1.0).unwrap();
        let v = Field::smooth_random(g, 4, 2.0, 0.5, lcg(3));
        assert!((v.mean() - 0.5).abs() < 1e-12);
        let hi: f64 = (0..g.size())
            .filter(|&i| g.mode_key(i) > 32)
            .map(|i| v.spectrum()[i].norm())
            .fold(0.0, f64::max);
        assert!(hi < 1e-9);
    }

    #[test]
    fn arithmetic_checks_grids() {
        let a = Field::zeros(TorusGrid::new(1, 8, 1.0).unwrap());
        let b = Field::zeros(TorusGrid::new(1, 16, 1.0).unwrap());
        assert_eq!(a.add(&b), Err(Error::GridMismatch));
        let c = Field::constant(*a.grid(), 2.0);
        assert_eq!(c.axpy(0.5, &c).unwrap().values()[3], 3.0);
        assert_eq!(c.l2(), 2.0);
    }
}
