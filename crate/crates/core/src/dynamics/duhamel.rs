use num_complex::Complex64;

use super::trajectory::Trajectory;
use crate::relaxation::RelaxationEvaluator;
use crate::spectral::{Field, ModeTable, TorusGrid};
use crate::{Error, Result};

/// `s((ℓ − ½)h, μ)` for lags `ℓ = 1..=L` and every distinct symbol `μ` of a
/// grid: the midpoint values used by the Duhamel product rule.
#[derive(Debug, Clone)]
pub struct DuhamelTable {
    step: f64,
    modes: ModeTable,
    rows: Vec<Vec<f64>>,
}

impl DuhamelTable {
    pub fn new(ev: &RelaxationEvaluator, grid: &TorusGrid, step: f64, lags: usize) -> Result<Self> {
        let modes = grid.mode_table();
        let rows = crate::par::try_map_range(lags, |l| {
            let t = (l as f64 + 0.5) * step;
            modes.mus.iter().map(|&mu| ev.s(t, mu)).collect::<Result<Vec<f64>>>()
        })?;
        Ok(Self { step, modes, rows })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn lags(&self) -> usize {
        self.rows.len()
    }

    pub fn modes(&self) -> &ModeTable {
        &self.modes
    }

    /// `s((lag − ½)h, μ)` per distinct symbol; `lag ≥ 1`.
    pub fn row(&self, lag: usize) -> &[f64] {
        &self.rows[lag - 1]
    }

    /// `(h/2) Σ_{j < min(e, J)} s((e−j−½)h) (ĝ_j + ĝ_{j+1})`, where `pairs[j]`
    /// holds `ĝ_j + ĝ_{j+1}` and `J = pairs.len()`.
    pub fn convolve_at(&self, pairs: &[Vec<Complex64>], e: usize) -> Vec<Complex64> {
        let m = self.modes.index.len();
        let mut acc = vec![Complex64::new(0.0, 0.0); m];
        let upto = e.min(pairs.len());
        for (j, pair) in pairs.iter().enumerate().take(upto) {
            let row = self.row(e - j);
            for ((a, p), &k) in acc.iter_mut().zip(pair).zip(&self.modes.index) {
                *a += p * row[k as usize];
            }
        }
        let half = 0.5 * self.step;
        acc.iter_mut().for_each(|a| *a *= half);
        acc
    }
}

/// `ĝ_j + ĝ_{j+1}` for consecutive nodes.
pub(crate) fn pair_sums(fields: &[Field]) -> Vec<Vec<Complex64>> {
    crate::par::map_range(fields.len().saturating_sub(1), |j| {
        fields[j]
            .spectrum()
            .iter()
            .zip(fields[j + 1].spectrum())
            .map(|(a, b)| a + b)
            .collect()
    })
}

/// `∫₀^{t_n} S(t_n − τ) g(τ) dτ` by the product rule: on each interval `g`
/// is linear (trapezoid) and `s(t_n − τ, μ)` is frozen at the midpoint.
pub fn duhamel_quad(ev: &RelaxationEvaluator, g: &Trajectory, n: usize) -> Result<Field> {
    if n > g.intervals() {
        return Err(Error::Parameter(format!(
            "node {n} beyond the trajectory's {} intervals",
            g.intervals()
        )));
    }
    let grid = *g.field(0).grid();
    if n == 0 {
        return Ok(Field::zeros(grid));
    }
    let table = DuhamelTable::new(ev, &grid, g.step(), n)?;
    let pairs = pair_sums(&g.fields()[..=n]);
    Field::from_spectrum(grid, table.convolve_at(&pairs, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelSpec;
    use std::f64::consts::PI;

    #[test]
    fn zero_forcing_gives_zero() {
        let g = TorusGrid::new(1, 16, 1.0).unwrap();
        let traj = Trajectory::new(0.1, vec![Field::zeros(g); 11]).unwrap();
        let ev = RelaxationEvaluator::new(KernelSpec::fractional(0.5, 1.0).unwrap());
        assert_eq!(duhamel_quad(&ev, &traj, 10).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn heat_single_mode_closed_form() {
        let l = 2.0 * PI;
        let g = TorusGrid::new(1, 16, l).unwrap();
        let mu = 1.0;
        let c = 0.5;
        let h = 0.01;
        let n = 100;
        let fields = (0..=n)
            .map(|j| {
                let s = j as f64 * h;
                Field::from_fn(g, |x, _| (c * s).exp() * x.sin())
            })
            .collect();
        let traj = Trajectory::new(h, fields).unwrap();
        let ev = RelaxationEvaluator::new(KernelSpec::zero());
        let got = duhamel_quad(&ev, &traj, n).unwrap();
        let t = n as f64 * h;
        let amp = ((c * t).exp() - (-mu * t).exp()) / (c + mu);
        let want = Field::from_fn(g, |x, _| amp * x.sin());
        let rel = got.l2_dist(&want).unwrap() / want.l2();
        assert!(rel < 1e-4, "relative error {rel:e}");
    }
}
