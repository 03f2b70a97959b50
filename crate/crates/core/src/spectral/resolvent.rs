use num_complex::Complex64;

use super::field::Field;
use super::grid::ModeTable;
use crate::relaxation::RelaxationEvaluator;
use crate::Result;

/// `s(t, μ)` for every distinct symbol in `table`.
pub fn symbol_values(ev: &RelaxationEvaluator, t: f64, table: &ModeTable) -> Result<Vec<f64>> {
    ev.s_many(t, &table.mus)
}

/// Multiplies each Fourier coefficient of `v` by `values[table.index[ξ]]`.
pub fn apply_symbol(v: &Field, table: &ModeTable, values: &[f64]) -> Result<Field> {
    let coeffs: Vec<Complex64> = v
        .spectrum()
        .iter()
        .zip(&table.index)
        .map(|(c, &k)| c * values[k as usize])
        .collect();
    Field::from_spectrum(*v.grid(), coeffs)
}

/// `S(t)v`: the Fourier coefficient at `ξ` is scaled by `s(t, |2πξ/L|²)`.
pub fn apply_s(ev: &RelaxationEvaluator, t: f64, v: &Field) -> Result<Field> {
    if t == 0.0 {
        return Ok(v.clone());
    }
    let table = v.grid().mode_table();
    let values = symbol_values(ev, t, &table)?;
    apply_symbol(v, &table, &values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{CombinedKernel, KernelSpec};
    use crate::relaxation::{graded_grid_for, s_volterra_reference};
    use crate::spectral::TorusGrid;
    use std::f64::consts::PI;

    #[test]
    fn identity_at_zero() {
        let g = TorusGrid::new(1, 32, 1.0).unwrap();
        let v = Field::from_fn(g, |x, _| x * x);
        let ev = RelaxationEvaluator::new(KernelSpec::fractional(0.5, 1.0).unwrap());
        assert_eq!(apply_s(&ev, 0.0, &v).unwrap(), v);
    }

    #[test]
    fn heat_on_one_mode() {
        let l = 4.0;
        let g = TorusGrid::new(1, 64, l).unwrap();
        let k = 2.0 * PI / l;
        let v = Field::from_fn(g, |x, _| (k * x).sin());
        let ev = RelaxationEvaluator::new(KernelSpec::zero());
        let out = apply_s(&ev, 1.0, &v).unwrap();
        let want = Field::from_fn(g, |x, _| (-k * k).exp() * (k * x).sin());
        assert!(out.l2_dist(&want).unwrap() < 1e-10);
    }

    #[test]
    fn fractional_modes_match_oracle() {
        let g = TorusGrid::new(1, 16, 2.0 * PI).unwrap();
        let mut seed = 11u64;
        let v = Field::smooth_random(g, 7, 0.0, 0.3, || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        });
        let spec = KernelSpec::fractional(0.5, 1.0).unwrap();
        let ev = RelaxationEvaluator::new(spec.clone());
        let t = 0.75;
        let out = apply_s(&ev, t, &v).unwrap();
        let kernel = CombinedKernel::new(spec);
        for idx in 1..8 {
            let mu = g.mu(idx);
            let mut grid = graded_grid_for(&kernel, mu, t, 0.05).unwrap();
            // land a node exactly on t
            if let crate::relaxation::TimeGrid::Graded { t0, count, .. } = grid {
                let c = (t / t0).ln_1p() / count as f64;
                grid = crate::relaxation::TimeGrid::graded(t0, c, count).unwrap();
            }
            let s = s_volterra_reference(&kernel, mu, &grid).unwrap();
            let want = v.spectrum()[idx] * *s.last().unwrap();
            let got = out.spectrum()[idx];
            assert!((got - want).norm() <= 1e-5 * want.norm(), "mode {idx}");
        }
    }
}
