use num_complex::Complex64;
use serde::Serialize;

use crate::dynamics::{march_solve, HistoryFunction, MarchOptions, Nonlinearity};
use crate::kernel::{log_space, CombinedKernel};
use crate::relaxation::RelaxationEvaluator;
use crate::spectral::TorusGrid;
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct StabilityPoint {
    pub t: f64,
    pub gap: f64,
    pub bound: f64,
}

/// Sensitivity of `u_m(t, φ)` to the memory kernel.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    /// `sup_{λ∈[0.1, 100]} |m̂(λ) − m̄̂(λ)|` on a log grid.
    pub laplace_gap: f64,
    /// `sup_t e^{−γt} ∫₀ᵗ ‖S(τ) − S̄(τ)‖ dτ` with the exact operator norm
    /// `sup_μ |s − s̄|` over the grid's symbols.
    pub epsilon: f64,
    pub gamma: f64,
    pub lipschitz: f64,
    /// `sup_t max(‖u(t)‖₂, ‖ū(t)‖₂)`.
    pub solution_bound: f64,
    pub history_gap: f64,
    pub points: Vec<StabilityPoint>,
}

impl StabilityReport {
    pub fn holds(&self) -> bool {
        self.points.iter().all(|p| p.gap <= p.bound)
    }

    pub fn max_gap(&self) -> f64 {
        self.points.iter().map(|p| p.gap).fold(0.0, f64::max)
    }
}

/// Solves with both kernels from the histories `phi` and `phi_bar` and
/// compares the gap `‖u(t) − ū(t)‖₂` with
/// `(sup‖φ − φ̄‖ + L_f M e^{γt} ε) e^{L_f t}`.
#[allow(clippy::too_many_arguments)]
pub fn kernel_stability_experiment(
    ev: &RelaxationEvaluator,
    ev_bar: &RelaxationEvaluator,
    f: &Nonlinearity,
    phi: &HistoryFunction,
    phi_bar: &HistoryFunction,
    horizon: f64,
    step: f64,
    gamma: f64,
) -> Result<StabilityReport> {
    let lipschitz = f
        .lipschitz()
        .ok_or_else(|| Error::Parameter("kernel stability needs a declared Lipschitz constant".into()))?;
    let opts = MarchOptions::new(horizon, step);
    let u = march_solve(ev, phi, f, &opts)?;
    let u_bar = march_solve(ev_bar, phi_bar, f, &opts)?;
    let grid: TorusGrid = *u.field(0).grid();
    let mus = grid.mode_table().mus;
    let n = u.intervals();

    // ‖S(τ) − S̄(τ)‖ at interval midpoints
    let op_gap = crate::par::try_map_range(n, |j| {
        let tau = (j as f64 + 0.5) * step;
        let a = ev.s_many(tau, &mus)?;
        let b = ev_bar.s_many(tau, &mus)?;
        Ok::<f64, Error>(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
    })?;
    let mut cumulative = vec![0.0; n + 1];
    for j in 0..n {
        cumulative[j + 1] = cumulative[j] + step * op_gap[j];
    }
    let epsilon = cumulative
        .iter()
        .enumerate()
        .map(|(k, c)| (-gamma * k as f64 * step).exp() * c)
        .fold(0.0, f64::max);

    let solution_bound = u
        .l2_norms()
        .into_iter()
        .chain(u_bar.l2_norms())
        .fold(0.0, f64::max);
    let hist = crate::par::try_map_range(n + 1, |k| {
        let t = u.time(k);
        phi.eval(t)?.l2_dist(&phi_bar.eval(t)?)
    })?;
    let mut history_gap: f64 = 0.0;
    let mut points = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = u.time(k);
        history_gap = history_gap.max(hist[k]);
        let gap = u.field(k).l2_dist(u_bar.field(k))?;
        let bound =
            (history_gap + lipschitz * solution_bound * (gamma * t).exp() * epsilon) * (lipschitz * t).exp();
        points.push(StabilityPoint { t, gap, bound });
    }

    let (k, k_bar): (&CombinedKernel, &CombinedKernel) = (ev.kernel(), ev_bar.kernel());
    let laplace_gap = log_space(0.1, 100.0, 301)
        .into_iter()
        .map(|l| {
            let z = Complex64::new(l, 0.0);
            Ok((k.mhat(z)? - k_bar.mhat(z)?).norm())
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);

    Ok(StabilityReport {
        laplace_gap,
        epsilon,
        gamma,
        lipschitz,
        solution_bound,
        history_gap: hist.iter().copied().fold(0.0, f64::max),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelSpec;
    use crate::spectral::Field;
    use std::f64::consts::PI;
    use std::sync::Arc;

    #[test]
    fn identical_kernels_give_zero() {
        let g = TorusGrid::new(1, 16, 1.0).unwrap();
        let u0 = Field::from_fn(g, |x, _| (2.0 * PI * x).cos());
        let ev = Arc::new(RelaxationEvaluator::new(KernelSpec::fractional(0.5, 1.0).unwrap()));
        let phi = HistoryFunction::resolvent(ev.clone(), u0);
        let rep = kernel_stability_experiment(&ev, &ev, &Nonlinearity::sine(1.0), &phi, &phi, 0.5, 0.05, 1.0)
            .unwrap();
        assert_eq!(rep.epsilon, 0.0);
        assert_eq!(rep.laplace_gap, 0.0);
        assert_eq!(rep.max_gap(), 0.0);
    }

    #[test]
    fn gap_shrinks_with_perturbation_and_stays_below_bound() {
        let g = TorusGrid::new(1, 16, 1.0).unwrap();
        let u0 = Field::from_fn(g, |x, _| (2.0 * PI * x).sin() + 0.5);
        let f = Nonlinearity::sine(1.0);
        let base = Arc::new(RelaxationEvaluator::new(KernelSpec::Zero));
        let phi = HistoryFunction::constant(u0.clone(), 2.0).unwrap();
        let mut last = f64::INFINITY;
        for eps in [1e-1, 1e-2, 1e-3] {
            let pert = Arc::new(RelaxationEvaluator::new(KernelSpec::exp_sum(vec![eps], vec![1.0]).unwrap()));
            let rep = kernel_stability_experiment(&base, &pert, &f, &phi, &phi, 1.0, 0.01, 1.0).unwrap();
            assert!(rep.holds());
            assert!(rep.max_gap() < last);
            assert!(rep.laplace_gap > 0.0);
            last = rep.max_gap();
        }
    }
}
