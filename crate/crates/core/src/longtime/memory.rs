use num_complex::Complex64;

use crate::dynamics::{Nonlinearity, Trajectory};
use crate::kernel::KernelSpec;
use crate::spectral::Field;
use crate::{Error, Result};

/// `(u, η₁, …, η_J)` at one time, `η_j(t) = ∫₀ᵗ e^{−λ_j(t−s)} Δu(s) ds`.
#[derive(Debug, Clone)]
pub struct AugmentedState {
    pub u: Field,
    pub eta: Vec<Field>,
}

#[derive(Debug, Clone)]
pub struct AugmentedRun {
    pub trajectory: Trajectory,
    /// The full state at every node when recording was requested, otherwise
    /// only the final state.
    pub states: Vec<AugmentedState>,
}

/// Integrates `u' = (1 + Σ w_j) Δu − Σ w_j λ_j η_j + f(u)`,
/// `η_j' = Δu − λ_j η_j`, the local form of the memory equation for
/// `k(t) = Σ w_j e^{−λ_j t}` (`∂ₜ(k ∗ Δu) = k(0)Δu − Σ w_j λ_j η_j`).
///
/// Per Fourier mode the linear part is Crank–Nicolson, eliminated through
/// its Schur complement onto `u`; `f` is Adams–Bashforth 2 with an Euler
/// first step.
pub fn memory_augmented_integrate(
    kernel: &KernelSpec,
    f: &Nonlinearity,
    u0: &Field,
    horizon: f64,
    step: f64,
    record: bool,
) -> Result<AugmentedRun> {
    let (weights, rates) = match kernel {
        KernelSpec::Zero => (Vec::new(), Vec::new()),
        KernelSpec::ExpSum { weights, rates } => (weights.clone(), rates.clone()),
        other => {
            return Err(Error::Parameter(format!(
                "the augmented integrator needs an exponential sum, got {}",
                other.describe()
            )))
        }
    };
    let n = crate::dynamics::intervals(horizon, step)?;
    let grid = *u0.grid();
    let modes = grid.mode_table();
    let h = step;
    let wsum: f64 = weights.iter().sum();
    let cj: Vec<f64> = rates.iter().map(|&l| (1.0 - 0.5 * h * l) / (1.0 + 0.5 * h * l)).collect();

    struct Coeffs {
        inv_d: f64,
        keep: f64,
        couple: Vec<f64>,
        feed: Vec<f64>,
    }
    let coeffs = modes
        .mus
        .iter()
        .map(|&mu| {
            let feed: Vec<f64> = rates.iter().map(|&l| 0.5 * h * mu / (1.0 + 0.5 * h * l)).collect();
            let bd: f64 = weights
                .iter()
                .zip(&rates)
                .zip(&feed)
                .map(|((w, l), d)| w * l * d)
                .sum();
            let a = mu * (1.0 + wsum);
            let denom = 1.0 + 0.5 * h * a - 0.5 * h * bd;
            if !(denom.is_finite() && denom > 1e-12) {
                return Err(Error::StepStability { mu, denom });
            }
            let couple = weights
                .iter()
                .zip(&rates)
                .zip(&cj)
                .map(|((w, l), c)| 0.5 * h * w * l * (1.0 + c) / denom)
                .collect();
            Ok(Coeffs {
                inv_d: 1.0 / denom,
                keep: 1.0 - 0.5 * h * a + 0.5 * h * bd,
                couple,
                feed,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let m = grid.size();
    let zero = Complex64::new(0.0, 0.0);
    let mut u_hat: Vec<Complex64> = u0.spectrum().to_vec();
    let mut eta_hat: Vec<Vec<Complex64>> = vec![vec![zero; m]; weights.len()];
    let mut f_prev: Option<Vec<Complex64>> = None;
    let mut fields = Vec::with_capacity(n + 1);
    fields.push(u0.clone());
    let mut states = Vec::new();
    let snapshot = |u: &Field, eta: &[Vec<Complex64>]| -> Result<AugmentedState> {
        Ok(AugmentedState {
            u: u.clone(),
            eta: eta
                .iter()
                .map(|e| Field::from_spectrum(grid, e.clone()))
                .collect::<Result<_>>()?,
        })
    };
    if record {
        states.push(snapshot(u0, &eta_hat)?);
    }
    for _ in 0..n {
        let current = fields.last().expect("non-empty");
        let f_now: Vec<Complex64> = f.apply(current).spectrum().to_vec();
        let mut next = vec![zero; m];
        for i in 0..m {
            let c = &coeffs[modes.index[i] as usize];
            let forcing = match &f_prev {
                Some(fp) => 1.5 * f_now[i] - 0.5 * fp[i],
                None => f_now[i],
            };
            let mut u_new = (c.keep * u_hat[i] + h * forcing) * c.inv_d;
            for (j, eta) in eta_hat.iter().enumerate() {
                u_new -= c.couple[j] * eta[i];
            }
            for (j, eta) in eta_hat.iter_mut().enumerate() {
                eta[i] = cj[j] * eta[i] - c.feed[j] * (u_new + u_hat[i]);
            }
            next[i] = u_new;
        }
        u_hat = next;
        f_prev = Some(f_now);
        let field = Field::from_spectrum(grid, u_hat.clone())?;
        if record {
            states.push(snapshot(&field, &eta_hat)?);
        }
        fields.push(field);
    }
    if !record {
        states.push(snapshot(fields.last().expect("non-empty"), &eta_hat)?);
    }
    Ok(AugmentedRun {
        trajectory: Trajectory::new(step, fields)?,
        states,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{march_solve, HistoryFunction, MarchOptions};
    use crate::relaxation::RelaxationEvaluator;
    use crate::spectral::TorusGrid;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn grid() -> TorusGrid {
        TorusGrid::new(1, 16, 1.0).unwrap()
    }

    #[test]
    fn zero_kernel_linear_mode_is_second_order() {
        let g = grid();
        let u0 = Field::from_fn(g, |x, _| (2.0 * PI * x).cos());
        let mu = 4.0 * PI * PI;
        let exact = (-mu * 0.5f64).exp();
        let err = |h: f64| {
            let run = memory_augmented_integrate(&KernelSpec::Zero, &Nonlinearity::zero(), &u0, 0.5, h, false)
                .unwrap();
            (run.trajectory.last().max_abs() - exact).abs()
        };
        let (e1, e2) = (err(0.01), err(0.005));
        assert!(e1 < 1e-3);
        assert!((e1 / e2).log2() > 1.8, "{e1} {e2}");
    }

    #[test]
    fn agrees_with_volterra_solver() {
        let g = grid();
        let kernel = KernelSpec::exp_sum(vec![0.5, 1.0], vec![2.0, 10.0]).unwrap();
        let f = Nonlinearity::sine(1.0);
        let u0 = Field::from_fn(g, |x, _| (2.0 * PI * x).sin() + 0.5);
        let run = memory_augmented_integrate(&kernel, &f, &u0, 1.0, 0.002, false).unwrap();
        let ev = Arc::new(RelaxationEvaluator::new(kernel));
        let phi = HistoryFunction::resolvent(ev.clone(), u0);
        let mild = march_solve(&ev, &phi, &f, &MarchOptions::new(1.0, 0.002)).unwrap();
        let d = run.trajectory.last().l2_dist(mild.last()).unwrap();
        assert!(d < 1e-4 * mild.last().l2(), "{d}");
    }

    #[test]
    fn memory_variable_matches_its_integral() {
        let g = grid();
        let kernel = KernelSpec::exp_sum(vec![1.0], vec![3.0]).unwrap();
        let u0 = Field::from_fn(g, |x, _| (2.0 * PI * x).cos());
        let h = 0.001;
        let run = memory_augmented_integrate(&kernel, &Nonlinearity::zero(), &u0, 0.5, h, true).unwrap();
        let mu = 4.0 * PI * PI;
        // η(t) = −μ ∫₀ᵗ e^{−3(t−s)} u(s) ds for a single cosine mode
        let n = run.states.len() - 1;
        let t = n as f64 * h;
        let amp = |k: usize| run.states[k].u.values()[0];
        let mut integral = 0.0;
        for k in 0..n {
            let a = (-3.0 * (t - k as f64 * h)).exp() * amp(k);
            let b = (-3.0 * (t - (k + 1) as f64 * h)).exp() * amp(k + 1);
            integral += 0.5 * h * (a + b);
        }
        let eta = run.states[n].eta[0].values()[0];
        assert!((eta + mu * integral).abs() < 1e-3 * (mu * integral).abs(), "{eta} {}", -mu * integral);
    }

    #[test]
    fn single_mode_matches_matrix_exponential() {
        let g = grid();
        let (w, lam) = (0.7, 4.0);
        let kernel = KernelSpec::exp_sum(vec![w], vec![lam]).unwrap();
        let u0 = Field::from_fn(g, |x, _| (2.0 * PI * x).cos());
        let run = memory_augmented_integrate(&kernel, &Nonlinearity::zero(), &u0, 1.0, 0.001, false).unwrap();
        let mu = 4.0 * PI * PI;
        let a = nalgebra::Matrix2::new(-mu * (1.0 + w), -w * lam, -mu, -lam);
        let exact = a.exp() * nalgebra::Vector2::new(1.0, 0.0);
        // amplitude of the cosine mode at x = −1/2 is −u
        let got = -run.trajectory.last().values()[0];
        assert!((got - exact[0]).abs() < 1e-5 * exact[0].abs().max(1e-3), "{got} {}", exact[0]);
        let eta = -run.states[0].eta[0].values()[0];
        assert!((eta - exact[1]).abs() < 1e-4 * exact[1].abs(), "{eta} {}", exact[1]);
    }

    #[test]
    fn rejects_other_kernels() {
        let u0 = Field::zeros(grid());
        let k = KernelSpec::fractional(0.5, 1.0).unwrap();
        assert!(memory_augmented_integrate(&k, &Nonlinearity::zero(), &u0, 1.0, 0.1, false).is_err());
    }
}
