use num_complex::Complex64;

use super::duhamel::pair_sums;
use super::history::HistoryFunction;
use super::nonlinearity::Nonlinearity;
use super::picard::{intervals, march_solve, picard_solve, MarchOptions, PicardOptions};
use super::trajectory::Trajectory;
use crate::relaxation::RelaxationEvaluator;
use crate::spectral::Field;
use crate::Result;

/// Which solver produces `u_φ` on `[0, t]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    Picard,
    March,
}

#[derive(Debug, Clone)]
pub struct SemigroupOptions {
    pub step: f64,
    pub solver: Solver,
    /// Bielecki weight for the Picard solver.
    pub gamma: Option<f64>,
    pub tol: f64,
}

impl SemigroupOptions {
    pub fn new(step: f64) -> Self {
        Self {
            step,
            solver: Solver::Picard,
            gamma: None,
            tol: 1e-13,
        }
    }
}

/// Solves for `u_φ` on `[0, t]` with the configured solver.
pub fn solve_on(
    ev: &RelaxationEvaluator,
    f: &Nonlinearity,
    phi: &HistoryFunction,
    t: f64,
    opts: &SemigroupOptions,
) -> Result<Trajectory> {
    match opts.solver {
        Solver::Picard => {
            let mut p = PicardOptions::new(t, opts.step).tol(opts.tol);
            p.gamma = opts.gamma;
            Ok(picard_solve(ev, phi, f, &p)?.trajectory)
        }
        Solver::March => {
            let mut m = MarchOptions::new(t, opts.step);
            m.local_tol = opts.tol;
            march_solve(ev, phi, f, &m)
        }
    }
}

/// `(T_tφ)(θ) = φ(t+θ) + ∫₀ᵗ S(t+θ−τ) f(u_φ(τ)) dτ`, sampled on `θ_grid`.
///
/// The integral uses the same product rule as the solver, so when `θ_grid`
/// consists of multiples of the step, `(T_tφ)(θ)` continues the discrete
/// solution exactly and the semigroup law holds up to solver tolerance.
pub fn semigroup_apply(
    ev: &RelaxationEvaluator,
    f: &Nonlinearity,
    phi: &HistoryFunction,
    t: f64,
    theta_grid: &[f64],
    opts: &SemigroupOptions,
) -> Result<HistoryFunction> {
    if t == 0.0 {
        return HistoryFunction::sampled(theta_grid.to_vec(), phi.eval_many(theta_grid)?);
    }
    let n = intervals(t, opts.step)?;
    let u = solve_on(ev, f, phi, t, opts)?;
    let forces: Vec<Field> = crate::par::map_slice(u.fields(), |v| f.apply(v));
    let pairs = pair_sums(&forces);
    let grid = *u.field(0).grid();
    let modes = grid.mode_table();
    let h = opts.step;
    let fields = crate::par::try_map_slice(theta_grid, |&theta| {
        let shifted = phi.eval(t + theta)?;
        let mut acc: Vec<Complex64> = shifted.spectrum().to_vec();
        for (j, pair) in pairs.iter().enumerate().take(n) {
            let lag = t + theta - (j as f64 + 0.5) * h;
            let s = ev.s_many(lag, &modes.mus)?;
            for ((a, p), &k) in acc.iter_mut().zip(pair).zip(&modes.index) {
                *a += 0.5 * h * s[k as usize] * p;
            }
        }
        Field::from_spectrum(grid, acc)
    })?;
    HistoryFunction::sampled(theta_grid.to_vec(), fields)
}
