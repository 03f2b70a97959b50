use num_complex::Complex64;
use serde::Serialize;

use super::duhamel::{pair_sums, DuhamelTable};
use super::history::HistoryFunction;
use super::nonlinearity::Nonlinearity;
use super::norms::bielecki_norm;
use super::trajectory::Trajectory;
use crate::relaxation::RelaxationEvaluator;
use crate::spectral::Field;
use crate::{Error, Result};

/// Controls for [`picard_solve`].
#[derive(Debug, Clone)]
pub struct PicardOptions {
    pub horizon: f64,
    pub step: f64,
    /// Bielecki weight; defaults to `2 L_f`.
    pub gamma: Option<f64>,
    /// Stop when the Bielecki increment is below `tol · max(1, ‖u‖_γ)`.
    pub tol: f64,
    pub max_iter: usize,
}

impl PicardOptions {
    pub fn new(horizon: f64, step: f64) -> Self {
        Self {
            horizon,
            step,
            gamma: None,
            tol: 1e-12,
            max_iter: 200,
        }
    }

    pub fn gamma(mut self, gamma: f64) -> Self {
        self.gamma = Some(gamma);
        self
    }

    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

/// One Picard iteration: the Bielecki norm of `u_{k+1} − u_k` and its ratio
/// to the previous increment.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct IterationRecord {
    pub index: usize,
    pub increment: f64,
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct PicardRun {
    pub trajectory: Trajectory,
    pub iterations: Vec<IterationRecord>,
    pub gamma: f64,
    pub converged: bool,
    /// Largest difference quotient of `f` over values met by the solution.
    pub sampled_lipschitz: f64,
    /// Set when `sampled_lipschitz > 1.01 L_f`; growth and dependence bounds
    /// are then not certified.
    pub lipschitz_warning: bool,
}

impl PicardRun {
    /// Largest contraction ratio, ignoring the first measured one.
    pub fn max_ratio_after_first(&self) -> Option<f64> {
        self.iterations
            .iter()
            .filter_map(|r| r.ratio)
            .skip(1)
            .reduce(f64::max)
    }
}

pub(crate) fn intervals(horizon: f64, step: f64) -> Result<usize> {
    if !(horizon > 0.0 && step > 0.0) {
        return Err(Error::Parameter(format!(
            "horizon and step must be positive, got T = {horizon}, h = {step}"
        )));
    }
    let n = (horizon / step).round();
    if (n * step - horizon).abs() > 1e-9 * horizon || n < 1.0 {
        return Err(Error::Parameter(format!("step {step} does not divide horizon {horizon}")));
    }
    Ok(n as usize)
}

/// Fixed point of `Φ(u)(t) = φ(t) + ∫₀ᵗ S(t−s) f(u(s)) ds` on the grid
/// `t_n = n·h`, iterated from `u⁰ = φ`.
///
/// Increments are measured in the Bielecki norm with weight `γ`, for which
/// `Φ` contracts with factor `L_f/γ`. Two consecutive increment ratios above
/// one abort with [`Error::NonContraction`].
pub fn picard_solve(
    ev: &RelaxationEvaluator,
    phi: &HistoryFunction,
    f: &Nonlinearity,
    opts: &PicardOptions,
) -> Result<PicardRun> {
    let n = intervals(opts.horizon, opts.step)?;
    let gamma = match (opts.gamma, f.lipschitz()) {
        (Some(g), Some(l)) if g <= l => {
            return Err(Error::Parameter(format!(
                "Bielecki weight γ = {g} must exceed L_f = {l}"
            )))
        }
        (Some(g), _) if g > 0.0 => g,
        (Some(g), _) => {
            return Err(Error::Parameter(format!("Bielecki weight must be positive, got {g}")))
        }
        (None, Some(l)) => (2.0 * l).max(f64::MIN_POSITIVE),
        (None, None) => {
            return Err(Error::Parameter(
                "no Lipschitz constant declared; pass γ explicitly".into(),
            ))
        }
    };
    let h = opts.step;
    let times: Vec<f64> = (0..=n).map(|k| k as f64 * h).collect();
    let phis = phi.eval_many(&times)?;
    let grid = *phis[0].grid();
    let table = DuhamelTable::new(ev, &grid, h, n)?;

    let mut u = Trajectory::new(h, phis.clone())?;
    let mut iterations = Vec::new();
    let mut converged = false;
    let mut prev: Option<f64> = None;
    let mut above_one = 0;
    for k in 1..=opts.max_iter {
        let forces: Vec<Field> = crate::par::map_slice(u.fields(), |v| f.apply(v));
        let pairs = pair_sums(&forces);
        let next: Vec<Field> = crate::par::try_map_range(n + 1, |e| {
            let conv = Field::from_spectrum(grid, table.convolve_at(&pairs, e))?;
            phis[e].add(&conv)
        })?;
        let next = Trajectory::new(h, next)?;
        let increment = bielecki_norm(&next.diff(&u)?, gamma);
        let ratio = prev.filter(|p| *p > 0.0).map(|p| increment / p);
        iterations.push(IterationRecord {
            index: k,
            increment,
            ratio,
        });
        log::debug!("picard iteration {k}: increment {increment:e}, ratio {ratio:?}");
        above_one = if ratio.is_some_and(|r| r > 1.0) { above_one + 1 } else { 0 };
        if above_one >= 2 {
            return Err(Error::NonContraction(
                iterations.iter().filter_map(|r| r.ratio).collect(),
            ));
        }
        let scale = bielecki_norm(&next, gamma).max(1.0);
        u = next;
        if increment <= opts.tol * scale {
            converged = true;
            break;
        }
        prev = Some(increment);
    }
    if !converged {
        log::warn!("picard iteration stopped after {} iterations", opts.max_iter);
    }

    let (sampled_lipschitz, lipschitz_warning) = lipschitz_audit(f, &u);
    Ok(PicardRun {
        trajectory: u,
        iterations,
        gamma,
        converged,
        sampled_lipschitz,
        lipschitz_warning,
    })
}

fn lipschitz_audit(f: &Nonlinearity, u: &Trajectory) -> (f64, bool) {
    if f.truncation().is_some() {
        return (f64::NAN, false);
    }
    let mut values: Vec<f64> = u.fields().iter().flat_map(|v| v.values().iter().copied()).collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let sampled = f.sampled_lipschitz(&values);
    let warn = f.lipschitz().is_some_and(|l| sampled > 1.01 * l);
    if warn {
        log::warn!("sampled Lipschitz constant {sampled} exceeds declared {:?}", f.lipschitz());
    }
    (sampled, warn)
}

/// Controls for [`march_solve`].
#[derive(Debug, Clone)]
pub struct MarchOptions {
    pub horizon: f64,
    pub step: f64,
    pub local_tol: f64,
    pub max_local_iter: usize,
}

impl MarchOptions {
    pub fn new(horizon: f64, step: f64) -> Self {
        Self {
            horizon,
            step,
            local_tol: 1e-13,
            max_local_iter: 200,
        }
    }
}

/// Solves the same discrete equations as [`picard_solve`] node by node.
///
/// At node `n` everything but the newest force is known, leaving the local
/// problem `u_n = b_n + (h/2) S(h/2) f(u_n)`, which is solved by fixed-point
/// iteration (contractive when `h L/2 < 1` for the local Lipschitz constant
/// `L`). Cost is linear in the number of Picard sweeps it replaces, which
/// makes it the solver of choice for long or stiff runs.
pub fn march_solve(
    ev: &RelaxationEvaluator,
    phi: &HistoryFunction,
    f: &Nonlinearity,
    opts: &MarchOptions,
) -> Result<Trajectory> {
    let n = intervals(opts.horizon, opts.step)?;
    let h = opts.step;
    let times: Vec<f64> = (0..=n).map(|k| k as f64 * h).collect();
    let phis = phi.eval_many(&times)?;
    let grid = *phis[0].grid();
    let table = DuhamelTable::new(ev, &grid, h, n)?;
    let first_row = table.row(1).to_vec();
    let index = table.modes().index.clone();
    let half = 0.5 * h;

    let mut fields = Vec::with_capacity(n + 1);
    fields.push(phis[0].clone());
    let mut force_spec: Vec<Complex64> = f.apply(&phis[0]).spectrum().to_vec();
    let mut pairs: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    for e in 1..=n {
        // known part: φ_n, completed intervals, and the old end of the last one
        let mut base = table.convolve_at(&pairs, e);
        for ((b, p), (fs, &k)) in base
            .iter_mut()
            .zip(phis[e].spectrum())
            .zip(force_spec.iter().zip(&index))
        {
            *b += p + half * first_row[k as usize] * fs;
        }
        let mut v = fields[e - 1].clone();
        let mut done = false;
        let mut gaps = Vec::new();
        for _ in 0..opts.max_local_iter {
            let fv = f.apply(&v);
            let coeffs: Vec<Complex64> = base
                .iter()
                .zip(fv.spectrum())
                .zip(&index)
                .map(|((b, c), &k)| b + half * first_row[k as usize] * c)
                .collect();
            let w = Field::from_spectrum(grid, coeffs)?;
            let gap = w.l2_dist(&v)?;
            let scale = w.l2().max(1.0);
            v = w;
            if !gap.is_finite() {
                break;
            }
            gaps.push(gap);
            if gap <= opts.local_tol * scale {
                done = true;
                break;
            }
            // same abort rule as the global iteration
            let n = gaps.len();
            if n >= 3 && gaps[n - 1] > gaps[n - 2] && gaps[n - 2] > gaps[n - 3] {
                break;
            }
        }
        if !done {
            let ratios = gaps.windows(2).map(|g| g[1] / g[0]).collect();
            log::error!("local fixed point failed at node {e}; step {h} too large");
            return Err(Error::NonContraction(ratios));
        }
        let new_force = f.apply(&v).spectrum().to_vec();
        pairs.push(force_spec.iter().zip(&new_force).map(|(a, b)| a + b).collect());
        force_spec = new_force;
        fields.push(v);
    }
    Trajectory::new(h, fields)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelSpec;
    use crate::spectral::TorusGrid;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn mode_history(ev: &Arc<RelaxationEvaluator>) -> (HistoryFunction, TorusGrid) {
        let g = TorusGrid::new(1, 16, 2.0 * PI).unwrap();
        let u0 = Field::from_fn(g, |x, _| x.sin());
        (HistoryFunction::resolvent(ev.clone(), u0), g)
    }

    #[test]
    fn zero_forcing_returns_history_in_one_iteration() {
        let ev = Arc::new(RelaxationEvaluator::new(KernelSpec::fractional(0.5, 1.0).unwrap()));
        let (phi, _) = mode_history(&ev);
        let run = picard_solve(&ev, &phi, &Nonlinearity::zero(), &PicardOptions::new(1.0, 0.1).gamma(1.0))
            .unwrap();
        assert_eq!(run.iterations.len(), 1);
        assert_eq!(run.iterations[0].increment, 0.0);
        let phis = phi.eval(1.0).unwrap();
        assert_eq!(run.trajectory.last(), &phis);
    }

    #[test]
    fn linear_heat_closed_form() {
        let ev = Arc::new(RelaxationEvaluator::new(KernelSpec::zero()));
        let (phi, g) = mode_history(&ev);
        let c = 0.4;
        let run = picard_solve(&ev, &phi, &Nonlinearity::linear(c), &PicardOptions::new(1.0, 0.01)).unwrap();
        assert!(run.converged);
        let want = Field::from_fn(g, |x, _| ((c - 1.0) * 1.0f64).exp() * x.sin());
        let err = run.trajectory.last().l2_dist(&want).unwrap() / want.l2();
        assert!(err < 1e-4, "{err:e}");
        assert!(run.max_ratio_after_first().unwrap() <= 0.55);
    }

    #[test]
    fn gamma_must_exceed_lipschitz() {
        let ev = Arc::new(RelaxationEvaluator::new(KernelSpec::zero()));
        let (phi, _) = mode_history(&ev);
        let opts = PicardOptions::new(1.0, 0.1).gamma(0.5);
        assert!(matches!(
            picard_solve(&ev, &phi, &Nonlinearity::linear(1.0), &opts),
            Err(Error::Parameter(_))
        ));
        assert!(picard_solve(&ev, &phi, &Nonlinearity::cubic(), &PicardOptions::new(1.0, 0.1)).is_err());
        assert!(picard_solve(&ev, &phi, &Nonlinearity::zero(), &PicardOptions::new(1.0, 0.3).gamma(1.0)).is_err());
    }

    #[test]
    fn overshooting_gamma_is_detected() {
        // γ far below the true Lipschitz constant of f: the map expands
        let ev = Arc::new(RelaxationEvaluator::new(KernelSpec::zero()));
        let (phi, _) = mode_history(&ev);
        let f = Nonlinearity::new("steep", |u| 50.0 * u).unwrap();
        let r = picard_solve(&ev, &phi, &f, &PicardOptions::new(2.0, 0.05).gamma(1.0));
        assert!(matches!(r, Err(Error::NonContraction(_))), "{r:?}");
    }

    #[test]
    fn march_agrees_with_picard() {
        let ev = Arc::new(RelaxationEvaluator::new(KernelSpec::fractional(0.4, 0.5).unwrap()));
        let (phi, _) = mode_history(&ev);
        let f = Nonlinearity::sine(1.5);
        let run = picard_solve(&ev, &phi, &f, &PicardOptions::new(1.0, 0.02)).unwrap();
        let marched = march_solve(&ev, &phi, &f, &MarchOptions::new(1.0, 0.02)).unwrap();
        let d = bielecki_norm(&run.trajectory.diff(&marched).unwrap(), 0.0);
        assert!(d < 1e-10, "{d:e}");
    }
}
