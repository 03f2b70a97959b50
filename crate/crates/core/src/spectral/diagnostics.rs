use serde::Serialize;

use crate::relaxation::RelaxationEvaluator;
use crate::{Error, Result};

/// Options for [`resolvent_diagnostics_with`].
#[derive(Debug, Clone)]
pub struct DiagnosticsOptions {
    /// Decades of `μ` sampled below `μ_max`.
    pub mu_decades: f64,
    pub mu_points_per_decade: usize,
    /// Golden-section iterations around the best grid point.
    pub refine_iterations: usize,
    /// Relative step of the central difference for `∂ₜs`.
    pub derivative_step: f64,
}

impl Default for DiagnosticsOptions {
    fn default() -> Self {
        Self {
            mu_decades: 8.0,
            mu_points_per_decade: 16,
            refine_iterations: 40,
            derivative_step: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HolderPoint {
    pub t: f64,
    pub theta: f64,
    pub sup_diff: f64,
    pub held_out: bool,
}

/// `sup_μ |s(t+θ, μ) − s(t, μ)| ≤ C₁ (θ/t)^α`.
#[derive(Debug, Clone, Serialize)]
pub struct HolderFit {
    pub c1: f64,
    pub alpha: f64,
    pub t_window: (f64, f64),
    pub theta_window: (f64, f64),
    pub points: Vec<HolderPoint>,
    pub held_out_total: usize,
    pub held_out_satisfied: usize,
}

impl HolderFit {
    pub fn held_out_fraction(&self) -> f64 {
        if self.held_out_total == 0 {
            1.0
        } else {
            self.held_out_satisfied as f64 / self.held_out_total as f64
        }
    }

    pub fn bound(&self, t: f64, theta: f64) -> f64 {
        self.c1 * (theta / t).powf(self.alpha)
    }
}

/// A constant `C` fitted as the envelope `max_t g(t)` of a scaled quantity.
#[derive(Debug, Clone, Serialize)]
pub struct ConstantFit {
    pub constant: f64,
    pub t_window: (f64, f64),
    /// `(t, g(t))` samples.
    pub samples: Vec<(f64, f64)>,
}

impl ConstantFit {
    fn from_samples(samples: Vec<(f64, f64)>) -> Self {
        let constant = samples.iter().map(|s| s.1).fold(0.0, f64::max);
        let t_window = window(samples.iter().map(|s| s.0));
        Self {
            constant,
            t_window,
            samples,
        }
    }

    /// `min_t g(t) / C`; 1 means the scaled quantity is exactly constant.
    pub fn flatness(&self) -> f64 {
        let min = self.samples.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
        min / self.constant
    }
}

/// Symbol-level estimates of the resolvent bounds.
#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsReport {
    pub mu_max: f64,
    pub holder: HolderFit,
    /// `t · sup_μ |∂ₜ s(t, μ)|`, fitted `C₃`.
    pub derivative: ConstantFit,
    /// `sup_μ √μ s(t, μ) · ((1∗m)(t))^{1/2}`, fitted `C₅`.
    pub gradient: ConstantFit,
}

fn window(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
}

/// `sup_{μ ∈ mus} g(μ)` with golden-section refinement in `log μ` around the
/// best sample; returns `(sup, argsup)`.
pub fn sup_over_mu<G>(mus: &[f64], iterations: usize, g: G) -> Result<(f64, f64)>
where
    G: Fn(f64) -> Result<f64> + Sync + Send,
{
    let values = crate::par::try_map_slice(mus, |&mu| g(mu))?;
    let (mut best_i, mut best) = (0, f64::NEG_INFINITY);
    for (i, &v) in values.iter().enumerate() {
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let mut arg = mus[best_i];
    if iterations == 0 || mus.len() < 3 {
        return Ok((best, arg));
    }
    let lo_i = best_i.saturating_sub(1);
    let hi_i = (best_i + 1).min(mus.len() - 1);
    let (mut a, mut b) = (mus[lo_i].ln(), mus[hi_i].ln());
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let mut f1 = g(x1.exp())?;
    let mut f2 = g(x2.exp())?;
    for _ in 0..iterations {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = g(x1.exp())?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = g(x2.exp())?;
        }
    }
    for (x, f) in [(x1, f1), (x2, f2)] {
        if f > best {
            best = f;
            arg = x.exp();
        }
    }
    Ok((best, arg))
}

/// [`resolvent_diagnostics_with`] under default options.
pub fn resolvent_diagnostics(
    ev: &RelaxationEvaluator,
    t_grid: &[f64],
    theta_grid: &[f64],
    mu_max: f64,
) -> Result<DiagnosticsReport> {
    resolvent_diagnostics_with(ev, t_grid, theta_grid, mu_max, &DiagnosticsOptions::default())
}

/// Hölder, derivative and gradient constants of `s(t, ·)` over
/// `μ ∈ (0, μ_max]`.
///
/// The Hölder exponent comes from a least-squares fit of
/// `log sup_μ|s(t+θ)−s(t)|` against `log(θ/t)` on even-indexed `t`; the
/// prefactor `C₁` is the envelope over those points, and odd-indexed `t`
/// are held out to test the bound.
pub fn resolvent_diagnostics_with(
    ev: &RelaxationEvaluator,
    t_grid: &[f64],
    theta_grid: &[f64],
    mu_max: f64,
    opts: &DiagnosticsOptions,
) -> Result<DiagnosticsReport> {
    if t_grid.iter().chain(theta_grid).any(|x| !(*x > 0.0)) || !(mu_max > 0.0) {
        return Err(Error::Parameter("diagnostic grids and μ_max must be positive".into()));
    }
    let k = (opts.mu_decades * opts.mu_points_per_decade as f64).round() as usize;
    let mus: Vec<f64> = (0..=k)
        .map(|i| mu_max * 10f64.powf(-opts.mu_decades * (1.0 - i as f64 / k as f64)))
        .collect();
    let iters = opts.refine_iterations;

    let mut points = Vec::with_capacity(t_grid.len() * theta_grid.len());
    for (ti, &t) in t_grid.iter().enumerate() {
        for &theta in theta_grid {
            let (sup, _) = sup_over_mu(&mus, iters, |mu| {
                Ok((ev.s(t + theta, mu)? - ev.s(t, mu)?).abs())
            })?;
            points.push(HolderPoint {
                t,
                theta,
                sup_diff: sup,
                held_out: ti % 2 == 1,
            });
        }
    }
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| !p.held_out && p.sup_diff > 1e-13)
        .map(|p| ((p.theta / p.t).ln(), p.sup_diff.ln()))
        .collect();
    if usable.len() < 4 {
        return Err(Error::RegressionDegenerate(usable.len()));
    }
    let (alpha, _) = least_squares(&usable);
    let c1 = points
        .iter()
        .filter(|p| !p.held_out)
        .map(|p| p.sup_diff / (p.theta / p.t).powf(alpha))
        .fold(0.0, f64::max);
    let held: Vec<&HolderPoint> = points.iter().filter(|p| p.held_out).collect();
    let satisfied = held
        .iter()
        .filter(|p| p.sup_diff <= c1 * (p.theta / p.t).powf(alpha) * (1.0 + 1e-9))
        .count();
    let holder = HolderFit {
        c1,
        alpha,
        t_window: window(t_grid.iter().copied()),
        theta_window: window(theta_grid.iter().copied()),
        held_out_total: held.len(),
        held_out_satisfied: satisfied,
        points,
    };

    let mut deriv = Vec::with_capacity(t_grid.len());
    let mut grad = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let dt = opts.derivative_step * t;
        let (d, _) = sup_over_mu(&mus, iters, |mu| Ok(ev.ds_dt(t, mu, dt)?.abs()))?;
        deriv.push((t, t * d));
        let (g, _) = sup_over_mu(&mus, iters, |mu| Ok(mu.sqrt() * ev.s(t, mu)?))?;
        grad.push((t, g * ev.kernel().one_conv(t).sqrt()));
    }

    Ok(DiagnosticsReport {
        mu_max,
        holder,
        derivative: ConstantFit::from_samples(deriv),
        gradient: ConstantFit::from_samples(grad),
    })
}

/// Ordinary least squares `y = slope·x + intercept`.
pub(crate) fn least_squares(xy: &[(f64, f64)]) -> (f64, f64) {
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{log_space, KernelSpec};
    use std::f64::consts::E;

    #[test]
    fn golden_section_finds_interior_maximum() {
        let mus = log_space(1e-3, 1e3, 25);
        let (sup, arg) = sup_over_mu(&mus, 60, |mu| Ok(mu * (-mu * 2.0).exp())).unwrap();
        assert!((sup - 1.0 / (2.0 * E)).abs() < 1e-12);
        assert!((arg - 0.5).abs() < 1e-5);
    }

    #[test]
    fn heat_constants() {
        let ev = RelaxationEvaluator::new(KernelSpec::zero());
        let ts = log_space(0.1, 10.0, 9);
        let thetas = log_space(0.01, 1.0, 5);
        let rep = resolvent_diagnostics(&ev, &ts, &thetas, 1e3).unwrap();
        assert!((rep.derivative.constant * E - 1.0).abs() < 1e-4);
        let c5 = (2.0 * E).powf(-0.5);
        assert!((rep.gradient.constant / c5 - 1.0).abs() < 1e-6);
        assert!(rep.gradient.flatness() > 0.999);
    }

    #[test]
    fn too_few_points_is_degenerate() {
        let ev = RelaxationEvaluator::new(KernelSpec::zero());
        let r = resolvent_diagnostics(&ev, &[1.0], &[0.1, 0.2], 10.0);
        assert!(matches!(r, Err(Error::RegressionDegenerate(2))));
    }
}
