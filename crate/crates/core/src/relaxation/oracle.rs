use statrs::function::gamma::gamma;

use crate::kernel::{CombinedKernel, KernelSpec};
use crate::quad::{exp_g1, exp_g2, tanh_sinh, GaussLegendre};
use crate::{Error, Result};

/// Time nodes for the product-integration oracle.
///
/// `Graded` places nodes at `t₀(e^{jc} − 1)`, which resolves the initial
/// layer of weakly singular kernels; halving `c` and doubling `count` nests
/// the old nodes inside the new ones, so both variants support Richardson
/// extrapolation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeGrid {
    Uniform { step: f64, count: usize },
    Graded { t0: f64, c: f64, count: usize },
}

impl TimeGrid {
    pub fn uniform(step: f64, count: usize) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) || count == 0 {
            return Err(Error::Parameter(format!(
                "uniform grid needs step > 0 and count ≥ 1, got {step}, {count}"
            )));
        }
        Ok(Self::Uniform { step, count })
    }

    pub fn graded(t0: f64, c: f64, count: usize) -> Result<Self> {
        if !(t0 > 0.0 && c > 0.0 && t0.is_finite() && c.is_finite()) || count == 0 {
            return Err(Error::Parameter(format!(
                "graded grid needs t0, c > 0 and count ≥ 1, got {t0}, {c}, {count}"
            )));
        }
        Ok(Self::Graded { t0, c, count })
    }

    /// Number of nodes, including `t = 0`.
    pub fn len(&self) -> usize {
        match *self {
            Self::Uniform { count, .. } | Self::Graded { count, .. } => count + 1,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nodes(&self) -> Vec<f64> {
        match *self {
            Self::Uniform { step, count } => (0..=count).map(|j| j as f64 * step).collect(),
            Self::Graded { t0, c, count } => {
                (0..=count).map(|j| t0 * (j as f64 * c).exp_m1()).collect()
            }
        }
    }

    /// The grid with every interval bisected in the grid's own coordinate;
    /// node `i` of `self` is node `2i` of the result.
    pub fn refine(&self) -> Self {
        match *self {
            Self::Uniform { step, count } => Self::Uniform {
                step: step / 2.0,
                count: 2 * count,
            },
            Self::Graded { t0, c, count } => Self::Graded {
                t0,
                c: c / 2.0,
                count: 2 * count,
            },
        }
    }
}

/// A graded grid reaching `t_end` whose first node sits where
/// `μ (1∗m)(t)` is about `10⁻⁶`.
pub fn graded_grid_for(kernel: &CombinedKernel, mu: f64, t_end: f64, c: f64) -> Result<TimeGrid> {
    if !(t_end > 0.0) {
        return Err(Error::Parameter(format!("t_end must be positive, got {t_end}")));
    }
    let cap = 1e-3 * t_end;
    let target = |t: f64| mu * kernel.one_conv(t) - 1e-6;
    let t0 = if mu == 0.0 || target(cap) <= 0.0 {
        cap
    } else {
        // bisection in log t
        let (mut lo, mut hi) = (-700.0f64, cap.ln());
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if target(mid.exp()) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo.exp()
    };
    let count = ((t_end / t0).ln_1p() / c).ceil() as usize;
    TimeGrid::graded(t0, c, count.max(1))
}

/// Piece moments of `k` against the two linear hat halves on `[a, b]`,
/// evaluated at `x = b + d`, `w = b − a`.
enum Moments<'a> {
    Zero,
    Power { order: f64, coef: f64, gl8: GaussLegendre, gl4: GaussLegendre },
    Exp { weights: &'a [f64], rates: &'a [f64] },
    General { kernel: &'a KernelSpec, gl8: GaussLegendre },
}

impl<'a> Moments<'a> {
    fn new(kernel: &'a KernelSpec) -> Self {
        match kernel {
            KernelSpec::Zero => Self::Zero,
            KernelSpec::Fractional { order, weight } => Self::Power {
                order: *order,
                coef: weight / gamma(1.0 - order),
                gl8: GaussLegendre::new(8),
                gl4: GaussLegendre::new(4),
            },
            KernelSpec::ExpSum { weights, rates } => Self::Exp { weights, rates },
            KernelSpec::ClosedForm { .. } => Self::General {
                kernel,
                gl8: GaussLegendre::new(8),
            },
        }
    }

    /// `(∫ k(u)(u−d)/w du, ∫ k(u)(d+w−u)/w du)` over `u ∈ [d, d+w]`, i.e. the
    /// weights of the left (falling) and right (rising) node of the piece.
    fn piece(&self, d: f64, w: f64) -> (f64, f64) {
        match self {
            Self::Zero => (0.0, 0.0),
            Self::Power { order, coef, gl8, gl4 } => {
                if d <= 4.0 * w {
                    let a = *order;
                    let k1 = |u: f64| coef * u.powf(1.0 - a) / (1.0 - a);
                    let k2 = |u: f64| coef * u.powf(2.0 - a) / ((1.0 - a) * (2.0 - a));
                    let mean = (k2(d + w) - k2(d)) / w;
                    (k1(d + w) - mean, mean - k1(d))
                } else {
                    let rule = if d > 16.0 * w { gl4 } else { gl8 };
                    let a = *order;
                    let fall = rule.integrate(d, d + w, |u| coef * u.powf(-a) * (u - d) / w);
                    let rise = rule.integrate(d, d + w, |u| coef * u.powf(-a) * (d + w - u) / w);
                    (fall, rise)
                }
            }
            Self::Exp { weights, rates } => {
                let mut fall = 0.0;
                let mut rise = 0.0;
                for (wt, r) in weights.iter().zip(rates.iter()) {
                    let z = r * w;
                    let scale = wt * (-r * d).exp() * w;
                    let g2 = exp_g2(z);
                    fall += scale * g2;
                    rise += scale * (exp_g1(z) - g2);
                }
                (fall, rise)
            }
            Self::General { kernel, gl8 } => {
                let f = |u: f64| kernel.eval(u) * (u - d) / w;
                let r = |u: f64| kernel.eval(u) * (d + w - u) / w;
                if d <= w {
                    (tanh_sinh(d, d + w, 1e-13, f), tanh_sinh(d, d + w, 1e-13, r))
                } else {
                    (gl8.integrate(d, d + w, f), gl8.integrate(d, d + w, r))
                }
            }
        }
    }
}

/// Solves `s + μ (m∗s) = 1` on `grid` by product integration with
/// piecewise-linear `s`.
///
/// The constant part of `m` is integrated exactly (trapezoid weights); `k`
/// contributes exact moments for exponential and power kernels near the
/// diagonal and Gauss–Legendre moments elsewhere. Errors with
/// [`Error::StepTooCoarse`] when the one-step difference recursion stops
/// being diagonally dominant, `μ|W_{n,n−1} − W_{n−1,n−1}| > 1 + μW_{n,n}`.
pub fn s_volterra_oracle(kernel: &CombinedKernel, mu: f64, grid: &TimeGrid) -> Result<Vec<f64>> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::Domain(format!("μ must be ≥ 0, got {mu}")));
    }
    let t = grid.nodes();
    let n = t.len();
    let mut s = vec![1.0; n];
    if mu == 0.0 {
        return Ok(s);
    }
    let moments = Moments::new(kernel.base());
    let mut prev_diag = 0.0;
    for i in 1..n {
        let x = t[i];
        let mut hist = 0.0;
        let mut diag = 0.0;
        let mut sub = 0.0;
        for p in 0..i {
            let w = t[p + 1] - t[p];
            let d = x - t[p + 1];
            let (kf, kr) = moments.piece(d, w);
            let fall = 0.5 * w + kf;
            let rise = 0.5 * w + kr;
            hist += fall * s[p];
            if p + 1 < i {
                hist += rise * s[p + 1];
            } else {
                diag = rise;
            }
            if p + 1 == i {
                sub += fall;
            } else if p + 2 == i {
                sub += rise;
            }
        }
        let coupling = mu * (sub - prev_diag).abs();
        if coupling > 1.0 + mu * diag {
            return Err(Error::StepTooCoarse {
                node: i,
                diag: 1.0 + mu * diag,
                offdiag: coupling,
            });
        }
        s[i] = (1.0 - mu * hist) / (1.0 + mu * diag);
        prev_diag = diag;
    }
    Ok(s)
}

/// Richardson-extrapolated oracle on the nodes of `grid`, combining `grid`
/// with its refinement: `(4 s_{h/2} − s_h)/3`.
pub fn s_volterra_reference(kernel: &CombinedKernel, mu: f64, grid: &TimeGrid) -> Result<Vec<f64>> {
    let coarse = s_volterra_oracle(kernel, mu, grid)?;
    let fine = s_volterra_oracle(kernel, mu, &grid.refine())?;
    Ok(coarse
        .iter()
        .enumerate()
        .map(|(i, c)| (4.0 * fine[2 * i] - c) / 3.0)
        .collect())
}

/// [`s_volterra_oracle`] for several `μ` at once, in parallel when enabled.
pub fn s_volterra_oracle_many(
    kernel: &CombinedKernel,
    mus: &[f64],
    grid: &TimeGrid,
) -> Result<Vec<Vec<f64>>> {
    crate::par::try_map_slice(mus, |&mu| s_volterra_oracle(kernel, mu, grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    #[test]
    fn heat_is_second_order() {
        let k = CombinedKernel::new(KernelSpec::zero());
        let err = |h: f64| {
            let g = TimeGrid::uniform(h, (1.0 / h).round() as usize).unwrap();
            let s = s_volterra_oracle(&k, 2.0, &g).unwrap();
            g.nodes()
                .iter()
                .zip(&s)
                .map(|(t, v)| (v - (-2.0 * t).exp()).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(0.02), err(0.01));
        assert!(e1 < 1e-3);
        assert!((e1 / e2 - 4.0).abs() < 0.2, "ratio {}", e1 / e2);
    }

    #[test]
    fn mu_zero_is_identically_one() {
        let k = CombinedKernel::new(KernelSpec::fractional(0.5, 1.0).unwrap());
        let g = TimeGrid::uniform(0.1, 10).unwrap();
        assert!(s_volterra_oracle(&k, 0.0, &g).unwrap().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn exp_sum_matches_augmented_system() {
        let k = CombinedKernel::new(KernelSpec::exp_sum(vec![1.0], vec![1.0]).unwrap());
        let g = TimeGrid::uniform(0.01, 200).unwrap();
        let s = s_volterra_reference(&k, 1.0, &g).unwrap();
        assert_relative_eq!(s[50], 0.423_776_958_922_795, max_relative = 1e-7);
        assert_relative_eq!(s[100], 0.241_427_723_978_311_36, max_relative = 1e-7);
        assert_relative_eq!(s[200], 0.132_602_978_798_839_98, max_relative = 1e-7);
    }

    #[test]
    fn fractional_graded_reference_hits_closed_form() {
        let k = CombinedKernel::new(KernelSpec::fractional(0.5, 1.0).unwrap());
        let g = graded_grid_for(&k, 1.0, 5.0, 0.05).unwrap();
        let s = s_volterra_reference(&k, 1.0, &g).unwrap();
        let nodes = g.nodes();
        // compare against the contour evaluation, itself checked against a closed form
        let ev = crate::relaxation::RelaxationEvaluator::new(k.base().clone());
        for (t, v) in nodes.iter().zip(&s).filter(|(t, _)| **t >= 1e-2 && **t <= 5.0) {
            assert_relative_eq!(*v, ev.s(*t, 1.0).unwrap(), max_relative = 1e-5);
        }
    }

    #[test]
    fn graded_refinement_nests() {
        let g = TimeGrid::graded(1e-4, 0.1, 50).unwrap();
        let (a, b) = (g.nodes(), g.refine().nodes());
        for (i, t) in a.iter().enumerate() {
            assert_relative_eq!(*t, b[2 * i], max_relative = 1e-14);
        }
    }

    #[test]
    fn increasing_kernel_trips_step_check() {
        let k = CombinedKernel::new(KernelSpec::closed_form(
            "ramp",
            |t: f64| 1e4 * t * t,
            |l: Complex64| 2e4 / (l * l * l),
        ));
        let g = TimeGrid::uniform(0.5, 8).unwrap();
        assert!(matches!(
            s_volterra_oracle(&k, 1.0, &g),
            Err(Error::StepTooCoarse { .. })
        ));
    }
}
