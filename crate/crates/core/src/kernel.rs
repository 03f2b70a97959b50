//! Completely monotone memory kernels `k`, the combined kernel `m = 1 + k`
//! and sum-of-exponentials surrogates.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::nnls::nnls;
use crate::quad::{exp_phi2, tanh_sinh};
use crate::{Error, Result};

type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type LaplaceFn = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;

/// A nonnegative memory kernel `k` with an analytically evaluable Laplace
/// transform.
///
/// The fractional variant uses the Riemann–Liouville normalisation
/// `k(t) = k₀ t^{−α}/Γ(1−α)`, so that `k̂(λ) = k₀ λ^{α−1}`.
#[derive(Clone)]
pub enum KernelSpec {
    Zero,
    Fractional { order: f64, weight: f64 },
    ExpSum { weights: Vec<f64>, rates: Vec<f64> },
    ClosedForm {
        label: String,
        time: TimeFn,
        laplace: LaplaceFn,
    },
}

impl fmt::Debug for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "Zero"),
            Self::Fractional { order, weight } => {
                write!(f, "Fractional {{ order: {order}, weight: {weight} }}")
            }
            Self::ExpSum { weights, rates } => {
                write!(f, "ExpSum {{ weights: {weights:?}, rates: {rates:?} }}")
            }
            Self::ClosedForm { label, .. } => write!(f, "ClosedForm({label})"),
        }
    }
}

impl KernelSpec {
    pub fn zero() -> Self {
        Self::Zero
    }

    pub fn fractional(order: f64, weight: f64) -> Result<Self> {
        if !(order > 0.0 && order < 1.0) {
            return Err(Error::Parameter(format!(
                "fractional order must lie in (0, 1), got {order}"
            )));
        }
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::Parameter(format!(
                "fractional weight must be positive, got {weight}"
            )));
        }
        Ok(Self::Fractional { order, weight })
    }

    pub fn exp_sum(weights: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        if weights.len() != rates.len() {
            return Err(Error::Parameter(format!(
                "{} weights but {} rates",
                weights.len(),
                rates.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::Parameter(format!("exp-sum weight {w} is not positive")));
        }
        if let Some(r) = rates.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
            return Err(Error::Parameter(format!("exp-sum rate {r} is not positive")));
        }
        Ok(Self::ExpSum { weights, rates })
    }

    pub fn closed_form<T, L>(label: impl Into<String>, time: T, laplace: L) -> Self
    where
        T: Fn(f64) -> f64 + Send + Sync + 'static,
        L: Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    {
        Self::ClosedForm {
            label: label.into(),
            time: Arc::new(time),
            laplace: Arc::new(laplace),
        }
    }

    /// Short human-readable tag, used in reports.
    pub fn describe(&self) -> String {
        match self {
            Self::Zero => "zero".into(),
            Self::Fractional { order, weight } => format!("fractional(order={order}, weight={weight})"),
            Self::ExpSum { weights, rates } => {
                format!("exp-sum(weights={weights:?}, rates={rates:?})")
            }
            Self::ClosedForm { label, .. } => format!("closed-form({label})"),
        }
    }

    /// `k(t)` for `t > 0`.
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Fractional { order, weight } => weight * t.powf(-order) / gamma(1.0 - order),
            Self::ExpSum { weights, rates } => weights
                .iter()
                .zip(rates)
                .map(|(w, r)| w * (-r * t).exp())
                .sum(),
            Self::ClosedForm { time, .. } => time(t),
        }
    }

    /// `k̂(λ)`.
    pub fn laplace(&self, lambda: Complex64) -> Complex64 {
        match self {
            Self::Zero => Complex64::new(0.0, 0.0),
            Self::Fractional { order, weight } => *weight * lambda.powf(order - 1.0),
            Self::ExpSum { weights, rates } => weights
                .iter()
                .zip(rates)
                .map(|(w, r)| *w / (lambda + *r))
                .sum(),
            Self::ClosedForm { laplace, .. } => laplace(lambda),
        }
    }

    /// `(1∗k)(t) = ∫₀ᵗ k`.
    pub fn integral(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            Self::Zero => 0.0,
            Self::Fractional { order, weight } => weight * t.powf(1.0 - order) / gamma(2.0 - order),
            Self::ExpSum { weights, rates } => weights
                .iter()
                .zip(rates)
                .map(|(w, r)| w * (-(-r * t).exp_m1()) / r)
                .sum(),
            Self::ClosedForm { time, .. } => tanh_sinh(0.0, t, 1e-12, |s| time(s)),
        }
    }

    /// `(1∗1∗k)(t)`.
    pub fn second_integral(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            Self::Zero => 0.0,
            Self::Fractional { order, weight } => weight * t.powf(2.0 - order) / gamma(3.0 - order),
            Self::ExpSum { weights, rates } => weights
                .iter()
                .zip(rates)
                .map(|(w, r)| {
                    let z = r * t;
                    w * t * t * exp_phi2(z)
                })
                .sum(),
            Self::ClosedForm { .. } => tanh_sinh(0.0, t, 1e-10, |s| (t - s) * self.eval(s)),
        }
    }

    /// True when `k` is unbounded at the origin.
    pub fn singular_at_zero(&self) -> bool {
        match self {
            Self::Fractional { .. } => true,
            Self::ClosedForm { time, .. } => !time(1e-300).is_finite() || time(1e-12) > 1e6,
            _ => false,
        }
    }

    /// Number of exponential terms; `None` for non-ExpSum kernels.
    pub fn term_count(&self) -> Option<usize> {
        match self {
            Self::Zero => Some(0),
            Self::ExpSum { weights, .. } => Some(weights.len()),
            _ => None,
        }
    }

    /// `(weights, rates)` of an exponential sum (the zero kernel is the empty sum).
    pub fn exp_terms(&self) -> Option<(&[f64], &[f64])> {
        match self {
            Self::Zero => Some((&[], &[])),
            Self::ExpSum { weights, rates } => Some((weights, rates)),
            _ => None,
        }
    }
}

/// The combined kernel `m = 1 + k` appearing in `u + m∗Au = u₀`.
#[derive(Debug, Clone)]
pub struct CombinedKernel {
    base: KernelSpec,
}

impl CombinedKernel {
    pub fn new(base: KernelSpec) -> Self {
        Self { base }
    }

    pub fn base(&self) -> &KernelSpec {
        &self.base
    }

    /// `m̂(λ) = 1/λ + k̂(λ)` for `Re λ > 0`.
    pub fn mhat(&self, lambda: Complex64) -> Result<Complex64> {
        if !(lambda.re > 0.0) {
            return Err(Error::Domain(format!("m̂ needs Re λ > 0, got λ = {lambda}")));
        }
        Ok(self.mhat_unchecked(lambda))
    }

    /// `m̂` without the half-plane check; the contour inversion evaluates it
    /// on the left half of a hyperbola where it is still analytic.
    pub(crate) fn mhat_unchecked(&self, lambda: Complex64) -> Complex64 {
        lambda.inv() + self.base.laplace(lambda)
    }

    /// The Bernstein function `φ^m(λ) = 1/m̂(λ)`.
    pub fn phi_m(&self, lambda: Complex64) -> Result<Complex64> {
        let mhat = self.mhat(lambda)?;
        let scale = lambda.inv().norm() + self.base.laplace(lambda).norm();
        if mhat.norm() <= 16.0 * f64::EPSILON * scale {
            return Err(Error::Singularity {
                lambda: lambda.to_string(),
                modulus: mhat.norm(),
            });
        }
        Ok(mhat.inv())
    }

    /// `(1∗m)(t) = t + (1∗k)(t)`.
    pub fn one_conv(&self, t: f64) -> f64 {
        t + self.base.integral(t)
    }
}

/// One sampled sign violation.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Violation {
    pub check: String,
    pub location: f64,
    pub value: f64,
}

/// Outcome of [`validate_cm`].
#[derive(Debug, Clone, Serialize)]
pub struct CmReport {
    pub depth: usize,
    pub positivity_ok: bool,
    /// `alternation_ok[n-1]` covers `(−1)ⁿ k⁽ⁿ⁾ ≥ 0`.
    pub alternation_ok: Vec<bool>,
    pub bernstein_ok: bool,
    pub violations: Vec<Violation>,
}

impl CmReport {
    pub fn passed(&self) -> bool {
        self.positivity_ok && self.bernstein_ok && self.alternation_ok.iter().all(|&b| b)
    }
}

/// Sampled complete-monotonicity check.
///
/// Derivatives up to `depth` (at most 4) are replaced by divided differences
/// on `t_grid`; a sign is only flagged when it exceeds the propagated
/// rounding bound. `φ^m` is checked for positivity and monotonicity on a
/// log-spaced real grid in `[10⁻³, 10³]`.
pub fn validate_cm(kernel: &KernelSpec, t_grid: &[f64], depth: usize) -> Result<CmReport> {
    if depth > 4 {
        return Err(Error::Parameter(format!("depth {depth} exceeds 4")));
    }
    if t_grid.is_empty() || t_grid[0] <= 0.0 || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Parameter(
            "t_grid must be strictly positive and increasing".into(),
        ));
    }
    let mut violations = Vec::new();
    let values: Vec<f64> = t_grid.iter().map(|&t| kernel.eval(t)).collect();

    let mut positivity_ok = true;
    for (&t, &v) in t_grid.iter().zip(&values) {
        if v < 0.0 || !v.is_finite() {
            positivity_ok = false;
            violations.push(Violation {
                check: "k >= 0".into(),
                location: t,
                value: v,
            });
        }
    }

    let mut alternation_ok = Vec::with_capacity(depth);
    let mut dd = values.clone();
    let mut err: Vec<f64> = values.iter().map(|v| 4.0 * f64::EPSILON * v.abs()).collect();
    for order in 1..=depth {
        let len = dd.len().saturating_sub(1);
        let mut next = Vec::with_capacity(len);
        let mut next_err = Vec::with_capacity(len);
        for i in 0..len {
            let span = t_grid[i + order] - t_grid[i];
            next.push((dd[i + 1] - dd[i]) / span);
            next_err.push((err[i + 1] + err[i]) / span + 4.0 * f64::EPSILON * next[i].abs());
        }
        dd = next;
        err = next_err;
        let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
        let mut ok = true;
        for i in 0..dd.len() {
            if sign * dd[i] < -8.0 * err[i] {
                ok = false;
                violations.push(Violation {
                    check: format!("(-1)^{order} k^({order}) >= 0"),
                    location: t_grid[i],
                    value: sign * dd[i],
                });
            }
        }
        alternation_ok.push(ok);
    }

    let combined = CombinedKernel::new(kernel.clone());
    let mut bernstein_ok = true;
    let mut prev: Option<f64> = None;
    for i in 0..=60 {
        let lambda = 10f64.powf(-3.0 + 0.1 * i as f64);
        let phi = combined.phi_m(Complex64::new(lambda, 0.0))?.re;
        let decreasing = prev.is_some_and(|p| phi < p * (1.0 - 1e-12));
        if phi <= 0.0 || decreasing {
            bernstein_ok = false;
            violations.push(Violation {
                check: "phi^m positive and nondecreasing".into(),
                location: lambda,
                value: phi,
            });
        }
        prev = Some(phi);
    }

    Ok(CmReport {
        depth,
        positivity_ok,
        alternation_ok,
        bernstein_ok,
        violations,
    })
}

/// Tuning for [`soe_fit_with`].
#[derive(Debug, Clone)]
pub struct SoeOptions {
    /// Largest admissible dictionary size.
    pub max_terms: usize,
    /// Collocation points per decade of the window.
    pub points_per_decade: usize,
}

impl Default for SoeOptions {
    fn default() -> Self {
        Self {
            max_terms: 120,
            points_per_decade: 24,
        }
    }
}

/// Result of a sum-of-exponentials fit.
#[derive(Debug, Clone)]
pub struct SoeFit {
    pub kernel: KernelSpec,
    /// Max relative error measured on a grid ten times denser than the
    /// collocation grid.
    pub max_rel_error: f64,
    pub terms: usize,
}

/// [`soe_fit_with`] under default options.
pub fn soe_fit(kernel: &KernelSpec, window: (f64, f64), tol: f64) -> Result<SoeFit> {
    soe_fit_with(kernel, window, tol, &SoeOptions::default())
}

/// Nonnegative sum-of-exponentials surrogate of `k` on `[t_min, t_max]`.
///
/// Rates come from a log-spaced dictionary that is densified until the
/// relative error target is met; weights are found by NNLS on relative
/// residuals, so every surviving weight is positive and the surrogate is
/// completely monotone.
pub fn soe_fit_with(
    kernel: &KernelSpec,
    window: (f64, f64),
    tol: f64,
    opts: &SoeOptions,
) -> Result<SoeFit> {
    let (t_min, t_max) = window;
    if !(t_min > 0.0 && t_max > t_min) {
        return Err(Error::Parameter(format!(
            "window must satisfy 0 < t_min < t_max, got [{t_min}, {t_max}]"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("tolerance must be positive, got {tol}")));
    }
    match kernel {
        KernelSpec::Zero => {
            return Ok(SoeFit {
                kernel: KernelSpec::ExpSum {
                    weights: vec![],
                    rates: vec![],
                },
                max_rel_error: 0.0,
                terms: 0,
            })
        }
        KernelSpec::ExpSum { weights, .. } => {
            return Ok(SoeFit {
                kernel: kernel.clone(),
                max_rel_error: 0.0,
                terms: weights.len(),
            })
        }
        _ => {}
    }

    let decades = (t_max / t_min).log10();
    let n_coll = ((decades * opts.points_per_decade as f64).ceil() as usize).max(8) + 1;
    let coll = log_space(t_min, t_max, n_coll);
    let check = log_space(t_min, t_max, 10 * (n_coll - 1) + 1);
    let target: Vec<f64> = coll.iter().map(|&t| kernel.eval(t)).collect();
    let check_target: Vec<f64> = check.iter().map(|&t| kernel.eval(t)).collect();
    if target.iter().chain(&check_target).any(|v| !(*v > 0.0)) {
        return Err(Error::Parameter(
            "kernel must be strictly positive on the fit window".into(),
        ));
    }

    let (lo, hi) = (1e-2 / t_max, 1e2 / t_min);
    let rate_decades = (hi / lo).log10();
    let mut best: Option<SoeFit> = None;
    for density in [2usize, 3, 4, 5, 6, 8, 10, 12, 16] {
        let wanted = (rate_decades * density as f64).ceil() as usize + 1;
        let n_rates = wanted.min(opts.max_terms).max(2);
        let rates = log_space(lo, hi, n_rates);
        let a = DMatrix::from_fn(coll.len(), rates.len(), |i, j| {
            (-rates[j] * coll[i]).exp() / target[i]
        });
        let b = DVector::from_element(coll.len(), 1.0);
        let sol = nnls(&a, &b, 50 * n_rates);
        let (w, r): (Vec<f64>, Vec<f64>) = sol
            .x
            .iter()
            .zip(&rates)
            .filter(|(w, _)| **w > 0.0)
            .map(|(w, r)| (*w, *r))
            .unzip();
        let fitted = KernelSpec::ExpSum {
            weights: w,
            rates: r,
        };
        let err = check
            .iter()
            .zip(&check_target)
            .map(|(&t, &v)| ((fitted.eval(t) - v) / v).abs())
            .fold(0.0, f64::max);
        let terms = fitted.term_count().unwrap_or(0);
        log::debug!("soe_fit density {density}: {terms} terms, max rel error {err:e}");
        let candidate = SoeFit {
            kernel: fitted,
            max_rel_error: err,
            terms,
        };
        if err <= tol {
            return Ok(candidate);
        }
        if best.as_ref().is_none_or(|b| err < b.max_rel_error) {
            best = Some(candidate);
        }
        if wanted > opts.max_terms {
            break;
        }
    }
    let best = best.expect("the first density is always attempted");
    Err(Error::FitFailure {
        terms: best.terms,
        error: best.max_rel_error,
        tol,
    })
}

/// `n` log-spaced points from `a` to `b` inclusive.
pub fn log_space(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| {
            if i == n - 1 {
                b
            } else {
                (la + (lb - la) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn mhat_examples() {
        let zero = CombinedKernel::new(KernelSpec::zero());
        assert_relative_eq!(zero.mhat(c(2.0)).unwrap().re, 0.5);
        let es = CombinedKernel::new(KernelSpec::exp_sum(vec![1.0, 2.0], vec![1.0, 3.0]).unwrap());
        assert_relative_eq!(es.mhat(c(1.0)).unwrap().re, 2.0, max_relative = 1e-15);
        let fr = CombinedKernel::new(KernelSpec::fractional(0.5, 1.0).unwrap());
        assert_relative_eq!(fr.mhat(c(4.0)).unwrap().re, 0.75, max_relative = 1e-15);
    }

    #[test]
    fn phi_m_examples() {
        let zero = CombinedKernel::new(KernelSpec::zero());
        assert_relative_eq!(zero.phi_m(c(2.0)).unwrap().re, 2.0);
        let fr = CombinedKernel::new(KernelSpec::fractional(0.5, 1.0).unwrap());
        assert_relative_eq!(fr.phi_m(c(4.0)).unwrap().re, 4.0 / 3.0, max_relative = 1e-15);
        let es = CombinedKernel::new(KernelSpec::exp_sum(vec![1.0, 2.0], vec![1.0, 3.0]).unwrap());
        assert_relative_eq!(es.phi_m(c(1.0)).unwrap().re, 0.5, max_relative = 1e-15);
    }

    #[test]
    fn mhat_rejects_left_half_plane() {
        let k = CombinedKernel::new(KernelSpec::zero());
        assert!(matches!(k.mhat(c(0.0)), Err(Error::Domain(_))));
        assert!(matches!(k.mhat(Complex64::new(-1.0, 2.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn phi_m_flags_cancellation() {
        // k̂ = -1/λ cancels the constant part exactly
        let bad = KernelSpec::closed_form("cancel", |_| 0.0, |l: Complex64| -l.inv());
        let k = CombinedKernel::new(bad);
        assert!(matches!(k.phi_m(c(1.0)), Err(Error::Singularity { .. })));
    }

    #[test]
    fn constructors_validate() {
        assert!(KernelSpec::fractional(1.0, 1.0).is_err());
        assert!(KernelSpec::fractional(0.5, 0.0).is_err());
        assert!(KernelSpec::exp_sum(vec![1.0], vec![-1.0]).is_err());
        assert!(KernelSpec::exp_sum(vec![1.0, 2.0], vec![1.0]).is_err());
    }

    #[test]
    fn integrals_match_quadrature() {
        for k in [
            KernelSpec::fractional(0.3, 2.0).unwrap(),
            KernelSpec::exp_sum(vec![0.5, 2.0], vec![0.2, 5.0]).unwrap(),
        ] {
            for t in [0.01, 0.7, 3.0] {
                let k1 = tanh_sinh(0.0, t, 1e-13, |s| k.eval(s));
                assert_relative_eq!(k.integral(t), k1, max_relative = 1e-9);
                let k2 = tanh_sinh(0.0, t, 1e-13, |s| (t - s) * k.eval(s));
                assert_relative_eq!(k.second_integral(t), k2, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn validate_cm_accepts_monotone_kernels() {
        let grid = log_space(0.05, 5.0, 40);
        for k in [
            KernelSpec::exp_sum(vec![1.0, 0.3], vec![0.5, 4.0]).unwrap(),
            KernelSpec::fractional(0.5, 1.0).unwrap(),
            KernelSpec::zero(),
        ] {
            let rep = validate_cm(&k, &grid, 4).unwrap();
            assert!(rep.passed(), "{k:?}: {:?}", rep.violations);
        }
    }

    #[test]
    fn validate_cm_rejects_oscillating_kernel() {
        let grid: Vec<f64> = (1..=60).map(|i| 0.1 * i as f64).collect();
        let k = KernelSpec::closed_form(
            "sin+2",
            |t: f64| t.sin() + 2.0,
            |l: Complex64| 1.0 / (l * l + 1.0) + 2.0 / l,
        );
        let rep = validate_cm(&k, &grid, 2).unwrap();
        assert!(rep.positivity_ok);
        assert!(!rep.alternation_ok[1], "second-order sign must fail");
        assert!(!rep.passed());
        assert!(rep
            .violations
            .iter()
            .any(|v| v.check.contains("k^(2)") && v.location < std::f64::consts::PI));
    }

    #[test]
    fn validate_cm_rejects_bad_grids() {
        let k = KernelSpec::zero();
        assert!(validate_cm(&k, &[0.0, 1.0], 1).is_err());
        assert!(validate_cm(&k, &[1.0, 0.5], 1).is_err());
        assert!(validate_cm(&k, &[1.0, 2.0], 5).is_err());
    }

    #[test]
    fn soe_fit_trivial_cases() {
        let z = soe_fit(&KernelSpec::zero(), (0.1, 1.0), 1e-4).unwrap();
        assert_eq!(z.terms, 0);
        assert_eq!(z.kernel.term_count(), Some(0));
        let es = KernelSpec::exp_sum(vec![1.0], vec![2.0]).unwrap();
        let f = soe_fit(&es, (0.1, 1.0), 1e-4).unwrap();
        assert_eq!(f.max_rel_error, 0.0);
        assert_eq!(f.kernel.exp_terms().unwrap().1, &[2.0]);
    }

    #[test]
    fn soe_fit_fractional_meets_tolerance_on_dense_grid() {
        let k = KernelSpec::fractional(0.5, 1.0).unwrap();
        let fit = soe_fit(&k, (1e-2, 10.0), 1e-4).unwrap();
        assert!(fit.terms > 0 && fit.terms < 120);
        // independent check on a grid 10x denser than the internal one
        let dense = log_space(1e-2, 10.0, 7201);
        let worst = dense
            .iter()
            .map(|&t| ((fit.kernel.eval(t) - k.eval(t)) / k.eval(t)).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-4, "worst relative error {worst:e}");
        let rep = validate_cm(&fit.kernel, &log_space(1e-2, 10.0, 50), 4).unwrap();
        assert!(rep.passed());
    }

    #[test]
    fn soe_fit_reports_failure_when_budget_is_too_small() {
        let k = KernelSpec::fractional(0.5, 1.0).unwrap();
        let opts = SoeOptions {
            max_terms: 16,
            points_per_decade: 24,
        };
        match soe_fit_with(&k, (1e-3, 100.0), 1e-12, &opts) {
            Err(Error::FitFailure { terms, error, .. }) => {
                assert!(terms <= 16);
                assert!(error > 1e-12);
            }
            other => panic!("expected fit failure, got {other:?}"),
        }
    }
}
