use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::RwLock;

use num_complex::Complex64;

use crate::kernel::{CombinedKernel, KernelSpec};
use crate::{Error, Result};

/// Shape and accuracy controls for the hyperbolic contour
/// `z(u) = σ(1 + sin(iu − a))`, `σ = scale·N/t`, trapezoidal step `h = step/N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourParams {
    /// Initial number of nodes on the upper half of the contour.
    pub nodes: usize,
    /// Nodes added per refinement.
    pub refine_step: usize,
    /// Refinement gives up beyond this many nodes.
    pub max_nodes: usize,
    /// Absolute agreement required between successive node counts.
    pub agreement: f64,
    /// Values within this distance outside `[0, 1]` are clamped; beyond it
    /// they are errors.
    pub clamp_slack: f64,
    pub asymptote_angle: f64,
    pub step: f64,
    pub scale: f64,
}

impl Default for ContourParams {
    fn default() -> Self {
        Self {
            nodes: 24,
            refine_step: 8,
            max_nodes: 48,
            agreement: 1e-9,
            clamp_slack: 1e-8,
            asymptote_angle: 1.1721,
            step: 1.0818,
            scale: 4.4920,
        }
    }
}

/// Evaluates `s(t, μ)` for one combined kernel.
///
/// An optional cache maps exact `(t, μ)` bit patterns to values. It sits
/// behind an `RwLock`, so concurrent readers see either nothing or a
/// complete entry.
pub struct RelaxationEvaluator {
    kernel: CombinedKernel,
    params: ContourParams,
    cache: Option<RwLock<HashMap<(u64, u64), f64>>>,
}

impl std::fmt::Debug for RelaxationEvaluator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RelaxationEvaluator")
            .field("kernel", &self.kernel)
            .field("params", &self.params)
            .field("cached", &self.cache.is_some())
            .finish()
    }
}

impl Clone for RelaxationEvaluator {
    fn clone(&self) -> Self {
        Self {
            kernel: self.kernel.clone(),
            params: self.params.clone(),
            cache: self.cache.as_ref().map(|_| RwLock::new(HashMap::new())),
        }
    }
}

impl RelaxationEvaluator {
    pub fn new(kernel: KernelSpec) -> Self {
        Self::with_params(kernel, ContourParams::default())
    }

    pub fn with_params(kernel: KernelSpec, params: ContourParams) -> Self {
        Self {
            kernel: CombinedKernel::new(kernel),
            params,
            cache: None,
        }
    }

    /// Enables memoisation of `(t, μ)` evaluations.
    pub fn cached(mut self) -> Self {
        self.cache = Some(RwLock::new(HashMap::new()));
        self
    }

    pub fn kernel(&self) -> &CombinedKernel {
        &self.kernel
    }

    pub fn params(&self) -> &ContourParams {
        &self.params
    }

    /// `s(t, μ)`; `s(0, μ) = s(t, 0) = 1`.
    pub fn s(&self, t: f64, mu: f64) -> Result<f64> {
        if !(t >= 0.0 && t.is_finite()) || !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::Domain(format!("s(t, μ) needs t, μ ≥ 0, got t = {t}, μ = {mu}")));
        }
        if t == 0.0 || mu == 0.0 {
            return Ok(1.0);
        }
        let key = (t.to_bits(), mu.to_bits());
        if let Some(cache) = &self.cache {
            if let Some(v) = cache.read().expect("cache lock poisoned").get(&key) {
                return Ok(*v);
            }
        }
        let v = self.evaluate(t, mu)?;
        if let Some(cache) = &self.cache {
            cache.write().expect("cache lock poisoned").insert(key, v);
        }
        Ok(v)
    }

    /// Raw contour sum without refinement or clamping.
    pub fn s_raw(&self, t: f64, mu: f64, nodes: usize) -> f64 {
        let p = &self.params;
        let n = nodes as f64;
        let h = p.step / n;
        let sigma = p.scale * n / t;
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..=nodes {
            let u = k as f64 * h;
            let w = Complex64::new(-p.asymptote_angle, u);
            let z = sigma * (1.0 + w.sin());
            let dz = Complex64::i() * sigma * w.cos();
            let mhat = self.kernel.mhat_unchecked(z);
            let shat = (z * (1.0 + mu * mhat)).inv();
            let term = (z * t).exp() * shat * dz;
            acc += if k == 0 { 0.5 * term } else { term };
        }
        h / PI * acc.im
    }

    fn evaluate(&self, t: f64, mu: f64) -> Result<f64> {
        let p = &self.params;
        let mut n = p.nodes;
        let mut prev = self.s_raw(t, mu, n);
        let mut gap = f64::NAN;
        // rounding grows with the node count, so the lower count of the first
        // agreeing pair is returned
        while n + p.refine_step <= p.max_nodes {
            n += p.refine_step;
            let next = self.s_raw(t, mu, n);
            gap = (next - prev).abs();
            if gap <= p.agreement {
                return self.clamp(t, mu, prev);
            }
            prev = next;
        }
        Err(Error::QuadratureDivergence { t, mu, gap })
    }

    fn clamp(&self, t: f64, mu: f64, v: f64) -> Result<f64> {
        let slack = self.params.clamp_slack;
        if !v.is_finite() || v < -slack || v > 1.0 + slack {
            return Err(Error::RelaxationOutOfRange { t, mu, value: v });
        }
        if !(0.0..=1.0).contains(&v) {
            log::trace!("clamped s({t}, {mu}) = {v:e} into [0, 1]");
        }
        Ok(v.clamp(0.0, 1.0))
    }

    /// `s(t, μ)` for every `μ` in `mus`.
    pub fn s_many(&self, t: f64, mus: &[f64]) -> Result<Vec<f64>> {
        crate::par::try_map_slice(mus, |&mu| self.s(t, mu))
    }

    /// Central difference approximation of `∂ₜ s(t, μ)`; `t` must exceed `dt`.
    pub fn ds_dt(&self, t: f64, mu: f64, dt: f64) -> Result<f64> {
        Ok((self.s(t + dt, mu)? - self.s(t - dt, mu)?) / (2.0 * dt))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn heat_limit_single_point() {
        let ev = RelaxationEvaluator::new(KernelSpec::zero());
        assert!((ev.s(1.0, 1.0).unwrap() - (-1.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn trivial_arguments() {
        let ev = RelaxationEvaluator::new(KernelSpec::fractional(0.5, 1.0).unwrap());
        assert_eq!(ev.s(3.0, 0.0).unwrap(), 1.0);
        assert_eq!(ev.s(0.0, 7.0).unwrap(), 1.0);
        assert!(ev.s(-1.0, 1.0).is_err());
        assert!(ev.s(1.0, -1.0).is_err());
    }

    #[test]
    fn fractional_half_matches_closed_form() {
        // s for k(t) = t^{-1/2}/Γ(1/2), μ = 1, from the erfc partial-fraction form
        let ev = RelaxationEvaluator::new(KernelSpec::fractional(0.5, 1.0).unwrap());
        let frozen = [
            (0.01, 0.887_864_494_156_277_3),
            (0.1, 0.662_103_500_368_037_2),
            (1.0, 0.216_242_904_401_139_45),
            (2.0, 0.106_140_830_761_645_48),
            (5.0, 0.030_018_937_993_279_787),
        ];
        for (t, v) in frozen {
            assert_relative_eq!(ev.s(t, 1.0).unwrap(), v, max_relative = 1e-9);
        }
    }

    #[test]
    fn exp_sum_matches_matrix_exponential() {
        let ev = RelaxationEvaluator::new(KernelSpec::exp_sum(vec![1.0], vec![1.0]).unwrap());
        for (t, v) in [
            (0.5, 0.423_776_958_922_795),
            (1.0, 0.241_427_723_978_311_36),
            (2.0, 0.132_602_978_798_839_98),
        ] {
            assert_relative_eq!(ev.s(t, 1.0).unwrap(), v, max_relative = 1e-10);
        }
    }

    #[test]
    fn cache_returns_identical_bits() {
        let ev = RelaxationEvaluator::new(KernelSpec::fractional(0.3, 2.0).unwrap()).cached();
        let a = ev.s(0.7, 3.0).unwrap();
        let b = ev.s(0.7, 3.0).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        let plain = RelaxationEvaluator::new(KernelSpec::fractional(0.3, 2.0).unwrap());
        assert_eq!(plain.s(0.7, 3.0).unwrap().to_bits(), a.to_bits());
    }

    #[test]
    fn too_few_nodes_is_reported() {
        let params = ContourParams {
            nodes: 2,
            refine_step: 1,
            max_nodes: 4,
            agreement: 1e-15,
            ..ContourParams::default()
        };
        let ev = RelaxationEvaluator::with_params(KernelSpec::fractional(0.5, 1.0).unwrap(), params);
        assert!(matches!(
            ev.s(1.0, 1.0),
            Err(Error::QuadratureDivergence { .. })
        ));
    }

    #[test]
    fn non_positive_kernel_is_rejected() {
        // k̂ = −0.9/(λ+1) flips the sign of the memory; s overshoots 1
        let bad = KernelSpec::closed_form(
            "negative",
            |t: f64| -0.9 * (-t).exp(),
            |l: Complex64| -0.9 / (l + 1.0),
        );
        let ev = RelaxationEvaluator::new(bad);
        let any_bad = (1..40).any(|i| ev.s(0.25 * i as f64, 50.0).is_err());
        assert!(any_bad);
    }
}
