use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::spectral::Field;
use crate::{Error, Result};

type Scalar = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Parameters of a uniform dissipation estimate
/// `⟨f(u), |u|^{p−2}u⟩ ≤ −α_d ‖u‖ₚ^{p+σ−2} + β_d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DissipationParams {
    pub p: u32,
    pub sigma: f64,
    pub alpha_d: f64,
    pub beta_d: f64,
}

/// A pointwise nonlinearity `f: ℝ → ℝ` with Lipschitz and dissipativity
/// metadata, applied componentwise to fields.
///
/// When `truncation` is set the field map becomes `u ↦ f(Ru/‖u‖₂)` outside
/// the L² ball of radius `R`.
#[derive(Clone)]
pub struct Nonlinearity {
    label: String,
    f: Scalar,
    derivative: Option<Scalar>,
    lipschitz: Option<f64>,
    local_lipschitz: Option<Scalar>,
    dissipation: Option<DissipationParams>,
    truncation: Option<f64>,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity")
            .field("label", &self.label)
            .field("lipschitz", &self.lipschitz)
            .field("dissipation", &self.dissipation)
            .field("truncation", &self.truncation)
            .finish()
    }
}

impl Nonlinearity {
    /// Wraps `f`; fails unless `f(0) = 0`.
    pub fn new<F>(label: impl Into<String>, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let f0 = f(0.0);
        if f0 != 0.0 {
            return Err(Error::Parameter(format!("nonlinearity must vanish at 0, f(0) = {f0}")));
        }
        Ok(Self {
            label: label.into(),
            f: Arc::new(f),
            derivative: None,
            lipschitz: None,
            local_lipschitz: None,
            dissipation: None,
            truncation: None,
        })
    }

    /// Declares a global Lipschitz constant.
    pub fn with_lipschitz(mut self, l: f64) -> Self {
        self.lipschitz = Some(l);
        self
    }

    /// Declares `f'`, used to bound Lipschitz constants on value ranges.
    pub fn with_derivative<D>(mut self, d: D) -> Self
    where
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.derivative = Some(Arc::new(d));
        self
    }

    /// Declares the local Lipschitz profile `R ↦ L(R)` of the field map on
    /// L² balls.
    pub fn with_local_lipschitz<L>(mut self, l: L) -> Self
    where
        L: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.local_lipschitz = Some(Arc::new(l));
        self
    }

    pub fn with_dissipation(mut self, d: DissipationParams) -> Self {
        self.dissipation = Some(d);
        self
    }

    pub fn zero() -> Self {
        Self::new("zero", |_| 0.0)
            .expect("f(0) = 0")
            .with_lipschitz(0.0)
            .with_derivative(|_| 0.0)
    }

    /// `f(u) = c·u`.
    pub fn linear(c: f64) -> Self {
        Self::new(format!("linear({c})"), move |u| c * u)
            .expect("f(0) = 0")
            .with_lipschitz(c.abs())
            .with_derivative(move |_| c)
    }

    /// `f(u) = a·sin(u)`.
    pub fn sine(a: f64) -> Self {
        Self::new(format!("sine({a})"), move |u| a * u.sin())
            .expect("f(0) = 0")
            .with_lipschitz(a.abs())
            .with_derivative(move |u| a * u.cos())
    }

    /// `f(u) = a·tanh(u) − b·u`, Lipschitz with constant `|a| + |b|`.
    pub fn tanh_damped(a: f64, b: f64) -> Self {
        Self::new(format!("tanh_damped({a}, {b})"), move |u| a * u.tanh() - b * u)
            .expect("f(0) = 0")
            .with_lipschitz(a.abs() + b.abs())
            .with_derivative(move |u| a / (u.cosh() * u.cosh()) - b)
    }

    /// `f(u) = u − u³`.
    pub fn cubic() -> Self {
        Self::new("cubic", |u| u - u * u * u)
            .expect("f(0) = 0")
            .with_derivative(|u| 1.0 - 3.0 * u * u)
    }

    /// `f(u) = −u³`.
    pub fn neg_cubic() -> Self {
        Self::new("neg_cubic", |u| -u * u * u)
            .expect("f(0) = 0")
            .with_derivative(|u| -3.0 * u * u)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    pub fn dissipation(&self) -> Option<&DissipationParams> {
        self.dissipation.as_ref()
    }

    pub fn truncation(&self) -> Option<f64> {
        self.truncation
    }

    /// Declared `L(R)`, if any.
    pub fn local_lipschitz(&self, radius: f64) -> Option<f64> {
        self.local_lipschitz.as_ref().map(|l| l(radius))
    }

    /// The scalar map (ignores truncation).
    pub fn eval(&self, u: f64) -> f64 {
        (self.f)(u)
    }

    /// The field map, including truncation when set.
    pub fn apply(&self, u: &Field) -> Field {
        if let Some(r) = self.truncation {
            let norm = u.l2();
            if norm > r {
                let scale = r / norm;
                return u.map(|v| (self.f)(scale * v));
            }
        }
        u.map(|v| (self.f)(v))
    }

    /// `sup |f'(z)|` over `|z| ≤ rho`, from the declared derivative if present
    /// and otherwise from difference quotients on a dense grid.
    pub fn derivative_bound(&self, rho: f64) -> f64 {
        const SAMPLES: usize = 4001;
        let z = |i: usize| -rho + 2.0 * rho * i as f64 / (SAMPLES - 1) as f64;
        match &self.derivative {
            Some(d) => (0..SAMPLES).map(|i| d(z(i)).abs()).fold(0.0, f64::max),
            None => (0..SAMPLES - 1)
                .map(|i| {
                    let (a, b) = (z(i), z(i + 1));
                    ((self.f)(b) - (self.f)(a)).abs() / (b - a)
                })
                .fold(0.0, f64::max),
        }
    }

    /// Largest difference quotient `|f(a) − f(b)|/|a − b|` over pairs drawn
    /// from `values` (at most 256 evenly strided samples are used), skipping
    /// pairs closer than `1e-8` relative.
    pub fn sampled_lipschitz(&self, values: &[f64]) -> f64 {
        let stride = (values.len() / 256).max(1);
        let picks: Vec<f64> = values.iter().step_by(stride).copied().collect();
        let mut best: f64 = 0.0;
        for (i, &a) in picks.iter().enumerate() {
            for &b in &picks[i + 1..] {
                // quotients of near-coincident values are rounding noise
                if (a - b).abs() > 1e-8 * (1.0 + a.abs() + b.abs()) {
                    best = best.max(((self.f)(a) - (self.f)(b)).abs() / (a - b).abs());
                }
            }
        }
        best
    }

    /// The truncated map `f_R`; its global Lipschitz constant is the local
    /// constant of `f` on the ball of radius `R` (the radial retraction onto
    /// an L² ball is 1-Lipschitz).
    pub fn truncated(&self, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Parameter(format!("truncation radius must be positive, got {radius}")));
        }
        let mut out = self.clone();
        out.label = format!("{}|R={radius}", self.label);
        out.truncation = Some(radius);
        out.lipschitz = self.local_lipschitz(radius).or(self.lipschitz);
        Ok(out)
    }

    /// [`Nonlinearity::truncated`] for fields on `grid`. Without a declared
    /// profile, `L(R)` is bounded through `|u(x)| ≤ ‖u‖₂/√|cell|`, i.e. by
    /// `sup |f'|` on `[−R/√|cell|, R/√|cell|]`.
    pub fn truncated_on(&self, radius: f64, grid: &crate::spectral::TorusGrid) -> Result<Self> {
        let mut out = self.truncated(radius)?;
        if self.local_lipschitz.is_none() {
            out.lipschitz = Some(self.derivative_bound(radius / grid.cell().sqrt()));
        }
        Ok(out)
    }
}

/// `f_R` from `f`, see [`Nonlinearity::truncated`].
pub fn truncate_f(f: &Nonlinearity, radius: f64) -> Result<Nonlinearity> {
    f.truncated(radius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::TorusGrid;

    #[test]
    fn must_vanish_at_zero() {
        assert!(Nonlinearity::new("shift", |u| u + 1.0).is_err());
    }

    #[test]
    fn truncation_inside_and_outside() {
        let g = TorusGrid::new(1, 8, 1.0).unwrap();
        let f = Nonlinearity::neg_cubic();
        let fr = truncate_f(&f, 1.0).unwrap();
        let small = Field::constant(g, 0.5);
        assert_eq!(fr.apply(&small), f.apply(&small));
        let big = Field::constant(g, 2.0);
        let got = fr.apply(&big);
        assert!(got.values().iter().all(|&v| (v + 1.0).abs() < 1e-15));
    }

    #[test]
    fn derivative_bound_matches_declared() {
        let f = Nonlinearity::cubic();
        assert!((f.derivative_bound(2.0) - 11.0).abs() < 1e-12);
        let g = Nonlinearity::new("plain", |u| u - u * u * u).unwrap();
        assert!((g.derivative_bound(2.0) - 11.0).abs() < 0.05);
        assert!((Nonlinearity::sine(0.7).sampled_lipschitz(&[0.0, 1e-6, 1.0]) - 0.7).abs() < 1e-6);
    }
}
