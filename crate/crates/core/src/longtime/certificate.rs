use serde::Serialize;

use crate::dynamics::{DissipationParams, Nonlinearity};
use crate::spectral::{dissipation_pairing, lp_norm, Field};
use crate::{Error, Result};

/// A sampled uniform dissipation estimate
/// `⟨f(u), |u|^{p−2}u⟩ ≤ −α_d ‖u‖ₚ^{p+σ−2} + β_d`.
#[derive(Debug, Clone, Serialize)]
pub struct DissipativityCertificate {
    pub p: u32,
    pub sigma: f64,
    pub alpha_d: f64,
    pub beta_d: f64,
    /// `σ ≤ 2`: the estimate holds on the samples but lies outside the
    /// superlinear regime the absorbing-ball argument needs.
    pub out_of_assumption: bool,
    pub samples: usize,
    /// `min_i (−α_d xᵢ^{p+σ−2} + β_d − Pᵢ)` over the samples, ≥ 0.
    pub min_slack: f64,
}

impl DissipativityCertificate {
    /// Builds a certificate from declared constants without sampling.
    pub fn declared(p: u32, sigma: f64, alpha_d: f64, beta_d: f64) -> Result<Self> {
        if !(alpha_d > 0.0) || !(beta_d >= 0.0) {
            return Err(Error::Parameter(format!(
                "need α_d > 0 and β_d ≥ 0, got {alpha_d}, {beta_d}"
            )));
        }
        Ok(Self {
            p,
            sigma,
            alpha_d,
            beta_d,
            out_of_assumption: sigma <= 2.0,
            samples: 0,
            min_slack: f64::NAN,
        })
    }

    pub fn exponent(&self) -> f64 {
        self.p as f64 + self.sigma - 2.0
    }

    /// `R* = (β_d/α_d)^{1/(p+σ−2)} + 1`, recomputed on every call.
    pub fn r_star(&self) -> f64 {
        (self.beta_d / self.alpha_d).powf(1.0 / self.exponent()) + 1.0
    }

    /// `R̂* = 2R* + C_R B^f_{R*}` from measured `C_R` and `B^f_{R*}`.
    pub fn r_hat_star(&self, c_r: f64, b_f: f64) -> f64 {
        2.0 * self.r_star() + c_r * b_f
    }

    pub fn params(&self) -> DissipationParams {
        DissipationParams {
            p: self.p,
            sigma: self.sigma,
            alpha_d: self.alpha_d,
            beta_d: self.beta_d,
        }
    }
}

/// `R*` of a certificate.
pub fn absorbing_radius(cert: &DissipativityCertificate) -> f64 {
    cert.r_star()
}

/// Fits `(α_d, β_d)` on sample fields.
///
/// Candidates `α_d = 2^{k/4}`, `k = −40..=40`, are admissible when the
/// samples in the top decade of norms satisfy the estimate with `β_d = 0`,
/// i.e. when dissipation genuinely dominates at large amplitude. For each
/// admissible `α_d` the smallest `β_d ≥ 0` covering all samples is taken,
/// and the pair with the smallest `R*` wins (ties go to the larger `α_d`).
pub fn dissipativity_check(
    f: &Nonlinearity,
    p: u32,
    sigma: f64,
    samples: &[Field],
) -> Result<DissipativityCertificate> {
    if samples.is_empty() {
        return Err(Error::Certificate("no sample fields".into()));
    }
    let q = p as f64 + sigma - 2.0;
    if !(q > 0.0) {
        return Err(Error::Parameter(format!("p + σ − 2 must be positive, got {q}")));
    }
    let data: Vec<(f64, f64)> = crate::par::try_map_slice(samples, |u| {
        Ok((lp_norm(u, p)?, dissipation_pairing(&f.apply(u), u, p)?))
    })?;
    let x_max = data.iter().map(|d| d.0).fold(0.0, f64::max);
    let top: Vec<(f64, f64)> = data.iter().copied().filter(|d| d.0 >= 0.1 * x_max).collect();

    // `P + α xᵠ`, with rounding-level values flushed to zero
    let excess = |alpha: f64, x: f64, pr: f64| {
        let v = pr + alpha * x.powf(q);
        if v.abs() <= 1e-12 * (pr.abs() + alpha * x.powf(q)) {
            0.0
        } else {
            v
        }
    };
    let mut best: Option<(f64, f64, f64)> = None;
    for k in -40..=40 {
        let alpha = 2f64.powf(k as f64 / 4.0);
        if !top.iter().all(|&(x, pr)| excess(alpha, x, pr) <= 0.0) {
            continue;
        }
        let beta = data.iter().map(|&(x, pr)| excess(alpha, x, pr)).fold(0.0, f64::max);
        let r = (beta / alpha).powf(1.0 / q) + 1.0;
        if best.is_none_or(|(_, _, rb)| r <= rb * (1.0 + 1e-9)) {
            best = Some((alpha, beta, r));
        }
    }
    let Some((alpha_d, beta_d, _)) = best else {
        let (x, pr) = top
            .iter()
            .copied()
            .max_by(|a, b| (a.1 / a.0.powf(q)).total_cmp(&(b.1 / b.0.powf(q))))
            .expect("non-empty");
        return Err(Error::Certificate(format!(
            "no α_d in [2^-10, 2^10] dominates the samples; worst sample has ‖u‖ = {x:e}, pairing = {pr:e}"
        )));
    };
    let min_slack = data
        .iter()
        .map(|&(x, pr)| -alpha_d * x.powf(q) + beta_d - pr)
        .fold(f64::INFINITY, f64::min);
    if sigma <= 2.0 {
        log::warn!("σ = {sigma} ≤ 2: certificate is outside the superlinear assumption");
    }
    Ok(DissipativityCertificate {
        p,
        sigma,
        alpha_d,
        beta_d,
        out_of_assumption: sigma <= 2.0,
        samples: samples.len(),
        min_slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::TorusGrid;

    fn samples(g: TorusGrid) -> Vec<Field> {
        let mut out = Vec::new();
        for e in -40..=40 {
            let c = 10f64.powf(e as f64 / 20.0);
            out.push(Field::constant(g, c));
            out.push(Field::from_fn(g, |x, _| c * (1.0 + 0.5 * (6.0 * x).sin())));
        }
        out
    }

    #[test]
    fn radius_examples() {
        let c = DissipativityCertificate::declared(2, 4.0, 1.0, 1.0).unwrap();
        assert_eq!(absorbing_radius(&c), 2.0);
        let c = DissipativityCertificate::declared(2, 4.0, 1.0, 16.0).unwrap();
        assert_eq!(absorbing_radius(&c), 3.0);
        let c = DissipativityCertificate::declared(2, 4.0, 1.0, 0.0).unwrap();
        assert_eq!(absorbing_radius(&c), 1.0);
    }

    #[test]
    fn linear_damping_is_boundary_case() {
        let g = TorusGrid::new(1, 32, 1.0).unwrap();
        let cert = dissipativity_check(&Nonlinearity::linear(-1.0), 2, 2.0, &samples(g)).unwrap();
        assert_eq!(cert.alpha_d, 1.0);
        assert_eq!(cert.beta_d, 0.0);
        assert!(cert.out_of_assumption);
    }

    #[test]
    fn cubic_on_unit_torus() {
        let g = TorusGrid::new(1, 32, 1.0).unwrap();
        let cert = dissipativity_check(&Nonlinearity::cubic(), 2, 4.0, &samples(g)).unwrap();
        assert_eq!(cert.alpha_d, 0.5);
        assert!((cert.beta_d - 0.5).abs() < 1e-12);
        assert_eq!(cert.r_star(), (cert.beta_d / cert.alpha_d).powf(0.25) + 1.0);
        assert!(cert.min_slack >= 0.0);
        assert!(!cert.out_of_assumption);
    }

    #[test]
    fn zero_map_has_no_certificate() {
        let g = TorusGrid::new(1, 32, 1.0).unwrap();
        assert!(matches!(
            dissipativity_check(&Nonlinearity::zero(), 2, 4.0, &samples(g)),
            Err(Error::Certificate(_))
        ));
    }
}
