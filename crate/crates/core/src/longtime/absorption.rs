use std::sync::Arc;

use serde::Serialize;

use super::certificate::DissipativityCertificate;
use crate::dynamics::{march_solve, HistoryFunction, MarchOptions, Nonlinearity};
use crate::relaxation::RelaxationEvaluator;
use crate::spectral::{lp_norm, Field};
use crate::Result;

/// Relative slack when testing `‖u‖ₚ ≤ R*`.
const INVARIANCE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct MemberAbsorption {
    pub index: usize,
    pub initial_norm: f64,
    /// First node time with `‖u‖ₚ ≤ R*`.
    pub entry_time: Option<f64>,
    /// Stays in the ball at every node after entry.
    pub stays: bool,
    /// `‖u‖ₚ` never increases at nodes where it exceeds `R*`.
    pub monotone_outside: bool,
    /// Largest excess of the discrete energy rate over the bound
    /// `p(β_d − α_d ‖u‖ₚ^{p+σ−2})`, taken at the worse endpoint and scaled
    /// by `max(1, |bound|)`; `O(h)` for a consistent scheme.
    pub energy_excess: f64,
    pub sup_norm_after_entry: f64,
    pub sup_force_after_entry: f64,
    /// `∫ ‖f(u)‖ₚ dt` after entry (trapezoid).
    pub force_integral: f64,
    pub norms: Vec<f64>,
}

/// Ensemble statistics of trajectories relative to the ball of radius `R*`.
#[derive(Debug, Clone, Serialize)]
pub struct AbsorptionReport {
    pub r_star: f64,
    pub p: u32,
    pub step: f64,
    pub horizon: f64,
    /// Largest entry time, `None` if some member never entered.
    pub t_r: Option<f64>,
    pub all_invariant: bool,
    /// `B_R = sup ‖u‖ₚ` after entry, over the ensemble.
    pub b_r: f64,
    /// `B^f_R = sup ‖f(u)‖ₚ` after entry.
    pub b_f: f64,
    /// `K_R = sup ∫ ‖f(u)‖ₚ dt` after entry.
    pub k_r: f64,
    pub members: Vec<MemberAbsorption>,
}

/// Solves from `φ = S(·)u₀` for each `u₀` in `initial_set` (members run in
/// parallel) and measures entry into and invariance of the `R*` ball.
pub fn absorption_run(
    ev: &Arc<RelaxationEvaluator>,
    f: &Nonlinearity,
    cert: &DissipativityCertificate,
    initial_set: &[Field],
    horizon: f64,
    step: f64,
) -> Result<AbsorptionReport> {
    let r_star = cert.r_star();
    let p = cert.p;
    let q = cert.exponent();
    let opts = MarchOptions::new(horizon, step);
    let members = crate::par::try_map_range(initial_set.len(), |index| {
        let u0 = &initial_set[index];
        let phi = HistoryFunction::resolvent(ev.clone(), u0.clone());
        let traj = march_solve(ev, &phi, f, &opts)?;
        let norms = traj.lp_norms(p)?;
        let forces = traj
            .fields()
            .iter()
            .map(|u| lp_norm(&f.apply(u), p))
            .collect::<Result<Vec<f64>>>()?;
        let inside = |x: f64| x <= r_star * (1.0 + INVARIANCE_SLACK);
        let entry = norms.iter().position(|&x| inside(x));
        let rate_bound = |x: f64| p as f64 * (cert.beta_d - cert.alpha_d * x.powf(q));
        let mut monotone_outside = true;
        let mut energy_excess = f64::NEG_INFINITY;
        for w in norms.windows(2) {
            if w[0] > r_star && w[1] > w[0] * (1.0 + INVARIANCE_SLACK) {
                monotone_outside = false;
            }
            let rate = (w[1].powi(p as i32) - w[0].powi(p as i32)) / step;
            let bound = rate_bound(w[0]).max(rate_bound(w[1]));
            energy_excess = energy_excess.max((rate - bound) / bound.abs().max(1.0));
        }
        let (stays, sup_norm, sup_force, integral) = match entry {
            Some(e) => {
                let integral: f64 = forces[e..].windows(2).map(|w| 0.5 * step * (w[0] + w[1])).sum();
                (
                    norms[e..].iter().all(|&x| inside(x)),
                    norms[e..].iter().copied().fold(0.0, f64::max),
                    forces[e..].iter().copied().fold(0.0, f64::max),
                    integral,
                )
            }
            None => (false, f64::NAN, f64::NAN, f64::NAN),
        };
        Ok(MemberAbsorption {
            index,
            initial_norm: norms[0],
            entry_time: entry.map(|e| traj.time(e)),
            stays,
            monotone_outside,
            energy_excess,
            sup_norm_after_entry: sup_norm,
            sup_force_after_entry: sup_force,
            force_integral: integral,
            norms,
        })
    })?;
    let entered = members.iter().all(|m| m.entry_time.is_some());
    let t_r = entered.then(|| members.iter().filter_map(|m| m.entry_time).fold(0.0, f64::max));
    let sup = |g: fn(&MemberAbsorption) -> f64| members.iter().map(g).filter(|v| v.is_finite()).fold(0.0, f64::max);
    Ok(AbsorptionReport {
        r_star,
        p,
        step,
        horizon,
        t_r,
        all_invariant: entered && members.iter().all(|m| m.stays),
        b_r: sup(|m| m.sup_norm_after_entry),
        b_f: sup(|m| m.sup_force_after_entry),
        k_r: sup(|m| m.force_integral),
        members,
    })
}
