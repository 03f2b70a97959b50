use std::sync::Arc;

use serde::Serialize;

use crate::dynamics::{march_solve, weighted_alpha_norm, HistoryFunction, MarchOptions, Nonlinearity};
use crate::relaxation::RelaxationEvaluator;
use crate::spectral::Field;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct OmegaOptions {
    pub step: f64,
    /// Cluster radius; defaults to `1e-2 · r_star`.
    pub delta: Option<f64>,
    pub r_star: Option<f64>,
    /// `(α, N_max)`: also measure `‖χ‖_α` of the history segment
    /// `χ(θ) = u(t_n + θ)`, `θ ∈ [0, N_max]`.
    pub alpha_norm: Option<(f64, usize)>,
}

impl OmegaOptions {
    pub fn new(step: f64) -> Self {
        Self {
            step,
            delta: None,
            r_star: None,
            alpha_norm: None,
        }
    }
}

/// Endpoint fields `u(t_n, u₀ₙ)` grouped into `δ`-clusters.
#[derive(Debug, Clone, Serialize)]
pub struct OmegaReport {
    pub delta: f64,
    #[serde(skip)]
    pub representatives: Vec<Field>,
    pub cluster_sizes: Vec<usize>,
    /// Cluster of each ensemble member.
    pub assignment: Vec<usize>,
    pub endpoint_norms: Vec<f64>,
    pub alpha_norms: Option<Vec<f64>>,
}

impl OmegaReport {
    pub fn clusters(&self) -> usize {
        self.representatives.len()
    }

    pub fn max_alpha_norm(&self) -> Option<f64> {
        self.alpha_norms.as_ref().map(|v| v.iter().copied().fold(0.0, f64::max))
    }
}

/// Integrates each member of `ensemble` from `φ = S(·)u₀` to its sample time
/// (`sample_times` has one entry per member, or a single shared entry) and
/// clusters the endpoints greedily in L²: each endpoint joins the first
/// representative within `δ`, else founds a new cluster.
pub fn omega_limit_approx(
    ev: &Arc<RelaxationEvaluator>,
    f: &Nonlinearity,
    ensemble: &[Field],
    sample_times: &[f64],
    opts: &OmegaOptions,
) -> Result<OmegaReport> {
    if ensemble.is_empty() {
        return Ok(OmegaReport {
            delta: opts.delta.or(opts.r_star.map(|r| 1e-2 * r)).unwrap_or(0.0),
            representatives: Vec::new(),
            cluster_sizes: Vec::new(),
            assignment: Vec::new(),
            endpoint_norms: Vec::new(),
            alpha_norms: opts.alpha_norm.map(|_| Vec::new()),
        });
    }
    if sample_times.len() != 1 && sample_times.len() != ensemble.len() {
        return Err(Error::Parameter(format!(
            "{} sample times for {} members",
            sample_times.len(),
            ensemble.len()
        )));
    }
    let delta = match (opts.delta, opts.r_star) {
        (Some(d), _) => d,
        (None, Some(r)) => 1e-2 * r,
        (None, None) => return Err(Error::Parameter("need a cluster radius or R*".into())),
    };
    let window = opts.alpha_norm.map_or(0.0, |(_, n)| n as f64);
    let ends = crate::par::try_map_range(ensemble.len(), |i| {
        let t_end = sample_times[if sample_times.len() == 1 { 0 } else { i }];
        let phi = HistoryFunction::resolvent(ev.clone(), ensemble[i].clone());
        let traj = march_solve(ev, &phi, f, &MarchOptions::new(t_end + window, opts.step))?;
        let k0 = (t_end / opts.step).round() as usize;
        let alpha = match opts.alpha_norm {
            Some((a, n_max)) => {
                let fields = traj.fields()[k0..].to_vec();
                let times = (0..fields.len()).map(|k| k as f64 * opts.step).collect();
                let chi = HistoryFunction::sampled(times, fields)?;
                let v = weighted_alpha_norm(&chi, a, n_max)?;
                Some(v.value + v.tail)
            }
            None => None,
        };
        Ok::<_, Error>((traj.field(k0).clone(), alpha))
    })?;

    let mut representatives: Vec<Field> = Vec::new();
    let mut cluster_sizes = Vec::new();
    let mut assignment = Vec::with_capacity(ends.len());
    for (u, _) in &ends {
        let mut home = None;
        for (c, r) in representatives.iter().enumerate() {
            if u.l2_dist(r)? <= delta {
                home = Some(c);
                break;
            }
        }
        let c = match home {
            Some(c) => c,
            None => {
                representatives.push(u.clone());
                cluster_sizes.push(0);
                representatives.len() - 1
            }
        };
        cluster_sizes[c] += 1;
        assignment.push(c);
    }
    let alpha_norms = opts
        .alpha_norm
        .map(|_| ends.iter().map(|(_, a)| a.expect("computed")).collect());
    Ok(OmegaReport {
        delta,
        representatives,
        cluster_sizes,
        assignment,
        endpoint_norms: ends.iter().map(|(u, _)| u.l2()).collect(),
        alpha_norms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelSpec;
    use crate::spectral::TorusGrid;
    use std::f64::consts::PI;

    #[test]
    fn empty_ensemble_gives_empty_set() {
        let ev = Arc::new(RelaxationEvaluator::new(KernelSpec::Zero));
        let rep = omega_limit_approx(&ev, &Nonlinearity::cubic(), &[], &[], &OmegaOptions::new(0.1)).unwrap();
        assert_eq!(rep.clusters(), 0);
    }

    #[test]
    fn bistable_flow_has_two_constant_attractors() {
        let g = TorusGrid::new(1, 16, 1.0).unwrap();
        let ev = Arc::new(RelaxationEvaluator::new(KernelSpec::exp_sum(vec![0.2], vec![2.0]).unwrap()));
        let ensemble: Vec<Field> = [1.0, 0.6, -0.8, -2.0, 3.0]
            .iter()
            .map(|&a| Field::from_fn(g, move |x, _| a + 0.1 * (2.0 * PI * x).cos()))
            .collect();
        let mut opts = OmegaOptions::new(0.01);
        opts.r_star = Some(2.0);
        opts.alpha_norm = Some((1.0, 1));
        let rep = omega_limit_approx(&ev, &Nonlinearity::cubic(), &ensemble, &[8.0], &opts).unwrap();
        assert_eq!(rep.clusters(), 2, "{:?}", rep.endpoint_norms);
        assert_eq!(rep.assignment, vec![0, 0, 1, 1, 0]);
        for r in &rep.representatives {
            assert!((r.l2() - 1.0).abs() < 1e-2);
        }
        assert!(rep.max_alpha_norm().unwrap() <= 2.0 * 2.0);
    }
}
