use serde::Serialize;

use super::history::HistoryFunction;
use super::trajectory::Trajectory;
use crate::Result;

/// `max_n e^{−γ t_n} ‖u(t_n)‖₂`.
pub fn bielecki_norm(u: &Trajectory, gamma: f64) -> f64 {
    u.fields()
        .iter()
        .enumerate()
        .map(|(n, f)| (-gamma * u.time(n)).exp() * f.l2())
        .fold(0.0, f64::max)
}

/// A truncated series together with a bound on what was cut off.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    pub tail: f64,
}

/// Samples analytic histories this densely per unit time.
const ANALYTIC_SAMPLES_PER_UNIT: usize = 64;

/// Times in `[a, b]` where the sup of `‖φ(t) − ψ(t)‖` over the interval is
/// attained for piecewise-linear data: both endpoints and every knot.
fn probe_times(hs: &[&HistoryFunction], a: f64, b: f64) -> Vec<f64> {
    let mut ts = vec![a, b];
    for h in hs {
        match h.knots() {
            Some(k) => ts.extend(k.iter().copied().filter(|&t| t > a && t < b)),
            None => {
                let n = ((b - a) * ANALYTIC_SAMPLES_PER_UNIT as f64).ceil().max(1.0) as usize;
                ts.extend((1..n).map(|i| a + (b - a) * i as f64 / n as f64));
            }
        }
    }
    ts.sort_by(f64::total_cmp);
    ts.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * y.abs().max(1.0));
    ts
}

/// `ρ(φ, ψ) = Σ_{n=1}^{N} 2⁻ⁿ ρ_n`, `ρ_n = s_n/(1 + s_n)`,
/// `s_n = sup_{[0,n]} ‖φ − ψ‖₂`; the neglected tail is at most `2^{−N}`.
///
/// For sampled histories the sup is exact: the difference of two
/// piecewise-linear functions peaks at a knot.
pub fn metric_rho(phi: &HistoryFunction, psi: &HistoryFunction, n_max: usize) -> Result<SeriesValue> {
    if n_max == 0 {
        return Ok(SeriesValue { value: 0.0, tail: 1.0 });
    }
    let ts = probe_times(&[phi, psi], 0.0, n_max as f64);
    let dists = crate::par::try_map_slice(&ts, |&t| phi.eval(t)?.l2_dist(&psi.eval(t)?))?;
    let mut value = 0.0;
    let mut sup: f64 = 0.0;
    let mut k = 0;
    for n in 1..=n_max {
        while k < ts.len() && ts[k] <= n as f64 {
            sup = sup.max(dists[k]);
            k += 1;
        }
        value += 0.5f64.powi(n as i32) * sup / (1.0 + sup);
    }
    Ok(SeriesValue {
        value,
        tail: 0.5f64.powi(n_max as i32),
    })
}

/// `‖φ‖_α = ‖φ(0)‖₂ + Σ_{N=1}^{N_max} 2^{−N} N^{−α} sup_{[1/N, N]} ‖φ‖₂`.
///
/// The tail is estimated by continuing the series with the last computed
/// `sup`, which is exact for histories whose norm is constant beyond `N_max`.
pub fn weighted_alpha_norm(phi: &HistoryFunction, alpha: f64, n_max: usize) -> Result<SeriesValue> {
    let mut value = phi.eval(0.0)?.l2();
    let mut last = 0.0;
    for n in 1..=n_max {
        let nf = n as f64;
        let ts = probe_times(&[phi], 1.0 / nf, nf);
        let norms = crate::par::try_map_slice(&ts, |&t| Ok(phi.eval(t)?.l2()))?;
        last = norms.iter().copied().fold(0.0, f64::max);
        value += 0.5f64.powi(n as i32) * nf.powf(-alpha) * last;
    }
    let tail: f64 = (n_max + 1..n_max + 60)
        .map(|n| 0.5f64.powi(n as i32) * (n as f64).powf(-alpha) * last)
        .sum();
    Ok(SeriesValue { value, tail })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{Field, TorusGrid};
    use approx::assert_relative_eq;

    fn grid() -> TorusGrid {
        TorusGrid::new(1, 8, 1.0).unwrap()
    }

    #[test]
    fn bielecki_examples() {
        let g = grid();
        let zero = Trajectory::new(0.1, vec![Field::zeros(g); 5]).unwrap();
        assert_eq!(bielecki_norm(&zero, 2.0), 0.0);
        let ones = Trajectory::new(0.1, vec![Field::constant(g, 1.0); 5]).unwrap();
        assert_eq!(bielecki_norm(&ones, 3.0), 1.0);
        let gamma = 1.3;
        let growing = Trajectory::new(
            0.1,
            (0..5).map(|n| Field::constant(g, (gamma * 0.1 * n as f64).exp())).collect(),
        )
        .unwrap();
        assert_relative_eq!(bielecki_norm(&growing, gamma), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn rho_examples() {
        let g = grid();
        let a = HistoryFunction::constant(Field::constant(g, 0.0), 10.0).unwrap();
        let b = HistoryFunction::constant(Field::constant(g, 0.5), 10.0).unwrap();
        assert_eq!(metric_rho(&a, &a, 6).unwrap().value, 0.0);
        let c = 0.5;
        let r = metric_rho(&a, &b, 6).unwrap();
        assert_relative_eq!(r.value, c / (1.0 + c) * (1.0 - 0.5f64.powi(6)), max_relative = 1e-14);
        assert_eq!(r.tail, 0.5f64.powi(6));
        assert!(r.value <= 1.0);
    }

    #[test]
    fn alpha_norm_examples() {
        let g = grid();
        let zero = HistoryFunction::constant(Field::zeros(g), 10.0).unwrap();
        assert_eq!(weighted_alpha_norm(&zero, 1.0, 8).unwrap().value, 0.0);
        let one = HistoryFunction::constant(Field::constant(g, 1.0), 10.0).unwrap();
        let alpha = 0.7;
        let want = 1.0 + (1..=8).map(|n| 0.5f64.powi(n) * (n as f64).powf(-alpha)).sum::<f64>();
        assert_relative_eq!(weighted_alpha_norm(&one, alpha, 8).unwrap().value, want, max_relative = 1e-14);
        let steep = weighted_alpha_norm(&one, 60.0, 8).unwrap();
        assert!((steep.value - 1.5).abs() < 1e-15);
    }
}
