use super::field::Field;
use crate::{Error, Result};

fn check_p(p: u32) -> Result<()> {
    match p {
        2 | 4 | 6 => Ok(()),
        _ => Err(Error::UnsupportedNorm(p)),
    }
}

fn powered(v: f64, p: u32) -> f64 {
    v.abs().powi(p as i32)
}

/// Grid Lᵖ norm `(|cell| Σ |v|ᵖ)^{1/p}` for `p ∈ {2, 4, 6}`.
pub fn lp_norm(v: &Field, p: u32) -> Result<f64> {
    check_p(p)?;
    let sum: f64 = v.values().iter().map(|&x| powered(x, p)).sum();
    Ok((v.grid().cell() * sum).powf(1.0 / p as f64))
}

/// `∫ w |v|^{p−2} v dx` by the same cell quadrature as [`lp_norm`].
pub fn dissipation_pairing(w: &Field, v: &Field, p: u32) -> Result<f64> {
    check_p(p)?;
    if w.grid() != v.grid() {
        return Err(Error::GridMismatch);
    }
    let sum: f64 = w
        .values()
        .iter()
        .zip(v.values())
        .map(|(&a, &b)| a * b.abs().powi(p as i32 - 2) * b)
        .sum();
    Ok(v.grid().cell() * sum)
}

/// Lᵖ norm of `v` restricted to cells with `|x| > R`; needs `0 < R < L/2`.
pub fn tail_mass(v: &Field, radius: f64, p: u32) -> Result<f64> {
    check_p(p)?;
    let grid = v.grid();
    let limit = 0.5 * grid.length();
    if !(radius > 0.0 && radius < limit) {
        return Err(Error::RadiusOutOfRange { radius, limit });
    }
    let sum: f64 = v
        .values()
        .iter()
        .enumerate()
        .filter(|(i, _)| grid.radius(*i) > radius)
        .map(|(_, &x)| powered(x, p))
        .sum();
    Ok((grid.cell() * sum).powf(1.0 / p as f64))
}
