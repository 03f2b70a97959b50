use std::f64::consts::PI;

use serde::Serialize;

use crate::{Error, Result};

/// A `d`-dimensional periodic box `[−L/2, L/2)^d` with `N` points per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TorusGrid {
    dim: usize,
    n: usize,
    length: f64,
}

impl TorusGrid {
    pub const MAX_POINTS: usize = 1024;

    pub fn new(dim: usize, n: usize, length: f64) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::Parameter(format!("dimension must be 1 or 2, got {dim}")));
        }
        if !n.is_power_of_two() || !(2..=Self::MAX_POINTS).contains(&n) {
            return Err(Error::Parameter(format!(
                "points per axis must be a power of two in [2, {}], got {n}",
                Self::MAX_POINTS
            )));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::Parameter(format!("period must be positive, got {length}")));
        }
        Ok(Self { dim, n, length })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Total number of grid points `N^d`.
    pub fn size(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Quadrature weight of one cell, `(L/N)^d`.
    pub fn cell(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// `|Ω| = L^d`.
    pub fn measure(&self) -> f64 {
        self.length.powi(self.dim as i32)
    }

    /// Coordinate of index `i` along one axis.
    pub fn coord(&self, i: usize) -> f64 {
        -0.5 * self.length + i as f64 * self.spacing()
    }

    /// Coordinates of flat (row-major) index `idx`; unused trailing entries are 0.
    pub fn point(&self, idx: usize) -> [f64; 2] {
        match self.dim {
            1 => [self.coord(idx), 0.0],
            _ => [self.coord(idx / self.n), self.coord(idx % self.n)],
        }
    }

    /// Euclidean distance of grid point `idx` from the origin.
    pub fn radius(&self, idx: usize) -> f64 {
        let [x, y] = self.point(idx);
        x.hypot(y)
    }

    /// Signed wavenumber of FFT index `k`.
    pub fn wavenumber(&self, k: usize) -> i64 {
        if k <= self.n / 2 {
            k as i64
        } else {
            k as i64 - self.n as i64
        }
    }

    /// `|ξ|²` in integer units for flat FFT index `idx`.
    pub fn mode_key(&self, idx: usize) -> u64 {
        let q = |k: usize| {
            let w = self.wavenumber(k);
            (w * w) as u64
        };
        match self.dim {
            1 => q(idx),
            _ => q(idx / self.n) + q(idx % self.n),
        }
    }

    /// Symbol of `−Δ` for an integer key, `(2π/L)² key`.
    pub fn mu_of_key(&self, key: u64) -> f64 {
        let k0 = 2.0 * PI / self.length;
        k0 * k0 * key as f64
    }

    /// Symbol of `−Δ` at flat FFT index `idx`.
    pub fn mu(&self, idx: usize) -> f64 {
        self.mu_of_key(self.mode_key(idx))
    }

    /// Modes grouped by their symbol value.
    pub fn mode_table(&self) -> ModeTable {
        let raw: Vec<u64> = (0..self.size()).map(|i| self.mode_key(i)).collect();
        let mut keys = raw.clone();
        keys.sort_unstable();
        keys.dedup();
        let index = raw
            .iter()
            .map(|k| keys.binary_search(k).expect("key present") as u32)
            .collect();
        let mus = keys.iter().map(|&k| self.mu_of_key(k)).collect();
        ModeTable { keys, mus, index }
    }
}

/// Distinct symbols `μ` of a grid and, for every FFT index, which one it has.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeTable {
    pub keys: Vec<u64>,
    pub mus: Vec<f64>,
    pub index: Vec<u32>,
}

impl ModeTable {
    pub fn distinct(&self) -> usize {
        self.keys.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(TorusGrid::new(3, 8, 1.0).is_err());
        assert!(TorusGrid::new(1, 12, 1.0).is_err());
        assert!(TorusGrid::new(1, 2048, 1.0).is_err());
        assert!(TorusGrid::new(2, 8, 0.0).is_err());
    }

    #[test]
    fn symbols() {
        let g = TorusGrid::new(1, 8, 2.0 * PI).unwrap();
        let mus: Vec<f64> = (0..8).map(|i| g.mu(i)).collect();
        assert_eq!(mus, vec![0.0, 1.0, 4.0, 9.0, 16.0, 9.0, 4.0, 1.0]);
        assert_eq!(g.coord(0), -PI);
        let t = g.mode_table();
        assert_eq!(t.keys, vec![0, 1, 4, 9, 16]);
        assert_eq!(t.index[7], 1);
    }

    #[test]
    fn two_d_keys_deduplicate() {
        let g = TorusGrid::new(2, 16, 1.0).unwrap();
        let t = g.mode_table();
        assert!(t.distinct() < g.size() / 4);
        assert_eq!(g.mode_key(16 + 1), 2);
        assert_eq!(g.cell(), 1.0 / 256.0);
    }
}
