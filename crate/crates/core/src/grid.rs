//! Phase-space discretization of T^d x [-V, V)^d and its dual (k, eta) lattice.
//!
//! The torus side is fixed to 2*pi, so the spatial wavenumbers are the
//! integers k in {-Nx/2, ..., Nx/2 - 1}. Velocity space is the periodized
//! interval [-V, V) with Nv points, whose dual lattice has spacing
//! deta = pi / V and extends to eta_max = pi * Nv / (2 V).
//!
//! Joint frequency magnitudes are always measured in the l1 norm
//! |k, eta| = |k| + |eta|.

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 2;

/// Discretization of phase space; `d` is 1 or 2.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    d: usize,
    nx: usize,
    nv: usize,
    vmax: f64,
}

impl PhaseGrid {
    pub fn new(d: usize, nx: usize, nv: usize, vmax: f64) -> Result<Self> {
        if d == 0 || d > MAX_DIM {
            return Err(Error::Config(format!("grid.d must be 1 or 2, got {d}")));
        }
        if nx < 8 || !nx.is_power_of_two() {
            return Err(Error::Config(format!(
                "grid.Nx must be a power of two >= 8, got {nx}"
            )));
        }
        if nv < 8 || !nv.is_power_of_two() {
            return Err(Error::Config(format!(
                "grid.Nv must be a power of two >= 8, got {nv}"
            )));
        }
        if !(vmax > 0.0) {
            return Err(Error::Config(format!("grid.V must be positive, got {vmax}")));
        }
        Ok(Self { d, nx, nv, vmax })
    }

    pub fn dim(&self) -> usize {
        self.d
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn nv(&self) -> usize {
        self.nv
    }
    pub fn vmax(&self) -> f64 {
        self.vmax
    }

    /// Velocity spacing 2V / Nv.
    pub fn dv(&self) -> f64 {
        2.0 * self.vmax / self.nv as f64
    }

    /// Dual (eta) lattice spacing pi / V.
    pub fn deta(&self) -> f64 {
        std::f64::consts::PI / self.vmax
    }

    /// Largest resolved eta magnitude per axis: deta * Nv / 2.
    pub fn eta_max(&self) -> f64 {
        self.deta() * (self.nv as f64) / 2.0
    }

    /// Spatial spacing 2*pi / Nx.
    pub fn dx(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.nx as f64
    }

    /// Number of spatial lattice points, Nx^d.
    pub fn nx_total(&self) -> usize {
        self.nx.pow(self.d as u32)
    }

    /// Number of velocity lattice points, Nv^d.
    pub fn nv_total(&self) -> usize {
        self.nv.pow(self.d as u32)
    }

    /// Total number of (k, eta) lattice points.
    pub fn len(&self) -> usize {
        self.nx_total() * self.nv_total()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Signed wavenumber for FFT bin `i` of an axis with `n` bins.
    #[inline]
    pub fn signed_index(i: usize, n: usize) -> i64 {
        if i < n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    /// FFT bin for a signed wavenumber, if representable.
    #[inline]
    pub fn bin_of_signed(s: i64, n: usize) -> Option<usize> {
        let half = (n / 2) as i64;
        if s >= -half && s < half {
            Some(s.rem_euclid(n as i64) as usize)
        } else {
            None
        }
    }

    /// Spatial wavenumber vector for the flattened x-index.
    #[inline]
    pub fn k_of_flat(&self, k_flat: usize) -> [i64; MAX_DIM] {
        let mut k = [0i64; MAX_DIM];
        match self.d {
            1 => k[0] = Self::signed_index(k_flat, self.nx),
            _ => {
                k[0] = Self::signed_index(k_flat / self.nx, self.nx);
                k[1] = Self::signed_index(k_flat % self.nx, self.nx);
            }
        }
        k
    }

    /// Signed eta bin indices for the flattened v-index.
    #[inline]
    pub fn n_of_flat(&self, n_flat: usize) -> [i64; MAX_DIM] {
        let mut n = [0i64; MAX_DIM];
        match self.d {
            1 => n[0] = Self::signed_index(n_flat, self.nv),
            _ => {
                n[0] = Self::signed_index(n_flat / self.nv, self.nv);
                n[1] = Self::signed_index(n_flat % self.nv, self.nv);
            }
        }
        n
    }

    /// Eta vector for the flattened v-index.
    #[inline]
    pub fn eta_of_flat(&self, n_flat: usize) -> [f64; MAX_DIM] {
        let n = self.n_of_flat(n_flat);
        let de = self.deta();
        [n[0] as f64 * de, n[1] as f64 * de]
    }

    /// Flat x-index for a signed wavenumber vector.
    pub fn flat_of_k(&self, k: &[i64]) -> Option<usize> {
        match self.d {
            1 => Self::bin_of_signed(k[0], self.nx),
            _ => {
                let a = Self::bin_of_signed(k[0], self.nx)?;
                let b = Self::bin_of_signed(k[1], self.nx)?;
                Some(a * self.nx + b)
            }
        }
    }

    /// Flat v-index for signed eta bin indices.
    pub fn flat_of_n(&self, n: &[i64]) -> Option<usize> {
        match self.d {
            1 => Self::bin_of_signed(n[0], self.nv),
            _ => {
                let a = Self::bin_of_signed(n[0], self.nv)?;
                let b = Self::bin_of_signed(n[1], self.nv)?;
                Some(a * self.nv + b)
            }
        }
    }

    /// Velocity value for FFT bin `m`: -V + m*dv reordered so bin 0 is v = 0
    /// is *not* used; bins follow the natural storage order v_m = -V + m dv.
    #[inline]
    pub fn v_of_bin(&self, m: usize) -> f64 {
        -self.vmax + m as f64 * self.dv()
    }

    /// Velocity vector for the flattened v-storage index (natural order).
    #[inline]
    pub fn v_of_flat(&self, m_flat: usize) -> [f64; MAX_DIM] {
        match self.d {
            1 => [self.v_of_bin(m_flat), 0.0],
            _ => [self.v_of_bin(m_flat / self.nv), self.v_of_bin(m_flat % self.nv)],
        }
    }

    /// Spatial point for the flattened x-storage index.
    #[inline]
    pub fn x_of_flat(&self, j_flat: usize) -> [f64; MAX_DIM] {
        let dx = self.dx();
        match self.d {
            1 => [j_flat as f64 * dx, 0.0],
            _ => [(j_flat / self.nx) as f64 * dx, (j_flat % self.nx) as f64 * dx],
        }
    }

    /// l1 magnitude |k| + |eta| of a joint frequency.
    #[inline]
    pub fn l1_norm(k: &[i64], eta: &[f64]) -> f64 {
        let ks: i64 = k.iter().map(|x| x.abs()).sum();
        let es: f64 = eta.iter().map(|x| x.abs()).sum();
        ks as f64 + es
    }

    /// Largest l1 joint-frequency magnitude representable on the lattice.
    pub fn xi_max(&self) -> f64 {
        self.d as f64 * (self.nx as f64 / 2.0 + self.eta_max())
    }

    /// Checks a time against the lattice alignment rule t = m * deta.
    pub fn aligned_steps(&self, t: f64) -> Result<i64> {
        let de = self.deta();
        let m = (t / de).round();
        if (t - m * de).abs() > 1e-9 * de.max(1.0) {
            Err(Error::NonAlignedTime { t, deta: de })
        } else {
            Ok(m as i64)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_quantities() {
        let g = PhaseGrid::new(1, 32, 512, 8.0).unwrap();
        assert_eq!(g.dv(), 16.0 / 512.0);
        assert!((g.deta() * (g.nv() as f64 / 2.0) - g.eta_max()).abs() < 1e-14);
        assert!((g.eta_max() - std::f64::consts::PI * 512.0 / 16.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(PhaseGrid::new(1, 12, 64, 8.0).is_err());
        assert!(PhaseGrid::new(1, 32, 4, 8.0).is_err());
        assert!(PhaseGrid::new(1, 32, 64, 0.0).is_err());
        assert!(PhaseGrid::new(3, 32, 64, 8.0).is_err());
    }

    #[test]
    fn signed_index_round_trip() {
        let g = PhaseGrid::new(1, 16, 32, 4.0).unwrap();
        for i in 0..16 {
            let k = g.k_of_flat(i);
            assert_eq!(g.flat_of_k(&k), Some(i));
        }
        for i in 0..32 {
            let n = g.n_of_flat(i);
            assert_eq!(g.flat_of_n(&n), Some(i));
        }
        assert_eq!(PhaseGrid::bin_of_signed(8, 16), None);
        assert_eq!(PhaseGrid::bin_of_signed(-8, 16), Some(8));
    }

    #[test]
    fn two_dimensional_indexing() {
        let g = PhaseGrid::new(2, 8, 16, 4.0).unwrap();
        assert_eq!(g.nx_total(), 64);
        assert_eq!(g.nv_total(), 256);
        let k = g.k_of_flat(9); // (1, 1)
        assert_eq!(k, [1, 1]);
        assert_eq!(g.flat_of_k(&[1, 1]), Some(9));
        assert_eq!(g.flat_of_k(&[-1, -1]), Some(7 * 8 + 7));
    }

    #[test]
    fn alignment_rule() {
        let g = PhaseGrid::new(1, 16, 64, 8.0).unwrap();
        let de = g.deta();
        assert_eq!(g.aligned_steps(3.0 * de).unwrap(), 3);
        assert!(g.aligned_steps(1.5 * de).is_err());
    }
}
