//! Complex Fourier coefficients over the (k, eta) lattice, with frame
//! bookkeeping and the lab <-> gliding lattice shift.
//!
//! Coefficients follow the continuum normalization
//!   fhat_k(eta) = (2 pi)^{-d} int e^{-i x k - i v eta} f(x, v) dx dv,
//! so Parseval holds exactly on the lattice:
//!   sum_{k,n} |fhat_k(eta_n)|^2 deta^d = int |f|^2 dx dv (trapezoid).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::{PhaseGrid, MAX_DIM};

/// Which streaming frame the coefficients live in. `Gliding { t }` stores
/// fhat_k(eta) = hhat_k(eta - k t) relative to the lab spectrum hhat at time t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Frame {
    Lab,
    Gliding { t: f64 },
}

#[derive(Debug, Clone)]
pub struct FieldSpectrum {
    pub grid: PhaseGrid,
    pub frame: Frame,
    pub coeffs: Vec<Complex64>,
}

/// Result of a frame conversion: the shifted spectrum plus the l2 mass of
/// coefficients pushed off the eta lattice.
#[derive(Debug, Clone)]
pub struct ShiftOutcome {
    pub spectrum: FieldSpectrum,
    pub dropped_mass: f64,
}

impl FieldSpectrum {
    pub fn zero(grid: PhaseGrid, frame: Frame) -> Self {
        let n = grid.len();
        Self {
            grid,
            frame,
            coeffs: vec![Complex64::default(); n],
        }
    }

    /// Build from a closure over (k, eta).
    pub fn from_fn<F>(grid: PhaseGrid, frame: Frame, f: F) -> Self
    where
        F: Fn(&[i64], &[f64]) -> Complex64,
    {
        let nvt = grid.nv_total();
        let d = grid.dim();
        let mut coeffs = vec![Complex64::default(); grid.len()];
        for kf in 0..grid.nx_total() {
            let k = grid.k_of_flat(kf);
            for nf in 0..nvt {
                let eta = grid.eta_of_flat(nf);
                coeffs[kf * nvt + nf] = f(&k[..d], &eta[..d]);
            }
        }
        Self { grid, frame, coeffs }
    }

    #[inline]
    pub fn get(&self, k: &[i64], n: &[i64]) -> Complex64 {
        match (self.grid.flat_of_k(k), self.grid.flat_of_n(n)) {
            (Some(kf), Some(nf)) => self.coeffs[kf * self.grid.nv_total() + nf],
            _ => Complex64::default(),
        }
    }

    #[inline]
    pub fn set(&mut self, k: &[i64], n: &[i64], value: Complex64) {
        if let (Some(kf), Some(nf)) = (self.grid.flat_of_k(k), self.grid.flat_of_n(n)) {
            let nvt = self.grid.nv_total();
            self.coeffs[kf * nvt + nf] = value;
        }
    }

    /// Squared L^2 norm of the represented field (deta^d weighted sum).
    pub fn l2_norm_sq(&self) -> f64 {
        let w = self.grid.deta().powi(self.grid.dim() as i32);
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() * w
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest deviation from the reality constraint
    /// coeff(-k, -eta) = conj(coeff(k, eta)), relative to the field scale.
    pub fn reality_error(&self) -> f64 {
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        let nvt = self.grid.nv_total();
        let mut worst = 0.0f64;
        for kf in 0..self.grid.nx_total() {
            let k = self.grid.k_of_flat(kf);
            let mk = [-k[0], -k[1]];
            let Some(mkf) = self.grid.flat_of_k(&mk) else {
                continue;
            };
            for nf in 0..nvt {
                let n = self.grid.n_of_flat(nf);
                let mn = [-n[0], -n[1]];
                let Some(mnf) = self.grid.flat_of_n(&mn) else {
                    continue;
                };
                let a = self.coeffs[kf * nvt + nf];
                let b = self.coeffs[mkf * nvt + mnf].conj();
                worst = worst.max((a - b).norm());
            }
        }
        worst / scale
    }

    /// Symmetrize onto the reality constraint; unpaired Nyquist bins are
    /// zeroed.
    pub fn enforce_reality(&mut self) {
        let nvt = self.grid.nv_total();
        for kf in 0..self.grid.nx_total() {
            let k = self.grid.k_of_flat(kf);
            let mk = [-k[0], -k[1]];
            let mkf = self.grid.flat_of_k(&mk);
            for nf in 0..nvt {
                let n = self.grid.n_of_flat(nf);
                let mn = [-n[0], -n[1]];
                let mnf = self.grid.flat_of_n(&mn);
                match (mkf, mnf) {
                    (Some(mkf), Some(mnf)) => {
                        let i = kf * nvt + nf;
                        let j = mkf * nvt + mnf;
                        if i <= j {
                            let avg = 0.5 * (self.coeffs[i] + self.coeffs[j].conj());
                            self.coeffs[i] = avg;
                            self.coeffs[j] = avg.conj();
                        }
                    }
                    _ => {
                        self.coeffs[kf * nvt + nf] = Complex64::default();
                    }
                }
            }
        }
    }

    /// |coeff(0, 0)| relative to the field scale; this is |rho_hat_0| for a
    /// lab-frame spectrum.
    pub fn mean_mode_magnitude(&self) -> f64 {
        let zero = [0i64; MAX_DIM];
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        self.get(&zero, &zero).norm() / scale
    }

    /// Field values on the (x, v) storage grid.
    pub fn to_real(&self) -> Vec<Complex64> {
        let mut data = self.coeffs.clone();
        let d = self.grid.dim() as i32;
        fft::inverse_v(&mut data, &self.grid);
        fft::inverse_x(&mut data, &self.grid);
        fft::scale(&mut data, (1.0 / (2.0 * self.grid.vmax())).powi(d));
        data
    }

    /// Build a spectrum from field values on the (x, v) storage grid.
    pub fn from_real(grid: PhaseGrid, mut data: Vec<Complex64>, frame: Frame) -> Self {
        let d = grid.dim() as i32;
        fft::forward_x(&mut data, &grid);
        fft::forward_v(&mut data, &grid);
        fft::scale(&mut data, (grid.dv() / grid.nx() as f64).powi(d));
        Self {
            grid,
            frame,
            coeffs: data,
        }
    }

    /// Lattice-exact frame change lab -> gliding at time t (a multiple of
    /// deta). Coefficients shifted past the eta boundary are dropped and
    /// their l2 mass reported.
    pub fn to_gliding(&self, t: f64) -> Result<ShiftOutcome> {
        match self.frame {
            Frame::Lab => self.shifted(t, Frame::Gliding { t }),
            Frame::Gliding { .. } => Err(Error::GridMismatch(
                "to_gliding expects a lab-frame spectrum".into(),
            )),
        }
    }

    /// Inverse frame change gliding -> lab.
    pub fn from_gliding(&self) -> Result<ShiftOutcome> {
        match self.frame {
            Frame::Gliding { t } => self.shifted(-t, Frame::Lab),
            Frame::Lab => Err(Error::GridMismatch(
                "from_gliding expects a gliding-frame spectrum".into(),
            )),
        }
    }

    /// Shift eta by -k*t per mode: out_k(eta) = self_k(eta - k t).
    fn shifted(&self, t: f64, frame: Frame) -> Result<ShiftOutcome> {
        let steps = self.grid.aligned_steps(t)?;
        let d = self.grid.dim() as i32;
        let nvt = self.grid.nv_total();
        let w = self.grid.deta().powi(d);
        let mut out = FieldSpectrum::zero(self.grid.clone(), frame);
        let mut dropped = 0.0;
        for kf in 0..self.grid.nx_total() {
            let k = self.grid.k_of_flat(kf);
            for nf in 0..nvt {
                let src = self.coeffs[kf * nvt + nf];
                if src == Complex64::default() {
                    continue;
                }
                let n = self.grid.n_of_flat(nf);
                // source at eta_n lands at eta_n + k t
                let target = [n[0] + k[0] * steps, n[1] + k[1] * steps];
                match self.grid.flat_of_n(&target) {
                    Some(tf) => out.coeffs[kf * nvt + tf] = src,
                    None => dropped += src.norm_sqr() * w,
                }
            }
        }
        Ok(ShiftOutcome {
            spectrum: out,
            dropped_mass: dropped,
        })
    }

    /// Pointwise product of the represented fields, computed in real space
    /// with 2/3-rule dealiasing in x only.
    pub fn product(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("product of different grids".into()));
        }
        let a = self.to_real();
        let b = other.to_real();
        let prod: Vec<Complex64> = a.iter().zip(b.iter()).map(|(x, y)| x * y).collect();
        let mut out = Self::from_real(self.grid.clone(), prod, self.frame);
        out.dealias_x();
        Ok(out)
    }

    /// Zero all modes with |k_i| > Nx/3 on any x axis.
    pub fn dealias_x(&mut self) {
        let cut = (self.grid.nx() / 3) as i64;
        let nvt = self.grid.nv_total();
        let d = self.grid.dim();
        for kf in 0..self.grid.nx_total() {
            let k = self.grid.k_of_flat(kf);
            if k[..d].iter().any(|&ki| ki.abs() > cut) {
                for c in &mut self.coeffs[kf * nvt..(kf + 1) * nvt] {
                    *c = Complex64::default();
                }
            }
        }
    }

    pub fn add_scaled(&mut self, other: &Self, factor: Complex64) {
        for (a, b) in self.coeffs.iter_mut().zip(other.coeffs.iter()) {
            *a += factor * b;
        }
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("spectra on different grids".into()));
        }
        Ok(())
    }
}
