//! Thin strided-FFT helpers over flattened phase-space arrays.
//!
//! Transform conventions (per axis):
//!   forward x:  sum_j e^{-2 pi i j k / Nx}
//!   forward v:  (-1)^n sum_m e^{-2 pi i m n / Nv}
//! The (-1)^n factor realizes the v-domain offset -V of the storage grid
//! v_m = -V + m dv, so that the bin n carries exactly eta_n = n * deta.

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::grid::PhaseGrid;

#[derive(Default)]
struct PlanCache {
    plans: HashMap<(usize, bool), Arc<dyn Fft<f64>>>,
}

static CACHE: Mutex<Option<PlanCache>> = Mutex::new(None);

fn plan(len: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    let mut guard = CACHE.lock().unwrap();
    let cache = guard.get_or_insert_with(PlanCache::default);
    cache
        .plans
        .entry((len, forward))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            planner.plan_fft(
                len,
                if forward {
                    FftDirection::Forward
                } else {
                    FftDirection::Inverse
                },
            )
        })
        .clone()
}

/// DFT of length `len` along every line of the given stride pattern.
fn fft_along(data: &mut [Complex64], len: usize, stride: usize, forward: bool) {
    let fft = plan(len, forward);
    let total = data.len();
    debug_assert_eq!(total % len, 0);
    let lines = total / len;
    let mut scratch = vec![Complex64::default(); len];
    for line in 0..lines {
        let base = (line / stride) * (stride * len) + (line % stride);
        if stride == 1 {
            fft.process(&mut data[base..base + len]);
        } else {
            for (i, s) in scratch.iter_mut().enumerate() {
                *s = data[base + i * stride];
            }
            fft.process(&mut scratch);
            for (i, s) in scratch.iter().enumerate() {
                data[base + i * stride] = *s;
            }
        }
    }
}

/// Multiply by (-1)^n along one v-axis (n = FFT bin index).
fn apply_offset_sign(data: &mut [Complex64], len: usize, stride: usize) {
    let total = data.len();
    let lines = total / len;
    for line in 0..lines {
        let base = (line / stride) * (stride * len) + (line % stride);
        for n in (1..len).step_by(2) {
            data[base + n * stride] = -data[base + n * stride];
        }
    }
}

/// Axis descriptors (length, stride) of the flattened layout
/// [x1][x2]..[v1][v2] with the last axis contiguous.
pub fn x_axes(grid: &PhaseGrid) -> Vec<(usize, usize)> {
    let nx = grid.nx();
    let nvt = grid.nv_total();
    match grid.dim() {
        1 => vec![(nx, nvt)],
        _ => vec![(nx, nx * nvt), (nx, nvt)],
    }
}

pub fn v_axes(grid: &PhaseGrid) -> Vec<(usize, usize)> {
    let nv = grid.nv();
    match grid.dim() {
        1 => vec![(nv, 1)],
        _ => vec![(nv, nv), (nv, 1)],
    }
}

/// Forward transform along all x axes (no normalization).
pub fn forward_x(data: &mut [Complex64], grid: &PhaseGrid) {
    for (len, stride) in x_axes(grid) {
        fft_along(data, len, stride, true);
    }
}

pub fn inverse_x(data: &mut [Complex64], grid: &PhaseGrid) {
    for (len, stride) in x_axes(grid) {
        fft_along(data, len, stride, false);
    }
}

/// Forward transform along all v axes including the (-1)^n offset factors.
pub fn forward_v(data: &mut [Complex64], grid: &PhaseGrid) {
    for (len, stride) in v_axes(grid) {
        fft_along(data, len, stride, true);
        apply_offset_sign(data, len, stride);
    }
}

pub fn inverse_v(data: &mut [Complex64], grid: &PhaseGrid) {
    for (len, stride) in v_axes(grid) {
        apply_offset_sign(data, len, stride);
        fft_along(data, len, stride, false);
    }
}

pub fn scale(data: &mut [Complex64], s: f64) {
    for z in data.iter_mut() {
        *z *= s;
    }
}

/// Strided DFT exposed for callers that transform non-phase-space arrays
/// (pure x-arrays of the field solve).
pub fn fft_along_public(data: &mut [Complex64], len: usize, stride: usize, forward: bool) {
    fft_along(data, len, stride, forward);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_then_inverse_is_n() {
        let grid = PhaseGrid::new(1, 8, 16, 2.0).unwrap();
        let mut data: Vec<Complex64> = (0..grid.len())
            .map(|i| Complex64::new(i as f64, (i % 7) as f64))
            .collect();
        let orig = data.clone();
        forward_x(&mut data, &grid);
        inverse_x(&mut data, &grid);
        scale(&mut data, 1.0 / grid.nx_total() as f64);
        for (a, b) in data.iter().zip(orig.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
        forward_v(&mut data, &grid);
        inverse_v(&mut data, &grid);
        scale(&mut data, 1.0 / grid.nv_total() as f64);
        for (a, b) in data.iter().zip(orig.iter()) {
            assert!((a - b).norm() < 1e-11);
        }
    }
}
