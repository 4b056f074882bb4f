//! Littlewood-Paley dyadic decomposition and the Bony paraproduct split.
//!
//! Shells are radial in the l1 joint magnitude |Xi| = |k| + |eta|. The base
//! cutoff psi is a C^3 smoothstep profile: psi = 1 on |Xi| <= 1/2, 0 on
//! |Xi| >= 3/4. phi(Xi) = psi(Xi/2) - psi(Xi) is supported on
//! [1/2, 3/2] and the rescalings phi_N(Xi) = phi(Xi/N) tile frequency space:
//!   1 = psi + sum_{N in 2^N} phi_N  (pointwise, telescoping).

use num_complex::Complex64;

use crate::error::Result;
use crate::grid::PhaseGrid;
use crate::spectrum::FieldSpectrum;

/// Order-3 smoothstep: C^3, 0 at x<=0, 1 at x>=1.
#[inline]
fn smoothstep3(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let x4 = x * x * x * x;
        x4 * (35.0 - 84.0 * x + 70.0 * x * x - 20.0 * x * x * x)
    }
}

/// Base low cutoff: 1 on [0, 1/2], 0 on [3/4, inf).
#[inline]
pub fn psi(r: f64) -> f64 {
    1.0 - smoothstep3((r - 0.5) * 4.0)
}

/// Annular profile supported on [1/2, 3/2].
#[inline]
pub fn phi(r: f64) -> f64 {
    psi(r / 2.0) - psi(r)
}

/// A dyadic shell index: 1/2 denotes the psi (low) shell, the rest are
/// powers of two.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DyadicShell(pub f64);

impl DyadicShell {
    pub fn is_low(&self) -> bool {
        self.0 == 0.5
    }

    /// Shell multiplier evaluated at the l1 magnitude r.
    pub fn multiplier(&self, r: f64) -> f64 {
        if self.is_low() {
            psi(r)
        } else {
            phi(r / self.0)
        }
    }
}

/// All shells needed to tile the lattice of `grid`: {1/2, 1, 2, ..., Nmax}
/// with Nmax the smallest power of two >= xi_max.
pub fn shells_for(grid: &PhaseGrid) -> Vec<DyadicShell> {
    let xi_max = grid.xi_max();
    let mut out = vec![DyadicShell(0.5)];
    let mut n = 1.0f64;
    loop {
        out.push(DyadicShell(n));
        if n >= xi_max {
            break;
        }
        n *= 2.0;
    }
    out
}

fn apply_radial<F: Fn(f64) -> f64>(spec: &FieldSpectrum, f: F) -> FieldSpectrum {
    let grid = &spec.grid;
    let d = grid.dim();
    let nvt = grid.nv_total();
    let mut out = spec.clone();
    for kf in 0..grid.nx_total() {
        let k = grid.k_of_flat(kf);
        for nf in 0..nvt {
            let eta = grid.eta_of_flat(nf);
            let r = PhaseGrid::l1_norm(&k[..d], &eta[..d]);
            out.coeffs[kf * nvt + nf] *= f(r);
        }
    }
    out
}

/// Projection onto one dyadic shell.
pub fn lp_project(spec: &FieldSpectrum, shell: DyadicShell) -> FieldSpectrum {
    apply_radial(spec, |r| shell.multiplier(r))
}

/// Projection onto frequencies below N: psi + sum_{N' < N} phi_{N'}, which
/// telescopes to the single multiplier psi(|Xi| / N).
pub fn lp_below(spec: &FieldSpectrum, n: f64) -> FieldSpectrum {
    assert!(n >= 1.0 && (n.log2().fract() == 0.0), "N must be dyadic >= 1");
    apply_radial(spec, |r| psi(r / n))
}

/// The three paraproduct components (T_f g, T_g f, remainder R).
pub struct Paraproduct {
    pub low_high: FieldSpectrum,
    pub high_low: FieldSpectrum,
    pub remainder: FieldSpectrum,
}

/// Bony decomposition of the pointwise product fg:
///   fg = sum_{N>=8} f_{<N/8} g_N + sum_{N>=8} f_N g_{<N/8}
///        + sum_N sum_{N/8 <= N' <= 8N} f_N g_{N'}.
/// Products are formed in real space with 2/3 dealiasing in x.
pub fn paraproduct_split(f: &FieldSpectrum, g: &FieldSpectrum) -> Result<Paraproduct> {
    f.check_same_grid(g)?;
    let grid = f.grid.clone();
    let shells = shells_for(&grid);

    // real-space representations of every shell projection
    let f_shell_real: Vec<Vec<Complex64>> = shells
        .iter()
        .map(|&s| lp_project(f, s).to_real())
        .collect();
    let g_shell_real: Vec<Vec<Complex64>> = shells
        .iter()
        .map(|&s| lp_project(g, s).to_real())
        .collect();

    let npts = grid.len();
    let mut low_high = vec![Complex64::default(); npts];
    let mut high_low = vec![Complex64::default(); npts];
    let mut remainder = vec![Complex64::default(); npts];

    for (i, &si) in shells.iter().enumerate() {
        if !si.is_low() && si.0 >= 8.0 {
            let f_low = lp_below(f, si.0 / 8.0).to_real();
            let g_low = lp_below(g, si.0 / 8.0).to_real();
            for p in 0..npts {
                low_high[p] += f_low[p] * g_shell_real[i][p];
                high_low[p] += f_shell_real[i][p] * g_low[p];
            }
        }
        for (j, &sj) in shells.iter().enumerate() {
            if sj.0 >= si.0 / 8.0 && sj.0 <= 8.0 * si.0 {
                for p in 0..npts {
                    remainder[p] += f_shell_real[i][p] * g_shell_real[j][p];
                }
            }
        }
    }

    let finish = |data: Vec<Complex64>| {
        let mut s = FieldSpectrum::from_real(grid.clone(), data, f.frame);
        s.dealias_x();
        s
    };
    Ok(Paraproduct {
        low_high: finish(low_high),
        high_low: finish(high_low),
        remainder: finish(remainder),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::Frame;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn test_grid() -> PhaseGrid {
        PhaseGrid::new(1, 32, 64, 4.0).unwrap()
    }

    fn random_band_limited(grid: &PhaseGrid, seed: u64) -> FieldSpectrum {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = FieldSpectrum::zero(grid.clone(), Frame::Lab);
        let kcut = (grid.nx() / 3) as i64;
        let ncut = (grid.nv() / 3) as i64;
        for k in -kcut..=kcut {
            for n in -ncut..=ncut {
                f.set(
                    &[k],
                    &[n],
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                );
            }
        }
        f.enforce_reality();
        f
    }

    #[test]
    fn profile_supports() {
        assert_eq!(psi(0.0), 1.0);
        assert_eq!(psi(0.5), 1.0);
        assert_eq!(psi(0.76), 0.0);
        assert!(psi(0.6) > 0.0 && psi(0.6) < 1.0);
        assert_eq!(phi(0.45), 0.0);
        assert_eq!(phi(1.0), 1.0);
        assert_eq!(phi(1.51), 0.0);
    }

    #[test]
    fn partition_of_unity_on_lattice() {
        let grid = test_grid();
        let shells = shells_for(&grid);
        let mut worst = 0.0f64;
        for kf in 0..grid.nx_total() {
            let k = grid.k_of_flat(kf);
            for nf in 0..grid.nv_total() {
                let eta = grid.eta_of_flat(nf);
                let r = PhaseGrid::l1_norm(&k[..1], &eta[..1]);
                let total: f64 = shells.iter().map(|s| s.multiplier(r)).sum();
                worst = worst.max((total - 1.0).abs());
            }
        }
        assert!(worst <= 1e-12, "partition error {worst}");
    }

    #[test]
    fn projections_reassemble_field() {
        let grid = test_grid();
        let f = random_band_limited(&grid, 7);
        let shells = shells_for(&grid);
        let mut sum = FieldSpectrum::zero(grid, Frame::Lab);
        for &s in &shells {
            sum.add_scaled(&lp_project(&f, s), Complex64::new(1.0, 0.0));
        }
        let mut worst = 0.0f64;
        for (a, b) in sum.coeffs.iter().zip(f.coeffs.iter()) {
            worst = worst.max((a - b).norm());
        }
        assert!(worst <= 1e-14 * f.max_abs(), "reassembly error {worst}");
    }

    #[test]
    fn below_equals_partial_sum() {
        let grid = test_grid();
        let f = random_band_limited(&grid, 11);
        let shells = shells_for(&grid);
        for n in [1.0, 4.0, 16.0] {
            let direct = lp_below(&f, n);
            let mut partial = FieldSpectrum::zero(grid.clone(), Frame::Lab);
            for &s in shells.iter().filter(|s| s.0 < n) {
                partial.add_scaled(&lp_project(&f, s), Complex64::new(1.0, 0.0));
            }
            for (a, b) in direct.coeffs.iter().zip(partial.coeffs.iter()) {
                assert!((a - b).norm() <= 1e-13 * f.max_abs());
            }
        }
    }

    #[test]
    fn almost_orthogonality() {
        let grid = test_grid();
        for seed in 0..5u64 {
            let f = random_band_limited(&grid, 100 + seed);
            let shells = shells_for(&grid);
            let total = f.l2_norm_sq();
            let sum_shells: f64 = shells.iter().map(|&s| lp_project(&f, s).l2_norm_sq()).sum();
            assert!(sum_shells <= total * (1.0 + 1e-12));
            assert!(total <= 2.0 * sum_shells * (1.0 + 1e-12));
            // repeated projection contracts
            for &s in &shells {
                let once = lp_project(&f, s);
                let twice = lp_project(&once, s);
                assert!(twice.l2_norm_sq() <= once.l2_norm_sq() * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn paraproduct_reconstructs_product() {
        let grid = test_grid();
        for seed in 0..20u64 {
            let f = random_band_limited(&grid, 200 + seed);
            let g = random_band_limited(&grid, 300 + seed);
            let product = f.product(&g).unwrap();
            let parts = paraproduct_split(&f, &g).unwrap();
            let mut err = 0.0f64;
            let mut scale = 0.0f64;
            for i in 0..product.coeffs.len() {
                let rebuilt =
                    parts.low_high.coeffs[i] + parts.high_low.coeffs[i] + parts.remainder.coeffs[i];
                err = err.max((rebuilt - product.coeffs[i]).norm());
                scale = scale.max(product.coeffs[i].norm());
            }
            assert!(err <= 1e-10 * scale, "seed {seed}: rel err {}", err / scale);
        }
    }

    #[test]
    fn constant_factor_lands_in_low_shell() {
        let grid = test_grid();
        let f = random_band_limited(&grid, 5);
        // g = constant 1: spectrum concentrated at Xi = 0
        let ones = vec![Complex64::new(1.0, 0.0); grid.len()];
        let g = FieldSpectrum::from_real(grid.clone(), ones, Frame::Lab);
        let parts = paraproduct_split(&f, &g).unwrap();
        // T_f g pairs f_{<N/8} with g_N for N >= 8; g has no such shells
        assert!(parts.low_high.max_abs() <= 1e-12 * f.max_abs());
        // T_g f + R should reproduce f * 1 (up to dealiasing, which the
        // reference product shares)
        let product = f.product(&g).unwrap();
        let mut err = 0.0f64;
        for i in 0..product.coeffs.len() {
            let rebuilt = parts.high_low.coeffs[i] + parts.remainder.coeffs[i];
            err = err.max((rebuilt - product.coeffs[i]).norm());
        }
        assert!(err <= 1e-11 * f.max_abs());
    }

    #[test]
    fn separated_shells_have_no_remainder() {
        let grid = PhaseGrid::new(1, 32, 256, 4.0).unwrap();
        // f in shell N = 32, g in shell N = 1: N'/N ratio 32 > 8 so R = 0 and
        // T_g f = f g.
        let mut f = FieldSpectrum::zero(grid.clone(), Frame::Lab);
        // |Xi| = |k| + |eta| near 32: use k = 2, eta = 30 (phi_32 = 1 there
        // requires |Xi| = 32; phi(1) = 1)
        let n_eta = (30.0 / grid.deta()).round() as i64;
        let eta = n_eta as f64 * grid.deta();
        f.set(&[2], &[n_eta], Complex64::new(1.0, 0.0));
        f.set(&[-2], &[-n_eta], Complex64::new(1.0, 0.0));
        assert!(
            (DyadicShell(32.0).multiplier(2.0 + eta) - 1.0).abs() < 1e-6,
            "support placement"
        );
        let mut g = FieldSpectrum::zero(grid.clone(), Frame::Lab);
        let m_eta = (1.0 / grid.deta()).round() as i64;
        g.set(&[0], &[m_eta], Complex64::new(0.5, 0.0));
        g.set(&[0], &[-m_eta], Complex64::new(0.5, 0.0));
        let parts = paraproduct_split(&f, &g).unwrap();
        let product = f.product(&g).unwrap();
        assert!(parts.remainder.max_abs() <= 1e-12);
        assert!(parts.low_high.max_abs() <= 1e-12);
        let mut err = 0.0f64;
        for i in 0..product.coeffs.len() {
            err = err.max((parts.high_low.coeffs[i] - product.coeffs[i]).norm());
        }
        assert!(err <= 1e-12);
    }
}
