//! Gevrey radius schedule, exponential weights and weighted norms.
//!
//! The weight attached to a joint frequency (k, eta) at time t is
//!   A_k(t, eta) = e^{lambda(t) <k,eta>^s} <k,eta>^sigma,
//! with <k,eta> = (1 + (|k| + |eta|)^2)^{1/2} (l1 inner magnitude) and the
//! slowly decreasing radius
//!   lambda(t) = (1/8)(l0 - l1)(1-t)_+ + alpha0 + (1/4)(l0 - l1) min(1, t^-a).
//!
//! All weights are evaluated in log space; logs above a configurable cap are
//! flagged rather than silently overflowing.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::PhaseGrid;
use crate::spectrum::FieldSpectrum;

pub const DEFAULT_LOG_CAP: f64 = 700.0;

/// Radius schedule parameters plus derived quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct GevreySchedule {
    pub s: f64,
    pub lambda0: f64,
    pub lambda_prime: f64,
    pub sigma: f64,
    pub beta: f64,
    pub moment_order: usize,
    /// alpha0 = (lambda0 + lambda')/2
    pub alpha0: f64,
    /// late-time decay exponent a = ((2+gamma) s - 1) / (1+gamma)
    pub a: f64,
    pub log_cap: f64,
}

impl GevreySchedule {
    /// Schedule for interaction exponent `gamma`; rejects sub-critical s.
    pub fn new(
        s: f64,
        lambda0: f64,
        lambda_prime: f64,
        sigma: f64,
        beta: f64,
        moment_order: usize,
        gamma: f64,
    ) -> Result<Self> {
        let threshold = 1.0 / (2.0 + gamma);
        let a = ((2.0 + gamma) * s - 1.0) / (1.0 + gamma);
        if a <= 0.0 {
            return Err(Error::SubCriticalExponent { s, gamma, threshold });
        }
        Self::with_fixed_a(s, lambda0, lambda_prime, sigma, beta, moment_order, a)
    }

    /// Schedule with an explicit decay exponent; used by the sub-critical
    /// kernel sweeps where the derived `a` would be non-positive.
    pub fn with_fixed_a(
        s: f64,
        lambda0: f64,
        lambda_prime: f64,
        sigma: f64,
        beta: f64,
        moment_order: usize,
        a: f64,
    ) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::Config(format!("gevrey.s must lie in (0,1), got {s}")));
        }
        if !(lambda0 > lambda_prime && lambda_prime > 0.0) {
            return Err(Error::Config(format!(
                "need lambda0 > lambda_prime > 0, got {lambda0}, {lambda_prime}"
            )));
        }
        if sigma < 0.0 {
            return Err(Error::Config(format!("gevrey.sigma must be >= 0, got {sigma}")));
        }
        if !(beta > 2.0) {
            return Err(Error::Config(format!("gevrey.beta must exceed 2, got {beta}")));
        }
        if moment_order == 0 {
            return Err(Error::Config("gevrey.M must be a positive integer".into()));
        }
        if !(a > 0.0) {
            return Err(Error::Config(format!("decay exponent a must be positive, got {a}")));
        }
        Ok(Self {
            s,
            lambda0,
            lambda_prime,
            sigma,
            beta,
            moment_order,
            alpha0: 0.5 * (lambda0 + lambda_prime),
            a,
            log_cap: DEFAULT_LOG_CAP,
        })
    }

    /// lambda(t) together with the one-sided derivative from the right.
    /// At the kink t = 1 use `lambda_kink` for both one-sided slopes.
    pub fn lambda_at(&self, t: f64) -> Result<(f64, f64)> {
        if t < 0.0 {
            return Err(Error::Config(format!("lambda(t) needs t >= 0, got {t}")));
        }
        let gap = self.lambda0 - self.lambda_prime;
        let ramp = if t < 1.0 { (1.0 - t) / 8.0 } else { 0.0 };
        let tail = if t <= 1.0 { 1.0 } else { t.powf(-self.a) };
        let value = gap * ramp + self.alpha0 + 0.25 * gap * tail;
        let slope = if t < 1.0 {
            -gap / 8.0
        } else {
            -0.25 * gap * self.a * t.powf(-self.a - 1.0)
        };
        Ok((value, slope))
    }

    /// Left and right derivatives at the kink t = 1.
    pub fn lambda_kink(&self) -> (f64, f64) {
        let gap = self.lambda0 - self.lambda_prime;
        (-gap / 8.0, -0.25 * gap * self.a)
    }

    pub fn lambda(&self, t: f64) -> f64 {
        self.lambda_at(t).expect("t >= 0").0
    }

    /// <x> = (1 + x^2)^{1/2}
    #[inline]
    pub fn jap(x: f64) -> f64 {
        (1.0 + x * x).sqrt()
    }

    /// log of A^{(sigma_shift)}_k(t, eta).
    #[inline]
    pub fn weight_log(&self, t: f64, k: &[i64], eta: &[f64], sigma_shift: f64) -> f64 {
        let m = Self::jap(PhaseGrid::l1_norm(k, eta));
        self.lambda(t) * m.powf(self.s) + (self.sigma + sigma_shift) * m.ln()
    }

    /// Weight value with overflow bookkeeping.
    #[inline]
    pub fn weight(&self, t: f64, k: &[i64], eta: &[f64], sigma_shift: f64) -> Weight {
        let log = self.weight_log(t, k, eta, sigma_shift);
        Weight {
            value: log.min(self.log_cap).exp(),
            capped: log > self.log_cap,
        }
    }

    /// Density-side weight at the moving frequency (k, k t).
    #[inline]
    pub fn density_weight_log(&self, t: f64, k: &[i64], sigma_shift: f64) -> f64 {
        let d = k.len();
        let mut eta = [0.0f64; 2];
        for i in 0..d {
            eta[i] = k[i] as f64 * t;
        }
        self.weight_log(t, k, &eta[..d], sigma_shift)
    }
}

/// Weight value plus a cap flag.
#[derive(Debug, Clone, Copy)]
pub struct Weight {
    pub value: f64,
    pub capped: bool,
}

/// A norm value together with the number of capped weights encountered.
#[derive(Debug, Clone, Copy)]
pub struct NormValue {
    pub value: f64,
    pub capped: usize,
}

/// Weighted velocity-moment norm
///   ( sum_{|alpha| <= m} sum_k int |A^{(shift)} D_eta^alpha fhat|^2 deta )^{1/2},
/// with v^alpha realized spectrally: transform eta -> v, multiply by v^alpha,
/// transform back.
pub fn gevrey_norm(
    spec: &FieldSpectrum,
    schedule: &GevreySchedule,
    t: f64,
    sigma_shift: f64,
    moment_order: usize,
) -> Result<NormValue> {
    if moment_order > schedule.moment_order {
        return Err(Error::Config(format!(
            "moment order {moment_order} exceeds schedule M = {}",
            schedule.moment_order
        )));
    }
    let grid = &spec.grid;
    let d = grid.dim();
    let nvt = grid.nv_total();
    let w_meas = grid.deta().powi(d as i32);

    // weights on the (k, eta) lattice
    let mut wlog = vec![0.0f64; grid.len()];
    for kf in 0..grid.nx_total() {
        let k = grid.k_of_flat(kf);
        for nf in 0..nvt {
            let eta = grid.eta_of_flat(nf);
            wlog[kf * nvt + nf] = schedule.weight_log(t, &k[..d], &eta[..d], sigma_shift);
        }
    }

    let mut total = 0.0f64;
    let mut capped = 0usize;
    for alpha in multi_indices(d, moment_order) {
        let moments = apply_velocity_moment(spec, &alpha);
        for (c, &lg) in moments.coeffs.iter().zip(wlog.iter()) {
            if c.norm_sqr() == 0.0 {
                continue;
            }
            if lg > schedule.log_cap {
                capped += 1;
            }
            let w = lg.min(schedule.log_cap).exp();
            total += (w * c.norm()).powi(2) * w_meas;
        }
    }
    Ok(NormValue {
        value: total.sqrt(),
        capped,
    })
}

/// Density norm ( sum_k |rho_k|^2 <k,kt>^{2(sigma+shift)} e^{2 lambda <k,kt>^s} )^{1/2}
/// over the supplied per-mode values (k != 0).
pub fn density_norm(
    modes: &[(i64, Complex64)],
    schedule: &GevreySchedule,
    t: f64,
    sigma_shift: f64,
) -> NormValue {
    let mut total = 0.0f64;
    let mut capped = 0usize;
    for &(k, rho) in modes {
        if k == 0 || rho == Complex64::default() {
            continue;
        }
        let lg = schedule.density_weight_log(t, &[k], sigma_shift);
        if lg > schedule.log_cap {
            capped += 1;
        }
        total += (lg.min(schedule.log_cap).exp() * rho.norm()).powi(2);
    }
    NormValue {
        value: total.sqrt(),
        capped,
    }
}

/// Plain Gevrey norm at a fixed radius (no schedule, no moments):
/// ( sum_k int |e^{lambda <k,eta>^s} <k,eta>^sigma fhat|^2 deta )^{1/2}.
pub fn fixed_radius_norm(spec: &FieldSpectrum, s: f64, lambda: f64, sigma: f64) -> f64 {
    let grid = &spec.grid;
    let d = grid.dim();
    let nvt = grid.nv_total();
    let w = grid.deta().powi(d as i32);
    let mut total = 0.0;
    for kf in 0..grid.nx_total() {
        let k = grid.k_of_flat(kf);
        for nf in 0..nvt {
            let c = spec.coeffs[kf * nvt + nf];
            if c == Complex64::default() {
                continue;
            }
            let eta = grid.eta_of_flat(nf);
            let m = GevreySchedule::jap(PhaseGrid::l1_norm(&k[..d], &eta[..d]));
            let lg = lambda * m.powf(s) + sigma * m.ln();
            total += (lg.min(DEFAULT_LOG_CAP).exp() * c.norm()).powi(2) * w;
        }
    }
    total.sqrt()
}

/// Sobolev norm ( sum_k int <k,eta>^{2 order} |fhat|^2 deta )^{1/2}.
pub fn sobolev_norm(spec: &FieldSpectrum, order: f64) -> f64 {
    fixed_radius_norm(spec, 0.5, 0.0, order)
}

/// All multi-indices alpha with |alpha| <= m in d dimensions.
pub fn multi_indices(d: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    match d {
        1 => {
            for a in 0..=m {
                out.push(vec![a]);
            }
        }
        _ => {
            for a in 0..=m {
                for b in 0..=(m - a) {
                    out.push(vec![a, b]);
                }
            }
        }
    }
    out
}

/// (v^alpha f)^ = D_eta^alpha fhat, computed by an exact lattice
/// multiplication in velocity space.
pub fn apply_velocity_moment(spec: &FieldSpectrum, alpha: &[usize]) -> FieldSpectrum {
    if alpha.iter().all(|&a| a == 0) {
        return spec.clone();
    }
    let grid = &spec.grid;
    let d = grid.dim() as i32;
    let mut data = spec.coeffs.clone();
    fft::inverse_v(&mut data, grid);
    fft::scale(&mut data, (1.0 / (2.0 * grid.vmax())).powi(d));
    let nvt = grid.nv_total();
    for kf in 0..grid.nx_total() {
        for mf in 0..nvt {
            let v = grid.v_of_flat(mf);
            let mut factor = 1.0f64;
            for (i, &a) in alpha.iter().enumerate() {
                factor *= v[i].powi(a as i32);
            }
            data[kf * nvt + mf] *= factor;
        }
    }
    fft::forward_v(&mut data, grid);
    fft::scale(&mut data, grid.dv().powi(d));
    FieldSpectrum {
        grid: grid.clone(),
        frame: spec.frame,
        coeffs: data,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::Frame;

    fn schedule() -> GevreySchedule {
        // lambda0 = 1, lambda' = 0.5, gamma = 1, s = 0.4 => a = 0.1
        GevreySchedule::new(0.4, 1.0, 0.5, 0.0, 3.0, 2, 1.0).unwrap()
    }

    #[test]
    fn lambda_endpoints() {
        let sch = schedule();
        assert!((sch.a - 0.1).abs() < 1e-15);
        let (l0, s0) = sch.lambda_at(0.0).unwrap();
        // upper endpoint (7/8) lambda0 + (1/8) lambda'
        assert!((l0 - 0.9375).abs() < 1e-15);
        assert!(s0 < 0.0);
        // frozen: lambda(2) = 0.75 + 0.125 * 2^{-0.1}
        let (l2, s2) = sch.lambda_at(2.0).unwrap();
        assert!((l2 - 0.866629123942101).abs() < 1e-14);
        assert!(s2 < 0.0);
        // t -> infinity limit alpha0
        let (linf, _) = sch.lambda_at(1e12).unwrap();
        assert!((linf - 0.75).abs() < 1e-3);
        // monotone decreasing, slope never vanishes
        let mut prev = f64::INFINITY;
        for i in 0..400 {
            let t = i as f64 * 0.05;
            let (l, sl) = sch.lambda_at(t).unwrap();
            assert!(l < prev);
            assert!(sl < 0.0);
            prev = l;
        }
        let (left, right) = sch.lambda_kink();
        assert!(left < 0.0 && right < 0.0);
        assert!((left - -0.0625).abs() < 1e-15);
        assert!((right - -0.0125).abs() < 1e-15);
    }

    #[test]
    fn sub_critical_exponent_rejected() {
        let err = GevreySchedule::new(0.3, 1.0, 0.5, 0.0, 3.0, 2, 1.0).unwrap_err();
        assert!(matches!(err, Error::SubCriticalExponent { .. }));
        // same s is fine for a smoother interaction
        assert!(GevreySchedule::new(0.3, 1.0, 0.5, 0.0, 3.0, 2, 2.0).is_ok());
    }

    #[test]
    fn weight_values() {
        let sch = schedule();
        // k = 0, eta = 0: <0,0> = 1 so the weight is e^{lambda(t)}
        let w = sch.weight(2.0, &[0], &[0.0], 0.0);
        assert!(!w.capped);
        assert!((w.value - sch.lambda(2.0).exp()).abs() < 1e-14);
        // sigma_shift = -beta vs +1 leaves the ratio <k,eta>^{-beta-1}
        let a = sch.weight(2.0, &[3], &[4.0], -sch.beta).value;
        let b = sch.weight(2.0, &[3], &[4.0], 1.0).value;
        let m = GevreySchedule::jap(7.0);
        assert!((a / b - m.powf(-sch.beta - 1.0)).abs() < 1e-12 * (a / b));
        // frozen: s = 0.5, lambda = 1, sigma = 0, k = 3, eta = 4
        // -> e^{(50)^{1/4}} = 14.284113111734186
        // lambda(1) = alpha0 + gap/4 = 0.75 + 0.25 = 1 exactly
        let sch2 = GevreySchedule::with_fixed_a(0.5, 1.25, 0.25, 0.0, 3.0, 1, 0.25).unwrap();
        assert_eq!(sch2.lambda(1.0), 1.0);
        let lg = sch2.weight_log(1.0, &[3], &[4.0], 0.0);
        assert!((lg.exp() - 14.284113111734186).abs() < 1e-12);
    }

    #[test]
    fn weight_cap_flagged() {
        let mut sch = schedule();
        sch.log_cap = 10.0;
        let w = sch.weight(0.0, &[1000], &[1000.0], 0.0);
        assert!(w.capped);
        assert!(w.value <= 10.0f64.exp() * (1.0 + 1e-12));
    }

    #[test]
    fn weight_monotone_in_time() {
        let sch = schedule();
        let mut prev = f64::INFINITY;
        for i in 0..50 {
            let t = i as f64 * 0.3;
            let w = sch.weight(t, &[2], &[5.0], 0.0).value;
            assert!(w <= prev);
            prev = w;
        }
    }

    #[test]
    fn moving_frame_weight_eventually_increases() {
        // For |k| >= 1, t -> lambda(t) <k,kt>^s is non-decreasing at late
        // times: check on a sampled grid.
        let sch = schedule();
        for k in 1..=4i64 {
            let mut prev = 0.0;
            for i in 0..200 {
                let t = 30.0 + i as f64 * 0.5;
                // <k, kt> = jap(|k| (1 + t)) with the l1 convention
                let val = sch.lambda(t) * GevreySchedule::jap(k as f64 * (1.0 + t)).powf(sch.s);
                if i > 0 {
                    assert!(val >= prev - 1e-12, "k={k} t={t}");
                }
                prev = val;
            }
        }
    }

    #[test]
    fn norm_trivial_cases() {
        let grid = PhaseGrid::new(1, 16, 64, 6.0).unwrap();
        let sch = schedule();
        let zero = FieldSpectrum::zero(grid.clone(), Frame::Gliding { t: 0.0 });
        assert_eq!(gevrey_norm(&zero, &sch, 1.0, 0.0, 0).unwrap().value, 0.0);

        // single coefficient: norm = A^{(shift)} * sqrt(deta)
        let mut one = FieldSpectrum::zero(grid.clone(), Frame::Gliding { t: 0.0 });
        one.set(&[2], &[3], Complex64::new(1.0, 0.0));
        let eta = 3.0 * grid.deta();
        let nv = gevrey_norm(&one, &sch, 1.0, -1.0, 0).unwrap();
        let expect = sch.weight(1.0, &[2], &[eta], -1.0).value * grid.deta().sqrt();
        assert!((nv.value - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn norm_matches_refined_quadrature() {
        // Gaussian single-mode field: the lattice sum must agree with a 4x
        // refined lattice to 1e-8 relative (the integrand is smooth and
        // decays well inside eta_max).
        let sch = schedule();
        let profile = |eta: f64| (-eta * eta).exp();
        let norm_on = |nv: usize| -> f64 {
            let grid = PhaseGrid::new(1, 16, nv, 6.0).unwrap();
            let f = FieldSpectrum::from_fn(grid, Frame::Gliding { t: 0.0 }, |k, eta| {
                if k[0] == 1 {
                    Complex64::new(profile(eta[0]), 0.0)
                } else {
                    Complex64::default()
                }
            });
            gevrey_norm(&f, &sch, 2.0, 0.0, 0).unwrap().value
        };
        let coarse = norm_on(128);
        let fine = norm_on(512);
        assert!(
            (coarse - fine).abs() <= 1e-8 * fine,
            "coarse {coarse} fine {fine}"
        );
    }

    #[test]
    fn moment_norm_uses_spectral_differentiation() {
        // For a pure Gaussian e^{-eta^2}, D_eta fhat = (v f)^ has known
        // transform; just verify |alpha|=1 term changes the norm consistently
        // with a direct finite-difference of the profile.
        let grid = PhaseGrid::new(1, 16, 256, 8.0).unwrap();
        let f = FieldSpectrum::from_fn(grid.clone(), Frame::Gliding { t: 0.0 }, |k, eta| {
            if k[0] == 1 {
                Complex64::new((-eta[0] * eta[0]).exp(), 0.0)
            } else {
                Complex64::default()
            }
        });
        let moment = apply_velocity_moment(&f, &[1]);
        // (v f)^ = i d/d eta e^{-eta^2} = -2 i eta e^{-eta^2}
        let mut worst = 0.0f64;
        for n in -40..40i64 {
            let eta = n as f64 * grid.deta();
            let got = moment.get(&[1], &[n]);
            let want = Complex64::new(0.0, -2.0 * eta * (-eta * eta).exp());
            worst = worst.max((got - want).norm());
        }
        assert!(worst < 1e-10, "worst deviation {worst}");
    }

    #[test]
    fn density_norm_cases() {
        let sch = schedule();
        assert_eq!(density_norm(&[], &sch, 1.0, 0.0).value, 0.0);
        let r = 0.37;
        let t = 2.5;
        let nv = density_norm(&[(1, Complex64::new(r, 0.0))], &sch, t, 0.0);
        let m = GevreySchedule::jap(1.0 + t);
        let expect = r * (sch.lambda(t) * m.powf(sch.s)).exp() * m.powf(sch.sigma);
        assert!((nv.value - expect).abs() < 1e-12 * expect);
    }
}
