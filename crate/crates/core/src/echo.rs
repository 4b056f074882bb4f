//! Time-response kernel diagnostics: the weighted memory kernel between mode
//! pairs, its sup/integral moments, the resonant/non-resonant split of a
//! single echo window, the critical-exponent sweep, and the two-mode echo
//! experiment driven by the nonlinear solver.
//!
//! The surrogate kernel replaces the gliding spectrum's envelope by
//! e^{-delta <k-l, kt-l tau>^s}; with nu(t,tau) = lambda(tau) - lambda(t),
//!   S(k,l,t,tau) = e^{-nu <k,kt>^s} (<tau> / |l|^gamma) e^{-delta <k-l,kt-l tau>^s}.
//! On the diagonal l = k the background's own decay replaces the <tau>
//! reduction and the instantaneous form
//!   e^{-nu <k,kt>^s} e^{-delta <k (t-tau)>^s} / |k|^gamma
//! is used inside the moment sums. All envelopes decay, so no overflow
//! handling is needed here.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gevrey::GevreySchedule;
use crate::grid::PhaseGrid;
use crate::interaction::Interaction;
use crate::sim::{run_simulation, KickSpec, ModeSeed, SimConfig, SimStatus};
use crate::spectrum::{FieldSpectrum, Frame};
use crate::volterra::DensityTrace;

#[derive(Debug, Clone)]
pub struct EchoKernelConfig {
    pub schedule: GevreySchedule,
    pub gamma: f64,
    /// regularity-split constant c in (0,1)
    pub c: f64,
    /// surrogate envelope decay; default (1 - c) * alpha0
    pub delta: f64,
    /// target modes probed by the sweep
    pub k_modes: Vec<i64>,
    /// source-mode truncation of the kernel sums
    pub l_max: i64,
    pub horizon: f64,
}

impl EchoKernelConfig {
    pub fn new(schedule: GevreySchedule, gamma: f64) -> Self {
        let c = 0.9;
        let delta = (1.0 - c) * schedule.alpha0;
        Self {
            schedule,
            gamma,
            c,
            delta,
            k_modes: vec![1, 2],
            l_max: 32,
            horizon: 1e3,
        }
    }

    /// nu(t, tau) = lambda(tau) - lambda(t) >= 0 for tau <= t.
    pub fn nu(&self, t: f64, tau: f64) -> f64 {
        self.schedule.lambda(tau) - self.schedule.lambda(t)
    }

    fn jap(x: f64) -> f64 {
        GevreySchedule::jap(x)
    }

    /// quadrature step rule for the time integrals
    pub fn quad_step(&self, t: f64) -> f64 {
        (0.1f64).min(t / 2000.0).max(1e-6)
    }
}

/// Surrogate integrand at mode pair (k, l), 0 <= tau <= t.
pub fn response_kernel_surrogate(cfg: &EchoKernelConfig, k: i64, l: i64, t: f64, tau: f64) -> f64 {
    if l == 0 {
        return 0.0;
    }
    let s = cfg.schedule.s;
    let common = (-cfg.nu(t, tau)
        * EchoKernelConfig::jap((k.abs() as f64) * (1.0 + t)).powf(s))
    .exp();
    let sep = ((k - l).abs() as f64) + (k as f64 * t - l as f64 * tau).abs();
    common * (1.0 + tau * tau).sqrt() / (l.abs() as f64).powf(cfg.gamma)
        * (-cfg.delta * EchoKernelConfig::jap(sep).powf(s)).exp()
}

/// Diagonal (l = k) integrand with the background envelope in place of the
/// <tau> reduction.
pub fn instantaneous_kernel(cfg: &EchoKernelConfig, k: i64, t: f64, tau: f64) -> f64 {
    let s = cfg.schedule.s;
    let common = (-cfg.nu(t, tau)
        * EchoKernelConfig::jap((k.abs() as f64) * (1.0 + t)).powf(s))
    .exp();
    let sep = (k.abs() as f64) * (t - tau).abs();
    common * (-cfg.delta * EchoKernelConfig::jap(sep).powf(s)).exp()
        / (k.abs() as f64).powf(cfg.gamma)
}

/// Empirical kernel against a gliding snapshot at time tau:
///   |l|^{-gamma} e^{(lambda(t)-lambda(tau)) <k,kt>^s}
///     e^{c lambda(tau) <k-l, kt-l tau>^s} |k (t-tau)| |fhat_{k-l}(tau, kt - l tau)|
/// for l != 0 (zero otherwise). kt - l tau must land on the eta lattice.
pub fn response_kernel_empirical(
    snapshot: &FieldSpectrum,
    cfg: &EchoKernelConfig,
    k: i64,
    l: i64,
    t: f64,
    tau: f64,
) -> Result<f64> {
    if l == 0 {
        return Ok(0.0);
    }
    let Frame::Gliding { t: snap_t } = snapshot.frame else {
        return Err(Error::GridMismatch("empirical kernel needs a gliding snapshot".into()));
    };
    if (snap_t - tau).abs() > 1e-9 {
        return Err(Error::GridMismatch(format!(
            "snapshot taken at t = {snap_t}, kernel evaluated at tau = {tau}"
        )));
    }
    let grid = &snapshot.grid;
    let de = grid.deta();
    let arg = k as f64 * t - l as f64 * tau;
    let steps = (arg / de).round();
    if (arg - steps * de).abs() > 1e-9 * de.max(1.0) {
        return Err(Error::NonAlignedTime { t: arg, deta: de });
    }
    let s = cfg.schedule.s;
    let jkt = EchoKernelConfig::jap((k.abs() as f64) * (1.0 + t));
    let jsep = EchoKernelConfig::jap(((k - l).abs() as f64) + arg.abs());
    let log_w = (cfg.schedule.lambda(t) - cfg.schedule.lambda(tau)) * jkt.powf(s)
        + cfg.c * cfg.schedule.lambda(tau) * jsep.powf(s);
    let f_val = snapshot.get(&[k - l], &[steps as i64]).norm();
    let capped = log_w.min(cfg.schedule.log_cap);
    Ok((l.abs() as f64).powf(-cfg.gamma) * capped.exp() * (k as f64 * (t - tau)).abs() * f_val)
}

#[derive(Debug, Clone)]
pub struct MomentValue {
    pub value: f64,
    /// bound on the neglected l > l_max (resp. k) terms
    pub tail_bound: f64,
    /// tail bound exceeds 1% of the value
    pub tail_flagged: bool,
}

/// Trapezoid in tau of the kernel summed over source modes l in 1..=l_max
/// (instantaneous form on the diagonal).
pub fn moment_i(cfg: &EchoKernelConfig, t: f64, k: i64) -> MomentValue {
    let dtau = cfg.quad_step(t);
    let n = (t / dtau).ceil() as usize;
    let step = t / n as f64;
    let per_l: Vec<f64> = (1..=cfg.l_max)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&l| {
            let mut acc = 0.0;
            for i in 0..=n {
                let tau = i as f64 * step;
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                let g = if l == k {
                    instantaneous_kernel(cfg, k, t, tau)
                } else {
                    response_kernel_surrogate(cfg, k, l, t, tau)
                };
                acc += w * g;
            }
            acc * step
        })
        .collect();
    let value: f64 = per_l.iter().sum();
    let tail = l_tail_bound(cfg, t, k);
    MomentValue {
        value,
        tail_bound: tail,
        tail_flagged: tail > 0.01 * value.max(1e-300),
    }
}

/// Bound on sum_{l > l_max} int_0^t S dtau using
/// <a + b>^s >= (<a>^s + <b>^s)/2.
fn l_tail_bound(cfg: &EchoKernelConfig, t: f64, k: i64) -> f64 {
    let s = cfg.schedule.s;
    let half = cfg.delta / 2.0;
    // int_0^inf e^{-half u^s} du = Gamma(1 + 1/s) half^{-1/s}
    let gamma_fn = |x: f64| statrs_gamma(x);
    let window = gamma_fn(1.0 + 1.0 / s) * half.powf(-1.0 / s);
    let jt = (1.0 + t * t).sqrt();
    let mut tail = 0.0;
    let mut l = cfg.l_max + 1;
    loop {
        let term = jt / (l as f64).powf(1.0 + cfg.gamma)
            * (-half * EchoKernelConfig::jap((l - k).abs() as f64).powf(s)).exp()
            * 2.0
            * window;
        tail += term;
        if term < 1e-18 * tail.max(1e-300) || l > cfg.l_max + 4000 {
            break;
        }
        l += 1;
    }
    tail
}

/// Lanczos approximation of Gamma, adequate for the tail bounds here.
fn statrs_gamma(x: f64) -> f64 {
    // Stirling with correction terms; x >= 1 in our use
    if x < 1.0 {
        return statrs_gamma(x + 1.0) / x;
    }
    let coeffs = [
        1.0,
        1.0 / 12.0,
        1.0 / 288.0,
        -139.0 / 51840.0,
        -571.0 / 2488320.0,
    ];
    let series: f64 = coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| c / x.powi(i as i32))
        .sum();
    (2.0 * std::f64::consts::PI / x).sqrt() * (x / std::f64::consts::E).powf(x) * series
}

/// Trapezoid in t of the kernel summed over target modes k (dual moment).
pub fn moment_ii(cfg: &EchoKernelConfig, tau: f64, l: i64) -> MomentValue {
    let t_hi = cfg.horizon;
    let dtau = cfg.quad_step(t_hi);
    let n = ((t_hi - tau) / dtau).ceil().max(1.0) as usize;
    let step = (t_hi - tau) / n as f64;
    let per_k: Vec<f64> = (1..=cfg.l_max)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&k| {
            let mut acc = 0.0;
            for i in 0..=n {
                let t = tau + i as f64 * step;
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                let g = if l == k {
                    instantaneous_kernel(cfg, k, t, tau)
                } else {
                    response_kernel_surrogate(cfg, k, l, t, tau)
                };
                acc += w * g;
            }
            acc * step
        })
        .collect();
    let value: f64 = per_k.iter().sum();
    let tail = l_tail_bound(cfg, tau.max(1.0), l);
    MomentValue {
        value,
        tail_bound: tail,
        tail_flagged: tail > 0.01 * value.max(1e-300),
    }
}

/// sup over sampled tau <= t and source modes l of sum_k S(k, l, t, tau).
pub fn sup_kernel(cfg: &EchoKernelConfig, t: f64) -> f64 {
    let dtau = cfg.quad_step(t).max(t / 4000.0);
    let n = (t / dtau).ceil() as usize;
    let taus: Vec<f64> = (0..=n).map(|i| i as f64 * t / n as f64).collect();
    taus.par_iter()
        .map(|&tau| {
            let mut best = 0.0f64;
            for l in 1..=cfg.l_max {
                let mut sum = 0.0;
                for k in 1..=cfg.l_max {
                    sum += response_kernel_surrogate(cfg, k, l, t, tau);
                }
                best = best.max(sum);
            }
            best
        })
        .reduce(|| 0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct ResonantSplit {
    pub k: i64,
    pub l: i64,
    pub t: f64,
    /// tau < min(1, t)
    pub short_time: f64,
    /// tau in [1, t] with |k t - l tau| < t/2
    pub resonant: f64,
    pub non_resonant: f64,
    /// the same midpoint quadrature over all of [0, t]
    pub total: f64,
    /// comparison value (k t / l^{2+gamma}) e^{-delta' |kt|^{s-a} / l^{1-a}}
    pub resonant_bound: f64,
    /// the resonant window [1, t] cap I_R (empty for l <= k - 1)
    pub window: Option<(f64, f64)>,
}

/// Midpoint-rule split of the echo window integral; the three pieces sum to
/// `total` exactly up to rounding because every node belongs to one piece.
pub fn resonant_split(cfg: &EchoKernelConfig, k: i64, l: i64, t: f64) -> Result<ResonantSplit> {
    if k < 1 || l < 1 {
        return Err(Error::Config("resonant split expects k, l >= 1".into()));
    }
    let dtau = cfg.quad_step(t);
    let n = (t / dtau).ceil() as usize;
    let step = t / n as f64;
    let mut short = 0.0;
    let mut res = 0.0;
    let mut nonres = 0.0;
    for i in 0..n {
        let tau = (i as f64 + 0.5) * step;
        let g = if l == k {
            instantaneous_kernel(cfg, k, t, tau)
        } else {
            response_kernel_surrogate(cfg, k, l, t, tau)
        } * step;
        if tau < 1.0f64.min(t) {
            short += g;
        } else if (k as f64 * t - l as f64 * tau).abs() < t / 2.0 {
            res += g;
        } else {
            nonres += g;
        }
    }
    // window of I_R in tau: |kt - l tau| < t/2 <=> tau in (kt/l - t/(2l), kt/l + t/(2l))
    let lo = (k as f64 * t - t / 2.0) / l as f64;
    let hi = (k as f64 * t + t / 2.0) / l as f64;
    let window = if hi <= 1.0 || lo >= t || l <= k - 1 {
        None
    } else {
        Some((lo.max(1.0), hi.min(t)))
    };
    let s = cfg.schedule.s;
    let a = cfg.schedule.a;
    let dprime = 0.25 * (cfg.schedule.lambda0 - cfg.schedule.lambda_prime);
    let dtilde = a * dprime / (2.0f64.powf(1.0 - a) * 3.0f64.powf(a));
    let kt = k as f64 * t;
    let resonant_bound = kt / (l as f64).powf(2.0 + cfg.gamma)
        * (-dtilde * kt.powf(s - a) / (l as f64).powf(1.0 - a)).exp();
    Ok(ResonantSplit {
        k,
        l,
        t,
        short_time: short,
        resonant: res,
        non_resonant: nonres,
        total: short + res + nonres,
        resonant_bound,
        window,
    })
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub s: f64,
    pub horizon: f64,
    pub sup_moment: f64,
    /// true when the schedule used the fixed fallback decay exponent
    pub surrogate_a: bool,
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// per s: "bounded" or "growing" by the ratio between the first two horizons
    pub classification: Vec<(f64, &'static str, f64)>,
}

/// Fallback decay exponent used below the critical s threshold.
pub const SURROGATE_A: f64 = 0.05;

/// Sweep sup-moments across s values and horizons; sub-critical s rows use
/// the fixed surrogate decay exponent (flagged per row).
pub fn critical_exponent_sweep(
    base: &EchoKernelConfig,
    gamma: f64,
    s_list: &[f64],
    horizons: &[f64],
) -> Result<SweepTable> {
    let mut rows = Vec::new();
    let mut classification = Vec::new();
    for &s in s_list {
        let a = ((2.0 + gamma) * s - 1.0) / (1.0 + gamma);
        let surrogate = a <= 0.0;
        let schedule = GevreySchedule::with_fixed_a(
            s,
            base.schedule.lambda0,
            base.schedule.lambda_prime,
            base.schedule.sigma,
            base.schedule.beta,
            base.schedule.moment_order,
            if surrogate { SURROGATE_A } else { a },
        )?;
        let cfg = EchoKernelConfig {
            schedule,
            gamma,
            ..base.clone()
        };
        let mut per_horizon = Vec::new();
        for &t in horizons {
            let sup = cfg
                .k_modes
                .iter()
                .map(|&k| moment_i(&cfg, t, k).value)
                .fold(0.0, f64::max);
            rows.push(SweepRow {
                s,
                horizon: t,
                sup_moment: sup,
                surrogate_a: surrogate,
            });
            per_horizon.push(sup);
        }
        if per_horizon.len() >= 2 && per_horizon[0] > 0.0 {
            let ratio = per_horizon[1] / per_horizon[0];
            classification.push((s, if ratio >= 2.0 { "growing" } else { "bounded" }, ratio));
        }
    }
    Ok(SweepTable {
        rows,
        classification,
    })
}

// ---------------------------------------------------------------------------
// Two-mode echo experiment
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct EchoProtocol {
    /// source mode l of the impulsive kick
    pub source_mode: i64,
    /// watched target mode k < l
    pub target_mode: i64,
    /// aligned kick time
    pub kick_time: f64,
    /// velocity-displacement amplitude of the kick
    pub kick_amplitude: f64,
}

#[derive(Debug, Clone)]
pub struct EchoResult {
    pub predicted_time: f64,
    pub echo_time: Option<f64>,
    pub echo_amplitude: f64,
    pub noise_floor: f64,
    pub trace: DensityTrace,
    pub status: SimStatus,
}

/// Impulsive-kick echo protocol: seed mode l - k, let it phase-mix, kick
/// mode l at the aligned time, and report the revival of |rho_k| near
/// t = l tau / k.
pub fn run_echo_experiment(
    grid: PhaseGrid,
    equilibrium: crate::equilibrium::Equilibrium,
    interaction: Interaction,
    schedule: GevreySchedule,
    protocol: &EchoProtocol,
    eps: f64,
    horizon: f64,
) -> Result<EchoResult> {
    let l = protocol.source_mode;
    let k = protocol.target_mode;
    if !(l > k && k >= 1) {
        return Err(Error::Config("echo protocol needs l > k >= 1".into()));
    }
    let seed_mode = l - k;
    let cfg = SimConfig {
        kick: Some(KickSpec {
            mode: vec![l],
            time: {
                // snap the kick to the aligned lattice
                let m = grid.aligned_steps(protocol.kick_time)?;
                m as f64 * grid.deta()
            },
            amplitude: protocol.kick_amplitude,
        }),
        ..SimConfig::basic(
            grid,
            equilibrium,
            interaction,
            schedule,
            horizon,
            eps,
            vec![ModeSeed {
                mode: vec![seed_mode],
                amplitude: Complex64::new(1.0, 0.0),
                width: 1.0,
                center: 0.0,
            }],
        )
    };
    let out = run_simulation(&cfg)?;
    let trace = out.trace.clone();
    let times = trace.times();
    let vals = trace
        .mode(k)
        .ok_or_else(|| Error::Config(format!("target mode {k} missing from trace")))?;
    let kick_t = cfg.kick.as_ref().unwrap().time;
    let predicted = l as f64 * kick_t / k as f64;

    // noise floor: trailing pre-kick level of the target mode
    let mut floor = 0.0f64;
    for (i, &t) in times.iter().enumerate() {
        if t > 0.6 * kick_t && t < kick_t {
            floor = floor.max(vals[i].norm());
        }
    }
    // search for the post-kick local max, past a quarter of the delay
    let guard = kick_t + 0.25 * (predicted - kick_t);
    let mut best: Option<(f64, f64)> = None;
    for (i, &t) in times.iter().enumerate() {
        if t < guard {
            continue;
        }
        let m = vals[i].norm();
        if best.map(|(_, bm)| m > bm).unwrap_or(true) {
            best = Some((t, m));
        }
    }
    let (echo_time, amplitude) = match best {
        Some((t, m)) if m > 10.0 * floor.max(1e-300) => (Some(t), m),
        Some((_, m)) => (None, m),
        None => (None, 0.0),
    };
    Ok(EchoResult {
        predicted_time: predicted,
        echo_time,
        echo_amplitude: amplitude,
        noise_floor: floor,
        trace,
        status: out.status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sweep_schedule(s: f64, a: f64) -> GevreySchedule {
        GevreySchedule::with_fixed_a(s, 48.5, 0.5, 0.0, 3.0, 1, a).unwrap()
    }

    fn cfg(s: f64, a: f64) -> EchoKernelConfig {
        let mut c = EchoKernelConfig::new(sweep_schedule(s, a), 1.0);
        c.delta = 2.45;
        c
    }

    #[test]
    fn surrogate_trivial_values() {
        let c = cfg(0.45, 0.175);
        // tau = t: nu = 0, value = <t> / l^gamma * e^{-delta <k-l,(k-l)t>^s}
        let t = 7.0;
        let v = response_kernel_surrogate(&c, 2, 3, t, t);
        let expect = (1.0 + t * t).sqrt() / 3.0
            * (-c.delta * EchoKernelConfig::jap(1.0 + t).powf(0.45)).exp();
        assert!((v - expect).abs() < 1e-14 * expect);
        // k = l: off-diagonal factor e^{-delta <0, k(t-tau)>^s}
        let v2 = response_kernel_surrogate(&c, 2, 2, t, 3.0);
        let expect2 = (1.0 + 9.0f64).sqrt() / 2.0
            * (-c.nu(t, 3.0) * EchoKernelConfig::jap(2.0 * (1.0 + t)).powf(0.45)).exp()
            * (-c.delta * EchoKernelConfig::jap(2.0 * (t - 3.0)).powf(0.45)).exp();
        assert!((v2 - expect2).abs() < 1e-14 * expect2);
        // l = 0 excluded
        assert_eq!(response_kernel_surrogate(&c, 2, 0, t, 3.0), 0.0);
    }

    #[test]
    fn empirical_kernel_values() {
        let grid = PhaseGrid::new(1, 16, 64, 4.0).unwrap();
        let c = cfg(0.45, 0.175);
        let de = grid.deta();
        let tau = 4.0 * de;
        let snapshot = FieldSpectrum::from_fn(grid.clone(), Frame::Gliding { t: tau }, |k, eta| {
            Complex64::new((-0.3 * (k[0].abs() as f64 + eta[0].abs())).exp(), 0.0)
        });
        // t = tau: the |k (t - tau)| factor kills the kernel
        let v = response_kernel_empirical(&snapshot, &c, 2, 1, tau, tau).unwrap();
        assert_eq!(v, 0.0);
        // l = 0 excluded by the indicator
        assert_eq!(
            response_kernel_empirical(&snapshot, &c, 2, 0, 8.0 * de, tau).unwrap(),
            0.0
        );
        // direct formula check at an aligned pair
        let t = 8.0 * de;
        let (k, l) = (2i64, 1i64);
        let arg = k as f64 * t - l as f64 * tau; // 12 de
        let got = response_kernel_empirical(&snapshot, &c, k, l, t, tau).unwrap();
        let f_val = (-0.3 * (1.0 + arg.abs())).exp();
        let log_w = (c.schedule.lambda(t) - c.schedule.lambda(tau))
            * EchoKernelConfig::jap(2.0 * (1.0 + t)).powf(0.45)
            + c.c * c.schedule.lambda(tau) * EchoKernelConfig::jap(1.0 + arg.abs()).powf(0.45);
        let expect = log_w.exp() * (k as f64 * (t - tau)).abs() * f_val;
        assert!((got - expect).abs() < 1e-12 * expect, "{got} vs {expect}");
        // off-lattice evaluation refused
        assert!(response_kernel_empirical(&snapshot, &c, 2, 1, tau + 0.3 * de, tau).is_err());
    }

    #[test]
    fn resonance_peak_location() {
        let c = cfg(0.45, 0.175);
        // peak of the surrogate integrand over tau sits within one step of kt/l
        for (k, l, t) in [(1i64, 2i64, 40.0f64), (2, 5, 60.0), (1, 3, 100.0)] {
            let step = c.quad_step(t);
            let n = (t / step).ceil() as usize;
            let mut best = (0.0, 0.0);
            for i in 0..=n {
                let tau = i as f64 * t / n as f64;
                let v = response_kernel_surrogate(&c, k, l, t, tau);
                if v > best.1 {
                    best = (tau, v);
                }
            }
            let predicted = k as f64 * t / l as f64;
            assert!(
                (best.0 - predicted).abs() <= 1.5 * step + 1e-12,
                "k={k} l={l}: peak {} vs {predicted}",
                best.0
            );
        }
    }

    #[test]
    fn split_is_consistent_and_respects_ordering() {
        let c = cfg(0.45, 0.175);
        let sp = resonant_split(&c, 1, 2, 50.0).unwrap();
        let direct = sp.short_time + sp.resonant + sp.non_resonant;
        assert!((direct - sp.total).abs() <= 1e-10 * sp.total);
        assert!(sp.window.is_some());
        // l <= k - 1: resonant window empty
        let sp2 = resonant_split(&c, 3, 2, 50.0).unwrap();
        assert!(sp2.window.is_none());
        assert_eq!(sp2.resonant, 0.0);
        // resonant mass concentrated near t/2 for l = 2k
        let sp3 = resonant_split(&c, 1, 2, 200.0).unwrap();
        assert!(sp3.resonant > sp3.non_resonant);
    }

    #[test]
    fn non_resonant_envelope_decays() {
        let c = cfg(0.45, 0.175);
        let mut prev = f64::INFINITY;
        let mut logs = Vec::new();
        for &t in &[20.0, 40.0, 80.0, 160.0] {
            let sp = resonant_split(&c, 1, 3, t).unwrap();
            assert!(sp.non_resonant < prev);
            prev = sp.non_resonant;
            logs.push((EchoKernelConfig::jap(t / 2.0).powf(0.45), sp.non_resonant.ln()));
        }
        // log-linear envelope in <t/2>^s with negative slope
        let slope = (logs[3].1 - logs[0].1) / (logs[3].0 - logs[0].0);
        assert!(slope < 0.0, "slope {slope}");
    }

    #[test]
    fn huge_delta_reduces_to_instantaneous_and_neighbors() {
        let mut c = cfg(0.45, 0.175);
        let t = 50.0;
        let k = 1;
        let full = moment_i(&c, t, k).value;
        c.delta = 50.0;
        let suppressed = moment_i(&c, t, k).value;
        // with delta = 50 everything except the diagonal and the immediate
        // resonant neighbors is annihilated
        let diag_only = {
            let step = c.quad_step(t);
            let n = (t / step).ceil() as usize;
            let mut acc = 0.0;
            for i in 0..=n {
                let tau = i as f64 * t / n as f64;
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                acc += w * instantaneous_kernel(&c, k, t, tau);
            }
            acc * t / n as f64
        };
        assert!(suppressed < 1e-3 * full);
        assert!(suppressed >= diag_only * 0.999999);
        assert!(suppressed <= diag_only + 1.0);
    }

    #[test]
    fn single_mode_range_is_bounded() {
        // k = l only: instantaneous part, flat across horizons
        let c = cfg(0.25, SURROGATE_A);
        let vals: Vec<f64> = [1e2, 1e3, 1e4]
            .iter()
            .map(|&t| {
                let step = c.quad_step(t);
                let n = (t / step).ceil() as usize;
                let mut acc = 0.0;
                for i in 0..=n {
                    let tau = i as f64 * t / n as f64;
                    let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                    acc += w * instantaneous_kernel(&c, 1, t, tau);
                }
                acc * t / n as f64
            })
            .collect();
        assert!(vals[1] / vals[0] < 1.1);
        assert!(vals[2] / vals[1] < 1.1);
    }

    #[test]
    fn gamma_two_threshold_moves() {
        // gamma = 2: threshold 1/4; s = 0.3 bounded, s = 0.2 growing
        let sch = GevreySchedule::with_fixed_a(0.3, 96.5, 0.5, 0.0, 3.0, 1, 0.1).unwrap();
        let mut base = EchoKernelConfig::new(sch, 2.0);
        base.delta = 2.45;
        base.k_modes = vec![1, 2];
        base.l_max = 32;
        let table =
            critical_exponent_sweep(&base, 2.0, &[0.3, 0.2], &[1e2, 1e3]).unwrap();
        let find = |s: f64| {
            table
                .classification
                .iter()
                .find(|(cs, _, _)| (*cs - s).abs() < 1e-12)
                .unwrap()
        };
        assert_eq!(find(0.3).1, "bounded", "ratio {}", find(0.3).2);
        assert_eq!(find(0.2).1, "growing", "ratio {}", find(0.2).2);
        assert!(table.rows.iter().filter(|r| r.s == 0.2).all(|r| r.surrogate_a));
        assert!(table.rows.iter().filter(|r| r.s == 0.3).all(|r| !r.surrogate_a));
    }

    #[test]
    fn moment_tail_flagging() {
        let mut c = cfg(0.45, 0.175);
        c.l_max = 2;
        c.delta = 0.05;
        let m = moment_i(&c, 100.0, 1);
        assert!(m.tail_flagged, "tiny l_max with weak decay must flag the tail");
        let full = cfg(0.45, 0.175);
        let m2 = moment_i(&full, 100.0, 1);
        assert!(!m2.tail_flagged);
    }

    #[test]
    fn sup_kernel_scales_linearly() {
        let c = cfg(0.45, 0.175);
        let a = sup_kernel(&c, 1e2) / (1.0 + 1e4f64).sqrt();
        let b = sup_kernel(&c, 1e3) / (1.0 + 1e6f64).sqrt();
        // bounded ratio band for sup_kernel / <t>
        assert!(a > 0.0 && b > 0.0);
        assert!(b / a < 2.0 && a / b < 2.0, "a={a} b={b}");
    }
}
