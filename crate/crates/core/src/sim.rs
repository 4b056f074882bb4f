//! Split-step spectral solver for the mean-zero perturbation dynamics
//!   dh/dt + v . grad_x h + F . grad_v h + F . grad_v f0 = 0,
//!   F = -grad_x W * rho,
//! with exact phase-multiplication substeps (Strang ordering):
//! half x-advection, field solve + full v-advection of h + f0 jointly,
//! half x-advection. The background f0 is carried analytically and enters
//! only through its bare transform inside the v substep.
//!
//! State is held as hhat^{(x)}_k(v_m): Fourier in x, collocation in v.
//! Every substep is an exact phase multiplication on the lattice, so steps
//! are invertible and free transport is integrated exactly.

use num_complex::Complex64;

use crate::equilibrium::Equilibrium;
use crate::error::{Error, Result};
use crate::fft;
use crate::gevrey::{gevrey_norm, GevreySchedule, NormValue};
use crate::grid::PhaseGrid;
use crate::interaction::Interaction;
use crate::spectrum::{FieldSpectrum, Frame};
use crate::volterra::{fit_envelope_rate, DensityTrace};

/// One seeded mode of the initial perturbation: the +-k pair is filled in
/// automatically so the field is real.
#[derive(Debug, Clone)]
pub struct ModeSeed {
    pub mode: Vec<i64>,
    pub amplitude: Complex64,
    /// Gaussian eta-profile e^{-(eta-center)^2/(2 width^2)} (l2 in eta for d=2)
    pub width: f64,
    pub center: f64,
}

/// Impulsive velocity kick applied at an aligned time: the distribution is
/// displaced by a(x) = 2 * amplitude * cos(mode . x) in v (along mode/|mode|).
#[derive(Debug, Clone)]
pub struct KickSpec {
    pub mode: Vec<i64>,
    pub time: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub grid: PhaseGrid,
    pub equilibrium: Equilibrium,
    pub interaction: Interaction,
    pub schedule: GevreySchedule,
    /// step size; deta must be an integer multiple of dt
    pub dt: f64,
    pub horizon: f64,
    pub eps: f64,
    pub perturbation: Vec<ModeSeed>,
    /// optional high-eta exponential filter strength (contaminates Gevrey
    /// diagnostics; disclosed in the output metadata)
    pub filter: Option<f64>,
    /// evolve the linearized dynamics (drop F . grad_v h)
    pub linearized: bool,
    /// snapshots every this many diagnostic intervals (0 = final only)
    pub snapshot_stride: usize,
    /// abort when this fraction of spectral mass reaches the eta boundary
    pub alarm_threshold: f64,
    pub kick: Option<KickSpec>,
}

impl SimConfig {
    pub fn basic(
        grid: PhaseGrid,
        equilibrium: Equilibrium,
        interaction: Interaction,
        schedule: GevreySchedule,
        horizon: f64,
        eps: f64,
        perturbation: Vec<ModeSeed>,
    ) -> Self {
        let dt = grid.deta();
        Self {
            grid,
            equilibrium,
            interaction,
            schedule,
            dt,
            horizon,
            eps,
            perturbation,
            filter: None,
            linearized: false,
            snapshot_stride: 0,
            alarm_threshold: 1e-6,
            kick: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BootstrapRow {
    pub t: f64,
    /// sum_{|a|<=M} ||A^{(1)} v^a f||^2 (gliding frame)
    pub q1: f64,
    /// q1 / <t>^7
    pub q1_normalized: f64,
    /// sum_{|a|<=M} ||A^{(-beta)} v^a f||^2
    pub q2: f64,
    /// running int_0^t ||A rho||^2
    pub q3: f64,
    /// pointwise ||A rho(t)||^2
    pub rho_weighted_sq: f64,
    pub capped_weights: usize,
    /// spectral mass fraction near the eta boundary
    pub boundary_fraction: f64,
    pub dropped_mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimStatus {
    Completed,
    AbortedNan { t: f64 },
    AbortedResolution { t: f64, detail: String },
}

#[derive(Debug, Clone)]
pub struct ConservationReport {
    /// accumulated |rho_0| drift removed per unit time
    pub mass_drift: f64,
    /// relative drift of ||h + f0||_{L2}^2 per unit time
    pub l2_drift: f64,
    /// kinetic-energy proxy drift (x-averaged v^2 moment), absolute
    pub kinetic_drift: f64,
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub status: SimStatus,
    pub trace: DensityTrace,
    pub diagnostics: Vec<BootstrapRow>,
    /// lab-frame snapshots at (t, spectrum)
    pub snapshots: Vec<(f64, FieldSpectrum)>,
    pub conservation: ConservationReport,
    /// announced resolution limit: eta_max / k_active
    pub validity_horizon: f64,
    pub filter_strength: Option<f64>,
}

/// The stepping state in the mixed (k, v) representation.
pub struct SimState {
    pub grid: PhaseGrid,
    pub t: f64,
    /// hhat^{(x)}_k(v_m), k-major
    pub data: Vec<Complex64>,
}

impl SimState {
    /// Seed the perturbation spectrum eps * sum of mode pairs.
    pub fn from_seeds(grid: &PhaseGrid, seeds: &[ModeSeed], eps: f64) -> Result<Self> {
        let d = grid.dim();
        let mut coeffs = FieldSpectrum::zero(grid.clone(), Frame::Lab);
        for seed in seeds {
            if seed.mode.len() != d {
                return Err(Error::Config(format!(
                    "perturbation mode {:?} has wrong dimension",
                    seed.mode
                )));
            }
            if seed.mode.iter().all(|&k| k == 0) {
                return Err(Error::Config("perturbation must be mean-zero (mode != 0)".into()));
            }
            if grid.flat_of_k(&seed.mode).is_none() {
                return Err(Error::Config(format!(
                    "perturbation mode {:?} not representable on the grid",
                    seed.mode
                )));
            }
            let add = |coeffs: &mut FieldSpectrum, mode: &[i64], amp: Complex64, center: f64| {
                let kf = grid.flat_of_k(mode).unwrap();
                let nvt = grid.nv_total();
                for nf in 0..nvt {
                    let eta = grid.eta_of_flat(nf);
                    let r2: f64 = eta[..d]
                        .iter()
                        .map(|&e| (e - center) * (e - center))
                        .sum::<f64>()
                        / (seed.width * seed.width);
                    coeffs.coeffs[kf * nvt + nf] += amp * (-0.5 * r2).exp();
                }
            };
            add(&mut coeffs, &seed.mode, eps * seed.amplitude, seed.center);
            let minus: Vec<i64> = seed.mode.iter().map(|&k| -k).collect();
            add(&mut coeffs, &minus, eps * seed.amplitude.conj(), -seed.center);
        }
        Ok(Self::from_spectrum(&coeffs))
    }

    pub fn from_spectrum(spec: &FieldSpectrum) -> Self {
        let grid = spec.grid.clone();
        let d = grid.dim() as i32;
        let mut data = spec.coeffs.clone();
        fft::inverse_v(&mut data, &grid);
        fft::scale(&mut data, (1.0 / (2.0 * grid.vmax())).powi(d));
        Self { grid, t: 0.0, data }
    }

    /// Lab-frame spectrum of the current state.
    pub fn spectrum(&self) -> FieldSpectrum {
        let d = self.grid.dim() as i32;
        let mut coeffs = self.data.clone();
        fft::forward_v(&mut coeffs, &self.grid);
        fft::scale(&mut coeffs, self.grid.dv().powi(d));
        FieldSpectrum {
            grid: self.grid.clone(),
            frame: Frame::Lab,
            coeffs,
        }
    }

    /// rho_hat per flat k index: dv^d * sum over v.
    pub fn density(&self) -> Vec<Complex64> {
        let grid = &self.grid;
        let nvt = grid.nv_total();
        let w = grid.dv().powi(grid.dim() as i32);
        (0..grid.nx_total())
            .map(|kf| {
                let mut s = Complex64::default();
                for m in 0..nvt {
                    s += self.data[kf * nvt + m];
                }
                s * w
            })
            .collect()
    }
}

/// Precomputed tables for a fixed step size.
pub struct Stepper {
    cfg: SimConfig,
    half_x_phase: Vec<Complex64>,
    half_x_phase_inv: Vec<Complex64>,
    /// f0_bare on the eta lattice
    f0_eta: Vec<f64>,
    /// optional filter profile on the eta lattice
    filter_eta: Option<Vec<f64>>,
    /// |rho_0| drift removed so far
    pub mass_drift: f64,
}

impl Stepper {
    pub fn new(cfg: SimConfig) -> Result<Self> {
        let grid = &cfg.grid;
        if !(cfg.dt > 0.0) {
            return Err(Error::Config("run.dt must be positive".into()));
        }
        let ratio = grid.deta() / cfg.dt;
        if (ratio - ratio.round()).abs() > 1e-9 || ratio.round() < 1.0 {
            return Err(Error::Config(format!(
                "run.dt must divide deta = {} (got dt = {})",
                grid.deta(),
                cfg.dt
            )));
        }
        let d = grid.dim();
        let nvt = grid.nv_total();
        let mut half = vec![Complex64::default(); grid.len()];
        let mut half_inv = vec![Complex64::default(); grid.len()];
        for kf in 0..grid.nx_total() {
            let k = grid.k_of_flat(kf);
            for m in 0..nvt {
                let v = grid.v_of_flat(m);
                let kv: f64 = (0..d).map(|i| k[i] as f64 * v[i]).sum();
                let ph = Complex64::new(0.0, -kv * cfg.dt / 2.0).exp();
                half[kf * nvt + m] = ph;
                half_inv[kf * nvt + m] = ph.conj();
            }
        }
        let f0_eta: Vec<f64> = (0..nvt)
            .map(|nf| {
                let eta = grid.eta_of_flat(nf);
                cfg.equilibrium.fourier_bare(&eta[..d])
            })
            .collect();
        let filter_eta = cfg.filter.map(|strength| {
            (0..nvt)
                .map(|nf| {
                    let n = grid.n_of_flat(nf);
                    let frac = n[..d]
                        .iter()
                        .map(|&x| x.abs() as f64 / (grid.nv() as f64 / 2.0))
                        .fold(0.0f64, f64::max);
                    (-strength * frac.powi(36)).exp()
                })
                .collect()
        });
        Ok(Self {
            cfg,
            half_x_phase: half,
            half_x_phase_inv: half_inv,
            f0_eta,
            filter_eta,
            mass_drift: 0.0,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    fn apply_half_x(&self, state: &mut SimState, backward: bool) {
        let table = if backward {
            &self.half_x_phase_inv
        } else {
            &self.half_x_phase
        };
        for (z, p) in state.data.iter_mut().zip(table.iter()) {
            *z *= p;
        }
    }

    /// Electric/gravitational acceleration at the x collocation points,
    /// one component per axis.
    fn field_real(&self, rho: &[Complex64]) -> Vec<Vec<f64>> {
        let grid = &self.cfg.grid;
        let d = grid.dim();
        let nxt = grid.nx_total();
        let mut out = Vec::with_capacity(d);
        for axis in 0..d {
            let mut fk = vec![Complex64::default(); nxt];
            for kf in 0..nxt {
                let k = grid.k_of_flat(kf);
                let wk = self.cfg.interaction.w_hat(&k[..d]);
                fk[kf] = Complex64::new(0.0, -(k[axis] as f64) * wk) * rho[kf];
            }
            // inverse x transform of a pure x-array
            for (len, stride) in x_axes_flat(grid) {
                fft_lines(&mut fk, len, stride, false);
            }
            out.push(fk.iter().map(|z| z.re).collect());
        }
        out
    }

    /// Apply the v substep over `dt_v` given accelerations per x point.
    /// When `shear_h` is false the perturbation itself is not displaced
    /// (linearized dynamics); the background source is always exact.
    fn v_substep(
        &self,
        state: &mut SimState,
        accel: &[Vec<f64>],
        dt_v: f64,
        shear_h: bool,
    ) -> (f64, bool) {
        let grid = &self.cfg.grid;
        let d = grid.dim() as i32;
        let du = grid.dim();
        let nvt = grid.nv_total();
        let nxt = grid.nx_total();

        // (k, v) -> (x, v)
        for (len, stride) in x_axes_of(grid) {
            fft_lines(&mut state.data, len, stride, false);
        }
        // (x, v) -> (x, eta) in the bare-transform normalization
        fft::forward_v(&mut state.data, grid);
        fft::scale(&mut state.data, grid.dv().powi(d));

        let mut boundary = 0.0f64;
        let mut total = 0.0f64;
        let half = (grid.nv() / 2) as i64;
        let mut nan = false;
        for jf in 0..nxt {
            for nf in 0..nvt {
                let n = grid.n_of_flat(nf);
                let eta = grid.eta_of_flat(nf);
                // zero unpaired eta-Nyquist bins to preserve reality
                if n[..du].iter().any(|&ni| ni == -half) {
                    state.data[jf * nvt + nf] = Complex64::default();
                    continue;
                }
                let phase_arg: f64 =
                    (0..du).map(|i| eta[i] * accel[i][jf]).sum::<f64>() * dt_v;
                let ph = Complex64::new(0.0, -phase_arg).exp();
                let f0 = self.f0_eta[nf];
                let idx = jf * nvt + nf;
                let old = state.data[idx];
                let mut new = if shear_h {
                    ph * old + (ph - Complex64::new(1.0, 0.0)) * f0
                } else {
                    old + (ph - Complex64::new(1.0, 0.0)) * f0
                };
                if let Some(filter) = &self.filter_eta {
                    new *= filter[nf];
                }
                state.data[idx] = new;
                let m = new.norm_sqr();
                total += m;
                if n[..du].iter().any(|&ni| ni.abs() as f64 >= 0.9 * half as f64) {
                    boundary += m;
                }
                if !new.is_finite() {
                    nan = true;
                }
            }
        }

        // back to (k, v)
        fft::inverse_v(&mut state.data, grid);
        fft::scale(&mut state.data, (1.0 / (2.0 * grid.vmax())).powi(d));
        for (len, stride) in x_axes_of(grid) {
            fft_lines(&mut state.data, len, stride, true);
        }
        fft::scale(&mut state.data, 1.0 / nxt as f64);

        (if total > 0.0 { boundary / total } else { 0.0 }, nan)
    }

    /// One Strang step (dt may be negative for reversal tests).
    /// Returns the boundary-mass fraction observed in the v substep.
    pub fn step(&mut self, state: &mut SimState, backward: bool) -> Result<f64> {
        let dt = if backward { -self.cfg.dt } else { self.cfg.dt };
        self.apply_half_x(state, backward);

        let mut rho = state.density();
        // enforce mean-zero: remove the numerical drift of rho_0
        let drift = rho[0].norm();
        if drift > 0.0 {
            self.mass_drift += drift;
            let grid = &self.cfg.grid;
            let nvt = grid.nv_total();
            let corr = rho[0] / (2.0 * grid.vmax()).powi(grid.dim() as i32);
            for m in 0..nvt {
                state.data[m] -= corr;
            }
            rho[0] = Complex64::default();
        }
        let accel = self.field_real(&rho);
        let (boundary, nan) = self.v_substep(state, &accel, dt, !self.cfg.linearized);
        if nan {
            return Err(Error::NumericalFailure {
                t: state.t,
                detail: "non-finite value in v substep".into(),
            });
        }

        self.apply_half_x(state, backward);
        self.enforce_reality(state);
        state.t += dt;
        Ok(boundary)
    }

    /// Impulsive velocity displacement by a(x) = 2 amp cos(mode . x) along
    /// the mode direction; reuses the exact v-shift machinery.
    pub fn apply_kick(&mut self, state: &mut SimState, kick: &KickSpec) -> Result<()> {
        let grid = &self.cfg.grid;
        let d = grid.dim();
        if kick.mode.len() != d || kick.mode.iter().all(|&k| k == 0) {
            return Err(Error::Config("kick mode must be nonzero with grid dimension".into()));
        }
        let knorm = Interaction::k_norm(&kick.mode);
        let nxt = grid.nx_total();
        let mut accel: Vec<Vec<f64>> = vec![vec![0.0; nxt]; d];
        for jf in 0..nxt {
            let x = grid.x_of_flat(jf);
            let phase: f64 = (0..d).map(|i| kick.mode[i] as f64 * x[i]).sum();
            let a = 2.0 * kick.amplitude * phase.cos();
            for i in 0..d {
                accel[i][jf] = a * kick.mode[i] as f64 / knorm;
            }
        }
        // unit time: the displacement is accel * 1
        let (_, nan) = self.v_substep(state, &accel, 1.0, true);
        if nan {
            return Err(Error::NumericalFailure {
                t: state.t,
                detail: "non-finite value in kick".into(),
            });
        }
        self.enforce_reality(state);
        Ok(())
    }

    fn enforce_reality(&self, state: &mut SimState) {
        let grid = &self.cfg.grid;
        let nvt = grid.nv_total();
        for kf in 0..grid.nx_total() {
            let k = grid.k_of_flat(kf);
            let mk = [-k[0], -k[1]];
            match grid.flat_of_k(&mk) {
                Some(mkf) if mkf > kf => {
                    for m in 0..nvt {
                        let a = state.data[kf * nvt + m];
                        let b = state.data[mkf * nvt + m].conj();
                        let avg = 0.5 * (a + b);
                        state.data[kf * nvt + m] = avg;
                        state.data[mkf * nvt + m] = avg.conj();
                    }
                }
                Some(mkf) if mkf == kf => {
                    // self-paired (k = 0 rows): make real
                    for m in 0..nvt {
                        state.data[kf * nvt + m].im = 0.0;
                    }
                }
                None => {
                    // unpaired Nyquist row
                    for m in 0..nvt {
                        state.data[kf * nvt + m] = Complex64::default();
                    }
                }
                _ => {}
            }
        }
    }
}

fn x_axes_of(grid: &PhaseGrid) -> Vec<(usize, usize)> {
    fft::x_axes(grid)
}

fn x_axes_flat(grid: &PhaseGrid) -> Vec<(usize, usize)> {
    // axes of a pure x-array (no v block)
    let nx = grid.nx();
    match grid.dim() {
        1 => vec![(nx, 1)],
        _ => vec![(nx, nx), (nx, 1)],
    }
}

fn fft_lines(data: &mut [Complex64], len: usize, stride: usize, forward: bool) {
    // local strided FFT via the shared helpers in fft.rs
    fft::fft_along_public(data, len, stride, forward);
}

/// L2 and moment bookkeeping for the conservation report.
fn casimir_l2(state: &SimState, eq: &Equilibrium) -> (f64, f64) {
    let grid = &state.grid;
    let d = grid.dim() as i32;
    let nvt = grid.nv_total();
    let two_pi_d = (2.0 * std::f64::consts::PI).powi(d);
    let w = grid.dv().powi(d) * two_pi_d;
    let mut h_sq = 0.0;
    for z in &state.data {
        h_sq += z.norm_sqr();
    }
    h_sq *= w;
    // cross term 2 <h, f0> = 2 (2pi)^d dv^d sum_m Re h_0(v_m) f0(v_m)
    let mut cross = 0.0;
    let mut kinetic = 0.0;
    for m in 0..nvt {
        let v = grid.v_of_flat(m);
        let vd = &v[..grid.dim()];
        cross += state.data[m].re * eq.density(vd);
        let v2: f64 = vd.iter().map(|&x| x * x).sum();
        kinetic += state.data[m].re * v2;
    }
    cross *= 2.0 * w;
    kinetic *= w;
    (h_sq + cross, kinetic)
}

/// Per-diagnostic-time bookkeeping shared by the run loop.
struct DiagRecorder {
    trace_modes: Vec<i64>,
    trace_values: Vec<Vec<Complex64>>,
    diagnostics: Vec<BootstrapRow>,
    snapshots: Vec<(f64, FieldSpectrum)>,
    q3: f64,
    prev_rho_sq: Option<f64>,
    dropped_total: f64,
}

impl DiagRecorder {
    fn new(grid: &PhaseGrid) -> Self {
        let mut trace_modes: Vec<i64> =
            (1..=(grid.nx() as i64 / 2 - 1)).flat_map(|k| [k, -k]).collect();
        trace_modes.sort_unstable();
        let n = trace_modes.len();
        Self {
            trace_modes,
            trace_values: vec![Vec::new(); n],
            diagnostics: Vec::new(),
            snapshots: Vec::new(),
            q3: 0.0,
            prev_rho_sq: None,
            dropped_total: 0.0,
        }
    }

    fn record(
        &mut self,
        cfg: &SimConfig,
        state: &SimState,
        boundary: f64,
        diag_index: usize,
    ) -> Result<()> {
        let grid = &cfg.grid;
        let spec = state.spectrum();
        let shift = spec.to_gliding(state.t)?;
        self.dropped_total += shift.dropped_mass;
        let gliding = shift.spectrum;
        let m = cfg.schedule.moment_order;
        let q1n: NormValue = gevrey_norm(&gliding, &cfg.schedule, state.t, 1.0, m)?;
        let q2n: NormValue =
            gevrey_norm(&gliding, &cfg.schedule, state.t, -cfg.schedule.beta, m)?;
        let rho = state.density();
        let mode_vals: Vec<(i64, Complex64)> = self
            .trace_modes
            .iter()
            .map(|&k| (k, rho[grid.flat_of_k(&[k]).unwrap()]))
            .collect();
        let rho_norm = crate::gevrey::density_norm(&mode_vals, &cfg.schedule, state.t, 0.0);
        let rho_sq = rho_norm.value * rho_norm.value;
        if let Some(prev) = self.prev_rho_sq {
            self.q3 += 0.5 * (prev + rho_sq) * grid.deta();
        }
        self.prev_rho_sq = Some(rho_sq);
        let jt7 = (1.0 + state.t * state.t).powf(3.5);
        self.diagnostics.push(BootstrapRow {
            t: state.t,
            q1: q1n.value * q1n.value,
            q1_normalized: q1n.value * q1n.value / jt7,
            q2: q2n.value * q2n.value,
            q3: self.q3,
            rho_weighted_sq: rho_sq,
            capped_weights: q1n.capped + q2n.capped + rho_norm.capped,
            boundary_fraction: boundary,
            dropped_mass: self.dropped_total,
        });
        for (i, (_, v)) in self.trace_modes.iter().zip(mode_vals.iter()).enumerate() {
            self.trace_values[i].push(v.1);
        }
        if cfg.snapshot_stride > 0 && diag_index % cfg.snapshot_stride == 0 {
            self.snapshots.push((state.t, spec));
        }
        Ok(())
    }
}

/// Integrate the configured run, emitting aligned-time diagnostics.
pub fn run_simulation(cfg: &SimConfig) -> Result<SimOutput> {
    let grid = cfg.grid.clone();
    if grid.dim() != 1 {
        return Err(Error::Config(
            "run_simulation drives the one-dimensional solver; d = 2 is limited to the spectral toolbox".into(),
        ));
    }
    let mut stepper = Stepper::new(cfg.clone())?;
    let mut state = SimState::from_seeds(&grid, &cfg.perturbation, cfg.eps)?;
    let diag_stride = (grid.deta() / cfg.dt).round() as usize;
    let total_steps = (cfg.horizon / cfg.dt).round() as usize;

    let k_active = cfg
        .perturbation
        .iter()
        .flat_map(|s| s.mode.iter().map(|k| k.abs()))
        .max()
        .unwrap_or(1)
        .max(1);
    let validity_horizon = grid.eta_max() / k_active as f64;

    let kick_step = match &cfg.kick {
        Some(k) => {
            let m = grid.aligned_steps(k.time)?;
            if m < 0 {
                return Err(Error::Config("kick time must be nonnegative".into()));
            }
            Some((m as usize) * diag_stride)
        }
        None => None,
    };

    let mut rec = DiagRecorder::new(&grid);
    let (l2_ref, kin_ref) = casimir_l2(&state, &cfg.equilibrium);
    let mut l2_worst: f64 = 0.0;
    let mut kin_worst: f64 = 0.0;
    let mut status = SimStatus::Completed;

    rec.record(cfg, &state, 0.0, 0)?;

    let mut last_boundary;
    for step in 1..=total_steps {
        if kick_step == Some(step - 1) {
            let kick = cfg.kick.clone().unwrap();
            stepper.apply_kick(&mut state, &kick)?;
        }
        match stepper.step(&mut state, false) {
            Ok(b) => last_boundary = b,
            Err(Error::NumericalFailure { t, .. }) => {
                status = SimStatus::AbortedNan { t };
                break;
            }
            Err(e) => return Err(e),
        }
        if last_boundary > cfg.alarm_threshold {
            status = SimStatus::AbortedResolution {
                t: state.t,
                detail: format!(
                    "boundary mass fraction {last_boundary:.3e} exceeds {:.3e}",
                    cfg.alarm_threshold
                ),
            };
            break;
        }
        if step % diag_stride == 0 {
            let (l2, kin) = casimir_l2(&state, &cfg.equilibrium);
            let denom = l2_ref.abs().max(1e-300) * state.t.max(1.0);
            l2_worst = l2_worst.max((l2 - l2_ref).abs() / denom);
            kin_worst = kin_worst.max((kin - kin_ref).abs() / state.t.max(1.0));
            rec.record(cfg, &state, last_boundary, step / diag_stride)?;
        }
    }

    if cfg.snapshot_stride == 0 || rec.snapshots.last().map(|(t, _)| *t) != Some(state.t) {
        rec.snapshots.push((state.t, state.spectrum()));
    }

    Ok(SimOutput {
        status,
        trace: DensityTrace {
            modes: rec.trace_modes,
            dt: grid.deta(),
            values: rec.trace_values,
            validity_horizon: Vec::new(),
        },
        diagnostics: rec.diagnostics,
        snapshots: rec.snapshots,
        conservation: ConservationReport {
            mass_drift: stepper.mass_drift,
            l2_drift: l2_worst,
            kinetic_drift: kin_worst,
        },
        validity_horizon,
        filter_strength: cfg.filter,
    })
}

#[derive(Debug, Clone)]
pub struct AsymptoticProfile {
    /// gliding-frame spectrum at the final time
    pub h_inf: FieldSpectrum,
    /// fitted decay rate of ||f(t) - f(T)|| over the trailing snapshots
    pub rate: f64,
    pub tail: Vec<(f64, f64)>,
}

/// Extract the asymptotic profile from a decayed trajectory; refuses when
/// the weighted density has not decayed.
pub fn asymptotic_profile(
    output: &SimOutput,
    schedule: &GevreySchedule,
    lambda_pp: f64,
    decay_threshold: f64,
) -> Result<AsymptoticProfile> {
    if output.snapshots.len() < 4 {
        return Err(Error::Config(
            "asymptotic profile needs at least 4 snapshots (set snapshot_stride)".into(),
        ));
    }
    let peak = output
        .diagnostics
        .iter()
        .map(|r| r.rho_weighted_sq)
        .fold(0.0, f64::max);
    let last = output
        .diagnostics
        .last()
        .map(|r| r.rho_weighted_sq)
        .unwrap_or(0.0);
    if peak > 0.0 && last > decay_threshold * peak {
        return Err(Error::NotDecayed(format!(
            "final ||A rho||^2 = {last:.3e} vs peak {peak:.3e}"
        )));
    }
    let (t_final, final_lab) = output.snapshots.last().unwrap().clone();
    let final_gliding = final_lab.to_gliding(t_final)?.spectrum;

    let mut tail = Vec::new();
    for (t, lab) in &output.snapshots[..output.snapshots.len() - 1] {
        if *t < t_final / 2.0 {
            continue;
        }
        let g = lab.to_gliding(*t)?.spectrum;
        let mut diff = g.clone();
        diff.add_scaled(&final_gliding, Complex64::new(-1.0, 0.0));
        let norm = crate::gevrey::fixed_radius_norm(&diff, schedule.s, lambda_pp, 0.0);
        tail.push((*t, norm));
    }
    let times: Vec<f64> = tail.iter().map(|p| p.0).collect();
    let mags: Vec<f64> = tail.iter().map(|p| p.1).collect();
    let rate = fit_envelope_rate(&times, &mags, times.first().copied().unwrap_or(0.0), t_final)
        .unwrap_or(0.0);
    Ok(AsymptoticProfile {
        h_inf: final_gliding,
        rate,
        tail,
    })
}
