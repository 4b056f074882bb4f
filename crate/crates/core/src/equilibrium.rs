//! Spatially homogeneous background distributions and their transforms.
//!
//! Two transform normalizations appear:
//!   fourier(eta)      = (2 pi)^{-d} int e^{-i v eta} f0(v) dv
//!   fourier_bare(eta) = int e^{-i v eta} f0(v) dv        (value 1 at eta = 0)
//! The bare transform is the one entering the mode dynamics, the Volterra
//! kernel and the dispersion function; both are exposed.

use num_complex::Complex64;

use crate::error::{Error, Result};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Clone)]
pub enum EquilibriumKind {
    /// (2 pi theta)^{-d/2} exp(-|v|^2 / (2 theta))
    Maxwellian { theta: f64 },
    /// Symmetric counter-streaming beams along the first axis:
    /// (M_theta(v1 - v0) + M_theta(v1 + v0))/2 * prod_{i>1} M_theta(v_i)
    TwoStream { v0: f64, theta: f64 },
    /// Tabulated even bare transform on a uniform eta grid (eta >= 0),
    /// linearly interpolated; optional tabulated density on a v grid.
    Custom {
        deta: f64,
        fhat_bare: Vec<f64>,
        v_table: Option<(f64, Vec<f64>)>,
    },
}

#[derive(Debug, Clone)]
pub struct Equilibrium {
    pub d: usize,
    pub kind: EquilibriumKind,
}

/// Outcome of the velocity-localization quadrature: the weighted moment sum
/// underlying the admissibility of a radius lambda_bar.
#[derive(Debug, Clone)]
pub struct LocalizationEstimate {
    pub value: f64,
    /// contribution from each dyadic |eta| block, outermost last
    pub blocks: Vec<f64>,
}

impl Equilibrium {
    pub fn maxwellian(d: usize, theta: f64) -> Result<Self> {
        if !(theta > 0.0) {
            return Err(Error::Config(format!("temperature must be positive, got {theta}")));
        }
        if d == 0 || d > 2 {
            return Err(Error::Config("equilibrium dimension must be 1 or 2".into()));
        }
        Ok(Self {
            d,
            kind: EquilibriumKind::Maxwellian { theta },
        })
    }

    pub fn two_stream(d: usize, v0: f64, theta: f64) -> Result<Self> {
        if !(theta > 0.0) || v0 < 0.0 {
            return Err(Error::Config("two-stream needs theta > 0 and v0 >= 0".into()));
        }
        if d == 0 || d > 2 {
            return Err(Error::Config("equilibrium dimension must be 1 or 2".into()));
        }
        Ok(Self {
            d,
            kind: EquilibriumKind::TwoStream { v0, theta },
        })
    }

    pub fn custom_spectrum(deta: f64, fhat_bare: Vec<f64>) -> Result<Self> {
        if !(deta > 0.0) || fhat_bare.len() < 2 {
            return Err(Error::Config("custom spectrum needs deta > 0 and >= 2 samples".into()));
        }
        Ok(Self {
            d: 1,
            kind: EquilibriumKind::Custom {
                deta,
                fhat_bare,
                v_table: None,
            },
        })
    }

    /// Thermal scale used to size search boxes and quadrature windows.
    pub fn velocity_scale(&self) -> f64 {
        match &self.kind {
            EquilibriumKind::Maxwellian { theta } => theta.sqrt(),
            EquilibriumKind::TwoStream { v0, theta } => theta.sqrt() + v0,
            EquilibriumKind::Custom { .. } => 1.0,
        }
    }

    /// f0(v)
    pub fn density(&self, v: &[f64]) -> f64 {
        match &self.kind {
            EquilibriumKind::Maxwellian { theta } => {
                let q: f64 = v.iter().map(|x| x * x).sum();
                (TWO_PI * theta).powf(-(self.d as f64) / 2.0) * (-q / (2.0 * theta)).exp()
            }
            EquilibriumKind::TwoStream { v0, theta } => {
                let g = |x: f64| (TWO_PI * theta).powf(-0.5) * (-x * x / (2.0 * theta)).exp();
                let mut val = 0.5 * (g(v[0] - v0) + g(v[0] + v0));
                for &vi in &v[1..] {
                    val *= g(vi);
                }
                val
            }
            EquilibriumKind::Custom { v_table, .. } => match v_table {
                Some((dv, tab)) => interp_even(*dv, tab, v[0]),
                None => f64::NAN,
            },
        }
    }

    /// Gradient of f0.
    pub fn gradient(&self, v: &[f64]) -> Vec<f64> {
        match &self.kind {
            EquilibriumKind::Maxwellian { theta } => {
                let f = self.density(v);
                v.iter().map(|&x| -x / theta * f).collect()
            }
            EquilibriumKind::TwoStream { v0, theta } => {
                let g = |x: f64| (TWO_PI * theta).powf(-0.5) * (-x * x / (2.0 * theta)).exp();
                let gp = |x: f64| -x / theta * g(x);
                let tail: f64 = v[1..].iter().map(|&x| g(x)).product();
                let mut out = vec![0.0; self.d];
                out[0] = 0.5 * (gp(v[0] - v0) + gp(v[0] + v0)) * tail;
                for i in 1..self.d {
                    let mut val = 0.5 * (g(v[0] - v0) + g(v[0] + v0)) * gp(v[i]);
                    for j in 1..self.d {
                        if j != i {
                            val *= g(v[j]);
                        }
                    }
                    out[i] = val;
                }
                out
            }
            EquilibriumKind::Custom { .. } => {
                // central difference on the table
                let h = 1e-5;
                let mut out = vec![0.0; self.d];
                let mut vp = v.to_vec();
                let mut vm = v.to_vec();
                vp[0] += h;
                vm[0] -= h;
                out[0] = (self.density(&vp) - self.density(&vm)) / (2.0 * h);
                out
            }
        }
    }

    /// Bare transform, real for the even profiles supplied here.
    pub fn fourier_bare(&self, eta: &[f64]) -> f64 {
        match &self.kind {
            EquilibriumKind::Maxwellian { theta } => {
                let q: f64 = eta.iter().map(|x| x * x).sum();
                (-theta * q / 2.0).exp()
            }
            EquilibriumKind::TwoStream { v0, theta } => {
                let q: f64 = eta.iter().map(|x| x * x).sum();
                (-theta * q / 2.0).exp() * (v0 * eta[0]).cos()
            }
            EquilibriumKind::Custom { deta, fhat_bare, .. } => {
                interp_even(*deta, fhat_bare, eta[0])
            }
        }
    }

    /// Transform in the (2 pi)^{-d} convention.
    pub fn fourier(&self, eta: &[f64]) -> f64 {
        self.fourier_bare(eta) * TWO_PI.powi(-(self.d as i32))
    }

    /// (v^alpha f0)~(eta) = D_eta^alpha fourier_bare, exact for the analytic
    /// kinds and finite-difference for tabulated spectra.
    pub fn moment_fourier_bare(&self, alpha: &[usize], eta: &[f64]) -> Complex64 {
        match &self.kind {
            EquilibriumKind::Maxwellian { theta } => {
                let mut out = Complex64::new(1.0, 0.0);
                for i in 0..self.d {
                    out *= gaussian_axis_derivative(alpha[i], *theta, 0.0, eta[i]);
                }
                out
            }
            EquilibriumKind::TwoStream { v0, theta } => {
                let mut out = Complex64::new(1.0, 0.0);
                // axis 0 splits into two shifted beams
                let plus = gaussian_axis_derivative(alpha[0], *theta, *v0, eta[0]);
                let minus = gaussian_axis_derivative(alpha[0], *theta, -*v0, eta[0]);
                out *= 0.5 * (plus + minus);
                for i in 1..self.d {
                    out *= gaussian_axis_derivative(alpha[i], *theta, 0.0, eta[i]);
                }
                out
            }
            EquilibriumKind::Custom { .. } => {
                // alpha-th central difference of the interpolated table
                let a = alpha[0];
                let h = 1e-3;
                let mut vals: Vec<Complex64> = (0..=a)
                    .map(|j| {
                        let e = eta[0] + (j as f64 - a as f64 / 2.0) * h;
                        Complex64::new(self.fourier_bare(&[e]), 0.0)
                    })
                    .collect();
                for _ in 0..a {
                    vals = vals
                        .windows(2)
                        .map(|w| (w[1] - w[0]) / h)
                        .collect();
                }
                Complex64::i().powu(a as u32) * vals[0]
            }
        }
    }

    /// Marginal along the direction of k (unit Euclidean), evaluated at r.
    pub fn marginal(&self, k: &[i64], r: f64) -> f64 {
        match &self.kind {
            EquilibriumKind::Maxwellian { theta } => {
                (TWO_PI * theta).powf(-0.5) * (-r * r / (2.0 * theta)).exp()
            }
            EquilibriumKind::TwoStream { v0, theta } => {
                let norm: f64 = (k.iter().map(|&x| (x * x) as f64).sum::<f64>()).sqrt();
                let u1 = if norm > 0.0 { k[0] as f64 / norm } else { 1.0 };
                let g = |x: f64| (TWO_PI * theta).powf(-0.5) * (-x * x / (2.0 * theta)).exp();
                0.5 * (g(r - v0 * u1) + g(r + v0 * u1))
            }
            EquilibriumKind::Custom { .. } => self.density(&[r]),
        }
    }

    /// d/dr of the marginal.
    pub fn marginal_deriv(&self, k: &[i64], r: f64) -> f64 {
        match &self.kind {
            EquilibriumKind::Maxwellian { theta } => -r / theta * self.marginal(k, r),
            EquilibriumKind::TwoStream { v0, theta } => {
                let norm: f64 = (k.iter().map(|&x| (x * x) as f64).sum::<f64>()).sqrt();
                let u1 = if norm > 0.0 { k[0] as f64 / norm } else { 1.0 };
                let g = |x: f64| (TWO_PI * theta).powf(-0.5) * (-x * x / (2.0 * theta)).exp();
                let gp = |x: f64| -x / theta * g(x);
                0.5 * (gp(r - v0 * u1) + gp(r + v0 * u1))
            }
            EquilibriumKind::Custom { .. } => {
                let h = 1e-5;
                (self.marginal(k, r + h) - self.marginal(k, r - h)) / (2.0 * h)
            }
        }
    }

    /// Quadrature of int f0 dv; should be 1 within 1e-10 for the built-ins.
    pub fn mass(&self) -> f64 {
        let r = 10.0 * self.velocity_scale() + 2.0;
        let n = 4001usize;
        let h = 2.0 * r / (n - 1) as f64;
        match self.d {
            1 => {
                let mut s = 0.0;
                for i in 0..n {
                    let v = -r + i as f64 * h;
                    let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                    s += w * self.density(&[v]);
                }
                s * h
            }
            _ => {
                let n2 = 401usize;
                let h2 = 2.0 * r / (n2 - 1) as f64;
                let mut s = 0.0;
                for i in 0..n2 {
                    for j in 0..n2 {
                        let v = [-r + i as f64 * h2, -r + j as f64 * h2];
                        let wi = if i == 0 || i == n2 - 1 { 0.5 } else { 1.0 };
                        let wj = if j == 0 || j == n2 - 1 { 0.5 } else { 1.0 };
                        s += wi * wj * self.density(&v);
                    }
                }
                s * h2 * h2
            }
        }
    }
}

/// (i d/d eta)^a applied to e^{i b eta - theta eta^2 / 2}: returns the value
/// at eta. Polynomial prefactors are carried exactly through the recursion
/// p_{a+1} = p_a' + (i b - theta eta) p_a.
fn gaussian_axis_derivative(a: usize, theta: f64, b: f64, eta: f64) -> Complex64 {
    // coefficients of p(eta) in the monomial basis
    let mut p: Vec<Complex64> = vec![Complex64::new(1.0, 0.0)];
    for _ in 0..a {
        let mut next = vec![Complex64::default(); p.len() + 1];
        for (j, &c) in p.iter().enumerate() {
            if j > 0 {
                next[j - 1] += c * j as f64; // derivative
            }
            next[j] += c * Complex64::new(0.0, b); // i b p
            next[j + 1] -= c * theta; // -theta eta p
        }
        p = next;
    }
    let mut val = Complex64::default();
    let mut pow = Complex64::new(1.0, 0.0);
    for &c in &p {
        val += c * pow;
        pow *= eta;
    }
    let gauss = Complex64::new(0.0, b * eta).exp() * (-theta * eta * eta / 2.0).exp();
    Complex64::i().powu(a as u32) * val * gauss
}

fn interp_even(h: f64, table: &[f64], x: f64) -> f64 {
    let x = x.abs() / h;
    let i = x.floor() as usize;
    if i + 1 >= table.len() {
        return 0.0;
    }
    let frac = x - i as f64;
    table[i] * (1.0 - frac) + table[i + 1] * frac
}

/// Quadrature of sum_{|alpha| <= m} int |D^alpha fourier_bare|^2 e^{2 lambda_bar <eta>} deta
/// with divergence detection across dyadic |eta| blocks.
pub fn check_localization(
    eq: &Equilibrium,
    lambda_bar: f64,
    m: usize,
    h: f64,
    eta_span: f64,
) -> Result<LocalizationEstimate> {
    if eq.d != 1 {
        return Err(Error::Config("localization quadrature implemented for d = 1".into()));
    }
    let n = (eta_span / h).ceil() as i64;
    let mut blocks: Vec<f64> = Vec::new();
    let mut block_edge = 1.0f64;
    let mut current = 0.0f64;
    let mut total = 0.0f64;
    for i in -n..=n {
        let eta = i as f64 * h;
        let jap = (1.0 + eta * eta).sqrt();
        let weight = (2.0 * lambda_bar * jap).exp();
        let mut point = 0.0;
        for a in 0..=m {
            point += eq.moment_fourier_bare(&[a], &[eta]).norm_sqr();
        }
        let contrib = point * weight * h;
        total += contrib;
        current += contrib;
        if eta.abs() >= block_edge {
            blocks.push(current);
            current = 0.0;
            block_edge *= 2.0;
        }
    }
    blocks.push(current);
    // divergence: outer blocks growing
    let grow = blocks
        .windows(2)
        .rev()
        .take(3)
        .filter(|w| w[1] > w[0] && w[1] > 1e-12 * total)
        .count();
    if grow >= 3 || !total.is_finite() {
        return Err(Error::Quadrature(format!(
            "localization sum diverges for lambda_bar = {lambda_bar}: outer dyadic blocks grow"
        )));
    }
    Ok(LocalizationEstimate { value: total, blocks })
}
