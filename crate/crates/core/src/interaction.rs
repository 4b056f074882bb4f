//! Mean-field interaction potentials via their Fourier multipliers.

use crate::error::{Error, Result};

/// Multiplier families. `PowerLaw` covers Coulomb (sign +1, gamma 1) and
/// Newton (sign -1, gamma 1); `Schwartz` is a rapidly decaying test
/// multiplier; `None` switches the field off entirely.
#[derive(Debug, Clone, PartialEq)]
pub enum InteractionKind {
    None,
    PowerLaw { amplitude: f64, gamma: f64, sign: f64 },
    Schwartz { amplitude: f64, width: f64, sign: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Interaction {
    pub kind: InteractionKind,
}

impl Interaction {
    pub fn none() -> Self {
        Self {
            kind: InteractionKind::None,
        }
    }

    /// Repulsive Coulomb: W_hat(k) = A |k|^{-2}.
    pub fn coulomb(amplitude: f64) -> Result<Self> {
        Self::power_law(amplitude, 1.0, 1.0)
    }

    /// Attractive Newton: W_hat(k) = -A |k|^{-2}.
    pub fn newton(amplitude: f64) -> Result<Self> {
        Self::power_law(amplitude, 1.0, -1.0)
    }

    pub fn power_law(amplitude: f64, gamma: f64, sign: f64) -> Result<Self> {
        if !(amplitude > 0.0) {
            return Err(Error::Config(format!(
                "interaction amplitude must be positive, got {amplitude}"
            )));
        }
        if gamma < 1.0 {
            return Err(Error::Config(format!(
                "interaction exponent gamma must be >= 1, got {gamma}"
            )));
        }
        if sign != 1.0 && sign != -1.0 {
            return Err(Error::Config("interaction sign must be +1 or -1".into()));
        }
        Ok(Self {
            kind: InteractionKind::PowerLaw {
                amplitude,
                gamma,
                sign,
            },
        })
    }

    pub fn schwartz(amplitude: f64, width: f64, sign: f64) -> Result<Self> {
        if !(amplitude > 0.0) || !(width > 0.0) {
            return Err(Error::Config("schwartz multiplier needs positive amplitude and width".into()));
        }
        Ok(Self {
            kind: InteractionKind::Schwartz {
                amplitude,
                width,
                sign,
            },
        })
    }

    pub fn is_none(&self) -> bool {
        matches!(self.kind, InteractionKind::None)
    }

    /// Euclidean |k|.
    #[inline]
    pub fn k_norm(k: &[i64]) -> f64 {
        (k.iter().map(|&x| (x * x) as f64).sum::<f64>()).sqrt()
    }

    /// Fourier multiplier W_hat(k); zero at k = 0.
    pub fn w_hat(&self, k: &[i64]) -> f64 {
        let norm = Self::k_norm(k);
        if norm == 0.0 {
            return 0.0;
        }
        match &self.kind {
            InteractionKind::None => 0.0,
            InteractionKind::PowerLaw {
                amplitude,
                gamma,
                sign,
            } => sign * amplitude * norm.powf(-1.0 - gamma),
            InteractionKind::Schwartz {
                amplitude,
                width,
                sign,
            } => sign * amplitude * (-norm * norm / (2.0 * width * width)).exp(),
        }
    }

    /// Decay exponent used by the kernel bounds. Schwartz multipliers decay
    /// faster than any power; report gamma = 1 as a conservative floor.
    pub fn gamma(&self) -> f64 {
        match &self.kind {
            InteractionKind::PowerLaw { gamma, .. } => *gamma,
            _ => 1.0,
        }
    }

    pub fn amplitude(&self) -> f64 {
        match &self.kind {
            InteractionKind::None => 0.0,
            InteractionKind::PowerLaw { amplitude, .. } => *amplitude,
            InteractionKind::Schwartz { amplitude, .. } => *amplitude,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multiplier_values() {
        let w = Interaction::coulomb(2.0).unwrap();
        assert_eq!(w.w_hat(&[0]), 0.0);
        assert!((w.w_hat(&[2]) - 0.5).abs() < 1e-15);
        let n = Interaction::newton(1.0).unwrap();
        assert!((n.w_hat(&[1]) + 1.0).abs() < 1e-15);
        assert_eq!(Interaction::none().w_hat(&[3]), 0.0);
    }

    #[test]
    fn power_bound_holds_per_mode() {
        let w = Interaction::power_law(1.5, 2.0, 1.0).unwrap();
        for k in 1..64i64 {
            let bound = 1.5 * (k as f64).powf(-3.0);
            assert!(w.w_hat(&[k]).abs() <= bound * (1.0 + 1e-12));
        }
        let s = Interaction::schwartz(1.0, 1.0, -1.0).unwrap();
        for k in 1..16i64 {
            assert!(s.w_hat(&[k]).abs() <= 1.0 * (k as f64).powf(-2.0));
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Interaction::coulomb(0.0).is_err());
        assert!(Interaction::power_law(1.0, 0.5, 1.0).is_err());
        assert!(Interaction::power_law(1.0, 1.0, 2.0).is_err());
    }
}
