//! Physical parameters and the plate oscillation profile.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Smooth 1-periodic oscillation profile `f: T -> [-1, 1]`, stored as a
/// truncated Fourier series
///
/// ```text
/// f(t) = a0 + sum_j aj cos(2 pi j t) + bj sin(2 pi j t).
/// ```
///
/// The typical choice is `f(t) = cos(2 pi t - delta)`. Derivatives up to
/// third order are evaluated analytically; the forcing terms at first
/// order need `f'''`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationProfile {
    mean: f64,
    /// Cosine coefficients, index 0 <-> harmonic j = 1.
    cos_coeffs: Vec<f64>,
    /// Sine coefficients, index 0 <-> harmonic j = 1.
    sin_coeffs: Vec<f64>,
}

impl OscillationProfile {
    /// `f(t) = cos(2 pi t - delta)`.
    pub fn cosine(delta: f64) -> Self {
        OscillationProfile {
            mean: 0.0,
            cos_coeffs: vec![delta.cos()],
            sin_coeffs: vec![delta.sin()],
        }
    }

    /// Build from raw Fourier coefficients (index 0 is harmonic 1).
    ///
    /// Rejects profiles that are constant or leave `[-1, 1]`.
    pub fn from_coeffs(mean: f64, cos_coeffs: Vec<f64>, sin_coeffs: Vec<f64>) -> Result<Self> {
        let p = OscillationProfile {
            mean,
            cos_coeffs,
            sin_coeffs,
        };
        if !p.is_nonconstant() {
            return Err(Error::Config(
                "oscillation profile must be non-constant (some nonzero harmonic)".into(),
            ));
        }
        // Dense sampling is adequate: the series is truncated and smooth.
        let samples = 4096.max(64 * (p.cos_coeffs.len().max(p.sin_coeffs.len()) + 1));
        let max = (0..samples)
            .map(|i| p.f(i as f64 / samples as f64).abs())
            .fold(0.0, f64::max);
        if max > 1.0 + 1e-9 {
            return Err(Error::Config(format!(
                "oscillation profile leaves [-1, 1]: max |f| = {max:.6}"
            )));
        }
        Ok(p)
    }

    fn is_nonconstant(&self) -> bool {
        self.cos_coeffs.iter().any(|&c| c != 0.0) || self.sin_coeffs.iter().any(|&c| c != 0.0)
    }

    /// d^order f / dt^order at `t`, for `order <= 3`.
    pub fn derivative(&self, order: u32, t: f64) -> f64 {
        assert!(order <= 3, "profile derivatives implemented up to order 3");
        let mut acc = if order == 0 { self.mean } else { 0.0 };
        let two_pi = std::f64::consts::TAU;
        for j in 0..self.cos_coeffs.len().max(self.sin_coeffs.len()) {
            let a = self.cos_coeffs.get(j).copied().unwrap_or(0.0);
            let b = self.sin_coeffs.get(j).copied().unwrap_or(0.0);
            let w = two_pi * (j + 1) as f64;
            let phase = w * t;
            // d/dt rotates (cos, sin) by a quarter period and scales by w.
            let (ca, cb) = match order % 4 {
                0 => (phase.cos(), phase.sin()),
                1 => (-phase.sin(), phase.cos()),
                2 => (-phase.cos(), -phase.sin()),
                _ => (phase.sin(), -phase.cos()),
            };
            acc += w.powi(order as i32) * (a * ca + b * cb);
        }
        acc
    }

    pub fn f(&self, t: f64) -> f64 {
        self.derivative(0, t)
    }
    pub fn df(&self, t: f64) -> f64 {
        self.derivative(1, t)
    }
    pub fn d2f(&self, t: f64) -> f64 {
        self.derivative(2, t)
    }
    pub fn d3f(&self, t: f64) -> f64 {
        self.derivative(3, t)
    }
}

impl Default for OscillationProfile {
    fn default() -> Self {
        OscillationProfile::cosine(0.0)
    }
}

/// Physical parameters of the oscillating-layer problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Horizontal periods of the cross-section `Sigma = (L1 T) x (L2 T)`.
    pub l1: f64,
    pub l2: f64,
    /// Equilibrium depth; the slab is `Sigma x (-b, 0)`.
    pub b: f64,
    /// Gravitational acceleration.
    pub g: f64,
    /// Dynamic viscosity.
    pub mu: f64,
    /// Surface tension coefficient (may be zero).
    pub sigma: f64,
    /// Oscillation amplitude of the plate.
    pub amp: f64,
    /// Oscillation frequency: the plate height is `amp * f(omega t) - b`.
    pub omega: f64,
    pub profile: OscillationProfile,
}

impl Params {
    /// Validate positivity/sign constraints.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("L1", self.l1),
            ("L2", self.l2),
            ("b", self.b),
            ("g", self.g),
            ("mu", self.mu),
            ("omega", self.omega),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("params.{name} must be positive, got {v}")));
            }
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::Config(format!(
                "params.sigma must be nonnegative, got {}",
                self.sigma
            )));
        }
        if !(self.amp >= 0.0) || !self.amp.is_finite() {
            return Err(Error::Config(format!(
                "params.amp must be nonnegative, got {}",
                self.amp
            )));
        }
        Ok(())
    }

    /// Period of the time-dependent coefficient `t -> f(omega t)`.
    pub fn period(&self) -> f64 {
        1.0 / self.omega
    }

    /// The parametric boundary coefficient `amp * omega^2 * f''(omega t)`.
    pub fn parametric_accel(&self, t: f64) -> f64 {
        self.amp * self.omega * self.omega * self.profile.d2f(self.omega * t)
    }
}

impl Default for Params {
    /// Documented defaults: `sigma = g = mu = b = L1 = L2 = 1`, `amp = 0`,
    /// `omega = 1`, `f(t) = cos(2 pi t)`.
    fn default() -> Self {
        Params {
            l1: 1.0,
            l2: 1.0,
            b: 1.0,
            g: 1.0,
            mu: 1.0,
            sigma: 1.0,
            amp: 0.0,
            omega: 1.0,
            profile: OscillationProfile::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_profile_matches_closed_form() {
        let delta = 0.5;
        let p = OscillationProfile::cosine(delta);
        let tau = std::f64::consts::TAU;
        for &t in &[0.0, 0.13, 0.5, 0.99] {
            let expect = (tau * t - delta).cos();
            assert!((p.f(t) - expect).abs() < 1e-14);
            let expect_d2 = -tau * tau * (tau * t - delta).cos();
            assert!((p.d2f(t) - expect_d2).abs() < 1e-10);
            let expect_d3 = tau.powi(3) * (tau * t - delta).sin();
            assert!((p.d3f(t) - expect_d3).abs() < 1e-9);
        }
    }

    #[test]
    fn profile_is_one_periodic() {
        let p = OscillationProfile::from_coeffs(0.1, vec![0.5, 0.2], vec![0.0, 0.1]).unwrap();
        for &t in &[0.0, 0.3, 0.77] {
            assert!((p.f(t) - p.f(t + 1.0)).abs() < 1e-12);
            assert!((p.df(t) - p.df(t + 1.0)).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_profile_rejected() {
        assert!(OscillationProfile::from_coeffs(0.3, vec![], vec![]).is_err());
        assert!(OscillationProfile::from_coeffs(0.0, vec![0.0], vec![0.0]).is_err());
    }

    #[test]
    fn oversized_profile_rejected() {
        assert!(OscillationProfile::from_coeffs(0.0, vec![1.2], vec![]).is_err());
        // cos + same-phase harmonics can exceed 1 even with small coefficients
        assert!(OscillationProfile::from_coeffs(0.5, vec![0.9], vec![]).is_err());
    }

    #[test]
    fn params_validation() {
        let mut p = Params::default();
        assert!(p.validate().is_ok());
        p.g = -1.0;
        assert!(p.validate().is_err());
        p.g = 1.0;
        p.sigma = 0.0;
        assert!(p.validate().is_ok());
        p.omega = 0.0;
        assert!(p.validate().is_err());
    }
}
