use std::f64::consts::PI;

use crate::error::{domain, Result};
use crate::units::{BOHR_MAGNETON, HBAR, MU_0};

/// Crystallographic axis of the sphere aligned with the bias field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Axis100,
    Axis110,
}

/// Material constants of the magnetic sphere (SI units).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialSpec {
    /// Vacuum permeability, H/m. Defaults to CODATA.
    pub mu_0: f64,
    /// First-order anisotropy constant, J/m³.
    pub k_an: f64,
    pub g_factor: f64,
    /// Saturation magnetization, A/m.
    pub magnetization: f64,
    /// Sphere volume, m³.
    pub volume: f64,
    pub axis: Axis,
}

impl MaterialSpec {
    pub fn new(k_an: f64, g_factor: f64, magnetization: f64, volume: f64, axis: Axis) -> Self {
        Self { mu_0: MU_0, k_an, g_factor, magnetization, volume, axis }
    }

    /// Volume of a sphere of the given diameter (m).
    pub fn sphere_volume(diameter: f64) -> f64 {
        PI * diameter.powi(3) / 6.0
    }

    /// Gyromagnetic ratio `g·μ_B/ħ` in rad/(s·T).
    pub fn gyromagnetic_ratio(&self) -> f64 {
        self.g_factor * BOHR_MAGNETON / HBAR
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.volume > 0.0 && self.volume.is_finite()) {
            return Err(domain(format!("sphere volume must be positive, got {}", self.volume)));
        }
        if !(self.magnetization > 0.0 && self.magnetization.is_finite()) {
            return Err(domain(format!("saturation magnetization must be positive, got {}", self.magnetization)));
        }
        if !self.k_an.is_finite() || !self.g_factor.is_finite() || !self.mu_0.is_finite() {
            return Err(domain("material constants must be finite"));
        }
        Ok(())
    }
}

/// Kerr coefficient, the frequency pull per excitation.
///
/// Stored as an ordinary frequency in Hz. The Hamiltonian form (ħ = 1) gives
/// the angular value, see [`KerrCoefficient::angular`].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct KerrCoefficient(f64);

impl KerrCoefficient {
    pub fn from_hz(hz: f64) -> Self {
        Self(hz)
    }

    pub fn from_mhz(mhz: f64) -> Self {
        Self(mhz * 1e6)
    }

    /// Angular rate in rad/s.
    pub fn from_angular(rad_per_s: f64) -> Self {
        Self(rad_per_s / (2.0 * PI))
    }

    pub fn hz(self) -> f64 {
        self.0
    }

    pub fn mhz(self) -> f64 {
        self.0 * 1e-6
    }

    pub fn angular(self) -> f64 {
        self.0 * 2.0 * PI
    }
}

/// Kerr coefficient of the Kittel mode from magnetocrystalline anisotropy.
///
/// `[100]`: `μ0·K_an·γ²/(M²·V_m)`; `[110]`: `−13/16` of that.
pub fn kerr_coefficient(spec: &MaterialSpec) -> Result<KerrCoefficient> {
    spec.validate()?;
    let gamma = spec.gyromagnetic_ratio();
    let base = spec.mu_0 * spec.k_an * gamma * gamma / (spec.magnetization.powi(2) * spec.volume);
    let angular = match spec.axis {
        Axis::Axis100 => base,
        Axis::Axis110 => -13.0 * base / 16.0,
    };
    Ok(KerrCoefficient::from_angular(angular))
}
