use crate::error::{domain, Result};

/// Cavity mode frequency and its decay channels, all in MHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityParams {
    pub omega_c: f64,
    /// Port 1 (input) coupling rate.
    pub kappa_1: f64,
    /// Port 2 (output) coupling rate.
    pub kappa_2: f64,
    /// Port 3 (drive antenna) coupling rate.
    pub kappa_3: f64,
    pub kappa_int: f64,
}

impl CavityParams {
    pub fn new(omega_c: f64, kappa_1: f64, kappa_2: f64, kappa_3: f64, kappa_int: f64) -> Result<Self> {
        let p = Self { omega_c, kappa_1, kappa_2, kappa_3, kappa_int };
        p.validate()?;
        Ok(p)
    }

    /// Cavity with total linewidth `kappa` split evenly over the four channels.
    pub fn with_total_linewidth(omega_c: f64, kappa: f64) -> Result<Self> {
        let k = kappa / 4.0;
        Self::new(omega_c, k, k, k, k)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.omega_c.is_finite() {
            return Err(domain("cavity frequency must be finite"));
        }
        for (name, v) in [
            ("kappa_1", self.kappa_1),
            ("kappa_2", self.kappa_2),
            ("kappa_3", self.kappa_3),
            ("kappa_int", self.kappa_int),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(domain(format!("{name} must be a finite non-negative rate, got {v}")));
            }
        }
        Ok(())
    }

    /// Total cavity linewidth.
    pub fn kappa(&self) -> f64 {
        self.kappa_1 + self.kappa_2 + self.kappa_3 + self.kappa_int
    }
}

/// Kittel-mode magnon frequency, linewidth and magnon-photon coupling, in MHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagnonParams {
    pub omega_m: f64,
    pub gamma_m: f64,
    pub g_m: f64,
}

impl MagnonParams {
    pub fn new(omega_m: f64, gamma_m: f64, g_m: f64) -> Result<Self> {
        let p = Self { omega_m, gamma_m, g_m };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.omega_m.is_finite() {
            return Err(domain("magnon frequency must be finite"));
        }
        if !(self.gamma_m >= 0.0 && self.gamma_m.is_finite()) {
            return Err(domain(format!("gamma_m must be non-negative, got {}", self.gamma_m)));
        }
        if !(self.g_m >= 0.0 && self.g_m.is_finite()) {
            return Err(domain(format!("g_m must be non-negative, got {}", self.g_m)));
        }
        Ok(())
    }

    /// Coupling exceeds both the cavity and the magnon linewidth.
    pub fn is_strongly_coupled(&self, cavity: &CavityParams) -> bool {
        self.g_m > cavity.kappa() && self.g_m > self.gamma_m
    }
}

/// Affine map from electromagnet coil current (A) to magnon frequency (MHz).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoilCalibration {
    /// MHz per ampere.
    pub slope: f64,
    /// MHz at zero current.
    pub offset: f64,
}

impl CoilCalibration {
    pub fn new(slope: f64, offset: f64) -> Result<Self> {
        if !(slope > 0.0 && slope.is_finite()) || !offset.is_finite() {
            return Err(domain(format!("coil calibration needs slope > 0, got {slope}")));
        }
        Ok(Self { slope, offset })
    }
}

pub fn coil_to_magnon(current: f64, cal: &CoilCalibration) -> f64 {
    cal.slope * current + cal.offset
}

pub fn magnon_to_coil(omega_m: f64, cal: &CoilCalibration) -> f64 {
    (omega_m - cal.offset) / cal.slope
}
