use super::params::{CavityParams, MagnonParams};
use crate::error::{domain, Result};

/// Lower (LP) and upper (UP) polariton branches of the coupled pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridizedBranches {
    pub omega_lp: f64,
    pub omega_up: f64,
    /// Squared magnon component of each branch eigenvector.
    pub f_m_lp: f64,
    pub f_m_up: f64,
    pub gamma_lp: f64,
    pub gamma_up: f64,
}

impl HybridizedBranches {
    pub fn splitting(&self) -> f64 {
        self.omega_up - self.omega_lp
    }
}

/// Diagonalizes the coupling matrix `[[ω_c, g], [g, ω_m]]`.
///
/// Branches are labeled by frequency ordering. Magnon fractions are the
/// squared magnon components of the normalized eigenvectors and each branch
/// linewidth interpolates `f_m·γ_m + (1 − f_m)·κ`.
pub fn diagonalize(cavity: &CavityParams, magnon: &MagnonParams) -> Result<HybridizedBranches> {
    cavity.validate()?;
    magnon.validate()?;
    let g = magnon.g_m;
    if g <= 0.0 {
        return Err(domain("diagonalize needs g_m > 0"));
    }
    let mean = 0.5 * (cavity.omega_c + magnon.omega_m);
    let half_detuning = 0.5 * (cavity.omega_c - magnon.omega_m);
    let radius = half_detuning.hypot(g);

    // The LP eigenvector is (g, ω_LP − ω_c)/norm, whose squared magnon weight
    // reduces to (1 + d/R)/2 with d = (ω_c − ω_m)/2.
    let cos2 = half_detuning / radius;
    let f_m_lp = 0.5 * (1.0 + cos2);
    let f_m_up = 0.5 * (1.0 - cos2);

    let kappa = cavity.kappa();
    let width = |f: f64| f * magnon.gamma_m + (1.0 - f) * kappa;
    Ok(HybridizedBranches {
        omega_lp: mean - radius,
        omega_up: mean + radius,
        f_m_lp,
        f_m_up,
        gamma_lp: width(f_m_lp),
        gamma_up: width(f_m_up),
    })
}

/// `ξ = f_m_UP / f_m_LP`, the ratio of Kerr shifts carried by the two
/// branches when only the lower one is driven.
pub fn shift_ratio(branches: &HybridizedBranches) -> Result<f64> {
    if !(branches.f_m_lp > 0.0) {
        return Err(domain("lower branch has no magnon content; shift ratio undefined"));
    }
    Ok(branches.f_m_up / branches.f_m_lp)
}
