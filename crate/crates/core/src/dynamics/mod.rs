//! Semiclassical two-mode dynamics in the frame rotating at the drive
//! frequency, used as an independent check on the single-branch cubic.
//!
//! Mean-field equations (ordinary frequencies in MHz, time in µs):
//!
//! ```text
//! da/dt = −2π{[i(ω_c − ω_d) + κ/2]·a + i·g_m·b}
//! db/dt = −2π{[i(ω_m − ω_d + 2K|b|²) + γ_m/2]·b + i·g_m·a + i·Ω_d}
//! ```

mod integrate;
mod steady;

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::Matrix4;
use num_complex::Complex64;

use crate::error::{domain, Result};
use crate::model::{CavityParams, KerrCoefficient, MagnonParams};
use crate::units::fmt_sig;

pub use integrate::{integrate, SimConfig, SimResult, Trajectory};
pub use steady::{full_steady_state, reduce_to_cubic, FullSteadyState, ReducedCubic};

/// Mean-field cavity (`a`) and magnon (`b`) amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ModeAmplitudes {
    pub a: Complex64,
    pub b: Complex64,
}

impl ModeAmplitudes {
    pub fn new(a: Complex64, b: Complex64) -> Self {
        Self { a, b }
    }

    /// Cavity photon number `|a|²`.
    pub fn n_a(&self) -> f64 {
        self.a.norm_sqr()
    }

    /// Magnon number `|b|²`.
    pub fn n_b(&self) -> f64 {
        self.b.norm_sqr()
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite()
    }

    pub(crate) fn to_array(self) -> [f64; 4] {
        [self.a.re, self.a.im, self.b.re, self.b.im]
    }

    pub(crate) fn from_array(v: [f64; 4]) -> Self {
        Self { a: Complex64::new(v[0], v[1]), b: Complex64::new(v[2], v[3]) }
    }
}

/// Cavity and magnon parameters of the coupled system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub cavity: CavityParams,
    pub magnon: MagnonParams,
}

/// Microwave drive applied to the magnon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveTerm {
    /// Drive frequency, MHz.
    pub omega_d: f64,
    /// Drive strength `Ω_d`, MHz.
    pub strength: f64,
}

impl DriveTerm {
    pub fn new(omega_d: f64, strength: f64) -> Result<Self> {
        if !(strength >= 0.0 && strength.is_finite()) || !omega_d.is_finite() {
            return Err(domain(format!("drive strength must be non-negative, got {strength}")));
        }
        Ok(Self { omega_d, strength })
    }

    /// `Ω_d = sqrt(η·P)` for power `P` (mW) and efficiency `η` (MHz²/mW).
    pub fn from_power(omega_d: f64, power_mw: f64, eta: f64) -> Result<Self> {
        if !(eta > 0.0) || !(power_mw >= 0.0) {
            return Err(domain("drive conversion needs eta > 0 and P >= 0"));
        }
        Self::new(omega_d, (eta * power_mw).sqrt())
    }
}

/// Time derivative of the amplitudes, per µs.
pub fn derivatives(
    state: &ModeAmplitudes,
    sys: &SystemParams,
    drive: &DriveTerm,
    kerr: KerrCoefficient,
) -> ModeAmplitudes {
    let i = Complex64::i();
    let two_pi = 2.0 * PI;
    let dc = sys.cavity.omega_c - drive.omega_d;
    let dm = sys.magnon.omega_m - drive.omega_d + 2.0 * kerr.mhz() * state.n_b();
    let g = sys.magnon.g_m;
    let da = -(i * dc + sys.cavity.kappa() / 2.0) * state.a - i * g * state.b;
    let db = -(i * dm + sys.magnon.gamma_m / 2.0) * state.b - i * g * state.a - i * drive.strength;
    ModeAmplitudes { a: two_pi * da, b: two_pi * db }
}

/// Jacobian of the flow in `(Re a, Im a, Re b, Im b)`, per µs.
pub fn jacobian(state: &ModeAmplitudes, sys: &SystemParams, drive: &DriveTerm, kerr: KerrCoefficient) -> Matrix4<f64> {
    let dc = sys.cavity.omega_c - drive.omega_d;
    let k = 2.0 * kerr.mhz();
    let (br, bi) = (state.b.re, state.b.im);
    let n = state.n_b();
    let dm = sys.magnon.omega_m - drive.omega_d + k * n;
    let hk = sys.cavity.kappa() / 2.0;
    let hg = sys.magnon.gamma_m / 2.0;
    let g = sys.magnon.g_m;
    #[rustfmt::skip]
    let j = Matrix4::new(
        -hk, dc,  0.0, g,
        -dc, -hk, -g,  0.0,
        0.0, g,   -hg + 2.0 * k * br * bi,  dm + 2.0 * k * bi * bi,
        -g,  0.0, -dm - 2.0 * k * br * br,  -hg - 2.0 * k * br * bi,
    );
    j * (2.0 * PI)
}

/// Eigenvalues of the Jacobian; a state is stable when all real parts are negative.
pub fn is_linearly_stable(jac: &Matrix4<f64>) -> bool {
    jac.complex_eigenvalues().iter().all(|l| l.re < 0.0)
}

/// Complex eigenfrequencies `ω − i·Γ/2` (MHz, lab frame) of the undriven,
/// linear (`K = 0`) coupled modes, sorted by real part.
pub fn linear_modes(sys: &SystemParams) -> [Complex64; 2] {
    let i = Complex64::i();
    let wc = sys.cavity.omega_c - i * sys.cavity.kappa() / 2.0;
    let wm = sys.magnon.omega_m - i * sys.magnon.gamma_m / 2.0;
    let mean = 0.5 * (wc + wm);
    let root = (0.25 * (wc - wm) * (wc - wm) + sys.magnon.g_m * sys.magnon.g_m).sqrt();
    let (x, y) = (mean - root, mean + root);
    if x.re <= y.re {
        [x, y]
    } else {
        [y, x]
    }
}

/// Trajectory CSV: `t_us,re_a,im_a,re_b,im_b,n_a,n_b`.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, mut out: W) -> std::io::Result<()> {
    writeln!(out, "t_us,re_a,im_a,re_b,im_b,n_a,n_b")?;
    for (t, s) in traj.times.iter().zip(&traj.states) {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt_sig(*t),
            fmt_sig(s.a.re),
            fmt_sig(s.a.im),
            fmt_sig(s.b.re),
            fmt_sig(s.b.im),
            fmt_sig(s.n_a()),
            fmt_sig(s.n_b()),
        )?;
    }
    Ok(())
}
