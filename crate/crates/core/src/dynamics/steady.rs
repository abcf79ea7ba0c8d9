use num_complex::Complex64;

use super::{is_linearly_stable, jacobian, DriveTerm, ModeAmplitudes, SystemParams};
use crate::cubic::{monic_cubic_roots, CubicProblem, Stability};
use crate::error::{domain, Result};
use crate::model::{diagonalize, KerrCoefficient};

/// One fixed point of the two-mode flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullSteadyState {
    pub amplitudes: ModeAmplitudes,
    /// From the eigenvalues of the 4×4 Jacobian.
    pub stability: Stability,
    /// Kerr frequency pull of the magnon, `2K|b|²` (MHz).
    pub magnon_pull: f64,
}

/// All fixed points of the driven two-mode system.
///
/// Eliminating the cavity through `a = −i·g·b / [i(ω_c − ω_d) + κ/2]` leaves
/// a real cubic in the magnon pull `y = 2K|b|²`:
///
/// ```text
/// y·[(ω_m − ω_d + σ_im + y)² + (γ_m/2 + σ_re)²] = 2K·Ω_d²
/// ```
///
/// with `σ = g²/[i(ω_c − ω_d) + κ/2]` the cavity back-action.
pub fn full_steady_state(sys: &SystemParams, drive: &DriveTerm, kerr: KerrCoefficient) -> Result<Vec<FullSteadyState>> {
    if !(sys.cavity.kappa() > 0.0 && sys.magnon.gamma_m > 0.0) {
        return Err(domain("full steady state needs kappa > 0 and gamma_m > 0"));
    }
    let i = Complex64::i();
    let g = sys.magnon.g_m;
    let cavity_response = i * (sys.cavity.omega_c - drive.omega_d) + sys.cavity.kappa() / 2.0;
    let sigma = g * g / cavity_response;
    let detuning = sys.magnon.omega_m - drive.omega_d + sigma.im;
    let damping = sys.magnon.gamma_m / 2.0 + sigma.re;
    let omega_sq = drive.strength * drive.strength;
    let k = 2.0 * kerr.mhz();

    let pulls: Vec<f64> = if k == 0.0 || omega_sq == 0.0 {
        vec![0.0]
    } else {
        let mut roots = monic_cubic_roots(2.0 * detuning, detuning * detuning + damping * damping, -k * omega_sq);
        roots.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * x.abs().max(1.0));
        roots
    };

    let mut out = Vec::with_capacity(pulls.len());
    for y in pulls {
        let b = -i * drive.strength / (i * (detuning + y) + damping);
        let a = -i * g * b / cavity_response;
        let amplitudes = ModeAmplitudes { a, b };
        // Re-derive the pull from |b|² so the state is self-consistent.
        let magnon_pull = k * amplitudes.n_b();
        let jac = jacobian(&amplitudes, sys, drive, kerr);
        let stability = if is_linearly_stable(&jac) { Stability::Stable } else { Stability::Unstable };
        out.push(FullSteadyState { amplitudes, stability, magnon_pull });
    }
    out.sort_by(|x, y| x.magnon_pull.total_cmp(&y.magnon_pull));
    Ok(out)
}

/// The single-branch cubic matched to a set of two-mode fixed points.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedCubic {
    /// `δ_LP = ω_LP − ω_d`, `γ_LP`, and `c` carrying the fitted product `c·P`
    /// at a nominal power of 1 mW.
    pub problem: CubicProblem,
    pub f_m_lp: f64,
    /// Lower-branch shifts `Δ_LP = f_m_LP·2K|b|²` of the supplied states.
    pub shifts: Vec<f64>,
}

/// Projects two-mode fixed points onto the driven lower branch.
///
/// `Δ_LP = f_m_LP·2K|b|²`. The drive product `c·P` is not derived from first
/// principles: it is the least-squares value making every projected shift a
/// root of the cubic, i.e. the mean of `[(Δ + δ)² + (γ/2)²]·Δ`.
pub fn reduce_to_cubic(sys: &SystemParams, drive: &DriveTerm, states: &[FullSteadyState]) -> Result<ReducedCubic> {
    if states.is_empty() {
        return Err(domain("no states to reduce"));
    }
    let branches = diagonalize(&sys.cavity, &sys.magnon)?;
    let delta = branches.omega_lp - drive.omega_d;
    let hw2 = 0.25 * branches.gamma_lp * branches.gamma_lp;
    let shifts: Vec<f64> = states.iter().map(|s| branches.f_m_lp * s.magnon_pull).collect();
    let drive_product = shifts.iter().map(|d| ((d + delta).powi(2) + hw2) * d).sum::<f64>() / shifts.len() as f64;
    Ok(ReducedCubic {
        problem: CubicProblem { delta_lp: delta, gamma_lp: branches.gamma_lp, c: drive_product, power: 1.0 },
        f_m_lp: branches.f_m_lp,
        shifts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::derivatives;
    use crate::dynamics::tests::system;

    #[test]
    fn undriven_has_only_vacuum() {
        let sys = system(10_000.0, 1.0, 10_000.0, 2.0, 41.0);
        let drive = DriveTerm::new(9_950.0, 0.0).unwrap();
        let ss = full_steady_state(&sys, &drive, KerrCoefficient::from_mhz(0.1)).unwrap();
        assert_eq!(ss.len(), 1);
        assert_eq!(ss[0].amplitudes.n_a() + ss[0].amplitudes.n_b(), 0.0);
        assert_eq!(ss[0].stability, Stability::Stable);
    }

    #[test]
    fn linear_system_has_unique_response() {
        let sys = system(10_000.0, 3.8, 10_000.0, 17.5, 41.0);
        let drive = DriveTerm::new(9_955.0, 3.0).unwrap();
        let ss = full_steady_state(&sys, &drive, KerrCoefficient::from_hz(0.0)).unwrap();
        assert_eq!(ss.len(), 1);
        assert_eq!(ss[0].stability, Stability::Stable);
        // Direct 2x2 linear solve of the stationary equations.
        let i = Complex64::i();
        let m11 = i * (10_000.0 - 9_955.0) + 3.8 / 2.0;
        let m22 = i * (10_000.0 - 9_955.0) + 17.5 / 2.0;
        let det = m11 * m22 - (i * 41.0) * (i * 41.0);
        let b = (m11 * (-i * 3.0)) / det;
        let a = (-(i * 41.0) * (-i * 3.0)) / det;
        assert!((ss[0].amplitudes.b - b).norm() < 1e-12);
        assert!((ss[0].amplitudes.a - a).norm() < 1e-12);
    }

    #[test]
    fn fixed_points_have_zero_derivative() {
        let sys = system(10_000.0, 1.0, 10_000.0, 1.0, 150.0);
        let b = diagonalize(&sys.cavity, &sys.magnon).unwrap();
        let kerr = KerrCoefficient::from_mhz(0.05);
        let drive = DriveTerm::new(b.omega_lp + 3.0, 13.0).unwrap();
        let ss = full_steady_state(&sys, &drive, kerr).unwrap();
        assert_eq!(ss.len(), 3);
        let pattern: Vec<_> = ss.iter().map(|s| s.stability).collect();
        assert_eq!(pattern, [Stability::Stable, Stability::Unstable, Stability::Stable]);
        for s in &ss {
            let d = derivatives(&s.amplitudes, &sys, &drive, kerr);
            let scale = s.amplitudes.b.norm().max(1.0);
            assert!(d.a.norm() < 1e-8 * scale && d.b.norm() < 1e-8 * scale);
        }
    }

    #[test]
    fn mirrored_detunings_mirror_shifts() {
        let sys = system(10_000.0, 1.0, 10_020.0, 1.5, 120.0);
        let drive = DriveTerm::new(9_930.0, 5.0).unwrap();
        let kerr = KerrCoefficient::from_mhz(0.04);
        let ss = full_steady_state(&sys, &drive, kerr).unwrap();
        // Reflect every frequency about the drive and flip K.
        let mut mirror = sys;
        mirror.cavity.omega_c = 2.0 * drive.omega_d - sys.cavity.omega_c;
        mirror.magnon.omega_m = 2.0 * drive.omega_d - sys.magnon.omega_m;
        let ms = full_steady_state(&mirror, &drive, KerrCoefficient::from_mhz(-0.04)).unwrap();
        assert_eq!(ss.len(), ms.len());
        for (x, y) in ss.iter().zip(ms.iter().rev()) {
            assert!((x.magnon_pull + y.magnon_pull).abs() < 1e-9 * x.magnon_pull.abs().max(1.0));
            assert!((x.amplitudes.n_b() - y.amplitudes.n_b()).abs() < 1e-9 * x.amplitudes.n_b());
            assert_eq!(x.stability, y.stability);
        }
    }
}
