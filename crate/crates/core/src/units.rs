//! Unit conventions and physical constants.
//!
//! Every frequency and linewidth in this crate is an ordinary frequency in
//! MHz (the value usually quoted as `ω/2π`). Powers are carried in mW; dBm is
//! only accepted at the I/O boundary. Time in the dynamics module is in µs,
//! so an ordinary frequency `f` in MHz becomes the angular rate `2π·f` in
//! rad/µs.

use std::f64::consts::PI;

/// Bohr magneton, J/T (CODATA 2018).
pub const BOHR_MAGNETON: f64 = 9.274_010_078_3e-24;
/// Reduced Planck constant, J·s (exact SI value).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Vacuum permeability, H/m (CODATA 2018).
pub const MU_0: f64 = 1.256_637_062_12e-6;

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// Ordinary frequency (MHz) to angular rate (rad/µs).
#[inline]
pub fn mhz_to_angular(f: f64) -> f64 {
    2.0 * PI * f
}

/// Angular rate (rad/µs) to ordinary frequency (MHz).
#[inline]
pub fn angular_to_mhz(w: f64) -> f64 {
    w / (2.0 * PI)
}

/// Formats a float with 9 significant digits, `%g`-style.
///
/// Output is deterministic and parses back with `str::parse::<f64>`.
pub fn fmt_sig(x: f64) -> String {
    const DIGITS: i32 = 9;
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    // Round first so the exponent reflects the rounded value (9.9999999995 -> 10).
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..DIGITS).contains(&exp) {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dbm_round_trip() {
        assert!((dbm_to_mw(25.0) - 316.227_766).abs() < 1e-6);
        assert!((dbm_to_mw(0.0) - 1.0).abs() < 1e-15);
        for dbm in [-10.0, 0.0, 21.0, 23.0, 25.0] {
            assert!((mw_to_dbm(dbm_to_mw(dbm)) - dbm).abs() < 1e-12);
        }
    }

    #[test]
    fn angular_round_trip() {
        for f in [0.0, 3.8, 41.0, 10_000.0] {
            assert!((angular_to_mhz(mhz_to_angular(f)) - f).abs() <= 1e-12 * f.max(1.0));
        }
    }

    #[test]
    fn sig_formatting() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(1.5), "1.5");
        assert_eq!(fmt_sig(-14.1), "-14.1");
        assert_eq!(fmt_sig(316.227766017), "316.227766");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_sig(1e-7), "1e-7");
        assert_eq!(fmt_sig(123_456_789_012.0), "1.23456789e11");
        assert_eq!(fmt_sig(9.9999999995), "10");
        for x in [1.234_567_891_23e-3, 98_765.432_1, -0.000_123] {
            let back: f64 = fmt_sig(x).parse().unwrap();
            assert!(((back - x) / x).abs() < 1e-8);
        }
    }
}
