use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use super::params::{CavityParams, MagnonParams};
use crate::error::{usage, Result};
use crate::units::fmt_sig;

/// Linear input-output transmission amplitude `|S21|` from port 1 to port 2.
pub fn s21(cavity: &CavityParams, magnon: &MagnonParams, omega: f64) -> f64 {
    let i = Complex64::i();
    let magnon_response = i * (magnon.omega_m - omega) + magnon.gamma_m / 2.0;
    let denom = i * (cavity.omega_c - omega) + cavity.kappa() / 2.0 + magnon.g_m * magnon.g_m / magnon_response;
    (cavity.kappa_1 * cavity.kappa_2).sqrt() / denom.norm()
}

/// `|S21|` sampled on a (magnon frequency × probe frequency) grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionMap {
    pub magnon_grid: Vec<f64>,
    pub probe_grid: Vec<f64>,
    /// One row per magnon frequency, one column per probe frequency.
    pub rows: Vec<Vec<f64>>,
}

impl TransmissionMap {
    /// Probe frequencies of the interior local maxima of one row, ascending.
    pub fn peaks(&self, row: usize) -> Vec<f64> {
        let r = &self.rows[row];
        (1..r.len().saturating_sub(1))
            .filter(|&j| r[j] > r[j - 1] && r[j] >= r[j + 1])
            .map(|j| self.probe_grid[j])
            .collect()
    }

    /// The two strongest local maxima of a row, ordered by frequency.
    pub fn branch_peaks(&self, row: usize) -> Option<(f64, f64)> {
        let r = &self.rows[row];
        let mut idx: Vec<usize> =
            (1..r.len().saturating_sub(1)).filter(|&j| r[j] > r[j - 1] && r[j] >= r[j + 1]).collect();
        if idx.len() < 2 {
            return None;
        }
        idx.sort_by(|&a, &b| r[b].total_cmp(&r[a]));
        let (a, b) = (self.probe_grid[idx[0]], self.probe_grid[idx[1]]);
        Some((a.min(b), a.max(b)))
    }

    /// Row with the smallest two-peak separation: `(row, omega_m, gap)`.
    pub fn min_gap(&self) -> Option<(usize, f64, f64)> {
        (0..self.rows.len())
            .filter_map(|i| self.branch_peaks(i).map(|(lo, hi)| (i, self.magnon_grid[i], hi - lo)))
            .min_by(|a, b| a.2.total_cmp(&b.2))
    }

    /// CSV heat map: header `omega_m_MHz,<probe...>`, one row per magnon frequency.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "omega_m_MHz")?;
        for p in &self.probe_grid {
            write!(out, ",{}", fmt_sig(*p))?;
        }
        writeln!(out)?;
        for (wm, row) in self.magnon_grid.iter().zip(&self.rows) {
            write!(out, "{}", fmt_sig(*wm))?;
            for v in row {
                write!(out, ",{}", fmt_sig(*v))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(usage(format!("{name} grid is empty")));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(usage(format!("{name} grid has non-finite entries")));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(usage(format!("{name} grid is not sorted")));
    }
    Ok(())
}

/// Transmission spectrum over a sweep of magnon frequencies.
///
/// `magnon.omega_m` is ignored; each row uses the matching entry of
/// `magnon_sweep`. Rows are evaluated in parallel, output order follows
/// the input grid.
pub fn transmission_map(
    cavity: &CavityParams,
    magnon: &MagnonParams,
    magnon_sweep: &[f64],
    probe_grid: &[f64],
) -> Result<TransmissionMap> {
    check_grid("magnon", magnon_sweep)?;
    check_grid("probe", probe_grid)?;
    cavity.validate()?;
    magnon.validate()?;
    let rows = magnon_sweep
        .par_iter()
        .map(|&wm| {
            let m = MagnonParams { omega_m: wm, ..*magnon };
            probe_grid.iter().map(|&w| s21(cavity, &m, w)).collect()
        })
        .collect();
    Ok(TransmissionMap { magnon_grid: magnon_sweep.to_vec(), probe_grid: probe_grid.to_vec(), rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::diagonalize;

    fn grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
        let n = ((stop - start) / step).round() as usize;
        (0..=n).map(|i| start + step * i as f64).collect()
    }

    fn resonant_cavity() -> CavityParams {
        CavityParams::new(10_000.0, 0.5, 0.5, 0.4, 2.4).unwrap()
    }

    #[test]
    fn decoupled_cavity_is_single_lorentzian() {
        let cav = resonant_cavity();
        let m = MagnonParams::new(0.0, 17.5, 0.0).unwrap();
        let probe = grid(9_950.0, 10_050.0, 0.1);
        let map = transmission_map(&cav, &m, &[9_900.0, 10_000.0, 10_100.0], &probe).unwrap();
        for row in 0..3 {
            let peaks = map.peaks(row);
            assert_eq!(peaks.len(), 1);
            assert!((peaks[0] - 10_000.0).abs() < 1e-9);
        }
        // On resonance the peak height is sqrt(k1 k2) / (kappa / 2).
        let top = s21(&cav, &m, 10_000.0);
        assert!((top - 0.5 / 1.9).abs() < 1e-12);
    }

    #[test]
    fn narrow_lines_put_peaks_on_branches() {
        let cav = CavityParams::new(10_000.0, 0.05, 0.05, 0.05, 0.05).unwrap();
        let m = MagnonParams::new(0.0, 0.2, 41.0).unwrap();
        let step = 0.05;
        let probe = grid(9_900.0, 10_100.0, step);
        let sweep = grid(9_940.0, 10_060.0, 5.0);
        let map = transmission_map(&cav, &m, &sweep, &probe).unwrap();
        for (i, &wm) in sweep.iter().enumerate() {
            let (lo, hi) = map.branch_peaks(i).unwrap();
            let b = diagonalize(&cav, &MagnonParams { omega_m: wm, ..m }).unwrap();
            assert!((lo - b.omega_lp).abs() <= step / 2.0 + 1e-9, "{wm}: {lo} vs {}", b.omega_lp);
            assert!((hi - b.omega_up).abs() <= step / 2.0 + 1e-9, "{wm}: {hi} vs {}", b.omega_up);
        }
    }

    #[test]
    fn avoided_crossing_minimum_at_resonance() {
        let cav = resonant_cavity();
        let m = MagnonParams::new(0.0, 17.5, 41.0).unwrap();
        let probe = grid(9_850.0, 10_150.0, 0.2);
        let sweep = grid(9_900.0, 10_100.0, 2.0);
        let map = transmission_map(&cav, &m, &sweep, &probe).unwrap();
        let (_, _, gap) = map.min_gap().unwrap();
        // Peak positions are grid-quantized, so neighbouring rows can tie.
        let resonant = sweep.iter().position(|&w| w == 10_000.0).unwrap();
        let (lo, hi) = map.branch_peaks(resonant).unwrap();
        assert_eq!(hi - lo, gap);
        for (i, &wm) in sweep.iter().enumerate() {
            let (lo, hi) = map.branch_peaks(i).unwrap();
            if (wm - 10_000.0).abs() > 10.0 {
                assert!(hi - lo > gap + 0.2, "{wm}");
            }
        }
        // Dissipation pushes the |S21| maxima slightly apart from 2 g.
        assert!(gap > 82.0 && gap < 83.0, "gap {gap}");
    }

    #[test]
    fn port_swap_reciprocity() {
        let a = CavityParams::new(10_000.0, 0.3, 1.1, 0.4, 2.0).unwrap();
        let b = CavityParams { kappa_1: a.kappa_2, kappa_2: a.kappa_1, ..a };
        let m = MagnonParams::new(10_010.0, 17.5, 41.0).unwrap();
        for w in grid(9_900.0, 10_100.0, 3.7) {
            assert_eq!(s21(&a, &m, w), s21(&b, &m, w));
        }
    }

    #[test]
    fn bad_grids_rejected() {
        let cav = resonant_cavity();
        let m = MagnonParams::new(0.0, 17.5, 41.0).unwrap();
        assert!(transmission_map(&cav, &m, &[], &[1.0]).is_err());
        assert!(transmission_map(&cav, &m, &[1.0], &[]).is_err());
        assert!(transmission_map(&cav, &m, &[1.0], &[2.0, 1.0]).is_err());
    }

    #[test]
    fn csv_layout() {
        let cav = resonant_cavity();
        let m = MagnonParams::new(0.0, 17.5, 41.0).unwrap();
        let map = transmission_map(&cav, &m, &[10_000.0], &[9_990.0, 10_000.0]).unwrap();
        let mut buf = Vec::new();
        map.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], "omega_m_MHz,9990,10000");
        assert!(lines[1].starts_with("10000,"));
        assert_eq!(lines[1].split(',').count(), 3);
    }
}
