//! Least-squares estimation of `c` (and optionally `γ_LP`) from sweep data,
//! plus the upper/lower shift ratio `ξ`.
//!
//! Model shifts come from continuation traces evaluated on the records' own
//! parameter values, so forward records are compared with the forward trace
//! and backward records with the backward trace.

mod data;

pub use data::{load_csv, read_csv, DataSet, Record, SweepMeta};

use nalgebra::{DMatrix, DVector};

use crate::cubic::CubicProblem;
use crate::error::{domain, usage, Error, Result};
use crate::sweep::{continue_along, Direction, SweepModel};

pub const MIN_RECORDS: usize = 4;
const STEP_TOL: f64 = 1e-8;
const GRADIENT_TOL: f64 = 1e-10;
const MAX_RESTARTS: usize = 5;
/// Guess multipliers for successive restarts after a non-finite response.
const RESTART_SCALES: [f64; MAX_RESTARTS] = [0.5, 2.0, 0.1, 10.0, 0.01];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Fixed `γ_LP`, or the starting value when `free_gamma` is set.
    pub gamma_lp: f64,
    /// Fit `γ_LP` together with `c`. Off by default: the two are strongly
    /// correlated near threshold.
    pub free_gamma: bool,
    /// Starting `c`; defaults to the median of the algebraic per-record estimates.
    pub c0: Option<f64>,
    /// Compare each record with the trace of its own scan direction; when
    /// false every record is compared with the forward trace.
    pub direction_aware: bool,
    /// Accept data with only one scan direction.
    pub allow_single_direction: bool,
    pub max_iterations: usize,
}

impl FitOptions {
    pub fn new(gamma_lp: f64) -> Self {
        FitOptions {
            gamma_lp,
            free_gamma: false,
            c0: None,
            direction_aware: true,
            allow_single_direction: false,
            max_iterations: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    /// MHz³/mW.
    pub c_hat: f64,
    /// Present only when `γ_LP` was fitted.
    pub gamma_hat: Option<f64>,
    /// Root-mean-square shift residual, MHz.
    pub rms_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub restarts: usize,
}

fn meta_of(data: &DataSet) -> Result<SweepMeta> {
    data.meta.ok_or_else(|| usage("data set has no sweep metadata (variable and fixed value)"))
}

fn problem(meta: SweepMeta, gamma: f64, c: f64, x: f64) -> CubicProblem {
    SweepModel { variable: meta.variable, fixed: meta.fixed, gamma_lp: gamma, c }.problem_at(x)
}

/// Model shift for every record, in record order.
fn model_shifts(data: &DataSet, c: f64, gamma: f64, direction_aware: bool) -> Result<Vec<f64>> {
    let meta = meta_of(data)?;
    let model = SweepModel { variable: meta.variable, fixed: meta.fixed, gamma_lp: gamma, c };
    let mut out = vec![f64::NAN; data.len()];
    if direction_aware {
        for dir in [Direction::Forward, Direction::Backward] {
            let idx: Vec<usize> = (0..data.len()).filter(|&i| data.records[i].direction == dir).collect();
            if idx.is_empty() {
                continue;
            }
            let grid: Vec<f64> = idx.iter().map(|&i| data.records[i].x).collect();
            let trace = continue_along(&model, &grid, dir)?;
            for (&i, p) in idx.iter().zip(&trace.points) {
                out[i] = p.shift;
            }
        }
    } else {
        let mut grid: Vec<f64> = data.records.iter().map(|r| r.x).collect();
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        let trace = continue_along(&model, &grid, Direction::Forward)?;
        for (i, r) in data.records.iter().enumerate() {
            let k = grid.partition_point(|&g| g < r.x);
            out[i] = trace.points[k].shift;
        }
    }
    Ok(out)
}

/// `observed − model` for each record.
pub fn residuals(data: &DataSet, c: f64, gamma_lp: f64, direction_aware: bool) -> Result<Vec<f64>> {
    let model = model_shifts(data, c, gamma_lp, direction_aware)?;
    Ok(data.records.iter().zip(model).map(|(r, m)| r.shift - m).collect())
}

pub fn rms(residuals: &[f64]) -> f64 {
    if residuals.is_empty() {
        return 0.0;
    }
    (residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt()
}

/// Per-record `c` from solving the cubic for `c` at the observed shift.
fn algebraic_guess(data: &DataSet, gamma: f64) -> Result<f64> {
    let meta = meta_of(data)?;
    let mut est: Vec<f64> = data
        .records
        .iter()
        .filter_map(|r| {
            let p = problem(meta, gamma, 1.0, r.x);
            (p.power > 0.0).then(|| {
                let u = r.shift + p.delta_lp;
                (u * u + 0.25 * gamma * gamma) * r.shift / p.power
            })
        })
        .filter(|c| c.is_finite())
        .collect();
    if est.is_empty() {
        return Err(domain("no record with positive drive power"));
    }
    est.sort_by(f64::total_cmp);
    let n = est.len();
    Ok(if n % 2 == 1 { est[n / 2] } else { 0.5 * (est[n / 2 - 1] + est[n / 2]) })
}

struct Eval {
    r: DVector<f64>,
    /// ∂(model shift)/∂θ, by implicit differentiation along the occupied branch.
    j: DMatrix<f64>,
}

fn evaluate(data: &DataSet, theta: &[f64], opts: &FitOptions) -> Option<Eval> {
    let c = theta[0];
    let gamma = if opts.free_gamma { theta[1] } else { opts.gamma_lp };
    if gamma <= 0.0 || !c.is_finite() {
        return None;
    }
    let meta = data.meta?;
    let model = model_shifts(data, c, gamma, opts.direction_aware).ok()?;
    let n = data.len();
    let mut r = DVector::zeros(n);
    let mut j = DMatrix::zeros(n, theta.len());
    for (i, (rec, m)) in data.records.iter().zip(&model).enumerate() {
        if !m.is_finite() {
            return None;
        }
        r[i] = rec.shift - m;
        let p = problem(meta, gamma, c, rec.x);
        let slope = p.slope(*m);
        let deriv = |num: f64| if slope != 0.0 && (num / slope).is_finite() { num / slope } else { 0.0 };
        // F(Δ; c, γ) = 0  ⇒  ∂Δ/∂c = P/F′,  ∂Δ/∂γ = −(γ/2)Δ/F′.
        j[(i, 0)] = deriv(p.power);
        if opts.free_gamma {
            j[(i, 1)] = deriv(-0.5 * gamma * m);
        }
    }
    Some(Eval { r, j })
}

/// Levenberg–Marquardt from `theta`; `None` if the model response at the
/// start is unusable.
fn levenberg_marquardt(data: &DataSet, mut theta: Vec<f64>, opts: &FitOptions) -> Option<(Vec<f64>, f64, usize, bool)> {
    let mut cur = evaluate(data, &theta, opts)?;
    let mut cost = cur.r.norm_squared();
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iterations {
        iterations += 1;
        let jtj = cur.j.transpose() * &cur.j;
        // Residuals are observed − model, so the cost gradient is −Jᵀr.
        let jtr = cur.j.transpose() * &cur.r;
        if jtr.norm() < GRADIENT_TOL {
            converged = true;
            break;
        }
        let mut accepted = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for k in 0..theta.len() {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
            }
            let Some(step) = a.lu().solve(&jtr) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t + s).collect();
            let small = step.norm() <= STEP_TOL * trial.iter().map(|t| t * t).sum::<f64>().sqrt().max(1e-300);
            match evaluate(data, &trial, opts) {
                Some(next) if next.r.norm_squared() <= cost => {
                    cost = next.r.norm_squared();
                    theta = trial;
                    cur = next;
                    lambda = (lambda / 10.0).max(1e-12);
                    accepted = true;
                    converged = small;
                    break;
                }
                _ if small => {
                    converged = true;
                    break;
                }
                _ => lambda *= 10.0,
            }
        }
        if converged || !accepted {
            break;
        }
    }
    let rms = (cost / data.len() as f64).sqrt();
    Some((theta, rms, iterations, converged))
}

/// Fit `c` (and `γ_LP` if requested) to directional sweep data.
pub fn fit_c(data: &DataSet, opts: &FitOptions) -> Result<FitResult> {
    meta_of(data)?;
    if data.len() < MIN_RECORDS {
        return Err(usage(format!("need at least {MIN_RECORDS} records, got {}", data.len())));
    }
    if !(opts.gamma_lp > 0.0 && opts.gamma_lp.is_finite()) {
        return Err(domain("gamma_lp must be positive"));
    }
    let both = data.has_direction(Direction::Forward) && data.has_direction(Direction::Backward);
    if opts.direction_aware && !both && !opts.allow_single_direction {
        return Err(usage("data has a single scan direction; set allow_single_direction to fit it"));
    }

    let c0 = match opts.c0 {
        Some(c) if c.is_finite() => c,
        Some(_) => return Err(usage("initial c must be finite")),
        None => algebraic_guess(data, opts.gamma_lp)?,
    };
    let scales = std::iter::once(1.0).chain(RESTART_SCALES);
    for (restarts, s) in scales.enumerate() {
        let mut theta = vec![c0 * s];
        if opts.free_gamma {
            theta.push(opts.gamma_lp);
        }
        if let Some((theta, rms_residual, iterations, converged)) = levenberg_marquardt(data, theta, opts) {
            return Ok(FitResult {
                c_hat: theta[0],
                gamma_hat: opts.free_gamma.then(|| theta[1]),
                rms_residual,
                iterations,
                converged,
                restarts,
            });
        }
    }
    Err(Error::Numerical(format!("model response not finite after {MAX_RESTARTS} restarts from c0 = {c0}")))
}

/// Origin-constrained slope of upper-branch against lower-branch shifts.
pub fn fit_xi(lp: &DataSet, up: &DataSet) -> Result<f64> {
    if lp.len() != up.len() {
        return Err(usage(format!("lower/upper data lengths differ ({} vs {})", lp.len(), up.len())));
    }
    for (i, (a, b)) in lp.records.iter().zip(&up.records).enumerate() {
        let same_x = (a.x - b.x).abs() <= 1e-9 * a.x.abs().max(b.x.abs()).max(1.0);
        if !same_x || a.direction != b.direction {
            return Err(usage(format!("record {i}: lower/upper grids or directions differ")));
        }
    }
    let sxx: f64 = lp.records.iter().map(|r| r.shift * r.shift).sum();
    if sxx == 0.0 {
        return Err(domain("all lower-branch shifts are zero"));
    }
    let sxy: f64 = lp.records.iter().zip(&up.records).map(|(a, b)| a.shift * b.shift).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::{run_sweep, SweepPlan, SweepVariable};

    fn blue_shift_data() -> (DataSet, SweepPlan) {
        let plan = SweepPlan {
            variable: SweepVariable::Power,
            start: 0.0,
            stop: 316.2,
            steps: 101,
            fixed: -14.1,
            gamma_lp: 10.65,
            c: 3.15,
        };
        let (f, b) = run_sweep(&plan).unwrap();
        (DataSet::from_traces(&[&f, &b], plan.fixed).unwrap(), plan)
    }

    #[test]
    fn noiseless_round_trip() {
        let (ds, _) = blue_shift_data();
        let fit = fit_c(&ds, &FitOptions::new(10.65)).unwrap();
        assert!(fit.converged);
        assert!((fit.c_hat / 3.15 - 1.0).abs() < 1e-3, "{fit:?}");
        assert!(fit.rms_residual < 1e-6);
        assert!(fit.gamma_hat.is_none());
    }

    #[test]
    fn round_trip_from_poor_guess() {
        let (ds, _) = blue_shift_data();
        let opts = FitOptions { c0: Some(2.0), ..FitOptions::new(10.65) };
        let fit = fit_c(&ds, &opts).unwrap();
        assert!((fit.c_hat / 3.15 - 1.0).abs() < 1e-3, "{fit:?}");
    }

    #[test]
    fn frees_gamma_on_request() {
        let (ds, _) = blue_shift_data();
        let opts = FitOptions { free_gamma: true, c0: Some(3.0), gamma_lp: 10.0, ..FitOptions::new(10.65) };
        let fit = fit_c(&ds, &opts).unwrap();
        assert!((fit.c_hat / 3.15 - 1.0).abs() < 1e-3, "{fit:?}");
        assert!((fit.gamma_hat.unwrap() / 10.65 - 1.0).abs() < 1e-3, "{fit:?}");
    }

    #[test]
    fn zero_shifts_fit_zero_c() {
        let records = (0..=10)
            .flat_map(|k| {
                let x = 10.0 * k as f64;
                [Direction::Forward, Direction::Backward].map(|direction| Record { x, shift: 0.0, direction })
            })
            .collect();
        let meta = SweepMeta { variable: SweepVariable::Power, fixed: -14.1 };
        let ds = DataSet::new(records, Some(meta)).unwrap();
        let fit = fit_c(&ds, &FitOptions::new(10.65)).unwrap();
        assert_eq!(fit.c_hat, 0.0);
        assert_eq!(fit.rms_residual, 0.0);
        assert!(fit.converged);
    }

    #[test]
    fn scale_covariance() {
        let (ds, _) = blue_shift_data();
        let s = 7.5;
        let mut scaled = ds.clone();
        for r in &mut scaled.records {
            r.x *= s;
        }
        let a = residuals(&ds, 3.3, 10.65, true).unwrap();
        let b = residuals(&scaled, 3.3 / s, 10.65, true).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9 * x.abs().max(1.0), "{x} vs {y}");
        }
    }

    #[test]
    fn direction_matching_beats_blind_fit() {
        let (ds, _) = blue_shift_data();
        let aware = fit_c(&ds, &FitOptions::new(10.65)).unwrap();
        let blind = fit_c(&ds, &FitOptions { direction_aware: false, ..FitOptions::new(10.65) }).unwrap();
        assert!(aware.rms_residual < blind.rms_residual, "{aware:?} vs {blind:?}");
    }

    #[test]
    fn rms_has_single_minimum_over_decade() {
        let (ds, _) = blue_shift_data();
        let cs: Vec<f64> = (0..=400).map(|k| 3.15 * 10f64.powf(-0.5 + k as f64 / 400.0)).collect();
        let rs: Vec<f64> = cs.iter().map(|&c| rms(&residuals(&ds, c, 10.65, true).unwrap())).collect();
        let argmin = (0..rs.len()).min_by(|&a, &b| rs[a].total_cmp(&rs[b])).unwrap();
        assert!((cs[argmin] / 3.15 - 1.0).abs() < 0.01);
        assert!(rs[..=argmin].windows(2).all(|w| w[1] <= w[0]));
        assert!(rs[argmin..].windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn contract_errors() {
        let (ds, _) = blue_shift_data();
        let mut no_meta = ds.clone();
        no_meta.meta = None;
        assert!(matches!(fit_c(&no_meta, &FitOptions::new(10.65)), Err(Error::Usage(_))));
        assert!(matches!(fit_c(&ds, &FitOptions::new(0.0)), Err(Error::Domain(_))));

        let mut fwd = ds.clone();
        fwd.records.retain(|r| r.direction == Direction::Forward);
        assert!(matches!(fit_c(&fwd, &FitOptions::new(10.65)), Err(Error::Usage(_))));
        let single = FitOptions { allow_single_direction: true, ..FitOptions::new(10.65) };
        assert!((fit_c(&fwd, &single).unwrap().c_hat / 3.15 - 1.0).abs() < 1e-3);

        let mut few = ds.clone();
        few.records.truncate(3);
        assert!(matches!(fit_c(&few, &single), Err(Error::Usage(_))));
    }

    #[test]
    fn xi_is_origin_slope() {
        let (lp, _) = blue_shift_data();
        let mut up = lp.clone();
        for r in &mut up.records {
            r.shift *= 0.065;
        }
        assert!((fit_xi(&lp, &up).unwrap() - 0.065).abs() < 1e-12);
        for r in &mut up.records {
            r.shift = 0.0;
        }
        assert_eq!(fit_xi(&lp, &up).unwrap(), 0.0);
        assert!(matches!(fit_xi(&up, &lp), Err(Error::Domain(_))));
        up.records.pop();
        assert!(matches!(fit_xi(&lp, &up), Err(Error::Usage(_))));
    }
}
