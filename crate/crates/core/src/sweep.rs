//! Quasi-static forward/backward scans of drive power or detuning.
//!
//! Each trace follows a stable root of the cubic by continuation: at every
//! grid point the stable root nearest the previous state is chosen, and when
//! the occupied branch has been annihilated at a fold the state drops onto
//! the remaining stable root and a switch event is recorded.

use std::io::Write;

use crate::cubic::{solve_shift, CubicProblem, SteadyStateSet};
use crate::error::{domain, usage, Result};
use crate::units::fmt_sig;

/// Area below which a loop counts as closed (natural units).
pub const LOOP_AREA_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepVariable {
    /// Drive power in mW at fixed detuning.
    Power,
    /// Drive detuning `δ_LP` in MHz at fixed power.
    Detuning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn token(self) -> &'static str {
        match self {
            Direction::Forward => "fwd",
            Direction::Backward => "bwd",
        }
    }
}

/// The cubic with one of `P` / `δ` left free.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepModel {
    pub variable: SweepVariable,
    /// Detuning (MHz) for power sweeps, power (mW) for detuning sweeps.
    pub fixed: f64,
    pub gamma_lp: f64,
    pub c: f64,
}

impl SweepModel {
    pub fn problem_at(&self, x: f64) -> CubicProblem {
        match self.variable {
            SweepVariable::Power => CubicProblem { delta_lp: self.fixed, gamma_lp: self.gamma_lp, c: self.c, power: x },
            SweepVariable::Detuning => {
                CubicProblem { delta_lp: x, gamma_lp: self.gamma_lp, c: self.c, power: self.fixed }
            }
        }
    }

    fn validate_point(&self, x: f64) -> Result<()> {
        self.problem_at(x).validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPlan {
    pub variable: SweepVariable,
    pub start: f64,
    pub stop: f64,
    /// Number of grid points, endpoints included.
    pub steps: usize,
    pub fixed: f64,
    pub gamma_lp: f64,
    pub c: f64,
}

impl SweepPlan {
    pub fn model(&self) -> SweepModel {
        SweepModel { variable: self.variable, fixed: self.fixed, gamma_lp: self.gamma_lp, c: self.c }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps < 2 {
            return Err(usage("a sweep needs at least 2 steps"));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) || self.start == self.stop {
            return Err(usage("sweep start and stop must be finite and distinct"));
        }
        let m = self.model();
        m.validate_point(self.start)?;
        m.validate_point(self.stop)
    }

    /// Forward grid, `start` to `stop` inclusive.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.steps - 1;
        (0..=n)
            .map(|i| if i == n { self.stop } else { self.start + (self.stop - self.start) * i as f64 / n as f64 })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub param: f64,
    pub shift: f64,
    /// Index of the occupied root within the steady-state set at `param`.
    pub root_index: usize,
    /// The state arrived here through a switch.
    pub switched: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchEvent {
    /// Midpoint of the grid step over which the branch vanished.
    pub param: f64,
    pub shift_before: f64,
    pub shift_after: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub direction: Direction,
    pub variable: SweepVariable,
    pub points: Vec<TracePoint>,
    pub switches: Vec<SwitchEvent>,
    /// Set when `c = 0`: the trace is identically zero.
    pub degenerate: bool,
}

impl Trace {
    pub fn params(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.param).collect()
    }

    pub fn shifts(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.shift).collect()
    }
}

/// Continuation along an arbitrary ordered grid.
pub fn continue_along(model: &SweepModel, grid: &[f64], direction: Direction) -> Result<Trace> {
    if grid.is_empty() {
        return Err(usage("empty sweep grid"));
    }
    let mut points: Vec<TracePoint> = Vec::with_capacity(grid.len());
    let mut switches = Vec::new();
    let mut prev: Option<(f64, SteadyStateSet)> = None;

    for &x in grid {
        model.validate_point(x)?;
        let set = solve_shift(&model.problem_at(x));
        let (index, shift, switched) = match &prev {
            None => {
                // Start on the branch continuously connected to zero shift.
                let (i, r) = set
                    .stable()
                    .min_by(|a, b| a.1.shift.abs().total_cmp(&b.1.shift.abs()))
                    .ok_or_else(|| domain("no stable root at sweep start"))?;
                (i, r.shift, false)
            }
            Some((prev_shift, prev_set)) => {
                let (i, r) = set
                    .stable()
                    .min_by(|a, b| (a.1.shift - prev_shift).abs().total_cmp(&(b.1.shift - prev_shift).abs()))
                    .ok_or_else(|| domain(format!("no stable root at {x}")))?;
                let switched = branch_vanished(prev_set, *prev_shift, &set, r.shift);
                (i, r.shift, switched)
            }
        };
        if switched {
            let last = points.last().expect("switch needs a previous point");
            switches.push(SwitchEvent { param: 0.5 * (last.param + x), shift_before: last.shift, shift_after: shift });
        }
        points.push(TracePoint { param: x, shift, root_index: index, switched });
        prev = Some((shift, set));
    }

    Ok(Trace { direction, variable: model.variable, points, switches, degenerate: model.c == 0.0 })
}

/// True when the previously occupied stable branch no longer exists and the
/// new state lies across the separatrix (the previous unstable root).
fn branch_vanished(prev_set: &SteadyStateSet, prev_shift: f64, set: &SteadyStateSet, shift: f64) -> bool {
    if set.is_bistable() || !prev_set.is_bistable() {
        return false;
    }
    let Some(separatrix) = prev_set.roots.iter().find(|r| !r.is_stable()).map(|r| r.shift) else {
        return false;
    };
    (prev_shift - separatrix).signum() != (shift - separatrix).signum()
}

/// Forward (`start → stop`) and backward (`stop → start`) traces.
pub fn run_sweep(plan: &SweepPlan) -> Result<(Trace, Trace)> {
    plan.validate()?;
    let model = plan.model();
    let mut grid = plan.grid();
    let forward = continue_along(&model, &grid, Direction::Forward)?;
    grid.reverse();
    let backward = continue_along(&model, &grid, Direction::Backward)?;
    Ok((forward, backward))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    Cw,
    Ccw,
    None,
}

impl Orientation {
    pub fn label(self) -> &'static str {
        match self {
            Orientation::Cw => "CW",
            Orientation::Ccw => "CCW",
            Orientation::None => "None",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HysteresisLoop {
    pub area: f64,
    pub signed_area: f64,
    pub orientation: Orientation,
    /// Parameter at which the shift jumps upward.
    pub switch_up: Option<f64>,
    /// Parameter at which the shift jumps downward.
    pub switch_down: Option<f64>,
}

/// Area and orientation of the closed curve traced by a forward scan
/// followed by the backward scan, in the (parameter, shift) plane.
///
/// Counter-clockwise (parameter to the right, shift upward) means positive
/// signed area.
pub fn loop_metrics(forward: &Trace, backward: &Trace) -> Result<HysteresisLoop> {
    let f = forward.params();
    let mut b = backward.params();
    b.reverse();
    if f.len() < 2 || f != b {
        return Err(usage("forward and backward traces must share one parameter grid"));
    }
    let polygon: Vec<(f64, f64)> =
        forward.points.iter().chain(backward.points.iter()).map(|p| (p.param, p.shift)).collect();
    let n = polygon.len();
    let twice: f64 = (0..n)
        .map(|i| {
            let (x0, y0) = polygon[i];
            let (x1, y1) = polygon[(i + 1) % n];
            x0 * y1 - x1 * y0
        })
        .sum();
    // Below the tolerance the shoelace sum is round-off; report a clean zero.
    let signed_area = match 0.5 * twice {
        a if a.abs() < LOOP_AREA_TOL => 0.0,
        a => a,
    };
    let area = signed_area.abs();
    let orientation = if area == 0.0 {
        Orientation::None
    } else if signed_area > 0.0 {
        Orientation::Ccw
    } else {
        Orientation::Cw
    };

    let events = forward.switches.iter().chain(backward.switches.iter());
    let switch_up = events.clone().find(|s| s.shift_after > s.shift_before).map(|s| s.param);
    let switch_down = events.clone().find(|s| s.shift_after < s.shift_before).map(|s| s.param);
    Ok(HysteresisLoop { area, signed_area, orientation, switch_up, switch_down })
}

/// Upper-branch shift `Δ_UP = ξ·Δ_LP`, with switch events at the same parameters.
pub fn upper_branch_shift(lp_trace: &Trace, xi: f64) -> Trace {
    let mut t = lp_trace.clone();
    for p in &mut t.points {
        p.shift *= xi;
    }
    for s in &mut t.switches {
        s.shift_before *= xi;
        s.shift_after *= xi;
    }
    t
}

/// Plot-ready CSV for one trace:
/// `param,delta_LP_MHz[,delta_UP_MHz],direction,switch`.
pub fn write_trace_csv<W: Write>(trace: &Trace, xi: Option<f64>, mut out: W) -> std::io::Result<()> {
    match xi {
        Some(_) => writeln!(out, "param,delta_LP_MHz,delta_UP_MHz,direction,switch")?,
        None => writeln!(out, "param,delta_LP_MHz,direction,switch")?,
    }
    for p in &trace.points {
        write!(out, "{},{}", fmt_sig(p.param), fmt_sig(p.shift))?;
        if let Some(xi) = xi {
            write!(out, ",{}", fmt_sig(xi * p.shift))?;
        }
        writeln!(out, ",{},{}", trace.direction.token(), u8::from(p.switched))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cubic::{classify_stability, fold_points, threshold_detuning};

    fn power_plan(delta: f64, gamma: f64, c: f64, stop: f64, steps: usize) -> SweepPlan {
        SweepPlan { variable: SweepVariable::Power, start: 0.0, stop, steps, fixed: delta, gamma_lp: gamma, c }
    }

    fn detuning_plan(power: f64, gamma: f64, c: f64, steps: usize) -> SweepPlan {
        SweepPlan {
            variable: SweepVariable::Detuning,
            start: -60.0,
            stop: 60.0,
            steps,
            fixed: power,
            gamma_lp: gamma,
            c,
        }
    }

    /// Every point is a stable root; shifts move continuously between switches.
    fn check_trace(plan: &SweepPlan, trace: &Trace) {
        let model = plan.model();
        for p in &trace.points {
            let problem = model.problem_at(p.param);
            let cls = classify_stability(&problem, p.shift).unwrap();
            assert!(cls.is_stable(), "unstable point at {}", p.param);
        }
        for w in trace.points.windows(2) {
            if w[1].switched {
                continue;
            }
            let problem = model.problem_at(w[1].param);
            // dΔ/dx from implicit differentiation of F.
            let dfdx = match plan.variable {
                SweepVariable::Power => -plan.c,
                SweepVariable::Detuning => 2.0 * (w[1].shift + w[1].param) * w[1].shift,
            };
            let local = (dfdx / problem.slope(w[1].shift)).abs();
            let step = (w[1].param - w[0].param).abs();
            assert!((w[1].shift - w[0].shift).abs() <= 10.0 * local * step + 1e-9, "discontinuity at {}", w[1].param);
        }
    }

    #[test]
    fn resonant_power_sweep_brackets_fold_window() {
        let plan = power_plan(-14.1, 10.65, 3.15, 316.0, 3161);
        let (fwd, bwd) = run_sweep(&plan).unwrap();
        check_trace(&plan, &fwd);
        check_trace(&plan, &bwd);
        assert_eq!(fwd.switches.len(), 1);
        assert_eq!(bwd.switches.len(), 1);
        let up = fwd.switches[0];
        let down = bwd.switches[0];
        assert!(up.shift_after > up.shift_before);
        assert!(down.shift_after < down.shift_before);
        assert!(up.param > down.param);

        let w = fold_points(-14.1, 10.65, 3.15).unwrap().unwrap();
        let step = 316.0 / 3160.0;
        assert!((up.param - w.p_upper).abs() <= step);
        assert!((down.param - w.p_lower).abs() <= step);

        let lp = loop_metrics(&fwd, &bwd).unwrap();
        assert_eq!(lp.orientation, Orientation::Ccw);
        assert_eq!(lp.switch_up, Some(up.param));
        assert_eq!(lp.switch_down, Some(down.param));
    }

    #[test]
    fn monostable_traces_coincide() {
        let plan = power_plan(-0.9 * threshold_detuning(10.65), 10.65, 3.15, 316.0, 500);
        let (fwd, bwd) = run_sweep(&plan).unwrap();
        assert!(fwd.switches.is_empty() && bwd.switches.is_empty());
        for (a, b) in fwd.points.iter().zip(bwd.points.iter().rev()) {
            assert_eq!(a.param, b.param);
            assert!((a.shift - b.shift).abs() < 1e-9);
        }
        let lp = loop_metrics(&fwd, &bwd).unwrap();
        assert_eq!(lp.orientation, Orientation::None);
        assert!(lp.area < LOOP_AREA_TOL);
    }

    #[test]
    fn negative_c_mirror() {
        let pos = power_plan(-17.2, 10.65, 4.0, 316.0, 1001);
        let neg = power_plan(17.2, 10.65, -4.0, 316.0, 1001);
        let (pf, pb) = run_sweep(&pos).unwrap();
        let (nf, nb) = run_sweep(&neg).unwrap();
        for (a, b) in pf.points.iter().zip(&nf.points).chain(pb.points.iter().zip(&nb.points)) {
            assert!((a.shift + b.shift).abs() <= 1e-12 * a.shift.abs().max(1.0));
        }
        assert_eq!(pf.switches.len(), nf.switches.len());
        assert_eq!(loop_metrics(&pf, &pb).unwrap().orientation, Orientation::Ccw);
        assert_eq!(loop_metrics(&nf, &nb).unwrap().orientation, Orientation::Cw);
    }

    #[test]
    fn detuning_sweeps_are_counter_clockwise_for_both_signs() {
        for (power, c) in [(316.2, 1.85), (316.2, -3.01)] {
            let plan = detuning_plan(power, 10.65, c, 6001);
            let (fwd, bwd) = run_sweep(&plan).unwrap();
            check_trace(&plan, &fwd);
            check_trace(&plan, &bwd);
            let lp = loop_metrics(&fwd, &bwd).unwrap();
            assert_eq!(lp.orientation, Orientation::Ccw, "c = {c}");
        }
    }

    #[test]
    fn zero_c_is_flagged_not_rejected() {
        let plan = detuning_plan(100.0, 10.65, 0.0, 50);
        let (fwd, bwd) = run_sweep(&plan).unwrap();
        assert!(fwd.degenerate && bwd.degenerate);
        assert!(fwd.points.iter().all(|p| p.shift == 0.0));
    }

    #[test]
    fn plan_validation() {
        let mut plan = power_plan(-14.1, 10.65, 3.15, 316.0, 1);
        assert!(run_sweep(&plan).is_err());
        plan.steps = 10;
        plan.stop = plan.start;
        assert!(run_sweep(&plan).is_err());
        plan.stop = -5.0;
        assert!(run_sweep(&plan).is_err());
    }

    #[test]
    fn mismatched_grids_rejected() {
        let (fwd, _) = run_sweep(&power_plan(-14.1, 10.65, 3.15, 316.0, 100)).unwrap();
        let (_, bwd) = run_sweep(&power_plan(-14.1, 10.65, 3.15, 300.0, 100)).unwrap();
        assert!(loop_metrics(&fwd, &bwd).is_err());
    }

    #[test]
    fn upper_branch_is_scaled_copy() {
        let (fwd, _) = run_sweep(&power_plan(-31.8, 16.8, 25.2, 316.0, 2000)).unwrap();
        let up = upper_branch_shift(&fwd, 0.065);
        assert_eq!(up.switches.len(), fwd.switches.len());
        for (u, l) in up.switches.iter().zip(&fwd.switches) {
            assert_eq!(u.param, l.param);
            assert!((u.shift_after - 0.065 * l.shift_after).abs() < 1e-12);
        }
        let zero = upper_branch_shift(&fwd, 0.0);
        assert!(zero.points.iter().all(|p| p.shift == 0.0));
        let (a, b) = (0.02, 0.045);
        let sum = upper_branch_shift(&fwd, a + b);
        let pa = upper_branch_shift(&fwd, a);
        let pb = upper_branch_shift(&fwd, b);
        for ((s, x), y) in sum.points.iter().zip(&pa.points).zip(&pb.points) {
            assert!((s.shift - (x.shift + y.shift)).abs() < 1e-12 * s.shift.abs().max(1.0));
        }
    }

    #[test]
    fn refinement_moves_switches_less_than_coarse_step() {
        let coarse = power_plan(-14.1, 10.65, 3.15, 316.0, 317);
        let fine = power_plan(-14.1, 10.65, 3.15, 316.0, 633);
        let (cf, cb) = run_sweep(&coarse).unwrap();
        let (ff, fb) = run_sweep(&fine).unwrap();
        let step = 1.0;
        assert!((cf.switches[0].param - ff.switches[0].param).abs() < step);
        assert!((cb.switches[0].param - fb.switches[0].param).abs() < step);
    }

    #[test]
    fn csv_columns() {
        let (fwd, _) = run_sweep(&power_plan(-14.1, 10.65, 3.15, 316.0, 5)).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&fwd, Some(0.065), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "param,delta_LP_MHz,delta_UP_MHz,direction,switch");
        assert_eq!(lines.next().unwrap(), "0,0,0,fwd,0");
        assert_eq!(lines.count(), 4);
    }
}
