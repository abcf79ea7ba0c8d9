use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde_json::{json, Value};

use magpol_core::cubic::{detuning_window, fold_points, Stability};
use magpol_core::dynamics::{
    full_steady_state, integrate, write_trajectory_csv, DriveTerm, ModeAmplitudes, SimConfig, SystemParams,
};
use magpol_core::fit::{fit_c, fit_xi, load_csv, FitOptions, SweepMeta};
use magpol_core::model::{coil_to_magnon, kerr_coefficient, magnon_to_coil, transmission_map, Axis, MaterialSpec};
use magpol_core::sweep::{loop_metrics, run_sweep, write_trace_csv, SweepPlan, Trace};
use magpol_core::units::fmt_sig;

use crate::config::{AxisName, RunConfig, Variable};
use crate::output::{write_atomic, write_json};
use crate::Failure;

/// What a command produced: a human summary and the same facts as JSON.
pub struct Report {
    pub text: String,
    pub json: Value,
}

fn shown(path: &Path) -> String {
    path.display().to_string()
}

pub fn kerr(cfg: &RunConfig, axis: Option<AxisName>, dry: bool) -> Result<Option<Report>, Failure> {
    let spec = cfg.material(axis)?;
    spec.validate()?;
    if dry {
        return Ok(None);
    }
    let k = kerr_coefficient(&spec)?;
    let along = |a: Axis| kerr_coefficient(&MaterialSpec { axis: a, ..spec });
    let ratio = along(Axis::Axis110)?.hz() / along(Axis::Axis100)?.hz();
    let label = axis.or(cfg.material.as_ref().map(|m| m.axis)).map_or("?", AxisName::label);
    Ok(Some(Report {
        text: format!(
            "K[{label}] = {} Hz ({} MHz)\nK[110]/K[100] = {}",
            fmt_sig(k.hz()),
            fmt_sig(k.mhz()),
            fmt_sig(ratio)
        ),
        json: json!({
            "axis": label,
            "kerr_hz": k.hz(),
            "kerr_mhz": k.mhz(),
            "ratio_110_over_100": ratio,
        }),
    }))
}

pub fn spectrum(cfg: &RunConfig, dry: bool) -> Result<Option<Report>, Failure> {
    let task = cfg.spectrum.as_ref().ok_or_else(|| Failure::missing("spectrum"))?;
    let cavity = cfg.cavity()?;
    let magnon = cfg.magnon()?;
    let coil = cfg.coil()?;
    let magnon_grid = match (&task.magnon, &task.coil) {
        (Some(g), None) => g.values("spectrum.magnon")?,
        (None, Some(g)) => {
            let cal = coil.ok_or_else(|| Failure::missing("coil"))?;
            g.values("spectrum.coil")?.into_iter().map(|i| coil_to_magnon(i, &cal)).collect()
        }
        _ => return Err(Failure::config("spectrum: give exactly one of `magnon` or `coil` grids")),
    };
    let probe = task.probe.values("spectrum.probe")?;
    if dry {
        return Ok(None);
    }
    let map = transmission_map(&cavity, &magnon, &magnon_grid, &probe)?;
    let path = cfg.output.dir.join("spectrum.csv");
    write_atomic(&path, |w| map.write_csv(w))?;

    let gap = map.min_gap().map(|(row, omega_m, gap)| {
        let current = coil.map(|cal| magnon_to_coil(omega_m, &cal));
        (row, omega_m, gap, current)
    });
    let mut text = format!("wrote {} ({} x {})", shown(&path), magnon_grid.len(), probe.len());
    match gap {
        Some((_, omega_m, gap, current)) => {
            text += &format!("\nminimum gap {} MHz at omega_m = {} MHz", fmt_sig(gap), fmt_sig(omega_m));
            if let Some(i) = current {
                text += &format!(" (coil current {} A)", fmt_sig(i));
            }
        }
        None => text += "\nno row shows two resolved peaks",
    }
    let json = json!({
        "output": shown(&path),
        "rows": magnon_grid.len(),
        "columns": probe.len(),
        "min_gap": gap.map(|(row, omega_m, gap, current)| json!({
            "row": row,
            "omega_m": omega_m,
            "gap": gap,
            "coil_current": current,
        })),
    });
    Ok(Some(Report { text, json }))
}

fn switches(trace: &Trace) -> Value {
    trace
        .switches
        .iter()
        .map(|s| json!({"param": s.param, "shift_before": s.shift_before, "shift_after": s.shift_after}))
        .collect()
}

pub fn sweep(cfg: &RunConfig, dry: bool) -> Result<Option<Report>, Failure> {
    let task = cfg.sweep.as_ref().ok_or_else(|| Failure::missing("sweep"))?;
    let (start, stop, fixed) = match task.variable {
        Variable::Power => (
            task.start.power_mw("sweep.start")?,
            task.stop.power_mw("sweep.stop")?,
            task.fixed.frequency_mhz("sweep.fixed")?,
        ),
        Variable::Detuning => (
            task.start.frequency_mhz("sweep.start")?,
            task.stop.frequency_mhz("sweep.stop")?,
            task.fixed.power_mw("sweep.fixed")?,
        ),
    };
    let plan = SweepPlan {
        variable: task.variable.sweep_variable(),
        start,
        stop,
        steps: task.steps,
        fixed,
        gamma_lp: task.gamma_lp,
        c: task.c,
    };
    plan.validate()?;
    if dry {
        return Ok(None);
    }
    let (fwd, bwd) = run_sweep(&plan)?;
    let metrics = loop_metrics(&fwd, &bwd)?;
    let dir = &cfg.output.dir;
    let (fwd_path, bwd_path) = (dir.join("sweep_forward.csv"), dir.join("sweep_backward.csv"));
    write_atomic(&fwd_path, |w| write_trace_csv(&fwd, task.xi, w))?;
    write_atomic(&bwd_path, |w| write_trace_csv(&bwd, task.xi, w))?;

    let window = match (task.c == 0.0, task.variable) {
        (true, _) => Value::Null,
        (false, Variable::Power) => fold_points(fixed, plan.gamma_lp, plan.c)?
            .map_or(Value::Null, |w| json!({"p_lower": w.p_lower, "p_upper": w.p_upper})),
        (false, Variable::Detuning) if fixed > 0.0 => detuning_window(fixed, plan.gamma_lp, plan.c)?
            .map_or(Value::Null, |w| json!({"delta_low": w.delta_low, "delta_high": w.delta_high})),
        (false, Variable::Detuning) => Value::Null,
    };
    let loop_path = dir.join("sweep_loop.json");
    let json = json!({
        "variable": match task.variable { Variable::Power => "power", Variable::Detuning => "detuning" },
        "orientation": metrics.orientation.label(),
        "area": metrics.area,
        "signed_area": metrics.signed_area,
        "switch_up": metrics.switch_up,
        "switch_down": metrics.switch_down,
        "bistable_window": window,
        "forward_switches": switches(&fwd),
        "backward_switches": switches(&bwd),
        "degenerate": fwd.degenerate || bwd.degenerate,
        "outputs": [shown(&fwd_path), shown(&bwd_path), shown(&loop_path)],
    });
    write_json(&loop_path, &json)?;
    let opt = |x: Option<f64>| x.map_or_else(|| "-".to_string(), fmt_sig);
    let text = format!(
        "orientation {}  area {}  switch up {}  switch down {}\nwrote {}, {}, {}",
        metrics.orientation.label(),
        fmt_sig(metrics.area),
        opt(metrics.switch_up),
        opt(metrics.switch_down),
        shown(&fwd_path),
        shown(&bwd_path),
        shown(&loop_path),
    );
    Ok(Some(Report { text, json }))
}

fn amplitudes_json(s: &ModeAmplitudes) -> Value {
    json!({"a": [s.a.re, s.a.im], "b": [s.b.re, s.b.im], "n_a": s.n_a(), "n_b": s.n_b()})
}

pub fn simulate(cfg: &RunConfig, dry: bool) -> Result<Option<Report>, Failure> {
    let task = cfg.simulate.as_ref().ok_or_else(|| Failure::missing("simulate"))?;
    let sys = SystemParams { cavity: cfg.cavity()?, magnon: cfg.magnon()? };
    let kerr = cfg.kerr()?;
    let drive = match (task.strength, task.power, task.eta) {
        (Some(s), None, None) => DriveTerm::new(task.omega_d, s)?,
        (None, Some(p), Some(eta)) => DriveTerm::from_power(task.omega_d, p.power_mw("simulate.power")?, eta)?,
        _ => return Err(Failure::config("simulate: give either `strength` or both `power` and `eta`")),
    };
    let initial = task.initial.map_or_else(ModeAmplitudes::default, |s| {
        ModeAmplitudes::new(Complex64::new(s.a[0], s.a[1]), Complex64::new(s.b[0], s.b[1]))
    });
    let sim = SimConfig { t_end: task.t_end, dt: task.dt, rel_tol: task.rel_tol, abs_tol: task.abs_tol, initial };
    sim.validate()?;
    if dry {
        return Ok(None);
    }
    let result = integrate(&sim, &sys, &drive, kerr)?;
    let fixed = full_steady_state(&sys, &drive, kerr)?;
    let end = result.final_state;
    let distance = |s: &ModeAmplitudes| ((s.a - end.a).norm_sqr() + (s.b - end.b).norm_sqr()).sqrt();
    let nearest = fixed
        .iter()
        .enumerate()
        .min_by(|x, y| distance(&x.1.amplitudes).total_cmp(&distance(&y.1.amplitudes)))
        .map(|(i, s)| (i, distance(&s.amplitudes)));

    let dir = &cfg.output.dir;
    let (traj_path, state_path) = (dir.join("trajectory.csv"), dir.join("simulate.json"));
    write_atomic(&traj_path, |w| write_trajectory_csv(&result.trajectory, w))?;
    let json = json!({
        "final_state": amplitudes_json(&end),
        "settled": result.settled,
        "tail_derivative": result.tail_derivative,
        "accepted_steps": result.accepted_steps,
        "rejected_steps": result.rejected_steps,
        "fixed_points": fixed.iter().map(|s| json!({
            "amplitudes": amplitudes_json(&s.amplitudes),
            "stable": s.stability == Stability::Stable,
            "magnon_pull": s.magnon_pull,
        })).collect::<Value>(),
        "nearest_fixed_point": nearest.map(|(i, d)| json!({"index": i, "distance": d})),
        "outputs": [shown(&traj_path), shown(&state_path)],
    });
    write_json(&state_path, &json)?;
    let text = format!(
        "{} after {} steps ({} rejected); |b|^2 = {}; {} fixed point(s){}\nwrote {}, {}",
        if result.settled { "settled" } else { "not settled" },
        result.accepted_steps,
        result.rejected_steps,
        fmt_sig(end.n_b()),
        fixed.len(),
        nearest.map_or(String::new(), |(i, d)| format!(", nearest #{i} at distance {}", fmt_sig(d))),
        shown(&traj_path),
        shown(&state_path),
    );
    Ok(Some(Report { text, json }))
}

pub fn fit(cfg: &RunConfig, dry: bool) -> Result<Option<Report>, Failure> {
    let task = cfg.fit.as_ref().ok_or_else(|| Failure::missing("fit"))?;
    let data: &PathBuf =
        task.data.as_ref().ok_or_else(|| Failure::config("fit: no data file (set `data` or pass --data)"))?;
    let fixed = match task.variable {
        Variable::Power => task.fixed.frequency_mhz("fit.fixed")?,
        Variable::Detuning => task.fixed.power_mw("fit.fixed")?,
    };
    let opts = FitOptions {
        gamma_lp: task.gamma_lp,
        free_gamma: task.free_gamma,
        c0: task.c0,
        direction_aware: task.direction_aware,
        allow_single_direction: task.allow_single_direction,
        max_iterations: task.max_iterations,
    };
    if dry {
        return Ok(None);
    }
    let meta = SweepMeta { variable: task.variable.sweep_variable(), fixed };
    let lp = load_csv(data)?.with_meta(meta);
    let result = fit_c(&lp, &opts)?;
    let xi = match &task.up_data {
        Some(p) => Some(fit_xi(&lp, &load_csv(p)?)?),
        None => None,
    };
    let path = cfg.output.dir.join("fit.json");
    let json = json!({
        "c_hat": result.c_hat,
        "gamma_hat": result.gamma_hat,
        "rms_residual": result.rms_residual,
        "iterations": result.iterations,
        "converged": result.converged,
        "restarts": result.restarts,
        "xi_hat": xi,
        "records": lp.len(),
        "output": shown(&path),
    });
    write_json(&path, &json)?;
    let mut text = format!(
        "c = {}  rms residual {} MHz  ({} iterations, {} restarts{})",
        fmt_sig(result.c_hat),
        fmt_sig(result.rms_residual),
        result.iterations,
        result.restarts,
        if result.converged { "" } else { ", not converged" },
    );
    if let Some(g) = result.gamma_hat {
        text += &format!("\ngamma_LP = {} MHz", fmt_sig(g));
    }
    if let Some(xi) = xi {
        text += &format!("\nxi = {}", fmt_sig(xi));
    }
    text += &format!("\nwrote {}", shown(&path));
    Ok(Some(Report { text, json }))
}
