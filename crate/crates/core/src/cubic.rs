//! Steady states of the single-branch driven Kerr reduction
//!
//! ```text
//! F(Δ) = [(Δ + δ)² + (γ/2)²]·Δ − c·P = 0
//! ```
//!
//! for the lower-branch frequency shift `Δ`, with slope-based stability and
//! the fold (saddle-node) geometry that bounds the bistable window.

use std::f64::consts::PI;

use crate::error::{domain, usage, Result};

/// Roots closer than this (MHz) are merged into one fold root.
pub const ROOT_COLLAPSE_TOL: f64 = 1e-7;

/// Relative residual bound every returned root satisfies.
pub const RESIDUAL_TOL: f64 = 1e-9;

/// One operating point of the cubic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicProblem {
    /// `δ_LP = ω_LP − ω_d`, MHz.
    pub delta_lp: f64,
    /// Lower-branch linewidth, MHz.
    pub gamma_lp: f64,
    /// Drive coupling coefficient, MHz³/mW (signed).
    pub c: f64,
    /// Drive power, mW.
    pub power: f64,
}

impl CubicProblem {
    pub fn new(delta_lp: f64, gamma_lp: f64, c: f64, power: f64) -> Result<Self> {
        let p = Self { delta_lp, gamma_lp, c, power };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_lp > 0.0 && self.gamma_lp.is_finite()) {
            return Err(domain(format!("gamma_LP must be positive, got {}", self.gamma_lp)));
        }
        if !(self.power >= 0.0 && self.power.is_finite()) {
            return Err(domain(format!("drive power must be non-negative, got {}", self.power)));
        }
        if !self.delta_lp.is_finite() || !self.c.is_finite() {
            return Err(domain("detuning and c must be finite"));
        }
        Ok(())
    }

    /// The product `c·P` that drives the shift.
    pub fn drive(&self) -> f64 {
        self.c * self.power
    }

    fn half_width_sq(&self) -> f64 {
        0.25 * self.gamma_lp * self.gamma_lp
    }

    /// `F(Δ)`.
    pub fn residual(&self, shift: f64) -> f64 {
        let u = shift + self.delta_lp;
        (u * u + self.half_width_sq()) * shift - self.drive()
    }

    /// `F′(Δ) = 3Δ² + 4δΔ + δ² + (γ/2)²`.
    pub fn slope(&self, shift: f64) -> f64 {
        let d = self.delta_lp;
        3.0 * shift * shift + 4.0 * d * shift + d * d + self.half_width_sq()
    }

    /// `F″(Δ) = 6Δ + 4δ`.
    pub fn curvature(&self, shift: f64) -> f64 {
        6.0 * shift + 4.0 * self.delta_lp
    }

    fn residual_bound(&self) -> f64 {
        RESIDUAL_TOL * self.drive().abs().max(1.0)
    }

    /// Monic coefficients `(b, c, d)` of `Δ³ + bΔ² + cΔ + d`.
    fn monic(&self) -> (f64, f64, f64) {
        let d = self.delta_lp;
        (2.0 * d, d * d + self.half_width_sq(), -self.drive())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stability {
    Stable,
    Unstable,
}

/// A classified root of the cubic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    /// `Δ_LP`, MHz.
    pub shift: f64,
    pub stability: Stability,
    /// Double root at a fold (saddle-node); always reported `Unstable`.
    pub fold: bool,
}

impl SteadyState {
    pub fn multiplicity(&self) -> usize {
        if self.fold {
            2
        } else {
            1
        }
    }

    pub fn is_stable(&self) -> bool {
        self.stability == Stability::Stable
    }
}

/// All real roots of one cubic problem, ascending in shift.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateSet {
    pub roots: Vec<SteadyState>,
}

impl SteadyStateSet {
    /// Number of real roots counted with multiplicity: 1 or 3.
    pub fn count(&self) -> usize {
        self.roots.iter().map(SteadyState::multiplicity).sum()
    }

    pub fn is_bistable(&self) -> bool {
        self.stable().count() == 2
    }

    pub fn at_fold(&self) -> bool {
        self.roots.iter().any(|r| r.fold)
    }

    pub fn stable(&self) -> impl Iterator<Item = (usize, &SteadyState)> {
        self.roots.iter().enumerate().filter(|(_, r)| r.is_stable())
    }

    pub fn shifts(&self) -> Vec<f64> {
        self.roots.iter().map(|r| r.shift).collect()
    }
}

/// Real roots of the monic cubic `x³ + b·x² + c·x + d`, ascending.
///
/// Closed form on the depressed cubic followed by safeguarded Newton
/// polishing. Returns one root when the discriminant says so, otherwise
/// three (possibly nearly coincident) roots.
pub fn monic_cubic_roots(b: f64, c: f64, d: f64) -> Vec<f64> {
    let f = |x: f64| ((x + b) * x + c) * x + d;
    let df = |x: f64| (3.0 * x + 2.0 * b) * x + c;

    let shift = b / 3.0;
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let disc = 0.25 * q * q + p * p * p / 27.0;

    let mut roots: Vec<f64> = if disc > 0.0 {
        let s = disc.sqrt();
        let u = (-0.5 * q - s.copysign(q)).cbrt();
        let v = if u != 0.0 { -p / (3.0 * u) } else { 0.0 };
        let real = polish(u + v - shift, f64::NEG_INFINITY, f64::INFINITY, f, df);
        // Deflate to the complex pair; a pair that is real to within the
        // collapse resolution is a fold and is returned as two equal roots.
        let (pb, pc) = (b + real, c + (b + real) * real);
        let centre = -0.5 * pb;
        let imag_sq = pc - centre * centre;
        if imag_sq.max(0.0).sqrt() < 0.5 * ROOT_COLLAPSE_TOL {
            let mut r = vec![real, centre, centre];
            r.sort_by(f64::total_cmp);
            return r;
        }
        return vec![real];
    } else if p == 0.0 {
        vec![-shift; 3]
    } else {
        let r = (-p / 3.0).sqrt();
        let arg = (-q / (2.0 * r * r * r)).clamp(-1.0, 1.0);
        let phi = arg.acos();
        (0..3).map(|k| 2.0 * r * ((phi - 2.0 * PI * k as f64) / 3.0).cos() - shift).collect()
    };
    roots.sort_by(f64::total_cmp);

    // Each root is confined between the midpoints to its neighbours so that
    // polishing cannot migrate two estimates onto the same root.
    let snapshot = roots.clone();
    for (i, x) in roots.iter_mut().enumerate() {
        let lo = if i > 0 { 0.5 * (snapshot[i - 1] + snapshot[i]) } else { f64::NEG_INFINITY };
        let hi = if i + 1 < snapshot.len() { 0.5 * (snapshot[i] + snapshot[i + 1]) } else { f64::INFINITY };
        *x = polish(*x, lo, hi, f, df);
    }
    roots.sort_by(f64::total_cmp);
    roots
}

fn polish(mut x: f64, lo: f64, hi: f64, f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64) -> f64 {
    let mut fx = f(x);
    for _ in 0..16 {
        if fx == 0.0 {
            break;
        }
        let slope = df(x);
        if slope == 0.0 || !slope.is_finite() {
            break;
        }
        let mut step = fx / slope;
        let mut improved = false;
        // Damped Newton: halve until |F| decreases and the iterate stays in its cell.
        for _ in 0..30 {
            let cand = x - step;
            if cand > lo && cand < hi {
                let fc = f(cand);
                if fc.abs() < fx.abs() {
                    x = cand;
                    fx = fc;
                    improved = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !improved || step.abs() <= 1e-16 * x.abs().max(1.0) {
            break;
        }
    }
    x
}

/// All real steady-state shifts of `problem`, classified.
pub fn solve_shift(problem: &CubicProblem) -> SteadyStateSet {
    if problem.drive() == 0.0 {
        // [(δ)² + (γ/2)²]·Δ = 0 with a positive bracket.
        return SteadyStateSet { roots: vec![SteadyState { shift: 0.0, stability: Stability::Stable, fold: false }] };
    }
    let (b, c, d) = problem.monic();
    let mut raw = monic_cubic_roots(b, c, d);

    // A critical point of F whose value is lost in rounding is a fold, even
    // when the finite-precision roots came out split or complex.
    if let Some(fold) = numerical_fold(problem) {
        let far = raw
            .iter()
            .copied()
            .max_by(|x, y| (x - fold).abs().total_cmp(&(y - fold).abs()))
            .expect("at least one root");
        raw = if (far - fold).abs() < ROOT_COLLAPSE_TOL { vec![fold; 3] } else { vec![far, fold, fold] };
        raw.sort_by(f64::total_cmp);
    }

    let mut roots = Vec::with_capacity(3);
    let mut i = 0;
    while i < raw.len() {
        if i + 1 < raw.len() && raw[i + 1] - raw[i] < ROOT_COLLAPSE_TOL {
            // A triple root (cusp) also lands here; report it as one fold.
            let j = if i + 2 < raw.len() && raw[i + 2] - raw[i] < ROOT_COLLAPSE_TOL { i + 2 } else { i + 1 };
            let shift = raw[i..=j].iter().sum::<f64>() / (j - i + 1) as f64;
            roots.push(SteadyState { shift, stability: Stability::Unstable, fold: true });
            i = j + 1;
        } else {
            let shift = raw[i];
            let stability = if problem.slope(shift) > 0.0 { Stability::Stable } else { Stability::Unstable };
            roots.push(SteadyState { shift, stability, fold: false });
            i += 1;
        }
    }
    SteadyStateSet { roots }
}

/// Critical point of F where F vanishes to within floating-point noise.
fn numerical_fold(problem: &CubicProblem) -> Option<f64> {
    let delta = problem.delta_lp;
    let hw2 = problem.half_width_sq();
    let disc = delta * delta - 3.0 * hw2;
    if disc < 0.0 {
        return None;
    }
    let root = disc.sqrt();
    [(-2.0 * delta - root) / 3.0, (-2.0 * delta + root) / 3.0].into_iter().find(|&s| {
        let terms =
            s.abs().powi(3) + 2.0 * (delta * s * s).abs() + (delta * delta + hw2) * s.abs() + problem.drive().abs();
        problem.residual(s).abs() <= 32.0 * f64::EPSILON * terms
    })
}

/// Slope-test stability of a given root.
///
/// `Stable` iff `F′(Δ) > 0`. A root sitting on a fold (where `F′` vanishes
/// to within the collapse resolution) is `Unstable` with `fold = true`.
pub fn classify_stability(problem: &CubicProblem, shift: f64) -> Result<SteadyState> {
    let r = problem.residual(shift);
    if !(r.abs() <= problem.residual_bound()) {
        return Err(usage(format!("{shift} is not a root: residual {r:e}")));
    }
    let slope = problem.slope(shift);
    let scale = problem.delta_lp.powi(2) + problem.half_width_sq();
    // Near a double root, F′ ≈ F″·(separation)/2.
    let fold = 2.0 * slope.abs() <= ROOT_COLLAPSE_TOL * problem.curvature(shift).abs() + 1e-12 * scale;
    let stability = if slope > 0.0 && !fold { Stability::Stable } else { Stability::Unstable };
    Ok(SteadyState { shift, stability, fold })
}

/// Bistable power window at fixed detuning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BistabilityWindow {
    pub p_lower: f64,
    pub p_upper: f64,
    /// Fold shifts at `(p_lower, p_upper)`.
    pub shift_at_folds: (f64, f64),
}

impl BistabilityWindow {
    pub fn contains(&self, power: f64) -> bool {
        power > self.p_lower && power < self.p_upper
    }
}

/// Detuning `|δ|` above which a bistable window can exist: `√3·γ/2`.
pub fn threshold_detuning(gamma: f64) -> f64 {
    3f64.sqrt() * gamma / 2.0
}

/// Fold powers at fixed detuning, if the cubic is bistable anywhere in `P > 0`.
///
/// A window exists iff `δ·sign(c) < 0` and `δ² > 3(γ/2)²`. The fold shifts
/// are the roots of `F′(Δ) = 0`; the fold powers follow from `F(Δ) = 0`.
pub fn fold_points(delta: f64, gamma: f64, c: f64) -> Result<Option<BistabilityWindow>> {
    if c == 0.0 || !c.is_finite() {
        return Err(domain("fold points need a finite non-zero c"));
    }
    if !(gamma > 0.0) || !delta.is_finite() {
        return Err(domain("fold points need gamma > 0 and finite detuning"));
    }
    let hw2 = 0.25 * gamma * gamma;
    let disc = delta * delta - 3.0 * hw2;
    if delta * c.signum() >= 0.0 || disc <= 0.0 {
        return Ok(None);
    }
    let root = disc.sqrt();
    let s1 = (-2.0 * delta - root) / 3.0;
    let s2 = (-2.0 * delta + root) / 3.0;
    let undriven = |s: f64| ((s + delta).powi(2) + hw2) * s;
    let (p1, p2) = (undriven(s1) / c, undriven(s2) / c);
    let (p_lower, p_upper, shift_at_folds) = if p1 < p2 { (p1, p2, (s1, s2)) } else { (p2, p1, (s2, s1)) };
    if !(p_lower > 0.0 && p_upper > p_lower) {
        return Ok(None);
    }
    Ok(Some(BistabilityWindow { p_lower, p_upper, shift_at_folds }))
}

/// Smallest power at which any detuning is bistable: the cusp of the fold curves,
/// `P = 8(γ/2)³ / (3√3·|c|)`.
pub fn cusp_power(gamma: f64, c: f64) -> f64 {
    let hw = 0.5 * gamma;
    8.0 * hw.powi(3) / (3.0 * 3f64.sqrt() * c.abs())
}

/// Bistable detuning interval at fixed power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetuningWindow {
    pub delta_low: f64,
    pub delta_high: f64,
    /// Merging (double) root at each end of the interval.
    pub fold_shift_low: f64,
    pub fold_shift_high: f64,
}

fn has_three_roots(delta: f64, gamma: f64, drive: f64) -> bool {
    let b = 2.0 * delta;
    let c = delta * delta + 0.25 * gamma * gamma;
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 - drive;
    0.25 * q * q + p * p * p / 27.0 < 0.0
}

/// Interval of detunings for which the cubic has three real roots at power `power`.
///
/// Seeds inside the interval from the fold-curve parametrisation, expands
/// outwards to bracket each end, then bisects on the root-count boundary.
pub fn detuning_window(power: f64, gamma: f64, c: f64) -> Result<Option<DetuningWindow>> {
    if c == 0.0 || !c.is_finite() {
        return Err(domain("detuning window needs a finite non-zero c"));
    }
    if !(power > 0.0) || !(gamma > 0.0) {
        return Err(domain("detuning window needs P > 0 and gamma > 0"));
    }
    let drive = c * power;
    let hw2 = 0.25 * gamma * gamma;

    // Along the response curve u = Δ + δ, dδ/du ∝ (u² + (γ/2)²)² + 2cP·u; the
    // interval is non-empty iff that quartic dips below zero. Its minimum sits
    // at the unique real root of u³ + (γ/2)²·u + cP/2 = 0.
    let u_star = monic_cubic_roots(0.0, hw2, 0.5 * drive)[0];
    if (u_star * u_star + hw2).powi(2) + 2.0 * drive * u_star >= 0.0 {
        return Ok(None);
    }
    let seed = u_star - drive / (u_star * u_star + hw2);
    if !has_three_roots(seed, gamma, drive) {
        return Ok(None);
    }

    let scale = seed.abs().max(gamma).max(1.0);
    let edge = |direction: f64| {
        let mut inside = seed;
        let mut step = 0.1 * gamma;
        let mut outside = seed + direction * step;
        while has_three_roots(outside, gamma, drive) {
            inside = outside;
            step *= 2.0;
            outside = seed + direction * step;
        }
        for _ in 0..200 {
            let mid = 0.5 * (inside + outside);
            if has_three_roots(mid, gamma, drive) {
                inside = mid;
            } else {
                outside = mid;
            }
            if (outside - inside).abs() <= 1e-14 * scale {
                break;
            }
        }
        inside
    };
    let delta_low = edge(-1.0);
    let delta_high = edge(1.0);

    let merging = |delta: f64| {
        let problem = CubicProblem { delta_lp: delta, gamma_lp: gamma, c, power };
        // Critical points of F; the merging root is the one where F also vanishes.
        let disc = (delta * delta - 3.0 * hw2).max(0.0).sqrt();
        [(-2.0 * delta - disc) / 3.0, (-2.0 * delta + disc) / 3.0]
            .into_iter()
            .min_by(|a, b| problem.residual(*a).abs().total_cmp(&problem.residual(*b).abs()))
            .expect("two candidates")
    };
    Ok(Some(DetuningWindow {
        delta_low,
        delta_high,
        fold_shift_low: merging(delta_low),
        fold_shift_high: merging(delta_high),
    }))
}
