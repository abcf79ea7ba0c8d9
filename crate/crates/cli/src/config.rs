//! JSON run configuration. Unknown keys are rejected everywhere; powers may be
//! given in mW (plain number) or as `{"value": 25, "unit": "dBm"}` and are
//! normalized to mW before use or echo.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use magpol_core::model::{Axis, CavityParams, CoilCalibration, KerrCoefficient, MagnonParams, MaterialSpec};
use magpol_core::sweep::SweepVariable;
use magpol_core::units::dbm_to_mw;

use crate::Failure;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cavity: Option<CavityConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub magnon: Option<MagnonConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub material: Option<MaterialConfig>,
    /// Kerr coefficient given directly, MHz. Alternative to `material`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kerr_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coil: Option<CoilConfig>,
    #[serde(default)]
    pub output: OutputConfig,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumTask>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepTask>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateTask>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitTask>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityConfig {
    pub omega_c: f64,
    /// Total linewidth, split evenly over the four channels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_3: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_int: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MagnonConfig {
    pub omega_m: f64,
    pub gamma_m: f64,
    pub g_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
pub enum AxisName {
    #[serde(rename = "100")]
    #[value(name = "100")]
    A100,
    #[serde(rename = "110")]
    #[value(name = "110")]
    A110,
}

impl AxisName {
    pub fn axis(self) -> Axis {
        match self {
            AxisName::A100 => Axis::Axis100,
            AxisName::A110 => Axis::Axis110,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            AxisName::A100 => "100",
            AxisName::A110 => "110",
        }
    }
}

/// SI material constants.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    /// J/m³.
    pub k_an: f64,
    pub g_factor: f64,
    /// A/m.
    pub magnetization: f64,
    /// m³; alternatively give `diameter` (m) of the sphere.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub volume: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diameter: Option<f64>,
    pub axis: AxisName,
    /// Vacuum permeability override, H/m.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_0: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoilConfig {
    /// MHz per A.
    pub slope: f64,
    /// MHz.
    pub offset: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub format: Format,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: default_dir(), format: Format::Csv }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Unit {
    #[serde(rename = "mW")]
    MilliWatt,
    #[serde(rename = "dBm")]
    Dbm,
    #[serde(rename = "MHz")]
    MegaHertz,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Annotated {
    pub value: f64,
    pub unit: Unit,
}

/// A number, optionally with an explicit unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Quantity {
    Plain(f64),
    Annotated(Annotated),
}

impl Quantity {
    /// Value in mW; plain numbers are taken as mW.
    pub fn power_mw(self, field: &str) -> Result<f64, Failure> {
        match self {
            Quantity::Plain(v) | Quantity::Annotated(Annotated { value: v, unit: Unit::MilliWatt }) => Ok(v),
            Quantity::Annotated(Annotated { value, unit: Unit::Dbm }) => Ok(dbm_to_mw(value)),
            Quantity::Annotated(Annotated { unit: Unit::MegaHertz, .. }) => {
                Err(Failure::config(format!("{field} is a power; unit MHz is not allowed")))
            }
        }
    }

    pub fn frequency_mhz(self, field: &str) -> Result<f64, Failure> {
        match self {
            Quantity::Plain(v) | Quantity::Annotated(Annotated { value: v, unit: Unit::MegaHertz }) => Ok(v),
            _ => Err(Failure::config(format!("{field} is a detuning in MHz; power units are not allowed"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    /// Number of points, endpoints included. Alternative to `step`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
}

impl GridSpec {
    pub fn values(&self, name: &str) -> Result<Vec<f64>, Failure> {
        let bad = |m: &str| Failure::config(format!("{name} grid: {m}"));
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(bad("start and stop must be finite"));
        }
        let n = match (self.steps, self.step) {
            (Some(n), None) => n,
            (None, Some(h)) if h > 0.0 && h.is_finite() => {
                let n = ((self.stop - self.start) / h).round();
                if n < 0.0 || ((self.start + n * h) - self.stop).abs() > 1e-9 * h.max(self.stop.abs()) {
                    return Err(bad("step must divide stop − start"));
                }
                n as usize + 1
            }
            (None, Some(_)) => return Err(bad("step must be positive")),
            _ => return Err(bad("give exactly one of `steps` or `step`")),
        };
        match n {
            0 => Err(bad("needs at least one point")),
            1 if self.start == self.stop => Ok(vec![self.start]),
            1 => Err(bad("a single point needs start == stop")),
            _ => {
                let last = n - 1;
                Ok((0..n)
                    .map(|i| {
                        if i == last {
                            self.stop
                        } else {
                            self.start + (self.stop - self.start) * i as f64 / last as f64
                        }
                    })
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumTask {
    /// Magnon frequencies (MHz). Alternative to `coil`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub magnon: Option<GridSpec>,
    /// Coil currents (A), mapped through the `coil` calibration.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coil: Option<GridSpec>,
    pub probe: GridSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variable {
    Power,
    Detuning,
}

impl Variable {
    pub fn sweep_variable(self) -> SweepVariable {
        match self {
            Variable::Power => SweepVariable::Power,
            Variable::Detuning => SweepVariable::Detuning,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepTask {
    pub variable: Variable,
    pub start: Quantity,
    pub stop: Quantity,
    pub steps: usize,
    /// Detuning (MHz) for power sweeps, power for detuning sweeps.
    pub fixed: Quantity,
    pub gamma_lp: f64,
    pub c: f64,
    /// Also export `Δ_UP = ξ·Δ_LP`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    pub a: [f64; 2],
    pub b: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateTask {
    pub t_end: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_abs_tol")]
    pub abs_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialState>,
    pub omega_d: f64,
    /// Drive amplitude Ω_d, MHz. Alternative to `power` + `eta`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strength: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<Quantity>,
    /// Ω_d² per mW, MHz²/mW.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
}

fn default_dt() -> f64 {
    1e-4
}

fn default_rel_tol() -> f64 {
    1e-9
}

fn default_abs_tol() -> f64 {
    1e-9
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitTask {
    /// CSV with `param, shift_MHz, direction`; relative paths resolve against the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    /// Upper-branch data on the same grid, for fitting ξ.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub up_data: Option<PathBuf>,
    pub variable: Variable,
    pub fixed: Quantity,
    pub gamma_lp: f64,
    #[serde(default)]
    pub free_gamma: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[serde(default = "yes")]
    pub direction_aware: bool,
    #[serde(default)]
    pub allow_single_direction: bool,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
}

fn yes() -> bool {
    true
}

fn default_max_iterations() -> usize {
    200
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Failure::config(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let Some(fit) = &mut cfg.fit {
            for p in [&mut fit.data, &mut fit.up_data].into_iter().flatten() {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn task_blocks(&self) -> Vec<&'static str> {
        let mut present = Vec::new();
        if self.spectrum.is_some() {
            present.push("spectrum");
        }
        if self.sweep.is_some() {
            present.push("sweep");
        }
        if self.simulate.is_some() {
            present.push("simulate");
        }
        if self.fit.is_some() {
            present.push("fit");
        }
        present
    }

    /// Rewrite every power in mW so the echoed configuration is unit-free.
    pub fn normalize(&mut self) -> Result<(), Failure> {
        if let Some(s) = &mut self.sweep {
            match s.variable {
                Variable::Power => {
                    s.start = Quantity::Plain(s.start.power_mw("sweep.start")?);
                    s.stop = Quantity::Plain(s.stop.power_mw("sweep.stop")?);
                    s.fixed = Quantity::Plain(s.fixed.frequency_mhz("sweep.fixed")?);
                }
                Variable::Detuning => {
                    s.start = Quantity::Plain(s.start.frequency_mhz("sweep.start")?);
                    s.stop = Quantity::Plain(s.stop.frequency_mhz("sweep.stop")?);
                    s.fixed = Quantity::Plain(s.fixed.power_mw("sweep.fixed")?);
                }
            }
        }
        if let Some(f) = &mut self.fit {
            f.fixed = Quantity::Plain(match f.variable {
                Variable::Power => f.fixed.frequency_mhz("fit.fixed")?,
                Variable::Detuning => f.fixed.power_mw("fit.fixed")?,
            });
        }
        if let Some(s) = &mut self.simulate {
            if let Some(p) = s.power {
                s.power = Some(Quantity::Plain(p.power_mw("simulate.power")?));
            }
        }
        Ok(())
    }

    pub fn cavity(&self) -> Result<CavityParams, Failure> {
        let c = self.cavity.as_ref().ok_or_else(|| Failure::missing("cavity"))?;
        let parts = [c.kappa_1, c.kappa_2, c.kappa_3, c.kappa_int];
        let p = match (c.kappa, parts) {
            (Some(k), [None, None, None, None]) => CavityParams::with_total_linewidth(c.omega_c, k),
            (None, [Some(k1), Some(k2), Some(k3), Some(ki)]) => CavityParams::new(c.omega_c, k1, k2, k3, ki),
            _ => {
                return Err(Failure::config(
                    "cavity: give either `kappa` or all of kappa_1, kappa_2, kappa_3, kappa_int",
                ))
            }
        };
        Ok(p?)
    }

    pub fn magnon(&self) -> Result<MagnonParams, Failure> {
        let m = self.magnon.as_ref().ok_or_else(|| Failure::missing("magnon"))?;
        Ok(MagnonParams::new(m.omega_m, m.gamma_m, m.g_m)?)
    }

    pub fn material(&self, axis: Option<AxisName>) -> Result<MaterialSpec, Failure> {
        let m = self.material.as_ref().ok_or_else(|| Failure::missing("material"))?;
        let volume = match (m.volume, m.diameter) {
            (Some(v), None) => v,
            (None, Some(d)) => MaterialSpec::sphere_volume(d),
            _ => return Err(Failure::config("material: give exactly one of `volume` or `diameter`")),
        };
        let axis = axis.unwrap_or(m.axis).axis();
        let spec = MaterialSpec::new(m.k_an, m.g_factor, m.magnetization, volume, axis);
        Ok(MaterialSpec { mu_0: m.mu_0.unwrap_or(spec.mu_0), ..spec })
    }

    pub fn kerr(&self) -> Result<KerrCoefficient, Failure> {
        match (self.kerr_mhz, &self.material) {
            (Some(k), None) if k.is_finite() => Ok(KerrCoefficient::from_mhz(k)),
            (Some(_), None) => Err(Failure::config("kerr_mhz must be finite")),
            (None, Some(_)) => Ok(magpol_core::model::kerr_coefficient(&self.material(None)?)?),
            (Some(_), Some(_)) => Err(Failure::config("give either `kerr_mhz` or a `material` block, not both")),
            (None, None) => Err(Failure::missing("material (or kerr_mhz)")),
        }
    }

    pub fn coil(&self) -> Result<Option<CoilCalibration>, Failure> {
        match &self.coil {
            Some(c) => Ok(Some(CoilCalibration::new(c.slope, c.offset)?)),
            None => Ok(None),
        }
    }
}
