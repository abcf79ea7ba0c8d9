//! System parameters and the linear-regime physics of the coupled
//! cavity/magnon pair: Kerr coefficient from material constants, two-mode
//! hybridization, branch linewidths and the transmission spectrum.

mod hybrid;
mod kerr;
mod params;
mod transmission;

pub use hybrid::{diagonalize, shift_ratio, HybridizedBranches};
pub use kerr::{kerr_coefficient, Axis, KerrCoefficient, MaterialSpec};
pub use params::{coil_to_magnon, magnon_to_coil, CavityParams, CoilCalibration, MagnonParams};
pub use transmission::{s21, transmission_map, TransmissionMap};
