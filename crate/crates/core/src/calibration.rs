//! Constants that the analysis leaves unspecified, pinned from the checked-in
//! `calibration.toml`.

use std::sync::OnceLock;

use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
pub struct Calibration {
    pub gaussian: GaussianCalibration,
    pub ising: IsingCalibration,
    pub ais: AisCalibration,
}

#[derive(Debug, Clone, Deserialize)]
pub struct GaussianCalibration {
    pub learning_constant: f64,
}

#[derive(Debug, Clone, Deserialize)]
pub struct IsingCalibration {
    pub learning_constant: f64,
}

#[derive(Debug, Clone, Deserialize)]
pub struct AisCalibration {
    pub steps_per_spin: usize,
    pub ess_floor: f64,
    pub chain_batch: usize,
    pub max_chains: usize,
}

pub const CALIBRATION_TOML: &str = include_str!("../calibration.toml");

/// The checked-in calibration.
pub fn calibration() -> &'static Calibration {
    static CAL: OnceLock<Calibration> = OnceLock::new();
    CAL.get_or_init(|| toml::from_str(CALIBRATION_TOML).expect("calibration.toml is valid"))
}
