//! Run configurations. Each command reads an optional JSON file, applies
//! flag overrides and writes the resolved result next to its outputs.

use std::path::Path;

use biphoton_core::extraction::ExtractionConfig;
use biphoton_core::{Curvature, GAConfig, GridSpec, PhasematchModel, PumpModel};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("config {}: {e}", path.display())))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub pitch_m: f64,
}

impl GridConfig {
    pub fn spec(&self) -> Result<GridSpec, CliError> {
        Ok(GridSpec::new(self.n, self.pitch_m)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub grid: GridConfig,
    /// Detector pixels per side; defaults to half the state grid.
    pub detector_n: Option<usize>,
    /// Down-converted photon wavelength.
    pub wavelength_m: f64,
    pub pump: PumpModel,
    pub phasematch: PhasematchModel,
    pub planes_m: Vec<f64>,
    pub events: Option<u64>,
    /// Write the exact distribution instead of sampling.
    pub noiseless: bool,
    pub seed: Option<u64>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            grid: GridConfig {
                n: 64,
                pitch_m: 27.5e-6,
            },
            detector_n: None,
            wavelength_m: 810e-9,
            pump: PumpModel::Gaussian {
                width: 3.5e-4,
                curvature: Curvature::Flat,
            },
            phasematch: PhasematchModel::Gaussian { width: 9e-5 },
            planes_m: vec![0.0, 0.19],
            events: Some(1_000_000),
            noiseless: false,
            seed: None,
        }
    }
}

impl SimulateConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let grid = self.grid.spec()?;
        let det = self.detector_n.unwrap_or(grid.n() / 2);
        if det > grid.n() {
            return Err(CliError::config(format!(
                "detector_n = {det} exceeds the grid size {}",
                grid.n()
            )));
        }
        GridSpec::new(det, grid.extent() / det as f64)?;
        if !(self.wavelength_m.is_finite() && self.wavelength_m > 0.0) {
            return Err(CliError::config("wavelength_m must be > 0"));
        }
        if self.planes_m.is_empty() || self.planes_m.iter().any(|z| !z.is_finite()) {
            return Err(CliError::config("planes_m must list finite distances"));
        }
        if !self.noiseless {
            match self.events {
                Some(n) if n > 0 => {}
                _ => return Err(CliError::config("events must be > 0 for a sampled run")),
            }
            if self.seed.is_none() {
                return Err(CliError::config("sampling needs a seed (config or --seed)"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModalSettings {
    pub ell_min: i32,
    pub ell_max: i32,
    pub restarts: usize,
    pub max_evals: usize,
}

impl Default for ModalSettings {
    fn default() -> Self {
        Self {
            ell_min: -7,
            ell_max: 7,
            restarts: 8,
            max_evals: 60_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrieveConfig {
    /// Down-converted photon wavelength. Pump fits propagate at half of it
    /// over the full plane separation.
    pub wavelength_m: f64,
    pub z1_m: Option<f64>,
    pub z2_m: Option<f64>,
    pub seed: Option<u64>,
    pub modal: ModalSettings,
    pub ga: GAConfig,
    /// Zernike normalization radius; defaults to half the window.
    pub aperture_radius_m: Option<f64>,
    /// `(n, m)` genes; defaults to all orders 2 to 4.
    pub zernike: Option<Vec<(u32, i32)>>,
}

impl Default for RetrieveConfig {
    fn default() -> Self {
        Self {
            wavelength_m: 810e-9,
            z1_m: None,
            z2_m: None,
            seed: None,
            modal: ModalSettings::default(),
            ga: GAConfig::default(),
            aperture_radius_m: None,
            zernike: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractConfig {
    pub band_halfwidth: usize,
    pub min_slice_counts: Option<f64>,
}

impl ExtractConfig {
    pub fn extraction(&self) -> ExtractionConfig {
        ExtractionConfig {
            band_halfwidth: self.band_halfwidth,
            min_slice_counts: self.min_slice_counts,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagateConfig {
    /// Source plane; defaults to the plane stored in the field file.
    pub z1_m: Option<f64>,
    pub z2_m: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_json() {
        let c = SimulateConfig::default();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<SimulateConfig>(&text).unwrap(), c);
        let r = RetrieveConfig::default();
        let text = serde_json::to_string(&r).unwrap();
        assert_eq!(serde_json::from_str::<RetrieveConfig>(&text).unwrap(), r);
    }

    #[test]
    fn partial_config_fills_defaults_and_rejects_typos() {
        let c: SimulateConfig = serde_json::from_str(r#"{"events": 5, "seed": 1}"#).unwrap();
        assert_eq!(c.events, Some(5));
        assert_eq!(c.grid.n, 64);
        assert!(serde_json::from_str::<SimulateConfig>(r#"{"event": 5}"#).is_err());
    }

    #[test]
    fn validation() {
        let ok = SimulateConfig {
            seed: Some(1),
            ..SimulateConfig::default()
        };
        assert!(ok.validate().is_ok());
        let zero = SimulateConfig {
            events: Some(0),
            ..ok.clone()
        };
        assert_eq!(zero.validate().unwrap_err().code, 2);
        let unseeded = SimulateConfig {
            seed: None,
            ..ok.clone()
        };
        assert!(unseeded.validate().is_err());
        let noiseless = SimulateConfig {
            seed: None,
            events: None,
            noiseless: true,
            ..ok.clone()
        };
        assert!(noiseless.validate().is_ok());
        let bad_det = SimulateConfig {
            detector_n: Some(7),
            ..ok
        };
        assert!(bad_det.validate().is_err());
    }
}
