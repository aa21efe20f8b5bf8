//! Simulation configuration.
//!
//! One TOML document configures every subsystem. All fields have defaults,
//! so an empty file (or no file) runs the stock urban-macro case-5 setup.
//! See the repository README for the full key reference.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::deployment::{Scenario, ScenarioConfig};
use crate::dl_engine::ChannelThresholds;
use crate::error::{Result, SimError};
use crate::power_control::PowerControlConfig;
use crate::propagation::{AntennaPattern, ScenarioPropagation};

/// Site grid and radio parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetworkConfig {
    /// Rings of sites around the centre site (2 -> 19 sites).
    pub site_tiers: u32,
    pub sectors_per_site: usize,
    /// Overrides the scenario default when set.
    pub inter_site_distance_m: Option<f64>,
    /// Overrides the scenario default when set.
    pub antenna_height_m: Option<f64>,
    /// Overrides the scenario default when set.
    pub mechanical_downtilt_deg: Option<f64>,
    pub tx_power_dbm: f64,
    pub carrier_frequency_hz: f64,
    pub system_bandwidth_hz: f64,
    pub num_prbs: u32,
    pub prb_bandwidth_hz: f64,
    pub wraparound: bool,
    /// Base-station receiver noise figure (uplink), dB.
    pub bs_noise_figure_db: f64,
    /// UE receiver noise figure (downlink), dB.
    pub ue_noise_figure_db: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            site_tiers: 2,
            sectors_per_site: 3,
            inter_site_distance_m: None,
            antenna_height_m: None,
            mechanical_downtilt_deg: None,
            tx_power_dbm: 46.0,
            carrier_frequency_hz: 2.0e9,
            system_bandwidth_hz: 10.0e6,
            num_prbs: 50,
            prb_bandwidth_hz: 180e3,
            wraparound: true,
            bs_noise_figure_db: 5.0,
            ue_noise_figure_db: 9.0,
        }
    }
}

impl NetworkConfig {
    pub fn resolved_isd_m(&self, scenario: Scenario) -> f64 {
        self.inter_site_distance_m
            .unwrap_or_else(|| scenario.default_isd_m())
    }

    pub fn resolved_antenna_height_m(&self, scenario: Scenario) -> f64 {
        self.antenna_height_m
            .unwrap_or_else(|| scenario.default_antenna_height_m())
    }

    pub fn resolved_downtilt_deg(&self, scenario: Scenario) -> f64 {
        self.mechanical_downtilt_deg
            .unwrap_or_else(|| scenario.default_downtilt_deg())
    }

    pub fn validate(&self) -> Result<()> {
        if self.sectors_per_site == 0 {
            return Err(SimError::InvalidConfig(
                "sectors_per_site must be positive".into(),
            ));
        }
        if let Some(isd) = self.inter_site_distance_m {
            if isd <= 0.0 {
                return Err(SimError::InvalidConfig(
                    "inter_site_distance_m must be positive".into(),
                ));
            }
        }
        if self.num_prbs == 0 || self.prb_bandwidth_hz <= 0.0 {
            return Err(SimError::InvalidConfig(
                "PRB grid must be non-empty with positive bandwidth".into(),
            ));
        }
        if self.carrier_frequency_hz <= 0.0 {
            return Err(SimError::InvalidConfig(
                "carrier frequency must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Per-scenario propagation coefficient tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PropagationConfig {
    pub uma_av: ScenarioPropagation,
    pub rma_av: ScenarioPropagation,
    pub umi_av: ScenarioPropagation,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self {
            uma_av: ScenarioPropagation::uma_av(),
            rma_av: ScenarioPropagation::rma_av(),
            umi_av: ScenarioPropagation::umi_av(),
        }
    }
}

impl PropagationConfig {
    pub fn params_for(&self, scenario: Scenario) -> &ScenarioPropagation {
        match scenario {
            Scenario::UmaAv => &self.uma_av,
            Scenario::RmaAv => &self.rma_av,
            Scenario::UmiAv => &self.umi_av,
        }
    }
}

/// Uplink throughput abstraction constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UlConfig {
    /// Multiplier on Shannon spectral efficiency.
    pub bandwidth_efficiency: f64,
    /// Spectral-efficiency ceiling, bits/s/Hz.
    pub spectral_efficiency_cap: f64,
    /// SINR below which throughput is zero, dB.
    pub sinr_floor_db: f64,
}

impl Default for UlConfig {
    fn default() -> Self {
        Self {
            bandwidth_efficiency: 0.75,
            spectral_efficiency_cap: 6.0,
            sinr_floor_db: -10.0,
        }
    }
}

/// Open-loop P0 sweep values (terrestrial P0 stays fixed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub p0_aerial_dbm: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            p0_aerial_dbm: vec![-85.0, -86.0, -87.0, -88.0, -89.0, -90.0],
        }
    }
}

/// Top-level simulator configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub scenario: ScenarioConfig,
    pub network: NetworkConfig,
    pub antenna: AntennaPattern,
    pub propagation: PropagationConfig,
    pub power_control: PowerControlConfig,
    pub ul: UlConfig,
    pub dl: ChannelThresholds,
    pub sweep: SweepConfig,
}

impl SimConfig {
    /// Load a TOML config file; missing keys fall back to defaults.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: SimConfig = toml::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Serialize the fully resolved configuration.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self)
            .map_err(|e| SimError::InvalidConfig(format!("serialize: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.network.validate()?;
        self.antenna.validate()?;
        self.propagation.uma_av.validate()?;
        self.propagation.rma_av.validate()?;
        self.propagation.umi_av.validate()?;
        self.power_control.validate()?;
        self.dl.validate()?;
        if self.ul.bandwidth_efficiency <= 0.0 || self.ul.spectral_efficiency_cap <= 0.0 {
            return Err(SimError::InvalidConfig(
                "throughput map constants must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Propagation coefficients for the active scenario.
    pub fn propagation_params(&self) -> &ScenarioPropagation {
        self.propagation.params_for(self.scenario.scenario)
    }

    /// Thermal noise power over one PRB at the base station, dBm.
    pub fn ul_noise_per_prb_dbm(&self) -> f64 {
        -174.0 + self.network.bs_noise_figure_db + 10.0 * self.network.prb_bandwidth_hz.log10()
    }

    /// Thermal noise power over the whole carrier at the UE, dBm.
    pub fn dl_noise_dbm(&self) -> f64 {
        -174.0
            + self.network.ue_noise_figure_db
            + 10.0 * (self.network.num_prbs as f64 * self.network.prb_bandwidth_hz).log10()
    }
}
