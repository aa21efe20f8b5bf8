//! Network layout construction and UE dropping.
//!
//! A deployment is a hexagonal grid of three-sector macro sites. UE
//! populations are dropped per snapshot: each sector wedge receives exactly
//! the configured number of terrestrial and aerial UEs, uniformly over the
//! wedge area, with aerial altitudes uniform over the configured range.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::config::SimConfig;
use crate::error::{Result, SimError};
use crate::geometry::{
    hex_site_positions, in_sector_wedge, point_in_site_hexagon, wraparound_offsets, Point,
};
use crate::rng::{stream_rng, STREAM_DROP};

/// Deployment scenario family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    #[serde(rename = "UMa-AV")]
    UmaAv,
    #[serde(rename = "RMa-AV")]
    RmaAv,
    #[serde(rename = "UMi-AV")]
    UmiAv,
}

impl Scenario {
    pub fn default_isd_m(&self) -> f64 {
        match self {
            Scenario::UmaAv => 500.0,
            Scenario::RmaAv => 1732.0,
            Scenario::UmiAv => 200.0,
        }
    }

    pub fn default_antenna_height_m(&self) -> f64 {
        match self {
            Scenario::UmaAv => 25.0,
            Scenario::RmaAv => 35.0,
            Scenario::UmiAv => 10.0,
        }
    }

    pub fn default_downtilt_deg(&self) -> f64 {
        match self {
            Scenario::UmaAv => 6.0,
            Scenario::RmaAv => 10.0,
            Scenario::UmiAv => 6.0,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Scenario::UmaAv => "UMa-AV",
            Scenario::RmaAv => "RMa-AV",
            Scenario::UmiAv => "UMi-AV",
        };
        f.write_str(s)
    }
}

/// Traffic mix: terrestrial-only or hybrid with five UAVs per cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeploymentCase {
    #[serde(rename = "case1")]
    Case1,
    #[serde(rename = "case5")]
    Case5,
}

impl fmt::Display for DeploymentCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DeploymentCase::Case1 => "case1",
            DeploymentCase::Case5 => "case5",
        })
    }
}

/// UE device class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeviceClass {
    #[serde(rename = "terrestrial")]
    Terrestrial,
    #[serde(rename = "aerial")]
    Aerial,
}

impl fmt::Display for DeviceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DeviceClass::Terrestrial => "terrestrial",
            DeviceClass::Aerial => "aerial",
        })
    }
}

/// Scenario-level drop parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub case: DeploymentCase,
    pub terrestrial_per_cell: usize,
    pub aerial_per_cell: usize,
    /// Target network resource utilization, fraction in (0, 1].
    pub target_ru: f64,
    pub aerial_altitude_min_m: f64,
    pub aerial_altitude_max_m: f64,
    pub terrestrial_height_m: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::UmaAv,
            case: DeploymentCase::Case5,
            terrestrial_per_cell: 10,
            aerial_per_cell: 5,
            target_ru: 0.5,
            aerial_altitude_min_m: 1.5,
            aerial_altitude_max_m: 300.0,
            terrestrial_height_m: 1.5,
            seed: 1,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.target_ru > 0.0 && self.target_ru <= 1.0) {
            return Err(SimError::InvalidConfig(format!(
                "target_ru must be in (0, 1], got {}",
                self.target_ru
            )));
        }
        if self.aerial_altitude_min_m > self.aerial_altitude_max_m {
            return Err(SimError::InvalidConfig(
                "aerial altitude range is inverted".into(),
            ));
        }
        match self.case {
            DeploymentCase::Case1 if self.aerial_per_cell != 0 => {
                Err(SimError::InvalidConfig(
                    "case1 requires aerial_per_cell = 0".into(),
                ))
            }
            DeploymentCase::Case5
                if self.aerial_per_cell != 5 || self.terrestrial_per_cell != 10 =>
            {
                Err(SimError::InvalidConfig(
                    "case5 requires 10 terrestrial and 5 aerial UEs per cell".into(),
                ))
            }
            _ => Ok(()),
        }
    }

    /// Force the per-cell UE counts to the canonical values of `case`.
    pub fn apply_case(&mut self, case: DeploymentCase) {
        self.case = case;
        match case {
            DeploymentCase::Case1 => self.aerial_per_cell = 0,
            DeploymentCase::Case5 => {
                self.terrestrial_per_cell = 10;
                self.aerial_per_cell = 5;
            }
        }
    }

    pub fn ues_per_cell(&self) -> usize {
        self.terrestrial_per_cell + self.aerial_per_cell
    }
}

/// One sector of a site.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub index: usize,
    pub site: usize,
    pub position: Point,
    pub azimuth_deg: f64,
    pub antenna_height_m: f64,
    pub mechanical_downtilt_deg: f64,
}

/// Immutable sectorized macro layout.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkLayout {
    pub sites: Vec<Point>,
    pub cells: Vec<Cell>,
    pub inter_site_distance_m: f64,
    pub sectors_per_site: usize,
    pub antenna_height_m: f64,
    pub mechanical_downtilt_deg: f64,
    pub tx_power_dbm: f64,
    pub carrier_frequency_hz: f64,
    pub system_bandwidth_hz: f64,
    pub num_prbs: u32,
    pub prb_bandwidth_hz: f64,
    pub wraparound: bool,
    /// Cluster mirror offsets used for wrap-around distance evaluation
    /// (contains only the zero offset when wrap-around is disabled).
    pub wrap_offsets: Vec<Point>,
}

impl NetworkLayout {
    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    /// Sector wedge half-width in degrees.
    pub fn sector_half_width_deg(&self) -> f64 {
        180.0 / self.sectors_per_site as f64
    }
}

/// A dropped UE.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ue {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub altitude_m: f64,
    pub class: DeviceClass,
    pub p_cmax_dbm: f64,
}

impl Ue {
    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// One snapshot UE population.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UePopulation {
    pub ues: Vec<Ue>,
    /// Cell wedge each UE was dropped in (association is decided later by RSRP).
    pub drop_cell: Vec<usize>,
}

impl UePopulation {
    pub fn len(&self) -> usize {
        self.ues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ues.is_empty()
    }

    pub fn count_class(&self, class: DeviceClass) -> usize {
        self.ues.iter().filter(|u| u.class == class).count()
    }
}

/// Build the sectorized hexagonal layout for a scenario.
pub fn build_network(cfg: &SimConfig) -> Result<NetworkLayout> {
    cfg.validate()?;
    let net = &cfg.network;
    let scenario = cfg.scenario.scenario;
    let isd = net.resolved_isd_m(scenario);
    if isd <= 0.0 {
        return Err(SimError::InvalidConfig(format!(
            "inter-site distance must be positive, got {isd}"
        )));
    }
    let height = net.resolved_antenna_height_m(scenario);
    let tilt = net.resolved_downtilt_deg(scenario);

    let sites = hex_site_positions(net.site_tiers, isd);
    let mut cells = Vec::with_capacity(sites.len() * net.sectors_per_site);
    for (s, pos) in sites.iter().enumerate() {
        for k in 0..net.sectors_per_site {
            cells.push(Cell {
                index: cells.len(),
                site: s,
                position: *pos,
                azimuth_deg: k as f64 * 360.0 / net.sectors_per_site as f64,
                antenna_height_m: height,
                mechanical_downtilt_deg: tilt,
            });
        }
    }

    let wrap_offsets = if net.wraparound {
        wraparound_offsets(net.site_tiers, isd)
    } else {
        vec![Point::new(0.0, 0.0)]
    };

    Ok(NetworkLayout {
        sites,
        cells,
        inter_site_distance_m: isd,
        sectors_per_site: net.sectors_per_site,
        antenna_height_m: height,
        mechanical_downtilt_deg: tilt,
        tx_power_dbm: net.tx_power_dbm,
        carrier_frequency_hz: net.carrier_frequency_hz,
        system_bandwidth_hz: net.system_bandwidth_hz,
        num_prbs: net.num_prbs,
        prb_bandwidth_hz: net.prb_bandwidth_hz,
        wraparound: net.wraparound,
        wrap_offsets,
    })
}

/// Drop one UE population: exactly `terrestrial_per_cell + aerial_per_cell`
/// UEs uniform over each sector wedge, deterministic per seed.
pub fn drop_ues(layout: &NetworkLayout, scenario: &ScenarioConfig, seed: u64) -> UePopulation {
    let mut rng = stream_rng(seed, STREAM_DROP, 0);
    let half_width = layout.sector_half_width_deg();
    let hex_radius = layout.inter_site_distance_m / 3f64.sqrt();

    let total = layout.num_cells() * scenario.ues_per_cell();
    let mut ues = Vec::with_capacity(total);
    let mut drop_cell = Vec::with_capacity(total);

    for cell in &layout.cells {
        let center = cell.position;
        let sample_position = |rng: &mut rand_chacha::ChaCha8Rng| loop {
            let p = Point::new(
                center.x + rng.gen_range(-hex_radius..hex_radius),
                center.y + rng.gen_range(-hex_radius..hex_radius),
            );
            if point_in_site_hexagon(&p, &center, layout.inter_site_distance_m)
                && in_sector_wedge(&p, &center, cell.azimuth_deg, half_width)
            {
                return p;
            }
        };

        for _ in 0..scenario.terrestrial_per_cell {
            let p = sample_position(&mut rng);
            ues.push(Ue {
                id: ues.len(),
                x: p.x,
                y: p.y,
                altitude_m: scenario.terrestrial_height_m,
                class: DeviceClass::Terrestrial,
                p_cmax_dbm: DEFAULT_UE_MAX_POWER_DBM,
            });
            drop_cell.push(cell.index);
        }
        for _ in 0..scenario.aerial_per_cell {
            let p = sample_position(&mut rng);
            let altitude = if scenario.aerial_altitude_max_m > scenario.aerial_altitude_min_m {
                rng.gen_range(scenario.aerial_altitude_min_m..scenario.aerial_altitude_max_m)
            } else {
                scenario.aerial_altitude_min_m
            };
            ues.push(Ue {
                id: ues.len(),
                x: p.x,
                y: p.y,
                altitude_m: altitude,
                class: DeviceClass::Aerial,
                p_cmax_dbm: DEFAULT_UE_MAX_POWER_DBM,
            });
            drop_cell.push(cell.index);
        }
    }

    UePopulation { ues, drop_cell }
}

/// Device-class maximum transmit power stamped on every dropped UE. The
/// power-control policy may configure a lower cap; the engine takes the
/// tighter of the two.
pub const DEFAULT_UE_MAX_POWER_DBM: f64 = 23.0;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SimConfig;

    fn default_cfg() -> SimConfig {
        SimConfig::default()
    }

    #[test]
    fn default_build_yields_57_cells_at_46_dbm() {
        let layout = build_network(&default_cfg()).unwrap();
        assert_eq!(layout.sites.len(), 19);
        assert_eq!(layout.num_cells(), 57);
        assert_eq!(layout.tx_power_dbm, 46.0);
        assert_eq!(layout.inter_site_distance_m, 500.0);
    }

    #[test]
    fn single_site_has_three_sectors_at_120_degrees() {
        let mut cfg = default_cfg();
        cfg.network.site_tiers = 0;
        let layout = build_network(&cfg).unwrap();
        assert_eq!(layout.num_cells(), 3);
        let az: Vec<f64> = layout.cells.iter().map(|c| c.azimuth_deg).collect();
        assert_eq!(az, vec![0.0, 120.0, 240.0]);
    }

    #[test]
    fn build_is_deterministic() {
        let a = build_network(&default_cfg()).unwrap();
        let b = build_network(&default_cfg()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn negative_isd_is_rejected() {
        let mut cfg = default_cfg();
        cfg.network.inter_site_distance_m = Some(-10.0);
        assert!(build_network(&cfg).is_err());
    }

    #[test]
    fn case5_drop_counts() {
        let cfg = default_cfg();
        let layout = build_network(&cfg).unwrap();
        let pop = drop_ues(&layout, &cfg.scenario, 42);
        assert_eq!(pop.len(), 57 * 15);
        assert_eq!(pop.count_class(DeviceClass::Aerial), 57 * 5);
        assert_eq!(pop.count_class(DeviceClass::Terrestrial), 57 * 10);
    }

    #[test]
    fn case1_drop_has_no_aerials() {
        let mut cfg = default_cfg();
        cfg.scenario.apply_case(DeploymentCase::Case1);
        let layout = build_network(&cfg).unwrap();
        let pop = drop_ues(&layout, &cfg.scenario, 42);
        assert_eq!(pop.len(), 570);
        assert_eq!(pop.count_class(DeviceClass::Aerial), 0);
    }

    #[test]
    fn drops_are_deterministic_per_seed() {
        let cfg = default_cfg();
        let layout = build_network(&cfg).unwrap();
        let a = drop_ues(&layout, &cfg.scenario, 7);
        let b = drop_ues(&layout, &cfg.scenario, 7);
        let c = drop_ues(&layout, &cfg.scenario, 8);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn ues_land_in_their_wedge_and_altitudes_are_in_range() {
        let cfg = default_cfg();
        let layout = build_network(&cfg).unwrap();
        let pop = drop_ues(&layout, &cfg.scenario, 3);
        let half_width = layout.sector_half_width_deg();
        for (ue, cell_idx) in pop.ues.iter().zip(&pop.drop_cell) {
            let cell = &layout.cells[*cell_idx];
            assert!(point_in_site_hexagon(
                &ue.position(),
                &cell.position,
                layout.inter_site_distance_m
            ));
            assert!(in_sector_wedge(
                &ue.position(),
                &cell.position,
                cell.azimuth_deg,
                half_width
            ));
            match ue.class {
                DeviceClass::Terrestrial => {
                    assert_eq!(ue.altitude_m, cfg.scenario.terrestrial_height_m)
                }
                DeviceClass::Aerial => {
                    assert!(ue.altitude_m >= cfg.scenario.aerial_altitude_min_m);
                    assert!(ue.altitude_m <= cfg.scenario.aerial_altitude_max_m);
                }
            }
            assert_eq!(ue.p_cmax_dbm, 23.0);
        }
        // exact per-wedge counts
        let mut counts = vec![0usize; layout.num_cells()];
        for c in &pop.drop_cell {
            counts[*c] += 1;
        }
        assert!(counts.iter().all(|&n| n == 15));
    }

    #[test]
    fn invalid_case_counts_are_rejected() {
        let mut cfg = default_cfg();
        cfg.scenario.case = DeploymentCase::Case1;
        cfg.scenario.aerial_per_cell = 2;
        assert!(cfg.scenario.validate().is_err());

        let mut cfg = default_cfg();
        cfg.scenario.terrestrial_per_cell = 4;
        assert!(cfg.scenario.validate().is_err());
    }
}
