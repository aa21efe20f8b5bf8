//! Per-link propagation: pathloss, LOS state, shadowing, and antenna gain.
//!
//! The channel model is a height-interpolated log-distance model. Each
//! scenario carries LOS/NLOS exponents and intercept offsets over a standard
//! free-space 1 m intercept, a ground-level LOS probability curve, and
//! per-(class, LOS) shadowing standard deviations. Above a configurable
//! altitude the link is line-of-sight with certainty and the NLOS parameters
//! have fully interpolated into the LOS ones, which reproduces the benign
//! propagation seen by high-altitude users. All coefficients are plain
//! config values, so externally calibrated tables can be loaded without code
//! changes.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::deployment::{DeviceClass, NetworkLayout, UePopulation};
use crate::error::{Result, SimError};
use crate::rng::{standard_normal, stream_rng, STREAM_CHANNEL};
use crate::units::wrap_deg;

/// Speed of light in m/s.
const C_M_S: f64 = 299_792_458.0;

// ---------------------------------------------------------------------------
// Antenna pattern
// ---------------------------------------------------------------------------

/// Sectorized base-station element pattern, parabolic in dB per plane.
///
/// Horizontal and vertical attenuations are each capped, and their sum is
/// floored at `front_to_back_db` below peak gain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AntennaPattern {
    pub max_gain_dbi: f64,
    pub horizontal_beamwidth_deg: f64,
    pub vertical_beamwidth_deg: f64,
    pub front_to_back_db: f64,
    pub side_lobe_floor_db: f64,
    pub electrical_downtilt_deg: f64,
}

impl Default for AntennaPattern {
    fn default() -> Self {
        Self {
            max_gain_dbi: 8.0,
            horizontal_beamwidth_deg: 65.0,
            vertical_beamwidth_deg: 10.0,
            front_to_back_db: 25.0,
            side_lobe_floor_db: 25.0,
            electrical_downtilt_deg: 0.0,
        }
    }
}

impl AntennaPattern {
    pub fn validate(&self) -> Result<()> {
        if self.horizontal_beamwidth_deg <= 0.0 || self.vertical_beamwidth_deg <= 0.0 {
            return Err(SimError::InvalidConfig("beamwidths must be positive".into()));
        }
        if self.front_to_back_db < 0.0 || self.side_lobe_floor_db < 0.0 {
            return Err(SimError::InvalidConfig(
                "attenuation caps must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Element gain for offsets relative to the (tilted) boresight, in dB.
    pub fn gain_db(&self, azimuth_offset_deg: f64, elevation_offset_deg: f64) -> f64 {
        let az = wrap_deg(azimuth_offset_deg);
        let att_h = (12.0 * (az / self.horizontal_beamwidth_deg).powi(2))
            .min(self.front_to_back_db);
        let att_v = (12.0 * (elevation_offset_deg / self.vertical_beamwidth_deg).powi(2))
            .min(self.side_lobe_floor_db);
        self.max_gain_dbi - (att_h + att_v).min(self.front_to_back_db)
    }
}

// ---------------------------------------------------------------------------
// Scenario propagation parameters
// ---------------------------------------------------------------------------

/// Shadowing standard deviations per (device class, LOS state), in dB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShadowingStd {
    pub terrestrial_los_db: f64,
    pub terrestrial_nlos_db: f64,
    pub aerial_los_db: f64,
    pub aerial_nlos_db: f64,
}

impl Default for ShadowingStd {
    fn default() -> Self {
        Self {
            terrestrial_los_db: 4.0,
            terrestrial_nlos_db: 6.0,
            aerial_los_db: 3.0,
            aerial_nlos_db: 5.0,
        }
    }
}

/// Log-distance channel coefficients for one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioPropagation {
    pub los_exponent: f64,
    pub nlos_exponent: f64,
    /// Extra intercept over free space at 1 m, LOS links.
    pub los_intercept_offset_db: f64,
    /// Extra intercept over free space at 1 m, NLOS links at ground level.
    pub nlos_intercept_offset_db: f64,
    /// 2D distance below which ground-level links are always LOS.
    pub los_corner_distance_m: f64,
    /// Exponential decay length of the ground-level LOS probability.
    pub los_decay_m: f64,
    /// Altitude at and above which links are LOS with probability 1.
    pub los_certain_altitude_m: f64,
    /// Reference (ground UE) height where the ground model applies unmodified.
    pub reference_ue_height_m: f64,
    pub shadowing: ShadowingStd,
}

impl Default for ScenarioPropagation {
    fn default() -> Self {
        Self::uma_av()
    }
}

impl ScenarioPropagation {
    pub fn uma_av() -> Self {
        Self {
            los_exponent: 2.2,
            nlos_exponent: 3.2,
            los_intercept_offset_db: 0.0,
            nlos_intercept_offset_db: 6.0,
            los_corner_distance_m: 18.0,
            los_decay_m: 63.0,
            los_certain_altitude_m: 100.0,
            reference_ue_height_m: 1.5,
            shadowing: ShadowingStd::default(),
        }
    }

    pub fn rma_av() -> Self {
        Self {
            los_exponent: 2.1,
            nlos_exponent: 3.0,
            los_intercept_offset_db: 0.0,
            nlos_intercept_offset_db: 4.0,
            los_corner_distance_m: 10.0,
            los_decay_m: 1000.0,
            los_certain_altitude_m: 100.0,
            reference_ue_height_m: 1.5,
            shadowing: ShadowingStd {
                terrestrial_nlos_db: 8.0,
                ..ShadowingStd::default()
            },
        }
    }

    pub fn umi_av() -> Self {
        Self {
            los_exponent: 2.1,
            nlos_exponent: 3.4,
            los_intercept_offset_db: 0.0,
            nlos_intercept_offset_db: 3.0,
            los_corner_distance_m: 18.0,
            los_decay_m: 36.0,
            los_certain_altitude_m: 100.0,
            reference_ue_height_m: 1.5,
            shadowing: ShadowingStd {
                terrestrial_nlos_db: 7.0,
                ..ShadowingStd::default()
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.los_exponent <= 0.0 || self.nlos_exponent < self.los_exponent {
            return Err(SimError::InvalidConfig(
                "exponents must satisfy 0 < los_exponent <= nlos_exponent".into(),
            ));
        }
        if self.nlos_intercept_offset_db < self.los_intercept_offset_db {
            return Err(SimError::InvalidConfig(
                "NLOS intercept offset must not be below the LOS one".into(),
            ));
        }
        if self.los_decay_m <= 0.0 || self.los_corner_distance_m < 0.0 {
            return Err(SimError::InvalidConfig(
                "LOS probability shape parameters are invalid".into(),
            ));
        }
        if self.los_certain_altitude_m <= self.reference_ue_height_m {
            return Err(SimError::InvalidConfig(
                "los_certain_altitude_m must exceed reference_ue_height_m".into(),
            ));
        }
        let s = &self.shadowing;
        if [
            s.terrestrial_los_db,
            s.terrestrial_nlos_db,
            s.aerial_los_db,
            s.aerial_nlos_db,
        ]
        .iter()
        .any(|v| *v < 0.0)
        {
            return Err(SimError::InvalidConfig(
                "shadowing std deviations must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Altitude interpolation weight in [0, 1]: 0 at the reference height,
    /// 1 at and above the LOS-certainty altitude.
    fn height_weight(&self, ue_altitude_m: f64) -> f64 {
        let span = self.los_certain_altitude_m - self.reference_ue_height_m;
        ((ue_altitude_m - self.reference_ue_height_m) / span).clamp(0.0, 1.0)
    }

    pub fn shadow_std_db(&self, class: DeviceClass, los: bool) -> f64 {
        match (class, los) {
            (DeviceClass::Terrestrial, true) => self.shadowing.terrestrial_los_db,
            (DeviceClass::Terrestrial, false) => self.shadowing.terrestrial_nlos_db,
            (DeviceClass::Aerial, true) => self.shadowing.aerial_los_db,
            (DeviceClass::Aerial, false) => self.shadowing.aerial_nlos_db,
        }
    }
}

// ---------------------------------------------------------------------------
// LOS probability and pathloss
// ---------------------------------------------------------------------------

/// Line-of-sight probability for a link.
///
/// Ground-level probability decays exponentially beyond the corner distance;
/// rising altitude blends it linearly toward 1, reached at the LOS-certainty
/// altitude. Non-decreasing in altitude for any fixed distance.
pub fn los_probability(params: &ScenarioPropagation, distance_2d_m: f64, ue_altitude_m: f64) -> f64 {
    let excess = (distance_2d_m - params.los_corner_distance_m).max(0.0);
    let ground = (-excess / params.los_decay_m).exp();
    let w = params.height_weight(ue_altitude_m);
    ground + (1.0 - ground) * w
}

/// Free-space pathloss at 1 m for the given carrier, in dB.
fn free_space_intercept_db(frequency_hz: f64) -> f64 {
    20.0 * (4.0 * std::f64::consts::PI * frequency_hz / C_M_S).log10()
}

fn pathloss_clamped_db(
    params: &ScenarioPropagation,
    distance_3d_m: f64,
    ue_altitude_m: f64,
    los: bool,
    frequency_hz: f64,
) -> f64 {
    // Sub-metre links sit inside the antenna near field; clamp to the 1 m
    // reference so the LOS/NLOS ordering holds everywhere.
    let d = distance_3d_m.max(1.0);
    let (exponent, offset) = if los {
        (params.los_exponent, params.los_intercept_offset_db)
    } else {
        let w = params.height_weight(ue_altitude_m);
        (
            params.nlos_exponent + (params.los_exponent - params.nlos_exponent) * w,
            params.nlos_intercept_offset_db
                + (params.los_intercept_offset_db - params.nlos_intercept_offset_db) * w,
        )
    };
    free_space_intercept_db(frequency_hz) + offset + 10.0 * exponent * d.log10()
}

/// Link pathloss in dB. Errors on non-positive 3D distance.
pub fn pathloss_db(
    params: &ScenarioPropagation,
    distance_3d_m: f64,
    ue_altitude_m: f64,
    los: bool,
    frequency_hz: f64,
) -> Result<f64> {
    if distance_3d_m <= 0.0 {
        return Err(SimError::InvalidArgument(
            "pathloss requires a positive 3D distance".into(),
        ));
    }
    Ok(pathloss_clamped_db(
        params,
        distance_3d_m,
        ue_altitude_m,
        los,
        frequency_hz,
    ))
}

// ---------------------------------------------------------------------------
// Coupling matrix
// ---------------------------------------------------------------------------

/// Long-term channel state of one UE-cell link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkState {
    pub pathloss_db: f64,
    pub shadowing_db: f64,
    pub antenna_gain_db: f64,
    pub los: bool,
    pub coupling_gain_db: f64,
}

/// Dense per-(UE, cell) link table for one drop.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    num_ues: usize,
    num_cells: usize,
    links: Vec<LinkState>,
}

impl CouplingMatrix {
    pub fn new(num_ues: usize, num_cells: usize, links: Vec<LinkState>) -> Self {
        assert_eq!(links.len(), num_ues * num_cells, "link table size mismatch");
        Self {
            num_ues,
            num_cells,
            links,
        }
    }

    pub fn num_ues(&self) -> usize {
        self.num_ues
    }

    pub fn num_cells(&self) -> usize {
        self.num_cells
    }

    pub fn num_links(&self) -> usize {
        self.links.len()
    }

    pub fn link(&self, ue: usize, cell: usize) -> &LinkState {
        &self.links[ue * self.num_cells + cell]
    }

    pub fn coupling_gain_db(&self, ue: usize, cell: usize) -> f64 {
        self.link(ue, cell).coupling_gain_db
    }

    /// Tabular dump, one row per link.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "ue,cell,pathloss_db,shadowing_db,antenna_gain_db,los,coupling_gain_db"
        )?;
        for ue in 0..self.num_ues {
            for cell in 0..self.num_cells {
                let l = self.link(ue, cell);
                writeln!(
                    w,
                    "{},{},{},{},{},{},{}",
                    ue,
                    cell,
                    l.pathloss_db,
                    l.shadowing_db,
                    l.antenna_gain_db,
                    l.los as u8,
                    l.coupling_gain_db
                )?;
            }
        }
        Ok(())
    }
}

/// Build the coupling matrix for one drop, deterministic per seed.
///
/// The LOS state is drawn once per (UE, site) and shared by co-sited
/// sectors; shadowing is drawn independently per link. With wrap-around
/// enabled, each link uses the cluster mirror image closest to the UE.
pub fn build_coupling_matrix(
    layout: &NetworkLayout,
    population: &UePopulation,
    antenna: &AntennaPattern,
    params: &ScenarioPropagation,
    seed: u64,
) -> CouplingMatrix {
    let mut rng = stream_rng(seed, STREAM_CHANNEL, 0);
    let sectors = layout.sectors_per_site;
    let freq = layout.carrier_frequency_hz;
    let mut links = Vec::with_capacity(population.len() * layout.num_cells());

    for ue in &population.ues {
        for (site_idx, site) in layout.sites.iter().enumerate() {
            // Closest cluster image of this site.
            let mut best = (f64::INFINITY, *site);
            for off in &layout.wrap_offsets {
                let image = site.add(off);
                let d = image.distance(&ue.position());
                if d < best.0 {
                    best = (d, image);
                }
            }
            let (d2d, image) = best;

            let p_los = los_probability(params, d2d, ue.altitude_m);
            let los = rng.gen::<f64>() < p_los;

            for k in 0..sectors {
                let cell = &layout.cells[site_idx * sectors + k];
                let dz = ue.altitude_m - cell.antenna_height_m;
                let azimuth_off = if d2d > 1e-9 {
                    let bearing = (ue.y - image.y).atan2(ue.x - image.x).to_degrees();
                    wrap_deg(bearing - cell.azimuth_deg)
                } else {
                    0.0
                };
                let elevation = dz.atan2(d2d).to_degrees();
                let tilt = cell.mechanical_downtilt_deg + antenna.electrical_downtilt_deg;
                let gain = antenna.gain_db(azimuth_off, elevation + tilt);

                let d3d = d2d.hypot(dz);
                let pl = pathloss_clamped_db(params, d3d, ue.altitude_m, los, freq);
                let shadow = params.shadow_std_db(ue.class, los) * standard_normal(&mut rng);

                links.push(LinkState {
                    pathloss_db: pl,
                    shadowing_db: shadow,
                    antenna_gain_db: gain,
                    los,
                    coupling_gain_db: gain - pl - shadow,
                });
            }
        }
    }

    CouplingMatrix::new(population.len(), layout.num_cells(), links)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SimConfig;
    use crate::deployment::{build_network, drop_ues, Ue};
    use proptest::prelude::*;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() < tol
    }

    #[test]
    fn los_certain_above_threshold() {
        let p = ScenarioPropagation::uma_av();
        for d in [0.0, 100.0, 500.0, 5000.0] {
            assert_eq!(los_probability(&p, d, 100.0), 1.0);
            assert_eq!(los_probability(&p, d, 250.0), 1.0);
        }
    }

    #[test]
    fn los_certain_at_zero_distance() {
        let p = ScenarioPropagation::uma_av();
        assert_eq!(los_probability(&p, 0.0, 1.5), 1.0);
    }

    #[test]
    fn los_increases_with_altitude_at_fixed_distance() {
        let p = ScenarioPropagation::uma_av();
        assert!(los_probability(&p, 500.0, 1.5) <= los_probability(&p, 500.0, 100.0));
    }

    #[test]
    fn free_space_reference_at_2ghz_1km() {
        let mut p = ScenarioPropagation::uma_av();
        p.los_exponent = 2.0;
        p.los_intercept_offset_db = 0.0;
        let pl = pathloss_db(&p, 1000.0, 1.5, true, 2.0e9).unwrap();
        assert!(approx(pl, 98.5, 0.1), "got {pl}");
    }

    #[test]
    fn doubling_distance_adds_ten_n_log10_two() {
        let p = ScenarioPropagation::uma_av();
        for los in [true, false] {
            let n = if los { p.los_exponent } else { p.nlos_exponent };
            let a = pathloss_db(&p, 400.0, 1.5, los, 2.0e9).unwrap();
            let b = pathloss_db(&p, 800.0, 1.5, los, 2.0e9).unwrap();
            assert!(approx(b - a, 10.0 * n * 2f64.log10(), 1e-9));
        }
    }

    #[test]
    fn zero_distance_is_rejected() {
        let p = ScenarioPropagation::uma_av();
        assert!(pathloss_db(&p, 0.0, 1.5, true, 2.0e9).is_err());
    }

    #[test]
    fn boresight_gain_is_max_gain() {
        let a = AntennaPattern::default();
        assert_eq!(a.gain_db(0.0, 0.0), a.max_gain_dbi);
    }

    #[test]
    fn half_beamwidth_offset_is_three_db_down() {
        let a = AntennaPattern::default();
        let h = a.gain_db(a.horizontal_beamwidth_deg / 2.0, 0.0);
        let v = a.gain_db(0.0, a.vertical_beamwidth_deg / 2.0);
        assert!(approx(h, a.max_gain_dbi - 3.0, 0.01));
        assert!(approx(v, a.max_gain_dbi - 3.0, 0.01));
    }

    #[test]
    fn back_lobe_hits_front_to_back_floor() {
        let a = AntennaPattern::default();
        assert!(approx(
            a.gain_db(180.0, 0.0),
            a.max_gain_dbi - a.front_to_back_db,
            1e-12
        ));
    }

    #[test]
    fn coupling_matrix_has_one_link_per_pair() {
        let cfg = SimConfig::default();
        let layout = build_network(&cfg).unwrap();
        let pop = drop_ues(&layout, &cfg.scenario, 11);
        let m = build_coupling_matrix(&layout, &pop, &cfg.antenna, cfg.propagation_params(), 11);
        assert_eq!(pop.len(), 855);
        assert_eq!(m.num_links(), 48_735);
    }

    #[test]
    fn zero_shadowing_makes_coupling_exact() {
        let mut cfg = SimConfig::default();
        cfg.network.site_tiers = 1;
        cfg.propagation.uma_av.shadowing = ShadowingStd {
            terrestrial_los_db: 0.0,
            terrestrial_nlos_db: 0.0,
            aerial_los_db: 0.0,
            aerial_nlos_db: 0.0,
        };
        let layout = build_network(&cfg).unwrap();
        let pop = drop_ues(&layout, &cfg.scenario, 5);
        let m = build_coupling_matrix(&layout, &pop, &cfg.antenna, cfg.propagation_params(), 5);
        for ue in 0..m.num_ues() {
            for cell in 0..m.num_cells() {
                let l = m.link(ue, cell);
                assert_eq!(l.shadowing_db, 0.0);
                assert_eq!(l.coupling_gain_db, l.antenna_gain_db - l.pathloss_db);
            }
        }
    }

    #[test]
    fn coupling_matrix_is_deterministic_and_decomposes() {
        let mut cfg = SimConfig::default();
        cfg.network.site_tiers = 1;
        let layout = build_network(&cfg).unwrap();
        let pop = drop_ues(&layout, &cfg.scenario, 9);
        let a = build_coupling_matrix(&layout, &pop, &cfg.antenna, cfg.propagation_params(), 9);
        let b = build_coupling_matrix(&layout, &pop, &cfg.antenna, cfg.propagation_params(), 9);
        assert_eq!(a, b);
        for ue in 0..a.num_ues() {
            for cell in 0..a.num_cells() {
                let l = a.link(ue, cell);
                assert!(l.coupling_gain_db.is_finite());
                assert_eq!(
                    l.coupling_gain_db,
                    l.antenna_gain_db - l.pathloss_db - l.shadowing_db
                );
            }
        }
    }

    // High-altitude users should see at least as many near-strongest cells
    // as a ground user at the same planar position.
    #[test]
    fn aerial_links_are_more_uniform_than_terrestrial() {
        let mut cfg = SimConfig::default();
        cfg.network.site_tiers = 1;
        let layout = build_network(&cfg).unwrap();
        let position = (180.0, 140.0);
        let pop = UePopulation {
            ues: vec![
                Ue {
                    id: 0,
                    x: position.0,
                    y: position.1,
                    altitude_m: 1.5,
                    class: DeviceClass::Terrestrial,
                    p_cmax_dbm: 23.0,
                },
                Ue {
                    id: 1,
                    x: position.0,
                    y: position.1,
                    altitude_m: 150.0,
                    class: DeviceClass::Aerial,
                    p_cmax_dbm: 23.0,
                },
            ],
            drop_cell: vec![0, 0],
        };

        let count_within_10db = |m: &CouplingMatrix, ue: usize| {
            let best = (0..m.num_cells())
                .map(|c| m.coupling_gain_db(ue, c))
                .fold(f64::NEG_INFINITY, f64::max);
            (0..m.num_cells())
                .filter(|c| m.coupling_gain_db(ue, *c) >= best - 10.0)
                .count()
        };

        let mut terr_total = 0usize;
        let mut aer_total = 0usize;
        for seed in 0..200 {
            let m =
                build_coupling_matrix(&layout, &pop, &cfg.antenna, cfg.propagation_params(), seed);
            terr_total += count_within_10db(&m, 0);
            aer_total += count_within_10db(&m, 1);
        }
        assert!(
            aer_total >= terr_total,
            "aerial near-strongest count {aer_total} < terrestrial {terr_total}"
        );
    }

    proptest! {
        #[test]
        fn los_probability_is_valid_and_monotone(
            d in 0.0f64..5000.0,
            a1 in 0.0f64..400.0,
            a2 in 0.0f64..400.0,
        ) {
            let p = ScenarioPropagation::uma_av();
            let (lo, hi) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
            let p_lo = los_probability(&p, d, lo);
            let p_hi = los_probability(&p, d, hi);
            prop_assert!((0.0..=1.0).contains(&p_lo));
            prop_assert!((0.0..=1.0).contains(&p_hi));
            prop_assert!(p_lo <= p_hi + 1e-12);
        }

        #[test]
        fn pathloss_ordering_and_monotonicity(
            d1 in 1.0f64..10_000.0,
            d2 in 1.0f64..10_000.0,
            alt in 0.0f64..300.0,
            los in any::<bool>(),
        ) {
            let p = ScenarioPropagation::uma_av();
            let pl_los = pathloss_db(&p, d1, alt, true, 2.0e9).unwrap();
            let pl_nlos = pathloss_db(&p, d1, alt, false, 2.0e9).unwrap();
            prop_assert!(pl_los <= pl_nlos + 1e-12);
            prop_assert!(pl_los > 0.0);

            let (near, far) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            if far > near {
                let a = pathloss_db(&p, near, alt, los, 2.0e9).unwrap();
                let b = pathloss_db(&p, far, alt, los, 2.0e9).unwrap();
                prop_assert!(b > a);
            }
        }

        #[test]
        fn antenna_gain_is_bounded(az in -720.0f64..720.0, el in -90.0f64..90.0) {
            let a = AntennaPattern::default();
            let g = a.gain_db(az, el);
            prop_assert!(g <= a.max_gain_dbi + 1e-12);
            prop_assert!(g >= a.max_gain_dbi - a.front_to_back_db - 1e-12);
        }
    }
}
