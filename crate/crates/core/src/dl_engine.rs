//! Downlink geometry SINR and cell-acquisition outage.
//!
//! Geometry SINR is the wideband downlink SINR with every base station
//! transmitting at full power, the worst case for acquisition channels in
//! an SFN-synchronized network. Outage compares aerial-UE geometry samples
//! against per-channel required SINR thresholds, with and without the
//! Release-13 coverage-extension thresholds.
//!
//! The normal-coverage (non-CE) thresholds are artifact defaults exposed in
//! the config and flagged as such in emitted metadata; the CE thresholds
//! come from the coverage-extension link budget.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::association::{associate, ServingAssignment};
use crate::config::SimConfig;
use crate::deployment::{build_network, drop_ues, DeviceClass};
use crate::error::{Result, SimError};
use crate::propagation::{build_coupling_matrix, CouplingMatrix};
use crate::rng::derive_seed;
use crate::units::dbm_to_mw;

/// Campaign-level stream tag for per-drop seeds.
const STREAM_DL_DROPS: u64 = 0x21;

/// Downlink acquisition channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DlChannel {
    Sch,
    Pbch,
    SystemInformation,
}

pub const DL_CHANNELS: [DlChannel; 3] = [
    DlChannel::Sch,
    DlChannel::Pbch,
    DlChannel::SystemInformation,
];

impl DlChannel {
    pub fn label(&self) -> &'static str {
        match self {
            DlChannel::Sch => "SCH",
            DlChannel::Pbch => "PBCH",
            DlChannel::SystemInformation => "System information",
        }
    }
}

/// Required SINR per channel, normal coverage vs coverage extension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelThresholds {
    pub sch_normal_sinr_db: f64,
    pub pbch_normal_sinr_db: f64,
    pub sysinfo_normal_sinr_db: f64,
    pub sch_ce_sinr_db: f64,
    pub pbch_ce_sinr_db: f64,
    pub sysinfo_ce_sinr_db: f64,
}

impl Default for ChannelThresholds {
    fn default() -> Self {
        Self {
            sch_normal_sinr_db: -6.0,
            pbch_normal_sinr_db: -7.5,
            sysinfo_normal_sinr_db: -4.0,
            sch_ce_sinr_db: -14.3,
            pbch_ce_sinr_db: -14.2,
            sysinfo_ce_sinr_db: -14.2,
        }
    }
}

impl ChannelThresholds {
    pub fn required_sinr_db(&self, channel: DlChannel, ce_enabled: bool) -> f64 {
        match (channel, ce_enabled) {
            (DlChannel::Sch, false) => self.sch_normal_sinr_db,
            (DlChannel::Pbch, false) => self.pbch_normal_sinr_db,
            (DlChannel::SystemInformation, false) => self.sysinfo_normal_sinr_db,
            (DlChannel::Sch, true) => self.sch_ce_sinr_db,
            (DlChannel::Pbch, true) => self.pbch_ce_sinr_db,
            (DlChannel::SystemInformation, true) => self.sysinfo_ce_sinr_db,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for ch in DL_CHANNELS {
            if self.required_sinr_db(ch, true) >= self.required_sinr_db(ch, false) {
                return Err(SimError::InvalidConfig(format!(
                    "CE threshold must lie below the normal threshold for {}",
                    ch.label()
                )));
            }
        }
        Ok(())
    }
}

/// Wideband geometry SINR of one UE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeometrySample {
    pub ue: usize,
    pub class: DeviceClass,
    pub sinr_db: f64,
}

/// Geometry SINR for every UE with all cells at full power.
pub fn geometry_sinr(
    matrix: &CouplingMatrix,
    assignments: &[ServingAssignment],
    classes: &[DeviceClass],
    tx_power_dbm: f64,
    noise_dbm: f64,
) -> Vec<GeometrySample> {
    let noise_mw = dbm_to_mw(noise_dbm);
    assignments
        .iter()
        .map(|a| {
            let signal_mw = dbm_to_mw(tx_power_dbm + matrix.coupling_gain_db(a.ue, a.serving_cell));
            let interference_mw: f64 = (0..matrix.num_cells())
                .filter(|c| *c != a.serving_cell)
                .map(|c| dbm_to_mw(tx_power_dbm + matrix.coupling_gain_db(a.ue, c)))
                .sum();
            GeometrySample {
                ue: a.ue,
                class: classes[a.ue],
                sinr_db: 10.0 * (signal_mw / (interference_mw + noise_mw)).log10(),
            }
        })
        .collect()
}

/// Fraction of aerial samples below each channel's required SINR.
pub fn outage(
    samples: &[GeometrySample],
    thresholds: &ChannelThresholds,
    ce_enabled: bool,
) -> Result<[f64; 3]> {
    let aerial: Vec<f64> = samples
        .iter()
        .filter(|s| s.class == DeviceClass::Aerial)
        .map(|s| s.sinr_db)
        .collect();
    if aerial.is_empty() {
        return Err(SimError::EmptyInput(
            "outage needs at least one aerial sample".into(),
        ));
    }
    let mut out = [0.0; 3];
    for (i, ch) in DL_CHANNELS.iter().enumerate() {
        let threshold = thresholds.required_sinr_db(*ch, ce_enabled);
        let below = aerial.iter().filter(|s| **s < threshold).count();
        out[i] = below as f64 / aerial.len() as f64;
    }
    Ok(out)
}

/// Aggregated downlink campaign output.
#[derive(Debug, Clone, PartialEq)]
pub struct DlCampaign {
    pub aerial_sinr_db: Vec<f64>,
    pub terrestrial_sinr_db: Vec<f64>,
    pub outage_normal: [f64; 3],
    pub outage_ce: [f64; 3],
    pub min_aerial_sinr_db: f64,
}

/// Run a seeded downlink geometry campaign.
pub fn run_dl_campaign(cfg: &SimConfig, num_drops: u64) -> Result<DlCampaign> {
    if num_drops == 0 {
        return Err(SimError::InvalidArgument(
            "a campaign needs at least one drop".into(),
        ));
    }
    cfg.validate()?;
    let layout = build_network(cfg)?;
    let noise = cfg.dl_noise_dbm();

    let per_drop: Vec<Vec<GeometrySample>> = (0..num_drops)
        .into_par_iter()
        .map(|i| {
            let drop_seed = derive_seed(cfg.scenario.seed, STREAM_DL_DROPS, i);
            let pop = drop_ues(&layout, &cfg.scenario, drop_seed);
            let matrix = build_coupling_matrix(
                &layout,
                &pop,
                &cfg.antenna,
                cfg.propagation_params(),
                drop_seed,
            );
            let assignments = associate(&matrix, &layout);
            let classes: Vec<DeviceClass> = pop.ues.iter().map(|u| u.class).collect();
            geometry_sinr(&matrix, &assignments, &classes, layout.tx_power_dbm, noise)
        })
        .collect();

    let mut aerial = Vec::new();
    let mut terrestrial = Vec::new();
    let mut all = Vec::new();
    for drop in per_drop {
        for s in drop {
            match s.class {
                DeviceClass::Aerial => aerial.push(s.sinr_db),
                DeviceClass::Terrestrial => terrestrial.push(s.sinr_db),
            }
            all.push(s);
        }
    }
    if aerial.is_empty() {
        return Err(SimError::EmptyInput(
            "downlink campaign produced no aerial samples (case1 population?)".into(),
        ));
    }

    let outage_normal = outage(&all, &cfg.dl, false)?;
    let outage_ce = outage(&all, &cfg.dl, true)?;
    let min_aerial_sinr_db = aerial.iter().copied().fold(f64::INFINITY, f64::min);

    Ok(DlCampaign {
        aerial_sinr_db: aerial,
        terrestrial_sinr_db: terrestrial,
        outage_normal,
        outage_ce,
        min_aerial_sinr_db,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::association::NeighborEntry;
    use crate::propagation::LinkState;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() < tol
    }

    fn link(coupling: f64) -> LinkState {
        LinkState {
            pathloss_db: -coupling,
            shadowing_db: 0.0,
            antenna_gain_db: 0.0,
            los: true,
            coupling_gain_db: coupling,
        }
    }

    fn matrix(rows: &[Vec<f64>]) -> CouplingMatrix {
        let cells = rows[0].len();
        CouplingMatrix::new(
            rows.len(),
            cells,
            rows.iter().flatten().map(|c| link(*c)).collect(),
        )
    }

    fn assignment(ue: usize, row: &[f64], tx: f64) -> ServingAssignment {
        let serving = row
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        let mut neighbors: Vec<NeighborEntry> = row
            .iter()
            .enumerate()
            .filter(|(c, _)| *c != serving)
            .map(|(c, g)| NeighborEntry {
                cell: c,
                rsrp_dbm: tx + g,
                pathloss_db: -g,
            })
            .collect();
        neighbors.sort_by(|a, b| b.rsrp_dbm.partial_cmp(&a.rsrp_dbm).unwrap());
        ServingAssignment {
            ue,
            serving_cell: serving,
            serving_rsrp_dbm: tx + row[serving],
            serving_pathloss_db: -row[serving],
            neighbors,
        }
    }

    fn sample(sinr: f64) -> GeometrySample {
        GeometrySample {
            ue: 0,
            class: DeviceClass::Aerial,
            sinr_db: sinr,
        }
    }

    #[test]
    fn single_cell_geometry_equals_snr() {
        let rows = vec![vec![-100.0]];
        let m = matrix(&rows);
        let a = vec![assignment(0, &rows[0], 46.0)];
        let g = geometry_sinr(&m, &a, &[DeviceClass::Aerial], 46.0, -95.0);
        // SNR = 46 - 100 - (-95) = 41 dB
        assert!(approx(g[0].sinr_db, 41.0, 1e-9));
    }

    #[test]
    fn two_equal_cells_split_to_zero_db() {
        let rows = vec![vec![-100.0, -100.0]];
        let m = matrix(&rows);
        let a = vec![assignment(0, &rows[0], 46.0)];
        let g = geometry_sinr(&m, &a, &[DeviceClass::Aerial], 46.0, -300.0);
        assert!(approx(g[0].sinr_db, 0.0, 1e-6));
    }

    #[test]
    fn four_cell_instance_matches_brute_force() {
        let rows = vec![vec![-92.0, -101.0, -97.5, -110.0]];
        let m = matrix(&rows);
        let a = vec![assignment(0, &rows[0], 46.0)];
        let noise = -95.0;
        let g = geometry_sinr(&m, &a, &[DeviceClass::Terrestrial], 46.0, noise);

        let s = dbm_to_mw(46.0 - 92.0);
        let i = dbm_to_mw(46.0 - 101.0) + dbm_to_mw(46.0 - 97.5) + dbm_to_mw(46.0 - 110.0);
        let expect = 10.0 * (s / (i + dbm_to_mw(noise))).log10();
        assert!(approx(g[0].sinr_db, expect, 1e-12));
    }

    #[test]
    fn geometry_never_exceeds_snr() {
        let rows = vec![vec![-90.0, -95.0, -99.0]];
        let m = matrix(&rows);
        let a = vec![assignment(0, &rows[0], 46.0)];
        let noise = -100.0;
        let g = geometry_sinr(&m, &a, &[DeviceClass::Aerial], 46.0, noise);
        let snr = 46.0 - 90.0 - noise;
        assert!(g[0].sinr_db <= snr);
    }

    #[test]
    fn outage_edges() {
        let th = ChannelThresholds::default();
        let high: Vec<GeometrySample> = (0..10).map(|_| sample(5.0)).collect();
        assert_eq!(outage(&high, &th, false).unwrap(), [0.0; 3]);
        assert_eq!(outage(&high, &th, true).unwrap(), [0.0; 3]);

        let low: Vec<GeometrySample> = (0..10).map(|_| sample(-40.0)).collect();
        assert_eq!(outage(&low, &th, false).unwrap(), [1.0; 3]);

        assert!(outage(&[], &th, false).is_err());
        let terrestrial_only = [GeometrySample {
            ue: 0,
            class: DeviceClass::Terrestrial,
            sinr_db: 3.0,
        }];
        assert!(outage(&terrestrial_only, &th, false).is_err());
    }

    #[test]
    fn ce_outage_never_exceeds_normal_outage() {
        let th = ChannelThresholds::default();
        let mixed: Vec<GeometrySample> =
            [-15.0, -12.0, -9.0, -5.0, -2.0, 1.0, 6.0].iter().map(|s| sample(*s)).collect();
        let normal = outage(&mixed, &th, false).unwrap();
        let ce = outage(&mixed, &th, true).unwrap();
        for i in 0..3 {
            assert!(ce[i] <= normal[i]);
        }
    }

    #[test]
    fn threshold_ordering_is_validated() {
        let th = ChannelThresholds {
            sch_ce_sinr_db: 0.0,
            ..ChannelThresholds::default()
        };
        assert!(th.validate().is_err());
    }

    #[test]
    fn dl_campaign_smoke() {
        let mut cfg = SimConfig::default();
        cfg.network.site_tiers = 1;
        let c = run_dl_campaign(&cfg, 3).unwrap();
        assert_eq!(c.aerial_sinr_db.len(), 21 * 5 * 3);
        assert_eq!(c.terrestrial_sinr_db.len(), 21 * 10 * 3);
        assert!(c.min_aerial_sinr_db.is_finite());
        for i in 0..3 {
            assert!(c.outage_ce[i] <= c.outage_normal[i]);
        }
    }

    #[test]
    fn dl_campaign_requires_aerials() {
        let mut cfg = SimConfig::default();
        cfg.network.site_tiers = 0;
        cfg.scenario.apply_case(crate::deployment::DeploymentCase::Case1);
        assert!(run_dl_campaign(&cfg, 1).is_err());
    }
}
