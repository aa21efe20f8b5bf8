//! Snapshot Monte Carlo uplink engine.
//!
//! Each drop realizes UE positions, shadowing, and a scheduling snapshot,
//! computes transmit powers under the configured power-control policy, and
//! measures per-cell interference-over-thermal (IoT) plus per-UE SINR and
//! throughput. Drops are independent and evaluated in parallel; results are
//! keyed by drop index so aggregation is deterministic regardless of worker
//! count.
//!
//! Scheduling model: within each cell the carrier's PRBs are split into
//! contiguous shares, one per attached UE in attachment order, and every UE
//! is independently active with probability `target_ru`. The expected
//! occupied-PRB fraction therefore equals the target utilization exactly,
//! and PRBs are never double-booked within a cell.

use rand::Rng;
use rayon::prelude::*;

use crate::association::{associate, ServingAssignment};
use crate::config::SimConfig;
use crate::deployment::{build_network, drop_ues, DeviceClass, NetworkLayout};
use crate::error::{Result, SimError};
use crate::power_control::{
    aerial_target_power, closed_loop_update, open_loop_power, tpc_command, BetaInput,
    ClosedLoopMode, ClosedLoopState, PowerControlConfig,
};
use crate::propagation::{build_coupling_matrix, CouplingMatrix};
use crate::rng::{derive_seed, stream_rng, STREAM_SCHEDULE};
use crate::units::{db_to_linear, dbm_to_mw};

/// Campaign-level stream tag for per-drop seeds.
const STREAM_UL_DROPS: u64 = 0x11;

// ---------------------------------------------------------------------------
// Scheduling
// ---------------------------------------------------------------------------

/// PRB allocation of one snapshot: `(first_prb, count)` per active UE.
#[derive(Debug, Clone, PartialEq)]
pub struct UlAllocation {
    pub ue_prbs: Vec<Option<(u32, u32)>>,
    pub num_prbs: u32,
    pub num_cells: usize,
}

impl UlAllocation {
    pub fn is_active(&self, ue: usize) -> bool {
        self.ue_prbs[ue].is_some()
    }

    pub fn occupied_prbs(&self) -> u64 {
        self.ue_prbs
            .iter()
            .flatten()
            .map(|(_, len)| *len as u64)
            .sum()
    }

    /// Occupied fraction of the network-wide PRB grid.
    pub fn achieved_ru(&self) -> f64 {
        self.occupied_prbs() as f64 / (self.num_prbs as u64 * self.num_cells as u64) as f64
    }
}

/// Draw one scheduling snapshot.
///
/// Every attached UE owns a contiguous share of its serving cell's PRBs and
/// transmits on it with probability `target_ru`.
pub fn schedule_snapshot(
    assignments: &[ServingAssignment],
    num_cells: usize,
    target_ru: f64,
    num_prbs: u32,
    seed: u64,
) -> UlAllocation {
    let mut attached: Vec<Vec<usize>> = vec![Vec::new(); num_cells];
    for a in assignments {
        attached[a.serving_cell].push(a.ue);
    }

    let mut rng = stream_rng(seed, STREAM_SCHEDULE, 0);
    let mut ue_prbs = vec![None; assignments.len()];
    for cell_ues in &attached {
        let users = cell_ues.len() as u32;
        if users == 0 {
            continue;
        }
        let base = num_prbs / users;
        let remainder = num_prbs % users;
        let mut start = 0u32;
        for (i, ue) in cell_ues.iter().enumerate() {
            let len = base + u32::from((i as u32) < remainder);
            let active = rng.gen::<f64>() < target_ru;
            if active && len > 0 {
                ue_prbs[*ue] = Some((start, len));
            }
            start += len;
        }
    }

    UlAllocation {
        ue_prbs,
        num_prbs,
        num_cells,
    }
}

// ---------------------------------------------------------------------------
// Interference and IoT
// ---------------------------------------------------------------------------

/// Transmit power per PRB given a total power over `m` PRBs.
pub fn per_prb_tx_dbm(total_dbm: f64, m_prb: u32) -> f64 {
    total_dbm - 10.0 * (m_prb as f64).log10()
}

/// Linear-domain uplink interference per (cell, PRB), in mW.
///
/// Interference at a cell sums the received power of every active UE served
/// elsewhere that transmits on the PRB; thermal noise is accounted
/// separately.
pub fn compute_ul_interference(
    alloc: &UlAllocation,
    matrix: &CouplingMatrix,
    serving: &[usize],
    tx_total_dbm: &[Option<f64>],
) -> Vec<Vec<f64>> {
    let mut interference = vec![vec![0.0; alloc.num_prbs as usize]; alloc.num_cells];
    for ue in 0..matrix.num_ues() {
        let (Some((start, len)), Some(tx)) = (alloc.ue_prbs[ue], tx_total_dbm[ue]) else {
            continue;
        };
        let per_prb = per_prb_tx_dbm(tx, len);
        for (cell, rows) in interference.iter_mut().enumerate() {
            if cell == serving[ue] {
                continue;
            }
            let rx_mw = dbm_to_mw(per_prb + matrix.coupling_gain_db(ue, cell));
            for slot in &mut rows[start as usize..(start + len) as usize] {
                *slot += rx_mw;
            }
        }
    }
    interference
}

/// Interference-over-thermal in dB: `10*log10((I + N) / N)`.
pub fn iot_db(interference_dbm: f64, noise_dbm: f64) -> f64 {
    let i = dbm_to_mw(interference_dbm);
    let n = dbm_to_mw(noise_dbm);
    10.0 * ((i + n) / n).log10()
}

fn iot_from_linear(interference_mw: f64, noise_mw: f64) -> f64 {
    10.0 * ((interference_mw + noise_mw) / noise_mw).log10()
}

// ---------------------------------------------------------------------------
// Throughput abstraction
// ---------------------------------------------------------------------------

/// Attenuated-Shannon link-to-rate map with an efficiency ceiling and an
/// SINR floor below which no transport block is delivered.
#[derive(Debug, Clone, Copy)]
pub struct ThroughputMap {
    pub bandwidth_efficiency: f64,
    pub spectral_efficiency_cap: f64,
    pub sinr_floor_db: f64,
    pub prb_bandwidth_hz: f64,
}

impl ThroughputMap {
    pub fn from_config(cfg: &SimConfig) -> Self {
        Self {
            bandwidth_efficiency: cfg.ul.bandwidth_efficiency,
            spectral_efficiency_cap: cfg.ul.spectral_efficiency_cap,
            sinr_floor_db: cfg.ul.sinr_floor_db,
            prb_bandwidth_hz: cfg.network.prb_bandwidth_hz,
        }
    }

    /// Spectral efficiency in bits/s/Hz at the given SINR.
    pub fn spectral_efficiency(&self, sinr_db: f64) -> f64 {
        if sinr_db < self.sinr_floor_db {
            return 0.0;
        }
        let se = self.bandwidth_efficiency * (1.0 + db_to_linear(sinr_db)).log2();
        se.min(self.spectral_efficiency_cap)
    }

    /// Throughput over `m` PRBs, bits/s.
    pub fn throughput_bps(&self, sinr_db: f64, m_prb: u32) -> f64 {
        self.spectral_efficiency(sinr_db) * m_prb as f64 * self.prb_bandwidth_hz
    }
}

/// Per-UE link result of one drop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UlPerf {
    pub ue: usize,
    pub sinr_db: f64,
    pub throughput_bps: f64,
}

/// SINR and throughput for every active UE, given the interference field.
pub fn ul_sinr_and_throughput(
    alloc: &UlAllocation,
    matrix: &CouplingMatrix,
    serving: &[usize],
    tx_total_dbm: &[Option<f64>],
    interference: &[Vec<f64>],
    noise_per_prb_dbm: f64,
    map: &ThroughputMap,
) -> Vec<UlPerf> {
    let noise_mw = dbm_to_mw(noise_per_prb_dbm);
    let mut out = Vec::new();
    for ue in 0..matrix.num_ues() {
        let (Some((start, len)), Some(tx)) = (alloc.ue_prbs[ue], tx_total_dbm[ue]) else {
            continue;
        };
        let cell = serving[ue];
        let signal_mw =
            dbm_to_mw(per_prb_tx_dbm(tx, len) + matrix.coupling_gain_db(ue, cell)) * len as f64;
        let mut denom = noise_mw * len as f64;
        for k in start..start + len {
            denom += interference[cell][k as usize];
        }
        let sinr_db = 10.0 * (signal_mw / denom).log10();
        out.push(UlPerf {
            ue,
            sinr_db,
            throughput_bps: map.throughput_bps(sinr_db, len),
        });
    }
    out
}

// ---------------------------------------------------------------------------
// Power assignment
// ---------------------------------------------------------------------------

fn effective_p0(policy: &PowerControlConfig, assignment: &ServingAssignment, class: DeviceClass) -> f64 {
    let mut p0 = policy.p0_for_class(class);
    if policy.beta.enabled {
        let n = policy.beta.neighbor_index;
        let ratio = match policy.beta.input {
            BetaInput::PathlossRatio => assignment.pathloss_ratio_db(n),
            BetaInput::RsrpRatio => assignment.rsrp_ratio_db(n),
        };
        // UEs without enough neighbours dominate their surroundings; no cut.
        if let Ok(r) = ratio {
            p0 += policy.beta.table.adjustment_db(r);
        }
    }
    p0
}

/// Open-loop transmit power for every active UE.
pub fn open_loop_tx_powers(
    assignments: &[ServingAssignment],
    alloc: &UlAllocation,
    classes: &[DeviceClass],
    p_cmax_dbm: &[f64],
    policy: &PowerControlConfig,
) -> Vec<Option<f64>> {
    assignments
        .iter()
        .map(|a| {
            let (_, m) = alloc.ue_prbs[a.ue]?;
            let p0 = effective_p0(policy, a, classes[a.ue]);
            Some(
                open_loop_power(
                    m,
                    p0,
                    policy.alpha,
                    a.serving_pathloss_db,
                    policy.delta_tf_db,
                    0.0,
                    p_cmax_dbm[a.ue],
                )
                .expect("active UEs hold at least one PRB"),
            )
        })
        .collect()
}

/// Closed-loop receive target of one UE before any IoT raise.
fn base_target_dbm(policy: &PowerControlConfig, a: &ServingAssignment, class: DeviceClass) -> f64 {
    let cl = &policy.closed_loop;
    match class {
        DeviceClass::Terrestrial => cl.target_rx_power_dbm,
        DeviceClass::Aerial => match a.rsrp_ratio_db(cl.target_neighbor_index) {
            Ok(_) => {
                let neighbor = a.neighbors[cl.target_neighbor_index - 1].rsrp_dbm;
                aerial_target_power(
                    a.serving_rsrp_dbm,
                    neighbor,
                    cl.target_rx_power_dbm,
                    cl.aerial_target_mode,
                    &policy.beta.table,
                )
            }
            Err(_) => cl.target_rx_power_dbm,
        },
    }
}

/// Emulate closed-loop power control inside one drop.
///
/// Per-UE TPC command loops run to convergence against the wideband receive
/// target; when `iot_raised_targets` is set, targets track the (damped)
/// serving-cell IoT and the whole network iterates to a fixed point.
#[allow(clippy::too_many_arguments)]
pub fn closed_loop_tx_powers(
    assignments: &[ServingAssignment],
    alloc: &UlAllocation,
    matrix: &CouplingMatrix,
    classes: &[DeviceClass],
    p_cmax_dbm: &[f64],
    policy: &PowerControlConfig,
    noise_per_prb_dbm: f64,
) -> (Vec<Option<f64>>, Vec<Vec<f64>>) {
    let cl = &policy.closed_loop;
    let serving: Vec<usize> = assignments.iter().map(|a| a.serving_cell).collect();
    let base_targets: Vec<f64> = assignments
        .iter()
        .map(|a| base_target_dbm(policy, a, classes[a.ue]))
        .collect();

    let mut states = vec![ClosedLoopState::default(); assignments.len()];
    let mut tx = open_loop_tx_powers(assignments, alloc, classes, p_cmax_dbm, policy);
    let mut interference = compute_ul_interference(alloc, matrix, &serving, &tx);
    let noise_band_mw = dbm_to_mw(noise_per_prb_dbm) * alloc.num_prbs as f64;
    let mut iot_estimate = vec![0.0; alloc.num_cells];

    for _outer in 0..cl.max_outer_iterations {
        if cl.iot_raised_targets {
            for (cell, rows) in interference.iter().enumerate() {
                let i_mw: f64 = rows.iter().sum();
                let fresh = iot_from_linear(i_mw, noise_band_mw);
                iot_estimate[cell] =
                    cl.damping * iot_estimate[cell] + (1.0 - cl.damping) * fresh;
            }
        }

        let mut max_change: f64 = 0.0;
        for a in assignments {
            let ue = a.ue;
            let Some((_, m)) = alloc.ue_prbs[ue] else {
                continue;
            };
            let target = base_targets[ue]
                + if cl.iot_raised_targets {
                    iot_estimate[a.serving_cell]
                } else {
                    0.0
                };
            let p0 = effective_p0(policy, a, classes[ue]);
            let before = tx[ue].unwrap();
            let mut current = before;
            for _ in 0..cl.max_tpc_rounds {
                let received = current + matrix.coupling_gain_db(ue, a.serving_cell);
                if (received - target).abs() <= cl.convergence_tolerance_db {
                    break;
                }
                let delta = tpc_command(received, target, &cl.tpc_steps);
                if delta == 0.0 {
                    break;
                }
                states[ue] =
                    closed_loop_update(states[ue], delta, cl.mode, &cl.tpc_steps)
                        .expect("command drawn from the configured step set");
                let updated = open_loop_power(
                    m,
                    p0,
                    policy.alpha,
                    a.serving_pathloss_db,
                    policy.delta_tf_db,
                    states[ue].f_db,
                    p_cmax_dbm[ue],
                )
                .expect("active UEs hold at least one PRB");
                if updated == current {
                    // power-limited: the cap absorbs further up commands
                    break;
                }
                current = updated;
            }
            tx[ue] = Some(current);
            max_change = max_change.max((current - before).abs());
        }

        interference = compute_ul_interference(alloc, matrix, &serving, &tx);
        if max_change < cl.convergence_tolerance_db {
            break;
        }
    }

    (tx, interference)
}

// ---------------------------------------------------------------------------
// Drops and campaigns
// ---------------------------------------------------------------------------

/// Measured output of one uplink drop.
#[derive(Debug, Clone, PartialEq)]
pub struct UlDropResult {
    pub seed: u64,
    /// Band-total IoT per cell, dB.
    pub cell_iot_db: Vec<f64>,
    /// Band-total received interference per cell, linear mW.
    pub cell_interference_mw: Vec<f64>,
    /// Active UEs only, aligned vectors.
    pub ue_class: Vec<DeviceClass>,
    pub ue_serving_cell: Vec<usize>,
    pub ue_sinr_db: Vec<f64>,
    pub ue_throughput_bps: Vec<f64>,
    pub ue_tx_power_dbm: Vec<f64>,
    pub achieved_ru: f64,
}

/// Population, coupling matrix, and assignments of one drop, using the same
/// seed derivation as the campaign loop.
pub fn drop_artifacts(
    layout: &NetworkLayout,
    cfg: &SimConfig,
    drop_index: u64,
) -> (
    crate::deployment::UePopulation,
    CouplingMatrix,
    Vec<ServingAssignment>,
) {
    let drop_seed = derive_seed(cfg.scenario.seed, STREAM_UL_DROPS, drop_index);
    let pop = drop_ues(layout, &cfg.scenario, drop_seed);
    let matrix = build_coupling_matrix(
        layout,
        &pop,
        &cfg.antenna,
        cfg.propagation_params(),
        drop_seed,
    );
    let assignments = associate(&matrix, layout);
    (pop, matrix, assignments)
}

/// One uplink drop end to end.
pub fn run_ul_drop(
    layout: &NetworkLayout,
    cfg: &SimConfig,
    policy: &PowerControlConfig,
    drop_index: u64,
) -> UlDropResult {
    let drop_seed = derive_seed(cfg.scenario.seed, STREAM_UL_DROPS, drop_index);
    let (pop, matrix, assignments) = drop_artifacts(layout, cfg, drop_index);
    let alloc = schedule_snapshot(
        &assignments,
        layout.num_cells(),
        cfg.scenario.target_ru,
        layout.num_prbs,
        drop_seed,
    );

    let classes: Vec<DeviceClass> = pop.ues.iter().map(|u| u.class).collect();
    let p_cmax: Vec<f64> = pop
        .ues
        .iter()
        .map(|u| u.p_cmax_dbm.min(policy.p_cmax_dbm))
        .collect();
    let serving: Vec<usize> = assignments.iter().map(|a| a.serving_cell).collect();
    let noise_per_prb = cfg.ul_noise_per_prb_dbm();

    let (tx, interference) = match policy.closed_loop.mode {
        ClosedLoopMode::Off => {
            let tx = open_loop_tx_powers(&assignments, &alloc, &classes, &p_cmax, policy);
            let interference = compute_ul_interference(&alloc, &matrix, &serving, &tx);
            (tx, interference)
        }
        _ => closed_loop_tx_powers(
            &assignments,
            &alloc,
            &matrix,
            &classes,
            &p_cmax,
            policy,
            noise_per_prb,
        ),
    };

    let noise_band_mw = dbm_to_mw(noise_per_prb) * layout.num_prbs as f64;
    let mut cell_iot_db = Vec::with_capacity(layout.num_cells());
    let mut cell_interference_mw = Vec::with_capacity(layout.num_cells());
    for rows in &interference {
        let i_mw: f64 = rows.iter().sum();
        cell_interference_mw.push(i_mw);
        cell_iot_db.push(iot_from_linear(i_mw, noise_band_mw));
    }

    let map = ThroughputMap::from_config(cfg);
    let perf = ul_sinr_and_throughput(
        &alloc,
        &matrix,
        &serving,
        &tx,
        &interference,
        noise_per_prb,
        &map,
    );

    let mut ue_class = Vec::with_capacity(perf.len());
    let mut ue_serving_cell = Vec::with_capacity(perf.len());
    let mut ue_sinr_db = Vec::with_capacity(perf.len());
    let mut ue_throughput_bps = Vec::with_capacity(perf.len());
    let mut ue_tx_power_dbm = Vec::with_capacity(perf.len());
    for p in &perf {
        ue_class.push(classes[p.ue]);
        ue_serving_cell.push(serving[p.ue]);
        ue_sinr_db.push(p.sinr_db);
        ue_throughput_bps.push(p.throughput_bps);
        ue_tx_power_dbm.push(tx[p.ue].unwrap());
    }

    UlDropResult {
        seed: drop_seed,
        cell_iot_db,
        cell_interference_mw,
        ue_class,
        ue_serving_cell,
        ue_sinr_db,
        ue_throughput_bps,
        ue_tx_power_dbm,
        achieved_ru: alloc.achieved_ru(),
    }
}

/// Aggregated campaign output, drops in index order.
#[derive(Debug, Clone, PartialEq)]
pub struct UlCampaign {
    pub drops: Vec<UlDropResult>,
}

impl UlCampaign {
    pub fn cell_iot_samples(&self) -> Vec<f64> {
        self.drops
            .iter()
            .flat_map(|d| d.cell_iot_db.iter().copied())
            .collect()
    }

    pub fn interference_samples_mw(&self) -> Vec<f64> {
        self.drops
            .iter()
            .flat_map(|d| d.cell_interference_mw.iter().copied())
            .collect()
    }

    fn class_samples(&self, class: Option<DeviceClass>, f: impl Fn(&UlDropResult) -> &[f64]) -> Vec<f64> {
        self.drops
            .iter()
            .flat_map(|d| {
                f(d).iter()
                    .zip(&d.ue_class)
                    .filter(move |(_, c)| class.is_none_or(|want| **c == want))
                    .map(|(v, _)| *v)
            })
            .collect()
    }

    pub fn sinr_samples(&self, class: Option<DeviceClass>) -> Vec<f64> {
        self.class_samples(class, |d| &d.ue_sinr_db)
    }

    pub fn throughput_samples(&self, class: Option<DeviceClass>) -> Vec<f64> {
        self.class_samples(class, |d| &d.ue_throughput_bps)
    }

    pub fn tx_power_samples(&self, class: Option<DeviceClass>) -> Vec<f64> {
        self.class_samples(class, |d| &d.ue_tx_power_dbm)
    }

    pub fn mean_achieved_ru(&self) -> f64 {
        self.drops.iter().map(|d| d.achieved_ru).sum::<f64>() / self.drops.len() as f64
    }
}

/// Run a seeded uplink campaign under the given power-control policy.
pub fn run_ul_campaign(
    cfg: &SimConfig,
    policy: &PowerControlConfig,
    num_drops: u64,
) -> Result<UlCampaign> {
    if num_drops == 0 {
        return Err(SimError::InvalidArgument(
            "a campaign needs at least one drop".into(),
        ));
    }
    cfg.validate()?;
    policy.validate()?;
    let layout = build_network(cfg)?;
    let drops: Vec<UlDropResult> = (0..num_drops)
        .into_par_iter()
        .map(|i| run_ul_drop(&layout, cfg, policy, i))
        .collect();
    Ok(UlCampaign { drops })
}
