//! System-level simulator for LTE macro networks serving a mix of
//! terrestrial users and low-altitude aerial users (UAVs).
//!
//! The simulator quantifies the uplink and downlink interference that
//! appears when UAVs attach to a terrestrial network, and implements the
//! mitigation techniques under study:
//!
//! * open-loop PUSCH power-control tuning (per-class `P0`, fractional
//!   compensation `alpha`),
//! * a BS-side power adjustment keyed on the serving-to-neighbour pathloss
//!   (or RSRP) ratio,
//! * closed-loop TPC with receive targets conditioned on neighbour RSRP for
//!   aerial UEs,
//! * coverage-extension link-budget evaluation for the downlink acquisition
//!   channels.
//!
//! Module map: [`deployment`] builds the hexagonal layout and drops UEs,
//! [`propagation`] produces the per-link coupling matrix, [`association`]
//! selects serving cells, [`power_control`] holds the power equations and
//! TPC state machine, [`ul_engine`]/[`dl_engine`] run snapshot Monte Carlo
//! campaigns, [`link_budget`] reproduces the coverage-extension budget, and
//! [`stats`]/[`report`] aggregate and emit results.

pub mod association;
pub mod config;
pub mod deployment;
pub mod dl_engine;
pub mod error;
pub mod geometry;
pub mod link_budget;
pub mod power_control;
pub mod propagation;
pub mod report;
pub mod rng;
pub mod stats;
pub mod ul_engine;
pub mod units;

pub use association::{associate, rsrp_dbm, ServingAssignment};
pub use config::{NetworkConfig, PropagationConfig, SimConfig, SweepConfig, UlConfig};
pub use deployment::{
    build_network, drop_ues, DeploymentCase, DeviceClass, NetworkLayout, Scenario,
    ScenarioConfig, Ue, UePopulation,
};
pub use dl_engine::{
    geometry_sinr, outage, run_dl_campaign, ChannelThresholds, DlCampaign, DlChannel,
    GeometrySample, DL_CHANNELS,
};
pub use error::{Result, SimError};
pub use link_budget::{build_ce_table, BudgetChannel, LinkBudgetRow};
pub use power_control::{
    aerial_target_power, beta_adjustment, closed_loop_update, open_loop_power, tpc_command,
    total_cpc_adjustment, AerialTargetMode, Alpha, BetaInput, BetaTable, ClosedLoopMode,
    ClosedLoopState, PowerControlConfig, TpcStepSet,
};
pub use propagation::{
    build_coupling_matrix, los_probability, pathloss_db, AntennaPattern, CouplingMatrix,
    LinkState, ScenarioPropagation,
};
pub use stats::{cdf, gain_report, percentile, EmpiricalCdf, GainReport};
pub use ul_engine::{run_ul_campaign, UlCampaign, UlDropResult};
