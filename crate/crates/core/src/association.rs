//! RSRP computation, serving-cell selection, and neighbour ranking.
//!
//! RSRP is modelled at wideband per-carrier granularity: only RSRP
//! differences feed the power-control algorithms, which makes the choice of
//! per-resource normalization immaterial. The pathloss attached to each
//! ranked entry is the UE-side estimate `tx_power - rsrp`, i.e. the
//! effective coupling loss including antenna gain and shadowing, which is
//! exactly the quantity a UE can derive from downlink measurements.

use serde::Serialize;
use std::io::Write;

use crate::deployment::NetworkLayout;
use crate::error::{Result, SimError};
use crate::propagation::CouplingMatrix;

/// Received reference power in dBm for a cell transmitting `tx_power_dbm`
/// over a link with the given coupling gain.
pub fn rsrp_dbm(tx_power_dbm: f64, coupling_gain_db: f64) -> f64 {
    tx_power_dbm + coupling_gain_db
}

/// One ranked neighbour entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NeighborEntry {
    pub cell: usize,
    pub rsrp_dbm: f64,
    pub pathloss_db: f64,
}

/// Per-UE serving assignment with complete neighbour ranking.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ServingAssignment {
    pub ue: usize,
    pub serving_cell: usize,
    pub serving_rsrp_dbm: f64,
    pub serving_pathloss_db: f64,
    /// All non-serving cells, sorted by descending RSRP (ties by cell index).
    pub neighbors: Vec<NeighborEntry>,
}

impl ServingAssignment {
    /// dB ratio between the n-th strongest neighbour pathloss and the
    /// serving pathloss (1-based n). Non-negative whenever every cell
    /// transmits at the same power.
    pub fn pathloss_ratio_db(&self, n: usize) -> Result<f64> {
        self.neighbor(n)
            .map(|e| e.pathloss_db - self.serving_pathloss_db)
    }

    /// dB ratio between the serving RSRP and the n-th strongest neighbour
    /// RSRP (1-based n).
    pub fn rsrp_ratio_db(&self, n: usize) -> Result<f64> {
        self.neighbor(n).map(|e| self.serving_rsrp_dbm - e.rsrp_dbm)
    }

    fn neighbor(&self, n: usize) -> Result<&NeighborEntry> {
        if n == 0 || n > self.neighbors.len() {
            return Err(SimError::OutOfRange(format!(
                "neighbour index {n} (have {})",
                self.neighbors.len()
            )));
        }
        Ok(&self.neighbors[n - 1])
    }
}

/// Assign every UE to its strongest cell and rank the remaining cells.
///
/// Ties are broken toward the lowest cell index so that association is
/// deterministic.
pub fn associate(matrix: &CouplingMatrix, layout: &NetworkLayout) -> Vec<ServingAssignment> {
    let tx = layout.tx_power_dbm;
    (0..matrix.num_ues())
        .map(|ue| {
            let mut ranked: Vec<NeighborEntry> = (0..matrix.num_cells())
                .map(|cell| {
                    let rsrp = rsrp_dbm(tx, matrix.coupling_gain_db(ue, cell));
                    NeighborEntry {
                        cell,
                        rsrp_dbm: rsrp,
                        pathloss_db: tx - rsrp,
                    }
                })
                .collect();
            ranked.sort_by(|a, b| {
                b.rsrp_dbm
                    .partial_cmp(&a.rsrp_dbm)
                    .unwrap()
                    .then(a.cell.cmp(&b.cell))
            });
            let serving = ranked.remove(0);
            ServingAssignment {
                ue,
                serving_cell: serving.cell,
                serving_rsrp_dbm: serving.rsrp_dbm,
                serving_pathloss_db: serving.pathloss_db,
                neighbors: ranked,
            }
        })
        .collect()
}

/// Tabular dump of assignments, one row per UE.
pub fn write_assignments_csv<W: Write>(
    mut w: W,
    assignments: &[ServingAssignment],
) -> Result<()> {
    writeln!(
        w,
        "ue,serving_cell,serving_rsrp_dbm,serving_pathloss_db,strongest_neighbor"
    )?;
    for a in assignments {
        let first = a
            .neighbors
            .first()
            .map(|n| n.cell.to_string())
            .unwrap_or_else(|| "-".into());
        writeln!(
            w,
            "{},{},{},{},{}",
            a.ue, a.serving_cell, a.serving_rsrp_dbm, a.serving_pathloss_db, first
        )?;
    }
    Ok(())
}
