//! LTE coverage-extension link budget.
//!
//! Chains effective noise power, receiver sensitivity, and maximum coupling
//! loss for the three downlink channels involved in cell acquisition (SCH,
//! PBCH, PDSCH carrying system information). With Release-13 coverage
//! extension all three channels meet a 155.7 dB MCL, which is the margin
//! that keeps acquisition alive under worst-case downlink interference.

use serde::Serialize;
use std::io::Write;

use crate::error::{Result, SimError};

/// Downlink acquisition channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BudgetChannel {
    Sch,
    Pbch,
    Pdsch,
}

impl BudgetChannel {
    pub fn label(&self) -> &'static str {
        match self {
            BudgetChannel::Sch => "SCH",
            BudgetChannel::Pbch => "PBCH",
            BudgetChannel::Pdsch => "PDSCH",
        }
    }
}

/// One column of the coverage-extension budget.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkBudgetRow {
    pub channel: BudgetChannel,
    pub max_tx_power_dbm: f64,
    /// Transmit power adjusted for the signal's occupied bandwidth.
    pub actual_tx_power_dbm: f64,
    pub noise_density_dbm_hz: f64,
    pub noise_figure_db: f64,
    pub bandwidth_hz: f64,
    pub effective_noise_dbm: f64,
    pub required_sinr_db: f64,
    pub sensitivity_dbm: f64,
    pub mcl_db: f64,
}

/// Effective noise power over a bandwidth: density + noise figure + 10log10(B).
pub fn effective_noise(
    noise_density_dbm_hz: f64,
    noise_figure_db: f64,
    bandwidth_hz: f64,
) -> Result<f64> {
    if bandwidth_hz <= 0.0 {
        return Err(SimError::InvalidArgument(
            "bandwidth must be positive".into(),
        ));
    }
    Ok(noise_density_dbm_hz + noise_figure_db + 10.0 * bandwidth_hz.log10())
}

/// Receiver sensitivity: effective noise + required SINR.
pub fn sensitivity(effective_noise_dbm: f64, required_sinr_db: f64) -> f64 {
    effective_noise_dbm + required_sinr_db
}

/// Maximum coupling loss: transmit power - sensitivity.
pub fn mcl(actual_tx_power_dbm: f64, sensitivity_dbm: f64) -> f64 {
    actual_tx_power_dbm - sensitivity_dbm
}

fn build_row(
    channel: BudgetChannel,
    actual_tx_power_dbm: f64,
    bandwidth_hz: f64,
    required_sinr_db: f64,
) -> LinkBudgetRow {
    let noise_density_dbm_hz = -174.0;
    let noise_figure_db = 9.0;
    let effective_noise_dbm =
        effective_noise(noise_density_dbm_hz, noise_figure_db, bandwidth_hz).unwrap();
    let sensitivity_dbm = sensitivity(effective_noise_dbm, required_sinr_db);
    LinkBudgetRow {
        channel,
        max_tx_power_dbm: 46.0,
        actual_tx_power_dbm,
        noise_density_dbm_hz,
        noise_figure_db,
        bandwidth_hz,
        effective_noise_dbm,
        required_sinr_db,
        sensitivity_dbm,
        mcl_db: mcl(actual_tx_power_dbm, sensitivity_dbm),
    }
}

/// Coverage-extension budget for SCH, PBCH, and PDSCH.
pub fn build_ce_table() -> [LinkBudgetRow; 3] {
    [
        build_row(BudgetChannel::Sch, 32.0, 360_000.0, -14.3),
        build_row(BudgetChannel::Pbch, 36.8, 1_080_000.0, -14.2),
        build_row(BudgetChannel::Pdsch, 36.8, 1_080_000.0, -14.2),
    ]
}

/// Plain-text table, values rounded to 0.1 dB for display.
pub fn format_table(rows: &[LinkBudgetRow]) -> String {
    let mut out = String::new();
    let line = |label: &str, vals: Vec<String>| format!("{label:<42}{}\n", vals.join("  "));
    let fmt1 = |v: f64| format!("{v:>9.1}");
    let fmt0 = |v: f64| format!("{v:>9.0}");

    out.push_str(&line(
        "Physical channel",
        rows.iter().map(|r| format!("{:>9}", r.channel.label())).collect(),
    ));
    out.push_str(&line(
        "Max Tx power per LTE carrier (dBm)",
        rows.iter().map(|r| fmt1(r.max_tx_power_dbm)).collect(),
    ));
    out.push_str(&line(
        "Actual Tx power (dBm)",
        rows.iter().map(|r| fmt1(r.actual_tx_power_dbm)).collect(),
    ));
    out.push_str(&line(
        "Thermal noise density (dBm/Hz)",
        rows.iter().map(|r| fmt1(r.noise_density_dbm_hz)).collect(),
    ));
    out.push_str(&line(
        "Receiver noise figure (dB)",
        rows.iter().map(|r| fmt0(r.noise_figure_db)).collect(),
    ));
    out.push_str(&line(
        "Occupied channel bandwidth (Hz)",
        rows.iter().map(|r| fmt0(r.bandwidth_hz)).collect(),
    ));
    out.push_str(&line(
        "Effective noise power (dBm)",
        rows.iter().map(|r| fmt1(r.effective_noise_dbm)).collect(),
    ));
    out.push_str(&line(
        "Required SINR (dB)",
        rows.iter().map(|r| fmt1(r.required_sinr_db)).collect(),
    ));
    out.push_str(&line(
        "Receiver sensitivity (dBm)",
        rows.iter().map(|r| fmt1(r.sensitivity_dbm)).collect(),
    ));
    out.push_str(&line(
        "MCL (dB)",
        rows.iter().map(|r| fmt1(r.mcl_db)).collect(),
    ));
    out
}

/// Machine-readable emission, one row per channel.
pub fn write_csv<W: Write>(mut w: W, rows: &[LinkBudgetRow]) -> Result<()> {
    writeln!(
        w,
        "channel,max_tx_power_dbm,actual_tx_power_dbm,noise_density_dbm_hz,\
         noise_figure_db,bandwidth_hz,effective_noise_dbm,required_sinr_db,\
         sensitivity_dbm,mcl_db"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            r.channel.label(),
            r.max_tx_power_dbm,
            r.actual_tx_power_dbm,
            r.noise_density_dbm_hz,
            r.noise_figure_db,
            r.bandwidth_hz,
            r.effective_noise_dbm,
            r.required_sinr_db,
            r.sensitivity_dbm,
            r.mcl_db
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() < tol
    }

    #[test]
    fn effective_noise_reference_values() {
        assert!(approx(
            effective_noise(-174.0, 9.0, 360_000.0).unwrap(),
            -109.4,
            0.05
        ));
        assert!(approx(
            effective_noise(-174.0, 9.0, 1_080_000.0).unwrap(),
            -104.7,
            0.05
        ));
        assert_eq!(effective_noise(-174.0, 0.0, 1.0).unwrap(), -174.0);
        assert!(effective_noise(-174.0, 9.0, 0.0).is_err());
    }

    #[test]
    fn sensitivity_reference_values() {
        assert!(approx(sensitivity(-109.4, -14.3), -123.7, 1e-9));
        assert!(approx(sensitivity(-104.7, -14.2), -118.9, 1e-9));
        assert_eq!(sensitivity(-104.7, 0.0), -104.7);
    }

    #[test]
    fn mcl_reference_values() {
        assert!(approx(mcl(32.0, -123.7), 155.7, 1e-9));
        assert!(approx(mcl(36.8, -118.9), 155.7, 1e-9));
        assert_eq!(mcl(0.0, 0.0), 0.0);
    }

    #[test]
    fn mcl_is_shift_invariant() {
        let base = mcl(32.0, -123.7);
        for shift in [-13.0, 2.5, 40.0] {
            assert!(approx(mcl(32.0 + shift, -123.7 + shift), base, 1e-9));
        }
    }

    #[test]
    fn ce_table_rows_chain_consistently() {
        for r in build_ce_table() {
            let noise =
                effective_noise(r.noise_density_dbm_hz, r.noise_figure_db, r.bandwidth_hz)
                    .unwrap();
            assert_eq!(r.effective_noise_dbm, noise);
            assert_eq!(r.sensitivity_dbm, sensitivity(noise, r.required_sinr_db));
            assert_eq!(r.mcl_db, mcl(r.actual_tx_power_dbm, r.sensitivity_dbm));
        }
    }

    #[test]
    fn ce_table_hits_all_reference_cells() {
        let rows = build_ce_table();
        let expect_noise = [-109.4, -104.7, -104.7];
        let expect_sens = [-123.7, -118.9, -118.9];
        for (i, r) in rows.iter().enumerate() {
            assert!(approx(r.effective_noise_dbm, expect_noise[i], 0.05));
            assert!(approx(r.sensitivity_dbm, expect_sens[i], 0.05));
            assert!(approx(r.mcl_db, 155.7, 0.05));
        }
        assert!(approx(rows[0].mcl_db, rows[1].mcl_db, 0.1));
        assert!(approx(rows[1].mcl_db, rows[2].mcl_db, 0.1));
    }

    #[test]
    fn formatted_table_shows_rounded_mcl() {
        let text = format_table(&build_ce_table());
        assert_eq!(text.matches("155.7").count(), 3);
        assert!(text.contains("-123.7"));
        assert!(text.contains("-118.9"));
    }
}
