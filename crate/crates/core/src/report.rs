//! Sample and summary file emission.
//!
//! Samples go to CSV with the schema `metric,class,scenario,combination,value`
//! (one sample per line). Summaries are flat JSON documents keyed as
//! `<metric>.<class>.<statistic>` with deterministic key order. CDFs can
//! additionally be dumped as two-column plot data.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Result, SimError};
use crate::stats::{cdf, mean, percentile, EmpiricalCdf};

/// One emitted sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub metric: String,
    pub class: String,
    pub scenario: String,
    pub combination: String,
    pub value: f64,
}

impl SampleRow {
    pub fn new(
        metric: &str,
        class: &str,
        scenario: &str,
        combination: &str,
        value: f64,
    ) -> Self {
        Self {
            metric: metric.into(),
            class: class.into(),
            scenario: scenario.into(),
            combination: combination.into(),
            value,
        }
    }
}

/// Write sample rows as CSV.
pub fn write_samples_csv(path: &Path, rows: &[SampleRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Read sample rows back from CSV.
pub fn read_samples_csv(path: &Path) -> Result<Vec<SampleRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        rows.push(rec?);
    }
    Ok(rows)
}

/// Percentile/mean digest of one sample set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub count: usize,
    pub mean: f64,
    pub p5: f64,
    pub p20: f64,
    pub p50: f64,
    pub p95: f64,
}

impl SummaryStats {
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(SimError::EmptyInput("summary of zero samples".into()));
        }
        let c = cdf(samples, "", "")?;
        Ok(Self {
            count: samples.len(),
            mean: mean(samples),
            p5: percentile(&c, 5.0)?,
            p20: percentile(&c, 20.0)?,
            p50: percentile(&c, 50.0)?,
            p95: percentile(&c, 95.0)?,
        })
    }
}

/// Flat, deterministically ordered summary document.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    #[serde(flatten)]
    pub entries: BTreeMap<String, serde_json::Value>,
}

impl Summary {
    pub fn insert_stats(&mut self, metric: &str, class: &str, stats: &SummaryStats) {
        let prefix = format!("{metric}.{class}");
        self.entries.insert(
            format!("{prefix}.count"),
            serde_json::json!(stats.count),
        );
        self.entries
            .insert(format!("{prefix}.mean"), serde_json::json!(stats.mean));
        self.entries
            .insert(format!("{prefix}.p5"), serde_json::json!(stats.p5));
        self.entries
            .insert(format!("{prefix}.p20"), serde_json::json!(stats.p20));
        self.entries
            .insert(format!("{prefix}.p50"), serde_json::json!(stats.p50));
        self.entries
            .insert(format!("{prefix}.p95"), serde_json::json!(stats.p95));
    }

    pub fn insert_value(&mut self, key: &str, value: serde_json::Value) {
        self.entries.insert(key.to_string(), value);
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, self)?;
        writeln!(w)?;
        Ok(())
    }
}

/// Two-column (value, cumulative probability) plot data.
pub fn write_cdf_plot(path: &Path, cdf: &EmpiricalCdf) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# {} {}", cdf.metric(), cdf.class_label())?;
    for (value, prob) in cdf.points() {
        writeln!(w, "{value} {prob}")?;
    }
    Ok(())
}
