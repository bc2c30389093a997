//! Report schema and CSV emission. Everything written here is re-readable by
//! the harness itself (round-trip tested).

use crate::error::Result;
use crate::mlt::{StopReason, TraceRow};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorPair {
    pub e_inf: f64,
    pub e_2: f64,
}

/// Spike statistics of the v output along the y = 1 line (problems without
/// an exact solution report these instead of error norms).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpikeStats {
    pub v_max_start: f64,
    pub v_max_mid: f64,
    pub v_max_end: f64,
    pub growth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelMetrics {
    pub level: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e_inf: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e_2: Option<f64>,
    pub best_loss: f64,
    pub final_loss: f64,
    /// Loss of the previous stack on this level's points before training.
    pub pre_loss: f64,
    /// Relative improvement on this level's own point set (the stop-rule measure).
    pub improvement: f64,
    pub stalled: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub concentration: Option<f64>,
    pub trace_path: String,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool_version: String,
    pub config: super::config::ExperimentConfig,
    pub levels: Vec<LevelMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_metrics: Option<ErrorPair>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spike: Option<SpikeStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop: Option<StopReason>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub wall_ms_total: f64,
}

impl Report {
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut data = serde_json::to_vec_pretty(self)?;
        data.push(b'\n');
        std::fs::write(path, data)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Copy with every wall-time field zeroed (determinism comparisons).
    pub fn without_wall_times(&self) -> Report {
        let mut r = self.clone();
        r.wall_ms_total = 0.0;
        for level in &mut r.levels {
            level.wall_ms = 0.0;
        }
        r
    }
}

pub fn write_points_csv(path: &Path, points: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let dim = points.first().map_or(0, |p| p.len());
    w.write_record((1..=dim).map(|i| format!("x{i}")))?;
    for p in points {
        w.write_record(p.iter().map(|v| format!("{v:.17e}")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_points_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row: std::result::Result<Vec<f64>, _> =
            rec.iter().map(|s| s.parse::<f64>()).collect();
        out.push(row.map_err(|e| crate::error::Error::config(format!("bad csv number: {e}")))?);
    }
    Ok(out)
}

pub fn write_trace_csv(path: &Path, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["epoch", "level", "optimizer", "loss", "grad_norm", "wall_ms"])?;
    for r in rows {
        w.write_record([
            r.epoch.to_string(),
            r.level.to_string(),
            r.optimizer.to_string(),
            format!("{:.17e}", r.loss),
            format!("{:.17e}", r.grad_norm),
            format!("{:.3}", r.wall_ms),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Plot data for heatmap reproduction: coordinates, exact, predicted and
/// absolute error per test point.
pub fn write_heatmap_csv(
    path: &Path,
    points: &[Vec<f64>],
    exact: &[Vec<f64>],
    pred: &[Vec<f64>],
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let dim = points.first().map_or(0, |p| p.len());
    let outs = exact.first().map_or(0, |e| e.len());
    let mut header: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
    for i in 1..=outs {
        header.push(format!("exact{i}"));
    }
    for i in 1..=outs {
        header.push(format!("pred{i}"));
    }
    header.push("abs_err".into());
    w.write_record(&header)?;
    for ((x, e), p) in points.iter().zip(exact).zip(pred) {
        let mut rec: Vec<String> = x.iter().map(|v| format!("{v:.17e}")).collect();
        for v in e {
            rec.push(format!("{v:.17e}"));
        }
        for v in p {
            rec.push(format!("{v:.17e}"));
        }
        let err = e
            .iter()
            .zip(p)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        rec.push(format!("{err:.17e}"));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Sampling diagnostics for one level: pool coordinates, monitor, density and
/// per-point draw counts.
pub fn write_sample_csv<W: std::io::Write>(
    sink: W,
    pool: &[Vec<f64>],
    monitor: &[f64],
    density: &[f64],
    drawn_counts: &[usize],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let dim = pool.first().map_or(0, |p| p.len());
    let mut header: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
    header.extend(["W".into(), "p".into(), "drawn_count".into()]);
    w.write_record(&header)?;
    for (i, x) in pool.iter().enumerate() {
        let mut rec: Vec<String> = x.iter().map(|v| format!("{v:.17e}")).collect();
        rec.push(format!("{:.17e}", monitor[i]));
        rec.push(format!("{:.17e}", density[i]));
        rec.push(drawn_counts[i].to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
