//! Report writers. Everything is plain text (CSV, JSON, PGM) so runs
//! can be diffed and plotted without this codebase. Floats go through
//! Rust's shortest-round-trip formatting: identical numbers produce
//! identical bytes, which is what the reproducibility checks diff.

use std::fmt::Write as _;
use std::path::Path;

use dwenet_core::analysis::{AblationResult, CaseRecord, HeatmapMatrix};
use dwenet_core::train::{Metrics, RunSummary, TrainConfig};

use crate::{config, Result};

/// `config.echo.json`: the fully-resolved config that produced a run.
/// Feeding it back through `--config` reproduces the run bit for bit.
pub fn write_config_echo(path: &Path, cfg: &TrainConfig) -> Result<()> {
    std::fs::write(path, config::config_json(cfg))?;
    Ok(())
}

/// One row per run; aggregates live in `summary.json`, not here.
pub fn write_metrics_csv(path: &Path, summary: &RunSummary) -> Result<()> {
    let mut out = String::from("run,accuracy,precision,recall,f1\n");
    for (run, m) in summary.per_run.iter().enumerate() {
        writeln!(out, "{run},{},{},{},{}", m.accuracy, m.precision, m.recall, m.f1)
            .expect("string write");
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn write_summary_json(path: &Path, summary: &RunSummary) -> Result<()> {
    let mut text = serde_json::to_string_pretty(summary).expect("summary serializes");
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Per-epoch mean training loss for every run, long format.
pub fn write_loss_curves_csv(path: &Path, per_run: &[Metrics]) -> Result<()> {
    let mut out = String::from("run,epoch,loss\n");
    for (run, m) in per_run.iter().enumerate() {
        for (epoch, loss) in m.loss_curve.iter().enumerate() {
            writeln!(out, "{run},{epoch},{loss}").expect("string write");
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Row label for each source group: the block's input planes first,
/// then one group per prior layer feeding the target.
fn heatmap_row_label(row: usize) -> String {
    if row == 0 {
        String::from("input_planes")
    } else {
        format!("layer{row}")
    }
}

/// One CSV line per source group, one column per target channel, plus
/// the group label and how many input channels it spans.
pub fn write_heatmap_csv(path: &Path, map: &HeatmapMatrix) -> Result<()> {
    let mut out = String::from("source,size");
    for c in 0..map.cols {
        write!(out, ",c{c}").expect("string write");
    }
    out.push('\n');
    for (row, &size) in map.group_sizes.iter().enumerate() {
        write!(out, "{},{size}", heatmap_row_label(row)).expect("string write");
        for col in 0..map.cols {
            write!(out, ",{}", map.value(row, col)).expect("string write");
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Pixels per heatmap cell in the PGM rendering.
const CELL: usize = 16;

/// ASCII PGM (P2), bright = strong dependency, with a white separator
/// line under the input-plane row so the block boundary is visible.
pub fn write_heatmap_pgm(path: &Path, map: &HeatmapMatrix) -> Result<()> {
    let width = map.cols * CELL;
    let height = map.rows() * CELL + 1;
    let mut out = format!("P2\n{width} {height}\n255\n");
    let emit_line = |values: &[u8], out: &mut String| {
        let line: Vec<String> = values.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    };
    let mut scanline = vec![0u8; width];
    for row in 0..map.rows() {
        if row == map.boundary_after_row + 1 {
            emit_line(&vec![255u8; width], &mut out);
        }
        for (col, px) in scanline.iter_mut().enumerate() {
            let v = map.value(row, col / CELL);
            *px = (v * 255.0).round().clamp(0.0, 255.0) as u8;
        }
        for _ in 0..CELL {
            emit_line(&scanline, &mut out);
        }
    }
    if map.boundary_after_row + 1 == map.rows() {
        emit_line(&vec![255u8; width], &mut out);
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn write_ablation_csv(path: &Path, results: &[AblationResult]) -> Result<()> {
    let mut out = String::from("cell,accuracy_mean,accuracy_std,f1_mean,f1_std,runs\n");
    for r in results {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.name,
            r.summary.accuracy.mean,
            r.summary.accuracy.std,
            r.summary.f1.mean,
            r.summary.f1.std,
            r.summary.per_run.len()
        )
        .expect("string write");
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Error set differences; texts are free-form, so this one goes through
/// a real CSV writer for quoting.
pub fn write_cases_csv(path: &Path, cases: &[CaseRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(io_from_csv)?;
    w.write_record(["index", "text", "label", "pred_a", "pred_b"])
        .map_err(io_from_csv)?;
    for c in cases {
        w.write_record([
            c.index.to_string(),
            c.text.clone(),
            c.label.to_string(),
            c.pred_a.to_string(),
            c.pred_b.to_string(),
        ])
        .map_err(io_from_csv)?;
    }
    w.flush()?;
    Ok(())
}

fn io_from_csv(e: csv::Error) -> crate::Error {
    crate::Error::Parse(format!("csv write: {e}"))
}
