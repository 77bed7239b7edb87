//! CSV renderings of evaluation outputs for plotting and spreadsheets.

use std::io::Write;

use serde::Serialize;

use super::{CalibrationReport, EvalError, EvalReport, Metrics, SweepRow, WinRateTable};
use crate::ingest::PiSequence;

#[derive(Serialize)]
struct MetricsRow<'a> {
    grouping: &'a str,
    key: String,
    n_predictions: usize,
    mean_actual: f64,
    mean_predicted: f64,
    mae: f64,
    rmse: f64,
    coverage_pct: f64,
    markov_usage_pct: f64,
}

fn metrics_row<'a>(grouping: &'a str, key: String, m: &Metrics) -> MetricsRow<'a> {
    MetricsRow {
        grouping,
        key,
        n_predictions: m.n_predictions,
        mean_actual: m.mean_actual,
        mean_predicted: m.mean_predicted,
        mae: m.mae,
        rmse: m.rmse,
        coverage_pct: m.coverage_pct,
        markov_usage_pct: m.markov_usage_pct,
    }
}

/// One row per grouping key: global, each phase, each over, each competition.
pub fn write_metrics_csv(report: &EvalReport, w: impl Write) -> Result<(), EvalError> {
    let mut out = csv::Writer::from_writer(w);
    out.serialize(metrics_row("global", "all".into(), &report.global))?;
    for (p, m) in &report.by_phase {
        out.serialize(metrics_row("phase", p.as_str().into(), m))?;
    }
    for (o, m) in &report.by_over {
        out.serialize(metrics_row("over", o.to_string(), m))?;
    }
    for (c, m) in &report.by_competition {
        out.serialize(metrics_row("competition", c.clone(), m))?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct WinRateCsv<'a> {
    group: &'a str,
    lo: f64,
    hi: String,
    home_n: usize,
    home_win_pct: f64,
    away_n: usize,
    away_win_pct: f64,
    delta: f64,
}

pub fn write_win_rates_csv(table: &WinRateTable, w: impl Write) -> Result<(), EvalError> {
    let mut out = csv::Writer::from_writer(w);
    for r in &table.rows {
        out.serialize(WinRateCsv {
            group: &r.group,
            lo: r.bin.lo,
            hi: r.bin.format_upper(),
            home_n: r.home_n,
            home_win_pct: r.home_win_pct,
            away_n: r.away_n,
            away_win_pct: r.away_win_pct,
            delta: r.delta,
        })?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_calibration_csv(report: &CalibrationReport, w: impl Write) -> Result<(), EvalError> {
    let mut out = csv::Writer::from_writer(w);
    for b in &report.bins {
        out.serialize(b)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_sweep_csv(rows: &[SweepRow], w: impl Write) -> Result<(), EvalError> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct CurvePoint<'a> {
    match_id: &'a str,
    over: u32,
    pi: f64,
    wickets: u8,
    wicket_fell: bool,
}

/// Long-format pressure curves: one row per match and over, with the
/// overs in which wickets fell flagged.
pub fn write_pressure_curves_csv(seqs: &[PiSequence], w: impl Write) -> Result<(), EvalError> {
    let mut out = csv::Writer::from_writer(w);
    for s in seqs {
        let mut prev = 0;
        for (i, &v) in s.values.iter().enumerate() {
            let wk = s.wickets.get(i).copied().unwrap_or(prev);
            out.serialize(CurvePoint {
                match_id: &s.match_id,
                over: i as u32 + 1,
                pi: v,
                wickets: wk,
                wicket_fell: wk > prev,
            })?;
            prev = wk;
        }
    }
    out.flush()?;
    Ok(())
}
