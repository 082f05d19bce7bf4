//! CSV output.
//!
//! Every report shares the header `scheme,dt,rmse,n_excluded,rate,p_hat,ci,seconds`.
//! Cells that do not apply are empty. Floats use Rust's shortest round-trip
//! formatting, so identical reports serialize to identical bytes. The
//! `rmse` column holds the report's error metric.

use std::io::Write;

use crate::error::Result;
use crate::harness::experiment::{ConvergenceReport, MomentRow, PositivityEstimate};
use crate::harness::timing::ComparisonReport;
use crate::schemes::{PathResult, SchemeId};

pub const HEADER: [&str; 8] = ["scheme", "dt", "rmse", "n_excluded", "rate", "p_hat", "ci", "seconds"];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReportRow {
    pub scheme: String,
    pub dt: Option<f64>,
    pub rmse: Option<f64>,
    pub n_excluded: Option<usize>,
    pub rate: Option<f64>,
    pub p_hat: Option<f64>,
    pub ci: Option<f64>,
    pub seconds: Option<f64>,
}

fn cell<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ReportRow {
    fn record(&self) -> [String; 8] {
        [
            self.scheme.clone(),
            cell(self.dt),
            cell(self.rmse),
            cell(self.n_excluded),
            cell(self.rate),
            cell(self.p_hat),
            cell(self.ci),
            cell(self.seconds),
        ]
    }
}

pub fn write_rows(rows: &[ReportRow], w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(HEADER)?;
    for r in rows {
        out.write_record(r.record())?;
    }
    out.flush()?;
    Ok(())
}

/// One row per `(scheme, dt)` cell, then one summary row per scheme with
/// an empty `dt` carrying the fitted rate.
pub fn convergence_rows(report: &ConvergenceReport) -> Vec<ReportRow> {
    let mut rows: Vec<ReportRow> = report
        .cells
        .iter()
        .map(|c| ReportRow {
            scheme: c.scheme.to_string(),
            dt: Some(c.dt),
            rmse: c.error,
            n_excluded: Some(c.n_excluded),
            p_hat: c.positivity.map(|p| p.p_hat),
            ci: c.positivity.map(|p| p.ci),
            ..ReportRow::default()
        })
        .collect();
    rows.extend(report.summaries.iter().map(|s| ReportRow {
        scheme: s.scheme.to_string(),
        rate: s.rate.map(|r| r.slope),
        seconds: s.seconds,
        ..ReportRow::default()
    }));
    rows
}

pub fn positivity_rows(estimates: &[PositivityEstimate]) -> Vec<ReportRow> {
    estimates
        .iter()
        .map(|p| ReportRow {
            scheme: SchemeId::Tem.to_string(),
            dt: Some(p.dt),
            p_hat: Some(p.p_hat),
            ci: Some(p.ci),
            ..ReportRow::default()
        })
        .collect()
}

pub fn comparison_rows(report: &ComparisonReport) -> Vec<ReportRow> {
    report
        .rows
        .iter()
        .map(|r| ReportRow {
            scheme: r.scheme.to_string(),
            dt: Some(r.dt),
            rmse: r.error,
            n_excluded: Some(r.n_excluded),
            seconds: Some(r.seconds),
            ..ReportRow::default()
        })
        .collect()
}

/// Moment table: `scheme,dt,p,sign,mean,overflow,n_excluded`.
pub fn write_moments(scheme: SchemeId, rows: &[MomentRow], w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["scheme", "dt", "p", "sign", "mean", "overflow", "n_excluded"])?;
    for row in rows {
        for e in &row.estimates {
            out.write_record([
                scheme.to_string(),
                row.dt.to_string(),
                e.p.to_string(),
                e.sign.as_str().to_string(),
                e.mean.to_string(),
                e.overflow.to_string(),
                row.n_excluded.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Trajectories in long format: `path,k,t,x_raw,x_pos`. A blown-up path
/// stops at its last finite state.
pub fn write_paths(paths: &[PathResult], dt: f64, w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["path", "k", "t", "x_raw", "x_pos"])?;
    for (j, p) in paths.iter().enumerate() {
        for (k, s) in p.trajectory.iter().flatten().enumerate() {
            out.write_record([
                j.to_string(),
                k.to_string(),
                (k as f64 * dt).to_string(),
                s.x_raw.to_string(),
                s.x_pos.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}
