//! CSV and text artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use gkdv_core::driver::{RunState, Snapshot, StepRecord};
use gkdv_core::study::ConvergenceReport;
use gkdv_core::{Mesh, StateVector};

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))
}

/// Creates `dir` if needed.
pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))
}

/// `t,x,u` rows at the DOF nodes plus the closing endpoint `b`.
pub fn write_profile(path: &Path, mesh: &Mesh, snap: &Snapshot) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["t", "x", "u"])?;
    let rows = mesh
        .dof_coords()
        .iter()
        .copied()
        .zip(snap.u.iter().copied());
    let closing = std::iter::once((mesh.right(), snap.u[0]));
    for (x, u) in rows.chain(closing) {
        w.write_record([fmt(snap.t), fmt(x), fmt(u)])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a profile back as a snapshot, dropping the closing endpoint row.
pub fn read_profile(path: &Path) -> Result<Snapshot> {
    let mut r =
        csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut t = None;
    let mut u = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let f = |i: usize| -> Result<f64> { Ok(rec.get(i).unwrap_or("").parse()?) };
        t.get_or_insert(f(0)?);
        u.push(f(2)?);
    }
    let t = t.with_context(|| format!("{} has no rows", path.display()))?;
    u.pop();
    Ok(Snapshot {
        t,
        u: StateVector::new(u),
    })
}

/// Writes one profile file per snapshot, named by index; returns the paths.
pub fn write_profiles(dir: &Path, mesh: &Mesh, snaps: &[Snapshot]) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::with_capacity(snaps.len());
    for (k, s) in snaps.iter().enumerate() {
        let p = dir.join(format!("profile_{k:04}.csv"));
        write_profile(&p, mesh, s)?;
        paths.push(p);
    }
    Ok(paths)
}

/// `t,mass,l2,tau` rows, one per accepted step plus the initial state.
pub fn write_diagnostics(path: &Path, records: &[StepRecord]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["t", "mass", "l2", "tau"])?;
    for r in records {
        w.write_record([fmt(r.t), fmt(r.mass), fmt(r.l2), fmt(r.tau)])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a diagnostics file back.
pub fn read_diagnostics(path: &Path) -> Result<Vec<StepRecord>> {
    let mut r =
        csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let f = |i: usize| -> Result<f64> { Ok(rec.get(i).unwrap_or("").parse()?) };
        out.push(StepRecord {
            t: f(0)?,
            mass: f(1)?,
            l2: f(2)?,
            tau: f(3)?,
        });
    }
    Ok(out)
}

/// `dofs,cells,error,rate,steps`; the first rate is empty.
pub fn write_convergence_csv(path: &Path, report: &ConvergenceReport) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["dofs", "cells", "error", "rate", "steps"])?;
    for r in &report.rows {
        w.write_record([
            r.reported_dofs.to_string(),
            r.num_cells.to_string(),
            fmt(r.error),
            r.rate.map(fmt).unwrap_or_default(),
            r.steps.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Aligned table in the layout of a printed convergence table.
pub fn convergence_table(report: &ConvergenceReport) -> String {
    let mut s = format!(
        "{} / {} / P{} / cfl {} / T {}\n{:>8}  {:>10}  {:>6}\n",
        report.scenario,
        report.scheme,
        report.degree,
        report.cfl,
        report.t_final,
        "#Dofs",
        "err_inf(T)",
        "rate"
    );
    for r in &report.rows {
        let rate = r
            .rate
            .map(|v| format!("{v:.2}"))
            .unwrap_or_else(|| "--".into());
        s.push_str(&format!(
            "{:>8}  {:>10.2E}  {:>6}\n",
            r.reported_dofs, r.error, rate
        ));
    }
    if let Some(f) = &report.failure {
        s.push_str(&format!("INCOMPLETE: {f}\n"));
    }
    s
}

/// Largest relative mass change between consecutive records, measured
/// against `Σ m_i |U_i|` of the initial state.
pub fn diagnostics_mass_drift(records: &[StepRecord], scale: f64) -> f64 {
    let m0 = records.first().map_or(0.0, |r| r.mass);
    records
        .iter()
        .map(|r| (r.mass - m0).abs())
        .fold(0.0, f64::max)
        / scale
}

/// Shortest text that parses back to the same `f64`.
fn fmt(v: f64) -> String {
    format!("{v:?}")
}

/// Final-state summary line.
pub fn summary(state: &RunState) -> String {
    format!("t = {:?}, steps = {}", state.t, state.step_index)
}
