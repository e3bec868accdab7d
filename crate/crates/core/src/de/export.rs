//! Trajectory serialization: CSV of (iteration, t, x, z) rows with the
//! literal string "inf" for infinite SINRs, and a JSON summary with the
//! front positions and speeds per iteration.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::DeTrajectory;

/// One flattened trajectory row, as written to CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub iteration: usize,
    pub t: f64,
    pub x: f64,
    pub z: f64,
}

fn fmt_f64(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_string()
    } else {
        // Shortest representation that parses back to the identical double.
        format!("{v}")
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    match s {
        "inf" => Ok(f64::INFINITY),
        other => other
            .parse::<f64>()
            .map_err(|e| Error::Parse(format!("bad float {other:?}: {e}"))),
    }
}

/// Write the full trajectory as CSV with header `iteration,t,x,z`.
pub fn write_trajectory_csv<W: Write>(traj: &DeTrajectory, mut out: W) -> Result<()> {
    writeln!(out, "iteration,t,x,z")?;
    for prof in &traj.profiles {
        let x = prof
            .x()
            .ok_or_else(|| Error::Invariant("recorded profile lacks a variance".into()))?;
        for k in 0..prof.len() {
            writeln!(
                out,
                "{},{},{},{}",
                prof.iteration(),
                fmt_f64(prof.grid().time(k)),
                fmt_f64(x[k]),
                fmt_f64(prof.z()[k])
            )?;
        }
    }
    Ok(())
}

/// Read back rows produced by [`write_trajectory_csv`].
pub fn read_trajectory_csv<R: BufRead>(input: R) -> Result<Vec<TrajectoryRow>> {
    let mut lines = input.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != "iteration,t,x,z" {
        return Err(Error::Parse("missing trajectory header".into()));
    }
    let mut rows = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 4 {
            return Err(Error::Parse(format!(
                "expected 4 fields, got {}",
                parts.len()
            )));
        }
        rows.push(TrajectoryRow {
            iteration: parts[0]
                .parse()
                .map_err(|e| Error::Parse(format!("bad iteration: {e}")))?,
            t: parse_f64(parts[1])?,
            x: parse_f64(parts[2])?,
            z: parse_f64(parts[3])?,
        });
    }
    Ok(rows)
}

/// Per-run summary mirrored to JSON.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TrajectorySummary {
    pub iterations: usize,
    pub converged: bool,
    pub stalled: bool,
    /// Front position per iteration; `null` when nothing is decoded yet.
    pub front: Vec<Option<f64>>,
    /// Front displacement per iteration.
    pub speed: Vec<f64>,
}

impl TrajectorySummary {
    pub fn of(traj: &DeTrajectory) -> Self {
        TrajectorySummary {
            iterations: traj.iterations(),
            converged: traj.converged,
            stalled: traj.stalled,
            front: traj.front.clone(),
            speed: traj.speed.clone(),
        }
    }
}

/// Write the JSON summary of a run.
pub fn write_summary_json<W: Write>(traj: &DeTrajectory, mut out: W) -> Result<()> {
    let summary = TrajectorySummary::of(traj);
    serde_json::to_writer_pretty(&mut out, &summary)
        .map_err(|e| Error::Parse(format!("json encode failed: {e}")))?;
    writeln!(out)?;
    Ok(())
}
