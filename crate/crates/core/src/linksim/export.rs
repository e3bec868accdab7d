//! Link-simulation result files: a JSON report per run and a CSV table
//! comparing the measured per-slot variances against discrete density
//! evolution at the same operating point.

use std::io::{BufRead, Write};

use crate::de::{run_de, GridSpec, ReceiverMode, SystemParams};
use crate::error::{Error, Result};
use crate::math::Snr;

use super::{LinkSimConfig, LinkSimReport};

/// One row of the density-evolution comparison table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeComparisonRow {
    pub iteration: usize,
    pub slot: usize,
    pub x_sim: f64,
    pub x_de: f64,
    pub rel_err: f64,
}

/// Predicted per-slot variances from discrete density evolution at the
/// simulator's operating point, one row per recorded iteration. Slot u of
/// the simulation corresponds to discrete time t = u + 1.
pub fn de_prediction(
    cfg: &LinkSimConfig,
    mode: ReceiverMode,
    theta: Snr,
    iterations: usize,
) -> Result<Vec<Vec<f64>>> {
    if cfg.sigma2 <= 0.0 {
        return Err(Error::Config("density evolution needs sigma2 > 0".into()));
    }
    let params = SystemParams::new(cfg.alpha(), cfg.sigma2, cfg.w, theta)?;
    let traj = run_de(
        &params,
        mode,
        &GridSpec::Discrete { t_max: cfg.n_slots },
        iterations,
    )?;
    Ok(traj
        .profiles
        .iter()
        .map(|p| p.x().expect("recorded profiles carry x").to_vec())
        .collect())
}

/// Pair the (possibly seed-averaged) measured variances with the prediction.
pub fn de_comparison(x_sim: &[Vec<f64>], x_de: &[Vec<f64>]) -> Vec<DeComparisonRow> {
    let mut rows = Vec::new();
    for (i, (sim, de)) in x_sim.iter().zip(x_de).enumerate() {
        for (u, (&xs, &xd)) in sim.iter().zip(de).enumerate() {
            rows.push(DeComparisonRow {
                iteration: i,
                slot: u,
                x_sim: xs,
                x_de: xd,
                rel_err: (xs - xd).abs() / xd,
            });
        }
    }
    rows
}

pub const DE_COMPARISON_HEADER: &str = "iteration,slot,x_sim,x_de,rel_err";

pub fn write_de_comparison_csv<W: Write>(rows: &[DeComparisonRow], mut out: W) -> Result<()> {
    writeln!(out, "{DE_COMPARISON_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.iteration, r.slot, r.x_sim, r.x_de, r.rel_err
        )?;
    }
    Ok(())
}

pub fn read_de_comparison_csv<R: BufRead>(input: R) -> Result<Vec<DeComparisonRow>> {
    let mut lines = input.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != DE_COMPARISON_HEADER {
        return Err(Error::Parse("missing comparison header".into()));
    }
    let mut rows = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(Error::Parse(format!("expected 5 fields, got {}", f.len())));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad float {s:?}: {e}")))
        };
        rows.push(DeComparisonRow {
            iteration: f[0]
                .parse()
                .map_err(|e| Error::Parse(format!("bad iteration: {e}")))?,
            slot: f[1]
                .parse()
                .map_err(|e| Error::Parse(format!("bad slot: {e}")))?,
            x_sim: num(f[2])?,
            x_de: num(f[3])?,
            rel_err: num(f[4])?,
        });
    }
    Ok(rows)
}

/// Write the JSON report of one run (or of a seed-averaged aggregate).
pub fn write_report_json<W: Write>(report: &LinkSimReport, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, report)
        .map_err(|e| Error::Parse(format!("json encode failed: {e}")))?;
    writeln!(out)?;
    Ok(())
}
