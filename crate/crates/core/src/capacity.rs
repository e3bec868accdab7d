//! Spectral-efficiency formulas for the coupled system and the curve tables
//! behind the efficiency-versus-Eb/N0 plots.
//!
//! The total system SNR is s = alpha/sigma2. Keeping s fixed while the load
//! alpha grows, the modified-SIC receiver's limiting spectral efficiency is
//! alpha * C_biawgn(ln(1+s)/alpha), which climbs to the AWGN capacity
//! (1/2) log2(1+s) as alpha goes to infinity.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::de::{two_stage_max_rate, GridSpec, SystemParams};
use crate::error::{Error, Result};
use crate::exec;
use crate::math::{awgn_capacity_fixed_point, biawgn_capacity, CapacityValue, EbN0, Snr};

// ---------------------------------------------------------------------------
// Scalar formulas
// ---------------------------------------------------------------------------

/// Limiting spectral efficiency of the modified-SIC receiver at load `alpha`
/// and total system SNR `s`: alpha * C_biawgn(ln(1+s)/alpha).
pub fn c_eff(alpha: f64, s: f64) -> Result<CapacityValue> {
    check_alpha_s(alpha, s)?;
    let gamma = Snr::new((1.0 + s).ln() / alpha)?;
    CapacityValue::new(alpha * biawgn_capacity(gamma).bits_per_use())
}

/// SNR per information bit of the same operating point:
/// 1 / (2 * C_biawgn(ln(1+s)/alpha) * sigma2) with sigma2 = alpha/s.
pub fn ebn0_of(alpha: f64, s: f64) -> Result<EbN0> {
    check_alpha_s(alpha, s)?;
    let gamma = Snr::new((1.0 + s).ln() / alpha)?;
    let c = biawgn_capacity(gamma).bits_per_use();
    let sigma2 = alpha / s;
    EbN0::new(1.0 / (2.0 * c * sigma2))
}

/// Rate achievable by the modified-SIC receiver when the per-stream codes
/// leave a wave-speed margin `delta`: the code threshold is the boundary
/// SINR ln((alpha+sigma2)/sigma2)/alpha minus the first-order drop
/// alpha/(sigma2 (alpha+sigma2)) * delta.
pub fn sic_achievable_rate(alpha: f64, sigma2: f64, delta: f64) -> Result<CapacityValue> {
    if !(alpha > 0.0 && sigma2 > 0.0 && delta >= 0.0) {
        return Err(Error::Domain(format!(
            "need alpha > 0, sigma2 > 0, delta >= 0, got ({alpha}, {sigma2}, {delta})"
        )));
    }
    let theta =
        ((alpha + sigma2) / sigma2).ln() / alpha - alpha / (sigma2 * (alpha + sigma2)) * delta;
    if theta <= 0.0 {
        return Err(Error::Domain(format!(
            "margin delta = {delta} drives the code threshold to {theta} <= 0"
        )));
    }
    CapacityValue::new(alpha * biawgn_capacity(Snr::new(theta)?).bits_per_use())
}

fn check_alpha_s(alpha: f64, s: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::Domain(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::Domain(format!(
            "total system SNR s must be positive, got {s}"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

/// Receiver family a curve row belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReceiverKind {
    ModifiedSic,
    TwoStage,
    AwgnCapacity,
}

impl ReceiverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ReceiverKind::ModifiedSic => "modified-sic",
            ReceiverKind::TwoStage => "two-stage",
            ReceiverKind::AwgnCapacity => "awgn-capacity",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "modified-sic" => Ok(ReceiverKind::ModifiedSic),
            "two-stage" => Ok(ReceiverKind::TwoStage),
            "awgn-capacity" => Ok(ReceiverKind::AwgnCapacity),
            other => Err(Error::Parse(format!("unknown receiver kind {other:?}"))),
        }
    }
}

/// Density-evolution settings for the two-stage rows of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoStageOptions {
    pub grid: GridSpec,
    pub max_iter: usize,
    /// Coupling half-window used when the grid is discrete.
    pub w: usize,
}

impl Default for TwoStageOptions {
    fn default() -> Self {
        TwoStageOptions {
            grid: GridSpec::Continuous {
                t_min: -1.0,
                t_max: 30.0,
                dt: 0.01,
            },
            max_iter: 300,
            w: 1,
        }
    }
}

/// Axes of a curve sweep: the loads and total-SNR values to evaluate for one
/// receiver family.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub alphas: Vec<f64>,
    pub s_values: Vec<f64>,
    pub receiver: ReceiverKind,
    pub two_stage: TwoStageOptions,
}

impl SweepSpec {
    pub fn new(alphas: Vec<f64>, s_values: Vec<f64>, receiver: ReceiverKind) -> Result<Self> {
        if alphas.is_empty() {
            return Err(Error::Config("sweep needs at least one alpha".into()));
        }
        if s_values.is_empty() {
            return Err(Error::Config("sweep needs at least one s value".into()));
        }
        if let Some(bad) = alphas
            .iter()
            .chain(&s_values)
            .find(|v| !(**v > 0.0) || !v.is_finite())
        {
            return Err(Error::Config(format!(
                "sweep values must be positive, got {bad}"
            )));
        }
        Ok(SweepSpec {
            alphas,
            s_values,
            receiver,
            two_stage: TwoStageOptions::default(),
        })
    }
}

/// One operating point of a receiver curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub receiver: ReceiverKind,
    pub alpha: f64,
    pub s: f64,
    pub sigma2: f64,
    pub ebn0: EbN0,
    pub spectral_efficiency: CapacityValue,
}

/// Rows backing one or more receiver curves.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CurveTable {
    pub rows: Vec<CurvePoint>,
}

impl CurveTable {
    pub fn merge(mut self, other: CurveTable) -> CurveTable {
        self.rows.extend(other.rows);
        self
    }

    /// Stable export order: (receiver, alpha, ebn0 in dB).
    pub fn sort_for_export(&mut self) {
        self.rows.sort_by(|a, b| {
            (a.receiver.as_str(), a.alpha, a.ebn0.db())
                .partial_cmp(&(b.receiver.as_str(), b.alpha, b.ebn0.db()))
                .expect("curve sort keys are finite")
        });
    }
}

/// Evaluate the requested receiver over the (alpha, s) cross product.
///
/// Modified-SIC rows use the closed-form `c_eff`/`ebn0_of`; AWGN-capacity
/// rows evaluate the capacity fixed point at the same Eb/N0 points; and
/// two-stage rows run the density-evolution rate search. Rows come back
/// sorted by Eb/N0 in dB.
pub fn sweep_curves(spec: &SweepSpec) -> Result<CurveTable> {
    if spec.alphas.is_empty() || spec.s_values.is_empty() {
        return Err(Error::Config("sweep axes must be nonempty".into()));
    }
    let mut pairs = Vec::new();
    for &alpha in &spec.alphas {
        for &s in &spec.s_values {
            pairs.push((alpha, s));
        }
    }
    let rows: Vec<Result<CurvePoint>> = exec::map_indexed(pairs.len(), |i| {
        let (alpha, s) = pairs[i];
        sweep_point(spec, alpha, s)
    });
    let mut table = CurveTable::default();
    for row in rows {
        table.rows.push(row?);
    }
    table.rows.sort_by(|a, b| {
        (a.ebn0.db(), a.alpha, a.s)
            .partial_cmp(&(b.ebn0.db(), b.alpha, b.s))
            .expect("sweep sort keys are finite")
    });
    Ok(table)
}

fn sweep_point(spec: &SweepSpec, alpha: f64, s: f64) -> Result<CurvePoint> {
    let sigma2 = alpha / s;
    match spec.receiver {
        ReceiverKind::ModifiedSic => Ok(CurvePoint {
            receiver: spec.receiver,
            alpha,
            s,
            sigma2,
            ebn0: ebn0_of(alpha, s)?,
            spectral_efficiency: c_eff(alpha, s)?,
        }),
        ReceiverKind::AwgnCapacity => {
            let ebn0 = ebn0_of(alpha, s)?;
            Ok(CurvePoint {
                receiver: spec.receiver,
                alpha,
                s,
                sigma2,
                ebn0,
                spectral_efficiency: awgn_capacity_fixed_point(ebn0),
            })
        }
        ReceiverKind::TwoStage => {
            let params = SystemParams::new(alpha, sigma2, spec.two_stage.w, Snr::INFINITY)?;
            let (eff, theta) =
                two_stage_max_rate(&params, &spec.two_stage.grid, spec.two_stage.max_iter)?;
            let rate = biawgn_capacity(theta).bits_per_use();
            if rate <= 0.0 {
                return Err(Error::Domain(format!(
                    "two-stage receiver supports no positive rate at alpha = {alpha}, s = {s}"
                )));
            }
            Ok(CurvePoint {
                receiver: spec.receiver,
                alpha,
                s,
                sigma2,
                ebn0: EbN0::new(1.0 / (2.0 * rate * sigma2))?,
                spectral_efficiency: eff,
            })
        }
    }
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

pub const CURVE_CSV_HEADER: &str = "receiver,alpha,s,sigma2,ebn0_db,spectral_efficiency";

/// Write the table as CSV in its current row order.
pub fn write_curves_csv<W: Write>(table: &CurveTable, mut out: W) -> Result<()> {
    writeln!(out, "{CURVE_CSV_HEADER}")?;
    for r in &table.rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.receiver.as_str(),
            r.alpha,
            r.s,
            r.sigma2,
            r.ebn0.db(),
            r.spectral_efficiency.bits_per_use()
        )?;
    }
    Ok(())
}

/// Read back a table written by [`write_curves_csv`].
pub fn read_curves_csv<R: BufRead>(input: R) -> Result<CurveTable> {
    let mut lines = input.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != CURVE_CSV_HEADER {
        return Err(Error::Parse("missing curve table header".into()));
    }
    let mut table = CurveTable::default();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(Error::Parse(format!("expected 6 fields, got {}", f.len())));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad float {s:?}: {e}")))
        };
        table.rows.push(CurvePoint {
            receiver: ReceiverKind::parse(f[0])?,
            alpha: num(f[1])?,
            s: num(f[2])?,
            sigma2: num(f[3])?,
            ebn0: EbN0::from_db(num(f[4])?)?,
            spectral_efficiency: CapacityValue::new(num(f[5])?)?,
        });
    }
    Ok(table)
}

#[derive(Serialize, Deserialize)]
struct CurveRowJson {
    receiver: String,
    alpha: f64,
    s: f64,
    sigma2: f64,
    ebn0_db: f64,
    spectral_efficiency: f64,
}

/// JSON mirror of the CSV with identical fields.
pub fn write_curves_json<W: Write>(table: &CurveTable, mut out: W) -> Result<()> {
    let rows: Vec<CurveRowJson> = table
        .rows
        .iter()
        .map(|r| CurveRowJson {
            receiver: r.receiver.as_str().to_string(),
            alpha: r.alpha,
            s: r.s,
            sigma2: r.sigma2,
            ebn0_db: r.ebn0.db(),
            spectral_efficiency: r.spectral_efficiency.bits_per_use(),
        })
        .collect();
    serde_json::to_writer_pretty(&mut out, &rows)
        .map_err(|e| Error::Parse(format!("json encode failed: {e}")))?;
    writeln!(out)?;
    Ok(())
}
