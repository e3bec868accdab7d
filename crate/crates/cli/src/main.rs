//! `sgmod` — command-line driver for the sparse-graph modulation toolkit.
//!
//! Subcommands: `de` (density evolution, two-stage PIC by default), `sic`
//! (density evolution in modified-SIC mode), `linksim` (Monte Carlo link
//! simulation), `capacity` (scalar capacity values), and `sweep` (receiver
//! curves over load and total SNR).
//!
//! Every parameter can also come from a `--config` file with one section
//! per subcommand; command-line flags take precedence. Results are written
//! as CSV or JSON; a one-line summary goes to standard output. Exit codes:
//! 0 success, 2 usage error, 1 runtime error.

mod config_file;

use std::fmt::Display;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use sgmod_core::capacity::{
    sweep_curves, write_curves_csv, write_curves_json, CurveTable, ReceiverKind, SweepSpec,
};
use sgmod_core::de::{
    export as de_export, run_de, DeTrajectory, GridSpec, ReceiverMode, SystemParams,
};
use sgmod_core::linksim::{export as ls_export, mean_xhat, run_trials, LinkSimConfig};
use sgmod_core::math::{
    awgn_capacity_fixed_point, biawgn_capacity, biawgn_capacity_inverse, CapacityValue, EbN0, Snr,
};

use config_file::{ConfigFile, Section};

#[derive(Parser)]
#[command(
    name = "sgmod",
    version,
    about = "Density evolution, capacity analysis, and link simulation for spatially coupled sparse-graph modulation",
    arg_required_else_help = true
)]
struct Cli {
    /// Configuration file with one `[section]` per subcommand; flags override
    /// file values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run density evolution (two-stage PIC unless --mode sic).
    De(DeArgs),
    /// Run density evolution in modified-SIC mode.
    Sic(DeArgs),
    /// Run the Monte Carlo link-level simulator.
    Linksim(LinksimArgs),
    /// Evaluate scalar capacity quantities.
    Capacity(CapacityArgs),
    /// Sweep receiver curves over load and total system SNR.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct DeArgs {
    /// System load alpha = K/N (required).
    #[arg(long)]
    alpha: Option<f64>,
    /// Noise power sigma^2 (required).
    #[arg(long)]
    sigma2: Option<f64>,
    /// Code threshold theta; accepts `inf` (required).
    #[arg(long)]
    theta: Option<String>,
    /// Coupling half-window W, discrete model only (default: 1).
    #[arg(long)]
    w: Option<usize>,
    /// Receiver iteration model: `pic` or `sic` (default: pic; the `sic`
    /// subcommand forces sic).
    #[arg(long)]
    mode: Option<String>,
    /// Evolution model: `continuous` or `discrete` (default: continuous).
    #[arg(long)]
    model: Option<String>,
    /// Left edge of the continuous grid (default: -1).
    #[arg(long)]
    t_min: Option<f64>,
    /// Right edge of the grid (default: 40; whole slots for the discrete
    /// model).
    #[arg(long)]
    t_max: Option<f64>,
    /// Continuous grid spacing; must divide 0.5 (default: 0.001).
    #[arg(long)]
    dt: Option<f64>,
    /// Iteration cap (default: 50).
    #[arg(long)]
    max_iter: Option<usize>,
    /// Output file (default: `$SGMOD_OUT_DIR/<command>.<format>`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format: `csv` (full trajectory) or `json` (front/speed
    /// summary) (default: csv).
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args)]
struct LinksimArgs {
    /// Signal dimensions per channel use N (default: 200).
    #[arg(long)]
    n_dims: Option<usize>,
    /// Replicas per bit M (default: 16).
    #[arg(long)]
    m_substreams: Option<usize>,
    /// Total data streams K; divisible by 2W+1 (default: 200).
    #[arg(long)]
    k_streams: Option<usize>,
    /// Coupling half-window W (default: 2).
    #[arg(long)]
    w: Option<usize>,
    /// Bits per packet L; divisible by 2W+1 (default: 100).
    #[arg(long)]
    l_bits: Option<usize>,
    /// Simulated slots (default: 20).
    #[arg(long)]
    slots: Option<usize>,
    /// Noise power per dimension (default: 1).
    #[arg(long)]
    sigma2: Option<f64>,
    /// Per-stream power P (default: 1).
    #[arg(long)]
    power: Option<f64>,
    /// Base seed (default: 1).
    #[arg(long)]
    seed: Option<u64>,
    /// Number of independent trials with consecutive seeds (default: 1).
    #[arg(long)]
    seeds: Option<usize>,
    /// Cancellation iterations (default: 5).
    #[arg(long)]
    iterations: Option<usize>,
    /// Receiver: `pic` or `sic` (default: pic).
    #[arg(long)]
    mode: Option<String>,
    /// Code threshold for sic mode; accepts `inf`.
    #[arg(long)]
    theta: Option<String>,
    /// Output file (default: `$SGMOD_OUT_DIR/linksim.<format>`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format: `json` (per-run report) or `csv` (comparison against
    /// discrete density evolution) (default: json).
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args)]
struct CapacityArgs {
    /// SNR for the binary-input AWGN capacity.
    #[arg(long)]
    gamma: Option<f64>,
    /// Rate in [0, 1) for the inverse capacity.
    #[arg(long)]
    rate: Option<f64>,
    /// Eb/N0 (linear) for the AWGN capacity fixed point.
    #[arg(long)]
    ebn0: Option<f64>,
    /// Eb/N0 in dB for the AWGN capacity fixed point.
    #[arg(long)]
    ebn0_db: Option<f64>,
    /// Load for the spectral-efficiency formulas (with --s).
    #[arg(long)]
    alpha: Option<f64>,
    /// Total system SNR s = alpha/sigma2 (with --alpha).
    #[arg(long)]
    s: Option<f64>,
    /// Noise power for the wave-margin rate (with --alpha and --delta).
    #[arg(long)]
    sigma2: Option<f64>,
    /// Wave-speed margin delta for the achievable SIC rate.
    #[arg(long)]
    delta: Option<f64>,
    /// Output file (default: `$SGMOD_OUT_DIR/capacity.<format>`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format: `json` or `csv` (default: json).
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated loads, e.g. `10,100,500` (required).
    #[arg(long)]
    alphas: Option<String>,
    /// Comma-separated total-SNR values; overrides the log-spaced grid.
    #[arg(long)]
    s_values: Option<String>,
    /// Smallest s of the log-spaced grid (default: 0.1).
    #[arg(long)]
    s_min: Option<f64>,
    /// Largest s of the log-spaced grid (default: 30).
    #[arg(long)]
    s_max: Option<f64>,
    /// Number of log-spaced s points (default: 25).
    #[arg(long)]
    s_points: Option<usize>,
    /// Comma-separated receivers: modified-sic, two-stage, awgn-capacity
    /// (default: modified-sic,awgn-capacity).
    #[arg(long)]
    receivers: Option<String>,
    /// Grid spacing for two-stage density evolution (default: 0.01).
    #[arg(long)]
    dt: Option<f64>,
    /// Grid extent for two-stage density evolution (default: 30).
    #[arg(long)]
    t_max: Option<f64>,
    /// Iteration cap for two-stage density evolution (default: 300).
    #[arg(long)]
    max_iter: Option<usize>,
    /// Output file (default: `$SGMOD_OUT_DIR/sweep.<format>`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format: `csv` or `json` (default: csv).
    #[arg(long)]
    format: Option<String>,
}

// ---------------------------------------------------------------------------
// Error handling
// ---------------------------------------------------------------------------

enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

fn usage<S: Into<String>>(m: S) -> CliError {
    CliError::Usage(m.into())
}

impl From<sgmod_core::Error> for CliError {
    fn from(e: sgmod_core::Error) -> Self {
        match e {
            sgmod_core::Error::Domain(m) | sgmod_core::Error::Config(m) => CliError::Usage(m),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

// ---------------------------------------------------------------------------
// Parameter resolution (flag > config file > default)
// ---------------------------------------------------------------------------

fn resolve<T: FromStr>(
    flag: Option<T>,
    section: &mut Section,
    key: &str,
) -> Result<Option<T>, CliError>
where
    T::Err: Display,
{
    if flag.is_some() {
        let _ = section.get_string(key); // flag overrides; mark as consumed
        return Ok(flag);
    }
    section.get::<T>(key).map_err(usage)
}

fn resolve_or<T: FromStr>(
    flag: Option<T>,
    section: &mut Section,
    key: &str,
    default: T,
) -> Result<T, CliError>
where
    T::Err: Display,
{
    Ok(resolve(flag, section, key)?.unwrap_or(default))
}

fn require<T>(value: Option<T>, key: &str) -> Result<T, CliError> {
    value.ok_or_else(|| {
        usage(format!(
            "missing required parameter `{key}` (flag --{key} or config key {key})"
        ))
    })
}

fn parse_theta(raw: &str) -> Result<Snr, CliError> {
    match raw.trim() {
        "inf" | "+inf" | "infinity" => Ok(Snr::INFINITY),
        other => {
            let v: f64 = other
                .parse()
                .map_err(|e| usage(format!("theta: invalid value {other:?} ({e})")))?;
            Snr::new(v).map_err(CliError::from)
        }
    }
}

fn parse_mode(raw: &str) -> Result<ReceiverMode, CliError> {
    match raw {
        "pic" | "two-stage" => Ok(ReceiverMode::TwoStagePic),
        "sic" | "modified-sic" => Ok(ReceiverMode::ModifiedSic),
        other => Err(usage(format!(
            "mode: expected `pic` or `sic`, got {other:?}"
        ))),
    }
}

fn parse_f64_list(raw: &str, key: &str) -> Result<Vec<f64>, CliError> {
    raw.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|e| usage(format!("{key}: invalid entry {p:?} ({e})")))
        })
        .collect()
}

fn out_path(requested: Option<PathBuf>, stem: &str, ext: &str) -> PathBuf {
    requested.unwrap_or_else(|| {
        let dir = std::env::var_os("SGMOD_OUT_DIR")
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("."));
        dir.join(format!("{stem}.{ext}"))
    })
}

fn write_file<F>(path: &PathBuf, write: F) -> Result<(), CliError>
where
    F: FnOnce(&mut dyn std::io::Write) -> sgmod_core::Result<()>,
{
    let mut file = fs::File::create(path)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    write(&mut file).map_err(|e| CliError::Runtime(format!("writing {}: {e}", path.display())))
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn run_de_command(args: DeArgs, mut sec: Section, forced_sic: bool) -> Result<(), CliError> {
    let alpha = require(resolve(args.alpha, &mut sec, "alpha")?, "alpha")?;
    let sigma2 = require(resolve(args.sigma2, &mut sec, "sigma2")?, "sigma2")?;
    let theta_raw = require(resolve(args.theta, &mut sec, "theta")?, "theta")?;
    let theta = parse_theta(&theta_raw)?;
    let w = resolve_or(args.w, &mut sec, "w", 1)?;
    let mode = if forced_sic {
        let _ = sec.get_string("mode");
        ReceiverMode::ModifiedSic
    } else {
        parse_mode(&resolve_or(args.mode, &mut sec, "mode", "pic".into())?)?
    };
    let model = resolve_or(args.model, &mut sec, "model", "continuous".into())?;
    let t_min = resolve_or(args.t_min, &mut sec, "t-min", -1.0)?;
    let t_max = resolve_or(args.t_max, &mut sec, "t-max", 40.0)?;
    let dt = resolve_or(args.dt, &mut sec, "dt", 1e-3)?;
    let max_iter = resolve_or(args.max_iter, &mut sec, "max-iter", 50)?;
    let format = resolve_or(args.format, &mut sec, "format", "csv".into())?;
    let out = resolve(args.out, &mut sec, "out")?;
    sec.reject_unknown().map_err(usage)?;

    let grid = match model.as_str() {
        "continuous" => GridSpec::Continuous { t_min, t_max, dt },
        "discrete" => {
            if t_max.fract() != 0.0 || t_max < 1.0 {
                return Err(usage(format!(
                    "t-max: discrete model needs a positive whole number of slots, got {t_max}"
                )));
            }
            GridSpec::Discrete {
                t_max: t_max as usize,
            }
        }
        other => {
            return Err(usage(format!(
                "model: expected `continuous` or `discrete`, got {other:?}"
            )))
        }
    };
    let params = SystemParams::new(alpha, sigma2, w, theta)?;
    let traj = run_de(&params, mode, &grid, max_iter)?;

    let path = emit_trajectory(&traj, &format, out)?;
    let front = traj.front.last().copied().flatten();
    let speed = traj.speed.last().copied().unwrap_or(0.0);
    println!(
        "de: mode={} iterations={} converged={} stalled={} front={} speed={:.6} -> {}",
        if mode == ReceiverMode::ModifiedSic {
            "sic"
        } else {
            "pic"
        },
        traj.iterations(),
        traj.converged,
        traj.stalled,
        front.map_or("none".to_string(), |f| format!("{f:.4}")),
        speed,
        path.display()
    );
    Ok(())
}

fn emit_trajectory(
    traj: &DeTrajectory,
    format: &str,
    out: Option<PathBuf>,
) -> Result<PathBuf, CliError> {
    match format {
        "csv" => {
            let path = out_path(out, "de", "csv");
            write_file(&path, |w| de_export::write_trajectory_csv(traj, w))?;
            Ok(path)
        }
        "json" => {
            let path = out_path(out, "de", "json");
            write_file(&path, |w| de_export::write_summary_json(traj, w))?;
            Ok(path)
        }
        other => Err(usage(format!(
            "format: expected `csv` or `json`, got {other:?}"
        ))),
    }
}

fn run_linksim_command(args: LinksimArgs, mut sec: Section) -> Result<(), CliError> {
    let cfg = LinkSimConfig {
        n_dims: resolve_or(args.n_dims, &mut sec, "n-dims", 200)?,
        m_substreams: resolve_or(args.m_substreams, &mut sec, "m-substreams", 16)?,
        k_streams: resolve_or(args.k_streams, &mut sec, "k-streams", 200)?,
        w: resolve_or(args.w, &mut sec, "w", 2)?,
        l_bits: resolve_or(args.l_bits, &mut sec, "l-bits", 100)?,
        n_slots: resolve_or(args.slots, &mut sec, "slots", 20)?,
        sigma2: resolve_or(args.sigma2, &mut sec, "sigma2", 1.0)?,
        power: resolve_or(args.power, &mut sec, "power", 1.0)?,
        seed: resolve_or(args.seed, &mut sec, "seed", 1)?,
        iterations: resolve_or(args.iterations, &mut sec, "iterations", 5)?,
    };
    let n_trials = resolve_or(args.seeds, &mut sec, "seeds", 1)?;
    let mode = parse_mode(&resolve_or(args.mode, &mut sec, "mode", "pic".into())?)?;
    let theta = match resolve(args.theta, &mut sec, "theta")? {
        Some(raw) => parse_theta(&raw)?,
        None if mode == ReceiverMode::ModifiedSic => {
            return Err(usage("missing required parameter `theta` (sic mode)"));
        }
        None => Snr::INFINITY,
    };
    let format = resolve_or(args.format, &mut sec, "format", "json".into())?;
    let out = resolve(args.out, &mut sec, "out")?;
    sec.reject_unknown().map_err(usage)?;

    if n_trials == 0 {
        return Err(usage("seeds: need at least one trial"));
    }
    let seeds: Vec<u64> = (0..n_trials as u64).map(|i| cfg.seed + i).collect();
    let reports = run_trials(&cfg, &seeds, mode, theta)?;
    let sim_x = mean_xhat(&reports);

    let de_stat = if cfg.sigma2 > 0.0 {
        let de = ls_export::de_prediction(&cfg, mode, theta, cfg.iterations)?;
        let rows = ls_export::de_comparison(&sim_x, &de);
        let worst = rows
            .iter()
            .filter(|r| r.iteration > 0)
            .map(|r| r.rel_err)
            .fold(0.0f64, f64::max);
        Some((de, rows, worst))
    } else {
        None
    };

    let path = match format.as_str() {
        "json" => {
            let path = out_path(out, "linksim", "json");
            write_file(&path, |w| {
                if reports.len() == 1 {
                    ls_export::write_report_json(&reports[0], w)
                } else {
                    serde_json::to_writer_pretty(&mut *w, &reports).map_err(|e| {
                        sgmod_core::Error::Parse(format!("json encode failed: {e}"))
                    })?;
                    writeln!(w).map_err(sgmod_core::Error::from)
                }
            })?;
            path
        }
        "csv" => {
            let Some((_, rows, _)) = &de_stat else {
                return Err(usage(
                    "csv output compares against density evolution, which needs sigma2 > 0",
                ));
            };
            let path = out_path(out, "linksim", "csv");
            write_file(&path, |w| ls_export::write_de_comparison_csv(rows, w))?;
            path
        }
        other => {
            return Err(usage(format!(
                "format: expected `csv` or `json`, got {other:?}"
            )))
        }
    };

    let agreement = de_stat.as_ref().map_or("n/a".to_string(), |(_, _, worst)| {
        format!("{:.2}%", worst * 100.0)
    });
    println!(
        "linksim: seeds={} iterations={} alpha={:.3} decoded={} max|x/x_de - 1|={} -> {}",
        reports.len(),
        cfg.iterations,
        cfg.alpha(),
        reports[0].decoded.iter().map(|d| d.len()).sum::<usize>(),
        agreement,
        path.display()
    );
    Ok(())
}

fn run_capacity_command(args: CapacityArgs, mut sec: Section) -> Result<(), CliError> {
    let gamma = resolve(args.gamma, &mut sec, "gamma")?;
    let rate = resolve(args.rate, &mut sec, "rate")?;
    let ebn0 = resolve(args.ebn0, &mut sec, "ebn0")?;
    let ebn0_db = resolve(args.ebn0_db, &mut sec, "ebn0-db")?;
    let alpha = resolve(args.alpha, &mut sec, "alpha")?;
    let s = resolve(args.s, &mut sec, "s")?;
    let sigma2 = resolve(args.sigma2, &mut sec, "sigma2")?;
    let delta = resolve(args.delta, &mut sec, "delta")?;
    let format = resolve_or(args.format, &mut sec, "format", "json".into())?;
    let out = resolve(args.out, &mut sec, "out")?;
    sec.reject_unknown().map_err(usage)?;

    let mut results: Vec<(&'static str, f64)> = Vec::new();
    if let Some(g) = gamma {
        let c = biawgn_capacity(Snr::new(g)?);
        results.push(("biawgn_capacity", c.bits_per_use()));
    }
    if let Some(r) = rate {
        let g = biawgn_capacity_inverse(CapacityValue::new(r)?)?;
        results.push(("biawgn_capacity_inverse", g.value()));
    }
    let eb = match (ebn0, ebn0_db) {
        (Some(_), Some(_)) => return Err(usage("give either `ebn0` or `ebn0-db`, not both")),
        (Some(v), None) => Some(EbN0::new(v)?),
        (None, Some(db)) => Some(EbN0::from_db(db)?),
        (None, None) => None,
    };
    if let Some(e) = eb {
        results.push(("awgn_capacity", awgn_capacity_fixed_point(e).bits_per_use()));
    }
    if let (Some(a), Some(sv)) = (alpha, s) {
        results.push(("c_eff", sgmod_core::capacity::c_eff(a, sv)?.bits_per_use()));
        let e = sgmod_core::capacity::ebn0_of(a, sv)?;
        results.push(("ebn0", e.ratio()));
        results.push(("ebn0_db", e.db()));
    }
    if let Some(d) = delta {
        let a = require(alpha, "alpha")?;
        let s2 = require(sigma2, "sigma2")?;
        let r = sgmod_core::capacity::sic_achievable_rate(a, s2, d)?;
        results.push(("sic_achievable_rate", r.bits_per_use()));
    }
    if results.is_empty() {
        return Err(usage(
            "nothing to compute: give at least one of gamma, rate, ebn0, ebn0-db, alpha+s, or alpha+sigma2+delta",
        ));
    }

    let path = match format.as_str() {
        "json" => {
            let path = out_path(out, "capacity", "json");
            let obj: serde_json::Map<String, serde_json::Value> = results
                .iter()
                .map(|(k, v)| (k.to_string(), serde_json::json!(v)))
                .collect();
            write_file(&path, |w| {
                serde_json::to_writer_pretty(&mut *w, &obj)
                    .map_err(|e| sgmod_core::Error::Parse(format!("json encode failed: {e}")))?;
                writeln!(w).map_err(sgmod_core::Error::from)
            })?;
            path
        }
        "csv" => {
            let path = out_path(out, "capacity", "csv");
            write_file(&path, |w| {
                writeln!(w, "quantity,value")?;
                for (k, v) in &results {
                    writeln!(w, "{k},{v}")?;
                }
                Ok(())
            })?;
            path
        }
        other => {
            return Err(usage(format!(
                "format: expected `csv` or `json`, got {other:?}"
            )))
        }
    };

    let summary: Vec<String> = results.iter().map(|(k, v)| format!("{k}={v:.9}")).collect();
    println!("capacity: {} -> {}", summary.join(" "), path.display());
    Ok(())
}

fn run_sweep_command(args: SweepArgs, mut sec: Section) -> Result<(), CliError> {
    let alphas_raw = require(resolve(args.alphas, &mut sec, "alphas")?, "alphas")?;
    let alphas = parse_f64_list(&alphas_raw, "alphas")?;
    let s_values = match resolve(args.s_values, &mut sec, "s-values")? {
        Some(raw) => parse_f64_list(&raw, "s-values")?,
        None => {
            let s_min = resolve_or(args.s_min, &mut sec, "s-min", 0.1)?;
            let s_max = resolve_or(args.s_max, &mut sec, "s-max", 30.0)?;
            let n = resolve_or(args.s_points, &mut sec, "s-points", 25)?;
            if !(s_min > 0.0 && s_max > s_min && n >= 2) {
                return Err(usage(format!(
                    "need 0 < s-min < s-max and s-points >= 2, got {s_min}, {s_max}, {n}"
                )));
            }
            let ratio = (s_max / s_min).powf(1.0 / (n - 1) as f64);
            (0..n).map(|i| s_min * ratio.powi(i as i32)).collect()
        }
    };
    let receivers_raw = resolve_or(
        args.receivers,
        &mut sec,
        "receivers",
        "modified-sic,awgn-capacity".into(),
    )?;
    let dt = resolve_or(args.dt, &mut sec, "dt", 0.01)?;
    let t_max = resolve_or(args.t_max, &mut sec, "t-max", 30.0)?;
    let max_iter = resolve_or(args.max_iter, &mut sec, "max-iter", 300)?;
    let format = resolve_or(args.format, &mut sec, "format", "csv".into())?;
    let out = resolve(args.out, &mut sec, "out")?;
    sec.reject_unknown().map_err(usage)?;

    let mut table = CurveTable::default();
    for name in receivers_raw.split(',') {
        let kind = ReceiverKind::parse(name.trim()).map_err(CliError::from)?;
        let mut spec = SweepSpec::new(alphas.clone(), s_values.clone(), kind)?;
        spec.two_stage.grid = GridSpec::Continuous {
            t_min: -1.0,
            t_max,
            dt,
        };
        spec.two_stage.max_iter = max_iter;
        table = table.merge(sweep_curves(&spec)?);
    }
    table.sort_for_export();

    let path = match format.as_str() {
        "csv" => {
            let path = out_path(out, "sweep", "csv");
            write_file(&path, |w| write_curves_csv(&table, w))?;
            path
        }
        "json" => {
            let path = out_path(out, "sweep", "json");
            write_file(&path, |w| write_curves_json(&table, w))?;
            path
        }
        other => {
            return Err(usage(format!(
                "format: expected `csv` or `json`, got {other:?}"
            )))
        }
    };

    let (db_min, db_max) = table
        .rows
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |acc, r| {
            (acc.0.min(r.ebn0.db()), acc.1.max(r.ebn0.db()))
        });
    let max_eff = table
        .rows
        .iter()
        .map(|r| r.spectral_efficiency.bits_per_use())
        .fold(0.0f64, f64::max);
    println!(
        "sweep: rows={} receivers={} ebn0_db=[{:.2}, {:.2}] max_eff={:.4} -> {}",
        table.rows.len(),
        receivers_raw,
        db_min,
        db_max,
        max_eff,
        path.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------

fn run(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        None => ConfigFile::default(),
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
            ConfigFile::parse(&text, &path.display().to_string()).map_err(usage)?
        }
    };
    match cli.command {
        Command::De(args) => run_de_command(args, config.section("de"), false),
        Command::Sic(args) => run_de_command(args, config.section("sic"), true),
        Command::Linksim(args) => run_linksim_command(args, config.section("linksim")),
        Command::Capacity(args) => run_capacity_command(args, config.section("capacity")),
        Command::Sweep(args) => run_sweep_command(args, config.section("sweep")),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints its own message; usage errors exit 2, help/version 0.
            e.exit();
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}
