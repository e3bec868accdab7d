//! Density evolution of the noise-and-interference variance x and the
//! per-packet SINR z across interference-cancellation iterations.
//!
//! Two models are implemented on finite time grids:
//!
//! * the discrete model, where a packet spans 2W+1 unit sections and the
//!   window sums run over j in [-W, W];
//! * the continuous model (packet length normalized to 1), where the window
//!   sums become integrals over [-1/2, 1/2], evaluated with the composite
//!   trapezoid rule on the uniform grid.
//!
//! Boundary conventions: to the left of the grid every packet is already
//! known (SINR +inf, no interference); to the right of the grid fresh,
//! fully unknown packets keep arriving (SINR 0, variance alpha + sigma2).
//! Front measurements only use t at least one packet length away from the
//! right edge so the edge padding never contaminates them.
//!
//! A decoded region meets the undecoded one in a jump of the integrand
//! g(z(t)) exactly at a grid point. The trapezoid rule treats a sampled
//! jump as two-sided, so the sample at an inf/finite transition is weighted
//! by the mean of its one-sided limits. This keeps the first-iteration
//! closed forms accurate to O(dt^2) instead of O(dt), and it preserves the
//! monotonicity of the evolution operator (the discount only grows with the
//! decoded set).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::math::{g_raw, Snr};

pub mod export;

/// Convergence threshold on the sup-norm profile change between iterations.
pub const PROFILE_TOLERANCE: f64 = 1e-12;

/// Resolution of the two-stage threshold search.
pub const THETA_RESOLUTION: f64 = 1e-4;

/// Consecutive low-speed iterations after which a run reports a stall.
pub const STALL_ITERATIONS: usize = 5;

// ---------------------------------------------------------------------------
// Parameters and grids
// ---------------------------------------------------------------------------

/// Knobs shared by every density-evolution analysis.
#[derive(Debug, Clone, Copy)]
pub struct SystemParams {
    alpha: f64,
    sigma2: f64,
    w: usize,
    theta: Snr,
}

impl SystemParams {
    pub fn new(alpha: f64, sigma2: f64, w: usize, theta: Snr) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(Error::Config(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        if !sigma2.is_finite() || sigma2 <= 0.0 {
            return Err(Error::Config(format!(
                "sigma2 must be positive, got {sigma2}"
            )));
        }
        if w == 0 {
            return Err(Error::Config("coupling half-window w must be >= 1".into()));
        }
        Ok(SystemParams {
            alpha,
            sigma2,
            w,
            theta,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn theta(&self) -> Snr {
        self.theta
    }

    pub fn with_theta(mut self, theta: Snr) -> Self {
        self.theta = theta;
        self
    }
}

/// Receiver analyzed by [`run_de`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReceiverMode {
    /// Parallel interference cancellation to a fixed point; decoding happens
    /// once at the end wherever z exceeds theta.
    TwoStagePic,
    /// Decode-and-cancel every iteration: any point with z > theta becomes
    /// +inf before the next variance update.
    ModifiedSic,
}

/// User-facing grid request, validated into a [`TimeGrid`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridSpec {
    Discrete { t_max: usize },
    Continuous { t_min: f64, t_max: f64, dt: f64 },
}

impl GridSpec {
    pub fn build(&self, params: &SystemParams) -> Result<TimeGrid> {
        match *self {
            GridSpec::Discrete { t_max } => {
                if t_max <= params.w {
                    return Err(Error::Config(format!(
                        "discrete grid needs t_max > w, got t_max = {t_max}, w = {}",
                        params.w
                    )));
                }
                Ok(TimeGrid::Discrete { t_max })
            }
            GridSpec::Continuous { t_min, t_max, dt } => {
                if !dt.is_finite() || dt <= 0.0 {
                    return Err(Error::Config(format!("dt must be positive, got {dt}")));
                }
                if !(t_min < 0.0 && 0.0 < t_max) {
                    return Err(Error::Config(format!(
                        "continuous grid must straddle 0, got [{t_min}, {t_max}]"
                    )));
                }
                let half = 0.5 / dt;
                if (half - half.round()).abs() > 1e-9 || half.round() < 1.0 {
                    return Err(Error::Config(format!(
                        "dt must divide the half packet length 0.5, got dt = {dt}"
                    )));
                }
                let steps = (t_max - t_min) / dt;
                let len = steps.round() as usize + 1;
                if (steps - steps.round()).abs() > 1e-6 {
                    return Err(Error::Config(format!(
                        "grid span [{t_min}, {t_max}] is not a whole number of dt = {dt} steps"
                    )));
                }
                Ok(TimeGrid::Continuous {
                    t_min,
                    dt,
                    len,
                    half: half.round() as usize,
                })
            }
        }
    }
}

/// A concrete uniform time axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeGrid {
    /// Integer slots t = 1..=t_max.
    Discrete { t_max: usize },
    /// t_k = t_min + k dt for k = 0..len; `half` is the number of steps in
    /// half a packet length.
    Continuous {
        t_min: f64,
        dt: f64,
        len: usize,
        half: usize,
    },
}

impl TimeGrid {
    pub fn len(&self) -> usize {
        match *self {
            TimeGrid::Discrete { t_max } => t_max,
            TimeGrid::Continuous { len, .. } => len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Time coordinate of grid index `k`.
    pub fn time(&self, k: usize) -> f64 {
        match *self {
            TimeGrid::Discrete { .. } => (k + 1) as f64,
            TimeGrid::Continuous { t_min, dt, .. } => t_min + k as f64 * dt,
        }
    }

    /// Grid spacing (1 for the discrete model).
    pub fn spacing(&self) -> f64 {
        match *self {
            TimeGrid::Discrete { .. } => 1.0,
            TimeGrid::Continuous { dt, .. } => dt,
        }
    }

    /// Largest time used for front measurements: one packet length short of
    /// the right edge.
    pub fn front_cap(&self) -> f64 {
        match *self {
            TimeGrid::Discrete { t_max } => t_max as f64 - 1.0,
            TimeGrid::Continuous { t_min, dt, len, .. } => t_min + (len - 1) as f64 * dt - 1.0,
        }
    }

    /// Index of the grid point closest to time `t`.
    pub fn index_at(&self, t: f64) -> usize {
        match *self {
            TimeGrid::Discrete { t_max } => (t.round() as usize).clamp(1, t_max) - 1,
            TimeGrid::Continuous { t_min, dt, len, .. } => {
                (((t - t_min) / dt).round() as isize).clamp(0, len as isize - 1) as usize
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Profiles
// ---------------------------------------------------------------------------

/// State of density evolution: the SINR profile z over the grid, the
/// matching variance profile x once a variance update has run, and the
/// iteration that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrProfile {
    grid: TimeGrid,
    z: Vec<f64>,
    x: Option<Vec<f64>>,
    iteration: usize,
}

impl SinrProfile {
    /// Assemble a profile from raw parts. Every z entry must be nonnegative
    /// or +inf.
    pub fn from_parts(grid: TimeGrid, z: Vec<f64>, iteration: usize) -> Result<Self> {
        if z.len() != grid.len() {
            return Err(Error::Config(format!(
                "profile length {} does not match grid length {}",
                z.len(),
                grid.len()
            )));
        }
        if let Some(bad) = z.iter().find(|v| v.is_nan() || **v < 0.0) {
            return Err(Error::Config(format!("invalid SINR entry {bad}")));
        }
        Ok(SinrProfile {
            grid,
            z,
            x: None,
            iteration,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn x(&self) -> Option<&[f64]> {
        self.x.as_deref()
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    /// z at the grid point closest to time `t`.
    pub fn z_at(&self, t: f64) -> f64 {
        self.z[self.grid.index_at(t)]
    }

    /// Sup-norm distance to another profile over finite entries; +inf when
    /// the decoded (infinite) sets differ.
    pub fn sup_change(&self, other: &SinrProfile) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        let mut sup = 0.0f64;
        for (&a, &b) in self.z.iter().zip(&other.z) {
            match (a.is_infinite(), b.is_infinite()) {
                (true, true) => {}
                (false, false) => sup = sup.max((a - b).abs()),
                _ => return f64::INFINITY,
            }
        }
        sup
    }
}

// ---------------------------------------------------------------------------
// Initialization
// ---------------------------------------------------------------------------

/// Discrete-model start profile: packets centered at t <= W are known
/// (SINR +inf), everything later is fully unknown (SINR 0).
pub fn init_discrete(params: &SystemParams, t_max: usize) -> Result<SinrProfile> {
    let grid = GridSpec::Discrete { t_max }.build(params)?;
    let z = (0..t_max)
        .map(|k| {
            if k < params.w {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .collect();
    SinrProfile::from_parts(grid, z, 0)
}

/// Continuous-model start profile: the step with z = +inf strictly left of
/// t = 0 and z = 0 from t = 0 on (right-closed).
pub fn init_continuous(
    params: &SystemParams,
    t_min: f64,
    t_max: f64,
    dt: f64,
) -> Result<SinrProfile> {
    let grid = GridSpec::Continuous { t_min, t_max, dt }.build(params)?;
    let z = (0..grid.len())
        .map(|k| {
            if grid.time(k) < 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .collect();
    SinrProfile::from_parts(grid, z, 0)
}

/// Initialize on an already built grid.
pub fn init_profile(grid: TimeGrid, params: &SystemParams) -> Result<SinrProfile> {
    match grid {
        TimeGrid::Discrete { t_max } => init_discrete(params, t_max),
        TimeGrid::Continuous { t_min, dt, len, .. } => {
            let t_max = t_min + (len - 1) as f64 * dt;
            init_continuous(params, t_min, t_max, dt)
        }
    }
}

// ---------------------------------------------------------------------------
// g sampling with decoded-boundary averaging
// ---------------------------------------------------------------------------

/// Evaluate g over the profile. Consecutive equal z values (bulk regions,
/// decoded stretches) hit a chunk-local memo, which keeps the cost
/// proportional to the size of the transition region.
fn g_samples(z: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; z.len()];
    exec::fill_chunked(&mut g, |start, chunk| {
        let mut last_z = f64::NAN;
        let mut last_g = 0.0;
        for (i, out) in chunk.iter_mut().enumerate() {
            let zi = z[start + i];
            if zi.is_infinite() {
                *out = 0.0;
            } else if zi == last_z {
                *out = last_g;
            } else {
                last_z = zi;
                last_g = g_raw(zi);
                *out = last_g;
            }
        }
    });
    g
}

/// Apply the two-sided jump averaging: a finite sample loses half its weight
/// per infinite neighbor. Virtual neighbors: +inf left of the grid, 0 (fully
/// unknown) right of the grid.
fn apply_boundary_average(g: &mut [f64], z: &[f64]) {
    let n = z.len();
    for k in 0..n {
        if z[k].is_infinite() {
            continue;
        }
        let left_inf = if k == 0 { true } else { z[k - 1].is_infinite() };
        let right_inf = if k + 1 == n {
            false
        } else {
            z[k + 1].is_infinite()
        };
        let factor = 1.0 - 0.5 * (left_inf as u8 + right_inf as u8) as f64;
        g[k] *= factor;
    }
}

// ---------------------------------------------------------------------------
// Variance updates
// ---------------------------------------------------------------------------

/// Discrete variance update: x_t = alpha/(2W+1) * sum_{j=-W..W} g(z_{t+j})
/// + sigma2 with +inf padding on the left and z = 0 padding on the right.
pub fn variance_update_discrete(
    profile: &SinrProfile,
    params: &SystemParams,
) -> Result<SinrProfile> {
    let TimeGrid::Discrete { .. } = profile.grid else {
        return Err(Error::Config(
            "discrete update applied to a continuous profile".into(),
        ));
    };
    let n = profile.len();
    let w = params.w as isize;
    let g = g_samples(&profile.z);
    let gv = |j: isize| -> f64 {
        if j < 0 {
            0.0 // known packets, g(+inf)
        } else if (j as usize) < n {
            g[j as usize]
        } else {
            1.0 // fresh packets, g(0)
        }
    };
    let scale = params.alpha / (2 * w + 1) as f64;
    let mut x = vec![0.0; n];
    exec::fill_chunked(&mut x, |start, chunk| {
        for (i, out) in chunk.iter_mut().enumerate() {
            let k = (start + i) as isize;
            let mut s = 0.0;
            for j in (k - w)..=(k + w) {
                s += gv(j);
            }
            *out = scale * s + params.sigma2;
        }
    });
    check_variance(&x, params)?;
    Ok(SinrProfile {
        grid: profile.grid,
        z: profile.z.clone(),
        x: Some(x),
        iteration: profile.iteration,
    })
}

/// Continuous variance update: x_t = alpha * integral of g(z) over
/// [t - 1/2, t + 1/2] + sigma2, composite trapezoid with jump averaging.
pub fn variance_update_continuous(
    profile: &SinrProfile,
    params: &SystemParams,
) -> Result<SinrProfile> {
    let TimeGrid::Continuous { dt, half, .. } = profile.grid else {
        return Err(Error::Config(
            "continuous update applied to a discrete profile".into(),
        ));
    };
    let n = profile.len();
    let h = half as isize;
    let mut g = g_samples(&profile.z);
    apply_boundary_average(&mut g, &profile.z);
    // First virtual sample right of the grid: z = 0 there, halved when the
    // last grid sample is decoded (jump from +inf to finite).
    let first_pad = if profile.z[n - 1].is_infinite() {
        0.5
    } else {
        1.0
    };
    let gv = |j: isize| -> f64 {
        if j < 0 {
            0.0
        } else if (j as usize) < n {
            g[j as usize]
        } else if j as usize == n {
            first_pad
        } else {
            1.0
        }
    };
    let mut x = vec![0.0; n];
    exec::fill_chunked(&mut x, |start, chunk| {
        for (i, out) in chunk.iter_mut().enumerate() {
            let k = (start + i) as isize;
            let lo = k - h;
            let hi = k + h;
            // In-range slice summed without branches; pads added separately.
            let a = lo.max(0) as usize;
            let b = (hi.min(n as isize - 1)) as usize;
            let mut s: f64 = g[a..=b].iter().sum();
            if hi >= n as isize {
                let pads = (hi - n as isize + 1) as f64;
                s += first_pad + (pads - 1.0).max(0.0);
            }
            let integral = dt * (s - 0.5 * (gv(lo) + gv(hi)));
            *out = params.alpha * integral + params.sigma2;
        }
    });
    check_variance(&x, params)?;
    Ok(SinrProfile {
        grid: profile.grid,
        z: profile.z.clone(),
        x: Some(x),
        iteration: profile.iteration,
    })
}

fn check_variance(x: &[f64], params: &SystemParams) -> Result<()> {
    let floor = params.sigma2 * (1.0 - 1e-12);
    if let Some(bad) = x.iter().find(|v| !(**v >= floor)) {
        return Err(Error::Invariant(format!(
            "variance {bad} fell below the noise floor {}",
            params.sigma2
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// SINR updates
// ---------------------------------------------------------------------------

/// Discrete SINR update: z_t = 1/(2W+1) * sum_{j=-W..W} 1/x_{t+j} for
/// t >= W+1; known packets (t <= W) stay at +inf. Variance right of the
/// grid is padded with the fully loaded value alpha + sigma2.
pub fn sinr_update_discrete(profile: &SinrProfile, params: &SystemParams) -> Result<SinrProfile> {
    let TimeGrid::Discrete { .. } = profile.grid else {
        return Err(Error::Config(
            "discrete update applied to a continuous profile".into(),
        ));
    };
    let x = require_x(profile)?;
    check_positive(x)?;
    let n = profile.len();
    let w = params.w as isize;
    let pad = 1.0 / (params.alpha + params.sigma2);
    let recip: Vec<f64> = x.iter().map(|v| 1.0 / v).collect();
    let scale = 1.0 / (2 * w + 1) as f64;
    let mut z = vec![0.0; n];
    exec::fill_chunked(&mut z, |start, chunk| {
        for (i, out) in chunk.iter_mut().enumerate() {
            let k = start + i;
            if k < params.w {
                *out = f64::INFINITY;
                continue;
            }
            let k = k as isize;
            let mut s = 0.0;
            for j in (k - w)..=(k + w) {
                s += if (j as usize) < n {
                    recip[j as usize]
                } else {
                    pad
                };
            }
            *out = scale * s;
        }
    });
    Ok(SinrProfile {
        grid: profile.grid,
        z,
        x: Some(x.to_vec()),
        iteration: profile.iteration + 1,
    })
}

/// Continuous SINR update: z_t = integral of 1/x over [t - 1/2, t + 1/2]
/// for t >= 0 by the trapezoid rule; z stays +inf for t < 0.
pub fn sinr_update_continuous(profile: &SinrProfile, params: &SystemParams) -> Result<SinrProfile> {
    let TimeGrid::Continuous {
        t_min, dt, half, ..
    } = profile.grid
    else {
        return Err(Error::Config(
            "continuous update applied to a discrete profile".into(),
        ));
    };
    if t_min > -0.5 + 1e-12 {
        return Err(Error::Config(format!(
            "continuous SINR update needs t_min <= -0.5 so the window at t = 0 is covered, got {t_min}"
        )));
    }
    let x = require_x(profile)?;
    check_positive(x)?;
    let n = profile.len();
    let h = half as isize;
    let pad = 1.0 / (params.alpha + params.sigma2);
    let recip: Vec<f64> = x.iter().map(|v| 1.0 / v).collect();
    let grid = profile.grid;
    let rv = |j: isize| -> f64 {
        if (j as usize) < n {
            recip[j as usize]
        } else {
            pad
        }
    };
    let mut z = vec![0.0; n];
    exec::fill_chunked(&mut z, |start, chunk| {
        for (i, out) in chunk.iter_mut().enumerate() {
            let k = start + i;
            if grid.time(k) < 0.0 {
                *out = f64::INFINITY;
                continue;
            }
            let k = k as isize;
            let lo = k - h;
            let hi = k + h;
            debug_assert!(lo >= 0);
            let b = (hi.min(n as isize - 1)) as usize;
            let mut s: f64 = recip[lo as usize..=b].iter().sum();
            if hi >= n as isize {
                s += (hi - n as isize + 1) as f64 * pad;
            }
            *out = dt * (s - 0.5 * (rv(lo) + rv(hi)));
        }
    });
    Ok(SinrProfile {
        grid: profile.grid,
        z,
        x: Some(x.to_vec()),
        iteration: profile.iteration + 1,
    })
}

fn require_x(profile: &SinrProfile) -> Result<&[f64]> {
    profile.x.as_deref().ok_or_else(|| {
        Error::Config("SINR update needs a variance profile; run a variance update first".into())
    })
}

fn check_positive(x: &[f64]) -> Result<()> {
    if let Some(bad) = x.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::Invariant(format!("nonpositive variance {bad}")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// SIC thresholding and the composite operator
// ---------------------------------------------------------------------------

/// Decode-and-cancel: every point with z strictly above theta becomes +inf.
/// Ties (z == theta) do not decode.
pub fn sic_threshold_update(profile: &SinrProfile, theta: Snr) -> SinrProfile {
    let th = theta.value();
    let z = profile
        .z
        .iter()
        .map(|&v| if v > th { f64::INFINITY } else { v })
        .collect();
    SinrProfile {
        grid: profile.grid,
        z,
        x: profile.x.clone(),
        iteration: profile.iteration,
    }
}

/// One full update z_{i+1} = F(z_i): variance, then SINR, then the SIC
/// threshold when in modified-SIC mode. The returned profile carries the
/// variance that produced the new z. F is monotone: pointwise larger inputs
/// give pointwise larger outputs.
pub fn step(
    profile: &SinrProfile,
    params: &SystemParams,
    mode: ReceiverMode,
) -> Result<SinrProfile> {
    let with_x = match profile.grid {
        TimeGrid::Discrete { .. } => variance_update_discrete(profile, params)?,
        TimeGrid::Continuous { .. } => variance_update_continuous(profile, params)?,
    };
    let mut next = match profile.grid {
        TimeGrid::Discrete { .. } => sinr_update_discrete(&with_x, params)?,
        TimeGrid::Continuous { .. } => sinr_update_continuous(&with_x, params)?,
    };
    if mode == ReceiverMode::ModifiedSic {
        next = sic_threshold_update(&next, params.theta);
    }
    Ok(next)
}

// ---------------------------------------------------------------------------
// Trajectories
// ---------------------------------------------------------------------------

/// A full run of density evolution: one profile per iteration plus the
/// decoding-front diagnostics.
#[derive(Debug, Clone)]
pub struct DeTrajectory {
    /// Profile after each iteration (index 0 is the initialization, with its
    /// variance filled in).
    pub profiles: Vec<SinrProfile>,
    /// Decoding-front position per iteration: the largest time t such that
    /// z >= theta on the whole prefix up to t, capped one packet length from
    /// the right edge; `None` when even the first grid point is below theta.
    pub front: Vec<Option<f64>>,
    /// Front displacement per iteration (0 where undefined).
    pub speed: Vec<f64>,
    /// True when the profile change dropped below [`PROFILE_TOLERANCE`].
    pub converged: bool,
    /// True when the last [`STALL_ITERATIONS`] speeds were all below a tenth
    /// of the grid spacing.
    pub stalled: bool,
}

impl DeTrajectory {
    pub fn iterations(&self) -> usize {
        self.profiles.len() - 1
    }

    pub fn final_profile(&self) -> &SinrProfile {
        self.profiles.last().expect("trajectory is never empty")
    }
}

/// Largest t with z >= theta on the whole prefix; `None` if the prefix is
/// empty. Only times up to `grid.front_cap()` participate, so an isolated
/// lucky point past a gap never counts.
pub fn front_position(profile: &SinrProfile, theta: Snr) -> Option<f64> {
    let th = theta.value();
    let cap = profile.grid.front_cap();
    let mut front = None;
    for (k, &z) in profile.z.iter().enumerate() {
        if z >= th {
            let t = profile.grid.time(k);
            if t > cap {
                break;
            }
            front = Some(t);
        } else {
            break;
        }
    }
    front
}

enum Record {
    All,
    FinalOnly,
}

fn evolve(
    params: &SystemParams,
    mode: ReceiverMode,
    grid: &GridSpec,
    max_iter: usize,
    record: Record,
) -> Result<DeTrajectory> {
    if max_iter == 0 {
        return Err(Error::Config("max_iter must be at least 1".into()));
    }
    let grid = grid.build(params)?;
    let mut profile = init_profile(grid, params)?;
    // Attach the iteration-0 variance so every recorded profile has both x
    // and z.
    profile = match grid {
        TimeGrid::Discrete { .. } => variance_update_discrete(&profile, params)?,
        TimeGrid::Continuous { .. } => variance_update_continuous(&profile, params)?,
    };

    let mut profiles = Vec::new();
    let mut front = vec![front_position(&profile, params.theta)];
    if matches!(record, Record::All) {
        profiles.push(profile.clone());
    }
    let mut converged = false;

    for _ in 1..=max_iter {
        let mut next = match grid {
            TimeGrid::Discrete { .. } => sinr_update_discrete(&profile, params)?,
            TimeGrid::Continuous { .. } => sinr_update_continuous(&profile, params)?,
        };
        if mode == ReceiverMode::ModifiedSic {
            next = sic_threshold_update(&next, params.theta);
        }
        next = match grid {
            TimeGrid::Discrete { .. } => variance_update_discrete(&next, params)?,
            TimeGrid::Continuous { .. } => variance_update_continuous(&next, params)?,
        };
        let change = profile.sup_change(&next);
        front.push(front_position(&next, params.theta));
        if matches!(record, Record::All) {
            profiles.push(next.clone());
        }
        profile = next;
        if change < PROFILE_TOLERANCE {
            converged = true;
            break;
        }
    }
    if matches!(record, Record::FinalOnly) {
        profiles.push(profile);
    }

    let mut speed = vec![0.0; front.len()];
    for i in 1..front.len() {
        if let (Some(a), Some(b)) = (front[i - 1], front[i]) {
            speed[i] = b - a;
        }
    }
    let dt = grid.spacing();
    let stalled = speed.len() > STALL_ITERATIONS
        && speed[speed.len() - STALL_ITERATIONS..]
            .iter()
            .all(|&s| s < dt / 10.0);

    Ok(DeTrajectory {
        profiles,
        front,
        speed,
        converged,
        stalled,
    })
}

/// Run density evolution, alternating variance and SINR updates (plus SIC
/// thresholding in modified-SIC mode) until the profile change drops below
/// [`PROFILE_TOLERANCE`] or `max_iter` iterations have run.
pub fn run_de(
    params: &SystemParams,
    mode: ReceiverMode,
    grid: &GridSpec,
    max_iter: usize,
) -> Result<DeTrajectory> {
    evolve(params, mode, grid, max_iter, Record::All)
}

// ---------------------------------------------------------------------------
// Two-stage achievable-rate search
// ---------------------------------------------------------------------------

/// Largest code threshold the two-stage receiver supports, and the spectral
/// efficiency it yields.
///
/// Runs the two-stage PIC evolution once (the profile does not depend on
/// theta in this mode) and binary-searches the largest theta that the final
/// profile strictly exceeds everywhere on the central half of the measured
/// span, to a resolution of [`THETA_RESOLUTION`]. Returns (0, 0) when no
/// positive theta succeeds at that resolution. `params.theta` is ignored.
pub fn two_stage_max_rate(
    params: &SystemParams,
    grid: &GridSpec,
    max_iter: usize,
) -> Result<(crate::math::CapacityValue, Snr)> {
    let traj = evolve(
        params,
        ReceiverMode::TwoStagePic,
        grid,
        max_iter,
        Record::FinalOnly,
    )?;
    let profile = traj.final_profile();
    let g = profile.grid();

    // Central evaluation window: middle half of [first unknown t, front cap].
    let start = match *g {
        TimeGrid::Discrete { .. } => (params.w + 1) as f64,
        TimeGrid::Continuous { .. } => 0.0,
    };
    let end = g.front_cap();
    if end <= start {
        return Err(Error::Config(
            "grid too short for a central evaluation window".into(),
        ));
    }
    let lo_t = start + 0.25 * (end - start);
    let hi_t = start + 0.75 * (end - start);
    let mut min_z = f64::INFINITY;
    for k in 0..g.len() {
        let t = g.time(k);
        if t >= lo_t && t <= hi_t {
            min_z = min_z.min(profile.z()[k]);
        }
    }

    // Binary search for the largest theta with min_z > theta.
    let mut lo = 0.0f64;
    let mut hi = 1.0 / params.sigma2 + 1.0;
    while hi - lo > THETA_RESOLUTION {
        let mid = 0.5 * (lo + hi);
        if min_z > mid {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo <= THETA_RESOLUTION {
        return Ok((crate::math::CapacityValue::ZERO, Snr::ZERO));
    }
    let theta = Snr::new(lo)?;
    let eff = params.alpha * crate::math::biawgn_capacity(theta).bits_per_use();
    Ok((crate::math::CapacityValue::new(eff)?, theta))
}
