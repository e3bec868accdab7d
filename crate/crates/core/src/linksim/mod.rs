//! Finite-size Monte Carlo simulation of the staggered-packet transmitter,
//! the shared AWGN channel, and the iterative interference-cancellation
//! receiver. Used to validate density evolution at desk scale.
//!
//! World layout: K data streams, stream k staggered by (k mod 2W+1) slots.
//! A packet carries L coded bits, each duplicated over M sub-streams; the
//! packet is split into 2W+1 sections of L/(2W+1) bit positions, one section
//! per slot. The M replicas of a bit are forced into distinct sections (one
//! per section when M = 2W+1, round-robin otherwise) via a per-bit random
//! cyclic shift; positions within a section are a uniform random draw. Every
//! replica is spread over N dimensions by a dedicated +-1/sqrt(N) signature.
//!
//! Packets whose start slot would be negative are the "already known"
//! boundary of the coupled chain and are simply absent; packets are
//! truncated at the right edge of the simulated window, mirroring the
//! fresh-packets boundary condition of the density-evolution grids.
//!
//! All randomness comes from one ChaCha8 generator seeded from the config,
//! drawn in a fixed documented order, so a seed pins the entire world.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::de::ReceiverMode;
use crate::error::{Error, Result};
use crate::exec;
use crate::math::Snr;

pub mod export;

/// Floor for per-slot variance estimates when used as combining weights, so
/// a perfectly cancelled slot does not produce 0/0.
const WEIGHT_FLOOR: f64 = 1e-300;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Finite-size simulation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkSimConfig {
    /// Signal dimensions per channel use (N).
    pub n_dims: usize,
    /// Replicas per bit (M).
    pub m_substreams: usize,
    /// Total data streams (K); must be divisible by 2W+1.
    pub k_streams: usize,
    /// Coupling half-window (W); a packet spans 2W+1 slots.
    pub w: usize,
    /// Bits per packet (L); must be divisible by 2W+1.
    pub l_bits: usize,
    /// Simulated time slots.
    pub n_slots: usize,
    /// Noise power per dimension; 0 is allowed for noiseless checks.
    pub sigma2: f64,
    /// Power of each modulated stream (P).
    pub power: f64,
    /// Master seed for the world.
    pub seed: u64,
    /// Interference-cancellation iterations to run.
    pub iterations: usize,
}

impl LinkSimConfig {
    pub fn sections(&self) -> usize {
        2 * self.w + 1
    }

    /// System load alpha = K/N.
    pub fn alpha(&self) -> f64 {
        self.k_streams as f64 / self.n_dims as f64
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.sections();
        if self.n_dims == 0 || self.m_substreams == 0 || self.k_streams == 0 || self.l_bits == 0 {
            return Err(Error::Config("all size parameters must be positive".into()));
        }
        if self.w == 0 {
            return Err(Error::Config("w must be at least 1".into()));
        }
        if !self.l_bits.is_multiple_of(s) {
            return Err(Error::Config(format!(
                "l_bits = {} must be divisible by 2W+1 = {s}",
                self.l_bits
            )));
        }
        if !self.k_streams.is_multiple_of(s) {
            return Err(Error::Config(format!(
                "k_streams = {} must be divisible by 2W+1 = {s}",
                self.k_streams
            )));
        }
        if self.n_slots == 0 {
            return Err(Error::Config("n_slots must be positive".into()));
        }
        if !(self.sigma2 >= 0.0) || !self.sigma2.is_finite() {
            return Err(Error::Config(format!(
                "sigma2 must be >= 0, got {}",
                self.sigma2
            )));
        }
        if !(self.power > 0.0) || !self.power.is_finite() {
            return Err(Error::Config(format!(
                "power must be positive, got {}",
                self.power
            )));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// World state
// ---------------------------------------------------------------------------

/// The +-1/sqrt(N) spreading vectors, stored as raw +-1 chips so norms and
/// cross-correlations are exact rationals.
#[derive(Debug, Clone)]
pub struct SignatureSet {
    chips: Vec<f64>,
    n_dims: usize,
    m_substreams: usize,
}

impl SignatureSet {
    fn index(&self, stream: usize, sub: usize) -> usize {
        (stream * self.m_substreams + sub) * self.n_dims
    }

    /// Raw +-1 chips of one signature.
    pub fn chips(&self, stream: usize, sub: usize) -> &[f64] {
        let i = self.index(stream, sub);
        &self.chips[i..i + self.n_dims]
    }

    /// Squared norm of the scaled signature; exactly 1 by construction.
    pub fn norm_sq(&self, stream: usize, sub: usize) -> f64 {
        let sq: f64 = self.chips(stream, sub).iter().map(|c| c * c).sum();
        sq / self.n_dims as f64
    }

    /// Inner product of two scaled signatures.
    pub fn cross(&self, a: (usize, usize), b: (usize, usize)) -> f64 {
        let sa = self.chips(a.0, a.1);
        let sb = self.chips(b.0, b.1);
        let dot: f64 = sa.iter().zip(sb).map(|(x, y)| x * y).sum();
        dot / self.n_dims as f64
    }
}

/// One replica instance within a slot: sub-stream, bit index, channel use.
#[derive(Debug, Clone, Copy)]
struct SlotReplica {
    sub: u16,
    bit: u16,
    chan_use: u32,
}

/// One transmitted packet (an L-bit codeword of one stream).
#[derive(Debug, Clone)]
pub struct Packet {
    pub stream: usize,
    pub index: usize,
    pub start_slot: usize,
    bits: Vec<f64>,
    /// Physical position of replica (m, l) inside the packet.
    replica_pos: Vec<u32>,
    /// Replicas grouped by packet section, in deterministic (m, l) order.
    by_section: Vec<Vec<SlotReplica>>,
    est_offset: usize,
    decoded: bool,
}

impl Packet {
    pub fn bit(&self, l: usize) -> f64 {
        self.bits[l]
    }

    pub fn is_decoded(&self) -> bool {
        self.decoded
    }

    fn position(&self, sub: usize, l: usize, l_bits: usize) -> usize {
        self.replica_pos[sub * l_bits + l] as usize
    }
}

/// The full Monte Carlo world plus receiver state.
#[derive(Debug, Clone)]
pub struct LinkSimState {
    cfg: LinkSimConfig,
    sec_len: usize,
    block: usize, // samples per slot = sec_len * n_dims
    signatures: SignatureSet,
    packets: Vec<Packet>,
    /// Packet ids active in each slot, with the section they transmit.
    slot_packets: Vec<Vec<(usize, usize)>>,
    /// Packet ids per stream, ordered by packet index.
    stream_packets: Vec<Vec<usize>>,
    noise: Vec<f64>,
    received: Vec<f64>,
    residual: Vec<f64>,
    /// Per-replica extrinsic bit estimates, one M*L block per packet.
    estimates: Vec<f64>,
    /// Per-slot empirical variance of the current residual.
    xhat: Vec<f64>,
    xhat_history: Vec<Vec<f64>>,
    /// Per-iteration measured per-packet SINR (+inf for decoded packets).
    sinr_history: Vec<Vec<f64>>,
    /// Packet ids newly decoded at each SIC step.
    decoded_history: Vec<Vec<usize>>,
    iteration: usize,
}

// ---------------------------------------------------------------------------
// World generation
// ---------------------------------------------------------------------------

fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller; one value per pair of uniforms keeps the draw order simple.
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn sign<R: Rng>(rng: &mut R) -> f64 {
    if rng.gen::<bool>() {
        1.0
    } else {
        -1.0
    }
}

/// Build the deterministic world for a config: bits, interleavers,
/// signatures, noise, and the received signal, plus zeroed receiver state.
pub fn generate_world(cfg: &LinkSimConfig) -> Result<LinkSimState> {
    cfg.validate()?;
    let s = cfg.sections();
    let sec_len = cfg.l_bits / s;
    let block = sec_len * cfg.n_dims;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // 1. Signatures.
    let mut chips = Vec::with_capacity(cfg.k_streams * cfg.m_substreams * cfg.n_dims);
    for _ in 0..cfg.k_streams * cfg.m_substreams * cfg.n_dims {
        chips.push(sign(&mut rng));
    }
    let signatures = SignatureSet {
        chips,
        n_dims: cfg.n_dims,
        m_substreams: cfg.m_substreams,
    };

    // 2. Packets with bits and section-balanced interleavers.
    let mut packets = Vec::new();
    let mut stream_packets = vec![Vec::new(); cfg.k_streams];
    let mut est_offset = 0;
    for k in 0..cfg.k_streams {
        let offset = k % s;
        let mut index = 0;
        let mut start = offset;
        while start < cfg.n_slots {
            let bits: Vec<f64> = (0..cfg.l_bits).map(|_| sign(&mut rng)).collect();

            // Balanced per-bit shifts: each residue appears exactly L/S
            // times, so every (sub-stream, section) cell holds exactly
            // sec_len bits.
            let mut shifts: Vec<usize> = (0..cfg.l_bits).map(|l| l % s).collect();
            shuffle(&mut shifts, &mut rng);

            let mut replica_pos = vec![0u32; cfg.m_substreams * cfg.l_bits];
            for m in 0..cfg.m_substreams {
                for sec in 0..s {
                    let mut positions: Vec<u32> =
                        ((sec * sec_len) as u32..((sec + 1) * sec_len) as u32).collect();
                    shuffle(&mut positions, &mut rng);
                    let mut next = positions.into_iter();
                    for l in 0..cfg.l_bits {
                        if (shifts[l] + m) % s == sec {
                            replica_pos[m * cfg.l_bits + l] =
                                next.next().expect("balanced section fill");
                        }
                    }
                }
            }

            let mut by_section = vec![Vec::new(); s];
            for m in 0..cfg.m_substreams {
                for l in 0..cfg.l_bits {
                    let pos = replica_pos[m * cfg.l_bits + l] as usize;
                    by_section[pos / sec_len].push(SlotReplica {
                        sub: m as u16,
                        bit: l as u16,
                        chan_use: (pos % sec_len) as u32,
                    });
                }
            }

            stream_packets[k].push(packets.len());
            packets.push(Packet {
                stream: k,
                index,
                start_slot: start,
                bits,
                replica_pos,
                by_section,
                est_offset,
                decoded: false,
            });
            est_offset += cfg.m_substreams * cfg.l_bits;
            index += 1;
            start += s;
        }
    }

    let mut slot_packets = vec![Vec::new(); cfg.n_slots];
    for (pi, p) in packets.iter().enumerate() {
        for sec in 0..s {
            let slot = p.start_slot + sec;
            if slot < cfg.n_slots {
                slot_packets[slot].push((pi, sec));
            }
        }
    }

    // 3. Noise, one block per slot.
    let sigma = cfg.sigma2.sqrt();
    let mut noise = Vec::with_capacity(cfg.n_slots * block);
    for _ in 0..cfg.n_slots * block {
        noise.push(sigma * standard_normal(&mut rng));
    }

    let mut state = LinkSimState {
        cfg: *cfg,
        sec_len,
        block,
        signatures,
        packets,
        slot_packets,
        stream_packets,
        noise,
        received: Vec::new(),
        residual: Vec::new(),
        estimates: vec![0.0; est_offset],
        xhat: Vec::new(),
        xhat_history: Vec::new(),
        sinr_history: Vec::new(),
        decoded_history: Vec::new(),
        iteration: 0,
    };

    // 4. Received signal, slot by slot through the one modulation path.
    let mut received = Vec::with_capacity(cfg.n_slots * block);
    for slot in 0..cfg.n_slots {
        received.extend_from_slice(&modulate_slot(&state, slot));
    }
    state.received = received;
    state.residual = state.received.clone();
    state.xhat = state.measure_xhat();
    state.xhat_history.push(state.xhat.clone());
    Ok(state)
}

/// Fisher-Yates with the world generator; kept local so the draw order is
/// part of this module's contract.
fn shuffle<T, R: Rng>(v: &mut [T], rng: &mut R) {
    for i in (1..v.len()).rev() {
        let j = rng.gen_range(0..=i);
        v.swap(i, j);
    }
}

/// The received block of one slot: every active packet section superposed
/// plus that slot's AWGN, exactly as stored in the world.
pub fn modulate_slot(state: &LinkSimState, slot: usize) -> Vec<f64> {
    let cfg = &state.cfg;
    let mut block = state.noise[slot * state.block..(slot + 1) * state.block].to_vec();
    let amp = (cfg.power / cfg.m_substreams as f64).sqrt();
    let scale = 1.0 / (cfg.n_dims as f64).sqrt();
    for &(pi, sec) in &state.slot_packets[slot] {
        let p = &state.packets[pi];
        for r in &p.by_section[sec] {
            let coeff = amp * p.bits[r.bit as usize] * scale;
            let sig = state.signatures.chips(p.stream, r.sub as usize);
            let out = &mut block[r.chan_use as usize * cfg.n_dims..];
            for (o, c) in out[..cfg.n_dims].iter_mut().zip(sig) {
                *o += coeff * c;
            }
        }
    }
    block
}

// ---------------------------------------------------------------------------
// Receiver
// ---------------------------------------------------------------------------

impl LinkSimState {
    pub fn config(&self) -> &LinkSimConfig {
        &self.cfg
    }

    pub fn signatures(&self) -> &SignatureSet {
        &self.signatures
    }

    pub fn packets(&self) -> &[Packet] {
        &self.packets
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn residual(&self) -> &[f64] {
        &self.residual
    }

    pub fn received(&self) -> &[f64] {
        &self.received
    }

    pub fn noise(&self) -> &[f64] {
        &self.noise
    }

    /// Per-slot variance estimates of the current residual.
    pub fn xhat(&self) -> &[f64] {
        &self.xhat
    }

    pub fn xhat_history(&self) -> &[Vec<f64>] {
        &self.xhat_history
    }

    pub fn sinr_history(&self) -> &[Vec<f64>] {
        &self.sinr_history
    }

    pub fn decoded_history(&self) -> &[Vec<usize>] {
        &self.decoded_history
    }

    /// True bit of a stream by global bit index (packets concatenated).
    pub fn stream_bit(&self, stream: usize, bit: usize) -> Option<f64> {
        let (pi, l) = self.locate(stream, bit)?;
        Some(self.packets[pi].bits[l])
    }

    fn locate(&self, stream: usize, bit: usize) -> Option<(usize, usize)> {
        let p = bit / self.cfg.l_bits;
        let l = bit % self.cfg.l_bits;
        let pi = *self.stream_packets.get(stream)?.get(p)?;
        Some((pi, l))
    }

    fn measure_xhat(&self) -> Vec<f64> {
        let block = self.block as f64;
        (0..self.cfg.n_slots)
            .map(|slot| {
                let b = &self.residual[slot * self.block..(slot + 1) * self.block];
                b.iter().map(|v| v * v).sum::<f64>() / block
            })
            .collect()
    }

    /// Matched-filter output for one replica against the current residual,
    /// with the replica's own current reconstruction added back so the
    /// desired signal part stays at u/sqrt(M). `None` when the replica falls
    /// outside the simulated window.
    fn filter_replica(&self, pi: usize, sub: usize, l: usize) -> Option<f64> {
        let cfg = &self.cfg;
        let p = &self.packets[pi];
        let pos = p.position(sub, l, cfg.l_bits);
        let slot = p.start_slot + pos / self.sec_len;
        if slot >= cfg.n_slots {
            return None;
        }
        let chan_use = pos % self.sec_len;
        let base = slot * self.block + chan_use * cfg.n_dims;
        let sig = self.signatures.chips(p.stream, sub);
        let r = &self.residual[base..base + cfg.n_dims];
        let dot: f64 = sig.iter().zip(r).map(|(c, v)| c * v).sum();
        let amp = (cfg.power / cfg.m_substreams as f64).sqrt();
        let own = self.estimates[p.est_offset + sub * cfg.l_bits + l];
        Some(dot / (cfg.n_dims as f64).sqrt() + amp * own)
    }

    /// Slot carrying replica (m, l) of a packet, if inside the window.
    fn replica_slot(&self, pi: usize, sub: usize, l: usize) -> Option<usize> {
        let p = &self.packets[pi];
        let slot = p.start_slot + p.position(sub, l, self.cfg.l_bits) / self.sec_len;
        (slot < self.cfg.n_slots).then_some(slot)
    }
}

/// Matched-filter output q for one replica of a stream bit; the desired
/// signal contributes u/sqrt(M), everything else is interference plus noise.
pub fn matched_filter(state: &LinkSimState, stream: usize, sub: usize, bit: usize) -> Option<f64> {
    let (pi, l) = state.locate(stream, bit)?;
    state.filter_replica(pi, sub, l)
}

/// Combine the matched-filter outputs of a bit's replicas into the tanh
/// conditional-expectation estimate.
///
/// Weights follow the inverse-variance rule, normalized over the replicas
/// actually used: with `exclude = Some(m)` the sum is the leave-one-out
/// (extrinsic) combination over the other M-1 replicas, as used for
/// reconstruction; with `exclude = None` all available replicas combine, the
/// variant used for SINR measurement. The weighted sum is scaled to
/// log-likelihood units (mean and variance both equal to the combined SINR,
/// (1/M) sum of 1/x over the replicas used) before the tanh.
pub fn combine_and_estimate(
    state: &LinkSimState,
    stream: usize,
    bit: usize,
    exclude: Option<usize>,
) -> Option<f64> {
    let (pi, l) = state.locate(stream, bit)?;
    let cfg = state.cfg;
    let sqrt_m = (cfg.m_substreams as f64).sqrt();
    let mut llr = 0.0;
    let mut used = 0;
    for m in 0..cfg.m_substreams {
        if exclude == Some(m) {
            continue;
        }
        if let (Some(q), Some(slot)) =
            (state.filter_replica(pi, m, l), state.replica_slot(pi, m, l))
        {
            llr += q / (sqrt_m * state.xhat[slot].max(WEIGHT_FLOOR));
            used += 1;
        }
    }
    (used > 0).then(|| llr.tanh())
}

/// One parallel interference-cancellation iteration: matched filtering with
/// the current per-slot variance weights, fresh extrinsic estimates, full
/// reconstruction and subtraction, and re-measured per-slot variances.
pub fn pic_iteration(state: &mut LinkSimState) {
    let cfg = state.cfg;
    let sqrt_m = (cfg.m_substreams as f64).sqrt();
    let weights: Vec<f64> = state
        .xhat
        .iter()
        .map(|x| 1.0 / (sqrt_m * x.max(WEIGHT_FLOOR)))
        .collect();

    // 1. Per-packet filtering, extrinsic estimates, and SINR measurement.
    struct PacketUpdate {
        estimates: Option<Vec<f64>>,
        sinr: f64,
    }
    let updates: Vec<PacketUpdate> = exec::map_indexed(state.packets.len(), |pi| {
        let p = &state.packets[pi];
        if p.decoded {
            return PacketUpdate {
                estimates: None,
                sinr: f64::INFINITY,
            };
        }
        let m_subs = cfg.m_substreams;
        let mut block = vec![0.0; m_subs * cfg.l_bits];
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        let mut count = 0usize;
        let mut q = vec![0.0; m_subs];
        let mut wgt = vec![0.0; m_subs];
        let mut present = vec![false; m_subs];
        for l in 0..cfg.l_bits {
            let mut total = 0.0;
            let mut used = 0;
            for m in 0..m_subs {
                match state.filter_replica(pi, m, l) {
                    Some(v) => {
                        let slot = state
                            .replica_slot(pi, m, l)
                            .expect("filtered replica has a slot");
                        q[m] = v;
                        wgt[m] = weights[slot];
                        present[m] = true;
                        total += v * wgt[m];
                        used += 1;
                    }
                    None => present[m] = false,
                }
            }
            if used == 0 {
                continue;
            }
            // Extrinsic estimate per replica: drop the replica's own term.
            for m in 0..m_subs {
                if present[m] {
                    block[m * cfg.l_bits + l] = (total - q[m] * wgt[m]).tanh();
                }
            }
            // All-replica combiner input, sign-corrected by the true bit,
            // feeds the per-packet SINR measurement.
            let v = total * p.bits[l];
            sum += v;
            sumsq += v * v;
            count += 1;
        }
        let sinr = if count == 0 {
            0.0
        } else {
            let mean = sum / count as f64;
            let var = (sumsq / count as f64 - mean * mean).max(0.0);
            if var == 0.0 {
                f64::INFINITY
            } else {
                mean * mean / var
            }
        };
        PacketUpdate {
            estimates: Some(block),
            sinr,
        }
    });

    let mut sinrs = Vec::with_capacity(state.packets.len());
    for (pi, up) in updates.iter().enumerate() {
        sinrs.push(up.sinr);
        if let Some(block) = &up.estimates {
            let off = state.packets[pi].est_offset;
            state.estimates[off..off + block.len()].copy_from_slice(block);
        }
    }
    state.sinr_history.push(sinrs);

    // 2. Reconstruct and subtract, then refresh the per-slot variances.
    state.rebuild_residual();
    state.xhat = state.measure_xhat();
    state.xhat_history.push(state.xhat.clone());
    state.iteration += 1;
}

impl LinkSimState {
    fn rebuild_residual(&mut self) {
        let cfg = self.cfg;
        let amp = (cfg.power / cfg.m_substreams as f64).sqrt();
        let scale = 1.0 / (cfg.n_dims as f64).sqrt();
        let blocks: Vec<Vec<f64>> = exec::map_indexed(cfg.n_slots, |slot| {
            let mut block = self.received[slot * self.block..(slot + 1) * self.block].to_vec();
            for &(pi, sec) in &self.slot_packets[slot] {
                let p = &self.packets[pi];
                for r in &p.by_section[sec] {
                    let est =
                        self.estimates[p.est_offset + r.sub as usize * cfg.l_bits + r.bit as usize];
                    if est == 0.0 {
                        continue;
                    }
                    let coeff = amp * est * scale;
                    let sig = self.signatures.chips(p.stream, r.sub as usize);
                    let out = &mut block[r.chan_use as usize * cfg.n_dims..];
                    for (o, c) in out[..cfg.n_dims].iter_mut().zip(sig) {
                        *o -= coeff * c;
                    }
                }
            }
            block
        });
        for (slot, block) in blocks.into_iter().enumerate() {
            self.residual[slot * self.block..(slot + 1) * self.block].copy_from_slice(&block);
        }
    }
}

/// Decode-and-cancel step of the modified SIC receiver: packets whose
/// measured SINR exceeds `theta` are marked decoded and their estimates
/// replaced by the true bits (the stand-in for a capacity-achieving code at
/// threshold), then fully subtracted.
pub fn sic_decode_step(state: &mut LinkSimState, theta: Snr) -> Result<()> {
    let sinrs = state
        .sinr_history
        .last()
        .ok_or_else(|| Error::Config("sic decode needs a cancellation iteration first".into()))?
        .clone();
    let th = theta.value();
    let cfg = state.cfg;
    let mut newly = Vec::new();
    for pi in 0..state.packets.len() {
        if !state.packets[pi].decoded && sinrs[pi] > th {
            state.packets[pi].decoded = true;
            newly.push(pi);
            let off = state.packets[pi].est_offset;
            for m in 0..cfg.m_substreams {
                for l in 0..cfg.l_bits {
                    state.estimates[off + m * cfg.l_bits + l] = state.packets[pi].bits[l];
                }
            }
        }
    }
    let changed = !newly.is_empty();
    state.decoded_history.push(newly);
    if changed {
        state.rebuild_residual();
        state.xhat = state.measure_xhat();
        // The step amends the iteration it follows, so the recorded history
        // reflects the post-decode state.
        *state.xhat_history.last_mut().expect("history nonempty") = state.xhat.clone();
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Full runs
// ---------------------------------------------------------------------------

/// Per-run results: config echo, per-iteration per-slot variance estimates,
/// per-iteration per-packet SINR, and the decoded sets.
#[derive(Debug, Clone, Serialize)]
pub struct LinkSimReport {
    pub config: LinkSimConfig,
    pub alpha: f64,
    /// Packet (stream, index, start_slot) triples, in packet-id order.
    pub packets: Vec<(usize, usize, usize)>,
    /// x-hat per iteration (index 0 is the uncancelled world) per slot.
    pub x_hat: Vec<Vec<f64>>,
    /// Measured per-packet SINR per cancellation iteration. Infinite values
    /// (decoded packets) serialize as null.
    pub packet_sinr: Vec<Vec<f64>>,
    /// Newly decoded packet ids per SIC step; empty in PIC mode.
    pub decoded: Vec<Vec<usize>>,
}

/// Run `iterations` receiver iterations on a freshly generated world.
pub fn run(cfg: &LinkSimConfig, mode: ReceiverMode, theta: Snr) -> Result<LinkSimReport> {
    let mut state = generate_world(cfg)?;
    for _ in 0..cfg.iterations {
        pic_iteration(&mut state);
        if mode == ReceiverMode::ModifiedSic {
            sic_decode_step(&mut state, theta)?;
        }
    }
    Ok(LinkSimReport {
        config: *cfg,
        alpha: cfg.alpha(),
        packets: state
            .packets
            .iter()
            .map(|p| (p.stream, p.index, p.start_slot))
            .collect(),
        x_hat: state.xhat_history.clone(),
        packet_sinr: state.sinr_history.clone(),
        decoded: state.decoded_history.clone(),
    })
}

/// Run independent trials (one world per seed) in parallel.
pub fn run_trials(
    cfg: &LinkSimConfig,
    seeds: &[u64],
    mode: ReceiverMode,
    theta: Snr,
) -> Result<Vec<LinkSimReport>> {
    if seeds.is_empty() {
        return Err(Error::Config("need at least one seed".into()));
    }
    let runs: Vec<Result<LinkSimReport>> = exec::map_indexed(seeds.len(), |i| {
        let mut c = *cfg;
        c.seed = seeds[i];
        run(&c, mode, theta)
    });
    runs.into_iter().collect()
}

/// Average the per-iteration per-slot variance estimates across reports.
pub fn mean_xhat(reports: &[LinkSimReport]) -> Vec<Vec<f64>> {
    assert!(!reports.is_empty());
    let iters = reports[0].x_hat.len();
    let slots = reports[0].x_hat[0].len();
    let mut out = vec![vec![0.0; slots]; iters];
    for r in reports {
        for (i, row) in r.x_hat.iter().enumerate() {
            for (u, v) in row.iter().enumerate() {
                out[i][u] += v;
            }
        }
    }
    let n = reports.len() as f64;
    for row in &mut out {
        for v in row {
            *v /= n;
        }
    }
    out
}

#[cfg(test)]
mod tests;
