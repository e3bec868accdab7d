//! Analysis and simulation toolkit for spatially coupled sparse-graph
//! modulation with iterative interference-cancellation receivers.
//!
//! The crate has four parts:
//!
//! * [`math`] — scalar special functions: the bit-MSE transfer function g,
//!   binary-input AWGN capacity with its inverse, and the AWGN capacity
//!   fixed point per SNR-per-bit;
//! * [`de`] — density evolution of the SINR/variance profiles for the
//!   two-stage PIC and modified SIC receivers, discrete and continuous
//!   models, with decoding-front tracking;
//! * [`capacity`] — spectral-efficiency formulas and the receiver-curve
//!   sweeps over load and total system SNR;
//! * [`linksim`] — a seeded Monte Carlo link-level simulator of the
//!   staggered-packet transmitter and the iterative receiver, used to
//!   validate density evolution at finite size.
//!
//! Hot loops run on rayon when the default `parallel` feature is enabled and
//! fall back to sequential execution without it; results are bit-identical
//! either way (see [`exec`]).

pub mod capacity;
pub mod de;
pub mod error;
pub mod exec;
pub mod linksim;
pub mod math;

pub use error::{Error, Result};
pub use math::{CapacityValue, EbN0, Snr};
