//! Scalar special functions and the domain types they operate on.
//!
//! Everything here is pure and deterministic: the bit-MSE transfer function
//! `g`, the binary-input AWGN channel capacity with its inverse, and the
//! AWGN capacity fixed point in terms of SNR per bit. Infinite SINR is a
//! first-class value (a decoded and cancelled stream), never an overflow.

use std::fmt;

use crate::error::{Error, Result};

pub mod quad;
pub mod roots;

use quad::rule;

/// Above this SINR the bit MSE is returned as exactly 0. The true value at
/// the cutoff is below 1e-13, two orders of magnitude under the evaluation
/// tolerance, and the quadrature nodes no longer resolve the integrand much
/// beyond it.
pub const MSE_G_CUTOFF: f64 = 60.0;

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// A nonnegative signal-to-noise-and-interference ratio, extended with an
/// explicit infinity for decoded (fully cancelled) streams.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Snr(f64);

impl Snr {
    pub const ZERO: Snr = Snr(0.0);
    pub const INFINITY: Snr = Snr(f64::INFINITY);

    pub fn new(value: f64) -> Result<Snr> {
        if value.is_nan() || value < 0.0 {
            return Err(Error::Domain(format!(
                "snr must be nonnegative or +inf, got {value}"
            )));
        }
        Ok(Snr(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }
}

impl fmt::Display for Snr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// Mutual information in bits per real channel dimension.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct CapacityValue(f64);

impl CapacityValue {
    pub const ZERO: CapacityValue = CapacityValue(0.0);

    pub fn new(bits_per_use: f64) -> Result<CapacityValue> {
        if !bits_per_use.is_finite() || bits_per_use < 0.0 {
            return Err(Error::Domain(format!(
                "capacity must be finite and nonnegative, got {bits_per_use}"
            )));
        }
        Ok(CapacityValue(bits_per_use))
    }

    pub fn bits_per_use(self) -> f64 {
        self.0
    }
}

/// SNR per information bit, stored on the linear scale.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct EbN0 {
    ratio: f64,
}

impl EbN0 {
    pub fn new(ratio: f64) -> Result<EbN0> {
        if !ratio.is_finite() || ratio <= 0.0 {
            return Err(Error::Domain(format!(
                "eb/n0 must be positive and finite, got {ratio}"
            )));
        }
        Ok(EbN0 { ratio })
    }

    pub fn from_db(db: f64) -> Result<EbN0> {
        EbN0::new(10f64.powf(db / 10.0))
    }

    pub fn ratio(self) -> f64 {
        self.ratio
    }

    pub fn db(self) -> f64 {
        10.0 * self.ratio.log10()
    }
}

// ---------------------------------------------------------------------------
// Bit-MSE transfer function g
// ---------------------------------------------------------------------------

/// Mean squared error of the tanh conditional-expectation bit estimate at
/// SINR `a`: E[(1 - tanh(a + xi*sqrt(a)))^2] with xi standard normal.
///
/// Strictly decreasing from g(0) = 1 to g(+inf) = 0.
pub fn mse_g(a: Snr) -> f64 {
    g_raw(a.value())
}

/// Unchecked version of [`mse_g`] for the profile kernels; `a` must be
/// nonnegative or +inf.
pub(crate) fn g_raw(a: f64) -> f64 {
    debug_assert!(a >= 0.0);
    if a == 0.0 {
        return 1.0;
    }
    if a >= MSE_G_CUTOFF {
        // Covers a = +inf as well.
        return 0.0;
    }
    let s = a.sqrt();
    rule().expect(|xi| {
        let e = 1.0 - (a + s * xi).tanh();
        e * e
    })
}

// ---------------------------------------------------------------------------
// Binary-input AWGN capacity and inverse
// ---------------------------------------------------------------------------

/// log2(1 + e^y), stable for large positive y where e^y overflows.
fn log2_1p_exp(y: f64) -> f64 {
    if y > 35.0 {
        // log(1 + e^y) = y + log(1 + e^-y); the correction is below 1e-15.
        y * std::f64::consts::LOG2_E
    } else {
        y.exp().ln_1p() * std::f64::consts::LOG2_E
    }
}

/// Mutual information of a BPSK input on the real AWGN channel at SNR
/// `gamma`, in bits per channel use: 1 - E[log2(1 + e^(-2g - 2*sqrt(g)*xi))].
///
/// Monotone nondecreasing with range [0, 1]; `gamma = +inf` maps to 1.
pub fn biawgn_capacity(gamma: Snr) -> CapacityValue {
    CapacityValue(biawgn_raw(gamma.value()))
}

pub(crate) fn biawgn_raw(gamma: f64) -> f64 {
    debug_assert!(gamma >= 0.0);
    if gamma == 0.0 {
        return 0.0;
    }
    if gamma.is_infinite() {
        return 1.0;
    }
    let s = gamma.sqrt();
    let loss = rule().expect(|xi| log2_1p_exp(-2.0 * gamma - 2.0 * s * xi));
    (1.0 - loss).clamp(0.0, 1.0)
}

/// The SNR at which the BPSK mutual information equals `rate`.
///
/// Requires `0 <= rate < 1`; found by bracketed bisection on the monotone
/// capacity curve.
pub fn biawgn_capacity_inverse(rate: CapacityValue) -> Result<Snr> {
    let r = rate.bits_per_use();
    if !(0.0..1.0).contains(&r) {
        return Err(Error::Domain(format!(
            "biawgn capacity inverse needs a rate in [0, 1), got {r}"
        )));
    }
    if r == 0.0 {
        return Ok(Snr::ZERO);
    }
    let mut hi = 1.0;
    while biawgn_raw(hi) <= r {
        hi *= 2.0;
        if hi > 1e9 {
            return Err(Error::Invariant(format!(
                "failed to bracket biawgn inverse at rate {r}"
            )));
        }
    }
    let gamma = roots::bisect(|g| biawgn_raw(g) - r, 0.0, hi);
    Snr::new(gamma)
}

// ---------------------------------------------------------------------------
// AWGN capacity as a function of SNR per bit
// ---------------------------------------------------------------------------

/// Real AWGN channel capacity for a given SNR per bit: the positive root C of
/// C = 1/2 log2(1 + 2 C eb/n0). Returns 0 at or below the per-bit Shannon
/// limit eb/n0 = ln 2, where the positive root degenerates.
pub fn awgn_capacity_fixed_point(ebn0: EbN0) -> CapacityValue {
    let r = ebn0.ratio();
    if r <= std::f64::consts::LN_2 {
        return CapacityValue::ZERO;
    }
    // ln_1p keeps f accurate near c = 0, where the bracket starts.
    let f = |c: f64| 0.5 * (2.0 * c * r).ln_1p() / std::f64::consts::LN_2 - c;
    // f > 0 on (0, C*) by concavity, so any tiny positive lower end works.
    let mut hi = 1.0;
    while f(hi) > 0.0 {
        hi *= 2.0;
    }
    CapacityValue(roots::bisect(f, 1e-30, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn snr_rejects_negative_and_nan() {
        assert!(Snr::new(-1e-12).is_err());
        assert!(Snr::new(f64::NAN).is_err());
        assert!(Snr::new(0.0).is_ok());
        assert!(Snr::new(f64::INFINITY).unwrap().is_infinite());
    }

    #[test]
    fn ebn0_db_is_consistent() {
        for db in [-5.0, 0.0, 3.0, 10.0] {
            let e = EbN0::from_db(db).unwrap();
            assert!((e.db() - db).abs() < 1e-12);
            let back = EbN0::new(e.ratio()).unwrap();
            assert!(((back.db() - db) / db.abs().max(1.0)).abs() < 1e-12);
        }
        assert!(EbN0::new(0.0).is_err());
        assert!(EbN0::new(-1.0).is_err());
    }

    #[test]
    fn g_at_zero_is_one() {
        assert!((mse_g(Snr::ZERO) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn g_at_infinity_is_zero() {
        assert_eq!(mse_g(Snr::INFINITY), 0.0);
    }

    #[test]
    fn g_is_strictly_decreasing_and_in_range() {
        let mut prev = f64::INFINITY;
        for i in 0..=100 {
            let a = 50.0 * i as f64 / 100.0;
            let g = g_raw(a);
            assert!((0.0..=1.0).contains(&g), "g({a}) = {g}");
            assert!(g < prev, "g not strictly decreasing at a = {a}");
            prev = g;
        }
    }

    #[test]
    fn biawgn_endpoints() {
        assert_eq!(biawgn_raw(0.0), 0.0);
        assert!((biawgn_raw(1e4) - 1.0).abs() < 1e-9);
        assert_eq!(biawgn_capacity(Snr::INFINITY).bits_per_use(), 1.0);
    }

    #[test]
    fn biawgn_monotone_and_bounded_by_gaussian() {
        let mut prev = -1.0;
        for i in 0..=80 {
            let gamma = 10f64.powf(-3.0 + 5.0 * i as f64 / 80.0);
            let c = biawgn_raw(gamma);
            assert!(c >= prev - 1e-12, "not monotone at gamma = {gamma}");
            let shannon = 0.5 * (1.0 + gamma).log2();
            assert!(c <= shannon.min(1.0) + 1e-9, "bound violated at {gamma}");
            prev = c;
        }
    }

    #[test]
    fn biawgn_low_snr_quadratic_correction_is_tame() {
        // (C(gamma) - gamma/(2 ln 2)) / gamma^2 stays bounded and keeps one
        // sign across the low-SNR decade span.
        let lin = 0.5 / std::f64::consts::LN_2;
        for i in 0..=40 {
            let gamma = 10f64.powf(-4.0 + 4.0 * i as f64 / 40.0);
            let q = (biawgn_raw(gamma) - lin * gamma) / (gamma * gamma);
            assert!(q < 0.0, "sign flip at gamma = {gamma}: {q}");
            assert!(q.abs() <= 10.0, "envelope exceeded at gamma = {gamma}: {q}");
        }
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(
            biawgn_capacity_inverse(CapacityValue::ZERO)
                .unwrap()
                .value(),
            0.0
        );
        let c_half = biawgn_capacity(Snr::new(0.5).unwrap());
        let back = biawgn_capacity_inverse(c_half).unwrap();
        assert!((back.value() - 0.5).abs() < 1e-7);
        let g = biawgn_capacity_inverse(CapacityValue::new(0.5).unwrap()).unwrap();
        assert!((biawgn_raw(g.value()) - 0.5).abs() < 1e-9);
        assert!(biawgn_capacity_inverse(CapacityValue::new(1.0).unwrap()).is_err());
    }

    #[test]
    fn awgn_fixed_point_closed_forms() {
        let c1 = awgn_capacity_fixed_point(EbN0::new(1.0).unwrap());
        assert!((c1.bits_per_use() - 0.5).abs() < 1e-9);
        let c2 = awgn_capacity_fixed_point(EbN0::new(1.5).unwrap());
        assert!((c2.bits_per_use() - 1.0).abs() < 1e-9);
        let c0 = awgn_capacity_fixed_point(EbN0::new(std::f64::consts::LN_2).unwrap());
        assert_eq!(c0.bits_per_use(), 0.0);
    }

    #[test]
    fn awgn_fixed_point_residual() {
        for db in [0.0, 2.0, 5.0, 10.0, 20.0] {
            let e = EbN0::from_db(db).unwrap();
            let c = awgn_capacity_fixed_point(e).bits_per_use();
            if c > 0.0 {
                let resid = (c - 0.5 * (1.0 + 2.0 * c * e.ratio()).log2()).abs();
                assert!(resid <= 1e-9, "residual {resid} at {db} dB");
            }
        }
    }

    proptest! {
        #[test]
        fn inverse_round_trips(rate in 0.01f64..0.99) {
            let gamma = biawgn_capacity_inverse(CapacityValue::new(rate).unwrap()).unwrap();
            let back = biawgn_raw(gamma.value());
            prop_assert!((back - rate).abs() < 1e-6);
        }

        #[test]
        fn g_pairs_order(a in 0.0f64..50.0, d in 0.01f64..10.0) {
            let hi = (a + d).min(59.0);
            prop_assert!(g_raw(a) > g_raw(hi));
        }
    }
}
