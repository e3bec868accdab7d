//! Monte Carlo cross-checks of the quadrature-based special functions.
//! The estimators here simulate the channel directly and never touch the
//! quadrature code paths they validate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use sgmod_core::math::{biawgn_capacity, Snr};

/// Sampled BPSK mutual information: transmit u = +1 over y = u + n with
/// n ~ N(0, 1/gamma), and average the per-symbol information
/// 1 - log2(1 + exp(-2 y / sigma^2)).
fn mc_biawgn(gamma: f64, draws: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma2 = 1.0 / gamma;
    let sigma = sigma2.sqrt();
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for _ in 0..draws {
        let n: f64 = rng.sample(StandardNormal);
        let y = 1.0 + sigma * n;
        let llr = 2.0 * y / sigma2;
        let info = 1.0 - ((-llr).exp()).ln_1p() / std::f64::consts::LN_2;
        sum += info;
        sumsq += info * info;
    }
    let nn = draws as f64;
    let mean = sum / nn;
    let var = (sumsq / nn - mean * mean).max(0.0);
    (mean, (var / nn).sqrt())
}

#[test]
fn biawgn_capacity_matches_channel_simulation() {
    for (gamma, seed) in [(0.5, 11u64), (1.0, 12), (2.0, 13)] {
        let (mc, se) = mc_biawgn(gamma, 10_000_000, seed);
        let c = biawgn_capacity(Snr::new(gamma).unwrap()).bits_per_use();
        assert!(
            (c - mc).abs() <= 3.0 * se,
            "gamma = {gamma}: quadrature {c} vs simulated {mc} +- {se}"
        );
        println!(
            "biawgn oracle: gamma={gamma} quadrature {c:.7} vs MC {mc:.7} (3 SE = {:.1e})",
            3.0 * se
        );
    }
}
