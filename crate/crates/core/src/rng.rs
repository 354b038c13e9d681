//! Reproducible random streams.
//!
//! Every random draw in the crate comes from a ChaCha20 generator (a
//! counter-based stream cipher), seeded with `ChaCha20Rng::seed_from_u64(seed)`
//! and then moved to a 64-bit stream id with `set_stream`. Two purposes that
//! share a seed use distinct stream ids, so e.g. the signal and the noise of an
//! instance are independent and each is reproducible on its own. Gaussian
//! variates use `rand_distr::StandardNormal`.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Stream ids used by the crate. Trial-indexed streams add the trial index
/// to the base id shifted into the upper 32 bits.
pub mod stream {
    pub const PRIOR_SAMPLE: u64 = 0;
    pub const SIGNAL: u64 = 1;
    pub const SIGNAL_V: u64 = 2;
    pub const NOISE: u64 = 3;
    pub const AMP_INIT: u64 = 4;
    pub const PINNING: u64 = 5;
    pub const REM: u64 = 6;
}

/// Generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Generator for one Monte-Carlo trial. Trials of the same seed never share
/// a stream, and the stream does not depend on any model parameter, which
/// gives common random numbers across parameter grids.
pub fn trial_rng(seed: u64, trial: usize, stream: u64) -> ChaCha20Rng {
    stream_rng(seed, ((trial as u64 + 1) << 32) | stream)
}
