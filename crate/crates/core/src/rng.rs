//! Deterministic random streams.
//!
//! Every consumer draws from its own ChaCha8 stream addressed by
//! `(master seed, domain, index)`, so results do not depend on how trials are
//! scheduled across worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream domains. Distinct domains never share a ChaCha key.
pub mod domain {
    pub const GEOMETRY: u64 = 1;
    pub const FRONTHAUL_MOMENTS: u64 = 2;
    pub const TRIALS: u64 = 3;
    pub const ERGODIC_RATE: u64 = 4;
    pub const CALIBRATION: u64 = 5;
    pub const ORACLE: u64 = 6;
}

pub fn stream(seed: u64, domain: u64, index: u64) -> SimRng {
    let key = seed ^ domain.wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(17);
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(index);
    rng
}
