//! Deterministic random-number plumbing.
//!
//! Every stochastic stage (UE drop, shadowing/LOS draws, scheduling) pulls
//! from its own ChaCha stream derived from `(base seed, stream tag, drop
//! index)`, so campaigns are bit-reproducible and independent of worker
//! count or evaluation order.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tag for UE position/altitude draws.
pub const STREAM_DROP: u64 = 0x1;
/// Stream tag for LOS and shadowing draws.
pub const STREAM_CHANNEL: u64 = 0x2;
/// Stream tag for scheduling (UE activity) draws.
pub const STREAM_SCHEDULE: u64 = 0x3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a sub-seed from a base seed, a stream tag, and an index.
pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    splitmix64(base ^ splitmix64(stream ^ splitmix64(index)))
}

/// Seeded generator for one stream.
pub fn stream_rng(base: u64, stream: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, stream, index))
}

/// One standard-normal draw (Box-Muller, consumes two uniforms).
pub fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    // Open interval keeps ln() finite.
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
