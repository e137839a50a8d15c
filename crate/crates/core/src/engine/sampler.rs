//! Reproducible initial conditions.
//!
//! Each draw is keyed by `(seed, particle id, reset epoch)`: the seed selects
//! the ChaCha key, the particle id selects the stream and the epoch selects
//! a block offset within it. A particle's samples therefore do not depend on
//! which other particles were reset, or in which order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::Interval;

const WORDS_PER_EPOCH: u128 = 1 << 32;

fn rng_for(seed: u64, particle: u64, epoch: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(particle);
    rng.set_word_pos(epoch as u128 * WORDS_PER_EPOCH);
    rng
}

/// Uniform single-precision sample from the half-open interval `[lo, hi)`.
pub fn uniform_f32(rng: &mut impl Rng, range: Interval) -> f32 {
    let u: f64 = rng.random();
    let mut x = (range.lo + u * (range.hi - range.lo)) as f32;
    // rounding to f32 can land on or beyond either end
    while x as f64 >= range.hi && x > f32::MIN {
        x = x.next_down();
    }
    while (x as f64) < range.lo && x < f32::MAX && (x.next_up() as f64) < range.hi {
        x = x.next_up();
    }
    x
}

/// Fill `out` with one point drawn uniformly from the box `ranges`.
pub fn sample_point(seed: u64, particle: u64, epoch: u32, ranges: &[Interval], out: &mut [f32]) {
    let mut rng = rng_for(seed, particle, epoch);
    for (o, r) in out.iter_mut().zip(ranges) {
        *o = uniform_f32(&mut rng, *r);
    }
}
