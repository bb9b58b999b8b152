//! Counter-based stream derivation.
//!
//! Every random draw in the suite comes from a ChaCha8 stream whose seed is a
//! pure function of `(master seed, purpose, realization, index)`:
//!
//! ```text
//! h = splitmix64(master ^ PURPOSE_TAG)
//! h = splitmix64(h ^ realization)
//! h = splitmix64(h ^ index)
//! rng = ChaCha8Rng::seed_from_u64(h)
//! ```
//!
//! A field slice, a path-sampling batch or a bootstrap replicate can thus be
//! regenerated in isolation, and results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// What a stream is used for. Distinct purposes never share streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Purpose {
    FieldSlice,
    PathSampling,
    Bootstrap,
    Auxiliary,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::FieldSlice => 0x6669_656c_645f_736c,
            Purpose::PathSampling => 0x7061_7468_5f73_6d70,
            Purpose::Bootstrap => 0x626f_6f74_7374_7270,
            Purpose::Auxiliary => 0x6175_7869_6c69_6172,
        }
    }
}

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub fn stream_seed(master: u64, purpose: Purpose, realization: u64, index: u64) -> u64 {
    let h = splitmix64(master ^ purpose.tag());
    let h = splitmix64(h ^ realization);
    splitmix64(h ^ index)
}

pub fn stream(master: u64, purpose: Purpose, realization: u64, index: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(stream_seed(master, purpose, realization, index))
}
