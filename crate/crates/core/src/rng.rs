//! Reproducible, independent random streams keyed by `(seed, replica, purpose)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags so different uses of one replica never share draws.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum Purpose {
    Initial = 1,
    Dynamics = 2,
    Reference = 3,
    Auxiliary = 4,
}

/// ChaCha8 keyed by the master seed; the stream id encodes replica and purpose.
pub fn stream(seed: u64, replica: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((replica << 8) | purpose as u64);
    rng
}
