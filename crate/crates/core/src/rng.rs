//! Seed derivation and named random substreams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent substreams of one simulation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Arrivals = 1,
    LocalMeans = 2,
    LocalDraws = 3,
    Service = 4,
    ServerPath = 5,
}

/// SplitMix64 finaliser.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replication `index` under `master_seed`: `splitmix64(master_seed + index)`.
pub fn replication_seed(master_seed: u64, index: u64) -> u64 {
    splitmix64(master_seed.wrapping_add(index))
}

pub fn substream(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
