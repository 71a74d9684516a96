//! Counter-based random streams keyed by `(seed, domain, index)`.
//!
//! Each path owns an independent ChaCha stream, so the sample of path `p`
//! never depends on how many other paths exist or on the order of evaluation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const DOMAIN_SIMULATE: u64 = 0x5349_4d55;
pub const DOMAIN_PROBE: u64 = 0x5052_4f42;
pub const DOMAIN_DEMO: u64 = 0x4445_4d4f;

fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent generator for item `index` within `domain` under `seed`.
pub fn stream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut state = seed ^ domain.rotate_left(32);
    let mut key = [0u8; 32];
    for chunk in key.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}
