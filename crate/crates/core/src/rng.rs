//! Counter-based random streams for reproducible parallel replications.
//!
//! A ChaCha key is expanded from the base seed; the 64-bit ChaCha stream id
//! packs `(rep_index, role)`. Each replication and each role therefore reads
//! its own disjoint keystream, whatever order the replications run in.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Separates the independent draws that make up one simulated sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamRole {
    VertexShock = 0,
    EdgeShock = 1,
    Observation = 2,
}

const ROLE_BITS: u32 = 2;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for `(base_seed, rep_index, role)`.
pub fn replication_rng(base_seed: u64, rep_index: u64, role: StreamRole) -> ChaCha8Rng {
    assert!(rep_index < (1 << (64 - ROLE_BITS)), "replication index too large");
    let mut key = [0u8; 32];
    let mut state = base_seed;
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream((rep_index << ROLE_BITS) | role as u64);
    rng
}
