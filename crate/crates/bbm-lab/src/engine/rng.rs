//! Counter-based random streams.
//!
//! Every particle (and every replication) owns its own generator, keyed by a
//! 64-bit stream id hashed together with the master seed. Realizations of a
//! subtree therefore do not depend on traversal order, and replications can be
//! farmed out to any number of threads without changing a single draw.
//!
//! The generator is xoshiro256++ seeded through a SplitMix64 expansion of the
//! (seed, stream) pair — the "documented counter hash" used everywhere in this
//! crate: `state = sm(sm(seed ^ GAMMA) ^ stream)`, then four SplitMix64 steps
//! produce the initial xoshiro state.

use rand::RngCore;

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// One SplitMix64 step.
#[inline]
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GAMMA);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stateless hash of two words; used to derive child stream ids and
/// replication seeds.
#[inline]
pub fn mix(a: u64, b: u64) -> u64 {
    let mut s = a ^ b.rotate_left(32).wrapping_mul(0xD6E8_FEB8_6659_FD93);
    let first = splitmix64(&mut s);
    first ^ splitmix64(&mut s)
}

/// Seed for replication `index` under a master seed. Documented contract:
/// changing the thread count or scheduling never changes replication seeds.
#[inline]
pub fn replication_seed(master_seed: u64, index: u64) -> u64 {
    mix(master_seed, index)
}

/// xoshiro256++ keyed by (master seed, stream id).
#[derive(Debug, Clone)]
pub struct StreamRng {
    s: [u64; 4],
}

impl StreamRng {
    pub fn from_stream(master_seed: u64, stream: u64) -> Self {
        let mut state = master_seed ^ GAMMA;
        let _ = splitmix64(&mut state);
        state ^= stream;
        let s = [
            splitmix64(&mut state),
            splitmix64(&mut state),
            splitmix64(&mut state),
            splitmix64(&mut state),
        ];
        // the all-zero state is a fixed point of xoshiro
        if s == [0, 0, 0, 0] {
            return Self {
                s: [GAMMA, 1, 2, 3],
            };
        }
        Self { s }
    }

    #[inline]
    fn step(&mut self) -> u64 {
        let s = &mut self.s;
        let result = s[0].wrapping_add(s[3]).rotate_left(23).wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }
}

impl RngCore for StreamRng {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        (self.step() >> 32) as u32
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.step()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        let mut chunks = dst.chunks_exact_mut(8);
        for chunk in &mut chunks {
            chunk.copy_from_slice(&self.step().to_le_bytes());
        }
        let rem = chunks.into_remainder();
        if !rem.is_empty() {
            let bytes = self.step().to_le_bytes();
            rem.copy_from_slice(&bytes[..rem.len()]);
        }
    }
}
