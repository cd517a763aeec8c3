//! Deterministic pseudo-random numbers for simulation runs.
//!
//! Every run derives all of its randomness from the scenario seed through
//! named substreams, so enabling or reconfiguring one feature (say, traffic)
//! never shifts the draws seen by another (say, mobility). The generator is
//! xoshiro256** seeded through splitmix64, both pinned to the reference
//! constants so independent implementations can reproduce traces bit for bit.

/// Substream domains. Each (domain, index) pair owns an independent stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamDomain {
    /// Waypoints, speeds and initial placement; one stream per node.
    Mobility = 1,
    /// Random flow generation.
    Traffic = 2,
    /// Per-node protocol randomness (beacon phase offsets).
    Protocol = 3,
}

#[inline]
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// xoshiro256** with the rotl(s1*5,7)*9 scrambler.
#[derive(Debug, Clone)]
pub struct Rng {
    s: [u64; 4],
}

impl Rng {
    /// Expands a 64-bit seed into the full state via splitmix64, per the
    /// generator author's recommendation.
    pub fn from_seed(seed: u64) -> Self {
        let mut sm = seed;
        Rng {
            s: [
                splitmix64(&mut sm),
                splitmix64(&mut sm),
                splitmix64(&mut sm),
                splitmix64(&mut sm),
            ],
        }
    }

    /// Independent stream for (scenario seed, domain, index).
    pub fn substream(seed: u64, domain: StreamDomain, index: u64) -> Self {
        let mut tag = ((domain as u64) << 32) ^ index;
        let salt = splitmix64(&mut tag);
        Rng::from_seed(seed ^ salt)
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let result = self.s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform in [0, 1) using the high 53 bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    #[inline]
    pub fn range_f64(&mut self, lo: f64, hi: f64) -> f64 {
        lo + self.next_f64() * (hi - lo)
    }

    /// Uniform in 0..n. Modulo reduction; the bias is far below anything a
    /// 40-node scenario can observe, and the rule is trivially portable.
    #[inline]
    pub fn below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        self.next_u64() % n
    }
}
