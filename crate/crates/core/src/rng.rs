//! Counter-based random streams.
//!
//! Every draw in this crate is a pure function of an integer key, built by
//! folding a seed with role/index constants. Results are therefore
//! independent of thread count and iteration order, and any latent can be
//! regenerated in isolation.

/// Stream roles, folded into keys so that e.g. `xi[3]` and `eta[3]` never
/// collide.
pub mod role {
    pub const XI: u64 = 0x01;
    pub const ETA: u64 = 0x02;
    pub const ZETA: u64 = 0x03;
    pub const FRESH_XI: u64 = 0x11;
    pub const FRESH_ETA: u64 = 0x12;
    pub const FRESH_ZETA: u64 = 0x13;
    pub const KERNEL_PROBE: u64 = 0x21;
    pub const REPLICATE: u64 = 0x22;
    pub const MIX_SPLIT_A: u64 = 0x31;
    pub const MIX_SPLIT_B: u64 = 0x32;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Folds one word into a running key.
#[inline]
pub fn mix(key: u64, word: u64) -> u64 {
    splitmix64(key ^ word.wrapping_mul(0xd1b54a32d192ed03))
}

/// Builds a key from a seed and a list of words.
#[inline]
pub fn key(seed: u64, words: &[u64]) -> u64 {
    let mut k = splitmix64(seed);
    for &w in words {
        k = mix(k, w);
    }
    k
}

/// Folds a string tag into a key (eight bytes at a time).
pub fn mix_str(mut k: u64, tag: &str) -> u64 {
    for chunk in tag.as_bytes().chunks(8) {
        let mut w = [0u8; 8];
        w[..chunk.len()].copy_from_slice(chunk);
        k = mix(k, u64::from_le_bytes(w));
    }
    mix(k, tag.len() as u64)
}

/// Uniform on the open interval (0, 1), 53 significant bits.
///
/// Strictly inside the interval so quantile transforms never see 0 or 1.
#[inline]
pub fn uniform(key: u64) -> f64 {
    // Second mixing round decorrelates structured key patterns.
    let bits = splitmix64(splitmix64(key));
    ((bits >> 11) as f64 + 0.5) * (1.0 / 9007199254740992.0)
}

/// Uniform keyed by (seed, role, i, j).
#[inline]
pub fn uniform_at(seed: u64, role: u64, i: u64, j: u64) -> f64 {
    uniform(key(seed, &[role, i, j]))
}

/// A sequential stream for consumers that want many draws from one key.
#[derive(Debug, Clone)]
pub struct Stream {
    key: u64,
    counter: u64,
}

impl Stream {
    pub fn new(key: u64) -> Self {
        Stream { key, counter: 0 }
    }

    pub fn next_uniform(&mut self) -> f64 {
        self.counter += 1;
        uniform(mix(self.key, self.counter))
    }
}
