//! Counter-based pseudorandom numbers.
//!
//! Every random quantity in this crate is a pure function of a 64-bit key and
//! a 64-bit counter. That gives random access (`value(key, i)` for scattered
//! `i` without generating the prefix), bitwise reproducibility across thread
//! counts, and cheap stream derivation for replicates. The generator is the
//! SplitMix64 output function evaluated at `key + i * GOLDEN`, i.e. the
//! canonical SplitMix64 sequence addressed by counter.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Raw 64-bit output at position `index` of the stream identified by `key`.
#[inline]
pub fn value(key: u64, index: u64) -> u64 {
    mix(key.wrapping_add(index.wrapping_mul(GOLDEN)).wrapping_add(GOLDEN))
}

/// Uniform draw in the open interval (0, 1); never returns 0 or 1 exactly,
/// so inverse-CDF transforms stay finite.
#[inline]
pub fn uniform(key: u64, index: u64) -> f64 {
    ((value(key, index) >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
}

/// Derives a child stream key from a parent key and a role label.
///
/// Labels keep independent uses (per-variable streams, replicates, Monte
/// Carlo estimators, permutation tests) on disjoint streams of the same
/// master seed.
pub fn derive(key: u64, label: &str) -> u64 {
    let mut k = mix(key ^ 0x6A09_E667_F3BC_C909);
    for &b in label.as_bytes() {
        k = mix(k ^ u64::from(b));
    }
    k
}

/// Derives a child stream key from a parent key and an integer tag
/// (replicate number, variable slot, ...).
#[inline]
pub fn derive_idx(key: u64, tag: u64) -> u64 {
    mix(key ^ mix(tag ^ 0x1F83_D9AB_FB41_BD6B))
}

/// Small stateful wrapper for the places that just need a sequential stream
/// (shuffles, permutation tests). Still a pure function of its key.
#[derive(Clone, Debug)]
pub struct Stream {
    key: u64,
    pos: u64,
}

impl Stream {
    pub fn new(key: u64) -> Self {
        Stream { key, pos: 0 }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let v = value(self.key, self.pos);
        self.pos += 1;
        v
    }

    #[inline]
    pub fn next_uniform(&mut self) -> f64 {
        let v = uniform(self.key, self.pos);
        self.pos += 1;
        v
    }

    /// Uniform integer in [0, n) by rejection; unbiased.
    pub fn next_below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % n;
            }
        }
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.next_below(i as u64 + 1) as usize;
            xs.swap(i, j);
        }
    }
}
