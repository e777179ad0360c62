//! Stable 64-bit mixing, used wherever a value must hash identically across
//! runs and platforms: per-behavior seed derivation and the path-keyed
//! randomness of the synthetic oracle. `std::hash` is deliberately avoided
//! here because its output is not guaranteed stable between releases.

/// splitmix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds a byte string into a seed.
pub fn hash_bytes(seed: u64, bytes: &[u8]) -> u64 {
    let mut h = mix64(seed ^ 0x5bf0_3635_16f5_5b4d);
    for chunk in bytes.chunks(8) {
        let mut word = [0u8; 8];
        word[..chunk.len()].copy_from_slice(chunk);
        h = mix64(h ^ u64::from_le_bytes(word) ^ chunk.len() as u64);
    }
    h
}

/// Folds a word sequence into a seed.
pub fn hash_words(seed: u64, words: impl IntoIterator<Item = u64>) -> u64 {
    let mut h = mix64(seed ^ 0x243f_6a88_85a3_08d3);
    for w in words {
        h = mix64(h ^ w);
    }
    h
}

/// Maps a hash to the unit interval using the top 53 bits.
#[inline]
pub fn unit_f64(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
