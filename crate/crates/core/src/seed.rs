//! Seed derivation. Every random stream in the engine is keyed by a path of
//! labels hashed together with the global seed, so streams never alias and
//! adding work in one place does not reshuffle another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// 64-bit FNV-1a over raw bytes; stable across platforms and releases.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// One component of a derivation path.
#[derive(Debug, Clone, Copy)]
pub enum Key<'a> {
    Str(&'a str),
    Int(u64),
}

impl<'a> From<&'a str> for Key<'a> {
    fn from(s: &'a str) -> Self {
        Key::Str(s)
    }
}

impl<'a> From<&'a String> for Key<'a> {
    fn from(s: &'a String) -> Self {
        Key::Str(s)
    }
}

impl From<u64> for Key<'_> {
    fn from(v: u64) -> Self {
        Key::Int(v)
    }
}

impl From<usize> for Key<'_> {
    fn from(v: usize) -> Self {
        Key::Int(v as u64)
    }
}

impl From<u32> for Key<'_> {
    fn from(v: u32) -> Self {
        Key::Int(v as u64)
    }
}

pub fn derive(seed: u64, path: &[Key<'_>]) -> u64 {
    let mut h = splitmix(seed);
    for k in path {
        let v = match k {
            Key::Str(s) => fnv1a(s.as_bytes()) ^ 0x5354_5200,
            Key::Int(i) => splitmix(*i ^ 0x494e_5400),
        };
        h = splitmix(h ^ v);
    }
    h
}

pub fn rng(seed: u64, path: &[Key<'_>]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, path))
}

/// Builds a derivation path from heterogeneous keys.
#[macro_export]
macro_rules! seed_path {
    ($($k:expr),* $(,)?) => {
        &[$($crate::seed::Key::from($k)),*]
    };
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_values() {
        // frozen so that accidental changes to the derivation show up
        assert_eq!(fnv1a(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a(b"a"), 0xaf63_dc4c_8601_ec8c);
        let a = derive(42, seed_path!["scene", 3usize]);
        assert_eq!(a, derive(42, seed_path!["scene", 3usize]));
        assert_ne!(a, derive(42, seed_path!["scene", 4usize]));
        assert_ne!(a, derive(43, seed_path!["scene", 3usize]));
        assert_ne!(derive(1, seed_path!["ab", "c"]), derive(1, seed_path!["a", "bc"]));
    }
}
