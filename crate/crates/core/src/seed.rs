//! Seed derivation and the crate-wide random generator.
//!
//! Every randomized routine takes an explicit `u64` seed. Child seeds are
//! derived from a root seed and a path of labels and indices with a fixed
//! hash chain, so an experiment can be replayed exactly and ports in other
//! languages can reproduce the same seeds.
//!
//! Derivation: SHA-256 over
//!
//! ```text
//! "sparse-ksum/seed/v1" || root (u64 LE)
//!   || for each segment: tag (0x00 label, 0x01 index) || len (u32 LE) || payload
//! ```
//!
//! where a label payload is its UTF-8 bytes and an index payload is its
//! `u64` little-endian encoding. The child seed is the first 8 digest bytes
//! read as a little-endian `u64`.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

/// The generator used by every sampler.
pub type KsumRng = ChaCha12Rng;

const DOMAIN: &[u8] = b"sparse-ksum/seed/v1";

/// One element of a seed-derivation path.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathSegment<'a> {
    Label(&'a str),
    Index(u64),
}

impl<'a> From<&'a str> for PathSegment<'a> {
    fn from(s: &'a str) -> Self {
        PathSegment::Label(s)
    }
}

impl From<u64> for PathSegment<'_> {
    fn from(i: u64) -> Self {
        PathSegment::Index(i)
    }
}

impl From<usize> for PathSegment<'_> {
    fn from(i: usize) -> Self {
        PathSegment::Index(i as u64)
    }
}

/// Derives a child seed from `root` and `path`.
pub fn derive_seed(root: u64, path: &[PathSegment<'_>]) -> u64 {
    let mut h = Sha256::new();
    h.update(DOMAIN);
    h.update(root.to_le_bytes());
    for seg in path {
        match seg {
            PathSegment::Label(s) => {
                h.update([0u8]);
                h.update((s.len() as u32).to_le_bytes());
                h.update(s.as_bytes());
            }
            PathSegment::Index(i) => {
                h.update([1u8]);
                h.update(8u32.to_le_bytes());
                h.update(i.to_le_bytes());
            }
        }
    }
    let digest = h.finalize();
    let mut out = [0u8; 8];
    out.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(out)
}

/// Shorthand for the common `[label, index]` path.
pub fn child_seed(root: u64, label: &str, index: u64) -> u64 {
    derive_seed(root, &[PathSegment::Label(label), PathSegment::Index(index)])
}

/// Builds the generator for a seed.
pub fn rng_from_seed(seed: u64) -> KsumRng {
    KsumRng::seed_from_u64(seed)
}
