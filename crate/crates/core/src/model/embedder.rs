//! Frozen word-embedding backends for the convolutional branch.
//!
//! The trait stands in for a pretrained contextual encoder used purely as a
//! feature extractor. The shipped [`HashEmbedder`] derives a stable
//! pseudo-random vector per surface token, which keeps the whole pipeline
//! deterministic and offline; a real pretrained extractor plugs in behind the
//! same trait.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::context::SEPARATOR_TOKEN;
use crate::nn::sample_normal;

/// Reserved transformer-branch id for the leading classification token.
pub const CLS_ID: usize = 0;
/// Reserved transformer-branch id for the separator token.
pub const SEP_ID: usize = 1;

/// Maps tokens to a row-per-token embedding matrix. Implementations are
/// frozen: no gradients flow into them.
pub trait EmbeddingBackend: Send + Sync {
    fn dim(&self) -> usize;
    fn embed(&self, tokens: &[String]) -> Array2<f64>;
}

/// Deterministic hash-seeded embeddings: each distinct token maps to a fixed
/// draw from a seeded normal stream, scaled to roughly unit row norm.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    dim: usize,
    seed: u64,
}

impl HashEmbedder {
    pub fn new(dim: usize, seed: u64) -> Self {
        HashEmbedder { dim, seed }
    }
}

impl EmbeddingBackend for HashEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, tokens: &[String]) -> Array2<f64> {
        let mut out = Array2::zeros((tokens.len(), self.dim));
        let scale = 1.0 / (self.dim as f64).sqrt();
        for (i, token) in tokens.iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(fnv1a64(token.as_bytes()) ^ self.seed);
            for j in 0..self.dim {
                out[[i, j]] = sample_normal(&mut rng) * scale;
            }
        }
        out
    }
}

/// 64-bit FNV-1a. Stable across platforms and versions, unlike the std
/// hasher.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Transformer-branch token id: reserved ids for CLS and the separator, all
/// other tokens hashed into the remaining buckets.
pub fn token_id(token: &str, vocab: usize) -> usize {
    if token == SEPARATOR_TOKEN {
        return SEP_ID;
    }
    2 + (fnv1a64(token.as_bytes()) % (vocab as u64 - 2)) as usize
}
