use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::shingle::ShingleSet;

/// Mersenne prime 2^61 - 1, larger than any 32-bit shingle.
pub const MODULUS: u64 = (1 << 61) - 1;

/// `p` hash functions `h_i(x) = (a_i * x + c_i) mod 2^61-1`, drawn from a master seed.
///
/// Each `h_i` is injective on 32-bit inputs, so it permutes the shingle universe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashFamily {
    coefficients: Vec<(u64, u64)>,
}

impl HashFamily {
    pub fn new(master_seed: u64, num_hashes: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        let coefficients = (0..num_hashes)
            .map(|_| (rng.random_range(1..MODULUS), rng.random_range(0..MODULUS)))
            .collect();
        HashFamily { coefficients }
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    #[inline]
    pub fn apply(&self, i: usize, x: u32) -> u64 {
        let (a, c) = self.coefficients[i];
        ((u128::from(a) * u128::from(x) + u128::from(c)) % u128::from(MODULUS)) as u64
    }

    /// Minimum of each hash function over the set.
    pub fn signature(&self, set: &ShingleSet) -> Result<Vec<u64>, MinHashError> {
        if set.is_empty() {
            return Err(MinHashError::EmptyShingleSet);
        }
        let mut mins = vec![u64::MAX; self.len()];
        for &x in set.values() {
            for (i, m) in mins.iter_mut().enumerate() {
                *m = (*m).min(self.apply(i, x));
            }
        }
        Ok(mins)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MinHashError {
    #[error("cannot fingerprint an empty shingle set")]
    EmptyShingleSet,
}

/// The `p` per-function minima summarizing one document's shingle set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinHashFingerprint {
    pub doc_id: String,
    pub values: Vec<u64>,
}

impl MinHashFingerprint {
    /// Fraction of positions where two fingerprints agree; estimates Jaccard similarity.
    pub fn agreement(&self, other: &MinHashFingerprint) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        let same = self.values.iter().zip(&other.values).filter(|(a, b)| a == b).count();
        same as f64 / self.values.len() as f64
    }
}
