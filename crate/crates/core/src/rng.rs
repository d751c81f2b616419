//! Labelled deterministic random streams.
//!
//! Every stream is keyed by `(root seed, label)`. The ChaCha key is the
//! SHA-256 of the little-endian seed followed by the UTF-8 label, so a
//! stream depends only on its key and never on how many draws other streams
//! have made. Child streams append `/name` to the parent label.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    label: String,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64, label: impl Into<String>) -> Self {
        let label = label.into();
        let mut hasher = Sha256::new();
        hasher.update(seed.to_le_bytes());
        hasher.update(label.as_bytes());
        let key: [u8; 32] = hasher.finalize().into();
        Self {
            seed,
            label,
            inner: ChaCha8Rng::from_seed(key),
        }
    }

    /// Root stream for a seed (empty label).
    pub fn root(seed: u64) -> Self {
        Self::new(seed, "")
    }

    /// Independent child stream; does not advance `self`.
    pub fn child(&self, name: &str) -> Self {
        let label = if self.label.is_empty() {
            name.to_string()
        } else {
            format!("{}/{name}", self.label)
        };
        Self::new(self.seed, label)
    }

    pub fn child_indexed(&self, name: &str, index: usize) -> Self {
        self.child(&format!("{name}{index}"))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Draw from U[lo, hi). `lo == hi` returns `lo`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        if lo == hi {
            return lo;
        }
        Uniform::new(lo, hi)
            .expect("uniform bounds must satisfy lo < hi")
            .sample(&mut self.inner)
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    pub fn normal(&mut self, mean: f64, std: f64) -> f64 {
        mean + std * self.standard_normal()
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.below(i + 1);
            xs.swap(i, j);
        }
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
