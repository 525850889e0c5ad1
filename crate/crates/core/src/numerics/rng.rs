//! Seeded pseudo-random numbers.
//!
//! Every stochastic component draws from [`SeededRng`], a ChaCha8 stream
//! cipher generator (RFC 7539 core, 8 rounds). ChaCha output is specified
//! independently of platform and word size, so a seed fully determines every
//! draw. Independent sub-streams are derived with [`SeededRng::fork`], which
//! keeps results stable regardless of the order in which work items run.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::Matrix;

#[derive(Clone, Debug)]
pub struct SeededRng {
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// A child generator for the sub-task identified by `tag`, independent of
    /// how many values have been drawn from `self`.
    pub fn fork(seed: u64, tag: &[u64]) -> Self {
        // splitmix64 finalizer folded over the tag
        let mut h = seed ^ 0x9E37_79B9_7F4A_7C15;
        for &t in tag {
            h ^= t.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(h << 6).wrapping_add(h >> 2);
            h = (h ^ (h >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            h = (h ^ (h >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            h ^= h >> 31;
        }
        SeededRng::new(h)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.inner.gen::<f64>()
    }

    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.inner.gen_range(0..n)
    }

    pub fn uniform_vec(&mut self, n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|_| self.uniform(lo, hi)).collect()
    }

    pub fn normal_vec(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.normal()).collect()
    }

    pub fn uniform_matrix(&mut self, rows: usize, cols: usize, lo: f64, hi: f64) -> Matrix {
        Matrix::from_vec(rows, cols, self.uniform_vec(rows * cols, lo, hi))
            .expect("finite uniform draws")
    }

    pub fn normal_matrix(&mut self, rows: usize, cols: usize) -> Matrix {
        Matrix::from_vec(rows, cols, self.normal_vec(rows * cols)).expect("finite normal draws")
    }

    /// `amount` distinct indices from `0..len`, in ascending order.
    pub fn sample_indices(&mut self, len: usize, amount: usize) -> Vec<usize> {
        if amount >= len {
            return (0..len).collect();
        }
        let mut idx = rand::seq::index::sample(&mut self.inner, len, amount).into_vec();
        idx.sort_unstable();
        idx
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.inner);
    }
}
