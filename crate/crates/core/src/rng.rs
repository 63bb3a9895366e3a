//! Seeded, splittable random streams.
//!
//! Streams are ChaCha8 keystreams: the seed selects the key and the stream id
//! selects the ChaCha stream, so `split(seed, a)` and `split(seed, b)` never
//! overlap for `a != b` and every draw is reproducible bit for bit.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::math;

#[derive(Debug, Clone)]
pub struct Rng {
    inner: ChaCha8Rng,
    seed: u64,
    stream: u64,
}

impl Rng {
    /// Stream 0 of `seed`.
    pub fn new(seed: u64) -> Self {
        Self::split(seed, 0)
    }

    /// Independent stream `stream_id` derived from `seed`.
    pub fn split(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self { inner, seed, stream: stream_id }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `(0, 1]`.
    pub fn uniform_open0(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[lo, hi)`.
    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal via Box–Muller.
    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform_open0();
        let u2 = self.uniform();
        math::sqrt(-2.0 * math::ln(u1)) * libm::cos(core::f64::consts::TAU * u2)
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.uniform() * n as f64) as usize).min(n - 1)
    }

    /// Draws an index from a probability vector by inverse CDF.
    pub fn categorical(&mut self, probs: &[f64]) -> usize {
        let u = self.uniform();
        let mut acc = 0.0;
        let mut last_positive = 0;
        for (i, p) in probs.iter().enumerate() {
            if *p > 0.0 {
                last_positive = i;
            }
            acc += p;
            if u < acc {
                return i;
            }
        }
        last_positive
    }

    /// Draws an index given precomputed cumulative sums (last entry ≈ 1).
    pub fn categorical_cdf(&mut self, cdf: &[f64]) -> usize {
        let u = self.uniform();
        let i = cdf.partition_point(|c| *c <= u);
        if i < cdf.len() {
            i
        } else {
            last_increment(cdf)
        }
    }

    /// Geometric number of trials until the first success on `{1, 2, …}`,
    /// where each trial continues with probability `continue_prob`:
    /// `P(T > k) = continue_prob^k`.
    pub fn geometric(&mut self, continue_prob: f64) -> u64 {
        if continue_prob <= 0.0 {
            return 1;
        }
        debug_assert!(continue_prob < 1.0);
        let u = self.uniform_open0();
        let k = math::ceil(math::ln(u) / math::ln(continue_prob));
        if k < 1.0 {
            1
        } else if k >= u64::MAX as f64 {
            u64::MAX
        } else {
            k as u64
        }
    }
}

fn last_increment(cdf: &[f64]) -> usize {
    let mut prev = 0.0;
    let mut last = 0;
    for (i, c) in cdf.iter().enumerate() {
        if *c > prev {
            last = i;
        }
        prev = *c;
    }
    last
}
