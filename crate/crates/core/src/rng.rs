//! Seeded, replayable randomness.
//!
//! Every random choice a tree makes goes through one [`RngStream`], so a tree
//! is a pure function of its seed and its input stream. Streams for trees,
//! data generators and probes are derived from a master seed by index.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

/// Above this rate Poisson draws switch from CDF inversion to `rand_distr`.
const POISSON_INVERSION_MAX: f64 = 30.0;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(into = "RngState", from = "RngState")]
pub struct RngStream {
    seed: u64,
    rng: ChaCha8Rng,
}

/// Serialized position of a stream: seed plus number of 32-bit words consumed.
#[derive(Serialize, Deserialize)]
struct RngState {
    seed: u64,
    word_pos: String,
}

impl From<RngStream> for RngState {
    fn from(r: RngStream) -> Self {
        RngState {
            seed: r.seed,
            word_pos: r.rng.get_word_pos().to_string(),
        }
    }
}

impl From<RngState> for RngStream {
    fn from(s: RngState) -> Self {
        let mut r = RngStream::new(s.seed);
        // An unparsable position restarts the stream; documents are only ever
        // produced by `From<RngStream>` above.
        r.rng.set_word_pos(s.word_pos.parse().unwrap_or(0));
        r
    }
}

impl PartialEq for RngStream {
    fn eq(&self, other: &Self) -> bool {
        self.seed == other.seed && self.rng.get_word_pos() == other.rng.get_word_pos()
    }
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        RngStream {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent stream keyed by `(seed, index)`. Does not advance `self`.
    pub fn child(&self, index: u64) -> RngStream {
        RngStream::new(splitmix64(splitmix64(self.seed).wrapping_add(index)))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform real in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform integer in `[0, n)`. `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Poisson(`lambda`) draw. Small rates use sequential CDF inversion with
    /// exactly one uniform variate.
    pub fn poisson(&mut self, lambda: f64) -> u64 {
        if lambda <= POISSON_INVERSION_MAX {
            let u = self.uniform();
            let mut k = 0u64;
            let mut p = (-lambda).exp();
            let mut cdf = p;
            while u >= cdf && p > 0.0 {
                k += 1;
                p *= lambda / k as f64;
                cdf += p;
            }
            k
        } else {
            let dist = Poisson::new(lambda).expect("finite positive rate");
            let v: f64 = dist.sample(&mut self.rng);
            v as u64
        }
    }

    /// Index drawn with probability proportional to `weights`.
    pub fn categorical(&mut self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        let target = self.uniform() * total;
        let mut acc = 0.0;
        let mut last_positive = 0;
        for (i, &w) in weights.iter().enumerate() {
            if w > 0.0 {
                acc += w;
                last_positive = i;
                if target < acc {
                    return i;
                }
            }
        }
        last_positive
    }

    /// `k` distinct indices from `0..n`, in draw order (partial Fisher-Yates).
    pub fn distinct(&mut self, n: usize, k: usize) -> Vec<usize> {
        let k = k.min(n);
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.below(n - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}
