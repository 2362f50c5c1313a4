use serde::{Deserialize, Serialize};

/// Per-class counts with a cached total.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassHistogram {
    counts: Vec<u64>,
    total: u64,
}

impl ClassHistogram {
    pub fn new(classes: usize) -> Self {
        ClassHistogram {
            counts: vec![0; classes],
            total: 0,
        }
    }

    pub fn from_counts(counts: Vec<u64>) -> Self {
        let total = counts.iter().sum();
        ClassHistogram { counts, total }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn add(&mut self, class: usize) {
        self.counts[class] += 1;
        self.total += 1;
    }

    /// Elementwise sum.
    pub fn merged(&self, other: &ClassHistogram) -> ClassHistogram {
        let counts = self
            .counts
            .iter()
            .zip(&other.counts)
            .map(|(a, b)| a + b)
            .collect();
        ClassHistogram {
            counts,
            total: self.total + other.total,
        }
    }

    /// Most frequent class, smallest index on ties (class 0 when empty).
    pub fn majority(&self) -> usize {
        let mut best = 0;
        for (k, &c) in self.counts.iter().enumerate() {
            if c > self.counts[best] {
                best = k;
            }
        }
        best
    }

    /// Normalized counts; uniform when empty.
    pub fn posterior(&self) -> Vec<f64> {
        let c = self.counts.len();
        if self.total == 0 {
            return vec![1.0 / c as f64; c];
        }
        let n = self.total as f64;
        self.counts.iter().map(|&k| k as f64 / n).collect()
    }

    /// Discrete entropy in bits.
    pub fn entropy(&self) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let n = self.total as f64;
        let h: f64 = self
            .counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.log2()
            })
            .sum();
        h.max(0.0)
    }
}
