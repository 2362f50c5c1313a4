use super::Dataset;
use crate::point::LabeledPoint;
use crate::rng::RngStream;

/// Multi-pass stream over a dataset: `passes` consecutive permutations, each
/// drawn from `rng` when the pass starts. Only one pass's ordering is held.
#[derive(Debug, Clone)]
pub struct PassSchedule<'a> {
    ds: &'a Dataset,
    passes: usize,
    rng: Option<RngStream>,
    pass: usize,
    order: Vec<usize>,
    pos: usize,
}

impl<'a> PassSchedule<'a> {
    pub fn shuffled(ds: &'a Dataset, passes: usize, rng: RngStream) -> Self {
        Self::build(ds, passes, Some(rng))
    }

    /// Every pass in file order.
    pub fn in_order(ds: &'a Dataset, passes: usize) -> Self {
        Self::build(ds, passes, None)
    }

    fn build(ds: &'a Dataset, passes: usize, rng: Option<RngStream>) -> Self {
        assert!(passes >= 1, "at least one pass");
        let mut s = PassSchedule {
            ds,
            passes,
            rng,
            pass: 0,
            order: Vec::new(),
            pos: 0,
        };
        s.start_pass();
        s
    }

    fn start_pass(&mut self) {
        self.order = (0..self.ds.len()).collect();
        if let Some(rng) = &mut self.rng {
            rng.shuffle(&mut self.order);
        }
        self.pos = 0;
    }

    pub fn total_len(&self) -> usize {
        self.passes * self.ds.len()
    }
}

impl<'a> Iterator for PassSchedule<'a> {
    type Item = &'a LabeledPoint;

    fn next(&mut self) -> Option<Self::Item> {
        if self.ds.is_empty() {
            return None;
        }
        if self.pos == self.order.len() {
            self.pass += 1;
            if self.pass >= self.passes {
                return None;
            }
            self.start_pass();
        }
        let i = self.order[self.pos];
        self.pos += 1;
        Some(&self.ds.points[i])
    }
}
