//! Data sources: LIBSVM files, multi-pass schedules and synthetic mixtures.

mod libsvm;
mod mog;
mod schedule;

pub use libsvm::{parse_libsvm, parse_libsvm_file, parse_libsvm_with, write_libsvm, LibsvmOptions};
pub use mog::{Component, MixtureOfGaussians};
pub use schedule::PassSchedule;

use crate::point::LabeledPoint;

/// An in-memory labelled dataset with contiguous class indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub points: Vec<LabeledPoint>,
    pub dims: usize,
    pub classes: usize,
    /// Original label of each class index, ascending.
    pub label_map: Vec<f64>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
