//! Online random forests whose trees split on one stream of points and
//! estimate leaf posteriors from another, with a bounded set of leaves
//! collecting split statistics at any time.
//!
//! ```
//! use orf::{HyperParams, LabeledPoint, OnlineForest};
//!
//! let params = HyperParams { num_trees: 5, beta_multiplier: 10.0, ..Default::default() };
//! let mut forest = OnlineForest::new(params, 1, 2).unwrap();
//! for i in 0..2000 {
//!     let x = (i % 100) as f64 / 100.0;
//!     forest.update(&LabeledPoint::new(vec![x], (x > 0.5) as usize)).unwrap();
//! }
//! assert_eq!(forest.predict(&[0.9]).unwrap(), 1);
//! ```

pub mod data;
mod error;
pub mod eval;
pub mod experiment;
pub mod forest;
pub mod fringe;
pub mod histogram;
pub mod params;
pub mod point;
pub mod rng;
pub mod split;
pub mod tree;

pub use error::{OrfError, Result};
pub use forest::OnlineForest;
pub use histogram::ClassHistogram;
pub use params::HyperParams;
pub use point::{LabeledPoint, StreamAssignment};
pub use rng::RngStream;
pub use tree::OnlineTree;
