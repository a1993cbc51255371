//! Persistent data structures and deterministic algorithms with worst-case
//! (never amortized) bounds.
//!
//! Every operation has an instrumented twin taking a [`StepCounter`], so the
//! bounds can be checked per operation rather than on average.

mod map;
mod sort;
mod vector;

use thiserror::Error;

pub use map::{visit_bound as map_visit_bound, FnOrder, Iter, KeyOrder, NaturalOrder, OrderedMap};
pub use sort::{comparison_bound, stable_sort, stable_sort_counted};
pub use vector::{visit_bound as vector_visit_bound, PersistentVector};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("index {index} out of bounds for length {len}")]
    IndexOutOfBounds { index: usize, len: usize },
    #[error("pop on empty vector")]
    PopEmpty,
}

/// Node-visit and comparison counters for one instrumented operation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepCounter {
    pub node_visits: u64,
    pub comparisons: u64,
}

impl StepCounter {
    pub fn reset(&mut self) {
        *self = StepCounter::default();
    }
}
