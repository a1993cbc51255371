//! Constant-overhead observability: a log-linear latency histogram with
//! O(1) recording and a fixed-capacity ring of collector events.

mod histogram;
mod ring;

pub use histogram::{LatencyHistogram, TelemetryError, DEFAULT_SUB_BUCKET_BITS};
pub use ring::{GcEvent, GcEventRing, DEFAULT_RING_CAPACITY, RING_HEADER};
