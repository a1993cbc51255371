//! Bounded-variance runtime kernel.
//!
//! * [`memory`] : immutable acyclic heap: bump-allocated nursery, reference
//!   counted old generation, bounded pauses, identity-free defragmentation.
//! * [`structures`] : persistent vector and ordered map with worst-case
//!   logarithmic operations, and a stable merge sort.
//! * [`brex`] : regular expressions with stratified negation, conjunction and
//!   lookaround, evaluated in polynomial time.
//! * [`dispatch`] : closed-world call-site tables with fixed probe bounds.
//! * [`telemetry`] : constant-time latency histogram and collector event ring.
//! * [`harness`] : seeded workloads and bound checks behind the `omega-rt` CLI.

pub mod memory;
pub mod brex;
pub mod dispatch;
pub mod structures;
pub mod telemetry;
pub mod harness;
