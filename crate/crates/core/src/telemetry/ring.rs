use std::fmt::Write as _;

use crate::memory::GcStats;

/// One collector event as exported by the ring.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GcEvent {
    pub seq: u64,
    pub timestamp_ns: u64,
    pub pause_work_units: u64,
    pub objects_evacuated: u64,
    pub decrements_processed: u64,
    pub objects_released: u64,
    pub footprint_bytes: u64,
}

pub const RING_HEADER: &str =
    "seq,timestamp_ns,pause_work_units,objects_evacuated,decrements_processed,objects_released,footprint_bytes";

impl GcEvent {
    pub fn from_stats(seq: u64, timestamp_ns: u64, stats: &GcStats, footprint_bytes: u64) -> Self {
        GcEvent {
            seq,
            timestamp_ns,
            pause_work_units: stats.pause_work_units,
            objects_evacuated: stats.objects_evacuated,
            decrements_processed: stats.decrements_processed,
            objects_released: stats.objects_released,
            footprint_bytes,
        }
    }

    pub fn csv_fields(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.seq,
            self.timestamp_ns,
            self.pause_work_units,
            self.objects_evacuated,
            self.decrements_processed,
            self.objects_released,
            self.footprint_bytes
        )
    }
}

pub const DEFAULT_RING_CAPACITY: usize = 4096;

/// Fixed-capacity ring of the newest collector events.
#[derive(Debug, Clone)]
pub struct GcEventRing {
    slots: Vec<GcEvent>,
    next: usize,
    len: usize,
    pushed: u64,
}

impl Default for GcEventRing {
    fn default() -> Self {
        GcEventRing::new(DEFAULT_RING_CAPACITY)
    }
}

impl GcEventRing {
    pub fn new(capacity: usize) -> Self {
        GcEventRing {
            slots: vec![GcEvent::default(); capacity.max(1)],
            next: 0,
            len: 0,
            pushed: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.slots.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Events ever pushed, including overwritten ones.
    pub fn total_pushed(&self) -> u64 {
        self.pushed
    }

    pub fn push(&mut self, event: GcEvent) {
        self.slots[self.next] = event;
        self.next = (self.next + 1) % self.slots.len();
        self.len = (self.len + 1).min(self.slots.len());
        self.pushed += 1;
    }

    /// Retained events, oldest first.
    pub fn events(&self) -> impl Iterator<Item = &GcEvent> {
        let cap = self.slots.len();
        let start = (self.next + cap - self.len) % cap;
        (0..self.len).map(move |i| &self.slots[(start + i) % cap])
    }

    pub fn memory_bytes(&self) -> usize {
        std::mem::size_of::<Self>() + self.slots.capacity() * std::mem::size_of::<GcEvent>()
    }

    pub fn export_csv(&self) -> String {
        let mut out = String::from(RING_HEADER);
        out.push('\n');
        for e in self.events() {
            let _ = writeln!(out, "{}", e.csv_fields());
        }
        out
    }
}
