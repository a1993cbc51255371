//! Fixed-memory latency histogram and the collector event ring.

use omega_rt::memory::{Heap, HeapConfig, TypeDescriptor, Value};
use omega_rt::telemetry::{GcEvent, GcEventRing, LatencyHistogram};

fn main() {
    let mut h = LatencyHistogram::default();
    let mut x: u64 = 88172645463325252;
    for _ in 0..100_000 {
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        h.record(1_000 + x % 1_000_000);
    }
    for q in [0.5, 0.9, 0.99, 0.999] {
        println!("p{:<5} {} ns", q * 100.0, h.quantile(q).unwrap());
    }
    println!("{} buckets, {} bytes, relative error {}", h.bucket_count(), h.memory_bytes(), h.relative_error());

    let mut heap = Heap::new(HeapConfig { nursery_bytes: 16 * 1024, ..HeapConfig::default() }).unwrap();
    let pair = heap.register_type(TypeDescriptor::new("pair", 2, &[1])).unwrap();
    let first = heap.alloc(pair, &[Value::Int(0), Value::Nil]).unwrap();
    let root = heap.push_root(&first).unwrap();
    let mut ring = GcEventRing::new(8);
    let mut seq = 0;
    for i in 0..20_000u64 {
        let before = heap.stats();
        let tail = if i % 3 == 0 { Value::Ref(heap.root(&root).unwrap()) } else { Value::Nil };
        let h = heap.alloc(pair, &[Value::Int(i), tail]).unwrap();
        if i % 3 == 0 {
            heap.set_root(&root, &h).unwrap();
        }
        let after = heap.stats();
        if after.collections_count > before.collections_count {
            let footprint = heap.heap_report().footprint_bytes as u64;
            ring.push(GcEvent::from_stats(seq, i, &after.since(&before), footprint));
            seq += 1;
        }
    }
    println!("{} collections, ring keeps the newest {}:", ring.total_pushed(), ring.len());
    print!("{}", ring.export_csv());
}
