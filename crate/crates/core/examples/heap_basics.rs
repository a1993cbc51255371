//! Allocate, root, collect, read back.

use omega_rt::memory::{Heap, HeapConfig, TypeDescriptor, Value};

fn main() {
    let mut heap = Heap::new(HeapConfig::default()).expect("default config is valid");
    // A cons cell: slot 0 holds a number, slot 1 the tail.
    let cons = heap
        .register_type(TypeDescriptor::new("cons", 2, &[1]))
        .expect("fresh name");

    let mut list = heap.alloc(cons, &[Value::Int(0), Value::Nil]).unwrap();
    let root = heap.push_root(&list).unwrap();
    for i in 1..=10_000u64 {
        list = heap.alloc(cons, &[Value::Int(i), Value::Ref(heap.root(&root).unwrap())]).unwrap();
        heap.set_root(&root, &list).unwrap();
    }
    let stats = heap.collect_minor().unwrap();
    println!("last collection: {stats:?}");

    let mut sum = 0;
    let mut at = Some(heap.root(&root).unwrap());
    while let Some(h) = at {
        sum += heap.read_field(&h, 0).unwrap().as_int().unwrap();
        at = heap.read_field(&h, 1).unwrap().as_ref();
    }
    println!("sum over the list: {sum}");

    // Dropping the root releases everything over the next few collections.
    heap.pop_root(root).unwrap();
    while heap.pending_decrements() > 0 || heap.old_object_count() > 0 {
        let s = heap.collect_minor().unwrap();
        println!(
            "pause={} released={} old_objects={}",
            s.pause_work_units,
            s.objects_released,
            heap.old_object_count()
        );
    }
    let report = heap.heap_report();
    println!("footprint={} blocks={}", report.footprint_bytes, report.block_count);
    assert!(heap.validate_heap().is_ok());
}
