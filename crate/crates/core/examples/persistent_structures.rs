//! Old versions stay valid after every update.

use omega_rt::structures::{
    map_visit_bound, stable_sort_counted, vector_visit_bound, OrderedMap, PersistentVector, StepCounter,
};

fn main() {
    let v0: PersistentVector<u32> = (0..1000).collect();
    let v1 = v0.set(500, 7).unwrap();
    let (v2, last) = v1.pop().unwrap();
    println!("v0[500]={} v1[500]={} popped={last} len v0={} v2={}", v0.get(500).unwrap(), v1.get(500).unwrap(), v0.len(), v2.len());

    let mut steps = StepCounter::default();
    v0.get_counted(999, &mut steps).unwrap();
    println!("get on 1000 elements visited {} nodes (bound {})", steps.node_visits, vector_visit_bound(1000));

    let mut m = OrderedMap::new();
    for k in 0..10_000u32 {
        m = m.insert(k, k * k);
    }
    let smaller = m.remove(&5000);
    steps.reset();
    let hit = m.find_counted(&5000, &mut steps).copied();
    println!(
        "find 5000 -> {hit:?} in {} visits (bound {:.1}); after remove: {:?}; height {}",
        steps.node_visits,
        map_visit_bound(m.len()),
        smaller.find(&5000),
        m.height()
    );

    let words = ["pear", "fig", "apple", "kiwi", "plum", "date", "lime"];
    steps.reset();
    let by_len = stable_sort_counted(&words, |a, b| a.len().cmp(&b.len()), &mut steps);
    println!("{by_len:?} with {} comparisons", steps.comparisons);
}
