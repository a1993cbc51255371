//! Fragments the old generation on purpose and watches the defragmenter
//! compact it without changing what the roots can see.
//!
//! cargo run --release --example fragmentation

use omega_rt::harness::{run, Workload, WorkloadSpec};

fn main() {
    let report = run(&WorkloadSpec::new(Workload::Fragmentation)).expect("valid spec");
    for d in report.data.iter().filter(|d| !d.starts_with("pause_histogram")) {
        println!("{d}");
    }
    for (name, pass, detail) in &report.verdicts {
        println!("{name}: {} {detail}", if *pass { "pass" } else { "fail" });
    }
    let peak = report.rows.iter().map(|r| r.event.pause_work_units).max().unwrap_or(0);
    println!("collections={} max_pause={peak}", report.rows.len());
}
