//! Runs the promotion workload at three live-set sizes and prints the
//! pause and footprint numbers that the bound checks look at.
//!
//! cargo run --release --example harness_run

use omega_rt::harness::{check_bounds, fit_footprint, run, Workload, WorkloadSpec};

fn main() {
    let mut finals = Vec::new();
    let mut object_bytes = 0;
    for live in [1_000, 10_000, 100_000] {
        let spec = WorkloadSpec {
            live_target: live,
            ..WorkloadSpec::new(Workload::Promotion)
        };
        let report = run(&spec).expect("valid spec");
        let steady_max = report
            .rows
            .iter()
            .filter(|r| r.cycle > 0)
            .map(|r| r.event.pause_work_units)
            .max()
            .unwrap_or(0);
        let last = report.rows.last().expect("rows");
        let bounds = check_bounds(&report);
        println!(
            "live={live:>6} rows={:>3} steady_max_pause={steady_max} bound={} final_live={} final_footprint={} checks={}",
            report.rows.len(),
            bounds.pause.bound,
            last.live_objects,
            last.event.footprint_bytes,
            if bounds.pass() { "pass" } else { "fail" },
        );
        for (name, pass, detail) in &report.verdicts {
            println!("    {name}: {} {detail}", if *pass { "pass" } else { "fail" });
        }
        object_bytes = report.object_bytes.unwrap_or(0);
        finals.push((last.live_objects, last.event.footprint_bytes));
    }
    let fit = fit_footprint(&finals, 65_536.0, 2.0 * object_bytes as f64);
    println!("footprint across sizes: {}", fit.describe());
}
