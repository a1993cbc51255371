//! How a call site's target count picks its table layout.

use omega_rt::dispatch::{bench, CallSiteSpec, DispatchTable, BENCH_HEADER};

fn main() {
    for k in [1, 3, 20, 500] {
        let spec = CallSiteSpec::new((0..k).map(|i| (i * 7919 + 13, i)).collect()).unwrap();
        let table = DispatchTable::build(&spec).unwrap();
        let (imp, probes) = table.resolve_counted(13 + 7919 * (k - 1));
        println!(
            "{k:>4} targets: {} (worst case {} probes), last target -> {:?} in {probes}",
            table.strategy(),
            table.worst_case_probes(),
            imp
        );
    }
    println!("unknown type at a 3-way site: {:?}", DispatchTable::build(&CallSiteSpec::new(vec![(1, 0), (2, 1), (3, 2)]).unwrap()).unwrap().resolve(99));

    println!("{BENCH_HEADER}");
    for targets in [1, 4, 64, 1024] {
        for row in bench(2, targets, 7, true).unwrap() {
            println!("{}", row.csv());
        }
    }
}
