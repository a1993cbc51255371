//! Step counts for catastrophic-backtracking patterns grow polynomially.

use omega_rt::brex::{bench_csv, CORPUS_NAMES};

fn main() {
    for name in CORPUS_NAMES {
        println!("# corpus {name}");
        print!("{}", bench_csv(name).expect("known corpus"));
    }
}
