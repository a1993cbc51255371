use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use omega_rt::brex::{self, Pattern};
use omega_rt::dispatch;
use omega_rt::harness::{self, check_bounds, RunReport, Workload, WorkloadSpec};

#[derive(Parser)]
#[command(name = "omega-rt", version, about = "Run and check bounded-variance runtime workloads")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded workload and write its CSV report.
    Run(RunArgs),
    /// Recompute the bound verdicts of a report.
    Check {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Regular expressions.
    Brex {
        #[command(subcommand)]
        command: BrexCommand,
    },
    /// Call-site dispatch tables.
    Dispatch {
        #[command(subcommand)]
        command: DispatchCommand,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    workload: Workload,
    #[arg(long, default_value_t = 20)]
    cycles: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 256)]
    nursery_kib: usize,
    #[arg(long, default_value_t = 4096)]
    dec_budget: usize,
    #[arg(long, default_value_t = 1024)]
    defrag_budget: usize,
    #[arg(long, default_value_t = 0.5)]
    frag_threshold: f64,
    /// Promotion: live elements. Fragmentation: holders per cohort.
    #[arg(long)]
    live: Option<usize>,
    /// Scalar words per promotion element.
    #[arg(long, default_value_t = 4)]
    object_slots: usize,
    /// Fraction of each nursery that survives (promotion).
    #[arg(long, default_value_t = 0.1)]
    survival: f64,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum BrexCommand {
    /// Whole-string match.
    Test { pattern: String, string: String },
    /// Leftmost-longest match on every line of a file.
    Search { pattern: String, file: PathBuf },
    /// Step counts of an adversarial corpus.
    Bench {
        #[arg(long)]
        corpus: String,
    },
}

#[derive(Subcommand)]
enum DispatchCommand {
    /// Build random call sites and measure resolution.
    Bench {
        #[arg(long, default_value_t = 100)]
        sites: usize,
        #[arg(long, default_value_t = 8)]
        targets: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Skip wall-clock timing; the output is then reproducible.
        #[arg(long)]
        untimed: bool,
    },
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("omega-rt: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run(args) => run(args),
        Command::Check { input } => check(&input),
        Command::Brex { command } => brex_command(command),
        Command::Dispatch {
            command:
                DispatchCommand::Bench {
                    sites,
                    targets,
                    seed,
                    untimed,
                },
        } => {
            if targets == 0 {
                bail!("--targets must be at least 1");
            }
            let rows = dispatch::bench(sites, targets, seed, !untimed)?;
            println!("{}", dispatch::BENCH_HEADER);
            for row in rows {
                println!("{}", row.csv());
            }
            Ok(true)
        }
    }
}

fn run(a: RunArgs) -> Result<bool> {
    let mut spec = WorkloadSpec::new(a.workload);
    spec.cycles = a.cycles;
    spec.seed = a.seed;
    spec.heap.nursery_bytes = a.nursery_kib * 1024;
    spec.heap.dec_budget = a.dec_budget;
    spec.heap.defrag_budget = a.defrag_budget;
    spec.heap.frag_threshold = a.frag_threshold;
    if let Some(live) = a.live {
        spec.live_target = live;
    }
    spec.object_slots = a.object_slots;
    spec.survival = a.survival;
    let report = harness::run(&spec)?;
    let text = report.to_csv();
    match &a.out {
        Some(path) => fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    if let Some(e) = &report.error {
        eprintln!("omega-rt: run stopped early: {e}");
    }
    for (name, pass, detail) in report.verdicts.iter().filter(|v| !v.1) {
        eprintln!("verdict {name}={} {detail}", if *pass { "pass" } else { "fail" });
    }
    Ok(report.all_verdicts_pass())
}

fn check(path: &PathBuf) -> Result<bool> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let report = RunReport::parse(&text)?;
    let word = |b: bool| if b { "pass" } else { "fail" };
    let mut ok = true;
    if report.spec.workload.uses_heap() {
        let b = check_bounds(&report);
        println!(
            "pause_bound={} max={} bound={} violations={}",
            word(b.pause.pass),
            b.pause.max,
            b.pause.bound,
            b.pause.violations
        );
        println!("footprint_fit={} {}", word(!b.footprint.is_fail()), b.footprint.describe());
        println!("barrier={}", word(b.barrier));
        println!("cost_identity={}", word(b.cost_identity));
        println!("rows_consistent={}", word(b.rows_consistent));
        ok &= b.pass();
    }
    let recomputed = ["pause_bound", "footprint_fit", "barrier", "cost_identity"];
    for (name, pass, detail) in report.verdicts.iter().filter(|v| !recomputed.contains(&v.0.as_str())) {
        println!("{name}={} {detail} (recorded)", word(*pass));
        ok &= *pass;
    }
    if let Some(e) = &report.error {
        println!("error={e}");
        ok = false;
    }
    Ok(ok)
}

fn brex_command(command: BrexCommand) -> Result<bool> {
    match command {
        BrexCommand::Test { pattern, string } => {
            let p = Pattern::new(&pattern)?;
            let e = p.accepts_counted(&string);
            println!("{} steps={}", if e.result { "match" } else { "no match" }, e.steps);
            Ok(e.result)
        }
        BrexCommand::Search { pattern, file } => {
            let p = Pattern::new(&pattern)?;
            let text = fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
            let mut any = false;
            for (i, line) in text.lines().enumerate() {
                if let Some((s, e)) = p.search(line) {
                    any = true;
                    println!("{}:{s}-{e}:{}", i + 1, &line[s..e]);
                }
            }
            Ok(any)
        }
        BrexCommand::Bench { corpus } => match brex::bench_csv(&corpus) {
            Some(csv) => {
                print!("{csv}");
                Ok(true)
            }
            None => bail!("unknown corpus `{corpus}` (known: {})", brex::CORPUS_NAMES.join(", ")),
        },
    }
}
