use std::fmt::Write as _;

use super::{HarnessError, Workload, WorkloadSpec};
use crate::memory::HeapConfig;
use crate::telemetry::{GcEvent, RING_HEADER};

pub const CSV_HEADER: &str = "seq,timestamp_ns,pause_work_units,objects_evacuated,decrements_processed,objects_released,footprint_bytes,workload,cycle,live_objects";

/// One minor collection. `cycle` is 0 while a workload builds its initial
/// live set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReportRow {
    pub event: GcEvent,
    pub workload: Workload,
    pub cycle: u64,
    pub live_objects: u64,
}

impl ReportRow {
    fn csv(&self) -> String {
        format!(
            "{},{},{},{}",
            self.event.csv_fields(),
            self.workload,
            self.cycle,
            self.live_objects
        )
    }
}

/// Cumulative heap counters at the end of a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Totals {
    pub allocations: u64,
    pub collections: u64,
    pub evacuations: u64,
    pub increments: u64,
    pub decrements: u64,
    pub releases: u64,
    pub pause_work_units: u64,
    pub work_events: u64,
    pub count_updates_outside: u64,
    pub slot_rewrites_outside: u64,
}

const TOTAL_KEYS: &[&str] = &[
    "allocations",
    "collections",
    "evacuations",
    "increments",
    "decrements",
    "releases",
    "pause_work_units",
    "work_events",
    "count_updates_outside",
    "slot_rewrites_outside",
];

impl Totals {
    fn values(&self) -> [u64; 10] {
        [
            self.allocations,
            self.collections,
            self.evacuations,
            self.increments,
            self.decrements,
            self.releases,
            self.pause_work_units,
            self.work_events,
            self.count_updates_outside,
            self.slot_rewrites_outside,
        ]
    }

    fn set(&mut self, key: &str, v: u64) -> bool {
        let slot = match key {
            "allocations" => &mut self.allocations,
            "collections" => &mut self.collections,
            "evacuations" => &mut self.evacuations,
            "increments" => &mut self.increments,
            "decrements" => &mut self.decrements,
            "releases" => &mut self.releases,
            "pause_work_units" => &mut self.pause_work_units,
            "work_events" => &mut self.work_events,
            "count_updates_outside" => &mut self.count_updates_outside,
            "slot_rewrites_outside" => &mut self.slot_rewrites_outside,
            _ => return false,
        };
        *slot = v;
        true
    }

    /// Survivors per allocation.
    pub fn survival_ratio(&self) -> f64 {
        if self.allocations == 0 {
            0.0
        } else {
            self.evacuations as f64 / self.allocations as f64
        }
    }
}

/// A run, as written to and read back from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub spec: WorkloadSpec,
    /// Bytes per object, header included, when the live set is uniform.
    pub object_bytes: Option<u64>,
    pub rows: Vec<ReportRow>,
    pub totals: Totals,
    /// Free-form measurement lines (histograms, bench tables).
    pub data: Vec<String>,
    /// `(name, pass, detail)`.
    pub verdicts: Vec<(String, bool, String)>,
    pub error: Option<String>,
}

impl RunReport {
    pub fn new(spec: &WorkloadSpec) -> Self {
        RunReport {
            spec: spec.clone(),
            object_bytes: None,
            rows: Vec::new(),
            totals: Totals::default(),
            data: Vec::new(),
            verdicts: Vec::new(),
            error: None,
        }
    }

    pub fn verdict(&mut self, name: &str, pass: bool, detail: impl Into<String>) {
        self.verdicts.push((name.to_string(), pass, detail.into()));
    }

    pub fn verdict_named(&self, name: &str) -> Option<&(String, bool, String)> {
        self.verdicts.iter().find(|v| v.0 == name)
    }

    pub fn all_verdicts_pass(&self) -> bool {
        self.error.is_none() && self.verdicts.iter().all(|v| v.1)
    }

    pub fn to_csv(&self) -> String {
        let s = &self.spec;
        let h = &s.heap;
        let mut out = String::new();
        let _ = writeln!(out, "# omega-rt run report");
        let _ = writeln!(out, "# workload={} seed={} cycles={} rng=chacha8", s.workload, s.seed, s.cycles);
        let _ = writeln!(
            out,
            "# nursery_bytes={} block_bytes={} dec_budget={} defrag_budget={} frag_threshold={} max_heap_bytes={}",
            h.nursery_bytes, h.block_bytes, h.dec_budget, h.defrag_budget, h.frag_threshold, h.max_heap_bytes
        );
        let object_bytes = self.object_bytes.map_or("mixed".to_string(), |b| b.to_string());
        let _ = writeln!(
            out,
            "# live_target={} object_slots={} survival={} object_bytes={}",
            s.live_target, s.object_slots, s.survival, object_bytes
        );
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.csv());
            out.push('\n');
        }
        let totals: Vec<String> = TOTAL_KEYS
            .iter()
            .zip(self.totals.values())
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        let _ = writeln!(out, "# totals {}", totals.join(" "));
        for d in &self.data {
            let _ = writeln!(out, "# data {d}");
        }
        for (name, pass, detail) in &self.verdicts {
            let word = if *pass { "pass" } else { "fail" };
            let _ = writeln!(out, "# verdict {name}={word} {detail}");
        }
        if let Some(e) = &self.error {
            let _ = writeln!(out, "# error {e}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<RunReport, HarnessError> {
        let mut spec = WorkloadSpec::new(Workload::Churn);
        spec.heap = HeapConfig::default();
        let mut report = RunReport::new(&spec);
        let mut saw_header = false;
        let mut saw_workload = false;
        for (n, line) in text.lines().enumerate() {
            let lineno = n + 1;
            let err = |m: String| HarnessError::Parse {
                line: lineno,
                message: m,
            };
            if line.trim().is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim_start();
                if let Some(d) = rest.strip_prefix("data ") {
                    report.data.push(d.to_string());
                } else if let Some(v) = rest.strip_prefix("verdict ") {
                    let (head, detail) = v.split_once(' ').unwrap_or((v, ""));
                    let (name, word) = head.split_once('=').ok_or_else(|| err(format!("bad verdict `{v}`")))?;
                    let pass = match word {
                        "pass" => true,
                        "fail" => false,
                        _ => return Err(err(format!("bad verdict word `{word}`"))),
                    };
                    report.verdicts.push((name.to_string(), pass, detail.to_string()));
                } else if let Some(e) = rest.strip_prefix("error ") {
                    report.error = Some(e.to_string());
                } else if let Some(t) = rest.strip_prefix("totals ") {
                    for kv in t.split_whitespace() {
                        let (k, v) = kv.split_once('=').ok_or_else(|| err(format!("bad total `{kv}`")))?;
                        let v = v.parse().map_err(|_| err(format!("bad total `{kv}`")))?;
                        if !report.totals.set(k, v) {
                            return Err(err(format!("unknown total `{k}`")));
                        }
                    }
                } else {
                    for kv in rest.split_whitespace().filter(|t| t.contains('=')) {
                        let (k, v) = kv.split_once('=').expect("filtered");
                        saw_workload |= k == "workload";
                        apply_setting(&mut report, k, v).map_err(err)?;
                    }
                }
                continue;
            }
            if line == CSV_HEADER {
                saw_header = true;
                continue;
            }
            if !saw_header {
                return Err(err("row before the CSV header".to_string()));
            }
            report.rows.push(parse_row(line).map_err(err)?);
        }
        if !saw_workload {
            return Err(HarnessError::Parse {
                line: 0,
                message: "missing workload".to_string(),
            });
        }
        Ok(report)
    }
}

fn apply_setting(report: &mut RunReport, key: &str, value: &str) -> Result<(), String> {
    fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String> {
        v.parse().map_err(|_| format!("bad value for {key}: `{v}`"))
    }
    let s = &mut report.spec;
    match key {
        "workload" => s.workload = value.parse().map_err(|e: HarnessError| e.to_string())?,
        "seed" => s.seed = num(key, value)?,
        "cycles" => s.cycles = num(key, value)?,
        "nursery_bytes" => s.heap.nursery_bytes = num(key, value)?,
        "block_bytes" => s.heap.block_bytes = num(key, value)?,
        "dec_budget" => s.heap.dec_budget = num(key, value)?,
        "defrag_budget" => s.heap.defrag_budget = num(key, value)?,
        "frag_threshold" => s.heap.frag_threshold = num(key, value)?,
        "max_heap_bytes" => s.heap.max_heap_bytes = num(key, value)?,
        "live_target" => s.live_target = num(key, value)?,
        "object_slots" => s.object_slots = num(key, value)?,
        "survival" => s.survival = num(key, value)?,
        "object_bytes" => {
            report.object_bytes = match value {
                "mixed" => None,
                v => Some(num(key, v)?),
            }
        }
        _ => {}
    }
    Ok(())
}

fn parse_row(line: &str) -> Result<ReportRow, String> {
    let f: Vec<&str> = line.split(',').collect();
    let expected = RING_HEADER.split(',').count() + 3;
    if f.len() != expected {
        return Err(format!("expected {expected} fields, found {}", f.len()));
    }
    let n = |i: usize| -> Result<u64, String> {
        f[i].trim().parse().map_err(|_| format!("field {} is not a count: `{}`", i + 1, f[i]))
    };
    Ok(ReportRow {
        event: GcEvent {
            seq: n(0)?,
            timestamp_ns: n(1)?,
            pause_work_units: n(2)?,
            objects_evacuated: n(3)?,
            decrements_processed: n(4)?,
            objects_released: n(5)?,
            footprint_bytes: n(6)?,
        },
        workload: f[7].parse().map_err(|e: HarnessError| e.to_string())?,
        cycle: n(8)?,
        live_objects: n(9)?,
    })
}
