//! Seeded workloads, CSV run reports and the bound checks run over them.
//!
//! The heap workloads (`churn`, `promotion`, `fragmentation`) record one row
//! per minor collection. The other three drive a library component and
//! record their measurements as `# data` lines and `# verdict` lines.
//! Reports carry no wall-clock values, so a seed reproduces a report byte
//! for byte.
//!
//! ```
//! use omega_rt::harness::{run, check_bounds, Workload, WorkloadSpec};
//!
//! let spec = WorkloadSpec { cycles: 3, ..WorkloadSpec::new(Workload::Churn) };
//! let report = run(&spec).unwrap();
//! assert_eq!(report.rows.len(), 3);
//! assert!(check_bounds(&report).pause.pass);
//! ```

mod check;
mod delegated;
mod gc;
mod report;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::memory::{HeapConfig, HeapError};

pub use check::{check_bounds, fit_footprint, BoundsVerdict, FitVerdict, FootprintFit, PauseVerdict};
pub use report::{ReportRow, RunReport, Totals, CSV_HEADER};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Workload {
    Churn,
    Promotion,
    Fragmentation,
    Redos,
    Structures,
    Dispatch,
}

pub const WORKLOADS: &[Workload] = &[
    Workload::Churn,
    Workload::Promotion,
    Workload::Fragmentation,
    Workload::Redos,
    Workload::Structures,
    Workload::Dispatch,
];

impl Workload {
    pub fn name(self) -> &'static str {
        match self {
            Workload::Churn => "churn",
            Workload::Promotion => "promotion",
            Workload::Fragmentation => "fragmentation",
            Workload::Redos => "redos",
            Workload::Structures => "structures",
            Workload::Dispatch => "dispatch",
        }
    }

    /// Workloads that exercise the heap and produce collection rows.
    pub fn uses_heap(self) -> bool {
        matches!(self, Workload::Churn | Workload::Promotion | Workload::Fragmentation)
    }
}

impl fmt::Display for Workload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Workload {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        WORKLOADS
            .iter()
            .copied()
            .find(|w| w.name() == s)
            .ok_or_else(|| HarnessError::UnknownWorkload(s.to_string()))
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unknown workload `{0}`")]
    UnknownWorkload(String),
    #[error("invalid workload parameters: {0}")]
    BadSpec(String),
    #[error(transparent)]
    Heap(#[from] HeapError),
    #[error("malformed report at line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Everything that determines a run.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadSpec {
    pub workload: Workload,
    pub cycles: u64,
    pub seed: u64,
    pub heap: HeapConfig,
    /// Promotion: live elements. Fragmentation: holders per cohort.
    pub live_target: usize,
    /// Scalar words per promotion element.
    pub object_slots: usize,
    /// Promotion: fraction of nursery bytes that survives each cycle.
    pub survival: f64,
}

impl WorkloadSpec {
    pub fn new(workload: Workload) -> Self {
        let live_target = match workload {
            Workload::Fragmentation => 12_000,
            _ => 1000,
        };
        WorkloadSpec {
            workload,
            cycles: 20,
            seed: 1,
            heap: HeapConfig::default(),
            live_target,
            object_slots: 4,
            survival: 0.1,
        }
    }

    fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::BadSpec(m.to_string()));
        if self.object_slots == 0 || self.object_slots > 64 {
            return bad("object_slots must lie in 1..=64");
        }
        if !(self.survival > 0.0 && self.survival < 1.0) {
            return bad("survival must lie in (0, 1)");
        }
        if self.workload == Workload::Dispatch && self.cycles == 0 {
            return bad("dispatch needs at least one cycle");
        }
        Ok(())
    }
}

/// Runs a workload. Heap exhaustion ends the run early and is recorded in
/// the report rather than returned.
pub fn run(spec: &WorkloadSpec) -> Result<RunReport, HarnessError> {
    spec.validate()?;
    match spec.workload {
        Workload::Churn | Workload::Promotion | Workload::Fragmentation => gc::run(spec),
        Workload::Redos => Ok(delegated::redos(spec)),
        Workload::Structures => Ok(delegated::structures(spec)),
        Workload::Dispatch => delegated::dispatch(spec),
    }
}

#[cfg(test)]
mod tests;
