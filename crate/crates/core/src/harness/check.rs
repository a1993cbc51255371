use super::RunReport;
use crate::memory::HEADER_BYTES;

#[derive(Debug, Clone, PartialEq)]
pub struct PauseVerdict {
    pub pass: bool,
    pub max: u64,
    pub bound: u64,
    pub violations: usize,
}

/// Least-squares fit `footprint = k + m · live`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FootprintFit {
    pub k: f64,
    pub m: f64,
    pub max_residual: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FitVerdict {
    Pass(FootprintFit),
    Fail { fit: FootprintFit, reason: String },
    /// Fewer than three distinct live-set sizes.
    InsufficientData { distinct: usize },
    /// The live set is not uniform in object size.
    NotApplicable,
}

impl FitVerdict {
    pub fn is_fail(&self) -> bool {
        matches!(self, FitVerdict::Fail { .. })
    }

    pub fn describe(&self) -> String {
        match self {
            FitVerdict::Pass(f) => format!(
                "K={:.0} M={:.2} max_residual={:.0} points={}",
                f.k, f.m, f.max_residual, f.points
            ),
            FitVerdict::Fail { fit, reason } => format!(
                "{reason}: K={:.0} M={:.2} max_residual={:.0} points={}",
                fit.k, fit.m, fit.max_residual, fit.points
            ),
            FitVerdict::InsufficientData { distinct } => {
                format!("insufficient data: {distinct} distinct live sizes")
            }
            FitVerdict::NotApplicable => "not applicable: mixed object sizes".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsVerdict {
    pub pause: PauseVerdict,
    pub footprint: FitVerdict,
    /// No mutator-side count update or slot rewrite was observed.
    pub barrier: bool,
    /// `work_events = evacuations + increments + decrements + releases`.
    pub cost_identity: bool,
    /// Rows agree with the totals.
    pub rows_consistent: bool,
}

impl BoundsVerdict {
    pub fn pass(&self) -> bool {
        self.pause.pass && self.barrier && self.cost_identity && self.rows_consistent && !self.footprint.is_fail()
    }
}

/// Fits `footprint = k + m · live` over `(live, footprint)` points and
/// checks the residuals against `residual_limit` and `m` against
/// `[HEADER_BYTES, m_ceiling]`. An `m` below one header means footprint
/// does not track the live set at all.
pub fn fit_footprint(points: &[(u64, u64)], residual_limit: f64, m_ceiling: f64) -> FitVerdict {
    let mut sizes: Vec<u64> = points.iter().map(|p| p.0).collect();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 3 {
        return FitVerdict::InsufficientData { distinct: sizes.len() };
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0 as f64).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1 as f64).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 as f64 - mx) * (p.1 as f64 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 as f64 - mx).powi(2)).sum();
    let m = sxy / sxx;
    let k = my - m * mx;
    let max_residual = points
        .iter()
        .map(|p| (p.1 as f64 - (k + m * p.0 as f64)).abs())
        .fold(0.0, f64::max);
    let fit = FootprintFit {
        k,
        m,
        max_residual,
        points: points.len(),
    };
    let reason = if max_residual > residual_limit {
        Some(format!("residual above {residual_limit:.0}"))
    } else if m > m_ceiling {
        Some(format!("slope above {m_ceiling:.0}"))
    } else if m < HEADER_BYTES as f64 {
        Some(format!("slope below {HEADER_BYTES}"))
    } else {
        None
    };
    match reason {
        None => FitVerdict::Pass(fit),
        Some(reason) => FitVerdict::Fail { fit, reason },
    }
}

/// Recomputes every heap bound from the recorded rows and totals alone.
///
/// The footprint fit uses the last row of each distinct live size, so a
/// steady run contributes one point per plateau.
pub fn check_bounds(report: &RunReport) -> BoundsVerdict {
    let bound = report.spec.heap.pause_bound();
    let max = report.rows.iter().map(|r| r.event.pause_work_units).max().unwrap_or(0);
    let violations = report.rows.iter().filter(|r| r.event.pause_work_units > bound).count();
    let pause = PauseVerdict {
        pass: violations == 0,
        max,
        bound,
        violations,
    };

    let footprint = match report.object_bytes {
        None => FitVerdict::NotApplicable,
        Some(bytes) => {
            let mut points: Vec<(u64, u64)> = Vec::new();
            for r in &report.rows {
                let p = (r.live_objects, r.event.footprint_bytes);
                match points.iter_mut().find(|q| q.0 == p.0) {
                    Some(q) => *q = p,
                    None => points.push(p),
                }
            }
            fit_footprint(&points, report.spec.heap.block_bytes as f64, 2.0 * bytes as f64)
        }
    };

    let t = &report.totals;
    let barrier = t.count_updates_outside == 0 && t.slot_rewrites_outside == 0;
    let cost_identity = t.work_events == t.evacuations + t.increments + t.decrements + t.releases;
    let sum = |f: fn(&super::ReportRow) -> u64| report.rows.iter().map(f).sum::<u64>();
    let rows_consistent = report.rows.len() as u64 == t.collections
        && sum(|r| r.event.pause_work_units) == t.pause_work_units
        && sum(|r| r.event.objects_evacuated) == t.evacuations
        && sum(|r| r.event.decrements_processed) == t.decrements
        && sum(|r| r.event.objects_released) == t.releases
        && report.rows.windows(2).all(|w| w[1].event.seq == w[0].event.seq + 1);

    BoundsVerdict {
        pause,
        footprint,
        barrier,
        cost_identity,
        rows_consistent,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line_fits() {
        let pts: Vec<(u64, u64)> = (1..10).map(|x| (x * 100, 5000 + 64 * x * 100)).collect();
        match fit_footprint(&pts, 1.0, 100.0) {
            FitVerdict::Pass(f) => {
                assert!((f.m - 64.0).abs() < 1e-9);
                assert!((f.k - 5000.0).abs() < 1e-6);
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn flat_footprint_is_flagged() {
        let pts = [(100, 9000), (200, 9000), (300, 9000)];
        match fit_footprint(&pts, 65536.0, 100.0) {
            FitVerdict::Fail { fit, reason } => {
                assert!(fit.m.abs() < 1e-9);
                assert!(reason.contains("below"));
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn two_sizes_are_not_enough() {
        let pts = [(100, 1), (200, 2), (200, 3)];
        assert_eq!(fit_footprint(&pts, 1.0, 1.0), FitVerdict::InsufficientData { distinct: 2 });
    }

    #[test]
    fn steep_slope_fails() {
        let pts = [(1, 1000), (2, 2000), (3, 3000)];
        assert!(fit_footprint(&pts, 10.0, 96.0).is_fail());
    }
}
