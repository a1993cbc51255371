use super::*;

fn small(workload: Workload) -> WorkloadSpec {
    WorkloadSpec {
        cycles: 4,
        ..WorkloadSpec::new(workload)
    }
}

#[test]
fn reports_round_trip() {
    for &w in WORKLOADS {
        let mut spec = small(w);
        if w == Workload::Fragmentation {
            spec.live_target = 2000;
        }
        let report = run(&spec).unwrap();
        let text = report.to_csv();
        let back = RunReport::parse(&text).unwrap();
        assert_eq!(back, report, "{w}");
        assert_eq!(back.to_csv(), text);
    }
}

#[test]
fn same_seed_same_bytes() {
    for w in [Workload::Churn, Workload::Promotion, Workload::Structures, Workload::Dispatch] {
        let a = run(&small(w)).unwrap().to_csv();
        let b = run(&small(w)).unwrap().to_csv();
        assert_eq!(a, b, "{w}");
    }
}

#[test]
fn churn_keeps_nothing() {
    let report = run(&small(Workload::Churn)).unwrap();
    assert_eq!(report.rows.len(), 4);
    assert!(report.rows.iter().all(|r| r.live_objects == 0 && r.event.objects_evacuated == 0));
    assert!(check_bounds(&report).pass());
}

#[test]
fn promotion_rows_and_verdicts() {
    let report = run(&small(Workload::Promotion)).unwrap();
    assert!(report.all_verdicts_pass(), "{}", report.to_csv());
    assert!(report.rows.iter().any(|r| r.cycle == 4));
    let steady: Vec<_> = report.rows.iter().filter(|r| r.cycle > 0).collect();
    assert!(steady.iter().all(|r| r.event.objects_evacuated > 0));
}

#[test]
fn heap_limit_is_recorded() {
    let mut spec = small(Workload::Promotion);
    spec.live_target = 20_000;
    spec.heap.max_heap_bytes = 256 * 1024;
    let report = run(&spec).unwrap();
    assert!(report.error.as_deref().unwrap().contains("maximum heap"));
    assert!(!report.all_verdicts_pass());
}

#[test]
fn parse_rejects_garbage() {
    assert!(RunReport::parse("nonsense").is_err());
    let text = run(&small(Workload::Churn)).unwrap().to_csv();
    let broken = text.replacen(",churn,", ",churn,x,", 1);
    assert!(matches!(RunReport::parse(&broken), Err(HarnessError::Parse { .. })));
}

#[test]
fn unknown_workload_name() {
    assert!(matches!("nope".parse::<Workload>(), Err(HarnessError::UnknownWorkload(_))));
}
