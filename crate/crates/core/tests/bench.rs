use proptest::prelude::*;
use ultralocal::scenario::{
    builtin_ids, family_derivative_modes, family_ip_vs_ipd, family_ipid_sweep, run_batch, ComparisonReport,
};
use ultralocal::simulation::{trace_csv_string, SimOutcome, TraceRecord, TRACE_CSV_HEADER};
use ultralocal::{builtin_scenario, builtin_scenarios, compare_controllers, compute_metrics, MetricsConfig};

fn synthetic(errors: &[f64]) -> (SimOutcome<f64>, ultralocal::Scenario) {
    let mut s = builtin_scenario::<f64>("4").unwrap();
    s.grid.duration = errors.len() as f64 * s.grid.h;
    let trace = errors
        .iter()
        .enumerate()
        .map(|(k, &e)| {
            let t = k as f64 * s.grid.h;
            let y_ref = s.reference.eval(t).y;
            TraceRecord {
                t,
                y_true: y_ref + e,
                y_measured: y_ref + e,
                y_ref,
                e,
                u: 0.0,
                v1: 0.0,
                v2: 0.0,
                f_est: 0.0,
                warming_up: false,
                saturated: false,
            }
        })
        .collect();
    (SimOutcome { trace, diverged: false }, s)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metrics_are_consistent(errors in prop::collection::vec(-1.0..1.0f64, 1..400)) {
        let (out, s) = synthetic(&errors);
        let m = compute_metrics(&out, &s, &MetricsConfig::default());
        prop_assert!(m.iae >= 0.0);
        prop_assert!(m.rmse * m.rmse <= m.max_abs_error * m.max_abs_error * (1.0 + 1e-12));
        prop_assert!(m.max_overshoot >= 0.0);
        for (seg, spec) in m.segments.iter().zip(&s.reference.segments) {
            if let Some(ts) = seg.settling_time {
                prop_assert!(ts >= 0.0);
                let band = if seg.step != 0.0 { 0.02 * seg.step.abs() } else { 0.02 };
                for r in out.trace.iter().filter(|r| r.t >= spec.start + ts - 1e-12 && r.t < seg.end) {
                    prop_assert!(r.e.abs() <= band);
                }
            }
        }
    }
}

#[test]
fn catalog_ids_are_unique_and_all_run() {
    let ids = builtin_ids();
    let mut sorted = ids.clone();
    sorted.dedup();
    assert_eq!(ids.len(), sorted.len());
    let results = run_batch(&builtin_scenarios::<f64>());
    assert_eq!(results.len(), 9);
    for r in results {
        let out = r.unwrap();
        assert!(!out.diverged);
    }
}

#[test]
fn trace_csv_layout() {
    let s = builtin_scenario::<f64>("1").unwrap();
    let out = s.run().unwrap();
    let csv = trace_csv_string(&out.trace);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(TRACE_CSV_HEADER));
    assert_eq!(lines.count(), out.trace.len());
    assert!(csv.lines().skip(1).all(|l| l.split(',').count() == 11));
}

fn run(family: ultralocal::scenario::ScenarioFamily<f64>) -> ComparisonReport<f64> {
    compare_controllers(&family.base, &family.controllers, &MetricsConfig::default()).unwrap().report
}

#[test]
fn ip_vs_ipd_has_two_rows_and_ipd_wins() {
    let report = run(family_ip_vs_ipd());
    assert_eq!(report.rows.len(), 2);
    assert!(report.rows[1].metrics.rmse < report.rows[0].metrics.rmse);
    let md = report.to_markdown();
    assert_eq!(md.lines().filter(|l| l.starts_with("| iP")).count(), 2);
}

#[test]
fn ipid_sweep_flags_monotonicity() {
    let report = run(family_ipid_sweep(1000.0));
    assert_eq!(report.rows.len(), 4);
    assert_eq!(report.ki_oscillation_monotone, Some(true));
    assert!(report.to_markdown().contains("non-decreasing in K_I: yes"));
}

#[test]
fn derivative_modes_family() {
    let report = run(family_derivative_modes());
    assert_eq!(report.rows.len(), 2);
    assert!(report.rows.iter().all(|r| !r.metrics.diverged));
}

#[test]
fn disturbance_is_rejected() {
    let s = builtin_scenario::<f64>("6").unwrap();
    let m = compute_metrics(&s.run().unwrap(), &s, &MetricsConfig::default());
    assert_eq!(m.recovery_times.len(), 1);
    assert!(m.recovery_times[0].is_some_and(|t| t < 3.0));
}
