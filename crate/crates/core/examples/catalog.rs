//! Runs the built-in catalog and prints a one-line summary per scenario.

use ultralocal::{builtin_scenarios, compute_metrics, simulate, MetricsConfig};

fn main() -> ultralocal::Result<()> {
    let cfg = MetricsConfig::default();
    for s in builtin_scenarios::<f64>() {
        let out = simulate(&s)?;
        let m = compute_metrics(&out, &s, &cfg);
        let steady: Vec<String> = m.segments.iter().map(|g| format!("{:.4}", g.steady_error)).collect();
        println!(
            "{:>2} {:<50} rmse={:.5} settle={:?} osc={} steady=[{}] recovery={:?} diverged={}",
            s.id,
            s.description,
            m.rmse,
            m.settling_time.map(|t| (t * 1000.0).round() / 1000.0),
            m.oscillation_index,
            steady.join(", "),
            m.recovery_times,
            m.diverged
        );
    }
    Ok(())
}
