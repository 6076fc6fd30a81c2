//! Prints the oscillation index across the iPID `K_I` sweep for a few scales.

use ultralocal::metrics::MetricsConfig;
use ultralocal::scenario::{compare_controllers, family_ipid_sweep};

fn main() -> ultralocal::Result<()> {
    let scales: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let scales = if scales.is_empty() { vec![1.0, 100.0, 1000.0] } else { scales };
    for scale in scales {
        let fam = family_ipid_sweep(scale);
        let run = compare_controllers(&fam.base, &fam.controllers, &MetricsConfig::default())?;
        let osc: Vec<usize> = run.report.rows.iter().map(|r| r.metrics.oscillation_index).collect();
        let rmse: Vec<String> = run.report.rows.iter().map(|r| format!("{:.4}", r.metrics.rmse)).collect();
        println!("scale {scale}: oscillation {osc:?} rmse [{}]", rmse.join(", "));
    }
    Ok(())
}
