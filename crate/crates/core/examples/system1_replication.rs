//! Replicate the 2-of-3 simulation scenario and report the per-component
//! mean absolute error of the posterior mean reliability curve.

use masked_reliability::evaluation::{run_scenario, system1};
use masked_reliability::inference::SamplerConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let replicates = std::env::args().nth(1).map_or(Ok(4), |s| s.parse())?;
    let spec = system1(2024, SamplerConfig::fast(0));
    let report = run_scenario(&spec, replicates)?;
    println!(
        "{}: n = {}, p = {}, {} replicates",
        report.scenario, report.n, report.p, replicates
    );
    for (j, (m, s)) in report.mean.iter().zip(&report.sd).enumerate() {
        let fmt = |v: &Option<f64>| v.map_or("NA".to_string(), |v| format!("{v:.4}"));
        println!("  component {}: mean MAE {}, sd {}", j + 1, fmt(m), fmt(s));
    }
    Ok(())
}
