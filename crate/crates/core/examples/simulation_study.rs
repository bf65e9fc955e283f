//! Sweep sample size and masking proportion for one preset scenario and
//! print a table of mean MAE per component.

use masked_reliability::evaluation::{run_scenario, study_scenarios, system1, system2, system3};
use masked_reliability::inference::SamplerConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let preset = args.next().unwrap_or_else(|| "system1".into());
    let replicates: usize = args.next().map_or(Ok(2), |s| s.parse())?;
    let sampler = SamplerConfig::fast(0);
    let base = match preset.as_str() {
        "system1" => system1(99, sampler),
        "system2" => system2(99, sampler),
        "system3" => system3(99, sampler),
        other => return Err(format!("unknown preset {other}").into()),
    };
    println!("{:<24} mean MAE per component", "scenario");
    for spec in study_scenarios(&base) {
        let report = run_scenario(&spec, replicates)?;
        let cells: Vec<String> = report
            .mean
            .iter()
            .map(|m| m.map_or("    NA".into(), |v| format!("{v:.4}")))
            .collect();
        println!("{:<24} {}", report.scenario, cells.join("  "));
    }
    Ok(())
}
