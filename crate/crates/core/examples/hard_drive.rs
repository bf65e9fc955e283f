//! Fit the synthetic hard-drive dataset (three causes, two masked groups)
//! and print posterior reliability at a few ages.

use masked_reliability::evaluation::{fit_component, hard_drive_dataset, FitSettings};
use masked_reliability::inference::{SamplerConfig, SamplerVariant};
use masked_reliability::posterior::posterior_mean_reliability;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ds = hard_drive_dataset(1);
    let counts = ds.cause_counts();
    println!("{} drives; causes {:?}", ds.records.len(), counts.observed);
    for (set, n) in &counts.masked {
        println!("  masked on {:?}: {n}", set.one_based());
    }
    let settings = FitSettings {
        variant: SamplerVariant::asymmetric(),
        ..FitSettings::dead_masked_sets(SamplerConfig::fast(0))
    };
    let ages = [100.0, 250.0, 500.0];
    for j in 0..ds.component_count() {
        let (chain, sample) = fit_component(&ds, j, &settings, 7)?;
        let r: Vec<String> = ages
            .iter()
            .map(|&t| posterior_mean_reliability(&sample, t, &[]).map(|r| format!("R({t}) = {r:.3}")))
            .collect::<Result<_, _>>()?;
        println!(
            "cause {}: {}  (acceptance {:.2})",
            j + 1,
            r.join(", "),
            chain.acceptance_rate()
        );
    }
    Ok(())
}
