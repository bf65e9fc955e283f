//! Bridge system with masked causes of failure: simulate, then compare the
//! symmetric and asymmetric masking models on one component.

use masked_reliability::distributions::SimDistribution;
use masked_reliability::evaluation::{fit_component, simulate_dataset, system3, FitSettings};
use masked_reliability::inference::{SamplerConfig, SamplerVariant};
use masked_reliability::posterior::{curve_summary, default_grid};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = system3(4, SamplerConfig::fast(0)).with_size(200, 0.4);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let sim = simulate_dataset(&spec, &mut rng)?;
    let counts = sim.dataset.cause_counts();
    println!("observed causes {:?}", counts.observed);
    for (set, n) in &counts.masked {
        println!("masked on {:?}: {n}", set.one_based());
    }

    let j = 0;
    let truth: SimDistribution = spec.components[j];
    let grid = default_grid(&sim.dataset.system_times(), 6)?;
    let models = [
        ("symmetric", FitSettings::dead_masked_sets(SamplerConfig::fast(0))),
        (
            "asymmetric",
            FitSettings {
                variant: SamplerVariant::asymmetric(),
                ..FitSettings::dead_masked_sets(SamplerConfig::fast(0))
            },
        ),
    ];
    println!("\ncomponent 1 reliability ({})", truth.family_name());
    print!("{:>10}", "t");
    for t in &grid {
        print!("{t:>9.2}");
    }
    print!("\n{:>10}", "truth");
    for &t in &grid {
        print!("{:>9.4}", truth.reliability(t));
    }
    println!();
    for (name, settings) in &models {
        let (_, sample) = fit_component(&sim.dataset, j, settings, 21)?;
        let curve = curve_summary(&sample, &grid, 0.95, &[])?;
        print!("{name:>10}");
        for p in &curve.points {
            print!("{:>9.4}", p.stats.mean);
        }
        println!();
    }
    Ok(())
}
