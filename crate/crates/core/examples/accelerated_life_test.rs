//! Covariate regression on the Weibull scale: `ln eta = g0 + g1 * stress`.
//! Units are tested at three stress levels and the fitted model is used to
//! extrapolate reliability at a lower use stress.

use masked_reliability::dataset::{Dataset, SystemRecord};
use masked_reliability::distributions::Weibull3;
use masked_reliability::inference::{run_chain, LocationModel, PriorSpec, SamplerConfig, SamplerVariant, Scale};
use masked_reliability::posterior::{posterior_mean_reliability, thin_with_config};
use masked_reliability::structures::{CensorCode, ComponentStatus};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (g0, g1, beta): (f64, f64, f64) = (4.0, -1.2, 1.8);
    let censor_at = 60.0;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut records = Vec::new();
    for stress in [1.0, 1.5, 2.0] {
        let law = Weibull3::new(beta, (g0 + g1 * stress).exp(), 0.0)?;
        for _ in 0..80 {
            let x = law.sample(&mut rng);
            let (time, code) = if x < censor_at {
                (x, CensorCode::Uncensored)
            } else {
                (censor_at, CensorCode::Right)
            };
            records.push(SystemRecord {
                id: (records.len() + 1).to_string(),
                time,
                statuses: vec![ComponentStatus::Observed(code)],
                covariates: vec![stress],
            });
        }
    }
    let ds = Dataset::new(1, records);
    let data = ds.component_observations(0, true);
    let variant = SamplerVariant::asymmetric().with_location(LocationModel::Zero);
    let chain = run_chain(&data, &variant, &PriorSpec::default(), &SamplerConfig::fast(5))?;
    let sample = thin_with_config(&chain)?;

    let n = sample.len() as f64;
    let mut mean = [0.0; 3];
    for d in &sample.draws {
        mean[0] += d.theta.beta / n;
        if let Scale::Coefficients(g) = &d.theta.scale {
            mean[1] += g[0] / n;
            mean[2] += g[1] / n;
        }
    }
    println!(
        "beta {:.3} (truth {beta}), g0 {:.3} (truth {g0}), g1 {:.3} (truth {g1})",
        mean[0], mean[1], mean[2]
    );

    let use_stress = 0.5;
    let truth = Weibull3::new(beta, (g0 + g1 * use_stress).exp(), 0.0)?;
    for t in [20.0, 50.0, 100.0] {
        let r = posterior_mean_reliability(&sample, t, &[1.0, use_stress])?;
        println!(
            "use stress {use_stress}: R({t}) = {r:.4} (truth {:.4})",
            truth.reliability(t)
        );
    }
    Ok(())
}
