//! Simulation studies: generate masked coherent-system data with known
//! component laws, fit every component and score the posterior mean
//! reliability curve by mean absolute error.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::dataset::{Dataset, SystemRecord};
use crate::distributions::{DistributionError, SimDistribution, SimFamily, Weibull3};
use crate::inference::{run_chain, InferenceError, PriorSpec, RawChain, SamplerConfig, SamplerVariant};
use crate::posterior::{
    curve_summary, default_grid, thin_with_config, PosteriorError, PosteriorSample, ReliabilityCurveSummary,
};
use crate::structures::{CensorCode, Classification, ComponentStatus, StructureError, SystemStructure};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvaluationError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("grids differ in length: {0} vs {1}")]
    GridMismatch(usize, usize),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error(transparent)]
    Posterior(#[from] PosteriorError),
}

/// Sampler settings shared by every component fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitSettings {
    pub variant: SamplerVariant,
    pub priors: PriorSpec,
    /// The seed of this configuration is replaced per component.
    pub sampler: SamplerConfig,
}

impl FitSettings {
    /// Symmetric masking with no right-censored components in masked sets,
    /// the regime of data whose masked set is the failing minimal cut.
    pub fn dead_masked_sets(sampler: SamplerConfig) -> Self {
        FitSettings {
            variant: SamplerVariant::symmetric().with_zero(CensorCode::Right),
            priors: PriorSpec::default(),
            sampler,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub name: String,
    pub structure: SystemStructure,
    pub components: Vec<SimDistribution>,
    pub n: usize,
    /// Probability that a system's failure is masked.
    pub p: f64,
    pub seed: u64,
    pub fit: FitSettings,
    /// Number of points in the MAE grid.
    pub grid_points: usize,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), EvaluationError> {
        let bad = |m: String| Err(EvaluationError::InvalidScenario(m));
        if self.components.len() != self.structure.component_count() {
            return bad(format!(
                "{} component distributions for a structure with {} components",
                self.components.len(),
                self.structure.component_count()
            ));
        }
        if self.n == 0 {
            return bad("sample size must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.p) {
            return bad(format!("masking proportion {} outside [0, 1]", self.p));
        }
        if self.grid_points == 0 {
            return bad("grid needs at least one point".into());
        }
        for d in &self.components {
            d.validate()?;
        }
        self.structure.minimal_cut_sets()?;
        Ok(())
    }

    pub fn with_size(mut self, n: usize, p: f64) -> Self {
        self.n = n;
        self.p = p;
        self
    }
}

/// A simulated dataset together with the hidden truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedData {
    pub dataset: Dataset,
    pub lifetimes: Vec<Vec<f64>>,
    pub truth: Vec<Classification>,
}

/// Draw `n` systems. Each failure is masked with probability `p`, in which
/// case the components of the failing minimal cut are reported as masked
/// and all others keep their observed status.
pub fn simulate_dataset<R: Rng + ?Sized>(spec: &ScenarioSpec, rng: &mut R) -> Result<SimulatedData, EvaluationError> {
    spec.validate()?;
    let m = spec.components.len();
    let mut records = Vec::with_capacity(spec.n);
    let mut lifetimes = Vec::with_capacity(spec.n);
    let mut truth = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let x: Vec<f64> = spec.components.iter().map(|d| d.sample(rng)).collect();
        let class = spec.structure.classify_components(&x)?;
        let mut statuses: Vec<ComponentStatus> = class.codes.iter().map(|&c| ComponentStatus::Observed(c)).collect();
        if rng.random::<f64>() < spec.p {
            for &j in spec.structure.masked_candidate_set(&x)?.members() {
                statuses[j] = ComponentStatus::Masked;
            }
        }
        records.push(SystemRecord {
            id: (i + 1).to_string(),
            time: class.time,
            statuses,
            covariates: Vec::new(),
        });
        lifetimes.push(x);
        truth.push(class);
    }
    Ok(SimulatedData {
        dataset: Dataset::new(m, records),
        lifetimes,
        truth,
    })
}

/// `(1/l) sum |estimate - truth|` over a shared grid.
pub fn mae(estimate: &[f64], truth: &[f64]) -> Result<f64, EvaluationError> {
    if estimate.len() != truth.len() || estimate.is_empty() {
        return Err(EvaluationError::GridMismatch(estimate.len(), truth.len()));
    }
    Ok(estimate.iter().zip(truth).map(|(a, b)| (a - b).abs()).sum::<f64>() / estimate.len() as f64)
}

/// Seed of the chain for component `j` within a run seeded by `seed`.
pub fn component_seed(seed: u64, j: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(j as u64 + 1)
}

/// Run the sampler for component `j` (0-based) and thin the chain.
pub fn fit_component(
    dataset: &Dataset,
    j: usize,
    settings: &FitSettings,
    seed: u64,
) -> Result<(RawChain, PosteriorSample), EvaluationError> {
    let data = dataset.component_observations(j, false);
    let config = SamplerConfig {
        seed,
        ..settings.sampler.clone()
    };
    let chain = run_chain(&data, &settings.variant, &settings.priors, &config)?;
    let sample = thin_with_config(&chain)?;
    Ok((chain, sample))
}

/// The outcome of one simulated replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateOutcome {
    pub replicate: usize,
    pub seed: u64,
    /// Per-component MAE; `None` where the fit failed.
    pub mae: Vec<Option<f64>>,
    /// Fit failures as `(component, message)`, 0-based.
    pub failures: Vec<(usize, String)>,
    /// Sampler warnings as `(component, message)`, 0-based.
    pub warnings: Vec<(usize, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaeReport {
    pub scenario: String,
    pub n: usize,
    pub p: f64,
    pub replicates: Vec<ReplicateOutcome>,
    /// Mean MAE per component over successful replicates.
    pub mean: Vec<Option<f64>>,
    /// Sample SD per component; `None` with fewer than two successes.
    pub sd: Vec<Option<f64>>,
}

/// Simulate, fit and score one replicate; returns the estimated curves too.
pub fn run_replicate(
    spec: &ScenarioSpec,
    replicate: usize,
) -> Result<(ReplicateOutcome, Vec<Option<ReliabilityCurveSummary>>), EvaluationError> {
    let seed = spec.seed.wrapping_add(replicate as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sim = simulate_dataset(spec, &mut rng)?;
    let grid = default_grid(&sim.dataset.system_times(), spec.grid_points)?;
    let fits: Vec<_> = (0..spec.components.len())
        .into_par_iter()
        .map(|j| -> Result<_, EvaluationError> {
            let (chain, sample) = fit_component(&sim.dataset, j, &spec.fit, component_seed(seed, j))?;
            let curve = curve_summary(&sample, &grid, 0.95, &[])?;
            let truth: Vec<f64> = grid.iter().map(|&t| spec.components[j].reliability(t)).collect();
            let score = mae(&curve.means(), &truth)?;
            Ok((score, curve, chain.warnings))
        })
        .collect();
    let mut outcome = ReplicateOutcome {
        replicate,
        seed,
        mae: Vec::new(),
        failures: Vec::new(),
        warnings: Vec::new(),
    };
    let mut curves = Vec::new();
    for (j, fit) in fits.into_iter().enumerate() {
        match fit {
            Ok((score, curve, warnings)) => {
                outcome.mae.push(Some(score));
                outcome.warnings.extend(warnings.iter().map(|w| (j, w.to_string())));
                curves.push(Some(curve));
            }
            Err(e) => {
                outcome.mae.push(None);
                outcome.failures.push((j, e.to_string()));
                curves.push(None);
            }
        }
    }
    Ok((outcome, curves))
}

/// Run `replicates` independent replicates; replicate `r` uses seed
/// `spec.seed + r`.
pub fn run_scenario(spec: &ScenarioSpec, replicates: usize) -> Result<MaeReport, EvaluationError> {
    if replicates == 0 {
        return Err(EvaluationError::InvalidScenario(
            "at least one replicate is required".into(),
        ));
    }
    spec.validate()?;
    let outcomes = (0..replicates)
        .into_par_iter()
        .map(|r| run_replicate(spec, r).map(|(o, _)| o))
        .collect::<Result<Vec<_>, _>>()?;
    let m = spec.components.len();
    let mut mean = Vec::with_capacity(m);
    let mut sd = Vec::with_capacity(m);
    for j in 0..m {
        let v: Vec<f64> = outcomes.iter().filter_map(|o| o.mae[j]).collect();
        if v.is_empty() {
            mean.push(None);
            sd.push(None);
            continue;
        }
        let avg = v.iter().sum::<f64>() / v.len() as f64;
        mean.push(Some(avg));
        sd.push(
            (v.len() > 1).then(|| (v.iter().map(|x| (x - avg).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()),
        );
    }
    Ok(MaeReport {
        scenario: spec.name.clone(),
        n: spec.n,
        p: spec.p,
        replicates: outcomes,
        mean,
        sd,
    })
}

fn preset(
    name: &str,
    structure: &str,
    laws: &[(SimFamily, f64, f64)],
    n: usize,
    p: f64,
    seed: u64,
    sampler: SamplerConfig,
) -> ScenarioSpec {
    let components = laws
        .iter()
        .map(|&(family, mean, var)| {
            SimDistribution::from_moments(family, mean, var).expect("preset moments are feasible")
        })
        .collect();
    ScenarioSpec {
        name: name.to_string(),
        structure: structure.parse().expect("preset structure parses"),
        components,
        n,
        p,
        seed,
        fit: FitSettings::dead_masked_sets(sampler),
        grid_points: 200,
    }
}

/// Location of the three-parameter Weibull components in the presets.
pub const PRESET_LOCATIONS: [f64; 3] = [5.0, 4.0, 1.0];

/// Modified Weibull exponential rate used in the bridge preset.
pub const PRESET_MODIFIED_WEIBULL_LAMBDA: f64 = 0.05;

/// 2-out-of-3 system: Weibull (15, 8), gamma (18, 12), lognormal (20, 10)
/// given as (mean, variance); n = 300, p = 0.4.
pub fn system1(seed: u64, sampler: SamplerConfig) -> ScenarioSpec {
    preset(
        "system1",
        "max(min(1,2), min(1,3), min(2,3))",
        &[
            (SimFamily::Weibull2, 15.0, 8.0),
            (SimFamily::Gamma, 18.0, 12.0),
            (SimFamily::Lognormal, 20.0, 10.0),
        ],
        300,
        0.4,
        seed,
        sampler,
    )
}

/// Five-component series-parallel system; n = 100, p = 0.3.
pub fn system2(seed: u64, sampler: SamplerConfig) -> ScenarioSpec {
    preset(
        "system2",
        "min(max(1,2), max(min(3,4), 5))",
        &[
            (SimFamily::Weibull2, 12.0, 15.0),
            (SimFamily::Gamma, 11.0, 11.0),
            (
                SimFamily::Weibull3 {
                    location: PRESET_LOCATIONS[0],
                },
                12.0,
                9.0,
            ),
            (SimFamily::Lognormal, 12.0, 7.0),
            (
                SimFamily::Weibull3 {
                    location: PRESET_LOCATIONS[1],
                },
                11.0,
                14.0,
            ),
        ],
        100,
        0.3,
        seed,
        sampler,
    )
}

/// Bridge system; n = 50, p = 0.2.
pub fn system3(seed: u64, sampler: SamplerConfig) -> ScenarioSpec {
    preset(
        "system3",
        "max(min(1,4), min(2,5), min(1,3,5), min(2,3,4))",
        &[
            (SimFamily::Weibull2, 4.0, 15.0),
            (
                SimFamily::ModifiedWeibull {
                    lambda: PRESET_MODIFIED_WEIBULL_LAMBDA,
                },
                5.6,
                14.9,
            ),
            (SimFamily::Lognormal, 6.0, 7.0),
            (SimFamily::Gamma, 5.0, 8.0),
            (
                SimFamily::Weibull3 {
                    location: PRESET_LOCATIONS[2],
                },
                4.0,
                8.0,
            ),
        ],
        50,
        0.2,
        seed,
        sampler,
    )
}

pub const STUDY_SIZES: [usize; 4] = [50, 100, 300, 1000];
pub const STUDY_PROPORTIONS: [f64; 3] = [0.2, 0.4, 0.7];

/// Every (sample size, masking proportion) combination of the study design
/// applied to `base`.
pub fn study_scenarios(base: &ScenarioSpec) -> Vec<ScenarioSpec> {
    STUDY_SIZES
        .iter()
        .flat_map(|&n| {
            STUDY_PROPORTIONS.iter().map(move |&p| {
                let mut s = base.clone().with_size(n, p);
                s.name = format!("{}-n{}-p{}", base.name, n, p);
                s
            })
        })
        .collect()
}

/// Composition of the synthetic hard-drive dataset: systems failed by each
/// of the three causes, then systems masked on {1,3} and on {1,2,3}.
pub const HARD_DRIVE_COUNTS: [usize; 5] = [35, 19, 52, 32, 34];

/// Component laws of the synthetic hard-drive dataset.
pub fn hard_drive_laws() -> [Weibull3; 3] {
    [
        Weibull3::new(1.3, 900.0, 0.0).expect("valid"),
        Weibull3::new(0.9, 2200.0, 0.0).expect("valid"),
        Weibull3::new(1.6, 650.0, 0.0).expect("valid"),
    ]
}

/// A three-cause series dataset with the hard-drive composition. Failure
/// times are simulated; systems are drawn until each group is filled.
pub fn hard_drive_dataset(seed: u64) -> Dataset {
    let laws = hard_drive_laws();
    let series = SystemStructure::series(3);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let masks: [&[usize]; 2] = [&[0, 2], &[0, 1, 2]];
    let mut records = Vec::new();
    for (group, &count) in HARD_DRIVE_COUNTS.iter().enumerate() {
        let mut filled = 0;
        while filled < count {
            let x: Vec<f64> = laws.iter().map(|w| w.sample(&mut rng)).collect();
            let class = series.classify_components(&x).expect("positive lifetimes");
            let (fits, masked): (bool, &[usize]) = match group {
                0..=2 => (class.cause == group, &[]),
                g => (masks[g - 3].contains(&class.cause), masks[g - 3]),
            };
            if !fits {
                continue;
            }
            let mut statuses: Vec<ComponentStatus> =
                class.codes.iter().map(|&c| ComponentStatus::Observed(c)).collect();
            for &j in masked {
                statuses[j] = ComponentStatus::Masked;
            }
            records.push(SystemRecord {
                id: String::new(),
                time: class.time,
                statuses,
                covariates: Vec::new(),
            });
            filled += 1;
        }
    }
    // Interleave groups by failure time and number the rows.
    records.sort_by(|a, b| a.time.total_cmp(&b.time));
    for (i, r) in records.iter_mut().enumerate() {
        r.id = (i + 1).to_string();
    }
    Dataset {
        component_names: vec!["c1".into(), "c2".into(), "c3".into()],
        covariate_names: Vec::new(),
        records,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::MaskPolicy;
    use crate::structures::CutSet;
    use proptest::prelude::*;

    fn fast() -> SamplerConfig {
        SamplerConfig {
            iterations: 1500,
            burn_in: 500,
            thin: 5,
            ..SamplerConfig::fast(0)
        }
    }

    #[test]
    fn presets_are_valid() {
        for s in [system1(1, fast()), system2(1, fast()), system3(1, fast())] {
            s.validate().unwrap();
            for (d, _) in s.components.iter().zip(0..) {
                assert!(d.mean() > 0.0);
            }
        }
        let s1 = system1(1, fast());
        assert!((s1.components[0].mean() - 15.0).abs() < 1e-6);
        assert!((s1.components[0].variance() - 8.0).abs() < 1e-5);
        assert_eq!(study_scenarios(&s1).len(), 12);
    }

    #[test]
    fn unmasked_simulation_has_one_cause_per_system() {
        let spec = system1(3, fast()).with_size(500, 0.0);
        let sim = simulate_dataset(&spec, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        for r in &sim.dataset.records {
            assert!(r.masked_set().is_none());
            let uncensored = r
                .statuses
                .iter()
                .filter(|s| **s == ComponentStatus::Observed(CensorCode::Uncensored))
                .count();
            assert_eq!(uncensored, 1);
        }
    }

    #[test]
    fn fully_masked_series_masks_only_the_cause() {
        let mut spec = system1(5, fast()).with_size(300, 1.0);
        spec.structure = SystemStructure::series(3);
        let sim = simulate_dataset(&spec, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        for (r, t) in sim.dataset.records.iter().zip(&sim.truth) {
            assert_eq!(r.masked_set().unwrap(), CutSet::new(vec![t.cause]));
        }
    }

    #[test]
    fn masked_sets_hold_the_cause_and_only_dead_components() {
        let spec = system3(9, fast()).with_size(3000, 0.5);
        let sim = simulate_dataset(&spec, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        for ((r, t), x) in sim.dataset.records.iter().zip(&sim.truth).zip(&sim.lifetimes) {
            if let Some(set) = r.masked_set() {
                assert!(set.contains(t.cause));
                assert!(set.members().iter().all(|&j| x[j] <= t.time));
            }
        }
        sim.dataset.validate(&spec.structure, &MaskPolicy::Structural).unwrap();
    }

    #[test]
    fn masking_fraction_matches_binomial() {
        let p = 0.3;
        let n = 10_000;
        let spec = system1(4, fast()).with_size(n, p);
        let sim = simulate_dataset(&spec, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let masked = sim.dataset.records.iter().filter(|r| r.masked_set().is_some()).count() as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((masked / n as f64 - p).abs() < 3.0 * se);
    }

    #[test]
    fn mae_examples() {
        assert_eq!(mae(&[0.3, 0.2], &[0.3, 0.2]).unwrap(), 0.0);
        assert!((mae(&[0.9, 0.6, 0.2], &[0.8, 0.5, 0.1]).unwrap() - 0.1).abs() < 1e-12);
        assert!((mae(&[1.0, 0.5, 0.0], &[1.0, 0.6, 0.2]).unwrap() - 0.1).abs() < 1e-12);
        assert_eq!(mae(&[1.0], &[1.0, 2.0]), Err(EvaluationError::GridMismatch(1, 2)));
    }

    #[test]
    fn single_replicate_report() {
        let spec = system1(21, fast()).with_size(60, 0.4);
        let a = run_scenario(&spec, 1).unwrap();
        assert_eq!(a.replicates.len(), 1);
        assert_eq!(a.mean, a.replicates[0].mae);
        assert!(a.sd.iter().all(Option::is_none));
        assert!(a.mean.iter().all(|m| m.is_some_and(|v| (0.0..=1.0).contains(&v))));
        assert_eq!(run_scenario(&spec, 1).unwrap(), a);
    }

    #[test]
    fn tiny_scenario_reports_insufficient_data() {
        let spec = system1(2, fast()).with_size(1, 0.0);
        let report = run_scenario(&spec, 1).unwrap();
        let o = &report.replicates[0];
        assert!(!o.warnings.is_empty() || !o.failures.is_empty());
    }

    #[test]
    fn hard_drive_composition() {
        let ds = hard_drive_dataset(7);
        assert_eq!(ds.records.len(), 172);
        assert_eq!(ds.cause_counts().flat(), HARD_DRIVE_COUNTS.to_vec());
        let allowed = vec![CutSet::new(vec![0, 2]), CutSet::new(vec![0, 1, 2])];
        ds.validate(&SystemStructure::series(3), &MaskPolicy::Strict(allowed))
            .unwrap();
        assert!(ds
            .records
            .iter()
            .all(|r| !r.statuses.contains(&ComponentStatus::Observed(CensorCode::Left))));
    }

    proptest! {
        #[test]
        fn mae_is_symmetric_and_zero_only_on_equal_curves(
            a in prop::collection::vec(0.0f64..1.0, 1..50),
            shift in prop::collection::vec(-0.5f64..0.5, 50),
        ) {
            let b: Vec<f64> = a.iter().zip(&shift).map(|(x, s)| (x + s).clamp(0.0, 1.0)).collect();
            let ab = mae(&a, &b).unwrap();
            prop_assert_eq!(ab, mae(&b, &a).unwrap());
            prop_assert_eq!(ab == 0.0, a == b);
            prop_assert!((0.0..=1.0).contains(&ab));
        }
    }
}
