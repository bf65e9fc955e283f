//! Command-line front end: configuration files, subcommands and output
//! writers. The `maskrel` binary is a thin wrapper around [`run`].
//!
//! Configurations are TOML. A fit configuration:
//!
//! ```toml
//! structure = "min(1,2,3)"
//! seed = 7
//! allowed_masked_sets = [[1,3], [1,2,3]]
//!
//! [variant]
//! masking = "asymmetric"    # or "symmetric"
//! zero = [3]                # masking probabilities fixed at zero, by code
//! location = "free"         # or "zero"
//!
//! [sampler]
//! iterations = 30000
//! burn_in = 10000
//! thin = 20
//! ```
//!
//! A scenario file adds `n`, `p`, `replicates` and one `[[components]]`
//! table per component (`family`, `mean`, `variance`, plus `location` or
//! `lambda` where the family needs one), or names a `preset`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

use crate::dataset::{Dataset, DatasetError, MaskPolicy};
use crate::distributions::{DistributionError, SimDistribution, SimFamily};
use crate::evaluation::{
    component_seed, run_scenario, simulate_dataset, system1, system2, system3, EvaluationError, FitSettings, MaeReport,
    ScenarioSpec,
};
use crate::inference::{GammaPrior, LambdaRule, LocationModel, MaskingModel, PriorSpec, SamplerConfig, SamplerVariant};
use crate::posterior::{
    convergence_stats, curve_summary, default_grid, parameter_summaries, parameter_traces, PosteriorError,
    ReliabilityCurveSummary, ScalarSummary,
};
use crate::structures::{CensorCode, CutSet, StructureError, SystemStructure};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Config { path: PathBuf, source: toml::de::Error },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("missing required option --{0}")]
    Missing(&'static str),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
    #[error(transparent)]
    Evaluation(#[from] EvaluationError),
    #[error(transparent)]
    Posterior(#[from] PosteriorError),
    #[error("component {component}: {source}")]
    Fit { component: usize, source: EvaluationError },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "maskrel",
    version,
    about = "Component reliability from masked system failure data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct CommonArgs {
    /// Configuration file (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file or directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Short sampler profile (6000 iterations, burn-in 1000, thin 5).
    #[arg(long)]
    pub fast: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit every component of a dataset and write posterior summaries.
    Fit {
        #[command(flatten)]
        common: CommonArgs,
        /// Dataset file (CSV).
        #[arg(long)]
        data: PathBuf,
        /// Reject masked sets outside the configured patterns.
        #[arg(long)]
        strict_schema: bool,
    },
    /// Simulate a dataset from a scenario file.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run a scenario's replicates and write MAE reports.
    Evaluate {
        #[command(flatten)]
        common: CommonArgs,
        /// Overrides the number of replicates in the scenario.
        #[arg(long)]
        replicates: Option<usize>,
    },
    /// Print the minimal cut sets of a structure.
    Cutsets {
        /// Structure expression, e.g. "max(min(1,2), min(1,3), min(2,3))".
        structure: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq)]
#[serde(rename_all = "lowercase")]
pub enum MaskingChoice {
    #[default]
    Asymmetric,
    Symmetric,
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq)]
#[serde(rename_all = "lowercase")]
pub enum LocationChoice {
    #[default]
    Free,
    Zero,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FixedLambda {
    pub code: u8,
    pub value: f64,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct VariantSection {
    #[serde(default)]
    pub masking: MaskingChoice,
    /// Censoring codes whose masking probability is structurally zero.
    #[serde(default)]
    pub zero: Vec<u8>,
    #[serde(default)]
    pub fixed: Vec<FixedLambda>,
    #[serde(default)]
    pub location: LocationChoice,
}

impl VariantSection {
    pub fn to_variant(&self) -> Result<SamplerVariant, CliError> {
        let mut v = match self.masking {
            MaskingChoice::Asymmetric => SamplerVariant::asymmetric(),
            MaskingChoice::Symmetric => SamplerVariant::symmetric(),
        };
        let code =
            |c: u8| CensorCode::from_code(c).ok_or_else(|| CliError::Invalid(format!("unknown censoring code {c}")));
        for &c in &self.zero {
            v = v.with_zero(code(c)?);
        }
        for f in &self.fixed {
            if v.masking == MaskingModel::Symmetric {
                return Err(CliError::Invalid(
                    "fixed masking probabilities need the asymmetric model".into(),
                ));
            }
            v = v.with_rule(code(f.code)?, LambdaRule::Fixed(f.value));
        }
        if self.location == LocationChoice::Zero {
            v = v.with_location(LocationModel::Zero);
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PriorEntry {
    pub shape: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PriorSection {
    pub beta: Option<PriorEntry>,
    pub eta: Option<PriorEntry>,
    pub mu: Option<PriorEntry>,
    pub coefficient_sd: Option<f64>,
}

impl PriorSection {
    pub fn to_priors(&self) -> PriorSpec {
        let mut p = PriorSpec::default();
        let g = |e: PriorEntry| GammaPrior {
            shape: e.shape,
            rate: e.rate,
        };
        if let Some(e) = self.beta {
            p.beta = g(e);
        }
        if let Some(e) = self.eta {
            p.eta = g(e);
        }
        if let Some(e) = self.mu {
            p.mu = g(e);
        }
        if let Some(sd) = self.coefficient_sd {
            p.coefficient_sd = sd;
        }
        p
    }
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SamplerSection {
    pub iterations: Option<usize>,
    pub burn_in: Option<usize>,
    pub thin: Option<usize>,
    pub adapt: Option<bool>,
    pub proposal_scales: Option<Vec<f64>>,
}

impl SamplerSection {
    /// The standard profile with this section's overrides, or the fast
    /// profile (which ignores the length overrides).
    pub fn to_config(&self, seed: u64, fast: bool) -> SamplerConfig {
        let mut c = if fast {
            SamplerConfig::fast(seed)
        } else {
            SamplerConfig::standard(seed)
        };
        if !fast {
            c.iterations = self.iterations.unwrap_or(c.iterations);
            c.burn_in = self.burn_in.unwrap_or(c.burn_in);
            c.thin = self.thin.unwrap_or(c.thin);
        }
        c.adapt = self.adapt.unwrap_or(c.adapt);
        c.proposal_scales.clone_from(&self.proposal_scales);
        c
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default = "default_level")]
    pub level: f64,
    /// Also write the retained draws of every chain.
    #[serde(default)]
    pub chains: bool,
}

fn default_grid_points() -> usize {
    200
}

fn default_level() -> f64 {
    0.95
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            grid_points: default_grid_points(),
            level: default_level(),
            chains: false,
        }
    }
}

/// Configuration of the `fit` subcommand.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub structure: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub variant: VariantSection,
    #[serde(default)]
    pub priors: PriorSection,
    #[serde(default)]
    pub sampler: SamplerSection,
    #[serde(default)]
    pub output: OutputSection,
    /// Masked sets accepted under `--strict-schema`, 1-based.
    #[serde(default)]
    pub allowed_masked_sets: Vec<Vec<usize>>,
    /// Covariate columns used for `ln eta`. An intercept is added.
    #[serde(default)]
    pub covariates: Vec<String>,
    /// Covariate values at which curves are reported; defaults to the
    /// column means.
    pub curve_at: Option<Vec<f64>>,
}

fn default_seed() -> u64 {
    1
}

impl RunConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|source| CliError::Config {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        Self::parse(&fs::read_to_string(path).map_err(io_err(path))?, path)
    }

    pub fn structure(&self) -> Result<SystemStructure, CliError> {
        Ok(self.structure.parse()?)
    }

    pub fn mask_policy(&self, strict: bool) -> Result<MaskPolicy, CliError> {
        if !strict {
            return Ok(MaskPolicy::Structural);
        }
        let sets = self
            .allowed_masked_sets
            .iter()
            .map(|s| CutSet::from_one_based(s))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(MaskPolicy::Strict(sets))
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ComponentLaw {
    pub family: String,
    pub mean: f64,
    pub variance: f64,
    pub location: Option<f64>,
    pub lambda: Option<f64>,
}

impl ComponentLaw {
    pub fn to_distribution(&self) -> Result<SimDistribution, CliError> {
        let need = |v: Option<f64>, what: &str| {
            v.ok_or_else(|| CliError::Invalid(format!("family {} needs `{what}`", self.family)))
        };
        let family = match self.family.as_str() {
            "weibull2" | "weibull" => SimFamily::Weibull2,
            "weibull3" => SimFamily::Weibull3 {
                location: need(self.location, "location")?,
            },
            "gamma" => SimFamily::Gamma,
            "lognormal" => SimFamily::Lognormal,
            "modified_weibull" => SimFamily::ModifiedWeibull {
                lambda: need(self.lambda, "lambda")?,
            },
            other => return Err(CliError::Invalid(format!("unknown family {other:?}"))),
        };
        Ok(SimDistribution::from_moments(family, self.mean, self.variance)?)
    }
}

/// Configuration of the `simulate` and `evaluate` subcommands.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: Option<String>,
    /// `system1`, `system2` or `system3`; other fields override it.
    pub preset: Option<String>,
    pub structure: Option<String>,
    #[serde(default)]
    pub components: Vec<ComponentLaw>,
    pub n: Option<usize>,
    pub p: Option<f64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    pub grid_points: Option<usize>,
    pub variant: Option<VariantSection>,
    #[serde(default)]
    pub priors: PriorSection,
    #[serde(default)]
    pub sampler: SamplerSection,
}

fn default_replicates() -> usize {
    10
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        toml::from_str(&text).map_err(|source| CliError::Config {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn to_spec(&self, seed: u64, fast: bool) -> Result<ScenarioSpec, CliError> {
        let sampler = self.sampler.to_config(seed, fast);
        let mut spec = match self.preset.as_deref() {
            Some("system1") => system1(seed, sampler),
            Some("system2") => system2(seed, sampler),
            Some("system3") => system3(seed, sampler),
            Some(other) => return Err(CliError::Invalid(format!("unknown preset {other:?}"))),
            None => {
                let structure = self
                    .structure
                    .as_deref()
                    .ok_or_else(|| CliError::Invalid("scenario needs a `structure` or a `preset`".into()))?;
                ScenarioSpec {
                    name: String::new(),
                    structure: structure.parse()?,
                    components: Vec::new(),
                    n: 0,
                    p: 0.0,
                    seed,
                    fit: FitSettings::dead_masked_sets(sampler),
                    grid_points: default_grid_points(),
                }
            }
        };
        if let Some(s) = &self.structure {
            spec.structure = s.parse()?;
        }
        if !self.components.is_empty() {
            spec.components = self
                .components
                .iter()
                .map(ComponentLaw::to_distribution)
                .collect::<Result<_, _>>()?;
        }
        spec.name = self.name.clone().unwrap_or_else(|| match &self.preset {
            Some(p) => p.clone(),
            None => "scenario".into(),
        });
        spec.n = self.n.unwrap_or(spec.n);
        spec.p = self.p.unwrap_or(spec.p);
        spec.grid_points = self.grid_points.unwrap_or(spec.grid_points);
        if let Some(v) = &self.variant {
            spec.fit.variant = v.to_variant()?;
        }
        spec.fit.priors = self.priors.to_priors();
        spec.validate()?;
        Ok(spec)
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

fn summary_cells(s: &ScalarSummary) -> [f64; 9] {
    [s.mean, s.sd, s.min, s.q25, s.median, s.q75, s.max, s.hpd_lo, s.hpd_hi]
}

/// Curve summary as CSV with the columns of
/// [`ReliabilityCurveSummary::COLUMNS`].
pub fn curve_csv(curve: &ReliabilityCurveSummary) -> String {
    let mut out = ReliabilityCurveSummary::COLUMNS.join(",");
    out.push('\n');
    for p in &curve.points {
        let cells: Vec<String> = std::iter::once(p.t)
            .chain(summary_cells(&p.stats))
            .map(|v| v.to_string())
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn mae_replicates_csv(report: &MaeReport) -> String {
    let mut out = String::from("replicate,seed,component,mae,status\n");
    for o in &report.replicates {
        for (j, m) in o.mae.iter().enumerate() {
            let status = o
                .failures
                .iter()
                .find(|(c, _)| *c == j)
                .map(|(_, e)| e.replace(',', ";"))
                .or_else(|| {
                    o.warnings
                        .iter()
                        .find(|(c, _)| *c == j)
                        .map(|(_, w)| w.replace(',', ";"))
                })
                .unwrap_or_else(|| "ok".into());
            let _ = writeln!(out, "{},{},{},{},{}", o.replicate, o.seed, j + 1, fmt_opt(*m), status);
        }
    }
    out
}

pub fn mae_summary_csv(report: &MaeReport) -> String {
    let mut out = String::from("scenario,n,p,component,replicates,mean_mae,sd_mae\n");
    for (j, (m, s)) in report.mean.iter().zip(&report.sd).enumerate() {
        let ok = report.replicates.iter().filter(|o| o.mae[j].is_some()).count();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            report.scenario,
            report.n,
            report.p,
            j + 1,
            ok,
            fmt_opt(*m),
            fmt_opt(*s)
        );
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(io_err(path))
}

fn ensure_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(io_err(path))
}

const LAMBDA_NAMES: [&str; 3] = ["lambda1", "lambda2", "lambda3"];

/// Fit every component and write `counts.csv`, `parameters.csv`,
/// `diagnostics.csv` and one `curve_c<j>.csv` per component into `out`.
pub fn cmd_fit(config: &RunConfig, data: &Path, out: &Path, fast: bool, strict: bool) -> Result<Vec<String>, CliError> {
    let structure = config.structure()?;
    let mut dataset = Dataset::read_path(data)?;
    dataset.validate(&structure, &config.mask_policy(strict)?)?;
    let variant = config.variant.to_variant()?;
    let priors = config.priors.to_priors();

    // Keep only the configured covariate columns, in configured order.
    let columns = config
        .covariates
        .iter()
        .map(|name| {
            dataset
                .covariate_names
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| CliError::Invalid(format!("covariate column {name:?} not in dataset")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    for r in &mut dataset.records {
        r.covariates = columns.iter().map(|&k| r.covariates[k]).collect();
    }
    dataset.covariate_names = config.covariates.clone();
    let with_covariates = !columns.is_empty();
    let curve_at: Vec<f64> = if with_covariates {
        let at = match &config.curve_at {
            Some(v) if v.len() == columns.len() => v.clone(),
            Some(v) => {
                return Err(CliError::Invalid(format!(
                    "curve_at has {} values for {} covariates",
                    v.len(),
                    columns.len()
                )))
            }
            None => (0..columns.len())
                .map(|k| dataset.records.iter().map(|r| r.covariates[k]).sum::<f64>() / dataset.records.len() as f64)
                .collect(),
        };
        std::iter::once(1.0).chain(at).collect()
    } else {
        Vec::new()
    };

    let settings = FitSettings {
        variant,
        priors,
        sampler: config.sampler.to_config(config.seed, fast),
    };
    let grid = default_grid(&dataset.system_times(), config.output.grid_points)?;
    let m = dataset.component_count();
    let fits = (0..m)
        .into_par_iter()
        .map(|j| {
            let data = dataset.component_observations(j, with_covariates);
            let sampler = SamplerConfig {
                seed: component_seed(config.seed, j),
                ..settings.sampler.clone()
            };
            let chain =
                crate::inference::run_chain(&data, &settings.variant, &settings.priors, &sampler).map_err(|e| {
                    CliError::Fit {
                        component: j + 1,
                        source: e.into(),
                    }
                })?;
            let sample = crate::posterior::thin_with_config(&chain)?;
            let curve = curve_summary(&sample, &grid, config.output.level, &curve_at)?;
            let params = parameter_summaries(&sample, config.output.level)?;
            let diag = convergence_stats(&chain).ok();
            Ok((chain, sample, curve, params, diag))
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    ensure_dir(out)?;
    let mut warnings = Vec::new();
    let counts = dataset.cause_counts();
    let mut counts_csv = String::from("group,count\n");
    for (j, n) in counts.observed.iter().enumerate() {
        let _ = writeln!(counts_csv, "cause {},{}", j + 1, n);
    }
    for (set, n) in &counts.masked {
        let _ = writeln!(counts_csv, "masked {},{}", set.to_string().replace(',', " "), n);
    }
    write_file(&out.join("counts.csv"), &counts_csv)?;

    let mut params_csv = String::from("component,parameter,mean,sd,min,q25,median,q75,max,hpd_lo,hpd_hi\n");
    let mut diag_csv = String::from("component,parameter,acceptance_rate,lag1_autocorrelation,split_discrepancy\n");
    for (j, (chain, sample, curve, params, diag)) in fits.iter().enumerate() {
        for p in params {
            let cells: Vec<String> = summary_cells(&p.stats).iter().map(f64::to_string).collect();
            let _ = writeln!(params_csv, "{},{},{}", j + 1, p.name, cells.join(","));
        }
        // Symmetric fits carry no masking probabilities; keep the table
        // schema identical across variants.
        if sample.draws.first().is_some_and(|d| d.lambdas.is_none()) {
            for name in LAMBDA_NAMES {
                let _ = writeln!(params_csv, "{},{},{}", j + 1, name, ["NA"; 9].join(","));
            }
        }
        if let Some(d) = diag {
            for p in &d.parameters {
                let lag = p.lag1.map_or_else(|| "NA".to_string(), |v| v.to_string());
                let _ = writeln!(
                    diag_csv,
                    "{},{},{},{},{}",
                    j + 1,
                    p.name,
                    d.acceptance_rate,
                    lag,
                    p.split_discrepancy
                );
            }
        }
        write_file(&out.join(format!("curve_c{}.csv", j + 1)), &curve_csv(curve))?;
        if config.output.chains {
            let traces = parameter_traces(&sample.draws);
            let mut chain_csv = traces.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>().join(",");
            chain_csv.push('\n');
            for k in 0..sample.len() {
                let row: Vec<String> = traces.iter().map(|(_, v)| v[k].to_string()).collect();
                chain_csv.push_str(&row.join(","));
                chain_csv.push('\n');
            }
            write_file(&out.join(format!("chain_c{}.csv", j + 1)), &chain_csv)?;
        }
        warnings.extend(chain.warnings.iter().map(|w| format!("component {}: {w}", j + 1)));
    }
    write_file(&out.join("parameters.csv"), &params_csv)?;
    write_file(&out.join("diagnostics.csv"), &diag_csv)?;
    Ok(warnings)
}

/// Simulate one dataset and write it to `out`.
pub fn cmd_simulate(scenario: &ScenarioConfig, seed: u64, out: &Path) -> Result<Dataset, CliError> {
    use rand::SeedableRng;
    let spec = scenario.to_spec(seed, true)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let sim = simulate_dataset(&spec, &mut rng)?;
    sim.dataset.write_path(out)?;
    Ok(sim.dataset)
}

/// Run the scenario and write `mae_replicates.csv` and `mae_summary.csv`
/// into `out`.
pub fn cmd_evaluate(
    scenario: &ScenarioConfig,
    seed: u64,
    replicates: usize,
    out: &Path,
    fast: bool,
) -> Result<MaeReport, CliError> {
    let spec = scenario.to_spec(seed, fast)?;
    let report = run_scenario(&spec, replicates)?;
    ensure_dir(out)?;
    write_file(&out.join("mae_replicates.csv"), &mae_replicates_csv(&report))?;
    write_file(&out.join("mae_summary.csv"), &mae_summary_csv(&report))?;
    Ok(report)
}

/// One line per minimal cut set, 1-based, in size-then-lexicographic order.
pub fn cmd_cutsets(structure: &str) -> Result<String, CliError> {
    let s: SystemStructure = structure.parse()?;
    let mut out = String::new();
    for c in s.minimal_cut_sets()? {
        let _ = writeln!(out, "{c}");
    }
    Ok(out)
}

fn structure_from_config(path: &Path) -> Result<String, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let table: toml::Table = toml::from_str(&text).map_err(|source| CliError::Config {
        path: path.to_path_buf(),
        source,
    })?;
    let field = |key: &str| table.get(key).and_then(|v| v.as_str()).map(String::from);
    match (field("structure"), field("preset")) {
        (Some(s), _) => Ok(s),
        (None, Some(p)) => {
            let spec = ScenarioConfig {
                preset: Some(p),
                ..ScenarioConfig::empty()
            }
            .to_spec(0, true)?;
            Ok(spec.structure.to_string())
        }
        (None, None) => Err(CliError::Invalid("configuration has no `structure`".into())),
    }
}

impl ScenarioConfig {
    fn empty() -> Self {
        ScenarioConfig {
            name: None,
            preset: None,
            structure: None,
            components: Vec::new(),
            n: None,
            p: None,
            seed: default_seed(),
            replicates: default_replicates(),
            grid_points: None,
            variant: None,
            priors: PriorSection::default(),
            sampler: SamplerSection::default(),
        }
    }
}

/// Execute a parsed command line. Messages for the user go to stdout;
/// warnings to stderr.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Fit {
            common,
            data,
            strict_schema,
        } => {
            let path = common.config.ok_or(CliError::Missing("config"))?;
            let mut config = RunConfig::load(&path)?;
            if let Some(seed) = common.seed {
                config.seed = seed;
            }
            let out = common.out.ok_or(CliError::Missing("out"))?;
            for w in cmd_fit(&config, &data, &out, common.fast, strict_schema)? {
                eprintln!("warning: {w}");
            }
            println!("wrote fit results to {}", out.display());
        }
        Command::Simulate { common } => {
            let path = common.config.ok_or(CliError::Missing("config"))?;
            let scenario = ScenarioConfig::load(&path)?;
            let out = common.out.ok_or(CliError::Missing("out"))?;
            let ds = cmd_simulate(&scenario, common.seed.unwrap_or(scenario.seed), &out)?;
            println!("wrote {} systems to {}", ds.records.len(), out.display());
        }
        Command::Evaluate { common, replicates } => {
            let path = common.config.ok_or(CliError::Missing("config"))?;
            let scenario = ScenarioConfig::load(&path)?;
            let out = common.out.ok_or(CliError::Missing("out"))?;
            let seed = common.seed.unwrap_or(scenario.seed);
            let report = cmd_evaluate(
                &scenario,
                seed,
                replicates.unwrap_or(scenario.replicates),
                &out,
                common.fast,
            )?;
            print!("{}", mae_summary_csv(&report));
        }
        Command::Cutsets { structure, config } => {
            let expr = match (structure, config) {
                (Some(s), _) => s,
                (None, Some(path)) => structure_from_config(&path)?,
                (None, None) => return Err(CliError::Missing("config")),
            };
            print!("{}", cmd_cutsets(&expr)?);
        }
    }
    Ok(())
}
