//! Augmented-data likelihood and the Metropolis-within-Gibbs sampler for a
//! single component.
//!
//! Each component is fitted on its own chain. One sweep of the chain:
//!
//! 1. draw the latent censoring category of every masked observation from
//!    its multinomial full conditional;
//! 2. update `(beta, eta, mu)` (or `(beta, gamma, mu)` with covariates) as
//!    one random-walk Metropolis block on `(ln beta, ln eta, logit(mu / mu_max))`;
//! 3. draw each free masking probability from its Beta full conditional.
//!
//! Under symmetric masking the masking probabilities cancel from step 1 and
//! step 3 is skipped.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use thiserror::Error;

use crate::distributions::{DistributionError, Weibull3};
use crate::numeric::log_sum_exp;
use crate::structures::{CensorCode, ComponentStatus};

/// Factors smaller than this contribute `-inf` to the log likelihood.
pub const FACTOR_FLOOR: f64 = 1e-300;

fn floor_log(v: f64) -> f64 {
    if v < FACTOR_FLOOR.ln() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InferenceError {
    #[error("no observations")]
    EmptyData,
    #[error("observation {row}: {message}")]
    InvalidObservation { row: usize, message: String },
    #[error("expected {expected} latent categories for masked rows, got {got}")]
    LatentMismatch { expected: usize, got: usize },
    #[error("covariate dimension mismatch: expected {expected}, got {got}")]
    CovariateMismatch { expected: usize, got: usize },
    #[error("all latent categories have zero probability at t = {time}")]
    DegenerateLatent { time: f64 },
    #[error("masked observations present but every masking probability is constrained to zero")]
    NoMaskingCategory,
    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),
    #[error("initial state has zero posterior density")]
    InfeasibleStart,
    #[error(transparent)]
    Distribution(#[from] DistributionError),
}

/// One component's record for one failed system.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentObservation {
    /// System failure time.
    pub time: f64,
    pub status: ComponentStatus,
    /// Covariates on the log scale of `eta`; empty when the model has none.
    pub covariates: Vec<f64>,
}

impl ComponentObservation {
    pub fn observed(time: f64, code: CensorCode) -> Self {
        ComponentObservation {
            time,
            status: ComponentStatus::Observed(code),
            covariates: Vec::new(),
        }
    }

    pub fn masked(time: f64) -> Self {
        ComponentObservation {
            time,
            status: ComponentStatus::Masked,
            covariates: Vec::new(),
        }
    }

    pub fn with_covariates(mut self, covariates: Vec<f64>) -> Self {
        self.covariates = covariates;
        self
    }
}

/// Masking probabilities `(lambda_1, lambda_2, lambda_3)`, indexed by
/// [`CensorCode::index`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskingProbs(pub [f64; 3]);

impl MaskingProbs {
    pub fn new(uncensored: f64, right: f64, left: f64) -> Result<Self, InferenceError> {
        let probs = [uncensored, right, left];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(InferenceError::InvalidConfig(format!(
                "masking probabilities {probs:?} outside [0, 1]"
            )));
        }
        Ok(MaskingProbs(probs))
    }

    pub fn get(&self, code: CensorCode) -> f64 {
        self.0[code.index()]
    }
}

/// How one masking probability is treated by the sampler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaRule {
    /// Sampled from its Beta full conditional.
    Free,
    /// Structurally zero: the category is impossible for masked rows.
    Zero,
    /// Held at a fixed value.
    Fixed(f64),
}

impl LambdaRule {
    fn excludes_category(self) -> bool {
        matches!(self, LambdaRule::Zero) || self == LambdaRule::Fixed(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskingModel {
    /// Separate masking probability per censoring category.
    Asymmetric,
    /// All non-zero masking probabilities equal; they cancel out.
    Symmetric,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LocationModel {
    /// `mu` is sampled.
    Free,
    /// `mu = 0`: two-parameter Weibull.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerVariant {
    pub masking: MaskingModel,
    pub lambda_rules: [LambdaRule; 3],
    pub location: LocationModel,
}

impl SamplerVariant {
    pub fn asymmetric() -> Self {
        SamplerVariant {
            masking: MaskingModel::Asymmetric,
            lambda_rules: [LambdaRule::Free; 3],
            location: LocationModel::Free,
        }
    }

    pub fn symmetric() -> Self {
        SamplerVariant {
            masking: MaskingModel::Symmetric,
            ..Self::asymmetric()
        }
    }

    /// Marks the masking probability of `code` as structurally zero.
    pub fn with_zero(mut self, code: CensorCode) -> Self {
        self.lambda_rules[code.index()] = LambdaRule::Zero;
        self
    }

    pub fn with_rule(mut self, code: CensorCode, rule: LambdaRule) -> Self {
        self.lambda_rules[code.index()] = rule;
        self
    }

    pub fn with_location(mut self, location: LocationModel) -> Self {
        self.location = location;
        self
    }

    pub fn allowed_categories(&self) -> impl Iterator<Item = CensorCode> + '_ {
        CensorCode::ALL
            .into_iter()
            .filter(|c| !self.lambda_rules[c.index()].excludes_category())
    }

    pub fn is_allowed(&self, code: CensorCode) -> bool {
        !self.lambda_rules[code.index()].excludes_category()
    }
}

/// Gamma prior with shape and rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaPrior {
    pub shape: f64,
    pub rate: f64,
}

impl GammaPrior {
    /// Gamma with the given mean and variance.
    pub fn from_mean_variance(mean: f64, variance: f64) -> Self {
        GammaPrior {
            shape: mean * mean / variance,
            rate: mean / variance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorSpec {
    pub beta: GammaPrior,
    pub eta: GammaPrior,
    pub mu: GammaPrior,
    /// Standard deviation of the zero-mean normal prior on each regression
    /// coefficient of `ln eta`.
    pub coefficient_sd: f64,
}

impl Default for PriorSpec {
    /// Gamma with mean 1 and variance 1000 on each Weibull parameter.
    fn default() -> Self {
        let vague = GammaPrior::from_mean_variance(1.0, 1000.0);
        PriorSpec {
            beta: vague,
            eta: vague,
            mu: vague,
            coefficient_sd: 10.0,
        }
    }
}

impl PriorSpec {
    pub fn validate(&self) -> Result<(), InferenceError> {
        for (name, p) in [("beta", self.beta), ("eta", self.eta), ("mu", self.mu)] {
            if !(p.shape > 0.0 && p.rate > 0.0 && p.shape.is_finite() && p.rate.is_finite()) {
                return Err(InferenceError::InvalidConfig(format!(
                    "{name} prior needs positive shape and rate"
                )));
            }
        }
        if !(self.coefficient_sd > 0.0 && self.coefficient_sd.is_finite()) {
            return Err(InferenceError::InvalidConfig(
                "coefficient prior sd must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// Initial random-walk standard deviations on the transformed scale,
    /// one per block coordinate. `None` uses 0.1 everywhere.
    pub proposal_scales: Option<Vec<f64>>,
    /// Tune proposal scales during burn-in.
    pub adapt: bool,
    pub seed: u64,
}

impl SamplerConfig {
    /// 30000 iterations, burn-in 10000, thinning 20: 1000 retained draws.
    pub fn standard(seed: u64) -> Self {
        SamplerConfig {
            iterations: 30_000,
            burn_in: 10_000,
            thin: 20,
            proposal_scales: None,
            adapt: true,
            seed,
        }
    }

    /// Short profile for tests and CI: 6000 iterations, burn-in 1000, thinning 5.
    pub fn fast(seed: u64) -> Self {
        SamplerConfig {
            iterations: 6_000,
            burn_in: 1_000,
            thin: 5,
            ..Self::standard(seed)
        }
    }

    pub fn validate(&self) -> Result<(), InferenceError> {
        if self.iterations == 0 || self.burn_in >= self.iterations {
            return Err(InferenceError::InvalidConfig(format!(
                "burn-in {} must be smaller than iterations {}",
                self.burn_in, self.iterations
            )));
        }
        if self.thin == 0 {
            return Err(InferenceError::InvalidConfig("thin must be at least 1".into()));
        }
        if let Some(s) = &self.proposal_scales {
            if s.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(InferenceError::InvalidConfig("proposal scales must be positive".into()));
            }
        }
        Ok(())
    }

    /// Number of retained draws after burn-in and thinning.
    pub fn retained(&self) -> usize {
        (self.iterations - self.burn_in).div_ceil(self.thin)
    }
}

/// The scale part of the Weibull parameter block.
#[derive(Debug, Clone, PartialEq)]
pub enum Scale {
    Eta(f64),
    /// Regression coefficients of `ln eta` on the covariates.
    Coefficients(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Theta {
    pub beta: f64,
    pub scale: Scale,
    pub mu: f64,
}

impl Theta {
    pub fn new(beta: f64, eta: f64, mu: f64) -> Self {
        Theta {
            beta,
            scale: Scale::Eta(eta),
            mu,
        }
    }

    /// `eta` for an observation with the given covariates.
    pub fn eta_for(&self, covariates: &[f64]) -> Result<f64, InferenceError> {
        match &self.scale {
            Scale::Eta(eta) => Ok(*eta),
            Scale::Coefficients(gamma) => scale_from_covariates(gamma, covariates),
        }
    }

    pub fn weibull_for(&self, covariates: &[f64]) -> Result<Weibull3, InferenceError> {
        Ok(Weibull3::new(self.beta, self.eta_for(covariates)?, self.mu)?)
    }
}

/// `eta = exp(w . gamma)`.
pub fn scale_from_covariates(gamma: &[f64], w: &[f64]) -> Result<f64, InferenceError> {
    if gamma.len() != w.len() {
        return Err(InferenceError::CovariateMismatch {
            expected: gamma.len(),
            got: w.len(),
        });
    }
    Ok(gamma.iter().zip(w).map(|(g, x)| g * x).sum::<f64>().exp())
}

/// Log of the Weibull factor selected by a censoring category: the density
/// for uncensored, reliability for right-censored and CDF for left-censored
/// observations.
pub fn log_factor(theta: &Weibull3, t: f64, code: CensorCode) -> f64 {
    floor_log(match code {
        CensorCode::Uncensored => theta.log_density(t),
        CensorCode::Right => theta.log_reliability(t),
        CensorCode::Left => theta.log_cdf(t),
    })
}

fn ln_prob(p: f64) -> f64 {
    if p < FACTOR_FLOOR {
        f64::NEG_INFINITY
    } else {
        p.ln()
    }
}

/// Augmented-data log likelihood of one component.
///
/// `latent` holds one category per masked observation, in row order.
pub fn log_likelihood(
    theta: &Theta,
    lambdas: &MaskingProbs,
    latent: &[CensorCode],
    data: &[ComponentObservation],
) -> Result<f64, InferenceError> {
    let masked = data.iter().filter(|o| o.status.is_masked()).count();
    if masked != latent.len() {
        return Err(InferenceError::LatentMismatch {
            expected: masked,
            got: latent.len(),
        });
    }
    let mut d = latent.iter();
    let mut total = 0.0;
    for obs in data {
        let weibull = match theta.weibull_for(&obs.covariates) {
            Ok(w) => w,
            Err(InferenceError::Distribution(_)) => return Ok(f64::NEG_INFINITY),
            Err(e) => return Err(e),
        };
        total += match obs.status {
            ComponentStatus::Observed(code) => log_factor(&weibull, obs.time, code) + ln_prob(1.0 - lambdas.get(code)),
            ComponentStatus::Masked => {
                let code = *d.next().expect("count checked above");
                log_factor(&weibull, obs.time, code) + ln_prob(lambdas.get(code))
            }
        };
    }
    Ok(total)
}

/// Full-conditional category probabilities of a masked observation,
/// `p_c ∝ lambda_c · factor_c(t)`.
pub fn latent_probabilities(theta: &Weibull3, lambdas: &MaskingProbs, t: f64) -> Result<[f64; 3], InferenceError> {
    let weights = CensorCode::ALL.map(|c| ln_prob(lambdas.get(c)) + log_factor(theta, t, c));
    normalize_log_weights(weights, t)
}

/// Category probabilities under symmetric masking, `p_c ∝ factor_c(t)` over
/// the categories the variant allows.
pub fn latent_probabilities_symmetric(
    theta: &Weibull3,
    variant: &SamplerVariant,
    t: f64,
) -> Result<[f64; 3], InferenceError> {
    let weights = CensorCode::ALL.map(|c| {
        if variant.is_allowed(c) {
            log_factor(theta, t, c)
        } else {
            f64::NEG_INFINITY
        }
    });
    normalize_log_weights(weights, t)
}

fn normalize_log_weights(weights: [f64; 3], time: f64) -> Result<[f64; 3], InferenceError> {
    let norm = log_sum_exp(&weights);
    if norm == f64::NEG_INFINITY || norm.is_nan() {
        return Err(InferenceError::DegenerateLatent { time });
    }
    Ok(weights.map(|w| (w - norm).exp()))
}

fn draw_category<R: Rng + ?Sized>(probs: &[f64; 3], rng: &mut R) -> CensorCode {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for c in CensorCode::ALL {
        acc += probs[c.index()];
        if u < acc {
            return c;
        }
    }
    // Rounding left u above the total; take the last category with mass.
    CensorCode::ALL
        .into_iter()
        .rev()
        .find(|c| probs[c.index()] > 0.0)
        .expect("normalized probabilities have mass")
}

pub fn draw_latent_d<R: Rng + ?Sized>(
    theta: &Weibull3,
    lambdas: &MaskingProbs,
    t: f64,
    rng: &mut R,
) -> Result<CensorCode, InferenceError> {
    Ok(draw_category(&latent_probabilities(theta, lambdas, t)?, rng))
}

pub fn draw_latent_d_symmetric<R: Rng + ?Sized>(
    theta: &Weibull3,
    variant: &SamplerVariant,
    t: f64,
    rng: &mut R,
) -> Result<CensorCode, InferenceError> {
    Ok(draw_category(&latent_probabilities_symmetric(theta, variant, t)?, rng))
}

/// Draw from `Beta(latent_count + 1, observed_count + 1)`: the full
/// conditional of one masking probability given how many masked rows sit
/// in its category and how many unmasked rows carry the same code.
pub fn draw_lambda<R: Rng + ?Sized>(latent_count: usize, observed_count: usize, rng: &mut R) -> f64 {
    Beta::new(latent_count as f64 + 1.0, observed_count as f64 + 1.0)
        .expect("beta parameters are at least 1")
        .sample(rng)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub theta: Theta,
    /// `None` under symmetric masking.
    pub lambdas: Option<MaskingProbs>,
    /// Current category of each masked observation, in row order.
    pub latent: Vec<CensorCode>,
    pub iteration: usize,
}

/// One stored iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainDraw {
    pub theta: Theta,
    pub lambdas: Option<MaskingProbs>,
    /// Number of masked rows in each latent category.
    pub latent_counts: [usize; 3],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SamplerWarning {
    /// Every observation is masked; the component is identified only
    /// through the latent categories.
    AllMasked,
    /// Fewer than three uncensored or masked observations.
    InsufficientData { informative: usize },
}

impl std::fmt::Display for SamplerWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SamplerWarning::AllMasked => f.write_str("all observations are masked"),
            SamplerWarning::InsufficientData { informative } => {
                write!(f, "insufficient data: {informative} uncensored or masked observations")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawChain {
    /// Every iteration, burn-in included.
    pub draws: Vec<ChainDraw>,
    pub final_state: ChainState,
    /// Final proposal standard deviations on the transformed scale.
    pub proposal_scales: Vec<f64>,
    pub accepted_after_burn_in: usize,
    pub accepted_total: usize,
    pub config: SamplerConfig,
    pub variant: SamplerVariant,
    pub warnings: Vec<SamplerWarning>,
}

impl RawChain {
    pub fn acceptance_rate(&self) -> f64 {
        let kept = self.config.iterations - self.config.burn_in;
        self.accepted_after_burn_in as f64 / kept as f64
    }
}

/// Upper bound for `mu`: the smallest time among rows that contribute a
/// density or CDF factor (uncensored, left-censored or masked). `None` when
/// every row is right-censored.
pub fn location_bound(data: &[ComponentObservation]) -> Option<f64> {
    data.iter()
        .filter(|o| o.status != ComponentStatus::Observed(CensorCode::Right))
        .map(|o| o.time)
        .min_by(f64::total_cmp)
}

/// The theta full conditional with the latent categories held fixed, in
/// transformed coordinates `(ln beta, ln eta | gamma.., logit(mu/mu_max) | ln mu)`.
struct ThetaTarget<'a> {
    data: &'a [ComponentObservation],
    priors: &'a PriorSpec,
    location: LocationModel,
    mu_max: Option<f64>,
    covariates: usize,
}

impl ThetaTarget<'_> {
    fn dim(&self) -> usize {
        1 + self.covariates.max(1) + usize::from(self.location == LocationModel::Free)
    }

    fn to_coords(&self, theta: &Theta) -> Vec<f64> {
        let mut u = vec![theta.beta.ln()];
        match &theta.scale {
            Scale::Eta(eta) => u.push(eta.ln()),
            Scale::Coefficients(g) => u.extend_from_slice(g),
        }
        if self.location == LocationModel::Free {
            u.push(match self.mu_max {
                Some(max) => {
                    let r = theta.mu / max;
                    r.ln() - (-r).ln_1p()
                }
                None => theta.mu.ln(),
            });
        }
        u
    }

    /// Returns the parameters and `ln mu` (kept separately so that the
    /// prior stays finite when `mu` underflows).
    fn theta_at(&self, u: &[f64]) -> (Theta, f64) {
        let beta = u[0].exp();
        let scale = if self.covariates == 0 {
            Scale::Eta(u[1].exp())
        } else {
            Scale::Coefficients(u[1..1 + self.covariates].to_vec())
        };
        let (mu, ln_mu) = match (self.location, self.mu_max) {
            (LocationModel::Zero, _) => (0.0, f64::NEG_INFINITY),
            (LocationModel::Free, Some(max)) => {
                let z = u[u.len() - 1];
                let ln_mu = max.ln() - softplus(-z);
                (ln_mu.exp(), ln_mu)
            }
            (LocationModel::Free, None) => {
                let z = u[u.len() - 1];
                (z.exp(), z)
            }
        };
        (Theta { beta, scale, mu }, ln_mu)
    }

    /// Log prior plus log Jacobian of the transformation.
    fn log_prior(&self, u: &[f64], theta: &Theta, ln_mu: f64) -> f64 {
        let p = self.priors;
        let mut lp = p.beta.shape * u[0] - p.beta.rate * theta.beta;
        match &theta.scale {
            Scale::Eta(eta) => lp += p.eta.shape * u[1] - p.eta.rate * eta,
            Scale::Coefficients(g) => {
                let var = p.coefficient_sd * p.coefficient_sd;
                lp -= g.iter().map(|x| x * x).sum::<f64>() / (2.0 * var);
            }
        }
        if self.location == LocationModel::Free {
            lp += p.mu.shape * ln_mu - p.mu.rate * theta.mu;
            if self.mu_max.is_some() {
                // ln(1 - mu / mu_max) = ln sigmoid(-z)
                lp -= softplus(u[u.len() - 1]);
            }
        }
        lp
    }

    /// Log of the theta full conditional (up to a constant) at `u`.
    fn log_density(&self, u: &[f64], latent: &[CensorCode]) -> f64 {
        if u.iter().any(|v| !v.is_finite()) {
            return f64::NEG_INFINITY;
        }
        let (theta, ln_mu) = self.theta_at(u);
        let lp = self.log_prior(u, &theta, ln_mu);
        if !lp.is_finite() {
            return f64::NEG_INFINITY;
        }
        lp + self.log_likelihood(&theta, latent)
    }

    /// Sum of the Weibull factors; masking-probability terms do not depend
    /// on theta and are dropped.
    fn log_likelihood(&self, theta: &Theta, latent: &[CensorCode]) -> f64 {
        let mut d = latent.iter();
        let shared = match theta.scale {
            Scale::Eta(eta) => match Weibull3::new(theta.beta, eta, theta.mu) {
                Ok(w) => Some(w),
                Err(_) => return f64::NEG_INFINITY,
            },
            Scale::Coefficients(_) => None,
        };
        let mut total = 0.0;
        for obs in self.data {
            let code = match obs.status {
                ComponentStatus::Observed(code) => code,
                ComponentStatus::Masked => *d.next().expect("one latent per masked row"),
            };
            let term = match &shared {
                Some(w) => log_factor(w, obs.time, code),
                None => match theta.weibull_for(&obs.covariates) {
                    Ok(w) => log_factor(&w, obs.time, code),
                    Err(_) => f64::NEG_INFINITY,
                },
            };
            total += term;
            if total == f64::NEG_INFINITY {
                return total;
            }
        }
        total
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Random-walk proposal `u + L z` with `L` lower triangular and `z`
/// standard normal.
#[derive(Debug, Clone, PartialEq)]
struct Proposal {
    factor: Vec<Vec<f64>>,
}

impl Proposal {
    fn diagonal(scales: &[f64]) -> Self {
        let d = scales.len();
        let factor = (0..d)
            .map(|i| (0..d).map(|j| if i == j { scales[i] } else { 0.0 }).collect())
            .collect();
        Proposal { factor }
    }

    /// `2.38 / sqrt(d)` times the Cholesky factor of the empirical
    /// covariance of `trace`. `None` if the covariance is not positive
    /// definite.
    fn from_trace(trace: &[Vec<f64>]) -> Option<Self> {
        let d = trace.first()?.len();
        let n = trace.len() as f64;
        let mean: Vec<f64> = (0..d).map(|i| trace.iter().map(|v| v[i]).sum::<f64>() / n).collect();
        let mut cov = vec![vec![0.0; d]; d];
        for v in trace {
            for i in 0..d {
                for j in 0..=i {
                    cov[i][j] += (v[i] - mean[i]) * (v[j] - mean[j]) / (n - 1.0);
                }
            }
        }
        let c = 2.38 * 2.38 / d as f64;
        let mut l = vec![vec![0.0; d]; d];
        for i in 0..d {
            for j in 0..=i {
                let sum = c * cov[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
                if i == j {
                    if !(sum > 0.0 && sum.is_finite()) {
                        return None;
                    }
                    l[i][i] = sum.sqrt();
                } else {
                    l[i][j] = sum / l[j][j];
                }
            }
        }
        Some(Proposal { factor: l })
    }

    fn rescale(&mut self, f: f64) {
        self.factor.iter_mut().flatten().for_each(|v| *v *= f);
    }

    /// Marginal proposal standard deviations.
    fn marginal_sds(&self) -> Vec<f64> {
        self.factor
            .iter()
            .map(|row| row.iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect()
    }

    fn propose<R: Rng + ?Sized>(&self, u: &[f64], rng: &mut R) -> Vec<f64> {
        let z: Vec<f64> = (0..u.len()).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        u.iter()
            .zip(&self.factor)
            .map(|(ui, row)| ui + row.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>())
            .collect()
    }
}

/// One random-walk Metropolis update of the whole parameter block.
fn mh_step<R: Rng + ?Sized>(
    target: &ThetaTarget<'_>,
    current: &mut Vec<f64>,
    current_lp: &mut f64,
    latent: &[CensorCode],
    proposal: &Proposal,
    rng: &mut R,
) -> bool {
    let candidate = proposal.propose(current, rng);
    let lp = target.log_density(&candidate, latent);
    let log_u: f64 = rng.random::<f64>().ln();
    if lp > f64::NEG_INFINITY && log_u < lp - *current_lp {
        *current = candidate;
        *current_lp = lp;
        true
    } else {
        false
    }
}

fn covariate_count(data: &[ComponentObservation]) -> Result<usize, InferenceError> {
    let k = data.first().map_or(0, |o| o.covariates.len());
    for (row, obs) in data.iter().enumerate() {
        if obs.covariates.len() != k {
            return Err(InferenceError::CovariateMismatch {
                expected: k,
                got: obs.covariates.len(),
            });
        }
        if !(obs.time.is_finite() && obs.time > 0.0) {
            return Err(InferenceError::InvalidObservation {
                row,
                message: format!("time {} must be positive", obs.time),
            });
        }
    }
    Ok(k)
}

/// A single Metropolis-Hastings update of theta with the latent categories
/// and masking probabilities of `state` held fixed.
pub fn mh_update_theta<R: Rng + ?Sized>(
    state: &ChainState,
    data: &[ComponentObservation],
    priors: &PriorSpec,
    location: LocationModel,
    scales: &[f64],
    rng: &mut R,
) -> Result<(Theta, bool), InferenceError> {
    let covariates = covariate_count(data)?;
    let target = ThetaTarget {
        data,
        priors,
        location,
        mu_max: location_bound(data),
        covariates,
    };
    if scales.len() != target.dim() {
        return Err(InferenceError::InvalidConfig(format!(
            "expected {} proposal scales, got {}",
            target.dim(),
            scales.len()
        )));
    }
    let mut u = target.to_coords(&state.theta);
    let mut lp = target.log_density(&u, &state.latent);
    if lp == f64::NEG_INFINITY {
        return Err(InferenceError::InfeasibleStart);
    }
    let accepted = mh_step(
        &target,
        &mut u,
        &mut lp,
        &state.latent,
        &Proposal::diagonal(scales),
        rng,
    );
    Ok((target.theta_at(&u).0, accepted))
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn initial_theta(data: &[ComponentObservation], covariates: usize, location: LocationModel) -> Theta {
    let mut times: Vec<f64> = data.iter().map(|o| o.time).collect();
    let min_t = times.iter().copied().fold(f64::INFINITY, f64::min);
    let med = median(&mut times);
    let scale = if covariates == 0 {
        Scale::Eta(med)
    } else {
        // Spread ln(median) along the mean covariate direction.
        let mut mean_w = vec![0.0; covariates];
        for obs in data {
            for (m, w) in mean_w.iter_mut().zip(&obs.covariates) {
                *m += w / data.len() as f64;
            }
        }
        let norm2: f64 = mean_w.iter().map(|w| w * w).sum();
        if norm2 > 0.0 {
            Scale::Coefficients(mean_w.iter().map(|w| med.ln() * w / norm2).collect())
        } else {
            Scale::Coefficients(vec![0.0; covariates])
        }
    };
    let mu = match location {
        LocationModel::Free => 0.5 * min_t,
        LocationModel::Zero => 0.0,
    };
    Theta { beta: 1.0, scale, mu }
}

/// Batch length for acceptance-rate tuning during burn-in.
const ADAPT_WINDOW: usize = 50;
const TARGET_ACCEPTANCE: (f64, f64) = (0.23, 0.45);

/// Runs one Metropolis-within-Gibbs chain for one component.
///
/// Deterministic for a given seed. The random-walk proposal is tuned during
/// burn-in (acceptance-rate control, plus a full proposal covariance
/// estimated from burn-in draws at half and three quarters of the burn-in)
/// and frozen afterwards.
pub fn run_chain(
    data: &[ComponentObservation],
    variant: &SamplerVariant,
    priors: &PriorSpec,
    config: &SamplerConfig,
) -> Result<RawChain, InferenceError> {
    if data.is_empty() {
        return Err(InferenceError::EmptyData);
    }
    config.validate()?;
    priors.validate()?;
    let covariates = covariate_count(data)?;
    for rule in variant.lambda_rules {
        if let LambdaRule::Fixed(v) = rule {
            if !(0.0..=1.0).contains(&v) {
                return Err(InferenceError::InvalidConfig(format!(
                    "fixed masking probability {v} outside [0, 1]"
                )));
            }
        }
    }
    let masked_rows: Vec<usize> = (0..data.len()).filter(|&i| data[i].status.is_masked()).collect();
    let allowed: Vec<CensorCode> = variant.allowed_categories().collect();
    if !masked_rows.is_empty() && allowed.is_empty() {
        return Err(InferenceError::NoMaskingCategory);
    }

    let mut warnings = Vec::new();
    if masked_rows.len() == data.len() {
        warnings.push(SamplerWarning::AllMasked);
    }
    let uncensored = data
        .iter()
        .filter(|o| o.status == ComponentStatus::Observed(CensorCode::Uncensored))
        .count();
    if uncensored + masked_rows.len() < 3 {
        warnings.push(SamplerWarning::InsufficientData {
            informative: uncensored + masked_rows.len(),
        });
    }

    // Unmasked counts per code: n_f, n_r, n_l.
    let mut observed_counts = [0usize; 3];
    for obs in data {
        if let ComponentStatus::Observed(code) = obs.status {
            observed_counts[code.index()] += 1;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let target = ThetaTarget {
        data,
        priors,
        location: variant.location,
        mu_max: location_bound(data),
        covariates,
    };
    let mut theta = initial_theta(data, covariates, variant.location);
    let mut lambdas = match variant.masking {
        MaskingModel::Symmetric => None,
        MaskingModel::Asymmetric => Some(MaskingProbs(variant.lambda_rules.map(|r| match r {
            LambdaRule::Free => 0.5,
            LambdaRule::Zero => 0.0,
            LambdaRule::Fixed(v) => v,
        }))),
    };
    let mut latent: Vec<CensorCode> = masked_rows
        .iter()
        .map(|_| allowed[rng.random_range(0..allowed.len())])
        .collect();

    let scales = match &config.proposal_scales {
        Some(s) if s.len() == target.dim() => s.clone(),
        Some(s) => {
            return Err(InferenceError::InvalidConfig(format!(
                "expected {} proposal scales, got {}",
                target.dim(),
                s.len()
            )))
        }
        None => vec![0.1; target.dim()],
    };
    let mut u = target.to_coords(&theta);
    let mut lp = target.log_density(&u, &latent);
    if lp == f64::NEG_INFINITY {
        return Err(InferenceError::InfeasibleStart);
    }

    let mut draws = Vec::with_capacity(config.iterations);
    let mut accepted_total = 0;
    let mut accepted_after = 0;
    let mut window_accepts = 0;
    let mut proposal = Proposal::diagonal(&scales);
    // The proposal covariance is re-estimated from the burn-in draws at
    // these iterations, each time from the draws since the previous point.
    let refits = [config.burn_in / 4, config.burn_in / 2, 3 * config.burn_in / 4];
    let mut burn_trace: Vec<Vec<f64>> = Vec::new();

    for b in 0..config.iterations {
        // Latent categories for masked rows.
        if !masked_rows.is_empty() {
            for (slot, &row) in latent.iter_mut().zip(&masked_rows) {
                let obs = &data[row];
                let w = theta.weibull_for(&obs.covariates)?;
                *slot = match &lambdas {
                    Some(l) => draw_latent_d(&w, l, obs.time, &mut rng)?,
                    None => draw_latent_d_symmetric(&w, variant, obs.time, &mut rng)?,
                };
            }
            // The likelihood changed with the latent categories.
            lp = target.log_density(&u, &latent);
        }

        // Theta block.
        let accepted = mh_step(&target, &mut u, &mut lp, &latent, &proposal, &mut rng);
        theta = target.theta_at(&u).0;
        if accepted {
            accepted_total += 1;
            window_accepts += 1;
            if b >= config.burn_in {
                accepted_after += 1;
            }
        }

        // Masking probabilities.
        let mut latent_counts = [0usize; 3];
        for c in &latent {
            latent_counts[c.index()] += 1;
        }
        if let Some(l) = lambdas.as_mut() {
            for code in CensorCode::ALL {
                if variant.lambda_rules[code.index()] == LambdaRule::Free {
                    l.0[code.index()] =
                        draw_lambda(latent_counts[code.index()], observed_counts[code.index()], &mut rng);
                }
            }
        }

        if config.adapt && b < config.burn_in {
            if b >= refits[0] {
                burn_trace.push(u.clone());
            }
            if refits[1..].contains(&(b + 1)) && burn_trace.len() >= 100 {
                if let Some(p) = Proposal::from_trace(&burn_trace) {
                    proposal = p;
                }
                burn_trace.clear();
            }
            if (b + 1) % ADAPT_WINDOW == 0 {
                let rate = window_accepts as f64 / ADAPT_WINDOW as f64;
                let factor = if rate < TARGET_ACCEPTANCE.0 {
                    0.8
                } else if rate > TARGET_ACCEPTANCE.1 {
                    1.25
                } else {
                    1.0
                };
                proposal.rescale(factor);
                window_accepts = 0;
            }
        }

        draws.push(ChainDraw {
            theta: theta.clone(),
            lambdas,
            latent_counts,
        });
    }

    Ok(RawChain {
        draws,
        final_state: ChainState {
            theta,
            lambdas,
            latent,
            iteration: config.iterations,
        },
        proposal_scales: proposal.marginal_sds(),
        accepted_after_burn_in: accepted_after,
        accepted_total,
        config: config.clone(),
        variant: *variant,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use CensorCode::{Left, Right, Uncensored};

    fn exp1() -> Weibull3 {
        Weibull3::new(1.0, 1.0, 0.0).unwrap()
    }

    #[test]
    fn likelihood_examples() {
        let theta = Theta::new(1.0, 1.0, 0.0);
        let l = MaskingProbs::new(0.5, 0.25, 0.5).unwrap();
        let data = [ComponentObservation::observed(1.0, Uncensored)];
        let v = log_likelihood(&theta, &l, &[], &data).unwrap();
        assert!((v - (-1.0 + 0.5f64.ln())).abs() < 1e-12, "{v}");
        assert!((v + 1.693147).abs() < 1e-6);

        let data = [ComponentObservation::masked(1.0)];
        let v = log_likelihood(&theta, &l, &[Right], &data).unwrap();
        assert!((v + 2.386294).abs() < 1e-6, "{v}");
    }

    #[test]
    fn likelihood_requires_latent_for_each_masked_row() {
        let theta = Theta::new(1.0, 1.0, 0.0);
        let l = MaskingProbs::new(0.5, 0.5, 0.5).unwrap();
        let data = [ComponentObservation::masked(1.0), ComponentObservation::masked(2.0)];
        assert_eq!(
            log_likelihood(&theta, &l, &[Right], &data),
            Err(InferenceError::LatentMismatch { expected: 2, got: 1 })
        );
    }

    #[test]
    fn likelihood_is_minus_infinity_outside_support() {
        let theta = Theta::new(1.0, 1.0, 2.0);
        let l = MaskingProbs::new(0.5, 0.5, 0.5).unwrap();
        let data = [ComponentObservation::observed(1.0, Uncensored)];
        assert_eq!(log_likelihood(&theta, &l, &[], &data).unwrap(), f64::NEG_INFINITY);
        // Right censoring before the location is certain: factor 1.
        let data = [ComponentObservation::observed(1.0, Right)];
        assert!((log_likelihood(&theta, &l, &[], &data).unwrap() - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn latent_probability_examples() {
        // f = 1, R = 0.5, F = 0.5 with equal lambdas.
        let w = Weibull3::new(1.0, 1.0 / 0.5f64.ln().abs(), 0.0).unwrap();
        let t = 1.0;
        let (f, r, big_f) = (w.density(t), w.reliability(t), w.cdf(t));
        assert!((r - 0.5).abs() < 1e-12);
        let l = MaskingProbs::new(0.5, 0.5, 0.5).unwrap();
        let p = latent_probabilities(&w, &l, t).unwrap();
        let c = f + r + big_f;
        for (got, want) in p.iter().zip([f / c, r / c, big_f / c]) {
            assert!((got - want).abs() < 1e-12);
        }
        let p_sym = latent_probabilities_symmetric(&w, &SamplerVariant::symmetric(), t).unwrap();
        for (a, b) in p.iter().zip(p_sym) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn latent_probabilities_substitution() {
        // Direct substitution f = 1, R = F = 0.5 into lambda_c * factor_c / C.
        let weights = [0.5 * 1.0, 0.5 * 0.5, 0.5 * 0.5];
        let c: f64 = weights.iter().sum();
        assert_eq!(weights.map(|w| w / c), [0.5, 0.25, 0.25]);
        let got = normalize_log_weights(weights.map(f64::ln), 1.0).unwrap();
        for (g, w) in got.iter().zip([0.5, 0.25, 0.25]) {
            assert!((g - w).abs() < 1e-15);
        }
    }

    #[test]
    fn structural_zero_never_drawn() {
        let w = exp1();
        let l = MaskingProbs::new(0.5, 0.0, 0.5).unwrap();
        let p = latent_probabilities(&w, &l, 1.0).unwrap();
        assert_eq!(p[1], 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            assert_ne!(draw_latent_d(&w, &l, 1.0, &mut rng).unwrap(), Right);
        }
        let sym = SamplerVariant::symmetric().with_zero(Right);
        for _ in 0..10_000 {
            assert_ne!(draw_latent_d_symmetric(&w, &sym, 1.0, &mut rng).unwrap(), Right);
        }
    }

    #[test]
    fn symmetric_before_location_forces_right_censoring() {
        let w = Weibull3::new(2.0, 1.0, 3.0).unwrap();
        let p = latent_probabilities_symmetric(&w, &SamplerVariant::symmetric(), 2.0).unwrap();
        assert_eq!(p, [0.0, 1.0, 0.0]);
        let sym = SamplerVariant::symmetric().with_zero(Right);
        assert_eq!(
            latent_probabilities_symmetric(&w, &sym, 2.0),
            Err(InferenceError::DegenerateLatent { time: 2.0 })
        );
    }

    #[test]
    fn empirical_latent_frequencies() {
        let w = Weibull3::new(1.5, 2.0, 0.2).unwrap();
        let l = MaskingProbs::new(0.3, 0.6, 0.2).unwrap();
        let p = latent_probabilities(&w, &l, 1.7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 100_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[draw_latent_d(&w, &l, 1.7, &mut rng).unwrap().index()] += 1;
        }
        for c in 0..3 {
            let freq = counts[c] as f64 / n as f64;
            let se = (p[c] * (1.0 - p[c]) / n as f64).sqrt();
            assert!((freq - p[c]).abs() < 3.0 * se, "category {c}: {freq} vs {}", p[c]);
        }
    }

    #[test]
    fn beta_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 100_000;
        let mean = (0..n).map(|_| draw_lambda(3, 5, &mut rng)).sum::<f64>() / n as f64;
        // Beta(4, 6): mean 0.4, variance 24 / (100 * 11).
        let se = (24.0f64 / 1100.0 / n as f64).sqrt();
        assert!((mean - 0.4).abs() < 3.0 * se, "{mean}");
        let mean = (0..n).map(|_| draw_lambda(0, 0, &mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 3.0 * (1.0f64 / 12.0 / n as f64).sqrt());
    }

    #[test]
    fn scale_link() {
        assert_eq!(scale_from_covariates(&[0.3, -2.0], &[0.0, 0.0]).unwrap(), 1.0);
        assert!((scale_from_covariates(&[10f64.ln()], &[1.0]).unwrap() - 10.0).abs() < 1e-12);
        assert!(matches!(
            scale_from_covariates(&[1.0], &[1.0, 2.0]),
            Err(InferenceError::CovariateMismatch { expected: 1, got: 2 })
        ));
    }

    fn small_data() -> Vec<ComponentObservation> {
        vec![
            ComponentObservation::observed(1.2, Uncensored),
            ComponentObservation::observed(2.5, Right),
            ComponentObservation::observed(0.9, Left),
            ComponentObservation::masked(1.6),
            ComponentObservation::observed(3.1, Uncensored),
        ]
    }

    #[test]
    fn mh_identity_proposal_always_accepted() {
        let data = small_data();
        let state = ChainState {
            theta: Theta::new(1.3, 2.0, 0.4),
            lambdas: None,
            latent: vec![Uncensored],
            iteration: 0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        // A zero-width proposal returns the current point: ratio 1.
        let (theta, accepted) = mh_update_theta(
            &state,
            &data,
            &PriorSpec::default(),
            LocationModel::Free,
            &[0.0, 0.0, 0.0],
            &mut rng,
        )
        .unwrap();
        assert!(accepted);
        assert!((theta.beta - 1.3).abs() < 1e-12 && (theta.mu - 0.4).abs() < 1e-12);
    }

    #[test]
    fn mh_rejects_support_violation() {
        // A proposal pushing mu past an uncensored time has zero density.
        let data = small_data();
        let target = ThetaTarget {
            data: &data,
            priors: &PriorSpec::default(),
            location: LocationModel::Free,
            mu_max: None,
            covariates: 0,
        };
        let theta = Theta::new(1.3, 2.0, 1.0);
        let u = target.to_coords(&theta);
        assert_eq!(target.log_density(&u, &[Uncensored]), f64::NEG_INFINITY);
        // With the bound in place the logit transform keeps mu below 0.9.
        let bounded = ThetaTarget {
            mu_max: location_bound(&data),
            ..target
        };
        assert_eq!(bounded.mu_max, Some(0.9));
        for z in [-5.0, 0.0, 5.0, 30.0] {
            let (th, _) = bounded.theta_at(&[0.0, 0.0, z]);
            assert!(th.mu < 0.9 || z >= 30.0);
        }
    }

    #[test]
    fn location_bound_ignores_right_censored_rows() {
        let data = vec![
            ComponentObservation::observed(0.5, Right),
            ComponentObservation::masked(2.0),
            ComponentObservation::observed(1.5, Left),
        ];
        assert_eq!(location_bound(&data), Some(1.5));
        assert_eq!(location_bound(&data[..1]), None);
    }

    #[test]
    fn chains_are_deterministic() {
        let data = small_data();
        let config = SamplerConfig {
            iterations: 800,
            burn_in: 200,
            thin: 2,
            ..SamplerConfig::fast(77)
        };
        let a = run_chain(&data, &SamplerVariant::asymmetric(), &PriorSpec::default(), &config).unwrap();
        let b = run_chain(&data, &SamplerVariant::asymmetric(), &PriorSpec::default(), &config).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.draws.len(), 800);
        let c = run_chain(
            &data,
            &SamplerVariant::asymmetric(),
            &PriorSpec::default(),
            &SamplerConfig { seed: 78, ..config },
        )
        .unwrap();
        assert_ne!(a.draws, c.draws);
    }

    #[test]
    fn symmetric_chain_has_no_lambdas() {
        let data = small_data();
        let config = SamplerConfig {
            iterations: 300,
            burn_in: 100,
            thin: 1,
            ..SamplerConfig::fast(1)
        };
        let chain = run_chain(&data, &SamplerVariant::symmetric(), &PriorSpec::default(), &config).unwrap();
        assert!(chain.draws.iter().all(|d| d.lambdas.is_none()));
        let asym = run_chain(&data, &SamplerVariant::asymmetric(), &PriorSpec::default(), &config).unwrap();
        assert!(asym.draws.iter().all(|d| d.lambdas.is_some()));
    }

    #[test]
    fn zero_constraint_respected_in_chain() {
        let data = small_data();
        let config = SamplerConfig {
            iterations: 2000,
            burn_in: 500,
            thin: 1,
            ..SamplerConfig::fast(5)
        };
        for variant in [
            SamplerVariant::asymmetric().with_zero(Right),
            SamplerVariant::symmetric().with_zero(Right),
        ] {
            let chain = run_chain(&data, &variant, &PriorSpec::default(), &config).unwrap();
            assert!(chain.draws.iter().all(|d| d.latent_counts[Right.index()] == 0));
            if let Some(l) = chain.draws[10].lambdas {
                assert_eq!(l.get(Right), 0.0);
            }
        }
    }

    #[test]
    fn chain_errors_and_warnings() {
        let config = SamplerConfig::fast(0);
        assert_eq!(
            run_chain(&[], &SamplerVariant::asymmetric(), &PriorSpec::default(), &config).unwrap_err(),
            InferenceError::EmptyData
        );
        let all_zero = SamplerVariant::asymmetric()
            .with_zero(Uncensored)
            .with_zero(Right)
            .with_zero(Left);
        assert_eq!(
            run_chain(&small_data(), &all_zero, &PriorSpec::default(), &config).unwrap_err(),
            InferenceError::NoMaskingCategory
        );
        let bad = SamplerConfig {
            burn_in: 6000,
            ..config.clone()
        };
        assert!(matches!(
            run_chain(
                &small_data(),
                &SamplerVariant::asymmetric(),
                &PriorSpec::default(),
                &bad
            ),
            Err(InferenceError::InvalidConfig(_))
        ));
        let masked = vec![ComponentObservation::masked(1.0), ComponentObservation::masked(2.0)];
        let short = SamplerConfig {
            iterations: 200,
            burn_in: 50,
            thin: 1,
            ..config
        };
        let chain = run_chain(&masked, &SamplerVariant::symmetric(), &PriorSpec::default(), &short).unwrap();
        assert!(chain.warnings.contains(&SamplerWarning::AllMasked));
        assert!(chain
            .warnings
            .contains(&SamplerWarning::InsufficientData { informative: 2 }));
    }

    #[test]
    fn covariate_chain_runs() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let data: Vec<ComponentObservation> = (0..200)
            .map(|i| {
                let stress = if i % 2 == 0 { 0.0 } else { 1.0 };
                let eta = (2.0f64 - 0.7 * stress).exp();
                let t = Weibull3::new(2.0, eta, 0.0).unwrap().sample(&mut rng);
                ComponentObservation::observed(t, Uncensored).with_covariates(vec![1.0, stress])
            })
            .collect();
        let variant = SamplerVariant::asymmetric().with_location(LocationModel::Zero);
        let chain = run_chain(&data, &variant, &PriorSpec::default(), &SamplerConfig::fast(3)).unwrap();
        let kept = &chain.draws[1000..];
        let mean_slope = kept
            .iter()
            .map(|d| match &d.theta.scale {
                Scale::Coefficients(g) => g[1],
                Scale::Eta(_) => unreachable!(),
            })
            .sum::<f64>()
            / kept.len() as f64;
        assert!((mean_slope + 0.7).abs() < 0.15, "{mean_slope}");
    }
}
