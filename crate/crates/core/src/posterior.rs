//! Chain post-processing: burn-in and thinning, posterior reliability
//! curves, empirical HPD intervals and convergence diagnostics.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use rayon::prelude::*;
use thiserror::Error;

use crate::inference::{ChainDraw, InferenceError, RawChain, Scale};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PosteriorError {
    #[error("burn-in {burn_in} leaves no draws in a chain of length {length}")]
    BurnInTooLong { burn_in: usize, length: usize },
    #[error("thinning interval must be at least 1")]
    ZeroThin,
    #[error("posterior sample is empty")]
    EmptySample,
    #[error("evaluation grid is empty")]
    EmptyGrid,
    #[error("HPD needs at least 10 draws, got {0}")]
    TooFewDraws(usize),
    #[error("credibility level {0} outside (0, 1)")]
    InvalidLevel(f64),
    #[error("invalid time {0}")]
    InvalidTime(f64),
    #[error("chain of length {0} is too short for diagnostics (need 100)")]
    ChainTooShort(usize),
    #[error(transparent)]
    Inference(#[from] InferenceError),
}

/// Where a posterior sample came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Provenance {
    pub seed: u64,
    /// Hash of the sampler configuration and variant.
    pub config_hash: u64,
}

/// Retained draws after burn-in and thinning.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSample {
    pub draws: Vec<ChainDraw>,
    pub provenance: Provenance,
}

impl PosteriorSample {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }
}

/// Indices kept from a chain of `length`: `burn_in, burn_in + thin, ...`.
pub fn thin_indices(length: usize, burn_in: usize, thin: usize) -> Result<Vec<usize>, PosteriorError> {
    if thin == 0 {
        return Err(PosteriorError::ZeroThin);
    }
    if burn_in >= length {
        return Err(PosteriorError::BurnInTooLong { burn_in, length });
    }
    Ok((burn_in..length).step_by(thin).collect())
}

pub fn thin_chain(raw: &RawChain, burn_in: usize, thin: usize) -> Result<PosteriorSample, PosteriorError> {
    let draws = thin_indices(raw.draws.len(), burn_in, thin)?
        .into_iter()
        .map(|i| raw.draws[i].clone())
        .collect();
    let mut hasher = DefaultHasher::new();
    format!("{:?}|{:?}", raw.config, raw.variant).hash(&mut hasher);
    Ok(PosteriorSample {
        draws,
        provenance: Provenance {
            seed: raw.config.seed,
            config_hash: hasher.finish(),
        },
    })
}

/// Thin a chain with the burn-in and interval stored in its configuration.
pub fn thin_with_config(raw: &RawChain) -> Result<PosteriorSample, PosteriorError> {
    thin_chain(raw, raw.config.burn_in, raw.config.thin)
}

/// `R(t | theta_k)` for every draw, at the given covariates (empty when the
/// model has none).
pub fn reliability_draws(sample: &PosteriorSample, t: f64, covariates: &[f64]) -> Result<Vec<f64>, PosteriorError> {
    if sample.is_empty() {
        return Err(PosteriorError::EmptySample);
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(PosteriorError::InvalidTime(t));
    }
    sample
        .draws
        .iter()
        .map(|d| Ok(d.theta.weibull_for(covariates)?.reliability(t)))
        .collect()
}

/// Posterior mean reliability `(1/n_p) sum_k R(t | theta_k)`.
pub fn posterior_mean_reliability(sample: &PosteriorSample, t: f64, covariates: &[f64]) -> Result<f64, PosteriorError> {
    let values = reliability_draws(sample, t, covariates)?;
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Shortest window of sorted draws holding `ceil(level * n)` of them. Ties
/// go to the smallest lower endpoint.
pub fn hpd_interval(sorted: &[f64], level: f64) -> Result<(f64, f64), PosteriorError> {
    if !(level > 0.0 && level < 1.0) {
        return Err(PosteriorError::InvalidLevel(level));
    }
    let n = sorted.len();
    if n < 10 {
        return Err(PosteriorError::TooFewDraws(n));
    }
    debug_assert!(sorted.windows(2).all(|w| w[0] <= w[1]));
    let k = ((level * n as f64).ceil() as usize).clamp(1, n);
    let mut best = 0;
    let mut best_width = f64::INFINITY;
    for i in 0..=n - k {
        let width = sorted[i + k - 1] - sorted[i];
        if width < best_width {
            best_width = width;
            best = i;
        }
    }
    Ok((sorted[best], sorted[best + k - 1]))
}

/// Quantile by linear interpolation between order statistics (the default
/// rule of most statistics packages).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Summary statistics of one scalar posterior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarSummary {
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub mean: f64,
    pub q75: f64,
    pub max: f64,
    pub sd: f64,
    pub hpd_lo: f64,
    pub hpd_hi: f64,
}

impl ScalarSummary {
    /// Summarize `values`. With fewer than 10 values the HPD falls back to
    /// the full range.
    pub fn from_values(values: &[f64], level: f64) -> Result<Self, PosteriorError> {
        if values.is_empty() {
            return Err(PosteriorError::EmptySample);
        }
        if !(level > 0.0 && level < 1.0) {
            return Err(PosteriorError::InvalidLevel(level));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        // Shifted by the minimum so a constant sample has exactly zero spread.
        let shift = sorted[0];
        let mean = shift + sorted.iter().map(|v| v - shift).sum::<f64>() / n;
        let sd = if sorted.len() > 1 {
            (sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let (hpd_lo, hpd_hi) = if sorted.len() >= 10 {
            hpd_interval(&sorted, level)?
        } else {
            (sorted[0], sorted[sorted.len() - 1])
        };
        Ok(ScalarSummary {
            min: sorted[0],
            q25: quantile_sorted(&sorted, 0.25),
            median: quantile_sorted(&sorted, 0.5),
            mean,
            q75: quantile_sorted(&sorted, 0.75),
            max: sorted[sorted.len() - 1],
            sd,
            hpd_lo,
            hpd_hi,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub t: f64,
    pub stats: ScalarSummary,
}

/// Pointwise posterior summaries of a reliability curve.
#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityCurveSummary {
    pub level: f64,
    pub points: Vec<CurvePoint>,
}

impl ReliabilityCurveSummary {
    /// Column names, in the order used by [`CurvePoint`] rows.
    pub const COLUMNS: [&'static str; 10] = [
        "t", "mean", "sd", "min", "q25", "median", "q75", "max", "hpd_lo", "hpd_hi",
    ];

    pub fn means(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.stats.mean).collect()
    }

    pub fn grid(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.t).collect()
    }
}

pub fn curve_summary(
    sample: &PosteriorSample,
    grid: &[f64],
    level: f64,
    covariates: &[f64],
) -> Result<ReliabilityCurveSummary, PosteriorError> {
    if grid.is_empty() {
        return Err(PosteriorError::EmptyGrid);
    }
    if sample.is_empty() {
        return Err(PosteriorError::EmptySample);
    }
    let points = grid
        .par_iter()
        .map(|&t| {
            let values = reliability_draws(sample, t, covariates)?;
            Ok(CurvePoint {
                t,
                stats: ScalarSummary::from_values(&values, level)?,
            })
        })
        .collect::<Result<Vec<_>, PosteriorError>>()?;
    Ok(ReliabilityCurveSummary { level, points })
}

/// `points` equally spaced times from 0 to the 99th percentile of `times`.
pub fn default_grid(times: &[f64], points: usize) -> Result<Vec<f64>, PosteriorError> {
    if times.is_empty() {
        return Err(PosteriorError::EmptySample);
    }
    if points == 0 {
        return Err(PosteriorError::EmptyGrid);
    }
    let mut sorted = times.to_vec();
    sorted.sort_by(f64::total_cmp);
    let upper = quantile_sorted(&sorted, 0.99);
    if points == 1 {
        return Ok(vec![0.0]);
    }
    let step = upper / (points - 1) as f64;
    Ok((0..points).map(|i| i as f64 * step).collect())
}

/// Named scalar traces of every model parameter: `beta`, `eta` (or
/// `gamma1`, `gamma2`, ... under a covariate model), `mu`, and `lambda1` to
/// `lambda3` when masking probabilities are sampled.
pub fn parameter_traces(draws: &[ChainDraw]) -> Vec<(String, Vec<f64>)> {
    let Some(first) = draws.first() else {
        return Vec::new();
    };
    let mut names = vec!["beta".to_string()];
    match &first.theta.scale {
        Scale::Eta(_) => names.push("eta".into()),
        Scale::Coefficients(g) => names.extend((1..=g.len()).map(|j| format!("gamma{j}"))),
    }
    names.push("mu".into());
    if first.lambdas.is_some() {
        names.extend((1..=3).map(|c| format!("lambda{c}")));
    }
    let mut traces: Vec<Vec<f64>> = vec![Vec::with_capacity(draws.len()); names.len()];
    for d in draws {
        let mut row = vec![d.theta.beta];
        match &d.theta.scale {
            Scale::Eta(eta) => row.push(*eta),
            Scale::Coefficients(g) => row.extend(g),
        }
        row.push(d.theta.mu);
        if let Some(l) = d.lambdas {
            row.extend(l.0);
        }
        for (trace, v) in traces.iter_mut().zip(row) {
            trace.push(v);
        }
    }
    names.into_iter().zip(traces).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSummary {
    pub name: String,
    pub stats: ScalarSummary,
}

/// Posterior summaries of every parameter in the sample.
pub fn parameter_summaries(sample: &PosteriorSample, level: f64) -> Result<Vec<ParameterSummary>, PosteriorError> {
    if sample.is_empty() {
        return Err(PosteriorError::EmptySample);
    }
    parameter_traces(&sample.draws)
        .into_iter()
        .map(|(name, values)| {
            Ok(ParameterSummary {
                name,
                stats: ScalarSummary::from_values(&values, level)?,
            })
        })
        .collect()
}

/// Lag-1 autocorrelation; `None` for constant or too short series.
pub fn lag1_autocorrelation(values: &[f64]) -> Option<f64> {
    let n = values.len();
    if n < 3 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let denom: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    if denom <= 0.0 {
        return None;
    }
    let num: f64 = values.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
    Some(num / denom)
}

/// Difference between the means of the two halves of a series, in units of
/// the overall standard deviation (0 for a constant series).
pub fn split_discrepancy(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let half = n / 2;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (a, b) = (mean(&values[..half]), mean(&values[n - half..]));
    let m = mean(values);
    let sd = (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    if sd > 0.0 {
        (a - b).abs() / sd
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterDiagnostics {
    pub name: String,
    pub lag1: Option<f64>,
    pub split_discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    /// Metropolis acceptance rate after burn-in.
    pub acceptance_rate: f64,
    pub parameters: Vec<ParameterDiagnostics>,
}

/// Diagnostics on the thinned draws of a chain. No pass/fail decision is
/// made here.
pub fn convergence_stats(raw: &RawChain) -> Result<ConvergenceReport, PosteriorError> {
    if raw.draws.len() < 100 {
        return Err(PosteriorError::ChainTooShort(raw.draws.len()));
    }
    let sample = thin_with_config(raw)?;
    let parameters = parameter_traces(&sample.draws)
        .into_iter()
        .map(|(name, v)| ParameterDiagnostics {
            lag1: lag1_autocorrelation(&v),
            split_discrepancy: split_discrepancy(&v),
            name,
        })
        .collect();
    Ok(ConvergenceReport {
        acceptance_rate: raw.acceptance_rate(),
        parameters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::Theta;
    use crate::numeric::bisect;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Beta, Distribution, StandardNormal};
    use statrs::function::beta::beta_reg;
    use statrs::function::gamma::ln_gamma;

    fn sample_of(thetas: &[(f64, f64, f64)]) -> PosteriorSample {
        PosteriorSample {
            draws: thetas
                .iter()
                .map(|&(b, e, m)| ChainDraw {
                    theta: Theta::new(b, e, m),
                    lambdas: None,
                    latent_counts: [0; 3],
                })
                .collect(),
            provenance: Provenance {
                seed: 0,
                config_hash: 0,
            },
        }
    }

    #[test]
    fn thinning_index_arithmetic() {
        assert_eq!(thin_indices(30000, 10000, 20).unwrap().len(), 1000);
        assert_eq!(thin_indices(7, 0, 1).unwrap(), (0..7).collect::<Vec<_>>());
        assert_eq!(thin_indices(100, 90, 5).unwrap(), vec![90, 95]);
        assert_eq!(
            thin_indices(10, 10, 1),
            Err(PosteriorError::BurnInTooLong {
                burn_in: 10,
                length: 10
            })
        );
        assert_eq!(thin_indices(10, 0, 0), Err(PosteriorError::ZeroThin));
    }

    #[test]
    fn mean_reliability_examples() {
        let same = sample_of(&[(1.0, 1.0, 0.0), (1.0, 1.0, 0.0)]);
        assert!((posterior_mean_reliability(&same, 1.0, &[]).unwrap() - (-1f64).exp()).abs() < 1e-15);
        let two = sample_of(&[(1.0, 1.0, 0.0), (1.0, 2.0, 0.0)]);
        let expected = ((-2f64).exp() + (-1f64).exp()) / 2.0;
        let got = posterior_mean_reliability(&two, 2.0, &[]).unwrap();
        assert!((got - expected).abs() < 1e-15);
        assert!((got - 0.251607).abs() < 1e-6);
        assert_eq!(posterior_mean_reliability(&two, 0.0, &[]).unwrap(), 1.0);
        let empty = sample_of(&[]);
        assert_eq!(
            posterior_mean_reliability(&empty, 1.0, &[]),
            Err(PosteriorError::EmptySample)
        );
    }

    #[test]
    fn reliability_is_one_before_every_location() {
        let s = sample_of(&[(2.0, 3.0, 1.5), (0.7, 9.0, 2.0), (5.0, 1.0, 4.0)]);
        assert_eq!(posterior_mean_reliability(&s, 1.5, &[]).unwrap(), 1.0);
    }

    #[test]
    fn hpd_examples() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(hpd_interval(&v, 0.95).unwrap(), (1.0, 95.0));
        assert_eq!(hpd_interval(&[0.5; 20], 0.95).unwrap(), (0.5, 0.5));
        assert_eq!(hpd_interval(&v[..5], 0.95), Err(PosteriorError::TooFewDraws(5)));
        assert_eq!(hpd_interval(&v, 1.0), Err(PosteriorError::InvalidLevel(1.0)));
    }

    /// HPD of Beta(a, b) from its density: the level set {f >= h} whose
    /// probability is `level`.
    fn beta_hpd_oracle(a: f64, b: f64, level: f64) -> (f64, f64) {
        let ln_norm = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b);
        let log_f = |x: f64| ln_norm + (a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln();
        let mode = (a - 1.0) / (a + b - 2.0);
        let ends = |lh: f64| {
            let lo = bisect(|x| log_f(x) - lh, 1e-12, mode, 1e-14).unwrap();
            let hi = bisect(|x| log_f(x) - lh, mode, 1.0 - 1e-12, 1e-14).unwrap();
            (lo, hi)
        };
        let mass = |lh: f64| {
            let (lo, hi) = ends(lh);
            beta_reg(a, b, hi) - beta_reg(a, b, lo)
        };
        let lh = bisect(|lh| mass(lh) - level, -20.0, log_f(mode) - 1e-9, 1e-13).unwrap();
        ends(lh)
    }

    #[test]
    fn hpd_matches_beta_density_oracle() {
        let (lo, hi) = beta_hpd_oracle(4.0, 6.0, 0.95);
        // Mass check on the oracle itself.
        assert!((beta_reg(4.0, 6.0, hi) - beta_reg(4.0, 6.0, lo) - 0.95).abs() < 1e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let law = Beta::new(4.0, 6.0).unwrap();
        let mut draws: Vec<f64> = (0..100_000).map(|_| law.sample(&mut rng)).collect();
        draws.sort_by(f64::total_cmp);
        let (elo, ehi) = hpd_interval(&draws, 0.95).unwrap();
        assert!((elo - lo).abs() < 0.01, "{elo} vs {lo}");
        assert!((ehi - hi).abs() < 0.01, "{ehi} vs {hi}");
    }

    #[test]
    fn constant_sample_gives_degenerate_summary() {
        let s = sample_of(&vec![(1.5, 4.0, 0.5); 50]);
        let grid = [0.0, 1.0, 3.0, 8.0];
        let summary = curve_summary(&s, &grid, 0.95, &[]).unwrap();
        for p in &summary.points {
            let st = p.stats;
            assert_eq!(st.sd, 0.0);
            assert_eq!(st.hpd_lo, st.hpd_hi);
            assert_eq!(st.min, st.max);
            assert_eq!(st.mean, st.median);
        }
        assert_eq!(ReliabilityCurveSummary::COLUMNS.len(), 10);
    }

    #[test]
    fn two_draw_summary_is_hand_average() {
        let s = sample_of(&[(1.0, 1.0, 0.0), (1.0, 2.0, 0.0)]);
        let summary = curve_summary(&s, &[2.0], 0.95, &[]).unwrap();
        let expected = ((-2f64).exp() + (-1f64).exp()) / 2.0;
        assert!((summary.points[0].stats.mean - expected).abs() < 1e-15);
        assert_eq!(curve_summary(&s, &[], 0.95, &[]), Err(PosteriorError::EmptyGrid));
    }

    #[test]
    fn quantiles_follow_linear_interpolation() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.25), 1.75);
        assert_eq!(quantile_sorted(&v, 0.5), 2.5);
        assert_eq!(quantile_sorted(&v, 1.0), 4.0);
    }

    #[test]
    fn default_grid_spans_to_upper_percentile() {
        let times: Vec<f64> = (1..=101).map(f64::from).collect();
        let g = default_grid(&times, 200).unwrap();
        assert_eq!(g.len(), 200);
        assert_eq!(g[0], 0.0);
        assert!((g[199] - 100.0).abs() < 1e-12);
    }

    #[test]
    fn iid_chain_has_small_lag1() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        assert!(lag1_autocorrelation(&v).unwrap().abs() < 0.05);
        assert_eq!(lag1_autocorrelation(&[2.0; 100]), None);
        let half: Vec<f64> = (0..50).map(f64::from).collect();
        let doubled: Vec<f64> = half.iter().chain(&half).copied().collect();
        assert_eq!(split_discrepancy(&doubled), 0.0);
    }

    #[test]
    fn traces_name_every_parameter() {
        let mut d = sample_of(&[(1.0, 2.0, 0.5)]).draws;
        d[0].lambdas = Some(crate::inference::MaskingProbs([0.1, 0.0, 0.3]));
        let traces = parameter_traces(&d);
        let names: Vec<&str> = traces.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, ["beta", "eta", "mu", "lambda1", "lambda2", "lambda3"]);
        assert_eq!(traces[4].1, vec![0.0]);
    }

    proptest! {
        #[test]
        fn hpd_covers_and_is_no_wider_than_central(
            mut v in prop::collection::vec(-100.0f64..100.0, 10..300),
            level in 0.5f64..0.99,
        ) {
            v.sort_by(f64::total_cmp);
            let n = v.len();
            let k = (level * n as f64).ceil() as usize;
            let (lo, hi) = hpd_interval(&v, level).unwrap();
            let covered = v.iter().filter(|&&x| x >= lo && x <= hi).count();
            prop_assert!(covered >= k);
            // Any window of k order statistics is a candidate, including
            // the central one.
            let start = (n - k) / 2;
            prop_assert!(hi - lo <= v[start + k - 1] - v[start]);
        }

        #[test]
        fn pointwise_mean_curve_is_nonincreasing(
            thetas in prop::collection::vec((0.3f64..5.0, 0.5f64..20.0, 0.0f64..3.0), 1..20),
        ) {
            let s = sample_of(&thetas);
            let grid: Vec<f64> = (0..40).map(|i| i as f64 * 0.75).collect();
            let means = curve_summary(&s, &grid, 0.95, &[]).unwrap().means();
            for w in means.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-15);
            }
            let summary = curve_summary(&s, &grid, 0.95, &[]).unwrap();
            for p in &summary.points {
                prop_assert!(p.stats.min <= p.stats.mean + 1e-15 && p.stats.mean <= p.stats.max + 1e-15);
                prop_assert!(p.stats.min >= 0.0 && p.stats.max <= 1.0);
            }
        }
    }
}
