//! Lifetime distributions.
//!
//! [`Weibull3`] is the component model fitted by the sampler. The
//! [`SimDistribution`] families exist to generate component lifetimes for
//! simulation scenarios, each parameterizable from a target mean and
//! variance.

use rand::Rng;
use rand_distr::{Distribution, Gamma, LogNormal};
use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma_ur, ln_gamma};
use thiserror::Error;

use crate::numeric::{bisect, integrate};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistributionError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("probability {0} outside (0, 1)")]
    ProbabilityOutOfRange(f64),
    #[error("no {family} distribution has mean {mean} and variance {variance}")]
    InfeasibleMoments {
        family: &'static str,
        mean: f64,
        variance: f64,
    },
}

fn invalid(msg: impl Into<String>) -> DistributionError {
    DistributionError::InvalidParameter(msg.into())
}

/// Three-parameter Weibull law: shape `beta`, scale `eta`, location `mu`.
///
/// `R(t) = exp(-((t - mu) / eta)^beta)` for `t > mu`, and 1 otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weibull3 {
    beta: f64,
    eta: f64,
    mu: f64,
}

impl Weibull3 {
    pub fn new(beta: f64, eta: f64, mu: f64) -> Result<Self, DistributionError> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(invalid(format!("shape must be positive, got {beta}")));
        }
        if !(eta.is_finite() && eta > 0.0) {
            return Err(invalid(format!("scale must be positive, got {eta}")));
        }
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(invalid(format!("location must be non-negative, got {mu}")));
        }
        Ok(Weibull3 { beta, eta, mu })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Cumulative hazard `((t - mu) / eta)^beta`, zero before the location.
    pub fn cumulative_hazard(&self, t: f64) -> f64 {
        if t <= self.mu {
            0.0
        } else {
            ((t - self.mu) / self.eta).powf(self.beta)
        }
    }

    pub fn reliability(&self, t: f64) -> f64 {
        (-self.cumulative_hazard(t)).exp()
    }

    pub fn cdf(&self, t: f64) -> f64 {
        -(-self.cumulative_hazard(t)).exp_m1()
    }

    /// Zero at and before the location, so the divergence at `t = mu` for
    /// `beta < 1` is never returned.
    pub fn density(&self, t: f64) -> f64 {
        if t <= self.mu {
            return 0.0;
        }
        self.log_density(t).exp()
    }

    pub fn log_reliability(&self, t: f64) -> f64 {
        -self.cumulative_hazard(t)
    }

    pub fn log_cdf(&self, t: f64) -> f64 {
        if t <= self.mu {
            return f64::NEG_INFINITY;
        }
        (-(-self.cumulative_hazard(t)).exp_m1()).ln()
    }

    pub fn log_density(&self, t: f64) -> f64 {
        if t <= self.mu {
            return f64::NEG_INFINITY;
        }
        let z = (t - self.mu) / self.eta;
        let ln_z = z.ln();
        self.beta.ln() - self.eta.ln() + (self.beta - 1.0) * ln_z - (self.beta * ln_z).exp()
    }

    pub fn quantile(&self, p: f64) -> Result<f64, DistributionError> {
        if !(p > 0.0 && p < 1.0) {
            return Err(DistributionError::ProbabilityOutOfRange(p));
        }
        Ok(self.mu + self.eta * (-(-p).ln_1p()).powf(1.0 / self.beta))
    }

    /// Inverse-CDF draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        self.mu + self.eta * (-(-u).ln_1p()).powf(1.0 / self.beta)
    }

    /// The acceleration factor `1 / eta`: with it the reliability factors
    /// as the unit-scale law evaluated at `(t - mu) * factor`.
    pub fn acceleration_factor(&self) -> f64 {
        1.0 / self.eta
    }

    pub fn mean(&self) -> f64 {
        self.mu + self.eta * ln_gamma(1.0 + 1.0 / self.beta).exp()
    }

    pub fn variance(&self) -> f64 {
        let g1 = ln_gamma(1.0 + 1.0 / self.beta).exp();
        let g2 = ln_gamma(1.0 + 2.0 / self.beta).exp();
        self.eta * self.eta * (g2 - g1 * g1)
    }
}

/// Reliability of the unit-scale, zero-location Weibull with shape `beta`.
pub fn baseline_reliability(z: f64, beta: f64) -> f64 {
    if z <= 0.0 {
        1.0
    } else {
        (-z.powf(beta)).exp()
    }
}

/// Families available for simulating component lifetimes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimFamily {
    Weibull2,
    /// Three-parameter Weibull with the location held at the given value;
    /// shape and scale are fitted to the moments.
    Weibull3 {
        location: f64,
    },
    Gamma,
    Lognormal,
    /// Modified Weibull `R(t) = exp(-a t^gamma e^(lambda t))` with `lambda`
    /// held fixed; `a` and `gamma` are fitted to the moments.
    ModifiedWeibull {
        lambda: f64,
    },
}

/// A fully parameterized simulation distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimDistribution {
    Weibull2 { shape: f64, scale: f64 },
    Weibull3(Weibull3),
    Gamma { shape: f64, rate: f64 },
    Lognormal { log_mean: f64, log_sd: f64 },
    ModifiedWeibull { a: f64, gamma: f64, lambda: f64 },
}

impl SimDistribution {
    pub fn family_name(&self) -> &'static str {
        match self {
            SimDistribution::Weibull2 { .. } => "weibull2",
            SimDistribution::Weibull3(_) => "weibull3",
            SimDistribution::Gamma { .. } => "gamma",
            SimDistribution::Lognormal { .. } => "lognormal",
            SimDistribution::ModifiedWeibull { .. } => "modified_weibull",
        }
    }

    pub fn validate(&self) -> Result<(), DistributionError> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be positive, got {v}")))
            }
        };
        match *self {
            SimDistribution::Weibull2 { shape, scale } => positive("shape", shape).and(positive("scale", scale)),
            SimDistribution::Weibull3(w) => Weibull3::new(w.beta, w.eta, w.mu).map(|_| ()),
            SimDistribution::Gamma { shape, rate } => positive("shape", shape).and(positive("rate", rate)),
            SimDistribution::Lognormal { log_mean, log_sd } => {
                if !log_mean.is_finite() {
                    return Err(invalid("log mean must be finite"));
                }
                positive("log sd", log_sd)
            }
            SimDistribution::ModifiedWeibull { a, gamma, lambda } => {
                positive("a", a)?;
                positive("gamma", gamma)?;
                if lambda.is_finite() && lambda >= 0.0 {
                    Ok(())
                } else {
                    Err(invalid(format!("lambda must be non-negative, got {lambda}")))
                }
            }
        }
    }

    /// Parameters reproducing the target mean and variance.
    ///
    /// Gamma and lognormal are solved in closed form. Weibull shapes come
    /// from a bisection on the coefficient of variation; the modified
    /// Weibull is fitted by nested bisection over `(a, gamma)` with moments
    /// computed by quadrature.
    pub fn from_moments(family: SimFamily, mean: f64, variance: f64) -> Result<Self, DistributionError> {
        if !(mean.is_finite() && mean > 0.0 && variance.is_finite() && variance > 0.0) {
            return Err(invalid(format!("mean {mean} and variance {variance} must be positive")));
        }
        match family {
            SimFamily::Gamma => Ok(SimDistribution::Gamma {
                shape: mean * mean / variance,
                rate: mean / variance,
            }),
            SimFamily::Lognormal => {
                let s2 = (1.0 + variance / (mean * mean)).ln();
                Ok(SimDistribution::Lognormal {
                    log_mean: mean.ln() - 0.5 * s2,
                    log_sd: s2.sqrt(),
                })
            }
            SimFamily::Weibull2 => {
                let (shape, scale) =
                    weibull_from_moments(mean, variance).ok_or(DistributionError::InfeasibleMoments {
                        family: "weibull2",
                        mean,
                        variance,
                    })?;
                Ok(SimDistribution::Weibull2 { shape, scale })
            }
            SimFamily::Weibull3 { location } => {
                let infeasible = DistributionError::InfeasibleMoments {
                    family: "weibull3",
                    mean,
                    variance,
                };
                if !(location >= 0.0 && location < mean) {
                    return Err(infeasible);
                }
                let (shape, scale) = weibull_from_moments(mean - location, variance).ok_or(infeasible)?;
                Ok(SimDistribution::Weibull3(Weibull3::new(shape, scale, location)?))
            }
            SimFamily::ModifiedWeibull { lambda } => modified_weibull_from_moments(lambda, mean, variance),
        }
    }

    pub fn reliability(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        match *self {
            SimDistribution::Weibull2 { shape, scale } => (-(t / scale).powf(shape)).exp(),
            SimDistribution::Weibull3(w) => w.reliability(t),
            SimDistribution::Gamma { shape, rate } => gamma_ur(shape, rate * t),
            SimDistribution::Lognormal { log_mean, log_sd } => {
                0.5 * erfc((t.ln() - log_mean) / (log_sd * std::f64::consts::SQRT_2))
            }
            SimDistribution::ModifiedWeibull { a, gamma, lambda } => (-a * t.powf(gamma) * (lambda * t).exp()).exp(),
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        1.0 - self.reliability(t)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            SimDistribution::Weibull2 { shape, scale } => Weibull3 {
                beta: shape,
                eta: scale,
                mu: 0.0,
            }
            .sample(rng),
            SimDistribution::Weibull3(w) => w.sample(rng),
            SimDistribution::Gamma { shape, rate } => Gamma::new(shape, 1.0 / rate)
                .expect("validated gamma parameters")
                .sample(rng),
            SimDistribution::Lognormal { log_mean, log_sd } => LogNormal::new(log_mean, log_sd)
                .expect("validated lognormal parameters")
                .sample(rng),
            SimDistribution::ModifiedWeibull { a, gamma, lambda } => {
                // Invert the cumulative hazard H(t) = a t^gamma e^(lambda t).
                let u: f64 = rng.random();
                let target = -(-u).ln_1p();
                let h = |t: f64| a * t.powf(gamma) * (lambda * t).exp() - target;
                let mut hi = 1.0;
                while h(hi) < 0.0 {
                    hi *= 2.0;
                }
                bisect(h, 0.0, hi, 1e-10).unwrap_or(hi)
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            SimDistribution::Weibull2 { shape, scale } => scale * ln_gamma(1.0 + 1.0 / shape).exp(),
            SimDistribution::Weibull3(w) => w.mean(),
            SimDistribution::Gamma { shape, rate } => shape / rate,
            SimDistribution::Lognormal { log_mean, log_sd } => (log_mean + 0.5 * log_sd * log_sd).exp(),
            SimDistribution::ModifiedWeibull { a, gamma, lambda } => modified_weibull_moments(a, gamma, lambda).0,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            SimDistribution::Weibull2 { shape, scale } => Weibull3 {
                beta: shape,
                eta: scale,
                mu: 0.0,
            }
            .variance(),
            SimDistribution::Weibull3(w) => w.variance(),
            SimDistribution::Gamma { shape, rate } => shape / (rate * rate),
            SimDistribution::Lognormal { log_mean, log_sd } => {
                let s2 = log_sd * log_sd;
                (s2.exp() - 1.0) * (2.0 * log_mean + s2).exp()
            }
            SimDistribution::ModifiedWeibull { a, gamma, lambda } => {
                let (m, m2) = modified_weibull_moments(a, gamma, lambda);
                m2 - m * m
            }
        }
    }
}

/// Squared coefficient of variation of a Weibull with the given shape.
fn weibull_cv2(shape: f64) -> f64 {
    (ln_gamma(1.0 + 2.0 / shape) - 2.0 * ln_gamma(1.0 + 1.0 / shape)).exp() - 1.0
}

fn weibull_from_moments(mean: f64, variance: f64) -> Option<(f64, f64)> {
    let target = variance / (mean * mean);
    // cv^2 decreases in the shape; search over log shape.
    let log_shape = bisect(
        |ls| weibull_cv2(ls.exp()) - target,
        (0.02f64).ln(),
        (500f64).ln(),
        1e-14,
    )?;
    let shape = log_shape.exp();
    let scale = mean / ln_gamma(1.0 + 1.0 / shape).exp();
    Some((shape, scale))
}

/// `(E[T], E[T^2])` of the modified Weibull by quadrature of the survival
/// function.
///
/// Integrates over `v` in `[0, 1]` with `t = upper * v^p`, `p = max(1, 1/gamma)`,
/// which removes the `t^gamma` kink at the origin.
fn modified_weibull_moments(a: f64, gamma: f64, lambda: f64) -> (f64, f64) {
    let hazard = |t: f64| a * t.powf(gamma) * (lambda * t).exp();
    // Truncate where the survival function is below e^-50.
    let mut upper = 1.0;
    while hazard(upper) < 50.0 {
        upper *= 1.5;
    }
    while upper > 1e-300 && hazard(upper / 1.5) >= 50.0 {
        upper /= 1.5;
    }
    let p = (1.0 / gamma).max(1.0);
    let jacobian = |v: f64| upper * p * v.powf(p - 1.0);
    let at = |v: f64| upper * v.powf(p);
    let m1 = integrate(|v| (-hazard(at(v))).exp() * jacobian(v), 0.0, 1.0, 1e-12 * upper);
    let m2 = integrate(
        |v| 2.0 * at(v) * (-hazard(at(v))).exp() * jacobian(v),
        0.0,
        1.0,
        1e-12 * upper * upper,
    );
    (m1, m2)
}

fn modified_weibull_from_moments(lambda: f64, mean: f64, variance: f64) -> Result<SimDistribution, DistributionError> {
    let infeasible = DistributionError::InfeasibleMoments {
        family: "modified_weibull",
        mean,
        variance,
    };
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(invalid(format!("lambda must be non-negative, got {lambda}")));
    }
    // For a fixed gamma the mean decreases in a.
    let fit_a = |gamma: f64| -> Option<f64> {
        let log_a = bisect(
            |la| modified_weibull_moments(la.exp(), gamma, lambda).0 - mean,
            -60.0,
            20.0,
            1e-12,
        )?;
        Some(log_a.exp())
    };
    let target_cv2 = variance / (mean * mean);
    let cv2_gap = |gamma: f64| match fit_a(gamma) {
        Some(a) => {
            let (m1, m2) = modified_weibull_moments(a, gamma, lambda);
            (m2 - m1 * m1) / (m1 * m1) - target_cv2
        }
        None => f64::NAN,
    };
    let log_gamma = bisect(|lg| cv2_gap(lg.exp()), (0.1f64).ln(), (20f64).ln(), 1e-11).ok_or(infeasible.clone())?;
    let gamma = log_gamma.exp();
    let a = fit_a(gamma).ok_or(infeasible)?;
    Ok(SimDistribution::ModifiedWeibull { a, gamma, lambda })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const E_INV: f64 = 0.36787944117144233;

    fn w(beta: f64, eta: f64, mu: f64) -> Weibull3 {
        Weibull3::new(beta, eta, mu).unwrap()
    }

    #[test]
    fn reliability_examples() {
        assert!((w(1.0, 1.0, 0.0).reliability(1.0) - E_INV).abs() < 1e-15);
        assert_eq!(w(2.0, 3.0, 1.0).reliability(1.0), 1.0);
        assert!((w(2.0, 3.0, 1.0).reliability(4.0) - E_INV).abs() < 1e-15);
    }

    #[test]
    fn density_and_quantile_examples() {
        let exp1 = w(1.0, 1.0, 0.0);
        assert!((exp1.density(0.5) - 0.6065306597126334).abs() < 1e-12);
        assert!((exp1.quantile(1.0 - E_INV).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(w(0.5, 1.0, 2.0).density(2.0), 0.0);
        assert_eq!(w(0.5, 1.0, 2.0).log_density(1.0), f64::NEG_INFINITY);
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(Weibull3::new(0.0, 1.0, 0.0).is_err());
        assert!(Weibull3::new(1.0, -1.0, 0.0).is_err());
        assert!(Weibull3::new(1.0, 1.0, -0.1).is_err());
        assert!(Weibull3::new(f64::NAN, 1.0, 0.0).is_err());
        assert_eq!(
            w(1.0, 1.0, 0.0).quantile(1.0),
            Err(DistributionError::ProbabilityOutOfRange(1.0))
        );
        assert!(w(1.0, 1.0, 0.0).quantile(0.0).is_err());
    }

    #[test]
    fn acceleration_factor_examples() {
        let theta = w(2.0, 3.0, 1.0);
        let phi = theta.acceleration_factor();
        assert!((phi - 1.0 / 3.0).abs() < 1e-15);
        assert!((baseline_reliability((4.0 - 1.0) * phi, 2.0) - E_INV).abs() < 1e-15);
        assert_eq!(w(1.0, 1.0, 0.0).acceleration_factor(), 1.0);
    }

    #[test]
    fn gamma_and_lognormal_moments() {
        let g = SimDistribution::from_moments(SimFamily::Gamma, 18.0, 12.0).unwrap();
        assert_eq!(g, SimDistribution::Gamma { shape: 27.0, rate: 1.5 });
        let l = SimDistribution::from_moments(SimFamily::Lognormal, 20.0, 10.0).unwrap();
        let s2 = (1.0f64 + 10.0 / 400.0).ln();
        match l {
            SimDistribution::Lognormal { log_mean, log_sd } => {
                assert!((log_sd * log_sd - s2).abs() < 1e-15);
                assert!((log_mean - (20f64.ln() - s2 / 2.0)).abs() < 1e-15);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!((l.mean() - 20.0).abs() < 1e-9);
        assert!((l.variance() - 10.0).abs() < 1e-9);
    }

    /// Moments by direct quadrature of t f(t) using the survival function,
    /// independent of the closed-form moment code.
    fn quadrature_moments(d: &SimDistribution) -> (f64, f64) {
        let mut upper = 1.0;
        while d.reliability(upper) > 1e-20 {
            upper *= 1.5;
        }
        let m1 = integrate(|t| d.reliability(t), 0.0, upper, 1e-12);
        let m2 = integrate(|t| 2.0 * t * d.reliability(t), 0.0, upper, 1e-11);
        (m1, m2 - m1 * m1)
    }

    #[test]
    fn weibull_from_moments_verified_by_quadrature() {
        for (family, mean, var) in [
            (SimFamily::Weibull2, 15.0, 8.0),
            (SimFamily::Weibull2, 4.0, 15.0),
            (SimFamily::Weibull3 { location: 5.0 }, 12.0, 9.0),
            (SimFamily::Weibull3 { location: 1.0 }, 4.0, 8.0),
        ] {
            let d = SimDistribution::from_moments(family, mean, var).unwrap();
            let (m, v) = quadrature_moments(&d);
            assert!((m - mean).abs() < 1e-6, "{d:?} mean {m}");
            assert!((v - var).abs() < 1e-6, "{d:?} var {v}");
        }
    }

    #[test]
    fn modified_weibull_from_moments() {
        let d = SimDistribution::from_moments(SimFamily::ModifiedWeibull { lambda: 0.05 }, 5.6, 14.9).unwrap();
        assert!((d.mean() - 5.6).abs() < 1e-6, "{}", d.mean());
        assert!((d.variance() - 14.9).abs() < 1e-6, "{}", d.variance());
    }

    #[test]
    fn modified_weibull_sampling_matches_moments() {
        let d = SimDistribution::from_moments(SimFamily::ModifiedWeibull { lambda: 0.05 }, 5.6, 14.9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 40_000;
        let xs: Vec<f64> = (0..n).map(|_| d.sample(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se_mean = (14.9f64 / n as f64).sqrt();
        assert!((mean - 5.6).abs() < 3.0 * se_mean, "mean {mean}");
        // Variance SE from the sample fourth moment.
        let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n as f64;
        let se_var = ((m4 - var * var) / n as f64).sqrt();
        assert!((var - 14.9).abs() < 3.0 * se_var, "var {var}");
    }

    #[test]
    fn infeasible_moments_rejected() {
        assert!(SimDistribution::from_moments(SimFamily::Weibull3 { location: 20.0 }, 12.0, 9.0).is_err());
        assert!(SimDistribution::from_moments(SimFamily::Gamma, -1.0, 1.0).is_err());
        // cv = 1e-4 needs a shape beyond the search range.
        assert!(SimDistribution::from_moments(SimFamily::Weibull2, 1.0, 1e-8).is_err());
    }

    #[test]
    fn empirical_cdf_close_to_cdf() {
        let theta = w(1.7, 4.0, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut xs: Vec<f64> = (0..100_000).map(|_| theta.sample(&mut rng)).collect();
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        let sup = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = theta.cdf(x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max);
        assert!(sup < 0.01, "sup distance {sup}");
    }

    #[test]
    fn sim_reliability_matches_sampling() {
        // Check gamma and lognormal survival formulas against their samplers.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for d in [
            SimDistribution::from_moments(SimFamily::Gamma, 5.0, 8.0).unwrap(),
            SimDistribution::from_moments(SimFamily::Lognormal, 6.0, 7.0).unwrap(),
        ] {
            let n = 50_000;
            let t = d.mean();
            let above = (0..n).filter(|_| d.sample(&mut rng) > t).count() as f64 / n as f64;
            let r = d.reliability(t);
            let se = (r * (1.0 - r) / n as f64).sqrt();
            assert!((above - r).abs() < 4.0 * se, "{d:?}: {above} vs {r}");
        }
    }

    proptest! {
        #[test]
        fn reliability_plus_cdf_is_one(beta in 0.2f64..8.0, eta in 0.1f64..50.0, mu in 0.0f64..10.0, t in 0.0f64..100.0) {
            let theta = w(beta, eta, mu);
            prop_assert!((theta.reliability(t) + theta.cdf(t) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn quantile_inverts_cdf(beta in 0.3f64..8.0, eta in 0.1f64..50.0, mu in 0.0f64..10.0, h in 1e-3f64..5.0) {
            let theta = w(beta, eta, mu);
            let t = mu + eta * h.powf(1.0 / beta);
            let back = theta.quantile(theta.cdf(t)).unwrap();
            prop_assert!((back - t).abs() <= 1e-9 * t.max(1.0), "t={} back={}", t, back);
        }

        #[test]
        fn alt_factorization(beta in 0.2f64..8.0, eta in 0.1f64..50.0, mu in 0.0f64..10.0, t in 0.0f64..100.0) {
            let theta = w(beta, eta, mu);
            let phi = theta.acceleration_factor();
            prop_assert!((theta.reliability(t) - baseline_reliability((t - mu) * phi, beta)).abs() < 1e-12);
        }

        #[test]
        fn reliability_nonincreasing(beta in 0.2f64..8.0, eta in 0.1f64..50.0, mu in 0.0f64..10.0, t in 0.0f64..100.0, dt in 0.0f64..10.0) {
            let theta = w(beta, eta, mu);
            prop_assert!(theta.reliability(t + dt) <= theta.reliability(t));
        }
    }
}
