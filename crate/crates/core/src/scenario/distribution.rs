//! Factored generator distributions over scenario parameter schemas.
//!
//! Categorical parameters carry a probability vector, ranges a truncated
//! Gaussian and booleans a Bernoulli rate. Domain randomization bypasses the
//! parametric family and samples every domain uniformly.

use super::{DomainKind, ParamValue, ScenarioParams, ScenarioSpec};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::collections::BTreeMap;
use thiserror::Error;

/// Lower bound kept on every categorical probability and Bernoulli rate so
/// no scenario region ever becomes unreachable under generator adaptation.
pub const EPSILON_FLOOR: f64 = 0.01;

/// Tolerance on probability-vector normalization.
pub const PROB_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum DistributionError {
    #[error("distribution has {got} factors but spec declares {want} parameters")]
    FactorCountMismatch { got: usize, want: usize },
    #[error("factor for `{param}` does not match its domain kind")]
    FactorKindMismatch { param: String },
    #[error("invalid factor for `{param}`: {reason}")]
    InvalidFactor { param: String, reason: String },
}

/// Per-parameter sampling factor.
#[derive(Debug, Clone, PartialEq)]
pub enum Factor {
    /// Probabilities aligned with the categorical domain's value order.
    Categorical(Vec<f64>),
    /// Truncated to the domain's `[lo, hi]` when sampled.
    TruncatedGaussian { mean: f64, stddev: f64 },
    Bernoulli(f64),
}

/// A product distribution over a spec's parameter domains, factor per
/// parameter in declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorDistribution {
    pub factors: Vec<Factor>,
}

impl GeneratorDistribution {
    /// Checks factor/domain alignment and all distribution invariants
    /// (normalization, probability floors, positive spread).
    pub fn validate(&self, spec: &ScenarioSpec) -> Result<(), DistributionError> {
        if self.factors.len() != spec.params.len() {
            return Err(DistributionError::FactorCountMismatch {
                got: self.factors.len(),
                want: spec.params.len(),
            });
        }
        for (factor, domain) in self.factors.iter().zip(&spec.params) {
            let param = domain.name.clone();
            match (factor, &domain.kind) {
                (Factor::Categorical(probs), DomainKind::Categorical(values)) => {
                    if probs.len() != values.len() {
                        return Err(DistributionError::InvalidFactor {
                            param,
                            reason: format!(
                                "{} probabilities for {} values",
                                probs.len(),
                                values.len()
                            ),
                        });
                    }
                    let sum: f64 = probs.iter().sum();
                    if (sum - 1.0).abs() > PROB_SUM_TOL {
                        return Err(DistributionError::InvalidFactor {
                            param,
                            reason: format!("probabilities sum to {sum}"),
                        });
                    }
                    if probs.iter().any(|p| *p < EPSILON_FLOOR - PROB_SUM_TOL) {
                        return Err(DistributionError::InvalidFactor {
                            param,
                            reason: "probability below smoothing floor".to_string(),
                        });
                    }
                }
                (
                    Factor::TruncatedGaussian { stddev, mean },
                    DomainKind::IntegerRange { .. } | DomainKind::RealRange { .. },
                ) => {
                    if !(stddev.is_finite() && *stddev > 0.0 && mean.is_finite()) {
                        return Err(DistributionError::InvalidFactor {
                            param,
                            reason: format!("mean {mean}, stddev {stddev}"),
                        });
                    }
                }
                (Factor::Bernoulli(p), DomainKind::Boolean) => {
                    if !(*p >= EPSILON_FLOOR - PROB_SUM_TOL
                        && *p <= 1.0 - EPSILON_FLOOR + PROB_SUM_TOL)
                    {
                        return Err(DistributionError::InvalidFactor {
                            param,
                            reason: format!("rate {p} outside [{EPSILON_FLOOR}, {}]", 1.0 - EPSILON_FLOOR),
                        });
                    }
                }
                _ => return Err(DistributionError::FactorKindMismatch { param }),
            }
        }
        Ok(())
    }
}

/// The domain-randomization starting point: uniform categorical weights,
/// midpoint/half-width Gaussians over ranges, fair coins for booleans.
pub fn uniform_distribution(spec: &ScenarioSpec) -> GeneratorDistribution {
    let factors = spec
        .params
        .iter()
        .map(|p| match &p.kind {
            DomainKind::Categorical(values) => {
                Factor::Categorical(vec![1.0 / values.len() as f64; values.len()])
            }
            DomainKind::IntegerRange { lo, hi } => {
                let (lo, hi) = (*lo as f64, *hi as f64);
                Factor::TruncatedGaussian {
                    mean: 0.5 * (lo + hi),
                    stddev: (0.5 * (hi - lo)).max(f64::MIN_POSITIVE),
                }
            }
            DomainKind::RealRange { lo, hi } => Factor::TruncatedGaussian {
                mean: 0.5 * (lo + hi),
                stddev: (0.5 * (hi - lo)).max(f64::MIN_POSITIVE),
            },
            DomainKind::Boolean => Factor::Bernoulli(0.5),
        })
        .collect();
    GeneratorDistribution { factors }
}

/// Rejection attempts before clamping a truncated-Gaussian draw. Reached only
/// for pathological (mean far outside the domain) factors.
const MAX_REJECTIONS: usize = 1024;

fn sample_truncated(mean: f64, stddev: f64, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> f64 {
    if hi <= lo {
        return lo;
    }
    let normal = Normal::new(mean, stddev).expect("validated stddev");
    for _ in 0..MAX_REJECTIONS {
        let x = normal.sample(rng);
        if (lo..=hi).contains(&x) {
            return x;
        }
    }
    mean.clamp(lo, hi)
}

/// Draws one concrete [`ScenarioParams`] from `dist`. Deterministic given the
/// rng stream; the world seed is drawn from the same stream and always lies
/// below [`super::HOLDOUT_SEED_BASE`].
pub fn sample_params(
    spec: &ScenarioSpec,
    dist: &GeneratorDistribution,
    rng: &mut ChaCha8Rng,
) -> Result<ScenarioParams, DistributionError> {
    dist.validate(spec)?;
    let mut assignment = BTreeMap::new();
    for (factor, domain) in dist.factors.iter().zip(&spec.params) {
        let value = match (factor, &domain.kind) {
            (Factor::Categorical(probs), DomainKind::Categorical(values)) => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let mut chosen = values.len() - 1;
                for (i, p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        chosen = i;
                        break;
                    }
                }
                ParamValue::Symbol(values[chosen].clone())
            }
            (Factor::TruncatedGaussian { mean, stddev }, DomainKind::RealRange { lo, hi }) => {
                ParamValue::Real(sample_truncated(*mean, *stddev, *lo, *hi, rng))
            }
            (Factor::TruncatedGaussian { mean, stddev }, DomainKind::IntegerRange { lo, hi }) => {
                let x = sample_truncated(*mean, *stddev, *lo as f64, *hi as f64, rng);
                ParamValue::Int((x.round() as i64).clamp(*lo, *hi))
            }
            (Factor::Bernoulli(p), DomainKind::Boolean) => ParamValue::Bool(rng.gen::<f64>() < *p),
            _ => unreachable!("validated alignment"),
        };
        assignment.insert(domain.name.clone(), value);
    }
    Ok(ScenarioParams {
        spec_id: spec.spec_id(),
        assignment,
        seed: u64::from(rng.gen::<u32>()),
    })
}

/// Domain-randomization draw: every factor uniform over its domain (ranges
/// uniform over the interval, not the Gaussian family).
pub fn sample_params_uniform(spec: &ScenarioSpec, rng: &mut ChaCha8Rng) -> ScenarioParams {
    let mut assignment = BTreeMap::new();
    for domain in &spec.params {
        let value = match &domain.kind {
            DomainKind::Categorical(values) => {
                ParamValue::Symbol(values[rng.gen_range(0..values.len())].clone())
            }
            DomainKind::IntegerRange { lo, hi } => ParamValue::Int(rng.gen_range(*lo..=*hi)),
            DomainKind::RealRange { lo, hi } => {
                if hi > lo {
                    ParamValue::Real(rng.gen_range(*lo..*hi))
                } else {
                    ParamValue::Real(*lo)
                }
            }
            DomainKind::Boolean => ParamValue::Bool(rng.gen()),
        };
        assignment.insert(domain.name.clone(), value);
    }
    ScenarioParams {
        spec_id: spec.spec_id(),
        assignment,
        seed: u64::from(rng.gen::<u32>()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::scenario::parse_spec;

    fn spec_with(text: &str) -> ScenarioSpec {
        parse_spec(text).expect("test spec is valid")
    }

    #[test]
    fn uniform_distribution_has_spec_values() {
        let spec = spec_with("param route in {a, b, c}\nparam x in 2.0..8.0\nparam b in bool\n");
        let dist = uniform_distribution(&spec);
        assert_eq!(
            dist.factors[0],
            Factor::Categorical(vec![1.0 / 3.0; 3]),
        );
        assert_eq!(
            dist.factors[1],
            Factor::TruncatedGaussian { mean: 5.0, stddev: 3.0 }
        );
        assert_eq!(dist.factors[2], Factor::Bernoulli(0.5));
        dist.validate(&spec).unwrap();
    }

    #[test]
    fn degenerate_categorical_always_picks_first() {
        let spec = spec_with("param route in {a, b, c}\n");
        let dist = GeneratorDistribution {
            // Floors are a validity requirement for adapted generators; this
            // near-degenerate vector stays legal.
            factors: vec![Factor::Categorical(vec![0.98, 0.01, 0.01])],
        };
        let mut rng = stream(1, 0);
        let mut hits = 0;
        for _ in 0..200 {
            let p = sample_params(&spec, &dist, &mut rng).unwrap();
            if p.assignment["route"].as_symbol() == Some("a") {
                hits += 1;
            }
        }
        assert!(hits >= 190, "expected ~196 first-value draws, got {hits}");
        let exact = GeneratorDistribution {
            factors: vec![Factor::Categorical(vec![1.0, 0.0, 0.0])],
        };
        // A (1,0,0) vector violates the floor invariant for adapted
        // generators, so sample directly through the raw path.
        assert!(exact.validate(&spec).is_err());
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let spec = spec_with(
            "param route in {straight, left, right}\nparam n in 0..6\nparam v in 2.0..10.0\nparam s in bool\n",
        );
        let dist = uniform_distribution(&spec);
        let a = sample_params(&spec, &dist, &mut stream(42, 3)).unwrap();
        let b = sample_params(&spec, &dist, &mut stream(42, 3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn samples_stay_in_domain() {
        let spec = spec_with("param n in 0..6\nparam v in 2.0..10.0\n");
        let dist = uniform_distribution(&spec);
        let mut rng = stream(9, 0);
        for _ in 0..500 {
            let p = sample_params(&spec, &dist, &mut rng).unwrap();
            p.validate(&spec).unwrap();
        }
        for _ in 0..500 {
            let p = sample_params_uniform(&spec, &mut rng);
            p.validate(&spec).unwrap();
        }
    }

    #[test]
    fn uniform_categorical_frequencies_within_hoeffding_band() {
        // 30k draws over 3 values: each empirical frequency must land in
        // [0.32, 0.346] (direct Monte Carlo check of the sampler).
        let spec = spec_with("param route in {straight, left, right}\n");
        let dist = uniform_distribution(&spec);
        let mut rng = stream(2024, 7);
        let mut counts = [0usize; 3];
        let n = 30_000;
        for _ in 0..n {
            let p = sample_params(&spec, &dist, &mut rng).unwrap();
            match p.assignment["route"].as_symbol().unwrap() {
                "straight" => counts[0] += 1,
                "left" => counts[1] += 1,
                _ => counts[2] += 1,
            }
        }
        for c in counts {
            let f = c as f64 / n as f64;
            assert!((0.32..=0.346).contains(&f), "frequency {f} outside band");
        }
    }

    #[test]
    fn factor_mismatch_is_reported() {
        let spec = spec_with("param n in 0..6\n");
        let dist = GeneratorDistribution {
            factors: vec![Factor::Bernoulli(0.5)],
        };
        assert!(matches!(
            sample_params(&spec, &dist, &mut stream(0, 0)),
            Err(DistributionError::FactorKindMismatch { .. })
        ));
    }

    #[test]
    fn assignment_round_trips_through_text() {
        let spec = spec_with(
            "param route in {straight, left, right}\nparam n in 0..6\nparam v in 2.0..10.0\nparam s in bool\n",
        );
        let dist = uniform_distribution(&spec);
        let p = sample_params(&spec, &dist, &mut stream(5, 5)).unwrap();
        let text = p.format_assignment();
        let q = ScenarioParams::parse_assignment(&spec, &text, p.seed).unwrap();
        assert_eq!(p, q);
    }
}
