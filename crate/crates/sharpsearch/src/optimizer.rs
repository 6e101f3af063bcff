//! Acquisition functions and the sequential optimization loops.
//!
//! [`run_bayesian`] is the ask/tell loop: a seeded random initialization
//! (two points by default), then repeated tune-fit-propose-evaluate rounds.
//! [`run_grid`] is the exhaustive baseline it is compared against.
//! Maximization convention throughout: the objective is an accuracy-like
//! score, minimizers negate externally.

use std::collections::HashSet;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::runlog::{Phase, RunLog, RunRecord};
use crate::space::{Configuration, SearchSpace, SpaceError};
use crate::surrogate::{tune_kernel, GpError, GpModel, KernelParams, Observation};

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error("loop config invalid: need n_init >= 1 and n_iter >= n_init")]
    InvalidLoopConfig,
    #[error("every configuration in the space has already been evaluated")]
    ExhaustedSpace,
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Gp(#[from] GpError),
}

/// Objective evaluation failures carry any error type; the loop records them
/// as value-0 observations and keeps going.
pub type ObjectiveFailure = Box<dyn std::error::Error + Send + Sync>;

/// Something that scores a configuration. Implementations must be pure in
/// `(config, seed)` and reentrant: grid runs may fan out across threads.
pub trait Objective: Sync {
    fn evaluate(&self, config: &Configuration, seed: u64) -> Result<f64, ObjectiveFailure>;
}

impl<F> Objective for F
where
    F: Fn(&Configuration, u64) -> Result<f64, ObjectiveFailure> + Sync,
{
    fn evaluate(&self, config: &Configuration, seed: u64) -> Result<f64, ObjectiveFailure> {
        self(config, seed)
    }
}

/// Exploration policies over the posterior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AcquisitionKind {
    ExpectedImprovement { xi: f64 },
    UpperConfidenceBound { kappa: f64 },
    ProbabilityOfImprovement { xi: f64 },
}

impl Default for AcquisitionKind {
    fn default() -> Self {
        AcquisitionKind::ExpectedImprovement { xi: 0.01 }
    }
}

impl AcquisitionKind {
    pub fn is_valid(&self) -> bool {
        match *self {
            AcquisitionKind::ExpectedImprovement { xi } => xi >= 0.0,
            AcquisitionKind::UpperConfidenceBound { kappa } => kappa >= 0.0,
            AcquisitionKind::ProbabilityOfImprovement { xi } => xi >= 0.0,
        }
    }

    pub fn score(&self, mean: f64, variance: f64, best: f64) -> f64 {
        match *self {
            AcquisitionKind::ExpectedImprovement { xi } => {
                expected_improvement(mean, variance, best, xi)
            }
            AcquisitionKind::UpperConfidenceBound { kappa } => {
                upper_confidence_bound(mean, variance, kappa)
            }
            AcquisitionKind::ProbabilityOfImprovement { xi } => {
                probability_of_improvement(mean, variance, best, xi)
            }
        }
    }
}

fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2)
}

/// EI = (mean - best - xi) Phi(z) + sigma phi(z), z = (mean - best - xi)/sigma.
/// Degenerates to max(mean - best - xi, 0) at sigma = 0.
pub fn expected_improvement(mean: f64, variance: f64, best: f64, xi: f64) -> f64 {
    let sigma = variance.max(0.0).sqrt();
    let gap = mean - best - xi;
    if sigma == 0.0 {
        return gap.max(0.0);
    }
    let z = gap / sigma;
    gap * normal_cdf(z) + sigma * normal_pdf(z)
}

/// UCB = mean + kappa sigma.
pub fn upper_confidence_bound(mean: f64, variance: f64, kappa: f64) -> f64 {
    mean + kappa * variance.max(0.0).sqrt()
}

/// POI = Phi((mean - best - xi)/sigma); with sigma = 0 it is the indicator
/// of mean > best + xi.
pub fn probability_of_improvement(mean: f64, variance: f64, best: f64, xi: f64) -> f64 {
    let sigma = variance.max(0.0).sqrt();
    let gap = mean - best - xi;
    if sigma == 0.0 {
        return if gap > 0.0 { 1.0 } else { 0.0 };
    }
    normal_cdf(gap / sigma)
}

/// Sequential-loop parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopConfig {
    /// Random evaluations before the model takes over.
    pub n_init: usize,
    /// Total evaluation budget, init included.
    pub n_iter: usize,
    pub acquisition: AcquisitionKind,
    /// Spaces up to this size are scanned exhaustively at proposal time;
    /// larger spaces fall back to sampled candidates plus incumbent
    /// perturbations.
    pub candidate_limit: usize,
    pub seed: u64,
}

impl LoopConfig {
    pub fn new(n_iter: usize, seed: u64) -> Self {
        Self {
            n_init: 2,
            n_iter,
            acquisition: AcquisitionKind::default(),
            candidate_limit: 4096,
            seed,
        }
    }

    fn validate(&self) -> Result<(), OptimizeError> {
        if self.n_init >= 1 && self.n_iter >= self.n_init && self.acquisition.is_valid() {
            Ok(())
        } else {
            Err(OptimizeError::InvalidLoopConfig)
        }
    }
}

/// Argmax of the acquisition over unevaluated candidates; ties go to the
/// earliest-generated candidate.
///
/// Candidates are the full space when it fits in `candidate_limit`,
/// otherwise `candidate_limit` uniform samples plus every single-spec
/// perturbation of the three best observed configurations.
pub fn propose_next<R: Rng + ?Sized>(
    model: &GpModel,
    space: &SearchSpace,
    acquisition: &AcquisitionKind,
    evaluated: &HashSet<Configuration>,
    candidate_limit: usize,
    rng: &mut R,
) -> Result<Configuration, OptimizeError> {
    let best = model.best_observed().unwrap_or(0.0);
    let mut chosen: Option<(f64, Configuration)> = None;
    let mut seen: HashSet<Configuration> = HashSet::new();
    let mut consider = |config: Configuration, model: &GpModel| -> Result<(), OptimizeError> {
        if evaluated.contains(&config) || !seen.insert(config.clone()) {
            return Ok(());
        }
        let point = space.encode(&config)?;
        let (mean, variance) = model.predict(&point)?;
        let score = acquisition.score(mean, variance, best);
        if chosen.as_ref().is_none_or(|(s, _)| score > *s) {
            chosen = Some((score, config));
        }
        Ok(())
    };

    if space.cardinality()? <= candidate_limit as u128 {
        for config in space.enumerate(candidate_limit as u128)? {
            consider(config, model)?;
        }
    } else {
        for _ in 0..candidate_limit {
            consider(space.sample_uniform(rng), model)?;
        }
        for config in incumbent_perturbations(model, space, 3)? {
            consider(config, model)?;
        }
    }
    chosen.map(|(_, c)| c).ok_or(OptimizeError::ExhaustedSpace)
}

/// Every configuration that differs from one of the `top` best observed
/// configurations in exactly one hyperparameter.
fn incumbent_perturbations(
    model: &GpModel,
    space: &SearchSpace,
    top: usize,
) -> Result<Vec<Configuration>, OptimizeError> {
    let mut ranked: Vec<&Observation> = model.observations().iter().collect();
    ranked.sort_by(|a, b| b.value.partial_cmp(&a.value).unwrap_or(std::cmp::Ordering::Equal));
    let mut out = Vec::new();
    for obs in ranked.into_iter().take(top) {
        let config = space.decode(&obs.point)?;
        let indices = space.indices_of(&config)?;
        for (spec_idx, spec) in space.specs().iter().enumerate() {
            for opt_idx in 0..spec.option_count() {
                if opt_idx == indices[spec_idx] {
                    continue;
                }
                let mut perturbed = indices.clone();
                perturbed[spec_idx] = opt_idx;
                out.push(space.configuration_from_indices(&perturbed));
            }
        }
    }
    Ok(out)
}

/// A uniform sample that has not been evaluated yet. Falls back to the first
/// unevaluated configuration in enumeration order when rejection sampling
/// stalls on a nearly-exhausted space.
fn sample_unevaluated<R: Rng + ?Sized>(
    space: &SearchSpace,
    evaluated: &HashSet<Configuration>,
    rng: &mut R,
) -> Result<Configuration, OptimizeError> {
    for _ in 0..1000 {
        let config = space.sample_uniform(rng);
        if !evaluated.contains(&config) {
            return Ok(config);
        }
    }
    if space.cardinality()? <= 1 << 20 {
        for config in space.enumerate(1 << 20)? {
            if !evaluated.contains(&config) {
                return Ok(config);
            }
        }
    }
    Err(OptimizeError::ExhaustedSpace)
}

fn evaluate_into_record(
    objective: &dyn Objective,
    config: Configuration,
    iteration: usize,
    phase: Phase,
    seed: u64,
) -> RunRecord {
    let start = Instant::now();
    let outcome = objective.evaluate(&config, seed);
    let wall_time = start.elapsed().as_secs_f64();
    let (value, failed) = match outcome {
        Ok(v) if v.is_finite() => (v, false),
        _ => (0.0, true),
    };
    RunRecord { iteration, phase, config, value, seed, wall_time, failed }
}

/// The sequential Bayesian loop: `n_init` seeded-uniform evaluations, then
/// tune-fit-propose-evaluate until `n_iter` total evaluations. Never
/// evaluates the same configuration twice; failures score 0 and the loop
/// continues.
pub fn run_bayesian(
    space: &SearchSpace,
    objective: &dyn Objective,
    loop_config: &LoopConfig,
) -> Result<RunLog, OptimizeError> {
    loop_config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(loop_config.seed);
    let mut evaluated: HashSet<Configuration> = HashSet::new();
    let mut observations: Vec<Observation> = Vec::new();
    let mut log = RunLog::new();

    for i in 0..loop_config.n_iter {
        let (config, phase) = if i < loop_config.n_init {
            (sample_unevaluated(space, &evaluated, &mut rng)?, Phase::Init)
        } else {
            let params = if observations.len() >= 2 {
                tune_kernel(&observations)?
            } else {
                KernelParams::default()
            };
            let model = GpModel::fit(observations.clone(), params)?;
            let config = propose_next(
                &model,
                space,
                &loop_config.acquisition,
                &evaluated,
                loop_config.candidate_limit,
                &mut rng,
            )?;
            (config, Phase::Bayes)
        };
        let record = evaluate_into_record(objective, config, i + 1, phase, loop_config.seed);
        evaluated.insert(record.config.clone());
        observations.push(Observation::new(space.encode(&record.config)?, record.value));
        log.push(record);
    }
    Ok(log)
}

/// Exhaustive baseline: every configuration in enumeration order. `threads`
/// greater than 1 fans evaluations out over a rayon pool; the log is still
/// assembled in enumeration order.
pub fn run_grid(
    space: &SearchSpace,
    objective: &dyn Objective,
    limit: u128,
    seed: u64,
    threads: usize,
) -> Result<RunLog, OptimizeError> {
    let configs: Vec<Configuration> = space.enumerate(limit)?.collect();
    let records: Vec<RunRecord> = if threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("failed to build grid thread pool");
        pool.install(|| {
            configs
                .into_par_iter()
                .enumerate()
                .map(|(i, c)| evaluate_into_record(objective, c, i + 1, Phase::Grid, seed))
                .collect()
        })
    } else {
        configs
            .into_iter()
            .enumerate()
            .map(|(i, c)| evaluate_into_record(objective, c, i + 1, Phase::Grid, seed))
            .collect()
    };
    let mut log = RunLog::new();
    for record in records {
        log.push(record);
    }
    Ok(log)
}
