//! Batches of simulated sessions, one per seed.

use std::ops::Range;

use polyloop_core::rater::RaterConfig;
use polyloop_core::sequence::EvaluationSequence;
use polyloop_core::session::{SessionConfig, DEFAULT_MAX_ITERATIONS};
use polyloop_core::simulate::{
    run_simulated_session, Objective, SimulationError, SimulationOptions, SyntheticObjective,
};

/// Offset between a session seed and the seed of its synthetic utility, so the
/// utility's center is not correlated with the optimizer's random draws.
pub const SYNTHETIC_SEED_OFFSET: u64 = 1000;

/// Active coordinates of the synthetic utility.
pub const SYNTHETIC_ACTIVE_DIMS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOptions {
    pub seeds: Range<u64>,
    pub max_iterations: usize,
    pub stop_on_satisfaction: bool,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self {
            seeds: 0..50,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            stop_on_satisfaction: true,
        }
    }
}

fn run_one(
    label: &str,
    objective: &dyn Objective,
    rater: &RaterConfig,
    seed: u64,
    opts: &ExperimentOptions,
) -> Result<EvaluationSequence, SimulationError> {
    let rater = RaterConfig {
        seed: rater.seed.wrapping_add(seed),
        ..rater.clone()
    };
    let options = SimulationOptions {
        session: SessionConfig {
            max_iterations: opts.max_iterations,
            seed,
            ..Default::default()
        },
        stop_on_satisfaction: opts.stop_on_satisfaction,
    };
    let mut seq = run_simulated_session(objective, &rater, options)?;
    seq.session_id = format!("{label}-{seed}");
    Ok(seq)
}

/// One session per seed against a fresh synthetic utility for each seed.
pub fn synthetic_corpus(
    label: &str,
    rater: &RaterConfig,
    opts: &ExperimentOptions,
) -> Result<Vec<EvaluationSequence>, SimulationError> {
    opts.seeds
        .clone()
        .map(|seed| {
            let objective = SyntheticObjective::random(SYNTHETIC_ACTIVE_DIMS, SYNTHETIC_SEED_OFFSET + seed);
            run_one(label, &objective, rater, seed, opts)
        })
        .collect()
}

/// One session per seed, all on the same objective.
pub fn objective_corpus(
    label: &str,
    objective: &dyn Objective,
    rater: &RaterConfig,
    opts: &ExperimentOptions,
) -> Result<Vec<EvaluationSequence>, SimulationError> {
    opts.seeds
        .clone()
        .map(|seed| run_one(label, objective, rater, seed, opts))
        .collect()
}
