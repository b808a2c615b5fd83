//! Seeded Monte Carlo estimates of a plan's expected cost.
//!
//! Sample `i` draws its world from a ChaCha8 stream keyed by `(seed, i)`, so
//! the estimate does not depend on how samples are spread over threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{PlanError, Result};
use crate::oracle::exec::{execute_cost, ExecPlan, LeafDistribution};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    /// Standard error of the mean; zero for a single sample.
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
}

enum Sampler {
    Independent(Vec<f64>),
    Joint { masks: Vec<u64>, cumulative: Vec<f64> },
}

impl Sampler {
    fn new<S: Scalar>(dist: &LeafDistribution<S>) -> Self {
        match dist {
            LeafDistribution::Independent(p) => Sampler::Independent(p.iter().map(Scalar::to_f64_lossy).collect()),
            LeafDistribution::Joint(t) => {
                let mut acc = 0.0;
                let mut masks = Vec::with_capacity(t.entries().len());
                let mut cumulative = Vec::with_capacity(t.entries().len());
                for (mask, p) in t.entries() {
                    acc += p.to_f64_lossy();
                    masks.push(*mask);
                    cumulative.push(acc);
                }
                Sampler::Joint { masks, cumulative }
            }
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng, world: &mut [bool]) {
        match self {
            Sampler::Independent(p) => {
                for (flag, p) in world.iter_mut().zip(p) {
                    *flag = rng.random::<f64>() < *p;
                }
            }
            Sampler::Joint { masks, cumulative } => {
                let total = *cumulative.last().expect("nonempty table");
                let u = rng.random::<f64>() * total;
                let at = cumulative.partition_point(|&c| c <= u).min(masks.len() - 1);
                for (l, flag) in world.iter_mut().enumerate() {
                    *flag = masks[at] >> l & 1 == 1;
                }
            }
        }
    }
}

fn sample_cost<S: Scalar>(
    plan: &ExecPlan<S>,
    sampler: &Sampler,
    seed: u64,
    index: usize,
    conditional: bool,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let mut world = vec![false; plan.leaf_count()];
    loop {
        sampler.draw(&mut rng, &mut world);
        if !conditional || world.iter().any(|&b| b) {
            break;
        }
    }
    Ok(execute_cost(plan, &world)?.to_f64_lossy())
}

/// Mean cost over `samples` simulated worlds on the global thread pool.
///
/// With `conditional`, worlds where nothing is broken are rejected and
/// redrawn, so the mean estimates the cost given a fault.
pub fn monte_carlo<S: Scalar>(plan: &ExecPlan<S>, samples: usize, seed: u64, conditional: bool) -> Result<McEstimate> {
    if samples == 0 {
        return Err(PlanError::PlanMismatch("at least one sample is needed".into()));
    }
    if conditional && plan.root().p.to_f64_lossy() <= 0.0 {
        return Err(PlanError::CannotFail);
    }
    let sampler = Sampler::new(plan.distribution());
    let costs: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| sample_cost(plan, &sampler, seed, i, conditional))
        .collect::<Result<_>>()?;
    let n = costs.len() as f64;
    let mean = costs.iter().sum::<f64>() / n;
    let stderr = if costs.len() > 1 {
        let var = costs.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok(McEstimate {
        mean,
        stderr,
        samples,
        seed,
    })
}

/// [`monte_carlo`] on a dedicated pool of `threads` workers.
pub fn monte_carlo_in_pool<S: Scalar>(
    plan: &ExecPlan<S>,
    samples: usize,
    seed: u64,
    conditional: bool,
    threads: usize,
) -> Result<McEstimate> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| PlanError::Stuck(e.to_string()))?;
    pool.install(|| monte_carlo(plan, samples, seed, conditional))
}
