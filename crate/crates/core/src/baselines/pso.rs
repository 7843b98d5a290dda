//! Binary particle swarm.
//!
//! Each particle keeps a real velocity per bit. Velocities follow the usual
//! inertia/cognitive/social update, are clamped to `±v_max`, and the logistic
//! of the velocity is the probability that the bit is ON at the next draw.
//! Drawn positions are repaired and the repaired genome becomes the
//! particle's position.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::ParamError;
use crate::fitness::{
    compare_chromosomes, Chromosome, Evaluator, Progress, RunOutcome, StopReason,
};
use crate::model::{CommitmentMatrix, UCInstance};
use crate::rng::{substream, Purpose};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PsoParams {
    pub swarm: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub v_max: f64,
    pub max_iterations: u32,
    /// 0 disables.
    pub stagnation_limit: u32,
    pub seed: u64,
    pub repair_enabled: bool,
    pub max_evaluations: Option<u64>,
}

impl Default for PsoParams {
    fn default() -> Self {
        Self {
            swarm: 100,
            inertia: 0.72,
            cognitive: 1.49,
            social: 1.49,
            v_max: 4.0,
            max_iterations: 200,
            stagnation_limit: 50,
            seed: 1,
            repair_enabled: true,
            max_evaluations: None,
        }
    }
}

impl PsoParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        if self.swarm < 2 {
            return Err(ParamError::OutOfRange {
                name: "swarm",
                value: self.swarm as f64,
                reason: "must be at least 2",
            });
        }
        if self.v_max.is_nan() || self.v_max <= 0.0 {
            return Err(ParamError::OutOfRange {
                name: "v_max",
                value: self.v_max,
                reason: "must be positive",
            });
        }
        if let Some(budget) = self.max_evaluations {
            if budget < self.swarm as u64 {
                return Err(ParamError::OutOfRange {
                    name: "max_evaluations",
                    value: budget as f64,
                    reason: "budget cannot cover the initial swarm",
                });
            }
        }
        Ok(())
    }
}

struct Particle {
    position: Chromosome,
    velocity: Vec<f64>,
    personal_best: Chromosome,
}

fn logistic(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

fn bit(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

pub fn pso_run(instance: &UCInstance, params: &PsoParams) -> Result<RunOutcome, ParamError> {
    params.validate()?;
    let (units, hours) = (instance.n_units(), instance.n_hours());
    let len = units * hours;
    let evaluator = Evaluator::new(instance, params.repair_enabled);

    let initial: Vec<CommitmentMatrix> = (0..params.swarm)
        .map(|k| {
            let mut rng = substream(params.seed, 0, Purpose::Swarm, k as u32);
            let bits = (0..len).map(|_| rng.gen::<bool>()).collect();
            CommitmentMatrix::from_bits(units, hours, bits)
        })
        .collect();
    let mut swarm: Vec<Particle> = evaluator
        .evaluate_all(initial)
        .into_iter()
        .map(|c| Particle {
            personal_best: c.clone(),
            position: c,
            velocity: vec![0.0; len],
        })
        .collect();
    let leader = |swarm: &[Particle]| {
        swarm
            .iter()
            .map(|p| &p.personal_best)
            .min_by(|a, b| compare_chromosomes(a, b))
            .expect("swarm is non-empty")
            .clone()
    };
    let mut global = leader(&swarm);
    let mut progress = Progress::start(global.clone(), evaluator.evaluations());

    let mut stop = StopReason::MaxGenerations;
    let mut iteration = 0;
    while iteration < params.max_iterations {
        if let Some(budget) = params.max_evaluations {
            if evaluator.evaluations() + params.swarm as u64 > budget {
                stop = StopReason::Budget;
                break;
            }
        }
        iteration += 1;
        let g = global.genome.bits().to_vec();
        let drawn: Vec<CommitmentMatrix> = swarm
            .par_iter_mut()
            .enumerate()
            .map(|(k, particle)| {
                let mut rng = substream(params.seed, iteration, Purpose::Swarm, k as u32);
                let x = particle.position.genome.bits();
                let pb = particle.personal_best.genome.bits();
                let mut next = Vec::with_capacity(len);
                for j in 0..len {
                    let r1: f64 = rng.gen();
                    let r2: f64 = rng.gen();
                    let v = params.inertia * particle.velocity[j]
                        + params.cognitive * r1 * (bit(pb[j]) - bit(x[j]))
                        + params.social * r2 * (bit(g[j]) - bit(x[j]));
                    let v = v.clamp(-params.v_max, params.v_max);
                    particle.velocity[j] = v;
                    next.push(rng.gen::<f64>() < logistic(v));
                }
                CommitmentMatrix::from_bits(units, hours, next)
            })
            .collect();
        let evaluated = evaluator.evaluate_all(drawn);
        for (particle, c) in swarm.iter_mut().zip(evaluated) {
            if compare_chromosomes(&c, &particle.personal_best).is_lt() {
                particle.personal_best = c.clone();
            }
            particle.position = c;
        }
        global = leader(&swarm);
        progress.record(iteration, evaluator.evaluations(), &global);
        if params.stagnation_limit > 0 && progress.stagnant >= params.stagnation_limit {
            stop = StopReason::Stagnation;
            break;
        }
    }

    Ok(RunOutcome {
        best: evaluator.expand(&progress.best),
        generations: iteration,
        evaluations: evaluator.evaluations(),
        trace: progress.trace,
        stop,
    })
}
