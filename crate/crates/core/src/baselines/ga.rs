//! Generational GA: tournament selection, uniform crossover, bit-flip
//! mutation, elitist replacement.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::ParamError;
use crate::fitness::{
    compare_chromosomes, Chromosome, Evaluator, Progress, RunOutcome, StopReason,
};
use crate::gamom::{crossover, CrossoverKind};
use crate::model::{CommitmentMatrix, UCInstance};
use crate::rng::{substream, Purpose};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaParams {
    pub population: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub tournament_size: usize,
    pub elitism_count: usize,
    pub max_generations: u32,
    /// 0 disables.
    pub stagnation_limit: u32,
    pub seed: u64,
    pub repair_enabled: bool,
    pub max_evaluations: Option<u64>,
}

impl Default for GaParams {
    fn default() -> Self {
        Self {
            population: 100,
            crossover_rate: 0.9,
            mutation_rate: 0.01,
            tournament_size: 3,
            elitism_count: 2,
            max_generations: 200,
            stagnation_limit: 50,
            seed: 1,
            repair_enabled: true,
            max_evaluations: None,
        }
    }
}

impl GaParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        let bad = |name, value: f64, reason| {
            Err(ParamError::OutOfRange {
                name,
                value,
                reason,
            })
        };
        if self.population < 2 {
            return bad("population", self.population as f64, "must be at least 2");
        }
        if self.elitism_count > self.population {
            return bad(
                "elitism_count",
                self.elitism_count as f64,
                "cannot exceed population",
            );
        }
        if self.tournament_size < 1 {
            return bad("tournament_size", 0.0, "must be at least 1");
        }
        for (name, v) in [
            ("crossover_rate", self.crossover_rate),
            ("mutation_rate", self.mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(name, v, "must lie in [0, 1]");
            }
        }
        if let Some(budget) = self.max_evaluations {
            if budget < self.population as u64 {
                return bad(
                    "max_evaluations",
                    budget as f64,
                    "budget cannot cover the initial population",
                );
            }
        }
        Ok(())
    }
}

fn tournament<'p>(pop: &'p [Chromosome], size: usize, rng: &mut ChaCha8Rng) -> &'p Chromosome {
    let mut best = &pop[rng.gen_range(0..pop.len())];
    for _ in 1..size {
        let c = &pop[rng.gen_range(0..pop.len())];
        if compare_chromosomes(c, best).is_lt() {
            best = c;
        }
    }
    best
}

fn mutate(genome: &mut CommitmentMatrix, rate: f64, rng: &mut ChaCha8Rng) {
    if rate <= 0.0 {
        return;
    }
    for bit in genome.bits_mut() {
        if rng.gen_bool(rate) {
            *bit = !*bit;
        }
    }
}

pub fn ga_run(instance: &UCInstance, params: &GaParams) -> Result<RunOutcome, ParamError> {
    params.validate()?;
    let (units, hours) = (instance.n_units(), instance.n_hours());
    let evaluator = Evaluator::new(instance, params.repair_enabled);

    let initial: Vec<CommitmentMatrix> = (0..params.population)
        .map(|k| {
            let mut rng = substream(params.seed, 0, Purpose::InitPrimary, k as u32);
            let bits = (0..units * hours).map(|_| rng.gen::<bool>()).collect();
            CommitmentMatrix::from_bits(units, hours, bits)
        })
        .collect();
    let mut pop = evaluator.evaluate_all(initial);
    pop.sort_by(compare_chromosomes);
    let mut progress = Progress::start(pop[0].clone(), evaluator.evaluations());

    let children_per_gen = params.population - params.elitism_count;
    let mut stop = StopReason::MaxGenerations;
    let mut generation = 0;
    while generation < params.max_generations {
        if let Some(budget) = params.max_evaluations {
            if evaluator.evaluations() + children_per_gen as u64 > budget {
                stop = StopReason::Budget;
                break;
            }
        }
        generation += 1;
        let pairs = children_per_gen.div_ceil(2);
        let children: Vec<CommitmentMatrix> = (0..pairs)
            .into_par_iter()
            .flat_map_iter(|k| {
                let mut rng = substream(params.seed, generation, Purpose::Variation, k as u32);
                let a = tournament(&pop, params.tournament_size, &mut rng);
                let b = tournament(&pop, params.tournament_size, &mut rng);
                let (mut c1, mut c2) = if rng.gen_bool(params.crossover_rate) {
                    crossover(&a.genome, &b.genome, CrossoverKind::Uniform, &mut rng)
                } else {
                    (a.genome.clone(), b.genome.clone())
                };
                mutate(&mut c1, params.mutation_rate, &mut rng);
                mutate(&mut c2, params.mutation_rate, &mut rng);
                [c1, c2]
            })
            .collect::<Vec<_>>()
            .into_iter()
            .take(children_per_gen)
            .collect();
        let mut next: Vec<Chromosome> = pop[..params.elitism_count].to_vec();
        next.extend(evaluator.evaluate_all(children));
        next.sort_by(compare_chromosomes);
        pop = next;
        progress.record(generation, evaluator.evaluations(), &pop[0]);
        if params.stagnation_limit > 0 && progress.stagnant >= params.stagnation_limit {
            stop = StopReason::Stagnation;
            break;
        }
    }

    Ok(RunOutcome {
        best: evaluator.expand(&progress.best),
        generations: generation,
        evaluations: evaluator.evaluations(),
        trace: progress.trace,
        stop,
    })
}
