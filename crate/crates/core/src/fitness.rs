//! Fitness evaluation shared by every optimizer and the oracle.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispatch::dispatch_schedule;
use crate::model::{
    evaluate, CommitmentMatrix, CostBreakdown, DispatchMatrix, UCInstance, ViolationReport,
};
use crate::repair::repair;

/// A commitment with its dispatch, price and constraint report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedSchedule {
    pub commitment: CommitmentMatrix,
    pub dispatch: DispatchMatrix,
    pub cost: CostBreakdown,
    pub report: ViolationReport,
    /// Total cost including penalties; lower is better.
    pub fitness: f64,
}

impl EvaluatedSchedule {
    pub fn is_feasible(&self) -> bool {
        self.report.is_feasible()
    }
}

/// Dispatches and prices a genome. Fitness is `cost.total`.
pub fn fitness(instance: &UCInstance, genome: &CommitmentMatrix) -> EvaluatedSchedule {
    let dispatch = dispatch_schedule(instance, genome).expect("genome shaped by the instance");
    let (cost, report) =
        evaluate(instance, genome, &dispatch).expect("dispatch shaped by the instance");
    EvaluatedSchedule {
        commitment: genome.clone(),
        dispatch,
        fitness: cost.total,
        cost,
        report,
    }
}

/// A genome with its cached evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Chromosome {
    pub genome: CommitmentMatrix,
    pub fitness: f64,
    pub cost: CostBreakdown,
    pub feasible: bool,
}

/// Orders by fitness, then genome (lexicographic, OFF < ON).
pub fn compare_chromosomes(a: &Chromosome, b: &Chromosome) -> std::cmp::Ordering {
    a.fitness
        .total_cmp(&b.fitness)
        .then_with(|| a.genome.cmp(&b.genome))
}

#[derive(Debug, Clone, Copy)]
struct Cached {
    fitness: f64,
    cost: CostBreakdown,
    feasible: bool,
}

/// Counts and memoises fitness requests for one optimizer run.
///
/// Every request counts against the evaluation budget, including repeats
/// served from the memo, so budgets mean the same thing for every algorithm.
/// The memo only skips recomputing a pure function; results never depend on
/// whether it hits.
pub struct Evaluator<'a> {
    instance: &'a UCInstance,
    repair: bool,
    evaluations: AtomicU64,
    memo: Mutex<HashMap<Vec<u64>, Cached>>,
}

impl<'a> Evaluator<'a> {
    pub fn new(instance: &'a UCInstance, repair: bool) -> Self {
        Self {
            instance,
            repair,
            evaluations: AtomicU64::new(0),
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn instance(&self) -> &'a UCInstance {
        self.instance
    }

    pub fn repair_enabled(&self) -> bool {
        self.repair
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations.load(Ordering::Relaxed)
    }

    /// Repairs (if enabled) then evaluates.
    pub fn evaluate(&self, genome: CommitmentMatrix) -> Chromosome {
        let genome = if self.repair {
            repair(&genome, self.instance)
        } else {
            genome
        };
        self.evaluate_as_is(genome)
    }

    /// Evaluates without repair.
    pub fn evaluate_as_is(&self, genome: CommitmentMatrix) -> Chromosome {
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        let key = genome.packed();
        if let Some(hit) = self.memo.lock().expect("memo lock").get(&key).copied() {
            return Chromosome {
                genome,
                fitness: hit.fitness,
                cost: hit.cost,
                feasible: hit.feasible,
            };
        }
        let eval = fitness(self.instance, &genome);
        let cached = Cached {
            fitness: eval.fitness,
            cost: eval.cost,
            feasible: eval.is_feasible(),
        };
        self.memo.lock().expect("memo lock").insert(key, cached);
        Chromosome {
            genome,
            fitness: cached.fitness,
            cost: cached.cost,
            feasible: cached.feasible,
        }
    }

    pub fn evaluate_all(&self, genomes: Vec<CommitmentMatrix>) -> Vec<Chromosome> {
        genomes.into_par_iter().map(|g| self.evaluate(g)).collect()
    }

    /// Full schedule for a chromosome; not counted as a search evaluation.
    pub fn expand(&self, chromosome: &Chromosome) -> EvaluatedSchedule {
        fitness(self.instance, &chromosome.genome)
    }
}

/// Best-so-far after a generation (or iteration).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub generation: u32,
    pub evaluations: u64,
    pub best_fitness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxGenerations,
    Stagnation,
    Budget,
}

/// Result of one optimizer run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub best: EvaluatedSchedule,
    pub trace: Vec<TracePoint>,
    pub evaluations: u64,
    pub generations: u32,
    pub stop: StopReason,
}

/// Improvement below this does not reset the stagnation counter.
pub const IMPROVEMENT_TOL: f64 = 1e-6;

/// Generation-loop bookkeeping shared by the optimizers.
pub(crate) struct Progress {
    pub best: Chromosome,
    pub trace: Vec<TracePoint>,
    pub stagnant: u32,
}

impl Progress {
    pub fn start(best: Chromosome, evaluations: u64) -> Self {
        let trace = vec![TracePoint {
            generation: 0,
            evaluations,
            best_fitness: best.fitness,
        }];
        Self {
            best,
            trace,
            stagnant: 0,
        }
    }

    /// Offers a generation's best; returns true if it improved.
    pub fn record(&mut self, generation: u32, evaluations: u64, candidate: &Chromosome) -> bool {
        let improved = candidate.fitness < self.best.fitness - IMPROVEMENT_TOL;
        if compare_chromosomes(candidate, &self.best).is_lt() {
            self.best = candidate.clone();
        }
        if improved {
            self.stagnant = 0;
        } else {
            self.stagnant += 1;
        }
        self.trace.push(TracePoint {
            generation,
            evaluations,
            best_fitness: self.best.fitness,
        });
        improved
    }
}
