//! Dual-population genetic search with mitosis and meiosis.
//!
//! Two populations evolve side by side. Each generation:
//!
//! 1. **Mixing.** Sub-population 1 takes `round(α1·m1·n1)` copies from
//!    population 1 and `round(β1·m1·n2)` from population 2. Sub-population 2
//!    takes `round(α2·m2·n2)` from population 2 and `round(β2·m2·n1)` from
//!    population 1. Sampling is uniform without replacement within each draw.
//! 2. **Mitosis** on sub-population 1: duplicate, then bit-flip mutation at
//!    the (higher) mitosis rate.
//! 3. **Meiosis** on sub-population 2: random disjoint pairing, crossover,
//!    then mutation at the (lower) meiosis rate.
//! 4. **Survival.** Mitosis offspring compete with population 1 and meiosis
//!    offspring with population 2; each keeps its size. Neither population is
//!    ever dropped, so migration is the only coupling between them.
//!
//! Offspring are repaired (unless disabled) and evaluated through the shared
//! [`Evaluator`]. All randomness comes from [`crate::rng`] sub-streams keyed
//! by generation, purpose and index, so a run is a pure function of the
//! instance and parameters whatever the thread count.

use std::cmp::Ordering;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::ParamError;
use crate::fitness::{
    compare_chromosomes, Chromosome, Evaluator, Progress, RunOutcome, StopReason,
};
use crate::model::{CommitmentMatrix, UCInstance};
use crate::rng::{substream, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CrossoverKind {
    /// Each position swapped between the children with probability 1/2.
    #[default]
    Uniform,
    /// The segment between two cut points of the flattened genome is swapped.
    TwoPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GamomParams {
    pub n1: usize,
    pub n2: usize,
    /// Mitosis rate: share of the populations routed to mitosis.
    pub m1: f64,
    /// Meiosis rate: share of the populations routed to meiosis.
    pub m2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub mitosis_mutation_rate: f64,
    pub meiosis_mutation_rate: f64,
    pub crossover_kind: CrossoverKind,
    pub max_generations: u32,
    /// Generations without improvement before stopping; 0 disables.
    pub stagnation_limit: u32,
    pub seed: u64,
    pub repair_enabled: bool,
    /// Size sub-population 2 as `α2·m2·n1 + β2·m2·n2` (operands as printed
    /// in the original formulation) instead of pairing α2 with population 2.
    pub eq13_literal: bool,
    /// Stop before a generation that would exceed this many evaluations.
    pub max_evaluations: Option<u64>,
}

impl Default for GamomParams {
    fn default() -> Self {
        Self {
            n1: 50,
            n2: 50,
            m1: 0.9,
            m2: 0.9,
            alpha1: 0.7,
            alpha2: 0.7,
            beta1: 0.3,
            beta2: 0.3,
            mitosis_mutation_rate: 0.02,
            meiosis_mutation_rate: 0.005,
            crossover_kind: CrossoverKind::Uniform,
            max_generations: 200,
            stagnation_limit: 50,
            seed: 1,
            repair_enabled: true,
            eq13_literal: false,
            max_evaluations: None,
        }
    }
}

fn check_rate(name: &'static str, value: f64) -> Result<(), ParamError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(ParamError::OutOfRange {
            name,
            value,
            reason: "must lie in [0, 1]",
        })
    }
}

impl GamomParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        for (name, n) in [("n1", self.n1), ("n2", self.n2)] {
            if n < 2 {
                return Err(ParamError::OutOfRange {
                    name,
                    value: n as f64,
                    reason: "population needs at least 2 members",
                });
            }
        }
        for (name, v) in [
            ("m1", self.m1),
            ("m2", self.m2),
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("mitosis_mutation_rate", self.mitosis_mutation_rate),
            ("meiosis_mutation_rate", self.meiosis_mutation_rate),
        ] {
            check_rate(name, v)?;
        }
        if self.mitosis_mutation_rate <= self.meiosis_mutation_rate {
            return Err(ParamError::OutOfRange {
                name: "mitosis_mutation_rate",
                value: self.mitosis_mutation_rate,
                reason: "must exceed meiosis_mutation_rate",
            });
        }
        if let Some(budget) = self.max_evaluations {
            if budget < (self.n1 + self.n2) as u64 {
                return Err(ParamError::OutOfRange {
                    name: "max_evaluations",
                    value: budget as f64,
                    reason: "budget cannot cover the initial populations",
                });
            }
        }
        Ok(())
    }
}

/// How many copies each sub-population draws from each population.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MixPlan {
    /// Population 1 → sub-population 1.
    pub sub1_from_pop1: usize,
    /// Population 2 → sub-population 1.
    pub sub1_from_pop2: usize,
    /// Population 2 → sub-population 2.
    pub sub2_from_pop2: usize,
    /// Population 1 → sub-population 2.
    pub sub2_from_pop1: usize,
}

impl MixPlan {
    pub fn sub1_size(&self) -> usize {
        self.sub1_from_pop1 + self.sub1_from_pop2
    }

    pub fn sub2_size(&self) -> usize {
        self.sub2_from_pop2 + self.sub2_from_pop1
    }
}

/// Splits `round(own + other)` into an own and a migrant share. The total is
/// clamped to at least 2 (extra seats go to the own population), and a
/// positive migration ratio always moves at least one copy.
fn split(own_raw: f64, other_raw: f64, migrating: bool) -> (usize, usize) {
    let total = (own_raw + other_raw).round() as usize;
    let own = (own_raw.round() as usize).min(total);
    let mut other = total - own;
    if migrating && other == 0 {
        other = 1;
    }
    let own = own + 2usize.saturating_sub(own + other);
    (own, other)
}

pub fn mix_plan(params: &GamomParams) -> MixPlan {
    let n1 = params.n1 as f64;
    let n2 = params.n2 as f64;
    let (own1, other1) = split(
        params.alpha1 * params.m1 * n1,
        params.beta1 * params.m1 * n2,
        params.beta1 * params.m1 > 0.0,
    );
    let (own2_raw, other2_raw) = if params.eq13_literal {
        (
            params.alpha2 * params.m2 * n1,
            params.beta2 * params.m2 * n2,
        )
    } else {
        (
            params.alpha2 * params.m2 * n2,
            params.beta2 * params.m2 * n1,
        )
    };
    let (own2, other2) = split(own2_raw, other2_raw, params.beta2 * params.m2 > 0.0);
    MixPlan {
        sub1_from_pop1: own1,
        sub1_from_pop2: other1,
        sub2_from_pop2: own2,
        sub2_from_pop1: other2,
    }
}

/// Sizes `(n1', n2')` of the two sub-populations.
pub fn subpopulation_sizes(params: &GamomParams) -> (usize, usize) {
    let plan = mix_plan(params);
    (plan.sub1_size(), plan.sub2_size())
}

/// The two populations plus run history.
#[derive(Debug, Clone)]
pub struct PopulationPair {
    /// Asexual population, sorted best first.
    pub pop1: Vec<Chromosome>,
    /// Sexual population, sorted best first.
    pub pop2: Vec<Chromosome>,
    pub generation: u32,
    pub best_ever: Chromosome,
}

fn random_genome(rng: &mut ChaCha8Rng, units: usize, hours: usize) -> CommitmentMatrix {
    let bits = (0..units * hours).map(|_| rng.gen::<bool>()).collect();
    CommitmentMatrix::from_bits(units, hours, bits)
}

fn sorted(mut pop: Vec<Chromosome>) -> Vec<Chromosome> {
    pop.sort_by(compare_chromosomes);
    pop
}

fn best_of<'c>(a: &'c Chromosome, b: &'c Chromosome) -> &'c Chromosome {
    if compare_chromosomes(b, a) == Ordering::Less {
        b
    } else {
        a
    }
}

/// Draws both populations i.i.d. uniform from independent streams and
/// evaluates them (after repair when enabled).
pub fn init_populations(
    instance: &UCInstance,
    params: &GamomParams,
    evaluator: &Evaluator<'_>,
) -> PopulationPair {
    let (units, hours) = (instance.n_units(), instance.n_hours());
    let draw = |purpose: Purpose, n: usize| -> Vec<CommitmentMatrix> {
        (0..n)
            .map(|k| {
                random_genome(
                    &mut substream(params.seed, 0, purpose, k as u32),
                    units,
                    hours,
                )
            })
            .collect()
    };
    let pop1 = sorted(evaluator.evaluate_all(draw(Purpose::InitPrimary, params.n1)));
    let pop2 = sorted(evaluator.evaluate_all(draw(Purpose::InitSecondary, params.n2)));
    let best_ever = best_of(&pop1[0], &pop2[0]).clone();
    PopulationPair {
        pop1,
        pop2,
        generation: 0,
        best_ever,
    }
}

/// Mixed sub-populations plus how many members crossed over.
#[derive(Debug, Clone)]
pub struct Subpopulations {
    pub sub1: Vec<Chromosome>,
    pub sub2: Vec<Chromosome>,
    /// Copies taken from the other population (into sub1, into sub2).
    pub migrants: (usize, usize),
}

fn draw_from(
    source: &[Chromosome],
    wanted: usize,
    rng: &mut ChaCha8Rng,
    what: &str,
) -> Vec<Chromosome> {
    let take = if wanted > source.len() {
        log::warn!(
            "{what}: requested {wanted} members from a population of {}; truncating",
            source.len()
        );
        source.len()
    } else {
        wanted
    };
    index::sample(rng, source.len(), take)
        .into_iter()
        .map(|k| source[k].clone())
        .collect()
}

pub fn form_subpopulations(
    pair: &PopulationPair,
    params: &GamomParams,
    generation: u32,
) -> Subpopulations {
    let plan = mix_plan(params);
    let rng = |k: u32| substream(params.seed, generation, Purpose::Sampling, k);
    let mut sub1 = draw_from(&pair.pop1, plan.sub1_from_pop1, &mut rng(0), "pop1 -> sub1");
    let into1 = draw_from(&pair.pop2, plan.sub1_from_pop2, &mut rng(1), "pop2 -> sub1");
    let mut sub2 = draw_from(&pair.pop2, plan.sub2_from_pop2, &mut rng(2), "pop2 -> sub2");
    let into2 = draw_from(&pair.pop1, plan.sub2_from_pop1, &mut rng(3), "pop1 -> sub2");
    let migrants = (into1.len(), into2.len());
    sub1.extend(into1);
    sub2.extend(into2);
    Subpopulations {
        sub1,
        sub2,
        migrants,
    }
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

/// Produces the two children of a crossover (before mutation).
pub fn crossover(
    a: &CommitmentMatrix,
    b: &CommitmentMatrix,
    kind: CrossoverKind,
    rng: &mut ChaCha8Rng,
) -> (CommitmentMatrix, CommitmentMatrix) {
    let mut c1 = a.clone();
    let mut c2 = b.clone();
    let len = a.bits().len();
    match kind {
        CrossoverKind::Uniform => {
            for k in 0..len {
                if rng.gen_bool(0.5) {
                    c1.bits_mut()[k] = b.bits()[k];
                    c2.bits_mut()[k] = a.bits()[k];
                }
            }
        }
        CrossoverKind::TwoPoint => {
            let mut x = rng.gen_range(0..=len);
            let mut y = rng.gen_range(0..=len);
            if x > y {
                std::mem::swap(&mut x, &mut y);
            }
            c1.bits_mut()[x..y].copy_from_slice(&b.bits()[x..y]);
            c2.bits_mut()[x..y].copy_from_slice(&a.bits()[x..y]);
        }
    }
    (c1, c2)
}

/// Unrepaired mitosis offspring: copies flipped bit-wise at `rate`.
pub fn mitosis_genomes(
    sub1: &[Chromosome],
    rate: f64,
    seed: u64,
    generation: u32,
) -> Vec<CommitmentMatrix> {
    sub1.par_iter()
        .enumerate()
        .map(|(k, parent)| {
            let mut rng = substream(seed, generation, Purpose::Mitosis, k as u32);
            let mut child = parent.genome.clone();
            mutate(&mut child, rate, &mut rng);
            child
        })
        .collect()
}

/// Duplicates and mutates every member of `sub1`; output size = `|sub1|`.
pub fn mitosis(
    sub1: &[Chromosome],
    params: &GamomParams,
    evaluator: &Evaluator<'_>,
    generation: u32,
) -> Vec<Chromosome> {
    let children = mitosis_genomes(sub1, params.mitosis_mutation_rate, params.seed, generation);
    evaluator.evaluate_all(children)
}

/// Unrepaired meiosis offspring for the paired members, and the index of
/// the unpaired member (if `|sub2|` is odd).
pub fn meiosis_genomes(
    sub2: &[Chromosome],
    kind: CrossoverKind,
    rate: f64,
    seed: u64,
    generation: u32,
) -> (Vec<CommitmentMatrix>, Option<usize>) {
    let mut order: Vec<usize> = (0..sub2.len()).collect();
    order.shuffle(&mut substream(seed, generation, Purpose::Pairing, 0));
    let leftover = (order.len() % 2 == 1).then(|| order[order.len() - 1]);
    let children = order
        .par_chunks_exact(2)
        .enumerate()
        .flat_map_iter(|(k, pair)| {
            let mut rng = substream(seed, generation, Purpose::Meiosis, k as u32);
            let (mut c1, mut c2) =
                crossover(&sub2[pair[0]].genome, &sub2[pair[1]].genome, kind, &mut rng);
            mutate(&mut c1, rate, &mut rng);
            mutate(&mut c2, rate, &mut rng);
            [c1, c2]
        })
        .collect();
    (children, leftover)
}

/// Recombines disjoint random pairs of `sub2`; output size = `|sub2|`.
pub fn meiosis(
    sub2: &[Chromosome],
    params: &GamomParams,
    evaluator: &Evaluator<'_>,
    generation: u32,
) -> Vec<Chromosome> {
    let (children, leftover) = meiosis_genomes(
        sub2,
        params.crossover_kind,
        params.meiosis_mutation_rate,
        params.seed,
        generation,
    );
    let mut out = evaluator.evaluate_all(children);
    if let Some(k) = leftover {
        out.push(sub2[k].clone());
    }
    out
}

/// The `size` fittest of `old ∪ offspring`; ties prefer the incumbent, then
/// the lexicographically smaller genome.
pub fn select_survivors(
    old: Vec<Chromosome>,
    offspring: Vec<Chromosome>,
    size: usize,
) -> Vec<Chromosome> {
    let mut pool: Vec<(u8, Chromosome)> = old
        .into_iter()
        .map(|c| (0, c))
        .chain(offspring.into_iter().map(|c| (1, c)))
        .collect();
    pool.sort_by(|(age_a, a), (age_b, b)| {
        a.fitness
            .total_cmp(&b.fitness)
            .then(age_a.cmp(age_b))
            .then_with(|| a.genome.cmp(&b.genome))
    });
    pool.truncate(size);
    pool.into_iter().map(|(_, c)| c).collect()
}

/// Evaluations one generation will request under `plan`.
fn generation_cost(plan: &MixPlan, pair: &PopulationPair) -> u64 {
    let sub1 = plan.sub1_from_pop1.min(pair.pop1.len()) + plan.sub1_from_pop2.min(pair.pop2.len());
    let sub2 = plan.sub2_from_pop2.min(pair.pop2.len()) + plan.sub2_from_pop1.min(pair.pop1.len());
    (sub1 + 2 * (sub2 / 2)) as u64
}

/// Runs the search to completion.
pub fn run(instance: &UCInstance, params: &GamomParams) -> Result<RunOutcome, ParamError> {
    run_with_observer(instance, params, |_| {})
}

/// As [`run`], calling `observe` with the populations after initialisation
/// and after every generation.
pub fn run_with_observer(
    instance: &UCInstance,
    params: &GamomParams,
    mut observe: impl FnMut(&PopulationPair),
) -> Result<RunOutcome, ParamError> {
    params.validate()?;
    let evaluator = Evaluator::new(instance, params.repair_enabled);
    let mut pair = init_populations(instance, params, &evaluator);
    observe(&pair);
    let mut progress = Progress::start(pair.best_ever.clone(), evaluator.evaluations());
    let plan = mix_plan(params);
    let mut stop = StopReason::MaxGenerations;

    for generation in 1..=params.max_generations {
        if let Some(budget) = params.max_evaluations {
            if evaluator.evaluations() + generation_cost(&plan, &pair) > budget {
                stop = StopReason::Budget;
                break;
            }
        }
        let subs = form_subpopulations(&pair, params, generation);
        let (off1, off2) = rayon::join(
            || mitosis(&subs.sub1, params, &evaluator, generation),
            || meiosis(&subs.sub2, params, &evaluator, generation),
        );
        pair.pop1 = select_survivors(std::mem::take(&mut pair.pop1), off1, params.n1);
        pair.pop2 = select_survivors(std::mem::take(&mut pair.pop2), off2, params.n2);
        pair.generation = generation;
        let gen_best = best_of(&pair.pop1[0], &pair.pop2[0]).clone();
        progress.record(generation, evaluator.evaluations(), &gen_best);
        pair.best_ever = progress.best.clone();
        observe(&pair);
        if params.stagnation_limit > 0 && progress.stagnant >= params.stagnation_limit {
            stop = StopReason::Stagnation;
            break;
        }
    }

    Ok(RunOutcome {
        best: evaluator.expand(&progress.best),
        generations: pair.generation,
        evaluations: evaluator.evaluations(),
        trace: progress.trace,
        stop,
    })
}
