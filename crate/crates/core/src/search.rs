//! Population search engine: colony lifecycle, tournament selection,
//! mutation, scout restarts, fitness caching and termination.
//!
//! One individual is one candidate path. Each round a set of tournament
//! winners is replaced by mutated offspring, only changed paths are
//! re-scored, and individuals that have gone `stagnation_threshold` rounds
//! without improving while below the population's best are re-randomized.
//! The run ends at the first target-level outcome, when the query budget
//! runs dry, or after `max_iterations` rounds.
//!
//! Determinism: all draws come from one seeded generator in a fixed order
//! (initialization, then per round: tournaments, mutations, scouts), and
//! oracle randomness is keyed on path content, so identical
//! `(config, instance, seed)` triples reproduce traces bit for bit.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Path, StrategySet};
use crate::oracle::{Cue, FitnessLevel, Oracle, OracleBudget, OracleError};
use crate::trace::{IterationRecord, SearchStatus, SearchTrace, SearchSummary};

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("invalid search config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// All knobs of one search run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Population size `l`.
    pub population_size: usize,
    /// Round limit `N`.
    pub max_iterations: u32,
    /// Rounds without improvement before a non-best individual is restarted.
    pub stagnation_threshold: u32,
    /// Individuals sampled per tournament.
    pub tournament_size: usize,
    /// Tournaments held per round (winners to mutate).
    pub selection_count: usize,
    /// Probability of in-place replacement; otherwise a step is appended.
    pub mutation_split: f64,
    /// Hard cap on path length.
    pub max_path_length: usize,
    /// Cap on initial (and restarted) path lengths.
    pub init_length_cap: usize,
    pub rng_seed: u64,
}

impl SearchConfig {
    /// Profile for smaller targets: 3 rounds, paths up to 3, population 5.
    pub fn small(seed: u64) -> Self {
        Self::sized(5, 3, 3, seed)
    }

    /// Profile for harder targets: 5 rounds, paths up to 5, population 10.
    pub fn large(seed: u64) -> Self {
        Self::sized(10, 5, 5, seed)
    }

    fn sized(population: usize, iterations: u32, max_len: usize, seed: u64) -> Self {
        Self {
            population_size: population,
            max_iterations: iterations,
            stagnation_threshold: 2,
            tournament_size: 2,
            selection_count: (population / 2).max(1),
            mutation_split: 0.5,
            max_path_length: max_len,
            init_length_cap: max_len.min(3),
            rng_seed: seed,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        let bad = |msg: String| Err(SearchError::InvalidConfig(msg));
        if self.population_size == 0 {
            return bad("population_size must be >= 1".into());
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be >= 1".into());
        }
        if self.stagnation_threshold == 0 {
            return bad("stagnation_threshold must be >= 1".into());
        }
        if self.tournament_size == 0 || self.tournament_size > self.population_size {
            return bad(format!(
                "tournament_size {} must be in 1..={}",
                self.tournament_size, self.population_size
            ));
        }
        if self.selection_count == 0 || self.selection_count > self.population_size {
            return bad(format!(
                "selection_count {} must be in 1..={}",
                self.selection_count, self.population_size
            ));
        }
        if !(0.0..=1.0).contains(&self.mutation_split) {
            return bad(format!("mutation_split {} outside [0,1]", self.mutation_split));
        }
        if self.max_path_length == 0 {
            return bad("max_path_length must be >= 1".into());
        }
        if self.init_length_cap == 0 || self.init_length_cap > self.max_path_length {
            return bad(format!(
                "init_length_cap {} must be in 1..={}",
                self.init_length_cap, self.max_path_length
            ));
        }
        Ok(())
    }
}

/// One population member.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub path: Path,
    /// Oracle outcome of the current path; `None` marks a stale entry that
    /// must be re-scored before any selection touches it.
    pub fitness: Option<FitnessLevel>,
    /// Rounds since this slot last improved strictly.
    pub update_count: u32,
    pub last_improved_iteration: i64,
    /// Cue extracted at this path's last scored turn, if any.
    pub cue: Option<Cue>,
    /// Turns of the current path covered by an existing transcript; only the
    /// remainder is charged on the next evaluation.
    pub cached_turns: usize,
}

impl Individual {
    fn fresh(path: Path) -> Self {
        Self {
            path,
            fitness: None,
            update_count: 0,
            last_improved_iteration: -1,
            cue: None,
            cached_turns: 0,
        }
    }
}

fn random_path(config: &SearchConfig, set: &StrategySet, rng: &mut impl Rng) -> Path {
    let len = rng.random_range(1..=config.init_length_cap);
    let n = set.len() as u32;
    Path::new((0..len).map(|_| rng.random_range(0..n)).collect())
}

/// Draws `population_size` individuals: length uniform on
/// `1..=init_length_cap`, every step uniform over the strategy set, fitness
/// unevaluated.
pub fn init_population(
    config: &SearchConfig,
    set: &StrategySet,
    rng: &mut impl Rng,
) -> Vec<Individual> {
    (0..config.population_size)
        .map(|_| Individual::fresh(random_path(config, set, rng)))
        .collect()
}

/// `a` beats `b` on fitness, then on shorter path, then on lower slot index.
fn beats(a: &Individual, ai: usize, b: &Individual, bi: usize) -> bool {
    let fa = a.fitness.expect("tournament over unevaluated individual");
    let fb = b.fitness.expect("tournament over unevaluated individual");
    (fa, std::cmp::Reverse(a.path.len()), std::cmp::Reverse(ai))
        > (fb, std::cmp::Reverse(b.path.len()), std::cmp::Reverse(bi))
}

/// Runs `selection_count` independent tournaments and returns the winners'
/// slot indices (repeats allowed across tournaments). Each tournament samples
/// `tournament_size` distinct slots uniformly without replacement.
pub fn tournament_select(
    population: &[Individual],
    config: &SearchConfig,
    rng: &mut impl Rng,
) -> Vec<usize> {
    (0..config.selection_count)
        .map(|_| {
            let entrants =
                rand::seq::index::sample(rng, population.len(), config.tournament_size);
            let mut best = entrants.index(0);
            for k in 1..entrants.len() {
                let i = entrants.index(k);
                if beats(&population[i], i, &population[best], best) {
                    best = i;
                }
            }
            best
        })
        .collect()
}

/// Produces an offspring of `parent`: with probability `mutation_split` one
/// position is replaced by a uniformly drawn strategy (which may repeat an
/// existing one), otherwise a drawn strategy is appended. An append that
/// would exceed `max_path_length` falls back to replacement so every winner
/// yields a genuinely perturbed offspring.
///
/// The offspring keeps whatever transcript prefix survives the edit: all of
/// it for an append, everything before the edited position for a
/// replacement. Its fitness is stale and its stagnation counter starts at 0.
pub fn mutate(
    parent: &Individual,
    config: &SearchConfig,
    set: &StrategySet,
    rng: &mut impl Rng,
) -> Individual {
    assert!(!parent.path.is_empty(), "cannot mutate an empty path");
    let n = set.len() as u32;
    let replace = rng.random::<f64>() < config.mutation_split
        || parent.path.len() >= config.max_path_length;
    if replace {
        let position = rng.random_range(0..parent.path.len());
        let step = rng.random_range(0..n);
        let mut steps = parent.path.steps().to_vec();
        steps[position] = step;
        Individual {
            path: Path::new(steps),
            fitness: None,
            update_count: 0,
            last_improved_iteration: parent.last_improved_iteration,
            cue: None,
            cached_turns: parent.cached_turns.min(position),
        }
    } else {
        let step = rng.random_range(0..n);
        let mut steps = parent.path.steps().to_vec();
        steps.push(step);
        Individual {
            path: Path::new(steps),
            fitness: None,
            update_count: 0,
            last_improved_iteration: parent.last_improved_iteration,
            cue: parent.cue.clone(),
            cached_turns: parent.cached_turns,
        }
    }
}

/// Replaces every individual that has stagnated for `stagnation_threshold`
/// rounds while sitting below the population's best fitness with a fresh
/// random path. The best individual always survives, however stagnant.
/// Returns the number of restarts.
pub fn scout_phase(
    population: &mut [Individual],
    config: &SearchConfig,
    set: &StrategySet,
    rng: &mut impl Rng,
) -> usize {
    let max_fitness = population
        .iter()
        .filter_map(|ind| ind.fitness)
        .max()
        .expect("scout phase over unevaluated population");
    let mut restarts = 0;
    for ind in population.iter_mut() {
        let fitness = ind.fitness.expect("scout phase over unevaluated population");
        if ind.update_count >= config.stagnation_threshold && fitness < max_fitness {
            *ind = Individual::fresh(random_path(config, set, rng));
            restarts += 1;
        }
    }
    restarts
}

enum PassOutcome {
    Completed,
    Success { winning: Path },
    BudgetDry,
}

/// Scores every stale individual in slot order, stopping at the first
/// target-level outcome so no query is spent after a success.
fn evaluate_stale(
    population: &mut [Individual],
    oracle: &dyn Oracle,
    budget: &OracleBudget,
    iteration: i64,
    queries: &mut u64,
) -> Result<PassOutcome, SearchError> {
    for ind in population.iter_mut() {
        if ind.fitness.is_some() {
            continue;
        }
        let cached = ind.cached_turns;
        match oracle.evaluate(&ind.path, cached, ind.cue.as_ref(), budget) {
            Ok(record) => {
                *queries += record.queries_charged;
                let walked = cached + record.queries_charged as usize;
                ind.fitness = Some(record.level);
                ind.cached_turns = walked;
                ind.cue = record.cue;
                ind.last_improved_iteration = iteration;
                if record.level.is_target() {
                    return Ok(PassOutcome::Success {
                        winning: ind.path.prefix(walked),
                    });
                }
            }
            Err(OracleError::BudgetExhausted { charged }) => {
                *queries += charged;
                return Ok(PassOutcome::BudgetDry);
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(PassOutcome::Completed)
}

fn histogram(population: &[Individual]) -> [u32; 5] {
    let mut h = [0u32; 5];
    for ind in population {
        if let Some(f) = ind.fitness {
            h[(f.get() - 1) as usize] += 1;
        }
    }
    h
}

/// Runs the full colony loop and returns the complete trace.
///
/// Budget exhaustion is a terminal status, not an error; only configuration
/// problems and non-budget oracle failures are errors.
pub fn run_search(
    config: &SearchConfig,
    set: &StrategySet,
    oracle: &dyn Oracle,
    budget: &OracleBudget,
) -> Result<SearchTrace, SearchError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut population = init_population(config, set, &mut rng);
    let mut queries = 0u64;
    let mut iterations = Vec::new();
    let mut best_so_far: Option<FitnessLevel> = None;
    let mut best_path_so_far: Option<Path> = None;

    let record_round = |population: &[Individual],
                            iterations: &mut Vec<IterationRecord>,
                            best_so_far: &mut Option<FitnessLevel>,
                            best_path_so_far: &mut Option<Path>,
                            iteration: u32,
                            queries: u64,
                            mutations: u32,
                            scout_restarts: u32| {
        let round_best = population
            .iter()
            .enumerate()
            .filter(|(_, ind)| ind.fitness.is_some())
            .max_by(|(ai, a), (bi, b)| {
                if beats(a, *ai, b, *bi) {
                    std::cmp::Ordering::Greater
                } else {
                    std::cmp::Ordering::Less
                }
            });
        if let Some((_, ind)) = round_best {
            let f = ind.fitness.unwrap();
            if best_so_far.map_or(true, |b| f > b) {
                *best_so_far = Some(f);
                *best_path_so_far = Some(ind.path.clone());
            }
        }
        iterations.push(IterationRecord {
            iteration,
            best_fitness: round_best.and_then(|(_, ind)| ind.fitness.map(FitnessLevel::get)),
            best_so_far: best_so_far.map(FitnessLevel::get),
            histogram: histogram(population),
            queries_used: queries,
            mutations,
            scout_restarts,
        });
    };

    let finish = |iterations: Vec<IterationRecord>,
                  status: SearchStatus,
                  best: Option<FitnessLevel>,
                  best_path: Option<Path>,
                  winning: Option<Path>,
                  queries: u64,
                  iterations_run: u32| {
        Ok(SearchTrace {
            iterations,
            summary: SearchSummary {
                status,
                best_fitness: best.map(FitnessLevel::get),
                best_path: best_path.map(|p| p.into_steps()),
                winning_path: winning.map(|p| p.into_steps()),
                total_queries: queries,
                iterations_run,
            },
        })
    };

    // Round 0: score the initial population.
    let outcome = evaluate_stale(&mut population, oracle, budget, 0, &mut queries)?;
    match outcome {
        PassOutcome::Success { winning } => {
            record_round(
                &population,
                &mut iterations,
                &mut best_so_far,
                &mut best_path_so_far,
                0,
                queries,
                0,
                0,
            );
            return finish(
                iterations,
                SearchStatus::Success,
                best_so_far,
                best_path_so_far,
                Some(winning),
                queries,
                0,
            );
        }
        PassOutcome::BudgetDry => {
            record_round(
                &population,
                &mut iterations,
                &mut best_so_far,
                &mut best_path_so_far,
                0,
                queries,
                0,
                0,
            );
            return finish(
                iterations,
                SearchStatus::BudgetExhausted,
                best_so_far,
                best_path_so_far,
                None,
                queries,
                0,
            );
        }
        PassOutcome::Completed => {}
    }
    record_round(
        &population,
        &mut iterations,
        &mut best_so_far,
        &mut best_path_so_far,
        0,
        queries,
        0,
        0,
    );

    for round in 1..=config.max_iterations {
        let before: Vec<FitnessLevel> = population
            .iter()
            .map(|ind| ind.fitness.expect("population evaluated"))
            .collect();

        // Onlooker phase: winners are replaced by their own offspring, slot
        // by slot. A slot winning several tournaments is mutated
        // independently each time from its pre-round parent; the last
        // offspring keeps the slot.
        let winners = tournament_select(&population, config, &mut rng);
        let parents: Vec<Individual> = winners.iter().map(|&w| population[w].clone()).collect();
        let mutations = winners.len() as u32;
        for (&slot, parent) in winners.iter().zip(&parents) {
            population[slot] = mutate(parent, config, set, &mut rng);
        }

        let outcome =
            evaluate_stale(&mut population, oracle, budget, round as i64, &mut queries)?;
        if let Some(early) = match outcome {
            PassOutcome::Success { winning } => Some((SearchStatus::Success, Some(winning))),
            PassOutcome::BudgetDry => Some((SearchStatus::BudgetExhausted, None)),
            PassOutcome::Completed => None,
        } {
            record_round(
                &population,
                &mut iterations,
                &mut best_so_far,
                &mut best_path_so_far,
                round,
                queries,
                mutations,
                0,
            );
            return finish(
                iterations,
                early.0,
                best_so_far,
                best_path_so_far,
                early.1,
                queries,
                round,
            );
        }

        // Stagnation accounting: a slot improves only by beating its own
        // pre-round fitness strictly.
        for (ind, &prev) in population.iter_mut().zip(&before) {
            let now = ind.fitness.expect("population evaluated");
            if now > prev {
                ind.update_count = 0;
                ind.last_improved_iteration = round as i64;
            } else {
                ind.update_count += 1;
            }
        }

        // Scout phase: restart stagnated non-best slots, then score them.
        let scout_restarts = scout_phase(&mut population, config, set, &mut rng) as u32;
        let outcome =
            evaluate_stale(&mut population, oracle, budget, round as i64, &mut queries)?;
        let early = match outcome {
            PassOutcome::Success { winning } => Some((SearchStatus::Success, Some(winning))),
            PassOutcome::BudgetDry => Some((SearchStatus::BudgetExhausted, None)),
            PassOutcome::Completed => None,
        };
        record_round(
            &population,
            &mut iterations,
            &mut best_so_far,
            &mut best_path_so_far,
            round,
            queries,
            mutations,
            scout_restarts,
        );
        if let Some((status, winning)) = early {
            return finish(
                iterations,
                status,
                best_so_far,
                best_path_so_far,
                winning,
                queries,
                round,
            );
        }
    }

    finish(
        iterations,
        SearchStatus::IterationsExhausted,
        best_so_far,
        best_path_so_far,
        None,
        queries,
        config.max_iterations,
    )
}
