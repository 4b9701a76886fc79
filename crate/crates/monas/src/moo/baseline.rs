//! Constrained single-objective baseline: maximize predicted accuracy
//! subject to a latency bound, one run per bound.
//!
//! Infeasible candidates are rejected at sampling and variation time by
//! resampling up to a retry cap, mirroring a constraint-filtered
//! evolutionary search.

use super::{seeded_rng, Individual, RunRng, SearchConfig, SearchError};
use crate::genotype::{mutate, random_genotype, uniform_crossover};
use crate::surrogate::Evaluator;
use rand::Rng;

/// Resampling attempts per slot before falling back to a feasible parent.
const RETRY_CAP: usize = 200;

pub fn run_ofa_baseline(
    cfg: &SearchConfig,
    evaluator: &dyn Evaluator,
) -> Result<Individual, SearchError> {
    cfg.validate()?;
    let constraint = cfg
        .latency_constraint
        .ok_or_else(|| SearchError::Config("baseline mode requires a latency constraint".into()))?;
    let mut rng = seeded_rng(cfg);

    // Initialization by rejection sampling. If not a single feasible
    // candidate shows up within the attempt budget, the constraint is
    // reported as infeasible.
    let mut population: Vec<Individual> = Vec::with_capacity(cfg.population_size);
    let mut attempts = 0usize;
    while population.len() < cfg.population_size && attempts < cfg.population_size * RETRY_CAP {
        attempts += 1;
        let genotype = random_genotype(&cfg.space, &mut rng);
        let objectives =
            evaluator
                .evaluate(&genotype)
                .map_err(|source| SearchError::Evaluation {
                    generation: 0,
                    source,
                })?;
        if objectives.latency <= constraint {
            population.push(Individual {
                genotype,
                objectives,
            });
        }
    }
    if population.is_empty() {
        return Err(SearchError::Infeasible { constraint });
    }
    let found = population.len();
    while population.len() < cfg.population_size {
        let clone = population[population.len() % found].clone();
        population.push(clone);
    }

    for generation in 0..cfg.generations {
        let mut offspring: Vec<Individual> = Vec::with_capacity(cfg.population_size);
        for _ in 0..cfg.population_size {
            let a = tournament_by_error(&population, &mut rng);
            let b = tournament_by_error(&population, &mut rng);
            let mut accepted: Option<Individual> = None;
            for _ in 0..RETRY_CAP {
                let child = mutate(
                    &uniform_crossover(&population[a].genotype, &population[b].genotype, &mut rng),
                    &cfg.operators,
                    &cfg.space,
                    &mut rng,
                );
                let objectives =
                    evaluator
                        .evaluate(&child)
                        .map_err(|source| SearchError::Evaluation {
                            generation: generation + 1,
                            source,
                        })?;
                if objectives.latency <= constraint {
                    accepted = Some(Individual {
                        genotype: child,
                        objectives,
                    });
                    break;
                }
            }
            offspring.push(accepted.unwrap_or_else(|| {
                let better =
                    if population[a].objectives.top1_error <= population[b].objectives.top1_error {
                        a
                    } else {
                        b
                    };
                population[better].clone()
            }));
        }
        population.extend(offspring);
        // Elitist truncation by error; the sort is stable so ties keep
        // their arrival order.
        population.sort_by(|x, y| {
            x.objectives
                .top1_error
                .partial_cmp(&y.objectives.top1_error)
                .unwrap()
        });
        population.truncate(cfg.population_size);
    }

    Ok(population
        .into_iter()
        .min_by(|x, y| {
            x.objectives
                .top1_error
                .partial_cmp(&y.objectives.top1_error)
                .unwrap()
        })
        .expect("population is non-empty"))
}

fn tournament_by_error(population: &[Individual], rng: &mut RunRng) -> usize {
    let a = rng.gen_range(0..population.len());
    let b = rng.gen_range(0..population.len());
    match population[a]
        .objectives
        .top1_error
        .partial_cmp(&population[b].objectives.top1_error)
        .unwrap()
    {
        std::cmp::Ordering::Less => a,
        std::cmp::Ordering::Greater => b,
        std::cmp::Ordering::Equal => {
            if rng.gen::<bool>() {
                a
            } else {
                b
            }
        }
    }
}
