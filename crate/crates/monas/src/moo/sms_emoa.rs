//! Steady-state search driven by hypervolume contributions.
//!
//! Each step creates one offspring, re-sorts, and removes the member of
//! the worst front with the least exclusive hypervolume contribution. One
//! reported generation equals `population_size` steps.

use super::hypervolume::{hv_contributions_2d, hypervolume_2d};
use super::sorting::non_dominated_sort;
use super::{
    debug_check_front, init_population, non_dominated_indices, objectives_of, reported_front,
    seeded_rng, tournament, Individual, RunRng, SearchConfig, SearchError, SearchResult,
};
use crate::genotype::{mutate, uniform_crossover};
use crate::persistence::RunManifest;
use crate::surrogate::{Evaluator, ObjectiveVector, SurrogateError};
use rand::Rng;

/// Reference point used when computing contributions: the configured fixed
/// point when present, otherwise the componentwise population worst plus
/// one in each objective.
fn selection_reference(cfg: &SearchConfig, objs: &[ObjectiveVector]) -> ObjectiveVector {
    if let Some(fixed) = cfg.hv_selection_ref {
        return fixed;
    }
    let mut worst = ObjectiveVector::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for o in objs {
        worst.top1_error = worst.top1_error.max(o.top1_error);
        worst.latency = worst.latency.max(o.latency);
    }
    ObjectiveVector::new(worst.top1_error + 1.0, worst.latency + 1.0)
}

/// Per-individual (rank, contribution) for parent tournaments.
fn rank_and_contribution(cfg: &SearchConfig, objs: &[ObjectiveVector]) -> (Vec<usize>, Vec<f64>) {
    let reference = selection_reference(cfg, objs);
    let fronts = non_dominated_sort(objs);
    let mut rank = vec![0usize; objs.len()];
    let mut contribution = vec![0.0f64; objs.len()];
    for (level, front) in fronts.iter().enumerate() {
        let front_objs: Vec<_> = front.iter().map(|&i| objs[i]).collect();
        let contribs = hv_contributions_2d(&front_objs, reference);
        for (k, &i) in front.iter().enumerate() {
            rank[i] = level;
            contribution[i] = contribs[k];
        }
    }
    (rank, contribution)
}

pub(super) fn run(
    cfg: &SearchConfig,
    evaluator: &dyn Evaluator,
) -> Result<SearchResult, SearchError> {
    run_inner(cfg, evaluator, None)
}

/// Like the normal run, but also records the front-0 hypervolume against
/// the configured reference point after every single steady-state step.
/// Meant for monotonicity diagnostics; the result is identical to the
/// untraced run.
pub fn run_sms_emoa_traced(
    cfg: &SearchConfig,
    evaluator: &dyn Evaluator,
) -> Result<(SearchResult, Vec<f64>), SearchError> {
    let mut trace = Vec::with_capacity(cfg.generations * cfg.population_size);
    let result = run_inner(cfg, evaluator, Some(&mut trace))?;
    Ok((result, trace))
}

fn run_inner(
    cfg: &SearchConfig,
    evaluator: &dyn Evaluator,
    mut step_trace: Option<&mut Vec<f64>>,
) -> Result<SearchResult, SearchError> {
    cfg.validate()?;
    let mut rng = seeded_rng(cfg);
    let mut population = init_population(cfg, evaluator, &mut rng)?;
    let mut hv_series = Vec::with_capacity(cfg.generations);

    for generation in 0..cfg.generations {
        for _ in 0..cfg.population_size {
            step(cfg, evaluator, &mut population, &mut rng).map_err(|source| {
                SearchError::Evaluation {
                    generation: generation + 1,
                    source,
                }
            })?;
            if let Some(trace) = step_trace.as_deref_mut() {
                trace.push(front0_hv(&population, cfg.reference_point));
            }
        }
        hv_series.push(front0_hv(&population, cfg.reference_point));
        debug_check_front(&population);
    }

    let front = reported_front(&population);
    Ok(SearchResult {
        manifest: RunManifest::for_run(cfg, evaluator),
        population,
        front,
        hv_series,
    })
}

fn front0_hv(population: &[Individual], reference: ObjectiveVector) -> f64 {
    let objs = objectives_of(population);
    let front_objs: Vec<_> = non_dominated_indices(&objs)
        .into_iter()
        .map(|i| objs[i])
        .collect();
    hypervolume_2d(&front_objs, reference)
}

fn step(
    cfg: &SearchConfig,
    evaluator: &dyn Evaluator,
    population: &mut Vec<Individual>,
    rng: &mut RunRng,
) -> Result<(), SurrogateError> {
    let objs = objectives_of(population);
    let (rank, contribution) = rank_and_contribution(cfg, &objs);
    let a = tournament(&rank, &contribution, rng);
    let b = tournament(&rank, &contribution, rng);
    let child = mutate(
        &uniform_crossover(&population[a].genotype, &population[b].genotype, rng),
        &cfg.operators,
        &cfg.space,
        rng,
    );
    let child_objs = evaluator.evaluate(&child)?;
    population.push(Individual {
        genotype: child,
        objectives: child_objs,
    });

    // Remove the least contributor of the worst front; exact ties are
    // broken uniformly at random.
    let objs = objectives_of(population);
    let fronts = non_dominated_sort(&objs);
    let worst = fronts.last().expect("population is never empty");
    let reference = selection_reference(cfg, &objs);
    let worst_objs: Vec<_> = worst.iter().map(|&i| objs[i]).collect();
    let contribs = hv_contributions_2d(&worst_objs, reference);
    let min = contribs.iter().copied().fold(f64::INFINITY, f64::min);
    let candidates: Vec<usize> = worst
        .iter()
        .enumerate()
        .filter(|&(k, _)| contribs[k] == min)
        .map(|(_, &i)| i)
        .collect();
    let victim = candidates[rng.gen_range(0..candidates.len())];
    population.remove(victim);
    Ok(())
}
