//! Generational search with non-dominated sorting and crowding-distance
//! truncation.

use super::sorting::{crowding_distance, non_dominated_sort};
use super::{
    debug_check_front, hypervolume_2d, init_population, non_dominated_indices, objectives_of,
    reported_front, seeded_rng, tournament, Individual, RunRng, SearchConfig, SearchError,
    SearchResult,
};
use crate::genotype::{mutate, uniform_crossover, Genotype};
use crate::persistence::RunManifest;
use crate::surrogate::{evaluate_population, Evaluator};
use rand::Rng;

pub(super) fn run(
    cfg: &SearchConfig,
    evaluator: &dyn Evaluator,
) -> Result<SearchResult, SearchError> {
    let mut rng = seeded_rng(cfg);
    let mut population = init_population(cfg, evaluator, &mut rng)?;
    let mut hv_series = Vec::with_capacity(cfg.generations);

    for generation in 0..cfg.generations {
        let objs = objectives_of(&population);
        let fronts = non_dominated_sort(&objs);
        let mut rank = vec![0usize; population.len()];
        let mut crowd = vec![0.0f64; population.len()];
        for (level, front) in fronts.iter().enumerate() {
            let front_objs: Vec<_> = front.iter().map(|&i| objs[i]).collect();
            let dist = crowding_distance(&front_objs);
            for (k, &i) in front.iter().enumerate() {
                rank[i] = level;
                crowd[i] = dist[k];
            }
        }

        let mut offspring: Vec<Genotype> = Vec::with_capacity(cfg.population_size);
        for _ in 0..cfg.population_size {
            let a = tournament(&rank, &crowd, &mut rng);
            let b = tournament(&rank, &crowd, &mut rng);
            let child =
                uniform_crossover(&population[a].genotype, &population[b].genotype, &mut rng);
            offspring.push(mutate(&child, &cfg.operators, &cfg.space, &mut rng));
        }
        let child_objs =
            evaluate_population(evaluator, &offspring, cfg.threads).map_err(|source| {
                SearchError::Evaluation {
                    generation: generation + 1,
                    source,
                }
            })?;

        let mut combined = population;
        combined.extend(
            offspring
                .into_iter()
                .zip(child_objs)
                .map(|(genotype, objectives)| Individual {
                    genotype,
                    objectives,
                }),
        );
        population = environmental_selection(combined, cfg.population_size, &mut rng);

        let pop_objs = objectives_of(&population);
        let front_objs: Vec<_> = non_dominated_indices(&pop_objs)
            .into_iter()
            .map(|i| pop_objs[i])
            .collect();
        hv_series.push(hypervolume_2d(&front_objs, cfg.reference_point));
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

/// Admits whole fronts while they fit, then truncates the last admitted
/// front by descending crowding distance; exact crowding ties are broken
/// uniformly at random. Survivors keep their original relative order.
pub(super) fn environmental_selection(
    combined: Vec<Individual>,
    target: usize,
    rng: &mut RunRng,
) -> Vec<Individual> {
    let objs = objectives_of(&combined);
    let fronts = non_dominated_sort(&objs);
    let mut keep = vec![false; combined.len()];
    let mut admitted = 0usize;
    for front in fronts {
        if admitted + front.len() <= target {
            for &i in &front {
                keep[i] = true;
            }
            admitted += front.len();
            if admitted == target {
                break;
            }
        } else {
            let remaining = target - admitted;
            let front_objs: Vec<_> = front.iter().map(|&i| objs[i]).collect();
            let dist = crowding_distance(&front_objs);
            let coin: Vec<u64> = front.iter().map(|_| rng.gen()).collect();
            let mut order: Vec<usize> = (0..front.len()).collect();
            order.sort_by(|&x, &y| {
                dist[y]
                    .partial_cmp(&dist[x])
                    .unwrap()
                    .then(coin[x].cmp(&coin[y]))
            });
            for &k in order.iter().take(remaining) {
                keep[front[k]] = true;
            }
            break;
        }
    }
    combined
        .into_iter()
        .zip(keep)
        .filter_map(|(ind, k)| k.then_some(ind))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::{dominates, run_search, Algorithm, SearchConfig};
    use super::*;
    use crate::genotype::{random_genotype, OperatorConfig, SubSpace};
    use crate::surrogate::{ObjectiveVector, SyntheticSurrogate};
    use rand::SeedableRng;

    fn small_cfg(seed: u64) -> SearchConfig {
        SearchConfig {
            algorithm: Algorithm::Nsga2,
            population_size: 4,
            generations: 1,
            operators: OperatorConfig {
                mutation_rate: 0.1,
                rng_seed: seed,
            },
            ..SearchConfig::default()
        }
    }

    #[test]
    fn single_generation_front_is_non_dominated() {
        let result = run_search(&small_cfg(3), &SyntheticSurrogate::default()).unwrap();
        for a in &result.front {
            for b in &result.front {
                assert!(!dominates(&a.objectives, &b.objectives) || a.objectives == b.objectives);
            }
        }
        assert_eq!(result.hv_series.len(), 1);
        assert_eq!(result.population.len(), 4);
    }

    #[test]
    fn same_seed_reproduces_the_result() {
        let cfg = SearchConfig {
            population_size: 12,
            generations: 8,
            ..small_cfg(42)
        };
        let a = run_search(&cfg, &SyntheticSurrogate::default()).unwrap();
        let b = run_search(&cfg, &SyntheticSurrogate::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn thread_count_does_not_change_the_result() {
        let sequential = SearchConfig {
            population_size: 16,
            generations: 6,
            ..small_cfg(13)
        };
        let threaded = SearchConfig {
            threads: 4,
            ..sequential.clone()
        };
        let surrogate = SyntheticSurrogate::default();
        assert_eq!(
            run_search(&sequential, &surrogate).unwrap(),
            run_search(&threaded, &surrogate).unwrap()
        );
    }

    #[test]
    fn selection_never_trades_front0_for_worse() {
        // Construct a population where front 0 has more members than the
        // target: only front-0 individuals may survive.
        let mut rng = RunRng::seed_from_u64(9);
        let space = SubSpace::full();
        let mut combined: Vec<Individual> = Vec::new();
        for k in 0..6 {
            combined.push(Individual {
                genotype: random_genotype(&space, &mut rng),
                objectives: ObjectiveVector::new(k as f64, 5.0 - k as f64),
            });
        }
        // strictly dominated stragglers
        for k in 0..6 {
            combined.push(Individual {
                genotype: random_genotype(&space, &mut rng),
                objectives: ObjectiveVector::new(10.0 + k as f64, 10.0 + k as f64),
            });
        }
        let survivors = environmental_selection(combined, 4, &mut rng);
        assert_eq!(survivors.len(), 4);
        for s in &survivors {
            assert!(s.objectives.top1_error < 10.0, "dominated member survived");
        }
    }

    #[test]
    fn whole_front_admission_prefers_rank_over_crowding() {
        let mut rng = RunRng::seed_from_u64(10);
        let space = SubSpace::full();
        let mut combined: Vec<Individual> = Vec::new();
        // two-member front 0, then a wide dominated front
        for (e, l) in [(0.0, 1.0), (1.0, 0.0)] {
            combined.push(Individual {
                genotype: random_genotype(&space, &mut rng),
                objectives: ObjectiveVector::new(e, l),
            });
        }
        for k in 0..8 {
            combined.push(Individual {
                genotype: random_genotype(&space, &mut rng),
                objectives: ObjectiveVector::new(2.0 + k as f64, 2.0 + (7 - k) as f64),
            });
        }
        let survivors = environmental_selection(combined, 5, &mut rng);
        let front0_kept = survivors
            .iter()
            .filter(|s| s.objectives.top1_error < 2.0)
            .count();
        assert_eq!(front0_kept, 2);
    }
}
