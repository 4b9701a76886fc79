//! Multi-objective search: dominance machinery, NSGA-II, SMS-EMOA and a
//! constrained single-objective baseline.
//!
//! Runs are bit-deterministic under a fixed seed and configuration. Every
//! reported front is pairwise non-dominated; in debug builds that is
//! re-checked after each generation.

mod baseline;
mod hypervolume;
mod nsga2;
mod sms_emoa;
mod sorting;

pub use baseline::run_ofa_baseline;
pub use hypervolume::{hv_contributions_2d, hypervolume_2d};
pub use sms_emoa::run_sms_emoa_traced;
pub use sorting::{crowding_distance, non_dominated_sort};

use crate::genotype::{Genotype, OperatorConfig, SubSpace};
use crate::persistence::RunManifest;
use crate::surrogate::{Evaluator, ObjectiveVector, SurrogateError};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// RNG used by all runs; fixed so that seeds reproduce across platforms.
pub type RunRng = ChaCha8Rng;

/// An evaluated member of the population.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub genotype: Genotype,
    pub objectives: ObjectiveVector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Nsga2,
    SmsEmoa,
    OfaBaseline,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Nsga2 => "nsga2",
            Algorithm::SmsEmoa => "sms-emoa",
            Algorithm::OfaBaseline => "ofa-baseline",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "nsga2" => Some(Algorithm::Nsga2),
            "sms-emoa" => Some(Algorithm::SmsEmoa),
            "ofa-baseline" => Some(Algorithm::OfaBaseline),
            _ => None,
        }
    }
}

/// Full configuration of one search run.
#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub algorithm: Algorithm,
    pub population_size: usize,
    pub generations: usize,
    pub operators: OperatorConfig,
    /// Reference point for the reported hypervolume series, in
    /// (top-1 error %, latency ms).
    pub reference_point: ObjectiveVector,
    /// Latency bound in ms; required by the baseline, ignored elsewhere.
    pub latency_constraint: Option<f64>,
    /// Option subsets the operators draw from.
    pub space: SubSpace,
    /// Fixed reference point for SMS-EMOA contribution selection. `None`
    /// selects against the dynamic point (componentwise population worst
    /// plus one in each objective). A fixed point makes the front-0
    /// hypervolume series provably non-decreasing against that same point.
    pub hv_selection_ref: Option<ObjectiveVector>,
    /// Worker threads for batch evaluation. A runtime knob only: it never
    /// changes results, is not persisted, and does not take part in
    /// equality.
    pub threads: usize,
}

impl PartialEq for SearchConfig {
    fn eq(&self, other: &Self) -> bool {
        self.algorithm == other.algorithm
            && self.population_size == other.population_size
            && self.generations == other.generations
            && self.operators == other.operators
            && self.reference_point == other.reference_point
            && self.latency_constraint == other.latency_constraint
            && self.space == other.space
            && self.hv_selection_ref == other.hv_selection_ref
    }
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Nsga2,
            population_size: 100,
            generations: 1000,
            operators: OperatorConfig::default(),
            reference_point: ObjectiveVector::new(100.0, 25.0),
            latency_constraint: None,
            space: SubSpace::full(),
            hv_selection_ref: None,
            threads: 1,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        if self.population_size < 2 {
            return Err(SearchError::Config(
                "population size must be at least 2".into(),
            ));
        }
        if self.generations < 1 {
            return Err(SearchError::Config("generations must be at least 1".into()));
        }
        self.operators
            .validate()
            .map_err(|e| SearchError::Config(e.to_string()))?;
        self.space
            .validate()
            .map_err(|e| SearchError::Config(e.to_string()))?;
        if !self.reference_point.is_finite() {
            return Err(SearchError::Config("reference point must be finite".into()));
        }
        if let Some(c) = self.latency_constraint {
            if !(c.is_finite() && c > 0.0) {
                return Err(SearchError::Config(
                    "latency constraint must be positive".into(),
                ));
            }
        }
        if self.threads == 0 {
            return Err(SearchError::Config("threads must be at least 1".into()));
        }
        Ok(())
    }
}

/// Output of a multi-objective run.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub manifest: RunManifest,
    pub population: Vec<Individual>,
    /// Non-dominated members of the final population, deduplicated by
    /// phenotype key and sorted by latency then key.
    pub front: Vec<Individual>,
    /// Hypervolume of the non-dominated set against the configured
    /// reference point, one value per generation.
    pub hv_series: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("invalid search configuration: {0}")]
    Config(String),
    #[error("evaluation failed at generation {generation}: {source}")]
    Evaluation {
        generation: usize,
        #[source]
        source: SurrogateError,
    },
    #[error("no feasible individual found under latency constraint {constraint} ms")]
    Infeasible { constraint: f64 },
}

/// Pareto dominance for minimization: `a` is no worse in both objectives
/// and not equal to `b`.
pub fn dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> bool {
    a.top1_error <= b.top1_error
        && a.latency <= b.latency
        && (a.top1_error < b.top1_error || a.latency < b.latency)
}

/// Indices of points dominated by no other point. Exact duplicates are all
/// retained; see [`pareto_filter`] for the deduplicating variant.
pub fn non_dominated_indices(points: &[ObjectiveVector]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| {
            points
                .iter()
                .enumerate()
                .all(|(j, p)| j == i || !dominates(p, &points[i]))
        })
        .collect()
}

/// Maximal non-dominated subset; exact-equal duplicates keep their first
/// occurrence only.
pub fn pareto_filter(points: &[ObjectiveVector]) -> Vec<usize> {
    let mut keep: Vec<usize> = Vec::new();
    for i in non_dominated_indices(points) {
        if keep.iter().all(|&k| points[k] != points[i]) {
            keep.push(i);
        }
    }
    keep
}

/// Runs the configured multi-objective algorithm. The baseline has its own
/// entry point, [`run_ofa_baseline`], because it returns a single
/// architecture instead of a front.
pub fn run_search(
    cfg: &SearchConfig,
    evaluator: &dyn Evaluator,
) -> Result<SearchResult, SearchError> {
    cfg.validate()?;
    match cfg.algorithm {
        Algorithm::Nsga2 => nsga2::run(cfg, evaluator),
        Algorithm::SmsEmoa => sms_emoa::run(cfg, evaluator),
        Algorithm::OfaBaseline => Err(SearchError::Config(
            "the baseline returns a single architecture; use run_ofa_baseline".into(),
        )),
    }
}

/// Per-generation hypervolume series of a finished run. The stored series
/// was computed against the run's configured reference point; asking for a
/// different point is a configuration error because per-generation fronts
/// are not retained.
pub fn hypervolume_progression(
    result: &SearchResult,
    reference: ObjectiveVector,
) -> Result<Vec<(usize, f64)>, SearchError> {
    if reference != result.manifest.config.reference_point {
        return Err(SearchError::Config(format!(
            "run recorded its series against ({}, {}); recomputing at a different point needs \
             the original reference",
            result.manifest.config.reference_point.top1_error,
            result.manifest.config.reference_point.latency,
        )));
    }
    Ok(result
        .hv_series
        .iter()
        .enumerate()
        .map(|(g, &hv)| (g + 1, hv))
        .collect())
}

// ---------------------------------------------------------------------------
// shared run machinery

pub(crate) fn seeded_rng(cfg: &SearchConfig) -> RunRng {
    use rand::SeedableRng;
    RunRng::seed_from_u64(cfg.operators.rng_seed)
}

pub(crate) fn init_population(
    cfg: &SearchConfig,
    evaluator: &dyn Evaluator,
    rng: &mut RunRng,
) -> Result<Vec<Individual>, SearchError> {
    let genotypes: Vec<Genotype> = (0..cfg.population_size)
        .map(|_| crate::genotype::random_genotype(&cfg.space, rng))
        .collect();
    let objectives = crate::surrogate::evaluate_population(evaluator, &genotypes, cfg.threads)
        .map_err(|source| SearchError::Evaluation {
            generation: 0,
            source,
        })?;
    Ok(genotypes
        .into_iter()
        .zip(objectives)
        .map(|(genotype, objectives)| Individual {
            genotype,
            objectives,
        })
        .collect())
}

/// Binary tournament: lower rank wins, then the larger diversity metric
/// (crowding distance or hypervolume contribution), remaining ties decided
/// by a fair coin from the run RNG.
pub(crate) fn tournament(rank: &[usize], metric: &[f64], rng: &mut RunRng) -> usize {
    let a = rng.gen_range(0..rank.len());
    let b = rng.gen_range(0..rank.len());
    match rank[a].cmp(&rank[b]) {
        std::cmp::Ordering::Less => a,
        std::cmp::Ordering::Greater => b,
        std::cmp::Ordering::Equal => match metric[a].partial_cmp(&metric[b]) {
            Some(std::cmp::Ordering::Greater) => a,
            Some(std::cmp::Ordering::Less) => b,
            _ => {
                if rng.gen::<bool>() {
                    a
                } else {
                    b
                }
            }
        },
    }
}

pub(crate) fn objectives_of(pop: &[Individual]) -> Vec<ObjectiveVector> {
    pop.iter().map(|i| i.objectives).collect()
}

/// Non-dominated members of the final population, deduplicated by phenotype
/// key, sorted by (latency, key).
pub(crate) fn reported_front(pop: &[Individual]) -> Vec<Individual> {
    let objs = objectives_of(pop);
    let mut front: Vec<Individual> = non_dominated_indices(&objs)
        .into_iter()
        .map(|i| pop[i].clone())
        .collect();
    front.sort_by(|a, b| {
        a.objectives
            .latency
            .partial_cmp(&b.objectives.latency)
            .unwrap()
            .then_with(|| a.genotype.phenotype_key().cmp(&b.genotype.phenotype_key()))
    });
    front.dedup_by_key(|i| i.genotype.phenotype_key());
    front
}

pub(crate) fn debug_check_front(pop: &[Individual]) {
    #[cfg(debug_assertions)]
    {
        let objs = objectives_of(pop);
        let front = non_dominated_indices(&objs);
        for (a, &i) in front.iter().enumerate() {
            for &j in front.iter().skip(a + 1) {
                debug_assert!(
                    !dominates(&objs[i], &objs[j]) && !dominates(&objs[j], &objs[i]),
                    "front members {i} and {j} are not mutually non-dominated"
                );
            }
        }
    }
    #[cfg(not(debug_assertions))]
    let _ = pop;
}
