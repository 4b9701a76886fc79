//! Committee experiments: hard and soft voting over per-model class
//! scores, committee latency under a sum or max budget, and non-dominated
//! committee fronts.
//!
//! Hard voting counts top-1 votes; ties cascade through the top-2 .. top-5
//! lists and finally fall back to the vote of the biggest tied member,
//! where "biggest" is measured by the per-model size score (the predicted
//! latency in this artifact).

use crate::moo::pareto_filter;
use crate::surrogate::ObjectiveVector;
use rand::Rng;
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Voting {
    Hard,
    Soft,
}

impl Voting {
    pub fn name(&self) -> &'static str {
        match self {
            Voting::Hard => "hard",
            Voting::Soft => "soft",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "hard" => Some(Voting::Hard),
            "soft" => Some(Voting::Soft),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatencyMode {
    /// Members evaluated one at a time on shared hardware.
    Sum,
    /// Members evaluated in parallel; the slowest sets the pace.
    Max,
}

impl LatencyMode {
    pub fn name(&self) -> &'static str {
        match self {
            LatencyMode::Sum => "sum",
            LatencyMode::Max => "max",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "sum" => Some(LatencyMode::Sum),
            "max" => Some(LatencyMode::Max),
            _ => None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnsembleError {
    #[error("committee has no members")]
    EmptyCommittee,
    #[error("committee size {size} outside the supported 2..=8 range")]
    BadCommitteeSize { size: usize },
    #[error("member index {index} appears more than once")]
    DuplicateMember { index: usize },
    #[error("member index {index} out of range for {n_models} models")]
    MemberOutOfRange { index: usize, n_models: usize },
    #[error("model {model} sample {sample}: malformed top-5 list: {reason}")]
    MalformedTopFive {
        model: usize,
        sample: usize,
        reason: String,
    },
    #[error("probability vector length {found} does not match {expected}")]
    ProbabilityLengthMismatch { expected: usize, found: usize },
    #[error("model {model} sample {sample}: probabilities sum to {sum}, not 1")]
    ProbabilitiesNotNormalized {
        model: usize,
        sample: usize,
        sum: f64,
    },
    #[error("sample {sample} label {label} out of range for {n_classes} classes")]
    LabelOutOfRange {
        sample: usize,
        label: u32,
        n_classes: usize,
    },
    #[error("soft voting needs stored probability vectors, this set holds top-5 lists")]
    SoftVotingNeedsProbabilities,
    #[error("hard voting needs at least 5 classes, this set has {n_classes}")]
    HardVotingNeedsFiveClasses { n_classes: usize },
    #[error(
        "cannot sample {requested} distinct committees of size {size} from {pool} models \
         (only {available} exist)"
    )]
    NotEnoughCombinations {
        pool: usize,
        size: usize,
        available: u128,
        requested: usize,
    },
    #[error("model {model} target accuracy {target}% is at or below chance level {chance}%")]
    InfeasibleTarget {
        model: usize,
        target: f64,
        chance: f64,
    },
    #[error("front is empty")]
    EmptyFront,
    #[error("front must be sorted by latency ascending")]
    UnsortedFront,
    #[error("prediction set shape mismatch: {0}")]
    ShapeMismatch(String),
}

/// Per-model metadata carried by a prediction set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelMeta {
    pub latency_ms: f64,
    /// Size proxy used by the biggest-model tie break; equals the latency
    /// unless a caller supplies something better.
    pub size_score: f64,
}

/// Stored per-(model, sample) outputs.
#[derive(Debug, Clone, PartialEq)]
pub enum PredictionData {
    /// Row-major `[model][sample][class]` probabilities.
    Probabilities(Vec<f64>),
    /// Row-major `[model][sample]` ranked top-5 lists of (class, score).
    TopFive(Vec<[(u32, f64); 5]>),
}

/// Class scores of a pool of models over a shared sample set, with ground
/// truth labels. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    pub n_models: usize,
    pub n_samples: usize,
    pub n_classes: usize,
    pub labels: Vec<u32>,
    pub models: Vec<ModelMeta>,
    data: PredictionData,
}

impl PredictionSet {
    pub fn from_probabilities(
        models: Vec<ModelMeta>,
        labels: Vec<u32>,
        n_classes: usize,
        probabilities: Vec<f64>,
    ) -> Result<Self, EnsembleError> {
        let n_models = models.len();
        let n_samples = labels.len();
        if probabilities.len() != n_models * n_samples * n_classes {
            return Err(EnsembleError::ShapeMismatch(format!(
                "{} probabilities for {n_models} models x {n_samples} samples x {n_classes} classes",
                probabilities.len()
            )));
        }
        for (sample, &label) in labels.iter().enumerate() {
            if label as usize >= n_classes {
                return Err(EnsembleError::LabelOutOfRange {
                    sample,
                    label,
                    n_classes,
                });
            }
        }
        for model in 0..n_models {
            for sample in 0..n_samples {
                let base = (model * n_samples + sample) * n_classes;
                let sum: f64 = probabilities[base..base + n_classes].iter().sum();
                if (sum - 1.0).abs() > 1e-6 {
                    return Err(EnsembleError::ProbabilitiesNotNormalized { model, sample, sum });
                }
            }
        }
        Ok(Self {
            n_models,
            n_samples,
            n_classes,
            labels,
            models,
            data: PredictionData::Probabilities(probabilities),
        })
    }

    pub fn from_top_five(
        models: Vec<ModelMeta>,
        labels: Vec<u32>,
        n_classes: usize,
        lists: Vec<[(u32, f64); 5]>,
    ) -> Result<Self, EnsembleError> {
        let n_models = models.len();
        let n_samples = labels.len();
        if n_classes < 5 {
            return Err(EnsembleError::HardVotingNeedsFiveClasses { n_classes });
        }
        if lists.len() != n_models * n_samples {
            return Err(EnsembleError::ShapeMismatch(format!(
                "{} top-5 lists for {n_models} models x {n_samples} samples",
                lists.len()
            )));
        }
        for (sample, &label) in labels.iter().enumerate() {
            if label as usize >= n_classes {
                return Err(EnsembleError::LabelOutOfRange {
                    sample,
                    label,
                    n_classes,
                });
            }
        }
        for model in 0..n_models {
            for sample in 0..n_samples {
                let list = &lists[model * n_samples + sample];
                validate_top_five(list, n_classes, model, sample)?;
            }
        }
        Ok(Self {
            n_models,
            n_samples,
            n_classes,
            labels,
            models,
            data: PredictionData::TopFive(lists),
        })
    }

    pub fn encoding_name(&self) -> &'static str {
        match self.data {
            PredictionData::Probabilities(_) => "prob",
            PredictionData::TopFive(_) => "top5",
        }
    }

    pub fn data(&self) -> &PredictionData {
        &self.data
    }

    /// Stored probability vector; `None` for top-5 sets.
    pub fn probabilities(&self, model: usize, sample: usize) -> Option<&[f64]> {
        match &self.data {
            PredictionData::Probabilities(p) => {
                let base = (model * self.n_samples + sample) * self.n_classes;
                Some(&p[base..base + self.n_classes])
            }
            PredictionData::TopFive(_) => None,
        }
    }

    /// Ranked top-5 list; derived from probabilities when necessary, with
    /// score ties broken by the lower class index.
    pub fn top_five(&self, model: usize, sample: usize) -> Result<[(u32, f64); 5], EnsembleError> {
        match &self.data {
            PredictionData::TopFive(lists) => Ok(lists[model * self.n_samples + sample]),
            PredictionData::Probabilities(_) => {
                if self.n_classes < 5 {
                    return Err(EnsembleError::HardVotingNeedsFiveClasses {
                        n_classes: self.n_classes,
                    });
                }
                let probs = self.probabilities(model, sample).unwrap();
                Ok(top_five_from_probabilities(probs))
            }
        }
    }

    /// Top-1 accuracy of a single model, in percent.
    pub fn model_accuracy(&self, model: usize) -> Result<f64, EnsembleError> {
        let mut correct = 0usize;
        for sample in 0..self.n_samples {
            let decision = match &self.data {
                PredictionData::Probabilities(_) => {
                    argmax_lowest_index(self.probabilities(model, sample).unwrap())
                }
                PredictionData::TopFive(_) => self.top_five(model, sample)?[0].0,
            };
            if decision == self.labels[sample] {
                correct += 1;
            }
        }
        Ok(100.0 * correct as f64 / self.n_samples as f64)
    }
}

fn validate_top_five(
    list: &[(u32, f64); 5],
    n_classes: usize,
    model: usize,
    sample: usize,
) -> Result<(), EnsembleError> {
    let mut seen = BTreeSet::new();
    for (rank, &(class, score)) in list.iter().enumerate() {
        if class as usize >= n_classes {
            return Err(EnsembleError::MalformedTopFive {
                model,
                sample,
                reason: format!("class {class} out of range"),
            });
        }
        if !seen.insert(class) {
            return Err(EnsembleError::MalformedTopFive {
                model,
                sample,
                reason: format!("class {class} repeated"),
            });
        }
        if !score.is_finite() {
            return Err(EnsembleError::MalformedTopFive {
                model,
                sample,
                reason: format!("non-finite score at rank {rank}"),
            });
        }
        if rank > 0 && score > list[rank - 1].1 {
            return Err(EnsembleError::MalformedTopFive {
                model,
                sample,
                reason: format!("scores increase at rank {rank}"),
            });
        }
    }
    Ok(())
}

fn argmax_lowest_index(values: &[f64]) -> u32 {
    let mut best = 0usize;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best as u32
}

/// Ranks classes by (score descending, class ascending) and keeps five.
pub fn top_five_from_probabilities(probs: &[f64]) -> [(u32, f64); 5] {
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[b].partial_cmp(&probs[a]).unwrap().then(a.cmp(&b)));
    let mut out = [(0u32, 0.0f64); 5];
    for (rank, &class) in order.iter().take(5).enumerate() {
        out[rank] = (class as u32, probs[class]);
    }
    out
}

/// Most-voted top-1 class with the tie-break cascade: on a top-1 tie among
/// class set T, re-count occurrences of T's classes within each member's
/// top-k list for k = 2..5; the first k with a unique leader decides. A tie
/// surviving top-5 goes to the top-1 vote of the tied member with the
/// largest size score.
pub fn hard_vote(lists: &[[(u32, f64); 5]], size_scores: &[f64]) -> Result<u32, EnsembleError> {
    if lists.is_empty() {
        return Err(EnsembleError::EmptyCommittee);
    }
    if lists.len() != size_scores.len() {
        return Err(EnsembleError::ShapeMismatch(format!(
            "{} top-5 lists but {} size scores",
            lists.len(),
            size_scores.len()
        )));
    }
    for (i, list) in lists.iter().enumerate() {
        validate_top_five(list, u32::MAX as usize, i, 0)?;
    }

    let mut counts: Vec<(u32, usize)> = Vec::new();
    for list in lists {
        let class = list[0].0;
        match counts.iter_mut().find(|(c, _)| *c == class) {
            Some((_, n)) => *n += 1,
            None => counts.push((class, 1)),
        }
    }
    let max = counts.iter().map(|&(_, n)| n).max().unwrap();
    let mut tied: Vec<u32> = counts
        .iter()
        .filter(|&&(_, n)| n == max)
        .map(|&(c, _)| c)
        .collect();
    tied.sort_unstable();
    if tied.len() == 1 {
        return Ok(tied[0]);
    }

    for k in 2..=5usize {
        let occurrences: Vec<(u32, usize)> = tied
            .iter()
            .map(|&class| {
                let n = lists
                    .iter()
                    .filter(|list| list[..k].iter().any(|&(c, _)| c == class))
                    .count();
                (class, n)
            })
            .collect();
        let best = occurrences.iter().map(|&(_, n)| n).max().unwrap();
        let leaders: Vec<u32> = occurrences
            .iter()
            .filter(|&&(_, n)| n == best)
            .map(|&(c, _)| c)
            .collect();
        if leaders.len() == 1 {
            return Ok(leaders[0]);
        }
    }

    // biggest tied voter decides; score ties keep the earliest member
    let mut biggest: Option<usize> = None;
    for (i, list) in lists.iter().enumerate() {
        if tied.contains(&list[0].0) {
            biggest = match biggest {
                None => Some(i),
                Some(b) if size_scores[i] > size_scores[b] => Some(i),
                keep => keep,
            };
        }
    }
    Ok(lists[biggest.expect("tied classes always have voters")][0].0)
}

/// Argmax of the elementwise sum of the members' probability vectors;
/// exact ties go to the lowest class index.
pub fn soft_vote(probs: &[&[f64]]) -> Result<u32, EnsembleError> {
    if probs.is_empty() {
        return Err(EnsembleError::EmptyCommittee);
    }
    let expected = probs[0].len();
    let mut sums = vec![0.0f64; expected];
    for p in probs {
        if p.len() != expected {
            return Err(EnsembleError::ProbabilityLengthMismatch {
                expected,
                found: p.len(),
            });
        }
        for (acc, v) in sums.iter_mut().zip(p.iter()) {
            *acc += v;
        }
    }
    Ok(argmax_lowest_index(&sums))
}

/// Committee latency under the chosen budget model.
pub fn ensemble_latency(latencies: &[f64], mode: LatencyMode) -> f64 {
    match mode {
        LatencyMode::Sum => latencies.iter().sum(),
        LatencyMode::Max => latencies.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// A committee: distinct member indices plus its voting scheme and latency
/// budget model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnsembleSpec {
    pub members: Vec<usize>,
    pub voting: Voting,
    pub latency_mode: LatencyMode,
}

impl EnsembleSpec {
    /// Validated committee of 2..=8 distinct members (stored sorted).
    pub fn new(
        mut members: Vec<usize>,
        voting: Voting,
        latency_mode: LatencyMode,
    ) -> Result<Self, EnsembleError> {
        if members.is_empty() {
            return Err(EnsembleError::EmptyCommittee);
        }
        if !(2..=8).contains(&members.len()) {
            return Err(EnsembleError::BadCommitteeSize {
                size: members.len(),
            });
        }
        members.sort_unstable();
        for pair in members.windows(2) {
            if pair[0] == pair[1] {
                return Err(EnsembleError::DuplicateMember { index: pair[0] });
            }
        }
        Ok(Self {
            members,
            voting,
            latency_mode,
        })
    }

    /// Bypasses the size and distinctness checks; test fixtures only.
    #[cfg(test)]
    pub(crate) fn unchecked(
        members: Vec<usize>,
        voting: Voting,
        latency_mode: LatencyMode,
    ) -> Self {
        Self {
            members,
            voting,
            latency_mode,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub spec: EnsembleSpec,
    pub accuracy_pct: f64,
    pub latency_ms: f64,
}

/// Scores one committee over the whole sample set.
pub fn evaluate_ensemble(
    spec: &EnsembleSpec,
    preds: &PredictionSet,
) -> Result<EnsembleResult, EnsembleError> {
    if spec.members.is_empty() {
        return Err(EnsembleError::EmptyCommittee);
    }
    for &m in &spec.members {
        if m >= preds.n_models {
            return Err(EnsembleError::MemberOutOfRange {
                index: m,
                n_models: preds.n_models,
            });
        }
    }
    let mut correct = 0usize;
    match spec.voting {
        Voting::Hard => {
            let sizes: Vec<f64> = spec
                .members
                .iter()
                .map(|&m| preds.models[m].size_score)
                .collect();
            for sample in 0..preds.n_samples {
                let lists: Vec<[(u32, f64); 5]> = spec
                    .members
                    .iter()
                    .map(|&m| preds.top_five(m, sample))
                    .collect::<Result<_, _>>()?;
                if hard_vote(&lists, &sizes)? == preds.labels[sample] {
                    correct += 1;
                }
            }
        }
        Voting::Soft => {
            for sample in 0..preds.n_samples {
                let vectors: Vec<&[f64]> = spec
                    .members
                    .iter()
                    .map(|&m| {
                        preds
                            .probabilities(m, sample)
                            .ok_or(EnsembleError::SoftVotingNeedsProbabilities)
                    })
                    .collect::<Result<_, _>>()?;
                if soft_vote(&vectors)? == preds.labels[sample] {
                    correct += 1;
                }
            }
        }
    }
    let latencies: Vec<f64> = spec
        .members
        .iter()
        .map(|&m| preds.models[m].latency_ms)
        .collect();
    Ok(EnsembleResult {
        spec: spec.clone(),
        accuracy_pct: 100.0 * correct as f64 / preds.n_samples as f64,
        latency_ms: ensemble_latency(&latencies, spec.latency_mode),
    })
}

/// Number of distinct committees, saturating at `u128::MAX`.
pub fn combination_count(pool: usize, size: usize) -> u128 {
    if size > pool {
        return 0;
    }
    let size = size.min(pool - size);
    let mut result: u128 = 1;
    for k in 0..size {
        result = match result.checked_mul((pool - k) as u128) {
            Some(v) => v / (k as u128 + 1),
            None => return u128::MAX,
        };
    }
    result
}

/// Uniformly samples `count` distinct unordered member sets.
pub fn sample_combinations(
    pool_size: usize,
    ensemble_size: usize,
    count: usize,
    rng: &mut impl Rng,
) -> Result<Vec<Vec<usize>>, EnsembleError> {
    let available = combination_count(pool_size, ensemble_size);
    if available < count as u128 {
        return Err(EnsembleError::NotEnoughCombinations {
            pool: pool_size,
            size: ensemble_size,
            available,
            requested: count,
        });
    }
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        // sample one set without replacement
        let mut members: Vec<usize> = Vec::with_capacity(ensemble_size);
        while members.len() < ensemble_size {
            let m = rng.gen_range(0..pool_size);
            if !members.contains(&m) {
                members.push(m);
            }
        }
        members.sort_unstable();
        if seen.insert(members.clone()) {
            out.push(members);
        }
    }
    Ok(out)
}

/// Latency thresholds of the baseline sweep, 15 ms to 55 ms in 5 ms steps.
pub const BASELINE_THRESHOLDS: [f64; 9] = [15.0, 20.0, 25.0, 30.0, 35.0, 40.0, 45.0, 50.0, 55.0];

/// For each threshold, the index of the highest-latency front member at or
/// below it ("immediately before" reads inclusively). `None` marks a
/// threshold no member qualifies for.
pub fn mimic_ofa_subset(
    latencies_sorted: &[f64],
    thresholds: &[f64],
) -> Result<Vec<Option<usize>>, EnsembleError> {
    if latencies_sorted.is_empty() {
        return Err(EnsembleError::EmptyFront);
    }
    if latencies_sorted.windows(2).any(|w| w[0] > w[1]) {
        return Err(EnsembleError::UnsortedFront);
    }
    Ok(thresholds
        .iter()
        .map(|&t| latencies_sorted.iter().rposition(|&l| l <= t))
        .collect())
}

/// Target accuracy and latency of one synthetic pool member.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelTarget {
    pub accuracy_pct: f64,
    pub latency_ms: f64,
}

/// Generates a probability-encoded prediction set whose models hit their
/// target accuracies in expectation.
///
/// A shared per-sample difficulty draw controls inter-model correlation:
/// with probability `rho` a model reuses the shared draw, otherwise it
/// draws privately. At `rho = 1` same-target models produce identical
/// outputs; at `rho = 0` models err independently. The per-sample
/// confusable class is shared, so a majority of correct members always
/// wins a hard vote.
pub fn synth_predictions(
    targets: &[ModelTarget],
    n_samples: usize,
    n_classes: usize,
    rho: f64,
    rng: &mut impl Rng,
) -> Result<PredictionSet, EnsembleError> {
    if n_classes < 5 {
        return Err(EnsembleError::HardVotingNeedsFiveClasses { n_classes });
    }
    let chance = 100.0 / n_classes as f64;
    for (model, t) in targets.iter().enumerate() {
        if !(t.accuracy_pct > chance && t.accuracy_pct < 100.0) {
            return Err(EnsembleError::InfeasibleTarget {
                model,
                target: t.accuracy_pct,
                chance,
            });
        }
    }

    let n_models = targets.len();
    let mut labels = Vec::with_capacity(n_samples);
    let mut difficulty = Vec::with_capacity(n_samples);
    let mut confusable = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let label = rng.gen_range(0..n_classes as u32);
        labels.push(label);
        difficulty.push(rng.gen::<f64>());
        let wrong = loop {
            let w = rng.gen_range(0..n_classes as u32);
            if w != label {
                break w;
            }
        };
        confusable.push(wrong);
    }

    let mut probabilities = vec![0.0f64; n_models * n_samples * n_classes];
    for (model, target) in targets.iter().enumerate() {
        let threshold = target.accuracy_pct / 100.0;
        for sample in 0..n_samples {
            let z = if rng.gen::<f64>() < rho {
                difficulty[sample]
            } else {
                rng.gen::<f64>()
            };
            let correct = z < threshold;
            let chosen = if correct {
                labels[sample]
            } else {
                confusable[sample]
            };
            let runner_up = if correct {
                confusable[sample]
            } else {
                labels[sample]
            };
            // confident when the draw is far below the threshold
            let top_mass = 0.5 + 0.4 * (1.0 - z);
            let share = (1.0 - top_mass) / n_classes as f64;
            let base = (model * n_samples + sample) * n_classes;
            let row = &mut probabilities[base..base + n_classes];
            for v in row.iter_mut() {
                *v = share;
            }
            row[runner_up as usize] = 2.0 * share;
            // the chosen class takes whatever keeps the row at exactly 1
            let sum_others: f64 = row
                .iter()
                .enumerate()
                .filter(|&(c, _)| c != chosen as usize)
                .map(|(_, &v)| v)
                .sum();
            row[chosen as usize] = 1.0 - sum_others;
        }
    }

    let models: Vec<ModelMeta> = targets
        .iter()
        .map(|t| ModelMeta {
            latency_ms: t.latency_ms,
            size_score: t.latency_ms,
        })
        .collect();
    PredictionSet::from_probabilities(models, labels, n_classes, probabilities)
}

/// One (voting, latency mode) slice of the experiment grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceOutcome {
    pub voting: Voting,
    pub mode: LatencyMode,
    pub results: Vec<EnsembleResult>,
    /// Indices into `results` forming the non-dominated committee front in
    /// (error %, latency ms).
    pub front: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Inclusive committee-size range.
    pub sizes: (usize, usize),
    /// Distinct committees sampled per size.
    pub count: usize,
    pub modes: Vec<LatencyMode>,
    pub votings: Vec<Voting>,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            sizes: (2, 8),
            count: 43,
            modes: vec![LatencyMode::Sum, LatencyMode::Max],
            votings: vec![Voting::Hard, Voting::Soft],
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub slices: Vec<SliceOutcome>,
    /// Sizes whose combination sampling failed, with the reason; other
    /// sizes still ran.
    pub skipped: Vec<(usize, String)>,
}

/// Full factorial over sizes x sampled committees x latency modes x voting
/// schemes. Committees are sampled once per size and shared across slices.
pub fn ensemble_experiment(
    preds: &PredictionSet,
    cfg: &ExperimentConfig,
) -> Result<ExperimentOutcome, EnsembleError> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut combos_by_size: Vec<(usize, Vec<Vec<usize>>)> = Vec::new();
    let mut skipped = Vec::new();
    for size in cfg.sizes.0..=cfg.sizes.1 {
        match sample_combinations(preds.n_models, size, cfg.count, &mut rng) {
            Ok(combos) => combos_by_size.push((size, combos)),
            Err(e) => skipped.push((size, e.to_string())),
        }
    }

    let mut slices = Vec::new();
    for &voting in &cfg.votings {
        for &mode in &cfg.modes {
            let mut results = Vec::new();
            for (_, combos) in &combos_by_size {
                for members in combos {
                    let spec = EnsembleSpec::new(members.clone(), voting, mode)?;
                    results.push(evaluate_ensemble(&spec, preds)?);
                }
            }
            let points: Vec<ObjectiveVector> = results
                .iter()
                .map(|r| ObjectiveVector::new(100.0 - r.accuracy_pct, r.latency_ms))
                .collect();
            let front = pareto_filter(&points);
            slices.push(SliceOutcome {
                voting,
                mode,
                results,
                front,
            });
        }
    }
    Ok(ExperimentOutcome { slices, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn list(classes: [u32; 5]) -> [(u32, f64); 5] {
        let mut out = [(0u32, 0.0f64); 5];
        for (rank, &c) in classes.iter().enumerate() {
            out[rank] = (c, 0.5 - 0.1 * rank as f64);
        }
        out
    }

    #[test]
    fn unanimous_hard_vote() {
        let lists = [list([9, 1, 2, 3, 4]); 3];
        assert_eq!(hard_vote(&lists, &[1.0, 1.0, 1.0]).unwrap(), 9);
    }

    #[test]
    fn hard_vote_tie_resolved_at_top2() {
        // Three distinct top-1 votes; class 1 sits in every top-2 list,
        // class 2 in two of them, class 3 in one.
        let lists = [
            list([1, 2, 5, 6, 7]),
            list([2, 1, 5, 6, 7]),
            list([3, 1, 5, 6, 7]),
        ];
        assert_eq!(hard_vote(&lists, &[1.0, 1.0, 1.0]).unwrap(), 1);
    }

    #[test]
    fn hard_vote_tie_resolved_at_top5() {
        // Classes 1 and 2 stay tied through top-4: both appear in both
        // lists up to rank 4... only rank 5 separates them (class 1 shows
        // up in member B's rank-5 slot, class 2 never reaches member A).
        let lists = [
            list([1, 9, 8, 7, 6]), // votes 1; never lists 2
            list([2, 9, 8, 7, 1]), // votes 2; lists 1 at rank 5
        ];
        // counts at k=2..4: {1: 1, 2: 1}; at k=5: {1: 2, 2: 1}
        assert_eq!(hard_vote(&lists, &[1.0, 1.0]).unwrap(), 1);
    }

    #[test]
    fn hard_vote_falls_back_to_biggest_model() {
        // Perfectly symmetric lists: classes 1 and 2 appear in both top-5
        // sets at every depth, so the cascade never separates them and the
        // bigger member's vote wins.
        let lists = [list([1, 2, 7, 8, 9]), list([2, 1, 7, 8, 9])];
        assert_eq!(hard_vote(&lists, &[3.0, 5.0]).unwrap(), 2);
        assert_eq!(hard_vote(&lists, &[5.0, 3.0]).unwrap(), 1);
        // equal sizes keep the earliest tied voter
        assert_eq!(hard_vote(&lists, &[4.0, 4.0]).unwrap(), 1);
    }

    #[test]
    fn hard_vote_rejects_malformed_lists() {
        let mut bad = list([1, 2, 3, 4, 5]);
        bad[3].0 = 2; // repeated class
        assert!(matches!(
            hard_vote(&[bad], &[1.0]),
            Err(EnsembleError::MalformedTopFive { .. })
        ));
    }

    #[test]
    fn soft_vote_examples() {
        assert_eq!(soft_vote(&[&[0.2, 0.5, 0.3]]).unwrap(), 1);
        // [0.6, 0.4] + [0.1, 0.9] = [0.7, 1.3]
        assert_eq!(soft_vote(&[&[0.6, 0.4], &[0.1, 0.9]]).unwrap(), 1);
        // exact tie goes to the lowest class index
        assert_eq!(soft_vote(&[&[0.5, 0.5]]).unwrap(), 0);
        assert!(matches!(
            soft_vote(&[&[0.6, 0.4], &[1.0]]),
            Err(EnsembleError::ProbabilityLengthMismatch { .. })
        ));
    }

    #[test]
    fn latency_modes() {
        assert_eq!(
            ensemble_latency(&[10.0, 20.0, 30.0], LatencyMode::Sum),
            60.0
        );
        assert_eq!(
            ensemble_latency(&[10.0, 20.0, 30.0], LatencyMode::Max),
            30.0
        );
        assert_eq!(ensemble_latency(&[7.5], LatencyMode::Sum), 7.5);
        assert_eq!(ensemble_latency(&[7.5], LatencyMode::Max), 7.5);
    }

    fn tiny_set() -> PredictionSet {
        // 2 models, 3 samples, 5 classes; model 0 always right, model 1
        // always votes class 4. Masses are dyadic (13/16 and 3/64) so the
        // rows sum to exactly 1 and vote ties are exact.
        let labels = vec![0, 1, 2];
        let models = vec![
            ModelMeta {
                latency_ms: 5.0,
                size_score: 5.0,
            },
            ModelMeta {
                latency_ms: 9.0,
                size_score: 9.0,
            },
        ];
        let mut probs = Vec::new();
        for label in &labels {
            let mut row = vec![0.046875; 5];
            row[*label as usize] = 0.8125;
            probs.extend(row);
        }
        for _ in &labels {
            let mut row = vec![0.046875; 5];
            row[4] = 0.8125;
            probs.extend(row);
        }
        PredictionSet::from_probabilities(models, labels, 5, probs).unwrap()
    }

    #[test]
    fn duplicated_single_model_committee_reproduces_its_accuracy() {
        let preds = tiny_set();
        let solo = preds.model_accuracy(0).unwrap();
        for voting in [Voting::Hard, Voting::Soft] {
            let spec = EnsembleSpec::unchecked(vec![0, 0, 0], voting, LatencyMode::Max);
            let result = evaluate_ensemble(&spec, &preds).unwrap();
            assert_eq!(result.accuracy_pct, solo);
        }
    }

    #[test]
    fn two_of_three_majority_is_always_right() {
        // Models 0 and 1 always correct, model 2 always wrong: hard vote
        // must score 100%.
        let labels: Vec<u32> = (0..40).map(|i| i % 5).collect();
        let models = vec![
            ModelMeta {
                latency_ms: 1.0,
                size_score: 1.0,
            },
            ModelMeta {
                latency_ms: 2.0,
                size_score: 2.0,
            },
            ModelMeta {
                latency_ms: 9.0,
                size_score: 9.0,
            },
        ];
        let mut probs = Vec::new();
        for model in 0..3 {
            for &label in &labels {
                let chosen = if model < 2 { label } else { (label + 1) % 5 };
                let mut row = vec![0.04; 5];
                row[chosen as usize] = 0.84;
                probs.extend(row);
            }
        }
        let preds = PredictionSet::from_probabilities(models, labels, 5, probs).unwrap();
        let spec = EnsembleSpec::new(vec![0, 1, 2], Voting::Hard, LatencyMode::Sum).unwrap();
        let result = evaluate_ensemble(&spec, &preds).unwrap();
        assert_eq!(result.accuracy_pct, 100.0);
        assert_eq!(result.latency_ms, 12.0);
    }

    #[test]
    fn soft_vote_committee_matches_hand_computation() {
        let preds = tiny_set();
        // sample 0: sums are class0 = 0.8125 + 0.046875 and
        // class4 = 0.046875 + 0.8125 -> exact tie, lowest index wins,
        // which is the true label 0; likewise for the other samples.
        let spec = EnsembleSpec::unchecked(vec![0, 1], Voting::Soft, LatencyMode::Sum);
        let result = evaluate_ensemble(&spec, &preds).unwrap();
        assert_eq!(result.accuracy_pct, 100.0);
        assert_eq!(result.latency_ms, 14.0);
    }

    #[test]
    fn spec_validation() {
        assert!(matches!(
            EnsembleSpec::new(vec![0], Voting::Hard, LatencyMode::Sum),
            Err(EnsembleError::BadCommitteeSize { size: 1 })
        ));
        assert!(matches!(
            EnsembleSpec::new(vec![0, 0], Voting::Hard, LatencyMode::Sum),
            Err(EnsembleError::DuplicateMember { index: 0 })
        ));
        let spec = EnsembleSpec::new(vec![3, 1], Voting::Hard, LatencyMode::Sum).unwrap();
        assert_eq!(spec.members, vec![1, 3]);
    }

    #[test]
    fn combination_sampling_counts_and_errors() {
        let combos = sample_combinations(100, 2, 43, &mut rng(1)).unwrap();
        assert_eq!(combos.len(), 43);
        let distinct: BTreeSet<_> = combos.iter().cloned().collect();
        assert_eq!(distinct.len(), 43);

        // C(9, 8) = 9 < 43
        match sample_combinations(9, 8, 43, &mut rng(2)) {
            Err(EnsembleError::NotEnoughCombinations { available: 9, .. }) => {}
            other => panic!("expected exhaustion error, got {other:?}"),
        }

        // identical seeds agree
        assert_eq!(
            sample_combinations(50, 4, 43, &mut rng(3)).unwrap(),
            sample_combinations(50, 4, 43, &mut rng(3)).unwrap()
        );
    }

    #[test]
    fn combination_count_oracle() {
        assert_eq!(combination_count(9, 8), 9);
        assert_eq!(combination_count(100, 2), 4950);
        assert_eq!(combination_count(5, 6), 0);
        assert_eq!(combination_count(8, 4), 70);
    }

    #[test]
    fn mimic_subset_examples() {
        let got = mimic_ofa_subset(&[12.0, 14.0, 18.0, 22.0], &[15.0, 20.0]).unwrap();
        assert_eq!(got, vec![Some(1), Some(2)]);

        // all latencies above every threshold
        let none = mimic_ofa_subset(&[60.0, 65.0], &BASELINE_THRESHOLDS).unwrap();
        assert!(none.iter().all(Option::is_none));

        // threshold exactly equal to a member's latency selects it
        let inclusive = mimic_ofa_subset(&[10.0, 15.0, 21.0], &[15.0]).unwrap();
        assert_eq!(inclusive, vec![Some(1)]);

        assert!(matches!(
            mimic_ofa_subset(&[], &[15.0]),
            Err(EnsembleError::EmptyFront)
        ));
        assert!(matches!(
            mimic_ofa_subset(&[5.0, 3.0], &[15.0]),
            Err(EnsembleError::UnsortedFront)
        ));
    }

    #[test]
    fn synthetic_targets_are_hit() {
        let targets = vec![ModelTarget {
            accuracy_pct: 75.0,
            latency_ms: 10.0,
        }];
        let preds = synth_predictions(&targets, 10_000, 10, 0.5, &mut rng(4)).unwrap();
        let acc = preds.model_accuracy(0).unwrap();
        assert!((74.0..=76.0).contains(&acc), "accuracy {acc}");
    }

    #[test]
    fn perfectly_correlated_members_vote_identically() {
        let targets = vec![
            ModelTarget {
                accuracy_pct: 70.0,
                latency_ms: 5.0
            };
            4
        ];
        let preds = synth_predictions(&targets, 2_000, 8, 1.0, &mut rng(5)).unwrap();
        let solo = preds.model_accuracy(0).unwrap();
        for model in 1..4 {
            assert_eq!(preds.model_accuracy(model).unwrap(), solo);
        }
        for voting in [Voting::Hard, Voting::Soft] {
            let spec = EnsembleSpec::new(vec![0, 1, 2, 3], voting, LatencyMode::Max).unwrap();
            assert_eq!(evaluate_ensemble(&spec, &preds).unwrap().accuracy_pct, solo);
        }
    }

    #[test]
    fn independent_majority_matches_binomial_formula() {
        // Three independent 80% models: majority-correct probability is
        // 0.8^3 + 3 * 0.8^2 * 0.2 = 89.6%.
        let targets = vec![
            ModelTarget {
                accuracy_pct: 80.0,
                latency_ms: 5.0
            };
            3
        ];
        let preds = synth_predictions(&targets, 10_000, 10, 0.0, &mut rng(6)).unwrap();
        let spec = EnsembleSpec::new(vec![0, 1, 2], Voting::Hard, LatencyMode::Max).unwrap();
        let acc = evaluate_ensemble(&spec, &preds).unwrap().accuracy_pct;
        assert!((acc - 89.6).abs() <= 1.5, "majority accuracy {acc}");
    }

    #[test]
    fn infeasible_targets_are_rejected() {
        let targets = vec![ModelTarget {
            accuracy_pct: 8.0,
            latency_ms: 5.0,
        }];
        assert!(matches!(
            synth_predictions(&targets, 100, 10, 0.5, &mut rng(7)),
            Err(EnsembleError::InfeasibleTarget { .. })
        ));
    }

    #[test]
    fn experiment_grid_has_301_rows_per_slice() {
        let targets: Vec<ModelTarget> = (0..20)
            .map(|i| ModelTarget {
                accuracy_pct: 40.0 + 2.0 * i as f64,
                latency_ms: 5.0 + i as f64,
            })
            .collect();
        let preds = synth_predictions(&targets, 200, 10, 0.3, &mut rng(8)).unwrap();
        let outcome = ensemble_experiment(&preds, &ExperimentConfig::default()).unwrap();
        assert_eq!(outcome.slices.len(), 4);
        assert!(outcome.skipped.is_empty());
        for slice in &outcome.slices {
            assert_eq!(slice.results.len(), 7 * 43);
            // front members are pairwise non-dominated
            for &i in &slice.front {
                for &j in &slice.front {
                    if i == j {
                        continue;
                    }
                    let a = ObjectiveVector::new(
                        100.0 - slice.results[i].accuracy_pct,
                        slice.results[i].latency_ms,
                    );
                    let b = ObjectiveVector::new(
                        100.0 - slice.results[j].accuracy_pct,
                        slice.results[j].latency_ms,
                    );
                    assert!(!crate::moo::dominates(&a, &b) || a == b);
                }
            }
        }
    }

    #[test]
    fn experiment_skips_undersized_pools_without_aborting() {
        let targets: Vec<ModelTarget> = (0..9)
            .map(|i| ModelTarget {
                accuracy_pct: 50.0 + 3.0 * i as f64,
                latency_ms: 5.0 + i as f64,
            })
            .collect();
        let preds = synth_predictions(&targets, 100, 10, 0.3, &mut rng(9)).unwrap();
        let outcome = ensemble_experiment(&preds, &ExperimentConfig::default()).unwrap();
        // C(9,2) = 36, C(9,7) = 36 and C(9,8) = 9 all fall short of 43;
        // sizes 3..=6 still run.
        let skipped_sizes: Vec<usize> = outcome.skipped.iter().map(|(s, _)| *s).collect();
        assert_eq!(skipped_sizes, vec![2, 7, 8]);
        for slice in &outcome.slices {
            assert_eq!(slice.results.len(), 4 * 43);
        }
    }

    #[test]
    fn identical_pool_members_collapse_the_front() {
        let targets = vec![
            ModelTarget {
                accuracy_pct: 70.0,
                latency_ms: 5.0
            };
            12
        ];
        let preds = synth_predictions(&targets, 300, 10, 1.0, &mut rng(10)).unwrap();
        let cfg = ExperimentConfig {
            sizes: (2, 4),
            count: 10,
            ..ExperimentConfig::default()
        };
        let outcome = ensemble_experiment(&preds, &cfg).unwrap();
        for slice in &outcome.slices {
            match slice.mode {
                // equal member latencies: max-mode committees all coincide
                LatencyMode::Max => assert_eq!(slice.front.len(), 1),
                // sum-mode committees differ only by size; the smallest wins
                LatencyMode::Sum => assert_eq!(slice.front.len(), 1),
            }
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;
        use rand::Rng;

        proptest! {
            #[test]
            fn soft_vote_invariant_under_common_scaling(
                seed in any::<u64>(),
                scale in 0.1f64..10.0,
                members in 1usize..6,
            ) {
                let mut r = rng(seed);
                let vectors: Vec<Vec<f64>> = (0..members)
                    .map(|_| {
                        let raw: Vec<f64> = (0..7).map(|_| r.gen_range(0.0..1.0)).collect();
                        let sum: f64 = raw.iter().sum();
                        raw.iter().map(|v| v / sum).collect()
                    })
                    .collect();
                let plain: Vec<&[f64]> = vectors.iter().map(|v| v.as_slice()).collect();
                let scaled: Vec<Vec<f64>> = vectors
                    .iter()
                    .map(|v| v.iter().map(|x| x * scale).collect())
                    .collect();
                let scaled_refs: Vec<&[f64]> = scaled.iter().map(|v| v.as_slice()).collect();
                prop_assert_eq!(soft_vote(&plain).unwrap(), soft_vote(&scaled_refs).unwrap());
            }

            #[test]
            fn sum_latency_dominates_max(seed in any::<u64>(), members in 1usize..8) {
                let mut r = rng(seed);
                let lat: Vec<f64> = (0..members).map(|_| r.gen_range(0.5..50.0)).collect();
                let sum = ensemble_latency(&lat, LatencyMode::Sum);
                let max = ensemble_latency(&lat, LatencyMode::Max);
                prop_assert!(sum >= max);
                if members == 1 {
                    prop_assert!((sum - max).abs() < 1e-12);
                }
            }

            #[test]
            fn single_member_hard_vote_returns_its_top1(seed in any::<u64>()) {
                let mut r = rng(seed);
                let mut classes: Vec<u32> = (0..9).collect();
                // simple seeded shuffle
                for i in (1..classes.len()).rev() {
                    let j = r.gen_range(0..=i);
                    classes.swap(i, j);
                }
                let mut list = [(0u32, 0.0f64); 5];
                for k in 0..5 {
                    list[k] = (classes[k], 1.0 - 0.1 * k as f64);
                }
                prop_assert_eq!(hard_vote(&[list], &[1.0]).unwrap(), list[0].0);
            }
        }
    }
}
