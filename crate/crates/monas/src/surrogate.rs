//! Objective evaluation: accuracy predictor, latency lookup table and a
//! closed-form synthetic surrogate.
//!
//! All three evaluators map a genotype to an [`ObjectiveVector`] of
//! (top-1 error %, latency ms), both to be minimized. Accuracy is turned
//! into error exactly once, at the evaluator boundary; everything
//! downstream sees minimization objectives only.

use crate::genotype::{
    resolution_options, Architecture, Genotype, KERNEL_OPTIONS, NUM_LAYER_SLOTS, NUM_UNITS,
    RESOLUTION_COUNT, RESOLUTION_MIN, RESOLUTION_STEP, SLOTS_PER_UNIT, WIDTH_OPTIONS,
};
use std::collections::BTreeMap;
use thiserror::Error;

/// Minimization objectives of one candidate: top-1 error in percent and
/// latency in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveVector {
    pub top1_error: f64,
    pub latency: f64,
}

impl ObjectiveVector {
    pub fn new(top1_error: f64, latency: f64) -> Self {
        Self {
            top1_error,
            latency,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.top1_error.is_finite() && self.latency.is_finite()
    }
}

#[derive(Debug, Error)]
pub enum SurrogateError {
    #[error("feature width {found} does not match predictor input width {expected}")]
    FeatureWidthMismatch { expected: usize, found: usize },
    #[error("predictor layer {layer} has inconsistent shape: {reason}")]
    BadLayerShape { layer: usize, reason: String },
    #[error("predictor weights contain a non-finite value in layer {layer}")]
    NonFiniteWeight { layer: usize },
    #[error(
        "latency table is missing entry resolution={resolution} unit={unit} slot={slot} \
         kernel={kernel} width={width}"
    )]
    MissingLatencyEntry {
        resolution: u16,
        unit: usize,
        slot: usize,
        kernel: u8,
        width: u8,
    },
    #[error("latency table has no {kind} overhead for resolution {resolution}")]
    MissingOverhead { kind: &'static str, resolution: u16 },
    #[error("latency table value for {context} is negative")]
    NegativeLatency { context: String },
    #[error("evaluating genotype at index {index}: {source}")]
    AtIndex {
        index: usize,
        #[source]
        source: Box<SurrogateError>,
    },
}

/// Width of the feature encoding: 20 layer slots x (3 kernel + 3 width
/// one-hots) plus a 25-wide resolution one-hot.
pub const FEATURE_WIDTH: usize = NUM_LAYER_SLOTS * 6 + RESOLUTION_COUNT;

/// Fixed-width one-hot encoding of an architecture. Inactive layer slots
/// encode as all zeros, so phenotype-equal genotypes share a vector.
pub fn encode_features(arch: &Architecture) -> Vec<f64> {
    let mut features = vec![0.0; FEATURE_WIDTH];
    for (unit, slot, layer) in arch.active_layers() {
        let base = (unit * SLOTS_PER_UNIT + slot) * 6;
        let k = KERNEL_OPTIONS.iter().position(|&v| v == layer.kernel);
        let w = WIDTH_OPTIONS.iter().position(|&v| v == layer.width);
        if let (Some(k), Some(w)) = (k, w) {
            features[base + k] = 1.0;
            features[base + 3 + w] = 1.0;
        }
    }
    let r_index = ((arch.resolution - RESOLUTION_MIN) / RESOLUTION_STEP) as usize;
    features[NUM_LAYER_SLOTS * 6 + r_index] = 1.0;
    features
}

/// One affine layer, row-major weights of shape `output x input`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub input_width: usize,
    pub output_width: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    fn forward(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for row in 0..self.output_width {
            let w = &self.weights[row * self.input_width..(row + 1) * self.input_width];
            let mut acc = self.bias[row];
            for (wi, xi) in w.iter().zip(input) {
                acc += wi * xi;
            }
            out.push(acc);
        }
    }
}

/// Feedforward accuracy predictor: hidden layers with rectified-linear
/// activation followed by an affine scalar head that reads as accuracy in
/// percent.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyPredictor {
    layers: Vec<DenseLayer>,
}

/// Hidden widths used when building a full-size predictor.
pub const DEFAULT_HIDDEN: [usize; 3] = [400, 400, 400];

impl AccuracyPredictor {
    /// Validates that layer shapes chain from the input width down to a
    /// scalar output and that all parameters are finite.
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self, SurrogateError> {
        if layers.is_empty() {
            return Err(SurrogateError::BadLayerShape {
                layer: 0,
                reason: "predictor needs at least one layer".into(),
            });
        }
        for (i, layer) in layers.iter().enumerate() {
            if layer.weights.len() != layer.input_width * layer.output_width {
                return Err(SurrogateError::BadLayerShape {
                    layer: i,
                    reason: format!(
                        "{} weights for {}x{}",
                        layer.weights.len(),
                        layer.output_width,
                        layer.input_width
                    ),
                });
            }
            if layer.bias.len() != layer.output_width {
                return Err(SurrogateError::BadLayerShape {
                    layer: i,
                    reason: format!(
                        "{} bias entries for {} outputs",
                        layer.bias.len(),
                        layer.output_width
                    ),
                });
            }
            if i > 0 && layer.input_width != layers[i - 1].output_width {
                return Err(SurrogateError::BadLayerShape {
                    layer: i,
                    reason: format!(
                        "input width {} does not match previous output width {}",
                        layer.input_width,
                        layers[i - 1].output_width
                    ),
                });
            }
            if layer
                .weights
                .iter()
                .chain(layer.bias.iter())
                .any(|v| !v.is_finite())
            {
                return Err(SurrogateError::NonFiniteWeight { layer: i });
            }
        }
        if layers.last().unwrap().output_width != 1 {
            return Err(SurrogateError::BadLayerShape {
                layer: layers.len() - 1,
                reason: "final layer must output a scalar".into(),
            });
        }
        Ok(Self { layers })
    }

    /// Small random predictor, mostly useful for fixtures and smoke runs.
    pub fn random(input_width: usize, hidden: &[usize], rng: &mut impl rand::Rng) -> Self {
        let mut layers = Vec::new();
        let mut in_w = input_width;
        for &h in hidden {
            layers.push(DenseLayer {
                input_width: in_w,
                output_width: h,
                weights: (0..in_w * h).map(|_| rng.gen_range(-0.5..0.5)).collect(),
                bias: (0..h).map(|_| rng.gen_range(-0.5..0.5)).collect(),
            });
            in_w = h;
        }
        layers.push(DenseLayer {
            input_width: in_w,
            output_width: 1,
            weights: (0..in_w).map(|_| rng.gen_range(-0.5..0.5)).collect(),
            bias: vec![rng.gen_range(50.0..90.0)],
        });
        Self::new(layers).expect("random predictor shapes chain by construction")
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].input_width
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    /// Forward pass on the genotype's feature encoding; the scalar output is
    /// the predicted top-1 accuracy in percent.
    pub fn predict_accuracy(&self, g: &Genotype) -> Result<f64, SurrogateError> {
        let features = encode_features(&g.decode());
        if features.len() != self.input_width() {
            return Err(SurrogateError::FeatureWidthMismatch {
                expected: self.input_width(),
                found: features.len(),
            });
        }
        let mut current = features;
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            layer.forward(&current, &mut next);
            if i < last {
                for v in next.iter_mut() {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            std::mem::swap(&mut current, &mut next);
        }
        Ok(current[0])
    }
}

/// Per-hardware latency lookup table keyed by
/// (resolution, unit, slot, kernel, width), with fixed stem and head
/// overheads per resolution.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LatencyTable {
    entries: BTreeMap<(u16, u8, u8, u8, u8), f64>,
    stem: BTreeMap<u16, f64>,
    head: BTreeMap<u16, f64>,
}

impl LatencyTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set_entry(
        &mut self,
        resolution: u16,
        unit: u8,
        slot: u8,
        kernel: u8,
        width: u8,
        ms: f64,
    ) -> Result<(), SurrogateError> {
        if ms < 0.0 || !ms.is_finite() {
            return Err(SurrogateError::NegativeLatency {
                context: format!("{resolution} {unit} {slot} {kernel} {width}"),
            });
        }
        self.entries
            .insert((resolution, unit, slot, kernel, width), ms);
        Ok(())
    }

    pub fn set_stem(&mut self, resolution: u16, ms: f64) -> Result<(), SurrogateError> {
        if ms < 0.0 || !ms.is_finite() {
            return Err(SurrogateError::NegativeLatency {
                context: format!("stem {resolution}"),
            });
        }
        self.stem.insert(resolution, ms);
        Ok(())
    }

    pub fn set_head(&mut self, resolution: u16, ms: f64) -> Result<(), SurrogateError> {
        if ms < 0.0 || !ms.is_finite() {
            return Err(SurrogateError::NegativeLatency {
                context: format!("head {resolution}"),
            });
        }
        self.head.insert(resolution, ms);
        Ok(())
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(u16, u8, u8, u8, u8), &f64)> {
        self.entries.iter()
    }

    pub fn overheads(
        &self,
    ) -> (
        impl Iterator<Item = (&u16, &f64)>,
        impl Iterator<Item = (&u16, &f64)>,
    ) {
        (self.stem.iter(), self.head.iter())
    }

    /// Table with every key reachable by a valid genotype set to `ms` and
    /// zero overheads. Handy for additivity checks.
    pub fn uniform(ms: f64) -> Self {
        let mut table = Self::new();
        for r in resolution_options() {
            table.set_stem(r, 0.0).unwrap();
            table.set_head(r, 0.0).unwrap();
            for unit in 0..NUM_UNITS as u8 {
                for slot in 0..SLOTS_PER_UNIT as u8 {
                    for &k in &KERNEL_OPTIONS {
                        for &w in &WIDTH_OPTIONS {
                            table.set_entry(r, unit, slot, k, w, ms).unwrap();
                        }
                    }
                }
            }
        }
        table
    }

    /// Checks that every key reachable by a valid genotype is present.
    pub fn check_complete(&self) -> Result<(), SurrogateError> {
        for r in resolution_options() {
            if !self.stem.contains_key(&r) {
                return Err(SurrogateError::MissingOverhead {
                    kind: "stem",
                    resolution: r,
                });
            }
            if !self.head.contains_key(&r) {
                return Err(SurrogateError::MissingOverhead {
                    kind: "head",
                    resolution: r,
                });
            }
            for unit in 0..NUM_UNITS as u8 {
                for slot in 0..SLOTS_PER_UNIT as u8 {
                    for &k in &KERNEL_OPTIONS {
                        for &w in &WIDTH_OPTIONS {
                            if !self.entries.contains_key(&(r, unit, slot, k, w)) {
                                return Err(SurrogateError::MissingLatencyEntry {
                                    resolution: r,
                                    unit: unit as usize,
                                    slot: slot as usize,
                                    kernel: k,
                                    width: w,
                                });
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Stem and head overheads at the genotype's resolution plus the sum of
    /// the entries for all active layers.
    pub fn predict_latency(&self, g: &Genotype) -> Result<f64, SurrogateError> {
        let arch = g.decode();
        let r = arch.resolution;
        let stem = *self.stem.get(&r).ok_or(SurrogateError::MissingOverhead {
            kind: "stem",
            resolution: r,
        })?;
        let head = *self.head.get(&r).ok_or(SurrogateError::MissingOverhead {
            kind: "head",
            resolution: r,
        })?;
        let mut total = stem + head;
        for (unit, slot, layer) in arch.active_layers() {
            let key = (r, unit as u8, slot as u8, layer.kernel, layer.width);
            let ms = self
                .entries
                .get(&key)
                .ok_or(SurrogateError::MissingLatencyEntry {
                    resolution: r,
                    unit,
                    slot,
                    kernel: layer.kernel,
                    width: layer.width,
                })?;
            total += ms;
        }
        Ok(total)
    }
}

/// Closed-form surrogate over a scalar work score. Error is strictly
/// decreasing and latency strictly increasing in work, which guarantees a
/// conflicting-objective structure whose exact Pareto front is known by
/// enumeration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSurrogate {
    /// Error decay per unit of work: top-1 error = 100 * exp(-a * work).
    pub accuracy_scale: f64,
    /// Fixed latency offset in ms.
    pub latency_base: f64,
    /// Latency per unit of work: latency = base + c * work.
    pub latency_per_work: f64,
}

impl Default for SyntheticSurrogate {
    fn default() -> Self {
        Self {
            accuracy_scale: 0.001,
            latency_base: 2.0,
            latency_per_work: 0.01,
        }
    }
}

impl SyntheticSurrogate {
    pub fn new(accuracy_scale: f64, latency_base: f64, latency_per_work: f64) -> Self {
        Self {
            accuracy_scale,
            latency_base,
            latency_per_work,
        }
    }

    /// Work score: (r / 224)^2 times the sum of kernel^2 * width over the
    /// active layers.
    pub fn work_score(arch: &Architecture) -> f64 {
        let scale = (arch.resolution as f64 / 224.0).powi(2);
        let sum: f64 = arch
            .active_layers()
            .map(|(_, _, l)| (l.kernel as f64).powi(2) * l.width as f64)
            .sum();
        scale * sum
    }

    pub fn objectives(&self, g: &Genotype) -> ObjectiveVector {
        let work = Self::work_score(&g.decode());
        ObjectiveVector {
            top1_error: 100.0 * (-self.accuracy_scale * work).exp(),
            latency: self.latency_base + self.latency_per_work * work,
        }
    }
}

/// Anything that can turn genotypes into objective vectors. Evaluators are
/// immutable once built and safe to share across threads.
pub trait Evaluator: Sync {
    fn evaluate(&self, g: &Genotype) -> Result<ObjectiveVector, SurrogateError>;

    /// Stable identity string recorded in run manifests; a synthetic
    /// evaluator encodes its parameters, a file-backed one its digests.
    fn id(&self) -> String;

    /// (file name, sha256) pairs for file-backed evaluators.
    fn source_digests(&self) -> Vec<(String, String)> {
        Vec::new()
    }
}

impl Evaluator for SyntheticSurrogate {
    fn evaluate(&self, g: &Genotype) -> Result<ObjectiveVector, SurrogateError> {
        Ok(self.objectives(g))
    }

    fn id(&self) -> String {
        format!(
            "synthetic a={} b={} c={}",
            self.accuracy_scale, self.latency_base, self.latency_per_work
        )
    }
}

/// Accuracy predictor plus latency table behind the [`Evaluator`] contract.
/// Converts predicted accuracy to top-1 error here and nowhere else.
pub struct PredictorEvaluator {
    pub predictor: AccuracyPredictor,
    pub table: LatencyTable,
    digests: Vec<(String, String)>,
}

impl PredictorEvaluator {
    pub fn new(predictor: AccuracyPredictor, table: LatencyTable) -> Self {
        Self {
            predictor,
            table,
            digests: Vec::new(),
        }
    }

    pub fn with_digests(mut self, digests: Vec<(String, String)>) -> Self {
        self.digests = digests;
        self
    }
}

impl Evaluator for PredictorEvaluator {
    fn evaluate(&self, g: &Genotype) -> Result<ObjectiveVector, SurrogateError> {
        let accuracy = self.predictor.predict_accuracy(g)?;
        let latency = self.table.predict_latency(g)?;
        Ok(ObjectiveVector {
            top1_error: 100.0 - accuracy,
            latency,
        })
    }

    fn id(&self) -> String {
        if self.digests.is_empty() {
            "predictor+table".to_string()
        } else {
            let parts: Vec<String> = self
                .digests
                .iter()
                .map(|(name, digest)| format!("{name}:{digest}"))
                .collect();
            format!("files {}", parts.join(" "))
        }
    }

    fn source_digests(&self) -> Vec<(String, String)> {
        self.digests.clone()
    }
}

/// Evaluates a batch, preserving input order. With `threads > 1` the batch
/// is split across scoped threads; results are reassembled by index, so the
/// output is identical to the sequential one.
pub fn evaluate_population(
    evaluator: &dyn Evaluator,
    genotypes: &[Genotype],
    threads: usize,
) -> Result<Vec<ObjectiveVector>, SurrogateError> {
    let wrap = |index: usize, source: SurrogateError| SurrogateError::AtIndex {
        index,
        source: Box::new(source),
    };
    if threads <= 1 || genotypes.len() < 2 {
        return genotypes
            .iter()
            .enumerate()
            .map(|(i, g)| evaluator.evaluate(g).map_err(|e| wrap(i, e)))
            .collect();
    }
    let threads = threads.min(genotypes.len());
    let chunk = genotypes.len().div_ceil(threads);
    let results: Vec<Result<Vec<ObjectiveVector>, (usize, SurrogateError)>> =
        std::thread::scope(|scope| {
            let handles: Vec<_> = genotypes
                .chunks(chunk)
                .enumerate()
                .map(|(ci, part)| {
                    scope.spawn(move || {
                        part.iter()
                            .enumerate()
                            .map(|(i, g)| evaluator.evaluate(g).map_err(|e| (ci * chunk + i, e)))
                            .collect()
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
    let mut out = Vec::with_capacity(genotypes.len());
    for part in results {
        match part {
            Ok(values) => out.extend(values),
            Err((index, source)) => return Err(wrap(index, source)),
        }
    }
    Ok(out)
}
