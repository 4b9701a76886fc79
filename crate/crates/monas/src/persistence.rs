//! On-disk representation of runs, fronts, evaluator files and prediction
//! sets, plus CSV exports.
//!
//! Formats are line-oriented structured text, documented byte-exact in
//! `docs/FORMATS.md`. Numbers are written with Rust's shortest round-trip
//! decimal form, so identical values load back bit-identical and repeated
//! exports of the same data are byte-identical. Every file opens with a
//! `monas-<kind> <version>` line; readers reject unknown versions.

use crate::ensemble::{ExperimentOutcome, ModelMeta, PredictionData, PredictionSet};
use crate::genotype::{Genotype, OperatorConfig, PhenotypeKey, SubSpace};
use crate::moo::{Algorithm, Individual, SearchConfig, SearchResult};
use crate::surrogate::{
    AccuracyPredictor, DenseLayer, Evaluator, LatencyTable, ObjectiveVector, PredictorEvaluator,
    SyntheticSurrogate,
};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const RUN_FORMAT: &str = "monas-run";
pub const PREDICTOR_FORMAT: &str = "monas-predictor";
pub const LATENCY_FORMAT: &str = "monas-latency";
pub const PREDS_FORMAT: &str = "monas-preds";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: expected `{expected} {version}` header, found `{found}`")]
    VersionMismatch {
        path: PathBuf,
        expected: &'static str,
        version: u32,
        found: String,
    },
    #[error("{path}:{line}: malformed record: {reason}")]
    Malformed {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("digest mismatch for {file}: recorded {recorded}, found {actual}")]
    DigestMismatch {
        file: String,
        recorded: String,
        actual: String,
    },
    #[error("cannot rebuild evaluator `{id}`: {reason}")]
    EvaluatorUnavailable { id: String, reason: String },
    #[error(transparent)]
    Invalid(#[from] Box<dyn std::error::Error + Send + Sync>),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PersistError + '_ {
    move |source| PersistError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Everything needed to re-run a search bit-identically.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub tool_version: String,
    pub config: SearchConfig,
    pub evaluator_id: String,
    /// `role=path -> sha256` pairs for file-backed evaluators.
    pub evaluator_digests: Vec<(String, String)>,
    /// Taken from `MONAS_RUN_TIMESTAMP` when set; absent otherwise so that
    /// identical invocations produce identical bytes.
    pub timestamp: Option<String>,
}

impl RunManifest {
    pub fn for_run(cfg: &SearchConfig, evaluator: &dyn Evaluator) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config: cfg.clone(),
            evaluator_id: evaluator.id(),
            evaluator_digests: evaluator.source_digests(),
            timestamp: std::env::var("MONAS_RUN_TIMESTAMP").ok(),
        }
    }
}

/// Lowercase sha256 hex of a file's bytes.
pub fn file_digest(path: &Path) -> Result<String, PersistError> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    let digest = Sha256::digest(&bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        write!(out, "{:02x}", b).unwrap();
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// small line-oriented reader

struct Lines<'a> {
    path: PathBuf,
    lines: std::str::Lines<'a>,
    current: usize,
}

impl<'a> Lines<'a> {
    fn new(path: &Path, text: &'a str) -> Self {
        Self {
            path: path.to_path_buf(),
            lines: text.lines(),
            current: 0,
        }
    }

    fn bad(&self, reason: impl Into<String>) -> PersistError {
        PersistError::Malformed {
            path: self.path.clone(),
            line: self.current,
            reason: reason.into(),
        }
    }

    fn next_line(&mut self) -> Result<&'a str, PersistError> {
        self.current += 1;
        self.lines.next().ok_or_else(|| PersistError::Malformed {
            path: self.path.clone(),
            line: self.current,
            reason: "file truncated".into(),
        })
    }

    /// Next line, which must start with `key ` (or equal `key`).
    fn keyed(&mut self, key: &str) -> Result<&'a str, PersistError> {
        let line = self.next_line()?;
        if line == key {
            return Ok("");
        }
        line.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' '))
            .ok_or_else(|| PersistError::Malformed {
                path: self.path.clone(),
                line: self.current,
                reason: format!("expected `{key} ...`, found `{line}`"),
            })
    }

    fn parse<T: std::str::FromStr>(&self, token: &str, what: &str) -> Result<T, PersistError> {
        token
            .parse()
            .map_err(|_| self.bad(format!("cannot parse {what} from `{token}`")))
    }
}

fn check_header(lines: &mut Lines<'_>, format: &'static str) -> Result<(), PersistError> {
    let line = lines.next_line()?;
    let expected = format!("{format} {FORMAT_VERSION}");
    if line != expected {
        return Err(PersistError::VersionMismatch {
            path: lines.path.clone(),
            expected: format,
            version: FORMAT_VERSION,
            found: line.to_string(),
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// search results

fn write_space(out: &mut String, space: &SubSpace) {
    let join_u8 = |v: &[u8]| {
        v.iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(",")
    };
    let join_u16 = |v: &[u16]| {
        v.iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(",")
    };
    writeln!(
        out,
        "space ks={} w={} d={} r={}",
        join_u8(&space.kernel),
        join_u8(&space.width),
        join_u8(&space.depth),
        join_u16(&space.resolution)
    )
    .unwrap();
}

fn parse_space(lines: &Lines<'_>, text: &str) -> Result<SubSpace, PersistError> {
    let mut kernel = None;
    let mut width = None;
    let mut depth = None;
    let mut resolution = None;
    for token in text.split(' ') {
        let (key, values) = token
            .split_once('=')
            .ok_or_else(|| lines.bad(format!("bad space token `{token}`")))?;
        match key {
            "ks" => kernel = Some(parse_list::<u8>(lines, values)?),
            "w" => width = Some(parse_list::<u8>(lines, values)?),
            "d" => depth = Some(parse_list::<u8>(lines, values)?),
            "r" => resolution = Some(parse_list::<u16>(lines, values)?),
            other => return Err(lines.bad(format!("unknown space key `{other}`"))),
        }
    }
    match (kernel, width, depth, resolution) {
        (Some(kernel), Some(width), Some(depth), Some(resolution)) => Ok(SubSpace {
            kernel,
            width,
            depth,
            resolution,
        }),
        _ => Err(lines.bad("space line misses a gene group")),
    }
}

fn parse_list<T: std::str::FromStr>(lines: &Lines<'_>, text: &str) -> Result<Vec<T>, PersistError> {
    text.split(',')
        .map(|t| lines.parse(t, "option value"))
        .collect()
}

fn write_optional(out: &mut String, key: &str, value: Option<String>) {
    match value {
        Some(v) => writeln!(out, "{key} {v}").unwrap(),
        None => writeln!(out, "{key} -").unwrap(),
    }
}

fn genes_string(g: &Genotype) -> String {
    g.to_flat()
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn parse_genotype(lines: &Lines<'_>, text: &str) -> Result<Genotype, PersistError> {
    let genes: Vec<i64> = text
        .split(' ')
        .map(|t| lines.parse(t, "gene"))
        .collect::<Result<_, _>>()?;
    Genotype::from_flat(&genes).map_err(|e| lines.bad(e.to_string()))
}

fn render_result(result: &SearchResult) -> String {
    let mut out = String::new();
    let manifest = &result.manifest;
    let cfg = &manifest.config;
    writeln!(out, "{RUN_FORMAT} {FORMAT_VERSION}").unwrap();
    writeln!(out, "tool {}", manifest.tool_version).unwrap();
    writeln!(out, "algorithm {}", cfg.algorithm.name()).unwrap();
    writeln!(out, "seed {}", cfg.operators.rng_seed).unwrap();
    writeln!(out, "population-size {}", cfg.population_size).unwrap();
    writeln!(out, "generations {}", cfg.generations).unwrap();
    writeln!(out, "mutation-rate {}", cfg.operators.mutation_rate).unwrap();
    writeln!(
        out,
        "reference-point {} {}",
        cfg.reference_point.top1_error, cfg.reference_point.latency
    )
    .unwrap();
    write_optional(
        &mut out,
        "hv-selection-ref",
        cfg.hv_selection_ref
            .map(|r| format!("{} {}", r.top1_error, r.latency)),
    );
    write_optional(
        &mut out,
        "latency-constraint",
        cfg.latency_constraint.map(|c| c.to_string()),
    );
    write_space(&mut out, &cfg.space);
    writeln!(out, "evaluator {}", manifest.evaluator_id).unwrap();
    writeln!(out, "digests {}", manifest.evaluator_digests.len()).unwrap();
    for (name, digest) in &manifest.evaluator_digests {
        writeln!(out, "digest {name} {digest}").unwrap();
    }
    write_optional(&mut out, "timestamp", manifest.timestamp.clone());

    writeln!(out, "population {}", result.population.len()).unwrap();
    for ind in &result.population {
        writeln!(
            out,
            "{} | {} {}",
            genes_string(&ind.genotype),
            ind.objectives.top1_error,
            ind.objectives.latency
        )
        .unwrap();
    }
    writeln!(out, "front {}", result.front.len()).unwrap();
    for ind in &result.front {
        let arch = ind.genotype.decode();
        writeln!(
            out,
            "{} | {} {} | {} | {}",
            genes_string(&ind.genotype),
            ind.objectives.top1_error,
            ind.objectives.latency,
            ind.genotype.phenotype_key(),
            arch.summary()
        )
        .unwrap();
    }
    writeln!(out, "hv-series {}", result.hv_series.len()).unwrap();
    for (g, hv) in result.hv_series.iter().enumerate() {
        writeln!(out, "{} {}", g + 1, hv).unwrap();
    }
    writeln!(out, "end {RUN_FORMAT}").unwrap();
    out
}

pub fn save_result(result: &SearchResult, path: &Path) -> Result<(), PersistError> {
    std::fs::write(path, render_result(result)).map_err(io_err(path))
}

pub fn load_result(path: &Path) -> Result<SearchResult, PersistError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = Lines::new(path, &text);
    check_header(&mut lines, RUN_FORMAT)?;

    let tool_version = lines.keyed("tool")?.to_string();
    let algorithm_name = lines.keyed("algorithm")?;
    let algorithm = Algorithm::parse(algorithm_name)
        .ok_or_else(|| lines.bad(format!("unknown algorithm `{algorithm_name}`")))?;
    let seed: u64 = {
        let t = lines.keyed("seed")?;
        lines.parse(t, "seed")?
    };
    let population_size: usize = {
        let t = lines.keyed("population-size")?;
        lines.parse(t, "population size")?
    };
    let generations: usize = {
        let t = lines.keyed("generations")?;
        lines.parse(t, "generations")?
    };
    let mutation_rate: f64 = {
        let t = lines.keyed("mutation-rate")?;
        lines.parse(t, "mutation rate")?
    };
    let reference_point = {
        let t = lines.keyed("reference-point")?;
        parse_objectives(&lines, t)?
    };
    let hv_selection_ref = {
        let t = lines.keyed("hv-selection-ref")?;
        if t == "-" {
            None
        } else {
            Some(parse_objectives(&lines, t)?)
        }
    };
    let latency_constraint = {
        let t = lines.keyed("latency-constraint")?;
        if t == "-" {
            None
        } else {
            Some(lines.parse(t, "latency constraint")?)
        }
    };
    let space = {
        let t = lines.keyed("space")?;
        parse_space(&lines, t)?
    };
    let evaluator_id = lines.keyed("evaluator")?.to_string();
    let digest_count: usize = {
        let t = lines.keyed("digests")?;
        lines.parse(t, "digest count")?
    };
    let mut evaluator_digests = Vec::with_capacity(digest_count);
    for _ in 0..digest_count {
        let t = lines.keyed("digest")?;
        let (name, digest) = t
            .rsplit_once(' ')
            .ok_or_else(|| lines.bad("digest line needs `name hex`"))?;
        evaluator_digests.push((name.to_string(), digest.to_string()));
    }
    let timestamp = {
        let t = lines.keyed("timestamp")?;
        if t == "-" {
            None
        } else {
            Some(t.to_string())
        }
    };

    let pop_len: usize = {
        let t = lines.keyed("population")?;
        lines.parse(t, "population length")?
    };
    let mut population = Vec::with_capacity(pop_len);
    for _ in 0..pop_len {
        let line = lines.next_line()?;
        population.push(parse_individual(&lines, line)?);
    }
    let front_len: usize = {
        let t = lines.keyed("front")?;
        lines.parse(t, "front length")?
    };
    let mut front = Vec::with_capacity(front_len);
    for _ in 0..front_len {
        let line = lines.next_line()?;
        let mut parts = line.split(" | ");
        let genes = parts.next().unwrap();
        let objectives = parts
            .next()
            .ok_or_else(|| lines.bad("front record misses objectives"))?;
        let key_hex = parts
            .next()
            .ok_or_else(|| lines.bad("front record misses phenotype key"))?;
        let _summary = parts
            .next()
            .ok_or_else(|| lines.bad("front record misses architecture summary"))?;
        let genotype = parse_genotype(&lines, genes)?;
        let objectives = parse_objectives(&lines, objectives)?;
        let key = PhenotypeKey::from_hex(key_hex)
            .ok_or_else(|| lines.bad(format!("bad phenotype key `{key_hex}`")))?;
        if genotype.phenotype_key() != key {
            return Err(lines.bad("stored phenotype key does not match the genes"));
        }
        front.push(Individual {
            genotype,
            objectives,
        });
    }
    let series_len: usize = {
        let t = lines.keyed("hv-series")?;
        lines.parse(t, "series length")?
    };
    let mut hv_series = Vec::with_capacity(series_len);
    for k in 0..series_len {
        let line = lines.next_line()?;
        let (g, hv) = line
            .split_once(' ')
            .ok_or_else(|| lines.bad("series record needs `generation value`"))?;
        let g: usize = lines.parse(g, "generation")?;
        if g != k + 1 {
            return Err(lines.bad(format!("series generation {g} out of order")));
        }
        hv_series.push(lines.parse(hv, "hypervolume")?);
    }
    let tail = lines.next_line()?;
    if tail != format!("end {RUN_FORMAT}") {
        return Err(lines.bad("missing end marker"));
    }

    Ok(SearchResult {
        manifest: RunManifest {
            tool_version,
            config: SearchConfig {
                algorithm,
                population_size,
                generations,
                operators: OperatorConfig {
                    mutation_rate,
                    rng_seed: seed,
                },
                reference_point,
                latency_constraint,
                space,
                hv_selection_ref,
                threads: 1,
            },
            evaluator_id,
            evaluator_digests,
            timestamp,
        },
        population,
        front,
        hv_series,
    })
}

fn parse_objectives(lines: &Lines<'_>, text: &str) -> Result<ObjectiveVector, PersistError> {
    let (e, l) = text
        .split_once(' ')
        .ok_or_else(|| lines.bad("objective vector needs two numbers"))?;
    Ok(ObjectiveVector::new(
        lines.parse(e, "top-1 error")?,
        lines.parse(l, "latency")?,
    ))
}

fn parse_individual(lines: &Lines<'_>, line: &str) -> Result<Individual, PersistError> {
    let (genes, objectives) = line
        .split_once(" | ")
        .ok_or_else(|| lines.bad("individual record needs `genes | objectives`"))?;
    Ok(Individual {
        genotype: parse_genotype(lines, genes)?,
        objectives: parse_objectives(lines, objectives)?,
    })
}

/// Re-runs a saved search from its manifest. File-backed evaluators are
/// reloaded from their recorded paths and their digests re-checked; a
/// changed file is a [`PersistError::DigestMismatch`].
pub fn replay_result(path: &Path) -> Result<SearchResult, PersistError> {
    let stored = load_result(path)?;
    let manifest = &stored.manifest;
    let evaluator = rebuild_evaluator(manifest)?;
    crate::moo::run_search(&manifest.config, evaluator.as_ref()).map_err(|e| {
        PersistError::EvaluatorUnavailable {
            id: manifest.evaluator_id.clone(),
            reason: e.to_string(),
        }
    })
}

fn rebuild_evaluator(manifest: &RunManifest) -> Result<Box<dyn Evaluator>, PersistError> {
    let id = &manifest.evaluator_id;
    if let Some(params) = id.strip_prefix("synthetic ") {
        let mut a = None;
        let mut b = None;
        let mut c = None;
        for token in params.split(' ') {
            let (key, value) =
                token
                    .split_once('=')
                    .ok_or_else(|| PersistError::EvaluatorUnavailable {
                        id: id.clone(),
                        reason: format!("bad parameter `{token}`"),
                    })?;
            let parsed: f64 = value
                .parse()
                .map_err(|_| PersistError::EvaluatorUnavailable {
                    id: id.clone(),
                    reason: format!("bad value `{value}`"),
                })?;
            match key {
                "a" => a = Some(parsed),
                "b" => b = Some(parsed),
                "c" => c = Some(parsed),
                _ => {
                    return Err(PersistError::EvaluatorUnavailable {
                        id: id.clone(),
                        reason: format!("unknown parameter `{key}`"),
                    })
                }
            }
        }
        match (a, b, c) {
            (Some(a), Some(b), Some(c)) => Ok(Box::new(SyntheticSurrogate::new(a, b, c))),
            _ => Err(PersistError::EvaluatorUnavailable {
                id: id.clone(),
                reason: "missing synthetic parameter".into(),
            }),
        }
    } else {
        let mut predictor_path = None;
        let mut table_path = None;
        for (name, recorded) in &manifest.evaluator_digests {
            let (role, file) =
                name.split_once('=')
                    .ok_or_else(|| PersistError::EvaluatorUnavailable {
                        id: id.clone(),
                        reason: format!("digest entry `{name}` lacks a role"),
                    })?;
            let actual = file_digest(Path::new(file))?;
            if actual != *recorded {
                return Err(PersistError::DigestMismatch {
                    file: file.to_string(),
                    recorded: recorded.clone(),
                    actual,
                });
            }
            match role {
                "predictor" => predictor_path = Some(file.to_string()),
                "table" => table_path = Some(file.to_string()),
                _ => {
                    return Err(PersistError::EvaluatorUnavailable {
                        id: id.clone(),
                        reason: format!("unknown evaluator role `{role}`"),
                    })
                }
            }
        }
        match (predictor_path, table_path) {
            (Some(p), Some(t)) => {
                let evaluator = load_predictor_evaluator(Path::new(&p), Path::new(&t))?;
                Ok(Box::new(evaluator))
            }
            _ => Err(PersistError::EvaluatorUnavailable {
                id: id.clone(),
                reason: "manifest lacks predictor or table digests".into(),
            }),
        }
    }
}

/// Loads predictor and table files and bundles them with their digests.
pub fn load_predictor_evaluator(
    predictor_path: &Path,
    table_path: &Path,
) -> Result<PredictorEvaluator, PersistError> {
    let predictor = load_predictor(predictor_path)?;
    let table = load_latency_table(table_path)?;
    let digests = vec![
        (
            format!("predictor={}", predictor_path.display()),
            file_digest(predictor_path)?,
        ),
        (
            format!("table={}", table_path.display()),
            file_digest(table_path)?,
        ),
    ];
    Ok(PredictorEvaluator::new(predictor, table).with_digests(digests))
}

// ---------------------------------------------------------------------------
// predictor weights

pub fn save_predictor(p: &AccuracyPredictor, path: &Path) -> Result<(), PersistError> {
    let mut out = String::new();
    writeln!(out, "{PREDICTOR_FORMAT} {FORMAT_VERSION}").unwrap();
    writeln!(out, "input {}", p.input_width()).unwrap();
    writeln!(out, "layers {}", p.layers().len()).unwrap();
    for (i, layer) in p.layers().iter().enumerate() {
        writeln!(
            out,
            "layer {} {} {}",
            i, layer.output_width, layer.input_width
        )
        .unwrap();
        for row in 0..layer.output_width {
            let cells: Vec<String> = layer.weights
                [row * layer.input_width..(row + 1) * layer.input_width]
                .iter()
                .map(|v| v.to_string())
                .collect();
            writeln!(out, "{}", cells.join(" ")).unwrap();
        }
        let bias: Vec<String> = layer.bias.iter().map(|v| v.to_string()).collect();
        writeln!(out, "bias {}", bias.join(" ")).unwrap();
    }
    writeln!(out, "end {PREDICTOR_FORMAT}").unwrap();
    std::fs::write(path, out).map_err(io_err(path))
}

pub fn load_predictor(path: &Path) -> Result<AccuracyPredictor, PersistError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = Lines::new(path, &text);
    check_header(&mut lines, PREDICTOR_FORMAT)?;
    let input_width: usize = {
        let t = lines.keyed("input")?;
        lines.parse(t, "input width")?
    };
    let n_layers: usize = {
        let t = lines.keyed("layers")?;
        lines.parse(t, "layer count")?
    };
    let mut layers = Vec::with_capacity(n_layers);
    for expect in 0..n_layers {
        let header = lines.keyed("layer")?;
        let mut parts = header.split(' ');
        let index: usize = lines.parse(parts.next().unwrap_or(""), "layer index")?;
        if index != expect {
            return Err(lines.bad(format!("layer {index} out of order")));
        }
        let output_width: usize = lines.parse(
            parts
                .next()
                .ok_or_else(|| lines.bad("layer header misses output width"))?,
            "output width",
        )?;
        let layer_input: usize = lines.parse(
            parts
                .next()
                .ok_or_else(|| lines.bad("layer header misses input width"))?,
            "input width",
        )?;
        let mut weights = Vec::with_capacity(output_width * layer_input);
        for _ in 0..output_width {
            let row = lines.next_line()?;
            for token in row.split(' ') {
                weights.push(lines.parse::<f64>(token, "weight")?);
            }
        }
        let bias_line = lines.keyed("bias")?;
        let bias: Vec<f64> = bias_line
            .split(' ')
            .map(|t| lines.parse(t, "bias"))
            .collect::<Result<_, _>>()?;
        layers.push(DenseLayer {
            input_width: layer_input,
            output_width,
            weights,
            bias,
        });
    }
    let tail = lines.next_line()?;
    if tail != format!("end {PREDICTOR_FORMAT}") {
        return Err(lines.bad("missing end marker"));
    }
    let predictor =
        AccuracyPredictor::new(layers).map_err(|e| lines.bad(format!("invalid predictor: {e}")))?;
    if predictor.input_width() != input_width {
        return Err(lines.bad(format!(
            "declared input width {input_width} does not match layer 0"
        )));
    }
    Ok(predictor)
}

// ---------------------------------------------------------------------------
// latency tables

pub fn save_latency_table(table: &LatencyTable, path: &Path) -> Result<(), PersistError> {
    let mut out = String::new();
    writeln!(out, "{LATENCY_FORMAT} {FORMAT_VERSION}").unwrap();
    let (stems, heads) = table.overheads();
    for (r, ms) in stems {
        writeln!(out, "stem {r} {ms}").unwrap();
    }
    for (r, ms) in heads {
        writeln!(out, "head {r} {ms}").unwrap();
    }
    for ((r, unit, slot, kernel, width), ms) in table.entries() {
        writeln!(out, "{r} {unit} {slot} {kernel} {width} {ms}").unwrap();
    }
    writeln!(out, "end {LATENCY_FORMAT}").unwrap();
    std::fs::write(path, out).map_err(io_err(path))
}

pub fn load_latency_table(path: &Path) -> Result<LatencyTable, PersistError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = Lines::new(path, &text);
    check_header(&mut lines, LATENCY_FORMAT)?;
    let mut table = LatencyTable::new();
    loop {
        let line = lines.next_line()?;
        if line == format!("end {LATENCY_FORMAT}") {
            break;
        }
        let tokens: Vec<&str> = line.split(' ').collect();
        let result = match tokens.as_slice() {
            ["stem", r, ms] => table.set_stem(
                lines.parse(r, "resolution")?,
                lines.parse(ms, "stem overhead")?,
            ),
            ["head", r, ms] => table.set_head(
                lines.parse(r, "resolution")?,
                lines.parse(ms, "head overhead")?,
            ),
            [r, unit, slot, kernel, width, ms] => table.set_entry(
                lines.parse(r, "resolution")?,
                lines.parse(unit, "unit")?,
                lines.parse(slot, "slot")?,
                lines.parse(kernel, "kernel")?,
                lines.parse(width, "width")?,
                lines.parse(ms, "latency")?,
            ),
            _ => return Err(lines.bad(format!("unrecognized record `{line}`"))),
        };
        result.map_err(|e| lines.bad(e.to_string()))?;
    }
    Ok(table)
}

// ---------------------------------------------------------------------------
// prediction sets

pub fn save_predictions(preds: &PredictionSet, path: &Path) -> Result<(), PersistError> {
    let mut out = String::new();
    writeln!(out, "{PREDS_FORMAT} {FORMAT_VERSION}").unwrap();
    writeln!(out, "models {}", preds.n_models).unwrap();
    writeln!(out, "samples {}", preds.n_samples).unwrap();
    writeln!(out, "classes {}", preds.n_classes).unwrap();
    writeln!(out, "encoding {}", preds.encoding_name()).unwrap();
    for (m, meta) in preds.models.iter().enumerate() {
        writeln!(
            out,
            "model {m} latency {} size {}",
            meta.latency_ms, meta.size_score
        )
        .unwrap();
    }
    for sample in 0..preds.n_samples {
        writeln!(out, "sample {sample} label {}", preds.labels[sample]).unwrap();
        for model in 0..preds.n_models {
            match preds.data() {
                PredictionData::Probabilities(_) => {
                    let row = preds.probabilities(model, sample).unwrap();
                    let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                    writeln!(out, "{}", cells.join(" ")).unwrap();
                }
                PredictionData::TopFive(lists) => {
                    let list = &lists[model * preds.n_samples + sample];
                    let cells: Vec<String> = list
                        .iter()
                        .map(|(class, score)| format!("{class}:{score}"))
                        .collect();
                    writeln!(out, "{}", cells.join(" ")).unwrap();
                }
            }
        }
    }
    writeln!(out, "end {PREDS_FORMAT}").unwrap();
    std::fs::write(path, out).map_err(io_err(path))
}

pub fn load_predictions(path: &Path) -> Result<PredictionSet, PersistError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = Lines::new(path, &text);
    check_header(&mut lines, PREDS_FORMAT)?;
    let n_models: usize = {
        let t = lines.keyed("models")?;
        lines.parse(t, "model count")?
    };
    let n_samples: usize = {
        let t = lines.keyed("samples")?;
        lines.parse(t, "sample count")?
    };
    let n_classes: usize = {
        let t = lines.keyed("classes")?;
        lines.parse(t, "class count")?
    };
    let encoding = lines.keyed("encoding")?.to_string();
    let mut models = Vec::with_capacity(n_models);
    for expect in 0..n_models {
        let t = lines.keyed("model")?;
        let tokens: Vec<&str> = t.split(' ').collect();
        match tokens.as_slice() {
            [index, "latency", latency, "size", size] => {
                let index: usize = lines.parse(index, "model index")?;
                if index != expect {
                    return Err(lines.bad(format!("model {index} out of order")));
                }
                models.push(ModelMeta {
                    latency_ms: lines.parse(latency, "latency")?,
                    size_score: lines.parse(size, "size score")?,
                });
            }
            _ => return Err(lines.bad(format!("bad model record `{t}`"))),
        }
    }

    let mut labels = Vec::with_capacity(n_samples);
    let mut probabilities: Vec<f64> = Vec::new();
    let mut lists: Vec<[(u32, f64); 5]> = Vec::new();
    if encoding == "prob" {
        probabilities = vec![0.0; n_models * n_samples * n_classes];
    } else if encoding == "top5" {
        lists = vec![[(0, 0.0); 5]; n_models * n_samples];
    } else {
        return Err(lines.bad(format!("unknown encoding `{encoding}`")));
    }
    for sample in 0..n_samples {
        let t = lines.keyed("sample")?;
        let tokens: Vec<&str> = t.split(' ').collect();
        match tokens.as_slice() {
            [index, "label", label] => {
                let index: usize = lines.parse(index, "sample index")?;
                if index != sample {
                    return Err(lines.bad(format!("sample {index} out of order")));
                }
                labels.push(lines.parse(label, "label")?);
            }
            _ => return Err(lines.bad(format!("bad sample record `{t}`"))),
        }
        for model in 0..n_models {
            let line = lines.next_line()?;
            if encoding == "prob" {
                let base = (model * n_samples + sample) * n_classes;
                let mut count = 0;
                for (k, token) in line.split(' ').enumerate() {
                    if k >= n_classes {
                        return Err(lines.bad("too many probabilities"));
                    }
                    probabilities[base + k] = lines.parse(token, "probability")?;
                    count += 1;
                }
                if count != n_classes {
                    return Err(lines.bad(format!("{count} probabilities, expected {n_classes}")));
                }
            } else {
                let mut list = [(0u32, 0.0f64); 5];
                let mut count = 0;
                for (k, token) in line.split(' ').enumerate() {
                    if k >= 5 {
                        return Err(lines.bad("too many top-5 entries"));
                    }
                    let (class, score) = token
                        .split_once(':')
                        .ok_or_else(|| lines.bad(format!("bad top-5 entry `{token}`")))?;
                    list[k] = (lines.parse(class, "class")?, lines.parse(score, "score")?);
                    count += 1;
                }
                if count != 5 {
                    return Err(lines.bad(format!("{count} top-5 entries, expected 5")));
                }
                lists[model * n_samples + sample] = list;
            }
        }
    }
    let tail = lines.next_line()?;
    if tail != format!("end {PREDS_FORMAT}") {
        return Err(lines.bad("missing end marker"));
    }
    let built = if encoding == "prob" {
        PredictionSet::from_probabilities(models, labels, n_classes, probabilities)
    } else {
        PredictionSet::from_top_five(models, labels, n_classes, lists)
    };
    built.map_err(|e| PersistError::Malformed {
        path: path.to_path_buf(),
        line: 0,
        reason: e.to_string(),
    })
}

// ---------------------------------------------------------------------------
// CSV exports

/// Front CSV: one row per member, ordered by latency then phenotype key.
/// `genes` is space-separated and `arch` contains no commas, so no field
/// needs quoting.
pub const FRONT_CSV_HEADER: &str = "top1_error_pct,latency_ms,resolution,phenotype_key,genes,arch";

pub fn export_front_csv(front: &[Individual], path: &Path) -> Result<(), PersistError> {
    let mut rows: Vec<&Individual> = front.iter().collect();
    rows.sort_by(|a, b| {
        a.objectives
            .latency
            .partial_cmp(&b.objectives.latency)
            .unwrap()
            .then_with(|| a.genotype.phenotype_key().cmp(&b.genotype.phenotype_key()))
    });
    let mut out = String::new();
    writeln!(out, "{FRONT_CSV_HEADER}").unwrap();
    for ind in rows {
        let arch = ind.genotype.decode();
        writeln!(
            out,
            "{},{},{},{},{},{}",
            ind.objectives.top1_error,
            ind.objectives.latency,
            ind.genotype.resolution(),
            ind.genotype.phenotype_key(),
            genes_string(&ind.genotype),
            arch.summary()
        )
        .unwrap();
    }
    std::fs::write(path, out).map_err(io_err(path))
}

/// Parsed front CSV row; used to check exports round-trip.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontCsvRow {
    pub top1_error: f64,
    pub latency: f64,
    pub resolution: u16,
    pub phenotype_key: String,
    pub genes: Vec<i64>,
    pub arch: String,
}

pub fn read_front_csv(path: &Path) -> Result<Vec<FrontCsvRow>, PersistError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = Lines::new(path, &text);
    let header = lines.next_line()?;
    if header != FRONT_CSV_HEADER {
        return Err(lines.bad(format!("unexpected header `{header}`")));
    }
    let mut rows = Vec::new();
    while let Ok(line) = lines.next_line() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(lines.bad(format!("{} fields, expected 6", fields.len())));
        }
        rows.push(FrontCsvRow {
            top1_error: lines.parse(fields[0], "top-1 error")?,
            latency: lines.parse(fields[1], "latency")?,
            resolution: lines.parse(fields[2], "resolution")?,
            phenotype_key: fields[3].to_string(),
            genes: fields[4]
                .split(' ')
                .map(|t| lines.parse(t, "gene"))
                .collect::<Result<_, _>>()?,
            arch: fields[5].to_string(),
        });
    }
    Ok(rows)
}

pub const HV_CSV_HEADER: &str = "generation,hypervolume";

pub fn export_hv_csv(series: &[f64], path: &Path) -> Result<(), PersistError> {
    let mut out = String::new();
    writeln!(out, "{HV_CSV_HEADER}").unwrap();
    for (g, hv) in series.iter().enumerate() {
        writeln!(out, "{},{}", g + 1, hv).unwrap();
    }
    std::fs::write(path, out).map_err(io_err(path))
}

pub const BASELINE_CSV_HEADER: &str = "constraint_ms,top1_error_pct,latency_ms,genes,arch";

/// Baseline sweep CSV, rows sorted by constraint ascending.
pub fn export_baseline_csv(records: &[(f64, Individual)], path: &Path) -> Result<(), PersistError> {
    let mut rows: Vec<&(f64, Individual)> = records.iter().collect();
    rows.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut out = String::new();
    writeln!(out, "{BASELINE_CSV_HEADER}").unwrap();
    for (constraint, ind) in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            constraint,
            ind.objectives.top1_error,
            ind.objectives.latency,
            genes_string(&ind.genotype),
            ind.genotype.decode().summary()
        )
        .unwrap();
    }
    std::fs::write(path, out).map_err(io_err(path))
}

pub const ENSEMBLE_CSV_HEADER: &str =
    "spec_id,size,voting,latency_mode,members,accuracy_pct,latency_ms,nondominated";

/// All experiment rows plus the per-slice non-dominated flag. Rows are
/// ordered slice by slice (voting outer, mode inner), then committee size,
/// then the per-size combination index.
pub fn export_ensemble_csv(outcome: &ExperimentOutcome, path: &Path) -> Result<(), PersistError> {
    let mut out = String::new();
    writeln!(out, "{ENSEMBLE_CSV_HEADER}").unwrap();
    for slice in &outcome.slices {
        let mut current_size = 0usize;
        let mut combo = 0usize;
        for (i, result) in slice.results.iter().enumerate() {
            let size = result.spec.members.len();
            if size != current_size {
                current_size = size;
                combo = 0;
            }
            let members: Vec<String> = result.spec.members.iter().map(|m| m.to_string()).collect();
            writeln!(
                out,
                "{}-{}-s{}-c{},{},{},{},{},{},{},{}",
                slice.voting.name(),
                slice.mode.name(),
                size,
                combo,
                size,
                slice.voting.name(),
                slice.mode.name(),
                members.join(" "),
                result.accuracy_pct,
                result.latency_ms,
                u8::from(slice.front.contains(&i))
            )
            .unwrap();
            combo += 1;
        }
    }
    std::fs::write(path, out).map_err(io_err(path))
}

/// Writes the nine-threshold subset picked from a latency-sorted front.
pub fn export_subset_csv(
    subset: &[(f64, Option<usize>)],
    front: &[Individual],
    path: &Path,
) -> Result<(), PersistError> {
    let mut out = String::new();
    writeln!(out, "threshold_ms,member_index,top1_error_pct,latency_ms").unwrap();
    for (threshold, member) in subset {
        match member {
            Some(i) => writeln!(
                out,
                "{},{},{},{}",
                threshold, i, front[*i].objectives.top1_error, front[*i].objectives.latency
            )
            .unwrap(),
            None => writeln!(out, "{threshold},-,-,-").unwrap(),
        }
    }
    std::fs::write(path, out).map_err(io_err(path))
}
