//! Search-space encoding and variation operators.
//!
//! A candidate network is a flat chromosome of 46 genes: 20 kernel-size
//! genes and 20 width genes (5 units x 4 layer slots, unit-major), 5
//! depth genes (active layers per unit) and one input resolution gene.
//! Slots beyond a unit's depth stay in the chromosome but are discarded
//! when decoding to an [`Architecture`], so several genotypes can map to
//! the same phenotype; [`Genotype::phenotype_key`] canonicalizes that.

use num_bigint::BigUint;
use rand::Rng;
use thiserror::Error;

/// Units in the network, in sequence.
pub const NUM_UNITS: usize = 5;
/// Layer slots per unit; a unit's depth selects a prefix of them.
pub const SLOTS_PER_UNIT: usize = 4;
/// Total layer slots (kernel and width genes each cover all of them).
pub const NUM_LAYER_SLOTS: usize = NUM_UNITS * SLOTS_PER_UNIT;
/// Flat chromosome length: 20 kernel + 20 width + 5 depth + 1 resolution.
pub const GENE_COUNT: usize = 2 * NUM_LAYER_SLOTS + NUM_UNITS + 1;

/// Legal convolution kernel sizes.
pub const KERNEL_OPTIONS: [u8; 3] = [3, 5, 7];
/// Legal channel expansion ratios.
pub const WIDTH_OPTIONS: [u8; 3] = [3, 4, 6];
/// Legal per-unit depths.
pub const DEPTH_OPTIONS: [u8; 3] = [2, 3, 4];
/// Smallest legal input resolution.
pub const RESOLUTION_MIN: u16 = 128;
/// Largest legal input resolution.
pub const RESOLUTION_MAX: u16 = 224;
/// Spacing of the resolution grid.
pub const RESOLUTION_STEP: u16 = 4;
/// Number of legal input resolutions.
pub const RESOLUTION_COUNT: usize =
    ((RESOLUTION_MAX - RESOLUTION_MIN) / RESOLUTION_STEP) as usize + 1;

/// All legal input resolutions in ascending order.
pub fn resolution_options() -> impl Iterator<Item = u16> {
    (0..RESOLUTION_COUNT as u16).map(|i| RESOLUTION_MIN + i * RESOLUTION_STEP)
}

fn is_valid_resolution(r: u16) -> bool {
    (RESOLUTION_MIN..=RESOLUTION_MAX).contains(&r)
        && (r - RESOLUTION_MIN).is_multiple_of(RESOLUTION_STEP)
}

/// Errors raised by strict genotype validation. Out-of-set values are
/// rejected at construction, never clamped.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenotypeError {
    #[error("gene {index} has invalid value {value} (expected one of {expected})")]
    InvalidGene {
        /// Position in the flat [ks | w | d | r] gene order.
        index: usize,
        value: i64,
        expected: &'static str,
    },
    #[error("flat genotype has {found} genes, expected {}", GENE_COUNT)]
    WrongLength { found: usize },
}

/// Flat 46-gene encoding of a candidate network.
///
/// Gene order in the flat view is `[ks(20) | w(20) | d(5) | r(1)]`,
/// unit-major and slot-minor within the kernel and width blocks.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Genotype {
    ks: [u8; NUM_LAYER_SLOTS],
    w: [u8; NUM_LAYER_SLOTS],
    d: [u8; NUM_UNITS],
    r: u16,
}

impl Genotype {
    /// Builds a genotype, validating every gene against its option set.
    pub fn new(
        ks: [u8; NUM_LAYER_SLOTS],
        w: [u8; NUM_LAYER_SLOTS],
        d: [u8; NUM_UNITS],
        r: u16,
    ) -> Result<Self, GenotypeError> {
        for (i, &v) in ks.iter().enumerate() {
            if !KERNEL_OPTIONS.contains(&v) {
                return Err(GenotypeError::InvalidGene {
                    index: i,
                    value: v as i64,
                    expected: "{3, 5, 7}",
                });
            }
        }
        for (i, &v) in w.iter().enumerate() {
            if !WIDTH_OPTIONS.contains(&v) {
                return Err(GenotypeError::InvalidGene {
                    index: NUM_LAYER_SLOTS + i,
                    value: v as i64,
                    expected: "{3, 4, 6}",
                });
            }
        }
        for (i, &v) in d.iter().enumerate() {
            if !DEPTH_OPTIONS.contains(&v) {
                return Err(GenotypeError::InvalidGene {
                    index: 2 * NUM_LAYER_SLOTS + i,
                    value: v as i64,
                    expected: "{2, 3, 4}",
                });
            }
        }
        if !is_valid_resolution(r) {
            return Err(GenotypeError::InvalidGene {
                index: GENE_COUNT - 1,
                value: r as i64,
                expected: "{128, 132, ..., 224}",
            });
        }
        Ok(Self { ks, w, d, r })
    }

    /// Parses the documented flat gene order `[ks | w | d | r]`.
    pub fn from_flat(genes: &[i64]) -> Result<Self, GenotypeError> {
        if genes.len() != GENE_COUNT {
            return Err(GenotypeError::WrongLength { found: genes.len() });
        }
        let narrow = |index: usize, expected: &'static str| -> Result<u8, GenotypeError> {
            u8::try_from(genes[index]).map_err(|_| GenotypeError::InvalidGene {
                index,
                value: genes[index],
                expected,
            })
        };
        let mut ks = [0u8; NUM_LAYER_SLOTS];
        let mut w = [0u8; NUM_LAYER_SLOTS];
        let mut d = [0u8; NUM_UNITS];
        for i in 0..NUM_LAYER_SLOTS {
            ks[i] = narrow(i, "{3, 5, 7}")?;
            w[i] = narrow(NUM_LAYER_SLOTS + i, "{3, 4, 6}")?;
        }
        for (i, unit) in d.iter_mut().enumerate() {
            *unit = narrow(2 * NUM_LAYER_SLOTS + i, "{2, 3, 4}")?;
        }
        let r_raw = genes[GENE_COUNT - 1];
        let r = u16::try_from(r_raw).map_err(|_| GenotypeError::InvalidGene {
            index: GENE_COUNT - 1,
            value: r_raw,
            expected: "{128, 132, ..., 224}",
        })?;
        Self::new(ks, w, d, r)
    }

    /// Serializes to the documented flat gene order.
    pub fn to_flat(&self) -> [i64; GENE_COUNT] {
        let mut out = [0i64; GENE_COUNT];
        for i in 0..NUM_LAYER_SLOTS {
            out[i] = self.ks[i] as i64;
            out[NUM_LAYER_SLOTS + i] = self.w[i] as i64;
        }
        for i in 0..NUM_UNITS {
            out[2 * NUM_LAYER_SLOTS + i] = self.d[i] as i64;
        }
        out[GENE_COUNT - 1] = self.r as i64;
        out
    }

    pub fn kernel_at(&self, unit: usize, slot: usize) -> u8 {
        self.ks[unit * SLOTS_PER_UNIT + slot]
    }

    pub fn width_at(&self, unit: usize, slot: usize) -> u8 {
        self.w[unit * SLOTS_PER_UNIT + slot]
    }

    pub fn depth(&self, unit: usize) -> u8 {
        self.d[unit]
    }

    pub fn resolution(&self) -> u16 {
        self.r
    }

    /// Decodes to the phenotype: each unit keeps the first `depth` layer
    /// slots, the remaining slots are discarded.
    pub fn decode(&self) -> Architecture {
        let units = (0..NUM_UNITS)
            .map(|u| {
                let depth = self.d[u] as usize;
                UnitSpec {
                    layers: (0..depth)
                        .map(|s| LayerSpec {
                            kernel: self.kernel_at(u, s),
                            width: self.width_at(u, s),
                        })
                        .collect(),
                }
            })
            .collect();
        Architecture {
            units,
            resolution: self.r,
        }
    }

    /// Canonical byte string equal for two genotypes iff their decoded
    /// architectures are identical. Inactive slots are written as a zero
    /// sentinel so edits to them cannot change the key.
    pub fn phenotype_key(&self) -> PhenotypeKey {
        let mut bytes = Vec::with_capacity(NUM_UNITS * (1 + 2 * SLOTS_PER_UNIT) + 2);
        for u in 0..NUM_UNITS {
            let depth = self.d[u];
            bytes.push(depth);
            for s in 0..SLOTS_PER_UNIT {
                if (s as u8) < depth {
                    bytes.push(self.kernel_at(u, s));
                    bytes.push(self.width_at(u, s));
                } else {
                    bytes.push(0);
                    bytes.push(0);
                }
            }
        }
        bytes.extend_from_slice(&self.r.to_le_bytes());
        PhenotypeKey(bytes)
    }
}

/// Canonical phenotype identity; displays as lowercase hex.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PhenotypeKey(pub Vec<u8>);

impl std::fmt::Display for PhenotypeKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for b in &self.0 {
            write!(f, "{:02x}", b)?;
        }
        Ok(())
    }
}

impl PhenotypeKey {
    pub fn from_hex(s: &str) -> Option<Self> {
        if !s.len().is_multiple_of(2) {
            return None;
        }
        let mut bytes = Vec::with_capacity(s.len() / 2);
        for chunk in s.as_bytes().chunks(2) {
            let hi = (chunk[0] as char).to_digit(16)?;
            let lo = (chunk[1] as char).to_digit(16)?;
            bytes.push((hi * 16 + lo) as u8);
        }
        Some(Self(bytes))
    }
}

/// One active convolution layer of the decoded network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpec {
    pub kernel: u8,
    pub width: u8,
}

/// One unit of the decoded network; `layers.len()` equals the unit depth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitSpec {
    pub layers: Vec<LayerSpec>,
}

/// Decoded phenotype: five units of active layers plus the input resolution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    pub units: Vec<UnitSpec>,
    pub resolution: u16,
}

impl Architecture {
    /// Iterates active layers as `(unit, slot, layer)`.
    pub fn active_layers(&self) -> impl Iterator<Item = (usize, usize, &LayerSpec)> {
        self.units
            .iter()
            .enumerate()
            .flat_map(|(u, unit)| unit.layers.iter().enumerate().map(move |(s, l)| (u, s, l)))
    }

    pub fn total_layers(&self) -> usize {
        self.units.iter().map(|u| u.layers.len()).sum()
    }

    /// Compact single-line description, e.g. `u0:k3w4+k5w6 ... r224`.
    /// Contains no commas so it embeds in CSV fields unquoted.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for (u, unit) in self.units.iter().enumerate() {
            if u > 0 {
                out.push(' ');
            }
            out.push_str(&format!("u{}:", u));
            for (i, l) in unit.layers.iter().enumerate() {
                if i > 0 {
                    out.push('+');
                }
                out.push_str(&format!("k{}w{}", l.kernel, l.width));
            }
        }
        out.push_str(&format!(" r{}", self.resolution));
        out
    }
}

/// Per-gene variation settings.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorConfig {
    /// Probability that a gene is resampled during mutation.
    pub mutation_rate: f64,
    /// Seed for the run RNG.
    pub rng_seed: u64,
}

impl Default for OperatorConfig {
    fn default() -> Self {
        Self {
            mutation_rate: 0.10,
            rng_seed: 0,
        }
    }
}

impl OperatorConfig {
    pub fn validate(&self) -> Result<(), GenotypeError> {
        if !(0.0..=1.0).contains(&self.mutation_rate) || !self.mutation_rate.is_finite() {
            return Err(GenotypeError::InvalidGene {
                index: 0,
                value: 0,
                expected: "mutation_rate in [0, 1]",
            });
        }
        Ok(())
    }
}

/// Subsets of the gene option sets used by sampling and mutation.
///
/// Validation of genotypes is always against the full option sets; a
/// sub-space only narrows what the operators draw, which is how the
/// exhaustively enumerable benchmark space is carved out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubSpace {
    pub kernel: Vec<u8>,
    pub width: Vec<u8>,
    pub depth: Vec<u8>,
    pub resolution: Vec<u16>,
}

impl SubSpace {
    /// The full search space.
    pub fn full() -> Self {
        Self {
            kernel: KERNEL_OPTIONS.to_vec(),
            width: WIDTH_OPTIONS.to_vec(),
            depth: DEPTH_OPTIONS.to_vec(),
            resolution: resolution_options().collect(),
        }
    }

    /// Benchmark sub-space where only kernel genes vary: depth fixed to 2,
    /// width to 3 and resolution to 224. Its 3^10 phenotypes can be
    /// enumerated exhaustively, which makes exact front recovery checkable.
    pub fn kernel_only() -> Self {
        Self {
            kernel: KERNEL_OPTIONS.to_vec(),
            width: vec![3],
            depth: vec![2],
            resolution: vec![224],
        }
    }

    pub fn validate(&self) -> Result<(), GenotypeError> {
        let subset_ok = !self.kernel.is_empty()
            && !self.width.is_empty()
            && !self.depth.is_empty()
            && !self.resolution.is_empty()
            && self.kernel.iter().all(|v| KERNEL_OPTIONS.contains(v))
            && self.width.iter().all(|v| WIDTH_OPTIONS.contains(v))
            && self.depth.iter().all(|v| DEPTH_OPTIONS.contains(v))
            && self.resolution.iter().all(|&v| is_valid_resolution(v));
        if subset_ok {
            Ok(())
        } else {
            Err(GenotypeError::InvalidGene {
                index: 0,
                value: 0,
                expected: "sub-space options within the full option sets",
            })
        }
    }

    pub fn is_full(&self) -> bool {
        *self == Self::full()
    }
}

fn pick<T: Copy>(options: &[T], rng: &mut impl Rng) -> T {
    options[rng.gen_range(0..options.len())]
}

/// Samples a genotype with every gene uniform over its (sub-)space options.
pub fn random_genotype(space: &SubSpace, rng: &mut impl Rng) -> Genotype {
    let mut ks = [0u8; NUM_LAYER_SLOTS];
    let mut w = [0u8; NUM_LAYER_SLOTS];
    let mut d = [0u8; NUM_UNITS];
    for slot in ks.iter_mut() {
        *slot = pick(&space.kernel, rng);
    }
    for slot in w.iter_mut() {
        *slot = pick(&space.width, rng);
    }
    for unit in d.iter_mut() {
        *unit = pick(&space.depth, rng);
    }
    let r = pick(&space.resolution, rng);
    Genotype { ks, w, d, r }
}

/// Per-gene mutation: with probability `mutation_rate` a gene is resampled
/// uniformly from its full option subset, self-replacement included. All 46
/// genes are eligible, inactive layer slots too.
pub fn mutate(
    g: &Genotype,
    cfg: &OperatorConfig,
    space: &SubSpace,
    rng: &mut impl Rng,
) -> Genotype {
    let rate = cfg.mutation_rate;
    let mut out = g.clone();
    for slot in out.ks.iter_mut() {
        if rng.gen::<f64>() < rate {
            *slot = pick(&space.kernel, rng);
        }
    }
    for slot in out.w.iter_mut() {
        if rng.gen::<f64>() < rate {
            *slot = pick(&space.width, rng);
        }
    }
    for unit in out.d.iter_mut() {
        if rng.gen::<f64>() < rate {
            *unit = pick(&space.depth, rng);
        }
    }
    if rng.gen::<f64>() < rate {
        out.r = pick(&space.resolution, rng);
    }
    out
}

/// Uniform crossover: each child gene comes from either parent with equal
/// probability, independently per gene.
pub fn uniform_crossover(a: &Genotype, b: &Genotype, rng: &mut impl Rng) -> Genotype {
    let mut out = a.clone();
    for i in 0..NUM_LAYER_SLOTS {
        if rng.gen::<bool>() {
            out.ks[i] = b.ks[i];
        }
        if rng.gen::<bool>() {
            out.w[i] = b.w[i];
        }
    }
    for i in 0..NUM_UNITS {
        if rng.gen::<bool>() {
            out.d[i] = b.d[i];
        }
    }
    if rng.gen::<bool>() {
        out.r = b.r;
    }
    out
}

/// Distinct phenotypes of a single unit: for each depth, every assignment of
/// (kernel, width) to the active layers.
pub fn unit_phenotype_count() -> u64 {
    let per_layer = (KERNEL_OPTIONS.len() * WIDTH_OPTIONS.len()) as u64;
    DEPTH_OPTIONS.iter().map(|&d| per_layer.pow(d as u32)).sum()
}

/// Exact size of the search space: resolutions times the per-unit phenotype
/// count raised to the number of units. The resolution-free architecture
/// count is on the order of 2.18e19.
pub fn search_space_size() -> BigUint {
    let per_unit = BigUint::from(unit_phenotype_count());
    BigUint::from(RESOLUTION_COUNT as u64) * per_unit.pow(NUM_UNITS as u32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn sample(seed: u64) -> Genotype {
        random_genotype(&SubSpace::full(), &mut rng(seed))
    }

    #[test]
    fn construction_rejects_out_of_set_values() {
        let g = sample(1);
        let mut ks = g.ks;
        ks[7] = 4;
        let err = Genotype::new(ks, g.w, g.d, g.r).unwrap_err();
        assert_eq!(
            err,
            GenotypeError::InvalidGene {
                index: 7,
                value: 4,
                expected: "{3, 5, 7}"
            }
        );

        let mut flat = g.to_flat();
        flat[45] = 130; // off the resolution grid
        let err = Genotype::from_flat(&flat).unwrap_err();
        match err {
            GenotypeError::InvalidGene { index: 45, .. } => {}
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn flat_round_trip() {
        for seed in 0..20 {
            let g = sample(seed);
            assert_eq!(Genotype::from_flat(&g.to_flat()).unwrap(), g);
        }
    }

    #[test]
    fn random_genotype_stays_in_domain() {
        let mut r = rng(3);
        for _ in 0..200 {
            let g = random_genotype(&SubSpace::full(), &mut r);
            // new() re-validates every gene
            assert!(Genotype::new(g.ks, g.w, g.d, g.r).is_ok());
        }
    }

    #[test]
    fn random_genotype_same_seed_is_identical() {
        let a = sample(99);
        let b = sample(99);
        assert_eq!(a, b);
    }

    #[test]
    fn depth_frequencies_are_uniform() {
        // 10,000 samples -> 50,000 unit genes; each depth option should land
        // in [0.323, 0.343] (1/3 within 3 sigma of the binomial).
        let mut r = rng(7);
        let space = SubSpace::full();
        let mut counts = [0u64; 3];
        let n = 10_000;
        for _ in 0..n {
            let g = random_genotype(&space, &mut r);
            for u in 0..NUM_UNITS {
                let idx = DEPTH_OPTIONS.iter().position(|&d| d == g.d[u]).unwrap();
                counts[idx] += 1;
            }
        }
        let total = (n * NUM_UNITS) as f64;
        for c in counts {
            let freq = c as f64 / total;
            assert!((0.323..=0.343).contains(&freq), "depth frequency {freq}");
        }
    }

    #[test]
    fn decode_full_depth_uses_all_slots() {
        let mut g = sample(11);
        g.d = [4, 4, 4, 4, 4];
        let arch = g.decode();
        assert_eq!(arch.total_layers(), NUM_LAYER_SLOTS);
        for (u, s, layer) in arch.active_layers() {
            assert_eq!(layer.kernel, g.kernel_at(u, s));
            assert_eq!(layer.width, g.width_at(u, s));
        }
    }

    #[test]
    fn decode_depth_two_discards_trailing_slots() {
        let mut g = sample(12);
        g.d = [2, 2, 2, 2, 2];
        let arch = g.decode();
        assert_eq!(arch.total_layers(), 10);
        for unit in &arch.units {
            assert_eq!(unit.layers.len(), 2);
        }
    }

    #[test]
    fn inactive_slot_does_not_affect_phenotype() {
        let mut a = sample(13);
        a.d[2] = 2;
        let mut b = a.clone();
        // slot index 3 of unit 2 is inactive at depth 2
        b.ks[2 * SLOTS_PER_UNIT + 3] = if a.ks[2 * SLOTS_PER_UNIT + 3] == 3 {
            7
        } else {
            3
        };
        assert_ne!(a, b);
        assert_eq!(a.decode(), b.decode());
        assert_eq!(a.phenotype_key(), b.phenotype_key());
    }

    #[test]
    fn phenotype_key_distinguishes_active_edits() {
        let mut a = sample(14);
        a.d = [4, 4, 4, 4, 4];
        let mut b = a.clone();
        b.ks[0] = if a.ks[0] == 3 { 5 } else { 3 };
        assert_ne!(a.phenotype_key(), b.phenotype_key());

        let mut c = a.clone();
        c.r = if a.r == 128 { 132 } else { 128 };
        assert_ne!(a.phenotype_key(), c.phenotype_key());
    }

    #[test]
    fn phenotype_key_hex_round_trip() {
        let key = sample(15).phenotype_key();
        let hex = key.to_string();
        assert_eq!(PhenotypeKey::from_hex(&hex).unwrap(), key);
    }

    #[test]
    fn mutation_rate_zero_is_identity() {
        let g = sample(20);
        let cfg = OperatorConfig {
            mutation_rate: 0.0,
            rng_seed: 0,
        };
        let out = mutate(&g, &cfg, &SubSpace::full(), &mut rng(21));
        assert_eq!(out, g);
        assert_eq!(out.decode(), g.decode());
    }

    #[test]
    fn mutation_rate_one_resamples_resolution_uniformly() {
        // With rate 1 the resolution gene is resampled from all 25 options,
        // so it changes with probability 24/25 = 0.96.
        let g = sample(22);
        let cfg = OperatorConfig {
            mutation_rate: 1.0,
            rng_seed: 0,
        };
        let space = SubSpace::full();
        let mut r = rng(23);
        let n = 20_000u32;
        let changed = (0..n)
            .filter(|_| mutate(&g, &cfg, &space, &mut r).r != g.r)
            .count() as f64;
        let freq = changed / n as f64;
        let p = 24.0 / 25.0;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((freq - p).abs() <= 3.0 * sigma, "change frequency {freq}");
    }

    #[test]
    fn mutation_change_rate_matches_resampling_model() {
        // For a 3-option gene at rate 0.1 the observed change rate is
        // 0.1 * (2/3) because resampling may pick the same value.
        let g = sample(24);
        let cfg = OperatorConfig::default();
        let space = SubSpace::full();
        let mut r = rng(25);
        let n = 2_000;
        let mut changed = 0u64;
        for _ in 0..n {
            let m = mutate(&g, &cfg, &space, &mut r);
            changed += (0..NUM_LAYER_SLOTS).filter(|&i| m.ks[i] != g.ks[i]).count() as u64;
        }
        let draws = (n * NUM_LAYER_SLOTS) as f64; // 40,000 kernel genes
        let freq = changed as f64 / draws;
        let p = 0.1 * (2.0 / 3.0);
        let sigma = (p * (1.0 - p) / draws).sqrt();
        assert!((freq - p).abs() <= 3.0 * sigma, "change frequency {freq}");
    }

    #[test]
    fn crossover_of_identical_parents_is_identity() {
        let g = sample(30);
        let child = uniform_crossover(&g, &g, &mut rng(31));
        assert_eq!(child, g);
    }

    #[test]
    fn crossover_genes_come_from_a_parent() {
        let a = sample(32);
        let b = sample(33);
        let mut r = rng(34);
        for _ in 0..200 {
            let c = uniform_crossover(&a, &b, &mut r);
            let (fa, fb, fc) = (a.to_flat(), b.to_flat(), c.to_flat());
            for i in 0..GENE_COUNT {
                assert!(
                    fc[i] == fa[i] || fc[i] == fb[i],
                    "gene {i} from neither parent"
                );
            }
        }
    }

    #[test]
    fn crossover_inheritance_is_balanced() {
        // Parents differing in every gene; per-gene inheritance from parent
        // a should be 0.5 within 3 sigma over 10,000 crossovers.
        let a = Genotype::new([3; 20], [3; 20], [2; 5], 128).unwrap();
        let b = Genotype::new([7; 20], [6; 20], [4; 5], 224).unwrap();
        let mut r = rng(0);
        let n = 10_000u32;
        let mut from_a = [0u64; GENE_COUNT];
        let fa = a.to_flat();
        for _ in 0..n {
            let c = uniform_crossover(&a, &b, &mut r);
            let fc = c.to_flat();
            for i in 0..GENE_COUNT {
                if fc[i] == fa[i] {
                    from_a[i] += 1;
                }
            }
        }
        let sigma = (0.25 / n as f64).sqrt();
        for (i, &count) in from_a.iter().enumerate() {
            let freq = count as f64 / n as f64;
            assert!(
                (freq - 0.5).abs() <= 3.0 * sigma,
                "gene {i} inheritance {freq}"
            );
        }
    }

    #[test]
    fn unit_count_matches_enumeration_oracle() {
        // Enumerate one unit's distinct phenotypes directly: choose a depth,
        // then every (kernel, width) assignment of the active layers.
        let mut count = 0u64;
        for &depth in &DEPTH_OPTIONS {
            let combos_per_layer = (KERNEL_OPTIONS.len() * WIDTH_OPTIONS.len()) as u64;
            let mut unit_total = 1u64;
            for _ in 0..depth {
                unit_total *= combos_per_layer;
            }
            count += unit_total;
        }
        assert_eq!(count, 7371);
        assert_eq!(unit_phenotype_count(), count);
    }

    #[test]
    fn search_space_size_is_exact() {
        // 7371^5 fits in u128, giving an independent route to the product.
        let per_unit: u128 = 7371;
        let mut expect: u128 = 1;
        for _ in 0..NUM_UNITS {
            expect *= per_unit;
        }
        let expect_total = BigUint::from(expect) * BigUint::from(25u32);
        assert_eq!(search_space_size(), expect_total);

        // Resolution-free count has the claimed order of magnitude.
        let arch_count = expect as f64;
        assert!(arch_count > 2.17e19 && arch_count < 2.19e19);
        assert_eq!(
            search_space_size() % BigUint::from(25u32),
            BigUint::from(0u32)
        );
    }

    #[test]
    fn sub_space_sampling_respects_restriction() {
        let space = SubSpace::kernel_only();
        space.validate().unwrap();
        let mut r = rng(40);
        for _ in 0..100 {
            let g = random_genotype(&space, &mut r);
            assert_eq!(g.d, [2; 5]);
            assert_eq!(g.w, [3; 20]);
            assert_eq!(g.r, 224);
            let cfg = OperatorConfig {
                mutation_rate: 1.0,
                rng_seed: 0,
            };
            let m = mutate(&g, &cfg, &space, &mut r);
            assert_eq!(m.d, [2; 5]);
            assert_eq!(m.w, [3; 20]);
            assert_eq!(m.r, 224);
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;
        use rand::Rng;

        fn arb_genotype() -> impl Strategy<Value = Genotype> {
            (any::<u64>(),).prop_map(|(seed,)| {
                random_genotype(&SubSpace::full(), &mut ChaCha8Rng::seed_from_u64(seed))
            })
        }

        proptest! {
            #[test]
            fn decode_with_zero_rate_mutation_is_stable(g in arb_genotype(), seed in any::<u64>()) {
                let cfg = OperatorConfig { mutation_rate: 0.0, rng_seed: 0 };
                let m = mutate(&g, &cfg, &SubSpace::full(), &mut ChaCha8Rng::seed_from_u64(seed));
                prop_assert_eq!(m.decode(), g.decode());
            }

            #[test]
            fn phenotype_key_respects_decode_equality(g in arb_genotype(), seed in any::<u64>()) {
                // Force an edit in an inactive slot when one exists; the key
                // and the decoded architecture must agree on equality.
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut edited = g.clone();
                if let Some(unit) = (0..NUM_UNITS).find(|&u| g.depth(u) < SLOTS_PER_UNIT as u8) {
                    let slot = g.depth(unit) as usize; // first inactive slot
                    let idx = unit * SLOTS_PER_UNIT + slot;
                    let old = edited.ks[idx];
                    edited.ks[idx] = *KERNEL_OPTIONS.iter().find(|&&k| k != old).unwrap();
                }
                prop_assert_eq!(edited.decode() == g.decode(), edited.phenotype_key() == g.phenotype_key());

                // And a random active edit must flip both.
                let unit = rng.gen_range(0..NUM_UNITS);
                let slot = rng.gen_range(0..g.depth(unit) as usize);
                let idx = unit * SLOTS_PER_UNIT + slot;
                let mut active = g.clone();
                let old = active.ks[idx];
                active.ks[idx] = *KERNEL_OPTIONS.iter().find(|&&k| k != old).unwrap();
                prop_assert!(active.decode() != g.decode());
                prop_assert!(active.phenotype_key() != g.phenotype_key());
            }

            #[test]
            fn decode_is_surjective_onto_the_architecture_set(seed in any::<u64>()) {
                // Build an arbitrary architecture directly from the option
                // sets, then a genotype carrying it (inactive slots filled
                // with the first options); decode must recover it exactly.
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut ks = [KERNEL_OPTIONS[0]; NUM_LAYER_SLOTS];
                let mut w = [WIDTH_OPTIONS[0]; NUM_LAYER_SLOTS];
                let mut d = [DEPTH_OPTIONS[0]; NUM_UNITS];
                let mut units = Vec::with_capacity(NUM_UNITS);
                for unit in 0..NUM_UNITS {
                    let depth = DEPTH_OPTIONS[rng.gen_range(0..DEPTH_OPTIONS.len())];
                    d[unit] = depth;
                    let mut layers = Vec::with_capacity(depth as usize);
                    for slot in 0..depth as usize {
                        let kernel = KERNEL_OPTIONS[rng.gen_range(0..KERNEL_OPTIONS.len())];
                        let width = WIDTH_OPTIONS[rng.gen_range(0..WIDTH_OPTIONS.len())];
                        ks[unit * SLOTS_PER_UNIT + slot] = kernel;
                        w[unit * SLOTS_PER_UNIT + slot] = width;
                        layers.push(LayerSpec { kernel, width });
                    }
                    units.push(UnitSpec { layers });
                }
                let r_options: Vec<u16> = resolution_options().collect();
                let resolution = r_options[rng.gen_range(0..r_options.len())];
                let target = Architecture { units, resolution };
                let g = Genotype::new(ks, w, d, resolution).unwrap();
                prop_assert_eq!(g.decode(), target);
            }
        }
    }
}
