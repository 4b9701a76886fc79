//! Published prediction test vector: a small serialized predictor, a
//! genotype, and the expected forward-pass output, checked to 1e-6.
//!
//! The expected value in `tests/fixtures/predictor_small.expected` was
//! produced by the straight-line pass below (`oracle_forward`), which
//! shares no code with the library's layer evaluation. Regenerate with
//! `cargo test --test fixture_vectors -- --ignored regenerate`.

use monas::genotype::{random_genotype, Genotype, SubSpace};
use monas::persistence::{load_predictor, save_latency_table, save_predictor};
use monas::surrogate::{encode_features, AccuracyPredictor, LatencyTable, FEATURE_WIDTH};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// Plain nested loops over the raw weight arrays; deliberately naive.
#[allow(clippy::needless_range_loop)]
fn oracle_forward(p: &AccuracyPredictor, input: &[f64]) -> f64 {
    let mut current: Vec<f64> = input.to_vec();
    let layers = p.layers();
    for (index, layer) in layers.iter().enumerate() {
        let mut next = vec![0.0f64; layer.output_width];
        for (row, cell) in next.iter_mut().enumerate() {
            let mut acc = 0.0;
            for col in 0..layer.input_width {
                acc += layer.weights[row * layer.input_width + col] * current[col];
            }
            acc += layer.bias[row];
            *cell = if index + 1 < layers.len() && acc < 0.0 {
                0.0
            } else {
                acc
            };
        }
        current = next;
    }
    current[0]
}

fn fixture_genotype() -> Genotype {
    random_genotype(&SubSpace::full(), &mut ChaCha8Rng::seed_from_u64(4242))
}

#[test]
fn predictor_fixture_matches_published_vector() {
    let dir = fixture_dir();
    let predictor = load_predictor(&dir.join("predictor_small.txt")).unwrap();
    let expected_text = std::fs::read_to_string(dir.join("predictor_small.expected")).unwrap();
    let mut lines = expected_text.lines();
    let genes_line = lines.next().unwrap().strip_prefix("genotype ").unwrap();
    let genes: Vec<i64> = genes_line.split(' ').map(|t| t.parse().unwrap()).collect();
    let genotype = Genotype::from_flat(&genes).unwrap();
    let expected: f64 = lines
        .next()
        .unwrap()
        .strip_prefix("accuracy ")
        .unwrap()
        .parse()
        .unwrap();

    let got = predictor.predict_accuracy(&genotype).unwrap();
    assert!(
        (got - expected).abs() <= 1e-6,
        "predicted {got}, published {expected}"
    );

    // and the oracle agrees with both, recomputed from the loaded weights
    let oracle = oracle_forward(&predictor, &encode_features(&genotype.decode()));
    assert!((oracle - expected).abs() <= 1e-6);
}

#[test]
#[ignore]
fn regenerate_fixture_files() {
    let dir = fixture_dir();
    std::fs::create_dir_all(&dir).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(1337);
    let predictor = AccuracyPredictor::random(FEATURE_WIDTH, &[8, 8, 8], &mut rng);
    save_predictor(&predictor, &dir.join("predictor_small.txt")).unwrap();

    let genotype = fixture_genotype();
    let expected = oracle_forward(&predictor, &encode_features(&genotype.decode()));
    let genes: Vec<String> = genotype.to_flat().iter().map(|g| g.to_string()).collect();
    std::fs::write(
        dir.join("predictor_small.expected"),
        format!("genotype {}\naccuracy {}\n", genes.join(" "), expected),
    )
    .unwrap();

    // complete latency table with formulaic per-layer costs
    let mut table = LatencyTable::new();
    for r in monas::genotype::resolution_options() {
        let scale = (r as f64 / 224.0).powi(2);
        table.set_stem(r, 0.2 * scale).unwrap();
        table.set_head(r, 0.1 * scale).unwrap();
        for unit in 0..5u8 {
            for slot in 0..4u8 {
                for k in [3u8, 5, 7] {
                    for w in [3u8, 4, 6] {
                        let ms = 0.004 * (k as f64).powi(2) * w as f64 * scale + 0.01 * unit as f64;
                        table.set_entry(r, unit, slot, k, w, ms).unwrap();
                    }
                }
            }
        }
    }
    save_latency_table(&table, &dir.join("latency_small.txt")).unwrap();
}
