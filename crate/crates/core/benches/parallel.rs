//! Sequential vs rayon execution of the data-parallel hot paths.
//!
//! Run with `cargo bench -p cbl-core`; build with `--no-default-features`
//! to measure the sequential fallback alone (both policies then coincide).

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use cbl_core::datagen::{audit_split, generate, GenConfig};
use cbl_core::encoding::{input_vocab_size, EncodingMode, ModelKind, Vocab};
use cbl_core::experiments::{encode_dataset, MAX_LEN};
use cbl_core::net::{Model, ModelConfig};
use cbl_core::scene::{Catalog, Paradigm};
use cbl_core::trainer::evaluate;
use cbl_core::Exec;

const POLICIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn setup() -> (Model, Vec<cbl_core::net::Example>) {
    let catalog = Catalog::default();
    let vocab = Vocab::for_catalog(&catalog);
    let (train, _) = generate(&GenConfig::new(Paradigm::FiveFrame, 640, 160, 1), &catalog).unwrap();
    let set = encode_dataset(&train, None, ModelKind::Cognitive, EncodingMode::Tokens, &vocab).unwrap();
    let config = ModelConfig {
        embed_dim: 32,
        ff_dim: 64,
        ..ModelConfig::new(input_vocab_size(EncodingMode::Tokens, &vocab), MAX_LEN)
    };
    (Model::init(config).unwrap(), set.examples)
}

fn batch_gradients(c: &mut Criterion) {
    let (model, examples) = setup();
    let mut g = c.benchmark_group("batch_gradients");
    for batch in [32usize, 128] {
        for (name, exec) in POLICIES {
            g.bench_with_input(BenchmarkId::new(name, batch), &batch, |b, &n| {
                b.iter(|| model.loss_and_grads(&examples[..n], exec).unwrap())
            });
        }
    }
    g.finish();
}

fn evaluation(c: &mut Criterion) {
    let (model, examples) = setup();
    let mut g = c.benchmark_group("evaluate_640");
    for (name, exec) in POLICIES {
        g.bench_function(name, |b| b.iter(|| evaluate(&model, &examples, exec).unwrap()));
    }
    g.finish();
}

fn generation(c: &mut Criterion) {
    let catalog = Catalog::default();
    let mut g = c.benchmark_group("generate_and_audit_runs");
    g.sample_size(20);
    for (name, exec) in POLICIES {
        g.bench_function(name, |b| {
            b.iter(|| {
                exec.map(8, |seed| {
                    let (tr, te) = generate(&GenConfig::new(Paradigm::SevenFrame, 640, 160, seed as u64), &catalog).unwrap();
                    audit_split(&tr, &te).passed()
                })
            })
        });
    }
    g.finish();
}

criterion_group!(benches, batch_gradients, evaluation, generation);
criterion_main!(benches);
