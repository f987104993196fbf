use cbl_core::datagen::{audit_split, generate, read_dataset_dir, write_dataset_dir, GenConfig};
use cbl_core::encoding::{input_vocab_size, EncodingMode, ModelKind, Vocab};
use cbl_core::experiments::{encode_dataset, MAX_LEN};
use cbl_core::net::{load_checkpoint, save_checkpoint, Model, ModelConfig};
use cbl_core::scene::{Catalog, Paradigm};
use cbl_core::trainer::{evaluate, finetune, train, Schedule};
use cbl_core::Exec;

#[test]
fn dataset_dir_round_trip_then_train_and_reload() {
    let dir = tempfile::tempdir().unwrap();
    let catalog = Catalog::default();
    let (train_ds, test_ds) = generate(&GenConfig::new(Paradigm::ThreeFrame, 64, 16, 5), &catalog).unwrap();
    let audit = audit_split(&train_ds, &test_ds);
    assert!(audit.passed());
    write_dataset_dir(dir.path(), &train_ds, &test_ds, &audit).unwrap();
    let (train_back, test_back) = read_dataset_dir(dir.path()).unwrap();
    assert_eq!(train_back, train_ds);
    assert_eq!(test_back, test_ds);

    let vocab = Vocab::for_catalog(&catalog);
    let enc = |ds| encode_dataset(ds, None, ModelKind::Cognitive, EncodingMode::Tokens, &vocab).unwrap();
    let (train_set, test_set) = (enc(&train_back), enc(&test_back));
    let config = ModelConfig {
        embed_dim: 8,
        n_heads: 2,
        ff_dim: 16,
        vocab_hash: Some(vocab.catalog_hash().to_string()),
        ..ModelConfig::new(input_vocab_size(EncodingMode::Tokens, &vocab), MAX_LEN)
    };
    let (model, curve) = train(Model::init(config).unwrap(), &train_set, &test_set, &Schedule::new(2), Exec::Sequential).unwrap();
    assert_eq!(curve.epochs, vec![1, 2]);

    let path = dir.path().join("model.ckpt");
    save_checkpoint(&model, &path).unwrap();
    let loaded = load_checkpoint(&path).unwrap();
    assert_eq!(loaded.params(), model.params());
    let acc = evaluate(&loaded, &test_set.examples, Exec::Parallel).unwrap();
    assert_eq!(acc, curve.final_accuracy());

    // fine-tuning starts where the checkpoint left off
    let (_, again) = finetune(loaded, &train_set, &test_set, &Schedule::new(1), Exec::Sequential).unwrap();
    assert_eq!(again.initial_accuracy, acc);
}
