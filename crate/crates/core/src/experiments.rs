//! End-to-end protocols for the four experiments.
//!
//! Every run derives its data, initialisation and shuffling seeds from one run
//! seed. With `paired` set, the cognitive and naive arms of a run see the same
//! generated instances and start from the same parameters, so only the
//! encoding differs between them.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::datagen::{audit_split, generate, Dataset, GenConfig};
use crate::encoding::{encode_for_model, input_vocab_size, ConceptAnnotation, EncodingMode, ModelKind, Provenance, Vocab};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::fsio;
use crate::net::{Example, Model, ModelConfig};
use crate::rng::derive_named;
use crate::scene::{Animacy, Catalog, CatalogSizes, Condition, Label, Paradigm, ParadigmInstance};
use crate::trainer::{finetune, run_seed, train, Curve, CurveStats, EncodedSet, Schedule};

/// Positional capacity of every experiment model; the longest encoding
/// (seven frames with concept markers) needs 56 positions.
pub const MAX_LEN: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Exp1,
    Exp2,
    Exp3,
    Exp4,
}

impl Experiment {
    pub const ALL: [Experiment; 4] = [Experiment::Exp1, Experiment::Exp2, Experiment::Exp3, Experiment::Exp4];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Exp1 => "exp1",
            Experiment::Exp2 => "exp2",
            Experiment::Exp3 => "exp3",
            Experiment::Exp4 => "exp4",
        }
    }

    /// Dataset sizes the protocol defines.
    pub fn allowed_sizes(self) -> Vec<SizeSpec> {
        match self {
            Experiment::Exp1 => vec![SizeSpec::new("small", 320, 80), SizeSpec::new("large", 1280, 320)],
            Experiment::Exp2 => vec![SizeSpec::new("T1", 640, 160)],
            Experiment::Exp3 => vec![
                SizeSpec::new("size-640", 640, 160),
                SizeSpec::new("size-1280", 1280, 320),
                SizeSpec::new("size-2560", 2560, 640),
            ],
            Experiment::Exp4 => vec![SizeSpec::new("T1", 320, 80)],
        }
    }

    /// Condition names reported per model kind.
    pub fn conditions(self, kind: ModelKind, sizes: &[SizeSpec]) -> Vec<String> {
        match (self, kind) {
            (Experiment::Exp1, _) => sizes.iter().map(|s| s.name.clone()).collect(),
            (Experiment::Exp2, _) => vec!["T1".into(), "T1-T1".into(), "T1-T2".into()],
            (Experiment::Exp3, ModelKind::Cognitive) => vec!["concept".into(), "downstream".into()],
            (Experiment::Exp3, ModelKind::Naive) => sizes.iter().map(|s| s.name.clone()).collect(),
            (Experiment::Exp4, _) => vec!["T1".into(), "T2".into()],
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Experiment, String> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown experiment {s:?} (expected exp1..exp4)"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeSpec {
    pub name: String,
    pub n_train: usize,
    pub n_test: usize,
}

impl SizeSpec {
    pub fn new(name: &str, n_train: usize, n_test: usize) -> SizeSpec {
        SizeSpec {
            name: name.to_string(),
            n_train,
            n_test,
        }
    }
}

/// Architecture knobs shared by every model of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelShape {
    pub embed_dim: usize,
    pub n_blocks: usize,
    pub n_heads: usize,
    pub ff_dim: usize,
    pub init_scale: f64,
    pub tie_qk_init: bool,
}

impl Default for ModelShape {
    fn default() -> ModelShape {
        let c = ModelConfig::new(1, 1);
        ModelShape {
            embed_dim: c.embed_dim,
            n_blocks: c.n_blocks,
            n_heads: c.n_heads,
            ff_dim: c.ff_dim,
            init_scale: c.init_scale,
            tie_qk_init: c.tie_qk_init,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub experiment: Experiment,
    pub model_kinds: Vec<ModelKind>,
    /// Main dataset sizes: Exp-1 sizes, the Exp-2/Exp-4 task size, or the
    /// Exp-3 naive sizes.
    pub sizes: Vec<SizeSpec>,
    /// Exp-3 cognitive downstream size.
    pub downstream: SizeSpec,
    /// Exp-3 animacy pre-training size.
    pub concept: SizeSpec,
    pub schedule: Schedule,
    /// Schedule of the second phase (Exp-2 and Exp-4 retraining).
    pub finetune_schedule: Schedule,
    /// Schedule of the Exp-3 animacy phase.
    pub concept_schedule: Schedule,
    pub n_runs: usize,
    pub encoding: EncodingMode,
    pub model: ModelShape,
    pub seed: u64,
    pub paired: bool,
    pub threshold: f64,
    pub catalog: CatalogSizes,
    pub repetitions_per_actor_goal: usize,
}

impl ExperimentSpec {
    /// Desk-scale defaults for `experiment`.
    pub fn new(experiment: Experiment) -> ExperimentSpec {
        let epochs = match experiment {
            Experiment::Exp1 => 500,
            Experiment::Exp2 | Experiment::Exp3 => 300,
            Experiment::Exp4 => 100,
        };
        let schedule = Schedule::new(epochs);
        ExperimentSpec {
            experiment,
            model_kinds: vec![ModelKind::Cognitive, ModelKind::Naive],
            sizes: experiment.allowed_sizes(),
            downstream: SizeSpec::new("downstream", 640, 160),
            concept: SizeSpec::new("concept", 320, 80),
            finetune_schedule: schedule.clone(),
            concept_schedule: Schedule::new(50),
            schedule,
            n_runs: 15,
            encoding: EncodingMode::Tokens,
            model: ModelShape::default(),
            seed: 0,
            paired: true,
            threshold: 0.95,
            catalog: CatalogSizes::default(),
            repetitions_per_actor_goal: 10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::BadConfig(m));
        if self.model_kinds.is_empty() {
            return bad("no model kinds selected".into());
        }
        if self.sizes.is_empty() {
            return bad("no dataset sizes selected".into());
        }
        let allowed = self.experiment.allowed_sizes();
        for s in &self.sizes {
            if !allowed.contains(s) {
                return bad(format!(
                    "{} does not define size {} ({}/{}); allowed: {}",
                    self.experiment,
                    s.name,
                    s.n_train,
                    s.n_test,
                    allowed.iter().map(|a| format!("{} {}/{}", a.name, a.n_train, a.n_test)).collect::<Vec<_>>().join(", ")
                ));
            }
        }
        if self.experiment == Experiment::Exp3 {
            if (self.downstream.n_train, self.downstream.n_test) != (640, 160) {
                return bad("exp3 downstream size is 640/160".into());
            }
            if (self.concept.n_train, self.concept.n_test) != (320, 80) {
                return bad("exp3 concept pre-training size is 320/80".into());
            }
        }
        if self.n_runs < 2 {
            return bad(format!("need at least 2 runs, got {}", self.n_runs));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return bad(format!("threshold {} outside [0, 1]", self.threshold));
        }
        self.schedule.validate()?;
        self.finetune_schedule.validate()?;
        self.concept_schedule.validate()?;
        self.model_config(&Vocab::for_catalog(&Catalog::new(self.catalog)), 0).validate()
    }

    /// SHA-256 of the canonical JSON form of the spec.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("spec serialises");
        hex::encode(Sha256::digest(&json))
    }

    /// Seed of every run, in run order.
    pub fn run_seeds(&self) -> Vec<u64> {
        (0..self.n_runs).map(|i| run_seed(self.seed, i)).collect()
    }

    fn model_config(&self, vocab: &Vocab, seed: u64) -> ModelConfig {
        ModelConfig {
            vocab_size: input_vocab_size(self.encoding, vocab),
            embed_dim: self.model.embed_dim,
            n_blocks: self.model.n_blocks,
            n_heads: self.model.n_heads,
            ff_dim: self.model.ff_dim,
            max_len: MAX_LEN,
            n_classes: 2,
            init_scale: self.model.init_scale,
            tie_qk_init: self.model.tie_qk_init,
            seed,
            vocab_hash: Some(vocab.catalog_hash().to_string()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub initial_mean: f64,
    pub final_mean: f64,
    pub final_sem: f64,
    /// First epoch at which the mean curve reaches the threshold.
    pub mean_epochs_to_threshold: Option<usize>,
    pub epochs_to_threshold: Vec<Option<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub model_kind: ModelKind,
    pub condition: String,
    pub stats: CurveStats,
    pub summary: Summary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: Experiment,
    pub spec: ExperimentSpec,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub results: Vec<ConditionResult>,
    /// Exp-3: fraction of downstream instances whose learned animacy
    /// annotation was wrong, per run.
    pub annotation_error_rates: Vec<f64>,
}

impl ExperimentReport {
    pub fn get(&self, kind: ModelKind, condition: &str) -> Option<&ConditionResult> {
        self.results.iter().find(|r| r.model_kind == kind && r.condition == condition)
    }

    /// Writes `<dir>/<exp>/report.json` and, per condition,
    /// `<dir>/<exp>/<kind>/<condition>/{curve.csv,summary.json}`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let root = dir.join(self.experiment.name());
        for r in &self.results {
            let d = root.join(r.model_kind.name()).join(&r.condition);
            std::fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
            r.stats.write_csv(&d.join("curve.csv"), &r.condition, r.model_kind.name())?;
            fsio::write_json(&d.join("summary.json"), &r.summary)?;
        }
        fsio::write_json(&root.join("report.json"), self)
    }

    pub fn read(path: &Path) -> Result<ExperimentReport> {
        fsio::read_json(path)
    }
}

/// A FiveFrame dataset carrying concept annotations predicted by a model.
#[derive(Clone, Debug, PartialEq)]
pub struct AnnotatedDataset {
    pub dataset: Dataset,
    pub annotations: Vec<ConceptAnnotation>,
    /// Fraction of annotations that disagree with the ground truth.
    pub error_rate: f64,
}

/// The motion prefix of a seven-frame instance as a stand-alone
/// two-frame instance.
pub fn motion_prefix(instance: &ParadigmInstance) -> Result<ParadigmInstance> {
    if instance.paradigm != Paradigm::SevenFrame || instance.frames.len() != 7 {
        return Err(Error::IncompatibleParadigm(format!(
            "expected a seven-frame instance, got {}",
            instance.paradigm.name()
        )));
    }
    Ok(ParadigmInstance {
        paradigm: Paradigm::TwoFrameMotion,
        frames: instance.frames[..2].to_vec(),
        goal: None,
        interaction_side: None,
        label: Label::Animacy(instance.animacy),
        ..instance.clone()
    })
}

/// Strips the motion prefix of every seven-frame instance and annotates the
/// remaining five frames with the animacy `concept_model` predicts from that
/// prefix. Wrong predictions are kept, not corrected.
pub fn annotate_with_learned_concept(
    dataset: &Dataset,
    concept_model: &Model,
    vocab: &Vocab,
    mode: EncodingMode,
    exec: Exec,
) -> Result<AnnotatedDataset> {
    if dataset.config.paradigm != Paradigm::SevenFrame {
        return Err(Error::IncompatibleParadigm(format!(
            "annotation needs seven-frame data, got {}",
            dataset.config.paradigm.name()
        )));
    }
    let predicted = exec.try_map(dataset.len(), |i| {
        let prefix = motion_prefix(&dataset.instances[i])?;
        let input = encode_for_model(&prefix, None, ModelKind::Naive, mode, vocab)?;
        Ok::<_, Error>(Animacy::from_index(concept_model.predict(&input)?))
    })?;
    let mut instances = Vec::with_capacity(dataset.len());
    let mut annotations = Vec::with_capacity(dataset.len());
    let mut wrong = 0usize;
    for (inst, animacy) in dataset.instances.iter().zip(predicted) {
        wrong += (animacy != inst.animacy) as usize;
        instances.push(ParadigmInstance {
            paradigm: Paradigm::FiveFrame,
            frames: inst.frames[2..].to_vec(),
            ..inst.clone()
        });
        annotations.push(ConceptAnnotation::learned(animacy));
    }
    let mut config = dataset.config.clone();
    config.paradigm = Paradigm::FiveFrame;
    Ok(AnnotatedDataset {
        dataset: Dataset {
            instances,
            split: dataset.split,
            config,
            catalog_snapshot: dataset.catalog_snapshot.clone(),
        },
        annotations,
        error_rate: if dataset.is_empty() { 0.0 } else { wrong as f64 / dataset.len() as f64 },
    })
}

/// Encodes a dataset for one model kind. Cognitive encodings use `annotations`
/// when given and ground truth otherwise.
pub fn encode_dataset(
    dataset: &Dataset,
    annotations: Option<&[ConceptAnnotation]>,
    kind: ModelKind,
    mode: EncodingMode,
    vocab: &Vocab,
) -> Result<EncodedSet> {
    if let Some(a) = annotations {
        if a.len() != dataset.len() {
            return Err(Error::MissingAnnotation(format!(
                "{} annotations for {} instances",
                a.len(),
                dataset.len()
            )));
        }
    }
    let examples = dataset
        .instances
        .iter()
        .enumerate()
        .map(|(i, inst)| {
            let ann = annotations.map_or_else(|| ConceptAnnotation::ground_truth(inst), |a| a[i]);
            let label = match inst.paradigm {
                Paradigm::TwoFrameMotion => Label::Animacy(inst.animacy),
                _ => inst.label,
            };
            Ok(Example::new(encode_for_model(inst, Some(&ann), kind, mode, vocab)?, label.class_index()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EncodedSet::new(examples, vocab.catalog_hash()))
}

struct RunOutput {
    curves: BTreeMap<(ModelKind, String), Curve>,
    annotation_error_rate: Option<f64>,
}

struct RunContext<'a> {
    spec: &'a ExperimentSpec,
    catalog: &'a Catalog,
    vocab: &'a Vocab,
    seed: u64,
    exec: Exec,
}

impl RunContext<'_> {
    fn data_seed(&self, kind: ModelKind, tag: &str) -> u64 {
        if self.spec.paired {
            derive_named(self.seed, &format!("data/{tag}"))
        } else {
            derive_named(self.seed, &format!("data/{tag}/{}", kind.name()))
        }
    }

    fn model(&self, kind: ModelKind, tag: &str) -> Result<Model> {
        let seed = if self.spec.paired {
            derive_named(self.seed, &format!("model/{tag}"))
        } else {
            derive_named(self.seed, &format!("model/{tag}/{}", kind.name()))
        };
        Model::init(self.spec.model_config(self.vocab, seed))
    }

    fn schedule(&self, base: &Schedule, tag: &str) -> Schedule {
        Schedule {
            shuffle_seed: derive_named(self.seed, &format!("shuffle/{tag}")),
            ..base.clone()
        }
    }

    fn generate(&self, paradigm: Paradigm, size: &SizeSpec, condition: Condition, seed: u64) -> Result<(Dataset, Dataset)> {
        let mut g = GenConfig::new(paradigm, size.n_train, size.n_test, seed).with_condition(condition);
        g.repetitions_per_actor_goal = self.spec.repetitions_per_actor_goal;
        let (train, test) = generate(&g, self.catalog)?;
        let report = audit_split(&train, &test);
        if !report.passed() {
            let names: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
            return Err(Error::BadGenConfig(format!("generated data failed audit: {}", names.join(", "))));
        }
        Ok((train, test))
    }

    fn encode(&self, pair: &(Dataset, Dataset), kind: ModelKind) -> Result<(EncodedSet, EncodedSet)> {
        let mode = self.spec.encoding;
        Ok((
            encode_dataset(&pair.0, None, kind, mode, self.vocab)?,
            encode_dataset(&pair.1, None, kind, mode, self.vocab)?,
        ))
    }
}

fn exp1_run(ctx: &RunContext) -> Result<RunOutput> {
    let mut curves = BTreeMap::new();
    for size in &ctx.spec.sizes {
        for &kind in &ctx.spec.model_kinds {
            let data = ctx.generate(Paradigm::ThreeFrame, size, Condition::T1, ctx.data_seed(kind, &size.name))?;
            let (tr, te) = ctx.encode(&data, kind)?;
            let (_, c) = train(ctx.model(kind, &size.name)?, &tr, &te, &ctx.schedule(&ctx.spec.schedule, &size.name), ctx.exec)?;
            curves.insert((kind, size.name.clone()), c);
        }
    }
    Ok(RunOutput {
        curves,
        annotation_error_rate: None,
    })
}

/// Train on T1 and then retrain on either T1 again or T2 (Exp-2), or train on
/// T1 and retrain on T2 (Exp-4).
fn transfer_run(ctx: &RunContext, paradigm: Paradigm, control: bool) -> Result<RunOutput> {
    let size = &ctx.spec.sizes[0];
    let second = ctx.schedule(&ctx.spec.finetune_schedule, "second");
    let mut curves = BTreeMap::new();
    for &kind in &ctx.spec.model_kinds {
        let t1 = ctx.generate(paradigm, size, Condition::T1, ctx.data_seed(kind, "T1"))?;
        let t2 = ctx.generate(paradigm, size, Condition::T2, ctx.data_seed(kind, "T2"))?;
        let (t1_train, t1_test) = ctx.encode(&t1, kind)?;
        let (t2_train, t2_test) = ctx.encode(&t2, kind)?;
        let (model, c1) = train(ctx.model(kind, "T1")?, &t1_train, &t1_test, &ctx.schedule(&ctx.spec.schedule, "T1"), ctx.exec)?;
        curves.insert((kind, "T1".to_string()), c1);
        if control {
            let (_, c) = finetune(model.clone(), &t1_train, &t1_test, &second, ctx.exec)?;
            curves.insert((kind, "T1-T1".to_string()), c);
            let (_, c) = finetune(model, &t2_train, &t2_test, &second, ctx.exec)?;
            curves.insert((kind, "T1-T2".to_string()), c);
        } else {
            let (_, c) = finetune(model, &t2_train, &t2_test, &second, ctx.exec)?;
            curves.insert((kind, "T2".to_string()), c);
        }
    }
    Ok(RunOutput {
        curves,
        annotation_error_rate: None,
    })
}

fn exp3_run(ctx: &RunContext) -> Result<RunOutput> {
    let spec = ctx.spec;
    let mut curves = BTreeMap::new();
    let mut annotation_error_rate = None;
    for &kind in &spec.model_kinds {
        match kind {
            ModelKind::Naive => {
                for size in &spec.sizes {
                    let data = ctx.generate(Paradigm::SevenFrame, size, Condition::T1, ctx.data_seed(kind, &size.name))?;
                    let (tr, te) = ctx.encode(&data, kind)?;
                    let (_, c) = train(ctx.model(kind, "downstream")?, &tr, &te, &ctx.schedule(&spec.schedule, &size.name), ctx.exec)?;
                    curves.insert((kind, size.name.clone()), c);
                }
            }
            ModelKind::Cognitive => {
                // stage 1: animacy from self-propelled motion
                let motion = ctx.generate(Paradigm::TwoFrameMotion, &spec.concept, Condition::T1, ctx.data_seed(kind, "concept"))?;
                let (tr, te) = ctx.encode(&motion, ModelKind::Naive)?;
                let (concept, c) = train(ctx.model(kind, "concept")?, &tr, &te, &ctx.schedule(&spec.concept_schedule, "concept"), ctx.exec)?;
                curves.insert((kind, "concept".to_string()), c);

                // stage 2: the naive 640/160 data (same seed when paired),
                // annotated by the concept model
                let tag = "size-640";
                let seven = ctx.generate(Paradigm::SevenFrame, &spec.downstream, Condition::T1, ctx.data_seed(kind, tag))?;
                let train_ann = annotate_with_learned_concept(&seven.0, &concept, ctx.vocab, spec.encoding, ctx.exec)?;
                let test_ann = annotate_with_learned_concept(&seven.1, &concept, ctx.vocab, spec.encoding, ctx.exec)?;
                debug_assert!(train_ann.annotations.iter().all(|a| a.provenance == Provenance::LearnedModel));
                let n = (train_ann.dataset.len() + test_ann.dataset.len()) as f64;
                annotation_error_rate = Some(
                    (train_ann.error_rate * train_ann.dataset.len() as f64 + test_ann.error_rate * test_ann.dataset.len() as f64) / n,
                );
                let tr = encode_dataset(&train_ann.dataset, Some(&train_ann.annotations), kind, spec.encoding, ctx.vocab)?;
                let te = encode_dataset(&test_ann.dataset, Some(&test_ann.annotations), kind, spec.encoding, ctx.vocab)?;
                let (_, c) = train(ctx.model(kind, "downstream")?, &tr, &te, &ctx.schedule(&spec.schedule, tag), ctx.exec)?;
                curves.insert((kind, "downstream".to_string()), c);
            }
        }
    }
    Ok(RunOutput {
        curves,
        annotation_error_rate,
    })
}

/// Regenerates the raw train/test datasets one run of `spec` uses, keyed by
/// `<model kind>/<tag>`. Exp-3's cognitive downstream data is the seven-frame
/// data before annotation.
pub fn run_datasets(spec: &ExperimentSpec, run: usize) -> Result<BTreeMap<String, (Dataset, Dataset)>> {
    spec.validate()?;
    let catalog = Catalog::new(spec.catalog);
    let vocab = Vocab::for_catalog(&catalog);
    let ctx = RunContext {
        spec,
        catalog: &catalog,
        vocab: &vocab,
        seed: run_seed(spec.seed, run),
        exec: Exec::Parallel,
    };
    let mut out = BTreeMap::new();
    for &kind in &spec.model_kinds {
        let mut put = |tag: &str, paradigm: Paradigm, size: &SizeSpec, condition: Condition| -> Result<()> {
            let data = ctx.generate(paradigm, size, condition, ctx.data_seed(kind, tag))?;
            out.insert(format!("{}/{tag}", kind.name()), data);
            Ok(())
        };
        match (spec.experiment, kind) {
            (Experiment::Exp1, _) => {
                for size in &spec.sizes {
                    put(&size.name, Paradigm::ThreeFrame, size, Condition::T1)?;
                }
            }
            (Experiment::Exp2 | Experiment::Exp4, _) => {
                let paradigm = if spec.experiment == Experiment::Exp2 { Paradigm::FiveFrame } else { Paradigm::OneFrameGoal };
                put("T1", paradigm, &spec.sizes[0], Condition::T1)?;
                put("T2", paradigm, &spec.sizes[0], Condition::T2)?;
            }
            (Experiment::Exp3, ModelKind::Naive) => {
                for size in &spec.sizes {
                    put(&size.name, Paradigm::SevenFrame, size, Condition::T1)?;
                }
            }
            (Experiment::Exp3, ModelKind::Cognitive) => {
                put("concept", Paradigm::TwoFrameMotion, &spec.concept, Condition::T1)?;
                put("size-640", Paradigm::SevenFrame, &spec.downstream, Condition::T1)?;
            }
        }
    }
    Ok(out)
}

/// Runs an experiment end to end: `n_runs` seeded repetitions, each
/// regenerating its data and models.
pub fn run_experiment(spec: &ExperimentSpec, exec: Exec) -> Result<ExperimentReport> {
    spec.validate()?;
    let catalog = Catalog::new(spec.catalog);
    catalog.validate()?;
    let vocab = Vocab::for_catalog(&catalog);
    let seeds = spec.run_seeds();
    let outputs = exec.try_map(spec.n_runs, |i| {
        let ctx = RunContext {
            spec,
            catalog: &catalog,
            vocab: &vocab,
            seed: seeds[i],
            exec,
        };
        match spec.experiment {
            Experiment::Exp1 => exp1_run(&ctx),
            Experiment::Exp2 => transfer_run(&ctx, Paradigm::FiveFrame, true),
            Experiment::Exp3 => exp3_run(&ctx),
            Experiment::Exp4 => transfer_run(&ctx, Paradigm::OneFrameGoal, false),
        }
    })?;
    let annotation_error_rates = outputs.iter().filter_map(|o| o.annotation_error_rate).collect();
    let mut by_key: BTreeMap<(ModelKind, String), Vec<Curve>> = BTreeMap::new();
    for o in outputs {
        for (k, c) in o.curves {
            by_key.entry(k).or_default().push(c);
        }
    }
    let mut results = Vec::new();
    for &kind in &spec.model_kinds {
        for cond in spec.experiment.conditions(kind, &spec.sizes) {
            let curves = by_key.remove(&(kind, cond.clone())).ok_or_else(|| Error::BadConfig(format!("missing curve {}/{cond}", kind.name())))?;
            let stats = CurveStats::from_curves(curves)?;
            let summary = Summary {
                initial_mean: stats.initial_mean(),
                final_mean: stats.final_mean(),
                final_sem: *stats.sem.last().expect("non-empty"),
                mean_epochs_to_threshold: stats.mean_epochs_to(spec.threshold),
                epochs_to_threshold: stats.runs.iter().map(|c| c.epochs_to(spec.threshold)).collect(),
            };
            results.push(ConditionResult {
                model_kind: kind,
                condition: cond,
                stats,
                summary,
            });
        }
    }
    Ok(ExperimentReport {
        experiment: spec.experiment,
        spec: spec.clone(),
        config_hash: spec.config_hash(),
        seeds,
        results,
        annotation_error_rates,
    })
}

pub fn run_exp1(spec: &ExperimentSpec, exec: Exec) -> Result<ExperimentReport> {
    expect_experiment(spec, Experiment::Exp1)?;
    run_experiment(spec, exec)
}

pub fn run_exp2(spec: &ExperimentSpec, exec: Exec) -> Result<ExperimentReport> {
    expect_experiment(spec, Experiment::Exp2)?;
    run_experiment(spec, exec)
}

pub fn run_exp3(spec: &ExperimentSpec, exec: Exec) -> Result<ExperimentReport> {
    expect_experiment(spec, Experiment::Exp3)?;
    run_experiment(spec, exec)
}

pub fn run_exp4(spec: &ExperimentSpec, exec: Exec) -> Result<ExperimentReport> {
    expect_experiment(spec, Experiment::Exp4)?;
    run_experiment(spec, exec)
}

fn expect_experiment(spec: &ExperimentSpec, want: Experiment) -> Result<()> {
    if spec.experiment != want {
        return Err(Error::BadConfig(format!("spec is for {}, not {want}", spec.experiment)));
    }
    Ok(())
}
