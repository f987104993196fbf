use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use cbl_core::datagen::{audit_split, generate, read_dataset_dir, write_dataset_dir, GenConfig};
use cbl_core::encoding::{input_vocab_size, EncodingMode, ModelKind, Vocab};
use cbl_core::experiments::{encode_dataset, run_experiment, ExperimentReport, ExperimentSpec, ModelShape, SizeSpec, MAX_LEN};
use cbl_core::net::{load_checkpoint, save_checkpoint, Model, ModelConfig};
use cbl_core::probestats::{
    filter_responses, format_table, is_correct, load_log, log_template, subgroup_analysis, ttest_vs_chance, Facet,
    FilterSummary, Outcome, TestResult,
};
use cbl_core::scene::{Catalog, Condition, Paradigm};
use cbl_core::trainer::{train as train_model, Schedule};
use cbl_core::{fsio, Exec};

use crate::config::{default_seed, Settings};
use crate::failure::{Failure, InputContext};
use crate::manifest::ManifestBuilder;
use crate::{ExpArgs, GenArgs, ModelArgs, ProbeArgs, ReportArgs, TrainArgs};

const MODEL_KEYS: &[&str] = &[
    "embed_dim",
    "blocks",
    "heads",
    "ff_dim",
    "init_scale",
    "untied_qk",
    "epochs",
    "batch_size",
    "lr",
    "encoding",
];

fn keys(extra: &[&'static str]) -> Vec<&'static str> {
    MODEL_KEYS.iter().chain(extra).copied().collect()
}

fn out_dir(s: &mut Settings, flag: Option<PathBuf>) -> Result<PathBuf, Failure> {
    s.require::<String>("out", flag.map(|p| p.to_string_lossy().into_owned())).map(PathBuf::from)
}

fn seed(s: &mut Settings, flag: Option<u64>) -> Result<u64, Failure> {
    let fallback = default_seed()?;
    s.get("seed", flag, || fallback)
}

fn parsed<T: std::str::FromStr>(key: &str, text: &str) -> Result<T, Failure>
where
    T::Err: std::fmt::Display,
{
    text.parse().map_err(|e| Failure::usage(format!("--{key}: {e}")))
}

struct Training {
    shape: ModelShape,
    schedule: Schedule,
    encoding: EncodingMode,
}

fn training(s: &mut Settings, a: &ModelArgs, default_epochs: usize) -> Result<Training, Failure> {
    let d = ModelShape::default();
    let shape = ModelShape {
        embed_dim: s.get("embed_dim", a.embed_dim, || d.embed_dim)?,
        n_blocks: s.get("blocks", a.blocks, || d.n_blocks)?,
        n_heads: s.get("heads", a.heads, || d.n_heads)?,
        ff_dim: s.get("ff_dim", a.ff_dim, || d.ff_dim)?,
        init_scale: s.get("init_scale", a.init_scale, || d.init_scale)?,
        tie_qk_init: !s.switch("untied_qk", a.untied_qk)?,
    };
    let base = Schedule::new(default_epochs);
    let schedule = Schedule {
        epochs: s.get("epochs", a.epochs, || base.epochs)?,
        batch_size: s.get("batch_size", a.batch_size, || base.batch_size)?,
        learning_rate: s.get("lr", a.lr, || base.learning_rate)?,
        ..base
    };
    let encoding = parsed("encoding", &s.get("encoding", a.encoding.clone(), || "tokens".to_string())?)?;
    Ok(Training {
        shape,
        schedule,
        encoding,
    })
}

pub fn gen(a: GenArgs) -> Result<(), Failure> {
    let started = ManifestBuilder::start("gen");
    let mut s = Settings::load(a.config.as_deref(), &["paradigm", "train", "test", "condition", "reps", "seed", "out"])?;
    let paradigm: Paradigm = parsed("paradigm", &s.require::<String>("paradigm", a.paradigm)?)?;
    let n_train = s.require("train", a.n_train)?;
    let n_test = s.require("test", a.n_test)?;
    let condition: Condition = parsed("condition", &s.get("condition", a.condition, || "T1".to_string())?)?;
    let seed = seed(&mut s, a.seed)?;
    let mut config = GenConfig::new(paradigm, n_train, n_test, seed).with_condition(condition);
    config.repetitions_per_actor_goal = s.get("reps", a.reps, || config.repetitions_per_actor_goal)?;
    let out = out_dir(&mut s, a.out)?;
    config.validate().input()?;

    let catalog = Catalog::default();
    let (train, test) = generate(&config, &catalog).input()?;
    let report = audit_split(&train, &test);
    write_dataset_dir(&out, &train, &test, &report)?;
    let artifacts: Vec<PathBuf> = ["train.jsonl", "test.jsonl", "config.json", "audit.json"].iter().map(|f| out.join(f)).collect();
    started.finish(&out, s.resolved(), vec![seed], &artifacts)?;
    if !report.passed() {
        let failed: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
        return Err(Failure::audit(format!("audit failed: {} (see {})", failed.join(", "), out.join("audit.json").display())));
    }
    println!("wrote {} train / {} test {} instances to {}", train.len(), test.len(), paradigm.name(), out.display());
    Ok(())
}

pub fn train(a: TrainArgs, exec: Exec) -> Result<(), Failure> {
    let started = ManifestBuilder::start("train");
    let mut s = Settings::load(a.config.as_deref(), &keys(&["data", "kind", "from", "eval_every", "seed", "out"]))?;
    let data = PathBuf::from(s.require::<String>("data", a.data.map(|p| p.to_string_lossy().into_owned()))?);
    let kind: ModelKind = parsed("kind", &s.get("kind", a.kind, || "cognitive".to_string())?)?;
    let from = s.get_opt::<String>("from", a.from.map(|p| p.to_string_lossy().into_owned()))?;
    let t = training(&mut s, &a.model, 100)?;
    let eval_every = s.get("eval_every", a.eval_every, || 1)?;
    let seed = seed(&mut s, a.seed)?;
    let out = out_dir(&mut s, a.out)?;
    let schedule = Schedule {
        eval_every,
        shuffle_seed: seed,
        ..t.schedule
    };
    schedule.validate().input()?;

    let (train_set, test_set) = read_dataset_dir(&data).input()?;
    let vocab = Vocab::for_catalog(&train_set.catalog_snapshot);
    let tr = encode_dataset(&train_set, None, kind, t.encoding, &vocab).input()?;
    let te = encode_dataset(&test_set, None, kind, t.encoding, &vocab).input()?;
    let model = match &from {
        Some(path) => load_checkpoint(Path::new(path)).input()?,
        None => {
            let config = ModelConfig {
                vocab_size: input_vocab_size(t.encoding, &vocab),
                embed_dim: t.shape.embed_dim,
                n_blocks: t.shape.n_blocks,
                n_heads: t.shape.n_heads,
                ff_dim: t.shape.ff_dim,
                max_len: MAX_LEN,
                n_classes: 2,
                init_scale: t.shape.init_scale,
                tie_qk_init: t.shape.tie_qk_init,
                seed,
                vocab_hash: Some(vocab.catalog_hash().to_string()),
            };
            Model::init(config).input()?
        }
    };
    let (model, curve) = train_model(model, &tr, &te, &schedule, exec)?;

    std::fs::create_dir_all(&out).map_err(|e| Failure::runtime(format!("{}: {e}", out.display())))?;
    let artifacts = [out.join("model.ckpt"), out.join("curve.csv")];
    save_checkpoint(&model, &artifacts[0])?;
    curve.write_csv(&artifacts[1])?;
    started.finish(&out, s.resolved(), vec![seed], &artifacts)?;
    println!(
        "{} model: test accuracy {:.3} -> {:.3} over {} epochs; wrote {}",
        kind.name(),
        curve.initial_accuracy,
        curve.final_accuracy(),
        schedule.epochs,
        out.display()
    );
    Ok(())
}

fn pick_sizes(spec: &ExperimentSpec, list: &str) -> Result<Vec<SizeSpec>, Failure> {
    let allowed = spec.experiment.allowed_sizes();
    list.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| {
            allowed
                .iter()
                .find(|s| s.name == x || x.parse() == Ok(s.n_train))
                .cloned()
                .ok_or_else(|| {
                    let names: Vec<String> = allowed.iter().map(|s| format!("{} ({})", s.name, s.n_train)).collect();
                    Failure::usage(format!("{} has no size {x:?}; choose from {}", spec.experiment, names.join(", ")))
                })
        })
        .collect()
}

pub fn exp(a: ExpArgs, exec: Exec) -> Result<(), Failure> {
    let started = ManifestBuilder::start("exp");
    let mut s = Settings::load(
        a.config.as_deref(),
        &keys(&[
            "runs",
            "finetune_epochs",
            "concept_epochs",
            "sizes",
            "kinds",
            "threshold",
            "unpaired",
            "seed",
            "out",
        ]),
    )?;
    let mut spec = ExperimentSpec::new(a.experiment);
    let t = training(&mut s, &a.model, spec.schedule.epochs)?;
    spec.model = t.shape;
    spec.encoding = t.encoding;
    spec.schedule = Schedule {
        shuffle_seed: 0,
        ..t.schedule.clone()
    };
    spec.finetune_schedule = Schedule {
        epochs: s.get("finetune_epochs", a.finetune_epochs, || t.schedule.epochs)?,
        ..spec.schedule.clone()
    };
    spec.concept_schedule = Schedule {
        epochs: s.get("concept_epochs", a.concept_epochs, || spec.concept_schedule.epochs)?,
        ..spec.schedule.clone()
    };
    spec.n_runs = s.get("runs", a.runs, || spec.n_runs)?;
    let default_sizes: Vec<String> = spec.sizes.iter().map(|x| x.name.clone()).collect();
    spec.sizes = pick_sizes(&spec, &s.get("sizes", a.sizes, || default_sizes.join(","))?)?;
    let kinds = s.get("kinds", a.kinds, || "cognitive,naive".to_string())?;
    spec.model_kinds = kinds.split(',').map(|k| parsed("kinds", k.trim())).collect::<Result<_, _>>()?;
    spec.threshold = s.get("threshold", a.threshold, || spec.threshold)?;
    spec.paired = !s.switch("unpaired", a.unpaired)?;
    spec.seed = seed(&mut s, a.seed)?;
    let out = out_dir(&mut s, a.out)?;
    spec.validate().input()?;

    let report = run_experiment(&spec, exec)?;
    report.write(&out)?;
    let root = out.join(spec.experiment.name());
    let mut artifacts = vec![root.join("report.json")];
    for r in &report.results {
        let d = root.join(r.model_kind.name()).join(&r.condition);
        artifacts.push(d.join("curve.csv"));
        artifacts.push(d.join("summary.json"));
    }
    started.finish(&root, s.resolved(), report.seeds.clone(), &artifacts)?;
    print!("{}", summary_table(&[report]));
    println!("wrote {}", root.display());
    Ok(())
}

#[derive(Serialize)]
struct ProbeAnalysis {
    counts: Vec<(Outcome, usize)>,
    full: TestResult,
    filter: Option<FilterSummary>,
    filtered: Option<TestResult>,
    by_actor_kind: Vec<(String, TestResult)>,
    by_question_kind: Vec<(String, TestResult)>,
}

fn parse_drop(text: &str) -> Result<BTreeSet<Outcome>, Failure> {
    if text.trim() == "none" {
        return Ok(BTreeSet::new());
    }
    text.split(',')
        .map(|x| x.trim().parse::<Outcome>().map_err(|e| Failure::usage(format!("--drop: {e}"))))
        .collect()
}

pub fn probe(a: ProbeArgs) -> Result<(), Failure> {
    let started = ManifestBuilder::start("probe");
    if let Some(path) = &a.template {
        if a.actors == 0 || a.sequences == 0 {
            return Err(Failure::usage("--actors and --sequences must be positive"));
        }
        fsio::write_atomic(path, log_template(a.actors, a.sequences).as_bytes())?;
        println!("wrote template for {} actors x {} sequences to {}", 2 * a.actors, a.sequences, path.display());
        return Ok(());
    }
    let log_path = a.log.as_deref().expect("clap requires --log without --template");
    let drop = parse_drop(&a.drop)?;
    let log = load_log(log_path).input()?;
    log.audit().input()?;

    let full = ttest_vs_chance(&log, is_correct).input()?;
    let (filter, filtered, analysed) = if drop.is_empty() {
        (None, None, log.clone())
    } else {
        let (kept, summary) = filter_responses(&log, &drop);
        if summary.empty {
            return Err(Failure::usage("every response was dropped"));
        }
        let t = ttest_vs_chance(&kept, is_correct).input()?;
        (Some(summary), Some(t), kept)
    };
    let by_actor_kind: Vec<_> = subgroup_analysis(&analysed, Facet::ActorKind).input()?.into_iter().collect();
    let by_question_kind: Vec<_> = subgroup_analysis(&analysed, Facet::QuestionKind).input()?.into_iter().collect();

    let mut text = String::new();
    let counts: Vec<(Outcome, usize)> = log.counts().into_iter().collect();
    let _ = writeln!(
        text,
        "outcomes: {}",
        counts.iter().map(|(o, n)| format!("{o:?}={n}")).collect::<Vec<_>>().join(" ")
    );
    let _ = writeln!(text, "\nall responses, correct vs rest");
    text.push_str(&format_table(&[("all".into(), full.clone())]));
    if let (Some(f), Some(t)) = (&filter, &filtered) {
        let dropped: usize = f.dropped.values().sum();
        let _ = writeln!(text, "\nafter dropping {dropped} responses, correct vs incorrect");
        text.push_str(&format_table(&[("filtered".into(), t.clone())]));
    }
    let _ = writeln!(text, "\nby actor kind");
    text.push_str(&format_table(&by_actor_kind));
    let _ = writeln!(text, "\nby question");
    text.push_str(&format_table(&by_question_kind));
    print!("{text}");

    if let Some(out) = &a.out {
        let analysis = ProbeAnalysis {
            counts,
            full,
            filter,
            filtered,
            by_actor_kind,
            by_question_kind,
        };
        let artifacts = [out.join("analysis.json"), out.join("analysis.txt")];
        fsio::write_json(&artifacts[0], &analysis)?;
        fsio::write_atomic(&artifacts[1], text.as_bytes())?;
        let config = serde_json::json!({
            "log": log_path.to_string_lossy(),
            "drop": a.drop,
        });
        started.finish(out, config, Vec::new(), &artifacts)?;
    }
    Ok(())
}

fn fmt_epochs(e: Option<usize>) -> String {
    e.map_or_else(|| "-".to_string(), |e| e.to_string())
}

fn summary_table(reports: &[ExperimentReport]) -> String {
    let mut out = format!(
        "{:<6} {:<10} {:<11} {:>4} {:>8} {:>8} {:>7} {:>6}\n",
        "exp", "kind", "condition", "runs", "initial", "final", "sem", "e@thr"
    );
    for rep in reports {
        for r in &rep.results {
            let _ = writeln!(
                out,
                "{:<6} {:<10} {:<11} {:>4} {:>8.3} {:>8.3} {:>7.3} {:>6}",
                rep.experiment.name(),
                r.model_kind.name(),
                r.condition,
                r.stats.n_runs,
                r.summary.initial_mean,
                r.summary.final_mean,
                r.summary.final_sem,
                fmt_epochs(r.summary.mean_epochs_to_threshold)
            );
        }
    }
    out
}

fn find_reports(dir: &Path) -> Result<Vec<PathBuf>, Failure> {
    let direct = dir.join("report.json");
    if direct.is_file() {
        return Ok(vec![direct]);
    }
    let entries = std::fs::read_dir(dir).map_err(|e| Failure::usage(format!("{}: {e}", dir.display())))?;
    let mut found: Vec<PathBuf> = entries
        .filter_map(|e| e.ok())
        .map(|e| e.path().join("report.json"))
        .filter(|p| p.is_file())
        .collect();
    found.sort();
    if found.is_empty() {
        return Err(Failure::usage(format!("no report.json under {}", dir.display())));
    }
    Ok(found)
}

pub fn report(a: ReportArgs) -> Result<(), Failure> {
    let reports = find_reports(&a.dir)?
        .iter()
        .map(|p| ExperimentReport::read(p).input())
        .collect::<Result<Vec<_>, _>>()?;
    print!("{}", summary_table(&reports));
    if let Some(path) = &a.out {
        let mut csv = String::from("experiment,model_kind,condition,n_runs,initial_mean,final_mean,final_sem,mean_epochs_to_threshold,threshold\n");
        for rep in &reports {
            for r in &rep.results {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{:.6},{:.6},{:.6},{},{}",
                    rep.experiment.name(),
                    r.model_kind.name(),
                    r.condition,
                    r.stats.n_runs,
                    r.summary.initial_mean,
                    r.summary.final_mean,
                    r.summary.final_sem,
                    r.summary.mean_epochs_to_threshold.map_or(String::new(), |e| e.to_string()),
                    rep.spec.threshold
                );
            }
        }
        fsio::write_atomic(path, csv.as_bytes())?;
    }
    Ok(())
}
