//! Training, evaluation and fine-tuning loops, repeated seeded runs and
//! pointwise mean/SEM aggregation of accuracy curves.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::fsio;
use crate::net::{Adam, Example, Model};
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub eval_every: usize,
    pub shuffle_seed: u64,
}

impl Schedule {
    pub fn new(epochs: usize) -> Schedule {
        Schedule {
            epochs,
            batch_size: 32,
            learning_rate: 3e-4,
            eval_every: 1,
            shuffle_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::BadConfig("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::BadConfig("batch_size must be at least 1".into()));
        }
        if self.eval_every == 0 || !self.epochs.is_multiple_of(self.eval_every) {
            return Err(Error::BadConfig(format!(
                "eval_every {} must divide epochs {}",
                self.eval_every, self.epochs
            )));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::BadConfig(format!("learning rate {} must be positive", self.learning_rate)));
        }
        Ok(())
    }
}

/// Encoded examples tagged with the vocabulary fingerprint they were built from.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedSet {
    pub examples: Vec<Example>,
    pub vocab_hash: String,
}

impl EncodedSet {
    pub fn new(examples: Vec<Example>, vocab_hash: impl Into<String>) -> EncodedSet {
        EncodedSet {
            examples,
            vocab_hash: vocab_hash.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}

/// Test accuracy before training (epoch 0) and after every `eval_every` epochs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub initial_accuracy: f64,
    pub epochs: Vec<usize>,
    pub test_accuracy: Vec<f64>,
    pub train_loss: Vec<f64>,
}

impl Curve {
    /// `(epoch, accuracy)` pairs starting with epoch 0.
    pub fn points(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        std::iter::once((0, self.initial_accuracy)).chain(self.epochs.iter().copied().zip(self.test_accuracy.iter().copied()))
    }

    pub fn final_accuracy(&self) -> f64 {
        self.test_accuracy.last().copied().unwrap_or(self.initial_accuracy)
    }

    /// First recorded epoch whose accuracy reaches `threshold`.
    pub fn epochs_to(&self, threshold: f64) -> Option<usize> {
        self.points().find(|&(_, a)| a >= threshold).map(|(e, _)| e)
    }

    /// Writes `epoch,test_acc,train_loss`; the epoch-0 row has no loss.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("epoch,test_acc,train_loss\n");
        out.push_str(&format!("0,{:.6},\n", self.initial_accuracy));
        for ((e, a), l) in self.epochs.iter().zip(&self.test_accuracy).zip(&self.train_loss) {
            out.push_str(&format!("{e},{a:.6},{l:.6}\n"));
        }
        fsio::write_atomic(path, out.as_bytes())
    }
}

/// Pointwise statistics over repeated runs, epoch 0 included.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveStats {
    pub epochs: Vec<usize>,
    pub mean: Vec<f64>,
    pub sem: Vec<f64>,
    pub n_runs: usize,
    pub runs: Vec<Curve>,
}

impl CurveStats {
    /// SEM uses the n−1 sample standard deviation.
    pub fn from_curves(runs: Vec<Curve>) -> Result<CurveStats> {
        if runs.len() < 2 {
            return Err(Error::BadConfig(format!("need at least 2 runs for a SEM, got {}", runs.len())));
        }
        let epochs: Vec<usize> = runs[0].points().map(|(e, _)| e).collect();
        if runs.iter().any(|c| !c.points().map(|(e, _)| e).eq(epochs.iter().copied())) {
            return Err(Error::BadConfig("runs have different evaluation grids".into()));
        }
        let n = runs.len() as f64;
        let table: Vec<Vec<f64>> = runs.iter().map(|c| c.points().map(|(_, a)| a).collect()).collect();
        let mut mean = Vec::with_capacity(epochs.len());
        let mut sem = Vec::with_capacity(epochs.len());
        for i in 0..epochs.len() {
            let m = table.iter().map(|r| r[i]).sum::<f64>() / n;
            let var = table.iter().map(|r| (r[i] - m).powi(2)).sum::<f64>() / (n - 1.0);
            mean.push(m);
            sem.push((var / n).sqrt());
        }
        Ok(CurveStats {
            epochs,
            mean,
            sem,
            n_runs: runs.len(),
            runs,
        })
    }

    pub fn final_mean(&self) -> f64 {
        *self.mean.last().expect("at least epoch 0")
    }

    pub fn initial_mean(&self) -> f64 {
        self.mean[0]
    }

    /// First epoch at which the mean curve reaches `threshold`.
    pub fn mean_epochs_to(&self, threshold: f64) -> Option<usize> {
        self.epochs.iter().zip(&self.mean).find(|&(_, &m)| m >= threshold).map(|(&e, _)| e)
    }

    pub fn final_accuracies(&self) -> Vec<f64> {
        self.runs.iter().map(Curve::final_accuracy).collect()
    }

    /// Writes `epoch,mean_acc,sem,n_runs,condition,model_kind`.
    pub fn write_csv(&self, path: &Path, condition: &str, model_kind: &str) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let row_err = |e: csv::Error| Error::io(path, std::io::Error::other(e));
        w.write_record(["epoch", "mean_acc", "sem", "n_runs", "condition", "model_kind"]).map_err(row_err)?;
        for i in 0..self.epochs.len() {
            w.write_record([
                self.epochs[i].to_string(),
                format!("{:.6}", self.mean[i]),
                format!("{:.6}", self.sem[i]),
                self.n_runs.to_string(),
                condition.to_string(),
                model_kind.to_string(),
            ])
            .map_err(row_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?;
        fsio::write_atomic(path, &bytes)
    }
}

fn check_vocab(model: &Model, sets: &[&EncodedSet]) -> Result<()> {
    for s in sets {
        if let Some(h) = &model.config().vocab_hash {
            if *h != s.vocab_hash {
                return Err(Error::VocabMismatch(format!("model vocab {h}, data vocab {}", s.vocab_hash)));
            }
        }
        if s.vocab_hash != sets[0].vocab_hash {
            return Err(Error::VocabMismatch(format!(
                "data encoded with vocabs {} and {}",
                sets[0].vocab_hash, s.vocab_hash
            )));
        }
        if let Some(e) = s.examples.iter().find_map(|e| e.input.features().iter().find(|&&f| f as usize >= model.config().vocab_size)) {
            return Err(Error::VocabMismatch(format!(
                "feature {e} outside the model's input space of {}",
                model.config().vocab_size
            )));
        }
    }
    Ok(())
}

/// Fraction of examples whose arg-max class equals the label.
pub fn evaluate(model: &Model, set: &[Example], exec: Exec) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let hits = exec.try_map(set.len(), |i| model.predict(&set[i].input).map(|p| (p == set[i].label) as usize))?;
    Ok(hits.iter().sum::<usize>() as f64 / set.len() as f64)
}

/// Trains from the model's current parameters with a fresh optimizer.
/// Each epoch is one pass over `train` in a freshly shuffled order.
pub fn train(model: Model, train: &EncodedSet, test: &EncodedSet, schedule: &Schedule, exec: Exec) -> Result<(Model, Curve)> {
    schedule.validate()?;
    if train.is_empty() || test.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check_vocab(&model, &[train, test])?;
    let mut model = model;
    let mut opt = Adam::for_model(&model, schedule.learning_rate);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut r = rng::substream(schedule.shuffle_seed, 0);
    let mut curve = Curve {
        initial_accuracy: evaluate(&model, &test.examples, exec)?,
        epochs: Vec::new(),
        test_accuracy: Vec::new(),
        train_loss: Vec::new(),
    };
    for epoch in 1..=schedule.epochs {
        order.shuffle(&mut r);
        let mut loss_sum = 0.0;
        for idx in order.chunks(schedule.batch_size) {
            let batch: Vec<&Example> = idx.iter().map(|&i| &train.examples[i]).collect();
            let (loss, grads) = model.loss_and_grads(&batch, exec)?;
            opt.step(&mut model, &grads)?;
            loss_sum += loss * batch.len() as f64;
        }
        if epoch % schedule.eval_every == 0 {
            curve.epochs.push(epoch);
            curve.test_accuracy.push(evaluate(&model, &test.examples, exec)?);
            curve.train_loss.push(loss_sum / train.len() as f64);
        }
    }
    Ok((model, curve))
}

/// Continues training an already trained model on new data. The curve's
/// epoch-0 point measures transfer before any update on the new task.
pub fn finetune(model: Model, train_set: &EncodedSet, test_set: &EncodedSet, schedule: &Schedule, exec: Exec) -> Result<(Model, Curve)> {
    train(model, train_set, test_set, schedule, exec)
}

/// Runs `run(index, seed)` `n_runs` times with seeds derived from `base_seed`
/// and aggregates the curves.
pub fn repeat_runs<F>(n_runs: usize, base_seed: u64, exec: Exec, run: F) -> Result<CurveStats>
where
    F: Fn(usize, u64) -> Result<Curve> + Sync + Send,
{
    if n_runs < 2 {
        return Err(Error::BadConfig(format!("need at least 2 runs, got {n_runs}")));
    }
    let curves = exec.try_map(n_runs, |i| run(i, run_seed(base_seed, i)))?;
    CurveStats::from_curves(curves)
}

/// Like [`repeat_runs`] for runs that each produce several named curves.
pub fn repeat_runs_multi<F>(n_runs: usize, base_seed: u64, exec: Exec, run: F) -> Result<BTreeMap<String, CurveStats>>
where
    F: Fn(usize, u64) -> Result<BTreeMap<String, Curve>> + Sync + Send,
{
    if n_runs < 2 {
        return Err(Error::BadConfig(format!("need at least 2 runs, got {n_runs}")));
    }
    let runs = exec.try_map(n_runs, |i| run(i, run_seed(base_seed, i)))?;
    let mut by_name: BTreeMap<String, Vec<Curve>> = BTreeMap::new();
    for r in &runs {
        if r.keys().ne(runs[0].keys()) {
            return Err(Error::BadConfig("runs produced different curve sets".into()));
        }
    }
    for r in runs {
        for (k, c) in r {
            by_name.entry(k).or_default().push(c);
        }
    }
    by_name.into_iter().map(|(k, v)| Ok((k, CurveStats::from_curves(v)?))).collect()
}

/// Seed of run `index` under `base_seed`.
pub fn run_seed(base_seed: u64, index: usize) -> u64 {
    rng::derive_seed(base_seed, index as u64)
}
