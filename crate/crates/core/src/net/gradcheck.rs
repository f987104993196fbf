use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::{Example, LayerKind, Model};
use crate::error::Result;
use crate::exec::Exec;
use crate::rng;

/// `|a - n| / max(|a|, |n|, 1e-12)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-12)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KindReport {
    pub coordinates: usize,
    pub max_relative_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub coordinates: usize,
    pub worst_index: usize,
    pub per_kind: BTreeMap<LayerKind, KindReport>,
}

/// Worst relative error between analytic gradients and central differences
/// over a random sample of up to 200 coordinates per layer type.
/// `epsilon` is clamped to `[1e-6, 1e-3]`.
pub fn grad_check(model: &Model, example: &Example, epsilon: f64) -> f64 {
    grad_check_by_kind(model, std::slice::from_ref(example), epsilon, 200, model.config().seed)
        .map(|r| r.max_relative_error)
        .unwrap_or(f64::INFINITY)
}

/// Samples up to `per_kind` coordinates of every layer type. Embedding rows
/// are sampled only among the features and positions the batch touches, since
/// every other row has an identically zero gradient.
pub fn grad_check_by_kind(model: &Model, batch: &[Example], epsilon: f64, per_kind: usize, seed: u64) -> Result<GradCheckReport> {
    let (_, analytic) = model.loss_and_grads(batch, Exec::Sequential)?;
    let d = model.config().embed_dim;
    let mut used_rows = BTreeSet::new();
    let max_positions = batch.iter().map(|e| e.input.len()).max().unwrap_or(0);
    for e in batch {
        for &f in e.input.features() {
            used_rows.insert(model.layout().tok / d + f as usize);
        }
    }
    for t in 0..max_positions {
        used_rows.insert(model.layout().pos / d + t);
    }
    let mut candidates: BTreeMap<LayerKind, Vec<usize>> = BTreeMap::new();
    for t in model.layout().tensors() {
        let list = candidates.entry(t.kind).or_default();
        if t.kind == LayerKind::Embedding {
            list.extend(t.range().filter(|i| used_rows.contains(&(i / d))));
        } else {
            list.extend(t.range());
        }
    }
    let mut r = rng::substream(seed, 0x6772_6164);
    let mut per_kind_report = BTreeMap::new();
    let mut worst = (0.0f64, 0usize);
    let mut total = 0;
    for (kind, list) in candidates {
        let picked: Vec<usize> = if list.len() <= per_kind {
            list
        } else {
            let mut idx: Vec<usize> = sample(&mut r, list.len(), per_kind).into_iter().map(|i| list[i]).collect();
            idx.sort_unstable();
            idx
        };
        let errs = compare_gradients(model, batch, &analytic, epsilon, &picked)?;
        let mut kmax = 0.0f64;
        for (&i, &e) in picked.iter().zip(&errs) {
            kmax = kmax.max(e);
            if e > worst.0 {
                worst = (e, i);
            }
        }
        total += picked.len();
        per_kind_report.insert(
            kind,
            KindReport {
                coordinates: picked.len(),
                max_relative_error: kmax,
            },
        );
    }
    Ok(GradCheckReport {
        max_relative_error: worst.0,
        coordinates: total,
        worst_index: worst.1,
        per_kind: per_kind_report,
    })
}

/// Relative error of `analytic[i]` against a central difference at each of
/// `coords`.
pub fn compare_gradients(model: &Model, batch: &[Example], analytic: &[f64], epsilon: f64, coords: &[usize]) -> Result<Vec<f64>> {
    let eps = epsilon.clamp(1e-6, 1e-3);
    let mut probe = model.clone();
    let mut out = Vec::with_capacity(coords.len());
    for &i in coords {
        let orig = probe.params()[i];
        probe.params_mut()[i] = orig + eps;
        let up = probe.loss(batch)?;
        probe.params_mut()[i] = orig - eps;
        let down = probe.loss(batch)?;
        probe.params_mut()[i] = orig;
        out.push(relative_error(analytic[i], (up - down) / (2.0 * eps)));
    }
    Ok(out)
}
