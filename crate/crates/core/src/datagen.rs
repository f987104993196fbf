//! Seeded generators for the paradigms, split construction and audits.
//!
//! Balanced factors (animacy and the sides involved) are assigned by index
//! pattern and then shuffled with a dataset-level stream; entity choices for
//! instance `i` come from its own substream, so instances can be generated in
//! any order without changing the output.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::fsio;
use crate::rng::{derive_named, substream, Rng};
use crate::scene::{
    build_frame, move_actor, swap_objects, Animacy, Catalog, Condition, EntityId, EntityKind,
    Frame, Label, Paradigm, ParadigmInstance, Side, Slot, SplitTag,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub paradigm: Paradigm,
    pub n_train: usize,
    pub n_test: usize,
    pub animate_fraction: f64,
    pub seed: u64,
    pub condition: Condition,
    pub repetitions_per_actor_goal: usize,
}

impl GenConfig {
    pub fn new(paradigm: Paradigm, n_train: usize, n_test: usize, seed: u64) -> GenConfig {
        GenConfig {
            paradigm,
            n_train,
            n_test,
            animate_fraction: if paradigm == Paradigm::OneFrameGoal { 1.0 } else { 0.5 },
            seed,
            condition: Condition::T1,
            repetitions_per_actor_goal: 10,
        }
    }

    pub fn with_condition(mut self, condition: Condition) -> GenConfig {
        self.condition = condition;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_train == 0 || self.n_test == 0 {
            return Err(Error::BadGenConfig("n_train and n_test must be positive".into()));
        }
        let expected = if self.paradigm == Paradigm::OneFrameGoal { 1.0 } else { 0.5 };
        if self.animate_fraction != expected {
            return Err(Error::BadGenConfig(format!(
                "{} requires animate_fraction {expected}",
                self.paradigm.name()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Split {
    Train,
    Test,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub instances: Vec<ParadigmInstance>,
    pub split: Split,
    pub config: GenConfig,
    pub catalog_snapshot: Catalog,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn actors(&self) -> BTreeSet<EntityId> {
        self.instances.iter().map(|i| i.actor).collect()
    }

    pub fn objects(&self) -> BTreeSet<EntityId> {
        self.instances.iter().flat_map(|i| i.objects()).collect()
    }

    /// One JSON object per line, in instance order.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for inst in &self.instances {
            out.push_str(&serde_json::to_string(inst)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn parse_jsonl(text: &str) -> Result<Vec<ParadigmInstance>> {
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| Error::Parse {
                    line: i + 1,
                    message: e.to_string(),
                })
            })
            .collect()
    }
}

/// Dispatches on `config.paradigm`.
pub fn generate(config: &GenConfig, catalog: &Catalog) -> Result<(Dataset, Dataset)> {
    match config.paradigm {
        Paradigm::ThreeFrame => gen_three_frame(config, catalog),
        Paradigm::FiveFrame => gen_five_frame(config, catalog),
        Paradigm::SevenFrame => gen_seven_frame(config, catalog),
        Paradigm::TwoFrameMotion => gen_motion_pretrain(config, catalog),
        Paradigm::OneFrameGoal => gen_goal_attribution(config, catalog),
    }
}

pub fn gen_three_frame(config: &GenConfig, catalog: &Catalog) -> Result<(Dataset, Dataset)> {
    gen_prediction(config, catalog, Paradigm::ThreeFrame)
}

pub fn gen_five_frame(config: &GenConfig, catalog: &Catalog) -> Result<(Dataset, Dataset)> {
    gen_prediction(config, catalog, Paradigm::FiveFrame)
}

pub fn gen_seven_frame(config: &GenConfig, catalog: &Catalog) -> Result<(Dataset, Dataset)> {
    gen_prediction(config, catalog, Paradigm::SevenFrame)
}

pub fn gen_motion_pretrain(config: &GenConfig, catalog: &Catalog) -> Result<(Dataset, Dataset)> {
    gen_prediction(config, catalog, Paradigm::TwoFrameMotion)
}

/// Entity pools one split may draw from.
struct Regions {
    animate: Vec<EntityId>,
    inanimate: Vec<EntityId>,
    objects: Vec<EntityId>,
}

impl Regions {
    fn actors(&self, animacy: Animacy) -> &[EntityId] {
        match animacy {
            Animacy::Animate => &self.animate,
            Animacy::Inanimate => &self.inanimate,
        }
    }
}

fn halves(v: Vec<EntityId>, split: Split) -> Vec<EntityId> {
    let mid = v.len() / 2;
    match split {
        Split::Train => v[..mid].to_vec(),
        Split::Test => v[mid..].to_vec(),
    }
}

fn thirds(v: Vec<EntityId>, split: Split) -> Vec<EntityId> {
    let cut = v.len() * 2 / 3;
    match split {
        Split::Train => v[..cut].to_vec(),
        Split::Test => v[cut..].to_vec(),
    }
}

/// T1: training actors everywhere, novel objects at test. T2: the T2 region
/// is split so that test actors and objects are unseen by T2 training too.
fn prediction_regions(catalog: &Catalog, condition: Condition, split: Split) -> Regions {
    use EntityKind::*;
    use SplitTag::*;
    match condition {
        Condition::T1 => Regions {
            animate: catalog.region(AnimateActor, TrainOnly),
            inanimate: catalog.region(InanimateActor, TrainOnly),
            objects: catalog.region(
                TargetObject,
                if split == Split::Train { TrainOnly } else { TestNovelT1 },
            ),
        },
        Condition::T2 => Regions {
            animate: halves(catalog.region(AnimateActor, TestNovelT2), split),
            inanimate: halves(catalog.region(InanimateActor, TestNovelT2), split),
            objects: thirds(catalog.region(TargetObject, TestNovelT2), split),
        },
    }
}

#[derive(Clone, Copy, Debug)]
struct Factors {
    animacy: Animacy,
    /// Side of the interaction that determines the label.
    side: Side,
    /// Side of the demonstration interaction (five/seven frames).
    demo_side: Side,
    /// Starting side of the motion prefix.
    motion_side: Side,
}

fn balanced_factors(n: usize, rng: &mut Rng) -> Vec<Factors> {
    let mut out: Vec<Factors> = (0..n)
        .map(|i| Factors {
            animacy: Animacy::from_index(i % 2),
            side: Side::from_index((i / 2) % 2),
            demo_side: Side::from_index((i / 4) % 2),
            motion_side: Side::from_index((i / 8) % 2),
        })
        .collect();
    out.shuffle(rng);
    out
}

fn sample(rng: &mut Rng, pool: &[EntityId], k: usize) -> Vec<EntityId> {
    rand::seq::index::sample(rng, pool.len(), k)
        .into_iter()
        .map(|i| pool[i])
        .collect()
}

fn split_stream(seed: u64, split: Split) -> u64 {
    derive_named(
        seed,
        match split {
            Split::Train => "train",
            Split::Test => "test",
        },
    )
}

fn objects_needed(paradigm: Paradigm) -> usize {
    match paradigm {
        Paradigm::ThreeFrame => 2,
        Paradigm::FiveFrame | Paradigm::SevenFrame => 4,
        Paradigm::TwoFrameMotion => 0,
        Paradigm::OneFrameGoal => 2,
    }
}

fn gen_prediction(config: &GenConfig, catalog: &Catalog, paradigm: Paradigm) -> Result<(Dataset, Dataset)> {
    if config.paradigm != paradigm {
        return Err(Error::BadGenConfig(format!(
            "config is for {}, generator is {}",
            config.paradigm.name(),
            paradigm.name()
        )));
    }
    config.validate()?;
    let train = gen_prediction_split(config, catalog, Split::Train, config.n_train)?;
    let test = gen_prediction_split(config, catalog, Split::Test, config.n_test)?;
    Ok((train, test))
}

fn gen_prediction_split(config: &GenConfig, catalog: &Catalog, split: Split, n: usize) -> Result<Dataset> {
    let regions = prediction_regions(catalog, config.condition, split);
    let need = objects_needed(config.paradigm);
    if regions.objects.len() < need {
        return Err(Error::PoolExhausted(format!(
            "{:?}/{:?} needs {need} objects, region has {}",
            config.condition,
            split,
            regions.objects.len()
        )));
    }
    if regions.animate.is_empty() || regions.inanimate.is_empty() {
        return Err(Error::PoolExhausted(format!(
            "{:?}/{:?} has an empty actor region",
            config.condition, split
        )));
    }
    let stream_seed = split_stream(config.seed, split);
    let factors = balanced_factors(n, &mut substream(stream_seed, u64::MAX));
    let instances = Exec::Parallel.try_map(n, |i| {
        let mut rng = substream(stream_seed, i as u64);
        prediction_instance(config, &regions, factors[i], i as u64, &mut rng)
    })?;
    Ok(Dataset {
        instances,
        split,
        config: config.clone(),
        catalog_snapshot: catalog.clone(),
    })
}

fn prediction_instance(
    config: &GenConfig,
    regions: &Regions,
    f: Factors,
    index: u64,
    rng: &mut Rng,
) -> Result<ParadigmInstance> {
    let pool = regions.actors(f.animacy);
    let actor = pool[rng.random_range(0..pool.len())];
    let objects = sample(rng, &regions.objects, objects_needed(config.paradigm));
    let animate = f.animacy == Animacy::Animate;

    let motion_prefix = || -> Result<Vec<Frame>> {
        let start = Slot::actor_slot(f.motion_side);
        let end = if animate {
            Slot::actor_slot(f.motion_side.opposite())
        } else {
            start
        };
        Ok(vec![
            build_frame(None, Some((actor, start)))?,
            build_frame(None, Some((actor, end)))?,
        ])
    };

    let (frames, goal, interaction_side) = match config.paradigm {
        Paradigm::ThreeFrame => {
            let setup = build_frame(Some((objects[0], objects[1])), Some((actor, Slot::Bottom)))?;
            let reach = move_actor(&setup, Slot::actor_slot(f.side))?;
            let swapped = swap_objects(&setup)?;
            let goal = setup.get(Slot::object_slot(f.side));
            (vec![setup, reach, swapped], goal, Some(f.side))
        }
        Paradigm::FiveFrame | Paradigm::SevenFrame => {
            let (body, goal) = five_frame_body(actor, f.animacy, f.demo_side, f.side, &objects)?;
            let frames = if config.paradigm == Paradigm::SevenFrame {
                let mut fr = motion_prefix()?;
                fr.extend(body);
                fr
            } else {
                body
            };
            (frames, goal, Some(f.side))
        }
        Paradigm::TwoFrameMotion => (motion_prefix()?, None, None),
        Paradigm::OneFrameGoal => unreachable!("goal paradigm has its own generator"),
    };

    let mut inst = ParadigmInstance {
        paradigm: config.paradigm,
        frames,
        actor,
        animacy: f.animacy,
        goal: if animate && config.paradigm != Paradigm::TwoFrameMotion { goal } else { None },
        interaction_side,
        label: Label::Side(Side::Left),
        condition: config.condition,
        seed: config.seed,
        index,
    };
    inst.label = inst.oracle_label()?;
    Ok(inst)
}

/// Demonstration (interaction, swap, resolution) followed by a new
/// interaction and swap with fresh objects. Returns the frames and the goal
/// of the second interaction.
fn five_frame_body(
    actor: EntityId,
    animacy: Animacy,
    demo_side: Side,
    side: Side,
    objects: &[EntityId],
) -> Result<(Vec<Frame>, Option<EntityId>)> {
    let demo = build_frame(Some((objects[0], objects[1])), Some((actor, Slot::actor_slot(demo_side))))?;
    let demo_goal = demo.get(Slot::object_slot(demo_side)).expect("objects placed");
    let demo_swap = swap_objects(&move_actor(&demo, Slot::Bottom)?)?;
    let resolved = match animacy {
        Animacy::Animate => demo_swap.object_side(demo_goal).expect("goal still present"),
        Animacy::Inanimate => demo_side,
    };
    let resolution = move_actor(&demo_swap, Slot::actor_slot(resolved))?;
    let probe = build_frame(Some((objects[2], objects[3])), Some((actor, Slot::actor_slot(side))))?;
    let goal = probe.get(Slot::object_slot(side));
    let probe_swap = swap_objects(&move_actor(&probe, Slot::Bottom)?)?;
    Ok((vec![demo, demo_swap, resolution, probe, probe_swap], goal))
}

/// One-frame goal attribution: each actor is shown `repetitions` times with
/// its fixed goal and a varying distractor. Test keeps the actor-goal pairs
/// and uses distractors never seen in training.
pub fn gen_goal_attribution(config: &GenConfig, catalog: &Catalog) -> Result<(Dataset, Dataset)> {
    if config.paradigm != Paradigm::OneFrameGoal {
        return Err(Error::BadGenConfig(format!(
            "config is for {}, generator is one-frame-goal",
            config.paradigm.name()
        )));
    }
    config.validate()?;
    let reps = config.repetitions_per_actor_goal;
    if reps == 0 || !config.n_train.is_multiple_of(reps) {
        return Err(Error::BadRepetition(format!(
            "n_train {} is not a multiple of repetitions {reps}",
            config.n_train
        )));
    }
    let pairs = config.n_train / reps;

    use EntityKind::*;
    use SplitTag::*;
    let (actors, train_objects, test_distractors) = match config.condition {
        Condition::T1 => (
            catalog.region(AnimateActor, TrainOnly),
            catalog.region(TargetObject, TrainOnly),
            catalog.region(TargetObject, TestNovelT1),
        ),
        Condition::T2 => {
            let objs = catalog.region(TargetObject, TestNovelT2);
            (
                catalog.region(AnimateActor, TestNovelT2),
                thirds(objs.clone(), Split::Train),
                thirds(objs, Split::Test),
            )
        }
    };
    if pairs > actors.len() {
        return Err(Error::PoolExhausted(format!(
            "{pairs} actor-goal pairs need {pairs} animate actors, region has {}",
            actors.len()
        )));
    }
    if pairs > train_objects.len() || train_objects.len() <= reps || test_distractors.is_empty() {
        return Err(Error::PoolExhausted(format!(
            "{pairs} goals with {reps} distinct distractors each do not fit {} training objects / {} test distractors",
            train_objects.len(),
            test_distractors.len()
        )));
    }

    let mut pair_rng = substream(derive_named(config.seed, "goal-pairs"), 0);
    let pair_actors = sample(&mut pair_rng, &actors, pairs);
    let pair_goals = sample(&mut pair_rng, &train_objects, pairs);
    let mut pair_plans = Vec::with_capacity(pairs);
    for &goal in &pair_goals {
        let others: Vec<EntityId> = train_objects.iter().copied().filter(|&o| o != goal).collect();
        let distractors = sample(&mut pair_rng, &others, reps);
        let mut sides: Vec<Side> = (0..reps).map(|r| Side::from_index(r % 2)).collect();
        sides.shuffle(&mut pair_rng);
        pair_plans.push((distractors, sides));
    }

    let make = |i: usize, actor: EntityId, goal: EntityId, distractor: EntityId, side: Side| -> Result<ParadigmInstance> {
        let objects = match side {
            Side::Left => (goal, distractor),
            Side::Right => (distractor, goal),
        };
        let frame = build_frame(Some(objects), Some((actor, Slot::Bottom)))?;
        let mut inst = ParadigmInstance {
            paradigm: Paradigm::OneFrameGoal,
            frames: vec![frame],
            actor,
            animacy: Animacy::Animate,
            goal: Some(goal),
            interaction_side: None,
            label: Label::Side(side),
            condition: config.condition,
            seed: config.seed,
            index: i as u64,
        };
        inst.label = inst.oracle_label()?;
        Ok(inst)
    };

    let train_instances = Exec::Parallel.try_map(config.n_train, |i| {
        let (p, r) = (i / reps, i % reps);
        let (distractors, sides) = &pair_plans[p];
        make(i, pair_actors[p], pair_goals[p], distractors[r], sides[r])
    })?;

    let test_seed = split_stream(config.seed, Split::Test);
    let mut test_sides: Vec<Side> = (0..config.n_test).map(|i| Side::from_index(i % 2)).collect();
    test_sides.shuffle(&mut substream(test_seed, u64::MAX));
    let test_instances = Exec::Parallel.try_map(config.n_test, |i| {
        let mut rng = substream(test_seed, i as u64);
        let p = i % pairs;
        let distractor = test_distractors[rng.random_range(0..test_distractors.len())];
        make(i, pair_actors[p], pair_goals[p], distractor, test_sides[i])
    })?;

    let wrap = |instances, split| Dataset {
        instances,
        split,
        config: config.clone(),
        catalog_snapshot: catalog.clone(),
    };
    Ok((wrap(train_instances, Split::Train), wrap(test_instances, Split::Test)))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub checks: Vec<AuditCheck>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AuditCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&AuditCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn push(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(AuditCheck {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        });
    }
}

fn label_side(label: Label) -> Option<Side> {
    match label {
        Label::Side(s) => Some(s),
        Label::Animacy(_) => None,
    }
}

/// Per-dataset checks: structure, oracle agreement, balance, positional
/// shortcuts and split regions.
pub fn audit(dataset: &Dataset) -> AuditReport {
    let mut report = AuditReport::default();
    let catalog = &dataset.catalog_snapshot;
    let paradigm = dataset.config.paradigm;
    let n = dataset.len();

    let structural: Vec<String> = dataset
        .instances
        .iter()
        .filter_map(|inst| {
            if inst.paradigm != paradigm {
                return Some(format!("#{}: paradigm {}", inst.index, inst.paradigm.name()));
            }
            if inst.frames.len() != paradigm.frame_count() {
                return Some(format!("#{}: {} frames", inst.index, inst.frames.len()));
            }
            if let Some(e) = inst.frames.iter().find_map(|f| f.validate().err()) {
                return Some(format!("#{}: {e}", inst.index));
            }
            let wants_goal = inst.animacy == Animacy::Animate && paradigm != Paradigm::TwoFrameMotion;
            if inst.goal.is_some() != wants_goal {
                return Some(format!("#{}: goal presence does not match animacy", inst.index));
            }
            None
        })
        .collect();
    report.push(
        "structure",
        structural.is_empty(),
        first_few(&structural, "all instances well formed"),
    );

    let mismatches: Vec<String> = dataset
        .instances
        .iter()
        .filter_map(|inst| match inst.oracle_label() {
            Ok(l) if l == inst.label => None,
            Ok(l) => Some(format!("#{}: stored {:?}, oracle {:?}", inst.index, inst.label, l)),
            Err(e) => Some(format!("#{}: {e}", inst.index)),
        })
        .collect();
    report.push(
        "oracle-agreement",
        mismatches.is_empty(),
        first_few(&mismatches, &format!("{n} of {n} labels agree")),
    );

    let mut balance_detail = Vec::new();
    let mut balanced = true;
    if paradigm == Paradigm::TwoFrameMotion {
        let animate = dataset
            .instances
            .iter()
            .filter(|i| i.label == Label::Animacy(Animacy::Animate))
            .count();
        let inanimate = n - animate;
        balanced = animate.abs_diff(inanimate) <= 1;
        balance_detail.push(format!("Animate {animate} / Inanimate {inanimate}"));
    } else {
        for class in [Animacy::Animate, Animacy::Inanimate] {
            let (mut left, mut right) = (0usize, 0usize);
            for inst in dataset.instances.iter().filter(|i| i.animacy == class) {
                match label_side(inst.label) {
                    Some(Side::Left) => left += 1,
                    Some(Side::Right) => right += 1,
                    None => {}
                }
            }
            balanced &= left.abs_diff(right) <= 1;
            balance_detail.push(format!("{class:?}: Left {left} / Right {right}"));
        }
    }
    report.push("label-balance", balanced, balance_detail.join("; "));

    let animate = dataset.instances.iter().filter(|i| i.animacy == Animacy::Animate).count();
    let expected = dataset.config.animate_fraction * n as f64;
    report.push(
        "animacy-balance",
        (animate as f64 - expected).abs() <= 1.0,
        format!("{animate} animate of {n} (expected {expected})"),
    );

    let rule_breaks: Vec<String> = dataset
        .instances
        .iter()
        .filter(|inst| catalog.kind(inst.actor) != Some(Catalog::actor_kind(inst.animacy)))
        .map(|inst| format!("#{}: actor {} is not {:?}", inst.index, inst.actor, inst.animacy))
        .collect();
    report.push(
        "actor-kind",
        rule_breaks.is_empty(),
        first_few(&rule_breaks, "actor kind matches animacy everywhere"),
    );

    if matches!(paradigm, Paradigm::ThreeFrame | Paradigm::FiveFrame | Paradigm::SevenFrame) {
        let mut cells: BTreeMap<(Side, Side), usize> = BTreeMap::new();
        for inst in &dataset.instances {
            if let (Some(s), Some(l)) = (inst.interaction_side, label_side(inst.label)) {
                *cells.entry((s, l)).or_default() += 1;
            }
        }
        let mut ok = true;
        for s in Side::BOTH {
            let l = cells.get(&(s, Side::Left)).copied().unwrap_or(0);
            let r = cells.get(&(s, Side::Right)).copied().unwrap_or(0);
            ok &= l.abs_diff(r) <= 1;
        }
        report.push("positional-shortcut", ok, format!("(interaction side, label) counts {cells:?}"));
    }

    let region_breaks: Vec<String> = dataset
        .instances
        .iter()
        .filter_map(|inst| region_violation(catalog, dataset.split, inst))
        .collect();
    report.push(
        "split-regions",
        region_breaks.is_empty(),
        first_few(&region_breaks, "every entity drawn from its split region"),
    );
    report
}

fn region_violation(catalog: &Catalog, split: Split, inst: &ParadigmInstance) -> Option<String> {
    use SplitTag::*;
    let tag = |e: EntityId| catalog.tag(e);
    let fail = |what: &str, e: EntityId| Some(format!("#{}: {what} {e} has tag {:?}", inst.index, tag(e)));
    match inst.condition {
        Condition::T2 => {
            if tag(inst.actor) != Some(TestNovelT2) {
                return fail("actor", inst.actor);
            }
            for o in inst.objects() {
                if tag(o) != Some(TestNovelT2) {
                    return fail("object", o);
                }
            }
        }
        Condition::T1 => {
            if tag(inst.actor) != Some(TrainOnly) {
                return fail("actor", inst.actor);
            }
            for o in inst.objects() {
                let want = match (split, inst.paradigm) {
                    (Split::Train, _) => TrainOnly,
                    (Split::Test, Paradigm::OneFrameGoal) if Some(o) == inst.goal => TrainOnly,
                    (Split::Test, _) => TestNovelT1,
                };
                if tag(o) != Some(want) {
                    return fail("object", o);
                }
            }
        }
    }
    None
}

fn first_few(items: &[String], ok: &str) -> String {
    if items.is_empty() {
        ok.to_string()
    } else {
        let shown: Vec<&str> = items.iter().take(5).map(String::as_str).collect();
        format!("{} violation(s): {}", items.len(), shown.join("; "))
    }
}

/// Audits both splits and the cross-split novelty guarantees.
pub fn audit_split(train: &Dataset, test: &Dataset) -> AuditReport {
    let mut report = AuditReport::default();
    for (prefix, ds) in [("train", train), ("test", test)] {
        for c in audit(ds).checks {
            report.push(&format!("{prefix}/{}", c.name), c.passed, c.detail);
        }
    }
    let paradigm = train.config.paradigm;
    let train_objects = train.objects();
    match paradigm {
        Paradigm::OneFrameGoal => {
            let train_pairs: BTreeSet<(EntityId, Option<EntityId>)> =
                train.instances.iter().map(|i| (i.actor, i.goal)).collect();
            let stale: Vec<String> = test
                .instances
                .iter()
                .flat_map(|i| i.objects().into_iter().filter(move |&o| Some(o) != i.goal).map(move |o| (i.index, o)))
                .filter(|(_, o)| train_objects.contains(o))
                .map(|(idx, o)| format!("#{idx}: distractor {o} seen in training"))
                .collect();
            report.push("novel-distractors", stale.is_empty(), first_few(&stale, "all test distractors unseen"));
            let unknown: Vec<String> = test
                .instances
                .iter()
                .filter(|i| !train_pairs.contains(&(i.actor, i.goal)))
                .map(|i| format!("#{}: actor-goal pair not trained", i.index))
                .collect();
            report.push("kept-pairs", unknown.is_empty(), first_few(&unknown, "test actor-goal pairs all trained"));
        }
        Paradigm::TwoFrameMotion => {}
        _ => {
            let shared: Vec<String> = test
                .objects()
                .intersection(&train_objects)
                .map(|o| format!("object {o} in both splits"))
                .collect();
            report.push("novel-objects", shared.is_empty(), first_few(&shared, "test objects unseen in training"));
            if train.config.condition == Condition::T2 {
                let shared: Vec<String> = test
                    .actors()
                    .intersection(&train.actors())
                    .map(|a| format!("actor {a} in both splits"))
                    .collect();
                report.push("novel-actors", shared.is_empty(), first_few(&shared, "test actors unseen in training"));
            }
        }
    }
    report
}

/// Writes `train.jsonl`, `test.jsonl`, `config.json` and `audit.json`.
pub fn write_dataset_dir(dir: &Path, train: &Dataset, test: &Dataset, report: &AuditReport) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    fsio::write_atomic(&dir.join("train.jsonl"), train.to_jsonl()?.as_bytes())?;
    fsio::write_atomic(&dir.join("test.jsonl"), test.to_jsonl()?.as_bytes())?;
    fsio::write_json(
        &dir.join("config.json"),
        &DatasetManifest {
            config: train.config.clone(),
            catalog: train.catalog_snapshot.clone(),
        },
    )?;
    fsio::write_json(&dir.join("audit.json"), report)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub config: GenConfig,
    pub catalog: Catalog,
}

pub fn read_dataset_dir(dir: &Path) -> Result<(Dataset, Dataset)> {
    let manifest: DatasetManifest = fsio::read_json(&dir.join("config.json"))?;
    let load = |name: &str, split| -> Result<Dataset> {
        let path = dir.join(name);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(Dataset {
            instances: Dataset::parse_jsonl(&text)?,
            split,
            config: manifest.config.clone(),
            catalog_snapshot: manifest.catalog.clone(),
        })
    };
    Ok((load("train.jsonl", Split::Train)?, load("test.jsonl", Split::Test)?))
}
