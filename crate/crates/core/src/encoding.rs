//! Symbolic encodings of paradigm instances.
//!
//! A frame is written as `UL UR [concept] actor [slot] [GOAL goal] SEP`.
//! Empty object or actor slots are written as `[PAD]`; the actor-slot token is
//! only emitted when the actor stands off-centre. Naive and cognitive
//! encodings share one vocabulary and differ only by the concept tokens.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::net::Sequence;
use crate::scene::{build_frame, Animacy, Catalog, EntityId, Frame, Paradigm, ParadigmInstance, Slot};

pub const PAD: u32 = 0;
pub const SEP: u32 = 1;
const SLOT_BASE: u32 = 2;
pub const ANIMATE: u32 = 7;
pub const INANIMATE: u32 = 8;
pub const GOAL: u32 = 9;
const ENTITY_BASE: u32 = 10;

const SPECIAL_NAMES: [&str; ENTITY_BASE as usize] = [
    "[PAD]", "[SEP]", "[UL]", "[UR]", "[B]", "[BL]", "[BR]", "[ANIMATE]", "[INANIMATE]", "[GOAL]",
];

fn slot_index(slot: Slot) -> u32 {
    Slot::ALL.iter().position(|&s| s == slot).expect("slot listed") as u32
}

/// Stable fingerprint of a catalog, used to version vocabularies.
pub fn catalog_fingerprint(catalog: &Catalog) -> String {
    let json = serde_json::to_vec(catalog).expect("catalog serialises");
    hex::encode(Sha256::digest(&json))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    catalog_hash: String,
}

#[derive(Serialize, Deserialize)]
struct VocabFile {
    catalog_hash: String,
    tokens: BTreeMap<String, u32>,
}

impl Vocab {
    pub fn for_catalog(catalog: &Catalog) -> Vocab {
        let mut tokens: Vec<String> = SPECIAL_NAMES.iter().map(|s| s.to_string()).collect();
        tokens.extend((0..catalog.len()).map(|i| format!("e{i}")));
        Vocab::from_tokens(tokens, catalog_fingerprint(catalog))
    }

    fn from_tokens(tokens: Vec<String>, catalog_hash: String) -> Vocab {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocab {
            tokens,
            index,
            catalog_hash,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn n_entities(&self) -> usize {
        self.tokens.len() - ENTITY_BASE as usize
    }

    pub fn catalog_hash(&self) -> &str {
        &self.catalog_hash
    }

    pub fn token(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    pub fn name(&self, token: u32) -> Option<&str> {
        self.tokens.get(token as usize).map(String::as_str)
    }

    pub fn entity_token(&self, id: EntityId) -> Result<u32> {
        if (id.0 as usize) < self.n_entities() {
            Ok(ENTITY_BASE + id.0)
        } else {
            Err(Error::UnknownEntity(id.0))
        }
    }

    pub fn token_entity(&self, token: u32) -> Option<EntityId> {
        (token >= ENTITY_BASE && (token as usize) < self.len()).then(|| EntityId(token - ENTITY_BASE))
    }

    pub fn slot_token(&self, slot: Slot) -> u32 {
        SLOT_BASE + slot_index(slot)
    }

    fn token_slot(&self, token: u32) -> Option<Slot> {
        (SLOT_BASE..ANIMATE)
            .contains(&token)
            .then(|| Slot::ALL[(token - SLOT_BASE) as usize])
    }

    pub fn is_concept(&self, token: u32) -> bool {
        matches!(token, ANIMATE | INANIMATE | GOAL)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = VocabFile {
            catalog_hash: self.catalog_hash.clone(),
            tokens: self
                .tokens
                .iter()
                .enumerate()
                .map(|(i, t)| (t.clone(), i as u32))
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(s: &str) -> Result<Vocab> {
        let file: VocabFile = serde_json::from_str(s)?;
        let n = file.tokens.len();
        let mut tokens = vec![None; n];
        for (name, idx) in file.tokens {
            let slot = tokens
                .get_mut(idx as usize)
                .ok_or_else(|| Error::VocabMismatch(format!("index {idx} out of range")))?;
            if slot.is_some() {
                return Err(Error::VocabMismatch(format!("index {idx} used twice")));
            }
            *slot = Some(name);
        }
        let tokens: Vec<String> = tokens.into_iter().map(|t| t.expect("bijective")).collect();
        if tokens.len() < ENTITY_BASE as usize
            || tokens[..ENTITY_BASE as usize].iter().zip(SPECIAL_NAMES).any(|(a, b)| a != b)
        {
            return Err(Error::VocabMismatch("special tokens out of place".into()));
        }
        Ok(Vocab::from_tokens(tokens, file.catalog_hash))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenSeq {
    pub tokens: Vec<u32>,
}

impl TokenSeq {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Provenance {
    GroundTruth,
    LearnedModel,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConceptAnnotation {
    pub animacy: Option<Animacy>,
    pub goal: Option<EntityId>,
    pub provenance: Provenance,
}

impl ConceptAnnotation {
    /// The concepts a cognitive model is given for this paradigm: animacy for
    /// the prediction paradigms, the goal for goal attribution.
    pub fn ground_truth(instance: &ParadigmInstance) -> ConceptAnnotation {
        let (animacy, goal) = match instance.paradigm {
            Paradigm::OneFrameGoal => (None, instance.goal),
            Paradigm::TwoFrameMotion => (None, None),
            _ => (Some(instance.animacy), None),
        };
        ConceptAnnotation {
            animacy,
            goal,
            provenance: Provenance::GroundTruth,
        }
    }

    pub fn learned(animacy: Animacy) -> ConceptAnnotation {
        ConceptAnnotation {
            animacy: Some(animacy),
            goal: None,
            provenance: Provenance::LearnedModel,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    #[default]
    Cognitive,
    Naive,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Cognitive => "cognitive",
            ModelKind::Naive => "naive",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        [ModelKind::Cognitive, ModelKind::Naive]
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown model kind `{s}` (expected cognitive or naive)"))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncodingMode {
    #[default]
    Tokens,
    Binary,
}

impl EncodingMode {
    pub fn name(self) -> &'static str {
        match self {
            EncodingMode::Tokens => "tokens",
            EncodingMode::Binary => "binary",
        }
    }
}

impl std::str::FromStr for EncodingMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        [EncodingMode::Tokens, EncodingMode::Binary]
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown encoding `{s}` (expected tokens or binary)"))
    }
}

fn encode_frames(
    frames: &[Frame],
    animacy: Option<Animacy>,
    goal: Option<EntityId>,
    vocab: &Vocab,
) -> Result<TokenSeq> {
    let entity = |e: Option<EntityId>| e.map_or(Ok(PAD), |id| vocab.entity_token(id));
    let mut tokens = Vec::with_capacity(frames.len() * 7);
    for frame in frames {
        tokens.push(entity(frame.get(Slot::UpperLeft))?);
        tokens.push(entity(frame.get(Slot::UpperRight))?);
        let actor = frame.actor();
        if actor.is_some() {
            match animacy {
                Some(Animacy::Animate) => tokens.push(ANIMATE),
                Some(Animacy::Inanimate) => tokens.push(INANIMATE),
                None => {}
            }
        }
        tokens.push(entity(actor.map(|(a, _)| a))?);
        if let Some((_, slot)) = actor {
            if slot != Slot::Bottom {
                tokens.push(vocab.slot_token(slot));
            }
            if let Some(g) = goal {
                tokens.push(GOAL);
                tokens.push(vocab.entity_token(g)?);
            }
        }
        tokens.push(SEP);
    }
    Ok(TokenSeq { tokens })
}

pub fn encode_naive(instance: &ParadigmInstance, vocab: &Vocab) -> Result<TokenSeq> {
    encode_frames(&instance.frames, None, None, vocab)
}

fn check_annotation(instance: &ParadigmInstance, ann: &ConceptAnnotation) -> Result<()> {
    if let Some(g) = ann.goal {
        if ann.animacy == Some(Animacy::Inanimate) || instance.animacy == Animacy::Inanimate {
            return Err(Error::InconsistentAnnotation(format!(
                "goal {g} attached to an inanimate actor"
            )));
        }
    }
    let missing = match instance.paradigm {
        Paradigm::OneFrameGoal => ann.goal.is_none(),
        Paradigm::TwoFrameMotion => ann.animacy.is_none() && ann.goal.is_none(),
        _ => ann.animacy.is_none(),
    };
    if missing {
        return Err(Error::MissingAnnotation(format!(
            "{} instance #{} has no relevant concept",
            instance.paradigm.name(),
            instance.index
        )));
    }
    Ok(())
}

/// Naive encoding plus the annotation's concept tokens around every actor.
pub fn encode_cognitive(instance: &ParadigmInstance, annotation: &ConceptAnnotation, vocab: &Vocab) -> Result<TokenSeq> {
    check_annotation(instance, annotation)?;
    encode_frames(&instance.frames, annotation.animacy, annotation.goal, vocab)
}

/// Removes concept markers (and the entity following each goal marker).
pub fn strip_concepts(seq: &TokenSeq) -> TokenSeq {
    let mut out = Vec::with_capacity(seq.len());
    let mut it = seq.tokens.iter().copied();
    while let Some(t) = it.next() {
        match t {
            ANIMATE | INANIMATE => {}
            GOAL => {
                it.next();
            }
            _ => out.push(t),
        }
    }
    TokenSeq { tokens: out }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decoded {
    pub frames: Vec<Frame>,
    /// Animacy marker attached to the actor of each frame.
    pub animacy: Vec<Option<Animacy>>,
    pub goal: Option<EntityId>,
}

pub fn decode(seq: &TokenSeq, vocab: &Vocab) -> Result<Decoded> {
    let bad = |msg: &str| Error::Parse {
        line: 0,
        message: msg.to_string(),
    };
    let entity = |t: u32| -> Result<Option<EntityId>> {
        if t == PAD {
            Ok(None)
        } else {
            vocab.token_entity(t).map(Some).ok_or_else(|| bad("expected entity token"))
        }
    };
    let mut out = Decoded {
        frames: Vec::new(),
        animacy: Vec::new(),
        goal: None,
    };
    for chunk in seq.tokens.split(|&t| t == SEP) {
        if chunk.is_empty() {
            continue;
        }
        if chunk.len() < 3 {
            return Err(bad("frame shorter than three tokens"));
        }
        let (ul, ur) = (entity(chunk[0])?, entity(chunk[1])?);
        let mut rest = &chunk[2..];
        let mut animacy = None;
        if let Some(&t @ (ANIMATE | INANIMATE)) = rest.first() {
            animacy = Some(if t == ANIMATE { Animacy::Animate } else { Animacy::Inanimate });
            rest = &rest[1..];
        }
        let actor = entity(*rest.first().ok_or_else(|| bad("missing actor"))?)?;
        rest = &rest[1..];
        let mut slot = Slot::Bottom;
        if let Some(s) = rest.first().and_then(|&t| vocab.token_slot(t)) {
            slot = s;
            rest = &rest[1..];
        }
        if let [GOAL, g, tail @ ..] = rest {
            out.goal = entity(*g)?;
            rest = tail;
        }
        if !rest.is_empty() {
            return Err(bad("trailing tokens in frame"));
        }
        let objects = match (ul, ur) {
            (Some(a), Some(b)) => Some((a, b)),
            (None, None) => None,
            _ => return Err(bad("half-filled object row")),
        };
        out.frames.push(build_frame(objects, actor.map(|a| (a, slot)))?);
        out.animacy.push(animacy);
    }
    Ok(out)
}

/// Field layout of one frame in the bit-vector encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BitLayout {
    pub n_entities: usize,
}

impl BitLayout {
    pub fn entity_field(&self) -> usize {
        self.n_entities + 1
    }
    pub fn upper_left(&self) -> usize {
        0
    }
    pub fn upper_right(&self) -> usize {
        self.entity_field()
    }
    pub fn actor(&self) -> usize {
        2 * self.entity_field()
    }
    /// Five slots plus "absent".
    pub fn slot(&self) -> usize {
        3 * self.entity_field()
    }
    pub fn animacy(&self) -> usize {
        self.slot() + Slot::ALL.len() + 1
    }
    pub fn goal(&self) -> usize {
        self.animacy() + 2
    }
    pub fn frame_width(&self) -> usize {
        self.goal() + self.n_entities
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitVector {
    pub frame_width: usize,
    pub bits: Vec<u8>,
}

impl BitVector {
    pub fn n_frames(&self) -> usize {
        self.bits.len() / self.frame_width
    }

    pub fn frame(&self, i: usize) -> &[u8] {
        &self.bits[i * self.frame_width..(i + 1) * self.frame_width]
    }

    /// Indices of the set bits of each frame.
    pub fn active_by_frame(&self) -> Vec<Vec<u32>> {
        self.bits
            .chunks(self.frame_width)
            .map(|f| {
                f.iter()
                    .enumerate()
                    .filter(|(_, &b)| b == 1)
                    .map(|(i, _)| i as u32)
                    .collect()
            })
            .collect()
    }
}

/// One-hot concatenation per frame. Concept fields stay zero without an annotation.
pub fn encode_binary(instance: &ParadigmInstance, annotation: Option<&ConceptAnnotation>, vocab: &Vocab) -> Result<BitVector> {
    if let Some(ann) = annotation {
        check_annotation(instance, ann)?;
    }
    let layout = BitLayout {
        n_entities: vocab.n_entities(),
    };
    let w = layout.frame_width();
    let mut bits = vec![0u8; w * instance.frames.len()];
    let ent = |e: Option<EntityId>| -> Result<usize> {
        match e {
            Some(id) => vocab.entity_token(id).map(|_| id.0 as usize),
            None => Ok(layout.n_entities),
        }
    };
    for (i, frame) in instance.frames.iter().enumerate() {
        let f = &mut bits[i * w..(i + 1) * w];
        f[layout.upper_left() + ent(frame.get(Slot::UpperLeft))?] = 1;
        f[layout.upper_right() + ent(frame.get(Slot::UpperRight))?] = 1;
        let actor = frame.actor();
        f[layout.actor() + ent(actor.map(|(a, _)| a))?] = 1;
        let slot = actor.map_or(Slot::ALL.len(), |(_, s)| slot_index(s) as usize);
        f[layout.slot() + slot] = 1;
        if let (Some(ann), Some(_)) = (annotation, actor) {
            if let Some(a) = ann.animacy {
                f[layout.animacy() + a.index()] = 1;
            }
            if let Some(g) = ann.goal {
                f[layout.goal() + ent(Some(g))?] = 1;
            }
        }
    }
    Ok(BitVector { frame_width: w, bits })
}

/// Feature-space size the classifier needs for a given input mode.
pub fn input_vocab_size(mode: EncodingMode, vocab: &Vocab) -> usize {
    match mode {
        EncodingMode::Tokens => vocab.len(),
        EncodingMode::Binary => BitLayout {
            n_entities: vocab.n_entities(),
        }
        .frame_width(),
    }
}

/// Encodes an instance as classifier input. Cognitive models require an annotation.
pub fn encode_for_model(
    instance: &ParadigmInstance,
    annotation: Option<&ConceptAnnotation>,
    kind: ModelKind,
    mode: EncodingMode,
    vocab: &Vocab,
) -> Result<Sequence> {
    let ann = match kind {
        ModelKind::Naive => None,
        ModelKind::Cognitive => Some(annotation.ok_or_else(|| {
            Error::MissingAnnotation(format!("cognitive encoding of #{}", instance.index))
        })?),
    };
    match mode {
        EncodingMode::Tokens => {
            let seq = match ann {
                Some(a) => encode_cognitive(instance, a, vocab)?,
                None => encode_naive(instance, vocab)?,
            };
            Ok(Sequence::from_tokens(&seq.tokens, PAD))
        }
        EncodingMode::Binary => Ok(Sequence::from_bags(&encode_binary(instance, ann, vocab)?.active_by_frame())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate, GenConfig};
    use crate::scene::{Condition, Label, Side};

    const CAKE: EntityId = EntityId(1);
    const BAG: EntityId = EntityId(2);
    const GIRL: EntityId = EntityId(150);

    fn vocab() -> Vocab {
        Vocab::for_catalog(&Catalog::default())
    }

    fn one_frame(paradigm: Paradigm, animacy: Animacy) -> ParadigmInstance {
        ParadigmInstance {
            paradigm,
            frames: vec![build_frame(Some((CAKE, BAG)), Some((GIRL, Slot::Bottom))).unwrap()],
            actor: GIRL,
            animacy,
            goal: (animacy == Animacy::Animate).then_some(CAKE),
            interaction_side: None,
            label: Label::Side(Side::Left),
            condition: Condition::T1,
            seed: 0,
            index: 0,
        }
    }

    fn t(v: &Vocab, e: EntityId) -> u32 {
        v.entity_token(e).unwrap()
    }

    #[test]
    fn naive_frame_is_objects_then_actor() {
        let v = vocab();
        let inst = one_frame(Paradigm::ThreeFrame, Animacy::Animate);
        let seq = encode_naive(&inst, &v).unwrap();
        assert_eq!(seq.tokens, vec![t(&v, CAKE), t(&v, BAG), t(&v, GIRL), SEP]);
    }

    #[test]
    fn cognitive_marks_animacy_and_goal() {
        let v = vocab();
        let inst = one_frame(Paradigm::ThreeFrame, Animacy::Animate);
        let ann = ConceptAnnotation::ground_truth(&inst);
        let seq = encode_cognitive(&inst, &ann, &v).unwrap();
        assert_eq!(seq.tokens, vec![t(&v, CAKE), t(&v, BAG), ANIMATE, t(&v, GIRL), SEP]);

        let goal = one_frame(Paradigm::OneFrameGoal, Animacy::Animate);
        let ann = ConceptAnnotation::ground_truth(&goal);
        let seq = encode_cognitive(&goal, &ann, &v).unwrap();
        assert_eq!(seq.tokens, vec![t(&v, CAKE), t(&v, BAG), t(&v, GIRL), GOAL, t(&v, CAKE), SEP]);
        assert_eq!(strip_concepts(&seq), encode_naive(&goal, &v).unwrap());
    }

    #[test]
    fn annotation_errors() {
        let v = vocab();
        let inst = one_frame(Paradigm::ThreeFrame, Animacy::Inanimate);
        let empty = ConceptAnnotation {
            animacy: None,
            goal: None,
            provenance: Provenance::GroundTruth,
        };
        assert!(matches!(encode_cognitive(&inst, &empty, &v), Err(Error::MissingAnnotation(_))));
        let bad = ConceptAnnotation {
            animacy: Some(Animacy::Inanimate),
            goal: Some(CAKE),
            provenance: Provenance::GroundTruth,
        };
        assert!(matches!(encode_cognitive(&inst, &bad, &v), Err(Error::InconsistentAnnotation(_))));
    }

    #[test]
    fn unknown_entity_is_rejected() {
        let v = vocab();
        let mut inst = one_frame(Paradigm::ThreeFrame, Animacy::Animate);
        inst.frames = vec![build_frame(Some((CAKE, EntityId(9999))), None).unwrap()];
        assert!(matches!(encode_naive(&inst, &v), Err(Error::UnknownEntity(9999))));
        assert!(matches!(encode_binary(&inst, None, &v), Err(Error::UnknownEntity(9999))));
    }

    #[test]
    fn motion_frames_pad_objects() {
        let v = vocab();
        let mut inst = one_frame(Paradigm::TwoFrameMotion, Animacy::Animate);
        inst.frames = vec![
            build_frame(None, Some((GIRL, Slot::BottomLeft))).unwrap(),
            build_frame(None, Some((GIRL, Slot::BottomRight))).unwrap(),
        ];
        let seq = encode_naive(&inst, &v).unwrap();
        let bl = v.slot_token(Slot::BottomLeft);
        let br = v.slot_token(Slot::BottomRight);
        assert_eq!(seq.tokens, vec![PAD, PAD, t(&v, GIRL), bl, SEP, PAD, PAD, t(&v, GIRL), br, SEP]);
        assert_eq!(decode(&seq, &v).unwrap().frames, inst.frames);
    }

    #[test]
    fn binary_fields() {
        let v = vocab();
        let inst = one_frame(Paradigm::ThreeFrame, Animacy::Animate);
        let layout = BitLayout { n_entities: v.n_entities() };
        let naive = encode_binary(&inst, None, &v).unwrap();
        let ann = ConceptAnnotation::ground_truth(&inst);
        let cog = encode_binary(&inst, Some(&ann), &v).unwrap();
        assert_eq!(naive.bits.len(), cog.bits.len());
        assert_eq!(naive.bits.len(), layout.frame_width());
        assert!(naive.frame(0)[layout.animacy()..].iter().all(|&b| b == 0));
        assert_eq!(&cog.frame(0)[layout.animacy()..layout.animacy() + 2], &[1, 0]);
    }

    #[test]
    fn vocab_json_round_trip() {
        let v = vocab();
        let back = Vocab::from_json(&v.to_json().unwrap()).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn lengths_are_constant_per_paradigm_and_round_trip() {
        let v = vocab();
        let catalog = Catalog::default();
        for paradigm in Paradigm::ALL {
            let cfg = GenConfig::new(paradigm, 40, 20, 4);
            let (train, _) = generate(&cfg, &catalog).unwrap();
            let mut lens = std::collections::BTreeSet::new();
            for inst in &train.instances {
                let naive = encode_naive(inst, &v).unwrap();
                lens.insert(naive.len());
                assert_eq!(decode(&naive, &v).unwrap().frames, inst.frames);
                if paradigm != Paradigm::TwoFrameMotion {
                    let ann = ConceptAnnotation::ground_truth(inst);
                    let cog = encode_cognitive(inst, &ann, &v).unwrap();
                    assert_eq!(strip_concepts(&cog), naive);
                    let dec = decode(&cog, &v).unwrap();
                    assert_eq!(dec.frames, inst.frames);
                }
            }
            assert_eq!(lens.len(), 1, "{paradigm:?} lengths {lens:?}");
        }
    }
}
