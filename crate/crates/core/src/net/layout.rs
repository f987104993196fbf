use serde::{Deserialize, Serialize};

use super::ModelConfig;

/// Parameter groups, used to report gradient checks per layer type.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    Embedding,
    LayerNorm,
    Attention,
    FeedForward,
    Head,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
    pub kind: LayerKind,
}

impl TensorSpec {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct BlockOffsets {
    pub ln1_g: usize,
    pub ln1_b: usize,
    pub wq: usize,
    pub wk: usize,
    pub wv: usize,
    pub wo: usize,
    pub bo: usize,
    pub ln2_g: usize,
    pub ln2_b: usize,
    pub w1: usize,
    pub b1: usize,
    pub w2: usize,
    pub b2: usize,
}

/// Offsets of every tensor inside the flat parameter vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    pub(crate) tok: usize,
    pub(crate) pos: usize,
    pub(crate) blocks: Vec<BlockOffsets>,
    pub(crate) lnf_g: usize,
    pub(crate) lnf_b: usize,
    pub(crate) head_w: usize,
    pub(crate) head_b: usize,
    total: usize,
    tensors: Vec<TensorSpec>,
}

impl Layout {
    pub fn new(c: &ModelConfig) -> Layout {
        let mut tensors = Vec::new();
        let mut next = 0usize;
        let mut add = |name: String, shape: Vec<usize>, kind: LayerKind| {
            let offset = next;
            next += shape.iter().product::<usize>();
            tensors.push(TensorSpec {
                name,
                shape,
                offset,
                kind,
            });
            offset
        };
        let d = c.embed_dim;
        let tok = add("tok_emb".into(), vec![c.vocab_size, d], LayerKind::Embedding);
        let pos = add("pos_emb".into(), vec![c.max_len, d], LayerKind::Embedding);
        let mut blocks = Vec::with_capacity(c.n_blocks);
        for b in 0..c.n_blocks {
            let p = |n: &str| format!("block{b}.{n}");
            blocks.push(BlockOffsets {
                ln1_g: add(p("ln1.gain"), vec![d], LayerKind::LayerNorm),
                ln1_b: add(p("ln1.bias"), vec![d], LayerKind::LayerNorm),
                wq: add(p("attn.wq"), vec![d, d], LayerKind::Attention),
                wk: add(p("attn.wk"), vec![d, d], LayerKind::Attention),
                wv: add(p("attn.wv"), vec![d, d], LayerKind::Attention),
                wo: add(p("attn.wo"), vec![d, d], LayerKind::Attention),
                bo: add(p("attn.bo"), vec![d], LayerKind::Attention),
                ln2_g: add(p("ln2.gain"), vec![d], LayerKind::LayerNorm),
                ln2_b: add(p("ln2.bias"), vec![d], LayerKind::LayerNorm),
                w1: add(p("ff.w1"), vec![d, c.ff_dim], LayerKind::FeedForward),
                b1: add(p("ff.b1"), vec![c.ff_dim], LayerKind::FeedForward),
                w2: add(p("ff.w2"), vec![c.ff_dim, d], LayerKind::FeedForward),
                b2: add(p("ff.b2"), vec![d], LayerKind::FeedForward),
            });
        }
        let lnf_g = add("lnf.gain".into(), vec![d], LayerKind::LayerNorm);
        let lnf_b = add("lnf.bias".into(), vec![d], LayerKind::LayerNorm);
        let head_w = add("head.w".into(), vec![d, c.n_classes], LayerKind::Head);
        let head_b = add("head.b".into(), vec![c.n_classes], LayerKind::Head);
        Layout {
            tok,
            pos,
            blocks,
            lnf_g,
            lnf_b,
            head_w,
            head_b,
            total: next,
            tensors,
        }
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn tensors(&self) -> &[TensorSpec] {
        &self.tensors
    }

    pub fn tensor(&self, name: &str) -> Option<&TensorSpec> {
        self.tensors.iter().find(|t| t.name == name)
    }

    /// Tensor containing flat parameter `index`.
    pub fn locate(&self, index: usize) -> Option<&TensorSpec> {
        self.tensors.iter().find(|t| t.range().contains(&index))
    }
}
