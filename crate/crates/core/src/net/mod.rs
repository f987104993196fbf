//! A small transformer encoder classifier trained from scratch.
//!
//! Architecture: summed feature + positional embeddings, `n_blocks` pre-norm
//! encoder blocks (multi-head self-attention and a GELU feed-forward layer,
//! each wrapped in a residual connection), a final layer norm, mean pooling
//! over live positions and a linear head with softmax. All arithmetic is in
//! `f64` and every gradient is derived by hand.
//!
//! A position may carry several features whose embeddings are summed, so a
//! token sequence (one feature per position) and a bit vector (one position
//! per frame, one feature per set bit) use the same network.

mod checkpoint;
mod gradcheck;
mod layout;
mod model;
mod ops;
mod optim;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};
pub use gradcheck::{compare_gradients, grad_check, grad_check_by_kind, relative_error, GradCheckReport, KindReport};
pub use layout::{LayerKind, Layout, TensorSpec};
pub use model::{Example, Model};
pub use optim::Adam;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub n_blocks: usize,
    pub n_heads: usize,
    pub ff_dim: usize,
    pub max_len: usize,
    pub n_classes: usize,
    pub init_scale: f64,
    pub seed: u64,
    /// Start each block's key projection as a copy of its query projection,
    /// so identical tokens attend to each other from the first step.
    #[serde(default)]
    pub tie_qk_init: bool,
    /// Fingerprint of the vocabulary the inputs were encoded with, if known.
    #[serde(default)]
    pub vocab_hash: Option<String>,
}

impl ModelConfig {
    pub fn new(vocab_size: usize, max_len: usize) -> ModelConfig {
        ModelConfig {
            vocab_size,
            embed_dim: 64,
            n_blocks: 2,
            n_heads: 4,
            ff_dim: 128,
            max_len,
            n_classes: 2,
            init_scale: 1.0,
            seed: 0,
            tie_qk_init: true,
            vocab_hash: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::BadConfig(m));
        if self.vocab_size == 0 || self.max_len == 0 {
            return bad("vocab_size and max_len must be positive".into());
        }
        if self.embed_dim == 0 || self.n_heads == 0 || self.ff_dim == 0 {
            return bad("embed_dim, n_heads and ff_dim must be positive".into());
        }
        if !self.embed_dim.is_multiple_of(self.n_heads) {
            return bad(format!(
                "embed_dim {} is not divisible by n_heads {}",
                self.embed_dim, self.n_heads
            ));
        }
        if self.n_classes < 2 {
            return bad("need at least two classes".into());
        }
        if !(self.init_scale.is_finite() && self.init_scale >= 0.0) {
            return bad(format!("init_scale {} must be finite and non-negative", self.init_scale));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.embed_dim / self.n_heads
    }
}

/// Classifier input: positions, each a bag of feature indices, with a mask of
/// live positions. Dead positions are excluded from attention keys and pooling.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Sequence {
    features: Vec<u32>,
    offsets: Vec<u32>,
    live: Vec<bool>,
}

impl Sequence {
    /// One feature per position; positions holding `pad` are dead.
    pub fn from_tokens(tokens: &[u32], pad: u32) -> Sequence {
        Sequence {
            features: tokens.to_vec(),
            offsets: (0..=tokens.len() as u32).collect(),
            live: tokens.iter().map(|&t| t != pad).collect(),
        }
    }

    /// One position per bag; every position is live.
    pub fn from_bags(bags: &[Vec<u32>]) -> Sequence {
        let mut offsets = Vec::with_capacity(bags.len() + 1);
        offsets.push(0u32);
        let mut features = Vec::new();
        for b in bags {
            features.extend_from_slice(b);
            offsets.push(features.len() as u32);
        }
        Sequence {
            features,
            offsets,
            live: vec![true; bags.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.live.len()
    }

    pub fn is_empty(&self) -> bool {
        self.live.is_empty()
    }

    pub fn position(&self, p: usize) -> &[u32] {
        &self.features[self.offsets[p] as usize..self.offsets[p + 1] as usize]
    }

    pub fn is_live(&self, p: usize) -> bool {
        self.live[p]
    }

    pub fn live_count(&self) -> usize {
        self.live.iter().filter(|&&l| l).count()
    }

    pub fn features(&self) -> &[u32] {
        &self.features
    }

    /// Returns a copy with every occurrence of feature `a` and `b` exchanged.
    pub fn relabel(&self, a: u32, b: u32) -> Sequence {
        let mut out = self.clone();
        for f in &mut out.features {
            if *f == a {
                *f = b;
            } else if *f == b {
                *f = a;
            }
        }
        out
    }

    pub(crate) fn check(&self, config: &ModelConfig) -> Result<()> {
        if self.len() > config.max_len {
            return Err(Error::TooLong {
                len: self.len(),
                max_len: config.max_len,
            });
        }
        if let Some(&index) = self.features.iter().find(|&&f| f as usize >= config.vocab_size) {
            return Err(Error::OutOfVocab {
                index,
                vocab_size: config.vocab_size,
            });
        }
        if self.live_count() == 0 {
            return Err(Error::EmptySequence);
        }
        Ok(())
    }
}
