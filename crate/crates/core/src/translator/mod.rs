//! The pluggable translator interface and its lexical EM backend.
//!
//! A backend is trained to minimize the summed cross-entropy of its training
//! corpora, warm-starting from a previous model when one is given, and
//! decodes conditioned on a target-language tag. The orchestrator only talks
//! to these traits, so a neural backend can replace [`LexicalModel`] without
//! touching the round schedule.

mod em;
mod lexical;

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

pub use em::{train, EmSession, TrainingReport, WARM_START_SMOOTHING};
pub use lexical::{Distribution, LexicalModel, Table, PROB_FLOOR};

use crate::corpus::{ParallelCorpus, SentencePair};
use crate::error::Result;
use crate::lang::Lang;
use crate::tokenizer::Vocabulary;

/// Inference side of a translation model.
pub trait Translator {
    /// Translates `text` into `target`.
    fn translate(&self, text: &str, target: &Lang) -> Result<String>;

    /// Negative log-likelihood of `pair.target` given `pair.source`.
    fn score(&self, pair: &SentencePair, target: &Lang) -> f64;

    /// Whether the model has been trained to produce `target`.
    fn supports(&self, target: &Lang) -> bool;

    fn translate_all<'a, I>(&self, lines: I, target: &Lang) -> Result<Vec<String>>
    where
        I: IntoIterator<Item = &'a str>,
        Self: Sized,
    {
        lines.into_iter().map(|l| self.translate(l, target)).collect()
    }
}

/// An epoch-at-a-time training run.
pub trait TrainingSession {
    type Model;

    /// Runs one epoch and returns the mean per-pair negative log-likelihood
    /// of the training data under the updated parameters.
    fn step(&mut self) -> Result<f64>;

    /// The current parameters as a standalone model.
    fn snapshot(&self) -> Self::Model;

    fn epochs_run(&self) -> usize;

    fn pairs_per_epoch(&self) -> usize;
}

/// A trainable translator. Every pair of every corpus trains the parameters
/// for that corpus's target language.
pub trait Backend: Translator + Clone + Sized {
    type Session: TrainingSession<Model = Self>;

    fn begin(vocab: &Arc<Vocabulary>, data: &[&ParallelCorpus], init: Option<&Self>) -> Result<Self::Session>;

    /// A fresh model that has seen no data.
    fn untrained(vocab: &Arc<Vocabulary>) -> Self;

    fn content_hash(&self) -> String;
}

impl Backend for LexicalModel {
    type Session = EmSession;

    fn begin(vocab: &Arc<Vocabulary>, data: &[&ParallelCorpus], init: Option<&Self>) -> Result<EmSession> {
        EmSession::new(vocab, data, init)
    }

    fn untrained(vocab: &Arc<Vocabulary>) -> Self {
        LexicalModel::new(Arc::clone(vocab))
    }

    fn content_hash(&self) -> String {
        LexicalModel::content_hash(self)
    }
}
