//! IBM-Model-1 expectation maximization over per-target-language tables.
//!
//! Each pair `(s, t)` trained for target language `L` contributes
//! `log p(t | s) = sum_j log( (1/|s|) * sum_i t_L(t_j | s_i) )`. One epoch is
//! one E-step (expected alignment counts under the current tables) followed
//! by one M-step (renormalize counts per source token). The training NLL is
//! therefore non-increasing from epoch to epoch.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::ParallelCorpus;
use crate::error::{Error, Result};
use crate::lang::Lang;
use crate::tokenizer::{TokenId, Vocabulary};

use super::lexical::{LexicalModel, PROB_FLOOR};
use super::TrainingSession;

/// Mass mixed uniformly into warm-started distributions so that
/// co-occurrences absent from the previous round can still be learned.
pub const WARM_START_SMOOTHING: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingReport {
    pub epochs: usize,
    pub neg_log_likelihood_per_epoch: Vec<f64>,
    pub pairs_seen: usize,
}

/// Co-occurrence slots and alignment index for one target language.
struct TableData {
    lang: Lang,
    /// Source token of each bucket; slots of bucket `b` are
    /// `bucket_start[b]..bucket_start[b + 1]`, sorted by target id.
    bucket_src: Vec<TokenId>,
    bucket_start: Vec<usize>,
    slot_tgt: Vec<TokenId>,
    probs: Vec<f64>,
    counts: Vec<f64>,
    /// Per pair: `(source length, target length, offset into pair_slots)`;
    /// the slot of target position `j` and source position `i` is at
    /// `offset + j * source_len + i`.
    pairs: Vec<(usize, usize, usize)>,
    pair_slots: Vec<u32>,
}

impl TableData {
    fn build(lang: Lang, pairs: &[(Vec<TokenId>, Vec<TokenId>)], init: Option<&LexicalModel>) -> Self {
        let mut cooc: BTreeSet<(TokenId, TokenId)> = BTreeSet::new();
        for (src, tgt) in pairs {
            for &s in src {
                for &t in tgt {
                    cooc.insert((s, t));
                }
            }
        }
        let mut bucket_src = Vec::new();
        let mut bucket_start = Vec::new();
        let mut slot_tgt = Vec::with_capacity(cooc.len());
        let mut bucket_of: BTreeMap<TokenId, usize> = BTreeMap::new();
        for &(s, t) in &cooc {
            if bucket_src.last() != Some(&s) {
                bucket_of.insert(s, bucket_src.len());
                bucket_src.push(s);
                bucket_start.push(slot_tgt.len());
            }
            slot_tgt.push(t);
        }
        bucket_start.push(slot_tgt.len());

        let mut index = Vec::with_capacity(pairs.len());
        let mut pair_slots = Vec::new();
        for (src, tgt) in pairs {
            index.push((src.len(), tgt.len(), pair_slots.len()));
            for &t in tgt {
                for &s in src {
                    let b = bucket_of[&s];
                    let range = &slot_tgt[bucket_start[b]..bucket_start[b + 1]];
                    let k = range.binary_search(&t).expect("co-occurrence slot");
                    pair_slots.push((bucket_start[b] + k) as u32);
                }
            }
        }

        let mut probs = vec![1.0; slot_tgt.len()];
        if let Some(model) = init {
            for (b, &s) in bucket_src.iter().enumerate() {
                let range = bucket_start[b]..bucket_start[b + 1];
                let uniform = 1.0 / range.len() as f64;
                match model.distribution(&lang, s) {
                    Some(_) => {
                        for k in range {
                            let old = model.prob(&lang, s, slot_tgt[k]);
                            probs[k] = (1.0 - WARM_START_SMOOTHING) * old + WARM_START_SMOOTHING * uniform;
                        }
                    }
                    None => probs[range].fill(uniform),
                }
            }
        }
        let counts = vec![0.0; slot_tgt.len()];
        TableData { lang, bucket_src, bucket_start, slot_tgt, probs, counts, pairs: index, pair_slots }
    }

    fn e_step(&mut self) {
        self.counts.fill(0.0);
        for &(sl, tl, off) in &self.pairs {
            if sl == 0 {
                continue;
            }
            for j in 0..tl {
                let row = &self.pair_slots[off + j * sl..off + (j + 1) * sl];
                let denom: f64 = row.iter().map(|&k| self.probs[k as usize]).sum();
                if denom > 0.0 {
                    for &k in row {
                        self.counts[k as usize] += self.probs[k as usize] / denom;
                    }
                } else {
                    let w = 1.0 / sl as f64;
                    for &k in row {
                        self.counts[k as usize] += w;
                    }
                }
            }
        }
    }

    fn m_step(&mut self) {
        for b in 0..self.bucket_src.len() {
            let range = self.bucket_start[b]..self.bucket_start[b + 1];
            let total: f64 = self.counts[range.clone()].iter().sum();
            if total > 0.0 {
                for k in range {
                    self.probs[k] = self.counts[k] / total;
                }
            }
        }
    }

    /// Summed NLL over this table's pairs and the number of pairs.
    fn nll(&self) -> f64 {
        let mut total = 0.0;
        for &(sl, tl, off) in &self.pairs {
            for j in 0..tl {
                let p = if sl == 0 {
                    0.0
                } else {
                    let row = &self.pair_slots[off + j * sl..off + (j + 1) * sl];
                    row.iter().map(|&k| self.probs[k as usize]).sum::<f64>() / sl as f64
                };
                total -= libm::log(p.max(PROB_FLOOR));
            }
        }
        total
    }

    fn write_into(&self, model: &mut LexicalModel) {
        let table = model.tables_mut().entry(self.lang.clone()).or_default();
        for (b, &s) in self.bucket_src.iter().enumerate() {
            let range = self.bucket_start[b]..self.bucket_start[b + 1];
            let dist = range
                .filter(|&k| self.probs[k] > 0.0)
                .map(|k| (self.slot_tgt[k], self.probs[k]))
                .collect();
            table.insert(s, dist);
        }
    }
}

/// Stepwise EM training; the orchestrator evaluates between epochs for early
/// stopping.
pub struct EmSession {
    base: LexicalModel,
    tables: Vec<TableData>,
    num_pairs: usize,
    epochs: usize,
}

impl EmSession {
    pub fn new(vocab: &Arc<Vocabulary>, data: &[&ParallelCorpus], init: Option<&LexicalModel>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyInput("train: no corpora"));
        }
        if let Some(model) = init {
            let (expected, found) = (vocab.content_hash(), model.vocab().content_hash());
            if expected != found {
                return Err(Error::VocabularyMismatch { expected, found });
            }
        }
        let mut by_lang: BTreeMap<Lang, Vec<(Vec<TokenId>, Vec<TokenId>)>> = BTreeMap::new();
        let mut num_pairs = 0;
        for corpus in data {
            if corpus.is_empty() {
                return Err(Error::EmptyInput("train: empty corpus"));
            }
            if vocab.tag_id(&corpus.tgt_lang).is_none() {
                return Err(Error::UnregisteredLanguage(corpus.tgt_lang.clone()));
            }
            let bucket = by_lang.entry(corpus.tgt_lang.clone()).or_default();
            for p in &corpus.pairs {
                bucket.push((vocab.encode(&p.source).ids, vocab.encode(&p.target).ids));
            }
            num_pairs += corpus.len();
        }
        let tables = by_lang
            .into_iter()
            .map(|(lang, pairs)| TableData::build(lang, &pairs, init))
            .collect();
        let base = init.cloned().unwrap_or_else(|| LexicalModel::new(Arc::clone(vocab)));
        Ok(EmSession { base, tables, num_pairs, epochs: 0 })
    }

    pub fn nll(&self) -> f64 {
        self.tables.iter().map(TableData::nll).sum::<f64>() / self.num_pairs as f64
    }
}

impl TrainingSession for EmSession {
    type Model = LexicalModel;

    fn step(&mut self) -> Result<f64> {
        for t in &mut self.tables {
            t.e_step();
            t.m_step();
        }
        self.epochs += 1;
        Ok(self.nll())
    }

    fn snapshot(&self) -> LexicalModel {
        let mut model = self.base.clone();
        if self.epochs > 0 {
            for t in &self.tables {
                t.write_into(&mut model);
            }
        }
        model
    }

    fn epochs_run(&self) -> usize {
        self.epochs
    }

    fn pairs_per_epoch(&self) -> usize {
        self.num_pairs
    }
}

/// Trains for a fixed number of epochs. With `epochs == 0` the returned model
/// is `init` unchanged (or an empty model).
pub fn train(
    vocab: &Arc<Vocabulary>,
    data: &[&ParallelCorpus],
    init: Option<&LexicalModel>,
    epochs: usize,
) -> Result<(LexicalModel, TrainingReport)> {
    let mut session = EmSession::new(vocab, data, init)?;
    let mut nll = Vec::with_capacity(epochs);
    for _ in 0..epochs {
        nll.push(session.step()?);
    }
    let report = TrainingReport {
        epochs,
        neg_log_likelihood_per_epoch: nll,
        pairs_seen: epochs * session.pairs_per_epoch(),
    };
    Ok((session.snapshot(), report))
}
