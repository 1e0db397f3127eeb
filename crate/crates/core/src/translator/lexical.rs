use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::corpus::SentencePair;
use crate::error::{Error, Result};
use crate::hash::ContentHasher;
use crate::lang::Lang;
use crate::tokenizer::{TokenId, Vocabulary, UNK};

use super::Translator;

/// Probability assigned to events the model has never seen.
pub const PROB_FLOOR: f64 = 1e-10;

const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// `p(target token | source token)`, sorted by target id.
pub type Distribution = Vec<(TokenId, f64)>;

/// Per-source-token distributions for one target language.
pub type Table = BTreeMap<TokenId, Distribution>;

/// Word-to-word translation tables keyed by target language, over a frozen
/// shared vocabulary.
///
/// Decoding is monotone and one-to-one: every source token is replaced by the
/// most probable target token of its distribution (lowest id on ties).
/// Source tokens without a distribution, and source tokens outside the
/// vocabulary, are copied through when `copy_prob >= 0.5` and rendered as
/// `<unk>` otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct LexicalModel {
    vocab: Arc<Vocabulary>,
    tables: BTreeMap<Lang, Table>,
    copy_prob: f64,
}

impl LexicalModel {
    pub fn new(vocab: Arc<Vocabulary>) -> Self {
        LexicalModel { vocab, tables: BTreeMap::new(), copy_prob: 1.0 }
    }

    /// Builds a model from explicit tables, checking that every distribution
    /// is normalized and only references in-vocabulary ids.
    pub fn from_tables(vocab: Arc<Vocabulary>, tables: BTreeMap<Lang, Table>, copy_prob: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&copy_prob) {
            return Err(Error::Parse(format!("copy_prob {copy_prob} outside [0, 1]")));
        }
        let size = vocab.len();
        for (lang, table) in &tables {
            for (&src, dist) in table {
                check_id(src, size)?;
                let mut sum = 0.0;
                let mut prev: Option<TokenId> = None;
                for &(tgt, p) in dist {
                    check_id(tgt, size)?;
                    if !(p >= 0.0) || prev.is_some_and(|q| q >= tgt) {
                        return Err(Error::Parse(format!("bad distribution for token {src} in table {lang}")));
                    }
                    prev = Some(tgt);
                    sum += p;
                }
                if libm::fabs(sum - 1.0) > NORMALIZATION_TOLERANCE {
                    return Err(Error::Parse(format!("distribution for token {src} in table {lang} sums to {sum}")));
                }
            }
        }
        Ok(LexicalModel { vocab, tables, copy_prob })
    }

    pub fn with_copy_prob(mut self, copy_prob: f64) -> Self {
        self.copy_prob = copy_prob.clamp(0.0, 1.0);
        self
    }

    pub fn vocab(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    pub fn tables(&self) -> &BTreeMap<Lang, Table> {
        &self.tables
    }

    pub(crate) fn tables_mut(&mut self) -> &mut BTreeMap<Lang, Table> {
        &mut self.tables
    }

    pub fn copy_prob(&self) -> f64 {
        self.copy_prob
    }

    pub fn copies_unknown(&self) -> bool {
        self.copy_prob >= 0.5
    }

    pub fn distribution(&self, target: &Lang, src: TokenId) -> Option<&Distribution> {
        self.tables.get(target)?.get(&src)
    }

    /// `t(tgt | src)` for the table of `target`, zero when absent.
    pub fn prob(&self, target: &Lang, src: TokenId, tgt: TokenId) -> f64 {
        self.distribution(target, src)
            .and_then(|d| d.binary_search_by_key(&tgt, |e| e.0).ok().map(|i| d[i].1))
            .unwrap_or(0.0)
    }

    /// Most probable target id for `src`, lowest id on ties.
    pub fn best(&self, target: &Lang, src: TokenId) -> Option<TokenId> {
        let dist = self.distribution(target, src)?;
        let mut best: Option<(TokenId, f64)> = None;
        for &(tgt, p) in dist {
            if best.is_none_or(|(_, bp)| p > bp) {
                best = Some((tgt, p));
            }
        }
        best.map(|b| b.0)
    }

    pub fn content_hash(&self) -> String {
        let mut h = ContentHasher::new();
        h.str("lexical-model").str(&self.vocab.content_hash()).f64(self.copy_prob);
        h.u64(self.tables.len() as u64);
        for (lang, table) in &self.tables {
            h.str(lang.as_str()).u64(table.len() as u64);
            for (&src, dist) in table {
                h.u64(u64::from(src)).u64(dist.len() as u64);
                for &(tgt, p) in dist {
                    h.u64(u64::from(tgt)).f64(p);
                }
            }
        }
        h.finish()
    }

    /// Per-target-token probabilities `p(t_j | s)` with uniform alignment over
    /// source positions.
    fn token_probs<'a>(&'a self, source: &'a str, target_text: &'a str, target: &'a Lang) -> impl Iterator<Item = f64> + 'a {
        let src: Vec<(&str, TokenId)> = source
            .split_whitespace()
            .map(|w| (w, self.vocab.id(w).unwrap_or(Vocabulary::UNK_ID)))
            .collect();
        let table = self.tables.get(target);
        target_text.split_whitespace().map(move |tw| {
            if src.is_empty() {
                return 0.0;
            }
            let tid = self.vocab.id(tw).unwrap_or(Vocabulary::UNK_ID);
            let sum: f64 = src
                .iter()
                .map(|&(sw, sid)| {
                    let dist = table.and_then(|t| t.get(&sid));
                    match dist {
                        Some(d) => d.binary_search_by_key(&tid, |e| e.0).map_or(0.0, |i| d[i].1),
                        None if sw == tw => self.copy_prob,
                        None => 0.0,
                    }
                })
                .sum();
            sum / src.len() as f64
        })
    }
}

fn check_id(id: TokenId, size: usize) -> Result<()> {
    if (id as usize) < size {
        Ok(())
    } else {
        Err(Error::TokenOutOfRange { id, size })
    }
}

impl Translator for LexicalModel {
    fn translate(&self, text: &str, target: &Lang) -> Result<String> {
        let copy = self.copies_unknown();
        if self.vocab.tag_id(target).is_none() && !copy {
            return Err(Error::UnregisteredLanguage(target.clone()));
        }
        let table = self.tables.get(target);
        let mut out = String::new();
        for word in text.split_whitespace() {
            let mapped = self
                .vocab
                .id(word)
                .and_then(|id| table.and_then(|t| t.contains_key(&id).then_some(id)))
                .and_then(|id| self.best(target, id))
                .map(|best| self.vocab.token(best).unwrap_or(UNK));
            let emitted = match mapped {
                Some(w) => w,
                None if copy => word,
                None => UNK,
            };
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(emitted);
        }
        Ok(out)
    }

    fn score(&self, pair: &SentencePair, target: &Lang) -> f64 {
        self.token_probs(&pair.source, &pair.target, target)
            .map(|p| -libm::log(p.max(PROB_FLOOR)))
            .sum()
    }

    fn supports(&self, target: &Lang) -> bool {
        self.tables.contains_key(target)
    }
}
