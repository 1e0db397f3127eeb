//! Frozen shared word vocabulary with target-language tag slots.
//!
//! Ids `0..3` are `<unk>`, `<s>`, `</s>`; corpus tokens follow in descending
//! frequency (ties broken lexicographically); the last `tags.len()` ids are
//! reserved for target-language tags and never assigned to corpus tokens.
//! Ids between the last corpus token and the first tag slot are unused
//! filler. The vocabulary is immutable once built.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::corpus::MonoCorpus;
use crate::error::{Error, Result};
use crate::hash::ContentHasher;
use crate::lang::Lang;

pub type TokenId = u32;

pub const UNK: &str = "<unk>";
pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
const NUM_SPECIALS: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    pub ids: Vec<TokenId>,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    token_to_id: BTreeMap<String, TokenId>,
    tag_ids: BTreeMap<Lang, TokenId>,
    num_corpus_tokens: usize,
}

impl Vocabulary {
    pub const UNK_ID: TokenId = 0;
    pub const BOS_ID: TokenId = 1;
    pub const EOS_ID: TokenId = 2;

    /// Counts whitespace tokens over `corpora` and keeps the most frequent
    /// ones that fit in `max_size` after specials and one tag slot per
    /// language in `tag_langs` (assigned to the tail in the given order).
    pub fn build(corpora: &[MonoCorpus], max_size: usize, tag_langs: &[Lang]) -> Result<Self> {
        if corpora.is_empty() {
            return Err(Error::EmptyInput("build_vocab: no corpora"));
        }
        let num_tags = tag_langs.len();
        if num_tags == 0 {
            return Err(Error::Vocabulary(String::from("at least one tag slot is required")));
        }
        if max_size <= num_tags + NUM_SPECIALS {
            return Err(Error::Vocabulary(format!(
                "max_size {max_size} leaves no room beyond {num_tags} tags and {NUM_SPECIALS} specials"
            )));
        }
        let mut distinct = tag_langs.to_vec();
        distinct.sort();
        distinct.dedup();
        if distinct.len() != num_tags {
            return Err(Error::Vocabulary(String::from("duplicate tag language")));
        }

        let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
        for corpus in corpora {
            for line in &corpus.lines {
                for tok in line.split_whitespace() {
                    *counts.entry(tok).or_default() += 1;
                }
            }
        }
        if counts.is_empty() {
            return Err(Error::Vocabulary(String::from("corpora contain no tokens")));
        }
        let mut ranked: Vec<(&str, u64)> = counts.into_iter().collect();
        // BTreeMap iteration is already lexicographic, so a stable sort on
        // descending count gives lexicographic tie-breaking.
        ranked.sort_by_key(|r| core::cmp::Reverse(r.1));
        ranked.truncate(max_size - num_tags - NUM_SPECIALS);

        let mut tokens: Vec<String> = [UNK, BOS, EOS].iter().map(|s| String::from(*s)).collect();
        let mut token_to_id = BTreeMap::new();
        for (tok, _) in &ranked {
            token_to_id.insert(String::from(*tok), tokens.len() as TokenId);
            tokens.push(String::from(*tok));
        }
        let num_corpus_tokens = ranked.len();
        let first_tag = max_size - num_tags;
        while tokens.len() < first_tag {
            tokens.push(format!("<unused{}>", tokens.len()));
        }
        let mut tag_ids = BTreeMap::new();
        for lang in tag_langs {
            tag_ids.insert(lang.clone(), tokens.len() as TokenId);
            tokens.push(format!("<2{lang}>"));
        }
        Ok(Vocabulary { tokens, token_to_id, tag_ids, num_corpus_tokens })
    }

    /// Reassembles a vocabulary from its id-ordered token list and tag
    /// assignment, as stored on disk. Corpus tokens are ids
    /// `3..3 + num_corpus_tokens`.
    pub fn from_parts(tokens: Vec<String>, num_corpus_tokens: usize, tag_ids: BTreeMap<Lang, TokenId>) -> Result<Self> {
        if tokens.len() < NUM_SPECIALS + num_corpus_tokens + tag_ids.len() {
            return Err(Error::Vocabulary(String::from("token list too short")));
        }
        let first_tag = (tokens.len() - tag_ids.len()) as TokenId;
        let mut seen: Vec<TokenId> = tag_ids.values().copied().collect();
        seen.sort_unstable();
        if seen.iter().enumerate().any(|(i, &id)| id != first_tag + i as TokenId) {
            return Err(Error::Vocabulary(String::from("tag ids must fill the tail of the id space")));
        }
        let mut token_to_id = BTreeMap::new();
        for (i, tok) in tokens.iter().enumerate().skip(NUM_SPECIALS).take(num_corpus_tokens) {
            if token_to_id.insert(tok.clone(), i as TokenId).is_some() {
                return Err(Error::Vocabulary(format!("duplicate token {tok:?}")));
            }
        }
        Ok(Vocabulary { tokens, token_to_id, tag_ids, num_corpus_tokens })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn num_corpus_tokens(&self) -> usize {
        self.num_corpus_tokens
    }

    /// Corpus tokens, in id order.
    pub fn corpus_tokens(&self) -> &[String] {
        &self.tokens[NUM_SPECIALS..NUM_SPECIALS + self.num_corpus_tokens]
    }

    pub fn tag_ids(&self) -> &BTreeMap<Lang, TokenId> {
        &self.tag_ids
    }

    pub fn tag_id(&self, lang: &Lang) -> Option<TokenId> {
        self.tag_ids.get(lang).copied()
    }

    pub fn is_tag(&self, id: TokenId) -> bool {
        self.tag_ids.values().any(|&t| t == id)
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.token_to_id.get(token).copied()
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn encode(&self, text: &str) -> TokenSequence {
        TokenSequence {
            ids: text.split_whitespace().map(|t| self.id(t).unwrap_or(Self::UNK_ID)).collect(),
        }
    }

    pub fn decode(&self, seq: &TokenSequence) -> Result<String> {
        let mut out = String::new();
        for (i, &id) in seq.ids.iter().enumerate() {
            let tok = self.token(id).ok_or(Error::TokenOutOfRange { id, size: self.len() })?;
            if i > 0 {
                out.push(' ');
            }
            out.push_str(tok);
        }
        Ok(out)
    }

    /// `[<s>, tag(target_lang)] ++ seq`.
    pub fn prepend_tag(&self, seq: &TokenSequence, target_lang: &Lang) -> Result<TokenSequence> {
        let tag = self.tag_id(target_lang).ok_or_else(|| Error::UnregisteredLanguage(target_lang.clone()))?;
        let mut ids = Vec::with_capacity(seq.len() + 2);
        ids.push(Self::BOS_ID);
        ids.push(tag);
        ids.extend_from_slice(&seq.ids);
        Ok(TokenSequence { ids })
    }

    pub fn content_hash(&self) -> String {
        let mut h = ContentHasher::new();
        h.str("vocab").u64(self.tokens.len() as u64).u64(self.num_corpus_tokens as u64);
        for t in &self.tokens {
            h.str(t);
        }
        for (lang, id) in &self.tag_ids {
            h.str(lang.as_str()).u64(u64::from(*id));
        }
        h.finish()
    }
}
