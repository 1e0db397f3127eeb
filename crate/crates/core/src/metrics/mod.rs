//! Corpus-level BLEU-4 with a single reference, case-sensitive, exponential
//! smoothing and no effective order (`nrefs:1|case:mixed|eff:no|smooth:exp`).
//!
//! Exponential smoothing: walking n = 1..4, every order whose clipped match
//! count is zero doubles a running factor `k` and uses precision
//! `1 / (k * total_n)` instead of zero. If an order has no hypothesis n-grams
//! at all the walk stops and that order and all higher ones keep precision 0,
//! which makes the score 0. For example, hypothesis `the the the the` against
//! `the cat` has clipped matches `[1, 0, 0, 0]` out of `[4, 3, 2, 1]`, so
//! precisions are `1/4, 1/(2*3), 1/(4*2), 1/(8*1)`; with brevity penalty 1
//! the score is `100 * (1/4 * 1/6 * 1/8 * 1/8)^(1/4)`.
//!
//! Brevity penalty is `exp(1 - ref_len / hyp_len)` when the hypothesis corpus
//! is shorter than the reference corpus, 0 when it is empty, and 1 otherwise.

mod tok13a;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub use tok13a::tokenize_13a;

use crate::corpus::MonoCorpus;
use crate::error::{Error, Result};
use crate::lang::Lang;
use crate::tokenizer::Vocabulary;
use crate::translator::Translator;

pub const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TokenizationMode {
    /// sacreBLEU `13a` rules over detokenized text.
    Intl13a,
    Whitespace,
    /// Caller-supplied tokenizer.
    External,
    /// Greedy longest-match pieces of a frozen vocabulary.
    SubwordPieces,
}

impl TokenizationMode {
    pub fn name(&self) -> &'static str {
        match self {
            TokenizationMode::Intl13a => "13a",
            TokenizationMode::Whitespace => "whitespace",
            TokenizationMode::External => "external",
            TokenizationMode::SubwordPieces => "subword",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "13a" => Some(TokenizationMode::Intl13a),
            "whitespace" => Some(TokenizationMode::Whitespace),
            "external" => Some(TokenizationMode::External),
            "subword" => Some(TokenizationMode::SubwordPieces),
            _ => None,
        }
    }
}

impl fmt::Display for TokenizationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BleuScore {
    /// In `[0, 100]`.
    pub score: f64,
    /// Smoothed n-gram precisions in `[0, 1]`.
    pub precisions: [f64; MAX_ORDER],
    pub matches: [u64; MAX_ORDER],
    pub totals: [u64; MAX_ORDER],
    pub brevity_penalty: f64,
    pub hyp_len: usize,
    pub ref_len: usize,
    pub tokenization_mode: TokenizationMode,
}

impl BleuScore {
    /// Assembles a score from corpus-level sufficient statistics.
    pub fn from_counts(
        matches: [u64; MAX_ORDER],
        totals: [u64; MAX_ORDER],
        hyp_len: usize,
        ref_len: usize,
        mode: TokenizationMode,
    ) -> Self {
        let mut precisions = [0.0; MAX_ORDER];
        let mut smooth = 1.0;
        for n in 0..MAX_ORDER {
            if totals[n] == 0 {
                break;
            }
            if matches[n] == 0 {
                smooth *= 2.0;
                precisions[n] = 1.0 / (smooth * totals[n] as f64);
            } else {
                precisions[n] = matches[n] as f64 / totals[n] as f64;
            }
        }
        let brevity_penalty = if hyp_len >= ref_len {
            1.0
        } else if hyp_len == 0 {
            0.0
        } else {
            libm::exp(1.0 - ref_len as f64 / hyp_len as f64)
        };
        let score = if precisions.contains(&0.0) {
            0.0
        } else {
            let mean_log = precisions.iter().map(|&p| libm::log(p)).sum::<f64>() / MAX_ORDER as f64;
            100.0 * brevity_penalty * libm::exp(mean_log)
        };
        BleuScore { score, precisions, matches, totals, brevity_penalty, hyp_len, ref_len, tokenization_mode: mode }
    }
}

/// Clipped n-gram statistics of one tokenized sentence pair, added into the
/// running corpus totals.
fn accumulate<S: AsRef<str> + Ord>(hyp: &[S], reference: &[S], matches: &mut [u64; MAX_ORDER], totals: &mut [u64; MAX_ORDER]) {
    for n in 1..=MAX_ORDER {
        if hyp.len() < n {
            break;
        }
        let mut ref_counts: BTreeMap<&[S], u64> = BTreeMap::new();
        if reference.len() >= n {
            for w in reference.windows(n) {
                *ref_counts.entry(w).or_default() += 1;
            }
        }
        let mut hyp_counts: BTreeMap<&[S], u64> = BTreeMap::new();
        for w in hyp.windows(n) {
            *hyp_counts.entry(w).or_default() += 1;
        }
        totals[n - 1] += (hyp.len() + 1 - n) as u64;
        matches[n - 1] += hyp_counts
            .iter()
            .map(|(g, &c)| c.min(ref_counts.get(g).copied().unwrap_or(0)))
            .sum::<u64>();
    }
}

/// Corpus BLEU over already-tokenized sentences.
pub fn bleu_tokens<S: AsRef<str> + Ord>(hyps: &[Vec<S>], refs: &[Vec<S>], mode: TokenizationMode) -> Result<BleuScore> {
    if hyps.len() != refs.len() {
        return Err(Error::LengthMismatch { hyps: hyps.len(), refs: refs.len() });
    }
    if hyps.is_empty() {
        return Err(Error::EmptyInput("bleu: empty corpus"));
    }
    let mut matches = [0; MAX_ORDER];
    let mut totals = [0; MAX_ORDER];
    let (mut hyp_len, mut ref_len) = (0, 0);
    for (h, r) in hyps.iter().zip(refs) {
        hyp_len += h.len();
        ref_len += r.len();
        accumulate(h, r, &mut matches, &mut totals);
    }
    Ok(BleuScore::from_counts(matches, totals, hyp_len, ref_len, mode))
}

fn split(text: &str) -> Vec<String> {
    text.split_whitespace().map(String::from).collect()
}

/// BLEU with the tokenization selected by `mode`. `External` and
/// `SubwordPieces` need extra inputs and are served by [`tokenized_bleu`] and
/// [`subword_bleu`]; passing them here tokenizes on whitespace.
pub fn bleu<H: AsRef<str>, R: AsRef<str>>(hyps: &[H], refs: &[R], mode: TokenizationMode) -> Result<BleuScore> {
    let tok = |s: &str| match mode {
        TokenizationMode::Intl13a => split(&tokenize_13a(s)),
        _ => split(s),
    };
    let h: Vec<Vec<String>> = hyps.iter().map(|s| tok(s.as_ref())).collect();
    let r: Vec<Vec<String>> = refs.iter().map(|s| tok(s.as_ref())).collect();
    bleu_tokens(&h, &r, mode)
}

/// BLEU after applying a caller-supplied tokenizer to both sides.
pub fn tokenized_bleu<H, R, F>(hyps: &[H], refs: &[R], tokenizer: F) -> Result<BleuScore>
where
    H: AsRef<str>,
    R: AsRef<str>,
    F: Fn(&str) -> Vec<String>,
{
    let h: Vec<Vec<String>> = hyps.iter().map(|s| tokenizer(s.as_ref())).collect();
    let r: Vec<Vec<String>> = refs.iter().map(|s| tokenizer(s.as_ref())).collect();
    bleu_tokens(&h, &r, TokenizationMode::External)
}

/// Segments text into vocabulary pieces by greedy longest match, ignoring
/// whitespace, so that optional spacing does not change the segmentation.
/// Characters that start no vocabulary token become single-character pieces.
pub struct PieceSegmenter {
    pieces: BTreeMap<String, ()>,
    max_chars: usize,
}

impl PieceSegmenter {
    pub fn new(vocab: &Vocabulary) -> Self {
        let mut pieces = BTreeMap::new();
        let mut max_chars = 1;
        for tok in vocab.corpus_tokens() {
            max_chars = max_chars.max(tok.chars().count());
            pieces.insert(tok.clone(), ());
        }
        PieceSegmenter { pieces, max_chars }
    }

    pub fn segment(&self, text: &str) -> Vec<String> {
        let chars: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
        let mut out = Vec::new();
        let mut i = 0;
        let mut buf = String::new();
        while i < chars.len() {
            let mut taken = 1;
            for len in (1..=self.max_chars.min(chars.len() - i)).rev() {
                buf.clear();
                buf.extend(&chars[i..i + len]);
                if self.pieces.contains_key(&buf) {
                    taken = len;
                    break;
                }
            }
            out.push(chars[i..i + taken].iter().collect());
            i += taken;
        }
        out
    }
}

/// BLEU over greedy longest-match vocabulary pieces of both sides.
pub fn subword_bleu<H: AsRef<str>, R: AsRef<str>>(hyps: &[H], refs: &[R], vocab: &Vocabulary) -> Result<BleuScore> {
    let seg = PieceSegmenter::new(vocab);
    let h: Vec<Vec<String>> = hyps.iter().map(|s| seg.segment(s.as_ref())).collect();
    let r: Vec<Vec<String>> = refs.iter().map(|s| seg.segment(s.as_ref())).collect();
    bleu_tokens(&h, &r, TokenizationMode::SubwordPieces)
}

/// Translates `mono` into `pivot` with `forward`, back into the corpus
/// language with `backward`, and scores the result against `mono` (13a).
pub fn round_trip_bleu<F: Translator, B: Translator>(
    forward: &F,
    pivot: &Lang,
    backward: &B,
    mono: &MonoCorpus,
) -> Result<BleuScore> {
    let mut back = Vec::with_capacity(mono.len());
    for line in &mono.lines {
        let there = forward.translate(line, pivot)?;
        back.push(backward.translate(&there, &mono.lang)?);
    }
    bleu(&back, &mono.lines, TokenizationMode::Intl13a)
}
