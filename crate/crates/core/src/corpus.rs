//! Monolingual and parallel corpora: cleaning, sampling, splitting, flipping.
//!
//! All operations are pure and order-preserving; randomized operations take
//! an explicit seed and are byte-for-byte reproducible.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hash::ContentHasher;
use crate::lang::Lang;

/// Where a pair came from: gold data, or output of the model of some round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Origin {
    Real,
    Synthetic { round: u32 },
}

impl Origin {
    pub fn tag(&self) -> String {
        match self {
            Origin::Real => String::from("real"),
            Origin::Synthetic { round } => alloc::format!("synthetic({round})"),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        if s == "real" {
            return Some(Origin::Real);
        }
        let round = s.strip_prefix("synthetic(")?.strip_suffix(')')?.parse().ok()?;
        Some(Origin::Synthetic { round })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentencePair {
    pub source: String,
    pub target: String,
    pub origin: Origin,
}

impl SentencePair {
    pub fn real(source: impl Into<String>, target: impl Into<String>) -> Self {
        SentencePair { source: source.into(), target: target.into(), origin: Origin::Real }
    }

    pub fn synthetic(source: impl Into<String>, target: impl Into<String>, round: u32) -> Self {
        SentencePair {
            source: source.into(),
            target: target.into(),
            origin: Origin::Synthetic { round },
        }
    }

    pub fn flipped(&self) -> Self {
        SentencePair {
            source: self.target.clone(),
            target: self.source.clone(),
            origin: self.origin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonoCorpus {
    pub lang: Lang,
    pub lines: Vec<String>,
}

impl MonoCorpus {
    pub fn new(lang: impl Into<Lang>, lines: Vec<String>) -> Self {
        MonoCorpus { lang: lang.into(), lines }
    }

    pub fn from_strs(lang: impl Into<Lang>, lines: &[&str]) -> Self {
        MonoCorpus::new(lang, lines.iter().map(|s| String::from(*s)).collect())
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn content_hash(&self) -> String {
        let mut h = ContentHasher::new();
        h.str("mono").str(self.lang.as_str()).u64(self.lines.len() as u64);
        for line in &self.lines {
            h.str(line);
        }
        h.finish()
    }
}

/// Pairs in one source→target direction. `provenance` records how many pairs
/// each foreign language contributed; a corpus mixing several foreign
/// languages uses [`Lang::MULTI`] on its foreign side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallelCorpus {
    pub src_lang: Lang,
    pub tgt_lang: Lang,
    pub pairs: Vec<SentencePair>,
    pub provenance: Vec<(Lang, usize)>,
}

impl ParallelCorpus {
    /// Validates that languages differ and that no side of any pair is empty.
    pub fn new(src_lang: impl Into<Lang>, tgt_lang: impl Into<Lang>, pairs: Vec<SentencePair>) -> Result<Self> {
        let (src_lang, tgt_lang) = (src_lang.into(), tgt_lang.into());
        if src_lang == tgt_lang {
            return Err(Error::SameLanguage(src_lang));
        }
        let name = alloc::format!("{src_lang}-{tgt_lang}");
        if pairs.iter().any(|p| p.source.trim().is_empty() || p.target.trim().is_empty()) {
            return Err(Error::EmptyLine(name));
        }
        let foreign = if src_lang.is_english() { tgt_lang.clone() } else { src_lang.clone() };
        let provenance = alloc::vec![(foreign, pairs.len())];
        Ok(ParallelCorpus { src_lang, tgt_lang, pairs, provenance })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn sources(&self) -> impl Iterator<Item = &str> {
        self.pairs.iter().map(|p| p.source.as_str())
    }

    pub fn targets(&self) -> impl Iterator<Item = &str> {
        self.pairs.iter().map(|p| p.target.as_str())
    }

    pub fn is_english_centric(&self) -> bool {
        self.src_lang.is_english() != self.tgt_lang.is_english()
    }

    pub fn content_hash(&self) -> String {
        let mut h = ContentHasher::new();
        h.str("parallel").str(self.src_lang.as_str()).str(self.tgt_lang.as_str());
        h.u64(self.provenance.len() as u64);
        for (lang, n) in &self.provenance {
            h.str(lang.as_str()).u64(*n as u64);
        }
        h.u64(self.pairs.len() as u64);
        for p in &self.pairs {
            h.str(&p.source).str(&p.target).str(&p.origin.tag());
        }
        h.finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpec {
    pub validation_pairs_per_direction: usize,
    pub seed: u64,
}

/// Drops lines that are empty after trimming trailing whitespace, and every
/// repeat of an already-seen line. Keeps first occurrences in input order.
pub fn clean(corpus: &MonoCorpus) -> MonoCorpus {
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    let mut lines = Vec::new();
    for line in &corpus.lines {
        let line = line.trim_end();
        if line.is_empty() || !seen.insert(line) {
            continue;
        }
        lines.push(String::from(line));
    }
    MonoCorpus { lang: corpus.lang.clone(), lines }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum SampleMode {
    /// `min(n, |corpus|)` pairs from every corpus.
    #[default]
    Equal,
    /// Quotas proportional to `|corpus|^(1/tau)`, rescaled so the total
    /// budget is `n * corpora.len()`, each capped at the corpus size.
    Temperature { tau: f64 },
}

/// [`sample`] with [`SampleMode::Equal`].
pub fn equal_sample(corpora: &[ParallelCorpus], n_per_language: usize, seed: u64) -> Result<ParallelCorpus> {
    sample(corpora, n_per_language, seed, SampleMode::Equal)
}

/// Samples without replacement from every corpus and concatenates the
/// samples in corpus order. Each sample keeps the original pair order.
pub fn sample(corpora: &[ParallelCorpus], n_per_language: usize, seed: u64, mode: SampleMode) -> Result<ParallelCorpus> {
    let first = corpora.first().ok_or(Error::EmptyInput("equal_sample: no corpora"))?;
    if n_per_language == 0 {
        return Err(Error::Config(String::from("n_per_language must be positive")));
    }
    for c in corpora {
        if c.tgt_lang != first.tgt_lang {
            return Err(Error::TargetMismatch { expected: first.tgt_lang.clone(), found: c.tgt_lang.clone() });
        }
        if c.is_empty() {
            return Err(Error::EmptyInput("equal_sample: empty corpus"));
        }
    }
    let quotas = quotas(corpora, n_per_language, mode)?;

    let mut pairs = Vec::new();
    let mut provenance: Vec<(Lang, usize)> = Vec::new();
    for (i, (corpus, quota)) in corpora.iter().zip(quotas).enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, i as u64));
        let mut picked = fisher_yates_prefix(corpus.len(), quota, &mut rng);
        picked.sort_unstable();
        pairs.extend(picked.into_iter().map(|j| corpus.pairs[j].clone()));
        match provenance.iter_mut().find(|(l, _)| *l == corpus.src_lang) {
            Some((_, n)) => *n += quota,
            None => provenance.push((corpus.src_lang.clone(), quota)),
        }
    }
    let src_lang = if provenance.len() == 1 { first.src_lang.clone() } else { Lang::multi() };
    Ok(ParallelCorpus { src_lang, tgt_lang: first.tgt_lang.clone(), pairs, provenance })
}

fn quotas(corpora: &[ParallelCorpus], n: usize, mode: SampleMode) -> Result<Vec<usize>> {
    match mode {
        SampleMode::Equal => Ok(corpora.iter().map(|c| n.min(c.len())).collect()),
        SampleMode::Temperature { tau } => {
            if !(tau > 0.0) {
                return Err(Error::Config(String::from("temperature must be positive")));
            }
            let total: f64 = corpora.iter().map(|c| c.len() as f64).sum();
            let weights: Vec<f64> = corpora
                .iter()
                .map(|c| libm::pow(c.len() as f64 / total, 1.0 / tau))
                .collect();
            let norm: f64 = weights.iter().sum();
            let budget = (n * corpora.len()) as f64;
            Ok(corpora
                .iter()
                .zip(weights)
                .map(|(c, w)| (libm::round(budget * w / norm) as usize).min(c.len()))
                .collect())
        }
    }
}

/// First `k` entries of a forward Fisher–Yates shuffle of `0..n`.
pub(crate) fn fisher_yates_prefix(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..k.min(n) {
        let j = rng.gen_range(i..n);
        idx.swap(i, j);
    }
    idx.truncate(k.min(n));
    idx
}

/// splitmix64 finalizer over `seed ^ stream`.
pub(crate) fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Splits off the first `k` pairs as validation data.
pub fn reserve_validation(corpus: &ParallelCorpus, spec: SplitSpec) -> Result<(ParallelCorpus, ParallelCorpus)> {
    let k = spec.validation_pairs_per_direction;
    if corpus.len() <= k {
        return Err(Error::CorpusTooSmall { size: corpus.len(), requested: k });
    }
    let mut valid = corpus.clone();
    let rest = valid.pairs.split_off(k);
    let mut train = corpus.clone();
    train.pairs = rest;
    scale_provenance(&mut valid);
    scale_provenance(&mut train);
    Ok((train, valid))
}

fn scale_provenance(c: &mut ParallelCorpus) {
    if let [(_, n)] = c.provenance.as_mut_slice() {
        *n = c.pairs.len();
    }
}

/// Swaps source and target of the corpus and of every pair.
pub fn flip(corpus: &ParallelCorpus) -> ParallelCorpus {
    ParallelCorpus {
        src_lang: corpus.tgt_lang.clone(),
        tgt_lang: corpus.src_lang.clone(),
        pairs: corpus.pairs.iter().map(SentencePair::flipped).collect(),
        provenance: corpus.provenance.clone(),
    }
}

/// Order-preserving concatenation of English-centric corpora. Sides whose
/// languages disagree across inputs become [`Lang::MULTI`].
pub fn concat(corpora: &[ParallelCorpus]) -> Result<ParallelCorpus> {
    let first = corpora.first().ok_or(Error::EmptyInput("concat: no corpora"))?;
    if corpora.len() == 1 {
        if !first.is_english_centric() {
            return Err(Error::NotEnglishCentric { src: first.src_lang.clone(), tgt: first.tgt_lang.clone() });
        }
        return Ok(first.clone());
    }
    let mut pairs = Vec::new();
    let mut counts: BTreeMap<Lang, usize> = BTreeMap::new();
    let mut order: Vec<Lang> = Vec::new();
    for c in corpora {
        if !c.is_english_centric() {
            return Err(Error::NotEnglishCentric { src: c.src_lang.clone(), tgt: c.tgt_lang.clone() });
        }
        pairs.extend(c.pairs.iter().cloned());
        for (lang, n) in &c.provenance {
            if !counts.contains_key(lang) {
                order.push(lang.clone());
            }
            *counts.entry(lang.clone()).or_default() += n;
        }
    }
    let side = |f: fn(&ParallelCorpus) -> &Lang| {
        let l = f(first);
        if corpora.iter().all(|c| f(c) == l) { l.clone() } else { Lang::multi() }
    };
    let provenance = order.into_iter().map(|l| {
        let n = counts[&l];
        (l, n)
    });
    Ok(ParallelCorpus {
        src_lang: side(|c| &c.src_lang),
        tgt_lang: side(|c| &c.tgt_lang),
        pairs,
        provenance: provenance.collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::vec;
    use proptest::prelude::*;
    use rand::Rng;

    fn corpus(src: &str, tgt: &str, n: usize) -> ParallelCorpus {
        let pairs = (0..n).map(|i| SentencePair::real(format!("{src}{i}"), format!("{tgt}{i}"))).collect();
        ParallelCorpus::new(src, tgt, pairs).unwrap()
    }

    #[test]
    fn clean_drops_empty_and_duplicates() {
        let c = MonoCorpus::from_strs("xx", &["a", "", "a", "b"]);
        assert_eq!(clean(&c).lines, vec!["a", "b"]);
        assert!(clean(&MonoCorpus::from_strs("xx", &[])).is_empty());
    }

    #[test]
    fn clean_trims_trailing_whitespace_only() {
        let c = MonoCorpus::from_strs("xx", &["a ", "a", " a", "  ", "b\t"]);
        assert_eq!(clean(&c).lines, vec!["a", " a", "b"]);
    }

    #[test]
    fn clean_matches_set_oracle() {
        let c = MonoCorpus::from_strs("xx", &["x", "x", "x"]);
        // oracle: keep a line iff no earlier line equals it
        let oracle: Vec<&str> = c
            .lines
            .iter()
            .enumerate()
            .filter(|(i, l)| !l.is_empty() && !c.lines[..*i].contains(l))
            .map(|(_, l)| l.as_str())
            .collect();
        assert_eq!(clean(&c).lines, oracle);
        assert_eq!(oracle, vec!["x"]);
    }

    #[test]
    fn equal_sample_takes_everything_when_request_matches_size() {
        let c = corpus("de", "en", 5);
        let s = equal_sample(&[c.clone()], 5, 7).unwrap();
        assert_eq!(s.pairs, c.pairs);
        assert_eq!(s.provenance, vec![(Lang::from("de"), 5)]);
    }

    #[test]
    fn equal_sample_caps_per_language() {
        let a = corpus("de", "en", 10);
        let b = corpus("fr", "en", 3);
        let s = equal_sample(&[a.clone(), b.clone()], 4, 11).unwrap();
        assert_eq!(s.len(), 7);
        assert_eq!(s.provenance, vec![(Lang::from("de"), 4), (Lang::from("fr"), 3)]);
        assert_eq!(s.src_lang, Lang::multi());
        // seeded-shuffle oracle: a full forward Fisher-Yates with the same stream
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(11, 0));
        let mut idx: Vec<usize> = (0..10).collect();
        for i in 0..10 {
            let j = Rng::gen_range(&mut rng, i..10);
            idx.swap(i, j);
        }
        let mut want: Vec<usize> = idx[..4].to_vec();
        want.sort_unstable();
        let got: Vec<&SentencePair> = s.pairs[..4].iter().collect();
        let exp: Vec<&SentencePair> = want.iter().map(|&j| &a.pairs[j]).collect();
        assert_eq!(got, exp);
        assert_eq!(&s.pairs[4..], &b.pairs[..]);
    }

    #[test]
    fn equal_sample_errors() {
        assert!(matches!(equal_sample(&[], 3, 0), Err(Error::EmptyInput(_))));
        let a = corpus("de", "en", 3);
        let b = corpus("de", "fr", 3);
        assert!(matches!(equal_sample(&[a, b], 3, 0), Err(Error::TargetMismatch { .. })));
    }

    #[test]
    fn temperature_sampling_upsamples_small_corpora() {
        let a = corpus("de", "en", 900);
        let b = corpus("fr", "en", 100);
        let s = sample(&[a, b], 100, 1, SampleMode::Temperature { tau: 1e9 }).unwrap();
        // tau -> infinity flattens the distribution to uniform quotas
        assert_eq!(s.provenance, vec![(Lang::from("de"), 100), (Lang::from("fr"), 100)]);
        let a = corpus("de", "en", 900);
        let b = corpus("fr", "en", 100);
        let s = sample(&[a, b], 100, 1, SampleMode::Temperature { tau: 1.0 }).unwrap();
        assert_eq!(s.provenance, vec![(Lang::from("de"), 180), (Lang::from("fr"), 20)]);
    }

    #[test]
    fn reserve_validation_takes_prefix() {
        let c = corpus("de", "en", 1000);
        let (train, valid) = reserve_validation(&c, SplitSpec { validation_pairs_per_direction: 250, seed: 0 }).unwrap();
        assert_eq!((train.len(), valid.len()), (750, 250));
        assert_eq!(valid.pairs[..], c.pairs[..250]);
        assert_eq!(train.pairs[..], c.pairs[250..]);

        let c = corpus("de", "en", 10);
        let (train, valid) = reserve_validation(&c, SplitSpec { validation_pairs_per_direction: 0, seed: 0 }).unwrap();
        assert_eq!((train.len(), valid.len()), (10, 0));
        assert!(matches!(
            reserve_validation(&c, SplitSpec { validation_pairs_per_direction: 10, seed: 0 }),
            Err(Error::CorpusTooSmall { size: 10, requested: 10 })
        ));
    }

    #[test]
    fn flip_swaps_sides_and_keeps_origin() {
        let c = ParallelCorpus::new("a", "b", vec![SentencePair::real("x", "y")]).unwrap();
        let f = flip(&c);
        assert_eq!((f.src_lang.as_str(), f.tgt_lang.as_str()), ("b", "a"));
        assert_eq!(f.pairs, vec![SentencePair::real("y", "x")]);

        let s = ParallelCorpus::new("xx", "en", vec![SentencePair::synthetic("s", "t_hat", 1)]).unwrap();
        assert_eq!(flip(&s).pairs, vec![SentencePair::synthetic("t_hat", "s", 1)]);
    }

    #[test]
    fn concat_adds_sizes() {
        let c = concat(&[corpus("de", "en", 3), corpus("fr", "en", 4), corpus("it", "en", 0)]).unwrap();
        assert_eq!(c.len(), 7);
        assert_eq!(c.src_lang, Lang::multi());
        assert_eq!(c.tgt_lang, Lang::en());
        let single = corpus("de", "en", 3);
        assert_eq!(concat(&[single.clone()]).unwrap(), single);
        assert!(matches!(concat(&[corpus("de", "fr", 2)]), Err(Error::NotEnglishCentric { .. })));
    }

    #[test]
    fn new_rejects_bad_corpora() {
        assert!(matches!(ParallelCorpus::new("en", "en", vec![]), Err(Error::SameLanguage(_))));
        assert!(matches!(
            ParallelCorpus::new("de", "en", vec![SentencePair::real("a", " ")]),
            Err(Error::EmptyLine(_))
        ));
    }

    #[test]
    fn origin_tags_round_trip() {
        for o in [Origin::Real, Origin::Synthetic { round: 0 }, Origin::Synthetic { round: 12 }] {
            assert_eq!(Origin::parse(&o.tag()), Some(o));
        }
        assert_eq!(Origin::parse("synthetic(x)"), None);
    }

    fn arb_lines() -> impl Strategy<Value = Vec<String>> {
        proptest::collection::vec("[ab ]{0,3}", 0..30)
    }

    proptest! {
        #[test]
        fn clean_is_idempotent(lines in arb_lines()) {
            let c = MonoCorpus::new("xx", lines);
            let once = clean(&c);
            prop_assert_eq!(clean(&once), once.clone());
            prop_assert!(once.len() <= c.len());
            let set: BTreeSet<&String> = once.lines.iter().collect();
            prop_assert_eq!(set.len(), once.len());
        }

        #[test]
        fn flip_is_an_involution(n in 0usize..100, round in 0u32..3) {
            let pairs = (0..n).map(|i| SentencePair::synthetic(format!("s{i}"), format!("t{i}"), round)).collect();
            let c = ParallelCorpus::new("en", "xx", pairs).unwrap();
            prop_assert_eq!(flip(&flip(&c)), c);
        }

        #[test]
        fn equal_sample_is_bounded_and_deterministic(sizes in proptest::collection::vec(1usize..40, 1..5), n in 1usize..30, seed: u64) {
            let corpora: Vec<_> = sizes.iter().enumerate().map(|(i, &s)| corpus(&format!("l{i}"), "en", s)).collect();
            let a = equal_sample(&corpora, n, seed).unwrap();
            let b = equal_sample(&corpora, n, seed).unwrap();
            prop_assert_eq!(&a, &b);
            for ((_, count), &size) in a.provenance.iter().zip(&sizes) {
                prop_assert!(*count <= n && *count <= size);
            }
        }

        #[test]
        fn reserve_validation_partitions(n in 1usize..60, k in 0usize..60) {
            prop_assume!(k < n);
            let c = corpus("de", "en", n);
            let (train, valid) = reserve_validation(&c, SplitSpec { validation_pairs_per_direction: k, seed: 0 }).unwrap();
            let mut joined = valid.pairs.clone();
            joined.extend(train.pairs.iter().cloned());
            prop_assert_eq!(joined, c.pairs);
        }
    }
}
