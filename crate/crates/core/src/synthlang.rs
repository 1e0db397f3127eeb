//! Synthetic language families: word-level ciphers of an English base corpus
//! with controlled vocabulary overlap and word-order transforms.
//!
//! A language keeps the `overlap` fraction of most frequent base types as
//! English surface forms and replaces every other type with a pseudo-word
//! built from its `script_prefix` and a code drawn from a permutation seeded
//! by `lexicon_seed`. Languages that share a seed and prefix therefore share
//! their ciphered forms, except for the `drift` fraction of types that each
//! language renames privately. That shared layer is what lets a model trained
//! on some members of a family read an unseen member.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{fisher_yates_prefix, mix_seed, MonoCorpus, ParallelCorpus, SentencePair};
use crate::error::{Error, Result};
use crate::hash::ContentHasher;
use crate::lang::Lang;

/// The bundled English base text, one lowercase space-tokenized sentence per line.
pub const BASE_TEXT: &str = include_str!("../data/base_en.txt");

const ONSETS: &[u8] = b"bdfgklmnprstvz";
const NUCLEI: &[u8] = b"aeiou";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WordOrder {
    Identity,
    Reverse,
    /// Rotate left by `k` positions (modulo sentence length).
    Rotate(usize),
}

impl WordOrder {
    pub fn apply<T>(&self, words: &mut [T]) {
        match *self {
            WordOrder::Identity => {}
            WordOrder::Reverse => words.reverse(),
            WordOrder::Rotate(k) if !words.is_empty() => {
                let k = k % words.len();
                words.rotate_left(k);
            }
            WordOrder::Rotate(_) => {}
        }
    }

    pub fn invert<T>(&self, words: &mut [T]) {
        match *self {
            WordOrder::Identity => {}
            WordOrder::Reverse => words.reverse(),
            WordOrder::Rotate(k) if !words.is_empty() => {
                let k = k % words.len();
                words.rotate_right(k);
            }
            WordOrder::Rotate(_) => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LanguageSpec {
    pub code: Lang,
    pub lexicon_seed: u64,
    /// Fraction of base types kept as English surface forms.
    pub overlap: f64,
    pub order: WordOrder,
    pub script_prefix: String,
    /// Fraction of ciphered types replaced by language-private forms.
    pub drift: f64,
}

impl LanguageSpec {
    pub fn new(code: impl Into<Lang>, lexicon_seed: u64, overlap: f64, order: WordOrder, script_prefix: &str) -> Self {
        LanguageSpec {
            code: code.into(),
            lexicon_seed,
            overlap,
            order,
            script_prefix: String::from(script_prefix),
            drift: 0.0,
        }
    }

    pub fn with_drift(mut self, drift: f64) -> Self {
        self.drift = drift;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilySpec {
    pub base_corpus: MonoCorpus,
    pub aux: Vec<LanguageSpec>,
    pub unseen: Vec<LanguageSpec>,
}

impl FamilySpec {
    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for spec in self.aux.iter().chain(&self.unseen) {
            if spec.code.is_english() {
                return Err(Error::Config(format!("synthetic language cannot use code {}", spec.code)));
            }
            if !seen.insert(&spec.code) {
                return Err(Error::Config(format!("language {} declared twice", spec.code)));
            }
            if !(0.0..=1.0).contains(&spec.overlap) || !(0.0..=1.0).contains(&spec.drift) {
                return Err(Error::Config(format!("{}: overlap and drift must lie in [0, 1]", spec.code)));
            }
        }
        Ok(())
    }
}

/// Base types ranked by descending frequency, ties lexicographic.
pub fn ranked_types(base: &MonoCorpus) -> Vec<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for line in &base.lines {
        for w in line.split_whitespace() {
            *counts.entry(w).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    ranked.into_iter().map(|(w, _)| String::from(w)).collect()
}

fn syllables(mut n: usize, len: usize) -> String {
    let base = ONSETS.len() * NUCLEI.len();
    let mut out = String::new();
    for _ in 0..len {
        let s = n % base;
        n /= base;
        out.push(ONSETS[s / NUCLEI.len()] as char);
        out.push(NUCLEI[s % NUCLEI.len()] as char);
    }
    out
}

fn code_len(n: usize) -> usize {
    let base = ONSETS.len() * NUCLEI.len();
    let mut len = 2;
    let mut cap = base * base;
    while cap < n {
        cap *= base;
        len += 1;
    }
    len
}

/// A bijective word map between the base vocabulary and one language.
#[derive(Debug, Clone)]
pub struct Lexicon {
    forward: BTreeMap<String, String>,
    backward: BTreeMap<String, String>,
    shared: usize,
}

impl Lexicon {
    pub fn build(spec: &LanguageSpec, base: &MonoCorpus) -> Self {
        let types = ranked_types(base);
        let v = types.len();
        let shared = libm::round(spec.overlap * v as f64) as usize;
        let len = code_len(v);
        let mut rng = ChaCha8Rng::seed_from_u64(spec.lexicon_seed);
        let perm = fisher_yates_prefix(v, v, &mut rng);

        let ciphered = v - shared;
        let n_drift = libm::round(spec.drift * ciphered as f64) as usize;
        let lang_stream = {
            let mut h = ContentHasher::new();
            h.str(spec.code.as_str());
            let hex = h.finish();
            u64::from_str_radix(&hex[..16], 16).unwrap_or(0)
        };
        let mut drift_rng = ChaCha8Rng::seed_from_u64(mix_seed(spec.lexicon_seed, lang_stream));
        let drifted: BTreeSet<usize> = fisher_yates_prefix(ciphered, n_drift, &mut drift_rng)
            .into_iter()
            .map(|i| shared + i)
            .collect();
        let private = (lang_stream % (ONSETS.len() * NUCLEI.len()) as u64) as usize;

        let english: BTreeSet<&str> = types.iter().map(String::as_str).collect();
        let mut forward = BTreeMap::new();
        let mut backward = BTreeMap::new();
        for (rank, word) in types.iter().enumerate() {
            let form = if rank < shared {
                word.clone()
            } else {
                let mut f = format!("{}{}", spec.script_prefix, syllables(perm[rank], len));
                if drifted.contains(&rank) {
                    f.push_str(&syllables(private, 1));
                }
                while english.contains(f.as_str()) || backward.contains_key(&f) {
                    f.push('h');
                }
                f
            };
            backward.insert(form.clone(), word.clone());
            forward.insert(word.clone(), form);
        }
        Lexicon { forward, backward, shared }
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    /// Number of base types kept as English surface forms.
    pub fn shared_types(&self) -> usize {
        self.shared
    }

    pub fn form(&self, english: &str) -> Option<&str> {
        self.forward.get(english).map(String::as_str)
    }

    pub fn english(&self, form: &str) -> Option<&str> {
        self.backward.get(form).map(String::as_str)
    }

    /// Maps every word through the lexicon (unknown words pass through),
    /// then applies the word-order transform.
    pub fn encipher(&self, line: &str, order: WordOrder) -> String {
        let mut words: Vec<&str> = line
            .split_whitespace()
            .map(|w| self.form(w).unwrap_or(w))
            .collect();
        order.apply(&mut words);
        words.join(" ")
    }

    pub fn decipher(&self, line: &str, order: WordOrder) -> String {
        let mut words: Vec<&str> = line
            .split_whitespace()
            .map(|w| self.english(w).unwrap_or(w))
            .collect();
        order.invert(&mut words);
        words.join(" ")
    }
}

/// Derives a language from `base`: its monolingual corpus and gold
/// (foreign → English) pairs aligned line by line with `base`.
pub fn derive_language(spec: &LanguageSpec, base: &MonoCorpus) -> Result<(MonoCorpus, ParallelCorpus)> {
    if base.is_empty() {
        return Err(Error::EmptyInput("derive_language: empty base corpus"));
    }
    let lex = Lexicon::build(spec, base);
    let lines: Vec<String> = base.lines.iter().map(|l| lex.encipher(l, spec.order)).collect();
    let pairs = lines
        .iter()
        .zip(&base.lines)
        .map(|(f, e)| SentencePair::real(f.clone(), e.clone()))
        .collect();
    let gold = ParallelCorpus::new(spec.code.clone(), base.lang.clone(), pairs)?;
    Ok((MonoCorpus::new(spec.code.clone(), lines), gold))
}

/// Everything the pipeline and its evaluation need from one family.
#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    /// English training lines (the test lines are held out).
    pub english_mono: MonoCorpus,
    /// Real (aux → English) training pairs.
    pub aux_parallel: Vec<ParallelCorpus>,
    pub aux_test_gold: Vec<ParallelCorpus>,
    /// Monolingual training text of each unseen language.
    pub unseen_mono: Vec<MonoCorpus>,
    /// Held-out (unseen → English) pairs, never exposed to training.
    pub unseen_test_gold: Vec<ParallelCorpus>,
}

/// Splits the base corpus into a training part and a held-out test part
/// (a seeded selection of `1 - train_fraction` of the lines, kept in corpus
/// order) and derives every language over both parts.
pub fn build_benchmark(family: &FamilySpec, train_fraction: f64, seed: u64) -> Result<Benchmark> {
    family.validate()?;
    let base = &family.base_corpus;
    if base.is_empty() {
        return Err(Error::EmptyInput("build_benchmark: empty base corpus"));
    }
    if !(0.0..=1.0).contains(&train_fraction) {
        return Err(Error::Config(format!("train_fraction {train_fraction} outside [0, 1]")));
    }
    let n = base.len();
    let n_test = n - libm::round(train_fraction * n as f64) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x7e57));
    let test_idx: BTreeSet<usize> = fisher_yates_prefix(n, n_test, &mut rng).into_iter().collect();
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (i, line) in base.lines.iter().enumerate() {
        if test_idx.contains(&i) {
            test.push(line.clone());
        } else {
            train.push(line.clone());
        }
    }

    let mut bench = Benchmark {
        english_mono: MonoCorpus::new(base.lang.clone(), train),
        aux_parallel: Vec::new(),
        aux_test_gold: Vec::new(),
        unseen_mono: Vec::new(),
        unseen_test_gold: Vec::new(),
    };
    let test = MonoCorpus::new(base.lang.clone(), test);
    let lexicons = |spec: &LanguageSpec| Lexicon::build(spec, base);
    let derive = |spec: &LanguageSpec, lex: &Lexicon, part: &MonoCorpus| -> Result<(MonoCorpus, ParallelCorpus)> {
        let lines: Vec<String> = part.lines.iter().map(|l| lex.encipher(l, spec.order)).collect();
        let pairs = lines
            .iter()
            .zip(&part.lines)
            .map(|(f, e)| SentencePair::real(f.clone(), e.clone()))
            .collect();
        let gold = ParallelCorpus::new(spec.code.clone(), part.lang.clone(), pairs)?;
        Ok((MonoCorpus::new(spec.code.clone(), lines), gold))
    };
    for spec in &family.aux {
        let lex = lexicons(spec);
        let (_, train_pairs) = derive(spec, &lex, &bench.english_mono)?;
        bench.aux_parallel.push(train_pairs);
        if !test.is_empty() {
            bench.aux_test_gold.push(derive(spec, &lex, &test)?.1);
        }
    }
    for spec in &family.unseen {
        let lex = lexicons(spec);
        bench.unseen_mono.push(derive(spec, &lex, &bench.english_mono)?.0);
        if !test.is_empty() {
            bench.unseen_test_gold.push(derive(spec, &lex, &test)?.1);
        }
    }
    Ok(bench)
}

pub fn bundled_base() -> MonoCorpus {
    MonoCorpus::new(Lang::en(), BASE_TEXT.lines().map(String::from).collect())
}

/// Two families over the bundled base, each with four auxiliary languages
/// and one unseen language: overlap 0.5 and drift 0.2 throughout. Auxiliary
/// word orders are identity, identity, reverse, rotate(2); unseen languages
/// keep English order. Lexicons vary with `seed`.
pub fn default_family(seed: u64) -> FamilySpec {
    let families = [("ka", ["ka", "kb", "kc", "kd"], "ke"), ("zu", ["za", "zb", "zc", "zd"], "ze")];
    let orders = [WordOrder::Identity, WordOrder::Identity, WordOrder::Reverse, WordOrder::Rotate(2)];
    let mut aux = Vec::new();
    let mut unseen = Vec::new();
    for (f, (prefix, members, held_out)) in families.iter().enumerate() {
        let lexicon_seed = mix_seed(seed, f as u64 + 1);
        for (code, order) in members.iter().zip(orders) {
            aux.push(LanguageSpec::new(*code, lexicon_seed, 0.5, order, prefix).with_drift(0.2));
        }
        unseen.push(LanguageSpec::new(*held_out, lexicon_seed, 0.5, WordOrder::Identity, prefix).with_drift(0.2));
    }
    FamilySpec { base_corpus: bundled_base(), aux, unseen }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn small_base() -> MonoCorpus {
        MonoCorpus::from_strs("en", &["the cat sat .", "the dog ran .", "a cat ran home .", "the bird sang ."])
    }

    fn types(c: &MonoCorpus) -> BTreeSet<String> {
        c.lines.iter().flat_map(|l| l.split_whitespace().map(String::from)).collect()
    }

    #[test]
    fn full_overlap_identity_order_is_the_base() {
        let spec = LanguageSpec::new("xx", 3, 1.0, WordOrder::Identity, "q");
        let (mono, gold) = derive_language(&spec, &small_base()).unwrap();
        assert_eq!(mono.lines, small_base().lines);
        assert!(gold.pairs.iter().all(|p| p.source == p.target));
    }

    #[test]
    fn zero_overlap_shares_no_form() {
        let spec = LanguageSpec::new("xx", 3, 0.0, WordOrder::Identity, "q");
        let base = small_base();
        let (mono, _) = derive_language(&spec, &base).unwrap();
        assert!(types(&mono).is_disjoint(&types(&base)));
    }

    #[test]
    fn realized_overlap_is_within_one_type() {
        let base = bundled_base();
        let v = ranked_types(&base).len();
        for overlap in [0.0, 0.25, 0.5, 0.9] {
            let spec = LanguageSpec::new("xx", 9, overlap, WordOrder::Reverse, "ka").with_drift(0.3);
            let (mono, _) = derive_language(&spec, &base).unwrap();
            let shared = types(&mono).intersection(&types(&base)).count() as f64;
            assert!((shared - overlap * v as f64).abs() <= 1.0, "{overlap}: {shared} of {v}");
        }
    }

    #[test]
    fn overlap_goes_to_the_most_frequent_types() {
        let base = bundled_base();
        let ranked = ranked_types(&base);
        let lex = Lexicon::build(&LanguageSpec::new("xx", 1, 0.1, WordOrder::Identity, "ka"), &base);
        for (i, w) in ranked.iter().enumerate() {
            assert_eq!(lex.form(w) == Some(w.as_str()), i < lex.shared_types(), "{w}");
        }
    }

    #[test]
    fn family_members_share_ciphered_forms_except_drift() {
        let base = bundled_base();
        let a = Lexicon::build(&LanguageSpec::new("aa", 5, 0.5, WordOrder::Identity, "ka").with_drift(0.2), &base);
        let b = Lexicon::build(&LanguageSpec::new("bb", 5, 0.5, WordOrder::Reverse, "ka").with_drift(0.2), &base);
        let c = Lexicon::build(&LanguageSpec::new("cc", 6, 0.5, WordOrder::Identity, "ka"), &base);
        let ranked = ranked_types(&base);
        let ciphered = &ranked[a.shared_types()..];
        let same_ab = ciphered.iter().filter(|w| a.form(w) == b.form(w)).count();
        let same_ac = ciphered.iter().filter(|w| a.form(w) == c.form(w)).count();
        assert!(same_ab >= ciphered.len() * 6 / 10, "{same_ab} of {}", ciphered.len());
        assert!(same_ac < ciphered.len() / 10);
    }

    #[test]
    fn ciphered_forms_are_stable_across_overlap_levels() {
        let base = bundled_base();
        let lo = Lexicon::build(&LanguageSpec::new("xx", 4, 0.2, WordOrder::Identity, "ka"), &base);
        let hi = Lexicon::build(&LanguageSpec::new("xx", 4, 0.6, WordOrder::Identity, "ka"), &base);
        for w in &ranked_types(&base)[hi.shared_types()..] {
            assert_eq!(lo.form(w), hi.form(w));
        }
    }

    #[test]
    fn benchmark_shape_and_disjointness() {
        let fam = default_family(1);
        let bench = build_benchmark(&fam, 0.9, 1).unwrap();
        assert_eq!(bench.aux_parallel.len(), 8);
        assert_eq!(bench.unseen_mono.len(), 2);
        assert_eq!(bench.unseen_test_gold.len(), 2);
        assert_eq!(bench.english_mono.len(), 4500);
        assert!(bench.aux_parallel.iter().all(|c| c.tgt_lang.is_english() && c.len() == 4500));
        for (mono, gold) in bench.unseen_mono.iter().zip(&bench.unseen_test_gold) {
            assert_eq!(gold.len(), 500);
            let train: BTreeSet<&str> = mono.lines.iter().map(String::as_str).collect();
            let english: BTreeSet<&str> = bench.english_mono.lines.iter().map(String::as_str).collect();
            for p in &gold.pairs {
                assert!(!train.contains(p.source.as_str()) || english.contains(p.target.as_str()));
                assert!(!english.contains(p.target.as_str()));
            }
        }
    }

    #[test]
    fn benchmark_is_deterministic() {
        let fam = default_family(7);
        assert_eq!(build_benchmark(&fam, 0.8, 3).unwrap(), build_benchmark(&fam, 0.8, 3).unwrap());
        assert_ne!(build_benchmark(&fam, 0.8, 3).unwrap(), build_benchmark(&default_family(8), 0.8, 3).unwrap());
    }

    #[test]
    fn duplicate_codes_rejected() {
        let mut fam = default_family(1);
        fam.unseen.push(fam.aux[0].clone());
        assert!(build_benchmark(&fam, 0.9, 1).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn gold_round_trip(seed in any::<u64>(), overlap in 0.0f64..=1.0, drift in 0.0f64..=1.0, order in 0usize..4) {
            let order = [WordOrder::Identity, WordOrder::Reverse, WordOrder::Rotate(2), WordOrder::Rotate(7)][order];
            let base = MonoCorpus::new("en", bundled_base().lines.into_iter().take(200).collect());
            let spec = LanguageSpec::new("xx", seed, overlap, order, "zu").with_drift(drift);
            let lex = Lexicon::build(&spec, &base);
            let (mono, _) = derive_language(&spec, &base).unwrap();
            for (f, e) in mono.lines.iter().zip(&base.lines) {
                prop_assert_eq!(&lex.decipher(f, order), e);
            }
            let forms: BTreeSet<&String> = lex.forward.values().collect();
            prop_assert_eq!(forms.len(), lex.len());
        }
    }
}
