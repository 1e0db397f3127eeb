//! The round schedule: a zero-shot round `r0` trained on auxiliary
//! (foreign → English) data, then rounds of offline back-translation.
//!
//! Round `i` translates monolingual text with the model of round `i - 1`:
//! odd rounds translate the unseen languages' text into English, even rounds
//! translate English text into every unseen language. Each output pair is
//! flipped so the genuine monolingual line ends up on the target side. The
//! training set of round `i` is its synthetic data plus those datasets of
//! round `i - 1` that point the opposite way (into English versus out of
//! English):
//!
//! ```text
//! r1: bt1.en-xx...  + d0
//! r2: bt2.xx-en...  + bt1.en-xx...
//! r3: bt3.en-xx...  + bt2.xx-en...
//! ```
//!
//! The first `validation_pairs_per_direction` pairs of every new dataset are
//! held out for early stopping and never trained on. Validation sets are
//! carried forward by the same rule as training sets.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    clean, equal_sample, fisher_yates_prefix, mix_seed, reserve_validation, MonoCorpus, Origin,
    ParallelCorpus, SentencePair, SplitSpec,
};
use crate::error::{Error, Result};
use crate::lang::{Direction, Lang};
use crate::metrics::{bleu, round_trip_bleu, BleuScore, TokenizationMode};
use crate::tokenizer::Vocabulary;
use crate::translator::{Backend, TrainingSession};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub aux_languages: Vec<Lang>,
    pub unseen_languages: Vec<Lang>,
    /// Pairs sampled per auxiliary language for `d0`.
    pub n_per_language: usize,
    /// Monolingual lines back-translated per language and round.
    pub synth_per_language: usize,
    #[serde(default = "default_rounds")]
    pub num_rounds: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_patience")]
    pub early_stop_patience: usize,
    #[serde(default)]
    pub use_round_trip_bleu: bool,
    #[serde(default = "default_max_epochs")]
    pub max_epochs: usize,
    #[serde(default = "default_valid")]
    pub validation_pairs_per_direction: usize,
    #[serde(default = "default_vocab")]
    pub vocab_max_size: usize,
}

fn default_rounds() -> u32 {
    2
}
fn default_patience() -> usize {
    2
}
fn default_max_epochs() -> usize {
    10
}
fn default_valid() -> usize {
    250
}
fn default_vocab() -> usize {
    8192
}

impl PipelineConfig {
    pub fn new(aux: &[&str], unseen: &[&str], n_per_language: usize, synth_per_language: usize) -> Self {
        PipelineConfig {
            aux_languages: aux.iter().map(|&l| Lang::from(l)).collect(),
            unseen_languages: unseen.iter().map(|&l| Lang::from(l)).collect(),
            n_per_language,
            synth_per_language,
            num_rounds: default_rounds(),
            seed: 0,
            early_stop_patience: default_patience(),
            use_round_trip_bleu: false,
            max_epochs: default_max_epochs(),
            validation_pairs_per_direction: default_valid(),
            vocab_max_size: default_vocab(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(String::from(m)));
        if self.num_rounds < 1 {
            return bad("num_rounds must be at least 1");
        }
        if self.aux_languages.is_empty() || self.unseen_languages.is_empty() {
            return bad("need at least one auxiliary and one unseen language");
        }
        if self.n_per_language == 0 || self.synth_per_language == 0 {
            return bad("n_per_language and synth_per_language must be positive");
        }
        if self.early_stop_patience == 0 {
            return bad("early_stop_patience must be positive");
        }
        let mut seen = BTreeSet::new();
        for l in self.aux_languages.iter().chain(&self.unseen_languages) {
            if l.is_english() || *l == Lang::multi() {
                return Err(Error::Config(format!("{l} cannot be a foreign language")));
            }
            if !seen.insert(l) {
                return Err(Error::Config(format!("language {l} listed twice")));
            }
        }
        Ok(())
    }

    /// Target languages that need a tag: English, then the unseen languages.
    pub fn tag_languages(&self) -> Vec<Lang> {
        let mut langs = alloc::vec![Lang::en()];
        langs.extend(self.unseen_languages.iter().cloned());
        langs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Train,
    Valid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub id: String,
    pub role: Role,
    pub corpus: ParallelCorpus,
}

impl Dataset {
    pub fn origin(&self) -> Origin {
        self.corpus.pairs.first().map_or(Origin::Real, |p| p.origin)
    }

    pub fn describe(&self) -> DatasetRef {
        DatasetRef {
            id: self.id.clone(),
            role: self.role,
            src: self.corpus.src_lang.clone(),
            tgt: self.corpus.tgt_lang.clone(),
            origin: self.origin(),
            pairs: self.corpus.len(),
            hash: self.corpus.content_hash(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetRef {
    pub id: String,
    pub role: Role,
    pub src: Lang,
    pub tgt: Lang,
    pub origin: Origin,
    pub pairs: usize,
    pub hash: String,
}

impl DatasetRef {
    pub fn into_english(&self) -> bool {
        self.tgt.is_english()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundManifest {
    pub round: u32,
    pub datasets: Vec<DatasetRef>,
}

impl RoundManifest {
    pub fn train(&self) -> impl Iterator<Item = &DatasetRef> {
        self.datasets.iter().filter(|d| d.role == Role::Train)
    }

    pub fn valid(&self) -> impl Iterator<Item = &DatasetRef> {
        self.datasets.iter().filter(|d| d.role == Role::Valid)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationRecord {
    pub epoch: usize,
    pub direction: Direction,
    pub score: BleuScore,
}

#[derive(Debug, Clone)]
pub struct RoundState<B> {
    pub round: u32,
    pub model: B,
    pub manifest: RoundManifest,
    pub datasets: Vec<Dataset>,
    pub valid_bleu_history: Vec<ValidationRecord>,
    /// Epoch whose parameters were kept.
    pub selected_epoch: usize,
    /// Last epoch run before stopping.
    pub stopped_at: usize,
    pub checkpoint_hash: String,
    pub parent_hash: Option<String>,
}

impl<B: Backend> RoundState<B> {
    pub fn supports(&self, direction: &Direction) -> bool {
        direction.src != direction.tgt && self.model.supports(&direction.tgt)
    }

    /// Translates with the round's model, refusing directions it was never
    /// trained to produce.
    pub fn translate(&self, text: &str, direction: &Direction) -> Result<String> {
        if !self.supports(direction) {
            return Err(Error::UnsupportedDirection(direction.clone()));
        }
        self.model.translate(text, &direction.tgt)
    }

    pub fn dataset(&self, id: &str) -> Option<&Dataset> {
        self.datasets.iter().find(|d| d.id == id)
    }

    /// Mean validation score of the selected epoch.
    pub fn selected_valid_bleu(&self) -> f64 {
        mean_at(&self.valid_bleu_history, self.selected_epoch)
    }
}

fn mean_at(history: &[ValidationRecord], epoch: usize) -> f64 {
    let scores: Vec<f64> = history.iter().filter(|r| r.epoch == epoch).map(|r| r.score.score).collect();
    if scores.is_empty() {
        0.0
    } else {
        scores.iter().sum::<f64>() / scores.len() as f64
    }
}

/// Monolingual inputs: English text and one corpus per unseen language.
#[derive(Debug, Clone, PartialEq)]
pub struct MonoData {
    pub english: MonoCorpus,
    pub foreign: Vec<MonoCorpus>,
}

impl MonoData {
    /// The side that feeds the data produced for round `round`.
    pub fn for_round(&self, round: u32) -> Vec<MonoCorpus> {
        if round % 2 == 1 {
            self.foreign.clone()
        } else {
            alloc::vec![self.english.clone()]
        }
    }
}

/// Builds the frozen vocabulary over every text the pipeline will see.
pub fn build_vocabulary(cfg: &PipelineConfig, aux: &[ParallelCorpus], mono: &MonoData) -> Result<Vocabulary> {
    let mut corpora = Vec::new();
    for c in aux {
        corpora.push(MonoCorpus::new(c.src_lang.clone(), c.sources().map(String::from).collect()));
        corpora.push(MonoCorpus::new(c.tgt_lang.clone(), c.targets().map(String::from).collect()));
    }
    corpora.push(mono.english.clone());
    corpora.extend(mono.foreign.iter().cloned());
    Vocabulary::build(&corpora, cfg.vocab_max_size, &cfg.tag_languages())
}

/// Checks `cur` against the schedule rule given the previous round's
/// manifest (`None` for round 0).
pub fn check_schedule(prev: Option<&RoundManifest>, cur: &RoundManifest) -> Result<()> {
    let fail = |m: String| Err(Error::Schedule(format!("round {}: {m}", cur.round)));
    let train: Vec<&DatasetRef> = cur.train().collect();
    let valid: Vec<&DatasetRef> = cur.valid().collect();
    match prev {
        None => {
            if cur.round != 0 {
                return fail(String::from("missing previous manifest"));
            }
            if train.len() != 1 || train[0].id != "d0" || train[0].origin != Origin::Real || !train[0].into_english() {
                return fail(String::from("training set must be exactly d0 (real, into English)"));
            }
            if valid.iter().any(|d| d.origin != Origin::Real || !d.into_english()) {
                return fail(String::from("validation must be real auxiliary pairs into English"));
            }
            Ok(())
        }
        Some(prev) => {
            if cur.round != prev.round + 1 {
                return fail(format!("follows round {}", prev.round));
            }
            let into_english = cur.round % 2 == 0;
            let origin = Origin::Synthetic { round: cur.round };
            for role in [Role::Train, Role::Valid] {
                let here: Vec<&DatasetRef> = cur.datasets.iter().filter(|d| d.role == role).collect();
                let split = here.iter().take_while(|d| d.origin == origin).count();
                if split == 0 {
                    return fail(format!("no synthetic({}) {role:?} data", cur.round));
                }
                if here[..split].iter().any(|d| d.into_english() != into_english) {
                    return fail(String::from("synthetic data points the wrong way for this round's parity"));
                }
                let expected: Vec<&DatasetRef> = prev
                    .datasets
                    .iter()
                    .filter(|d| d.role == role && d.into_english() != into_english)
                    .collect();
                if here[split..] != expected[..] {
                    return fail(format!("carried {role:?} data differs from round {}'s opposite-direction data", prev.round));
                }
            }
            Ok(())
        }
    }
}

/// Drives the rounds for one backend over a fixed vocabulary.
pub struct Pipeline<B> {
    cfg: PipelineConfig,
    vocab: Arc<Vocabulary>,
    _backend: core::marker::PhantomData<B>,
}

impl<B: Backend> Pipeline<B> {
    pub fn new(cfg: PipelineConfig, vocab: Arc<Vocabulary>) -> Result<Self> {
        cfg.validate()?;
        for l in cfg.tag_languages() {
            if vocab.tag_id(&l).is_none() {
                return Err(Error::UnregisteredLanguage(l));
            }
        }
        Ok(Pipeline { cfg, vocab, _backend: core::marker::PhantomData })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn vocab(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    fn split(&self) -> SplitSpec {
        SplitSpec { validation_pairs_per_direction: self.cfg.validation_pairs_per_direction, seed: self.cfg.seed }
    }

    /// Trains `r0` on `d0`, an equal sample of the auxiliary training pairs.
    pub fn run_round0(&self, aux_data: &[ParallelCorpus]) -> Result<RoundState<B>> {
        let mut datasets = Vec::new();
        let mut train_parts = Vec::new();
        let mut valid = Vec::new();
        for lang in &self.cfg.aux_languages {
            let mut found = aux_data.iter().filter(|c| c.src_lang == *lang);
            let corpus = found
                .next()
                .ok_or_else(|| Error::Config(format!("no parallel data for auxiliary language {lang}")))?;
            if found.next().is_some() {
                return Err(Error::Config(format!("two parallel corpora for {lang}")));
            }
            if !corpus.tgt_lang.is_english() {
                return Err(Error::TargetMismatch { expected: Lang::en(), found: corpus.tgt_lang.clone() });
            }
            let (t, v) = reserve_validation(corpus, self.split())?;
            train_parts.push(t);
            if !v.is_empty() {
                valid.push(Dataset { id: format!("valid0.{lang}-en"), role: Role::Valid, corpus: v });
            }
        }
        let d0 = equal_sample(&train_parts, self.cfg.n_per_language, mix_seed(self.cfg.seed, 0))?;
        datasets.push(Dataset { id: String::from("d0"), role: Role::Train, corpus: d0 });
        datasets.extend(valid);
        self.train_round(0, None, datasets)
    }

    /// Back-translates monolingual text with `state`'s model to produce the
    /// data of round `state.round + 1`. `mono` must be the unseen languages'
    /// corpora when that round is odd and the English corpus when it is even.
    pub fn make_synthetic(&self, state: &RoundState<B>, mono: &[MonoCorpus]) -> Result<Vec<ParallelCorpus>> {
        let round = state.round + 1;
        let mut out = Vec::new();
        if round % 2 == 1 {
            if let Some(c) = mono.iter().find(|c| c.lang.is_english()) {
                return Err(Error::Schedule(format!("round {round} is fed by foreign text, got {}", c.lang)));
            }
            for (i, lang) in self.cfg.unseen_languages.iter().enumerate() {
                let corpus = mono
                    .iter()
                    .find(|c| c.lang == *lang)
                    .ok_or_else(|| Error::Schedule(format!("round {round}: no monolingual text for {lang}")))?;
                let lines = self.pick_lines(corpus, round, i);
                out.push(self.back_translate(state, &lines, lang, &Lang::en(), round)?);
            }
        } else {
            if mono.len() != 1 || !mono[0].lang.is_english() {
                return Err(Error::Schedule(format!("round {round} is fed by English text only")));
            }
            for (i, lang) in self.cfg.unseen_languages.iter().enumerate() {
                let lines = self.pick_lines(&mono[0], round, i);
                out.push(self.back_translate(state, &lines, &Lang::en(), lang, round)?);
            }
        }
        Ok(out)
    }

    /// A seeded selection of cleaned lines, in corpus order.
    fn pick_lines(&self, corpus: &MonoCorpus, round: u32, stream: usize) -> Vec<String> {
        let cleaned = clean(corpus);
        let seed = mix_seed(self.cfg.seed, ((round as u64) << 32) | (stream as u64 + 1));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut idx = fisher_yates_prefix(cleaned.len(), self.cfg.synth_per_language, &mut rng);
        idx.sort_unstable();
        idx.into_iter().map(|i| cleaned.lines[i].clone()).collect()
    }

    /// Translates `lines` (in `mono_lang`) into `pivot` and flips the pairs,
    /// giving a (pivot → mono_lang) corpus.
    fn back_translate(
        &self,
        state: &RoundState<B>,
        lines: &[String],
        mono_lang: &Lang,
        pivot: &Lang,
        round: u32,
    ) -> Result<ParallelCorpus> {
        let direction = Direction::new(mono_lang.clone(), pivot.clone());
        let mut pairs = Vec::with_capacity(lines.len());
        for line in lines {
            let hyp = state.translate(line, &direction)?;
            pairs.push(SentencePair::synthetic(line.clone(), hyp, round).flipped());
        }
        ParallelCorpus::new(pivot.clone(), mono_lang.clone(), pairs)
    }

    /// Trains round `prev.round + 1` on `synthetic` plus the previous round's
    /// opposite-direction data, warm-starting from `prev.model`.
    pub fn run_round(&self, prev: &RoundState<B>, synthetic: Vec<ParallelCorpus>) -> Result<RoundState<B>> {
        let round = prev.round + 1;
        let into_english = round % 2 == 0;
        let origin = Origin::Synthetic { round };
        let mut train = Vec::new();
        let mut valid = Vec::new();
        for corpus in synthetic {
            if corpus.tgt_lang.is_english() != into_english || !corpus.is_english_centric() {
                return Err(Error::Schedule(format!(
                    "round {round}: synthetic {}-{} has the wrong orientation",
                    corpus.src_lang, corpus.tgt_lang
                )));
            }
            if corpus.pairs.iter().any(|p| p.origin != origin) {
                return Err(Error::Schedule(format!("round {round}: synthetic data must be marked {}", origin.tag())));
            }
            let direction = format!("{}-{}", corpus.src_lang, corpus.tgt_lang);
            let (t, v) = reserve_validation(&corpus, self.split())?;
            train.push(Dataset { id: format!("bt{round}.{direction}"), role: Role::Train, corpus: t });
            if !v.is_empty() {
                valid.push(Dataset { id: format!("valid{round}.{direction}"), role: Role::Valid, corpus: v });
            }
        }
        let carried = |role: Role| {
            prev.datasets
                .iter()
                .filter(move |d| d.role == role && d.corpus.tgt_lang.is_english() != into_english)
                .cloned()
        };
        train.extend(carried(Role::Train));
        valid.extend(carried(Role::Valid));
        train.extend(valid);
        let state = self.train_round(round, Some(prev), train)?;
        check_schedule(Some(&prev.manifest), &state.manifest)?;
        Ok(state)
    }

    fn train_round(&self, round: u32, prev: Option<&RoundState<B>>, datasets: Vec<Dataset>) -> Result<RoundState<B>> {
        let manifest = RoundManifest { round, datasets: datasets.iter().map(Dataset::describe).collect() };
        if prev.is_none() {
            check_schedule(None, &manifest)?;
        }
        let train: Vec<&ParallelCorpus> = datasets.iter().filter(|d| d.role == Role::Train).map(|d| &d.corpus).collect();
        let valid: Vec<&Dataset> = datasets.iter().filter(|d| d.role == Role::Valid).collect();
        let round_trip = self.cfg.use_round_trip_bleu && round > 0;

        let mut session = B::begin(&self.vocab, &train, prev.map(|p| &p.model))?;
        let mut epoch = 0;
        // a fresh model is not a candidate: it cannot produce any language
        if prev.is_none() && self.cfg.max_epochs > 0 {
            session.step()?;
            epoch = 1;
        }
        let mut history = Vec::new();
        let mut best = session.snapshot();
        history.extend(evaluate(&best, &valid, epoch, round_trip)?);
        let mut best_score = mean_at(&history, epoch);
        let mut selected = epoch;
        let mut stale = 0;
        while epoch < self.cfg.max_epochs && stale < self.cfg.early_stop_patience {
            session.step()?;
            epoch += 1;
            let candidate = session.snapshot();
            history.extend(evaluate(&candidate, &valid, epoch, round_trip)?);
            let score = mean_at(&history, epoch);
            if score > best_score {
                best_score = score;
                best = candidate;
                selected = epoch;
                stale = 0;
            } else {
                stale += 1;
            }
        }
        Ok(RoundState {
            round,
            checkpoint_hash: best.content_hash(),
            model: best,
            manifest,
            datasets,
            valid_bleu_history: history,
            selected_epoch: selected,
            stopped_at: epoch,
            parent_hash: prev.map(|p| p.checkpoint_hash.clone()),
        })
    }

    /// Runs `r0` through `r{num_rounds}`.
    pub fn run_pipeline(&self, aux_data: &[ParallelCorpus], mono: &MonoData) -> Result<Vec<RoundState<B>>> {
        self.run_pipeline_with(aux_data, mono, |_| Ok(()))
    }

    /// As [`Pipeline::run_pipeline`], calling `on_round` as soon as each round
    /// finishes so that finished rounds can be persisted before a later
    /// round fails.
    pub fn run_pipeline_with<F>(&self, aux_data: &[ParallelCorpus], mono: &MonoData, mut on_round: F) -> Result<Vec<RoundState<B>>>
    where
        F: FnMut(&RoundState<B>) -> Result<()>,
    {
        let mut states = Vec::with_capacity(self.cfg.num_rounds as usize + 1);
        let r0 = self.run_round0(aux_data)?;
        on_round(&r0)?;
        states.push(r0);
        for round in 1..=self.cfg.num_rounds {
            let prev = states.last().expect("r0 present");
            let synthetic = self.make_synthetic(prev, &mono.for_round(round))?;
            let next = self.run_round(prev, synthetic)?;
            on_round(&next)?;
            states.push(next);
        }
        Ok(states)
    }
}

/// Validation scores for one epoch, one record per validation set. With
/// `round_trip`, sets whose source language the model can produce are scored
/// by round-trip BLEU of their (genuine) target side.
fn evaluate<B: Backend>(model: &B, valid: &[&Dataset], epoch: usize, round_trip: bool) -> Result<Vec<ValidationRecord>> {
    let mut out = Vec::with_capacity(valid.len());
    for d in valid {
        let c = &d.corpus;
        let direction = Direction::new(c.src_lang.clone(), c.tgt_lang.clone());
        let score = if round_trip && model.supports(&c.src_lang) && model.supports(&c.tgt_lang) {
            let mono = MonoCorpus::new(c.tgt_lang.clone(), c.targets().map(String::from).collect());
            round_trip_bleu(model, &c.src_lang, model, &mono)?
        } else {
            let hyps = model.translate_all(c.sources(), &c.tgt_lang)?;
            let refs: Vec<&str> = c.targets().collect();
            bleu(&hyps, &refs, TokenizationMode::Intl13a)?
        };
        out.push(ValidationRecord { epoch, direction, score });
    }
    Ok(out)
}
