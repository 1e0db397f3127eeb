//! Run directory layout and round persistence.
//!
//! ```text
//! <out>/config.toml                  effective configuration
//! <out>/inputs/vocab.txt             frozen vocabulary
//! <out>/inputs/aux/<xx>-en.tsv       auxiliary parallel data
//! <out>/inputs/mono/<lang>.txt       monolingual data
//! <out>/inputs/test/<xx>-en.tsv      held-out gold pairs
//! <out>/synthetic/bt<N>.<src>-<tgt>.tsv
//! <out>/data/<dataset id>.tsv        datasets referenced by round manifests
//! <out>/rounds/r<N>/{model.ckpt, manifest, valid_bleu.tsv}
//! <out>/eval/bleu.tsv
//! <out>/report.txt, report.tsv, timings.tsv
//! ```
//!
//! Everything except `timings.tsv` is a deterministic function of the
//! configuration and seed. Paths inside manifests are relative to `<out>`.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{ensure, Context, Result};
use serde::{Deserialize, Serialize};

use ibt_core::corpus::{MonoCorpus, Origin, ParallelCorpus};
use ibt_core::orchestrator::{Dataset, DatasetRef, MonoData, Role, RoundManifest, RoundState};
use ibt_core::tokenizer::Vocabulary;
use ibt_core::translator::LexicalModel;
use ibt_core::Lang;

use crate::config::Config;
use crate::formats::{
    parse_checkpoint, parse_valid_bleu, parse_vocab, read_file, read_parallel, render_checkpoint, render_valid_bleu,
    render_vocab, write_file, write_mono, write_parallel,
};

pub struct RunDir {
    root: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MonoManifest {
    format: String,
    lang: Lang,
    lines: usize,
    content_hash: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    round: u32,
    checkpoint: String,
    parent: Option<String>,
    vocab: String,
    config: String,
    selected_epoch: usize,
    stopped_at: usize,
    dataset: Vec<DatasetEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetEntry {
    id: String,
    role: Role,
    src: Lang,
    tgt: Lang,
    origin: String,
    pairs: usize,
    hash: String,
    path: String,
}

/// Everything `prepare-data` writes, loaded back.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub aux: Vec<ParallelCorpus>,
    pub mono: MonoData,
    /// Gold (foreign → English) test pairs per language, when available.
    pub tests: Vec<ParallelCorpus>,
}

impl RunDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        RunDir { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn config_path(&self) -> PathBuf {
        self.path("config.toml")
    }

    pub fn vocab_path(&self) -> PathBuf {
        self.path("inputs/vocab.txt")
    }

    pub fn aux_path(&self, lang: &Lang) -> PathBuf {
        self.path(&format!("inputs/aux/{lang}-en.tsv"))
    }

    pub fn mono_path(&self, lang: &Lang) -> PathBuf {
        self.path(&format!("inputs/mono/{lang}.txt"))
    }

    pub fn test_path(&self, lang: &Lang) -> PathBuf {
        self.path(&format!("inputs/test/{lang}-en.tsv"))
    }

    pub fn synthetic_path(&self, round: u32, corpus: &ParallelCorpus) -> PathBuf {
        self.path(&format!("synthetic/bt{round}.{}-{}.tsv", corpus.src_lang, corpus.tgt_lang))
    }

    pub fn round_dir(&self, round: u32) -> PathBuf {
        self.path(&format!("rounds/r{round}"))
    }

    pub fn has_round(&self, round: u32) -> bool {
        self.round_dir(round).join("manifest").exists()
    }

    /// Rounds with a manifest, from r0 up to the first gap.
    pub fn rounds(&self) -> Vec<u32> {
        (0..).take_while(|&r| self.has_round(r)).collect()
    }

    pub fn write_config(&self, cfg: &Config) -> Result<()> {
        write_file(&self.config_path(), &cfg.to_toml()?)
    }

    pub fn read_config(&self) -> Result<Config> {
        let text = read_file(&self.config_path())?;
        toml::from_str(&text).with_context(|| format!("parsing {}", self.config_path().display()))
    }

    pub fn write_vocab(&self, vocab: &Vocabulary) -> Result<()> {
        write_file(&self.vocab_path(), &render_vocab(vocab))
    }

    pub fn read_vocab(&self) -> Result<Arc<Vocabulary>> {
        let text = read_file(&self.vocab_path()).context("no vocabulary; run prepare-data first")?;
        Ok(Arc::new(parse_vocab(&text).with_context(|| format!("parsing {}", self.vocab_path().display()))?))
    }

    pub fn write_mono(&self, path: &Path, corpus: &MonoCorpus) -> Result<()> {
        write_mono(path, corpus)?;
        let manifest = MonoManifest {
            format: String::from(crate::formats::CORPUS_FORMAT),
            lang: corpus.lang.clone(),
            lines: corpus.len(),
            content_hash: corpus.content_hash(),
        };
        write_file(&crate::formats::sidecar_path(path), &toml::to_string(&manifest)?)
    }

    fn read_mono(&self, path: &Path, lang: &Lang) -> Result<MonoCorpus> {
        let corpus = crate::formats::read_mono(path, lang)?;
        let sidecar = crate::formats::sidecar_path(path);
        if sidecar.exists() {
            let m: MonoManifest = toml::from_str(&read_file(&sidecar)?)?;
            ensure!(m.lang == *lang, "{}: sidecar language {} differs from {lang}", path.display(), m.lang);
            ensure!(m.content_hash == corpus.content_hash(), "{}: content hash mismatch", path.display());
        }
        Ok(corpus)
    }

    pub fn write_inputs(&self, inputs: &Inputs, seed: u64) -> Result<()> {
        for c in &inputs.aux {
            write_parallel(&self.aux_path(&c.src_lang), c, seed)?;
        }
        self.write_mono(&self.mono_path(&Lang::en()), &inputs.mono.english)?;
        for m in &inputs.mono.foreign {
            self.write_mono(&self.mono_path(&m.lang), m)?;
        }
        for t in &inputs.tests {
            write_parallel(&self.test_path(&t.src_lang), t, seed)?;
        }
        Ok(())
    }

    pub fn read_inputs(&self, cfg: &Config) -> Result<Inputs> {
        let p = &cfg.pipeline;
        let aux = p
            .aux_languages
            .iter()
            .map(|l| read_parallel(&self.aux_path(l), None))
            .collect::<Result<Vec<_>>>()
            .context("reading auxiliary data; run prepare-data first")?;
        let english = self.read_mono(&self.mono_path(&Lang::en()), &Lang::en())?;
        let foreign = p
            .unseen_languages
            .iter()
            .map(|l| self.read_mono(&self.mono_path(l), l))
            .collect::<Result<Vec<_>>>()?;
        let mut tests = Vec::new();
        for l in p.unseen_languages.iter().chain(&p.aux_languages) {
            let path = self.test_path(l);
            if path.exists() {
                tests.push(read_parallel(&path, None)?);
            }
        }
        Ok(Inputs { aux, mono: MonoData { english, foreign }, tests })
    }

    fn dataset_rel(id: &str) -> String {
        format!("data/{id}.tsv")
    }

    pub fn save_synthetic(&self, round: u32, corpora: &[ParallelCorpus], seed: u64) -> Result<()> {
        for c in corpora {
            write_parallel(&self.synthetic_path(round, c), c, seed)?;
        }
        Ok(())
    }

    /// Synthetic corpora for `round` in language order, if all are present.
    pub fn load_synthetic(&self, round: u32, cfg: &Config) -> Result<Option<Vec<ParallelCorpus>>> {
        let mut out = Vec::new();
        for l in &cfg.pipeline.unseen_languages {
            let (src, tgt) = if round % 2 == 1 { (Lang::en(), l.clone()) } else { (l.clone(), Lang::en()) };
            let path = self.path(&format!("synthetic/bt{round}.{src}-{tgt}.tsv"));
            if !path.exists() {
                return Ok(None);
            }
            out.push(read_parallel(&path, None)?);
        }
        Ok(Some(out))
    }

    pub fn save_round(&self, state: &RoundState<LexicalModel>, cfg: &Config) -> Result<()> {
        let seed = cfg.pipeline.seed;
        let mut entries = Vec::new();
        for d in &state.datasets {
            let rel = Self::dataset_rel(&d.id);
            write_parallel(&self.path(&rel), &d.corpus, seed)?;
            let r = d.describe();
            entries.push(DatasetEntry {
                id: r.id,
                role: r.role,
                src: r.src,
                tgt: r.tgt,
                origin: r.origin.tag(),
                pairs: r.pairs,
                hash: r.hash,
                path: rel,
            });
        }
        let dir = self.round_dir(state.round);
        let manifest = ManifestFile {
            round: state.round,
            checkpoint: state.checkpoint_hash.clone(),
            parent: state.parent_hash.clone(),
            vocab: state.model.vocab().content_hash(),
            config: cfg.hash()?,
            selected_epoch: state.selected_epoch,
            stopped_at: state.stopped_at,
            dataset: entries,
        };
        write_file(&dir.join("model.ckpt"), &render_checkpoint(&state.model, state.parent_hash.as_deref()))?;
        write_file(&dir.join("valid_bleu.tsv"), &render_valid_bleu(&state.valid_bleu_history))?;
        write_file(&dir.join("manifest"), &toml::to_string(&manifest)?)
    }

    pub fn load_round(&self, round: u32, vocab: &Arc<Vocabulary>) -> Result<RoundState<LexicalModel>> {
        let dir = self.round_dir(round);
        let m: ManifestFile = toml::from_str(&read_file(&dir.join("manifest"))?)
            .with_context(|| format!("parsing {}", dir.join("manifest").display()))?;
        ensure!(m.round == round, "{}: manifest is for round {}", dir.display(), m.round);
        ensure!(m.vocab == vocab.content_hash(), "round {round} used a different vocabulary");
        let (model, parent) = parse_checkpoint(&read_file(&dir.join("model.ckpt"))?, vocab)
            .with_context(|| format!("loading {}", dir.join("model.ckpt").display()))?;
        ensure!(model.content_hash() == m.checkpoint, "round {round}: checkpoint differs from manifest");
        ensure!(parent == m.parent, "round {round}: checkpoint parent differs from manifest");
        let history = parse_valid_bleu(&read_file(&dir.join("valid_bleu.tsv"))?)?;
        let mut datasets = Vec::new();
        let mut refs = Vec::new();
        for e in m.dataset {
            let corpus = read_parallel(&self.path(&e.path), None)?;
            let origin = Origin::parse(&e.origin).with_context(|| format!("bad origin {:?}", e.origin))?;
            let d = Dataset { id: e.id, role: e.role, corpus };
            let r = d.describe();
            let expected = DatasetRef { id: r.id.clone(), role: e.role, src: e.src, tgt: e.tgt, origin, pairs: e.pairs, hash: e.hash };
            ensure!(r == expected, "dataset {} does not match round {round}'s manifest", r.id);
            refs.push(r);
            datasets.push(d);
        }
        Ok(RoundState {
            round,
            checkpoint_hash: m.checkpoint,
            model,
            manifest: RoundManifest { round, datasets: refs },
            datasets,
            valid_bleu_history: history,
            selected_epoch: m.selected_epoch,
            stopped_at: m.stopped_at,
            parent_hash: parent,
        })
    }
}
