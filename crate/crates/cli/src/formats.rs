//! On-disk formats.
//!
//! - Monolingual corpora: UTF-8, one sentence per line.
//! - Parallel corpora: one pair per line, `source<TAB>target`, with a TOML
//!   sidecar `<file>.manifest.toml` holding languages, origin, counts, seed
//!   and content hash.
//! - Vocabulary: a header line, then one token per line in id order, then one
//!   `lang<TAB>id` line per tag.
//! - Checkpoints: a line-oriented text dump of a [`LexicalModel`] ending in
//!   its content hash; probabilities are written in shortest round-trip
//!   exponent form, so loading reproduces the model bit for bit.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};

use ibt_core::corpus::{MonoCorpus, Origin, ParallelCorpus, SentencePair};
use ibt_core::metrics::{BleuScore, TokenizationMode};
use ibt_core::orchestrator::ValidationRecord;
use ibt_core::tokenizer::{TokenId, Vocabulary};
use ibt_core::translator::{LexicalModel, Table};
use ibt_core::{Direction, Lang};

pub const CORPUS_FORMAT: &str = "ibt-corpus v1";
pub const VOCAB_HEADER: &str = "#ibt-vocab\tv1";
pub const CHECKPOINT_HEADER: &str = "ibt-lexical-model v1";

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

pub(crate) fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn read_mono(path: &Path, lang: &Lang) -> Result<MonoCorpus> {
    let text = read_file(path)?;
    Ok(MonoCorpus::new(lang.clone(), text.lines().map(String::from).collect()))
}

pub fn write_mono(path: &Path, corpus: &MonoCorpus) -> Result<()> {
    let mut out = String::new();
    for line in &corpus.lines {
        out.push_str(line);
        out.push('\n');
    }
    write_file(path, &out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusManifest {
    pub format: String,
    pub src_lang: Lang,
    pub tgt_lang: Lang,
    pub origin: String,
    pub pairs: usize,
    pub seed: u64,
    pub content_hash: String,
    #[serde(default)]
    pub provenance: Vec<ProvenanceEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProvenanceEntry {
    pub lang: Lang,
    pub pairs: usize,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.toml");
    path.with_file_name(name)
}

/// Writes the pairs and their sidecar manifest. All pairs must share one
/// origin.
pub fn write_parallel(path: &Path, corpus: &ParallelCorpus, seed: u64) -> Result<()> {
    let origin = corpus.pairs.first().map_or(Origin::Real, |p| p.origin);
    ensure!(
        corpus.pairs.iter().all(|p| p.origin == origin),
        "{}: pairs of mixed origin cannot share one sidecar",
        path.display()
    );
    let mut out = String::new();
    for p in &corpus.pairs {
        ensure!(
            !p.source.contains(['\t', '\n']) && !p.target.contains(['\t', '\n']),
            "{}: sentence contains a tab or newline",
            path.display()
        );
        let _ = writeln!(out, "{}\t{}", p.source, p.target);
    }
    write_file(path, &out)?;
    let manifest = CorpusManifest {
        format: String::from(CORPUS_FORMAT),
        src_lang: corpus.src_lang.clone(),
        tgt_lang: corpus.tgt_lang.clone(),
        origin: origin.tag(),
        pairs: corpus.len(),
        seed,
        content_hash: corpus.content_hash(),
        provenance: corpus
            .provenance
            .iter()
            .map(|(lang, pairs)| ProvenanceEntry { lang: lang.clone(), pairs: *pairs })
            .collect(),
    };
    write_file(&sidecar_path(path), &toml::to_string(&manifest)?)
}

/// Reads a pair file. With a sidecar, languages, origin and provenance come
/// from it and the content hash is verified; without one, `langs` must be
/// given and pairs are marked real.
pub fn read_parallel(path: &Path, langs: Option<(&Lang, &Lang)>) -> Result<ParallelCorpus> {
    let sidecar = sidecar_path(path);
    let manifest: Option<CorpusManifest> = if sidecar.exists() {
        Some(toml::from_str(&read_file(&sidecar)?).with_context(|| format!("parsing {}", sidecar.display()))?)
    } else {
        None
    };
    let (src, tgt, origin) = match (&manifest, langs) {
        (Some(m), _) => {
            ensure!(m.format == CORPUS_FORMAT, "{}: unsupported format {:?}", sidecar.display(), m.format);
            let origin = Origin::parse(&m.origin).with_context(|| format!("bad origin {:?}", m.origin))?;
            (m.src_lang.clone(), m.tgt_lang.clone(), origin)
        }
        (None, Some((s, t))) => (s.clone(), t.clone(), Origin::Real),
        (None, None) => bail!("{}: no sidecar manifest and no languages given", path.display()),
    };
    let text = read_file(path)?;
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let (s, t) = line
            .split_once('\t')
            .with_context(|| format!("{}:{}: expected source<TAB>target", path.display(), i + 1))?;
        pairs.push(SentencePair { source: s.to_string(), target: t.to_string(), origin });
    }
    let mut corpus = ParallelCorpus::new(src, tgt, pairs).with_context(|| format!("loading {}", path.display()))?;
    if let Some(m) = manifest {
        if !m.provenance.is_empty() {
            corpus.provenance = m.provenance.into_iter().map(|e| (e.lang, e.pairs)).collect();
        }
        ensure!(corpus.len() == m.pairs, "{}: sidecar says {} pairs, file has {}", path.display(), m.pairs, corpus.len());
        let hash = corpus.content_hash();
        ensure!(hash == m.content_hash, "{}: content hash mismatch", path.display());
    }
    Ok(corpus)
}

pub fn render_vocab(vocab: &Vocabulary) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{VOCAB_HEADER}\t{}\t{}\t{}",
        vocab.len(),
        vocab.num_corpus_tokens(),
        vocab.tag_ids().len()
    );
    for tok in vocab.tokens() {
        out.push_str(tok);
        out.push('\n');
    }
    let mut tags: Vec<(&Lang, &TokenId)> = vocab.tag_ids().iter().collect();
    tags.sort_by_key(|(_, &id)| id);
    for (lang, id) in tags {
        let _ = writeln!(out, "{lang}\t{id}");
    }
    out
}

pub fn parse_vocab(text: &str) -> Result<Vocabulary> {
    let mut lines = text.lines();
    let header = lines.next().context("empty vocabulary file")?;
    let fields: Vec<&str> = header.split('\t').collect();
    ensure!(
        fields.len() == 5 && fields[..2].join("\t") == VOCAB_HEADER,
        "not a vocabulary file (header {header:?})"
    );
    let size: usize = fields[2].parse()?;
    let num_corpus: usize = fields[3].parse()?;
    let num_tags: usize = fields[4].parse()?;
    let tokens: Vec<String> = lines.by_ref().take(size).map(String::from).collect();
    ensure!(tokens.len() == size, "vocabulary truncated: {} of {size} tokens", tokens.len());
    let mut tag_ids = BTreeMap::new();
    for line in lines.by_ref().take(num_tags) {
        let (lang, id) = line.split_once('\t').with_context(|| format!("bad tag line {line:?}"))?;
        tag_ids.insert(Lang::from(lang), id.parse::<TokenId>()?);
    }
    ensure!(tag_ids.len() == num_tags, "vocabulary lists {} of {num_tags} tags", tag_ids.len());
    ensure!(lines.next().is_none(), "trailing data after vocabulary tags");
    Ok(Vocabulary::from_parts(tokens, num_corpus, tag_ids)?)
}

pub fn render_checkpoint(model: &LexicalModel, parent: Option<&str>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{CHECKPOINT_HEADER}");
    let _ = writeln!(out, "vocab\t{}", model.vocab().content_hash());
    let _ = writeln!(out, "parent\t{}", parent.unwrap_or("-"));
    let _ = writeln!(out, "copy_prob\t{:e}", model.copy_prob());
    for (lang, table) in model.tables() {
        let _ = writeln!(out, "table\t{lang}\t{}", table.len());
        for (src, dist) in table {
            let _ = write!(out, "{src}");
            for (tgt, p) in dist {
                let _ = write!(out, "\t{tgt}:{p:e}");
            }
            out.push('\n');
        }
    }
    let _ = writeln!(out, "hash\t{}", model.content_hash());
    out
}

/// Parses a checkpoint against `vocab`, returning the model and its recorded
/// parent hash. Fails if the vocabulary or the content hash disagree.
pub fn parse_checkpoint(text: &str, vocab: &Arc<Vocabulary>) -> Result<(LexicalModel, Option<String>)> {
    let mut lines = text.lines();
    ensure!(lines.next() == Some(CHECKPOINT_HEADER), "not a checkpoint (bad header)");
    let mut field = |key: &str| -> Result<String> {
        let line = lines.next().with_context(|| format!("checkpoint ends before {key}"))?;
        let value = line
            .strip_prefix(key)
            .and_then(|r| r.strip_prefix('\t'))
            .with_context(|| format!("expected {key}, got {line:?}"))?;
        Ok(value.to_string())
    };
    let vocab_hash = field("vocab")?;
    ensure!(vocab_hash == vocab.content_hash(), "checkpoint was trained with a different vocabulary");
    let parent = field("parent")?;
    let copy_prob: f64 = field("copy_prob")?.parse()?;
    let mut tables = BTreeMap::new();
    let mut hash = None;
    while let Some(line) = lines.next() {
        let f: Vec<&str> = line.split('\t').collect();
        match f.as_slice() {
            ["table", lang, n] => {
                let n: usize = n.parse()?;
                let mut table = Table::new();
                for _ in 0..n {
                    let row = lines.next().context("checkpoint table truncated")?;
                    let mut cols = row.split('\t');
                    let src: TokenId = cols.next().unwrap_or_default().parse()?;
                    let mut dist = Vec::new();
                    for c in cols {
                        let (tgt, p) = c.split_once(':').with_context(|| format!("bad entry {c:?}"))?;
                        dist.push((tgt.parse::<TokenId>()?, p.parse::<f64>()?));
                    }
                    table.insert(src, dist);
                }
                tables.insert(Lang::from(*lang), table);
            }
            ["hash", h] => {
                hash = Some(h.to_string());
                ensure!(lines.next().is_none(), "trailing data after checkpoint hash");
                break;
            }
            _ => bail!("unrecognized checkpoint line {line:?}"),
        }
    }
    let hash = hash.context("checkpoint has no trailing hash")?;
    let model = LexicalModel::from_tables(Arc::clone(vocab), tables, copy_prob)?;
    ensure!(model.content_hash() == hash, "checkpoint content hash mismatch");
    Ok((model, (parent != "-").then_some(parent)))
}

pub const VALID_BLEU_HEADER: &str =
    "epoch\tdirection\tmode\tscore\tp1\tp2\tp3\tp4\tbp\thyp_len\tref_len\tmatches\ttotals";

fn join4<T: std::fmt::Display>(xs: &[T; 4]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn split4<T: std::str::FromStr>(s: &str) -> Result<[T; 4]>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    let v: Vec<T> = s.split(',').map(str::parse).collect::<Result<_, _>>()?;
    v.try_into().map_err(|_| anyhow::anyhow!("expected four comma-separated values in {s:?}"))
}

pub fn render_valid_bleu(history: &[ValidationRecord]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{VALID_BLEU_HEADER}");
    for r in history {
        let s = &r.score;
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.epoch,
            r.direction,
            s.tokenization_mode,
            s.score,
            s.precisions[0],
            s.precisions[1],
            s.precisions[2],
            s.precisions[3],
            s.brevity_penalty,
            s.hyp_len,
            s.ref_len,
            join4(&s.matches),
            join4(&s.totals)
        );
    }
    out
}

pub fn parse_valid_bleu(text: &str) -> Result<Vec<ValidationRecord>> {
    let mut lines = text.lines();
    ensure!(lines.next() == Some(VALID_BLEU_HEADER), "bad valid_bleu header");
    let mut out = Vec::new();
    for line in lines {
        let f: Vec<&str> = line.split('\t').collect();
        ensure!(f.len() == 13, "bad valid_bleu row {line:?}");
        let direction = Direction::parse(f[1]).with_context(|| format!("bad direction {:?}", f[1]))?;
        let mode = TokenizationMode::parse(f[2]).with_context(|| format!("bad mode {:?}", f[2]))?;
        let score = BleuScore {
            score: f[3].parse()?,
            precisions: [f[4].parse()?, f[5].parse()?, f[6].parse()?, f[7].parse()?],
            brevity_penalty: f[8].parse()?,
            hyp_len: f[9].parse()?,
            ref_len: f[10].parse()?,
            matches: split4(f[11])?,
            totals: split4(f[12])?,
            tokenization_mode: mode,
        };
        out.push(ValidationRecord { epoch: f[0].parse()?, direction, score });
    }
    Ok(out)
}
