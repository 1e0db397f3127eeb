//! Subcommand implementations. Each stage reads what earlier stages wrote to
//! the run directory, so stages can be run one at a time or all at once.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};

use ibt_core::corpus::{clean, flip, ParallelCorpus};
use ibt_core::metrics::{bleu, subword_bleu, BleuScore, TokenizationMode};
use ibt_core::orchestrator::{build_vocabulary, MonoData, Pipeline, RoundState};
use ibt_core::reporting::{Cell, Format, RoundProvenance, RunReport};
use ibt_core::synthlang::{build_benchmark, default_family};
use ibt_core::tokenizer::Vocabulary;
use ibt_core::translator::LexicalModel;
use ibt_core::{Direction, Lang};

use crate::config::{Config, DataConfig};
use crate::formats::{read_file, read_mono, read_parallel, write_file};
use crate::rundir::{Inputs, RunDir};

/// Flags shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Options {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
}

impl Options {
    pub fn run_dir(&self) -> RunDir {
        RunDir::new(&self.out_dir)
    }

    /// `--config` if given, else the run directory's stored configuration,
    /// else the bundled benchmark; `--seed` overrides the seed.
    pub fn effective_config(&self) -> Result<Config> {
        let run = self.run_dir();
        let cfg = match &self.config {
            Some(path) => Config::load(path)?,
            None if run.config_path().exists() => run.read_config()?,
            None => Config::default(),
        };
        Ok(cfg.with_seed(self.seed))
    }

    /// The configuration `prepare-data` stored, checked against the flags.
    fn prepared_config(&self) -> Result<Config> {
        let run = self.run_dir();
        ensure!(run.config_path().exists(), "{} has no config.toml; run prepare-data first", run.root().display());
        let stored = run.read_config()?;
        let asked = self.effective_config()?;
        ensure!(
            stored == asked,
            "configuration differs from the one prepare-data used in {}",
            run.root().display()
        );
        Ok(stored)
    }
}

fn pipeline(cfg: &Config, vocab: Arc<Vocabulary>) -> Result<Pipeline<LexicalModel>> {
    Ok(Pipeline::new(cfg.pipeline.clone(), vocab)?)
}

fn load_inputs(cfg: &Config) -> Result<Inputs> {
    let p = &cfg.pipeline;
    let inputs = match &cfg.data {
        DataConfig::Synthetic { train_fraction, family_seed } => {
            let mut family = default_family(family_seed.unwrap_or(p.seed));
            let wanted: Vec<&Lang> = p.aux_languages.iter().chain(&p.unseen_languages).collect();
            for l in &wanted {
                if !family.aux.iter().chain(&family.unseen).any(|s| s.code == **l) {
                    bail!("the bundled benchmark has no language {l}");
                }
            }
            family.aux.retain(|s| p.aux_languages.contains(&s.code));
            family.unseen.retain(|s| p.unseen_languages.contains(&s.code));
            let bench = build_benchmark(&family, *train_fraction, p.seed)?;
            let mut tests = bench.unseen_test_gold;
            tests.extend(bench.aux_test_gold);
            Inputs {
                aux: bench.aux_parallel,
                mono: MonoData { english: bench.english_mono, foreign: bench.unseen_mono },
                tests,
            }
        }
        DataConfig::Files { english_mono, aux, foreign_mono, test } => {
            let en = Lang::en();
            let mut aux_data = Vec::new();
            for l in &p.aux_languages {
                let path = aux.get(l).with_context(|| format!("no aux file for {l}"))?;
                aux_data.push(read_parallel(path, Some((l, &en)))?);
            }
            let mut foreign = Vec::new();
            for l in &p.unseen_languages {
                let path = foreign_mono.get(l).with_context(|| format!("no monolingual file for {l}"))?;
                foreign.push(read_mono(path, l)?);
            }
            let mut tests = Vec::new();
            for (l, path) in test {
                tests.push(read_parallel(path, Some((l, &en)))?);
            }
            Inputs { aux: aux_data, mono: MonoData { english: read_mono(english_mono, &en)?, foreign }, tests }
        }
    };
    let mono = MonoData {
        english: clean(&inputs.mono.english),
        foreign: inputs.mono.foreign.iter().map(clean).collect(),
    };
    Ok(Inputs { mono, ..inputs })
}

pub fn prepare_data(opts: &Options) -> Result<()> {
    let cfg = opts.effective_config()?;
    cfg.pipeline.validate()?;
    let run = opts.run_dir();
    let inputs = load_inputs(&cfg)?;
    let vocab = build_vocabulary(&cfg.pipeline, &inputs.aux, &inputs.mono)?;
    run.write_config(&cfg)?;
    run.write_inputs(&inputs, cfg.pipeline.seed)?;
    run.write_vocab(&vocab)?;
    eprintln!(
        "prepared {} auxiliary corpora, {} monolingual corpora, vocabulary of {} tokens",
        inputs.aux.len(),
        inputs.mono.foreign.len() + 1,
        vocab.len()
    );
    Ok(())
}

fn announce(state: &RoundState<LexicalModel>) {
    eprintln!(
        "r{}: kept epoch {} of {}, mean validation BLEU {:.2}",
        state.round,
        state.selected_epoch,
        state.stopped_at,
        state.selected_valid_bleu()
    );
}

pub fn train_round0(opts: &Options) -> Result<()> {
    let cfg = opts.prepared_config()?;
    let run = opts.run_dir();
    let vocab = run.read_vocab()?;
    let inputs = run.read_inputs(&cfg)?;
    let state = pipeline(&cfg, vocab)?.run_round0(&inputs.aux)?;
    run.save_round(&state, &cfg)?;
    announce(&state);
    Ok(())
}

/// Writes the synthetic data that round `round` trains on.
pub fn backtranslate(opts: &Options, round: u32) -> Result<()> {
    ensure!(round >= 1, "back-translation produces data for rounds 1 and up");
    let cfg = opts.prepared_config()?;
    let run = opts.run_dir();
    let vocab = run.read_vocab()?;
    let inputs = run.read_inputs(&cfg)?;
    let prev = run.load_round(round - 1, &vocab)?;
    let synthetic = pipeline(&cfg, vocab)?.make_synthetic(&prev, &inputs.mono.for_round(round))?;
    run.save_synthetic(round, &synthetic, cfg.pipeline.seed)?;
    eprintln!("bt{round}: {} pairs", synthetic.iter().map(ParallelCorpus::len).sum::<usize>());
    Ok(())
}

/// Trains round `round`, back-translating first if its data is missing.
pub fn train_round(opts: &Options, round: u32) -> Result<()> {
    if round == 0 {
        return train_round0(opts);
    }
    let cfg = opts.prepared_config()?;
    let run = opts.run_dir();
    let vocab = run.read_vocab()?;
    let synthetic = match run.load_synthetic(round, &cfg)? {
        Some(s) => s,
        None => {
            backtranslate(opts, round)?;
            run.load_synthetic(round, &cfg)?.context("back-translation wrote no data")?
        }
    };
    let prev = run.load_round(round - 1, &vocab)?;
    let state = pipeline(&cfg, vocab)?.run_round(&prev, synthetic)?;
    run.save_round(&state, &cfg)?;
    announce(&state);
    Ok(())
}

pub fn run_pipeline(opts: &Options) -> Result<()> {
    let mut timings = Vec::new();
    let mut timed = |stage: String, f: &mut dyn FnMut() -> Result<()>| -> Result<()> {
        let start = Instant::now();
        f()?;
        timings.push((stage, start.elapsed().as_secs_f64()));
        Ok(())
    };
    timed(String::from("prepare-data"), &mut || prepare_data(opts))?;
    let opts = &Options { config: None, ..opts.clone() };
    let cfg = opts.prepared_config()?;
    timed(String::from("train-round0"), &mut || train_round0(opts))?;
    for round in 1..=cfg.pipeline.num_rounds {
        timed(format!("backtranslate{round}"), &mut || backtranslate(opts, round))?;
        timed(format!("train-round{round}"), &mut || train_round(opts, round))?;
    }
    timed(String::from("evaluate"), &mut || evaluate(opts, &[TokenizationMode::Intl13a]))?;
    timed(String::from("report"), &mut || report(opts).map(|_| ()))?;
    let mut out = String::from("stage\tseconds\n");
    for (stage, secs) in &timings {
        let _ = writeln!(out, "{stage}\t{secs:.3}");
    }
    write_file(&opts.run_dir().path("timings.tsv"), &out)
}

pub const EVAL_HEADER: &str = "direction\tround\tmode\tscore\tp1\tp2\tp3\tp4\tbp\thyp_len\tref_len";

fn score(model: &RoundState<LexicalModel>, gold: &ParallelCorpus, mode: TokenizationMode, vocab: &Vocabulary) -> Result<BleuScore> {
    let direction = Direction::new(gold.src_lang.clone(), gold.tgt_lang.clone());
    let hyps = gold.sources().map(|s| model.translate(s, &direction)).collect::<ibt_core::Result<Vec<_>>>()?;
    let refs: Vec<&str> = gold.targets().collect();
    Ok(match mode {
        TokenizationMode::SubwordPieces => subword_bleu(&hyps, &refs, vocab)?,
        m => bleu(&hyps, &refs, m)?,
    })
}

/// Scores every round on the held-out test sets: foreign → English for
/// every language with gold data and English → foreign for unseen languages.
pub fn evaluate(opts: &Options, modes: &[TokenizationMode]) -> Result<()> {
    let cfg = opts.prepared_config()?;
    let run = opts.run_dir();
    let vocab = run.read_vocab()?;
    let inputs = run.read_inputs(&cfg)?;
    ensure!(!inputs.tests.is_empty(), "no test sets under {}", run.path("inputs/test").display());
    let rounds = run.rounds();
    ensure!(!rounds.is_empty(), "no trained rounds in {}", run.root().display());
    let mut gold = Vec::new();
    for t in &inputs.tests {
        gold.push(t.clone());
        if cfg.pipeline.unseen_languages.contains(&t.src_lang) {
            gold.push(flip(t));
        }
    }
    let mut out = format!("{EVAL_HEADER}\n");
    for round in rounds {
        let state = run.load_round(round, &vocab)?;
        for g in &gold {
            let direction = Direction::new(g.src_lang.clone(), g.tgt_lang.clone());
            for &mode in modes {
                if !state.supports(&direction) {
                    let _ = writeln!(out, "{direction}\t{round}\t{mode}\tn/a\t-\t-\t-\t-\t-\t-\t-");
                    continue;
                }
                let s = score(&state, g, mode, &vocab)?;
                let p = s.precisions;
                let _ = writeln!(
                    out,
                    "{direction}\t{round}\t{mode}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    s.score, p[0], p[1], p[2], p[3], s.brevity_penalty, s.hyp_len, s.ref_len
                );
            }
        }
    }
    write_file(&run.path("eval/bleu.tsv"), &out)
}

/// Builds the unseen-language BLEU table from `eval/bleu.tsv` (13a scores)
/// and writes `report.txt` and `report.tsv`. Returns the text table.
pub fn report(opts: &Options) -> Result<String> {
    let cfg = opts.prepared_config()?;
    let run = opts.run_dir();
    let eval_path = run.path("eval/bleu.tsv");
    if !eval_path.exists() {
        evaluate(opts, &[TokenizationMode::Intl13a])?;
    }
    let text = read_file(&eval_path)?;
    let mut lines = text.lines();
    ensure!(lines.next() == Some(EVAL_HEADER), "{}: bad header", eval_path.display());
    let langs = &cfg.pipeline.unseen_languages;
    let mut cells = Vec::new();
    for line in lines {
        let f: Vec<&str> = line.split('\t').collect();
        ensure!(f.len() == 11, "{}: bad row {line:?}", eval_path.display());
        if f[2] != TokenizationMode::Intl13a.name() {
            continue;
        }
        let direction = Direction::parse(f[0]).with_context(|| format!("bad direction {:?}", f[0]))?;
        if !direction.foreign().is_some_and(|l| langs.contains(l)) {
            continue;
        }
        let score = if f[3] == "n/a" { None } else { Some(f[3].parse()?) };
        cells.push(Cell { round: f[1].parse()?, direction, score });
    }
    let vocab = run.read_vocab()?;
    let mut rounds = Vec::new();
    for r in run.rounds() {
        rounds.push(RoundProvenance::of(&run.load_round(r, &vocab)?));
    }
    let report = RunReport { languages: langs.clone(), cells, config_hash: cfg.hash()?, rounds };
    let table = report.render(Format::TextTable)?;
    write_file(&run.path("report.txt"), &table)?;
    write_file(&run.path("report.tsv"), &report.render(Format::Tsv)?)?;
    Ok(table)
}
