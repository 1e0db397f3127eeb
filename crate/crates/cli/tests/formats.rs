use std::collections::BTreeMap;
use std::fs;
use std::sync::Arc;

use ibt_cli::config::{Config, DataConfig};
use ibt_cli::formats::*;
use ibt_core::corpus::{equal_sample, MonoCorpus, ParallelCorpus, SentencePair};
use ibt_core::metrics::{bleu, TokenizationMode};
use ibt_core::orchestrator::ValidationRecord;
use ibt_core::tokenizer::Vocabulary;
use ibt_core::translator::{train, LexicalModel, Translator};
use ibt_core::{Direction, Lang};

fn pairs(src: &str, n: usize) -> ParallelCorpus {
    let p = (0..n).map(|i| SentencePair::real(format!("{src}{i} w{} .", i % 3), format!("word{i} w{} .", i % 3))).collect();
    ParallelCorpus::new(src, "en", p).unwrap()
}

#[test]
fn parallel_round_trip_keeps_origin_and_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let sample = equal_sample(&[pairs("aa", 10), pairs("bb", 3)], 4, 9).unwrap();
    let path = dir.path().join("d0.tsv");
    write_parallel(&path, &sample, 9).unwrap();
    assert_eq!(read_parallel(&path, None).unwrap(), sample);

    let synth = ParallelCorpus::new("en", "xx", vec![SentencePair::synthetic("hello there", "X1 y", 2)]).unwrap();
    let path = dir.path().join("bt.tsv");
    write_parallel(&path, &synth, 1).unwrap();
    assert_eq!(fs::read_to_string(&path).unwrap(), "hello there\tX1 y\n");
    assert_eq!(read_parallel(&path, None).unwrap(), synth);
    let sidecar = fs::read_to_string(sidecar_path(&path)).unwrap();
    assert!(sidecar.contains("origin = \"synthetic(2)\"") && sidecar.contains("seed = 1"));
}

#[test]
fn edited_pair_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.tsv");
    write_parallel(&path, &pairs("aa", 5), 0).unwrap();
    let text = fs::read_to_string(&path).unwrap().replace("word3", "word33");
    fs::write(&path, text).unwrap();
    assert!(read_parallel(&path, None).is_err());
}

#[test]
fn plain_pair_file_needs_languages() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("plain.tsv");
    fs::write(&path, "a b\tx y\nc\tz\n").unwrap();
    assert!(read_parallel(&path, None).is_err());
    let c = read_parallel(&path, Some((&Lang::from("aa"), &Lang::en()))).unwrap();
    assert_eq!(c.len(), 2);
    fs::write(&path, "no tab here\n").unwrap();
    assert!(read_parallel(&path, Some((&Lang::from("aa"), &Lang::en()))).is_err());
}

fn vocab() -> Arc<Vocabulary> {
    let c = pairs("aa", 20);
    let mono = vec![
        MonoCorpus::new("aa", c.sources().map(String::from).collect()),
        MonoCorpus::new("en", c.targets().map(String::from).collect()),
    ];
    Arc::new(Vocabulary::build(&mono, 128, &[Lang::en(), Lang::from("xx")]).unwrap())
}

#[test]
fn vocabulary_round_trip() {
    let v = vocab();
    let text = render_vocab(&v);
    let back = parse_vocab(&text).unwrap();
    assert_eq!(back.content_hash(), v.content_hash());
    assert_eq!(back.tokens(), v.tokens());
    assert_eq!(back.tag_ids(), v.tag_ids());
    assert!(parse_vocab(&text.replacen("\t128\t", "\t129\t", 1)).is_err());
}

#[test]
fn checkpoint_round_trip_is_exact() {
    let v = vocab();
    let c = pairs("aa", 20);
    let (model, _) = train(&v, &[&c], None, 3).unwrap();
    let text = render_checkpoint(&model, Some("abc"));
    let (back, parent) = parse_checkpoint(&text, &v).unwrap();
    assert_eq!(parent.as_deref(), Some("abc"));
    assert_eq!(back.tables(), model.tables());
    assert_eq!(back.content_hash(), model.content_hash());
    for p in &c.pairs {
        assert_eq!(back.score(p, &Lang::en()).to_bits(), model.score(p, &Lang::en()).to_bits());
    }
    assert_eq!(render_checkpoint(&back, Some("abc")), text);

    let untrained = render_checkpoint(&LexicalModel::new(Arc::clone(&v)), None);
    assert_eq!(parse_checkpoint(&untrained, &v).unwrap().1, None);
}

#[test]
fn corrupted_checkpoint_is_rejected() {
    let v = vocab();
    let (model, _) = train(&v, &[&pairs("aa", 20)], None, 2).unwrap();
    let text = render_checkpoint(&model, None);
    // swapping two probabilities keeps the row normalized but breaks the hash
    let row = text.lines().find(|l| l.matches(':').count() >= 2).unwrap();
    let mut cols: Vec<(String, String)> = row
        .split('\t')
        .skip(1)
        .map(|c| c.split_once(':').map(|(a, b)| (a.to_string(), b.to_string())).unwrap())
        .collect();
    let j = cols.iter().position(|c| c.1 != cols[0].1).unwrap();
    let first = cols[0].1.clone();
    cols[0].1 = std::mem::replace(&mut cols[j].1, first);
    let swapped: Vec<String> = cols.iter().map(|(a, b)| format!("{a}:{b}")).collect();
    let broken = text.replacen(row, &format!("{}\t{}", row.split('\t').next().unwrap(), swapped.join("\t")), 1);
    assert!(parse_checkpoint(&broken, &v).unwrap_err().to_string().contains("hash"));
    let unnormalized = text.replacen(row, &row.replacen(':', ":9", 1), 1);
    assert!(parse_checkpoint(&unnormalized, &v).is_err());
    assert!(parse_checkpoint(&text[..text.len() - 10], &v).is_err());

    let other = Arc::new(Vocabulary::build(&[MonoCorpus::from_strs("en", &["q r"])], 16, &[Lang::en()]).unwrap());
    assert!(parse_checkpoint(&text, &other).is_err());
}

#[test]
fn valid_bleu_round_trip() {
    let s = bleu(&["a b c d e", "x y"], &["a b c d", "x y z"], TokenizationMode::Intl13a).unwrap();
    let history = vec![
        ValidationRecord { epoch: 0, direction: Direction::new("aa", "en"), score: s.clone() },
        ValidationRecord { epoch: 1, direction: Direction::new("en", "xx"), score: s },
    ];
    let text = render_valid_bleu(&history);
    assert_eq!(parse_valid_bleu(&text).unwrap(), history);
}

#[test]
fn config_files_section_resolves_paths() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    fs::write(
        &path,
        r#"
[pipeline]
aux_languages = ["aa"]
unseen_languages = ["xx"]
n_per_language = 10
synth_per_language = 10
seed = 4

[data]
source = "files"
english_mono = "en.txt"
aux = { aa = "aa-en.tsv" }
foreign_mono = { xx = "/abs/xx.txt" }
"#,
    )
    .unwrap();
    let cfg = Config::load(&path).unwrap();
    assert_eq!(cfg.pipeline.num_rounds, 2);
    assert_eq!(cfg.pipeline.validation_pairs_per_direction, 250);
    match cfg.data {
        DataConfig::Files { english_mono, aux, foreign_mono, test } => {
            assert_eq!(english_mono, dir.path().join("en.txt"));
            assert_eq!(aux[&Lang::from("aa")], dir.path().join("aa-en.tsv"));
            assert_eq!(foreign_mono[&Lang::from("xx")], std::path::PathBuf::from("/abs/xx.txt"));
            assert_eq!(test, BTreeMap::new());
        }
        _ => panic!("expected files source"),
    }
}

#[test]
fn config_rejects_unknown_and_invalid_fields() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    let base = Config::default().to_toml().unwrap();
    fs::write(&path, base.replace("[pipeline]", "[pipeline]\nlearning_rate = 0.1")).unwrap();
    assert!(Config::load(&path).is_err());
    fs::write(&path, base.replace("num_rounds = 2", "num_rounds = 0")).unwrap();
    assert!(Config::load(&path).is_err());
    fs::write(&path, &base).unwrap();
    assert_eq!(Config::load(&path).unwrap(), Config::default());
}
