//! Per-round BLEU tables: one row per round, a (→, ←) column pair per
//! foreign language (foreign → English, English → foreign) and an `Avg.`
//! pair holding the unweighted mean of each orientation.
//!
//! Text tables show scores rounded half-up to one decimal. The TSV form
//! keeps full precision and parses back to the same report:
//!
//! ```text
//! #ibt-report\tv1
//! config\t<hash>
//! language\t<code>                       one per column pair, in order
//! cell\t<round>\t<src>-<tgt>\t<score|n/a>
//! avg\t<round>\t<into_en|from_en>\t<score|n/a>   derived, checked on parse
//! round\t<round>\t<checkpoint>\t<parent|->\t<dataset ids, comma separated>
//! ```

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use crate::error::{Error, Result};
use crate::lang::{Direction, Lang};
use crate::orchestrator::RoundState;
use crate::translator::Backend;

pub const TSV_VERSION: &str = "v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    TextTable,
    Tsv,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub round: u32,
    pub direction: Direction,
    /// `None` for a direction the round's model does not support.
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundProvenance {
    pub round: u32,
    pub checkpoint: String,
    pub parent: Option<String>,
    pub datasets: Vec<String>,
}

impl RoundProvenance {
    pub fn of<B: Backend>(state: &RoundState<B>) -> Self {
        RoundProvenance {
            round: state.round,
            checkpoint: state.checkpoint_hash.clone(),
            parent: state.parent_hash.clone(),
            datasets: state.manifest.datasets.iter().map(|d| d.id.clone()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub languages: Vec<Lang>,
    pub cells: Vec<Cell>,
    pub config_hash: String,
    pub rounds: Vec<RoundProvenance>,
}

/// Rounds half-up to one decimal.
pub fn round1(x: f64) -> f64 {
    libm::floor(x * 10.0 + 0.5 + 1e-9) / 10.0
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

impl RunReport {
    pub fn round_numbers(&self) -> Vec<u32> {
        let mut r: Vec<u32> = self.cells.iter().map(|c| c.round).collect();
        r.sort_unstable();
        r.dedup();
        r
    }

    pub fn cell(&self, round: u32, direction: &Direction) -> Option<&Cell> {
        self.cells.iter().find(|c| c.round == round && c.direction == *direction)
    }

    /// Every (round, direction) cell must be present exactly once.
    pub fn check_complete(&self) -> Result<()> {
        let mut seen = BTreeMap::new();
        for c in &self.cells {
            let key = (c.round, c.direction.to_string());
            if seen.insert(key, ()).is_some() {
                return Err(Error::Report(format!("duplicate cell r{} {}", c.round, c.direction)));
            }
            if c.direction.foreign().is_none_or(|l| !self.languages.contains(l)) {
                return Err(Error::Report(format!("cell r{} {} names no reported language", c.round, c.direction)));
            }
        }
        for round in self.round_numbers() {
            for lang in &self.languages {
                for d in [Direction::into_english(lang), Direction::out_of_english(lang)] {
                    if self.cell(round, &d).is_none() {
                        return Err(Error::Report(format!("missing cell r{round} {d}")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Unweighted mean over the round's supported cells of one orientation;
    /// `None` when every cell is n/a.
    pub fn average(&self, round: u32, into_english: bool) -> Option<f64> {
        let xs: Vec<f64> = self
            .languages
            .iter()
            .map(|l| if into_english { Direction::into_english(l) } else { Direction::out_of_english(l) })
            .filter_map(|d| self.cell(round, &d).and_then(|c| c.score))
            .collect();
        (!xs.is_empty()).then(|| mean(&xs))
    }

    pub fn render(&self, format: Format) -> Result<String> {
        self.check_complete()?;
        Ok(match format {
            Format::TextTable => self.render_text(),
            Format::Tsv => self.render_tsv(),
        })
    }

    fn render_text(&self) -> String {
        let show = |x: Option<f64>| x.map_or_else(|| String::from("n/a"), |v| format!("{:.1}", round1(v)));
        let mut header = vec_of(["Round".to_string()]);
        let mut arrows = vec_of([String::new()]);
        for lang in &self.languages {
            header.push(format!("{lang}-en"));
            header.push(String::new());
            arrows.push(String::from("→"));
            arrows.push(String::from("←"));
        }
        header.extend([String::from("Avg."), String::new()]);
        arrows.extend([String::from("→"), String::from("←")]);
        let mut rows = vec_of([header, arrows]);
        for round in self.round_numbers() {
            let mut row = vec_of([format!("r{round}")]);
            for lang in &self.languages {
                for d in [Direction::into_english(lang), Direction::out_of_english(lang)] {
                    row.push(show(self.cell(round, &d).and_then(|c| c.score)));
                }
            }
            row.push(show(self.average(round, true)));
            row.push(show(self.average(round, false)));
            rows.push(row);
        }
        let cols = rows[0].len();
        let widths: Vec<usize> = (0..cols)
            .map(|i| rows.iter().map(|r| r[i].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in &rows {
            let mut line = String::new();
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    line.push_str("  ");
                }
                line.push_str(cell);
                for _ in cell.chars().count()..widths[i] {
                    line.push(' ');
                }
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
        out
    }

    fn render_tsv(&self) -> String {
        let num = |x: Option<f64>| x.map_or_else(|| String::from("n/a"), |v| format!("{v}"));
        let mut out = String::new();
        let _ = writeln!(out, "#ibt-report\t{TSV_VERSION}");
        let _ = writeln!(out, "config\t{}", self.config_hash);
        for lang in &self.languages {
            let _ = writeln!(out, "language\t{lang}");
        }
        for c in &self.cells {
            let _ = writeln!(out, "cell\t{}\t{}\t{}", c.round, c.direction, num(c.score));
        }
        for round in self.round_numbers() {
            let _ = writeln!(out, "avg\t{round}\tinto_en\t{}", num(self.average(round, true)));
            let _ = writeln!(out, "avg\t{round}\tfrom_en\t{}", num(self.average(round, false)));
        }
        for r in &self.rounds {
            let parent = r.parent.as_deref().unwrap_or("-");
            let _ = writeln!(out, "round\t{}\t{}\t{}\t{}", r.round, r.checkpoint, parent, r.datasets.join(","));
        }
        out
    }

    pub fn parse_tsv(text: &str) -> Result<Self> {
        let err = |n: usize, m: &str| Error::Parse(format!("report line {}: {m}", n + 1));
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, l)) if l == format!("#ibt-report\t{TSV_VERSION}") => {}
            _ => return Err(Error::Parse(String::from("not an ibt report (missing version header)"))),
        }
        let mut report = RunReport { languages: Vec::new(), cells: Vec::new(), config_hash: String::new(), rounds: Vec::new() };
        let mut averages = Vec::new();
        let score = |n: usize, s: &str| -> Result<Option<f64>> {
            if s == "n/a" {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| err(n, "bad score"))
            }
        };
        for (n, line) in lines {
            let f: Vec<&str> = line.split('\t').collect();
            let round = |s: &str| s.parse::<u32>().map_err(|_| err(n, "bad round"));
            match f.as_slice() {
                ["config", h] => report.config_hash = String::from(*h),
                ["language", l] => report.languages.push(Lang::from(*l)),
                ["cell", r, d, s] => report.cells.push(Cell {
                    round: round(r)?,
                    direction: Direction::parse(d).ok_or_else(|| err(n, "bad direction"))?,
                    score: score(n, s)?,
                }),
                ["avg", r, side, s] => {
                    let into = match *side {
                        "into_en" => true,
                        "from_en" => false,
                        _ => return Err(err(n, "bad average side")),
                    };
                    averages.push((n, round(r)?, into, score(n, s)?));
                }
                ["round", r, ck, parent, ds] => report.rounds.push(RoundProvenance {
                    round: round(r)?,
                    checkpoint: String::from(*ck),
                    parent: (*parent != "-").then(|| String::from(*parent)),
                    datasets: if ds.is_empty() { Vec::new() } else { ds.split(',').map(String::from).collect() },
                }),
                [""] => {}
                _ => return Err(err(n, "unrecognized record")),
            }
        }
        report.check_complete()?;
        for (n, round, into, stored) in averages {
            let recomputed = report.average(round, into);
            let same = match (stored, recomputed) {
                (None, None) => true,
                (Some(a), Some(b)) => (a - b).abs() <= 1e-9 * a.abs().max(1.0),
                _ => false,
            };
            if !same {
                return Err(err(n, "average disagrees with cells"));
            }
        }
        Ok(report)
    }
}

fn vec_of<T, const N: usize>(items: [T; N]) -> Vec<T> {
    Vec::from(items)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    const LANGS: [&str; 7] = ["kk", "gu", "si", "ne", "ps", "is", "my"];

    fn table1() -> RunReport {
        let rows: [(u32, [f64; 7], Option<[f64; 7]>); 3] = [
            (0, [19.6, 23.2, 17.5, 20.9, 9.8, 26.0, 16.5], None),
            (1, [18.5, 21.1, 14.8, 18.0, 9.0, 24.4, 14.3], Some([20.7, 13.1, 6.6, 8.3, 8.0, 23.4, 8.3])),
            (2, [18.2, 21.5, 17.8, 19.7, 13.0, 30.6, 12.9], Some([22.9, 13.9, 7.1, 9.3, 8.1, 25.4, 8.8])),
        ];
        let mut cells = Vec::new();
        for (round, into, out) in rows {
            for (i, l) in LANGS.iter().enumerate() {
                let l = Lang::from(*l);
                cells.push(Cell { round, direction: Direction::into_english(&l), score: Some(into[i]) });
                cells.push(Cell { round, direction: Direction::out_of_english(&l), score: out.map(|o| o[i]) });
            }
        }
        RunReport { languages: LANGS.iter().map(|&l| Lang::from(l)).collect(), cells, config_hash: String::from("fixture"), rounds: Vec::new() }
    }

    #[test]
    fn table1_averages() {
        let r = table1();
        assert_eq!(round1(r.average(0, true).unwrap()), 19.1);
        assert_eq!(r.average(0, false), None);
        assert_eq!(round1(r.average(1, true).unwrap()), 17.2);
        assert_eq!(round1(r.average(1, false).unwrap()), 12.6);
        assert_eq!(round1(r.average(2, true).unwrap()), 19.1);
        assert_eq!(round1(r.average(2, false).unwrap()), 13.6);
        let text = r.render(Format::TextTable).unwrap();
        let last = |prefix: &str| text.lines().find(|l| l.starts_with(prefix)).unwrap().split_whitespace().rev().take(2).collect::<Vec<_>>();
        assert_eq!(last("r0"), ["n/a", "19.1"]);
        assert_eq!(last("r1"), ["12.6", "17.2"]);
        assert_eq!(last("r2"), ["13.6", "19.1"]);
    }

    #[test]
    fn half_up_rounding() {
        assert_eq!(round1(0.05), 0.1);
        assert_eq!(round1(17.25), 17.3);
        assert_eq!(round1(17.249), 17.2);
        assert_eq!(format!("{:.1}", round1(2.35)), "2.4");
    }

    #[test]
    fn text_shape() {
        let mut r = table1();
        r.languages.truncate(2);
        r.cells.retain(|c| r.languages.iter().any(|l| c.direction.foreign() == Some(l)) && c.round > 0);
        let text = r.render(Format::TextTable).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("Round") && lines[0].contains("kk-en") && lines[0].contains("Avg."));
        assert_eq!(lines[2].split_whitespace().count(), 1 + 4 + 2);
    }

    #[test]
    fn missing_cell_is_an_error() {
        let mut r = table1();
        r.cells.remove(3);
        assert!(matches!(r.render(Format::Tsv), Err(Error::Report(_))));
    }

    #[test]
    fn tsv_round_trips() {
        let mut r = table1();
        r.rounds = vec![
            RoundProvenance { round: 0, checkpoint: String::from("aa"), parent: None, datasets: vec![String::from("d0")] },
            RoundProvenance {
                round: 1,
                checkpoint: String::from("bb"),
                parent: Some(String::from("aa")),
                datasets: vec![String::from("bt1.en-kk"), String::from("d0")],
            },
        ];
        r.cells[0].score = Some(1.0 / 3.0);
        let tsv = r.render(Format::Tsv).unwrap();
        assert_eq!(RunReport::parse_tsv(&tsv).unwrap(), r);
    }

    #[test]
    fn tampered_average_is_rejected() {
        let tsv = table1().render(Format::Tsv).unwrap().replace("avg\t1\tinto_en\t", "avg\t1\tinto_en\t9");
        assert!(RunReport::parse_tsv(&tsv).is_err());
    }

    proptest! {
        #[test]
        fn text_and_tsv_agree(scores in proptest::collection::vec(0.0f64..100.0, 14)) {
            let mut r = table1();
            r.cells.retain(|c| c.round == 1);
            for (c, s) in r.cells.iter_mut().zip(&scores) {
                c.score = Some(*s);
            }
            let parsed = RunReport::parse_tsv(&r.render(Format::Tsv).unwrap()).unwrap();
            prop_assert_eq!(&parsed, &r);
            let text = r.render(Format::TextTable).unwrap();
            let row: Vec<&str> = text.lines().nth(2).unwrap().split_whitespace().skip(1).collect();
            for (i, c) in r.cells.iter().enumerate() {
                prop_assert_eq!(row[i], format!("{:.1}", round1(c.score.unwrap())));
            }
            let avg = mean(&scores.iter().step_by(2).copied().collect::<Vec<_>>());
            prop_assert!((avg - r.average(1, true).unwrap()).abs() < 1e-9);
            prop_assert!((row[14].parse::<f64>().unwrap() - avg).abs() <= 0.05 + 1e-9);
        }
    }
}
