use alloc::string::{String, ToString};
use core::fmt;

use serde::{Deserialize, Serialize};

/// A language code such as `en` or `kk`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Lang(String);

impl Lang {
    pub const ENGLISH: &'static str = "en";
    /// Source code of corpora that mix several foreign languages.
    pub const MULTI: &'static str = "mul";

    pub fn new(code: impl Into<String>) -> Self {
        Lang(code.into())
    }

    pub fn en() -> Self {
        Lang(Self::ENGLISH.to_string())
    }

    pub fn multi() -> Self {
        Lang(Self::MULTI.to_string())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_english(&self) -> bool {
        self.0 == Self::ENGLISH
    }
}

impl fmt::Display for Lang {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Lang {
    fn from(s: &str) -> Self {
        Lang::new(s)
    }
}

/// A translation direction, rendered `src-tgt`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Direction {
    pub src: Lang,
    pub tgt: Lang,
}

impl Direction {
    pub fn new(src: impl Into<Lang>, tgt: impl Into<Lang>) -> Self {
        Direction { src: src.into(), tgt: tgt.into() }
    }

    pub fn into_english(foreign: &Lang) -> Self {
        Direction { src: foreign.clone(), tgt: Lang::en() }
    }

    pub fn out_of_english(foreign: &Lang) -> Self {
        Direction { src: Lang::en(), tgt: foreign.clone() }
    }

    pub fn reversed(&self) -> Self {
        Direction { src: self.tgt.clone(), tgt: self.src.clone() }
    }

    /// The non-English side, when the direction is English-centric.
    pub fn foreign(&self) -> Option<&Lang> {
        match (self.src.is_english(), self.tgt.is_english()) {
            (true, false) => Some(&self.tgt),
            (false, true) => Some(&self.src),
            _ => None,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let (a, b) = s.split_once('-')?;
        if a.is_empty() || b.is_empty() {
            return None;
        }
        Some(Direction::new(a, b))
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.src, self.tgt)
    }
}
