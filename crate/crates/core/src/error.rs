use alloc::string::String;

use crate::lang::Lang;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("target languages differ: expected {expected}, found {found}")]
    TargetMismatch { expected: Lang, found: Lang },
    #[error("corpus has {size} pairs, cannot reserve {requested} for validation")]
    CorpusTooSmall { size: usize, requested: usize },
    #[error("corpus {src}-{tgt} is not English-centric")]
    NotEnglishCentric { src: Lang, tgt: Lang },
    #[error("source and target language are both {0}")]
    SameLanguage(Lang),
    #[error("empty line in corpus {0}")]
    EmptyLine(String),
    #[error("vocabulary: {0}")]
    Vocabulary(String),
    #[error("token id {id} out of range for vocabulary of {size}")]
    TokenOutOfRange { id: u32, size: usize },
    #[error("no target-language tag registered for {0}")]
    UnregisteredLanguage(Lang),
    #[error("model vocabulary {found} differs from session vocabulary {expected}")]
    VocabularyMismatch { expected: String, found: String },
    #[error("direction {0} is not supported by this model")]
    UnsupportedDirection(crate::lang::Direction),
    #[error("hypothesis count {hyps} differs from reference count {refs}")]
    LengthMismatch { hyps: usize, refs: usize },
    #[error("round schedule violated: {0}")]
    Schedule(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("report: {0}")]
    Report(String),
    #[error("parse error: {0}")]
    Parse(String),
}
