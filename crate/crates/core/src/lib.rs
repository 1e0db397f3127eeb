//! Core of an English-centric iterative back-translation pipeline.
//!
//! A stage-one model is trained on auxiliary foreign→English parallel data,
//! then refined through rounds of offline back-translation over monolingual
//! corpora of languages it never saw paired with English. Everything here is
//! `no_std` + `alloc` and deterministic for a fixed seed; file formats, run
//! directories and the command-line driver live in the `ibt-cli` crate.
//!
//! Modules:
//! - [`corpus`]: cleaning, sampling, splitting and flipping of corpora.
//! - [`tokenizer`]: the frozen shared vocabulary and target-language tags.
//! - [`translator`]: the pluggable translator interface and the IBM-Model-1
//!   lexical backend trained by EM.
//! - [`metrics`]: corpus BLEU (13a, whitespace, external and subword
//!   tokenizations) and round-trip BLEU.
//! - [`synthlang`]: deterministic cipher-language families with gold data.
//! - [`orchestrator`]: the round schedule, manifests and early stopping.
//! - [`reporting`]: per-round BLEU tables in text and TSV form.
#![no_std]

extern crate alloc;

pub mod corpus;
pub mod error;
pub mod hash;
pub mod lang;
pub mod metrics;
pub mod orchestrator;
pub mod reporting;
pub mod synthlang;
pub mod tokenizer;
pub mod translator;

pub use error::{Error, Result};
pub use lang::{Direction, Lang};
