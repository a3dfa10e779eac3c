//! Retrieval-augmented question answering over a corpus of scientific papers,
//! with citation extraction and verification.

pub mod chain;
pub mod citation;
pub mod config;
pub mod embed;
pub mod eval;
pub mod index;
pub mod ingest;
pub mod store;
pub mod text;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/chunking.md")]
    mod chunking {}
    #[doc = include_str!("../../../book/src/retrieval.md")]
    mod retrieval {}
    #[doc = include_str!("../../../book/src/citations.md")]
    mod citations {}
    #[doc = include_str!("../../../book/src/answering.md")]
    mod answering {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/configuration.md")]
    mod configuration {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
