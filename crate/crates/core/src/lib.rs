//! Verse-level semantic search over Qur'an tafsir commentary.
//!
//! The pipeline: [`corpus`] loads verse text and tafsir files and aligns
//! commentary to verses, [`textnorm`] normalizes Arabic text, [`embedding`]
//! trains CBOW word vectors and pools them into document vectors, [`index`]
//! answers prompts by exact cosine search, and [`eval`] scores retrieval
//! against labeled topic prompts.

pub mod corpus;
pub mod embedding;
pub mod eval;
pub mod index;
mod par;
pub mod textnorm;
mod wire;

pub use par::is_parallel;
pub use wire::FormatError;
