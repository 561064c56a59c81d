//! Evidence inference over full-text clinical trial reports.
//!
//! Given an article and an (intervention, comparator, outcome) prompt, the
//! models in this crate predict whether the intervention significantly
//! decreased, did not significantly change, or significantly increased the
//! outcome relative to the comparator, and score article tokens for how
//! likely they are to be supporting evidence.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the article store
//! and the command line live in the `evinf` companion crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod corpus;
pub mod error;
pub mod eval;
pub mod heuristics;
pub mod linear;
pub mod models;
pub mod numerics;
pub mod preprocess;
pub mod training;

pub use corpus::{AnnotationRecord, Dataset, IcoPrompt, Label, Split};
pub use error::{Error, Result};
pub use preprocess::{ProcessedDocument, Vocabulary};
