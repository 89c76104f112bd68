//! Reference implementations for test-time verification.
//!
//! Everything here is written directly from the fixed rule statements
//! (tree-split scoring conventions, NARA phonetic rules, the Jaro and
//! Winkler formulas, direct-recomputation linkage, the weighted-CDF
//! quantile) with no shared code paths into the main crate beyond its
//! public data types. Slow and simple on purpose: these exist to check
//! answers, not to be fast.

pub mod cart;
pub mod linkage;
pub mod quantile;
pub mod strings;
