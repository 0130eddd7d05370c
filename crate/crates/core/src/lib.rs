//! Cross-lingual dependency parsing via code-mixed treebanks.
//!
//! A source-language treebank is partially translated into a target
//! language using word alignments (see [`translate`]), and a biaffine
//! graph-based parser ([`parser`]) is trained on the result. [`eval`]
//! scores the parser on target-language trees.

pub mod alignment;
pub mod conllu;
pub mod eval;
pub mod parser;
pub mod resources;
pub mod synthetic;
pub mod translate;
