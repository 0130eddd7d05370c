//! Dependency trees and the CoNLL-U format.

mod io;
mod tree;

use thiserror::Error;

pub use self::io::{read_conllu, read_conllu_str, to_conllu_string, write_conllu, write_tree};
pub use self::tree::{
    validate_heads, validate_tree, DependencyTree, Lang, Token, Treebank, Violation,
};

#[derive(Debug, Error)]
pub enum ConlluError {
    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("sentence {sent_id}: {}", fmt_violations(.violations))]
    Structure {
        sent_id: String,
        violations: Vec<Violation>,
    },
}

impl ConlluError {
    fn parse(line: usize, message: impl Into<String>) -> Self {
        ConlluError::Parse {
            line,
            message: message.into(),
        }
    }
}

fn fmt_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}
