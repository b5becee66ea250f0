//! Concrete and abstract syntax of the exercise language.

mod ast;
mod lexer;
mod parser;
mod path;
mod pretty;

pub use ast::{is_hidden, Alt, Assoc, Binding, Expr, HoleId, Op, Pattern, Program, Rhs, HIDDEN_PREFIX};
pub use parser::{parse_expr, parse_program, parse_signature, parse_type};
pub use path::{
    enumerate_paths, holes, node_at, node_at_mut, node_count, parent_path, replace_at, HoleInfo, Path, PathError,
};
pub use pretty::{pretty_binding, pretty_expr, pretty_pattern, pretty_program};

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParseError {
    #[error("{line}:{col}: {message}{}", expected_suffix(.expected))]
    Syntax { line: usize, col: usize, message: String, expected: Vec<String> },
    #[error("hole ?{0} is numbered more than once")]
    DuplicateHoleId(HoleId),
}

pub type SyntaxError = ParseError;

fn expected_suffix(expected: &[String]) -> String {
    if expected.is_empty() {
        String::new()
    } else {
        format!(" (expected {})", expected.join(" or "))
    }
}

impl ParseError {
    pub(crate) fn new(line: usize, col: usize, message: impl Into<String>, expected: Vec<String>) -> Self {
        ParseError::Syntax { line, col, message: message.into(), expected }
    }

    pub(crate) fn duplicate_hole(id: HoleId) -> Self {
        ParseError::DuplicateHoleId(id)
    }
}
