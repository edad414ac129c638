//! Lexing, parsing, printing and name resolution for `.wys` sources.

pub mod ast;
pub mod lexer;
mod parser;
mod printer;
mod resolve;

use std::fmt;

pub use ast::*;
pub use parser::{parse, parse_expr, parse_type};
pub use printer::{print_expr, print_source, print_type};
pub use resolve::{resolve, Program};

/// A lexical, syntactic or resolution error.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{span}: {message}")]
pub struct SyntaxError {
    pub message: String,
    pub span: Span,
}

impl SyntaxError {
    pub fn new(message: impl Into<String>, span: Span) -> Self {
        SyntaxError {
            message: message.into(),
            span,
        }
    }

    /// Renders the error with the offending line echoed and underlined.
    pub fn render(&self, path: &str, text: &str) -> String {
        render_diagnostic(path, text, &line_starts(text), self.span, &self.message)
    }
}

/// `<path>:<line>: <message>`, the source line, and a caret run under the
/// span's columns on that line.
pub fn render_diagnostic(
    path: &str,
    text: &str,
    starts: &[usize],
    span: Span,
    message: &str,
) -> String {
    let line = line_of(text, starts, span.line);
    let col = (span.column.max(1) - 1) as usize;
    let width = ((span.end - span.start) as usize).max(1);
    let width = width.min(line.len().saturating_sub(col)).max(1);
    format!(
        "{path}:{}: {message}\n{line}\n{}{}",
        span.line,
        " ".repeat(col),
        "^".repeat(width)
    )
}

/// Parses and resolves `text`, rendering any error as a diagnostic.
pub fn compile(text: &str, path: &str) -> Result<Program, Diagnostic> {
    parse(text, path).and_then(resolve).map_err(|e| Diagnostic {
        rendered: e.render(path, text),
        error: e,
    })
}

/// A [`SyntaxError`] together with its rendered form.
#[derive(Clone, Debug)]
pub struct Diagnostic {
    pub error: SyntaxError,
    pub rendered: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.rendered)
    }
}

impl std::error::Error for Diagnostic {}
