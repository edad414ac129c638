use std::fmt;

use serde::Serialize;

use super::value::Value;
use crate::syntax::{render_diagnostic, Span};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum FaultKind {
    DivideByZero,
    IndexOutOfBounds,
    NegativeArrayRange,
    TypeInvariantViolation,
    AssertionFailure,
    PreconditionViolation,
    PostconditionViolation,
    LoopInvariantViolation,
    RuntimeTypeError,
    LambdaDomainExhausted,
    StackOverflow,
    Timeout,
}

impl fmt::Display for FaultKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// One activation in a fault's call trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub name: String,
    pub args: Vec<Value>,
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.name)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

/// A runtime error or specification violation. `trace` is innermost-first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fault {
    pub kind: FaultKind,
    pub message: String,
    pub span: Span,
    pub trace: Vec<Frame>,
}

impl Fault {
    /// Renders the fault as
    ///
    /// ```text
    /// <path>:<line>: <message>
    /// <source line>
    ///     ^^^
    /// Stack Trace:
    /// --> inner(args)
    /// --> outer(args)
    /// ```
    ///
    /// The stack section is omitted when the trace is empty.
    pub fn format_trace(&self, path: &str, text: &str, line_index: &[usize]) -> String {
        let mut out = render_diagnostic(path, text, line_index, self.span, &self.message);
        if !self.trace.is_empty() {
            out.push_str("\nStack Trace:");
            for frame in &self.trace {
                out.push_str(&format!("\n--> {frame}"));
            }
        }
        out
    }

    pub fn record(&self, path: &str) -> FaultRecord {
        FaultRecord {
            kind: self.kind,
            message: self.message.clone(),
            file: path.to_string(),
            line: self.span.line,
            column: self.span.column,
            frames: self.trace.iter().map(ToString::to_string).collect(),
        }
    }
}

impl fmt::Display for Fault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} ({})", self.span, self.message, self.kind)
    }
}

impl std::error::Error for Fault {}

/// Structured form of a [`Fault`] for machine-readable reports.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FaultRecord {
    pub kind: FaultKind,
    pub message: String,
    pub file: String,
    pub line: u32,
    pub column: u32,
    pub frames: Vec<String>,
}
