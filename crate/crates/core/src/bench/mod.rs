//! Bench descriptions: parsing, compilation to a three-wire circuit, and
//! circuit rewriting.
//!
//! Grammar (one statement per line or `;`-separated, `#` starts a comment):
//!
//! ```text
//! statement := element [ "(" "phi" "=" value ")" ] [ "@" ( value | "phi" "=" value ) ] [ "on" arm ]
//! element   := swp | bs | hwp | dp | ps | mirrors | block | mzim
//! arm       := arm0 | arm1
//! value     := [-] atom [ ("*" | "/") atom ]      atom := number | pi
//! ```
//!
//! `hwp@θ` and `dp@θ` take degrees, `ps@phi=φ` radians, `mzim(phi=φ)` expands
//! to H(p), P_φ(p), CZ(p,P), CZ(p,M), H(p). A bench starts from the reference
//! input |000⟩ (vertically polarized fundamental beam on path 0).

mod compile;
pub mod ir;
mod parse;
pub mod rewrite;

use std::fmt;

pub use compile::compile;
pub use ir::{CircuitIR, Gate};
pub use parse::parse;
pub use rewrite::{equivalent, rewrite, standard_rules, Equivalence, RewriteRule, TemplateGate};

use crate::elements::ElementOp;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiagnosticKind {
    Lexical,
    Syntax,
    UnknownElement,
    Parameter,
    UndeclaredArm,
}

impl fmt::Display for DiagnosticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DiagnosticKind::Lexical => "lexical error",
            DiagnosticKind::Syntax => "syntax error",
            DiagnosticKind::UnknownElement => "unknown element",
            DiagnosticKind::Parameter => "parameter error",
            DiagnosticKind::UndeclaredArm => "undeclared arm",
        })
    }
}

/// A positioned parse error (1-based line and column).
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{column}: {kind}: {message}")]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl Diagnostic {
    pub fn new(kind: DiagnosticKind, line: usize, column: usize, message: impl Into<String>) -> Self {
        Self { kind, line, column, message: message.into() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StatementKind {
    Element(ElementOp),
    Mzim { phi: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Statement {
    pub kind: StatementKind,
    pub line: usize,
    pub column: usize,
}

/// Parsed bench: statements in beam order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BenchProgram {
    pub statements: Vec<Statement>,
}

impl BenchProgram {
    /// Port names; input and output ports share the arm labels.
    pub const PORTS: [&'static str; 2] = ["arm0", "arm1"];

    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }
}

/// Source of the preparation chain that produces the GHZ-like beam.
pub const PREPARATION_BENCH: &str = "swp; bs; hwp@0 on arm0; hwp@-45 on arm1\n";

/// The interferometer with the additional mirror, calibrated to φ = 0.
pub const MZIM_BENCH: &str = "mzim(phi=0)\n";
