use std::f64::consts::PI;

use super::{BenchProgram, Diagnostic, DiagnosticKind, Statement, StatementKind};
use crate::elements::{Arm, ElementKind, ElementOp};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    At,
    Eq,
    LParen,
    RParen,
    Star,
    Slash,
    Minus,
    Sep,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut out = Vec::new();
    for (ln, line) in src.lines().enumerate() {
        let line_no = ln + 1;
        let chars: Vec<(usize, char)> = line.char_indices().collect();
        let mut i = 0;
        while i < chars.len() {
            let (_, ch) = chars[i];
            let column = i + 1;
            let simple = match ch {
                '#' => break,
                c if c.is_whitespace() => {
                    i += 1;
                    continue;
                }
                '@' => Some(Tok::At),
                '=' => Some(Tok::Eq),
                '(' => Some(Tok::LParen),
                ')' => Some(Tok::RParen),
                '*' => Some(Tok::Star),
                '/' => Some(Tok::Slash),
                '-' => Some(Tok::Minus),
                '+' => {
                    i += 1;
                    continue;
                }
                ';' => Some(Tok::Sep),
                _ => None,
            };
            if let Some(tok) = simple {
                out.push(Token { tok, line: line_no, column });
                i += 1;
                continue;
            }
            if ch.is_ascii_alphabetic() || ch == '_' {
                let start = i;
                while i < chars.len() && (chars[i].1.is_ascii_alphanumeric() || chars[i].1 == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().map(|&(_, c)| c).collect();
                out.push(Token { tok: Tok::Ident(word), line: line_no, column });
                continue;
            }
            if ch.is_ascii_digit() || ch == '.' {
                let start = i;
                while i < chars.len() && (chars[i].1.is_ascii_digit() || chars[i].1 == '.') {
                    i += 1;
                }
                // exponent
                if i < chars.len() && matches!(chars[i].1, 'e' | 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && matches!(chars[j].1, '+' | '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].1.is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].1.is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = chars[start..i].iter().map(|&(_, c)| c).collect();
                let value = text.parse::<f64>().map_err(|_| {
                    Diagnostic::new(DiagnosticKind::Lexical, line_no, column, format!("malformed number `{text}`"))
                })?;
                out.push(Token { tok: Tok::Num(value), line: line_no, column });
                continue;
            }
            return Err(Diagnostic::new(
                DiagnosticKind::Lexical,
                line_no,
                column,
                format!("unexpected character `{ch}`"),
            ));
        }
        out.push(Token { tok: Tok::Sep, line: line_no, column: line.chars().count() + 1 });
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    eof_line: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn at_stmt_end(&self) -> bool {
        matches!(self.peek(), None | Some(Token { tok: Tok::Sep, .. }))
    }

    fn here(&self) -> (usize, usize) {
        self.peek().map(|t| (t.line, t.column)).unwrap_or((self.eof_line, 1))
    }

    fn err(&self, kind: DiagnosticKind, msg: impl Into<String>) -> Diagnostic {
        let (l, c) = self.here();
        Diagnostic::new(kind, l, c, msg)
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), Diagnostic> {
        match self.peek() {
            Some(t) if t.tok == want => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.err(DiagnosticKind::Syntax, format!("expected {what}"))),
        }
    }

    fn atom(&mut self) -> Result<f64, Diagnostic> {
        let (l, c) = self.here();
        match self.next() {
            Some(Token { tok: Tok::Num(v), .. }) => Ok(v),
            Some(Token { tok: Tok::Ident(w), .. }) if w == "pi" => Ok(PI),
            _ => Err(Diagnostic::new(DiagnosticKind::Parameter, l, c, "expected a number")),
        }
    }

    fn value(&mut self) -> Result<f64, Diagnostic> {
        let neg = matches!(self.peek(), Some(Token { tok: Tok::Minus, .. }));
        if neg {
            self.pos += 1;
        }
        let mut v = self.atom()?;
        match self.peek().map(|t| &t.tok) {
            Some(Tok::Star) => {
                self.pos += 1;
                v *= self.atom()?;
            }
            Some(Tok::Slash) => {
                self.pos += 1;
                let d = self.atom()?;
                if d == 0.0 {
                    return Err(self.err(DiagnosticKind::Parameter, "division by zero"));
                }
                v /= d;
            }
            _ => {}
        }
        let v = if neg { -v } else { v };
        if !v.is_finite() {
            return Err(self.err(DiagnosticKind::Parameter, "parameter must be finite"));
        }
        Ok(v)
    }

    /// `phi = value`
    fn phi_assignment(&mut self) -> Result<f64, Diagnostic> {
        match self.next() {
            Some(Token { tok: Tok::Ident(w), .. }) if w == "phi" => {}
            _ => {
                self.pos -= 1;
                return Err(self.err(DiagnosticKind::Parameter, "expected `phi=<radians>`"));
            }
        }
        self.expect(Tok::Eq, "`=`")?;
        self.value()
    }

    fn statement(&mut self) -> Result<Statement, Diagnostic> {
        let head = self.next().expect("caller checked a token is present");
        let (line, column) = (head.line, head.column);
        let name = match head.tok {
            Tok::Ident(w) => w,
            _ => return Err(Diagnostic::new(DiagnosticKind::Syntax, line, column, "expected an element name")),
        };
        let kind = match name.as_str() {
            "swp" => Some(ElementKind::Swp),
            "bs" => Some(ElementKind::Bs),
            "hwp" => Some(ElementKind::Hwp),
            "dp" => Some(ElementKind::Dp),
            "ps" | "phase" => Some(ElementKind::PhaseShifter),
            "mirrors" | "mirror_pair" => Some(ElementKind::MirrorPair),
            "block" => Some(ElementKind::Blocker),
            "mzim" => None,
            other => {
                return Err(Diagnostic::new(
                    DiagnosticKind::UnknownElement,
                    line,
                    column,
                    format!("unknown element `{other}`"),
                ))
            }
        };
        let param_err = |msg: String| Diagnostic::new(DiagnosticKind::Parameter, line, column, msg);

        let mut macro_phi = None;
        if matches!(self.peek(), Some(Token { tok: Tok::LParen, .. })) {
            if kind.is_some() {
                return Err(self.err(DiagnosticKind::Syntax, format!("`{name}` takes no argument list")));
            }
            self.pos += 1;
            macro_phi = Some(self.phi_assignment()?);
            self.expect(Tok::RParen, "`)`")?;
        }

        let mut angle = None;
        let mut phi = None;
        if matches!(self.peek(), Some(Token { tok: Tok::At, .. })) {
            self.pos += 1;
            if matches!(self.peek(), Some(Token { tok: Tok::Ident(w), .. }) if w == "phi") {
                phi = Some(self.phi_assignment()?);
            } else {
                angle = Some(self.value()?);
            }
        }

        let mut arm = None;
        if matches!(self.peek(), Some(Token { tok: Tok::Ident(w), .. }) if w == "on") {
            self.pos += 1;
            let (l, c) = self.here();
            arm = Some(match self.next() {
                Some(Token { tok: Tok::Ident(w), .. }) if w == "arm0" => Arm::Arm0,
                Some(Token { tok: Tok::Ident(w), .. }) if w == "arm1" => Arm::Arm1,
                Some(Token { tok: Tok::Ident(w), .. }) => {
                    return Err(Diagnostic::new(
                        DiagnosticKind::UndeclaredArm,
                        l,
                        c,
                        format!("arm `{w}` is not declared (ports are arm0, arm1)"),
                    ))
                }
                _ => return Err(Diagnostic::new(DiagnosticKind::Syntax, l, c, "expected an arm name after `on`")),
            });
        }

        if !self.at_stmt_end() {
            return Err(self.err(DiagnosticKind::Syntax, "unexpected token; expected `;` or end of line"));
        }

        let Some(kind) = kind else {
            if angle.is_some() || phi.is_some() {
                return Err(param_err("`mzim` takes its phase as `mzim(phi=<radians>)`".into()));
            }
            if arm.is_some() {
                return Err(param_err("`mzim` spans both arms and takes no `on`".into()));
            }
            let phi = macro_phi.ok_or_else(|| param_err("`mzim` needs `(phi=<radians>)`".into()))?;
            return Ok(Statement { kind: StatementKind::Mzim { phi }, line, column });
        };

        let param = match kind {
            ElementKind::Hwp | ElementKind::Dp => {
                if phi.is_some() {
                    return Err(param_err(format!("`{name}` takes an angle in degrees, `{name}@<deg>`")));
                }
                Some(angle.ok_or_else(|| param_err(format!("`{name}` needs an angle, `{name}@<deg>`")))?)
            }
            ElementKind::PhaseShifter => {
                if angle.is_some() {
                    return Err(param_err("`ps` takes a phase in radians, `ps@phi=<rad>`".into()));
                }
                Some(phi.ok_or_else(|| param_err("`ps` needs a phase, `ps@phi=<rad>`".into()))?)
            }
            _ => {
                if angle.is_some() || phi.is_some() {
                    return Err(param_err(format!("`{name}` takes no parameter")));
                }
                None
            }
        };
        match kind {
            ElementKind::Swp | ElementKind::Bs | ElementKind::MirrorPair if arm.is_some() => {
                return Err(param_err(format!("`{name}` acts on the whole beam and takes no `on`")));
            }
            ElementKind::Blocker if arm.is_none() => {
                return Err(param_err("`block` needs the arm to block, `block on arm1`".into()));
            }
            _ => {}
        }
        Ok(Statement { kind: StatementKind::Element(ElementOp::new(kind, param, arm)), line, column })
    }
}

/// Parses bench source text.
pub fn parse(src: &str) -> Result<BenchProgram, Diagnostic> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, eof_line: src.lines().count().max(1) };
    let mut statements = Vec::new();
    while let Some(t) = p.peek() {
        if t.tok == Tok::Sep {
            p.pos += 1;
            continue;
        }
        statements.push(p.statement()?);
    }
    Ok(BenchProgram { statements })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn element(stmt: &Statement) -> ElementOp {
        match stmt.kind {
            StatementKind::Element(e) => e,
            StatementKind::Mzim { .. } => panic!("expected element"),
        }
    }

    #[test]
    fn preparation_chain() {
        let prog = parse("swp; bs; hwp@0 on arm0; hwp@-45 on arm1").unwrap();
        assert_eq!(prog.len(), 4);
        assert_eq!(element(&prog.statements[2]), ElementOp::new(ElementKind::Hwp, Some(0.0), Some(Arm::Arm0)));
        assert_eq!(element(&prog.statements[3]), ElementOp::new(ElementKind::Hwp, Some(-45.0), Some(Arm::Arm1)));
        assert_eq!((prog.statements[3].line, prog.statements[3].column), (1, 25));
    }

    #[test]
    fn empty_and_comment_only_sources() {
        assert!(parse("").unwrap().is_empty());
        assert!(parse("# nothing here\n\n  ;;\n").unwrap().is_empty());
    }

    #[test]
    fn missing_angle_is_a_parameter_error() {
        let err = parse("hwp on arm0").unwrap_err();
        assert_eq!(err.kind, DiagnosticKind::Parameter);
        assert_eq!((err.line, err.column), (1, 1));
    }

    #[test]
    fn mzim_macro_and_expressions() {
        let prog = parse("mzim(phi=pi/2)\nps@phi=-2*pi on arm0 # comment\ndp@22.5").unwrap();
        assert_eq!(prog.statements[0].kind, StatementKind::Mzim { phi: PI / 2.0 });
        assert_eq!(element(&prog.statements[1]).param, Some(-2.0 * PI));
        assert_eq!(element(&prog.statements[2]), ElementOp::new(ElementKind::Dp, Some(22.5), None));
        assert_eq!(prog.statements[2].line, 3);
        assert!(parse("mzim(phi=1e-3)").is_ok());
    }

    #[test]
    fn diagnostics_carry_positions() {
        let err = parse("bs\n  laser").unwrap_err();
        assert_eq!((err.kind, err.line, err.column), (DiagnosticKind::UnknownElement, 2, 3));

        let err = parse("bs; hwp@10 on arm2").unwrap_err();
        assert_eq!((err.kind, err.line, err.column), (DiagnosticKind::UndeclaredArm, 1, 15));

        let err = parse("hwp@1$").unwrap_err();
        assert_eq!((err.kind, err.column), (DiagnosticKind::Lexical, 6));

        let err = parse("bs@10").unwrap_err();
        assert_eq!(err.kind, DiagnosticKind::Parameter);

        let err = parse("mzim").unwrap_err();
        assert_eq!(err.kind, DiagnosticKind::Parameter);

        let err = parse("block").unwrap_err();
        assert_eq!(err.kind, DiagnosticKind::Parameter);

        let err = parse("hwp@10 arm0").unwrap_err();
        assert_eq!((err.kind, err.column), (DiagnosticKind::Syntax, 8));

        let err = parse("ps@0.3").unwrap_err();
        assert_eq!(err.kind, DiagnosticKind::Parameter);
    }
}
