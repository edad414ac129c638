//! Indentation-sensitive tokenizer.
//!
//! Blocks are delimited by leading spaces. A logical line ends at a newline
//! outside of brackets; a line whose first word is `requires`, `ensures` or
//! `where` continues the previous logical line regardless of indentation.

use num_bigint::BigInt;

use super::ast::Span;
use super::SyntaxError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    Int(BigInt),

    // keywords
    Function,
    Method,
    Type,
    Is,
    Where,
    Requires,
    Ensures,
    Return,
    If,
    Else,
    While,
    Assert,
    IntType,
    BoolType,
    Null,
    True,
    False,
    All,
    Some,
    In,
    New,
    Skip,
    Break,
    Continue,

    // punctuation
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Colon,
    Semicolon,
    Dot,
    DotDot,
    Ellipsis,
    Bar,
    BarBar,
    Amp,
    AmpAmp,
    Star,
    Plus,
    Minus,
    Slash,
    Percent,
    EqEq,
    NotEq,
    Lt,
    LtEq,
    Gt,
    GtEq,
    Bang,
    Arrow,
    Assign,
    Implies,

    Newline,
    Indent,
    Dedent,
    Eof,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Ident(name) => format!("identifier `{name}`"),
            TokenKind::Int(v) => format!("integer `{v}`"),
            TokenKind::Newline => "end of line".into(),
            TokenKind::Indent => "indent".into(),
            TokenKind::Dedent => "dedent".into(),
            TokenKind::Eof => "end of file".into(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        use TokenKind::*;
        match self {
            Function => "function",
            Method => "method",
            Type => "type",
            Is => "is",
            Where => "where",
            Requires => "requires",
            Ensures => "ensures",
            Return => "return",
            If => "if",
            Else => "else",
            While => "while",
            Assert => "assert",
            IntType => "int",
            BoolType => "bool",
            Null => "null",
            True => "true",
            False => "false",
            All => "all",
            Some => "some",
            In => "in",
            New => "new",
            Skip => "skip",
            Break => "break",
            Continue => "continue",
            LParen => "(",
            RParen => ")",
            LBracket => "[",
            RBracket => "]",
            LBrace => "{",
            RBrace => "}",
            Comma => ",",
            Colon => ":",
            Semicolon => ";",
            Dot => ".",
            DotDot => "..",
            Ellipsis => "...",
            Bar => "|",
            BarBar => "||",
            Amp => "&",
            AmpAmp => "&&",
            Star => "*",
            Plus => "+",
            Minus => "-",
            Slash => "/",
            Percent => "%",
            EqEq => "==",
            NotEq => "!=",
            Lt => "<",
            LtEq => "<=",
            Gt => ">",
            GtEq => ">=",
            Bang => "!",
            Arrow => "->",
            Assign => "=",
            Implies => "==>",
            Ident(_) | Int(_) | Newline | Indent | Dedent | Eof => "",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

fn keyword(word: &str) -> Option<TokenKind> {
    use TokenKind::*;
    Option::Some(match word {
        "function" => Function,
        "method" => Method,
        "type" => Type,
        "is" => Is,
        "where" => Where,
        "requires" => Requires,
        "ensures" => Ensures,
        "return" => Return,
        "if" => If,
        "else" => Else,
        "while" => While,
        "assert" => Assert,
        "int" => IntType,
        "bool" => BoolType,
        "null" => Null,
        "true" => True,
        "false" => False,
        "all" => All,
        "some" => TokenKind::Some,
        "in" => In,
        "new" => New,
        "skip" => Skip,
        "break" => Break,
        "continue" => Continue,
        _ => return None,
    })
}

const CONTINUATION_WORDS: [&str; 3] = ["requires", "ensures", "where"];

const SYMBOLS: &[(&str, TokenKind)] = &[
    ("==>", TokenKind::Implies),
    ("...", TokenKind::Ellipsis),
    ("..", TokenKind::DotDot),
    ("||", TokenKind::BarBar),
    ("&&", TokenKind::AmpAmp),
    ("==", TokenKind::EqEq),
    ("!=", TokenKind::NotEq),
    ("<=", TokenKind::LtEq),
    (">=", TokenKind::GtEq),
    ("->", TokenKind::Arrow),
    ("(", TokenKind::LParen),
    (")", TokenKind::RParen),
    ("[", TokenKind::LBracket),
    ("]", TokenKind::RBracket),
    ("{", TokenKind::LBrace),
    ("}", TokenKind::RBrace),
    (",", TokenKind::Comma),
    (":", TokenKind::Colon),
    (";", TokenKind::Semicolon),
    (".", TokenKind::Dot),
    ("|", TokenKind::Bar),
    ("&", TokenKind::Amp),
    ("*", TokenKind::Star),
    ("+", TokenKind::Plus),
    ("-", TokenKind::Minus),
    ("/", TokenKind::Slash),
    ("%", TokenKind::Percent),
    ("<", TokenKind::Lt),
    (">", TokenKind::Gt),
    ("!", TokenKind::Bang),
    ("=", TokenKind::Assign),
];

struct Lexer {
    tokens: Vec<Token>,
    indents: Vec<usize>,
    depth: usize,
    line_has_tokens: bool,
    /// Zero-width position just after the most recent token.
    after_last: Span,
}

/// Splits `text` into tokens, synthesising `Newline`, `Indent` and `Dedent`
/// from layout. The stream always ends with `Eof`.
pub fn tokenize(text: &str) -> Result<Vec<Token>, SyntaxError> {
    let mut lx = Lexer {
        tokens: Vec::new(),
        indents: vec![0],
        depth: 0,
        line_has_tokens: false,
        after_last: Span::new(0, 1, 1, 1),
    };
    let mut offset = 0;
    for (idx, raw) in text.split_inclusive('\n').enumerate() {
        lx.line(idx + 1, offset, raw)?;
        offset += raw.len();
    }
    let end = Span::new(text.len(), text.len() + 1, text.split('\n').count(), 1);
    if lx.line_has_tokens {
        lx.push(TokenKind::Newline, lx.after_last);
    }
    while lx.indents.len() > 1 {
        lx.indents.pop();
        lx.push(TokenKind::Dedent, end);
    }
    lx.push(TokenKind::Eof, end);
    Ok(lx.tokens)
}

impl Lexer {
    fn push(&mut self, kind: TokenKind, span: Span) {
        self.tokens.push(Token { kind, span });
    }

    fn line(&mut self, line_no: usize, offset: usize, raw: &str) -> Result<(), SyntaxError> {
        let line = raw.trim_end_matches(['\n', '\r']);
        let bytes = line.as_bytes();
        let mut pos = 0;
        while pos < bytes.len() && (bytes[pos] == b' ' || bytes[pos] == b'\t') {
            pos += 1;
        }
        let rest = &line[pos..];
        if rest.is_empty() || rest.starts_with("//") {
            return Ok(());
        }
        if self.depth == 0 {
            if let Some(tab) = line[..pos].find('\t') {
                return Err(SyntaxError::new(
                    "tab character in indentation",
                    Span::new(offset + tab, offset + tab + 1, line_no, tab + 1),
                ));
            }
            let first_word: String = rest
                .chars()
                .take_while(|c| c.is_ascii_alphanumeric() || *c == '_')
                .collect();
            if !CONTINUATION_WORDS.contains(&first_word.as_str()) {
                self.layout(
                    pos,
                    Span::new(offset + pos, offset + pos + 1, line_no, pos + 1),
                )?;
            }
        }
        self.scan(line_no, offset, line, pos)
    }

    fn layout(&mut self, width: usize, span: Span) -> Result<(), SyntaxError> {
        if self.line_has_tokens {
            self.push(TokenKind::Newline, self.after_last);
            self.line_has_tokens = false;
        }
        let current = *self.indents.last().unwrap();
        if width > current {
            self.indents.push(width);
            self.push(TokenKind::Indent, span);
        } else if width < current {
            while *self.indents.last().unwrap() > width {
                self.indents.pop();
                self.push(TokenKind::Dedent, span);
            }
            if *self.indents.last().unwrap() != width {
                return Err(SyntaxError::new(
                    "inconsistent dedent: indentation matches no enclosing block",
                    span,
                ));
            }
        }
        Ok(())
    }

    fn scan(
        &mut self,
        line_no: usize,
        offset: usize,
        line: &str,
        mut pos: usize,
    ) -> Result<(), SyntaxError> {
        let bytes = line.as_bytes();
        while pos < bytes.len() {
            let c = bytes[pos];
            if c == b' ' || c == b'\t' || c == b'\r' {
                pos += 1;
                continue;
            }
            if line[pos..].starts_with("//") {
                break;
            }
            let start = pos;
            let kind = if c.is_ascii_digit() {
                while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                    pos += 1;
                }
                TokenKind::Int(line[start..pos].parse().expect("digits"))
            } else if c.is_ascii_alphabetic() || c == b'_' {
                while pos < bytes.len()
                    && (bytes[pos].is_ascii_alphanumeric() || bytes[pos] == b'_')
                {
                    pos += 1;
                }
                let word = &line[start..pos];
                keyword(word).unwrap_or_else(|| TokenKind::Ident(word.to_string()))
            } else if let Some((sym, kind)) =
                SYMBOLS.iter().find(|(s, _)| line[pos..].starts_with(s))
            {
                pos += sym.len();
                kind.clone()
            } else {
                let ch = line[pos..].chars().next().unwrap();
                return Err(SyntaxError::new(
                    format!("unexpected character `{ch}`"),
                    Span::new(offset + pos, offset + pos + ch.len_utf8(), line_no, pos + 1),
                ));
            };
            match kind {
                TokenKind::LParen | TokenKind::LBracket | TokenKind::LBrace => self.depth += 1,
                TokenKind::RParen | TokenKind::RBracket | TokenKind::RBrace => {
                    self.depth = self.depth.saturating_sub(1)
                }
                _ => {}
            }
            self.push(
                kind,
                Span::new(offset + start, offset + pos, line_no, start + 1),
            );
            self.after_last = Span::new(offset + pos, offset + pos + 1, line_no, pos + 1);
            self.line_has_tokens = true;
        }
        Ok(())
    }
}
