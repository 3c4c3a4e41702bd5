use super::{ParseError, SourceSpan};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum TokenKind {
    Word(String),
    Number(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Eq,
    Amp,
    Slash,
    DotDot,
    Newline,
    Eof,
}

impl TokenKind {
    pub(crate) fn describe(&self) -> String {
        match self {
            TokenKind::Word(w) => format!("`{w}`"),
            TokenKind::Number(n) => format!("number `{n}`"),
            TokenKind::LBrace => "`{`".into(),
            TokenKind::RBrace => "`}`".into(),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
            TokenKind::Comma => "`,`".into(),
            TokenKind::Eq => "`=`".into(),
            TokenKind::Amp => "`&`".into(),
            TokenKind::Slash => "`/`".into(),
            TokenKind::DotDot => "`..`".into(),
            TokenKind::Newline => "end of line".into(),
            TokenKind::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub kind: TokenKind,
    pub span: SourceSpan,
}

fn is_word_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-'
}

/// Splits source text into tokens. Newlines inside `{}` or `()` are
/// dropped so long propositions may wrap across lines.
pub(crate) fn tokenize(source: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = source.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;
    let mut depth: usize = 0;

    while i < chars.len() {
        let c = chars[i];
        let start = SourceSpan::new(line, col, 1);
        match c {
            '\n' => {
                if depth == 0 {
                    tokens.push(Token {
                        kind: TokenKind::Newline,
                        span: start,
                    });
                }
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            ' ' | '\t' | '\r' => {}
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                    col += 1;
                }
                continue;
            }
            '{' | '(' => {
                depth += 1;
                let kind = if c == '{' { TokenKind::LBrace } else { TokenKind::LParen };
                tokens.push(Token { kind, span: start });
            }
            '}' | ')' => {
                depth = depth.saturating_sub(1);
                let kind = if c == '}' { TokenKind::RBrace } else { TokenKind::RParen };
                tokens.push(Token { kind, span: start });
            }
            ',' => tokens.push(Token {
                kind: TokenKind::Comma,
                span: start,
            }),
            '=' => tokens.push(Token {
                kind: TokenKind::Eq,
                span: start,
            }),
            '&' => tokens.push(Token {
                kind: TokenKind::Amp,
                span: start,
            }),
            '/' => tokens.push(Token {
                kind: TokenKind::Slash,
                span: start,
            }),
            '.' if chars.get(i + 1) == Some(&'.') => {
                tokens.push(Token {
                    kind: TokenKind::DotDot,
                    span: SourceSpan::new(line, col, 2),
                });
                i += 2;
                col += 2;
                continue;
            }
            c if c.is_ascii_digit() => {
                let begin = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                // A fractional part needs a digit after the dot; `0..3` is a range.
                if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < chars.len() && is_word_start(chars[i]) {
                    let mut end = i;
                    while end < chars.len() && is_word_char(chars[end]) {
                        end += 1;
                    }
                    return Err(ParseError::new(
                        SourceSpan::new(line, col, end - begin),
                        "malformed number",
                        vec![],
                    ));
                }
                let text: String = chars[begin..i].iter().collect();
                let len = i - begin;
                tokens.push(Token {
                    kind: TokenKind::Number(text),
                    span: SourceSpan::new(line, col, len),
                });
                col += len;
                continue;
            }
            c if is_word_start(c) => {
                let begin = i;
                while i < chars.len() && is_word_char(chars[i]) {
                    i += 1;
                }
                let text: String = chars[begin..i].iter().collect();
                let len = i - begin;
                tokens.push(Token {
                    kind: TokenKind::Word(text),
                    span: SourceSpan::new(line, col, len),
                });
                col += len;
                continue;
            }
            other => {
                return Err(ParseError::new(
                    start,
                    format!("unexpected character {other:?}"),
                    vec![],
                ));
            }
        }
        i += 1;
        col += 1;
    }
    tokens.push(Token {
        kind: TokenKind::Eof,
        span: SourceSpan::new(line, col, 0),
    });
    Ok(tokens)
}
