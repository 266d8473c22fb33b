use std::fmt;

use super::ast::Span;
use super::ScriptError;

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Ident(String),
    Int(i64),
    Float(f64),
    Str(String),
    /// A `///` line, with the leading slashes and one optional space removed.
    Doc(String),

    // keywords
    Fn,
    Let,
    For,
    In,
    If,
    Else,
    Return,
    True,
    False,
    And,
    Or,
    Not,

    // punctuation
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Semicolon,
    Colon,
    Assign,
    Arrow,
    Dot,
    DotDot,
    Question,

    // operators
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
}

impl TokenKind {
    /// Pure punctuation: grouping, separators and assignment. These carry no
    /// degrees of freedom.
    pub fn is_punctuation(&self) -> bool {
        matches!(
            self,
            TokenKind::LParen
                | TokenKind::RParen
                | TokenKind::LBracket
                | TokenKind::RBracket
                | TokenKind::LBrace
                | TokenKind::RBrace
                | TokenKind::Comma
                | TokenKind::Semicolon
                | TokenKind::Colon
                | TokenKind::Assign
        )
    }

    /// Whether a value can end at this token; decides if a following `-` is
    /// binary subtraction or the sign of a numeric literal.
    fn ends_operand(&self) -> bool {
        matches!(
            self,
            TokenKind::Ident(_)
                | TokenKind::Int(_)
                | TokenKind::Float(_)
                | TokenKind::Str(_)
                | TokenKind::True
                | TokenKind::False
                | TokenKind::RParen
                | TokenKind::RBracket
                | TokenKind::Question
        )
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TokenKind::Ident(s) => return write!(f, "identifier `{s}`"),
            TokenKind::Int(v) => return write!(f, "integer `{v}`"),
            TokenKind::Float(v) => return write!(f, "float `{v}`"),
            TokenKind::Str(s) => return write!(f, "string {s:?}"),
            TokenKind::Doc(_) => "doc comment",
            TokenKind::Fn => "`fn`",
            TokenKind::Let => "`let`",
            TokenKind::For => "`for`",
            TokenKind::In => "`in`",
            TokenKind::If => "`if`",
            TokenKind::Else => "`else`",
            TokenKind::Return => "`return`",
            TokenKind::True => "`true`",
            TokenKind::False => "`false`",
            TokenKind::And => "`and`",
            TokenKind::Or => "`or`",
            TokenKind::Not => "`not`",
            TokenKind::LParen => "`(`",
            TokenKind::RParen => "`)`",
            TokenKind::LBracket => "`[`",
            TokenKind::RBracket => "`]`",
            TokenKind::LBrace => "`{`",
            TokenKind::RBrace => "`}`",
            TokenKind::Comma => "`,`",
            TokenKind::Semicolon => "`;`",
            TokenKind::Colon => "`:`",
            TokenKind::Assign => "`=`",
            TokenKind::Arrow => "`->`",
            TokenKind::Dot => "`.`",
            TokenKind::DotDot => "`..`",
            TokenKind::Question => "`?`",
            TokenKind::Plus => "`+`",
            TokenKind::Minus => "`-`",
            TokenKind::Star => "`*`",
            TokenKind::Slash => "`/`",
            TokenKind::Percent => "`%`",
            TokenKind::EqEq => "`==`",
            TokenKind::NotEq => "`!=`",
            TokenKind::Lt => "`<`",
            TokenKind::Le => "`<=`",
            TokenKind::Gt => "`>`",
            TokenKind::Ge => "`>=`",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

fn keyword(word: &str) -> Option<TokenKind> {
    Some(match word {
        "fn" => TokenKind::Fn,
        "let" => TokenKind::Let,
        "for" => TokenKind::For,
        "in" => TokenKind::In,
        "if" => TokenKind::If,
        "else" => TokenKind::Else,
        "return" => TokenKind::Return,
        "true" => TokenKind::True,
        "false" => TokenKind::False,
        "and" => TokenKind::And,
        "or" => TokenKind::Or,
        "not" => TokenKind::Not,
        _ => return None,
    })
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    col: u32,
}

impl Lexer {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.chars.get(self.pos + n).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn span(&self) -> Span {
        Span::new(self.line, self.col)
    }

    fn err(&self, span: Span, msg: impl Into<String>) -> ScriptError {
        ScriptError::Syntax {
            line: span.line,
            col: span.col,
            msg: msg.into(),
        }
    }

    fn number(&mut self, negative: bool, start: Span) -> Result<TokenKind, ScriptError> {
        let mut text = String::new();
        if negative {
            text.push('-');
        }
        let mut is_float = false;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() {
                text.push(c);
                self.bump();
            } else if c == '.' && !is_float && self.peek_at(1).is_some_and(|d| d.is_ascii_digit()) {
                is_float = true;
                text.push(c);
                self.bump();
            } else if (c == 'e' || c == 'E')
                && (self.peek_at(1).is_some_and(|d| d.is_ascii_digit())
                    || (matches!(self.peek_at(1), Some('-') | Some('+'))
                        && self.peek_at(2).is_some_and(|d| d.is_ascii_digit())))
            {
                is_float = true;
                text.push(c);
                self.bump();
                if matches!(self.peek(), Some('-') | Some('+')) {
                    text.push(self.bump().unwrap());
                }
            } else {
                break;
            }
        }
        if is_float {
            let v: f64 = text
                .parse()
                .map_err(|_| self.err(start, format!("invalid float literal `{text}`")))?;
            if !v.is_finite() {
                return Err(self.err(start, format!("float literal out of range `{text}`")));
            }
            Ok(TokenKind::Float(v))
        } else {
            text.parse::<i64>()
                .map(TokenKind::Int)
                .map_err(|_| self.err(start, format!("integer literal out of range `{text}`")))
        }
    }

    fn string(&mut self, start: Span) -> Result<TokenKind, ScriptError> {
        let mut out = String::new();
        loop {
            match self.bump() {
                None | Some('\n') => return Err(self.err(start, "unterminated string literal")),
                Some('"') => return Ok(TokenKind::Str(out)),
                Some('\\') => match self.bump() {
                    Some('n') => out.push('\n'),
                    Some('t') => out.push('\t'),
                    Some('\\') => out.push('\\'),
                    Some('"') => out.push('"'),
                    Some(c) => return Err(self.err(start, format!("unknown escape `\\{c}`"))),
                    None => return Err(self.err(start, "unterminated string literal")),
                },
                Some(c) => out.push(c),
            }
        }
    }
}

/// Tokenize ShapeScript source. `//` comments are dropped; `///` lines become
/// [`TokenKind::Doc`] tokens.
pub fn lex(src: &str) -> Result<Vec<Token>, ScriptError> {
    let mut lx = Lexer {
        chars: src.chars().collect(),
        pos: 0,
        line: 1,
        col: 1,
    };
    let mut out: Vec<Token> = Vec::new();
    while let Some(c) = lx.peek() {
        let start = lx.span();
        if c.is_whitespace() {
            lx.bump();
            continue;
        }
        if c == '/' && lx.peek_at(1) == Some('/') {
            let is_doc = lx.peek_at(2) == Some('/') && lx.peek_at(3) != Some('/');
            let mut text = String::new();
            while let Some(c) = lx.peek() {
                if c == '\n' {
                    break;
                }
                text.push(c);
                lx.bump();
            }
            if is_doc {
                let body = &text[3..];
                let body = body.strip_prefix(' ').unwrap_or(body);
                out.push(Token {
                    kind: TokenKind::Doc(body.trim_end().to_string()),
                    span: start,
                });
            }
            continue;
        }
        let prev_ends_operand = out.last().is_some_and(|t| t.kind.ends_operand());
        let kind = if c.is_ascii_digit() {
            lx.number(false, start)?
        } else if c == '-'
            && !prev_ends_operand
            && (lx.peek_at(1).is_some_and(|d| d.is_ascii_digit())
                || (lx.peek_at(1) == Some('.')
                    && lx.peek_at(2).is_some_and(|d| d.is_ascii_digit())))
        {
            lx.bump();
            lx.number(true, start)?
        } else if c.is_alphabetic() || c == '_' {
            let mut word = String::new();
            while let Some(c) = lx.peek() {
                if c.is_alphanumeric() || c == '_' {
                    word.push(c);
                    lx.bump();
                } else {
                    break;
                }
            }
            keyword(&word).unwrap_or(TokenKind::Ident(word))
        } else if c == '"' {
            lx.bump();
            lx.string(start)?
        } else {
            lx.bump();
            let two = |lx: &mut Lexer, next: char, yes: TokenKind, no: TokenKind| {
                if lx.peek() == Some(next) {
                    lx.bump();
                    yes
                } else {
                    no
                }
            };
            match c {
                '(' => TokenKind::LParen,
                ')' => TokenKind::RParen,
                '[' => TokenKind::LBracket,
                ']' => TokenKind::RBracket,
                '{' => TokenKind::LBrace,
                '}' => TokenKind::RBrace,
                ',' => TokenKind::Comma,
                ';' => TokenKind::Semicolon,
                ':' => TokenKind::Colon,
                '?' => TokenKind::Question,
                '+' => TokenKind::Plus,
                '*' => TokenKind::Star,
                '/' => TokenKind::Slash,
                '%' => TokenKind::Percent,
                '-' => two(&mut lx, '>', TokenKind::Arrow, TokenKind::Minus),
                '.' => two(&mut lx, '.', TokenKind::DotDot, TokenKind::Dot),
                '=' => two(&mut lx, '=', TokenKind::EqEq, TokenKind::Assign),
                '<' => two(&mut lx, '=', TokenKind::Le, TokenKind::Lt),
                '>' => two(&mut lx, '=', TokenKind::Ge, TokenKind::Gt),
                '!' if lx.peek() == Some('=') => {
                    lx.bump();
                    TokenKind::NotEq
                }
                other => return Err(lx.err(start, format!("unexpected character `{other}`"))),
            }
        };
        out.push(Token { kind, span: start });
    }
    Ok(out)
}
