use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum TokenKind {
    /// Bare word: keyword or unquoted identifier. Stored as written.
    Word(String),
    /// `` `x` `` or `[x]`.
    QuotedIdent(String),
    /// Single- or double-quoted string, unescaped.
    Str(String),
    Number(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Semicolon,
    Star,
    Plus,
    Minus,
    Slash,
    Percent,
    Concat,
    Eq,
    NotEq,
    Lt,
    LtEq,
    Gt,
    GtEq,
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub kind: TokenKind,
    pub offset: usize,
}

impl Token {
    pub fn describe(&self) -> String {
        match &self.kind {
            TokenKind::Word(w) => format!("`{w}`"),
            TokenKind::QuotedIdent(w) => format!("identifier \"{w}\""),
            TokenKind::Str(s) => format!("string '{s}'"),
            TokenKind::Number(n) => format!("number {n}"),
            TokenKind::Eof => "end of input".to_string(),
            other => format!("`{}`", punct_text(other)),
        }
    }
}

pub(crate) fn punct_text(kind: &TokenKind) -> &'static str {
    match kind {
        TokenKind::LParen => "(",
        TokenKind::RParen => ")",
        TokenKind::Comma => ",",
        TokenKind::Dot => ".",
        TokenKind::Semicolon => ";",
        TokenKind::Star => "*",
        TokenKind::Plus => "+",
        TokenKind::Minus => "-",
        TokenKind::Slash => "/",
        TokenKind::Percent => "%",
        TokenKind::Concat => "||",
        TokenKind::Eq => "=",
        TokenKind::NotEq => "!=",
        TokenKind::Lt => "<",
        TokenKind::LtEq => "<=",
        TokenKind::Gt => ">",
        TokenKind::GtEq => ">=",
        _ => "",
    }
}

fn is_word_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '$'
}

pub(crate) fn tokenize(input: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let mut chars = input.char_indices().peekable();

    while let Some(&(offset, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        // `--` line comments
        if c == '-' && input[offset..].starts_with("--") {
            while let Some(&(_, c)) = chars.peek() {
                if c == '\n' {
                    break;
                }
                chars.next();
            }
            continue;
        }
        if c == '/' && input[offset..].starts_with("/*") {
            match input[offset + 2..].find("*/") {
                Some(end) => {
                    let stop = offset + 2 + end + 2;
                    while chars.peek().is_some_and(|&(i, _)| i < stop) {
                        chars.next();
                    }
                    continue;
                }
                None => {
                    return Err(ParseError::new(
                        offset,
                        "`*/` closing the comment",
                        "end of input",
                    ))
                }
            }
        }

        let kind = if is_word_start(c) {
            let mut word = String::new();
            while let Some(&(_, c)) = chars.peek() {
                if !is_word_char(c) {
                    break;
                }
                word.push(c);
                chars.next();
            }
            TokenKind::Word(word)
        } else if c.is_ascii_digit() || (c == '.' && next_is_digit(input, offset)) {
            let mut num = String::new();
            let mut seen_exp = false;
            while let Some(&(i, c)) = chars.peek() {
                let take = c.is_ascii_digit()
                    || c == '.'
                    || (!seen_exp && (c == 'e' || c == 'E') && exp_follows(input, i));
                if !take {
                    break;
                }
                if c == 'e' || c == 'E' {
                    seen_exp = true;
                    num.push(c);
                    chars.next();
                    if let Some(&(_, sign)) = chars.peek() {
                        if sign == '+' || sign == '-' {
                            num.push(sign);
                            chars.next();
                        }
                    }
                    continue;
                }
                num.push(c);
                chars.next();
            }
            TokenKind::Number(num)
        } else {
            match c {
                '\'' => TokenKind::Str(read_quoted(&mut chars, input, offset, '\'', '\'')?),
                // Spider-style double-quoted text is a string literal
                '"' => TokenKind::Str(read_quoted(&mut chars, input, offset, '"', '"')?),
                '`' => TokenKind::QuotedIdent(read_quoted(&mut chars, input, offset, '`', '`')?),
                '[' => TokenKind::QuotedIdent(read_quoted(&mut chars, input, offset, '[', ']')?),
                _ => {
                    chars.next();
                    let next = chars.peek().map(|&(_, c)| c);
                    let mut two = |kind| {
                        chars.next();
                        kind
                    };
                    match (c, next) {
                        ('(', _) => TokenKind::LParen,
                        (')', _) => TokenKind::RParen,
                        (',', _) => TokenKind::Comma,
                        ('.', _) => TokenKind::Dot,
                        (';', _) => TokenKind::Semicolon,
                        ('*', _) => TokenKind::Star,
                        ('+', _) => TokenKind::Plus,
                        ('-', _) => TokenKind::Minus,
                        ('/', _) => TokenKind::Slash,
                        ('%', _) => TokenKind::Percent,
                        ('|', Some('|')) => two(TokenKind::Concat),
                        ('=', Some('=')) => two(TokenKind::Eq),
                        ('=', _) => TokenKind::Eq,
                        ('!', Some('=')) => two(TokenKind::NotEq),
                        ('<', Some('>')) => two(TokenKind::NotEq),
                        ('<', Some('=')) => two(TokenKind::LtEq),
                        ('<', _) => TokenKind::Lt,
                        ('>', Some('=')) => two(TokenKind::GtEq),
                        ('>', _) => TokenKind::Gt,
                        _ => {
                            return Err(ParseError::new(
                                offset,
                                "a SQL token",
                                format!("character `{c}`"),
                            ))
                        }
                    }
                }
            }
        };
        tokens.push(Token { kind, offset });
    }
    tokens.push(Token {
        kind: TokenKind::Eof,
        offset: input.len(),
    });
    Ok(tokens)
}

fn next_is_digit(input: &str, offset: usize) -> bool {
    input[offset + 1..]
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_digit())
}

fn exp_follows(input: &str, offset: usize) -> bool {
    let mut rest = input[offset + 1..].chars();
    match rest.next() {
        Some(c) if c.is_ascii_digit() => true,
        Some('+') | Some('-') => rest.next().is_some_and(|c| c.is_ascii_digit()),
        _ => false,
    }
}

fn read_quoted(
    chars: &mut std::iter::Peekable<std::str::CharIndices<'_>>,
    _input: &str,
    start: usize,
    open: char,
    close: char,
) -> Result<String, ParseError> {
    let (_, first) = chars.next().expect("caller peeked the opening quote");
    debug_assert_eq!(first, open);
    let mut out = String::new();
    loop {
        match chars.next() {
            Some((_, c)) if c == close => {
                // doubled quote is an escaped quote
                if open == close && chars.peek().is_some_and(|&(_, n)| n == close) {
                    chars.next();
                    out.push(close);
                    continue;
                }
                return Ok(out);
            }
            Some((_, c)) => out.push(c),
            None => {
                return Err(ParseError::new(
                    start,
                    format!("closing `{close}`"),
                    "end of input",
                ))
            }
        }
    }
}
