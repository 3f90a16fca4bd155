use super::ast::Pos;
use super::FrontendError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Num(f64),
    Str(String),
    Regex { pattern: String, flags: String },
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
    /// Position just past the last character of the token.
    pub end: Pos,
    /// A line terminator occurs between the previous token and this one.
    pub newline_before: bool,
}

// Longest first, so that greedy matching picks `>>>=` before `>>`.
const PUNCTUATORS: &[&str] = &[
    ">>>=", "...", "===", "!==", "**=", ">>>", "<<=", ">>=", "=>", "==", "!=", "<=", ">=", "&&",
    "||", "++", "--", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>", "**", "{", "}",
    "(", ")", "[", "]", ";", ",", "<", ">", "+", "-", "*", "/", "%", "&", "|", "^", "!", "~",
    "?", ":", "=", ".",
];

const REGEX_AFTER_KEYWORDS: &[&str] = &[
    "return",
    "typeof",
    "instanceof",
    "in",
    "new",
    "delete",
    "void",
    "throw",
    "case",
    "do",
    "else",
];

struct Lexer<'a> {
    file: &'a str,
    chars: Vec<char>,
    i: usize,
    line: u32,
    column: u32,
}

fn is_id_start(c: char) -> bool {
    c == '$' || c == '_' || c.is_alphabetic()
}

fn is_id_part(c: char) -> bool {
    c == '$' || c == '_' || c.is_alphanumeric() || c == '\u{200c}' || c == '\u{200d}'
}

fn is_line_terminator(c: char) -> bool {
    matches!(c, '\n' | '\r' | '\u{2028}' | '\u{2029}')
}

impl<'a> Lexer<'a> {
    fn pos(&self) -> Pos {
        Pos::new(self.line, self.column)
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.i).copied()
    }

    fn peek_at(&self, k: usize) -> Option<char> {
        self.chars.get(self.i + k).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.i).copied()?;
        self.i += 1;
        if c == '\r' && self.peek() == Some('\n') {
            self.column += 1;
        } else if is_line_terminator(c) {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn error(&self, pos: Pos, message: impl Into<String>) -> FrontendError {
        FrontendError::Parse {
            file: self.file.to_string(),
            pos,
            message: message.into(),
        }
    }

    /// Skips whitespace and comments; reports whether a line break was crossed.
    fn skip_trivia(&mut self) -> Result<bool, FrontendError> {
        let mut newline = false;
        while let Some(c) = self.peek() {
            if is_line_terminator(c) {
                newline = true;
                self.bump();
            } else if c.is_whitespace() || c == '\u{feff}' {
                self.bump();
            } else if c == '/' && self.peek_at(1) == Some('/') {
                while let Some(c) = self.peek() {
                    if is_line_terminator(c) {
                        break;
                    }
                    self.bump();
                }
            } else if c == '/' && self.peek_at(1) == Some('*') {
                let start = self.pos();
                self.bump();
                self.bump();
                loop {
                    match self.bump() {
                        Some('*') if self.peek() == Some('/') => {
                            self.bump();
                            break;
                        }
                        Some(c) if is_line_terminator(c) => newline = true,
                        Some(_) => {}
                        None => return Err(self.error(start, "unterminated comment")),
                    }
                }
            } else {
                break;
            }
        }
        Ok(newline)
    }

    fn number(&mut self, start: Pos) -> Result<Tok, FrontendError> {
        let begin = self.i;
        if self.peek() == Some('0') && matches!(self.peek_at(1), Some('x' | 'X')) {
            self.bump();
            self.bump();
            let digits_start = self.i;
            while self.peek().is_some_and(|c| c.is_ascii_hexdigit()) {
                self.bump();
            }
            let digits: String = self.chars[digits_start..self.i].iter().collect();
            if digits.is_empty() {
                return Err(self.error(start, "malformed hexadecimal literal"));
            }
            let value = u64::from_str_radix(&digits, 16)
                .map(|v| v as f64)
                .unwrap_or(f64::INFINITY);
            return self.finish_number(start, value);
        }
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
        }
        if self.peek() == Some('.') {
            self.bump();
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.bump();
            }
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            self.bump();
            if matches!(self.peek(), Some('+' | '-')) {
                self.bump();
            }
            if !self.peek().is_some_and(|c| c.is_ascii_digit()) {
                return Err(self.error(start, "malformed exponent"));
            }
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.bump();
            }
        }
        let text: String = self.chars[begin..self.i].iter().collect();
        let value = if text.len() > 1
            && text.starts_with('0')
            && text.bytes().all(|b| (b'0'..=b'7').contains(&b))
        {
            // legacy octal
            u64::from_str_radix(&text[1..], 8).map(|v| v as f64).unwrap_or(0.0)
        } else {
            text.parse::<f64>()
                .map_err(|_| self.error(start, format!("malformed number `{text}`")))?
        };
        self.finish_number(start, value)
    }

    fn finish_number(&self, start: Pos, value: f64) -> Result<Tok, FrontendError> {
        if self.peek().is_some_and(is_id_start) {
            return Err(self.error(start, "identifier starts immediately after numeric literal"));
        }
        Ok(Tok::Num(value))
    }

    fn hex_escape(&mut self, digits: usize, start: Pos) -> Result<char, FrontendError> {
        let mut value = 0u32;
        for _ in 0..digits {
            let d = self
                .bump()
                .and_then(|c| c.to_digit(16))
                .ok_or_else(|| self.error(start, "malformed escape sequence"))?;
            value = value * 16 + d;
        }
        Ok(char::from_u32(value).unwrap_or('\u{fffd}'))
    }

    fn string(&mut self, quote: char, start: Pos) -> Result<Tok, FrontendError> {
        self.bump();
        let mut out = String::new();
        loop {
            let c = match self.bump() {
                None => return Err(self.error(start, "unterminated string literal")),
                Some(c) => c,
            };
            if c == quote {
                break;
            }
            if is_line_terminator(c) {
                return Err(self.error(start, "unterminated string literal"));
            }
            if c != '\\' {
                out.push(c);
                continue;
            }
            let esc = self
                .bump()
                .ok_or_else(|| self.error(start, "unterminated string literal"))?;
            match esc {
                'n' => out.push('\n'),
                't' => out.push('\t'),
                'r' => out.push('\r'),
                'b' => out.push('\u{8}'),
                'f' => out.push('\u{c}'),
                'v' => out.push('\u{b}'),
                '0' if !self.peek().is_some_and(|c| c.is_ascii_digit()) => out.push('\0'),
                'x' => out.push(self.hex_escape(2, start)?),
                'u' => out.push(self.hex_escape(4, start)?),
                '\r' => {
                    if self.peek() == Some('\n') {
                        self.bump();
                    }
                }
                c if is_line_terminator(c) => {}
                c => out.push(c),
            }
        }
        Ok(Tok::Str(out))
    }

    fn regex(&mut self, start: Pos) -> Result<Tok, FrontendError> {
        self.bump();
        let mut pattern = String::new();
        let mut in_class = false;
        loop {
            let c = match self.bump() {
                Some(c) if !is_line_terminator(c) => c,
                _ => return Err(self.error(start, "unterminated regular expression")),
            };
            match c {
                '\\' => {
                    pattern.push(c);
                    match self.bump() {
                        Some(n) if !is_line_terminator(n) => pattern.push(n),
                        _ => return Err(self.error(start, "unterminated regular expression")),
                    }
                }
                '[' => {
                    in_class = true;
                    pattern.push(c);
                }
                ']' => {
                    in_class = false;
                    pattern.push(c);
                }
                '/' if !in_class => break,
                c => pattern.push(c),
            }
        }
        let mut flags = String::new();
        while let Some(c) = self.peek().filter(|c| is_id_part(*c)) {
            flags.push(c);
            self.bump();
        }
        Ok(Tok::Regex { pattern, flags })
    }

    fn punct(&mut self, start: Pos) -> Result<Tok, FrontendError> {
        for p in PUNCTUATORS {
            if p.chars().enumerate().all(|(k, pc)| self.peek_at(k) == Some(pc)) {
                for _ in 0..p.len() {
                    self.bump();
                }
                return Ok(Tok::Punct(p));
            }
        }
        let c = self.peek().unwrap_or(' ');
        if c == '`' {
            return Err(FrontendError::Unsupported {
                file: self.file.to_string(),
                pos: start,
                construct: "template literal".into(),
            });
        }
        Err(self.error(start, format!("unexpected character `{c}`")))
    }
}

fn regex_allowed(prev: Option<&Tok>) -> bool {
    match prev {
        None => true,
        Some(Tok::Num(_)) | Some(Tok::Str(_)) | Some(Tok::Regex { .. }) => false,
        Some(Tok::Ident(name)) => REGEX_AFTER_KEYWORDS.contains(&name.as_str()),
        Some(Tok::Punct(p)) => !matches!(*p, ")" | "]" | "}" | "++" | "--"),
        Some(Tok::Eof) => false,
    }
}

pub fn tokenize(source: &str, file: &str) -> Result<Vec<Token>, FrontendError> {
    let mut lx = Lexer {
        file,
        chars: source.chars().collect(),
        i: 0,
        line: 1,
        column: 1,
    };
    let mut tokens: Vec<Token> = Vec::new();
    loop {
        let newline_before = lx.skip_trivia()?;
        let pos = lx.pos();
        let Some(c) = lx.peek() else {
            tokens.push(Token {
                tok: Tok::Eof,
                pos,
                end: pos,
                newline_before,
            });
            return Ok(tokens);
        };
        let tok = if is_id_start(c) || c == '\\' {
            if c == '\\' {
                return Err(lx.error(pos, "unicode escapes in identifiers are not supported"));
            }
            let begin = lx.i;
            while lx.peek().is_some_and(is_id_part) {
                lx.bump();
            }
            Tok::Ident(lx.chars[begin..lx.i].iter().collect())
        } else if c.is_ascii_digit() || (c == '.' && lx.peek_at(1).is_some_and(|d| d.is_ascii_digit())) {
            lx.number(pos)?
        } else if c == '"' || c == '\'' {
            lx.string(c, pos)?
        } else if c == '/' && regex_allowed(tokens.last().map(|t| &t.tok)) {
            lx.regex(pos)?
        } else {
            lx.punct(pos)?
        };
        tokens.push(Token {
            tok,
            pos,
            end: lx.pos(),
            newline_before,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        tokenize(src, "t.js").unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn positions_are_one_based() {
        let t = tokenize("function f(){}\n  f();", "t.js").unwrap();
        assert_eq!(t[0].pos, Pos::new(1, 1));
        assert_eq!(t[1].pos, Pos::new(1, 10));
        assert_eq!(t[6].pos, Pos::new(2, 3));
        assert!(t[6].newline_before);
        assert_eq!(t[5].end, Pos::new(1, 15));
    }

    #[test]
    fn regex_versus_division() {
        assert_eq!(
            toks("a / b"),
            vec![
                Tok::Ident("a".into()),
                Tok::Punct("/"),
                Tok::Ident("b".into()),
                Tok::Eof
            ]
        );
        assert_eq!(
            toks("x = /a[/]b/g"),
            vec![
                Tok::Ident("x".into()),
                Tok::Punct("="),
                Tok::Regex {
                    pattern: "a[/]b".into(),
                    flags: "g".into()
                },
                Tok::Eof
            ]
        );
        assert!(matches!(toks("return /x/")[1], Tok::Regex { .. }));
    }

    #[test]
    fn literals() {
        assert_eq!(toks("0x1F .5 1e3 010")[..4], [Tok::Num(31.0), Tok::Num(0.5), Tok::Num(1000.0), Tok::Num(8.0)]);
        assert_eq!(toks(r#"'a\n\x41B'"#)[0], Tok::Str("a\nAB".into()));
    }

    #[test]
    fn comments_count_as_line_breaks() {
        let t = tokenize("a /* \n */ b // c\nd", "t.js").unwrap();
        assert!(t[1].newline_before);
        assert!(t[2].newline_before);
        assert_eq!(t[2].pos, Pos::new(3, 1));
    }

    #[test]
    fn errors() {
        assert!(matches!(tokenize("'abc", "t.js"), Err(FrontendError::Parse { .. })));
        assert!(matches!(tokenize("/* x", "t.js"), Err(FrontendError::Parse { .. })));
        assert!(matches!(tokenize("`t`", "t.js"), Err(FrontendError::Unsupported { .. })));
        assert!(matches!(tokenize("3in x", "t.js"), Err(FrontendError::Parse { .. })));
    }
}
