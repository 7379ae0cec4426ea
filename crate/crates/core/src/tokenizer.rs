//! Lexing of math-mode LaTeX into one-command-per-token sequences.
//!
//! Control sequences are maximal alphabetic runs after a backslash. A
//! backslash followed by any other single character is a one-character
//! command (`\,`, `\{`, `\|`). `\begin{name}` and `\end{name}` are fused
//! into a single token each. `%` comments run to the end of the line and are
//! dropped before anything else sees them.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default cap on input length, in characters.
pub const DEFAULT_MAX_INPUT_CHARS: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TokenizeError {
    #[error("trailing lone backslash at byte {0}")]
    UnterminatedCommand(usize),
    #[error("unterminated environment name after `{0}`")]
    UnterminatedEnvironmentName(String),
    #[error("input has {len} characters, cap is {cap}")]
    InputTooLong { len: usize, cap: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TokenKind {
    Command,
    Letter,
    Digit,
    GroupOpen,
    GroupClose,
    Subscript,
    Superscript,
    AlignTab,
    RowBreak,
    EnvBegin,
    EnvEnd,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Token {
    text: String,
    kind: TokenKind,
}

impl Token {
    /// Lexes `text` and returns its token if it is exactly one token.
    pub fn parse_single(text: &str) -> Option<Token> {
        let mut seq = tokenize(text).ok()?.tokens;
        if seq.len() == 1 {
            seq.pop()
        } else {
            None
        }
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn kind(&self) -> TokenKind {
        self.kind
    }

    pub fn is(&self, text: &str) -> bool {
        self.text == text
    }

    /// Environment name of an `EnvBegin`/`EnvEnd` token.
    pub fn env_name(&self) -> Option<&str> {
        match self.kind {
            TokenKind::EnvBegin => self.text.strip_prefix("\\begin{")?.strip_suffix('}'),
            TokenKind::EnvEnd => self.text.strip_prefix("\\end{")?.strip_suffix('}'),
            _ => None,
        }
    }

    pub(crate) fn new_unchecked(text: impl Into<String>, kind: TokenKind) -> Token {
        Token {
            text: text.into(),
            kind,
        }
    }

    pub(crate) fn env_begin(name: &str) -> Token {
        Token::new_unchecked(format!("\\begin{{{name}}}"), TokenKind::EnvBegin)
    }

    pub(crate) fn env_end(name: &str) -> Token {
        Token::new_unchecked(format!("\\end{{{name}}}"), TokenKind::EnvEnd)
    }

    pub(crate) fn open() -> Token {
        Token::new_unchecked("{", TokenKind::GroupOpen)
    }

    pub(crate) fn close() -> Token {
        Token::new_unchecked("}", TokenKind::GroupClose)
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenSeq {
    pub tokens: Vec<Token>,
    pub source: String,
}

impl TokenSeq {
    pub fn from_tokens(tokens: Vec<Token>) -> TokenSeq {
        let source = join(&tokens);
        TokenSeq { tokens, source }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn texts(&self) -> Vec<&str> {
        self.tokens.iter().map(Token::text).collect()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Token> {
        self.tokens.iter()
    }
}

impl fmt::Display for TokenSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&join(&self.tokens))
    }
}

/// Tokenizes with the default length cap.
pub fn tokenize(input: &str) -> Result<TokenSeq, TokenizeError> {
    tokenize_with_cap(input, DEFAULT_MAX_INPUT_CHARS)
}

pub fn tokenize_with_cap(input: &str, max_chars: usize) -> Result<TokenSeq, TokenizeError> {
    let len = input.chars().count();
    if len > max_chars {
        return Err(TokenizeError::InputTooLong {
            len,
            cap: max_chars,
        });
    }
    let tokens = Lexer::new(input).run()?;
    Ok(TokenSeq {
        tokens,
        source: input.to_owned(),
    })
}

/// Joins tokens with single spaces. Re-tokenizing the result yields the same
/// token list.
pub fn detokenize(seq: &TokenSeq) -> String {
    join(&seq.tokens)
}

fn join(tokens: &[Token]) -> String {
    let mut out = String::new();
    for (i, tok) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&tok.text);
    }
    out
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    out: Vec<Token>,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src,
            pos: 0,
            out: Vec::new(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn push(&mut self, text: impl Into<String>, kind: TokenKind) {
        self.out.push(Token::new_unchecked(text, kind));
    }

    fn run(mut self) -> Result<Vec<Token>, TokenizeError> {
        while let Some(c) = self.bump() {
            match c {
                '%' => self.skip_comment(),
                '\\' => self.command()?,
                '{' => self.push("{", TokenKind::GroupOpen),
                '}' => self.push("}", TokenKind::GroupClose),
                '_' => self.push("_", TokenKind::Subscript),
                '^' => self.push("^", TokenKind::Superscript),
                '&' => self.push("&", TokenKind::AlignTab),
                c if c.is_whitespace() => {}
                c if c.is_ascii_alphabetic() => self.push(c.to_string(), TokenKind::Letter),
                c if c.is_ascii_digit() => self.push(c.to_string(), TokenKind::Digit),
                c => self.push(c.to_string(), TokenKind::Other),
            }
        }
        Ok(self.out)
    }

    fn skip_comment(&mut self) {
        while let Some(c) = self.bump() {
            if c == '\n' {
                break;
            }
        }
    }

    fn command(&mut self) -> Result<(), TokenizeError> {
        let start = self.pos - 1;
        let Some(next) = self.bump() else {
            return Err(TokenizeError::UnterminatedCommand(start));
        };
        if next == '\\' {
            self.push("\\\\", TokenKind::RowBreak);
            return Ok(());
        }
        if !next.is_ascii_alphabetic() {
            // Control space in any spelling is `\ `.
            let text = if next.is_whitespace() {
                "\\ ".to_owned()
            } else {
                format!("\\{next}")
            };
            self.push(text, TokenKind::Command);
            return Ok(());
        }
        while matches!(self.peek(), Some(c) if c.is_ascii_alphabetic()) {
            self.bump();
        }
        let name = &self.src[start..self.pos];
        match name {
            "\\begin" | "\\end" => self.environment(name),
            _ => {
                let name = name.to_owned();
                self.push(name, TokenKind::Command);
                Ok(())
            }
        }
    }

    fn environment(&mut self, head: &str) -> Result<(), TokenizeError> {
        let head = head.to_owned();
        let unterminated = || TokenizeError::UnterminatedEnvironmentName(head.clone());
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.bump();
        }
        if self.bump() != Some('{') {
            return Err(unterminated());
        }
        let mut name = String::new();
        loop {
            match self.bump() {
                Some('}') => break,
                Some(c) if c.is_whitespace() => {}
                Some(c) => name.push(c),
                None => return Err(unterminated()),
            }
        }
        if name.is_empty() {
            return Err(unterminated());
        }
        let (text, kind) = if head == "\\begin" {
            (format!("\\begin{{{name}}}"), TokenKind::EnvBegin)
        } else {
            (format!("\\end{{{name}}}"), TokenKind::EnvEnd)
        };
        self.push(text, kind);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn texts(s: &str) -> Vec<String> {
        tokenize(s)
            .unwrap()
            .tokens
            .into_iter()
            .map(|t| t.text)
            .collect()
    }

    #[test]
    fn minimal_script() {
        assert_eq!(texts("a_3"), ["a", "_", "3"]);
    }

    #[test]
    fn fused_right_brace_is_split() {
        assert_eq!(texts("\\right{"), ["\\right", "{"]);
    }

    #[test]
    fn array_environment() {
        // \begin{array} | { c c } | a & b | \end{array}
        assert_eq!(
            texts("\\begin{array}{cc}a&b\\end{array}"),
            [
                "\\begin{array}",
                "{",
                "c",
                "c",
                "}",
                "a",
                "&",
                "b",
                "\\end{array}"
            ]
        );
        let seq = tokenize("\\begin {array}x\\end{ array }").unwrap();
        assert_eq!(seq.tokens[0].kind(), TokenKind::EnvBegin);
        assert_eq!(seq.tokens[0].env_name(), Some("array"));
        assert_eq!(seq.tokens[2].text(), "\\end{array}");
    }

    #[test]
    fn single_char_commands_and_row_breaks() {
        assert_eq!(
            texts("a\\,b\\!c\\{\\|\\\\d\\ e"),
            ["a", "\\,", "b", "\\!", "c", "\\{", "\\|", "\\\\", "d", "\\ ", "e"]
        );
        let seq = tokenize("\\\\").unwrap();
        assert_eq!(seq.tokens[0].kind(), TokenKind::RowBreak);
    }

    #[test]
    fn digits_are_individual_tokens() {
        assert_eq!(texts("12"), ["1", "2"]);
    }

    #[test]
    fn comments_are_stripped() {
        assert_eq!(texts("a % comment \\cite{x}\nb"), ["a", "b"]);
        assert_eq!(texts("a\\%b"), ["a", "\\%", "b"]);
    }

    #[test]
    fn non_ascii_is_other() {
        let seq = tokenize("α+é").unwrap();
        assert_eq!(seq.texts(), ["α", "+", "é"]);
        assert!(seq.iter().all(|t| t.kind() == TokenKind::Other));
    }

    #[test]
    fn errors() {
        assert_eq!(tokenize("a\\"), Err(TokenizeError::UnterminatedCommand(1)));
        assert!(matches!(
            tokenize("\\begin{array"),
            Err(TokenizeError::UnterminatedEnvironmentName(_))
        ));
        assert!(matches!(
            tokenize("\\end x"),
            Err(TokenizeError::UnterminatedEnvironmentName(_))
        ));
        assert!(matches!(
            tokenize_with_cap("abc", 2),
            Err(TokenizeError::InputTooLong { len: 3, cap: 2 })
        ));
    }

    #[test]
    fn detokenize_separates_commands_from_letters() {
        let seq = tokenize("\\alpha x").unwrap();
        assert_eq!(detokenize(&seq), "\\alpha x");
        let seq = tokenize("a_{3}").unwrap();
        assert_eq!(detokenize(&seq), "a _ { 3 }");
        assert_eq!(detokenize(&TokenSeq::default()), "");
        let geq = tokenize("\\geq1").unwrap();
        assert_eq!(tokenize(&detokenize(&geq)).unwrap().tokens, geq.tokens);
    }

    proptest! {
        #[test]
        fn round_trip(s in "[a-z0-9{}_^&\\\\ ,.;!|()+=%\n-]{0,40}") {
            if let Ok(seq) = tokenize(&s) {
                let again = tokenize(&detokenize(&seq)).unwrap();
                prop_assert_eq!(&again.tokens, &seq.tokens);
                for tok in &seq.tokens {
                    prop_assert!(!tok.text().is_empty());
                    if tok.kind() == TokenKind::Command {
                        let rest = &tok.text()[1..];
                        prop_assert!(rest.chars().count() == 1
                            || rest.chars().all(|c| c.is_ascii_alphabetic()));
                    }
                }
            }
        }
    }
}
