//! Normalization tables and rule toggles.
//!
//! A config file is plain `key = value` lines. Table keys name files
//! resolved relative to the config file; a table given there replaces the
//! built-in default.
//!
//! ```text
//! mode = gt
//! rules = fonts, whitespace, braces, scripts, forbidden, synonyms, arrays
//! synonyms = synonyms.txt
//! math_fonts = fonts.txt
//! whitespace = whitespace.txt
//! forbidden = forbidden.txt
//! arity = arity.txt
//! max_input_chars = 20000
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::parser::{ArgSpec, CommandSpec, Mode};
use crate::tokenizer::{tokenize, Token, TokenizeError, DEFAULT_MAX_INPUT_CHARS};

const DEFAULT_SYNONYMS: &str = include_str!("../../data/synonyms.txt");
const DEFAULT_MATH_FONTS: &str = include_str!("../../data/math_fonts.txt");
const DEFAULT_WHITESPACE: &str = include_str!("../../data/whitespace.txt");
const DEFAULT_FORBIDDEN: &str = include_str!("../../data/forbidden.txt");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{table} line {line}: {reason}")]
    BadLine {
        table: String,
        line: usize,
        reason: String,
    },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{key}`: {reason}")]
    BadValue { key: String, reason: String },
    #[error("synonym target `{0}` is itself a synonym key")]
    SynonymChain(String),
    #[error("`{token}` is listed both as {first} and as {second}")]
    OverlappingSets {
        token: String,
        first: &'static str,
        second: &'static str,
    },
    #[error("synonym target `{token}` is a {set} token")]
    SynonymIntoRemovedSet { token: String, set: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    MathFonts,
    Whitespace,
    Braces,
    Scripts,
    Forbidden,
    Synonyms,
    Arrays,
}

impl Rule {
    pub const ALL: [Rule; 7] = [
        Rule::MathFonts,
        Rule::Whitespace,
        Rule::Braces,
        Rule::Scripts,
        Rule::Forbidden,
        Rule::Synonyms,
        Rule::Arrays,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rule::MathFonts => "fonts",
            Rule::Whitespace => "whitespace",
            Rule::Braces => "braces",
            Rule::Scripts => "scripts",
            Rule::Forbidden => "forbidden",
            Rule::Synonyms => "synonyms",
            Rule::Arrays => "arrays",
        }
    }

    pub fn from_name(name: &str) -> Option<Rule> {
        Rule::ALL.into_iter().find(|r| r.name() == name)
    }
}

/// Which rule families are active.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleSet(BTreeSet<Rule>);

impl RuleSet {
    pub fn all() -> RuleSet {
        RuleSet(Rule::ALL.into_iter().collect())
    }

    pub fn none() -> RuleSet {
        RuleSet(BTreeSet::new())
    }

    pub fn only(rule: Rule) -> RuleSet {
        RuleSet(BTreeSet::from([rule]))
    }

    pub fn with(mut self, rule: Rule) -> RuleSet {
        self.0.insert(rule);
        self
    }

    pub fn without(mut self, rule: Rule) -> RuleSet {
        self.0.remove(&rule);
        self
    }

    pub fn enabled(&self, rule: Rule) -> bool {
        self.0.contains(&rule)
    }
}

impl Default for RuleSet {
    fn default() -> Self {
        RuleSet::all()
    }
}

#[derive(Debug, Clone)]
pub struct NormConfig {
    pub math_font_commands: BTreeSet<String>,
    pub whitespace_commands: BTreeSet<String>,
    pub synonyms: BTreeMap<String, String>,
    pub forbidden_tokens: BTreeSet<String>,
    pub mode: Mode,
    pub rules: RuleSet,
    pub arg_spec: ArgSpec,
    pub max_input_chars: usize,
}

impl Default for NormConfig {
    fn default() -> Self {
        NormConfig {
            math_font_commands: parse_set("math_fonts", DEFAULT_MATH_FONTS)
                .expect("built-in math font table"),
            whitespace_commands: parse_set("whitespace", DEFAULT_WHITESPACE)
                .expect("built-in whitespace table"),
            synonyms: parse_synonyms("synonyms", DEFAULT_SYNONYMS).expect("built-in synonym table"),
            forbidden_tokens: parse_set("forbidden", DEFAULT_FORBIDDEN)
                .expect("built-in forbidden table"),
            mode: Mode::Gt,
            rules: RuleSet::all(),
            arg_spec: ArgSpec::default(),
            max_input_chars: DEFAULT_MAX_INPUT_CHARS,
        }
    }
}

impl NormConfig {
    pub fn with_mode(mut self, mode: Mode) -> NormConfig {
        self.mode = mode;
        self
    }

    pub fn with_rules(mut self, rules: RuleSet) -> NormConfig {
        self.rules = rules;
        self
    }

    /// Loads a `key = value` config file on top of the defaults.
    pub fn load(path: &Path) -> Result<NormConfig, ConfigError> {
        let text = read(path)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let mut cfg = NormConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::BadLine {
                    table: path.display().to_string(),
                    line: idx + 1,
                    reason: "expected `key = value`".into(),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            let table_path = || dir.join(value);
            match key {
                "mode" => {
                    cfg.mode = value.parse().map_err(|reason| ConfigError::BadValue {
                        key: key.into(),
                        reason,
                    })?;
                }
                "rules" => {
                    let mut rules = RuleSet::none();
                    for name in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                        let rule = Rule::from_name(name).ok_or_else(|| ConfigError::BadValue {
                            key: key.into(),
                            reason: format!("unknown rule `{name}`"),
                        })?;
                        rules = rules.with(rule);
                    }
                    cfg.rules = rules;
                }
                "max_input_chars" => {
                    cfg.max_input_chars = value.parse().map_err(|e| ConfigError::BadValue {
                        key: key.into(),
                        reason: format!("{e}"),
                    })?;
                }
                "synonyms" => {
                    let p = table_path();
                    cfg.synonyms = parse_synonyms(&p.display().to_string(), &read(&p)?)?;
                }
                "math_fonts" => {
                    let p = table_path();
                    cfg.math_font_commands = parse_set(&p.display().to_string(), &read(&p)?)?;
                }
                "whitespace" => {
                    let p = table_path();
                    cfg.whitespace_commands = parse_set(&p.display().to_string(), &read(&p)?)?;
                }
                "forbidden" => {
                    let p = table_path();
                    cfg.forbidden_tokens = parse_set(&p.display().to_string(), &read(&p)?)?;
                }
                "arity" => {
                    let p = table_path();
                    parse_arity(&p.display().to_string(), &read(&p)?, &mut cfg.arg_spec)?;
                }
                other => return Err(ConfigError::UnknownKey(other.into())),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for value in self.synonyms.values() {
            if self.synonyms.contains_key(value) {
                return Err(ConfigError::SynonymChain(value.clone()));
            }
        }
        let sets: [(&'static str, &BTreeSet<String>); 3] = [
            ("math font", &self.math_font_commands),
            ("whitespace", &self.whitespace_commands),
            ("forbidden", &self.forbidden_tokens),
        ];
        for (i, (first, a)) in sets.iter().enumerate() {
            for (second, b) in &sets[i + 1..] {
                if let Some(token) = a.intersection(b).next() {
                    return Err(ConfigError::OverlappingSets {
                        token: token.clone(),
                        first,
                        second,
                    });
                }
            }
        }
        for value in self.synonyms.values() {
            for (set, members) in &sets {
                if members.contains(value) {
                    return Err(ConfigError::SynonymIntoRemovedSet {
                        token: value.clone(),
                        set,
                    });
                }
            }
        }
        Ok(())
    }
}

fn read(path: &Path) -> Result<String, ConfigError> {
    fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_owned(),
        source,
    })
}

fn table_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_start().trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

fn lex_line(table: &str, line: usize, text: &str) -> Result<Vec<Token>, ConfigError> {
    if text.trim_end() == "\\" {
        return Ok(vec![Token::parse_single("\\ ").expect("control space")]);
    }
    tokenize(text)
        .map(|s| s.tokens)
        .map_err(|e: TokenizeError| ConfigError::BadLine {
            table: table.into(),
            line,
            reason: e.to_string(),
        })
}

/// One token per line.
pub fn parse_set(table: &str, text: &str) -> Result<BTreeSet<String>, ConfigError> {
    let mut out = BTreeSet::new();
    for (line, l) in table_lines(text) {
        match lex_line(table, line, l)?.as_slice() {
            [tok] => {
                out.insert(tok.text().to_owned());
            }
            other => {
                return Err(ConfigError::BadLine {
                    table: table.into(),
                    line,
                    reason: format!("expected one token, found {}", other.len()),
                })
            }
        }
    }
    Ok(out)
}

/// `<from> <to>` per line, each exactly one token.
pub fn parse_synonyms(table: &str, text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (line, l) in table_lines(text) {
        match lex_line(table, line, l)?.as_slice() {
            [from, to] => {
                out.insert(from.text().to_owned(), to.text().to_owned());
            }
            other => {
                return Err(ConfigError::BadLine {
                    table: table.into(),
                    line,
                    reason: format!("expected two tokens, found {}", other.len()),
                })
            }
        }
    }
    Ok(out)
}

/// `\command <args> [optional] [star]` per line.
pub fn parse_arity(table: &str, text: &str, spec: &mut ArgSpec) -> Result<(), ConfigError> {
    for (line, l) in table_lines(text) {
        let bad = |reason: &str| ConfigError::BadLine {
            table: table.into(),
            line,
            reason: reason.into(),
        };
        let mut words = l.split_whitespace();
        let name = words.next().ok_or_else(|| bad("missing command"))?;
        if Token::parse_single(name).is_none() || !name.starts_with('\\') {
            return Err(bad("command must be a single control sequence"));
        }
        let args = words
            .next()
            .and_then(|w| w.parse().ok())
            .ok_or_else(|| bad("missing argument count"))?;
        let mut cs = CommandSpec {
            args,
            ..Default::default()
        };
        for flag in words {
            match flag {
                "optional" => cs.optional = true,
                "star" => cs.star = true,
                _ => return Err(bad("unknown flag")),
            }
        }
        spec.insert(name, cs);
    }
    Ok(())
}
