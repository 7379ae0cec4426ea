//! Structural trees over token sequences.
//!
//! The parser keeps every group the source wrote and every script marker in
//! source order; deciding what is redundant is left to the normalizer. The
//! serializer applies the canonical brace discipline unless asked to keep
//! groups verbatim.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tokenizer::{tokenize_with_cap, Token, TokenKind, TokenSeq, TokenizeError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error(transparent)]
    Tokenize(#[from] TokenizeError),
    #[error("unbalanced braces at token {0}")]
    UnbalancedBraces(usize),
    #[error("script marker without base or operand at token {0}")]
    DanglingScript(usize),
    #[error("environment `{0}` is never closed")]
    UnclosedEnvironment(String),
    #[error("`\\end{{{found}}}` does not close `{expected}`")]
    MismatchedEnvironment { expected: String, found: String },
    #[error("unmatched \\left/\\right at token {0}")]
    MismatchedLeftRight(usize),
    #[error("unsupported column specifier `{0}`")]
    BadColumnSpec(String),
    #[error("`{0}` is missing a required argument")]
    MissingArgument(String),
    #[error("optional argument of `{0}` is never closed")]
    UnclosedOptionalArgument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Ground truth: drops `\left`/`\right`, forces `c` column indicators.
    #[default]
    Gt,
    /// Rendering: keeps `\left`/`\right` and the original column indicators.
    Rendering,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gt" => Ok(Mode::Gt),
            "rendering" | "render" => Ok(Mode::Rendering),
            other => Err(format!("unknown mode `{other}` (expected gt or rendering)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ColumnAlign {
    Left,
    Center,
    Right,
}

impl ColumnAlign {
    fn from_letter(s: &str) -> Option<ColumnAlign> {
        match s {
            "l" => Some(ColumnAlign::Left),
            "c" => Some(ColumnAlign::Center),
            "r" => Some(ColumnAlign::Right),
            _ => None,
        }
    }

    pub fn letter(self) -> &'static str {
        match self {
            ColumnAlign::Left => "l",
            ColumnAlign::Center => "c",
            ColumnAlign::Right => "r",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScriptKind {
    Sub,
    Sup,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Script {
    pub kind: ScriptKind,
    pub operand: Vec<ExprNode>,
}

/// `\begin{env}` … `\end{env}`. Only `array` carries a column spec.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrayEnv {
    pub env: String,
    pub col_spec: Option<Vec<ColumnAlign>>,
    pub rows: Vec<Vec<Vec<ExprNode>>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExprNode {
    Atom(Token),
    Group(Vec<ExprNode>),
    /// Scripts are kept in source order; at least one is present.
    Scripted {
        base: Box<ExprNode>,
        scripts: Vec<Script>,
    },
    Command {
        name: Token,
        starred: bool,
        optional: Option<Vec<ExprNode>>,
        args: Vec<Vec<ExprNode>>,
    },
    Array(ArrayEnv),
    DelimPair {
        left: Token,
        right: Token,
        body: Vec<ExprNode>,
    },
}

impl ExprNode {
    pub fn children(&self) -> Option<&[ExprNode]> {
        match self {
            ExprNode::Group(c) => Some(c),
            _ => None,
        }
    }

    /// Merged subscript operand: all sub operands in source order.
    pub fn sub(&self) -> Option<Vec<ExprNode>> {
        self.merged(ScriptKind::Sub)
    }

    pub fn sup(&self) -> Option<Vec<ExprNode>> {
        self.merged(ScriptKind::Sup)
    }

    fn merged(&self, kind: ScriptKind) -> Option<Vec<ExprNode>> {
        let ExprNode::Scripted { scripts, .. } = self else {
            return None;
        };
        let mut found = false;
        let mut out = Vec::new();
        for s in scripts.iter().filter(|s| s.kind == kind) {
            found = true;
            out.extend(s.operand.iter().cloned());
        }
        found.then_some(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CommandSpec {
    pub args: usize,
    pub optional: bool,
    pub star: bool,
}

/// Number of brace-delimited arguments each command takes. Commands absent
/// from the table take none.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArgSpec {
    table: HashMap<String, CommandSpec>,
}

const ONE_ARG: &[&str] = &[
    "\\mathcal",
    "\\mathbb",
    "\\boldsymbol",
    "\\mathbf",
    "\\mathrm",
    "\\mathit",
    "\\mathsf",
    "\\mathtt",
    "\\mathfrak",
    "\\mathscr",
    "\\mathnormal",
    "\\bm",
    "\\pmb",
    "\\text",
    "\\textrm",
    "\\textbf",
    "\\textit",
    "\\textsf",
    "\\texttt",
    "\\textnormal",
    "\\mbox",
    "\\hbox",
    "\\fbox",
    "\\boxed",
    "\\phantom",
    "\\hphantom",
    "\\vphantom",
    "\\label",
    "\\ref",
    "\\eqref",
    "\\pageref",
    "\\cite",
    "\\tag",
    "\\hat",
    "\\widehat",
    "\\tilde",
    "\\widetilde",
    "\\bar",
    "\\overline",
    "\\underline",
    "\\vec",
    "\\dot",
    "\\ddot",
    "\\dddot",
    "\\acute",
    "\\grave",
    "\\breve",
    "\\check",
    "\\mathring",
    "\\overrightarrow",
    "\\overleftarrow",
    "\\overleftrightarrow",
    "\\overbrace",
    "\\underbrace",
    "\\mathop",
    "\\mathrel",
    "\\mathbin",
    "\\mathord",
    "\\mathopen",
    "\\mathclose",
    "\\mathpunct",
    "\\mathinner",
    "\\substack",
    "\\color",
    "\\pmod",
];

const TWO_ARGS: &[&str] = &[
    "\\frac",
    "\\dfrac",
    "\\tfrac",
    "\\cfrac",
    "\\binom",
    "\\dbinom",
    "\\tbinom",
    "\\stackrel",
    "\\overset",
    "\\underset",
    "\\textcolor",
    "\\raisebox",
    "\\scalebox",
];

impl Default for ArgSpec {
    fn default() -> Self {
        let mut table = HashMap::new();
        for name in ONE_ARG {
            table.insert(
                (*name).to_owned(),
                CommandSpec {
                    args: 1,
                    ..Default::default()
                },
            );
        }
        for name in TWO_ARGS {
            table.insert(
                (*name).to_owned(),
                CommandSpec {
                    args: 2,
                    ..Default::default()
                },
            );
        }
        let star = CommandSpec {
            args: 1,
            optional: false,
            star: true,
        };
        table.insert("\\operatorname".into(), star);
        table.insert("\\hspace".into(), star);
        table.insert("\\vspace".into(), star);
        let opt = |args| CommandSpec {
            args,
            optional: true,
            star: false,
        };
        table.insert("\\sqrt".into(), opt(1));
        table.insert("\\smash".into(), opt(1));
        table.insert("\\xrightarrow".into(), opt(1));
        table.insert("\\xleftarrow".into(), opt(1));
        table.insert("\\rule".into(), opt(2));
        ArgSpec { table }
    }
}

impl ArgSpec {
    pub fn empty() -> ArgSpec {
        ArgSpec {
            table: HashMap::new(),
        }
    }

    pub fn get(&self, name: &str) -> CommandSpec {
        self.table.get(name).copied().unwrap_or_default()
    }

    pub fn arity(&self, name: &str) -> usize {
        self.get(name).args
    }

    pub fn insert(&mut self, name: impl Into<String>, spec: CommandSpec) {
        self.table.insert(name.into(), spec);
    }

    pub fn contains(&self, name: &str) -> bool {
        self.table.contains_key(name)
    }
}

/// Parses with the default argument table.
pub fn parse(seq: &TokenSeq) -> Result<ExprNode, ParseError> {
    parse_with(seq, &ArgSpec::default())
}

pub fn parse_with(seq: &TokenSeq, spec: &ArgSpec) -> Result<ExprNode, ParseError> {
    let mut p = Parser {
        toks: &seq.tokens,
        pos: 0,
        spec,
    };
    let (nodes, _) = p.sequence(Ctx::Top)?;
    Ok(ExprNode::Group(nodes))
}

/// Tokenizes and parses in one step.
pub fn parse_str(input: &str, spec: &ArgSpec, max_chars: usize) -> Result<ExprNode, ParseError> {
    let seq = tokenize_with_cap(input, max_chars)?;
    parse_with(&seq, spec)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Ctx {
    Top,
    Group,
    DelimBody,
    Cell,
    Optional,
}

enum End {
    Eof,
    Brace,
    Right,
    Tab,
    RowBreak,
    EnvEnd(String),
    Bracket,
}

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
    spec: &'a ArgSpec,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<&'a Token> {
        let t = self.toks.get(self.pos);
        self.pos += 1;
        t
    }

    fn sequence(&mut self, ctx: Ctx) -> Result<(Vec<ExprNode>, End), ParseError> {
        let mut nodes: Vec<ExprNode> = Vec::new();
        loop {
            let at = self.pos;
            let Some(tok) = self.peek() else {
                return match ctx {
                    Ctx::Top => Ok((nodes, End::Eof)),
                    Ctx::Group => Err(ParseError::UnbalancedBraces(at)),
                    Ctx::DelimBody => Err(ParseError::MismatchedLeftRight(at)),
                    Ctx::Cell => Err(ParseError::UnclosedEnvironment(String::new())),
                    Ctx::Optional => Err(ParseError::UnclosedOptionalArgument(String::new())),
                };
            };
            match tok.kind() {
                TokenKind::GroupClose => {
                    if ctx == Ctx::Group {
                        self.pos += 1;
                        return Ok((nodes, End::Brace));
                    }
                    return Err(ParseError::UnbalancedBraces(at));
                }
                TokenKind::Command if tok.is("\\right") => {
                    if ctx == Ctx::DelimBody {
                        self.pos += 1;
                        return Ok((nodes, End::Right));
                    }
                    return Err(ParseError::MismatchedLeftRight(at));
                }
                TokenKind::AlignTab if ctx == Ctx::Cell => {
                    self.pos += 1;
                    return Ok((nodes, End::Tab));
                }
                TokenKind::RowBreak if ctx == Ctx::Cell => {
                    self.pos += 1;
                    return Ok((nodes, End::RowBreak));
                }
                TokenKind::EnvEnd => {
                    let name = tok.env_name().unwrap_or_default().to_owned();
                    if ctx == Ctx::Cell {
                        self.pos += 1;
                        return Ok((nodes, End::EnvEnd(name)));
                    }
                    return Err(ParseError::MismatchedEnvironment {
                        expected: String::new(),
                        found: name,
                    });
                }
                TokenKind::Other if ctx == Ctx::Optional && tok.is("]") => {
                    self.pos += 1;
                    return Ok((nodes, End::Bracket));
                }
                TokenKind::Subscript | TokenKind::Superscript => {
                    let kind = if tok.kind() == TokenKind::Subscript {
                        ScriptKind::Sub
                    } else {
                        ScriptKind::Sup
                    };
                    self.pos += 1;
                    let Some(base) = nodes.pop() else {
                        return Err(ParseError::DanglingScript(at));
                    };
                    let operand = self.operand()?.ok_or(ParseError::DanglingScript(at))?;
                    let script = Script { kind, operand };
                    nodes.push(match base {
                        ExprNode::Scripted { base, mut scripts } => {
                            scripts.push(script);
                            ExprNode::Scripted { base, scripts }
                        }
                        other => ExprNode::Scripted {
                            base: Box::new(other),
                            scripts: vec![script],
                        },
                    });
                }
                _ => {
                    let node = self.item()?;
                    nodes.push(node);
                }
            }
        }
    }

    /// A script operand or command argument: a braced group's contents or a
    /// single item. `None` when nothing usable follows.
    fn operand(&mut self) -> Result<Option<Vec<ExprNode>>, ParseError> {
        let Some(tok) = self.peek() else {
            return Ok(None);
        };
        match tok.kind() {
            TokenKind::GroupOpen => {
                self.pos += 1;
                let (nodes, _) = self.sequence(Ctx::Group)?;
                Ok(Some(nodes))
            }
            TokenKind::GroupClose
            | TokenKind::Subscript
            | TokenKind::Superscript
            | TokenKind::AlignTab
            | TokenKind::RowBreak
            | TokenKind::EnvEnd => Ok(None),
            TokenKind::Command if tok.is("\\right") => Ok(None),
            _ => Ok(Some(vec![self.item()?])),
        }
    }

    fn item(&mut self) -> Result<ExprNode, ParseError> {
        let at = self.pos;
        let tok = self.next().expect("item called at end of input");
        match tok.kind() {
            TokenKind::GroupOpen => {
                let (nodes, _) = self.sequence(Ctx::Group)?;
                Ok(ExprNode::Group(nodes))
            }
            TokenKind::EnvBegin => self.environment(tok),
            TokenKind::Command if tok.is("\\left") => {
                let left = self.delimiter(at)?;
                let (body, _) = self.sequence(Ctx::DelimBody)?;
                let right = self.delimiter(at)?;
                Ok(ExprNode::DelimPair { left, right, body })
            }
            TokenKind::Command => self.command(tok),
            _ => Ok(ExprNode::Atom(tok.clone())),
        }
    }

    fn delimiter(&mut self, at: usize) -> Result<Token, ParseError> {
        match self.next() {
            Some(t)
                if !matches!(
                    t.kind(),
                    TokenKind::GroupOpen
                        | TokenKind::GroupClose
                        | TokenKind::Subscript
                        | TokenKind::Superscript
                        | TokenKind::AlignTab
                        | TokenKind::RowBreak
                        | TokenKind::EnvBegin
                        | TokenKind::EnvEnd
                ) && !t.is("\\left")
                    && !t.is("\\right") =>
            {
                Ok(t.clone())
            }
            _ => Err(ParseError::MismatchedLeftRight(at)),
        }
    }

    fn command(&mut self, name: &Token) -> Result<ExprNode, ParseError> {
        let spec = self.spec.get(name.text());
        let mut starred = false;
        if spec.star && self.peek().is_some_and(|t| t.is("*")) {
            self.pos += 1;
            starred = true;
        }
        let mut optional = None;
        if spec.optional && self.peek().is_some_and(|t| t.is("[")) {
            self.pos += 1;
            let (nodes, _) = self.sequence(Ctx::Optional).map_err(|e| match e {
                ParseError::UnclosedOptionalArgument(_) => {
                    ParseError::UnclosedOptionalArgument(name.text().to_owned())
                }
                other => other,
            })?;
            optional = Some(nodes);
        }
        let mut args = Vec::with_capacity(spec.args);
        for _ in 0..spec.args {
            let arg = self
                .operand()?
                .ok_or_else(|| ParseError::MissingArgument(name.text().to_owned()))?;
            args.push(arg);
        }
        Ok(ExprNode::Command {
            name: name.clone(),
            starred,
            optional,
            args,
        })
    }

    fn environment(&mut self, begin: &Token) -> Result<ExprNode, ParseError> {
        let env = begin.env_name().unwrap_or_default().to_owned();
        let col_spec = if env == "array" {
            Some(self.column_spec()?)
        } else {
            None
        };
        let mut rows = Vec::new();
        let mut row = Vec::new();
        loop {
            let (cell, end) = self.sequence(Ctx::Cell).map_err(|e| match e {
                ParseError::UnclosedEnvironment(_) => ParseError::UnclosedEnvironment(env.clone()),
                ParseError::MismatchedEnvironment { found, .. } => {
                    ParseError::MismatchedEnvironment {
                        expected: env.clone(),
                        found,
                    }
                }
                other => other,
            })?;
            row.push(cell);
            match end {
                End::Tab => {}
                End::RowBreak => rows.push(std::mem::take(&mut row)),
                End::EnvEnd(found) => {
                    if found != env {
                        return Err(ParseError::MismatchedEnvironment {
                            expected: env,
                            found,
                        });
                    }
                    rows.push(row);
                    break;
                }
                _ => unreachable!("cell sequences end only on &, \\\\ or \\end"),
            }
        }
        // A trailing `\\` before `\end` does not open a new row.
        if rows.len() > 1 && rows.last().is_some_and(|r| r.len() == 1 && r[0].is_empty()) {
            rows.pop();
        }
        Ok(ExprNode::Array(ArrayEnv {
            env,
            col_spec,
            rows,
        }))
    }

    fn column_spec(&mut self) -> Result<Vec<ColumnAlign>, ParseError> {
        match self.next() {
            Some(t) if t.kind() == TokenKind::GroupOpen => {}
            Some(t) => return Err(ParseError::BadColumnSpec(t.text().to_owned())),
            None => return Err(ParseError::BadColumnSpec(String::new())),
        }
        let mut cols = Vec::new();
        loop {
            match self.next() {
                Some(t) if t.kind() == TokenKind::GroupClose => break,
                Some(t) => match ColumnAlign::from_letter(t.text()) {
                    Some(c) => cols.push(c),
                    None => return Err(ParseError::BadColumnSpec(t.text().to_owned())),
                },
                None => return Err(ParseError::BadColumnSpec(String::new())),
            }
        }
        if cols.is_empty() {
            return Err(ParseError::BadColumnSpec("{}".into()));
        }
        Ok(cols)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SerializeOptions {
    pub mode: Mode,
    /// Emit every group as written instead of applying the brace discipline.
    pub keep_groups: bool,
}

impl From<Mode> for SerializeOptions {
    fn from(mode: Mode) -> Self {
        SerializeOptions {
            mode,
            keep_groups: false,
        }
    }
}

/// Serializes with the canonical brace discipline: groups survive only as
/// command arguments, script operands (always braced) and multi-item script
/// bases.
pub fn serialize(node: &ExprNode, mode: Mode) -> TokenSeq {
    serialize_with(node, SerializeOptions::from(mode))
}

pub fn serialize_with(node: &ExprNode, opts: SerializeOptions) -> TokenSeq {
    let mut s = Serializer {
        opts,
        out: Vec::new(),
    };
    match node {
        ExprNode::Group(children) => s.seq(children),
        other => s.node(other),
    }
    TokenSeq::from_tokens(s.out)
}

struct Serializer {
    opts: SerializeOptions,
    out: Vec<Token>,
}

impl Serializer {
    fn push(&mut self, tok: Token) {
        self.out.push(tok);
    }

    fn braced(&mut self, nodes: &[ExprNode]) {
        self.push(Token::open());
        self.seq(nodes);
        self.push(Token::close());
    }

    fn seq(&mut self, nodes: &[ExprNode]) {
        for n in nodes {
            self.node(n);
        }
    }

    fn node(&mut self, node: &ExprNode) {
        match node {
            ExprNode::Atom(t) => self.push(t.clone()),
            ExprNode::Group(children) => {
                if self.opts.keep_groups {
                    self.braced(children);
                } else {
                    self.seq(children);
                }
            }
            ExprNode::Scripted { base, scripts } => {
                self.base(base);
                for s in scripts {
                    let (text, kind) = match s.kind {
                        ScriptKind::Sub => ("_", TokenKind::Subscript),
                        ScriptKind::Sup => ("^", TokenKind::Superscript),
                    };
                    self.push(Token::new_unchecked(text, kind));
                    self.braced(&s.operand);
                }
            }
            ExprNode::Command {
                name,
                starred,
                optional,
                args,
            } => {
                self.push(name.clone());
                if *starred {
                    self.push(Token::new_unchecked("*", TokenKind::Other));
                }
                if let Some(opt) = optional {
                    self.push(Token::new_unchecked("[", TokenKind::Other));
                    self.seq(opt);
                    self.push(Token::new_unchecked("]", TokenKind::Other));
                }
                for a in args {
                    self.braced(a);
                }
            }
            ExprNode::Array(arr) => self.array(arr),
            ExprNode::DelimPair { left, right, body } => match self.opts.mode {
                Mode::Rendering => {
                    self.push(Token::new_unchecked("\\left", TokenKind::Command));
                    self.push(left.clone());
                    self.seq(body);
                    self.push(Token::new_unchecked("\\right", TokenKind::Command));
                    self.push(right.clone());
                }
                Mode::Gt => {
                    if !left.is(".") {
                        self.push(left.clone());
                    }
                    self.seq(body);
                    if !right.is(".") {
                        self.push(right.clone());
                    }
                }
            },
        }
    }

    fn base(&mut self, base: &ExprNode) {
        if self.opts.keep_groups {
            return self.node(base);
        }
        match base {
            ExprNode::Group(children) => match children.as_slice() {
                [only] if !matches!(only, ExprNode::Scripted { .. }) => self.base(only),
                _ => self.braced(children),
            },
            ExprNode::DelimPair { left, right, body }
                if self.opts.mode == Mode::Gt && left.is(".") && right.is(".") =>
            {
                self.base(&ExprNode::Group(body.clone()))
            }
            other => self.node(other),
        }
    }

    fn array(&mut self, arr: &ArrayEnv) {
        self.push(Token::env_begin(&arr.env));
        if let Some(cols) = &arr.col_spec {
            self.push(Token::open());
            for c in cols {
                let letter = match self.opts.mode {
                    Mode::Gt => "c",
                    Mode::Rendering => c.letter(),
                };
                self.push(Token::new_unchecked(letter, TokenKind::Letter));
            }
            self.push(Token::close());
        }
        for (r, row) in arr.rows.iter().enumerate() {
            if r > 0 {
                self.push(Token::new_unchecked("\\\\", TokenKind::RowBreak));
            }
            for (c, cell) in row.iter().enumerate() {
                if c > 0 {
                    self.push(Token::new_unchecked("&", TokenKind::AlignTab));
                }
                self.seq(cell);
            }
        }
        self.push(Token::env_end(&arr.env));
    }
}

/// Indented tree dump for inspection. Not a stable format.
pub fn debug_tree(node: &ExprNode) -> String {
    let mut out = String::new();
    dump(node, 0, &mut out);
    out
}

fn dump(node: &ExprNode, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    match node {
        ExprNode::Atom(t) => {
            let _ = writeln!(out, "{pad}Atom {t}");
        }
        ExprNode::Group(children) => {
            let _ = writeln!(out, "{pad}Group");
            dump_all(children, depth + 1, out);
        }
        ExprNode::Scripted { base, scripts } => {
            let _ = writeln!(out, "{pad}Scripted");
            let _ = writeln!(out, "{pad}  base");
            dump(base, depth + 2, out);
            for s in scripts {
                let label = match s.kind {
                    ScriptKind::Sub => "sub",
                    ScriptKind::Sup => "sup",
                };
                let _ = writeln!(out, "{pad}  {label}");
                dump_all(&s.operand, depth + 2, out);
            }
        }
        ExprNode::Command {
            name,
            starred,
            optional,
            args,
        } => {
            let star = if *starred { "*" } else { "" };
            let _ = writeln!(out, "{pad}Command {name}{star}");
            if let Some(opt) = optional {
                let _ = writeln!(out, "{pad}  optional");
                dump_all(opt, depth + 2, out);
            }
            for (i, a) in args.iter().enumerate() {
                let _ = writeln!(out, "{pad}  arg {i}");
                dump_all(a, depth + 2, out);
            }
        }
        ExprNode::Array(arr) => {
            let spec: String = arr.col_spec.iter().flatten().map(|c| c.letter()).collect();
            let _ = writeln!(out, "{pad}Array {} [{spec}]", arr.env);
            for (r, row) in arr.rows.iter().enumerate() {
                for (c, cell) in row.iter().enumerate() {
                    let _ = writeln!(out, "{pad}  cell {r},{c}");
                    dump_all(cell, depth + 2, out);
                }
            }
        }
        ExprNode::DelimPair { left, right, body } => {
            let _ = writeln!(out, "{pad}DelimPair {left} {right}");
            dump_all(body, depth + 1, out);
        }
    }
}

fn dump_all(nodes: &[ExprNode], depth: usize, out: &mut String) {
    for n in nodes {
        dump(n, depth, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenizer::tokenize;

    fn p(s: &str) -> Result<ExprNode, ParseError> {
        parse(&tokenize(s).unwrap())
    }

    fn atom(s: &str) -> ExprNode {
        ExprNode::Atom(Token::parse_single(s).unwrap())
    }

    fn texts(seq: &TokenSeq) -> String {
        seq.to_string()
    }

    #[test]
    fn script_chain_keeps_source_order() {
        let root = p("a^{b}_{c}^{d}").unwrap();
        let ExprNode::Group(children) = &root else {
            panic!()
        };
        let ExprNode::Scripted { base, scripts } = &children[0] else {
            panic!("{root:?}")
        };
        assert_eq!(**base, atom("a"));
        let order: Vec<_> = scripts
            .iter()
            .map(|s| (s.kind, s.operand.clone()))
            .collect();
        assert_eq!(
            order,
            vec![
                (ScriptKind::Sup, vec![atom("b")]),
                (ScriptKind::Sub, vec![atom("c")]),
                (ScriptKind::Sup, vec![atom("d")]),
            ]
        );
        assert_eq!(children[0].sup(), Some(vec![atom("b"), atom("d")]));
        assert_eq!(children[0].sub(), Some(vec![atom("c")]));
    }

    #[test]
    fn wrapped_atom() {
        assert_eq!(
            p("{x}").unwrap(),
            ExprNode::Group(vec![ExprNode::Group(vec![atom("x")])])
        );
    }

    #[test]
    fn array_grid() {
        let root = p("\\begin{array}{cc}a=b,&c=d\\end{array}").unwrap();
        let ExprNode::Group(children) = root else {
            panic!()
        };
        let ExprNode::Array(arr) = &children[0] else {
            panic!()
        };
        assert_eq!(
            arr.col_spec,
            Some(vec![ColumnAlign::Center, ColumnAlign::Center])
        );
        assert_eq!(
            arr.rows,
            vec![vec![
                vec![atom("a"), atom("="), atom("b"), atom(",")],
                vec![atom("c"), atom("="), atom("d")],
            ]]
        );
    }

    #[test]
    fn trailing_row_break_is_ignored() {
        let root = p("\\begin{array}{c}1\\\\2\\\\\\end{array}").unwrap();
        let ExprNode::Group(children) = root else {
            panic!()
        };
        let ExprNode::Array(arr) = &children[0] else {
            panic!()
        };
        assert_eq!(arr.rows.len(), 2);
    }

    #[test]
    fn bare_operand_is_one_element_group() {
        assert_eq!(p("a_3").unwrap(), p("a_{3}").unwrap());
        assert_eq!(p("\\frac12").unwrap(), p("\\frac{1}{2}").unwrap());
    }

    #[test]
    fn left_right_pairs() {
        let root = p("\\left. x \\right|").unwrap();
        let ExprNode::Group(children) = root else {
            panic!()
        };
        assert!(
            matches!(&children[0], ExprNode::DelimPair { left, right, .. }
            if left.is(".") && right.is("|"))
        );
    }

    #[test]
    fn errors() {
        assert_eq!(p("{a"), Err(ParseError::UnbalancedBraces(2)));
        assert_eq!(p("a}"), Err(ParseError::UnbalancedBraces(1)));
        assert_eq!(p("_a"), Err(ParseError::DanglingScript(0)));
        assert_eq!(p("a^"), Err(ParseError::DanglingScript(1)));
        assert_eq!(p("a^}"), Err(ParseError::DanglingScript(1)));
        assert_eq!(
            p("\\begin{array}{c}a"),
            Err(ParseError::UnclosedEnvironment("array".into()))
        );
        assert!(matches!(
            p("\\begin{array}{c}a\\end{matrix}"),
            Err(ParseError::MismatchedEnvironment { .. })
        ));
        assert_eq!(p("\\left( x"), Err(ParseError::MismatchedLeftRight(3)));
        assert_eq!(p("x \\right)"), Err(ParseError::MismatchedLeftRight(1)));
        assert_eq!(
            p("\\begin{array}{c|c}a&b\\end{array}"),
            Err(ParseError::BadColumnSpec("|".into()))
        );
        assert_eq!(
            p("\\begin{array}{c@{}c}a&b\\end{array}"),
            Err(ParseError::BadColumnSpec("@".into()))
        );
        assert_eq!(
            p("\\frac{a}"),
            Err(ParseError::MissingArgument("\\frac".into()))
        );
        assert_eq!(
            p("\\sqrt[3 x"),
            Err(ParseError::UnclosedOptionalArgument("\\sqrt".into()))
        );
    }

    #[test]
    fn serialize_gt_and_rendering() {
        let root = p("a_3").unwrap();
        assert_eq!(texts(&serialize(&root, Mode::Gt)), "a _ { 3 }");
        assert!(serialize(&ExprNode::Group(vec![]), Mode::Gt).is_empty());

        let arr = p("\\left(\\begin{array}{lr}a&b\\end{array}\\right)").unwrap();
        assert_eq!(
            texts(&serialize(&arr, Mode::Gt)),
            "( \\begin{array} { c c } a & b \\end{array} )"
        );
        assert_eq!(
            texts(&serialize(&arr, Mode::Rendering)),
            "\\left ( \\begin{array} { l r } a & b \\end{array} \\right )"
        );
    }

    #[test]
    fn brace_discipline() {
        let s = |x: &str| texts(&serialize(&p(x).unwrap(), Mode::Gt));
        assert_eq!(s("{a_{3}}"), "a _ { 3 }");
        assert_eq!(s("{a}^2"), "a ^ { 2 }");
        assert_eq!(s("{a+b}^2"), "{ a + b } ^ { 2 }");
        assert_eq!(s("{a_1}^2"), "{ a _ { 1 } } ^ { 2 }");
        assert_eq!(s("{}^{14}C"), "{ } ^ { 1 4 } C");
        assert_eq!(s("\\sqrt[3]x"), "\\sqrt [ 3 ] { x }");
        assert_eq!(s("\\left.\\right.^2"), "{ } ^ { 2 }");
    }

    #[test]
    fn verbatim_round_trip() {
        let opts = SerializeOptions {
            mode: Mode::Rendering,
            keep_groups: true,
        };
        for src in [
            "{a_{3}}",
            "\\left( {x} \\right)^{2}",
            "\\begin{array}{lc}{a}&b\\\\c&d\\end{array}",
            "a^{b}_{c}^{d}",
            "\\operatorname*{max}_x",
        ] {
            let tree = p(src).unwrap();
            let again = parse(&serialize_with(&tree, opts)).unwrap();
            assert_eq!(again, tree, "{src}");
        }
    }

    #[test]
    fn debug_tree_dump() {
        let dump = debug_tree(&p("x^{2}").unwrap());
        assert_eq!(
            dump,
            "Group\n  Scripted\n    base\n      Atom x\n    sup\n      Atom 2\n"
        );
    }
}
