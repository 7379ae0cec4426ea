//! Rewriting of parsed expressions into canonical form.
//!
//! Rules run in a fixed order: forbidden-token rejection, math-font
//! unwrapping, white-space removal, synonym replacement, array handling,
//! script merging, and finally the brace discipline applied by the
//! serializer. Accepted output is a fixed point of [`normalize`].

mod config;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

pub use config::{parse_arity, parse_set, parse_synonyms, ConfigError, NormConfig, Rule, RuleSet};

use crate::parser::{
    parse_with, serialize_with, ArrayEnv, ColumnAlign, ExprNode, Mode, Script, ScriptKind,
    SerializeOptions,
};
use crate::tokenizer::{tokenize_with_cap, Token, TokenSeq};

/// Why an expression was dropped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", content = "detail", rename_all = "kebab-case")]
pub enum Rejection {
    ForbiddenToken(String),
    SparseArray,
    EmptyAfterNormalization,
    ParseError(String),
}

impl Rejection {
    /// Stable machine-readable reason code.
    pub fn code(&self) -> &'static str {
        match self {
            Rejection::ForbiddenToken(_) => "forbidden-token",
            Rejection::SparseArray => "sparse-array",
            Rejection::EmptyAfterNormalization => "empty",
            Rejection::ParseError(_) => "parse-error",
        }
    }
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rejection::ForbiddenToken(t) => write!(f, "forbidden-token {t}"),
            Rejection::ParseError(d) => write!(f, "parse-error {d}"),
            other => f.write_str(other.code()),
        }
    }
}

impl std::error::Error for Rejection {}

pub type NormOutcome = Result<TokenSeq, Rejection>;

/// Normalizes one expression with `cfg`.
pub fn normalize(input: &str, cfg: &NormConfig) -> NormOutcome {
    Normalizer::new_unchecked(cfg.clone()).normalize(input)
}

/// A validated config with precomputed synonym targets.
#[derive(Debug, Clone)]
pub struct Normalizer {
    cfg: NormConfig,
    synonyms: BTreeMap<String, Token>,
}

impl Normalizer {
    pub fn new(cfg: NormConfig) -> Result<Normalizer, ConfigError> {
        cfg.validate()?;
        Ok(Normalizer::new_unchecked(cfg))
    }

    fn new_unchecked(cfg: NormConfig) -> Normalizer {
        let synonyms = cfg
            .synonyms
            .iter()
            .filter_map(|(k, v)| Some((k.clone(), Token::parse_single(v)?)))
            .collect();
        Normalizer { cfg, synonyms }
    }

    pub fn config(&self) -> &NormConfig {
        &self.cfg
    }

    pub fn mode(&self) -> Mode {
        self.cfg.mode
    }

    /// Same tables, different serialization mode.
    pub fn with_mode(&self, mode: Mode) -> Normalizer {
        let mut n = self.clone();
        n.cfg.mode = mode;
        n
    }

    fn on(&self, rule: Rule) -> bool {
        self.cfg.rules.enabled(rule)
    }

    pub fn normalize(&self, input: &str) -> NormOutcome {
        let seq = tokenize_with_cap(input, self.cfg.max_input_chars)
            .map_err(|e| Rejection::ParseError(e.to_string()))?;
        self.normalize_tokens(&seq)
    }

    pub fn normalize_tokens(&self, seq: &TokenSeq) -> NormOutcome {
        if self.on(Rule::Forbidden) {
            if let Some(t) = seq
                .iter()
                .find(|t| self.cfg.forbidden_tokens.contains(t.text()))
            {
                return Err(Rejection::ForbiddenToken(t.text().to_owned()));
            }
        }
        let tree = parse_with(seq, &self.cfg.arg_spec)
            .map_err(|e| Rejection::ParseError(e.to_string()))?;
        let tree = self.rewrite(tree)?;
        let out = serialize_with(
            &tree,
            SerializeOptions {
                mode: self.cfg.mode,
                keep_groups: !self.on(Rule::Braces),
            },
        );
        if out.is_empty() {
            return Err(Rejection::EmptyAfterNormalization);
        }
        Ok(out)
    }

    /// Applies the tree-level rules (everything but the brace discipline).
    pub fn rewrite(&self, tree: ExprNode) -> Result<ExprNode, Rejection> {
        let mut nodes = match tree {
            ExprNode::Group(c) => c,
            other => vec![other],
        };
        if self.on(Rule::MathFonts) {
            nodes = rewrite_seq(nodes, &mut |n| Ok(self.unwrap_font(n)))?;
        }
        if self.on(Rule::Whitespace) {
            nodes = rewrite_seq(nodes, &mut |n| Ok(self.drop_whitespace(n)))?;
        }
        if self.on(Rule::Synonyms) {
            nodes = rewrite_seq(nodes, &mut |n| Ok(Rewrite::Keep(self.map_synonyms(n))))?;
        }
        if self.on(Rule::Arrays) {
            nodes = self.arrays_seq(nodes, &Context::default())?;
        }
        if self.on(Rule::Scripts) {
            nodes = rewrite_seq(nodes, &mut |n| Ok(Rewrite::Keep(merge_scripts(n))))?;
        }
        Ok(ExprNode::Group(nodes))
    }

    fn unwrap_font(&self, node: ExprNode) -> Rewrite {
        match node {
            ExprNode::Command { name, args, .. }
                if self.cfg.math_font_commands.contains(name.text()) =>
            {
                Rewrite::Splice(args.into_iter().flatten().collect())
            }
            ExprNode::Atom(t) if self.cfg.math_font_commands.contains(t.text()) => {
                Rewrite::Splice(Vec::new())
            }
            other => Rewrite::Keep(other),
        }
    }

    fn drop_whitespace(&self, node: ExprNode) -> Rewrite {
        let ws = &self.cfg.whitespace_commands;
        match &node {
            ExprNode::Atom(t) if ws.contains(t.text()) => Rewrite::Splice(Vec::new()),
            ExprNode::Command { name, .. } if ws.contains(name.text()) => {
                Rewrite::Splice(Vec::new())
            }
            _ => Rewrite::Keep(node),
        }
    }

    fn synonym(&self, tok: Token) -> Token {
        self.synonyms.get(tok.text()).cloned().unwrap_or(tok)
    }

    fn map_synonyms(&self, node: ExprNode) -> ExprNode {
        match node {
            ExprNode::Atom(t) => ExprNode::Atom(self.synonym(t)),
            ExprNode::Command {
                name,
                starred,
                optional,
                args,
            } => ExprNode::Command {
                name: self.synonym(name),
                starred,
                optional,
                args,
            },
            ExprNode::DelimPair { left, right, body } => ExprNode::DelimPair {
                left: self.synonym(left),
                right: self.synonym(right),
                body,
            },
            other => other,
        }
    }

    /// Array handling over one sequence. `in_delim` is set for the body of a
    /// `\left … \right` pair with at least one visible delimiter.
    /// Array rule over one sequence. `outer` holds the flattened delimiter
    /// context beyond the sequence's edges when it is the body of a
    /// `\left ... \right` pair, so the decision matches the one taken after
    /// the pair has been serialized flat.
    fn arrays_seq(
        &self,
        nodes: Vec<ExprNode>,
        outer: &Context,
    ) -> Result<Vec<ExprNode>, Rejection> {
        let nodes = if self.on(Rule::Braces) {
            splice_groups(nodes)
        } else {
            nodes
        };
        let flats: Vec<Vec<&str>> = nodes.iter().map(flat_tokens).collect();
        let mut contexts = Vec::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            let ctx = if has_delim_body(n) {
                Context {
                    left: outer
                        .left
                        .iter()
                        .cloned()
                        .chain(owned(flats[..i].concat()))
                        .collect(),
                    right: owned(flats[i + 1..].concat())
                        .into_iter()
                        .chain(outer.right.iter().cloned())
                        .collect(),
                }
            } else {
                Context::default()
            };
            contexts.push(ctx);
        }
        drop(flats);
        let nodes = nodes
            .into_iter()
            .zip(&contexts)
            .map(|(n, ctx)| self.arrays_children(n, ctx))
            .collect::<Result<Vec<_>, _>>()?;

        let mut out: Vec<ExprNode> = Vec::with_capacity(nodes.len());
        let mut rest: VecDeque<ExprNode> = nodes.into();
        while let Some(node) = rest.pop_front() {
            let is_array = match &node {
                ExprNode::Array(a) => a.col_spec.is_some(),
                ExprNode::Scripted { base, .. } => {
                    matches!(&**base, ExprNode::Array(a) if a.col_spec.is_some())
                }
                _ => false,
            };
            if !is_array {
                out.push(node);
                continue;
            }
            let left: Vec<&str> = outer
                .left
                .iter()
                .map(String::as_str)
                .chain(out.iter().flat_map(flat_tokens))
                .collect();
            let right: Vec<&str> = rest
                .iter()
                .flat_map(flat_tokens)
                .chain(outer.right.iter().map(String::as_str))
                .collect();
            let keep = enclosed(&left, &right);
            match node {
                ExprNode::Array(arr) => {
                    if keep {
                        out.push(ExprNode::Array(self.canonical_columns(arr)));
                    } else {
                        out.extend(splice_cells(arr));
                    }
                }
                ExprNode::Scripted { base, scripts } => {
                    let ExprNode::Array(arr) = *base else {
                        unreachable!()
                    };
                    let base = if keep {
                        ExprNode::Array(self.canonical_columns(arr))
                    } else {
                        node_from_seq(splice_cells(arr))
                    };
                    out.push(ExprNode::Scripted {
                        base: Box::new(base),
                        scripts,
                    });
                }
                _ => unreachable!(),
            }
        }
        Ok(out)
    }

    fn arrays_children(&self, node: ExprNode, ctx: &Context) -> Result<ExprNode, Rejection> {
        let fresh = &Context::default();
        Ok(match node {
            ExprNode::Atom(_) => node,
            ExprNode::Group(c) => ExprNode::Group(self.arrays_seq(c, fresh)?),
            ExprNode::Scripted { base, scripts } => {
                let base = match *base {
                    ExprNode::Group(c) => ExprNode::Group(self.arrays_seq(c, fresh)?),
                    other => self.arrays_children(other, ctx)?,
                };
                let scripts = scripts
                    .into_iter()
                    .map(|s| {
                        Ok(Script {
                            kind: s.kind,
                            operand: self.arrays_seq(s.operand, fresh)?,
                        })
                    })
                    .collect::<Result<_, Rejection>>()?;
                ExprNode::Scripted {
                    base: Box::new(base),
                    scripts,
                }
            }
            ExprNode::Command {
                name,
                starred,
                optional,
                args,
            } => ExprNode::Command {
                name,
                starred,
                optional: optional.map(|o| self.arrays_seq(o, fresh)).transpose()?,
                args: args
                    .into_iter()
                    .map(|a| self.arrays_seq(a, fresh))
                    .collect::<Result<_, _>>()?,
            },
            ExprNode::DelimPair { left, right, body } => {
                let inner = Context {
                    left: ctx.left.iter().cloned().chain(visible(&left)).collect(),
                    right: visible(&right)
                        .into_iter()
                        .chain(ctx.right.iter().cloned())
                        .collect(),
                };
                ExprNode::DelimPair {
                    body: self.arrays_seq(body, &inner)?,
                    left,
                    right,
                }
            }
            ExprNode::Array(arr) => {
                if arr.col_spec.is_some() && is_sparse(&arr) {
                    return Err(Rejection::SparseArray);
                }
                let rows = arr
                    .rows
                    .into_iter()
                    .map(|row| {
                        row.into_iter()
                            .map(|cell| self.arrays_seq(cell, fresh))
                            .collect::<Result<Vec<_>, _>>()
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                ExprNode::Array(ArrayEnv { rows, ..arr })
            }
        })
    }

    fn canonical_columns(&self, mut arr: ArrayEnv) -> ArrayEnv {
        if self.cfg.mode == Mode::Gt {
            if let Some(cols) = arr.col_spec.as_mut() {
                cols.iter_mut().for_each(|c| *c = ColumnAlign::Center);
            }
        }
        arr
    }
}

enum Rewrite {
    Keep(ExprNode),
    Splice(Vec<ExprNode>),
}

/// Bottom-up rewrite of every sequence in the tree.
fn rewrite_seq(
    nodes: Vec<ExprNode>,
    f: &mut impl FnMut(ExprNode) -> Result<Rewrite, Rejection>,
) -> Result<Vec<ExprNode>, Rejection> {
    let mut out = Vec::with_capacity(nodes.len());
    for n in nodes {
        let n = rewrite_children(n, f)?;
        match f(n)? {
            Rewrite::Keep(n) => out.push(n),
            Rewrite::Splice(v) => out.extend(v),
        }
    }
    Ok(out)
}

fn rewrite_children(
    node: ExprNode,
    f: &mut impl FnMut(ExprNode) -> Result<Rewrite, Rejection>,
) -> Result<ExprNode, Rejection> {
    Ok(match node {
        ExprNode::Atom(_) => node,
        ExprNode::Group(c) => ExprNode::Group(rewrite_seq(c, f)?),
        ExprNode::Scripted { base, scripts } => {
            let base = rewrite_children(*base, f)?;
            let base = match f(base)? {
                Rewrite::Keep(b) => b,
                Rewrite::Splice(v) => node_from_seq(v),
            };
            let mut out = Vec::with_capacity(scripts.len());
            for s in scripts {
                out.push(Script {
                    kind: s.kind,
                    operand: rewrite_seq(s.operand, f)?,
                });
            }
            ExprNode::Scripted {
                base: Box::new(base),
                scripts: out,
            }
        }
        ExprNode::Command {
            name,
            starred,
            optional,
            args,
        } => {
            let optional = match optional {
                Some(o) => Some(rewrite_seq(o, f)?),
                None => None,
            };
            let mut out = Vec::with_capacity(args.len());
            for a in args {
                out.push(rewrite_seq(a, f)?);
            }
            ExprNode::Command {
                name,
                starred,
                optional,
                args: out,
            }
        }
        ExprNode::Array(arr) => {
            let mut rows = Vec::with_capacity(arr.rows.len());
            for row in arr.rows {
                let mut cells = Vec::with_capacity(row.len());
                for cell in row {
                    cells.push(rewrite_seq(cell, f)?);
                }
                rows.push(cells);
            }
            ExprNode::Array(ArrayEnv { rows, ..arr })
        }
        ExprNode::DelimPair { left, right, body } => ExprNode::DelimPair {
            left,
            right,
            body: rewrite_seq(body, f)?,
        },
    })
}

/// A script base built from a spliced sequence.
fn node_from_seq(mut v: Vec<ExprNode>) -> ExprNode {
    if v.len() == 1 && !matches!(v[0], ExprNode::Scripted { .. }) {
        v.pop().unwrap()
    } else {
        ExprNode::Group(v)
    }
}

fn splice_groups(nodes: Vec<ExprNode>) -> Vec<ExprNode> {
    let mut out = Vec::with_capacity(nodes.len());
    for n in nodes {
        match n {
            ExprNode::Group(c) => out.extend(splice_groups(c)),
            other => out.push(other),
        }
    }
    out
}

fn splice_cells(arr: ArrayEnv) -> Vec<ExprNode> {
    arr.rows.into_iter().flatten().flatten().collect()
}

fn is_effectively_empty(cell: &[ExprNode]) -> bool {
    cell.iter().all(|n| match n {
        ExprNode::Group(c) => is_effectively_empty(c),
        _ => false,
    })
}

fn is_sparse(arr: &ArrayEnv) -> bool {
    let cols = arr.col_spec.as_ref().map_or(0, Vec::len);
    arr.rows
        .iter()
        .any(|row| row.len() != cols || row.iter().any(|c| is_effectively_empty(c)))
}

fn merge_scripts(node: ExprNode) -> ExprNode {
    let ExprNode::Scripted { base, scripts } = node else {
        return node;
    };
    let mut sub: Option<Vec<ExprNode>> = None;
    let mut sup: Option<Vec<ExprNode>> = None;
    for s in scripts {
        let slot = match s.kind {
            ScriptKind::Sub => &mut sub,
            ScriptKind::Sup => &mut sup,
        };
        slot.get_or_insert_with(Vec::new).extend(s.operand);
    }
    let mut merged = Vec::with_capacity(2);
    if let Some(operand) = sub {
        merged.push(Script {
            kind: ScriptKind::Sub,
            operand,
        });
    }
    if let Some(operand) = sup {
        merged.push(Script {
            kind: ScriptKind::Sup,
            operand,
        });
    }
    ExprNode::Scripted {
        base,
        scripts: merged,
    }
}

const OPENERS: &[&str] = &[
    "(",
    "[",
    "\\{",
    "\\langle",
    "\\lfloor",
    "\\lceil",
    "\\lgroup",
    "\\lmoustache",
];
const CLOSERS: &[&str] = &[
    ")",
    "]",
    "\\}",
    "\\rangle",
    "\\rfloor",
    "\\rceil",
    "\\rgroup",
    "\\rmoustache",
];
const BARS: &[&str] = &[
    "|", "\\|", "\\vert", "\\Vert", "\\lvert", "\\rvert", "\\lVert", "\\rVert",
];

fn head_token(node: &ExprNode) -> Option<&Token> {
    match node {
        ExprNode::Atom(t) => Some(t),
        ExprNode::Command { name, args, .. } if args.is_empty() => Some(name),
        ExprNode::Scripted { base, .. } => head_token(base),
        _ => None,
    }
}

/// Whether an array sits between delimiter tokens of its own sequence: an
/// unmatched opener (or odd bar count) on the left, or the mirror on the
/// right.
/// Delimiter tokens surrounding a sequence, outermost first on the left.
#[derive(Debug, Default)]
struct Context {
    left: Vec<String>,
    right: Vec<String>,
}

fn owned(v: Vec<&str>) -> Vec<String> {
    v.into_iter().map(str::to_owned).collect()
}

fn visible(delim: &Token) -> Option<String> {
    (!delim.is(".")).then(|| delim.text().to_owned())
}

fn has_delim_body(node: &ExprNode) -> bool {
    match node {
        ExprNode::DelimPair { .. } => true,
        ExprNode::Scripted { base, .. } => has_delim_body(base),
        _ => false,
    }
}

/// The tokens a node contributes to its sequence once delimiter pairs are
/// written out flat. Groups, commands with arguments and arrays are opaque.
fn flat_tokens(node: &ExprNode) -> Vec<&str> {
    match node {
        ExprNode::DelimPair { left, right, body } => {
            let mut v = Vec::new();
            if !left.is(".") {
                v.push(left.text());
            }
            v.extend(body.iter().flat_map(flat_tokens));
            if !right.is(".") {
                v.push(right.text());
            }
            v
        }
        ExprNode::Scripted { base, .. } => flat_tokens(base),
        other => head_token(other)
            .map(|t| vec![t.text()])
            .unwrap_or_default(),
    }
}

/// An array counts as enclosed when an unmatched opener precedes it, an
/// unmatched closer follows it, or an odd number of some bar type sits on
/// either side (outside any bracket pair).
fn enclosed(left: &[&str], right: &[&str]) -> bool {
    fn scan<'a>(items: impl Iterator<Item = &'a str>, outward: &[&str], inward: &[&str]) -> bool {
        let mut depth = 0usize;
        let mut bars: BTreeMap<&str, usize> = BTreeMap::new();
        for t in items {
            if inward.contains(&t) {
                depth += 1;
            } else if outward.contains(&t) {
                if depth == 0 {
                    return true;
                }
                depth -= 1;
            } else if depth == 0 && BARS.contains(&t) {
                *bars.entry(t).or_default() += 1;
            }
        }
        bars.values().any(|c| c % 2 == 1)
    }
    scan(left.iter().rev().copied(), OPENERS, CLOSERS)
        || scan(right.iter().copied(), CLOSERS, OPENERS)
}

/// Corpus vocabulary before and after normalization.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct VocabStats {
    pub vocab_before: usize,
    pub vocab_after: usize,
    pub removed_tokens: BTreeSet<String>,
    pub rejected_count: usize,
}

pub fn vocab_stats<S: AsRef<str>>(corpus: &[S], normalizer: &Normalizer) -> VocabStats {
    let mut before = BTreeSet::new();
    let mut after = BTreeSet::new();
    let mut rejected = 0;
    for line in corpus {
        let Ok(seq) = tokenize_with_cap(line.as_ref(), normalizer.cfg.max_input_chars) else {
            rejected += 1;
            continue;
        };
        before.extend(seq.iter().map(|t| t.text().to_owned()));
        match normalizer.normalize_tokens(&seq) {
            Ok(out) => after.extend(out.iter().map(|t| t.text().to_owned())),
            Err(_) => rejected += 1,
        }
    }
    VocabStats {
        vocab_before: before.len(),
        vocab_after: after.len(),
        removed_tokens: before.difference(&after).cloned().collect(),
        rejected_count: rejected,
    }
}

#[cfg(test)]
mod tests;
