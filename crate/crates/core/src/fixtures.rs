//! Seeded generator of LaTeX expressions paired with their expected
//! canonical form.
//!
//! The canonical side is assembled alongside the raw text from the same
//! random choices, without running the normalizer, so the pair can be used
//! to cross-check it.

use std::fs;
use std::io;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Fixture {
    pub raw: String,
    /// Expected GT-mode normalization, space-separated tokens.
    pub canonical: String,
}

pub fn gen_fixtures(seed: u64, n: usize) -> Vec<Fixture> {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
    };
    (0..n)
        .map(|_| {
            let depth = g.rng.gen_range(1..=3);
            let p = g.seq(Ctx::top(depth));
            Fixture {
                raw: p.raw,
                canonical: p.canon.join(" "),
            }
        })
        .collect()
}

/// Writes `raw.txt` and `canonical.txt`, one expression per line.
pub fn write_fixtures(fixtures: &[Fixture], dir: &Path) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let join = |f: fn(&Fixture) -> &str| {
        let mut s = fixtures.iter().map(f).collect::<Vec<_>>().join("\n");
        s.push('\n');
        s
    };
    fs::write(dir.join("raw.txt"), join(|f| &f.raw))?;
    fs::write(dir.join("canonical.txt"), join(|f| &f.canonical))?;
    Ok(())
}

const LETTERS: &[&str] = &["a", "b", "c", "x", "y", "z", "n", "k", "A", "B", "F", "X"];
const DIGITS: &[&str] = &["0", "1", "2", "3", "4", "5", "6", "7", "8", "9"];
const SYMBOLS: &[&str] = &[
    "+",
    "-",
    "=",
    "<",
    ">",
    ",",
    "\\alpha",
    "\\beta",
    "\\pi",
    "\\sum",
    "\\int",
    "\\infty",
    "\\times",
    "\\cdot",
    "\\partial",
    "\\leq",
];
const SYNONYMS: &[(&str, &str)] = &[
    ("\\ge", "\\geq"),
    ("\\le", "\\leq"),
    ("\\ne", "\\neq"),
    ("\\to", "\\rightarrow"),
    ("\\gets", "\\leftarrow"),
    ("\\land", "\\wedge"),
    ("\\lor", "\\vee"),
    ("\\lnot", "\\neg"),
    ("\\owns", "\\ni"),
    ("\\dag", "\\dagger"),
];
const SPACES: &[&str] = &[
    "\\,",
    "\\;",
    "\\:",
    "\\!",
    "\\quad",
    "\\qquad",
    "~",
    "\\ ",
    "\\hspace{1em}",
    "\\phantom{x}",
];
const FONTS: &[&str] = &[
    "\\mathrm",
    "\\mathbf",
    "\\mathit",
    "\\mathcal",
    "\\boldsymbol",
];
const ACCENTS: &[&str] = &["\\hat", "\\bar", "\\tilde", "\\vec", "\\overline"];
/// (raw open, raw close, canonical open, canonical close)
const DELIMS: &[(&str, &str, &str, &str)] = &[
    ("(", ")", "(", ")"),
    ("\\left(", "\\right)", "(", ")"),
    ("[", "]", "[", "]"),
    ("\\left[", "\\right]", "[", "]"),
    ("\\lbrack", "\\rbrack", "[", "]"),
    ("\\{", "\\}", "\\{", "\\}"),
    ("\\left\\{", "\\right\\}", "\\{", "\\}"),
    ("\\lbrace", "\\rbrace", "\\{", "\\}"),
    ("\\left|", "\\right|", "|", "|"),
    ("\\vert", "\\vert", "|", "|"),
];

#[derive(Debug, Clone, Copy)]
struct Ctx {
    depth: u32,
    /// Directly inside a visible delimiter pair: arrays here are matrices.
    in_delims: bool,
    allow_array: bool,
    allow_delims: bool,
    /// Inside a bar pair: nested bars would make the pairing ambiguous.
    in_bars: bool,
}

impl Ctx {
    fn top(depth: u32) -> Ctx {
        Ctx {
            depth,
            in_delims: false,
            allow_array: true,
            allow_delims: true,
            in_bars: false,
        }
    }

    fn inner(self) -> Ctx {
        Ctx {
            depth: self.depth.saturating_sub(1),
            in_delims: false,
            ..self
        }
    }
}

struct Piece {
    raw: String,
    canon: Vec<String>,
    /// Canonical form is a single node that is not scripted, so it serves
    /// as a script base without braces.
    unit: bool,
}

impl Piece {
    fn leaf(raw: &str, canon: &str) -> Piece {
        Piece {
            raw: raw.to_owned(),
            canon: vec![canon.to_owned()],
            unit: true,
        }
    }
}

struct Gen {
    rng: ChaCha8Rng,
}

impl Gen {
    fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        items.choose(&mut self.rng).expect("non-empty table")
    }

    fn chance(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }

    fn seq(&mut self, ctx: Ctx) -> Piece {
        let n = self.rng.gen_range(1..=4);
        let mut raw = Vec::new();
        let mut canon = Vec::new();
        let mut units = 0;
        let mut unit = true;
        for _ in 0..n {
            if self.chance(0.12) {
                raw.push(self.pick(SPACES).to_string());
            }
            let t = self.term(ctx);
            raw.push(t.raw);
            canon.extend(t.canon);
            units += 1;
            unit &= t.unit;
        }
        Piece {
            raw: raw.join(" "),
            canon,
            unit: unit && units == 1,
        }
    }

    fn term(&mut self, ctx: Ctx) -> Piece {
        if ctx.depth == 0 {
            return self.leaf();
        }
        match self.rng.gen_range(0..100) {
            0..=29 => self.leaf(),
            30..=49 => self.scripted(ctx),
            50..=57 => self.frac(ctx),
            58..=62 => self.sqrt(ctx),
            63..=67 => self.accent(),
            68..=77 if ctx.allow_delims => self.delimited(ctx),
            78..=85 if ctx.allow_array => self.array(ctx),
            86..=92 => {
                // redundant braces or a font switch around a subsequence
                let inner = self.seq(Ctx {
                    allow_array: false,
                    ..ctx.inner()
                });
                let raw = if self.chance(0.5) {
                    format!("{{{}}}", inner.raw)
                } else {
                    format!("{}{{{}}}", self.pick(FONTS), inner.raw)
                };
                Piece { raw, ..inner }
            }
            _ => self.leaf(),
        }
    }

    fn leaf(&mut self) -> Piece {
        match self.rng.gen_range(0..10) {
            0..=3 => {
                let l = *self.pick(LETTERS);
                match self.rng.gen_range(0..6) {
                    0 => Piece::leaf(&format!("{{{l}}}"), l),
                    1 => Piece::leaf(&format!("{}{{{l}}}", self.pick(FONTS)), l),
                    2 => Piece::leaf(&format!("{} {l}", self.pick(FONTS)), l),
                    _ => Piece::leaf(l, l),
                }
            }
            4..=5 => {
                let d = *self.pick(DIGITS);
                Piece::leaf(d, d)
            }
            6..=8 => {
                let s = *self.pick(SYMBOLS);
                Piece::leaf(s, s)
            }
            _ => {
                let (k, v) = *self.pick(SYNONYMS);
                Piece::leaf(k, v)
            }
        }
    }

    fn base(&mut self, ctx: Ctx) -> Piece {
        if ctx.depth < 2 || self.chance(0.6) {
            let mut b = self.leaf();
            // symbols such as `,` or `=` make odd bases; keep letters/digits
            while b.canon[0].len() != 1 || !b.canon[0].chars().all(char::is_alphanumeric) {
                b = self.leaf();
            }
            return b;
        }
        if self.chance(0.3) {
            return self.frac(ctx);
        }
        let inner = self.seq(Ctx {
            allow_array: false,
            allow_delims: false,
            ..ctx.inner()
        });
        let raw = if self.chance(0.7) {
            format!("{{{}}}", inner.raw)
        } else {
            format!("{}{{{}}}", self.pick(FONTS), inner.raw)
        };
        let canon = if inner.unit {
            inner.canon
        } else {
            let mut c = vec!["{".to_owned()];
            c.extend(inner.canon);
            c.push("}".to_owned());
            c
        };
        Piece {
            raw,
            canon,
            unit: true,
        }
    }

    fn operand(&mut self, ctx: Ctx) -> Piece {
        if self.chance(0.35) {
            let s = if self.chance(0.5) {
                *self.pick(DIGITS)
            } else {
                *self.pick(LETTERS)
            };
            return Piece::leaf(s, s);
        }
        let p = self.seq(ctx.inner());
        Piece {
            raw: format!("{{{}}}", p.raw),
            ..p
        }
    }

    fn scripted(&mut self, ctx: Ctx) -> Piece {
        let base = self.base(ctx);
        let (n_sub, n_sup) = loop {
            let (a, b) = (self.rng.gen_range(0..=2), self.rng.gen_range(0..=2));
            if a + b > 0 {
                break (a, b);
            }
        };
        let mut kinds: Vec<bool> = (0..n_sub)
            .map(|_| true)
            .chain((0..n_sup).map(|_| false))
            .collect();
        kinds.shuffle(&mut self.rng);

        let mut raw = base.raw;
        let (mut subs, mut sups) = (Vec::new(), Vec::new());
        for is_sub in kinds {
            let op = self.operand(ctx);
            raw.push(if is_sub { '_' } else { '^' });
            raw.push_str(&op.raw);
            if is_sub { &mut subs } else { &mut sups }.extend(op.canon);
        }
        let mut canon = base.canon;
        for (mark, ops) in [("_", subs), ("^", sups)] {
            if !ops.is_empty() {
                canon.push(mark.to_owned());
                canon.push("{".to_owned());
                canon.extend(ops);
                canon.push("}".to_owned());
            }
        }
        Piece {
            raw,
            canon,
            unit: false,
        }
    }

    fn braced_arg(canon: &mut Vec<String>, arg: Vec<String>) {
        canon.push("{".to_owned());
        canon.extend(arg);
        canon.push("}".to_owned());
    }

    fn frac(&mut self, ctx: Ctx) -> Piece {
        if self.chance(0.15) {
            let (a, b) = (*self.pick(DIGITS), *self.pick(DIGITS));
            return Piece {
                raw: format!("\\frac{a}{b}"),
                canon: ["\\frac", "{", a, "}", "{", b, "}"]
                    .map(str::to_owned)
                    .to_vec(),
                unit: true,
            };
        }
        let num = self.seq(ctx.inner());
        let den = self.seq(ctx.inner());
        let mut canon = vec!["\\frac".to_owned()];
        Self::braced_arg(&mut canon, num.canon);
        Self::braced_arg(&mut canon, den.canon);
        Piece {
            raw: format!("\\frac{{{}}}{{{}}}", num.raw, den.raw),
            canon,
            unit: true,
        }
    }

    fn sqrt(&mut self, ctx: Ctx) -> Piece {
        let body = self.seq(ctx.inner());
        let mut canon = vec!["\\sqrt".to_owned()];
        let mut raw = "\\sqrt".to_owned();
        if self.chance(0.3) {
            let d = *self.pick(DIGITS);
            raw.push_str(&format!("[{d}]"));
            canon.extend(["[", d, "]"].map(str::to_owned));
        }
        raw.push_str(&format!("{{{}}}", body.raw));
        Self::braced_arg(&mut canon, body.canon);
        Piece {
            raw,
            canon,
            unit: true,
        }
    }

    fn accent(&mut self) -> Piece {
        let a = *self.pick(ACCENTS);
        let l = *self.pick(LETTERS);
        let raw = if self.chance(0.5) {
            format!("{a}{{{l}}}")
        } else {
            format!("{a} {l}")
        };
        Piece {
            raw,
            canon: [a, "{", l, "}"].map(str::to_owned).to_vec(),
            unit: true,
        }
    }

    fn delimited(&mut self, ctx: Ctx) -> Piece {
        let (ro, rc, co, cc) = loop {
            let d = *self.pick(DELIMS);
            if !(ctx.in_bars && d.2 == "|") {
                break d;
            }
        };
        let body = self.seq(Ctx {
            in_delims: true,
            in_bars: ctx.in_bars || co == "|",
            ..ctx.inner()
        });
        let mut canon = vec![co.to_owned()];
        canon.extend(body.canon);
        canon.push(cc.to_owned());
        Piece {
            raw: format!("{ro} {} {rc}", body.raw),
            canon,
            unit: false,
        }
    }

    fn array(&mut self, ctx: Ctx) -> Piece {
        let rows = self.rng.gen_range(1..=3);
        let cols = self.rng.gen_range(1..=3);
        let spec: Vec<&str> = (0..cols).map(|_| *self.pick(&["l", "c", "r"])).collect();
        let cell_ctx = Ctx {
            depth: ctx.depth.saturating_sub(1).min(1),
            in_delims: false,
            allow_array: false,
            allow_delims: false,
            in_bars: false,
        };
        let mut raw_rows = Vec::new();
        let mut cells: Vec<Vec<Vec<String>>> = Vec::new();
        for _ in 0..rows {
            let row: Vec<Piece> = (0..cols).map(|_| self.seq(cell_ctx)).collect();
            raw_rows.push(
                row.iter()
                    .map(|c| c.raw.as_str())
                    .collect::<Vec<_>>()
                    .join(" & "),
            );
            cells.push(row.into_iter().map(|c| c.canon).collect());
        }
        let trailing = if self.chance(0.3) { " \\\\" } else { "" };
        let raw = format!(
            "\\begin{{array}}{{{}}} {}{trailing} \\end{{array}}",
            spec.concat(),
            raw_rows.join(" \\\\ ")
        );

        let canon = if ctx.in_delims {
            let mut c = vec!["\\begin{array}".to_owned(), "{".to_owned()];
            c.extend((0..cols).map(|_| "c".to_owned()));
            c.push("}".to_owned());
            for (r, row) in cells.into_iter().enumerate() {
                if r > 0 {
                    c.push("\\\\".to_owned());
                }
                for (k, cell) in row.into_iter().enumerate() {
                    if k > 0 {
                        c.push("&".to_owned());
                    }
                    c.extend(cell);
                }
            }
            c.push("\\end{array}".to_owned());
            c
        } else {
            cells.into_iter().flatten().flatten().collect()
        };
        Piece {
            raw,
            canon,
            unit: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{normalize, NormConfig};

    #[test]
    fn same_seed_same_output() {
        assert_eq!(gen_fixtures(1, 3), gen_fixtures(1, 3));
        assert_ne!(gen_fixtures(1, 3), gen_fixtures(2, 3));
    }

    #[test]
    fn canonical_side_matches_normalizer() {
        let cfg = NormConfig::default();
        for f in gen_fixtures(7, 300) {
            let got = normalize(&f.raw, &cfg).map(|t| t.to_string());
            assert_eq!(got.as_deref(), Ok(f.canonical.as_str()), "raw: {}", f.raw);
        }
    }
}
