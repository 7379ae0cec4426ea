//! Helpers shared by the integration tests: independent oracles, fuzz case
//! builders and the five-record pipeline fixture.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use mathnorm::imageops::GrayImage;
use mathnorm::pipeline::{PipelineRecord, RenderSetup};
use mathnorm::{tokenize, TokenKind};
use rand::seq::SliceRandom;
use rand::Rng;

/// Edit distance by iterative deepening: the smallest `d` for which some
/// script of at most `d` single-token edits turns `a` into `b`.
pub fn brute_force_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    (0..).find(|&d| reachable(a, b, d)).unwrap()
}

fn reachable<T: PartialEq>(a: &[T], b: &[T], budget: usize) -> bool {
    if a.len().abs_diff(b.len()) > budget {
        return false;
    }
    match (a.split_first(), b.split_first()) {
        (None, None) => true,
        (None, Some(_)) | (Some(_), None) => a.len().max(b.len()) <= budget,
        (Some((x, ra)), Some((y, rb))) => {
            // an equal head can always be kept without loss
            if x == y {
                return reachable(ra, rb, budget);
            }
            budget > 0
                && (reachable(ra, rb, budget - 1)
                    || reachable(ra, b, budget - 1)
                    || reachable(a, rb, budget - 1))
        }
    }
}

pub fn random_tokens(rng: &mut impl Rng, max_len: usize, vocab: usize) -> Vec<String> {
    let len = rng.gen_range(0..=max_len);
    (0..len)
        .map(|_| ((b'a' + rng.gen_range(0..vocab) as u8) as char).to_string())
        .collect()
}

/// Wraps single letters and digits of `raw` in redundant braces. Tokens
/// inside an array column spec are left alone.
pub fn insert_braces(raw: &str, rng: &mut impl Rng, p: f64) -> String {
    let seq = tokenize(raw).expect("fixture tokenizes");
    let mut out = Vec::with_capacity(seq.len() * 2);
    let mut colspec: Option<usize> = None;
    let mut after_begin = false;
    for tok in seq.iter() {
        let text = tok.text();
        match colspec.as_mut() {
            Some(depth) => {
                match text {
                    "{" => *depth += 1,
                    "}" => *depth -= 1,
                    _ => {}
                }
                if *depth == 0 {
                    colspec = None;
                }
                out.push(text.to_owned());
                continue;
            }
            None if after_begin && text == "{" => {
                colspec = Some(1);
                after_begin = false;
                out.push(text.to_owned());
                continue;
            }
            None => {}
        }
        after_begin = tok.kind() == TokenKind::EnvBegin;
        let plain = text.len() == 1 && text.chars().all(|c| c.is_ascii_alphanumeric());
        if plain && rng.gen_bool(p) {
            out.push(format!("{{ {text} }}"));
        } else {
            out.push(text.to_owned());
        }
    }
    let joined = out.join(" ");
    if rng.gen_bool(0.2) {
        format!("{{ {joined} }}")
    } else {
        joined
    }
}

/// A scripted term with several sub- and superscripts, returned in two
/// interleavings that keep the order within each kind.
pub fn script_permutation_case(rng: &mut impl Rng, bodies: &[String]) -> (String, String) {
    const BASES: &[&str] = &["x", "\\alpha", "{ a + b }", "\\sum", "2", "\\int", "{ }"];
    let base = *BASES.choose(rng).unwrap();
    let subs: Vec<&String> = (0..rng.gen_range(1..=3))
        .map(|_| bodies.choose(rng).unwrap())
        .collect();
    let sups: Vec<&String> = (0..rng.gen_range(1..=3))
        .map(|_| bodies.choose(rng).unwrap())
        .collect();
    let render = |order: &[bool]| {
        let (mut i, mut j) = (0, 0);
        let mut s = base.to_owned();
        for &is_sub in order {
            if is_sub {
                s.push_str(&format!(" _ {{ {} }}", subs[i]));
                i += 1;
            } else {
                s.push_str(&format!(" ^ {{ {} }}", sups[j]));
                j += 1;
            }
        }
        s
    };
    let mut order: Vec<bool> = std::iter::repeat_n(true, subs.len())
        .chain(std::iter::repeat_n(false, sups.len()))
        .collect();
    let first = render(&order);
    order.shuffle(rng);
    let second = render(&order);
    let (pre, post) = (bodies.choose(rng).unwrap(), bodies.choose(rng).unwrap());
    (
        format!("{pre} {first} {post}"),
        format!("{pre} {second} {post}"),
    )
}

pub fn ink_image() -> GrayImage {
    let mut img = GrayImage::filled(16, 12, 255).unwrap();
    img.fill_rows(4..7, 0);
    img
}

/// The five records: white image, missing formula, forbidden token and two
/// that render.
pub fn pipeline_fixture(dir: &Path) -> (Vec<PipelineRecord>, Vec<RenderSetup>) {
    let white: PathBuf = dir.join("white.pgm");
    let ink: PathBuf = dir.join("ink.pgm");
    GrayImage::filled(16, 12, 255)
        .unwrap()
        .save(&white)
        .unwrap();
    ink_image().save(&ink).unwrap();
    let records = vec![
        PipelineRecord::new("r1", Some("x ^ 2"), Some(white)),
        PipelineRecord::new("r2", None, Some(ink.clone())),
        PipelineRecord::new("r3", Some("a \\cite{knuth} + b"), Some(ink.clone())),
        PipelineRecord::new("r4", Some("\\frac{a}{b}_3"), Some(ink.clone())),
        PipelineRecord::new("r5", Some("\\mathrm{d} \\ge \\left( y \\right)"), Some(ink)),
    ];
    let setups = ["cm", "charter"]
        .iter()
        .map(|f| RenderSetup::new(*f, 120).unwrap())
        .collect();
    (records, setups)
}
