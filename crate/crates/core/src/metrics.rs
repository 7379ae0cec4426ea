//! Edit score, Bleu-4, exact match and Levenshtein operation analysis.
//!
//! Edit operations are expressed as corrections that turn the prediction
//! into the ground truth: an insert is a ground-truth token missing from the
//! prediction, a delete is a surplus predicted token, and a replace is the
//! pair (ground-truth token, predicted token).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::normalizer::Normalizer;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("k must be at least 1")]
    InvalidK,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct EditOps {
    pub distance: usize,
    pub inserts: Vec<String>,
    pub deletes: Vec<String>,
    pub replaces: Vec<(String, String)>,
}

/// Unit-cost Levenshtein distance with one optimal alignment.
///
/// The alignment is recovered from the sequence ends, preferring match over
/// replace over delete over insert whenever several moves are optimal.
pub fn levenshtein<G: AsRef<str>, P: AsRef<str>>(gt: &[G], pre: &[P]) -> EditOps {
    let (n, m) = (gt.len(), pre.len());
    let width = m + 1;
    let mut d = vec![0usize; (n + 1) * width];
    for (j, cell) in d[..width].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=n {
        d[i * width] = i;
        for j in 1..=m {
            let cost = usize::from(gt[i - 1].as_ref() != pre[j - 1].as_ref());
            d[i * width + j] = (d[(i - 1) * width + j - 1] + cost)
                .min(d[i * width + j - 1] + 1)
                .min(d[(i - 1) * width + j] + 1);
        }
    }

    let mut ops = EditOps {
        distance: d[n * width + m],
        ..Default::default()
    };
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = d[i * width + j];
        if i > 0 && j > 0 {
            let diag = d[(i - 1) * width + j - 1];
            let (g, p) = (gt[i - 1].as_ref(), pre[j - 1].as_ref());
            if g == p && here == diag {
                i -= 1;
                j -= 1;
                continue;
            }
            if g != p && here == diag + 1 {
                ops.replaces.push((g.to_owned(), p.to_owned()));
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if j > 0 && here == d[i * width + j - 1] + 1 {
            ops.deletes.push(pre[j - 1].as_ref().to_owned());
            j -= 1;
        } else {
            ops.inserts.push(gt[i - 1].as_ref().to_owned());
            i -= 1;
        }
    }
    ops.inserts.reverse();
    ops.deletes.reverse();
    ops.replaces.reverse();
    ops
}

/// `(1 - distance / max_len) * 100`. A zero `max_len` (both sequences empty)
/// scores 100.
pub fn edit_score_from(distance: usize, max_len: usize) -> f64 {
    if max_len == 0 {
        return 100.0;
    }
    (1.0 - distance as f64 / max_len as f64) * 100.0
}

pub fn edit_score<G: AsRef<str>, P: AsRef<str>>(gt: &[G], pre: &[P]) -> f64 {
    let max_len = gt.len().max(pre.len());
    edit_score_from(levenshtein(gt, pre).distance, max_len)
}

/// Relative reduction of the edit error rate (100 minus edit score) when the
/// score moves from `before` to `after`, in percent.
pub fn error_rate_reduction(before: f64, after: f64) -> f64 {
    let (e0, e1) = (100.0 - before, 100.0 - after);
    if e0 == 0.0 {
        return 0.0;
    }
    (e0 - e1) / e0 * 100.0
}

/// Clipped n-gram matches and candidate totals for n = 1..=4 plus lengths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct BleuCounts {
    pub matches: [usize; 4],
    pub totals: [usize; 4],
    pub gt_len: usize,
    pub pre_len: usize,
}

impl BleuCounts {
    pub fn of<G: AsRef<str>, P: AsRef<str>>(gt: &[G], pre: &[P]) -> BleuCounts {
        let mut c = BleuCounts {
            gt_len: gt.len(),
            pre_len: pre.len(),
            ..Default::default()
        };
        let gt: Vec<&str> = gt.iter().map(AsRef::as_ref).collect();
        let pre: Vec<&str> = pre.iter().map(AsRef::as_ref).collect();
        for n in 1..=4 {
            if pre.len() < n {
                break;
            }
            let reference = ngram_counts(&gt, n);
            let candidate = ngram_counts(&pre, n);
            c.totals[n - 1] = pre.len() + 1 - n;
            c.matches[n - 1] = candidate
                .iter()
                .map(|(g, &k)| k.min(reference.get(g).copied().unwrap_or(0)))
                .sum();
        }
        c
    }

    pub fn merge(&mut self, other: &BleuCounts) {
        for n in 0..4 {
            self.matches[n] += other.matches[n];
            self.totals[n] += other.totals[n];
        }
        self.gt_len += other.gt_len;
        self.pre_len += other.pre_len;
    }

    /// Geometric mean of the precisions for every order with candidates
    /// (at most 4), times the brevity penalty, in percent. No smoothing.
    pub fn score(&self) -> f64 {
        let orders = self.totals.iter().take_while(|&&t| t > 0).count();
        if orders == 0 {
            return 0.0;
        }
        let mut log_sum = 0.0;
        for n in 0..orders {
            if self.matches[n] == 0 {
                return 0.0;
            }
            log_sum += (self.matches[n] as f64 / self.totals[n] as f64).ln();
        }
        let bp = if self.pre_len < self.gt_len {
            (1.0 - self.gt_len as f64 / self.pre_len as f64).exp()
        } else {
            1.0
        };
        bp * (log_sum / orders as f64).exp() * 100.0
    }
}

fn ngram_counts<'a>(seq: &'a [&'a str], n: usize) -> HashMap<&'a [&'a str], usize> {
    let mut out = HashMap::new();
    for w in seq.windows(n) {
        *out.entry(w).or_insert(0) += 1;
    }
    out
}

pub fn bleu4<G: AsRef<str>, P: AsRef<str>>(gt: &[G], pre: &[P]) -> f64 {
    BleuCounts::of(gt, pre).score()
}

pub fn exact_match<G: AsRef<str>, P: AsRef<str>>(gt: &[G], pre: &[P]) -> bool {
    gt.len() == pre.len() && gt.iter().zip(pre).all(|(g, p)| g.as_ref() == p.as_ref())
}

/// Exact match after both sides pass through the same normalizer. A side
/// that is rejected never matches.
pub fn exact_match_normalized(gt: &str, pre: &str, normalizer: &Normalizer) -> bool {
    match (normalizer.normalize(gt), normalizer.normalize(pre)) {
        (Ok(g), Ok(p)) => g.tokens == p.tokens,
        _ => false,
    }
}

/// One ground-truth/prediction pair of token texts.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EvalPair {
    pub gt: Vec<String>,
    pub pre: Vec<String>,
    pub multi_line: bool,
}

impl EvalPair {
    pub fn new<S: AsRef<str>>(gt: &[S], pre: &[S]) -> EvalPair {
        EvalPair {
            gt: gt.iter().map(|s| s.as_ref().to_owned()).collect(),
            pre: pre.iter().map(|s| s.as_ref().to_owned()).collect(),
            multi_line: false,
        }
    }

    /// Splits whitespace-separated token lines.
    pub fn from_lines(gt: &str, pre: &str) -> EvalPair {
        EvalPair {
            gt: gt.split_whitespace().map(str::to_owned).collect(),
            pre: pre.split_whitespace().map(str::to_owned).collect(),
            multi_line: false,
        }
    }

    pub fn with_multi_line(mut self, multi_line: bool) -> EvalPair {
        self.multi_line = multi_line;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairScore {
    pub edit: f64,
    pub bleu: BleuCounts,
    pub exact: bool,
    pub ops: EditOps,
}

pub fn score_pair(pair: &EvalPair) -> PairScore {
    let ops = levenshtein(&pair.gt, &pair.pre);
    PairScore {
        edit: edit_score_from(ops.distance, pair.gt.len().max(pair.pre.len())),
        bleu: BleuCounts::of(&pair.gt, &pair.pre),
        exact: exact_match(&pair.gt, &pair.pre),
        ops,
    }
}

/// Order-independent corpus totals; merge partial accumulators freely.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusAccumulator {
    pub pairs: usize,
    pub edit_sum: f64,
    pub exact: usize,
    pub summed_errors: usize,
    pub both_empty: usize,
    pub bleu: BleuCounts,
}

impl CorpusAccumulator {
    pub fn add(&mut self, pair: &EvalPair, score: &PairScore) {
        self.pairs += 1;
        self.edit_sum += score.edit;
        self.exact += usize::from(score.exact);
        self.summed_errors += score.ops.distance;
        self.both_empty += usize::from(pair.gt.is_empty() && pair.pre.is_empty());
        self.bleu.merge(&score.bleu);
    }

    pub fn merge(&mut self, other: &CorpusAccumulator) {
        self.pairs += other.pairs;
        self.edit_sum += other.edit_sum;
        self.exact += other.exact;
        self.summed_errors += other.summed_errors;
        self.both_empty += other.both_empty;
        self.bleu.merge(&other.bleu);
    }

    pub fn report(&self) -> ScoreReport {
        let n = self.pairs.max(1) as f64;
        ScoreReport {
            pairs: self.pairs,
            edit_score: self.edit_sum / n,
            bleu4: self.bleu.score(),
            exact_match: self.exact as f64 / n * 100.0,
            summed_errors: self.summed_errors,
            both_empty_pairs: self.both_empty,
            breakdowns: BTreeMap::new(),
        }
    }
}

/// Corpus scores. Edit and exact match are macro averages over pairs; Bleu-4
/// is computed from pooled n-gram counts with a corpus brevity penalty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreReport {
    pub pairs: usize,
    pub edit_score: f64,
    pub bleu4: f64,
    pub exact_match: f64,
    pub summed_errors: usize,
    /// Pairs where both sides were empty and scored 100 by convention.
    pub both_empty_pairs: usize,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub breakdowns: BTreeMap<String, ScoreReport>,
}

type Predicate = Arc<dyn Fn(&EvalPair) -> bool + Send + Sync>;

/// A named subset of the corpus, optionally with a named complement.
#[derive(Clone)]
pub struct Filter {
    pub name: String,
    pub complement: Option<String>,
    predicate: Predicate,
}

impl fmt::Debug for Filter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Filter")
            .field("name", &self.name)
            .field("complement", &self.complement)
            .finish()
    }
}

impl Filter {
    pub fn custom(
        name: impl Into<String>,
        complement: Option<String>,
        predicate: impl Fn(&EvalPair) -> bool + Send + Sync + 'static,
    ) -> Filter {
        Filter {
            name: name.into(),
            complement,
            predicate: Arc::new(predicate),
        }
    }

    /// `A` / `nA`: ground truth contains `\begin{array}`.
    pub fn array() -> Filter {
        Filter::custom("A", Some("nA".into()), |p| {
            p.gt.iter().any(|t| t == "\\begin{array}")
        })
    }

    /// `MF` / `nMF`: ground truth contains any of the given font commands.
    pub fn math_font(fonts: BTreeSet<String>) -> Filter {
        Filter::custom("MF", Some("nMF".into()), move |p| {
            p.gt.iter().any(|t| fonts.contains(t))
        })
    }

    /// `M` / `S`: caller-flagged multi-line pairs.
    pub fn multi_line() -> Filter {
        Filter::custom("M", Some("S".into()), |p| p.multi_line)
    }

    pub fn matches(&self, pair: &EvalPair) -> bool {
        (self.predicate)(pair)
    }
}

pub fn corpus_score(pairs: &[EvalPair], filters: &[Filter]) -> Result<ScoreReport, MetricsError> {
    let scores: Vec<PairScore> = pairs.iter().map(score_pair).collect();
    corpus_report(pairs, &scores, filters)
}

/// Builds the report from precomputed pair scores.
pub fn corpus_report(
    pairs: &[EvalPair],
    scores: &[PairScore],
    filters: &[Filter],
) -> Result<ScoreReport, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    let mut all = CorpusAccumulator::default();
    for (p, s) in pairs.iter().zip(scores) {
        all.add(p, s);
    }
    let mut report = all.report();
    for f in filters {
        let mut hit = CorpusAccumulator::default();
        let mut miss = CorpusAccumulator::default();
        for (p, s) in pairs.iter().zip(scores) {
            if f.matches(p) {
                hit.add(p, s);
            } else {
                miss.add(p, s);
            }
        }
        if hit.pairs > 0 {
            report.breakdowns.insert(f.name.clone(), hit.report());
        }
        if let Some(name) = &f.complement {
            if miss.pairs > 0 {
                report.breakdowns.insert(name.clone(), miss.report());
            }
        }
    }
    Ok(report)
}

/// Aggregated operation counts over a corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OpCounts {
    pub inserts: BTreeMap<String, usize>,
    pub deletes: BTreeMap<String, usize>,
    pub replaces: BTreeMap<(String, String), usize>,
}

impl OpCounts {
    pub fn add(&mut self, ops: &EditOps) {
        for t in &ops.inserts {
            *self.inserts.entry(t.clone()).or_default() += 1;
        }
        for t in &ops.deletes {
            *self.deletes.entry(t.clone()).or_default() += 1;
        }
        for pair in &ops.replaces {
            *self.replaces.entry(pair.clone()).or_default() += 1;
        }
    }

    pub fn merge(&mut self, other: &OpCounts) {
        for (k, v) in &other.inserts {
            *self.inserts.entry(k.clone()).or_default() += v;
        }
        for (k, v) in &other.deletes {
            *self.deletes.entry(k.clone()).or_default() += v;
        }
        for (k, v) in &other.replaces {
            *self.replaces.entry(k.clone()).or_default() += v;
        }
    }

    pub fn total(&self) -> usize {
        self.inserts.values().sum::<usize>()
            + self.deletes.values().sum::<usize>()
            + self.replaces.values().sum::<usize>()
    }

    pub fn tables(&self, k: usize) -> OpTables {
        OpTables {
            inserts: top_k(&self.inserts, k),
            deletes: top_k(&self.deletes, k),
            replaces: top_k(&self.replaces, k)
                .into_iter()
                .map(|((g, p), c)| (g, p, c))
                .collect(),
            total_inserts: self.inserts.values().sum(),
            total_deletes: self.deletes.values().sum(),
            total_replaces: self.replaces.values().sum(),
        }
    }
}

/// Most frequent operations; counts descending, ties in lexicographic order.
fn top_k<K: Ord + Clone>(counts: &BTreeMap<K, usize>, k: usize) -> Vec<(K, usize)> {
    let mut v: Vec<(K, usize)> = counts.iter().map(|(t, &c)| (t.clone(), c)).collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v.truncate(k);
    v
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OpTables {
    pub inserts: Vec<(String, usize)>,
    pub deletes: Vec<(String, usize)>,
    /// (ground-truth token, predicted token, count)
    pub replaces: Vec<(String, String, usize)>,
    pub total_inserts: usize,
    pub total_deletes: usize,
    pub total_replaces: usize,
}

impl OpTables {
    pub fn total(&self) -> usize {
        self.total_inserts + self.total_deletes + self.total_replaces
    }
}

pub fn op_analysis(pairs: &[EvalPair], k: usize) -> Result<OpTables, MetricsError> {
    if k == 0 {
        return Err(MetricsError::InvalidK);
    }
    if pairs.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    let mut counts = OpCounts::default();
    for p in pairs {
        counts.add(&levenshtein(&p.gt, &p.pre));
    }
    Ok(counts.tables(k))
}
