//! Dataset build pipeline: checks each record, normalizes its formula,
//! renders it once per setup and accounts for every dropped record.
//!
//! Outputs in the output directory:
//! - `journal.jsonl`: one line per finished record, used by `resume`
//! - `manifest.tsv`: one line per rendered image of a kept record
//! - `manual_review.tsv`: records with a missing formula
//! - `images/<id>/<font>_<dpi>.<ext>`

mod journal;
mod render;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::thread;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imageops::{self, GrayImage};
use crate::normalizer::{ConfigError, NormConfig, Normalizer, Rejection};
use crate::parser::Mode;
use crate::tokenizer::detokenize;

pub use journal::{Journal, JOURNAL_FILE};
pub use render::{CommandRenderer, MockRenderer, RenderJob, Renderer};

pub const MANIFEST_FILE: &str = "manifest.tsv";
pub const MANUAL_REVIEW_FILE: &str = "manual_review.tsv";
pub const MANIFEST_HEADER: &str = "id\tfont\tdpi\timage\ttokens";
pub const DEFAULT_SPLIT: &str = "train";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("renderer unavailable: {0}")]
    RendererUnavailable(String),
    #[error("journal corrupt at line {line}: {message}")]
    JournalCorrupt { line: usize, message: String },
    #[error("no records to process")]
    EmptyRecords,
    #[error("duplicate record id {0:?}")]
    DuplicateId(String),
    #[error("{path}:{line}: {message}")]
    BadInputLine {
        path: String,
        line: usize,
        message: String,
    },
    #[error("invalid render setup: {0}")]
    BadSetup(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineRecord {
    pub id: String,
    pub formula: Option<String>,
    pub image: Option<PathBuf>,
    pub split: String,
}

impl PipelineRecord {
    pub fn new(id: impl Into<String>, formula: Option<&str>, image: Option<PathBuf>) -> Self {
        PipelineRecord {
            id: id.into(),
            formula: formula.map(str::to_owned),
            image,
            split: DEFAULT_SPLIT.to_owned(),
        }
    }

    pub fn in_split(mut self, split: impl Into<String>) -> Self {
        self.split = split.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RenderSetup {
    pub font: String,
    pub dpi: u32,
}

impl RenderSetup {
    pub const STANDARD_DPI: [u32; 4] = [100, 200, 300, 600];

    pub fn new(font: impl Into<String>, dpi: u32) -> Result<RenderSetup, PipelineError> {
        let font = font.into();
        if font.trim().is_empty() {
            return Err(PipelineError::BadSetup("empty font name".to_owned()));
        }
        if dpi == 0 {
            return Err(PipelineError::BadSetup(format!(
                "{font}: dpi must be positive"
            )));
        }
        if !Self::STANDARD_DPI.contains(&dpi) {
            log::warn!("{font}: non-standard resolution {dpi} dpi");
        }
        Ok(RenderSetup { font, dpi })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum RecordStatus {
    Kept,
    DroppedWhiteImage,
    FlaggedManualCheck,
    DroppedNormalization {
        reason: Rejection,
    },
    DroppedRenderError {
        font: String,
        dpi: u32,
        message: String,
    },
    /// Formula was missing but supplied by the corrections table, then kept.
    Corrected,
}

impl RecordStatus {
    pub fn is_kept(&self) -> bool {
        matches!(self, RecordStatus::Kept | RecordStatus::Corrected)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedImage {
    pub font: String,
    pub dpi: u32,
    /// Relative to the output directory.
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordOutcome {
    pub id: String,
    pub split: String,
    #[serde(flatten)]
    pub status: RecordStatus,
    /// GT-mode canonical tokens, space separated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub images: Vec<RenderedImage>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub white_image: usize,
    pub empty_me: usize,
    pub normalization: usize,
    pub rendering: usize,
    pub corrected: usize,
    pub kept: usize,
}

impl SplitCounts {
    pub fn add(&mut self, status: &RecordStatus) {
        match status {
            RecordStatus::Kept => self.kept += 1,
            RecordStatus::DroppedWhiteImage => self.white_image += 1,
            RecordStatus::FlaggedManualCheck => self.empty_me += 1,
            RecordStatus::DroppedNormalization { .. } => self.normalization += 1,
            RecordStatus::DroppedRenderError { .. } => self.rendering += 1,
            RecordStatus::Corrected => self.corrected += 1,
        }
    }

    pub fn merge(&mut self, other: &SplitCounts) {
        self.white_image += other.white_image;
        self.empty_me += other.empty_me;
        self.normalization += other.normalization;
        self.rendering += other.rendering;
        self.corrected += other.corrected;
        self.kept += other.kept;
    }

    pub fn total(&self) -> usize {
        self.white_image
            + self.empty_me
            + self.normalization
            + self.rendering
            + self.corrected
            + self.kept
    }
}

/// Drop accounting per split, shaped like the usual dataset-cleaning table.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub splits: BTreeMap<String, SplitCounts>,
    /// Normalization drops by rejection code.
    pub normalization_reasons: BTreeMap<String, usize>,
}

impl PipelineReport {
    pub fn from_outcomes<'a>(outcomes: impl IntoIterator<Item = &'a RecordOutcome>) -> Self {
        let mut report = PipelineReport::default();
        for o in outcomes {
            report.add(o);
        }
        report
    }

    pub fn add(&mut self, outcome: &RecordOutcome) {
        self.splits
            .entry(outcome.split.clone())
            .or_default()
            .add(&outcome.status);
        if let RecordStatus::DroppedNormalization { reason } = &outcome.status {
            *self
                .normalization_reasons
                .entry(reason.code().to_owned())
                .or_default() += 1;
        }
    }

    pub fn merge(&mut self, other: &PipelineReport) {
        for (split, counts) in &other.splits {
            self.splits.entry(split.clone()).or_default().merge(counts);
        }
        for (code, n) in &other.normalization_reasons {
            *self.normalization_reasons.entry(code.clone()).or_default() += n;
        }
    }

    /// Sum over all splits.
    pub fn totals(&self) -> SplitCounts {
        let mut t = SplitCounts::default();
        for c in self.splits.values() {
            t.merge(c);
        }
        t
    }
}

impl fmt::Display for PipelineReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: [(&str, fn(&SplitCounts) -> usize); 7] = [
            ("white image", |c| c.white_image),
            ("empty ME", |c| c.empty_me),
            ("normalization step", |c| c.normalization),
            ("rendering errors", |c| c.rendering),
            ("corrected", |c| c.corrected),
            ("kept", |c| c.kept),
            ("total", |c| c.total()),
        ];
        write!(f, "{:<20}", "")?;
        for split in self.splits.keys() {
            write!(f, "{split:>10}")?;
        }
        writeln!(f)?;
        for (label, get) in rows {
            write!(f, "{label:<20}")?;
            for c in self.splits.values() {
                write!(f, "{:>10}", get(c))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub out_dir: PathBuf,
    pub jobs: usize,
    /// Reuse outcomes already in the journal.
    pub resume: bool,
    /// When false, records without a source image skip the blank check.
    pub require_source_image: bool,
    pub white_threshold: u8,
    /// Replacement formulas for records whose formula is missing.
    pub corrections: HashMap<String, String>,
}

impl PipelineOptions {
    pub fn new(out_dir: impl Into<PathBuf>) -> PipelineOptions {
        PipelineOptions {
            out_dir: out_dir.into(),
            jobs: 1,
            resume: false,
            require_source_image: true,
            white_threshold: imageops::DEFAULT_WHITE_THRESHOLD,
            corrections: HashMap::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub report: PipelineReport,
    /// In input order.
    pub outcomes: Vec<RecordOutcome>,
    /// Records taken from the journal instead of being reprocessed.
    pub resumed: usize,
}

pub fn run_pipeline(
    records: &[PipelineRecord],
    setups: &[RenderSetup],
    renderer: &dyn Renderer,
    cfg: &NormConfig,
    opts: &PipelineOptions,
) -> Result<PipelineRun, PipelineError> {
    if records.is_empty() {
        return Err(PipelineError::EmptyRecords);
    }
    let mut seen = HashSet::new();
    for r in records {
        if !seen.insert(r.id.as_str()) {
            return Err(PipelineError::DuplicateId(r.id.clone()));
        }
    }
    renderer.check_available()?;

    let gt = Normalizer::new(cfg.clone().with_mode(Mode::Gt))?;
    let rendering = gt.with_mode(Mode::Rendering);

    fs::create_dir_all(opts.out_dir.join("images"))?;
    let scratch = opts.out_dir.join("tmp");
    fs::create_dir_all(&scratch)?;

    let (mut journal, previous) = if opts.resume {
        Journal::resume(&opts.out_dir)?
    } else {
        (Journal::create(&opts.out_dir)?, Vec::new())
    };
    let mut done: HashMap<String, RecordOutcome> = previous
        .into_iter()
        .filter(|o| seen.contains(o.id.as_str()))
        .map(|o| (o.id.clone(), o))
        .collect();
    let resumed = done.len();
    let pending: Vec<&PipelineRecord> = records
        .iter()
        .filter(|r| !done.contains_key(&r.id))
        .collect();
    log::info!(
        "{} records, {} already journaled, {} setups",
        records.len(),
        resumed,
        setups.len()
    );

    let ctx = Context {
        setups,
        renderer,
        gt: &gt,
        rendering: &rendering,
        opts,
        scratch: &scratch,
    };
    let next = AtomicUsize::new(0);
    let jobs = opts.jobs.max(1).min(pending.len().max(1));
    let write_result = thread::scope(|s| -> Result<(), PipelineError> {
        let (tx, rx) = mpsc::channel::<RecordOutcome>();
        for _ in 0..jobs {
            let tx = tx.clone();
            let (ctx, next, pending) = (&ctx, &next, &pending);
            s.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(record) = pending.get(i) else { break };
                if tx.send(ctx.process(record)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        // single writer: the journal is only touched from this thread
        for outcome in rx {
            journal.append(&outcome)?;
            done.insert(outcome.id.clone(), outcome);
        }
        Ok(())
    });
    write_result?;
    let _ = fs::remove_dir(&scratch);

    let outcomes: Vec<RecordOutcome> = records
        .iter()
        .map(|r| done.remove(&r.id).expect("every record has an outcome"))
        .collect();
    write_manifest(&outcomes, &opts.out_dir.join(MANIFEST_FILE))?;
    write_manual_review(records, &outcomes, &opts.out_dir.join(MANUAL_REVIEW_FILE))?;
    Ok(PipelineRun {
        report: PipelineReport::from_outcomes(&outcomes),
        outcomes,
        resumed,
    })
}

struct Context<'a> {
    setups: &'a [RenderSetup],
    renderer: &'a dyn Renderer,
    gt: &'a Normalizer,
    rendering: &'a Normalizer,
    opts: &'a PipelineOptions,
    scratch: &'a Path,
}

impl Context<'_> {
    fn process(&self, record: &PipelineRecord) -> RecordOutcome {
        let outcome = |status| RecordOutcome {
            id: record.id.clone(),
            split: record.split.clone(),
            status,
            tokens: None,
            images: Vec::new(),
        };

        if !self.source_image_ok(record) {
            return outcome(RecordStatus::DroppedWhiteImage);
        }

        let mut corrected = false;
        let formula = match record.formula.as_deref().filter(|f| !f.trim().is_empty()) {
            Some(f) => f,
            None => match self.opts.corrections.get(&record.id) {
                Some(f) => {
                    corrected = true;
                    f.as_str()
                }
                None => return outcome(RecordStatus::FlaggedManualCheck),
            },
        };

        let tokens = match self.gt.normalize(formula) {
            Ok(t) => t,
            Err(reason) => return outcome(RecordStatus::DroppedNormalization { reason }),
        };
        let render_text = match self.rendering.normalize(formula) {
            Ok(t) => detokenize(&t),
            Err(reason) => return outcome(RecordStatus::DroppedNormalization { reason }),
        };

        let mut images = Vec::with_capacity(self.setups.len());
        for setup in self.setups {
            match self.render_one(record, &render_text, setup) {
                Ok(img) => images.push(img),
                Err(message) => {
                    for img in &images {
                        let _ = fs::remove_file(self.opts.out_dir.join(&img.path));
                    }
                    log::warn!("{}: render failed for {}: {message}", record.id, setup.font);
                    return outcome(RecordStatus::DroppedRenderError {
                        font: setup.font.clone(),
                        dpi: setup.dpi,
                        message,
                    });
                }
            }
        }
        RecordOutcome {
            status: if corrected {
                RecordStatus::Corrected
            } else {
                RecordStatus::Kept
            },
            tokens: Some(tokens.to_string()),
            images,
            ..outcome(RecordStatus::Kept)
        }
    }

    /// A missing, unreadable or all-white source image fails the check.
    fn source_image_ok(&self, record: &PipelineRecord) -> bool {
        let Some(path) = &record.image else {
            return !self.opts.require_source_image;
        };
        match GrayImage::load(path) {
            Ok(img) => !imageops::is_blank(&img, self.opts.white_threshold),
            Err(e) => {
                log::warn!("{}: cannot read {}: {e}", record.id, path.display());
                false
            }
        }
    }

    fn render_one(
        &self,
        record: &PipelineRecord,
        formula: &str,
        setup: &RenderSetup,
    ) -> Result<RenderedImage, String> {
        let rel = render::image_rel_path(&record.id, setup, self.renderer.extension());
        let abs = self.opts.out_dir.join(&rel);
        if let Some(dir) = abs.parent() {
            fs::create_dir_all(dir).map_err(|e| e.to_string())?;
        }
        let _ = fs::remove_file(&abs);
        self.renderer.render(&RenderJob {
            record_id: &record.id,
            formula,
            setup,
            out_image: &abs,
            scratch_dir: self.scratch,
        })?;
        if !abs.is_file() {
            return Err("renderer reported success but wrote no image".to_owned());
        }
        Ok(RenderedImage {
            font: setup.font.clone(),
            dpi: setup.dpi,
            path: rel,
        })
    }
}

/// Maps an id or font name to a safe path component.
pub(crate) fn file_stem(s: &str) -> String {
    let stem: String = s
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') {
                c
            } else {
                '_'
            }
        })
        .collect();
    if stem.is_empty() || stem.chars().all(|c| c == '.') {
        format!("_{stem}")
    } else {
        stem
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub id: String,
    pub font: String,
    pub dpi: u32,
    pub image: PathBuf,
    pub tokens: String,
}

/// Manifest lines for kept records, ordered by (id, font, dpi).
pub fn manifest_entries(outcomes: &[RecordOutcome]) -> Vec<ManifestEntry> {
    let mut entries: Vec<ManifestEntry> = outcomes
        .iter()
        .filter(|o| o.status.is_kept())
        .flat_map(|o| {
            o.images.iter().map(move |img| ManifestEntry {
                id: o.id.clone(),
                font: img.font.clone(),
                dpi: img.dpi,
                image: img.path.clone(),
                tokens: o.tokens.clone().unwrap_or_default(),
            })
        })
        .collect();
    entries.sort_by(|a, b| (&a.id, &a.font, a.dpi).cmp(&(&b.id, &b.font, b.dpi)));
    entries
}

pub fn render_manifest(outcomes: &[RecordOutcome]) -> String {
    let mut out = String::from(MANIFEST_HEADER);
    out.push('\n');
    for e in manifest_entries(outcomes) {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            e.id,
            e.font,
            e.dpi,
            e.image.to_string_lossy(),
            e.tokens
        ));
    }
    out
}

pub fn write_manifest(outcomes: &[RecordOutcome], path: &Path) -> Result<(), PipelineError> {
    fs::write(path, render_manifest(outcomes))?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>, PipelineError> {
    let text = fs::read_to_string(path)?;
    let bad = |line: usize, message: &str| PipelineError::BadInputLine {
        path: path.display().to_string(),
        line,
        message: message.to_owned(),
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == MANIFEST_HEADER => {}
        _ => return Err(bad(1, "missing manifest header")),
    }
    let mut entries = Vec::new();
    for (i, line) in lines {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 5 {
            return Err(bad(i + 1, "expected 5 tab-separated fields"));
        }
        entries.push(ManifestEntry {
            id: f[0].to_owned(),
            font: f[1].to_owned(),
            dpi: f[2].parse().map_err(|_| bad(i + 1, "bad dpi"))?,
            image: PathBuf::from(f[3]),
            tokens: f[4].to_owned(),
        });
    }
    Ok(entries)
}

fn write_manual_review(
    records: &[PipelineRecord],
    outcomes: &[RecordOutcome],
    path: &Path,
) -> Result<(), PipelineError> {
    let mut out = String::from("id\tsplit\timage\n");
    for (r, o) in records.iter().zip(outcomes) {
        if o.status == RecordStatus::FlaggedManualCheck {
            let image = r
                .image
                .as_deref()
                .map(Path::to_string_lossy)
                .unwrap_or_default();
            out.push_str(&format!("{}\t{}\t{}\n", r.id, r.split, image));
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads `id<TAB>formula[<TAB>imagePath]` lines. Relative image paths are
/// resolved against the file's directory; an empty formula field is absent.
pub fn read_records(path: &Path, split: &str) -> Result<Vec<PipelineRecord>, PipelineError> {
    let text = fs::read_to_string(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut f = line.splitn(3, '\t');
        let id = f.next().unwrap_or("").trim();
        if id.is_empty() {
            return Err(PipelineError::BadInputLine {
                path: path.display().to_string(),
                line: i + 1,
                message: "empty record id".to_owned(),
            });
        }
        let formula = f.next().filter(|s| !s.trim().is_empty());
        let image = f
            .next()
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|p| base.join(p));
        records.push(PipelineRecord::new(id, formula, image).in_split(split));
    }
    Ok(records)
}

/// Reads `font<TAB>dpi` lines; `#` starts a comment. The font name may
/// contain spaces when tab-separated.
pub fn read_setups(path: &Path) -> Result<Vec<RenderSetup>, PipelineError> {
    let text = fs::read_to_string(path)?;
    let mut setups = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |message: String| PipelineError::BadInputLine {
            path: path.display().to_string(),
            line: i + 1,
            message,
        };
        let (font, dpi) = line
            .rsplit_once(['\t', ' '])
            .ok_or_else(|| bad("expected `font<TAB>dpi`".to_owned()))?;
        let dpi: u32 = dpi
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad dpi {dpi:?}")))?;
        setups.push(RenderSetup::new(font.trim(), dpi).map_err(|e| bad(e.to_string()))?);
    }
    Ok(setups)
}

/// Reads `id<TAB>formula` corrections for records flagged for manual check.
pub fn read_corrections(path: &Path) -> Result<HashMap<String, String>, PipelineError> {
    let text = fs::read_to_string(path)?;
    let mut out = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (id, formula) = line
            .split_once('\t')
            .ok_or_else(|| PipelineError::BadInputLine {
                path: path.display().to_string(),
                line: i + 1,
                message: "expected `id<TAB>formula`".to_owned(),
            })?;
        out.insert(id.trim().to_owned(), formula.to_owned());
    }
    Ok(out)
}
