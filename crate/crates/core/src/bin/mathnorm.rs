use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufRead, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::thread;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use mathnorm::fixtures::{gen_fixtures, write_fixtures};
use mathnorm::imageops::{self, GrayImage};
use mathnorm::metrics::{self, EvalPair, Filter, ScoreReport};
use mathnorm::normalizer::{vocab_stats, NormConfig, Normalizer, Rejection};
use mathnorm::parser::{debug_tree, parse_str, serialize_with, Mode, SerializeOptions};
use mathnorm::pipeline::{self, CommandRenderer, MockRenderer, PipelineOptions, Renderer};
use mathnorm::tokenizer::tokenize_with_cap;

/// LaTeX math normalization, recognition metrics and dataset building.
///
/// Exit status: 0 success, 1 data error (diagnostics on stderr), 2 usage error.
#[derive(Parser, Debug)]
#[command(name = "mathnorm", version, arg_required_else_help = true)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Normalizer config file (`key = value`; table paths relative to it).
    #[arg(long, global = true, env = "MATHNORM_CONFIG")]
    config: Option<PathBuf>,
    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Increase log verbosity (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Seed for randomized generators.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Worker threads for corpus-sized inputs.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Split each input line into LaTeX tokens.
    Tokenize(InputArgs),
    /// Parse each line and print its tree serialization.
    Parse {
        #[command(flatten)]
        input: InputArgs,
        /// Print an indented tree dump.
        #[arg(long)]
        debug: bool,
    },
    /// Normalize each line to canonical form.
    Normalize {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum, default_value_t = ModeArg::Gt)]
        mode: ModeArg,
        /// Print vocabulary statistics after the output.
        #[arg(long)]
        stats: bool,
    },
    /// Score predictions against ground truth.
    Score {
        #[command(flatten)]
        files: ScoreFiles,
        /// Comma-separated breakdowns: array, mathfont, multiline.
        #[arg(long, value_delimiter = ',')]
        filters: Vec<FilterArg>,
        /// Also print the k most frequent edit operations of each kind.
        #[arg(long, value_name = "K")]
        analyze_ops: Option<usize>,
    },
    /// Levenshtein operation analysis only.
    Analyze {
        #[command(flatten)]
        files: ScoreFiles,
        #[arg(short, long, default_value_t = 10)]
        k: usize,
    },
    /// Split a PGM image into text-line strips; prints row ranges.
    Ycut {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = imageops::DEFAULT_MIN_GAP)]
        min_gap: usize,
        #[arg(long, default_value_t = imageops::DEFAULT_MIN_SEGMENT)]
        min_segment: usize,
        #[arg(long, default_value_t = imageops::DEFAULT_WHITE_THRESHOLD)]
        threshold: u8,
    },
    /// Exit 0 if the PGM image is blank, 1 otherwise.
    BlankCheck {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = imageops::DEFAULT_WHITE_THRESHOLD)]
        threshold: u8,
    },
    /// Run the normalize-and-render dataset pipeline.
    BuildDataset(BuildArgs),
    /// Corpus statistics: sizes, rejections by reason, vocabulary.
    Stats(InputArgs),
    /// Write seeded synthetic expressions and their canonical forms.
    GenFixtures {
        #[arg(short, long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Input file, one expression per line; `-` or absent reads stdin.
    input: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ScoreFiles {
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    pre: PathBuf,
    /// Normalize both sides (GT mode) before scoring.
    #[arg(long)]
    normalize: bool,
}

#[derive(Args, Debug)]
struct BuildArgs {
    /// `id<TAB>formula<TAB>imagePath` per line.
    #[arg(long)]
    records: PathBuf,
    /// `font<TAB>dpi` per line.
    #[arg(long)]
    setups: PathBuf,
    /// Template with {formula-file}, {font}, {dpi}, {out-image}.
    #[arg(long, required_unless_present = "mock_renderer")]
    renderer_cmd: Option<String>,
    /// Extension of images written by --renderer-cmd.
    #[arg(long, default_value = "png")]
    image_ext: String,
    #[arg(long)]
    out: PathBuf,
    /// Use the built-in deterministic renderer.
    #[arg(long, conflicts_with = "renderer_cmd")]
    mock_renderer: bool,
    /// Make the mock renderer fail for `id:font` (repeatable).
    #[arg(long, value_name = "ID:FONT", requires = "mock_renderer")]
    mock_fail: Vec<String>,
    /// Skip records already in the journal.
    #[arg(long)]
    resume: bool,
    /// Split name recorded for every record of this run.
    #[arg(long, default_value = pipeline::DEFAULT_SPLIT)]
    split: String,
    /// Records without an image path are not dropped as white images.
    #[arg(long)]
    no_source_images: bool,
    /// `id<TAB>formula` replacements for records with a missing formula.
    #[arg(long)]
    corrections: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ModeArg {
    Gt,
    Rendering,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Gt => Mode::Gt,
            ModeArg::Rendering => Mode::Rendering,
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum FilterArg {
    Array,
    Mathfont,
    Multiline,
}

/// A data error: reported on stderr, exit status 1. An empty message marks
/// a closed stdout (e.g. piped into `head`), which is not reported.
struct Failure(String);

impl<E: std::error::Error + 'static> From<E> for Failure {
    fn from(e: E) -> Failure {
        let closed_pipe = (&e as &dyn std::error::Error)
            .downcast_ref::<io::Error>()
            .is_some_and(|io| io.kind() == io::ErrorKind::BrokenPipe);
        Failure(if closed_pipe {
            String::new()
        } else {
            e.to_string()
        })
    }
}

type CliResult = Result<ExitCode, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    match run(cli) {
        Ok(code) => code,
        Err(Failure(msg)) if msg.is_empty() => ExitCode::SUCCESS,
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> CliResult {
    let g = &cli.global;
    match cli.command {
        Command::Tokenize(input) => cmd_tokenize(g, &input),
        Command::Parse { input, debug } => cmd_parse(g, &input, debug),
        Command::Normalize { input, mode, stats } => cmd_normalize(g, &input, mode.into(), stats),
        Command::Score {
            files,
            filters,
            analyze_ops,
        } => cmd_score(g, &files, &filters, analyze_ops),
        Command::Analyze { files, k } => cmd_analyze(g, &files, k),
        Command::Ycut {
            input,
            min_gap,
            min_segment,
            threshold,
        } => cmd_ycut(g, &input, threshold, min_gap, min_segment),
        Command::BlankCheck { input, threshold } => cmd_blank_check(g, &input, threshold),
        Command::BuildDataset(args) => cmd_build(g, &args),
        Command::Stats(input) => cmd_stats(g, &input),
        Command::GenFixtures { n, out } => cmd_gen_fixtures(g, n as usize, &out),
    }
}

fn load_config(g: &Global) -> Result<NormConfig, Failure> {
    match &g.config {
        Some(path) => {
            NormConfig::load(path).map_err(|e| Failure(format!("{}: {e}", path.display())))
        }
        None => Ok(NormConfig::default()),
    }
}

fn read_lines(input: &InputArgs) -> Result<Vec<String>, Failure> {
    let text = match input.input.as_deref() {
        None => read_stdin()?,
        Some(p) if p == Path::new("-") => read_stdin()?,
        Some(p) => fs::read_to_string(p).map_err(|e| Failure(format!("{}: {e}", p.display())))?,
    };
    Ok(text.lines().map(str::to_owned).collect())
}

fn read_stdin() -> Result<String, Failure> {
    let mut s = String::new();
    io::stdin().lock().read_to_string(&mut s)?;
    Ok(s)
}

fn read_file_lines(path: &Path) -> Result<Vec<String>, Failure> {
    let file = fs::File::open(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    io::BufReader::new(file)
        .lines()
        .collect::<Result<_, _>>()
        .map_err(|e| Failure(format!("{}: {e}", path.display())))
}

/// Order-preserving parallel map over chunks.
fn par_map<T: Sync, R: Send>(items: &[T], jobs: u64, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let jobs = (jobs as usize).clamp(1, items.len().max(1));
    if jobs == 1 {
        return items.iter().map(f).collect();
    }
    let chunk = items.len().div_ceil(jobs);
    thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|c| {
                let f = &f;
                s.spawn(move || c.iter().map(f).collect::<Vec<R>>())
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker panicked"))
            .collect()
    })
}

fn emit_json(value: &impl Serialize) -> io::Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer(&mut out, value)?;
    writeln!(out)
}

/// Per-line diagnostics go to stderr; any of them makes the exit status 1.
fn finish(errors: usize) -> CliResult {
    if errors > 0 {
        eprintln!("{errors} line(s) failed");
        Ok(ExitCode::from(1))
    } else {
        Ok(ExitCode::SUCCESS)
    }
}

fn cmd_tokenize(g: &Global, input: &InputArgs) -> CliResult {
    let cfg = load_config(g)?;
    let lines = read_lines(input)?;
    let results = par_map(&lines, g.jobs, |l| {
        tokenize_with_cap(l, cfg.max_input_chars)
    });
    let mut out = io::stdout().lock();
    let mut errors = 0;
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(seq) if g.json => {
                serde_json::to_writer(&mut out, &seq.texts())?;
                writeln!(out)?;
            }
            Ok(seq) => writeln!(out, "{seq}")?,
            Err(e) => {
                errors += 1;
                eprintln!("line {}: {e}", i + 1);
                if g.json {
                    writeln!(out, "{}", json!({ "line": i + 1, "error": e.to_string() }))?;
                } else {
                    writeln!(out)?;
                }
            }
        }
    }
    finish(errors)
}

fn cmd_parse(g: &Global, input: &InputArgs, debug: bool) -> CliResult {
    let cfg = load_config(g)?;
    let lines = read_lines(input)?;
    let results = par_map(&lines, g.jobs, |l| {
        parse_str(l, &cfg.arg_spec, cfg.max_input_chars)
    });
    let mut out = io::stdout().lock();
    let mut errors = 0;
    let opts = SerializeOptions {
        mode: Mode::Rendering,
        keep_groups: true,
    };
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(tree) if g.json => {
                serde_json::to_writer(&mut out, &tree)?;
                writeln!(out)?;
            }
            Ok(tree) if debug => write!(out, "{}", debug_tree(&tree))?,
            Ok(tree) => writeln!(out, "{}", serialize_with(&tree, opts))?,
            Err(e) => {
                errors += 1;
                eprintln!("line {}: {e}", i + 1);
                if g.json {
                    writeln!(out, "{}", json!({ "line": i + 1, "error": e.to_string() }))?;
                } else if !debug {
                    writeln!(out)?;
                }
            }
        }
        if debug && !g.json {
            writeln!(out)?;
        }
    }
    finish(errors)
}

fn cmd_normalize(g: &Global, input: &InputArgs, mode: Mode, stats: bool) -> CliResult {
    let normalizer = Normalizer::new(load_config(g)?.with_mode(mode))?;
    let lines = read_lines(input)?;
    let results = par_map(&lines, g.jobs, |l| normalizer.normalize(l));
    let mut out = io::stdout().lock();
    let mut rejected: BTreeMap<&'static str, usize> = BTreeMap::new();
    for (i, r) in results.iter().enumerate() {
        match r {
            Ok(seq) if g.json => {
                writeln!(out, "{}", json!({ "line": i + 1, "tokens": seq.texts() }))?
            }
            Ok(seq) => writeln!(out, "{seq}")?,
            Err(rej) => {
                *rejected.entry(rej.code()).or_default() += 1;
                if g.json {
                    writeln!(out, "{}", json!({ "line": i + 1, "reject": rej }))?;
                } else {
                    writeln!(out, "#REJECT {rej}")?;
                }
            }
        }
    }
    let n_rej: usize = rejected.values().sum();
    let summary: Vec<String> = rejected.iter().map(|(k, v)| format!("{k}={v}")).collect();
    eprintln!(
        "{} lines, {} normalized, {} rejected{}{}",
        lines.len(),
        lines.len() - n_rej,
        n_rej,
        if summary.is_empty() { "" } else { ": " },
        summary.join(" ")
    );
    if stats {
        let s = vocab_stats(&lines, &normalizer);
        if g.json {
            writeln!(out, "{}", json!({ "stats": s }))?;
        } else {
            eprintln!("vocab before   {}", s.vocab_before);
            eprintln!("vocab after    {}", s.vocab_after);
            eprintln!("rejected       {}", s.rejected_count);
            let removed: Vec<&str> = s.removed_tokens.iter().map(String::as_str).collect();
            eprintln!("removed tokens {} {}", removed.len(), removed.join(" "));
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// Reads the two line-aligned files. With `normalize`, each side goes
/// through the GT normalizer; a rejected line falls back to its plain
/// tokenization (whitespace split if even that fails).
fn load_pairs(g: &Global, files: &ScoreFiles) -> Result<(Vec<EvalPair>, NormConfig), Failure> {
    let cfg = load_config(g)?;
    let gt = read_file_lines(&files.gt)?;
    let pre = read_file_lines(&files.pre)?;
    if gt.len() != pre.len() {
        let (longer, n) = if gt.len() > pre.len() {
            (&files.gt, pre.len())
        } else {
            (&files.pre, gt.len())
        };
        return Err(Failure(format!(
            "line counts differ ({} has {}, {} has {}); first unpaired line: {}:{}",
            files.gt.display(),
            gt.len(),
            files.pre.display(),
            pre.len(),
            longer.display(),
            n + 1
        )));
    }
    let to_tokens: Box<dyn Fn(&str) -> Vec<String> + Sync> = if files.normalize {
        let n = Normalizer::new(cfg.clone().with_mode(Mode::Gt))?;
        let max = cfg.max_input_chars;
        Box::new(move |line: &str| match n.normalize(line) {
            Ok(seq) => seq.texts().into_iter().map(str::to_owned).collect(),
            Err(rej) => {
                log::info!("normalize fallback ({rej}): {line}");
                match tokenize_with_cap(line, max) {
                    Ok(seq) => seq.texts().into_iter().map(str::to_owned).collect(),
                    Err(_) => line.split_whitespace().map(str::to_owned).collect(),
                }
            }
        })
    } else {
        Box::new(|line: &str| line.split_whitespace().map(str::to_owned).collect())
    };
    let idx: Vec<usize> = (0..gt.len()).collect();
    let pairs = par_map(&idx, g.jobs, |&i| {
        let gt_toks = to_tokens(&gt[i]);
        let multi = gt_toks.iter().any(|t| t == "\\\\");
        EvalPair {
            gt: gt_toks,
            pre: to_tokens(&pre[i]),
            multi_line: multi,
        }
    });
    Ok((pairs, cfg))
}

fn cmd_score(
    g: &Global,
    files: &ScoreFiles,
    filters: &[FilterArg],
    analyze_ops: Option<usize>,
) -> CliResult {
    let (pairs, cfg) = load_pairs(g, files)?;
    let filters: Vec<Filter> = filters
        .iter()
        .map(|f| match f {
            FilterArg::Array => Filter::array(),
            FilterArg::Mathfont => Filter::math_font(cfg.math_font_commands.clone()),
            FilterArg::Multiline => Filter::multi_line(),
        })
        .collect();
    let scores = par_map(&pairs, g.jobs, metrics::score_pair);
    let report = metrics::corpus_report(&pairs, &scores, &filters)?;
    let ops = match analyze_ops {
        Some(k) => {
            let mut counts = metrics::OpCounts::default();
            for s in &scores {
                counts.add(&s.ops);
            }
            if k == 0 {
                return Err(metrics::MetricsError::InvalidK.into());
            }
            Some(counts.tables(k))
        }
        None => None,
    };
    if g.json {
        emit_json(&json!({ "score": report, "ops": ops }))?;
        return Ok(ExitCode::SUCCESS);
    }
    let mut out = io::stdout().lock();
    writeln!(
        out,
        "{:<8}{:>8}{:>10}{:>10}{:>10}{:>10}",
        "subset", "pairs", "edit", "bleu4", "em", "errors"
    )?;
    let row = |out: &mut io::StdoutLock, name: &str, r: &ScoreReport| {
        writeln!(
            out,
            "{:<8}{:>8}{:>10.2}{:>10.2}{:>10.2}{:>10}",
            name, r.pairs, r.edit_score, r.bleu4, r.exact_match, r.summed_errors
        )
    };
    row(&mut out, "all", &report)?;
    for (name, sub) in &report.breakdowns {
        row(&mut out, name, sub)?;
    }
    if report.both_empty_pairs > 0 {
        writeln!(
            out,
            "note: {} pair(s) empty on both sides scored 100",
            report.both_empty_pairs
        )?;
    }
    if let Some(t) = ops {
        writeln!(out)?;
        print_ops(&mut out, &t)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn print_ops(out: &mut impl Write, t: &metrics::OpTables) -> io::Result<()> {
    writeln!(out, "inserts ({})", t.total_inserts)?;
    for (tok, n) in &t.inserts {
        writeln!(out, "  {n:>6}  {tok}")?;
    }
    writeln!(out, "deletes ({})", t.total_deletes)?;
    for (tok, n) in &t.deletes {
        writeln!(out, "  {n:>6}  {tok}")?;
    }
    writeln!(out, "replaces ({})", t.total_replaces)?;
    for (gt, pre, n) in &t.replaces {
        writeln!(out, "  {n:>6}  {gt} -> {pre}")?;
    }
    Ok(())
}

fn cmd_analyze(g: &Global, files: &ScoreFiles, k: usize) -> CliResult {
    let (pairs, _) = load_pairs(g, files)?;
    let tables = metrics::op_analysis(&pairs, k)?;
    if g.json {
        emit_json(&tables)?;
    } else {
        print_ops(&mut io::stdout().lock(), &tables)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn load_image(path: &Path) -> Result<GrayImage, Failure> {
    GrayImage::load(path).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn cmd_ycut(g: &Global, input: &Path, thr: u8, min_gap: usize, min_segment: usize) -> CliResult {
    let img = load_image(input)?;
    let ranges = imageops::ycut(&img, thr, min_gap, min_segment);
    if g.json {
        let v: Vec<[usize; 2]> = ranges.iter().map(|r| [r.start, r.end]).collect();
        emit_json(&json!({ "height": img.height(), "segments": v }))?;
    } else {
        let mut out = io::stdout().lock();
        for r in ranges {
            writeln!(out, "{}\t{}", r.start, r.end)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_blank_check(g: &Global, input: &Path, thr: u8) -> CliResult {
    let img = load_image(input)?;
    let blank = imageops::is_blank(&img, thr);
    if g.json {
        emit_json(&json!({ "blank": blank }))?;
    } else {
        println!("{}", if blank { "blank" } else { "not blank" });
    }
    Ok(if blank {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_build(g: &Global, args: &BuildArgs) -> CliResult {
    let cfg = load_config(g)?;
    let records = pipeline::read_records(&args.records, &args.split)?;
    let setups = pipeline::read_setups(&args.setups)?;
    let mut opts = PipelineOptions::new(&args.out);
    opts.jobs = g.jobs as usize;
    opts.resume = args.resume;
    opts.require_source_image = !args.no_source_images;
    if let Some(path) = &args.corrections {
        opts.corrections = pipeline::read_corrections(path)?;
    }
    let renderer: Box<dyn Renderer> = if args.mock_renderer {
        let mut mock = MockRenderer::new();
        for spec in &args.mock_fail {
            let (id, font) = spec
                .split_once(':')
                .ok_or_else(|| Failure(format!("--mock-fail expects ID:FONT, got {spec:?}")))?;
            mock = mock.fail_on(id, font);
        }
        Box::new(mock)
    } else {
        let template = args.renderer_cmd.clone().unwrap_or_default();
        Box::new(CommandRenderer::new(template).with_extension(&args.image_ext))
    };
    let run = pipeline::run_pipeline(&records, &setups, renderer.as_ref(), &cfg, &opts)?;
    if g.json {
        emit_json(&json!({
            "report": run.report,
            "resumed": run.resumed,
            "manifest": args.out.join(pipeline::MANIFEST_FILE),
        }))?;
    } else {
        print!("{}", run.report);
        if !run.report.normalization_reasons.is_empty() {
            let r: Vec<String> = run
                .report
                .normalization_reasons
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect();
            println!("normalization drops: {}", r.join(" "));
        }
        if run.resumed > 0 {
            println!("resumed {} record(s) from the journal", run.resumed);
        }
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct CorpusStats {
    lines: usize,
    normalized: usize,
    rejected: BTreeMap<&'static str, usize>,
    mean_tokens_before: f64,
    mean_tokens_after: f64,
    vocab_before: usize,
    vocab_after: usize,
    removed_tokens: Vec<String>,
}

fn cmd_stats(g: &Global, input: &InputArgs) -> CliResult {
    let normalizer = Normalizer::new(load_config(g)?)?;
    let lines = read_lines(input)?;
    let max = normalizer.config().max_input_chars;
    let per_line = par_map(&lines, g.jobs, |l| {
        let before = tokenize_with_cap(l, max).map(|s| s.len()).ok();
        (before, normalizer.normalize(l).map(|s| s.len()))
    });
    let vs = vocab_stats(&lines, &normalizer);
    let mut rejected: BTreeMap<&'static str, usize> = BTreeMap::new();
    let (mut before_sum, mut before_n, mut after_sum, mut after_n) = (0, 0, 0, 0);
    for (before, after) in &per_line {
        if let Some(b) = before {
            before_sum += b;
            before_n += 1;
        }
        match after {
            Ok(a) => {
                after_sum += a;
                after_n += 1;
            }
            Err(r) => *rejected.entry(Rejection::code(r)).or_default() += 1,
        }
    }
    let mean = |s: usize, n: usize| if n == 0 { 0.0 } else { s as f64 / n as f64 };
    let stats = CorpusStats {
        lines: lines.len(),
        normalized: after_n,
        rejected,
        mean_tokens_before: mean(before_sum, before_n),
        mean_tokens_after: mean(after_sum, after_n),
        vocab_before: vs.vocab_before,
        vocab_after: vs.vocab_after,
        removed_tokens: vs.removed_tokens.into_iter().collect(),
    };
    if g.json {
        emit_json(&stats)?;
        return Ok(ExitCode::SUCCESS);
    }
    let mut out = io::stdout().lock();
    writeln!(out, "lines               {}", stats.lines)?;
    writeln!(out, "normalized          {}", stats.normalized)?;
    for (code, n) in &stats.rejected {
        writeln!(out, "rejected {code:<11}{n}")?;
    }
    writeln!(out, "mean tokens before  {:.2}", stats.mean_tokens_before)?;
    writeln!(out, "mean tokens after   {:.2}", stats.mean_tokens_after)?;
    writeln!(out, "vocab before        {}", stats.vocab_before)?;
    writeln!(out, "vocab after         {}", stats.vocab_after)?;
    writeln!(
        out,
        "removed tokens      {}",
        stats.removed_tokens.join(" ")
    )?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_gen_fixtures(g: &Global, n: usize, out: &Path) -> CliResult {
    let fixtures = gen_fixtures(g.seed, n);
    write_fixtures(&fixtures, out).map_err(|e| Failure(format!("{}: {e}", out.display())))?;
    if g.json {
        emit_json(&json!({ "seed": g.seed, "count": n, "out": out }))?;
    } else {
        println!("wrote {n} fixtures (seed {}) to {}", g.seed, out.display());
    }
    Ok(ExitCode::SUCCESS)
}
