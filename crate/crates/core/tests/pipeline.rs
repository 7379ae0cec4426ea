mod common;

use std::fs;

use mathnorm::pipeline::{
    read_manifest, read_records, read_setups, render_manifest, run_pipeline, MockRenderer,
    PipelineError, PipelineOptions, PipelineRecord, RecordStatus, JOURNAL_FILE, MANIFEST_FILE,
};
use mathnorm::NormConfig;
use tempfile::tempdir;

#[test]
fn fixture_report_and_images() {
    let dir = tempdir().unwrap();
    let (records, setups) = common::pipeline_fixture(dir.path());
    let out = dir.path().join("out");
    let run = run_pipeline(
        &records,
        &setups,
        &MockRenderer::new(),
        &NormConfig::default(),
        &PipelineOptions::new(&out),
    )
    .unwrap();
    let t = run.report.totals();
    assert_eq!(
        (
            t.white_image,
            t.empty_me,
            t.normalization,
            t.rendering,
            t.kept
        ),
        (1, 1, 1, 0, 2)
    );
    for o in run.outcomes.iter().filter(|o| o.status.is_kept()) {
        assert_eq!(o.images.len(), 2);
        for img in &o.images {
            assert!(out.join(&img.path).is_file());
        }
    }
    assert_eq!(
        run.outcomes[3].tokens.as_deref(),
        Some("\\frac { a } { b } _ { 3 }")
    );
    assert_eq!(run.outcomes[4].tokens.as_deref(), Some("d \\geq ( y )"));

    let manifest = read_manifest(&out.join(MANIFEST_FILE)).unwrap();
    assert_eq!(manifest.len(), 4);
    assert_eq!(
        render_manifest(&run.outcomes),
        fs::read_to_string(out.join(MANIFEST_FILE)).unwrap()
    );
    let review = fs::read_to_string(out.join("manual_review.tsv")).unwrap();
    assert_eq!(review.lines().count(), 2);
    assert!(review.lines().nth(1).unwrap().starts_with("r2\ttrain\t"));
}

#[test]
fn render_failure_stops_remaining_setups() {
    let dir = tempdir().unwrap();
    let (records, setups) = common::pipeline_fixture(dir.path());
    let out = dir.path().join("out");
    let renderer = MockRenderer::new().fail_on("r4", "cm");
    let run = run_pipeline(
        &records,
        &setups,
        &renderer,
        &NormConfig::default(),
        &PipelineOptions::new(&out),
    )
    .unwrap();
    assert!(matches!(
        &run.outcomes[3].status,
        RecordStatus::DroppedRenderError { font, .. } if font == "cm"
    ));
    let r4: Vec<_> = renderer
        .attempts()
        .into_iter()
        .filter(|(id, _)| id == "r4")
        .collect();
    assert_eq!(r4, vec![("r4".to_owned(), "cm".to_owned())]);
    assert_eq!(run.report.totals().rendering, 1);
    assert_eq!(run.report.totals().kept, 1);
}

#[test]
fn earlier_images_are_removed_when_a_later_setup_fails() {
    let dir = tempdir().unwrap();
    let (records, setups) = common::pipeline_fixture(dir.path());
    let out = dir.path().join("out");
    let renderer = MockRenderer::new().fail_on("r5", "charter");
    run_pipeline(
        &records,
        &setups,
        &renderer,
        &NormConfig::default(),
        &PipelineOptions::new(&out),
    )
    .unwrap();
    assert!(renderer
        .attempts()
        .contains(&("r5".to_owned(), "cm".to_owned())));
    let r5_dir = out.join("images").join("r5");
    let left = fs::read_dir(&r5_dir).map(|d| d.count()).unwrap_or(0);
    assert_eq!(left, 0);
}

#[test]
fn reruns_are_byte_identical_across_job_counts() {
    let dir = tempdir().unwrap();
    let (records, setups) = common::pipeline_fixture(dir.path());
    let manifests: Vec<Vec<u8>> = [1, 4]
        .iter()
        .map(|&jobs| {
            let out = dir.path().join(format!("out{jobs}"));
            let mut opts = PipelineOptions::new(&out);
            opts.jobs = jobs;
            run_pipeline(
                &records,
                &setups,
                &MockRenderer::new(),
                &NormConfig::default(),
                &opts,
            )
            .unwrap();
            fs::read(out.join(MANIFEST_FILE)).unwrap()
        })
        .collect();
    assert_eq!(manifests[0], manifests[1]);
}

#[test]
fn resume_skips_journaled_records_and_drops_a_torn_tail() {
    let dir = tempdir().unwrap();
    let (records, setups) = common::pipeline_fixture(dir.path());
    let out = dir.path().join("out");
    let cfg = NormConfig::default();
    let first = run_pipeline(
        &records,
        &setups,
        &MockRenderer::new(),
        &cfg,
        &PipelineOptions::new(&out),
    )
    .unwrap();

    // keep two full lines plus half of the third
    let journal = out.join(JOURNAL_FILE);
    let text = fs::read_to_string(&journal).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    let torn = format!(
        "{}\n{}\n{}",
        lines[0],
        lines[1],
        &lines[2][..lines[2].len() / 2]
    );
    fs::write(&journal, torn).unwrap();

    let mut opts = PipelineOptions::new(&out);
    opts.resume = true;
    let renderer = MockRenderer::new();
    let second = run_pipeline(&records, &setups, &renderer, &cfg, &opts).unwrap();
    assert_eq!(second.resumed, 2);
    assert_eq!(second.outcomes, first.outcomes);
    assert_eq!(fs::read_to_string(&journal).unwrap().lines().count(), 5);

    // a corrupt line in the middle is an error, not silently skipped
    fs::write(&journal, format!("{}\nnot json\n{}\n", lines[0], lines[1])).unwrap();
    let err = run_pipeline(&records, &setups, &renderer, &cfg, &opts).unwrap_err();
    assert!(
        matches!(err, PipelineError::JournalCorrupt { line: 2, .. }),
        "{err}"
    );
}

#[test]
fn empty_setups_keep_everything_without_images() {
    let dir = tempdir().unwrap();
    let records = vec![
        PipelineRecord::new("a", Some("x + y"), None),
        PipelineRecord::new("b", Some("\\alpha"), None),
    ];
    let mut opts = PipelineOptions::new(dir.path());
    opts.require_source_image = false;
    let run = run_pipeline(
        &records,
        &[],
        &MockRenderer::new(),
        &NormConfig::default(),
        &opts,
    )
    .unwrap();
    assert_eq!(run.report.totals().kept, 2);
    assert!(run.outcomes.iter().all(|o| o.images.is_empty()));
    assert_eq!(
        read_manifest(&dir.path().join(MANIFEST_FILE)).unwrap(),
        vec![]
    );
}

#[test]
fn input_validation() {
    let dir = tempdir().unwrap();
    let cfg = NormConfig::default();
    let opts = PipelineOptions::new(dir.path());
    assert!(matches!(
        run_pipeline(&[], &[], &MockRenderer::new(), &cfg, &opts),
        Err(PipelineError::EmptyRecords)
    ));
    let dup = vec![
        PipelineRecord::new("a", Some("x"), None),
        PipelineRecord::new("a", Some("y"), None),
    ];
    assert!(matches!(
        run_pipeline(&dup, &[], &MockRenderer::new(), &cfg, &opts),
        Err(PipelineError::DuplicateId(id)) if id == "a"
    ));
}

#[test]
fn input_files() {
    let dir = tempdir().unwrap();
    let records = dir.path().join("records.tsv");
    fs::write(&records, "1\tx^2\timg/1.pgm\n2\t\t\n\n3\t\\frac a b\n").unwrap();
    let parsed = read_records(&records, "test").unwrap();
    assert_eq!(parsed.len(), 3);
    assert_eq!(
        parsed[0].image.as_deref(),
        Some(dir.path().join("img/1.pgm").as_path())
    );
    assert_eq!(parsed[1].formula, None);
    assert_eq!(parsed[2].split, "test");

    let setups = dir.path().join("setups.tsv");
    fs::write(&setups, "# font dpi\nLatin Modern\t300\ncm 120\n").unwrap();
    let parsed = read_setups(&setups).unwrap();
    assert_eq!(parsed[0].font, "Latin Modern");
    assert_eq!(parsed[1].dpi, 120);
    fs::write(&setups, "cm abc\n").unwrap();
    assert!(matches!(
        read_setups(&setups),
        Err(PipelineError::BadInputLine { line: 1, .. })
    ));
}
