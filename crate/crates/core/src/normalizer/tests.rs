use super::*;

fn gt(s: &str) -> String {
    normalize(s, &NormConfig::default()).unwrap().to_string()
}

fn only(rule: Rule, s: &str) -> NormOutcome {
    normalize(s, &NormConfig::default().with_rules(RuleSet::only(rule)))
}

fn rendering(s: &str) -> String {
    normalize(s, &NormConfig::default().with_mode(Mode::Rendering))
        .unwrap()
        .to_string()
}

#[test]
fn script_order_is_merged() {
    assert_eq!(gt("a^{b}_{c}^{d}"), "a _ { c } ^ { b d }");
    assert_eq!(gt("a_1_2"), "a _ { 1 2 }");
}

#[test]
fn curly_bracket_variants_agree() {
    let expected = "a _ { 3 }";
    for v in ["a_3", "a_{3}", "{a_{3}}", "{{a}_{{3}}}"] {
        assert_eq!(gt(v), expected, "{v}");
    }
}

#[test]
fn synonyms_and_fixed_points() {
    assert_eq!(gt("x \\ge 1"), "x \\geq 1");
    assert_eq!(gt("\\alpha = \\alpha"), "\\alpha = \\alpha");
    assert_eq!(gt("\\left\\lbrace x \\right\\rbrace"), "\\{ x \\}");
}

#[test]
fn forbidden_tokens_reject() {
    assert_eq!(
        normalize("y \\cite { foo }", &NormConfig::default()),
        Err(Rejection::ForbiddenToken("\\cite".into()))
    );
    // even when the rest would not parse
    assert_eq!(
        normalize("\\label{x", &NormConfig::default()),
        Err(Rejection::ForbiddenToken("\\label".into()))
    );
    assert_eq!(
        normalize("a \\over b", &NormConfig::default()),
        Err(Rejection::ForbiddenToken("\\over".into()))
    );
}

#[test]
fn math_fonts_are_unwrapped() {
    assert_eq!(
        only(Rule::MathFonts, "\\mathbf{x}+y").unwrap().to_string(),
        "x + y"
    );
    assert_eq!(
        gt("A = \\mathcal{A} = \\mathbb{A} = \\boldsymbol{A}"),
        "A = A = A = A"
    );
    assert_eq!(gt("\\mathbf{x}^2"), "x ^ { 2 }");
    assert_eq!(gt("\\mathbf{xy}^2"), "{ x y } ^ { 2 }");
    assert_eq!(gt("{\\bf x}"), "x");
    assert_eq!(gt("\\operatorname{sin} x"), "s i n x");
    assert_eq!(gt("\\operatorname*{max}_x"), "{ m a x } _ { x }");
}

#[test]
fn whitespace_is_removed() {
    assert_eq!(
        only(
            Rule::Whitespace,
            "a\\quad b\\,c\\hspace{1cm}d~e\\ f\\phantom{xx}g"
        )
        .unwrap()
        .to_string(),
        "a b c d e f g"
    );
    assert_eq!(gt("a \\hspace*{2pt} b"), "a b");
}

#[test]
fn brace_discipline_only() {
    let out = only(Rule::Braces, "{a_{3}}+{{b}}").unwrap().to_string();
    assert_eq!(out, "a _ { 3 } + b");
    let out = normalize(
        "{a_{3}}",
        &NormConfig::default().with_rules(RuleSet::none()),
    );
    assert_eq!(out.unwrap().to_string(), "{ a _ { 3 } }");
}

#[test]
fn empty_results_are_rejected() {
    assert_eq!(
        normalize("\\quad", &NormConfig::default()),
        Err(Rejection::EmptyAfterNormalization)
    );
    assert_eq!(
        normalize("", &NormConfig::default()),
        Err(Rejection::EmptyAfterNormalization)
    );
    assert_eq!(
        normalize("{}", &NormConfig::default()),
        Err(Rejection::EmptyAfterNormalization)
    );
}

#[test]
fn parse_errors_surface() {
    assert!(matches!(
        normalize("a^", &NormConfig::default()),
        Err(Rejection::ParseError(_))
    ));
    assert!(matches!(
        normalize("\\begin{array}{c|c}a&b\\end{array}", &NormConfig::default()),
        Err(Rejection::ParseError(_))
    ));
}

#[test]
fn formatting_arrays_are_spliced() {
    assert_eq!(
        gt("\\begin{array}{cc}a=b,&c=d\\end{array}"),
        "a = b , c = d"
    );
    assert_eq!(
        only(Rule::Arrays, "\\begin{array}{cc}a=b,&c=d\\end{array}")
            .unwrap()
            .to_string(),
        "a = b , c = d"
    );
}

#[test]
fn delimited_arrays_are_kept() {
    let src = "\\left(\\begin{array}{lcr}1&2&3\\\\4&x&6\\\\7&8&9\\\\\\end{array}\\right)";
    assert_eq!(
        gt(src),
        "( \\begin{array} { c c c } 1 & 2 & 3 \\\\ 4 & x & 6 \\\\ 7 & 8 & 9 \\end{array} )"
    );
    assert_eq!(
        rendering(src),
        "\\left ( \\begin{array} { l c r } 1 & 2 & 3 \\\\ 4 & x & 6 \\\\ 7 & 8 & 9 \\end{array} \\right )"
    );
    // GT output stays a matrix on a second pass.
    let once = gt(src);
    assert_eq!(gt(&once), once);
    // Cases-style: one visible delimiter.
    let cases = gt("f = \\left\\{ \\begin{array}{ll} 1 & x \\\\ 0 & y \\end{array} \\right.");
    assert_eq!(
        cases,
        "f = \\{ \\begin{array} { c c } 1 & x \\\\ 0 & y \\end{array}"
    );
    assert_eq!(gt(&cases), cases);
    // Determinant bars.
    let det = gt("|\\begin{array}{cc}a&b\\\\c&d\\end{array}|");
    assert!(det.contains("\\begin{array}"), "{det}");
    // Balanced parentheses before it do not count.
    assert_eq!(gt("(x)\\begin{array}{c}y\\end{array}"), "( x ) y");
}

#[test]
fn sparse_arrays_are_rejected() {
    let cfg = NormConfig::default();
    for src in [
        "\\left(\\begin{array}{cc}a&\\end{array}\\right)",
        "\\left(\\begin{array}{cc}a&b\\\\c\\end{array}\\right)",
        "\\left(\\begin{array}{ccc}a&b\\end{array}\\right)",
        "\\left(\\begin{array}{cc}a&{}\\end{array}\\right)",
        "\\left(\\begin{array}{cc}a&\\quad\\end{array}\\right)",
    ] {
        assert_eq!(normalize(src, &cfg), Err(Rejection::SparseArray), "{src}");
    }
}

#[test]
fn gt_mode_drops_left_right() {
    assert_eq!(gt("\\left( x \\right)"), "( x )");
    assert_eq!(gt("\\left. x \\right|_{0}"), "x | _ { 0 }");
    assert_eq!(rendering("\\left( x \\right)"), "\\left ( x \\right )");
}

#[test]
fn synonym_closure_holds_for_default_keys() {
    let cfg = NormConfig::default();
    for key in cfg.synonyms.keys() {
        let out = normalize(&format!("x {key} y"), &cfg).unwrap();
        assert!(
            out.iter().all(|t| !cfg.synonyms.contains_key(t.text())),
            "{key}"
        );
    }
}

#[test]
fn vocab_stats_examples() {
    let n = Normalizer::new(NormConfig::default()).unwrap();
    let s = vocab_stats(&["a \\ge b", "a \\geq b"], &n);
    assert_eq!((s.vocab_before, s.vocab_after, s.rejected_count), (4, 3, 0));
    assert_eq!(s.removed_tokens, BTreeSet::from(["\\ge".to_owned()]));

    let empty: [&str; 0] = [];
    assert_eq!(vocab_stats(&empty, &n), VocabStats::default());

    let s = vocab_stats(&["\\cite { x }"], &n);
    assert_eq!((s.vocab_after, s.rejected_count), (0, 1));
}

#[test]
fn rejection_codes() {
    assert_eq!(Rejection::SparseArray.code(), "sparse-array");
    assert_eq!(
        Rejection::ForbiddenToken("\\cite".into()).to_string(),
        "forbidden-token \\cite"
    );
    let json = serde_json::to_string(&Rejection::ForbiddenToken("\\x".into())).unwrap();
    assert_eq!(json, r#"{"reason":"forbidden-token","detail":"\\x"}"#);
}

#[test]
fn nested_pairs_decide_like_their_flat_output() {
    for src in [
        "\\left| k \\left| \\begin{array}{cc}a&b\\end{array} \\right| \\right|",
        "\\left( x \\right) \\begin{array}{c}y\\end{array}",
        "\\left( x \\begin{array}{c}y\\end{array} \\right)^2",
        "\\left. \\begin{array}{c}y\\end{array} \\right| _ { 0 }",
    ] {
        let once = gt(src);
        assert_eq!(gt(&once), once, "{src}");
        assert_eq!(
            rendering(src).contains("array"),
            once.contains("array"),
            "{src}"
        );
    }
    assert_eq!(
        gt("\\left( x \\right) \\begin{array}{c}y\\end{array}"),
        "( x ) y"
    );
}
