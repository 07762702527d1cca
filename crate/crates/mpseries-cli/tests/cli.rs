//! End-to-end tests of the front end: config handling, determinism across
//! thread counts, exit codes, and artifact formats.

use std::io::Write;

use mpseries_cli::{
    options_from_file, parse_complex, resolve, run, Command, Options, EXIT_CHECK_FAILED, EXIT_OK,
};

fn run_to_string(cfg: &mpseries_cli::RunConfig) -> (String, String, i32) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(cfg, &mut out, &mut err);
    (String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap(), code)
}

#[test]
fn certify_exit_codes_follow_the_verdict() {
    // 13/2 at level 4, s = 3: the weight threshold passes but the strip
    // inequality fails, so the run exits 1.
    let o = Options {
        weight: Some("13/2".into()),
        s: Some("3.0".into()),
        ..Default::default()
    };
    let cfg = resolve(Command::Certify, &o).unwrap();
    let (out, _, code) = run_to_string(&cfg);
    assert_eq!(code, EXIT_CHECK_FAILED);
    assert!(out.contains("check weight-threshold"));
    assert!(out.contains("verdict = inequality-failed"));

    // 11/2 fails the precondition itself.
    let o = Options { weight: Some("11/2".into()), s: Some("2.6".into()), ..Default::default() };
    let cfg = resolve(Command::Certify, &o).unwrap();
    let (out, _, code) = run_to_string(&cfg);
    assert_eq!(code, EXIT_CHECK_FAILED);
    assert!(out.contains("verdict = precondition-failed"));

    // 25/2 at the same width is certified.
    let o = Options { weight: Some("25/2".into()), s: Some("3.0".into()), ..Default::default() };
    let cfg = resolve(Command::Certify, &o).unwrap();
    let (out, _, code) = run_to_string(&cfg);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("verdict = certified-nonvanishing"));
}

#[test]
fn certify_selects_the_lvalue_region_automatically() {
    let o = Options { weight: Some("13/2".into()), s: Some("4.5".into()), ..Default::default() };
    let cfg = resolve(Command::Certify, &o).unwrap();
    let (out, _, _) = run_to_string(&cfg);
    assert!(out.contains("kind = lvalue-positivity"));
}

#[test]
fn sanity_passes() {
    let cfg = resolve(Command::Sanity, &Options::default()).unwrap();
    let (out, _, code) = run_to_string(&cfg);
    assert_eq!(code, EXIT_OK, "{out}");
    assert!(out.contains("all-pass = true"));
}

#[test]
fn identical_configs_give_byte_identical_reports_across_thread_counts() {
    let o = Options {
        c_bound: Some(200.0),
        z: Some("0.3+1.1i".into()),
        threads: Some(1),
        ..Default::default()
    };
    let cfg1 = resolve(Command::Eval, &o).unwrap();
    let o4 = Options { threads: Some(4), ..o };
    let cfg4 = resolve(Command::Eval, &o4).unwrap();

    let (a, _, code_a) = run_to_string(&cfg1);
    let (b, _, code_b) = run_to_string(&cfg1);
    let (c, _, code_c) = run_to_string(&cfg4);
    assert_eq!(code_a, EXIT_OK);
    assert_eq!(code_a, code_b);
    assert_eq!(code_a, code_c);
    assert_eq!(a, b, "same config must reproduce bytes");
    assert_eq!(a, c, "thread count must not change bytes");
}

#[test]
fn coeffs_csv_format() {
    let o = Options { c_bound: Some(100.0), count: Some(4), ..Default::default() };
    let cfg = resolve(Command::Coeffs, &o).unwrap();
    let (out, _, code) = run_to_string(&cfg);
    assert_eq!(code, EXIT_OK);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("n,re,im"));
    let first = lines.next().unwrap();
    assert!(first.starts_with("1,"), "{first}");
    assert_eq!(out.lines().count(), 5);
    // 17 significant digits in scientific notation.
    let field = first.split(',').nth(1).unwrap();
    assert!(field.contains('e') && field.contains('.'), "{field}");
    assert_eq!(field.split('.').nth(1).unwrap().split('e').next().unwrap().len(), 17);
}

#[test]
fn lvalue_reports_both_routes_in_the_overlap() {
    let o = Options {
        c_bound: Some(200.0),
        count: Some(8),
        s: Some("4.5".into()),
        ..Default::default()
    };
    let cfg = resolve(Command::Lvalue, &o).unwrap();
    let (out, _, code) = run_to_string(&cfg);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("dirichlet-re"), "{out}");
    assert!(out.contains("unfolded-re"), "{out}");
    // Outside both domains only the evaluable route is reported.
    let o = Options {
        c_bound: Some(200.0),
        count: Some(8),
        s: Some("3.5".into()),
        ..Default::default()
    };
    let cfg = resolve(Command::Lvalue, &o).unwrap();
    let (out, _, _) = run_to_string(&cfg);
    assert!(out.contains("dirichlet = outside-domain"));
    assert!(out.contains("unfolded-re"));
}

#[test]
fn lvalue_accepts_an_imported_coefficient_table() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("coeffs.csv");

    // Export a table, then feed it back for the L-value.
    let o = Options {
        c_bound: Some(200.0),
        count: Some(8),
        out: Some(table.clone()),
        ..Default::default()
    };
    let cfg = resolve(Command::Coeffs, &o).unwrap();
    let (_, _, code) = run_to_string(&cfg);
    assert_eq!(code, EXIT_OK);

    let o_direct =
        Options { c_bound: Some(200.0), count: Some(8), s: Some("4.5".into()), ..Default::default() };
    let direct = run_to_string(&resolve(Command::Lvalue, &o_direct).unwrap());

    let o_import = Options {
        coeffs_in: Some(table),
        s: Some("4.5".into()),
        ..Default::default()
    };
    let imported = run_to_string(&resolve(Command::Lvalue, &o_import).unwrap());
    assert_eq!(direct.2, EXIT_OK);
    assert_eq!(imported.2, EXIT_OK);
    let pick = |text: &str| {
        text.lines()
            .find(|l| l.trim_start().starts_with("dirichlet-re"))
            .unwrap()
            .to_string()
    };
    assert_eq!(pick(&direct.0), pick(&imported.0), "imported table must reproduce the L-value");
}

#[test]
fn min_weight_scan_reports() {
    let cfg = resolve(Command::MinWeight, &Options::default()).unwrap();
    let (out, _, code) = run_to_string(&cfg);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("m0 = 22971/2"), "{out}");
}

#[test]
fn config_file_is_read_and_flags_take_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.conf");
    let mut file = std::fs::File::create(&path).unwrap();
    writeln!(file, "# sample configuration").unwrap();
    writeln!(file, "level = 4").unwrap();
    writeln!(file, "weight = 11/2").unwrap();
    writeln!(file, "s = 2.6").unwrap();
    writeln!(file, "tol = 1e-6").unwrap();
    drop(file);

    let from_file = options_from_file(&path).unwrap();
    assert_eq!(from_file.level, Some(4));
    assert_eq!(from_file.weight.as_deref(), Some("11/2"));

    // File alone: 11/2 fails the precondition.
    let cfg = resolve(Command::Certify, &from_file.clone().merged_with(Options::default())).unwrap();
    let (out, _, code) = run_to_string(&cfg);
    assert_eq!(code, EXIT_CHECK_FAILED);
    assert!(out.contains("precondition-failed"));

    // A --m flag overrides the file and flips the outcome.
    let flags = Options { weight: Some("25/2".into()), s: Some("3.0".into()), ..Default::default() };
    let cfg = resolve(Command::Certify, &from_file.merged_with(flags)).unwrap();
    assert_eq!(cfg.tol, 1e-6); // file value survives where no flag was given
    let (out, _, code) = run_to_string(&cfg);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("certified-nonvanishing"));

    // Unknown keys are config errors.
    let bad = dir.path().join("bad.conf");
    std::fs::write(&bad, "levle = 4\n").unwrap();
    assert!(options_from_file(&bad).is_err());
}

#[test]
fn out_file_receives_the_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.txt");
    let o = Options {
        weight: Some("25/2".into()),
        s: Some("3.0".into()),
        out: Some(path.clone()),
        ..Default::default()
    };
    let cfg = resolve(Command::Certify, &o).unwrap();
    let (stdout_text, _, _) = run_to_string(&cfg);
    let file_text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(stdout_text, file_text);
}

#[test]
fn complex_flag_forms() {
    assert_eq!(parse_complex("3+0i").unwrap(), num_complex::Complex64::new(3.0, 0.0));
    assert_eq!(parse_complex("4.5-1.25i").unwrap(), num_complex::Complex64::new(4.5, -1.25));
}
