mod common;

use std::path::{Path, PathBuf};
use std::process::Command;

use common::oracle::{brute_force_points, test_curves};
use smoothparam::cli::*;
use smoothparam::error::Error;

fn goldens() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("goldens");
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

fn knobs(text: &str) -> Knobs {
    parse_config(text).unwrap()
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_smoothparam"))
}

#[test]
fn golden_corpus_passes() {
    let paths = goldens();
    assert!(paths.len() >= 20);
    let mut bad = Vec::new();
    for p in &paths {
        let case = load_golden(p).unwrap();
        match run_golden(&case) {
            Ok(m) if m.is_empty() => {}
            Ok(m) => bad.push(format!("{}: {m:?}", p.display())),
            Err(e) => bad.push(format!("{}: {e}", p.display())),
        }
    }
    assert!(bad.is_empty(), "{bad:#?}");
}

#[test]
fn artifacts_are_deterministic() {
    for cmd in ["parametrize-ck", "parametrize-analytic"] {
        let k = knobs("builtin = \"hyperbola\"\neps = 0.01\ndelta = 0.001\n");
        let a = to_json(&execute(cmd, &k).unwrap().artifact).unwrap();
        let b = to_json(&execute(cmd, &k).unwrap().artifact).unwrap();
        assert_eq!(a, b, "{cmd}");
        assert_eq!(to_json(&parse_artifact(&a).unwrap()).unwrap(), a);
    }
}

#[test]
fn tampered_bound_names_the_chart() {
    let k = knobs("builtin = \"hyperbola\"\neps = 0.01\nk = 2\n");
    let mut a = execute("parametrize-ck", &k).unwrap().artifact;
    assert!(verify_artifact(&a).unwrap().pass);
    let Body::CkParametrization { parametrizations } = &mut a.body else { panic!("wrong body") };
    let chart = parametrizations.iter_mut().flat_map(|p| p.charts.iter_mut()).find(|c| c.id == 2).unwrap();
    chart.certificate.as_mut().unwrap().verified_bound = 2.0;
    let r = verify_artifact(&a).unwrap();
    assert!(!r.pass);
    assert!(r.failures.iter().any(|f| f.contains("chart 2")), "{:?}", r.failures);
}

#[test]
fn schema_version_is_checked() {
    let a = execute("entropy", &knobs("builtin = \"identity\"\nn-max = 3\neps = 0.1\n")).unwrap().artifact;
    let text = to_json(&a).unwrap().replacen("\"schema_version\": 1", "\"schema_version\": 99", 1);
    assert!(matches!(parse_artifact(&text), Err(Error::SchemaMismatch { found: 99, .. })));
}

#[test]
fn unknown_config_keys_are_rejected() {
    assert!(parse_config("builtin = \"parabola\"\nbogus = 3\n").is_err());
    assert!(parse_config("t-max = \"many\"\n").is_err());
    let k = knobs("t-max = 7\nkappa-variant = \"truncated_at_k\"\n");
    assert_eq!(k.t_max, Some(7));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "builtin = \"parabola\"\nt-max = 9\nseed = 4\n").unwrap();
    let flags = Knobs { t_max: Some(3), ..Knobs::default() };
    let k = resolve(Some(&path), Some(2), flags).unwrap();
    assert_eq!((k.t_max, k.seed, k.jobs), (Some(3), Some(4), Some(2)));
    assert_eq!(k.builtin.as_deref(), Some("parabola"));
}

#[test]
fn point_csv_matches_oracle() {
    let (_, _, curve) = test_curves().into_iter().find(|c| c.0 == "x^2").unwrap();
    let expected: usize = (1..=100).map(|t| brute_force_points(&curve, t).len()).sum();
    let out = execute("count-points", &knobs("builtin = \"parabola\"\nt-max = 100\n")).unwrap();
    let csv = out.csv.unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,x,y"));
    assert_eq!(lines.count(), expected);
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let art = dir.path().join("points.json");
    let csv = dir.path().join("points.csv");
    let st = bin()
        .args(["count-points", "--builtin", "parabola", "--t-max", "5", "--output"])
        .arg(&art)
        .arg("--csv")
        .arg(&csv)
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(0));
    assert!(std::fs::read_to_string(&csv).unwrap().starts_with("t,x,y"));
    assert_eq!(bin().arg("verify").arg(&art).output().unwrap().status.code(), Some(0));

    let ck = dir.path().join("ck.json");
    let st = bin().args(["parametrize-ck", "--builtin", "hyperbola", "--eps", "0.01", "--output"]).arg(&ck).status();
    assert_eq!(st.unwrap().code(), Some(0));
    let mut a = parse_artifact(&std::fs::read_to_string(&ck).unwrap()).unwrap();
    if let Body::CkParametrization { parametrizations } = &mut a.body {
        parametrizations[0].charts[0].certificate.as_mut().unwrap().verified_bound = 2.0;
    }
    std::fs::write(&ck, to_json(&a).unwrap()).unwrap();
    assert_eq!(bin().arg("verify").arg(&ck).output().unwrap().status.code(), Some(2));

    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "colour = 1\n").unwrap();
    let out = bin().arg("--config").arg(&cfg).args(["count-points", "--builtin", "parabola"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
    let out = bin().args(["remez", "--builtin", "no-such-thing"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}
