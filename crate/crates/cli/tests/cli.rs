use std::path::Path;
use std::process::{Command, Output};

fn speclab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_speclab")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(p: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn polya_boxes2_passes() {
    let o = speclab(&["verify", "--suite", "polya", "--family", "boxes2", "--lambda-max", "1e4"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).starts_with("PASS polya samples="));
}

#[test]
fn riesz_on_interval_prints_sixteen() {
    let len = "3.14159265";
    let o = speclab(&["riesz", "--domain", &format!("interval:{len}"), "--bc", "D", "--gamma", "1", "--lambda", "10"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    let value = |key: &str| -> f64 { out.lines().find_map(|l| l.strip_prefix(key)).unwrap().trim().parse().unwrap() };
    // (10 − 1) + (10 − 4) + (10 − 9) on the near-π interval
    assert!((value("trace ") - 16.0).abs() < 1e-6);
    let weyl = 2.0 / (3.0 * std::f64::consts::PI) * len.parse::<f64>().unwrap() * 10f64.powf(1.5);
    assert!((value("ratio ") - value("trace ") / weyl).abs() < 1e-12);
}

#[test]
fn injected_violation_exits_one() {
    let o = speclab(&["verify", "--suite", "polya", "--family", "boxes2", "--inject-violation"]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    assert!(stdout(&o).contains("FAIL polya"));
    assert!(stdout(&o).contains("violations=1 "));
}

#[test]
fn usage_errors_exit_two_with_distinct_messages() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.manifest");
    std::fs::write(&bad, "suite polya\n").unwrap();
    let cases: [(Vec<&str>, &str); 5] = [
        (vec!["spectrum", "--domain", "blob:1", "--lambda-max", "10"], "unknown domain tag"),
        (vec!["verify", "--manifest", bad.to_str().unwrap()], "expected key = value"),
        (vec!["spectrum", "--domain", "disk:1", "--lambda-max", "1e12"], "budget exceeded"),
        (vec!["verify", "--suite", "nonsense"], "unknown suite"),
        (vec!["verify", "--suite", "laptev", "--threads", "0"], "threads"),
    ];
    for (args, msg) in cases {
        let o = speclab(&args);
        assert_eq!(code(&o), 2, "{args:?}");
        assert!(stderr(&o).contains(msg), "{args:?}: {}", stderr(&o));
    }
    assert_eq!(code(&speclab(&["frobnicate"])), 2);
}

#[test]
fn manifest_command_must_match() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("run.manifest");
    std::fs::write(&m, "command = riesz\ndomain = box:1,1\nlambda = 100\n").unwrap();
    let o = speclab(&["spectrum", "--manifest", m.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert_eq!(code(&speclab(&["riesz", "--manifest", m.to_str().unwrap()])), 0);
}

#[test]
fn flags_override_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("run.manifest");
    std::fs::write(&m, "# unit square\ndomain = box:1,1\nbc = D\ngamma = 1\nlambda = 100\n").unwrap();
    let base = stdout(&speclab(&["riesz", "--manifest", m.to_str().unwrap()]));
    let over = stdout(&speclab(&["riesz", "--manifest", m.to_str().unwrap(), "--lambda", "200"]));
    let direct = stdout(&speclab(&["riesz", "--domain", "box:1,1", "--bc", "D", "--gamma", "1", "--lambda", "200"]));
    assert_ne!(base, over);
    assert_eq!(over, direct);
}

#[test]
fn csv_outputs_carry_headers() {
    let dir = tempfile::tempdir().unwrap();
    let csv = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let runs: [(Vec<String>, &str); 4] = [
        (vec!["spectrum".into(), "--domain".into(), "box:1,1".into(), "--lambda-max".into(), "100".into()], "value,multiplicity"),
        (vec!["collapse".into(), "--bc".into(), "N".into()], speclab::experiments::COLLAPSE_CSV_HEADER),
        (
            vec!["shapeopt".into(), "--family".into(), "rect2".into(), "--lambda".into(), "1e3".into()],
            speclab::experiments::TRAJECTORY_CSV_HEADER,
        ),
        (vec!["report".into(), "--domain".into(), "disk:1".into()], speclab::riesz::REPORT_CSV_HEADER),
    ];
    for (i, (mut args, header)) in runs.into_iter().enumerate() {
        let path = csv(&format!("out{i}.csv"));
        args.extend(["--csv".to_string(), path.clone()]);
        let o = speclab(&args.iter().map(String::as_str).collect::<Vec<_>>());
        assert_eq!(code(&o), 0, "{args:?}: {}", stderr(&o));
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next(), Some(header), "{args:?}");
        assert!(text.lines().count() > 1);
    }
}

#[test]
fn json_reports_carry_schema_and_hash() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let args = ["verify", "--suite", "laptev", "--samples", "2000"];
    assert_eq!(code(&speclab(&[&args[..], &["--json", a.to_str().unwrap()]].concat())), 0);
    assert_eq!(code(&speclab(&[&args[..], &["--json", b.to_str().unwrap(), "--seed", "2"]].concat())), 0);
    let (ja, jb) = (read_json(&a), read_json(&b));
    assert_eq!(ja["schema_version"], 1);
    assert_eq!(ja["command"], "verify");
    let hash = ja["manifest_hash"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    assert_ne!(jb["manifest_hash"].as_str().unwrap(), hash);
    assert_eq!(ja["reports"][0]["violations"], 0);
}

#[test]
fn thread_count_does_not_change_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 3] = [
        &["verify", "--suite", "semiclassical", "--family", "disks", "--lambda-max", "1e3"],
        &["verify", "--suite", "cylinder_lift"],
        &["collapse", "--bc", "N"],
    ];
    for args in runs {
        let mut outs = Vec::new();
        for threads in ["1", "8"] {
            let json = dir.path().join(format!("t{threads}.json"));
            let csv = dir.path().join(format!("t{threads}.csv"));
            let extra = ["--threads", threads, "--json", json.to_str().unwrap(), "--csv", csv.to_str().unwrap()];
            let o = speclab(&[args, &extra[..]].concat());
            assert_eq!(code(&o), 0, "{args:?}: {}", stderr(&o));
            let csv_text = std::fs::read(&csv).unwrap_or_default();
            outs.push((stdout(&o), std::fs::read(&json).unwrap(), csv_text));
        }
        assert!(outs[0] == outs[1], "{args:?} differs between 1 and 8 threads");
    }
}
