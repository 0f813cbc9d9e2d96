use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

fn megaloop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_megaloop"))
        .args(args)
        .stdin(Stdio::null())
        .output()
        .expect("binary runs")
}

fn corpus() -> Vec<String> {
    let f = fixtures();
    let mut files = vec![f.join("events.evt").display().to_string()];
    for (dir, ext) in [("fld", "fld"), ("ld", "ld"), ("patch", "patch")] {
        let mut found: Vec<String> = std::fs::read_dir(f.join(dir))
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|x| x == ext))
            .map(|p| p.display().to_string())
            .collect();
        found.sort();
        files.extend(found);
    }
    files
}

fn run_args(ld: &str, script: &str, trace: &str) -> Vec<String> {
    let f = fixtures();
    vec![
        "run".into(),
        f.join("ld").join(ld).display().to_string(),
        "--fld-dir".into(),
        f.join("fld").display().to_string(),
        "--script".into(),
        f.join("script").join(script).display().to_string(),
        "--virtual-clock".into(),
        "--duration".into(),
        "5".into(),
        "--trace-file".into(),
        trace.into(),
    ]
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

#[test]
fn corpus_validates() {
    let files = corpus();
    let args: Vec<&str> = std::iter::once("validate").chain(files.iter().map(String::as_str)).collect();
    let out = megaloop(&args);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stdout));
}

#[test]
fn corrupted_fixture_fails_with_a_span() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("self-repair.fld");
    let pristine = std::fs::read_to_string(fixtures().join("fld/self-repair.fld")).unwrap();
    std::fs::write(&bad, pristine.replace("flow Effect.done -> Executed", "flow Effect.done -> Finished")).unwrap();
    let out = megaloop(&["validate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("E-FLOW-ENDPOINT"), "{stdout}");
    assert!(stdout.contains("self-repair.fld:"), "{stdout}");
}

#[test]
fn empty_file_list_is_a_usage_error() {
    let out = megaloop(&["validate"]);
    assert!(!out.status.success());
    assert!(text(&out.stderr).contains("Usage"));
}

#[test]
fn one_crash_dispatches_one_repair() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.log");
    let args = run_args("self-repair.ld", "one-crash.script", trace.to_str().unwrap());
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let out = megaloop(&args);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let log = std::fs::read_to_string(&trace).unwrap();
    let repairs = log.lines().filter(|l| l.contains(" opStart Repair ")).count();
    assert_eq!(repairs, 1, "{log}");
}

#[test]
fn virtual_clock_replays_are_byte_equal() {
    let dir = tempfile::tempdir().unwrap();
    let logs: Vec<Vec<u8>> = (0..2)
        .map(|i| {
            let trace = dir.path().join(format!("trace{i}.log"));
            let args = run_args("self-repair-strategies.ld", "novel-failure.script", trace.to_str().unwrap());
            let args: Vec<&str> = args.iter().map(String::as_str).collect();
            let out = megaloop(&args);
            assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
            std::fs::read(&trace).unwrap()
        })
        .collect();
    assert!(!logs[0].is_empty());
    assert_eq!(logs[0], logs[1]);
}

#[test]
fn unknown_megamodel_is_a_load_error() {
    let dir = tempfile::tempdir().unwrap();
    let ld = dir.path().join("broken.ld");
    let pristine = std::fs::read_to_string(fixtures().join("ld/self-repair.ld")).unwrap();
    std::fs::write(&ld, pristine.replace("\"Self-repair-A\"", "\"Self-repair-B\"")).unwrap();
    let fld = fixtures().join("fld");
    let out = megaloop(&["run", ld.to_str().unwrap(), "--fld-dir", fld.to_str().unwrap(), "--virtual-clock", "--duration", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("Self-repair-B"), "{}", text(&out.stderr));
}

#[test]
fn stdin_control_patches_a_live_engine() {
    let dir = tempfile::tempdir().unwrap();
    let snap = dir.path().join("snap.json");
    let f = fixtures();
    let mut child = Command::new(env!("CARGO_BIN_EXE_megaloop"))
        .args([
            "run",
            f.join("ld/self-repair.ld").to_str().unwrap(),
            "--fld-dir",
            f.join("fld").to_str().unwrap(),
            "--trace-file",
            dir.path().join("trace.log").to_str().unwrap(),
        ])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let requests = format!(
        "list\npatch {}\nlist\nfrobnicate\nsnapshot {}\nstop\n",
        f.join("patch/add-strategies.patch").display(),
        snap.display()
    );
    child.stdin.take().unwrap().write_all(requests.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(3), "the malformed request is reported");
    let stdout = text(&out.stdout);
    let frames: Vec<&str> = stdout.split("\n\n").collect();
    assert!(frames[0].starts_with("ok") && !frames[0].contains("Layer-2"), "{stdout}");
    assert!(frames[1].starts_with("ok\napplied AddStrategiesLoop"), "{stdout}");
    assert!(frames[2].contains("layer 2 \"Layer-2\""), "{stdout}");
    assert!(frames[3].starts_with("error E-CONTROL"), "{stdout}");
    assert_eq!(frames[3].lines().count(), 1);
    assert!(frames[4].starts_with("ok\nwrote"), "{stdout}");
    let snapshot = std::fs::read_to_string(&snap).unwrap();
    assert!(snapshot.contains("strategies"));
}

#[test]
fn bench_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bench.csv");
    let out = megaloop(&["bench", "--seconds", "0.2", "--compute", "0,20", "--period", "60", "--csv", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert!(text(&out.stderr).contains("20ms/60ms: infeasible"));
    let body = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(body.lines().count(), 4, "{body}");
    assert!(body.contains("c20ms_p60ms,infeasible"));
}
