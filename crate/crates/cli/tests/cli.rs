use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn oseenlab(args: &[&str], out: &Path, threads: Option<usize>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_oseenlab"));
    cmd.args(args).arg("--out").arg(out);
    if let Some(t) = threads {
        cmd.env("OSEENLAB_THREADS", t.to_string());
    }
    cmd.output().expect("binary runs")
}

fn config(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

fn summary(out: &Path) -> String {
    fs::read_to_string(out.join("summary.txt")).expect("summary written")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("case.toml");
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn ellipse_run_is_regular() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = oseenlab(&["run", "--config", &config("ellipse.toml")], &out, None);
    let s = summary(&out);
    assert_eq!(o.status.code(), Some(0), "{s}");
    assert!(s.contains("regularity: regular"), "{s}");
    assert!(s.contains("flatness: Admissible"));
    for f in ["flatness.json", "velocity.csv", "density.csv", "psi.csv", "stream.csv", "lambda.csv", "checks.txt", "verify.json"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let checks = fs::read_to_string(out.join("checks.txt")).unwrap();
    assert!(!checks.contains("FAIL"), "{checks}");
}

#[test]
fn flat_cap_is_inadmissible() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("cap");
    let o = oseenlab(&["run", "--config", &config("cap3.toml")], &out, None);
    assert_eq!(o.status.code(), Some(2));
    let s = summary(&out);
    assert!(s.contains("flatness: Inadmissible"), "{s}");
    assert!(out.join("flatness.json").exists());
    assert!(!out.join("velocity.csv").exists());
}

#[test]
fn classify_only_on_disk() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("c");
    let o = oseenlab(&["classify", "--config", &config("disk.toml")], &out, None);
    assert_eq!(o.status.code(), Some(0));
    assert!(summary(&out).contains("flatness: Admissible"));
    assert!(!out.join("velocity.csv").exists());
}

#[test]
fn malformed_expression_reports_and_writes_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[domain]\nfamily = \"disk\"\n\n[data]\nforce = [\"x1 +* 2\", \"0\"]\n");
    let out = tmp.path().join("bad");
    let o = oseenlab(&["solve", "--config", &cfg], &out, None);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("data.force[0]"), "{err}");
    let s = summary(&out);
    assert!(s.contains("status: error") && s.contains("exit_code: 1"), "{s}");
}

#[test]
fn config_rejections() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        ("[domain]\nfamily = \"disk\"\nradius = -1.0\n", "domain"),
        ("[domain]\nfamily = \"disk\"\n[run]\nn = 300\n", "run.n"),
        ("[domain]\nfamily = \"disk\"\n[run]\nn = [16, 8]\n", "strictly increasing"),
        ("[domain]\nfamily = \"disk\"\n[params]\nmu = 0.0\n", "params"),
        ("[domain]\nfamily = \"disk\"\n[params]\nfriction = \"high\"\n", "params.friction"),
        ("[domain]\nfamily = \"disk\"\ncolour = 1\n", "unknown field"),
        ("[domain]\nfamily = \"square\"\n", "family"),
        ("[domain]\nfamily = \"disk\"\n[manufactured]\nstandard = true\n[data]\nsource = \"1\"\n", "manufactured"),
        ("[domain]\nfamily = \"disk\"\n[run]\nsigma = -1.0\n", "run.sigma"),
    ];
    for (i, (body, needle)) in cases.iter().enumerate() {
        let cfg = write_config(tmp.path(), body);
        let out = tmp.path().join(format!("r{i}"));
        let o = oseenlab(&["solve", "--config", &cfg], &out, None);
        assert_eq!(o.status.code(), Some(1), "case {i}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(needle), "case {i}: {err}");
        assert!(summary(&out).contains("status: error"));
    }
}

#[test]
fn missing_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("m");
    let o = oseenlab(&["solve", "--config", "/nonexistent/case.toml"], &out, None);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot read config"));
}

#[test]
fn overrides_apply() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let o = oseenlab(
        &["solve", "--config", &config("disk.toml"), "--n-override", "8", "--seed", "42"],
        &out,
        None,
    );
    assert_eq!(o.status.code(), Some(0));
    let s = summary(&out);
    assert!(s.contains("basis_size: 8") && s.contains("seed: 42"), "{s}");
    let bad = oseenlab(&["solve", "--config", &config("disk.toml"), "--n-override", "8,x"], &out, None);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn manufactured_study_converges() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("s");
    let o = oseenlab(&["study", "--config", &config("mms.toml")], &out, None);
    let s = summary(&out);
    assert_eq!(o.status.code(), Some(0), "{s}");
    let csv = fs::read_to_string(out.join("study.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    let checks = fs::read_to_string(out.join("checks.txt")).unwrap();
    for name in ["estimate_monitor", "velocity_error_decrease", "density_error_decrease"] {
        assert!(checks.contains(name), "{checks}");
    }
}

#[test]
fn zero_data_study_gives_zero_fields() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[domain]\nfamily = \"disk\"\n[run]\nn = [4, 8, 12]\n");
    let out = tmp.path().join("z");
    let o = oseenlab(&["study", "--config", &cfg], &out, None);
    assert_eq!(o.status.code(), Some(0), "{}", summary(&out));
    let csv = fs::read_to_string(out.join("study.csv")).unwrap();
    for row in csv.lines().skip(1) {
        let cols: Vec<&str> = row.split(',').collect();
        let energy: f64 = cols[1].parse().unwrap();
        assert_eq!(energy, 0.0, "{row}");
    }
}

#[test]
fn study_needs_three_sizes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("t");
    let o = oseenlab(&["study", "--config", &config("disk.toml"), "--n-override", "8,16"], &out, None);
    assert_eq!(o.status.code(), Some(1));
    assert!(summary(&out).contains("at least three"));
}

#[test]
fn thread_count_does_not_change_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let args = ["run", "--config", &config("disk.toml"), "--n-override", "8"];
    assert_eq!(oseenlab(&args, &a, Some(1)).status.code(), Some(0));
    assert_eq!(oseenlab(&args, &b, Some(3)).status.code(), Some(0));
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    for n in names {
        assert_eq!(fs::read(a.join(&n)).unwrap(), fs::read(b.join(&n)).unwrap(), "{n:?}");
    }
}
