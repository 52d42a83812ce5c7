use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const MINIMAL: &str = r#"
[study]
name = "minimal"
dim = 1
function = "sin_pi_x"
method = "multilinear"
boosters = ["none", "bfecc"]

[domain]
lower = [0.0]
upper = [1.0]

[ladder]
spacings = [0.05, 0.025]

[target]
kind = "shift"
shift = [0.25]
"#;

fn bfecc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bfecc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn preset_list_names_every_table() {
    let o = bfecc(&["preset", "list"]);
    assert!(o.status.success());
    let out = stdout(&o);
    for n in 1..=13 {
        assert!(out.lines().any(|l| l.starts_with(&format!("table{n} "))), "table{n}");
    }
}

#[test]
fn minimal_config_writes_two_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "minimal.toml", MINIMAL);
    let out_dir = dir.path().join("out");
    let o = bfecc(&["study", "run", &cfg, "--out-dir", out_dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(out_dir.join("minimal.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "level,spacing,method,linf,rms,order_linf,order_rms,nodes_measured"
    );
    // one row per level and booster
    assert_eq!(lines.count(), 4);
    assert!(out_dir.join("minimal.txt").exists());
}

#[test]
fn exported_preset_runs_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("table2.toml");
    let o = bfecc(&["preset", "export", "table2", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));

    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let run = bfecc(&["study", "run", cfg.to_str().unwrap(), "--out-dir", a.to_str().unwrap()]);
    let pre = bfecc(&["study", "preset", "table2", "--out-dir", b.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(0));
    assert_eq!(pre.status.code(), Some(0));
    assert_eq!(stdout(&run), stdout(&pre));
    let ca = fs::read(a.join("table2.csv")).unwrap();
    let cb = fs::read(b.join("table2.csv")).unwrap();
    assert_eq!(ca, cb);
}

#[test]
fn thread_cap_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let mut csvs = Vec::new();
    for threads in ["1", "4"] {
        let out = dir.path().join(threads);
        let o = Command::new(env!("CARGO_BIN_EXE_bfecc"))
            .args(["study", "preset", "table3", "--out-dir", out.to_str().unwrap()])
            .env("BFECC_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        csvs.push(fs::read(out.join("table3.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);

    let o = Command::new(env!("CARGO_BIN_EXE_bfecc"))
        .args(["preset", "list"])
        .env("BFECC_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("BFECC_THREADS"));
}

#[test]
fn out_of_range_shift_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", &MINIMAL.replace("shift = [0.25]", "shift = [1.5]"));
    let o = bfecc(&["study", "run", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("target.shift[0]"), "{}", stderr(&o));
}

#[test]
fn unknown_key_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let text = MINIMAL.replace("kind = \"shift\"", "kind = \"shift\"\nalpha = 0.25");
    let cfg = write(dir.path(), "typo.toml", &text);
    let o = bfecc(&["study", "run", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line 18") && err.contains("alpha"), "{err}");
}

#[test]
fn failing_check_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "{MINIMAL}\n[[check]]\nkind = \"orders\"\nbooster = \"bfecc\"\nexpected = [5.0]\ntol = 0.1\n"
    );
    let cfg = write(dir.path(), "strict.toml", &text);
    let o = bfecc(&["study", "run", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).lines().any(|l| l.starts_with("FAIL ")), "{}", stdout(&o));
}

#[test]
fn preset_run_reports_passing_checks() {
    let dir = tempfile::tempdir().unwrap();
    let o = bfecc(&["study", "preset", "table1", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(out.lines().filter(|l| l.starts_with("PASS ")).count(), 2, "{out}");
    assert!(dir.path().join("table1.csv").exists());
    assert!(dir.path().join("table1.txt").exists());
}

#[test]
fn unknown_preset_is_an_error() {
    let o = bfecc(&["study", "preset", "table99"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("table99"));
}

#[test]
fn verify_expansions_passes() {
    let o = bfecc(&["verify", "expansions"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let out = stdout(&o);
    assert!(out.lines().any(|l| l.contains("0.25") && l.contains("h^3")));
    assert!(out.lines().any(|l| l.contains("0.5") && l.contains("h^4")));
    assert!(!out.contains("FAIL"));
}
