use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn liouville(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_liouville")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn run(dir: &TempDir, name: &str, body: &str, extra: &[&str]) -> (Output, std::path::PathBuf) {
    let cfg = write_config(dir.path(), &format!("{name}.cfg"), body);
    let out = dir.path().join(name);
    let mut args = vec!["run", "--config", &cfg, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    (liouville(&args), out)
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn thompson_schedule_rows() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "t.cfg", "group = thompson\nJ = 3\n");
    let out = dir.path().join("s");
    let o = liouville(&["schedule", "--config", &cfg, "--out", out.to_str().unwrap()]);
    // scales 2 and 3 need family indices beyond the default grid
    assert_eq!(code(&o), 1);
    let r = rows(&out.join("schedule.csv"));
    let m: Vec<&str> = r.iter().map(|row| row[2].as_str()).collect();
    assert_eq!(m, ["1", "3", "9"]);
    assert_eq!(r[0][1], "1");
    assert_eq!(r[1][1], "");
}

#[test]
fn thompson_truncated_run_holds() {
    let dir = TempDir::new().unwrap();
    let (o, out) = run(&dir, "t1", "group = thompson\nJ = 1\n", &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let decay = rows(&out.join("tv_decay.csv"));
    assert_eq!(decay.len(), 4);
    assert_eq!(decay[1], ["1", "1/4", "16/21", "7", "7", "0e0"]);
}

#[test]
fn lamplighter_z_run() {
    let dir = TempDir::new().unwrap();
    let (o, out) = run(&dir, "lz", "group = lamplighter-z\nJ = 3\nsvg = true\n", &[]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(code(&o), 0, "{stdout}");
    assert_eq!(stdout.matches("coupled_tv=0/1").count(), 3);
    assert_eq!(stdout.matches("holds=true").count(), 3);
    let sched = rows(&out.join("schedule.csv"));
    let n: Vec<&str> = sched.iter().map(|r| r[1].as_str()).collect();
    assert_eq!(n, ["1", "20", "1088"]);
    let decay = rows(&out.join("tv_decay.csv"));
    assert_eq!(decay.len(), 10);
    assert!(fs::read_to_string(out.join("decay.svg")).unwrap().contains("<polyline"));
    assert!(out.join("cheeger.csv").exists());
}

#[test]
fn contrast_preset_is_report_only() {
    let dir = TempDir::new().unwrap();
    let (o, out) = run(&dir, "c", "group = thompson\npreset = contrast\nhorizon = 6\n", &[]);
    assert_eq!(code(&o), 0);
    let decay = rows(&out.join("tv_decay.csv"));
    assert_eq!(decay.len(), 2 * 7);
    assert_eq!(rows(&out.join("schedule.csv")).len(), 0);
    assert!(fs::read_to_string(out.join("report.txt")).unwrap().contains("report only"));
}

#[test]
fn identical_runs_compare_clean() {
    let dir = TempDir::new().unwrap();
    let body = "group = lamplighter-z\nJ = 3\n";
    let (_, a) = run(&dir, "a", body, &[]);
    let (_, b) = run(&dir, "b", body, &[]);
    let o = liouville(&["compare", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "no differences");
}

#[test]
fn worker_count_does_not_change_exact_output() {
    let dir = TempDir::new().unwrap();
    for (name, body) in [("t", "group = thompson\nJ = 1\n"), ("z", "group = lamplighter-z\nJ = 2\n")] {
        let (_, a) = run(&dir, &format!("{name}1"), body, &["--workers", "1"]);
        let (_, b) = run(&dir, &format!("{name}4"), body, &["--workers", "4"]);
        for f in ["manifest.txt", "schedule.csv", "tv_decay.csv", "cheeger.csv", "report.txt"] {
            assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{name}: {f}");
        }
        let o = liouville(&["compare", a.to_str().unwrap(), b.to_str().unwrap()]);
        assert_eq!(code(&o), 0);
    }
}

#[test]
fn float_and_exact_agree_within_pruned_mass() {
    let dir = TempDir::new().unwrap();
    let (_, a) = run(&dir, "e", "group = thompson\npreset = contrast\nhorizon = 8\n", &[]);
    let (_, b) = run(&dir, "f", "group = thompson\npreset = contrast\nhorizon = 8\nmode = float\nprune = 1e-4\n", &[]);
    let o = liouville(&["compare", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let float_rows = rows(&b.join("tv_decay.csv"));
    assert!(float_rows.iter().any(|r| r[5] != "0e0"), "pruning never triggered");
}

#[test]
fn compare_reports_edits_and_schema_mismatch() {
    let dir = TempDir::new().unwrap();
    let body = "group = thompson\nJ = 1\n";
    let (_, a) = run(&dir, "a", body, &[]);
    let (_, b) = run(&dir, "b", body, &[]);
    let decay = fs::read_to_string(b.join("tv_decay.csv")).unwrap().replace("16/21", "17/21");
    fs::write(b.join("tv_decay.csv"), decay).unwrap();
    let o = liouville(&["compare", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("tv_decay.csv:3:tv: 16/21 != 17/21"));

    let manifest = fs::read_to_string(b.join("manifest.txt")).unwrap().replace("schema = 1", "schema = 2");
    fs::write(b.join("manifest.txt"), manifest).unwrap();
    let o = liouville(&["compare", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn bad_config_exits_with_two() {
    let dir = TempDir::new().unwrap();
    for body in ["group = sl2z\n", "group = thompson\nJ = x\n", "J = 3\n", "group = thompson\nbasepoint = 3/2\n"] {
        let (o, _) = run(&dir, "bad", body, &[]);
        assert_eq!(code(&o), 2, "{body:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = liouville(&["run", "--config", "/nonexistent/x.cfg", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn graph_family_and_cheeger_commands() {
    let dir = TempDir::new().unwrap();
    let d = |s: &str| dir.path().join(s).to_str().unwrap().to_string();

    let o = liouville(&["build-graph", "--group", "free-group", "--radius", "2", "--out", &d("g")]);
    assert_eq!(code(&o), 0);
    assert_eq!(rows(&dir.path().join("g/vertices.csv")).len(), 17);

    let o = liouville(&["make-family", "--group", "thompson", "--index", "2", "--out", &d("f")]);
    assert_eq!(code(&o), 0);
    let fam = rows(&dir.path().join("f/family.csv"));
    assert_eq!(fam[1], ["1", "7", "4/7", "5", "1", "2/7"]);
    assert!(dir.path().join("f/measure_2.csv").exists());

    let o = liouville(&["cheeger", "--graph", "cycle:4", "--out", &d("c4")]);
    assert_eq!(code(&o), 0);
    let c4 = rows(&dir.path().join("c4/cheeger.csv"));
    assert_eq!(c4[0][4], "1/1");
    assert_eq!(c4[0][8], "true");
}
