use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

fn coverplan(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coverplan"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("COVERPLAN_OUT")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn plan_writes_json_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let o = coverplan(dir.path(), &["plan", s(&data("room.json"))]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("cells=1 "));
    let plan: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("plan.json")).unwrap()).unwrap();
    assert_eq!(plan["schema"], 1);
    assert!(plan["plan"]["waypoints"].as_array().unwrap().len() >= 2);
    assert!(fs::read_to_string(dir.path().join("plan.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn baseline_prints_comparison_row() {
    let dir = tempfile::tempdir().unwrap();
    let l_shape = write(
        dir.path(),
        "l.json",
        r#"{"schema": 1, "vertices": [[0,0],[6,0],[6,2],[2,2],[2,5],[0,5]]}"#,
    );
    let o = coverplan(dir.path(), &["plan", s(&l_shape), "--baseline"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[1], "vertices,turns_baseline,turns_new,length_classic,length_new");
    let row: Vec<f64> = lines[2].split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(row[0], 6.0);
    assert!(row[2] <= row[1]);
    assert!(row[4] <= row[3] + 1e-3);
}

#[test]
fn interior_start_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = coverplan(dir.path(), &["plan", s(&data("room.json")), "--start", "5,3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("error"));
}

#[test]
fn malformed_input_exits_1_with_pointer() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"schema": 1, "vertices": [[0,0],[1,0],[1,"y"]]}"#);
    let o = coverplan(dir.path(), &["plan", s(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("/vertices/2/1"), "{}", stderr(&o));

    let broken = write(dir.path(), "broken.json", "{ not json");
    assert_eq!(coverplan(dir.path(), &["plan", s(&broken)]).status.code(), Some(1));
    assert_eq!(coverplan(dir.path(), &["plan", "--bogus"]).status.code(), Some(1));
}

#[test]
fn empty_corpus_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("empty");
    fs::create_dir(&corpus).unwrap();
    assert_eq!(coverplan(dir.path(), &["report", s(&corpus)]).status.code(), Some(1));
}

#[test]
fn env_var_overrides_out() {
    let dir = tempfile::tempdir().unwrap();
    let env_dir = dir.path().join("from_env");
    let o = Command::new(env!("CARGO_BIN_EXE_coverplan"))
        .args(["plan", s(&data("room.json")), "--out", s(&dir.path().join("flag"))])
        .env("COVERPLAN_OUT", &env_dir)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(env_dir.join("plan.json").is_file());
    assert!(!dir.path().join("flag").exists());
}

#[test]
fn corpus_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let o = coverplan(&corpus, &["corpus", "--count", "4", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report_dir = dir.path().join("report");
    let o = coverplan(&report_dir, &["report", s(&corpus)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 5);
    let table = fs::read_to_string(report_dir.join("table.csv")).unwrap();
    assert!(table.starts_with("name,vertices,"));
    assert!(table.contains("polygon_003,"));
}

fn simulate(world: &str) -> (tempfile::TempDir, serde_json::Value) {
    let dir = tempfile::tempdir().unwrap();
    let o = coverplan(dir.path(), &["plan", s(&data("room.json"))]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let plan = dir.path().join("plan.json");
    let o = coverplan(dir.path(), &["simulate", s(&data(world)), s(&plan)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = serde_json::from_slice(&fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    (dir, report)
}

#[test]
fn simulate_static_room() {
    let (dir, report) = simulate("worlds/room_static.json");
    assert!(report["metrics"]["coverage_ratio"].as_f64().unwrap() >= 0.98);
    assert_eq!(report["metrics"]["replan_events"], 0);
    for name in ["traj.svg", "metrics.csv", "occupancy.pgm"] {
        assert!(dir.path().join(name).is_file(), "{name}");
    }
    let pgm = fs::read(dir.path().join("occupancy.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n"));
    let csv = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    assert!(csv.starts_with("t,x,y,theta,coverage_ratio,best_heading,area_error"));
}

#[test]
fn simulate_box_replans_once() {
    let (_dir, report) = simulate("worlds/room_box.json");
    assert_eq!(report["metrics"]["replan_events"], 1);
}

#[test]
fn runs_are_byte_identical() {
    let (a_dir, _) = simulate("worlds/room_box.json");
    let (b_dir, _) = simulate("worlds/room_box.json");
    for name in ["plan.json", "report.json", "metrics.csv"] {
        assert_eq!(
            fs::read(a_dir.path().join(name)).unwrap(),
            fs::read(b_dir.path().join(name)).unwrap(),
            "{name}"
        );
    }
}
