use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_helicity"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL_TUBE: &str = r#"{
  "domain": { "kind": "torus", "major_radius": 1.0, "minor_radius": 0.5 },
  "field": { "kind": "tube", "loop_radius": 1.0, "tube_radius": 0.35, "flux": 1.0, "twist": 0.8 },
  "grid": { "h": 0.1 }
}"#;

const SMALL_SWEEP: &str = r#"{
  "domain": { "kind": "torus", "major_radius": 1.0, "minor_radius": 0.5 },
  "field": { "kind": "tube", "loop_radius": 1.0, "tube_radius": 0.35, "flux": 1.0, "twist": 0.8 },
  "flow": { "kind": "uniform_pulsation", "amplitude": 0.3, "frequency": 1.0 },
  "grid": { "h": 0.1 },
  "times": [0.0, 0.5, 1.0],
  "options": { "boundary_u": 32, "boundary_v": 16 }
}"#;

#[test]
fn hopf_link_prints_unit_link_and_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("hopf.json");
    let o = run(&["link", "--config", s(&configs().join("hopf.json")), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "link = 1.000");
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!((doc["result"]["link"].as_f64().unwrap() - 1.0).abs() < 1e-3);
    assert_eq!(doc["command"], "link");
    assert_eq!(doc["config"]["options"]["curves"][0]["segments"], 256);
}

#[test]
fn missing_config_exits_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never.json");
    let o = run(&["link", "--config", s(&dir.path().join("absent.json")), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn unknown_subcommand_exits_2_with_usage() {
    let o = run(&["linkk", "--config", "x.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn schema_violations_exit_2_before_any_work() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.json");
    let cases = [
        r#"{"domain": {"kind": "ball", "radius": 1}, "grid": {"h": 0.1}, "colour": 3}"#,
        r#"{"domain": {"kind": "ball", "radius": -1}, "grid": {"h": 0.1}}"#,
        r#"{"domain": {"kind": "ball", "radius": 1}, "grid": {"h": 0.1}, "options": {"amplitude": 1, "extra": 0}}"#,
        r#"{"domain": {"kind": "torus", "major_radius": 1, "minor_radius": 0.5}, "grid": {"h": 0.1}}"#,
        "not json",
    ];
    for (i, text) in cases.iter().enumerate() {
        let cfg = write(dir.path(), &format!("c{i}.json"), text);
        let o = run(&["spheromak-check", "--config", s(&cfg), "--out", s(&out)]);
        assert_eq!(o.status.code(), Some(2), "case {i}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!out.exists(), "case {i} left output behind");
    }
    let cfg = write(dir.path(), "ok.json", SMALL_TUBE);
    let o = run(&["helicity", "--config", s(&cfg), "--out", s(&out), "--threads", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn gate_failures_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.json");
    // a flux tube has vorticity, so the curl-free decomposition must refuse it
    let text = SMALL_TUBE.replace("\"grid\"", "\"options\": {}, \"grid\"");
    let cfg = write(dir.path(), "tube.json", &text);
    let o = run(&["hodge", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out.exists());

    let text = SMALL_TUBE.replace("\"grid\"", "\"options\": {\"tolerance\": 1e-9}, \"grid\"");
    let cfg = write(dir.path(), "strict.json", &text);
    let o = run(&["bs", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn spacing_override_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "tube.json", SMALL_TUBE);
    let out = dir.path().join("h.json");
    let o = run(&["helicity", "--config", s(&cfg), "--out", s(&out), "--h", "0.12"]);
    assert_eq!(o.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["config"]["grid"]["h"], 0.12);
    assert_eq!(doc["result"]["report"]["h"], 0.12);
    assert_eq!(doc["config"]["options"]["method"], "bs");
}

#[test]
fn conserve_writes_csv_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sweep.json", SMALL_SWEEP);
    let out = dir.path().join("sweep.csv");
    let o = run(&["conserve", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,H_bs,E,dEdt_formula,dEdt_fd,phi_1");
    assert_eq!(lines.len(), 4);
    assert!(!text.contains('\r'));
    for l in &lines[1..] {
        let cells: Vec<f64> = l.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cells.len(), 6);
    }
}

#[test]
fn repeated_and_threaded_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let jobs = [("helicity", SMALL_TUBE, "json"), ("conserve", SMALL_SWEEP, "csv")];
    for (cmd, text, ext) in jobs {
        let cfg = write(dir.path(), &format!("{cmd}.json"), text);
        let mut outputs = Vec::new();
        for (k, threads) in ["1", "2", "1", "2"].iter().enumerate() {
            let out = dir.path().join(format!("{cmd}_{k}.{ext}"));
            let o = run(&[cmd, "--config", s(&cfg), "--out", s(&out), "--threads", threads]);
            assert_eq!(o.status.code(), Some(0));
            outputs.push(std::fs::read(&out).unwrap());
        }
        assert!(outputs.windows(2).all(|w| w[0] == w[1]), "{cmd} output differs between runs");
    }
}

#[test]
fn output_falls_back_to_config_entry() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from_config.json");
    let text = format!(
        r#"{{"options": {{"curve": {{"kind": "circle", "radius": 1, "segments": 64}}}}, "output": {:?}}}"#,
        s(&target)
    );
    let cfg = write(dir.path(), "w.json", &text);
    let o = run(&["writhe", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("writhe = "));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&target).unwrap()).unwrap();
    assert!(doc["result"]["writhe"].as_f64().unwrap().abs() < 1e-12);
}
