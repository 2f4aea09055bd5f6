use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_whisper-sim");

fn sim(args: &[&str], env_seed: Option<&str>) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove("WHISPER_SIM_SEED");
    if let Some(s) = env_seed {
        cmd.env("WHISPER_SIM_SEED", s);
    }
    cmd.output().expect("binary runs")
}

fn write_scenario(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

const SMALL: &str = "name=diss.close\nprotocol=whisper\nfloods=60\nreps=2\nidle_slots=20\n";

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let scn = write_scenario(tmp.path(), "a.scn", SMALL);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let o = sim(&["run", &scn, "--out", out.to_str().unwrap(), "--seed", "11"], None);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (fa, fb) = (read_dir_sorted(&a), read_dir_sorted(&b));
    assert_eq!(fa.len(), 4);
    assert_eq!(fa, fb);
}

#[test]
fn outputs_are_sorted_with_three_decimals() {
    let tmp = tempfile::tempdir().unwrap();
    let scn = write_scenario(tmp.path(), "a.scn", SMALL);
    let out = tmp.path().join("out");
    assert!(sim(&["run", &scn, "--out", out.to_str().unwrap()], None)
        .status
        .success());

    let nodes = std::fs::read_to_string(out.join("nodes.csv")).unwrap();
    let mut lines = nodes.lines();
    assert!(lines.next().unwrap().starts_with("scenario,protocol,node,"));
    let ids: Vec<usize> = lines.map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(ids, (0..27).collect::<Vec<_>>());

    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    let row = summary.lines().nth(1).unwrap();
    for cell in row.split(',').skip(3).filter(|c| !c.is_empty()) {
        let decimals = cell.split_once('.').map(|(_, d)| d.len());
        assert_eq!(decimals, Some(3), "cell `{cell}` in `{row}`");
    }
}

#[test]
fn seed_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let scn = write_scenario(tmp.path(), "a.scn", SMALL);
    let run = |args: &[&str], env: Option<&str>| {
        let out = tmp.path().join(format!("o{}", out_name(args, env)));
        let mut full = vec!["run", &scn, "--out", out.to_str().unwrap()];
        full.extend_from_slice(args);
        let o = sim(&full, env);
        assert!(o.status.success());
        String::from_utf8(o.stdout).unwrap()
    };
    let env5 = run(&[], Some("5"));
    let flag5 = run(&["--seed", "5"], Some("9"));
    let env9 = run(&[], Some("9"));
    assert_eq!(env5, flag5);
    assert_ne!(env5, env9);
}

fn out_name(args: &[&str], env: Option<&str>) -> String {
    format!("{}_{}", args.join("_"), env.unwrap_or("none"))
}

#[test]
fn flood_and_rep_overrides_apply() {
    let tmp = tempfile::tempdir().unwrap();
    let scn = write_scenario(tmp.path(), "a.scn", SMALL);
    let base = sim(&["run", &scn, "--out", tmp.path().join("x").to_str().unwrap()], None);
    let more = sim(
        &[
            "run",
            &scn,
            "--out",
            tmp.path().join("y").to_str().unwrap(),
            "--reps",
            "1",
            "--floods",
            "10",
        ],
        None,
    );
    assert!(base.status.success() && more.status.success());
    let std_col = |o: &Output| {
        String::from_utf8_lossy(&o.stdout)
            .lines()
            .nth(1)
            .unwrap()
            .split(',')
            .nth(6)
            .unwrap()
            .to_string()
    };
    assert_eq!(std_col(&more), "0.000", "a single repetition has no spread");
}

#[test]
fn unknown_scenario_name_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let scn = write_scenario(tmp.path(), "bad.scn", "name=diss.nowhere\nprotocol=whisper\n");
    let o = sim(&["run", &scn, "--out", tmp.path().to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unreadable_topology_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("missing.topo");
    let o = sim(&["topo", "info", missing.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(3));

    let scn = write_scenario(
        tmp.path(),
        "t.scn",
        "name=custom\nprotocol=whisper\ntopology=missing.topo\nsenders=0\n",
    );
    let o = sim(&["run", &scn, "--out", tmp.path().join("o").to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(3));

    let garbled = tmp.path().join("garbled.topo");
    std::fs::write(&garbled, "nodes 2\n0 1 banana\n").unwrap();
    assert_eq!(
        sim(&["topo", "info", garbled.to_str().unwrap()], None).status.code(),
        Some(3)
    );
}

#[test]
fn unknown_suite_fails() {
    let o = sim(&["check", "everything"], None);
    assert!(!o.status.success());
}

#[test]
fn check_exit_status_follows_results() {
    let o = sim(&["check", "timing"], None);
    let stdout = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().filter(|l| l.starts_with('[')).collect();
    assert_eq!(lines.len(), 9);
    let all_pass = lines.iter().all(|l| l.starts_with("[PASS]"));
    assert_eq!(o.status.success(), all_pass);
}

#[test]
fn topo_info_reports_graph_shape() {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/flocklab-0dbm.topo");
    let o = sim(&["topo", "info", data.to_str().unwrap()], None);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("nodes 27"));
    assert!(text.contains("diameter_from_node0 5"));
    assert!(text.contains("disconnected none"));
}

#[test]
fn bundled_scenarios_parse_and_run() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let tmp = tempfile::tempdir().unwrap();
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let out = tmp.path().join(path.file_stem().unwrap());
        let o = sim(
            &[
                "run",
                path.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
                "--floods",
                "5",
                "--reps",
                "1",
            ],
            None,
        );
        assert!(
            o.status.success(),
            "{}: {}",
            path.display(),
            String::from_utf8_lossy(&o.stderr)
        );
    }
}
