//! End-to-end tests of the `swarmlink` binary against the bundled assets.

use std::io::{Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use swarmlink_core::geometry::Vec2;
use swarmlink_core::scene::{save_scenario, Arena, Lighting, Obstacle, ObstacleKind, Waypoint};
use swarmlink_core::Scenario;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_swarmlink"))
}

fn asset(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../assets").join(rel)
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).to_string()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).to_string()
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("binary runs");
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    out
}

fn simple_scenario(obstacle: Obstacle<f64>) -> Scenario {
    Scenario {
        arena: Arena { width: 4.0, height: 2.0, grid: 80 },
        obstacles: vec![obstacle],
        gate: None,
        leader_start: Vec2::new(0.5, 1.0),
        follower_starts: vec![Vec2::new(0.2, 1.25), Vec2::new(0.2, 0.75)],
        goal: vec![Waypoint { t: 0.0, pos: Vec2::new(3.5, 1.0) }],
        lighting: Lighting::Optimal,
    }
}

#[test]
fn run_writes_artifacts_and_reports_hard_profile() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_ok(&[
        "run",
        "--scenario",
        asset("scenarios/scenario-1.json").to_str().unwrap(),
        "--db",
        asset("db.json").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let text = stdout(&out);
    assert!(text.contains("(hard)"), "scenario 1 must retrieve a hard profile: {text}");
    assert!(text.contains("collisions:          0"), "{text}");

    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,drone_id,role,x,y,vx,vy\n"));
    assert!(csv.contains(",leader,") && csv.contains(",follower,"));

    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("metrics.json")).unwrap())
            .unwrap();
    assert_eq!(metrics["collision_count"], 0);

    let svg = std::fs::read_to_string(dir.path().join("plot.svg")).unwrap();
    assert!(svg.starts_with("<svg "), "hand-emitted svg root element");
    assert!(svg.trim_end().ends_with("</svg>"));
    assert!(svg.contains("<polyline"), "trajectories drawn");
}

#[test]
fn run_json_report_parses_and_carries_every_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_ok(&[
        "--json",
        "run",
        "--scenario",
        asset("scenarios/scenario-2.json").to_str().unwrap(),
        "--db",
        asset("db.json").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    for key in [
        "scenario",
        "analyzer",
        "description",
        "exact_description",
        "retrieved_id",
        "retrieved_kind",
        "retrieved_distance",
        "profile",
        "metrics",
        "outputs",
    ] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
    assert_eq!(report["analyzer"], "ground-truth");
    assert_eq!(report["exact_description"], true);
    assert_eq!(report["retrieved_kind"], "soft");
    assert_eq!(report["retrieved_distance"], 0.0);
    for key in ["m", "k", "d", "F", "c", "v_max"] {
        assert!(report["profile"].get(key).is_some(), "missing profile.{key}");
    }
    for key in ["trajectory_csv", "metrics_json", "plot_svg"] {
        let path = report["outputs"][key].as_str().unwrap();
        assert!(Path::new(path).exists(), "{key} not written");
    }
}

#[test]
fn missing_scenario_file_exits_one_and_names_the_path() {
    let out = bin()
        .args([
            "run",
            "--scenario",
            "/nonexistent/nowhere.json",
            "--db",
            asset("db.json").to_str().unwrap(),
            "--out",
            "/tmp/unused",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("/nonexistent/nowhere.json"));
}

#[test]
fn blocked_start_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    // Obstacle surface 0.05 m from the leader start: inside the collision
    // radius on the very first steps, whatever profile is retrieved.
    let scenario = simple_scenario(Obstacle {
        id: 0,
        kind: ObstacleKind::Hard,
        pos: Vec2::new(0.75, 1.0),
        radius: 0.2,
        motion: vec![],
    });
    let path = dir.path().join("blocked.json");
    save_scenario(&scenario, &path).unwrap();
    let out = bin()
        .args([
            "run",
            "--scenario",
            path.to_str().unwrap(),
            "--db",
            asset("db.json").to_str().unwrap(),
            "--out",
            dir.path().join("out").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr(&out));
}

#[test]
fn describe_scenario_two_counts_obstacles_before_the_gate() {
    let out = run_ok(&[
        "describe",
        "--scenario",
        asset("scenarios/scenario-2.json").to_str().unwrap(),
    ]);
    let text = stdout(&out);
    assert!(text.contains('2'), "{text}");
    assert!(text.contains("before the gate"), "{text}");
}

#[test]
fn describe_json_contains_text_and_structure() {
    let out = run_ok(&[
        "--json",
        "describe",
        "--scenario",
        asset("scenarios/scenario-2.json").to_str().unwrap(),
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["description"]["total"], 2);
    assert!(v["text"].as_str().unwrap().contains("before the gate"));
}

#[test]
fn retrieving_a_stored_description_returns_distance_zero() {
    let describe = run_ok(&[
        "describe",
        "--scenario",
        asset("scenarios/scenario-2.json").to_str().unwrap(),
    ]);
    let text = stdout(&describe).trim_end().to_string();
    let out = run_ok(&[
        "--json",
        "retrieve",
        "--db",
        asset("db.json").to_str().unwrap(),
        "--query",
        &text,
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["distance"], 0.0);
    assert_eq!(v["text"].as_str().unwrap(), text);
}

#[test]
fn dbgen_fixed_seed_is_byte_identical_and_logs_progress() {
    let dir = tempfile::tempdir().unwrap();
    let scenarios = dir.path().join("scenarios");
    std::fs::create_dir(&scenarios).unwrap();
    for (name, y) in [("a", 1.3), ("b", 0.7)] {
        let s = simple_scenario(Obstacle {
            id: 0,
            kind: ObstacleKind::Hard,
            pos: Vec2::new(2.0, y),
            radius: 0.12,
            motion: vec![],
        });
        save_scenario(&s, scenarios.join(format!("{name}.json"))).unwrap();
    }
    let mut outputs = Vec::new();
    for run in 0..2 {
        let db = dir.path().join(format!("db-{run}.json"));
        let out = run_ok(&[
            "dbgen",
            "--scenarios",
            scenarios.to_str().unwrap(),
            "--samples",
            "1",
            "--seed",
            "7",
            "--out",
            db.to_str().unwrap(),
        ]);
        assert!(stderr(&out).contains("[1/2]"), "progress on stderr: {}", stderr(&out));
        outputs.push(std::fs::read(&db).unwrap());
    }
    assert_eq!(outputs[0], outputs[1], "fixed seed must reproduce bytes");
}

#[test]
fn eval_zero_noise_scores_every_trial() {
    let out = run_ok(&[
        "--json",
        "eval",
        "--scenarios",
        asset("scenarios").to_str().unwrap(),
        "--db",
        asset("db.json").to_str().unwrap(),
        "--trials",
        "5",
        "--preset",
        "zero",
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["overall"]["exact_rate"], 1.0);
    assert_eq!(v["overall"]["retrieval_rate"], 1.0);
    assert_eq!(v["overall"]["success_rate"], 1.0);
}

#[test]
fn eval_lighting_presets_reproduce_reference_rates() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("eval.csv");
    for (preset, target) in [("optimal", 0.80), ("inadequate", 0.60)] {
        let out = run_ok(&[
            "--json",
            "--seed",
            "15",
            "eval",
            "--scenarios",
            asset("scenarios").to_str().unwrap(),
            "--db",
            asset("db.json").to_str().unwrap(),
            "--trials",
            "200",
            "--preset",
            preset,
            "--out",
            csv_path.to_str().unwrap(),
        ]);
        let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
        let rate = v["overall"]["success_rate"].as_f64().unwrap();
        assert!(
            (rate - target).abs() <= 0.02,
            "{preset}: success rate {rate} not within {target} +/- 0.02"
        );
        assert_eq!(v["overall"]["trials"], 1400);
        let csv = std::fs::read_to_string(&csv_path).unwrap();
        assert!(csv.starts_with("scenario,trials,exact_rate,retrieval_rate,success_rate,"));
        assert_eq!(csv.lines().count(), 9, "7 scenarios + overall + header");
    }
}

#[test]
fn config_precedence_flag_beats_file_beats_default() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, "[sim]\ndt = 0.05\n").unwrap();
    let second_sample_t = |extra: &[&str]| -> String {
        let out_dir = tempfile::tempdir().unwrap();
        let mut args = vec![
            "run".to_string(),
            "--scenario".into(),
            asset("scenarios/scenario-2.json").display().to_string(),
            "--db".into(),
            asset("db.json").display().to_string(),
            "--out".into(),
            out_dir.path().display().to_string(),
        ];
        args.extend(extra.iter().map(|s| s.to_string()));
        let out = bin().args(&args).output().unwrap();
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
        let csv = std::fs::read_to_string(out_dir.path().join("trajectory.csv")).unwrap();
        csv.lines().nth(2).unwrap().split(',').next().unwrap().to_string()
    };
    assert_eq!(second_sample_t(&[]), "0.01", "built-in default dt");
    let cfg_flag = cfg.display().to_string();
    assert_eq!(second_sample_t(&["--config", &cfg_flag]), "0.05", "config file dt");
    assert_eq!(
        second_sample_t(&["--config", &cfg_flag, "--dt", "0.02"]),
        "0.02",
        "flag beats config file"
    );
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, "[sim]\nstep = 0.05\n").unwrap();
    let out = bin()
        .args([
            "--config",
            cfg.to_str().unwrap(),
            "run",
            "--scenario",
            asset("scenarios/scenario-1.json").to_str().unwrap(),
            "--db",
            asset("db.json").to_str().unwrap(),
            "--out",
            dir.path().join("out").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("cfg.toml"));
}

#[test]
fn help_documents_configuration_precedence() {
    let out = bin().args(["--help"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.to_lowercase().contains("precedence"), "{text}");
    for cmd in ["run", "eval", "retrieve", "dbgen", "describe"] {
        assert!(text.contains(cmd), "missing {cmd} in help");
    }
}

#[test]
fn usage_errors_exit_one() {
    let out = bin().args(["run", "--no-such-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin().args(["frobnicate"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

/// One-shot HTTP stub: accepts a single POST and answers with `description`.
fn stub_analyzer(description: String) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || {
        let (mut stream, _) = listener.accept().unwrap();
        let mut buf = Vec::new();
        let mut tmp = [0u8; 4096];
        let header_end = loop {
            let n = stream.read(&mut tmp).unwrap();
            buf.extend_from_slice(&tmp[..n]);
            if let Some(pos) = buf.windows(4).position(|w| w == b"\r\n\r\n") {
                break pos + 4;
            }
        };
        let headers = String::from_utf8_lossy(&buf[..header_end]).to_string();
        let content_length: usize = headers
            .lines()
            .find_map(|l| {
                l.to_ascii_lowercase()
                    .strip_prefix("content-length:")
                    .map(|v| v.trim().parse().unwrap())
            })
            .unwrap_or(0);
        while buf.len() < header_end + content_length {
            let n = stream.read(&mut tmp).unwrap();
            buf.extend_from_slice(&tmp[..n]);
        }
        let body = serde_json::json!({ "description": description }).to_string();
        let response = format!(
            "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
            body.len(),
            body
        );
        stream.write_all(response.as_bytes()).unwrap();
    });
    format!("http://{addr}/analyze")
}

#[test]
fn remote_analyzer_round_trip() {
    let describe = run_ok(&[
        "describe",
        "--scenario",
        asset("scenarios/scenario-1.json").to_str().unwrap(),
    ]);
    let text = stdout(&describe).trim_end().to_string();
    let endpoint = stub_analyzer(text);

    let dir = tempfile::tempdir().unwrap();
    let image = dir.path().join("view.png");
    std::fs::write(&image, [0x89, b'P', b'N', b'G']).unwrap();
    let out = run_ok(&[
        "--json",
        "run",
        "--scenario",
        asset("scenarios/scenario-1.json").to_str().unwrap(),
        "--db",
        asset("db.json").to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
        "--analyzer",
        "remote",
        "--image",
        image.to_str().unwrap(),
        "--endpoint",
        &endpoint,
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["analyzer"], "remote");
    assert_eq!(v["exact_description"], true);
    assert_eq!(v["retrieved_id"], 0);
}

#[test]
fn remote_analyzer_requires_image_and_endpoint() {
    let out = bin()
        .args([
            "run",
            "--scenario",
            asset("scenarios/scenario-1.json").to_str().unwrap(),
            "--db",
            asset("db.json").to_str().unwrap(),
            "--out",
            "/tmp/unused",
            "--analyzer",
            "remote",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--image"));
}
