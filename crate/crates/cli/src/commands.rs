//! Command implementations. Each returns the process exit code or a
//! [`CliError`] carrying one.

use crate::config::FileConfig;
use crate::output::{
    kind_label, to_json, trajectory_csv, write_file, EvalReport, EvalRow, RetrieveReport,
    RunOutputs, RunReport,
};
use crate::{
    ctx, svg, Analyzer, CliError, DbgenArgs, DescribeArgs, EvalArgs, Preset, RetrieveArgs,
    RunArgs, EXIT_OK, EXIT_SAFETY,
};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};
use swarmlink_core::dbgen::generate_database;
use swarmlink_core::perception::{analyze_ground_truth, analyze_noisy, RemoteAnalyzer};
use swarmlink_core::retrieval::{load_database, retrieve, save_database};
use swarmlink_core::scene::{load_scenario, render_description};
use swarmlink_core::sim::SimError;
use swarmlink_core::{
    derive_seed, PerceptionNoise, Scenario, SceneDescription, SearchConfig, SimConfig,
    VectorDatabase,
};

pub struct Global {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub json: bool,
}

fn load_scenario_file(path: &Path) -> Result<Scenario, CliError> {
    load_scenario(path).map_err(ctx(format_args!("scenario {}", path.display())))
}

fn load_database_file(path: &Path) -> Result<VectorDatabase, CliError> {
    load_database(path).map_err(ctx(format_args!("database {}", path.display())))
}

/// Scenario JSON files of a directory, sorted by file name so indices are
/// stable across platforms.
fn scenario_dir(dir: &Path) -> Result<Vec<(String, PathBuf)>, CliError> {
    let entries =
        std::fs::read_dir(dir).map_err(ctx(format_args!("reading directory {}", dir.display())))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(ctx(format_args!("reading directory {}", dir.display())))?.path();
        if path.extension().and_then(|e| e.to_str()) == Some("json") {
            let name = path
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| CliError::new(format!("non-UTF-8 file name in {}", dir.display())))?
                .to_string();
            files.push((name, path));
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(CliError::new(format!("no scenario JSON files in {}", dir.display())));
    }
    Ok(files)
}

/// CLI flag > config file > built-in default.
fn resolve_sim_config(g: &Global, a: &RunArgs) -> Result<SimConfig, CliError> {
    let mut cfg = FileConfig::load(g.config.as_deref())?.sim_config();
    if let Some(v) = a.dt {
        cfg.dt = v;
    }
    if let Some(v) = a.max_t {
        cfg.max_t = v;
    }
    if let Some(v) = g.seed {
        cfg.seed = v;
    }
    Ok(cfg)
}

pub fn run(g: &Global, a: &RunArgs) -> Result<u8, CliError> {
    let cfg = resolve_sim_config(g, a)?;
    let scenario = load_scenario_file(&a.scenario)?;
    let db = load_database_file(&a.db)?;

    let truth = analyze_ground_truth(&scenario);
    let (description, exact, analyzer): (SceneDescription, bool, &'static str) = match a.analyzer {
        Analyzer::GroundTruth => (truth.clone(), true, "ground-truth"),
        Analyzer::Noisy => {
            let noise = PerceptionNoise::for_lighting(scenario.lighting, cfg.seed);
            let outcome = analyze_noisy(&scenario, &noise);
            (outcome.description, outcome.exact, "noisy")
        }
        Analyzer::Remote => {
            let image = a
                .image
                .as_ref()
                .ok_or_else(|| CliError::new("--analyzer remote requires --image"))?;
            let endpoint = a
                .endpoint
                .as_ref()
                .ok_or_else(|| CliError::new("--analyzer remote requires --endpoint"))?;
            let bytes = std::fs::read(image)
                .map_err(ctx(format_args!("reading image {}", image.display())))?;
            let description =
                RemoteAnalyzer::new(endpoint).analyze(&bytes).map_err(ctx("remote analyzer"))?;
            let exact = description == truth;
            (description, exact, "remote")
        }
    };

    let text = render_description(&description);
    let hit = retrieve(&text, &db).map_err(ctx("retrieval"))?;
    let (retrieved_id, retrieved_kind, retrieved_distance) =
        (hit.record.id, hit.record.kind, hit.distance);
    let profile = hit.record.profile;

    let result = match swarmlink_core::sim::run(&scenario, &profile, &cfg) {
        Ok(r) => r,
        Err(e @ SimError::Penetration { .. }) => {
            return Err(CliError::safety(format!("simulation: {e}")))
        }
        Err(e) => return Err(CliError::new(format!("simulation: {e}"))),
    };

    std::fs::create_dir_all(&a.out)
        .map_err(ctx(format_args!("creating output directory {}", a.out.display())))?;
    let csv_path = a.out.join("trajectory.csv");
    let metrics_path = a.out.join("metrics.json");
    let svg_path = a.out.join("plot.svg");
    write_file(&csv_path, &trajectory_csv(&result))?;
    write_file(&metrics_path, &format!("{}\n", to_json(&result.metrics)))?;
    write_file(&svg_path, &svg::render(&scenario, &result))?;

    let report = RunReport {
        scenario: a.scenario.display().to_string(),
        analyzer,
        description: text,
        exact_description: exact,
        retrieved_id,
        retrieved_kind: kind_label(retrieved_kind),
        retrieved_distance,
        profile,
        metrics: result.metrics.clone(),
        outputs: RunOutputs {
            trajectory_csv: csv_path.display().to_string(),
            metrics_json: metrics_path.display().to_string(),
            plot_svg: svg_path.display().to_string(),
        },
    };
    if g.json {
        println!("{}", to_json(&report));
    } else {
        println!("{}", report.human());
    }
    if result.metrics.collision_count > 0 {
        eprintln!(
            "safety violation: {} collision episode(s) recorded",
            result.metrics.collision_count
        );
        return Ok(EXIT_SAFETY);
    }
    Ok(EXIT_OK)
}

pub fn eval(g: &Global, a: &EvalArgs) -> Result<u8, CliError> {
    if a.trials == 0 {
        return Err(CliError::new("--trials must be at least 1"));
    }
    let db = load_database_file(&a.db)?;
    let files = scenario_dir(&a.scenarios)?;
    let seed = g.seed.unwrap_or(0);
    let preset = match a.preset {
        Preset::Zero => "zero",
        Preset::Optimal => "optimal",
        Preset::Inadequate => "inadequate",
    };

    let mut rows = Vec::with_capacity(files.len());
    let (mut sum_exact, mut sum_retrieval, mut sum_success) = (0u64, 0u64, 0u64);
    let mut sum_latency = Duration::ZERO;
    for (idx, (name, path)) in files.iter().enumerate() {
        let scenario = load_scenario_file(path)?;
        let truth = analyze_ground_truth(&scenario);
        let truth_id = retrieve(&render_description(&truth), &db)
            .map_err(ctx(format_args!("retrieval for {name}")))?
            .record
            .id;
        let (mut exact, mut retrieval, mut success) = (0u64, 0u64, 0u64);
        let mut latency = Duration::ZERO;
        for trial in 0..a.trials {
            let noise_seed = derive_seed(seed, idx as u64, trial);
            let noise = match a.preset {
                Preset::Zero => PerceptionNoise::zero(noise_seed),
                Preset::Optimal => PerceptionNoise::optimal(noise_seed),
                Preset::Inadequate => PerceptionNoise::inadequate(noise_seed),
            };
            let t0 = Instant::now();
            let outcome = analyze_noisy(&scenario, &noise);
            let hit = retrieve(&render_description(&outcome.description), &db)
                .map_err(ctx(format_args!("retrieval for {name}")))?;
            latency += t0.elapsed();
            let retrieval_ok = hit.record.id == truth_id;
            if outcome.exact {
                exact += 1;
            }
            if retrieval_ok {
                retrieval += 1;
            }
            if retrieval_ok && outcome.description.matches_ignoring_positions(&truth) {
                success += 1;
            }
        }
        sum_exact += exact;
        sum_retrieval += retrieval;
        sum_success += success;
        sum_latency += latency;
        let n = a.trials as f64;
        rows.push(EvalRow {
            scenario: name.clone(),
            trials: a.trials,
            exact_rate: exact as f64 / n,
            retrieval_rate: retrieval as f64 / n,
            success_rate: success as f64 / n,
            mean_latency_ms: latency.as_secs_f64() * 1000.0 / n,
        });
    }
    let total = a.trials * files.len() as u64;
    let overall = EvalRow {
        scenario: "overall".to_string(),
        trials: total,
        exact_rate: sum_exact as f64 / total as f64,
        retrieval_rate: sum_retrieval as f64 / total as f64,
        success_rate: sum_success as f64 / total as f64,
        mean_latency_ms: sum_latency.as_secs_f64() * 1000.0 / total as f64,
    };
    let report = EvalReport { preset, trials_per_scenario: a.trials, scenarios: rows, overall };
    if let Some(out) = &a.out {
        write_file(out, &report.csv())?;
    }
    if g.json {
        println!("{}", to_json(&report));
    } else {
        println!("{}", report.human());
    }
    Ok(EXIT_OK)
}

pub fn retrieve_cmd(g: &Global, a: &RetrieveArgs) -> Result<u8, CliError> {
    let db = load_database_file(&a.db)?;
    let hit = retrieve(&a.query, &db).map_err(ctx("retrieval"))?;
    let report = RetrieveReport {
        query: a.query.clone(),
        record_id: hit.record.id,
        kind: kind_label(hit.record.kind),
        distance: hit.distance,
        text: hit.record.text.clone(),
        profile: hit.record.profile,
    };
    if g.json {
        println!("{}", to_json(&report));
    } else {
        println!("{}", report.human());
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct DbgenReport {
    scenarios: usize,
    samples: usize,
    seed: u64,
    records: usize,
    out: String,
}

pub fn dbgen(g: &Global, a: &DbgenArgs) -> Result<u8, CliError> {
    let files = scenario_dir(&a.scenarios)?;
    let mut scenarios = Vec::with_capacity(files.len());
    for (name, path) in &files {
        scenarios.push((name.clone(), load_scenario_file(path)?));
    }
    let search = SearchConfig {
        samples: a.samples,
        seed: g.seed.unwrap_or_else(|| SearchConfig::default().seed),
        ..SearchConfig::default()
    };
    let total = scenarios.len();
    let db = generate_database(&scenarios, &search, |idx, name, best| {
        eprintln!(
            "[{}/{}] {}: score {:.4}, v_max {}",
            idx + 1,
            total,
            name,
            best.score,
            best.profile.v_max
        );
    })
    .map_err(ctx("database generation"))?;
    save_database(&db, &a.out).map_err(ctx(format_args!("writing {}", a.out.display())))?;
    let report = DbgenReport {
        scenarios: total,
        samples: search.samples,
        seed: search.seed,
        records: db.len(),
        out: a.out.display().to_string(),
    };
    if g.json {
        println!("{}", to_json(&report));
    } else {
        println!(
            "wrote {} records ({} samples per scenario, seed {}) to {}",
            report.records, report.samples, report.seed, report.out
        );
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct DescribeReport {
    scenario: String,
    text: String,
    description: SceneDescription,
}

pub fn describe(g: &Global, a: &DescribeArgs) -> Result<u8, CliError> {
    let scenario = load_scenario_file(&a.scenario)?;
    let description = analyze_ground_truth(&scenario);
    let text = render_description(&description);
    if g.json {
        let report = DescribeReport {
            scenario: a.scenario.display().to_string(),
            text,
            description,
        };
        println!("{}", to_json(&report));
    } else {
        println!("{text}");
    }
    Ok(EXIT_OK)
}
