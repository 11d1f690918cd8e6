//! Report structures and file writers. Every field the human report prints
//! appears in the JSON form under the same meaning; --json is never lossier.

use crate::{ctx, CliError};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;
use swarmlink_core::{ImpedanceProfile, Metrics, ObstacleKind, SimResult};

pub fn kind_label(kind: ObstacleKind) -> &'static str {
    match kind {
        ObstacleKind::Hard => "hard",
        ObstacleKind::Soft => "soft",
    }
}

#[derive(Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub analyzer: &'static str,
    pub description: String,
    pub exact_description: bool,
    pub retrieved_id: u32,
    pub retrieved_kind: &'static str,
    pub retrieved_distance: f64,
    pub profile: ImpedanceProfile,
    pub metrics: Metrics,
    pub outputs: RunOutputs,
}

#[derive(Serialize)]
pub struct RunOutputs {
    pub trajectory_csv: String,
    pub metrics_json: String,
    pub plot_svg: String,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), |v| format!("{v:.4}"))
}

impl RunReport {
    pub fn human(&self) -> String {
        let m = &self.metrics;
        let p = &self.profile;
        let mut s = String::new();
        let _ = writeln!(s, "scenario:            {}", self.scenario);
        let _ = writeln!(s, "analyzer:            {}", self.analyzer);
        let _ = writeln!(s, "description:         {}", self.description);
        let _ = writeln!(s, "exact description:   {}", self.exact_description);
        let _ = writeln!(
            s,
            "retrieved record:    id {} ({}), distance {:.6}",
            self.retrieved_id, self.retrieved_kind, self.retrieved_distance
        );
        let _ = writeln!(
            s,
            "profile:             m={} k={} d={} F={} c={} v_max={}",
            p.m, p.k, p.d, p.f, p.c, p.v_max
        );
        let _ = writeln!(s, "collisions:          {}", m.collision_count);
        let _ = writeln!(s, "min clearance:       {}", fmt_opt(m.min_obstacle_clearance));
        let _ = writeln!(s, "min drone distance:  {}", fmt_opt(m.min_interdrone_distance));
        let speeds: Vec<String> = m.max_speed.iter().map(|v| format!("{v:.4}")).collect();
        let _ = writeln!(s, "max speeds:          [{}]", speeds.join(", "));
        let _ = writeln!(s, "max deflection:      {:.4}", m.max_deflection);
        let _ = writeln!(s, "goal reached at:     {}", fmt_opt(m.goal_reach_time));
        let _ = writeln!(s, "settle time:         {}", fmt_opt(m.settle_time));
        let _ = writeln!(s, "overshoot:           {:.4}", m.overshoot);
        let _ = writeln!(s, "residual oscillation: {:.6}", m.residual_oscillation);
        let _ = writeln!(s, "stall events:        {}", m.stall_events);
        let _ = writeln!(s, "outputs:             {}", self.outputs.trajectory_csv);
        let _ = writeln!(s, "                     {}", self.outputs.metrics_json);
        let _ = write!(s, "                     {}", self.outputs.plot_svg);
        s
    }
}

#[derive(Serialize)]
pub struct EvalReport {
    pub preset: &'static str,
    pub trials_per_scenario: u64,
    pub scenarios: Vec<EvalRow>,
    pub overall: EvalRow,
}

#[derive(Serialize)]
pub struct EvalRow {
    pub scenario: String,
    pub trials: u64,
    pub exact_rate: f64,
    pub retrieval_rate: f64,
    pub success_rate: f64,
    pub mean_latency_ms: f64,
}

impl EvalReport {
    pub fn human(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "preset: {}, {} trials per scenario",
            self.preset, self.trials_per_scenario
        );
        let _ = writeln!(
            s,
            "{:<16} {:>7} {:>11} {:>15} {:>13} {:>16}",
            "scenario", "trials", "exact_rate", "retrieval_rate", "success_rate", "mean_latency_ms"
        );
        for row in self.scenarios.iter().chain(std::iter::once(&self.overall)) {
            let _ = writeln!(
                s,
                "{:<16} {:>7} {:>11.4} {:>15.4} {:>13.4} {:>16.4}",
                row.scenario,
                row.trials,
                row.exact_rate,
                row.retrieval_rate,
                row.success_rate,
                row.mean_latency_ms
            );
        }
        s.pop();
        s
    }

    pub fn csv(&self) -> String {
        let mut s =
            String::from("scenario,trials,exact_rate,retrieval_rate,success_rate,mean_latency_ms\n");
        for row in self.scenarios.iter().chain(std::iter::once(&self.overall)) {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                row.scenario,
                row.trials,
                row.exact_rate,
                row.retrieval_rate,
                row.success_rate,
                row.mean_latency_ms
            );
        }
        s
    }
}

#[derive(Serialize)]
pub struct RetrieveReport {
    pub query: String,
    pub record_id: u32,
    pub kind: &'static str,
    pub distance: f64,
    pub text: String,
    pub profile: ImpedanceProfile,
}

impl RetrieveReport {
    pub fn human(&self) -> String {
        let p = &self.profile;
        format!(
            "record id:  {}\nkind:       {}\ndistance:   {}\ntext:       {}\nprofile:    m={} k={} d={} F={} c={} v_max={}",
            self.record_id, self.kind, self.distance, self.text, p.m, p.k, p.d, p.f, p.c, p.v_max
        )
    }
}

/// One row per drone per sample; floats print with Rust's shortest exact
/// round-trip formatting, so the CSV reproduces the run bit for bit.
pub fn trajectory_csv(result: &SimResult) -> String {
    let mut s = String::from("t,drone_id,role,x,y,vx,vy\n");
    for tr in &result.trajectories {
        for sample in &tr.samples {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                sample.t,
                tr.id,
                tr.role.as_str(),
                sample.pos.x,
                sample.pos.y,
                sample.vel.x,
                sample.vel.y
            );
        }
    }
    s
}

pub fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content).map_err(ctx(format_args!("writing {}", path.display())))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serialization cannot fail")
}
