//! Pure trajectory metrics. Everything here is recomputed from recorded
//! samples plus the run inputs; `run` embeds exactly these values, so an
//! external recomputation agrees bit for bit, including the stall and
//! degenerate-deflection counters, which replay the live bookkeeping.

use super::{
    drone_link_constants, follower_deflection, formation_offsets, gate_wall_bodies,
    initial_heading, rotate_into, updated_heading, Role, SimConfig, SimError, StallTracker,
    Trajectory,
};
use crate::geometry::{sample_timeline, Vec2};
use crate::planner::{Body, BodyShape};
use crate::retrieval::ImpedanceProfile;
use crate::scene::Scenario;
use crate::{real, Real};
use serde::{Deserialize, Serialize};

/// Run observables. All distances in meters, times in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct Metrics<T> {
    /// Edge-triggered contact events over drone-body and drone-drone pairs:
    /// each pair counts once per episode of violation.
    pub collision_count: u32,
    /// Smallest drone-to-body surface distance; `None` without bodies.
    pub min_obstacle_clearance: Option<T>,
    /// Smallest center distance between any two drones; `None` for one drone.
    pub min_interdrone_distance: Option<T>,
    /// Per drone, trajectory order.
    pub max_speed: Vec<T>,
    /// Largest follower offset from the leader's path, measured perpendicular
    /// to the leader's heading at the same instant.
    pub max_deflection: T,
    /// First instant with the goal script exhausted and the leader in
    /// tolerance; `None` if the run timed out.
    pub goal_reach_time: Option<T>,
    /// Instant after which every follower's slot deviation stays inside the
    /// settle band `max(0.05·c, 0.02)`; `None` if any follower never does.
    pub settle_time: Option<T>,
    /// Largest post-peak swing past the slot, projected against the peak
    /// deviation direction.
    pub overshoot: T,
    /// Mean over followers of the integrated squared slot deviation from the
    /// deviation peak to the end of the run.
    pub residual_oscillation: T,
    /// Leader local-minimum escape kicks.
    pub stall_events: u32,
    /// Coincident-position deflection fallbacks.
    pub degenerate_deflections: u32,
}

fn check_shape<T: Real>(trajectories: &[Trajectory<T>]) -> Result<usize, SimError> {
    let bad = |m: &str| Err(SimError::BadTrajectories(m.to_string()));
    if trajectories.is_empty() {
        return bad("no trajectories");
    }
    if trajectories[0].role != Role::Leader {
        return bad("first trajectory must be the leader");
    }
    if trajectories[1..].iter().any(|t| t.role != Role::Follower) {
        return bad("non-leading trajectories must be followers");
    }
    let len = trajectories[0].samples.len();
    if len == 0 {
        return bad("trajectories must hold at least one sample");
    }
    if trajectories.iter().any(|t| t.samples.len() != len) {
        return bad("all drones must share one time grid");
    }
    Ok(len)
}

/// Leader heading at every sample, replaying the live update rule.
fn heading_series<T: Real>(leader: &Trajectory<T>, goal: &[(T, Vec2<T>)]) -> Vec<Vec2<T>> {
    let mut out = Vec::with_capacity(leader.samples.len());
    let mut h = initial_heading(leader.samples[0].pos, sample_timeline(goal, leader.samples[0].t));
    out.push(h);
    for s in &leader.samples[1..] {
        h = updated_heading(h, s.vel);
        out.push(h);
    }
    out
}

/// Per-follower distance from the nominal formation slot at every sample.
/// Diagnostic view behind the settle/overshoot/oscillation metrics.
pub fn deviation_series<T: Real>(
    trajectories: &[Trajectory<T>],
    scenario: &Scenario<T>,
    profile: &ImpedanceProfile<T>,
    cfg: &SimConfig<T>,
) -> Result<Vec<Vec<T>>, SimError> {
    let _ = cfg;
    let len = check_shape(trajectories)?;
    let goal = scenario.goal_timeline();
    if goal.is_empty() {
        return Err(SimError::BadConfig("goal script must not be empty".into()));
    }
    let n_followers = trajectories.len() - 1;
    if n_followers == 0 {
        return Ok(Vec::new());
    }
    let offsets = formation_offsets(n_followers, profile.c)?;
    let headings = heading_series(&trajectories[0], &goal);
    Ok(trajectories[1..]
        .iter()
        .enumerate()
        .map(|(f, tr)| {
            (0..len)
                .map(|s| {
                    let slot =
                        trajectories[0].samples[s].pos + rotate_into(headings[s], offsets[f]);
                    tr.samples[s].pos.distance(slot)
                })
                .collect()
        })
        .collect())
}

/// Recomputes every metric from raw trajectories.
pub fn compute_metrics<T: Real>(
    trajectories: &[Trajectory<T>],
    scenario: &Scenario<T>,
    profile: &ImpedanceProfile<T>,
    cfg: &SimConfig<T>,
) -> Result<Metrics<T>, SimError> {
    let len = check_shape(trajectories)?;
    let n = trajectories.len();
    let n_followers = n - 1;
    let goal = scenario.goal_timeline();
    if goal.is_empty() {
        return Err(SimError::BadConfig("goal script must not be empty".into()));
    }
    let obstacle_timelines: Vec<Vec<(T, Vec2<T>)>> =
        (0..scenario.obstacles.len()).map(|i| scenario.obstacle_timeline(i)).collect();
    let walls = gate_wall_bodies(scenario);
    let n_bodies = scenario.obstacles.len() + walls.len();

    let mut max_speed = vec![T::zero(); n];
    let mut min_clearance: Option<T> = None;
    let mut min_interdrone: Option<T> = None;
    let mut collision_count: u32 = 0;
    let mut body_violated = vec![false; n * n_bodies];
    let mut pair_violated = vec![false; n * n];
    let mut bodies: Vec<Body<T>> = Vec::with_capacity(n_bodies);
    let mut obstacle_pos: Vec<Vec2<T>> = Vec::with_capacity(scenario.obstacles.len());
    let two_radii = real::<T>(2.0) * cfg.collision_radius;

    for s in 0..len {
        let t = trajectories[0].samples[s].t;
        obstacle_pos.clear();
        obstacle_pos.extend(obstacle_timelines.iter().map(|tl| sample_timeline(tl, t)));
        bodies.clear();
        for (i, ob) in scenario.obstacles.iter().enumerate() {
            bodies.push(Body {
                id: ob.id,
                shape: BodyShape::Disc { center: obstacle_pos[i], radius: ob.radius },
            });
        }
        bodies.extend(walls.iter().copied());
        for (di, tr) in trajectories.iter().enumerate() {
            let sample = tr.samples[s];
            let speed = sample.vel.norm();
            if speed > max_speed[di] {
                max_speed[di] = speed;
            }
            for (bi, b) in bodies.iter().enumerate() {
                let surface = b.surface_distance(sample.pos);
                if min_clearance.map_or(true, |v| surface < v) {
                    min_clearance = Some(surface);
                }
                let hit = surface < cfg.collision_radius;
                let was = &mut body_violated[di * n_bodies + bi];
                if hit && !*was {
                    collision_count += 1;
                }
                *was = hit;
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                let dist = trajectories[i].samples[s].pos.distance(trajectories[j].samples[s].pos);
                if min_interdrone.map_or(true, |v| dist < v) {
                    min_interdrone = Some(dist);
                }
                let hit = dist < two_radii;
                let was = &mut pair_violated[i * n + j];
                if hit && !*was {
                    collision_count += 1;
                }
                *was = hit;
            }
        }
    }

    let last_goal_t = goal.last().expect("non-empty goal").0;
    let mut goal_reach_time = None;
    for s in &trajectories[0].samples {
        if s.t >= last_goal_t && s.pos.distance(sample_timeline(&goal, s.t)) <= cfg.goal_tol {
            goal_reach_time = Some(s.t);
            break;
        }
    }

    // One stall observation per step actually taken, on the pre-step state.
    let mut stall = StallTracker::new();
    for s in 0..len.saturating_sub(1) {
        let sample = trajectories[0].samples[s];
        stall.observe(
            sample.vel.norm(),
            sample.pos.distance(sample_timeline(&goal, sample.t)),
            profile.v_max,
            cfg.dt,
        );
    }

    let headings = heading_series(&trajectories[0], &goal);
    let mut max_deflection = T::zero();
    for tr in &trajectories[1..] {
        for s in 0..len {
            let delta = tr.samples[s].pos - trajectories[0].samples[s].pos;
            let h = headings[s];
            let lateral = (h.x * delta.y - h.y * delta.x).abs();
            if lateral > max_deflection {
                max_deflection = lateral;
            }
        }
    }

    let offsets =
        if n_followers > 0 { formation_offsets(n_followers, profile.c)? } else { Vec::new() };
    let band = (real::<T>(0.05) * profile.c).max(real(0.02));
    let mut settle_time: Option<T> =
        if n_followers > 0 { Some(trajectories[0].samples[0].t) } else { None };
    let mut overshoot = T::zero();
    let mut residual = T::zero();
    for (f, tr) in trajectories[1..].iter().enumerate() {
        let errors: Vec<Vec2<T>> = (0..len)
            .map(|s| {
                let slot = trajectories[0].samples[s].pos + rotate_into(headings[s], offsets[f]);
                tr.samples[s].pos - slot
            })
            .collect();
        let settle_idx =
            errors.iter().rposition(|e| e.norm() > band).map(|i| i + 1).unwrap_or(0);
        if settle_idx >= len {
            settle_time = None;
        } else if let Some(current) = settle_time {
            let t = trajectories[0].samples[settle_idx].t;
            if t > current {
                settle_time = Some(t);
            }
        }
        let mut peak = 0;
        for i in 1..len {
            if errors[i].norm() > errors[peak].norm() {
                peak = i;
            }
        }
        let peak_dev = errors[peak].norm();
        if peak_dev > T::zero() {
            let u = errors[peak] * peak_dev.recip();
            for e in &errors[peak..] {
                let against = -u.dot(*e);
                if against > overshoot {
                    overshoot = against;
                }
            }
        }
        for e in &errors[peak..] {
            residual += e.norm_sq() * cfg.dt;
        }
    }
    if n_followers > 0 {
        residual = residual / T::from_usize(n_followers).expect("follower count fits the scalar");
    }

    // Degenerate-deflection replay: the live loop evaluates deflections from
    // the pre-step follower positions and the freshly integrated leader.
    let drone_consts = drone_link_constants(&cfg.deflection, cfg.collision_radius);
    let mut degenerate: u32 = 0;
    let mut follower_pos: Vec<Vec2<T>> = Vec::with_capacity(n_followers);
    for s in 0..len.saturating_sub(1) {
        let t = trajectories[0].samples[s].t;
        obstacle_pos.clear();
        obstacle_pos.extend(obstacle_timelines.iter().map(|tl| sample_timeline(tl, t)));
        let leader_new = trajectories[0].samples[s + 1].pos;
        follower_pos.clear();
        follower_pos.extend(trajectories[1..].iter().map(|tr| tr.samples[s].pos));
        for f in 0..n_followers {
            let (_, deg) = follower_deflection(
                follower_pos[f],
                f,
                leader_new,
                &follower_pos,
                &obstacle_pos,
                &cfg.deflection,
                &drone_consts,
            );
            degenerate += deg;
        }
    }

    Ok(Metrics {
        collision_count,
        min_obstacle_clearance: min_clearance,
        min_interdrone_distance: min_interdrone,
        max_speed,
        max_deflection,
        goal_reach_time,
        settle_time,
        overshoot,
        residual_oscillation: residual,
        stall_events: stall.events,
        degenerate_deflections: degenerate,
    })
}
