//! Fixed-timestep swarm loop: an APF-guided leader tows impedance-coupled
//! followers past moving obstacles toward a scripted goal.
//!
//! Step order: scene elements advance to the current time, the leader
//! integrates its APF velocity command, then each follower tracks its
//! formation slot (leader position plus a heading-rotated wedge offset)
//! shifted by active obstacle and inter-drone deflections through its
//! impedance link. Everything is deterministic for fixed inputs and seed.

pub mod metrics;
pub use metrics::{compute_metrics, deviation_series, Metrics};

use crate::geometry::{sample_timeline, Vec2};
use crate::impedance::{
    deflection_sum, step_link, DeflectionConstants, ImpedanceError, LinkState,
};
use crate::planner::{leader_velocity, ApfConfig, Body, BodyShape};
use crate::retrieval::ImpedanceProfile;
use crate::scene::{Scenario, GATE_WALL_HALF_WIDTH};
use crate::{real, Real};
use serde::{Deserialize, Serialize};

/// Place in the formation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Leader,
    Follower,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Leader => "leader",
            Role::Follower => "follower",
        }
    }
}

/// One drone; followers carry the impedance link to the leader.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DroneState<T> {
    pub id: u32,
    pub role: Role,
    pub pos: Vec2<T>,
    pub vel: Vec2<T>,
    /// `Some` exactly for followers.
    pub link: Option<LinkState<T>>,
}

/// Loop parameters. `apf` and `deflection` ride along so a single value
/// configures a run end to end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct SimConfig<T> {
    /// Step size (s); must lie in (0, 0.1].
    pub dt: T,
    /// Wall-clock cap on simulated time (s); runs end early on goal arrival.
    pub max_t: T,
    /// Physical drone radius (m); contact below it counts as a collision.
    pub collision_radius: T,
    /// Leader-to-goal distance (m) that counts as arrival.
    pub goal_tol: T,
    /// Drives only the stall-escape kick direction.
    pub seed: u64,
    pub apf: ApfConfig<T>,
    pub deflection: DeflectionConstants<T>,
}

impl<T: Real> Default for SimConfig<T> {
    fn default() -> Self {
        SimConfig {
            dt: real(0.01),
            max_t: real(60.0),
            collision_radius: real(0.06),
            goal_tol: real(0.05),
            seed: 0,
            apf: ApfConfig::default(),
            deflection: DeflectionConstants::default(),
        }
    }
}

impl<T: Real> SimConfig<T> {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |what: &str| Err(SimError::BadConfig(what.to_string()));
        if !(self.dt > T::zero() && self.dt <= real(0.1)) {
            return bad("dt must be in (0, 0.1]");
        }
        if !(self.max_t >= T::zero() && self.max_t.is_finite()) {
            return bad("max_t must be finite and non-negative");
        }
        if !(self.collision_radius > T::zero()) {
            return bad("collision_radius must be positive");
        }
        if !(self.goal_tol > T::zero()) {
            return bad("goal_tol must be positive");
        }
        if !(self.apf.k_att > T::zero()
            && self.apf.k_rep >= T::zero()
            && self.apf.rho0 > T::zero()
            && self.apf.cap > T::zero())
        {
            return bad("apf gains must be positive (k_rep may be zero)");
        }
        if !(self.deflection.r_imp > T::zero() && self.deflection.k_imp_f > T::zero()) {
            return bad("deflection constants must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid simulation setup: {0}")]
    BadConfig(String),
    #[error("unsupported follower count {0}; supported counts are 2 and 4")]
    UnsupportedFollowerCount(usize),
    #[error("leader penetrated body {body_id} at t = {t}")]
    Penetration { t: f64, body_id: u32 },
    #[error("non-finite state at t = {t} for drone {drone_id}: {what}")]
    NonFinite { t: f64, drone_id: u32, what: String },
    #[error("invalid trajectories: {0}")]
    BadTrajectories(String),
}

/// Leader speed fraction below which a step counts as stalled.
pub(crate) const STALL_SPEED_FRACTION: f64 = 0.05;
/// No stall bookkeeping once the leader is this close to the goal (m).
pub(crate) const STALL_MIN_GOAL_DIST: f64 = 0.1;
/// Continuous stalled seconds before the escape kick fires.
pub(crate) const STALL_TRIGGER_SECONDS: f64 = 2.0;
/// Escape kick speed as a fraction of v_max.
pub(crate) const STALL_KICK_FRACTION: f64 = 0.5;
/// Leader speeds below this do not update the heading estimate.
pub(crate) const HEADING_EPS: f64 = 1e-6;

/// Local-minimum detector. A kick fires after [`STALL_TRIGGER_SECONDS`] of
/// continuously stalled steps; both the live loop and the metrics replay run
/// the same instance so the counts agree bit for bit.
#[derive(Debug, Clone)]
pub(crate) struct StallTracker<T> {
    acc: T,
    pub events: u32,
}

impl<T: Real> StallTracker<T> {
    pub fn new() -> Self {
        StallTracker { acc: T::zero(), events: 0 }
    }

    /// Feeds one pre-step observation; returns true when the kick fires.
    pub fn observe(&mut self, pre_speed: T, dist_to_goal: T, v_max: T, dt: T) -> bool {
        let stalled = pre_speed < real::<T>(STALL_SPEED_FRACTION) * v_max
            && dist_to_goal > real::<T>(STALL_MIN_GOAL_DIST);
        if stalled {
            self.acc += dt;
        } else {
            self.acc = T::zero();
        }
        if self.acc >= real(STALL_TRIGGER_SECONDS) {
            self.acc = T::zero();
            self.events += 1;
            true
        } else {
            false
        }
    }
}

/// Heading right after takeoff: toward the first goal waypoint.
pub(crate) fn initial_heading<T: Real>(leader_start: Vec2<T>, goal0: Vec2<T>) -> Vec2<T> {
    (goal0 - leader_start).normalized().unwrap_or_else(|| Vec2::new(T::one(), T::zero()))
}

/// Tracks the leader's direction of travel; held through near-zero speeds.
pub(crate) fn updated_heading<T: Real>(heading: Vec2<T>, vel: Vec2<T>) -> Vec2<T> {
    if vel.norm() > real(HEADING_EPS) {
        vel.normalized().expect("speed above threshold")
    } else {
        heading
    }
}

/// Rotates a heading-frame offset (+x = heading) into world coordinates.
pub(crate) fn rotate_into<T: Real>(heading: Vec2<T>, offset: Vec2<T>) -> Vec2<T> {
    Vec2::new(
        offset.x * heading.x - offset.y * heading.y,
        offset.x * heading.y + offset.y * heading.x,
    )
}

/// Wedge formation offsets in the leader's heading frame (+x forward).
///
/// n=2 places one rank at distance `c` behind the leader, 30° off the axis on
/// each side; n=4 adds a second rank at `2c`. All pairwise follower distances
/// are at least `c`.
pub fn formation_offsets<T: Real>(n_followers: usize, c: T) -> Result<Vec<Vec2<T>>, SimError> {
    if !(c > T::zero()) {
        return Err(SimError::BadConfig("formation spacing c must be positive".into()));
    }
    let cos30 = real::<T>(3.0).sqrt() * real::<T>(0.5);
    let sin30 = real::<T>(0.5);
    let rank = |scale: T| [Vec2::new(-scale * cos30, scale * sin30), Vec2::new(-scale * cos30, -scale * sin30)];
    match n_followers {
        2 => Ok(rank(c).to_vec()),
        4 => {
            let mut v = rank(c).to_vec();
            v.extend_from_slice(&rank(real::<T>(2.0) * c));
            Ok(v)
        }
        n => Err(SimError::UnsupportedFollowerCount(n)),
    }
}

/// Inter-drone avoidance constants: same gain as the obstacle law, active
/// inside two collision radii plus a 0.1 m margin.
pub(crate) fn drone_link_constants<T: Real>(
    deflection: &DeflectionConstants<T>,
    collision_radius: T,
) -> DeflectionConstants<T> {
    DeflectionConstants {
        r_imp: real::<T>(2.0) * collision_radius + real::<T>(0.1),
        k_imp_f: deflection.k_imp_f,
    }
}

/// Total setpoint shift for one follower: obstacle links plus inter-drone
/// links, each law clamped to its own single-link magnitude. Returns the
/// offset and the number of degenerate (coincident-position) contributions.
pub(crate) fn follower_deflection<T: Real>(
    follower_pos: Vec2<T>,
    follower_idx: usize,
    leader_pos: Vec2<T>,
    follower_positions: &[Vec2<T>],
    obstacle_positions: &[Vec2<T>],
    deflection: &DeflectionConstants<T>,
    drone_consts: &DeflectionConstants<T>,
) -> (Vec2<T>, u32) {
    let (obstacle_off, obstacle_deg) =
        deflection_sum(follower_pos, obstacle_positions.iter().copied(), deflection);
    let others = core::iter::once(leader_pos).chain(
        follower_positions
            .iter()
            .enumerate()
            .filter(move |(j, _)| *j != follower_idx)
            .map(|(_, &p)| p),
    );
    let (drone_off, drone_deg) = deflection_sum(follower_pos, others, drone_consts);
    (obstacle_off + drone_off, obstacle_deg + drone_deg)
}

/// Obstacle discs at time `t` plus the (static) gate walls, as planner
/// bodies. Wall ids start at 10_000 to stay clear of obstacle ids.
pub fn bodies_at<T: Real>(scenario: &Scenario<T>, t: T) -> Vec<Body<T>> {
    let mut bodies = Vec::with_capacity(scenario.obstacles.len() + 2);
    for (i, ob) in scenario.obstacles.iter().enumerate() {
        let timeline = scenario.obstacle_timeline(i);
        bodies.push(Body {
            id: ob.id,
            shape: BodyShape::Disc { center: sample_timeline(&timeline, t), radius: ob.radius },
        });
    }
    bodies.extend(gate_wall_bodies(scenario));
    bodies
}

fn gate_wall_bodies<T: Real>(scenario: &Scenario<T>) -> Vec<Body<T>> {
    let Some(gate) = &scenario.gate else { return Vec::new() };
    gate.wall_segments(&scenario.arena)
        .into_iter()
        .enumerate()
        .filter(|(_, (a, b))| a.distance(*b) > real(1e-12))
        .map(|(i, (a, b))| Body {
            id: 10_000 + i as u32,
            shape: BodyShape::Wall { a, b, half_width: real(GATE_WALL_HALF_WIDTH) },
        })
        .collect()
}

/// Everything derivable from the inputs once per run.
struct Precomputed<T> {
    obstacle_ids: Vec<u32>,
    obstacle_radii: Vec<T>,
    obstacle_timelines: Vec<Vec<(T, Vec2<T>)>>,
    walls: Vec<Body<T>>,
    goal: Vec<(T, Vec2<T>)>,
    offsets: Vec<Vec2<T>>,
    drone_consts: DeflectionConstants<T>,
}

impl<T: Real> Precomputed<T> {
    fn new(
        scenario: &Scenario<T>,
        profile: &ImpedanceProfile<T>,
        cfg: &SimConfig<T>,
    ) -> Result<Self, SimError> {
        let goal = scenario.goal_timeline();
        if goal.is_empty() {
            return Err(SimError::BadConfig("goal script must not be empty".into()));
        }
        Ok(Precomputed {
            obstacle_ids: scenario.obstacles.iter().map(|o| o.id).collect(),
            obstacle_radii: scenario.obstacles.iter().map(|o| o.radius).collect(),
            obstacle_timelines: (0..scenario.obstacles.len())
                .map(|i| scenario.obstacle_timeline(i))
                .collect(),
            walls: gate_wall_bodies(scenario),
            goal,
            offsets: formation_offsets(scenario.follower_starts.len(), profile.c)?,
            drone_consts: drone_link_constants(&cfg.deflection, cfg.collision_radius),
        })
    }

    fn sample_obstacles(&self, t: T, out: &mut Vec<Vec2<T>>) {
        out.clear();
        out.extend(self.obstacle_timelines.iter().map(|tl| sample_timeline(tl, t)));
    }

    fn bodies(&self, obstacle_pos: &[Vec2<T>], out: &mut Vec<Body<T>>) {
        out.clear();
        for i in 0..obstacle_pos.len() {
            out.push(Body {
                id: self.obstacle_ids[i],
                shape: BodyShape::Disc { center: obstacle_pos[i], radius: self.obstacle_radii[i] },
            });
        }
        out.extend(self.walls.iter().copied());
    }
}

struct Scratch<T> {
    bodies: Vec<Body<T>>,
    obstacle_pos: Vec<Vec2<T>>,
    follower_pos: Vec<Vec2<T>>,
}

impl<T> Default for Scratch<T> {
    fn default() -> Self {
        Scratch { bodies: Vec::new(), obstacle_pos: Vec::new(), follower_pos: Vec::new() }
    }
}

/// Mutable state of one simulation.
#[derive(Debug, Clone)]
pub struct WorldState<T> {
    pub t: T,
    pub step: usize,
    /// Leader first, then followers in `follower_starts` order.
    pub drones: Vec<DroneState<T>>,
    /// Unit vector of the leader's travel direction.
    pub heading: Vec2<T>,
    prev_desired: Vec<Option<Vec2<T>>>,
    stall: StallTracker<T>,
    degenerate_deflections: u32,
}

impl<T: Real> WorldState<T> {
    /// Initial state: drones at their start positions, at rest, heading
    /// toward the first goal waypoint.
    pub fn init(scenario: &Scenario<T>) -> Result<Self, SimError> {
        let goal = scenario.goal_timeline();
        if goal.is_empty() {
            return Err(SimError::BadConfig("goal script must not be empty".into()));
        }
        let goal0 = sample_timeline(&goal, T::zero());
        let mut drones = vec![DroneState {
            id: 0,
            role: Role::Leader,
            pos: scenario.leader_start,
            vel: Vec2::zero(),
            link: None,
        }];
        for (i, &pos) in scenario.follower_starts.iter().enumerate() {
            drones.push(DroneState {
                id: 1 + i as u32,
                role: Role::Follower,
                pos,
                vel: Vec2::zero(),
                link: Some(LinkState::at_rest()),
            });
        }
        Ok(WorldState {
            t: T::zero(),
            step: 0,
            drones,
            heading: initial_heading(scenario.leader_start, goal0),
            prev_desired: vec![None; scenario.follower_starts.len()],
            stall: StallTracker::new(),
            degenerate_deflections: 0,
        })
    }

    /// Stall-escape kicks fired so far.
    pub fn stall_events(&self) -> u32 {
        self.stall.events
    }

    /// Coincident-position deflection fallbacks seen so far.
    pub fn degenerate_deflections(&self) -> u32 {
        self.degenerate_deflections
    }
}

fn step_inner<T: Real>(
    world: &mut WorldState<T>,
    pre: &Precomputed<T>,
    profile: &ImpedanceProfile<T>,
    cfg: &SimConfig<T>,
    scratch: &mut Scratch<T>,
) -> Result<(), SimError> {
    let dt = cfg.dt;
    let t = world.t;
    let t_f64 = t.to_f64().unwrap_or(f64::NAN);
    let v_max = profile.v_max;
    for d in &world.drones {
        if !(d.pos.is_finite() && d.vel.is_finite()) {
            return Err(SimError::NonFinite {
                t: t_f64,
                drone_id: d.id,
                what: format!("pos {:?}, vel {:?}", d.pos, d.vel),
            });
        }
    }
    let goal_pos = sample_timeline(&pre.goal, t);
    pre.sample_obstacles(t, &mut scratch.obstacle_pos);
    pre.bodies(&scratch.obstacle_pos, &mut scratch.bodies);

    // Leader: stall bookkeeping on the pre-step state, then the APF command.
    let leader = world.drones[0];
    let kick = world.stall.observe(leader.vel.norm(), leader.pos.distance(goal_pos), v_max, dt);
    let mut vel = leader_velocity(leader.pos, goal_pos, &scratch.bodies, &cfg.apf, v_max)
        .map_err(|e| SimError::Penetration { t: t_f64, body_id: e.body_id })?;
    if kick {
        let toward_goal = (goal_pos - leader.pos)
            .normalized()
            .unwrap_or_else(|| Vec2::new(T::one(), T::zero()));
        let sign = if cfg.seed % 2 == 0 { T::one() } else { -T::one() };
        vel = toward_goal.perp() * (real::<T>(STALL_KICK_FRACTION) * v_max * sign);
    }
    world.drones[0].vel = vel;
    world.drones[0].pos = leader.pos + vel * dt;
    world.heading = updated_heading(world.heading, vel);
    let leader_pos = world.drones[0].pos;

    scratch.follower_pos.clear();
    scratch.follower_pos.extend(world.drones[1..].iter().map(|d| d.pos));

    for i in 0..scratch.follower_pos.len() {
        let fpos = scratch.follower_pos[i];
        let fvel = world.drones[1 + i].vel;
        let slot = leader_pos + rotate_into(world.heading, pre.offsets[i]);
        let (off, degenerate) = follower_deflection(
            fpos,
            i,
            leader_pos,
            &scratch.follower_pos,
            &scratch.obstacle_pos,
            &cfg.deflection,
            &pre.drone_consts,
        );
        world.degenerate_deflections += degenerate;
        let desired = slot + off;
        let slot_vel = match world.prev_desired[i] {
            Some(prev) => (desired - prev) * dt.recip(),
            None => Vec2::zero(),
        };
        let state = LinkState { delta_x: fpos - desired, delta_v: fvel - slot_vel };
        let f_ext = (desired - fpos)
            .normalized()
            .map(|u| u * profile.f)
            .unwrap_or_else(Vec2::zero);
        let link = step_link(state, profile, f_ext, dt).map_err(|e| match e {
            ImpedanceError::BadDt(v) => SimError::BadConfig(format!("dt: {v}")),
            ImpedanceError::NonFinite(what) => SimError::NonFinite {
                t: t_f64,
                drone_id: world.drones[1 + i].id,
                what: what.to_string(),
            },
        })?;
        let new_vel = (slot_vel + link.delta_v).clamp_norm(v_max);
        world.drones[1 + i].vel = new_vel;
        world.drones[1 + i].pos = fpos + new_vel * dt;
        world.drones[1 + i].link = Some(link);
        world.prev_desired[i] = Some(desired);
    }

    world.step += 1;
    world.t = T::from_usize(world.step).expect("step count fits the scalar") * dt;
    Ok(())
}

/// Advances the world by one step. Convenience wrapper that rebuilds the
/// per-run caches; [`run`] amortizes them across the whole loop.
pub fn step<T: Real>(
    world: &mut WorldState<T>,
    scenario: &Scenario<T>,
    profile: &ImpedanceProfile<T>,
    cfg: &SimConfig<T>,
) -> Result<(), SimError> {
    if world.drones.len() != 1 + scenario.follower_starts.len() {
        return Err(SimError::BadConfig("world does not match the scenario's drone count".into()));
    }
    let pre = Precomputed::new(scenario, profile, cfg)?;
    step_inner(world, &pre, profile, cfg, &mut Scratch::default())
}

/// One recorded instant of one drone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample<T> {
    pub t: T,
    pub pos: Vec2<T>,
    pub vel: Vec2<T>,
}

/// Timed trajectory of one drone; all drones of a run share the time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub id: u32,
    pub role: Role,
    pub samples: Vec<Sample<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult<T> {
    /// Leader first, then followers.
    pub trajectories: Vec<Trajectory<T>>,
    pub metrics: Metrics<T>,
}

fn validate_profile<T: Real>(profile: &ImpedanceProfile<T>) -> Result<(), SimError> {
    let ok = profile.m > T::zero()
        && profile.k > T::zero()
        && profile.d >= T::zero()
        && profile.f >= T::zero()
        && profile.c > T::zero()
        && profile.v_max > T::zero();
    if ok {
        Ok(())
    } else {
        Err(SimError::BadConfig(
            "profile must satisfy m, k, c, v_max > 0 and d, F >= 0".into(),
        ))
    }
}

fn record<T: Real>(world: &WorldState<T>, trajectories: &mut [Trajectory<T>]) {
    for (d, tr) in world.drones.iter().zip(trajectories.iter_mut()) {
        tr.samples.push(Sample { t: world.t, pos: d.pos, vel: d.vel });
    }
}

/// Runs a full simulation: steps until the leader reaches the goal with the
/// goal script exhausted, or `max_t` elapses. Metrics come from
/// [`compute_metrics`] over the recorded trajectories, so the embedded values
/// equal an external recomputation bit for bit.
pub fn run<T: Real>(
    scenario: &Scenario<T>,
    profile: &ImpedanceProfile<T>,
    cfg: &SimConfig<T>,
) -> Result<SimResult<T>, SimError> {
    scenario.validate().map_err(|e| SimError::BadConfig(format!("scenario: {e}")))?;
    cfg.validate()?;
    validate_profile(profile)?;
    let pre = Precomputed::new(scenario, profile, cfg)?;
    let mut world = WorldState::init(scenario)?;
    let steps = (cfg.max_t / cfg.dt)
        .round()
        .to_usize()
        .ok_or_else(|| SimError::BadConfig("max_t / dt must fit in usize".into()))?;
    let mut trajectories: Vec<Trajectory<T>> = world
        .drones
        .iter()
        .map(|d| Trajectory { id: d.id, role: d.role, samples: Vec::with_capacity(steps + 1) })
        .collect();
    let mut scratch = Scratch::default();
    record(&world, &mut trajectories);
    let last_goal_t = pre.goal.last().expect("non-empty goal").0;
    for _ in 0..steps {
        let goal_pos = sample_timeline(&pre.goal, world.t);
        if world.t >= last_goal_t && world.drones[0].pos.distance(goal_pos) <= cfg.goal_tol {
            break;
        }
        step_inner(&mut world, &pre, profile, cfg, &mut scratch)?;
        record(&world, &mut trajectories);
    }
    let metrics = compute_metrics(&trajectories, scenario, profile, cfg)?;
    debug_assert_eq!(metrics.stall_events, world.stall.events);
    debug_assert_eq!(metrics.degenerate_deflections, world.degenerate_deflections);
    Ok(SimResult { trajectories, metrics })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{Arena, Lighting, Obstacle, ObstacleKind, Waypoint};

    fn arena(width: f64) -> Arena<f64> {
        Arena { width, height: 2.0, grid: 80 }
    }

    fn scenario(
        width: f64,
        obstacles: Vec<Obstacle<f64>>,
        goal_x: f64,
    ) -> Scenario<f64> {
        Scenario {
            arena: arena(width),
            obstacles,
            gate: None,
            leader_start: Vec2::new(0.5, 1.0),
            follower_starts: vec![Vec2::new(0.2, 1.25), Vec2::new(0.2, 0.75)],
            goal: vec![Waypoint { t: 0.0, pos: Vec2::new(goal_x, 1.0) }],
            lighting: Lighting::Optimal,
        }
    }

    fn cylinder(id: u32, x: f64, y: f64, radius: f64) -> Obstacle<f64> {
        Obstacle { id, kind: ObstacleKind::Hard, pos: Vec2::new(x, y), radius, motion: vec![] }
    }

    /// Same as `scenario` but the goal script holds its position until
    /// `hold_t`, so the run continues past leader arrival and the followers
    /// get time to shed their spin-up lag (they cannot outrun the leader:
    /// both are clamped to the same v_max).
    fn held_scenario(
        width: f64,
        obstacles: Vec<Obstacle<f64>>,
        goal_x: f64,
        hold_t: f64,
    ) -> Scenario<f64> {
        let mut sc = scenario(width, obstacles, goal_x);
        let pos = sc.goal[0].pos;
        sc.goal.push(Waypoint { t: hold_t, pos });
        sc
    }

    fn hard() -> ImpedanceProfile<f64> {
        ImpedanceProfile { m: 1.2, k: 8.0, d: 4.0, f: 0.5, c: 0.3, v_max: 1.4 }
    }

    fn soft() -> ImpedanceProfile<f64> {
        ImpedanceProfile { m: 5.0, k: 0.5, d: 1.5, f: 0.3, c: 0.7, v_max: 0.7 }
    }

    fn cfg() -> SimConfig<f64> {
        SimConfig::default()
    }

    #[test]
    fn formation_offsets_match_geometry() {
        let two = formation_offsets::<f64>(2, 0.5).unwrap();
        assert_eq!(two.len(), 2);
        for o in &two {
            assert!((o.norm() - 0.5).abs() < 1e-12);
            assert!(o.x < 0.0);
        }
        assert!((two[0].y + two[1].y).abs() < 1e-12, "mirror images across heading");
        assert_eq!(two[0].x, two[1].x);

        let four = formation_offsets(4, 0.3).unwrap();
        let max = four.iter().map(|o| o.norm()).fold(0.0, f64::max);
        assert!((max - 0.6).abs() < 1e-12);
        for i in 0..4 {
            for j in i + 1..4 {
                assert!(four[i].distance(four[j]) >= 0.3 - 1e-12);
            }
        }

        assert!(matches!(formation_offsets::<f64>(3, 0.5), Err(SimError::UnsupportedFollowerCount(3))));
        assert!(formation_offsets::<f64>(2, 0.0).is_err());
    }

    #[test]
    fn zero_duration_returns_initial_state() {
        let sc = scenario(4.0, vec![], 3.5);
        let mut c = cfg();
        c.max_t = 0.0;
        let result = run(&sc, &hard(), &c).unwrap();
        assert_eq!(result.trajectories.len(), 3);
        for tr in &result.trajectories {
            assert_eq!(tr.samples.len(), 1);
            assert_eq!(tr.samples[0].vel, Vec2::zero());
        }
        assert_eq!(result.trajectories[0].samples[0].pos, sc.leader_start);
        assert_eq!(result.metrics.max_speed, vec![0.0, 0.0, 0.0]);
        assert_eq!(result.metrics.collision_count, 0);
    }

    #[test]
    fn followers_converge_to_formation_hard() {
        let sc = held_scenario(6.0, vec![], 5.5, 15.0);
        let result = run(&sc, &hard(), &cfg()).unwrap();
        assert!(result.metrics.goal_reach_time.is_some());
        let dev = deviation_series(&result.trajectories, &sc, &hard(), &cfg()).unwrap();
        for series in &dev {
            let last = *series.last().unwrap();
            assert!(last <= 0.3 / 10.0, "final slot deviation {last} above c/10");
        }
        assert!(result.metrics.settle_time.is_some());
    }

    #[test]
    fn followers_converge_to_formation_soft() {
        let sc = held_scenario(8.0, vec![], 7.5, 45.0);
        let result = run(&sc, &soft(), &cfg()).unwrap();
        assert!(result.metrics.goal_reach_time.is_some());
        let dev = deviation_series(&result.trajectories, &sc, &soft(), &cfg()).unwrap();
        for series in &dev {
            let last = *series.last().unwrap();
            assert!(last <= 0.7 / 10.0, "final slot deviation {last} above c/10");
        }
    }

    #[test]
    fn soft_profile_deflects_wider_and_settles_slower() {
        let sc = held_scenario(12.0, vec![cylinder(0, 3.0, 1.08, 0.12)], 11.5, 45.0);
        let soft_run = run(&sc, &soft(), &cfg()).unwrap();
        let hard_run = run(&sc, &hard(), &cfg()).unwrap();
        assert_eq!(soft_run.metrics.collision_count, 0);
        assert_eq!(hard_run.metrics.collision_count, 0);
        assert!(
            soft_run.metrics.max_deflection > hard_run.metrics.max_deflection,
            "soft {} vs hard {}",
            soft_run.metrics.max_deflection,
            hard_run.metrics.max_deflection
        );
        let soft_settle = soft_run.metrics.settle_time.expect("soft settles in a 12 m arena");
        let hard_settle = hard_run.metrics.settle_time.expect("hard settles");
        assert!(hard_settle < soft_settle, "hard {hard_settle} vs soft {soft_settle}");
    }

    #[test]
    fn identical_inputs_give_bit_identical_results() {
        let sc = scenario(8.0, vec![cylinder(0, 3.0, 1.1, 0.12)], 7.5);
        let a = run(&sc, &hard(), &cfg()).unwrap();
        let b = run(&sc, &hard(), &cfg()).unwrap();
        assert_eq!(a.trajectories, b.trajectories);
        assert_eq!(a.metrics, b.metrics);
    }

    #[test]
    fn embedded_metrics_equal_recomputation() {
        let sc = scenario(8.0, vec![cylinder(0, 3.0, 1.1, 0.12)], 7.5);
        let result = run(&sc, &soft(), &cfg()).unwrap();
        let again = compute_metrics(&result.trajectories, &sc, &soft(), &cfg()).unwrap();
        assert_eq!(result.metrics, again);
    }

    #[test]
    fn speed_caps_hold_at_every_sample() {
        let sc = scenario(8.0, vec![cylinder(0, 3.0, 1.05, 0.15)], 7.5);
        for profile in [hard(), soft()] {
            let result = run(&sc, &profile, &cfg()).unwrap();
            for tr in &result.trajectories {
                for s in &tr.samples {
                    assert!(s.vel.norm() <= profile.v_max + 1e-9);
                }
            }
        }
    }

    #[test]
    fn rejoin_envelope_decays_after_obstacle() {
        let sc = scenario(12.0, vec![cylinder(0, 3.0, 1.08, 0.12)], 11.5);
        let result = run(&sc, &hard(), &cfg()).unwrap();
        let dev = deviation_series(&result.trajectories, &sc, &hard(), &cfg()).unwrap();
        let obstacle = Vec2::new(3.0, 1.08);
        for (f, series) in dev.iter().enumerate() {
            let tr = &result.trajectories[1 + f];
            let last_near = tr
                .samples
                .iter()
                .rposition(|s| s.pos.distance(obstacle) <= cfg().deflection.r_imp)
                .map(|i| i + 1)
                .unwrap_or(0);
            let tail = &series[last_near..];
            assert!(tail.len() >= 400, "needs a clear tail to check the envelope");
            let quarter = tail.len() / 4;
            let maxes: Vec<f64> = (0..4)
                .map(|q| tail[q * quarter..(q + 1) * quarter].iter().cloned().fold(0.0, f64::max))
                .collect();
            for w in maxes.windows(2) {
                assert!(w[1] <= w[0] + 1e-9, "envelope grew: {maxes:?}");
            }
        }
    }

    #[test]
    fn head_on_local_minimum_escapes_by_kick() {
        let sc = scenario(6.0, vec![cylinder(0, 2.5, 1.0, 0.2)], 5.5);
        let result = run(&sc, &hard(), &cfg()).unwrap();
        assert!(result.metrics.stall_events >= 1, "symmetric block must stall at least once");
        assert!(result.metrics.goal_reach_time.is_some(), "kick must break the symmetry");
        assert_eq!(result.metrics.collision_count, 0);
    }

    #[test]
    fn degenerate_deflection_counted_via_step() {
        let mut sc = scenario(6.0, vec![], 5.5);
        sc.obstacles = vec![cylinder(7, 0.2, 1.25, 0.1)];
        let mut world = WorldState::init(&sc).unwrap();
        step(&mut world, &sc, &hard(), &cfg()).unwrap();
        assert_eq!(world.degenerate_deflections(), 1);
        let defl: DeflectionConstants<f64> = DeflectionConstants::default();
        let moved = world.drones[1].pos;
        assert!(moved.distance(Vec2::new(0.2, 1.25)) < defl.offset_magnitude());
    }

    #[test]
    fn crossing_drones_register_collision() {
        let sc = scenario(6.0, vec![], 5.5);
        let mk = |id, role, path: Vec<(f64, f64, f64)>| Trajectory {
            id,
            role,
            samples: path
                .into_iter()
                .map(|(t, x, y)| Sample { t, pos: Vec2::new(x, y), vel: Vec2::zero() })
                .collect(),
        };
        let trajectories = vec![
            mk(0, Role::Leader, vec![(0.0, 0.5, 1.0), (0.01, 1.0, 1.0), (0.02, 1.5, 1.0)]),
            mk(1, Role::Follower, vec![(0.0, 1.0, 0.5), (0.01, 1.0, 1.0), (0.02, 1.0, 1.5)]),
            mk(2, Role::Follower, vec![(0.0, 5.0, 0.3), (0.01, 5.0, 0.3), (0.02, 5.0, 0.3)]),
        ];
        let m = compute_metrics(&trajectories, &sc, &hard(), &cfg()).unwrap();
        assert!(m.collision_count >= 1);
        assert!(m.min_interdrone_distance.unwrap() < 0.12);
    }

    #[test]
    fn stationary_single_drone_has_zero_metrics() {
        let sc = scenario(6.0, vec![], 5.5);
        let samples: Vec<Sample<f64>> = (0..3)
            .map(|i| Sample { t: i as f64 * 0.01, pos: Vec2::new(1.0, 1.0), vel: Vec2::zero() })
            .collect();
        let trajectories = vec![Trajectory { id: 0, role: Role::Leader, samples }];
        let m = compute_metrics(&trajectories, &sc, &hard(), &cfg()).unwrap();
        assert_eq!(m.max_speed, vec![0.0]);
        assert_eq!(m.collision_count, 0);
        assert_eq!(m.min_interdrone_distance, None);
        assert_eq!(m.max_deflection, 0.0);
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let sc = scenario(4.0, vec![], 3.5);
        let mut c = cfg();
        c.dt = 0.0;
        assert!(matches!(run(&sc, &hard(), &c), Err(SimError::BadConfig(_))));
        let mut p = hard();
        p.m = 0.0;
        assert!(matches!(run(&sc, &p, &cfg()), Err(SimError::BadConfig(_))));
    }

    #[test]
    fn gate_walls_become_bodies() {
        let mut sc = scenario(4.0, vec![cylinder(3, 2.5, 1.2, 0.1)], 3.5);
        sc.gate = Some(crate::scene::Gate {
            center: Vec2::new(1.5, 1.0),
            width: 0.5,
            theta: core::f64::consts::FRAC_PI_2,
        });
        let bodies = bodies_at(&sc, 0.0);
        assert_eq!(bodies.len(), 3);
        assert_eq!(bodies[0].id, 3);
        assert!(bodies.iter().any(|b| b.id == 10_000));
        assert!(bodies.iter().any(|b| b.id == 10_001));
    }

    #[test]
    fn f32_run_completes() {
        use crate::scene as sc;
        let scenario = sc::Scenario::<f32> {
            arena: sc::Arena { width: 4.0, height: 2.0, grid: 80 },
            obstacles: vec![],
            gate: None,
            leader_start: crate::geometry::Vec2::new(0.5, 1.0),
            follower_starts: vec![
                crate::geometry::Vec2::new(0.2, 1.25),
                crate::geometry::Vec2::new(0.2, 0.75),
            ],
            goal: vec![sc::Waypoint { t: 0.0, pos: crate::geometry::Vec2::new(3.5, 1.0) }],
            lighting: Lighting::Optimal,
        };
        let profile = ImpedanceProfile::<f32> { m: 1.2, k: 8.0, d: 4.0, f: 0.5, c: 0.3, v_max: 1.4 };
        let config = SimConfig::<f32>::default();
        let result = run(&scenario, &profile, &config).unwrap();
        assert!(result.metrics.goal_reach_time.is_some());
        for tr in &result.trajectories {
            for s in &tr.samples {
                assert!(s.pos.is_finite());
            }
        }
    }
}
