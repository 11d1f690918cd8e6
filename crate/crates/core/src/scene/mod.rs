//! World model: arena, obstacles, gate, scenario file I/O, and the canonical
//! scene-description grammar.

pub mod description;

pub use description::{
    classify_spacing, parse_description, render_description, DescribedObstacle,
    DescriptionParseError, SceneDescription, Spacing, SpacingError,
    DEFAULT_SPACING_THRESHOLD,
};

use crate::geometry::Vec2;
use crate::{real, Real};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Obstacle class. Soft obstacles are alive (humans) and get compliant,
/// wide-berth handling; hard obstacles are inanimate (cylindrical stands)
/// and get rigid, tight handling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObstacleKind {
    Soft,
    Hard,
}

/// Lighting condition of a scenario; selects a perception noise preset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lighting {
    Optimal,
    Inadequate,
}

/// A position scheduled at an absolute simulation time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct Waypoint<T> {
    pub t: T,
    pub pos: Vec2<T>,
}

/// Disc obstacle with an optional motion script. An empty `motion` list means
/// the obstacle is stationary; otherwise it starts at `pos` at t = 0 and
/// moves linearly between waypoints, holding the last one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct Obstacle<T> {
    pub id: u32,
    pub kind: ObstacleKind,
    pub pos: Vec2<T>,
    pub radius: T,
    #[serde(default)]
    pub motion: Vec<Waypoint<T>>,
}

/// Gate: two hard wall segments along direction `theta` through `center`,
/// leaving a centered opening of `width`. Walls extend to the arena border.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct Gate<T> {
    pub center: Vec2<T>,
    pub width: T,
    pub theta: T,
}

/// Rectangular arena `[0, width] x [0, height]` with a square description
/// grid of `grid` cells per side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct Arena<T> {
    pub width: T,
    pub height: T,
    pub grid: u32,
}

/// Complete world description consumed by perception and simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct Scenario<T> {
    pub arena: Arena<T>,
    pub obstacles: Vec<Obstacle<T>>,
    #[serde(default)]
    pub gate: Option<Gate<T>>,
    pub leader_start: Vec2<T>,
    pub follower_starts: Vec<Vec2<T>>,
    pub goal: Vec<Waypoint<T>>,
    pub lighting: Lighting,
}

/// Half thickness of each gate wall segment (m).
pub const GATE_WALL_HALF_WIDTH: f64 = 0.02;

/// Default drone collision radius (m); Crazyflie scale. Scene validation uses
/// it for the gate-opening and start-separation invariants.
pub const DEFAULT_COLLISION_RADIUS: f64 = 0.06;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed scenario JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid scenario: {field}: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid { field: field.into(), reason: reason.into() }
}

impl<T: Real> Arena<T> {
    /// Metric position to description-grid cell, clamped to the grid.
    pub fn to_cell(&self, p: Vec2<T>) -> [u32; 2] {
        let axis = |v: T, extent: T| -> u32 {
            let g = real::<T>(self.grid as f64);
            let c = (v / extent * g).floor();
            let c = c.max(T::zero()).min(g - T::one());
            c.to_u32().unwrap_or(0)
        };
        [axis(p.x, self.width), axis(p.y, self.height)]
    }

    /// Metric center of a grid cell.
    pub fn cell_center(&self, cell: [u32; 2]) -> Vec2<T> {
        let g = real::<T>(self.grid as f64);
        let half = real::<T>(0.5);
        Vec2::new(
            (real::<T>(cell[0] as f64) + half) / g * self.width,
            (real::<T>(cell[1] as f64) + half) / g * self.height,
        )
    }

    pub fn contains(&self, p: Vec2<T>) -> bool {
        p.x >= T::zero() && p.x <= self.width && p.y >= T::zero() && p.y <= self.height
    }
}

impl<T: Real> Gate<T> {
    /// Unit vector along the gate line.
    pub fn direction(&self) -> Vec2<T> {
        Vec2::new(self.theta.cos(), self.theta.sin())
    }

    /// Signed side of the gate line: the cross product of the line direction
    /// with the offset from the center. Zero means exactly on the line.
    pub fn side(&self, p: Vec2<T>) -> T {
        let u = self.direction();
        let d = p - self.center;
        u.x * d.y - u.y * d.x
    }

    /// The two wall segments, each running from an edge of the opening to the
    /// arena border. A wall collapses to a point if the opening already
    /// reaches the border on that side.
    pub fn wall_segments(&self, arena: &Arena<T>) -> [(Vec2<T>, Vec2<T>); 2] {
        let u = self.direction();
        let half = self.width * real::<T>(0.5);
        let make = |dir: Vec2<T>| {
            let s_border = ray_to_border(self.center, dir, arena);
            let s_start = half.min(s_border);
            (self.center + dir * s_start, self.center + dir * s_border)
        };
        [make(u), make(-u)]
    }
}

/// Distance from `origin` along unit `dir` to the arena border. `origin` must
/// be inside the arena, which scenario validation guarantees.
fn ray_to_border<T: Real>(origin: Vec2<T>, dir: Vec2<T>, arena: &Arena<T>) -> T {
    let mut s = T::infinity();
    let axes = [
        (dir.x, origin.x, arena.width),
        (dir.y, origin.y, arena.height),
    ];
    for (d, o, extent) in axes {
        if d > T::zero() {
            s = s.min((extent - o) / d);
        } else if d < T::zero() {
            s = s.min(-o / d);
        }
    }
    if s.is_finite() {
        s.max(T::zero())
    } else {
        T::zero()
    }
}

impl<T: Real> Scenario<T> {
    /// True if the point lies on the leader's side of the gate line ("before
    /// the gate"). Points exactly on the line count as before. Without a gate
    /// everything is before.
    pub fn is_before_gate(&self, p: Vec2<T>) -> bool {
        match &self.gate {
            None => true,
            Some(g) => {
                let leader = g.side(self.leader_start);
                let here = g.side(p);
                here * leader >= T::zero()
            }
        }
    }

    /// Position timeline of obstacle `idx`: the rest pose at t = 0 followed
    /// by the motion script.
    pub fn obstacle_timeline(&self, idx: usize) -> Vec<(T, Vec2<T>)> {
        let o = &self.obstacles[idx];
        let mut tl = Vec::with_capacity(1 + o.motion.len());
        tl.push((T::zero(), o.pos));
        tl.extend(o.motion.iter().map(|w| (w.t, w.pos)));
        tl
    }

    pub fn goal_timeline(&self) -> Vec<(T, Vec2<T>)> {
        self.goal.iter().map(|w| (w.t, w.pos)).collect()
    }

    /// True if any obstacle or the goal moves.
    pub fn is_dynamic(&self) -> bool {
        self.goal.len() > 1 || self.obstacles.iter().any(|o| !o.motion.is_empty())
    }

    /// Soft wins whenever present: compliant handling is the safe default
    /// for mixed scenes. Obstacle-free scenes count as hard.
    pub fn dominant_kind(&self) -> ObstacleKind {
        if self.obstacles.iter().any(|o| o.kind == ObstacleKind::Soft) {
            ObstacleKind::Soft
        } else {
            ObstacleKind::Hard
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.arena.width > T::zero()) || !(self.arena.height > T::zero()) {
            return Err(invalid("arena", "width and height must be positive"));
        }
        if self.arena.grid < 1 {
            return Err(invalid("arena.grid", "must be at least 1"));
        }
        let mut seen = std::collections::HashSet::new();
        for (i, o) in self.obstacles.iter().enumerate() {
            let field = format!("obstacles[{i}]");
            if !seen.insert(o.id) {
                return Err(invalid(field, format!("duplicate id {}", o.id)));
            }
            if !(o.radius > T::zero()) {
                return Err(invalid(format!("{field}.radius"), "must be positive"));
            }
            if !self.arena.contains(o.pos) {
                return Err(invalid(
                    format!("{field}.pos"),
                    format!("({}, {}) outside arena", o.pos.x, o.pos.y),
                ));
            }
            let mut prev = T::zero();
            for (j, w) in o.motion.iter().enumerate() {
                if !(w.t > prev) {
                    return Err(invalid(
                        format!("{field}.motion[{j}].t"),
                        "waypoint times must be strictly increasing and start after 0",
                    ));
                }
                prev = w.t;
                if !self.arena.contains(w.pos) {
                    return Err(invalid(
                        format!("{field}.motion[{j}].pos"),
                        "outside arena",
                    ));
                }
            }
        }
        if let Some(g) = &self.gate {
            if !self.arena.contains(g.center) {
                return Err(invalid("gate.center", "outside arena"));
            }
            let min_width = real::<T>(2.0 * DEFAULT_COLLISION_RADIUS);
            if !(g.width > min_width) {
                return Err(invalid(
                    "gate.width",
                    format!("opening must exceed twice the drone collision radius ({})", min_width),
                ));
            }
        }
        if !self.arena.contains(self.leader_start) {
            return Err(invalid("leader_start", "outside arena"));
        }
        if !matches!(self.follower_starts.len(), 2 | 4) {
            return Err(invalid(
                "follower_starts",
                format!("follower count must be 2 or 4, got {}", self.follower_starts.len()),
            ));
        }
        let mut starts = vec![self.leader_start];
        starts.extend_from_slice(&self.follower_starts);
        for (i, p) in starts.iter().enumerate() {
            if !self.arena.contains(*p) {
                return Err(invalid(format!("start[{i}]"), "outside arena"));
            }
            for (j, q) in starts.iter().enumerate().skip(i + 1) {
                let min_sep = real::<T>(2.0 * DEFAULT_COLLISION_RADIUS);
                if !(p.distance(*q) > min_sep) {
                    return Err(invalid(
                        format!("start[{i}]/start[{j}]"),
                        "start positions closer than twice the collision radius",
                    ));
                }
            }
        }
        if self.goal.is_empty() {
            return Err(invalid("goal", "at least one waypoint required"));
        }
        let mut prev = -T::one();
        for (j, w) in self.goal.iter().enumerate() {
            if !(w.t >= T::zero()) || !(w.t > prev) {
                return Err(invalid(
                    format!("goal[{j}].t"),
                    "waypoint times must be non-negative and strictly increasing",
                ));
            }
            prev = w.t;
            if !self.arena.contains(w.pos) {
                return Err(invalid(format!("goal[{j}].pos"), "outside arena"));
            }
        }
        Ok(())
    }
}

pub fn load_scenario<T: Real>(path: impl AsRef<Path>) -> Result<Scenario<T>, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let scenario: Scenario<T> = serde_json::from_str(&text)?;
    scenario.validate()?;
    Ok(scenario)
}

pub fn save_scenario<T: Real>(
    scenario: &Scenario<T>,
    path: impl AsRef<Path>,
) -> Result<(), ScenarioError> {
    scenario.validate()?;
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(scenario)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })
}
