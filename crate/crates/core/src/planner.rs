//! Artificial Potential Field guidance for the leader drone.
//!
//! Standard quadratic attractive potential plus inverse-distance repulsive
//! potentials around obstacle bodies; the leader follows the capped gradient
//! descent velocity. Local-minimum escape lives in the simulation loop, not
//! here; these functions are pure fields.

use crate::geometry::{closest_point_on_segment, point_segment_distance, Vec2};
use crate::{real, Real};
use serde::{Deserialize, Serialize};

/// APF gains. All values are config, not physics: they are calibrated so the
/// bundled scenarios are collision-free and goal-reaching.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct ApfConfig<T> {
    /// Attractive gain: acceleration-scale pull toward the goal.
    pub k_att: T,
    /// Repulsive gain.
    pub k_rep: T,
    /// Influence distance (m): repulsion vanishes beyond this surface range.
    pub rho0: T,
    /// Cap on the total repulsive force magnitude. Must exceed the largest
    /// attractive pull in the arena, or the goal attraction can drag the
    /// leader through a surface.
    pub cap: T,
}

impl<T: Real> Default for ApfConfig<T> {
    fn default() -> Self {
        ApfConfig { k_att: real(2.0), k_rep: real(0.02), rho0: real(0.4), cap: real(50.0) }
    }
}

/// Obstacle body as the planner sees it: a disc or a thick wall segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BodyShape<T> {
    Disc { center: Vec2<T>, radius: T },
    Wall { a: Vec2<T>, b: Vec2<T>, half_width: T },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Body<T> {
    pub id: u32,
    pub shape: BodyShape<T>,
}

impl<T: Real> Body<T> {
    /// Signed distance from `p` to the body surface (negative inside).
    pub fn surface_distance(&self, p: Vec2<T>) -> T {
        match self.shape {
            BodyShape::Disc { center, radius } => p.distance(center) - radius,
            BodyShape::Wall { a, b, half_width } => point_segment_distance(p, a, b) - half_width,
        }
    }

    /// Unit vector from the body surface toward `p`; `None` at the exact
    /// center line where the direction is undefined.
    fn away_direction(&self, p: Vec2<T>) -> Option<Vec2<T>> {
        match self.shape {
            BodyShape::Disc { center, .. } => (p - center).normalized(),
            BodyShape::Wall { a, b, .. } => (p - closest_point_on_segment(p, a, b)).normalized(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("position ({x}, {y}) penetrates body {body_id}")]
pub struct PenetrationError {
    pub body_id: u32,
    pub x: f64,
    pub y: f64,
}

/// `U_att = ½·k_att·‖pos − goal‖²`.
pub fn attractive_potential<T: Real>(pos: Vec2<T>, goal: Vec2<T>, cfg: &ApfConfig<T>) -> T {
    real::<T>(0.5) * cfg.k_att * (pos - goal).norm_sq()
}

/// `−∇U_att = k_att·(goal − pos)`.
pub fn attractive_force<T: Real>(pos: Vec2<T>, goal: Vec2<T>, cfg: &ApfConfig<T>) -> Vec2<T> {
    (goal - pos) * cfg.k_att
}

fn penetration<T: Real>(body: &Body<T>, pos: Vec2<T>) -> PenetrationError {
    PenetrationError {
        body_id: body.id,
        x: pos.x.to_f64().unwrap_or(f64::NAN),
        y: pos.y.to_f64().unwrap_or(f64::NAN),
    }
}

/// `U_rep = Σ ½·k_rep·(1/ρ − 1/ρ₀)²` over bodies with surface distance
/// `ρ ≤ ρ₀`.
pub fn repulsive_potential<T: Real>(
    pos: Vec2<T>,
    bodies: &[Body<T>],
    cfg: &ApfConfig<T>,
) -> Result<T, PenetrationError> {
    let mut u = T::zero();
    let half = real::<T>(0.5);
    for body in bodies {
        let rho = body.surface_distance(pos);
        if rho <= T::zero() {
            return Err(penetration(body, pos));
        }
        if rho <= cfg.rho0 {
            let inv = T::one() / rho - T::one() / cfg.rho0;
            u += half * cfg.k_rep * inv * inv;
        }
    }
    Ok(u)
}

/// `−∇U_rep`, summed over bodies in influence range and clamped to `cfg.cap`.
pub fn repulsive_force<T: Real>(
    pos: Vec2<T>,
    bodies: &[Body<T>],
    cfg: &ApfConfig<T>,
) -> Result<Vec2<T>, PenetrationError> {
    let mut f = Vec2::zero();
    for body in bodies {
        let rho = body.surface_distance(pos);
        if rho <= T::zero() {
            return Err(penetration(body, pos));
        }
        if rho <= cfg.rho0 {
            // Direction undefined only on the body center line, which is
            // inside the body and already rejected above.
            let dir = body.away_direction(pos).expect("outside the surface");
            let inv = T::one() / rho - T::one() / cfg.rho0;
            f += dir * (cfg.k_rep * inv / (rho * rho));
        }
    }
    Ok(f.clamp_norm(cfg.cap))
}

/// Combined APF velocity command, speed-limited to `v_max`.
pub fn leader_velocity<T: Real>(
    pos: Vec2<T>,
    goal: Vec2<T>,
    bodies: &[Body<T>],
    cfg: &ApfConfig<T>,
    v_max: T,
) -> Result<Vec2<T>, PenetrationError> {
    assert!(v_max > T::zero(), "v_max must be positive");
    let v = attractive_force(pos, goal, cfg) + repulsive_force(pos, bodies, cfg)?;
    Ok(v.clamp_norm(v_max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg() -> ApfConfig<f64> {
        ApfConfig::default()
    }

    fn test_bodies() -> Vec<Body<f64>> {
        vec![
            Body { id: 0, shape: BodyShape::Disc { center: Vec2::new(1.0, 1.0), radius: 0.1 } },
            Body { id: 1, shape: BodyShape::Disc { center: Vec2::new(0.4, 1.4), radius: 0.15 } },
            Body {
                id: 2,
                shape: BodyShape::Wall {
                    a: Vec2::new(1.5, 0.0),
                    b: Vec2::new(1.5, 0.6),
                    half_width: 0.02,
                },
            },
        ]
    }

    #[test]
    fn attractive_zero_at_goal_and_unit_case() {
        let c = ApfConfig { k_att: 1.0, ..cfg() };
        assert_eq!(attractive_force(Vec2::new(2.0, 3.0), Vec2::new(2.0, 3.0), &c), Vec2::zero());
        let f = attractive_force(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), &c);
        assert_eq!(f, Vec2::new(1.0, 0.0));
    }

    #[test]
    fn repulsion_zero_outside_influence() {
        let c = cfg();
        let bodies = vec![Body {
            id: 0,
            shape: BodyShape::Disc { center: Vec2::zero(), radius: 0.1 },
        }];
        // Surface distance 0.8 = 2·rho0.
        let f = repulsive_force(Vec2::new(0.9, 0.0), &bodies, &c).unwrap();
        assert_eq!(f, Vec2::zero());
    }

    #[test]
    fn repulsion_grows_as_distance_shrinks() {
        let c = cfg();
        let bodies = vec![Body {
            id: 0,
            shape: BodyShape::Disc { center: Vec2::zero(), radius: 0.1 },
        }];
        let mut prev = 0.0;
        for rho in [0.39, 0.3, 0.2, 0.1] {
            let f = repulsive_force(Vec2::new(0.1 + rho, 0.0), &bodies, &c).unwrap().norm();
            assert!(f > prev, "rho={rho}: {f} <= {prev}");
            prev = f;
        }
        assert!(prev < c.cap);
        // Close to the surface the magnitude saturates at the cap.
        for rho in [0.05, 0.02] {
            let f = repulsive_force(Vec2::new(0.1 + rho, 0.0), &bodies, &c).unwrap().norm();
            assert!((f - c.cap).abs() < 1e-12, "rho={rho}: {f} != cap");
        }
    }

    #[test]
    fn penetration_reports_body_id() {
        let c = cfg();
        let bodies = test_bodies();
        let err = repulsive_force(Vec2::new(0.4, 1.4), &bodies, &c).unwrap_err();
        assert_eq!(err.body_id, 1);
    }

    /// Central finite differences of the potentials.
    fn fd_force(pos: Vec2<f64>, bodies: &[Body<f64>], goal: Vec2<f64>, c: &ApfConfig<f64>) -> Vec2<f64> {
        let h = 1e-5;
        let u = |p: Vec2<f64>| {
            attractive_potential(p, goal, c) + repulsive_potential(p, bodies, c).unwrap()
        };
        Vec2::new(
            -(u(Vec2::new(pos.x + h, pos.y)) - u(Vec2::new(pos.x - h, pos.y))) / (2.0 * h),
            -(u(Vec2::new(pos.x, pos.y + h)) - u(Vec2::new(pos.x, pos.y - h))) / (2.0 * h),
        )
    }

    #[test]
    fn forces_match_finite_difference_gradients() {
        let c = cfg();
        let bodies = test_bodies();
        let goal = Vec2::new(1.9, 1.1);
        // Deterministic pseudo-random points in the arena.
        let mut state = 0x1234_5678_9abc_def0u64;
        let mut rand01 = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut checked = 0;
        while checked < 200 {
            let pos = Vec2::new(rand01() * 2.0, rand01() * 2.0);
            // Skip singular neighborhoods: near surfaces, near the influence
            // boundary (where the repulsive term vanishes quadratically), and
            // the repulsive cap.
            if bodies.iter().any(|b| {
                let rho = b.surface_distance(pos);
                rho < 0.02 || (rho - c.rho0).abs() < 0.02
            }) {
                continue;
            }
            let rep = repulsive_force(pos, &bodies, &c).unwrap();
            if rep.norm() > 0.9 * c.cap {
                continue;
            }
            let analytic = attractive_force(pos, goal, &c) + rep;
            let fd = fd_force(pos, &bodies, goal, &c);
            let rel = (analytic - fd).norm() / fd.norm().max(1e-9);
            assert!(rel < 1e-5, "pos=({}, {}): rel={rel}", pos.x, pos.y);
            checked += 1;
        }
    }

    #[test]
    fn speed_cap_saturates_far_away() {
        let c = cfg();
        let v = leader_velocity(Vec2::new(0.0, 0.0), Vec2::new(10.0, 0.0), &[], &c, 1.4).unwrap();
        assert!((v.norm() - 1.4).abs() < 1e-12);
        let at_goal = leader_velocity(Vec2::new(3.0, 2.0), Vec2::new(3.0, 2.0), &[], &c, 1.4).unwrap();
        assert_eq!(at_goal, Vec2::zero());
    }

    proptest! {
        #[test]
        fn translational_invariance(
            px in -1.0f64..1.0, py in -1.0f64..1.0,
            tx in -5.0f64..5.0, ty in -5.0f64..5.0,
        ) {
            let c = cfg();
            let goal = Vec2::new(1.9, 1.1);
            let bodies = test_bodies();
            let pos = Vec2::new(px + 0.7, py + 0.9);
            prop_assume!(bodies.iter().all(|b| b.surface_distance(pos) > 1e-3));
            let shift = Vec2::new(tx, ty);
            let shifted: Vec<Body<f64>> = bodies
                .iter()
                .map(|b| Body {
                    id: b.id,
                    shape: match b.shape {
                        BodyShape::Disc { center, radius } =>
                            BodyShape::Disc { center: center + shift, radius },
                        BodyShape::Wall { a, b: bb, half_width } =>
                            BodyShape::Wall { a: a + shift, b: bb + shift, half_width },
                    },
                })
                .collect();
            let v0 = leader_velocity(pos, goal, &bodies, &c, 2.0).unwrap();
            let v1 = leader_velocity(pos + shift, goal + shift, &shifted, &c, 2.0).unwrap();
            prop_assert!((v0 - v1).norm() < 1e-9);
        }

        #[test]
        fn rotational_equivariance(
            px in 0.0f64..2.0, py in 0.0f64..2.0,
            theta in 0.0f64..std::f64::consts::TAU,
        ) {
            let c = cfg();
            let goal = Vec2::new(1.9, 1.1);
            let bodies = test_bodies();
            let pos = Vec2::new(px, py);
            prop_assume!(bodies.iter().all(|b| b.surface_distance(pos) > 1e-3));
            let rot = |p: Vec2<f64>| p.rotated(theta);
            let rotated: Vec<Body<f64>> = bodies
                .iter()
                .map(|b| Body {
                    id: b.id,
                    shape: match b.shape {
                        BodyShape::Disc { center, radius } =>
                            BodyShape::Disc { center: rot(center), radius },
                        BodyShape::Wall { a, b: bb, half_width } =>
                            BodyShape::Wall { a: rot(a), b: rot(bb), half_width },
                    },
                })
                .collect();
            let v0 = leader_velocity(pos, goal, &bodies, &c, 2.0).unwrap();
            let v1 = leader_velocity(rot(pos), rot(goal), &rotated, &c, 2.0).unwrap();
            prop_assert!((v0.rotated(theta) - v1).norm() < 1e-9);
        }

        #[test]
        fn speed_never_exceeds_cap(
            px in 0.0f64..2.0, py in 0.0f64..2.0,
            gx in 0.0f64..2.0, gy in 0.0f64..2.0,
            v_max in 0.1f64..2.0,
        ) {
            let c = cfg();
            let bodies = test_bodies();
            let pos = Vec2::new(px, py);
            prop_assume!(bodies.iter().all(|b| b.surface_distance(pos) > 1e-6));
            let v = leader_velocity(pos, Vec2::new(gx, gy), &bodies, &c, v_max).unwrap();
            prop_assert!(v.norm() <= v_max + 1e-12);
        }
    }
}
