//! Virtual mass-spring-damper links and the obstacle-deflection law.
//!
//! A link integrates `m·Δẍ + d·Δẋ + k·Δx = F_ext` per axis with semi-implicit
//! Euler. The deflection law pushes a drone's desired position radially away
//! from any obstacle closer than the deflection radius by the fixed offset
//! `k_imp_f · r_imp`; the link dynamics then produce the smooth divergence
//! and rejoin.

use crate::geometry::Vec2;
use crate::retrieval::ImpedanceProfile;
use crate::{real, Real};
use serde::{Deserialize, Serialize};

/// Link displacement and velocity error relative to the setpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkState<T> {
    pub delta_x: Vec2<T>,
    pub delta_v: Vec2<T>,
}

impl<T: Real> LinkState<T> {
    pub fn at_rest() -> Self {
        LinkState { delta_x: Vec2::zero(), delta_v: Vec2::zero() }
    }
}

impl<T: Real> Default for LinkState<T> {
    fn default() -> Self {
        Self::at_rest()
    }
}

/// Constants of the temporary obstacle links.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct DeflectionConstants<T> {
    /// Local deflection radius (m): links activate below this distance.
    pub r_imp: T,
    /// Avoidance gain scaling the deflection offset.
    pub k_imp_f: T,
}

impl<T: Real> Default for DeflectionConstants<T> {
    fn default() -> Self {
        DeflectionConstants { r_imp: real(0.65), k_imp_f: real(0.45) }
    }
}

impl<T: Real> DeflectionConstants<T> {
    /// Magnitude of an active deflection offset: `k_imp_f · r_imp`.
    pub fn offset_magnitude(&self) -> T {
        self.k_imp_f * self.r_imp
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ImpedanceError {
    #[error("dt must be in (0, 0.1], got {0}")]
    BadDt(f64),
    #[error("non-finite {0}")]
    NonFinite(&'static str),
}

/// Advances the link one step of semi-implicit Euler:
/// `a = (F − d·Δv − k·Δx)/m; Δv += a·dt; Δx += Δv·dt`, each axis independent.
pub fn step_link<T: Real>(
    state: LinkState<T>,
    profile: &ImpedanceProfile<T>,
    f_ext: Vec2<T>,
    dt: T,
) -> Result<LinkState<T>, ImpedanceError> {
    if !(dt > T::zero() && dt <= real(0.1)) {
        return Err(ImpedanceError::BadDt(dt.to_f64().unwrap_or(f64::NAN)));
    }
    if !state.delta_x.is_finite() || !state.delta_v.is_finite() {
        return Err(ImpedanceError::NonFinite("link state"));
    }
    if !f_ext.is_finite() {
        return Err(ImpedanceError::NonFinite("external force"));
    }
    let accel = (f_ext - state.delta_v * profile.d - state.delta_x * profile.k)
        * (T::one() / profile.m);
    let delta_v = state.delta_v + accel * dt;
    let delta_x = state.delta_x + delta_v * dt;
    Ok(LinkState { delta_x, delta_v })
}

/// A deflection offset; `degenerate` marks the coincident-position fallback.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deflection<T> {
    pub offset: Vec2<T>,
    pub degenerate: bool,
}

/// Setpoint offset induced by one obstacle.
///
/// Inactive (zero) at or beyond `r_imp`; inside, the offset has the fixed
/// magnitude `k_imp_f · r_imp` and points from the obstacle toward the drone.
/// A drone exactly at the obstacle center deflects along +x and is flagged.
pub fn obstacle_deflection<T: Real>(
    drone_pos: Vec2<T>,
    obstacle_pos: Vec2<T>,
    consts: &DeflectionConstants<T>,
) -> Deflection<T> {
    let away = drone_pos - obstacle_pos;
    let dist = away.norm();
    if dist >= consts.r_imp {
        return Deflection { offset: Vec2::zero(), degenerate: false };
    }
    match away.normalized() {
        Some(dir) => Deflection { offset: dir * consts.offset_magnitude(), degenerate: false },
        None => Deflection {
            offset: Vec2::new(consts.offset_magnitude(), T::zero()),
            degenerate: true,
        },
    }
}

/// Vector sum of the deflections from several obstacle positions, clamped to
/// the single-link magnitude so clutter never scales the deflection beyond
/// its design value. Returns the number of degenerate contributions.
pub fn deflection_sum<T: Real>(
    drone_pos: Vec2<T>,
    obstacle_positions: impl IntoIterator<Item = Vec2<T>>,
    consts: &DeflectionConstants<T>,
) -> (Vec2<T>, u32) {
    let mut sum = Vec2::zero();
    let mut degenerate = 0;
    for pos in obstacle_positions {
        let d = obstacle_deflection(drone_pos, pos, consts);
        sum += d.offset;
        if d.degenerate {
            degenerate += 1;
        }
    }
    (sum.clamp_norm(consts.offset_magnitude()), degenerate)
}

/// Analytic solution of `m·ẍ + d·ẋ + k·x = F` at time `t`, per axis, from
/// initial displacement `x0` and velocity `v0`. Test oracle for [`step_link`].
///
/// The damping regime is selected by the discriminant `d² − 4mk` with a
/// `1e-12` tolerance for the critical case.
pub fn closed_form_response<T: Real>(
    profile: &ImpedanceProfile<T>,
    f_const: Vec2<T>,
    x0: Vec2<T>,
    v0: Vec2<T>,
    t: T,
) -> Vec2<T> {
    assert!(t >= T::zero(), "time must be non-negative");
    assert!(profile.m > T::zero() && profile.k > T::zero());
    let axis = |f: T, x0: T, v0: T| -> T {
        let (m, d, k) = (profile.m, profile.d, profile.k);
        let xe = f / k;
        let y0 = x0 - xe;
        let disc = d * d - real::<T>(4.0) * m * k;
        let tol = real::<T>(1e-12);
        let two_m = real::<T>(2.0) * m;
        let y = if disc > tol {
            // Overdamped: two real decay rates.
            let sq = disc.sqrt();
            let r1 = (-d + sq) / two_m;
            let r2 = (-d - sq) / two_m;
            let c1 = (v0 - r2 * y0) / (r1 - r2);
            let c2 = y0 - c1;
            c1 * (r1 * t).exp() + c2 * (r2 * t).exp()
        } else if disc < -tol {
            // Underdamped: decaying oscillation.
            let alpha = d / two_m;
            let omega_d = (-disc).sqrt() / two_m;
            let a = y0;
            let b = (v0 + alpha * y0) / omega_d;
            (-alpha * t).exp() * (a * (omega_d * t).cos() + b * (omega_d * t).sin())
        } else {
            // Critically damped: repeated root.
            let r = -d / two_m;
            (y0 + (v0 - r * y0) * t) * (r * t).exp()
        };
        xe + y
    };
    Vec2::new(axis(f_const.x, x0.x, v0.x), axis(f_const.y, x0.y, v0.y))
}
