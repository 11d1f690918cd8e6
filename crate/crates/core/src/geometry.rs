//! Plane geometry primitives shared by every module.

use crate::Real;
use serde::{Deserialize, Serialize};

/// 2D vector / point. Serializes as the two-element array `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(
    from = "[T; 2]",
    into = "[T; 2]",
    bound(serialize = "T: Real", deserialize = "T: Real")
)]
pub struct Vec2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> From<[T; 2]> for Vec2<T> {
    fn from(a: [T; 2]) -> Self {
        Vec2 { x: a[0], y: a[1] }
    }
}

impl<T: Real> From<Vec2<T>> for [T; 2] {
    fn from(v: Vec2<T>) -> Self {
        [v.x, v.y]
    }
}

impl<T: Real> Vec2<T> {
    pub fn new(x: T, y: T) -> Self {
        Vec2 { x, y }
    }

    pub fn zero() -> Self {
        Vec2 { x: T::zero(), y: T::zero() }
    }

    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y
    }

    pub fn norm_sq(self) -> T {
        self.dot(self)
    }

    pub fn norm(self) -> T {
        self.norm_sq().sqrt()
    }

    pub fn distance(self, o: Self) -> T {
        (self - o).norm()
    }

    /// Unit vector in the same direction, `None` for the zero vector.
    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        if n > T::zero() {
            Some(self * (T::one() / n))
        } else {
            None
        }
    }

    /// Rescales to `max` if the norm exceeds it; shorter vectors pass through.
    pub fn clamp_norm(self, max: T) -> Self {
        let n = self.norm();
        if n > max {
            self * (max / n)
        } else {
            self
        }
    }

    /// Counterclockwise rotation by `theta` radians.
    pub fn rotated(self, theta: T) -> Self {
        let (s, c) = (theta.sin(), theta.cos());
        Vec2 {
            x: c * self.x - s * self.y,
            y: s * self.x + c * self.y,
        }
    }

    /// Counterclockwise perpendicular.
    pub fn perp(self) -> Self {
        Vec2 { x: -self.y, y: self.x }
    }

    /// Linear interpolation; `s = 0` gives `self`, `s = 1` gives `o`.
    pub fn lerp(self, o: Self, s: T) -> Self {
        self + (o - self) * s
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl<T: Real> std::ops::Add for Vec2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Vec2 { x: self.x + o.x, y: self.y + o.y }
    }
}

impl<T: Real> std::ops::Sub for Vec2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Vec2 { x: self.x - o.x, y: self.y - o.y }
    }
}

impl<T: Real> std::ops::Neg for Vec2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Vec2 { x: -self.x, y: -self.y }
    }
}

impl<T: Real> std::ops::Mul<T> for Vec2<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Vec2 { x: self.x * s, y: self.y * s }
    }
}

impl<T: Real> std::ops::AddAssign for Vec2<T> {
    fn add_assign(&mut self, o: Self) {
        self.x += o.x;
        self.y += o.y;
    }
}

/// Distance from point `p` to the closed segment `[a, b]`.
///
/// Degenerate segments (`a == b`) reduce to point distance.
pub fn point_segment_distance<T: Real>(p: Vec2<T>, a: Vec2<T>, b: Vec2<T>) -> T {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq == T::zero() {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len_sq).max(T::zero()).min(T::one());
    p.distance(a + ab * t)
}

/// Closest point on the closed segment `[a, b]` to `p`.
pub fn closest_point_on_segment<T: Real>(p: Vec2<T>, a: Vec2<T>, b: Vec2<T>) -> Vec2<T> {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq == T::zero() {
        return a;
    }
    let t = ((p - a).dot(ab) / len_sq).max(T::zero()).min(T::one());
    a + ab * t
}

/// Samples a piecewise-linear timeline of `(t, point)` waypoints.
///
/// Before the first waypoint the first point is returned, past the last the
/// last point; times must be non-decreasing, which scenario validation
/// guarantees for the callers in this crate.
pub fn sample_timeline<T: Real>(points: &[(T, Vec2<T>)], t: T) -> Vec2<T> {
    assert!(!points.is_empty(), "timeline must have at least one waypoint");
    if t <= points[0].0 {
        return points[0].1;
    }
    for w in points.windows(2) {
        let (t0, p0) = w[0];
        let (t1, p1) = w[1];
        if t <= t1 {
            let span = t1 - t0;
            if span <= T::zero() {
                return p1;
            }
            return p0.lerp(p1, (t - t0) / span);
        }
    }
    points[points.len() - 1].1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_quarter_turn() {
        let v: Vec2<f64> = Vec2::new(1.0, 0.0);
        let r = v.rotated(std::f64::consts::FRAC_PI_2);
        assert!((r.x).abs() < 1e-12);
        assert!((r.y - 1.0).abs() < 1e-12);
    }

    #[test]
    fn clamp_norm_caps_long_vectors_only() {
        let v: Vec2<f64> = Vec2::new(3.0, 4.0);
        assert!((v.clamp_norm(2.5).norm() - 2.5).abs() < 1e-12);
        assert_eq!(v.clamp_norm(10.0), v);
    }

    #[test]
    fn segment_distance_cases() {
        let a: Vec2<f64> = Vec2::new(0.0, 0.0);
        let b = Vec2::new(2.0, 0.0);
        // Perpendicular foot inside the segment.
        assert!((point_segment_distance(Vec2::new(1.0, 1.0), a, b) - 1.0).abs() < 1e-12);
        // Beyond an endpoint.
        assert!((point_segment_distance(Vec2::new(3.0, 0.0), a, b) - 1.0).abs() < 1e-12);
        // Degenerate segment.
        assert!((point_segment_distance(Vec2::new(0.0, 1.0), a, a) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn timeline_interpolates_and_clamps() {
        let tl: Vec<(f64, Vec2<f64>)> =
            vec![(0.0, Vec2::new(0.0, 0.0)), (2.0, Vec2::new(4.0, 0.0))];
        assert_eq!(sample_timeline(&tl, -1.0), Vec2::new(0.0, 0.0));
        assert_eq!(sample_timeline(&tl, 1.0), Vec2::new(2.0, 0.0));
        assert_eq!(sample_timeline(&tl, 5.0), Vec2::new(4.0, 0.0));
    }

    #[test]
    fn serde_as_array() {
        let v: Vec2<f64> = Vec2::new(1.5, -2.0);
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, "[1.5,-2.0]");
        let back: Vec2<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
    }
}
