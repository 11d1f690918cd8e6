//! Hand-emitted SVG plot of a run: arena, gate walls, obstacles with their
//! motion scripts, goal waypoints, and the recorded drone paths.

use std::fmt::Write as _;
use swarmlink_core::scene::GATE_WALL_HALF_WIDTH;
use swarmlink_core::{ObstacleKind, Scenario, SimResult, Vec2};

/// Pixels per meter. The viewBox carries physical size; this only sets the
/// default raster scale.
const SCALE: f64 = 120.0;
const MARGIN: f64 = 0.25;
/// Keep polylines readable: at most this many points per path.
const MAX_POINTS: usize = 600;

const OBSTACLE_FILL: [(ObstacleKind, &str); 2] =
    [(ObstacleKind::Hard, "#7f8c8d"), (ObstacleKind::Soft, "#e67e22")];
const DRONE_STROKE: [&str; 5] = ["#2c3e50", "#2980b9", "#27ae60", "#8e44ad", "#16a085"];

fn fill_for(kind: ObstacleKind) -> &'static str {
    OBSTACLE_FILL.iter().find(|(k, _)| *k == kind).expect("both kinds mapped").1
}

struct Canvas {
    out: String,
    height: f64,
}

impl Canvas {
    /// SVG y grows downward; flip so the arena's y grows upward.
    fn y(&self, y: f64) -> f64 {
        self.height - y
    }

    fn circle(&mut self, c: Vec2, r: f64, style: &str) {
        let _ = writeln!(
            self.out,
            r#"  <circle cx="{:.4}" cy="{:.4}" r="{:.4}" {style}/>"#,
            c.x,
            self.y(c.y),
            r
        );
    }

    fn line(&mut self, a: Vec2, b: Vec2, style: &str) {
        let _ = writeln!(
            self.out,
            r#"  <line x1="{:.4}" y1="{:.4}" x2="{:.4}" y2="{:.4}" {style}/>"#,
            a.x,
            self.y(a.y),
            b.x,
            self.y(b.y)
        );
    }

    fn polyline(&mut self, points: &[Vec2], style: &str) {
        if points.len() < 2 {
            return;
        }
        let coords: Vec<String> =
            points.iter().map(|p| format!("{:.4},{:.4}", p.x, self.y(p.y))).collect();
        let _ = writeln!(self.out, r#"  <polyline points="{}" {style}/>"#, coords.join(" "));
    }
}

fn decimate(points: Vec<Vec2>) -> Vec<Vec2> {
    if points.len() <= MAX_POINTS {
        return points;
    }
    let last = *points.last().expect("non-empty");
    let stride = points.len().div_ceil(MAX_POINTS);
    let mut kept: Vec<Vec2> = points.into_iter().step_by(stride).collect();
    if kept.last() != Some(&last) {
        kept.push(last);
    }
    kept
}

pub fn render(scenario: &Scenario, result: &SimResult) -> String {
    let w = scenario.arena.width;
    let h = scenario.arena.height;
    let mut c = Canvas { out: String::new(), height: h };
    let _ = writeln!(
        c.out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="{} {} {} {}">"#,
        (w + 2.0 * MARGIN) * SCALE,
        (h + 2.0 * MARGIN) * SCALE,
        -MARGIN,
        -MARGIN,
        w + 2.0 * MARGIN,
        h + 2.0 * MARGIN
    );
    let _ = writeln!(
        c.out,
        r##"  <rect x="0" y="0" width="{w}" height="{h}" fill="#fdfefe" stroke="#34495e" stroke-width="0.02"/>"##
    );

    if let Some(gate) = &scenario.gate {
        for (a, b) in gate.wall_segments(&scenario.arena) {
            let style = format!(
                r##"stroke="#34495e" stroke-width="{:.3}" stroke-linecap="butt""##,
                2.0 * GATE_WALL_HALF_WIDTH
            );
            c.line(a, b, &style);
        }
    }

    for o in &scenario.obstacles {
        if !o.motion.is_empty() {
            let mut path = vec![o.pos];
            path.extend(o.motion.iter().map(|wp| wp.pos));
            let style = format!(
                r#"fill="none" stroke="{}" stroke-width="0.01" stroke-dasharray="0.04 0.04""#,
                fill_for(o.kind)
            );
            c.polyline(&path, &style);
            if let Some(end) = o.motion.last() {
                c.circle(end.pos, o.radius, &format!(r#"fill="none" stroke="{}" stroke-width="0.01" stroke-dasharray="0.03 0.03""#, fill_for(o.kind)));
            }
        }
        c.circle(o.pos, o.radius, &format!(r#"fill="{}" fill-opacity="0.85""#, fill_for(o.kind)));
    }

    if scenario.goal.len() > 1 {
        let path: Vec<Vec2> = scenario.goal.iter().map(|wp| wp.pos).collect();
        c.polyline(
            &path,
            r##"fill="none" stroke="#c0392b" stroke-width="0.01" stroke-dasharray="0.04 0.04""##,
        );
    }
    for wp in &scenario.goal {
        c.circle(wp.pos, 0.035, r##"fill="none" stroke="#c0392b" stroke-width="0.015""##);
    }

    for (i, tr) in result.trajectories.iter().enumerate() {
        let stroke = DRONE_STROKE[i % DRONE_STROKE.len()];
        let width = if i == 0 { 0.02 } else { 0.012 };
        let points = decimate(tr.samples.iter().map(|s| s.pos).collect());
        let style =
            format!(r#"fill="none" stroke="{stroke}" stroke-width="{width}" stroke-linejoin="round""#);
        c.polyline(&points, &style);
        if let (Some(first), Some(last)) = (tr.samples.first(), tr.samples.last()) {
            c.circle(first.pos, 0.03, &format!(r#"fill="{stroke}" fill-opacity="0.4""#));
            c.circle(last.pos, 0.03, &format!(r#"fill="{stroke}""#));
        }
    }

    c.out.push_str("</svg>\n");
    c.out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimate_keeps_endpoints_and_bounds_length() {
        let points: Vec<Vec2> = (0..5000).map(|i| Vec2::new(i as f64, 0.0)).collect();
        let kept = decimate(points.clone());
        assert!(kept.len() <= MAX_POINTS + 1);
        assert_eq!(kept.first(), points.first());
        assert_eq!(kept.last(), points.last());
        assert_eq!(decimate(points[..3].to_vec()).len(), 3);
    }
}
