//! Minimal deterministic SVG 1.1 writer and the trajectory figure.

use std::fmt::Write;

use crate::billiard::{Trajectory, TraceStatus};
use crate::cavity::CavityShape;
use crate::geometry::Vec2;

/// Pixels per unit of cavity opening.
pub const UNIT_PX: f64 = 500.0;

/// Fixed 3-decimal formatting with trailing zeros removed.
pub fn fmt_num(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

pub struct SvgDoc {
    body: String,
    width: f64,
    height: f64,
}

impl SvgDoc {
    pub fn new(width: f64, height: f64) -> Self {
        Self {
            body: String::new(),
            width,
            height,
        }
    }

    fn points_attr(points: &[Vec2]) -> String {
        points
            .iter()
            .map(|p| format!("{},{}", fmt_num(p.x), fmt_num(p.y)))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn polyline(&mut self, points: &[Vec2], stroke: &str, width: f64) {
        let _ = writeln!(
            self.body,
            r#"  <polyline points="{}" fill="none" stroke="{stroke}" stroke-width="{}" stroke-linejoin="round"/>"#,
            Self::points_attr(points),
            fmt_num(width)
        );
    }

    pub fn polygon(&mut self, points: &[Vec2], fill: &str, stroke: &str, width: f64) {
        let _ = writeln!(
            self.body,
            r#"  <polygon points="{}" fill="{fill}" stroke="{stroke}" stroke-width="{}"/>"#,
            Self::points_attr(points),
            fmt_num(width)
        );
    }

    pub fn line(&mut self, a: Vec2, b: Vec2, stroke: &str, width: f64, dash: Option<&str>) {
        let dash = dash.map(|d| format!(r#" stroke-dasharray="{d}""#)).unwrap_or_default();
        let _ = writeln!(
            self.body,
            r#"  <line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{stroke}" stroke-width="{}"{dash}/>"#,
            fmt_num(a.x),
            fmt_num(a.y),
            fmt_num(b.x),
            fmt_num(b.y),
            fmt_num(width)
        );
    }

    pub fn circle(&mut self, c: Vec2, r: f64, fill: &str, stroke: &str, width: f64, dash: Option<&str>) {
        let dash = dash.map(|d| format!(r#" stroke-dasharray="{d}""#)).unwrap_or_default();
        let _ = writeln!(
            self.body,
            r#"  <circle cx="{}" cy="{}" r="{}" fill="{fill}" stroke="{stroke}" stroke-width="{}"{dash}/>"#,
            fmt_num(c.x),
            fmt_num(c.y),
            fmt_num(r),
            fmt_num(width)
        );
    }

    /// Line from `from` to `to` with an arrow head at `to`.
    pub fn arrow(&mut self, from: Vec2, to: Vec2, stroke: &str, width: f64) {
        self.line(from, to, stroke, width, None);
        let d = (to - from).normalized();
        let side = Vec2::new(-d.y, d.x);
        let head = 10.0;
        let p1 = to - d * head + side * (head * 0.4);
        let p2 = to - d * head - side * (head * 0.4);
        self.polygon(&[to, p1, p2], stroke, stroke, width);
    }

    pub fn text(&mut self, at: Vec2, content: &str) {
        let escaped = content.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");
        let _ = writeln!(
            self.body,
            r#"  <text x="{}" y="{}" font-family="monospace" font-size="12">{escaped}</text>"#,
            fmt_num(at.x),
            fmt_num(at.y)
        );
    }

    pub fn comment(&mut self, content: &str) {
        let _ = writeln!(self.body, "  <!-- {} -->", content.replace("--", "- -"));
    }

    pub fn finish(self) -> String {
        format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
             <svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
             {}</svg>\n",
            self.body,
            w = fmt_num(self.width),
            h = fmt_num(self.height),
        )
    }
}

/// Maps cavity coordinates to pixels: the opening spans 500 px and y points up.
struct Frame {
    min_x: f64,
    max_y: f64,
    margin: f64,
}

impl Frame {
    fn for_shape(shape: &CavityShape) -> (Self, f64, f64) {
        let outline = shape.outline(64);
        let min_x = outline.iter().map(|p| p.x).fold(-0.5, f64::min);
        let max_x = outline.iter().map(|p| p.x).fold(0.5, f64::max);
        let max_y = outline.iter().map(|p| p.y).fold(0.0, f64::max);
        let margin = 60.0;
        // Room below the opening for the entry and exit arrows.
        let below = 0.3;
        let w = (max_x - min_x) * UNIT_PX + 2.0 * margin;
        let h = (max_y + below) * UNIT_PX + 2.0 * margin;
        (Self { min_x, max_y, margin }, w, h)
    }

    fn px(&self, p: Vec2) -> Vec2 {
        Vec2::new(
            self.margin + (p.x - self.min_x) * UNIT_PX,
            self.margin + (self.max_y - p.y) * UNIT_PX,
        )
    }
}

/// Cavity outline alone.
pub fn render_shape(shape: &CavityShape) -> String {
    let (frame, w, h) = Frame::for_shape(shape);
    let mut doc = SvgDoc::new(w, h);
    draw_shape(&mut doc, &frame, shape);
    doc.finish()
}

fn draw_shape(doc: &mut SvgDoc, frame: &Frame, shape: &CavityShape) {
    let outline: Vec<Vec2> = shape.outline(96).into_iter().map(|p| frame.px(p)).collect();
    doc.polyline(&outline, "#000000", 2.0);
    doc.line(
        frame.px(Vec2::new(-0.5, 0.0)),
        frame.px(Vec2::new(0.5, 0.0)),
        "#888888",
        1.0,
        Some("6 4"),
    );
}

/// Cavity outline with a trajectory polyline and entry/exit arrows.
pub fn render_trajectory(shape: &CavityShape, traj: &Trajectory) -> String {
    let (frame, w, h) = Frame::for_shape(shape);
    let mut doc = SvgDoc::new(w, h);
    draw_shape(&mut doc, &frame, shape);
    let path: Vec<Vec2> = traj.points.iter().map(|p| frame.px(*p)).collect();
    doc.polyline(&path, "#1f5fbf", 1.5);

    let arrow_len = 0.25;
    let entry = traj.points[0];
    let din = traj.entry.direction();
    doc.arrow(frame.px(entry - din * arrow_len), frame.px(entry), "#2a8f2a", 1.5);
    if traj.status == TraceStatus::Exited {
        let exit = Vec2::new(traj.exit_x, 0.0);
        let (s, c) = traj.exit_phi.sin_cos();
        let dout = Vec2::new(s, -c);
        doc.arrow(frame.px(exit), frame.px(exit + dout * arrow_len), "#c0392b", 1.5);
    }
    let label = format!(
        "x={} phi={}deg reflections={} exit={}deg",
        fmt_num(traj.entry.x),
        fmt_num(traj.entry.phi.to_degrees()),
        traj.reflections,
        if traj.exit_phi.is_finite() { fmt_num(traj.exit_phi.to_degrees()) } else { "-".into() },
    );
    doc.text(Vec2::new(10.0, h - 10.0), &label);
    doc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::billiard::{trace, EntryState};
    use crate::cavity::make_double_parabola;

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(-0.0001), "0");
        assert_eq!(fmt_num(2.12345), "2.123");
        assert_eq!(fmt_num(250.5), "250.5");
    }

    #[test]
    fn opening_spans_500_px() {
        let shape = make_double_parabola(2f64.sqrt(), 0.0).unwrap();
        let (frame, _, _) = Frame::for_shape(&shape);
        let a = frame.px(Vec2::new(-0.5, 0.0));
        let b = frame.px(Vec2::new(0.5, 0.0));
        assert!((b.x - a.x - 500.0).abs() < 1e-9);
    }

    #[test]
    fn trajectory_svg_has_parts() {
        let shape = make_double_parabola(2f64.sqrt(), 0.0).unwrap();
        let t = trace(&shape, EntryState::new(0.45, 75f64.to_radians()).unwrap(), 100);
        let svg = render_trajectory(&shape, &t);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches("<polygon").count(), 2);
        assert!(svg.contains("reflections=3"));
        assert_eq!(svg, render_trajectory(&shape, &t));
    }
}
