//! Normalized cavity shapes with unit opening `[-1/2, 1/2] × {0}`.
//!
//! A cavity is an ordered chain of arcs from `(-1/2, 0)` to `(1/2, 0)` lying
//! in `y ≥ 0`. The opening itself is never part of the chain; the billiard
//! treats it as the exit gate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Arc, Facing, Vec2};

/// Maximum gap between consecutive arc endpoints.
pub const CHAIN_TOL: f64 = 1e-12;

const LEFT_CORNER: Vec2 = Vec2::new(-0.5, 0.0);
const RIGHT_CORNER: Vec2 = Vec2::new(0.5, 0.0);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CavityShape {
    pub name: String,
    pub parameters: Vec<(String, f64)>,
    pub arcs: Vec<Arc>,
}

#[derive(Debug, Error, PartialEq)]
pub enum CavityError {
    #[error("rectangle depth must be positive, got {0}")]
    NonPositiveDepth(f64),
    #[error("height h must be positive, got {0}")]
    NonPositiveHeight(f64),
    #[error("g(y) vanishes inside (0, h) for h = {h}, beta = {beta}: the cavity pinches")]
    Pinched { h: f64, beta: f64 },
    #[error("graph points must number at least 2, got {0}")]
    TooFewPoints(usize),
    #[error("graph abscissae must increase strictly (at index {0})")]
    NonMonotone(usize),
    #[error("graph ordinate is negative at index {0}")]
    NegativeHeight(usize),
    #[error("graph must start at (-1/2, 0) and end at (1/2, 0)")]
    EndpointsOffOpening,
    #[error("shape is invalid: {0:?}")]
    Invalid(Vec<Violation>),
}

/// A broken [`CavityShape`] invariant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Violation {
    Empty,
    NonFinite { arc: usize },
    DegenerateArc { arc: usize },
    StartOffCorner,
    EndOffCorner,
    ChainDiscontinuity { after: usize, gap: f64 },
    BelowOpening { arc: usize, min_y: f64 },
    SelfIntersection { first: usize, second: usize },
}

impl CavityShape {
    pub fn new(name: impl Into<String>, parameters: Vec<(String, f64)>, arcs: Vec<Arc>) -> Self {
        Self {
            name: name.into(),
            parameters,
            arcs,
        }
    }

    pub fn parameter(&self, name: &str) -> Option<f64> {
        self.parameters.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    /// Polyline through the chain, `samples_per_arc` pieces per parabola.
    pub fn outline(&self, samples_per_arc: usize) -> Vec<Vec2> {
        let mut pts: Vec<Vec2> = Vec::new();
        for arc in &self.arcs {
            let n = match arc {
                Arc::Segment { .. } => 1,
                Arc::Parabola(_) => samples_per_arc,
            };
            let s = arc.sample(n);
            let skip = usize::from(!pts.is_empty());
            pts.extend(s.into_iter().skip(skip));
        }
        pts
    }

    /// Shared endpoints between consecutive arcs.
    pub fn corners(&self) -> impl Iterator<Item = Vec2> + '_ {
        self.arcs.windows(2).map(|w| w[0].end())
    }

    /// Mirror image under `x -> -x`.
    pub fn mirrored(&self) -> Self {
        Self {
            name: self.name.clone(),
            parameters: self.parameters.clone(),
            arcs: self.arcs.iter().rev().map(Arc::mirrored).collect(),
        }
    }

    pub fn validated(self) -> Result<Self, CavityError> {
        let v = validate(&self);
        if v.is_empty() {
            Ok(self)
        } else {
            Err(CavityError::Invalid(v))
        }
    }
}

pub fn make_flat() -> CavityShape {
    CavityShape::new("flat", vec![], vec![Arc::segment(LEFT_CORNER, RIGHT_CORNER)])
}

/// Right isosceles triangle with apex `(0, 1/2)`.
pub fn make_triangle() -> CavityShape {
    let apex = Vec2::new(0.0, 0.5);
    CavityShape::new(
        "triangle",
        vec![],
        vec![Arc::segment(LEFT_CORNER, apex), Arc::segment(apex, RIGHT_CORNER)],
    )
}

pub fn make_rectangle(depth: f64) -> Result<CavityShape, CavityError> {
    if !(depth > 0.0) || !depth.is_finite() {
        return Err(CavityError::NonPositiveDepth(depth));
    }
    let tl = Vec2::new(-0.5, depth);
    let tr = Vec2::new(0.5, depth);
    Ok(CavityShape::new(
        "rectangle",
        vec![("depth".into(), depth)],
        vec![
            Arc::segment(LEFT_CORNER, tl),
            Arc::segment(tl, tr),
            Arc::segment(tr, RIGHT_CORNER),
        ],
    ))
}

/// Leading coefficient of `g(y) = α y² + β y + 1/2` forced by `g(h) = 0`.
pub fn double_parabola_alpha(h: f64, beta: f64) -> f64 {
    (-beta * h - 0.5) / (h * h)
}

/// Cavity bounded by `x = ±g(y)`, `0 ≤ y ≤ h`, with quadratic `g`.
///
/// `h = √2, β = 0` gives the two nested parabolas where each focus sits on
/// the other's vertex.
pub fn make_double_parabola(h: f64, beta: f64) -> Result<CavityShape, CavityError> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(CavityError::NonPositiveHeight(h));
    }
    if !beta.is_finite() {
        return Err(CavityError::Pinched { h, beta });
    }
    let alpha = double_parabola_alpha(h, beta);
    // g has roots h and 1/(2αh); the second lies in (0, h) iff β < -1/h.
    if beta * h < -1.0 {
        return Err(CavityError::Pinched { h, beta });
    }
    let left = Arc::parabola(-alpha, -beta, -0.5, 0.0, h, Facing::PositiveX);
    let right = Arc::parabola(alpha, beta, 0.5, 0.0, h, Facing::NegativeX);
    Ok(CavityShape::new(
        "double-parabola",
        vec![("h".into(), h), ("beta".into(), beta)],
        vec![left, right],
    ))
}

/// Piecewise-linear graph cavity `0 ≤ y ≤ f(x)` through the given points.
pub fn make_graph_cavity(points: &[(f64, f64)]) -> Result<CavityShape, CavityError> {
    if points.len() < 2 {
        return Err(CavityError::TooFewPoints(points.len()));
    }
    for (i, w) in points.windows(2).enumerate() {
        if !(w[1].0 > w[0].0) {
            return Err(CavityError::NonMonotone(i + 1));
        }
    }
    if let Some(i) = points.iter().position(|p| !(p.1 >= 0.0)) {
        return Err(CavityError::NegativeHeight(i));
    }
    let first = points[0];
    let last = points[points.len() - 1];
    let on = |p: (f64, f64), x: f64| (p.0 - x).abs() <= CHAIN_TOL && p.1.abs() <= CHAIN_TOL;
    if !on(first, -0.5) || !on(last, 0.5) {
        return Err(CavityError::EndpointsOffOpening);
    }
    let arcs = points
        .windows(2)
        .map(|w| Arc::segment(Vec2::new(w[0].0, w[0].1), Vec2::new(w[1].0, w[1].1)))
        .collect();
    CavityShape::new("graph", vec![], arcs).validated()
}

/// Every broken invariant of `shape`; empty iff the shape is usable.
pub fn validate(shape: &CavityShape) -> Vec<Violation> {
    let mut out = Vec::new();
    let arcs = &shape.arcs;
    if arcs.is_empty() {
        out.push(Violation::Empty);
        return out;
    }
    for (i, arc) in arcs.iter().enumerate() {
        if !arc.is_finite() {
            out.push(Violation::NonFinite { arc: i });
        } else if arc.is_degenerate() {
            out.push(Violation::DegenerateArc { arc: i });
        }
    }
    if !out.is_empty() {
        return out;
    }
    if arcs[0].start().distance(LEFT_CORNER) > CHAIN_TOL {
        out.push(Violation::StartOffCorner);
    }
    if arcs[arcs.len() - 1].end().distance(RIGHT_CORNER) > CHAIN_TOL {
        out.push(Violation::EndOffCorner);
    }
    for (i, w) in arcs.windows(2).enumerate() {
        let gap = w[0].end().distance(w[1].start());
        if gap > CHAIN_TOL {
            out.push(Violation::ChainDiscontinuity { after: i, gap });
        }
    }
    for (i, arc) in arcs.iter().enumerate() {
        let min_y = arc.min_y();
        if min_y < -CHAIN_TOL {
            out.push(Violation::BelowOpening { arc: i, min_y });
        }
    }
    out.extend(self_intersections(arcs));
    out
}

const VALIDATION_SAMPLES: usize = 128;

fn self_intersections(arcs: &[Arc]) -> Vec<Violation> {
    let polys: Vec<Vec<Vec2>> = arcs
        .iter()
        .map(|a| match a {
            Arc::Segment { .. } => a.sample(1),
            Arc::Parabola(_) => a.sample(VALIDATION_SAMPLES),
        })
        .collect();
    let mut out = Vec::new();
    for i in 0..polys.len() {
        for j in i + 1..polys.len() {
            let adjacent = j == i + 1;
            // First and last arcs meet at the opening only through the gate,
            // never through a shared endpoint.
            if polylines_cross(&polys[i], &polys[j], adjacent) {
                out.push(Violation::SelfIntersection { first: i, second: j });
            }
        }
    }
    out
}

/// Whether two polylines meet anywhere other than `p`'s last point and `q`'s
/// first point when they are chain-adjacent.
fn polylines_cross(p: &[Vec2], q: &[Vec2], adjacent: bool) -> bool {
    let np = p.len() - 1;
    for a in 0..np {
        for b in 0..q.len() - 1 {
            let shared = adjacent && a == np - 1 && b == 0;
            if segments_meet(p[a], p[a + 1], q[b], q[b + 1], shared) {
                return true;
            }
        }
    }
    false
}

fn segments_meet(a0: Vec2, a1: Vec2, b0: Vec2, b1: Vec2, shared_end: bool) -> bool {
    let r = a1 - a0;
    let s = b1 - b0;
    let denom = r.cross(s);
    let w = b0 - a0;
    if denom.abs() < 1e-300 {
        if w.cross(r).abs() > 1e-14 * r.norm().max(1e-300) {
            return false;
        }
        // Collinear: overlap in projection beyond a single shared point.
        let rr = r.dot(r);
        let t0 = w.dot(r) / rr;
        let t1 = (b1 - a0).dot(r) / rr;
        let (lo, hi) = if t0 < t1 { (t0, t1) } else { (t1, t0) };
        let overlap = hi.min(1.0) - lo.max(0.0);
        return if shared_end { overlap > 1e-12 } else { overlap >= 0.0 };
    }
    let t = w.cross(s) / denom;
    let u = w.cross(r) / denom;
    let eps = 1e-12;
    if shared_end {
        // The pieces touch at a1 == b0 (t = 1, u = 0); anything else is a crossing.
        t > -eps && t < 1.0 - 1e-9 && u > 1e-9 && u < 1.0 + eps
    } else {
        t >= -eps && t <= 1.0 + eps && u >= -eps && u <= 1.0 + eps
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn constructors_validate() {
        for shape in [
            make_flat(),
            make_triangle(),
            make_rectangle(1.0).unwrap(),
            make_rectangle(10.37).unwrap(),
            make_double_parabola(2f64.sqrt(), 0.0).unwrap(),
            make_double_parabola(1.0, 0.0).unwrap(),
            make_double_parabola(2.0, 0.7).unwrap(),
            make_double_parabola(2.0, -0.5).unwrap(),
        ] {
            assert_eq!(validate(&shape), vec![], "{}", shape.name);
        }
    }

    #[test]
    fn triangle_legs_are_perpendicular() {
        let t = make_triangle();
        let d0 = t.arcs[0].end() - t.arcs[0].start();
        let d1 = t.arcs[1].end() - t.arcs[1].start();
        assert_abs_diff_eq!(d0.dot(d1), 0.0);
        assert_eq!(t.arcs[0].end(), Vec2::new(0.0, 0.5));
    }

    #[test]
    fn rectangle_rejects_nonpositive_depth() {
        assert_eq!(make_rectangle(-1.0), Err(CavityError::NonPositiveDepth(-1.0)));
        assert!(make_rectangle(0.0).is_err());
        assert_eq!(make_rectangle(1.0).unwrap().arcs.len(), 3);
    }

    #[test]
    fn double_parabola_coefficients() {
        let dp = make_double_parabola(2f64.sqrt(), 0.0).unwrap();
        let Arc::Parabola(right) = dp.arcs[1] else { panic!() };
        assert_abs_diff_eq!(right.a, -0.25, epsilon = 1e-15);
        assert_eq!(right.b, 0.0);
        assert_eq!(right.c, 0.5);
        assert_abs_diff_eq!(double_parabola_alpha(1.0, 0.0), -0.5);
        let unit = make_double_parabola(1.0, 0.0).unwrap();
        assert!(unit.arcs[0].end().distance(Vec2::new(0.0, 1.0)) < 1e-15);
    }

    #[test]
    fn double_parabola_focus_on_other_vertex() {
        let dp = make_double_parabola(2f64.sqrt(), 0.0).unwrap();
        let (Arc::Parabola(l), Arc::Parabola(r)) = (dp.arcs[0], dp.arcs[1]) else { panic!() };
        assert!(r.focus().unwrap().distance(l.vertex().unwrap()) < 1e-12);
        assert!(l.focus().unwrap().distance(r.vertex().unwrap()) < 1e-12);
        assert!(r.vertex().unwrap().distance(Vec2::new(0.5, 0.0)) < 1e-15);
    }

    #[test]
    fn double_parabola_is_mirror_symmetric() {
        for (h, beta) in [(2f64.sqrt(), 0.0), (1.0, 0.0), (2.5, 0.0)] {
            let dp = make_double_parabola(h, beta).unwrap();
            assert_eq!(dp.mirrored().arcs, dp.arcs);
        }
        let skew = make_double_parabola(1.5, 0.3).unwrap();
        assert_eq!(skew.mirrored().arcs, skew.arcs);
    }

    #[test]
    fn pinched_double_parabola_rejected() {
        assert!(matches!(make_double_parabola(2.0, -0.8), Err(CavityError::Pinched { .. })));
        assert!(make_double_parabola(2.0, -0.5).is_ok());
        assert!(make_double_parabola(0.0, 0.0).is_err());
    }

    #[test]
    fn graph_cavity_matches_builtins() {
        let tri = make_graph_cavity(&[(-0.5, 0.0), (0.0, 0.5), (0.5, 0.0)]).unwrap();
        assert_eq!(tri.arcs, make_triangle().arcs);
        let flat = make_graph_cavity(&[(-0.5, 0.0), (0.5, 0.0)]).unwrap();
        assert_eq!(flat.arcs, make_flat().arcs);
    }

    #[test]
    fn graph_cavity_errors() {
        assert_eq!(
            make_graph_cavity(&[(-0.5, 0.0), (0.2, 0.1), (0.1, 0.1), (0.5, 0.0)]),
            Err(CavityError::NonMonotone(2))
        );
        assert_eq!(
            make_graph_cavity(&[(-0.5, 0.0), (0.0, -0.1), (0.5, 0.0)]),
            Err(CavityError::NegativeHeight(1))
        );
        assert_eq!(
            make_graph_cavity(&[(-0.5, 0.1), (0.5, 0.0)]),
            Err(CavityError::EndpointsOffOpening)
        );
    }

    #[test]
    fn validate_reports_gap() {
        let shape = CavityShape::new(
            "broken",
            vec![],
            vec![
                Arc::segment(LEFT_CORNER, Vec2::new(0.0, 0.5)),
                Arc::segment(Vec2::new(0.001, 0.5), RIGHT_CORNER),
            ],
        );
        let v = validate(&shape);
        assert_eq!(v.len(), 1);
        assert!(matches!(v[0], Violation::ChainDiscontinuity { after: 0, .. }));
    }

    #[test]
    fn validate_reports_dip_below_opening() {
        let shape = CavityShape::new(
            "dip",
            vec![],
            vec![
                Arc::segment(LEFT_CORNER, Vec2::new(0.0, -0.1)),
                Arc::segment(Vec2::new(0.0, -0.1), RIGHT_CORNER),
            ],
        );
        let v = validate(&shape);
        assert!(matches!(v[..], [Violation::BelowOpening { arc: 0, .. }, Violation::BelowOpening { arc: 1, .. }]));
    }

    #[test]
    fn validate_reports_crossing() {
        // Bow-tie: the chain crosses itself.
        let p = [LEFT_CORNER, Vec2::new(0.5, 1.0), Vec2::new(-0.5, 1.0), RIGHT_CORNER];
        let shape = CavityShape::new(
            "bowtie",
            vec![],
            p.windows(2).map(|w| Arc::segment(w[0], w[1])).collect(),
        );
        assert!(validate(&shape)
            .iter()
            .any(|v| matches!(v, Violation::SelfIntersection { first: 0, second: 2 })));
    }

    #[test]
    fn shape_json_round_trip() {
        let dp = make_double_parabola(2f64.sqrt(), 0.0).unwrap();
        let json = serde_json::to_string(&dp).unwrap();
        assert!(json.contains("\"kind\":\"parabola\""));
        let back: CavityShape = serde_json::from_str(&json).unwrap();
        assert_eq!(back, dp);
    }
}
