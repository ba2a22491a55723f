//! Exact 2D primitives: vectors, rays, line and parabola arcs, intersection
//! and specular reflection.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Hits whose direction makes `|d·n|` smaller than this are tangent and ignored.
pub const GRAZING_TOL: f64 = 1e-10;

/// Parameter slack for counting a hit at an arc endpoint as on the arc.
pub const ENDPOINT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector at angle `theta` from the +x axis.
    pub fn from_angle(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(c, s)
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Self) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn normalized(self) -> Self {
        let n = self.norm();
        Self::new(self.x / n, self.y / n)
    }

    pub fn distance(self, other: Self) -> f64 {
        (self - other).norm()
    }

    /// Rotate by -90°: the normal on the right of a path travelling along `self`.
    pub fn right_normal(self) -> Self {
        Self::new(self.y, -self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Self::new(x, y)
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray {
    pub origin: Vec2,
    /// Unit length.
    pub direction: Vec2,
}

impl Ray {
    pub fn new(origin: Vec2, direction: Vec2) -> Self {
        Self { origin, direction }
    }

    pub fn at(&self, t: f64) -> Vec2 {
        self.origin + self.direction * t
    }
}

/// Specular reflection of direction `d` on a wall with unit normal `n`.
pub fn reflect(d: Vec2, n: Vec2) -> Vec2 {
    d - n * (2.0 * d.dot(n))
}

/// Which x-direction the cavity interior lies in, seen from a parabola arc.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Facing {
    PositiveX,
    NegativeX,
}

impl Facing {
    fn sign(self) -> f64 {
        match self {
            Facing::PositiveX => 1.0,
            Facing::NegativeX => -1.0,
        }
    }
}

/// Arc of the parabola `x = a·y² + b·y + c` for `y` in `[y_lo, y_hi]`.
///
/// Along a cavity chain the arc is traversed with `y` increasing when it
/// faces `+x` and decreasing when it faces `-x`, so the interior always lies
/// to the right of the direction of travel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParabolaArc {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub range: [f64; 2],
    pub facing: Facing,
}

impl ParabolaArc {
    pub fn x_at(&self, y: f64) -> f64 {
        (self.a * y + self.b) * y + self.c
    }

    pub fn slope_at(&self, y: f64) -> f64 {
        2.0 * self.a * y + self.b
    }

    pub fn point_at(&self, y: f64) -> Vec2 {
        Vec2::new(self.x_at(y), y)
    }

    pub fn normal_at(&self, y: f64) -> Vec2 {
        let s = self.facing.sign();
        Vec2::new(s, -s * self.slope_at(y)).normalized()
    }

    /// Vertex of the full parabola; `None` when degenerate (a = 0).
    pub fn vertex(&self) -> Option<Vec2> {
        if self.a == 0.0 {
            return None;
        }
        let y = -self.b / (2.0 * self.a);
        Some(Vec2::new(self.c - self.b * self.b / (4.0 * self.a), y))
    }

    pub fn focus(&self) -> Option<Vec2> {
        let v = self.vertex()?;
        Some(Vec2::new(v.x + 1.0 / (4.0 * self.a), v.y))
    }

    fn y_start(&self) -> f64 {
        match self.facing {
            Facing::PositiveX => self.range[0],
            Facing::NegativeX => self.range[1],
        }
    }

    fn y_end(&self) -> f64 {
        match self.facing {
            Facing::PositiveX => self.range[1],
            Facing::NegativeX => self.range[0],
        }
    }

    fn intersect(&self, ray: &Ray, t_min: f64) -> Option<Hit> {
        let (p, d) = (ray.origin, ray.direction);
        // a (p.y + t d.y)^2 + b (p.y + t d.y) + c - (p.x + t d.x) = 0
        let qa = self.a * d.y * d.y;
        let qb = 2.0 * self.a * p.y * d.y + self.b * d.y - d.x;
        let qc = self.x_at(p.y) - p.x;

        let mut roots = [f64::NAN; 2];
        if qa == 0.0 || qa.abs() <= 1e-14 * qb.abs() {
            if qb != 0.0 {
                roots[0] = -qc / qb;
            }
        } else {
            let disc = qb * qb - 4.0 * qa * qc;
            if disc < 0.0 {
                return None;
            }
            let q = -0.5 * (qb + qb.signum() * disc.sqrt());
            if q != 0.0 {
                roots[0] = q / qa;
                roots[1] = qc / q;
            } else {
                // qb = 0 and disc = 0: double root at zero offset.
                roots[0] = 0.0;
            }
        }
        if roots[1] < roots[0] {
            roots.swap(0, 1);
        }

        let [lo, hi] = self.range;
        roots
            .into_iter()
            .filter(|t| t.is_finite() && *t > t_min)
            .filter_map(|t| {
                let point = ray.at(t);
                if point.y < lo - ENDPOINT_TOL || point.y > hi + ENDPOINT_TOL {
                    return None;
                }
                let y = point.y.clamp(lo, hi);
                let normal = self.normal_at(y);
                if d.dot(normal).abs() < GRAZING_TOL {
                    return None;
                }
                Some(Hit { t, point, normal })
            })
            .next()
    }
}

/// One smooth piece of a cavity boundary.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Arc {
    /// Straight piece from `p0` to `p1`; the interior is on the right.
    Segment { p0: Vec2, p1: Vec2 },
    Parabola(ParabolaArc),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub point: Vec2,
    /// Unit normal pointing into the cavity interior.
    pub normal: Vec2,
}

impl Arc {
    pub fn segment(p0: Vec2, p1: Vec2) -> Self {
        Arc::Segment { p0, p1 }
    }

    pub fn parabola(a: f64, b: f64, c: f64, y_lo: f64, y_hi: f64, facing: Facing) -> Self {
        Arc::Parabola(ParabolaArc {
            a,
            b,
            c,
            range: [y_lo, y_hi],
            facing,
        })
    }

    /// First point in chain order.
    pub fn start(&self) -> Vec2 {
        match self {
            Arc::Segment { p0, .. } => *p0,
            Arc::Parabola(p) => p.point_at(p.y_start()),
        }
    }

    /// Last point in chain order.
    pub fn end(&self) -> Vec2 {
        match self {
            Arc::Segment { p1, .. } => *p1,
            Arc::Parabola(p) => p.point_at(p.y_end()),
        }
    }

    /// `samples + 1` points along the arc in chain order.
    pub fn sample(&self, samples: usize) -> Vec<Vec2> {
        let samples = samples.max(1);
        match self {
            Arc::Segment { p0, p1 } => (0..=samples)
                .map(|i| {
                    let s = i as f64 / samples as f64;
                    *p0 + (*p1 - *p0) * s
                })
                .collect(),
            Arc::Parabola(p) => {
                let (y0, y1) = (p.y_start(), p.y_end());
                (0..=samples)
                    .map(|i| {
                        let s = i as f64 / samples as f64;
                        p.point_at(y0 + (y1 - y0) * s)
                    })
                    .collect()
            }
        }
    }

    pub fn min_y(&self) -> f64 {
        match self {
            Arc::Segment { p0, p1 } => p0.y.min(p1.y),
            Arc::Parabola(p) => p.range[0],
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Arc::Segment { p0, p1 } => p0.is_finite() && p1.is_finite(),
            Arc::Parabola(p) => {
                [p.a, p.b, p.c, p.range[0], p.range[1]].iter().all(|v| v.is_finite())
            }
        }
    }

    pub fn is_degenerate(&self) -> bool {
        match self {
            Arc::Segment { p0, p1 } => p0 == p1,
            Arc::Parabola(p) => p.range[0] >= p.range[1],
        }
    }

    /// Interior unit normal at the point of the arc closest in parameter to `at`.
    pub fn normal_near(&self, at: Vec2) -> Vec2 {
        match self {
            Arc::Segment { p0, p1 } => (*p1 - *p0).normalized().right_normal(),
            Arc::Parabola(p) => p.normal_at(at.y.clamp(p.range[0], p.range[1])),
        }
    }

    /// Nearest intersection with parameter strictly above `t_min`.
    pub fn intersect(&self, ray: &Ray, t_min: f64) -> Option<Hit> {
        match self {
            Arc::Segment { p0, p1 } => intersect_segment(*p0, *p1, ray, t_min),
            Arc::Parabola(p) => p.intersect(ray, t_min),
        }
    }

    /// Mirror image under `x -> -x`, keeping chain orientation consistent
    /// once the chain order is reversed.
    pub fn mirrored(&self) -> Self {
        let m = |v: Vec2| Vec2::new(-v.x, v.y);
        match self {
            Arc::Segment { p0, p1 } => Arc::Segment { p0: m(*p1), p1: m(*p0) },
            Arc::Parabola(p) => Arc::Parabola(ParabolaArc {
                a: -p.a,
                b: -p.b,
                c: -p.c,
                range: p.range,
                facing: match p.facing {
                    Facing::PositiveX => Facing::NegativeX,
                    Facing::NegativeX => Facing::PositiveX,
                },
            }),
        }
    }
}

/// Free-function form of [`Arc::intersect`].
pub fn intersect(ray: &Ray, arc: &Arc, t_min: f64) -> Option<Hit> {
    arc.intersect(ray, t_min)
}

fn intersect_segment(p0: Vec2, p1: Vec2, ray: &Ray, t_min: f64) -> Option<Hit> {
    let e = p1 - p0;
    let d = ray.direction;
    let denom = d.cross(e);
    if denom == 0.0 {
        return None;
    }
    let w = p0 - ray.origin;
    let t = w.cross(e) / denom;
    let s = w.cross(d) / denom;
    if !(t > t_min) || s < -ENDPOINT_TOL || s > 1.0 + ENDPOINT_TOL {
        return None;
    }
    let normal = e.normalized().right_normal();
    if d.dot(normal).abs() < GRAZING_TOL {
        return None;
    }
    Some(Hit {
        t,
        point: ray.at(t),
        normal,
    })
}
