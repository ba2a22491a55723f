//! Whole rough discs built from identical cavities.
//!
//! Each of the `n` cavities replaces a boundary arc of angle `2π/n` and sits
//! on its chord, so the convex hull is the inscribed regular `n`-gon. The
//! body's normalized resistance is the hull-to-disc perimeter ratio times the
//! length-weighted mean of the cavity resistances (convex parts count 1).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cavity::CavityShape;
use crate::geometry::Vec2;
use crate::svg::{fmt_num, SvgDoc};

/// Anything above this is impossible for a cavity resistance.
pub const RESISTANCE_SUPREMUM: f64 = 1.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BodyError {
    #[error("a body needs at least 3 cavities, got {0}")]
    TooFewCavities(usize),
    #[error("radius must be positive, got {0}")]
    BadRadius(f64),
    #[error("convex fraction must lie in [0, 1], got {0}")]
    BadConvexFraction(f64),
    #[error("cavity resistance must lie in (0, 1.5], got {0}")]
    BadResistance(f64),
    #[error("length fractions sum to {0}, not 1")]
    FractionSum(f64),
    #[error("length fraction {0} is negative")]
    NegativeFraction(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BodySpec {
    pub radius: f64,
    pub n_cavities: usize,
    pub cavity: CavityShape,
    /// Share `L₀/L` of the hull perimeter left convex (smooth).
    pub convex_fraction: f64,
}

impl BodySpec {
    pub fn new(radius: f64, n_cavities: usize, cavity: CavityShape) -> Result<Self, BodyError> {
        let spec = Self {
            radius,
            n_cavities,
            cavity,
            convex_fraction: 0.0,
        };
        spec.check()?;
        Ok(spec)
    }

    pub fn with_convex_fraction(mut self, fraction: f64) -> Result<Self, BodyError> {
        self.convex_fraction = fraction;
        self.check()?;
        Ok(self)
    }

    fn check(&self) -> Result<(), BodyError> {
        if self.n_cavities < 3 {
            return Err(BodyError::TooFewCavities(self.n_cavities));
        }
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(BodyError::BadRadius(self.radius));
        }
        if !(0.0..=1.0).contains(&self.convex_fraction) {
            return Err(BodyError::BadConvexFraction(self.convex_fraction));
        }
        Ok(())
    }

    /// Arc angle ε/r taken by one cavity.
    pub fn epsilon_over_r(&self) -> f64 {
        2.0 * PI / self.n_cavities as f64
    }

    /// Chord length `2r sin(ε/2r)` spanned by one cavity's opening.
    pub fn chord(&self) -> f64 {
        2.0 * self.radius * (PI / self.n_cavities as f64).sin()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BodyResistance {
    pub value: f64,
    pub perimeter_ratio: f64,
    pub cavity_value: f64,
    /// `R(Ω)·(1 − (ε/r)²/24)`, the small-ε form.
    pub approx_value: f64,
    pub n: usize,
}

/// Hull-to-disc perimeter ratio `sin(π/n)/(π/n)`.
pub fn perimeter_ratio(n: usize) -> Result<f64, BodyError> {
    if n < 3 {
        return Err(BodyError::TooFewCavities(n));
    }
    let u = PI / n as f64;
    Ok(u.sin() / u)
}

/// Second-order expansion `1 − (ε/r)²/24` of [`perimeter_ratio`].
pub fn perimeter_ratio_approx(n: usize) -> f64 {
    let eps = 2.0 * PI / n as f64;
    1.0 - eps * eps / 24.0
}

fn check_resistance(r: f64) -> Result<(), BodyError> {
    if r > 0.0 && r <= RESISTANCE_SUPREMUM {
        Ok(())
    } else {
        Err(BodyError::BadResistance(r))
    }
}

pub fn body_resistance(spec: &BodySpec, cavity_r: f64) -> Result<BodyResistance, BodyError> {
    spec.check()?;
    check_resistance(cavity_r)?;
    let ratio = perimeter_ratio(spec.n_cavities)?;
    let f0 = spec.convex_fraction;
    let value = body_resistance_mixed(&[(f0, 1.0), (1.0 - f0, cavity_r)], ratio)?;
    Ok(BodyResistance {
        value,
        perimeter_ratio: ratio,
        cavity_value: cavity_r,
        approx_value: cavity_r * perimeter_ratio_approx(spec.n_cavities),
        n: spec.n_cavities,
    })
}

/// `ratio · Σ fᵢ Rᵢ` for length fractions `fᵢ` summing to one.
pub fn body_resistance_mixed(parts: &[(f64, f64)], perimeter_ratio: f64) -> Result<f64, BodyError> {
    let mut sum = 0.0;
    let mut total = 0.0;
    for &(fraction, r) in parts {
        if fraction < 0.0 {
            return Err(BodyError::NegativeFraction(fraction));
        }
        total += fraction;
        if fraction > 0.0 {
            check_resistance(r)?;
        }
        sum += fraction * r;
    }
    if (total - 1.0).abs() > 1e-12 {
        return Err(BodyError::FractionSum(total));
    }
    Ok(perimeter_ratio * sum)
}

/// Closed outline of the body: every cavity mapped onto its chord.
pub fn body_outline(spec: &BodySpec, samples_per_arc: usize) -> Vec<Vec2> {
    let n = spec.n_cavities;
    let r = spec.radius;
    let chord = spec.chord();
    let local = spec.cavity.outline(samples_per_arc);
    let vertex = |k: usize| Vec2::from_angle(2.0 * PI * k as f64 / n as f64) * r;
    let mut out = Vec::with_capacity(n * local.len());
    for k in 0..n {
        let (a, b) = (vertex(k), vertex(k + 1));
        let mid = (a + b) * 0.5;
        let tangent = (b - a).normalized();
        // Counterclockwise traversal: the inward normal is the tangent turned left.
        let inward = Vec2::new(-tangent.y, tangent.x);
        let skip = usize::from(k > 0);
        out.extend(
            local
                .iter()
                .skip(skip)
                .map(|p| mid + (tangent * p.x + inward * p.y) * chord),
        );
    }
    out
}

/// SVG picture of the body inside its circumscribed circle.
pub fn render_body(spec: &BodySpec) -> String {
    const SIZE: f64 = 500.0;
    let scale = 0.45 * SIZE / spec.radius;
    let c = SIZE / 2.0;
    let to_px = |p: Vec2| Vec2::new(c + p.x * scale, c - p.y * scale);
    let mut doc = SvgDoc::new(SIZE, SIZE);
    doc.circle(Vec2::new(c, c), spec.radius * scale, "none", "#999999", 0.75, Some("4 3"));
    let pts: Vec<Vec2> = body_outline(spec, 48).into_iter().map(to_px).collect();
    doc.polygon(&pts, "#d8d8d8", "#000000", 1.0);
    doc.comment(&format!(
        "n={} radius={} cavity={}",
        spec.n_cavities,
        fmt_num(spec.radius),
        spec.cavity.name
    ));
    doc.finish()
}
