//! Normalized cavity resistance
//!
//! ```text
//! R = 3/8 ∫_{-1/2}^{1/2} ∫_{-π/2}^{π/2} (1 + cos(φ⁺(x, φ) − φ)) cos φ dφ dx
//! ```
//!
//! evaluated with the composite open midpoint rule. The open rule never
//! samples the opening corners `x = ±1/2` or grazing entries `φ = ±π/2`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::billiard::{midpoint, trace_outcome, EntryState, TraceStatus, DEFAULT_MAX_REFLECTIONS};
use crate::cavity::CavityShape;
use crate::parallel::{map_indexed, pairwise_sum, Parallelism};

/// Largest grid side tried by [`cavity_resistance_converged`].
pub const MAX_CONVERGENCE_N: usize = 8192;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    #[default]
    OpenMidpoint,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSpec {
    pub n_x: usize,
    pub n_phi: usize,
    pub rule: Rule,
    /// Largest tolerated share of trapped cells; 0 rejects any.
    pub max_trapped_fraction: f64,
    pub max_reflections: u32,
    pub parallelism: Parallelism,
}

impl QuadratureSpec {
    pub fn square(n: usize) -> Self {
        Self {
            n_x: n,
            n_phi: n,
            rule: Rule::OpenMidpoint,
            max_trapped_fraction: 0.0,
            max_reflections: DEFAULT_MAX_REFLECTIONS,
            parallelism: Parallelism::Auto,
        }
    }

    pub fn with_parallelism(mut self, parallelism: Parallelism) -> Self {
        self.parallelism = parallelism;
        self
    }

    pub fn with_max_reflections(mut self, cap: u32) -> Self {
        self.max_reflections = cap;
        self
    }

    pub fn with_max_trapped_fraction(mut self, fraction: f64) -> Self {
        self.max_trapped_fraction = fraction;
        self
    }

    fn resized(mut self, n: usize) -> Self {
        self.n_x = n;
        self.n_phi = n;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResistanceResult {
    pub value: f64,
    pub n_x: usize,
    pub n_phi: usize,
    pub trapped: u64,
    pub perturbed: u64,
    pub convergence_gap: Option<f64>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResistanceError {
    #[error("grid sizes must be at least 2 (got {n_x} x {n_phi})")]
    GridTooSmall { n_x: usize, n_phi: usize },
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("{trapped} of {cells} trajectories trapped, above the allowed fraction {allowed}")]
    TooManyTrapped { trapped: u64, cells: u64, allowed: f64 },
    #[error("trajectory from x = {x}, phi = {phi} escaped the cavity without crossing the opening")]
    Geometry { x: f64, phi: f64 },
    #[error("no convergence below {tol} by n = {n} (last gap {gap})")]
    NotConverged { tol: f64, n: usize, gap: f64 },
}

/// `(1 + cos(φ⁺ − φ)) cos φ`; always within `[0, 2 cos φ]`.
pub fn integrand(phi: f64, exit_phi: f64) -> f64 {
    (1.0 + (exit_phi - phi).cos()) * phi.cos()
}

struct Row {
    sum: f64,
    /// Σ cos φ over exited cells.
    flux: f64,
    trapped: u64,
    perturbed: u64,
    failure: Option<(f64, f64)>,
}

/// Open-midpoint estimate of the cavity resistance on an `n_x × n_phi` grid.
///
/// Rows of constant φ are evaluated independently (in parallel when allowed)
/// and combined with a fixed pairwise tree, so the value is bitwise identical
/// for every thread count.
pub fn cavity_resistance(
    shape: &CavityShape,
    spec: &QuadratureSpec,
) -> Result<ResistanceResult, ResistanceError> {
    let (n_x, n_phi) = (spec.n_x, spec.n_phi);
    if n_x < 2 || n_phi < 2 {
        return Err(ResistanceError::GridTooSmall { n_x, n_phi });
    }
    let cap = spec.max_reflections.max(1);
    let rows = map_indexed(n_phi, spec.parallelism, |j| {
        let phi = midpoint(-FRAC_PI_2, FRAC_PI_2, n_phi, j);
        let mut cells = Vec::with_capacity(n_x);
        let mut row = Row { sum: 0.0, flux: 0.0, trapped: 0, perturbed: 0, failure: None };
        for i in 0..n_x {
            let x = midpoint(-0.5, 0.5, n_x, i);
            let out = trace_outcome(shape, EntryState { x, phi }, cap);
            row.perturbed += u64::from(out.perturbed);
            match out.status {
                TraceStatus::Exited => {
                    let f = integrand(phi, out.exit_phi);
                    debug_assert!(f >= 0.0 && f <= 2.0 * phi.cos() + 1e-15);
                    cells.push(f);
                }
                TraceStatus::Trapped => row.trapped += 1,
                TraceStatus::GeometryError => {
                    row.failure.get_or_insert((x, phi));
                }
            }
        }
        row.sum = pairwise_sum(&cells);
        row.flux = phi.cos() * cells.len() as f64;
        row
    });

    if let Some((x, phi)) = rows.iter().find_map(|r| r.failure) {
        return Err(ResistanceError::Geometry { x, phi });
    }
    let cells = (n_x * n_phi) as u64;
    let trapped: u64 = rows.iter().map(|r| r.trapped).sum();
    let perturbed: u64 = rows.iter().map(|r| r.perturbed).sum();
    if trapped as f64 > spec.max_trapped_fraction * cells as f64 || trapped == cells {
        return Err(ResistanceError::TooManyTrapped {
            trapped,
            cells,
            allowed: spec.max_trapped_fraction,
        });
    }
    let sums: Vec<f64> = rows.iter().map(|r| r.sum).collect();
    let dx = 1.0 / n_x as f64;
    let dphi = PI / n_phi as f64;
    // Trapped cells are dropped and the remaining incoming flux (cos φ dφ dx)
    // is scaled back to the full grid's.
    let renorm = if trapped == 0 {
        1.0
    } else {
        let flux: Vec<f64> = rows.iter().map(|r| r.flux).collect();
        let full: Vec<f64> = (0..n_phi)
            .map(|j| midpoint(-FRAC_PI_2, FRAC_PI_2, n_phi, j).cos() * n_x as f64)
            .collect();
        pairwise_sum(&full) / pairwise_sum(&flux)
    };
    let value = 0.375 * dx * dphi * pairwise_sum(&sums) * renorm;
    Ok(ResistanceResult {
        value,
        n_x,
        n_phi,
        trapped,
        perturbed,
        convergence_gap: None,
    })
}

/// Double the grid from `n_start` until successive values differ by less
/// than `tol`; returns the finer of the last pair.
pub fn cavity_resistance_converged(
    shape: &CavityShape,
    tol: f64,
    n_start: usize,
    base: &QuadratureSpec,
) -> Result<ResistanceResult, ResistanceError> {
    if !(tol > 0.0) {
        return Err(ResistanceError::BadTolerance(tol));
    }
    let mut n = n_start.max(2);
    let mut prev = cavity_resistance(shape, &base.resized(n))?;
    let mut gap = f64::INFINITY;
    while 2 * n <= MAX_CONVERGENCE_N {
        n *= 2;
        let mut next = cavity_resistance(shape, &base.resized(n))?;
        gap = (next.value - prev.value).abs();
        if gap < tol {
            next.convergence_gap = Some(gap);
            return Ok(next);
        }
        prev = next;
    }
    Err(ResistanceError::NotConverged { tol, n, gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cavity::{make_double_parabola, make_flat, make_triangle};
    use approx::assert_abs_diff_eq;

    /// Independent oracle: 1-D Simpson rule on the flat-mirror integrand.
    fn flat_closed_form() -> f64 {
        let n = 20_000;
        let h = PI / n as f64;
        let f = |p: f64| (1.0 + (2.0 * p).cos()) * p.cos();
        let mut s = f(-FRAC_PI_2) + f(FRAC_PI_2);
        for k in 1..n {
            let p = -FRAC_PI_2 + k as f64 * h;
            s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(p);
        }
        0.375 * s * h / 3.0
    }

    #[test]
    fn flat_oracle_is_one() {
        assert_abs_diff_eq!(flat_closed_form(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn flat_small_grid() {
        let r = cavity_resistance(&make_flat(), &QuadratureSpec::square(500)).unwrap();
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-5);
        assert_eq!(r.trapped, 0);
    }

    #[test]
    fn rejects_tiny_grid() {
        let spec = QuadratureSpec { n_x: 1, ..QuadratureSpec::square(10) };
        assert!(matches!(
            cavity_resistance(&make_flat(), &spec),
            Err(ResistanceError::GridTooSmall { .. })
        ));
    }

    #[test]
    fn converged_flat() {
        let r = cavity_resistance_converged(&make_flat(), 1e-6, 64, &QuadratureSpec::square(2)).unwrap();
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-6);
        assert!(r.convergence_gap.unwrap() < 1e-6);
        assert!(r.n_x <= 2048);
    }

    #[test]
    fn bad_tolerance() {
        assert_eq!(
            cavity_resistance_converged(&make_flat(), 0.0, 64, &QuadratureSpec::square(2)),
            Err(ResistanceError::BadTolerance(0.0))
        );
    }

    #[test]
    fn trapped_cells_are_rejected_by_default() {
        let deep = crate::cavity::make_rectangle(50.0).unwrap();
        let spec = QuadratureSpec::square(40).with_max_reflections(10);
        assert!(matches!(
            cavity_resistance(&deep, &spec),
            Err(ResistanceError::TooManyTrapped { .. })
        ));
        let loose = spec.with_max_trapped_fraction(1.0 - 1e-9);
        let r = cavity_resistance(&deep, &loose).unwrap();
        assert!(r.trapped > 0 && r.value <= 1.5, "{r:?}");
    }

    #[test]
    fn bounded_values() {
        for shape in [make_triangle(), make_double_parabola(1.2, 0.1).unwrap()] {
            let r = cavity_resistance(&shape, &QuadratureSpec::square(64)).unwrap();
            assert!(r.value > 0.0 && r.value <= 1.5 + 1e-9);
        }
    }
}
