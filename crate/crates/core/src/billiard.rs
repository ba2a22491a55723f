//! Specular billiard inside a cavity and the exit-angle map φ⁺(x, φ).
//!
//! Angle convention: a particle enters through `(x, 0)` with velocity
//! `(-sin φ, cos φ)` and leaves through the opening with velocity
//! `(sin φ⁺, -cos φ⁺)`. Both angles are measured from the outward normal
//! `(0, -1)`, anticlockwise positive, so a perfect retroreflection has
//! `φ⁺ = φ` and a flat mirror gives `φ⁺ = -φ`.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cavity::CavityShape;
use crate::geometry::{reflect, Hit, Ray, Vec2};
use crate::parallel::{map_indexed, Parallelism};

pub const DEFAULT_MAX_REFLECTIONS: u32 = 1000;

/// Distance from a shared arc endpoint inside which a hit counts as a corner hit.
const CORNER_TOL: f64 = 1e-12;
/// Entry offset applied when a corner hit is ambiguous.
const CORNER_NUDGE: f64 = 1e-9;
const MAX_NUDGES: u32 = 4;
/// Exit abscissae up to this far outside the opening are clamped onto it.
const GATE_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntryState {
    pub x: f64,
    pub phi: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error("entry abscissa {0} is outside the open interval (-1/2, 1/2)")]
    EntryX(f64),
    #[error("entry angle {0} rad is outside the open interval (-π/2, π/2)")]
    EntryPhi(f64),
    #[error("max_reflections must be at least 1")]
    ZeroCap,
    #[error("trajectory exceeded {0} reflections")]
    Trapped(u32),
    #[error("ray escaped the cavity without crossing the opening (after {reflections} reflections, at {at:?})")]
    Geometry { reflections: u32, at: [f64; 2] },
}

impl EntryState {
    pub fn new(x: f64, phi: f64) -> Result<Self, TraceError> {
        if !(x > -0.5 && x < 0.5) {
            return Err(TraceError::EntryX(x));
        }
        if !(phi > -FRAC_PI_2 && phi < FRAC_PI_2) {
            return Err(TraceError::EntryPhi(phi));
        }
        Ok(Self { x, phi })
    }

    pub fn direction(&self) -> Vec2 {
        let (s, c) = self.phi.sin_cos();
        Vec2::new(-s, c)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceStatus {
    Exited,
    Trapped,
    GeometryError,
}

/// Summary of one billiard run; what the quadrature needs per cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Outcome {
    pub status: TraceStatus,
    pub reflections: u32,
    /// φ⁺; NaN unless exited.
    pub exit_phi: f64,
    /// x⁺; NaN unless exited.
    pub exit_x: f64,
    /// Entry was nudged off an ambiguous corner hit.
    pub perturbed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub entry: EntryState,
    /// Entry point, every reflection point, then the exit point if any.
    pub points: Vec<Vec2>,
    pub exit_phi: f64,
    pub exit_x: f64,
    pub reflections: u32,
    pub status: TraceStatus,
    pub perturbed: bool,
}

/// Trace one particle, recording its path.
pub fn trace(shape: &CavityShape, entry: EntryState, max_reflections: u32) -> Trajectory {
    let mut points = Vec::new();
    let out = run(shape, entry, max_reflections, &mut |p| points.push(p));
    Trajectory {
        entry,
        points,
        exit_phi: out.exit_phi,
        exit_x: out.exit_x,
        reflections: out.reflections,
        status: out.status,
        perturbed: out.perturbed,
    }
}

/// Trace without recording points.
pub fn trace_outcome(shape: &CavityShape, entry: EntryState, max_reflections: u32) -> Outcome {
    run(shape, entry, max_reflections, &mut |_| {})
}

/// φ⁺(x, φ) with trapped and broken trajectories reported as errors.
pub fn exit_angle(shape: &CavityShape, x: f64, phi: f64) -> Result<f64, TraceError> {
    let entry = EntryState::new(x, phi)?;
    let out = trace_outcome(shape, entry, DEFAULT_MAX_REFLECTIONS);
    match out.status {
        TraceStatus::Exited => Ok(out.exit_phi),
        TraceStatus::Trapped => Err(TraceError::Trapped(DEFAULT_MAX_REFLECTIONS)),
        TraceStatus::GeometryError => Err(TraceError::Geometry {
            reflections: out.reflections,
            at: [f64::NAN; 2],
        }),
    }
}

fn run(shape: &CavityShape, entry: EntryState, cap: u32, sink: &mut dyn FnMut(Vec2)) -> Outcome {
    let mut x = entry.x;
    let mut perturbed = false;
    let mut nudges = 0;
    loop {
        let mut path = Vec::new();
        match run_once(shape, x, entry.phi, cap, &mut path, nudges < MAX_NUDGES) {
            Some(mut out) => {
                out.perturbed = perturbed;
                path.into_iter().for_each(&mut *sink);
                return out;
            }
            None => {
                perturbed = true;
                nudges += 1;
                x = if x + CORNER_NUDGE < 0.5 { x + CORNER_NUDGE } else { x - CORNER_NUDGE };
            }
        }
    }
}

/// `None` means an ambiguous corner was hit and the caller should retry.
fn run_once(
    shape: &CavityShape,
    x: f64,
    phi: f64,
    cap: u32,
    path: &mut Vec<Vec2>,
    allow_retry: bool,
) -> Option<Outcome> {
    let arcs = &shape.arcs;
    let mut dir = EntryState { x, phi }.direction();
    let entry_point = Vec2::new(x, 0.0);
    path.push(entry_point);

    // The particle arrives from below the opening; start one unit back so a
    // wall lying on the opening line itself (the flat cavity) is hit at t = 1.
    let mut pos = entry_point - dir;
    let mut t_min = 0.5;
    let mut reflections = 0u32;

    let failed = |reflections| Outcome {
        status: TraceStatus::GeometryError,
        reflections,
        exit_phi: f64::NAN,
        exit_x: f64::NAN,
        perturbed: false,
    };

    loop {
        let ray = Ray::new(pos, dir);
        let mut best: Option<(usize, Hit)> = None;
        for (i, arc) in arcs.iter().enumerate() {
            if let Some(hit) = arc.intersect(&ray, t_min) {
                if best.map_or(true, |(_, b)| hit.t < b.t) {
                    best = Some((i, hit));
                }
            }
        }

        if dir.y < 0.0 {
            let t_gate = (-pos.y / dir.y).max(0.0);
            if best.map_or(true, |(_, b)| t_gate <= b.t) {
                let gx = pos.x + t_gate * dir.x;
                if gx.abs() <= 0.5 + GATE_SLACK {
                    let exit = Vec2::new(gx.clamp(-0.5, 0.5), 0.0);
                    path.push(exit);
                    return Some(Outcome {
                        status: TraceStatus::Exited,
                        reflections,
                        exit_phi: dir.x.atan2(-dir.y),
                        exit_x: exit.x,
                        perturbed: false,
                    });
                }
                if best.is_none() {
                    return Some(failed(reflections));
                }
            }
        }

        let Some((idx, hit)) = best else {
            return Some(failed(reflections));
        };

        let normal = match corner_normal(shape, idx, &hit, dir) {
            CornerCase::NotCorner => hit.normal,
            CornerCase::Resolved(n) => n,
            CornerCase::Ambiguous if allow_retry => return None,
            CornerCase::Ambiguous => hit.normal,
        };

        if reflections == cap {
            return Some(Outcome {
                status: TraceStatus::Trapped,
                reflections,
                exit_phi: f64::NAN,
                exit_x: f64::NAN,
                perturbed: false,
            });
        }
        reflections += 1;
        path.push(hit.point);
        pos = hit.point;
        dir = reflect(dir, normal);
        // Renormalize so rounding cannot accumulate over long bounce chains.
        dir = dir.normalized();
        t_min = 1e-10 * (1.0 + pos.norm());
    }
}

enum CornerCase {
    NotCorner,
    Resolved(Vec2),
    Ambiguous,
}

fn corner_normal(shape: &CavityShape, idx: usize, hit: &Hit, dir: Vec2) -> CornerCase {
    let arcs = &shape.arcs;
    let neighbour = if idx > 0 && hit.point.distance(arcs[idx].start()) <= CORNER_TOL {
        idx - 1
    } else if idx + 1 < arcs.len() && hit.point.distance(arcs[idx].end()) <= CORNER_TOL {
        idx + 1
    } else {
        return CornerCase::NotCorner;
    };
    let own = hit.normal;
    let other = arcs[neighbour].normal_near(hit.point);
    match (dir.dot(own) < 0.0, dir.dot(other) < 0.0) {
        (true, true) => CornerCase::Ambiguous,
        (true, false) => CornerCase::Resolved(own),
        (false, true) => CornerCase::Resolved(other),
        (false, false) => CornerCase::NotCorner,
    }
}

/// Reflection-count statistics over the open midpoint grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsTable {
    pub grid_nx: usize,
    pub grid_nphi: usize,
    pub min_reflections: Option<u32>,
    pub max_reflections: Option<u32>,
    /// Per reflection count: cells, largest |φ| seen, largest |φ − φ⁺| seen.
    pub bins: BTreeMap<u32, CountBin>,
    /// Largest |φ − φ⁺| over exited cells with at least 4 reflections.
    pub max_deviation_4plus: Option<f64>,
    pub trapped: u64,
    pub geometry_errors: u64,
    pub perturbed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountBin {
    pub cells: u64,
    pub max_abs_phi: f64,
    pub max_deviation: f64,
}

impl StatsTable {
    pub fn histogram(&self) -> BTreeMap<u32, u64> {
        self.bins.iter().map(|(k, b)| (*k, b.cells)).collect()
    }

    /// Largest |φ| among exited cells whose count differs from `count`.
    pub fn max_abs_phi_excluding(&self, count: u32) -> f64 {
        self.bins
            .iter()
            .filter(|(k, _)| **k != count)
            .map(|(_, b)| b.max_abs_phi)
            .fold(0.0, f64::max)
    }
}

#[derive(Default)]
struct RowStats {
    bins: BTreeMap<u32, CountBin>,
    trapped: u64,
    geometry_errors: u64,
    perturbed: u64,
}

/// Midpoint of cell `i` out of `n` on `[lo, hi]`.
pub fn midpoint(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
    lo + (hi - lo) * ((i as f64 + 0.5) / n as f64)
}

pub fn reflection_stats(
    shape: &CavityShape,
    grid_nx: usize,
    grid_nphi: usize,
    max_reflections: u32,
    par: Parallelism,
) -> StatsTable {
    let grid_nx = grid_nx.max(2);
    let grid_nphi = grid_nphi.max(2);
    let rows = map_indexed(grid_nphi, par, |j| {
        let phi = midpoint(-FRAC_PI_2, FRAC_PI_2, grid_nphi, j);
        let mut row = RowStats::default();
        for i in 0..grid_nx {
            let x = midpoint(-0.5, 0.5, grid_nx, i);
            let out = trace_outcome(shape, EntryState { x, phi }, max_reflections);
            row.perturbed += u64::from(out.perturbed);
            match out.status {
                TraceStatus::Trapped => row.trapped += 1,
                TraceStatus::GeometryError => row.geometry_errors += 1,
                TraceStatus::Exited => {
                    let bin = row.bins.entry(out.reflections).or_insert(CountBin {
                        cells: 0,
                        max_abs_phi: 0.0,
                        max_deviation: 0.0,
                    });
                    bin.cells += 1;
                    bin.max_abs_phi = bin.max_abs_phi.max(phi.abs());
                    bin.max_deviation = bin.max_deviation.max((phi - out.exit_phi).abs());
                }
            }
        }
        row
    });

    let mut table = StatsTable {
        grid_nx,
        grid_nphi,
        min_reflections: None,
        max_reflections: None,
        bins: BTreeMap::new(),
        max_deviation_4plus: None,
        trapped: 0,
        geometry_errors: 0,
        perturbed: 0,
    };
    for row in rows {
        table.trapped += row.trapped;
        table.geometry_errors += row.geometry_errors;
        table.perturbed += row.perturbed;
        for (k, b) in row.bins {
            let e = table.bins.entry(k).or_insert(CountBin {
                cells: 0,
                max_abs_phi: 0.0,
                max_deviation: 0.0,
            });
            e.cells += b.cells;
            e.max_abs_phi = e.max_abs_phi.max(b.max_abs_phi);
            e.max_deviation = e.max_deviation.max(b.max_deviation);
        }
    }
    table.min_reflections = table.bins.keys().next().copied();
    table.max_reflections = table.bins.keys().next_back().copied();
    table.max_deviation_4plus = table
        .bins
        .range(4..)
        .map(|(_, b)| b.max_deviation)
        .reduce(f64::max);
    table
}
