//! Newtonian resistance of rough rotating two-dimensional bodies.
//!
//! A body is a disc whose boundary is covered by small identical cavities.
//! Its resistance, normalized by that of the smooth disc, is driven by the
//! exit-angle map of a specular billiard inside one normalized cavity.
//! This crate traces that billiard exactly, integrates the resistance
//! functional on deterministic grids, composes whole bodies, and searches
//! cavity families for the shape of maximal resistance.

pub mod billiard;
pub mod body;
pub mod cavity;
pub mod geometry;
pub mod optimize;
pub mod parallel;
pub mod resistance;
pub mod svg;

pub use billiard::{exit_angle, reflection_stats, trace, EntryState, StatsTable, Trajectory, TraceStatus};
pub use cavity::{
    make_double_parabola, make_flat, make_graph_cavity, make_rectangle, make_triangle, validate,
    CavityShape,
};
pub use geometry::{reflect, Arc, Ray, Vec2};
pub use parallel::Parallelism;
pub use resistance::{cavity_resistance, cavity_resistance_converged, QuadratureSpec, ResistanceResult};
