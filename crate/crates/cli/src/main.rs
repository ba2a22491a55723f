//! Command-line front end for cavity resistance, billiard traces, sweeps,
//! shape optimization and body composition.
//!
//! Exit codes: 0 success, 2 usage or validation error, 3 computation failure.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "newton-cavity", version, about = "Newtonian resistance of rough rotating 2D bodies")]
pub struct Cli {
    /// Worker threads for grid evaluation (0 = all cores). Never changes results.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    /// Write the main output (JSON, CSV or SVG) to this file.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Cavity resistance by open-midpoint quadrature.
    Resistance {
        #[command(flatten)]
        shape: ShapeArgs,
        #[command(flatten)]
        quad: QuadArgs,
    },
    /// Trace one particle and report its exit angle.
    Trace {
        #[command(flatten)]
        shape: ShapeArgs,
        /// Entry abscissa in (-0.5, 0.5).
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        /// Entry angle in degrees, (-90, 90).
        #[arg(long, allow_hyphen_values = true)]
        phi_deg: f64,
        #[arg(long, default_value_t = 1000)]
        max_reflections: u32,
        /// Also draw the trajectory over the cavity.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Resistance of the double-parabola family on a (h, beta) grid, as CSV.
    Sweep {
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_hyphen_values = true)]
        h_range: Vec<f64>,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_hyphen_values = true, conflicts_with = "beta")]
        beta_range: Option<Vec<f64>>,
        /// Fixed beta for a one-dimensional R(h) sweep.
        #[arg(long, allow_hyphen_values = true)]
        beta: Option<f64>,
        /// Points per axis (one value, or one per axis).
        #[arg(long, num_args = 1..=2, default_values_t = [21])]
        resolution: Vec<usize>,
        #[command(flatten)]
        quad: QuadArgs,
    },
    /// Maximize resistance over (h, beta) for the double-parabola family.
    Optimize {
        #[arg(long, value_enum, default_value_t = Method::NelderMead)]
        method: Method,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_hyphen_values = true, default_values_t = [0.5, 3.0])]
        h_range: Vec<f64>,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_hyphen_values = true, default_values_t = [-1.0, 1.0])]
        beta_range: Vec<f64>,
        #[arg(long, num_args = 2, value_names = ["H", "BETA"], allow_hyphen_values = true, default_values_t = [1.0, 0.5])]
        start: Vec<f64>,
        /// Grid side used during the search.
        #[arg(long, default_value_t = 500)]
        n: usize,
        /// Grid side for re-evaluating the final point.
        #[arg(long, default_value_t = 2000)]
        final_n: usize,
        #[arg(long, default_value_t = 1e-4)]
        tol_x: f64,
        #[arg(long, default_value_t = 400)]
        max_evals: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 30)]
        population: usize,
        #[arg(long, default_value_t = 60)]
        generations: usize,
        /// Share of trapped trajectories tolerated while searching.
        #[arg(long, default_value_t = 1e-3)]
        max_trapped_fraction: f64,
    },
    /// Resistance of a disc covered by n identical cavities.
    Body {
        #[command(flatten)]
        shape: ShapeArgs,
        /// Number of cavities around the disc.
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 0.0)]
        convex_fraction: f64,
        /// Use this cavity resistance instead of computing it.
        #[arg(long)]
        cavity_r: Option<f64>,
        /// Quadrature grid side for the cavity resistance.
        #[arg(long, default_value_t = 2000)]
        grid: usize,
        /// Also render the body.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Reflection-count statistics over the midpoint grid.
    Stats {
        #[command(flatten)]
        shape: ShapeArgs,
        #[arg(long, default_value_t = 200)]
        grid: usize,
        #[arg(long, default_value_t = 1000)]
        max_reflections: u32,
    },
    /// SVG of a body (or of the lone cavity with --n 0).
    Render {
        #[command(flatten)]
        shape: ShapeArgs,
        #[arg(long, default_value_t = 42)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    NelderMead,
    PatternSearch,
    Genetic,
    /// Genetic search refined by Nelder–Mead.
    Hybrid,
}

#[derive(Args, Debug, Clone)]
pub struct ShapeArgs {
    /// flat | triangle | rectangle | double-parabola | file:PATH.json
    #[arg(long, default_value = "double-parabola")]
    pub shape: String,
    #[arg(long, default_value_t = std::f64::consts::SQRT_2, allow_hyphen_values = true)]
    pub h: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub beta: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub depth: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct QuadArgs {
    /// Grid side (n_x = n_phi).
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Refine by doubling from --n-start until successive values differ by less than this.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value_t = 250)]
    pub n_start: usize,
    #[arg(long, default_value_t = 0.0)]
    pub max_trapped_fraction: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_reflections: u32,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
