use std::fs;
use std::path::Path;

use newton_cavity::billiard::{trace, EntryState, TraceError, TraceStatus};
use newton_cavity::body::{body_resistance, render_body, BodySpec};
use newton_cavity::cavity::{
    make_double_parabola, make_flat, make_rectangle, make_triangle, validate, CavityShape,
};
use newton_cavity::optimize::{
    genetic_search, genetic_then_nelder_mead, nelder_mead, pattern_search, sweep_grid,
    CachedObjective, DoubleParabolaObjective, Objective, OptimizeOptions, ParamDomain,
};
use newton_cavity::resistance::{
    cavity_resistance, cavity_resistance_converged, QuadratureSpec, ResistanceError,
    ResistanceResult,
};
use newton_cavity::svg::{render_shape, render_trajectory};
use newton_cavity::Parallelism;
use serde::Serialize;
use serde_json::{json, Value};

use crate::{Cli, Command, Method, QuadArgs, ShapeArgs};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Compute(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Compute(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Compute(m) => f.write_str(m),
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn compute(e: impl std::fmt::Display) -> CliError {
    CliError::Compute(e.to_string())
}

impl From<ResistanceError> for CliError {
    fn from(e: ResistanceError) -> Self {
        match e {
            ResistanceError::GridTooSmall { .. } | ResistanceError::BadTolerance(_) => usage(e),
            _ => compute(e),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

pub fn run(cli: &Cli) -> Result<String> {
    let par = Parallelism::from_threads(Some(cli.threads));
    let out = cli.out.as_deref();
    let report = match &cli.command {
        Command::Resistance { shape, quad } => {
            let shape = build_shape(shape)?;
            let result = resistance(&shape, quad, par)?;
            json!({ "shape": shape.name, "parameters": params(&shape), "result": result })
        }
        Command::Trace { shape, x, phi_deg, max_reflections, svg } => {
            let shape = build_shape(shape)?;
            let entry = EntryState::new(*x, phi_deg.to_radians()).map_err(usage)?;
            if *max_reflections == 0 {
                return Err(usage(TraceError::ZeroCap));
            }
            let traj = trace(&shape, entry, *max_reflections);
            if let Some(path) = svg {
                write(path, &render_trajectory(&shape, &traj))?;
            }
            let report = json!({
                "shape": shape.name,
                "parameters": params(&shape),
                "trajectory": traj,
                "phi_deg": phi_deg,
                "exit_phi_deg": traj.exit_phi.to_degrees(),
            });
            match traj.status {
                TraceStatus::Exited => report,
                TraceStatus::Trapped => return Err(compute(format!("trapped after {} reflections", traj.reflections))),
                TraceStatus::GeometryError => return Err(compute("ray escaped the cavity: invalid shape")),
            }
        }
        Command::Sweep { h_range, beta_range, beta, resolution, quad } => {
            let spec = quad_spec(quad, par)?;
            let objective = DoubleParabolaObjective::new(spec.with_parallelism(Parallelism::Serial));
            let (domain, res, fixed_beta) = match (beta_range, beta) {
                (Some(b), _) => {
                    let d = ParamDomain::new(&["h", "beta"], &[h_range[0], b[0]], &[h_range[1], b[1]]).map_err(usage)?;
                    let r = vec![resolution[0], *resolution.get(1).unwrap_or(&resolution[0])];
                    (d, r, None)
                }
                (None, b) => {
                    let d = ParamDomain::new(&["h"], &[h_range[0]], &[h_range[1]]).map_err(usage)?;
                    (d, vec![resolution[0]], Some(b.unwrap_or(0.0)))
                }
            };
            let table = match fixed_beta {
                Some(b) => {
                    let f = |x: &[f64]| objective.evaluate(&[x[0], b]);
                    let mut t = sweep_grid(&f, &domain, &res, par).map_err(usage)?;
                    t.names.push("beta".into());
                    t.rows.iter_mut().for_each(|(p, _)| p.push(b));
                    t
                }
                None => sweep_grid(&objective, &domain, &res, par).map_err(usage)?,
            };
            let csv = table.to_csv();
            match out {
                Some(path) => write(path, &csv)?,
                None => print!("{csv}"),
            }
            let best = table.argmax().cloned();
            return Ok(serde_json::to_string_pretty(&json!({
                "rows": table.rows.len(),
                "columns": table.names.iter().chain(std::iter::once(&table.value_name)).collect::<Vec<_>>(),
                "argmax": best.map(|(p, v)| json!({ "point": p, "R": v })),
            }))
            .expect("json"));
        }
        Command::Optimize {
            method,
            h_range,
            beta_range,
            start,
            n,
            final_n,
            tol_x,
            max_evals,
            seed,
            population,
            generations,
            max_trapped_fraction,
        } => {
            let domain = ParamDomain::new(&["h", "beta"], &[h_range[0], beta_range[0]], &[h_range[1], beta_range[1]])
                .map_err(usage)?;
            let coarse = QuadratureSpec::square(*n)
                .with_max_trapped_fraction(*max_trapped_fraction)
                .with_parallelism(par);
            let objective = CachedObjective::new(DoubleParabolaObjective::new(coarse));
            let options = OptimizeOptions {
                tol_x: *tol_x,
                max_evaluations: *max_evals,
                seed: *seed,
                population: *population,
                generations: *generations,
                parallelism: Parallelism::Serial,
                ..OptimizeOptions::default()
            };
            let result = match method {
                Method::NelderMead => nelder_mead(&objective, &domain, start, &options),
                Method::PatternSearch => pattern_search(&objective, &domain, start, &options),
                Method::Genetic => genetic_search(&objective, &domain, &options),
                Method::Hybrid => genetic_then_nelder_mead(&objective, &domain, &options),
            }
            .map_err(usage)?;
            if !result.best_value.is_finite() {
                return Err(compute("no feasible point found"));
            }
            let (h, b) = (result.best_point[0], result.best_point[1]);
            let shape = make_double_parabola(h, b).map_err(compute)?;
            let fine = QuadratureSpec::square(*final_n)
                .with_max_trapped_fraction(*max_trapped_fraction)
                .with_parallelism(par);
            let refined = cavity_resistance(&shape, &fine)?;
            if let Some(path) = out {
                write(path, &pretty(&json!({ "result": result, "refined": refined }))?)?;
            }
            return Ok(pretty(&json!({
                "method": result.method,
                "best_point": result.best_point,
                "best_value": result.best_value,
                "refined_value": refined.value,
                "refined_n": final_n,
                "evaluations": result.evaluations,
                "budget_exhausted": result.budget_exhausted,
                "seed": result.seed,
            }))?);
        }
        Command::Body { shape, n, radius, convex_fraction, cavity_r, grid, svg } => {
            let shape = build_shape(shape)?;
            let spec = BodySpec::new(*radius, *n, shape)
                .and_then(|s| s.with_convex_fraction(*convex_fraction))
                .map_err(usage)?;
            let r = match cavity_r {
                Some(r) => *r,
                None => cavity_resistance(&spec.cavity, &QuadratureSpec::square(*grid).with_parallelism(par))?.value,
            };
            let body = body_resistance(&spec, r).map_err(usage)?;
            if let Some(path) = svg {
                write(path, &render_body(&spec))?;
            }
            json!({
                "value": body.value,
                "perimeter_ratio": body.perimeter_ratio,
                "cavity_value": body.cavity_value,
                "approx_value": body.approx_value,
                "n": body.n,
                "shape": spec.cavity.name,
                "parameters": params(&spec.cavity),
            })
        }
        Command::Stats { shape, grid, max_reflections } => {
            let shape = build_shape(shape)?;
            if *grid < 2 {
                return Err(usage("grid must be at least 2"));
            }
            let stats = newton_cavity::reflection_stats(&shape, *grid, *grid, (*max_reflections).max(1), par);
            json!({ "shape": shape.name, "parameters": params(&shape), "stats": stats })
        }
        Command::Render { shape, n, radius } => {
            let shape = build_shape(shape)?;
            let svg = if *n == 0 {
                render_shape(&shape)
            } else {
                render_body(&BodySpec::new(*radius, *n, shape).map_err(usage)?)
            };
            match out {
                Some(path) => write(path, &svg)?,
                None => print!("{svg}"),
            }
            return Ok(pretty(&json!({ "written": out.map(|p| p.display().to_string()), "bytes": svg.len() }))?);
        }
    };
    let text = pretty(&report)?;
    if let Some(path) = out {
        write(path, &text)?;
    }
    Ok(text)
}

fn pretty<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(compute)
}

fn write(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content).map_err(|e| compute(format!("cannot write {}: {e}", path.display())))
}

fn params(shape: &CavityShape) -> Value {
    shape.parameters.iter().map(|(k, v)| (k.clone(), json!(v))).collect::<serde_json::Map<_, _>>().into()
}

fn quad_spec(q: &QuadArgs, par: Parallelism) -> Result<QuadratureSpec> {
    if q.n < 2 {
        return Err(usage("--n must be at least 2"));
    }
    if !(0.0..=1.0).contains(&q.max_trapped_fraction) {
        return Err(usage("--max-trapped-fraction must lie in [0, 1]"));
    }
    Ok(QuadratureSpec::square(q.n)
        .with_max_trapped_fraction(q.max_trapped_fraction)
        .with_max_reflections(q.max_reflections.max(1))
        .with_parallelism(par))
}

fn resistance(shape: &CavityShape, q: &QuadArgs, par: Parallelism) -> Result<ResistanceResult> {
    let spec = quad_spec(q, par)?;
    Ok(match q.tol {
        Some(tol) => cavity_resistance_converged(shape, tol, q.n_start, &spec)?,
        None => cavity_resistance(shape, &spec)?,
    })
}

pub fn build_shape(args: &ShapeArgs) -> Result<CavityShape> {
    if let Some(path) = args.shape.strip_prefix("file:") {
        let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {path}: {e}")))?;
        let shape: CavityShape = serde_json::from_str(&text).map_err(|e| usage(format!("bad shape file {path}: {e}")))?;
        let violations = validate(&shape);
        if !violations.is_empty() {
            return Err(usage(format!("invalid shape in {path}: {violations:?}")));
        }
        return Ok(shape);
    }
    match args.shape.as_str() {
        "flat" => Ok(make_flat()),
        "triangle" => Ok(make_triangle()),
        "rectangle" => {
            let depth = args.depth.ok_or_else(|| usage("--shape rectangle needs --depth"))?;
            make_rectangle(depth).map_err(usage)
        }
        "double-parabola" => make_double_parabola(args.h, args.beta).map_err(usage),
        other => Err(usage(format!("unknown shape `{other}`"))),
    }
}
