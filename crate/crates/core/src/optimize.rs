//! Derivative-free maximization over box-bounded shape parameters.
//!
//! Every method maximizes. Points outside the box, and points where the
//! objective is undefined (for example a pinched cavity), score
//! `f64::NEG_INFINITY` and can never become the best point.

use std::collections::HashMap;
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cavity::make_double_parabola;
use crate::parallel::{map_indexed, Parallelism};
use crate::resistance::{cavity_resistance, QuadratureSpec};

pub const INFEASIBLE: f64 = f64::NEG_INFINITY;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizeError {
    #[error("domain needs matching, non-empty names and bounds")]
    DomainShape,
    #[error("lower bound must be below upper bound on axis {0}")]
    EmptyAxis(usize),
    #[error("start point has {got} coordinates, domain has {expected}")]
    StartDimension { got: usize, expected: usize },
    #[error("start point lies outside the domain")]
    StartOutside,
    #[error("population must be at least 4, got {0}")]
    PopulationTooSmall(usize),
    #[error("sweep resolution must be at least 2 on every axis")]
    Resolution,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamDomain {
    pub names: Vec<String>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ParamDomain {
    pub fn new(names: &[&str], lower: &[f64], upper: &[f64]) -> Result<Self, OptimizeError> {
        if names.is_empty() || names.len() != lower.len() || lower.len() != upper.len() {
            return Err(OptimizeError::DomainShape);
        }
        if let Some(i) = (0..lower.len()).find(|&i| !(lower[i] < upper[i])) {
            return Err(OptimizeError::EmptyAxis(i));
        }
        Ok(Self {
            names: names.iter().map(|s| s.to_string()).collect(),
            lower: lower.to_vec(),
            upper: upper.to_vec(),
        })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (i, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lower[i], self.upper[i]);
        }
    }

    fn check_start(&self, start: &[f64]) -> Result<(), OptimizeError> {
        if start.len() != self.dim() {
            return Err(OptimizeError::StartDimension {
                got: start.len(),
                expected: self.dim(),
            });
        }
        if !self.contains(start) {
            return Err(OptimizeError::StartOutside);
        }
        Ok(())
    }
}

/// A function to maximize. `NEG_INFINITY` marks an infeasible point.
pub trait Objective: Sync {
    fn evaluate(&self, x: &[f64]) -> f64;
}

impl<F> Objective for F
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn evaluate(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

/// Memoizes an objective on parameters quantized to a 1e-12 grid.
pub struct CachedObjective<O> {
    inner: O,
    cache: Mutex<HashMap<Vec<i64>, f64>>,
}

impl<O: Objective> CachedObjective<O> {
    pub fn new(inner: O) -> Self {
        Self {
            inner,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn cached_points(&self) -> usize {
        self.cache.lock().map(|c| c.len()).unwrap_or(0)
    }

    fn key(x: &[f64]) -> Vec<i64> {
        x.iter().map(|v| (v * 1e12).round() as i64).collect()
    }
}

impl<O: Objective> Objective for CachedObjective<O> {
    fn evaluate(&self, x: &[f64]) -> f64 {
        let key = Self::key(x);
        if let Some(v) = self.cache.lock().ok().and_then(|c| c.get(&key).copied()) {
            return v;
        }
        let v = self.inner.evaluate(x);
        if let Ok(mut c) = self.cache.lock() {
            c.insert(key, v);
        }
        v
    }
}

/// Resistance of the quadratic double-parabola family at `[h, beta]`.
pub struct DoubleParabolaObjective {
    pub quadrature: QuadratureSpec,
}

impl DoubleParabolaObjective {
    pub fn new(quadrature: QuadratureSpec) -> Self {
        Self { quadrature }
    }
}

impl Objective for DoubleParabolaObjective {
    fn evaluate(&self, x: &[f64]) -> f64 {
        let (h, beta) = (x[0], x.get(1).copied().unwrap_or(0.0));
        make_double_parabola(h, beta)
            .ok()
            .and_then(|shape| cavity_resistance(&shape, &self.quadrature).ok())
            .map_or(INFEASIBLE, |r| r.value)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizeOptions {
    pub tol_x: f64,
    pub tol_f: f64,
    pub max_evaluations: usize,
    /// Initial simplex edge / poll step as a fraction of each axis width.
    pub initial_step: f64,
    pub population: usize,
    pub generations: usize,
    pub seed: u64,
    pub tournament: usize,
    pub blend_alpha: f64,
    pub mutation_rate: f64,
    /// Mutation standard deviation as a fraction of each axis width.
    pub mutation_scale: f64,
    pub parallelism: Parallelism,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            tol_x: 1e-6,
            tol_f: 1e-12,
            max_evaluations: 500,
            initial_step: 0.1,
            population: 30,
            generations: 60,
            seed: 0,
            tournament: 3,
            blend_alpha: 0.5,
            mutation_rate: 0.25,
            mutation_scale: 0.1,
            parallelism: Parallelism::Auto,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub best_point: Vec<f64>,
    pub best_value: f64,
    pub evaluations: usize,
    pub history: Vec<(Vec<f64>, f64)>,
    pub method: String,
    pub seed: u64,
    /// Stopped by the evaluation budget rather than a tolerance.
    pub budget_exhausted: bool,
}

impl OptimizationResult {
    /// Running maximum over `history`.
    pub fn best_so_far(&self) -> Vec<f64> {
        self.history
            .iter()
            .scan(f64::NEG_INFINITY, |best, (_, v)| {
                *best = best.max(*v);
                Some(*best)
            })
            .collect()
    }
}

/// Records every in-box evaluation and tracks the incumbent.
struct Evaluator<'a, O: Objective + ?Sized> {
    objective: &'a O,
    domain: &'a ParamDomain,
    parallelism: Parallelism,
    history: Vec<(Vec<f64>, f64)>,
    best: Option<(Vec<f64>, f64)>,
    budget: usize,
}

impl<'a, O: Objective + ?Sized> Evaluator<'a, O> {
    fn new(objective: &'a O, domain: &'a ParamDomain, options: &OptimizeOptions) -> Self {
        Self {
            objective,
            domain,
            parallelism: options.parallelism,
            history: Vec::new(),
            best: None,
            budget: options.max_evaluations,
        }
    }

    fn exhausted(&self) -> bool {
        self.history.len() >= self.budget
    }

    fn record(&mut self, x: Vec<f64>, v: f64) {
        if self.best.as_ref().map_or(true, |(_, b)| v > *b) {
            self.best = Some((x.clone(), v));
        }
        self.history.push((x, v));
    }

    fn eval(&mut self, x: &[f64]) -> f64 {
        self.eval_batch(&[x.to_vec()])[0]
    }

    /// Evaluates in parallel, records in input order.
    fn eval_batch(&mut self, points: &[Vec<f64>]) -> Vec<f64> {
        let obj = self.objective;
        let domain = self.domain;
        let values = map_indexed(points.len(), self.parallelism, |i| {
            if domain.contains(&points[i]) {
                obj.evaluate(&points[i])
            } else {
                INFEASIBLE
            }
        });
        for (p, v) in points.iter().zip(&values) {
            if domain.contains(p) {
                self.record(p.clone(), *v);
            }
        }
        values
    }

    fn finish(self, method: &str, seed: u64, budget_exhausted: bool) -> OptimizationResult {
        let (best_point, best_value) = self
            .best
            .unwrap_or_else(|| (self.domain.lower.clone(), INFEASIBLE));
        OptimizationResult {
            best_point,
            best_value,
            evaluations: self.history.len(),
            history: self.history,
            method: method.to_string(),
            seed,
            budget_exhausted,
        }
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Nelder–Mead simplex search with standard coefficients
/// (reflect 1, expand 2, contract 1/2, shrink 1/2).
pub fn nelder_mead<O: Objective + ?Sized>(
    objective: &O,
    domain: &ParamDomain,
    start: &[f64],
    options: &OptimizeOptions,
) -> Result<OptimizationResult, OptimizeError> {
    domain.check_start(start)?;
    let n = domain.dim();
    let mut ev = Evaluator::new(objective, domain, options);

    let mut vertices = vec![start.to_vec()];
    for i in 0..n {
        let mut v = start.to_vec();
        let step = options.initial_step * domain.width(i);
        v[i] = if v[i] + step <= domain.upper[i] { v[i] + step } else { v[i] - step };
        vertices.push(v);
    }
    let values = ev.eval_batch(&vertices);
    // Simplex kept sorted best (highest) first.
    let mut simplex: Vec<(Vec<f64>, f64)> = vertices.into_iter().zip(values).collect();

    let mut exhausted = false;
    loop {
        simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        let diameter = simplex[1..]
            .iter()
            .map(|(p, _)| distance(p, &simplex[0].0))
            .fold(0.0, f64::max);
        let spread = if best.is_finite() && worst.is_finite() { best - worst } else { f64::INFINITY };
        if diameter < options.tol_x || spread < options.tol_f {
            break;
        }
        if ev.exhausted() {
            exhausted = true;
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|k| simplex[..n].iter().map(|(p, _)| p[k]).sum::<f64>() / n as f64)
            .collect();
        let along = |coef: f64| -> Vec<f64> {
            (0..n).map(|k| centroid[k] + coef * (centroid[k] - simplex[n].0[k])).collect()
        };

        let xr = along(1.0);
        let fr = ev.eval(&xr);
        if fr > simplex[0].1 {
            let xe = along(2.0);
            let fe = ev.eval(&xe);
            simplex[n] = if fe > fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr > simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        // Outside contraction when the reflection beat the worst vertex,
        // inside contraction otherwise; accept if it beats the better of the two.
        let (coef, threshold) = if fr > simplex[n].1 { (0.5, fr) } else { (-0.5, simplex[n].1) };
        let xc = along(coef);
        let fc = ev.eval(&xc);
        if fc > threshold || (coef > 0.0 && fc == threshold) {
            simplex[n] = (xc, fc);
            continue;
        }
        // Shrink toward the best vertex.
        let best_point = simplex[0].0.clone();
        let shrunk: Vec<Vec<f64>> = simplex[1..]
            .iter()
            .map(|(p, _)| (0..n).map(|k| best_point[k] + 0.5 * (p[k] - best_point[k])).collect())
            .collect();
        let values = ev.eval_batch(&shrunk);
        for (slot, (p, v)) in simplex[1..].iter_mut().zip(shrunk.into_iter().zip(values)) {
            *slot = (p, v);
        }
    }
    Ok(ev.finish("nelder-mead", options.seed, exhausted))
}

/// Coordinate pattern search: poll `x ± step·eᵢ` on every axis, move to the
/// best strict improvement, halve all steps when none improves.
pub fn pattern_search<O: Objective + ?Sized>(
    objective: &O,
    domain: &ParamDomain,
    start: &[f64],
    options: &OptimizeOptions,
) -> Result<OptimizationResult, OptimizeError> {
    domain.check_start(start)?;
    let n = domain.dim();
    let mut ev = Evaluator::new(objective, domain, options);
    let mut x = start.to_vec();
    let mut fx = ev.eval(&x);
    let mut steps: Vec<f64> = (0..n).map(|i| options.initial_step * domain.width(i)).collect();
    let mut exhausted = false;

    while steps.iter().cloned().fold(0.0, f64::max) >= options.tol_x {
        if ev.exhausted() {
            exhausted = true;
            break;
        }
        let polls: Vec<Vec<f64>> = (0..n)
            .flat_map(|i| {
                [1.0, -1.0].map(|s| {
                    let mut p = x.clone();
                    p[i] += s * steps[i];
                    p
                })
            })
            .filter(|p| domain.contains(p))
            .collect();
        let values = ev.eval_batch(&polls);
        let mut best: Option<(usize, f64)> = None;
        for (k, v) in values.iter().enumerate() {
            if *v > fx && best.map_or(true, |(_, b)| *v > b) {
                best = Some((k, *v));
            }
        }
        match best {
            Some((k, v)) => {
                x = polls[k].clone();
                fx = v;
            }
            None => steps.iter_mut().for_each(|s| *s *= 0.5),
        }
    }
    Ok(ev.finish("pattern-search", options.seed, exhausted))
}

/// Real-coded genetic algorithm: tournament selection, BLX-α crossover,
/// Gaussian mutation scaled to the box, one elite carried over.
pub fn genetic_search<O: Objective + ?Sized>(
    objective: &O,
    domain: &ParamDomain,
    options: &OptimizeOptions,
) -> Result<OptimizationResult, OptimizeError> {
    if options.population < 4 {
        return Err(OptimizeError::PopulationTooSmall(options.population));
    }
    let n = domain.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut ev = Evaluator::new(objective, domain, options);
    ev.budget = usize::MAX;

    let mut pop: Vec<Vec<f64>> = (0..options.population)
        .map(|_| (0..n).map(|i| rng.gen_range(domain.lower[i]..=domain.upper[i])).collect())
        .collect();
    let mut fitness = ev.eval_batch(&pop);
    let budget = options.max_evaluations.max(options.population);
    let mut exhausted = false;

    for gen in 0..options.generations {
        if ev.history.len() + options.population - 1 > budget {
            exhausted = true;
            break;
        }
        let elite = (0..pop.len())
            .max_by(|&a, &b| fitness[a].total_cmp(&fitness[b]).then(b.cmp(&a)))
            .unwrap_or(0);
        let decay = 1.0 - gen as f64 / options.generations as f64;

        let mut children = Vec::with_capacity(options.population - 1);
        while children.len() < options.population - 1 {
            let pa = tournament(&fitness, options.tournament, &mut rng);
            let pb = tournament(&fitness, options.tournament, &mut rng);
            let mut child: Vec<f64> = (0..n)
                .map(|i| {
                    let (lo, hi) = (pop[pa][i].min(pop[pb][i]), pop[pa][i].max(pop[pb][i]));
                    let spread = options.blend_alpha * (hi - lo);
                    let (a, b) = (lo - spread, hi + spread);
                    if b > a { rng.gen_range(a..=b) } else { a }
                })
                .collect();
            for (i, v) in child.iter_mut().enumerate() {
                if rng.gen_bool(options.mutation_rate.clamp(0.0, 1.0)) {
                    let sigma = options.mutation_scale * domain.width(i) * decay.max(0.05);
                    if let Ok(normal) = Normal::new(0.0, sigma) {
                        *v += normal.sample(&mut rng);
                    }
                }
            }
            domain.clamp(&mut child);
            children.push(child);
        }
        let child_fitness = ev.eval_batch(&children);
        let elite_point = pop[elite].clone();
        let elite_fitness = fitness[elite];
        pop = std::iter::once(elite_point).chain(children).collect();
        fitness = std::iter::once(elite_fitness).chain(child_fitness).collect();
    }
    Ok(ev.finish("genetic", options.seed, exhausted))
}

fn tournament(fitness: &[f64], size: usize, rng: &mut ChaCha8Rng) -> usize {
    let mut best = rng.gen_range(0..fitness.len());
    for _ in 1..size.max(1) {
        let c = rng.gen_range(0..fitness.len());
        if fitness[c] > fitness[best] {
            best = c;
        }
    }
    best
}

/// Genetic search followed by Nelder–Mead from the GA's best point.
/// Each stage gets its own `max_evaluations` budget.
pub fn genetic_then_nelder_mead<O: Objective + ?Sized>(
    objective: &O,
    domain: &ParamDomain,
    options: &OptimizeOptions,
) -> Result<OptimizationResult, OptimizeError> {
    let ga = genetic_search(objective, domain, options)?;
    let nm_options = OptimizeOptions {
        initial_step: options.initial_step * 0.25,
        ..*options
    };
    let nm = nelder_mead(objective, domain, &ga.best_point, &nm_options)?;
    let mut history = ga.history;
    history.extend(nm.history);
    let (best_point, best_value) = if nm.best_value > ga.best_value {
        (nm.best_point, nm.best_value)
    } else {
        (ga.best_point, ga.best_value)
    };
    Ok(OptimizationResult {
        best_point,
        best_value,
        evaluations: history.len(),
        history,
        method: "genetic+nelder-mead".into(),
        seed: options.seed,
        budget_exhausted: nm.budget_exhausted,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub names: Vec<String>,
    pub value_name: String,
    pub rows: Vec<(Vec<f64>, f64)>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = self.names.join(",");
        out.push(',');
        out.push_str(&self.value_name);
        out.push('\n');
        for (p, v) in &self.rows {
            for x in p {
                out.push_str(&fmt_sig15(*x));
                out.push(',');
            }
            out.push_str(&fmt_sig15(*v));
            out.push('\n');
        }
        out
    }

    /// Row with the largest value (first one on ties).
    pub fn argmax(&self) -> Option<&(Vec<f64>, f64)> {
        self.rows
            .iter()
            .fold(None, |best: Option<&(Vec<f64>, f64)>, r| match best {
                Some(b) if b.1 >= r.1 => Some(b),
                _ => Some(r),
            })
    }
}

/// 15 significant digits; plain notation for ordinary magnitudes.
pub fn fmt_sig15(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..15).contains(&exp) {
        let decimals = (14 - exp).max(0) as usize;
        format!("{v:.decimals$}")
    } else {
        format!("{v:.14e}")
    }
}

/// Values of `objective` on the full factorial grid with `resolution[i]`
/// equally spaced points per axis (both bounds included). The last axis
/// varies fastest.
pub fn sweep_grid<O: Objective + ?Sized>(
    objective: &O,
    domain: &ParamDomain,
    resolution: &[usize],
    parallelism: Parallelism,
) -> Result<SweepTable, OptimizeError> {
    if resolution.len() != domain.dim() || resolution.iter().any(|&r| r < 2) {
        return Err(OptimizeError::Resolution);
    }
    let total: usize = resolution.iter().product();
    let point = |mut k: usize| -> Vec<f64> {
        let mut p = vec![0.0; resolution.len()];
        for i in (0..resolution.len()).rev() {
            let idx = k % resolution[i];
            k /= resolution[i];
            let s = idx as f64 / (resolution[i] - 1) as f64;
            p[i] = domain.lower[i] + s * domain.width(i);
        }
        p
    };
    let rows = map_indexed(total, parallelism, |k| {
        let p = point(k);
        let v = objective.evaluate(&p);
        (p, v)
    });
    Ok(SweepTable {
        names: domain.names.clone(),
        value_name: "R".into(),
        rows,
    })
}
