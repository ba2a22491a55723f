//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Run with `cargo test -p newton-cavity --test acceptance`.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};
use std::sync::OnceLock;
use std::time::Instant;

use newton_cavity::billiard::{midpoint, trace_outcome, EntryState, TraceStatus};
use newton_cavity::body::{body_resistance, perimeter_ratio, BodySpec};
use newton_cavity::cavity::{make_double_parabola, make_flat, make_rectangle, make_triangle, CavityShape};
use newton_cavity::geometry::{reflect, Vec2};
use newton_cavity::optimize::{
    nelder_mead, pattern_search, sweep_grid, CachedObjective, DoubleParabolaObjective, Objective,
    OptimizeOptions, ParamDomain,
};
use newton_cavity::resistance::{cavity_resistance, integrand, QuadratureSpec};
use newton_cavity::{reflection_stats, Parallelism};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn check(id: &str, pass: bool, detail: String) -> bool {
    println!("criterion {id} [{}]: {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}

fn double_parabola() -> CavityShape {
    make_double_parabola(SQRT_2, 0.0).unwrap()
}

fn phi0() -> f64 {
    (SQRT_2 / 4.0).atan()
}

/// Double Parabola resistance on the 2000 × 2000 grid, shared by criteria 3 and 6.
fn dp_2000() -> f64 {
    static VALUE: OnceLock<f64> = OnceLock::new();
    *VALUE.get_or_init(|| {
        cavity_resistance(&double_parabola(), &QuadratureSpec::square(2000))
            .unwrap()
            .value
    })
}

fn c01_flat_segment() -> bool {
    let t = Instant::now();
    let r = cavity_resistance(&make_flat(), &QuadratureSpec::square(1000)).unwrap();
    let secs = t.elapsed().as_secs_f64();
    check(
        "1",
        (r.value - 1.0).abs() <= 1e-6 && secs < 5.0,
        format!("flat R = {:.9} (target 1 ± 1e-6) in {secs:.2} s (< 5 s)", r.value),
    )
}

fn c02_triangle() -> bool {
    let t = Instant::now();
    let r = cavity_resistance(&make_triangle(), &QuadratureSpec::square(2000)).unwrap();
    let secs = t.elapsed().as_secs_f64();
    check(
        "2",
        (r.value - 1.41421).abs() <= 1e-3 && secs < 60.0,
        format!("triangle R = {:.6} (target 1.41421 ± 1e-3) in {secs:.2} s (< 60 s)", r.value),
    )
}

fn c03_double_parabola() -> bool {
    let v = dp_2000();
    check(
        "3",
        (v - 1.49650).abs() <= 5e-4,
        format!("double parabola R = {v:.6} (target 1.49650 ± 5e-4)"),
    )
}

fn c04_local_optimizers_from_fixed_start() -> bool {
    let domain = ParamDomain::new(&["h", "beta"], &[0.5, -1.0], &[3.0, 1.0]).unwrap();
    let coarse = QuadratureSpec::square(500).with_max_trapped_fraction(1e-3);
    let objective = CachedObjective::new(DoubleParabolaObjective::new(coarse));
    let options = OptimizeOptions {
        tol_x: 1e-4,
        max_evaluations: 400,
        parallelism: Parallelism::Serial,
        ..OptimizeOptions::default()
    };
    let fine = QuadratureSpec::square(2000).with_max_trapped_fraction(1e-3);
    let mut lines = Vec::new();
    let mut pass = true;
    for result in [
        nelder_mead(&objective, &domain, &[1.0, 0.5], &options).unwrap(),
        pattern_search(&objective, &domain, &[1.0, 0.5], &options).unwrap(),
    ] {
        let p = &result.best_point;
        let dist = (p[0] - SQRT_2).hypot(p[1]);
        let refined = cavity_resistance(&make_double_parabola(p[0], p[1]).unwrap(), &fine)
            .map(|r| r.value)
            .unwrap_or(f64::NAN);
        let ok = dist <= 0.01 && refined >= 1.4960;
        pass &= ok;
        lines.push(format!(
            "{} -> ({:.4}, {:.4}) dist {:.4} (≤ 0.01), refined R {:.5} (≥ 1.4960), {} evals",
            result.method, p[0], p[1], dist, refined, result.evaluations
        ));
    }
    check("4", pass, lines.join("; "))
}

fn c05_sweep_r_of_h() -> bool {
    let domain = ParamDomain::new(&["h"], &[1.2], &[1.6]).unwrap();
    let objective = DoubleParabolaObjective::new(QuadratureSpec::square(1000));
    let f = |x: &[f64]| objective.evaluate(&[x[0], 0.0]);
    let table = sweep_grid(&f, &domain, &[21], Parallelism::Serial).unwrap();
    let values: Vec<f64> = table.rows.iter().map(|r| r.1).collect();
    let hs: Vec<f64> = table.rows.iter().map(|r| r.0[0]).collect();
    let nearest = (0..hs.len())
        .min_by(|&a, &b| (hs[a] - SQRT_2).abs().total_cmp(&(hs[b] - SQRT_2).abs()))
        .unwrap();
    let argmax = (0..values.len()).max_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
    let rising = values[..=argmax].windows(2).all(|w| w[1] > w[0]);
    let falling = values[argmax..].windows(2).all(|w| w[1] < w[0]);
    check(
        "5",
        argmax == nearest && rising && falling,
        format!(
            "max R(h,0) = {:.5} at h = {:.2} (nearest to √2: {:.2}); unimodal: {}",
            values[argmax],
            hs[argmax],
            hs[nearest],
            rising && falling
        ),
    )
}

fn c06_body_of_42_cavities() -> bool {
    let cavity_r = dp_2000();
    let spec = BodySpec::new(1.0, 42, double_parabola()).unwrap();
    let body = body_resistance(&spec, cavity_r).unwrap();
    let direct = perimeter_ratio(42).unwrap() * cavity_r;
    check(
        "6",
        (body.value - 1.4951).abs() <= 5e-4 && body.value == direct,
        format!(
            "R(B) = {:.6} (target 1.4951 ± 5e-4), sin(π/42)/(π/42)·R = {:.6}, identical: {}",
            body.value,
            direct,
            body.value == direct
        ),
    )
}

fn c07_reflection_properties() -> bool {
    let stats = reflection_stats(&double_parabola(), 300, 300, 1000, Parallelism::Auto);
    let fewer_than_3: u64 = stats.bins.range(..3).map(|(_, b)| b.cells).sum();
    // Every count other than 3 must stay inside |φ| ≤ φ₀.
    let outside_band = stats.max_abs_phi_excluding(3);
    let dev = stats.max_deviation_4plus.unwrap_or(0.0);
    let a = fewer_than_3 == 0 && stats.trapped == 0;
    let b = outside_band <= phi0();
    let c = dev < 2.0 * phi0();
    check(
        "7",
        a && b && c,
        format!(
            "(a) cells with < 3 reflections: {fewer_than_3}, trapped {}; (b) largest |φ| with ≠ 3 reflections {:.4} rad ≤ φ₀ = {:.4}; (c) max |φ−φ⁺| over ≥ 4 reflections {:.4} < 2φ₀ = {:.4}; histogram {:?}",
            stats.trapped,
            outside_band,
            phi0(),
            dev,
            2.0 * phi0(),
            stats.histogram()
        ),
    )
}

fn c08_rectangle_comb() -> bool {
    let depths = [8.13, 9.77, 10.37, 12.91];
    let spec = QuadratureSpec::square(1000).with_max_reflections(10_000_000);
    let values: Vec<f64> = depths
        .iter()
        .map(|&d| cavity_resistance(&make_rectangle(d).unwrap(), &spec).unwrap().value)
        .collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    check(
        "8",
        (mean - 1.25).abs() <= 0.01,
        format!("R at depths {depths:?} = {values:.5?}; mean {mean:.5} (target 1.25 ± 0.01)"),
    )
}

fn random_shape(rng: &mut ChaCha8Rng) -> CavityShape {
    match rng.gen_range(0..4) {
        0 => make_triangle(),
        1 => double_parabola(),
        2 => make_rectangle(rng.gen_range(0.3..3.0)).unwrap(),
        _ => loop {
            if let Ok(s) = make_double_parabola(rng.gen_range(0.7..2.5), rng.gen_range(-0.3..0.6)) {
                break s;
            }
        },
    }
}

fn c09_property_suites() -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut notes = Vec::new();

    // Reflection involution and norm preservation.
    let mut refl_err: f64 = 0.0;
    for _ in 0..10_000 {
        let d = Vec2::from_angle(rng.gen_range(-PI..PI));
        let n = Vec2::from_angle(rng.gen_range(-PI..PI));
        let r = reflect(d, n);
        refl_err = refl_err.max((r.norm() - 1.0).abs()).max((reflect(r, n) - d).norm());
    }
    let refl_ok = refl_err <= 1e-12;
    notes.push(format!("reflect err {refl_err:.1e} (≤ 1e-12)"));

    // Time reversal on 1000 random (shape, entry) samples.
    let mut rev_err: f64 = 0.0;
    let mut checked = 0;
    let mut count_mismatch = 0;
    while checked < 1000 {
        let shape = random_shape(&mut rng);
        let entry = EntryState::new(rng.gen_range(-0.499..0.499), rng.gen_range(-1.5..1.5)).unwrap();
        let fwd = trace_outcome(&shape, entry, 1000);
        if fwd.status != TraceStatus::Exited || fwd.perturbed || fwd.reflections > 10 || fwd.exit_x.abs() >= 0.5 - 1e-9 {
            continue;
        }
        let back = trace_outcome(&shape, EntryState::new(fwd.exit_x, fwd.exit_phi).unwrap(), 1000);
        checked += 1;
        if back.reflections != fwd.reflections {
            count_mismatch += 1;
            continue;
        }
        rev_err = rev_err.max((back.exit_x - entry.x).abs()).max((back.exit_phi - entry.phi).abs());
    }
    let rev_ok = rev_err <= 1e-8 && count_mismatch == 0;
    notes.push(format!("time reversal max err {rev_err:.1e} (≤ 1e-8), count mismatches {count_mismatch} over {checked}"));

    // Mirror symmetry on symmetric shapes.
    let mut mirror_err: f64 = 0.0;
    for shape in [make_triangle(), double_parabola(), make_rectangle(1.7).unwrap(), make_double_parabola(1.9, 0.3).unwrap()] {
        for _ in 0..500 {
            let (x, phi) = (rng.gen_range(-0.499..0.499), rng.gen_range(-1.5..1.5));
            let a = trace_outcome(&shape, EntryState::new(x, phi).unwrap(), 1000);
            let b = trace_outcome(&shape, EntryState::new(-x, -phi).unwrap(), 1000);
            if a.status == TraceStatus::Exited && !a.perturbed && !b.perturbed {
                mirror_err = mirror_err.max((a.exit_phi + b.exit_phi).abs());
            }
        }
    }
    let mirror_ok = mirror_err <= 1e-10;
    notes.push(format!("mirror err {mirror_err:.1e} (≤ 1e-10)"));

    // Per-cell integrand bounds and the total.
    let mut bound_ok = true;
    let mut max_total: f64 = 0.0;
    for shape in [make_flat(), make_triangle(), double_parabola(), make_double_parabola(1.1, -0.4).unwrap()] {
        let n = 120;
        for j in 0..n {
            let phi = midpoint(-FRAC_PI_2, FRAC_PI_2, n, j);
            for i in 0..n {
                let out = trace_outcome(&shape, EntryState { x: midpoint(-0.5, 0.5, n, i), phi }, 1000);
                let f = integrand(phi, out.exit_phi);
                bound_ok &= out.exit_phi.abs() <= FRAC_PI_2 && f >= 0.0 && f <= 2.0 * phi.cos();
            }
        }
        max_total = max_total.max(cavity_resistance(&shape, &QuadratureSpec::square(n)).unwrap().value);
    }
    bound_ok &= max_total <= 1.5;
    notes.push(format!("integrand within [0, 2cos φ]: {bound_ok}, max total R {max_total:.5} (≤ 1.5)"));

    // Bitwise determinism across thread counts.
    let shape = double_parabola();
    let bits: Vec<u64> = [1, 4, 8]
        .iter()
        .map(|&t| {
            let spec = QuadratureSpec::square(300).with_parallelism(Parallelism::from_threads(Some(t)));
            cavity_resistance(&shape, &spec).unwrap().value.to_bits()
        })
        .collect();
    let det_ok = bits.windows(2).all(|w| w[0] == w[1]);
    notes.push(format!("threads {{1,4,8}} bitwise equal: {det_ok}"));

    check("9", refl_ok && rev_ok && mirror_ok && bound_ok && det_ok, notes.join("; "))
}

fn c10_small_epsilon_approximation() -> bool {
    let r = 1.49650;
    let spec = BodySpec::new(1.0, 42, double_parabola()).unwrap();
    let body = body_resistance(&spec, r).unwrap();
    let diff = (body.value - body.approx_value).abs();
    check(
        "10",
        diff < 1e-5 * r,
        format!("|exact − approx| = {diff:.3e} (< {:.3e})", 1e-5 * r),
    )
}

fn main() {
    let criteria: [fn() -> bool; 10] = [
        c01_flat_segment,
        c02_triangle,
        c03_double_parabola,
        c04_local_optimizers_from_fixed_start,
        c05_sweep_r_of_h,
        c06_body_of_42_cavities,
        c07_reflection_properties,
        c08_rectangle_comb,
        c09_property_suites,
        c10_small_epsilon_approximation,
    ];
    let passed = criteria.iter().filter(|c| c()).count();
    println!("acceptance: {passed}/{} criteria passed", criteria.len());
    if passed < criteria.len() {
        std::process::exit(1);
    }
}
