//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion. With
//! `FIBERUQ_ACCEPTANCE_STRICT=1` the process exits non-zero when any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::Instant;

use fiberuq::analytic::{analytic_solution, ard_analytic, fte_analytic, AnalyticConfig};
use fiberuq::channel::{
    field_statistics, partial_evaluate, verify_partial_eval_bound, FieldGrid, PartialBoundOptions,
};
use fiberuq::experiments::{
    l2_error, log_grid, loglog_slope, mc_compare, reference_statistics, surrogate_statistics, tolerance_sweep,
    McCompareSettings, StatsSettings,
};
use fiberuq::fiber::{
    closure_fourth_order, fom_rhs, fractional_anisotropy, ClosureKind, FomConfig, FomModel,
    OrientationTensor,
};
use fiberuq::ode::{euler_solve, SolverConfig};
use fiberuq::poly::{fit_to_tolerance, legendre, FitMode, FitOptions, IndexSet, ParamBox, Surrogate};
use fiberuq::stats::{sobol_unit_points, ReferenceCache, ReferenceStatistics};
use fiberuq::tensor::{kron, mat_of_vec, vec_identity, vec_of_mat, Mat3};
use fiberuq::{FiberProblem, ProblemConfig};
use nalgebra::{Rotation3, Unit, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 42;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn cache() -> ReferenceCache {
    ReferenceCache::from_env_or(PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("fiberuq-acceptance"))
}

fn reference(problem: &FiberProblem) -> ReferenceStatistics {
    reference_statistics(problem, &StatsSettings::default(), Some(&cache()), false).unwrap()
}

fn within(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol
}

fn point_statistics() -> Outcome {
    // (model, mean, std, cdf(0.953), q_0.99)
    let targets = [(FomModel::Fte, 0.9512, 1.6794e-3, 0.8723, 0.9538), (FomModel::Iard, 0.9538, 1.9665e-3, 0.2821, 0.9570)];
    let mut pass = true;
    let mut detail = Vec::new();
    for (model, mean, std, cdf, q) in targets {
        let problem = FiberProblem::new(ProblemConfig::point(model)).unwrap();
        let settings = StatsSettings::default();
        let start = Instant::now();
        let (s, _) = fit_to_tolerance(1e-3, &problem, FitMode::APriori, &FitOptions::default(), SEED).unwrap();
        let r = surrogate_statistics(&s, &problem, &settings, None).unwrap();
        let secs = start.elapsed().as_secs_f64();
        let ok = within(r.mean, mean, 5e-4)
            && within(r.std, std, 0.05 * std)
            && within(r.cdf[0].1, cdf, 5e-3)
            && within(r.quantile.1, q, 1e-3)
            && secs <= 600.0;
        pass &= ok;
        detail.push(format!(
            "{model:?}: E {:.4} std {:.4e} F {:.4} q {:.4} in {secs:.0}s",
            r.mean, r.std, r.cdf[0].1, r.quantile.1
        ));
    }
    outcome(pass, detail.join("; "))
}

fn tolerance_sweeps() -> (Outcome, Outcome) {
    let epsilons = log_grid(1e-3, 1.0, 15);
    let (mut within_eps, mut bounds_ok) = (true, true);
    let (mut violations, mut worst) = (0, 0.0f64);
    let mut secs_total = 0.0;
    for model in [FomModel::Fte, FomModel::Iard] {
        let problem = FiberProblem::new(ProblemConfig::point(model)).unwrap();
        let settings = StatsSettings::default();
        let r = reference(&problem);
        let start = Instant::now();
        let rows = tolerance_sweep(&problem, &epsilons, FitMode::APriori, &FitOptions::default(), &settings, &r, SEED)
            .unwrap();
        secs_total += start.elapsed().as_secs_f64();
        for row in &rows {
            within_eps &= row.within_tolerance();
            worst = worst.max(row.l2_error / row.epsilon);
            let failed = row.report.bounds.iter().filter(|b| !b.pass).count();
            violations += failed;
            bounds_ok &= failed == 0;
        }
    }
    let sweep = outcome(
        within_eps && secs_total <= 1800.0,
        format!("largest error / epsilon {worst:.3}, {secs_total:.0}s for both models"),
    );
    let bounds = outcome(bounds_ok, format!("{violations} bound violations over 30 surrogates"));
    (sweep, bounds)
}

fn euler_error(p: &FiberProblem, omega: &[f64], steps: usize) -> f64 {
    let (l, fom) = p.setup(omega).unwrap();
    let t = p.config().solver.t_end;
    let a0 = OrientationTensor::isotropic();
    let exact = analytic_solution(&a0, &AnalyticConfig { fom, l, t }).unwrap();
    let approx = euler_solve(&a0, &l, &fom, &SolverConfig { t_end: t, steps, stabilize: false }).unwrap();
    (exact.matrix() - approx.matrix()).norm()
}

fn euler_order() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut slopes = Vec::new();
    let mut fine = 0.0f64;
    for model in [FomModel::Fte, FomModel::Iard] {
        let p = FiberProblem::new(ProblemConfig::point(model)).unwrap();
        let d = p.config().domain;
        for k in 0..5 {
            let omega = [
                rng.gen_range(d.temperature[0]..d.temperature[1]),
                rng.gen_range(d.fiber_length[0]..d.fiber_length[1]),
            ];
            let pts: Vec<(f64, f64)> =
                (6..=12).map(|j| 1usize << j).map(|n| (n as f64, euler_error(&p, &omega, n))).collect();
            slopes.push(-loglog_slope(&pts));
            if k == 0 {
                fine = fine.max(euler_error(&p, &omega, 1_000_000));
            }
        }
    }
    let (lo, hi) = slopes.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &s| (a.min(s), b.max(s)));
    outcome(
        lo >= 0.9 && hi <= 1.1 && fine < 1e-5,
        format!("orders in [{lo:.3}, {hi:.3}], fine-step error {fine:.2e}"),
    )
}

fn random_orientation(rng: &mut ChaCha8Rng) -> OrientationTensor {
    let axis = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let r = Rotation3::from_axis_angle(&Unit::new_normalize(axis), rng.gen_range(0.0..6.0));
    let w = Vector3::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
    let d = Mat3::from_diagonal(&(w / w.sum()));
    let a = r.matrix() * d * r.matrix().transpose();
    OrientationTensor::new((a + a.transpose()) * 0.5).unwrap()
}

fn random_mat(rng: &mut ChaCha8Rng) -> Mat3 {
    Mat3::from_fn(|_, _| rng.gen_range(-1.0..1.0))
}

fn model_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut ard, mut hybrid, mut kr) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..200 {
        let a = random_orientation(&mut rng);
        let l = random_mat(&mut rng);
        let fte = FomConfig { model: FomModel::Fte, xi: 0.95, c_i: 0.01, c_m: 0.2, closure: ClosureKind::Hybrid(1.0) };
        let cfg = AnalyticConfig { fom: fte, l: l * 0.1, t: rng.gen_range(0.0..50.0) };
        let x = fte_analytic(&a, &cfg).unwrap();
        let ard_cfg = AnalyticConfig { fom: FomConfig { model: FomModel::Ard, ..fte }, ..cfg };
        let y = ard_analytic(&a, &ard_cfg, &(Mat3::identity() * 0.01)).unwrap();
        ard = ard.max((x.matrix() - y.matrix()).norm());
        let q = FomConfig { closure: ClosureKind::Quadratic, ..fte };
        hybrid = hybrid.max((fom_rhs(&a, &l, &q).unwrap() - fom_rhs(&a, &l, &fte).unwrap()).amax());
        let t1 = closure_fourth_order(&a, ClosureKind::Hybrid(1.0));
        let t2 = closure_fourth_order(&a, ClosureKind::Quadratic);
        hybrid = hybrid.max(t1.0.iter().zip(t2.0.iter()).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max));
        let (b, c, m) = (random_mat(&mut rng), random_mat(&mut rng), random_mat(&mut rng));
        kr = kr.max((kron(&b, &c) * vec_of_mat(&m) - vec_of_mat(&(c * m * b.transpose()))).amax());
        kr = kr.max((mat_of_vec(&vec_of_mat(&m)) - m).amax());
        kr = kr.max((vec_identity().dot(&vec_of_mat(&m)) - m.trace()).abs());
    }
    outcome(
        ard <= 1e-10 && hybrid == 0.0 && kr <= 1e-12,
        format!("ARD vs FTE {ard:.1e}, hybrid vs quadratic {hybrid:.1e}, Kronecker/vec {kr:.1e}"),
    )
}

fn channel() -> (Outcome, Option<(Surrogate, FiberProblem)>) {
    let problem = FiberProblem::new(ProblemConfig::full_channel()).unwrap();
    let start = Instant::now();
    let (s, _) = match fit_to_tolerance(5e-3, &problem, FitMode::Adaptive, &FitOptions::default(), SEED) {
        Ok(f) => f,
        Err(e) => return (outcome(false, format!("fit failed: {e}")), None),
    };
    let secs = start.elapsed().as_secs_f64();
    let err = l2_error(&s, &problem, 10_000).unwrap();
    let cfg = problem.config();
    let grid = FieldGrid::new(100, 100, cfg.channel.width, cfg.channel.height).unwrap();
    let f = field_statistics(&s, &grid, Some((0.85, 0.9, 10_000))).unwrap();
    let (lo, hi) = f.mean_range();
    let [x, y] = f.argmax_std();
    let mid = cfg.channel.height / 2.0;
    let dy = grid.height / grid.ny as f64;
    let between = (y - mid).abs() > dy && (y - mid).abs() < mid - dy;
    let fit_ok = (3.503e-3 / 3.0..=3.0 * 3.503e-3).contains(&err) && secs <= 1800.0;
    let detail = format!(
        "error {err:.3e} in {secs:.0}s, mean field [{lo:.3}, {hi:.3}], largest std at ({x:.2}, {y:.3})"
    );
    (outcome(fit_ok && lo <= 0.05 && hi >= 0.95 && between, detail), Some((s, problem)))
}

fn partial_bound(fit: Option<&(Surrogate, FiberProblem)>) -> Outcome {
    let Some((s, problem)) = fit else {
        return outcome(false, "no channel surrogate".into());
    };
    let cfg = problem.config();
    let grid = FieldGrid::new(100, 40, cfg.channel.width, cfg.channel.height).unwrap();
    let r = verify_partial_eval_bound(s, problem, &grid, &PartialBoundOptions::default()).unwrap();
    let c2_ok = (0.023 / 3.0..=0.023 * 3.0).contains(&r.c2);
    outcome(
        r.violations == 0 && c2_ok,
        format!(
            "max R {:.3} ({} violations), C2 {:.3e} over {} terms capturing {:.0}% of the error",
            r.max_ratio,
            r.violations,
            r.c2,
            r.expansion_terms,
            100.0 * r.captured
        ),
    )
}

fn monte_carlo() -> Outcome {
    let problem = FiberProblem::new(ProblemConfig::default()).unwrap();
    let r = reference(&problem);
    let cmp = mc_compare(&problem, &McCompareSettings::default(), &FitOptions::default(), &r, SEED).unwrap();
    let mc_cost = cmp.cheapest_mc.as_ref().map_or("none".to_string(), |m| format!("{:.3e}", m.cost as f64));
    let s_cost = cmp.surrogate_at_target.as_ref().map_or("none".to_string(), |m| format!("{:.3e}", m.cost as f64));
    outcome(
        (cmp.slope + 1.0 / 3.0).abs() <= 0.1 && cmp.surrogate_cheaper(),
        format!("slope {:.3}, cost at {:.0e}: surrogate {s_cost}, cheapest MC {mc_cost}", cmp.slope, cmp.target),
    )
}

fn properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (nodes, weights) = fiberuq::poly::basis::gauss_legendre(12);
    let mut gram = 0.0f64;
    for j in 0..=10 {
        for k in 0..=10 {
            let g: f64 = nodes.iter().zip(&weights).map(|(&u, w)| w * legendre(u, j) * legendre(u, k)).sum();
            gram = gram.max((g - if j == k { 1.0 } else { 0.0 }).abs());
        }
    }
    let domain = ParamBox::new(vec![550.0, 0.19, 0.0, 0.0], vec![580.0, 0.57, 5.0, 2.0]).unwrap();
    let set = IndexSet::total_degree(4, 6);
    let coeffs = set.indices().iter().map(|i| rng.gen_range(-1.0..1.0) / (1.0 + i.total_degree() as f64).powi(2)).collect();
    let s = Surrogate::new(domain, set, coeffs).unwrap();
    let n = 1 << 16;
    let pts = sobol_unit_points(4, n).unwrap();
    let qmc = pts.chunks(4).map(|u| s.eval_unit(u).powi(2)).sum::<f64>() / n as f64;
    let parseval = (qmc - s.norm_squared()).abs() / s.norm_squared();
    let (mut trace, mut fa, mut partial) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..200 {
        let a = random_orientation(&mut rng);
        let l = random_mat(&mut rng);
        for model in [FomModel::Jeffery, FomModel::Fte, FomModel::Ard, FomModel::Iard] {
            let cfg = FomConfig { model, xi: 0.9, c_i: 0.01, c_m: 0.2, closure: ClosureKind::Hybrid(rng.gen_range(0.0..1.0)) };
            trace = trace.max(fom_rhs(&a, &l, &cfg).unwrap().trace().abs());
        }
        let axis = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let r = *Rotation3::from_axis_angle(&Unit::new_normalize(axis), rng.gen_range(0.0..6.0)).matrix();
        let b = OrientationTensor::new_unchecked(r * a.matrix() * r.transpose());
        fa = fa.max((fractional_anisotropy(&a).unwrap() - fractional_anisotropy(&b).unwrap()).abs());
        let xy = [rng.gen_range(0.01..4.99), rng.gen_range(0.01..1.99)];
        let omega = [rng.gen_range(550.0..580.0), rng.gen_range(0.19..0.57)];
        let reduced = partial_evaluate(&s, &xy).unwrap();
        let full = s.eval(&[omega[0], omega[1], xy[0], xy[1]]).unwrap();
        partial = partial.max((reduced.eval(&omega).unwrap() - full).abs());
    }
    outcome(
        gram <= 1e-12 && parseval <= 1e-3 && trace < 1e-10 && fa <= 1e-12 && partial <= 1e-12,
        format!(
            "Gram {gram:.1e}, Parseval {parseval:.1e}, RHS trace {trace:.1e}, FA rotation {fa:.1e}, partial evaluation {partial:.1e}"
        ),
    )
}

fn run(name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let o = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
        outcome(false, format!("panicked: {}", msg.unwrap_or_default()))
    });
    report(name, &o, start.elapsed().as_secs_f64());
    o.pass
}

fn report(name: &str, o: &Outcome, secs: f64) {
    println!("{} {name}: {} [{secs:.0}s]", if o.pass { "PASS" } else { "FAIL" }, o.detail);
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let wanted = |k: &str| filter.is_empty() || filter.iter().any(|f| k.contains(f.as_str()));
    let mut all = true;
    if wanted("criterion-1") {
        all &= run("criterion-1 point statistics", point_statistics);
    }
    if wanted("criterion-2") || wanted("criterion-3") {
        let start = Instant::now();
        let (sweep, bounds) = catch_unwind(tolerance_sweeps).unwrap_or_else(|_| {
            (outcome(false, "panicked".into()), outcome(false, "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        report("criterion-2 tolerance sweep", &sweep, secs);
        report("criterion-3 statistic bounds", &bounds, secs);
        all &= sweep.pass && bounds.pass;
    }
    if wanted("criterion-4") {
        all &= run("criterion-4 Euler order", euler_order);
    }
    if wanted("criterion-5") {
        all &= run("criterion-5 model identities", model_identities);
    }
    if wanted("criterion-6") || wanted("criterion-7") {
        let start = Instant::now();
        let (fields, fit) = catch_unwind(channel).unwrap_or_else(|_| (outcome(false, "panicked".into()), None));
        report("criterion-6 channel fields", &fields, start.elapsed().as_secs_f64());
        all &= fields.pass;
        all &= run("criterion-7 partial evaluation bound", || partial_bound(fit.as_ref()));
    }
    if wanted("criterion-8") {
        all &= run("criterion-8 Monte Carlo comparison", monte_carlo);
    }
    if wanted("criterion-9") {
        all &= run("criterion-9 property checks", properties);
    }
    println!("acceptance: {}", if all { "all criteria pass" } else { "some criteria FAIL" });
    if !all && std::env::var("FIBERUQ_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
