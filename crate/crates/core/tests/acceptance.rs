//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use pathreg_core::experiments::{
    run_cv_demo, run_experiment, run_logistic_ratio_experiment, run_ridge_ratio_experiment, write_run,
    ExperimentKind, ExperimentSpec,
};
use pathreg_core::logistic::{FitOptions, LogisticProblem, SampleWeights};
use pathreg_core::regime::Rational;
use pathreg_core::ridge::{
    exact_regimes, pathological_regime_numeric, scan_regimes, trend_indicator, RidgeProblem, ScanOptions,
};
use pathreg_core::rng::stream_rng;
use pathreg_core::sampling::{draw_uniform_table, sample_batch, Condition, SamplerConfig, Scheme};
use pathreg_core::tables::{fixtures, is_simpson, ContingencyTable222, Dataset};
use pathreg_core::RegGrid;
use rand::Rng;

const SEED: u64 = 20231114;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn q(n: i128, d: i128) -> Rational {
    Rational::new(n, d)
}

fn round3(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

fn within(v: f64, target: f64, tol: f64) -> bool {
    (v - target).abs() <= tol
}

fn exact_examples() -> Outcome {
    let loan = fixtures::loan().encode().map_err(|e| e.to_string())?;
    let problem = RidgeProblem::new(&loan, false);
    let s = problem.summary_exact().ok_or("loan sums are not exact")?;
    let beta = s.beta(q(5, 1));
    ensure(beta == [q(62, 2679), q(887, 2679)], format!("beta(5) = {beta:?}"))?;
    let mls = s.limit();
    ensure(mls == [q(-3, 2079), q(777, 2079)], format!("MLS = {mls:?}"))?;
    let est = problem.fit(5.0).map_err(|e| e.to_string())?;
    ensure(round3(est.beta[0]) == 0.023 && round3(est.beta[1]) == 0.331, format!("beta(5) ~ {:?}", est.beta))?;
    let mls_f = problem.mls();
    ensure(round3(mls_f[0]) == -0.001 && round3(mls_f[1]) == 0.374, format!("MLS ~ {mls_f:?}"))?;
    let t2 = trend_indicator(&est, 2).map_err(|e| e.to_string())?;
    ensure(within(t2, -62.0 / 2679.0, 1e-15) && (t2 * 10000.0).round() == -231.0, format!("T2(5) = {t2}"))?;
    let r = exact_regimes(&problem).map_err(|e| e.to_string())?;
    ensure(r[0].intervals.is_empty(), "variable 1 has a regime")?;
    let iv = r[1].intervals.intervals();
    ensure(
        iv.len() == 1 && iv[0].lo.as_exact() == Some(&q(3, 13)) && iv[0].hi.is_none(),
        format!("loan regime {:?}", r[1].intervals),
    )?;

    let dp = fixtures::death_penalty();
    let verdict = is_simpson(&dp).map_err(|e| e.to_string())?;
    ensure(verdict.is_simpson(), "death-penalty table is not Simpson")?;
    let r = exact_regimes(&RidgeProblem::new(&dp.encode().unwrap(), false)).map_err(|e| e.to_string())?;
    let iv = r[1].intervals.intervals();
    ensure(
        iv.len() == 1 && iv[0].lo.as_exact() == Some(&q(755, 6)) && iv[0].hi.is_none(),
        format!("death-penalty regime {:?}", r[1].intervals),
    )?;
    Ok(format!("loan P2 = (3/13, inf), beta(5) = (62/2679, 887/2679); death penalty {verdict:?}, P2 = (755/6, inf)"))
}

fn random_table(rng: &mut impl Rng, max_n: u64) -> ContingencyTable222 {
    let n = rng.random_range(1..=max_n);
    draw_uniform_table(n, rng)
}

fn oracle_equivalence() -> Outcome {
    let grid = RegGrid::ridge_default();
    let mut rng = stream_rng(SEED, 2);
    let mut pathological = 0;
    for k in 0..1000 {
        let t = random_table(&mut rng, 500);
        let ds = t.encode().unwrap();
        let problem = RidgeProblem::new(&ds, false);
        let exact = exact_regimes(&problem).map_err(|e| e.to_string())?;
        let numeric = scan_regimes(&problem, &grid, ScanOptions::default()).map_err(|e| e.to_string())?;
        for (e, n) in exact.iter().zip(&numeric) {
            let (ei, ni) = (e.intervals.intervals(), n.intervals.intervals());
            ensure(ei.len() == ni.len(), format!("table {k} {:?}: exact {ei:?} vs scan {ni:?}", t.canonical()))?;
            for (a, b) in ei.iter().zip(ni) {
                let rel = (a.lo.value() - b.lo.value()).abs() / a.lo.value();
                ensure(rel <= 1e-8 && a.hi.is_none() && b.hi.is_none(), format!("table {k}: {a:?} vs {b:?}"))?;
            }
            pathological += usize::from(!ei.is_empty());
        }
    }
    Ok(format!("1000 tables agree ({pathological} regimes, boundaries within 1e-8 relative)"))
}

fn path_structure() -> Outcome {
    let grid = RegGrid::log(1e-8, 1e12, 10_000).unwrap();
    let mut rng = stream_rng(SEED, 3);
    let mut checked = 0;
    let mut draws = 0;
    while checked < 500 {
        draws += 1;
        ensure(draws < 100_000, "too few tables satisfy the inequality")?;
        let ds = random_table(&mut rng, 500).encode().unwrap();
        let problem = RidgeProblem::new(&ds, false);
        let s = problem.summary().unwrap();
        // The inequality for coefficient m, with a non-zero moment so the
        // zero K / sy exists.
        let Some(m) = (0..2).find(|&m| s.offset(m) > 0.0 && s.sy(m) > 0.0) else { continue };
        let path: Vec<f64> = grid.values().iter().map(|&c| problem.fit(c).unwrap().beta[m]).collect();
        let sign_changes: Vec<usize> = (1..path.len()).filter(|&k| path[k - 1] * path[k] < 0.0).collect();
        let diffs: Vec<f64> = path.windows(2).map(|w| w[1] - w[0]).collect();
        let critical: Vec<usize> = (1..diffs.len()).filter(|&k| diffs[k - 1] * diffs[k] < 0.0).collect();
        ensure(sign_changes.len() == 1, format!("{} sign changes in {:?}", sign_changes.len(), s))?;
        ensure(critical.len() == 1, format!("{} critical points in {:?}", critical.len(), s))?;
        ensure(critical[0] >= sign_changes[0], format!("critical point left of the zero in {s:?}"))?;
        let gamma = s.offset(m) / s.sy(m);
        let g = grid.values();
        ensure(g[sign_changes[0] - 1] <= gamma && gamma <= g[sign_changes[0]], "zero not at K / sy")?;
        checked += 1;
    }
    Ok(format!("500 paths with one zero and one critical point to its right ({draws} tables drawn)"))
}

fn ridge_monte_carlo() -> Outcome {
    let spec = ExperimentSpec {
        sizes: vec![1000],
        m: 2000,
        conditions: vec![Condition::Any, Condition::Simpson],
        ..ExperimentSpec::new(ExperimentKind::RatioVsN, SEED)
    };
    let rows = run_ridge_ratio_experiment(&spec).map_err(|e| e.to_string())?;
    let (all, simpson) = (&rows[0].ratio, &rows[1].ratio);
    let msg = format!(
        "uniform {:.4} [{:.4}, {:.4}], Simpson {:.4} [{:.4}, {:.4}]",
        all.estimate, all.lower, all.upper, simpson.estimate, simpson.lower, simpson.upper
    );
    ensure((0.18..=0.24).contains(&all.estimate), format!("uniform ratio out of band: {msg}"))?;
    ensure((0.28..=0.36).contains(&simpson.estimate), format!("Simpson ratio out of band: {msg}"))?;
    Ok(msg)
}

fn simpson_prevalence() -> Outcome {
    let cfg = SamplerConfig::new(Scheme::DirichletRounded, 1000, SEED).map_err(|e| e.to_string())?;
    let batch = sample_batch(&cfg, 200, Condition::Simpson, 0).map_err(|e| e.to_string())?;
    let rate = batch.acceptance_rate;
    let msg = format!("acceptance {:.4}% over {} valid draws", rate * 100.0, batch.valid_draws);
    ensure((0.012..=0.022).contains(&rate) && rate < 1.0 / 12.0, msg.clone())?;
    ensure(batch.tables.iter().all(|t| is_simpson(t).unwrap().is_simpson()), "non-Simpson table accepted")?;
    Ok(msg)
}

fn logistic_table() -> Outcome {
    let base = ExperimentSpec { sizes: vec![200], ..ExperimentSpec::new(ExperimentKind::LogisticRatios, SEED) };
    let simpson = run_logistic_ratio_experiment(&ExperimentSpec {
        m: 100,
        conditions: vec![Condition::Simpson],
        ..base.clone()
    })
    .map_err(|e| e.to_string())?;
    let non = run_logistic_ratio_experiment(&ExperimentSpec { m: 200, conditions: vec![Condition::NonSimpson], ..base })
        .map_err(|e| e.to_string())?;
    let (s, n) = (&simpson[0], &non[0]);
    let msg = format!(
        "Simpson {}/{} = {:.4}, non-Simpson {}/{} = {:.4} [{:.4}, {:.4}], non-converged fits {}",
        s.ratio.count,
        s.ratio.m,
        s.ratio.estimate,
        n.ratio.count,
        n.ratio.m,
        n.ratio.estimate,
        n.ratio.lower,
        n.ratio.upper,
        s.not_converged + n.not_converged
    );
    ensure(s.ratio.estimate == 1.0, format!("not every Simpson table flagged: {msg}"))?;
    ensure((0.02..=0.12).contains(&n.ratio.estimate), format!("non-Simpson ratio out of band: {msg}"))?;
    Ok(msg)
}

fn central_difference(problem: &LogisticProblem, theta: &[f64], c: f64) -> Vec<f64> {
    (0..theta.len())
        .map(|i| {
            let h = 1e-5 * theta[i].abs().max(1.0);
            let mut up = theta.to_vec();
            let mut down = theta.to_vec();
            up[i] += h;
            down[i] -= h;
            (problem.objective(&up, c) - problem.objective(&down, c)) / (2.0 * h)
        })
        .collect()
}

fn logistic_solver() -> Outcome {
    let mut rng = stream_rng(SEED, 7);
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    let mut instances = 0;
    while instances < 100 {
        let cells: [u64; 8] = std::array::from_fn(|_| rng.random_range(0..40));
        let t = ContingencyTable222::from_canonical(cells);
        let Ok(ds) = t.encode() else { continue };
        let (n0, n1) = ds.class_counts();
        if n0 == 0 || n1 == 0 {
            continue;
        }
        instances += 1;
        let weights = if rng.random::<bool>() {
            SampleWeights::balanced(&ds.labels()).unwrap()
        } else {
            SampleWeights::uniform(ds.n())
        };
        let problem = LogisticProblem::new(&ds, &weights).map_err(|e| e.to_string())?;
        let c = 10f64.powf(rng.random_range(-6.0..1.0));
        let opts = FitOptions::default();
        let a = problem.fit(c, &opts, None).map_err(|e| e.to_string())?;
        let init: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
        let b = problem.fit(c, &opts, Some(&init)).map_err(|e| e.to_string())?;
        ensure(a.converged && b.converged, format!("no convergence for {cells:?} at c = {c}"))?;
        let g = problem.gradient(&a.theta(), c).norm();
        ensure(g < 1e-8, format!("gradient {g:e} at the optimum for {cells:?}, c = {c}"))?;
        let diff = a.theta().iter().zip(b.theta()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        ensure(diff <= 1e-6, format!("initializations differ by {diff:e} for {cells:?}"))?;
        let theta: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let analytic = problem.gradient(&theta, c);
        let numeric = DVector::from_vec(central_difference(&problem, &theta, c));
        let rel = (&analytic - &numeric).norm() / analytic.norm().max(1e-8);
        ensure(rel <= 1e-5, format!("finite differences off by {rel:e} for {cells:?}"))?;
        worst = (worst.0.max(g), worst.1.max(rel), worst.2.max(diff));
    }
    Ok(format!(
        "100 instances: max gradient {:.1e}, max finite-difference error {:.1e}, max init gap {:.1e}",
        worst.0, worst.1, worst.2
    ))
}

fn cv_demo() -> Outcome {
    let ds = fixtures::pathological_default().encode().unwrap();
    ensure(ds.n() == 600, format!("fixture has {} rows", ds.n()))?;
    let spec = ExperimentSpec::new(ExperimentKind::CvDemo, 0);
    let r = run_cv_demo(&spec, &ds).map_err(|e| e.to_string())?;
    let expected = [[0.003, 0.003], [0.132, 0.117]];
    let mut parts = Vec::new();
    for (arm, want) in r.arms.iter().zip(expected) {
        for (t, w) in arm.trends.iter().zip(want) {
            let base_want = [-0.196, -0.234][t.value];
            ensure(t.baseline_trend < 0.0 && t.trend > 0.0, format!("no reversal: {t:?}"))?;
            ensure(within(t.baseline_trend, base_want, 0.05), format!("baseline {t:?}"))?;
            ensure(within(t.trend, w, 0.05), format!("{:?} weights: {t:?}", arm.weights))?;
        }
        parts.push(format!(
            "{:?} c = {:.3e}: {:+.3}/{:+.3} -> {:+.3}/{:+.3}",
            arm.weights, arm.c, arm.trends[0].baseline_trend, arm.trends[1].baseline_trend, arm.trends[0].trend, arm.trends[1].trend
        ));
    }
    Ok(parts.join("; "))
}

fn wide_extension() -> Outcome {
    let grid = RegGrid::ridge_default();
    let ds = fixtures::loan().encode().unwrap().append_zero_columns(3);
    let r = pathological_regime_numeric(&ds, &grid, false).map_err(|e| e.to_string())?;
    let iv = r[0].intervals.intervals();
    ensure(
        iv.len() == 1 && within(iv[0].lo.value() * 13.0 / 3.0, 1.0, 1e-8) && iv[0].hi.is_none(),
        format!("augmented loan regime {:?}", r[0].intervals),
    )?;
    ensure(r[1..].iter().all(|x| x.intervals.is_empty()), "spurious regime in augmented loan")?;

    let ds = fixtures::bounded_five_feature();
    let r = pathological_regime_numeric(&ds, &grid, false).map_err(|e| e.to_string())?;
    let bounded = r.iter().flat_map(|x| x.intervals.intervals().iter().map(move |i| (x.variable, i))).find(|(_, i)| i.is_bounded());
    let (variable, iv) = bounded.ok_or("no bounded regime")?;
    let (lo, hi) = (iv.lo.value(), iv.hi_value());
    // Independent dense solve of the normal equations.
    let coef = |c: f64| {
        let a = ds.x().transpose() * ds.x() + DMatrix::identity(ds.p(), ds.p()) * c;
        a.lu().solve(&(ds.x().transpose() * ds.y())).unwrap()[variable - 1]
    };
    let s0 = coef(1e-9).signum();
    ensure(
        coef(lo / 2.0).signum() == s0 && coef((lo * hi).sqrt()).signum() == -s0 && coef(hi * 2.0).signum() == s0,
        "bounded regime not confirmed by direct solves",
    )?;
    Ok(format!("augmented loan P = (3/13, inf); 5-feature instance: variable {variable} regime ({lo:.6}, {hi:.6})"))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let fixture = fixtures::pathological_default().encode().unwrap();
    let specs = [
        ExperimentSpec { sizes: vec![50, 200], m: 100, ..ExperimentSpec::new(ExperimentKind::RatioVsN, SEED) },
        ExperimentSpec { sizes: vec![100, 200], m: 300, ..ExperimentSpec::new(ExperimentKind::AvgGammaVsN, SEED) },
        ExperimentSpec { sizes: vec![100], m: 10, ..ExperimentSpec::new(ExperimentKind::LogisticRatios, SEED) },
        ExperimentSpec::new(ExperimentKind::CvDemo, SEED),
    ];
    let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().map_err(|e| e.to_string())?;
    for spec in &specs {
        let data: Option<&Dataset> = (spec.kind == ExperimentKind::CvDemo).then_some(&fixture);
        let mut files = Vec::new();
        for run in 0..3 {
            let report = if run == 2 {
                pool.install(|| run_experiment(spec, data))
            } else {
                run_experiment(spec, data)
            }
            .map_err(|e| e.to_string())?;
            let out = write_run(dir.path(), spec, &report, "run").map_err(|e| e.to_string())?;
            files.push(std::fs::read(out.join("results.csv")).map_err(|e| e.to_string())?);
        }
        ensure(files.iter().all(|f| f == &files[0]), format!("{} results differ between runs", spec.kind))?;
    }
    Ok("results.csv byte-identical across reruns and thread counts for all four experiments".into())
}

fn main() {
    let criteria: [(&str, u64, fn() -> Outcome); 10] = [
        ("exact worked examples", 1, exact_examples),
        ("exact criterion equals grid scan", 30, oracle_equivalence),
        ("single zero and critical point", 60, path_structure),
        ("ridge Monte-Carlo ratios", 300, ridge_monte_carlo),
        ("Simpson prevalence", 180, simpson_prevalence),
        ("logistic ratios", 600, logistic_table),
        ("logistic solver", 30, logistic_solver),
        ("cross-validation reversal", 120, cv_demo),
        ("more than two features", 30, wide_extension),
        ("determinism", 600, determinism),
    ];
    let mut failed = 0;
    for (k, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if elapsed > Duration::from_secs(*budget) => Err(format!("over time budget of {budget} s: {msg}")),
            other => other,
        };
        let (status, msg) = match &outcome {
            Ok(m) => ("PASS", m),
            Err(m) => ("FAIL", m),
        };
        failed += usize::from(outcome.is_err());
        println!("criterion {:>2} {status} {name} ({:.2} s): {msg}", k + 1, elapsed.as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
