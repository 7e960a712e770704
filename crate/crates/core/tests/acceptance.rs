//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.
//!
//! Run with `cargo test -p minkdetect-core --test acceptance`.

use std::error::Error as StdError;
use std::fmt::Write as _;
use std::panic;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use minkdetect::detector::{sweep, CellResult, NoHooks, Stages, SweepPlan};
use minkdetect::distance::{cross_distances, minkowski, pairwise_intra, DistanceSample};
use minkdetect::kde::{BandwidthRule, Kde};
use minkdetect::report;
use minkdetect::stats::{kl_divergence, rank_sum_exact, rank_sum_normal, Significance};
use minkdetect::store::{
    build_slice, generate_synthetic, ClassParams, EmbeddingRecord, ExperimentConfig, Label, Role,
    SyntheticSpec, RESPONSE_PAIRS,
};
use minkdetect::Norm;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, StandardNormal};
use serde::Deserialize;

type BoxError = Box<dyn StdError + Send + Sync>;
type Check = Result<(bool, String), BoxError>;
type Criterion = (&'static str, fn() -> Check);

const REFERENCE: &str = include_str!("data/kde_reference.json");

fn data(
    q: u32,
    r: u32,
    t: u32,
    d: usize,
    hall_sd: f64,
    gen_sd: f64,
    seed: u64,
) -> (Vec<EmbeddingRecord>, Vec<EmbeddingRecord>) {
    generate_synthetic(&SyntheticSpec {
        q,
        r,
        t,
        d,
        hallucinated: ClassParams::isotropic(d, 0.0, hall_sd),
        genuine: ClassParams::isotropic(d, 0.0, gen_sd),
        seed,
    })
    .expect("synthetic data")
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn pair_count_fidelity() -> Check {
    let started = Instant::now();
    let (train, test) = data(64, 16, 4, 8, 2.0, 1.0, 1);
    let config = ExperimentConfig::new(64, 16, 1, Norm::EUCLIDEAN);
    let train_slice = build_slice(&train, &config, Role::Train)?;
    let test_slice = build_slice(&test, &config, Role::Test)?;

    let mut intra = Vec::new();
    for label in Label::ALL {
        intra.push(
            DistanceSample::intra(&train_slice, label, config.p)?
                .values
                .len(),
        );
    }
    let pool: Vec<&[f64]> = Label::ALL
        .iter()
        .flat_map(|&l| train_slice.class(l).iter().map(|r| r.vector.as_slice()))
        .collect();
    let mut cross_sizes = std::collections::BTreeSet::new();
    let mut test_points = 0;
    for record in Label::ALL.iter().flat_map(|&l| test_slice.class(l)) {
        cross_sizes.insert(cross_distances(&record.vector, &pool, config.p)?.len());
        test_points += 1;
    }
    let elapsed = started.elapsed();
    let pass = intra == [523_776, 523_776]
        && cross_sizes.len() == 1
        && cross_sizes.contains(&2048)
        && test_points == 512
        && elapsed < Duration::from_secs(30);
    Ok((
        pass,
        format!(
            "intra per class {intra:?} (want 523776), cross sizes {cross_sizes:?} over {test_points} test points (want 2048), {} (< 30s)",
            secs(elapsed)
        ),
    ))
}

fn generic_minkowski(x: &[f64], y: &[f64], p: f64) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b).abs().powf(p))
        .sum::<f64>()
        .powf(1.0 / p)
}

fn random_vector(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Vec<f64> {
    (0..d)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            scale * z
        })
        .collect()
}

fn distance_math() -> Check {
    const PAIRS: usize = 10_000;
    const TOL: f64 = 1e-12;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let norms = [
        Norm::FRACTIONAL,
        Norm::MANHATTAN,
        Norm::new(1.5)?,
        Norm::EUCLIDEAN,
        Norm::new(3.0)?,
    ];
    let mut failures = Vec::new();
    let mut fractional_triangle_violations = 0;

    for i in 0..PAIRS {
        let d = rng.random_range(1..=64);
        let scale = 10f64.powi(rng.random_range(-3..=3));
        let x = random_vector(&mut rng, d, scale);
        let y = random_vector(&mut rng, d, scale);
        let z = random_vector(&mut rng, d, scale);
        let c: f64 = rng.random_range(-50.0..50.0);
        let cx: Vec<f64> = x.iter().map(|v| c * v).collect();
        let cy: Vec<f64> = y.iter().map(|v| c * v).collect();

        for &p in &norms {
            let dxy = minkowski(&x, &y, p)?;
            if dxy.to_bits() != minkowski(&y, &x, p)?.to_bits() {
                failures.push(format!("pair {i} p={p}: symmetry"));
            }
            if minkowski(&x, &x, p)? != 0.0 || dxy <= 0.0 {
                failures.push(format!("pair {i} p={p}: identity"));
            }
            let scaled = minkowski(&cx, &cy, p)?;
            if (scaled - c.abs() * dxy).abs() > TOL * c.abs() * dxy {
                failures.push(format!(
                    "pair {i} p={p}: scaling {scaled} vs {}",
                    c.abs() * dxy
                ));
            }
            let generic = generic_minkowski(&x, &y, p.get());
            if (generic - dxy).abs() > 1e-10 * dxy {
                failures.push(format!("pair {i} p={p}: formula {dxy} vs {generic}"));
            }
            let dxz = minkowski(&x, &z, p)?;
            let dyz = minkowski(&y, &z, p)?;
            let holds = dxz <= (dxy + dyz) * (1.0 + TOL);
            if p.get() >= 1.0 && !holds {
                failures.push(format!("pair {i} p={p}: triangle"));
            }
            if p.get() < 1.0 && !holds {
                fractional_triangle_violations += 1;
            }
        }
        let d05 = minkowski(&x, &y, Norm::FRACTIONAL)?;
        let d1 = minkowski(&x, &y, Norm::MANHATTAN)?;
        let d2 = minkowski(&x, &y, Norm::EUCLIDEAN)?;
        if !(d05 >= d1 * (1.0 - TOL) && d1 >= d2 * (1.0 - TOL)) {
            failures.push(format!("pair {i}: ordering {d05} {d1} {d2}"));
        }
    }

    let mut oracle_mismatches = 0;
    let mut oracle_values = 0;
    for m in [2usize, 3, 7, 20, 50, 100] {
        let points: Vec<Vec<f64>> = (0..m).map(|_| random_vector(&mut rng, 16, 1.0)).collect();
        for &p in &norms {
            let fast = pairwise_intra(&points, p)?;
            let mut slow = Vec::new();
            for a in 0..m {
                for b in a + 1..m {
                    slow.push(minkowski(&points[a], &points[b], p)?);
                }
            }
            oracle_values += slow.len();
            if fast.len() != slow.len() {
                oracle_mismatches += slow.len();
                continue;
            }
            oracle_mismatches += fast
                .iter()
                .zip(&slow)
                .filter(|(a, b)| a.to_bits() != b.to_bits())
                .count();
        }
    }

    Ok((
        failures.is_empty() && oracle_mismatches == 0,
        format!(
            "{PAIRS} pairs x {} norms: {} property failures{}; double-loop oracle {oracle_mismatches}/{oracle_values} mismatches; p=0.5 triangle violations (expected, not a metric): {fractional_triangle_violations}",
            norms.len(),
            failures.len(),
            failures.first().map(|f| format!(" (first: {f})")).unwrap_or_default(),
        ),
    ))
}

fn random_sample(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = rng.random_range(2..=500);
    match rng.random_range(0..3) {
        0 => {
            let dist =
                Normal::new(rng.random_range(-5.0..5.0), rng.random_range(0.1..3.0)).unwrap();
            (0..n).map(|_| dist.sample(rng)).collect()
        }
        1 => {
            let dist = Exp::new(rng.random_range(0.2..5.0)).unwrap();
            (0..n).map(|_| dist.sample(rng)).collect()
        }
        _ => (0..n).map(|_| rng.random_range(0..5) as f64).collect(),
    }
}

fn kl_properties() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut negative = 0;
    let mut worst_self: f64 = 0.0;
    let mut min_kl = f64::INFINITY;
    for _ in 0..1000 {
        let a = random_sample(&mut rng);
        let b = random_sample(&mut rng);
        let kl = kl_divergence(&a, &b, 100, 1e-10)?;
        min_kl = min_kl.min(kl);
        if kl.is_nan() || kl < 0.0 {
            negative += 1;
        }
        worst_self = worst_self.max(kl_divergence(&a, &a, 100, 1e-10)?);
    }
    // P = (0.5, 0.5), Q = (0.9, 0.1) over two bins.
    let p = [0.0, 1.0];
    let q: Vec<f64> = [0.0; 9].into_iter().chain([1.0]).collect();
    let two_bin = kl_divergence(&p, &q, 2, 1e-12)?;
    Ok((
        negative == 0 && worst_self <= 1e-12 && (two_bin - 0.5108).abs() <= 1e-3,
        format!(
            "1000 pairs: {negative} negative (min {min_kl:.3e}); max KL(P,P) {worst_self:.1e} (<= 1e-12); two-bin {two_bin:.6} (0.5108 +/- 1e-3)"
        ),
    ))
}

/// Kolmogorov-Smirnov distance between a sample and U(0, 1).
fn ks_uniform(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| ((i + 1) as f64 / n - v).max(v - i as f64 / n))
        .fold(0.0, f64::max)
}

fn wilcoxon_calibration() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    let mut compared = 0;
    for na in 8..=10 {
        for nb in 8..=10 {
            for rep in 0..200 {
                let shift = (rep % 5) as f64 * 0.4;
                let a: Vec<f64> = (0..na).map(|_| StandardNormal.sample(&mut rng)).collect();
                let b: Vec<f64> = (0..nb)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        shift + z
                    })
                    .collect();
                let exact = rank_sum_exact(&a, &b)?.p_value;
                let normal = rank_sum_normal(&a, &b)?.p_value;
                worst = worst.max((exact - normal).abs());
                compared += 1;
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut null_p = Vec::with_capacity(200);
    for _ in 0..200 {
        let a: Vec<f64> = (0..5000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let b: Vec<f64> = (0..5000).map(|_| StandardNormal.sample(&mut rng)).collect();
        null_p.push(rank_sum_normal(&a, &b)?.p_value);
    }
    let ks = ks_uniform(null_p);
    Ok((
        worst <= 0.02 && ks < 0.1,
        format!("exact vs normal max |dp| {worst:.4} over {compared} tests (<= 0.02); null KS statistic {ks:.4} over 200 pairs of 5000 (< 0.1)"),
    ))
}

/// Adaptive Simpson on `[a, b]`.
fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn step(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 40)
}

#[derive(Deserialize)]
struct ReferenceModel {
    name: String,
    bandwidth: f64,
    samples: Vec<f64>,
    queries: Vec<f64>,
    log_density: Vec<f64>,
}

#[derive(Deserialize)]
struct Reference {
    models: Vec<ReferenceModel>,
}

fn kde_correctness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let rules = [BandwidthRule::Scott, BandwidthRule::Silverman];
    let mut worst_mass: f64 = 0.0;
    for i in 0..20 {
        let m = rng.random_range(2..=300);
        let centre = rng.random_range(0.5..20.0);
        let spread = rng.random_range(0.1..5.0);
        let dist = Normal::new(centre, spread).unwrap();
        let samples: Vec<f64> = (0..m).map(|_| dist.sample(&mut rng)).collect();
        let kde = match i % 3 {
            2 => Kde::with_bandwidth(&samples, spread * rng.random_range(0.05..1.0))?,
            k => Kde::fit(&samples, rules[k])?,
        };
        let h = kde.bandwidth();
        let lo = kde.samples()[0] - 10.0 * h;
        let hi = kde.samples()[kde.len() - 1] + 10.0 * h;
        let density = |x: f64| kde.density(x).expect("finite query");
        let segments = ((hi - lo) / h).ceil() as usize;
        let width = (hi - lo) / segments as f64;
        let mass: f64 = (0..segments)
            .map(|s| {
                let a = lo + s as f64 * width;
                simpson(&density, a, a + width, 1e-12 / segments as f64)
            })
            .sum();
        worst_mass = worst_mass.max((mass - 1.0).abs());
    }

    let reference: Reference = serde_json::from_str(REFERENCE)?;
    let mut worst_rel: f64 = 0.0;
    let mut worst_name = String::new();
    let mut points = 0;
    for model in &reference.models {
        let kde = Kde::with_bandwidth(&model.samples, model.bandwidth)?;
        for (&x, &expected) in model.queries.iter().zip(&model.log_density) {
            let got = kde.log_density(x)?;
            let rel = ((got - expected) / expected).abs();
            if rel > worst_rel {
                worst_rel = rel;
                worst_name = format!("{} x={x}", model.name);
            }
            points += 1;
        }
    }

    let peak = Kde::with_bandwidth(&[0.0], 1.0)?.log_density(0.0)?;
    Ok((
        worst_mass <= 1e-3 && worst_rel <= 1e-9 && (peak + 0.9189).abs() <= 1e-4,
        format!(
            "20 models: max |mass - 1| {worst_mass:.2e} (<= 1e-3); reference max rel err {worst_rel:.2e} over {points} points incl. 20h tails (<= 1e-9, worst {worst_name}); single-sample peak {peak:.6} (-0.9189 +/- 1e-4)"
        ),
    ))
}

fn run(
    train: &[EmbeddingRecord],
    test: Option<&[EmbeddingRecord]>,
    q: usize,
    r: Vec<usize>,
    n: Vec<u8>,
    p: Vec<Norm>,
    stages: Stages,
) -> Result<Vec<CellResult>, BoxError> {
    let plan = SweepPlan::new(r, n, p, stages);
    let base = ExperimentConfig::new(q, plan.r_values[0], plan.n_values[0], plan.p_values[0]);
    Ok(sweep(train, test, &plan, &base, &NoHooks)?)
}

fn all_r() -> Vec<usize> {
    RESPONSE_PAIRS.iter().map(|(r, _)| *r).collect()
}

fn end_to_end_separation() -> Check {
    const SEEDS: u64 = 10;
    let started = Instant::now();

    let (mut correct, mut total) = (0, 0);
    let mut per_seed = String::new();
    for seed in 0..SEEDS {
        let (train, test) = data(16, 8, 2, 8, 2.0, 1.0, seed);
        let cells = run(
            &train,
            Some(&test),
            16,
            vec![8],
            (1..=10).collect(),
            vec![Norm::EUCLIDEAN],
            Stages::DETECT,
        )?;
        for cell in &cells {
            let e = cell.evaluation.as_ref().expect("evaluated");
            correct += e.confusion.tp + e.confusion.tn;
            total += e.confusion.total();
        }
        let first = cells[0].evaluation.as_ref().unwrap().accuracy;
        let _ = write!(per_seed, "{}{first:.3}", if seed == 0 { "" } else { " " });
    }
    let separated = correct as f64 / total as f64;

    let (mut null_correct, mut null_total) = (0, 0);
    let (mut ns, mut comparisons) = (0, 0);
    for seed in 0..SEEDS {
        let (train, test) = data(16, 16, 4, 8, 1.0, 1.0, 1000 + seed);
        for cell in run(
            &train,
            None,
            16,
            all_r(),
            vec![1],
            Norm::GRID.to_vec(),
            Stages::ANALYZE,
        )? {
            let c = cell.comparison.expect("compared");
            ns += usize::from(c.significance == Significance::NotSignificant);
            comparisons += 1;
        }
        for cell in run(
            &train,
            Some(&test),
            16,
            vec![8],
            vec![1],
            Norm::GRID.to_vec(),
            Stages::DETECT,
        )? {
            let e = cell.evaluation.expect("evaluated");
            null_correct += e.confusion.tp + e.confusion.tn;
            null_total += e.confusion.total();
        }
    }
    let null_accuracy = null_correct as f64 / null_total as f64;
    let ns_share = ns as f64 / comparisons as f64;
    let elapsed = started.elapsed();

    Ok((
        separated >= 0.85
            && (0.40..=0.60).contains(&null_accuracy)
            && ns_share >= 0.90
            && elapsed < Duration::from_secs(120),
        format!(
            "N(0,I) vs N(0,4I) r=8 p=2 accuracy {separated:.4} over {total} predictions, seeds 0-9 (>= 0.85; per seed: {per_seed}); identical classes accuracy {null_accuracy:.4} over {null_total} (in [0.40, 0.60]); ns in {ns}/{comparisons} cells = {:.1}% (>= 90%); {} (< 2 min)",
            100.0 * ns_share,
            secs(elapsed)
        ),
    ))
}

fn unequal_variance_echo() -> Check {
    let (train, _) = data(16, 16, 4, 8, 2.0, 1.0, 7);
    let cells = run(
        &train,
        None,
        16,
        all_r(),
        (1..=10).collect(),
        Norm::GRID.to_vec(),
        Stages::ANALYZE,
    )?;
    let mut bad = Vec::new();
    let mut worst_p: f64 = 0.0;
    let mut min_delta = f64::INFINITY;
    for cell in &cells {
        let c = cell.comparison.as_ref().expect("compared");
        worst_p = worst_p.max(c.wilcoxon_p);
        min_delta = min_delta.min(c.median_difference);
        if !(c.median_difference > 0.0 && c.wilcoxon_p < 0.01) {
            bad.push(c.cell.to_string());
        }
    }
    Ok((
        bad.is_empty() && cells.len() == 210,
        format!(
            "{} cells: min delta {min_delta:.4} (> 0), max Wilcoxon p {worst_p:.2e} (< 0.01), failing cells {bad:?}",
            cells.len()
        ),
    ))
}

fn render(cells: &[CellResult]) -> Result<Vec<u8>, BoxError> {
    let comparisons: Vec<_> = cells.iter().filter_map(|c| c.comparison.as_ref()).collect();
    let evaluations: Vec<_> = cells.iter().filter_map(|c| c.evaluation.as_ref()).collect();
    let mut out = Vec::new();
    report::write_comparison_csv(&mut out, comparisons.iter().copied())?;
    report::write_boxplot_csv(&mut out, comparisons.iter().copied())?;
    report::write_eval_csv(&mut out, evaluations.iter().copied())?;
    for e in &evaluations {
        report::write_scores_csv(&mut out, &e.scores)?;
    }
    Ok(out)
}

fn determinism() -> Check {
    let mut outputs = Vec::new();
    for (threads, parallel_cells) in [(1, false), (4, true)] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()?;
        let bytes = pool.install(|| -> Result<Vec<u8>, BoxError> {
            let (train, test) = data(4, 16, 4, 8, 2.0, 1.0, 8);
            let mut plan = SweepPlan::full(Stages::ALL);
            plan.parallel_cells = parallel_cells;
            let base = ExperimentConfig::new(4, 4, 1, Norm::FRACTIONAL);
            render(&sweep(&train, Some(&test), &plan, &base, &NoHooks)?)
        })?;
        outputs.push(bytes);
    }
    let same = outputs[0] == outputs[1];
    Ok((
        same && !outputs[0].is_empty(),
        format!(
            "full 210-cell sweep, 1 thread vs 4 threads with parallel cells: {} bytes each, identical: {same}",
            outputs[0].len()
        ),
    ))
}

fn main() -> ExitCode {
    let checks: [Criterion; 8] = [
        ("pair-count fidelity", pair_count_fidelity),
        ("distance math", distance_math),
        ("KL properties", kl_properties),
        ("Wilcoxon calibration", wilcoxon_calibration),
        ("KDE correctness", kde_correctness),
        ("end-to-end separation", end_to_end_separation),
        ("unequal-variance significance", unequal_variance_echo),
        ("thread-count determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let started = Instant::now();
        let (pass, detail) = match panic::catch_unwind(check) {
            Ok(Ok(outcome)) => outcome,
            Ok(Err(e)) => (false, format!("error: {e}")),
            Err(_) => (false, "panicked".to_string()),
        };
        failed += usize::from(!pass);
        println!(
            "{} [{}] {name}: {detail} [{}]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            secs(started.elapsed())
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        checks.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
