//! Acceptance suite. Runs every criterion at its stated tolerance and time
//! budget, prints one PASS/FAIL line per criterion, and exits non-zero if
//! any criterion fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use cfgauss::cf_tree::{cf_add, CfVector};
use cfgauss::cli::{cmd_scale, cmd_sweep, run_pipeline, threshold_grid, RunConfig, ScaleRow};
use cfgauss::dataio::{load_csv, CsvOptions, Labels};
use cfgauss::gaussian_refine::{GaussianModel, RefineParams};
use cfgauss::metrics::{build_contingency, entropy, purity, ContingencyTable};
use cfgauss::{CfTreeParams, Dataset, MicroCluster};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;

use common::{abalone_path, direct_diameter, direct_radius, grid_mass, naive_density, rel_close, spd_from};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_budget(elapsed: Duration, budget: Duration) -> Result<(), String> {
    check(elapsed < budget, || format!("took {elapsed:.2?}, budget {budget:?}"))
}

fn abalone() -> Dataset {
    load_csv(abalone_path(), &CsvOptions::abalone()).expect("vendored Abalone data")
}

fn config(threshold: f64, rho: f64) -> RunConfig {
    RunConfig {
        input: abalone_path(),
        csv: CsvOptions::abalone(),
        tree: CfTreeParams::new(8, threshold).unwrap(),
        refine: RefineParams {
            rho,
            ..RefineParams::for_dim(7)
        },
        refine_enabled: true,
        output: None,
        format: cfgauss::cli::Format::Csv,
    }
}

/// Random point sets with dimension 1-10 and size 1-100, plus a random
/// 2-way partition point.
fn random_trials(seed: u64, count: usize) -> Vec<(Vec<Vec<f64>>, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let d = rng.random_range(1..=10);
            let n = rng.random_range(1..=100);
            let scale = 10f64.powf(rng.random_range(-2.0..2.0));
            let offset = rng.random_range(-100.0..100.0);
            let pts = (0..n)
                .map(|_| (0..d).map(|_| offset + scale * rng.random_range(-1.0..1.0)).collect())
                .collect();
            let cut = rng.random_range(0..=n);
            (pts, cut)
        })
        .collect()
}

fn cf_of(points: &[Vec<f64>]) -> CfVector {
    CfVector::from_points(points[0].len(), points.iter().map(Vec::as_slice)).unwrap()
}

fn c1_additivity() -> Outcome {
    let start = Instant::now();
    let trials = random_trials(1, 1000);
    let mut worst = 0.0f64;
    for (pts, cut) in &trials {
        let whole = cf_of(pts);
        let d = pts[0].len();
        let part = |s: &[Vec<f64>]| CfVector::from_points(d, s.iter().map(Vec::as_slice)).unwrap();
        let sum = cf_add(&part(&pts[..*cut]), &part(&pts[*cut..])).unwrap();
        check(sum.n() == whole.n(), || format!("n {} vs {}", sum.n(), whole.n()))?;
        for (a, b) in sum.ls().iter().chain(sum.ss()).zip(whole.ls().iter().chain(whole.ss())) {
            let rel = (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
            worst = worst.max(if a == b { 0.0 } else { rel });
            check(rel_close(*a, *b, 1e-9), || format!("component {a} vs {b}"))?;
        }
    }
    within_budget(start.elapsed(), Duration::from_secs(5))?;
    Ok(format!(
        "1000 trials, worst relative error {worst:.1e}, {:.2?}",
        start.elapsed()
    ))
}

fn c2_radius_diameter() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for (pts, _) in random_trials(1, 1000) {
        let cf = cf_of(&pts);
        for (got, want) in [
            (cf.radius().unwrap(), direct_radius(&pts)),
            (cf.diameter().unwrap(), direct_diameter(&pts)),
        ] {
            let err = (got - want).abs() / want.abs().max(1.0);
            worst = worst.max(err);
            check(rel_close(got, want, 1e-6), || {
                format!("{got} vs direct {want} (n = {})", pts.len())
            })?;
        }
    }
    within_budget(start.elapsed(), Duration::from_secs(5))?;
    Ok(format!(
        "1000 trials, worst relative error {worst:.1e}, {:.2?}",
        start.elapsed()
    ))
}

fn model(mu: &[f64], sigma: &[Vec<f64>]) -> GaussianModel {
    let d = mu.len();
    GaussianModel::new(mu.to_vec(), DMatrix::from_fn(d, d, |i, j| sigma[i][j])).unwrap()
}

fn c3_density() -> Outcome {
    let start = Instant::now();
    let std1 = model(&[0.0], &[vec![1.0]]).log_density(&[0.0]).exp();
    let want1 = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    check((std1 - want1).abs() < 1e-12, || format!("1-D mode {std1} vs {want1}"))?;
    let id2 = model(&[0.0, 0.0], &[vec![1.0, 0.0], vec![0.0, 1.0]])
        .log_density(&[0.0, 0.0])
        .exp();
    let want2 = 1.0 / (2.0 * std::f64::consts::PI);
    check((id2 - want2).abs() < 1e-12, || format!("2-D mode {id2} vs {want2}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_mass = 0.0f64;
    for _ in 0..10 {
        for d in 1..=2 {
            let a: Vec<f64> = (0..d * d).map(|_| rng.random_range(-1.5..1.5)).collect();
            let sigma = spd_from(&a, d, 0.2);
            let mu: Vec<f64> = (0..d).map(|_| rng.random_range(-5.0..5.0)).collect();
            let m = model(&mu, &sigma);
            let sd: Vec<f64> = (0..d).map(|k| sigma[k][k].sqrt()).collect();
            let mass = grid_mass(|x| m.log_density(x).exp(), &mu, &sd, if d == 1 { 2000 } else { 300 });
            worst_mass = worst_mass.max((mass - 1.0).abs());
            check((mass - 1.0).abs() < 0.02, || format!("d = {d}: mass {mass}"))?;
        }
    }

    let mut worst_naive = 0.0f64;
    for _ in 0..1000 {
        let d = rng.random_range(1..=3);
        let a: Vec<f64> = (0..d * d).map(|_| rng.random_range(-1.5..1.5)).collect();
        let sigma = spd_from(&a, d, 0.5);
        let mu: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
        let got = model(&mu, &sigma).log_density(&x);
        let want = naive_density(&x, &mu, &sigma).ln();
        worst_naive = worst_naive.max((got - want).abs());
        check((got - want).abs() < 1e-9, || {
            format!("log density {got} vs naive {want}")
        })?;
    }
    within_budget(start.elapsed(), Duration::from_secs(10))?;
    Ok(format!(
        "modes exact to 1e-12, worst mass error {worst_mass:.1e}, worst naive gap {worst_naive:.1e}, {:.2?}",
        start.elapsed()
    ))
}

fn phase_scores(ds: &Dataset, clusters: &[MicroCluster]) -> (f64, f64) {
    let pairs = clusters
        .iter()
        .enumerate()
        .flat_map(|(c, mc)| mc.members.iter().map(move |&r| (r, c)));
    let t: ContingencyTable = build_contingency(pairs, ds.class_ids().unwrap()).unwrap();
    (purity(&t).unwrap(), entropy(&t).unwrap())
}

/// Labeled uniform blobs with dimension 1-5.
fn random_labeled(rng: &mut ChaCha8Rng) -> Dataset {
    let d = rng.random_range(1..=5);
    let classes = rng.random_range(2..=6);
    let n = rng.random_range(50..=400);
    let centers: Vec<Vec<f64>> = (0..classes)
        .map(|_| (0..d).map(|_| rng.random_range(-4.0..4.0)).collect())
        .collect();
    let mut rows = Vec::with_capacity(n);
    let mut ids = Vec::with_capacity(n);
    for _ in 0..n {
        let c = rng.random_range(0..classes);
        rows.push(
            centers[c]
                .iter()
                .map(|m| m + rng.random_range(-1.5..1.5))
                .collect::<Vec<f64>>(),
        );
        ids.push(c);
    }
    let names = (0..d).map(|i| format!("x{i}")).collect();
    Dataset::from_rows(names, &rows)
        .unwrap()
        .with_labels(Labels {
            column: "class".into(),
            ids,
            names: (0..classes).map(|c| c.to_string()).collect(),
        })
        .unwrap()
}

fn c4_monotonicity() -> Outcome {
    let start = Instant::now();
    let ds = abalone();
    let mut cases: Vec<(Dataset, CfTreeParams, RefineParams)> =
        vec![(ds, CfTreeParams::new(8, 0.27).unwrap(), RefineParams::for_dim(7))];
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..200 {
        let ds = random_labeled(&mut rng);
        let tree = CfTreeParams::new(rng.random_range(2..=10), rng.random_range(0.5..4.0)).unwrap();
        let refine = RefineParams {
            rho: rng.random_range(0.01..=0.5),
            n_min: rng.random_range(2..=ds.dim() + 3),
            ..RefineParams::for_dim(ds.dim())
        };
        cases.push((ds, tree, refine));
    }
    let mut splits = 0;
    for (i, (ds, tree, refine)) in cases.iter().enumerate() {
        let out = run_pipeline(ds, tree, Some(refine)).map_err(|e| e.to_string())?;
        splits += out.phase2.len() - out.phase1.len();
        let (p1, e1) = phase_scores(ds, &out.phase1);
        let (p2, e2) = phase_scores(ds, &out.phase2);
        let which = if i == 0 {
            "Abalone".to_string()
        } else {
            format!("random dataset {i}")
        };
        check(p2 >= p1 - 1e-12, || format!("{which}: purity {p1} -> {p2}"))?;
        check(e2 <= e1 + 1e-12, || format!("{which}: entropy {e1} -> {e2}"))?;
    }
    within_budget(start.elapsed(), Duration::from_secs(30))?;
    Ok(format!(
        "Abalone + 200 random datasets, {splits} splits, {:.2?}",
        start.elapsed()
    ))
}

fn c5_counts() -> Outcome {
    let ds = abalone();
    let cfg = config(0.27, RefineParams::DEFAULT_RHO);
    let out = run_pipeline(&ds, &cfg.tree, Some(&cfg.refine)).map_err(|e| e.to_string())?;
    let (p1, p2) = (out.phase1.len(), out.phase2.len());
    check((15..=60).contains(&p1), || {
        format!("phase-1 count {p1} outside [15, 60]")
    })?;
    check(p2 > p1, || {
        format!(
            "phase-2 count {p2} not above phase-1 count {p1} at rho = {}",
            cfg.refine.rho
        )
    })?;
    Ok(format!(
        "T = 0.27, B = 8, rho = {}: {p1} -> {p2} micro-clusters",
        cfg.refine.rho
    ))
}

fn c6_sweep() -> Outcome {
    let start = Instant::now();
    let ds = abalone();
    let cfg = config(0.27, RefineParams::DEFAULT_RHO);
    let grid = threshold_grid(0.1, 1.0, 0.1).map_err(|e| e.to_string())?;
    let rows = cmd_sweep(&cfg, &ds, &grid).map_err(|e| e.to_string())?;
    let (lo, hi) = (&rows[0], &rows[rows.len() - 1]);
    let table: Vec<String> = rows
        .iter()
        .map(|r| format!("{:.1}:{}/{}", r.threshold, r.phase2_count, r.phase1_count))
        .collect();
    let detail = table.join(" ");
    check(lo.phase1_count > hi.phase1_count, || {
        format!(
            "phase-1 count {} at T = 0.1 not above {} at T = 1.0",
            lo.phase1_count, hi.phase1_count
        )
    })?;
    check(lo.ratio >= hi.ratio, || {
        format!(
            "ratio {:.4} at T = 0.1 below ratio {:.4} at T = 1.0 [{detail}]",
            lo.ratio, hi.ratio
        )
    })?;
    check(lo.ratio >= 1.2, || {
        format!("ratio {:.4} at T = 0.1 below 1.2", lo.ratio)
    })?;
    within_budget(start.elapsed(), Duration::from_secs(60))?;
    Ok(format!(
        "ratio {:.3} at T = 0.1, {:.3} at T = 1.0, {:.2?}",
        lo.ratio,
        hi.ratio,
        start.elapsed()
    ))
}

/// Coefficient of determination of the least-squares line through `(x, y)`.
fn r_squared(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - (my + slope * (a - mx))).powi(2))
        .sum();
    let ss_tot: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    1.0 - ss_res / ss_tot
}

fn c7_scale() -> Outcome {
    let start = Instant::now();
    let ds = abalone();
    let cfg = config(0.27, RefineParams::DEFAULT_RHO);
    let rows: Vec<ScaleRow> = cmd_scale(&cfg, &ds, 8, 15).map_err(|e| e.to_string())?;
    let x: Vec<f64> = rows.iter().map(|r| r.rows as f64).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.wall_ms).collect();
    let r2 = r_squared(&x, &y);
    let ratio = y[7] / y[3];
    check(rows.last().map(|r| r.rows) == Some(33_416), || {
        "k = 8 should hold 33416 rows".into()
    })?;
    check(r2 >= 0.95, || format!("R^2 {r2:.4} below 0.95 (wall ms {y:.3?})"))?;
    check(ratio <= 2.6, || format!("wall(8)/wall(4) = {ratio:.3} above 2.6"))?;
    within_budget(start.elapsed(), Duration::from_secs(120))?;
    Ok(format!(
        "R^2 {r2:.4}, wall(8)/wall(4) {ratio:.3}, wall(8) {:.1} ms, {:.2?}",
        y[7],
        start.elapsed()
    ))
}

fn c8_metrics_oracle() -> Outcome {
    let t = ContingencyTable::from_counts(vec![vec![3, 1], vec![0, 2]]).unwrap();
    let e = entropy(&t).unwrap();
    let p = purity(&t).unwrap();
    check((e - 0.540852).abs() < 1e-6, || format!("entropy {e}"))?;
    check((p - 0.833333).abs() < 1e-6, || format!("purity {p}"))?;
    Ok(format!("entropy {e:.6}, purity {p:.6}"))
}

fn c9_determinism() -> Outcome {
    let path = abalone_path();
    let args = [
        "cluster",
        "--input",
        path.to_str().unwrap(),
        "--preset",
        "abalone",
        "--rho",
        "0.2",
    ];
    let run = || -> Result<Vec<u8>, String> {
        let out = Command::new(env!("CARGO_BIN_EXE_cfgauss"))
            .args(args)
            .output()
            .map_err(|e| e.to_string())?;
        check(out.status.success(), || {
            String::from_utf8_lossy(&out.stderr).into_owned()
        })?;
        let mut v: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
        check(v["timings"].is_object(), || "report has no timings block".into())?;
        v.as_object_mut().unwrap().remove("timings");
        serde_json::to_vec_pretty(&v).map_err(|e| e.to_string())
    };
    let (a, b) = (run()?, run()?);
    check(a == b, || "reports differ outside the timings block".into())?;
    Ok(format!("two runs, {} identical bytes after removing timings", a.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("1 CF additivity", c1_additivity),
        ("2 radius/diameter oracle", c2_radius_diameter),
        ("3 Gaussian density", c3_density),
        ("4 refinement monotonicity", c4_monotonicity),
        ("5 micro-cluster counts", c5_counts),
        ("6 sweep shape", c6_sweep),
        ("7 scalability shape", c7_scale),
        ("8 metrics hand oracle", c8_metrics_oracle),
        ("9 determinism", c9_determinism),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        match f() {
            Ok(detail) => println!("PASS  criterion {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  criterion {name}: {why}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
