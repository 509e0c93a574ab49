//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use phasecoder::bench::Head;
use phasecoder_cli::bench::{self, coder_round_trip_max_err, BenchResult};
use phasecoder_cli::config::RunConfig;
use phasecoder_cli::verify::{self, Check, Hooks, EXACT_TOL};
use serde::Deserialize;

type Verdict = Result<String, String>;
type Criterion = (&'static str, Box<dyn FnOnce() -> Verdict>);

#[derive(Deserialize)]
struct Pinned {
    tolerance: f64,
    rectangles: BTreeMap<String, f64>,
    squares: BTreeMap<String, f64>,
}

fn run_checks(checks: Vec<Check>) -> Verdict {
    let outcomes = verify::run_suite(&checks, &Hooks::default());
    let failed: Vec<String> = outcomes
        .iter()
        .filter(|o| !o.passed())
        .map(|o| o.line())
        .collect();
    if failed.is_empty() {
        Ok(format!("{} properties", outcomes.len()))
    } else {
        Err(failed.join("; "))
    }
}

fn named(checks: Vec<Check>, prefixes: &[&str]) -> Vec<Check> {
    checks
        .into_iter()
        .filter(|c| prefixes.iter().any(|p| c.name.starts_with(p)))
        .collect()
}

fn time_limited(limit: Duration, f: impl FnOnce() -> Verdict) -> Verdict {
    let start = Instant::now();
    let verdict = f()?;
    let elapsed = start.elapsed();
    if elapsed > limit {
        return Err(format!(
            "{verdict}, but took {elapsed:.1?} (limit {limit:?})"
        ));
    }
    Ok(format!("{verdict} in {elapsed:.2?}"))
}

fn round_trip() -> Verdict {
    let mut checks: Vec<Check> = [3, 4, 5, 8]
        .into_iter()
        .flat_map(|n| named(verify::coder_checks(n), &["coder.round_trip"]))
        .collect();
    checks.extend(named(verify::dual_checks(3), &["dual.round_trip"]));
    run_checks(checks)
}

fn coder_properties(n: usize) -> Vec<Check> {
    let mut checks = verify::coder_checks(n);
    checks.extend(verify::dual_checks(n));
    checks
}

fn gradients() -> Verdict {
    let mut checks = named(
        verify::head_checks(),
        &["head.squash_gradient", "head.angle_loss_gradient"],
    );
    checks.extend(verify::backprop_checks());
    run_checks(checks)
}

fn boundary_median(r: &BenchResult, head: Head) -> Result<f64, String> {
    let n = (head != Head::Naive).then_some(3);
    let run = r.run_for(head, n).ok_or(format!("no {head} run"))?;
    let report = run
        .report
        .as_ref()
        .ok_or(format!("{head}: {:?}", run.failure))?;
    Ok(report.boundary.median)
}

fn median(r: &BenchResult, head: Head) -> Result<f64, String> {
    let n = (head != Head::Naive).then_some(3);
    let run = r.run_for(head, n).ok_or(format!("no {head} run"))?;
    let report = run
        .report
        .as_ref()
        .ok_or(format!("{head}: {:?}", run.failure))?;
    Ok(report.overall.median)
}

fn check_bounds(
    measured: &[(String, f64)],
    recorded: &BTreeMap<String, f64>,
    tol: f64,
) -> Result<(), String> {
    let mut bad = Vec::new();
    for (key, value) in measured {
        let Some(&want) = recorded.get(key) else {
            bad.push(format!("{key} not recorded"));
            continue;
        };
        if (value - want).abs() > tol * want.abs() {
            bad.push(format!("{key}={value} vs recorded {want}"));
        }
    }
    if bad.is_empty() {
        Ok(())
    } else {
        Err(bad.join(", "))
    }
}

fn benchmark_directionality() -> Verdict {
    let pinned: Pinned = toml::from_str(
        &fs::read_to_string(
            Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/pinned_bench.toml"),
        )
        .map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;

    let rect = bench::run(&RunConfig::default()).map_err(|e| e.to_string())?;
    let naive_b = boundary_median(&rect, Head::Naive)?;
    let psc_b = boundary_median(&rect, Head::Psc)?;

    let mut squares_cfg = RunConfig {
        heads: vec![Head::Psc, Head::Pscd],
        ..RunConfig::default()
    };
    squares_cfg.dataset.square_fraction = 1.0;
    let squares = bench::run(&squares_cfg).map_err(|e| e.to_string())?;
    let psc_sq = median(&squares, Head::Psc)?;
    let pscd_sq = median(&squares, Head::Pscd)?;

    let summary = format!(
        "boundary median psc {:.3} deg vs naive {:.3} deg; square-only median pscd {:.3} deg vs psc {:.3} deg",
        psc_b.to_degrees(),
        naive_b.to_degrees(),
        pscd_sq.to_degrees(),
        psc_sq.to_degrees()
    );
    if psc_b > 0.5 * naive_b {
        return Err(format!("(a) failed: {summary}"));
    }
    if pscd_sq > psc_sq {
        return Err(format!("(b) failed: {summary}"));
    }

    let mut rect_values = Vec::new();
    for head in Head::ALL {
        rect_values.push((format!("{head}_median_rad"), median(&rect, head)?));
        rect_values.push((
            format!("{head}_boundary_median_rad"),
            boundary_median(&rect, head)?,
        ));
    }
    let square_values = vec![
        ("psc_median_rad".to_string(), psc_sq),
        ("pscd_median_rad".to_string(), pscd_sq),
    ];
    check_bounds(&rect_values, &pinned.rectangles, pinned.tolerance)
        .and_then(|()| check_bounds(&square_values, &pinned.squares, pinned.tolerance))
        .map_err(|e| format!("(c) failed: {e}; {summary}"))?;
    Ok(format!("{summary}; within recorded bounds"))
}

fn n_step_sweep() -> Verdict {
    let mut passed_names: Vec<Vec<String>> = Vec::new();
    for n in [3, 4, 5] {
        let checks = coder_properties(n);
        let outcomes = verify::run_suite(&checks, &Hooks::default());
        if let Some(o) = outcomes.iter().find(|o| !o.passed()) {
            return Err(o.line());
        }
        passed_names.push(
            outcomes
                .iter()
                .map(|o| o.name.replace(&format!("n={n}"), "n"))
                .collect(),
        );
        for head in [Head::Psc, Head::Pscd] {
            let err = coder_round_trip_max_err(head, n)
                .map_err(|e| e.to_string())?
                .unwrap_or(f64::NAN);
            if err.is_nan() || err > EXACT_TOL {
                return Err(format!("{head} n={n}: round trip error {err:e}"));
            }
        }
    }
    if passed_names.windows(2).any(|w| w[0] != w[1]) {
        return Err("property sets differ between step counts".into());
    }
    Ok(format!(
        "{} properties pass for each of n = 3, 4, 5",
        passed_names[0].len()
    ))
}

fn determinism() -> Verdict {
    let mut cfg = RunConfig::default();
    cfg.dataset.train_count = 400;
    cfg.dataset.test_count = 200;
    cfg.train.epochs = 8;
    cfg.n_steps = vec![3, 4];
    cfg.save_models = true;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    cfg.out_dir = dir.path().to_path_buf();
    let mut contents = Vec::new();
    for _ in 0..2 {
        let r = bench::run(&cfg).map_err(|e| e.to_string())?;
        bench::write_outputs(&r, dir.path()).map_err(|e| e.to_string())?;
        let mut files = BTreeMap::new();
        collect(dir.path(), dir.path(), &mut files).map_err(|e| e.to_string())?;
        contents.push(files);
    }
    let (a, b) = (&contents[0], &contents[1]);
    let differing: Vec<&String> = a
        .iter()
        .filter(|(k, v)| b.get(*k) != Some(*v))
        .map(|(k, _)| k)
        .collect();
    if !differing.is_empty() || a.len() != b.len() {
        return Err(format!("files differ: {differing:?}"));
    }
    Ok(format!("{} files byte-identical across two runs", a.len()))
}

fn collect(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) -> std::io::Result<()> {
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect(root, &path, out)?;
        } else {
            let key = path
                .strip_prefix(root)
                .unwrap()
                .to_string_lossy()
                .into_owned();
            out.insert(key, fs::read(&path)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let criteria: Vec<Criterion> = vec![
        (
            "round-trip exactness",
            Box::new(|| time_limited(Duration::from_secs(5), round_trip)),
        ),
        (
            "boundary continuity",
            Box::new(|| run_checks(named(verify::dual_checks(3), &["dual.boundary_continuity"]))),
        ),
        (
            "square-like resolution",
            Box::new(|| {
                run_checks(named(
                    verify::dual_checks(3),
                    &["dual.square_invariance", "dual.branch_robustness"],
                ))
            }),
        ),
        (
            "decode invariances",
            Box::new(|| {
                run_checks(named(
                    verify::coder_checks(3),
                    &["coder.dc_offset", "coder.positive_scale"],
                ))
            }),
        ),
        (
            "gradient checks",
            Box::new(|| time_limited(Duration::from_secs(30), gradients)),
        ),
        (
            "benchmark directionality",
            Box::new(|| time_limited(Duration::from_secs(300), benchmark_directionality)),
        ),
        ("n_step sweep", Box::new(n_step_sweep)),
        ("determinism", Box::new(determinism)),
    ];

    let mut failures = 0;
    for (i, (name, f)) in criteria.into_iter().enumerate() {
        match f() {
            Ok(detail) => println!("[PASS] criterion {}: {name}: {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("[FAIL] criterion {}: {name}: {detail}", i + 1);
            }
        }
    }
    if failures == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failures} criteria failed");
        ExitCode::FAILURE
    }
}
