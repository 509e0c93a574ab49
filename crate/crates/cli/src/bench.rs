//! `bench`: train and evaluate heads, write CSV/JSON results.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use phasecoder::bench::{
    evaluate, generate_dataset, train, EpochLoss, EvalReport, Head, Regressor, Sample,
};
use phasecoder::coder::phase_distance;
use phasecoder::{
    angular_distance, decode, decode_dual_to_angle, encode, encode_dual, Phase, SymmetryConfig,
};
use serde::Serialize;

use crate::config::RunConfig;
use crate::snapshot::{self, write_schema_row, SCHEMA_VERSION};

/// Grid size for the coder-level round-trip column.
const ROUND_TRIP_GRID: usize = 10_000;

#[derive(Debug, Clone)]
pub struct HeadRun {
    pub head: Head,
    /// `None` for the naive head, which does not use a code.
    pub n_step: Option<usize>,
    /// `None` on success, otherwise why training stopped.
    pub failure: Option<String>,
    pub loss_curve: Vec<EpochLoss>,
    pub report: Option<EvalReport>,
    pub model: Option<Regressor>,
    pub coder_round_trip_max_err: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct BenchResult {
    pub config: RunConfig,
    pub runs: Vec<HeadRun>,
}

impl BenchResult {
    pub fn run_for(&self, head: Head, n_step: Option<usize>) -> Option<&HeadRun> {
        self.runs
            .iter()
            .find(|r| r.head == head && r.n_step == n_step)
    }

    pub fn report_rows(&self) -> Vec<ReportRow> {
        self.runs.iter().map(ReportRow::from).collect()
    }
}

/// Worst round-trip error of the clean coder for a head at `n_step`.
pub fn coder_round_trip_max_err(head: Head, n_step: usize) -> phasecoder::Result<Option<f64>> {
    match head {
        Head::Naive => Ok(None),
        Head::Psc => {
            let mut worst: f64 = 0.0;
            for i in 0..ROUND_TRIP_GRID {
                let phi = Phase::new(-PI + 2.0 * PI * i as f64 / ROUND_TRIP_GRID as f64)?;
                worst = worst.max(phase_distance(decode(&encode(phi, n_step)?)?, phi));
            }
            Ok(Some(worst))
        }
        Head::Pscd => {
            let rect = SymmetryConfig::rectangle();
            let mut worst: f64 = 0.0;
            for i in 0..ROUND_TRIP_GRID {
                let theta = -FRAC_PI_2 + PI * i as f64 / ROUND_TRIP_GRID as f64;
                let back = decode_dual_to_angle(&encode_dual(theta, n_step)?)?;
                worst = worst.max(angular_distance(back, theta, &rect));
            }
            Ok(Some(worst))
        }
    }
}

fn load_or_generate(
    file: Option<&Path>,
    count: usize,
    cfg: &RunConfig,
    seed: u64,
) -> anyhow::Result<Vec<Sample>> {
    match file {
        Some(path) => snapshot::load_dataset(path),
        None => Ok(generate_dataset(
            count,
            cfg.dataset.square_fraction,
            cfg.dataset.noise_sigma,
            seed,
        )?),
    }
}

/// Trains and evaluates every requested head for every `n_step`.
///
/// The naive head ignores `n_step` and is run once. Divergence is recorded
/// on the affected run and does not stop the others.
pub fn run(cfg: &RunConfig) -> anyhow::Result<BenchResult> {
    cfg.validate()?;
    let d = &cfg.dataset;
    let train_set = load_or_generate(
        d.train_file.as_deref(),
        d.train_count,
        cfg,
        cfg.train_seed(),
    )?;
    let test_set = load_or_generate(d.test_file.as_deref(), d.test_count, cfg, cfg.test_seed())?;

    let mut runs = Vec::new();
    let mut naive_done = false;
    for &n_step in &cfg.n_steps {
        for &head in &cfg.heads {
            if head == Head::Naive {
                if naive_done {
                    continue;
                }
                naive_done = true;
            }
            let train_cfg = cfg.train_config(n_step)?;
            let coder_err = coder_round_trip_max_err(head, n_step)?;
            let n_step = (head != Head::Naive).then_some(n_step);
            let run = match train(head, &train_cfg, &train_set) {
                Ok(outcome) => HeadRun {
                    head,
                    n_step,
                    failure: None,
                    report: Some(evaluate(&outcome.model, &test_set)?),
                    loss_curve: outcome.loss_curve,
                    model: Some(outcome.model),
                    coder_round_trip_max_err: coder_err,
                },
                Err(e @ phasecoder::Error::Diverged { .. }) => HeadRun {
                    head,
                    n_step,
                    failure: Some(e.to_string()),
                    loss_curve: Vec::new(),
                    report: None,
                    model: None,
                    coder_round_trip_max_err: coder_err,
                },
                Err(e) => return Err(e).with_context(|| format!("training {head}")),
            };
            runs.push(run);
        }
    }
    Ok(BenchResult {
        config: cfg.clone(),
        runs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub head: Head,
    pub n_step: Option<usize>,
    pub status: String,
    pub final_angle_loss: Option<f64>,
    pub final_total_loss: Option<f64>,
    pub count: Option<usize>,
    pub indeterminate: Option<usize>,
    pub mean_rad: Option<f64>,
    pub median_rad: Option<f64>,
    pub max_rad: Option<f64>,
    pub within_2deg: Option<f64>,
    pub within_5deg: Option<f64>,
    pub within_10deg: Option<f64>,
    pub boundary_count: Option<usize>,
    pub boundary_mean_rad: Option<f64>,
    pub boundary_median_rad: Option<f64>,
    pub boundary_max_rad: Option<f64>,
    pub coder_round_trip_max_err: Option<f64>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl From<&HeadRun> for ReportRow {
    fn from(run: &HeadRun) -> Self {
        let last = run.loss_curve.last();
        let o = run.report.as_ref().map(|r| r.overall);
        let b = run.report.as_ref().map(|r| r.boundary);
        Self {
            head: run.head,
            n_step: run.n_step,
            status: run.failure.clone().unwrap_or_else(|| "ok".into()),
            final_angle_loss: last.map(|e| e.angle_loss),
            final_total_loss: last.map(|e| e.total_loss),
            count: o.map(|s| s.count),
            indeterminate: run.report.as_ref().map(|r| r.indeterminate),
            mean_rad: o.and_then(|s| finite(s.mean)),
            median_rad: o.and_then(|s| finite(s.median)),
            max_rad: o.and_then(|s| finite(s.max)),
            within_2deg: o.and_then(|s| finite(s.within_2deg)),
            within_5deg: o.and_then(|s| finite(s.within_5deg)),
            within_10deg: o.and_then(|s| finite(s.within_10deg)),
            boundary_count: b.map(|s| s.count),
            boundary_mean_rad: b.and_then(|s| finite(s.mean)),
            boundary_median_rad: b.and_then(|s| finite(s.median)),
            boundary_max_rad: b.and_then(|s| finite(s.max)),
            coder_round_trip_max_err: run.coder_round_trip_max_err,
        }
    }
}

#[derive(Debug, Serialize)]
struct ErrorRow {
    head: Head,
    n_step: Option<usize>,
    index: usize,
    theta_rad: f64,
    square: bool,
    boundary: bool,
    predicted_rad: Option<f64>,
    error_rad: Option<f64>,
}

#[derive(Debug, Serialize)]
struct LossRow {
    head: Head,
    n_step: Option<usize>,
    epoch: usize,
    learning_rate: f64,
    angle_loss: f64,
    total_loss: f64,
}

#[derive(Serialize)]
struct JsonDoc<'a, T: Serialize> {
    schema: &'a str,
    schema_version: u32,
    #[serde(flatten)]
    body: T,
}

fn write_csv<T: Serialize>(
    path: &Path,
    schema: &str,
    rows: impl IntoIterator<Item = T>,
) -> anyhow::Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let out = write_schema_row(BufWriter::new(file), schema)?;
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, schema: &str, body: T) -> anyhow::Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut out = BufWriter::new(file);
    let doc = JsonDoc {
        schema,
        schema_version: SCHEMA_VERSION,
        body,
    };
    serde_json::to_writer_pretty(&mut out, &doc)?;
    writeln!(out)?;
    Ok(())
}

/// Writes `report.csv`, `report.json`, `errors.csv`, `losscurve.csv` and
/// `config.json` (plus `models/*.json` when enabled) into `dir`.
pub fn write_outputs(result: &BenchResult, dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let rows = result.report_rows();
    write_csv(&dir.join("report.csv"), "phasecoder.report", &rows)?;

    #[derive(Serialize)]
    struct Rows<'a> {
        rows: &'a [ReportRow],
    }
    write_json(
        &dir.join("report.json"),
        "phasecoder.report",
        Rows { rows: &rows },
    )?;

    let errors = result.runs.iter().flat_map(|run| {
        run.report.iter().flat_map(move |r| {
            r.samples.iter().map(move |s| ErrorRow {
                head: run.head,
                n_step: run.n_step,
                index: s.index,
                theta_rad: s.theta,
                square: s.square,
                boundary: s.boundary,
                predicted_rad: s.predicted,
                error_rad: s.error,
            })
        })
    });
    write_csv(&dir.join("errors.csv"), "phasecoder.errors", errors)?;

    let losses = result.runs.iter().flat_map(|run| {
        run.loss_curve.iter().map(move |e| LossRow {
            head: run.head,
            n_step: run.n_step,
            epoch: e.epoch,
            learning_rate: e.learning_rate,
            angle_loss: e.angle_loss,
            total_loss: e.total_loss,
        })
    });
    write_csv(&dir.join("losscurve.csv"), "phasecoder.losscurve", losses)?;

    #[derive(Serialize)]
    struct Config<'a> {
        config: &'a RunConfig,
    }
    write_json(
        &dir.join("config.json"),
        "phasecoder.config",
        Config {
            config: &result.config,
        },
    )?;

    if result.config.save_models {
        let models = dir.join("models");
        fs::create_dir_all(&models)?;
        for run in &result.runs {
            if let Some(model) = &run.model {
                let name = match run.n_step {
                    Some(n) => format!("{}_n{n}.json", run.head),
                    None => format!("{}.json", run.head),
                };
                snapshot::save_model(&models.join(name), model)?;
            }
        }
    }
    Ok(())
}

/// Human-readable summary, errors in degrees.
pub fn summary_table(result: &BenchResult) -> String {
    let mut out = format!(
        "{:<6} {:>6} {:>12} {:>12} {:>14} {:>9} {:>10}\n",
        "head", "n_step", "median_deg", "mean_deg", "bnd_median_deg", "within5", "roundtrip"
    );
    for row in result.report_rows() {
        let deg = |v: Option<f64>| v.map_or("-".into(), |v| format!("{:.4}", v.to_degrees()));
        let n = row.n_step.map_or("-".into(), |n| n.to_string());
        if row.status != "ok" {
            out.push_str(&format!(
                "{:<6} {:>6} {}\n",
                row.head.to_string(),
                n,
                row.status
            ));
            continue;
        }
        out.push_str(&format!(
            "{:<6} {:>6} {:>12} {:>12} {:>14} {:>9} {:>10}\n",
            row.head.to_string(),
            n,
            deg(row.median_rad),
            deg(row.mean_rad),
            deg(row.boundary_median_rad),
            row.within_5deg.map_or("-".into(), |v| format!("{v:.3}")),
            row.coder_round_trip_max_err
                .map_or("-".into(), |v| format!("{v:.1e}")),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> RunConfig {
        let mut c = RunConfig::default();
        c.dataset.train_count = 120;
        c.dataset.test_count = 40;
        c.train.epochs = 3;
        c.train.hidden = 8;
        c
    }

    #[test]
    fn one_row_per_head() {
        let r = run(&tiny()).unwrap();
        assert_eq!(r.runs.len(), 3);
        let rows = r.report_rows();
        assert_eq!(
            rows.iter().map(|r| r.head).collect::<Vec<_>>(),
            Head::ALL.to_vec()
        );
        assert!(rows.iter().all(|r| r.status == "ok"));
        assert_eq!(rows[0].n_step, None);
        assert_eq!(rows[1].n_step, Some(3));
    }

    #[test]
    fn sweep_runs_naive_once() {
        let mut c = tiny();
        c.n_steps = vec![3, 4, 5];
        let r = run(&c).unwrap();
        assert_eq!(r.runs.len(), 1 + 2 * 3);
        for n in [3, 4, 5] {
            let psc = r.run_for(Head::Psc, Some(n)).unwrap();
            assert!(psc.coder_round_trip_max_err.unwrap() <= 1e-9);
            assert_eq!(psc.model.as_ref().unwrap().output_dim(), n);
            assert_eq!(
                r.run_for(Head::Pscd, Some(n))
                    .unwrap()
                    .model
                    .as_ref()
                    .unwrap()
                    .output_dim(),
                2 * n
            );
        }
    }

    #[test]
    fn divergence_is_recorded_per_head() {
        let mut c = tiny();
        c.train.learning_rate = 1e200;
        c.train.momentum = 0.0;
        c.heads = vec![Head::Naive];
        let r = run(&c).unwrap();
        assert!(r.runs[0].failure.as_deref().unwrap().contains("diverged"));
        let dir = tempfile::tempdir().unwrap();
        write_outputs(&r, dir.path()).unwrap();
        let report = fs::read_to_string(dir.path().join("report.csv")).unwrap();
        assert!(report.contains("diverged"));
    }

    #[test]
    fn outputs_carry_schema_rows() {
        let mut c = tiny();
        c.save_models = true;
        let r = run(&c).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_outputs(&r, dir.path()).unwrap();
        for (file, schema) in [
            ("report.csv", "phasecoder.report"),
            ("errors.csv", "phasecoder.errors"),
            ("losscurve.csv", "phasecoder.losscurve"),
        ] {
            let text = fs::read_to_string(dir.path().join(file)).unwrap();
            assert!(
                text.starts_with(&format!("# schema: {schema} v1\n")),
                "{file}"
            );
        }
        let report = fs::read_to_string(dir.path().join("report.csv")).unwrap();
        assert_eq!(report.lines().count(), 2 + 3);
        let json: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("config.json")).unwrap())
                .unwrap();
        assert_eq!(json["schema_version"], 1);
        assert_eq!(json["config"]["seed"], 42);
        let json: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap())
                .unwrap();
        assert_eq!(json["rows"].as_array().unwrap().len(), 3);
        assert!(dir.path().join("models/psc_n3.json").exists());
        assert!(dir.path().join("models/naive.json").exists());
        let errors = fs::read_to_string(dir.path().join("errors.csv")).unwrap();
        assert_eq!(errors.lines().count(), 2 + 3 * 40);
        let losses = fs::read_to_string(dir.path().join("losscurve.csv")).unwrap();
        assert_eq!(losses.lines().count(), 2 + 3 * 3);
    }

    #[test]
    fn snapshot_files_replace_generation() {
        let dir = tempfile::tempdir().unwrap();
        let train_path = dir.path().join("train.csv");
        let test_path = dir.path().join("test.csv");
        snapshot::save_dataset(&train_path, &generate_dataset(120, 0.0, 0.01, 42).unwrap())
            .unwrap();
        snapshot::save_dataset(&test_path, &generate_dataset(40, 0.0, 0.01, 43).unwrap()).unwrap();
        let from_files = {
            let mut c = tiny();
            c.dataset.train_file = Some(train_path);
            c.dataset.test_file = Some(test_path);
            run(&c).unwrap()
        };
        let generated = run(&tiny()).unwrap();
        assert_eq!(from_files.report_rows(), generated.report_rows());
    }
}
