//! Experiment execution and report files.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;
use structprior::datasets::{binary_subset, load_cifar10, load_idx};
use structprior::eval::{
    ablation_grid, activation_correlations, aggregate_curves, cappa, prior_predictive_entropy, sample_pairs,
    train_runs, write_csv, write_json, CsvTable, PriorSampler,
};
use structprior::priors::{init_network_logged, write_filter_bank, write_params_log};
use structprior::{Dataset, SeededRng};
use thiserror::Error;

use crate::config::{ConfigError, DataPaths, DatasetName, Experiment, RunConfig};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] structprior::Error),
    #[error("{}: {source}", .path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl RunError {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Config(_) => "config",
            Self::Core(_) => "run",
            Self::Io { .. } => "io",
        }
    }
}

/// One row of `summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub prior: String,
    pub metric: String,
    pub mean: f64,
    /// Absent when the metric has no per-draw spread.
    pub stderr: Option<f64>,
    pub n: usize,
}

struct Summary(Vec<SummaryRow>);

impl CsvTable for Summary {
    fn header(&self) -> Vec<String> {
        ["prior", "metric", "mean", "stderr", "n"].map(String::from).to_vec()
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.0
            .iter()
            .map(|r| {
                vec![
                    r.prior.clone(),
                    r.metric.clone(),
                    r.mean.to_string(),
                    r.stderr.map(|e| e.to_string()).unwrap_or_default(),
                    r.n.to_string(),
                ]
            })
            .collect()
    }
}

/// Everything written to `report.json`. Contains no timing, so reruns with
/// the same config are byte-identical.
#[derive(Serialize)]
struct Envelope<'a> {
    experiment: &'static str,
    dataset: Option<&'static str>,
    scale: &'static str,
    seed: u64,
    summary: &'a [SummaryRow],
    reports: Value,
}

#[derive(Serialize)]
struct Timing {
    threads: usize,
    seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub run_dir: PathBuf,
    pub summary: Vec<SummaryRow>,
    /// Human-readable one-liner.
    pub line: String,
}

fn load_split(name: DatasetName, files: &[PathBuf], split: &str) -> structprior::Result<Dataset> {
    let mut ds = match name {
        DatasetName::Cifar10 => load_cifar10(files)?,
        _ => load_idx(&files[0], &files[1])?,
    };
    ds.split = split.to_string();
    Ok(ds)
}

fn load_data(cfg: &RunConfig) -> Result<(Dataset, Dataset), RunError> {
    let DataPaths { train, test } = cfg.data.as_ref().expect("experiment needs data");
    let train = load_split(cfg.dataset, train, "train")?;
    let test = load_split(cfg.dataset, test, "test")?;
    Ok((train, test))
}

/// Stratified subsample of the training split when one is configured.
fn maybe_subsample(cfg: &RunConfig, root: &SeededRng, ds: Dataset) -> structprior::Result<Dataset> {
    match cfg.resolved.dataset.train_subsample {
        Some(n) if n < ds.len() => ds.stratified_subsample(&mut root.child("subsample"), n),
        _ => Ok(ds),
    }
}

fn to_value<T: Serialize>(v: &T) -> structprior::Result<Value> {
    Ok(serde_json::to_value(v)?)
}

fn csv_name(prior: &str, what: &str) -> String {
    format!("{}_{what}.csv", prior.replace('+', "_"))
}

/// Run the configured experiment and write its outputs into `cfg.run_dir`.
pub fn execute(cfg: &RunConfig, threads: usize) -> Result<Outcome, RunError> {
    let started = Instant::now();
    let dir = &cfg.run_dir;
    fs::create_dir_all(dir).map_err(|source| RunError::Io {
        path: dir.clone(),
        source,
    })?;
    // a stale error report would contradict a successful rerun
    let _ = fs::remove_file(dir.join("error.json"));
    write_json(&dir.join("config.json"), &cfg.resolved)?;

    let root = SeededRng::root(cfg.seed);
    let (summary, reports) = match cfg.experiment {
        Experiment::SampleFilters => sample_filters(cfg, &root)?,
        Experiment::Entropy => entropy(cfg, &root)?,
        Experiment::Correlation => correlation(cfg, &root)?,
        Experiment::Cappa => cappa_experiment(cfg, &root)?,
        Experiment::Train => train(cfg, &root)?,
        Experiment::Ablation => ablation(cfg, &root)?,
    };

    write_csv(&dir.join("summary.csv"), &Summary(summary.clone()))?;
    let envelope = Envelope {
        experiment: cfg.experiment.name(),
        dataset: cfg.data.as_ref().map(|_| cfg.dataset.name()),
        scale: cfg.scale_name(),
        seed: cfg.seed,
        summary: &summary,
        reports,
    };
    write_json(&dir.join("report.json"), &envelope)?;
    write_json(
        &dir.join("run.json"),
        &Timing {
            threads,
            seconds: started.elapsed().as_secs_f64(),
        },
    )?;

    let parts: Vec<String> = summary
        .iter()
        .map(|r| match r.stderr {
            Some(e) => format!("{} {} {:.4} ± {:.4}", r.prior, r.metric, r.mean, e),
            None => format!("{} {} {:.4}", r.prior, r.metric, r.mean),
        })
        .collect();
    let line = format!("{} [{}] {}", cfg.experiment.name(), dir.display(), parts.join(" | "));
    Ok(Outcome {
        run_dir: dir.clone(),
        summary,
        line,
    })
}

/// Write `error.json` next to where the outputs would have gone.
pub fn write_error(dir: &Path, err: &RunError) -> std::io::Result<PathBuf> {
    #[derive(Serialize)]
    struct ErrorReport<'a> {
        kind: &'a str,
        message: String,
    }
    fs::create_dir_all(dir)?;
    let path = dir.join("error.json");
    let report = ErrorReport {
        kind: err.kind(),
        message: err.to_string(),
    };
    let mut text = serde_json::to_string_pretty(&report).map_err(std::io::Error::other)?;
    text.push('\n');
    fs::write(&path, text)?;
    Ok(path)
}

type Results = (Vec<SummaryRow>, Value);

fn sample_filters(cfg: &RunConfig, root: &SeededRng) -> Result<Results, RunError> {
    let (label, prior) = &cfg.priors[0];
    let out = init_network_logged(&root.child("init"), &cfg.spec, prior, None)?;
    let log = out.gabor.expect("gabor prior logs its draws");
    write_filter_bank(&cfg.run_dir.join("filters"), &log.raw)?;
    write_params_log(&cfg.run_dir.join("params.jsonl"), &log.filters)?;
    let thetas: Vec<f64> = log.filters.iter().map(|f| f.theta_g).collect();
    let s = structprior::eval::mean_stderr(&thetas);
    let row = SummaryRow {
        prior: label.clone(),
        metric: "theta_g".into(),
        mean: s.mean,
        stderr: Some(s.stderr),
        n: log.filters.len(),
    };
    Ok((vec![row], to_value(&log)?))
}

fn entropy(cfg: &RunConfig, root: &SeededRng) -> Result<Results, RunError> {
    let (train, _) = load_data(cfg)?;
    let eval_set = maybe_subsample(cfg, root, train.clone())?;
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for (label, prior) in &cfg.priors {
        let sampler = PriorSampler::new(&cfg.spec, *prior, Some(&train))?;
        let report = prior_predictive_entropy(&root.child("eval"), &sampler, &eval_set, cfg.draws())?;
        write_csv(&cfg.run_dir.join(csv_name(label, "draws")), &report)?;
        rows.push(SummaryRow {
            prior: label.clone(),
            metric: "entropy".into(),
            mean: report.mean_entropy,
            stderr: Some(report.stderr),
            n: report.n_draws,
        });
        reports.push(to_value(&report)?);
    }
    Ok((rows, Value::Array(reports)))
}

fn correlation(cfg: &RunConfig, root: &SeededRng) -> Result<Results, RunError> {
    let (train, _) = load_data(cfg)?;
    let pool = maybe_subsample(cfg, root, train.clone())?;
    let scale = &cfg.resolved.scale;
    let pairs = sample_pairs(&mut root.child("pairs"), &pool, scale.pairs.expect("filled"))?;
    let c = &cfg.resolved.correlation;
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for (label, prior) in &cfg.priors {
        let sampler = PriorSampler::new(&cfg.spec, *prior, Some(&train))?;
        let report = activation_correlations(
            &root.child("eval"),
            &sampler,
            &pool,
            &pairs,
            scale.correlation_draws.expect("filled"),
            c.output_index.expect("filled"),
            c.retain_pairs.expect("filled"),
        )?;
        if report.same_samples.is_some() {
            write_csv(&cfg.run_dir.join(csv_name(label, "pairs")), &report)?;
        }
        let n = report.n_pairs;
        rows.push(SummaryRow {
            prior: label.clone(),
            metric: "corr_same".into(),
            mean: report.mean_same,
            stderr: None,
            n: n - report.excluded_same,
        });
        rows.push(SummaryRow {
            prior: label.clone(),
            metric: "corr_different".into(),
            mean: report.mean_different,
            stderr: None,
            n: n - report.excluded_different,
        });
        reports.push(to_value(&report)?);
    }
    Ok((rows, Value::Array(reports)))
}

fn cappa_experiment(cfg: &RunConfig, root: &SeededRng) -> Result<Results, RunError> {
    let (train, _) = load_data(cfg)?;
    let c = &cfg.resolved.cappa;
    let [a, b] = c.classes.expect("filled");
    let task = binary_subset(&train, a, b, c.per_class.expect("filled"))?;
    let task_name = format!("{}_{a}v{b}", cfg.dataset.name());
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for (label, prior) in &cfg.priors {
        let sampler = PriorSampler::new(&cfg.spec, *prior, Some(&task))?;
        let report = cappa(&root.child("eval"), &sampler, &task, &task_name, cfg.draws())?;
        write_csv(&cfg.run_dir.join(csv_name(label, "draws")), &report)?;
        rows.push(SummaryRow {
            prior: label.clone(),
            metric: "cappa".into(),
            mean: report.mean_cappa,
            stderr: Some(report.stderr),
            n: report.n_draws,
        });
        reports.push(to_value(&report)?);
    }
    Ok((rows, Value::Array(reports)))
}

fn train(cfg: &RunConfig, root: &SeededRng) -> Result<Results, RunError> {
    let (train, test) = load_data(cfg)?;
    let train = maybe_subsample(cfg, root, train)?;
    let n_runs = cfg.resolved.scale.runs.expect("filled");
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for (label, prior) in &cfg.priors {
        let sampler = PriorSampler::new(&cfg.spec, *prior, Some(&train))?;
        let runs = train_runs(&root.child("train"), &sampler, &train, &test, &cfg.train, n_runs)?;
        let aggregate = aggregate_curves(&runs)?;
        write_csv(&cfg.run_dir.join(csv_name(label, "curve")), &aggregate)?;
        for (r, run) in runs.iter().enumerate() {
            write_csv(&cfg.run_dir.join(csv_name(label, &format!("run{r}"))), run)?;
        }
        let finals: Vec<f64> = runs.iter().map(|r| r.final_test_accuracy).collect();
        let s = structprior::eval::mean_stderr(&finals);
        rows.push(SummaryRow {
            prior: label.clone(),
            metric: "final_test_accuracy".into(),
            mean: s.mean,
            stderr: Some(s.stderr),
            n: runs.len(),
        });
        reports.push(serde_json::json!({ "prior": label, "aggregate": aggregate, "runs": runs }));
    }
    Ok((rows, Value::Array(reports)))
}

fn ablation(cfg: &RunConfig, root: &SeededRng) -> Result<Results, RunError> {
    let (train, test) = load_data(cfg)?;
    let train = maybe_subsample(cfg, root, train)?;
    let n_runs = cfg.resolved.scale.runs.expect("filled");
    let report = ablation_grid(
        &root.child("train"),
        &cfg.spec,
        &cfg.priors,
        &train,
        &test,
        &cfg.train,
        n_runs,
    )?;
    write_csv(&cfg.run_dir.join("ablation.csv"), &report)?;
    let rows = report
        .variants
        .iter()
        .map(|v| {
            let finals: Vec<f64> = v.runs.iter().map(|r| r.final_test_accuracy).collect();
            let s = structprior::eval::mean_stderr(&finals);
            SummaryRow {
                prior: v.name.clone(),
                metric: "final_test_accuracy".into(),
                mean: s.mean,
                stderr: Some(s.stderr),
                n: v.runs.len(),
            }
        })
        .collect();
    Ok((rows, to_value(&report)?))
}
