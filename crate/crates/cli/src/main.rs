//! `structprior`: sample priors, evaluate them and train from them.
//!
//! Settings resolve in order: built-in defaults, `--config FILE` (JSON),
//! `--section.key=value` overrides, then dedicated flags. Dataset files are
//! read uncompressed; gunzip the IDX archives first.

mod config;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mimalloc::MiMalloc;

use config::{ConfigError, RawConfig};
use run::RunError;

#[global_allocator]
static GLOBAL: MiMalloc = MiMalloc;

#[derive(Parser, Debug)]
#[command(
    name = "structprior",
    version,
    about = "Structured weight priors for CNNs",
    after_help = "Any config field can be set with --section.key=value, e.g. --scale.draws=20 or --prior.kinds='[\"iid\",\"gabor\"]'.\nDataset files must be uncompressed IDX files or CIFAR-10 binary batches."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw a first-layer Gabor filter bank and write it as PGM/PPM images.
    SampleFilters(Common),
    /// Prior predictive entropy of the predicted-class histogram.
    EvalEntropy(Common),
    /// Output correlations between same-class and different-class pairs.
    EvalCorrelation(Common),
    /// Class-agnostic prior predictive accuracy on a binary task.
    EvalCappa(Common),
    /// Train from each prior and record test-accuracy curves.
    Train(Common),
    /// Train the prior ablation grid.
    Ablation(Common),
    /// Run whatever experiment the config names.
    Run(Common),
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root seed. Required here or in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Use the full-size experiment settings.
    #[arg(long)]
    paper_scale: bool,
    /// Worker threads. Results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
    /// Parent directory for run directories.
    #[arg(long)]
    out: Option<PathBuf>,
    /// mnist, fashion-mnist or cifar10.
    #[arg(long)]
    dataset: Option<String>,
    /// Directory holding the dataset files.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Number of conv (or hidden dense) layers.
    #[arg(long)]
    depth: Option<usize>,
    /// cnn or fcnn.
    #[arg(long)]
    arch: Option<String>,
    /// Prior to evaluate; repeat for several (iid, gabor, feats, gabor+feats).
    #[arg(long = "prior")]
    priors: Vec<String>,
    /// Prior draws.
    #[arg(long)]
    draws: Option<usize>,
    /// Stratified training-set subsample size.
    #[arg(long)]
    subsample: Option<usize>,
    /// Gabor filter noise level.
    #[arg(long)]
    sigma_g: Option<f64>,
}

impl Common {
    /// Dedicated flags expressed as overrides, applied after `--a.b=v` ones.
    fn overrides(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut push = |k: &str, v: String| out.push((k.to_string(), v));
        if let Some(s) = self.seed {
            push("seed", s.to_string());
        }
        if self.paper_scale {
            push("scale.paper", "true".into());
        }
        if let Some(p) = &self.out {
            push("output_dir", json_string(&p.display().to_string()));
        }
        if let Some(d) = &self.dataset {
            push("dataset.name", json_string(d));
        }
        if let Some(p) = &self.data_dir {
            push("dataset.dir", json_string(&p.display().to_string()));
        }
        if let Some(d) = self.depth {
            push("model.depth", d.to_string());
        }
        if let Some(a) = &self.arch {
            push("model.arch", json_string(a));
        }
        if !self.priors.is_empty() {
            push(
                "prior.kinds",
                serde_json::to_string(&self.priors).expect("strings serialize"),
            );
        }
        if let Some(d) = self.draws {
            push("scale.draws", d.to_string());
        }
        if let Some(n) = self.subsample {
            push("dataset.train_subsample", n.to_string());
        }
        if let Some(s) = self.sigma_g {
            push("prior.sigma_g", s.to_string());
        }
        out
    }
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

/// Pull `--section.key=value` arguments out before clap sees them.
fn split_overrides(args: Vec<String>) -> (Vec<String>, Vec<(String, String)>) {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    for arg in args {
        let dotted = arg
            .strip_prefix("--")
            .and_then(|a| a.split_once('='))
            .filter(|(k, _)| k.contains('.'));
        match dotted {
            Some((k, v)) => overrides.push((k.to_string(), v.to_string())),
            None => rest.push(arg),
        }
    }
    (rest, overrides)
}

fn resolve(experiment: Option<&str>, common: &Common, dotted: &[(String, String)]) -> Result<RawConfig, ConfigError> {
    let mut overrides = dotted.to_vec();
    overrides.extend(common.overrides());
    let mut raw = config::load(common.config.as_deref(), &overrides)?;
    if let Some(name) = experiment {
        let wanted = config::from_value(serde_json::json!({ "experiment": name }))?.experiment;
        match raw.experiment {
            Some(e) if Some(e) != wanted => {
                return Err(ConfigError::Field {
                    field: "experiment".into(),
                    message: format!("config names {}, command is {name}", e.name()),
                })
            }
            _ => raw.experiment = wanted,
        }
    }
    Ok(raw)
}

/// Best guess at where outputs go, for error reports written before the
/// config validates.
fn fallback_dir(common: &Common) -> PathBuf {
    common.out.clone().unwrap_or_else(|| PathBuf::from("runs"))
}

fn report_failure(dir: &Path, err: &RunError) -> ExitCode {
    match run::write_error(dir, err) {
        Ok(path) => eprintln!("error: {err} (see {})", path.display()),
        Err(io) => eprintln!("error: {err} (could not write error report: {io})"),
    }
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    let (args, dotted) = split_overrides(std::env::args().collect());
    let cli = Cli::parse_from(args);
    let (experiment, common) = match &cli.command {
        Command::SampleFilters(c) => (Some("sample-filters"), c),
        Command::EvalEntropy(c) => (Some("entropy"), c),
        Command::EvalCorrelation(c) => (Some("correlation"), c),
        Command::EvalCappa(c) => (Some("cappa"), c),
        Command::Train(c) => (Some("train"), c),
        Command::Ablation(c) => (Some("ablation"), c),
        Command::Run(c) => (None, c),
    };

    let threads = common
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        let err = RunError::Config(ConfigError::Field {
            field: "threads".into(),
            message: "must be positive".into(),
        });
        return report_failure(&fallback_dir(common), &err);
    }
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
        eprintln!("warning: {e}");
    }

    let cfg = match resolve(experiment, common, &dotted).and_then(|raw| raw.validate()) {
        Ok(cfg) => cfg,
        Err(e) => return report_failure(&fallback_dir(common), &RunError::Config(e)),
    };
    match run::execute(&cfg, threads) {
        Ok(outcome) => {
            println!("{}", outcome.line);
            ExitCode::SUCCESS
        }
        Err(e) => report_failure(&cfg.run_dir, &e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dotted_flags_are_split_off() {
        let args = [
            "structprior",
            "eval-entropy",
            "--seed",
            "3",
            "--scale.draws=7",
            "--out=x",
        ]
        .map(String::from)
        .to_vec();
        let (rest, overrides) = split_overrides(args);
        assert_eq!(rest, ["structprior", "eval-entropy", "--seed", "3", "--out=x"]);
        assert_eq!(overrides, [("scale.draws".to_string(), "7".to_string())]);
    }

    #[test]
    fn dedicated_flags_beat_dotted_overrides() {
        let common = Common {
            seed: Some(9),
            draws: Some(4),
            ..Default::default()
        };
        let dotted = [("scale.draws".to_string(), "50".to_string())];
        let raw = resolve(Some("entropy"), &common, &dotted).unwrap();
        assert_eq!(raw.scale.draws, Some(4));
        assert_eq!(raw.seed, Some(9));
    }

    #[test]
    fn command_and_config_must_agree() {
        let dotted = [("experiment".to_string(), "\"train\"".to_string())];
        assert!(resolve(Some("entropy"), &Common::default(), &dotted).is_err());
        let raw = resolve(None, &Common::default(), &dotted).unwrap();
        assert_eq!(raw.experiment, Some(config::Experiment::Train));
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
