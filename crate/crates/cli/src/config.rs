//! Run configuration: JSON file, `--section.key=value` overrides, defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use structprior::datasets::{cifar10, fashion};
use structprior::eval::TrainConfig;
use structprior::nn::{infer_shapes, NetworkSpec};
use structprior::priors::{
    default_feature_weight_std, ColorMode, Coordinates, LayerPrior, DEFAULT_EXEMPLARS_PER_CLASS,
};
use structprior::{AdamConfig, PriorSpec};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{field}: {message}")]
    Field { field: String, message: String },
    #[error("{}: {source}", .path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", .path.display())]
    Syntax { path: PathBuf, source: serde_json::Error },
}

fn field_err(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        field: field.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    SampleFilters,
    Entropy,
    Correlation,
    Cappa,
    Train,
    Ablation,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::SampleFilters => "sample-filters",
            Self::Entropy => "entropy",
            Self::Correlation => "correlation",
            Self::Cappa => "cappa",
            Self::Train => "train",
            Self::Ablation => "ablation",
        }
    }

    fn needs_data(self) -> bool {
        self != Self::SampleFilters
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetName {
    Mnist,
    FashionMnist,
    Cifar10,
}

impl DatasetName {
    pub fn name(self) -> &'static str {
        match self {
            Self::Mnist => "mnist",
            Self::FashionMnist => "fashion-mnist",
            Self::Cifar10 => "cifar10",
        }
    }

    pub fn image_shape(self) -> [usize; 3] {
        match self {
            Self::Cifar10 => [32, 32, 3],
            _ => [28, 28, 1],
        }
    }

    fn default_dir(self) -> PathBuf {
        Path::new("data").join(match self {
            Self::Mnist => "mnist",
            Self::FashionMnist => "fashion-mnist",
            Self::Cifar10 => "cifar-10-batches-bin",
        })
    }

    /// Binary task used for CAPPA.
    fn default_pair(self) -> [usize; 2] {
        match self {
            Self::Mnist => [0, 1],
            Self::FashionMnist => [fashion::TROUSER, fashion::SHIRT],
            Self::Cifar10 => [cifar10::AUTOMOBILE, cifar10::BIRD],
        }
    }

    /// (train files, test files) relative to the dataset directory.
    pub fn files(self) -> (Vec<&'static str>, Vec<&'static str>) {
        match self {
            Self::Cifar10 => (
                vec![
                    "data_batch_1.bin",
                    "data_batch_2.bin",
                    "data_batch_3.bin",
                    "data_batch_4.bin",
                    "data_batch_5.bin",
                ],
                vec!["test_batch.bin"],
            ),
            _ => (
                vec!["train-images-idx3-ubyte", "train-labels-idx1-ubyte"],
                vec!["t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"],
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arch {
    Cnn,
    Fcnn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PriorKind {
    #[serde(rename = "iid")]
    Iid,
    #[serde(rename = "gabor")]
    Gabor,
    #[serde(rename = "feats")]
    Feats,
    #[serde(rename = "gabor+feats")]
    GaborFeats,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    pub name: Option<DatasetName>,
    pub dir: Option<PathBuf>,
    /// Stratified training subsample size; absent means the full split.
    pub train_subsample: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub arch: Option<Arch>,
    pub depth: Option<usize>,
    /// Conv widths per layer (CNN only).
    pub widths: Option<Vec<usize>>,
    /// Hidden units per layer (fcNN only).
    pub hidden: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorSection {
    pub kinds: Option<Vec<PriorKind>>,
    pub sigma_g: Option<f64>,
    pub coords: Option<Coordinates>,
    pub exemplars_per_class: Option<usize>,
    pub weight_std: Option<f64>,
    /// Noise level of the second Gabor variant in the ablation grid.
    pub ablation_sigma_g: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScaleSection {
    pub paper: Option<bool>,
    /// Prior draws for entropy and CAPPA.
    pub draws: Option<usize>,
    /// Pairs of each type for correlations.
    pub pairs: Option<usize>,
    pub correlation_draws: Option<usize>,
    /// Training runs per prior.
    pub runs: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub lr: Option<f64>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub eps: Option<f64>,
    pub batch_size: Option<usize>,
    pub epochs: Option<usize>,
    pub log_every: Option<usize>,
    pub checkpoint_test_size: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrelationSection {
    pub output_index: Option<usize>,
    pub retain_pairs: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CappaSection {
    pub classes: Option<[usize; 2]>,
    pub per_class: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FiltersSection {
    pub count: Option<usize>,
    pub width: Option<usize>,
    pub color: Option<ColorMode>,
}

/// Everything a run needs. Every field is optional on input; after
/// [`RawConfig::validate`] the copy stored in [`RunConfig::resolved`] has all
/// relevant fields filled and reproduces the run when fed back in.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RawConfig {
    pub experiment: Option<Experiment>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub dataset: DatasetSection,
    pub model: ModelSection,
    pub prior: PriorSection,
    pub scale: ScaleSection,
    pub train: TrainSection,
    pub correlation: CorrelationSection,
    pub cappa: CappaSection,
    pub filters: FiltersSection,
}

/// Parse `value` as JSON, falling back to a plain string.
fn parse_value(value: &str) -> Value {
    serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_string()))
}

/// Set `a.b.c = value` inside a JSON object, creating sections as needed.
pub fn apply_override(root: &mut Value, key: &str, value: &str) -> Result<(), ConfigError> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(field_err(key, "malformed override key"));
    }
    let mut node = root;
    for part in &parts[..parts.len() - 1] {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| field_err(key, "cannot descend into a non-object"))?;
        node = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    let obj = node
        .as_object_mut()
        .ok_or_else(|| field_err(key, "cannot descend into a non-object"))?;
    obj.insert(parts[parts.len() - 1].to_string(), parse_value(value));
    Ok(())
}

/// Read a config file (if any) and apply overrides in order.
pub fn load(file: Option<&Path>, overrides: &[(String, String)]) -> Result<RawConfig, ConfigError> {
    let mut root = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
                path: path.to_path_buf(),
                source,
            })?;
            serde_json::from_str(&text).map_err(|source| ConfigError::Syntax {
                path: path.to_path_buf(),
                source,
            })?
        }
        None => Value::Object(Default::default()),
    };
    for (k, v) in overrides {
        apply_override(&mut root, k, v)?;
    }
    from_value(root)
}

/// Deserialize, reporting the path of the first offending field.
pub fn from_value(root: Value) -> Result<RawConfig, ConfigError> {
    serde_path_to_error::deserialize(root).map_err(|e| {
        let field = e.path().to_string();
        let message = e.into_inner().to_string();
        ConfigError::Field { field, message }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataPaths {
    pub train: Vec<PathBuf>,
    pub test: Vec<PathBuf>,
}

/// A validated configuration and the objects derived from it.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub resolved: RawConfig,
    pub experiment: Experiment,
    pub seed: u64,
    pub dataset: DatasetName,
    pub data: Option<DataPaths>,
    pub spec: NetworkSpec,
    /// Prior label and spec, in the order given.
    pub priors: Vec<(String, PriorSpec)>,
    pub train: TrainConfig,
    pub run_dir: PathBuf,
}

impl RunConfig {
    pub fn scale_name(&self) -> &'static str {
        if self.resolved.scale.paper == Some(true) {
            "paper"
        } else {
            "desk"
        }
    }

    pub fn draws(&self) -> usize {
        self.resolved.scale.draws.expect("filled by validate")
    }
}

fn positive(field: &str, v: usize) -> Result<usize, ConfigError> {
    if v == 0 {
        Err(field_err(field, "must be positive"))
    } else {
        Ok(v)
    }
}

fn prior_spec(kind: PriorKind, p: &PriorSection, color: ColorMode) -> PriorSpec {
    let gabor = LayerPrior::Gabor {
        sigma_g: p.sigma_g.expect("filled"),
        color,
        coords: p.coords.expect("filled"),
    };
    let feats = LayerPrior::FeatureSpecific {
        exemplars_per_class: p.exemplars_per_class.expect("filled"),
        weight_std: p.weight_std.expect("filled"),
    };
    let (first_layer, final_layer) = match kind {
        PriorKind::Iid => (LayerPrior::Iid, LayerPrior::Iid),
        PriorKind::Gabor => (gabor, LayerPrior::Iid),
        PriorKind::Feats => (LayerPrior::Iid, feats),
        PriorKind::GaborFeats => (gabor, feats),
    };
    PriorSpec {
        first_layer,
        final_layer,
    }
}

impl RawConfig {
    /// Fill defaults, check every field and derive the network and priors.
    pub fn validate(&self) -> Result<RunConfig, ConfigError> {
        let mut r = self.clone();
        let experiment = r.experiment.ok_or_else(|| field_err("experiment", "missing"))?;
        let seed = r
            .seed
            .ok_or_else(|| field_err("seed", "missing; runs are never seeded from the clock"))?;
        let output_dir = r.output_dir.get_or_insert_with(|| PathBuf::from("runs")).clone();

        // scale presets fill only what was not given
        let paper = *r.scale.paper.get_or_insert(false);
        let s = &mut r.scale;
        positive("scale.draws", *s.draws.get_or_insert(if paper { 500 } else { 100 }))?;
        positive(
            "scale.pairs",
            *s.pairs.get_or_insert(if paper { 10_000 } else { 1_000 }),
        )?;
        if *s.correlation_draws.get_or_insert(50) < 2 {
            return Err(field_err("scale.correlation_draws", "needs at least 2 draws"));
        }
        let default_runs = if experiment == Experiment::Ablation { 5 } else { 10 };
        positive("scale.runs", *s.runs.get_or_insert(default_runs))?;

        let dataset = *r.dataset.name.get_or_insert(DatasetName::Mnist);
        let dir = r.dataset.dir.get_or_insert_with(|| dataset.default_dir()).clone();
        if r.dataset.train_subsample.is_none() && experiment == Experiment::Entropy && !paper {
            r.dataset.train_subsample = Some(10_000);
        }
        if let Some(n) = r.dataset.train_subsample {
            positive("dataset.train_subsample", n)?;
        }
        let data = if experiment.needs_data() {
            let (train, test) = dataset.files();
            let paths = DataPaths {
                train: train.iter().map(|f| dir.join(f)).collect(),
                test: test.iter().map(|f| dir.join(f)).collect(),
            };
            for p in paths.train.iter().chain(&paths.test) {
                if !p.is_file() {
                    return Err(field_err("dataset.dir", format!("{} does not exist", p.display())));
                }
            }
            Some(paths)
        } else {
            None
        };

        // filters only matter for sample-filters, but are always resolved
        let f = &mut r.filters;
        let filter_count = positive("filters.count", *f.count.get_or_insert(16))?;
        let filter_width = *f.width.get_or_insert(5);
        if filter_width.is_multiple_of(2) {
            return Err(field_err("filters.width", "must be odd"));
        }
        let filter_color = *f.color.get_or_insert(ColorMode::Grayscale);

        let arch = *r.model.arch.get_or_insert(Arch::Cnn);
        let depth = *r.model.depth.get_or_insert(1);
        let color = match experiment {
            Experiment::SampleFilters => filter_color,
            _ => ColorMode::for_channels(dataset.image_shape()[2]).expect("datasets are grayscale or rgb"),
        };
        let n_outputs = if experiment == Experiment::Cappa { 2 } else { 10 };
        let spec = match (experiment, arch) {
            (Experiment::SampleFilters, _) => {
                r.model.widths = Some(vec![filter_count]);
                let c = color.channels();
                NetworkSpec::new(
                    [filter_width, filter_width, c],
                    vec![
                        structprior::LayerSpec::conv(filter_count, filter_width, structprior::Padding::Valid),
                        structprior::LayerSpec::Flatten,
                        structprior::LayerSpec::dense(2),
                    ],
                    2,
                )
            }
            (_, Arch::Cnn) => {
                positive("model.depth", depth)?;
                let widths = r
                    .model
                    .widths
                    .get_or_insert_with(|| NetworkSpec::default_cnn_widths(depth))
                    .clone();
                if widths.len() != depth {
                    return Err(field_err(
                        "model.widths",
                        format!("{} widths for depth {depth}", widths.len()),
                    ));
                }
                NetworkSpec::cnn(dataset.image_shape(), &widths, n_outputs)
            }
            (_, Arch::Fcnn) => {
                let hidden = positive("model.hidden", *r.model.hidden.get_or_insert(1024))?;
                NetworkSpec::fcnn(dataset.image_shape(), depth, hidden, n_outputs)
            }
        }
        .map_err(|e| field_err("model", e.to_string()))?;
        infer_shapes(&spec).map_err(|e| field_err("model", e.to_string()))?;

        let p = &mut r.prior;
        let sigma_g = *p.sigma_g.get_or_insert(0.0);
        if !(sigma_g >= 0.0 && sigma_g.is_finite()) {
            return Err(field_err("prior.sigma_g", format!("{sigma_g} must be finite and >= 0")));
        }
        let ablation_sigma = *p.ablation_sigma_g.get_or_insert(0.02);
        if !(ablation_sigma >= 0.0 && ablation_sigma.is_finite()) {
            return Err(field_err("prior.ablation_sigma_g", "must be finite and >= 0"));
        }
        p.coords.get_or_insert(Coordinates::Centered);
        positive(
            "prior.exemplars_per_class",
            *p.exemplars_per_class.get_or_insert(DEFAULT_EXEMPLARS_PER_CLASS),
        )?;
        let weight_std = *p.weight_std.get_or_insert_with(default_feature_weight_std);
        if !(weight_std > 0.0 && weight_std.is_finite()) {
            return Err(field_err("prior.weight_std", "must be positive"));
        }
        let priors = if experiment == Experiment::Ablation {
            if p.kinds.is_some() {
                return Err(field_err("prior.kinds", "ablation trains a fixed set of variants"));
            }
            let mut noiseless = r.prior.clone();
            noiseless.sigma_g = Some(0.0);
            let mut noisy = r.prior.clone();
            noisy.sigma_g = Some(ablation_sigma);
            vec![
                ("iid".to_string(), prior_spec(PriorKind::Iid, &r.prior, color)),
                (
                    "features_only".to_string(),
                    prior_spec(PriorKind::Feats, &r.prior, color),
                ),
                (
                    "gabor_sigma_0".to_string(),
                    prior_spec(PriorKind::Gabor, &noiseless, color),
                ),
                (
                    format!("gabor_sigma_{ablation_sigma}"),
                    prior_spec(PriorKind::Gabor, &noisy, color),
                ),
            ]
        } else {
            let kinds = p
                .kinds
                .get_or_insert_with(|| match experiment {
                    Experiment::SampleFilters => vec![PriorKind::Gabor],
                    Experiment::Train => vec![PriorKind::Iid, PriorKind::GaborFeats],
                    _ => vec![PriorKind::Iid, PriorKind::Gabor],
                })
                .clone();
            if kinds.is_empty() {
                return Err(field_err("prior.kinds", "at least one prior is required"));
            }
            kinds
                .into_iter()
                .map(|kind| {
                    let prior = prior_spec(kind, &r.prior, color);
                    (prior.label(), prior)
                })
                .collect()
        };
        for (_, prior) in &priors {
            prior
                .validate(&spec)
                .map_err(|e| field_err("prior.kinds", e.to_string()))?;
        }
        if experiment == Experiment::SampleFilters && !priors.iter().all(|(_, p)| p.is_gabor()) {
            return Err(field_err("prior.kinds", "sample-filters draws Gabor filters only"));
        }

        let t = &mut r.train;
        let train = TrainConfig {
            adam: AdamConfig {
                lr: *t.lr.get_or_insert(AdamConfig::default().lr),
                beta1: *t.beta1.get_or_insert(AdamConfig::default().beta1),
                beta2: *t.beta2.get_or_insert(AdamConfig::default().beta2),
                eps: *t.eps.get_or_insert(AdamConfig::default().eps),
            },
            batch_size: *t.batch_size.get_or_insert(128),
            epochs: *t.epochs.get_or_insert(3),
            log_every: *t.log_every.get_or_insert(50),
            checkpoint_test_size: t.checkpoint_test_size,
        };
        train.validate().map_err(|e| field_err("train", e.to_string()))?;

        let c = &mut r.correlation;
        let output_index = *c.output_index.get_or_insert(0);
        if output_index >= spec.n_outputs {
            return Err(field_err(
                "correlation.output_index",
                format!("{output_index} out of range for {} outputs", spec.n_outputs),
            ));
        }
        c.retain_pairs.get_or_insert(true);

        let pair = *r.cappa.classes.get_or_insert(dataset.default_pair());
        if pair[0] == pair[1] || pair.iter().any(|&c| c >= 10) {
            return Err(field_err(
                "cappa.classes",
                format!("{pair:?} is not two distinct classes"),
            ));
        }
        positive("cappa.per_class", *r.cappa.per_class.get_or_insert(1000))?;

        let label = match experiment {
            Experiment::Ablation => "ablation".to_string(),
            _ => {
                let prefix = if arch == Arch::Fcnn && experiment != Experiment::SampleFilters {
                    "fcnn-"
                } else {
                    ""
                };
                let names: Vec<String> = priors.iter().map(|(l, _)| format!("{prefix}{l}")).collect();
                names.join("-")
            }
        };
        let (data_tag, depth_tag) = match experiment {
            Experiment::SampleFilters => (
                match filter_color {
                    ColorMode::Grayscale => "grayscale",
                    ColorMode::Rgb => "rgb",
                },
                1,
            ),
            _ => (dataset.name(), depth),
        };
        let run_dir = output_dir.join(format!(
            "{}_{}_{}layer_{}_{}",
            experiment.name(),
            data_tag,
            depth_tag,
            label,
            seed
        ));

        Ok(RunConfig {
            experiment,
            seed,
            dataset,
            data,
            spec,
            priors,
            train,
            run_dir,
            resolved: r,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(experiment: Experiment) -> RawConfig {
        RawConfig {
            experiment: Some(experiment),
            seed: Some(1),
            ..Default::default()
        }
    }

    #[test]
    fn overrides_create_nested_sections() {
        let mut v = serde_json::json!({ "scale": { "draws": 3 } });
        apply_override(&mut v, "scale.draws", "7").unwrap();
        apply_override(&mut v, "prior.kinds", r#"["iid","gabor+feats"]"#).unwrap();
        apply_override(&mut v, "dataset.name", "fashion-mnist").unwrap();
        let c: RawConfig = serde_json::from_value(v).unwrap();
        assert_eq!(c.scale.draws, Some(7));
        assert_eq!(c.prior.kinds, Some(vec![PriorKind::Iid, PriorKind::GaborFeats]));
        assert_eq!(c.dataset.name, Some(DatasetName::FashionMnist));
        assert!(apply_override(&mut serde_json::json!({}), "a..b", "1").is_err());
    }

    #[test]
    fn unknown_keys_and_experiments_are_rejected() {
        let mut v = serde_json::json!({});
        apply_override(&mut v, "scale.drawz", "7").unwrap();
        let e = from_value(v).unwrap_err().to_string();
        assert!(e.starts_with("scale"), "{e}");
        let e = from_value(serde_json::json!({ "experiment": "histogram" }))
            .unwrap_err()
            .to_string();
        assert!(e.starts_with("experiment: unknown variant"), "{e}");
    }

    #[test]
    fn defaults_are_filled_and_round_trip() {
        let rc = raw(Experiment::SampleFilters).validate().unwrap();
        let r = &rc.resolved;
        assert_eq!(r.train.lr, Some(1e-3));
        assert_eq!(r.train.batch_size, Some(128));
        assert_eq!(r.scale.draws, Some(100));
        assert_eq!(r.filters.count, Some(16));
        assert_eq!(rc.run_dir, Path::new("runs/sample-filters_grayscale_1layer_gabor_1"));
        let again = r.validate().unwrap();
        assert_eq!(&again.resolved, r);
    }

    #[test]
    fn paper_scale_switch() {
        let mut c = raw(Experiment::SampleFilters);
        c.scale.paper = Some(true);
        let r = c.validate().unwrap().resolved;
        assert_eq!(
            (r.scale.draws, r.scale.pairs, r.scale.correlation_draws, r.scale.runs),
            (Some(500), Some(10_000), Some(50), Some(10))
        );
    }

    #[test]
    fn invalid_fields_are_named() {
        let mut c = raw(Experiment::SampleFilters);
        c.prior.sigma_g = Some(-0.1);
        let e = c.validate().unwrap_err().to_string();
        assert!(e.starts_with("prior.sigma_g"), "{e}");

        let mut c = raw(Experiment::SampleFilters);
        c.seed = None;
        assert!(c.validate().unwrap_err().to_string().starts_with("seed"));

        let mut c = raw(Experiment::Entropy);
        c.dataset.dir = Some(PathBuf::from("/nonexistent"));
        assert!(c.validate().unwrap_err().to_string().starts_with("dataset.dir"));
    }

    #[test]
    fn three_layer_paper_widths_fit_28_pixels() {
        let spec = NetworkSpec::cnn([28, 28, 1], &NetworkSpec::default_cnn_widths(3), 10).unwrap();
        assert!(infer_shapes(&spec).is_ok());
    }
}
