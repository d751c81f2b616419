use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::CsvTable;
use super::sampler::PriorSampler;
use super::stats::mean_stderr;
use crate::datasets::Dataset;
use crate::error::{Error, Result};
use crate::nn::{adam_step, argmax, forward, loss_and_grad, AdamConfig, AdamState, NetworkSpec, ParameterSet};
use crate::priors::{ColorMode, PriorSpec};
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub adam: AdamConfig,
    pub batch_size: usize,
    pub epochs: usize,
    /// Optimizer steps between test-accuracy checkpoints.
    pub log_every: usize,
    /// Stratified test subsample used at intermediate checkpoints; the final
    /// accuracy always uses the full test set.
    pub checkpoint_test_size: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            adam: AdamConfig::default(),
            batch_size: 128,
            epochs: 3,
            log_every: 50,
            checkpoint_test_size: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.adam.validate()?;
        if self.batch_size == 0 || self.epochs == 0 || self.log_every == 0 {
            return Err(Error::InvalidArgument(
                "batch_size, epochs and log_every must be positive".into(),
            ));
        }
        if self.checkpoint_test_size == Some(0) {
            return Err(Error::InvalidArgument("checkpoint_test_size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingCurve {
    pub prior: String,
    pub seed: u64,
    pub stream: String,
    /// Optimizer step of each checkpoint, strictly increasing.
    pub steps: Vec<usize>,
    /// Mean minibatch loss since the previous checkpoint.
    pub train_loss: Vec<f64>,
    pub test_accuracy: Vec<f64>,
    pub checkpoint_examples: usize,
    pub final_test_accuracy: f64,
}

/// Fraction of `dataset` whose argmax prediction matches its label.
pub fn accuracy(spec: &NetworkSpec, params: &ParameterSet, dataset: &Dataset) -> Result<f64> {
    let logits = forward(spec, params, &dataset.images)?;
    let hits = (0..dataset.len())
        .filter(|&i| argmax(logits.row(i)) == dataset.labels[i])
        .count();
    Ok(hits as f64 / dataset.len() as f64)
}

/// Initialise from the prior, then minibatch Adam on softmax cross-entropy.
///
/// The prior draw comes from the child stream `prior`, the epoch orders from
/// `epoch{e}` and the checkpoint test subsample from `checkpoint`.
pub fn train_run(
    rng: &SeededRng,
    sampler: &PriorSampler,
    train: &Dataset,
    test: &Dataset,
    cfg: &TrainConfig,
) -> Result<TrainingCurve> {
    cfg.validate()?;
    if train.is_empty() || test.is_empty() {
        return Err(Error::InvalidArgument(
            "training and test sets must be non-empty".into(),
        ));
    }
    let spec = sampler.spec;
    let mut params = sampler.draw(&rng.child("prior"))?;
    let mut state = AdamState::new(&params);
    let checkpoint_set = match cfg.checkpoint_test_size {
        Some(k) if k < test.len() => test.stratified_subsample(&mut rng.child("checkpoint"), k)?,
        _ => test.clone(),
    };

    let mut curve = TrainingCurve {
        prior: sampler.prior.label(),
        seed: rng.seed(),
        stream: rng.label().to_string(),
        steps: Vec::new(),
        train_loss: Vec::new(),
        test_accuracy: Vec::new(),
        checkpoint_examples: checkpoint_set.len(),
        final_test_accuracy: f64::NAN,
    };
    let non_finite = |step| Error::NonFiniteLoss { step, seed: rng.seed() };

    let mut step = 0;
    let (mut window_loss, mut window_len) = (0.0, 0);
    for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..train.len()).collect();
        rng.child_indexed("epoch", epoch).shuffle(&mut order);
        for batch in order.chunks(cfg.batch_size) {
            let x = train.images.select_rows(batch);
            let y: Vec<usize> = batch.iter().map(|&i| train.labels[i]).collect();
            let (l, grads) = match loss_and_grad(spec, &params, &x, &y) {
                Ok(r) => r,
                Err(Error::NonFiniteValue(_)) => return Err(non_finite(step + 1)),
                Err(e) => return Err(e),
            };
            if !l.is_finite() {
                return Err(non_finite(step + 1));
            }
            adam_step(&mut params, &grads, &mut state, &cfg.adam)?;
            step += 1;
            window_loss += l;
            window_len += 1;
            if step % cfg.log_every == 0 {
                curve.steps.push(step);
                curve.train_loss.push(window_loss / window_len as f64);
                curve.test_accuracy.push(accuracy(spec, &params, &checkpoint_set)?);
                (window_loss, window_len) = (0.0, 0);
            }
        }
    }
    if window_len > 0 {
        curve.steps.push(step);
        curve.train_loss.push(window_loss / window_len as f64);
        curve.test_accuracy.push(accuracy(spec, &params, &checkpoint_set)?);
    }
    curve.final_test_accuracy = accuracy(spec, &params, test)?;
    Ok(curve)
}

/// `n_runs` independent runs from the child streams `run{r}`.
pub fn train_runs(
    root: &SeededRng,
    sampler: &PriorSampler,
    train: &Dataset,
    test: &Dataset,
    cfg: &TrainConfig,
    n_runs: usize,
) -> Result<Vec<TrainingCurve>> {
    (0..n_runs)
        .into_par_iter()
        .map(|r| train_run(&root.child_indexed("run", r), sampler, train, test, cfg))
        .collect()
}

/// Test accuracy across runs at each checkpoint: mean and mean ± 2 SE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateCurve {
    pub prior: String,
    pub n_runs: usize,
    pub steps: Vec<usize>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub mean_final_test_accuracy: f64,
}

pub fn aggregate_curves(curves: &[TrainingCurve]) -> Result<AggregateCurve> {
    let first = curves
        .first()
        .ok_or_else(|| Error::InvalidArgument("no curves to aggregate".into()))?;
    if curves.iter().any(|c| c.steps != first.steps) {
        return Err(Error::InvalidArgument("curves were logged at different steps".into()));
    }
    let per_step: Vec<_> = (0..first.steps.len())
        .map(|k| mean_stderr(&curves.iter().map(|c| c.test_accuracy[k]).collect::<Vec<_>>()))
        .collect();
    let finals: Vec<f64> = curves.iter().map(|c| c.final_test_accuracy).collect();
    Ok(AggregateCurve {
        prior: first.prior.clone(),
        n_runs: curves.len(),
        steps: first.steps.clone(),
        mean: per_step.iter().map(|m| m.mean).collect(),
        stderr: per_step.iter().map(|m| m.stderr).collect(),
        lower: per_step.iter().map(|m| m.mean - 2.0 * m.stderr).collect(),
        upper: per_step.iter().map(|m| m.mean + 2.0 * m.stderr).collect(),
        mean_final_test_accuracy: mean_stderr(&finals).mean,
    })
}

/// The i.i.d. baseline followed by the features-only, noiseless Gabor and
/// noisy Gabor variants.
pub fn ablation_variants(color: ColorMode, noisy_sigma_g: f64) -> Vec<(String, PriorSpec)> {
    vec![
        ("iid".into(), PriorSpec::iid()),
        ("features_only".into(), PriorSpec::features()),
        ("gabor_sigma_0".into(), PriorSpec::gabor(color, 0.0)),
        (
            format!("gabor_sigma_{noisy_sigma_g}"),
            PriorSpec::gabor(color, noisy_sigma_g),
        ),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantCurves {
    pub name: String,
    pub prior_spec: PriorSpec,
    pub runs: Vec<TrainingCurve>,
    pub aggregate: AggregateCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub variants: Vec<VariantCurves>,
}

impl AblationReport {
    pub fn variant(&self, name: &str) -> Option<&VariantCurves> {
        self.variants.iter().find(|v| v.name == name)
    }
}

/// Train every variant `n_runs` times. Run `r` of each variant shares the
/// stream `run{r}`, so variants differ only where their priors differ.
pub fn ablation_grid(
    root: &SeededRng,
    spec: &NetworkSpec,
    variants: &[(String, PriorSpec)],
    train: &Dataset,
    test: &Dataset,
    cfg: &TrainConfig,
    n_runs: usize,
) -> Result<AblationReport> {
    let variants = variants
        .iter()
        .map(|(name, prior)| {
            let sampler = PriorSampler::new(spec, *prior, Some(train))?;
            let runs = train_runs(root, &sampler, train, test, cfg, n_runs)?;
            Ok(VariantCurves {
                name: name.clone(),
                prior_spec: *prior,
                aggregate: aggregate_curves(&runs)?,
                runs,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AblationReport { variants })
}

impl CsvTable for TrainingCurve {
    fn header(&self) -> Vec<String> {
        ["prior", "seed", "stream", "step", "train_loss", "test_accuracy"]
            .map(String::from)
            .to_vec()
    }

    fn rows(&self) -> Vec<Vec<String>> {
        (0..self.steps.len())
            .map(|k| {
                vec![
                    self.prior.clone(),
                    self.seed.to_string(),
                    self.stream.clone(),
                    self.steps[k].to_string(),
                    self.train_loss[k].to_string(),
                    self.test_accuracy[k].to_string(),
                ]
            })
            .collect()
    }
}

impl CsvTable for AggregateCurve {
    fn header(&self) -> Vec<String> {
        ["prior", "n_runs", "step", "mean", "stderr", "lower", "upper"]
            .map(String::from)
            .to_vec()
    }

    fn rows(&self) -> Vec<Vec<String>> {
        (0..self.steps.len())
            .map(|k| {
                vec![
                    self.prior.clone(),
                    self.n_runs.to_string(),
                    self.steps[k].to_string(),
                    self.mean[k].to_string(),
                    self.stderr[k].to_string(),
                    self.lower[k].to_string(),
                    self.upper[k].to_string(),
                ]
            })
            .collect()
    }
}

impl CsvTable for AblationReport {
    fn header(&self) -> Vec<String> {
        ["variant", "n_runs", "step", "mean", "stderr", "lower", "upper"]
            .map(String::from)
            .to_vec()
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.variants
            .iter()
            .flat_map(|v| {
                v.aggregate.rows().into_iter().map(move |mut row| {
                    row[0] = v.name.clone();
                    row
                })
            })
            .collect()
    }
}
