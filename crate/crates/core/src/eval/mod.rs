//! Prior-quality evaluations.
//!
//! Every experiment derives draw `i` (or run `i`) from the child stream
//! `draw{i}` (`run{i}`) of its root, so the outcome does not depend on how
//! the work is scheduled, and two priors evaluated from the same root share
//! the weights of every layer they initialise the same way.

mod cappa;
mod correlation;
mod entropy;
mod report;
mod sampler;
mod stats;
mod train;

pub use cappa::{cappa, cappa_of_predictions, CappaReport};
pub use correlation::{activation_correlations, pearson, sample_pairs, CorrelationReport, PairSet};
pub use entropy::{histogram_entropy, prediction_histogram, prior_predictive_entropy, EntropyReport};
pub use report::{fingerprint, write_csv, write_json, CsvTable};
pub use sampler::PriorSampler;
pub use stats::{mean_stderr, MeanStderr};
pub use train::{
    ablation_grid, ablation_variants, accuracy, aggregate_curves, train_run, train_runs, AblationReport,
    AggregateCurve, TrainConfig, TrainingCurve, VariantCurves,
};

use rayon::prelude::*;

use crate::error::Result;
use crate::rng::SeededRng;

/// Run `f` on draws `0..n` in parallel and collect results in draw order.
pub(crate) fn per_draw<T: Send>(
    root: &SeededRng,
    n: usize,
    f: impl Fn(usize, SeededRng) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    (0..n)
        .into_par_iter()
        .map(|i| f(i, root.child_indexed("draw", i)))
        .collect()
}
