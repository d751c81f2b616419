use crate::datasets::{sample_exemplars, Dataset};
use crate::error::Result;
use crate::nn::{NetworkSpec, ParameterSet};
use crate::priors::{init_network, PriorSpec};
use crate::rng::SeededRng;

/// Draws complete parameter sets from a prior, picking fresh class
/// exemplars for each draw when the prior needs them.
#[derive(Debug, Clone, Copy)]
pub struct PriorSampler<'a> {
    pub spec: &'a NetworkSpec,
    pub prior: PriorSpec,
    /// Where exemplars for the feature-specific prior come from.
    pub exemplar_pool: Option<&'a Dataset>,
}

impl<'a> PriorSampler<'a> {
    pub fn new(spec: &'a NetworkSpec, prior: PriorSpec, exemplar_pool: Option<&'a Dataset>) -> Result<Self> {
        prior.validate(spec)?;
        Ok(Self {
            spec,
            prior,
            exemplar_pool,
        })
    }

    /// One draw. Exemplars come from the child stream `exemplars` and the
    /// weights from `init`.
    pub fn draw(&self, rng: &SeededRng) -> Result<ParameterSet> {
        let exemplars = match (self.prior.exemplars_per_class(), self.exemplar_pool) {
            (Some(n), Some(pool)) => Some(sample_exemplars(&mut rng.child("exemplars"), pool, n)?),
            _ => None,
        };
        init_network(&rng.child("init"), self.spec, &self.prior, exemplars.as_ref())
    }
}
