use serde::{Deserialize, Serialize};

use super::params::ParameterSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lr >= 0.0
            && self.lr.is_finite()
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid Adam hyperparameters {self:?}")))
        }
    }
}

/// First and second moment estimates, shaped like the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: ParameterSet,
    pub v: ParameterSet,
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &ParameterSet) -> Self {
        Self {
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
        }
    }
}

fn same_shapes(a: &ParameterSet, b: &ParameterSet) -> bool {
    a.layers.len() == b.layers.len() && a.tensors().zip(b.tensors()).all(|(x, y)| x.shape() == y.shape())
}

/// One bias-corrected Adam update, in place.
pub fn adam_step(
    params: &mut ParameterSet,
    grads: &ParameterSet,
    state: &mut AdamState,
    cfg: &AdamConfig,
) -> Result<()> {
    cfg.validate()?;
    if !same_shapes(params, grads) || !same_shapes(params, &state.m) || !same_shapes(params, &state.v) {
        return Err(Error::shape(0, "Adam parameter, gradient and moment shapes differ"));
    }
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    let tensors = params
        .tensors_mut()
        .zip(grads.tensors())
        .zip(state.m.tensors_mut().zip(state.v.tensors_mut()));
    for ((p, g), (m, v)) in tensors {
        for (((p, &g), m), v) in p
            .data_mut()
            .iter_mut()
            .zip(g.data())
            .zip(m.data_mut())
            .zip(v.data_mut())
        {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::NetworkSpec;

    fn scalar_net() -> ParameterSet {
        // one weight, one bias
        let spec = NetworkSpec::fcnn([1, 1, 1], 0, 0, 1).unwrap();
        ParameterSet::zeros(&spec).unwrap()
    }

    #[test]
    fn first_step_by_hand() {
        let mut p = scalar_net();
        let mut g = p.zeros_like();
        g.set(0, 1.0);
        let mut s = AdamState::new(&p);
        let cfg = AdamConfig::default();
        adam_step(&mut p, &g, &mut s, &cfg).unwrap();
        // m_hat = v_hat = 1 at t = 1
        let want = -1e-3 * (1.0 / (1.0 + 1e-8));
        assert!((p.get(0) - want).abs() < 1e-18);
        assert_eq!(s.t, 1);
    }

    #[test]
    fn zero_gradient_is_noop_but_counts() {
        let mut p = scalar_net();
        p.set(0, 0.25);
        let before = p.clone();
        let g = p.zeros_like();
        let mut s = AdamState::new(&p);
        adam_step(&mut p, &g, &mut s, &AdamConfig::default()).unwrap();
        assert_eq!(p, before);
        assert_eq!(s.t, 1);
    }

    #[test]
    fn constant_gradient_descends_monotonically() {
        let mut p = scalar_net();
        let mut g = p.zeros_like();
        g.set(0, 1.0);
        let mut s = AdamState::new(&p);
        let cfg = AdamConfig::default();
        let mut prev = 0.0;
        for _ in 0..2 {
            adam_step(&mut p, &g, &mut s, &cfg).unwrap();
            assert!(p.get(0) < prev);
            prev = p.get(0);
        }
        // with a constant gradient both bias-corrected moments stay at 1
        assert!((prev + 2.0 * 1e-3 / (1.0 + 1e-8)).abs() < 1e-15);
    }

    #[test]
    fn rejects_mismatched_shapes() {
        let mut p = scalar_net();
        let spec = NetworkSpec::fcnn([2, 1, 1], 0, 0, 1).unwrap();
        let g = ParameterSet::zeros(&spec).unwrap();
        let mut s = AdamState::new(&p);
        assert!(adam_step(&mut p, &g, &mut s, &AdamConfig::default()).is_err());
    }
}
