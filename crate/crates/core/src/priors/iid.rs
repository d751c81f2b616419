use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::tensor::Tensor;

/// Variance of the fan-in scaled Gaussian prior.
pub fn iid_variance(n_in: usize) -> f64 {
    2.0 / n_in as f64
}

/// I.i.d. N(0, 2 / n_in) entries.
pub fn sample_iid_layer(rng: &mut SeededRng, shape: &[usize], n_in: usize) -> Result<Tensor> {
    if n_in == 0 {
        return Err(Error::InvalidArgument("fan-in must be at least 1".into()));
    }
    let std = iid_variance(n_in).sqrt();
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| std * rng.standard_normal()).collect();
    Tensor::new(shape.to_vec(), data)
}

/// Affinely rescale the whole layer to mean 0 and (population) variance
/// 2 / n_in. Order statistics are preserved.
pub fn standardize_layer(weights: &Tensor, n_in: usize) -> Result<Tensor> {
    if n_in == 0 {
        return Err(Error::InvalidArgument("fan-in must be at least 1".into()));
    }
    let mean = weights.mean();
    let var = weights.variance();
    if !(var > 0.0) || !var.is_finite() {
        return Err(Error::DegenerateLayer);
    }
    let scale = (iid_variance(n_in) / var).sqrt();
    let data = weights.data().iter().map(|&w| (w - mean) * scale).collect();
    Tensor::new(weights.shape().to_vec(), data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardize_hits_target_moments() {
        let w = Tensor::new(vec![2, 3], vec![1.0, 5.0, -2.0, 0.5, 3.0, 3.5]).unwrap();
        let s = standardize_layer(&w, 25).unwrap();
        assert!(s.mean().abs() < 1e-12);
        assert!((s.variance() - 0.08).abs() < 1e-12);
        let again = standardize_layer(&s, 25).unwrap();
        for (a, b) in again.data().iter().zip(s.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_layer_is_degenerate() {
        let w = Tensor::filled(&[4], 0.3);
        assert!(matches!(standardize_layer(&w, 4), Err(Error::DegenerateLayer)));
    }

    #[test]
    fn iid_moments() {
        let mut rng = SeededRng::new(11, "iid");
        let t = sample_iid_layer(&mut rng, &[1000, 1000], 50).unwrap();
        assert!(t.mean().abs() < 1e-3);
        assert!((t.variance() - 0.04).abs() < 1e-3);
    }
}
