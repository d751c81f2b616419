//! Probabilistic Gabor filters.
//!
//! A filter is the real part of a Gabor function whose parameters are drawn
//! from independent uniforms:
//!
//! ```text
//! g(fx, fy) = exp(-(xθ² + γ yθ²) / 2σ²) · cos(2π xθ / λ + ψ)
//! xθ =  fx cos θ + fy sin θ
//! yθ = -fx sin θ + fy cos θ
//! θ ~ U(0, π)  σ ~ U(2, 10)  λ ~ U(1, fw)  ψ ~ U(-π, π)  γ ~ U(0, 1.5)
//! ```
//!
//! Colour filters scale the single-channel filter per channel: with
//! probability 0.3 a black & white filter (β ~ U(0.8, 1) per channel),
//! otherwise a colour filter (β ~ U(-1, 1) per channel).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::rng::SeededRng;
use crate::tensor::Tensor;

pub const THETA_RANGE: (f64, f64) = (0.0, PI);
pub const SIGMA_RANGE: (f64, f64) = (2.0, 10.0);
pub const PSI_RANGE: (f64, f64) = (-PI, PI);
pub const GAMMA_RANGE: (f64, f64) = (0.0, 1.5);
/// Probability of drawing a black & white filter for RGB input.
pub const BW_PROBABILITY: f64 = 0.3;
pub const BW_BETA_RANGE: (f64, f64) = (0.8, 1.0);
pub const COLOUR_BETA_RANGE: (f64, f64) = (-1.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColorMode {
    Grayscale,
    Rgb,
}

impl ColorMode {
    pub fn channels(self) -> usize {
        match self {
            ColorMode::Grayscale => 1,
            ColorMode::Rgb => 3,
        }
    }

    pub fn for_channels(c: usize) -> Option<Self> {
        match c {
            1 => Some(ColorMode::Grayscale),
            3 => Some(ColorMode::Rgb),
            _ => None,
        }
    }
}

/// Where the filter grid sits in Gabor coordinates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coordinates {
    /// `f - (fw + 1) / 2`, so the envelope peaks at the filter centre.
    #[default]
    Centered,
    /// `f ∈ {1, ..., fw}`, envelope peak off the grid's top-left corner.
    Literal,
}

impl Coordinates {
    fn offset(self, fw: usize) -> f64 {
        match self {
            Coordinates::Centered => (fw as f64 + 1.0) / 2.0,
            Coordinates::Literal => 0.0,
        }
    }
}

/// One draw of Gabor hyperparameters for a single filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaborParams {
    pub theta_g: f64,
    pub sigma: f64,
    pub lambda: f64,
    pub psi: f64,
    pub gamma: f64,
    pub bw_flag: bool,
    /// Per-channel scale; `[1, 1, 1]` for grayscale draws.
    pub betas: [f64; 3],
}

impl GaborParams {
    /// True if every field lies in its hyperprior support for width `fw`.
    pub fn in_support(&self, fw: usize) -> bool {
        let within = |x: f64, (lo, hi): (f64, f64)| x >= lo && x < hi;
        let lambda_ok = if fw == 1 {
            self.lambda == 1.0
        } else {
            within(self.lambda, (1.0, fw as f64))
        };
        let beta_range = if self.bw_flag { BW_BETA_RANGE } else { COLOUR_BETA_RANGE };
        within(self.theta_g, THETA_RANGE)
            && within(self.sigma, SIGMA_RANGE)
            && lambda_ok
            && within(self.psi, PSI_RANGE)
            && within(self.gamma, GAMMA_RANGE)
            && self.betas.iter().all(|&b| b >= beta_range.0 && b <= beta_range.1)
    }
}

/// Draw θ, σ, λ, ψ, γ and, for RGB, the black & white switch and per-channel β.
pub fn sample_gabor_params(rng: &mut SeededRng, fw: usize, color: ColorMode) -> GaborParams {
    let theta_g = rng.uniform(THETA_RANGE.0, THETA_RANGE.1);
    let sigma = rng.uniform(SIGMA_RANGE.0, SIGMA_RANGE.1);
    let lambda = rng.uniform(1.0, fw.max(1) as f64);
    let psi = rng.uniform(PSI_RANGE.0, PSI_RANGE.1);
    let gamma = rng.uniform(GAMMA_RANGE.0, GAMMA_RANGE.1);
    let (bw_flag, betas) = match color {
        ColorMode::Grayscale => (true, [1.0; 3]),
        ColorMode::Rgb => {
            let p_bw = rng.uniform(0.0, 1.0);
            // P_bw > 0.3 selects a colour filter
            let bw = p_bw <= BW_PROBABILITY;
            let (lo, hi) = if bw { BW_BETA_RANGE } else { COLOUR_BETA_RANGE };
            (bw, [rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)])
        }
    };
    GaborParams {
        theta_g,
        sigma,
        lambda,
        psi,
        gamma,
        bw_flag,
        betas,
    }
}

/// Single-channel `fw x fw` filter, indexed `[row = fy][col = fx]`.
pub fn eval_gabor(p: &GaborParams, fw: usize, coords: Coordinates) -> Tensor {
    let offset = coords.offset(fw);
    let (sin_t, cos_t) = p.theta_g.sin_cos();
    let mut data = Vec::with_capacity(fw * fw);
    for row in 1..=fw {
        let fy = row as f64 - offset;
        for col in 1..=fw {
            let fx = col as f64 - offset;
            let x_t = fx * cos_t + fy * sin_t;
            let y_t = -fx * sin_t + fy * cos_t;
            let envelope = (-(x_t * x_t + p.gamma * y_t * y_t) / (2.0 * p.sigma * p.sigma)).exp();
            data.push(envelope * (2.0 * PI * x_t / p.lambda + p.psi).cos());
        }
    }
    Tensor::new(vec![fw, fw], data).expect("fw x fw buffer")
}

/// Stack `betas[i] * mono` into a `(3, fw, fw)` filter.
pub fn colorize(p: &GaborParams, mono: &Tensor) -> Tensor {
    let mut shape = vec![3];
    shape.extend_from_slice(mono.shape());
    let data = p
        .betas
        .iter()
        .flat_map(|&b| mono.data().iter().map(move |&v| b * v))
        .collect();
    Tensor::new(shape, data).expect("three scaled copies")
}

/// Add i.i.d. N(0, sigma_g²) noise to every entry. `sigma_g == 0` is a no-op.
pub fn add_filter_noise(rng: &mut SeededRng, mut filter: Tensor, sigma_g: f64) -> Tensor {
    if sigma_g > 0.0 {
        for v in filter.data_mut() {
            *v += sigma_g * rng.standard_normal();
        }
    }
    filter
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(theta: f64, sigma: f64, lambda: f64, psi: f64, gamma: f64) -> GaborParams {
        GaborParams {
            theta_g: theta,
            sigma,
            lambda,
            psi,
            gamma,
            bw_flag: true,
            betas: [1.0; 3],
        }
    }

    #[test]
    fn centre_pixel_is_one() {
        let p = params(0.7, 3.0, 2.5, 0.0, 0.9);
        let f = eval_gabor(&p, 5, Coordinates::Centered);
        assert_eq!(f.data()[12], 1.0);
    }

    #[test]
    fn corner_value_by_hand() {
        let p = params(0.0, 2.0, 4.0, 0.0, 1.0);
        let f = eval_gabor(&p, 5, Coordinates::Centered);
        // (fx, fy) = (-2, -2): exp(-8 / 8) * cos(-π)
        let want = -(-1.0f64).exp();
        assert!((f.data()[0] - want).abs() < 1e-15);
        assert!((f.data()[0] + 0.36788).abs() < 1e-5);
    }

    #[test]
    fn literal_coordinates_start_at_one() {
        let p = params(0.0, 2.0, 4.0, 0.0, 1.0);
        let f = eval_gabor(&p, 3, Coordinates::Literal);
        // (1, 1): exp(-2 / 8) * cos(π / 2)
        let want = (-0.25f64).exp() * (PI / 2.0).cos();
        assert!((f.data()[0] - want).abs() < 1e-15);
    }

    #[test]
    fn zero_gamma_rows_identical() {
        let p = params(0.0, 2.0, 3.0, 0.4, 0.0);
        let f = eval_gabor(&p, 5, Coordinates::Centered);
        let rows: Vec<&[f64]> = f.data().chunks(5).collect();
        for r in &rows[1..] {
            assert_eq!(*r, rows[0]);
        }
    }

    #[test]
    fn colorize_scales_channels() {
        let mono = Tensor::new(vec![2, 2], vec![1.0, -2.0, 0.5, 3.0]).unwrap();
        let mut p = params(0.0, 2.0, 2.0, 0.0, 1.0);
        p.bw_flag = false;
        p.betas = [-1.0, 0.0, 1.0];
        let c = colorize(&p, &mono);
        assert_eq!(c.shape(), &[3, 2, 2]);
        let d = c.data();
        assert!(d[4..8].iter().all(|&v| v == 0.0));
        for i in 0..4 {
            assert_eq!(d[i], -d[8 + i]);
        }
        p.betas = [1.0; 3];
        let c = colorize(&p, &mono);
        assert_eq!(&c.data()[0..4], &c.data()[4..8]);
        assert_eq!(&c.data()[0..4], &c.data()[8..12]);
    }

    #[test]
    fn bw_channel_ratio_bounded() {
        let mono = Tensor::new(vec![1, 2], vec![0.3, -0.7]).unwrap();
        let mut p = params(0.0, 2.0, 2.0, 0.0, 1.0);
        p.betas = [0.9, 0.85, 0.95];
        let c = colorize(&p, &mono);
        let d = c.data();
        for i in 0..3 {
            for j in 0..3 {
                let r = d[2 * i] / d[2 * j];
                assert!(r <= 1.0 / 0.8 + 1e-12);
            }
        }
    }

    #[test]
    fn zero_noise_is_bit_identical() {
        let mut rng = SeededRng::new(1, "noise");
        let f = eval_gabor(&params(1.0, 3.0, 2.0, 0.5, 1.0), 5, Coordinates::Centered);
        assert_eq!(add_filter_noise(&mut rng, f.clone(), 0.0), f);
    }

    #[test]
    fn draws_stay_in_support() {
        let mut rng = SeededRng::new(5, "support");
        for fw in [1, 3, 5, 7] {
            for color in [ColorMode::Grayscale, ColorMode::Rgb] {
                for _ in 0..2000 {
                    assert!(sample_gabor_params(&mut rng, fw, color).in_support(fw));
                }
            }
        }
    }
}
