use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::adf::{backpropagate, collapse_affine, propagate};
use super::network::FeedforwardNetwork;
use super::noise::GaussianInputModel;
use crate::error::{Error, Result};
use crate::linalg::argmax;
use crate::solvers::Objective;

/// Tolerance on the `[0, 1]` box for relevance vectors.
pub const BOX_TOL: f64 = 1e-9;

/// Expected squared change of the predicted logit when the features not kept by
/// a relevance vector `s` are replaced by Gaussian noise:
///
/// `D(s) = E[(Φ(x) - Φ(s ⊙ x + (1 - s) ⊙ n))^2]`, `n ~ N(μ, diag(σ²))`.
///
/// [`distortion`](Self::distortion) evaluates the ADF approximation
/// `(Φ(x) - m)^2 + v`, where `(m, v)` are the propagated mean and variance of the
/// target logit for the input distribution `N(s ⊙ x + (1 - s) ⊙ μ, (1 - s)² ⊙ σ²)`.
#[derive(Debug, Clone)]
pub struct DistortionObjective {
    network: FeedforwardNetwork,
    /// `network` with identity runs folded, used for propagation.
    adf_network: FeedforwardNetwork,
    input: Vec<f64>,
    noise: GaussianInputModel,
    target: usize,
    reference: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

impl DistortionObjective {
    /// The target is the predicted class of `input` (lowest index on ties).
    pub fn new(network: FeedforwardNetwork, input: Vec<f64>, noise: GaussianInputModel) -> Result<Self> {
        Error::check_len(network.input_dim(), input.len())?;
        Error::check_len(network.input_dim(), noise.dim())?;
        if !input.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("input must be finite"));
        }
        let logits = network.forward(&input)?;
        let target = argmax(&logits);
        let reference = logits[target];
        Ok(Self {
            adf_network: collapse_affine(&network),
            network,
            input,
            noise,
            target,
            reference,
        })
    }

    pub fn dim(&self) -> usize {
        self.input.len()
    }

    pub fn network(&self) -> &FeedforwardNetwork {
        &self.network
    }

    pub fn input(&self) -> &[f64] {
        &self.input
    }

    pub fn noise(&self) -> &GaussianInputModel {
        &self.noise
    }

    pub fn target(&self) -> usize {
        self.target
    }

    /// `Φ(x)` restricted to the target class.
    pub fn reference(&self) -> f64 {
        self.reference
    }

    fn check_mask(&self, s: &[f64]) -> Result<()> {
        Error::check_len(self.dim(), s.len())?;
        if s.iter().any(|&v| !(-BOX_TOL..=1.0 + BOX_TOL).contains(&v)) {
            return Err(Error::invalid("relevance vector outside [0, 1]"));
        }
        Ok(())
    }

    fn masked_input(&self, s: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mu = self.noise.mean();
        let sd = self.noise.std();
        let mean = (0..s.len())
            .map(|i| s[i] * self.input[i] + (1.0 - s[i]) * mu[i])
            .collect();
        let var = (0..s.len())
            .map(|i| {
                let a = (1.0 - s[i]) * sd[i];
                a * a
            })
            .collect();
        (mean, var)
    }

    pub fn distortion(&self, s: &[f64]) -> Result<f64> {
        self.check_mask(s)?;
        Ok(self.distortion_unchecked(s))
    }

    pub(crate) fn distortion_unchecked(&self, s: &[f64]) -> f64 {
        let (mean, var) = self.masked_input(s);
        let tape = propagate(&self.adf_network, &mean, &var);
        let diff = self.reference - tape.out_mean[self.target];
        diff * diff + tape.out_var[self.target]
    }

    /// Reverse-mode gradient of the ADF distortion with respect to `s`.
    pub fn distortion_gradient(&self, s: &[f64]) -> Result<Vec<f64>> {
        self.check_mask(s)?;
        Ok(self.gradient_unchecked(s))
    }

    pub(crate) fn gradient_unchecked(&self, s: &[f64]) -> Vec<f64> {
        let (mean, var) = self.masked_input(s);
        let tape = propagate(&self.adf_network, &mean, &var);
        let classes = self.network.num_classes();
        let mut g_mean = vec![0.0; classes];
        let mut g_var = vec![0.0; classes];
        g_mean[self.target] = 2.0 * (tape.out_mean[self.target] - self.reference);
        g_var[self.target] = 1.0;
        let (g_mean, g_var) = backpropagate(&self.adf_network, &tape, g_mean, g_var);

        let mu = self.noise.mean();
        let sd = self.noise.std();
        (0..s.len())
            .map(|i| {
                g_mean[i] * (self.input[i] - mu[i]) - g_var[i] * 2.0 * (1.0 - s[i]) * sd[i] * sd[i]
            })
            .collect()
    }

    /// Unbiased Monte Carlo estimate of the exact expectation, with its standard
    /// error. Deterministic for a given seed.
    pub fn mc_distortion(&self, s: &[f64], num_samples: usize, seed: u64) -> Result<McEstimate> {
        self.check_mask(s)?;
        if num_samples < 2 {
            return Err(Error::invalid("Monte Carlo estimate needs at least 2 samples"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mu = self.noise.mean();
        let sd = self.noise.std();
        let n = self.dim();
        let mut y = vec![0.0; n];
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..num_samples {
            for i in 0..n {
                let xi: f64 = StandardNormal.sample(&mut rng);
                let noise = mu[i] + sd[i] * xi;
                y[i] = s[i] * self.input[i] + (1.0 - s[i]) * noise;
            }
            let diff = self.reference - self.network.forward_unchecked(&y)[self.target];
            let val = diff * diff;
            sum += val;
            sum_sq += val * val;
        }
        let m = num_samples as f64;
        let estimate = sum / m;
        let var = ((sum_sq - m * estimate * estimate) / (m - 1.0)).max(0.0);
        Ok(McEstimate {
            estimate,
            std_error: (var / m).sqrt(),
        })
    }
}

impl Objective for DistortionObjective {
    fn value(&self, s: &[f64]) -> f64 {
        self.distortion_unchecked(s)
    }

    fn gradient(&self, s: &[f64]) -> Vec<f64> {
        self.gradient_unchecked(s)
    }
}
