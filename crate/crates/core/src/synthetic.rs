//! Seeded desk-scale problem instances: random ReLU networks and networks whose
//! output depends on a planted subset of the inputs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::classifier::{Activation, DistortionObjective, FeedforwardNetwork, GaussianInputModel, Layer};
use crate::error::Result;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn dense_layer(rng: &mut ChaCha8Rng, inputs: usize, outputs: usize, activation: Activation) -> Result<Layer> {
    let scale = 1.0 / (inputs as f64).sqrt();
    let weights = (0..outputs)
        .map(|_| (0..inputs).map(|_| scale * gaussian(rng)).collect())
        .collect();
    let bias = (0..outputs).map(|_| 0.1 * gaussian(rng)).collect();
    Layer::new(weights, bias, activation)
}

/// ReLU hidden layers of the given widths and an identity output layer, with
/// `N(0, 1/fan_in)` weights.
pub fn random_network(
    rng: &mut ChaCha8Rng,
    input_dim: usize,
    hidden: &[usize],
    classes: usize,
) -> Result<FeedforwardNetwork> {
    let mut layers = Vec::with_capacity(hidden.len() + 1);
    let mut dim = input_dim;
    for &h in hidden {
        layers.push(dense_layer(rng, dim, h, Activation::Relu)?);
        dim = h;
    }
    layers.push(dense_layer(rng, dim, classes, Activation::Identity)?);
    FeedforwardNetwork::new(input_dim, layers)
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| gaussian(rng)).collect()
}

/// Uniform sample from `[lo, hi)^n`.
pub fn uniform_vector(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

/// A classification instance: network, input and noise model.
#[derive(Debug, Clone)]
pub struct Instance {
    pub network: FeedforwardNetwork,
    pub input: Vec<f64>,
    pub noise: GaussianInputModel,
    /// Inputs that influence the output; all of them for unplanted instances.
    pub support: Vec<usize>,
}

impl Instance {
    pub fn objective(&self) -> Result<DistortionObjective> {
        DistortionObjective::new(self.network.clone(), self.input.clone(), self.noise.clone())
    }

    pub fn dim(&self) -> usize {
        self.input.len()
    }
}

/// Random two-layer ReLU instance with standard normal input and noise model.
pub fn random_instance(seed: u64, n: usize, hidden: usize, classes: usize) -> Result<Instance> {
    let mut rng = rng(seed);
    let network = random_network(&mut rng, n, &[hidden], classes)?;
    let input = random_vector(&mut rng, n);
    let noise = GaussianInputModel::new(vec![0.0; n], vec![1.0; n])?;
    Ok(Instance {
        network,
        input,
        noise,
        support: (0..n).collect(),
    })
}

/// Parameters for [`planted_instance`].
#[derive(Debug, Clone, Copy)]
pub struct PlantedSpec {
    pub n: usize,
    /// Number of inputs with ordinary (locally active) influence on the output.
    pub support: usize,
    pub hidden: usize,
    pub classes: usize,
    /// Number of additional influential inputs whose hidden units are all inactive
    /// at `x`, so their input gradient is exactly zero there.
    pub masked: usize,
}

impl PlantedSpec {
    pub fn new(n: usize, support: usize) -> Self {
        Self {
            n,
            support,
            hidden: 12,
            classes: 3,
            masked: 0,
        }
    }

    pub fn with_masked(mut self, masked: usize) -> Self {
        self.masked = masked;
        self
    }
}

/// Dead zone half-width of a masked input's hidden units.
const MASK_MARGIN: f64 = 0.3;
const MASK_OUT: f64 = 1.5;

/// Two-layer ReLU network whose output depends on exactly
/// `spec.support + spec.masked` randomly chosen inputs.
///
/// Planted inputs have graded importance: the `j`-th planted input gets weight
/// scale `1.5 / (1 + j/2)`. A masked input `i` feeds the pair
/// `relu(±(y_i - x_i) - m)`, which is flat around `y_i = x_i` but grows once `y_i`
/// moves away. Every other input has zero weight.
pub fn planted_instance(seed: u64, spec: PlantedSpec) -> Result<Instance> {
    let PlantedSpec {
        n,
        support: d,
        hidden,
        classes,
        masked,
    } = spec;
    assert!(d >= 1 && d + masked <= n, "invalid planted spec");
    let mut rng = rng(seed);

    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let planted = order[..d].to_vec();
    let masked_idx = order[d..d + masked].to_vec();

    let input = random_vector(&mut rng, n);
    let noise = GaussianInputModel::new(vec![0.0; n], vec![1.0; n])?;

    let mut w1 = vec![vec![0.0; n]; hidden];
    for row in w1.iter_mut() {
        for (rank, &i) in planted.iter().enumerate() {
            row[i] = 1.5 / (1.0 + rank as f64 / 2.0) * gaussian(&mut rng);
        }
    }
    let mut b1: Vec<f64> = (0..hidden).map(|_| 0.1 * gaussian(&mut rng)).collect();
    let mut w2: Vec<Vec<f64>> = (0..classes)
        .map(|_| (0..hidden).map(|_| gaussian(&mut rng) / (hidden as f64).sqrt()).collect())
        .collect();

    for &i in &masked_idx {
        for sign in [1.0, -1.0] {
            let mut row = vec![0.0; n];
            row[i] = sign;
            w1.push(row);
            b1.push(-sign * input[i] - MASK_MARGIN);
        }
        for row in w2.iter_mut() {
            let out = MASK_OUT * gaussian(&mut rng);
            row.push(out);
            row.push(out);
        }
    }

    let l1 = Layer::new(w1, b1, Activation::Relu)?;
    let l2 = Layer::new(w2, vec![0.0; classes], Activation::Identity)?;
    let network = FeedforwardNetwork::new(n, vec![l1, l2])?;

    let mut support = planted;
    support.extend(masked_idx);
    support.sort_unstable();
    Ok(Instance {
        network,
        input,
        noise,
        support,
    })
}
