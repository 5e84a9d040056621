use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::argmax;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    /// Derivative, with the ReLU subgradient at zero taken as 0.
    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// Affine map `W y + b` followed by an activation. `W` is row-major with one row
/// per output unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    weights: Vec<f64>,
    rows: usize,
    cols: usize,
    bias: Vec<f64>,
    activation: Activation,
}

impl Layer {
    pub fn new(weights: Vec<Vec<f64>>, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        let rows = weights.len();
        if rows == 0 {
            return Err(Error::invalid("layer has no output units"));
        }
        let cols = weights[0].len();
        if cols == 0 || weights.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("layer weight rows must be non-empty and equal length"));
        }
        Error::check_len(rows, bias.len())?;
        let weights: Vec<f64> = weights.into_iter().flatten().collect();
        if !weights.iter().chain(&bias).all(|v| v.is_finite()) {
            return Err(Error::invalid("layer parameters must be finite"));
        }
        Ok(Self {
            weights,
            rows,
            cols,
            bias,
            activation,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.cols
    }

    pub fn output_dim(&self) -> usize {
        self.rows
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.weights[i * self.cols..(i + 1) * self.cols]
    }

    pub fn weight_rows(&self) -> Vec<Vec<f64>> {
        self.weights.chunks_exact(self.cols).map(<[f64]>::to_vec).collect()
    }

    /// `W y + b`
    pub fn affine(&self, y: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(y).map(|(w, v)| w * v).sum::<f64>() + self.bias[i])
            .collect()
    }

    /// `(W ⊙ W) v`, the variance of `W y` for independent components of variance `v`.
    pub fn affine_variance(&self, var: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(var).map(|(w, v)| w * w * v).sum())
            .collect()
    }

    /// `Wᵀ g`
    pub fn transpose_apply(&self, g: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (i, &gi) in g.iter().enumerate() {
            if gi == 0.0 {
                continue;
            }
            for (o, w) in out.iter_mut().zip(self.row(i)) {
                *o += w * gi;
            }
        }
        out
    }

    /// `(W ⊙ W)ᵀ g`
    pub fn transpose_apply_squared(&self, g: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (i, &gi) in g.iter().enumerate() {
            if gi == 0.0 {
                continue;
            }
            for (o, w) in out.iter_mut().zip(self.row(i)) {
                *o += w * w * gi;
            }
        }
        out
    }
}

#[derive(Serialize, Deserialize)]
struct RawLayer {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
    activation: Activation,
}

#[derive(Serialize, Deserialize)]
struct RawNetwork {
    input_dim: usize,
    layers: Vec<RawLayer>,
}

/// Dense feedforward classifier: a chain of affine layers with activations. The
/// output is the vector of pre-softmax class scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNetwork", into = "RawNetwork")]
pub struct FeedforwardNetwork {
    input_dim: usize,
    layers: Vec<Layer>,
}

impl TryFrom<RawNetwork> for FeedforwardNetwork {
    type Error = Error;

    fn try_from(raw: RawNetwork) -> Result<Self> {
        let layers = raw
            .layers
            .into_iter()
            .map(|l| Layer::new(l.weights, l.bias, l.activation))
            .collect::<Result<Vec<_>>>()?;
        FeedforwardNetwork::new(raw.input_dim, layers)
    }
}

impl From<FeedforwardNetwork> for RawNetwork {
    fn from(net: FeedforwardNetwork) -> Self {
        RawNetwork {
            input_dim: net.input_dim,
            layers: net
                .layers
                .iter()
                .map(|l| RawLayer {
                    weights: l.weight_rows(),
                    bias: l.bias.clone(),
                    activation: l.activation,
                })
                .collect(),
        }
    }
}

impl FeedforwardNetwork {
    pub fn new(input_dim: usize, layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("network needs at least one layer"));
        }
        let mut dim = input_dim;
        for (i, layer) in layers.iter().enumerate() {
            if layer.input_dim() != dim {
                return Err(Error::invalid(format!(
                    "layer {i} expects {} inputs but receives {dim}",
                    layer.input_dim()
                )));
            }
            dim = layer.output_dim();
        }
        Ok(Self { input_dim, layers })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn num_classes(&self) -> usize {
        self.layers.last().map_or(0, Layer::output_dim)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Error::check_len(self.input_dim, x.len())?;
        Ok(self.forward_unchecked(x))
    }

    pub(crate) fn forward_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        for layer in &self.layers {
            let act = layer.activation;
            y = layer.affine(&y).into_iter().map(|z| act.apply(z)).collect();
        }
        y
    }

    /// Predicted class (lowest index on ties).
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.forward(x)?))
    }

    /// Gradient of logit `index` with respect to the input, by reverse mode.
    pub fn input_gradient(&self, x: &[f64], index: usize) -> Result<Vec<f64>> {
        Error::check_len(self.input_dim, x.len())?;
        if index >= self.num_classes() {
            return Err(Error::invalid(format!(
                "logit index {index} out of range for {} classes",
                self.num_classes()
            )));
        }
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        let mut y = x.to_vec();
        for layer in &self.layers {
            let z = layer.affine(&y);
            y = z.iter().map(|&zi| layer.activation.apply(zi)).collect();
            pre_activations.push(z);
        }

        let mut adj = vec![0.0; self.num_classes()];
        adj[index] = 1.0;
        for (layer, z) in self.layers.iter().zip(&pre_activations).rev() {
            for (a, &zi) in adj.iter_mut().zip(z) {
                *a *= layer.activation.derivative(zi);
            }
            adj = layer.transpose_apply(&adj);
        }
        Ok(adj)
    }
}
