//! Assumed density filtering: propagation of a diagonal Gaussian through the
//! network by layer-wise moment matching.
//!
//! Runs of identity layers are first folded into the layer that follows them. An
//! affine map of a Gaussian is Gaussian, so only the diagonal approximation at
//! each ReLU remains, and purely affine networks are propagated exactly.

use super::network::{Activation, FeedforwardNetwork, Layer};
use crate::error::{Error, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[inline]
pub(crate) fn normal_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

#[inline]
pub(crate) fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Mean and variance of `max(X, 0)` for `X ~ N(mean, var)`, plus the partial
/// derivatives of both with respect to `(mean, var)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReluMoments {
    pub mean: f64,
    pub var: f64,
    pub dmean_dmu: f64,
    pub dmean_dvar: f64,
    pub dvar_dmu: f64,
    pub dvar_dvar: f64,
}

pub fn relu_moments(mu: f64, var: f64) -> ReluMoments {
    if var <= 0.0 {
        let on = if mu > 0.0 { 1.0 } else { 0.0 };
        return ReluMoments {
            mean: mu.max(0.0),
            var: 0.0,
            dmean_dmu: on,
            dmean_dvar: 0.0,
            dvar_dmu: 0.0,
            dvar_dvar: on,
        };
    }
    let sigma = var.sqrt();
    let z = mu / sigma;
    let pdf = normal_pdf(z);
    let cdf = normal_cdf(z);
    let cdf_neg = normal_cdf(-z);
    // E[max(X,0)] = sigma (z Φ(z) + φ(z))
    let m1 = sigma * (z * cdf + pdf);
    // Var / sigma^2 = Φ + z² Φ(z)Φ(-z) + z φ (Φ(-z) - Φ(z)) - φ², arranged so that
    // the large-|z| limits do not cancel.
    let bracket = cdf + z * z * cdf * cdf_neg + z * pdf * (cdf_neg - cdf) - pdf * pdf;
    let out_var = (var * bracket).max(0.0);
    ReluMoments {
        mean: m1,
        var: out_var,
        dmean_dmu: cdf,
        dmean_dvar: pdf / (2.0 * sigma),
        dvar_dmu: 2.0 * m1 * cdf_neg,
        dvar_dvar: cdf - (z * cdf + pdf) * pdf,
    }
}

/// Equivalent network in which no identity layer is followed by another layer.
pub(crate) fn collapse_affine(net: &FeedforwardNetwork) -> FeedforwardNetwork {
    let mut layers = Vec::with_capacity(net.layers().len());
    let mut pending: Option<Layer> = None;
    for layer in net.layers() {
        let merged = match pending.take() {
            None => layer.clone(),
            Some(prev) => compose(layer, &prev),
        };
        if merged.activation() == Activation::Identity {
            pending = Some(merged);
        } else {
            layers.push(merged);
        }
    }
    layers.extend(pending);
    FeedforwardNetwork::new(net.input_dim(), layers).expect("composition preserves shapes")
}

/// `outer ∘ inner` for an identity `inner`, with `outer`'s activation.
fn compose(outer: &Layer, inner: &Layer) -> Layer {
    let weights = (0..outer.output_dim())
        .map(|i| {
            let row = outer.row(i);
            (0..inner.input_dim())
                .map(|j| row.iter().enumerate().map(|(k, w)| w * inner.row(k)[j]).sum())
                .collect()
        })
        .collect();
    let shifted = outer.affine(inner.bias());
    Layer::new(weights, shifted, outer.activation()).expect("composition preserves shapes")
}

/// Per-layer values kept for the reverse pass.
pub(crate) struct AdfTape {
    /// Pre-activation (mean, var) of every layer.
    pre: Vec<(Vec<f64>, Vec<f64>)>,
    pub(crate) out_mean: Vec<f64>,
    pub(crate) out_var: Vec<f64>,
}

pub(crate) fn propagate(net: &FeedforwardNetwork, mean: &[f64], var: &[f64]) -> AdfTape {
    let mut m = mean.to_vec();
    let mut v = var.to_vec();
    let mut pre = Vec::with_capacity(net.layers().len());
    for layer in net.layers() {
        let pm = layer.affine(&m);
        let pv = layer.affine_variance(&v);
        (m, v) = activate(layer, &pm, &pv);
        pre.push((pm, pv));
    }
    AdfTape {
        pre,
        out_mean: m,
        out_var: v,
    }
}

fn activate(layer: &Layer, m: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    match layer.activation() {
        Activation::Identity => (m.to_vec(), v.to_vec()),
        Activation::Relu => m
            .iter()
            .zip(v)
            .map(|(&mi, &vi)| {
                let r = relu_moments(mi, vi);
                (r.mean, r.var)
            })
            .unzip(),
    }
}

/// Pulls output adjoints `(d/d mean, d/d var)` back to the network input.
pub(crate) fn backpropagate(
    net: &FeedforwardNetwork,
    tape: &AdfTape,
    mut g_mean: Vec<f64>,
    mut g_var: Vec<f64>,
) -> (Vec<f64>, Vec<f64>) {
    for (layer, (pm, pv)) in net.layers().iter().zip(&tape.pre).rev() {
        if layer.activation() == Activation::Relu {
            for i in 0..pm.len() {
                let r = relu_moments(pm[i], pv[i]);
                let (gm, gv) = (g_mean[i], g_var[i]);
                g_mean[i] = gm * r.dmean_dmu + gv * r.dvar_dmu;
                g_var[i] = gm * r.dmean_dvar + gv * r.dvar_dvar;
            }
        }
        g_mean = layer.transpose_apply(&g_mean);
        g_var = layer.transpose_apply_squared(&g_var);
    }
    (g_mean, g_var)
}

/// Mean and variance of logit `target` when the input is `N(mean, diag(var))`.
pub fn adf_forward(
    net: &FeedforwardNetwork,
    mean: &[f64],
    var: &[f64],
    target: usize,
) -> Result<(f64, f64)> {
    Error::check_len(net.input_dim(), mean.len())?;
    Error::check_len(net.input_dim(), var.len())?;
    if target >= net.num_classes() {
        return Err(Error::invalid(format!("target {target} out of range")));
    }
    if var.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::invalid("input variances must be non-negative"));
    }
    let tape = propagate(&collapse_affine(net), mean, var);
    Ok((tape.out_mean[target], tape.out_var[target]))
}
