use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower bound applied to fitted standard deviations.
pub const STD_FLOOR: f64 = 1e-3;

/// Diagonal Gaussian replacement distribution for randomized features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNoise", into = "RawNoise")]
pub struct GaussianInputModel {
    mean: Vec<f64>,
    std: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawNoise {
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl TryFrom<RawNoise> for GaussianInputModel {
    type Error = Error;
    fn try_from(raw: RawNoise) -> Result<Self> {
        GaussianInputModel::new(raw.mean, raw.std)
    }
}

impl From<GaussianInputModel> for RawNoise {
    fn from(m: GaussianInputModel) -> Self {
        RawNoise {
            mean: m.mean,
            std: m.std,
        }
    }
}

impl GaussianInputModel {
    /// Explicit model. Standard deviations must be finite and non-negative; the
    /// floor is only applied by [`fit_gaussian`].
    pub fn new(mean: Vec<f64>, std: Vec<f64>) -> Result<Self> {
        Error::check_len(mean.len(), std.len())?;
        if mean.is_empty() {
            return Err(Error::invalid("noise model has no components"));
        }
        if !mean.iter().all(|m| m.is_finite()) || !std.iter().all(|s| s.is_finite() && *s >= 0.0) {
            return Err(Error::invalid("noise model needs finite mean and non-negative std"));
        }
        Ok(Self { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn std(&self) -> &[f64] {
        &self.std
    }

    pub fn variance(&self) -> Vec<f64> {
        self.std.iter().map(|s| s * s).collect()
    }
}

/// Per-column sample mean and standard deviation (denominator `m - 1`), with the
/// standard deviation floored at [`STD_FLOOR`].
pub fn fit_gaussian(data: &[Vec<f64>]) -> Result<GaussianInputModel> {
    let m = data.len();
    if m < 2 {
        return Err(Error::invalid(format!("need at least 2 samples, got {m}")));
    }
    let n = data[0].len();
    if n == 0 {
        return Err(Error::invalid("samples have no features"));
    }
    for row in data {
        Error::check_len(n, row.len())?;
        if !row.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("samples must be finite"));
        }
    }
    let mut mean = vec![0.0; n];
    for row in data {
        for (mu, v) in mean.iter_mut().zip(row) {
            *mu += v;
        }
    }
    mean.iter_mut().for_each(|mu| *mu /= m as f64);

    let mut var = vec![0.0; n];
    for row in data {
        for ((s, v), mu) in var.iter_mut().zip(row).zip(&mean) {
            *s += (v - mu) * (v - mu);
        }
    }
    let std = var
        .into_iter()
        .map(|s| (s / (m - 1) as f64).sqrt().max(STD_FLOOR))
        .collect();
    GaussianInputModel::new(mean, std)
}
