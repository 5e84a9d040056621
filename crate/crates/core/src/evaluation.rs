//! Relevance-ordering test: fix increasingly many features in relevance order,
//! randomize the rest from the noise model, and record how much the target logit
//! moves and how often the prediction survives.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::classifier::{FeedforwardNetwork, GaussianInputModel};
use crate::error::{Error, Result};
use crate::linalg::argmax;
use crate::rde::{induced_ordering, RelevanceMap};

pub const DEFAULT_GRID_POINTS: usize = 64;
pub const DEFAULT_NUM_SAMPLES: usize = 512;

/// `points` evenly spaced fractions of `[0, 1]`, endpoints included.
pub fn rate_grid(points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::invalid("rate grid needs at least two points"));
    }
    let last = (points - 1) as f64;
    Ok((0..points).map(|i| i as f64 / last).collect())
}

pub fn default_rate_grid() -> Vec<f64> {
    rate_grid(DEFAULT_GRID_POINTS).expect("default grid is valid")
}

/// Number of features fixed at rate `r`: `⌊r n⌋`, with a small guard so that
/// fractions like `i / (m - 1)` that should land on an integer do.
pub fn fixed_count(rate: f64, n: usize) -> usize {
    ((rate * n as f64 + 1e-9).floor() as usize).min(n)
}

/// One row per rate. For a single test the standard deviations are over noise
/// samples; for an aggregate they are over the aggregated curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingTestCurve {
    pub rates: Vec<f64>,
    pub mean_distortion: Vec<f64>,
    pub std_distortion: Vec<f64>,
    pub mean_accuracy: Vec<f64>,
    pub std_accuracy: Vec<f64>,
    pub num_samples: usize,
    pub seed: Option<u64>,
}

impl OrderingTestCurve {
    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    /// Trapezoidal area under the mean distortion curve.
    pub fn distortion_area(&self) -> f64 {
        trapezoid(&self.rates, &self.mean_distortion)
    }

    /// Mean distortion averaged over the grid points.
    pub fn average_distortion(&self) -> f64 {
        self.mean_distortion.iter().sum::<f64>() / self.len() as f64
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.rates.len();
        if m == 0 {
            return Err(Error::invalid("curve has no rates"));
        }
        for col in [
            &self.mean_distortion,
            &self.std_distortion,
            &self.mean_accuracy,
            &self.std_accuracy,
        ] {
            Error::check_len(m, col.len())?;
        }
        validate_grid(&self.rates)
    }
}

fn validate_grid(rates: &[f64]) -> Result<()> {
    if rates.is_empty() {
        return Err(Error::invalid("rate grid is empty"));
    }
    if rates.iter().any(|r| !(0.0..=1.0).contains(r)) || rates.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("rates must be strictly increasing in [0, 1]"));
    }
    Ok(())
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

fn check_permutation(ordering: &[usize], n: usize) -> Result<()> {
    Error::check_len(n, ordering.len())?;
    let mut seen = vec![false; n];
    for &i in ordering {
        if i >= n || std::mem::replace(&mut seen[i], true) {
            return Err(Error::invalid("ordering is not a permutation"));
        }
    }
    Ok(())
}

/// Mean and sample standard deviation (denominator `m - 1`, zero for `m = 1`).
fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let m = values.clone().count();
    let mean = values.clone().sum::<f64>() / m as f64;
    if m < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (m - 1) as f64).sqrt())
}

/// Runs the ordering test. The same `num_samples` standard normal draws are reused
/// at every rate; feature `i`, when randomized, is `mu_i + sigma_i z_i`.
pub fn ordering_test(
    network: &FeedforwardNetwork,
    x: &[f64],
    ordering: &[usize],
    rates: &[f64],
    noise: &GaussianInputModel,
    num_samples: usize,
    seed: u64,
) -> Result<OrderingTestCurve> {
    let n = network.input_dim();
    Error::check_len(n, x.len())?;
    Error::check_len(n, noise.dim())?;
    check_permutation(ordering, n)?;
    validate_grid(rates)?;
    if num_samples == 0 {
        return Err(Error::invalid("ordering test needs at least one sample"));
    }

    let logits = network.forward(x)?;
    let target = argmax(&logits);
    let reference = logits[target];

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<Vec<f64>> = (0..num_samples)
        .map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();

    let mut curve = OrderingTestCurve {
        rates: rates.to_vec(),
        mean_distortion: Vec::with_capacity(rates.len()),
        std_distortion: Vec::with_capacity(rates.len()),
        mean_accuracy: Vec::with_capacity(rates.len()),
        std_accuracy: Vec::with_capacity(rates.len()),
        num_samples,
        seed: Some(seed),
    };
    let mut fixed = vec![false; n];
    let mut y = vec![0.0; n];
    let mut sq = vec![0.0; num_samples];
    let mut hit = vec![0.0; num_samples];
    for &r in rates {
        fixed.iter_mut().for_each(|f| *f = false);
        for &i in &ordering[..fixed_count(r, n)] {
            fixed[i] = true;
        }
        for (j, z) in draws.iter().enumerate() {
            for i in 0..n {
                y[i] = if fixed[i] {
                    x[i]
                } else {
                    noise.mean()[i] + noise.std()[i] * z[i]
                };
            }
            let out = network.forward_unchecked(&y);
            let diff = reference - out[target];
            sq[j] = diff * diff;
            hit[j] = if argmax(&out) == target { 1.0 } else { 0.0 };
        }
        let (md, sd) = mean_std(sq.iter().copied());
        let (ma, sa) = mean_std(hit.iter().copied());
        curve.mean_distortion.push(md);
        curve.std_distortion.push(sd);
        curve.mean_accuracy.push(ma);
        curve.std_accuracy.push(sa);
    }
    Ok(curve)
}

/// [`ordering_test`] on the ordering induced by `map`.
pub fn map_to_curve(
    network: &FeedforwardNetwork,
    x: &[f64],
    map: &RelevanceMap,
    rates: &[f64],
    noise: &GaussianInputModel,
    num_samples: usize,
    seed: u64,
) -> Result<OrderingTestCurve> {
    Error::check_len(network.input_dim(), map.len())?;
    ordering_test(network, x, &induced_ordering(map.scores()), rates, noise, num_samples, seed)
}

/// Pointwise mean and sample standard deviation of the per-curve means. The
/// result's `num_samples` is the number of curves.
pub fn aggregate(curves: &[OrderingTestCurve]) -> Result<OrderingTestCurve> {
    let first = curves.first().ok_or_else(|| Error::invalid("nothing to aggregate"))?;
    if curves.iter().any(|c| c.rates != first.rates) {
        return Err(Error::invalid("curves do not share a rate grid"));
    }
    let m = first.len();
    let mut out = OrderingTestCurve {
        rates: first.rates.clone(),
        mean_distortion: Vec::with_capacity(m),
        std_distortion: Vec::with_capacity(m),
        mean_accuracy: Vec::with_capacity(m),
        std_accuracy: Vec::with_capacity(m),
        num_samples: curves.len(),
        seed: None,
    };
    for i in 0..m {
        let (md, sd) = mean_std(curves.iter().map(|c| c.mean_distortion[i]));
        let (ma, sa) = mean_std(curves.iter().map(|c| c.mean_accuracy[i]));
        out.mean_distortion.push(md);
        out.std_distortion.push(sd);
        out.mean_accuracy.push(ma);
        out.std_accuracy.push(sa);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{Activation, Layer};

    fn linear(w: Vec<f64>) -> FeedforwardNetwork {
        let n = w.len();
        FeedforwardNetwork::new(n, vec![Layer::new(vec![w], vec![0.0], Activation::Identity).unwrap()]).unwrap()
    }

    fn curve(d: Vec<f64>) -> OrderingTestCurve {
        let m = d.len();
        OrderingTestCurve {
            rates: rate_grid(m).unwrap(),
            mean_distortion: d,
            std_distortion: vec![0.0; m],
            mean_accuracy: vec![1.0; m],
            std_accuracy: vec![0.0; m],
            num_samples: 1,
            seed: None,
        }
    }

    #[test]
    fn grid_and_fixing_rule() {
        let g = default_rate_grid();
        assert_eq!(g.len(), 64);
        assert_eq!((g[0], g[63]), (0.0, 1.0));
        assert_eq!(fixed_count(1.0, 7), 7);
        assert_eq!(fixed_count(0.0, 7), 0);
        assert_eq!(fixed_count(0.5, 7), 3);
        // 21/63 * 9 = 3 exactly in real arithmetic
        assert_eq!(fixed_count(g[21], 9), 3);
        assert!(rate_grid(1).is_err());
    }

    #[test]
    fn endpoints() {
        let net = linear(vec![1.0, -2.0, 0.5]);
        let noise = GaussianInputModel::new(vec![0.0; 3], vec![1.0; 3]).unwrap();
        let c = ordering_test(&net, &[1.0, 1.0, 1.0], &[0, 1, 2], &rate_grid(5).unwrap(), &noise, 50, 1).unwrap();
        assert_eq!(*c.mean_distortion.last().unwrap(), 0.0);
        assert_eq!(*c.mean_accuracy.last().unwrap(), 1.0);
        assert!(c.mean_distortion[0] > 0.0);
    }

    #[test]
    fn invalid_inputs() {
        let net = linear(vec![1.0, 2.0]);
        let noise = GaussianInputModel::new(vec![0.0; 2], vec![1.0; 2]).unwrap();
        let grid = rate_grid(3).unwrap();
        assert!(ordering_test(&net, &[0.0, 0.0], &[0, 0], &grid, &noise, 5, 0).is_err());
        assert!(ordering_test(&net, &[0.0, 0.0], &[0, 2], &grid, &noise, 5, 0).is_err());
        assert!(ordering_test(&net, &[0.0, 0.0], &[0], &grid, &noise, 5, 0).is_err());
        assert!(ordering_test(&net, &[0.0, 0.0], &[1, 0], &grid, &noise, 0, 0).is_err());
        assert!(ordering_test(&net, &[0.0, 0.0], &[1, 0], &[0.5, 0.2], &noise, 5, 0).is_err());
    }

    #[test]
    fn aggregate_examples() {
        let one = curve(vec![3.0, 1.0, 0.0]);
        let agg = aggregate(std::slice::from_ref(&one)).unwrap();
        assert_eq!(agg.mean_distortion, one.mean_distortion);
        assert_eq!(agg.std_distortion, vec![0.0; 3]);

        let agg = aggregate(&[one.clone(), one.clone()]).unwrap();
        assert_eq!(agg.std_distortion, vec![0.0; 3]);

        let agg = aggregate(&[curve(vec![0.0, 2.0]), curve(vec![2.0, 0.0])]).unwrap();
        assert_eq!(agg.mean_distortion, vec![1.0, 1.0]);
        assert_eq!(agg.std_distortion, vec![2f64.sqrt(), 2f64.sqrt()]);
        assert_eq!(agg.num_samples, 2);

        assert!(aggregate(&[curve(vec![0.0, 1.0]), curve(vec![0.0, 1.0, 2.0])]).is_err());
        assert!(aggregate(&[]).is_err());
    }

    #[test]
    fn area() {
        let c = curve(vec![2.0, 1.0, 0.0]);
        assert_eq!(c.distortion_area(), 1.0);
        assert_eq!(c.average_distortion(), 1.0);
    }
}
