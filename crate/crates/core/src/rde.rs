//! Relevance attribution pipelines.
//!
//! - [`rc_rde`]: minimize the distortion over `{ s in [0,1]^n : ||s||_1 <= k }`.
//! - [`mr_rde`]: average of independent single-rate solutions over a set of rates.
//! - [`ord_rde`]: minimize the average distortion `(1/(n-1)) Σ_k D(Π p_k)` over the
//!   Birkhoff polytope, where `p_k` has ones in its first `k` entries.
//! - [`sensitivity_map`]: the gradient-magnitude baseline.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{DistortionObjective, FeedforwardNetwork, BOX_TOL};
use crate::error::{Error, Result};
use crate::linalg::argmax;
use crate::regions::{BirkhoffPolytope, FeasibleRegion, NonNegKSparsePolytope};
use crate::solvers::{
    average_term_gradients, sfw_minimize, Objective, SfwConfig, SolverConfig, SolverKind, SolverTrace,
    StochasticObjective,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rc,
    Mr,
    Ord,
    Sensitivity,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Rc => "rc",
            Method::Mr => "mr",
            Method::Ord => "ord",
            Method::Sensitivity => "sensitivity",
        })
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rc" => Ok(Method::Rc),
            "mr" => Ok(Method::Mr),
            "ord" => Ok(Method::Ord),
            "sensitivity" => Ok(Method::Sensitivity),
            other => Err(Error::invalid(format!("unknown method '{other}'"))),
        }
    }
}

/// Per-feature relevance scores in `[0, 1]` with provenance metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMap", into = "RawMap")]
pub struct RelevanceMap {
    scores: Vec<f64>,
    pub method: Method,
    pub rates: Vec<usize>,
    pub solver: Option<String>,
    pub seed: Option<u64>,
}

#[derive(Serialize, Deserialize)]
struct RawMap {
    n: usize,
    scores: Vec<f64>,
    method: Method,
    #[serde(default)]
    rates: Vec<usize>,
    #[serde(default)]
    solver: Option<String>,
    #[serde(default)]
    seed: Option<u64>,
}

impl TryFrom<RawMap> for RelevanceMap {
    type Error = Error;
    fn try_from(raw: RawMap) -> Result<Self> {
        Error::check_len(raw.n, raw.scores.len())?;
        let mut map = RelevanceMap::new(raw.scores, raw.method)?;
        map.rates = raw.rates;
        map.solver = raw.solver;
        map.seed = raw.seed;
        Ok(map)
    }
}

impl From<RelevanceMap> for RawMap {
    fn from(m: RelevanceMap) -> Self {
        RawMap {
            n: m.scores.len(),
            scores: m.scores,
            method: m.method,
            rates: m.rates,
            solver: m.solver,
            seed: m.seed,
        }
    }
}

impl RelevanceMap {
    pub fn new(scores: Vec<f64>, method: Method) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::invalid("relevance map is empty"));
        }
        if scores.iter().any(|&s| !(-BOX_TOL..=1.0 + BOX_TOL).contains(&s)) {
            return Err(Error::invalid("relevance scores must lie in [0, 1]"));
        }
        Ok(Self {
            scores,
            method,
            rates: Vec::new(),
            solver: None,
            seed: None,
        })
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// `||s||_1`
    pub fn rate(&self) -> f64 {
        self.scores.iter().sum()
    }

    pub fn ordering(&self) -> Vec<usize> {
        induced_ordering(&self.scores)
    }
}

/// Feature indices by decreasing score; ties by increasing index.
pub fn induced_ordering(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx
}

/// A single-rate solve.
#[derive(Debug, Clone)]
pub struct Attribution {
    pub map: RelevanceMap,
    pub distortion: f64,
    pub trace: SolverTrace,
}

/// Single-rate attribution over `NonNegKSparsePolytope(n, k, 1)`, started from zero.
pub fn rc_rde(
    objective: &DistortionObjective,
    k: usize,
    solver: SolverKind,
    config: &SolverConfig,
) -> Result<Attribution> {
    let n = objective.dim();
    if k == 0 || k >= n {
        return Err(Error::invalid(format!("rate k={k} must lie in [1, {}]", n.saturating_sub(1))));
    }
    let region = NonNegKSparsePolytope::rate_constrained(n, k)?;
    let start = region.default_start();
    let sol = solver.minimize(objective, &region, config, &start)?;
    let mut map = RelevanceMap::new(sol.point, Method::Rc)?;
    map.rates = vec![k];
    map.solver = Some(solver.name().to_string());
    Ok(Attribution {
        map,
        distortion: sol.objective,
        trace: sol.trace,
    })
}

#[derive(Debug, Clone)]
pub struct MultiRateAttribution {
    pub map: RelevanceMap,
    /// One independent solve per rate, in increasing rate order.
    pub parts: Vec<Attribution>,
}

/// Average of independent [`rc_rde`] solutions over the (deduplicated) rates.
/// Sub-solves run in parallel; the average is summed in increasing rate order.
pub fn mr_rde(
    objective: &DistortionObjective,
    rates: &[usize],
    solver: SolverKind,
    config: &SolverConfig,
) -> Result<MultiRateAttribution> {
    let rates: Vec<usize> = rates.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    if rates.is_empty() {
        return Err(Error::invalid("multi-rate attribution needs at least one rate"));
    }
    let parts = rates
        .par_iter()
        .map(|&k| rc_rde(objective, k, solver, config))
        .collect::<Result<Vec<_>>>()?;
    let scores = average_maps(parts.iter().map(|p| p.map.scores()), objective.dim());
    let mut map = RelevanceMap::new(scores, Method::Mr)?;
    map.rates = rates;
    map.solver = Some(solver.name().to_string());
    Ok(MultiRateAttribution { map, parts })
}

/// Arithmetic mean, accumulated in iteration order.
pub fn average_maps<'a>(maps: impl ExactSizeIterator<Item = &'a [f64]>, n: usize) -> Vec<f64> {
    let count = maps.len() as f64;
    let mut acc = vec![0.0; n];
    for m in maps {
        for (a, v) in acc.iter_mut().zip(m) {
            *a += v;
        }
    }
    acc.iter_mut().for_each(|a| *a /= count);
    acc
}

/// `Π p_k` for row-major `pi`: row-wise sum of the first `k` columns.
pub fn single_rate_map(pi: &[f64], n: usize, k: usize) -> Vec<f64> {
    pi.chunks_exact(n).map(|row| row[..k].iter().sum()).collect()
}

/// All single-rate maps `Π p_1, ..., Π p_{n-1}`.
pub fn single_rate_maps(pi: &[f64], n: usize) -> Vec<Vec<f64>> {
    let mut maps = vec![vec![0.0; n]; n.saturating_sub(1)];
    for (i, row) in pi.chunks_exact(n).enumerate() {
        let mut acc = 0.0;
        for k in 1..n {
            acc += row[k - 1];
            maps[k - 1][i] = acc;
        }
    }
    maps
}

/// `(1/(n-1)) Σ_k Π p_k`
pub fn multirate_map(pi: &[f64], n: usize) -> Vec<f64> {
    let maps = single_rate_maps(pi, n);
    average_maps(maps.iter().map(Vec::as_slice), n)
}

/// The ordering objective `F(Π) = (1/(n-1)) Σ_{k=1}^{n-1} D(Π p_k)`.
///
/// Term `j` (0-based) is `D(Π p_{j+1})`; its gradient with respect to `Π` is
/// `∇D(Π p_k) p_kᵀ`, which fills the first `k` columns with `∇D(Π p_k)`.
#[derive(Debug, Clone, Copy)]
pub struct OrderingObjective<'a> {
    inner: &'a DistortionObjective,
}

impl<'a> OrderingObjective<'a> {
    pub fn new(inner: &'a DistortionObjective) -> Result<Self> {
        if inner.dim() < 2 {
            return Err(Error::invalid("ordering objective needs n >= 2"));
        }
        Ok(Self { inner })
    }

    pub fn n(&self) -> usize {
        self.inner.dim()
    }

    /// Average distortion of the hard ordering given by a permutation
    /// (`ordering[r]` is the feature fixed at position `r`).
    pub fn ordering_value(&self, ordering: &[usize]) -> f64 {
        let n = self.n();
        let mut s = vec![0.0; n];
        let mut total = 0.0;
        for &feature in &ordering[..n - 1] {
            s[feature] = 1.0;
            total += self.inner.value(&s);
        }
        total / (n - 1) as f64
    }
}

impl StochasticObjective for OrderingObjective<'_> {
    fn num_terms(&self) -> usize {
        self.n() - 1
    }

    fn term_gradient(&self, pi: &[f64], term: usize) -> Vec<f64> {
        let n = self.n();
        let k = term + 1;
        let g = self.inner.gradient(&single_rate_map(pi, n, k));
        let mut out = vec![0.0; n * n];
        for (row, gi) in out.chunks_exact_mut(n).zip(&g) {
            row[..k].iter_mut().for_each(|v| *v = *gi);
        }
        out
    }

    fn value(&self, pi: &[f64]) -> f64 {
        let n = self.n();
        let total: f64 = single_rate_maps(pi, n).iter().map(|s| self.inner.value(s)).sum();
        total / (n - 1) as f64
    }
}

impl Objective for OrderingObjective<'_> {
    fn value(&self, pi: &[f64]) -> f64 {
        StochasticObjective::value(self, pi)
    }

    fn gradient(&self, pi: &[f64]) -> Vec<f64> {
        let terms: Vec<usize> = (0..self.num_terms()).collect();
        average_term_gradients(self, pi, &terms)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OrderingSolver {
    Deterministic(SolverKind),
    Stochastic(SfwConfig),
}

impl OrderingSolver {
    pub fn name(&self) -> &'static str {
        match self {
            OrderingSolver::Deterministic(k) => k.name(),
            OrderingSolver::Stochastic(_) => "sfw",
        }
    }
}

#[derive(Debug, Clone)]
pub struct OrderingResult {
    /// Row-major doubly stochastic matrix.
    pub pi: Vec<f64>,
    pub n: usize,
    /// The derived multi-rate map `(1/(n-1)) Σ_k Π p_k`.
    pub map: RelevanceMap,
    pub objective: f64,
    pub trace: SolverTrace,
}

impl OrderingResult {
    pub fn single_rate_map(&self, k: usize) -> Vec<f64> {
        single_rate_map(&self.pi, self.n, k)
    }

    pub fn multirate_scores(&self) -> &[f64] {
        self.map.scores()
    }
}

/// Ordering attribution over the Birkhoff polytope, started from the uniform
/// doubly stochastic matrix.
pub fn ord_rde(
    objective: &DistortionObjective,
    solver: OrderingSolver,
    config: &SolverConfig,
) -> Result<OrderingResult> {
    let n = objective.dim();
    let ord = OrderingObjective::new(objective)?;
    let region = BirkhoffPolytope::new(n)?;
    let start = region.default_start();
    let sol = match solver {
        OrderingSolver::Deterministic(kind) => kind.minimize(&ord, &region, config, &start)?,
        OrderingSolver::Stochastic(sfw) => sfw_minimize(&ord, &region, config, &sfw, &start)?,
    };
    let mut map = RelevanceMap::new(multirate_map(&sol.point, n), Method::Ord)?;
    map.rates = (1..n).collect();
    map.solver = Some(solver.name().to_string());
    if let OrderingSolver::Stochastic(sfw) = solver {
        map.seed = Some(sfw.seed);
    }
    Ok(OrderingResult {
        pi: sol.point,
        n,
        map,
        objective: sol.objective,
        trace: sol.trace,
    })
}

/// `|∇Φ(x)_target|` divided by its maximum (all zeros if the gradient vanishes).
pub fn sensitivity_map(network: &FeedforwardNetwork, x: &[f64]) -> Result<RelevanceMap> {
    let target = argmax(&network.forward(x)?);
    let grad = network.input_gradient(x, target)?;
    let max = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let scores = if max > 0.0 {
        grad.iter().map(|g| g.abs() / max).collect()
    } else {
        vec![0.0; grad.len()]
    };
    RelevanceMap::new(scores, Method::Sensitivity)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{Activation, GaussianInputModel, Layer};

    fn linear(w: Vec<f64>) -> FeedforwardNetwork {
        let n = w.len();
        FeedforwardNetwork::new(n, vec![Layer::new(vec![w], vec![0.0], Activation::Identity).unwrap()]).unwrap()
    }

    #[test]
    fn sensitivity_examples() {
        let m = sensitivity_map(&linear(vec![3.0, 1.0, 2.0]), &[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(m.scores(), &[1.0, 1.0 / 3.0, 2.0 / 3.0]);
        assert_eq!(m.ordering(), vec![0, 2, 1]);
        let zero = sensitivity_map(&linear(vec![0.0, 0.0]), &[1.0, 1.0]).unwrap();
        assert_eq!(zero.scores(), &[0.0, 0.0]);
    }

    #[test]
    fn ordering_examples() {
        assert_eq!(induced_ordering(&[1.0, 1.0 / 3.0, 2.0 / 3.0]), vec![0, 2, 1]);
        assert_eq!(induced_ordering(&[0.5; 4]), vec![0, 1, 2, 3]);
        let s = [0.2, 0.9, 0.1, 0.9];
        let t: Vec<f64> = s.iter().map(|v: &f64| v.powi(3) + 2.0).collect();
        assert_eq!(induced_ordering(&s), induced_ordering(&t));
        assert_eq!(induced_ordering(&s), vec![1, 3, 0, 2]);
    }

    #[test]
    fn map_validation_and_json() {
        assert!(RelevanceMap::new(vec![1.2], Method::Rc).is_err());
        assert!(RelevanceMap::new(vec![], Method::Rc).is_err());
        let mut m = RelevanceMap::new(vec![0.25, 1.0, 0.0], Method::Mr).unwrap();
        m.rates = vec![1, 2];
        m.solver = Some("fw".into());
        m.seed = Some(4);
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(
            json,
            r#"{"n":3,"scores":[0.25,1.0,0.0],"method":"mr","rates":[1,2],"solver":"fw","seed":4}"#
        );
        assert_eq!(serde_json::from_str::<RelevanceMap>(&json).unwrap(), m);
        let bad = r#"{"n":2,"scores":[0.25,1.0,0.0],"method":"mr"}"#;
        assert!(serde_json::from_str::<RelevanceMap>(bad).is_err());
    }

    #[test]
    fn prefix_maps() {
        // rows: [0.5 0.5 0], [0.5 0 0.5], [0 0.5 0.5]
        let pi = [0.5, 0.5, 0.0, 0.5, 0.0, 0.5, 0.0, 0.5, 0.5];
        assert_eq!(single_rate_map(&pi, 3, 1), vec![0.5, 0.5, 0.0]);
        assert_eq!(single_rate_map(&pi, 3, 2), vec![1.0, 0.5, 0.5]);
        assert_eq!(single_rate_maps(&pi, 3), vec![vec![0.5, 0.5, 0.0], vec![1.0, 0.5, 0.5]]);
        assert_eq!(multirate_map(&pi, 3), vec![0.75, 0.5, 0.25]);
    }

    fn small_objective() -> DistortionObjective {
        let net = linear(vec![1.0, 2.0, -0.5]);
        let noise = GaussianInputModel::new(vec![0.0; 3], vec![1.0; 3]).unwrap();
        DistortionObjective::new(net, vec![1.0, 1.0, 1.0], noise).unwrap()
    }

    #[test]
    fn term_gradient_structure() {
        let obj = small_objective();
        let ord = OrderingObjective::new(&obj).unwrap();
        let pi = BirkhoffPolytope::new(3).unwrap().uniform();
        let g = ord.term_gradient(&pi, 0);
        for row in g.chunks_exact(3) {
            assert_ne!(row[0], 0.0);
            assert_eq!(&row[1..], &[0.0, 0.0]);
        }
        let g2 = ord.term_gradient(&pi, 1);
        for row in g2.chunks_exact(3) {
            assert_eq!(row[0], row[1]);
            assert_eq!(row[2], 0.0);
        }
    }

    #[test]
    fn rate_bounds() {
        let obj = small_objective();
        let cfg = SolverConfig::default();
        assert!(rc_rde(&obj, 0, SolverKind::Fw, &cfg).is_err());
        assert!(rc_rde(&obj, 3, SolverKind::Fw, &cfg).is_err());
        assert!(mr_rde(&obj, &[], SolverKind::Fw, &cfg).is_err());
        assert!(mr_rde(&obj, &[1, 3], SolverKind::Fw, &cfg).is_err());
    }

    #[test]
    fn singleton_multirate_equals_single_rate() {
        let obj = small_objective();
        let cfg = SolverConfig::default();
        let rc = rc_rde(&obj, 1, SolverKind::Afw, &cfg).unwrap();
        let mr = mr_rde(&obj, &[1], SolverKind::Afw, &cfg).unwrap();
        assert_eq!(rc.map.scores(), mr.map.scores());
        assert_eq!(mr.map.rates, vec![1]);
    }

    #[test]
    fn method_parsing() {
        for m in [Method::Rc, Method::Mr, Method::Ord, Method::Sensitivity] {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        }
        assert!("lrde".parse::<Method>().is_err());
    }
}
