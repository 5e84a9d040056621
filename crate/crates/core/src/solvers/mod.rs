//! Frank-Wolfe variants over any [`FeasibleRegion`].
//!
//! Every solver shares [`SolverConfig`] and produces a [`SolverTrace`] with one
//! record per iteration. Deterministic solvers (`fw`, `afw`, `lcg`, `lafw`) take an
//! [`Objective`]; the stochastic solver takes a [`StochasticObjective`] whose value
//! is an average of `num_terms` summands.

mod active_set;
mod away;
mod lazy;
mod step;
mod stochastic;
mod trace;
mod vanilla;

pub use active_set::ActiveSet;
pub use away::{afw_minimize, lafw_minimize};
pub use lazy::lcg_minimize;
pub use step::{step_basic, step_monotone, MonotoneStep, MAX_HALVINGS};
pub use stochastic::{
    sfw_minimize, BatchSchedule, MomentumSchedule, SfwConfig, SfwPreset,
};
pub use trace::{SolverTrace, Termination, TraceRecord};
pub use vanilla::fw_minimize;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::regions::{FeasibleRegion, MEMBERSHIP_TOL};

/// A differentiable function on flat `f64` points.
pub trait Objective {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
}

impl<O: Objective + ?Sized> Objective for &O {
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (**self).gradient(x)
    }
}

/// Adapts a pair of closures into an [`Objective`].
pub struct FnObjective<F, G> {
    value: F,
    gradient: G,
}

impl<F, G> FnObjective<F, G>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    pub fn new(value: F, gradient: G) -> Self {
        Self { value, gradient }
    }
}

impl<F, G> Objective for FnObjective<F, G>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (self.gradient)(x)
    }
}

/// An objective of the form `(1/m) * sum_i f_i(x)` with per-term gradients.
pub trait StochasticObjective {
    fn num_terms(&self) -> usize;
    fn term_gradient(&self, x: &[f64], term: usize) -> Vec<f64>;
    /// Full objective value, recorded in the trace.
    fn value(&self, x: &[f64]) -> f64;
}

/// `(1/|terms|) * sum_{i in terms} grad f_i(x)`, summed in the given order.
///
/// Both the deterministic full gradient and the stochastic batch estimate go through
/// this function, so a full batch reproduces the deterministic gradient bit for bit.
pub fn average_term_gradients<S: StochasticObjective + ?Sized>(
    objective: &S,
    x: &[f64],
    terms: &[usize],
) -> Vec<f64> {
    let mut acc = vec![0.0; x.len()];
    for &term in terms {
        let g = objective.term_gradient(x, term);
        for (a, gi) in acc.iter_mut().zip(&g) {
            *a += gi;
        }
    }
    let scale = 1.0 / terms.len() as f64;
    acc.iter_mut().for_each(|a| *a *= scale);
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// `1 / sqrt(t + 1)`
    Basic,
    /// `2^{-r_t} / sqrt(t + 1)` with `r_t` raised until the objective decreases.
    Monotone,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iterations: usize,
    pub gap_tolerance: f64,
    pub step_rule: StepRule,
    /// Lazification accuracy `K`: a cached vertex is accepted when its linear
    /// decrease is at least `phi / K`. Defaults to 1.
    pub lazy_accuracy: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            gap_tolerance: 1e-7,
            step_rule: StepRule::Monotone,
            lazy_accuracy: 1.0,
        }
    }
}

impl SolverConfig {
    pub fn with_step_rule(mut self, rule: StepRule) -> Self {
        self.step_rule = rule;
        self
    }

    pub fn with_max_iterations(mut self, t: usize) -> Self {
        self.max_iterations = t;
        self
    }

    pub fn with_gap_tolerance(mut self, eps: f64) -> Self {
        self.gap_tolerance = eps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations must be at least 1"));
        }
        if !(self.gap_tolerance > 0.0) {
            return Err(Error::invalid("gap_tolerance must be positive"));
        }
        if let StepRule::Fixed(eta) = self.step_rule {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(Error::invalid(format!("fixed step {eta} outside (0, 1]")));
            }
        }
        if !(self.lazy_accuracy >= 1.0) {
            return Err(Error::invalid("lazy_accuracy must be >= 1"));
        }
        Ok(())
    }
}

/// The four deterministic variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Fw,
    Afw,
    Lcg,
    Lafw,
}

impl SolverKind {
    pub const ALL: [SolverKind; 4] = [SolverKind::Fw, SolverKind::Afw, SolverKind::Lcg, SolverKind::Lafw];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Fw => "fw",
            SolverKind::Afw => "afw",
            SolverKind::Lcg => "lcg",
            SolverKind::Lafw => "lafw",
        }
    }

    pub fn minimize<O, R>(
        self,
        objective: &O,
        region: &R,
        config: &SolverConfig,
        initial: &[f64],
    ) -> Result<Solution>
    where
        O: Objective + ?Sized,
        R: FeasibleRegion + ?Sized,
    {
        match self {
            SolverKind::Fw => fw_minimize(objective, region, config, initial),
            SolverKind::Afw => afw_minimize(objective, region, config, initial),
            SolverKind::Lcg => lcg_minimize(objective, region, config, initial),
            SolverKind::Lafw => lafw_minimize(objective, region, config, initial),
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fw" => Ok(SolverKind::Fw),
            "afw" => Ok(SolverKind::Afw),
            "lcg" => Ok(SolverKind::Lcg),
            "lafw" => Ok(SolverKind::Lafw),
            other => Err(Error::invalid(format!("unknown solver '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub point: Vec<f64>,
    pub objective: f64,
    pub trace: SolverTrace,
    /// Final convex decomposition, for the away-step variants.
    pub active_set: Option<ActiveSet>,
}

/// Frank-Wolfe dual gap `<iterate - vertex, grad>`.
pub fn dual_gap(grad: &[f64], iterate: &[f64], vertex: &[f64]) -> f64 {
    grad.iter()
        .zip(iterate.iter().zip(vertex))
        .map(|(g, (x, v))| (x - v) * g)
        .sum()
}

/// Checks shared by every solver entry point.
pub(crate) fn check_start<R: FeasibleRegion + ?Sized>(
    region: &R,
    config: &SolverConfig,
    initial: &[f64],
) -> Result<()> {
    config.validate()?;
    Error::check_len(region.dim(), initial.len())?;
    if !region.contains(initial, MEMBERSHIP_TOL) {
        return Err(Error::invalid("initial point is not feasible"));
    }
    Ok(())
}

pub(crate) fn non_finite(iteration: usize, trace: &SolverTrace) -> Error {
    Error::NonFinite {
        iteration,
        trace: Box::new(trace.clone()),
    }
}

/// Picks the step for direction `d` under `config.step_rule`, truncated to
/// `max_step`. Returns `None` when the monotone search stalls.
pub(crate) fn choose_step<O: Objective + ?Sized>(
    config: &SolverConfig,
    objective: &O,
    t: usize,
    r: &mut u32,
    x: &[f64],
    fx: f64,
    d: &[f64],
    max_step: f64,
) -> Option<f64> {
    match config.step_rule {
        StepRule::Basic => Some(step_basic(t).min(max_step)),
        StepRule::Fixed(eta) => Some(eta.min(max_step)),
        StepRule::Monotone => {
            let step = step_monotone(t, *r, |y| objective.value(y), fx, x, d, max_step);
            if step.stalled {
                None
            } else {
                *r = step.exponent;
                Some(step.eta)
            }
        }
    }
}

/// Index of the entry of `candidates` with the smallest `<grad, c>` (first on ties)
/// together with that inner product.
pub(crate) fn best_by_dot(grad: &[f64], candidates: &[Vec<f64>], maximize: bool) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in candidates.iter().enumerate() {
        let val = dot(grad, c);
        let improves = match best {
            None => true,
            Some((_, b)) => {
                if maximize {
                    val > b
                } else {
                    val < b
                }
            }
        };
        if improves {
            best = Some((i, val));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dual_gap_examples() {
        use crate::regions::NonNegKSparsePolytope;
        let region = NonNegKSparsePolytope::new(2, 1, 1.0).unwrap();
        let g = [1.0, -1.0];
        let v = region.lmo(&g).unwrap();
        assert_eq!(v, vec![0.0, 1.0]);
        assert_eq!(dual_gap(&g, &[0.5, 0.5], &v), 1.0);
        assert_eq!(dual_gap(&g, &v, &v), 0.0);
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        assert!(SolverConfig::default().with_max_iterations(0).validate().is_err());
        assert!(SolverConfig::default().with_gap_tolerance(0.0).validate().is_err());
        assert!(SolverConfig::default()
            .with_step_rule(StepRule::Fixed(1.5))
            .validate()
            .is_err());
    }

    #[test]
    fn solver_kind_parses() {
        for kind in SolverKind::ALL {
            assert_eq!(kind.name().parse::<SolverKind>().unwrap(), kind);
        }
        assert!("sfw".parse::<SolverKind>().is_err());
    }
}
