use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{average_term_gradients, check_start, dual_gap, non_finite, step_basic};
use super::{Solution, SolverConfig, SolverTrace, StochasticObjective, Termination};
use crate::error::{Error, Result};
use crate::linalg::{axpy, is_finite, sub};
use crate::regions::FeasibleRegion;

/// Number of terms drawn per iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchSchedule {
    /// `b_t = b`, terms drawn i.i.d. uniformly.
    Constant(usize),
    /// `b_t = min(start + t, max)`, terms drawn i.i.d. uniformly.
    Growing { start: usize, max: usize },
    /// Every term exactly once, in order: the exact full gradient.
    Full,
}

impl BatchSchedule {
    pub fn size(&self, t: usize, num_terms: usize) -> usize {
        match *self {
            BatchSchedule::Constant(b) => b,
            BatchSchedule::Growing { start, max } => (start + t).min(max),
            BatchSchedule::Full => num_terms,
        }
    }
}

/// Momentum factor `rho_t` in `M_t = rho_t M_{t-1} + (1 - rho_t) G_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentumSchedule {
    Constant(f64),
    /// `rho_t = 1 - 4 / (8 + t)^{2/3}`, increasing towards one.
    Growing,
}

impl MomentumSchedule {
    pub fn factor(&self, t: usize) -> f64 {
        match *self {
            MomentumSchedule::Constant(rho) => rho,
            MomentumSchedule::Growing => 1.0 - 4.0 / ((8 + t) as f64).powf(2.0 / 3.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SfwConfig {
    pub batch: BatchSchedule,
    pub momentum: MomentumSchedule,
    pub seed: u64,
}

impl SfwConfig {
    pub fn validate(&self) -> Result<()> {
        match self.batch {
            BatchSchedule::Constant(0) => return Err(Error::invalid("batch size must be >= 1")),
            BatchSchedule::Growing { start, max } if max == 0 || start > max => {
                return Err(Error::invalid("growing batch needs 0 < max and start <= max"))
            }
            _ => {}
        }
        if let MomentumSchedule::Constant(rho) = self.momentum {
            if !(0.0..=1.0).contains(&rho) {
                return Err(Error::invalid(format!("momentum {rho} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

impl Default for SfwConfig {
    fn default() -> Self {
        SfwPreset::A.config(0)
    }
}

/// Batch/momentum combinations A-F:
///
/// | preset | momentum                  | batch              |
/// |--------|---------------------------|--------------------|
/// | A      | 0                         | 40                 |
/// | B      | 0                         | min(40 + t, 100)   |
/// | C      | 1/2                       | 40                 |
/// | D      | 1/2                       | min(40 + t, 100)   |
/// | E      | 1 - 4 / (8 + t)^(2/3)     | 40                 |
/// | F      | 1 - 4 / (8 + t)^(2/3)     | min(40 + t, 100)   |
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SfwPreset {
    A,
    B,
    C,
    D,
    E,
    F,
}

impl SfwPreset {
    pub const ALL: [SfwPreset; 6] = [
        SfwPreset::A,
        SfwPreset::B,
        SfwPreset::C,
        SfwPreset::D,
        SfwPreset::E,
        SfwPreset::F,
    ];

    pub fn config(self, seed: u64) -> SfwConfig {
        const CONSTANT: BatchSchedule = BatchSchedule::Constant(40);
        const GROWING: BatchSchedule = BatchSchedule::Growing { start: 40, max: 100 };
        let (momentum, batch) = match self {
            SfwPreset::A => (MomentumSchedule::Constant(0.0), CONSTANT),
            SfwPreset::B => (MomentumSchedule::Constant(0.0), GROWING),
            SfwPreset::C => (MomentumSchedule::Constant(0.5), CONSTANT),
            SfwPreset::D => (MomentumSchedule::Constant(0.5), GROWING),
            SfwPreset::E => (MomentumSchedule::Growing, CONSTANT),
            SfwPreset::F => (MomentumSchedule::Growing, GROWING),
        };
        SfwConfig { batch, momentum, seed }
    }
}

impl fmt::Display for SfwPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for SfwPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(SfwPreset::A),
            "B" => Ok(SfwPreset::B),
            "C" => Ok(SfwPreset::C),
            "D" => Ok(SfwPreset::D),
            "E" => Ok(SfwPreset::E),
            "F" => Ok(SfwPreset::F),
            other => Err(Error::invalid(format!("unknown SFW preset '{other}'"))),
        }
    }
}

/// `rho * m + (1 - rho) * g`, in place.
pub(crate) fn momentum_update(m: &mut [f64], rho: f64, g: &[f64]) {
    for (mi, gi) in m.iter_mut().zip(g) {
        *mi = rho * *mi + (1.0 - rho) * gi;
    }
}

/// Stochastic Frank-Wolfe with momentum.
///
/// Per iteration: draw `b_t` term indices i.i.d. uniformly, average their gradients
/// into `G_t`, update `M_t = rho_t M_{t-1} + (1 - rho_t) G_t` (with `M_0 = 0`), call
/// the LMO on `M_t` and step with `1 / sqrt(t + 1)`. Terminates when
/// `<x - V_t, M_t>` drops below the tolerance. The step rule in `config` is ignored.
pub fn sfw_minimize<S, R>(
    objective: &S,
    region: &R,
    config: &SolverConfig,
    sfw: &SfwConfig,
    initial: &[f64],
) -> Result<Solution>
where
    S: StochasticObjective + ?Sized,
    R: FeasibleRegion + ?Sized,
{
    check_start(region, config, initial)?;
    sfw.validate()?;
    let num_terms = objective.num_terms();
    if num_terms == 0 {
        return Err(Error::invalid("stochastic objective has no terms"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(sfw.seed);
    let mut trace = SolverTrace::default();
    let mut x = initial.to_vec();
    let mut fx = objective.value(&x);
    if !fx.is_finite() {
        return Err(non_finite(0, &trace));
    }
    let mut momentum = vec![0.0; x.len()];
    let all_terms: Vec<usize> = (0..num_terms).collect();
    let mut batch = Vec::new();

    for t in 1..=config.max_iterations {
        let terms: &[usize] = match sfw.batch {
            BatchSchedule::Full => &all_terms,
            schedule => {
                let b = schedule.size(t, num_terms);
                batch.clear();
                batch.extend((0..b).map(|_| rng.random_range(0..num_terms)));
                &batch
            }
        };
        let estimate = average_term_gradients(objective, &x, terms);
        if !is_finite(&estimate) {
            return Err(non_finite(t, &trace));
        }
        momentum_update(&mut momentum, sfw.momentum.factor(t), &estimate);

        let v = region.lmo(&momentum)?;
        let gap = dual_gap(&momentum, &x, &v);
        if gap < config.gap_tolerance {
            trace.push(t, fx, gap, 0.0, true);
            trace.termination = Termination::GapReached;
            break;
        }
        let eta = step_basic(t).min(1.0);
        let d = sub(&v, &x);
        axpy(&mut x, eta, &d);
        fx = objective.value(&x);
        if !fx.is_finite() {
            return Err(non_finite(t, &trace));
        }
        trace.push(t, fx, gap, eta, true);
    }

    Ok(Solution {
        point: x,
        objective: fx,
        trace,
        active_set: None,
    })
}
