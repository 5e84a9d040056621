use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GapReached,
    MaxIterations,
    /// The monotone step search found no decrease within its halving budget.
    Stalled,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Termination::GapReached => "gap_reached",
            Termination::MaxIterations => "max_iterations",
            Termination::Stalled => "stalled",
        }
    }
}

/// One solver iteration. `objective` is the value after the step; `dual_gap` is
/// the gap at the iterate the step started from (a lower bound on it for lazy steps).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub objective: f64,
    pub dual_gap: f64,
    pub step_size: f64,
    pub lmo_call: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverTrace {
    pub records: Vec<TraceRecord>,
    pub termination: Termination,
}

impl Default for SolverTrace {
    fn default() -> Self {
        Self {
            records: Vec::new(),
            termination: Termination::MaxIterations,
        }
    }
}

impl SolverTrace {
    pub fn push(&mut self, iter: usize, objective: f64, dual_gap: f64, step_size: f64, lmo_call: bool) {
        self.records.push(TraceRecord {
            iter,
            objective,
            dual_gap,
            step_size,
            lmo_call,
        });
    }

    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn lmo_calls(&self) -> usize {
        self.records.iter().filter(|r| r.lmo_call).count()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn final_gap(&self) -> f64 {
        self.last().map_or(f64::INFINITY, |r| r.dual_gap)
    }

    pub fn objectives(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.objective)
    }
}
