use super::{check_start, choose_step, dual_gap, non_finite, Objective, Solution, SolverConfig};
use super::{SolverTrace, Termination};
use crate::error::Result;
use crate::linalg::{axpy, is_finite, sub};
use crate::regions::FeasibleRegion;

/// Vanilla Frank-Wolfe: LMO on the current gradient, then a convex step towards
/// the returned vertex. Stops when the dual gap drops below the tolerance, when the
/// monotone step search stalls, or after `max_iterations`.
pub fn fw_minimize<O, R>(
    objective: &O,
    region: &R,
    config: &SolverConfig,
    initial: &[f64],
) -> Result<Solution>
where
    O: Objective + ?Sized,
    R: FeasibleRegion + ?Sized,
{
    check_start(region, config, initial)?;
    let mut trace = SolverTrace::default();
    let mut x = initial.to_vec();
    let mut fx = objective.value(&x);
    if !fx.is_finite() {
        return Err(non_finite(0, &trace));
    }
    let mut r = 0u32;

    for t in 1..=config.max_iterations {
        let grad = objective.gradient(&x);
        if !is_finite(&grad) {
            return Err(non_finite(t, &trace));
        }
        let v = region.lmo(&grad)?;
        let gap = dual_gap(&grad, &x, &v);
        if gap < config.gap_tolerance {
            trace.push(t, fx, gap, 0.0, true);
            trace.termination = Termination::GapReached;
            break;
        }
        let d = sub(&v, &x);
        let Some(eta) = choose_step(config, objective, t, &mut r, &x, fx, &d, 1.0) else {
            trace.push(t, fx, gap, 0.0, true);
            trace.termination = Termination::Stalled;
            break;
        };
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
