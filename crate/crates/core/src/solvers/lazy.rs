use super::{best_by_dot, check_start, choose_step, dual_gap, non_finite};
use super::{Objective, Solution, SolverConfig, SolverTrace, Termination};
use crate::error::Result;
use crate::linalg::{axpy, dot, is_finite, sub};
use crate::regions::FeasibleRegion;

/// Lazified conditional gradients.
///
/// Vertices returned by the LMO are cached (never evicted). Each iteration first
/// looks for the cached vertex with the best linear decrease; it is used when that
/// decrease is at least `max(phi / K, eps)`. Otherwise the true LMO is called, and
/// when its vertex also falls short of the threshold the gap estimate becomes
/// `phi <- min(gap, phi / 2)`. `phi` starts at the first LMO gap.
pub fn lcg_minimize<O, R>(
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
    let eps = config.gap_tolerance;
    let mut trace = SolverTrace::default();
    let mut cache: Vec<Vec<f64>> = Vec::new();
    let mut x = initial.to_vec();
    let mut fx = objective.value(&x);
    if !fx.is_finite() {
        return Err(non_finite(0, &trace));
    }
    let mut r = 0u32;
    let mut phi: Option<f64> = None;

    for t in 1..=config.max_iterations {
        let grad = objective.gradient(&x);
        if !is_finite(&grad) {
            return Err(non_finite(t, &trace));
        }

        let cached = match phi {
            Some(phi_now) => {
                let threshold = (phi_now / config.lazy_accuracy).max(eps);
                best_by_dot(&grad, &cache, false)
                    .map(|(i, val)| (i, dot(&grad, &x) - val))
                    .filter(|&(_, gain)| gain >= threshold)
            }
            None => None,
        };

        let (v, gap, lmo_call) = match cached {
            Some((i, gain)) => (cache[i].clone(), gain, false),
            None => {
                let v = region.lmo(&grad)?;
                let gap = dual_gap(&grad, &x, &v);
                if gap < eps {
                    trace.push(t, fx, gap, 0.0, true);
                    trace.termination = Termination::GapReached;
                    break;
                }
                phi = Some(match phi {
                    None => gap,
                    Some(p) if gap < p / config.lazy_accuracy => gap.min(p / 2.0),
                    Some(p) => p,
                });
                if !cache.contains(&v) {
                    cache.push(v.clone());
                }
                (v, gap, true)
            }
        };

        let d = sub(&v, &x);
        let Some(eta) = choose_step(config, objective, t, &mut r, &x, fx, &d, 1.0) else {
            trace.push(t, fx, gap, 0.0, lmo_call);
            trace.termination = Termination::Stalled;
            break;
        };
        axpy(&mut x, eta, &d);
        fx = objective.value(&x);
        if !fx.is_finite() {
            return Err(non_finite(t, &trace));
        }
        trace.push(t, fx, gap, eta, lmo_call);
    }

    Ok(Solution {
        point: x,
        objective: fx,
        trace,
        active_set: None,
    })
}
