use super::{best_by_dot, check_start, choose_step, dual_gap, non_finite};
use super::{ActiveSet, Objective, Solution, SolverConfig, SolverTrace, Termination};
use crate::error::Result;
use crate::linalg::{axpy, dot, is_finite, sub};
use crate::regions::FeasibleRegion;

/// Away-step Frank-Wolfe.
///
/// Keeps an [`ActiveSet`] decomposition of the iterate. Each iteration compares the
/// FW direction `v - x` with the away direction `x - a`, where `a` is the active atom
/// with the largest gradient inner product, and takes the away step only when its
/// gap is strictly larger. Away steps are capped at `w_a / (1 - w_a)`.
pub fn afw_minimize<O, R>(
    objective: &O,
    region: &R,
    config: &SolverConfig,
    initial: &[f64],
) -> Result<Solution>
where
    O: Objective + ?Sized,
    R: FeasibleRegion + ?Sized,
{
    run(objective, region, config, initial, false)
}

/// Lazified away-step Frank-Wolfe: the active set is searched for a FW or away
/// direction with sufficient linear decrease before the true LMO is consulted.
pub fn lafw_minimize<O, R>(
    objective: &O,
    region: &R,
    config: &SolverConfig,
    initial: &[f64],
) -> Result<Solution>
where
    O: Objective + ?Sized,
    R: FeasibleRegion + ?Sized,
{
    run(objective, region, config, initial, true)
}

enum Move {
    Towards(Vec<f64>),
    Away(usize),
    /// Lazy failure: only the gap estimate shrinks.
    Stay,
}

fn run<O, R>(
    objective: &O,
    region: &R,
    config: &SolverConfig,
    initial: &[f64],
    lazy: bool,
) -> Result<Solution>
where
    O: Objective + ?Sized,
    R: FeasibleRegion + ?Sized,
{
    check_start(region, config, initial)?;
    let eps = config.gap_tolerance;
    let mut trace = SolverTrace::default();
    let mut active = ActiveSet::singleton(initial.to_vec());
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
        let gx = dot(&grad, &x);
        let (away_idx, away_val) =
            best_by_dot(&grad, active.atoms(), true).expect("active set is never empty");
        let away_gap = away_val - gx;

        let (mv, gap, lmo_call) = match (lazy, phi) {
            (true, Some(phi_now)) => {
                let threshold = (phi_now / config.lazy_accuracy).max(eps);
                let (local_idx, local_val) =
                    best_by_dot(&grad, active.atoms(), false).expect("active set is never empty");
                let local_gap = gx - local_val;
                if local_gap >= away_gap && local_gap >= threshold {
                    (Move::Towards(active.atoms()[local_idx].clone()), local_gap, false)
                } else if away_gap >= threshold {
                    (Move::Away(away_idx), local_gap, false)
                } else {
                    let v = region.lmo(&grad)?;
                    let gap = dual_gap(&grad, &x, &v);
                    if gap < eps {
                        trace.push(t, fx, gap, 0.0, true);
                        trace.termination = Termination::GapReached;
                        break;
                    }
                    if gap >= threshold {
                        (Move::Towards(v), gap, true)
                    } else {
                        phi = Some(gap.min(phi_now / 2.0));
                        (Move::Stay, gap, true)
                    }
                }
            }
            _ => {
                let v = region.lmo(&grad)?;
                let gap = dual_gap(&grad, &x, &v);
                if gap < eps {
                    trace.push(t, fx, gap, 0.0, true);
                    trace.termination = Termination::GapReached;
                    break;
                }
                if lazy {
                    phi = Some(gap);
                }
                if !lazy && away_gap > gap {
                    (Move::Away(away_idx), gap, true)
                } else {
                    (Move::Towards(v), gap, true)
                }
            }
        };

        let (d, max_step) = match &mv {
            Move::Towards(v) => (sub(v, &x), 1.0),
            Move::Away(i) => {
                let w = active.weight(*i);
                (sub(&x, &active.atoms()[*i]), w / (1.0 - w))
            }
            Move::Stay => {
                trace.push(t, fx, gap, 0.0, lmo_call);
                continue;
            }
        };

        let Some(eta) = choose_step(config, objective, t, &mut r, &x, fx, &d, max_step) else {
            trace.push(t, fx, gap, 0.0, lmo_call);
            trace.termination = Termination::Stalled;
            break;
        };
        axpy(&mut x, eta, &d);
        match &mv {
            Move::Towards(v) => active.towards(v, eta),
            Move::Away(i) => active.away_from(*i, eta, max_step),
            Move::Stay => unreachable!(),
        }
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
        active_set: Some(active),
    })
}
