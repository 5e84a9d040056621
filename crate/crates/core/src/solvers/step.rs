use crate::linalg::moved;

/// Maximum number of exponent increments tried per monotone step.
pub const MAX_HALVINGS: u32 = 64;

/// `1 / sqrt(t + 1)`
pub fn step_basic(t: usize) -> f64 {
    1.0 / ((t + 1) as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotoneStep {
    pub eta: f64,
    /// Exponent `r_t` to carry into the next iteration.
    pub exponent: u32,
    pub stalled: bool,
}

/// Monotone step `2^{-r} / sqrt(t + 1)` (capped at `max_step`), with `r` increased
/// from `r_prev` one unit at a time until `f(x + eta d) < f(x)`.
///
/// After [`MAX_HALVINGS`] unsuccessful increments the step is reported as stalled
/// with `eta = 0` and the exponent left at `r_prev`.
pub fn step_monotone<F>(
    t: usize,
    r_prev: u32,
    f: F,
    fx: f64,
    x: &[f64],
    d: &[f64],
    max_step: f64,
) -> MonotoneStep
where
    F: Fn(&[f64]) -> f64,
{
    let base = step_basic(t);
    for r in r_prev..=r_prev.saturating_add(MAX_HALVINGS) {
        let eta = (base * 0.5f64.powi(r as i32)).min(max_step);
        if eta <= 0.0 {
            break;
        }
        if f(&moved(x, eta, d)) < fx {
            return MonotoneStep {
                eta,
                exponent: r,
                stalled: false,
            };
        }
    }
    MonotoneStep {
        eta: 0.0,
        exponent: r_prev,
        stalled: true,
    }
}
