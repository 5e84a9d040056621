#![allow(dead_code)]

use fwrde::solvers::Objective;

/// All permutations of `0..n` (Heap's algorithm).
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut p: Vec<usize> = (0..n).collect();
    let mut out = vec![p.clone()];
    let mut c = vec![0; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                p.swap(0, i);
            } else {
                p.swap(c[i], i);
            }
            out.push(p.clone());
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

/// Every point of `{-tau, 0, tau}^n` (or `{0, tau}^n` when `nonneg`) with at most
/// `k` nonzero entries. The vertex set of the region is contained in this list.
pub fn sparse_sign_points(n: usize, k: usize, tau: f64, nonneg: bool) -> Vec<Vec<f64>> {
    let levels: &[f64] = if nonneg { &[0.0, 1.0] } else { &[-1.0, 0.0, 1.0] };
    let mut out = vec![Vec::with_capacity(n)];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|p: Vec<f64>| {
                levels.iter().filter_map(move |&l| {
                    let nz = p.iter().filter(|v| **v != 0.0).count() + usize::from(l != 0.0);
                    (nz <= k).then(|| {
                        let mut q = p.clone();
                        q.push(l * tau);
                        q
                    })
                })
            })
            .collect();
    }
    out
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Central differences of `f` at `x` with step `h`.
pub fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|i| {
            y[i] = x[i] + h;
            let up = f(&y);
            y[i] = x[i] - h;
            let down = f(&y);
            y[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `||a - b|| / max(||b||, 1e-12)`
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let norm: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    diff / norm.max(1e-12)
}

/// `||s - c||^2`
pub struct Quadratic {
    pub center: Vec<f64>,
}

impl Objective for Quadratic {
    fn value(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.center).map(|(a, b)| 2.0 * (a - b)).collect()
    }
}

/// Wraps an objective and records every point at which a gradient is requested.
/// Solvers request exactly one gradient per iterate.
pub struct Recording<O> {
    pub inner: O,
    pub points: std::cell::RefCell<Vec<Vec<f64>>>,
}

impl<O> Recording<O> {
    pub fn new(inner: O) -> Self {
        Self {
            inner,
            points: Default::default(),
        }
    }
}

impl<O: Objective> Objective for Recording<O> {
    fn value(&self, x: &[f64]) -> f64 {
        self.inner.value(x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.points.borrow_mut().push(x.to_vec());
        self.inner.gradient(x)
    }
}
