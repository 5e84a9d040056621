//! Convex feasible sets with exact linear minimization oracles (LMOs).
//!
//! Points of every region are flat `f64` slices. Matrices (Birkhoff polytope) are
//! stored row-major, so an `n x n` matrix is a slice of length `n * n`.
//!
//! All oracles are deterministic: among equal gradient values the lowest index
//! wins, and `sign(0)` is treated as negative so that the k-sparse oracle places
//! `+tau` there.

pub mod hungarian;

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default membership tolerance.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// A compact convex set exposing an exact linear minimization oracle.
pub trait FeasibleRegion {
    /// Length of a (flattened) point.
    fn dim(&self) -> usize;

    /// Returns a vertex `v` minimizing `<grad, v>` over the region.
    fn lmo(&self, grad: &[f64]) -> Result<Vec<f64>>;

    fn contains(&self, point: &[f64], tol: f64) -> bool;

    /// Feasible starting point used when none is supplied.
    fn default_start(&self) -> Vec<f64>;
}

impl<R: FeasibleRegion + ?Sized> FeasibleRegion for &R {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn lmo(&self, grad: &[f64]) -> Result<Vec<f64>> {
        (**self).lmo(grad)
    }
    fn contains(&self, point: &[f64], tol: f64) -> bool {
        (**self).contains(point, tol)
    }
    fn default_start(&self) -> Vec<f64> {
        (**self).default_start()
    }
}

fn check_sparse_params(n: usize, k: usize, tau: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    if k == 0 || k > n {
        return Err(Error::invalid(format!("sparsity k={k} must lie in [1, {n}]")));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::invalid(format!("radius tau={tau} must be positive")));
    }
    Ok(())
}

/// Heap entry ordered by "how good a candidate is": larger key first, lower index
/// on ties. The heap keeps the current worst of the best `k` at the top.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    key: f64,
    index: usize,
}

impl Candidate {
    fn rank(&self, other: &Self) -> Ordering {
        self.key
            .total_cmp(&other.key)
            .then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.rank(other) == Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate {
    // Reversed so that `BinaryHeap` (a max-heap) pops the worst candidate.
    fn cmp(&self, other: &Self) -> Ordering {
        other.rank(self)
    }
}

/// Indices of the `k` largest keys (ties: lowest index), in O(n log k).
/// Entries with `key == None` are skipped.
fn top_k(keys: impl Iterator<Item = Option<f64>>, k: usize) -> Vec<usize> {
    let mut heap: BinaryHeap<Candidate> = BinaryHeap::with_capacity(k + 1);
    for (index, key) in keys.enumerate() {
        let Some(key) = key else { continue };
        let cand = Candidate { key, index };
        if heap.len() < k {
            heap.push(cand);
        } else if let Some(worst) = heap.peek() {
            if cand.rank(worst) == Ordering::Greater {
                heap.pop();
                heap.push(cand);
            }
        }
    }
    heap.into_iter().map(|c| c.index).collect()
}

/// Convex hull of vectors with exactly `k` non-zero entries, each `+tau` or `-tau`;
/// equivalently the intersection of the l1-ball of radius `tau * k` with the
/// l-infinity ball of radius `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KSparsePolytope {
    n: usize,
    k: usize,
    tau: f64,
}

impl KSparsePolytope {
    pub fn new(n: usize, k: usize, tau: f64) -> Result<Self> {
        check_sparse_params(n, k, tau)?;
        Ok(Self { n, k, tau })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn tau(&self) -> f64 {
        self.tau
    }
}

/// `-tau * sign(grad_j)` on the `k` coordinates of largest `|grad_j|`.
pub fn lmo_ksparse(grad: &[f64], region: &KSparsePolytope) -> Result<Vec<f64>> {
    Error::check_len(region.n, grad.len())?;
    let mut v = vec![0.0; region.n];
    for j in top_k(grad.iter().map(|g| Some(g.abs())), region.k) {
        v[j] = if grad[j] > 0.0 { -region.tau } else { region.tau };
    }
    Ok(v)
}

impl FeasibleRegion for KSparsePolytope {
    fn dim(&self) -> usize {
        self.n
    }

    fn lmo(&self, grad: &[f64]) -> Result<Vec<f64>> {
        lmo_ksparse(grad, self)
    }

    fn contains(&self, point: &[f64], tol: f64) -> bool {
        if point.len() != self.n || !point.iter().all(|v| v.is_finite()) {
            return false;
        }
        let l1: f64 = point.iter().map(|v| v.abs()).sum();
        l1 <= self.tau * self.k as f64 + tol && point.iter().all(|v| v.abs() <= self.tau + tol)
    }

    fn default_start(&self) -> Vec<f64> {
        vec![0.0; self.n]
    }
}

/// The k-sparse polytope intersected with the non-negative orthant:
/// `{ v : 0 <= v_i <= tau, ||v||_1 <= tau * k }`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonNegKSparsePolytope {
    n: usize,
    k: usize,
    tau: f64,
}

impl NonNegKSparsePolytope {
    pub fn new(n: usize, k: usize, tau: f64) -> Result<Self> {
        check_sparse_params(n, k, tau)?;
        Ok(Self { n, k, tau })
    }

    /// The single-rate attribution set `{ s in [0,1]^n : ||s||_1 <= k }`.
    pub fn rate_constrained(n: usize, k: usize) -> Result<Self> {
        Self::new(n, k, 1.0)
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn tau(&self) -> f64 {
        self.tau
    }
}

/// `tau` on (at most) the `k` most negative gradient coordinates, zero elsewhere.
pub fn lmo_nonneg_ksparse(grad: &[f64], region: &NonNegKSparsePolytope) -> Result<Vec<f64>> {
    Error::check_len(region.n, grad.len())?;
    let mut v = vec![0.0; region.n];
    let keys = grad.iter().map(|&g| (g < 0.0).then_some(-g));
    for j in top_k(keys, region.k) {
        v[j] = region.tau;
    }
    Ok(v)
}

impl FeasibleRegion for NonNegKSparsePolytope {
    fn dim(&self) -> usize {
        self.n
    }

    fn lmo(&self, grad: &[f64]) -> Result<Vec<f64>> {
        lmo_nonneg_ksparse(grad, self)
    }

    fn contains(&self, point: &[f64], tol: f64) -> bool {
        if point.len() != self.n || !point.iter().all(|v| v.is_finite()) {
            return false;
        }
        let l1: f64 = point.iter().sum();
        l1 <= self.tau * self.k as f64 + tol
            && point.iter().all(|&v| v >= -tol && v <= self.tau + tol)
    }

    fn default_start(&self) -> Vec<f64> {
        vec![0.0; self.n]
    }
}

/// Doubly stochastic `n x n` matrices, the convex hull of permutation matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BirkhoffPolytope {
    n: usize,
}

impl BirkhoffPolytope {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("Birkhoff polytope needs n >= 1"));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The barycenter: every entry `1/n`.
    pub fn uniform(&self) -> Vec<f64> {
        vec![1.0 / self.n as f64; self.n * self.n]
    }
}

/// Permutation matrix (row-major) from `assignment[row] = col`.
pub fn permutation_matrix(assignment: &[usize]) -> Vec<f64> {
    let n = assignment.len();
    let mut p = vec![0.0; n * n];
    for (row, &col) in assignment.iter().enumerate() {
        p[row * n + col] = 1.0;
    }
    p
}

/// Permutation matrix minimizing the Frobenius inner product with `cost`.
pub fn lmo_birkhoff(cost: &[f64], region: &BirkhoffPolytope) -> Result<Vec<f64>> {
    let n = region.n;
    Error::check_len(n * n, cost.len())?;
    if !cost.iter().all(|c| c.is_finite()) {
        return Err(Error::invalid("cost matrix has non-finite entries"));
    }
    Ok(permutation_matrix(&hungarian::solve(cost, n)))
}

impl FeasibleRegion for BirkhoffPolytope {
    fn dim(&self) -> usize {
        self.n * self.n
    }

    fn lmo(&self, grad: &[f64]) -> Result<Vec<f64>> {
        lmo_birkhoff(grad, self)
    }

    fn contains(&self, point: &[f64], tol: f64) -> bool {
        let n = self.n;
        if point.len() != n * n || !point.iter().all(|&v| v.is_finite() && v >= -tol) {
            return false;
        }
        let rows_ok = point
            .chunks_exact(n)
            .all(|row| (row.iter().sum::<f64>() - 1.0).abs() <= tol);
        let cols_ok = (0..n).all(|j| {
            let s: f64 = (0..n).map(|i| point[i * n + j]).sum();
            (s - 1.0).abs() <= tol
        });
        rows_ok && cols_ok
    }

    fn default_start(&self) -> Vec<f64> {
        self.uniform()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ksparse_examples() {
        let r = KSparsePolytope::new(3, 1, 1.0).unwrap();
        assert_eq!(lmo_ksparse(&[2.0, -5.0, 1.0], &r).unwrap(), vec![0.0, 1.0, 0.0]);

        let r = KSparsePolytope::new(4, 2, 0.5).unwrap();
        assert_eq!(
            lmo_ksparse(&[-1.0, -1.0, 2.0, -3.0], &r).unwrap(),
            vec![0.0, 0.0, -0.5, 0.5]
        );

        let r = KSparsePolytope::new(3, 2, 1.0).unwrap();
        assert_eq!(lmo_ksparse(&[0.0; 3], &r).unwrap(), vec![1.0, 1.0, 0.0]);
    }

    #[test]
    fn nonneg_ksparse_examples() {
        let r = NonNegKSparsePolytope::new(4, 2, 1.0).unwrap();
        assert_eq!(
            lmo_nonneg_ksparse(&[-3.0, 1.0, -2.0, -1.0], &r).unwrap(),
            vec![1.0, 0.0, 1.0, 0.0]
        );
        let r = NonNegKSparsePolytope::new(3, 2, 1.0).unwrap();
        assert_eq!(lmo_nonneg_ksparse(&[1.0, 2.0, 3.0], &r).unwrap(), vec![0.0; 3]);
        assert_eq!(lmo_nonneg_ksparse(&[0.0; 3], &r).unwrap(), vec![0.0; 3]);
        let r = NonNegKSparsePolytope::new(1, 1, 1.0).unwrap();
        assert_eq!(lmo_nonneg_ksparse(&[-1.0], &r).unwrap(), vec![1.0]);
    }

    #[test]
    fn fewer_negatives_than_k() {
        let r = NonNegKSparsePolytope::new(4, 3, 2.0).unwrap();
        assert_eq!(
            lmo_nonneg_ksparse(&[1.0, -0.5, 0.0, 4.0], &r).unwrap(),
            vec![0.0, 2.0, 0.0, 0.0]
        );
    }

    #[test]
    fn ties_take_lowest_index() {
        let r = NonNegKSparsePolytope::new(5, 2, 1.0).unwrap();
        assert_eq!(
            lmo_nonneg_ksparse(&[-1.0, -2.0, -1.0, -2.0, -1.0], &r).unwrap(),
            vec![0.0, 1.0, 0.0, 1.0, 0.0]
        );
        let r = KSparsePolytope::new(4, 1, 1.0).unwrap();
        assert_eq!(lmo_ksparse(&[3.0, -3.0, 3.0, 1.0], &r).unwrap(), vec![-1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn dimension_mismatch() {
        let r = KSparsePolytope::new(3, 1, 1.0).unwrap();
        assert!(matches!(lmo_ksparse(&[1.0], &r), Err(Error::DimensionMismatch { .. })));
        let r = NonNegKSparsePolytope::new(3, 1, 1.0).unwrap();
        assert!(lmo_nonneg_ksparse(&[1.0; 4], &r).is_err());
        let b = BirkhoffPolytope::new(2).unwrap();
        assert!(lmo_birkhoff(&[1.0; 3], &b).is_err());
        assert!(lmo_birkhoff(&[1.0, f64::NAN, 0.0, 0.0], &b).is_err());
    }

    #[test]
    fn invalid_parameters() {
        assert!(KSparsePolytope::new(3, 0, 1.0).is_err());
        assert!(KSparsePolytope::new(3, 4, 1.0).is_err());
        assert!(NonNegKSparsePolytope::new(3, 1, 0.0).is_err());
        assert!(BirkhoffPolytope::new(0).is_err());
    }

    #[test]
    fn birkhoff_examples() {
        let b = BirkhoffPolytope::new(2).unwrap();
        assert_eq!(lmo_birkhoff(&[1.0, 2.0, 2.0, 1.0], &b).unwrap(), vec![1.0, 0.0, 0.0, 1.0]);
        let b = BirkhoffPolytope::new(3).unwrap();
        let p = lmo_birkhoff(&[4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0], &b).unwrap();
        assert_eq!(p, permutation_matrix(&[1, 0, 2]));
        assert_eq!(lmo_birkhoff(&[0.0; 9], &b).unwrap(), permutation_matrix(&[0, 1, 2]));
    }

    #[test]
    fn membership() {
        let r = NonNegKSparsePolytope::new(3, 2, 1.0).unwrap();
        assert!(r.contains(&[0.5, 0.5, 0.5], 1e-9));
        let r = NonNegKSparsePolytope::new(3, 1, 1.0).unwrap();
        assert!(!r.contains(&[0.6, 0.6, 0.0], 1e-9));
        assert!(!r.contains(&[-0.1, 0.0, 0.0], 1e-9));
        assert!(!r.contains(&[0.5, 0.0], 1e-9));
        let b = BirkhoffPolytope::new(2).unwrap();
        assert!(b.contains(&[0.5, 0.5, 0.5, 0.5], 1e-9));
        assert!(!b.contains(&[0.6, 0.4, 0.5, 0.5], 1e-9));
        assert!(!b.contains(&[1.5, -0.5, -0.5, 1.5], 1e-9));
        let k = KSparsePolytope::new(3, 2, 0.5).unwrap();
        assert!(k.contains(&[-0.5, 0.5, 0.0], 1e-9));
        assert!(!k.contains(&[-0.5, 0.5, 0.1], 1e-9));
        assert!(!k.contains(&[0.6, 0.0, 0.0], 1e-9));
    }

    #[test]
    fn default_starts_are_feasible() {
        let b = BirkhoffPolytope::new(5).unwrap();
        assert!(b.contains(&b.default_start(), 1e-12));
        let r = NonNegKSparsePolytope::new(5, 2, 1.0).unwrap();
        assert!(r.contains(&r.default_start(), 0.0));
    }
}
