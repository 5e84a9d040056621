use serde::{Deserialize, Serialize};

/// Convex decomposition of the current iterate over previously visited atoms.
///
/// Atoms are feasible points, normally LMO vertices. A non-vertex starting point
/// enters as its own atom, which keeps every convex combination feasible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActiveSet {
    atoms: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl ActiveSet {
    pub fn singleton(atom: Vec<f64>) -> Self {
        Self {
            atoms: vec![atom],
            weights: vec![1.0],
        }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[Vec<f64>] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn position(&self, atom: &[f64]) -> Option<usize> {
        self.atoms.iter().position(|a| a.as_slice() == atom)
    }

    /// Weighted sum of the atoms.
    pub fn reconstruct(&self) -> Vec<f64> {
        let dim = self.atoms.first().map_or(0, Vec::len);
        let mut x = vec![0.0; dim];
        for (a, &w) in self.atoms.iter().zip(&self.weights) {
            for (xi, ai) in x.iter_mut().zip(a) {
                *xi += w * ai;
            }
        }
        x
    }

    /// Weights non-negative and summing to one within `tol`.
    pub fn weights_valid(&self, tol: f64) -> bool {
        let sum: f64 = self.weights.iter().sum();
        self.weights.iter().all(|&w| w >= 0.0) && (sum - 1.0).abs() <= tol
    }

    /// Applies `x <- (1 - gamma) x + gamma v`.
    pub fn towards(&mut self, vertex: &[f64], gamma: f64) {
        if gamma >= 1.0 {
            *self = Self::singleton(vertex.to_vec());
            return;
        }
        for w in &mut self.weights {
            *w *= 1.0 - gamma;
        }
        match self.position(vertex) {
            Some(i) => self.weights[i] += gamma,
            None => {
                self.atoms.push(vertex.to_vec());
                self.weights.push(gamma);
            }
        }
        self.prune();
    }

    /// Applies `x <- (1 + gamma) x - gamma a_i`. With `gamma` equal to the maximal
    /// away step `w_i / (1 - w_i)` the atom is dropped.
    pub fn away_from(&mut self, i: usize, gamma: f64, max_gamma: f64) {
        for w in &mut self.weights {
            *w *= 1.0 + gamma;
        }
        if gamma >= max_gamma {
            self.weights[i] = 0.0;
        } else {
            self.weights[i] -= gamma;
        }
        self.prune();
    }

    fn prune(&mut self) {
        let mut i = 0;
        while i < self.atoms.len() {
            if self.weights[i] <= 0.0 {
                self.atoms.remove(i);
                self.weights.remove(i);
            } else {
                i += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn towards_and_away() {
        let mut s = ActiveSet::singleton(vec![0.0, 0.0]);
        s.towards(&[1.0, 0.0], 0.5);
        assert_eq!(s.reconstruct(), vec![0.5, 0.0]);
        s.towards(&[0.0, 1.0], 0.5);
        assert_eq!(s.reconstruct(), vec![0.25, 0.5]);
        assert_eq!(s.len(), 3);
        // Drop step on the origin atom (weight 0.25).
        let i = s.position(&[0.0, 0.0]).unwrap();
        let max = s.weight(i) / (1.0 - s.weight(i));
        s.away_from(i, max, max);
        assert_eq!(s.len(), 2);
        assert!(s.weights_valid(1e-12));
        let x = s.reconstruct();
        assert!((x[0] - 1.0 / 3.0).abs() < 1e-12 && (x[1] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn full_step_resets() {
        let mut s = ActiveSet::singleton(vec![0.0]);
        s.towards(&[1.0], 0.3);
        s.towards(&[2.0], 1.0);
        assert_eq!(s, ActiveSet::singleton(vec![2.0]));
    }

    #[test]
    fn existing_atom_is_merged() {
        let mut s = ActiveSet::singleton(vec![1.0]);
        s.towards(&[0.0], 0.5);
        s.towards(&[1.0], 0.5);
        assert_eq!(s.len(), 2);
        assert_eq!(s.weights(), &[0.75, 0.25]);
    }
}
