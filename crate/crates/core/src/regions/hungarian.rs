//! Dense Hungarian method (shortest augmenting paths with potentials), O(n^3).

/// Minimum-cost assignment for a row-major `n x n` cost matrix.
///
/// Returns `assignment` with `assignment[row] = col`. Among equal reduced costs the
/// search prefers a column that is still unassigned, then the lowest column index,
/// so an all-ties matrix maps to the identity.
pub fn solve(cost: &[f64], n: usize) -> Vec<usize> {
    debug_assert_eq!(cost.len(), n * n);
    if n == 0 {
        return Vec::new();
    }

    // 1-based bookkeeping: column 0 is the virtual source.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];

        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;

            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                let better = minv[j] < delta
                    || (minv[j] == delta && j1 != 0 && p[j] == 0 && p[j1] != 0);
                if better || j1 == 0 {
                    delta = minv[j];
                    j1 = j;
                }
            }

            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }

            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }

        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

pub fn assignment_cost(cost: &[f64], n: usize, assignment: &[usize]) -> f64 {
    assignment
        .iter()
        .enumerate()
        .map(|(row, &col)| cost[row * n + col])
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two() {
        assert_eq!(solve(&[1.0, 2.0, 2.0, 1.0], 2), vec![0, 1]);
        assert_eq!(solve(&[2.0, 1.0, 1.0, 2.0], 2), vec![1, 0]);
    }

    #[test]
    fn three_by_three() {
        let c = [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        let a = solve(&c, 3);
        assert_eq!(a, vec![1, 0, 2]);
        assert_eq!(assignment_cost(&c, 3, &a), 5.0);
    }

    #[test]
    fn all_ties_give_identity() {
        for n in 1..8 {
            let a = solve(&vec![0.0; n * n], n);
            assert_eq!(a, (0..n).collect::<Vec<_>>());
        }
    }

    #[test]
    fn negative_costs() {
        let c = [-1.0, -5.0, -3.0, -2.0];
        assert_eq!(solve(&c, 2), vec![1, 0]);
    }
}
