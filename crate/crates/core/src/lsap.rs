//! Linear sum assignment (Hungarian algorithm, shortest augmenting paths).

use alloc::vec;
use alloc::vec::Vec;

use crate::matrix::Mat;

/// Minimum-cost perfect matching on a square cost matrix; returns
/// `assignment[row] = col`.
pub fn solve_min(cost: &Mat) -> Vec<usize> {
    let n = cost.rows();
    assert_eq!(n, cost.cols(), "cost matrix must be square");
    if n == 0 {
        return Vec::new();
    }
    // 1-based potentials and matching, column 0 is a sentinel.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut matched = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        matched[0] = row;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched[j0] = matched[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0; n];
    for j in 1..=n {
        out[matched[j] - 1] = j - 1;
    }
    out
}

/// Maximum-weight assignment for a rectangular matrix, zero-padded to
/// square. Returns `assignment[row] = col` over the padded size
/// `max(rows, cols)`.
pub fn solve_max(weights: &Mat) -> Vec<usize> {
    let n = weights.rows().max(weights.cols());
    let mut cost = Mat::zeros(n, n);
    for i in 0..weights.rows() {
        for j in 0..weights.cols() {
            cost[(i, j)] = -weights[(i, j)];
        }
    }
    solve_min(&cost)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn total(w: &Mat, a: &[usize]) -> f64 {
        a.iter().enumerate().map(|(i, &j)| w[(i, j)]).sum()
    }

    #[test]
    fn small_known_case() {
        let c = Mat::from_rows(&[vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]]);
        let a = solve_min(&c);
        assert_eq!(total(&c, &a), 5.0);
    }

    #[test]
    fn rectangular_is_padded() {
        let w = Mat::from_rows(&[vec![1.0, 9.0, 2.0], vec![8.0, 1.0, 1.0]]);
        let a = solve_max(&w);
        assert_eq!(a.len(), 3);
        assert_eq!(&a[..2], &[1, 0]);
    }

    #[test]
    fn empty() {
        assert!(solve_min(&Mat::zeros(0, 0)).is_empty());
    }
}
