//! Lloyd's k-means with k-means++ seeding on row-normalized points.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::assignment::Assignment;
use crate::error::{Error, Result};
use crate::math::sqrt;
use crate::matrix::Mat;
use crate::rng::{derive_seed, rng_from_seed, SimRng};

const MAX_LLOYD: usize = 300;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Rows scaled to unit length; zero rows stay zero.
pub fn normalize_rows(points: &Mat) -> Mat {
    let mut out = points.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let len = sqrt(row.iter().map(|v| v * v).sum());
        if len > 0.0 {
            row.iter_mut().for_each(|v| *v /= len);
        }
    }
    out
}

/// Clusters the rows of `points` (after row normalization) into `k` groups,
/// keeping the run with the smallest within-cluster sum of squares.
pub fn kmeans(points: &Mat, k: usize, restarts: usize, seed: u64) -> Result<Assignment> {
    let n = points.rows();
    if k == 0 {
        return Err(Error::invalid("K must be positive"));
    }
    if k > n {
        return Err(Error::TooManyClasses { k, n });
    }
    let x = normalize_rows(points);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for run in 0..restarts.max(1) {
        let mut rng = rng_from_seed(derive_seed(seed, &[run as u64]));
        let (cost, labels) = lloyd(&x, k, &mut rng);
        if best.as_ref().map_or(true, |(c, _)| cost < *c) {
            best = Some((cost, labels));
        }
    }
    Assignment::new(best.map(|(_, l)| l).unwrap_or_default(), k)
}

fn seed_centers(x: &Mat, k: usize, rng: &mut SimRng) -> Mat {
    let n = x.rows();
    let mut centers = Mat::zeros(k, x.cols());
    let first = rng.gen_range(0..n);
    centers.row_mut(0).copy_from_slice(x.row(first));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(x.row(i), centers.row(0))).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen_range(0.0..total);
            let mut chosen = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.gen_range(0..n)
        };
        centers.row_mut(c).copy_from_slice(x.row(pick));
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(x.row(i), centers.row(c)));
        }
    }
    centers
}

fn nearest(point: &[f64], centers: &Mat) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centers.rows() {
        let d = sq_dist(point, centers.row(c));
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn lloyd(x: &Mat, k: usize, rng: &mut SimRng) -> (f64, Vec<usize>) {
    let n = x.rows();
    let dim = x.cols();
    let mut centers = seed_centers(x, k, rng);
    let mut labels = vec![usize::MAX; n];
    let mut dist = vec![0.0; n];
    for _ in 0..MAX_LLOYD {
        let mut changed = false;
        for i in 0..n {
            let (c, d) = nearest(x.row(i), &centers);
            if labels[i] != c {
                labels[i] = c;
                changed = true;
            }
            dist[i] = d;
        }
        if !changed {
            break;
        }
        let mut sums = Mat::zeros(k, dim);
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[labels[i]] += 1;
            for (s, v) in sums.row_mut(labels[i]).iter_mut().zip(x.row(i)) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                let inv = 1.0 / counts[c] as f64;
                for (dst, s) in centers.row_mut(c).iter_mut().zip(sums.row(c)) {
                    *dst = s * inv;
                }
            } else {
                // Re-seed an empty cluster at the point farthest from its center.
                let far = (0..n).fold(0, |b, i| if dist[i] > dist[b] { i } else { b });
                centers.row_mut(c).copy_from_slice(x.row(far));
                dist[far] = 0.0;
            }
        }
    }
    let cost = (0..n).map(|i| sq_dist(x.row(i), centers.row(labels[i]))).sum();
    (cost, labels)
}
