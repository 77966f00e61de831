//! Leading eigenpairs of a symmetric linear operator.
//!
//! Lanczos with full reorthogonalization, one eigenpair at a time: each run
//! works in the orthogonal complement of the pairs already found and stops
//! when the Ritz pair of largest magnitude has a small enough residual.
//! Runs restart from a fresh random direction when the Krylov space becomes
//! invariant, so repeated eigenvalues are found one copy per run.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::math::sqrt;
use crate::matrix::Mat;
use crate::rng::{derive_seed, rng_from_seed, SimRng};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    /// Accept a pair once `||A x - lambda x|| <= tol * max(1, |lambda|)`.
    pub tol: f64,
    /// Operator applications allowed per eigenpair; `None` means `10 n`.
    pub max_iter: Option<usize>,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: 1e-8,
            max_iter: None,
            seed: 0x5eed,
        }
    }
}

/// Eigenvalues sorted by decreasing magnitude and the matching unit
/// eigenvectors as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Mat,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    sqrt(dot(a, a))
}

/// Removes the components along each (unit) vector, twice for stability.
fn project_out(v: &mut [f64], against: &[&[f64]]) {
    for _ in 0..2 {
        for u in against {
            let c = dot(v, u);
            v.iter_mut().zip(u.iter()).for_each(|(x, y)| *x -= c * y);
        }
    }
}

fn random_direction(n: usize, rng: &mut SimRng, against: &[&[f64]]) -> Option<Vec<f64>> {
    for _ in 0..8 {
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        project_out(&mut v, against);
        let len = norm(&v);
        if len > 1e-8 {
            v.iter_mut().for_each(|x| *x /= len);
            return Some(v);
        }
    }
    None
}

/// The `k` eigenpairs of largest magnitude of the symmetric operator
/// `apply(x, y): y = A x` on `R^n`.
pub fn top_eigenpairs<F>(n: usize, k: usize, apply: F, opts: &EigenOptions) -> Result<EigenPairs>
where
    F: Fn(&[f64], &mut [f64]),
{
    if k > n {
        return Err(Error::TooManyClasses { k, n });
    }
    let max_iter = opts.max_iter.unwrap_or(10 * n.max(1));
    let mut found: Vec<(f64, Vec<f64>)> = Vec::with_capacity(k);
    for index in 0..k {
        let mut rng = rng_from_seed(derive_seed(opts.seed, &[index as u64]));
        let pair = lanczos_one(n, &apply, &found, &mut rng, opts.tol, max_iter)?;
        found.push(pair);
    }
    found.sort_by(|a, b| {
        b.0.abs()
            .partial_cmp(&a.0.abs())
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(b.0.partial_cmp(&a.0).unwrap_or(core::cmp::Ordering::Equal))
    });
    let mut vectors = Mat::zeros(n, k);
    let mut values = Vec::with_capacity(k);
    for (j, (value, v)) in found.into_iter().enumerate() {
        values.push(value);
        for i in 0..n {
            vectors[(i, j)] = v[i];
        }
    }
    Ok(EigenPairs { values, vectors })
}

fn lanczos_one<F>(
    n: usize,
    apply: &F,
    found: &[(f64, Vec<f64>)],
    rng: &mut SimRng,
    tol: f64,
    max_iter: usize,
) -> Result<(f64, Vec<f64>)>
where
    F: Fn(&[f64], &mut [f64]),
{
    let available = n - found.len();
    let locked: Vec<&[f64]> = found.iter().map(|(_, v)| v.as_slice()).collect();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut diag: Vec<f64> = Vec::new();
    let mut sub: Vec<f64> = Vec::new();
    let mut q = random_direction(n, rng, &locked).ok_or(Error::EigenNoConvergence(0))?;
    let mut w = vec![0.0; n];
    let mut ax = vec![0.0; n];

    for iter in 1..=max_iter {
        apply(&q, &mut w);
        let a = dot(&w, &q);
        basis.push(q);
        let mut against: Vec<&[f64]> = locked.clone();
        against.extend(basis.iter().map(|v| v.as_slice()));
        project_out(&mut w, &against);
        diag.push(a);
        let b = norm(&w);
        let exhausted = basis.len() >= available;
        let breakdown = b <= 1e-10 * (1.0 + a.abs());

        if exhausted || breakdown || basis.len() % 5 == 0 || iter == max_iter {
            let (theta, y) = tridiagonal_eigen(&diag, &sub)?;
            let pick = (0..theta.len())
                .max_by(|&i, &j| {
                    theta[i]
                        .abs()
                        .partial_cmp(&theta[j].abs())
                        .unwrap_or(core::cmp::Ordering::Equal)
                        .then(theta[i].partial_cmp(&theta[j]).unwrap_or(core::cmp::Ordering::Equal))
                })
                .unwrap_or(0);
            let value = theta[pick];
            let last = y[(basis.len() - 1, pick)];
            let scale = tol * value.abs().max(1.0);
            if exhausted || breakdown || b * last.abs() <= scale {
                let mut x = vec![0.0; n];
                for (j, v) in basis.iter().enumerate() {
                    let c = y[(j, pick)];
                    x.iter_mut().zip(v).for_each(|(xi, vi)| *xi += c * vi);
                }
                project_out(&mut x, &locked);
                let len = norm(&x);
                x.iter_mut().for_each(|v| *v /= len);
                apply(&x, &mut ax);
                let residual = sqrt(ax.iter().zip(&x).map(|(p, xi)| (p - value * xi) * (p - value * xi)).sum());
                if residual <= scale {
                    orient(&mut x);
                    return Ok((value, x));
                }
            }
        }

        if exhausted {
            break;
        }
        if breakdown {
            let mut against: Vec<&[f64]> = locked.clone();
            against.extend(basis.iter().map(|v| v.as_slice()));
            match random_direction(n, rng, &against) {
                Some(v) => {
                    q = v;
                    sub.push(0.0);
                }
                None => break,
            }
        } else {
            q = w.iter().map(|v| v / b).collect();
            sub.push(b);
        }
    }
    Err(Error::EigenNoConvergence(max_iter))
}

/// Flips the sign so the largest-magnitude entry (first on ties) is positive.
fn orient(x: &mut [f64]) {
    let mut idx = 0;
    for (i, v) in x.iter().enumerate() {
        if v.abs() > x[idx].abs() + 1e-12 {
            idx = i;
        }
    }
    if x[idx] < 0.0 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
}

/// Eigen-decomposition of the symmetric tridiagonal matrix with diagonal
/// `diag` and off-diagonal `sub` (implicit QL). Eigenvalues ascend; the
/// eigenvectors are the columns of the returned matrix.
pub fn tridiagonal_eigen(diag: &[f64], sub: &[f64]) -> Result<(Vec<f64>, Mat)> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n.saturating_sub(1)].copy_from_slice(&sub[..n.saturating_sub(1)]);
    let mut v = Mat::zeros(n, n);
    for i in 0..n {
        v[(i, i)] = 1.0;
    }
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut rounds = 0;
            loop {
                rounds += 1;
                if rounds > 60 {
                    return Err(Error::EigenNoConvergence(rounds));
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = libm::hypot(p, 1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let (mut c, mut c2, mut c3) = (1.0, 1.0, 1.0);
                let el1 = e[l + 1];
                let (mut s, mut s2) = (0.0, 0.0);
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = libm::hypot(p, e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let h = v[(k, i + 1)];
                        v[(k, i + 1)] = s * v[(k, i)] + c * h;
                        v[(k, i)] = c * v[(k, i)] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap_or(core::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| d[i]).collect();
    let mut vectors = Mat::zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, new)] = v[(k, old)];
        }
    }
    Ok((values, vectors))
}
