//! Limited-memory BFGS minimizer with Armijo backtracking.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::math::sqrt;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsOptions {
    /// Number of stored correction pairs.
    pub memory: usize,
    /// Stop once the gradient's max-norm is at or below this.
    pub grad_tol: f64,
    pub max_iter: usize,
    /// Sufficient-decrease constant of the Armijo condition.
    pub armijo: f64,
    /// Step halvings before the line search gives up.
    pub max_backtracks: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        LbfgsOptions {
            memory: 10,
            grad_tol: 1e-6,
            max_iter: 200,
            armijo: 1e-4,
            max_backtracks: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsReport {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_inf_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Minimizes `f`, which returns the objective and writes the gradient into
/// its second argument.
///
/// The returned point is always the best one evaluated; `converged` is false
/// when the iteration budget ran out or the line search failed.
pub fn minimize<F>(mut f: F, x0: Vec<f64>, opts: &LbfgsOptions) -> LbfgsReport
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0;
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g);
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut alpha = vec![0.0; opts.memory];
    let mut direction = vec![0.0; n];
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];

    let mut iterations = 0;
    let mut converged = inf_norm(&g) <= opts.grad_tol;
    while !converged && iterations < opts.max_iter {
        // Two-loop recursion: direction = -H g.
        direction.copy_from_slice(&g);
        for (idx, (s, y, rho)) in history.iter().enumerate().rev() {
            alpha[idx] = rho * dot(s, &direction);
            for (d, yv) in direction.iter_mut().zip(y) {
                *d -= alpha[idx] * yv;
            }
        }
        if let Some((s, y, _)) = history.back() {
            let gamma = dot(s, y) / dot(y, y);
            direction.iter_mut().for_each(|d| *d *= gamma);
        } else {
            let scale = 1.0 / sqrt(dot(&g, &g)).max(1.0);
            direction.iter_mut().for_each(|d| *d *= scale);
        }
        for (idx, (s, y, rho)) in history.iter().enumerate() {
            let beta = rho * dot(y, &direction);
            for (d, sv) in direction.iter_mut().zip(s) {
                *d += (alpha[idx] - beta) * sv;
            }
        }
        direction.iter_mut().for_each(|d| *d = -*d);

        let mut slope = dot(&g, &direction);
        if slope >= 0.0 {
            // Curvature information went stale; restart from steepest descent.
            history.clear();
            let scale = 1.0 / sqrt(dot(&g, &g)).max(1.0);
            for (d, gv) in direction.iter_mut().zip(&g) {
                *d = -gv * scale;
            }
            slope = dot(&g, &direction);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_backtracks {
            for ((xn, xv), d) in x_new.iter_mut().zip(&x).zip(&direction) {
                *xn = xv + step * d;
            }
            let f_trial = f(&x_new, &mut g_new);
            // Near the optimum the decrease drops below the rounding error of
            // `f`; accept a step that keeps `f` level to rounding and shrinks
            // the gradient.
            let level = f_trial <= fx + 1e-12 * (1.0 + fx.abs()) && inf_norm(&g_new) < inf_norm(&g);
            if f_trial.is_finite() && (f_trial <= fx + opts.armijo * step * slope || level) {
                accepted = Some(f_trial);
                break;
            }
            step *= 0.5;
        }
        let Some(f_trial) = accepted else {
            break;
        };
        iterations += 1;

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-16 * sqrt(dot(&s, &s) * dot(&y, &y)) && sy > 0.0 {
            if history.len() == opts.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        core::mem::swap(&mut x, &mut x_new);
        core::mem::swap(&mut g, &mut g_new);
        fx = f_trial;
        converged = inf_norm(&g) <= opts.grad_tol;
    }

    LbfgsReport {
        grad_inf_norm: inf_norm(&g),
        x,
        value: fx,
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64], g: &mut [f64]) -> f64 {
        let (a, b) = (x[0], x[1]);
        g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
        g[1] = 200.0 * (b - a * a);
        (1.0 - a) * (1.0 - a) + 100.0 * (b - a * a) * (b - a * a)
    }

    #[test]
    fn solves_rosenbrock() {
        let opts = LbfgsOptions {
            max_iter: 500,
            ..Default::default()
        };
        let r = minimize(rosenbrock, vec![-1.2, 1.0], &opts);
        assert!(r.converged, "{r:?}");
        assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn quadratic_converges_tightly() {
        let diag = [1.0, 10.0, 100.0, 0.5];
        let f = |x: &[f64], g: &mut [f64]| {
            let mut v = 0.0;
            for i in 0..4 {
                g[i] = diag[i] * (x[i] - i as f64);
                v += 0.5 * diag[i] * (x[i] - i as f64).powi(2);
            }
            v
        };
        let opts = LbfgsOptions {
            grad_tol: 1e-12,
            ..Default::default()
        };
        let r = minimize(f, vec![0.0; 4], &opts);
        assert!(r.converged);
        for i in 0..4 {
            assert!((r.x[i] - i as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn start_at_optimum_takes_no_steps() {
        let f = |x: &[f64], g: &mut [f64]| {
            g[0] = 2.0 * x[0];
            x[0] * x[0]
        };
        let r = minimize(f, vec![0.0], &LbfgsOptions::default());
        assert_eq!(r.iterations, 0);
        assert!(r.converged);
        assert_eq!(r.x, vec![0.0]);
    }
}
