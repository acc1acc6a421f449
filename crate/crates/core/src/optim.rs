//! Monotone accelerated projected gradient (a monotone FISTA variant) over a
//! stack of matrices, shared by the dictionary update and the nuclear-norm
//! baseline.
//!
//! Each iteration takes a projected gradient step from the extrapolated point
//! with backtracking. The step is accepted only if it does not increase the
//! objective; otherwise the iteration falls back to a plain projected gradient
//! step from the current iterate and momentum restarts. The objective sequence
//! is therefore nonincreasing.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matcore::Matrix;

/// Smallest step size tried before backtracking is declared failed.
pub const MIN_STEP: f64 = 1e-16;

pub trait ConstrainedProblem {
    fn value(&self, x: &[Matrix]) -> f64;
    fn gradient(&self, x: &[Matrix]) -> Vec<Matrix>;
    fn project(&self, x: &[Matrix]) -> Result<Vec<Matrix>>;
}

#[derive(Debug, Clone, Copy)]
pub struct MfistaOptions {
    pub max_iterations: usize,
    pub initial_step: f64,
    /// Early exit once `||y - P(y - step * grad)||_F` falls below this.
    pub stationarity_tol: f64,
}

#[derive(Debug, Clone)]
pub struct MfistaOutcome {
    pub point: Vec<Matrix>,
    pub value: f64,
    pub initial_value: f64,
    pub iterations: usize,
    /// `||x - P(x - step * grad f(x))||_F` at the returned point.
    pub stationarity: f64,
    pub step: f64,
    pub converged: bool,
    /// Objective after each iteration.
    pub values: Vec<f64>,
}

fn stack_norm_sq(a: &[Matrix]) -> f64 {
    a.iter().map(|m| m.norm_squared()).sum()
}

fn stack_dot(a: &[Matrix], b: &[Matrix]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y.iter()).map(|(u, v)| u * v).sum::<f64>())
        .sum()
}

fn stack_sub(a: &[Matrix], b: &[Matrix]) -> Vec<Matrix> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn stack_axpy(x: &[Matrix], scale: f64, d: &[Matrix]) -> Vec<Matrix> {
    x.iter().zip(d).map(|(a, b)| a + b * scale).collect()
}

struct Trial {
    point: Vec<Matrix>,
    value: f64,
    /// `||point - base||_F`.
    movement: f64,
}

/// Projected gradient step from `base` with halving backtracking until the
/// quadratic upper bound holds.
fn backtracked_step<P: ConstrainedProblem + ?Sized>(
    problem: &P,
    base: &[Matrix],
    base_value: f64,
    grad: &[Matrix],
    step: &mut f64,
) -> Result<Trial> {
    loop {
        let candidate = problem.project(&stack_axpy(base, -*step, grad))?;
        let diff = stack_sub(&candidate, base);
        let dist_sq = stack_norm_sq(&diff);
        let value = problem.value(&candidate);
        let bound = base_value + stack_dot(grad, &diff) + dist_sq / (2.0 * *step);
        let slack = 1e-12 * base_value.abs().max(1.0);
        if value <= bound + slack {
            return Ok(Trial {
                point: candidate,
                value,
                movement: dist_sq.sqrt(),
            });
        }
        *step *= 0.5;
        if *step < MIN_STEP {
            return Err(Error::Numerical(format!(
                "backtracking step size underflow (below {MIN_STEP:e})"
            )));
        }
    }
}

/// Minimizes from a feasible starting point.
pub fn minimize<P: ConstrainedProblem + ?Sized>(problem: &P, x0: Vec<Matrix>, opts: &MfistaOptions) -> Result<MfistaOutcome> {
    if !(opts.initial_step > 0.0 && opts.initial_step.is_finite()) {
        return Err(Error::Numerical(format!("invalid initial step {}", opts.initial_step)));
    }
    let mut x = x0;
    let mut fx = problem.value(&x);
    let initial_value = fx;
    let mut y = x.clone();
    let mut t: f64 = 1.0;
    let mut step = opts.initial_step;
    let mut values = Vec::with_capacity(opts.max_iterations);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        let fy = problem.value(&y);
        let gy = problem.gradient(&y);
        let trial = backtracked_step(problem, &y, fy, &gy, &mut step)?;
        let proxy = trial.movement;

        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let (x_next, f_next) = if trial.value <= fx {
            let z = trial.point;
            // y = x_next + (t/t_next)(z - x_next) + ((t-1)/t_next)(x_next - x)
            // with x_next = z.
            let momentum = (t - 1.0) / t_next;
            y = stack_axpy(&z, momentum, &stack_sub(&z, &x));
            t = t_next;
            (z, trial.value)
        } else {
            let gx = problem.gradient(&x);
            let fallback = backtracked_step(problem, &x, fx, &gx, &mut step)?;
            t = 1.0;
            if fallback.value <= fx {
                y = fallback.point.clone();
                (fallback.point, fallback.value)
            } else {
                // Rounding-level increase: keep the current iterate.
                y = x.clone();
                (x.clone(), fx)
            }
        };
        x = x_next;
        fx = f_next;
        values.push(fx);

        if proxy < opts.stationarity_tol {
            converged = true;
            break;
        }
    }

    let stationarity = {
        let g = problem.gradient(&x);
        let p = problem.project(&stack_axpy(&x, -step, &g))?;
        stack_norm_sq(&stack_sub(&x, &p)).sqrt()
    };
    if stationarity < opts.stationarity_tol {
        converged = true;
    }

    Ok(MfistaOutcome {
        point: x,
        value: fx,
        initial_value,
        iterations,
        stationarity,
        step,
        converged,
        values,
    })
}

/// Maps `f` over `0..len`, optionally on a dedicated thread pool. Output order
/// is always index order, so results do not depend on the schedule.
pub(crate) fn map_indexed<T, F>(len: usize, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if threads <= 1 || len <= 1 {
        return (0..len).map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(|| (0..len).into_par_iter().map(&f).collect()),
        Err(_) => (0..len).map(f).collect(),
    }
}
