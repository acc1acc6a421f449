//! Separate per-group regressions constrained to a nuclear-norm ball:
//!
//! ```text
//! B_hat = argmin_{||B||_* <= L} (1/n) ||Y - B X||_F^2
//! ```
//!
//! solved with the same monotone accelerated projected gradient as the
//! dictionary update, starting from `B = 0`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Group, GroupStats, GroupedDataset};
use crate::error::{Error, Result};
use crate::matcore::{nuclear_norm, project_nuclear_ball, psd_spectral_norm, thin_svd, Matrix};
use crate::optim::{map_indexed, minimize, ConstrainedProblem, MfistaOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RrrConfig {
    /// Nuclear-norm radius `L`.
    pub radius: f64,
    pub max_iterations: usize,
    /// Exit once the first-order proxy drops below this.
    pub rtol: f64,
    /// Unused by the deterministic solver.
    pub rng_seed: u64,
}

impl Default for RrrConfig {
    fn default() -> Self {
        Self {
            radius: 1.0,
            max_iterations: 2000,
            rtol: 1e-8,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RrrFit {
    pub estimate: Matrix,
    pub radius: f64,
    pub iterations: usize,
    /// `||B - P(B - eta grad)||_F` at exit.
    pub stationarity: f64,
    pub converged: bool,
    /// Objective after each iteration.
    pub objective_trace: Vec<f64>,
}

struct NuclearRegression<'a> {
    stats: &'a GroupStats,
    radius: f64,
}

impl ConstrainedProblem for NuclearRegression<'_> {
    fn value(&self, x: &[Matrix]) -> f64 {
        self.stats.squared_residual(&x[0])
    }

    fn gradient(&self, x: &[Matrix]) -> Vec<Matrix> {
        vec![self.stats.residual_cross(&x[0]) * -2.0]
    }

    fn project(&self, x: &[Matrix]) -> Result<Vec<Matrix>> {
        Ok(vec![project_nuclear_ball(&x[0], self.radius)?])
    }
}

pub fn rrr_fit(x: &Matrix, y: &Matrix, config: &RrrConfig) -> Result<RrrFit> {
    if x.ncols() != y.ncols() || x.ncols() == 0 {
        return Err(Error::Dimension(format!(
            "X is {}x{} and Y is {}x{}",
            x.nrows(),
            x.ncols(),
            y.nrows(),
            y.ncols()
        )));
    }
    if !(config.radius > 0.0 && config.radius.is_finite()) {
        return Err(Error::Config(format!("radius must be positive, got {}", config.radius)));
    }
    let stats = GroupStats::new(&Group {
        x: x.clone(),
        y: y.clone(),
    });
    fit_with_stats(&stats, config)
}

fn fit_with_stats(stats: &GroupStats, config: &RrrConfig) -> Result<RrrFit> {
    let (q, p) = stats.syx.shape();
    let zero = Matrix::zeros(q, p);
    let lipschitz = 2.0 * psd_spectral_norm(&stats.sxx, 50, 1e-8);
    if lipschitz <= 0.0 {
        // X = 0: every B fits equally well; the minimum-norm choice is zero.
        return Ok(RrrFit {
            estimate: zero,
            radius: config.radius,
            iterations: 0,
            stationarity: 0.0,
            converged: true,
            objective_trace: vec![stats.yy],
        });
    }
    let problem = NuclearRegression {
        stats,
        radius: config.radius,
    };
    let outcome = minimize(
        &problem,
        vec![zero],
        &MfistaOptions {
            max_iterations: config.max_iterations,
            initial_step: 1.0 / lipschitz,
            stationarity_tol: config.rtol,
        },
    )?;
    let mut trace = Vec::with_capacity(outcome.values.len() + 1);
    trace.push(outcome.initial_value);
    trace.extend(&outcome.values);
    Ok(RrrFit {
        estimate: outcome.point.into_iter().next().expect("one block"),
        radius: config.radius,
        iterations: outcome.iterations,
        stationarity: outcome.stationarity,
        converged: outcome.converged,
        objective_trace: trace,
    })
}

/// Fits every group independently with the same radius.
pub fn rrr_fit_all(dataset: &GroupedDataset, config: &RrrConfig, threads: usize) -> Result<Vec<RrrFit>> {
    let stats = dataset.stats();
    map_indexed(stats.len(), threads, |g| {
        fit_with_stats(&stats[g], config).map_err(|e| match e {
            Error::Numerical(msg) => Error::Numerical(format!("group {g}: {msg}")),
            other => other,
        })
    })
    .into_iter()
    .collect()
}

/// How the radius `L` is picked for each group.
#[derive(Debug, Clone, PartialEq)]
pub enum RadiusRule {
    Fixed(f64),
    /// `||B_ols||_*` of the group's least-squares fit; requires `n >= p` and
    /// a full-rank design.
    OlsNuclear,
    /// Cross-validated over `multipliers * ||Y X^+||_*`.
    CrossValidated { multipliers: Vec<f64>, n_folds: usize },
    /// `OlsNuclear` when the group's design has full row rank, otherwise
    /// `CrossValidated` with the default grid.
    Auto,
}

pub const DEFAULT_RADIUS_MULTIPLIERS: [f64; 7] = [0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0];
pub const DEFAULT_RADIUS_FOLDS: usize = 5;

/// `Y X^+` via the pseudo-inverse of `X` (minimum-norm least squares).
pub fn least_squares(x: &Matrix, y: &Matrix) -> Result<Matrix> {
    let svd = thin_svd(x)?;
    let top = svd.singular_values.first().copied().unwrap_or(0.0);
    let cut = top * f64::EPSILON * x.nrows().max(x.ncols()) as f64;
    let inv: Vec<f64> = svd
        .singular_values
        .iter()
        .map(|&s| if s > cut { 1.0 / s } else { 0.0 })
        .collect();
    // X^+ = V diag(1/s) U^T
    let mut v_scaled = svd.right_vectors.clone();
    for (j, &w) in inv.iter().enumerate() {
        v_scaled.column_mut(j).scale_mut(w);
    }
    let pinv = v_scaled * svd.left_vectors.transpose();
    Ok(y * pinv)
}

fn design_has_full_row_rank(x: &Matrix) -> Result<bool> {
    if x.ncols() < x.nrows() {
        return Ok(false);
    }
    let s = crate::matcore::singular_values(x)?;
    let top = s.first().copied().unwrap_or(0.0);
    Ok(top > 0.0 && s.iter().all(|&v| v > top * 1e-10))
}

/// Resolves a radius for one group.
pub fn choose_radius(group: &Group, rule: &RadiusRule, base: &RrrConfig, rng_seed: u64) -> Result<f64> {
    match rule {
        RadiusRule::Fixed(l) => Ok(*l),
        RadiusRule::OlsNuclear => {
            if !design_has_full_row_rank(&group.x)? {
                return Err(Error::Config("OLS radius needs n >= p and a full-rank design".into()));
            }
            Ok(nuclear_norm(&least_squares(&group.x, &group.y)?)?.max(f64::MIN_POSITIVE))
        }
        RadiusRule::CrossValidated { multipliers, n_folds } => {
            cv_radius(group, multipliers, *n_folds, base, rng_seed)
        }
        RadiusRule::Auto => {
            if design_has_full_row_rank(&group.x)? {
                choose_radius(group, &RadiusRule::OlsNuclear, base, rng_seed)
            } else {
                cv_radius(group, &DEFAULT_RADIUS_MULTIPLIERS, DEFAULT_RADIUS_FOLDS, base, rng_seed)
            }
        }
    }
}

fn cv_radius(group: &Group, multipliers: &[f64], n_folds: usize, base: &RrrConfig, rng_seed: u64) -> Result<f64> {
    let n = group.x.ncols();
    if multipliers.is_empty() {
        return Err(Error::Config("radius grid is empty".into()));
    }
    if n_folds < 2 || n_folds > n {
        return Err(Error::Config(format!("cannot split {n} samples into {n_folds} folds")));
    }
    let anchor = nuclear_norm(&least_squares(&group.x, &group.y)?)?;
    let anchor = if anchor > 0.0 { anchor } else { 1.0 };

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha20Rng::seed_from_u64(rng_seed));
    let folds: Vec<Vec<usize>> = (0..n_folds)
        .map(|f| order.iter().copied().skip(f).step_by(n_folds).collect())
        .collect();

    let mut best: Option<(f64, f64)> = None;
    for &m in multipliers {
        let radius = anchor * m;
        let config = RrrConfig {
            radius,
            ..base.clone()
        };
        let mut err = 0.0;
        for held in &folds {
            let train: Vec<usize> = (0..n).filter(|c| !held.contains(c)).collect();
            let fit = rrr_fit(&group.x.select_columns(&train), &group.y.select_columns(&train), &config)?;
            let xt = group.x.select_columns(held);
            let yt = group.y.select_columns(held);
            err += (&yt - &fit.estimate * &xt).norm_squared() / held.len() as f64;
        }
        err /= n_folds as f64;
        // Ties go to the smaller radius.
        if best.is_none_or(|(_, e)| err < e) {
            best = Some((radius, err));
        }
    }
    Ok(best.expect("nonempty grid").0)
}

/// Per-group fits with a per-group radius chosen by `rule`.
pub fn rrr_fit_all_with_rule(
    dataset: &GroupedDataset,
    rule: &RadiusRule,
    base: &RrrConfig,
    threads: usize,
) -> Result<Vec<RrrFit>> {
    map_indexed(dataset.num_groups(), threads, |g| {
        let group = dataset.group(g);
        let seed = base.rng_seed.wrapping_add(g as u64);
        let radius = choose_radius(group, rule, base, seed)?;
        rrr_fit(
            &group.x,
            &group.y,
            &RrrConfig {
                radius,
                ..base.clone()
            },
        )
    })
    .into_iter()
    .collect()
}
