//! Dictionary learning and the full CSC alternation.
//!
//! The objective is
//!
//! ```text
//! f(alpha, D) = (1/G) sum_g [ (1/n) ||Y_g - (sum_k alpha_gk D_k) X_g||_F^2 + lambda ||alpha_g||_1 ]
//! ```
//!
//! minimized over `alpha` and over dictionaries whose entries lie in
//! `C(tau) = {D : ||D||_* <= tau, ||D||_2 <= 1}`. The fit alternates the lasso
//! encoding step with a monotone accelerated projected-gradient update of all
//! entries jointly, so the objective never increases between alternations.

use log::{debug, info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{GroupStats, GroupedDataset};
use crate::encoder::{encode_with_stats, EncoderOptions, GroupCoefficients};
use crate::error::{Error, Result};
use crate::matcore::{
    nuclear_norm, project_to_dictionary_set, psd_spectral_norm, rank_of_spectrum, singular_values, spectral_norm,
    Matrix,
};
use crate::optim::{map_indexed, minimize, ConstrainedProblem, MfistaOptions};

/// Slack allowed when checking dictionary entries against `C(tau)`.
pub const FEASIBILITY_SLACK: f64 = 1e-6;

/// Shared dictionary `{D_1, ..., D_K}`, each entry `q x p`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    entries: Vec<Matrix>,
    tau: f64,
}

impl Dictionary {
    /// Checks shapes and that every entry lies in `C(tau)` up to
    /// [`FEASIBILITY_SLACK`].
    pub fn new(entries: Vec<Matrix>, tau: f64) -> Result<Self> {
        let dict = Self::new_unchecked(entries, tau);
        dict.validate()?;
        Ok(dict)
    }

    /// Builds a dictionary without checking the norm constraints. Useful for
    /// encoding against arbitrary fixed regressors.
    pub fn new_unchecked(entries: Vec<Matrix>, tau: f64) -> Self {
        Self { entries, tau }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Config(format!("tau must be positive, got {}", self.tau)));
        }
        let first = self
            .entries
            .first()
            .ok_or_else(|| Error::Config("dictionary needs at least one entry".into()))?;
        let shape = first.shape();
        for (k, d) in self.entries.iter().enumerate() {
            if d.shape() != shape {
                return Err(Error::Dimension(format!(
                    "dictionary entry {k} is {}x{}, expected {}x{}",
                    d.nrows(),
                    d.ncols(),
                    shape.0,
                    shape.1
                )));
            }
            let s = singular_values(d)?;
            let nuclear: f64 = s.iter().sum();
            let spectral = s.first().copied().unwrap_or(0.0);
            if nuclear > self.tau + FEASIBILITY_SLACK || spectral > 1.0 + FEASIBILITY_SLACK {
                return Err(Error::Validation(format!(
                    "dictionary entry {k} outside the constraint set: nuclear {nuclear:.6e}, spectral {spectral:.6e}, tau {}",
                    self.tau
                )));
            }
        }
        Ok(())
    }

    pub fn entries(&self) -> &[Matrix] {
        &self.entries
    }

    pub fn entry(&self, k: usize) -> &Matrix {
        &self.entries[k]
    }

    pub fn k(&self) -> usize {
        self.entries.len()
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `(q, p)`.
    pub fn shape(&self) -> (usize, usize) {
        self.entries.first().map(|d| d.shape()).unwrap_or((0, 0))
    }

    pub fn check_shape(&self, p: usize, q: usize) -> Result<()> {
        for (k, d) in self.entries.iter().enumerate() {
            if d.shape() != (q, p) {
                return Err(Error::Dimension(format!(
                    "dictionary entry {k} is {}x{}, data needs {q}x{p}",
                    d.nrows(),
                    d.ncols()
                )));
            }
        }
        Ok(())
    }

    /// Numerical rank of every entry.
    pub fn ranks(&self) -> Result<Vec<usize>> {
        self.entries
            .iter()
            .map(|d| Ok(rank_of_spectrum(&singular_values(d)?)))
            .collect()
    }
}

/// How per-group gradient contributions are summed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReductionMode {
    /// Fixed group order; bitwise reproducible for any thread count.
    #[default]
    Ordered,
    /// Tree reduction on the thread pool; reproducible only up to rounding.
    Parallel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CscConfig {
    pub k: usize,
    pub lambda: f64,
    pub tau: f64,
    pub max_alternations: usize,
    pub objective_rtol: f64,
    pub encoder: EncoderOptions,
    pub max_inner_iterations: usize,
    /// Start each encoding step from the previous alternation's coefficients.
    pub warm_start: bool,
    pub rng_seed: u64,
    #[serde(default = "one")]
    pub threads: usize,
    #[serde(default)]
    pub reduction: ReductionMode,
}

fn one() -> usize {
    1
}

impl Default for CscConfig {
    fn default() -> Self {
        Self {
            k: 20,
            lambda: 0.05,
            tau: 1.0,
            max_alternations: 200,
            objective_rtol: 1e-6,
            encoder: EncoderOptions::default(),
            max_inner_iterations: 50,
            warm_start: true,
            rng_seed: 0,
            threads: 1,
            reduction: ReductionMode::Ordered,
        }
    }
}

impl CscConfig {
    /// Returns configuration warnings; hard errors for unusable values.
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        if self.k == 0 {
            return Err(Error::Config("K must be at least 1".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must be nonnegative, got {}", self.lambda)));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Config(format!("tau must be positive, got {}", self.tau)));
        }
        if self.tau > 1.0 {
            warnings.push(format!("tau = {} lies outside the recommended range (0, 1]", self.tau));
        }
        if self.max_alternations == 0 || self.max_inner_iterations == 0 || self.encoder.max_sweeps == 0 {
            return Err(Error::Config("iteration budgets must be positive".into()));
        }
        if !(self.objective_rtol > 0.0) || !(self.encoder.tol > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        Ok(warnings)
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self {
            lambda,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CscModel {
    pub dictionary: Dictionary,
    pub coefficients: GroupCoefficients,
    pub config: CscConfig,
}

impl CscModel {
    pub fn new(dictionary: Dictionary, coefficients: GroupCoefficients, config: CscConfig) -> Result<Self> {
        if dictionary.k() != coefficients.k() {
            return Err(Error::Dimension(format!(
                "dictionary has {} entries but coefficients have length {}",
                dictionary.k(),
                coefficients.k()
            )));
        }
        Ok(Self {
            dictionary,
            coefficients,
            config,
        })
    }

    pub fn estimate(&self, g: usize) -> Matrix {
        compose_b(&self.dictionary, self.coefficients.alpha(g))
    }

    /// `B_hat` for every group.
    pub fn estimates(&self) -> Vec<Matrix> {
        (0..self.coefficients.num_groups()).map(|g| self.estimate(g)).collect()
    }
}

/// Per-alternation record of a CSC fit.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub objective_per_alternation: Vec<f64>,
    /// `[alternation][group]`, measured right after the encoding step.
    pub l0_per_group_per_alternation: Vec<Vec<usize>>,
    pub l1_per_group_per_alternation: Vec<Vec<f64>>,
    /// `[alternation][entry]`, after the dictionary step.
    pub rank_per_entry_per_alternation: Vec<Vec<usize>>,
    /// Stationarity proxy of each dictionary step.
    pub dictionary_stationarity: Vec<f64>,
    pub encoder_warnings: usize,
    pub converged: bool,
    /// Mean coefficient support grew between the first and last alternation.
    pub sparsity_warning: bool,
}

impl FitDiagnostics {
    pub fn alternations(&self) -> usize {
        self.objective_per_alternation.len()
    }

    pub fn mean_l0(&self, alternation: usize) -> f64 {
        let row = &self.l0_per_group_per_alternation[alternation];
        row.iter().sum::<usize>() as f64 / row.len().max(1) as f64
    }

    pub fn mean_l1(&self, alternation: usize) -> f64 {
        let row = &self.l1_per_group_per_alternation[alternation];
        row.iter().sum::<f64>() / row.len().max(1) as f64
    }

    pub fn mean_rank(&self, alternation: usize) -> f64 {
        let row = &self.rank_per_entry_per_alternation[alternation];
        row.iter().sum::<usize>() as f64 / row.len().max(1) as f64
    }

    pub(crate) fn update_sparsity_warning(&mut self) {
        let t = self.l0_per_group_per_alternation.len();
        self.sparsity_warning = t > 1 && self.mean_l0(t - 1) > self.mean_l0(0);
    }
}

/// `sum_k alpha_k D_k`.
pub fn compose_b(dictionary: &Dictionary, alpha: &[f64]) -> Matrix {
    compose_entries(dictionary.entries(), alpha)
}

fn compose_entries(entries: &[Matrix], alpha: &[f64]) -> Matrix {
    assert_eq!(entries.len(), alpha.len(), "coefficient length must match dictionary size");
    let (q, p) = entries[0].shape();
    let mut b = Matrix::zeros(q, p);
    for (d, &a) in entries.iter().zip(alpha) {
        if a != 0.0 {
            b.zip_apply(d, |x, y| *x += a * y);
        }
    }
    b
}

fn check_consistent(dictionary: &Dictionary, coefficients: &GroupCoefficients, dataset: &GroupedDataset) -> Result<()> {
    dictionary.check_shape(dataset.p(), dataset.q())?;
    if coefficients.k() != dictionary.k() || coefficients.num_groups() != dataset.num_groups() {
        return Err(Error::Dimension(format!(
            "coefficients are {}x{}, expected {} groups x {} entries",
            coefficients.num_groups(),
            coefficients.k(),
            dataset.num_groups(),
            dictionary.k()
        )));
    }
    Ok(())
}

/// The full objective, evaluated from the raw residuals.
pub fn objective(
    dictionary: &Dictionary,
    coefficients: &GroupCoefficients,
    dataset: &GroupedDataset,
    lambda: f64,
) -> Result<f64> {
    check_consistent(dictionary, coefficients, dataset)?;
    let n = dataset.n() as f64;
    let total: f64 = dataset
        .groups()
        .iter()
        .enumerate()
        .map(|(g, group)| {
            let b = compose_b(dictionary, coefficients.alpha(g));
            (&group.y - b * &group.x).norm_squared() / n + lambda * coefficients.l1(g)
        })
        .sum();
    Ok(total / dataset.num_groups() as f64)
}

/// Gradient of the smooth term with respect to every entry:
/// `-(2/(G n)) sum_g alpha_gk (Y_g - B_g X_g) X_g^T`.
pub fn dictionary_gradient(
    dictionary: &Dictionary,
    coefficients: &GroupCoefficients,
    dataset: &GroupedDataset,
) -> Result<Vec<Matrix>> {
    check_consistent(dictionary, coefficients, dataset)?;
    let (q, p) = dictionary.shape();
    let scale = -2.0 / (dataset.num_groups() as f64 * dataset.n() as f64);
    let mut grads = vec![Matrix::zeros(q, p); dictionary.k()];
    for (g, group) in dataset.groups().iter().enumerate() {
        let alpha = coefficients.alpha(g);
        if alpha.iter().all(|&a| a == 0.0) {
            continue;
        }
        let b = compose_b(dictionary, alpha);
        let cross = (&group.y - b * &group.x) * group.x.transpose();
        for (grad, &a) in grads.iter_mut().zip(alpha) {
            if a != 0.0 {
                grad.zip_apply(&cross, |x, y| *x += scale * a * y);
            }
        }
    }
    Ok(grads)
}

/// The smooth term as a function of the dictionary, with coefficients fixed.
struct DictionaryTerm<'a> {
    stats: &'a [GroupStats],
    coefficients: &'a GroupCoefficients,
    /// `G x K` coefficient matrix.
    alphas: Matrix,
    tau: f64,
    /// Entries unused by every group: zero gradient, held fixed.
    frozen: Vec<bool>,
    threads: usize,
    reduction: ReductionMode,
}

/// `vec(D_k)` as column `k`.
fn entry_columns(entries: &[Matrix]) -> Matrix {
    let (q, p) = entries[0].shape();
    let mut cols = Matrix::zeros(q * p, entries.len());
    for (k, d) in entries.iter().enumerate() {
        cols.column_mut(k).copy_from_slice(d.as_slice());
    }
    cols
}

impl DictionaryTerm<'_> {
    /// `B_g` for every group.
    fn composed(&self, entries: &[Matrix]) -> Vec<Matrix> {
        let (q, p) = entries[0].shape();
        let cols = entry_columns(entries) * self.alphas.transpose();
        (0..self.stats.len())
            .map(|g| Matrix::from_column_slice(q, p, cols.column(g).as_slice()))
            .collect()
    }

    fn group_gradient(&self, entries: &[Matrix], g: usize, scale: f64) -> Vec<(usize, Matrix)> {
        let alpha = self.coefficients.alpha(g);
        if alpha.iter().all(|&a| a == 0.0) {
            return Vec::new();
        }
        let cross = self.stats[g].residual_cross(&compose_entries(entries, alpha));
        alpha
            .iter()
            .enumerate()
            .filter(|(_, &a)| a != 0.0)
            .map(|(k, &a)| (k, &cross * (scale * a)))
            .collect()
    }
}

impl ConstrainedProblem for DictionaryTerm<'_> {
    fn value(&self, entries: &[Matrix]) -> f64 {
        let g_count = self.stats.len();
        let bs = self.composed(entries);
        let parts = map_indexed(g_count, self.threads, |g| self.stats[g].squared_residual(&bs[g]));
        parts.iter().sum::<f64>() / g_count as f64
    }

    fn gradient(&self, entries: &[Matrix]) -> Vec<Matrix> {
        let g_count = self.stats.len();
        let scale = -2.0 / g_count as f64;
        let (q, p) = entries[0].shape();
        match self.reduction {
            ReductionMode::Ordered => {
                // grad_k = scale * sum_g alpha_gk (Syx_g - B_g Sxx_g), as one
                // product over the stacked residual crosses.
                let bs = self.composed(entries);
                let crosses = map_indexed(g_count, self.threads, |g| self.stats[g].residual_cross(&bs[g]));
                let mut cols = Matrix::zeros(q * p, g_count);
                for (g, c) in crosses.iter().enumerate() {
                    cols.column_mut(g).copy_from_slice(c.as_slice());
                }
                let grads = cols * &self.alphas * scale;
                (0..entries.len())
                    .map(|k| Matrix::from_column_slice(q, p, grads.column(k).as_slice()))
                    .collect()
            }
            ReductionMode::Parallel => {
                let zero = || vec![Matrix::zeros(q, p); entries.len()];
                let accumulate = |mut acc: Vec<Matrix>, parts: Vec<(usize, Matrix)>| {
                    for (k, m) in parts {
                        acc[k] += m;
                    }
                    acc
                };
                let run = || {
                    (0..g_count)
                        .into_par_iter()
                        .map(|g| self.group_gradient(entries, g, scale))
                        .fold(zero, accumulate)
                        .reduce(zero, |mut a, b| {
                            for (x, y) in a.iter_mut().zip(b) {
                                *x += y;
                            }
                            a
                        })
                };
                match rayon::ThreadPoolBuilder::new().num_threads(self.threads.max(1)).build() {
                    Ok(pool) => pool.install(run),
                    Err(_) => run(),
                }
            }
        }
    }

    fn project(&self, entries: &[Matrix]) -> Result<Vec<Matrix>> {
        entries
            .iter()
            .zip(&self.frozen)
            .map(|(d, &frozen)| {
                if frozen {
                    Ok(d.clone())
                } else {
                    project_to_dictionary_set(d, self.tau)
                }
            })
            .collect()
    }
}

/// Outcome of one dictionary update.
#[derive(Debug, Clone)]
pub struct DictStep {
    pub dictionary: Dictionary,
    pub smooth_before: f64,
    pub smooth_after: f64,
    /// `||D - P(D - eta grad)||_F` at the returned dictionary.
    pub stationarity: f64,
    pub iterations: usize,
}

/// Power-iteration settings for the step-size estimate.
const POWER_ITERATIONS: usize = 20;
const POWER_TOL: f64 = 1e-6;
/// Early exit of the inner loop.
const STATIONARITY_TOL: f64 = 1e-8;

/// Updates all entries with the coefficients fixed (the learning step).
pub fn dictionary_step(
    dictionary: &Dictionary,
    coefficients: &GroupCoefficients,
    dataset: &GroupedDataset,
    max_inner_iterations: usize,
) -> Result<DictStep> {
    check_consistent(dictionary, coefficients, dataset)?;
    let stats = dataset.stats();
    let norms = sxx_norms(&stats);
    step_with_stats(dictionary, coefficients, &stats, &norms, max_inner_iterations, 1, ReductionMode::Ordered)
}

fn sxx_norms(stats: &[GroupStats]) -> Vec<f64> {
    stats
        .iter()
        .map(|s| psd_spectral_norm(&s.sxx, POWER_ITERATIONS, POWER_TOL))
        .collect()
}

fn step_with_stats(
    dictionary: &Dictionary,
    coefficients: &GroupCoefficients,
    stats: &[GroupStats],
    sxx_norms: &[f64],
    max_inner_iterations: usize,
    threads: usize,
    reduction: ReductionMode,
) -> Result<DictStep> {
    let g_count = stats.len() as f64;
    // L = (2/G) max_k sum_g alpha_gk^2 ||Sxx_g||_2; backtracking corrects it
    // when it underestimates.
    let lipschitz = (0..dictionary.k())
        .map(|k| {
            (0..stats.len())
                .map(|g| coefficients.alpha(g)[k].powi(2) * sxx_norms[g])
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
        * 2.0
        / g_count;

    let active = coefficients.active_entries();
    let term = DictionaryTerm {
        stats,
        coefficients,
        alphas: coefficients.to_matrix(),
        tau: dictionary.tau(),
        frozen: active.iter().map(|a| !a).collect(),
        threads,
        reduction,
    };

    let before = term.value(dictionary.entries());
    if lipschitz <= 0.0 || !lipschitz.is_finite() {
        // No entry is used: the smooth term does not depend on the dictionary.
        return Ok(DictStep {
            dictionary: dictionary.clone(),
            smooth_before: before,
            smooth_after: before,
            stationarity: 0.0,
            iterations: 0,
        });
    }

    let outcome = minimize(
        &term,
        dictionary.entries().to_vec(),
        &MfistaOptions {
            max_iterations: max_inner_iterations,
            initial_step: 1.0 / lipschitz,
            stationarity_tol: STATIONARITY_TOL,
        },
    )?;
    Ok(DictStep {
        dictionary: Dictionary::new_unchecked(outcome.point, dictionary.tau()),
        smooth_before: before,
        smooth_after: outcome.value,
        stationarity: outcome.stationarity,
        iterations: outcome.iterations,
    })
}

/// Random rank-one initialization `D_k = min(tau, 1) u v^T` with `u`, `v`
/// uniform unit vectors.
pub fn init_dictionary(k: usize, p: usize, q: usize, tau: f64, rng_seed: u64) -> Result<Dictionary> {
    if k == 0 || p == 0 || q == 0 {
        return Err(Error::Config(format!("cannot build a {k}-entry {q}x{p} dictionary")));
    }
    if !(tau > 0.0) {
        return Err(Error::Config(format!("tau must be positive, got {tau}")));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(rng_seed);
    let scale = tau.min(1.0);
    let entries = (0..k)
        .map(|_| {
            let u = unit_vector(q, &mut rng);
            let v = unit_vector(p, &mut rng);
            u * v.transpose() * scale
        })
        .collect();
    Ok(Dictionary::new_unchecked(entries, tau))
}

pub(crate) fn unit_vector(len: usize, rng: &mut ChaCha20Rng) -> nalgebra::DVector<f64> {
    loop {
        let v = nalgebra::DVector::<f64>::from_fn(len, |_, _| StandardNormal.sample(rng));
        let norm = v.norm();
        if norm > 0.0 {
            return v / norm;
        }
    }
}

/// Per-group lasso objective evaluated from second moments.
fn group_objective(stats: &GroupStats, entries: &[Matrix], alpha: &[f64], lambda: f64) -> f64 {
    let b = compose_entries(entries, alpha);
    stats.squared_residual(&b) + lambda * alpha.iter().map(|a| a.abs()).sum::<f64>()
}

/// Fits dictionary and coefficients by alternating minimization.
pub fn csc_fit(dataset: &GroupedDataset, config: &CscConfig) -> Result<(CscModel, FitDiagnostics)> {
    for w in config.validate()? {
        warn!("{w}");
    }
    let stats = dataset.stats();
    let norms = sxx_norms(&stats);
    let g_count = dataset.num_groups();
    let lambda = config.lambda;

    let mut dictionary = init_dictionary(config.k, dataset.p(), dataset.q(), config.tau, config.rng_seed)?;
    let mut coefficients = GroupCoefficients::zeros(g_count, config.k);
    let mut diag = FitDiagnostics::default();
    let mut previous: Option<f64> = None;

    for t in 0..config.max_alternations {
        let warm = (t > 0 && config.warm_start).then_some(&coefficients);
        let encoded = encode_with_stats(
            dictionary.entries(),
            &stats,
            lambda,
            &config.encoder,
            warm,
            config.threads,
        )?;
        diag.encoder_warnings += encoded.warnings.len();

        let mut fresh = encoded.coefficients;
        if t > 0 {
            // Keep the previous code for any group where the new one is not
            // better (possible only at the encoder tolerance).
            let mut rows: Vec<Vec<f64>> = fresh.as_rows().to_vec();
            for (g, row) in rows.iter_mut().enumerate() {
                let old = coefficients.alpha(g);
                let entries = dictionary.entries();
                if group_objective(&stats[g], entries, row, lambda) > group_objective(&stats[g], entries, old, lambda) {
                    row.copy_from_slice(old);
                }
            }
            fresh = GroupCoefficients::new(rows)?;
        }
        coefficients = fresh;

        diag.l0_per_group_per_alternation
            .push((0..g_count).map(|g| coefficients.l0(g)).collect());
        diag.l1_per_group_per_alternation
            .push((0..g_count).map(|g| coefficients.l1(g)).collect());

        let step = step_with_stats(
            &dictionary,
            &coefficients,
            &stats,
            &norms,
            config.max_inner_iterations,
            config.threads,
            config.reduction,
        )?;
        dictionary = step.dictionary;
        diag.dictionary_stationarity.push(step.stationarity);
        diag.rank_per_entry_per_alternation.push(dictionary.ranks()?);

        let penalty: f64 = (0..g_count).map(|g| coefficients.l1(g)).sum::<f64>() / g_count as f64;
        let value = step.smooth_after + lambda * penalty;
        diag.objective_per_alternation.push(value);
        debug!(
            "alternation {t}: objective {value:.10e}, mean l0 {:.2}, inner iterations {}",
            coefficients.mean_l0(),
            step.iterations
        );

        if let Some(prev) = previous {
            if (prev - value).abs() <= config.objective_rtol * prev.abs() {
                diag.converged = true;
                break;
            }
        }
        previous = Some(value);
    }
    diag.update_sparsity_warning();
    info!(
        "CSC fit: {} alternations, objective {:.6e}, converged {}",
        diag.alternations(),
        diag.objective_per_alternation.last().copied().unwrap_or(f64::NAN),
        diag.converged
    );
    if diag.sparsity_warning {
        warn!("coefficient sparsity did not decrease across alternations; statistical accuracy may be poor");
    }

    let model = CscModel::new(dictionary, coefficients, config.clone())?;
    Ok((model, diag))
}

/// Learns the dictionary on a subset of groups, then encodes every group
/// against it.
pub fn csc_fit_on_subset(
    dataset: &GroupedDataset,
    config: &CscConfig,
    subset: &[usize],
) -> Result<(CscModel, FitDiagnostics)> {
    let learn = dataset.subset_groups(subset)?;
    let (model, diag) = csc_fit(&learn, config)?;
    let encoded = crate::encoder::encode_all(
        &model.dictionary,
        dataset,
        config.lambda,
        &config.encoder,
        None,
        config.threads,
    )?;
    let model = CscModel::new(model.dictionary, encoded.coefficients, config.clone())?;
    Ok((model, diag))
}

/// Nuclear and spectral norms of every entry.
pub fn entry_norms(dictionary: &Dictionary) -> Result<Vec<(f64, f64)>> {
    dictionary
        .entries()
        .iter()
        .map(|d| Ok((nuclear_norm(d)?, spectral_norm(d)?)))
        .collect()
}
