//! The encoding step: with the dictionary fixed, each group solves
//!
//! ```text
//! min_alpha (1/n) || Y - sum_k alpha_k (D_k X) ||_F^2 + lambda ||alpha||_1
//! ```
//!
//! a lasso over `K` matrix-valued features `Z_k = D_k X`. The solver is cyclic
//! coordinate descent with soft thresholding, run on the Gram form of the
//! problem (`Q_kl = (1/n) <Z_k, Z_l>`, `c_k = (1/n) <Z_k, Y>`), so a sweep
//! costs `O(K^2)` regardless of `n`, `p` and `q`.

use log::warn;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dataset::{GroupStats, GroupedDataset};
use crate::dictlearn::Dictionary;
use crate::error::{Error, Result};
use crate::matcore::{frobenius_dot, soft_threshold, Matrix};
use crate::optim::map_indexed;

/// Per-group coefficient vectors `alpha^(g)`, all of length `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupCoefficients {
    alphas: Vec<Vec<f64>>,
}

impl GroupCoefficients {
    pub fn new(alphas: Vec<Vec<f64>>) -> Result<Self> {
        let k = alphas.first().map(Vec::len).unwrap_or(0);
        if k == 0 {
            return Err(Error::Dimension("coefficients need at least one group and one entry".into()));
        }
        for (g, a) in alphas.iter().enumerate() {
            if a.len() != k {
                return Err(Error::Dimension(format!("group {g}: {} coefficients, expected {k}", a.len())));
            }
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::Validation(format!("group {g}: non-finite coefficient")));
            }
        }
        Ok(Self { alphas })
    }

    pub fn zeros(groups: usize, k: usize) -> Self {
        Self {
            alphas: vec![vec![0.0; k]; groups],
        }
    }

    pub fn k(&self) -> usize {
        self.alphas[0].len()
    }

    pub fn num_groups(&self) -> usize {
        self.alphas.len()
    }

    pub fn alpha(&self, g: usize) -> &[f64] {
        &self.alphas[g]
    }

    pub fn as_rows(&self) -> &[Vec<f64>] {
        &self.alphas
    }

    pub fn l0(&self, g: usize) -> usize {
        self.alphas[g].iter().filter(|&&a| a != 0.0).count()
    }

    pub fn l1(&self, g: usize) -> f64 {
        self.alphas[g].iter().map(|a| a.abs()).sum()
    }

    pub fn mean_l0(&self) -> f64 {
        (0..self.num_groups()).map(|g| self.l0(g) as f64).sum::<f64>() / self.num_groups() as f64
    }

    /// Entries used by at least one group.
    pub fn active_entries(&self) -> Vec<bool> {
        let mut active = vec![false; self.k()];
        for a in &self.alphas {
            for (flag, &v) in active.iter_mut().zip(a) {
                *flag |= v != 0.0;
            }
        }
        active
    }

    /// `G x K` matrix, one group per row.
    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_fn(self.num_groups(), self.k(), |g, k| self.alphas[g][k])
    }

    pub fn from_matrix(m: &Matrix) -> Result<Self> {
        Self::new(
            (0..m.nrows())
                .map(|g| m.row(g).iter().copied().collect())
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncoderOptions {
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for EncoderOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_sweeps: 1000,
        }
    }
}

/// The transformed regressors of one group.
#[derive(Debug, Clone)]
pub struct FeatureBundle {
    pub group_id: usize,
    /// `Z_k = D_k X`, each `q x n`.
    pub features: Vec<Matrix>,
    pub response: Matrix,
    /// `(1/n) <Z_k, Z_k>_F`.
    pub gram_diag: Vec<f64>,
}

pub fn build_features(dictionary: &Dictionary, group_id: usize, x: &Matrix, y: &Matrix) -> Result<FeatureBundle> {
    if x.ncols() != y.ncols() {
        return Err(Error::Dimension(format!(
            "group {group_id}: X has {} columns but Y has {}",
            x.ncols(),
            y.ncols()
        )));
    }
    let n = x.ncols() as f64;
    let mut features = Vec::with_capacity(dictionary.k());
    let mut gram_diag = Vec::with_capacity(dictionary.k());
    for (k, d) in dictionary.entries().iter().enumerate() {
        if d.ncols() != x.nrows() || d.nrows() != y.nrows() {
            return Err(Error::Dimension(format!(
                "group {group_id}, dictionary entry {k}: D is {}x{}, X is {}x{}, Y is {}x{}",
                d.nrows(),
                d.ncols(),
                x.nrows(),
                x.ncols(),
                y.nrows(),
                y.ncols()
            )));
        }
        let z = d * x;
        gram_diag.push(z.norm_squared() / n);
        features.push(z);
    }
    Ok(FeatureBundle {
        group_id,
        features,
        response: y.clone(),
        gram_diag,
    })
}

/// The lasso in Gram form:
/// `energy - 2 c^T alpha + alpha^T Q alpha + lambda ||alpha||_1`.
#[derive(Debug, Clone)]
pub struct LassoProblem {
    pub gram: Matrix,
    pub corr: DVector<f64>,
    /// `(1/n) ||Y||_F^2`.
    pub energy: f64,
}

impl LassoProblem {
    pub fn from_bundle(bundle: &FeatureBundle) -> Self {
        let n = bundle.response.ncols() as f64;
        let k = bundle.features.len();
        let mut gram = Matrix::zeros(k, k);
        for i in 0..k {
            gram[(i, i)] = bundle.gram_diag[i];
            for j in 0..i {
                let v = frobenius_dot(&bundle.features[i], &bundle.features[j]) / n;
                gram[(i, j)] = v;
                gram[(j, i)] = v;
            }
        }
        let corr = DVector::from_iterator(
            k,
            bundle.features.iter().map(|z| frobenius_dot(z, &bundle.response) / n),
        );
        Self {
            gram,
            corr,
            energy: bundle.response.norm_squared() / n,
        }
    }

    /// Same problem assembled from second moments: `Q_kl = <D_k Sxx, D_l>`,
    /// `c_k = <D_k, Syx>`.
    pub fn from_stats(entries: &[Matrix], stats: &GroupStats) -> Self {
        StackedEntries::new(entries).problem(stats)
    }

    pub fn k(&self) -> usize {
        self.corr.len()
    }

    pub fn objective(&self, alpha: &[f64], lambda: f64) -> f64 {
        let a = DVector::from_column_slice(alpha);
        let quad = a.dot(&(&self.gram * &a));
        self.energy - 2.0 * self.corr.dot(&a) + quad + lambda * a.lp_norm(1)
    }

    /// `c - Q alpha`; the smooth gradient is `-2` times this.
    fn correlation_residual(&self, alpha: &[f64]) -> DVector<f64> {
        &self.corr - &self.gram * DVector::from_column_slice(alpha)
    }

    /// Largest `lambda` for which `alpha = 0` is not optimal.
    pub fn lambda_max(&self) -> f64 {
        2.0 * self.corr.amax()
    }
}

/// Dictionary entries laid out so that one group's Gram matrix costs two
/// matrix products.
pub(crate) struct StackedEntries {
    /// Entries stacked vertically, `Kq x p`.
    stacked: Matrix,
    /// `vec(D_k)` as column `k`, `qp x K`.
    columns: Matrix,
    k: usize,
    q: usize,
    p: usize,
}

impl StackedEntries {
    pub(crate) fn new(entries: &[Matrix]) -> Self {
        let k = entries.len();
        let (q, p) = entries[0].shape();
        let mut stacked = Matrix::zeros(k * q, p);
        let mut columns = Matrix::zeros(q * p, k);
        for (i, d) in entries.iter().enumerate() {
            stacked.view_mut((i * q, 0), (q, p)).copy_from(d);
            columns.column_mut(i).copy_from_slice(d.as_slice());
        }
        Self {
            stacked,
            columns,
            k,
            q,
            p,
        }
    }

    pub(crate) fn problem(&self, stats: &GroupStats) -> LassoProblem {
        let (k, q, p) = (self.k, self.q, self.p);
        let weighted = &self.stacked * &stats.sxx;
        // Row k of `rows` is vec(D_k Sxx).
        let mut rows = Matrix::zeros(k, q * p);
        for i in 0..k {
            for j in 0..p {
                for r in 0..q {
                    rows[(i, j * q + r)] = weighted[(i * q + r, j)];
                }
            }
        }
        let product = rows * &self.columns;
        let gram = Matrix::from_fn(k, k, |i, j| 0.5 * (product[(i, j)] + product[(j, i)]));
        let corr = self.columns.tr_mul(&DVector::from_column_slice(stats.syx.as_slice()));
        LassoProblem {
            gram,
            corr,
            energy: stats.yy,
        }
    }
}

/// Result of one lasso solve.
#[derive(Debug, Clone)]
pub struct LassoFit {
    pub alpha: Vec<f64>,
    pub sweeps: usize,
    pub kkt_violation: f64,
    pub converged: bool,
    /// Objective before the first sweep and after each sweep.
    pub objective_trace: Vec<f64>,
}

/// Largest violation of the lasso optimality conditions, with the smooth
/// gradient expressed through `residual = c - Q alpha`.
pub fn kkt_violation(residual: &DVector<f64>, alpha: &[f64], lambda: f64, pinned: &[bool]) -> f64 {
    let mut worst: f64 = 0.0;
    for (k, &a) in alpha.iter().enumerate() {
        if pinned[k] {
            continue;
        }
        let g = 2.0 * residual[k];
        let v = if a != 0.0 {
            (g - lambda * a.signum()).abs()
        } else {
            (g.abs() - lambda).max(0.0)
        };
        worst = worst.max(v);
    }
    worst
}

/// Cyclic coordinate descent on a Gram-form lasso.
///
/// Coordinates whose Gram diagonal is zero (relative to the largest one) are
/// pinned at zero.
pub fn solve_lasso(problem: &LassoProblem, lambda: f64, opts: &EncoderOptions, warm: Option<&[f64]>) -> LassoFit {
    assert!(lambda >= 0.0, "lambda must be nonnegative");
    let k = problem.k();
    let max_diag = (0..k).map(|i| problem.gram[(i, i)]).fold(0.0, f64::max);
    let pinned: Vec<bool> = (0..k)
        .map(|i| {
            let d = problem.gram[(i, i)];
            d <= 0.0 || d <= 1e-14 * max_diag
        })
        .collect();

    let mut alpha: Vec<f64> = match warm {
        Some(w) => {
            assert_eq!(w.len(), k, "warm start length");
            w.iter().zip(&pinned).map(|(&a, &p)| if p { 0.0 } else { a }).collect()
        }
        None => vec![0.0; k],
    };
    let mut residual = problem.correlation_residual(&alpha);
    let half_lambda = 0.5 * lambda;

    let mut trace = vec![problem.objective(&alpha, lambda)];
    let mut kkt = kkt_violation(&residual, &alpha, lambda, &pinned);
    let mut converged = false;
    let mut sweeps = 0;

    while sweeps < opts.max_sweeps {
        sweeps += 1;
        let mut max_change: f64 = 0.0;
        for j in 0..k {
            if pinned[j] {
                continue;
            }
            let diag = problem.gram[(j, j)];
            let old = alpha[j];
            let rho = residual[j] + diag * old;
            let new = soft_threshold(rho, half_lambda) / diag;
            if new != old {
                let delta = new - old;
                residual.axpy(-delta, &problem.gram.column(j), 1.0);
                alpha[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        // Drop accumulated rounding from the incremental updates.
        residual = problem.correlation_residual(&alpha);
        trace.push(problem.objective(&alpha, lambda));
        kkt = kkt_violation(&residual, &alpha, lambda, &pinned);
        if max_change < opts.tol && kkt < opts.tol {
            converged = true;
            break;
        }
    }

    LassoFit {
        alpha,
        sweeps,
        kkt_violation: kkt,
        converged,
        objective_trace: trace,
    }
}

/// Encodes one group from its explicit features.
pub fn lasso_encode(bundle: &FeatureBundle, lambda: f64, tol: f64, max_sweeps: usize) -> LassoFit {
    let problem = LassoProblem::from_bundle(bundle);
    let fit = solve_lasso(&problem, lambda, &EncoderOptions { tol, max_sweeps }, None);
    if !fit.converged {
        warn!(
            "group {}: lasso stopped after {} sweeps with KKT violation {:.3e}",
            bundle.group_id, fit.sweeps, fit.kkt_violation
        );
    }
    fit
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceWarning {
    pub group: usize,
    pub sweeps: usize,
    pub kkt_violation: f64,
}

#[derive(Debug, Clone)]
pub struct EncodeOutcome {
    pub coefficients: GroupCoefficients,
    pub warnings: Vec<ConvergenceWarning>,
}

/// Runs the encoding step independently for every group.
pub fn encode_all(
    dictionary: &Dictionary,
    dataset: &GroupedDataset,
    lambda: f64,
    opts: &EncoderOptions,
    warm: Option<&GroupCoefficients>,
    threads: usize,
) -> Result<EncodeOutcome> {
    dictionary.check_shape(dataset.p(), dataset.q())?;
    let stats = dataset.stats();
    encode_with_stats(dictionary.entries(), &stats, lambda, opts, warm, threads)
}

pub(crate) fn encode_with_stats(
    entries: &[Matrix],
    stats: &[GroupStats],
    lambda: f64,
    opts: &EncoderOptions,
    warm: Option<&GroupCoefficients>,
    threads: usize,
) -> Result<EncodeOutcome> {
    if let Some(w) = warm {
        if w.num_groups() != stats.len() || w.k() != entries.len() {
            return Err(Error::Dimension(format!(
                "warm start is {}x{}, expected {}x{}",
                w.num_groups(),
                w.k(),
                stats.len(),
                entries.len()
            )));
        }
    }
    let stacked = StackedEntries::new(entries);
    let fits = map_indexed(stats.len(), threads, |g| {
        let problem = stacked.problem(&stats[g]);
        solve_lasso(&problem, lambda, opts, warm.map(|w| w.alpha(g)))
    });
    let mut warnings = Vec::new();
    let mut alphas = Vec::with_capacity(fits.len());
    for (g, fit) in fits.into_iter().enumerate() {
        if !fit.converged {
            warn!(
                "group {g}: lasso stopped after {} sweeps with KKT violation {:.3e}",
                fit.sweeps, fit.kkt_violation
            );
            warnings.push(ConvergenceWarning {
                group: g,
                sweeps: fit.sweeps,
                kkt_violation: fit.kkt_violation,
            });
        }
        alphas.push(fit.alpha);
    }
    Ok(EncodeOutcome {
        coefficients: GroupCoefficients::new(alphas)?,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Group;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn randn(rows: usize, cols: usize, rng: &mut ChaCha20Rng) -> Matrix {
        Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
    }

    /// KKT check computed from the explicit features and residual, without
    /// going through the Gram matrix.
    fn kkt_from_features(bundle: &FeatureBundle, alpha: &[f64], lambda: f64) -> f64 {
        let n = bundle.response.ncols() as f64;
        let mut fitted = Matrix::zeros(bundle.response.nrows(), bundle.response.ncols());
        for (z, &a) in bundle.features.iter().zip(alpha) {
            fitted += z * a;
        }
        let resid = &bundle.response - fitted;
        let mut worst: f64 = 0.0;
        for (k, z) in bundle.features.iter().enumerate() {
            if bundle.gram_diag[k] == 0.0 {
                continue;
            }
            let g = 2.0 / n * frobenius_dot(z, &resid);
            let v = if alpha[k] != 0.0 {
                (g - lambda * alpha[k].signum()).abs()
            } else {
                (g.abs() - lambda).max(0.0)
            };
            worst = worst.max(v);
        }
        worst
    }

    fn random_bundle(k: usize, p: usize, q: usize, n: usize, rng: &mut ChaCha20Rng) -> FeatureBundle {
        let dict = Dictionary::new_unchecked((0..k).map(|_| randn(q, p, rng) * 0.2).collect(), 1.0);
        let x = randn(p, n, rng);
        let y = randn(q, n, rng);
        build_features(&dict, 0, &x, &y).unwrap()
    }

    #[test]
    fn identity_feature_recovers_scale() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let x = randn(3, 8, &mut rng);
        let y = &x * 2.0;
        let dict = Dictionary::new_unchecked(vec![Matrix::identity(3, 3)], 1.0);
        let bundle = build_features(&dict, 0, &x, &y).unwrap();
        assert_eq!(bundle.features[0], x);
        let fit = lasso_encode(&bundle, 0.0, 1e-12, 1000);
        assert!((fit.alpha[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_entry_gives_zero_feature_and_is_pinned() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let x = randn(3, 5, &mut rng);
        let y = randn(2, 5, &mut rng);
        let dict = Dictionary::new_unchecked(vec![Matrix::zeros(2, 3), randn(2, 3, &mut rng) * 0.1], 1.0);
        let bundle = build_features(&dict, 0, &x, &y).unwrap();
        assert_eq!(bundle.gram_diag[0], 0.0);
        assert!(bundle.features[0].iter().all(|&v| v == 0.0));
        let fit = lasso_encode(&bundle, 0.0, 1e-10, 1000);
        assert_eq!(fit.alpha[0], 0.0);
    }

    #[test]
    fn gram_diag_matches_direct_frobenius() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let bundle = random_bundle(4, 5, 3, 7, &mut rng);
        for (z, &d) in bundle.features.iter().zip(&bundle.gram_diag) {
            let direct: f64 = z.iter().map(|v| v * v).sum::<f64>() / 7.0;
            assert!((direct - d).abs() < 1e-10);
        }
    }

    #[test]
    fn shape_mismatch_names_group_and_entry() {
        let dict = Dictionary::new_unchecked(vec![Matrix::zeros(2, 3), Matrix::zeros(2, 4)], 1.0);
        let err = build_features(&dict, 5, &Matrix::zeros(3, 4), &Matrix::zeros(2, 4)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("group 5") && msg.contains("entry 1"), "{msg}");
    }

    #[test]
    fn large_lambda_deactivates_everything() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let bundle = random_bundle(5, 4, 3, 10, &mut rng);
        let n = 10.0;
        let threshold = bundle
            .features
            .iter()
            .map(|z| 2.0 * (frobenius_dot(z, &bundle.response) / n).abs())
            .fold(0.0, f64::max);
        let fit = lasso_encode(&bundle, threshold, 1e-8, 1000);
        assert!(fit.alpha.iter().all(|&a| a == 0.0));
    }

    #[test]
    fn orthogonal_design_closed_form() {
        // Two features with disjoint support, (1/n)||Z_k||^2 = 1, and least
        // squares coefficients (1.0, 0.2).
        let n = 4;
        let z1 = Matrix::from_row_slice(1, n, &[2.0, 0.0, 0.0, 0.0]);
        let z2 = Matrix::from_row_slice(1, n, &[0.0, 2.0, 0.0, 0.0]);
        let y = &z1 * 1.0 + &z2 * 0.2;
        let bundle = FeatureBundle {
            group_id: 0,
            features: vec![z1, z2],
            response: y,
            gram_diag: vec![1.0, 1.0],
        };
        let fit = lasso_encode(&bundle, 0.5, 1e-10, 100);
        assert!((fit.alpha[0] - 0.75).abs() < 1e-10);
        assert_eq!(fit.alpha[1], 0.0);
    }

    #[test]
    fn kkt_and_descent_on_random_instances() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        for trial in 0..100 {
            let bundle = random_bundle(6, 4, 3, 12, &mut rng);
            let lambda = 0.05 * (trial % 10) as f64;
            let fit = lasso_encode(&bundle, lambda, 1e-8, 1000);
            assert!(fit.converged);
            let kkt = kkt_from_features(&bundle, &fit.alpha, lambda);
            assert!(kkt <= 1e-8, "trial {trial}: KKT {kkt}");
            for w in fit.objective_trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "trial {trial}: objective rose {} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn warm_start_reaches_same_point() {
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        for _ in 0..10 {
            // n >= K features in general position: strictly convex.
            let bundle = random_bundle(4, 5, 4, 20, &mut rng);
            let problem = LassoProblem::from_bundle(&bundle);
            let opts = EncoderOptions::default();
            let cold = solve_lasso(&problem, 0.1, &opts, None);
            let start: Vec<f64> = (0..4).map(|_| StandardNormal.sample(&mut rng)).collect();
            let warm = solve_lasso(&problem, 0.1, &opts, Some(&start));
            for (a, b) in cold.alpha.iter().zip(&warm.alpha) {
                assert!((a - b).abs() < 1e-6, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn sparsity_is_monotone_in_lambda() {
        // With correlated features the lasso support can grow with lambda, so
        // the property is checked on uncorrelated (diagonal Gram) instances,
        // where it is guaranteed.
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        for _ in 0..20 {
            let k = 6;
            let diag: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..3.0)).collect();
            let problem = LassoProblem {
                gram: Matrix::from_diagonal(&DVector::from_vec(diag)),
                corr: DVector::from_fn(k, |_, _| StandardNormal.sample(&mut rng)),
                energy: 10.0,
            };
            let top = problem.lambda_max();
            let mut last = usize::MAX;
            for i in 0..10 {
                let lambda = top * i as f64 / 9.0;
                let fit = solve_lasso(&problem, lambda, &EncoderOptions::default(), None);
                let l0 = fit.alpha.iter().filter(|&&a| a != 0.0).count();
                assert!(l0 <= last, "support grew from {last} to {l0}");
                last = l0;
            }
        }
    }

    #[test]
    fn gram_from_stats_matches_features() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let entries: Vec<Matrix> = (0..3).map(|_| randn(2, 4, &mut rng)).collect();
        let dict = Dictionary::new_unchecked(entries.clone(), 1.0);
        let group = Group {
            x: randn(4, 9, &mut rng),
            y: randn(2, 9, &mut rng),
        };
        let a = LassoProblem::from_bundle(&build_features(&dict, 0, &group.x, &group.y).unwrap());
        let b = LassoProblem::from_stats(&entries, &GroupStats::new(&group));
        assert!((a.gram - b.gram).norm() < 1e-10);
        assert!((a.corr - b.corr).norm() < 1e-10);
        assert!((a.energy - b.energy).abs() < 1e-12);
    }

    #[test]
    fn encode_all_is_per_group() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let dict = Dictionary::new_unchecked((0..3).map(|_| randn(2, 3, &mut rng) * 0.3).collect(), 1.0);
        let g0 = Group {
            x: randn(3, 10, &mut rng),
            y: randn(2, 10, &mut rng),
        };
        let g1 = Group {
            x: randn(3, 10, &mut rng),
            y: randn(2, 10, &mut rng),
        };
        let single = encode_all(
            &dict,
            &GroupedDataset::new(vec![g0.clone()]).unwrap(),
            0.05,
            &EncoderOptions::default(),
            None,
            1,
        )
        .unwrap();
        let direct = lasso_encode(&build_features(&dict, 0, &g0.x, &g0.y).unwrap(), 0.05, 1e-8, 1000);
        for (a, b) in single.coefficients.alpha(0).iter().zip(&direct.alpha) {
            assert!((a - b).abs() < 1e-9);
        }

        let twice = GroupedDataset::new(vec![g0.clone(), g1, g0]).unwrap();
        let seq = encode_all(&dict, &twice, 0.05, &EncoderOptions::default(), None, 1).unwrap();
        assert_eq!(seq.coefficients.alpha(0), seq.coefficients.alpha(2));
        let par = encode_all(&dict, &twice, 0.05, &EncoderOptions::default(), None, 3).unwrap();
        assert_eq!(seq.coefficients, par.coefficients);
    }
}
