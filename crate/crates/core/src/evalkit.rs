//! Evaluation: estimation and prediction error, the pairwise 2v2 / 1v2
//! classification protocol with hold-two-out cross-validation, lambda
//! selection by K-fold cross-validation, and a text summary of fit
//! diagnostics.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::GroupedDataset;
use crate::dictlearn::{csc_fit, CscConfig, FitDiagnostics};
use crate::error::{Error, Result};
use crate::matcore::Matrix;
use crate::optim::map_indexed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Present when ground truth is known.
    pub estimation_error: Option<f64>,
    pub prediction_error: f64,
    pub per_group_prediction_error: Vec<f64>,
}

fn check_pairs(b_hat: &[Matrix], b_star: &[Matrix]) -> Result<()> {
    if b_hat.len() != b_star.len() || b_hat.is_empty() {
        return Err(Error::Dimension(format!(
            "{} estimates for {} true matrices",
            b_hat.len(),
            b_star.len()
        )));
    }
    for (g, (a, b)) in b_hat.iter().zip(b_star).enumerate() {
        if a.shape() != b.shape() {
            return Err(Error::Dimension(format!(
                "group {g}: estimate is {}x{}, truth is {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols()
            )));
        }
    }
    Ok(())
}

/// `(1/G) sum_g ||B*_g - B_hat_g||_F`.
pub fn estimation_error(b_hat: &[Matrix], b_star: &[Matrix]) -> Result<f64> {
    check_pairs(b_hat, b_star)?;
    Ok(b_hat.iter().zip(b_star).map(|(a, b)| (a - b).norm()).sum::<f64>() / b_hat.len() as f64)
}

/// `(1/n) ||Y_g - B_hat_g X_g||_F^2` for every group.
pub fn per_group_prediction_error(b_hat: &[Matrix], test: &GroupedDataset) -> Result<Vec<f64>> {
    if b_hat.len() != test.num_groups() {
        return Err(Error::Dimension(format!(
            "{} estimates for {} test groups",
            b_hat.len(),
            test.num_groups()
        )));
    }
    b_hat
        .iter()
        .zip(test.groups())
        .enumerate()
        .map(|(g, (b, group))| {
            if b.shape() != (test.q(), test.p()) {
                return Err(Error::Dimension(format!(
                    "group {g}: estimate is {}x{}, data needs {}x{}",
                    b.nrows(),
                    b.ncols(),
                    test.q(),
                    test.p()
                )));
            }
            Ok((&group.y - b * &group.x).norm_squared() / test.n() as f64)
        })
        .collect()
}

/// `(1/G) sum_g (1/n) ||Y_g - B_hat_g X_g||_F^2`.
pub fn prediction_error(b_hat: &[Matrix], test: &GroupedDataset) -> Result<f64> {
    let per = per_group_prediction_error(b_hat, test)?;
    Ok(per.iter().sum::<f64>() / per.len() as f64)
}

pub fn evaluate(b_hat: &[Matrix], test: &GroupedDataset, b_star: Option<&[Matrix]>) -> Result<EvalReport> {
    let per = per_group_prediction_error(b_hat, test)?;
    let estimation = b_star.map(|truth| estimation_error(b_hat, truth)).transpose()?;
    Ok(EvalReport {
        estimation_error: estimation,
        prediction_error: per.iter().sum::<f64>() / per.len() as f64,
        per_group_prediction_error: per,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Euclidean,
    /// `1 - cos(a, b)`.
    CosineDistance,
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Metric::Euclidean),
            "cosine" | "cosine_distance" => Ok(Metric::CosineDistance),
            other => Err(Error::Config(format!("unknown metric {other:?}"))),
        }
    }
}

impl Metric {
    pub fn distance(self, a: &[f64], b: &[f64]) -> Result<f64> {
        if a.len() != b.len() {
            return Err(Error::Dimension(format!("vectors of length {} and {}", a.len(), b.len())));
        }
        match self {
            Metric::Euclidean => Ok(a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()),
            Metric::CosineDistance => {
                let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
                let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
                if na == 0.0 || nb == 0.0 {
                    return Err(Error::UndefinedMetric("cosine distance with a zero vector".into()));
                }
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                Ok(1.0 - dot / (na * nb))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairOutcome {
    pub correct_2v2: bool,
    pub correct_1v2: bool,
}

/// Pairwise decision rules. Both use strict inequalities, so ties count as
/// incorrect.
pub fn classify_pair(y1: &[f64], y2: &[f64], yhat1: &[f64], yhat2: &[f64], metric: Metric) -> Result<PairOutcome> {
    let d11 = metric.distance(y1, yhat1)?;
    let d22 = metric.distance(y2, yhat2)?;
    let d12 = metric.distance(y1, yhat2)?;
    let d21 = metric.distance(y2, yhat1)?;
    Ok(PairOutcome {
        correct_2v2: d11 + d22 < d12 + d21,
        correct_1v2: d11 < d12 && d22 < d21,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEvalReport {
    pub acc_2v2: f64,
    pub acc_1v2: f64,
    /// Mean over trials of the average squared error of the two held-out
    /// predictions.
    pub mean_squared_error: f64,
    pub n_trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupTrial {
    pub correct_2v2: bool,
    pub correct_1v2: bool,
    pub squared_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub held_out: (usize, usize),
    /// One entry per group; empty when the trial failed.
    pub groups: Vec<GroupTrial>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutReport {
    pub per_group: Vec<PairEvalReport>,
    pub trials: Vec<TrialRecord>,
    pub n_failed: usize,
}

/// Distinct column pairs for the trials: without replacement when there are
/// enough pairs, with replacement otherwise.
fn draw_pairs(n: usize, n_trials: usize, rng: &mut ChaCha20Rng) -> Vec<(usize, usize)> {
    let total = n * (n - 1) / 2;
    let decode = |mut m: usize| {
        let mut i = 0;
        while m >= n - 1 - i {
            m -= n - 1 - i;
            i += 1;
        }
        (i, i + 1 + m)
    };
    if n_trials <= total {
        sample(rng, total, n_trials).into_iter().map(decode).collect()
    } else {
        (0..n_trials)
            .map(|_| {
                let a = rng.random_range(0..n);
                let mut b = rng.random_range(0..n - 1);
                if b >= a {
                    b += 1;
                }
                (a.min(b), a.max(b))
            })
            .collect()
    }
}

fn column(m: &Matrix, c: usize) -> Vec<f64> {
    m.column(c).iter().copied().collect()
}

/// Hold-two-out cross-validation. Each trial removes the same two sample
/// columns from every group, fits on the rest, predicts the held-out
/// responses and scores them with [`classify_pair`] and squared error.
///
/// `fit` receives the training split and must return one estimate per group.
/// A trial whose fit (or scoring) fails is recorded and excluded from the
/// means.
pub fn hold_two_out_cv<F>(
    dataset: &GroupedDataset,
    fit: F,
    n_trials: usize,
    metric: Metric,
    rng_seed: u64,
    threads: usize,
) -> Result<HoldoutReport>
where
    F: Fn(&GroupedDataset) -> Result<Vec<Matrix>> + Sync + Send,
{
    let n = dataset.n();
    if n < 3 {
        return Err(Error::Config(format!("hold-two-out needs n >= 3, got {n}")));
    }
    if n_trials == 0 {
        return Err(Error::Config("n_trials must be at least 1".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(rng_seed);
    let pairs = draw_pairs(n, n_trials, &mut rng);

    let run_trial = |&(i, j): &(usize, usize)| -> Result<Vec<GroupTrial>> {
        let train_cols: Vec<usize> = (0..n).filter(|&c| c != i && c != j).collect();
        let train = dataset.select_columns(&train_cols)?;
        let estimates = fit(&train)?;
        if estimates.len() != dataset.num_groups() {
            return Err(Error::Dimension(format!(
                "fit returned {} estimates for {} groups",
                estimates.len(),
                dataset.num_groups()
            )));
        }
        dataset
            .groups()
            .iter()
            .zip(&estimates)
            .map(|(group, b)| {
                let y1 = column(&group.y, i);
                let y2 = column(&group.y, j);
                let yhat1: Vec<f64> = (b * group.x.column(i)).iter().copied().collect();
                let yhat2: Vec<f64> = (b * group.x.column(j)).iter().copied().collect();
                let outcome = classify_pair(&y1, &y2, &yhat1, &yhat2, metric)?;
                let se = |y: &[f64], yh: &[f64]| y.iter().zip(yh).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
                Ok(GroupTrial {
                    correct_2v2: outcome.correct_2v2,
                    correct_1v2: outcome.correct_1v2,
                    squared_error: 0.5 * (se(&y1, &yhat1) + se(&y2, &yhat2)),
                })
            })
            .collect()
    };

    let outcomes = map_indexed(pairs.len(), threads, |t| run_trial(&pairs[t]));
    let trials: Vec<TrialRecord> = pairs
        .iter()
        .zip(outcomes)
        .map(|(&held_out, outcome)| match outcome {
            Ok(groups) => TrialRecord {
                held_out,
                groups,
                failure: None,
            },
            Err(e) => {
                log::warn!("hold-out trial {held_out:?} failed: {e}");
                TrialRecord {
                    held_out,
                    groups: Vec::new(),
                    failure: Some(e.to_string()),
                }
            }
        })
        .collect();

    let ok: Vec<&TrialRecord> = trials.iter().filter(|t| t.failure.is_none()).collect();
    let count = ok.len();
    let per_group = (0..dataset.num_groups())
        .map(|g| {
            let mean = |f: &dyn Fn(&GroupTrial) -> f64| {
                if count == 0 {
                    f64::NAN
                } else {
                    ok.iter().map(|t| f(&t.groups[g])).sum::<f64>() / count as f64
                }
            };
            PairEvalReport {
                acc_2v2: mean(&|t| t.correct_2v2 as u8 as f64),
                acc_1v2: mean(&|t| t.correct_1v2 as u8 as f64),
                mean_squared_error: mean(&|t| t.squared_error),
                n_trials: count,
            }
        })
        .collect();
    Ok(HoldoutReport {
        per_group,
        n_failed: trials.len() - count,
        trials,
    })
}

/// Two-sided paired sign test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignTest {
    /// Pairs where the first method scored higher.
    pub wins: usize,
    pub losses: usize,
    pub ties: usize,
    pub p_value: f64,
}

impl SignTest {
    /// `1 - p` together with the direction of the difference, rendered like
    /// `0.92+` (first method better) or `0.05-`.
    pub fn confidence_label(&self) -> String {
        let conf = 1.0 - self.p_value;
        let sign = match self.wins.cmp(&self.losses) {
            std::cmp::Ordering::Greater => "+",
            std::cmp::Ordering::Less => "-",
            std::cmp::Ordering::Equal => "",
        };
        format!("{conf:.2}{sign}")
    }
}

/// Sign test on paired scores where larger is better; ties are dropped.
pub fn paired_sign_test(first: &[f64], second: &[f64]) -> Result<SignTest> {
    if first.len() != second.len() {
        return Err(Error::Dimension(format!(
            "paired samples of length {} and {}",
            first.len(),
            second.len()
        )));
    }
    let (mut wins, mut losses, mut ties) = (0, 0, 0);
    for (a, b) in first.iter().zip(second) {
        match a.partial_cmp(b) {
            Some(std::cmp::Ordering::Greater) => wins += 1,
            Some(std::cmp::Ordering::Less) => losses += 1,
            _ => ties += 1,
        }
    }
    let n = wins + losses;
    let p_value = if n == 0 {
        1.0
    } else {
        let k = wins.min(losses);
        let ln2n = n as f64 * std::f64::consts::LN_2;
        let mut ln_choose = 0.0;
        let mut tail = 0.0;
        for i in 0..=k {
            if i > 0 {
                ln_choose += ((n - i + 1) as f64).ln() - (i as f64).ln();
            }
            tail += (ln_choose - ln2n).exp();
        }
        (2.0 * tail).min(1.0)
    };
    Ok(SignTest {
        wins,
        losses,
        ties,
        p_value,
    })
}

/// Multipliers of the `sqrt(log K / n)` anchor used by the default grid.
pub const DEFAULT_LAMBDA_MULTIPLIERS: [f64; 7] = [0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0];

/// `{c sqrt(log K / n)}` over [`DEFAULT_LAMBDA_MULTIPLIERS`].
pub fn default_lambda_grid(k: usize, n: usize) -> Vec<f64> {
    // log 1 = 0 would collapse the grid; K = 1 falls back to log 2.
    let anchor = ((k.max(2) as f64).ln() / n.max(1) as f64).sqrt();
    DEFAULT_LAMBDA_MULTIPLIERS.iter().map(|c| c * anchor).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaSelection {
    pub best: f64,
    /// `(lambda, mean held-out prediction error)` in grid order.
    pub curve: Vec<(f64, f64)>,
}

/// Column folds shared by every group.
pub fn column_folds(n: usize, n_folds: usize, rng_seed: u64) -> Result<Vec<Vec<usize>>> {
    if n_folds < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {n_folds}")));
    }
    if n_folds > n {
        return Err(Error::Config(format!("cannot split {n} samples into {n_folds} folds")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha20Rng::seed_from_u64(rng_seed));
    let folds: Vec<Vec<usize>> = (0..n_folds)
        .map(|f| {
            let mut fold: Vec<usize> = order.iter().copied().skip(f).step_by(n_folds).collect();
            fold.sort_unstable();
            fold
        })
        .collect();
    if folds.iter().any(|f| f.len() >= n) {
        return Err(Error::Config("a fold leaves no training samples".into()));
    }
    Ok(folds)
}

/// K-fold cross-validation of a generic grouped fit; returns the mean
/// held-out prediction error.
pub fn cv_prediction_error<F>(dataset: &GroupedDataset, folds: &[Vec<usize>], fit: F) -> Result<f64>
where
    F: Fn(&GroupedDataset) -> Result<Vec<Matrix>>,
{
    let n = dataset.n();
    let mut total = 0.0;
    for held in folds {
        let train_cols: Vec<usize> = (0..n).filter(|c| held.binary_search(c).is_err()).collect();
        if train_cols.is_empty() {
            return Err(Error::Config("a fold leaves no training samples".into()));
        }
        let estimates = fit(&dataset.select_columns(&train_cols)?)?;
        total += prediction_error(&estimates, &dataset.select_columns(held)?)?;
    }
    Ok(total / folds.len() as f64)
}

/// Picks the lambda with the smallest K-fold held-out prediction error of a
/// CSC fit. Ties go to the larger lambda.
pub fn select_lambda(
    dataset: &GroupedDataset,
    template: &CscConfig,
    grid: &[f64],
    n_folds: usize,
    rng_seed: u64,
) -> Result<LambdaSelection> {
    if grid.is_empty() {
        return Err(Error::Config("lambda grid is empty".into()));
    }
    if grid.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
        return Err(Error::Config("lambda grid has a negative or non-finite value".into()));
    }
    let folds = column_folds(dataset.n(), n_folds, rng_seed)?;
    let mut curve = Vec::with_capacity(grid.len());
    for &lambda in grid {
        let config = template.with_lambda(lambda);
        let err = cv_prediction_error(dataset, &folds, |train| {
            let (model, _) = csc_fit(train, &config)?;
            Ok(model.estimates())
        })?;
        log::info!("lambda {lambda:.6e}: cv prediction error {err:.6e}");
        curve.push((lambda, err));
    }
    let mut best = curve[0];
    for &(lambda, err) in &curve[1..] {
        if err < best.1 || (err == best.1 && lambda > best.0) {
            best = (lambda, err);
        }
    }
    Ok(LambdaSelection { best: best.0, curve })
}

/// Per-alternation table with the sparsity verdict.
pub fn diagnostics_report(diag: &FitDiagnostics) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>5}  {:>22}  {:>8}  {:>12}  {:>9}  {:>8}",
        "iter", "objective", "mean_l0", "mean_l1", "mean_rank", "max_rank"
    );
    for t in 0..diag.alternations() {
        let max_rank = diag.rank_per_entry_per_alternation[t].iter().copied().max().unwrap_or(0);
        let _ = writeln!(
            out,
            "{:>5}  {:>22.15e}  {:>8.3}  {:>12.6}  {:>9.3}  {:>8}",
            t + 1,
            diag.objective_per_alternation[t],
            diag.mean_l0(t),
            diag.mean_l1(t),
            diag.mean_rank(t),
            max_rank
        );
    }
    let _ = writeln!(out, "converged: {}", if diag.converged { "yes" } else { "no" });
    let _ = writeln!(
        out,
        "sparsity warning: {}",
        if diag.sparsity_warning {
            "YES (mean support did not shrink across alternations)"
        } else {
            "no"
        }
    );
    out
}
