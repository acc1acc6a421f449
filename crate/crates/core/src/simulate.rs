//! Synthetic grouped regression data with known ground truth.
//!
//! `Y_g = B*_g X_g + E_g` with `X_g` columns `N(0, I_p)` and noise
//! `N(0, sigma^2 I_q)`. Three ways of drawing `B*_g`:
//!
//! * `structured`: a random sparse combination of a shared set of rank-one
//!   matrices `u v^T` (unit `u`, `v`, so unit spectral norm), with the
//!   support uniform and the weights standard normal;
//! * `unstructured`: `A C^T` with `A` (`q x r`) and `C` (`p x r`) standard
//!   normal, independently per group;
//! * `structured_same_design`: as `structured`, but every group shares one
//!   design matrix (and one test design).
//!
//! All draws come from a single ChaCha20 stream seeded with `rng_seed`, and
//! normal variates use the ziggurat sampler of `rand_distr`. The draw order is
//! fixed: true dictionary, then per group support and weights (or factors),
//! then training designs and noise, then test designs and noise.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{Group, GroupedDataset};
use crate::dictlearn::unit_vector;
use crate::error::{Error, Result};
use crate::matcore::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Structured,
    Unstructured,
    StructuredSameDesign,
}

impl Scenario {
    pub fn is_structured(self) -> bool {
        !matches!(self, Scenario::Unstructured)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::Structured => "structured",
            Scenario::Unstructured => "unstructured",
            Scenario::StructuredSameDesign => "structured_same_design",
        })
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "structured" => Ok(Scenario::Structured),
            "unstructured" => Ok(Scenario::Unstructured),
            "structured_same_design" | "structured-same-design" => Ok(Scenario::StructuredSameDesign),
            other => Err(Error::Config(format!("unknown scenario {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub scenario: Scenario,
    pub p: usize,
    pub q: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub groups: usize,
    pub true_dictionary_size: usize,
    pub true_sparsity: usize,
    pub true_rank: usize,
    pub noise_sigma: f64,
    pub rng_seed: u64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            scenario: Scenario::Structured,
            p: 20,
            q: 20,
            n_train: 40,
            n_test: 1000,
            groups: 50,
            true_dictionary_size: 30,
            true_sparsity: 3,
            true_rank: 3,
            noise_sigma: 0.1,
            rng_seed: 0,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("p", self.p),
            ("q", self.q),
            ("n_train", self.n_train),
            ("n_test", self.n_test),
            ("groups", self.groups),
            ("true_dictionary_size", self.true_dictionary_size),
            ("true_sparsity", self.true_sparsity),
            ("true_rank", self.true_rank),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be positive")));
        }
        if self.true_sparsity > self.true_dictionary_size {
            return Err(Error::Config(format!(
                "true_sparsity {} exceeds true_dictionary_size {}",
                self.true_sparsity, self.true_dictionary_size
            )));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Config(format!("noise_sigma must be nonnegative, got {}", self.noise_sigma)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub b_star: Vec<Matrix>,
    /// Structured scenarios only.
    pub true_dictionary: Option<Vec<Matrix>>,
    /// Structured scenarios only: `(support, weights)` per group.
    pub true_supports: Option<Vec<Vec<usize>>>,
    pub true_weights: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone)]
pub struct SimulatedData {
    pub train: GroupedDataset,
    pub test: GroupedDataset,
    pub truth: GroundTruth,
}

fn randn(rows: usize, cols: usize, rng: &mut ChaCha20Rng) -> Matrix {
    // Fill sample by sample (column-major), matching the storage order.
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

fn responses(b: &Matrix, x: &Matrix, sigma: f64, rng: &mut ChaCha20Rng) -> Matrix {
    let noise = randn(b.nrows(), x.ncols(), rng);
    b * x + noise * sigma
}

pub fn gen_dataset(params: &SimParams) -> Result<SimulatedData> {
    params.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(params.rng_seed);
    let (p, q) = (params.p, params.q);

    let truth = if params.scenario.is_structured() {
        let atoms: Vec<Matrix> = (0..params.true_dictionary_size)
            .map(|_| {
                let u = unit_vector(q, &mut rng);
                let v = unit_vector(p, &mut rng);
                u * v.transpose()
            })
            .collect();
        let mut b_star = Vec::with_capacity(params.groups);
        let mut supports = Vec::with_capacity(params.groups);
        let mut weights = Vec::with_capacity(params.groups);
        for _ in 0..params.groups {
            let mut support = sample(&mut rng, params.true_dictionary_size, params.true_sparsity).into_vec();
            support.sort_unstable();
            let w: Vec<f64> = (0..support.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
            let mut b = Matrix::zeros(q, p);
            for (&k, &c) in support.iter().zip(&w) {
                b.zip_apply(&atoms[k], |x, y| *x += c * y);
            }
            b_star.push(b);
            supports.push(support);
            weights.push(w);
        }
        GroundTruth {
            b_star,
            true_dictionary: Some(atoms),
            true_supports: Some(supports),
            true_weights: Some(weights),
        }
    } else {
        let b_star = (0..params.groups)
            .map(|_| {
                let a = randn(q, params.true_rank, &mut rng);
                let c = randn(p, params.true_rank, &mut rng);
                a * c.transpose()
            })
            .collect();
        GroundTruth {
            b_star,
            true_dictionary: None,
            true_supports: None,
            true_weights: None,
        }
    };

    let shared = params.scenario == Scenario::StructuredSameDesign;
    let draw_split = |n: usize, rng: &mut ChaCha20Rng| -> Result<GroupedDataset> {
        let common = shared.then(|| randn(p, n, rng));
        let groups = truth
            .b_star
            .iter()
            .map(|b| {
                let x = match &common {
                    Some(x) => x.clone(),
                    None => randn(p, n, rng),
                };
                let y = responses(b, &x, params.noise_sigma, rng);
                Group { x, y }
            })
            .collect();
        GroupedDataset::new(groups)
    };
    let train = draw_split(params.n_train, &mut rng)?;
    let test = draw_split(params.n_test, &mut rng)?;
    Ok(SimulatedData { train, test, truth })
}
