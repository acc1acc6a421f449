//! Conditional sparse coding (CSC) for grouped multivariate regression.
//!
//! Each group `g` has its own regression matrix, modelled as a sparse
//! combination `B_g = sum_k alpha_gk D_k` of a shared dictionary of low-rank
//! matrices. Fitting alternates a per-group lasso (the encoding step) with a
//! projected accelerated gradient update of the dictionary (the learning
//! step). The crate also carries the per-group nuclear-norm regression
//! baseline, data simulators, evaluation protocols, file formats and a CLI.

pub mod baseline;
pub mod cli;
pub mod dataio;
pub mod dataset;
pub mod dictlearn;
pub mod encoder;
pub mod error;
pub mod evalkit;
pub mod matcore;
pub mod optim;
pub mod simulate;

pub use baseline::{rrr_fit, rrr_fit_all, RadiusRule, RrrConfig, RrrFit};
pub use dataset::{Group, GroupStats, GroupedDataset};
pub use dictlearn::{
    compose_b, csc_fit, dictionary_gradient, dictionary_step, init_dictionary, objective, CscConfig, CscModel,
    Dictionary, FitDiagnostics,
};
pub use encoder::{build_features, encode_all, lasso_encode, EncoderOptions, FeatureBundle, GroupCoefficients};
pub use error::{Error, Result};
pub use matcore::Matrix;
pub use simulate::{gen_dataset, GroundTruth, Scenario, SimParams, SimulatedData};
