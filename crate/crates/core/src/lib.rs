//! Stepwise-SVM feature selection for large-p-small-n classification.
//!
//! Every feature is screened by the apparent (training) error rate of a
//! single-feature SVM; a threshold on that rate is then tuned by internal
//! cross-validation to pick the subset that predicts best. The crate also
//! provides the reducers it is usually compared against (Pearson
//! correlation filter, PCA with incremental component fitting, random-forest
//! recursive feature elimination), a repeated stratified half-split
//! benchmark, and Euclidean dissimilarity exports.

pub mod baselines;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod kernels;
pub mod report;
pub mod rng;
pub mod similarity;
pub mod stepwise;
pub mod svm;

pub use baselines::{CorrelationFilterResult, ForestModel, PcaBasis};
pub use data::{Dataset, FeatureStats, FeatureTable, SplitIndices};
pub use error::{Error, ErrorKind, Result};
pub use evaluation::{BenchmarkConfig, EvaluationReport, MethodConfig, MethodKind};
pub use kernels::{Kernel, KernelFamily, KernelSpec};
pub use similarity::DistanceMatrix;
pub use stepwise::{FeatureScore, SelectionResult, StepwiseConfig};
pub use svm::{BinarySvm, ErrorRate, SolverParams, SvmModel};

/// Exact rational used for error-rate thresholds.
pub type Fraction = num_rational::Ratio<u64>;
