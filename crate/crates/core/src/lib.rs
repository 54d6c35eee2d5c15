//! Categorical clustering by multi-granular competitive penalization learning
//! followed by weighted aggregation of the learned granularity levels.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64` for everyday use.

pub mod came;
pub mod data;
pub mod error;
pub mod metrics;
pub mod mgcpl;
pub mod pipeline;
mod scalar;
pub mod similarity;

pub use came::{run_came, CameConfig, CameResult, CodeMatrix};
pub use data::{
    drop_missing, generate_synthetic, load_csv, read_csv, read_labels, write_csv, write_labels, ClassLabels,
    CsvOptions, Dataset, SynthSpec, MISSING,
};
pub use error::{Error, Result};
pub use metrics::{evaluate, ContingencyTable, Scores};
pub use mgcpl::{run_mgcpl, Dynamics, MgcplConfig, MultiGranularResult, Reseed, StopRule};
pub use pipeline::{run_bench, run_cluster, run_once, BenchAxis, BenchConfig, RunConfig, RunReport, Variant};
pub use scalar::Scalar;
pub use similarity::{ClusterModel, FeatureWeights, FrequencyTable};

pub type Real = f64;
pub type MgcplConfig64 = MgcplConfig<f64>;
pub type MultiGranular64 = MultiGranularResult<f64>;
pub type CameResult64 = CameResult<f64>;
pub type FeatureWeights64 = FeatureWeights<f64>;
pub type MgcplConfig32 = MgcplConfig<f32>;
pub type MultiGranular32 = MultiGranularResult<f32>;
pub type CameResult32 = CameResult<f32>;
