//! Class-conditional proximity imputation, alternating decision trees,
//! genetic wrapper feature selection and cross-validated ROC evaluation for
//! binary diagnosis on mixed-type tabular records.

pub mod adtree;
pub mod error;
pub mod featsel;
pub mod imputation;
pub mod metrics;
pub mod pipeline;
pub mod proximity;
pub mod synth;
pub mod tabular;

pub use adtree::{AdTree, AdtConfig};
pub use error::{Error, Result};
pub use featsel::{select_features, FeatureMask, GaConfig, Selection};
pub use imputation::{impute, ImputationLog};
pub use pipeline::{cmd_bench, cmd_pipeline, BenchConfig, EvalReport, PipelineConfig, SelectionMode};
pub use tabular::{load_dataset, Cell, ColumnKind, Dataset, Schema};
