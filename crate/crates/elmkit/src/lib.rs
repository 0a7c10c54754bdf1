//! Extreme learning machines with uniform-random or computed input
//! weights.
//!
//! An ELM is a single-hidden-layer network whose input weights are fixed
//! up front and whose output weights are solved in closed form by least
//! squares — no iterative training at all. This crate implements two ways
//! of fixing the input weights:
//!
//! - [`elm::random_input_weights`]: the standard scheme, i.i.d. uniform
//!   entries on an open symmetric interval;
//! - [`ciw::ciw_input_weights`]: computed input weights, where each hidden
//!   neuron is a unit-normalized random sign-combination of one class's
//!   training samples, so the projection is biased toward directions the
//!   data actually occupies. Smaller networks reach the same accuracy.
//!
//! The supporting pieces are public as well: a dense row-major [`matrix::Matrix`],
//! an SVD-backed [`numerics::pseudoinverse`] with the standard singular-value
//! cutoff, loaders for MNIST IDX files and the iris/wine/abalone CSV
//! layouts, and a benchmark [`sweep`] harness with deterministic seed
//! derivation throughout.
//!
//! ```
//! use elmkit::prelude::*;
//!
//! # fn main() -> elmkit::Result<()> {
//! // two noisy point clouds, bias column included
//! let features = Matrix::from_rows(&[
//!     vec![-1.0, 1.0],
//!     vec![-0.9, 1.0],
//!     vec![0.9, 1.0],
//!     vec![1.0, 1.0],
//! ])?;
//! let train = Dataset::new(features, vec![0, 0, 1, 1], 2, "toy")?;
//!
//! let ciw = ciw_input_weights(
//!     &train,
//!     &CiwConfig { hidden_size: 4, seed: 7, allocation: BlockPolicy::Proportional },
//! )?;
//! let (model, _report) = train_elm(ciw.weights, &train, ActivationKind::Tanh, 0.0)?;
//! let predicted = classify(&model, &train.features)?;
//! assert_eq!(accuracy(&predicted, &train.labels)?, 1.0);
//! # Ok(())
//! # }
//! ```

pub mod ciw;
pub mod dataio;
pub mod elm;
pub mod error;
pub mod matrix;
pub mod numerics;
pub mod seeding;
pub mod sweep;

pub use error::{Error, Result};

/// The types and functions most callers need.
pub mod prelude {
    pub use crate::ciw::{
        allocate_blocks, ciw_input_weights, class_block_weights, random_sign_matrix,
        sign_combination_weights, BlockAllocation, BlockPolicy, CiwConfig, CiwWeights,
    };
    pub use crate::dataio::{
        append_bias, load_csv, load_idx_dataset, load_idx_images, load_idx_labels, mnist_paths,
        one_hot, stratified_split, CsvSchema, Dataset, TargetEncoding,
    };
    pub use crate::elm::train as train_elm;
    pub use crate::elm::{
        accuracy, classify, hidden_activations, predict_scores, random_input_weights,
        solve_output_weights, ActivationKind, ElmModel, TrainReport,
    };
    pub use crate::error::{Error, Result};
    pub use crate::matrix::Matrix;
    pub use crate::numerics::{
        l2_normalize_rows, pseudoinverse, ridge_solve, NormalizedRows, Standardizer,
    };
    pub use crate::sweep::{
        cell_seed, csv_rows, csv_summary, render_table, run_single, run_sweep, run_sweep_on,
        split_seed, AggregateRow, BenchData, DataSource, DatasetName, Method, RunConfig, RunRow,
        ScalingKind, SweepReport, SweepSpec,
    };
}
