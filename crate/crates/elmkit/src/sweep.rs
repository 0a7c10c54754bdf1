//! Benchmark harness: runs `{elm, ciw} x hidden sizes x repeats` cells
//! over one dataset, collects accuracy/timing rows, and renders them as
//! CSV or an aligned table.
//!
//! Every cell derives its own run seed as
//! `mix(base_seed, [TAG_SWEEP_CELL, method, hidden, repeat])`, so cells
//! are independent: extending the hidden-size list or the repeat count
//! never changes the seeds (and therefore the results) of existing cells.
//! UCI datasets are re-split per repeat from a seed derived from the run
//! seed; MNIST always uses its canonical train/test files.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use crate::ciw::{ciw_input_weights, BlockPolicy, CiwConfig};
use crate::dataio::{
    append_bias, load_csv, load_idx_dataset, stratified_split, CsvSchema, Dataset,
};
use crate::elm::{
    accuracy, classify, random_input_weights, train, ActivationKind,
};
use crate::error::{Error, Result};
use crate::numerics::Standardizer;
use crate::seeding::{self, TAG_SPLIT, TAG_SWEEP_CELL};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetName {
    Mnist,
    Iris,
    Wine,
    Abalone,
}

impl DatasetName {
    pub fn default_scaling(self) -> ScalingKind {
        match self {
            // MNIST pixels arrive on [0, 1] from the loader; per-pixel
            // z-scoring amplifies the near-constant border pixels and
            // costs both methods about two points of test accuracy.
            DatasetName::Mnist => ScalingKind::Raw,
            _ => ScalingKind::ZScore,
        }
    }

    pub fn default_repeats(self) -> usize {
        match self {
            DatasetName::Mnist => 3,
            _ => 10,
        }
    }

    pub fn csv_schema(self) -> Option<CsvSchema> {
        match self {
            DatasetName::Mnist => None,
            DatasetName::Iris => Some(CsvSchema::Iris),
            DatasetName::Wine => Some(CsvSchema::Wine),
            DatasetName::Abalone => Some(CsvSchema::Abalone),
        }
    }
}

impl fmt::Display for DatasetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DatasetName::Mnist => "mnist",
            DatasetName::Iris => "iris",
            DatasetName::Wine => "wine",
            DatasetName::Abalone => "abalone",
        };
        f.write_str(s)
    }
}

impl FromStr for DatasetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mnist" => Ok(DatasetName::Mnist),
            "iris" => Ok(DatasetName::Iris),
            "wine" => Ok(DatasetName::Wine),
            "abalone" => Ok(DatasetName::Abalone),
            other => Err(Error::InvalidArgument(format!(
                "unknown dataset {other:?} (expected mnist, iris, wine or abalone)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Elm,
    Ciw,
}

impl Method {
    fn seed_tag(self) -> u64 {
        match self {
            Method::Elm => 1,
            Method::Ciw => 2,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Elm => "elm",
            Method::Ciw => "ciw",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "elm" => Ok(Method::Elm),
            "ciw" => Ok(Method::Ciw),
            other => Err(Error::InvalidArgument(format!(
                "unknown method {other:?} (expected elm or ciw)"
            ))),
        }
    }
}

/// Feature scaling applied after loading, fitted on the training side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalingKind {
    /// Use features as loaded (MNIST pixels are already on `[0, 1]`).
    Raw,
    /// Per-column zero mean, unit population standard deviation.
    ZScore,
}

impl FromStr for ScalingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(ScalingKind::Raw),
            "zscore" => Ok(ScalingKind::ZScore),
            other => Err(Error::InvalidArgument(format!(
                "unknown scaling {other:?} (expected raw or zscore)"
            ))),
        }
    }
}

/// Where the raw files live.
#[derive(Debug, Clone)]
pub enum DataSource {
    Idx {
        train_images: PathBuf,
        train_labels: PathBuf,
        test_images: PathBuf,
        test_labels: PathBuf,
    },
    Csv {
        path: PathBuf,
        schema: CsvSchema,
    },
}

/// Loaded, unscaled data, ready to be split and standardized per run.
#[derive(Debug, Clone)]
pub struct BenchData {
    pub name: String,
    split: BenchSplit,
}

#[derive(Debug, Clone)]
enum BenchSplit {
    /// Canonical fixed train/test pair (MNIST).
    Fixed { train: Dataset, test: Dataset },
    /// One pool, stratified-split per repeat (UCI).
    Resample { full: Dataset },
}

impl BenchData {
    pub fn load(source: &DataSource) -> Result<Self> {
        match source {
            DataSource::Idx {
                train_images,
                train_labels,
                test_images,
                test_labels,
            } => {
                let train = load_idx_dataset(train_images, train_labels, "mnist")?;
                let test = load_idx_dataset(test_images, test_labels, "mnist")?;
                if train.features.cols() != test.features.cols() {
                    return Err(Error::DimMismatch {
                        op: "bench_data",
                        left: train.features.shape(),
                        right: test.features.shape(),
                    });
                }
                Ok(BenchData {
                    name: "mnist".into(),
                    split: BenchSplit::Fixed { train, test },
                })
            }
            DataSource::Csv { path, schema } => {
                let full = load_csv(path, *schema)?;
                Ok(BenchData {
                    name: full.name.clone(),
                    split: BenchSplit::Resample { full },
                })
            }
        }
    }

    /// Wraps a fixed train/test pair (used by tests and library callers).
    pub fn from_fixed(train: Dataset, test: Dataset) -> Self {
        BenchData {
            name: train.name.clone(),
            split: BenchSplit::Fixed { train, test },
        }
    }

    /// Wraps a pool that is re-split per repeat.
    pub fn from_pool(full: Dataset) -> Self {
        BenchData {
            name: full.name.clone(),
            split: BenchSplit::Resample { full },
        }
    }

    pub fn class_count(&self) -> usize {
        match &self.split {
            BenchSplit::Fixed { train, .. } => train.class_count,
            BenchSplit::Resample { full } => full.class_count,
        }
    }
}

/// Parameters for a single training/evaluation run.
#[derive(Debug, Clone, Copy)]
pub struct RunConfig {
    pub method: Method,
    pub hidden: usize,
    /// Fully derived run seed (see module docs).
    pub seed: u64,
    /// Seed for the stratified split of resampled datasets. The sweep
    /// derives it from the base seed and the repeat index only, so the
    /// two methods are compared on identical splits.
    pub split_seed: u64,
    pub activation: ActivationKind,
    pub lambda: f64,
    pub scaling: ScalingKind,
    pub allocation: BlockPolicy,
    /// Train fraction for resampled datasets; ignored for fixed splits.
    pub split_fraction: f64,
    /// Half-range of the uniform distribution for `elm` input weights.
    pub half_range: f64,
}

/// One sweep-cell result.
#[derive(Debug, Clone)]
pub struct RunRow {
    pub dataset: String,
    pub method: Method,
    pub hidden: usize,
    pub seed: u64,
    pub accuracy: f64,
    /// Wall-clock seconds over weight synthesis, training and testing.
    pub train_time_s: f64,
    pub residual: f64,
    /// Count of degenerate (zero-norm) CIW rows; always 0 for `elm`.
    pub degenerate_rows: usize,
}

/// Per-(method, hidden) aggregate over repeats.
#[derive(Debug, Clone)]
pub struct AggregateRow {
    pub dataset: String,
    pub method: Method,
    pub hidden: usize,
    pub repeats: usize,
    pub mean_accuracy: f64,
    /// Population standard deviation over repeats.
    pub std_accuracy: f64,
    pub mean_train_time_s: f64,
}

/// Loads (splits, scales) the data for one run and executes it: weight
/// synthesis, closed-form training, and held-out evaluation. The reported
/// time spans synthesis + training + testing; I/O and preprocessing are
/// excluded.
pub fn run_single(data: &BenchData, cfg: &RunConfig) -> Result<RunRow> {
    let (train_set, test_set) = prepared_split(data, cfg)?;

    let started = Instant::now();
    let (weights, degenerate_rows) = match cfg.method {
        Method::Elm => (
            random_input_weights(
                train_set.features.cols(),
                cfg.hidden,
                cfg.half_range,
                cfg.seed,
            )?,
            0,
        ),
        Method::Ciw => {
            let ciw = ciw_input_weights(
                &train_set,
                &CiwConfig {
                    hidden_size: cfg.hidden,
                    seed: cfg.seed,
                    allocation: cfg.allocation,
                },
            )?;
            (ciw.weights, ciw.degenerate_rows.len())
        }
    };
    let (model, report) = train(weights, &train_set, cfg.activation, cfg.lambda)?;
    let predicted = classify(&model, &test_set.features)?;
    let test_accuracy = accuracy(&predicted, &test_set.labels)?;
    let elapsed = started.elapsed().as_secs_f64();

    Ok(RunRow {
        dataset: data.name.clone(),
        method: cfg.method,
        hidden: cfg.hidden,
        seed: cfg.seed,
        accuracy: test_accuracy,
        train_time_s: elapsed,
        residual: report.residual_norm,
        degenerate_rows,
    })
}

/// Splits (when resampled) and scales one train/test pair. Scaling
/// statistics are always fitted on the training side only; the bias
/// column goes on last so it survives as a constant one.
fn prepared_split(data: &BenchData, cfg: &RunConfig) -> Result<(Dataset, Dataset)> {
    let (mut train_set, mut test_set) = match &data.split {
        BenchSplit::Fixed { train, test } => (train.clone(), test.clone()),
        BenchSplit::Resample { full } => {
            stratified_split(full, cfg.split_fraction, cfg.split_seed)?
        }
    };
    if let ScalingKind::ZScore = cfg.scaling {
        let standardizer = Standardizer::fit(&train_set.features)?;
        train_set.features = standardizer.apply(&train_set.features)?;
        test_set.features = standardizer.apply(&test_set.features)?;
    }
    train_set.features = append_bias(&train_set.features);
    test_set.features = append_bias(&test_set.features);
    Ok((train_set, test_set))
}

/// Full sweep specification; see the CLI for the user-facing surface.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub dataset: DatasetName,
    pub method: Method,
    pub hidden_sizes: Vec<usize>,
    pub repeats: usize,
    pub base_seed: u64,
    pub activation: ActivationKind,
    pub lambda: f64,
    /// `None` selects the dataset default.
    pub scaling: Option<ScalingKind>,
    pub allocation: BlockPolicy,
    pub split_fraction: f64,
    pub workers: usize,
    pub keep_going: bool,
    pub source: DataSource,
}

/// Sweep output: one row per (hidden, repeat) cell in deterministic
/// order, plus per-hidden aggregates, plus any failures recorded under
/// `--keep-going`.
#[derive(Debug, Clone)]
pub struct SweepReport {
    pub rows: Vec<RunRow>,
    pub aggregates: Vec<AggregateRow>,
    pub failures: Vec<String>,
}

/// Derives the run seed for one sweep cell.
pub fn cell_seed(base_seed: u64, method: Method, hidden: usize, repeat: usize) -> u64 {
    seeding::mix(
        base_seed,
        &[TAG_SWEEP_CELL, method.seed_tag(), hidden as u64, repeat as u64],
    )
}

/// Derives the split seed for one repeat. Deliberately independent of the
/// method and hidden size: every cell of a sweep repeat sees the same
/// train/test partition, so method comparisons are paired.
pub fn split_seed(base_seed: u64, repeat: usize) -> u64 {
    seeding::mix(base_seed, &[TAG_SPLIT, repeat as u64])
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepReport> {
    if spec.hidden_sizes.is_empty() {
        return Err(Error::InvalidArgument("no hidden sizes given".into()));
    }
    if spec.repeats == 0 {
        return Err(Error::InvalidArgument("repeats must be >= 1".into()));
    }
    let data = BenchData::load(&spec.source)?;
    if spec.method == Method::Ciw {
        let classes = data.class_count();
        if let Some(&hidden) = spec.hidden_sizes.iter().find(|&&d| d < classes) {
            return Err(Error::HiddenTooSmall { hidden, classes });
        }
    }
    run_sweep_on(&data, spec)
}

/// Sweep over already-loaded data. Cells run in deterministic seed order;
/// with `workers > 1` they run on a bounded thread pool and the report is
/// reassembled in order afterwards.
pub fn run_sweep_on(data: &BenchData, spec: &SweepSpec) -> Result<SweepReport> {
    let scaling = spec.scaling.unwrap_or_else(|| spec.dataset.default_scaling());
    let cells: Vec<RunConfig> = spec
        .hidden_sizes
        .iter()
        .flat_map(|&hidden| {
            (0..spec.repeats).map(move |repeat| RunConfig {
                method: spec.method,
                hidden,
                seed: cell_seed(spec.base_seed, spec.method, hidden, repeat),
                split_seed: split_seed(spec.base_seed, repeat),
                activation: spec.activation,
                lambda: spec.lambda,
                scaling,
                allocation: spec.allocation,
                split_fraction: spec.split_fraction,
                half_range: 1.0,
            })
        })
        .collect();

    let outcomes: Vec<(usize, std::result::Result<RunRow, Error>)> = if spec.workers > 1 {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(spec.workers)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
        pool.install(|| {
            cells
                .par_iter()
                .enumerate()
                .map(|(i, cfg)| (i, run_single(data, cfg)))
                .collect()
        })
    } else {
        let mut out = Vec::with_capacity(cells.len());
        for (i, cfg) in cells.iter().enumerate() {
            let result = run_single(data, cfg);
            let failed = result.is_err();
            out.push((i, result));
            if failed && !spec.keep_going {
                break;
            }
        }
        out
    };

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (i, outcome) in outcomes {
        let cfg = &cells[i];
        match outcome {
            Ok(row) => rows.push((i, row)),
            Err(e) => {
                let context = format!(
                    "{} {} hidden={} seed={}: {e}",
                    data.name, cfg.method, cfg.hidden, cfg.seed
                );
                if spec.keep_going {
                    failures.push(context);
                } else {
                    return Err(Error::InvalidArgument(context));
                }
            }
        }
    }
    rows.sort_by_key(|(i, _)| *i);
    let rows: Vec<RunRow> = rows.into_iter().map(|(_, r)| r).collect();

    let mut aggregates = Vec::new();
    for &hidden in &spec.hidden_sizes {
        let cell_rows: Vec<&RunRow> = rows.iter().filter(|r| r.hidden == hidden).collect();
        if cell_rows.is_empty() {
            continue;
        }
        let n = cell_rows.len() as f64;
        let mean_accuracy = cell_rows.iter().map(|r| r.accuracy).sum::<f64>() / n;
        let var = cell_rows
            .iter()
            .map(|r| (r.accuracy - mean_accuracy).powi(2))
            .sum::<f64>()
            / n;
        let mean_train_time_s = cell_rows.iter().map(|r| r.train_time_s).sum::<f64>() / n;
        aggregates.push(AggregateRow {
            dataset: data.name.clone(),
            method: spec.method,
            hidden,
            repeats: cell_rows.len(),
            mean_accuracy,
            std_accuracy: var.sqrt(),
            mean_train_time_s,
        });
    }

    Ok(SweepReport {
        rows,
        aggregates,
        failures,
    })
}

pub const CSV_HEADER: &str = "dataset,method,hidden,seed,accuracy,train_time_s,residual";
pub const SUMMARY_HEADER: &str =
    "dataset,method,hidden,repeats,mean_accuracy,std_accuracy,mean_train_time_s";

/// Renders the per-run rows as CSV, header included.
pub fn csv_rows(report: &SweepReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{:.4},{:.3},{:.6e}\n",
            r.dataset, r.method, r.hidden, r.seed, r.accuracy, r.train_time_s, r.residual
        ));
    }
    out
}

/// Renders the aggregate rows as CSV, header included.
pub fn csv_summary(report: &SweepReport) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for a in &report.aggregates {
        out.push_str(&format!(
            "{},{},{},{},{:.4},{:.4},{:.3}\n",
            a.dataset, a.method, a.hidden, a.repeats, a.mean_accuracy, a.std_accuracy,
            a.mean_train_time_s
        ));
    }
    out
}

/// Plain-text table of the aggregates.
pub fn render_table(report: &SweepReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<8} {:<6} {:>7} {:>8} {:>9} {:>8} {:>12}\n",
        "dataset", "method", "hidden", "repeats", "mean_acc", "std_acc", "mean_time_s"
    ));
    for a in &report.aggregates {
        out.push_str(&format!(
            "{:<8} {:<6} {:>7} {:>8} {:>9.4} {:>8.4} {:>12.3}\n",
            a.dataset, a.method, a.hidden, a.repeats, a.mean_accuracy, a.std_accuracy,
            a.mean_train_time_s
        ));
    }
    out
}
