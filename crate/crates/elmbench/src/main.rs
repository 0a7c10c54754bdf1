//! `elmbench` sweeps hidden-layer sizes and seeds for one method over one
//! dataset and reports held-out accuracy and wall-clock training time as
//! CSV. Identical invocations produce byte-identical CSV output.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Parser;

use elmkit::prelude::*;

/// Environment variable naming the default data directory.
const DATA_DIR_ENV: &str = "ELMBENCH_DATA_DIR";

#[derive(Parser, Debug)]
#[command(
    name = "elmbench",
    about = "Accuracy/time sweeps for ELM and CIW-ELM classifiers",
    after_help = "Data files are looked up in --data-dir (default: $ELMBENCH_DATA_DIR, then ./data)\n\
                  under their canonical names: train-images-idx3-ubyte, train-labels-idx1-ubyte,\n\
                  t10k-images-idx3-ubyte, t10k-labels-idx1-ubyte, iris.data, wine.data, abalone.data."
)]
struct Args {
    /// Dataset to benchmark: mnist, iris, wine or abalone.
    #[arg(long)]
    dataset: String,

    /// Input-weight scheme: elm (uniform random) or ciw (computed).
    #[arg(long)]
    method: String,

    /// Hidden-layer sizes, comma separated (e.g. 100,300,700).
    #[arg(long, value_delimiter = ',', required = true)]
    hidden: Vec<usize>,

    /// Repeats per hidden size. Default: 3 for mnist, 10 for UCI sets.
    #[arg(long)]
    repeats: Option<usize>,

    /// Base seed; every cell derives its own run seed from it.
    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Hidden activation: tanh, sigmoid or relu.
    #[arg(long, default_value = "tanh")]
    activation: String,

    /// Ridge strength for the output solve; 0 selects the plain
    /// pseudoinverse.
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,

    /// Feature scaling: auto (dataset default), raw or zscore.
    #[arg(long, default_value = "auto")]
    scaling: String,

    /// CIW block allocation: proportional or equal.
    #[arg(long, default_value = "proportional")]
    allocation: String,

    /// Train fraction for the UCI stratified split.
    #[arg(long, default_value_t = 0.667)]
    split: f64,

    /// Directory holding the data files under their canonical names.
    #[arg(long)]
    data_dir: Option<PathBuf>,

    /// MNIST training images (overrides --data-dir).
    #[arg(long)]
    train_images: Option<PathBuf>,

    /// MNIST training labels.
    #[arg(long)]
    train_labels: Option<PathBuf>,

    /// MNIST test images.
    #[arg(long)]
    test_images: Option<PathBuf>,

    /// MNIST test labels.
    #[arg(long)]
    test_labels: Option<PathBuf>,

    /// UCI csv file (overrides --data-dir).
    #[arg(long)]
    csv: Option<PathBuf>,

    /// Write per-run rows to this CSV path (plus `<stem>_summary.csv`).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Run remaining cells after a failure instead of aborting.
    #[arg(long, default_value_t = false)]
    keep_going: bool,

    /// Sweep cells run on a pool of this many workers. Keep at 1 when
    /// timing matters.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

fn data_dir(args: &Args) -> PathBuf {
    args.data_dir
        .clone()
        .or_else(|| std::env::var_os(DATA_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("data"))
}

fn resolve_source(args: &Args, dataset: DatasetName) -> Result<DataSource> {
    let dir = data_dir(args);
    match dataset {
        DatasetName::Mnist => {
            let [ti, tl, vi, vl] = mnist_paths(&dir);
            Ok(DataSource::Idx {
                train_images: args.train_images.clone().unwrap_or(ti),
                train_labels: args.train_labels.clone().unwrap_or(tl),
                test_images: args.test_images.clone().unwrap_or(vi),
                test_labels: args.test_labels.clone().unwrap_or(vl),
            })
        }
        _ => {
            let schema = dataset.csv_schema().expect("non-mnist dataset");
            let path = args
                .csv
                .clone()
                .unwrap_or_else(|| dir.join(format!("{dataset}.data")));
            Ok(DataSource::Csv { path, schema })
        }
    }
}

fn build_spec(args: &Args) -> Result<SweepSpec> {
    let dataset: DatasetName = args.dataset.parse()?;
    let method: Method = args.method.parse()?;
    let activation: ActivationKind = args.activation.parse()?;
    let allocation = args.allocation.parse()?;
    let scaling = match args.scaling.as_str() {
        "auto" => None,
        other => Some(other.parse::<ScalingKind>()?),
    };
    if !(args.split > 0.0 && args.split < 1.0) {
        bail!("--split must be in (0, 1), got {}", args.split);
    }
    if args.lambda < 0.0 {
        bail!("--lambda must be nonnegative, got {}", args.lambda);
    }
    let source = resolve_source(args, dataset)?;
    Ok(SweepSpec {
        dataset,
        method,
        hidden_sizes: args.hidden.clone(),
        repeats: args.repeats.unwrap_or_else(|| dataset.default_repeats()),
        base_seed: args.seed,
        activation,
        lambda: args.lambda,
        scaling,
        allocation,
        split_fraction: args.split,
        workers: args.workers.max(1),
        keep_going: args.keep_going,
        source,
    })
}

fn write_outputs(report: &SweepReport, out: &Path) -> Result<()> {
    std::fs::write(out, csv_rows(report))
        .with_context(|| format!("writing {}", out.display()))?;
    let summary_path = summary_path(out);
    std::fs::write(&summary_path, csv_summary(report))
        .with_context(|| format!("writing {}", summary_path.display()))?;
    Ok(())
}

fn summary_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "report".into());
    let ext = out.extension().map(|s| s.to_string_lossy().into_owned());
    let name = match ext {
        Some(ext) => format!("{stem}_summary.{ext}"),
        None => format!("{stem}_summary"),
    };
    out.with_file_name(name)
}

fn main() {
    let args = Args::parse();
    match run(&args) {
        Ok(had_failures) => {
            if had_failures {
                std::process::exit(1);
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}

fn run(args: &Args) -> Result<bool> {
    let spec = build_spec(args)?;
    let report = run_sweep(&spec).context("sweep failed")?;

    print!("{}", render_table(&report));
    if let Some(out) = &args.out {
        write_outputs(&report, out)?;
        eprintln!(
            "wrote {} rows to {} (summary alongside)",
            report.rows.len(),
            out.display()
        );
    }
    for failure in &report.failures {
        eprintln!("cell failed: {failure}");
    }
    Ok(!report.failures.is_empty())
}
