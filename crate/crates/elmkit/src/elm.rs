//! Single-hidden-layer extreme learning machine: fixed input weights, a
//! nonlinear hidden layer, and output weights solved in closed form.
//!
//! Training never iterates. The hidden activations `H = g(X W1^T)` are
//! computed once and the output weights come from the minimum-norm
//! least-squares solution `W2^T = H^+ T` (or a ridge solve when a
//! regularization strength is given). When `H` is tall the solve runs on
//! the `d x d` normal-equations system instead of decomposing `H`
//! directly; the two routes agree to well below the solver tolerance and
//! the small system keeps the cost at `O(d^2)` per training column.

use std::fmt;
use std::fs;
use std::io::{self, Read};
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;

use crate::dataio::{one_hot, Dataset};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::numerics::{pseudoinverse, ridge_solve};
use crate::seeding;

/// Elementwise hidden-layer nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ActivationKind {
    #[default]
    Tanh,
    Sigmoid,
    Relu,
    /// Linear passthrough. Diagnostic use; turns the network into a linear
    /// model.
    Identity,
}

impl ActivationKind {
    #[inline]
    pub fn apply(&self, z: f64) -> f64 {
        match self {
            ActivationKind::Tanh => z.tanh(),
            ActivationKind::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            ActivationKind::Relu => z.max(0.0),
            ActivationKind::Identity => z,
        }
    }

    pub fn apply_matrix(&self, m: &Matrix) -> Matrix {
        m.map(|z| self.apply(z))
    }

    fn tag(&self) -> u8 {
        match self {
            ActivationKind::Tanh => 0,
            ActivationKind::Sigmoid => 1,
            ActivationKind::Relu => 2,
            ActivationKind::Identity => 3,
        }
    }

    fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(ActivationKind::Tanh),
            1 => Some(ActivationKind::Sigmoid),
            2 => Some(ActivationKind::Relu),
            3 => Some(ActivationKind::Identity),
            _ => None,
        }
    }
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ActivationKind::Tanh => "tanh",
            ActivationKind::Sigmoid => "sigmoid",
            ActivationKind::Relu => "relu",
            ActivationKind::Identity => "identity",
        };
        f.write_str(s)
    }
}

impl FromStr for ActivationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(ActivationKind::Tanh),
            "sigmoid" => Ok(ActivationKind::Sigmoid),
            "relu" => Ok(ActivationKind::Relu),
            "identity" => Ok(ActivationKind::Identity),
            other => Err(Error::InvalidArgument(format!(
                "unknown activation {other:?} (expected tanh, sigmoid or relu)"
            ))),
        }
    }
}

/// A trained network. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct ElmModel {
    /// `d x k` input weights, bias column included in `k`.
    pub input_weights: Matrix,
    /// `C x d` output weights.
    pub output_weights: Matrix,
    pub activation: ActivationKind,
}

impl ElmModel {
    pub fn hidden_size(&self) -> usize {
        self.input_weights.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.input_weights.cols()
    }

    pub fn class_count(&self) -> usize {
        self.output_weights.rows()
    }
}

/// What training cost and how well it fitted.
#[derive(Debug, Clone, Copy)]
pub struct TrainReport {
    /// Wall-clock seconds spent on hidden activations plus the output
    /// solve. Input-weight synthesis is timed by the caller so that both
    /// weight schemes are measured over the same span.
    pub train_time: f64,
    /// Frobenius norm of `H W2^T - T` on the training data.
    pub residual_norm: f64,
    pub hidden_size: usize,
}

/// Uniform input weights on the open interval `(-half_range, half_range)`,
/// deterministic in `seed`.
pub fn random_input_weights(
    input_dim: usize,
    hidden_size: usize,
    half_range: f64,
    seed: u64,
) -> Result<Matrix> {
    if input_dim == 0 || hidden_size == 0 {
        return Err(Error::InvalidArgument(
            "input weights need input_dim >= 1 and hidden_size >= 1".into(),
        ));
    }
    if !(half_range > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "half_range must be positive, got {half_range}"
        )));
    }
    let mut rng = seeding::rng_from(seed);
    Ok(Matrix::from_fn(hidden_size, input_dim, |_, _| {
        // rand's unit sample is [0, 1); reject 0 to keep the interval open
        // on both ends.
        loop {
            let u: f64 = rng.random();
            if u != 0.0 {
                return (2.0 * u - 1.0) * half_range;
            }
        }
    }))
}

/// Hidden activations `H = g(X W1^T)`, shape `n x d`.
pub fn hidden_activations(
    input_weights: &Matrix,
    x: &Matrix,
    activation: ActivationKind,
) -> Result<Matrix> {
    if input_weights.cols() != x.cols() {
        return Err(Error::DimMismatch {
            op: "hidden_activations",
            left: x.shape(),
            right: input_weights.shape(),
        });
    }
    let z = x.matmul_nt(input_weights)?;
    Ok(activation.apply_matrix(&z))
}

/// Solves for the output weights, returned as `C x d`.
///
/// `lambda = 0` takes the unregularized pseudoinverse route; positive
/// `lambda` the ridge route. Tall `H` goes through the normal-equations
/// system `(H^T H)^+ H^T T`, which equals `H^+ T` exactly in the algebra
/// and to solver precision in floating point.
pub fn solve_output_weights(h: &Matrix, targets: &Matrix, lambda: f64) -> Result<Matrix> {
    if h.rows() != targets.rows() {
        return Err(Error::DimMismatch {
            op: "solve_output_weights",
            left: h.shape(),
            right: targets.shape(),
        });
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda must be nonnegative, got {lambda}"
        )));
    }
    let w2_t = if lambda > 0.0 {
        ridge_solve(h, targets, lambda)?
    } else if h.rows() >= h.cols() {
        let gram = h.matmul_tn(h)?;
        let rhs = h.matmul_tn(targets)?;
        pseudoinverse(&gram, 0.0)?.matmul(&rhs)?
    } else {
        pseudoinverse(h, 0.0)?.matmul(targets)?
    };
    Ok(w2_t.transpose())
}

/// Trains a model around the given (already synthesized) input weights.
/// The dataset features must match `input_weights` in width; the usual
/// pipeline standardizes and appends the bias column before this point.
pub fn train(
    input_weights: Matrix,
    trainset: &Dataset,
    activation: ActivationKind,
    lambda: f64,
) -> Result<(ElmModel, TrainReport)> {
    if trainset.is_empty() {
        return Err(Error::EmptyMatrix { op: "train" });
    }
    let started = Instant::now();
    let h = hidden_activations(&input_weights, &trainset.features, activation)?;
    let targets = one_hot(&trainset.labels, trainset.class_count)?;
    let output_weights = solve_output_weights(&h, &targets.matrix, lambda)?;

    let fitted = h.matmul_nt(&output_weights)?;
    let mut residual_sq = 0.0;
    for (a, b) in fitted.data().iter().zip(targets.matrix.data()) {
        let d = a - b;
        residual_sq += d * d;
    }
    let report = TrainReport {
        train_time: started.elapsed().as_secs_f64(),
        residual_norm: residual_sq.sqrt(),
        hidden_size: input_weights.rows(),
    };
    let model = ElmModel {
        input_weights,
        output_weights,
        activation,
    };
    Ok((model, report))
}

/// Raw output-layer scores, `n x C`.
pub fn predict_scores(model: &ElmModel, x: &Matrix) -> Result<Matrix> {
    let h = hidden_activations(&model.input_weights, x, model.activation)?;
    h.matmul_nt(&model.output_weights)
}

/// Argmax over scores; ties resolve to the lowest class index.
pub fn classify(model: &ElmModel, x: &Matrix) -> Result<Vec<usize>> {
    let scores = predict_scores(model, x)?;
    Ok((0..scores.rows())
        .map(|i| argmax(scores.row(i)))
        .collect())
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (j, &v) in row.iter().enumerate() {
        if v > best_v {
            best_v = v;
            best = j;
        }
    }
    best
}

/// Fraction of agreeing positions, in `[0, 1]`.
pub fn accuracy(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::InvalidArgument(format!(
            "accuracy: {} predictions vs {} labels",
            predicted.len(),
            truth.len()
        )));
    }
    if predicted.is_empty() {
        return Err(Error::InvalidArgument(
            "accuracy over an empty set".into(),
        ));
    }
    let correct = predicted
        .iter()
        .zip(truth)
        .filter(|(a, b)| a == b)
        .count();
    Ok(correct as f64 / predicted.len() as f64)
}

const MODEL_MAGIC: &[u8; 4] = b"ELMK";
const MODEL_VERSION: u32 = 1;

impl ElmModel {
    /// Serializes as a small versioned binary container: magic, version,
    /// activation tag, dims, then both weight matrices as little-endian
    /// f64.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = Vec::new();
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
        out.push(self.activation.tag());
        out.extend_from_slice(&(self.hidden_size() as u64).to_le_bytes());
        out.extend_from_slice(&(self.input_dim() as u64).to_le_bytes());
        out.extend_from_slice(&(self.class_count() as u64).to_le_bytes());
        for v in self.input_weights.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for v in self.output_weights.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        fs::write(path, out)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut f = io::BufReader::new(fs::File::open(path)?);
        let bad = |reason: &str| Error::FileFormat {
            path: path.to_owned(),
            reason: reason.to_string(),
        };

        let mut magic = [0u8; 4];
        f.read_exact(&mut magic)
            .map_err(|_| bad("truncated header"))?;
        if &magic != MODEL_MAGIC {
            return Err(bad("not an elmkit model file"));
        }
        let mut u32buf = [0u8; 4];
        f.read_exact(&mut u32buf)
            .map_err(|_| bad("truncated header"))?;
        let version = u32::from_le_bytes(u32buf);
        if version != MODEL_VERSION {
            return Err(bad(&format!("unsupported model version {version}")));
        }
        let mut tag = [0u8; 1];
        f.read_exact(&mut tag).map_err(|_| bad("truncated header"))?;
        let activation =
            ActivationKind::from_tag(tag[0]).ok_or_else(|| bad("unknown activation tag"))?;

        let mut u64buf = [0u8; 8];
        let mut read_dim = |f: &mut io::BufReader<fs::File>| -> Result<usize> {
            f.read_exact(&mut u64buf)
                .map_err(|_| bad("truncated header"))?;
            Ok(u64::from_le_bytes(u64buf) as usize)
        };
        let d = read_dim(&mut f)?;
        let k = read_dim(&mut f)?;
        let c = read_dim(&mut f)?;

        let read_matrix = |f: &mut io::BufReader<fs::File>,
                           rows: usize,
                           cols: usize|
         -> Result<Matrix> {
            let mut data = vec![0.0f64; rows * cols];
            let mut buf = [0u8; 8];
            for v in &mut data {
                f.read_exact(&mut buf)
                    .map_err(|_| bad("truncated weight data"))?;
                *v = f64::from_le_bytes(buf);
            }
            Matrix::from_vec(rows, cols, data)
        };
        let input_weights = read_matrix(&mut f, d, k)?;
        let output_weights = read_matrix(&mut f, c, d)?;
        Ok(ElmModel {
            input_weights,
            output_weights,
            activation,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::Dataset;

    fn toy_separable() -> Dataset {
        // two point clouds on a line, bias column included
        let rows = vec![
            vec![-1.0, 1.0],
            vec![-0.8, 1.0],
            vec![0.8, 1.0],
            vec![1.0, 1.0],
        ];
        Dataset::new(
            Matrix::from_rows(&rows).unwrap(),
            vec![0, 0, 1, 1],
            2,
            "toy",
        )
        .unwrap()
    }

    #[test]
    fn random_weights_deterministic_and_in_open_range() {
        let a = random_input_weights(2, 3, 1.0, 99).unwrap();
        let b = random_input_weights(2, 3, 1.0, 99).unwrap();
        assert_eq!(a.data(), b.data());
        assert!(a.data().iter().all(|&v| v > -1.0 && v < 1.0));
        let c = random_input_weights(2, 3, 1.0, 100).unwrap();
        assert_ne!(a.data(), c.data());
    }

    #[test]
    fn random_weights_mean_near_zero() {
        // law of large numbers: 1e5 entries, mean within 0.02
        let w = random_input_weights(100, 1000, 1.0, 7).unwrap();
        let mean = w.data().iter().sum::<f64>() / w.data().len() as f64;
        assert!(mean.abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn random_weights_reject_bad_arguments() {
        assert!(random_input_weights(0, 3, 1.0, 0).is_err());
        assert!(random_input_weights(2, 3, 0.0, 0).is_err());
        assert!(random_input_weights(2, 3, -1.0, 0).is_err());
    }

    #[test]
    fn identity_weights_with_identity_activation_pass_input_through() {
        let x = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let h = hidden_activations(&Matrix::identity(2), &x, ActivationKind::Identity).unwrap();
        assert_eq!(h, x);
    }

    #[test]
    fn tanh_maps_zero_rows_to_zero() {
        let x = Matrix::zeros(1, 3);
        let w = random_input_weights(3, 4, 1.0, 5).unwrap();
        let h = hidden_activations(&w, &x, ActivationKind::Tanh).unwrap();
        assert_eq!(h.max_abs(), 0.0);
    }

    #[test]
    fn hidden_activation_matches_scalar_oracle() {
        let w = Matrix::from_vec(1, 3, vec![0.3, -0.7, 0.2]).unwrap();
        let x = Matrix::from_vec(1, 3, vec![1.5, 0.4, -2.0]).unwrap();
        let h = hidden_activations(&w, &x, ActivationKind::Tanh).unwrap();
        let dot: f64 = 0.3 * 1.5 + (-0.7) * 0.4 + 0.2 * (-2.0);
        assert!((h.get(0, 0) - dot.tanh()).abs() < 1e-15);
    }

    #[test]
    fn hidden_activations_reject_width_mismatch() {
        let w = Matrix::zeros(4, 3);
        let x = Matrix::zeros(2, 5);
        assert!(hidden_activations(&w, &x, ActivationKind::Tanh).is_err());
    }

    #[test]
    fn solve_identity_system() {
        let i2 = Matrix::identity(2);
        let w2 = solve_output_weights(&i2, &i2, 0.0).unwrap();
        assert!(w2.max_abs_diff(&Matrix::identity(2)) <= 1e-12);
    }

    #[test]
    fn solve_consistent_overdetermined_system_exactly() {
        let h = Matrix::from_vec(2, 1, vec![1.0, 1.0]).unwrap();
        let t = Matrix::from_vec(2, 1, vec![2.0, 2.0]).unwrap();
        let w2 = solve_output_weights(&h, &t, 0.0).unwrap();
        assert!((w2.get(0, 0) - 2.0).abs() <= 1e-12);

        // lambda = 0 through the pseudoinverse also solves h = t = ones
        let t1 = Matrix::from_vec(2, 1, vec![1.0, 1.0]).unwrap();
        let w1 = solve_output_weights(&h, &t1, 0.0).unwrap();
        assert!((w1.get(0, 0) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn solve_satisfies_normal_equations() {
        use rand::Rng;
        let mut rng = seeding::rng_from(3);
        let h = Matrix::from_fn(20, 5, |_, _| rng.random::<f64>() - 0.5);
        let t = Matrix::from_fn(20, 3, |_, _| rng.random::<f64>() - 0.5);
        let w2 = solve_output_weights(&h, &t, 0.0).unwrap();
        let fitted = h.matmul_nt(&w2).unwrap();
        let grad = h.matmul_tn(&residual(&fitted, &t)).unwrap();
        assert!(grad.max_abs() <= 1e-8, "gradient {}", grad.max_abs());
    }

    #[test]
    fn gram_route_matches_direct_pseudoinverse_route() {
        use rand::Rng;
        let mut rng = seeding::rng_from(17);
        let h = Matrix::from_fn(30, 6, |_, _| rng.random::<f64>() - 0.5);
        let t = Matrix::from_fn(30, 2, |_, _| rng.random::<f64>() - 0.5);
        let via_gram = solve_output_weights(&h, &t, 0.0).unwrap();
        let direct = pseudoinverse(&h, 0.0)
            .unwrap()
            .matmul(&t)
            .unwrap()
            .transpose();
        assert!(via_gram.max_abs_diff(&direct) <= 1e-6);
    }

    fn residual(fitted: &Matrix, targets: &Matrix) -> Matrix {
        Matrix::from_fn(fitted.rows(), fitted.cols(), |i, j| {
            fitted.get(i, j) - targets.get(i, j)
        })
    }

    #[test]
    fn toy_separable_set_trains_to_full_accuracy() {
        let ds = toy_separable();
        let w1 = random_input_weights(2, 8, 1.0, 21).unwrap();
        let (model, report) = train(w1, &ds, ActivationKind::Tanh, 0.0).unwrap();
        let pred = classify(&model, &ds.features).unwrap();
        assert_eq!(accuracy(&pred, &ds.labels).unwrap(), 1.0);
        assert!(report.train_time >= 0.0);
        assert_eq!(report.hidden_size, 8);
    }

    #[test]
    fn training_is_bitwise_deterministic() {
        let ds = toy_separable();
        let w1 = random_input_weights(2, 4, 1.0, 33).unwrap();
        let (m1, _) = train(w1.clone(), &ds, ActivationKind::Tanh, 0.0).unwrap();
        let (m2, _) = train(w1, &ds, ActivationKind::Tanh, 0.0).unwrap();
        assert_eq!(m1.output_weights.data(), m2.output_weights.data());
    }

    #[test]
    fn residual_is_monotone_in_capacity() {
        let ds = toy_separable();
        let mut last = f64::INFINITY;
        for d in [1usize, 2, 4, 8] {
            let w1 = random_input_weights(2, d, 1.0, 55).unwrap();
            let (_, report) = train(w1, &ds, ActivationKind::Tanh, 0.0).unwrap();
            assert!(
                report.residual_norm <= last + 1e-9,
                "residual grew at d={d}: {} > {last}",
                report.residual_norm
            );
            last = report.residual_norm;
        }
    }

    #[test]
    fn interpolation_regime_fits_training_set() {
        // d >= n with full-rank hidden activations: exact interpolation
        let ds = toy_separable();
        let w1 = random_input_weights(2, 16, 1.0, 77).unwrap();
        let (model, report) = train(w1, &ds, ActivationKind::Tanh, 0.0).unwrap();
        let pred = classify(&model, &ds.features).unwrap();
        assert_eq!(accuracy(&pred, &ds.labels).unwrap(), 1.0);
        assert!(report.residual_norm <= 1e-6, "{}", report.residual_norm);
    }

    #[test]
    fn classify_breaks_ties_toward_lowest_index() {
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(argmax(&[0.1, 0.9, 0.3]), 1);
    }

    #[test]
    fn accuracy_contract() {
        assert_eq!(accuracy(&[1, 2, 3], &[1, 2, 3]).unwrap(), 1.0);
        assert_eq!(accuracy(&[1, 2, 3], &[1, 2, 0]).unwrap(), 2.0 / 3.0);
        assert!(accuracy(&[1], &[1, 2]).is_err());
        assert!(accuracy(&[], &[]).is_err());
    }

    #[test]
    fn model_save_load_round_trips_exactly() {
        let ds = toy_separable();
        let w1 = random_input_weights(2, 4, 1.0, 8).unwrap();
        let (model, _) = train(w1, &ds, ActivationKind::Sigmoid, 0.01).unwrap();
        let file = tempfile::NamedTempFile::new().unwrap();
        model.save(file.path()).unwrap();
        let loaded = ElmModel::load(file.path()).unwrap();
        assert_eq!(model, loaded);
    }

    #[test]
    fn model_load_rejects_foreign_files() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        io::Write::write_all(&mut file, b"not a model").unwrap();
        let err = ElmModel::load(file.path()).unwrap_err().to_string();
        assert!(err.contains("not an elmkit model"), "{err}");
    }
}
