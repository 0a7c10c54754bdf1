//! Computed input weights: hidden-layer weight vectors synthesized as
//! random sign-combinations of training samples, one block of neurons per
//! class.
//!
//! For class `c` with `K` training rows `X_c` and a block of `B` neurons,
//! draw a `B x K` matrix `R` of independent signs in `{-1, +1}` and take
//! `W_c = R X_c`, then scale every row to unit Euclidean norm. Each hidden
//! neuron therefore points along a random signed sum of that class's
//! samples, which is the same functional form backpropagation and linear
//! SVMs arrive at for their input-layer weights. Blocks are concatenated
//! in ascending class order. The whole construction is closed-form and
//! deterministic in the configured seed: class `c` draws from the
//! sub-seed `mix(seed, [TAG_CIW_CLASS, c])`, so one class's block never
//! depends on another class's data or ordering.

use rand::Rng;

use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::numerics::{l2_normalize_rows, NormalizedRows};
use crate::seeding::{self, TAG_CIW_CLASS};

/// How hidden neurons are divided among classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BlockPolicy {
    /// `d / C` neurons per class; errors unless `C` divides `d`.
    Equal,
    /// Largest-remainder shares proportional to class sizes, minimum one
    /// neuron per class.
    #[default]
    Proportional,
}

impl std::str::FromStr for BlockPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "equal" => Ok(BlockPolicy::Equal),
            "proportional" => Ok(BlockPolicy::Proportional),
            other => Err(Error::InvalidArgument(format!(
                "unknown allocation policy {other:?} (expected equal or proportional)"
            ))),
        }
    }
}

/// Configuration for one weight synthesis.
#[derive(Debug, Clone, Copy)]
pub struct CiwConfig {
    pub hidden_size: usize,
    pub seed: u64,
    pub allocation: BlockPolicy,
}

/// Per-class block sizes; entries are >= 1 and sum to the hidden size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockAllocation {
    sizes: Vec<usize>,
}

impl BlockAllocation {
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn total(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// Start offset of each class's block in the concatenated matrix.
    pub fn offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.sizes.len());
        let mut acc = 0;
        for &s in &self.sizes {
            offsets.push(acc);
            acc += s;
        }
        offsets
    }
}

/// Divides `d` hidden neurons into one block per class.
pub fn allocate_blocks(
    class_counts: &[usize],
    hidden_size: usize,
    policy: BlockPolicy,
) -> Result<BlockAllocation> {
    let classes = class_counts.len();
    if classes == 0 || class_counts.iter().any(|&c| c == 0) {
        return Err(Error::InvalidArgument(
            "allocate_blocks needs at least one sample per class".into(),
        ));
    }
    if hidden_size < classes {
        return Err(Error::HiddenTooSmall {
            hidden: hidden_size,
            classes,
        });
    }
    match policy {
        BlockPolicy::Equal => {
            if hidden_size % classes != 0 {
                return Err(Error::UnevenBlocks {
                    hidden: hidden_size,
                    classes,
                });
            }
            Ok(BlockAllocation {
                sizes: vec![hidden_size / classes; classes],
            })
        }
        BlockPolicy::Proportional => {
            let total: usize = class_counts.iter().sum();
            let quotas: Vec<f64> = class_counts
                .iter()
                .map(|&c| hidden_size as f64 * c as f64 / total as f64)
                .collect();
            // floor with a floor of one, then repair the sum: shrink the
            // most over-quota blocks, grow the most under-quota ones.
            let mut sizes: Vec<usize> = quotas
                .iter()
                .map(|q| (q.floor() as usize).max(1))
                .collect();
            while sizes.iter().sum::<usize>() > hidden_size {
                let c = (0..classes)
                    .filter(|&c| sizes[c] > 1)
                    .max_by(|&a, &b| {
                        let da = sizes[a] as f64 - quotas[a];
                        let db = sizes[b] as f64 - quotas[b];
                        da.partial_cmp(&db).unwrap().then(b.cmp(&a))
                    })
                    .expect("hidden_size >= classes keeps a shrinkable block");
                sizes[c] -= 1;
            }
            let mut order: Vec<usize> = (0..classes).collect();
            order.sort_by(|&a, &b| {
                let fa = quotas[a] - sizes[a] as f64;
                let fb = quotas[b] - sizes[b] as f64;
                fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
            });
            let mut deficit = hidden_size - sizes.iter().sum::<usize>();
            for &c in order.iter().cycle() {
                if deficit == 0 {
                    break;
                }
                sizes[c] += 1;
                deficit -= 1;
            }
            Ok(BlockAllocation { sizes })
        }
    }
}

/// `p x h` matrix of independent signs in `{-1, +1}`, deterministic in
/// `seed`.
pub fn random_sign_matrix(p: usize, h: usize, seed: u64) -> Matrix {
    let mut rng = seeding::rng_from(seed);
    Matrix::from_fn(p, h, |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 })
}

/// The deterministic core of the synthesis: combines class samples with an
/// explicit sign matrix and row-normalizes. Rows that cancel to zero are
/// flagged and passed through.
pub fn sign_combination_weights(class_data: &Matrix, signs: &Matrix) -> Result<NormalizedRows> {
    if signs.cols() != class_data.rows() {
        return Err(Error::DimMismatch {
            op: "sign_combination_weights",
            left: signs.shape(),
            right: class_data.shape(),
        });
    }
    Ok(l2_normalize_rows(&signs.matmul(class_data)?))
}

/// Weights for one class block: `p` unit-norm random signed sums of the
/// class's training rows.
pub fn class_block_weights(class_data: &Matrix, p: usize, seed: u64) -> Result<NormalizedRows> {
    if class_data.rows() == 0 || p == 0 {
        return Err(Error::InvalidArgument(
            "class_block_weights needs at least one sample and one neuron".into(),
        ));
    }
    let signs = random_sign_matrix(p, class_data.rows(), seed);
    sign_combination_weights(class_data, &signs)
}

/// The full synthesized input-weight matrix plus diagnostics.
#[derive(Debug, Clone)]
pub struct CiwWeights {
    /// `d x k`, blocks concatenated in ascending class order.
    pub weights: Matrix,
    /// Rows (by position in `weights`) whose sign-sum cancelled to zero.
    /// Statistically negligible for real-valued data with two or more
    /// samples per class; the benchmark datasets produce none.
    pub degenerate_rows: Vec<usize>,
    pub allocation: BlockAllocation,
}

/// Synthesizes input weights for the whole training set. The features are
/// used as-is; run the standardization and bias steps first.
pub fn ciw_input_weights(trainset: &Dataset, config: &CiwConfig) -> Result<CiwWeights> {
    let counts = trainset.class_counts();
    let allocation = allocate_blocks(&counts, config.hidden_size, config.allocation)?;

    let mut blocks = Vec::with_capacity(trainset.class_count);
    let mut degenerate_rows = Vec::new();
    let mut offset = 0;
    for class in 0..trainset.class_count {
        let class_data = trainset
            .features
            .select_rows(&trainset.class_indices(class));
        let sub_seed = seeding::mix(config.seed, &[TAG_CIW_CLASS, class as u64]);
        let block = class_block_weights(&class_data, allocation.sizes()[class], sub_seed)?;
        degenerate_rows.extend(block.zero_rows.iter().map(|r| r + offset));
        offset += block.matrix.rows();
        blocks.push(block.matrix);
    }
    let refs: Vec<&Matrix> = blocks.iter().collect();
    Ok(CiwWeights {
        weights: Matrix::vstack(&refs)?,
        degenerate_rows,
        allocation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::Dataset;

    #[test]
    fn equal_split_across_equal_classes() {
        let alloc = allocate_blocks(&[50, 50, 50], 9, BlockPolicy::Equal).unwrap();
        assert_eq!(alloc.sizes(), &[3, 3, 3]);
        let alloc = allocate_blocks(&[50, 50, 50], 9, BlockPolicy::Proportional).unwrap();
        assert_eq!(alloc.sizes(), &[3, 3, 3]);
    }

    #[test]
    fn exact_proportions_when_they_divide() {
        let alloc = allocate_blocks(&[10, 20, 30], 6, BlockPolicy::Proportional).unwrap();
        assert_eq!(alloc.sizes(), &[1, 2, 3]);
    }

    #[test]
    fn min_one_floor_with_extreme_imbalance() {
        let alloc = allocate_blocks(&[1, 1, 98], 10, BlockPolicy::Proportional).unwrap();
        assert_eq!(alloc.sizes(), &[1, 1, 8]);
    }

    #[test]
    fn proportional_allocation_matches_enumeration_oracle() {
        // exhaustive check on small instances: result sums to d, floors at
        // one, and no other valid allocation deviates less from the quotas
        let cases: &[(&[usize], usize)] = &[
            (&[1, 1, 98], 10),
            (&[5, 7], 4),
            (&[3, 3, 3, 91], 7),
            (&[10, 20, 30], 7),
            (&[2, 2, 2], 10),
        ];
        for &(counts, d) in cases {
            let got = allocate_blocks(counts, d, BlockPolicy::Proportional).unwrap();
            assert_eq!(got.total(), d);
            assert!(got.sizes().iter().all(|&s| s >= 1));
            let total: usize = counts.iter().sum();
            let quota =
                |c: usize| d as f64 * counts[c] as f64 / total as f64;
            let deviation = |sizes: &[usize]| -> f64 {
                sizes
                    .iter()
                    .enumerate()
                    .map(|(c, &s)| (s as f64 - quota(c)).abs())
                    .sum()
            };
            let got_dev = deviation(got.sizes());
            let best = enumerate_allocations(counts.len(), d)
                .into_iter()
                .map(|s| deviation(&s))
                .fold(f64::INFINITY, f64::min);
            assert!(
                got_dev <= best + 1e-9,
                "{counts:?} d={d}: deviation {got_dev} vs optimal {best} ({:?})",
                got.sizes()
            );
        }
    }

    fn enumerate_allocations(classes: usize, d: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut current = vec![1usize; classes];
        fn rec(current: &mut Vec<usize>, idx: usize, left: usize, out: &mut Vec<Vec<usize>>) {
            if idx == current.len() - 1 {
                current[idx] = left;
                out.push(current.clone());
                return;
            }
            let remaining_min = current.len() - idx - 1;
            for v in 1..=left.saturating_sub(remaining_min) {
                current[idx] = v;
                rec(current, idx + 1, left - v, out);
            }
        }
        rec(&mut current, 0, d, &mut out);
        out.retain(|s| s.iter().all(|&v| v >= 1));
        out
    }

    #[test]
    fn allocation_rejects_bad_inputs() {
        assert!(allocate_blocks(&[5, 5], 1, BlockPolicy::Proportional).is_err());
        assert!(allocate_blocks(&[5, 5, 5], 10, BlockPolicy::Equal).is_err());
        assert!(allocate_blocks(&[], 4, BlockPolicy::Equal).is_err());
        assert!(allocate_blocks(&[3, 0], 4, BlockPolicy::Proportional).is_err());
    }

    #[test]
    fn sign_matrix_codomain_and_determinism() {
        let a = random_sign_matrix(7, 11, 42);
        assert!(a.data().iter().all(|&v| v == 1.0 || v == -1.0));
        let b = random_sign_matrix(7, 11, 42);
        assert_eq!(a.data(), b.data());
        let c = random_sign_matrix(7, 11, 43);
        assert_ne!(a.data(), c.data());
    }

    #[test]
    fn sign_matrix_is_unbiased() {
        let a = random_sign_matrix(250, 400, 3); // 1e5 draws
        let mean = a.data().iter().sum::<f64>() / a.data().len() as f64;
        assert!(mean.abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn single_sample_single_neuron_block() {
        let data = Matrix::from_vec(1, 2, vec![3.0, 4.0]).unwrap();
        let signs = Matrix::from_vec(1, 1, vec![1.0]).unwrap();
        let w = sign_combination_weights(&data, &signs).unwrap();
        assert!(w.zero_rows.is_empty());
        assert!((w.matrix.get(0, 0) - 0.6).abs() < 1e-15);
        assert!((w.matrix.get(0, 1) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn two_sample_sum_block() {
        let data = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let signs = Matrix::from_vec(1, 2, vec![1.0, 1.0]).unwrap();
        let w = sign_combination_weights(&data, &signs).unwrap();
        let inv_sqrt2 = 1.0 / 2.0f64.sqrt();
        assert!((w.matrix.get(0, 0) - inv_sqrt2).abs() < 1e-15);
        assert!((w.matrix.get(0, 1) - inv_sqrt2).abs() < 1e-15);
    }

    #[test]
    fn cancelling_signs_flag_the_row_and_pass_it_through() {
        let data = Matrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let signs = Matrix::from_vec(1, 2, vec![1.0, -1.0]).unwrap();
        let w = sign_combination_weights(&data, &signs).unwrap();
        assert_eq!(w.zero_rows, vec![0]);
        assert_eq!(w.matrix.row(0), &[0.0, 0.0]);
    }

    fn synthetic_dataset(per_class: &[usize], dims: usize) -> Dataset {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (c, &n) in per_class.iter().enumerate() {
            for i in 0..n {
                let row: Vec<f64> = (0..dims)
                    .map(|j| ((c * 31 + i * 7 + j * 3) % 13) as f64 - 6.0 + c as f64)
                    .collect();
                rows.push(row);
                labels.push(c);
            }
        }
        Dataset::new(
            Matrix::from_rows(&rows).unwrap(),
            labels,
            per_class.len(),
            "synthetic",
        )
        .unwrap()
    }

    #[test]
    fn full_synthesis_shape_block_structure_and_unit_rows() {
        let ds = synthetic_dataset(&[12, 8, 20], 5);
        let config = CiwConfig {
            hidden_size: 9,
            seed: 5,
            allocation: BlockPolicy::Proportional,
        };
        let w = ciw_input_weights(&ds, &config).unwrap();
        assert_eq!(w.weights.shape(), (9, 5));
        assert_eq!(w.allocation.total(), 9);
        assert!(w.degenerate_rows.is_empty());
        for i in 0..9 {
            let norm: f64 = w.weights.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() <= 1e-12, "row {i} norm {norm}");
        }
    }

    #[test]
    fn synthesis_is_bitwise_deterministic() {
        let ds = synthetic_dataset(&[10, 10], 4);
        let config = CiwConfig {
            hidden_size: 6,
            seed: 99,
            allocation: BlockPolicy::Equal,
        };
        let a = ciw_input_weights(&ds, &config).unwrap();
        let b = ciw_input_weights(&ds, &config).unwrap();
        assert_eq!(a.weights.data(), b.weights.data());
    }

    #[test]
    fn blocks_depend_only_on_their_own_class() {
        // permuting class-1 samples must not change class-0's block
        let ds = synthetic_dataset(&[6, 6], 4);
        let mut permuted_rows: Vec<Vec<f64>> = (0..ds.len())
            .map(|i| ds.features.row(i).to_vec())
            .collect();
        permuted_rows.swap(6, 11); // both class 1
        let permuted = Dataset::new(
            Matrix::from_rows(&permuted_rows).unwrap(),
            ds.labels.clone(),
            2,
            "permuted",
        )
        .unwrap();

        let config = CiwConfig {
            hidden_size: 8,
            seed: 7,
            allocation: BlockPolicy::Equal,
        };
        let a = ciw_input_weights(&ds, &config).unwrap();
        let b = ciw_input_weights(&permuted, &config).unwrap();
        let block0 = a.allocation.sizes()[0];
        for i in 0..block0 {
            assert_eq!(a.weights.row(i), b.weights.row(i), "row {i} changed");
        }
    }

    #[test]
    fn weight_rows_stay_in_their_class_span() {
        // rank([X_c; w]) == rank(X_c) for every row w of class c's block
        let ds = synthetic_dataset(&[5, 7], 6);
        let config = CiwConfig {
            hidden_size: 4,
            seed: 3,
            allocation: BlockPolicy::Equal,
        };
        let w = ciw_input_weights(&ds, &config).unwrap();
        let offsets = w.allocation.offsets();
        for class in 0..2 {
            let class_data = ds.features.select_rows(&ds.class_indices(class));
            let base_rank = numeric_rank(&class_data);
            for r in 0..w.allocation.sizes()[class] {
                let row = w.weights.row(offsets[class] + r).to_vec();
                let mut rows: Vec<Vec<f64>> = (0..class_data.rows())
                    .map(|i| class_data.row(i).to_vec())
                    .collect();
                rows.push(row);
                let appended = Matrix::from_rows(&rows).unwrap();
                assert_eq!(numeric_rank(&appended), base_rank);
            }
        }
    }

    fn numeric_rank(a: &Matrix) -> usize {
        let svd = a.as_faer().thin_svd().unwrap();
        let s = svd.S();
        let smax = s[0];
        let cutoff = a.rows().max(a.cols()) as f64 * f64::EPSILON * smax;
        (0..a.rows().min(a.cols()))
            .filter(|&i| s[i] > cutoff.max(1e-8 * smax))
            .count()
    }

    #[test]
    fn synthesis_rejects_hidden_smaller_than_classes() {
        let ds = synthetic_dataset(&[4, 4, 4], 3);
        let config = CiwConfig {
            hidden_size: 2,
            seed: 0,
            allocation: BlockPolicy::Proportional,
        };
        assert!(matches!(
            ciw_input_weights(&ds, &config),
            Err(Error::HiddenTooSmall { .. })
        ));
    }
}
