//! Shared fixtures for the kernel benchmarks.

use elmkit::prelude::*;

/// Deterministic dense matrix without touching the crate's RNG stack.
pub fn dense(rows: usize, cols: usize, salt: u64) -> Matrix {
    let mut state = salt.wrapping_mul(0x9E3779B97F4A7C15) | 1;
    Matrix::from_fn(rows, cols, |_, _| {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
    })
}

/// Synthetic multi-class dataset with mildly separated clusters, bias
/// column included.
pub fn clustered_dataset(per_class: usize, classes: usize, dims: usize) -> Dataset {
    let features = dense(per_class * classes, dims, 42);
    let mut shifted = features.clone();
    let mut labels = Vec::with_capacity(per_class * classes);
    for c in 0..classes {
        for i in 0..per_class {
            let row = c * per_class + i;
            let v = shifted.get(row, 0) + c as f64;
            shifted.set(row, 0, v);
            labels.push(c);
        }
    }
    Dataset::new(append_bias(&shifted), labels, classes, "bench").unwrap()
}
