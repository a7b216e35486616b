//! Small shared numeric helpers.

pub mod jacobi;
pub mod rng;

/// Pairwise (cascade) summation: deterministic reduction order with
/// O(log n) error growth, used for all energy-style sums.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

/// Central-difference step: h = max(1e-6, 1e-8 * |scale|).
pub fn diff_step(scale: f64) -> f64 {
    (1e-8 * scale.abs()).max(1e-6)
}

/// True iff every entry is finite.
pub fn all_finite(values: &[f64]) -> bool {
    values.iter().all(|v| v.is_finite())
}
