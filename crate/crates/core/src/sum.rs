//! Deterministic summation.

use crate::Scalar;

const LEAF: usize = 64;

/// Pairwise (tree) summation. The association order depends only on the
/// slice length, so results are reproducible regardless of how the terms
/// were produced.
pub(crate) fn pairwise<T: Scalar>(values: &[T]) -> T {
    if values.len() <= LEAF {
        return values.iter().fold(T::zero(), |acc, &v| acc + v);
    }
    let mid = values.len() / 2;
    pairwise(&values[..mid]) + pairwise(&values[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_naive_sum_on_small_integers() {
        let v: Vec<f64> = (1..=1000).map(f64::from).collect();
        assert_eq!(pairwise(&v), 500_500.0);
        assert_eq!(pairwise::<f64>(&[]), 0.0);
    }
}
