//! Partition agreement scores.

use alloc::collections::BTreeMap;

fn pairs(n: u64) -> f64 {
    (n * n.saturating_sub(1)) as f64 / 2.0
}

/// Adjusted Rand index between two labelings of the same items.
///
/// Every distinct label, including the noise label, is its own group.
/// Returns 1.0 when both partitions are trivial in the same way.
pub fn adjusted_rand_index<A: Ord + Copy, B: Ord + Copy>(truth: &[A], predicted: &[B]) -> f64 {
    assert_eq!(truth.len(), predicted.len(), "labelings must have equal length");
    let n = truth.len() as u64;
    let mut table: BTreeMap<(A, B), u64> = BTreeMap::new();
    let mut rows: BTreeMap<A, u64> = BTreeMap::new();
    let mut cols: BTreeMap<B, u64> = BTreeMap::new();
    for (&a, &b) in truth.iter().zip(predicted) {
        *table.entry((a, b)).or_insert(0) += 1;
        *rows.entry(a).or_insert(0) += 1;
        *cols.entry(b).or_insert(0) += 1;
    }
    let index: f64 = table.values().map(|&c| pairs(c)).sum();
    let sum_rows: f64 = rows.values().map(|&c| pairs(c)).sum();
    let sum_cols: f64 = cols.values().map(|&c| pairs(c)).sum();
    let total = pairs(n);
    if total == 0.0 {
        return 1.0;
    }
    let expected = sum_rows * sum_cols / total;
    let max_index = 0.5 * (sum_rows + sum_cols);
    if max_index == expected {
        return 1.0;
    }
    (index - expected) / (max_index - expected)
}
